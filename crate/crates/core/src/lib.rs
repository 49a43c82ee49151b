//! Uniformly most powerful Bayesian tests (UMPBTs).
//!
//! For a one-parameter exponential family and an evidence threshold γ the
//! UMPBT(γ) alternative maximizes, for every data-generating parameter, the
//! probability that the Bayes factor against the null exceeds γ. The crate
//! builds those alternatives, evaluates the Bayes factors they induce,
//! relates them to classical significance levels, extends them to a normal
//! regression coefficient, and checks the defining properties numerically.
//!
//! ```
//! use umpbt::{make_family, solve_umpbt, Direction, FamilyParams, TestSpec};
//!
//! let family = make_family(&FamilyParams::binomial()).unwrap();
//! let spec = TestSpec::new(0.3, Direction::Greater, 10, 3.0).unwrap();
//! let sol = solve_umpbt(&family, &spec).unwrap();
//! assert!((sol.theta_star - 0.525).abs() < 5e-4);
//! assert_eq!(sol.region_boundary, Some(6));
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod error;
pub mod evidence;
pub mod expfam;
pub mod families;
pub mod linmodel;
pub mod optimize;
pub mod verify;

pub use calibration::CalibrationPoint;
pub use error::{Result, UmpbtError};
pub use evidence::EvidenceReport;
pub use expfam::{
    g_gamma, rejection_region, solve_umpbt, Direction, FamilyDescriptor, RegionSide, RejectionRegion, SuffStatKind, TestSpec,
    UmpbtSolution,
};
pub use families::{make_family, FamilyKind, FamilyParams};
pub use linmodel::{RegressionProblem, VarianceModel};
pub use verify::{CurveKind, CurveTable, McConfig, Method};
