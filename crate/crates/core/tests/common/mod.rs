use umpbt::{g_gamma, Direction, FamilyDescriptor, FamilyKind, FamilyParams, TestSpec};

/// Design of (θ₀, direction) pairs per family. The negative binomial fixes
/// n = 1 and varies r in its place.
pub fn design(kind: FamilyKind) -> Vec<(FamilyParams, f64, Direction)> {
    let one = |p: FamilyParams, thetas: &[f64], dir: Direction| thetas.iter().map(|&t| (p, t, dir)).collect::<Vec<_>>();
    match kind {
        FamilyKind::Binomial => one(FamilyParams::binomial(), &[0.1, 0.3, 0.5], Direction::Greater),
        FamilyKind::ExponentialMean => one(FamilyParams::exponential(), &[0.5, 1.0, 4.0], Direction::Greater),
        FamilyKind::NegativeBinomial => [1, 5, 20]
            .iter()
            .flat_map(|&r| one(FamilyParams::negative_binomial(r), &[0.2, 0.35, 0.5], Direction::Greater))
            .collect(),
        FamilyKind::NormalVariance => one(FamilyParams::normal_variance(0.0), &[0.5, 1.0, 4.0], Direction::Greater),
        FamilyKind::NormalMean => one(FamilyParams::normal_mean(1.5), &[-1.0, 0.0, 2.0], Direction::Greater),
        FamilyKind::Poisson => one(FamilyParams::poisson(), &[0.5, 1.0, 5.0], Direction::Greater),
    }
}

pub fn sample_sizes(kind: FamilyKind) -> &'static [u64] {
    if kind == FamilyKind::NegativeBinomial {
        &[1]
    } else {
        &[1, 10, 100]
    }
}

/// Argmin of u·v·g over a log-spaced coarse grid of distances from θ₀, refined
/// on a uniform grid of step 10⁻⁶ × (search width) around the coarse winner.
pub fn grid_argmin(fam: &FamilyDescriptor, spec: &TestSpec) -> f64 {
    let v = spec.direction.sign();
    let width = match spec.direction {
        Direction::Greater if fam.support_hi.is_finite() => fam.support_hi - spec.theta0,
        Direction::Less if fam.support_lo.is_finite() => spec.theta0 - fam.support_lo,
        _ => 20.0 * spec.theta0.abs().max(1.0),
    };
    // the UMPBT minimizes u·v·g, u the sign of η's slope
    let uv = fam.u() * v;
    let g = |d: f64| g_gamma(fam, spec.theta0 + v * d, spec).map(|x| uv * x).unwrap_or(f64::INFINITY);
    let coarse = 20_000;
    let (lo, hi) = ((1e-7 * width).ln(), (width * (1.0 - 1e-9)).ln());
    let ds: Vec<f64> = (0..=coarse).map(|i| (lo + (hi - lo) * i as f64 / coarse as f64).exp()).collect();
    let best = (0..ds.len()).min_by(|&a, &b| g(ds[a]).total_cmp(&g(ds[b]))).unwrap();
    let a = ds[best.saturating_sub(2)];
    let b = ds[(best + 2).min(ds.len() - 1)];
    let step = 1e-6 * width.min(1.0);
    let count = ((b - a) / step).ceil() as usize;
    let d = (0..=count)
        .map(|i| a + i as f64 * step)
        .min_by(|&x, &y| g(x).total_cmp(&g(y)))
        .unwrap();
    spec.theta0 + v * d
}
