//! Bracketed scalar minimization and root bisection.
//!
//! The UMPBT objective is unimodal on the admissible side of the null in all
//! the catalog families, but it is singular at the null and may approach a
//! finite limit at an open support boundary, so the bracket search has to
//! report that case instead of clamping.

/// Golden section ratio: (3 - sqrt(5)) / 2
const GSR: f64 = 0.381_966_011_250_105_1;

/// Outcome of an expanding bracket search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bracket {
    /// `lo < mid < hi` with `f(mid) <= f(lo)` and `f(mid) < f(hi)`.
    Found { lo: f64, mid: f64, hi: f64 },
    /// The objective kept decreasing up to the boundary (or toward zero when
    /// contracting); carries the last abscissa probed and its value.
    Monotone { last: f64, value: f64 },
}

/// Searches `f` on `(0, limit)` for a bracket around a local minimum.
///
/// Starts at `start`, then grows the step geometrically. When `limit` is
/// finite the probe halves the remaining gap to the limit instead of
/// overshooting it; the search stops once the gap is below `gap_tol`.
/// When the objective already rises between `start` and the first probe,
/// the search contracts toward zero instead.
pub fn expand_bracket<F>(f: F, start: f64, limit: f64, gap_tol: f64) -> Bracket
where
    F: Fn(f64) -> f64,
{
    const GROW: f64 = 2.0;
    const MAX_STEPS: usize = 4000;
    const UNBOUNDED_CAP: f64 = 1e15;

    let eval = |x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut x1 = start.min(limit * 0.5);
    let mut f1 = eval(x1);

    // Minimum lies below `start`: contract toward zero instead.
    let probe = if x1 * GROW >= limit {
        x1 + 0.5 * (limit - x1)
    } else {
        x1 * GROW
    };
    let f_probe = eval(probe);
    if f_probe > f1 {
        let mut hi = probe;
        for _ in 0..MAX_STEPS {
            let x0 = x1 / GROW;
            if x0 <= 0.0 {
                break;
            }
            let f0 = eval(x0);
            if f0 > f1 {
                return Bracket::Found {
                    lo: x0,
                    mid: x1,
                    hi,
                };
            }
            hi = x1;
            x1 = x0;
            f1 = f0;
        }
        return Bracket::Monotone { last: x1, value: f1 };
    }

    let mut x0 = x1;
    x1 = probe;
    f1 = f_probe;
    for _ in 0..MAX_STEPS {
        let mut x2 = x1 * GROW;
        if x2 >= limit {
            x2 = x1 + 0.5 * (limit - x1);
        }
        if (limit - x1) <= gap_tol || x2 > UNBOUNDED_CAP || x2 <= x1 {
            return Bracket::Monotone { last: x1, value: f1 };
        }
        let f2 = eval(x2);
        if f2 > f1 {
            return Bracket::Found {
                lo: x0,
                mid: x1,
                hi: x2,
            };
        }
        x0 = x1;
        x1 = x2;
        f1 = f2;
    }
    Bracket::Monotone { last: x1, value: f1 }
}

/// Golden-section refinement of a bracketed minimum on `[a, b]`.
///
/// Returns `(x, f(x))` once the bracket is narrower than `tol`.
pub fn golden_section<F>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = if a < b { (a, b) } else { (b, a) };
    let mut c = b - (1.0 - GSR) * (b - a);
    let mut d = a + (1.0 - GSR) * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (1.0 - GSR) * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (1.0 - GSR) * (b - a);
            fd = f(d);
        }
        if c >= d {
            break;
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Bisection for a sign change of `h` on `[a, b]`, run to floating-point
/// resolution. Returns `None` when the endpoints do not straddle a root.
pub fn bisect_root<F>(h: F, a: f64, b: f64) -> Option<f64>
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = if a < b { (a, b) } else { (b, a) };
    let mut h_lo = h(lo);
    let h_hi = h(hi);
    if h_lo == 0.0 {
        return Some(lo);
    }
    if h_hi == 0.0 {
        return Some(hi);
    }
    if h_lo.signum() == h_hi.signum() || h_lo.is_nan() || h_hi.is_nan() {
        return None;
    }
    for _ in 0..2000 {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let h_mid = h(mid);
        if h_mid == 0.0 {
            return Some(mid);
        }
        if h_mid.signum() == h_lo.signum() {
            lo = mid;
            h_lo = h_mid;
        } else {
            hi = mid;
        }
    }
    Some(lo + 0.5 * (hi - lo))
}

/// Walks outward from `start` (same growth rule as [`expand_bracket`]) until
/// `s` changes sign relative to its value at `start`. Returns the bracketing
/// pair, or `None` when the sign persists up to the limit.
pub fn expand_sign_change<F>(s: F, start: f64, limit: f64, gap_tol: f64) -> Option<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let mut x1 = start.min(limit * 0.5);
    let s1 = s(x1).signum();
    for _ in 0..4000 {
        let mut x2 = x1 * 2.0;
        if x2 >= limit {
            x2 = x1 + 0.5 * (limit - x1);
        }
        if (limit - x1) <= gap_tol || x2 > 1e15 || x2 <= x1 {
            return None;
        }
        let s2 = s(x2);
        if s2.signum() != s1 || s2 == 0.0 {
            return Some((x1, x2));
        }
        x1 = x2;
    }
    None
}
