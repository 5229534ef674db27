use crate::error::{Error, Result};

/// Default tolerance on the argument, relative to the search interval.
pub const MAXIMIZE_TOL: f64 = 1e-10;

/// Number of evenly spaced samples taken before the local search.
pub const PRESCAN_POINTS: usize = 33;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn eval<F: FnMut(f64) -> f64>(f: &mut F, x: f64) -> Result<f64> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::NonFinite { x })
    }
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`, stopping when
/// the interval is narrower than `abs_tol`. Returns the best point seen.
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, abs_tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = eval(&mut f, x1)?;
    let mut f2 = eval(&mut f, x2)?;
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };

    let tol = abs_tol.max(4.0 * f64::EPSILON * a.abs().max(b.abs()));
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = eval(&mut f, x1)?;
            if f1 > best.1 {
                best = (x1, f1);
            }
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = eval(&mut f, x2)?;
            if f2 > best.1 {
                best = (x2, f2);
            }
        }
    }
    Ok(best)
}

/// Maximizes `f` on `[lo, hi]`: a 33-point scan picks the best cell, then
/// golden section refines it to `tol·(hi−lo)`. Endpoints are candidates, so
/// boundary maxima are returned exactly.
pub fn maximize_scalar<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::invalid("interval", format!("[{lo}, {hi}] is not finite")));
    }
    let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    if hi == lo {
        let y = eval(&mut f, lo)?;
        return Ok((lo, y));
    }
    let xs = super::linspace(lo, hi, PRESCAN_POINTS);
    let mut ys = Vec::with_capacity(xs.len());
    for &x in &xs {
        ys.push(eval(&mut f, x)?);
    }
    let mut k = 0;
    for i in 1..ys.len() {
        if ys[i] > ys[k] {
            k = i;
        }
    }
    let a = xs[k.saturating_sub(1)];
    let b = xs[(k + 1).min(xs.len() - 1)];
    let (x, y) = golden_section(&mut f, a, b, tol * (hi - lo))?;
    if y >= ys[k] {
        Ok((x, y))
    } else {
        Ok((xs[k], ys[k]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_peak() {
        let (x, y) = maximize_scalar(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, MAXIMIZE_TOL).unwrap();
        assert!((x - 0.3).abs() < 1e-8, "{x}");
        assert!(y.abs() < 1e-15);
    }

    #[test]
    fn sine_peak() {
        let (x, y) = maximize_scalar(f64::sin, 0.0, std::f64::consts::PI, MAXIMIZE_TOL).unwrap();
        assert!((x - std::f64::consts::FRAC_PI_2).abs() < 1e-7);
        assert!((y - 1.0).abs() < 1e-14);
    }

    #[test]
    fn boundary_maximum() {
        let (x, y) = maximize_scalar(|x| x, 0.0, 2.0, MAXIMIZE_TOL).unwrap();
        assert_eq!(x, 2.0);
        assert_eq!(y, 2.0);
        let (x, _) = maximize_scalar(|x| -x, 0.0, 2.0, MAXIMIZE_TOL).unwrap();
        assert!(x < 1e-9);
    }

    #[test]
    fn prescan_escapes_local_bump() {
        // small bump near 0.1, global peak near 0.8
        let f = |x: f64| 0.2 * (-((x - 0.1) / 0.05).powi(2)).exp() + (-((x - 0.8) / 0.1).powi(2)).exp();
        let (x, _) = maximize_scalar(f, 0.0, 1.0, MAXIMIZE_TOL).unwrap();
        assert!((x - 0.8).abs() < 1e-6);
    }

    #[test]
    fn kinked_min_of_monotone_pair() {
        let f = |x: f64| (1.0 - x).min(2.0 * x);
        let (x, y) = maximize_scalar(f, 0.0, 1.0, MAXIMIZE_TOL).unwrap();
        assert!((x - 1.0 / 3.0).abs() < 1e-9);
        assert!((y - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn non_finite_reported() {
        assert!(matches!(
            maximize_scalar(|x| if x > 0.5 { f64::NAN } else { x }, 0.0, 1.0, MAXIMIZE_TOL),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn degenerate_interval() {
        let (x, y) = maximize_scalar(|x| x * x, 1.5, 1.5, MAXIMIZE_TOL).unwrap();
        assert_eq!((x, y), (1.5, 2.25));
    }
}
