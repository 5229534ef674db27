use crate::error::{Error, Result};

/// Default absolute tolerance on the bracket width.
pub const ROOT_TOL: f64 = 1e-12;

const MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootResult {
    pub root: f64,
    pub residual: f64,
    pub iterations: usize,
}

fn eval<F: FnMut(f64) -> f64>(f: &mut F, x: f64) -> Result<f64> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::NonFinite { x })
    }
}

/// Brent's method on `[lo, hi]`.
///
/// Stops when `f` vanishes exactly or the bracket is narrower than
/// `tol·max(1,|x|)`. Every iterate stays inside the initial bracket.
pub fn find_root<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<RootResult>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let (x_min, x_max) = (a, b);
    let mut fa = eval(&mut f, a)?;
    let mut fb = eval(&mut f, b)?;
    if fa == 0.0 {
        return Ok(RootResult {
            root: a,
            residual: 0.0,
            iterations: 0,
        });
    }
    if fb == 0.0 {
        return Ok(RootResult {
            root: b,
            residual: 0.0,
            iterations: 0,
        });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket {
            lo: a,
            hi: b,
            f_lo: fa,
            f_hi: fb,
        });
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for iter in 1..=MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }

        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol * b.abs().max(1.0);
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(RootResult {
                root: b.clamp(x_min, x_max),
                residual: fb,
                iterations: iter,
            });
        }

        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // inverse quadratic interpolation, or secant when only two points
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }

        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        b = b.clamp(x_min, x_max);
        fb = eval(&mut f, b)?;
    }

    Ok(RootResult {
        root: b,
        residual: fb,
        iterations: MAX_ITER,
    })
}

/// Samples `n` evenly spaced points and returns the first sub-interval on
/// which `f` changes sign (or hits zero).
pub fn bracket_scan<F>(mut f: F, lo: f64, hi: f64, n: usize) -> Result<Option<(f64, f64)>>
where
    F: FnMut(f64) -> f64,
{
    let n = n.max(2);
    let xs = super::linspace(lo, hi, n);
    let mut prev_x = xs[0];
    let mut prev_f = eval(&mut f, prev_x)?;
    if prev_f == 0.0 {
        return Ok(Some((prev_x, prev_x)));
    }
    for &x in &xs[1..] {
        let fx = eval(&mut f, x)?;
        if fx == 0.0 || fx.signum() != prev_f.signum() {
            return Ok(Some((prev_x, x)));
        }
        prev_x = x;
        prev_f = fx;
    }
    Ok(None)
}
