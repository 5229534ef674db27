//! Scalar root finding, bounded maximization, adaptive quadrature and a
//! small dense simplex solver.

mod lp;
mod optimize;
mod quad;
mod root;

pub use lp::{solve_lp, LpProblem, LpSolution, LP_TOL};
pub use optimize::{golden_section, maximize_scalar, MAXIMIZE_TOL, PRESCAN_POINTS};
pub use quad::{integrate, integrate_with_limit, QUAD_REL_TOL};
pub use root::{bracket_scan, find_root, RootResult, ROOT_TOL};

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            let mut v: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
            v[n - 1] = hi;
            v
        }
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive; both must be positive.
pub fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect();
    if let Some(first) = v.first_mut() {
        *first = lo;
    }
    if let Some(last) = v.last_mut() {
        *last = hi;
    }
    v
}
