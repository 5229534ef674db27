//! Minimizing `E[log(1+γ1·p)]` over distributions on `[a, b]` with a fixed
//! mean and a fixed value of `E[log(1+γ1·p) + log(1+γ2·p)]`.
//!
//! The minimizer puts mass on two points. When `γ1 ≥ γ2` one atom sits at
//! the lower end of the support; otherwise one sits at the upper end. The
//! free atom location is found from the log-moment constraint.

use crate::error::{Error, Result};
use crate::numerics::{find_root, ROOT_TOL};

const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TwoAtomDistribution {
    /// `(location, weight)` pairs, locations strictly increasing.
    pub atoms: Vec<(f64, f64)>,
}

impl TwoAtomDistribution {
    fn from_pairs(pairs: [(f64, f64); 2]) -> Self {
        let mut atoms: Vec<(f64, f64)> = pairs.into_iter().filter(|&(_, w)| w > WEIGHT_TOL).collect();
        if atoms.len() == 2 && atoms[0].0 == atoms[1].0 {
            atoms = vec![(atoms[0].0, 1.0)];
        }
        if atoms.len() == 1 {
            atoms[0].1 = 1.0;
        }
        Self { atoms }
    }

    pub fn single(location: f64) -> Self {
        Self {
            atoms: vec![(location, 1.0)],
        }
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(p, w)| p * w).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w).sum()
    }

    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.atoms.iter().map(|&(p, w)| w * f(p)).sum()
    }
}

/// Which atom is pinned to the support boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinnedAtom {
    /// atoms at `(a, p2)`, `p2 ∈ [m, b]`
    Lower,
    /// atoms at `(p1, b)`, `p1 ∈ [a, m]`
    Upper,
}

impl PinnedAtom {
    pub fn for_curvatures(gamma1: f64, gamma2: f64) -> Self {
        if gamma1 >= gamma2 {
            PinnedAtom::Lower
        } else {
            PinnedAtom::Upper
        }
    }
}

fn log_curve(curvature: f64) -> impl Fn(f64) -> f64 {
    move |p: f64| (curvature * p).ln_1p()
}

/// Range of `E[log(1+k·p)]` over distributions on `[a, b]` with mean `m`:
/// the chord through the endpoints gives the lower value, the point mass at
/// `m` the upper one.
pub fn concave_moment_bounds(curvature: f64, a: f64, b: f64, m: f64) -> Result<(f64, f64)> {
    check_support(a, b, m)?;
    if !(curvature >= 0.0) {
        return Err(Error::invalid(
            "curvature",
            format!("must be non-negative, got {curvature}"),
        ));
    }
    let phi = log_curve(curvature);
    Ok(chord_bounds(&phi, a, b, m))
}

fn chord_bounds<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, m: f64) -> (f64, f64) {
    if b == a {
        return (f(a), f(a));
    }
    let w = (b - m) / (b - a);
    let lower = w * f(a) + (1.0 - w) * f(b);
    let upper = f(m);
    (lower.min(upper), upper)
}

fn check_support(a: f64, b: f64, m: f64) -> Result<()> {
    if !(a >= 0.0 && a <= b && b.is_finite()) {
        return Err(Error::invalid("support", format!("need 0 <= a <= b, got [{a}, {b}]")));
    }
    if !(m >= a && m <= b) {
        return Err(Error::invalid("m", format!("mean {m} outside [{a}, {b}]")));
    }
    Ok(())
}

/// Minimizer of `E[log(1+γ1·p)]` subject to `E[ψ] = c`, `E[p] = m`, where
/// `ψ(p) = log(1+γ1·p) + log(1+γ2·p)`.
pub fn solve_two_delta(gamma1: f64, gamma2: f64, a: f64, b: f64, m: f64, c: f64) -> Result<TwoAtomDistribution> {
    solve_with_pinned(gamma1, gamma2, a, b, m, c, PinnedAtom::for_curvatures(gamma1, gamma2))
}

/// Same as [`solve_two_delta`] with the boundary atom chosen by the caller.
pub fn solve_with_pinned(
    gamma1: f64,
    gamma2: f64,
    a: f64,
    b: f64,
    m: f64,
    c: f64,
    pinned: PinnedAtom,
) -> Result<TwoAtomDistribution> {
    check_support(a, b, m)?;
    if !(gamma1 > 0.0 && gamma2 > 0.0) {
        return Err(Error::invalid(
            "gamma",
            format!("curvatures must be positive, got {gamma1}, {gamma2}"),
        ));
    }
    if m == a || m == b {
        return Ok(TwoAtomDistribution::single(m));
    }
    let psi = move |p: f64| (gamma1 * p).ln_1p() + (gamma2 * p).ln_1p();
    let (lower, upper) = chord_bounds(&psi, a, b, m);
    let slack = 1e-12 * upper.abs().max(1.0);
    if c < lower - slack || c > upper + slack {
        return Err(Error::Infeasible(format!(
            "log-moment {c} outside the attainable range [{lower}, {upper}]"
        )));
    }
    let c = c.clamp(lower, upper);
    let dist = match pinned {
        PinnedAtom::Lower => {
            let g = |p2: f64| ((p2 - m) * psi(a) + (m - a) * psi(p2)) / (p2 - a) - c;
            let p2 = find_root(g, m, b, ROOT_TOL * 1e-3)?.root;
            TwoAtomDistribution::from_pairs([(a, (p2 - m) / (p2 - a)), (p2, (m - a) / (p2 - a))])
        }
        PinnedAtom::Upper => {
            let g = |p1: f64| ((b - m) * psi(p1) + (m - p1) * psi(b)) / (b - p1) - c;
            let p1 = find_root(g, a, m, ROOT_TOL * 1e-3)?.root;
            TwoAtomDistribution::from_pairs([(p1, (b - m) / (b - p1)), (b, (m - p1) / (b - p1))])
        }
    };
    Ok(dist)
}
