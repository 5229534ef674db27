//! The feasible region of (water level ω, mass below the water level F)
//! when the water level stays under the relay peak, together with the
//! first- and second-hop rate bounds evaluated on it.
//!
//! The region is the triangle-like set
//! `pmax·𝒫̄/(pmax−p̄) ≤ ω ≤ 𝒫̄+p̄`, `𝒫̄/ω ≤ F ≤ (pmax−p̄−𝒫̄)/(pmax−ω)`.
//! Its lower edge runs from V1 to V3, its upper edge from V1 to V2.

use crate::error::{Error, Result};
use crate::numerics::{bracket_scan, find_root};

/// Samples taken along an edge before root refinement.
pub const EDGE_SCAN_POINTS: usize = 256;

const MEMBERSHIP_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaPoint {
    pub omega: f64,
    pub f: f64,
}

impl OmegaPoint {
    pub fn new(omega: f64, f: f64) -> Self {
        Self { omega, f }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaRegion {
    pub v1: OmegaPoint,
    pub v2: OmegaPoint,
    pub v3: OmegaPoint,
    pub pbar_cal: f64,
    pub p_bar: f64,
    pub p_max: f64,
}

/// Builds the region; fails when `𝒫̄ > pmax − p̄`, where the water level
/// necessarily reaches the relay peak and the region is empty.
pub fn region(pbar_cal: f64, p_bar: f64, p_max: f64) -> Result<OmegaRegion> {
    if !(p_bar > 0.0 && p_bar < p_max && p_max.is_finite()) {
        return Err(Error::invalid(
            "p_bar",
            format!("region needs 0 < p_bar < p_max, got p_bar = {p_bar}, p_max = {p_max}"),
        ));
    }
    if !(pbar_cal >= 0.0) {
        return Err(Error::invalid(
            "pbar_cal",
            format!("must be non-negative, got {pbar_cal}"),
        ));
    }
    let limit = p_max - p_bar;
    if pbar_cal > limit {
        return Err(Error::EmptyRegion { pbar_cal, limit });
    }
    let top = pbar_cal + p_bar;
    Ok(OmegaRegion {
        v1: OmegaPoint::new(p_max * pbar_cal / limit, 1.0 - p_bar / p_max),
        v2: OmegaPoint::new(top, 1.0),
        v3: OmegaPoint::new(top, pbar_cal / top),
        pbar_cal,
        p_bar,
        p_max,
    })
}

impl OmegaRegion {
    pub fn omega_min(&self) -> f64 {
        self.v1.omega
    }

    pub fn omega_max(&self) -> f64 {
        self.v2.omega
    }

    /// Lower edge `F = 𝒫̄/ω`.
    pub fn f_lower(&self, omega: f64) -> f64 {
        if omega > 0.0 {
            (self.pbar_cal / omega).min(1.0)
        } else {
            0.0
        }
    }

    /// Upper edge `F = (pmax − p̄ − 𝒫̄)/(pmax − ω)`.
    pub fn f_upper(&self, omega: f64) -> f64 {
        let gap = self.p_max - omega;
        if gap <= 0.0 {
            1.0
        } else {
            ((self.p_max - self.p_bar - self.pbar_cal) / gap).min(1.0)
        }
    }

    pub fn contains(&self, pt: OmegaPoint) -> bool {
        let slack_w = MEMBERSHIP_SLACK * self.omega_max().max(1e-300);
        if pt.omega < self.omega_min() - slack_w || pt.omega > self.omega_max() + slack_w {
            return false;
        }
        let lo = self.f_lower(pt.omega);
        let hi = self.f_upper(pt.omega);
        pt.f >= lo - MEMBERSHIP_SLACK && pt.f <= hi + MEMBERSHIP_SLACK
    }
}

/// Region plus the two link constants the bounds depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaCtx {
    pub region: OmegaRegion,
    pub beta0: f64,
    pub v: f64,
}

impl OmegaCtx {
    pub fn new(pbar_cal: f64, p_bar: f64, p_max: f64, beta0: f64, v: f64) -> Result<Self> {
        if !(beta0 > 0.0) || !(v >= 0.0) {
            return Err(Error::invalid(
                "beta0/v",
                format!("need beta0 > 0 and v >= 0, got {beta0}, {v}"),
            ));
        }
        Ok(Self {
            region: region(pbar_cal, p_bar, p_max)?,
            beta0,
            v,
        })
    }

    fn pbar_cal(&self) -> f64 {
        self.region.pbar_cal
    }

    fn top(&self) -> f64 {
        self.region.pbar_cal + self.region.p_bar
    }
}

fn log1p_checked(what: &'static str, x: f64) -> Result<f64> {
    if x > -1.0 {
        Ok(x.ln_1p())
    } else {
        Err(Error::Domain { what, value: 1.0 + x })
    }
}

/// `(1−F)·log(1 + v(𝒫̄+p̄−Fω)/(1−F))`, taken as 0 at `F = 1`.
fn high_atom_term(pt: OmegaPoint, ctx: &OmegaCtx) -> Result<f64> {
    let rest = 1.0 - pt.f;
    if rest <= 0.0 {
        return Ok(0.0);
    }
    let energy = ctx.top() - pt.f * pt.omega;
    Ok(rest * log1p_checked("second-hop high atom", ctx.v * energy / rest)?)
}

/// First-hop rate when the mass below ω sits at the single level that
/// spends the whole source budget.
pub fn r1_min(pt: OmegaPoint, ctx: &OmegaCtx) -> Result<f64> {
    let pc = ctx.pbar_cal();
    if pc == 0.0 {
        return Ok(0.0);
    }
    let denom = pt.f * (1.0 + pt.omega * ctx.beta0) - pc * ctx.beta0;
    if !(denom > 0.0) {
        return Err(Error::Domain {
            what: "r1_min",
            value: denom,
        });
    }
    Ok(pt.f * log1p_checked("r1_min", pc * ctx.beta0 / denom)?)
}

/// First-hop rate when the mass below ω is split between 0 and ω.
pub fn r1_max(pt: OmegaPoint, ctx: &OmegaCtx) -> Result<f64> {
    let pc = ctx.pbar_cal();
    if pc == 0.0 {
        return Ok(0.0);
    }
    if !(pt.omega > 0.0) {
        return Err(Error::Domain {
            what: "r1_max",
            value: pt.omega,
        });
    }
    Ok(pc / pt.omega * log1p_checked("r1_max", ctx.beta0 * pt.omega)?)
}

pub fn r2t_max(pt: OmegaPoint, ctx: &OmegaCtx) -> Result<f64> {
    let low = if pt.f > 0.0 {
        let level = pt.omega - ctx.pbar_cal() / pt.f;
        pt.f * log1p_checked("r2t_max", ctx.v * level)?
    } else if ctx.pbar_cal() == 0.0 {
        0.0
    } else {
        return Err(Error::Domain {
            what: "r2t_max",
            value: pt.f,
        });
    };
    Ok(low + high_atom_term(pt, ctx)?)
}

pub fn r2t_min(pt: OmegaPoint, ctx: &OmegaCtx) -> Result<f64> {
    let low = if ctx.pbar_cal() == 0.0 {
        pt.f * log1p_checked("r2t_min", ctx.v * pt.omega)?
    } else {
        if !(pt.omega > 0.0) {
            return Err(Error::Domain {
                what: "r2t_min",
                value: pt.omega,
            });
        }
        (pt.f - ctx.pbar_cal() / pt.omega) * log1p_checked("r2t_min", ctx.v * pt.omega)?
    };
    Ok(low + high_atom_term(pt, ctx)?)
}

pub fn q1(pt: OmegaPoint, ctx: &OmegaCtx) -> Result<f64> {
    Ok(r1_min(pt, ctx)? - r2t_max(pt, ctx)?)
}

pub fn q2(pt: OmegaPoint, ctx: &OmegaCtx) -> Result<f64> {
    Ok(r2t_min(pt, ctx)? - r1_max(pt, ctx)?)
}

fn edge_root<G>(ctx: &OmegaCtx, edge: G, q: fn(OmegaPoint, &OmegaCtx) -> Result<f64>) -> Result<Option<OmegaPoint>>
where
    G: Fn(f64) -> f64,
{
    let lo = ctx.region.omega_min();
    let hi = ctx.region.omega_max();
    if ctx.pbar_cal() == 0.0 || !(hi > lo) {
        return Ok(None);
    }
    let eval = |w: f64| q(OmegaPoint::new(w, edge(w)), ctx).unwrap_or(f64::NAN);
    let Some((a, b)) = bracket_scan(eval, lo, hi, EDGE_SCAN_POINTS)? else {
        return Ok(None);
    };
    let w = if a == b { a } else { find_root(eval, a, b, 0.0)?.root };
    Ok(Some(OmegaPoint::new(w, edge(w))))
}

/// Where `Q1 = 0` crosses the lower edge V1–V3, if it does.
pub fn point_a(ctx: &OmegaCtx) -> Result<Option<OmegaPoint>> {
    let r = ctx.region;
    edge_root(ctx, move |w| r.f_lower(w), q1)
}

/// Where `Q1 = 0` crosses the upper edge V1–V2, if it does.
pub fn point_b(ctx: &OmegaCtx) -> Result<Option<OmegaPoint>> {
    let r = ctx.region;
    edge_root(ctx, move |w| r.f_upper(w), q1)
}

/// Where `Q2 = 0` crosses the upper edge V1–V2, if it does.
pub fn point_c(ctx: &OmegaCtx) -> Result<Option<OmegaPoint>> {
    let r = ctx.region;
    edge_root(ctx, move |w| r.f_upper(w), q2)
}

/// Solves `Q1(ω, F) = 0` for F on the vertical slice of the region at ω.
pub fn q1_slice_root(ctx: &OmegaCtx, omega: f64) -> Result<Option<f64>> {
    let lo = ctx.region.f_lower(omega);
    let hi = ctx.region.f_upper(omega);
    if !(hi >= lo) {
        return Ok(None);
    }
    let g = |f: f64| q1(OmegaPoint::new(omega, f), ctx).unwrap_or(f64::NAN);
    let (g_lo, g_hi) = (g(lo), g(hi));
    if g_lo == 0.0 {
        return Ok(Some(lo));
    }
    if g_hi == 0.0 {
        return Ok(Some(hi));
    }
    if !(g_lo.signum() != g_hi.signum()) {
        return Ok(None);
    }
    Ok(Some(find_root(g, lo, hi, 0.0)?.root))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn ctx(pc: f64, pb: f64, pm: f64, beta0: f64, v: f64) -> OmegaCtx {
        OmegaCtx::new(pc, pb, pm, beta0, v).unwrap()
    }

    #[test]
    fn vertices() {
        let r = region(0.05, 0.1, 0.2).unwrap();
        assert!((r.v1.omega - 0.1).abs() < 1e-15);
        assert!((r.v1.f - 0.5).abs() < 1e-15);
        assert_eq!(r.v2, OmegaPoint::new(0.15000000000000002, 1.0));
        assert!((r.v3.f - 1.0 / 3.0).abs() < 1e-15);
        assert!(r.contains(r.v1) && r.contains(r.v2) && r.contains(r.v3));
        assert!(r.contains(OmegaPoint::new(0.12, 0.6)));
        assert!(!r.contains(OmegaPoint::new(0.12, 0.3)));
        assert!(!r.contains(OmegaPoint::new(0.16, 0.9)));
    }

    #[test]
    fn collapsed_and_zero_budget() {
        let r = region(0.1, 0.1, 0.2).unwrap();
        assert!((r.v1.omega - 0.2).abs() < 1e-15);
        assert!((r.v2.omega - 0.2).abs() < 1e-15);
        let r = region(0.0, 0.1, 0.2).unwrap();
        assert_eq!(r.v1, OmegaPoint::new(0.0, 0.5));
        assert_eq!(r.v3, OmegaPoint::new(0.1, 0.0));
        assert!(matches!(region(0.15, 0.1, 0.2), Err(Error::EmptyRegion { .. })));
        assert!(region(0.05, 0.2, 0.2).is_err());
    }

    #[test]
    fn bounds_meet_at_v3() {
        let c = ctx(0.05, 0.1, 0.2, 39.81, 995.2);
        let v3 = c.region.v3;
        let lo = r1_min(v3, &c).unwrap();
        let hi = r1_max(v3, &c).unwrap();
        let expected = (0.05 / 0.15) * (1.0f64 + 39.81 * 0.15).ln();
        assert!((lo - hi).abs() < 1e-14);
        assert!((lo - expected).abs() < 1e-14);
    }

    #[test]
    fn zero_source_and_dead_second_hop() {
        let c = ctx(0.0, 0.1, 0.2, 39.81, 995.2);
        for pt in [OmegaPoint::new(0.05, 0.3), OmegaPoint::new(0.1, 0.9)] {
            assert_eq!(r1_min(pt, &c).unwrap(), 0.0);
            assert_eq!(r1_max(pt, &c).unwrap(), 0.0);
            assert!(q1(pt, &c).unwrap() <= 0.0);
        }
        let c = ctx(0.05, 0.1, 0.2, 39.81, 0.0);
        let pt = OmegaPoint::new(0.12, 0.6);
        assert_eq!(r2t_max(pt, &c).unwrap(), 0.0);
        assert_eq!(r2t_min(pt, &c).unwrap(), 0.0);
    }

    #[test]
    fn outside_points_give_domain_errors() {
        let c = ctx(0.05, 0.1, 0.2, 39.81, 995.2);
        assert!(matches!(
            r1_min(OmegaPoint::new(0.12, 0.01), &c),
            Err(Error::Domain { .. })
        ));
        assert!(r1_max(OmegaPoint::new(0.0, 0.5), &c).is_err());
    }

    fn scenario_a_model() -> crate::model::ChannelModel {
        crate::model::channel_from_pathloss(500.0, 2.4e9, 3.0, crate::model::db_to_watts(-151.0), -135.0).unwrap()
    }

    fn scenario_a_pbar_cal(pbar_dbw: f64) -> f64 {
        crate::model::db_to_watts(pbar_dbw) * scenario_a_model().src_scale()
    }

    fn scenario_a_ctx(pbar_dbw: f64) -> OmegaCtx {
        let m = scenario_a_model();
        ctx(
            scenario_a_pbar_cal(pbar_dbw),
            0.1,
            crate::model::db_to_watts(-7.0),
            m.beta0(),
            m.v(),
        )
    }

    #[test]
    fn point_a_residuals_in_scenario() {
        assert!(matches!(
            OmegaCtx::new(
                scenario_a_pbar_cal(-22.0),
                0.1,
                crate::model::db_to_watts(-7.0),
                1.0,
                1.0
            ),
            Err(Error::EmptyRegion { .. })
        ));
        // every budget below the region limit is also below the threshold where A enters the edge
        for dbw in [-40.0, -30.0, -26.0, -24.1] {
            assert!(point_a(&scenario_a_ctx(dbw)).unwrap().is_none());
        }
        // weaker self-interference and a looser relay peak put 𝒫̄ between 𝒫₃ and 𝒫₄
        let c = ctx(0.28, 0.1, 0.501, 12.59, 995.2);
        let a = point_a(&c).unwrap().expect("A on the lower edge");
        assert!(q1(a, &c).unwrap().abs() < 1e-9);
        assert!(q2(a, &c).unwrap().abs() < 1e-9);
        assert!((a.f - c.region.f_lower(a.omega)).abs() < 1e-15);
    }

    #[test]
    fn point_b_on_upper_edge() {
        let c = ctx(0.28, 0.1, 0.501, 12.59, 995.2);
        let b = point_b(&c).unwrap().expect("B on the upper edge");
        assert!(q1(b, &c).unwrap().abs() < 1e-10);
        assert!(c.region.contains(b));
        assert!((b.f - c.region.f_upper(b.omega)).abs() < 1e-15);
        if let Some(p) = point_c(&c).unwrap() {
            assert!(q2(p, &c).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn slice_scan_sign_flip() {
        let c = ctx(0.01, 0.1, 0.2, 39.81, 995.2);
        let f = 0.6;
        let mut flips = 0;
        let mut prev: Option<f64> = None;
        for i in 0..=1000 {
            let w = c.region.omega_min() + (c.region.omega_max() - c.region.omega_min()) * i as f64 / 1000.0;
            let pt = OmegaPoint::new(w, f);
            if !c.region.contains(pt) {
                continue;
            }
            let q = q1(pt, &c).unwrap();
            if let Some(p) = prev {
                if p.signum() != q.signum() {
                    flips += 1;
                }
            }
            prev = Some(q);
        }
        assert!(flips <= 1);
    }

    fn random_ctx(rng: &mut StdRng) -> OmegaCtx {
        let pm = 10f64.powf(rng.random_range(-2.0..1.0));
        let pb = pm * rng.random_range(0.05..0.95);
        let pc = (pm - pb) * rng.random_range(0.01..0.99);
        let beta0 = 10f64.powf(rng.random_range(-1.0..5.0));
        let v = 10f64.powf(rng.random_range(-1.0..5.0));
        ctx(pc, pb, pm, beta0, v)
    }

    fn random_interior(rng: &mut StdRng, c: &OmegaCtx) -> OmegaPoint {
        let r = &c.region;
        let w = r.omega_min() + (r.omega_max() - r.omega_min()) * rng.random_range(0.02..0.98);
        let lo = r.f_lower(w);
        let hi = r.f_upper(w);
        OmegaPoint::new(w, lo + (hi - lo) * rng.random_range(0.02..0.98))
    }

    #[test]
    fn bound_monotonicity_on_random_points() {
        let mut rng = StdRng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 1000 {
            let c = random_ctx(&mut rng);
            let p = random_interior(&mut rng, &c);
            let dw = 1e-7 * (c.region.omega_max() - c.region.omega_min());
            let df = 1e-7 * (c.region.f_upper(p.omega) - c.region.f_lower(p.omega));
            let pw = OmegaPoint::new(p.omega + dw, p.f);
            let pf = OmegaPoint::new(p.omega, p.f + df);
            if !(c.region.contains(pw) && c.region.contains(pf)) || dw <= 0.0 || df <= 0.0 {
                continue;
            }
            let tol = |x: f64| 1e-12 * x.abs().max(1e-300) + 1e-15;
            let a = r1_min(p, &c).unwrap();
            assert!(r1_min(pw, &c).unwrap() <= a + tol(a), "r1_min in omega");
            assert!(r1_min(pf, &c).unwrap() <= a + tol(a), "r1_min in F");
            let b = r1_max(p, &c).unwrap();
            assert!(r1_max(pw, &c).unwrap() <= b + tol(b));
            assert_eq!(r1_max(pf, &c).unwrap(), b);
            let s = r2t_min(p, &c).unwrap();
            assert!(r2t_min(pw, &c).unwrap() >= s - tol(s), "r2t_min in omega");
            assert!(r2t_min(pf, &c).unwrap() <= s + tol(s), "r2t_min in F");
            let t = r2t_max(p, &c).unwrap();
            assert!(r2t_max(pw, &c).unwrap() >= t - tol(t), "r2t_max in omega");
            assert!(a <= b + tol(b));
            assert!(s <= t + tol(t));
            checked += 1;
        }
    }

    #[test]
    fn q1_single_crossing_on_right_edge() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..20 {
            let c = random_ctx(&mut rng);
            let w = c.region.omega_max();
            let lo = c.region.f_lower(w);
            let hi = c.region.f_upper(w);
            let mut flips = 0;
            let mut prev: Option<f64> = None;
            for i in 0..=10_000 {
                let f = lo + (hi - lo) * i as f64 / 10_000.0;
                let q = q1(OmegaPoint::new(w, f), &c).unwrap();
                if let Some(p) = prev {
                    if p != 0.0 && q != 0.0 && p.signum() != q.signum() {
                        flips += 1;
                    }
                }
                prev = Some(q);
            }
            assert!(flips <= 1, "{flips} crossings");
        }
    }

    proptest! {
        #[test]
        fn sandwich_holds(seed in 0u64..100_000) {
            let mut rng = StdRng::seed_from_u64(seed);
            let c = random_ctx(&mut rng);
            let p = random_interior(&mut rng, &c);
            let (a, b) = (r1_min(p, &c).unwrap(), r1_max(p, &c).unwrap());
            let (s, t) = (r2t_min(p, &c).unwrap(), r2t_max(p, &c).unwrap());
            prop_assert!(a <= b * (1.0 + 1e-12) + 1e-15);
            prop_assert!(s <= t * (1.0 + 1e-12) + 1e-15);
        }
    }
}
