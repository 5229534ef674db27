//! End-to-end acceptance checks. Each test prints one PASS/FAIL line to
//! stderr (outside the test harness capture) and then asserts.

use std::io::Write;
use std::time::{Duration, Instant};

use fdrelay::allocator::{self, thresholds, AllocationPlan, Regime};
use fdrelay::baselines::{fd_hd, fd_ideal, fd_ip, gaussian_interference_rate, hd};
use fdrelay::geometry::{r1_max, r1_min, r2t_max, r2t_min, OmegaCtx, OmegaPoint};
use fdrelay::model::{channel_from_pathloss, db_to_watts, normalize_budget, ChannelModel, PowerBudget};
use fdrelay::numerics::linspace;
use fdrelay::oracle::{lp_oracle, moment_lp_minimum, OracleConfig};
use fdrelay::twodelta::{concave_moment_bounds, solve_two_delta};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

fn link(beta_db: f64) -> ChannelModel {
    channel_from_pathloss(500.0, 2.4e9, 3.0, db_to_watts(-151.0), beta_db).unwrap()
}

fn budget(relay_dbw: f64, peak_dbw: f64, source_dbw: f64) -> PowerBudget {
    PowerBudget::new(db_to_watts(relay_dbw), db_to_watts(peak_dbw), db_to_watts(source_dbw)).unwrap()
}

fn budget_w(relay_dbw: f64, peak_dbw: f64, source_w: f64) -> PowerBudget {
    PowerBudget::new(db_to_watts(relay_dbw), db_to_watts(peak_dbw), source_w).unwrap()
}

/// Solves and checks the plan invariants; every solve in this file goes
/// through here.
fn solve(m: &ChannelModel, b: &PowerBudget) -> AllocationPlan {
    let plan = allocator::solve(m, b).unwrap();
    plan.validate(m, b).unwrap();
    let (r1, r2) = plan.hop_rates(m);
    assert!((r1.min(r2) - plan.rate).abs() <= 1e-9, "rate is not min(R1, R2)");
    let total: f64 = plan.phases.iter().map(|p| p.duration).sum();
    assert!((total - 1.0).abs() <= 1e-12);
    plan
}

struct Report {
    id: u8,
    title: &'static str,
    limit: Duration,
    start: Instant,
    checks: Vec<(String, bool)>,
}

impl Report {
    fn new(id: u8, title: &'static str, limit_s: u64) -> Self {
        Report {
            id,
            title,
            limit: Duration::from_secs(limit_s),
            start: Instant::now(),
            checks: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.checks.push((what, ok));
    }

    fn finish(mut self) {
        let elapsed = self.start.elapsed();
        self.check(
            elapsed < self.limit,
            format!("runtime {:.2} s < {} s", elapsed.as_secs_f64(), self.limit.as_secs()),
        );
        let pass = self.checks.iter().all(|c| c.1);
        let mut err = std::io::stderr().lock();
        let _ = writeln!(
            err,
            "acceptance {} [{}] {}: {:.2} s",
            self.id,
            self.title,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
        for (what, ok) in &self.checks {
            let _ = writeln!(err, "    {} {what}", if *ok { "ok  " } else { "FAIL" });
        }
        drop(err);
        let failed: Vec<&str> = self.checks.iter().filter(|c| !c.1).map(|c| c.0.as_str()).collect();
        assert!(failed.is_empty(), "criterion {} failed: {failed:?}", self.id);
    }
}

#[test]
fn criterion_1_thresholds() {
    let mut r = Report::new(1, "threshold regression", 1);
    let names = ["P0", "P1", "P2", "P3", "P4"];

    let a = thresholds(&link(-135.0), &budget(-10.0, -7.0, -20.0)).unwrap();
    let expect_a = [Some(-24.0), Some(-14.23), Some(-3.04), Some(-9.92), Some(-20.56)];
    let b = thresholds(&link(-110.0), &budget(-10.0, -7.0, -20.0)).unwrap();
    let expect_b = [Some(1.0), None, Some(21.0), Some(-9.9), Some(-0.7)];

    for (label, got, expect, tol) in [("A", &a, expect_a, 0.05), ("B", &b, expect_b, 0.1)] {
        for k in 0..5 {
            if let Some(e) = expect[k] {
                let ok = got.dbw[k].is_some_and(|g| (g - e).abs() <= tol);
                r.check(
                    ok,
                    format!(
                        "scenario {label} {} = {:?} dBW, expected {e} ± {tol}",
                        names[k], got.dbw[k]
                    ),
                );
            }
        }
    }
    r.finish();
}

#[test]
fn criterion_2_closed_forms() {
    let mut r = Report::new(2, "closed-form regime rates", 1);
    for beta in [-135.0, -110.0, -140.0] {
        let m = link(beta);
        let t = thresholds(&m, &budget(-10.0, -7.0, -20.0)).unwrap();
        let p2_w = t.p2 * m.watts_per_normalized();
        let mut worst: f64 = 0.0;
        for factor in [1.0, 1.0 + 1e-9, 1.5, 10.0, 1e3, 1e6] {
            let b = budget_w(-10.0, -7.0, p2_w * factor);
            let plan = solve(&m, &b);
            let exact = (b.relay_avg() * m.v()).ln_1p();
            worst = worst.max((plan.rate - exact).abs() / exact);
        }
        r.check(
            worst <= 1e-12,
            format!("beta {beta} dB: top regime rate vs log(1+p̄v), worst rel {worst:.2e}"),
        );

        // the pure half-duplex plan below both P3 and P0
        let top = t.p3.min(t.p0) * m.watts_per_normalized();
        let mut worst: f64 = 0.0;
        let mut labelled = true;
        for factor in [1.0, 0.999_999, 0.5, 1e-1, 1e-2, 1e-4] {
            let b = budget_w(-10.0, -7.0, top * factor);
            let plan = solve(&m, &b);
            labelled &= plan.regime == Regime::LowA || factor == 1.0;
            let (pb, pm) = (b.relay_avg(), b.relay_peak());
            let pc = normalize_budget(&m, &b).pbar_cal;
            let exact = (1.0 - pb / pm) * (pm * pc * m.beta0() / (pm - pb)).ln_1p();
            worst = worst.max((plan.rate - exact).abs() / exact);
        }
        r.check(
            worst <= 1e-12 && labelled,
            format!("beta {beta} dB: half-duplex regime rate vs closed form, worst rel {worst:.2e}"),
        );
    }
    r.finish();
}

#[test]
fn criterion_3_oracle_equivalence() {
    let mut r = Report::new(3, "allocator vs 400-point LP", 60);
    let cfg = OracleConfig::default();
    assert_eq!(cfg.grid_points, 400);
    for (label, beta) in [("A", -135.0), ("B", -110.0)] {
        let m = link(beta);
        let mut worst: f64 = 0.0;
        let mut at = 0.0;
        for x in linspace(-40.0, 10.0, 20) {
            let b = budget(-10.0, -7.0, x);
            let plan = solve(&m, &b);
            let lp = lp_oracle(&m, &b, &cfg).unwrap();
            let d = (plan.rate - lp.rate).abs();
            if d > worst {
                worst = d;
                at = x;
            }
        }
        r.check(
            worst <= 5e-4,
            format!("scenario {label}: max |OP - LP| = {worst:.3e} nats (at {at:.2} dBW)"),
        );
    }
    r.finish();
}

fn peak_duration(plan: &AllocationPlan, peak: f64) -> f64 {
    plan.phases
        .iter()
        .filter(|p| (p.relay_power - peak).abs() <= 1e-12 * peak)
        .map(|p| p.duration)
        .sum()
}

#[test]
fn criterion_4_sweep_shapes() {
    let mut r = Report::new(4, "sweep shapes", 120);
    let m = link(-135.0);

    let (mut ip_ok, mut hd_ok) = (true, true);
    let (mut ip_margin, mut hd_margin) = (f64::INFINITY, f64::INFINITY);
    for x in linspace(-40.0, 10.0, 101) {
        let b = budget(-10.0, -7.0, x);
        let op = solve(&m, &b).rate;
        if x < -10.0 {
            let ip = fd_ip(&m, &b).unwrap().rate;
            ip_ok &= op > ip;
            ip_margin = ip_margin.min(op - ip);
        }
        let h = hd(&m, &b).unwrap().rate;
        // in the pure half-duplex regime both are the same schedule
        hd_ok &= op >= h - 1e-12 * h.max(1.0);
        hd_margin = hd_margin.min(op - h);
    }
    r.check(
        ip_ok,
        format!("OP > FD-IP below -10 dBW, smallest margin {ip_margin:.3e} nats"),
    );
    r.check(
        hd_ok,
        format!("OP >= HD at all 101 sweep points, smallest margin {hd_margin:.3e} nats"),
    );

    let t = thresholds(&m, &budget(-10.0, -7.0, -20.0)).unwrap();
    let p2_dbw = t.dbw[2].unwrap();
    let peak = db_to_watts(-7.0);
    let gaps = [1.0, 0.3, 0.1, 0.03, 0.01, 0.001];
    let durations: Vec<f64> = gaps
        .iter()
        .map(|g| peak_duration(&solve(&m, &budget(-10.0, -7.0, p2_dbw - g)), peak))
        .collect();
    let shrinking = durations.windows(2).all(|w| w[1] < w[0]) && durations[gaps.len() - 1] < 1e-3;
    r.check(
        shrinking,
        format!("peak-phase duration shrinks toward P2: {durations:.3?}"),
    );
    let at_tenth = durations[2];
    r.check(
        at_tenth <= 1e-2,
        format!("peak-phase duration at P2 - 0.1 dB = {at_tenth:.4} (needs <= 1e-2)"),
    );

    let m12 = link(-130.0);
    let b12 = budget(10.0, 10.0, 10.0);
    let hd12 = hd(&m12, &b12).unwrap().rate;
    let ip12 = fd_ip(&m12, &b12).unwrap().rate;
    let hyb12 = fd_hd(&m12, &b12).unwrap().rate;
    r.check(hd12 == 0.0, format!("fixed 10 dBW peak, p̄ = pmax: HD = {hd12}"));
    r.check(
        (ip12 - hyb12).abs() < 1e-4,
        format!(
            "fixed 10 dBW peak, p̄ = pmax: |FD-IP - FD-HD| = {:.3e}",
            (ip12 - hyb12).abs()
        ),
    );
    r.finish();
}

fn random_ctx(rng: &mut StdRng) -> OmegaCtx {
    let pm = 10f64.powf(rng.random_range(-2.0..1.0));
    let pb = pm * rng.random_range(0.05..0.95);
    let pc = (pm - pb) * rng.random_range(0.01..0.99);
    let beta0 = 10f64.powf(rng.random_range(-1.0..5.0));
    let v = 10f64.powf(rng.random_range(-1.0..5.0));
    OmegaCtx::new(pc, pb, pm, beta0, v).unwrap()
}

fn monotonicity_violations(samples: usize, rng: &mut StdRng) -> usize {
    let mut bad = 0;
    let mut checked = 0;
    while checked < samples {
        let c = random_ctx(rng);
        let reg = &c.region;
        let w = reg.omega_min() + (reg.omega_max() - reg.omega_min()) * rng.random_range(0.02..0.98);
        let (lo, hi) = (reg.f_lower(w), reg.f_upper(w));
        let p = OmegaPoint::new(w, lo + (hi - lo) * rng.random_range(0.02..0.98));
        let dw = 1e-7 * (reg.omega_max() - reg.omega_min());
        let df = 1e-7 * (hi - lo);
        let pw = OmegaPoint::new(p.omega + dw, p.f);
        let pf = OmegaPoint::new(p.omega, p.f + df);
        if !(dw > 0.0 && df > 0.0 && reg.contains(pw) && reg.contains(pf)) {
            continue;
        }
        let tol = |x: f64| 1e-12 * x.abs() + 1e-15;
        let (a, b) = (r1_min(p, &c).unwrap(), r1_max(p, &c).unwrap());
        let (s, t) = (r2t_min(p, &c).unwrap(), r2t_max(p, &c).unwrap());
        let ok = r1_min(pw, &c).unwrap() <= a + tol(a)
            && r1_min(pf, &c).unwrap() <= a + tol(a)
            && r1_max(pw, &c).unwrap() <= b + tol(b)
            && r1_max(pf, &c).unwrap() == b
            && r2t_min(pw, &c).unwrap() >= s - tol(s)
            && r2t_min(pf, &c).unwrap() <= s + tol(s)
            && r2t_max(pw, &c).unwrap() >= t - tol(t);
        if !ok {
            bad += 1;
        }
        checked += 1;
    }
    bad
}

fn sandwich_violations(samples: usize, rng: &mut StdRng) -> usize {
    let mut bad = 0;
    for _ in 0..samples {
        let a = if rng.random_bool(0.5) {
            0.0
        } else {
            rng.random_range(0.0..1.0)
        };
        let b = a + rng.random_range(0.01..5.0);
        let k = 10f64.powf(rng.random_range(-2.0..3.0));
        let n = rng.random_range(1..12);
        let pts: Vec<f64> = (0..n).map(|_| rng.random_range(a..=b)).collect();
        let mut ws: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = ws.iter().sum();
        if total <= 0.0 {
            continue;
        }
        ws.iter_mut().for_each(|w| *w /= total);
        let m = pts.iter().zip(&ws).map(|(p, w)| p * w).sum::<f64>().clamp(a, b);
        let e: f64 = pts.iter().zip(&ws).map(|(p, w)| w * (k * p).ln_1p()).sum();
        let (lo, hi) = concave_moment_bounds(k, a, b, m).unwrap();
        let slack = 1e-12 * hi.abs().max(1.0);
        if !(lo - slack <= e && e <= hi + slack) {
            bad += 1;
        }
    }
    bad
}

fn two_delta_vs_lp(samples: usize, rng: &mut StdRng) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let g1 = 10f64.powf(rng.random_range(-1.0..2.0));
        let g2 = 10f64.powf(rng.random_range(-1.0..2.0));
        let b = rng.random_range(0.1..2.0);
        let m = b * rng.random_range(0.05..0.95);
        let psi = |p: f64| (g1 * p).ln_1p() + (g2 * p).ln_1p();
        let chord = (1.0 - m / b) * psi(0.0) + m / b * psi(b);
        let c = chord + (psi(m) - chord) * rng.random_range(0.05..0.95);
        let dist = solve_two_delta(g1, g2, 0.0, b, m, c).unwrap();
        let exact = dist.expect(|p| (g1 * p).ln_1p());

        let mut grid = linspace(0.0, b, 801);
        grid.push(m);
        let lp = moment_lp_minimum(g1, g2, m, c, &grid).unwrap();
        worst = worst.max((lp - exact).abs());
    }
    worst
}

fn continuity_gap(beta: f64, peak_dbw: f64) -> (f64, usize) {
    let m = link(beta);
    let t = thresholds(&m, &budget(-10.0, peak_dbw, -20.0)).unwrap();
    let mut worst: f64 = 0.0;
    let mut crossed = 0;
    for dbw in t.dbw.iter().flatten() {
        let at = db_to_watts(*dbw);
        let below = solve(&m, &budget_w(-10.0, peak_dbw, at * (1.0 - 1e-6))).rate;
        let above = solve(&m, &budget_w(-10.0, peak_dbw, at * (1.0 + 1e-6))).rate;
        worst = worst.max((above - below).abs());
        crossed += 1;
    }
    (worst, crossed)
}

#[test]
fn criterion_5_property_suites() {
    let mut r = Report::new(5, "property suites", 120);
    let mut rng = StdRng::seed_from_u64(2024);

    let bad = monotonicity_violations(1000, &mut rng);
    r.check(
        bad == 0,
        format!("bound monotonicity on 1000 random region points: {bad} violations"),
    );

    let bad = sandwich_violations(1000, &mut rng);
    r.check(
        bad == 0,
        format!("concave-moment sandwich on 1000 random distributions: {bad} violations"),
    );

    let worst = two_delta_vs_lp(200, &mut rng);
    r.check(
        worst <= 2e-4,
        format!("two-atom minimizer vs LP on 200 instances: worst gap {worst:.3e} nats"),
    );

    let mut worst: f64 = 0.0;
    let mut crossed = 0;
    for (beta, peak) in [(-135.0, -7.0), (-110.0, -7.0), (-140.0, -3.0)] {
        let (w, n) = continuity_gap(beta, peak);
        worst = worst.max(w);
        crossed += n;
    }
    r.check(
        worst <= 1e-3,
        format!("rate continuity across {crossed} thresholds: worst jump {worst:.3e} nats"),
    );

    // plans from random budgets, all checked inside `solve`
    let m = link(-135.0);
    for _ in 0..500 {
        let pb = rng.random_range(-30.0..0.0);
        let pm = pb + rng.random_range(0.1..10.0);
        let b = budget(pb, pm, rng.random_range(-50.0..20.0));
        solve(&m, &b);
    }
    r.check(true, "plan invariants on every solve".into());
    r.finish();
}

#[test]
fn criterion_6_baselines() {
    let mut r = Report::new(6, "baseline cross-checks", 180);
    let m = link(-135.0);

    let b = budget(-10.0, -7.0, -10.0);
    let exact = gaussian_interference_rate(&m, b.source_avg(), b.relay_avg()).unwrap();
    let mut rng = StdRng::seed_from_u64(99);
    let normal = Normal::new(0.0, b.relay_avg().sqrt()).unwrap();
    let snr = b.source_avg() * m.first_hop_snr_per_watt();
    let n = 10_000_000;
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..n {
        let x: f64 = normal.sample(&mut rng);
        let y = (snr / (1.0 + m.beta0() * x * x)).ln_1p();
        sum += y;
        sq += y * y;
    }
    let mean = sum / n as f64;
    let se = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
    r.check(
        (exact - mean).abs() <= 3.0 * se,
        format!("interference expectation {exact:.6} vs Monte Carlo {mean:.6} ± {se:.1e}"),
    );

    let mut dominated = 0;
    let mut worst: f64 = f64::INFINITY;
    for x in linspace(-40.0, 10.0, 101) {
        let b = budget(-10.0, -7.0, x);
        let hyb = fd_hd(&m, &b).unwrap().rate;
        let floor = fd_ip(&m, &b).unwrap().rate.max(hd(&m, &b).unwrap().rate);
        worst = worst.min(hyb - floor);
        if hyb < floor {
            dominated += 1;
        }
    }
    r.check(
        dominated == 0,
        format!("FD-HD >= max(FD-IP, HD) at 101 sweep points, smallest margin {worst:.3e}"),
    );

    let quiet = link(-400.0);
    let mut worst: f64 = 0.0;
    for x in [-40.0, -20.0, -10.0, 0.0, 10.0] {
        let b = budget(-10.0, -7.0, x);
        let ideal = fd_ideal(&quiet, &b).rate;
        let ip = fd_ip(&quiet, &b).unwrap().rate;
        let hyb = fd_hd(&quiet, &b).unwrap().rate;
        worst = worst.max((ideal - ip).abs()).max((ideal - hyb).abs());
    }
    r.check(
        worst <= 1e-6,
        format!("vanishing self-interference: FD-IP, FD-HD vs FD-Ideal within {worst:.3e}"),
    );
    r.finish();
}
