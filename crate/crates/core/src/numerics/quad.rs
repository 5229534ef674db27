use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Default relative tolerance for `integrate`.
pub const QUAD_REL_TOL: f64 = 1e-10;

const MAX_INTERVALS: usize = 4000;

// Kronrod nodes on [0, 1); odd indices are shared with the 7-point Gauss rule.
const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> Result<Segment> {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(centre);
    if !fc.is_finite() {
        return Err(Error::NonFinite { x: centre });
    }
    let mut kronrod = WK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XK[j];
        let (x1, x2) = (centre - dx, centre + dx);
        let (f1, f2) = (f(x1), f(x2));
        if !f1.is_finite() {
            return Err(Error::NonFinite { x: x1 });
        }
        if !f2.is_finite() {
            return Err(Error::NonFinite { x: x2 });
        }
        kronrod += WK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Ok(Segment {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    })
}

/// Adaptive 7/15-point Gauss–Kronrod integration of `f` over `[lo, hi]`.
///
/// The interval with the largest error estimate is bisected until the
/// summed estimate drops below `rel_tol·|I|`.
pub fn integrate<F>(f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    integrate_with_limit(f, lo, hi, rel_tol, MAX_INTERVALS)
}

/// `integrate` with an explicit cap on the number of sub-intervals.
pub fn integrate_with_limit<F>(mut f: F, lo: f64, hi: f64, rel_tol: f64, max_intervals: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::invalid("interval", format!("[{lo}, {hi}] is not finite")));
    }
    if lo == hi {
        return Ok(0.0);
    }
    let (a, b, sign) = if lo < hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };

    let first = gauss_kronrod(&mut f, a, b)?;
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    while total_err > rel_tol * total.abs() && total_err > f64::MIN_POSITIVE {
        if heap.len() >= max_intervals {
            return Err(Error::Accuracy {
                estimate: sign * total,
                error: total_err,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            return Err(Error::Accuracy {
                estimate: sign * total,
                error: total_err,
            });
        }
        let left = gauss_kronrod(&mut f, worst.lo, mid)?;
        let right = gauss_kronrod(&mut f, mid, worst.hi)?;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // recompute occasionally to avoid drift from the running sums
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
    let total: f64 = heap.iter().map(|s| s.value).sum();
    Ok(sign * total)
}
