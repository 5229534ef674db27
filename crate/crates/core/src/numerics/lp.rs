use crate::error::{Error, Result};

/// Feasibility and optimality tolerance of the simplex solver.
pub const LP_TOL: f64 = 1e-9;

const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-11;
const MAX_PIVOTS: usize = 100_000;
// a ray whose reduced cost is below this is taken as rounding noise
const RAY_COST_FLOOR: f64 = 1e-8;
const BLAND_AFTER: usize = 50;

/// `maximize c·x` subject to `A x = b` and per-variable lower bounds.
///
/// A bound of `None` marks a free variable. Inequalities are added through
/// `add_le`/`add_ge`, which append a non-negative slack column; the slack
/// columns are stripped from the returned solution.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    objective: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    lower: Vec<Option<f64>>,
    structural: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

impl LpProblem {
    /// All variables start with a lower bound of zero.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            rows: Vec::new(),
            rhs: Vec::new(),
            lower: vec![Some(0.0); n],
            structural: n,
        }
    }

    pub fn from_parts(
        objective: Vec<f64>,
        matrix: Vec<Vec<f64>>,
        rhs: Vec<f64>,
        lower: Vec<Option<f64>>,
    ) -> Result<Self> {
        if matrix.len() != rhs.len() {
            return Err(Error::invalid(
                "rhs",
                format!("{} rows but {} right-hand sides", matrix.len(), rhs.len()),
            ));
        }
        if lower.len() != objective.len() {
            return Err(Error::invalid("lower", "one bound per variable is required"));
        }
        let mut p = Self::new(objective);
        p.lower = lower;
        for (row, b) in matrix.into_iter().zip(rhs) {
            p.add_eq(row, b)?;
        }
        Ok(p)
    }

    pub fn num_vars(&self) -> usize {
        self.structural
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn set_lower(&mut self, var: usize, bound: Option<f64>) {
        self.lower[var] = bound;
    }

    fn check_row(&self, row: &[f64], rhs: f64) -> Result<()> {
        if row.len() != self.structural {
            return Err(Error::invalid(
                "row",
                format!("expected {} coefficients, got {}", self.structural, row.len()),
            ));
        }
        if !rhs.is_finite() || row.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("row", "coefficients must be finite"));
        }
        Ok(())
    }

    pub fn add_eq(&mut self, mut row: Vec<f64>, rhs: f64) -> Result<()> {
        self.check_row(&row, rhs)?;
        row.resize(self.objective.len(), 0.0);
        self.rows.push(row);
        self.rhs.push(rhs);
        Ok(())
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) -> Result<()> {
        self.add_slacked(row, rhs, 1.0)
    }

    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) -> Result<()> {
        self.add_slacked(row, rhs, -1.0)
    }

    fn add_slacked(&mut self, mut row: Vec<f64>, rhs: f64, sign: f64) -> Result<()> {
        self.check_row(&row, rhs)?;
        for r in &mut self.rows {
            r.push(0.0);
        }
        self.objective.push(0.0);
        self.lower.push(Some(0.0));
        row.resize(self.objective.len(), 0.0);
        *row.last_mut().expect("slack column") = sign;
        self.rows.push(row);
        self.rhs.push(rhs);
        Ok(())
    }
}

struct Tableau {
    // m rows of (ncols + 1) entries, last entry is the right-hand side
    t: Vec<Vec<f64>>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.t[i][self.ncols]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[row].clone();
        for (i, r) in self.t.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let factor = r[col];
            if factor != 0.0 {
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
                r[col] = 0.0;
            }
        }
        let factor = self.cost[col];
        if factor != 0.0 {
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= factor * pv;
            }
            self.cost[col] = 0.0;
        }
        self.basis[row] = col;
    }

    fn price(&mut self, c: &[f64]) {
        let mut cost = vec![0.0; self.ncols + 1];
        cost[..c.len()].copy_from_slice(c);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = if b < c.len() { c[b] } else { 0.0 };
            if cb != 0.0 {
                for (v, a) in cost.iter_mut().zip(&self.t[i]) {
                    *v -= cb * a;
                }
            }
        }
        self.cost = cost;
    }

    /// Dantzig pricing with a switch to Bland's rule after a run of
    /// degenerate pivots. The leaving row is the largest pivot among the
    /// near-minimal ratios.
    fn run(&mut self, allowed: usize) -> Result<()> {
        let mut noise = vec![false; allowed];
        let mut degenerate = 0;
        for _ in 0..MAX_PIVOTS {
            let candidates = (0..allowed).filter(|&j| !noise[j] && self.cost[j] > COST_EPS);
            let col = if degenerate < BLAND_AFTER {
                candidates.max_by(|&x, &y| self.cost[x].total_cmp(&self.cost[y]).then(y.cmp(&x)))
            } else {
                candidates.min()
            };
            let Some(col) = col else {
                return Ok(());
            };
            match self.leaving_row(col, degenerate >= BLAND_AFTER) {
                Some(row) => {
                    if self.rhs(row) <= PIVOT_EPS {
                        degenerate += 1;
                    } else {
                        degenerate = 0;
                    }
                    self.pivot(row, col);
                    noise.iter_mut().for_each(|n| *n = false);
                }
                None if self.cost[col] <= RAY_COST_FLOOR => noise[col] = true,
                None => return Err(Error::Unbounded),
            }
        }
        Err(Error::Internal(format!("simplex exceeded {MAX_PIVOTS} pivots")))
    }

    fn leaving_row(&self, col: usize, bland: bool) -> Option<usize> {
        let rows = (0..self.t.len()).filter(|&i| self.t[i][col] > PIVOT_EPS);
        let min_ratio = rows
            .clone()
            .map(|i| self.rhs(i).max(0.0) / self.t[i][col])
            .fold(f64::INFINITY, f64::min);
        if !min_ratio.is_finite() {
            return None;
        }
        let slack = 1e-12 * (1.0 + min_ratio);
        let ties = rows.filter(|&i| self.rhs(i).max(0.0) / self.t[i][col] <= min_ratio + slack);
        if bland {
            ties.min_by_key(|&i| self.basis[i])
        } else {
            ties.max_by(|&x, &y| self.t[x][col].total_cmp(&self.t[y][col]).then(y.cmp(&x)))
        }
    }
}

fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-14 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}

/// Two-phase dense simplex.
pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution> {
    let n = problem.objective.len();
    // map each variable onto one (shifted) or two (split free) columns
    let mut cols: Vec<(usize, f64)> = Vec::with_capacity(n + 4);
    let mut shift = vec![0.0; n];
    for j in 0..n {
        match problem.lower[j] {
            Some(l) => {
                if !l.is_finite() {
                    return Err(Error::invalid("lower", format!("bound of variable {j} is not finite")));
                }
                shift[j] = l;
                cols.push((j, 1.0));
            }
            None => {
                cols.push((j, 1.0));
                cols.push((j, -1.0));
            }
        }
    }
    let ncol = cols.len();
    let c: Vec<f64> = cols.iter().map(|&(j, s)| s * problem.objective[j]).collect();

    let mut a: Vec<Vec<f64>> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    for (row, &rhs) in problem.rows.iter().zip(&problem.rhs) {
        let mut r: Vec<f64> = cols.iter().map(|&(j, s)| s * row[j]).collect();
        let mut bi = rhs - row.iter().zip(&shift).map(|(x, l)| x * l).sum::<f64>();
        let scale = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            if bi.abs() > LP_TOL * rhs.abs().max(1.0) {
                return Err(Error::Infeasible(format!("empty row with right-hand side {rhs}")));
            }
            continue;
        }
        for v in &mut r {
            *v /= scale;
        }
        bi /= scale;
        if bi < 0.0 {
            for v in &mut r {
                *v = -*v;
            }
            bi = -bi;
        }
        a.push(r);
        b.push(bi);
    }
    let m = a.len();

    let mut t = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = Vec::with_capacity(ncol + m + 1);
        row.extend_from_slice(&a[i]);
        row.extend((0..m).map(|k| if k == i { 1.0 } else { 0.0 }));
        row.push(b[i]);
        t.push(row);
    }
    let mut tab = Tableau {
        t,
        cost: Vec::new(),
        basis: (ncol..ncol + m).collect(),
        ncols: ncol + m,
    };

    let mut phase1 = vec![0.0; ncol + m];
    for v in &mut phase1[ncol..] {
        *v = -1.0;
    }
    tab.price(&phase1);
    // artificials never re-enter
    tab.run(ncol)?;
    let infeasibility = -tab.cost[ncol + m];
    let b_scale = b.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    if infeasibility.abs() > LP_TOL * b_scale {
        return Err(Error::Infeasible(format!(
            "phase one ended with residual {infeasibility:e}"
        )));
    }

    // pivot remaining artificials out, dropping rows that are redundant
    let mut i = 0;
    while i < tab.t.len() {
        if tab.basis[i] >= ncol {
            let best = (0..ncol)
                .filter(|j| !tab.basis.contains(j))
                .max_by(|&x, &y| tab.t[i][x].abs().total_cmp(&tab.t[i][y].abs()));
            match best {
                Some(j) if tab.t[i][j].abs() > 1e-9 => tab.pivot(i, j),
                _ => {
                    tab.t.remove(i);
                    tab.basis.remove(i);
                    a.remove(i);
                    b.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    tab.price(&c);
    tab.run(ncol)?;

    // recompute basic values from the scaled original rows for accuracy
    let mut y = vec![0.0; ncol];
    let mut basis_matrix: Vec<Vec<f64>> = a
        .iter()
        .map(|row| tab.basis.iter().map(|&k| row[k]).collect())
        .collect();
    let mut rhs = b.clone();
    match solve_dense(&mut basis_matrix, &mut rhs) {
        Some(xb) => {
            for (k, &col) in tab.basis.iter().enumerate() {
                y[col] = xb[k];
            }
        }
        None => {
            for (k, &col) in tab.basis.iter().enumerate() {
                y[col] = tab.rhs(k);
            }
        }
    }
    for v in &mut y {
        if *v < 0.0 && *v > -LP_TOL {
            *v = 0.0;
        }
    }

    let mut x = shift;
    for (k, &(j, s)) in cols.iter().enumerate() {
        x[j] += s * y[k];
    }
    let value = x.iter().zip(&problem.objective).map(|(x, c)| x * c).sum();
    x.truncate(problem.structural);
    Ok(LpSolution { x, value })
}
