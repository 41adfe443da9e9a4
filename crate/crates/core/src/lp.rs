//! Dense bounded-variable simplex for small linear programs.
//!
//! Problems have the form `min/max c·x` subject to `A x <= b` and `l <= x <= u`. The
//! solver runs a two-phase primal simplex on a dense tableau. Variables stay nonbasic at
//! either bound, so box constraints never become rows. Pricing is Dantzig's rule with
//! smallest-index tie-breaking; after a run of degenerate pivots it switches to Bland's
//! rule until progress resumes, which rules out cycling. Identical inputs give
//! bit-identical outputs.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// One `row · x <= rhs` constraint, stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coefficients: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    sense: Sense,
    constraints: Vec<Constraint>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl LinearProgram {
    /// Program over `objective.len()` variables with default bounds `[0, +inf)`.
    pub fn new(objective: Vec<f64>, sense: Sense) -> Self {
        let n = objective.len();
        Self {
            objective,
            sense,
            constraints: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.objective.len()
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) -> Result<()> {
        if j >= self.dim() {
            return Err(Error::Dimension(format!("variable {j} out of range for {} variables", self.dim())));
        }
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(Error::Dimension(format!("invalid bounds [{lower}, {upper}] for variable {j}")));
        }
        self.lower[j] = lower;
        self.upper[j] = upper;
        Ok(())
    }

    /// `Σ coefficients · x <= rhs`.
    pub fn add_le(&mut self, coefficients: Vec<(usize, f64)>, rhs: f64) -> Result<()> {
        if let Some(&(j, _)) = coefficients.iter().find(|(j, _)| *j >= self.dim()) {
            return Err(Error::Dimension(format!("constraint references variable {j} of {}", self.dim())));
        }
        if !rhs.is_finite() || coefficients.iter().any(|(_, a)| !a.is_finite()) {
            return Err(Error::Dimension("constraint data must be finite".into()));
        }
        self.constraints.push(Constraint { coefficients, rhs });
        Ok(())
    }

    /// `Σ coefficients · x >= rhs`.
    pub fn add_ge(&mut self, coefficients: Vec<(usize, f64)>, rhs: f64) -> Result<()> {
        self.add_le(coefficients.into_iter().map(|(j, a)| (j, -a)).collect(), -rhs)
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for c in &self.constraints {
            let lhs: f64 = c.coefficients.iter().map(|&(j, a)| a * x[j]).sum();
            worst = worst.max(lhs - c.rhs);
        }
        for j in 0..self.dim() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        worst
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective value at `point` (NaN unless optimal).
    pub value: f64,
    pub point: Vec<f64>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn without_point(status: LpStatus) -> Self {
        Self {
            status,
            value: f64::NAN,
            point: Vec::new(),
        }
    }
}

/// Backend seam for the bound computations.
pub trait LpSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution>;
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    pub max_iterations: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_switch: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            pivot_tol: 1e-11,
            max_iterations: 100_000,
            degenerate_switch: 25,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DenseSimplex {
    pub options: SimplexOptions,
}

impl DenseSimplex {
    pub fn new(options: SimplexOptions) -> Self {
        Self { options }
    }
}

impl LpSolver for DenseSimplex {
    fn name(&self) -> &'static str {
        "simplex"
    }

    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution> {
        solve_with(lp, &self.options)
    }
}

/// Solver registered under `name`; only `"simplex"` ships with the crate.
pub fn backend(name: &str) -> Result<Box<dyn LpSolver>> {
    match name {
        "simplex" => Ok(Box::new(DenseSimplex::default())),
        other => Err(Error::Unknown {
            kind: "LP backend",
            name: other.to_string(),
        }),
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    solve_with(lp, &SimplexOptions::default())
}

/// How an original variable maps onto nonnegative tableau columns.
#[derive(Debug, Clone, Copy)]
enum Shift {
    /// x = offset + y
    Lower { col: usize, offset: f64 },
    /// x = offset - y
    Upper { col: usize, offset: f64 },
    /// x = y⁺ - y⁻
    Free { pos: usize, neg: usize },
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// row-major `rows × cols`
    a: Vec<f64>,
    /// value of the basic variable of each row
    beta: Vec<f64>,
    basis: Vec<usize>,
    upper: Vec<f64>,
    at_upper: Vec<bool>,
    is_basic: Vec<bool>,
    /// columns never allowed to enter
    frozen: Vec<bool>,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn entry(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.cols + j]
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.a[i * self.cols..(i + 1) * self.cols];
                for (dj, &aij) in d.iter_mut().zip(row) {
                    *dj -= cb * aij;
                }
            }
        }
        for i in 0..self.rows {
            d[self.basis[i]] = 0.0;
        }
        d
    }

    fn pivot(&mut self, r: usize, q: usize, d: &mut [f64]) {
        let cols = self.cols;
        let p = self.a[r * cols + q];
        {
            let row = &mut self.a[r * cols..(r + 1) * cols];
            for x in row.iter_mut() {
                *x /= p;
            }
            row[q] = 1.0;
        }
        let pivot_row: Vec<f64> = self.a[r * cols..(r + 1) * cols].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.a[i * cols + q];
            if f != 0.0 {
                let row = &mut self.a[i * cols..(i + 1) * cols];
                for (x, &pr) in row.iter_mut().zip(&pivot_row) {
                    if pr != 0.0 {
                        *x -= f * pr;
                    }
                }
                row[q] = 0.0;
            }
        }
        let f = d[q];
        if f != 0.0 {
            for (dj, &pr) in d.iter_mut().zip(&pivot_row) {
                if pr != 0.0 {
                    *dj -= f * pr;
                }
            }
            d[q] = 0.0;
        }
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
    }

    fn run(&mut self, cost: &[f64], opts: &SimplexOptions, iterations: &mut usize) -> Result<Outcome> {
        let mut d = self.reduced_costs(cost);
        let mut degenerate_run = 0usize;
        loop {
            *iterations += 1;
            if *iterations > opts.max_iterations {
                return Err(Error::SolverFailure(format!(
                    "iteration limit {} reached",
                    opts.max_iterations
                )));
            }
            let bland = degenerate_run >= opts.degenerate_switch;

            // pricing
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.cols {
                if self.is_basic[j] || self.frozen[j] || self.upper[j] <= 0.0 {
                    continue;
                }
                let dj = d[j];
                let improving = if self.at_upper[j] {
                    dj > opts.optimality_tol
                } else {
                    dj < -opts.optimality_tol
                };
                if !improving {
                    continue;
                }
                if bland {
                    entering = Some((j, dj));
                    break;
                }
                match entering {
                    Some((_, best)) if dj.abs() <= best.abs() => {}
                    _ => entering = Some((j, dj)),
                }
            }
            let Some((q, _)) = entering else {
                return Ok(Outcome::Optimal);
            };
            let dir = if self.at_upper[q] { -1.0 } else { 1.0 };

            // ratio test
            let mut step = self.upper[q];
            let mut leave: Option<(usize, bool, f64)> = None; // (row, to_upper, |alpha|)
            for i in 0..self.rows {
                let alpha = dir * self.entry(i, q);
                if alpha.abs() <= opts.pivot_tol {
                    continue;
                }
                let b = self.basis[i];
                let (limit, to_upper) = if alpha > 0.0 {
                    (self.beta[i].max(0.0) / alpha, false)
                } else {
                    let ub = self.upper[b];
                    if ub.is_infinite() {
                        continue;
                    }
                    ((ub - self.beta[i]).max(0.0) / -alpha, true)
                };
                let better = match leave {
                    None => limit < step || (limit == step && step.is_finite()),
                    Some((row, _, mag)) => {
                        if limit < step {
                            true
                        } else if limit > step {
                            false
                        } else if bland {
                            b < self.basis[row]
                        } else {
                            alpha.abs() > mag || (alpha.abs() == mag && b < self.basis[row])
                        }
                    }
                };
                if better {
                    step = limit;
                    leave = Some((i, to_upper, alpha.abs()));
                }
            }
            if step.is_infinite() {
                return Ok(Outcome::Unbounded);
            }
            if step <= opts.feasibility_tol * 1e-3 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }

            for i in 0..self.rows {
                let a = self.entry(i, q);
                if a != 0.0 {
                    self.beta[i] -= dir * a * step;
                }
            }
            match leave {
                None => {
                    // bound flip
                    self.at_upper[q] = !self.at_upper[q];
                }
                Some((r, to_upper, _)) => {
                    let leaving = self.basis[r];
                    let entering_value = if self.at_upper[q] { self.upper[q] - step } else { step };
                    self.at_upper[leaving] = to_upper;
                    self.at_upper[q] = false;
                    self.pivot(r, q, &mut d);
                    self.beta[r] = entering_value;
                }
            }
        }
    }
}

pub fn solve_with(lp: &LinearProgram, opts: &SimplexOptions) -> Result<LpSolution> {
    let n = lp.dim();
    for j in 0..n {
        if lp.lower[j] > lp.upper[j] {
            return Ok(LpSolution::without_point(LpStatus::Infeasible));
        }
    }

    // structural columns
    let mut shifts = Vec::with_capacity(n);
    let mut col_upper = Vec::new();
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        let shift = if l.is_finite() {
            col_upper.push(u - l);
            Shift::Lower {
                col: col_upper.len() - 1,
                offset: l,
            }
        } else if u.is_finite() {
            col_upper.push(f64::INFINITY);
            Shift::Upper {
                col: col_upper.len() - 1,
                offset: u,
            }
        } else {
            col_upper.push(f64::INFINITY);
            col_upper.push(f64::INFINITY);
            Shift::Free {
                pos: col_upper.len() - 2,
                neg: col_upper.len() - 1,
            }
        };
        shifts.push(shift);
    }
    let ny = col_upper.len();
    let m = lp.constraints.len();

    // rows in shifted variables: a'·y <= b'
    let mut dense_rows = vec![vec![0.0; ny]; m];
    let mut rhs = vec![0.0; m];
    for (i, c) in lp.constraints.iter().enumerate() {
        let mut b = c.rhs;
        for &(j, a) in &c.coefficients {
            match shifts[j] {
                Shift::Lower { col, offset } => {
                    dense_rows[i][col] += a;
                    b -= a * offset;
                }
                Shift::Upper { col, offset } => {
                    dense_rows[i][col] -= a;
                    b -= a * offset;
                }
                Shift::Free { pos, neg } => {
                    dense_rows[i][pos] += a;
                    dense_rows[i][neg] -= a;
                }
            }
        }
        rhs[i] = b;
    }

    let negative: Vec<usize> = (0..m).filter(|&i| rhs[i] < 0.0).collect();
    let slack0 = ny;
    let art0 = ny + m;
    let cols = ny + m + negative.len();
    let mut t = Tableau {
        rows: m,
        cols,
        a: vec![0.0; m * cols],
        beta: vec![0.0; m],
        basis: vec![0; m],
        upper: vec![f64::INFINITY; cols],
        at_upper: vec![false; cols],
        is_basic: vec![false; cols],
        frozen: vec![false; cols],
    };
    t.upper[..ny].copy_from_slice(&col_upper);
    let mut art_of_row = vec![None; m];
    for (k, &i) in negative.iter().enumerate() {
        art_of_row[i] = Some(art0 + k);
    }
    for i in 0..m {
        let row = &mut t.a[i * cols..(i + 1) * cols];
        let sign = if art_of_row[i].is_some() { -1.0 } else { 1.0 };
        for (x, &a) in row.iter_mut().zip(&dense_rows[i]) {
            *x = sign * a;
        }
        row[slack0 + i] = sign;
        let basic = match art_of_row[i] {
            Some(art) => {
                row[art] = 1.0;
                art
            }
            None => slack0 + i,
        };
        t.basis[i] = basic;
        t.is_basic[basic] = true;
        t.beta[i] = sign * rhs[i];
    }

    let mut iterations = 0usize;
    if !negative.is_empty() {
        let mut phase1 = vec![0.0; cols];
        for c in phase1.iter_mut().skip(art0) {
            *c = 1.0;
        }
        t.run(&phase1, opts, &mut iterations)?;
        let infeasibility: f64 = (0..m)
            .filter(|&i| t.basis[i] >= art0)
            .map(|i| t.beta[i].max(0.0))
            .sum();
        let scale = 1.0 + rhs.iter().fold(0.0f64, |acc, b| acc.max(b.abs()));
        if infeasibility > opts.feasibility_tol * scale {
            return Ok(LpSolution::without_point(LpStatus::Infeasible));
        }
        for j in art0..cols {
            t.frozen[j] = true;
            t.upper[j] = 0.0;
        }
        for i in 0..m {
            if t.basis[i] >= art0 {
                t.beta[i] = 0.0;
            }
        }
    }

    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut cost = vec![0.0; cols];
    for (j, shift) in shifts.iter().enumerate() {
        let c = sign * lp.objective[j];
        match *shift {
            Shift::Lower { col, .. } => cost[col] += c,
            Shift::Upper { col, .. } => cost[col] -= c,
            Shift::Free { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }
    if let Outcome::Unbounded = t.run(&cost, opts, &mut iterations)? {
        return Ok(LpSolution::without_point(LpStatus::Unbounded));
    }

    let mut y = vec![0.0; cols];
    for j in 0..cols {
        if t.at_upper[j] {
            y[j] = t.upper[j];
        }
    }
    for i in 0..m {
        y[t.basis[i]] = t.beta[i];
    }
    let mut x = vec![0.0; n];
    for (j, shift) in shifts.iter().enumerate() {
        x[j] = match *shift {
            Shift::Lower { col, offset } => offset + y[col],
            Shift::Upper { col, offset } => offset - y[col],
            Shift::Free { pos, neg } => y[pos] - y[neg],
        };
        // snap onto finite bounds lost to rounding
        x[j] = x[j].clamp(lp.lower[j], lp.upper[j]);
    }
    let scale = 1.0
        + x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
        + lp.constraints.iter().fold(0.0f64, |acc, c| acc.max(c.rhs.abs()));
    let violation = lp.max_violation(&x);
    if violation > opts.feasibility_tol * scale {
        return Err(Error::SolverFailure(format!(
            "optimal basis violates constraints by {violation:e}"
        )));
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        value: lp.evaluate(&x),
        point: x,
    })
}
