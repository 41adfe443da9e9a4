//! Best and worst case mean, VaR and ES over copulas whose values on the canonical grid
//! lie in a norm ball around a reference copula.
//!
//! A value vector `θ_m = C(u_m, v_m)` comes from some copula iff
//! * `θ_{m̄} <= ... <= θ_1` (chain),
//! * `u_{m̄} + v_{m̄} - θ_{m̄} <= ... <= u_1 + v_1 - θ_1` (reverse chain),
//! * `W(u_m, v_m) <= θ_m <= M(u_m, v_m)`,
//!
//! and the ball adds `‖θ - θ_ref‖ <= ε`. The production LPs write `θ = θ_ref + p - q`
//! with `p, q >= 0`. Then the Fréchet box and the L∞ ball become variable bounds, the L1
//! ball is the single row `Σ (p + q) <= ε`, and the reference point is the origin.
//! [`FeasibleRegion::literal_constraints`] keeps the row-by-row form for counting and
//! membership.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical::CanonicalForm;
use crate::contracts::PriceLinearForm;
use crate::copulas::{fh_lower, fh_upper, Copula};
use crate::error::{invalid, Error, Result};
use crate::lp::{Constraint, DenseSimplex, LinearProgram, LpSolver, LpStatus, Sense};
use crate::riskmeasures::Distortion;

/// Margin by which an LP optimum must clear `1 - α` to count as strictly above it.
pub const STRICT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    Linf,
}

impl Norm {
    pub fn name(&self) -> &'static str {
        match self {
            Norm::L1 => "l1",
            Norm::Linf => "linf",
        }
    }

    pub fn of(&self, diff: impl IntoIterator<Item = f64>) -> f64 {
        let it = diff.into_iter().map(f64::abs);
        match self {
            Norm::L1 => it.sum(),
            Norm::Linf => it.fold(0.0, f64::max),
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Norm::L1),
            "linf" => Ok(Norm::Linf),
            other => Err(Error::Unknown {
                kind: "norm",
                name: other.to_string(),
            }),
        }
    }
}

/// Which side of `1 - α` a coordinate is pinned to inside an ES slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pin {
    AtMost,
    AtLeast,
}

/// Affine value vectors `r_m = A_m + B_m θ_m` reachable by copulas in the ball.
#[derive(Clone)]
pub struct FeasibleRegion {
    norm: Norm,
    epsilon: f64,
    points: Vec<(f64, f64)>,
    a: Vec<f64>,
    b: Vec<f64>,
    theta_ref: Vec<f64>,
    w: Vec<f64>,
    m: Vec<f64>,
    solver: Arc<dyn LpSolver>,
}

impl std::fmt::Debug for FeasibleRegion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FeasibleRegion")
            .field("norm", &self.norm)
            .field("epsilon", &self.epsilon)
            .field("dim", &self.dim())
            .field("solver", &self.solver.name())
            .finish()
    }
}

impl FeasibleRegion {
    /// Region over arbitrary grid points. `epsilon = +inf` drops the ball.
    pub fn new(
        points: Vec<(f64, f64)>,
        a: Vec<f64>,
        b: Vec<f64>,
        c_ref: &dyn Copula,
        norm: Norm,
        epsilon: f64,
    ) -> Result<Self> {
        if epsilon.is_nan() || epsilon < 0.0 {
            return Err(Error::Domain {
                value: epsilon,
                domain: "uncertainty radius epsilon >= 0",
            });
        }
        if a.len() != points.len() || b.len() != points.len() {
            return Err(Error::Dimension(format!(
                "{} points but {} / {} affine coefficients",
                points.len(),
                a.len(),
                b.len()
            )));
        }
        if b.iter().any(|&x| x != 1.0 && x != -1.0) {
            return Err(invalid("b", "affine slopes must be +1 or -1"));
        }
        for w in points.windows(2) {
            if w[1].0 > w[0].0 || w[1].1 > w[0].1 {
                return Err(invalid("points", "grid points must be nonincreasing in both coordinates"));
            }
        }
        let theta_ref = points.iter().map(|&(u, v)| c_ref.eval(u, v)).collect();
        let w = points.iter().map(|&(u, v)| fh_lower(u, v)).collect();
        let m = points.iter().map(|&(u, v)| fh_upper(u, v)).collect();
        Ok(Self {
            norm,
            epsilon,
            points,
            a,
            b,
            theta_ref,
            w,
            m,
            solver: Arc::new(DenseSimplex::default()),
        })
    }

    pub fn with_solver(mut self, solver: Arc<dyn LpSolver>) -> Self {
        self.solver = solver;
        self
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn theta_ref(&self) -> &[f64] {
        &self.theta_ref
    }

    pub fn r_ref(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.r_of(i, self.theta_ref[i])).collect()
    }

    fn r_of(&self, i: usize, theta: f64) -> f64 {
        self.a[i] + self.b[i] * theta
    }

    /// Room to move up (`p`) and down (`q`) from the reference at coordinate `i`.
    fn slack(&self, i: usize) -> (f64, f64) {
        let up = (self.m[i] - self.theta_ref[i]).max(0.0);
        let down = (self.theta_ref[i] - self.w[i]).max(0.0);
        match self.norm {
            Norm::Linf => (up.min(self.epsilon), down.min(self.epsilon)),
            Norm::L1 => (up, down),
        }
    }

    /// Coordinate box containing the region (exact per coordinate for L∞ without the
    /// chains).
    pub fn outer_box(&self) -> Vec<(f64, f64)> {
        (0..self.dim())
            .map(|i| {
                let (up, down) = self.slack(i);
                let (up, down) = (up.min(self.epsilon), down.min(self.epsilon));
                let (lo, hi) = (self.theta_ref[i] - down, self.theta_ref[i] + up);
                let (r1, r2) = (self.r_of(i, lo), self.r_of(i, hi));
                (r1.min(r2), r1.max(r2))
            })
            .collect()
    }

    /// Production LP: variables `p_0..p_{m̄-1}, q_0..q_{m̄-1}`; the objective is
    /// `Σ coef_i r_i` without its constant part.
    fn program(&self, coef_r: &[f64], sense: Sense, pins: &[(usize, Pin, f64)]) -> Result<LinearProgram> {
        let n = self.dim();
        let mut objective = vec![0.0; 2 * n];
        for i in 0..n {
            objective[i] = coef_r[i] * self.b[i];
            objective[n + i] = -coef_r[i] * self.b[i];
        }
        let mut lp = LinearProgram::new(objective, sense);
        for i in 0..n {
            let (up, down) = self.slack(i);
            lp.set_bounds(i, 0.0, up)?;
            lp.set_bounds(n + i, 0.0, down)?;
        }
        for i in 0..n.saturating_sub(1) {
            let j = i + 1;
            let gap = self.theta_ref[i] - self.theta_ref[j];
            // θ_j <= θ_i
            lp.add_le(vec![(j, 1.0), (n + j, -1.0), (i, -1.0), (n + i, 1.0)], gap)?;
            // θ_i - θ_j <= (u_i + v_i) - (u_j + v_j)
            let spread = (self.points[i].0 + self.points[i].1) - (self.points[j].0 + self.points[j].1);
            lp.add_le(vec![(i, 1.0), (n + i, -1.0), (j, -1.0), (n + j, 1.0)], spread - gap)?;
        }
        if self.norm == Norm::L1 && self.epsilon.is_finite() {
            lp.add_le((0..2 * n).map(|k| (k, 1.0)).collect(), self.epsilon)?;
        }
        for &(i, pin, t) in pins {
            // r_i = r_ref_i + B_i (p_i - q_i)
            let room = t - self.r_of(i, self.theta_ref[i]);
            let row = vec![(i, self.b[i]), (n + i, -self.b[i])];
            match pin {
                Pin::AtMost => lp.add_le(row, room)?,
                Pin::AtLeast => lp.add_ge(row, room)?,
            }
        }
        Ok(lp)
    }

    fn r_from_solution(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| self.r_of(i, self.theta_ref[i] + x[i] - x[n + i]).clamp(0.0, 1.0))
            .collect()
    }

    /// Optimum of `Σ coef_i r_i` over the region with optional pins; `None` if the pinned
    /// region is empty.
    fn optimize(&self, coef_r: &[f64], sense: Sense, pins: &[(usize, Pin, f64)]) -> Result<Option<(f64, Vec<f64>)>> {
        let lp = self.program(coef_r, sense, pins)?;
        let sol = self.solver.solve(&lp)?;
        match sol.status {
            LpStatus::Optimal => {
                let r = self.r_from_solution(&sol.point);
                let value = coef_r.iter().zip(&r).map(|(c, x)| c * x).sum();
                Ok(Some((value, r)))
            }
            LpStatus::Infeasible => Ok(None),
            LpStatus::Unbounded => Err(Error::SolverFailure("bounded region reported unbounded".into())),
        }
    }

    fn must_optimize(&self, coef_r: &[f64], sense: Sense) -> Result<(f64, Vec<f64>)> {
        self.optimize(coef_r, sense, &[])?
            .ok_or_else(|| Error::SolverFailure("region containing the reference reported infeasible".into()))
    }

    /// `(min r_i, argmin)` or `(max r_i, argmax)` over the region.
    pub fn coordinate_extreme(&self, i: usize, sense: Sense) -> Result<(f64, Vec<f64>)> {
        let mut coef = vec![0.0; self.dim()];
        coef[i] = 1.0;
        let (_, r) = self.must_optimize(&coef, sense)?;
        Ok((r[i], r))
    }

    /// Row-by-row constraint blocks over `r` (and `s` for L1, indices `m̄..2m̄`):
    /// chain (m̄-1 rows), reverse chain (m̄-1), Fréchet bounds (2m̄), then the ball
    /// (2m̄ rows for L∞; 2m̄ + 1 for L1). Empty ball rows when `ε = +inf`.
    pub fn literal_constraints(&self) -> Vec<Constraint> {
        let n = self.dim();
        let mut rows = Vec::new();
        let row = |coefficients: Vec<(usize, f64)>, rhs: f64| Constraint { coefficients, rhs };
        // θ_i = B_i r_i - B_i A_i
        let ba = |i: usize| self.b[i] * self.a[i];
        for i in 0..n.saturating_sub(1) {
            let j = i + 1;
            rows.push(row(vec![(j, self.b[j]), (i, -self.b[i])], ba(j) - ba(i)));
        }
        for i in 0..n.saturating_sub(1) {
            let j = i + 1;
            let spread = (self.points[i].0 + self.points[i].1) - (self.points[j].0 + self.points[j].1);
            rows.push(row(vec![(i, self.b[i]), (j, -self.b[j])], spread + ba(i) - ba(j)));
        }
        for i in 0..n {
            rows.push(row(vec![(i, self.b[i])], self.m[i] + ba(i)));
            rows.push(row(vec![(i, -self.b[i])], -self.w[i] - ba(i)));
        }
        if self.epsilon.is_finite() {
            let r_ref = self.r_ref();
            match self.norm {
                Norm::Linf => {
                    for (i, &rr) in r_ref.iter().enumerate() {
                        rows.push(row(vec![(i, 1.0)], rr + self.epsilon));
                        rows.push(row(vec![(i, -1.0)], self.epsilon - rr));
                    }
                }
                Norm::L1 => {
                    for (i, &rr) in r_ref.iter().enumerate() {
                        rows.push(row(vec![(i, 1.0), (n + i, -1.0)], rr));
                        rows.push(row(vec![(i, -1.0), (n + i, -1.0)], -rr));
                    }
                    rows.push(row((n..2 * n).map(|k| (k, 1.0)).collect(), self.epsilon));
                }
            }
        }
        rows
    }

    /// Number of variables in the literal blocks.
    pub fn literal_dim(&self) -> usize {
        match self.norm {
            Norm::L1 => 2 * self.dim(),
            Norm::Linf => self.dim(),
        }
    }

    /// LP over the literal blocks with free variables; used to cross-check the
    /// production formulation.
    pub fn literal_program(&self, coef_r: &[f64], sense: Sense) -> Result<LinearProgram> {
        let mut objective = vec![0.0; self.literal_dim()];
        objective[..self.dim()].copy_from_slice(coef_r);
        let mut lp = LinearProgram::new(objective, sense);
        for j in 0..self.literal_dim() {
            lp.set_bounds(j, f64::NEG_INFINITY, f64::INFINITY)?;
        }
        for c in self.literal_constraints() {
            lp.add_le(c.coefficients, c.rhs)?;
        }
        Ok(lp)
    }

    /// Membership of `r` in the region, each literal row allowed `tol` of slack.
    pub fn contains(&self, r: &[f64], tol: f64) -> bool {
        if r.len() != self.dim() {
            return false;
        }
        let r_ref = self.r_ref();
        let mut x = r.to_vec();
        if self.norm == Norm::L1 {
            x.extend(r.iter().zip(&r_ref).map(|(a, b)| (a - b).abs()));
        }
        self.literal_constraints().iter().all(|c| {
            let lhs: f64 = c.coefficients.iter().map(|&(j, a)| a * x[j]).sum();
            lhs <= c.rhs + tol
        })
    }
}

/// Region for a canonical form.
pub fn build_region(form: &CanonicalForm, c_ref: &dyn Copula, norm: Norm, epsilon: f64) -> Result<FeasibleRegion> {
    FeasibleRegion::new(form.points.clone(), form.a.clone(), form.b.clone(), c_ref, norm, epsilon)
}

/// Region over raw copula values (`A = 0`, `B = +1`).
pub fn build_value_region(points: &[(f64, f64)], c_ref: &dyn Copula, norm: Norm, epsilon: f64) -> Result<FeasibleRegion> {
    let n = points.len();
    FeasibleRegion::new(points.to_vec(), vec![0.0; n], vec![1.0; n], c_ref, norm, epsilon)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub measure: Distortion,
    pub epsilon: f64,
    pub lower: f64,
    pub upper: f64,
    /// Value vectors attaining each side, when one exists.
    pub lower_r: Option<Vec<f64>>,
    pub upper_r: Option<Vec<f64>>,
}

impl BoundResult {
    fn constant(measure: Distortion, epsilon: f64, value: f64) -> Self {
        Self {
            measure,
            epsilon,
            lower: value,
            upper: value,
            lower_r: Some(Vec::new()),
            upper_r: Some(Vec::new()),
        }
    }
}

fn check_region(region: &FeasibleRegion, form: &CanonicalForm) -> Result<()> {
    if region.dim() != form.len() {
        return Err(Error::Dimension(format!(
            "region has {} coordinates, canonical form {}",
            region.dim(),
            form.len()
        )));
    }
    Ok(())
}

pub fn mean_bounds(region: &FeasibleRegion, form: &CanonicalForm) -> Result<BoundResult> {
    check_region(region, form)?;
    if form.is_empty() {
        return Ok(BoundResult::constant(Distortion::Mean, region.epsilon, form.z0));
    }
    let (lo, lo_r) = region.must_optimize(&form.z, Sense::Minimize)?;
    let (hi, hi_r) = region.must_optimize(&form.z, Sense::Maximize)?;
    Ok(BoundResult {
        measure: Distortion::Mean,
        epsilon: region.epsilon,
        lower: form.z0 + lo,
        upper: form.z0 + hi,
        lower_r: Some(lo_r),
        upper_r: Some(hi_r),
    })
}

/// Mean bounds for a copula-linear price `c₀ + Σ c_m C(u_m, v_m)` with mixed-sign
/// coefficients.
pub fn mean_bounds_linear(plf: &PriceLinearForm, c_ref: &dyn Copula, norm: Norm, epsilon: f64) -> Result<BoundResult> {
    if plf.coefficients.iter().all(|&c| c == 0.0) {
        if epsilon.is_nan() || epsilon < 0.0 {
            return Err(Error::Domain {
                value: epsilon,
                domain: "uncertainty radius epsilon >= 0",
            });
        }
        return Ok(BoundResult::constant(Distortion::Mean, epsilon, plf.c0));
    }
    let region = build_value_region(&plf.points, c_ref, norm, epsilon)?;
    let (lo, lo_r) = region.must_optimize(&plf.coefficients, Sense::Minimize)?;
    let (hi, hi_r) = region.must_optimize(&plf.coefficients, Sense::Maximize)?;
    Ok(BoundResult {
        measure: Distortion::Mean,
        epsilon,
        lower: plf.c0 + lo,
        upper: plf.c0 + hi,
        lower_r: Some(lo_r),
        upper_r: Some(hi_r),
    })
}

/// Lazily evaluated coordinate extremes with a record of every probe.
struct Probe<'a> {
    region: &'a FeasibleRegion,
    sense: Sense,
    cache: BTreeMap<usize, (f64, Vec<f64>)>,
}

impl<'a> Probe<'a> {
    fn new(region: &'a FeasibleRegion, sense: Sense) -> Self {
        Self {
            region,
            sense,
            cache: BTreeMap::new(),
        }
    }

    /// Extreme of `r_m`, `m` 1-based.
    fn value(&mut self, m: usize) -> Result<f64> {
        if let Some((v, _)) = self.cache.get(&m) {
            return Ok(*v);
        }
        let hit = self.region.coordinate_extreme(m - 1, self.sense)?;
        let v = hit.0;
        self.cache.insert(m, hit);
        Ok(v)
    }

    fn point(&self, m: usize) -> Option<Vec<f64>> {
        self.cache.get(&m).map(|(_, r)| r.clone())
    }

    /// Probed values follow the expected direction (within tolerance).
    fn is_monotone(&self, nonincreasing: bool) -> bool {
        let vals: Vec<f64> = self.cache.values().map(|(v, _)| *v).collect();
        vals.windows(2).all(|w| {
            if nonincreasing {
                w[1] <= w[0] + STRICT_TOL
            } else {
                w[1] >= w[0] - STRICT_TOL
            }
        })
    }
}

/// First `m` in `1..=n` where `pred` holds, for a predicate that is false then true
/// along a monotone sequence; `n + 1` if never.
fn first_true(probe: &mut Probe<'_>, n: usize, pred: &dyn Fn(f64) -> bool) -> Result<usize> {
    let (mut lo, mut hi) = (1usize, n + 1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(probe.value(mid)?) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo)
}

fn linear_first_true(probe: &mut Probe<'_>, n: usize, pred: &dyn Fn(f64) -> bool) -> Result<usize> {
    for m in 1..=n {
        if pred(probe.value(m)?) {
            return Ok(m);
        }
    }
    Ok(n + 1)
}

/// Index search for a predicate that flips once along the sequence; falls back to a full
/// scan when the probed values break monotonicity.
fn locate<'a>(
    region: &'a FeasibleRegion,
    sense: Sense,
    nonincreasing: bool,
    pred: &dyn Fn(f64) -> bool,
    last_true: bool,
) -> Result<(usize, Probe<'a>)> {
    let n = region.dim();
    let mut probe = Probe::new(region, sense);
    // for "last m with pred" search for the first m without it
    let neg = |x: f64| !pred(x);
    let test: &dyn Fn(f64) -> bool = if last_true { &neg } else { pred };
    let mut idx = first_true(&mut probe, n, test)?;
    if !probe.is_monotone(nonincreasing) {
        idx = linear_first_true(&mut probe, n, test)?;
    }
    Ok((if last_true { idx - 1 } else { idx }, probe))
}

pub fn var_bounds(region: &FeasibleRegion, form: &CanonicalForm, alpha: f64) -> Result<BoundResult> {
    let measure = Distortion::value_at_risk(alpha)?;
    check_region(region, form)?;
    if form.is_empty() {
        return Ok(BoundResult::constant(measure, region.epsilon, form.z0));
    }
    let n = form.len();
    let t = 1.0 - alpha;
    let above = move |r: f64| r > t + STRICT_TOL;
    let at_or_below = move |r: f64| !above(r);
    let z = |m: usize| if m == 0 { form.z0 } else { form.z[m - 1] };
    let sum = |from: usize, to: usize| (from..=to).filter(|&m| m <= n).map(z).sum::<f64>();
    let inc = form.is_increasing();

    // r̲ for the lower bound, r̄ for the upper
    let (m_l, lower_probe) = locate(region, Sense::Minimize, inc, &at_or_below, !inc)?;
    let (m_u, upper_probe) = locate(region, Sense::Maximize, inc, &above, inc)?;
    let r_ref = region.r_ref();
    let (lower, upper, lower_r, upper_r) = if inc {
        let lower = if m_l == 0 { 0.0 } else { sum(0, m_l - 1) };
        let upper = sum(0, m_u);
        (lower, upper, lower_probe.point(m_l), upper_probe.point(m_u))
    } else {
        let lower = form.z0 + if m_l + 1 <= n { sum(m_l + 1, n) } else { 0.0 };
        let upper = form.z0 + if m_u <= n { sum(m_u.max(1), n) } else { 0.0 };
        (lower, upper, lower_probe.point(m_l), upper_probe.point(m_u))
    };
    Ok(BoundResult {
        measure,
        epsilon: region.epsilon,
        lower,
        upper,
        lower_r: Some(lower_r.unwrap_or_else(|| r_ref.clone())),
        upper_r: Some(upper_r.unwrap_or(r_ref)),
    })
}

/// Slices that the outer box cannot rule out.
fn candidate_slices(region: &FeasibleRegion, form: &CanonicalForm, t: f64) -> Vec<usize> {
    let n = form.len();
    let boxes = region.outer_box();
    let inc = form.is_increasing();
    // Increasing payoffs have r nonincreasing in m: slice m needs r_j >= t for j <= m and
    // r_j <= t for j > m. Decreasing payoffs flip both.
    let can_reach_above: Vec<bool> = boxes.iter().map(|&(_, hi)| hi >= t - STRICT_TOL).collect();
    let can_reach_below: Vec<bool> = boxes.iter().map(|&(lo, _)| lo <= t + STRICT_TOL).collect();
    (0..=n)
        .filter(|&m| {
            let (head, tail) = (0..m, m..n);
            if inc {
                head.clone().all(|j| can_reach_above[j]) && tail.clone().all(|j| can_reach_below[j])
            } else {
                head.clone().all(|j| can_reach_below[j]) && tail.clone().all(|j| can_reach_above[j])
            }
        })
        .collect()
}

pub fn es_bounds(region: &FeasibleRegion, form: &CanonicalForm, alpha: f64) -> Result<BoundResult> {
    let measure = Distortion::expected_shortfall(alpha)?;
    check_region(region, form)?;
    if form.is_empty() {
        return Ok(BoundResult::constant(measure, region.epsilon, form.z0));
    }
    let n = form.len();
    let t = 1.0 - alpha;
    let inc = form.is_increasing();
    let mut lower = (f64::INFINITY, None);
    let mut upper = (f64::NEG_INFINITY, None);
    for m in candidate_slices(region, form, t) {
        // slice m (0-based coordinates j): increasing keeps j < m at or above t and j >= m
        // at or below; only the neighbours of the crossing need pinning
        let mut pins = Vec::new();
        let (hi_side, lo_side) = if inc { (Pin::AtLeast, Pin::AtMost) } else { (Pin::AtMost, Pin::AtLeast) };
        if m >= 1 {
            pins.push((m - 1, hi_side, t));
        }
        if m < n {
            pins.push((m, lo_side, t));
        }
        let mut coef = vec![0.0; n];
        let mut constant = form.z0;
        for j in 0..n {
            let linear = if inc { j >= m } else { j < m };
            if linear {
                coef[j] = form.z[j] / (1.0 - alpha);
            } else {
                constant += form.z[j];
            }
        }
        if let Some((v, r)) = region.optimize(&coef, Sense::Minimize, &pins)? {
            if constant + v < lower.0 {
                lower = (constant + v, Some(r));
            }
        }
        if let Some((v, r)) = region.optimize(&coef, Sense::Maximize, &pins)? {
            if constant + v > upper.0 {
                upper = (constant + v, Some(r));
            }
        }
    }
    if !lower.0.is_finite() || !upper.0.is_finite() {
        return Err(Error::SolverFailure("every ES slice was infeasible".into()));
    }
    Ok(BoundResult {
        measure,
        epsilon: region.epsilon,
        lower: lower.0,
        upper: upper.0,
        lower_r: lower.1,
        upper_r: upper.1,
    })
}

/// One risk measure's bound computation.
pub trait BoundStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn measure(&self) -> Distortion;
    fn bounds(&self, region: &FeasibleRegion, form: &CanonicalForm) -> Result<BoundResult>;
}

struct MeanStrategy;
struct VarStrategy(f64);
struct EsStrategy(f64);

impl BoundStrategy for MeanStrategy {
    fn name(&self) -> &'static str {
        "mean"
    }
    fn measure(&self) -> Distortion {
        Distortion::Mean
    }
    fn bounds(&self, region: &FeasibleRegion, form: &CanonicalForm) -> Result<BoundResult> {
        mean_bounds(region, form)
    }
}

impl BoundStrategy for VarStrategy {
    fn name(&self) -> &'static str {
        "var"
    }
    fn measure(&self) -> Distortion {
        Distortion::Var { alpha: self.0 }
    }
    fn bounds(&self, region: &FeasibleRegion, form: &CanonicalForm) -> Result<BoundResult> {
        var_bounds(region, form, self.0)
    }
}

impl BoundStrategy for EsStrategy {
    fn name(&self) -> &'static str {
        "es"
    }
    fn measure(&self) -> Distortion {
        Distortion::Es { alpha: self.0 }
    }
    fn bounds(&self, region: &FeasibleRegion, form: &CanonicalForm) -> Result<BoundResult> {
        es_bounds(region, form, self.0)
    }
}

pub type StrategyFactory = fn(&Distortion) -> Result<Box<dyn BoundStrategy>>;

/// Measure name → bound strategy.
#[derive(Clone)]
pub struct StrategyRegistry {
    factories: BTreeMap<String, StrategyFactory>,
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("mean", |_| Ok(Box::new(MeanStrategy)));
        r.register("var", |h| {
            h.validate()?;
            Ok(Box::new(VarStrategy(h.alpha().unwrap_or(f64::NAN))))
        });
        r.register("es", |h| {
            h.validate()?;
            Ok(Box::new(EsStrategy(h.alpha().unwrap_or(f64::NAN))))
        });
        r
    }

    pub fn register(&mut self, name: &str, factory: StrategyFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn strategy(&self, h: &Distortion) -> Result<Box<dyn BoundStrategy>> {
        let factory = self.factories.get(h.name()).ok_or_else(|| Error::Unknown {
            kind: "bound strategy",
            name: h.name().to_string(),
        })?;
        factory(h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonMax {
    pub value: f64,
    /// `false` for L1, where the value is the upper bound `Σ r*_m`.
    pub is_exact: bool,
}

/// Largest distance from the reference over all copulas, from `2m̄` coordinate LPs over
/// the ball-free region.
pub fn epsilon_max(points: &[(f64, f64)], c_ref: &dyn Copula, norm: Norm) -> Result<EpsilonMax> {
    let region = build_value_region(points, c_ref, norm, f64::INFINITY)?;
    let mut stars = Vec::with_capacity(points.len());
    for i in 0..points.len() {
        let (hi, _) = region.coordinate_extreme(i, Sense::Maximize)?;
        let (lo, _) = region.coordinate_extreme(i, Sense::Minimize)?;
        let r = region.theta_ref[i];
        stars.push((hi - r).abs().max((lo - r).abs()));
    }
    Ok(EpsilonMax {
        value: norm.of(stars),
        is_exact: norm == Norm::Linf,
    })
}

/// Radius of a finite candidate family: `max_C ‖(C - C_ref)(u_m, v_m)‖`.
pub fn epsilon_for_family(
    candidates: &[&dyn Copula],
    c_ref: &dyn Copula,
    points: &[(f64, f64)],
    norm: Norm,
) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::Empty("candidate copula family"));
    }
    Ok(candidates
        .iter()
        .map(|c| norm.of(points.iter().map(|&(u, v)| c.eval(u, v) - c_ref.eval(u, v))))
        .fold(0.0, f64::max))
}

/// `r_m = A_m + B_m c(u_m, v_m)` along the canonical grid.
pub fn r_curve(form: &CanonicalForm, c: &dyn Copula) -> Vec<f64> {
    form.r_values(c)
}

/// Default grid: `0` followed by `count - 1` log-spaced radii from `1e-4·top` to `top`.
pub fn default_epsilon_grid(top: f64, count: usize) -> Vec<f64> {
    let mut grid = vec![0.0];
    if count <= 1 || !(top > 0.0) {
        return grid;
    }
    let k = count - 1;
    let (lo, hi) = ((top * 1e-4).ln(), top.ln());
    for i in 0..k {
        let x = if k == 1 { hi } else { lo + (hi - lo) * i as f64 / (k - 1) as f64 };
        grid.push(x.exp());
    }
    *grid.last_mut().unwrap() = top;
    grid
}

/// One row per `(ε, measure)` in grid order. With `parallel > 1` grid points are
/// evaluated on a dedicated pool; results are identical either way.
pub fn sweep(
    form: &CanonicalForm,
    c_ref: &dyn Copula,
    norm: Norm,
    grid: &[f64],
    measures: &[Distortion],
    parallel: usize,
) -> Result<Vec<BoundResult>> {
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(invalid("epsilon grid", "radii must be sorted ascending"));
    }
    let registry = StrategyRegistry::with_builtins();
    let strategies = measures
        .iter()
        .map(|h| registry.strategy(h))
        .collect::<Result<Vec<_>>>()?;
    let regions = grid
        .iter()
        .map(|&eps| build_region(form, c_ref, norm, eps))
        .collect::<Result<Vec<_>>>()?;
    let at = |region: &FeasibleRegion| -> Result<Vec<BoundResult>> {
        strategies.iter().map(|s| s.bounds(region, form)).collect()
    };
    let rows: Vec<Vec<BoundResult>> = if parallel > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallel)
            .build()
            .map_err(|e| Error::SolverFailure(format!("thread pool: {e}")))?;
        pool.install(|| regions.par_iter().map(at).collect::<Result<Vec<_>>>())?
    } else {
        regions.iter().map(at).collect::<Result<Vec<_>>>()?
    };
    Ok(rows.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copulas::{Comonotone, Independence};
    use crate::contracts::{Monotonicity, Statistic};

    fn toy_form() -> CanonicalForm {
        CanonicalForm {
            z0: 0.0,
            z: vec![1.0],
            points: vec![(0.5, 0.5)],
            a: vec![0.0],
            b: vec![1.0],
            starts: vec![1],
            statistic: Statistic::FirstDeath,
            monotonicity: Monotonicity::Increasing,
        }
    }

    #[test]
    fn toy_interval() {
        let form = toy_form();
        let region = build_region(&form, &Independence, Norm::Linf, 0.1).unwrap();
        let (lo, _) = region.coordinate_extreme(0, Sense::Minimize).unwrap();
        let (hi, _) = region.coordinate_extreme(0, Sense::Maximize).unwrap();
        assert!((lo - 0.15).abs() < 1e-12 && (hi - 0.35).abs() < 1e-12);
        let b = mean_bounds(&region, &form).unwrap();
        assert!((b.lower - 0.15).abs() < 1e-12 && (b.upper - 0.35).abs() < 1e-12);
    }

    #[test]
    fn negative_radius_rejected() {
        assert!(build_region(&toy_form(), &Independence, Norm::L1, -0.1).is_err());
    }

    #[test]
    fn literal_row_counts() {
        let points: Vec<(f64, f64)> = (1..=5).map(|k| (1.0 - 0.15 * k as f64, 1.0 - 0.1 * k as f64)).collect();
        let l1 = build_value_region(&points, &Independence, Norm::L1, 0.1).unwrap();
        let linf = build_value_region(&points, &Independence, Norm::Linf, 0.1).unwrap();
        assert_eq!(l1.literal_constraints().len(), 6 * 5 - 1);
        assert_eq!(l1.literal_dim(), 10);
        assert_eq!(linf.literal_constraints().len(), 6 * 5 - 2);
        assert_eq!(linf.literal_dim(), 5);
        assert!(l1.contains(&l1.r_ref(), 1e-12));
    }

    #[test]
    fn single_point_epsilon_max() {
        let e = epsilon_max(&[(0.5, 0.5)], &Independence, Norm::Linf).unwrap();
        assert!((e.value - 0.25).abs() < 1e-12 && e.is_exact);
        let e = epsilon_max(&[(0.5, 0.5)], &Independence, Norm::L1).unwrap();
        assert!(!e.is_exact);
    }

    #[test]
    fn diagonal_comonotone_reference() {
        let points: Vec<(f64, f64)> = (1..10).map(|k| (1.0 - k as f64 / 10.0, 1.0 - k as f64 / 10.0)).collect();
        let e = epsilon_max(&points, &Comonotone, Norm::Linf).unwrap();
        let spread = points.iter().map(|&(u, v)| fh_upper(u, v) - fh_lower(u, v)).fold(0.0, f64::max);
        assert!((e.value - spread).abs() < 1e-12);
    }

    #[test]
    fn family_radius_of_reference_is_zero() {
        let pts = [(0.5, 0.5), (0.3, 0.2)];
        assert_eq!(epsilon_for_family(&[&Independence], &Independence, &pts, Norm::L1).unwrap(), 0.0);
        assert!(epsilon_for_family(&[], &Independence, &pts, Norm::L1).is_err());
    }

    #[test]
    fn registry_dispatch() {
        let reg = StrategyRegistry::with_builtins();
        assert_eq!(reg.strategy(&Distortion::Es { alpha: 0.9 }).unwrap().name(), "es");
        assert!(reg.strategy(&Distortion::Var { alpha: 1.5 }).is_err());
        let mut empty = StrategyRegistry::empty();
        assert!(empty.strategy(&Distortion::Mean).is_err());
        empty.register("mean", |_| Ok(Box::new(MeanStrategy)));
        assert!(empty.strategy(&Distortion::Mean).is_ok());
    }

    #[test]
    fn default_grid_shape() {
        let g = default_epsilon_grid(0.5, 60);
        assert_eq!(g.len(), 60);
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 0.5);
        assert!((g[1] - 0.5e-4).abs() < 1e-15);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn unsorted_grid_rejected() {
        let form = toy_form();
        assert!(sweep(&form, &Independence, Norm::L1, &[0.2, 0.1], &[Distortion::Mean], 1).is_err());
    }
}
