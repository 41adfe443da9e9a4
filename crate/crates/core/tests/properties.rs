//! Randomised invariants of the bound LPs and of the simplex solver.

use std::sync::Arc;

use jointlife::bounds::*;
use jointlife::canonical::{build_canonical, CanonicalForm};
use jointlife::contracts::{Monotonicity, PayoffSpec, Statistic};
use jointlife::copulas::{survival_transform, Gumbel, SharedCopula};
use jointlife::lp::{solve, LinearProgram, LpStatus, Sense};
use jointlife::marginals::GompertzMarginal;
use jointlife::riskmeasures::Distortion;
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Case {
    form: CanonicalForm,
    c_ref: SharedCopula,
    other: SharedCopula,
}

fn gumbel(delta: f64, survival: bool) -> SharedCopula {
    let g: SharedCopula = Arc::new(Gumbel::new(delta).unwrap());
    if survival {
        survival_transform(g)
    } else {
        g
    }
}

prop_compose! {
    fn case()(
        life_x in 1.2f64..7.0,
        life_y in 1.2f64..7.0,
        steps in prop::collection::vec(0.05f64..3.0, 9),
        first_death in any::<bool>(),
        increasing in any::<bool>(),
        delta in 1.0f64..4.0,
        other_delta in 1.0f64..4.0,
        survival in any::<bool>(),
    ) -> Case {
        let x = GompertzMarginal::new(75.0, 86.0, 7.0, life_x).unwrap();
        let y = GompertzMarginal::new(72.0, 90.0, 6.0, life_y).unwrap();
        let mut levels: Vec<f64> = steps.iter().scan(0.0, |acc, s| { *acc += s; Some(*acc) }).collect();
        if !increasing {
            levels.reverse();
        }
        let statistic = if first_death { Statistic::FirstDeath } else { Statistic::LastDeath };
        let form = build_canonical(&PayoffSpec::new(statistic, levels).unwrap(), &x, &y).unwrap();
        Case { form, c_ref: gumbel(delta, survival), other: gumbel(other_delta, !survival) }
    }
}

fn norm_strategy() -> impl Strategy<Value = Norm> {
    prop_oneof![Just(Norm::L1), Just(Norm::Linf)]
}

fn all_bounds(case: &Case, norm: Norm, eps: f64, a_var: f64, a_es: f64) -> [BoundResult; 3] {
    let region = build_region(&case.form, case.c_ref.as_ref(), norm, eps).unwrap();
    [
        mean_bounds(&region, &case.form).unwrap(),
        var_bounds(&region, &case.form, a_var).unwrap(),
        es_bounds(&region, &case.form, a_es).unwrap(),
    ]
}

/// Possible VaR values: partial sums of the canonical weights.
fn var_values(form: &CanonicalForm) -> Vec<f64> {
    let n = form.len();
    if form.monotonicity == Monotonicity::Decreasing {
        (1..=n + 1).map(|m| form.z0 + form.z[m - 1..].iter().sum::<f64>()).collect()
    } else {
        (0..=n).map(|m| form.z0 + form.z[..m].iter().sum::<f64>()).collect()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zero_radius_is_the_reference(case in case(), norm in norm_strategy(), a in 0.05f64..0.95) {
        let hs = [Distortion::Mean, Distortion::Var { alpha: a }, Distortion::Es { alpha: a }];
        for (b, h) in all_bounds(&case, norm, 0.0, a, a).iter().zip(hs) {
            let v = case.form.evaluate(&h, case.c_ref.as_ref());
            prop_assert!((b.lower - v).abs() < 1e-8 && (b.upper - v).abs() < 1e-8, "{} [{}, {}] vs {v}", h.label(), b.lower, b.upper);
        }
    }

    #[test]
    fn bounds_grow_with_radius(case in case(), norm in norm_strategy(), e1 in 0.0f64..0.3, e2 in 0.0f64..0.3, a in 0.05f64..0.95) {
        let (lo, hi) = (e1.min(e2), e1.max(e2));
        let small = all_bounds(&case, norm, lo, a, a);
        let large = all_bounds(&case, norm, hi, a, a);
        for (s, l) in small.iter().zip(&large) {
            prop_assert!(l.lower <= s.lower + 1e-9 && s.upper <= l.upper + 1e-9);
            prop_assert!(s.lower <= s.upper + 1e-9);
        }
    }

    #[test]
    fn l1_ball_sits_inside_linf_ball(case in case(), eps in 0.0f64..0.3, a in 0.05f64..0.95) {
        let l1 = all_bounds(&case, Norm::L1, eps, a, a);
        let linf = all_bounds(&case, Norm::Linf, eps, a, a);
        for (s, l) in l1.iter().zip(&linf) {
            prop_assert!(l.lower <= s.lower + 1e-9 && s.upper <= l.upper + 1e-9);
        }
    }

    #[test]
    fn copula_in_ball_is_bracketed(case in case(), norm in norm_strategy(), a in 0.05f64..0.95) {
        let pts = &case.form.points;
        let eps = epsilon_for_family(&[case.other.as_ref()], case.c_ref.as_ref(), pts, norm).unwrap();
        let hs = [Distortion::Mean, Distortion::Var { alpha: a }, Distortion::Es { alpha: a }];
        for (b, h) in all_bounds(&case, norm, eps, a, a).iter().zip(hs) {
            let v = case.form.evaluate(&h, case.other.as_ref());
            prop_assert!(b.lower <= v + 1e-9 && v <= b.upper + 1e-9, "{} [{}, {}] vs {v}", h.label(), b.lower, b.upper);
        }
    }

    #[test]
    fn attaining_points_are_feasible_and_attain(case in case(), norm in norm_strategy(), eps in 0.0f64..0.3, a in 0.05f64..0.95) {
        let region = build_region(&case.form, case.c_ref.as_ref(), norm, eps).unwrap();
        let hs = [Distortion::Mean, Distortion::Var { alpha: a }, Distortion::Es { alpha: a }];
        for (b, h) in all_bounds(&case, norm, eps, a, a).iter().zip(hs) {
            for (value, r) in [(b.lower, &b.lower_r), (b.upper, &b.upper_r)] {
                let r = r.as_ref().unwrap();
                prop_assert!(region.contains(r, 1e-8));
                if !matches!(h, Distortion::Var { .. }) {
                    prop_assert!((case.form.evaluate_r(&h, r) - value).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn var_bounds_are_partial_sums(case in case(), norm in norm_strategy(), eps in 0.0f64..0.5, a in 0.05f64..0.95) {
        let region = build_region(&case.form, case.c_ref.as_ref(), norm, eps).unwrap();
        let b = var_bounds(&region, &case.form, a).unwrap();
        let values = var_values(&case.form);
        for v in [b.lower, b.upper] {
            prop_assert!(values.iter().any(|s| (s - v).abs() < 1e-9), "{v} not in {values:?}");
        }
    }

    #[test]
    fn production_and_literal_programs_agree(case in case(), norm in norm_strategy(), eps in 0.0f64..0.5, w in prop::collection::vec(-2.0f64..2.0, 9)) {
        let region = build_region(&case.form, case.c_ref.as_ref(), norm, eps).unwrap();
        let n = region.dim();
        let coef = &w[..n];
        // the production LP, reached through mean bounds with these weights
        let form = CanonicalForm { z0: 0.0, z: coef.to_vec(), ..case.form.clone() };
        let mb = mean_bounds(&region, &form).unwrap();
        for (sense, production) in [(Sense::Minimize, mb.lower), (Sense::Maximize, mb.upper)] {
            let lit = solve(&region.literal_program(coef, sense).unwrap()).unwrap();
            prop_assert_eq!(lit.status, LpStatus::Optimal);
            prop_assert!((lit.value - production).abs() < 1e-8, "{sense:?}: literal {} production {production}", lit.value);
        }
    }

    #[test]
    fn es_upper_matches_concave_program(case in case(), norm in norm_strategy(), eps in 0.0f64..0.5, a in 0.05f64..0.95) {
        // max z0 + Σ z_m t_m  s.t. t_m <= r_m / (1 - α), t_m <= 1, r in the region
        let region = build_region(&case.form, case.c_ref.as_ref(), norm, eps).unwrap();
        let n = region.dim();
        let d = region.literal_dim();
        let mut objective = vec![0.0; d + n];
        objective[d..].copy_from_slice(&case.form.z);
        let mut lp = LinearProgram::new(objective, Sense::Maximize);
        for j in 0..d {
            lp.set_bounds(j, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        }
        for j in 0..n {
            lp.set_bounds(d + j, f64::NEG_INFINITY, 1.0).unwrap();
            lp.add_le(vec![(d + j, 1.0), (j, -1.0 / (1.0 - a))], 0.0).unwrap();
        }
        for c in region.literal_constraints() {
            lp.add_le(c.coefficients, c.rhs).unwrap();
        }
        let sol = solve(&lp).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        let es = es_bounds(&region, &case.form, a).unwrap();
        prop_assert!((case.form.z0 + sol.value - es.upper).abs() < 1e-7, "{} vs {}", case.form.z0 + sol.value, es.upper);
    }

    #[test]
    fn simplex_matches_vertex_enumeration(
        d in 1usize..=4,
        rows in prop::collection::vec((prop::collection::vec(-3.0f64..3.0, 4), -2.0f64..4.0), 0..5),
        box_lo in prop::collection::vec(-4.0f64..0.5, 4),
        width in prop::collection::vec(0.0f64..5.0, 4),
        c in prop::collection::vec(-3.0f64..3.0, 4),
        maximize in any::<bool>(),
    ) {
        let sense = if maximize { Sense::Maximize } else { Sense::Minimize };
        let mut lp = LinearProgram::new(c[..d].to_vec(), sense);
        for j in 0..d {
            lp.set_bounds(j, box_lo[j], box_lo[j] + width[j]).unwrap();
        }
        for (a, b) in &rows {
            lp.add_le((0..d).map(|j| (j, a[j])).collect(), *b).unwrap();
        }
        let sol = solve(&lp).unwrap();
        match enumerate_vertices(&lp) {
            None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
            Some(best) => {
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                prop_assert!((sol.value - best).abs() < 1e-6, "simplex {} vertices {best}", sol.value);
                prop_assert!(lp.max_violation(&sol.point) < 1e-7);
            }
        }
    }
}

/// Best objective over all basic feasible points of a bounded LP.
fn enumerate_vertices(lp: &LinearProgram) -> Option<f64> {
    let d = lp.dim();
    // every hyperplane a·x = b that can be active
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for j in 0..d {
        let (lo, hi) = lp.bounds(j);
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        planes.push((e.clone(), lo));
        planes.push((e, hi));
    }
    for c in lp.constraints() {
        let mut a = vec![0.0; d];
        for &(j, v) in &c.coefficients {
            a[j] += v;
        }
        planes.push((a, c.rhs));
    }
    let mut best: Option<f64> = None;
    let mut pick = vec![0usize; d];
    fn choose(start: usize, depth: usize, pick: &mut Vec<usize>, planes: &[(Vec<f64>, f64)], lp: &LinearProgram, best: &mut Option<f64>) {
        let d = pick.len();
        if depth == d {
            if let Some(x) = solve_square(&pick.iter().map(|&i| planes[i].clone()).collect::<Vec<_>>()) {
                if lp.max_violation(&x) < 1e-9 {
                    let v = lp.evaluate(&x);
                    let better = match (*best, lp.sense()) {
                        (None, _) => true,
                        (Some(b), Sense::Maximize) => v > b,
                        (Some(b), Sense::Minimize) => v < b,
                    };
                    if better {
                        *best = Some(v);
                    }
                }
            }
            return;
        }
        for i in start..planes.len() {
            pick[depth] = i;
            choose(i + 1, depth + 1, pick, planes, lp, best);
        }
    }
    choose(0, 0, &mut pick, &planes, lp, &mut best);
    best
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_square(rows: &[(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let n = rows.len();
    let mut m: Vec<Vec<f64>> = rows.iter().map(|(a, b)| {
        let mut r = a.clone();
        r.push(*b);
        r
    }).collect();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[p][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, p);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                for k in col..=n {
                    m[r][k] -= f * m[col][k];
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}
