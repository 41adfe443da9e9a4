//! Distortion functions and risk measures of discrete laws.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Distortion `h` with `h(0) = 0`, `h(1) = 1`, nondecreasing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Distortion {
    Mean,
    /// `h(β) = 1{β > 1 - α}`.
    Var { alpha: f64 },
    /// `h(β) = min(1, β / (1 - α))`.
    Es { alpha: f64 },
}

impl Distortion {
    pub fn value_at_risk(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Distortion::Var { alpha })
    }

    pub fn expected_shortfall(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Distortion::Es { alpha })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Distortion::Mean => Ok(()),
            Distortion::Var { alpha } | Distortion::Es { alpha } => check_alpha(alpha),
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            Distortion::Mean => None,
            Distortion::Var { alpha } | Distortion::Es { alpha } => Some(alpha),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Distortion::Mean => "mean",
            Distortion::Var { .. } => "var",
            Distortion::Es { .. } => "es",
        }
    }

    /// `mean`, `var0.99`, `es0.975`.
    pub fn label(&self) -> String {
        match self.alpha() {
            None => self.name().to_string(),
            Some(a) => format!("{}{}", self.name(), a),
        }
    }

    pub fn h(&self, beta: f64) -> f64 {
        match *self {
            Distortion::Mean => beta,
            Distortion::Var { alpha } => {
                if beta > 1.0 - alpha {
                    1.0
                } else {
                    0.0
                }
            }
            Distortion::Es { alpha } => (beta / (1.0 - alpha)).min(1.0),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid("alpha", format!("confidence level must lie in (0, 1), got {alpha}")))
    }
}

/// Atom of a discrete law: `(value, probability)`.
pub type Atom = (f64, f64);

fn validated_sorted(atoms: &[Atom]) -> Result<Vec<Atom>> {
    if atoms.is_empty() {
        return Err(Error::Empty("discrete law"));
    }
    let mut total = 0.0;
    for &(x, p) in atoms {
        if !x.is_finite() || !(p >= 0.0) {
            return Err(Error::Domain {
                value: p,
                domain: "atom probability >= 0 with finite value",
            });
        }
        total += p;
    }
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Domain {
            value: total,
            domain: "total probability 1 ± 1e-12",
        });
    }
    let mut sorted = atoms.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    // merge equal values
    let mut merged: Vec<Atom> = Vec::with_capacity(sorted.len());
    for (x, p) in sorted {
        match merged.last_mut() {
            Some(last) if last.0 == x => last.1 += p,
            _ => merged.push((x, p)),
        }
    }
    Ok(merged)
}

/// `∫₀^∞ h(P(L > x)) dx` for a law on `[0, ∞)` given by atoms, by direct summation
/// over the distinct values.
pub fn distortion_integral(atoms: &[Atom], h: &Distortion) -> Result<f64> {
    let law = validated_sorted(atoms)?;
    // tail[i] = P(L > x_i) accumulated from the top
    let mut tail = vec![0.0; law.len()];
    let mut acc = 0.0;
    for i in (0..law.len()).rev() {
        tail[i] = acc;
        acc += law[i].1;
    }
    let mut value = law[0].0 * h.h(1.0);
    for i in 1..law.len() {
        value += (law[i].0 - law[i - 1].0) * h.h(tail[i - 1].clamp(0.0, 1.0));
    }
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteMeasures {
    pub mean: f64,
    pub var: f64,
    pub es: f64,
}

/// Mean, `VaR_α = inf{l : F(l) >= α}` and `ES_α = (1/(1-α)) ∫_α^1 VaR_β dβ` of a discrete
/// law, computed from its quantile function.
pub fn measures_from_discrete(atoms: &[Atom], alpha_var: f64, alpha_es: f64) -> Result<DiscreteMeasures> {
    check_alpha(alpha_var)?;
    check_alpha(alpha_es)?;
    let law = validated_sorted(atoms)?;
    let mean = law.iter().map(|&(x, p)| x * p).sum();

    // The VaR threshold is read off the upper tail so that it agrees with the
    // `1{β > 1-α}` distortion: VaR is the smallest value whose exceedance probability
    // is at most 1 - α.
    let mut var = law[law.len() - 1].0;
    let mut tail = 0.0;
    for i in (0..law.len()).rev() {
        if tail <= 1.0 - alpha_var {
            var = law[i].0;
        } else {
            break;
        }
        tail += law[i].1;
    }

    // ∫_α^1 of the quantile function: atom i occupies [F_{i-1}, F_i].
    let mut integral = 0.0;
    let mut upper = 1.0;
    for &(x, p) in law.iter().rev() {
        let lower = upper - p;
        let overlap = upper.min(1.0) - lower.max(alpha_es);
        if overlap > 0.0 {
            integral += x * overlap;
        }
        upper = lower;
        if upper <= alpha_es {
            break;
        }
    }
    Ok(DiscreteMeasures {
        mean,
        var,
        es: integral / (1.0 - alpha_es),
    })
}
