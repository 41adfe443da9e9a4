//! Robust prices and risk bounds for two-life contracts when the dependence between the
//! lifetimes is only known to lie in a norm ball around a reference copula.
//!
//! Every monotone payoff has a finite canonical form
//! `ρ_h(C) = z₀ + Σ z_m h(A_m + B_m C(u_m, v_m))`, so bounds over the ball reduce to
//! linear programs in the values `r_m = A_m + B_m C(u_m, v_m)`.

pub mod bounds;
pub mod canonical;
pub mod contracts;
pub mod copulas;
pub mod error;
pub mod lp;
pub mod marginals;
pub mod montecarlo;
pub mod oracle;
pub mod riskmeasures;

pub use error::{Error, Result};
