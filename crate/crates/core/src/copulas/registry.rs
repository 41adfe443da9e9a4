use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    survival_transform, BoundSide, Comonotone, Countermonotone, Gumbel, Independence, SharedCopula, TauBand,
};
use crate::error::{invalid, Error, Result};

/// Config-level description of a copula: a registered kind plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CopulaSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// Wrap the kind in the survival transform.
    #[serde(default)]
    pub survival: bool,
}

impl CopulaSpec {
    pub fn named(kind: &str) -> Self {
        Self {
            kind: kind.to_string(),
            delta: None,
            tau: None,
            survival: false,
        }
    }

    pub fn gumbel(delta: f64, survival: bool) -> Self {
        Self {
            kind: "gumbel".into(),
            delta: Some(delta),
            tau: None,
            survival,
        }
    }
}

pub type CopulaFactory = fn(&CopulaSpec) -> Result<SharedCopula>;

/// Name → constructor table for copula kinds.
#[derive(Clone)]
pub struct CopulaRegistry {
    factories: BTreeMap<String, CopulaFactory>,
}

impl Default for CopulaRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl CopulaRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("independence", |_| Ok(Arc::new(Independence)));
        r.register("comonotone", |_| Ok(Arc::new(Comonotone)));
        r.register("countermonotone", |_| Ok(Arc::new(Countermonotone)));
        r.register("gumbel", |spec| {
            let delta = spec.delta.ok_or_else(|| invalid("delta", "gumbel requires `delta`"))?;
            Ok(Arc::new(Gumbel::new(delta)?))
        });
        r.register("tau-lower", |spec| {
            let tau = spec.tau.ok_or_else(|| invalid("tau", "tau band requires `tau`"))?;
            Ok(Arc::new(TauBand::new(tau, BoundSide::Lower)?))
        });
        r.register("tau-upper", |spec| {
            let tau = spec.tau.ok_or_else(|| invalid("tau", "tau band requires `tau`"))?;
            Ok(Arc::new(TauBand::new(tau, BoundSide::Upper)?))
        });
        r
    }

    pub fn register(&mut self, name: &str, factory: CopulaFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn build(&self, spec: &CopulaSpec) -> Result<SharedCopula> {
        let factory = self.factories.get(&spec.kind).ok_or_else(|| Error::Unknown {
            kind: "copula",
            name: spec.kind.clone(),
        })?;
        let base = factory(spec)?;
        Ok(if spec.survival { survival_transform(base) } else { base })
    }
}
