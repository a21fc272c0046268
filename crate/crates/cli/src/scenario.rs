//! Scenario files: JSON, `schema_version` 1.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::registry::{lookup, TargetKind};
use crate::ConfigError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub metrics: Vec<MetricEntry>,
    #[serde(default)]
    pub pairs: Vec<PairEntry>,
    #[serde(default)]
    pub triples: Vec<TripleEntry>,
    #[serde(default)]
    pub points: PointSpec,
    pub checks: Vec<CheckEntry>,
    #[serde(default)]
    pub flow: Option<FlowSpec>,
    #[serde(default)]
    pub algebra: Option<AlgebraSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricEntry {
    pub id: String,
    pub family: Family,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Member {
    First,
    Second,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    Flat {
        signs: Vec<f64>,
    },
    ConstantCurvature {
        curvature: f64,
        signs: Vec<f64>,
    },
    /// One member of a Levi-Civita pair; `polys[i]` are the coefficients of
    /// `X_i`, lowest degree first.
    LeviCivita {
        polys: Vec<Vec<f64>>,
        #[serde(default)]
        reference: Option<Vec<f64>>,
        member: Member,
    },
    ProjectiveFlat {
        signs: Vec<f64>,
        base: Vec<Vec<f64>>,
        shift: Vec<f64>,
        quadratic: f64,
        #[serde(default)]
        reference: Option<Vec<f64>>,
    },
    Scaled {
        base: String,
        factor: f64,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairEntry {
    pub id: String,
    pub g: String,
    pub gbar: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleEntry {
    pub id: String,
    pub g: String,
    pub gbar: String,
    pub ghat: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    #[serde(default)]
    pub explicit: Vec<Vec<f64>>,
    #[serde(default)]
    pub sampler: Option<Sampler>,
}

/// Uniform samples of `[-half_width, half_width]^n` inside each target's domain.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampler {
    pub count: usize,
    pub half_width: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Pass when the residual is at most the tolerance.
    Assert,
    /// Pass when the residual exceeds the tolerance.
    Violation,
    /// Always passes; the residual is recorded.
    Diagnostic,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckEntry {
    pub id: String,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub mode: Option<Mode>,
    /// Metric, pair or triple ids; all applicable targets when absent.
    #[serde(default)]
    pub targets: Option<Vec<String>>,
    /// Use only the first `points` points of each target.
    #[serde(default)]
    pub points: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartState {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSampler {
    pub count: usize,
    pub seed: u64,
    /// Momenta are uniform in `[-momentum, momentum]^n`.
    #[serde(default = "one")]
    pub momentum: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub pair: String,
    #[serde(default)]
    pub starts: Vec<StartState>,
    pub duration: f64,
    pub step: f64,
    pub t_values: Vec<f64>,
    #[serde(default)]
    pub phase_sampler: Option<PhaseSampler>,
    /// Parameter of the extra integral tested for linear dependence.
    #[serde(default)]
    pub extra_t: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSets {
    pub dims: Vec<usize>,
    pub count: usize,
    pub seed: u64,
}

/// Purely algebraic data: a diagonal `g`, a diagonal operator `a` and
/// random elements of `so(g)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSpec {
    pub g_diag: Vec<f64>,
    pub a_diag: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub degrees: Vec<u32>,
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub random_sets: Option<RandomSets>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| ConfigError(format!("{e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn target_kind(&self, id: &str) -> Option<TargetKind> {
        if self.metrics.iter().any(|m| m.id == id) {
            Some(TargetKind::Metric)
        } else if self.pairs.iter().any(|p| p.id == id) {
            Some(TargetKind::Pair)
        } else if self.triples.iter().any(|t| t.id == id) {
            Some(TargetKind::Triple)
        } else {
            None
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: String| Err(ConfigError(m));
        if self.schema_version != SCHEMA_VERSION {
            return err(format!("schema_version: expected {SCHEMA_VERSION}, got {}", self.schema_version));
        }
        let mut ids = BTreeSet::new();
        let all_ids = self
            .metrics
            .iter()
            .map(|m| &m.id)
            .chain(self.pairs.iter().map(|p| &p.id))
            .chain(self.triples.iter().map(|t| &t.id));
        for id in all_ids {
            if !ids.insert(id.as_str()) {
                return err(format!("duplicate id `{id}`"));
            }
        }
        let metric_ids: BTreeSet<&str> = self.metrics.iter().map(|m| m.id.as_str()).collect();
        let need_metric = |field: String, id: &str| -> Result<(), ConfigError> {
            if metric_ids.contains(id) {
                Ok(())
            } else {
                Err(ConfigError(format!("{field}: unknown metric id `{id}`")))
            }
        };
        for (i, m) in self.metrics.iter().enumerate() {
            if let Family::Scaled { base, .. } = &m.family {
                need_metric(format!("metrics[{i}].family.base"), base)?;
                if base == &m.id {
                    return err(format!("metrics[{i}]: `{base}` scales itself"));
                }
            }
        }
        for (i, p) in self.pairs.iter().enumerate() {
            need_metric(format!("pairs[{i}].g"), &p.g)?;
            need_metric(format!("pairs[{i}].gbar"), &p.gbar)?;
        }
        for (i, t) in self.triples.iter().enumerate() {
            need_metric(format!("triples[{i}].g"), &t.g)?;
            need_metric(format!("triples[{i}].gbar"), &t.gbar)?;
            need_metric(format!("triples[{i}].ghat"), &t.ghat)?;
        }
        for (i, c) in self.checks.iter().enumerate() {
            let Some(info) = lookup(&c.id) else {
                return err(format!("checks[{i}].id: unknown check id `{}`", c.id));
            };
            if let Some(t) = c.tolerance {
                if !(t.is_finite() && t >= 0.0) {
                    return err(format!("checks[{i}].tolerance: must be finite and nonnegative"));
                }
            }
            if let Some(targets) = &c.targets {
                for t in targets {
                    match self.target_kind(t) {
                        None => return err(format!("checks[{i}].targets: unknown id `{t}`")),
                        Some(k) if !info.kind.accepts(k) => {
                            return err(format!("checks[{i}].targets: `{t}` is not a valid target for `{}`", c.id))
                        }
                        _ => {}
                    }
                }
            }
            match info.kind {
                TargetKind::Flow if self.flow.is_none() => {
                    return err(format!("checks[{i}]: `{}` needs a `flow` section", c.id))
                }
                TargetKind::Algebra if self.algebra.is_none() => {
                    return err(format!("checks[{i}]: `{}` needs an `algebra` section", c.id))
                }
                _ => {}
            }
        }
        if let Some(f) = &self.flow {
            if !self.pairs.iter().any(|p| p.id == f.pair) {
                return err(format!("flow.pair: unknown pair id `{}`", f.pair));
            }
            if !(f.step > 0.0 && f.duration > 0.0) {
                return err("flow: step and duration must be positive".into());
            }
        }
        if let Some(a) = &self.algebra {
            if a.g_diag.len() != a.a_diag.len() || a.g_diag.len() < 2 {
                return err("algebra: g_diag and a_diag must have the same length >= 2".into());
            }
        }
        if let Some(s) = &self.points.sampler {
            if !(s.half_width > 0.0) {
                return err("points.sampler.half_width: must be positive".into());
            }
        }
        Ok(())
    }
}
