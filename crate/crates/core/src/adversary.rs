//! Adaptive input strategies.
//!
//! A strategy picks `x_t` from everything observable before `z_t` is drawn:
//! the past inputs, the past projection vectors and the sketch summary. The
//! harness enforces the ordering; strategies only ever see a [`History`].

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::distributions::ProjectionVector;
use crate::sketch::SketchState;
use crate::{Error, Result};

/// Everything a strategy may look at when choosing `x_t`.
#[derive(Debug, Clone, Copy)]
pub struct History<'a> {
    /// The step whose input is being chosen.
    pub t: usize,
    /// `x_0, ..., x_{t-1}`.
    pub xs: &'a [f64],
    /// `z_0, ..., z_{t-1}`; may be empty when the caller does not retain them.
    pub zs: &'a [ProjectionVector],
    /// `S_{t-1}`.
    pub sum_sq: f64,
    /// `Y_{t-1}`.
    pub deviation: f64,
    pub tau: Option<usize>,
}

impl<'a> History<'a> {
    pub fn from_state(state: &SketchState, xs: &'a [f64], zs: &'a [ProjectionVector]) -> Self {
        Self {
            t: state.t() + 1,
            xs,
            zs,
            sum_sq: state.sum_sq(),
            deviation: state.deviation(),
            tau: state.tau(),
        }
    }

    /// `|Y_{t-1}| / S_{t-1}`, or zero if nothing has been observed.
    pub fn distortion(&self) -> f64 {
        if self.sum_sq > 0.0 {
            self.deviation.abs() / self.sum_sq
        } else {
            0.0
        }
    }
}

fn default_theta() -> f64 {
    0.1
}

fn default_rho() -> f64 {
    0.1
}

fn default_burst_len() -> usize {
    10
}

/// The reference strategies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategyKind {
    /// `x_t = sqrt(c_x)`.
    Constant {},
    /// `x_t` uniform in `(0, sqrt(c_x)]`.
    UniformMagnitude {},
    /// Full magnitude while `|Y_{t-1}| >= θ S_{t-1}`, otherwise `ρ sqrt(c_x)`.
    Amplify {
        #[serde(default = "default_theta")]
        theta: f64,
        #[serde(default = "default_rho")]
        rho: f64,
    },
    /// Full magnitude for `t <= k`, then `ρ sqrt(c_x)`.
    Burst {
        #[serde(default = "default_burst_len")]
        k: usize,
        #[serde(default = "default_rho")]
        rho: f64,
    },
    /// Full magnitude for `t <= k`, then zero.
    ZeroAfter { k: usize },
    /// `x_t = (-1)^t sqrt(c_x)`.
    Alternating {},
}

impl StrategyKind {
    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::Constant {} => "constant",
            StrategyKind::UniformMagnitude {} => "uniform_magnitude",
            StrategyKind::Amplify { .. } => "amplify",
            StrategyKind::Burst { .. } => "burst",
            StrategyKind::ZeroAfter { .. } => "zero_after",
            StrategyKind::Alternating {} => "alternating",
        }
    }

    /// One instance of every reference strategy with default parameters.
    pub fn reference_set() -> Vec<StrategyKind> {
        vec![
            StrategyKind::Constant {},
            StrategyKind::UniformMagnitude {},
            StrategyKind::Amplify {
                theta: default_theta(),
                rho: default_rho(),
            },
            StrategyKind::Burst {
                k: default_burst_len(),
                rho: default_rho(),
            },
            StrategyKind::ZeroAfter { k: 10 },
            StrategyKind::Alternating {},
        ]
    }
}

/// A strategy together with its square bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    pub c_x: f64,
    max_magnitude: f64,
}

impl StrategySpec {
    pub fn new(kind: StrategyKind, c_x: f64) -> Result<Self> {
        if !(c_x > 0.0 && c_x.is_finite()) {
            return Err(Error::InvalidParams(format!("c_x must be positive, got {c_x}")));
        }
        let rho_ok = |rho: f64| rho > 0.0 && rho <= 1.0;
        match kind {
            StrategyKind::Amplify { theta, rho } => {
                if !(theta >= 0.0 && theta.is_finite()) || !rho_ok(rho) {
                    return Err(Error::InvalidParams(format!(
                        "amplify needs theta >= 0 and rho in (0, 1], got theta={theta}, rho={rho}"
                    )));
                }
            }
            StrategyKind::Burst { rho, .. } if !rho_ok(rho) => {
                return Err(Error::InvalidParams(format!("burst needs rho in (0, 1], got {rho}")));
            }
            _ => {}
        }
        Ok(Self {
            kind,
            c_x,
            max_magnitude: max_magnitude(c_x),
        })
    }

    /// The largest magnitude whose square, in floating point, is at most `c_x`.
    pub fn max_magnitude(&self) -> f64 {
        self.max_magnitude
    }

    /// Chooses `x_t` from the history. The result always satisfies `x_t² <= c_x`.
    pub fn next_x(&self, history: &History<'_>, rng: &mut dyn RngCore) -> f64 {
        let full = self.max_magnitude;
        match self.kind {
            StrategyKind::Constant {} => full,
            StrategyKind::UniformMagnitude {} => {
                // 1 - U lies in (0, 1].
                let u: f64 = rng.random();
                full * (1.0 - u)
            }
            StrategyKind::Amplify { theta, rho } => {
                if history.deviation.abs() >= theta * history.sum_sq {
                    full
                } else {
                    rho * full
                }
            }
            StrategyKind::Burst { k, rho } => {
                if history.t <= k {
                    full
                } else {
                    rho * full
                }
            }
            StrategyKind::ZeroAfter { k } => {
                if history.t <= k {
                    full
                } else {
                    0.0
                }
            }
            StrategyKind::Alternating {} => {
                if history.t % 2 == 0 {
                    full
                } else {
                    -full
                }
            }
        }
    }
}

fn max_magnitude(c_x: f64) -> f64 {
    let mut m = c_x.sqrt();
    while m * m > c_x {
        m = m.next_down();
    }
    m
}

/// Serialized strategy selection: a name, an optional square bound and a
/// parameter object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<serde_json::Value>,
}

impl StrategyConfig {
    pub fn named(kind: &str) -> Self {
        Self {
            kind: kind.to_string(),
            c_x: None,
            params: None,
        }
    }

    pub fn from_kind(kind: StrategyKind) -> Self {
        let value = serde_json::to_value(kind).expect("strategy kinds serialize");
        Self {
            kind: kind.name().to_string(),
            c_x: None,
            params: value.get("params").cloned(),
        }
    }

    pub fn parse_kind(&self) -> Result<StrategyKind> {
        let params = self
            .params
            .clone()
            .unwrap_or_else(|| serde_json::Value::Object(Default::default()));
        let tagged = serde_json::json!({ "kind": self.kind, "params": params });
        serde_json::from_value(tagged)
            .map_err(|e| Error::Config(format!("strategy '{}': {e}", self.kind)))
    }

    /// Resolves to a `StrategySpec`, using `default_c_x` when no bound is given.
    pub fn resolve(&self, default_c_x: f64) -> Result<StrategySpec> {
        StrategySpec::new(self.parse_kind()?, self.c_x.unwrap_or(default_c_x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn history(t: usize, sum_sq: f64, deviation: f64) -> History<'static> {
        History {
            t,
            xs: &[],
            zs: &[],
            sum_sq,
            deviation,
            tau: None,
        }
    }

    #[test]
    fn constant_emits_full_magnitude() {
        let s = StrategySpec::new(StrategyKind::Constant {}, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for t in 1..10 {
            assert_eq!(s.next_x(&history(t, 1.0, 0.0), &mut rng), 1.0);
        }
    }

    #[test]
    fn amplify_chases_deviation() {
        let s = StrategySpec::new(StrategyKind::Amplify { theta: 0.1, rho: 0.1 }, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(s.next_x(&history(3, 1.0, 0.5), &mut rng), 1.0);
        assert_eq!(s.next_x(&history(3, 1.0, 0.05), &mut rng), 0.1);
        assert_eq!(s.next_x(&history(3, 1.0, -0.2), &mut rng), 1.0);
    }

    #[test]
    fn zero_after_and_burst() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let z = StrategySpec::new(StrategyKind::ZeroAfter { k: 3 }, 4.0).unwrap();
        assert_eq!(z.next_x(&history(3, 1.0, 0.0), &mut rng), 2.0);
        assert_eq!(z.next_x(&history(4, 1.0, 0.0), &mut rng), 0.0);
        let b = StrategySpec::new(StrategyKind::Burst { k: 2, rho: 0.5 }, 4.0).unwrap();
        assert_eq!(b.next_x(&history(2, 1.0, 0.0), &mut rng), 2.0);
        assert_eq!(b.next_x(&history(3, 1.0, 0.0), &mut rng), 1.0);
    }

    #[test]
    fn alternating_flips_sign() {
        let s = StrategySpec::new(StrategyKind::Alternating {}, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let xs: Vec<f64> = (1..5).map(|t| s.next_x(&history(t, 1.0, 0.0), &mut rng)).collect();
        assert_eq!(xs, vec![-1.0, 1.0, -1.0, 1.0]);
    }

    #[test]
    fn uniform_magnitude_range_and_determinism() {
        let s = StrategySpec::new(StrategyKind::UniformMagnitude {}, 2.0).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..1000)
                .map(|t| s.next_x(&history(t, 1.0, 0.0), &mut rng))
                .collect::<Vec<_>>()
        };
        let xs = draw(9);
        assert!(xs.iter().all(|&x| x > 0.0 && x * x <= 2.0));
        assert_eq!(xs, draw(9));
    }

    #[test]
    fn square_bound_is_exact_for_awkward_bounds() {
        for c_x in [2.0, 3.0, 0.1, 7.7, 1e-8, 12345.678] {
            let s = StrategySpec::new(StrategyKind::Constant {}, c_x).unwrap();
            let m = s.max_magnitude();
            assert!(m * m <= c_x, "{c_x}");
            assert!((m - c_x.sqrt()).abs() <= 4.0 * f64::EPSILON * m);
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(StrategySpec::new(StrategyKind::Constant {}, 0.0).is_err());
        assert!(StrategySpec::new(StrategyKind::Amplify { theta: 0.1, rho: 0.0 }, 1.0).is_err());
        assert!(StrategySpec::new(StrategyKind::Amplify { theta: -1.0, rho: 0.5 }, 1.0).is_err());
        assert!(StrategySpec::new(StrategyKind::Burst { k: 1, rho: 1.5 }, 1.0).is_err());
    }

    #[test]
    fn config_parsing() {
        let cfg: StrategyConfig =
            serde_json::from_str(r#"{"kind":"amplify","params":{"theta":0.2}}"#).unwrap();
        assert_eq!(
            cfg.parse_kind().unwrap(),
            StrategyKind::Amplify { theta: 0.2, rho: 0.1 }
        );
        let spec = StrategyConfig::named("constant").resolve(0.25).unwrap();
        assert_eq!(spec.c_x, 0.25);
        assert!(StrategyConfig::named("nope").parse_kind().is_err());
        let unknown: StrategyConfig =
            serde_json::from_str(r#"{"kind":"zero_after","params":{"k":1,"extra":2}}"#).unwrap();
        assert!(unknown.parse_kind().is_err());
        assert!(serde_json::from_str::<StrategyConfig>(r#"{"kind":"constant","oops":1}"#).is_err());
        for kind in StrategyKind::reference_set() {
            assert_eq!(StrategyConfig::from_kind(kind).parse_kind().unwrap(), kind);
        }
    }
}
