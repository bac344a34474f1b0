//! TOML model configuration.
//!
//! ```toml
//! [signal]
//! mu0 = 0.0
//! mu1 = 1.0
//! sigma_h = 1.0
//! sigma_l = 1.7
//!
//! [beliefs]
//! pi = 0.5
//! alpha = 0.5
//!
//! [payoff]
//! family = "power"
//! k = 2.0
//! phi = 0.0
//! kappa = 1.0
//!
//! [transfers]
//! beta1 = 0.022
//! ```
//!
//! `[transfers]`, `[frictions]` and `[committee]` are optional. Unknown keys
//! are rejected and every section is re-validated after parsing.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::belief_engine::{BeliefState, FrictionSpec};
use crate::committee::CommitteeSpec;
use crate::equilibrium::Scenario;
use crate::error::Error;
use crate::payoffs::{PayoffFamily, PayoffSpec, TransferSpec};
use crate::signal_model::SignalModel;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Invalid(#[from] Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Power,
    LossAverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffConfig {
    pub family: FamilyName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bench_pi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub la_lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_minus: Option<f64>,
    #[serde(default)]
    pub phi: f64,
    #[serde(default = "one")]
    pub kappa: f64,
}

fn one() -> f64 {
    1.0
}

impl PayoffConfig {
    pub fn to_spec(&self) -> Result<PayoffSpec, Error> {
        let require = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| {
                Error::invalid(format!("payoff.{name}"), "required for family loss_averse")
            })
        };
        let family = match self.family {
            FamilyName::Power => {
                let extra = [
                    ("v0", self.v0),
                    ("bench_pi", self.bench_pi),
                    ("slope_b", self.slope_b),
                    ("la_lambda", self.la_lambda),
                    ("kappa_plus", self.kappa_plus),
                    ("kappa_minus", self.kappa_minus),
                ];
                if let Some((name, _)) = extra.iter().find(|(_, v)| v.is_some()) {
                    return Err(Error::invalid(
                        format!("payoff.{name}"),
                        "not allowed for family power",
                    ));
                }
                PayoffFamily::Power {
                    k: self.k.unwrap_or(2.0),
                }
            }
            FamilyName::LossAverse => {
                if self.k.is_some() {
                    return Err(Error::invalid(
                        "payoff.k",
                        "not allowed for family loss_averse",
                    ));
                }
                PayoffFamily::LossAverse {
                    v0: self.v0.unwrap_or(0.0),
                    bench_pi: require(self.bench_pi, "bench_pi")?,
                    slope_b: require(self.slope_b, "slope_b")?,
                    la_lambda: require(self.la_lambda, "la_lambda")?,
                    kappa_plus: self.kappa_plus.unwrap_or(0.0),
                    kappa_minus: self.kappa_minus.unwrap_or(0.0),
                }
            }
        };
        let spec = PayoffSpec {
            family,
            phi: self.phi,
            kappa: self.kappa,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransferConfig {
    pub beta1: f64,
    pub beta0: f64,
    pub limited_liability: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommitteeConfig {
    pub n: usize,
    pub k: usize,
    /// `[Pr(yes | ω=0), Pr(yes | ω=1)]` per member.
    pub member_probs: Vec<[f64; 2]>,
    /// Index of the member whose cutoff is solved.
    #[serde(default)]
    pub member: usize,
}

impl CommitteeConfig {
    pub fn to_spec(&self) -> Result<CommitteeSpec, Error> {
        if self.member_probs.len() != self.n {
            return Err(Error::invalid(
                "committee.member_probs",
                format!("has {} entries but n = {}", self.member_probs.len(), self.n),
            ));
        }
        if self.member >= self.n {
            return Err(Error::invalid("committee.member", "must be below n"));
        }
        CommitteeSpec::new(self.k, self.member_probs.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub signal: SignalModel,
    pub beliefs: BeliefState,
    pub payoff: PayoffConfig,
    #[serde(default)]
    pub transfers: TransferConfig,
    #[serde(default)]
    pub frictions: FrictionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub committee: Option<CommitteeConfig>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            signal: SignalModel::baseline(),
            beliefs: BeliefState {
                pi: 0.5,
                alpha: 0.5,
            },
            payoff: PayoffConfig {
                family: FamilyName::Power,
                k: Some(2.0),
                v0: None,
                bench_pi: None,
                slope_b: None,
                la_lambda: None,
                kappa_plus: None,
                kappa_minus: None,
                phi: 0.0,
                kappa: 1.0,
            },
            transfers: TransferConfig::default(),
            frictions: FrictionSpec::default(),
            committee: None,
        }
    }
}

impl ModelConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ModelConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.scenario()?;
        if let Some(c) = &self.committee {
            c.to_spec()?;
        }
        Ok(())
    }

    /// The validated scenario described by the config (committee not applied).
    pub fn scenario(&self) -> Result<Scenario, Error> {
        let sc = Scenario {
            model: self.signal,
            beliefs: self.beliefs,
            payoff: self.payoff.to_spec()?,
            transfers: TransferSpec {
                beta1: self.transfers.beta1,
                beta0: self.transfers.beta0,
                limited_liability: self.transfers.limited_liability,
            },
            frictions: self.frictions,
            realization: [1.0, 1.0],
            perceived: None,
        };
        sc.validate()?;
        Ok(sc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[signal]
mu0 = 0.0
mu1 = 1.0
sigma_h = 1.0
sigma_l = 1.7

[beliefs]
pi = 0.5
alpha = 0.5

[payoff]
family = "power"
k = 2.0

[transfers]
beta1 = 0.022
"#;

    #[test]
    fn loads_baseline() {
        let cfg = ModelConfig::from_toml(BASE).unwrap();
        let sc = cfg.scenario().unwrap();
        assert_eq!(sc.transfers.beta1, 0.022);
        assert_eq!(sc.frictions, FrictionSpec::default());
        assert_eq!(sc.payoff, PayoffSpec::quadratic());
    }

    #[test]
    fn invalid_pi_names_field() {
        let text = BASE.replace("pi = 0.5", "pi = 1.0");
        let err = ModelConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("beliefs.pi"), "{err}");
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = BASE.replace("alpha = 0.5", "alpha = 0.5\ngamma = 1");
        assert!(matches!(
            ModelConfig::from_toml(&text),
            Err(ConfigError::Parse(_))
        ));
        let text = BASE.replace("k = 2.0", "k = 2.0\nbench_pi = 0.5");
        let err = ModelConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("payoff.bench_pi"));
    }

    #[test]
    fn dump_round_trip() {
        let mut cfg = ModelConfig::from_toml(BASE).unwrap();
        cfg.committee = Some(CommitteeConfig {
            n: 3,
            k: 2,
            member_probs: vec![[0.3, 0.7]; 3],
            member: 1,
        });
        cfg.frictions.eps_flip = 0.1;
        let back = ModelConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.scenario().unwrap(), cfg.scenario().unwrap());
    }

    #[test]
    fn loss_averse_needs_its_parameters() {
        let text = BASE.replace(
            "family = \"power\"\nk = 2.0",
            "family = \"loss_averse\"\nbench_pi = 0.5\nslope_b = 1.0",
        );
        let err = ModelConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("payoff.la_lambda"));
        let ok = text.replace("slope_b = 1.0", "slope_b = 1.0\nla_lambda = 2.0");
        let cfg = ModelConfig::from_toml(&ok).unwrap();
        assert!(cfg.scenario().unwrap().payoff.convexity_violation());
    }

    #[test]
    fn committee_size_checked() {
        let text = format!("{BASE}\n[committee]\nn = 3\nk = 2\nmember_probs = [[0.3, 0.7]]\n");
        let err = ModelConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("committee.member_probs"));
    }
}
