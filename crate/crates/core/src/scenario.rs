//! Immutable model configuration.
//!
//! A [`Scenario`] fixes the two group sizes, the per-step capacity `n`, the
//! leak rate, the per-acceptance gain, the score distribution family and the
//! fairness policy. Everything downstream takes a `&Scenario`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Score distribution family, parameterized by its mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionSpec {
    Exponential,
    /// Pareto with shape `k > 1`; the scale is derived from the mean.
    Pareto {
        k: f64,
    },
    /// Gaussian with fixed standard deviation.
    Gaussian {
        sigma: f64,
    },
}

impl DistributionSpec {
    pub fn pareto(k: f64) -> Result<Self> {
        let spec = DistributionSpec::Pareto { k };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        let spec = DistributionSpec::Gaussian { sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DistributionSpec::Exponential => Ok(()),
            DistributionSpec::Pareto { k } => {
                if k.is_finite() && k > 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidShape(format!(
                        "pareto k must be > 1, got {k}"
                    )))
                }
            }
            DistributionSpec::Gaussian { sigma } => {
                if sigma.is_finite() && sigma > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidShape(format!(
                        "gaussian sigma must be > 0, got {sigma}"
                    )))
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DistributionSpec::Exponential => "exponential",
            DistributionSpec::Pareto { .. } => "pareto",
            DistributionSpec::Gaussian { .. } => "gaussian",
        }
    }

    /// Pareto with `k <= 2` has infinite variance.
    pub fn infinite_variance(&self) -> bool {
        matches!(*self, DistributionSpec::Pareto { k } if k <= 2.0)
    }
}

/// How acceptance thresholds are chosen each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Policy {
    /// One threshold for everybody, chosen so that `n` are accepted.
    #[default]
    #[serde(rename = "shared")]
    SharedThreshold,
    /// Group-specific thresholds with equal acceptance rate `n / m`.
    #[serde(rename = "dp")]
    DemographicParity,
}

impl Policy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Policy::SharedThreshold => "shared",
            Policy::DemographicParity => "dp",
        }
    }
}

/// Validated model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    m_c: u64,
    m_nc: u64,
    n: u64,
    alpha: f64,
    beta: f64,
    distribution: DistributionSpec,
    policy: Policy,
}

impl Scenario {
    pub fn new(
        m_c: u64,
        m_nc: u64,
        n: u64,
        alpha: f64,
        beta: f64,
        distribution: DistributionSpec,
        policy: Policy,
    ) -> Result<Self> {
        if m_c == 0 {
            return Err(Error::constraint("m_c", "group size must be positive"));
        }
        if m_nc == 0 {
            return Err(Error::constraint("m_nc", "group size must be positive"));
        }
        if n == 0 {
            return Err(Error::constraint("n", "capacity must be positive"));
        }
        let m = m_c
            .checked_add(m_nc)
            .ok_or_else(|| Error::constraint("m_nc", "population size overflows"))?;
        if n >= m {
            return Err(Error::constraint(
                "n",
                format!("n exceeds population (n = {n}, m = {m})"),
            ));
        }
        if !(alpha.is_finite() && (0.0..=1.0).contains(&alpha)) {
            return Err(Error::constraint(
                "alpha",
                format!("alpha out of [0,1]: {alpha}"),
            ));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::constraint(
                "beta",
                format!("beta must be > 0: {beta}"),
            ));
        }
        distribution.validate().map_err(|e| match e {
            Error::InvalidShape(msg) => Error::Constraint {
                field: "distribution",
                message: msg,
            },
            other => other,
        })?;
        Ok(Scenario {
            m_c,
            m_nc,
            n,
            alpha,
            beta,
            distribution,
            policy,
        })
    }

    pub fn m_c(&self) -> u64 {
        self.m_c
    }

    pub fn m_nc(&self) -> u64 {
        self.m_nc
    }

    /// Total population `m_c + m_nc`.
    pub fn m(&self) -> u64 {
        self.m_c + self.m_nc
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn distribution(&self) -> DistributionSpec {
        self.distribution
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    /// The overall acceptance rate `n / m`.
    pub fn acceptance_rate(&self) -> f64 {
        self.n as f64 / self.m() as f64
    }

    /// Same parameters under a different policy.
    pub fn with_policy(&self, policy: Policy) -> Scenario {
        Scenario {
            policy,
            ..self.clone()
        }
    }

    /// Same parameters with another distribution.
    pub fn with_distribution(&self, distribution: DistributionSpec) -> Result<Scenario> {
        Scenario::new(
            self.m_c,
            self.m_nc,
            self.n,
            self.alpha,
            self.beta,
            distribution,
            self.policy,
        )
    }

    /// Set when `n >= m_c / 5`. The expected-value model assumes `n` is
    /// much smaller than the protected group; past this point the binomial
    /// approximation of acceptance counts gets loose.
    pub fn capacity_warning(&self) -> bool {
        self.n.saturating_mul(5) >= self.m_c
    }

    /// Parse the JSON scenario document.
    pub fn from_json(document: &str) -> Result<Scenario> {
        let raw: ScenarioDoc =
            serde_json::from_str(document).map_err(|e| Error::Malformed(e.to_string()))?;
        raw.into_scenario()
    }

    pub fn to_json(&self) -> String {
        let doc = ScenarioDoc::from(self);
        serde_json::to_string_pretty(&doc).expect("scenario serializes")
    }
}

/// Parse a scenario document; see [`Scenario::from_json`].
pub fn parse_scenario(document: &str) -> Result<Scenario> {
    Scenario::from_json(document)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    m_c: u64,
    m_nc: u64,
    n: u64,
    alpha: f64,
    beta: f64,
    distribution: DistributionDoc,
    #[serde(default)]
    policy: Policy,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistributionDoc {
    family: FamilyDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum FamilyDoc {
    Exponential,
    Pareto,
    Gaussian,
}

impl DistributionDoc {
    fn into_spec(self) -> Result<DistributionSpec> {
        let bad = |msg: String| Error::Constraint {
            field: "distribution",
            message: msg,
        };
        match (self.family, self.k, self.sigma) {
            (FamilyDoc::Exponential, None, None) => Ok(DistributionSpec::Exponential),
            (FamilyDoc::Pareto, Some(k), None) => Ok(DistributionSpec::Pareto { k }),
            (FamilyDoc::Gaussian, None, Some(sigma)) => Ok(DistributionSpec::Gaussian { sigma }),
            (FamilyDoc::Pareto, None, _) => Err(bad("pareto requires k".into())),
            (FamilyDoc::Gaussian, _, None) => Err(bad("gaussian requires sigma".into())),
            (FamilyDoc::Exponential, ..) => {
                Err(bad("exponential takes no shape parameters".into()))
            }
            (FamilyDoc::Pareto, Some(_), Some(_)) => Err(bad("pareto does not take sigma".into())),
            (FamilyDoc::Gaussian, Some(_), Some(_)) => Err(bad("gaussian does not take k".into())),
        }
    }
}

impl ScenarioDoc {
    fn into_scenario(self) -> Result<Scenario> {
        let distribution = self.distribution.into_spec()?;
        Scenario::new(
            self.m_c,
            self.m_nc,
            self.n,
            self.alpha,
            self.beta,
            distribution,
            self.policy,
        )
    }
}

impl From<&Scenario> for ScenarioDoc {
    fn from(s: &Scenario) -> Self {
        let distribution = match s.distribution {
            DistributionSpec::Exponential => DistributionDoc {
                family: FamilyDoc::Exponential,
                k: None,
                sigma: None,
            },
            DistributionSpec::Pareto { k } => DistributionDoc {
                family: FamilyDoc::Pareto,
                k: Some(k),
                sigma: None,
            },
            DistributionSpec::Gaussian { sigma } => DistributionDoc {
                family: FamilyDoc::Gaussian,
                k: None,
                sigma: Some(sigma),
            },
        };
        ScenarioDoc {
            m_c: s.m_c,
            m_nc: s.m_nc,
            n: s.n,
            alpha: s.alpha,
            beta: s.beta,
            distribution,
            policy: s.policy,
        }
    }
}
