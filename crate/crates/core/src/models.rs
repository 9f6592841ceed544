//! Closed-form photon-number and detection-window statistics.
//!
//! A non-resolving detector behind an external loss `eta` clicks in a window
//! with probability `p = P(n > 0)` over the lossy photon-number distribution.
//! Windows are independent, so the index `N` of the first clicking window is
//! geometric, and its parity gives the bias of a raw `N mod 2` bit stream.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhotonStatistics {
    Poisson,
    Thermal,
}

impl std::str::FromStr for PhotonStatistics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "poisson" | "poissonian" => Ok(PhotonStatistics::Poisson),
            "thermal" => Ok(PhotonStatistics::Thermal),
            other => Err(Error::Config(format!("unknown photon statistics `{other}`"))),
        }
    }
}

impl std::fmt::Display for PhotonStatistics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PhotonStatistics::Poisson => "poisson",
            PhotonStatistics::Thermal => "thermal",
        })
    }
}

/// Photon-number statistics of a light source seen through a detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    pub distribution: PhotonStatistics,
    /// Mean photon number per detection window.
    pub mu: f64,
    /// Detection efficiency.
    pub eta: f64,
}

impl SourceModel {
    pub fn new(distribution: PhotonStatistics, mu: f64, eta: f64) -> Result<Self> {
        let source = SourceModel {
            distribution,
            mu,
            eta,
        };
        source.validate()?;
        Ok(source)
    }

    pub fn poisson(mu: f64, eta: f64) -> Result<Self> {
        Self::new(PhotonStatistics::Poisson, mu, eta)
    }

    pub fn thermal(mu: f64, eta: f64) -> Result<Self> {
        Self::new(PhotonStatistics::Thermal, mu, eta)
    }

    /// A lossless source whose effective mean is `mu_eta`.
    pub fn with_effective_mean(distribution: PhotonStatistics, mu_eta: f64) -> Result<Self> {
        Self::new(distribution, mu_eta, 1.0)
    }

    /// Poisson source whose per-window click probability is exactly `p`.
    pub fn poisson_with_click_probability(p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::domain(format!("click probability {p} not in [0,1)")));
        }
        Self::poisson(-(-p).ln_1p(), 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(Error::domain(format!("mu = {} must be finite and >= 0", self.mu)));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::domain(format!("eta = {} must lie in [0,1]", self.eta)));
        }
        Ok(())
    }

    /// `mu * eta`, the only combination entering detection probabilities.
    pub fn effective_mean(&self) -> f64 {
        self.mu * self.eta
    }

    /// The same source seen through an additional loss `transmittance`.
    pub fn attenuated(&self, transmittance: f64) -> Result<Self> {
        Self::new(self.distribution, self.mu, self.eta * transmittance)
    }
}

/// Predicted parity split of the first-click window index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticBias {
    pub p_even: f64,
    pub p_odd: f64,
}

impl AnalyticBias {
    /// `|p_odd - 1/2|`, the absolute bias of a raw parity bit.
    pub fn bias(&self) -> f64 {
        (self.p_odd - 0.5).abs()
    }
}

/// Probability of `n` photons in a window. Uses `mu` only; loss enters through
/// [`click_probability`].
pub fn photon_pmf(source: &SourceModel, n: u64) -> Result<f64> {
    source.validate()?;
    let mu = source.mu;
    let p = match source.distribution {
        PhotonStatistics::Poisson => {
            if mu == 0.0 {
                if n == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                (n as f64 * mu.ln() - mu - ln_factorial(n)).exp()
            }
        }
        PhotonStatistics::Thermal => {
            // mu^n / (mu+1)^(n+1), in log form to survive large n
            if mu == 0.0 {
                if n == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                let ratio = mu / (mu + 1.0);
                (n as f64 * ratio.ln()).exp() / (mu + 1.0)
            }
        }
    };
    Ok(p)
}

/// Probability that a non-resolving detector with efficiency `eta` clicks in a window.
pub fn click_probability(source: &SourceModel) -> Result<f64> {
    source.validate()?;
    let x = source.effective_mean();
    Ok(match source.distribution {
        PhotonStatistics::Poisson => -(-x).exp_m1(),
        // thermal light stays thermal under Bernoulli loss, with mean mu*eta
        PhotonStatistics::Thermal => x / (x + 1.0),
    })
}

/// Probability that the first click happens in window `n` (1-indexed).
pub fn window_pmf(p: f64, n: u64) -> Result<f64> {
    check_probability(p)?;
    if n == 0 {
        return Err(Error::domain("window index is 1-based; N = 0 is undefined"));
    }
    Ok((1.0 - p).powf((n - 1) as f64) * p)
}

/// Parity split of the first-click window for a given per-window click probability.
///
/// Summing the geometric series over odd windows gives `1 / (2 - p)`.
pub fn parity_from_click_probability(p: f64) -> Result<AnalyticBias> {
    check_probability(p)?;
    let p_odd = 1.0 / (2.0 - p);
    Ok(AnalyticBias {
        p_even: 1.0 - p_odd,
        p_odd,
    })
}

pub fn parity_probabilities(source: &SourceModel) -> Result<AnalyticBias> {
    source.validate()?;
    let x = source.effective_mean();
    Ok(match source.distribution {
        PhotonStatistics::Poisson => AnalyticBias {
            p_even: 1.0 / (1.0 + x.exp()),
            p_odd: 1.0 / (1.0 + (-x).exp()),
        },
        PhotonStatistics::Thermal => AnalyticBias {
            p_even: 1.0 / (x + 2.0),
            p_odd: (x + 1.0) / (x + 2.0),
        },
    })
}

/// Predicted zeros-to-ones ratio `P_EVEN / P_ODD = 1 - p` of a raw parity stream.
/// Degenerate `p = 1` (every window clicks) gives 0.
pub fn balance_ratio(p: f64) -> Result<f64> {
    check_probability(p)?;
    Ok(1.0 - p)
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain(format!("probability {p} not in [0,1]")))
    }
}
