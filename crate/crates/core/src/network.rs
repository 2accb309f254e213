//! Topology, per-hop link budgets and modulation parameters.
//!
//! All SNRs in this module are linear. Conversion from dB happens at the CLI
//! boundary through [`db_to_linear`].

use std::fmt;

use crate::error::{Error, Result};
use crate::special::MAX_EXACT_BINOMIAL;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Relay clusters between source and destination, `[L_1, ..., L_N]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClusterTopology {
    cluster_sizes: Vec<u32>,
}

impl ClusterTopology {
    pub fn new(cluster_sizes: Vec<u32>) -> Result<Self> {
        if cluster_sizes.is_empty() {
            return Err(Error::Topology(
                "at least one relay cluster is required".into(),
            ));
        }
        if let Some(&bad) = cluster_sizes
            .iter()
            .find(|&&l| l == 0 || l > MAX_EXACT_BINOMIAL)
        {
            return Err(Error::Topology(format!(
                "cluster size {bad} outside 1..={MAX_EXACT_BINOMIAL}"
            )));
        }
        Ok(Self { cluster_sizes })
    }

    pub fn cluster_sizes(&self) -> &[u32] {
        &self.cluster_sizes
    }

    /// Number of relay clusters `N`.
    pub fn clusters(&self) -> usize {
        self.cluster_sizes.len()
    }

    /// Number of hops, `N + 1`.
    pub fn hops(&self) -> usize {
        self.cluster_sizes.len() + 1
    }

    pub fn total_relays(&self) -> u32 {
        self.cluster_sizes.iter().sum()
    }

    /// Smallest cluster size `L_m`; sets the diversity order.
    pub fn min_cluster_size(&self) -> u32 {
        *self.cluster_sizes.iter().min().expect("non-empty")
    }

    /// Zero-based indices of the clusters whose size equals `L_m`.
    pub fn min_clusters(&self) -> Vec<usize> {
        let lm = self.min_cluster_size();
        self.cluster_sizes
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == lm)
            .map(|(i, _)| i)
            .collect()
    }
}

impl fmt::Display for ClusterTopology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, l) in self.cluster_sizes.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "]")
    }
}

/// Mean SNR of every hop plus the mean SNR of the direct source–destination link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    hop_avg_snr: Vec<f64>,
    direct_avg_snr: f64,
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}

fn check_friis_inputs(n_clusters: usize, delta: f64, gamma_d: f64) -> Result<()> {
    if n_clusters == 0 {
        return Err(Error::Topology(
            "at least one relay cluster is required".into(),
        ));
    }
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "delta",
            value: delta,
            reason: "path-loss exponent must be finite and non-negative",
        });
    }
    check_positive("gamma_d", gamma_d)
}

impl LinkBudget {
    /// Budget from raw per-hop mean SNRs.
    pub fn explicit(hop_avg_snr: Vec<f64>, direct_avg_snr: f64) -> Result<Self> {
        if hop_avg_snr.len() < 2 {
            return Err(Error::Budget(
                "need at least two hops (one relay cluster)".into(),
            ));
        }
        if let Some(&bad) = hop_avg_snr.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::Budget(format!(
                "hop mean SNR {bad} is not positive and finite"
            )));
        }
        check_positive("gamma_d", direct_avg_snr)?;
        Ok(Self {
            hop_avg_snr,
            direct_avg_snr,
        })
    }

    /// Terminals placed at `d_k = 2k / ((N+1)(N+2))` of the source–destination
    /// distance, so hop `k` sees `((N+1)(N+2)/(2k))^delta * gamma_d`.
    pub fn unbalanced(n_clusters: usize, delta: f64, gamma_d: f64) -> Result<Self> {
        check_friis_inputs(n_clusters, delta, gamma_d)?;
        let span = ((n_clusters + 1) * (n_clusters + 2)) as f64;
        let hops = (1..=n_clusters + 1)
            .map(|k| (span / (2.0 * k as f64)).powf(delta) * gamma_d)
            .collect();
        Self::explicit(hops, gamma_d)
    }

    /// Equidistant terminals: every hop sees `(N+1)^delta * gamma_d`.
    pub fn balanced(n_clusters: usize, delta: f64, gamma_d: f64) -> Result<Self> {
        check_friis_inputs(n_clusters, delta, gamma_d)?;
        let per_hop = ((n_clusters + 1) as f64).powf(delta) * gamma_d;
        Self::explicit(vec![per_hop; n_clusters + 1], gamma_d)
    }

    pub fn hop_avg_snr(&self) -> &[f64] {
        &self.hop_avg_snr
    }

    pub fn direct_avg_snr(&self) -> f64 {
        self.direct_avg_snr
    }

    pub fn hops(&self) -> usize {
        self.hop_avg_snr.len()
    }

    pub(crate) fn check_against(&self, topology: &ClusterTopology) -> Result<()> {
        if self.hop_avg_snr.len() == topology.hops() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                topology_hops: topology.hops(),
                budget_hops: self.hop_avg_snr.len(),
            })
        }
    }
}

/// Effective per-cluster mean SNRs `Γ^t_1..Γ^t_N`.
///
/// The last cluster's relay sees the minimum of its incoming and outgoing
/// exponential links, whose mean is the harmonic combination of the two.
pub fn effective_gammas(topology: &ClusterTopology, budget: &LinkBudget) -> Result<Vec<f64>> {
    budget.check_against(topology)?;
    let g = budget.hop_avg_snr();
    let n = topology.clusters();
    let mut out = g[..n].to_vec();
    let (a, b) = (g[n - 1], g[n]);
    out[n - 1] = a * b / (a + b);
    Ok(out)
}

/// SER family parameters: `SER = 2 alpha E[Q(sqrt(2 beta gamma))]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationParams {
    pub name: String,
    pub alpha: f64,
    pub beta: f64,
    /// False for the nearest-neighbour approximations (MPSK, MQAM).
    pub exact: bool,
}

impl ModulationParams {
    pub fn new(name: impl Into<String>, alpha: f64, beta: f64, exact: bool) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_positive("beta", beta)?;
        Ok(Self {
            name: name.into(),
            alpha,
            beta,
            exact,
        })
    }

    pub fn bpsk() -> Self {
        Self {
            name: "BPSK".into(),
            alpha: 0.5,
            beta: 1.0,
            exact: true,
        }
    }

    pub fn bfsk() -> Self {
        Self {
            name: "BFSK".into(),
            alpha: 0.5,
            beta: 0.5,
            exact: true,
        }
    }

    /// Look up a modulation by family name. M-ary families need `order >= 2`.
    pub fn from_name(name: &str, order: Option<u32>) -> Result<Self> {
        let upper = name.trim().to_ascii_uppercase();
        let m_ary = |fam: &str| -> Result<f64> {
            match order {
                None => Err(Error::InvalidOrder {
                    name: fam.into(),
                    reason: "an order M is required".into(),
                }),
                Some(m) if m < 2 => Err(Error::InvalidOrder {
                    name: fam.into(),
                    reason: format!("M = {m} must be at least 2"),
                }),
                Some(m) => Ok(f64::from(m)),
            }
        };
        match upper.as_str() {
            "BPSK" => Ok(Self::bpsk()),
            "BFSK" => Ok(Self::bfsk()),
            "MPSK" => {
                let m = m_ary("MPSK")?;
                let s = (std::f64::consts::PI / m).sin();
                Ok(Self {
                    name: format!("{}PSK", m),
                    alpha: 1.0,
                    beta: s * s,
                    exact: false,
                })
            }
            "MQAM" => {
                let m = m_ary("MQAM")?;
                Ok(Self {
                    name: format!("{}QAM", m),
                    alpha: 2.0 * (1.0 - 1.0 / m.sqrt()),
                    beta: 3.0 / (2.0 * (m - 1.0)),
                    exact: false,
                })
            }
            "MPAM" => {
                let m = m_ary("MPAM")?;
                Ok(Self {
                    name: format!("{}PAM", m),
                    alpha: (m - 1.0) / m,
                    beta: 3.0 / (m * m - 1.0),
                    exact: true,
                })
            }
            _ => Err(Error::UnknownModulation(name.to_string())),
        }
    }
}
