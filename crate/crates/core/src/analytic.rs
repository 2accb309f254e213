//! Closed-form distribution and performance metrics of the end-to-end SNR.
//!
//! The end-to-end SNR `γ_t` is the minimum over clusters of the per-cluster
//! selected SNR. Its CDF has two equivalent forms:
//!
//! * the product form `F(x) = 1 - Π_i [1 - (1 - e^{-x/Γ^t_i})^{L_i}]`, which is
//!   free of cancellation and is what [`cdf_product`] evaluates, and
//! * the expanded multi-index sum `F(x) = 1 - Σ w_j e^{-K_j x}` over every index
//!   tuple `j = (j_1..j_N)` with `1 <= j_i <= L_i`, signed weight
//!   `w_j = (-1)^{Σ j_i + N} Π C(L_i, j_i)` and decay `K_j = Σ j_i / Γ^t_i`.
//!
//! Capacity, SER and the SNR-gain probability only have expanded forms, so
//! they go through [`Expansion`], which accumulates in descending `|w|` order
//! with compensated summation and refuses topologies whose total relay count
//! exceeds [`EXPANSION_WINDOW`].

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::network::{effective_gammas, ClusterTopology, LinkBudget, ModulationParams};
use crate::special::{binom, exp_e1, gamma_half_integer};

/// Largest `Σ L_i` accepted by the expanded sums.
pub const EXPANSION_WINDOW: u32 = 30;

/// Most negative density value treated as roundoff and clamped to zero.
pub const DENSITY_FLOOR: f64 = -1e-9;

/// Above this `K/β` the reduced SER kernel series converges too slowly.
const REDUCED_KERNEL_LIMIT: f64 = 0.9;

/// One index tuple of the expanded sums.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiIndexTerm {
    pub indices: Vec<u32>,
    /// `(-1)^{Σ j_i + N} Π C(L_i, j_i)`, the sign used by the density.
    pub weight: i64,
    /// `K = Σ j_i / Γ^t_i`, always positive.
    pub k_factor: f64,
}

/// Target rate `R_th` in bit/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageThreshold {
    rate_threshold: f64,
}

impl OutageThreshold {
    pub fn new(rate_threshold: f64) -> Result<Self> {
        if rate_threshold.is_finite() && rate_threshold >= 0.0 {
            Ok(Self { rate_threshold })
        } else {
            Err(Error::InvalidParameter {
                name: "rate_threshold",
                value: rate_threshold,
                reason: "must be finite and non-negative",
            })
        }
    }

    pub fn rate_threshold(&self) -> f64 {
        self.rate_threshold
    }

    /// SNR threshold `A = 2^{(N+1) R_th} - 1` for a network with `n_clusters` clusters.
    pub fn snr_threshold(&self, n_clusters: usize) -> f64 {
        ((n_clusters + 1) as f64 * self.rate_threshold * LN_2).exp_m1()
    }
}

/// SER value together with whether the modulation formula is exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolErrorRate {
    pub value: f64,
    pub exact: bool,
}

/// Residual of the vanishing-moment identity together with its magnitude scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentResidual {
    pub residual: f64,
    /// `Σ |Π C(L_i, j_i) K^z|`, the size of the cancelling terms.
    pub scale: f64,
}

impl MomentResidual {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.residual.abs()
        } else {
            self.residual.abs() / self.scale
        }
    }
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// `ln(1 - e^a)` for `a <= 0`, accurate across the whole range.
fn log1m_exp(a: f64) -> f64 {
    if a > -LN_2 {
        (-a.exp_m1()).ln()
    } else {
        (-a.exp()).ln_1p()
    }
}

/// Product-form CDF of the end-to-end SNR.
#[derive(Debug, Clone)]
pub struct ProductForm {
    gammas: Vec<f64>,
    sizes: Vec<u32>,
}

impl ProductForm {
    pub fn new(topology: &ClusterTopology, budget: &LinkBudget) -> Result<Self> {
        Ok(Self {
            gammas: effective_gammas(topology, budget)?,
            sizes: topology.cluster_sizes().to_vec(),
        })
    }

    /// `ln P(γ_t > x) = Σ_i ln(1 - (1 - e^{-x/Γ^t_i})^{L_i})`.
    fn log_survival(&self, x: f64) -> f64 {
        self.gammas
            .iter()
            .zip(&self.sizes)
            .map(|(&g, &l)| log1m_exp(f64::from(l) * log1m_exp(-x / g)))
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        -self.log_survival(x).exp_m1()
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        self.log_survival(x).exp()
    }

    pub fn effective_gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn cluster_sizes(&self) -> &[u32] {
        &self.sizes
    }
}

fn check_x(x: f64) -> Result<()> {
    if x >= 0.0 && !x.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain {
            function: "end-to-end SNR distribution",
            value: x,
        })
    }
}

/// CDF of `γ_t` from the product form; stable for every `x >= 0`.
pub fn cdf_product(x: f64, topology: &ClusterTopology, budget: &LinkBudget) -> Result<f64> {
    check_x(x)?;
    Ok(ProductForm::new(topology, budget)?.cdf(x))
}

/// `1 - F(x)` from the product form, accurate deep in the upper tail.
pub fn survival_product(x: f64, topology: &ClusterTopology, budget: &LinkBudget) -> Result<f64> {
    check_x(x)?;
    Ok(ProductForm::new(topology, budget)?.survival(x))
}

/// All multi-index terms of a network, ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Expansion {
    clusters: usize,
    min_cluster: u32,
    terms: Vec<MultiIndexTerm>,
}

impl Expansion {
    pub fn new(topology: &ClusterTopology, budget: &LinkBudget) -> Result<Self> {
        let gammas = effective_gammas(topology, budget)?;
        let total = topology.total_relays();
        if total > EXPANSION_WINDOW {
            return Err(Error::CancellationWindow {
                total,
                limit: EXPANSION_WINDOW,
            });
        }
        let sizes = topology.cluster_sizes();
        let n = sizes.len();
        let rows = sizes
            .iter()
            .map(|&l| (0..=l).map(|j| binom(l, j).map(|b| b as i64)).collect())
            .collect::<Result<Vec<Vec<i64>>>>()?;

        let count: usize = sizes.iter().map(|&l| l as usize).product();
        let mut terms = Vec::with_capacity(count);
        let mut idx = vec![1u32; n];
        'odometer: loop {
            let mut magnitude = 1i64;
            let mut parity = n as u32;
            let mut k = 0.0;
            for (i, &j) in idx.iter().enumerate() {
                magnitude *= rows[i][j as usize];
                parity += j;
                k += f64::from(j) / gammas[i];
            }
            let weight = if parity.is_multiple_of(2) {
                magnitude
            } else {
                -magnitude
            };
            terms.push(MultiIndexTerm {
                indices: idx.clone(),
                weight,
                k_factor: k,
            });

            let mut pos = 0;
            loop {
                idx[pos] += 1;
                if idx[pos] <= sizes[pos] {
                    break;
                }
                idx[pos] = 1;
                pos += 1;
                if pos == n {
                    break 'odometer;
                }
            }
        }
        terms.sort_by_key(|t| std::cmp::Reverse(t.weight.unsigned_abs()));

        Ok(Self {
            clusters: n,
            min_cluster: topology.min_cluster_size(),
            terms,
        })
    }

    pub fn terms(&self) -> &[MultiIndexTerm] {
        &self.terms
    }

    fn sum_with(&self, init: f64, kernel: impl Fn(f64) -> f64) -> f64 {
        let mut acc = CompensatedSum::default();
        acc.add(init);
        for term in &self.terms {
            acc.add(term.weight as f64 * kernel(term.k_factor));
        }
        acc.value()
    }

    /// `F(x) = 1 - Σ w e^{-Kx}`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sum_with(1.0, |k| -(-k * x).exp()).clamp(0.0, 1.0)
    }

    /// `f(x) = Σ w K e^{-Kx}`, clamped at zero inside the roundoff floor.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        let value = self.sum_with(0.0, |k| k * (-k * x).exp());
        if value >= 0.0 {
            Ok(value)
        } else if value >= DENSITY_FLOOR {
            Ok(0.0)
        } else {
            Err(Error::NegativeDensity { x, value })
        }
    }

    /// Ergodic capacity in bit/s/Hz with the half-duplex `1/(N+1)` pre-log.
    pub fn ergodic_capacity(&self) -> Result<f64> {
        let mut acc = CompensatedSum::default();
        for term in &self.terms {
            acc.add(term.weight as f64 * exp_e1(term.k_factor)?);
        }
        let scale = 1.0 / ((self.clusters + 1) as f64 * LN_2);
        Ok((acc.value() * scale).max(0.0))
    }

    /// `α Σ w (1 - sqrt(β / (β + K)))`.
    ///
    /// When every `K/β` is small the kernel is replaced by its Taylor tail
    /// beyond degree `L_m - 1`; the dropped polynomial part sums to zero by
    /// the vanishing-moment identity, so the value is unchanged while the
    /// `O(K)`-sized cancelling terms disappear.
    pub fn ser(&self, modulation: &ModulationParams) -> SymbolErrorRate {
        let beta = modulation.beta;
        let t_max = self
            .terms
            .iter()
            .map(|t| t.k_factor / beta)
            .fold(0.0, f64::max);
        let order = self.min_cluster;
        let sum = if order >= 2 && t_max < REDUCED_KERNEL_LIMIT {
            self.sum_with(0.0, |k| ser_kernel_tail(k / beta, order))
        } else {
            self.sum_with(0.0, |k| ser_kernel(k / beta))
        };
        SymbolErrorRate {
            value: modulation.alpha * sum,
            exact: modulation.exact,
        }
    }

    /// `Ω(μ) = Σ w / (K μ Γ_d + 1)`.
    pub fn snr_gain(&self, mu: f64, gamma_d: f64) -> f64 {
        self.sum_with(0.0, |k| 1.0 / (k * mu * gamma_d + 1.0))
    }

    /// `Σ (-1)^{Σ j_i} Π C(L_i, j_i) K^z`, zero for `1 <= z <= L_m - 1`.
    pub fn moment_residual(&self, z: u32) -> Result<MomentResidual> {
        let max = self.min_cluster.saturating_sub(1);
        if z < 1 || z > max {
            return Err(Error::MomentOrder { z, max });
        }
        let sign = if self.clusters.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        let mut acc = CompensatedSum::default();
        let mut scale = 0.0;
        for term in &self.terms {
            let v = sign * term.weight as f64 * term.k_factor.powi(z as i32);
            acc.add(v);
            scale += v.abs();
        }
        Ok(MomentResidual {
            residual: acc.value(),
            scale,
        })
    }
}

/// `1 - (1 + t)^{-1/2}`.
fn ser_kernel(t: f64) -> f64 {
    -(-0.5 * t.ln_1p()).exp_m1()
}

/// `1 - (1 + t)^{-1/2}` minus its Taylor polynomial of degree `order - 1`.
/// Requires `0 <= t < 1`.
fn ser_kernel_tail(t: f64, order: u32) -> f64 {
    // (1 + t)^{-1/2} = Σ c_n t^n, c_n = c_{n-1} (1 - 2n) / (2n)
    let coeff_step = |n: u32| -f64::from(2 * n - 1) / f64::from(2 * n);
    let mut c = 1.0;
    for n in 1..order {
        c *= coeff_step(n);
    }
    let mut power = t.powi(order as i32 - 1);
    let mut sum = 0.0;
    let mut n = order;
    loop {
        c *= coeff_step(n);
        power *= t;
        let term = c * power;
        sum += term;
        if term.abs() <= f64::EPSILON * 0.125 * sum.abs() || n > 4000 {
            break;
        }
        n += 1;
    }
    -sum
}

/// Expanded-sum CDF; agrees with [`cdf_product`] up to roundoff.
pub fn cdf_expanded(x: f64, topology: &ClusterTopology, budget: &LinkBudget) -> Result<f64> {
    check_x(x)?;
    Ok(Expansion::new(topology, budget)?.cdf(x))
}

/// Density of the end-to-end SNR.
pub fn pdf(x: f64, topology: &ClusterTopology, budget: &LinkBudget) -> Result<f64> {
    check_x(x)?;
    Expansion::new(topology, budget)?.pdf(x)
}

pub fn ergodic_capacity(topology: &ClusterTopology, budget: &LinkBudget) -> Result<f64> {
    Expansion::new(topology, budget)?.ergodic_capacity()
}

/// Outage probability `P(γ_t < A)`, evaluated on the product form.
pub fn outage_probability(
    topology: &ClusterTopology,
    budget: &LinkBudget,
    threshold: &OutageThreshold,
) -> Result<f64> {
    let a = threshold.snr_threshold(topology.clusters());
    Ok(ProductForm::new(topology, budget)?.cdf(a))
}

/// Outage probability through the expanded sum.
pub fn outage_probability_expanded(
    topology: &ClusterTopology,
    budget: &LinkBudget,
    threshold: &OutageThreshold,
) -> Result<f64> {
    let a = threshold.snr_threshold(topology.clusters());
    Ok(Expansion::new(topology, budget)?.cdf(a))
}

/// Average symbol error rate. For the approximate modulations (MPSK, MQAM) the
/// raw formula value is returned unclamped and tagged `exact = false`.
pub fn ser(
    topology: &ClusterTopology,
    budget: &LinkBudget,
    modulation: &ModulationParams,
) -> Result<SymbolErrorRate> {
    Ok(Expansion::new(topology, budget)?.ser(modulation))
}

/// Probability that the relayed SNR exceeds `mu` times the direct-link SNR.
pub fn prob_snr_gain(topology: &ClusterTopology, budget: &LinkBudget, mu: f64) -> Result<f64> {
    if !(mu >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "mu",
            value: mu,
            reason: "must be non-negative",
        });
    }
    let expansion = Expansion::new(topology, budget)?;
    Ok(expansion
        .snr_gain(mu, budget.direct_avg_snr())
        .clamp(0.0, 1.0))
}

/// `Σ_{i in M} (Γ^t_i)^{-L_m}` over the smallest clusters.
fn dominant_inverse_moment(topology: &ClusterTopology, budget: &LinkBudget) -> Result<f64> {
    let gammas = effective_gammas(topology, budget)?;
    let lm = topology.min_cluster_size() as i32;
    Ok(topology
        .min_clusters()
        .into_iter()
        .map(|i| gammas[i].recip().powi(lm))
        .sum())
}

/// High-SNR SER: `α Σ_{i∈M} (Γ^t_i)^{-L_m} Γ(L_m + 1/2) / (sqrt(π) β^{L_m})`.
pub fn asymptotic_ser(
    topology: &ClusterTopology,
    budget: &LinkBudget,
    modulation: &ModulationParams,
) -> Result<f64> {
    let lm = topology.min_cluster_size();
    let inverse = dominant_inverse_moment(topology, budget)?;
    let g = gamma_half_integer(lm)?;
    Ok(modulation.alpha * inverse * g / (PI.sqrt() * modulation.beta.powi(lm as i32)))
}

/// High-SNR outage: `Σ_{i∈M} (Γ^t_i)^{-L_m} A^{L_m}`.
pub fn asymptotic_outage(
    topology: &ClusterTopology,
    budget: &LinkBudget,
    threshold: &OutageThreshold,
) -> Result<f64> {
    let lm = topology.min_cluster_size() as i32;
    let a = threshold.snr_threshold(topology.clusters());
    Ok(dominant_inverse_moment(topology, budget)? * a.powi(lm))
}

pub fn moment_identity_residual(
    topology: &ClusterTopology,
    budget: &LinkBudget,
    z: u32,
) -> Result<MomentResidual> {
    Expansion::new(topology, budget)?.moment_residual(z)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    fn net(sizes: &[u32], gammas: &[f64], gamma_d: f64) -> (ClusterTopology, LinkBudget) {
        (
            ClusterTopology::new(sizes.to_vec()).unwrap(),
            LinkBudget::explicit(gammas.to_vec(), gamma_d).unwrap(),
        )
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn enumeration_is_exhaustive() {
        let (t, b) = net(&[3, 2, 4], &[5.0, 7.0, 2.0, 9.0], 1.0);
        let e = Expansion::new(&t, &b).unwrap();
        assert_eq!(e.terms().len(), 24);
        let mut seen: Vec<_> = e.terms().iter().map(|t| t.indices.clone()).collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 24);
        assert!(e.terms().iter().all(|t| t.k_factor > 0.0));
        assert!(e
            .terms()
            .windows(2)
            .all(|w| w[0].weight.abs() >= w[1].weight.abs()));
        // Σ w = 1 because F(0) = 0
        let total: i64 = e.terms().iter().map(|t| t.weight).sum();
        assert_eq!(total, 1);
    }

    #[test]
    fn window_is_enforced() {
        let (t, b) = net(&[16, 15], &[1.0, 1.0, 1.0], 1.0);
        assert!(matches!(
            Expansion::new(&t, &b),
            Err(Error::CancellationWindow { total: 31, .. })
        ));
        // the product form has no such limit
        assert!(cdf_product(1.0, &t, &b).is_ok());
    }

    #[test]
    fn dual_hop_single_relay() {
        let (t, b) = net(&[1], &[10.0, 10.0], 1.0);
        assert_eq!(cdf_product(0.0, &t, &b).unwrap(), 0.0);
        let f5 = cdf_product(5.0, &t, &b).unwrap();
        assert!(rel(f5, 1.0 - (-1.0f64).exp()) < 1e-15);
        let fe = cdf_expanded(5.0, &t, &b).unwrap();
        assert!(rel(fe, 1.0 - (-1.0f64).exp()) < 1e-15);
        assert!(rel(pdf(0.0, &t, &b).unwrap(), 0.2) < 1e-15);

        let th = OutageThreshold::new(0.5).unwrap();
        assert_eq!(th.snr_threshold(1), 1.0);
        let p = outage_probability(&t, &b, &th).unwrap();
        assert!((p - 0.181_269_246_922_018_15).abs() < 1e-12);

        let c = ergodic_capacity(&t, &b).unwrap();
        assert!(rel(c, 1.077_223_415_758_444_8) < 1e-10);

        let s = ser(&t, &b, &ModulationParams::bpsk()).unwrap();
        assert!(s.exact);
        assert!(rel(s.value, 0.043_564_535_412_361_563) < 1e-12);

        let omega = prob_snr_gain(&t, &b, 1.0).unwrap();
        assert!(rel(omega, 1.0 / 1.2) < 1e-14);
    }

    #[test]
    fn boundary_values() {
        let (t, b) = net(&[3, 2], &[40.0, 25.0, 12.0], 3.0);
        assert_eq!(cdf_expanded(0.0, &t, &b).unwrap(), 0.0);
        assert!(cdf_product(1e9 * 40.0, &t, &b).unwrap() > 1.0 - 1e-12);
        assert_eq!(prob_snr_gain(&t, &b, 0.0).unwrap(), 1.0);
        assert!(prob_snr_gain(&t, &b, 1e12).unwrap() < 1e-9);
        let zero = OutageThreshold::new(0.0).unwrap();
        assert_eq!(outage_probability(&t, &b, &zero).unwrap(), 0.0);
        assert!(cdf_product(-1.0, &t, &b).is_err());
        assert!(pdf(-1.0, &t, &b).is_err());
        assert!(prob_snr_gain(&t, &b, -1.0).is_err());
        assert!(OutageThreshold::new(-0.1).is_err());
    }

    #[test]
    fn product_and_expanded_cdf_agree() {
        let (t, b) = net(&[2, 1], &[3.0, 8.0, 5.0], 1.0);
        let mut x = 0.0;
        while x < 60.0 {
            let p = cdf_product(x, &t, &b).unwrap();
            let e = cdf_expanded(x, &t, &b).unwrap();
            assert!((p - e).abs() < 1e-12, "x = {x}: {p} vs {e}");
            x += 0.37;
        }
    }

    #[test]
    fn density_matches_finite_differences() {
        let (t, b) = net(&[3, 2], &[6.0, 4.0, 9.0], 1.0);
        let pf = ProductForm::new(&t, &b).unwrap();
        let e = Expansion::new(&t, &b).unwrap();
        for x in [0.05, 0.3, 1.0, 2.5, 6.0, 15.0] {
            let h = 1e-4 * x;
            let fd = (pf.cdf(x + h) - pf.cdf(x - h)) / (2.0 * h);
            let f = e.pdf(x).unwrap();
            assert!(rel(f, fd) < 1e-5, "x = {x}: {f} vs {fd}");
        }
    }

    #[test]
    fn outage_expanded_matches_product() {
        let (t, b) = net(&[3, 3, 2], &[30.0, 12.0, 50.0, 7.0], 1.0);
        for r in [0.05, 0.3, 0.8, 1.5] {
            let th = OutageThreshold::new(r).unwrap();
            let p = outage_probability(&t, &b, &th).unwrap();
            let e = outage_probability_expanded(&t, &b, &th).unwrap();
            assert!((p - e).abs() < 1e-9);
        }
    }

    #[test]
    fn asymptotic_hand_instantiations() {
        // [2,1]: only the second cluster has L_m = 1
        let (t, b) = net(&[2, 1], &[100.0, 80.0, 20.0], 1.0);
        let gt2: f64 = 80.0 * 20.0 / 100.0;
        let m = ModulationParams::bpsk();
        let want = 0.5 * gt2.recip() * gamma_half_integer(1).unwrap() / PI.sqrt();
        assert!(rel(asymptotic_ser(&t, &b, &m).unwrap(), want) < 1e-14);

        // [3,2]: only cluster 2 counts
        let (t, b) = net(&[3, 2], &[100.0, 80.0, 20.0], 1.0);
        let th = OutageThreshold::new(0.3).unwrap();
        let a = th.snr_threshold(2);
        let want = (a / gt2).powi(2);
        assert!(rel(asymptotic_outage(&t, &b, &th).unwrap(), want) < 1e-14);
    }

    #[test]
    fn asymptotic_symmetric_collapse() {
        // equal cluster sizes and equal hop SNRs: (2^L + N - 1) (A/Γ)^L and
        // α (2^L + N - 1) Γ(L + 1/2) / (sqrt(π) (βΓ)^L)
        for (n, l) in [(2usize, 2u32), (3, 3), (5, 2), (1, 4)] {
            let gamma = 350.0;
            let (t, b) = net(&vec![l; n], &vec![gamma; n + 1], 1.0);
            let th = OutageThreshold::new(0.3).unwrap();
            let a = th.snr_threshold(n);
            let factor = 2f64.powi(l as i32) + n as f64 - 1.0;
            let want = factor * (a / gamma).powi(l as i32);
            assert!(rel(asymptotic_outage(&t, &b, &th).unwrap(), want) < 1e-13);

            let m = ModulationParams::bfsk();
            let want = m.alpha * factor * gamma_half_integer(l).unwrap()
                / (PI.sqrt() * (m.beta * gamma).powi(l as i32));
            assert!(rel(asymptotic_ser(&t, &b, &m).unwrap(), want) < 1e-13);
        }
    }

    #[test]
    fn moment_identity_vanishes() {
        let (t, b) = net(&[2, 2], &[3.0, 7.0, 11.0], 1.0);
        let r = moment_identity_residual(&t, &b, 1).unwrap();
        assert!(r.relative() < 1e-12, "{r:?}");
        let (t, b) = net(&[3, 3, 3], &[3.0, 0.7, 11.0, 2.0], 1.0);
        for z in 1..=2 {
            assert!(moment_identity_residual(&t, &b, z).unwrap().relative() < 1e-12);
        }
        let (t, b) = net(&[2, 1], &[3.0, 7.0, 11.0], 1.0);
        assert!(matches!(
            moment_identity_residual(&t, &b, 1),
            Err(Error::MomentOrder { .. })
        ));
        // first non-vanishing order is L_m
        let (t, b) = net(&[2, 2], &[3.0, 7.0, 11.0], 1.0);
        let e = Expansion::new(&t, &b).unwrap();
        assert!(e.moment_residual(2).is_err());
    }

    #[test]
    fn reduced_ser_kernel_matches_direct_at_moderate_snr() {
        // both routes are algebraically identical; compare where neither cancels badly
        let (t, b) = net(&[2, 3], &[4.0, 3.0, 5.0], 1.0);
        let e = Expansion::new(&t, &b).unwrap();
        let m = ModulationParams::new("test", 1.0, 20.0, true).unwrap();
        let reduced = e.sum_with(0.0, |k| ser_kernel_tail(k / m.beta, 2));
        let direct = e.sum_with(0.0, |k| ser_kernel(k / m.beta));
        assert!(rel(reduced, direct) < 1e-11, "{reduced} vs {direct}");
        assert!(rel(e.ser(&m).value, direct) < 1e-11);
    }

    #[test]
    fn ser_decreases_with_beta() {
        let (t, b) = net(&[2, 2], &[4.0, 3.0, 5.0], 1.0);
        let mut prev = f64::INFINITY;
        for beta in [0.1, 0.5, 1.0, 5.0, 50.0, 1e3, 1e6] {
            let m = ModulationParams::new("b", 0.5, beta, true).unwrap();
            let v = ser(&t, &b, &m).unwrap().value;
            assert!(v < prev && v >= 0.0);
            prev = v;
        }
        assert!(prev < 1e-6);
    }

    #[test]
    fn capacity_vanishes_with_snr() {
        let t = ClusterTopology::new(vec![3, 2]).unwrap();
        let mut prev = f64::INFINITY;
        for db in [10.0, 0.0, -10.0, -20.0, -30.0, -40.0] {
            let b = LinkBudget::unbalanced(2, 4.0, 10f64.powf(db / 10.0)).unwrap();
            let c = ergodic_capacity(&t, &b).unwrap();
            assert!(c < prev && c >= 0.0);
            prev = c;
        }
        assert!(prev < 1e-2);
    }
}
