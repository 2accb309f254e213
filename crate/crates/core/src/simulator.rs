//! Monte Carlo of the ad-hoc routing protocol over Rayleigh links.
//!
//! Samples are split into fixed-size chunks. Chunk `c` draws from a ChaCha8
//! stream keyed by `(seed, c)`, and chunk statistics are merged in chunk order,
//! so the result does not depend on how many workers run the chunks.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::analytic::OutageThreshold;
use crate::error::{Error, Result};
use crate::network::{ClusterTopology, LinkBudget, ModulationParams};
use crate::special::erfc;

pub const DEFAULT_CHUNK_SIZE: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Outage,
    Capacity,
    Ser,
    SnrGain,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Outage,
        Metric::Capacity,
        Metric::Ser,
        Metric::SnrGain,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Outage => "outage",
            Metric::Capacity => "capacity",
            Metric::Ser => "ser",
            Metric::SnrGain => "snr_gain",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub sample_count: u64,
    pub seed: u64,
    pub chunk_size: u64,
    pub metrics: Vec<Metric>,
    pub threshold: Option<OutageThreshold>,
    pub modulation: Option<ModulationParams>,
    pub mu: Option<f64>,
}

impl SimulationConfig {
    pub fn new(sample_count: u64, seed: u64) -> Self {
        Self {
            sample_count,
            seed,
            chunk_size: DEFAULT_CHUNK_SIZE.min(sample_count.max(1)),
            metrics: Vec::new(),
            threshold: None,
            modulation: None,
            mu: None,
        }
    }

    pub fn with_outage(mut self, threshold: OutageThreshold) -> Self {
        self.metrics.push(Metric::Outage);
        self.threshold = Some(threshold);
        self
    }

    pub fn with_capacity(mut self) -> Self {
        self.metrics.push(Metric::Capacity);
        self
    }

    pub fn with_ser(mut self, modulation: ModulationParams) -> Self {
        self.metrics.push(Metric::Ser);
        self.modulation = Some(modulation);
        self
    }

    pub fn with_snr_gain(mut self, mu: f64) -> Self {
        self.metrics.push(Metric::SnrGain);
        self.mu = Some(mu);
        self
    }

    pub fn with_chunk_size(mut self, chunk_size: u64) -> Self {
        self.chunk_size = chunk_size;
        self
    }

    fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::SimulationConfig(m.to_string()));
        if self.sample_count == 0 {
            return fail("sample_count must be at least 1");
        }
        if self.chunk_size == 0 || self.chunk_size > self.sample_count {
            return fail("chunk_size must be in 1..=sample_count");
        }
        for m in &self.metrics {
            match m {
                Metric::Outage if self.threshold.is_none() => {
                    return fail("outage needs a rate threshold")
                }
                Metric::Ser if self.modulation.is_none() => return fail("ser needs a modulation"),
                Metric::SnrGain => match self.mu {
                    Some(mu) if mu >= 0.0 && mu.is_finite() => {}
                    _ => return fail("snr_gain needs a finite mu >= 0"),
                },
                _ => {}
            }
        }
        Ok(())
    }
}

/// Point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricEstimate {
    pub value: f64,
    /// Sample standard deviation over `sqrt(n)`.
    pub std_error: f64,
    pub n: u64,
}

/// Running mean and centred second moment, mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        self.mean += d * w;
        self.m2 += other.m2 + d * d * self.n as f64 * w;
        self.n = n;
    }

    fn estimate(&self) -> MetricEstimate {
        let std_error = if self.n > 1 {
            (self.m2.max(0.0) / (self.n - 1) as f64 / self.n as f64).sqrt()
        } else {
            0.0
        };
        MetricEstimate {
            value: self.mean,
            std_error,
            n: self.n,
        }
    }
}

/// Exponential variate with the given mean from one 64-bit draw.
/// The uniform lies strictly inside (0, 1), so the result is finite and positive.
fn exponential(rng: &mut impl RngCore, mean: f64) -> f64 {
    let u = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
    -mean * u.ln()
}

/// Index of the largest value; ties go to the lowest index.
fn argmax(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// One draw of every link the routing algorithm inspects, and its decisions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoutingRealization {
    /// `per_hop_links[i]`: SNRs from the node selected at hop `i` to each
    /// candidate of cluster `i + 1`.
    pub per_hop_links: Vec<Vec<f64>>,
    /// SNRs from each candidate of the last cluster to the destination.
    pub last_hop_links: Vec<f64>,
    /// Zero-based index of the selected relay in each cluster.
    pub selected: Vec<usize>,
    /// Selected per-cluster SNR `γ^i_t`.
    pub per_hop_snr: Vec<f64>,
    /// `γ_t = min_i γ^i_t`.
    pub end_to_end_snr: f64,
}

impl RoutingRealization {
    pub fn draw(rng: &mut impl RngCore, topology: &ClusterTopology, budget: &LinkBudget) -> Self {
        let mut r = Self::default();
        r.redraw(rng, topology, budget);
        r
    }

    /// Resample in place, reusing the buffers.
    pub fn redraw(
        &mut self,
        rng: &mut impl RngCore,
        topology: &ClusterTopology,
        budget: &LinkBudget,
    ) {
        let sizes = topology.cluster_sizes();
        let gammas = budget.hop_avg_snr();
        let n = sizes.len();
        self.per_hop_links.resize_with(n, Vec::new);
        self.selected.clear();
        self.per_hop_snr.clear();

        for (hop, links) in self.per_hop_links.iter_mut().enumerate() {
            links.clear();
            links.extend((0..sizes[hop]).map(|_| exponential(rng, gammas[hop])));
        }
        self.last_hop_links.clear();
        self.last_hop_links
            .extend((0..sizes[n - 1]).map(|_| exponential(rng, gammas[n])));

        for links in &self.per_hop_links[..n - 1] {
            let (i, v) = argmax(links.iter().copied());
            self.selected.push(i);
            self.per_hop_snr.push(v);
        }
        let last = &self.per_hop_links[n - 1];
        let (i, v) = argmax(
            last.iter()
                .zip(&self.last_hop_links)
                .map(|(&a, &b)| a.min(b)),
        );
        self.selected.push(i);
        self.per_hop_snr.push(v);
        self.end_to_end_snr = self
            .per_hop_snr
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
    }
}

/// Draw one routing realization.
pub fn draw_realization(
    rng: &mut impl RngCore,
    topology: &ClusterTopology,
    budget: &LinkBudget,
) -> RoutingRealization {
    RoutingRealization::draw(rng, topology, budget)
}

/// RNG for one chunk of a run.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

fn chunk_bounds(config: &SimulationConfig) -> Vec<(u64, u64)> {
    let chunks = config.sample_count.div_ceil(config.chunk_size);
    (0..chunks)
        .map(|c| {
            let start = c * config.chunk_size;
            (
                c,
                (start + config.chunk_size).min(config.sample_count) - start,
            )
        })
        .collect()
}

/// Per-sample contribution of each requested metric.
struct Observer {
    metrics: Vec<Metric>,
    clusters: usize,
    rate_threshold: f64,
    alpha: f64,
    beta: f64,
    mu: f64,
}

impl Observer {
    fn new(config: &SimulationConfig, topology: &ClusterTopology) -> Self {
        let mut metrics = config.metrics.clone();
        metrics.sort();
        metrics.dedup();
        let (alpha, beta) = config
            .modulation
            .as_ref()
            .map_or((0.0, 0.0), |m| (m.alpha, m.beta));
        Self {
            metrics,
            clusters: topology.clusters(),
            rate_threshold: config.threshold.map_or(0.0, |t| t.rate_threshold()),
            alpha,
            beta,
            mu: config.mu.unwrap_or(0.0),
        }
    }

    fn observe(&self, metric: Metric, gamma_t: f64, gamma_d: f64) -> f64 {
        let rate = || gamma_t.ln_1p() / LN_2 / (self.clusters + 1) as f64;
        match metric {
            Metric::Outage => f64::from(u8::from(rate() < self.rate_threshold)),
            Metric::Capacity => rate(),
            // 2α Q(sqrt(2βγ)) = α erfc(sqrt(βγ))
            Metric::Ser => self.alpha * erfc((self.beta * gamma_t).sqrt()),
            Metric::SnrGain => f64::from(u8::from(gamma_t > self.mu * gamma_d)),
        }
    }
}

/// Estimate the requested metrics. Runs on the current rayon pool.
pub fn estimate(
    topology: &ClusterTopology,
    budget: &LinkBudget,
    config: &SimulationConfig,
) -> Result<BTreeMap<Metric, MetricEstimate>> {
    config.validate()?;
    budget.check_against(topology)?;
    let observer = Observer::new(config, topology);
    let chunks: Vec<Vec<Moments>> = chunk_bounds(config)
        .into_par_iter()
        .map(|(chunk, len)| {
            let mut rng = chunk_rng(config.seed, chunk);
            let mut moments = vec![Moments::default(); observer.metrics.len()];
            let mut realization = RoutingRealization::default();
            for _ in 0..len {
                realization.redraw(&mut rng, topology, budget);
                let gamma_d = exponential(&mut rng, budget.direct_avg_snr());
                let gamma_t = realization.end_to_end_snr;
                for (m, acc) in observer.metrics.iter().zip(moments.iter_mut()) {
                    acc.push(observer.observe(*m, gamma_t, gamma_d));
                }
            }
            moments
        })
        .collect();

    let mut total = vec![Moments::default(); observer.metrics.len()];
    for chunk in &chunks {
        for (acc, part) in total.iter_mut().zip(chunk) {
            acc.merge(part);
        }
    }
    Ok(observer
        .metrics
        .iter()
        .zip(&total)
        .map(|(m, acc)| (*m, acc.estimate()))
        .collect())
}

/// `count` end-to-end SNR samples drawn exactly as [`estimate`] draws them.
pub fn sample_end_to_end_snr(
    topology: &ClusterTopology,
    budget: &LinkBudget,
    count: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    let config = SimulationConfig::new(count, seed);
    config.validate()?;
    budget.check_against(topology)?;
    let chunks: Vec<Vec<f64>> = chunk_bounds(&config)
        .into_par_iter()
        .map(|(chunk, len)| {
            let mut rng = chunk_rng(seed, chunk);
            let mut realization = RoutingRealization::default();
            (0..len)
                .map(|_| {
                    realization.redraw(&mut rng, topology, budget);
                    let _gamma_d = exponential(&mut rng, budget.direct_avg_snr());
                    realization.end_to_end_snr
                })
                .collect()
        })
        .collect();
    Ok(chunks.concat())
}

/// Two-sided Kolmogorov–Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value `P(K > sqrt(n) D)` of the Kolmogorov distribution.
pub fn ks_p_value(statistic: f64, n: usize) -> f64 {
    let n = n as f64;
    // Stephens' small-sample correction
    let t = statistic * (n.sqrt() + 0.12 + 0.11 / n.sqrt());
    if t < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = f64::from(k);
        let term = (-2.0 * k * k * t * t).exp();
        sum += if k as u32 % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
