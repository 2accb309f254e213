//! Scenario files: one `key = value` per line, `#` comments, comma lists,
//! SNR-like quantities in dB.
//!
//! ```text
//! # three-hop network, Friis placement
//! clusters = 3, 2
//! budget_model = unbalanced
//! delta = 4
//! gamma_d_sweep_db = 0, 30, 2
//! rate_threshold = 0.3
//! modulation = BPSK
//! outputs = outage, ser
//! ```
//!
//! `clusters` and `budget_model` are required; every other key has a default.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::analytic::OutageThreshold;
use crate::error::{Error, Result};
use crate::network::{db_to_linear, ClusterTopology, LinkBudget, ModulationParams};
use crate::simulator::Metric;

pub const KEYS: [&str; 11] = [
    "clusters",
    "budget_model",
    "delta",
    "explicit_gammas_db",
    "gamma_d_sweep_db",
    "rate_threshold",
    "modulation",
    "mu_sweep",
    "samples",
    "seed",
    "outputs",
];

pub const DEFAULT_SAMPLES: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetModel {
    Balanced,
    Unbalanced,
    /// Per-hop offsets in dB relative to the direct link.
    Explicit,
}

impl BudgetModel {
    pub fn name(&self) -> &'static str {
        match self {
            BudgetModel::Balanced => "balanced",
            BudgetModel::Unbalanced => "unbalanced",
            BudgetModel::Explicit => "explicit",
        }
    }
}

/// Inclusive arithmetic grid `start, start + step, ..., <= stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Sweep {
    pub fn new(start: f64, stop: f64, step: f64) -> std::result::Result<Self, String> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err("sweep bounds must be finite".into());
        }
        if step <= 0.0 {
            return Err(format!("step {step} must be positive"));
        }
        if stop < start {
            return Err(format!("stop {stop} is below start {start}"));
        }
        Ok(Self { start, stop, step })
    }

    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| self.start + i as f64 * self.step)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulationChoice {
    pub name: String,
    pub order: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub clusters: Vec<u32>,
    pub budget_model: BudgetModel,
    pub delta: f64,
    pub explicit_gammas_db: Option<Vec<f64>>,
    pub gamma_d_sweep_db: Sweep,
    pub rate_threshold: f64,
    pub modulation: ModulationChoice,
    /// Gain thresholds `μ` in dB; `None` evaluates `μ = 1` only.
    pub mu_sweep: Option<Sweep>,
    pub samples: u64,
    pub seed: u64,
    /// Requested metrics in canonical order.
    pub outputs: Vec<Metric>,
}

impl Scenario {
    /// Scenario with the default sweep, threshold, modulation and sampling.
    pub fn new(clusters: Vec<u32>, budget_model: BudgetModel) -> Self {
        Self {
            clusters,
            budget_model,
            delta: 4.0,
            explicit_gammas_db: None,
            gamma_d_sweep_db: Sweep {
                start: 0.0,
                stop: 30.0,
                step: 2.0,
            },
            rate_threshold: 0.3,
            modulation: ModulationChoice {
                name: "BPSK".into(),
                order: None,
            },
            mu_sweep: None,
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            outputs: Metric::ALL.to_vec(),
        }
    }

    pub fn topology(&self) -> Result<ClusterTopology> {
        ClusterTopology::new(self.clusters.clone())
    }

    pub fn budget(&self, gamma_d_db: f64) -> Result<LinkBudget> {
        let n = self.clusters.len();
        let gamma_d = db_to_linear(gamma_d_db);
        match self.budget_model {
            BudgetModel::Balanced => LinkBudget::balanced(n, self.delta, gamma_d),
            BudgetModel::Unbalanced => LinkBudget::unbalanced(n, self.delta, gamma_d),
            BudgetModel::Explicit => {
                let offsets = self.explicit_gammas_db.as_deref().unwrap_or_default();
                let hops = offsets
                    .iter()
                    .map(|o| db_to_linear(gamma_d_db + o))
                    .collect();
                LinkBudget::explicit(hops, gamma_d)
            }
        }
    }

    pub fn modulation_params(&self) -> Result<ModulationParams> {
        ModulationParams::from_name(&self.modulation.name, self.modulation.order)
    }

    pub fn threshold(&self) -> Result<OutageThreshold> {
        OutageThreshold::new(self.rate_threshold)
    }

    pub fn gamma_d_grid_db(&self) -> Vec<f64> {
        self.gamma_d_sweep_db.points()
    }

    pub fn mu_grid_db(&self) -> Vec<f64> {
        self.mu_sweep.map_or_else(|| vec![0.0], |s| s.points())
    }

    /// Render in the config format; [`parse_scenario`] reads it back unchanged.
    pub fn to_config(&self) -> String {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        let sweep = |s: &Sweep| join(&[s.start, s.stop, s.step]);
        let mut out = String::new();
        let clusters: Vec<String> = self.clusters.iter().map(u32::to_string).collect();
        let _ = writeln!(out, "clusters = {}", clusters.join(", "));
        let _ = writeln!(out, "budget_model = {}", self.budget_model.name());
        let _ = writeln!(out, "delta = {}", self.delta);
        if let Some(g) = &self.explicit_gammas_db {
            let _ = writeln!(out, "explicit_gammas_db = {}", join(g));
        }
        let _ = writeln!(out, "gamma_d_sweep_db = {}", sweep(&self.gamma_d_sweep_db));
        let _ = writeln!(out, "rate_threshold = {}", self.rate_threshold);
        match self.modulation.order {
            Some(m) => writeln!(out, "modulation = {}, {m}", self.modulation.name),
            None => writeln!(out, "modulation = {}", self.modulation.name),
        }
        .ok();
        if let Some(s) = &self.mu_sweep {
            let _ = writeln!(out, "mu_sweep = {}", sweep(s));
        }
        let _ = writeln!(out, "samples = {}", self.samples);
        let _ = writeln!(out, "seed = {}", self.seed);
        let outputs: Vec<&str> = self.outputs.iter().map(Metric::name).collect();
        let _ = writeln!(out, "outputs = {}", outputs.join(", "));
        out
    }
}

fn semantic(key: &str, message: impl Into<String>) -> Error {
    Error::Semantic {
        key: key.to_string(),
        message: message.into(),
    }
}

fn list(key: &str, value: &str) -> Result<Vec<String>> {
    if value.is_empty() {
        return Err(semantic(key, "value is empty"));
    }
    let items: Vec<String> = value.split(',').map(|s| s.trim().to_string()).collect();
    if items.iter().any(String::is_empty) {
        return Err(semantic(key, "empty list element"));
    }
    Ok(items)
}

fn real(key: &str, text: &str) -> Result<f64> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(semantic(key, format!("'{text}' is not a finite number"))),
    }
}

fn count(key: &str, text: &str) -> Result<u64> {
    if let Ok(v) = text.parse::<u64>() {
        return Ok(v);
    }
    // accept integral scientific notation such as 1e6
    match text.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(64) => Ok(v as u64),
        _ => Err(semantic(
            key,
            format!("'{text}' is not a non-negative integer"),
        )),
    }
}

fn sweep(key: &str, value: &str) -> Result<Sweep> {
    let items = list(key, value)?;
    if items.len() != 3 {
        return Err(semantic(key, "expected start, stop, step"));
    }
    let v = items
        .iter()
        .map(|s| real(key, s))
        .collect::<Result<Vec<_>>>()?;
    Sweep::new(v[0], v[1], v[2]).map_err(|m| semantic(key, m))
}

/// Parse and fully validate a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut entries: HashMap<&str, (usize, &str)> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Syntax {
                line: line_no,
                message: format!("expected 'key = value', found '{line}'"),
            });
        };
        let key = key.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_lowercase() || c == '_') {
            return Err(Error::Syntax {
                line: line_no,
                message: format!("malformed key '{key}'"),
            });
        }
        let Some(&canonical) = KEYS.iter().find(|k| **k == key) else {
            return Err(Error::UnknownKey {
                key: key.to_string(),
                line: line_no,
            });
        };
        if let Some((first, _)) = entries.get(canonical) {
            return Err(Error::DuplicateKey {
                key: key.to_string(),
                first: *first,
                second: line_no,
            });
        }
        entries.insert(canonical, (line_no, value.trim()));
    }
    let get = |key: &str| entries.get(key).map(|(_, v)| *v);

    let clusters_text = get("clusters").ok_or_else(|| semantic("clusters", "missing"))?;
    let clusters = list("clusters", clusters_text)?
        .iter()
        .map(|s| {
            s.parse::<u32>()
                .map_err(|_| semantic("clusters", format!("'{s}' is not a cluster size")))
        })
        .collect::<Result<Vec<_>>>()?;
    ClusterTopology::new(clusters.clone()).map_err(|e| semantic("clusters", e.to_string()))?;

    let budget_model = match get("budget_model") {
        Some("balanced") => BudgetModel::Balanced,
        Some("unbalanced") => BudgetModel::Unbalanced,
        Some("explicit") => BudgetModel::Explicit,
        Some(other) => {
            return Err(semantic(
                "budget_model",
                format!("'{other}' is not balanced, unbalanced or explicit"),
            ))
        }
        None => return Err(semantic("budget_model", "missing")),
    };

    let mut scenario = Scenario::new(clusters, budget_model);

    if let Some(v) = get("delta") {
        let delta = real("delta", v)?;
        if delta < 0.0 {
            return Err(semantic("delta", "path-loss exponent must be non-negative"));
        }
        scenario.delta = delta;
    }

    match (budget_model, get("explicit_gammas_db")) {
        (BudgetModel::Explicit, Some(v)) => {
            let gammas = list("explicit_gammas_db", v)?
                .iter()
                .map(|s| real("explicit_gammas_db", s))
                .collect::<Result<Vec<_>>>()?;
            if gammas.len() != scenario.clusters.len() + 1 {
                return Err(semantic(
                    "explicit_gammas_db",
                    format!(
                        "{} values given but {} hops need one each",
                        gammas.len(),
                        scenario.clusters.len() + 1
                    ),
                ));
            }
            scenario.explicit_gammas_db = Some(gammas);
        }
        (BudgetModel::Explicit, None) => {
            return Err(semantic(
                "explicit_gammas_db",
                "required when budget_model = explicit",
            ))
        }
        (_, Some(_)) => {
            return Err(semantic(
                "explicit_gammas_db",
                "only allowed when budget_model = explicit",
            ))
        }
        (_, None) => {}
    }

    if let Some(v) = get("gamma_d_sweep_db") {
        scenario.gamma_d_sweep_db = sweep("gamma_d_sweep_db", v)?;
    }
    if let Some(v) = get("rate_threshold") {
        let r = real("rate_threshold", v)?;
        if r < 0.0 {
            return Err(semantic("rate_threshold", "must be non-negative"));
        }
        scenario.rate_threshold = r;
    }
    if let Some(v) = get("modulation") {
        let items = list("modulation", v)?;
        let order = match items.as_slice() {
            [_] => None,
            [_, m] => Some(
                m.parse::<u32>()
                    .map_err(|_| semantic("modulation", format!("'{m}' is not an order")))?,
            ),
            _ => return Err(semantic("modulation", "expected NAME or NAME, ORDER")),
        };
        let choice = ModulationChoice {
            name: items[0].to_ascii_uppercase(),
            order,
        };
        ModulationParams::from_name(&choice.name, choice.order)
            .map_err(|e| semantic("modulation", e.to_string()))?;
        scenario.modulation = choice;
    }
    if let Some(v) = get("mu_sweep") {
        scenario.mu_sweep = Some(sweep("mu_sweep", v)?);
    }
    if let Some(v) = get("samples") {
        let n = count("samples", v)?;
        if n == 0 {
            return Err(semantic("samples", "must be at least 1"));
        }
        scenario.samples = n;
    }
    if let Some(v) = get("seed") {
        scenario.seed = count("seed", v)?;
    }
    if let Some(v) = get("outputs") {
        let mut outputs = Vec::new();
        for name in list("outputs", v)? {
            let metric = Metric::from_name(&name)
                .ok_or_else(|| semantic("outputs", format!("unknown metric '{name}'")))?;
            if outputs.contains(&metric) {
                return Err(semantic("outputs", format!("'{name}' listed twice")));
            }
            outputs.push(metric);
        }
        outputs.sort();
        scenario.outputs = outputs;
    }
    Ok(scenario)
}
