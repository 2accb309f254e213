//! SNR sweeps and figure tables as CSV.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analytic::{
    asymptotic_outage, asymptotic_ser, ergodic_capacity, outage_probability, prob_snr_gain, ser,
};
use crate::error::{Error, Result};
use crate::network::db_to_linear;
use crate::scenario::{BudgetModel, Scenario, Sweep};
use crate::simulator::{estimate, Metric, MetricEstimate, SimulationConfig};

pub const SWEEP_HEADER: &str = "gamma_d_db,metric,analytic,asymptotic,mc_mean,mc_stderr,mu_db";

/// Topologies evaluated by every figure.
pub const FIGURE_TOPOLOGIES: [&[u32]; 6] = [
    &[2, 1],
    &[3, 2],
    &[3, 3],
    &[2, 1, 1, 1, 1],
    &[3, 2, 2, 2, 2],
    &[3, 3, 3, 3, 3],
];

/// Direct-link SNR at which the figure trends are checked.
pub const TREND_GAMMA_D_DB: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Analytic,
    MonteCarlo,
    Both,
}

impl SweepMode {
    fn analytic(self) -> bool {
        self != SweepMode::MonteCarlo
    }

    fn monte_carlo(self) -> bool {
        self != SweepMode::Analytic
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gamma_d_db: f64,
    pub metric: Metric,
    /// Only set for `snr_gain`.
    pub mu_db: Option<f64>,
    pub analytic: Option<f64>,
    pub asymptotic: Option<f64>,
    pub mc: Option<MetricEstimate>,
}

fn number(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.8e}")).unwrap_or_default()
}

/// Grid coordinate with float noise from `start + i * step` rounded away.
fn coordinate(x: f64) -> String {
    let r = (x * 1e9).round() / 1e9;
    format!("{}", if r == 0.0 { 0.0 } else { r })
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            coordinate(row.gamma_d_db),
            row.metric,
            number(row.analytic),
            number(row.asymptotic),
            number(row.mc.map(|m| m.value)),
            number(row.mc.map(|m| m.std_error)),
            row.mu_db.map(coordinate).unwrap_or_default(),
        );
    }
    out
}

fn point_rows(scenario: &Scenario, gamma_d_db: f64, mode: SweepMode) -> Result<Vec<SweepRow>> {
    let topology = scenario.topology()?;
    let budget = scenario.budget(gamma_d_db)?;
    let threshold = scenario.threshold()?;
    let modulation = scenario.modulation_params()?;

    let mut mc = None;
    if mode.monte_carlo() {
        let mut config = SimulationConfig::new(scenario.samples, scenario.seed);
        for m in &scenario.outputs {
            config = match m {
                Metric::Outage => config.with_outage(threshold),
                Metric::Capacity => config.with_capacity(),
                Metric::Ser => config.with_ser(modulation.clone()),
                Metric::SnrGain => config,
            };
        }
        if !config.metrics.is_empty() {
            mc = Some(estimate(&topology, &budget, &config)?);
        }
    }
    let mc_of = |m: Metric| mc.as_ref().and_then(|e| e.get(&m).copied());

    let mut rows = Vec::new();
    for &metric in &scenario.outputs {
        let row = |analytic, asymptotic, mc| SweepRow {
            gamma_d_db,
            metric,
            mu_db: None,
            analytic,
            asymptotic,
            mc,
        };
        let a = mode.analytic();
        match metric {
            Metric::Outage => rows.push(row(
                a.then(|| outage_probability(&topology, &budget, &threshold))
                    .transpose()?,
                a.then(|| asymptotic_outage(&topology, &budget, &threshold))
                    .transpose()?,
                mc_of(metric),
            )),
            Metric::Capacity => rows.push(row(
                a.then(|| ergodic_capacity(&topology, &budget))
                    .transpose()?,
                None,
                mc_of(metric),
            )),
            Metric::Ser => rows.push(row(
                a.then(|| ser(&topology, &budget, &modulation).map(|s| s.value))
                    .transpose()?,
                a.then(|| asymptotic_ser(&topology, &budget, &modulation))
                    .transpose()?,
                mc_of(metric),
            )),
            Metric::SnrGain => {
                for mu_db in scenario.mu_grid_db() {
                    let mu = db_to_linear(mu_db);
                    let analytic = a
                        .then(|| prob_snr_gain(&topology, &budget, mu))
                        .transpose()?;
                    let mc = if mode.monte_carlo() {
                        let config = SimulationConfig::new(scenario.samples, scenario.seed)
                            .with_snr_gain(mu);
                        estimate(&topology, &budget, &config)?
                            .get(&Metric::SnrGain)
                            .copied()
                    } else {
                        None
                    };
                    rows.push(SweepRow {
                        mu_db: Some(mu_db),
                        ..row(analytic, None, mc)
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// All rows of a sweep, ascending in `Γ_d` and then in metric order.
/// Grid points are evaluated concurrently on the current rayon pool.
pub fn sweep_rows(scenario: &Scenario, mode: SweepMode) -> Result<Vec<SweepRow>> {
    let per_point: Vec<Vec<SweepRow>> = scenario
        .gamma_d_grid_db()
        .into_par_iter()
        .map(|g| {
            point_rows(scenario, g, mode)
                .map_err(|e| e.context(format!("gamma_d_db = {}", coordinate(g))))
        })
        .collect::<Result<_>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

pub fn run_sweep(scenario: &Scenario, mode: SweepMode) -> Result<String> {
    Ok(rows_to_csv(&sweep_rows(scenario, mode)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Ergodic,
    Outage,
    Ser,
    SnrGain,
}

impl Figure {
    pub const ALL: [Figure; 4] = [
        Figure::Ergodic,
        Figure::Outage,
        Figure::Ser,
        Figure::SnrGain,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Figure::Ergodic => "ergodic",
            Figure::Outage => "outage",
            Figure::Ser => "ser",
            Figure::SnrGain => "snr_gain",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.id() == id)
            .ok_or_else(|| Error::UnknownFigure(id.to_string()))
    }

    fn metric(&self) -> Metric {
        match self {
            Figure::Ergodic => Metric::Capacity,
            Figure::Outage => Metric::Outage,
            Figure::Ser => Metric::Ser,
            Figure::SnrGain => Metric::SnrGain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvDocument {
    pub name: String,
    pub contents: String,
}

fn topology_label(clusters: &[u32]) -> String {
    clusters
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join("-")
}

fn bracket(clusters: &[u32]) -> String {
    format!("[{}]", topology_label(clusters).replace('-', ","))
}

/// Scenarios behind a figure, keyed by output file stem.
pub fn figure_scenarios(figure: Figure, samples: u64, seed: u64) -> Vec<(String, Scenario)> {
    let models: &[BudgetModel] = match figure {
        Figure::SnrGain => &[BudgetModel::Balanced, BudgetModel::Unbalanced],
        _ => &[BudgetModel::Unbalanced],
    };
    let mut out = Vec::new();
    for clusters in FIGURE_TOPOLOGIES {
        for &model in models {
            let mut s = Scenario::new(clusters.to_vec(), model);
            s.samples = samples;
            s.seed = seed;
            s.outputs = vec![figure.metric()];
            let mut stem = format!("{}_{}", figure.id(), topology_label(clusters));
            if figure == Figure::SnrGain {
                s.gamma_d_sweep_db = Sweep {
                    start: 0.0,
                    stop: 0.0,
                    step: 1.0,
                };
                s.mu_sweep = Some(Sweep {
                    start: 0.0,
                    stop: 40.0,
                    step: 2.0,
                });
                stem = format!("{stem}_{}", model.name());
            }
            out.push((stem, s));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrendCheck {
    pub description: String,
    pub passed: bool,
}

fn at_trend_point(
    clusters: &[u32],
    model: BudgetModel,
    f: &dyn Fn(&Scenario) -> Result<f64>,
) -> Result<f64> {
    let mut s = Scenario::new(clusters.to_vec(), model);
    s.gamma_d_sweep_db = Sweep {
        start: TREND_GAMMA_D_DB,
        stop: TREND_GAMMA_D_DB,
        step: 1.0,
    };
    f(&s)
}

fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] > w[1])
}

/// Curve-ordering checks for a figure, computed analytically.
pub fn figure_checks(figure: Figure) -> Result<Vec<TrendCheck>> {
    let metric_at = |clusters: &[u32]| -> Result<f64> {
        at_trend_point(clusters, BudgetModel::Unbalanced, &|s| {
            let t = s.topology()?;
            let b = s.budget(TREND_GAMMA_D_DB)?;
            match figure {
                Figure::Ergodic => ergodic_capacity(&t, &b),
                Figure::Outage => outage_probability(&t, &b, &s.threshold()?),
                _ => Ok(ser(&t, &b, &s.modulation_params()?)?.value),
            }
        })
    };
    let mut checks = Vec::new();
    match figure {
        Figure::Ergodic => {
            let v = FIGURE_TOPOLOGIES
                .iter()
                .map(|c| metric_at(c))
                .collect::<Result<Vec<_>>>()?;
            checks.push(TrendCheck {
                description: "capacity [3,3] > [3,2] > [2,1] at 20 dB".into(),
                passed: strictly_decreasing(&[v[2], v[1], v[0]]),
            });
            checks.push(TrendCheck {
                description: "capacity [3,3,3,3,3] > [3,2,2,2,2] > [2,1,1,1,1] at 20 dB".into(),
                passed: strictly_decreasing(&[v[5], v[4], v[3]]),
            });
            for i in 0..3 {
                checks.push(TrendCheck {
                    description: format!(
                        "capacity {} > {} at 20 dB",
                        bracket(FIGURE_TOPOLOGIES[i]),
                        bracket(FIGURE_TOPOLOGIES[i + 3])
                    ),
                    passed: v[i] > v[i + 3],
                });
            }
        }
        Figure::Outage | Figure::Ser => {
            for group in [&FIGURE_TOPOLOGIES[..3], &FIGURE_TOPOLOGIES[3..]] {
                let v = group
                    .iter()
                    .map(|c| metric_at(c))
                    .collect::<Result<Vec<_>>>()?;
                let names: Vec<String> = group.iter().map(|c| bracket(c)).collect();
                checks.push(TrendCheck {
                    description: format!(
                        "{} {} > {} > {} at 20 dB",
                        figure.metric(),
                        names[0],
                        names[1],
                        names[2]
                    ),
                    passed: strictly_decreasing(&v),
                });
            }
        }
        Figure::SnrGain => {
            for clusters in FIGURE_TOPOLOGIES {
                let curve = |model| -> Result<Vec<f64>> {
                    let s = &figure_scenarios(Figure::SnrGain, 1, 0)
                        .into_iter()
                        .find(|(_, s)| s.clusters == clusters && s.budget_model == model)
                        .expect("figure scenario exists")
                        .1;
                    let t = s.topology()?;
                    let b = s.budget(0.0)?;
                    s.mu_grid_db()
                        .into_iter()
                        .map(|mu| prob_snr_gain(&t, &b, db_to_linear(mu)))
                        .collect()
                };
                let balanced = curve(BudgetModel::Balanced)?;
                let unbalanced = curve(BudgetModel::Unbalanced)?;
                checks.push(TrendCheck {
                    description: format!(
                        "snr_gain balanced >= unbalanced at every mu for {}",
                        bracket(clusters)
                    ),
                    passed: balanced.iter().zip(&unbalanced).all(|(b, u)| b >= u),
                });
            }
        }
    }
    Ok(checks)
}

fn checks_to_csv(checks: &[TrendCheck]) -> String {
    let mut out = String::from("check,passed\n");
    for c in checks {
        let _ = writeln!(out, "\"{}\",{}", c.description, c.passed);
    }
    out
}

/// One CSV per figure scenario plus `<figure>_summary.csv` with the trend checks.
pub fn reproduce_figure(figure: Figure, samples: u64, seed: u64) -> Result<Vec<CsvDocument>> {
    let mut docs = Vec::new();
    for (stem, scenario) in figure_scenarios(figure, samples, seed) {
        let contents =
            run_sweep(&scenario, SweepMode::Both).map_err(|e| e.context(stem.clone()))?;
        docs.push(CsvDocument {
            name: format!("{stem}.csv"),
            contents,
        });
    }
    docs.push(CsvDocument {
        name: format!("{}_summary.csv", figure.id()),
        contents: checks_to_csv(&figure_checks(figure)?),
    });
    Ok(docs)
}

/// Write `contents` to `dir/name` through a temporary file in `dir`, so a
/// failed run never leaves a truncated file behind.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let io = |path: &Path, e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io(dir, e))?;
    tmp.write_all(contents.as_bytes())
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| io(tmp.path(), e))?;
    tmp.persist(&target).map_err(|e| io(&target, e.error))?;
    Ok(target)
}
