use cdfmr::report::{reproduce_figure, run_sweep, sweep_rows, Figure, SweepMode};
use cdfmr::scenario::{parse_scenario, BudgetModel, Scenario};
use cdfmr::simulator::Metric;
use cdfmr::Error;

#[test]
fn sweep_rows_follow_grid_then_metric_order() {
    let mut s = Scenario::new(vec![2, 1], BudgetModel::Balanced);
    s.samples = 4000;
    let rows = sweep_rows(&s, SweepMode::Both).unwrap();
    assert_eq!(rows.len(), 16 * 4);
    for pair in rows.windows(2) {
        let ordered = pair[0].gamma_d_db < pair[1].gamma_d_db
            || (pair[0].gamma_d_db == pair[1].gamma_d_db && pair[0].metric < pair[1].metric);
        assert!(ordered);
    }
    for row in &rows {
        let mc = row.mc.unwrap();
        assert_eq!(mc.n, 4000);
        assert_eq!(
            row.asymptotic.is_some(),
            matches!(row.metric, Metric::Outage | Metric::Ser)
        );
    }
}

#[test]
fn outage_rows_agree_with_simulation() {
    let s = parse_scenario(
        "clusters = 2, 2\nbudget_model = unbalanced\ngamma_d_sweep_db = 0, 6, 2\n\
         outputs = outage\nsamples = 200000\nseed = 11\n",
    )
    .unwrap();
    for row in sweep_rows(&s, SweepMode::Both).unwrap() {
        let a = row.analytic.unwrap();
        let mc = row.mc.unwrap();
        assert!((a - mc.value).abs() <= 4.0 * mc.std_error, "{row:?}");
    }
}

#[test]
fn asymptote_meets_outage_at_high_snr() {
    let s = parse_scenario(
        "clusters = 3, 2\nbudget_model = unbalanced\ngamma_d_sweep_db = 0, 60, 2\noutputs = outage\n",
    )
    .unwrap();
    let rows = sweep_rows(&s, SweepMode::Analytic).unwrap();
    let top = rows.last().unwrap();
    assert_eq!(top.gamma_d_db, 60.0);
    let ratio = top.asymptotic.unwrap() / top.analytic.unwrap();
    assert!((0.9..=1.1).contains(&ratio), "{ratio}");
}

#[test]
fn engine_errors_carry_scenario_context() {
    // 31 relays exceed the expanded-sum window
    let s = parse_scenario(
        "clusters = 31\nbudget_model = balanced\ngamma_d_sweep_db = 4, 4, 1\noutputs = capacity\n",
    )
    .unwrap();
    let err = run_sweep(&s, SweepMode::Analytic).unwrap_err();
    assert!(err.to_string().starts_with("gamma_d_db = 4:"), "{err}");
    let Error::Context { source, .. } = err else {
        panic!("expected context")
    };
    assert!(matches!(*source, Error::CancellationWindow { .. }));
}

#[test]
fn snr_gain_figure_covers_both_budgets() {
    let docs = reproduce_figure(Figure::SnrGain, 500, 5).unwrap();
    assert_eq!(docs.len(), 13);
    for clusters in ["2-1", "3-3-3-3-3"] {
        for model in ["balanced", "unbalanced"] {
            let name = format!("snr_gain_{clusters}_{model}.csv");
            let doc = docs.iter().find(|d| d.name == name).unwrap();
            // 21 mu points at a single gamma_d
            assert_eq!(doc.contents.lines().count(), 22);
            assert!(doc.contents.lines().last().unwrap().ends_with(",40"));
        }
    }
    assert_eq!(docs.last().unwrap().name, "snr_gain_summary.csv");
}
