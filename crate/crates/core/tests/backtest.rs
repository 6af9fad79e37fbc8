use nowcast::backtest::{run_backtest, BacktestConfig, BacktestMetrics, BacktestReport};
use nowcast::extratrees::ExtraTreesParams;
use nowcast::rng::Rng;
use nowcast::synth::{generate, SynthConfig};
use nowcast::timeseries::{FeatureTable, MonthKey};
use nowcast::transforms::Approach;

fn params(n_trees: usize) -> ExtraTreesParams {
    ExtraTreesParams {
        n_trees,
        seed: 21,
        ..Default::default()
    }
}

fn synth_table(config: &SynthConfig) -> FeatureTable {
    let sample = generate(config).unwrap();
    let mut series = vec![sample.target];
    series.extend(sample.features);
    FeatureTable::align(&series)
        .unwrap()
        .with_target("target")
        .unwrap()
}

#[test]
fn linear_target_is_recovered() {
    let mut rng = Rng::from_seed(4);
    let months = 72;
    let mut level = 500.0;
    let x: Vec<f64> = (0..months)
        .map(|_| {
            level += rng.normal(5.0, 20.0);
            level
        })
        .collect();
    let y: Vec<f64> = x
        .iter()
        .map(|v| 2.0 * v + 40_000.0 + rng.normal(0.0, 0.5))
        .collect();
    let table = FeatureTable::new(
        MonthKey::new(2015, 1).unwrap(),
        months,
        vec![("x".into(), x), ("y".into(), y)],
    )
    .unwrap()
    .with_target("y")
    .unwrap();
    for approach in [Approach::Deseasonalized, Approach::MonthIndicators] {
        let report = run_backtest(&table, &BacktestConfig::new(approach, 24, params(50))).unwrap();
        let r2 = report.metrics.r_squared_level.unwrap();
        assert!(r2 >= 0.99, "{approach}: {r2}");
    }
}

#[test]
fn predicted_levels_are_anchored_on_actual_history() {
    let table = synth_table(&SynthConfig::default());
    let levels = table.target_values().unwrap().to_vec();
    for approach in [Approach::Deseasonalized, Approach::MonthIndicators] {
        let report = run_backtest(&table, &BacktestConfig::new(approach, 24, params(20))).unwrap();
        for r in &report.records {
            let t = table.months().iter().position(|m| *m == r.month).unwrap();
            let seasonal_term = match approach {
                Approach::MonthIndicators => 0.0,
                Approach::Deseasonalized => levels[t - 12] - levels[t - 13],
            };
            let expected = r.predicted_transformed + seasonal_term;
            assert!(
                (r.predicted_level - r.prior_actual_level - expected).abs() <= 1e-9,
                "{}",
                r.month
            );
            assert_eq!(r.prior_actual_level, levels[t - 1]);
            assert_eq!(r.actual_level, levels[t]);
        }
    }
}

#[test]
fn summary_metrics_match_the_records() {
    let table = synth_table(&SynthConfig {
        seed: 3,
        ..SynthConfig::default()
    });
    let report = run_backtest(
        &table,
        &BacktestConfig::new(Approach::Deseasonalized, 30, params(20)),
    )
    .unwrap();
    let restored: BacktestReport = serde_json::from_str(&report.to_json().unwrap()).unwrap();
    assert_eq!(restored, report);
    assert_eq!(
        BacktestMetrics::from_records(&restored.records),
        restored.metrics
    );
    assert_eq!(report.records.len(), 96 - 30);
    assert_eq!(report.records[0].train_rows_used, 30 - 13);
}

#[test]
fn thread_count_does_not_change_the_report() {
    let table = synth_table(&SynthConfig::default());
    let config = BacktestConfig::new(Approach::MonthIndicators, 60, params(30));
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_backtest(&table, &config).unwrap().to_json().unwrap())
    };
    let single = run(1);
    assert_eq!(single, run(4));
    assert_eq!(single, run(8));
}
