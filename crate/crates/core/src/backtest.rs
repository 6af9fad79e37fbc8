//! Expanding-window, one-month-ahead backtests.
//!
//! For each test month the table is cut just after that month, the pipeline
//! is applied, a fresh model is fit on the transformed rows strictly before
//! the test month, and the prediction is turned back into a level using the
//! actual history as anchors.

use std::io::Write;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extratrees::{self, ExtraTreesParams};
use crate::metrics::{directional_accuracy, r_squared};
use crate::timeseries::{FeatureTable, MonthKey, MonthlySeries};
use crate::transforms::{apply_pipeline, reconstruct_next_level, Approach};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub min_train_months: usize,
    pub horizon_months: usize,
    pub approach: Approach,
    pub model_params: ExtraTreesParams,
}

impl BacktestConfig {
    pub fn new(
        approach: Approach,
        min_train_months: usize,
        model_params: ExtraTreesParams,
    ) -> Self {
        Self {
            min_train_months,
            horizon_months: 1,
            approach,
            model_params,
        }
    }

    pub fn min_train_bound(approach: Approach) -> usize {
        match approach {
            Approach::Deseasonalized => 24,
            Approach::MonthIndicators => 13,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon_months != 1 {
            return Err(Error::InvalidParams(format!(
                "horizon_months must be 1, got {}",
                self.horizon_months
            )));
        }
        let bound = Self::min_train_bound(self.approach);
        if self.min_train_months < bound {
            return Err(Error::InvalidParams(format!(
                "min_train_months must be at least {bound} for approach {}, got {}",
                self.approach, self.min_train_months
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub month: MonthKey,
    pub predicted_transformed: f64,
    pub actual_transformed: f64,
    pub predicted_level: f64,
    pub actual_level: f64,
    /// Actual level of the month before `month`.
    pub prior_actual_level: f64,
    pub train_rows_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestMetrics {
    pub r_squared_level: Option<f64>,
    pub directional_accuracy: Option<f64>,
    pub r_squared_transformed: Option<f64>,
}

impl BacktestMetrics {
    /// Scores a set of records; a metric is `None` when it is undefined
    /// (fewer than two records, or constant actuals).
    pub fn from_records(records: &[PredictionRecord]) -> Self {
        let col = |f: fn(&PredictionRecord) -> f64| records.iter().map(f).collect::<Vec<f64>>();
        let predicted_level = col(|r| r.predicted_level);
        let actual_level = col(|r| r.actual_level);
        Self {
            r_squared_level: r_squared(&predicted_level, &actual_level).ok(),
            directional_accuracy: directional_accuracy(
                &predicted_level,
                &actual_level,
                &col(|r| r.prior_actual_level),
            )
            .ok(),
            r_squared_transformed: r_squared(
                &col(|r| r.predicted_transformed),
                &col(|r| r.actual_transformed),
            )
            .ok(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub schema_version: u32,
    pub target: String,
    pub features: Vec<String>,
    pub config: BacktestConfig,
    pub metrics: BacktestMetrics,
    pub records: Vec<PredictionRecord>,
}

/// What a single window fed to the model.
#[derive(Debug)]
pub struct WindowTrace<'a> {
    pub test_month: MonthKey,
    pub training_months: &'a [MonthKey],
    pub query_months: &'a [MonthKey],
}

/// Positions of the test months in a table of `n_months` rows.
pub fn test_indices(n_months: usize, min_train_months: usize) -> Result<Range<usize>> {
    if n_months <= min_train_months {
        return Err(Error::TooShort(format!(
            "table has {n_months} months, min_train_months {min_train_months} leaves no test month \
             (need at least {})",
            min_train_months + 1
        )));
    }
    Ok(min_train_months..n_months)
}

pub fn run_backtest(table: &FeatureTable, config: &BacktestConfig) -> Result<BacktestReport> {
    run_backtest_observed(table, config, |_| {})
}

/// Like [`run_backtest`], calling `observer` once per window before the fit.
pub fn run_backtest_observed(
    table: &FeatureTable,
    config: &BacktestConfig,
    mut observer: impl FnMut(&WindowTrace<'_>),
) -> Result<BacktestReport> {
    config.validate()?;
    let target = table.target().ok_or(Error::NoTarget)?.to_string();
    let levels = table.target_values()?;
    let first_month = table
        .first_month()
        .ok_or_else(|| Error::Empty("empty table".into()))?;

    let mut records = Vec::new();
    let mut features = Vec::new();
    for t in test_indices(table.len(), config.min_train_months)? {
        let test_month = table.months()[t];
        let transformed = apply_pipeline(&table.slice_rows(0, t + 1), config.approach)?;
        let last = transformed.len() - 1;
        debug_assert_eq!(transformed.months()[last], test_month);

        let training = transformed.slice_rows(0, last);
        features = training.feature_names();
        let query = transformed.slice_rows(last, last + 1).select(&features)?;
        observer(&WindowTrace {
            test_month,
            training_months: training.months(),
            query_months: query.months(),
        });

        let model = extratrees::fit(&training, &config.model_params)?;
        let predicted_transformed = model.predict(&query)?[0];
        let actual_transformed = transformed.target_values()?[last];

        let history = MonthlySeries::new(&target, "", first_month, levels[..t].to_vec())?;
        let predicted_level =
            reconstruct_next_level(transformed.ledger(), &history, predicted_transformed)?;

        records.push(PredictionRecord {
            month: test_month,
            predicted_transformed,
            actual_transformed,
            predicted_level,
            actual_level: levels[t],
            prior_actual_level: levels[t - 1],
            train_rows_used: training.len(),
        });
    }

    Ok(BacktestReport {
        schema_version: REPORT_SCHEMA_VERSION,
        target,
        features,
        config: *config,
        metrics: BacktestMetrics::from_records(&records),
        records,
    })
}

impl BacktestReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Per-month records with columns `month, predicted_level, actual_level,
    /// predicted_transformed, actual_transformed, train_rows_used`.
    pub fn write_records_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "month",
            "predicted_level",
            "actual_level",
            "predicted_transformed",
            "actual_transformed",
            "train_rows_used",
        ])
        .map_err(csv_io)?;
        for r in &self.records {
            w.write_record([
                r.month.to_string(),
                r.predicted_level.to_string(),
                r.actual_level.to_string(),
                r.predicted_transformed.to_string(),
                r.actual_transformed.to_string(),
                r.train_rows_used.to_string(),
            ])
            .map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Actual against predicted level, one row per test month.
    pub fn write_plot_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["month", "actual_level", "predicted_level"])
            .map_err(csv_io)?;
        for r in &self.records {
            w.write_record([
                r.month.to_string(),
                r.actual_level.to_string(),
                r.predicted_level.to_string(),
            ])
            .map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(e.into())
}
