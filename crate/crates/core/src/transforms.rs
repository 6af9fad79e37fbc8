//! Differencing transforms, month one-hot encoding, and their inverses.
//!
//! Tables carry a [`TransformLedger`] recording what was applied so that a
//! prediction on the transformed scale can be turned back into a level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{FeatureTable, MonthKey, MonthlySeries};

pub const MONTHS_PER_YEAR: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransformStep {
    FirstDifference,
    SeasonalDifference { period: usize },
    MonthOneHot,
}

/// Transforms in the order they were applied.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformLedger {
    steps: Vec<TransformStep>,
}

impl TransformLedger {
    pub fn steps(&self) -> &[TransformStep] {
        &self.steps
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn push(&mut self, step: TransformStep) -> Result<()> {
        if let TransformStep::SeasonalDifference { period } = step {
            if period < 2 {
                return Err(Error::InvalidParams(format!(
                    "seasonal period must be at least 2, got {period}"
                )));
            }
        }
        self.steps.push(step);
        Ok(())
    }
}

/// Twelve indicator components, one per calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneHotVector([u8; MONTHS_PER_YEAR]);

impl OneHotVector {
    pub fn components(&self) -> &[u8; MONTHS_PER_YEAR] {
        &self.0
    }

    pub fn hot_index(&self) -> usize {
        self.0
            .iter()
            .position(|&c| c == 1)
            .expect("one-hot vector has a hot component")
    }
}

/// Names of the appended month indicator columns, January first.
pub fn one_hot_column_names() -> [String; MONTHS_PER_YEAR] {
    std::array::from_fn(|i| format!("month_{:02}", i + 1))
}

/// Which preprocessing the model sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Approach {
    /// Detrend then deseason every column; no month indicators.
    #[serde(rename = "A")]
    Deseasonalized,
    /// Detrend every column and append month indicators.
    #[serde(rename = "B")]
    MonthIndicators,
}

impl Approach {
    /// Fewest input rows that leave at least one transformed row
    /// (approach B is held to three so at least two remain).
    pub fn min_rows(self) -> usize {
        match self {
            Approach::Deseasonalized => 2 + MONTHS_PER_YEAR,
            Approach::MonthIndicators => 3,
        }
    }

    /// Leading rows lost to lags.
    pub fn dropped_rows(self) -> usize {
        match self {
            Approach::Deseasonalized => 1 + MONTHS_PER_YEAR,
            Approach::MonthIndicators => 1,
        }
    }
}

impl std::str::FromStr for Approach {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Approach::Deseasonalized),
            "B" | "b" => Ok(Approach::MonthIndicators),
            other => Err(Error::InvalidParams(format!(
                "unknown approach {other:?}, expected A or B"
            ))),
        }
    }
}

impl std::fmt::Display for Approach {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Approach::Deseasonalized => "A",
            Approach::MonthIndicators => "B",
        })
    }
}

/// `out[i] = s[i + 1] - s[i]`, starting one month later.
pub fn first_difference(series: &MonthlySeries) -> Result<MonthlySeries> {
    lag_difference(series, 1)
}

/// `out[i] = s[i + period] - s[i]`, starting `period` months later.
pub fn seasonal_difference(series: &MonthlySeries, period: usize) -> Result<MonthlySeries> {
    if period < 2 {
        return Err(Error::InvalidParams(format!(
            "seasonal period must be at least 2, got {period}"
        )));
    }
    lag_difference(series, period)
}

fn lag_difference(series: &MonthlySeries, lag: usize) -> Result<MonthlySeries> {
    if series.len() <= lag {
        return Err(Error::TooShort(format!(
            "series {:?} has {} values, lag {lag} needs at least {}",
            series.name(),
            series.len(),
            lag + 1
        )));
    }
    let v = series.values();
    let diffs = v[lag..]
        .iter()
        .zip(v)
        .map(|(later, earlier)| later - earlier)
        .collect();
    MonthlySeries::new(
        series.name(),
        series.units(),
        series.start() + lag as i64,
        diffs,
    )
}

/// Undoes [`first_difference`] given the level of the month before
/// `diffs.start()`.
pub fn invert_first_difference(
    diffs: &MonthlySeries,
    anchor_value: f64,
    anchor_month: MonthKey,
) -> Result<MonthlySeries> {
    if anchor_month.next() != diffs.start() {
        return Err(Error::AnchorMismatch(format!(
            "anchor month {anchor_month} must immediately precede {}",
            diffs.start()
        )));
    }
    let levels = diffs
        .values()
        .iter()
        .scan(anchor_value, |level, d| {
            *level += d;
            Some(*level)
        })
        .collect();
    MonthlySeries::new(diffs.name(), diffs.units(), diffs.start(), levels)
}

/// Undoes [`seasonal_difference`] given the `period` pre-differencing values
/// immediately before `diffs.start()`.
pub fn invert_seasonal_difference(
    diffs: &MonthlySeries,
    anchor: &MonthlySeries,
    period: usize,
) -> Result<MonthlySeries> {
    if anchor.len() != period {
        return Err(Error::AnchorMismatch(format!(
            "anchor has {} values, period {period} needs exactly {period}",
            anchor.len()
        )));
    }
    if anchor.start() + period as i64 != diffs.start() {
        return Err(Error::AnchorMismatch(format!(
            "anchor starting {} does not end just before {}",
            anchor.start(),
            diffs.start()
        )));
    }
    let mut out: Vec<f64> = Vec::with_capacity(diffs.len());
    for (i, d) in diffs.values().iter().enumerate() {
        let lagged = if i < period {
            anchor.values()[i]
        } else {
            out[i - period]
        };
        out.push(lagged + d);
    }
    MonthlySeries::new(diffs.name(), diffs.units(), diffs.start(), out)
}

pub fn one_hot_month(month: MonthKey) -> OneHotVector {
    let mut components = [0u8; MONTHS_PER_YEAR];
    components[month.month() as usize - 1] = 1;
    OneHotVector(components)
}

/// Applies approach A or B to every column of `table`, dropping leading rows
/// that lack the required lags.
pub fn apply_pipeline(table: &FeatureTable, approach: Approach) -> Result<FeatureTable> {
    let target = table.target().ok_or(Error::NoTarget)?;
    if table.len() < approach.min_rows() {
        return Err(Error::TooShort(format!(
            "approach {approach} needs at least {} rows, table has {}",
            approach.min_rows(),
            table.len()
        )));
    }

    let steps: &[TransformStep] = match approach {
        Approach::Deseasonalized => &[
            TransformStep::FirstDifference,
            TransformStep::SeasonalDifference {
                period: MONTHS_PER_YEAR,
            },
        ],
        Approach::MonthIndicators => &[TransformStep::FirstDifference],
    };

    let mut columns = Vec::new();
    let mut start = None;
    for name in table.column_names() {
        let mut series = table.column_series(name)?;
        for step in steps {
            series = apply_step(&series, *step)?;
        }
        start = Some(series.start());
        columns.push((name.to_string(), series.values().to_vec()));
    }
    let start = start.ok_or_else(|| Error::Empty("table has no columns".into()))?;
    let len = table.len() - approach.dropped_rows();

    let mut ledger = table.ledger().clone();
    for step in steps {
        ledger.push(*step)?;
    }
    let mut out = FeatureTable::new(start, len, columns)?.with_target(target)?;

    if approach == Approach::MonthIndicators {
        let hot: Vec<usize> = out
            .months()
            .iter()
            .map(|m| one_hot_month(*m).hot_index())
            .collect();
        for (k, name) in one_hot_column_names().into_iter().enumerate() {
            let values = hot
                .iter()
                .map(|&h| if h == k { 1.0 } else { 0.0 })
                .collect();
            out.push_column(name, values)?;
        }
        ledger.push(TransformStep::MonthOneHot)?;
    }
    Ok(out.with_ledger(ledger))
}

fn apply_step(series: &MonthlySeries, step: TransformStep) -> Result<MonthlySeries> {
    match step {
        TransformStep::FirstDifference => first_difference(series),
        TransformStep::SeasonalDifference { period } => seasonal_difference(series, period),
        TransformStep::MonthOneHot => Ok(series.clone()),
    }
}

/// Turns a transformed-scale prediction for the month after `history.end()`
/// back into a level, anchoring every inverse on the actual `history`.
pub fn reconstruct_next_level(
    ledger: &TransformLedger,
    history: &MonthlySeries,
    predicted_transformed: f64,
) -> Result<f64> {
    let steps: Vec<TransformStep> = ledger
        .steps()
        .iter()
        .copied()
        .filter(|s| *s != TransformStep::MonthOneHot)
        .collect();
    if history.is_empty() {
        return Err(Error::TooShort(
            "reconstruction needs at least one historical level".into(),
        ));
    }
    let target_month = history.end().next();

    // stages[i] is the history as seen by steps[i]
    let mut stages = vec![history.clone()];
    for step in steps.iter().take(steps.len().saturating_sub(1)) {
        let next = apply_step(stages.last().expect("non-empty"), *step)?;
        stages.push(next);
    }

    let mut value = predicted_transformed;
    for (step, stage) in steps.iter().zip(&stages).rev() {
        let single =
            MonthlySeries::new(history.name(), history.units(), target_month, vec![value])?;
        let restored = match *step {
            TransformStep::FirstDifference => invert_first_difference(
                &single,
                *stage.values().last().expect("non-empty"),
                stage.end(),
            )?,
            TransformStep::SeasonalDifference { period } => {
                if stage.len() < period {
                    return Err(Error::TooShort(format!(
                        "seasonal inverse needs {period} anchor values, history provides {}",
                        stage.len()
                    )));
                }
                let tail = stage.values()[stage.len() - period..].to_vec();
                let anchor = MonthlySeries::new(
                    stage.name(),
                    stage.units(),
                    target_month + -(period as i64),
                    tail,
                )?;
                invert_seasonal_difference(&single, &anchor, period)?
            }
            TransformStep::MonthOneHot => unreachable!("filtered above"),
        };
        value = restored.values()[0];
    }
    Ok(value)
}
