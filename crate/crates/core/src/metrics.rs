//! Forecast scores.

use std::cmp::Ordering;

use crate::error::{Error, Result};

fn same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch { left: a, right: b });
    }
    Ok(())
}

/// Coefficient of determination, `1 - SS_res / SS_tot`.
pub fn r_squared(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    same_len(predicted.len(), actual.len())?;
    if actual.len() < 2 {
        return Err(Error::TooShort(format!(
            "r_squared needs at least 2 values, got {}",
            actual.len()
        )));
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::DegenerateActuals);
    }
    let ss_res: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (a - p).powi(2))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

fn direction(change: f64) -> Ordering {
    change.partial_cmp(&0.0).unwrap_or(Ordering::Equal)
}

/// Share of records whose predicted change from the prior actual level has
/// the same sign (negative, zero, positive) as the realized change.
pub fn directional_accuracy(
    predicted_levels: &[f64],
    actual_levels: &[f64],
    prior_actual_levels: &[f64],
) -> Result<f64> {
    same_len(predicted_levels.len(), actual_levels.len())?;
    same_len(predicted_levels.len(), prior_actual_levels.len())?;
    if predicted_levels.is_empty() {
        return Err(Error::Empty("directional accuracy of no records".into()));
    }
    let hits = predicted_levels
        .iter()
        .zip(actual_levels)
        .zip(prior_actual_levels)
        .filter(|((p, a), prior)| direction(*p - *prior) == direction(*a - *prior))
        .count();
    Ok(hits as f64 / predicted_levels.len() as f64)
}
