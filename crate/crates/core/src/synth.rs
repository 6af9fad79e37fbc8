//! Seeded synthetic target and feature series.
//!
//! The target is `base + trend * t + seasonal[month] + noise + shock`. Each
//! feature is a running level whose month-over-month change is
//! `a_i * Δtarget(t) + feature noise`, i.e. a noisy, rescaled tracker of the
//! target's dynamics.
//!
//! Draw order from [`Rng::from_seed`]`(seed)`, fixed so other implementations
//! can reproduce the output: one `uniform(0.5, 1.5)` per feature for the
//! coefficients, then one standard normal per month for the target, then one
//! standard normal per month for each feature in turn (the first month's
//! feature draw is unused). Draws are consumed even when the matching
//! standard deviation is zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::timeseries::{MonthKey, MonthlySeries};

pub const TRUTH_SCHEMA_VERSION: u32 = 1;
pub const MIN_MONTHS: usize = 36;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub months: usize,
    pub seed: u64,
    pub start: MonthKey,
    pub base_level: f64,
    pub trend_per_month: f64,
    /// Additive seasonal offset for January..December.
    pub seasonal_amplitudes: [f64; 12],
    pub noise_sd: f64,
    pub n_features: usize,
    pub feature_noise_sd: f64,
    pub shock_month: Option<MonthKey>,
    pub shock_size: f64,
}

/// `amplitude * sin(2π (m - 1) / 12)` for months `m = 1..=12`.
pub fn sinusoidal_seasonality(amplitude: f64) -> [f64; 12] {
    std::array::from_fn(|i| amplitude * (std::f64::consts::TAU * i as f64 / 12.0).sin())
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            months: 96,
            seed: 7,
            start: MonthKey::new(2012, 1).expect("valid month"),
            base_level: 130_000.0,
            trend_per_month: 200.0,
            seasonal_amplitudes: sinusoidal_seasonality(300.0),
            noise_sd: 25.0,
            n_features: 6,
            feature_noise_sd: 10.0,
            shock_month: None,
            shock_size: 0.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.months < MIN_MONTHS {
            return bad(format!(
                "months must be at least {MIN_MONTHS}, got {}",
                self.months
            ));
        }
        if self.n_features == 0 {
            return bad("n_features must be at least 1".into());
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad(format!(
                "noise_sd must be finite and nonnegative, got {}",
                self.noise_sd
            ));
        }
        if !(self.feature_noise_sd >= 0.0 && self.feature_noise_sd.is_finite()) {
            return bad(format!(
                "feature_noise_sd must be finite and nonnegative, got {}",
                self.feature_noise_sd
            ));
        }
        let scalars = [self.base_level, self.trend_per_month, self.shock_size];
        if scalars
            .iter()
            .chain(&self.seasonal_amplitudes)
            .any(|v| !v.is_finite())
        {
            return bad("level, trend, seasonal and shock values must be finite".into());
        }
        if let Some(m) = self.shock_month {
            let offset = self.start.months_until(m);
            if offset < 0 || offset >= self.months as i64 {
                return bad(format!("shock month {m} is outside the generated range"));
            }
        }
        Ok(())
    }

    fn shock_index(&self) -> Option<usize> {
        self.shock_month
            .map(|m| self.start.months_until(m) as usize)
    }
}

/// The components used to build a sample, for checking recovered structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthLedger {
    pub schema_version: u32,
    pub config: SynthConfig,
    /// Scale of each feature's response to target changes.
    pub feature_coefficients: Vec<f64>,
    /// Realized target noise, `noise_sd * z_t`, one per month.
    pub target_noise: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSample {
    pub target: MonthlySeries,
    pub features: Vec<MonthlySeries>,
    pub truth: TruthLedger,
}

pub fn feature_name(i: usize) -> String {
    format!("feature_{:02}", i + 1)
}

pub fn generate(config: &SynthConfig) -> Result<SynthSample> {
    config.validate()?;
    let mut rng = Rng::from_seed(config.seed);
    let n = config.months;

    let coefficients: Vec<f64> = (0..config.n_features)
        .map(|_| rng.uniform(0.5, 1.5))
        .collect();
    let target_noise: Vec<f64> = (0..n)
        .map(|_| config.noise_sd * rng.standard_normal())
        .collect();
    let shock = config.shock_index();

    let target: Vec<f64> = (0..n)
        .map(|t| {
            let month = config.start + t as i64;
            let mut v = config.base_level
                + config.trend_per_month * t as f64
                + config.seasonal_amplitudes[month.month() as usize - 1]
                + target_noise[t];
            if shock == Some(t) {
                v += config.shock_size;
            }
            v
        })
        .collect();

    let features = coefficients
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let mut level = 0.0;
            let mut values = Vec::with_capacity(n);
            for t in 0..n {
                let z = rng.standard_normal();
                level = if t == 0 {
                    a * target[0]
                } else {
                    level + a * (target[t] - target[t - 1]) + config.feature_noise_sd * z
                };
                values.push(level);
            }
            MonthlySeries::new(feature_name(i), "index", config.start, values)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SynthSample {
        target: MonthlySeries::new("target", "thousands of persons", config.start, target)?,
        features,
        truth: TruthLedger {
            schema_version: TRUTH_SCHEMA_VERSION,
            config: config.clone(),
            feature_coefficients: coefficients,
            target_noise,
        },
    })
}
