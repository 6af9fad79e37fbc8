//! Month-indexed series and tables.
//!
//! Every series is contiguous: element `i` belongs to calendar month
//! `start + i`. Gaps are rejected at construction time rather than filled.

use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transforms::TransformLedger;

/// A calendar month, ordered by `(year, month)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthKey {
    year: i32,
    month: u32,
}

impl MonthKey {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidMonth { year, month });
        }
        Ok(Self { year, month })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    /// Calendar month, 1 = January.
    pub fn month(self) -> u32 {
        self.month
    }

    /// Months since year 0, January.
    fn ordinal(self) -> i64 {
        i64::from(self.year) * 12 + i64::from(self.month) - 1
    }

    fn from_ordinal(ordinal: i64) -> Self {
        let year = ordinal.div_euclid(12);
        let month = ordinal.rem_euclid(12) as u32 + 1;
        Self {
            year: i32::try_from(year).expect("month arithmetic overflowed the year range"),
            month,
        }
    }

    pub fn add_months(self, n: i64) -> Self {
        Self::from_ordinal(self.ordinal() + n)
    }

    /// Signed number of months from `self` to `other`.
    pub fn months_until(self, other: MonthKey) -> i64 {
        other.ordinal() - self.ordinal()
    }

    pub fn next(self) -> Self {
        self.add_months(1)
    }

    pub fn prev(self) -> Self {
        self.add_months(-1)
    }
}

impl Add<i64> for MonthKey {
    type Output = MonthKey;

    fn add(self, rhs: i64) -> MonthKey {
        self.add_months(rhs)
    }
}

impl fmt::Display for MonthKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for MonthKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::BadMonthKey(s.to_string());
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 || !y.bytes().chain(m.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        MonthKey::new(year, month).map_err(|_| bad())
    }
}

impl Serialize for MonthKey {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MonthKey {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A contiguous run of monthly observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlySeries {
    start: MonthKey,
    values: Vec<f64>,
    name: String,
    units: String,
}

impl MonthlySeries {
    pub fn new(
        name: impl Into<String>,
        units: impl Into<String>,
        start: MonthKey,
        values: Vec<f64>,
    ) -> Result<Self> {
        let name = name.into();
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { name, index });
        }
        Ok(Self {
            start,
            values,
            name,
            units: units.into(),
        })
    }

    /// Builds a series from `(month, value)` pairs that must already be in
    /// ascending, gap-free order.
    pub fn from_pairs(
        name: impl Into<String>,
        units: impl Into<String>,
        pairs: impl IntoIterator<Item = (MonthKey, f64)>,
    ) -> Result<Self> {
        let name = name.into();
        let mut iter = pairs.into_iter();
        let (start, first) = iter
            .next()
            .ok_or_else(|| Error::EmptySeries(name.clone()))?;
        let mut values = vec![first];
        let mut expected = start.next();
        for (month, value) in iter {
            if month != expected {
                return Err(Error::Gap {
                    name,
                    expected,
                    found: month,
                });
            }
            values.push(value);
            expected = expected.next();
        }
        Self::new(name, units, start, values)
    }

    pub fn start(&self) -> MonthKey {
        self.start
    }

    /// Last covered month. Panics on an empty series.
    pub fn end(&self) -> MonthKey {
        assert!(!self.values.is_empty(), "empty series has no end month");
        self.start + (self.values.len() as i64 - 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn units(&self) -> &str {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn month_at(&self, index: usize) -> MonthKey {
        self.start + index as i64
    }

    pub fn get(&self, month: MonthKey) -> Option<f64> {
        let offset = self.start.months_until(month);
        usize::try_from(offset)
            .ok()
            .and_then(|i| self.values.get(i).copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (MonthKey, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.month_at(i), v))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// Month-aligned named columns, one of which may be the prediction target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    months: Vec<MonthKey>,
    columns: IndexMap<String, Vec<f64>>,
    target: Option<String>,
    ledger: TransformLedger,
}

impl FeatureTable {
    /// Creates a table spanning `len` months from `start`.
    pub fn new(start: MonthKey, len: usize, columns: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let months = (0..len).map(|i| start + i as i64).collect();
        let mut map = IndexMap::with_capacity(columns.len());
        for (name, values) in columns {
            if values.len() != len {
                return Err(Error::ColumnLength {
                    name,
                    expected: len,
                    got: values.len(),
                });
            }
            if map.contains_key(&name) {
                return Err(Error::DuplicateColumn(name));
            }
            map.insert(name, values);
        }
        Ok(Self {
            months,
            columns: map,
            target: None,
            ledger: TransformLedger::default(),
        })
    }

    /// Joins series on their common month range; each series becomes a column
    /// named after the series.
    pub fn align(series_list: &[MonthlySeries]) -> Result<Self> {
        let Some(first) = series_list.first() else {
            return Err(Error::EmptyIntersection);
        };
        for s in series_list {
            if s.is_empty() {
                return Err(Error::EmptySeries(s.name().to_string()));
            }
        }
        let from = series_list
            .iter()
            .map(MonthlySeries::start)
            .max()
            .unwrap_or(first.start());
        let to = series_list
            .iter()
            .map(MonthlySeries::end)
            .min()
            .unwrap_or(first.end());
        if from > to {
            return Err(Error::EmptyIntersection);
        }
        let len = (from.months_until(to) + 1) as usize;
        let columns = series_list
            .iter()
            .map(|s| {
                let offset = s.start().months_until(from) as usize;
                (
                    s.name().to_string(),
                    s.values()[offset..offset + len].to_vec(),
                )
            })
            .collect();
        Self::new(from, len, columns)
    }

    /// Restricts the table to `[from, to]` inclusive.
    pub fn slice(&self, from: MonthKey, to: MonthKey) -> Result<Self> {
        let out_of_range = || Error::OutOfRange {
            from,
            to,
            first: self.months.first().copied().unwrap_or(from),
            last: self.months.last().copied().unwrap_or(to),
        };
        let (Some(&first), Some(&last)) = (self.months.first(), self.months.last()) else {
            return Err(out_of_range());
        };
        if from > to || from < first || to > last {
            return Err(out_of_range());
        }
        let lo = first.months_until(from) as usize;
        let hi = first.months_until(to) as usize + 1;
        Ok(self.slice_rows(lo, hi))
    }

    /// Keeps rows `lo..hi` by position.
    pub(crate) fn slice_rows(&self, lo: usize, hi: usize) -> Self {
        Self {
            months: self.months[lo..hi].to_vec(),
            columns: self
                .columns
                .iter()
                .map(|(k, v)| (k.clone(), v[lo..hi].to_vec()))
                .collect(),
            target: self.target.clone(),
            ledger: self.ledger.clone(),
        }
    }

    /// Keeps only the named columns, in the given order, and clears the target.
    pub fn select(&self, names: &[String]) -> Result<Self> {
        let columns = names
            .iter()
            .map(|n| {
                self.column(n)
                    .map(|v| (n.clone(), v.to_vec()))
                    .ok_or_else(|| Error::UnknownColumn(n.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        let start = self
            .first_month()
            .ok_or_else(|| Error::Empty("empty table".into()))?;
        Ok(Self::new(start, self.len(), columns)?.with_ledger(self.ledger.clone()))
    }

    pub fn with_target(mut self, name: &str) -> Result<Self> {
        if !self.columns.contains_key(name) {
            return Err(Error::UnknownColumn(name.to_string()));
        }
        self.target = Some(name.to_string());
        Ok(self)
    }

    pub(crate) fn with_ledger(mut self, ledger: TransformLedger) -> Self {
        self.ledger = ledger;
        self
    }

    pub(crate) fn push_column(&mut self, name: String, values: Vec<f64>) -> Result<()> {
        if values.len() != self.months.len() {
            return Err(Error::ColumnLength {
                name,
                expected: self.months.len(),
                got: values.len(),
            });
        }
        if self.columns.contains_key(&name) {
            return Err(Error::DuplicateColumn(name));
        }
        self.columns.insert(name, values);
        Ok(())
    }

    pub fn months(&self) -> &[MonthKey] {
        &self.months
    }

    pub fn len(&self) -> usize {
        self.months.len()
    }

    pub fn is_empty(&self) -> bool {
        self.months.is_empty()
    }

    pub fn first_month(&self) -> Option<MonthKey> {
        self.months.first().copied()
    }

    pub fn last_month(&self) -> Option<MonthKey> {
        self.months.last().copied()
    }

    pub fn target(&self) -> Option<&str> {
        self.target.as_deref()
    }

    pub fn ledger(&self) -> &TransformLedger {
        &self.ledger
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.get(name).map(Vec::as_slice)
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.columns.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Every column except the target, in table order.
    pub fn feature_names(&self) -> Vec<String> {
        self.columns
            .keys()
            .filter(|k| Some(k.as_str()) != self.target.as_deref())
            .cloned()
            .collect()
    }

    pub fn target_values(&self) -> Result<&[f64]> {
        let name = self.target.as_deref().ok_or(Error::NoTarget)?;
        self.column(name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// A column as a standalone series.
    pub fn column_series(&self, name: &str) -> Result<MonthlySeries> {
        let values = self
            .column(name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))?;
        let start = self
            .first_month()
            .ok_or_else(|| Error::EmptySeries(name.to_string()))?;
        MonthlySeries::new(name, "", start, values.to_vec())
    }
}
