//! CSV readers, file validation, and monthly aggregation of raw inputs.
//!
//! Dialect: UTF-8, comma separated, exactly one header row, months written
//! `YYYY-MM` and dates `YYYY-MM-DD`. Headers must match exactly:
//!
//! | schema           | header                                               |
//! |------------------|------------------------------------------------------|
//! | `employer`       | `employer_id,month,active_employees,sector,size_band` |
//! | `storm`          | `state,event_type,begin_date,injuries,damage_usd`    |
//! | `claims`         | `week_ending,initial_claims,continued_claims`        |
//! | `monthly-series` | `month,value`                                        |

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{MonthKey, MonthlySeries};

pub const VALIDATION_SCHEMA_VERSION: u32 = 1;

/// Robust z-score above which a numeric value is reported as an outlier.
pub const OUTLIER_Z: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schema {
    Employer,
    Storm,
    Claims,
    MonthlySeries,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Text,
    Month,
    Date,
    Saturday,
    Count,
    Amount,
    Real,
}

impl Kind {
    fn is_numeric(self) -> bool {
        matches!(self, Kind::Count | Kind::Amount | Kind::Real)
    }
}

impl Schema {
    pub fn name(self) -> &'static str {
        match self {
            Schema::Employer => "employer",
            Schema::Storm => "storm",
            Schema::Claims => "claims",
            Schema::MonthlySeries => "monthly-series",
        }
    }

    fn columns(self) -> &'static [(&'static str, Kind)] {
        match self {
            Schema::Employer => &[
                ("employer_id", Kind::Text),
                ("month", Kind::Month),
                ("active_employees", Kind::Count),
                ("sector", Kind::Text),
                ("size_band", Kind::Text),
            ],
            Schema::Storm => &[
                ("state", Kind::Text),
                ("event_type", Kind::Text),
                ("begin_date", Kind::Date),
                ("injuries", Kind::Count),
                ("damage_usd", Kind::Amount),
            ],
            Schema::Claims => &[
                ("week_ending", Kind::Saturday),
                ("initial_claims", Kind::Count),
                ("continued_claims", Kind::Count),
            ],
            Schema::MonthlySeries => &[("month", Kind::Month), ("value", Kind::Real)],
        }
    }

    pub fn header(self) -> Vec<&'static str> {
        self.columns().iter().map(|(n, _)| *n).collect()
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Schema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "employer" => Ok(Schema::Employer),
            "storm" => Ok(Schema::Storm),
            "claims" => Ok(Schema::Claims),
            "monthly-series" => Ok(Schema::MonthlySeries),
            other => Err(Error::InvalidParams(format!(
                "unknown schema {other:?}, expected employer, storm, claims or monthly-series"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmployerRecord {
    pub employer_id: String,
    pub month: MonthKey,
    pub active_employees: u64,
    pub sector: String,
    pub size_band: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StormEvent {
    pub state: String,
    pub event_type: String,
    pub begin_date: NaiveDate,
    pub injuries: u64,
    pub damage_usd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeeklyClaims {
    pub week_ending: NaiveDate,
    pub initial_claims: u64,
    pub continued_claims: u64,
}

// ---------------------------------------------------------------------------
// cells

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Text(String),
    Month(MonthKey),
    Date(NaiveDate),
    Count(u64),
    Number(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    Encoding,
    Header,
    RaggedRow,
    Missing,
    Unparseable,
    TypeMismatch,
    OutOfRange,
    Duplicate,
    Ordering,
    Outlier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    let b = s.as_bytes();
    let shape = b.len() == 10
        && b[4] == b'-'
        && b[7] == b'-'
        && b.iter()
            .enumerate()
            .all(|(i, c)| i == 4 || i == 7 || c.is_ascii_digit());
    if !shape {
        return None;
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()
}

fn parse_cell(raw: &str, kind: Kind) -> Result<Cell, (FindingKind, String)> {
    let s = raw.trim();
    if s.is_empty() {
        return Err((FindingKind::Missing, "empty cell".into()));
    }
    let unparseable = |what: &str| (FindingKind::Unparseable, format!("{s:?} is not {what}"));
    match kind {
        Kind::Text => Ok(Cell::Text(s.to_string())),
        Kind::Month => s
            .parse()
            .map(Cell::Month)
            .map_err(|_| unparseable("a YYYY-MM month")),
        Kind::Date | Kind::Saturday => {
            let d = parse_date(s).ok_or_else(|| unparseable("a YYYY-MM-DD date"))?;
            if kind == Kind::Saturday && d.weekday() != Weekday::Sat {
                return Err((
                    FindingKind::OutOfRange,
                    format!("{s} is a {}, not a Saturday", d.weekday()),
                ));
            }
            Ok(Cell::Date(d))
        }
        Kind::Count => {
            if let Ok(v) = s.parse::<u64>() {
                return Ok(Cell::Count(v));
            }
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() && v < 0.0 => {
                    Err((FindingKind::OutOfRange, format!("{s} is negative")))
                }
                Ok(v) if v.is_finite() => Err((
                    FindingKind::TypeMismatch,
                    format!("{s} is not a whole number"),
                )),
                _ => Err(unparseable("a nonnegative integer")),
            }
        }
        Kind::Amount | Kind::Real => match s.parse::<f64>() {
            Ok(v) if !v.is_finite() => Err(unparseable("a finite number")),
            Ok(v) if kind == Kind::Amount && v < 0.0 => {
                Err((FindingKind::OutOfRange, format!("{s} is negative")))
            }
            Ok(v) => Ok(Cell::Number(v)),
            Err(_) => Err(unparseable("a number")),
        },
    }
}

/// Rows of `text` with the header checked, in file order with line numbers.
fn rows(schema: Schema, text: &str) -> Result<Vec<(u64, Vec<Cell>)>> {
    let err = |line: u64, message: String| Error::Parse {
        schema: schema.name(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = records
        .next()
        .ok_or_else(|| err(1, "missing header row".into()))?
        .map_err(|e| err(1, e.to_string()))?;
    let expected = schema.header();
    if header.iter().map(str::trim).collect::<Vec<_>>() != expected {
        return Err(err(1, format!("header must be {}", expected.join(","))));
    }
    let columns = schema.columns();
    let mut out = Vec::new();
    for record in records {
        let record = record.map_err(|e| err(0, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != columns.len() {
            return Err(err(
                line,
                format!("expected {} fields, found {}", columns.len(), record.len()),
            ));
        }
        let cells = record
            .iter()
            .zip(columns)
            .map(|(raw, (name, kind))| {
                parse_cell(raw, *kind).map_err(|(_, m)| err(line, format!("{name}: {m}")))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push((line, cells));
    }
    Ok(out)
}

macro_rules! take {
    ($cells:expr, $variant:ident) => {
        match $cells.next() {
            Some(Cell::$variant(v)) => v,
            _ => unreachable!("cell kinds follow the schema"),
        }
    };
}

pub fn parse_employers(text: &str) -> Result<Vec<EmployerRecord>> {
    let mut seen = HashSet::new();
    rows(Schema::Employer, text)?
        .into_iter()
        .map(|(line, cells)| {
            let mut c = cells.into_iter();
            let rec = EmployerRecord {
                employer_id: take!(c, Text),
                month: take!(c, Month),
                active_employees: take!(c, Count),
                sector: take!(c, Text),
                size_band: take!(c, Text),
            };
            if !seen.insert((rec.employer_id.clone(), rec.month)) {
                return Err(Error::Parse {
                    schema: "employer",
                    line,
                    message: format!("duplicate employer {} in {}", rec.employer_id, rec.month),
                });
            }
            Ok(rec)
        })
        .collect()
}

pub fn parse_storms(text: &str) -> Result<Vec<StormEvent>> {
    Ok(rows(Schema::Storm, text)?
        .into_iter()
        .map(|(_, cells)| {
            let mut c = cells.into_iter();
            StormEvent {
                state: take!(c, Text),
                event_type: take!(c, Text),
                begin_date: take!(c, Date),
                injuries: take!(c, Count),
                damage_usd: take!(c, Number),
            }
        })
        .collect())
}

pub fn parse_claims(text: &str) -> Result<Vec<WeeklyClaims>> {
    let mut out: Vec<WeeklyClaims> = Vec::new();
    for (line, cells) in rows(Schema::Claims, text)? {
        let mut c = cells.into_iter();
        let week = WeeklyClaims {
            week_ending: take!(c, Date),
            initial_claims: take!(c, Count),
            continued_claims: take!(c, Count),
        };
        if let Some(prev) = out.last() {
            if week.week_ending <= prev.week_ending {
                return Err(Error::Parse {
                    schema: "claims",
                    line,
                    message: format!(
                        "week_ending {} does not follow {}",
                        week.week_ending, prev.week_ending
                    ),
                });
            }
        }
        out.push(week);
    }
    Ok(out)
}

/// Reads a `month,value` file into a contiguous series.
pub fn parse_monthly_series(text: &str, name: &str, units: &str) -> Result<MonthlySeries> {
    let pairs = rows(Schema::MonthlySeries, text)?
        .into_iter()
        .map(|(_, cells)| {
            let mut c = cells.into_iter();
            (take!(c, Month), take!(c, Number))
        });
    MonthlySeries::from_pairs(name, units, pairs)
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::UnreadableFile {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_employers(path: &Path) -> Result<Vec<EmployerRecord>> {
    parse_employers(&read_text(path)?)
}

pub fn read_storms(path: &Path) -> Result<Vec<StormEvent>> {
    parse_storms(&read_text(path)?)
}

pub fn read_claims(path: &Path) -> Result<Vec<WeeklyClaims>> {
    parse_claims(&read_text(path)?)
}

/// Reads a monthly-series file, naming the series after the file stem.
pub fn read_monthly_series(path: &Path) -> Result<MonthlySeries> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".into());
    parse_monthly_series(&read_text(path)?, &name, "")
}

/// Writes a series as a `month,value` file.
pub fn monthly_series_csv(series: &MonthlySeries) -> String {
    let mut out = String::from("month,value\n");
    for (month, value) in series.iter() {
        out.push_str(&format!("{month},{value}\n"));
    }
    out
}

// ---------------------------------------------------------------------------
// validation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub kind: FindingKind,
    pub column: Option<String>,
    /// 1-based line in the file.
    pub line: Option<u64>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub missing: usize,
    pub unparseable: usize,
    pub type_mismatch: usize,
    pub out_of_range: usize,
    pub outliers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub schema_version: u32,
    pub schema: Schema,
    pub rows: usize,
    pub pass: bool,
    pub errors: usize,
    pub warnings: usize,
    pub columns: Vec<ColumnSummary>,
    pub findings: Vec<Finding>,
}

struct Collector {
    findings: Vec<Finding>,
    columns: Vec<ColumnSummary>,
}

impl Collector {
    fn add(
        &mut self,
        kind: FindingKind,
        column: Option<usize>,
        line: Option<u64>,
        message: String,
    ) {
        let severity = if kind == FindingKind::Outlier {
            Severity::Warning
        } else {
            Severity::Error
        };
        if let Some(c) = column {
            let s = &mut self.columns[c];
            match kind {
                FindingKind::Missing => s.missing += 1,
                FindingKind::Unparseable => s.unparseable += 1,
                FindingKind::TypeMismatch => s.type_mismatch += 1,
                FindingKind::OutOfRange => s.out_of_range += 1,
                FindingKind::Outlier => s.outliers += 1,
                _ => {}
            }
        }
        self.findings.push(Finding {
            severity,
            kind,
            column: column.map(|c| self.columns[c].name.clone()),
            line,
            message,
        });
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Modified z-scores `0.6745 (x - median) / MAD`; when the MAD is zero the
/// mean absolute deviation scaled by 1.2533 stands in. `None` if both vanish.
pub fn robust_z_scores(values: &[f64]) -> Option<Vec<f64>> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let med = median(&sorted);
    let mut dev: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    let mean_ad = dev.iter().sum::<f64>() / dev.len() as f64;
    dev.sort_by(f64::total_cmp);
    let mad = median(&dev);
    let scale = if mad > 0.0 {
        mad / 0.6745
    } else if mean_ad > 0.0 {
        1.253314 * mean_ad
    } else {
        return None;
    };
    Some(values.iter().map(|v| (v - med) / scale).collect())
}

/// Checks `bytes` against `schema` and reports every problem found. Missing,
/// malformed, or out-of-range cells are errors; outliers are warnings.
pub fn validate_bytes(bytes: &[u8], schema: Schema) -> ValidationReport {
    let columns = schema.columns();
    let mut col = Collector {
        findings: Vec::new(),
        columns: columns
            .iter()
            .map(|(n, _)| ColumnSummary {
                name: (*n).to_string(),
                ..Default::default()
            })
            .collect(),
    };
    let mut n_rows = 0;

    match std::str::from_utf8(bytes) {
        Err(e) => col.add(FindingKind::Encoding, None, None, format!("not UTF-8: {e}")),
        Ok(text) => n_rows = validate_text(text, schema, &mut col),
    }

    let errors = col
        .findings
        .iter()
        .filter(|f| f.severity == Severity::Error)
        .count();
    ValidationReport {
        schema_version: VALIDATION_SCHEMA_VERSION,
        schema,
        rows: n_rows,
        pass: errors == 0,
        errors,
        warnings: col.findings.len() - errors,
        columns: col.columns,
        findings: col.findings,
    }
}

fn validate_text(text: &str, schema: Schema, col: &mut Collector) -> usize {
    let columns = schema.columns();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    match records.next() {
        None => {
            col.add(FindingKind::Header, None, Some(1), "file is empty".into());
            return 0;
        }
        Some(Err(e)) => {
            col.add(FindingKind::Header, None, Some(1), e.to_string());
            return 0;
        }
        Some(Ok(h)) => {
            let got: Vec<&str> = h.iter().map(str::trim).collect();
            if got != schema.header() {
                col.add(
                    FindingKind::Header,
                    None,
                    Some(1),
                    format!(
                        "header is {:?}, expected {}",
                        got.join(","),
                        schema.header().join(",")
                    ),
                );
                return 0;
            }
        }
    }

    let mut numeric: Vec<Vec<(u64, f64)>> = vec![Vec::new(); columns.len()];
    let mut keys_seen: HashSet<(String, MonthKey)> = HashSet::new();
    let mut prev_key: Option<(u64, Cell)> = None;
    let mut n_rows = 0;

    for record in records {
        n_rows += 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                col.add(FindingKind::Unparseable, None, None, e.to_string());
                continue;
            }
        };
        let line = record.position().map(|p| p.line());
        if record.len() != columns.len() {
            col.add(
                FindingKind::RaggedRow,
                None,
                line,
                format!("expected {} fields, found {}", columns.len(), record.len()),
            );
            continue;
        }
        let mut cells: Vec<Option<Cell>> = Vec::with_capacity(columns.len());
        for (i, (raw, (_, kind))) in record.iter().zip(columns).enumerate() {
            match parse_cell(raw, *kind) {
                Ok(cell) => {
                    if kind.is_numeric() {
                        let v = match &cell {
                            Cell::Count(c) => *c as f64,
                            Cell::Number(x) => *x,
                            _ => unreachable!("numeric kinds"),
                        };
                        numeric[i].push((line.unwrap_or(0), v));
                    }
                    cells.push(Some(cell));
                }
                Err((kind, message)) => {
                    col.add(kind, Some(i), line, message);
                    cells.push(None);
                }
            }
        }

        // cross-row rules
        match schema {
            Schema::Employer => {
                if let (Some(Cell::Text(id)), Some(Cell::Month(m))) = (&cells[0], &cells[1]) {
                    if !keys_seen.insert((id.clone(), *m)) {
                        col.add(
                            FindingKind::Duplicate,
                            Some(0),
                            line,
                            format!("employer {id} appears twice in {m}"),
                        );
                    }
                }
            }
            Schema::Claims | Schema::MonthlySeries => {
                if let Some(key) = cells[0].clone() {
                    if let Some((prev_line, prev)) = &prev_key {
                        let ok = match (prev, &key) {
                            (Cell::Date(a), Cell::Date(b)) => b > a,
                            (Cell::Month(a), Cell::Month(b)) => *b == a.next(),
                            _ => true,
                        };
                        if !ok {
                            let what = if schema == Schema::Claims {
                                "week_ending dates must be unique and increasing"
                            } else {
                                "months must be consecutive with no gaps or repeats"
                            };
                            col.add(
                                FindingKind::Ordering,
                                Some(0),
                                line,
                                format!("{what} (previous key on line {prev_line})"),
                            );
                        }
                    }
                    prev_key = Some((line.unwrap_or(0), key));
                }
            }
            Schema::Storm => {}
        }
    }

    for (i, values) in numeric.iter().enumerate() {
        let raw: Vec<f64> = values.iter().map(|(_, v)| *v).collect();
        let Some(z) = robust_z_scores(&raw) else {
            continue;
        };
        for ((line, v), z) in values.iter().zip(z) {
            if z.abs() > OUTLIER_Z {
                col.add(
                    FindingKind::Outlier,
                    Some(i),
                    Some(*line),
                    format!("{v} has robust z-score {z:.1}"),
                );
            }
        }
    }
    n_rows
}

/// Validates the file at `path`. Only an unreadable file is an `Err`.
pub fn validate(path: &Path, schema: Schema) -> Result<ValidationReport> {
    let bytes = std::fs::read(path).map_err(|source| Error::UnreadableFile {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(validate_bytes(&bytes, schema))
}

// ---------------------------------------------------------------------------
// aggregation

/// Month-over-month employment change of the employers present in both months.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelChange {
    pub series: MonthlySeries,
    /// Months where no employer also appeared the month before (value 0).
    pub empty_panels: Vec<MonthKey>,
}

pub fn matched_panel_aggregate(records: &[EmployerRecord]) -> Result<PanelChange> {
    let mut by_month: BTreeMap<MonthKey, HashMap<&str, u64>> = BTreeMap::new();
    for r in records {
        if by_month
            .entry(r.month)
            .or_default()
            .insert(r.employer_id.as_str(), r.active_employees)
            .is_some()
        {
            return Err(Error::InvalidParams(format!(
                "employer {} appears twice in {}",
                r.employer_id, r.month
            )));
        }
    }
    let (Some(&first), Some(&last)) = (by_month.keys().next(), by_month.keys().next_back()) else {
        return Err(Error::TooShort("no employer records".into()));
    };
    if first == last {
        return Err(Error::TooShort(format!(
            "records cover only {first}; need two months"
        )));
    }

    let empty = HashMap::new();
    let mut values = Vec::new();
    let mut empty_panels = Vec::new();
    let mut month = first.next();
    while month <= last {
        let prev = by_month.get(&month.prev()).unwrap_or(&empty);
        let cur = by_month.get(&month).unwrap_or(&empty);
        let mut change: i128 = 0;
        let mut panel = 0usize;
        for (id, now) in cur {
            if let Some(before) = prev.get(id) {
                change += i128::from(*now) - i128::from(*before);
                panel += 1;
            }
        }
        if panel == 0 {
            empty_panels.push(month);
        }
        values.push(change as f64);
        month = month.next();
    }
    Ok(PanelChange {
        series: MonthlySeries::new(
            "matched_panel_change",
            "persons (matched-panel change)",
            first.next(),
            values,
        )?,
        empty_panels,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyClaims {
    /// Sum of weekly initial claims.
    pub initial_claims: MonthlySeries,
    /// Mean of weekly continued claims.
    pub continued_claims: MonthlySeries,
}

fn saturdays_in(month: MonthKey) -> Vec<NaiveDate> {
    let first = NaiveDate::from_ymd_opt(month.year(), month.month(), 1).expect("valid month");
    let offset =
        (Weekday::Sat.num_days_from_monday() + 7 - first.weekday().num_days_from_monday()) % 7;
    let mut day = first + chrono::Days::new(u64::from(offset));
    let mut out = Vec::new();
    while day.month() == month.month() {
        out.push(day);
        day = day + chrono::Days::new(7);
    }
    out
}

fn month_of(date: NaiveDate) -> MonthKey {
    MonthKey::new(date.year(), date.month()).expect("chrono months are 1..=12")
}

/// Assigns each week to the month of its `week_ending` date and keeps only
/// months whose every Saturday is present.
pub fn aggregate_claims_monthly(claims: &[WeeklyClaims]) -> Result<MonthlyClaims> {
    if claims.is_empty() {
        return Err(Error::Empty("no weekly claims".into()));
    }
    let mut by_month: BTreeMap<MonthKey, BTreeMap<NaiveDate, &WeeklyClaims>> = BTreeMap::new();
    for w in claims {
        if w.week_ending.weekday() != Weekday::Sat {
            return Err(Error::InvalidParams(format!(
                "week ending {} is not a Saturday",
                w.week_ending
            )));
        }
        if by_month
            .entry(month_of(w.week_ending))
            .or_default()
            .insert(w.week_ending, w)
            .is_some()
        {
            return Err(Error::InvalidParams(format!(
                "week ending {} appears twice",
                w.week_ending
            )));
        }
    }

    let complete: Vec<MonthKey> = by_month
        .iter()
        .filter(|(m, weeks)| saturdays_in(**m).iter().all(|d| weeks.contains_key(d)))
        .map(|(m, _)| *m)
        .collect();
    let (Some(&first), Some(&last)) = (complete.first(), complete.last()) else {
        return Err(Error::Empty(
            "no month is fully covered by the weekly data".into(),
        ));
    };

    let mut initial = Vec::new();
    let mut continued = Vec::new();
    let mut month = first;
    while month <= last {
        let weeks = by_month
            .get(&month)
            .filter(|_| complete.contains(&month))
            .ok_or_else(|| Error::Gap {
                name: "claims".into(),
                expected: month,
                found: month,
            })?;
        let initial_sum: u64 = weeks.values().map(|w| w.initial_claims).sum();
        let continued_sum: u128 = weeks.values().map(|w| u128::from(w.continued_claims)).sum();
        initial.push(initial_sum as f64);
        continued.push(continued_sum as f64 / weeks.len() as f64);
        month = month.next();
    }
    Ok(MonthlyClaims {
        initial_claims: MonthlySeries::new("initial_claims", "claims per month", first, initial)?,
        continued_claims: MonthlySeries::new(
            "continued_claims",
            "average weekly claimants",
            first,
            continued,
        )?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyStorms {
    pub event_count: MonthlySeries,
    pub damage_usd: MonthlySeries,
}

/// National event count and total damage per month of `begin_date`, with
/// zeros for quiet months inside the spanned range.
pub fn aggregate_storms_monthly(events: &[StormEvent]) -> Result<MonthlyStorms> {
    if events.is_empty() {
        return Err(Error::Empty("no storm events".into()));
    }
    let mut by_month: BTreeMap<MonthKey, Vec<f64>> = BTreeMap::new();
    for e in events {
        if !(e.damage_usd.is_finite() && e.damage_usd >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "damage {} must be finite and nonnegative",
                e.damage_usd
            )));
        }
        by_month
            .entry(month_of(e.begin_date))
            .or_default()
            .push(e.damage_usd);
    }
    let first = *by_month.keys().next().expect("non-empty");
    let last = *by_month.keys().next_back().expect("non-empty");
    let mut counts = Vec::new();
    let mut damage = Vec::new();
    let mut month = first;
    while month <= last {
        match by_month.get_mut(&month) {
            Some(d) => {
                // order-independent sum
                d.sort_by(f64::total_cmp);
                counts.push(d.len() as f64);
                damage.push(d.iter().sum());
            }
            None => {
                counts.push(0.0);
                damage.push(0.0);
            }
        }
        month = month.next();
    }
    Ok(MonthlyStorms {
        event_count: MonthlySeries::new("storm_events", "events", first, counts)?,
        damage_usd: MonthlySeries::new("storm_damage_usd", "USD", first, damage)?,
    })
}
