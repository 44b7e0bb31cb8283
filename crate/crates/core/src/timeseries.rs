//! Date-indexed series with daily harmonization and rolling aggregation.
//!
//! Dates are calendar dates without a time of day. Sparse series are brought
//! to a daily grid by linear interpolation between observations and by
//! carrying the last observation forward to an `as_of` date.

use crate::error::{Error, Result};
use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Daily,
    Weekly,
    Monthly,
    Quarterly,
    Annual,
}

impl Frequency {
    pub const ALL: [Frequency; 5] = [
        Frequency::Daily,
        Frequency::Weekly,
        Frequency::Monthly,
        Frequency::Quarterly,
        Frequency::Annual,
    ];

    /// Calendar range of gaps between consecutive observations, in days.
    pub fn gap_range(self) -> (f64, f64) {
        match self {
            Frequency::Daily => (1.0, 1.0),
            Frequency::Weekly => (7.0, 7.0),
            Frequency::Monthly => (28.0, 31.0),
            Frequency::Quarterly => (89.0, 92.0),
            Frequency::Annual => (365.0, 366.0),
        }
    }

    /// Whether a median gap is consistent with this frequency (±1 day).
    pub fn accepts_gap(self, median_gap_days: f64) -> bool {
        let (lo, hi) = self.gap_range();
        median_gap_days >= lo - 1.0 && median_gap_days <= hi + 1.0
    }

    /// Frequency implied by the median gap of the given dates, if any.
    pub fn infer(dates: &[NaiveDate]) -> Option<Frequency> {
        let gap = median_gap(dates)?;
        Frequency::ALL.into_iter().find(|f| f.accepts_gap(gap))
    }

    /// Steps of this frequency per year, used to express half-lives.
    pub fn steps_per_year(self) -> f64 {
        match self {
            Frequency::Daily => 365.25,
            Frequency::Weekly => 365.25 / 7.0,
            Frequency::Monthly => 12.0,
            Frequency::Quarterly => 4.0,
            Frequency::Annual => 1.0,
        }
    }

    /// Distance between two dates in steps of this frequency.
    pub fn steps_between(self, from: NaiveDate, to: NaiveDate) -> f64 {
        let months = (to.year() - from.year()) * 12 + to.month() as i32 - from.month() as i32;
        match self {
            Frequency::Daily => (to - from).num_days() as f64,
            Frequency::Weekly => (to - from).num_days() as f64 / 7.0,
            Frequency::Monthly => months as f64,
            Frequency::Quarterly => months as f64 / 3.0,
            Frequency::Annual => (to.year() - from.year()) as f64,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Frequency::Daily => "daily",
            Frequency::Weekly => "weekly",
            Frequency::Monthly => "monthly",
            Frequency::Quarterly => "quarterly",
            Frequency::Annual => "annual",
        }
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Frequency {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Frequency::ALL
            .into_iter()
            .find(|f| f.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown frequency '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationKind {
    Sum,
    Mean,
}

impl AggregationKind {
    /// Reduce values in order. Both window and calendar-year reductions go
    /// through here so equal spans give bit-identical results.
    pub fn reduce(self, values: &[f64]) -> f64 {
        let mut total = 0.0;
        for v in values {
            total += v;
        }
        match self {
            AggregationKind::Sum => total,
            AggregationKind::Mean => total / values.len() as f64,
        }
    }
}

fn median_gap(dates: &[NaiveDate]) -> Option<f64> {
    if dates.len() < 2 {
        return None;
    }
    let mut gaps: Vec<i64> = dates.windows(2).map(|w| (w[1] - w[0]).num_days()).collect();
    gaps.sort_unstable();
    let n = gaps.len();
    Some(if n % 2 == 1 {
        gaps[n / 2] as f64
    } else {
        (gaps[n / 2 - 1] + gaps[n / 2]) as f64 / 2.0
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    points: Vec<(NaiveDate, f64)>,
    frequency: Frequency,
    unit: String,
}

impl TimeSeries {
    /// Build a series, checking date order, finiteness and that the median
    /// gap matches the declared frequency.
    pub fn new(points: Vec<(NaiveDate, f64)>, frequency: Frequency, unit: impl Into<String>) -> Result<Self> {
        let series = Self::mixed(points, frequency, unit)?;
        if let Some(gap) = median_gap(&series.dates()) {
            if !frequency.accepts_gap(gap) {
                return Err(Error::InvalidSeries(format!(
                    "median gap {gap} days is inconsistent with {frequency} frequency"
                )));
            }
        }
        Ok(series)
    }

    /// Like [`TimeSeries::new`] but without the frequency check; used for
    /// spliced series whose history is coarser than their declared frequency.
    pub fn mixed(points: Vec<(NaiveDate, f64)>, frequency: Frequency, unit: impl Into<String>) -> Result<Self> {
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidSeries(format!(
                    "dates must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some((d, v)) = points.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!("non-finite value {v} at {d}")));
        }
        Ok(Self {
            points,
            frequency,
            unit: unit.into(),
        })
    }

    pub fn empty(frequency: Frequency, unit: impl Into<String>) -> Self {
        Self {
            points: Vec::new(),
            frequency,
            unit: unit.into(),
        }
    }

    /// Daily series starting at `start` with one value per consecutive day.
    pub fn daily_from(start: NaiveDate, values: Vec<f64>, unit: impl Into<String>) -> Result<Self> {
        let points = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| (start + Duration::days(i as i64), v))
            .collect();
        Self::new(points, Frequency::Daily, unit)
    }

    pub fn points(&self) -> &[(NaiveDate, f64)] {
        &self.points
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.points.first().map(|p| p.0)
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.points.last().map(|p| p.0)
    }

    pub fn value_at(&self, date: NaiveDate) -> Option<f64> {
        self.points
            .binary_search_by_key(&date, |p| p.0)
            .ok()
            .map(|i| self.points[i].1)
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = unit.into();
        self
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let points = self.points.iter().map(|&(d, v)| (d, f(v))).collect();
        Self::mixed(points, self.frequency, self.unit.clone())
    }

    /// True when the series is daily with no missing days.
    pub fn is_contiguous_daily(&self) -> bool {
        self.frequency == Frequency::Daily
            && self.points.windows(2).all(|w| (w[1].0 - w[0].0).num_days() == 1)
    }

    fn require_contiguous_daily(&self, op: &str) -> Result<()> {
        if self.is_contiguous_daily() {
            Ok(())
        } else {
            Err(Error::InvalidSeries(format!("{op} requires a gap-free daily series")))
        }
    }

    /// Daily series over `[first date, as_of]`: linear between observations,
    /// last observation carried forward after the final date.
    pub fn to_daily(&self, as_of: NaiveDate) -> Result<Self> {
        let (first, last) = match (self.points.first(), self.points.last()) {
            (Some(f), Some(l)) => (f.0, l.0),
            _ => return Err(Error::EmptyInput),
        };
        if as_of < last {
            return Err(Error::AsOfPrecedesData { as_of, last });
        }
        let total = (as_of - first).num_days() as usize + 1;
        let mut values = Vec::with_capacity(total);
        for w in self.points.windows(2) {
            let (d0, v0) = w[0];
            let (d1, v1) = w[1];
            let gap = (d1 - d0).num_days();
            let (lo, hi) = if v0 <= v1 { (v0, v1) } else { (v1, v0) };
            values.push(v0);
            for k in 1..gap {
                let t = k as f64 / gap as f64;
                values.push((v0 + (v1 - v0) * t).clamp(lo, hi));
            }
        }
        let last_value = self.points[self.points.len() - 1].1;
        values.resize(total, last_value);
        Ok(Self {
            points: values
                .into_iter()
                .enumerate()
                .map(|(i, v)| (first + Duration::days(i as i64), v))
                .collect(),
            frequency: Frequency::Daily,
            unit: self.unit.clone(),
        })
    }

    /// Trailing-window reduction; the window ending on `d` covers
    /// `[d - window_days + 1, d]` and output starts at the first full window.
    pub fn rolling_window(&self, window_days: usize, kind: AggregationKind) -> Result<Self> {
        self.require_contiguous_daily("rolling_window")?;
        if window_days == 0 {
            return Err(Error::InvalidArgument("window_days must be at least 1".into()));
        }
        if self.points.len() < window_days {
            return Err(Error::InsufficientHistory {
                needed: window_days,
                available: self.points.len(),
            });
        }
        let values = self.values();
        let points = (window_days - 1..values.len())
            .map(|i| (self.points[i].0, kind.reduce(&values[i + 1 - window_days..=i])))
            .collect();
        Ok(Self {
            points,
            frequency: Frequency::Daily,
            unit: self.unit.clone(),
        })
    }

    /// Reduction of the window of `window_days` ending on `end`, if covered.
    pub fn window_value(&self, end: NaiveDate, window_days: usize, kind: AggregationKind) -> Option<f64> {
        let first = self.first_date()?;
        let end_idx = (end - first).num_days();
        if end_idx < window_days as i64 - 1 || end_idx as usize >= self.points.len() {
            return None;
        }
        let end_idx = end_idx as usize;
        let window: Vec<f64> = self.points[end_idx + 1 - window_days..=end_idx]
            .iter()
            .map(|p| p.1)
            .collect();
        Some(kind.reduce(&window))
    }

    /// One value per fully covered calendar year, dated December 31.
    pub fn annualize(&self, kind: AggregationKind) -> Result<Self> {
        self.require_contiguous_daily("annualize")?;
        let (first, last) = match (self.first_date(), self.last_date()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::NoCompleteYear),
        };
        let first_year = if first.ordinal() == 1 { first.year() } else { first.year() + 1 };
        let last_year = if last.month() == 12 && last.day() == 31 { last.year() } else { last.year() - 1 };
        if first_year > last_year {
            return Err(Error::NoCompleteYear);
        }
        let mut points = Vec::new();
        for year in first_year..=last_year {
            let start = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid date");
            let end = NaiveDate::from_ymd_opt(year, 12, 31).expect("valid date");
            let i0 = (start - first).num_days() as usize;
            let i1 = (end - first).num_days() as usize;
            let values: Vec<f64> = self.points[i0..=i1].iter().map(|p| p.1).collect();
            points.push((end, kind.reduce(&values)));
        }
        Ok(Self {
            points,
            frequency: Frequency::Annual,
            unit: self.unit.clone(),
        })
    }

    /// Values as a percentage of the 1990 calendar-year mean.
    pub fn rebase_to_1990(&self) -> Result<Self> {
        let base: Vec<f64> = self
            .points
            .iter()
            .filter(|p| p.0.year() == 1990)
            .map(|p| p.1)
            .collect();
        if base.is_empty() {
            return Err(Error::NoValidBase);
        }
        let base_mean = AggregationKind::Mean.reduce(&base);
        if base_mean == 0.0 || !base_mean.is_finite() {
            return Err(Error::NoValidBase);
        }
        let points = self.points.iter().map(|&(d, v)| (d, v / base_mean * 100.0)).collect();
        Ok(Self {
            points,
            frequency: self.frequency,
            unit: "% of 1990 mean".into(),
        })
    }

    /// Points whose dates fall in `[start, end]`.
    pub fn slice(&self, start: NaiveDate, end: NaiveDate) -> Vec<(NaiveDate, f64)> {
        self.points
            .iter()
            .filter(|p| p.0 >= start && p.0 <= end)
            .copied()
            .collect()
    }

    pub fn read_csv(path: &Path, frequency: Frequency, unit: &str) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let points = read_points(file, path)?;
        Self::new(points, frequency, unit).map_err(|e| Error::parse(path, e.to_string()))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let ser = |e: csv::Error| Error::Serialization(e.to_string());
        w.write_record(["date", "value"]).map_err(ser)?;
        for (d, v) in &self.points {
            w.write_record([d.to_string(), format_value(*v)]).map_err(ser)?;
        }
        w.flush().map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// Shortest text that round-trips to the same `f64`.
pub fn format_value(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

/// Accept a date as a `YYYY-MM-DD` string or a bare TOML date.
pub(crate) fn deserialize_date<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<NaiveDate, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Text(String),
        Toml(toml::value::Datetime),
    }
    let text = match Repr::deserialize(d)? {
        Repr::Text(s) => s,
        Repr::Toml(t) => t.to_string(),
    };
    parse_date(&text).map_err(serde::de::Error::custom)
}

pub(crate) fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| format!("bad date '{s}': {e}"))
}

pub(crate) fn parse_value(s: &str) -> std::result::Result<f64, String> {
    s.trim().parse::<f64>().map_err(|e| format!("bad value '{s}': {e}"))
}

/// Two-column `date,value` text with a header row.
pub fn read_points<R: Read>(reader: R, path: &Path) -> Result<Vec<(NaiveDate, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut points = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, e.to_string()))?;
        if record.len() < 2 {
            return Err(Error::parse(path, format!("row {}: expected two columns", line + 2)));
        }
        let date = parse_date(&record[0]).map_err(|m| Error::parse(path, format!("row {}: {m}", line + 2)))?;
        let value = parse_value(&record[1]).map_err(|m| Error::parse(path, format!("row {}: {m}", line + 2)))?;
        points.push((date, value));
    }
    Ok(points)
}

/// Pointwise combination of two daily series over their common dates.
pub fn combine_daily(
    a: &TimeSeries,
    b: &TimeSeries,
    unit: &str,
    f: impl Fn(f64, f64) -> f64,
) -> Result<TimeSeries> {
    a.require_contiguous_daily("combine_daily")?;
    b.require_contiguous_daily("combine_daily")?;
    let (a0, a1) = a.first_date().zip(a.last_date()).ok_or(Error::EmptyInput)?;
    let (b0, b1) = b.first_date().zip(b.last_date()).ok_or(Error::EmptyInput)?;
    let start = a0.max(b0);
    let end = a1.min(b1);
    if start > end {
        return Err(Error::NoOverlap(format!("{a0}..{a1} and {b0}..{b1}")));
    }
    let ia = (start - a0).num_days() as usize;
    let ib = (start - b0).num_days() as usize;
    let n = (end - start).num_days() as usize + 1;
    let values = (0..n)
        .map(|k| f(a.points[ia + k].1, b.points[ib + k].1))
        .collect();
    TimeSeries::daily_from(start, values, unit)
}
