//! Source tables, the manifest that declares them, and the record-linkage
//! steps that turn raw tables into clean series.

use crate::error::{Error, Result};
use crate::timeseries::{combine_daily, parse_date, parse_value, Frequency, TimeSeries};
use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Gap allowed between consecutive observations of a continuous site; wide
/// enough for annual historic counts.
pub const DEFAULT_MAX_GAP_DAYS: i64 = 366;

#[derive(Debug, Clone, PartialEq)]
pub struct SiteObservation {
    pub site_description: String,
    pub date: NaiveDate,
    pub volume: f64,
}

impl SiteObservation {
    pub fn new(site_description: impl Into<String>, date: NaiveDate, volume: f64) -> Result<Self> {
        let site_description = site_description.into();
        if site_description.trim().is_empty() {
            return Err(Error::InvalidArgument("empty site description".into()));
        }
        if !(volume >= 0.0) || !volume.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "volume must be finite and nonnegative, got {volume} for '{site_description}'"
            )));
        }
        Ok(Self {
            site_description,
            date,
            volume,
        })
    }
}

/// Which keywords each site description contains (case-insensitive substring).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeywordAdjacency {
    pub keywords: BTreeSet<String>,
    pub adjacency: BTreeMap<String, BTreeSet<String>>,
}

impl KeywordAdjacency {
    pub fn build<'a>(descriptions: impl IntoIterator<Item = &'a str>, keywords: &BTreeSet<String>) -> Self {
        let keywords: BTreeSet<String> = keywords.iter().map(|k| k.to_lowercase()).collect();
        let mut adjacency = BTreeMap::new();
        for desc in descriptions {
            if adjacency.contains_key(desc) {
                continue;
            }
            let lower = desc.to_lowercase();
            let matched: BTreeSet<String> = keywords.iter().filter(|k| lower.contains(k.as_str())).cloned().collect();
            adjacency.insert(desc.to_string(), matched);
        }
        Self { keywords, adjacency }
    }

    pub fn is_adjacent(&self, description: &str, keyword: &str) -> bool {
        self.adjacency
            .get(description)
            .is_some_and(|set| set.contains(keyword))
    }
}

/// Per keyword, the series of summed volumes over all matching descriptions.
/// Keywords that match nothing map to an empty series.
pub fn match_sites(observations: &[SiteObservation], keywords: &BTreeSet<String>) -> BTreeMap<String, TimeSeries> {
    let adjacency = KeywordAdjacency::build(observations.iter().map(|o| o.site_description.as_str()), keywords);
    let mut totals: BTreeMap<String, BTreeMap<NaiveDate, f64>> =
        adjacency.keywords.iter().map(|k| (k.clone(), BTreeMap::new())).collect();
    for obs in observations {
        for kw in &adjacency.adjacency[&obs.site_description] {
            *totals.get_mut(kw).expect("keyword present").entry(obs.date).or_insert(0.0) += obs.volume;
        }
    }
    totals
        .into_iter()
        .map(|(kw, by_date)| {
            let dates: Vec<NaiveDate> = by_date.keys().copied().collect();
            let freq = Frequency::infer(&dates).unwrap_or(Frequency::Daily);
            let series = TimeSeries::mixed(by_date.into_iter().collect(), freq, "vehicles")
                .expect("dates come from an ordered map");
            (kw, series)
        })
        .collect()
}

/// Sites covering `[start, end]` with no gap longer than `max_gap_days`.
pub fn filter_continuous_sites(
    series_by_site: &BTreeMap<String, TimeSeries>,
    start: NaiveDate,
    end: NaiveDate,
    max_gap_days: i64,
) -> BTreeMap<String, TimeSeries> {
    series_by_site
        .iter()
        .filter(|(_, s)| {
            let (Some(first), Some(last)) = (s.first_date(), s.last_date()) else {
                return false;
            };
            first <= start
                && last >= end
                && s.points().windows(2).all(|w| (w[1].0 - w[0].0).num_days() <= max_gap_days)
        })
        .map(|(k, s)| (k.clone(), s.clone()))
        .collect()
}

/// Sum of the given site series after daily harmonization, over their common span.
pub fn total_volume<'a>(sites: impl IntoIterator<Item = &'a TimeSeries>, as_of: NaiveDate) -> Result<TimeSeries> {
    let mut total: Option<TimeSeries> = None;
    for s in sites {
        let daily = s.to_daily(as_of)?;
        total = Some(match total {
            None => daily,
            Some(acc) => combine_daily(&acc, &daily, "vehicles", |a, b| a + b)?,
        });
    }
    total.ok_or_else(|| Error::MissingInput("no continuous traffic sites".into()))
}

/// Extend `modern` back in time with `historic`, scaled so both have the
/// same mean over the calendar months where they overlap.
pub fn splice(modern: &TimeSeries, historic: &TimeSeries) -> Result<TimeSeries> {
    let (Some(modern_start), Some(historic_start)) = (modern.first_date(), historic.first_date()) else {
        return Err(Error::EmptyInput);
    };
    let month = |d: NaiveDate| (d.year(), d.month());
    let modern_months: BTreeSet<_> = modern.points().iter().map(|p| month(p.0)).collect();
    let historic_months: BTreeSet<_> = historic.points().iter().map(|p| month(p.0)).collect();
    let overlap: BTreeSet<_> = modern_months.intersection(&historic_months).copied().collect();
    if overlap.is_empty() {
        return Err(Error::DisjointSplice);
    }
    if historic_start > modern_start {
        return Err(Error::InvalidArgument("historic series must start before the modern series".into()));
    }
    let overlap_mean = |s: &TimeSeries| {
        let vals: Vec<f64> = s.points().iter().filter(|p| overlap.contains(&month(p.0))).map(|p| p.1).collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    };
    let historic_mean = overlap_mean(historic);
    if historic_mean == 0.0 {
        return Err(Error::InvalidArgument("historic series has zero mean over the overlap".into()));
    }
    let ratio = overlap_mean(modern) / historic_mean;
    let mut points: Vec<(NaiveDate, f64)> = historic
        .points()
        .iter()
        .filter(|p| p.0 < modern_start)
        .map(|&(d, v)| (d, v * ratio))
        .collect();
    points.extend_from_slice(modern.points());
    TimeSeries::mixed(points, modern.frequency(), modern.unit())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MotivePower {
    Petrol,
    Diesel,
    PetrolHybrid,
    Electric,
    Lpg,
    PluginPetrolHybrid,
    PetrolElectricHybrid,
}

impl MotivePower {
    pub const ALL: [MotivePower; 7] = [
        MotivePower::Petrol,
        MotivePower::Diesel,
        MotivePower::PetrolHybrid,
        MotivePower::Electric,
        MotivePower::Lpg,
        MotivePower::PluginPetrolHybrid,
        MotivePower::PetrolElectricHybrid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MotivePower::Petrol => "petrol",
            MotivePower::Diesel => "diesel",
            MotivePower::PetrolHybrid => "petrol hybrid",
            MotivePower::Electric => "electric",
            MotivePower::Lpg => "lpg",
            MotivePower::PluginPetrolHybrid => "plugin petrol hybrid",
            MotivePower::PetrolElectricHybrid => "petrol electric hybrid",
        }
    }
}

impl fmt::Display for MotivePower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MotivePower {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_lowercase();
        MotivePower::ALL
            .into_iter()
            .find(|m| m.as_str() == norm)
            .ok_or_else(|| Error::UnmappedMotivePower(s.to_string()))
    }
}

/// One row of the motor vehicle register.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleRecord {
    pub motive_power: MotivePower,
    pub vehicle_year: i32,
    pub first_registration_year: i32,
    pub gross_vehicle_mass: f64,
    pub registration_date: NaiveDate,
}

impl VehicleRecord {
    pub fn new(
        motive_power: MotivePower,
        vehicle_year: i32,
        first_registration_year: i32,
        gross_vehicle_mass: f64,
        registration_date: NaiveDate,
    ) -> Result<Self> {
        if !(gross_vehicle_mass > 0.0) || !gross_vehicle_mass.is_finite() {
            return Err(Error::InvalidArgument(format!("gross vehicle mass must be positive, got {gross_vehicle_mass}")));
        }
        Ok(Self {
            motive_power,
            vehicle_year,
            first_registration_year,
            gross_vehicle_mass,
            registration_date,
        })
    }
}

/// A raw two-column table as declared in the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceTable {
    pub name: String,
    pub rows: Vec<(NaiveDate, f64)>,
    pub declared_frequency: Frequency,
    pub unit: String,
}

impl SourceTable {
    pub fn to_series(&self) -> Result<TimeSeries> {
        TimeSeries::new(self.rows.clone(), self.declared_frequency, self.unit.clone())
            .map_err(|e| Error::InvalidSeries(format!("source '{}': {e}", self.name)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Series,
    Traffic,
    Vehicles,
    EmissionFactors,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub name: String,
    pub kind: SourceKind,
    pub path: PathBuf,
    pub frequency: Frequency,
    pub unit: String,
    pub schema: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficSettings {
    pub keywords: Vec<String>,
    #[serde(deserialize_with = "crate::timeseries::deserialize_date")]
    pub continuous_from: NaiveDate,
    #[serde(deserialize_with = "crate::timeseries::deserialize_date")]
    pub continuous_to: NaiveDate,
    #[serde(default = "default_max_gap")]
    pub max_gap_days: i64,
}

fn default_max_gap() -> i64 {
    DEFAULT_MAX_GAP_DAYS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetSettings {
    #[serde(default = "default_baseline_mass")]
    pub baseline_mass: f64,
}

fn default_baseline_mass() -> f64 {
    crate::indicators::DEFAULT_BASELINE_MASS
}

impl Default for FleetSettings {
    fn default() -> Self {
        Self {
            baseline_mass: default_baseline_mass(),
        }
    }
}

/// Declares every input file: path, name, frequency, unit and column schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(rename = "source")]
    pub sources: Vec<SourceSpec>,
    pub traffic: TrafficSettings,
    #[serde(default)]
    pub fleet: FleetSettings,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: Manifest = toml::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        manifest.validate().map_err(|e| Error::parse(path, e.to_string()))?;
        Ok(manifest)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for s in &self.sources {
            if !seen.insert(s.name.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate source '{}'", s.name)));
            }
            let needed = match s.kind {
                SourceKind::Series => 2,
                SourceKind::Traffic => 3,
                SourceKind::Vehicles => 5,
                SourceKind::EmissionFactors => 3,
            };
            if s.schema.len() != needed {
                return Err(Error::InvalidArgument(format!(
                    "source '{}' schema needs {needed} columns, has {}",
                    s.name,
                    s.schema.len()
                )));
            }
        }
        if self.traffic.keywords.is_empty() {
            return Err(Error::InvalidArgument("traffic keywords must not be empty".into()));
        }
        Ok(())
    }

    pub fn source(&self, name: &str) -> Result<&SourceSpec> {
        self.sources
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::MissingInput(format!("source '{name}' is not declared in the manifest")))
    }

    pub fn resolve(&self, spec: &SourceSpec) -> PathBuf {
        if spec.path.is_absolute() {
            spec.path.clone()
        } else {
            self.base_dir.join(&spec.path)
        }
    }

    fn expect_kind(spec: &SourceSpec, kind: SourceKind) -> Result<()> {
        if spec.kind == kind {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("source '{}' is {:?}, expected {:?}", spec.name, spec.kind, kind)))
        }
    }

    pub fn load_table(&self, name: &str) -> Result<SourceTable> {
        let spec = self.source(name)?;
        Self::expect_kind(spec, SourceKind::Series)?;
        let path = self.resolve(spec);
        let rows = read_columns(&path, &spec.schema)?
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                let date = parse_date(&r[0]).map_err(|m| Error::parse(&path, format!("row {}: {m}", i + 2)))?;
                let value = parse_value(&r[1]).map_err(|m| Error::parse(&path, format!("row {}: {m}", i + 2)))?;
                Ok((date, value))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SourceTable {
            name: spec.name.clone(),
            rows,
            declared_frequency: spec.frequency,
            unit: spec.unit.clone(),
        })
    }

    pub fn load_series(&self, name: &str) -> Result<TimeSeries> {
        self.load_table(name)?.to_series()
    }

    pub fn load_traffic(&self, name: &str) -> Result<Vec<SiteObservation>> {
        let spec = self.source(name)?;
        Self::expect_kind(spec, SourceKind::Traffic)?;
        let path = self.resolve(spec);
        read_columns(&path, &spec.schema)?
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                let at = |m: String| Error::parse(&path, format!("row {}: {m}", i + 2));
                let date = parse_date(&r[1]).map_err(at)?;
                let volume = parse_value(&r[2]).map_err(at)?;
                SiteObservation::new(r[0].clone(), date, volume).map_err(|e| at(e.to_string()))
            })
            .collect()
    }

    pub fn load_vehicles(&self, name: &str) -> Result<Vec<VehicleRecord>> {
        let spec = self.source(name)?;
        Self::expect_kind(spec, SourceKind::Vehicles)?;
        let path = self.resolve(spec);
        read_columns(&path, &spec.schema)?
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                let at = |m: String| Error::parse(&path, format!("row {}: {m}", i + 2));
                let motive: MotivePower = r[0].parse().map_err(|e: Error| at(e.to_string()))?;
                let year = |s: &str| s.trim().parse::<i32>().map_err(|e| format!("bad year '{s}': {e}"));
                let vehicle_year = year(&r[1]).map_err(at)?;
                let first_reg = year(&r[2]).map_err(at)?;
                let mass = parse_value(&r[3]).map_err(at)?;
                let date = parse_date(&r[4]).map_err(at)?;
                VehicleRecord::new(motive, vehicle_year, first_reg, mass, date).map_err(|e| at(e.to_string()))
            })
            .collect()
    }

    /// Raw `(motive_power, vehicle_year, factor)` rows of an emission-factor table.
    pub fn load_factor_rows(&self, name: &str) -> Result<Vec<(MotivePower, i32, f64)>> {
        let spec = self.source(name)?;
        Self::expect_kind(spec, SourceKind::EmissionFactors)?;
        let path = self.resolve(spec);
        read_columns(&path, &spec.schema)?
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                let at = |m: String| Error::parse(&path, format!("row {}: {m}", i + 2));
                let motive: MotivePower = r[0].parse().map_err(|e: Error| at(e.to_string()))?;
                let year = r[1].trim().parse::<i32>().map_err(|e| at(format!("bad year '{}': {e}", r[1])))?;
                let factor = parse_value(&r[2]).map_err(at)?;
                Ok((motive, year, factor))
            })
            .collect()
    }

    /// The traffic volume variable: keyword-matched sites that ran
    /// continuously over the configured span, summed.
    pub fn traffic_volume(&self, name: &str, as_of: NaiveDate) -> Result<TimeSeries> {
        let observations = self.load_traffic(name)?;
        let keywords: BTreeSet<String> = self.traffic.keywords.iter().map(|k| k.to_lowercase()).collect();
        let by_keyword = match_sites(&observations, &keywords);
        let retained = filter_continuous_sites(
            &by_keyword,
            self.traffic.continuous_from,
            self.traffic.continuous_to,
            self.traffic.max_gap_days,
        );
        total_volume(retained.values(), as_of)
    }
}

/// Read a delimited file with a header and return the named columns, in
/// schema order, for every row.
pub fn read_columns(path: &Path, schema: &[String]) -> Result<Vec<Vec<String>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::parse(path, format!("{other:?}")),
        })?;
    let headers = rdr.headers().map_err(|e| Error::parse(path, e.to_string()))?.clone();
    let idx = schema
        .iter()
        .map(|col| {
            headers
                .iter()
                .position(|h| h == col)
                .ok_or_else(|| Error::parse(path, format!("missing column '{col}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::parse(path, e.to_string()))?;
        rows.push(idx.iter().map(|&i| record.get(i).unwrap_or("").to_string()).collect());
    }
    Ok(rows)
}
