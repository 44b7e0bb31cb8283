//! The sector indicators and the feature matrices built from them.

use crate::error::{Error, Result};
use crate::ingest::{MotivePower, VehicleRecord};
use crate::models::{Matrix, SignBound};
use crate::timeseries::{combine_daily, AggregationKind, Frequency, TimeSeries};
use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Gross vehicle mass the emission factors are quoted for, in kg.
pub const DEFAULT_BASELINE_MASS: f64 = 2500.0;

/// Average de-registration ages (years) from two regional scrappage
/// reports, in tenths of a year so the half-life arithmetic stays exact.
const SCRAPPAGE_AGES_TENTHS: [i64; 2] = [167, 186];

/// Every feature row aggregates this many trailing days.
pub const WINDOW_DAYS: usize = 365;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sector {
    Energy,
    Agriculture,
}

impl Sector {
    pub const ALL: [Sector; 2] = [Sector::Energy, Sector::Agriculture];

    pub fn codes(self) -> &'static [IndicatorCode] {
        use IndicatorCode::*;
        match self {
            Sector::Energy => &[Lee, Rem, Etv, Coa],
            Sector::Agriculture => &[Cow, Mea, Fim, Exm, Exd, Exf],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sector::Energy => "Energy",
            Sector::Agriculture => "Agriculture",
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Sector::ALL
            .into_iter()
            .find(|x| x.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown sector '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Directness {
    Direct,
    Indirect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum IndicatorCode {
    Lee,
    Rem,
    Etv,
    Coa,
    Cow,
    Mea,
    Fim,
    Exm,
    Exd,
    Exf,
}

impl IndicatorCode {
    pub const ALL: [IndicatorCode; 10] = [
        IndicatorCode::Lee,
        IndicatorCode::Rem,
        IndicatorCode::Etv,
        IndicatorCode::Coa,
        IndicatorCode::Cow,
        IndicatorCode::Mea,
        IndicatorCode::Fim,
        IndicatorCode::Exm,
        IndicatorCode::Exd,
        IndicatorCode::Exf,
    ];

    pub fn as_str(self) -> &'static str {
        use IndicatorCode::*;
        match self {
            Lee => "LEE",
            Rem => "REM",
            Etv => "ETV",
            Coa => "COA",
            Cow => "COW",
            Mea => "MEA",
            Fim => "FIM",
            Exm => "EXM",
            Exd => "EXD",
            Exf => "EXF",
        }
    }

    pub fn name(self) -> &'static str {
        use IndicatorCode::*;
        match self {
            Lee => "Liquid and electric energy",
            Rem => "Emissions intensity from new vehicle registrations",
            Etv => "Emissions associated to national traffic volume",
            Coa => "Weight of coal production",
            Cow => "Number of dairy cattle",
            Mea => "Weight of meat produced at export-inspected facilities",
            Fim => "Quantity of imported fertilisers",
            Exm => "Food exports for meat",
            Exd => "Food exports for aquaculture and dairy",
            Exf => "Food exports for horticulture",
        }
    }

    pub fn sector(self) -> Sector {
        use IndicatorCode::*;
        match self {
            Lee | Rem | Etv | Coa => Sector::Energy,
            Cow | Mea | Fim | Exm | Exd | Exf => Sector::Agriculture,
        }
    }

    pub fn directness(self) -> Directness {
        use IndicatorCode::*;
        match self {
            Lee | Rem | Etv => Directness::Direct,
            _ => Directness::Indirect,
        }
    }

    pub fn native_frequency(self) -> Frequency {
        use IndicatorCode::*;
        match self {
            Lee | Etv => Frequency::Daily,
            Rem | Fim | Exm | Exd | Exf => Frequency::Monthly,
            Coa => Frequency::Quarterly,
            Cow => Frequency::Annual,
            Mea => Frequency::Weekly,
        }
    }

    /// Flows accumulate over a window; levels and intensities are averaged.
    pub fn aggregation(self) -> AggregationKind {
        use IndicatorCode::*;
        match self {
            Coa | Mea | Fim | Exm | Exd | Exf | Etv => AggregationKind::Sum,
            Cow | Rem | Lee => AggregationKind::Mean,
        }
    }

    /// Coefficient bound for the linear model. Meat throughput removes
    /// animals from the stock, so it enters with a nonpositive sign.
    pub fn sign(self) -> SignBound {
        match self {
            IndicatorCode::Mea => SignBound::NonPositive,
            _ => SignBound::NonNegative,
        }
    }

    pub fn unit(self) -> &'static str {
        use IndicatorCode::*;
        match self {
            Lee => "index",
            Rem => "kgCO2-e/km",
            Etv => "kgCO2-e",
            Coa | Mea | Fim => "tonnes",
            Cow => "number",
            Exm | Exd | Exf => "$",
        }
    }
}

impl fmt::Display for IndicatorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndicatorCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IndicatorCode::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown indicator code '{s}'")))
    }
}

/// A sector indicator. Sector, directness and sign follow from the code.
#[derive(Debug, Clone, PartialEq)]
pub struct Indicator {
    code: IndicatorCode,
    series: TimeSeries,
    last_observation: NaiveDate,
}

impl Indicator {
    fn new(code: IndicatorCode, series: TimeSeries) -> Result<Self> {
        let last_observation = series.last_date().ok_or(Error::EmptyInput)?;
        Ok(Self {
            code,
            series,
            last_observation,
        })
    }

    pub fn code(&self) -> IndicatorCode {
        self.code
    }

    pub fn sector(&self) -> Sector {
        self.code.sector()
    }

    pub fn directness(&self) -> Directness {
        self.code.directness()
    }

    pub fn sign(&self) -> SignBound {
        self.code.sign()
    }

    pub fn series(&self) -> &TimeSeries {
        &self.series
    }

    /// Date of the most recent real (not carried-forward) input observation.
    pub fn last_observation(&self) -> NaiveDate {
        self.last_observation
    }

    pub fn with_last_observation(mut self, date: NaiveDate) -> Self {
        self.last_observation = date;
        self
    }
}

/// Liquid and electric energy: both components as a percentage of their
/// 1990 mean, averaged with equal weight.
pub fn build_lee(traffic: &TimeSeries, electricity_emissions: &TimeSeries) -> Result<Indicator> {
    let t = traffic.rebase_to_1990()?;
    let e = electricity_emissions.rebase_to_1990()?;
    let series = combine_daily(&t, &e, IndicatorCode::Lee.unit(), |a, b| 0.5 * a + 0.5 * b)?;
    let last = traffic.last_date().min(electricity_emissions.last_date()).ok_or(Error::EmptyInput)?;
    Ok(Indicator::new(IndicatorCode::Lee, series)?.with_last_observation(last))
}

/// Emission factors keyed by motive power and vehicle year.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionsFactorTable {
    factors: BTreeMap<MotivePower, BTreeMap<i32, f64>>,
    baseline_mass: f64,
}

impl EmissionsFactorTable {
    pub fn new(rows: impl IntoIterator<Item = (MotivePower, i32, f64)>, baseline_mass: f64) -> Result<Self> {
        if !(baseline_mass > 0.0) {
            return Err(Error::InvalidArgument(format!("baseline mass must be positive, got {baseline_mass}")));
        }
        let mut factors: BTreeMap<MotivePower, BTreeMap<i32, f64>> = BTreeMap::new();
        for (motive, year, factor) in rows {
            if !(factor >= 0.0) || !factor.is_finite() {
                return Err(Error::InvalidArgument(format!("factor for {motive} {year} must be nonnegative, got {factor}")));
            }
            factors.entry(motive).or_default().insert(year, factor);
        }
        Ok(Self { factors, baseline_mass })
    }

    pub fn baseline_mass(&self) -> f64 {
        self.baseline_mass
    }

    /// Factor for the nearest year at or before `year`; vehicles older than
    /// the table use its earliest year.
    pub fn factor(&self, motive: MotivePower, year: i32) -> Result<f64> {
        let by_year = self
            .factors
            .get(&motive)
            .ok_or_else(|| Error::UnmappedMotivePower(motive.to_string()))?;
        by_year
            .range(..=year)
            .next_back()
            .or_else(|| by_year.iter().next())
            .map(|(_, &f)| f)
            .ok_or_else(|| Error::UnmappedMotivePower(motive.to_string()))
    }
}

/// Emissions potential of one vehicle, scaled by its mass relative to the
/// table's baseline mass.
pub fn assign_vehicle_emissions(v: &VehicleRecord, table: &EmissionsFactorTable) -> Result<f64> {
    let factor = table.factor(v.motive_power, v.vehicle_year)?;
    Ok(factor * (v.gross_vehicle_mass / table.baseline_mass))
}

fn month_start(d: NaiveDate) -> NaiveDate {
    NaiveDate::from_ymd_opt(d.year(), d.month(), 1).expect("valid month")
}

/// Mean emissions potential of vehicles registered in each month. Months
/// without registrations are left out rather than recorded as zero.
pub fn build_rem(vehicles: &[VehicleRecord], table: &EmissionsFactorTable) -> Result<Indicator> {
    if vehicles.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut by_month: BTreeMap<NaiveDate, (f64, usize)> = BTreeMap::new();
    for v in vehicles {
        let e = assign_vehicle_emissions(v, table)?;
        let slot = by_month.entry(month_start(v.registration_date)).or_insert((0.0, 0));
        slot.0 += e;
        slot.1 += 1;
    }
    let points = by_month.into_iter().map(|(m, (sum, n))| (m, sum / n as f64)).collect();
    let series = TimeSeries::mixed(points, Frequency::Monthly, IndicatorCode::Rem.unit())?;
    let last = vehicles.iter().map(|v| v.registration_date).max().expect("nonempty");
    Ok(Indicator::new(IndicatorCode::Rem, series)?.with_last_observation(last))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FleetParameters {
    /// Mean years between manufacture and first local registration.
    pub ybf: f64,
    pub half_life: f64,
}

impl FleetParameters {
    /// Half-life is the mean scrappage age less the years before registration.
    pub fn from_ybf(ybf: f64) -> Result<Self> {
        let tenths_sum: i64 = SCRAPPAGE_AGES_TENTHS.iter().sum();
        let denom = 10.0 * SCRAPPAGE_AGES_TENTHS.len() as f64;
        let half_life = (tenths_sum as f64 - denom * ybf) / denom;
        if !(half_life > 0.0) {
            return Err(Error::ImplausibleHalfLife(half_life));
        }
        Ok(Self { ybf, half_life })
    }
}

pub fn estimate_half_life(vehicles: &[VehicleRecord]) -> Result<FleetParameters> {
    if vehicles.is_empty() {
        return Err(Error::EmptyInput);
    }
    let total: i64 = vehicles
        .iter()
        .map(|v| (v.first_registration_year - v.vehicle_year) as i64)
        .sum();
    FleetParameters::from_ybf(total as f64 / vehicles.len() as f64)
}

/// Weight of an observation `lag` steps old under the given half-life.
pub fn decay_weight(lag_steps: f64, half_life_steps: f64) -> f64 {
    (-lag_steps / half_life_steps).exp2()
}

/// Exponentially weighted running mean, `sum w_i s_i / sum w_i` with
/// `w_i = 2^(-(t - i) / h)`. The half-life is given in years and converted
/// to the series' own step unit; irregular spacing is honoured.
pub fn ewm_half_life(s: &TimeSeries, half_life_years: f64) -> Result<TimeSeries> {
    if !(half_life_years > 0.0) {
        return Err(Error::ImplausibleHalfLife(half_life_years));
    }
    let freq = s.frequency();
    let h = half_life_years * freq.steps_per_year();
    let mut out = Vec::with_capacity(s.len());
    let mut iter = s.points().iter();
    let Some(&(d0, v0)) = iter.next() else {
        return Err(Error::EmptyInput);
    };
    // Running-mean update: m_t = m_{t-1} + (s_t - m_{t-1}) / W_t, W_t = f W_{t-1} + 1.
    let (mut prev, mut mean, mut weight) = (d0, v0, 1.0f64);
    out.push((d0, v0));
    for &(d, v) in iter {
        let f = decay_weight(freq.steps_between(prev, d), h);
        weight = weight * f + 1.0;
        let (lo, hi) = if mean <= v { (mean, v) } else { (v, mean) };
        mean = (mean + (v - mean) / weight).clamp(lo, hi);
        out.push((d, mean));
        prev = d;
    }
    TimeSeries::mixed(out, freq, s.unit())
}

/// Emissions associated to traffic: the fleet emissions potential (EWM of
/// the registration intensity) times the traffic volume, daily.
pub fn build_etv(rem: &Indicator, traffic: &TimeSeries, fleet: &FleetParameters) -> Result<Indicator> {
    if rem.code() != IndicatorCode::Rem {
        return Err(Error::InvalidArgument(format!("build_etv needs REM, got {}", rem.code())));
    }
    let (r0, r1) = rem.series().first_date().zip(rem.series().last_date()).ok_or(Error::EmptyInput)?;
    let (t0, t1) = traffic.first_date().zip(traffic.last_date()).ok_or(Error::EmptyInput)?;
    if r1 < t0 || t1 < r0 {
        return Err(Error::NoOverlap(format!("REM {r0}..{r1}, traffic {t0}..{t1}")));
    }
    let potential = ewm_half_life(rem.series(), fleet.half_life)?.to_daily(r1.max(t1))?;
    let traffic_daily = traffic.to_daily(t1)?;
    let series = combine_daily(&potential, &traffic_daily, IndicatorCode::Etv.unit(), |p, t| p * t)?;
    let last = rem.last_observation().min(t1);
    Ok(Indicator::new(IndicatorCode::Etv, series)?.with_last_observation(last))
}

/// Wrap a source series as one of the directly sourced indicators.
pub fn build_simple(code: IndicatorCode, source: TimeSeries) -> Result<Indicator> {
    use IndicatorCode::*;
    if !matches!(code, Coa | Cow | Mea | Fim | Exm | Exd | Exf) {
        return Err(Error::InvalidArgument(format!("{code} is a derived indicator")));
    }
    if source.frequency() != code.native_frequency() {
        return Err(Error::FrequencyMismatch {
            code: code.to_string(),
            expected: code.native_frequency().to_string(),
            found: source.frequency().to_string(),
        });
    }
    Indicator::new(code, source)
}

/// Annual fitting rows plus daily nowcasting rows for one sector.
///
/// Every row reduces each indicator over the 365 days ending on the row's
/// date; the annual row of year `Y` is the daily row of December 31 of `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub sector: Sector,
    pub codes: Vec<IndicatorCode>,
    pub years: Vec<i32>,
    pub annual: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    pub daily_dates: Vec<NaiveDate>,
    pub daily: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn n_features(&self) -> usize {
        self.codes.len()
    }

    pub fn signs(&self) -> Vec<SignBound> {
        self.codes.iter().map(|c| c.sign()).collect()
    }

    pub fn annual_matrix(&self) -> Matrix {
        Matrix::from_rows(&self.annual).expect("rectangular rows")
    }

    pub fn daily_matrix(&self) -> Matrix {
        Matrix::from_rows(&self.daily).expect("rectangular rows")
    }

    /// Index of the daily row dated `date`.
    pub fn daily_index(&self, date: NaiveDate) -> Option<usize> {
        self.daily_dates.binary_search(&date).ok()
    }
}

pub fn year_end(year: i32) -> NaiveDate {
    NaiveDate::from_ymd_opt(year, 12, 31).expect("valid date")
}

pub fn assemble_features(indicators: &[Indicator], target: &TimeSeries, as_of: NaiveDate) -> Result<FeatureMatrix> {
    let first = indicators.first().ok_or(Error::EmptyInput)?;
    let sector = first.sector();
    if let Some(other) = indicators.iter().find(|i| i.sector() != sector) {
        return Err(Error::InvalidArgument(format!("{} belongs to {}, not {sector}", other.code(), other.sector())));
    }
    let codes: Vec<IndicatorCode> = indicators.iter().map(|i| i.code()).collect();
    for (k, c) in codes.iter().enumerate() {
        if codes[..k].contains(c) {
            return Err(Error::InvalidArgument(format!("indicator {c} supplied twice")));
        }
    }
    let daily: Vec<TimeSeries> = indicators
        .iter()
        .map(|i| i.series().to_daily(as_of))
        .collect::<Result<_>>()?;

    let mut years = Vec::new();
    let mut annual = Vec::new();
    let mut target_values = Vec::new();
    for &(date, value) in target.points() {
        let year = date.year();
        let row = indicators
            .iter()
            .zip(&daily)
            .map(|(ind, s)| {
                s.window_value(year_end(year), WINDOW_DAYS, ind.code().aggregation())
                    .ok_or_else(|| Error::MissingCoverage {
                        indicator: ind.code().to_string(),
                        year,
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        years.push(year);
        annual.push(row);
        target_values.push(value);
    }

    let rolled: Vec<TimeSeries> = indicators
        .iter()
        .zip(&daily)
        .map(|(ind, s)| s.rolling_window(WINDOW_DAYS, ind.code().aggregation()))
        .collect::<Result<_>>()?;
    let start = rolled
        .iter()
        .map(|r| r.first_date().expect("nonempty rolled series"))
        .max()
        .expect("at least one indicator");
    let n_days = (as_of - start).num_days() + 1;
    let daily_dates: Vec<NaiveDate> = (0..n_days.max(0)).map(|k| start + Duration::days(k)).collect();
    let offsets: Vec<usize> = rolled
        .iter()
        .map(|r| (start - r.first_date().expect("nonempty")).num_days() as usize)
        .collect();
    let daily_rows = (0..daily_dates.len())
        .map(|k| rolled.iter().zip(&offsets).map(|(r, &o)| r.points()[o + k].1).collect())
        .collect();

    Ok(FeatureMatrix {
        sector,
        codes,
        years,
        annual,
        target: target_values,
        daily_dates,
        daily: daily_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn constant_daily(start: NaiveDate, end: NaiveDate, v: f64) -> TimeSeries {
        let n = (end - start).num_days() as usize + 1;
        TimeSeries::daily_from(start, vec![v; n], "x").unwrap()
    }

    fn vehicle(m: MotivePower, year: i32, reg_year: i32, mass: f64, date: NaiveDate) -> VehicleRecord {
        VehicleRecord::new(m, year, reg_year, mass, date).unwrap()
    }

    #[test]
    fn table_assignments_match_indicator_definitions() {
        use IndicatorCode::*;
        for code in IndicatorCode::ALL {
            let expect_energy = matches!(code, Lee | Rem | Etv | Coa);
            assert_eq!(code.sector() == Sector::Energy, expect_energy, "{code}");
            let expect_direct = matches!(code, Lee | Rem | Etv);
            assert_eq!(code.directness() == Directness::Direct, expect_direct, "{code}");
        }
        assert_eq!(Sector::Energy.codes().len(), 4);
        assert_eq!(Sector::Agriculture.codes().len(), 6);
    }

    #[test]
    fn lee_is_100_at_base_levels() {
        let t = constant_daily(d(1990, 1, 1), d(1992, 12, 31), 4000.0);
        let e = constant_daily(d(1990, 1, 1), d(1992, 12, 31), 17.0);
        let lee = build_lee(&t, &e).unwrap();
        assert!(lee.series().values().iter().all(|&v| v == 100.0));
    }

    #[test]
    fn lee_averages_rebased_components() {
        let mut tv = vec![10.0; 365];
        tv.push(12.0);
        let mut ev = vec![5.0; 365];
        ev.push(4.0);
        let t = TimeSeries::daily_from(d(1990, 1, 1), tv, "x").unwrap();
        let e = TimeSeries::daily_from(d(1990, 1, 1), ev, "x").unwrap();
        let lee = build_lee(&t, &e).unwrap();
        assert_eq!(lee.series().value_at(d(1991, 1, 1)), Some(100.0));
    }

    #[test]
    fn lee_needs_a_1990_base() {
        let t = constant_daily(d(1990, 1, 1), d(1992, 12, 31), 1.0);
        let e = constant_daily(d(1991, 1, 1), d(1992, 12, 31), 1.0);
        assert!(matches!(build_lee(&t, &e), Err(Error::NoValidBase)));
    }

    fn table() -> EmissionsFactorTable {
        EmissionsFactorTable::new(
            vec![
                (MotivePower::Petrol, 2000, 0.25),
                (MotivePower::Petrol, 2010, 0.2),
                (MotivePower::Electric, 2000, 0.0),
            ],
            DEFAULT_BASELINE_MASS,
        )
        .unwrap()
    }

    #[test]
    fn vehicle_emissions_scale_with_mass() {
        let t = table();
        let v = vehicle(MotivePower::Petrol, 2005, 2005, 2500.0, d(2005, 3, 1));
        assert_eq!(assign_vehicle_emissions(&v, &t).unwrap(), 0.25);
        let v = vehicle(MotivePower::Petrol, 2005, 2005, 1250.0, d(2005, 3, 1));
        assert_eq!(assign_vehicle_emissions(&v, &t).unwrap(), 0.125);
        let heavy = vehicle(MotivePower::Petrol, 2005, 2005, 2500.0, d(2005, 3, 1));
        assert_eq!(assign_vehicle_emissions(&heavy, &t).unwrap(), 2.0 * 0.125);
        let ev = vehicle(MotivePower::Electric, 2015, 2015, 3100.0, d(2015, 3, 1));
        assert_eq!(assign_vehicle_emissions(&ev, &t).unwrap(), 0.0);
        let diesel = vehicle(MotivePower::Diesel, 2015, 2015, 2000.0, d(2015, 3, 1));
        let err = assign_vehicle_emissions(&diesel, &t).unwrap_err();
        assert!(err.to_string().contains("unmapped motive power"));
    }

    #[test]
    fn factor_lookup_uses_nearest_prior_year() {
        let t = table();
        assert_eq!(t.factor(MotivePower::Petrol, 2009).unwrap(), 0.25);
        assert_eq!(t.factor(MotivePower::Petrol, 2010).unwrap(), 0.2);
        assert_eq!(t.factor(MotivePower::Petrol, 2030).unwrap(), 0.2);
        assert_eq!(t.factor(MotivePower::Petrol, 1985).unwrap(), 0.25);
    }

    #[test]
    fn rem_is_monthly_mean_intensity() {
        let t = EmissionsFactorTable::new(
            vec![(MotivePower::Petrol, 2000, 0.2), (MotivePower::Diesel, 2000, 0.4), (MotivePower::Electric, 2000, 0.0)],
            2500.0,
        )
        .unwrap();
        let vs = vec![
            vehicle(MotivePower::Petrol, 2010, 2010, 2500.0, d(2010, 5, 3)),
            vehicle(MotivePower::Diesel, 2010, 2010, 2500.0, d(2010, 5, 20)),
            vehicle(MotivePower::Electric, 2010, 2010, 1800.0, d(2010, 8, 2)),
        ];
        let rem = build_rem(&vs, &t).unwrap();
        let pts = rem.series().points();
        assert_eq!(pts.len(), 2, "months without registrations are absent");
        assert_eq!(pts[0].0, d(2010, 5, 1));
        assert!((pts[0].1 - 0.3).abs() < 1e-15);
        assert_eq!(pts[1], (d(2010, 8, 1), 0.0));
        assert!(matches!(build_rem(&[], &t), Err(Error::EmptyInput)));
    }

    #[test]
    fn half_life_from_years_before_registration() {
        assert_eq!(FleetParameters::from_ybf(0.0).unwrap().half_life, 17.65);
        assert_eq!(FleetParameters::from_ybf(2.0).unwrap().half_life, 15.65);
        let err = FleetParameters::from_ybf(20.0).unwrap_err();
        assert!(err.to_string().contains("implausible fleet half-life"));
        let vs = vec![
            vehicle(MotivePower::Petrol, 2008, 2010, 1500.0, d(2010, 1, 1)),
            vehicle(MotivePower::Petrol, 2011, 2013, 1500.0, d(2013, 1, 1)),
        ];
        let p = estimate_half_life(&vs).unwrap();
        assert_eq!(p.ybf, 2.0);
        assert_eq!(p.half_life, 15.65);
    }

    fn monthly(values: &[f64]) -> TimeSeries {
        let pts = values
            .iter()
            .enumerate()
            .map(|(i, &v)| (d(2000 + (i / 12) as i32, (i % 12) as u32 + 1, 1), v))
            .collect();
        TimeSeries::new(pts, Frequency::Monthly, "x").unwrap()
    }

    #[test]
    fn ewm_constant_fixed_point() {
        let s = monthly(&[0.37; 40]);
        let out = ewm_half_life(&s, 1.5).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.37));
    }

    #[test]
    fn ewm_impulse_decays_by_half_per_half_life() {
        let h_years = 0.5;
        let h_steps = 6;
        let mut v = vec![0.0; 20];
        v[0] = 1.0;
        let out = ewm_half_life(&monthly(&v), h_years).unwrap().values();
        // Unnormalized numerator equals the impulse weight; recover it by
        // multiplying by the brute-force normalizer.
        let den = |t: usize| (0..=t).map(|i| decay_weight((t - i) as f64, h_steps as f64)).sum::<f64>();
        let num_0 = out[0] * den(0);
        let num_h = out[h_steps] * den(h_steps);
        assert!((num_h / num_0 - 0.5).abs() < 1e-12);
        assert!((decay_weight(h_steps as f64, h_steps as f64) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ewm_long_half_life_approaches_running_mean() {
        let vals: Vec<f64> = (0..60).map(|i| ((i * 37) % 11) as f64 / 10.0).collect();
        let out = ewm_half_life(&monthly(&vals), 1e6).unwrap().values();
        let mut acc = 0.0;
        for (i, v) in vals.iter().enumerate() {
            acc += v;
            let running = acc / (i + 1) as f64;
            assert!((out[i] - running).abs() < 1e-6, "step {i}: {} vs {running}", out[i]);
        }
    }

    #[test]
    fn ewm_matches_direct_weighted_mean() {
        let vals: Vec<f64> = (0..48).map(|i| ((i * 53) % 17) as f64 - 4.0).collect();
        let h_years = 1.25;
        let out = ewm_half_life(&monthly(&vals), h_years).unwrap().values();
        let h = h_years * 12.0;
        for t in 0..vals.len() {
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..=t {
                let w = decay_weight((t - i) as f64, h);
                num += w * vals[i];
                den += w;
            }
            assert!((out[t] - num / den).abs() < 1e-12, "step {t}");
        }
    }

    #[test]
    fn ewm_rejects_nonpositive_half_life() {
        assert!(ewm_half_life(&monthly(&[1.0, 2.0]), 0.0).is_err());
    }

    #[test]
    fn etv_is_potential_times_traffic() {
        let rem_series = monthly(&[0.3; 24]);
        let rem = Indicator::new(IndicatorCode::Rem, rem_series).unwrap();
        let fleet = FleetParameters::from_ybf(2.0).unwrap();
        let mut tv = vec![1000.0; 100];
        tv[10] = 0.0;
        let traffic = TimeSeries::daily_from(d(2000, 2, 1), tv, "vehicles").unwrap();
        let etv = build_etv(&rem, &traffic, &fleet).unwrap();
        let vals = etv.series().values();
        assert!((vals[0] - 300.0).abs() < 1e-9);
        assert_eq!(vals[10], 0.0);

        let doubled = traffic.map_values(|v| 2.0 * v).unwrap();
        let etv2 = build_etv(&rem, &doubled, &fleet).unwrap();
        for (a, b) in etv.series().values().iter().zip(etv2.series().values()) {
            assert_eq!(2.0 * a, b);
        }

        let far = TimeSeries::daily_from(d(2010, 1, 1), vec![1.0; 10], "vehicles").unwrap();
        assert!(build_etv(&rem, &far, &fleet).is_err());
    }

    #[test]
    fn simple_indicators_check_frequency() {
        let cows = TimeSeries::new(vec![(d(1990, 6, 30), 3.4e6), (d(1991, 6, 30), 3.5e6)], Frequency::Annual, "number").unwrap();
        let cow = build_simple(IndicatorCode::Cow, cows.clone()).unwrap();
        assert_eq!(cow.sector(), Sector::Agriculture);
        assert_eq!(cow.directness(), Directness::Indirect);
        assert!(matches!(build_simple(IndicatorCode::Fim, cows), Err(Error::FrequencyMismatch { .. })));
        let weekly = TimeSeries::new(
            (0..10).map(|w| (d(2018, 1, 1) + Duration::weeks(w), 1.0)).collect(),
            Frequency::Weekly,
            "tonnes",
        )
        .unwrap();
        assert_eq!(build_simple(IndicatorCode::Mea, weekly).unwrap().series().frequency(), Frequency::Weekly);
    }

    fn annual_target(years: std::ops::RangeInclusive<i32>) -> TimeSeries {
        TimeSeries::new(years.map(|y| (year_end(y), 1000.0 + y as f64)).collect(), Frequency::Annual, "ktCO2-e").unwrap()
    }

    #[test]
    fn assemble_shapes_and_rows() {
        let mk = |code| {
            let s = TimeSeries::new(
                (0..(33 * 12)).map(|i| (d(1990 + i / 12, (i % 12) as u32 + 1, 1), 1.0)).collect(),
                Frequency::Monthly,
                "x",
            )
            .unwrap();
            Indicator::new(code, s).unwrap()
        };
        let inds: Vec<Indicator> = Sector::Energy.codes().iter().map(|&c| mk(c)).collect();
        let fm = assemble_features(&inds, &annual_target(1990..=2020), d(2022, 12, 31)).unwrap();
        assert_eq!(fm.annual.len(), 31);
        assert!(fm.annual.iter().all(|r| r.len() == 4));
        assert_eq!(fm.target.len(), 31);
        // COA is summed: 365 days of 1.0.
        assert!(fm.annual.iter().all(|r| r[3] == 365.0));
        for (k, &y) in fm.years.iter().enumerate() {
            let i = fm.daily_index(year_end(y)).unwrap();
            assert_eq!(fm.daily[i], fm.annual[k]);
        }
        assert_eq!(*fm.daily_dates.last().unwrap(), d(2022, 12, 31));
        assert_eq!(fm.daily_dates[0], d(1990, 12, 31));
    }

    #[test]
    fn assemble_rejects_uncovered_years() {
        let s = constant_daily(d(1990, 1, 1), d(1995, 12, 31), 1.0);
        let ind = Indicator::new(IndicatorCode::Coa, s).unwrap();
        let err = assemble_features(&[ind], &annual_target(1989..=1992), d(1995, 12, 31)).unwrap_err();
        match err {
            Error::MissingCoverage { indicator, year } => {
                assert_eq!(indicator, "COA");
                assert_eq!(year, 1989);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn non_leap_rows_equal_calendar_annualization() {
        let vals: Vec<f64> = (0..(6 * 366)).map(|i| ((i * 7919) % 101) as f64).collect();
        let s = TimeSeries::daily_from(d(1990, 1, 1), vals, "x").unwrap();
        let ind = Indicator::new(IndicatorCode::Coa, s.clone()).unwrap();
        let fm = assemble_features(&[ind], &annual_target(1990..=1995), s.last_date().unwrap()).unwrap();
        let annual = s.annualize(AggregationKind::Sum).unwrap();
        for (k, &y) in fm.years.iter().enumerate() {
            if y % 4 != 0 {
                assert_eq!(Some(fm.annual[k][0]), annual.value_at(year_end(y)), "year {y}");
            }
        }
    }
}
