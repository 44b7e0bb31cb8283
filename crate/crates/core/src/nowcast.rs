//! The end-to-end pipeline: ingest, indicators, study, selection, refit and
//! daily nowcasts, with report emission.
//!
//! The engine never reads the clock; `as_of` and the seed come from the
//! configuration. Input sources are looked up in the manifest under fixed
//! names (see [`sources`]).

use crate::analysis::{self, CorrelationMatrix, OutlierReport, RelationshipSample, VariationComparison, WindowSlope};
use crate::error::{Error, Result};
use crate::indicators::{
    assemble_features, build_etv, build_lee, build_rem, build_simple, estimate_half_life, year_end, EmissionsFactorTable,
    FeatureMatrix, FleetParameters, Indicator, IndicatorCode, Sector,
};
use crate::ingest::{filter_continuous_sites, match_sites, splice, total_volume, Manifest};
use crate::models::{HyperparameterSpace, ModelKind, TrainedModel};
use crate::report::{self, Staging};
use crate::rng::{derive_path, derive_seed};
use crate::selection::{
    composite_score, randomized_search, run_study, select_model, CompositeScore, CompositeWeights, SelectionOutcome,
    StudyConfig, StudySummary, DEFAULT_CANDIDATES, DEFAULT_FOLDS, DEFAULT_OVERFIT_THRESHOLD, DEFAULT_SIMULATIONS,
    DEFAULT_TEST_SIZE,
};
use crate::timeseries::{Frequency, TimeSeries};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

/// Manifest source names the pipeline reads.
pub mod sources {
    pub const TRAFFIC: &str = "traffic";
    pub const ELECTRICITY: &str = "electricity_emissions";
    pub const VEHICLES: &str = "vehicles";
    pub const EMISSION_FACTORS: &str = "emission_factors";
    pub const COAL: &str = "coal";
    pub const DAIRY_CATTLE: &str = "dairy_cattle";
    pub const MEAT: &str = "meat";
    /// Optional older meat series spliced onto the front of [`MEAT`].
    pub const MEAT_HISTORIC: &str = "meat_historic";
    pub const FERTILISER: &str = "fertiliser_imports";
    pub const EXPORTS_MEAT: &str = "exports_meat";
    pub const EXPORTS_DAIRY: &str = "exports_dairy";
    pub const EXPORTS_HORTICULTURE: &str = "exports_horticulture";
    pub const TARGET_ENERGY: &str = "target_energy";
    pub const TARGET_AGRICULTURE: &str = "target_agriculture";
}

pub const TARGET_UNIT: &str = "ktCO2-e";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeWindow {
    pub sector: Sector,
    #[serde(deserialize_with = "crate::timeseries::deserialize_date")]
    pub start: NaiveDate,
    #[serde(deserialize_with = "crate::timeseries::deserialize_date")]
    pub end: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_df")]
    pub df: u32,
    #[serde(default)]
    pub slope_windows: Vec<SlopeWindow>,
    #[serde(default)]
    pub composite_weights: Option<CompositeWeights>,
}

fn default_alpha() -> f64 {
    analysis::DEFAULT_ALPHA
}
fn default_df() -> u32 {
    analysis::DEFAULT_DF
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            alpha: default_alpha(),
            df: default_df(),
            slope_windows: Vec::new(),
            composite_weights: None,
        }
    }
}

fn default_sectors() -> Vec<Sector> {
    Sector::ALL.to_vec()
}
fn default_candidates() -> usize {
    DEFAULT_CANDIDATES
}
fn default_simulations() -> usize {
    DEFAULT_SIMULATIONS
}
fn default_test_size() -> usize {
    DEFAULT_TEST_SIZE
}
fn default_folds() -> usize {
    DEFAULT_FOLDS
}
fn default_threshold() -> f64 {
    DEFAULT_OVERFIT_THRESHOLD
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Run configuration. `seed` and `as_of` have no defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub manifest: PathBuf,
    #[serde(default = "default_sectors")]
    pub sectors: Vec<Sector>,
    pub seed: u64,
    #[serde(deserialize_with = "crate::timeseries::deserialize_date")]
    pub as_of: NaiveDate,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_candidates")]
    pub candidates: usize,
    #[serde(default = "default_simulations")]
    pub simulations: usize,
    #[serde(default = "default_test_size")]
    pub test_size: usize,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_threshold")]
    pub overfit_threshold: f64,
    #[serde(default)]
    pub hyperparameter_space: HyperparameterSpace,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

impl PipelineConfig {
    /// Load a TOML config; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        Self::load_with(path, &ConfigOverrides::default())
    }

    /// Load a TOML config, replacing the keys set in `overrides` before
    /// validation. An overridden output directory is used as given.
    pub fn load_with(path: &Path, overrides: &ConfigOverrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut table: toml::Table = toml::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        overrides.apply(&mut table).map_err(|e| Error::parse(path, e))?;
        let mut cfg: PipelineConfig = table.try_into().map_err(|e: toml::de::Error| Error::parse(path, e.to_string()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if cfg.manifest.is_relative() {
            cfg.manifest = base.join(&cfg.manifest);
        }
        if let Some(out) = &overrides.output_dir {
            cfg.output_dir = out.clone();
        } else if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        cfg.validate().map_err(|e| Error::parse(path, e.to_string()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sectors.is_empty() {
            return Err(Error::InvalidArgument("no sectors requested".into()));
        }
        if self.candidates == 0 || self.simulations == 0 {
            return Err(Error::InvalidArgument("candidates and simulations must be positive".into()));
        }
        if self.hyperparameter_space.min_samples_split.0 < 2 {
            return Err(Error::InvalidArgument("min_samples_split must be at least 2".into()));
        }
        Ok(())
    }

    pub fn study(&self, sector: Sector) -> StudyConfig {
        StudyConfig {
            simulations: self.simulations,
            test_size: self.test_size,
            candidates: self.candidates,
            folds: self.folds,
            space: self.hyperparameter_space,
            seed: sector_seed(self.seed, sector),
        }
    }

    /// Requested sectors in canonical order, without repeats.
    pub fn sector_list(&self) -> Vec<Sector> {
        let set: BTreeSet<Sector> = self.sectors.iter().copied().collect();
        set.into_iter().collect()
    }
}

/// Values that take precedence over the config file, typically from flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub seed: Option<u64>,
    pub as_of: Option<NaiveDate>,
    pub sectors: Option<Vec<Sector>>,
    pub output_dir: Option<PathBuf>,
}

impl ConfigOverrides {
    fn apply(&self, table: &mut toml::Table) -> std::result::Result<(), String> {
        if let Some(seed) = self.seed {
            let v = i64::try_from(seed).map_err(|_| format!("seed {seed} exceeds the TOML integer range"))?;
            table.insert("seed".into(), toml::Value::Integer(v));
        }
        if let Some(as_of) = self.as_of {
            table.insert("as_of".into(), toml::Value::String(as_of.to_string()));
        }
        if let Some(sectors) = &self.sectors {
            let list = sectors.iter().map(|s| toml::Value::String(s.as_str().to_string())).collect();
            table.insert("sectors".into(), toml::Value::Array(list));
        }
        Ok(())
    }
}

fn sector_seed(seed: u64, sector: Sector) -> u64 {
    derive_seed(seed, Sector::ALL.iter().position(|&s| s == sector).expect("known sector") as u64)
}

/// Inputs shared by both sectors, loaded once.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub manifest: Manifest,
    pub traffic: Option<(TimeSeries, NaiveDate)>,
}

/// Load the manifest and, if any energy source needs it, the traffic volume
/// (daily through `as_of`, with the last real observation date).
pub fn load_inputs(config: &PipelineConfig) -> Result<Inputs> {
    let manifest = Manifest::load(&config.manifest)?;
    let traffic = if config.sectors.contains(&Sector::Energy) {
        Some(traffic_volume(&manifest, config.as_of)?)
    } else {
        None
    };
    Ok(Inputs { manifest, traffic })
}

fn traffic_volume(manifest: &Manifest, as_of: NaiveDate) -> Result<(TimeSeries, NaiveDate)> {
    let obs = manifest.load_traffic(sources::TRAFFIC)?;
    let keywords: BTreeSet<String> = manifest.traffic.keywords.iter().map(|k| k.to_lowercase()).collect();
    let sites = filter_continuous_sites(
        &match_sites(&obs, &keywords),
        manifest.traffic.continuous_from,
        manifest.traffic.continuous_to,
        manifest.traffic.max_gap_days,
    );
    let last = sites
        .values()
        .filter_map(TimeSeries::last_date)
        .min()
        .ok_or_else(|| Error::MissingInput("no continuous traffic sites".into()))?;
    Ok((total_volume(sites.values(), as_of)?, last))
}

fn named<T>(r: Result<T>, code: IndicatorCode) -> Result<T> {
    r.map_err(|e| Error::InvalidSeries(format!("{code}: {e}")))
}

#[derive(Debug, Clone)]
pub struct SectorIndicators {
    pub sector: Sector,
    pub indicators: Vec<Indicator>,
    pub fleet: Option<FleetParameters>,
}

pub fn build_indicators(inputs: &Inputs, sector: Sector, as_of: NaiveDate) -> Result<SectorIndicators> {
    let m = &inputs.manifest;
    let simple = |code: IndicatorCode, name: &str| named(m.load_series(name).and_then(|s| build_simple(code, s)), code);
    match sector {
        Sector::Energy => {
            let (traffic, traffic_last) = inputs
                .traffic
                .clone()
                .ok_or_else(|| Error::MissingInput("traffic volume not loaded".into()))?;
            let lee = named(
                m.load_series(sources::ELECTRICITY).and_then(|e| {
                    let e_last = e.last_date().ok_or(Error::EmptyInput)?;
                    let lee = build_lee(&traffic, &e.to_daily(as_of)?)?;
                    Ok(lee.with_last_observation(traffic_last.min(e_last)))
                }),
                IndicatorCode::Lee,
            )?;
            let vehicles = named(m.load_vehicles(sources::VEHICLES), IndicatorCode::Rem)?;
            let table = named(
                m.load_factor_rows(sources::EMISSION_FACTORS)
                    .and_then(|rows| EmissionsFactorTable::new(rows, m.fleet.baseline_mass)),
                IndicatorCode::Rem,
            )?;
            let rem = named(build_rem(&vehicles, &table), IndicatorCode::Rem)?;
            let fleet = named(estimate_half_life(&vehicles), IndicatorCode::Etv)?;
            let etv = named(build_etv(&rem, &traffic, &fleet), IndicatorCode::Etv)?;
            let etv_last = etv.last_observation().min(traffic_last);
            let coa = simple(IndicatorCode::Coa, sources::COAL)?;
            Ok(SectorIndicators {
                sector,
                indicators: vec![lee, rem, etv.with_last_observation(etv_last), coa],
                fleet: Some(fleet),
            })
        }
        Sector::Agriculture => {
            let cow = simple(IndicatorCode::Cow, sources::DAIRY_CATTLE)?;
            let mea = named(
                m.load_series(sources::MEAT).and_then(|modern| {
                    let s = if m.source(sources::MEAT_HISTORIC).is_ok() {
                        splice(&modern, &m.load_series(sources::MEAT_HISTORIC)?)?
                    } else {
                        modern
                    };
                    build_simple(IndicatorCode::Mea, s)
                }),
                IndicatorCode::Mea,
            )?;
            let fim = simple(IndicatorCode::Fim, sources::FERTILISER)?;
            let exm = simple(IndicatorCode::Exm, sources::EXPORTS_MEAT)?;
            let exd = simple(IndicatorCode::Exd, sources::EXPORTS_DAIRY)?;
            let exf = simple(IndicatorCode::Exf, sources::EXPORTS_HORTICULTURE)?;
            Ok(SectorIndicators {
                sector,
                indicators: vec![cow, mea, fim, exm, exd, exf],
                fleet: None,
            })
        }
    }
}

pub fn load_target(manifest: &Manifest, sector: Sector) -> Result<TimeSeries> {
    let name = match sector {
        Sector::Energy => sources::TARGET_ENERGY,
        Sector::Agriculture => sources::TARGET_AGRICULTURE,
    };
    let spec = manifest.source(name)?;
    if spec.unit != TARGET_UNIT {
        return Err(Error::InvalidArgument(format!(
            "target '{name}' has unit '{}', expected '{TARGET_UNIT}'",
            spec.unit
        )));
    }
    let s = manifest.load_series(name)?;
    if s.frequency() != Frequency::Annual {
        return Err(Error::FrequencyMismatch {
            code: name.to_string(),
            expected: Frequency::Annual.to_string(),
            found: s.frequency().to_string(),
        });
    }
    Ok(s)
}

/// Daily trailing-365-day estimates for one sector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NowcastSeries {
    pub sector: Sector,
    pub kind: ModelKind,
    /// The model was trained with data available on this date.
    pub trained_as_of: NaiveDate,
    pub latency_days: i64,
    pub last_observations: BTreeMap<IndicatorCode, NaiveDate>,
    #[serde(skip)]
    pub series: TimeSeries,
}

impl NowcastSeries {
    pub fn value_on(&self, date: NaiveDate) -> Option<f64> {
        self.series.value_at(date)
    }
}

/// Percentage change of the Dec 31 estimates between two years.
pub fn year_on_year_change(n: &NowcastSeries, from_year: i32, to_year: i32) -> Result<f64> {
    let get = |y: i32| {
        n.value_on(year_end(y))
            .ok_or_else(|| Error::InvalidArgument(format!("{} is outside the nowcast span", year_end(y))))
    };
    percent_change(get(from_year)?, get(to_year)?)
}

pub fn percent_change(from: f64, to: f64) -> Result<f64> {
    if from == 0.0 {
        return Err(Error::UndefinedRelativeError { index: 0 });
    }
    Ok(100.0 * (to - from) / from)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorAnalysis {
    pub outliers: Vec<(String, OutlierReport)>,
    pub variation: VariationComparison,
    pub correlation: CorrelationMatrix,
    pub slopes: Vec<(String, String, WindowSlope)>,
    pub composite: Option<BTreeMap<ModelKind, CompositeScore>>,
}

#[derive(Debug, Clone)]
pub struct SectorOutput {
    pub sector: Sector,
    pub indicators: SectorIndicators,
    pub features: FeatureMatrix,
    pub study: StudySummary,
    pub selection: SelectionOutcome,
    pub model: TrainedModel,
    pub annual_predictions: Vec<f64>,
    pub nowcast: NowcastSeries,
    pub analysis: SectorAnalysis,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub config: PipelineConfig,
    pub sectors: Vec<SectorOutput>,
}

const STAGE_INGEST: &str = "ingest";
const STAGE_INDICATORS: &str = "indicators";
const STAGE_FEATURES: &str = "features";
const STAGE_STUDY: &str = "study";
const STAGE_SELECT: &str = "select";
const STAGE_REFIT: &str = "refit";
const STAGE_NOWCAST: &str = "nowcast";
const STAGE_ANALYZE: &str = "analyze";
const STAGE_WRITE: &str = "write";

fn tag<T>(r: Result<T>, stage: &'static str, sector: Option<Sector>) -> Result<T> {
    r.map_err(|e| e.in_stage(stage, sector.map(|s| s.to_string())))
}

/// Fit the selected kind on every annual row. Ensembles are tuned first
/// with the same randomized search used inside the study.
pub fn refit(config: &PipelineConfig, sector: Sector, features: &FeatureMatrix, kind: ModelKind) -> Result<TrainedModel> {
    let x = features.annual_matrix();
    let seed = sector_seed(config.seed, sector);
    let hp = if kind.is_ensemble() {
        Some(
            randomized_search(
                &x,
                &features.target,
                kind,
                &config.hyperparameter_space,
                config.candidates,
                config.folds,
                derive_path(seed, &[u64::MAX, 1]),
            )?
            .best,
        )
    } else {
        None
    };
    TrainedModel::fit(kind, &x, &features.target, &features.signs(), hp.as_ref(), derive_path(seed, &[u64::MAX, 2]))
}

pub fn nowcast_series(
    sector: Sector,
    model: &TrainedModel,
    features: &FeatureMatrix,
    indicators: &[Indicator],
    as_of: NaiveDate,
) -> Result<NowcastSeries> {
    let values = model.predict(&features.daily_matrix())?;
    if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::InvalidSeries(format!(
            "nonpositive estimate {v} on {}",
            features.daily_dates[k]
        )));
    }
    let series = TimeSeries::mixed(features.daily_dates.iter().copied().zip(values).collect(), Frequency::Daily, TARGET_UNIT)?;
    let last_observations: BTreeMap<IndicatorCode, NaiveDate> =
        indicators.iter().map(|i| (i.code(), i.last_observation())).collect();
    let oldest = last_observations.values().min().copied().ok_or(Error::EmptyInput)?;
    Ok(NowcastSeries {
        sector,
        kind: model.kind(),
        trained_as_of: as_of,
        latency_days: (as_of - oldest).num_days().max(0),
        last_observations,
        series,
    })
}

pub fn analyze(
    config: &PipelineConfig,
    sector: Sector,
    features: &FeatureMatrix,
    annual_predictions: &[f64],
    nowcast: &NowcastSeries,
    study: &StudySummary,
) -> Result<SectorAnalysis> {
    let mut outliers = Vec::new();
    for (j, code) in features.codes.iter().enumerate() {
        let pts = features
            .years
            .iter()
            .enumerate()
            .map(|(k, &y)| (features.annual[k][j], annual_predictions[k], y))
            .collect();
        let sample = RelationshipSample::new(pts)?;
        match analysis::mahalanobis_outliers(&sample, config.analysis.alpha, config.analysis.df) {
            Ok(r) => outliers.push((code.to_string(), r)),
            Err(Error::DegenerateRelationship) => {}
            Err(e) => return Err(e),
        }
    }
    let annual = |vals: &[f64]| {
        TimeSeries::new(
            features.years.iter().map(|&y| year_end(y)).zip(vals.iter().copied()).collect(),
            Frequency::Annual,
            TARGET_UNIT,
        )
    };
    let variation = analysis::interannual_comparison(&annual(&features.target)?, &annual(annual_predictions)?)?;
    let correlation = analysis::correlation_matrix(features)?;
    let mut slopes = Vec::new();
    let windows: Vec<&crate::nowcast::SlopeWindow> = config.analysis.slope_windows.iter().filter(|w| w.sector == sector).collect();
    if !windows.is_empty() {
        let rebased = nowcast.series.rebase_to_1990()?;
        for w in windows {
            slopes.push((w.start.to_string(), w.end.to_string(), analysis::window_slope(&rebased, w.start, w.end)?));
        }
    }
    let composite = match &config.analysis.composite_weights {
        Some(weights) => Some(composite_score(study, weights)?),
        None => None,
    };
    Ok(SectorAnalysis {
        outliers,
        variation,
        correlation,
        slopes,
        composite,
    })
}

/// How far a run goes and which reports it writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Indicators,
    Study,
    Select,
    Nowcast,
    Analyze,
    Run,
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(f)
}

/// Every stage for every requested sector, computed but not written.
pub fn compute(config: &PipelineConfig) -> Result<PipelineOutput> {
    config.validate()?;
    with_pool(config.threads, || {
        let inputs = tag(load_inputs(config), STAGE_INGEST, None)?;
        let mut sectors = Vec::new();
        for sector in config.sector_list() {
            sectors.push(compute_sector(config, &inputs, sector)?);
        }
        Ok(PipelineOutput {
            config: config.clone(),
            sectors,
        })
    })
}

fn compute_sector(config: &PipelineConfig, inputs: &Inputs, sector: Sector) -> Result<SectorOutput> {
    let s = Some(sector);
    let indicators = tag(build_indicators(inputs, sector, config.as_of), STAGE_INDICATORS, s)?;
    let features = tag(
        load_target(&inputs.manifest, sector).and_then(|t| assemble_features(&indicators.indicators, &t, config.as_of)),
        STAGE_FEATURES,
        s,
    )?;
    let study = tag(run_study(&features, &ModelKind::ALL, &config.study(sector)), STAGE_STUDY, s)?;
    let selection = tag(select_model(&study, config.overfit_threshold), STAGE_SELECT, s)?;
    let model = tag(refit(config, sector, &features, selection.survivor), STAGE_REFIT, s)?;
    let annual_predictions = tag(model.predict(&features.annual_matrix()), STAGE_NOWCAST, s)?;
    let nowcast = tag(
        nowcast_series(sector, &model, &features, &indicators.indicators, config.as_of),
        STAGE_NOWCAST,
        s,
    )?;
    let analysis = tag(analyze(config, sector, &features, &annual_predictions, &nowcast, &study), STAGE_ANALYZE, s)?;
    Ok(SectorOutput {
        sector,
        indicators,
        features,
        study,
        selection,
        model,
        annual_predictions,
        nowcast,
        analysis,
    })
}

/// Compute everything and write every report to `config.output_dir`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutput> {
    let out = compute(config)?;
    tag(write_outputs(&out, Stage::Run), STAGE_WRITE, None)?;
    Ok(out)
}

#[derive(Serialize)]
struct SectorSummary<'a> {
    sector: Sector,
    fleet: Option<FleetParameters>,
    selection: &'a SelectionOutcome,
    nowcast: &'a NowcastSeries,
    first_estimate: Option<NaiveDate>,
    last_estimate: Option<NaiveDate>,
    paired_ratio_median: Option<f64>,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    format_version: u32,
    config: &'a PipelineConfig,
    study_seeds: BTreeMap<Sector, u64>,
    sectors: Vec<SectorSummary<'a>>,
}

fn sector_dir(s: Sector) -> String {
    s.as_str().to_lowercase()
}

/// Write the reports belonging to `stage` (and the stages before it).
pub fn write_outputs(out: &PipelineOutput, stage: Stage) -> Result<PathBuf> {
    let st = Staging::new(&out.config.output_dir)?;
    for so in &out.sectors {
        let dir = sector_dir(so.sector);
        let p = |name: &str| st.path(format!("{dir}/{name}"));
        if stage >= Stage::Indicators {
            for ind in &so.indicators.indicators {
                report::write_series(&st.path(format!("{dir}/indicators/{}.csv", ind.code()))?, ind.series())?;
            }
            report::write_features(&p("features_annual.csv")?, &so.features)?;
        }
        if stage >= Stage::Study {
            let study_dir = p("study_test_mape.csv")?;
            report::write_study(study_dir.parent().expect("sector dir"), &so.study)?;
            report::write_json(&p("study.json")?, &so.study)?;
        }
        if stage >= Stage::Select {
            report::write_json(&p("selection.json")?, &so.selection)?;
        }
        if stage >= Stage::Nowcast {
            report::write_text(&p("model.json")?, &so.model.to_json()?)?;
            report::write_annual_predictions(&p("annual_predictions.csv")?, &so.features.years, &so.features.target, &so.annual_predictions)?;
            report::write_series(&p("nowcast.csv")?, &so.nowcast.series)?;
        }
        if stage >= Stage::Analyze {
            let a = &so.analysis;
            report::write_outliers(&p("outliers.csv")?, &a.outliers)?;
            report::write_interannual(&p("interannual.csv")?, &a.variation)?;
            report::write_json(&p("interannual.json")?, &a.variation)?;
            report::write_correlation(&p("correlation.csv")?, &a.correlation)?;
            if !a.slopes.is_empty() {
                report::write_slopes(&p("slopes.csv")?, &a.slopes)?;
            }
            if let Some(c) = &a.composite {
                report::write_composite(&p("composite.csv")?, c)?;
            }
        }
    }
    let summary = RunSummary {
        format_version: 1,
        config: &out.config,
        study_seeds: out.sectors.iter().map(|s| (s.sector, sector_seed(out.config.seed, s.sector))).collect(),
        sectors: out
            .sectors
            .iter()
            .map(|s| SectorSummary {
                sector: s.sector,
                fleet: s.indicators.fleet,
                selection: &s.selection,
                nowcast: &s.nowcast,
                first_estimate: s.nowcast.series.first_date(),
                last_estimate: s.nowcast.series.last_date(),
                paired_ratio_median: s.analysis.variation.paired_ratio_median,
            })
            .collect(),
    };
    report::write_json(&st.path("summary.json")?, &summary)?;
    st.commit()
}

/// Run up to `stage` and write its reports, all or nothing.
pub fn execute(config: &PipelineConfig, stage: Stage) -> Result<PathBuf> {
    config.validate()?;
    match stage {
        Stage::Ingest => with_pool(config.threads, || {
            let inputs = tag(load_inputs(config), STAGE_INGEST, None)?;
            tag(write_ingest(config, &inputs), STAGE_WRITE, None)
        }),
        Stage::Indicators => with_pool(config.threads, || {
            let inputs = tag(load_inputs(config), STAGE_INGEST, None)?;
            let st = tag(Staging::new(&config.output_dir), STAGE_WRITE, None)?;
            for sector in config.sector_list() {
                let ind = tag(build_indicators(&inputs, sector, config.as_of), STAGE_INDICATORS, Some(sector))?;
                for i in &ind.indicators {
                    let path = st.path(format!("{}/indicators/{}.csv", sector_dir(sector), i.code()));
                    tag(path.and_then(|p| report::write_series(&p, i.series())), STAGE_WRITE, None)?;
                }
            }
            tag(st.commit(), STAGE_WRITE, None)
        }),
        Stage::Study | Stage::Select => with_pool(config.threads, || {
            let inputs = tag(load_inputs(config), STAGE_INGEST, None)?;
            let st = tag(Staging::new(&config.output_dir), STAGE_WRITE, None)?;
            for sector in config.sector_list() {
                let s = Some(sector);
                let ind = tag(build_indicators(&inputs, sector, config.as_of), STAGE_INDICATORS, s)?;
                let features = tag(
                    load_target(&inputs.manifest, sector).and_then(|t| assemble_features(&ind.indicators, &t, config.as_of)),
                    STAGE_FEATURES,
                    s,
                )?;
                let study = tag(run_study(&features, &ModelKind::ALL, &config.study(sector)), STAGE_STUDY, s)?;
                let dir = sector_dir(sector);
                let written = st.path(format!("{dir}/study.json")).and_then(|p| {
                    report::write_json(&p, &study)?;
                    report::write_study(p.parent().expect("sector dir"), &study)
                });
                tag(written, STAGE_WRITE, None)?;
                if stage == Stage::Select {
                    let sel = tag(select_model(&study, config.overfit_threshold), STAGE_SELECT, s)?;
                    tag(st.path(format!("{dir}/selection.json")).and_then(|p| report::write_json(&p, &sel)), STAGE_WRITE, None)?;
                }
            }
            tag(st.commit(), STAGE_WRITE, None)
        }),
        _ => {
            let out = compute(config)?;
            tag(write_outputs(&out, stage), STAGE_WRITE, None)
        }
    }
}

fn write_ingest(config: &PipelineConfig, inputs: &Inputs) -> Result<PathBuf> {
    let st = Staging::new(&config.output_dir)?;
    let m = &inputs.manifest;
    for spec in &m.sources {
        if spec.kind == crate::ingest::SourceKind::Series {
            let s = m.load_series(&spec.name).map_err(|e| Error::InvalidSeries(format!("{}: {e}", spec.name)))?;
            report::write_series(&st.path(format!("ingest/{}.csv", spec.name))?, &s)?;
        }
    }
    if let Some((t, _)) = &inputs.traffic {
        report::write_series(&st.path("ingest/traffic_volume.csv")?, t)?;
    }
    st.commit()
}
