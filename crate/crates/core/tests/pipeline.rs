mod common;

use chrono::{Duration, NaiveDate};
use ghg_nowcast::indicators::year_end;
use ghg_nowcast::nowcast::{compute, execute, Stage};
use ghg_nowcast::{Frequency, Sector, TimeSeries};
use std::fs;
use std::path::Path;

const GOLDEN_FILES: [&str; 11] = [
    "selection.json",
    "features_annual.csv",
    "study_test_mape.csv",
    "study_train_mape.csv",
    "study_overfit.csv",
    "study_stability.csv",
    "annual_predictions.csv",
    "nowcast.csv",
    "outliers.csv",
    "interannual.csv",
    "correlation.csv",
];

/// Full seed-42 run against the committed outputs. Set `UPDATE_GOLDEN=1` to
/// rewrite them after an intended change.
#[test]
fn seed_42_run_matches_golden_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    execute(&common::fixture_config(&out), Stage::Run).unwrap();
    let golden = common::golden_dir();
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut mismatched = Vec::new();
    for sector in ["energy", "agriculture"] {
        let mut files: Vec<&str> = GOLDEN_FILES.to_vec();
        if sector == "energy" {
            files.push("slopes.csv");
        }
        files.push("composite.csv");
        for f in files {
            let got = fs::read_to_string(out.join(sector).join(f)).unwrap();
            let path = golden.join(sector).join(f);
            if update {
                fs::create_dir_all(path.parent().unwrap()).unwrap();
                fs::write(&path, &got).unwrap();
            } else if fs::read_to_string(&path).ok().as_deref() != Some(got.as_str()) {
                mismatched.push(format!("{sector}/{f}"));
            }
        }
    }
    assert!(mismatched.is_empty(), "differs from golden: {mismatched:?}");
}

#[test]
fn nowcast_covers_every_day_through_as_of() {
    let tmp = tempfile::tempdir().unwrap();
    let config = common::quick_config(tmp.path());
    let out = compute(&config).unwrap();
    for s in &out.sectors {
        let pts = s.nowcast.series.points();
        assert_eq!(pts.last().unwrap().0, config.as_of);
        assert!(pts.windows(2).all(|w| w[1].0 - w[0].0 == Duration::days(1)));
        assert_eq!(pts.first().unwrap().0, s.features.daily_dates[0]);
        assert!(pts.iter().all(|p| p.1 > 0.0));
    }
}

#[test]
fn latency_is_measured_from_the_stalest_indicator() {
    let tmp = tempfile::tempdir().unwrap();
    let config = common::quick_config(tmp.path());
    let out = compute(&config).unwrap();
    for s in &out.sectors {
        let stalest = s.indicators.indicators.iter().map(|i| i.last_observation()).min().unwrap();
        assert_eq!(s.nowcast.latency_days, (config.as_of - stalest).num_days());
        assert_eq!(s.nowcast.last_observations.len(), s.indicators.indicators.len());
    }
    // The annual dairy count, last dated mid-2021, is the stalest agriculture feed.
    let ag = out.sectors.iter().find(|s| s.sector == Sector::Agriculture).unwrap();
    assert_eq!(ag.nowcast.latency_days, (config.as_of - NaiveDate::from_ymd_opt(2021, 6, 30).unwrap()).num_days());
}

#[test]
fn annual_rows_match_daily_rows_at_year_end() {
    let tmp = tempfile::tempdir().unwrap();
    let out = compute(&common::quick_config(tmp.path())).unwrap();
    for s in &out.sectors {
        let f = &s.features;
        assert_eq!(f.years, (1990..=2020).collect::<Vec<_>>());
        for (y, row) in f.years.iter().zip(&f.annual) {
            let i = f.daily_index(year_end(*y)).unwrap();
            assert_eq!(&f.daily[i], row);
        }
    }
}

#[test]
fn stage_outputs_are_limited_to_the_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let base = common::quick_config(tmp.path());
    let files = |stage: Stage, name: &str| {
        let mut c = base.clone();
        c.output_dir = tmp.path().join(name);
        let dir = execute(&c, stage).unwrap();
        common::tree_files(&dir)
            .into_iter()
            .map(|p| p.to_string_lossy().replace('\\', "/"))
            .collect::<Vec<_>>()
    };
    let ingest = files(Stage::Ingest, "ingest");
    assert!(ingest.iter().any(|f| f.contains("coal")));
    assert!(!ingest.iter().any(|f| f.contains("study")));

    let ind = files(Stage::Indicators, "indicators");
    assert_eq!(ind.len(), 10);
    assert!(ind.contains(&"energy/indicators/ETV.csv".to_string()));
    assert!(ind.contains(&"agriculture/indicators/MEA.csv".to_string()));

    let select = files(Stage::Select, "select");
    assert!(select.contains(&"energy/selection.json".to_string()));
    assert!(!select.iter().any(|f| f.ends_with("nowcast.csv")));

    let study = files(Stage::Study, "study");
    assert!(study.contains(&"agriculture/study_test_mape.csv".to_string()));
    assert!(!study.iter().any(|f| f.ends_with("selection.json")));
}

#[test]
fn single_sector_run_writes_one_sector() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = common::quick_config(&tmp.path().join("out"));
    c.sectors = vec![Sector::Agriculture];
    let dir = execute(&c, Stage::Nowcast).unwrap();
    assert!(dir.join("agriculture/nowcast.csv").is_file());
    assert!(!dir.join("energy").exists());
}

fn broken_fixture(tmp: &Path) -> std::path::PathBuf {
    let dir = tmp.join("fixture");
    fs::create_dir_all(&dir).unwrap();
    for entry in fs::read_dir(common::fixture_dir()).unwrap() {
        let p = entry.unwrap().path();
        fs::copy(&p, dir.join(p.file_name().unwrap())).unwrap();
    }
    dir
}

#[test]
fn missing_source_fails_with_stage_tag_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = broken_fixture(tmp.path());
    fs::remove_file(dir.join("coal_production.csv")).unwrap();
    let mut c = common::quick_config(&tmp.path().join("out"));
    c.manifest = dir.join("manifest.toml");
    let err = execute(&c, Stage::Run).unwrap_err();
    assert!(err.stage().is_some(), "untagged error: {err}");
    assert!(err.to_string().contains("coal_production.csv"), "{err}");
    assert!(!c.output_dir.exists());
}

#[test]
fn zero_target_value_is_reported_from_the_study_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = broken_fixture(tmp.path());
    let path = dir.join("target_energy.csv");
    let text = fs::read_to_string(&path).unwrap();
    let edited: Vec<String> = text
        .lines()
        .map(|l| if l.starts_with("1995-12-31") { "1995-12-31,0".to_string() } else { l.to_string() })
        .collect();
    fs::write(&path, edited.join("\n") + "\n").unwrap();
    let mut c = common::quick_config(&tmp.path().join("out"));
    c.manifest = dir.join("manifest.toml");
    c.sectors = vec![Sector::Energy];
    let err = execute(&c, Stage::Study).unwrap_err();
    assert_eq!(err.stage(), Some("study"), "{err}");
    assert!(err.to_string().contains("Energy"), "{err}");
}

#[test]
fn as_of_before_the_data_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = common::quick_config(tmp.path());
    c.as_of = NaiveDate::from_ymd_opt(2010, 1, 1).unwrap();
    assert!(compute(&c).is_err());
}

#[test]
fn written_nowcast_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let c = common::quick_config(&tmp.path().join("out"));
    let out = compute(&c).unwrap();
    let dir = ghg_nowcast::nowcast::write_outputs(&out, Stage::Nowcast).unwrap();
    for s in &out.sectors {
        let name = s.sector.as_str().to_lowercase();
        let read = TimeSeries::read_csv(&dir.join(name).join("nowcast.csv"), Frequency::Daily, "ktCO2-e").unwrap();
        assert_eq!(read.points(), s.nowcast.series.points());
    }
}
