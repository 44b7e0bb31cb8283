//! Writes the synthetic input fixture used by the integration tests.
//!
//! All series are drawn from seeded streams; the annual targets are a fixed
//! positive combination of the resulting indicator features plus noise.
//!
//! ```text
//! cargo run -p ghg-nowcast --example synthetic_fixture -- [OUT_DIR]
//! ```

use chrono::{Datelike, Duration, NaiveDate};
use ghg_nowcast::indicators::{assemble_features, year_end};
use ghg_nowcast::nowcast::{build_indicators, load_inputs, PipelineConfig};
use ghg_nowcast::rng::{derive_seed, Stream};
use ghg_nowcast::{Frequency, IndicatorCode, Sector, TimeSeries};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

const SEED: u64 = 20220630;
const FIRST_YEAR: i32 = 1989;

fn d(y: i32, m: u32, day: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, day).unwrap()
}

fn as_of() -> NaiveDate {
    d(2022, 6, 30)
}

/// Years since 1990 as a real number.
fn t(date: NaiveDate) -> f64 {
    (date - d(1990, 1, 1)).num_days() as f64 / 365.25
}

fn season(date: NaiveDate, amplitude: f64, phase: f64) -> f64 {
    1.0 + amplitude * (2.0 * std::f64::consts::PI * (date.ordinal() as f64 / 365.25 + phase)).sin()
}

/// Lockdown-style dip in the first half of 2020.
fn shock(date: NaiveDate, depth: f64) -> f64 {
    if date >= d(2020, 3, 26) && date <= d(2020, 5, 13) {
        1.0 - depth
    } else if date > d(2020, 5, 13) && date <= d(2020, 7, 31) {
        1.0 - depth * 0.3
    } else {
        1.0
    }
}

/// Gradual downturn then recovery around 2008-2009.
fn recession(date: NaiveDate, depth: f64) -> f64 {
    let x = t(date) - 18.8;
    1.0 - depth * (-x * x / 0.3).exp()
}

fn noise(rng: &mut Stream, sd: f64) -> f64 {
    // Sum of uniforms, roughly normal.
    let s: f64 = (0..4).map(|_| rng.next_f64() - 0.5).sum();
    1.0 + sd * s * 3f64.sqrt()
}

fn months(from: NaiveDate, to: NaiveDate) -> Vec<NaiveDate> {
    let mut out = Vec::new();
    let mut cur = d(from.year(), from.month(), 1);
    while cur <= to {
        out.push(cur);
        cur = if cur.month() == 12 {
            d(cur.year() + 1, 1, 1)
        } else {
            d(cur.year(), cur.month() + 1, 1)
        };
    }
    out
}

fn write_series(dir: &Path, name: &str, header: &str, points: &[(NaiveDate, f64)], decimals: usize) {
    let mut s = format!("{header}\n");
    for (date, v) in points {
        writeln!(s, "{date},{v:.decimals$}").unwrap();
    }
    fs::write(dir.join(name), s).unwrap();
}

fn traffic(dir: &Path) {
    let sites: [(&str, NaiveDate, NaiveDate, f64, u64); 5] = [
        ("SH1 Drury North Telemetry", d(1989, 1, 2), d(2022, 6, 27), 38_000.0, 1),
        ("Auckland Harbour Bridge Southbound", d(1989, 1, 2), d(2022, 6, 20), 71_000.0, 2),
        ("Drury Interchange Ramp", d(1996, 4, 1), d(2022, 6, 27), 9_000.0, 3),
        ("Kaimai Range Summit", d(1989, 1, 2), d(2022, 6, 27), 12_000.0, 4),
        ("Harbour Bridge Clip-on Counter", d(1989, 1, 2), d(2022, 6, 27), 15_000.0, 5),
    ];
    let mut s = String::from("site_description,count_date,daily_count\n");
    for (name, start, end, base, k) in sites {
        let mut rng = Stream::new(derive_seed(SEED, 100 + k));
        let mut date = start;
        while date <= end {
            // A counter outage long enough to fail the continuity check.
            let outage = k == 5 && date >= d(2004, 2, 1) && date < d(2005, 8, 1);
            if !outage {
                let growth = 1.0 + 0.018 * t(date);
                let v = base * growth * season(date, 0.06, 0.1) * shock(date, 0.55) * recession(date, 0.03) * noise(&mut rng, 0.02);
                writeln!(s, "{name},{date},{v:.0}").unwrap();
            }
            date += Duration::days(7);
        }
    }
    fs::write(dir.join("traffic_counts.csv"), s).unwrap();
}

fn electricity(dir: &Path) {
    let mut rng = Stream::new(derive_seed(SEED, 200));
    let pts: Vec<(NaiveDate, f64)> = months(d(FIRST_YEAR, 1, 1), d(2022, 4, 1))
        .into_iter()
        .map(|m| {
            let level = 320.0 + 60.0 * (-(t(m) - 17.0).powi(2) / 60.0).exp() - 2.0 * t(m).max(0.0);
            (m, level * season(m, 0.12, 0.35) * shock(m, 0.2) * noise(&mut rng, 0.05))
        })
        .collect();
    write_series(dir, "electricity_emissions.csv", "month,ktco2e", &pts, 3);
}

fn vehicles(dir: &Path) {
    let mut rng = Stream::new(derive_seed(SEED, 300));
    let mut s = String::from("motive_power,vehicle_year,first_nz_registration_year,gross_vehicle_mass,first_nz_registration_date\n");
    for m in months(d(FIRST_YEAR, 1, 1), d(2022, 5, 1)) {
        let year = m.year();
        let share_ev = (0.002 * (t(m) - 20.0).max(0.0).powi(2)).min(0.3);
        let share_hybrid = (0.01 * (t(m) - 12.0).max(0.0)).min(0.15);
        let per_month = 6 + rng.below(3) as u32;
        for _ in 0..per_month {
            let u = rng.next_f64();
            let motive = if u < share_ev {
                "electric"
            } else if u < share_ev + share_hybrid {
                "petrol hybrid"
            } else if u < 0.72 {
                "petrol"
            } else {
                "diesel"
            };
            let age = rng.below(7) as i32;
            let mass = 1200.0 + 1800.0 * rng.next_f64() + 10.0 * t(m);
            let day = 1 + rng.below(28) as u32;
            writeln!(s, "{motive},{},{year},{mass:.0},{}", year - age, d(year, m.month(), day)).unwrap();
        }
    }
    fs::write(dir.join("vehicle_register.csv"), s).unwrap();
}

fn factors(dir: &Path) {
    let rows = [
        ("petrol", 1980, 0.31),
        ("petrol", 1995, 0.28),
        ("petrol", 2005, 0.25),
        ("petrol", 2015, 0.22),
        ("diesel", 1980, 0.34),
        ("diesel", 1995, 0.31),
        ("diesel", 2005, 0.28),
        ("diesel", 2015, 0.25),
        ("petrol hybrid", 2000, 0.16),
        ("petrol hybrid", 2015, 0.13),
        ("electric", 2000, 0.0),
    ];
    let mut s = String::from("motive_power,vehicle_year,kgco2e_per_km\n");
    for (m, y, f) in rows {
        writeln!(s, "{m},{y},{f}").unwrap();
    }
    fs::write(dir.join("emission_factors.csv"), s).unwrap();
}

fn quarterly(from: NaiveDate, to: NaiveDate) -> Vec<NaiveDate> {
    months(from, to).into_iter().filter(|m| (m.month() - 1) % 3 == 0).collect()
}

fn energy_simple(dir: &Path) {
    let mut rng = Stream::new(derive_seed(SEED, 400));
    let pts: Vec<(NaiveDate, f64)> = quarterly(d(FIRST_YEAR, 1, 1), d(2022, 1, 1))
        .into_iter()
        .map(|q| {
            let level = 600_000.0 + 250_000.0 * (-(t(q) - 16.0).powi(2) / 40.0).exp();
            (q, level * noise(&mut rng, 0.06))
        })
        .collect();
    write_series(dir, "coal_production.csv", "quarter,tonnes", &pts, 0);
}

fn agriculture(dir: &Path) {
    let mut rng = Stream::new(derive_seed(SEED, 500));
    let cows: Vec<(NaiveDate, f64)> = (FIRST_YEAR..=2021)
        .map(|y| {
            let date = d(y, 6, 30);
            let level = 3.4e6 + 3.2e6 / (1.0 + (-(t(date) - 14.0) / 3.0).exp());
            (date, level * noise(&mut rng, 0.01))
        })
        .collect();
    write_series(dir, "dairy_cattle.csv", "year_ending,head", &cows, 0);

    let meat = |date: NaiveDate, rng: &mut Stream| 27_000.0 * (1.0 + 0.004 * t(date)) * season(date, 0.25, 0.9) * noise(rng, 0.05);
    let mut weekly = Vec::new();
    let mut date = d(2002, 7, 6);
    while date <= d(2022, 6, 18) {
        weekly.push((date, meat(date, &mut rng)));
        date += Duration::days(7);
    }
    write_series(dir, "meat_weekly.csv", "week_ending,tonnes", &weekly, 1);
    let monthly: Vec<(NaiveDate, f64)> = months(d(FIRST_YEAR, 1, 1), d(2003, 6, 1))
        .into_iter()
        .map(|m| (m, 0.8 * meat(m, &mut rng)))
        .collect();
    write_series(dir, "meat_monthly_historic.csv", "month,tonnes", &monthly, 1);

    let monthly_series = |name: &str, header: &str, base: f64, growth: f64, amp: f64, end: NaiveDate, rng: &mut Stream| {
        let pts: Vec<(NaiveDate, f64)> = months(d(FIRST_YEAR, 1, 1), end)
            .into_iter()
            .map(|m| (m, base * (1.0 + growth * t(m)) * season(m, amp, 0.2) * noise(rng, 0.08)))
            .collect();
        write_series(dir, name, header, &pts, 1);
    };
    monthly_series("fertiliser_imports.csv", "month,tonnes", 60_000.0, 0.06, 0.3, d(2022, 5, 1), &mut rng);
    monthly_series("exports_meat.csv", "month,nzd", 2.5e8, 0.05, 0.2, d(2022, 4, 1), &mut rng);
    monthly_series("exports_dairy.csv", "month,nzd", 3.0e8, 0.09, 0.35, d(2022, 4, 1), &mut rng);
    monthly_series("exports_horticulture.csv", "month,nzd", 1.0e8, 0.07, 0.4, d(2022, 4, 1), &mut rng);
}

const MANIFEST: &str = r#"# Synthetic inputs for the integration tests.

[traffic]
keywords = ["drury", "harbour bridge"]
continuous_from = 1990-01-01
continuous_to = 2022-01-01
max_gap_days = 366

[fleet]
baseline_mass = 2500.0

[[source]]
name = "traffic"
kind = "traffic"
path = "traffic_counts.csv"
frequency = "weekly"
unit = "vehicles"
schema = ["site_description", "count_date", "daily_count"]

[[source]]
name = "electricity_emissions"
kind = "series"
path = "electricity_emissions.csv"
frequency = "monthly"
unit = "ktCO2-e"
schema = ["month", "ktco2e"]

[[source]]
name = "vehicles"
kind = "vehicles"
path = "vehicle_register.csv"
frequency = "daily"
unit = "vehicles"
schema = ["motive_power", "vehicle_year", "first_nz_registration_year", "gross_vehicle_mass", "first_nz_registration_date"]

[[source]]
name = "emission_factors"
kind = "emission_factors"
path = "emission_factors.csv"
frequency = "annual"
unit = "kgCO2-e/km"
schema = ["motive_power", "vehicle_year", "kgco2e_per_km"]

[[source]]
name = "coal"
kind = "series"
path = "coal_production.csv"
frequency = "quarterly"
unit = "tonnes"
schema = ["quarter", "tonnes"]

[[source]]
name = "dairy_cattle"
kind = "series"
path = "dairy_cattle.csv"
frequency = "annual"
unit = "number"
schema = ["year_ending", "head"]

[[source]]
name = "meat"
kind = "series"
path = "meat_weekly.csv"
frequency = "weekly"
unit = "tonnes"
schema = ["week_ending", "tonnes"]

[[source]]
name = "meat_historic"
kind = "series"
path = "meat_monthly_historic.csv"
frequency = "monthly"
unit = "tonnes"
schema = ["month", "tonnes"]

[[source]]
name = "fertiliser_imports"
kind = "series"
path = "fertiliser_imports.csv"
frequency = "monthly"
unit = "tonnes"
schema = ["month", "tonnes"]

[[source]]
name = "exports_meat"
kind = "series"
path = "exports_meat.csv"
frequency = "monthly"
unit = "$"
schema = ["month", "nzd"]

[[source]]
name = "exports_dairy"
kind = "series"
path = "exports_dairy.csv"
frequency = "monthly"
unit = "$"
schema = ["month", "nzd"]

[[source]]
name = "exports_horticulture"
kind = "series"
path = "exports_horticulture.csv"
frequency = "monthly"
unit = "$"
schema = ["month", "nzd"]

[[source]]
name = "target_energy"
kind = "series"
path = "target_energy.csv"
frequency = "annual"
unit = "ktCO2-e"
schema = ["year_end", "ktco2e"]

[[source]]
name = "target_agriculture"
kind = "series"
path = "target_agriculture.csv"
frequency = "annual"
unit = "ktCO2-e"
schema = ["year_end", "ktco2e"]
"#;

const CONFIG: &str = r#"manifest = "manifest.toml"
sectors = ["Energy", "Agriculture"]
seed = 42
as_of = 2022-06-30
output_dir = "out"
candidates = 20
simulations = 30
overfit_threshold = 4.2

[analysis]
alpha = 0.05
df = 1

[[analysis.slope_windows]]
sector = "Energy"
start = 2020-03-01
end = 2020-04-30

[analysis.composite_weights]
accuracy = 1.0
stability = 1.0
overfit = 1.0
"#;

/// Weights applied to each feature divided by its mean.
fn target_weights(code: IndicatorCode) -> f64 {
    use IndicatorCode::*;
    match code {
        Lee => 0.45,
        Rem => 0.05,
        Etv => 0.3,
        Coa => 0.2,
        Cow => 0.6,
        Mea => -0.05,
        Fim => 0.25,
        Exm => 0.1,
        Exd => 0.05,
        Exf => 0.05,
    }
}

fn targets(dir: &Path) {
    let placeholder: Vec<(NaiveDate, f64)> = (1990..=2020).map(|y| (year_end(y), 1.0)).collect();
    for name in ["target_energy.csv", "target_agriculture.csv"] {
        write_series(dir, name, "year_end,ktco2e", &placeholder, 1);
    }
    let config = PipelineConfig {
        manifest: dir.join("manifest.toml"),
        sectors: Sector::ALL.to_vec(),
        seed: 0,
        as_of: as_of(),
        output_dir: dir.join("unused"),
        candidates: 1,
        simulations: 1,
        test_size: 6,
        folds: 5,
        overfit_threshold: 4.2,
        hyperparameter_space: Default::default(),
        threads: 1,
        analysis: Default::default(),
    };
    let inputs = load_inputs(&config).unwrap();
    let placeholder = TimeSeries::new(placeholder, Frequency::Annual, "ktCO2-e").unwrap();
    for (sector, name, base, k) in [
        (Sector::Energy, "target_energy.csv", 31_000.0, 600),
        (Sector::Agriculture, "target_agriculture.csv", 36_500.0, 700),
    ] {
        let ind = build_indicators(&inputs, sector, as_of()).unwrap();
        let fm = assemble_features(&ind.indicators, &placeholder, as_of()).unwrap();
        let means: Vec<f64> = (0..fm.codes.len())
            .map(|j| fm.annual.iter().map(|r| r[j]).sum::<f64>() / fm.annual.len() as f64)
            .collect();
        let mut rng = Stream::new(derive_seed(SEED, k));
        let pts: Vec<(NaiveDate, f64)> = fm
            .years
            .iter()
            .zip(&fm.annual)
            .map(|(&y, row)| {
                let signal: f64 = fm.codes.iter().zip(row).zip(&means).map(|((c, v), m)| target_weights(*c) * v / m).sum();
                (year_end(y), base * (0.1 + signal) * noise(&mut rng, 0.008))
            })
            .collect();
        write_series(dir, name, "year_end,ktco2e", &pts, 1);
    }
}

fn main() {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic"));
    fs::create_dir_all(&dir).unwrap();
    fs::write(dir.join("manifest.toml"), MANIFEST).unwrap();
    fs::write(dir.join("config.toml"), CONFIG).unwrap();
    traffic(&dir);
    electricity(&dir);
    vehicles(&dir);
    factors(&dir);
    energy_simple(&dir);
    agriculture(&dir);
    targets(&dir);
    println!("wrote fixture to {}", dir.display());
}
