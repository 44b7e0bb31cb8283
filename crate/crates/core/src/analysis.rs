//! Post-hoc tools: relationship outliers, inter-annual comparison,
//! indicator correlation and shock-window slopes.

use crate::error::{Error, Result};
use crate::indicators::FeatureMatrix;
use crate::special::chi2_sf;
use crate::stats;
use crate::timeseries::TimeSeries;
use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_DF: u32 = 1;

/// Paired (indicator, predicted emissions) values, one per year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationshipSample {
    points: Vec<(f64, f64, i32)>,
}

impl RelationshipSample {
    pub fn new(points: Vec<(f64, f64, i32)>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InsufficientHistory {
                needed: 3,
                available: points.len(),
            });
        }
        let mut years: Vec<i32> = points.iter().map(|p| p.2).collect();
        years.sort_unstable();
        if years.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("relationship sample has repeated years".into()));
        }
        if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(Error::InvalidArgument("relationship sample has non-finite values".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64, i32)] {
        &self.points
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierRow {
    pub year: i32,
    pub indicator: f64,
    pub prediction: f64,
    pub distance_squared: f64,
    pub p_value: f64,
    pub outlier: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub alpha: f64,
    pub df: u32,
    pub rows: Vec<OutlierRow>,
}

/// Squared Mahalanobis distance of each point from the sample mean, with
/// the `n - 1` covariance, and its chi-squared upper-tail p-value.
pub fn mahalanobis_outliers(sample: &RelationshipSample, alpha: f64, df: u32) -> Result<OutlierReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let pts = sample.points();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p.0 - mx, p.1 - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let (sxx, syy, sxy) = (sxx / (n - 1.0), syy / (n - 1.0), sxy / (n - 1.0));
    let det = sxx * syy - sxy * sxy;
    if !(det > 1e-12 * sxx * syy) {
        return Err(Error::DegenerateRelationship);
    }
    let rows = pts
        .iter()
        .map(|&(x, y, year)| {
            let (dx, dy) = (x - mx, y - my);
            let d2 = ((syy * dx * dx - 2.0 * sxy * dx * dy + sxx * dy * dy) / det).max(0.0);
            let p = chi2_sf(d2, df)?;
            Ok(OutlierRow {
                year,
                indicator: x,
                prediction: y,
                distance_squared: d2,
                p_value: p,
                outlier: p < alpha,
            })
        })
        .collect::<Result<_>>()?;
    Ok(OutlierReport { alpha, df, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Self {
        let s = stats::sorted(values);
        Self {
            q1: stats::quantile_sorted(&s, 0.25),
            q2: stats::quantile_sorted(&s, 0.5),
            q3: stats::quantile_sorted(&s, 0.75),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationComparison {
    pub sector_mean: f64,
    /// |actual - predicted| per year, % of the sector mean.
    pub residuals: BTreeMap<i32, f64>,
    /// |actual(t) - actual(t-1)| per year, % of the sector mean.
    pub interannual: BTreeMap<i32, f64>,
    pub residual_quartiles: Quartiles,
    pub interannual_quartiles: Quartiles,
    /// Median of interannual / residual; `None` if every residual is zero.
    pub paired_ratio_median: Option<f64>,
    /// Years left out of the ratio because their residual is zero.
    pub excluded_years: Vec<i32>,
}

fn by_year(s: &TimeSeries) -> BTreeMap<i32, f64> {
    s.points().iter().map(|(d, v)| (d.year(), *v)).collect()
}

pub fn interannual_comparison(actual: &TimeSeries, predicted: &TimeSeries) -> Result<VariationComparison> {
    let a = by_year(actual);
    let p = by_year(predicted);
    if a.len() != actual.len() || p.len() != predicted.len() {
        return Err(Error::InvalidArgument("annual series has repeated years".into()));
    }
    if a.keys().ne(p.keys()) {
        return Err(Error::InvalidArgument("actual and predicted cover different years".into()));
    }
    if a.len() < 3 {
        return Err(Error::InsufficientHistory {
            needed: 3,
            available: a.len(),
        });
    }
    let mean = stats::mean(&a.values().copied().collect::<Vec<_>>());
    if mean == 0.0 {
        return Err(Error::InvalidArgument("sector mean is zero".into()));
    }
    let pct = |v: f64| 100.0 * v / mean.abs();
    let residuals: BTreeMap<i32, f64> = a.iter().map(|(y, v)| (*y, pct((v - p[y]).abs()))).collect();
    let interannual: BTreeMap<i32, f64> = a
        .iter()
        .zip(a.iter().skip(1))
        .map(|((_, prev), (y, cur))| (*y, pct((cur - prev).abs())))
        .collect();
    let mut ratios = Vec::new();
    let mut excluded_years = Vec::new();
    for (y, v) in &interannual {
        let r = residuals[y];
        if r == 0.0 {
            excluded_years.push(*y);
        } else {
            ratios.push(v / r);
        }
    }
    Ok(VariationComparison {
        sector_mean: mean,
        residual_quartiles: Quartiles::of(&residuals.values().copied().collect::<Vec<_>>()),
        interannual_quartiles: Quartiles::of(&interannual.values().copied().collect::<Vec<_>>()),
        residuals,
        interannual,
        paired_ratio_median: (!ratios.is_empty()).then(|| stats::median(&ratios)),
        excluded_years,
    })
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (stats::mean(a), stats::mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    /// `(feature_a, feature_b, r)` for every ordered pair.
    pub fn long_form(&self) -> Vec<(String, String, f64)> {
        let mut out = Vec::new();
        for (i, a) in self.names.iter().enumerate() {
            for (j, b) in self.names.iter().enumerate() {
                out.push((a.clone(), b.clone(), self.values[i][j]));
            }
        }
        out
    }
}

/// Pearson correlation of the annual indicator columns.
pub fn correlation_matrix(features: &FeatureMatrix) -> Result<CorrelationMatrix> {
    if features.annual.len() < 2 {
        return Err(Error::InsufficientHistory {
            needed: 2,
            available: features.annual.len(),
        });
    }
    let names: Vec<String> = features.codes.iter().map(|c| c.to_string()).collect();
    let cols: Vec<Vec<f64>> = (0..names.len())
        .map(|j| features.annual.iter().map(|r| r[j]).collect())
        .collect();
    columns_correlation(&names, &cols)
}

pub fn columns_correlation(names: &[String], cols: &[Vec<f64>]) -> Result<CorrelationMatrix> {
    for (name, c) in names.iter().zip(cols) {
        if c.iter().all(|v| *v == c[0]) {
            return Err(Error::ConstantColumn(name.clone()));
        }
    }
    let p = cols.len();
    let mut values = vec![vec![0.0; p]; p];
    for i in 0..p {
        values[i][i] = 1.0;
        for j in (i + 1)..p {
            let r = pearson(&cols[i], &cols[j]);
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        names: names.to_vec(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSlope {
    /// Units per day.
    pub slope: f64,
    /// Days per unit change, `|1 / slope|`; infinite for a flat window.
    pub days_per_percent: f64,
    /// -1, 0 or 1.
    pub sign: i8,
    pub points: usize,
}

/// Ordinary least-squares trend over `[start, end]`.
pub fn window_slope(s: &TimeSeries, start: NaiveDate, end: NaiveDate) -> Result<WindowSlope> {
    if start >= end {
        return Err(Error::InvalidArgument(format!("window start {start} is not before end {end}")));
    }
    let pts = s.slice(start, end);
    if pts.len() < 2 {
        return Err(Error::InsufficientHistory {
            needed: 2,
            available: pts.len(),
        });
    }
    let t: Vec<f64> = pts.iter().map(|(d, _)| (*d - start).num_days() as f64).collect();
    let v: Vec<f64> = pts.iter().map(|(_, v)| *v).collect();
    let (mt, mv) = (stats::mean(&t), stats::mean(&v));
    let (mut stv, mut stt) = (0.0, 0.0);
    for (x, y) in t.iter().zip(&v) {
        stv += (x - mt) * (y - mv);
        stt += (x - mt) * (x - mt);
    }
    let slope = stv / stt;
    Ok(WindowSlope {
        slope,
        days_per_percent: if slope == 0.0 { f64::INFINITY } else { (1.0 / slope).abs() },
        sign: if slope > 0.0 {
            1
        } else if slope < 0.0 {
            -1
        } else {
            0
        },
        points: pts.len(),
    })
}
