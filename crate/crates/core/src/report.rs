//! Delimited-text and JSON report writers, plus all-or-nothing output
//! directories.

use crate::analysis::{CorrelationMatrix, OutlierReport, VariationComparison, WindowSlope};
use crate::error::{Error, Result};
use crate::selection::{CompositeScore, StudySummary};
use crate::stats::Describe;
use crate::timeseries::{format_value, TimeSeries};
use crate::models::ModelKind;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// A directory built up next to its destination and moved into place on
/// [`Staging::commit`]. Dropping it uncommitted removes the partial output.
pub struct Staging {
    tmp: PathBuf,
    dest: PathBuf,
    committed: bool,
}

impl Staging {
    pub fn new(dest: &Path) -> Result<Self> {
        let name = dest
            .file_name()
            .ok_or_else(|| Error::InvalidArgument(format!("output path {} has no name", dest.display())))?
            .to_string_lossy()
            .into_owned();
        let parent = dest.parent().map(Path::to_path_buf).unwrap_or_default();
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(&parent).map_err(|e| Error::io(&parent, e))?;
        }
        let tmp = parent.join(format!(".{name}.partial"));
        if tmp.exists() {
            fs::remove_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
        }
        fs::create_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
        Ok(Self {
            tmp,
            dest: dest.to_path_buf(),
            committed: false,
        })
    }

    pub fn path(&self, relative: impl AsRef<Path>) -> Result<PathBuf> {
        let p = self.tmp.join(relative);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        Ok(p)
    }

    pub fn commit(mut self) -> Result<PathBuf> {
        if self.dest.exists() {
            fs::remove_dir_all(&self.dest).map_err(|e| Error::io(&self.dest, e))?;
        }
        fs::rename(&self.tmp, &self.dest).map_err(|e| Error::io(&self.dest, e))?;
        self.committed = true;
        Ok(self.dest.clone())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.tmp);
        }
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

fn put<W: Write>(w: &mut csv::Writer<W>, path: &Path, row: &[String]) -> Result<()> {
    w.write_record(row).map_err(|e| Error::parse(path, e.to_string()))
}

fn finish<W: Write>(mut w: csv::Writer<W>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

pub fn write_series(path: &Path, s: &TimeSeries) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    s.write_csv(BufWriter::new(f))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Serialization(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Statistics down the rows, one column per entry.
pub fn write_describe_table(path: &Path, columns: &[(String, Describe)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut h = vec!["statistic".to_string()];
    h.extend(columns.iter().map(|c| c.0.clone()));
    put(&mut w, path, &h)?;
    for (k, label) in Describe::ROW_LABELS.iter().enumerate() {
        let mut row = vec![label.to_string()];
        row.extend(columns.iter().map(|c| format_value(c.1.rows()[k])));
        put(&mut w, path, &row)?;
    }
    finish(w, path)
}

/// Test MAPE by kind, the over-fitting outcome by kind, and the spread of
/// each kind's coefficients or importances by feature.
pub fn write_study(dir: &Path, summary: &StudySummary) -> Result<()> {
    let by_kind = |f: fn(&crate::selection::KindSummary) -> Describe| {
        summary.kinds.iter().map(|k| (k.kind.to_string(), f(k))).collect::<Vec<_>>()
    };
    write_describe_table(&dir.join("study_test_mape.csv"), &by_kind(|k| k.test_mape))?;
    write_describe_table(&dir.join("study_train_mape.csv"), &by_kind(|k| k.train_mape))?;
    write_describe_table(&dir.join("study_overfit.csv"), &by_kind(|k| k.overfit))?;
    for k in &summary.kinds {
        let cols: Vec<(String, Describe)> = summary.features.iter().cloned().zip(k.weights.iter().copied()).collect();
        write_describe_table(&dir.join(format!("study_weights_{}.csv", k.kind.as_str().to_lowercase())), &cols)?;
    }

    let path = dir.join("study_simulations.csv");
    let mut w = csv_writer(&path)?;
    let mut h = header(&[
        "simulation",
        "kind",
        "n_trees",
        "max_depth",
        "min_samples_split",
        "min_samples_leaf",
        "test_mape",
        "train_mape",
        "overfit",
    ]);
    h.extend(summary.features.iter().cloned());
    put(&mut w, &path, &h)?;
    for r in &summary.results {
        let hp = |f: fn(&crate::models::Hyperparameters) -> usize| r.hyperparameters.as_ref().map(|h| f(h).to_string()).unwrap_or_default();
        let mut row = vec![
            r.simulation.to_string(),
            r.kind.to_string(),
            hp(|h| h.n_trees),
            hp(|h| h.max_depth),
            hp(|h| h.min_samples_split),
            hp(|h| h.min_samples_leaf),
            format_value(r.test_mape),
            format_value(r.train_mape),
            format_value(r.overfit),
        ];
        row.extend(r.weights.iter().map(|v| format_value(*v)));
        put(&mut w, &path, &row)?;
    }
    finish(w, &path)?;

    let path = dir.join("study_stability.csv");
    let mut w = csv_writer(&path)?;
    put(&mut w, &path, &header(&["kind", "stability_score"]))?;
    for k in &summary.kinds {
        put(&mut w, &path, &[k.kind.to_string(), format_value(k.stability)])?;
    }
    finish(w, &path)
}

pub fn write_composite(path: &Path, scores: &BTreeMap<ModelKind, CompositeScore>) -> Result<()> {
    let mut w = csv_writer(path)?;
    put(&mut w, path, &header(&["kind", "accuracy", "stability", "overfit", "total"]))?;
    for (k, s) in scores {
        put(
            &mut w,
            path,
            &[k.to_string(), format_value(s.accuracy), format_value(s.stability), format_value(s.overfit), format_value(s.total)],
        )?;
    }
    finish(w, path)
}

/// Years down the rows; indicator columns then the target.
pub fn write_features(path: &Path, features: &crate::indicators::FeatureMatrix) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut h = vec!["year".to_string()];
    h.extend(features.codes.iter().map(|c| c.to_string()));
    h.push("target".into());
    put(&mut w, path, &h)?;
    for (k, y) in features.years.iter().enumerate() {
        let mut row = vec![y.to_string()];
        row.extend(features.annual[k].iter().map(|v| format_value(*v)));
        row.push(format_value(features.target[k]));
        put(&mut w, path, &row)?;
    }
    finish(w, path)
}

pub fn write_annual_predictions(path: &Path, years: &[i32], actual: &[f64], predicted: &[f64]) -> Result<()> {
    let mut w = csv_writer(path)?;
    put(&mut w, path, &header(&["year", "actual", "predicted"]))?;
    for k in 0..years.len() {
        put(&mut w, path, &[years[k].to_string(), format_value(actual[k]), format_value(predicted[k])])?;
    }
    finish(w, path)
}

pub fn write_outliers(path: &Path, reports: &[(String, OutlierReport)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    put(
        &mut w,
        path,
        &header(&["indicator", "year", "indicator_value", "prediction", "distance_squared", "p_value", "outlier"]),
    )?;
    for (name, rep) in reports {
        for r in &rep.rows {
            put(
                &mut w,
                path,
                &[
                    name.clone(),
                    r.year.to_string(),
                    format_value(r.indicator),
                    format_value(r.prediction),
                    format_value(r.distance_squared),
                    format_value(r.p_value),
                    r.outlier.to_string(),
                ],
            )?;
        }
    }
    finish(w, path)
}

pub fn write_interannual(path: &Path, c: &VariationComparison) -> Result<()> {
    let mut w = csv_writer(path)?;
    put(&mut w, path, &header(&["year", "residual_pct", "interannual_pct", "ratio"]))?;
    for (year, r) in &c.residuals {
        let v = c.interannual.get(year);
        let ratio = match v {
            Some(v) if *r != 0.0 => format_value(v / r),
            _ => String::new(),
        };
        put(&mut w, path, &[year.to_string(), format_value(*r), v.map(|v| format_value(*v)).unwrap_or_default(), ratio])?;
    }
    finish(w, path)
}

pub fn write_correlation(path: &Path, m: &CorrelationMatrix) -> Result<()> {
    let mut w = csv_writer(path)?;
    put(&mut w, path, &header(&["feature_a", "feature_b", "r"]))?;
    for (a, b, r) in m.long_form() {
        put(&mut w, path, &[a, b, format_value(r)])?;
    }
    finish(w, path)
}

pub fn write_slopes(path: &Path, slopes: &[(String, String, WindowSlope)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    put(&mut w, path, &header(&["start", "end", "slope_per_day", "days_per_percent", "sign", "points"]))?;
    for (start, end, s) in slopes {
        put(
            &mut w,
            path,
            &[
                start.clone(),
                end.clone(),
                format_value(s.slope),
                format_value(s.days_per_percent),
                s.sign.to_string(),
                s.points.to_string(),
            ],
        )?;
    }
    finish(w, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staging_commits_atomically() {
        let root = tempfile::tempdir().unwrap();
        let dest = root.path().join("out");
        fs::create_dir_all(&dest).unwrap();
        fs::write(dest.join("stale.txt"), "old").unwrap();
        let st = Staging::new(&dest).unwrap();
        write_text(&st.path("a/b.txt").unwrap(), "new").unwrap();
        assert!(dest.join("stale.txt").exists());
        st.commit().unwrap();
        assert!(!dest.join("stale.txt").exists());
        assert_eq!(fs::read_to_string(dest.join("a/b.txt")).unwrap(), "new");
    }

    #[test]
    fn dropped_staging_leaves_nothing() {
        let root = tempfile::tempdir().unwrap();
        let dest = root.path().join("out");
        {
            let st = Staging::new(&dest).unwrap();
            write_text(&st.path("x.txt").unwrap(), "partial").unwrap();
        }
        assert!(!dest.exists());
        assert_eq!(fs::read_dir(root.path()).unwrap().count(), 0);
    }

    #[test]
    fn describe_table_layout() {
        let root = tempfile::tempdir().unwrap();
        let p = root.path().join("t.csv");
        let d = Describe::of(&[1.0, 2.0, 3.0]);
        write_describe_table(&p, &[("LS".into(), d)]).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "statistic,LS");
        assert_eq!(lines[1], "count,3.0");
        assert_eq!(lines[6], "50%,2.0");
        assert_eq!(lines.len(), 9);
    }
}
