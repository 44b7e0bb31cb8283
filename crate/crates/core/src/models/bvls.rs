//! Bounded-variable least squares with an unconstrained intercept.
//!
//! Columns are centered so the intercept drops out, nonpositive columns are
//! negated so every bounded coefficient is nonnegative, and the remaining
//! problem is solved by an active-set iteration: start from the projected
//! unconstrained solution, move variables between the free and bound sets
//! on KKT sign checks, and solve each free-set subproblem by SVD. If the
//! iteration has not converged after `10 p` outer steps it falls back to
//! projected gradient descent.

use super::{LinearFit, Matrix, SignBound};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Interval {
    Bounded(SignBound),
    Free,
}

impl Interval {
    fn flip(self) -> f64 {
        match self {
            Interval::Bounded(SignBound::NonPositive) => -1.0,
            _ => 1.0,
        }
    }
}

pub fn fit_bvls(x: &Matrix, y: &[f64], bounds: &[SignBound]) -> Result<LinearFit> {
    let intervals: Vec<Interval> = bounds.iter().map(|&b| Interval::Bounded(b)).collect();
    fit_intervals(x, y, &intervals)
}

/// Ordinary least squares through the same solver, every bound removed.
pub fn fit_unbounded(x: &Matrix, y: &[f64]) -> Result<LinearFit> {
    fit_intervals(x, y, &vec![Interval::Free; x.ncols()])
}

fn fit_intervals(x: &Matrix, y: &[f64], intervals: &[Interval]) -> Result<LinearFit> {
    let (n, p) = (x.nrows(), x.ncols());
    if n == 0 || p == 0 {
        return Err(Error::EmptyInput);
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            what: "target length",
            expected: n,
            found: y.len(),
        });
    }
    if intervals.len() != p {
        return Err(Error::DimensionMismatch {
            what: "bounds",
            expected: p,
            found: intervals.len(),
        });
    }
    if let Some(v) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite target {v}")));
    }

    let x_mean: Vec<f64> = (0..p).map(|j| crate::stats::mean(&x.column(j))).collect();
    let y_mean = crate::stats::mean(y);
    let a = DMatrix::from_fn(n, p, |i, j| (x.get(i, j) - x_mean[j]) * intervals[j].flip());
    let b = DVector::from_fn(n, |i, _| y[i] - y_mean);
    let bounded: Vec<bool> = intervals.iter().map(|i| matches!(i, Interval::Bounded(_))).collect();

    let solver = ActiveSet::new(&a, &b, &bounded);
    let z = solver.solve();

    let coefficients: Vec<f64> = (0..p).map(|j| z[j] * intervals[j].flip()).collect();
    let mut intercept = y_mean;
    for j in 0..p {
        intercept -= x_mean[j] * coefficients[j];
    }
    Ok(LinearFit {
        coefficients,
        intercept,
        degenerate: solver.rank_deficient,
    })
}

struct ActiveSet<'a> {
    a: &'a DMatrix<f64>,
    b: &'a DVector<f64>,
    bounded: &'a [bool],
    kkt_tol: f64,
    rank_deficient: bool,
}

impl<'a> ActiveSet<'a> {
    fn new(a: &'a DMatrix<f64>, b: &'a DVector<f64>, bounded: &'a [bool]) -> Self {
        let sv = a.clone().singular_values();
        let smax = sv.max();
        let rank_tol = a.nrows().max(a.ncols()) as f64 * f64::EPSILON * smax;
        let rank = sv.iter().filter(|&&s| s > rank_tol).count();
        let scale = a.norm() * b.norm();
        Self {
            a,
            b,
            bounded,
            kkt_tol: 1e-12 * scale.max(f64::MIN_POSITIVE),
            rank_deficient: rank < a.ncols(),
        }
    }

    /// Least squares restricted to `free`, zero elsewhere.
    fn subproblem(&self, free: &[bool]) -> DVector<f64> {
        let p = self.a.ncols();
        let cols: Vec<usize> = (0..p).filter(|&j| free[j]).collect();
        let mut z = DVector::zeros(p);
        if cols.is_empty() {
            return z;
        }
        let sub = self.a.select_columns(&cols);
        let svd = sub.svd(true, true);
        let smax = svd.singular_values.max();
        let eps = self.a.nrows().max(cols.len()) as f64 * f64::EPSILON * smax;
        let sol = svd.solve(self.b, eps.max(f64::MIN_POSITIVE)).expect("SVD computed with U and V");
        for (k, &j) in cols.iter().enumerate() {
            z[j] = sol[k];
        }
        z
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.a.transpose() * (self.b - self.a * x)
    }

    fn objective(&self, x: &DVector<f64>) -> f64 {
        (self.b - self.a * x).norm_squared()
    }

    /// Move from feasible `x` towards the subproblem solution on `free`,
    /// binding variables that would leave their bound. Returns false if the
    /// entering variable `entering` is immediately rejected.
    fn inner(&self, x: &mut DVector<f64>, free: &mut [bool], entering: Option<usize>) -> bool {
        let p = x.len();
        let mut first = true;
        loop {
            let z = self.subproblem(free);
            if first {
                if let Some(t) = entering {
                    if z[t] <= 0.0 {
                        free[t] = false;
                        return false;
                    }
                }
                first = false;
            }
            let blocking: Vec<usize> = (0..p).filter(|&j| free[j] && self.bounded[j] && z[j] <= 0.0).collect();
            if blocking.is_empty() {
                *x = z;
                return true;
            }
            let mut alpha = 1.0f64;
            let mut limiting = blocking[0];
            for &j in &blocking {
                let denom = x[j] - z[j];
                let ratio = if denom > 0.0 { x[j] / denom } else { 0.0 };
                if ratio < alpha {
                    alpha = ratio;
                    limiting = j;
                }
            }
            for j in 0..p {
                if free[j] {
                    x[j] += alpha * (z[j] - x[j]);
                }
            }
            x[limiting] = 0.0;
            free[limiting] = false;
            for j in 0..p {
                if free[j] && self.bounded[j] && x[j] <= 0.0 {
                    x[j] = 0.0;
                    free[j] = false;
                }
            }
        }
    }

    fn solve(&self) -> DVector<f64> {
        let p = self.a.ncols();
        let all = vec![true; p];
        let mut x = self.subproblem(&all);
        for j in 0..p {
            if self.bounded[j] && x[j] < 0.0 {
                x[j] = 0.0;
            }
        }
        let mut free: Vec<bool> = (0..p).map(|j| !self.bounded[j] || x[j] > 0.0).collect();
        self.inner(&mut x, &mut free, None);

        let mut converged = false;
        for _ in 0..(10 * p).max(10) {
            let w = self.gradient(&x);
            let entering = (0..p)
                .filter(|&j| !free[j] && w[j] > self.kkt_tol)
                .max_by(|&i, &k| w[i].total_cmp(&w[k]).then(k.cmp(&i)));
            let Some(t) = entering else {
                converged = true;
                break;
            };
            free[t] = true;
            if !self.inner(&mut x, &mut free, Some(t)) {
                converged = true;
                break;
            }
        }
        if !converged {
            x = self.projected_gradient(x);
        }
        for j in 0..p {
            if self.bounded[j] && x[j] < 0.0 {
                x[j] = 0.0;
            }
        }
        x
    }

    fn projected_gradient(&self, start: DVector<f64>) -> DVector<f64> {
        let smax = self.a.clone().singular_values().max();
        if smax == 0.0 {
            return start;
        }
        let step = 1.0 / (smax * smax);
        let mut x = start;
        let mut best = self.objective(&x);
        for k in 0..100_000usize {
            let g = self.gradient(&x);
            // Diminishing step, never above 1/L.
            let t = step * (1.0 / (1.0 + k as f64 * 1e-4)).max(0.5);
            let mut next = &x + g * t;
            for j in 0..x.len() {
                if self.bounded[j] && next[j] < 0.0 {
                    next[j] = 0.0;
                }
            }
            let obj = self.objective(&next);
            let moved = (&next - &x).norm();
            x = next;
            if obj <= best {
                best = obj;
            }
            if moved <= 1e-15 * x.norm().max(1.0) {
                break;
            }
        }
        x
    }
}
