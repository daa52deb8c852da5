use nalgebra::{DMatrix, SymmetricEigen};

use super::{euclidean_distances, Configuration};
use crate::error::{Error, Result};

/// sqrt(Σ_{i≠j} (d_ij − ‖x_i − x_j‖)²), both ordered pairs counted.
pub fn stress(points: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    let realized = euclidean_distances(points);
    let mut sum = 0.0;
    for i in 0..d.nrows() {
        for j in 0..d.ncols() {
            if i != j {
                let gap = d[(i, j)] - realized[(i, j)];
                sum += gap * gap;
            }
        }
    }
    sum.sqrt()
}

fn check_square(d: &DMatrix<f64>, dim: usize) -> Result<()> {
    if d.nrows() != d.ncols() {
        return Err(Error::ShapeMismatch(format!("{}x{} distance matrix", d.nrows(), d.ncols())));
    }
    if dim > d.nrows() {
        return Err(Error::DimensionTooLarge { dim, n: d.nrows() });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalMds {
    pub points: DMatrix<f64>,
    /// Eigenvalues of the double-centred Gram matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// Σ|λ| over negative eigenvalues, which no Euclidean configuration can carry.
    pub clamped_mass: f64,
}

impl ClassicalMds {
    pub fn configuration(&self, labels: Vec<String>) -> Result<Configuration> {
        Configuration::new(labels, self.points.clone())
    }
}

/// Torgerson scaling: the top `dim` eigenpairs of −½ J D⁽²⁾ J.
pub fn classical_mds(d: &DMatrix<f64>, dim: usize) -> Result<ClassicalMds> {
    check_square(d, dim)?;
    let n = d.nrows();
    if n == 0 {
        return Ok(ClassicalMds {
            points: DMatrix::zeros(0, dim),
            eigenvalues: Vec::new(),
            clamped_mass: 0.0,
        });
    }
    let sq = d.map(|v| v * v);
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).mean()).collect();
    let col_means: Vec<f64> = (0..n).map(|j| sq.column(j).mean()).collect();
    let grand = sq.mean();
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - col_means[j] + grand));
    // symmetrise against rounding before the eigen-solver
    let b = (&b + b.transpose()) * 0.5;

    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let clamped_mass = eigenvalues.iter().filter(|&&l| l < 0.0).map(|l| -l).sum();

    let mut points = DMatrix::zeros(n, dim);
    for (k, &idx) in order.iter().take(dim).enumerate() {
        let scale = eig.eigenvalues[idx].max(0.0).sqrt();
        let vec = eig.eigenvectors.column(idx);
        // fix the sign so the output does not depend on solver conventions
        let pivot = vec.iter().copied().fold(0.0, |acc: f64, v| if v.abs() > acc.abs() { v } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            points[(i, k)] = sign * vec[i] * scale;
        }
    }
    Ok(ClassicalMds {
        points,
        eigenvalues,
        clamped_mass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmacofOptions {
    pub max_iter: usize,
    /// Stop once the relative stress decrease falls below this.
    pub tol: f64,
}

impl Default for SmacofOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmacofResult {
    pub points: DMatrix<f64>,
    /// Stress of the initial configuration followed by one entry per iteration.
    pub stress_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl SmacofResult {
    pub fn final_stress(&self) -> f64 {
        *self.stress_trace.last().expect("trace holds the initial stress")
    }
}

/// Stress majorization with unit weights, started from classical MDS.
pub fn smacof(d: &DMatrix<f64>, dim: usize, options: SmacofOptions) -> Result<SmacofResult> {
    let init = classical_mds(d, dim)?.points;
    smacof_from(d, init, options)
}

/// Stress majorization from a given starting configuration.
pub fn smacof_from(d: &DMatrix<f64>, init: DMatrix<f64>, options: SmacofOptions) -> Result<SmacofResult> {
    check_square(d, init.ncols())?;
    let n = d.nrows();
    let mut x = init;
    let mut trace = vec![stress(&x, d)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iter {
        let current = *trace.last().unwrap();
        if current == 0.0 {
            converged = true;
            break;
        }
        let realized = euclidean_distances(&x);
        let mut b = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j && realized[(i, j)] > 0.0 {
                    let v = -d[(i, j)] / realized[(i, j)];
                    b[(i, j)] = v;
                    diag -= v;
                }
            }
            b[(i, i)] = diag;
        }
        let candidate = (b * &x) / n as f64;
        let next = stress(&candidate, d);
        // exact majorization never increases stress; a rise is rounding, so stop
        if next > current {
            converged = true;
            break;
        }
        x = candidate;
        iterations += 1;
        trace.push(next);
        if (current - next) / current < options.tol {
            converged = true;
            break;
        }
    }
    Ok(SmacofResult {
        points: x,
        stress_trace: trace,
        iterations,
        converged,
    })
}
