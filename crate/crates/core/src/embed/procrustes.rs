use nalgebra::{DMatrix, RowDVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Procrustes {
    /// `source` after the optimal translation and orthogonal map onto `target`.
    pub aligned: DMatrix<f64>,
    /// ‖aligned − target‖_F / ‖target − mean(target)‖_F.
    pub relative_error: f64,
}

fn centered(m: &DMatrix<f64>) -> (DMatrix<f64>, RowDVector<f64>) {
    let mean = m.row_mean();
    let mut c = m.clone();
    for mut row in c.row_iter_mut() {
        row -= &mean;
    }
    (c, mean)
}

/// Align `source` to `target` by translation and an orthogonal transform
/// (rotations and reflections).
pub fn procrustes(source: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<Procrustes> {
    if source.shape() != target.shape() {
        return Err(Error::ShapeMismatch(format!(
            "cannot align {:?} points onto {:?}",
            source.shape(),
            target.shape()
        )));
    }
    let (xs, _) = centered(source);
    let (ys, y_mean) = centered(target);
    let svd = (xs.transpose() * &ys).svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let mut aligned = xs * (u * v_t);
    for mut row in aligned.row_iter_mut() {
        row += &y_mean;
    }
    let scale = ys.norm();
    let err = (&aligned - target).norm();
    let relative_error = if scale > 0.0 { err / scale } else { err };
    Ok(Procrustes {
        aligned,
        relative_error,
    })
}
