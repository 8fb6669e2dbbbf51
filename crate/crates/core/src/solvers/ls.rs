use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::FitResult;
use crate::data::{numerical_rank, Dataset};
use crate::error::{Error, Result};

/// Solves `min ‖y − Xβ‖²` by Householder QR, `Rβ = Qᵀy`.
///
/// A diagonal entry of `R` that is negligible against its column norm means
/// that column lies in the span of the previous ones.
pub fn solve_least_squares(design: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let (n, p) = design.shape();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("design has {n} rows, y has {}", y.len())));
    }
    if n < p {
        return Err(Error::RankDeficient { rank: numerical_rank(design), p });
    }
    let qr = design.clone().qr();
    let r = qr.r();
    let scale = n.max(p) as f64 * f64::EPSILON * 10.0;
    for j in 0..p {
        let col_norm = design.column(j).norm();
        if r[(j, j)].abs() <= scale * col_norm || col_norm == 0.0 {
            return Err(Error::RankDeficient { rank: numerical_rank(design), p });
        }
    }
    let mut rhs = y.clone();
    qr.q_tr_mul(&mut rhs);
    let rhs = rhs.rows(0, p).into_owned();
    r.solve_upper_triangular(&rhs)
        .ok_or(Error::RankDeficient { rank: numerical_rank(design), p })
}

/// Ordinary least squares.
pub fn fit_ls(d: &Dataset) -> Result<FitResult> {
    let start = Instant::now();
    let beta = solve_least_squares(d.design(), d.y())?;
    let r = d.y() - d.design() * &beta;
    let gradient = d.design().tr_mul(&r) * -2.0;
    Ok(FitResult {
        objective: r.norm_squared(),
        gradient_norm: gradient.norm(),
        beta: beta.into(),
        iterations: 1,
        converged: true,
        wall_time: start.elapsed(),
    })
}
