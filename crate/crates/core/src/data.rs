//! Observations, coefficient vectors, residuals and the residual scale `c*`.

use std::ops::Index;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A regression sample: design rows `wᵢ` and responses `yᵢ`.
///
/// The usual constructor [`Dataset::new`] takes the carriers `x` and prepends
/// the intercept column, so `wᵢ = (1, xᵢᵀ)ᵀ`. [`Dataset::from_design`] accepts
/// an arbitrary design matrix; it exists for transformed designs such as
/// `Aᵀwᵢ`, which no longer carry a literal column of ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    design: DMatrix<f64>,
    y: DVector<f64>,
}

impl Dataset {
    /// Builds a dataset from an `n × (p−1)` carrier matrix and `n` responses.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "x has {} rows but y has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        let n = y.len();
        let mut design = DMatrix::from_element(n, x.ncols() + 1, 1.0);
        design.columns_mut(1, x.ncols()).copy_from(&x);
        Self::from_design(design, y)
    }

    /// Builds a dataset from row-major carrier rows.
    pub fn from_rows(x_rows: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        let q = x_rows.first().map_or(0, Vec::len);
        if let Some(i) = x_rows.iter().position(|r| r.len() != q) {
            return Err(Error::DimensionMismatch(format!(
                "carrier row {i} has {} entries, expected {q}",
                x_rows[i].len()
            )));
        }
        let x = DMatrix::from_fn(x_rows.len(), q, |i, j| x_rows[i][j]);
        Self::new(x, DVector::from_column_slice(y))
    }

    /// Builds a dataset from a full `n × p` design matrix (no intercept added).
    pub fn from_design(design: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if design.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "design has {} rows but y has {} entries",
                design.nrows(),
                y.len()
            )));
        }
        if y.is_empty() {
            return Err(Error::InvalidInput("dataset has no observations".into()));
        }
        if design.ncols() == 0 {
            return Err(Error::InvalidInput("design has no columns".into()));
        }
        if design.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset contains NaN or infinite entries".into()));
        }
        Ok(Self { design, y })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.design.ncols()
    }

    /// The `n × p` design matrix whose rows are `wᵢᵀ`.
    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// Same design, new responses.
    pub fn with_response(&self, y: DVector<f64>) -> Result<Self> {
        Self::from_design(self.design.clone(), y)
    }

    /// Keeps the observations at `rows`, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let design = self.design.select_rows(rows);
        let y = self.y.select_rows(rows);
        Self::from_design(design, y)
    }
}

/// A coefficient vector `β`; entry 0 is the intercept when the design has one.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients(DVector<f64>);

impl Coefficients {
    pub fn zeros(p: usize) -> Self {
        Self(DVector::zeros(p))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn intercept(&self) -> f64 {
        self.0[0]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &Coefficients) -> f64 {
        (&self.0 - &other.0).norm()
    }
}

impl From<DVector<f64>> for Coefficients {
    fn from(v: DVector<f64>) -> Self {
        Self(v)
    }
}

impl From<Vec<f64>> for Coefficients {
    fn from(v: Vec<f64>) -> Self {
        Self(DVector::from_vec(v))
    }
}

impl Index<usize> for Coefficients {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// How the scale constant `c*` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScaleMode {
    /// `c* = Med{yᵢ²}`.
    #[default]
    MedianYSquared,
    /// `c* = Med{rᵢ²(β⁰)}` at an initial fit `β⁰`. Invariant under
    /// `y → y + Xb` when the initializer is regression equivariant.
    MedianInitialResidualSquared,
}

/// `rᵢ(β) = yᵢ − wᵢᵀβ`.
pub fn residuals(d: &Dataset, b: &Coefficients) -> Result<DVector<f64>> {
    check_dims(d, b)?;
    Ok(d.y() - d.design() * b.as_vector())
}

pub(crate) fn check_dims(d: &Dataset, b: &Coefficients) -> Result<()> {
    if b.len() != d.p() {
        return Err(Error::DimensionMismatch(format!(
            "coefficient vector has length {} but the design has p = {}",
            b.len(),
            d.p()
        )));
    }
    Ok(())
}

/// Median with the even-length convention of averaging the two middle
/// order statistics. Panics on an empty slice.
pub(crate) fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 0 {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    }
}

/// Resolves `c*` for `d`. The residual mode needs the initial fit.
pub fn compute_cstar(d: &Dataset, mode: ScaleMode, initial: Option<&Coefficients>) -> Result<f64> {
    let squares: Vec<f64> = match mode {
        ScaleMode::MedianYSquared => d.y().iter().map(|v| v * v).collect(),
        ScaleMode::MedianInitialResidualSquared => {
            let b = initial.ok_or_else(|| {
                Error::InvalidInput("residual-based scale requires an initial fit".into())
            })?;
            residuals(d, b)?.iter().map(|r| r * r).collect()
        }
    };
    let cstar = median(&squares);
    if !cstar.is_finite() {
        return Err(Error::NonFinite(format!("c* = {cstar}")));
    }
    if cstar <= 0.0 {
        return Err(Error::DegenerateScale(cstar));
    }
    Ok(cstar)
}

/// The exploratory floor `max(c*, 10⁻¹²·(1 + max yᵢ²))` used when the caller
/// opts out of the [`Error::DegenerateScale`] refusal.
pub fn floored_cstar(d: &Dataset, cstar: f64) -> f64 {
    let max_y2 = d.y().iter().map(|v| v * v).fold(0.0, f64::max);
    cstar.max(1e-12 * (1.0 + max_y2))
}

/// Outcome of the rank screen in [`check_general_position_hint`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralPositionHint {
    pub passes: bool,
    pub rank: usize,
    pub diagnostic: String,
}

/// Numerical rank of `m` from its singular values.
pub(crate) fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let tol = smax * f64::EPSILON * m.nrows().max(m.ncols()) as f64;
    sv.iter().filter(|&&s| s > tol).count()
}

/// Necessary-condition screen for general position: the full design must have
/// numerical rank `p`. Individual `p`-subsets are not examined.
pub fn check_general_position_hint(d: &Dataset) -> GeneralPositionHint {
    let p = d.p();
    let rank = numerical_rank(d.design());
    let passes = rank == p;
    let diagnostic = if passes {
        format!("design has full column rank {p}")
    } else if d.n() < p {
        format!("only {} observations for p = {p} coefficients (rank {rank})", d.n())
    } else {
        format!("design matrix has numerical rank {rank} < p = {p}; some carrier is collinear")
    };
    GeneralPositionHint { passes, rank, diagnostic }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[(f64, f64)]) -> Dataset {
        let x: Vec<Vec<f64>> = points.iter().map(|&(x, _)| vec![x]).collect();
        let y: Vec<f64> = points.iter().map(|&(_, y)| y).collect();
        Dataset::from_rows(&x, &y).unwrap()
    }

    fn intercept_only(y: &[f64]) -> Dataset {
        Dataset::new(DMatrix::zeros(y.len(), 0), DVector::from_column_slice(y)).unwrap()
    }

    #[test]
    fn residuals_examples() {
        let d = line(&[(0.0, 0.0), (1.0, 1.0)]);
        let r = residuals(&d, &vec![0.0, 1.0].into()).unwrap();
        assert_eq!(r.as_slice(), &[0.0, 0.0]);

        let r = residuals(&d, &Coefficients::zeros(2)).unwrap();
        assert_eq!(r, *d.y());

        let d = line(&[(2.0, 5.0)]);
        let r = residuals(&d, &vec![1.0, 1.0].into()).unwrap();
        assert_eq!(r.as_slice(), &[2.0]);
    }

    #[test]
    fn residuals_dimension_mismatch() {
        let d = line(&[(0.0, 0.0), (1.0, 1.0)]);
        let err = residuals(&d, &vec![1.0].into()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn dataset_rejects_bad_input() {
        assert!(matches!(
            Dataset::from_rows(&[vec![1.0]], &[f64::NAN]),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            Dataset::from_rows(&[vec![1.0], vec![2.0]], &[1.0]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(Dataset::from_rows(&[], &[]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn cstar_examples() {
        let m = ScaleMode::MedianYSquared;
        assert_eq!(compute_cstar(&intercept_only(&[1.0, 2.0, 3.0]), m, None).unwrap(), 4.0);
        assert_eq!(compute_cstar(&intercept_only(&[1.0, 2.0, 3.0, 4.0]), m, None).unwrap(), 6.5);
        assert_eq!(
            compute_cstar(&intercept_only(&[0.0, 0.0, 0.0]), m, None),
            Err(Error::DegenerateScale(0.0))
        );
    }

    #[test]
    fn cstar_residual_mode() {
        let d = line(&[(0.0, 1.0), (1.0, 3.0), (2.0, 2.0)]);
        let mode = ScaleMode::MedianInitialResidualSquared;
        assert!(matches!(compute_cstar(&d, mode, None), Err(Error::InvalidInput(_))));
        // residuals at β = (1, 1): 0, 1, −1
        let c = compute_cstar(&d, mode, Some(&vec![1.0, 1.0].into())).unwrap();
        assert_eq!(c, 1.0);
    }

    #[test]
    fn floor_is_positive() {
        let d = intercept_only(&[0.0, 0.0, 3.0]);
        assert!((floored_cstar(&d, 0.0) - 1e-11).abs() < 1e-24);
    }

    #[test]
    fn general_position_examples() {
        let d = line(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]);
        let h = check_general_position_hint(&d);
        assert!(!h.passes);
        assert_eq!(h.rank, 1);

        assert!(check_general_position_hint(&line(&[(1.0, 0.0), (2.0, 5.0), (3.0, 1.0)])).passes);

        // duplicated row, n = p = 2
        let d = line(&[(1.5, 2.0), (1.5, 2.0)]);
        assert!(!check_general_position_hint(&d).passes);
    }

    #[test]
    fn median_convention() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median(&[7.0]), 7.0);
    }
}
