//! Objective `O(β) = Σ w(rᵢ²/c*)·rᵢ²` with hand-coded derivatives.
//!
//! With `uᵢ = rᵢ²/c*`:
//!
//! ```text
//! ∇O(β)  = Σ −2·rᵢ·(w(uᵢ) + uᵢ·w′(uᵢ))·wᵢ
//! ∇²O(β) = Σ 2·γᵢ·wᵢwᵢᵀ,   γᵢ = 5uᵢw′(uᵢ) + w(uᵢ) + 2uᵢ²w″(uᵢ)
//! ```
//!
//! The Hessian carries the prefactor `+2`; direct differentiation of the
//! gradient gives it, and it reduces to the least-squares Hessian `2XᵀX`
//! when every observation sits in the unit-weight region.

use nalgebra::{DMatrix, DVector};

use crate::data::{check_dims, Coefficients, Dataset};
use crate::error::{Error, Result};
use crate::weight::WeightParams;

/// A dataset, weight parameters and a scale constant frozen for one run.
#[derive(Debug, Clone, Copy)]
pub struct ObjectiveContext<'a> {
    dataset: &'a Dataset,
    params: WeightParams,
    cstar: f64,
}

impl<'a> ObjectiveContext<'a> {
    pub fn new(dataset: &'a Dataset, params: WeightParams, cstar: f64) -> Result<Self> {
        if !cstar.is_finite() {
            return Err(Error::NonFinite(format!("c* = {cstar}")));
        }
        if cstar <= 0.0 {
            return Err(Error::DegenerateScale(cstar));
        }
        Ok(Self { dataset, params, cstar })
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.dataset
    }

    pub fn params(&self) -> WeightParams {
        self.params
    }

    pub fn cstar(&self) -> f64 {
        self.cstar
    }

    fn residuals(&self, b: &Coefficients) -> Result<DVector<f64>> {
        check_dims(self.dataset, b)?;
        Ok(self.dataset.y() - self.dataset.design() * b.as_vector())
    }

    pub fn value(&self, b: &Coefficients) -> Result<f64> {
        let r = self.residuals(b)?;
        Ok(r.iter().map(|&ri| self.params.psi(self.cstar, ri)).sum())
    }

    pub fn gradient(&self, b: &Coefficients) -> Result<DVector<f64>> {
        let r = self.residuals(b)?;
        let coef = r.map(|ri| {
            let u = ri * ri / self.cstar;
            -2.0 * ri * (self.params.weight(u) + u * self.params.weight_d1(u))
        });
        Ok(self.dataset.design().tr_mul(&coef))
    }

    /// `(O(β), ∇O(β))` from one residual pass.
    pub fn value_and_gradient(&self, b: &Coefficients) -> Result<(f64, DVector<f64>)> {
        let r = self.residuals(b)?;
        let mut value = 0.0;
        let coef = r.map(|ri| {
            let r2 = ri * ri;
            let u = r2 / self.cstar;
            let w = self.params.weight(u);
            value += w * r2;
            -2.0 * ri * (w + u * self.params.weight_d1(u))
        });
        Ok((value, self.dataset.design().tr_mul(&coef)))
    }

    /// The diagonal factors `γᵢ`.
    pub fn gammas(&self, b: &Coefficients) -> Result<DVector<f64>> {
        let r = self.residuals(b)?;
        Ok(r.map(|ri| {
            let u = ri * ri / self.cstar;
            let p = &self.params;
            5.0 * u * p.weight_d1(u) + p.weight(u) + 2.0 * u * u * p.weight_d2(u)
        }))
    }

    /// `XᵀDX` with `Dᵢᵢ = 2γᵢ`.
    pub fn hessian(&self, b: &Coefficients) -> Result<DMatrix<f64>> {
        let g = self.gammas(b)?;
        let x = self.dataset.design();
        let mut scaled = x.clone();
        for (mut row, gi) in scaled.row_iter_mut().zip(g.iter()) {
            row *= 2.0 * gi;
        }
        let mut h = x.tr_mul(&scaled);
        // symmetrize away rounding asymmetry
        let ht = h.transpose();
        h += ht;
        h *= 0.5;
        Ok(h)
    }

    /// `vᵀ∇²O(β)v` without forming the matrix.
    pub fn curvature(&self, b: &Coefficients, v: &DVector<f64>) -> Result<f64> {
        let g = self.gammas(b)?;
        let xv = self.dataset.design() * v;
        Ok(xv.iter().zip(g.iter()).map(|(a, gi)| 2.0 * gi * a * a).sum())
    }

    /// True when every `rᵢ²/c*` is at most `c`, where `O` coincides with the
    /// ordinary residual sum of squares.
    pub fn all_in_unit_region(&self, b: &Coefficients) -> Result<bool> {
        let r = self.residuals(b)?;
        Ok(r.iter().all(|ri| ri * ri / self.cstar <= self.params.c()))
    }

    /// Smallest relative distance `|rᵢ² − c·c*| / (c·c*)` to the branch boundary.
    pub fn boundary_distance(&self, b: &Coefficients) -> Result<f64> {
        let r = self.residuals(b)?;
        let edge = self.params.c() * self.cstar;
        Ok(r.iter().map(|ri| (ri * ri - edge).abs() / edge).fold(f64::INFINITY, f64::min))
    }
}

/// Default central-difference step for coordinate `βⱼ`.
pub fn fd_step(bj: f64) -> f64 {
    1e-6 * (1.0 + bj.abs())
}

/// Central finite-difference gradient of [`ObjectiveContext::value`].
pub fn fd_gradient(ctx: &ObjectiveContext<'_>, b: &Coefficients) -> Result<DVector<f64>> {
    let base = b.as_vector();
    let mut out = DVector::zeros(base.len());
    for j in 0..base.len() {
        let h = fd_step(base[j]);
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[j] += h;
        minus[j] -= h;
        let fp = ctx.value(&plus.into())?;
        let fm = ctx.value(&minus.into())?;
        out[j] = (fp - fm) / (2.0 * h);
    }
    Ok(out)
}

/// Central finite differences of [`ObjectiveContext::gradient`], symmetrized.
pub fn fd_hessian(ctx: &ObjectiveContext<'_>, b: &Coefficients) -> Result<DMatrix<f64>> {
    let base = b.as_vector();
    let p = base.len();
    let mut out = DMatrix::zeros(p, p);
    for j in 0..p {
        let h = fd_step(base[j]);
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[j] += h;
        minus[j] -= h;
        let gp = ctx.gradient(&plus.into())?;
        let gm = ctx.gradient(&minus.into())?;
        out.set_column(j, &((gp - gm) / (2.0 * h)));
    }
    let t = out.transpose();
    Ok((out + t) * 0.5)
}
