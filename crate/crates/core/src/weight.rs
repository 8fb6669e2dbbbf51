//! The exponential down-weighting function and its derivatives.
//!
//! ```text
//! w(x) = 1                                          |x| ≤ c
//! w(x) = (e^{−k(1−c/|x|)²} − e^{−k}) / (1 − e^{−k})  |x| > c
//! ```
//!
//! In the regression objective `w` is applied to `u = r²/c*`, and the
//! per-observation contribution is the penalized square `ψ(r) = w(r²/c*)·r²`,
//! which is bounded and tends to `2ck·c*/(eᵏ − 1)` as `|r| → ∞`.
//!
//! All evaluations are in double precision. The upper branch is computed as
//! `e^{−k}·expm1(k·t(2−t)) / −expm1(−k)` with `t = c/|x|`, which is the same
//! quantity without the cancellation in `e^{−k(1−t)²} − e^{−k}` for large `|x|`.

use crate::error::{Error, Result};

/// Tuning constants of the weight function: steepness `k` and cutoff `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParams {
    k: f64,
    c: f64,
}

impl Default for WeightParams {
    fn default() -> Self {
        Self { k: 5.0, c: 100.0 }
    }
}

impl WeightParams {
    pub fn new(k: f64, c: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidInput(format!("steepness k must be positive, got {k}")));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidInput(format!("cutoff c must be positive, got {c}")));
        }
        Ok(Self { k, c })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Soft range checks: `k` is meant to lie in `[1, 10]` and `c` above 1.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(1.0..=10.0).contains(&self.k) {
            out.push(format!("steepness k = {} is outside the usual range [1, 10]", self.k));
        }
        if self.c <= 1.0 {
            out.push(format!("cutoff c = {} is not above 1", self.c));
        }
        out
    }

    /// `α* = −2kc/(1 − e^{−k})`.
    pub fn alpha_star(&self) -> f64 {
        2.0 * self.k * self.c / (-self.k).exp_m1()
    }

    /// `w(x)`, in `(0, 1]` and even in `x`.
    pub fn weight(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax <= self.c {
            return 1.0;
        }
        let t = self.c / ax;
        (-self.k).exp() * (self.k * t * (2.0 - t)).exp_m1() / -(-self.k).exp_m1()
    }

    /// `w′(x)`; zero on `|x| ≤ c` and continuous at the cutoff.
    pub fn weight_d1(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax <= self.c {
            return 0.0;
        }
        let s = 1.0 - self.c / ax;
        self.alpha_star() * (-self.k * s * s).exp() * s * x.signum() / (x * x)
    }

    /// `w″(x)`; zero on `|x| ≤ c`, including `x = ±c` where the right-hand
    /// limit is `α*/c³` and the second derivative jumps.
    pub fn weight_d2(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax <= self.c {
            return 0.0;
        }
        let s = 1.0 - self.c / ax;
        let bracket = -2.0 * self.k * self.c * s * s / ax - (2.0 - 3.0 * self.c / ax);
        self.alpha_star() * (-self.k * s * s).exp() * bracket / (ax * ax * ax)
    }

    /// `ψ(r) = w(r²/c*)·r²`.
    pub fn psi(&self, cstar: f64, r: f64) -> f64 {
        let r2 = r * r;
        self.weight(r2 / cstar) * r2
    }

    /// `lim_{|r|→∞} ψ(r) = 2ck·c*/(eᵏ − 1)`.
    pub fn tail_constant(&self, cstar: f64) -> f64 {
        2.0 * self.c * self.k * cstar / self.k.exp_m1()
    }
}
