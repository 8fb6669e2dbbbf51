use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::{Coefficients, Dataset};
use crate::error::{Error, Result};

/// How clean observations are drawn and what replaces the contaminated ones.
#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    /// `zᵢ = (xᵢᵀ, yᵢ)ᵀ ~ N(0, Σ)` with unit variances and common correlation
    /// `rho`; `m` rows become `point` (length `p`, last entry is `y`).
    JointNormalReplace { point: Vec<f64> },
    /// `xᵢ ~ N(0, I)`, `yᵢ = (1, xᵢᵀ)β₀ + eᵢ`, `eᵢ ~ N(0, 1)`; `m` rows become `point`.
    FixedBeta { beta0: Vec<f64>, point: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub n: usize,
    pub p: usize,
    /// Contamination fraction in `[0, 0.5)`.
    pub epsilon: f64,
    pub rho: f64,
    pub replications: usize,
    pub scheme: Scheme,
    pub seed: u64,
}

impl SimulationSpec {
    /// Correlated normal data, contaminated by `(3, …, 3, −3)`.
    pub fn joint_normal(n: usize, p: usize, epsilon: f64, replications: usize, seed: u64) -> Self {
        let mut point = vec![3.0; p];
        point[p - 1] = -3.0;
        Self { n, p, epsilon, rho: 0.9, replications, scheme: Scheme::JointNormalReplace { point }, seed }
    }

    /// Regression data around `beta0`, contaminated by `(3.5, …, 3.5)`.
    pub fn fixed_beta(n: usize, beta0: Vec<f64>, epsilon: f64, replications: usize, seed: u64) -> Self {
        let p = beta0.len();
        Self {
            n,
            p,
            epsilon,
            rho: 0.0,
            replications,
            scheme: Scheme::FixedBeta { beta0, point: vec![3.5; p] },
            seed,
        }
    }

    /// `m = ⌈nε⌉`, with a little slack so `0.3·100` does not round up to 31.
    pub fn contaminated_count(&self) -> usize {
        ((self.n as f64 * self.epsilon) - 1e-9).ceil().max(0.0) as usize
    }

    /// The parameter the fits are scored against.
    pub fn beta0(&self) -> Coefficients {
        match &self.scheme {
            Scheme::JointNormalReplace { .. } => Coefficients::zeros(self.p),
            Scheme::FixedBeta { beta0, .. } => beta0.clone().into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.p == 0 || self.n <= self.p {
            return bad(format!("need n > p ≥ 1, got n = {}, p = {}", self.n, self.p));
        }
        if !(0.0..0.5).contains(&self.epsilon) {
            return bad(format!("contamination fraction must lie in [0, 0.5), got {}", self.epsilon));
        }
        if self.replications == 0 {
            return bad("at least one replication is required".into());
        }
        let point = match &self.scheme {
            Scheme::JointNormalReplace { point } => {
                let lower = if self.p > 1 { -1.0 / (self.p as f64 - 1.0) } else { f64::NEG_INFINITY };
                if !(self.rho > lower && self.rho < 1.0) {
                    return bad(format!(
                        "correlation {} gives a singular covariance for p = {}",
                        self.rho, self.p
                    ));
                }
                point
            }
            Scheme::FixedBeta { beta0, point } => {
                if beta0.len() != self.p || beta0.iter().any(|v| !v.is_finite()) {
                    return bad(format!("beta0 must have {} finite entries", self.p));
                }
                point
            }
        };
        if point.len() != self.p || point.iter().any(|v| !v.is_finite()) {
            return bad(format!("replacement point must have {} finite entries", self.p));
        }
        Ok(())
    }

    /// Seed of replicate `rep`; distinct study seeds give disjoint streams.
    pub fn replicate_seed(&self, rep: usize) -> u64 {
        splitmix64(self.seed ^ splitmix64(rep as u64))
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Symmetric square root of the equicorrelation matrix with unit diagonal.
fn correlation_sqrt(p: usize, rho: f64) -> DMatrix<f64> {
    let sigma = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { rho });
    let eig = SymmetricEigen::new(sigma);
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Replicate `rep` of the study: clean draws with `⌈nε⌉` rows replaced.
pub fn gen_contaminated(spec: &SimulationSpec, rep: usize) -> Result<Dataset> {
    spec.validate()?;
    let (n, p) = (spec.n, spec.p);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.replicate_seed(rep));
    let mut normal = |rows: usize, cols: usize| DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));

    // rows are (x₁ … x_{p−1}, y)
    let (mut z, point) = match &spec.scheme {
        Scheme::JointNormalReplace { point } => {
            let root = correlation_sqrt(p, spec.rho);
            (normal(n, p) * root, point)
        }
        Scheme::FixedBeta { beta0, point } => {
            let x = normal(n, p - 1);
            let e = normal(n, 1);
            let mut z = DMatrix::zeros(n, p);
            z.columns_mut(0, p - 1).copy_from(&x);
            for i in 0..n {
                let fit: f64 = beta0[0] + (0..p - 1).map(|j| x[(i, j)] * beta0[j + 1]).sum::<f64>();
                z[(i, p - 1)] = fit + e[(i, 0)];
            }
            (z, point)
        }
    };
    let m = spec.contaminated_count();
    if m > 0 {
        let mut rows = rand::seq::index::sample(&mut rng, n, m).into_vec();
        rows.sort_unstable();
        for i in rows {
            z.row_mut(i).copy_from_slice(point);
        }
    }
    let x = z.columns(0, p - 1).into_owned();
    let y: DVector<f64> = z.column(p - 1).into_owned();
    Dataset::new(x, y)
}

/// Uncontaminated regression data `yᵢ = 1 + Σⱼ ±xᵢⱼ + σ·eᵢ` with
/// `xᵢ ~ N(0, I)`; the slopes alternate in sign.
pub fn clean_line_data(n: usize, p: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if p == 0 || n < p {
        return Err(Error::InvalidInput(format!("need n ≥ p ≥ 1, got n = {n}, p = {p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, p - 1, |_, _| rng.sample::<f64, _>(StandardNormal));
    let beta = DVector::from_fn(p - 1, |j, _| if j % 2 == 0 { 1.0 } else { -1.0 });
    let e = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = DVector::from_element(n, 1.0) + &x * beta + e * noise;
    Dataset::new(x, y)
}
