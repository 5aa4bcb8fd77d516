//! Correlated Rician channels: parameters, correlation matrices and sampling.
//!
//! The real and imaginary parts of the channel vector are independent
//! Gaussian vectors `N(μ/√2 · 1, σ² R)`, so every antenna has the same mean
//! phase and unit average power.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, invalid, Error, Result};

/// Eigenvalue tolerance below which a correlation matrix is rejected.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Rician fading parameters with unit channel power, `μ² + 2σ² = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicianParams {
    pub kappa: f64,
    pub mu: f64,
    pub sigma2: f64,
}

pub fn rician_params(kappa: f64) -> Result<RicianParams> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(domain("rician_params", format!("kappa must be finite and non-negative, got {kappa}")));
    }
    let sigma2 = 0.5 / (1.0 + kappa);
    let mu = (kappa / (1.0 + kappa)).sqrt();
    Ok(RicianParams { kappa, mu, sigma2 })
}

/// How a correlation matrix was built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorrKind {
    Uniform { rho: f64 },
    Exponential { tau: f64 },
    Custom,
}

/// Normalized covariance `R` of the channel's real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    entries: DMatrix<f64>,
    delta: f64,
    kind: CorrKind,
}

impl CorrelationMatrix {
    pub fn identity(m: usize) -> Result<Self> {
        Self::uniform(m, 0.0)
    }

    /// `r_ij = ρ` off the diagonal, `−1/(M−1) ≤ ρ ≤ 1`.
    pub fn uniform(m: usize, rho: f64) -> Result<Self> {
        check_m(m)?;
        let lower = uniform_lower_bound(m);
        if !rho.is_finite() || rho > 1.0 || rho < lower - 1e-12 {
            return Err(invalid(
                "rho",
                format!("must lie in [{lower}, 1] (lower bound -1/(M-1)) for M = {m}, got {rho}"),
            ));
        }
        let entries = DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { rho });
        let mf = m as f64;
        let delta = (mf * (1.0 + (mf - 1.0) * rho)).max(0.0);
        Ok(Self { entries, delta, kind: CorrKind::Uniform { rho } })
    }

    /// `r_ij = τ^{|i−j|}`, `0 ≤ τ ≤ 1`.
    pub fn exponential(m: usize, tau: f64) -> Result<Self> {
        check_m(m)?;
        if !(0.0..=1.0).contains(&tau) {
            return Err(invalid("tau", format!("must lie in [0, 1], got {tau}")));
        }
        let entries = DMatrix::from_fn(m, m, |i, j| tau.powi(i.abs_diff(j) as i32));
        let mf = m as f64;
        let mut delta = mf;
        for i in 1..m {
            delta += 2.0 * (mf - i as f64) * tau.powi(i as i32);
        }
        Ok(Self { entries, delta, kind: CorrKind::Exponential { tau } })
    }

    /// Arbitrary symmetric, unit-diagonal, PSD matrix.
    pub fn custom(entries: DMatrix<f64>) -> Result<Self> {
        let m = entries.nrows();
        check_m(m)?;
        if entries.ncols() != m {
            return Err(invalid("entries", format!("must be square, got {}x{}", m, entries.ncols())));
        }
        for i in 0..m {
            if (entries[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(invalid("entries", format!("diagonal entry {i} is {}, expected 1", entries[(i, i)])));
            }
            for j in 0..m {
                let r = entries[(i, j)];
                if !r.is_finite() || r.abs() > 1.0 + 1e-12 {
                    return Err(invalid("entries", format!("entry ({i}, {j}) = {r} outside [-1, 1]")));
                }
                if (r - entries[(j, i)]).abs() > 1e-12 {
                    return Err(invalid("entries", format!("not symmetric at ({i}, {j})")));
                }
            }
        }
        let min_eig = entries.clone().symmetric_eigenvalues().min();
        if min_eig < -PSD_TOLERANCE {
            return Err(Error::NotPsd { min_eigenvalue: min_eig });
        }
        let delta = entries.sum().max(0.0);
        Ok(Self { entries, delta, kind: CorrKind::Custom })
    }

    pub fn m(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Sum of all entries, `δ ∈ [0, M²]`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn kind(&self) -> CorrKind {
        self.kind
    }
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        Err(invalid("m", "antenna count must be at least 1"))
    } else {
        Ok(())
    }
}

fn uniform_lower_bound(m: usize) -> f64 {
    if m == 1 {
        -1.0
    } else {
        -1.0 / (m as f64 - 1.0)
    }
}

pub fn uniform_corr(m: usize, rho: f64) -> Result<CorrelationMatrix> {
    CorrelationMatrix::uniform(m, rho)
}

pub fn exponential_corr(m: usize, tau: f64) -> Result<CorrelationMatrix> {
    CorrelationMatrix::exponential(m, tau)
}

/// Uniform correlation coefficient with the same `δ`, `(δ − M)/(M(M − 1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalentRho {
    pub rho: f64,
    /// False when `rho` falls outside `[−1/(M−1), 1]`; the value is not clamped.
    pub in_range: bool,
}

pub fn equivalent_uniform_rho(c: &CorrelationMatrix) -> Result<EquivalentRho> {
    equivalent_rho_from_delta(c.delta(), c.m())
}

pub(crate) fn equivalent_rho_from_delta(delta: f64, m: usize) -> Result<EquivalentRho> {
    if m < 2 {
        return Err(domain("equivalent_uniform_rho", "undefined for a single antenna"));
    }
    let mf = m as f64;
    let rho = (delta - mf) / (mf * (mf - 1.0));
    let in_range = rho >= uniform_lower_bound(m) - 1e-12 && rho <= 1.0 + 1e-12;
    Ok(EquivalentRho { rho, in_range })
}

/// Eigenvalues of the uniform correlation matrix: `1 − ρ` repeated `M − 1`
/// times, then `1 + (M − 1)ρ`.
pub fn uniform_corr_eigen(m: usize, rho: f64) -> Result<Vec<f64>> {
    CorrelationMatrix::uniform(m, rho)?;
    let mut out = vec![1.0 - rho; m - 1];
    out.push(1.0 + (m as f64 - 1.0) * rho);
    Ok(out)
}

/// Square-root factor `L` with `L Lᵀ = R`.
///
/// Uses Cholesky when `R` is well inside the positive-definite cone and
/// otherwise the symmetric eigendecomposition, with eigenvalues within
/// roundoff of zero set to zero. Singular matrices such as full or minimal
/// correlation therefore keep their null directions exactly.
pub fn corr_factor(c: &CorrelationMatrix) -> Result<DMatrix<f64>> {
    factor_matrix(c.entries())
}

fn factor_matrix(r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = r.clone().cholesky() {
        let l = ch.unpack();
        if l.iter().all(|v| v.is_finite()) && l.diagonal().iter().all(|d| d * d > PSD_TOLERANCE) {
            return Ok(l);
        }
    }
    let eig = r.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    if min < -PSD_TOLERANCE {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let floor = PSD_TOLERANCE * eig.eigenvalues.max().max(1.0);
    let roots = eig.eigenvalues.map(|v| if v > floor { v.sqrt() } else { 0.0 });
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

/// One channel realization `h = α + iβ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    pub real_part: Vec<f64>,
    pub imag_part: Vec<f64>,
}

impl ChannelDraw {
    pub fn new(real_part: Vec<f64>, imag_part: Vec<f64>) -> Result<Self> {
        if real_part.len() != imag_part.len() || real_part.is_empty() {
            return Err(invalid("channel", "real and imaginary parts must be non-empty and equal length"));
        }
        if real_part.iter().chain(&imag_part).any(|v| !v.is_finite()) {
            return Err(invalid("channel", "entries must be finite"));
        }
        Ok(Self { real_part, imag_part })
    }

    pub fn from_complex(h: &[Complex64]) -> Result<Self> {
        Self::new(h.iter().map(|z| z.re).collect(), h.iter().map(|z| z.im).collect())
    }

    pub(crate) fn zeros(m: usize) -> Self {
        Self { real_part: vec![0.0; m], imag_part: vec![0.0; m] }
    }

    pub fn m(&self) -> usize {
        self.real_part.len()
    }

    pub fn coefficient(&self, i: usize) -> Complex64 {
        Complex64::new(self.real_part[i], self.imag_part[i])
    }

    pub fn to_complex(&self) -> DVector<Complex64> {
        DVector::from_fn(self.m(), |i, _| self.coefficient(i))
    }

    /// `|h_i|²` (zero-based index).
    pub fn power(&self, i: usize) -> f64 {
        self.real_part[i] * self.real_part[i] + self.imag_part[i] * self.imag_part[i]
    }
}

/// Deterministic random stream addressed by `(seed, stream)`.
///
/// Streams with different indices never overlap, so parallel workers or
/// Monte Carlo blocks can each own one.
#[derive(Debug, Clone)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self(rng)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.0)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        rand::Rng::random::<f64>(&mut self.0)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// Precomputed sampler for repeated draws from one channel law.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    factor: Option<DMatrix<f64>>,
    mean: f64,
    sigma: f64,
    z: Vec<f64>,
}

impl ChannelSampler {
    pub fn new(c: &CorrelationMatrix, p: &RicianParams) -> Result<Self> {
        let m = c.m();
        let is_identity = c.entries() == &DMatrix::<f64>::identity(m, m);
        let factor = if is_identity { None } else { Some(corr_factor(c)?) };
        Ok(Self {
            factor,
            mean: p.mu / std::f64::consts::SQRT_2,
            sigma: p.sigma2.sqrt(),
            z: vec![0.0; m],
        })
    }

    pub fn m(&self) -> usize {
        self.z.len()
    }

    pub fn sample(&mut self, rng: &mut RngStream) -> ChannelDraw {
        let mut out = ChannelDraw::zeros(self.m());
        self.sample_into(rng, &mut out);
        out
    }

    /// Overwrites `out` with a fresh draw; `out` must have `M` entries.
    pub fn sample_into(&mut self, rng: &mut RngStream, out: &mut ChannelDraw) {
        self.fill(rng, &mut out.real_part);
        self.fill(rng, &mut out.imag_part);
    }

    fn fill(&mut self, rng: &mut RngStream, dst: &mut [f64]) {
        for z in self.z.iter_mut() {
            *z = rng.standard_normal();
        }
        match &self.factor {
            None => {
                for (d, z) in dst.iter_mut().zip(&self.z) {
                    *d = self.mean + self.sigma * z;
                }
            }
            Some(l) => {
                let m = self.z.len();
                for (i, d) in dst.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for j in 0..m {
                        acc += l[(i, j)] * self.z[j];
                    }
                    *d = self.mean + self.sigma * acc;
                }
            }
        }
    }
}

/// Single draw; build a [`ChannelSampler`] for repeated sampling.
pub fn sample_channel(c: &CorrelationMatrix, p: &RicianParams, rng: &mut RngStream) -> Result<ChannelDraw> {
    Ok(ChannelSampler::new(c, p)?.sample(rng))
}
