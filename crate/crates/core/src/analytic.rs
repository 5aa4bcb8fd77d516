//! Analytic laws of the harvested energy, outage, and average harvest under
//! sensitivity and saturation.
//!
//! Laws are expressed for the ideal-linear harvest `ξ⁰ = η·ξ^rf`; the `scale`
//! argument of every constructor is `ηϱ`.

use std::collections::HashMap;

use crate::channel::equivalent_rho_from_delta;
use crate::eh::EhModel;
use crate::error::{invalid, Error, Result};
use crate::quad::{integrate, integrate_pieces, QuadOptions};
use crate::specfun::{gamma_pq, ln_bessel_i_unchecked, poisson_gamma_mixture, NoncentralChi2};
use crate::strategies::StrategyId;

/// `|δ − M| < SNAP_IID·M` is treated as uncorrelated.
pub const SNAP_IID: f64 = 1e-6;
/// `δ < SNAP_DEGENERATE·M²` is treated as `δ = 0`, `δ > (1 − SNAP_DEGENERATE)·M²` as full correlation.
pub const SNAP_DEGENERATE: f64 = 1e-9;

/// One `scale·χ²(dof, noncentrality)` component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiTerm {
    pub scale: f64,
    pub dof: f64,
    pub noncentrality: f64,
}

impl ChiTerm {
    fn law(&self) -> NoncentralChi2 {
        NoncentralChi2::new(self.dof, self.noncentrality).expect("terms are validated on construction")
    }

    fn mean(&self) -> f64 {
        self.scale * (self.dof + self.noncentrality)
    }

    fn variance(&self) -> f64 {
        self.scale * self.scale * 2.0 * (self.dof + 2.0 * self.noncentrality)
    }
}

/// Independent sum `Σ_t s_t·χ²(φ_t, ψ_t)` plus an optional deterministic
/// offset (the point mass left over when a term degenerates).
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledChiMixture {
    pub terms: Vec<ChiTerm>,
    pub point_mass: Option<f64>,
}

impl ScaledChiMixture {
    pub fn new(terms: Vec<ChiTerm>, point_mass: Option<f64>) -> Result<Self> {
        for t in &terms {
            if !(t.scale > 0.0) || !t.scale.is_finite() {
                return Err(invalid("scale", format!("term scales must be positive, got {}", t.scale)));
            }
            NoncentralChi2::new(t.dof, t.noncentrality)?;
        }
        if let Some(v) = point_mass {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid("point_mass", format!("must be finite and non-negative, got {v}")));
            }
        }
        if terms.is_empty() && point_mass.is_none() {
            return Err(invalid("terms", "a mixture needs at least one term or a point mass"));
        }
        Ok(Self { terms, point_mass })
    }

    fn single(term: ChiTerm) -> Self {
        Self { terms: vec![term], point_mass: None }
    }

    fn shift(&self) -> f64 {
        self.point_mass.unwrap_or(0.0)
    }

    /// Every scale and the offset multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|t| ChiTerm { scale: t.scale * k, ..*t }).collect(),
            point_mass: self.point_mass.map(|v| v * k),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.terms.is_empty()
    }

    /// Draws one value; used for self-consistency checks.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        use rand_distr::{ChiSquared, Distribution, StandardNormal};
        let mut acc = self.shift();
        for t in &self.terms {
            let z: f64 = StandardNormal.sample(rng);
            let nc = z + t.noncentrality.sqrt();
            let mut v = nc * nc;
            if t.dof > 1.0 {
                v += ChiSquared::new(t.dof - 1.0).expect("dof > 1").sample(rng);
            }
            acc += t.scale * v;
        }
        acc
    }
}

fn two_term_guard(d: &ScaledChiMixture) -> Result<()> {
    if d.terms.len() > 2 {
        return Err(Error::Capability(format!(
            "mixtures of {} terms are not supported (at most 2)",
            d.terms.len()
        )));
    }
    Ok(())
}

fn check_x(x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        return Err(crate::error::domain("mixture", format!("argument must be non-negative, got {x}")));
    }
    Ok(())
}

const CONV_OPTS: QuadOptions = QuadOptions { abs_tol: 1e-10, rel_tol: 1e-10, max_subdivisions: 4000 };

/// Upper end of the effective support of a single term, in its own units.
fn term_upper(t: &ChiTerm) -> f64 {
    let law_mean = t.dof + t.noncentrality;
    let law_sd = (2.0 * (t.dof + 2.0 * t.noncentrality)).sqrt();
    law_mean + 40.0 * law_sd + 50.0
}

/// `P[X ≤ x]`.
pub fn mixture_cdf(d: &ScaledChiMixture, x: f64) -> Result<f64> {
    check_x(x)?;
    two_term_guard(d)?;
    let y = x - d.shift();
    if d.terms.is_empty() {
        return Ok(if y >= 0.0 { 1.0 } else { 0.0 });
    }
    if y <= 0.0 {
        return Ok(0.0);
    }
    match d.terms.as_slice() {
        [t] => t.law().cdf(y / t.scale),
        [t1, t2] => {
            let (l1, l2) = (t1.law(), t2.law());
            let u_top = (y / t1.scale).min(term_upper(t1));
            let v = integrate(
                |u| {
                    let rest = ((y - t1.scale * u) / t2.scale).max(0.0);
                    l2.cdf(rest).unwrap_or(f64::NAN) * l1.pdf(u).unwrap_or(f64::NAN)
                },
                0.0,
                u_top,
                CONV_OPTS,
            )?;
            Ok(v.clamp(0.0, 1.0))
        }
        _ => unreachable!(),
    }
}

/// Density of the continuous part; `inf`-free only when there is at least one term.
pub fn mixture_pdf(d: &ScaledChiMixture, x: f64) -> Result<f64> {
    check_x(x)?;
    two_term_guard(d)?;
    let y = x - d.shift();
    if d.terms.is_empty() {
        return Err(Error::Capability("a deterministic law has no density".into()));
    }
    if y < 0.0 {
        return Ok(0.0);
    }
    match d.terms.as_slice() {
        [t] => Ok(t.law().pdf(y / t.scale)? / t.scale),
        [t1, t2] => {
            if y == 0.0 {
                return Ok(0.0);
            }
            let (l1, l2) = (t1.law(), t2.law());
            let u_top = (y / t1.scale).min(term_upper(t1));
            let v = integrate(
                |u| {
                    let rest = ((y - t1.scale * u) / t2.scale).max(0.0);
                    l2.pdf(rest).unwrap_or(f64::NAN) / t2.scale * l1.pdf(u).unwrap_or(f64::NAN)
                },
                0.0,
                u_top,
                CONV_OPTS,
            )?;
            Ok(v.max(0.0))
        }
        _ => unreachable!(),
    }
}

/// `(mean, variance)` from the per-term moments.
pub fn mixture_moments(d: &ScaledChiMixture) -> (f64, f64) {
    let mean = d.terms.iter().map(ChiTerm::mean).sum::<f64>() + d.shift();
    let var = d.terms.iter().map(ChiTerm::variance).sum();
    (mean, var)
}

fn check_common(kappa: f64, scale: f64) -> Result<()> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(invalid("kappa", format!("must be finite and non-negative, got {kappa}")));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(invalid("scale", format!("must be positive and finite, got {scale}")));
    }
    Ok(())
}

fn check_delta(delta: f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(invalid("m", "antenna count must be at least 1"));
    }
    let m2 = (m * m) as f64;
    if !delta.is_finite() || delta < -SNAP_DEGENERATE * m2 || delta > m2 * (1.0 + SNAP_DEGENERATE) {
        return Err(invalid("delta", format!("must lie in [0, M²] = [0, {m2}], got {delta}")));
    }
    Ok(delta.clamp(0.0, m2))
}

/// One fixed antenna: `(ηϱ/(2(1+κ)))·χ²(2, 2κ)`.
pub fn dist_oa(kappa: f64, scale: f64) -> Result<ScaledChiMixture> {
    check_common(kappa, scale)?;
    Ok(ScaledChiMixture::single(ChiTerm { scale: scale / (2.0 * (1.0 + kappa)), dof: 2.0, noncentrality: 2.0 * kappa }))
}

/// All antennas at equal power.
pub fn dist_aa(kappa: f64, delta: f64, m: usize, scale: f64) -> Result<ScaledChiMixture> {
    check_common(kappa, scale)?;
    let delta = check_delta(delta, m)?;
    let (mf, m2) = (m as f64, (m * m) as f64);
    if delta < SNAP_DEGENERATE * m2 {
        return Ok(ScaledChiMixture { terms: vec![], point_mass: Some(scale * mf * kappa / (1.0 + kappa)) });
    }
    Ok(ScaledChiMixture::single(ChiTerm {
        scale: scale * delta / (2.0 * mf * (1.0 + kappa)),
        dof: 2.0,
        noncentrality: 2.0 * kappa * m2 / delta,
    }))
}

/// Antenna switching; exact for `δ ∈ {M, M²}`, an approximation otherwise
/// only in the sense that the general form is the eigen-based closed form.
pub fn dist_sa(kappa: f64, delta: f64, m: usize, scale: f64) -> Result<ScaledChiMixture> {
    check_common(kappa, scale)?;
    let delta = check_delta(delta, m)?;
    let (mf, m2) = (m as f64, (m * m) as f64);
    if m == 1 || delta > (1.0 - SNAP_DEGENERATE) * m2 {
        return dist_oa(kappa, scale);
    }
    if (delta - mf).abs() < SNAP_IID * mf {
        return Ok(ScaledChiMixture::single(ChiTerm {
            scale: scale / (2.0 * mf * (1.0 + kappa)),
            dof: 2.0 * mf,
            noncentrality: 2.0 * mf * kappa,
        }));
    }
    let central = ChiTerm {
        scale: scale * (m2 - delta) / (2.0 * m2 * (1.0 + kappa) * (mf - 1.0)),
        dof: 2.0 * (mf - 1.0),
        noncentrality: 0.0,
    };
    if delta < SNAP_DEGENERATE * m2 {
        return Ok(ScaledChiMixture { terms: vec![central], point_mass: Some(scale * kappa / (1.0 + kappa)) });
    }
    let los = ChiTerm { scale: scale * delta / (2.0 * m2 * (1.0 + kappa)), dof: 2.0, noncentrality: 2.0 * kappa * m2 / delta };
    Ok(ScaledChiMixture { terms: vec![central, los], point_mass: None })
}

/// MRT beamforming: the switching law with every scale multiplied by `M`.
pub fn dist_aa_csi(kappa: f64, delta: f64, m: usize, scale: f64) -> Result<ScaledChiMixture> {
    Ok(dist_sa(kappa, delta, m, scale)?.scaled(m as f64))
}

/// Quadrature settings for the best-antenna law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OaCsiQuadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Truncate `t` where the integrand drops below this fraction of its peak.
    pub cutoff: f64,
}

impl Default for OaCsiQuadrature {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-10, cutoff: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum OaCsiForm {
    SingleAntenna,
    Iid,
    Integral { rho: f64 },
}

/// Law of the best single antenna (selection over `M` correlated branches).
///
/// Correlation enters only through the equivalent uniform coefficient
/// `ρ = (δ − M)/(M(M − 1))`; exact for uniform correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OaCsiDist {
    pub m: usize,
    pub kappa: f64,
    pub delta: f64,
    pub scale: f64,
    pub quadrature: OaCsiQuadrature,
    form: OaCsiForm,
}

impl OaCsiDist {
    pub fn new(kappa: f64, delta: f64, m: usize, scale: f64) -> Result<Self> {
        check_common(kappa, scale)?;
        let delta = check_delta(delta, m)?;
        let (mf, m2) = (m as f64, (m * m) as f64);
        let form = if m == 1 || delta > (1.0 - SNAP_DEGENERATE) * m2 {
            OaCsiForm::SingleAntenna
        } else if (delta - mf).abs() < SNAP_IID * mf {
            OaCsiForm::Iid
        } else if delta < mf {
            return Err(Error::Capability(format!(
                "best-antenna law needs δ ≥ M (non-negative equivalent correlation); got δ = {delta}, M = {m}"
            )));
        } else {
            OaCsiForm::Integral { rho: equivalent_rho_from_delta(delta, m)?.rho }
        };
        Ok(Self { m, kappa, delta, scale, quadrature: OaCsiQuadrature::default(), form })
    }

    pub fn with_quadrature(mut self, q: OaCsiQuadrature) -> Self {
        self.quadrature = q;
        self
    }

    fn branch(&self) -> NoncentralChi2 {
        NoncentralChi2::new(2.0, 2.0 * self.kappa).expect("kappa validated")
    }

    fn opts(&self) -> QuadOptions {
        QuadOptions { abs_tol: self.quadrature.abs_tol, rel_tol: self.quadrature.rel_tol, max_subdivisions: 4000 }
    }

    /// Hard cap on `t`, raised when the weight's own mass lies beyond it.
    fn t_cap(&self, mode: f64) -> f64 {
        let base = 50.0 * (1.0 + self.kappa * self.m as f64);
        base.max(mode + 60.0 * (mode + 1.0).sqrt() + 60.0)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        let z = x / self.scale;
        if z == 0.0 {
            return Ok(0.0);
        }
        let k1 = 1.0 + self.kappa;
        match self.form {
            OaCsiForm::SingleAntenna => self.branch().cdf(2.0 * k1 * z),
            OaCsiForm::Iid => Ok(self.branch().cdf(2.0 * k1 * z)?.powi(self.m as i32)),
            OaCsiForm::Integral { rho } => {
                let c = self.kappa / rho;
                let y = k1 * z / (1.0 - rho);
                let lam_per_t = rho / (1.0 - rho);
                let mi = self.m as i32;
                let log_w = |t: f64| ln_bessel_i_unchecked(0.0, 2.0 * (c * t).sqrt()) - t - c;
                let (lo, hi) = log_concave_support(&log_w, c.max(1.0), -self.quadrature.cutoff.ln(), |m| self.t_cap(m));
                let v = integrate(
                    |t| {
                        let inner = poisson_gamma_mixture(1.0, lam_per_t * t, y).map(|p| p.0).unwrap_or(f64::NAN);
                        log_w(t).exp() * inner.powi(mi)
                    },
                    lo,
                    hi,
                    self.opts(),
                )?;
                Ok(v.clamp(0.0, 1.0))
            }
        }
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        let z = x / self.scale;
        let k1 = 1.0 + self.kappa;
        let mf = self.m as f64;
        match self.form {
            OaCsiForm::SingleAntenna => Ok(2.0 * k1 / self.scale * self.branch().pdf(2.0 * k1 * z)?),
            OaCsiForm::Iid => {
                let b = self.branch();
                let w = 2.0 * k1 * z;
                Ok(2.0 * k1 * mf / self.scale * b.cdf(w)?.powi(self.m as i32 - 1) * b.pdf(w)?)
            }
            OaCsiForm::Integral { rho } => {
                if z == 0.0 {
                    return Ok(0.0);
                }
                let c = self.kappa / rho;
                let a = k1 / (1.0 - rho);
                let d = rho * k1 * z;
                let y = a * z;
                let lam_per_t = rho / (1.0 - rho);
                let mi = self.m as i32;
                let log_w = |t: f64| {
                    -c - y - t / (1.0 - rho)
                        + ln_bessel_i_unchecked(0.0, 2.0 * (c * t).sqrt())
                        + ln_bessel_i_unchecked(0.0, 2.0 * (d * t).sqrt() / (1.0 - rho))
                };
                let guess = ((1.0 - rho) * c.sqrt() + d.sqrt()).powi(2);
                let (lo, hi) = log_concave_support(&log_w, guess.max(1.0), -self.quadrature.cutoff.ln(), |m| self.t_cap(m));
                let v = integrate(
                    |t| {
                        let inner = poisson_gamma_mixture(1.0, lam_per_t * t, y).map(|p| p.0).unwrap_or(f64::NAN);
                        log_w(t).exp() * inner.powi(mi - 1)
                    },
                    lo,
                    hi,
                    QuadOptions { abs_tol: 0.0, rel_tol: self.quadrature.rel_tol.max(1e-10), max_subdivisions: 4000 },
                )?;
                Ok((mf * a / self.scale * v).max(0.0))
            }
        }
    }

    /// Right end of the numerical support, from the dominating beamforming law.
    fn x_upper(&self) -> f64 {
        let dom = dist_aa_csi(self.kappa, self.delta, self.m, self.scale).expect("validated inputs");
        let (mean, var) = mixture_moments(&dom);
        mean + 30.0 * var.sqrt()
    }

    /// `(mean, variance)` by quadrature over the density.
    pub fn moments(&self) -> Result<(f64, f64)> {
        if self.form == OaCsiForm::SingleAntenna {
            return Ok(mixture_moments(&dist_oa(self.kappa, self.scale)?));
        }
        let top = self.x_upper();
        let opts = QuadOptions { abs_tol: 1e-12, rel_tol: 1e-9, max_subdivisions: 2000 };
        let breaks: Vec<f64> = (0..=16).map(|k| top * k as f64 / 16.0).collect();
        let mut err = None;
        // the three passes share most nodes
        let mut cache: HashMap<u64, f64> = HashMap::new();
        let mut moment = |p: i32| {
            integrate_pieces(
                |x| {
                    let v = match cache.get(&x.to_bits()) {
                        Some(&v) => v,
                        None => match self.pdf(x) {
                            Ok(v) => {
                                cache.insert(x.to_bits(), v);
                                v
                            }
                            Err(e) => {
                                err.get_or_insert(e);
                                f64::NAN
                            }
                        },
                    };
                    v * (x / self.scale).powi(p)
                },
                &breaks,
                opts,
            )
        };
        let (m0, m1, m2) = (moment(0), moment(1), moment(2));
        if let Some(e) = err {
            return Err(e);
        }
        let (m0, m1, m2) = (m0?, m1?, m2?);
        if (m0 - 1.0).abs() > 1e-6 {
            return Err(Error::Convergence {
                routine: "best-antenna moments",
                detail: format!("density integrates to {m0}"),
            });
        }
        let mean = m1 / m0;
        let var = (m2 / m0 - mean * mean).max(0.0);
        Ok((mean * self.scale, var * self.scale * self.scale))
    }
}

/// Interval holding a log-concave-ish weight down to `exp(−drop)` of its peak.
fn log_concave_support(
    log_w: &dyn Fn(f64) -> f64,
    guess: f64,
    drop: f64,
    cap: impl Fn(f64) -> f64,
) -> (f64, f64) {
    // golden-section search for the mode on [0, 4·guess + 100]
    let (mut a, mut b) = (0.0, 4.0 * guess + 100.0);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (log_w(c), log_w(d));
    for _ in 0..200 {
        if (b - a) < 1e-9 * (1.0 + b) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = log_w(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = log_w(d);
        }
    }
    let mode = 0.5 * (a + b);
    let peak = log_w(mode).max(log_w(0.0));
    let level = peak - drop;

    let lo = if log_w(0.0) >= level {
        0.0
    } else {
        let (mut l, mut h) = (0.0, mode);
        for _ in 0..100 {
            let mid = 0.5 * (l + h);
            if log_w(mid) < level {
                l = mid;
            } else {
                h = mid;
            }
        }
        l
    };
    let cap = cap(mode);
    let mut step = (mode + 1.0).sqrt();
    let mut h = mode + step;
    while log_w(h) >= level && h < cap {
        step *= 2.0;
        h = mode + step;
    }
    let mut l = mode;
    let mut hi = h.min(cap);
    if log_w(hi) < level {
        for _ in 0..100 {
            let mid = 0.5 * (l + hi);
            if log_w(mid) < level {
                hi = mid;
            } else {
                l = mid;
            }
        }
    }
    (lo, hi)
}

/// `ηϱ(1 + √((1+2κ)(M−1))/(1+κ))`, an upper bound on the uncorrelated
/// best-antenna mean.
pub fn oa_csi_mean_bound(kappa: f64, m: usize, scale: f64) -> Result<f64> {
    check_common(kappa, scale)?;
    if m == 0 {
        return Err(invalid("m", "antenna count must be at least 1"));
    }
    Ok(scale * (1.0 + ((1.0 + 2.0 * kappa) * (m as f64 - 1.0)).sqrt() / (1.0 + kappa)))
}

/// Any of the single-user harvested-energy laws.
#[derive(Debug, Clone, PartialEq)]
pub enum HarvestLaw {
    Mixture(ScaledChiMixture),
    OaCsi(OaCsiDist),
}

impl HarvestLaw {
    pub fn for_strategy(strategy: StrategyId, kappa: f64, delta: f64, m: usize, scale: f64) -> Result<Self> {
        Ok(match strategy {
            StrategyId::Oa => Self::Mixture(dist_oa(kappa, scale)?),
            StrategyId::Aa => Self::Mixture(dist_aa(kappa, delta, m, scale)?),
            StrategyId::Sa => Self::Mixture(dist_sa(kappa, delta, m, scale)?),
            StrategyId::AaCsi => Self::Mixture(dist_aa_csi(kappa, delta, m, scale)?),
            StrategyId::OaCsi => Self::OaCsi(OaCsiDist::new(kappa, delta, m, scale)?),
        })
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        match self {
            Self::Mixture(d) => mixture_cdf(d, x),
            Self::OaCsi(d) => d.cdf(x),
        }
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        match self {
            Self::Mixture(d) => mixture_pdf(d, x),
            Self::OaCsi(d) => d.pdf(x),
        }
    }

    pub fn moments(&self) -> Result<(f64, f64)> {
        match self {
            Self::Mixture(d) => Ok(mixture_moments(d)),
            Self::OaCsi(d) => d.moments(),
        }
    }
}

/// Energy outage `F_{ξ⁰}(η·ξ_th)`.
pub fn energy_outage(law: &HarvestLaw, xi_th: f64, eta: f64) -> Result<f64> {
    if !(xi_th >= 0.0) {
        return Err(invalid("xi_th", format!("threshold must be non-negative, got {xi_th}")));
    }
    law.cdf(eta * xi_th)
}

/// CDF of the harvested energy under sensitivity `w1` and saturation `w2`,
/// built from the ideal-linear law. Exact for one-antenna-at-a-time-free
/// strategies; an approximation for antenna switching.
pub fn saturated_cdf(law: &HarvestLaw, eta: f64, w1: f64, w2: f64, xi: f64) -> Result<f64> {
    if !(w1 < w2) {
        return Err(invalid("w1", format!("sensitivity {w1} must be below saturation {w2}")));
    }
    if xi.is_nan() || xi < 0.0 {
        return Err(invalid("xi", format!("must be non-negative, got {xi}")));
    }
    if xi >= eta * w2 {
        Ok(1.0)
    } else if xi < eta * w1 {
        law.cdf(eta * w1)
    } else {
        law.cdf(xi)
    }
}

/// Sensitivity/saturation constants for the average-harvest formulas;
/// `w1 ≤ w2` (equality allowed) and `w2` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiecewiseParams {
    pub eta: f64,
    pub w1: f64,
    pub w2: f64,
}

impl PiecewiseParams {
    pub fn new(eta: f64, w1: f64, w2: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(invalid("eta", format!("must lie in [0, 1], got {eta}")));
        }
        if !(w1 >= 0.0) || !(w2 >= w1) {
            return Err(invalid("w2", format!("need 0 ≤ w1 ≤ w2, got w1 = {w1}, w2 = {w2}")));
        }
        Ok(Self { eta, w1, w2 })
    }

    pub fn from_model(model: &EhModel) -> Result<Self> {
        match *model {
            EhModel::IdealLinear { eta } => Self::new(eta, 0.0, f64::INFINITY),
            EhModel::Piecewise { eta, w1, w2 } => Self::new(eta, w1, w2),
            EhModel::Logistic { .. } => {
                Err(Error::Capability("closed-form averages exist only for the linear harvester models".into()))
            }
        }
    }

    fn g(&self, x: f64) -> f64 {
        if x < self.w1 {
            0.0
        } else if x < self.w2 {
            self.eta * x
        } else {
            self.eta * self.w2
        }
    }
}

fn q_reg(s: f64, x: f64) -> Result<f64> {
    if x.is_infinite() {
        return Ok(0.0);
    }
    gamma_pq(s, x).map(|p| p.1)
}

/// Shared body of `q1` and `q2`: `η[μ̄(Q(k+1, y₁) − Q(k+1, y₂)) + ϖ₂Q(k, y₂)]`
/// with `y = k·ϖ/μ̄`.
fn gamma_average(k: f64, mean: f64, eh: &PiecewiseParams) -> Result<f64> {
    let y1 = k * eh.w1 / mean;
    let y2 = k * eh.w2 / mean;
    let linear = mean * (q_reg(k + 1.0, y1)? - q_reg(k + 1.0, y2)?);
    let saturated = if eh.w2.is_finite() { eh.w2 * q_reg(k, y2)? } else { 0.0 };
    Ok(eh.eta * (linear + saturated))
}

/// `E[g(φ̂·Z)]` for central `Z ~ χ²(φ, 0)`.
pub fn q1(dof: f64, phi_scale: f64, eh: &PiecewiseParams) -> Result<f64> {
    if !(dof > 0.0) {
        return Err(invalid("dof", format!("must be positive, got {dof}")));
    }
    if !(phi_scale >= 0.0) {
        return Err(invalid("phi_scale", format!("must be non-negative, got {phi_scale}")));
    }
    if phi_scale == 0.0 {
        return Ok(0.0);
    }
    // Gamma(φ/2, 2φ̂) has mean φ̂φ; written as k = φ/2, μ̄ = φ̂·(2k)
    let k = 0.5 * dof;
    gamma_average(k, phi_scale * (0.0 + dof), eh)
}

/// `E[g(φ̂·Z)]` for `Z ~ χ²(2, ψ)` under the Nakagami-m (gamma) approximation
/// with `m = (ψ/2 + 1)²/(ψ + 1)`; exact for `ψ = 0`.
pub fn q2(psi: f64, phi_scale: f64, eh: &PiecewiseParams) -> Result<f64> {
    if !(psi >= 0.0) {
        return Err(invalid("psi", format!("must be non-negative, got {psi}")));
    }
    if !(phi_scale >= 0.0) {
        return Err(invalid("phi_scale", format!("must be non-negative, got {phi_scale}")));
    }
    if phi_scale == 0.0 {
        return Ok(0.0);
    }
    let k = (psi / 2.0 + 1.0).powi(2) / (psi + 1.0);
    gamma_average(k, phi_scale * (psi + 2.0), eh)
}

/// Average harvested energy under the piecewise harvester (single user).
///
/// The switching and beamforming forms add the average harvest of each
/// mixture component, following the closed-form composition; the
/// best-antenna strategy has no closed form and must go through Monte Carlo.
pub fn avg_harvest(strategy: StrategyId, kappa: f64, delta: f64, m: usize, rho: f64, eh: &PiecewiseParams) -> Result<f64> {
    check_common(kappa, rho)?;
    let delta = check_delta(delta, m)?;
    let (mf, m2) = (m as f64, (m * m) as f64);
    let k1 = 1.0 + kappa;
    let los_term = |div: f64| -> Result<f64> {
        if delta < SNAP_DEGENERATE * m2 {
            Ok(eh.g(rho * m2 / div * kappa / k1))
        } else {
            q2(2.0 * kappa * m2 / delta, delta * rho / (2.0 * div * k1), eh)
        }
    };
    match strategy {
        StrategyId::Oa => q2(2.0 * kappa, rho / (2.0 * k1), eh),
        StrategyId::Aa => los_term(mf),
        StrategyId::Sa | StrategyId::AaCsi => {
            if m == 1 {
                return q2(2.0 * kappa, rho / (2.0 * k1), eh);
            }
            let div = if strategy == StrategyId::Sa { m2 } else { mf };
            let central = q1(2.0 * (mf - 1.0), (m2 - delta) * rho / (2.0 * div * (mf - 1.0) * k1), eh)?;
            Ok(central + los_term(div)?)
        }
        StrategyId::OaCsi => Err(Error::Capability(
            "no closed-form average for the best-antenna strategy; use the Monte Carlo path".into(),
        )),
    }
}

/// LOS factor maximizing the variance: `1 − δ/M²` (AA) or
/// `(δ−M)(M²−δ)/(δM(M−1))` (SA, AA-CSI).
pub fn kappa_star(strategy: StrategyId, delta: f64, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(invalid("m", "needs at least two antennas"));
    }
    let delta = check_delta(delta, m)?;
    let (mf, m2) = (m as f64, (m * m) as f64);
    match strategy {
        StrategyId::Aa => Ok(1.0 - delta / m2),
        StrategyId::Sa | StrategyId::AaCsi => {
            if delta <= 0.0 {
                return Err(invalid("delta", "must be positive for this strategy"));
            }
            Ok((delta - mf) * (m2 - delta) / (delta * mf * (mf - 1.0)))
        }
        other => Err(Error::Capability(format!("no variance-maximizing LOS factor for {other}"))),
    }
}

/// `δ` minimizing the switching variance: `M(1 − min(κ(M−1), 1))`.
pub fn min_variance_delta(kappa: f64, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(invalid("m", "needs at least two antennas"));
    }
    if !(kappa >= 0.0) {
        return Err(invalid("kappa", format!("must be non-negative, got {kappa}")));
    }
    let mf = m as f64;
    Ok(mf * (1.0 - (kappa * (mf - 1.0)).min(1.0)))
}

/// Monotone piecewise-linear interpolant of an expensive CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedCdf {
    xs: Vec<f64>,
    fs: Vec<f64>,
}

impl TabulatedCdf {
    /// Tabulates `cdf` on `n ≥ 2` uniform points of `[lo, hi]`.
    pub fn from_fn(cdf: impl Fn(f64) -> Result<f64>, lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(hi > lo) {
            return Err(invalid("grid", "need n ≥ 2 and hi > lo"));
        }
        let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let mut fs = Vec::with_capacity(n);
        let mut running: f64 = 0.0;
        for &x in &xs {
            running = running.max(cdf(x)?);
            fs.push(running);
        }
        Ok(Self { xs, fs })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return if x < self.xs[0] { 0.0f64.min(self.fs[0]) } else { self.fs[0] };
        }
        if x >= self.xs[n - 1] {
            return self.fs[n - 1];
        }
        let h = self.xs[1] - self.xs[0];
        let i = (((x - self.xs[0]) / h) as usize).min(n - 2);
        let w = (x - self.xs[i]) / h;
        self.fs[i] + w * (self.fs[i + 1] - self.fs[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oa_examples() {
        assert_eq!(mixture_moments(&dist_oa(0.0, 1.0).unwrap()), (1.0, 1.0));
        let (_, v) = mixture_moments(&dist_oa(3.0, 1.0).unwrap());
        assert!((v - 7.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn aa_special_cases() {
        let d = dist_aa(2.0, 0.0, 4, 1.5).unwrap();
        assert!(d.is_deterministic());
        assert_eq!(d.point_mass, Some(1.5 * 4.0 * 2.0 / 3.0));
        assert_eq!(mixture_cdf(&d, 3.9).unwrap(), 0.0);
        assert_eq!(mixture_cdf(&d, 4.0).unwrap(), 1.0);
        let (mean, _) = mixture_moments(&dist_aa(1.0, 4.0, 4, 1.0).unwrap());
        assert!((mean - 2.5).abs() < 1e-15);
        assert!(dist_aa(1.0, 17.0, 4, 1.0).is_err());
    }

    #[test]
    fn sa_special_forms() {
        let d = dist_sa(1.0, 4.0, 4, 1.0).unwrap();
        assert_eq!(d.terms, vec![ChiTerm { scale: 1.0 / 16.0, dof: 8.0, noncentrality: 8.0 }]);
        assert_eq!(dist_sa(1.0, 16.0, 4, 1.0).unwrap(), dist_oa(1.0, 1.0).unwrap());
        let d = dist_sa(1.0, 0.0, 4, 1.0).unwrap();
        assert_eq!(d.terms.len(), 1);
        assert_eq!(d.terms[0].noncentrality, 0.0);
        assert_eq!(d.point_mass, Some(0.5));
        assert_eq!(dist_sa(2.0, 1.0, 1, 1.0).unwrap(), dist_oa(2.0, 1.0).unwrap());
        let csi = dist_aa_csi(1.0, 9.0, 4, 1.0).unwrap();
        let (mean, _) = mixture_moments(&csi);
        assert!((mean - 4.0).abs() < 1e-14);
    }

    #[test]
    fn too_many_terms() {
        let t = ChiTerm { scale: 1.0, dof: 2.0, noncentrality: 0.0 };
        let d = ScaledChiMixture::new(vec![t; 3], None).unwrap();
        assert!(matches!(mixture_cdf(&d, 1.0), Err(Error::Capability(_))));
    }

    #[test]
    fn two_term_mean_by_quadrature() {
        let d = dist_sa(3.0, 9.0, 4, 1.0).unwrap();
        assert_eq!(d.terms.len(), 2);
        let (mean, _) = mixture_moments(&d);
        let top = 30.0;
        let q = integrate(|x| 1.0 - mixture_cdf(&d, x).unwrap(), 0.0, top, QuadOptions { abs_tol: 1e-9, rel_tol: 1e-9, max_subdivisions: 500 })
            .unwrap();
        assert!((q - mean).abs() < 1e-6, "{q} vs {mean}");
    }

    #[test]
    fn q_functions_ideal_limits() {
        let ideal = PiecewiseParams::new(0.3, 0.0, 1e30).unwrap();
        for phi in [2.0, 6.0, 14.0] {
            assert!((q1(phi, 0.7, &ideal).unwrap() - 0.3 * 0.7 * phi).abs() < 1e-9);
        }
        for psi in [0.0, 2.0, 6.0] {
            assert!((q2(psi, 0.7, &ideal).unwrap() - 0.3 * 0.7 * (psi + 2.0)).abs() < 1e-9);
        }
        let eh = PiecewiseParams::new(0.25, 0.01, 0.3).unwrap();
        assert_eq!(q2(0.0, 0.4, &eh).unwrap(), q1(2.0, 0.4, &eh).unwrap());
        let flat = PiecewiseParams::new(0.25, 0.3, 0.3).unwrap();
        let surv = NoncentralChi2::new(4.0, 0.0).unwrap().sf(0.3 / 0.4).unwrap();
        assert!((q1(4.0, 0.4, &flat).unwrap() - 0.25 * 0.3 * surv).abs() < 1e-15);
    }

    #[test]
    fn avg_harvest_ideal_and_errors() {
        let ideal = PiecewiseParams::new(0.5, 0.0, f64::INFINITY).unwrap();
        assert!((avg_harvest(StrategyId::Oa, 2.0, 8.0, 4, 3.0, &ideal).unwrap() - 1.5).abs() < 1e-12);
        assert!((avg_harvest(StrategyId::AaCsi, 2.0, 8.0, 4, 3.0, &ideal).unwrap() - 6.0).abs() < 1e-12);
        assert!(matches!(
            avg_harvest(StrategyId::OaCsi, 1.0, 4.0, 4, 1.0, &ideal),
            Err(Error::Capability(_))
        ));
        let eh = PiecewiseParams::new(0.25, 0.01, 0.3).unwrap();
        let v = avg_harvest(StrategyId::Aa, 1.0, 0.0, 4, 0.05, &eh).unwrap();
        assert_eq!(v, eh.g(0.05 * 4.0 * 0.5));
    }

    #[test]
    fn kappa_star_examples() {
        assert_eq!(kappa_star(StrategyId::Aa, 4.0, 4).unwrap(), 0.75);
        assert_eq!(kappa_star(StrategyId::Sa, 4.0, 4).unwrap(), 0.0);
        assert!(matches!(kappa_star(StrategyId::Oa, 4.0, 4), Err(Error::Capability(_))));
        assert_eq!(min_variance_delta(0.0, 4).unwrap(), 4.0);
        assert_eq!(min_variance_delta(1.0, 4).unwrap(), 0.0);
    }

    #[test]
    fn oa_csi_bound_examples() {
        assert_eq!(oa_csi_mean_bound(2.0, 1, 1.3).unwrap(), 1.3);
        assert!((oa_csi_mean_bound(0.0, 5, 1.0).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn oa_csi_rayleigh_iid_closed_form() {
        let d = OaCsiDist::new(0.0, 4.0, 4, 1.0).unwrap();
        for x in [0.1, 0.8, 2.5] {
            let want = (1.0 - (-x as f64).exp()).powi(4);
            assert!((d.cdf(x).unwrap() - want).abs() < 1e-14);
        }
        assert!(matches!(OaCsiDist::new(1.0, 2.0, 4, 1.0), Err(Error::Capability(_))));
    }

    #[test]
    fn saturated_cdf_edges() {
        let law = HarvestLaw::Mixture(dist_oa(1.0, 1.0).unwrap());
        assert_eq!(saturated_cdf(&law, 0.5, 0.1, 0.4, 0.2).unwrap(), 1.0);
        assert_eq!(saturated_cdf(&law, 0.5, 0.1, 0.4, 0.01).unwrap(), law.cdf(0.05).unwrap());
        assert!(saturated_cdf(&law, 0.5, 0.4, 0.4, 0.01).is_err());
    }

    #[test]
    fn tabulated_cdf_interpolates() {
        let t = TabulatedCdf::from_fn(|x| Ok(1.0 - (-x as f64).exp()), 0.0, 20.0, 2001).unwrap();
        for x in [0.013, 1.0, 3.3, 19.99] {
            assert!((t.eval(x) - (1.0 - (-x as f64).exp())).abs() < 2e-5);
        }
        assert_eq!(t.eval(25.0), t.eval(20.0));
    }
}
