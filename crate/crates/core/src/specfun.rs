//! Special functions and the gamma / noncentral chi-squared families.
//!
//! Everything here works in log space wherever an intermediate factor can
//! leave the `f64` range, so the same routines serve tiny and very large
//! arguments without overflow.

use crate::error::{domain, invalid, Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const LN_2PI_HALF: f64 = 0.918_938_533_204_672_7;
const LN_2: f64 = std::f64::consts::LN_2;

/// ζ(k) − 1 for k = 2, 3, ….
#[allow(clippy::excessive_precision)]
const ZETA_MINUS_ONE: [f64; 40] = [
    0.64493406684822643647,
    0.2020569031595942854,
    0.082323233711138191516,
    0.036927755143369926331,
    0.017343061984449139715,
    0.0083492773819228268398,
    0.0040773561979443393787,
    0.0020083928260822144179,
    0.00099457512781808533715,
    0.0004941886041194645587,
    0.00024608655330804829864,
    0.00012271334757848914675,
    0.000061248135058704829259,
    0.000030588236307020493552,
    0.000015282259408651871733,
    0.0000076371976378997622736,
    0.0000038172932649998398565,
    0.0000019082127165539389257,
    0.00000095396203387279611315,
    0.00000047693298678780646312,
    0.00000023845050272773299,
    0.00000011921992596531107307,
    0.000000059608189051259479612,
    0.000000029803503514652280186,
    0.000000014901554828365041235,
    0.000000007450711789835429492,
    0.0000000037253340247884570548,
    0.0000000018626597235130490064,
    0.00000000093132743241966818287,
    0.0000000004656629065033784073,
    0.0000000002328311833676505492,
    0.00000000011641550172700519776,
    0.000000000058207720879027008892,
    0.000000000029103850444970996869,
    0.000000000014551921891041984236,
    0.0000000000072759598350574810145,
    0.0000000000036379795473786511902,
    0.0000000000018189896503070659476,
    0.00000000000090949478402638892825,
    0.00000000000045474737830421540268,
];

const MAX_ITER: usize = 1_000_000;

/// Natural log of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(domain("log_gamma", format!("argument must be positive, got {x}")));
    }
    Ok(ln_gamma(x))
}

/// Unchecked `ln Γ(x)`; callers guarantee `x > 0`.
pub(crate) fn ln_gamma(x: f64) -> f64 {
    if x.is_infinite() {
        return f64::INFINITY;
    }
    if x < 0.5 {
        ln_gamma_1p(x) - x.ln()
    } else if x < 1.5 {
        ln_gamma_1p(x - 1.0)
    } else if x < 2.5 {
        let eps = x - 2.0;
        eps.ln_1p() + ln_gamma_1p(eps)
    } else if x < 10.0 {
        // recur down into [1.5, 2.5): every term is added, nothing cancels
        let mut shifted = x;
        let mut prod = 1.0;
        while shifted >= 2.5 {
            shifted -= 1.0;
            prod *= shifted;
        }
        let eps = shifted - 2.0;
        prod.ln() + eps.ln_1p() + ln_gamma_1p(eps)
    } else {
        ln_gamma_stirling(x)
    }
}

/// `ln Γ(1 + ε)` for `|ε| ≤ 0.5`, accurate in the relative sense near ε = 0.
fn ln_gamma_1p(eps: f64) -> f64 {
    let mut acc = 0.0;
    let mut pow = eps * eps;
    for (i, z) in ZETA_MINUS_ONE.iter().enumerate() {
        let k = (i + 2) as f64;
        let term = z * pow / k;
        if i % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
        if term.abs() < 1e-18 * acc.abs() {
            break;
        }
        pow *= eps;
    }
    eps * (1.0 - EULER_GAMMA) - eps.ln_1p() + acc
}

fn ln_gamma_stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 360.0
                    + inv2
                        * (1.0 / 1260.0
                            + inv2
                                * (-1.0 / 1680.0
                                    + inv2 * (1.0 / 1188.0 + inv2 * (-691.0 / 360_360.0 + inv2 / 156.0))))));
    (x - 0.5) * x.ln() - x + LN_2PI_HALF + series
}

/// Regularized incomplete gamma pair `(P(s, x), Q(s, x))`.
pub fn gamma_pq(s: f64, x: f64) -> Result<(f64, f64)> {
    if s.is_nan() || s <= 0.0 || s.is_infinite() {
        return Err(domain("gamma_pq", format!("shape must be positive and finite, got {s}")));
    }
    if x.is_nan() || x < 0.0 {
        return Err(domain("gamma_pq", format!("argument must be non-negative, got {x}")));
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x.is_infinite() {
        return Ok((1.0, 0.0));
    }
    let ln_prefactor = s * x.ln() - x - ln_gamma(s);
    if x < s + 1.0 {
        let mut term = 1.0 / s;
        let mut sum = term;
        let mut n = 1.0;
        let mut converged = false;
        for _ in 0..MAX_ITER {
            term *= x / (s + n);
            sum += term;
            n += 1.0;
            if term < sum * 1e-17 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Convergence {
                routine: "incomplete gamma series",
                detail: format!("s = {s}, x = {x}"),
            });
        }
        let p = (ln_prefactor + sum.ln()).exp().min(1.0);
        Ok((p, 1.0 - p))
    } else {
        // Modified Lentz evaluation of the continued fraction for Q.
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - s;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        let mut converged = false;
        for i in 1..MAX_ITER {
            let fi = i as f64;
            let an = -fi * (fi - s);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Convergence {
                routine: "incomplete gamma continued fraction",
                detail: format!("s = {s}, x = {x}"),
            });
        }
        let q = (ln_prefactor + h.ln()).exp().min(1.0);
        Ok((1.0 - q, q))
    }
}

/// Upper incomplete gamma `Γ(s, x)` (not regularized).
///
/// Overflows to `inf` once `Γ(s)` does (s ≳ 171); use [`gamma_pq`] for
/// the regularized ratio in that regime.
pub fn upper_incomplete_gamma(s: f64, x: f64) -> Result<f64> {
    let (_, q) = gamma_pq(s, x)?;
    if q == 0.0 {
        return Ok(0.0);
    }
    Ok((q.ln() + ln_gamma(s)).exp())
}

/// `ln I_ν(x)` for real order `ν ≥ 0` and `x ≥ 0`.
pub fn ln_bessel_i(order: f64, x: f64) -> Result<f64> {
    if order.is_nan() || order < 0.0 || order.is_infinite() {
        return Err(domain("bessel_i", format!("order must be finite and non-negative, got {order}")));
    }
    if x.is_nan() || x < 0.0 {
        return Err(domain("bessel_i", format!("argument must be non-negative, got {x}")));
    }
    Ok(ln_bessel_i_unchecked(order, x))
}

/// Modified Bessel function of the first kind, `I_ν(x)`.
///
/// Returns `inf` once the value leaves the `f64` range (x ≳ 713); use
/// [`bessel_i_scaled`] there.
pub fn bessel_i(order: f64, x: f64) -> Result<f64> {
    ln_bessel_i(order, x).map(f64::exp)
}

/// Exponentially scaled `e^{-x} I_ν(x)`, finite for every `x ≥ 0`.
pub fn bessel_i_scaled(order: f64, x: f64) -> Result<f64> {
    ln_bessel_i(order, x).map(|v| (v - x).exp())
}

pub(crate) fn ln_bessel_i_unchecked(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if x.is_infinite() {
        return f64::INFINITY;
    }
    if x >= 30.0 && x >= 1.5 * nu * nu {
        ln_bessel_i_asymptotic(nu, x)
    } else {
        ln_bessel_i_series(nu, x)
    }
}

/// Power series summed outward from its largest term.
fn ln_bessel_i_series(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = half * half;
    let j = 0.5 * ((nu * nu + x * x).sqrt() - nu);
    let k0 = (j - 1.0).max(0.0).floor();
    let ln_peak = (2.0 * k0 + nu) * half.ln() - ln_gamma(k0 + 1.0) - ln_gamma(k0 + nu + 1.0);

    let mut sum = 1.0;
    let mut t = 1.0;
    let mut k = k0;
    loop {
        t *= q / ((k + 1.0) * (k + nu + 1.0));
        sum += t;
        k += 1.0;
        if t < 1e-17 * sum {
            break;
        }
    }
    let mut t = 1.0;
    let mut k = k0;
    while k >= 1.0 {
        t *= k * (k + nu) / q;
        sum += t;
        k -= 1.0;
        if t < 1e-17 * sum {
            break;
        }
    }
    ln_peak + sum.ln()
}

fn ln_bessel_i_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum: f64 = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= -(mu - odd * odd) / (8.0 * kf * x);
        if term == 0.0 || term.abs() < 1e-17 * sum.abs() {
            sum += term;
            break;
        }
        if term.abs() > prev {
            break;
        }
        prev = term.abs();
        sum += term;
    }
    x - 0.5 * (2.0 * std::f64::consts::PI * x).ln() + sum.ln()
}

/// Generalized Marcum Q-function `Q_ν(a, b)` for real order `ν > 0`.
///
/// Small `a·b` uses the Bessel-function series of the complementary
/// probability; large arguments, and the upper tail where `Q` is small, use
/// the Poisson mixture of regularized incomplete gamma functions.
pub fn marcum_q(order: f64, a: f64, b: f64) -> Result<f64> {
    if order.is_nan() || order <= 0.0 || order.is_infinite() {
        return Err(domain("marcum_q", format!("order must be positive and finite, got {order}")));
    }
    if a.is_nan() || a < 0.0 || b.is_nan() || b < 0.0 {
        return Err(domain("marcum_q", format!("arguments must be non-negative, got a = {a}, b = {b}")));
    }
    if b == 0.0 {
        return Ok(1.0);
    }
    if b.is_infinite() {
        return Ok(0.0);
    }
    if a == 0.0 {
        return gamma_pq(order, 0.5 * b * b).map(|(_, q)| q);
    }
    // the Bessel series yields 1 − Q, so it is only used where Q is not small
    if a * b > 30.0 || b * b > a * a + 2.0 * order {
        return poisson_gamma_mixture(order, 0.5 * a * a, 0.5 * b * b).map(|(_, q)| q);
    }
    Ok(1.0 - marcum_p_bessel(order, a, b))
}

/// `1 − Q_ν(a, b) = e^{−(a²+b²)/2} Σ_k (b/a)^{ν+k} I_{ν+k}(ab)`.
fn marcum_p_bessel(nu: f64, a: f64, b: f64) -> f64 {
    let ab = a * b;
    let ln_ratio = b.ln() - a.ln();
    let base = -0.5 * (a * a + b * b);
    let y = 0.5 * b * b;
    let k_cap = (y + 20.0 * y.sqrt() + 200.0) as usize;
    let mut sum = 0.0;
    for k in 0..=k_cap {
        let order = nu + k as f64;
        let t = (base + order * ln_ratio + ln_bessel_i_unchecked(order, ab)).exp();
        sum += t;
        if order > y && t <= 1e-14 * sum {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// `(P, Q)` of `Y = Σ` Poisson(λ)-mixed Gamma(ν + j, 1) evaluated at `y`.
///
/// With `ν = φ/2`, `λ = ψ/2`, `y = z/2` this is the noncentral χ² CDF and
/// survival function at `z`.
pub(crate) fn poisson_gamma_mixture(nu: f64, lambda: f64, y: f64) -> Result<(f64, f64)> {
    if lambda == 0.0 {
        return gamma_pq(nu, y);
    }
    let lower_side = y < nu + lambda;
    let pick = |s: f64| -> Result<f64> {
        let (p, q) = gamma_pq(s, y)?;
        Ok(if lower_side { p } else { q })
    };

    let j0 = lambda.floor();
    let w0 = (-lambda + j0 * lambda.ln() - ln_gamma(j0 + 1.0)).exp();
    let span = (40.0 * lambda.sqrt() + 200.0) as usize;

    let mut sum = w0 * pick(nu + j0)?;
    // upward in j: P-terms shrink, Q-terms grow
    let mut w = w0;
    let mut j = j0;
    for _ in 0..span {
        w *= lambda / (j + 1.0);
        j += 1.0;
        let v = pick(nu + j)?;
        sum += w * v;
        let bound = if lower_side { w * v } else { w };
        if bound <= 1e-17 * sum || w < 1e-300 {
            break;
        }
    }
    let mut w = w0;
    let mut j = j0;
    while j >= 1.0 {
        w *= j / lambda;
        j -= 1.0;
        let v = pick(nu + j)?;
        sum += w * v;
        let bound = if lower_side { w } else { w * v };
        if bound <= 1e-17 * sum || w < 1e-300 {
            break;
        }
    }
    let sum = sum.clamp(0.0, 1.0);
    Ok(if lower_side { (sum, 1.0 - sum) } else { (1.0 - sum, sum) })
}

/// Noncentral chi-squared law `χ²(φ, ψ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoncentralChi2 {
    dof: f64,
    noncentrality: f64,
}

impl NoncentralChi2 {
    pub fn new(dof: f64, noncentrality: f64) -> Result<Self> {
        if !(dof > 0.0) || !dof.is_finite() {
            return Err(invalid("dof", format!("must be positive and finite, got {dof}")));
        }
        if !(noncentrality >= 0.0) || !noncentrality.is_finite() {
            return Err(invalid("noncentrality", format!("must be non-negative and finite, got {noncentrality}")));
        }
        Ok(Self { dof, noncentrality })
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }

    pub fn noncentrality(&self) -> f64 {
        self.noncentrality
    }

    /// `(mean, variance) = (φ + ψ, 2(φ + 2ψ))`.
    pub fn moments(&self) -> (f64, f64) {
        (self.dof + self.noncentrality, 2.0 * (self.dof + 2.0 * self.noncentrality))
    }

    pub fn pdf(&self, z: f64) -> Result<f64> {
        check_support("noncentral_chi2_pdf", z)?;
        let (phi, psi) = (self.dof, self.noncentrality);
        if z.is_infinite() {
            return Ok(0.0);
        }
        if z == 0.0 {
            return Ok(if phi < 2.0 {
                f64::INFINITY
            } else if phi == 2.0 {
                0.5 * (-0.5 * psi).exp()
            } else {
                0.0
            });
        }
        let half_dof = 0.5 * phi;
        if psi == 0.0 {
            let ln_f = (half_dof - 1.0) * (0.5 * z).ln() - 0.5 * z - LN_2 - ln_gamma(half_dof);
            return Ok(ln_f.exp());
        }
        let nu = half_dof - 1.0;
        let arg = (psi * z).sqrt();
        let ln_bessel = ln_bessel_i_unchecked(nu.abs(), arg);
        // I_{-ν} = I_ν for the integer orders reached with φ < 2 even; real
        // φ < 2 is outside the supported family.
        let ln_f = -LN_2 - 0.5 * (z + psi) + 0.5 * nu * (z / psi).ln() + ln_bessel;
        Ok(ln_f.exp())
    }

    pub fn cdf(&self, z: f64) -> Result<f64> {
        self.cdf_sf(z).map(|(p, _)| p)
    }

    pub fn sf(&self, z: f64) -> Result<f64> {
        self.cdf_sf(z).map(|(_, q)| q)
    }

    /// CDF and survival function evaluated together.
    pub fn cdf_sf(&self, z: f64) -> Result<(f64, f64)> {
        check_support("noncentral_chi2_cdf", z)?;
        if z == 0.0 {
            return Ok((0.0, 1.0));
        }
        if z.is_infinite() {
            return Ok((1.0, 0.0));
        }
        if self.noncentrality == 0.0 {
            gamma_pq(0.5 * self.dof, 0.5 * z)
        } else {
            poisson_gamma_mixture(0.5 * self.dof, 0.5 * self.noncentrality, 0.5 * z)
        }
    }
}

fn check_support(func: &'static str, z: f64) -> Result<()> {
    if z.is_nan() || z < 0.0 {
        Err(domain(func, format!("argument must be non-negative, got {z}")))
    } else {
        Ok(())
    }
}

pub fn noncentral_chi2_pdf(z: f64, d: &NoncentralChi2) -> Result<f64> {
    d.pdf(z)
}

pub fn noncentral_chi2_cdf(z: f64, d: &NoncentralChi2) -> Result<f64> {
    d.cdf(z)
}

pub fn noncentral_chi2_moments(d: &NoncentralChi2) -> (f64, f64) {
    d.moments()
}

/// Gamma law with shape `m` and scale `a/m` (mean `a`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaDist {
    shape: f64,
    scale: f64,
}

impl GammaDist {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(invalid("shape", format!("must be positive and finite, got {shape}")));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(invalid("scale", format!("must be positive and finite, got {scale}")));
        }
        Ok(Self { shape, scale })
    }

    /// Shape `m` and mean `a`, the Nakagami-style parameterization.
    pub fn with_mean(shape: f64, mean: f64) -> Result<Self> {
        Self::new(shape, mean / shape)
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn pdf(&self, v: f64) -> Result<f64> {
        check_support("gamma_pdf", v)?;
        let m = self.shape;
        if v == 0.0 {
            return Ok(if m < 1.0 {
                f64::INFINITY
            } else if m == 1.0 {
                1.0 / self.scale
            } else {
                0.0
            });
        }
        let u = v / self.scale;
        Ok(((m - 1.0) * u.ln() - u - ln_gamma(m) - self.scale.ln()).exp())
    }

    pub fn cdf(&self, v: f64) -> Result<f64> {
        check_support("gamma_cdf", v)?;
        gamma_pq(self.shape, v / self.scale).map(|(p, _)| p)
    }
}

pub fn gamma_pdf(v: f64, g: &GammaDist) -> Result<f64> {
    g.pdf(v)
}

pub fn gamma_cdf(v: f64, g: &GammaDist) -> Result<f64> {
    g.cdf(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn log_gamma_known_values() {
        assert_eq!(log_gamma(1.0).unwrap(), 0.0);
        assert_eq!(log_gamma(2.0).unwrap(), 0.0);
        let half = 0.5 * std::f64::consts::PI.ln();
        assert!(rel(log_gamma(0.5).unwrap(), half) < 1e-14);
        // factorial oracle
        let fact9: f64 = (1..=9).map(|k| k as f64).product();
        assert!(rel(log_gamma(10.0).unwrap(), fact9.ln()) < 1e-14);
        let fact170: f64 = (1..=170).map(|k| (k as f64).ln()).sum();
        assert!(rel(log_gamma(171.0).unwrap(), fact170) < 1e-13);
    }

    #[test]
    fn log_gamma_recurrence_across_branches() {
        // ln Γ(x + 1) = ln Γ(x) + ln x across every branch boundary
        for &x in &[1e-3, 0.2, 0.49, 0.5, 0.9, 1.49, 1.5, 2.3, 2.5, 7.7, 9.99, 10.0, 37.5, 999.0] {
            let lhs = log_gamma(x + 1.0).unwrap();
            let rhs = log_gamma(x).unwrap() + f64::ln(x);
            assert!((lhs - rhs).abs() <= 2e-15 * lhs.abs().max(1.0), "x = {x}");
        }
    }

    #[test]
    fn log_gamma_rejects_non_positive() {
        assert!(matches!(log_gamma(0.0), Err(Error::Domain { .. })));
        assert!(matches!(log_gamma(-1.5), Err(Error::Domain { .. })));
        assert!(log_gamma(f64::NAN).is_err());
    }

    #[test]
    fn upper_incomplete_gamma_values() {
        for &x in &[0.0, 0.3, 1.0, 4.0, 30.0] {
            assert!(rel(upper_incomplete_gamma(1.0, x).unwrap(), (-x as f64).exp()) < 1e-14);
        }
        assert!(rel(upper_incomplete_gamma(2.0, 0.0).unwrap(), 1.0) < 1e-15);
        // Γ(3, 2) = 2! e^{-2} (1 + 2 + 2) = 10 e^{-2}
        assert!(rel(upper_incomplete_gamma(3.0, 2.0).unwrap(), 10.0 * (-2.0f64).exp()) < 1e-14);
        assert!(upper_incomplete_gamma(0.0, 1.0).is_err());
        assert!(upper_incomplete_gamma(1.0, -1.0).is_err());
    }

    #[test]
    fn gamma_pq_large_shape_is_complementary() {
        for &(s, x) in &[(5e3, 4.9e3), (5e3, 5.1e3), (2.5e5, 2.5e5), (0.01, 3.0)] {
            let (p, q) = gamma_pq(s, x).unwrap();
            assert!((p + q - 1.0).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn bessel_small_arguments() {
        assert_eq!(bessel_i(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i(1.0, 0.0).unwrap(), 0.0);
        assert!(bessel_i(0.0, -1.0).is_err());
        assert!(bessel_i(-1.0, 1.0).is_err());
    }

    #[test]
    fn bessel_series_and_asymptotic_branches_agree() {
        // evaluate each branch on both sides of the switch
        for &nu in &[0.0, 0.5, 1.0, 3.0, 4.4] {
            for &x in &[30.0, 35.0, 60.0] {
                if x < 1.5 * nu * nu {
                    continue;
                }
                let a = ln_bessel_i_series(nu, x);
                let b = ln_bessel_i_asymptotic(nu, x);
                assert!((a - b).abs() < 1e-12 * a.abs(), "nu = {nu}, x = {x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn marcum_q_edges() {
        assert_eq!(marcum_q(1.0, 5.0, 0.0).unwrap(), 1.0);
        assert!(rel(marcum_q(1.0, 0.0, 2.0).unwrap(), (-2.0f64).exp()) < 1e-14);
        assert!(marcum_q(0.0, 1.0, 1.0).is_err());
        assert!(marcum_q(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn marcum_branches_agree_near_switch() {
        // straddle the a·b = 30 crossover with both paths
        for &nu in &[1.0, 2.0, 4.5, 8.0] {
            for &(a, b) in &[(5.0, 5.9), (6.0, 5.0), (3.0, 9.9), (10.0, 2.9)] {
                let bessel = 1.0 - marcum_p_bessel(nu, a, b);
                let (_, poisson) = poisson_gamma_mixture(nu, 0.5 * a * a, 0.5 * b * b).unwrap();
                assert!((bessel - poisson).abs() < 1e-12, "nu={nu} a={a} b={b}: {bessel} vs {poisson}");
            }
        }
    }

    #[test]
    fn noncentral_moments() {
        let d = NoncentralChi2::new(2.0, 6.0).unwrap();
        assert_eq!(d.moments(), (8.0, 28.0));
        assert_eq!(noncentral_chi2_moments(&NoncentralChi2::new(2.0, 0.0).unwrap()), (2.0, 4.0));
        assert_eq!(NoncentralChi2::new(4.0, 0.0).unwrap().moments(), (4.0, 8.0));
        assert!(NoncentralChi2::new(0.0, 1.0).is_err());
        assert!(NoncentralChi2::new(2.0, -1.0).is_err());
    }

    #[test]
    fn noncentral_cdf_edges() {
        let d = NoncentralChi2::new(4.0, 3.0).unwrap();
        assert_eq!(d.cdf(0.0).unwrap(), 0.0);
        assert!(d.cdf(-1.0).is_err());
        assert!(d.pdf(-1.0).is_err());
        let (m, v) = d.moments();
        let far = m + 40.0 * v.sqrt();
        assert!((1.0 - d.cdf(far).unwrap()) < 1e-9);
    }

    #[test]
    fn gamma_dist_cases() {
        let exp1 = GammaDist::with_mean(1.0, 1.0).unwrap();
        assert_eq!(exp1.cdf(0.0).unwrap(), 0.0);
        for &v in &[0.1, 1.0, 5.0] {
            assert!(rel(exp1.cdf(v).unwrap(), 1.0 - (-v as f64).exp()) < 1e-14);
            assert!(rel(gamma_pdf(v, &exp1).unwrap(), (-v as f64).exp()) < 1e-14);
        }
        // m = 2, a = 2: F(2) = 1 - Γ(2,2)/Γ(2) = 1 - 3e^{-2}
        let g = GammaDist::with_mean(2.0, 2.0).unwrap();
        assert!(rel(gamma_cdf(2.0, &g).unwrap(), 1.0 - 3.0 * (-2.0f64).exp()) < 1e-14);
        assert!(g.cdf(-0.5).is_err());
        assert!(GammaDist::new(0.0, 1.0).is_err());
    }
}
