//! The extended kappa-mu distribution: parameters, envelope PDF/CDF,
//! arbitrary-order moments, SNR-domain PDF/CDF, and the MGF.
//!
//! All densities are assembled in log space and exponentiated last; the
//! Bessel argument grows like `sqrt(k(1+k)) u(1+p) rho` and would overflow
//! any direct evaluation long before the density itself leaves the normal
//! floating-point range.

use crate::error::{Error, Result};
use crate::specfun;
use serde::Serialize;

/// Below this `k` the closed form is numerically indeterminate (a `0 * inf`
/// product between the `k^{-(u(1+p)-2)/4}` prefactor and the Bessel factor);
/// the analytically equivalent Nakagami-m limit takes over.
pub const K_MIN: f64 = 1e-8;

/// Parameter triple of the extended kappa-mu model.
///
/// `k >= 0` is the ratio of dominant-component power to total scattered
/// power, `u > 0` the (real-valued) number of multipath clusters and
/// `p in [0, 1]` the cluster-imbalance factor: the quadrature branch carries
/// `u * p` clusters against the in-phase branch's `u`. At `p = 1` the model
/// reduces to the original kappa-mu distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtKuParams {
    k: f64,
    u: f64,
    p: f64,
}

impl ExtKuParams {
    pub fn new(k: f64, u: f64, p: f64) -> Result<Self> {
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::domain(format!("k must be finite and >= 0, got {k}")));
        }
        if !(u > 0.0) || !u.is_finite() {
            return Err(Error::domain(format!("u must be finite and > 0, got {u}")));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("p must lie in [0, 1], got {p}")));
        }
        Ok(ExtKuParams { k, u, p })
    }

    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn u(&self) -> f64 {
        self.u
    }
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Total cluster count `u(1+p)` across both branches; every statistic of
    /// the normalized envelope depends on `(u, p)` only through this product.
    pub fn cluster_total(&self) -> f64 {
        self.u * (1.0 + self.p)
    }

    /// Order of the Bessel kernel, `u(1+p)/2 - 1`; always `> -1`.
    pub fn bessel_order(&self) -> f64 {
        0.5 * self.cluster_total() - 1.0
    }

    /// Order of the Marcum Q function in the CDF, `u(1+p)/2`.
    pub fn marcum_order(&self) -> f64 {
        0.5 * self.cluster_total()
    }

    /// First Marcum argument, `sqrt(u(1+p)k)`.
    pub fn marcum_a(&self) -> f64 {
        (self.cluster_total() * self.k).sqrt()
    }
}

/// Mean SNR context, strictly linear (never dB).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrContext {
    mean_snr: f64,
}

impl SnrContext {
    pub fn new(mean_snr: f64) -> Result<Self> {
        if !(mean_snr > 0.0) || !mean_snr.is_finite() {
            return Err(Error::domain(format!(
                "mean SNR must be finite and > 0, got {mean_snr}"
            )));
        }
        Ok(SnrContext { mean_snr })
    }

    pub fn mean_snr(&self) -> f64 {
        self.mean_snr
    }
}

/// Coefficients of the normalized-envelope density, precomputed once per
/// parameter set. With `n = u(1+p)`:
/// `f_P(rho) = exp(log_prefactor) * rho^{n/2} * e^{-exp_rate rho^2} * I_nu(bessel_coeff rho)`.
#[derive(Debug, Clone, Copy)]
struct NormalizationConstants {
    log_prefactor: f64,
    exp_rate: f64,
    power_exponent: f64,
    bessel_coeff: f64,
}

impl NormalizationConstants {
    fn from_params(params: &ExtKuParams) -> Result<Self> {
        let k = params.k();
        let n = params.cluster_total();
        debug_assert!(k >= K_MIN);
        let log_prefactor = n.ln() + 0.25 * (n + 2.0) * (1.0 + k).ln()
            - 0.25 * (n - 2.0) * k.ln()
            - 0.5 * n * k;
        Ok(NormalizationConstants {
            log_prefactor,
            exp_rate: 0.5 * (1.0 + k) * n,
            power_exponent: 0.5 * n,
            bessel_coeff: (k * (1.0 + k)).sqrt() * n,
        })
    }
}

/// Density of the normalized envelope `P = R / rms(R)` at `rho >= 0`.
pub fn pdf_envelope(params: &ExtKuParams, rho: f64) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::domain(format!("rho must be >= 0, got {rho}")));
    }
    let n = params.cluster_total();

    if rho == 0.0 {
        // f_P ~ rho^{n-1} near the origin.
        return Ok(match n.partial_cmp(&1.0).unwrap() {
            std::cmp::Ordering::Greater => 0.0,
            std::cmp::Ordering::Less => f64::INFINITY,
            std::cmp::Ordering::Equal => {
                if params.k() < K_MIN {
                    let m = 0.5 * n;
                    (m * m.ln() + 2.0_f64.ln() - specfun::ln_gamma(m)?).exp()
                } else {
                    let c = NormalizationConstants::from_params(params)?;
                    (c.log_prefactor
                        - 0.5 * (0.5 * c.bessel_coeff).ln()
                        - specfun::ln_gamma(0.5)?)
                    .exp()
                }
            }
        });
    }

    if params.k() < K_MIN {
        // Nakagami-m limit with m = u(1+p)/2.
        let m = 0.5 * n;
        let ln_f =
            m * m.ln() + 2.0_f64.ln() - specfun::ln_gamma(m)? + (2.0 * m - 1.0) * rho.ln()
                - m * rho * rho;
        return Ok(ln_f.exp());
    }

    let c = NormalizationConstants::from_params(params)?;
    let arg = c.bessel_coeff * rho;
    let ln_bessel = specfun::bessel_i_scaled_ln(params.bessel_order(), arg)?;
    let ln_f = c.log_prefactor + c.power_exponent * rho.ln() - c.exp_rate * rho * rho
        + arg
        + ln_bessel;
    Ok(ln_f.exp())
}

/// CDF of the normalized envelope:
/// `F_P(rho) = 1 - Q_{u(1+p)/2}(sqrt(u(1+p)k), sqrt(u(1+p)(1+k)) rho)`.
///
/// ```
/// // The Rayleigh limit: F(rho) = 1 - exp(-rho^2).
/// let params = ekmu::ExtKuParams::new(1e-12, 1.0, 1.0).unwrap();
/// let f = ekmu::model::cdf_envelope(&params, 1.0).unwrap();
/// assert!((f - (1.0 - (-1.0_f64).exp())).abs() < 1e-9);
/// ```
pub fn cdf_envelope(params: &ExtKuParams, rho: f64) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::domain(format!("rho must be >= 0, got {rho}")));
    }
    let n = params.cluster_total();
    let b = (n * (1.0 + params.k())).sqrt() * rho;
    let q = specfun::marcum_q(params.marcum_order(), params.marcum_a(), b)?;
    Ok((1.0 - q).clamp(0.0, 1.0))
}

/// Moment `E[P^j]` of the normalized envelope, for real `j > 0`.
///
/// Uses the closed form
/// `e^{-nk/2} Gamma((n+j)/2) / (((1+k)n/2)^{j/2} Gamma(n/2)) * 1F1((n+j)/2; n/2; nk/2)`
/// with `n = u(1+p)`; the `e^{-nk/2}` prefactor is folded into the scaled
/// Kummer evaluation so large `nk` neither overflows nor cancels.
pub fn moment(params: &ExtKuParams, j: f64) -> Result<f64> {
    let n = params.cluster_total();
    if !(j > -n) || !j.is_finite() {
        return Err(Error::domain(format!(
            "moment order must satisfy j > -u(1+p), got {j}"
        )));
    }
    let k = params.k();
    let z = 0.5 * n * k;
    let ln_coeff = specfun::ln_gamma(0.5 * (n + j))?
        - specfun::ln_gamma(0.5 * n)?
        - 0.5 * j * (0.5 * (1.0 + k) * n).ln();
    let scaled_f = specfun::kummer_1f1_scaled(0.5 * (n + j), 0.5 * n, z)?;
    Ok(ln_coeff.exp() * scaled_f)
}

/// Density of the instantaneous SNR at `gamma >= 0` given mean SNR.
pub fn snr_pdf(params: &ExtKuParams, ctx: &SnrContext, gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::domain(format!("gamma must be >= 0, got {gamma}")));
    }
    let n = params.cluster_total();
    let k = params.k();
    let gbar = ctx.mean_snr();

    if gamma == 0.0 {
        // f_Upsilon ~ gamma^{n/2 - 1} near the origin.
        return Ok(match n.partial_cmp(&2.0).unwrap() {
            std::cmp::Ordering::Greater => 0.0,
            std::cmp::Ordering::Less => f64::INFINITY,
            std::cmp::Ordering::Equal => {
                if k < K_MIN {
                    1.0 / gbar
                } else {
                    let c = NormalizationConstants::from_params(params)?;
                    (c.log_prefactor).exp() / (2.0 * gbar)
                }
            }
        });
    }

    if k < K_MIN {
        // Gamma density with shape m = n/2 and mean gbar.
        let m = 0.5 * n;
        let ln_f = m * (m / gbar).ln() + (m - 1.0) * gamma.ln() - m * gamma / gbar
            - specfun::ln_gamma(m)?;
        return Ok(ln_f.exp());
    }

    let arg = n * (k * (1.0 + k) * gamma / gbar).sqrt();
    let ln_bessel = specfun::bessel_i_scaled_ln(params.bessel_order(), arg)?;
    let ln_f = 0.25 * (n + 2.0) * ((1.0 + k) / gbar).ln() + n.ln() - 2.0_f64.ln()
        - 0.25 * (n - 2.0) * (k / gamma).ln()
        - 0.5 * n * k
        - 0.5 * (1.0 + k) * n * gamma / gbar
        + arg
        + ln_bessel;
    Ok(ln_f.exp())
}

/// CDF of the instantaneous SNR at threshold `psi >= 0`; shares the Marcum-Q
/// code path with [`cdf_envelope`] through `F_Upsilon(psi) = F_P(sqrt(psi/gbar))`.
pub fn snr_cdf(params: &ExtKuParams, ctx: &SnrContext, psi: f64) -> Result<f64> {
    if !(psi >= 0.0) {
        return Err(Error::domain(format!("psi must be >= 0, got {psi}")));
    }
    cdf_envelope(params, (psi / ctx.mean_snr()).sqrt())
}

/// Moment generating function of the SNR, `E[e^{-Upsilon t}]` for `t >= 0`:
/// `exp(-u k gbar t (1+p) / (u(1+p)(1+k) + 2 gbar t)) / (1 + 2 gbar t / (u(1+p)(1+k)))^{u(1+p)/2}`.
pub fn mgf(params: &ExtKuParams, ctx: &SnrContext, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    let n = params.cluster_total();
    let k = params.k();
    let gbar = ctx.mean_snr();
    let denom_base = n * (1.0 + k);
    let exponent = -n * k * gbar * t / (denom_base + 2.0 * gbar * t);
    let ln_denom = (2.0 * gbar * t / denom_base).ln_1p();
    (exponent - 0.5 * n * ln_denom).exp()
}
