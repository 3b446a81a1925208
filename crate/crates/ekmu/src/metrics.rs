//! Link-performance metrics on top of the model statistics: amount of
//! fading, outage probability, average bit error rate of coherent binary
//! modulations, and the effective rate under a statistical QoS constraint.

use crate::error::{Error, Result};
use crate::model::{self, ExtKuParams, SnrContext};
use crate::numerics::{integrate, integrate_semi_infinite};
use crate::specfun;
use serde::Serialize;

/// Detection constant of a coherent binary modulation: the ABER is
/// `(1/pi) \int_0^{pi/2} M_Upsilon(g / sin^2 theta) d theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationScheme {
    g: f64,
}

impl ModulationScheme {
    /// Binary phase shift keying, `g = 1`.
    pub const BPSK: ModulationScheme = ModulationScheme { g: 1.0 };
    /// Binary frequency shift keying, `g = 0.5`.
    pub const BFSK: ModulationScheme = ModulationScheme { g: 0.5 };
    /// Minimum-correlation BPSK, `g = 0.715`.
    pub const MC_BPSK: ModulationScheme = ModulationScheme { g: 0.715 };

    pub fn with_g(g: f64) -> Result<Self> {
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::domain(format!("detection constant g must be > 0, got {g}")));
        }
        Ok(ModulationScheme { g })
    }

    pub fn g(&self) -> f64 {
        self.g
    }
}

/// QoS aggregate `A = theta T B_c / ln 2`; only the product enters any
/// formula, so the individual factors are not modeled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QosParams {
    a_qos: f64,
}

impl QosParams {
    pub fn new(a_qos: f64) -> Result<Self> {
        if !(a_qos > 0.0) || !a_qos.is_finite() {
            return Err(Error::domain(format!("a_qos must be > 0, got {a_qos}")));
        }
        Ok(QosParams { a_qos })
    }

    pub fn a_qos(&self) -> f64 {
        self.a_qos
    }
}

/// How an ABER value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AberMethod {
    Series,
    Quadrature,
}

/// ABER result. `series_admissible` records whether the closed-form series
/// converges for these inputs (`A_ber / G < 1` with `A_ber = u(1+p)(1+k)`,
/// `G = 2 gbar g`); when it does not, the series entry point falls back to
/// quadrature and says so here.
#[derive(Debug, Clone, Copy)]
pub struct AberReport {
    pub value: f64,
    pub method: AberMethod,
    pub series_admissible: bool,
}

/// How an effective-rate value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RateMethod {
    Series,
    Quadrature,
}

/// Effective-rate result; `method` flags a fallback to direct quadrature of
/// the defining integral when the series path fails.
#[derive(Debug, Clone, Copy)]
pub struct EffectiveRateReport {
    pub value: f64,
    pub method: RateMethod,
}

/// Amount of fading `AF = 2(1+2k) / (u(1+p)(1+k)^2)`; strictly decreasing in
/// both `u` and `p`.
pub fn amount_of_fading(params: &ExtKuParams) -> f64 {
    let k = params.k();
    let n = params.cluster_total();
    2.0 * (1.0 + 2.0 * k) / (n * (1.0 + k) * (1.0 + k))
}

/// Outage probability `P_o(psi) = F_Upsilon(psi)`.
pub fn outage(params: &ExtKuParams, ctx: &SnrContext, psi: f64) -> Result<f64> {
    model::snr_cdf(params, ctx, psi)
}

fn aber_ratio(params: &ExtKuParams, ctx: &SnrContext, scheme: &ModulationScheme) -> f64 {
    // A_ber / G = u(1+p)(1+k) / (2 gbar g)
    params.cluster_total() * (1.0 + params.k()) / (2.0 * ctx.mean_snr() * scheme.g())
}

/// ABER by direct quadrature of `(1/pi) \int_0^{pi/2} M(g/sin^2 theta) d theta`.
///
/// The MGF closed form is continuous and bounded on the whole interval (it
/// tends to `e^{-u(1+p)k/2} * 0` as `theta -> 0`), so no endpoint treatment
/// is needed beyond the open quadrature rule.
pub fn aber_quadrature(
    params: &ExtKuParams,
    ctx: &SnrContext,
    scheme: &ModulationScheme,
) -> Result<AberReport> {
    let g = scheme.g();
    let q = integrate(
        |theta: f64| {
            let s = theta.sin();
            model::mgf(params, ctx, g / (s * s))
        },
        0.0,
        std::f64::consts::FRAC_PI_2,
        1e-12,
    )?;
    let value = (q.value / std::f64::consts::PI).clamp(0.0, 0.5);
    Ok(AberReport {
        value,
        method: AberMethod::Quadrature,
        series_admissible: aber_ratio(params, ctx, scheme) < 1.0,
    })
}

/// `2F1(M, M+0.5; M+1; -r)` for `r > 0`, evaluated through the Pfaff
/// transformation `(1+r)^{-M} 2F1(M, 0.5; M+1; r/(1+r))` whose series has
/// positive decaying terms for any `M > 0`, `0 < r < 1`.
fn gauss_2f1_neg_stable(m: f64, r: f64) -> Result<f64> {
    let v = r / (1.0 + r);
    Ok((1.0 + r).powf(-m) * specfun::gauss_2f1(m, 0.5, m + 1.0, v)?)
}

/// ABER by the closed-form series.
///
/// The closed form is the Horn Psi1 expression
/// `(A/G)^C B(0.5, C+0.5)/(2 pi) * Psi1(C, C+0.5; C+1, C; -A/G, -u(1+p)k/2)`
/// with `C = u(1+p)/2`, admissible for `A/G < 1`. Expanding the Psi1 series
/// along its second variable and applying the Kummer transformation term by
/// term turns it into a Poisson mixture over `j` of single-2F1 terms,
/// `sum_j e^{-L} L^j / j! * (A/G)^{C+j} B(0.5, C+j+0.5)/(2 pi) * 2F1(C+j, C+j+0.5; C+j+1; -A/G)`
/// with `L = u(1+p)k/2`. That rearrangement is exact and keeps every term
/// positive, where the raw double series alternates in its second variable
/// and loses `~e^{2L}` digits to cancellation for strong dominant components.
///
/// Outside the admissible region this falls back to [`aber_quadrature`] and
/// flags it in the report.
pub fn aber_series(
    params: &ExtKuParams,
    ctx: &SnrContext,
    scheme: &ModulationScheme,
) -> Result<AberReport> {
    let r = aber_ratio(params, ctx, scheme);
    if r >= 1.0 {
        let mut report = aber_quadrature(params, ctx, scheme)?;
        report.series_admissible = false;
        return Ok(report);
    }

    let c = params.marcum_order();
    let lambda = 0.5 * params.cluster_total() * params.k();
    let rel_tol = 1e-14;

    // Single Nakagami-shape component of order m = c + j.
    let component = |m: f64| -> Result<f64> {
        let ln_w = m * r.ln() + specfun::ln_beta(0.5, m + 0.5)?;
        Ok(ln_w.exp() * gauss_2f1_neg_stable(m, r)? / (2.0 * std::f64::consts::PI))
    };

    let mut sum;
    if lambda == 0.0 {
        sum = component(c)?;
    } else {
        // Poisson sweep from the mode, exactly as in the Marcum evaluation;
        // components decrease in j, so the residual mass bounds the tail.
        let n0 = lambda.floor() as u64;
        let w0 = (-lambda + n0 as f64 * lambda.ln() - specfun::ln_gamma(n0 as f64 + 1.0)?).exp();
        let comp0 = component(c + n0 as f64)?;
        sum = w0 * comp0;
        let mut wsum = w0;

        let mut w = w0;
        let mut n = n0;
        let mut last_comp = comp0;
        while (1.0 - wsum) * last_comp > rel_tol * sum {
            n += 1;
            w *= lambda / n as f64;
            last_comp = component(c + n as f64)?;
            sum += w * last_comp;
            wsum += w;
            if w < f64::MIN_POSITIVE && n as f64 > lambda {
                break;
            }
            if n > n0 + 100_000 {
                return Err(Error::SeriesBudget {
                    terms: (n - n0) as usize,
                    context: "ABER Poisson mixture".into(),
                });
            }
        }
        // Components grow toward j = 0, so the remaining-mass bound must be
        // value-scaled: with every component <= 1/2, the unvisited tail is
        // below (1 - wsum)/2. Where A/G is small the value mass sits far
        // below the Poisson mode and this runs all the way down.
        let mut w_down = w0;
        let mut n = n0;
        while n > 0 && (1.0 - wsum) * 0.5 > rel_tol * sum {
            w_down *= n as f64 / lambda;
            n -= 1;
            sum += w_down * component(c + n as f64)?;
            wsum += w_down;
        }
    }

    Ok(AberReport {
        value: sum.clamp(0.0, 0.5),
        method: AberMethod::Series,
        series_admissible: true,
    })
}

/// The literal prefactor-times-Psi1 closed form. Exposed for verification:
/// it must (and does) agree with [`aber_series`], but the raw double series
/// cancels catastrophically once `u(1+p)k/2` grows past ~15, so production
/// code uses the mixture rearrangement instead.
pub fn aber_psi1_closed_form(
    params: &ExtKuParams,
    ctx: &SnrContext,
    scheme: &ModulationScheme,
) -> Result<f64> {
    let r = aber_ratio(params, ctx, scheme);
    if r >= 1.0 {
        return Err(Error::domain(format!(
            "Psi1 ABER form requires A_ber/G < 1, got {r}"
        )));
    }
    let c = params.marcum_order();
    let y = -0.5 * params.cluster_total() * params.k();
    let psi = specfun::horn_psi1(
        c,
        c + 0.5,
        c + 1.0,
        c,
        -r,
        y,
        specfun::SeriesControl::default(),
    )?;
    Ok(r.powf(c) * specfun::beta(0.5, c + 0.5)? / (2.0 * std::f64::consts::PI) * psi)
}

/// ABER with automatic method selection: the series where admissible,
/// quadrature otherwise.
pub fn aber(params: &ExtKuParams, ctx: &SnrContext, scheme: &ModulationScheme) -> Result<AberReport> {
    aber_series(params, ctx, scheme)
}

/// Effective rate `R = -(1/A) log2 E[(1+Upsilon)^{-A}]` by direct quadrature
/// of the defining integral; the authoritative route.
pub fn effective_rate_quadrature(
    params: &ExtKuParams,
    ctx: &SnrContext,
    qos: &QosParams,
) -> Result<f64> {
    let a = qos.a_qos();
    let q = integrate_semi_infinite(
        |gamma: f64| {
            if gamma < 0.0 {
                return 0.0;
            }
            (-a * gamma.ln_1p()).exp() * model::snr_pdf(params, ctx, gamma).unwrap_or(0.0)
        },
        0.0,
        1e-12,
    )?;
    if !(q.value > 0.0) {
        return Err(Error::domain(
            "effective-rate integral evaluated non-positive",
        ));
    }
    Ok(-q.value.log2() / a)
}

/// Effective rate via the Tricomi-U series.
///
/// With `n = u(1+p)`, `F = n/2`, `E = k(1+k)n^2/(4 gbar)`, `H = (1+k)n/(2 gbar)`
/// and `L = nk/2`, the defining integral collapses to
/// `E[(1+Upsilon)^{-A}] = H^F e^{-L} sum_m (E^m/m!) U(m+F; m+F+1-A; H)`;
/// all terms are positive and decay like a Poisson tail in `E/H = L`.
/// Series or Tricomi failures fall back to quadrature, flagged in the report.
pub fn effective_rate(
    params: &ExtKuParams,
    ctx: &SnrContext,
    qos: &QosParams,
) -> Result<EffectiveRateReport> {
    match effective_rate_series(params, ctx, qos) {
        Ok(value) => Ok(EffectiveRateReport {
            value,
            method: RateMethod::Series,
        }),
        Err(_) => Ok(EffectiveRateReport {
            value: effective_rate_quadrature(params, ctx, qos)?,
            method: RateMethod::Quadrature,
        }),
    }
}

fn effective_rate_series(params: &ExtKuParams, ctx: &SnrContext, qos: &QosParams) -> Result<f64> {
    let n = params.cluster_total();
    let k = params.k();
    let gbar = ctx.mean_snr();
    let a = qos.a_qos();

    let f_shape = 0.5 * n;
    let e_coef = k * (1.0 + k) * n * n / (4.0 * gbar);
    let h_rate = (1.0 + k) * n / (2.0 * gbar);
    let lambda = 0.5 * n * k;

    if e_coef.ln() * 64.0 > 700.0 + specfun::ln_gamma(65.0)? {
        // E^m/m! would overflow double precision mid-sum.
        return Err(Error::domain("effective-rate series coefficient overflow"));
    }

    let mut sum = 0.0_f64;
    let mut ln_coef = 0.0_f64; // ln(E^m / m!)
    let mut small_streak = 0;
    const MAX_TERMS: usize = 600;
    for m in 0..MAX_TERMS {
        let mf = m as f64;
        if m > 0 {
            ln_coef += e_coef.ln() - mf.ln();
        }
        let u_val = specfun::tricomi_u(mf + f_shape, mf + f_shape + 1.0 - a, h_rate)?;
        let term = (ln_coef + u_val.ln()).exp();
        if !term.is_finite() {
            return Err(Error::domain("effective-rate series term overflow"));
        }
        sum += term;
        if m > 0 && term < 1e-14 * sum {
            small_streak += 1;
            if small_streak >= 3 {
                let ln_integral = f_shape * h_rate.ln() - lambda + sum.ln();
                let rate = -ln_integral / (a * std::f64::consts::LN_2);
                if !(rate.is_finite() && rate >= 0.0) {
                    return Err(Error::domain("effective-rate series produced invalid rate"));
                }
                return Ok(rate);
            }
        } else {
            small_streak = 0;
        }
    }
    Err(Error::SeriesBudget {
        terms: MAX_TERMS,
        context: "effective-rate Tricomi series".into(),
    })
}
