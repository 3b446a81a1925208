//! Shared numerical kernels: adaptive Gauss-Kronrod quadrature on finite and
//! semi-infinite intervals, central differences, and a Nelder-Mead simplex
//! minimizer.
//!
//! These are the engines behind every closed-form cross-check in the crate:
//! quadrature validates the Marcum-Q CDF, the MGF, the ABER series and the
//! effective-rate series; the simplex minimizer drives the CDF fitter.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Default quadrature tolerance.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;
/// Maximum number of panel subdivisions per integral.
pub const MAX_PANELS: usize = 10_000;

/// Outcome of an adaptive quadrature run.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Outcome of a simplex minimization.
#[derive(Debug, Clone)]
pub struct OptimizerResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

// 15-point Kronrod nodes with embedded 7-point Gauss rule (positive half).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_33,
    0.949_107_912_342_758_524_526_189_684_047_85,
    0.864_864_423_359_769_072_789_712_788_640_93,
    0.741_531_185_599_394_439_863_864_773_280_79,
    0.586_087_235_467_691_130_294_144_838_258_73,
    0.405_845_151_377_397_166_906_606_412_076_96,
    0.207_784_955_007_898_467_600_689_403_773_24,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_08,
    0.279_705_391_489_276_667_901_467_771_423_78,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_33,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_2,
    0.104_790_010_322_250_183_839_876_322_541_52,
    0.140_653_259_715_525_918_745_189_590_510_24,
    0.169_004_726_639_267_902_826_583_426_598_55,
    0.190_350_578_064_785_409_913_256_402_421_01,
    0.204_432_940_075_298_892_414_161_999_234_65,
    0.209_482_141_084_727_828_012_999_174_935_53,
];

/// Evaluate the 15-point Gauss-Kronrod rule on `[a, b]`.
/// Returns `(integral, error_estimate)`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut res_kronrod = fc * WGK[7];
    let mut res_gauss = fc * WG[3];
    let mut res_abs = res_kronrod.abs();
    let mut fv = [0.0_f64; 15];
    fv[7] = fc;

    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[j] = f1;
        fv[14 - j] = f2;
        let fsum = f1 + f2;
        res_kronrod += WGK[j] * fsum;
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            // XGK[1], XGK[3], XGK[5] are the Gauss nodes.
            res_gauss += WG[j / 2] * fsum;
        }
    }

    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }

    let value = res_kronrod * half;
    res_abs *= half.abs();
    res_asc *= half.abs();

    // QUADPACK-style error rescaling.
    let raw = ((res_kronrod - res_gauss) * half).abs();
    let mut err = raw;
    if res_asc != 0.0 && raw != 0.0 {
        let scale = (200.0 * raw / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

/// Adaptive Gauss-Kronrod integration of `f` over the finite interval `[a, b]`.
///
/// Bisects the panel with the largest error estimate until the accumulated
/// error falls below `max(tol, tol * |value|)` or the panel budget runs out.
/// Endpoint singularities are tolerated as long as they are integrable: the
/// Kronrod nodes never touch the interval ends.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadratureResult> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::domain(format!(
            "integrate requires finite a < b, got [{a}, {b}]"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("integrate requires tol > 0"));
    }

    let mut evaluations = 15usize;
    let (v0, e0) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        value: v0,
        error: e0,
    });
    let mut total_value = v0;
    let mut total_error = e0;

    let mut splits = 0usize;
    while total_error > tol.max(tol * total_value.abs()) {
        if splits >= MAX_PANELS {
            return Err(Error::QuadratureBudget {
                estimate: total_value,
                error_estimate: total_error,
                evaluations,
            });
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel no longer splittable in floating point; accept as is.
            heap.push(Panel {
                error: 0.0,
                ..worst
            });
            total_error -= worst.error;
            continue;
        }
        let (vl, el) = gk15(&f, worst.a, mid);
        let (vr, er) = gk15(&f, mid, worst.b);
        evaluations += 30;
        splits += 1;
        total_value += vl + vr - worst.value;
        total_error += el + er - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: vl,
            error: el,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: vr,
            error: er,
        });
    }

    if !total_value.is_finite() {
        return Err(Error::domain(
            "integrand produced a non-finite panel value",
        ));
    }
    Ok(QuadratureResult {
        value: total_value,
        error_estimate: total_error,
        evaluations,
    })
}

/// Adaptive integration of `f` over `[a, infinity)`.
///
/// Applies the rational map `x = a + t/(1-t)` onto `t in [0, 1)` and runs the
/// finite-interval routine. The map keeps slowly decaying tails (for example
/// `(1+x)^-A` kernels) resolvable where plain truncation would not be.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    tol: f64,
) -> Result<QuadratureResult> {
    if !a.is_finite() {
        return Err(Error::domain("lower limit must be finite"));
    }
    let g = move |t: f64| -> f64 {
        let one_m_t = 1.0 - t;
        if one_m_t <= f64::EPSILON {
            return 0.0;
        }
        let x = a + t / one_m_t;
        let v = f(x) / (one_m_t * one_m_t);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, tol)
}

/// Symmetric difference quotient `(f(x+h) - f(x-h)) / (2h)`.
pub fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    debug_assert!(h > 0.0);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Nelder-Mead simplex minimization.
///
/// The initial simplex is `x0` plus `x0 + scale * e_i` for every coordinate
/// direction. Standard reflection/expansion/contraction/shrink coefficients
/// (1, 2, 0.5, 0.5). `converged` is set when both the simplex diameter and
/// the best-to-worst value spread fall below `tol`; otherwise the best vertex
/// found within `max_iter` iterations is returned.
///
/// Non-finite objective values are treated as infinitely bad vertices, so the
/// search never leaves the region where the objective is defined.
pub fn minimize<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    scale: f64,
    max_iter: usize,
    tol: f64,
) -> OptimizerResult {
    let n = x0.len();
    assert!(n >= 1, "minimize requires dimension >= 1");
    let eval = |x: &[f64]| -> f64 {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut xi = x0.to_vec();
        xi[i] += if scale != 0.0 { scale } else { 1.0 };
        simplex.push(xi);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x)).collect();

    let mut iterations = 0usize;
    let mut converged = false;

    while iterations < max_iter {
        // Order vertices by value.
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap_or(Ordering::Equal));
        let reordered: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
        let revalued: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
        simplex = reordered;
        values = revalued;

        let spread = values[n] - values[0];
        let diam = simplex[1..]
            .iter()
            .map(|x| {
                x.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= tol && diam <= tol {
            converged = true;
            break;
        }

        iterations += 1;

        // Centroid of all vertices but the worst.
        let mut centroid = vec![0.0; n];
        for x in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi;
            }
        }
        for c in centroid.iter_mut() {
            *c /= n as f64;
        }

        let lerp = |from: &[f64], to: &[f64], t: f64| -> Vec<f64> {
            from.iter()
                .zip(to)
                .map(|(a, b)| a + t * (b - a))
                .collect()
        };

        // Reflection.
        let xr = lerp(&centroid, &simplex[n], -1.0);
        let fr = eval(&xr);
        if fr < values[0] {
            // Expansion.
            let xe = lerp(&centroid, &simplex[n], -2.0);
            let fe = eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        // Contraction (outside if the reflected point improved on the worst).
        let (xc, fc) = if fr < values[n] {
            let xc = lerp(&centroid, &simplex[n], -0.5);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = lerp(&centroid, &simplex[n], 0.5);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        // Shrink toward the best vertex.
        for i in 1..=n {
            simplex[i] = lerp(&simplex[0], &simplex[i], 0.5);
            values[i] = eval(&simplex[i]);
        }
    }

    // Best vertex (order may have changed since the last sort).
    let (best, _) = values
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap_or(Ordering::Equal))
        .expect("non-empty simplex");

    OptimizerResult {
        point: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_polynomial_exactly() {
        let r = integrate(|x| x * x, 0.0, 1.0, 1e-12).unwrap();
        assert_relative_eq!(r.value, 1.0 / 3.0, epsilon = 1e-12);
        assert!(r.evaluations >= 15);
        // GK15 is exact on polynomials to high degree: one panel suffices.
        let r7 = integrate(|x| x.powi(7) - 3.0 * x.powi(4) + x, -1.0, 2.0, 1e-12).unwrap();
        let exact = (2.0f64.powi(8) - 1.0) / 8.0 - 3.0 * (2.0f64.powi(5) + 1.0) / 5.0
            + (4.0 - 1.0) / 2.0;
        assert_relative_eq!(r7.value, exact, epsilon = 1e-12);
    }

    #[test]
    fn integrates_sin() {
        let r = integrate(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert_relative_eq!(r.value, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn integrates_endpoint_singularity() {
        let r = integrate(|x| x.powf(-0.5), 0.0, 1.0, 1e-9).unwrap();
        assert_relative_eq!(r.value, 2.0, epsilon = 1e-8);
    }

    #[test]
    fn additivity_of_panels() {
        let f = |x: f64| (x * 1.7).cos() * (-0.3 * x).exp();
        let whole = integrate(f, 0.0, 5.0, 1e-12).unwrap();
        let left = integrate(f, 0.0, 2.0, 1e-12).unwrap();
        let right = integrate(f, 2.0, 5.0, 1e-12).unwrap();
        assert_relative_eq!(whole.value, left.value + right.value, epsilon = 1e-11);
    }

    #[test]
    fn rejects_bad_interval() {
        assert!(integrate(|x| x, 1.0, 0.0, 1e-10).is_err());
        assert!(integrate(|x| x, 0.0, f64::INFINITY, 1e-10).is_err());
    }

    #[test]
    fn semi_infinite_exponential() {
        let r = integrate_semi_infinite(|x| (-x).exp(), 0.0, 1e-11).unwrap();
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn semi_infinite_gaussian_moment() {
        let r = integrate_semi_infinite(|x| x * (-x * x).exp(), 0.0, 1e-11).unwrap();
        assert_relative_eq!(r.value, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn semi_infinite_gamma_integral() {
        let r = integrate_semi_infinite(|x| (-x).exp() * x.powi(3), 0.0, 1e-10).unwrap();
        assert_relative_eq!(r.value, 6.0, epsilon = 1e-9);
    }

    #[test]
    fn semi_infinite_matches_truncation_plus_tail() {
        // For an exp-dominated integrand, [0, T] plus the analytic tail bound
        // must agree with the transformed integral.
        let t = 30.0;
        let full = integrate_semi_infinite(|x| (-x).exp(), 0.0, 1e-11).unwrap();
        let head = integrate(|x| (-x).exp(), 0.0, t, 1e-11).unwrap();
        let tail = (-t).exp();
        assert!((full.value - (head.value + tail)).abs() < 2.0 * 1e-10);
    }

    #[test]
    fn minimize_quadratic_1d() {
        let r = minimize(|x| (x[0] - 2.0) * (x[0] - 2.0), &[0.0], 0.5, 500, 1e-10);
        assert!(r.converged);
        assert!((r.point[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn minimize_anisotropic_quadratic() {
        let r = minimize(
            |x| x[0] * x[0] + 10.0 * x[1] * x[1],
            &[3.0, 3.0],
            0.5,
            1000,
            1e-12,
        );
        assert!(r.converged);
        assert!(r.point[0].abs() < 1e-5 && r.point[1].abs() < 1e-5);
    }

    #[test]
    fn minimize_rosenbrock() {
        let rosen = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let r = minimize(rosen, &[-1.2, 1.0], 0.5, 4000, 1e-12);
        assert!(
            (r.point[0] - 1.0).abs() < 1e-3 && (r.point[1] - 1.0).abs() < 1e-3,
            "got {:?}",
            r.point
        );
    }

    #[test]
    fn minimize_never_worse_than_start() {
        let f = |x: &[f64]| x[0].sin() + 0.1 * x[0] * x[0];
        let f0 = f(&[2.0]);
        let r = minimize(f, &[2.0], 0.3, 50, 1e-8);
        assert!(r.value <= f0);
        assert_relative_eq!(r.value, f(&r.point), epsilon = 1e-14);
    }

    #[test]
    fn central_diff_examples() {
        assert!((central_diff(|x| x * x, 3.0, 1e-4) - 6.0).abs() < 1e-7);
        assert!((central_diff(|x| x.sin(), 0.0, 1e-5) - 1.0).abs() < 1e-9);
        let e = std::f64::consts::E;
        assert!((central_diff(|x| x.exp(), 1.0, 1e-5) - e).abs() < 1e-8);
    }
}
