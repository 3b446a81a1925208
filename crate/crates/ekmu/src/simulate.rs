//! Monte Carlo oracle for the extended kappa-mu model.
//!
//! Samples the generative definition directly: the squared envelope is a sum
//! of `n1` in-phase and `n2` quadrature biased Gaussian squares,
//! `R^2 = sum_i (X_i + w_i)^2 + sum_i (Y_i + q_i)^2`, normalized so that
//! `E[R^2] = 1`. Every Gaussian variate is derived from a stateless
//! counter-based generator keyed by `(seed, sample, component)`, so output is
//! bitwise reproducible regardless of evaluation order or chunking.

use crate::error::{Error, Result};
use crate::model::ExtKuParams;

/// Integerized physical configuration for sampling.
///
/// Invariants tie the fields back to the analytic parameters:
/// `sigma2 = 1 / ((n1+n2)(1+k))` and `d^2 = k/(1+k)`, which make the RMS
/// envelope exactly one, and `p = n2/n1`. The total dominant power `d^2` may
/// be split across clusters arbitrarily; the distribution depends on the
/// split only through `d^2`, and the equal split is the default.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterConfig {
    pub n_inphase: u32,
    pub n_quadrature: u32,
    pub k: f64,
    pub sigma2: f64,
    pub d: f64,
    split: AmplitudeSplit,
}

#[derive(Debug, Clone, PartialEq)]
enum AmplitudeSplit {
    /// Every component carries `d / sqrt(n1 + n2)`.
    Equal,
    /// Explicit per-component amplitudes, in-phase first.
    Custom(Vec<f64>),
}

impl ClusterConfig {
    /// Integerize analytic parameters for sampling. `u` and `u*p` must be
    /// integers (within 1e-9); non-integer parameters have no generative
    /// counterpart and are validated analytically instead.
    pub fn from_params(params: &ExtKuParams) -> Result<Self> {
        let u = params.u();
        let up = params.u() * params.p();
        let n1 = u.round();
        let n2 = up.round();
        if (u - n1).abs() > 1e-9 || n1 < 1.0 {
            return Err(Error::NonIntegerClusters(format!("u = {u}")));
        }
        if (up - n2).abs() > 1e-9 || n2 < 0.0 {
            return Err(Error::NonIntegerClusters(format!("u*p = {up}")));
        }
        let k = params.k();
        let total = n1 + n2;
        Ok(ClusterConfig {
            n_inphase: n1 as u32,
            n_quadrature: n2 as u32,
            k,
            sigma2: 1.0 / (total * (1.0 + k)),
            d: (k / (1.0 + k)).sqrt(),
            split: AmplitudeSplit::Equal,
        })
    }

    /// Same marginal configuration with an explicit dominant-power split.
    /// `amplitudes` has one entry per component (in-phase clusters first)
    /// and must preserve `sum a_i^2 = d^2`.
    pub fn with_amplitudes(mut self, amplitudes: Vec<f64>) -> Result<Self> {
        let total = (self.n_inphase + self.n_quadrature) as usize;
        if amplitudes.len() != total {
            return Err(Error::domain(format!(
                "expected {total} amplitudes, got {}",
                amplitudes.len()
            )));
        }
        let power: f64 = amplitudes.iter().map(|a| a * a).sum();
        if (power - self.d * self.d).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "amplitude split power {power} != d^2 = {}",
                self.d * self.d
            )));
        }
        self.split = AmplitudeSplit::Custom(amplitudes);
        Ok(self)
    }

    fn amplitude(&self, component: usize) -> f64 {
        match &self.split {
            AmplitudeSplit::Equal => {
                self.d / ((self.n_inphase + self.n_quadrature) as f64).sqrt()
            }
            AmplitudeSplit::Custom(a) => a[component],
        }
    }
}

/// Sorted envelope samples with their provenance.
#[derive(Debug, Clone)]
pub struct SampleSet {
    values: Vec<f64>,
    pub seed: u64,
    pub count: usize,
}

impl SampleSet {
    fn new(mut values: Vec<f64>, seed: u64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("sample set must be non-empty"));
        }
        values.sort_unstable_by(|a, b| a.partial_cmp(b).expect("no NaN samples"));
        let count = values.len();
        Ok(SampleSet { values, seed, count })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

// splitmix64 finalizer; full-avalanche mixing of a 64-bit word.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stateless uniform in [0, 1) keyed by (seed, sample index, draw index).
#[inline]
fn uniform(seed: u64, sample: u64, draw: u64) -> f64 {
    let h = mix64(mix64(mix64(seed) ^ sample) ^ draw);
    (h >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0) // 2^-53
}

/// Standard normal keyed by (seed, sample index, component index), via the
/// Box-Muller transform on two counter-derived uniforms.
#[inline]
fn standard_normal(seed: u64, sample: u64, component: u64) -> f64 {
    let u1 = uniform(seed, sample, 2 * component) + (1.0 / 9_007_199_254_740_992.0); // (0, 1]
    let u2 = uniform(seed, sample, 2 * component + 1);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Draw `n` independent envelope samples. Sample `i` depends only on
/// `(seed, i)`, never on how the loop is chunked.
pub fn sample_envelope(config: &ClusterConfig, n: usize, seed: u64) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::domain("sample count must be >= 1"));
    }
    let sigma = config.sigma2.sqrt();
    let total = (config.n_inphase + config.n_quadrature) as usize;
    let amps: Vec<f64> = (0..total).map(|c| config.amplitude(c)).collect();

    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let mut r2 = 0.0;
        for (c, amp) in amps.iter().enumerate() {
            let g = sigma * standard_normal(seed, i as u64, c as u64) + amp;
            r2 += g * g;
        }
        values.push(r2.sqrt());
    }
    SampleSet::new(values, seed)
}

/// Right-continuous empirical CDF: the fraction of samples `<= rho`.
pub fn empirical_cdf(samples: &SampleSet, rho: f64) -> f64 {
    let v = samples.values();
    let idx = v.partition_point(|&x| x <= rho);
    idx as f64 / samples.count as f64
}

/// Kolmogorov-Smirnov distance between the samples and a reference CDF:
/// `sup_i max(|i/n - F(x_i)|, |(i-1)/n - F(x_i)|)` over the sorted samples.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &SampleSet, cdf: F) -> f64 {
    let n = samples.count as f64;
    let mut d = 0.0_f64;
    for (i, &x) in samples.values().iter().enumerate() {
        let f = cdf(x);
        let hi = ((i + 1) as f64 / n - f).abs();
        let lo = (i as f64 / n - f).abs();
        d = d.max(hi).max(lo);
    }
    d
}
