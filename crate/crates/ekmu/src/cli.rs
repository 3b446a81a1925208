//! Command-line front end: curve tabulation, metric sweeps, Monte Carlo
//! simulation, and CDF fitting, emitting CSV/JSON for plotting and pipelines.
//!
//! Conventions: SNR and threshold flags are accepted in dB (`--snr-db`,
//! `--threshold-db`) or linear (`--snr`, `--threshold`), mutually exclusive;
//! the dB-to-linear conversion `10^(dB/10)` happens exactly once, at flag
//! parse time. All values print with 12 significant digits so output is
//! byte-stable for regression comparison. Exit codes: 0 ok, 2 usage/domain,
//! 3 I/O, 4 numerical failure.

use crate::error::Error;
use crate::fit::{self, ModelKind};
use crate::metrics::{self, AberMethod, ModulationScheme, QosParams};
use crate::model::{self, ExtKuParams, SnrContext};
use crate::simulate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::io::Write;
use std::str::FromStr;

/// Environment variable consulted for the default seed when `--seed` is
/// absent; missing both means seed 0.
pub const SEED_ENV_VAR: &str = "EKMU_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "ekmu",
    version,
    about = "Extended kappa-mu fading model: statistics, link metrics, simulation, and fitting"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the envelope PDF or CDF on an evenly spaced grid.
    Curve(CurveArgs),
    /// Link-performance metrics.
    #[command(subcommand)]
    Metric(MetricCommand),
    /// Monte Carlo envelope sampling and KS verification.
    Simulate(SimulateArgs),
    /// Fit the model CDF to empirical data.
    Fit(FitArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Quantity {
    Pdf,
    Cdf,
}

#[derive(Debug, Args)]
pub struct ModelFlags {
    /// Dominant-to-scattered power ratio k >= 0.
    #[arg(long)]
    pub k: f64,
    /// Multipath-cluster number u > 0.
    #[arg(long)]
    pub u: f64,
    /// Cluster-imbalance factor p in [0, 1].
    #[arg(long)]
    pub p: f64,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub model: ModelFlags,
    #[arg(long, value_enum)]
    pub quantity: Quantity,
    #[arg(long, default_value_t = 0.0)]
    pub x_min: f64,
    #[arg(long)]
    pub x_max: f64,
    #[arg(long)]
    pub points: usize,
}

#[derive(Debug, Subcommand)]
pub enum MetricCommand {
    /// Amount of fading.
    Af(AfArgs),
    /// Outage probability over a threshold sweep.
    Outage(OutageArgs),
    /// Average bit error rate of a coherent binary scheme over an SNR sweep.
    Aber(AberArgs),
    /// Effective rate under a QoS constraint over an SNR sweep.
    Effrate(EffrateArgs),
}

#[derive(Debug, Args)]
pub struct AfArgs {
    #[command(flatten)]
    pub model: ModelFlags,
}

#[derive(Debug, Args)]
pub struct OutageArgs {
    #[command(flatten)]
    pub model: ModelFlags,
    /// Mean SNR in dB.
    #[arg(long, conflicts_with = "snr", allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    /// Mean SNR, linear.
    #[arg(long)]
    pub snr: Option<f64>,
    /// Threshold sweep in dB: `min:max:step` or a single value.
    #[arg(long, conflicts_with = "threshold", allow_hyphen_values = true)]
    pub threshold_db: Option<Sweep>,
    /// Threshold sweep, linear.
    #[arg(long)]
    pub threshold: Option<Sweep>,
}

#[derive(Debug, Args)]
pub struct AberArgs {
    #[command(flatten)]
    pub model: ModelFlags,
    /// Detection constant (1 BPSK, 0.5 BFSK, 0.715 MC-BPSK).
    #[arg(long, default_value_t = 1.0)]
    pub g: f64,
    /// Mean SNR sweep in dB: `min:max:step` or a single value.
    #[arg(long, conflicts_with = "snr", allow_hyphen_values = true)]
    pub snr_db: Option<Sweep>,
    /// Mean SNR sweep, linear.
    #[arg(long)]
    pub snr: Option<Sweep>,
}

#[derive(Debug, Args)]
pub struct EffrateArgs {
    #[command(flatten)]
    pub model: ModelFlags,
    /// QoS aggregate A = theta*T*B_c/ln 2.
    #[arg(long)]
    pub a_qos: f64,
    #[arg(long, conflicts_with = "snr", allow_hyphen_values = true)]
    pub snr_db: Option<Sweep>,
    #[arg(long)]
    pub snr: Option<Sweep>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelFlags,
    #[arg(long)]
    pub samples: usize,
    /// RNG seed; falls back to $EKMU_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Emit a JSON KS report against the analytic CDF instead of samples.
    #[arg(long)]
    pub ks: bool,
    /// With --ks: compare the analytic CDF against this rho,cdf file instead
    /// of freshly drawn samples.
    #[arg(long)]
    pub input: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FitModel {
    Extku,
    Ku,
    Both,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Input CSV with header `rho,cdf`.
    #[arg(long)]
    pub input: String,
    #[arg(long, value_enum, default_value_t = FitModel::Both)]
    pub model: FitModel,
    #[arg(long, default_value_t = 32)]
    pub starts: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<String>,
}

/// `min:max:step` sweep (inclusive) or a single value.
#[derive(Debug, Clone)]
pub struct Sweep(pub Vec<f64>);

impl FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.len() {
            1 => {
                let v: f64 = parts[0].parse().map_err(|_| format!("bad number '{s}'"))?;
                Ok(Sweep(vec![v]))
            }
            3 => {
                let lo: f64 = parts[0].parse().map_err(|_| format!("bad sweep min in '{s}'"))?;
                let hi: f64 = parts[1].parse().map_err(|_| format!("bad sweep max in '{s}'"))?;
                let step: f64 =
                    parts[2].parse().map_err(|_| format!("bad sweep step in '{s}'"))?;
                if !(step > 0.0) || hi < lo {
                    return Err(format!("sweep '{s}' needs min <= max and step > 0"));
                }
                let mut vals = Vec::new();
                let mut i = 0u64;
                loop {
                    let v = lo + i as f64 * step;
                    if v > hi + step * 1e-9 {
                        break;
                    }
                    vals.push(v);
                    i += 1;
                }
                Ok(Sweep(vals))
            }
            _ => Err(format!("expected 'value' or 'min:max:step', got '{s}'")),
        }
    }
}

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

fn classify(err: Error) -> Failure {
    let code = match &err {
        Error::Domain(_) | Error::NonIntegerClusters(_) | Error::InvalidData(_) => 2,
        Error::Io { .. } => 3,
        Error::QuadratureBudget { .. } | Error::SeriesBudget { .. } | Error::FitFailed { .. } => 4,
    };
    Failure {
        code,
        message: err.to_string(),
    }
}

/// 12 significant digits, plain decimal where readable, scientific otherwise.
pub fn fmt12(v: f64) -> String {
    if v == 0.0 {
        return "0.000000000000".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.11e}")
    }
}

fn db_to_linear(db: f64) -> f64 {
    10.0_f64.powf(db / 10.0)
}

fn params_from(flags: &ModelFlags) -> Result<ExtKuParams, Failure> {
    ExtKuParams::new(flags.k, flags.u, flags.p).map_err(classify)
}

fn seed_or_default(seed: Option<u64>) -> u64 {
    seed.or_else(|| {
        std::env::var(SEED_ENV_VAR)
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(0)
}

/// Resolve an SNR sweep given the mutually exclusive dB/linear flags.
/// Returns `(x-column name, x display values, linear values)`.
fn resolve_sweep(
    db: Option<Sweep>,
    linear: Option<Sweep>,
    db_name: &str,
    lin_name: &str,
) -> Result<(String, Vec<f64>, Vec<f64>), Failure> {
    match (db, linear) {
        (Some(s), None) => {
            let lin = s.0.iter().map(|&v| db_to_linear(v)).collect();
            Ok((db_name.into(), s.0, lin))
        }
        (None, Some(s)) => Ok((lin_name.into(), s.0.clone(), s.0)),
        (None, None) => Err(Failure::usage(format!(
            "exactly one of --{db_name} or --{lin_name} is required",
            db_name = db_name.replace('_', "-"),
            lin_name = lin_name
        ))),
        (Some(_), Some(_)) => Err(Failure::usage("dB and linear flags are mutually exclusive")),
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), Failure> {
    match &cli.command {
        Command::Curve(args) => cmd_curve(args, out),
        Command::Metric(m) => match m {
            MetricCommand::Af(args) => cmd_af(args, out),
            MetricCommand::Outage(args) => cmd_outage(args, out),
            MetricCommand::Aber(args) => cmd_aber(args, out),
            MetricCommand::Effrate(args) => cmd_effrate(args, out),
        },
        Command::Simulate(args) => cmd_simulate(args, out),
        Command::Fit(args) => cmd_fit(args, out),
    }
}

fn write_line(out: &mut dyn Write, line: &str) -> Result<(), Failure> {
    writeln!(out, "{line}").map_err(|e| Failure {
        code: 3,
        message: format!("write failed: {e}"),
    })
}

fn cmd_curve(args: &CurveArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let params = params_from(&args.model)?;
    if args.points < 2 {
        return Err(Failure::usage("--points must be >= 2"));
    }
    if !(args.x_min < args.x_max) {
        return Err(Failure::usage("--x-min must be < --x-max"));
    }
    if args.x_min < 0.0 {
        return Err(Failure::usage("envelope grid must be non-negative"));
    }
    let name = match args.quantity {
        Quantity::Pdf => "pdf",
        Quantity::Cdf => "cdf",
    };
    write_line(out, &format!("rho,{name}"))?;
    for i in 0..args.points {
        let x = args.x_min
            + (args.x_max - args.x_min) * i as f64 / (args.points - 1) as f64;
        let v = match args.quantity {
            Quantity::Pdf => model::pdf_envelope(&params, x),
            Quantity::Cdf => model::cdf_envelope(&params, x),
        }
        .map_err(classify)?;
        write_line(out, &format!("{},{}", fmt12(x), fmt12(v)))?;
    }
    Ok(())
}

fn cmd_af(args: &AfArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let params = params_from(&args.model)?;
    write_line(out, &fmt12(metrics::amount_of_fading(&params)))
}

fn cmd_outage(args: &OutageArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let params = params_from(&args.model)?;
    let mean_snr = match (args.snr_db, args.snr) {
        (Some(db), None) => db_to_linear(db),
        (None, Some(lin)) => lin,
        _ => return Err(Failure::usage("exactly one of --snr-db or --snr is required")),
    };
    let ctx = SnrContext::new(mean_snr).map_err(classify)?;
    let (col, display, linear) = resolve_sweep(
        args.threshold_db.clone(),
        args.threshold.clone(),
        "threshold_db",
        "threshold",
    )?;
    write_line(out, &format!("{col},outage"))?;
    for (x, psi) in display.iter().zip(&linear) {
        let po = metrics::outage(&params, &ctx, *psi).map_err(classify)?;
        write_line(out, &format!("{},{}", fmt12(*x), fmt12(po)))?;
    }
    Ok(())
}

fn cmd_aber(args: &AberArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let params = params_from(&args.model)?;
    let scheme = ModulationScheme::with_g(args.g).map_err(classify)?;
    let (col, display, linear) =
        resolve_sweep(args.snr_db.clone(), args.snr.clone(), "snr_db", "snr")?;
    write_line(out, &format!("{col},aber,method"))?;
    for (x, gbar) in display.iter().zip(&linear) {
        let ctx = SnrContext::new(*gbar).map_err(classify)?;
        let report = metrics::aber(&params, &ctx, &scheme).map_err(classify)?;
        let method = match report.method {
            AberMethod::Series => "series",
            AberMethod::Quadrature => "quadrature",
        };
        write_line(
            out,
            &format!("{},{},{}", fmt12(*x), fmt12(report.value), method),
        )?;
    }
    Ok(())
}

fn cmd_effrate(args: &EffrateArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let params = params_from(&args.model)?;
    let qos = QosParams::new(args.a_qos).map_err(classify)?;
    let (col, display, linear) =
        resolve_sweep(args.snr_db.clone(), args.snr.clone(), "snr_db", "snr")?;
    write_line(out, &format!("{col},effective_rate"))?;
    for (x, gbar) in display.iter().zip(&linear) {
        let ctx = SnrContext::new(*gbar).map_err(classify)?;
        let report = metrics::effective_rate(&params, &ctx, &qos).map_err(classify)?;
        write_line(out, &format!("{},{}", fmt12(*x), fmt12(report.value)))?;
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let params = params_from(&args.model)?;

    if let Some(path) = &args.input {
        if !args.ks {
            return Err(Failure::usage("--input requires --ks"));
        }
        let data = fit::load_cdf_csv(path).map_err(classify)?;
        let gap = data
            .points()
            .iter()
            .map(|&(rho, f)| {
                model::cdf_envelope(&params, rho)
                    .map(|m| (m - f).abs())
                    .unwrap_or(f64::NAN)
            })
            .fold(0.0_f64, f64::max);
        let report = json!({ "n": data.len(), "ks": gap, "threshold": null });
        return write_line(out, &report.to_string());
    }

    let config = simulate::ClusterConfig::from_params(&params).map_err(classify)?;
    if args.samples == 0 {
        return Err(Failure::usage("--samples must be >= 1"));
    }
    let seed = seed_or_default(args.seed);
    let set = simulate::sample_envelope(&config, args.samples, seed).map_err(classify)?;

    if args.ks {
        let ks = simulate::ks_distance(&set, |rho| {
            model::cdf_envelope(&params, rho).unwrap_or(f64::NAN)
        });
        let threshold = 1.95 / (args.samples as f64).sqrt();
        let report = json!({ "n": args.samples, "ks": ks, "threshold": threshold });
        write_line(out, &report.to_string())
    } else {
        write_line(out, "sample")?;
        for v in set.values() {
            write_line(out, &fmt12(*v))?;
        }
        Ok(())
    }
}

fn fit_result_json(r: &fit::FitResult, curve: &[(f64, f64)]) -> serde_json::Value {
    json!({
        "model_kind": match r.model_kind { ModelKind::ExtKu => "ext_ku", ModelKind::Ku => "ku" },
        "k": r.params.k(),
        "u": r.params.u(),
        "p": r.params.p(),
        "sse": r.sse,
        "r2": r.r2,
        "n_points": r.n_points,
        "starts_used": r.starts_used,
        "best_start_index": r.best_start_index,
        "converged": r.converged,
        "curve": curve
            .iter()
            .map(|&(rho, c)| json!({ "rho": rho, "cdf_model": c }))
            .collect::<Vec<_>>(),
    })
}

fn curve_for(params: &ExtKuParams, data: &fit::EmpiricalCdfData) -> Vec<(f64, f64)> {
    let rho_max = data.points().last().map(|&(r, _)| r).unwrap_or(1.0);
    (0..fit::COMPARE_CURVE_POINTS)
        .map(|i| {
            let r = 1.05 * rho_max * (i + 1) as f64 / fit::COMPARE_CURVE_POINTS as f64;
            (r, model::cdf_envelope(params, r).unwrap_or(f64::NAN))
        })
        .collect()
}

fn cmd_fit(args: &FitArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let data = fit::load_cdf_csv(&args.input).map_err(classify)?;
    let seed = seed_or_default(args.seed);

    let report = match args.model {
        FitModel::Extku | FitModel::Ku => {
            let kind = match args.model {
                FitModel::Extku => ModelKind::ExtKu,
                _ => ModelKind::Ku,
            };
            let r = fit::fit(&data, kind, args.starts, seed).map_err(classify)?;
            let curve = curve_for(&r.params, &data);
            fit_result_json(&r, &curve)
        }
        FitModel::Both => {
            let cmp = fit::compare(&data, args.starts, seed).map_err(classify)?;
            json!({
                "ext_ku": fit_result_json(&cmp.ext_ku, &cmp.curve_ext_ku),
                "ku": fit_result_json(&cmp.ku, &cmp.curve_ku),
                "delta_sse": cmp.delta_sse,
                "delta_r2": cmp.delta_r2,
                "nested_dominance_ok": cmp.nested_dominance_ok,
            })
        }
    };

    let text = serde_json::to_string_pretty(&report).expect("json serialization");
    match &args.out {
        Some(path) => std::fs::write(path, text + "\n").map_err(|e| Failure {
            code: 3,
            message: format!("cannot write {path}: {e}"),
        }),
        None => write_line(out, &text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing() {
        let s: Sweep = "0:20:1".parse().unwrap();
        assert_eq!(s.0.len(), 21);
        assert_eq!(s.0[0], 0.0);
        assert_eq!(*s.0.last().unwrap(), 20.0);
        let single: Sweep = "-10".parse().unwrap();
        assert_eq!(single.0, vec![-10.0]);
        assert!("1:2".parse::<Sweep>().is_err());
        assert!("2:1:1".parse::<Sweep>().is_err());
        assert!("0:1:0".parse::<Sweep>().is_err());
    }

    #[test]
    fn fmt12_shapes() {
        assert_eq!(fmt12(0.375), "0.375000000000");
        assert_eq!(fmt12(0.0), "0.000000000000");
        assert_eq!(fmt12(2.0), "2.00000000000");
        assert!(fmt12(1.5e-7).contains('e'));
        // Round trip to all printed digits.
        let x = 0.023_268_705_405_3_f64;
        let parsed: f64 = fmt12(x).parse().unwrap();
        assert_eq!(fmt12(parsed), fmt12(x));
    }

    #[test]
    fn db_conversion_applied_once() {
        assert_eq!(db_to_linear(10.0), 10.0);
        assert_eq!(db_to_linear(0.0), 1.0);
        assert!((db_to_linear(-10.0) - 0.1).abs() < 1e-15);
    }
}
