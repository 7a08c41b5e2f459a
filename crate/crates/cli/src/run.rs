//! Verb dispatch: resolve the config, run the requested operation, and
//! persist its report, sidecar, and manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_rational::Ratio;
use num_traits::Zero;
use serde_json::{json, Value};

use dirmix_core::lattice::{sumset_covers_window, LatticePoint};
use dirmix_core::mixing::{
    correlation_average, extract_density_one_set, inner_product, kvn_decompose,
    mean_ergodic_norm, wm_average,
};
use dirmix_core::partition::{
    construct_full_entropy_sequence, default_tol_schedule, sequence_entropy_partial, LogBase,
    SequencePlan,
};
use dirmix_core::report::{ConvergenceReport, DEFAULT_ENVELOPE_WINDOW};
use dirmix_core::suspension::suspension_correlation;
use dirmix_core::Int;

use crate::config::{parse_direction, parse_scalar, require, ExperimentConfig, ResolvedConfig};
use crate::emit::{self, sha256_hex, RunManifest};
use crate::error::CliError;

type Result<V> = std::result::Result<V, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verb {
    Strip,
    Correlate,
    Wmavg,
    Entropy,
    Fullseq,
    Densityone,
    Ergodic,
    Suspend,
    Sumset,
    Kvn,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Verb::Strip => "strip",
            Verb::Correlate => "correlate",
            Verb::Wmavg => "wmavg",
            Verb::Entropy => "entropy",
            Verb::Fullseq => "fullseq",
            Verb::Densityone => "densityone",
            Verb::Ergodic => "ergodic",
            Verb::Suspend => "suspend",
            Verb::Sumset => "sumset",
            Verb::Kvn => "kvn",
        }
    }
}

pub struct RunSummary {
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
}

/// Loads and resolves the config, runs the verb, and writes `<verb>.csv`,
/// `<verb>.json`, and `manifest.json` into `out_dir`.
pub fn run_experiment(verb: Verb, config_path: &Path, out_dir: &Path) -> Result<RunSummary> {
    let start = Instant::now();
    let config_bytes = fs::read(config_path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", config_path.display())))?;
    let config: ExperimentConfig = serde_json::from_slice(&config_bytes)
        .map_err(|e| CliError::Config(format!("config parse error: {e}")))?;
    if let Some(declared) = &config.verb {
        if declared != verb.name() {
            return Err(CliError::Config(format!(
                "config declares verb {declared:?} but {:?} was invoked",
                verb.name()
            )));
        }
    }
    let resolved = config.resolve()?;
    let thread_count = thread_count_from_env()?;

    let (report, extra) = dispatch(verb, &resolved)?;
    let rows_exact: Vec<bool> = report.rows.iter().map(|r| r.exact.is_some()).collect();
    let files = emit::write_report(out_dir, verb.name(), &report, extra)?;

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        verb: verb.name().to_string(),
        config_sha256: sha256_hex(&config_bytes),
        thread_count,
        rows_exact,
        files,
        wall_ms: start.elapsed().as_millis(),
    };
    let manifest_path = emit::write_manifest(out_dir, &manifest)?;
    Ok(RunSummary { manifest, manifest_path })
}

/// Reads DIRMIX_THREADS when set. The kernels are exact and sequential, so
/// the value is validated and recorded in the manifest rather than used to
/// spawn workers.
fn thread_count_from_env() -> Result<Option<usize>> {
    match std::env::var("DIRMIX_THREADS") {
        Ok(raw) => {
            let n: usize = raw
                .parse()
                .ok()
                .filter(|n| *n >= 1)
                .ok_or_else(|| {
                    CliError::Config(format!(
                        "DIRMIX_THREADS must be a positive integer, got {raw:?}"
                    ))
                })?;
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

fn dispatch(verb: Verb, cfg: &ResolvedConfig) -> Result<(ConvergenceReport<Int>, Value)> {
    match verb {
        Verb::Strip => run_strip(cfg),
        Verb::Correlate => run_correlate(cfg),
        Verb::Wmavg => run_wmavg(cfg),
        Verb::Entropy => run_entropy(cfg),
        Verb::Fullseq => run_fullseq(cfg),
        Verb::Densityone => run_densityone(cfg),
        Verb::Ergodic => run_ergodic(cfg),
        Verb::Suspend => run_suspend(cfg),
        Verb::Sumset => run_sumset(cfg),
        Verb::Kvn => run_kvn(cfg),
    }
}

fn require_kmax(cfg: &ResolvedConfig) -> Result<i64> {
    let kmax = *require("kmax", &cfg.params.kmax)?;
    if kmax < 1 {
        return Err(CliError::Config(format!("params.kmax must be at least 1, got {kmax}")));
    }
    Ok(kmax)
}

fn plan_from_params(cfg: &ResolvedConfig) -> Result<SequencePlan<Int>> {
    let strip = cfg.require_strip()?;
    let raw = require("plan", &cfg.params.plan)?;
    let points: Vec<LatticePoint> = raw.iter().map(|c| LatticePoint::new(c.clone())).collect();
    Ok(SequencePlan::new(points, strip.clone())?)
}

fn run_strip(cfg: &ResolvedConfig) -> Result<(ConvergenceReport<Int>, Value)> {
    let strip = cfg.require_strip()?;
    let kmax = require_kmax(cfg)?;
    let mut report =
        ConvergenceReport::new("strip_density", "lattice", format!("{strip}, kmax {kmax}"));
    let mut count = Int::zero();
    for k in 1..=kmax {
        count = count + strip.column_cardinality(k - 1);
        report.push_exact(k, Ratio::new(count.clone(), Int::from(k)));
    }
    report.attach_envelope(DEFAULT_ENVELOPE_WINDOW);
    Ok((report, json!({"kmax": kmax, "log_base": null})))
}

fn run_correlate(cfg: &ResolvedConfig) -> Result<(ConvergenceReport<Int>, Value)> {
    let strip = cfg.require_strip()?;
    let kmax = require_kmax(cfg)?;
    let b = cfg.named_event("b", &cfg.params.b)?;
    let c = cfg.named_event("c", &cfg.params.c)?;
    let mut report = correlation_average(&cfg.system, b, c, strip, kmax)?;
    report.attach_envelope(DEFAULT_ENVELOPE_WINDOW);
    let extra = json!({
        "event_b": cfg.params.b,
        "event_c": cfg.params.c,
        "kmax": kmax,
        "log_base": null,
    });
    Ok((report, extra))
}

fn run_wmavg(cfg: &ResolvedConfig) -> Result<(ConvergenceReport<Int>, Value)> {
    let strip = cfg.require_strip()?;
    let kmax = require_kmax(cfg)?;
    let f = cfg.named_observable("f", &cfg.params.f)?;
    let g = cfg.named_observable("g", &cfg.params.g)?;
    let mut report = wm_average(&cfg.system, f, g, strip, kmax)?;
    report.attach_envelope(DEFAULT_ENVELOPE_WINDOW);
    let extra = json!({
        "observable_f": cfg.params.f,
        "observable_g": cfg.params.g,
        "kmax": kmax,
        "log_base": null,
    });
    Ok((report, extra))
}

fn run_entropy(cfg: &ResolvedConfig) -> Result<(ConvergenceReport<Int>, Value)> {
    let alpha = cfg.named_partition("partition", &cfg.params.partition)?;
    let plan = plan_from_params(cfg)?;
    let kmax = match cfg.params.kmax {
        Some(k) if k >= 1 && (k as usize) <= plan.len() => k as usize,
        Some(k) => {
            return Err(CliError::Config(format!(
                "params.kmax must lie in 1..={}, got {k}",
                plan.len()
            )))
        }
        None => plan.len(),
    };
    let mut report =
        sequence_entropy_partial(&cfg.system, alpha, &plan, kmax, cfg.atom_cap, cfg.log_base)?;
    report.attach_envelope(DEFAULT_ENVELOPE_WINDOW);
    let extra = json!({
        "partition": cfg.params.partition,
        "plan": cfg.params.plan,
        "atom_cap": cfg.atom_cap,
        "log_base": log_base_name(cfg.log_base),
    });
    Ok((report, extra))
}

fn run_fullseq(cfg: &ResolvedConfig) -> Result<(ConvergenceReport<Int>, Value)> {
    let strip = cfg.require_strip()?;
    let length = *require("length", &cfg.params.length)?;
    let horizon = *require("horizon", &cfg.params.horizon)?;
    let tracked_names: Vec<String> = match (&cfg.params.track, &cfg.params.partition) {
        (Some(names), _) => names.clone(),
        (None, Some(single)) => vec![single.clone()],
        (None, None) => {
            return Err(CliError::Config(
                "fullseq needs params.track (a list of partition names) or params.partition"
                    .into(),
            ))
        }
    };
    let mut tracked = Vec::with_capacity(tracked_names.len());
    for name in &tracked_names {
        tracked.push(cfg.named_partition("track", &Some(name.clone()))?.clone());
    }
    let plan = construct_full_entropy_sequence(
        &cfg.system,
        &tracked,
        strip,
        length,
        horizon,
        cfg.atom_cap,
        default_tol_schedule,
    )?;
    let mut report = ConvergenceReport::new(
        "full_entropy_plan",
        cfg.system.describe(),
        format!("{strip}, length {length}, horizon {horizon}"),
    );
    for p in plan.points() {
        report.push_exact(p.first(), Ratio::from_integer(Int::from(p.coords()[1])));
    }
    let points: Vec<Vec<i64>> = plan.points().iter().map(|p| p.coords().to_vec()).collect();
    let extra = json!({
        "tracked": tracked_names,
        "length": length,
        "horizon": horizon,
        "points": points,
        "tolerance_schedule": "2^-j",
        "atom_cap": cfg.atom_cap,
        "log_base": null,
    });
    Ok((report, extra))
}

fn run_densityone(cfg: &ResolvedConfig) -> Result<(ConvergenceReport<Int>, Value)> {
    let strip = cfg.require_strip()?;
    let pmax = *require("pmax", &cfg.params.pmax)?;
    let horizon = *require("horizon", &cfg.params.horizon)?;
    let b = cfg.named_event("b", &cfg.params.b)?;
    let c = cfg.named_event("c", &cfg.params.c)?;
    let set = extract_density_one_set(&cfg.system, b, c, strip, pmax, horizon)?;
    let mut report = ConvergenceReport::new(
        "density_one_thresholds",
        cfg.system.describe(),
        format!("B={}, C={}, {strip}, pmax {pmax}, horizon {horizon}", display_name(&cfg.params.b), display_name(&cfg.params.c)),
    );
    for t in set.thresholds() {
        report.push_exact(i64::from(t.p), Ratio::from_integer(Int::from(t.l_p)));
    }
    let thresholds: Vec<Value> = set
        .thresholds()
        .iter()
        .map(|t| json!({"p": t.p, "l_p": t.l_p, "verified_through": t.verified_through}))
        .collect();
    let excluded: Vec<Vec<i64>> = set.excluded().iter().map(|p| p.coords().to_vec()).collect();
    let extra = json!({
        "event_b": cfg.params.b,
        "event_c": cfg.params.c,
        "pmax": pmax,
        "horizon": set.horizon(),
        "thresholds": thresholds,
        "excluded": excluded,
        "log_base": null,
    });
    Ok((report, extra))
}

fn run_ergodic(cfg: &ResolvedConfig) -> Result<(ConvergenceReport<Int>, Value)> {
    let b = cfg.named_event("b", &cfg.params.b)?;
    let plan = plan_from_params(cfg)?;
    let nmax = match cfg.params.nmax {
        Some(n) if n >= 1 && (n as usize) <= plan.len() => n as usize,
        Some(n) => {
            return Err(CliError::Config(format!(
                "params.nmax must lie in 1..={}, got {n}",
                plan.len()
            )))
        }
        None => plan.len(),
    };
    let mut report = mean_ergodic_norm(&cfg.system, b, &plan, nmax)?;
    report.attach_envelope(DEFAULT_ENVELOPE_WINDOW);
    let extra = json!({
        "event_b": cfg.params.b,
        "plan": cfg.params.plan,
        "nmax": nmax,
        "log_base": null,
    });
    Ok((report, extra))
}

fn run_suspend(cfg: &ResolvedConfig) -> Result<(ConvergenceReport<Int>, Value)> {
    let b = cfg.named_rectangle("rect_b", &cfg.params.rect_b)?;
    let c = cfg.named_rectangle("rect_c", &cfg.params.rect_c)?;
    let beta = parse_scalar(require("beta", &cfg.params.beta)?)?;
    let nmax = *require("nmax", &cfg.params.nmax)?;
    if nmax < 1 {
        return Err(CliError::Config(format!("params.nmax must be at least 1, got {nmax}")));
    }
    let mut report = suspension_correlation(&cfg.system, b, c, &beta, nmax)?;
    report.attach_envelope(DEFAULT_ENVELOPE_WINDOW);
    let extra = json!({
        "rect_b": cfg.params.rect_b,
        "rect_c": cfg.params.rect_c,
        "beta": beta.to_string(),
        "nmax": nmax,
        "log_base": null,
    });
    Ok((report, extra))
}

fn run_sumset(cfg: &ResolvedConfig) -> Result<(ConvergenceReport<Int>, Value)> {
    let first = cfg.require_strip()?;
    let second = require("second", &cfg.params.second)?.resolve()?;
    let window = *require("window", &cfg.params.window)?;
    let check = sumset_covers_window(first, &second, window)?;
    let mut report = ConvergenceReport::new(
        "sumset_coverage",
        "lattice",
        format!("first {first}, second {second}, window {window}"),
    );
    report.push_exact(0, Ratio::from_integer(Int::from(i64::from(check.covers))));
    let extra = json!({
        "covers": check.covers,
        "window": check.window,
        "search_bound": check.search_bound,
        "first_uncovered": check.first_uncovered.as_ref().map(|p| p.coords().to_vec()),
        "parallel_directions": check.parallel_directions,
        "log_base": null,
    });
    Ok((report, extra))
}

fn run_kvn(cfg: &ResolvedConfig) -> Result<(ConvergenceReport<Int>, Value)> {
    let f = cfg.named_observable("f", &cfg.params.f)?;
    let direction = match &cfg.params.direction {
        Some(components) => parse_direction(components)?,
        None => cfg.require_strip()?.direction().clone(),
    };
    let (kron, wm) = kvn_decompose(&cfg.system, f, &direction)?;
    let mut report = ConvergenceReport::new(
        "kvn_split",
        cfg.system.describe(),
        format!("f={}, direction {direction}", f.describe()),
    );
    report.push_scalar(0, inner_product(&cfg.system, &kron, &kron)?);
    report.push_scalar(1, inner_product(&cfg.system, &wm, &wm)?);
    report.push_scalar(2, inner_product(&cfg.system, &kron, &wm)?);
    let extra = json!({
        "observable_f": cfg.params.f,
        "direction": direction.to_string(),
        "kron": kron.describe(),
        "wm": wm.describe(),
        "row_meaning": ["kron_norm_sq", "wm_norm_sq", "cross_pairing"],
        "log_base": null,
    });
    Ok((report, extra))
}

fn log_base_name(base: LogBase) -> &'static str {
    match base {
        LogBase::Nats => "nats",
        LogBase::Bits => "bits",
    }
}

fn display_name(name: &Option<String>) -> &str {
    name.as_deref().unwrap_or("?")
}
