//! One function per subcommand. Each writes its files under the output
//! directory and returns the one-line summary.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use ctmc_trunc_core::limits::{CauchyProxy, InitialRule, LeakProbe, LimitStatus, SweepConfig, VerdictCase};
use ctmc_trunc_core::recurrence::{consistency_check, stationary_from_simulation, Estimate};
use ctmc_trunc_core::stationary::{
    detailed_balance_candidate, in_tree_oracle, kolmogorov_check, stationary_kernel, StationaryResult,
};
use ctmc_trunc_core::{
    evolve, truncate_condense, truncate_sharp, truncate_subnetwork, Network, ProbVec, Scheme, SparseGenerator,
    StateLabel,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{parse_window_kind, ExperimentConfig, Format};
use crate::error::{CliError, Result};
use crate::io::{self, fmt17, labelled, write_json, write_vector_csv, EventLog};
use crate::network::LoadedNetwork;
use crate::parallel;

/// A resolved config with its network and thread pool.
pub struct Context {
    pub cfg: ExperimentConfig,
    pub net: LoadedNetwork,
    pub pool: rayon::ThreadPool,
}

impl Context {
    pub fn out(&self, name: &str) -> PathBuf {
        self.cfg.output_dir.join(name)
    }

    pub fn prepare_output(&self) -> Result<()> {
        fs::create_dir_all(&self.cfg.output_dir)?;
        write_json(&self.out("effective_config.json"), &self.cfg)
    }

    fn window(&self, spec: &Option<String>) -> Result<ctmc_trunc_core::FiniteSubset> {
        self.net.parse_window(spec.as_deref().expect("resolved"))
    }

    fn label(&self, spec: &Option<String>) -> Result<StateLabel> {
        self.net.parse_label(spec.as_deref().expect("resolved"))
    }
}

/// Windows up to this size have their values listed in the summary line.
const SUMMARY_VALUES: usize = 10;

fn values_summary(p: &ProbVec) -> String {
    if p.len() > SUMMARY_VALUES {
        let (i, v) = p.values().iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |best, (i, &v)| if v > best.1 { (i, v) } else { best },
        );
        return format!("states={} argmax={}={v}", p.len(), labelled(p)[i].label);
    }
    labelled(p)
        .iter()
        .map(|v| format!("{}={}", v.label, v.value))
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Serialize)]
struct EvolveJson {
    t: f64,
    result: Vec<io::LabelledValue>,
    terms_used: u64,
    mass_drift: f64,
    wall_time: f64,
}

pub fn evolve_cmd(ctx: &Context) -> Result<String> {
    let c = &ctx.cfg.evolve;
    let f = ctx.window(&c.window)?;
    let scheme = Scheme::from_name(&c.scheme).ok_or_else(|| {
        CliError::Config(format!(
            "unknown scheme `{}`; expected subnetwork, sharp or condense",
            c.scheme
        ))
    })?;
    let g = match scheme {
        Scheme::Subnetwork => truncate_subnetwork(&ctx.net, &f),
        Scheme::SharpCutoff => truncate_sharp(&ctx.net, &f),
        Scheme::Condense => {
            let h = ctx.window(&c.horizon)?;
            truncate_condense(&ctx.net, &f, &h)?
        }
    };
    let start = ctx.label(&c.initial)?;
    let p0 = match scheme {
        Scheme::Condense => {
            let i = f
                .index_of(&start)
                .ok_or(ctmc_trunc_core::Error::StateNotInSubset(start))?;
            let mut v = vec![0.0; f.len() + 1];
            v[i] = 1.0;
            ProbVec::with_remainder(f.clone(), v)?
        }
        _ => ProbVec::point_mass(f.clone(), &start)?,
    };
    io::write_triplets(BufWriter::new(File::create(ctx.out("generator.txt"))?), &g)?;
    let mut reports = Vec::new();
    for (k, &t) in c.times.iter().enumerate() {
        let r = evolve(&g, &p0, t, c.tol)?;
        if ctx.cfg.format == Format::Csv {
            write_vector_csv(&ctx.out(&format!("evolve_{k}.csv")), &r.result)?;
        }
        reports.push((t, r));
    }
    if ctx.cfg.format == Format::Json {
        let out: Vec<EvolveJson> = reports
            .iter()
            .map(|(t, r)| EvolveJson {
                t: *t,
                result: labelled(&r.result),
                terms_used: r.terms_used,
                mass_drift: r.mass_drift,
                wall_time: r.wall_time,
            })
            .collect();
        write_json(&ctx.out("evolve.json"), &out)?;
    }
    let terms: u64 = reports.iter().map(|(_, r)| r.terms_used).sum();
    let drift = reports.iter().map(|(_, r)| r.mass_drift.abs()).fold(0.0, f64::max);
    let last = reports.last().map(|(_, r)| r.result.mass()).unwrap_or(1.0);
    Ok(format!(
        "evolve: network={} scheme={} states={} times={} terms={terms} max_mass_drift={drift:e} final_mass={last}",
        ctx.net.name(),
        scheme.name(),
        g.dim(),
        reports.len()
    ))
}

#[derive(Serialize)]
struct StationaryJson<'a> {
    method: &'a str,
    kernel_dim: usize,
    residual: f64,
    vector: Vec<io::LabelledValue>,
}

pub fn stationary_cmd(ctx: &Context) -> Result<String> {
    let c = &ctx.cfg.stationary;
    let f = ctx.window(&c.window)?;
    let g = truncate_subnetwork(&ctx.net, &f);
    let s: StationaryResult = match c.method.as_str() {
        "kernel" => stationary_kernel(&g)?,
        "in-tree" => in_tree_oracle(&g)?,
        "detailed-balance" => detailed_balance_candidate(&ctx.net, &f, None)?,
        m => {
            return Err(CliError::Config(format!(
                "unknown method `{m}`; expected kernel, detailed-balance or in-tree"
            )))
        }
    };
    match ctx.cfg.format {
        Format::Csv => write_vector_csv(&ctx.out("stationary.csv"), &s.vector)?,
        Format::Json => write_json(
            &ctx.out("stationary.json"),
            &StationaryJson {
                method: s.method.name(),
                kernel_dim: s.kernel_dim,
                residual: s.residual,
                vector: labelled(&s.vector),
            },
        )?,
    }
    if !(s.residual <= c.residual_tol) {
        return Err(CliError::Numeric(format!(
            "residual ‖Γx‖₁ = {:e} exceeds the tolerance {:e}",
            s.residual, c.residual_tol
        )));
    }
    Ok(format!(
        "stationary: method={} kernel_dim={} residual={:e} {}",
        s.method.name(),
        s.kernel_dim,
        s.residual,
        values_summary(&s.vector)
    ))
}

fn initial_rule(net: &LoadedNetwork, spec: &str) -> Result<InitialRule> {
    if let Some(r) = spec.strip_prefix("geometric:") {
        let ratio = r
            .parse::<f64>()
            .map_err(|_| CliError::Config(format!("bad geometric ratio in `{spec}`")))?;
        return Ok(InitialRule::Geometric { ratio });
    }
    Ok(InitialRule::PointMass(net.parse_label(spec)?))
}

fn status_name(s: LimitStatus) -> &'static str {
    match s {
        LimitStatus::Exists => "exists",
        LimitStatus::Fails => "fails",
        LimitStatus::Inconclusive => "inconclusive",
    }
}

pub fn sweep_cmd(ctx: &Context) -> Result<String> {
    let c = &ctx.cfg.sweep;
    let sequence = c.sequence.as_deref().expect("resolved");
    let kind = parse_window_kind(sequence)?;
    let mut cfg = SweepConfig::new(
        kind,
        c.sizes()?,
        c.t_grid.clone(),
        initial_rule(&ctx.net, c.initial.as_deref().expect("resolved"))?,
    );
    cfg.evolve_tol = c.evolve_tol;
    cfg.spectral = c.spectral;
    cfg.cauchy = CauchyProxy {
        k: c.cauchy_k,
        burn_in: c.cauchy_burn_in,
        tol: c.cauchy_tol,
    };
    cfg.agreement_tol = c.agreement_tol;
    if let Some(l) = &c.leak {
        cfg.leak_probe = Some(LeakProbe {
            start: ctx.label(&l.start)?,
            n: l.n,
            horizon: l.horizon,
            seed: l.seed,
            threshold: l.threshold,
        });
    }
    let report = parallel::sweep(&ctx.pool, &ctx.net, &cfg)?;
    let stem = format!("{}_{sequence}", ctx.cfg.preset.name());
    io::write_sweep_csvs(&ctx.cfg.output_dir, &stem, &report)?;
    let v = &report.verdict;
    let violations = report.bound_violations(1e-9).len();
    let verdict = json!({
        "case": v.case.tag(),
        "time_then_size": status_name(v.time_then_thermo),
        "size_then_time": status_name(v.thermo_then_time),
        "cauchy": {
            "status": status_name(v.cauchy.status),
            "monotone": v.cauchy.monotone,
            "tail_below_tol": v.cauchy.tail_below_tol,
        },
        "long_time": {
            "converged": report.long_time.converged,
            "t_final": report.long_time.t_final,
            "steps": report.long_time.steps,
            "last_diff": report.long_time.last_diff,
            "distance_to_stationary": report.long_time.distance_to_stationary,
        },
        "leak": report.leak.map(|l| json!({
            "fraction": l.fraction,
            "stderr": l.stderr,
            "horizon": l.horizon,
            "n": l.n,
        })),
        "limits_distance": v.limits_distance,
        "bound_violations": violations,
        "time_diffs": report.time_diffs,
        "note": v.note,
    });
    write_json(&ctx.out(&format!("{stem}_verdict.json")), &verdict)?;
    let summary = format!(
        "sweep: network={} sequence={sequence} windows={} case={} time_then_size={} size_then_time={} bound_violations={violations}",
        ctx.net.name(),
        report.sizes.len(),
        v.case.tag(),
        status_name(v.time_then_thermo),
        status_name(v.thermo_then_time),
    );
    if ctx.cfg.strict && v.case == VerdictCase::Inconclusive {
        return Err(CliError::Inconclusive(summary));
    }
    Ok(summary)
}

fn estimates(m: &BTreeMap<StateLabel, Estimate>) -> serde_json::Value {
    m.iter()
        .map(|(l, e)| (l.to_string(), json!({"mean": e.mean, "stderr": e.stderr})))
        .collect::<serde_json::Map<_, _>>()
        .into()
}

pub fn simulate_cmd(ctx: &Context) -> Result<String> {
    let c = &ctx.cfg.simulate;
    let start = ctx.label(&c.start)?;
    match c.mode.as_str() {
        "return" => {
            let (stats, events) = parallel::returns(&ctx.pool, &ctx.net, start, c.horizon, c.n, c.seed, c.event_log)?;
            if c.event_log {
                let mut log = EventLog::append(&ctx.out("events.bin"))?;
                for (_, s, t) in &events {
                    log.record(s, *t)?;
                }
                log.finish()?;
            }
            let check = if stats.returned_count > 0 {
                Some(consistency_check(&stats)?)
            } else {
                None
            };
            let exit_rate: serde_json::Map<_, _> =
                stats.exit_rate.iter().map(|(l, r)| (l.to_string(), json!(r))).collect();
            let absorbed_at: serde_json::Map<_, _> = stats
                .absorbed_at
                .iter()
                .map(|(l, r)| (l.to_string(), json!(r)))
                .collect();
            let out = json!({
                "mode": "return",
                "start": start.to_string(),
                "horizon": stats.horizon,
                "n_trajectories": stats.n_trajectories,
                "returned_count": stats.returned_count,
                "absorbed_count": stats.absorbed_count,
                "censored_count": stats.censored_count,
                "returned_fraction": stats.returned_fraction(),
                "return_time": {"mean": stats.return_time.mean, "stderr": stats.return_time.stderr},
                "rb_return_time": {"mean": stats.rb_return_time.mean, "stderr": stats.rb_return_time.stderr},
                "visiting_number": estimates(&stats.visiting_number),
                "visiting_time": estimates(&stats.visiting_time),
                "occupation_time": estimates(&stats.occupation_time),
                "exit_rate": exit_rate,
                "absorbed_at": absorbed_at,
                "consistency": check.as_ref().map(|r| json!({
                    "passed": r.passed,
                    "return_time": {
                        "lhs": r.return_time.lhs,
                        "rhs": r.return_time.rhs,
                        "tolerance": r.return_time.tolerance,
                        "passed": r.return_time.passed,
                    },
                    "per_state_passed": r.per_state.iter().all(|(_, c)| c.passed),
                })),
            });
            write_json(&ctx.out("simulate.json"), &out)?;
            let passed = check.as_ref().map(|r| r.passed);
            let summary = format!(
                "simulate: mode=return n={} returned={:.6} mean_return_time={} ± {} consistency={}",
                stats.n_trajectories,
                stats.returned_fraction(),
                stats.return_time.mean,
                stats.return_time.stderr,
                match passed {
                    Some(true) => "pass",
                    Some(false) => "fail",
                    None => "n/a",
                }
            );
            if ctx.cfg.strict && passed != Some(true) {
                return Err(CliError::Inconclusive(summary));
            }
            Ok(summary)
        }
        "absorption" => {
            if c.event_log {
                return Err(CliError::Config("event logs are only written in return mode".into()));
            }
            let stats = parallel::absorption(&ctx.pool, &ctx.net, start, c.horizon, c.n, c.seed)?;
            let finals: serde_json::Map<_, _> = stats
                .final_states
                .iter()
                .map(|(l, n)| (l.to_string(), json!(n)))
                .collect();
            let out = json!({
                "mode": "absorption",
                "start": start.to_string(),
                "horizon": stats.horizon,
                "n_trajectories": stats.n_trajectories,
                "absorbed_count": stats.absorbed_count,
                "absorbed_fraction": {"mean": stats.absorbed_fraction.mean, "stderr": stats.absorbed_fraction.stderr},
                "final_states": finals,
            });
            write_json(&ctx.out("simulate.json"), &out)?;
            Ok(format!(
                "simulate: mode=absorption n={} absorbed_fraction={} ± {}",
                stats.n_trajectories, stats.absorbed_fraction.mean, stats.absorbed_fraction.stderr
            ))
        }
        "occupation" => {
            if c.event_log {
                return Err(CliError::Config("event logs are only written in return mode".into()));
            }
            let s = stationary_from_simulation(&ctx.net, start, c.horizon, c.seed)?;
            let out = json!({
                "mode": "occupation",
                "start": start.to_string(),
                "total_time": c.horizon,
                "jumps": s.jumps,
                "half_difference": s.half_difference,
                "converged": s.converged,
                "frequencies": estimates(&s.frequencies),
            });
            write_json(&ctx.out("simulate.json"), &out)?;
            let summary = format!(
                "simulate: mode=occupation jumps={} states={} half_difference={} converged={}",
                s.jumps,
                s.frequencies.len(),
                s.half_difference,
                s.converged
            );
            if ctx.cfg.strict && !s.converged {
                return Err(CliError::Inconclusive(summary));
            }
            Ok(summary)
        }
        m => Err(CliError::Config(format!(
            "unknown simulate mode `{m}`; expected return, absorption or occupation"
        ))),
    }
}

pub fn check_db_cmd(ctx: &Context) -> Result<String> {
    let c = &ctx.cfg.check_db;
    let f = ctx.window(&c.window)?;
    let root = ctx.label(&c.root)?;
    let cert = kolmogorov_check(&ctx.net, &f).map_err(|e| match e {
        ctmc_trunc_core::Error::MissingReverseEdge { from, to } => CliError::Config(format!(
            "detailed balance needs every edge reversed, but {from} -> {to} has no reverse edge ({} is not a detailed-balance network)",
            ctx.net.name()
        )),
        e => e.into(),
    })?;
    let candidate = if cert.holds {
        Some(detailed_balance_candidate(&ctx.net, &f, Some(root))?)
    } else {
        None
    };
    let out = json!({
        "holds": cert.holds,
        "max_cycle_ratio_error": cert.max_cycle_ratio_error,
        "witness_cycle": cert.witness_cycle.as_ref().map(|c| c.iter().map(|l| l.to_string()).collect::<Vec<_>>()),
        "candidate": candidate.as_ref().map(|s| json!({
            "residual": s.residual,
            "vector": labelled(&s.vector),
        })),
    });
    write_json(&ctx.out("check_db.json"), &out)?;
    Ok(format!(
        "check-db: network={} states={} holds={} max_cycle_ratio_error={:e}{}",
        ctx.net.name(),
        f.len(),
        cert.holds,
        cert.max_cycle_ratio_error,
        candidate
            .map(|s| format!(" candidate_residual={:e}", s.residual))
            .unwrap_or_default()
    ))
}

/// Eigenvalues sorted by decreasing real part.
pub fn eigenvalues(g: &SparseGenerator) -> Result<Vec<(f64, f64)>> {
    let limit = ctmc_trunc_core::evolution::DENSE_LIMIT;
    if g.dim() > limit {
        return Err(ctmc_trunc_core::Error::DimensionTooLarge { dim: g.dim(), limit }.into());
    }
    let mut eig: Vec<(f64, f64)> = g
        .to_dense()
        .complex_eigenvalues()
        .iter()
        .map(|l| (l.re, l.im))
        .collect();
    eig.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    Ok(eig)
}

pub fn spectrum_cmd(ctx: &Context) -> Result<String> {
    let f = ctx.window(&ctx.cfg.spectrum.window)?;
    let g = truncate_subnetwork(&ctx.net, &f);
    let eig = eigenvalues(&g)?;
    let gap = ctmc_trunc_core::limits::spectral_gap(&g)?;
    match ctx.cfg.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = eig
                .iter()
                .enumerate()
                .map(|(i, &(re, im))| vec![i.to_string(), fmt17(re), fmt17(im)])
                .collect();
            io::write_table(
                &ctx.out("spectrum.csv"),
                &["index", "re", "im"].map(String::from),
                &rows,
            )?;
        }
        Format::Json => write_json(
            &ctx.out("spectrum.json"),
            &json!({
                "spectral_gap": if gap.is_finite() { json!(gap) } else { json!(null) },
                "eigenvalues": eig.iter().map(|&(re, im)| json!({"re": re, "im": im})).collect::<Vec<_>>(),
            }),
        )?,
    }
    Ok(format!(
        "spectrum: network={} states={} spectral_gap={}",
        ctx.net.name(),
        g.dim(),
        if gap.is_finite() {
            gap.to_string()
        } else {
            "none".into()
        }
    ))
}

/// Preset names with their default parameters, as pretty JSON.
pub fn list_presets() -> Result<String> {
    let mut defaults = serde_json::Map::new();
    for (name, v) in crate::config::preset_defaults() {
        defaults.insert(name.to_string(), v);
    }
    defaults.insert("edge_list".into(), json!({"name": "edge_list", "path": "<file>"}));
    Ok(serde_json::to_string_pretty(&defaults)?)
}

/// Base directory for relative paths inside a config file.
pub fn config_base(config: Option<&Path>) -> PathBuf {
    config
        .and_then(|p| p.parent())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}
