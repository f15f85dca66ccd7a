//! Command dispatch for the `micropolar` binary.
//!
//! Exit status: 0 when every asserted invariant holds, 1 when one fails or on
//! an I/O or integrity failure, 2 on a usage or configuration error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use micropolar::analysis::{
    energy_report, fit_decay, gronwall_check, verify_bilinear, verify_dependence, verify_embeddings, verify_residual,
    verify_smoothing, verify_time_hoelder, DecayConfig, Ensemble, EstimateReport, GronwallInput, NonlinearEstimate,
    RunData,
};
use micropolar::exponents::{check_config, select_intermediate, CheckLevel, ExponentConfig};
use micropolar::io::{
    checkpoint_header, checkpoint_read, checkpoint_read_for, checkpoint_write, decay_table, elog_table,
    energy_table, estimate_table, gronwall_table, picard_table, residual_table, trajectory_table, write_report,
    Cell, Provenance, ReportBundle, RunConfig, Table,
};
use micropolar::mild::{
    global_resume, global_solve, mild_residual, picard_solve, weighted_norms, GlobalRun, PicardConfig, PicardReport,
    PicardStatus, TrajectoryState,
};
use micropolar::spectral::random::{random_solenoidal, rng};
use micropolar::spectral::{OperatorKind, SpectralField};
use micropolar::{par, Error};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Horizon of the near-zero fits of `local-smoothing`.
pub const LOCAL_HORIZON: f64 = 1e-3;

/// Names accepted by `verify`.
pub const VERIFY_NAMES: [&str; 18] = [
    "semigroup-smoothing",
    "embedding",
    "advection-velocity",
    "advection-microrotation",
    "advection-temperature",
    "dissipation",
    "rot-microrotation",
    "microrotation-embedding",
    "rot-velocity",
    "forcing-velocity",
    "forcing-microrotation",
    "duhamel-order",
    "local-smoothing",
    "global-decay",
    "residual-order",
    "dependence",
    "time-hoelder",
    "energy",
];

#[derive(Parser, Debug)]
#[command(name = "micropolar", version, about = "Micropolar heat-conductive flow solver and verification harness")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: the configured output_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Time step; sets nodes_per_unit to round(1/dt).
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Halves the time step k times.
    #[arg(long, global = true)]
    refine: Option<u32>,
    /// Overrides the ensemble size of `verify`.
    #[arg(long, global = true)]
    ensemble: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve on [0, T] (or march windows when `global` is configured).
    Simulate,
    /// Successive approximation with per-iteration contraction ratios.
    Picard,
    /// Run one named check.
    Verify {
        /// One of the names listed by `verify list`.
        name: String,
    },
    /// Exponent admissibility.
    Exponents {
        #[command(subcommand)]
        action: ExponentAction,
    },
    /// Generalized Gronwall bound against the fixed-point oracle.
    Gronwall {
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = Vec::<f64>::new())]
        b: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = Vec::<f64>::new())]
        beta: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        t_final: f64,
        #[arg(long, default_value_t = 400)]
        steps: usize,
    },
    /// Inspect or resume a checkpoint.
    Checkpoint {
        #[command(subcommand)]
        action: CheckpointAction,
    },
}

#[derive(Subcommand, Debug)]
enum ExponentAction {
    Check {
        #[arg(long, value_enum, default_value_t = Level::Base)]
        level: Level,
    },
    Select,
}

#[derive(Subcommand, Debug)]
enum CheckpointAction {
    /// Check format, length and checksum (and the config hash with --config).
    Verify { path: PathBuf },
    /// Continue the global march from a checkpoint.
    Resume { path: PathBuf },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Level {
    Base,
    Regularity,
    Classical,
}

impl From<Level> for CheckLevel {
    fn from(l: Level) -> Self {
        match l {
            Level::Base => CheckLevel::Base,
            Level::Regularity => CheckLevel::Regularity,
            Level::Classical => CheckLevel::Classical,
        }
    }
}

/// Error to exit status.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Type(_) => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit status.
pub fn dispatch(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    par::configure_from_env();
    match run(cli) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Infeasible(r) = &e {
                for c in &r.binding {
                    eprintln!("  binding: {c}");
                }
            }
            exit_code(&e)
        }
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    let c = &cli.common;
    match cli.command {
        Command::Simulate => simulate(&load(c, true)?, c),
        Command::Picard => picard(&load(c, true)?, c),
        Command::Verify { name } => verify(&name, &load(c, false)?, c),
        Command::Exponents { action } => exponents(action, c),
        Command::Gronwall {
            a,
            alpha,
            b,
            beta,
            t_final,
            steps,
        } => gronwall(GronwallInput::new(a, alpha, b, beta), t_final, steps, c),
        Command::Checkpoint { action } => checkpoint(action, c),
    }
}

/// Loads the config (the built-in example when optional and absent) and applies flag overrides.
fn load(c: &Common, required: bool) -> Result<RunConfig, Error> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None if required => return Err(Error::Config("--config <path> is required".into())),
        None => RunConfig::example(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(dt) = c.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("--dt must be positive, got {dt}")));
        }
        cfg.picard.nodes_per_unit = ((1.0 / dt).round() as usize).max(1);
    }
    if let Some(k) = c.refine {
        cfg.picard.nodes_per_unit = cfg
            .picard
            .nodes_per_unit
            .checked_mul(1usize.checked_shl(k).unwrap_or(0))
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Config(format!("--refine {k} is too large")))?;
    }
    if let Some(n) = c.ensemble {
        cfg.verify.ensemble = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: Option<&RunConfig>, c: &Common) -> PathBuf {
    c.out
        .clone()
        .or_else(|| cfg.map(|r| r.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn finish(mut bundle: ReportBundle, dir: &Path, passed: bool) -> Result<bool, Error> {
    bundle.verdict("passed", &passed)?;
    bundle.finish();
    write_report(&bundle, dir)?;
    println!("{} {}", if passed { "pass" } else { "fail" }, bundle.metadata.command);
    Ok(passed)
}

/// Base admissibility, then the intermediates (selected when requested).
fn resolve_exponents(cfg: &RunConfig, need_intermediates: bool) -> Result<ExponentConfig, Error> {
    let e = cfg.exponents;
    let base = check_config(&e.base_only(), CheckLevel::Base)?;
    if !base.passed {
        return Err(Error::Config(format!("exponents: {}", violations(&base.violations))));
    }
    let e = if e.intermediates().is_none() && (cfg.select_exponents || need_intermediates) {
        if !cfg.select_exponents {
            return Err(Error::Config(
                "exponents: intermediates are required; set them or enable select_exponents".into(),
            ));
        }
        select_intermediate(&e)?
    } else {
        e
    };
    let full = check_config(&e, CheckLevel::Base)?;
    if !full.passed {
        return Err(Error::Config(format!("exponents: {}", violations(&full.violations))));
    }
    Ok(e)
}

fn violations(v: &[micropolar::exponents::Constraint]) -> String {
    v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("; ")
}

fn picard_cfg(cfg: &RunConfig, exps: &ExponentConfig) -> PicardConfig {
    let mut p = cfg.picard.clone();
    if p.weighted_exponents.is_none() {
        p.weighted_exponents = Some(*exps);
    }
    p
}

/// `t, norm_tag, value` for every weighted norm of `exps` at every node.
fn norms_table(traj: &TrajectoryState, exps: &ExponentConfig, cfg: &RunConfig) -> Result<Table, Error> {
    let scales = cfg.params.scales();
    let norms = weighted_norms(Some(exps));
    let mut t = Table::new("norms", &["t", "norm_tag", "value"]);
    for j in 0..traj.nodes() {
        let (u, w, th) = traj.state(j);
        for n in &norms {
            let f = match n.field {
                micropolar::mild::FieldTag::U => u,
                micropolar::mild::FieldTag::Omega => w,
                micropolar::mild::FieldTag::Theta => th,
            };
            t.push(
                vec![traj.times[j].into(), n.tag().into(), n.eval(f, &scales)?.into()],
                Provenance::Measured,
            );
        }
    }
    Ok(t)
}

fn windows_table(run: &GlobalRun) -> Table {
    let mut t = Table::new("windows", &["window", "status", "iterations", "final_difference"]);
    for (k, w) in run.windows.iter().enumerate() {
        t.push(
            vec![
                k.into(),
                format!("{:?}", w.status).to_lowercase().into(),
                w.iterations.len().into(),
                w.final_difference().into(),
            ],
            Provenance::Measured,
        );
    }
    t
}

fn simulate(cfg: &RunConfig, c: &Common) -> Result<bool, Error> {
    let exps = resolve_exponents(cfg, false)?;
    let pc = picard_cfg(cfg, &exps);
    let model = cfg.model();
    let dir = out_dir(Some(cfg), c);
    let hash = cfg.hash();
    let (u0, w0, th0) = cfg.initial_data();
    let mut bundle = ReportBundle::new("simulate").with_config(cfg);
    let passed = match &cfg.global {
        Some(g) => {
            let mut run: Option<GlobalRun> = None;
            let mut k = 0;
            let mut t = 0.0;
            while t < g.t_total * (1.0 - 1e-12) {
                k += 1;
                t = (k as f64 * g.window).min(g.t_total);
                let gk = micropolar::mild::GlobalConfig { t_total: t, ..g.clone() };
                let next = match &run {
                    None => global_solve(&u0, &w0, &th0, &exps, &pc, &model, &gk)?,
                    Some(prev) => {
                        let prefix = prev.trajectory.as_ref().expect("trajectory kept");
                        let mut r = global_resume(prefix, &exps, &pc, &model, &gk)?;
                        let mut windows = prev.windows.clone();
                        windows.extend(r.windows.drain(..));
                        r.windows = windows;
                        r
                    }
                };
                let traj = next.trajectory.as_ref().expect("trajectory kept");
                checkpoint_write(traj, &hash, &dir.join(format!("checkpoint_{k:04}.ckpt")))?;
                let stop = next.aborted;
                run = Some(next);
                if stop {
                    break;
                }
            }
            let run = run.expect("at least one window");
            let traj = run.trajectory.as_ref().expect("trajectory kept");
            bundle.tables.push(elog_table(&run, g.bound_constant));
            bundle.tables.push(windows_table(&run));
            bundle.tables.push(trajectory_table(traj));
            bundle.tables.push(norms_table(traj, &exps, cfg)?);
            bundle.verdict("d0", &run.d0)?;
            bundle.verdict("large_data", &run.large_data)?;
            bundle.verdict("bound_exceeded", &run.bound_exceeded)?;
            bundle.verdict("aborted", &run.aborted)?;
            let converged = run.windows.iter().all(|w| w.status == PicardStatus::Converged);
            bundle.verdict("all_windows_converged", &converged)?;
            converged && !run.aborted && (run.large_data || !run.bound_exceeded)
        }
        None => {
            let (traj, rep) = picard_solve(&u0, &w0, &th0, &pc, &model)?;
            checkpoint_write(&traj, &hash, &dir.join("checkpoint_0001.ckpt"))?;
            bundle.tables.push(picard_table("picard", &rep));
            bundle.tables.push(trajectory_table(&traj));
            bundle.tables.push(norms_table(&traj, &exps, cfg)?);
            bundle.verdict("status", &rep.status)?;
            rep.status == PicardStatus::Converged
        }
    };
    finish(bundle, &dir, passed)
}

/// Largest ratio over iterations whose difference is well above the tolerance.
fn contraction(rep: &PicardReport, tol: f64) -> Option<f64> {
    rep.iterations
        .iter()
        .filter(|r| r.difference > 100.0 * tol)
        .filter_map(|r| r.ratio)
        .reduce(f64::max)
}

fn picard(cfg: &RunConfig, c: &Common) -> Result<bool, Error> {
    let exps = resolve_exponents(cfg, false)?;
    let pc = picard_cfg(cfg, &exps);
    let (u0, w0, th0) = cfg.initial_data();
    let (traj, rep) = picard_solve(&u0, &w0, &th0, &pc, &cfg.model())?;
    let mut bundle = ReportBundle::new("picard").with_config(cfg);
    bundle.tables.push(picard_table("picard", &rep));
    bundle.tables.push(norms_table(&traj, &exps, cfg)?);
    let worst = contraction(&rep, pc.tol);
    bundle.verdict("status", &rep.status)?;
    bundle.verdict("iterations", &rep.iterations.len())?;
    bundle.verdict("max_ratio", &worst)?;
    let passed = rep.status == PicardStatus::Converged && worst.map_or(true, |r| r < 1.0);
    finish(bundle, &out_dir(Some(cfg), c), passed)
}

fn ensemble(cfg: &RunConfig) -> Ensemble {
    let mut e = Ensemble::new(cfg.grid, cfg.verify.ensemble, cfg.seed).with_scales(cfg.params.scales());
    e.sigma = cfg.verify.sigma;
    e
}

fn push_estimate(bundle: &mut ReportBundle, rep: &EstimateReport) -> Result<bool, Error> {
    bundle.tables.push(estimate_table(&rep.lemma_id, rep));
    bundle.verdict(&rep.lemma_id, rep)?;
    println!(
        "{} {} max={:e} median={:e}",
        if rep.verdict.passed() { "pass" } else { "fail" },
        rep.lemma_id,
        rep.ratio_max,
        rep.ratio_median
    );
    Ok(rep.verdict.passed())
}

fn verify(name: &str, cfg: &RunConfig, c: &Common) -> Result<bool, Error> {
    if name == "list" {
        for n in VERIFY_NAMES {
            println!("{n}");
        }
        return Ok(true);
    }
    if !VERIFY_NAMES.contains(&name) {
        return Err(Error::Config(format!(
            "unknown check {name:?}; expected one of: {}",
            VERIFY_NAMES.join(", ")
        )));
    }
    let mut bundle = ReportBundle::new(&format!("verify {name}")).with_config(cfg);
    let v = cfg.verify;
    let passed = match name {
        "semigroup-smoothing" => {
            let ens = ensemble(cfg);
            let mut ok = true;
            for kind in [OperatorKind::StokesA, OperatorKind::EllipticGamma, OperatorKind::LaplaceB] {
                let lambda = v.lambda_fraction * ens.scales.min_eigenvalue(kind, &ens.grid);
                let rep = verify_smoothing(kind, v.alpha, lambda, v.p, &ens)?;
                let within = rep.within_bound && rep.smoothing.ratio_max.is_finite();
                println!(
                    "{} {} max={:e} bound={:e}",
                    if within { "pass" } else { "fail" },
                    rep.smoothing.lemma_id,
                    rep.smoothing.ratio_max,
                    rep.single_mode_bound
                );
                bundle.tables.push(estimate_table(&rep.smoothing.lemma_id, &rep.smoothing));
                bundle.tables.push(estimate_table(&rep.difference.lemma_id, &rep.difference));
                bundle.verdict(&rep.smoothing.lemma_id, &rep)?;
                ok &= within;
            }
            ok
        }
        "embedding" => push_estimate(&mut bundle, &verify_embeddings(v.alpha, v.p, v.k, v.s, &ensemble(cfg))?)?,
        "duhamel-order" => duhamel_order(cfg, &mut bundle)?,
        "local-smoothing" => local_smoothing(cfg, &mut bundle)?,
        "global-decay" => global_decay(cfg, &mut bundle)?,
        "residual-order" => residual_order(cfg, &mut bundle)?,
        "dependence" => dependence(cfg, &mut bundle)?,
        "time-hoelder" => time_hoelder(cfg, &mut bundle)?,
        "energy" => energy(cfg, &mut bundle)?,
        est => {
            let est = NonlinearEstimate::from_name(est).expect("listed name");
            let exps = resolve_exponents(cfg, true)?;
            push_estimate(&mut bundle, &verify_bilinear(est, &exps, &cfg.model(), &ensemble(cfg))?)?
        }
    };
    finish(bundle, &out_dir(Some(cfg), c), passed)
}

fn solve(cfg: &RunConfig, pc: &PicardConfig) -> Result<(TrajectoryState, PicardReport), Error> {
    let (u0, w0, th0) = cfg.initial_data();
    picard_solve(&u0, &w0, &th0, pc, &cfg.model())
}

fn converged(rep: &PicardReport) -> Result<(), Error> {
    if rep.status != PicardStatus::Converged {
        return Err(Error::Precondition(format!("Picard iteration ended with {:?}", rep.status)));
    }
    Ok(())
}

/// `‖u_h(T) - u_{h/2}(T)‖₂ / ‖u_{h/2}(T) - u_{h/4}(T)‖₂` in `[3.5, 4.5]`.
fn duhamel_order(cfg: &RunConfig, bundle: &mut ReportBundle) -> Result<bool, Error> {
    let exps = resolve_exponents(cfg, false)?;
    let mut finals = Vec::new();
    let mut t = Table::new("duhamel_order", &["nodes_per_unit", "quantity", "value"]);
    for k in 0..3 {
        let mut pc = picard_cfg(cfg, &exps);
        pc.nodes_per_unit <<= k;
        let (traj, rep) = solve(cfg, &pc)?;
        converged(&rep)?;
        let res = mild_residual(&traj, &pc, &cfg.model())?;
        t.push(
            vec![pc.nodes_per_unit.into(), "mild_residual".into(), res.iter().cloned().fold(0.0, f64::max).into()],
            Provenance::Measured,
        );
        finals.push((pc.nodes_per_unit, traj.last().0.clone(), traj.last().1.clone(), traj.last().2.clone()));
    }
    let diff = |a: usize, b: usize| -> Result<f64, Error> {
        let (x, y) = (&finals[a], &finals[b]);
        Ok(x.1.sub(&y.1)?.l2_norm() + x.2.sub(&y.2)?.l2_norm() + x.3.sub(&y.3)?.l2_norm())
    };
    let (e0, e1) = (diff(0, 1)?, diff(1, 2)?);
    let ratio = if e1 > 0.0 { e0 / e1 } else { f64::INFINITY };
    t.push(vec![finals[0].0.into(), "self_difference".into(), e0.into()], Provenance::Measured);
    t.push(vec![finals[1].0.into(), "self_difference".into(), e1.into()], Provenance::Measured);
    t.push(vec![finals[1].0.into(), "ratio".into(), ratio.into()], Provenance::Fitted);
    bundle.tables.push(t);
    bundle.verdict("ratio", &ratio)?;
    let ok = (3.5..=4.5).contains(&ratio) || (e0 == 0.0 && e1 == 0.0);
    println!("{} duhamel-order ratio={ratio:e}", if ok { "pass" } else { "fail" });
    Ok(ok)
}

/// Log-log slopes of every weighted norm on `[T₀/100, T₀]`, `T₀ = min(T, 10⁻³)`,
/// from a graded run on `[0, T₀]` with at least 40 steps.
fn local_smoothing(cfg: &RunConfig, bundle: &mut ReportBundle) -> Result<bool, Error> {
    let exps = resolve_exponents(cfg, false)?;
    let mut pc = picard_cfg(cfg, &exps);
    let t = pc.t_final.min(LOCAL_HORIZON);
    pc.nodes_per_unit = pc.nodes_per_unit.max((40.0 / t).ceil() as usize);
    pc.t_final = t;
    pc.graded = true;
    let (traj, rep) = solve(cfg, &pc)?;
    converged(&rep)?;
    let dcfg = DecayConfig::standard(&exps, cfg.params.scales()).near_zero(t / 100.0, t);
    let fits = fit_decay(&traj, &dcfg, pc.exec)?;
    report_fits(bundle, fits)
}

fn report_fits(bundle: &mut ReportBundle, fits: Vec<micropolar::analysis::DecayFit>) -> Result<bool, Error> {
    let mut ok = true;
    for f in &fits {
        println!(
            "{} {} slope={:e} expected={:e} residual={:e}",
            if f.passed { "pass" } else { "fail" },
            f.norm_tag,
            f.fitted_slope,
            f.expected,
            f.residual
        );
        ok &= f.passed;
    }
    bundle.tables.push(decay_table(&fits));
    bundle.verdict("fits", &fits)?;
    Ok(ok)
}

/// Exponential rates over `[1, t_total]` of the base norms along a global run.
fn global_decay(cfg: &RunConfig, bundle: &mut ReportBundle) -> Result<bool, Error> {
    let g = cfg
        .global
        .as_ref()
        .ok_or_else(|| Error::Config("global: required by global-decay".into()))?;
    if g.t_total <= 1.0 {
        return Err(Error::Config("global.t_total must exceed 1 for global-decay".into()));
    }
    let exps = resolve_exponents(cfg, false)?;
    let pc = picard_cfg(cfg, &exps);
    let (u0, w0, th0) = cfg.initial_data();
    let run = global_solve(&u0, &w0, &th0, &exps, &pc, &cfg.model(), g)?;
    let traj = run.trajectory.as_ref().expect("trajectory kept");
    let mut dcfg = DecayConfig::standard(&exps.base_only(), cfg.params.scales()).large_t(1.0, g.t_total);
    dcfg.norms = weighted_norms(Some(&exps.base_only()));
    dcfg.rate = exps
        .lambda
        .ok_or_else(|| Error::Config("exponents.lambda is required by global-decay".into()))?;
    bundle.tables.push(elog_table(&run, g.bound_constant));
    let ok = report_fits(bundle, fit_decay(traj, &dcfg, pc.exec)?)?;
    Ok(ok && !run.aborted)
}

/// Strong residual of `u` at `T/2` under two halvings of the step; order ≥ 1.8.
fn residual_order(cfg: &RunConfig, bundle: &mut ReportBundle) -> Result<bool, Error> {
    let exps = resolve_exponents(cfg, false)?;
    let mut table = Table::new("residual_order", &["nodes_per_unit", "t", "residual"]);
    let mut mids = Vec::new();
    for k in 0..3 {
        let mut pc = picard_cfg(cfg, &exps);
        pc.nodes_per_unit <<= k;
        let (traj, rep) = solve(cfg, &pc)?;
        let res = verify_residual(&traj, &rep, &cfg.model(), Some(&exps), pc.exec)?;
        let tm = pc.t_final / 2.0;
        let r = res
            .at(tm)
            .ok_or_else(|| Error::Config("picard: T/2 must be a node; use an even number of steps".into()))?[0];
        table.push(vec![pc.nodes_per_unit.into(), tm.into(), r.into()], Provenance::Measured);
        if k == 2 {
            bundle.tables.push(residual_table(&res));
        }
        mids.push(r);
    }
    let orders: Vec<f64> = mids.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    for (k, o) in orders.iter().enumerate() {
        table.push(vec![(k as usize).into(), Cell::Empty, (*o).into()], Provenance::Fitted);
    }
    bundle.tables.push(table);
    bundle.verdict("orders", &orders)?;
    let ok = mids.iter().all(|r| *r == 0.0) || orders.iter().all(|o| *o >= 1.8);
    println!("{} residual-order orders={orders:?}", if ok { "pass" } else { "fail" });
    Ok(ok)
}

/// Perturbations of `u₀` by `δ ∈ {1e-4, 5e-5}` along a random solenoidal direction.
fn dependence(cfg: &RunConfig, bundle: &mut ReportBundle) -> Result<bool, Error> {
    let exps = resolve_exponents(cfg, false)?;
    let pc = picard_cfg(cfg, &exps);
    let model = cfg.model();
    let (u0, w0, th0) = cfg.initial_data();
    let (base, rep) = picard_solve(&u0, &w0, &th0, &pc, &model)?;
    converged(&rep)?;
    let dir = random_solenoidal(cfg.grid, 2.0, 1.0, &mut rng(cfg.seed.wrapping_add(1)));
    let mut runs: Vec<(SpectralField, TrajectoryState)> = Vec::new();
    for d in [1e-4, 5e-5] {
        let up = u0.axpy(d, &dir)?;
        let (traj, rep) = picard_solve(&up, &w0, &th0, &pc, &model)?;
        converged(&rep)?;
        runs.push((up, traj));
    }
    let perturbed: Vec<RunData> = runs
        .iter()
        .map(|(u, t)| RunData {
            traj: t,
            u0: u,
            omega0: &w0,
            theta0: &th0,
        })
        .collect();
    let rep = verify_dependence(
        RunData {
            traj: &base,
            u0: &u0,
            omega0: &w0,
            theta0: &th0,
        },
        &perturbed,
        &exps,
        &cfg.params.scales(),
        pc.exec,
    )?;
    let mut t = Table::new("dependence", &["delta", "d0", "ratio"]);
    for (k, d) in [1e-4, 5e-5].into_iter().enumerate() {
        t.push(vec![d.into(), rep.d0[k].into(), rep.ratios[k].into()], Provenance::Measured);
    }
    bundle.tables.push(t);
    bundle.verdict("dependence", &rep)?;
    println!("{} dependence spread={:e}", if rep.linear { "pass" } else { "fail" }, rep.spread);
    Ok(rep.linear)
}

/// Hölder quotient of `u` in `X¹` with exponent `verify.alpha` on `[T/4, T]`.
fn time_hoelder(cfg: &RunConfig, bundle: &mut ReportBundle) -> Result<bool, Error> {
    let exps = resolve_exponents(cfg, false)?;
    let pc = picard_cfg(cfg, &exps);
    let (traj, rep) = solve(cfg, &pc)?;
    converged(&rep)?;
    let h = verify_time_hoelder(&traj, cfg.verify.alpha, pc.t_final / 4.0, exps.p, &cfg.params.scales(), pc.exec)?;
    let mut t = Table::new("time_hoelder", &["quantity", "value"]);
    t.push(vec!["quotient".into(), h.quotient.into()], Provenance::Measured);
    t.push(vec!["neighbour_quotient".into(), h.neighbour_quotient.into()], Provenance::Measured);
    bundle.tables.push(t);
    bundle.verdict("time_hoelder", &h)?;
    let ok = h.quotient.is_finite();
    println!("{} time-hoelder quotient={:e}", if ok { "pass" } else { "fail" }, h.quotient);
    Ok(ok)
}

/// Energy drift ≤ 1e-3 and monotone kinetic energy when unforced.
fn energy(cfg: &RunConfig, bundle: &mut ReportBundle) -> Result<bool, Error> {
    let exps = resolve_exponents(cfg, false)?;
    let pc = picard_cfg(cfg, &exps);
    let (traj, rep) = solve(cfg, &pc)?;
    converged(&rep)?;
    let e = energy_report(&traj, &cfg.params, &cfg.forcings.f, &cfg.forcings.g, pc.exec)?;
    bundle.tables.push(energy_table(&e));
    bundle.verdict("energy", &e)?;
    let ok = !e.conservation_checked || (e.relative_drift <= 1e-3 && e.kinetic_monotone);
    println!(
        "{} energy drift={:e} monotone={}",
        if ok { "pass" } else { "fail" },
        e.relative_drift,
        e.kinetic_monotone
    );
    Ok(ok)
}

/// A run config (has `grid`) or a bare exponent object.
fn load_exponents(c: &Common) -> Result<(ExponentConfig, bool, Option<RunConfig>), Error> {
    let path = c
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if value.get("grid").is_some() {
        let cfg = RunConfig::from_json(&text)?;
        Ok((cfg.exponents, cfg.select_exponents, Some(cfg)))
    } else {
        let e: ExponentConfig =
            serde_json::from_value(value).map_err(|e| Error::Config(format!("exponents: {e}")))?;
        e.validate_fields()?;
        Ok((e, true, None))
    }
}

fn constraint_table(name: &str, v: &micropolar::exponents::Verdict) -> Table {
    let mut t = Table::new(name, &["id", "lhs", "relation", "rhs", "satisfied"]);
    for c in &v.checked {
        t.push(
            vec![
                c.id.as_str().into(),
                c.lhs.into(),
                format!("{:?}", c.relation).into(),
                c.rhs.into(),
                c.satisfied().to_string().into(),
            ],
            Provenance::Measured,
        );
    }
    t
}

fn exponents(action: ExponentAction, c: &Common) -> Result<bool, Error> {
    let (e, _, run) = load_exponents(c)?;
    let dir = out_dir(run.as_ref(), c);
    match action {
        ExponentAction::Check { level } => {
            let v = check_config(&e, level.into())?;
            for x in &v.violations {
                println!("violated {x}");
            }
            let mut bundle = ReportBundle::new("exponents check");
            if let Some(r) = &run {
                bundle = bundle.with_config(r);
            }
            bundle.tables.push(constraint_table("constraints", &v));
            bundle.verdict("verdict", &v)?;
            finish(bundle, &dir, v.passed)
        }
        ExponentAction::Select => {
            let mut bundle = ReportBundle::new("exponents select");
            if let Some(r) = &run {
                bundle = bundle.with_config(r);
            }
            match select_intermediate(&e) {
                Ok(sel) => {
                    let json = serde_json::to_string_pretty(&sel)?;
                    println!("{json}");
                    std::fs::create_dir_all(&dir)?;
                    std::fs::write(dir.join("exponents.json"), format!("{json}\n"))?;
                    bundle.verdict("selected", &sel)?;
                    bundle.verdict("note", &"ties broken by the midpoint/lattice rule")?;
                    finish(bundle, &dir, true)
                }
                Err(Error::Infeasible(r)) => {
                    println!("infeasible: {r}");
                    bundle.verdict("infeasible", &r)?;
                    finish(bundle, &dir, false)
                }
                Err(e) => Err(e),
            }
        }
    }
}

fn gronwall(inp: GronwallInput, t_final: f64, steps: usize, c: &Common) -> Result<bool, Error> {
    if !(t_final > 0.0 && t_final.is_finite()) || steps < 2 {
        return Err(Error::Config("gronwall: --t-final must be positive and --steps at least 2".into()));
    }
    let rep = gronwall_check(&inp, t_final, steps)?;
    let mut bundle = ReportBundle::new("gronwall");
    bundle.tables.push(gronwall_table(&rep));
    bundle.verdict("input", &inp)?;
    bundle.verdict("constant", &rep.constant)?;
    bundle.verdict("violations", &rep.violations)?;
    bundle.verdict("checked", &rep.checked)?;
    bundle.verdict("min_ratio", &rep.min_ratio)?;
    println!(
        "C={:e} n={} violations={}/{} min_ratio={:e}",
        rep.constant.c, rep.constant.n_beta, rep.violations, rep.checked, rep.min_ratio
    );
    finish(bundle, &out_dir(None, c), rep.dominates())
}

fn checkpoint(action: CheckpointAction, c: &Common) -> Result<bool, Error> {
    match action {
        CheckpointAction::Verify { path } => {
            let header = checkpoint_header(&path)?;
            match &c.config {
                Some(_) => {
                    let cfg = load(c, true)?;
                    checkpoint_read_for(&path, &cfg.hash())?;
                }
                None => {
                    checkpoint_read(&path)?;
                }
            }
            println!("{}", serde_json::to_string_pretty(&header)?);
            Ok(true)
        }
        CheckpointAction::Resume { path } => {
            let cfg = load(c, true)?;
            let g = cfg
                .global
                .as_ref()
                .ok_or_else(|| Error::Config("global: required to resume a checkpoint".into()))?;
            let prefix = checkpoint_read_for(&path, &cfg.hash())?;
            let exps = resolve_exponents(&cfg, false)?;
            let pc = picard_cfg(&cfg, &exps);
            let run = global_resume(&prefix, &exps, &pc, &cfg.model(), g)?;
            let dir = out_dir(Some(&cfg), c);
            let traj = run.trajectory.as_ref().expect("trajectory kept");
            checkpoint_write(traj, &cfg.hash(), &dir.join("checkpoint_resumed.ckpt"))?;
            let mut bundle = ReportBundle::new("checkpoint resume").with_config(&cfg);
            bundle.tables.push(elog_table(&run, g.bound_constant));
            bundle.tables.push(windows_table(&run));
            bundle.tables.push(trajectory_table(traj));
            bundle.verdict("aborted", &run.aborted)?;
            bundle.verdict("bound_exceeded", &run.bound_exceeded)?;
            let ok = !run.aborted
                && run.windows.iter().all(|w| w.status == PicardStatus::Converged)
                && (run.large_data || !run.bound_exceeded);
            finish(bundle, &dir, ok)
        }
    }
}
