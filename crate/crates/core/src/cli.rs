//! Configuration and dispatch for the `statdist` binary.
//!
//! Exit codes: 0 on success, 1 when a computed invariant fails, 2 on bad
//! input or I/O trouble.

use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::defaults::{LEAF_CAP, TOL_BOUND, TOL_EQUIDIAG, TOL_PROTOCOL};
use crate::equidiag::{equi_diagonalize, tolerance_scale};
use crate::formats::{fmt_f64, parse_density_file, parse_matrix_file, parse_state_file};
use crate::linalg::unitarity_defect;
use crate::locc::{check_stage_cascade, locc_distance, run_locc_with_tol, validate_order, verify_transcript};
use crate::measure::global_distance;
use crate::mixed::{bures_angle, transition_equidiag_gap, transition_operator, MixedState};
use crate::oracle::{optimize_global_measurement, sample_bound_check, sample_tightness_check, SearchConfig};
use crate::report::{Check, Report, Table};
use crate::rng::{derive_seed, CounterRng};
use crate::selftest::{criterion_title, run_suite};
use crate::statekit::{random_state_pair, state_overlap, PartyLayout, PureState};
use crate::{CMatrix, Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Overlap and global statistical distance of a state pair.
    Pure,
    /// Run the sequential LOCC protocol and print its outcome table.
    Locc,
    /// Equalize the diagonal of a matrix by a unitary change of basis.
    Equidiag,
    /// Check the measurement bound on random POVMs and search for the optimum.
    Oracle,
    /// Bures angle and the transition-operator measurement for density matrices.
    Mixed,
    /// Run the fixed-seed invariant suite.
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Pure => "pure",
            Command::Locc => "locc",
            Command::Equidiag => "equidiag",
            Command::Oracle => "oracle",
            Command::Mixed => "mixed",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "statdist", version, about = "Statistical distance between quantum states under global and LOCC measurements")]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
    /// State file holding a pair (pure, locc, oracle).
    #[arg(long, global = true)]
    pub states: Option<PathBuf>,
    /// Matrix file (equidiag).
    #[arg(long, global = true)]
    pub matrix: Option<PathBuf>,
    #[arg(long, global = true)]
    pub rho1: Option<PathBuf>,
    #[arg(long, global = true)]
    pub rho2: Option<PathBuf>,
    /// Party dimensions for a seeded random pair when no state file is given, e.g. "2 3".
    #[arg(long, global = true)]
    pub dims: Option<String>,
    /// Measurement order as party indices, e.g. "2 0 1".
    #[arg(long, global = true)]
    pub order: Option<String>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Equi-diagonalization tolerance, relative to max(1, max |M_ij|).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

/// Everything a run depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub states: Option<PathBuf>,
    pub matrix: Option<PathBuf>,
    pub rho1: Option<PathBuf>,
    pub rho2: Option<PathBuf>,
    pub layout: Option<Vec<usize>>,
    pub order: Option<Vec<usize>>,
    pub seed: u64,
    pub restarts: Option<usize>,
    pub steps: Option<usize>,
    pub trials: Option<usize>,
    pub dim: Option<usize>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            states: None,
            matrix: None,
            rho1: None,
            rho2: None,
            layout: None,
            order: None,
            seed: 0,
            restarts: None,
            steps: None,
            trials: None,
            dim: None,
            tol: None,
            out: None,
        }
    }
}

fn parse_list(flag: &str, text: &str) -> Result<Vec<usize>> {
    text.split_whitespace()
        .map(|w| w.parse::<usize>().map_err(|_| Error::Usage(format!("--{flag}: `{w}` is not a non-negative integer"))))
        .collect()
}

impl TryFrom<Args> for ExperimentConfig {
    type Error = Error;

    fn try_from(a: Args) -> Result<Self> {
        if let Some(t) = a.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Usage(format!("--tol must be positive, got {t}")));
            }
        }
        Ok(Self {
            command: a.command,
            states: a.states,
            matrix: a.matrix,
            rho1: a.rho1,
            rho2: a.rho2,
            layout: a.dims.as_deref().map(|d| parse_list("dims", d)).transpose()?,
            order: a.order.as_deref().map(|o| parse_list("order", o)).transpose()?,
            seed: a.seed,
            restarts: a.restarts,
            steps: a.steps,
            trials: a.trials,
            dim: a.dim,
            tol: a.tol,
            out: a.out,
        })
    }
}

/// Result of one run. `report` is absent when the input was rejected.
#[derive(Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub report: Option<Report>,
    pub message: Option<String>,
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn echo_config(r: &mut Report, cfg: &ExperimentConfig) {
    let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    let entries: [(&str, Option<String>); 11] = [
        ("states", path(&cfg.states)),
        ("matrix", path(&cfg.matrix)),
        ("rho1", path(&cfg.rho1)),
        ("rho2", path(&cfg.rho2)),
        ("dims", cfg.layout.as_deref().map(join)),
        ("order", cfg.order.as_deref().map(join)),
        ("restarts", cfg.restarts.map(|v| v.to_string())),
        ("steps", cfg.steps.map(|v| v.to_string())),
        ("trials", cfg.trials.map(|v| v.to_string())),
        ("dim", cfg.dim.map(|v| v.to_string())),
        ("tol", cfg.tol.map(fmt_f64)),
    ];
    r.config("seed", cfg.seed);
    for (k, v) in entries {
        if let Some(v) = v {
            r.config(k, v);
        }
    }
}

/// Load the pair from `--states`, or draw one from `--dims` and `--seed`.
fn state_pair(cfg: &ExperimentConfig, report: &mut Report) -> Result<(PureState, PureState)> {
    if let Some(path) = &cfg.states {
        let mut s = parse_state_file(path)?;
        if s.len() != 2 {
            return Err(Error::Usage(format!("{} holds one state; a pair is needed", path.display())));
        }
        let s2 = s.pop().expect("pair");
        let s1 = s.pop().expect("pair");
        if s1.layout() != s2.layout() {
            return Err(Error::Dimension(format!("layouts {:?} and {:?} differ", s1.layout().dims(), s2.layout().dims())));
        }
        return Ok((s1, s2));
    }
    let dims = match (&cfg.layout, cfg.dim) {
        (Some(d), _) => d.clone(),
        (None, Some(n)) => vec![n],
        (None, None) => return Err(Error::Usage("give --states, or --dims/--dim for a seeded random pair".into())),
    };
    let layout = PartyLayout::new(dims)?;
    report.config("pair", "random");
    Ok(random_state_pair(&layout, cfg.seed))
}

fn overlap_values(r: &mut Report, s1: &PureState, s2: &PureState) -> Result<f64> {
    let ov = state_overlap(s1, s2)?;
    let dg = global_distance(s1, s2)?;
    r.value("overlap_re", ov.re).value("overlap_im", ov.im).value("overlap_abs", ov.norm());
    r.value("d_global", dg).value("d_global_deg", dg.to_degrees());
    Ok(dg)
}

fn run_pure(cfg: &ExperimentConfig, r: &mut Report) -> Result<()> {
    let (s1, s2) = state_pair(cfg, r)?;
    overlap_values(r, &s1, &s2)?;
    Ok(())
}

fn run_locc(cfg: &ExperimentConfig, r: &mut Report) -> Result<()> {
    let (s1, s2) = state_pair(cfg, r)?;
    let layout = s1.layout().clone();
    if layout.total_dim() > LEAF_CAP {
        return Err(Error::Usage(format!("{} leaves exceed the cap of {LEAF_CAP}", layout.total_dim())));
    }
    let order = cfg.order.clone().unwrap_or_else(|| (0..layout.parties()).collect());
    validate_order(&layout, &order)?;
    let t = run_locc_with_tol(&s1, &s2, &order, cfg.tol.unwrap_or(TOL_EQUIDIAG))?;

    overlap_values(r, &s1, &s2)?;
    let dl = locc_distance(&t);
    let cascade = check_stage_cascade(&t);
    let inv = verify_transcript(&t);
    r.value("d_locc", dl).value("d_locc_deg", dl.to_degrees());
    r.value("leaves", t.leaves.len() as f64);
    r.value("cascade_sibling", cascade.sibling);
    r.value("cascade_parent_child", cascade.parent_child);
    r.value("cascade_telescoped", cascade.telescoped);
    r.value("cascade_max_violation", cascade.max());
    r.check(Check::at_most("leaf_amplitude_constancy", inv.leaf_constancy, TOL_PROTOCOL));
    r.check(Check::at_most("amplitude_sum_vs_overlap", inv.optimality, TOL_PROTOCOL));
    r.check(Check::at_most("completeness", inv.completeness, TOL_PROTOCOL));
    r.check(Check::at_most("probability_sum", inv.probability, TOL_PROTOCOL));
    r.check(Check::at_most("stage_cascade", cascade.max(), TOL_PROTOCOL));

    let mut table = Table::new(&["outcome", "amp_re", "amp_im", "p1", "p2"]);
    for leaf in &t.leaves {
        table.push(vec![
            leaf.outcome_label(),
            fmt_f64(leaf.amplitude.re),
            fmt_f64(leaf.amplitude.im),
            fmt_f64(leaf.p1),
            fmt_f64(leaf.p2),
        ]);
    }
    r.table("leaves", table);
    Ok(())
}

fn run_equidiag(cfg: &ExperimentConfig, r: &mut Report) -> Result<()> {
    let m: CMatrix = match (&cfg.matrix, cfg.dim) {
        (Some(p), _) => parse_matrix_file(p)?,
        (None, Some(n)) if n > 0 => {
            r.config("matrix_source", "ginibre");
            CounterRng::new(cfg.seed).ginibre(n, n)
        }
        _ => return Err(Error::Usage("give --matrix, or --dim for a seeded random matrix".into())),
    };
    let tol = cfg.tol.unwrap_or(TOL_EQUIDIAG);
    let eq = equi_diagonalize(&m, tol)?;
    let scale = tolerance_scale(&m);
    r.value("n", m.nrows() as f64).value("tau_re", eq.tau.re).value("tau_im", eq.tau.im);
    r.value("scale", scale).value("residual", eq.residual);
    r.check(Check::at_most("relative_diagonal_residual", eq.residual / scale, tol));
    r.check(Check::at_most("unitarity_defect", unitarity_defect(&eq.basis), 1e-12));
    let mut table = Table::new(&["row", "col", "re", "im"]);
    for row in 0..eq.basis.nrows() {
        for col in 0..eq.basis.ncols() {
            let z = eq.basis[(row, col)];
            table.push(vec![row.to_string(), col.to_string(), fmt_f64(z.re), fmt_f64(z.im)]);
        }
    }
    r.table("basis", table);
    Ok(())
}

fn search_config(cfg: &ExperimentConfig) -> SearchConfig {
    let d = SearchConfig::default();
    SearchConfig { restarts: cfg.restarts.unwrap_or(d.restarts), steps: cfg.steps.unwrap_or(d.steps), seed: cfg.seed, ..d }
}

fn run_oracle(cfg: &ExperimentConfig, r: &mut Report) -> Result<()> {
    let search = search_config(cfg);
    search.validate()?;
    let trials = cfg.trials.unwrap_or(1000);
    let dim = match (&cfg.states, cfg.dim) {
        (_, Some(d)) => d,
        (Some(_), None) => 0,
        (None, None) => 2,
    };
    r.config("search_restarts", search.restarts).config("search_steps", search.steps);

    let (s1, s2) = if cfg.states.is_some() {
        state_pair(cfg, r)?
    } else {
        r.config("pair", "random");
        random_state_pair(&PartyLayout::single(dim)?, derive_seed(cfg.seed, 0))
    };
    let dim = s1.dim();
    let violation = sample_bound_check(dim, trials, cfg.seed)?;
    let tightness = sample_tightness_check(dim, trials.min(100), cfg.seed)?;
    r.value("sampled_bound_max_violation", violation);
    r.value("equidiag_bound_max_gap", tightness);
    r.check(Check::at_most("overlap_bound", violation, TOL_BOUND));
    r.check(Check::at_most("equidiag_attains_bound", tightness, TOL_PROTOCOL));

    let dg = overlap_values(r, &s1, &s2)?;
    let (d, _) = optimize_global_measurement(&s1, &s2, &search)?;
    r.value("d_search", d).value("d_search_deg", d.to_degrees()).value("search_gap", dg - d);
    r.check(Check::at_most("search_exceeds_global", d - dg, TOL_BOUND));
    Ok(())
}

fn run_mixed(cfg: &ExperimentConfig, r: &mut Report) -> Result<()> {
    let (r1, r2) = match (&cfg.rho1, &cfg.rho2) {
        (Some(a), Some(b)) => (parse_density_file(a)?, parse_density_file(b)?),
        (None, None) => {
            let dim = cfg.dim.unwrap_or(2);
            r.config("pair", "random full rank");
            (
                MixedState::random_full_rank(dim, derive_seed(cfg.seed, 1)),
                MixedState::random_full_rank(dim, derive_seed(cfg.seed, 2)),
            )
        }
        _ => return Err(Error::Usage("--rho1 and --rho2 go together".into())),
    };
    let bures = bures_angle(&r1, &r2)?;
    let t = transition_operator(&r1, &r2)?;
    let trace_t: num_complex::Complex64 = (0..t.matrix.nrows()).map(|k| t.matrix[(k, k)]).sum();
    let gap = transition_equidiag_gap(&r1, &r2)?;
    r.value("d_bures", bures).value("d_bures_deg", bures.to_degrees());
    r.value("transition_trace_re", trace_t.re).value("transition_trace_im", trace_t.im);
    r.value("d_equidiag", gap.d_equidiag).value("gap", gap.gap);
    r.check(Check::at_most("equidiag_exceeds_bures", gap.d_equidiag - bures, TOL_PROTOCOL));
    r.check(Check::at_most("bures_angle_range", bures - PI / 2.0, TOL_BOUND));
    Ok(())
}

fn run_selftest(r: &mut Report) -> Result<()> {
    let suite = run_suite()?;
    r.values = suite.values;
    r.checks = suite.checks;
    r.config("criteria", (1..crate::selftest::CRITERIA).map(criterion_title).collect::<Vec<_>>().join("; "));
    Ok(())
}

/// Exit code for an error raised while running a subcommand.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Convergence { .. } | Error::InfeasibleTarget { .. } => EXIT_INVARIANT,
        _ => EXIT_INPUT,
    }
}

/// Run one subcommand. The report is returned, not written.
pub fn run_command(cfg: &ExperimentConfig) -> Outcome {
    let mut r = Report::new(cfg.command.name());
    echo_config(&mut r, cfg);
    let res = match cfg.command {
        Command::Pure => run_pure(cfg, &mut r),
        Command::Locc => run_locc(cfg, &mut r),
        Command::Equidiag => run_equidiag(cfg, &mut r),
        Command::Oracle => run_oracle(cfg, &mut r),
        Command::Mixed => run_mixed(cfg, &mut r),
        Command::Selftest => run_selftest(&mut r),
    };
    if let Err(e) = res {
        return Outcome { exit_code: exit_code_for(&e), report: None, message: Some(e.to_string()) };
    }
    let bad = r.non_finite();
    if !bad.is_empty() {
        let message = format!("non-finite report values: {}", bad.join(", "));
        return Outcome { exit_code: EXIT_INVARIANT, report: Some(r), message: Some(message) };
    }
    let failed: Vec<String> = r.failed_checks().iter().map(|c| format!("invariant violated: {}", c.line())).collect();
    if failed.is_empty() {
        Outcome { exit_code: EXIT_OK, report: Some(r), message: None }
    } else {
        Outcome { exit_code: EXIT_INVARIANT, report: Some(r), message: Some(failed.join("\n")) }
    }
}

/// Parse the process arguments, run, and write the report. Returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match ExperimentConfig::try_from(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("statdist: {e}");
            return EXIT_INPUT;
        }
    };
    let outcome = run_command(&cfg);
    if let Some(r) = &outcome.report {
        match &cfg.out {
            Some(path) => {
                if let Err(e) = r.write_to(path) {
                    eprintln!("statdist: {e}");
                    return EXIT_INPUT;
                }
            }
            None => print!("{}", r.render()),
        }
    }
    if let Some(m) = &outcome.message {
        eprintln!("statdist: {m}");
    }
    outcome.exit_code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(cmd: Command) -> ExperimentConfig {
        ExperimentConfig::new(cmd)
    }

    #[test]
    fn args_parse_into_config() {
        let a = Args::try_parse_from(["statdist", "locc", "--order", "2 0 1", "--dims", "2 2 2", "--seed", "9"]).unwrap();
        let c = ExperimentConfig::try_from(a).unwrap();
        assert_eq!(c.command, Command::Locc);
        assert_eq!(c.order, Some(vec![2, 0, 1]));
        assert_eq!(c.layout, Some(vec![2, 2, 2]));
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn bad_flags_rejected() {
        let a = Args::try_parse_from(["statdist", "pure", "--tol=-1"]).unwrap();
        assert!(ExperimentConfig::try_from(a).is_err());
        let a = Args::try_parse_from(["statdist", "locc", "--order", "0 x"]).unwrap();
        assert!(ExperimentConfig::try_from(a).is_err());
        assert_eq!(main_with_args(["statdist", "bogus"]), EXIT_INPUT);
    }

    #[test]
    fn pure_needs_a_pair() {
        let out = run_command(&cfg(Command::Pure));
        assert_eq!(out.exit_code, EXIT_INPUT);
        assert!(out.report.is_none());
    }

    #[test]
    fn random_locc_report() {
        let mut c = cfg(Command::Locc);
        c.layout = Some(vec![2, 3]);
        c.seed = 4;
        let out = run_command(&c);
        assert_eq!(out.exit_code, EXIT_OK, "{:?}", out.message);
        let r = out.report.unwrap();
        assert_eq!(r.get_table("leaves").unwrap().rows.len(), 6);
        assert!((r.get("d_locc").unwrap() - r.get("d_global").unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn bad_order_is_input_error() {
        let mut c = cfg(Command::Locc);
        c.layout = Some(vec![2, 2]);
        c.order = Some(vec![0, 0]);
        assert_eq!(run_command(&c).exit_code, EXIT_INPUT);
    }

    #[test]
    fn leaf_cap_enforced() {
        let mut c = cfg(Command::Locc);
        c.layout = Some(vec![65, 65]);
        let out = run_command(&c);
        assert_eq!(out.exit_code, EXIT_INPUT);
        assert!(out.message.unwrap().contains("cap"));
    }

    #[test]
    fn random_equidiag_and_mixed() {
        let mut c = cfg(Command::Equidiag);
        c.dim = Some(5);
        assert_eq!(run_command(&c).exit_code, EXIT_OK);
        let out = run_command(&cfg(Command::Mixed));
        assert_eq!(out.exit_code, EXIT_OK, "{:?}", out.message);
        assert!(out.report.unwrap().get("gap").unwrap() >= -1e-9);
    }

    #[test]
    fn oracle_small() {
        let mut c = cfg(Command::Oracle);
        c.dim = Some(2);
        c.trials = Some(50);
        c.steps = Some(200);
        let out = run_command(&c);
        assert_eq!(out.exit_code, EXIT_OK, "{:?}", out.message);
        assert!(out.report.unwrap().get("search_gap").unwrap() <= 1e-6);
    }
}
