//! Command-line front end. Exit status: 0 success, 1 validation error,
//! 2 budget exceeded, 3 a checked property was violated.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::ambiguity::AmbiguitySet;
use crate::config::{keyed, PolicyConfig, RunConfig};
use crate::counterexamples::{exm3_report, family_expect, heavy_lln_value, heavy_phi, FamilyName};
use crate::error::{Error, Result};
use crate::inequalities::{capacity_product_identity, ottaviani_check, OttavianiStatus};
use crate::lattice_dp::{capacity, optimize_function, policy_value, robust_value, KernelPolicy, Side};
use crate::lln::{chebyshev_bound_check, lln_sweep, maximal_dist_value, peng_condition_report, Source};
use crate::montecarlo::{simulate, SimConfig};
use crate::oracle::{brute_force_value, Target};
use crate::report::Table;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

const DEFAULT_OUT: &str = "results";
const DEFAULT_PATHS: u64 = 100_000;
const ORACLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "sublin", version, about = "Sublinear expectations on lattices: exact values, capacities and LLN experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV and JSON reports
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Single horizon, replacing `horizons`
    #[arg(long, global = true)]
    n: Option<u64>,
    /// Family truncation bound
    #[arg(long = "K", global = true)]
    k: Option<u64>,
    /// Suppress the summary line
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Robust value E[f(S_n/n)] and its lower counterpart
    Eval,
    /// Upper and lower capacity of a path event
    Capacity,
    /// DP value against the maximal-distribution limit across horizons
    LlnSweep,
    /// Tail condition and truncated means for n = 1..n_max
    Conditions,
    /// Ottaviani's maximal inequality for capacities
    Ottaviani,
    /// V(max |X_k| >= t) against 1 - (1 - V(|X_1| >= t))^n
    ProductIdentity,
    /// Truncation-plus-Chebyshev bound on V(S_n/n > mu_n + eps)
    Chebyshev,
    /// Countable counterexample families
    Counterexample {
        #[command(subcommand)]
        which: Family,
    },
    /// Monte Carlo under the robust or a constant kernel policy
    Simulate,
    /// Lattice DP against the history-tree brute force
    Oracle,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Family {
    Exm3,
    Heavy,
}

struct Outcome {
    tables: Vec<Table>,
    summary: String,
    violation: Option<String>,
}

impl Outcome {
    fn ok(table: Table, summary: String) -> Self {
        Self {
            tables: vec![table],
            summary,
            violation: None,
        }
    }
}

/// Runs the command line `args` (including the program name) and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_budget() {
                EXIT_BUDGET
            } else {
                EXIT_INVALID
            }
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if let Some(n) = cli.n {
        cfg.horizons = Some(vec![n]);
    }
    if let (Some(k), Some(fam)) = (cli.k, cfg.family.as_mut()) {
        fam.truncation = k;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));

    let outcome = match cli.command {
        Command::Eval => eval(&cfg)?,
        Command::Capacity => capacity_cmd(&cfg)?,
        Command::LlnSweep => sweep(&cfg)?,
        Command::Conditions => conditions(&cfg)?,
        Command::Ottaviani => ottaviani(&cfg)?,
        Command::ProductIdentity => product_identity(&cfg)?,
        Command::Chebyshev => chebyshev(&cfg)?,
        Command::Counterexample { which: Family::Exm3 } => exm3(&cfg, cli.k)?,
        Command::Counterexample { which: Family::Heavy } => heavy(&cfg, cli.k)?,
        Command::Simulate => simulate_cmd(&cfg)?,
        Command::Oracle => oracle(&cfg)?,
    };
    let mut written = Vec::new();
    for t in &outcome.tables {
        let (csv, _) = t.write(&out)?;
        written.push(csv.display().to_string());
    }
    if !cli.quiet {
        println!("{} -> {}", outcome.summary, written.join(", "));
    }
    Ok(match outcome.violation {
        Some(v) => {
            eprintln!("property violated: {v}");
            EXIT_VIOLATION
        }
        None => EXIT_OK,
    })
}

fn set_of(cfg: &RunConfig) -> Result<AmbiguitySet> {
    cfg.set()
}

fn eval(cfg: &RunConfig) -> Result<Outcome> {
    let mut t = Table::new("eval", &["n", "upper", "lower"]);
    match cfg.source()? {
        Source::Family(fam) => {
            let f = cfg.function()?;
            let up = family_expect(&fam, &f).map_err(|e| keyed("family.truncation", e))?;
            let env = fam.envelope(&f)?;
            t.push(vec![1u64.into(), up.value.into(), env.lower.into()]);
            let t = t.with_meta("tail_note", &up.tail_note);
            Ok(Outcome::ok(t, format!("eval: {} over {fam:?} = {}", f, up.value)))
        }
        Source::Set(set) => {
            let f = cfg.function()?;
            let opts = cfg.dp_options();
            for n in cfg.horizons()? {
                let up = robust_value(&set, n as usize, &f, &opts).map_err(|e| keyed("function", e))?;
                let lo = optimize_function(&set, n as usize, &f, Side::Lower, &opts)?;
                t.push(vec![n.into(), up.value.into(), lo.value.into()]);
            }
            let rows = t.rows.len();
            Ok(Outcome::ok(t, format!("eval: {rows} horizons")))
        }
    }
}

fn capacity_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let set = set_of(cfg)?;
    let event = cfg.event()?;
    let opts = cfg.dp_options();
    let mut t = Table::new("capacity", &["n", "upper", "lower"]);
    for n in cfg.horizons()? {
        let up = capacity(&set, n as usize, &event, Side::Upper, &opts).map_err(|e| keyed("event", e))?;
        let lo = capacity(&set, n as usize, &event, Side::Lower, &opts)?;
        t.push(vec![n.into(), up.into(), lo.into()]);
    }
    let t = t.with_meta("event", event);
    Ok(Outcome::ok(t, format!("capacity: {event:?}")))
}

fn sweep(cfg: &RunConfig) -> Result<Outcome> {
    let set = set_of(cfg)?;
    let f = cfg.function()?;
    let report = lln_sweep(&set, &f, &cfg.horizons()?, &cfg.dp_options()).map_err(|e| keyed("function", e))?;
    let mut t = Table::new("lln_sweep", &["n", "dp_value", "limit_value", "abs_error"]);
    for r in &report.rows {
        t.push(vec![r.n.into(), r.dp_value.into(), r.limit_value.into(), r.abs_error.into()]);
    }
    let last = report.rows.last().map_or(f64::NAN, |r| r.abs_error);
    let t = t.with_meta("set", &report.set).with_meta("function", &report.function);
    Ok(Outcome::ok(t, format!("lln-sweep: final abs_error {last}")))
}

fn conditions(cfg: &RunConfig) -> Result<Outcome> {
    let source = cfg.source()?;
    let n_max = *cfg.horizons()?.iter().max().unwrap();
    let report = peng_condition_report(&source, n_max)?;
    let mut t = Table::new(
        "conditions",
        &["n", "nV_tail", "psi_expect", "mu_lower_n", "mu_upper_n"],
    );
    for r in &report.rows {
        t.push(vec![
            r.n.into(),
            r.nv_tail.into(),
            r.psi_expect.into(),
            r.mu_lower_n.into(),
            r.mu_upper_n.into(),
        ]);
    }
    let summary = format!("conditions: condition (i) {:?} {}", report.condition_i_trend, report.range);
    let t = t
        .with_meta("source", &report.source)
        .with_meta("condition_i_trend", report.condition_i_trend)
        .with_meta("limits", report.limits)
        .with_meta("range", &report.range)
        .with_meta("warnings", &report.warnings);
    Ok(Outcome::ok(t, summary))
}

fn ottaviani(cfg: &RunConfig) -> Result<Outcome> {
    let set = set_of(cfg)?;
    let (alpha, c) = (cfg.number("alpha")?, cfg.number("c")?);
    let opts = cfg.dp_options();
    let mut t = Table::new(
        "ottaviani",
        &["n", "alpha", "c", "premise_value", "lhs", "rhs", "status"],
    );
    let mut violation = None;
    let mut vacuous = 0;
    let horizons = cfg.horizons()?;
    for &n in &horizons {
        let r = ottaviani_check(&set, n, alpha, c, &opts).map_err(|e| keyed("alpha", e))?;
        let status = match r.status {
            OttavianiStatus::Holds => "HOLDS",
            OttavianiStatus::Vacuous => {
                vacuous += 1;
                "VACUOUS"
            }
            OttavianiStatus::Violated => {
                violation = Some(format!("Ottaviani inequality at n = {n}: {} > {}", r.lhs, r.rhs));
                "VIOLATED"
            }
        };
        t.push(vec![
            n.into(),
            alpha.into(),
            c.into(),
            r.premise_value.into(),
            r.lhs.into(),
            r.rhs.into(),
            status.into(),
        ]);
    }
    let rate = vacuous as f64 / horizons.len() as f64;
    Ok(Outcome {
        tables: vec![t.with_meta("vacuous_rate", rate)],
        summary: format!("ottaviani: vacuous rate {rate}"),
        violation,
    })
}

fn product_identity(cfg: &RunConfig) -> Result<Outcome> {
    let set = set_of(cfg)?;
    let threshold = cfg.number("threshold")?;
    let opts = cfg.dp_options();
    let mut t = Table::new(
        "product_identity",
        &["n", "threshold", "lhs", "rhs", "delta", "exp_lower"],
    );
    let mut violation = None;
    for n in cfg.horizons()? {
        let r = capacity_product_identity(&set, n, threshold, &opts)?;
        if r.delta > ORACLE_TOLERANCE || r.rhs < r.exp_lower - 1e-12 {
            violation = Some(format!("product identity at n = {n}: delta {}", r.delta));
        }
        t.push(vec![
            n.into(),
            threshold.into(),
            r.lhs.into(),
            r.rhs.into(),
            r.delta.into(),
            r.exp_lower.into(),
        ]);
    }
    Ok(Outcome {
        tables: vec![t],
        summary: "product-identity".to_string(),
        violation,
    })
}

fn chebyshev(cfg: &RunConfig) -> Result<Outcome> {
    let set = set_of(cfg)?;
    let eps = cfg.number("eps")?;
    let opts = cfg.dp_options();
    let mut t = Table::new("chebyshev", &["n", "eps", "lhs", "rhs", "holds"]);
    let mut violation = None;
    for n in cfg.horizons()? {
        let r = chebyshev_bound_check(&set, n, eps, &opts).map_err(|e| keyed("eps", e))?;
        if !r.holds {
            violation = Some(format!("Chebyshev bound at n = {n}: {} > {}", r.lhs, r.rhs));
        }
        t.push(vec![n.into(), eps.into(), r.lhs.into(), r.rhs.into(), r.holds.into()]);
    }
    Ok(Outcome {
        tables: vec![t],
        summary: "chebyshev".to_string(),
        violation,
    })
}

fn truncation_for(cfg: &RunConfig, flag: Option<u64>, name: FamilyName, default: u64) -> u64 {
    flag.or_else(|| cfg.family.filter(|f| f.name == name).map(|f| f.truncation))
        .unwrap_or(default)
}

fn exm3(cfg: &RunConfig, k: Option<u64>) -> Result<Outcome> {
    let truncation = truncation_for(cfg, k, FamilyName::Exm3, 10_000);
    let lambdas = cfg.lambdas.clone().unwrap_or_else(|| vec![100.0]);
    let ms = cfg.ms.clone().unwrap_or_else(|| vec![10, 20, 50, 100]);
    let r = exm3_report(truncation, &lambdas, &ms).map_err(|e| keyed("family.truncation", e))?;
    let mut excess = Table::new("exm3_excess", &["lambda", "value"]);
    for row in &r.excess {
        excess.push(vec![row.lambda.into(), row.value.into()]);
    }
    let mut psi = Table::new("exm3_psi", &["m", "psi_expect", "m_V_tail"]);
    for row in &r.psi {
        psi.push(vec![row.m.into(), row.psi_expect.into(), row.m_v_tail.into()]);
    }
    Ok(Outcome {
        tables: vec![
            excess.with_meta("truncation", truncation),
            psi.with_meta("truncation", truncation),
        ],
        summary: format!("counterexample exm3: truncation {truncation}"),
        violation: None,
    })
}

fn heavy(cfg: &RunConfig, k: Option<u64>) -> Result<Outcome> {
    let truncation = truncation_for(cfg, k, FamilyName::Heavy, 200);
    let horizons = cfg.horizons.clone().unwrap_or_else(|| vec![20]);
    let limit = maximal_dist_value(&heavy_phi(), 1.0, 1.0)?;
    let mut t = Table::new("heavy", &["K", "n", "value", "lower_bound", "limit_value"]);
    for n in horizons {
        if n == 0 {
            return Err(Error::InvalidArgument("horizons: must be positive".into()));
        }
        let r = heavy_lln_value(truncation, n as usize, cfg.state_budget()).map_err(|e| keyed("K", e))?;
        t.push(vec![
            truncation.into(),
            n.into(),
            r.value.into(),
            r.lower_bound.into(),
            limit.into(),
        ]);
    }
    Ok(Outcome::ok(t, format!("counterexample heavy: K = {truncation}")))
}

fn simulate_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let set = set_of(cfg)?;
    let f = cfg.function()?;
    let opts = cfg.dp_options();
    let paths = cfg.paths.unwrap_or(DEFAULT_PATHS);
    let seed = cfg.seed.unwrap_or(0);
    let mut t = Table::new(
        "simulate",
        &["n", "estimate", "stderr", "paths", "policy_value", "within_4_stderr"],
    );
    for n in cfg.horizons()? {
        let n = n as usize;
        let (policy, exact) = match cfg.policy.unwrap_or_default() {
            PolicyConfig::Robust => {
                let r = robust_value(&set, n, &f, &opts).map_err(|e| keyed("function", e))?;
                (r.policy, r.value)
            }
            PolicyConfig::Constant(g) => {
                if g >= set.len() {
                    return Err(Error::InvalidArgument(format!(
                        "policy: generator {g} does not exist"
                    )));
                }
                let p = KernelPolicy::constant(n, g);
                let v = policy_value(&set, &p, n, &f, &opts)?;
                (p, v)
            }
        };
        let sim = SimConfig {
            policy,
            set: set.clone(),
            n,
            paths,
            seed,
        };
        let r = simulate(&sim, &f).map_err(|e| keyed("paths", e))?;
        let within = (r.estimate - exact).abs() <= 4.0 * r.stderr;
        t.push(vec![
            n.into(),
            r.estimate.into(),
            r.stderr.into(),
            r.paths.into(),
            exact.into(),
            within.into(),
        ]);
    }
    Ok(Outcome::ok(t.with_meta("seed", seed), format!("simulate: seed {seed}")))
}

fn oracle(cfg: &RunConfig) -> Result<Outcome> {
    let set = set_of(cfg)?;
    let side = cfg.side.unwrap_or(Side::Upper);
    let opts = cfg.dp_options();
    let budget = cfg.enumeration_budget();
    let f = match (&cfg.function, &cfg.event) {
        (Some(_), None) => Some(cfg.function()?),
        (None, Some(_)) => None,
        _ => {
            return Err(Error::InvalidArgument(
                "function: give exactly one of function or event".into(),
            ))
        }
    };
    let mut t = Table::new("oracle", &["n", "dp_value", "oracle_value", "abs_diff"]);
    let mut violation = None;
    for n in cfg.horizons()? {
        let n = n as usize;
        let (dp, target) = match (&f, &cfg.event) {
            (Some(f), _) => (
                optimize_function(&set, n, f, side, &opts)?.value,
                Target::Function { f, scale: opts.scale },
            ),
            (None, Some(ev)) => (capacity(&set, n, ev, side, &opts)?, Target::Event(ev)),
            (None, None) => unreachable!(),
        };
        let brute = brute_force_value(&set, n, target, side, budget)?;
        let diff = (dp - brute).abs();
        if diff > ORACLE_TOLERANCE {
            violation = Some(format!("lattice DP and brute force differ by {diff} at n = {n}"));
        }
        t.push(vec![n.into(), dp.into(), brute.into(), diff.into()]);
    }
    Ok(Outcome {
        tables: vec![t],
        summary: "oracle".to_string(),
        violation,
    })
}
