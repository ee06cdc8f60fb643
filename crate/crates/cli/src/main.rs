use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use localbounds::cut::{run_cut, CutOptions};
use localbounds::evolution::cut::{CutEvolutionState, CutMode, CutRules};
use localbounds::evolution::is::{Is3Rules, Is4Rules};
use localbounds::evolution::{integrate, refine, EvolutionParams, EvolutionRules};
use localbounds::graph::Multigraph;
use localbounds::independent::{self, verify_independent, RoundSchedule};
use localbounds::oracle::{self, LoopPolicy, SmallGraph};
use localbounds::par;
use localbounds::report::{Headline, RunReport, SeedSummary};
use serde_json::{json, Value};

/// Lower bounds for independence and cut ratios of large-girth regular
/// graphs: evolution integrators, finite-graph simulations and an exact
/// oracle.
#[derive(Debug, Parser)]
#[command(name = "localbounds", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a degree-distribution evolution.
    Evolve(EvolveArgs),
    /// Run a local algorithm on a random regular graph.
    Simulate(SimulateArgs),
    /// Solve a small instance exactly.
    Oracle(OracleArgs),
    /// Integrate at several step sizes and compare.
    Refine(RefineArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvolveTarget {
    Is3,
    Is4,
    Cut3,
}

impl EvolveTarget {
    fn paper_epsilon(self) -> f64 {
        match self {
            EvolveTarget::Is3 => 6.3e-9,
            EvolveTarget::Is4 => 1e-8,
            EvolveTarget::Cut3 => 1.1e-8,
        }
    }

    fn name(self) -> &'static str {
        match self {
            EvolveTarget::Is3 => "is3",
            EvolveTarget::Is4 => "is4",
            EvolveTarget::Cut3 => "cut3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    ClosedForm,
    LinearSolve,
}

#[derive(Debug, Args)]
struct Output {
    /// Write the JSON report to this path.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Directory for relative output paths and default file names.
    #[arg(long, env = "LOCALBOUNDS_OUT_DIR")]
    out_dir: Option<PathBuf>,
}

impl Output {
    fn resolve(&self, path: &Path) -> PathBuf {
        match &self.out_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }

    fn write(&self, path: &Path, text: &str) -> Result<PathBuf> {
        let path = self.resolve(path);
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

#[derive(Debug, Args)]
struct RuleArgs {
    /// Disable the neighbour-probe improvement (is3 only).
    #[arg(long)]
    no_improvement: bool,
    /// Rate evaluation for cut3.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

impl RuleArgs {
    fn check(&self, target: EvolveTarget) -> Result<()> {
        if self.no_improvement && target != EvolveTarget::Is3 {
            bail!("--no-improvement applies to is3 only");
        }
        if self.mode.is_some() && target != EvolveTarget::Cut3 {
            bail!("--mode applies to cut3 only");
        }
        Ok(())
    }

    fn mode_name(&self) -> &'static str {
        match self.cut_mode() {
            CutMode::LinearSolve => "linear-solve",
            CutMode::ClosedForm => "closed-form",
        }
    }

    fn cut_mode(&self) -> CutMode {
        match self.mode {
            Some(ModeArg::LinearSolve) => CutMode::LinearSolve,
            _ => CutMode::ClosedForm,
        }
    }
}

#[derive(Debug, Args)]
struct EvolveArgs {
    #[arg(value_enum)]
    target: EvolveTarget,
    /// Mass moved per round.
    #[arg(long, conflicts_with = "paper_epsilon")]
    step_size: Option<f64>,
    /// Use the reference step size of the target (slow).
    #[arg(long)]
    paper_epsilon: bool,
    /// Stop once the tracked mass is at or below this (default: step size).
    #[arg(long)]
    stop_threshold: Option<f64>,
    #[command(flatten)]
    rules: RuleArgs,
    /// Write the sampled trajectory as CSV.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// Rounds between trajectory samples.
    #[arg(long, requires = "trajectory")]
    record_interval: Option<u64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SimTarget {
    Is,
    Cut,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(value_enum)]
    target: SimTarget,
    /// Vertex count of the generated graph.
    #[arg(long, default_value_t = 100_000, conflicts_with = "graph")]
    n: usize,
    /// Degree (3 or 4 for is; cut needs 3).
    #[arg(long, default_value_t = 3, conflicts_with = "graph")]
    d: usize,
    /// Run on an edge-list file instead of a generated graph.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// First seed; with --seeds k the runs use seed..seed+k.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of independent runs.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// Witness file (single run only).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-round deletion probability in the top class (is only).
    #[arg(long)]
    thin_probability: Option<f64>,
    /// Survivor fraction below which a class counts as empty (is only).
    #[arg(long)]
    sparse_fraction: Option<f64>,
    /// Survivor fraction at which the run stops (is only).
    #[arg(long)]
    stop_fraction: Option<f64>,
    /// Per-round query chance of isolated coloured vertices (cut only).
    #[arg(long)]
    query_probability: Option<f64>,
    /// Verify component shapes after every closure (cut only).
    #[arg(long)]
    check_invariants: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Problem {
    Mis,
    Maxcut,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(value_enum)]
    problem: Problem,
    /// Edge-list file: "n m" then one "u v" line per edge.
    input: PathBuf,
}

#[derive(Debug, Args)]
struct RefineArgs {
    #[arg(value_enum)]
    target: EvolveTarget,
    /// Strictly decreasing step sizes.
    #[arg(long, value_delimiter = ',', default_value = "1e-5,1e-6,1e-7")]
    steps: Vec<f64>,
    #[command(flatten)]
    rules: RuleArgs,
    #[command(flatten)]
    output: Output,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command: Vec<String> = std::env::args().skip(1).collect();
    let outcome = match cli.command {
        Command::Evolve(a) => evolve(command, a),
        Command::Simulate(a) => simulate(command, a),
        Command::Oracle(a) => run_oracle(a).map(|()| true),
        Command::Refine(a) => run_refine(command, a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: validity checks failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn finish(report: RunReport, output: &Output, start: Instant) -> Result<bool> {
    let report = RunReport { wall_seconds: start.elapsed().as_secs_f64(), ..report };
    print!("{}", report.render());
    if let Some(path) = &output.json {
        let path = output.write(path, &report.to_json())?;
        println!("report: {}", path.display());
    }
    Ok(report.valid)
}

struct Evolved {
    value: f64,
    details: Vec<(&'static str, Value)>,
    rounds: u64,
    csv: String,
    monotone: bool,
}

fn integrate_rules<R: EvolutionRules>(
    rules: &R,
    initial: R::State,
    params: &EvolutionParams,
    accumulators: impl Fn(&R::State) -> Vec<f64>,
) -> Result<(R::State, u64, String, bool)> {
    let run = integrate(initial, rules, params)?;
    let acc: Vec<Vec<f64>> = run.trajectory.samples.iter().map(|s| accumulators(&s.state)).collect();
    let monotone = acc.windows(2).all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| b >= a));
    Ok((run.final_state, run.rounds, run.trajectory.to_csv(rules), monotone))
}

fn evolve(command: Vec<String>, a: EvolveArgs) -> Result<bool> {
    a.rules.check(a.target)?;
    let start = Instant::now();
    let step = if a.paper_epsilon { a.target.paper_epsilon() } else { a.step_size.unwrap_or(1e-7) };
    let mut params = EvolutionParams::new(step).with_stop_threshold(a.stop_threshold.unwrap_or(step));
    if let Some(k) = a.record_interval {
        params = params.with_record_interval(k);
    }
    params.validate()?;

    let ev = match a.target {
        EvolveTarget::Is3 | EvolveTarget::Is4 => {
            let (state, rounds, csv, monotone) = if a.target == EvolveTarget::Is3 {
                let rules = Is3Rules { improvement: !a.rules.no_improvement };
                integrate_rules(&rules, rules.initial(&params), &params, |s| vec![s.independent])?
            } else {
                integrate_rules(&Is4Rules, Is4Rules.initial(&params), &params, |s| vec![s.independent])?
            };
            Evolved {
                value: state.independent,
                details: vec![("final_erase", json!(state.erase)), ("final_degrees", json!(state.v))],
                rounds,
                csv,
                monotone,
            }
        }
        EvolveTarget::Cut3 => {
            let rules = CutRules { mode: a.rules.cut_mode() };
            let (state, rounds, csv, monotone) =
                integrate_rules(&rules, CutEvolutionState::initial(), &params, |s| vec![s.good, s.bad])?;
            Evolved {
                value: state.good,
                details: vec![("bad", json!(state.bad)), ("good_plus_bad", json!(state.good + state.bad))],
                rounds,
                csv,
                monotone,
            }
        }
    };

    let headline = match a.target {
        EvolveTarget::Cut3 => Headline::GoodEdgesPerVertex,
        _ => Headline::IndependenceRatio,
    };
    let mut report = RunReport::new(command, headline, ev.value)
        .param("target", a.target.name())
        .param("step_size", step)
        .param("stop_threshold", params.stop_threshold)
        .detail("rounds", ev.rounds)
        .detail("accumulators_monotone", ev.monotone);
    match a.target {
        EvolveTarget::Is3 => {
            report = report
                .param("improvement", !a.rules.no_improvement)
                .param("max_degree_cap", params.max_degree_cap)
        }
        EvolveTarget::Is4 => report = report.param("max_degree_cap", params.max_degree_cap),
        EvolveTarget::Cut3 => report = report.param("mode", a.rules.mode_name()),
    }
    for (k, v) in ev.details {
        report = report.detail(k, v);
    }
    report.valid = ev.monotone && ev.value.is_finite();
    if let Some(path) = &a.trajectory {
        let path = a.output.write(path, &ev.csv)?;
        report = report.detail("trajectory", path.display().to_string());
    }
    finish(report, &a.output, start)
}

struct SimRun {
    seed: u64,
    value: f64,
    valid: bool,
    details: Value,
    witness: String,
}

fn simulate(command: Vec<String>, a: SimulateArgs) -> Result<bool> {
    let start = Instant::now();
    let is_only = a.thin_probability.is_some() || a.sparse_fraction.is_some() || a.stop_fraction.is_some();
    let cut_only = a.query_probability.is_some() || a.check_invariants;
    match a.target {
        SimTarget::Is if cut_only => bail!("--query-probability and --check-invariants apply to simulate cut only"),
        SimTarget::Cut if is_only => bail!("schedule flags apply to simulate is only"),
        _ => {}
    }
    if a.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    if a.seeds > 1 && a.out.is_some() {
        bail!("--out names a single witness file; drop it or use --seeds 1");
    }

    let loaded = match &a.graph {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Some(Multigraph::load_edge_list(&text)?)
        }
        None => None,
    };
    let (n, d) = match &loaded {
        Some(g) => {
            let d = g.regular_degree().context("input graph is not regular")?;
            (g.vertex_count(), d)
        }
        None => (a.n, a.d),
    };
    if a.target == SimTarget::Cut && d != 3 {
        bail!("simulate cut needs a 3-regular graph, got d = {d}");
    }
    if a.target == SimTarget::Is && d != 3 && d != 4 {
        bail!("simulate is supports d = 3 or 4, got d = {d}");
    }
    if loaded.is_none() && n * d % 2 == 1 {
        bail!("n*d = {} is odd", n * d);
    }

    let defaults = RoundSchedule::default();
    let schedule = RoundSchedule {
        thin_probability: a.thin_probability.unwrap_or(defaults.thin_probability),
        sparse_fraction: a.sparse_fraction.unwrap_or(defaults.sparse_fraction),
        stop_fraction: a.stop_fraction.unwrap_or(defaults.stop_fraction),
        ..defaults
    };
    let cut_options = CutOptions {
        query_probability: a.query_probability.unwrap_or(CutOptions::default().query_probability),
        check_invariants: a.check_invariants,
        ..CutOptions::default()
    };

    let seeds: Vec<u64> = (a.seed..a.seed + a.seeds).collect();
    let runs = par::map(&seeds, |&seed| -> Result<SimRun> {
        let g = match &loaded {
            Some(g) => g.clone(),
            None => Multigraph::configuration(n, d, seed)?,
        };
        match a.target {
            SimTarget::Is => {
                let r = independent::run(&g, d, &schedule, seed)?;
                let valid = verify_independent(&g, &r.set);
                let mut witness = String::new();
                for v in &r.set {
                    let _ = writeln!(witness, "{v}");
                }
                Ok(SimRun {
                    seed,
                    value: r.ratio(n),
                    valid,
                    details: json!({
                        "n": n, "d": d, "seed": seed, "size": r.set.len(), "ratio": r.ratio(n),
                        "rounds": r.rounds, "contractions": r.contractions,
                    }),
                    witness,
                })
            }
            SimTarget::Cut => {
                let r = run_cut(&g, seed, &cut_options)?;
                let valid = (r.good, r.bad) == (r.incremental_good, r.incremental_bad)
                    && r.good + r.bad == g.edge_count() as u64
                    && r.coloring.len() == n;
                let mut witness = String::new();
                for (v, c) in r.coloring.iter().enumerate() {
                    let _ = writeln!(witness, "{v} {}", c.as_char());
                }
                Ok(SimRun {
                    seed,
                    value: r.good_ratio(),
                    valid,
                    details: json!({
                        "n": n, "seed": seed, "good": r.good, "bad": r.bad, "good_per_vertex": r.good_ratio(),
                        "rounds": r.rounds, "queries": r.queries, "fallbacks": r.fallbacks,
                    }),
                    witness,
                })
            }
        }
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let (headline, prefix) = match a.target {
        SimTarget::Is => (Headline::IndependenceRatio, "is"),
        SimTarget::Cut => (Headline::GoodEdgesPerVertex, "cut"),
    };
    let mut witnesses = Vec::new();
    for r in &runs {
        let path = match &a.out {
            Some(p) => p.clone(),
            None => PathBuf::from(format!("{prefix}-n{n}-d{d}-seed{}.txt", r.seed)),
        };
        witnesses.push(a.output.write(&path, &r.witness)?.display().to_string());
    }

    let values: Vec<f64> = runs.iter().map(|r| r.value).collect();
    let summary = SeedSummary::new(values);
    let mut report = RunReport::new(command, headline, summary.mean)
        .param("target", prefix)
        .param("n", n)
        .param("d", d)
        .param("seeds", a.seeds)
        .detail("runs", runs.iter().map(|r| r.details.clone()).collect::<Vec<_>>())
        .detail("witness_files", witnesses);
    if let Some(path) = &a.graph {
        report = report.param("graph", path.display().to_string());
    }
    match a.target {
        SimTarget::Is => {
            report = report
                .param("thin_probability", schedule.thin_probability)
                .param("sparse_fraction", schedule.sparse_fraction)
                .param("stop_fraction", schedule.stop_fraction);
        }
        SimTarget::Cut => {
            report = report
                .param("query_probability", cut_options.query_probability)
                .param("endgame_fraction", cut_options.endgame_fraction)
                .param("endgame_min", cut_options.endgame_min);
        }
    }
    report.seed = Some(a.seed);
    if runs.len() > 1 {
        report.seeds = Some(summary);
    }
    report.valid = runs.iter().all(|r| r.valid);
    finish(report, &a.output, start)
}

fn run_oracle(a: OracleArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let g = Multigraph::load_edge_list(&text)?;
    let small = SmallGraph::from_multigraph(&g, LoopPolicy::Ignore)?;
    match a.problem {
        Problem::Mis => {
            let (size, set) = oracle::max_independent_set(&small)?;
            let witness: Vec<String> = oracle::mask_to_vec(set).iter().map(|v| v.to_string()).collect();
            println!("maximum independent set: {size}");
            println!("witness: {}", witness.join(" "));
        }
        Problem::Maxcut => {
            let (size, side) = oracle::max_cut(&small)?;
            println!("maximum cut: {size}");
            println!("witness:");
            for v in 0..g.vertex_count() {
                println!("{v} {}", if side >> v & 1 == 1 { 'G' } else { 'R' });
            }
        }
    }
    Ok(())
}

fn run_refine(command: Vec<String>, a: RefineArgs) -> Result<bool> {
    a.rules.check(a.target)?;
    let start = Instant::now();
    let first = *a.steps.first().context("no step sizes")?;
    let base = EvolutionParams::new(first);
    let conv = match a.target {
        EvolveTarget::Is3 => {
            let rules = Is3Rules { improvement: !a.rules.no_improvement };
            refine(&rules.initial(&base), &rules, &base, &a.steps)?
        }
        EvolveTarget::Is4 => refine(&Is4Rules.initial(&base), &Is4Rules, &base, &a.steps)?,
        EvolveTarget::Cut3 => {
            let rules = CutRules { mode: a.rules.cut_mode() };
            refine(&CutEvolutionState::initial(), &rules, &base, &a.steps)?
        }
    };
    let headline = match a.target {
        EvolveTarget::Cut3 => Headline::GoodEdgesPerVertex,
        _ => Headline::IndependenceRatio,
    };
    let last = conv.points.last().map(|p| p.headline).unwrap_or(f64::NAN);
    let mut report = RunReport::new(command, headline, last)
        .param("target", a.target.name())
        .param("steps", a.steps.clone())
        .detail("points", serde_json::to_value(&conv.points)?)
        .detail("differences", conv.differences.clone())
        .detail("ratios", conv.ratios.clone())
        .detail("non_monotone", conv.non_monotone);
    match a.target {
        EvolveTarget::Is3 => report = report.param("improvement", !a.rules.no_improvement),
        EvolveTarget::Cut3 => report = report.param("mode", a.rules.mode_name()),
        EvolveTarget::Is4 => {}
    }
    report.valid = last.is_finite();
    finish(report, &a.output, start)
}
