//! Batch runner behind the `cis-marl` binary.
//!
//! Every command writes machine-readable files into `--out`:
//!
//! * `values.csv`: `state_id,V,V_h_task,V_h_safety,in_cis`
//! * `policy.csv`: `state_id,agent,task_action,safety_action`
//! * `trace.csv`: `iteration,cis_size,objective,safety_residual,task_changed,fallbacks`
//! * `summary.json`: config echo, convergence, objective, CIS size, certificates
//!
//! `oracle-compare` writes `compare.csv` and `summary.json` instead. Floats are
//! printed with 17 significant digits. Wall-clock times are only recorded
//! with `--timing`, so by default identical configs give byte-identical files.
//!
//! Exit status: 0 when the run converged and every certificate passed, 1 on a
//! failed certificate or a run that hit its iteration cap, 2 on bad input.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::dual::{objective_value, run_dual_iteration, DualIterationConfig};
use crate::envs::{build_gridworld, build_random_game, build_trap2, grid5x5, random_suite};
use crate::game::{evaluate_policy, io, Game, JointPolicy, StateSet, ValueKind, ValueTable};
use crate::oracles::{
    certify_fixed_point, certify_gne_task, certify_nash_safety, joint_safety_optimum, Certificate,
    CERTIFICATE_TOL,
};
use crate::safety::{run_safety_iteration, SafetyIterationConfig};
use crate::{AgentOrder, Error, Result};

/// Largest `states * joint actions` table a `random:` environment may ask for.
const MAX_RANDOM_CELLS: usize = 10_000_000;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "CIS_MARL_THREADS";

const VALUES_HEADER: &str = "state_id,V,V_h_task,V_h_safety,in_cis";
const POLICY_HEADER: &str = "state_id,agent,task_action,safety_action";
const TRACE_HEADER: &str = "iteration,cis_size,objective,safety_residual,task_changed,fallbacks";

#[derive(Debug, Parser)]
#[command(
    name = "cis-marl",
    version,
    about = "Multi-agent safety and dual policy iteration"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Run safety policy iteration.
    SolveSafety(RunArgs),
    /// Run dual (safety + task) policy iteration.
    SolveDual(RunArgs),
    /// Certify the policies in a policy.csv file.
    Certify(RunArgs),
    /// Compare safety iteration against the centralised joint optimum.
    OracleCompare(RunArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["game", "env"])))]
struct RunArgs {
    /// Game file (JSON).
    #[arg(long)]
    game: Option<PathBuf>,
    /// Builtin environment: trap2, grid5x5, random:SEED:STATES:ACTIONS:HAZARD
    /// (ACTIONS comma-separated per agent) or suite:SEED:COUNT.
    #[arg(long)]
    env: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Iteration cap (outer iterations for solve-dual, sweeps otherwise).
    #[arg(long, default_value_t = 1000)]
    m_outer: usize,
    /// Safety sweeps per outer dual iteration.
    #[arg(long, default_value_t = 1)]
    k_safety: usize,
    #[arg(long, value_enum, default_value_t = OrderArg::Shuffle)]
    order: OrderArg,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Every agent's action in the initial safety policy (clamped per agent).
    #[arg(long, default_value_t = 0)]
    init_action: usize,
    /// Policy file to certify.
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Record wall-clock times.
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OrderArg {
    Shuffle,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SolveSafety,
    SolveDual,
    Certify,
    OracleCompare,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameSource {
    File(PathBuf),
    Env(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub game_source: GameSource,
    pub seed: u64,
    pub m_outer: usize,
    pub k_safety_per_outer: usize,
    pub agent_order: AgentOrder,
    #[serde(skip)]
    pub out_dir: PathBuf,
    pub init_action: usize,
    pub policy: Option<PathBuf>,
    pub timing: bool,
    /// Suppresses the human-readable report on stdout.
    #[serde(skip)]
    pub quiet: bool,
}

impl RunConfig {
    pub fn new(command: Command, game_source: GameSource, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            command,
            game_source,
            seed: 0,
            m_outer: 1000,
            k_safety_per_outer: 1,
            agent_order: AgentOrder::SeededShuffle,
            out_dir: out_dir.into(),
            init_action: 0,
            policy: None,
            timing: false,
            quiet: false,
        }
    }

    fn safety_config(&self) -> SafetyIterationConfig {
        SafetyIterationConfig {
            max_outer_iters: self.m_outer,
            agent_order: self.agent_order,
            seed: self.seed,
        }
    }
}

impl From<(Command, RunArgs)> for RunConfig {
    fn from((command, args): (Command, RunArgs)) -> Self {
        let game_source = match (args.game, args.env) {
            (Some(path), _) => GameSource::File(path),
            (None, Some(name)) => GameSource::Env(name),
            (None, None) => unreachable!("clap requires a game source"),
        };
        Self {
            command,
            game_source,
            seed: args.seed,
            m_outer: args.m_outer,
            k_safety_per_outer: args.k_safety,
            agent_order: match args.order {
                OrderArg::Shuffle => AgentOrder::SeededShuffle,
                OrderArg::Fixed => AgentOrder::Fixed,
            },
            out_dir: args.out,
            init_action: args.init_action,
            policy: args.policy,
            timing: args.timing,
            quiet: false,
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Err(message) = configure_threads() {
        eprintln!("error: {message}");
        return 2;
    }
    let config = RunConfig::from(match cli.command {
        CliCommand::SolveSafety(a) => (Command::SolveSafety, a),
        CliCommand::SolveDual(a) => (Command::SolveDual, a),
        CliCommand::Certify(a) => (Command::Certify, a),
        CliCommand::OracleCompare(a) => (Command::OracleCompare, a),
    });
    run(&config)
}

/// Sizes the global worker pool from [`THREADS_ENV`] when it is set.
fn configure_threads() -> std::result::Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV}: expected a positive integer, got {raw:?}"))?;
    // A second initialisation in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

/// Runs `config` and returns the exit status.
pub fn run(config: &RunConfig) -> i32 {
    match execute(config) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// A game together with the label it is reported under.
#[derive(Debug, Clone)]
pub struct NamedGame {
    pub name: String,
    pub game: Game,
}

fn env_error(message: String) -> Error {
    Error::Input {
        path: "--env".into(),
        message,
    }
}

fn parse_field<T: std::str::FromStr>(spec: &str, field: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| env_error(format!("{spec}: cannot parse {field} from {raw:?}")))
}

/// Resolves a builtin environment name into one or more games.
pub fn builtin_games(spec: &str) -> Result<Vec<NamedGame>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let one = |game: Game| {
        Ok(vec![NamedGame {
            name: spec.to_string(),
            game,
        }])
    };
    match parts.as_slice() {
        ["trap2"] => one(build_trap2()),
        ["grid5x5"] => one(build_gridworld(&grid5x5(), 0.9, 0.9)?),
        ["random", seed, states, actions, hazard] => {
            let seed = parse_field(spec, "seed", seed)?;
            let n_states: usize = parse_field(spec, "states", states)?;
            let actions = actions
                .split(',')
                .map(|a| parse_field(spec, "actions", a))
                .collect::<Result<Vec<usize>>>()?;
            let hazard: f64 = parse_field(spec, "hazard fraction", hazard)?;
            if n_states == 0 || actions.is_empty() || actions.contains(&0) {
                return Err(env_error(format!(
                    "{spec}: states and actions must be positive"
                )));
            }
            let cells = actions
                .iter()
                .try_fold(n_states, |acc, &a| acc.checked_mul(a))
                .filter(|&c| c <= MAX_RANDOM_CELLS);
            if cells.is_none() {
                return Err(env_error(format!(
                    "{spec}: more than {MAX_RANDOM_CELLS} state/joint-action pairs"
                )));
            }
            if !(0.0..=1.0).contains(&hazard) {
                return Err(env_error(format!("{spec}: hazard fraction outside [0, 1]")));
            }
            one(build_random_game(seed, n_states, &actions, hazard))
        }
        ["suite", seed, count] => {
            let seed = parse_field(spec, "seed", seed)?;
            let count = parse_field(spec, "count", count)?;
            Ok(random_suite(seed, count)
                .into_iter()
                .enumerate()
                .map(|(i, params)| NamedGame {
                    name: format!("suite:{i}:{}", params.seed),
                    game: params.build(),
                })
                .collect())
        }
        _ => Err(env_error(format!(
            "unknown environment {spec:?} (expected trap2, grid5x5, \
             random:SEED:STATES:ACTIONS:HAZARD or suite:SEED:COUNT)"
        ))),
    }
}

fn load_games(source: &GameSource) -> Result<Vec<NamedGame>> {
    match source {
        GameSource::File(path) => Ok(vec![NamedGame {
            name: path.display().to_string(),
            game: io::load(path)?,
        }]),
        GameSource::Env(spec) => builtin_games(spec),
    }
}

fn single_game(config: &RunConfig) -> Result<Game> {
    let mut games = load_games(&config.game_source)?;
    if games.len() != 1 {
        return Err(env_error(format!(
            "{:?} needs exactly one game, the source yields {}",
            config.command,
            games.len()
        )));
    }
    Ok(games.remove(0).game)
}

/// Per-game comparison of safety iteration against the joint optimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub game: String,
    pub n_states: usize,
    pub n_agents: usize,
    /// `sup_x |V_h^nash(x) - V_h^opt(x)|`.
    pub gap: f64,
    pub nash_cis: usize,
    pub opt_cis: usize,
    /// `nash_cis / opt_cis`, or 1 when both are empty.
    pub cis_ratio: f64,
    pub nash_sweeps: usize,
    pub opt_sweeps: usize,
    /// Successor lookups per state per sweep: `sum_i C_i`.
    pub nash_evaluations_per_state_sweep: usize,
    /// Successor lookups per state per sweep: `prod_i C_i`.
    pub opt_evaluations_per_state_sweep: usize,
    pub nash_converged: bool,
    #[serde(skip)]
    pub nash_time: Duration,
    #[serde(skip)]
    pub opt_time: Duration,
}

/// Runs safety iteration from the constant policy `init_action` and the joint
/// optimum oracle on `game`.
pub fn oracle_compare(
    name: &str,
    game: &Game,
    config: &SafetyIterationConfig,
    init_action: usize,
) -> Result<CompareRow> {
    let start = Instant::now();
    let opt = joint_safety_optimum(game)?;
    let opt_time = start.elapsed();

    let start = Instant::now();
    let nash = run_safety_iteration(game, &JointPolicy::constant(game, init_action), config);
    let nash_time = start.elapsed();

    let nash_cis = nash.cis.len();
    let opt_cis = opt.cis().len();
    let per_state = |total: usize, sweeps: usize| total / (sweeps * game.n_states).max(1);
    Ok(CompareRow {
        game: name.to_string(),
        n_states: game.n_states,
        n_agents: game.n_agents,
        gap: nash.vh.sup_distance(&opt.values),
        nash_cis,
        opt_cis,
        cis_ratio: if opt_cis == 0 {
            1.0
        } else {
            nash_cis as f64 / opt_cis as f64
        },
        nash_sweeps: nash.sweeps(),
        opt_sweeps: opt.sweeps,
        nash_evaluations_per_state_sweep: nash
            .trace
            .first()
            .map_or(0, |row| per_state(row.evaluations, 1)),
        opt_evaluations_per_state_sweep: per_state(opt.evaluations, opt.sweeps),
        nash_converged: nash.converged,
        nash_time,
        opt_time,
    })
}

#[derive(Debug, Serialize)]
struct GameEcho {
    n_states: usize,
    n_agents: usize,
    actions_per_agent: Vec<usize>,
    gamma: f64,
    gamma_h: f64,
    /// `uniform` or `custom`.
    initial_dist: &'static str,
}

impl GameEcho {
    fn new(game: &Game) -> Self {
        let uniform = game.initial_dist.iter().all(|&p| p == game.initial_dist[0]);
        Self {
            n_states: game.n_states,
            n_agents: game.n_agents,
            actions_per_agent: game.actions_per_agent.clone(),
            gamma: game.gamma,
            gamma_h: game.gamma_h,
            initial_dist: if uniform { "uniform" } else { "custom" },
        }
    }
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    game: Option<GameEcho>,
    #[serde(skip_serializing_if = "Option::is_none")]
    converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cis_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fallbacks: Option<usize>,
    certificates: Vec<Certificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    compare: Option<Vec<CompareRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_seconds: Option<f64>,
    passed: bool,
}

impl<'a> Summary<'a> {
    fn new(config: &'a RunConfig) -> Self {
        Self {
            config,
            game: None,
            converged: None,
            iterations: None,
            objective: None,
            cis_size: None,
            fallbacks: None,
            certificates: Vec::new(),
            compare: None,
            wall_seconds: None,
            passed: true,
        }
    }
}

/// Formats a float with 17 significant digits.
pub fn format_float(value: f64) -> String {
    format!("{value:.16e}")
}

/// Quotes a CSV field when it contains a separator, quote or newline.
fn csv_field(raw: &str) -> String {
    if raw.contains([',', '"', '\n']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_string()
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::Input {
        path,
        message: e.to_string(),
    })
}

fn values_csv(
    v: &ValueTable,
    vh_task: &ValueTable,
    vh_safety: &ValueTable,
    cis: &StateSet,
) -> String {
    let mut out = format!("{VALUES_HEADER}\n");
    for x in 0..v.len() {
        let _ = writeln!(
            out,
            "{x},{},{},{},{}",
            format_float(v[x]),
            format_float(vh_task[x]),
            format_float(vh_safety[x]),
            u8::from(cis.contains(x))
        );
    }
    out
}

fn policy_csv(task: &JointPolicy, safety: &JointPolicy) -> String {
    let mut out = format!("{POLICY_HEADER}\n");
    for x in 0..task.n_states() {
        for i in 0..task.n_agents() {
            let _ = writeln!(out, "{x},{i},{},{}", task.get(x, i), safety.get(x, i));
        }
    }
    out
}

struct TraceLine {
    iteration: usize,
    cis_size: usize,
    objective: f64,
    safety_residual: f64,
    task_changed: usize,
    fallbacks: usize,
}

fn trace_csv(rows: impl IntoIterator<Item = TraceLine>) -> String {
    let mut out = format!("{TRACE_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.iteration,
            r.cis_size,
            format_float(r.objective),
            format_float(r.safety_residual),
            r.task_changed,
            r.fallbacks
        );
    }
    out
}

/// Reads a `policy.csv` file into `(task, safety)` policies for `game`.
pub fn read_policy_csv(game: &Game, path: &Path) -> Result<(JointPolicy, JointPolicy)> {
    let fail = |message: String| Error::Input {
        path: path.to_path_buf(),
        message,
    };
    let text = fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == POLICY_HEADER => {}
        _ => return Err(fail(format!("line 1: expected header {POLICY_HEADER:?}"))),
    }
    let mut task: Vec<Option<usize>> = vec![None; game.n_states * game.n_agents];
    let mut safety = task.clone();
    for (n, line) in lines {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [state, agent, t, s] = fields.as_slice() else {
            return Err(fail(format!("line {line_no}: expected 4 fields")));
        };
        let num = |name: &str, raw: &str| {
            raw.parse::<usize>()
                .map_err(|_| fail(format!("line {line_no}: {name} {raw:?} is not an integer")))
        };
        let (state, agent) = (num("state_id", state)?, num("agent", agent)?);
        if state >= game.n_states || agent >= game.n_agents {
            return Err(fail(format!(
                "line {line_no}: (state_id {state}, agent {agent}) outside the game"
            )));
        }
        for (name, raw, table) in [
            ("task_action", t, &mut task),
            ("safety_action", s, &mut safety),
        ] {
            let action = num(name, raw)?;
            if action >= game.actions_per_agent[agent] {
                return Err(fail(format!(
                    "line {line_no}: {name} {action} outside 0..{}",
                    game.actions_per_agent[agent]
                )));
            }
            table[state * game.n_agents + agent] = Some(action);
        }
    }
    let collect = |table: Vec<Option<usize>>| -> Result<JointPolicy> {
        let rows = table
            .chunks(game.n_agents)
            .enumerate()
            .map(|(x, row)| {
                row.iter()
                    .enumerate()
                    .map(|(i, a)| a.ok_or_else(|| fail(format!("missing state_id {x}, agent {i}"))))
                    .collect::<Result<Vec<usize>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(JointPolicy::from_rows(&rows))
    };
    Ok((collect(task)?, collect(safety)?))
}

fn execute(config: &RunConfig) -> Result<bool> {
    let started = Instant::now();
    let mut summary = Summary::new(config);
    match config.command {
        Command::SolveSafety => solve_safety(config, &mut summary)?,
        Command::SolveDual => solve_dual(config, &mut summary)?,
        Command::Certify => certify(config, &mut summary)?,
        Command::OracleCompare => compare(config, &mut summary)?,
    }
    if config.timing {
        summary.wall_seconds = Some(started.elapsed().as_secs_f64());
    }
    summary.passed =
        summary.converged.unwrap_or(true) && summary.certificates.iter().all(|c| c.passed);
    write_file(
        &config.out_dir,
        "summary.json",
        &(serde_json::to_string_pretty(&summary)? + "\n"),
    )?;
    if !config.quiet {
        report(&summary);
    }
    Ok(summary.passed)
}

fn prepare_out_dir(config: &RunConfig) -> Result<()> {
    fs::create_dir_all(&config.out_dir).map_err(|e| Error::Input {
        path: config.out_dir.clone(),
        message: e.to_string(),
    })
}

fn solve_safety(config: &RunConfig, summary: &mut Summary) -> Result<()> {
    let game = single_game(config)?;
    prepare_out_dir(config)?;
    let initial = JointPolicy::constant(&game, config.init_action);
    let result = run_safety_iteration(&game, &initial, &config.safety_config());
    let v = evaluate_policy(&game, &result.policy, ValueKind::Reward);

    // The safety policy doubles as the task policy here.
    let lines = result.trace.iter().map(|row| TraceLine {
        iteration: row.iteration,
        cis_size: row.cis_size,
        objective: row.objective,
        safety_residual: row.residual,
        task_changed: row.changed,
        fallbacks: 0,
    });

    write_file(
        &config.out_dir,
        "values.csv",
        &values_csv(&v, &result.vh, &result.vh, &result.cis),
    )?;
    write_file(
        &config.out_dir,
        "policy.csv",
        &policy_csv(&result.policy, &result.policy),
    )?;
    write_file(&config.out_dir, "trace.csv", &trace_csv(lines))?;

    summary.game = Some(GameEcho::new(&game));
    summary.converged = Some(result.converged);
    summary.iterations = Some(result.sweeps());
    summary.objective = Some(objective_value(&game, &v, &result.vh, &result.cis));
    summary.cis_size = Some(result.cis.len());
    summary.fallbacks = Some(0);
    summary.certificates = vec![
        certify_nash_safety(&game, &result.policy, &result.vh, CERTIFICATE_TOL),
        certify_fixed_point(&game, &result.policy, &result.vh, CERTIFICATE_TOL)?,
    ];
    Ok(())
}

fn solve_dual(config: &RunConfig, summary: &mut Summary) -> Result<()> {
    let game = single_game(config)?;
    prepare_out_dir(config)?;
    let initial = JointPolicy::constant(&game, config.init_action);
    let result = run_dual_iteration(
        &game,
        &initial,
        &DualIterationConfig {
            m_outer: config.m_outer,
            k_safety_per_outer: config.k_safety_per_outer,
            agent_order: config.agent_order,
            seed: config.seed,
        },
    );

    write_file(
        &config.out_dir,
        "values.csv",
        &values_csv(&result.v, &result.vh_task, &result.vh_safety, &result.cis),
    )?;
    write_file(
        &config.out_dir,
        "policy.csv",
        &policy_csv(&result.task_policy, &result.safety_policy),
    )?;
    write_file(
        &config.out_dir,
        "trace.csv",
        &trace_csv(result.trace.iter().map(|r| TraceLine {
            iteration: r.iteration,
            cis_size: r.cis_size,
            objective: r.objective,
            safety_residual: r.safety_residual,
            task_changed: r.task_changed,
            fallbacks: r.fallbacks,
        })),
    )?;

    summary.game = Some(GameEcho::new(&game));
    summary.converged = Some(result.converged);
    summary.iterations = Some(result.trace.len());
    summary.objective = Some(result.objective);
    summary.cis_size = Some(result.cis.len());
    summary.fallbacks = Some(result.total_fallbacks());
    summary.certificates = vec![
        certify_nash_safety(
            &game,
            &result.safety_policy,
            &result.vh_safety,
            CERTIFICATE_TOL,
        ),
        certify_gne_task(
            &game,
            &result.task_policy,
            &result.v,
            &result.vh_safety,
            &result.cis,
            CERTIFICATE_TOL,
        ),
        certify_fixed_point(&game, &result.task_policy, &result.v, CERTIFICATE_TOL)?,
    ];
    Ok(())
}

fn certify(config: &RunConfig, summary: &mut Summary) -> Result<()> {
    let game = single_game(config)?;
    let path = config.policy.as_ref().ok_or_else(|| Error::Input {
        path: "--policy".into(),
        message: "certify needs a policy.csv file".into(),
    })?;
    let (task, safety) = read_policy_csv(&game, path)?;
    prepare_out_dir(config)?;

    let vh_safety = evaluate_policy(&game, &safety, ValueKind::Safety);
    let vh_task = evaluate_policy(&game, &task, ValueKind::Safety);
    let v = evaluate_policy(&game, &task, ValueKind::Reward);
    let cis = vh_safety.superlevel_set();

    write_file(
        &config.out_dir,
        "values.csv",
        &values_csv(&v, &vh_task, &vh_safety, &cis),
    )?;
    write_file(&config.out_dir, "policy.csv", &policy_csv(&task, &safety))?;
    write_file(&config.out_dir, "trace.csv", &trace_csv([]))?;

    summary.game = Some(GameEcho::new(&game));
    summary.objective = Some(objective_value(&game, &v, &vh_task, &cis));
    summary.cis_size = Some(cis.len());
    summary.certificates = vec![
        certify_nash_safety(&game, &safety, &vh_safety, CERTIFICATE_TOL),
        certify_gne_task(&game, &task, &v, &vh_safety, &cis, CERTIFICATE_TOL),
    ];
    Ok(())
}

fn compare(config: &RunConfig, summary: &mut Summary) -> Result<()> {
    let games = load_games(&config.game_source)?;
    let rows = games
        .iter()
        .map(|g| {
            oracle_compare(
                &g.name,
                &g.game,
                &config.safety_config(),
                config.init_action,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    prepare_out_dir(config)?;

    let mut csv = String::from(
        "game,n_states,n_agents,gap,nash_cis,opt_cis,cis_ratio,nash_sweeps,opt_sweeps,\
         nash_evaluations_per_state_sweep,opt_evaluations_per_state_sweep,nash_converged",
    );
    if config.timing {
        csv.push_str(",nash_seconds,opt_seconds");
    }
    csv.push('\n');
    for r in &rows {
        let _ = write!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&r.game),
            r.n_states,
            r.n_agents,
            format_float(r.gap),
            r.nash_cis,
            r.opt_cis,
            format_float(r.cis_ratio),
            r.nash_sweeps,
            r.opt_sweeps,
            r.nash_evaluations_per_state_sweep,
            r.opt_evaluations_per_state_sweep,
            u8::from(r.nash_converged)
        );
        if config.timing {
            let _ = write!(
                csv,
                ",{},{}",
                format_float(r.nash_time.as_secs_f64()),
                format_float(r.opt_time.as_secs_f64())
            );
        }
        csv.push('\n');
    }
    write_file(&config.out_dir, "compare.csv", &csv)?;

    summary.converged = Some(rows.iter().all(|r| r.nash_converged));
    summary.compare = Some(rows);
    Ok(())
}

fn report(summary: &Summary) {
    let mut line = format!("{:?}", summary.config.command);
    if let Some(converged) = summary.converged {
        let _ = write!(line, ": converged={converged}");
    }
    if let Some(n) = summary.iterations {
        let _ = write!(line, " iterations={n}");
    }
    if let Some(obj) = summary.objective {
        let _ = write!(line, " objective={}", format_float(obj));
    }
    if let Some(n) = summary.cis_size {
        let _ = write!(line, " cis_size={n}");
    }
    println!("{line}");
    for c in &summary.certificates {
        let status = if c.passed { "PASS" } else { "FAIL" };
        let mut l = format!(
            "  {:?} {status} worst={}",
            c.kind,
            format_float(c.worst_violation)
        );
        if let Some(w) = c.witness {
            let _ = write!(
                l,
                " witness=(state {}, agent {}, action {})",
                w.state, w.agent, w.action
            );
        }
        println!("{l}");
    }
    if let Some(rows) = &summary.compare {
        for r in rows {
            println!(
                "  {} gap={} cis {}/{} evaluations {} vs {}",
                r.game,
                format_float(r.gap),
                r.nash_cis,
                r.opt_cis,
                r.nash_evaluations_per_state_sweep,
                r.opt_evaluations_per_state_sweep
            );
        }
    }
    if let Some(s) = summary.wall_seconds {
        println!("  wall time {s:.3} s");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_17_significant_digits() {
        assert_eq!(format_float(-0.45), "-4.5000000000000001e-1");
        assert_eq!(format_float(0.0), "0.0000000000000000e0");
        let x = 0.1 + 0.2;
        assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("trap2"), "trap2");
        assert_eq!(csv_field("random:1:2:3,3:0.5"), "\"random:1:2:3,3:0.5\"");
        assert_eq!(csv_field("a\"b"), "\"a\"\"b\"");
    }

    #[test]
    fn builtin_names() {
        assert_eq!(builtin_games("trap2").unwrap()[0].game, build_trap2());
        let g = &builtin_games("random:7:5:2,3:0.5").unwrap()[0].game;
        assert_eq!(g.actions_per_agent, vec![2, 3]);
        assert_eq!(g.n_states, 5);
        assert_eq!(builtin_games("suite:1:4").unwrap().len(), 4);
        for bad in [
            "nope",
            "random:x:5:2:0.5",
            "random:1:5:2:1.5",
            "random:1:0:2:0.5",
            "random:1:5:100000,100000,100000:0.5",
        ] {
            assert!(builtin_games(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn compare_counts_on_trap2() {
        let g = build_trap2();
        let cfg = SafetyIterationConfig::default();
        let row = oracle_compare("trap2", &g, &cfg, 0).unwrap();
        assert_eq!(row.gap, 0.0);
        assert_eq!(
            (
                row.nash_evaluations_per_state_sweep,
                row.opt_evaluations_per_state_sweep
            ),
            (4, 4)
        );

        let row = oracle_compare("trap2", &g, &cfg, 1).unwrap();
        assert_eq!((row.nash_cis, row.opt_cis), (0, 1));
        assert!((row.gap - 0.81).abs() < 1e-12);
    }
}
