//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs as a plain binary (`harness = false`) so the lines
//! are printed by a normal `cargo test`.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cis_marl::cli::{self, oracle_compare, Command, GameSource, RunConfig};
use cis_marl::dual::{run_dual_iteration, DualIterationConfig, DualIterationResult};
use cis_marl::envs::{
    build_gridworld, build_random_game, build_trap2, grid5x5, random_suite, SplitMix64,
};
use cis_marl::oracles::{
    certify_gne_task, certify_nash_safety, induced_joint_optimum, iterate_operator,
    joint_safety_optimum,
};
use cis_marl::safety::{run_safety_iteration, SafetyIterationConfig, SafetyIterationResult};
use cis_marl::{evaluate_policy, rollout, AgentOrder, Game, JointPolicy, ValueKind};

const SUITE_SEED: u64 = 0x5eed_2024;
const SUITE_SIZE: usize = 200;
const GRID_SEED: u64 = 42;

const FIXED_POINT_TOL: f64 = 1e-9;
const FIXED_POINT_SWEEPS: usize = 2000;
const FIXED_POINT_BUDGET: Duration = Duration::from_secs(10);
const MONOTONE_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 1000;
const CERT_TOL: f64 = 1e-9;
const INDUCED_TOL: f64 = 1e-9;
const ROLLOUT_BUDGET: Duration = Duration::from_secs(5);

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn FnOnce() -> Outcome + 'a>);

fn suite() -> Vec<(String, Game)> {
    random_suite(SUITE_SEED, SUITE_SIZE)
        .into_iter()
        .enumerate()
        .map(|(i, p)| (format!("suite[{i}]"), p.build()))
        .collect()
}

fn grid() -> Game {
    build_gridworld(&grid5x5(), 0.9, 0.9).expect("grid5x5 builds")
}

fn safety_config(seed: u64) -> SafetyIterationConfig {
    SafetyIterationConfig {
        max_outer_iters: MAX_SWEEPS,
        agent_order: AgentOrder::SeededShuffle,
        seed,
    }
}

fn dual_config(seed: u64) -> DualIterationConfig {
    DualIterationConfig {
        m_outer: MAX_SWEEPS,
        seed,
        ..Default::default()
    }
}

fn random_policy(game: &Game, seed: u64) -> JointPolicy {
    let mut rng = SplitMix64::new(seed);
    let joint: Vec<usize> = (0..game.n_states)
        .map(|_| rng.below(game.n_joint_actions()))
        .collect();
    JointPolicy::from_joint_indices(game, &joint)
}

/// Safety runs on the suite: from the all-zeros policy and from a random one.
fn safety_runs(games: &[(String, Game)]) -> Vec<(String, &Game, SafetyIterationResult)> {
    let mut runs = Vec::new();
    for (i, (name, game)) in games.iter().enumerate() {
        let seed = i as u64;
        for (label, init) in [
            ("zeros", JointPolicy::zeros(game)),
            ("random", random_policy(game, seed ^ 0xa11ce)),
        ] {
            let result = run_safety_iteration(game, &init, &safety_config(seed));
            runs.push((format!("{name}/{label}"), game, result));
        }
    }
    runs
}

/// Dual runs on the suite and on grid5x5.
fn dual_runs<'a>(
    games: &'a [(String, Game)],
    grid: &'a Game,
) -> Vec<(String, &'a Game, DualIterationResult)> {
    let mut runs: Vec<_> = games
        .iter()
        .enumerate()
        .map(|(i, (name, game))| {
            let result =
                run_dual_iteration(game, &JointPolicy::zeros(game), &dual_config(i as u64));
            (name.clone(), game, result)
        })
        .collect();
    let result = run_dual_iteration(grid, &JointPolicy::zeros(grid), &dual_config(GRID_SEED));
    runs.push(("grid5x5".into(), grid, result));
    runs
}

fn fixed_point_correctness(games: &[(String, Game)]) -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (i, (name, game)) in games.iter().enumerate() {
        for policy in [JointPolicy::zeros(game), random_policy(game, i as u64)] {
            for kind in [ValueKind::Reward, ValueKind::Safety] {
                let exact = evaluate_policy(game, &policy, kind);
                let (iterated, _) = iterate_operator(game, &policy, kind, FIXED_POINT_SWEEPS);
                let gap = exact.sup_distance(&iterated);
                if gap > FIXED_POINT_TOL {
                    return Err(format!("{name} {kind:?}: gap {gap:e}"));
                }
                worst = worst.max(gap);
                checked += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed > FIXED_POINT_BUDGET {
        return Err(format!("took {elapsed:?}, budget {FIXED_POINT_BUDGET:?}"));
    }
    Ok(format!(
        "{checked} tables on {} games, max gap {worst:.1e} (tol {FIXED_POINT_TOL:e}), {:.2} s",
        games.len(),
        elapsed.as_secs_f64()
    ))
}

fn monotone_safety_iteration(runs: &[(String, &Game, SafetyIterationResult)]) -> Outcome {
    let mut worst = f64::INFINITY;
    let mut longest = 0;
    for (name, _, r) in runs {
        if !r.converged || r.sweeps() > MAX_SWEEPS {
            return Err(format!("{name}: not converged after {} sweeps", r.sweeps()));
        }
        for row in &r.trace {
            if row.min_change < -MONOTONE_TOL {
                return Err(format!(
                    "{name}: sweep {} lowered V_h by {:e}",
                    row.iteration, -row.min_change
                ));
            }
            worst = worst.min(row.min_change);
        }
        longest = longest.max(r.sweeps());
    }
    Ok(format!(
        "{} runs, smallest step {worst:e}, longest run {longest} sweeps",
        runs.len()
    ))
}

fn nash_certificate(runs: &[(String, &Game, SafetyIterationResult)]) -> Outcome {
    let mut worst = 0.0f64;
    for (name, game, r) in runs.iter().filter(|(_, _, r)| r.converged) {
        let cert = certify_nash_safety(game, &r.policy, &r.vh, CERT_TOL);
        if !cert.passed {
            return Err(format!("{name}: {cert:?}"));
        }
        worst = worst.max(cert.worst_violation);
    }

    let trap = build_trap2();
    let local = run_safety_iteration(&trap, &JointPolicy::constant(&trap, 1), &safety_config(0));
    let cert = certify_nash_safety(&trap, &local.policy, &local.vh, CERT_TOL);
    let opt = joint_safety_optimum(&trap).map_err(|e| e.to_string())?;
    let opt_cis = opt.cis();
    if !local.converged || !cert.passed {
        return Err(format!(
            "trap2 from (1,1): converged {} certificate {cert:?}",
            local.converged
        ));
    }
    if !(local.cis.is_subset(&opt_cis) && local.cis.len() < opt_cis.len()) {
        return Err(format!(
            "trap2 from (1,1): CIS {:?} vs optimum {opt_cis:?}",
            local.cis
        ));
    }
    Ok(format!(
        "{} runs certified, worst {worst:e}; trap2 from (1,1): CIS {:?} strictly inside optimum {opt_cis:?}",
        runs.len(),
        local.cis
    ))
}

fn no_fallbacks(runs: &[(String, &Game, DualIterationResult)]) -> Outcome {
    for (name, _, r) in runs {
        if r.total_fallbacks() != 0 {
            return Err(format!("{name}: {} fallbacks", r.total_fallbacks()));
        }
    }
    Ok(format!(
        "0 fallbacks in {} runs (suite + grid5x5)",
        runs.len()
    ))
}

fn cis_growth(runs: &[(String, &Game, DualIterationResult)]) -> Outcome {
    for (name, _, r) in runs {
        if let Some(w) = r
            .cis_history
            .windows(2)
            .position(|w| !w[0].is_subset(&w[1]))
        {
            return Err(format!(
                "{name}: CIS shrank after outer iteration {}",
                w + 1
            ));
        }
        let task_cis = r.vh_task.superlevel_set();
        if task_cis != r.cis {
            return Err(format!(
                "{name}: task CIS {task_cis:?} != safety CIS {:?}",
                r.cis
            ));
        }
    }
    Ok(format!(
        "{} runs nested, task CIS == safety CIS in each",
        runs.len()
    ))
}

fn statewise_safety(grid: &Game) -> Outcome {
    let start = Instant::now();
    let r = run_dual_iteration(grid, &JointPolicy::zeros(grid), &dual_config(GRID_SEED));
    if r.cis.is_empty() {
        return Err("empty CIS".into());
    }
    for x in r.cis.iter() {
        let path = rollout(grid, &r.task_policy, x);
        let bad = path
            .visited()
            .find(|&y| grid.h(y) < 0.0 || !r.cis.contains(y));
        if let Some(y) = bad {
            return Err(format!("start {x}: reaches state {y} (h = {})", grid.h(y)));
        }
    }
    let elapsed = start.elapsed();
    if elapsed > ROLLOUT_BUDGET {
        return Err(format!("took {elapsed:?}, budget {ROLLOUT_BUDGET:?}"));
    }
    Ok(format!(
        "{} CIS states rolled out safely, {:.2} s",
        r.cis.len(),
        elapsed.as_secs_f64()
    ))
}

fn gne_certificate(runs: &[(String, &Game, DualIterationResult)]) -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut certified = 0;
    for (name, game, r) in runs.iter().filter(|(_, _, r)| r.converged) {
        let cert = certify_gne_task(game, &r.task_policy, &r.v, &r.vh_safety, &r.cis, CERT_TOL);
        if !cert.passed {
            return Err(format!("{name}: {cert:?}"));
        }
        worst = worst.max(cert.worst_violation);
        let opt = induced_joint_optimum(game, &r.vh_safety).map_err(|e| e.to_string())?;
        for x in r.cis.iter() {
            let excess = r.v[x] - opt[x];
            if excess > INDUCED_TOL {
                return Err(format!(
                    "{name}: V({x}) exceeds the induced optimum by {excess:e}"
                ));
            }
            worst_excess = worst_excess.max(excess);
        }
        certified += 1;
    }
    if certified != runs.len() {
        return Err(format!("only {certified} of {} runs converged", runs.len()));
    }
    Ok(format!(
        "{certified} runs certified, worst violation {worst:e}, max V - V_opt {worst_excess:e}"
    ))
}

fn empty_cis_reduces_to_safety_iteration() -> Outcome {
    let mut checked = 0;
    for seed in 0..50u64 {
        let n_states = 2 + (seed as usize % 11);
        let actions = [vec![2], vec![2, 3], vec![3, 3, 2]][seed as usize % 3].clone();
        let game = build_random_game(seed, n_states, &actions, 1.0);
        let init = JointPolicy::zeros(&game);
        let dual = run_dual_iteration(&game, &init, &dual_config(seed));
        let alone = run_safety_iteration(&game, &init, &safety_config(seed));
        if !dual.cis.is_empty() {
            return Err(format!("seed {seed}: CIS {:?} not empty", dual.cis));
        }
        if dual.task_policy != dual.safety_policy {
            return Err(format!(
                "seed {seed}: task policy differs from safety policy"
            ));
        }
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        if bits(&dual.vh_safety.values) != bits(&alone.vh.values)
            || dual.safety_policy != alone.policy
        {
            return Err(format!(
                "seed {seed}: differs from standalone safety iteration"
            ));
        }
        checked += 1;
    }
    Ok(format!(
        "{checked} all-hazard games match standalone safety iteration bit for bit"
    ))
}

fn evaluation_counters() -> Outcome {
    let mut rows = 0;
    for seed in 0..20u64 {
        let game = build_random_game(seed, 10, &[3, 3, 3], 0.5);
        let row =
            oracle_compare("batch", &game, &safety_config(seed), 0).map_err(|e| e.to_string())?;
        if (
            row.nash_evaluations_per_state_sweep,
            row.opt_evaluations_per_state_sweep,
        ) != (9, 27)
        {
            return Err(format!(
                "seed {seed}: {} vs {} evaluations per state per sweep",
                row.nash_evaluations_per_state_sweep, row.opt_evaluations_per_state_sweep
            ));
        }
        let run = run_safety_iteration(&game, &JointPolicy::zeros(&game), &safety_config(seed));
        if let Some(r) = run.trace.iter().find(|r| r.evaluations != 10 * 9) {
            return Err(format!(
                "seed {seed}: sweep {} made {} evaluations",
                r.iteration, r.evaluations
            ));
        }
        let opt = joint_safety_optimum(&game).map_err(|e| e.to_string())?;
        if opt.evaluations != opt.sweeps * 10 * 27 {
            return Err(format!(
                "seed {seed}: oracle made {} evaluations",
                opt.evaluations
            ));
        }
        rows += 1;
    }
    Ok(format!(
        "{rows} games: 9 vs 27 evaluations per state per sweep"
    ))
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .expect("output dir")
        .map(|e| {
            let e = e.expect("dir entry");
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).expect("read"),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let configs = [
        (Command::SolveDual, "grid5x5", GRID_SEED),
        (Command::SolveSafety, "grid5x5", GRID_SEED),
        (Command::SolveDual, "random:7:12:3,2,3:0.5", 3),
        (Command::OracleCompare, "suite:11:20", 5),
    ];
    let mut compared = 0;
    for (i, (command, env, seed)) in configs.into_iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let dir = tmp.path().join(format!("{i}-{rep}"));
            let mut config = RunConfig::new(command, GameSource::Env(env.into()), &dir);
            config.seed = seed;
            config.quiet = true;
            let status = cli::run(&config);
            if status == 2 {
                return Err(format!("{command:?} on {env}: exit {status}"));
            }
            outputs.push(read_dir_bytes(&dir));
        }
        if outputs[0] != outputs[1] {
            return Err(format!("{command:?} on {env}: outputs differ"));
        }
        compared += outputs[0].len();
    }

    // Thread count must not leak into results either.
    let game = grid();
    let solve = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("pool")
            .install(|| {
                run_dual_iteration(&game, &JointPolicy::zeros(&game), &dual_config(GRID_SEED))
            })
    };
    let (one, many) = (solve(1), solve(4));
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    if one.task_policy != many.task_policy || bits(&one.v.values) != bits(&many.v.values) {
        return Err("1-thread and 4-thread runs differ".into());
    }
    Ok(format!(
        "{compared} files byte-identical across repeated runs; 1 vs 4 threads identical"
    ))
}

fn main() -> ExitCode {
    let games = suite();
    let grid = grid();
    let safety = safety_runs(&games);
    let dual = dual_runs(&games, &grid);

    let criteria: Vec<Criterion> = vec![
        (
            "fixed-point correctness",
            Box::new(|| fixed_point_correctness(&games)),
        ),
        (
            "safety iteration monotone and convergent",
            Box::new(|| monotone_safety_iteration(&safety)),
        ),
        (
            "safety Nash certificate and local gap",
            Box::new(|| nash_certificate(&safety)),
        ),
        (
            "no invariant-set fallbacks",
            Box::new(|| no_fallbacks(&dual)),
        ),
        (
            "CIS non-decreasing, task CIS == safety CIS",
            Box::new(|| cis_growth(&dual)),
        ),
        (
            "state-wise safety on grid5x5",
            Box::new(|| statewise_safety(&grid)),
        ),
        (
            "GNE certificate and induced optimum bound",
            Box::new(|| gne_certificate(&dual)),
        ),
        (
            "empty CIS reduces to safety iteration",
            Box::new(empty_cis_reduces_to_safety_iteration),
        ),
        (
            "sequential vs joint evaluation counters",
            Box::new(evaluation_counters),
        ),
        ("deterministic outputs", Box::new(determinism)),
    ];

    let mut failed = 0;
    for (n, (name, check)) in criteria.into_iter().enumerate() {
        let outcome =
            panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", n + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
