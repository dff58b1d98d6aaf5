//! Experiment commands behind the `mfbandit` binary.
//!
//! Every command writes plain files into an output directory and returns an
//! in-memory summary of what it wrote.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    contraction_records, convergence_distance_series, state_change_bound_series, variance_at, write_checks,
    CheckRecord, StateChangeBound, VarianceReport,
};
use crate::config::GameConfig;
use crate::error::{Error, Result};
use crate::export::{write_header, write_ode_states, write_series, write_trace, ExportOptions};
use crate::game::Game;
use crate::meanfield::{
    integrate_ode, interpolated_process, lyapunov_series, pseudotrajectory_distance, solve_mfe, MfeOptions,
    MfeSolution, OdeTrajectory, DEFAULT_DT, DEFAULT_T_END,
};
use crate::profile::StateProfile;
use crate::reward::RewardKind;
use crate::rng::Purpose;
use crate::sim::{agent_regrets, cumulative_reward, RunTrace};

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const CHECKS_FILE: &str = "checks.csv";
pub const TABLE_FILE: &str = "table.csv";
pub const TABLE_RUNS_FILE: &str = "table_runs.csv";
pub const MFE_FILE: &str = "mfe.csv";
pub const MFE_STATES_FILE: &str = "mfe_states.csv";

/// Files written by [`cmd_diagnose`].
pub const DIAGNOSE_FILES: [&str; 9] = [
    "header.toml",
    "checks.csv",
    "distance.csv",
    "ode_states.csv",
    "lyapunov.csv",
    "pseudotrajectory.csv",
    "state_change.csv",
    "variance.csv",
    "mfe_states.csv",
];

/// Horizon of the regret tables.
pub const TABLE_HORIZON: usize = 2000;
pub const TABLE_ARMS: usize = 4;
/// Probe points, as fractions of the interpolated time, of the
/// pseudotrajectory diagnostic.
pub const PROBE_FRACTIONS: [f64; 3] = [0.1, 0.5, 0.9];
pub const PROBE_WINDOW: f64 = 1.0;
pub const VARIANCE_SAMPLES: usize = 200;
/// Solutions closer than this in sup norm count as the same fixed point.
pub const CLUSTER_RESOLUTION: f64 = 1e-4;

/// Parses `1,2,5-8` into `[1, 2, 5, 6, 7, 8]`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = |item: &str| Error::InvalidArgument(format!("bad seed `{item}`"));
    let mut seeds = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item.split_once('-') {
            Some((a, b)) => {
                let a: u64 = a.trim().parse().map_err(|_| bad(item))?;
                let b: u64 = b.trim().parse().map_err(|_| bad(item))?;
                if a > b {
                    return Err(bad(item));
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(item.parse().map_err(|_| bad(item))?),
        }
    }
    Ok(seeds)
}

/// Runs `f` on every item on a pool of `workers` threads (all cores when
/// `None`), keeping input order.
pub fn parallel_map<T, U, F>(items: &[T], workers: Option<usize>, f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::InvalidArgument("worker count must be positive".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect())
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Summary of one seed of [`cmd_run`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedRun {
    pub seed: u64,
    pub dir: String,
    pub mean_regret: f64,
    pub cumulative_reward: f64,
    pub arm_thetas: Vec<f64>,
    /// Terminal state averaged over agents, per arm.
    pub terminal_arm_means: Vec<f64>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a GameConfig,
    runs: &'a [SeedRun],
    checks: &'a [CheckRecord],
}

fn seed_run(config: &GameConfig, seed: u64, out_dir: &Path, options: ExportOptions) -> Result<(SeedRun, RunTrace)> {
    let game = Game::new(GameConfig {
        seed,
        ..config.clone()
    })?;
    let trace = game.run()?;
    let dir = out_dir.join(format!("seed-{seed}"));
    write_trace(&trace, &dir, options)?;
    let regrets = agent_regrets(&trace)?;
    let summary = SeedRun {
        seed,
        dir: format!("seed-{seed}"),
        mean_regret: regrets.iter().sum::<f64>() / regrets.len() as f64,
        cumulative_reward: cumulative_reward(&trace),
        arm_thetas: game.reward().arm_thetas.clone(),
        terminal_arm_means: trace.terminal.arm_means(),
    };
    Ok((summary, trace))
}

/// Simulates `config` once per seed, writing `out_dir/seed-<k>/` trace sets
/// and `out_dir/manifest.toml`.
pub fn cmd_run(
    config_path: &Path,
    seeds: &[u64],
    out_dir: &Path,
    workers: Option<usize>,
    options: ExportOptions,
) -> Result<Vec<SeedRun>> {
    let config = GameConfig::load(config_path)?;
    run_config(&config, seeds, out_dir, workers, options)
}

/// [`cmd_run`] on an in-memory config.
pub fn run_config(
    config: &GameConfig,
    seeds: &[u64],
    out_dir: &Path,
    workers: Option<usize>,
    options: ExportOptions,
) -> Result<Vec<SeedRun>> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("no seeds given".into()));
    }
    config.validate()?;
    create_dir(out_dir)?;
    let runs = parallel_map(seeds, workers, |&seed| seed_run(config, seed, out_dir, options).map(|(s, _)| s))?;
    let checks = contraction_records(&Game::new(config.clone())?)?;
    let body = toml::to_string(&Manifest {
        config,
        runs: &runs,
        checks: &checks,
    })?;
    let path = out_dir.join(MANIFEST_FILE);
    std::fs::write(&path, format!("# generated at unix time {}\n{body}", timestamp())).map_err(|e| Error::io(&path, e))?;
    Ok(runs)
}

/// Parameter triple `(theta, beta, eta)` of the table experiments.
pub fn table_parameters(reward: RewardKind, contraction: bool) -> Result<(f64, f64, f64)> {
    match (reward, contraction) {
        (RewardKind::General, true) => Ok((0.5, 0.5, 0.2)),
        (RewardKind::General, false) => Ok((0.5, 30.0, 0.2)),
        (RewardKind::Linear, true) => Ok((1.0, 2.0, 0.2)),
        (RewardKind::Linear, false) => Ok((1.0, 40.0, 0.2)),
        (RewardKind::Custom, _) => Err(Error::InvalidArgument("tables cover the general and linear rewards".into())),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableOptions {
    pub reward: RewardKind,
    pub contraction: bool,
    pub num_agents: Vec<usize>,
    pub runs: usize,
    /// Defaults to `1..=runs`.
    pub seeds: Option<Vec<u64>>,
    pub horizon: usize,
    pub workers: Option<usize>,
}

impl TableOptions {
    pub fn new(reward: RewardKind, contraction: bool) -> Self {
        Self {
            reward,
            contraction,
            num_agents: vec![50, 100, 200],
            runs: 6,
            seeds: None,
            horizon: TABLE_HORIZON,
            workers: None,
        }
    }

    pub fn seeds(&self) -> Result<Vec<u64>> {
        let seeds = match &self.seeds {
            Some(s) => s.clone(),
            None => (1..=self.runs as u64).collect(),
        };
        if seeds.is_empty() {
            return Err(Error::InvalidArgument("no seeds given".into()));
        }
        Ok(seeds)
    }

    pub fn config(&self, num_agents: usize, seed: u64) -> Result<GameConfig> {
        let (theta, beta, eta) = table_parameters(self.reward, self.contraction)?;
        Ok(GameConfig::homogeneous(
            num_agents,
            TABLE_ARMS,
            self.horizon,
            self.reward,
            theta,
            beta,
            eta,
            seed,
        ))
    }
}

/// One seed of one table cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableRun {
    pub reward: RewardKind,
    #[serde(rename = "N")]
    pub num_agents: usize,
    pub seed: u64,
    /// Regret averaged over agents.
    pub regret: f64,
    /// Smallest and largest per-agent regret.
    pub regret_min: f64,
    pub regret_max: f64,
    pub rewards: f64,
}

/// A table cell: means over seeds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableCell {
    pub reward: RewardKind,
    #[serde(rename = "N")]
    pub num_agents: usize,
    pub regret: f64,
    pub rewards: f64,
    pub runs: usize,
    pub seed_list: String,
}

/// Computes the table without writing anything.
pub fn table(options: &TableOptions) -> Result<(Vec<TableCell>, Vec<TableRun>)> {
    let seeds = options.seeds()?;
    let jobs: Vec<(usize, u64)> = options
        .num_agents
        .iter()
        .flat_map(|&n| seeds.iter().map(move |&s| (n, s)))
        .collect();
    let runs = parallel_map(&jobs, options.workers, |&(n, seed)| {
        let trace = Game::new(options.config(n, seed)?)?.run()?;
        let regrets = agent_regrets(&trace)?;
        Ok(TableRun {
            reward: options.reward,
            num_agents: n,
            seed,
            regret: regrets.iter().sum::<f64>() / regrets.len() as f64,
            regret_min: regrets.iter().copied().fold(f64::INFINITY, f64::min),
            regret_max: regrets.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            rewards: cumulative_reward(&trace),
        })
    })?;
    let seed_list = seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
    let cells = options
        .num_agents
        .iter()
        .map(|&n| {
            let cell: Vec<&TableRun> = runs.iter().filter(|r| r.num_agents == n).collect();
            let k = cell.len() as f64;
            TableCell {
                reward: options.reward,
                num_agents: n,
                regret: cell.iter().map(|r| r.regret).sum::<f64>() / k,
                rewards: cell.iter().map(|r| r.rewards).sum::<f64>() / k,
                runs: cell.len(),
                seed_list: seed_list.clone(),
            }
        })
        .collect();
    Ok((cells, runs))
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Writes `table.csv` (reward, N, regret, rewards, runs, seed_list) and the
/// per-seed `table_runs.csv` into `out_dir`.
pub fn cmd_table(options: &TableOptions, out_dir: &Path) -> Result<Vec<TableCell>> {
    if options.runs == 0 && options.seeds.is_none() {
        return Err(Error::InvalidArgument("runs must be at least 1".into()));
    }
    create_dir(out_dir)?;
    let (cells, runs) = table(options)?;
    write_rows(&out_dir.join(TABLE_FILE), &cells)?;
    write_rows(&out_dir.join(TABLE_RUNS_FILE), &runs)?;
    Ok(cells)
}

/// Solver outcome of one start of [`cmd_mfe`].
#[derive(Clone, Debug, PartialEq)]
pub struct MfeStart {
    pub start: u64,
    pub solution: MfeSolution,
    /// Index into [`MfeReport::clusters`]; `None` when not converged.
    pub cluster: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MfeReport {
    pub starts: Vec<MfeStart>,
    /// One representative state per distinct fixed point.
    pub clusters: Vec<StateProfile>,
    pub checks: Vec<CheckRecord>,
}

impl MfeReport {
    /// Largest sup distance between two cluster representatives.
    pub fn max_separation(&self) -> f64 {
        let mut sep: f64 = 0.0;
        for (k, a) in self.clusters.iter().enumerate() {
            for b in &self.clusters[k + 1..] {
                sep = sep.max(a.sup_distance(b).unwrap_or(0.0));
            }
        }
        sep
    }
}

/// Groups converged solutions whose distance to a cluster's first member is
/// within `resolution`.
pub fn cluster_solutions(starts: &mut [MfeStart], resolution: f64) -> Vec<StateProfile> {
    let mut clusters: Vec<StateProfile> = Vec::new();
    for s in starts.iter_mut() {
        if !s.solution.converged {
            continue;
        }
        let state = &s.solution.state;
        let found = clusters
            .iter()
            .position(|c| c.sup_distance(state).map(|d| d <= resolution).unwrap_or(false));
        s.cluster = Some(found.unwrap_or_else(|| {
            clusters.push(state.clone());
            clusters.len() - 1
        }));
    }
    clusters
}

/// Solves for the equilibrium from `starts` random initial profiles of the
/// game's seed.
pub fn mfe_report(game: &Game, starts: usize, options: MfeOptions, workers: Option<usize>) -> Result<MfeReport> {
    if starts == 0 {
        return Err(Error::InvalidArgument("at least one start is needed".into()));
    }
    let ids: Vec<u64> = (0..starts as u64).collect();
    let mut results = parallel_map(&ids, workers, |&start| {
        Ok(MfeStart {
            start,
            solution: solve_mfe(game, start, options)?,
            cluster: None,
        })
    })?;
    let clusters = cluster_solutions(&mut results, CLUSTER_RESOLUTION);
    Ok(MfeReport {
        starts: results,
        clusters,
        checks: contraction_records(game)?,
    })
}

#[derive(Serialize)]
struct MfeRow {
    start: u64,
    converged: bool,
    residual: f64,
    iterations: usize,
    cluster: Option<usize>,
}

/// Writes `mfe.csv` (one row per start), `mfe_states.csv` (cluster
/// representatives) and `checks.csv` into `out_dir`.
pub fn cmd_mfe(config_path: &Path, starts: usize, out_dir: &Path, workers: Option<usize>) -> Result<MfeReport> {
    let game = Game::new(GameConfig::load(config_path)?)?;
    let report = mfe_report(&game, starts, MfeOptions::default(), workers)?;
    create_dir(out_dir)?;
    let rows: Vec<MfeRow> = report
        .starts
        .iter()
        .map(|s| MfeRow {
            start: s.start,
            converged: s.solution.converged,
            residual: s.solution.residual,
            iterations: s.solution.iterations,
            cluster: s.cluster,
        })
        .collect();
    write_rows(&out_dir.join(MFE_FILE), &rows)?;
    write_cluster_states(&game, &report.clusters, &out_dir.join(MFE_STATES_FILE))?;
    let mut checks = report.checks.clone();
    checks.push(CheckRecord::new(
        "mfe_clusters",
        format!("starts={starts} resolution={CLUSTER_RESOLUTION}"),
        report.clusters.len() == 1,
        report.max_separation(),
    ));
    write_checks(&out_dir.join(CHECKS_FILE), &checks)?;
    Ok(report)
}

fn write_cluster_states(game: &Game, clusters: &[StateProfile], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["cluster", "agent", "arm", "value"])?;
    for (k, state) in clusters.iter().enumerate() {
        for i in 0..game.num_agents() {
            for &j in game.agent_arms(i) {
                w.write_record([k.to_string(), (i + 1).to_string(), (j + 1).to_string(), state.get(i, j).to_string()])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Values behind the files of [`cmd_diagnose`].
#[derive(Clone, Debug)]
pub struct DiagnoseReport {
    pub trace: RunTrace,
    pub mfe: MfeSolution,
    pub ode: OdeTrajectory,
    pub distances: Vec<(usize, f64)>,
    pub lyapunov: Vec<f64>,
    /// `(probe time, distance)`.
    pub pseudotrajectory: Vec<(f64, f64)>,
    /// 0-based agent and arm of the state-change series.
    pub sampled: (usize, usize),
    pub state_change: Vec<StateChangeBound>,
    pub variance: Option<VarianceReport>,
    pub checks: Vec<CheckRecord>,
}

/// Probe times of the pseudotrajectory diagnostic, pulled back so the window
/// fits inside the process.
pub fn probe_times(t_max: f64, window: f64) -> Result<Vec<f64>> {
    if t_max < window {
        return Err(Error::InvalidArgument(format!(
            "interpolated time {t_max} shorter than the window {window}"
        )));
    }
    Ok(PROBE_FRACTIONS.iter().map(|f| (f * t_max).min(t_max - window)).collect())
}

/// Runs one simulation, the ODE from the same initial state and every
/// check against the solved equilibrium.
pub fn diagnose(config: &GameConfig) -> Result<DiagnoseReport> {
    let config = GameConfig {
        snapshot_stride: Some(1),
        ..config.clone()
    };
    let game = Game::new(config)?;
    let trace = game.run()?;
    let mfe = solve_mfe(&game, 0, MfeOptions::default())?;
    let ode = integrate_ode(&game, trace.initial(), DEFAULT_T_END, DEFAULT_DT)?;
    let distances = convergence_distance_series(&trace, &mfe.state)?;
    let lyapunov = lyapunov_series(&ode, &mfe.state)?;

    let interp = interpolated_process(&trace)?;
    let pseudotrajectory = probe_times(interp.end_time(), PROBE_WINDOW)?
        .into_iter()
        .map(|t| Ok((t, pseudotrajectory_distance(&game, &interp, t, PROBE_WINDOW, DEFAULT_DT)?)))
        .collect::<Result<Vec<_>>>()?;

    let mut rng = game.streams().stream(Purpose::Analysis, 0);
    let agent = rng.random_range(0..game.num_agents());
    let arms = game.agent_arms(agent);
    let arm = arms[rng.random_range(0..arms.len())];
    let state_change = if (0..game.horizon()).all(|n| game.eta_at(n) < 1.0) {
        state_change_bound_series(&trace, agent, arm)?
    } else {
        Vec::new()
    };

    let variance = if mfe.converged {
        Some(variance_at(&game, mfe.clone(), VARIANCE_SAMPLES, &mut rng)?)
    } else {
        None
    };

    let mut checks = contraction_records(&game)?;
    checks.push(CheckRecord::new(
        "mfe_residual",
        format!("tol={}", MfeOptions::default().tol),
        mfe.converged,
        MfeOptions::default().tol - mfe.residual,
    ));
    let worst_step = lyapunov.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    checks.push(CheckRecord::new(
        "lyapunov_non_increasing",
        format!("t_end={DEFAULT_T_END} dt={DEFAULT_DT}"),
        worst_step <= 1e-8,
        1e-8 - worst_step,
    ));
    let slack = state_change.iter().map(|b| b.rhs - b.lhs).fold(f64::INFINITY, f64::min);
    checks.push(CheckRecord::new(
        "state_change_bound",
        format!("agent={} arm={}", agent + 1, arm + 1),
        !state_change.is_empty() && slack >= -1e-9,
        slack,
    ));
    let pt: Vec<f64> = pseudotrajectory.iter().map(|p| p.1).collect();
    checks.push(CheckRecord::new(
        "pseudotrajectory_decreasing",
        format!("window={PROBE_WINDOW} probes={PROBE_FRACTIONS:?}"),
        pt.windows(2).all(|w| w[1] < w[0]),
        pt.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min),
    ));
    if let Some(v) = &variance {
        let worst = v.empirical.iter().copied().fold(0.0, f64::max);
        checks.push(CheckRecord::new(
            "variance_empirical",
            format!("samples={} slack=2", v.samples),
            v.empirical_within(2.0),
            2.0 * v.bound - worst,
        ));
        let worst = v.analytic.iter().copied().fold(0.0, f64::max);
        checks.push(CheckRecord::new("variance_analytic", "", v.analytic_within(), v.bound - worst));
    } else {
        checks.push(CheckRecord::new("variance_empirical", "mfe not converged", false, f64::NAN));
    }

    Ok(DiagnoseReport {
        trace,
        mfe,
        ode,
        distances,
        lyapunov,
        pseudotrajectory,
        sampled: (agent, arm),
        state_change,
        variance,
        checks,
    })
}

/// Writes every file of [`DIAGNOSE_FILES`] into `out_dir`.
pub fn write_diagnostics(report: &DiagnoseReport, out_dir: &Path) -> Result<()> {
    create_dir(out_dir)?;
    let game = &report.trace.game;
    let file = |name: &str| -> PathBuf { out_dir.join(name) };
    write_header(game, &file("header.toml"))?;
    write_checks(&file("checks.csv"), &report.checks)?;
    write_series(
        &file("distance.csv"),
        ["n", "distance"],
        report.distances.iter().map(|&(n, e)| (n as f64, e)),
    )?;
    // Every tenth integrator step keeps the file small.
    let thinned = OdeTrajectory {
        times: report.ode.times.iter().step_by(10).copied().collect(),
        states: report.ode.states.iter().step_by(10).cloned().collect(),
    };
    write_ode_states(&thinned, game, &file("ode_states.csv"))?;
    write_series(
        &file("lyapunov.csv"),
        ["t", "lyapunov"],
        report.ode.times.iter().copied().zip(report.lyapunov.iter().copied()),
    )?;
    write_series(
        &file("pseudotrajectory.csv"),
        ["t", "distance"],
        report.pseudotrajectory.iter().copied(),
    )?;

    let (agent, arm) = report.sampled;
    let mut w = csv::Writer::from_path(file("state_change.csv"))?;
    w.write_record(["K", "agent", "arm", "lhs", "rhs"])?;
    for (k, b) in report.state_change.iter().enumerate() {
        w.write_record([
            k.to_string(),
            (agent + 1).to_string(),
            (arm + 1).to_string(),
            b.lhs.to_string(),
            b.rhs.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(file("state_change.csv"), e))?;

    let mut w = csv::Writer::from_path(file("variance.csv"))?;
    w.write_record(["arm", "empirical", "analytic", "bound"])?;
    if let Some(v) = &report.variance {
        for j in 0..v.empirical.len() {
            w.write_record([
                (j + 1).to_string(),
                v.empirical[j].to_string(),
                v.analytic[j].to_string(),
                v.bound.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(file("variance.csv"), e))?;

    write_cluster_states(game, std::slice::from_ref(&report.mfe.state), &file("mfe_states.csv"))
}

/// Diagnoses `config_path` at `seed` and writes the bundle into `out_dir`.
pub fn cmd_diagnose(config_path: &Path, seed: Option<u64>, out_dir: &Path) -> Result<DiagnoseReport> {
    let mut config = GameConfig::load(config_path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let report = diagnose(&config)?;
    write_diagnostics(&report, out_dir)?;
    Ok(report)
}
