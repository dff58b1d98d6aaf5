//! CSV export of simulation traces and ODE trajectories.
//!
//! Agent and arm ids in every file are 1-based, matching the config format.
//! A trace directory holds `states.csv` (n, agent, arm, value),
//! `population.csv` (n, arm, fraction), `rewards.csv` (n, agent, reward) and
//! `header.toml`, the resolved config with the drawn `arm_thetas`.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::game::Game;
use crate::meanfield::OdeTrajectory;
use crate::profile::StateProfile;
use crate::sim::RunTrace;

pub const STATES_FILE: &str = "states.csv";
pub const POPULATION_FILE: &str = "population.csv";
pub const REWARDS_FILE: &str = "rewards.csv";
pub const HEADER_FILE: &str = "header.toml";

/// Optional extras for a trace export.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExportOptions {
    /// Adds a centered moving average of each arm's fraction to
    /// `population.csv` as column `fraction_ma<window>`. Display only.
    pub moving_average: Option<usize>,
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn write_state_rows<W: Write>(w: &mut csv::Writer<W>, time: &str, game: &Game, state: &StateProfile) -> Result<()> {
    for i in 0..state.num_agents() {
        for &j in game.agent_arms(i) {
            w.write_record([
                time,
                &(i + 1).to_string(),
                &(j + 1).to_string(),
                &state.get(i, j).to_string(),
            ])?;
        }
    }
    Ok(())
}

/// Centered moving average with the window truncated at the ends.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    if window <= 1 || values.is_empty() {
        return values.to_vec();
    }
    let half_left = (window - 1) / 2;
    let half_right = window / 2;
    let mut prefix = Vec::with_capacity(values.len() + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..values.len())
        .map(|k| {
            let lo = k.saturating_sub(half_left);
            let hi = (k + half_right + 1).min(values.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Writes the resolved config of `game` to `path`.
pub fn write_header(game: &Game, path: &Path) -> Result<()> {
    game.resolved_config().save(path)
}

/// Writes a trace's CSV files and header into `dir`, creating it if needed.
pub fn write_trace(trace: &RunTrace, dir: &Path, options: ExportOptions) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let game = &trace.game;
    write_header(game, &dir.join(HEADER_FILE))?;

    let path = dir.join(STATES_FILE);
    let mut w = writer(&path)?;
    w.write_record(["n", "agent", "arm", "value"])?;
    for (n, state) in trace.snapshot_slots().zip(&trace.snapshots) {
        write_state_rows(&mut w, &n.to_string(), game, state)?;
    }
    let t = trace.horizon();
    if t % trace.snapshot_stride != 0 {
        write_state_rows(&mut w, &t.to_string(), game, &trace.terminal)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join(POPULATION_FILE);
    let mut w = writer(&path)?;
    let m = game.num_arms();
    let smoothed: Option<(usize, Vec<Vec<f64>>)> = options.moving_average.map(|window| {
        let columns = (0..m)
            .map(|j| {
                let series: Vec<f64> = trace.slots.iter().map(|s| s.population.get(j)).collect();
                moving_average(&series, window)
            })
            .collect();
        (window, columns)
    });
    match &smoothed {
        Some((window, _)) => w.write_record(["n", "arm", "fraction", &format!("fraction_ma{window}")])?,
        None => w.write_record(["n", "arm", "fraction"])?,
    }
    for (n, slot) in trace.slots.iter().enumerate() {
        for j in 0..m {
            let mut record = vec![n.to_string(), (j + 1).to_string(), slot.population.get(j).to_string()];
            if let Some((_, columns)) = &smoothed {
                record.push(columns[j][n].to_string());
            }
            w.write_record(&record)?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join(REWARDS_FILE);
    let mut w = writer(&path)?;
    w.write_record(["n", "agent", "reward"])?;
    for (n, slot) in trace.slots.iter().enumerate() {
        for (i, r) in slot.rewards.iter().enumerate() {
            w.write_record([n.to_string(), (i + 1).to_string(), r.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(())
}

/// Writes an ODE trajectory in the `states.csv` schema with `t` in place of `n`.
pub fn write_ode_states(traj: &OdeTrajectory, game: &Game, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "agent", "arm", "value"])?;
    for (t, state) in traj.times.iter().zip(&traj.states) {
        write_state_rows(&mut w, &t.to_string(), game, state)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Writes a `(index, value)` series with the given column names.
pub fn write_series(path: &Path, columns: [&str; 2], rows: impl IntoIterator<Item = (f64, f64)>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(columns)?;
    for (x, y) in rows {
        w.write_record([x.to_string(), y.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
