use edgemarket::config::EvoConfig;
use edgemarket::report::{ChartSpec, Table};

use crate::output::{RunArtifacts, Writer};
use crate::CliError;

pub(crate) fn run(cfg: &EvoConfig, mut out: Writer) -> Result<RunArtifacts, CliError> {
    let game = cfg.game()?;
    let traj = game.evolve(&cfg.initial_state()?, &cfg.integration())?;

    let mut table = Table::new(&["time", "pop_id", "region_id", "share", "payoff"]);
    let mut chart = Table::new(&["time", "series", "share"]);
    for point in &traj.points {
        let payoffs = game.payoffs(&point.state);
        for (p, pop) in game.populations().iter().enumerate() {
            for (v, region) in game.regions().iter().enumerate() {
                let share = point.state.share(p, v);
                table.push(vec![
                    point.time.into(),
                    pop.id.as_str().into(),
                    region.id.as_str().into(),
                    share.into(),
                    payoffs[p][v].into(),
                ]);
                chart.push(vec![
                    point.time.into(),
                    format!("{}/{}", pop.id, region.id).into(),
                    share.into(),
                ]);
            }
        }
    }
    out.csv("trajectory.csv", "evo.trajectory", &table)?;
    out.chart(
        "trajectory.svg",
        &chart,
        &ChartSpec::line("Population shares", "time", "share", Some("series")),
    )?;

    let mut summary = Table::new(&["metric", "value"]);
    summary.push(vec!["converged".into(), traj.converged.to_string().into()]);
    summary.push(vec!["steps".into(), traj.steps.into()]);
    summary.push(vec!["max_drift".into(), traj.max_drift.into()]);
    let last = traj.final_state();
    for (p, pop) in game.populations().iter().enumerate() {
        for (v, region) in game.regions().iter().enumerate() {
            summary.push(vec![
                format!("share/{}/{}", pop.id, region.id).into(),
                last.share(p, v).into(),
            ]);
            summary.push(vec![
                format!("payoff/{}/{}", pop.id, region.id).into(),
                traj.final_payoffs[p][v].into(),
            ]);
        }
    }
    out.finish(summary)
}

pub(crate) fn sweep(cfg: &EvoConfig, mut out: Writer) -> Result<RunArtifacts, CliError> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("invalid `sweep`: `evo sweep` needs a sweep section".into()))?;
    let game = cfg.game()?;
    let swept = game.region_index(&sweep.region)?;
    let rows = game.reward_sweep(&sweep.region, &sweep.grid, &cfg.initial_state()?, &cfg.integration())?;

    let mut table = Table::new(&["reward", "region_id", "mass", "sync_frequency"]);
    let mut summary = Table::new(&["reward", "mass", "sync_frequency", "converged"]);
    for row in &rows {
        for (v, region) in game.regions().iter().enumerate() {
            table.push(vec![
                row.reward.into(),
                region.id.as_str().into(),
                row.masses[v].into(),
                row.frequencies[v].into(),
            ]);
        }
        summary.push(vec![
            row.reward.into(),
            row.masses[swept].into(),
            row.frequencies[swept].into(),
            row.converged.to_string().into(),
        ]);
    }
    out.csv("sweep.csv", "evo.sweep", &table)?;
    out.chart(
        "sweep_mass.svg",
        &table,
        &ChartSpec::line(
            &format!("Serving mass vs reward of {}", sweep.region),
            "reward",
            "mass",
            Some("region_id"),
        ),
    )?;
    out.chart(
        "sweep_sync.svg",
        &table,
        &ChartSpec::line(
            &format!("Sync frequency vs reward of {}", sweep.region),
            "reward",
            "sync_frequency",
            Some("region_id"),
        ),
    )?;
    out.finish(summary)
}
