use edgemarket::config::{ControllerConfig, DdaConfig};
use edgemarket::dda::{
    compare_controllers, train_on_bitrates, ClockController, ControllerSummary, DdaInstance, DdaInstanceFile,
    EpisodeLog, RunRecord,
};
use edgemarket::report::{ChartSpec, Table};
use edgemarket::RngStream;

use crate::output::{RunArtifacts, Writer};
use crate::{read_json, CliError, Loaded};

const RUN_COLUMNS: [&str; 6] = [
    "controller",
    "instance",
    "welfare",
    "oracle_welfare",
    "rounds",
    "messages",
];
const SUMMARY_COLUMNS: [&str; 6] = [
    "controller",
    "instances",
    "mean_welfare",
    "mean_welfare_ratio",
    "mean_rounds",
    "mean_messages",
];

struct Trained {
    name: String,
    controller: ClockController,
}

/// Builds every configured controller. Learned ones are loaded from their
/// Q-table file or trained on the configured bitrate mix.
fn controllers(
    cfg: &DdaConfig,
    seed: u64,
    loaded: &Loaded,
) -> Result<(Vec<(String, ClockController)>, Vec<Trained>), CliError> {
    let mut built = Vec::new();
    let mut trained = Vec::new();
    for c in &cfg.controllers {
        let controller = match c {
            ControllerConfig::Learned { name, train, qtable } => match qtable {
                Some(path) => {
                    let controller: ClockController = read_json(&loaded.resolve(path))?;
                    if !matches!(controller, ClockController::Learned(_)) {
                        return Err(CliError::Config(format!(
                            "invalid `qtable`: {path} is not a learned controller"
                        )));
                    }
                    controller.validate()?;
                    controller
                }
                None => {
                    let (controller, _) = train_learned(cfg, seed, name, train)?;
                    trained.push(Trained {
                        name: name.clone(),
                        controller: controller.clone(),
                    });
                    controller
                }
            },
            other => other.build_static(seed)?.expect("static controller kinds"),
        };
        built.push((c.name().to_string(), controller));
    }
    Ok((built, trained))
}

fn train_learned(
    cfg: &DdaConfig,
    seed: u64,
    name: &str,
    train: &edgemarket::dda::TrainConfig,
) -> Result<(ClockController, Vec<EpisodeLog>), CliError> {
    let rng = RngStream::new(seed, format!("dda/train/{name}"));
    Ok(train_on_bitrates(&cfg.generator, &cfg.bitrates, train, &rng)?)
}

fn write_qtables(out: &mut Writer, trained: &[Trained]) -> Result<(), CliError> {
    for t in trained {
        out.json(&format!("qtable_{}.json", t.name), "dda.qtable", &t.controller)?;
    }
    Ok(())
}

fn explicit_instances(cfg: &DdaConfig, loaded: &Loaded) -> Result<Vec<DdaInstance>, CliError> {
    let mut out = Vec::new();
    for inst in &cfg.instances {
        out.push(inst.build()?);
    }
    for path in &cfg.instance_files {
        let resolved = loaded.resolve(path);
        let file: DdaInstanceFile = read_json(&resolved)?;
        out.push(
            file.build()
                .map_err(|e| CliError::Config(format!("{}: {e}", resolved.display())))?,
        );
    }
    Ok(out)
}

fn run_row(r: &RunRecord) -> Vec<edgemarket::report::Cell> {
    vec![
        r.controller.as_str().into(),
        r.instance.into(),
        r.welfare.into(),
        r.oracle_welfare.into(),
        r.rounds.into(),
        r.messages.into(),
    ]
}

fn summary_row(s: &ControllerSummary) -> Vec<edgemarket::report::Cell> {
    vec![
        s.controller.as_str().into(),
        s.instances.into(),
        s.mean_welfare.into(),
        s.mean_welfare_ratio.into(),
        s.mean_rounds.into(),
        s.mean_messages.into(),
    ]
}

pub(crate) fn run(cfg: &DdaConfig, seed: u64, loaded: &Loaded, mut out: Writer) -> Result<RunArtifacts, CliError> {
    let mut instances = explicit_instances(cfg, loaded)?;
    if instances.is_empty() {
        instances = cfg
            .generator
            .generate_many(cfg.count, &RngStream::new(seed, "dda/instances"))?;
    }
    let (controllers, trained) = controllers(cfg, seed, loaded)?;
    let cmp = compare_controllers(&instances, &controllers)?;

    let mut runs = Table::new(&RUN_COLUMNS);
    for r in &cmp.runs {
        runs.push(run_row(r));
    }
    let mut summary = Table::new(&SUMMARY_COLUMNS);
    for s in &cmp.summaries {
        summary.push(summary_row(s));
    }
    out.csv("results.csv", "dda.results", &runs)?;
    write_qtables(&mut out, &trained)?;
    out.chart(
        "welfare_ratio.svg",
        &summary,
        &ChartSpec::bar(
            "Mean welfare ratio",
            "controller",
            "mean_welfare_ratio",
            Some("controller"),
        ),
    )?;
    out.chart(
        "messages.svg",
        &summary,
        &ChartSpec::bar("Mean messages", "controller", "mean_messages", Some("controller")),
    )?;
    out.finish(summary)
}

pub(crate) fn compare(cfg: &DdaConfig, seed: u64, loaded: &Loaded, mut out: Writer) -> Result<RunArtifacts, CliError> {
    let (controllers, trained) = controllers(cfg, seed, loaded)?;

    let mut run_cols = vec!["bitrate"];
    run_cols.extend(RUN_COLUMNS);
    let mut runs = Table::new(&run_cols);
    let mut sum_cols = vec!["bitrate"];
    sum_cols.extend(SUMMARY_COLUMNS);
    sum_cols.extend(["welfare_vs_baseline", "rounds_vs_baseline", "messages_vs_baseline"]);
    let mut summary = Table::new(&sum_cols);

    for &bitrate in &cfg.bitrates {
        let instances = cfg
            .generator
            .at_bitrate(bitrate)
            .generate_many(cfg.count, &RngStream::new(seed, format!("dda/compare/{bitrate}")))?;
        let cmp = compare_controllers(&instances, &controllers)?;
        for r in &cmp.runs {
            let mut row = vec![bitrate.into()];
            row.extend(run_row(r));
            runs.push(row);
        }
        // the first configured controller is the reference
        let base = &cmp.summaries[0];
        for s in &cmp.summaries {
            let mut row = vec![bitrate.into()];
            row.extend(summary_row(s));
            row.push(ratio(s.mean_welfare, base.mean_welfare).into());
            row.push(ratio(s.mean_rounds, base.mean_rounds).into());
            row.push(ratio(s.mean_messages, base.mean_messages).into());
            summary.push(row);
        }
    }
    out.csv("runs.csv", "dda.compare.runs", &runs)?;
    write_qtables(&mut out, &trained)?;
    out.chart(
        "compare_welfare.svg",
        &summary,
        &ChartSpec::line(
            "Welfare ratio vs bitrate",
            "bitrate",
            "mean_welfare_ratio",
            Some("controller"),
        ),
    )?;
    out.chart(
        "compare_messages.svg",
        &summary,
        &ChartSpec::line("Messages vs bitrate", "bitrate", "mean_messages", Some("controller")),
    )?;
    out.finish(summary)
}

fn ratio(x: f64, base: f64) -> f64 {
    if base == 0.0 {
        if x == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        x / base
    }
}

const BLOCK: usize = 100;

pub(crate) fn train(cfg: &DdaConfig, seed: u64, _loaded: &Loaded, mut out: Writer) -> Result<RunArtifacts, CliError> {
    let mut summary = Table::new(&["controller", "episodes", "final_mean_reward", "final_mean_rounds"]);
    let mut any = false;
    for c in &cfg.controllers {
        let ControllerConfig::Learned { name, train, .. } = c else {
            continue;
        };
        any = true;
        let (controller, log) = train_learned(cfg, seed, name, train)?;

        let mut episodes = Table::new(&["episode", "reward", "welfare", "rounds"]);
        for e in &log {
            episodes.push(vec![
                e.episode.into(),
                e.reward.into(),
                e.welfare.into(),
                e.rounds.into(),
            ]);
        }
        let mut blocks = Table::new(&["episode", "mean_reward", "mean_rounds"]);
        for chunk in log.chunks(BLOCK) {
            let n = chunk.len() as f64;
            blocks.push(vec![
                chunk.last().expect("non-empty chunk").episode.into(),
                (chunk.iter().map(|e| e.reward).sum::<f64>() / n).into(),
                (chunk.iter().map(|e| e.rounds as f64).sum::<f64>() / n).into(),
            ]);
        }
        out.csv(&format!("training_{name}.csv"), "dda.training", &episodes)?;
        out.csv(&format!("training_{name}_blocks.csv"), "dda.training.blocks", &blocks)?;
        out.json(&format!("qtable_{name}.json"), "dda.qtable", &controller)?;
        out.chart(
            &format!("training_{name}.svg"),
            &blocks,
            &ChartSpec::line(&format!("Training reward of {name}"), "episode", "mean_reward", None),
        )?;

        let tail = &log[log.len() - (log.len() / 10).max(1)..];
        let n = tail.len() as f64;
        summary.push(vec![
            name.as_str().into(),
            log.len().into(),
            (tail.iter().map(|e| e.reward).sum::<f64>() / n).into(),
            (tail.iter().map(|e| e.rounds as f64).sum::<f64>() / n).into(),
        ]);
    }
    if !any {
        return Err(CliError::Config(
            "invalid `controllers`: `dda train` needs at least one learned controller".into(),
        ));
    }
    out.finish(summary)
}
