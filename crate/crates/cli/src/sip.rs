use std::path::Path;

use edgemarket::config::{validate_sip_file, SipConfig};
use edgemarket::report::{ChartSpec, Table};
use edgemarket::sip::{compare_schemes, solve_scheme, Scheme, SchemeRow, SipInstance, SipInstanceFile};
use edgemarket::RngStream;

use crate::output::{RunArtifacts, Writer};
use crate::{read_json, CliError, Loaded};

const COST_COLUMNS: [&str; 5] = ["instance", "scheme", "first_stage", "on_demand", "total"];

/// Charts show every instance only while the bar groups stay legible.
const MAX_CHARTED_INSTANCES: usize = 12;

fn instances(cfg: &SipConfig, seed: u64, loaded: &Loaded) -> Result<Vec<SipInstance>, CliError> {
    let rng = RngStream::new(seed, "sip/instances");
    let mut out = Vec::new();
    for (i, file) in cfg.instances.iter().enumerate() {
        out.push(file.build(&format!("inline-{i}"), &rng)?);
    }
    for path in &cfg.instance_files {
        let resolved = loaded.resolve(path);
        let file: SipInstanceFile = read_json(&resolved)?;
        let context = |e: String| CliError::Config(format!("{}: {e}", resolved.display()));
        validate_sip_file(&file).map_err(|e| context(e.to_string()))?;
        let stem = Path::new(path)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.clone());
        out.push(file.build(&stem, &rng).map_err(|e| context(e.to_string()))?);
    }
    if let Some(random) = &cfg.random {
        let rng = RngStream::new(seed, "sip");
        for i in 0..random.count {
            out.push(random.instance(i, &rng)?);
        }
    }
    if out.is_empty() {
        return Err(CliError::Config("invalid `instances`: nothing to solve".into()));
    }
    Ok(out)
}

fn cost_row(r: &SchemeRow) -> Vec<edgemarket::report::Cell> {
    vec![
        r.instance.as_str().into(),
        r.scheme.name().into(),
        r.first_stage.into(),
        r.on_demand.into(),
        r.total.into(),
    ]
}

fn plan_table(instances: &[SipInstance], schemes: &[Scheme]) -> Result<Table, CliError> {
    let mut plans = Table::new(&["instance", "scheme", "resource_id", "reserved"]);
    for inst in instances {
        for &scheme in schemes {
            let (plan, _) = solve_scheme(inst, scheme)?;
            for (r, x) in inst.resources.iter().zip(&plan.x) {
                plans.push(vec![
                    inst.id.as_str().into(),
                    scheme.name().into(),
                    r.id.as_str().into(),
                    (*x).into(),
                ]);
            }
        }
    }
    Ok(plans)
}

pub(crate) fn solve(cfg: &SipConfig, seed: u64, loaded: &Loaded, mut out: Writer) -> Result<RunArtifacts, CliError> {
    let instances = instances(cfg, seed, loaded)?;
    let mut costs = Table::new(&COST_COLUMNS);
    for inst in &instances {
        let (_, report) = solve_scheme(inst, Scheme::Sip)?;
        costs.push(cost_row(&SchemeRow {
            instance: inst.id.clone(),
            scheme: Scheme::Sip,
            first_stage: report.first_stage_cost,
            on_demand: report.expected_on_demand_cost,
            total: report.expected_total,
        }));
    }
    out.csv("costs.csv", "sip.results", &costs)?;
    out.csv("plans.csv", "sip.plans", &plan_table(&instances, &[Scheme::Sip])?)?;
    if instances.len() <= MAX_CHARTED_INSTANCES {
        out.chart(
            "costs.svg",
            &costs,
            &ChartSpec::bar("Expected total cost", "instance", "total", Some("scheme")),
        )?;
    }
    out.finish(costs)
}

pub(crate) fn compare(cfg: &SipConfig, seed: u64, loaded: &Loaded, mut out: Writer) -> Result<RunArtifacts, CliError> {
    let instances = instances(cfg, seed, loaded)?;
    let cmp = compare_schemes(&instances)?;

    let mut table = Table::new(&COST_COLUMNS);
    for r in cmp.rows.iter().chain(&cmp.aggregate) {
        table.push(cost_row(r));
    }
    out.csv("compare.csv", "sip.results", &table)?;
    out.csv("plans.csv", "sip.plans", &plan_table(&instances, &Scheme::ALL)?)?;

    // per baseline: instances where the stochastic plan cost more than it
    let mut summary = Table::new(&["scheme", "first_stage", "on_demand", "total", "sip_worse"]);
    for (k, agg) in cmp.aggregate.iter().enumerate() {
        let worse = cmp
            .rows
            .chunks(Scheme::ALL.len())
            .filter(|rows| rows[0].total > rows[k].total + 1e-9 * (1.0 + rows[k].total.abs()))
            .count();
        summary.push(vec![
            agg.scheme.name().into(),
            agg.first_stage.into(),
            agg.on_demand.into(),
            agg.total.into(),
            worse.into(),
        ]);
    }

    let mut chart = Table::new(&COST_COLUMNS);
    let charted = if instances.len() <= MAX_CHARTED_INSTANCES {
        cmp.rows.iter().chain(&cmp.aggregate).collect::<Vec<_>>()
    } else {
        cmp.aggregate.iter().collect()
    };
    for r in charted {
        chart.push(cost_row(r));
    }
    out.chart(
        "compare.svg",
        &chart,
        &ChartSpec::bar("Expected total cost per scheme", "instance", "total", Some("scheme")),
    )?;
    out.finish(summary)
}
