use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{CostReport, DemandModel, ReservationPlan, ResourceType, Scenario};
use super::sample::{sample_scenarios, DistributionSpec};
use super::solve::{solve_average_historical, solve_evf, solve_sip};
use super::SipError;
use crate::rng::RngStream;

/// A fully resolved reservation problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SipInstance {
    pub id: String,
    pub resources: Vec<ResourceType>,
    pub demand: DemandModel,
    /// Demand history used by the historical-mean baseline.
    pub trace: Vec<Vec<u64>>,
    pub budget: Option<f64>,
}

/// On-disk instance: explicit scenarios or a distribution to sample from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SipInstanceFile {
    #[serde(default)]
    pub id: Option<String>,
    pub resources: Vec<ResourceType>,
    #[serde(default)]
    pub scenarios: Option<Vec<Scenario>>,
    #[serde(default)]
    pub distribution: Option<DistributionSpec>,
    /// Scenario count when sampling from `distribution`.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub trace: Option<Vec<Vec<u64>>>,
    /// History length drawn from the scenario model when `trace` is absent.
    #[serde(default = "default_trace_len")]
    pub trace_len: usize,
    #[serde(default)]
    pub budget: Option<f64>,
}

fn default_samples() -> usize {
    50
}

fn default_trace_len() -> usize {
    30
}

/// Draws `len` demand vectors from a scenario model.
pub fn draw_history(model: &DemandModel, len: usize, rng: &mut RngStream) -> Vec<Vec<u64>> {
    (0..len)
        .map(|_| {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for s in model.scenarios() {
                acc += s.probability;
                if u < acc {
                    return s.demand.clone();
                }
            }
            model.scenarios().last().expect("non-empty").demand.clone()
        })
        .collect()
}

impl SipInstanceFile {
    pub fn build(&self, default_id: &str, rng: &RngStream) -> Result<SipInstance, SipError> {
        let id = self.id.clone().unwrap_or_else(|| default_id.to_string());
        if self.resources.is_empty() {
            return Err(SipError::invalid("resources", "at least one resource is required"));
        }
        for r in &self.resources {
            r.validate()?;
        }
        let demand = match (&self.scenarios, &self.distribution) {
            (Some(s), None) => DemandModel::new(s.clone())?,
            (None, Some(d)) => sample_scenarios(d, self.samples, &mut rng.substream(&format!("{id}/scenarios")))?,
            _ => {
                return Err(SipError::invalid(
                    "scenarios",
                    "exactly one of `scenarios` or `distribution` must be given",
                ))
            }
        };
        if demand.resources() != self.resources.len() {
            return Err(SipError::Dimension {
                expected: self.resources.len(),
                found: demand.resources(),
            });
        }
        let trace = match &self.trace {
            Some(t) if t.is_empty() => return Err(SipError::EmptyTrace),
            Some(t) => t.clone(),
            None => {
                if self.trace_len == 0 {
                    return Err(SipError::EmptyTrace);
                }
                draw_history(&demand, self.trace_len, &mut rng.substream(&format!("{id}/trace")))
            }
        };
        if let Some(b) = self.budget {
            if !(b >= 0.0) {
                return Err(SipError::Infeasible(b));
            }
        }
        Ok(SipInstance {
            id,
            resources: self.resources.clone(),
            demand,
            trace,
            budget: self.budget,
        })
    }
}

/// Recipe for seeded random instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomSipSpec {
    pub count: usize,
    pub resources: [usize; 2],
    pub scenarios: [usize; 2],
    pub max_demand: u64,
    pub price_reserved: [f64; 2],
    /// On-demand price as a multiple of the reserved price.
    pub markup: [f64; 2],
    pub trace_len: [usize; 2],
    /// Probability that an instance carries a budget.
    pub budget_probability: f64,
}

impl Default for RandomSipSpec {
    fn default() -> Self {
        Self {
            count: 100,
            resources: [1, 3],
            scenarios: [1, 6],
            max_demand: 30,
            price_reserved: [0.5, 5.0],
            markup: [1.0, 4.0],
            trace_len: [1, 20],
            budget_probability: 0.3,
        }
    }
}

impl RandomSipSpec {
    pub fn validate(&self) -> Result<(), SipError> {
        let bad = |f: &str| Err(SipError::invalid(f, "range is empty or out of bounds"));
        if self.resources[0] == 0 || self.resources[0] > self.resources[1] {
            return bad("resources");
        }
        if self.scenarios[0] == 0 || self.scenarios[0] > self.scenarios[1] {
            return bad("scenarios");
        }
        if self.trace_len[0] == 0 || self.trace_len[0] > self.trace_len[1] {
            return bad("trace_len");
        }
        if !(self.price_reserved[0] >= 0.0 && self.price_reserved[0] <= self.price_reserved[1]) {
            return bad("price_reserved");
        }
        if !(self.markup[0] >= 0.0 && self.markup[0] <= self.markup[1]) {
            return bad("markup");
        }
        if !(0.0..=1.0).contains(&self.budget_probability) {
            return bad("budget_probability");
        }
        Ok(())
    }

    /// Instance `index`, drawn from its own substream.
    pub fn instance(&self, index: usize, rng: &RngStream) -> Result<SipInstance, SipError> {
        self.validate()?;
        let mut rng = rng.substream(&format!("random/{index}"));
        let nr = rng.gen_range(self.resources[0]..=self.resources[1]);
        let ns = rng.gen_range(self.scenarios[0]..=self.scenarios[1]);
        let resources: Vec<ResourceType> = (0..nr)
            .map(|r| {
                let p = rng.gen_range(self.price_reserved[0]..=self.price_reserved[1]);
                let m = rng.gen_range(self.markup[0]..=self.markup[1]);
                ResourceType::new(format!("r{r}"), p, p * m)
            })
            .collect();
        let weights: Vec<f64> = (0..ns).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let mut scenarios: Vec<Scenario> = weights
            .iter()
            .map(|w| Scenario {
                demand: (0..nr).map(|_| rng.gen_range(0..=self.max_demand)).collect(),
                probability: w / total,
            })
            .collect();
        // absorb summation round-off in the last scenario
        let head: f64 = scenarios[..ns - 1].iter().map(|s| s.probability).sum();
        scenarios[ns - 1].probability = 1.0 - head;
        let demand = DemandModel::new(scenarios)?;
        let trace_len = rng.gen_range(self.trace_len[0]..=self.trace_len[1]);
        let trace = draw_history(&demand, trace_len, &mut rng);
        let budget = if rng.gen::<f64>() < self.budget_probability {
            let full: f64 = resources
                .iter()
                .enumerate()
                .map(|(r, res)| res.price_reserved * demand.max_demand(r) as f64)
                .sum();
            Some((rng.gen_range(0.0..=1.0) * full * 100.0).round() / 100.0)
        } else {
            None
        };
        Ok(SipInstance {
            id: format!("random-{index}"),
            resources,
            demand,
            trace,
            budget,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Sip,
    Evf,
    Avg,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Sip, Scheme::Evf, Scheme::Avg];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Sip => "sip",
            Scheme::Evf => "evf",
            Scheme::Avg => "avg",
        }
    }
}

pub fn solve_scheme(instance: &SipInstance, scheme: Scheme) -> Result<(ReservationPlan, CostReport), SipError> {
    match scheme {
        Scheme::Sip => solve_sip(&instance.demand, &instance.resources, instance.budget),
        Scheme::Evf => solve_evf(&instance.demand, &instance.resources, instance.budget),
        Scheme::Avg => {
            solve_average_historical(&instance.trace, &instance.demand, &instance.resources, instance.budget)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeRow {
    pub instance: String,
    pub scheme: Scheme,
    pub first_stage: f64,
    pub on_demand: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeComparison {
    /// Three rows per instance, in instance order then `sip, evf, avg`.
    pub rows: Vec<SchemeRow>,
    /// Per-scheme means over all instances, instance id `mean`.
    pub aggregate: Vec<SchemeRow>,
    /// Instances where SIP cost more than a baseline.
    pub violations: Vec<String>,
}

/// Solves every instance with all three schemes.
pub fn compare_schemes(instances: &[SipInstance]) -> Result<SchemeComparison, SipError> {
    if instances.is_empty() {
        return Err(SipError::invalid("instances", "at least one instance is required"));
    }
    let per_instance: Vec<Vec<SchemeRow>> = instances
        .par_iter()
        .map(|inst| {
            Scheme::ALL
                .iter()
                .map(|&scheme| {
                    let (_, report) = solve_scheme(inst, scheme)?;
                    Ok(SchemeRow {
                        instance: inst.id.clone(),
                        scheme,
                        first_stage: report.first_stage_cost,
                        on_demand: report.expected_on_demand_cost,
                        total: report.expected_total,
                    })
                })
                .collect::<Result<Vec<_>, SipError>>()
        })
        .collect::<Result<_, _>>()?;

    let violations = per_instance
        .iter()
        .filter(|rows| {
            let sip = rows[0].total;
            rows[1..].iter().any(|b| sip > b.total + 1e-9 * (1.0 + b.total.abs()))
        })
        .map(|rows| rows[0].instance.clone())
        .collect();
    let n = instances.len() as f64;
    let aggregate = Scheme::ALL
        .iter()
        .enumerate()
        .map(|(k, &scheme)| SchemeRow {
            instance: "mean".to_string(),
            scheme,
            first_stage: per_instance.iter().map(|r| r[k].first_stage).sum::<f64>() / n,
            on_demand: per_instance.iter().map(|r| r[k].on_demand).sum::<f64>() / n,
            total: per_instance.iter().map(|r| r[k].total).sum::<f64>() / n,
        })
        .collect();
    Ok(SchemeComparison {
        rows: per_instance.into_iter().flatten().collect(),
        aggregate,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> SipInstance {
        SipInstance {
            id: "two-point".into(),
            resources: vec![ResourceType::new("r", 1.0, 3.0)],
            demand: DemandModel::uniform(vec![vec![10], vec![20]]).unwrap(),
            trace: vec![vec![10], vec![20], vec![10], vec![20]],
            budget: None,
        }
    }

    #[test]
    fn two_point_totals() {
        let cmp = compare_schemes(&[two_point()]).unwrap();
        let totals: Vec<f64> = cmp.rows.iter().map(|r| r.total).collect();
        assert_eq!(totals, vec![20.0, 22.5, 22.5]);
        assert!(cmp.violations.is_empty());
        assert_eq!(cmp.aggregate[0].total, 20.0);
    }

    #[test]
    fn single_instance_rows_match_solvers() {
        let inst = RandomSipSpec::default().instance(3, &RngStream::new(1, "sip")).unwrap();
        let cmp = compare_schemes(std::slice::from_ref(&inst)).unwrap();
        for (row, scheme) in cmp.rows.iter().zip(Scheme::ALL) {
            let (_, report) = solve_scheme(&inst, scheme).unwrap();
            assert_eq!(row.total, report.expected_total);
            assert_eq!(row.on_demand, report.expected_on_demand_cost);
        }
    }

    #[test]
    fn file_needs_one_demand_source() {
        let file: SipInstanceFile = serde_json::from_str(
            r#"{"resources":[{"id":"r","price_reserved":1,"price_on_demand":3}],
                "distribution":{"kind":"independent","marginals":[{"kind":"uniform-integer","low":10,"high":20}]},
                "samples":5}"#,
        )
        .unwrap();
        let rng = RngStream::new(1, "sip");
        let inst = file.build("i0", &rng).unwrap();
        assert_eq!(inst.demand.scenarios().len(), 5);
        assert_eq!(inst.trace.len(), 30);
        assert_eq!(inst, file.build("i0", &rng).unwrap());
        let neither = SipInstanceFile {
            distribution: None,
            ..file
        };
        assert!(neither.build("i0", &rng).is_err());
    }
}
