use serde::{Deserialize, Serialize};

use super::SipError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceType {
    pub id: String,
    /// Per-unit price when reserved ahead of demand.
    pub price_reserved: f64,
    /// Per-unit price when bought after demand is revealed.
    pub price_on_demand: f64,
}

impl ResourceType {
    pub fn new(id: impl Into<String>, price_reserved: f64, price_on_demand: f64) -> Self {
        Self {
            id: id.into(),
            price_reserved,
            price_on_demand,
        }
    }

    pub fn validate(&self) -> Result<(), SipError> {
        for (field, p) in [
            ("price_reserved", self.price_reserved),
            ("price_on_demand", self.price_on_demand),
        ] {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(SipError::invalid(field, format!("resource `{}` has {p}", self.id)));
            }
        }
        Ok(())
    }

    /// Reserving is never cheaper than buying on demand.
    pub fn reservation_dominated(&self) -> bool {
        self.price_reserved >= self.price_on_demand
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub demand: Vec<u64>,
    pub probability: f64,
}

/// Discrete demand distribution over resource vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemandModel {
    scenarios: Vec<Scenario>,
}

impl DemandModel {
    pub fn new(scenarios: Vec<Scenario>) -> Result<Self, SipError> {
        let first = scenarios.first().ok_or(SipError::NoScenarios)?;
        let dim = first.demand.len();
        for s in &scenarios {
            if s.demand.len() != dim {
                return Err(SipError::Dimension {
                    expected: dim,
                    found: s.demand.len(),
                });
            }
            if !(s.probability > 0.0 && s.probability.is_finite()) {
                return Err(SipError::invalid(
                    "probability",
                    format!("{} is not positive", s.probability),
                ));
            }
        }
        let total: f64 = scenarios.iter().map(|s| s.probability).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(SipError::invalid(
                "probability",
                format!("probabilities sum to {total}"),
            ));
        }
        Ok(Self { scenarios })
    }

    /// Equiprobable scenarios, one per demand vector.
    pub fn uniform(demands: Vec<Vec<u64>>) -> Result<Self, SipError> {
        let n = demands.len();
        Self::new(
            demands
                .into_iter()
                .map(|demand| Scenario {
                    demand,
                    probability: 1.0 / n as f64,
                })
                .collect(),
        )
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn resources(&self) -> usize {
        self.scenarios[0].demand.len()
    }

    pub fn max_demand(&self, r: usize) -> u64 {
        self.scenarios.iter().map(|s| s.demand[r]).max().unwrap_or(0)
    }

    pub fn mean_demand(&self, r: usize) -> f64 {
        self.scenarios.iter().map(|s| s.probability * s.demand[r] as f64).sum()
    }

    /// `(demand, probability)` pairs for one resource.
    pub fn marginal(&self, r: usize) -> Vec<(u64, f64)> {
        self.scenarios.iter().map(|s| (s.demand[r], s.probability)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReservationPlan {
    pub x: Vec<u64>,
}

impl ReservationPlan {
    pub fn spend(&self, resources: &[ResourceType]) -> f64 {
        self.x
            .iter()
            .zip(resources)
            .map(|(&x, r)| r.price_reserved * x as f64)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioCost {
    /// `max(0, d - x)` per resource.
    pub on_demand_units: Vec<u64>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub first_stage_cost: f64,
    pub expected_on_demand_cost: f64,
    pub expected_total: f64,
    pub scenarios: Vec<ScenarioCost>,
    /// (scenario, resource) cells where reservation exceeded demand.
    pub over_provisioned: usize,
    /// (scenario, resource) cells that needed on-demand units.
    pub under_provisioned: usize,
}

/// Expected cost of a plan: reservation spend plus probability-weighted
/// on-demand recourse.
pub fn evaluate_plan(
    plan: &ReservationPlan,
    demand: &DemandModel,
    resources: &[ResourceType],
) -> Result<CostReport, SipError> {
    if plan.x.len() != resources.len() {
        return Err(SipError::Dimension {
            expected: resources.len(),
            found: plan.x.len(),
        });
    }
    if demand.resources() != resources.len() {
        return Err(SipError::Dimension {
            expected: resources.len(),
            found: demand.resources(),
        });
    }
    let first_stage_cost = plan.spend(resources);
    let mut expected_on_demand_cost = 0.0;
    let mut over_provisioned = 0;
    let mut under_provisioned = 0;
    let mut scenarios = Vec::with_capacity(demand.scenarios().len());
    for s in demand.scenarios() {
        let on_demand_units: Vec<u64> = s
            .demand
            .iter()
            .zip(&plan.x)
            .map(|(&d, &x)| d.saturating_sub(x))
            .collect();
        over_provisioned += s.demand.iter().zip(&plan.x).filter(|(&d, &x)| x > d).count();
        under_provisioned += on_demand_units.iter().filter(|&&y| y > 0).count();
        let cost: f64 = on_demand_units
            .iter()
            .zip(resources)
            .map(|(&y, r)| r.price_on_demand * y as f64)
            .sum();
        expected_on_demand_cost += s.probability * cost;
        scenarios.push(ScenarioCost { on_demand_units, cost });
    }
    Ok(CostReport {
        first_stage_cost,
        expected_on_demand_cost,
        expected_total: first_stage_cost + expected_on_demand_cost,
        scenarios,
        over_provisioned,
        under_provisioned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> (DemandModel, Vec<ResourceType>) {
        let model = DemandModel::new(vec![
            Scenario {
                demand: vec![10],
                probability: 0.5,
            },
            Scenario {
                demand: vec![20],
                probability: 0.5,
            },
        ])
        .unwrap();
        (model, vec![ResourceType::new("r", 1.0, 3.0)])
    }

    #[test]
    fn hand_evaluated_plan() {
        let (model, res) = two_point();
        let report = evaluate_plan(&ReservationPlan { x: vec![15] }, &model, &res).unwrap();
        assert_eq!(report.first_stage_cost, 15.0);
        assert_eq!(report.expected_on_demand_cost, 7.5);
        assert_eq!(report.expected_total, 22.5);
        assert_eq!(report.scenarios[0].on_demand_units, vec![0]);
        assert_eq!(report.scenarios[1].on_demand_units, vec![5]);
        assert_eq!((report.over_provisioned, report.under_provisioned), (1, 1));
    }

    #[test]
    fn zero_and_full_reservation() {
        let (model, res) = two_point();
        let none = evaluate_plan(&ReservationPlan { x: vec![0] }, &model, &res).unwrap();
        assert_eq!(none.expected_total, 3.0 * 15.0);
        let full = evaluate_plan(&ReservationPlan { x: vec![20] }, &model, &res).unwrap();
        assert_eq!(full.expected_on_demand_cost, 0.0);
    }

    #[test]
    fn dimension_and_probability_checks() {
        let (model, res) = two_point();
        assert!(matches!(
            evaluate_plan(&ReservationPlan { x: vec![1, 2] }, &model, &res),
            Err(SipError::Dimension { .. })
        ));
        let err = DemandModel::new(vec![
            Scenario {
                demand: vec![1],
                probability: 0.5,
            },
            Scenario {
                demand: vec![2],
                probability: 0.6,
            },
        ])
        .unwrap_err();
        assert!(err.to_string().contains("sum to 1.1"), "{err}");
        assert_eq!(DemandModel::new(vec![]).unwrap_err(), SipError::NoScenarios);
    }
}
