//! Exact two-stage solver and the expected-value / historical-mean baselines.

use super::model::{evaluate_plan, CostReport, DemandModel, ReservationPlan, ResourceType};
use super::SipError;

/// Relative tolerance used to call two costs equal.
const COST_TIE: f64 = 1e-9;

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= COST_TIE * (1.0 + a.abs().max(b.abs()))
}

/// `p_res x + p_od E[max(0, d - x)]` for one resource.
pub fn resource_cost(resource: &ResourceType, marginal: &[(u64, f64)], x: u64) -> f64 {
    let recourse: f64 = marginal.iter().map(|&(d, p)| p * d.saturating_sub(x) as f64).sum();
    resource.price_reserved * x as f64 + resource.price_on_demand * recourse
}

/// Per-resource cost for every `x` in `0..=max demand`.
pub fn cost_curve(resource: &ResourceType, marginal: &[(u64, f64)]) -> Vec<f64> {
    let max = marginal.iter().map(|m| m.0).max().unwrap_or(0);
    (0..=max).map(|x| resource_cost(resource, marginal, x)).collect()
}

/// Smallest minimizer of a cost curve, treating near-equal costs as ties.
pub fn curve_argmin(curve: &[f64]) -> u64 {
    let min = curve.iter().cloned().fold(f64::INFINITY, f64::min);
    curve.iter().position(|&c| ties(c, min) || c <= min).unwrap_or(0) as u64
}

/// Smallest `x` with `p_od P(d > x) <= p_res`: the first point where one more
/// reserved unit stops paying for itself.
pub fn newsvendor_quantile(resource: &ResourceType, marginal: &[(u64, f64)]) -> u64 {
    let mut sorted = marginal.to_vec();
    sorted.sort_by_key(|m| m.0);
    let mut tail: f64 = sorted.iter().map(|m| m.1).sum();
    let mut x = 0u64;
    let mut i = 0;
    loop {
        while i < sorted.len() && sorted[i].0 <= x {
            tail -= sorted[i].1;
            i += 1;
        }
        if i == sorted.len() {
            return x;
        }
        let gain = resource.price_on_demand * tail;
        if gain <= resource.price_reserved || ties(gain, resource.price_reserved) {
            return x;
        }
        // the tail is flat until the next demand atom
        x = sorted[i].0;
    }
}

fn check_inputs(demand: &DemandModel, resources: &[ResourceType], budget: Option<f64>) -> Result<(), SipError> {
    if demand.resources() != resources.len() {
        return Err(SipError::Dimension {
            expected: resources.len(),
            found: demand.resources(),
        });
    }
    for r in resources {
        r.validate()?;
    }
    if let Some(b) = budget {
        if !(b >= 0.0) {
            return Err(SipError::Infeasible(b));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct Partial {
    spend: f64,
    cost: f64,
    x: Vec<u64>,
}

/// Exactly optimal integer reservation.
///
/// Without a budget each resource is an independent newsvendor problem. With
/// a budget, a dynamic program over resources keeps every non-dominated
/// `(spend, cost)` partial plan; ties prefer the lexicographically smaller
/// reservation vector.
pub fn solve_sip(
    demand: &DemandModel,
    resources: &[ResourceType],
    budget: Option<f64>,
) -> Result<(ReservationPlan, CostReport), SipError> {
    check_inputs(demand, resources, budget)?;
    let plan = match budget {
        None => {
            let mut x = Vec::with_capacity(resources.len());
            for (r, res) in resources.iter().enumerate() {
                let marginal = demand.marginal(r);
                let q = newsvendor_quantile(res, &marginal);
                let curve = cost_curve(res, &marginal);
                let best = curve_argmin(&curve);
                if q != best && !ties(curve[q as usize], curve[best as usize]) {
                    return Err(SipError::Inconsistent(format!(
                        "resource `{}`: quantile {q} vs enumeration {best}",
                        res.id
                    )));
                }
                x.push(best);
            }
            ReservationPlan { x }
        }
        Some(b) => budgeted_plan(demand, resources, b),
    };
    let report = evaluate_plan(&plan, demand, resources)?;
    Ok((plan, report))
}

fn lex_le(a: &[u64], b: &[u64]) -> bool {
    a <= b
}

fn budgeted_plan(demand: &DemandModel, resources: &[ResourceType], budget: f64) -> ReservationPlan {
    let slack = 1e-9 * (1.0 + budget.abs());
    let mut frontier = vec![Partial {
        spend: 0.0,
        cost: 0.0,
        x: Vec::new(),
    }];
    for (r, res) in resources.iter().enumerate() {
        let curve = cost_curve(res, &demand.marginal(r));
        let mut next = Vec::new();
        for state in &frontier {
            for (x, &c) in curve.iter().enumerate() {
                let spend = state.spend + res.price_reserved * x as f64;
                if spend > budget + slack {
                    break;
                }
                let mut xs = state.x.clone();
                xs.push(x as u64);
                next.push(Partial {
                    spend,
                    cost: state.cost + c,
                    x: xs,
                });
            }
        }
        next.sort_by(|a, b| {
            a.spend
                .total_cmp(&b.spend)
                .then(a.cost.total_cmp(&b.cost))
                .then(a.x.cmp(&b.x))
        });
        let mut kept: Vec<Partial> = Vec::new();
        for cand in next {
            let dominated = kept.iter().any(|k| {
                k.spend <= cand.spend + slack
                    && (k.cost < cand.cost && !ties(k.cost, cand.cost)
                        || ties(k.cost, cand.cost) && lex_le(&k.x, &cand.x))
            });
            if !dominated {
                kept.push(cand);
            }
        }
        frontier = kept;
    }
    let best = frontier.iter().map(|p| p.cost).fold(f64::INFINITY, f64::min);
    let x = frontier
        .iter()
        .filter(|p| ties(p.cost, best))
        .map(|p| p.x.clone())
        .min()
        .unwrap_or_else(|| vec![0; resources.len()]);
    ReservationPlan { x }
}

/// `floor(v + 1/2)`, nudged so means like 7.4999999999 from summation round up.
pub fn round_half_up(v: f64) -> u64 {
    (v + 0.5 + 1e-9).floor().max(0.0) as u64
}

/// Trims a plan to a budget, cutting the priciest reserved resource first.
fn enforce_budget(mut plan: ReservationPlan, resources: &[ResourceType], budget: Option<f64>) -> ReservationPlan {
    let Some(b) = budget else { return plan };
    let slack = 1e-9 * (1.0 + b.abs());
    let mut order: Vec<usize> = (0..resources.len()).collect();
    order.sort_by(|&i, &j| resources[j].price_reserved.total_cmp(&resources[i].price_reserved));
    for r in order {
        while plan.spend(resources) > b + slack && plan.x[r] > 0 {
            plan.x[r] -= 1;
        }
    }
    plan
}

/// Plans for the mean demand and evaluates against the full scenario set.
pub fn solve_evf(
    demand: &DemandModel,
    resources: &[ResourceType],
    budget: Option<f64>,
) -> Result<(ReservationPlan, CostReport), SipError> {
    check_inputs(demand, resources, budget)?;
    let plan = ReservationPlan {
        x: (0..resources.len())
            .map(|r| round_half_up(demand.mean_demand(r)))
            .collect(),
    };
    let plan = enforce_budget(plan, resources, budget);
    let report = evaluate_plan(&plan, demand, resources)?;
    Ok((plan, report))
}

/// Plans for the sample mean of a demand history.
pub fn solve_average_historical(
    trace: &[Vec<u64>],
    demand: &DemandModel,
    resources: &[ResourceType],
    budget: Option<f64>,
) -> Result<(ReservationPlan, CostReport), SipError> {
    check_inputs(demand, resources, budget)?;
    if trace.is_empty() {
        return Err(SipError::EmptyTrace);
    }
    if let Some(row) = trace.iter().find(|row| row.len() != resources.len()) {
        return Err(SipError::Dimension {
            expected: resources.len(),
            found: row.len(),
        });
    }
    let n = trace.len() as f64;
    let plan = ReservationPlan {
        x: (0..resources.len())
            .map(|r| round_half_up(trace.iter().map(|row| row[r] as f64).sum::<f64>() / n))
            .collect(),
    };
    let plan = enforce_budget(plan, resources, budget);
    let report = evaluate_plan(&plan, demand, resources)?;
    Ok((plan, report))
}
