use edgemarket::sip::{
    cost_curve, evaluate_plan, newsvendor_quantile, sample_scenarios, solve_average_historical, solve_evf, solve_sip,
    DemandModel, DistributionSpec, Marginal, ReservationPlan, ResourceType, Scenario,
};
use edgemarket::RngStream;
use proptest::prelude::*;

/// Expected cost written out directly from the scenario list.
fn direct_cost(x: &[u64], scenarios: &[Scenario], resources: &[ResourceType]) -> f64 {
    let reserve: f64 = x.iter().zip(resources).map(|(&x, r)| r.price_reserved * x as f64).sum();
    let recourse: f64 = scenarios
        .iter()
        .map(|s| {
            s.probability
                * s.demand
                    .iter()
                    .zip(x)
                    .zip(resources)
                    .map(|((&d, &x), r)| r.price_on_demand * d.saturating_sub(x) as f64)
                    .sum::<f64>()
        })
        .sum();
    reserve + recourse
}

/// Cheapest feasible plan by trying every reservation vector up to the peak demand.
fn enumerate_best(scenarios: &[Scenario], resources: &[ResourceType], budget: Option<f64>) -> f64 {
    let peaks: Vec<u64> = (0..resources.len())
        .map(|r| scenarios.iter().map(|s| s.demand[r]).max().unwrap())
        .collect();
    let mut best = f64::INFINITY;
    let mut x = vec![0u64; resources.len()];
    loop {
        let spend: f64 = x.iter().zip(resources).map(|(&x, r)| r.price_reserved * x as f64).sum();
        if budget.map_or(true, |b| spend <= b + 1e-9) {
            best = best.min(direct_cost(&x, scenarios, resources));
        }
        let mut r = 0;
        loop {
            if r == x.len() {
                return best;
            }
            if x[r] < peaks[r] {
                x[r] += 1;
                break;
            }
            x[r] = 0;
            r += 1;
        }
    }
}

fn instance() -> impl Strategy<Value = (Vec<ResourceType>, Vec<Scenario>, Option<f64>)> {
    (1usize..=3, 1usize..=5).prop_flat_map(|(nr, ns)| {
        (
            prop::collection::vec((0.2f64..5.0, 1.0f64..4.0), nr),
            prop::collection::vec((prop::collection::vec(0u64..=30, nr), 0.05f64..1.0), ns),
            prop::option::of(0.0f64..120.0),
        )
            .prop_map(|(prices, raw, budget)| {
                let resources = prices
                    .iter()
                    .enumerate()
                    .map(|(i, &(p, m))| ResourceType::new(format!("r{i}"), p, p * m))
                    .collect();
                let total: f64 = raw.iter().map(|s| s.1).sum();
                let scenarios = raw
                    .into_iter()
                    .map(|(demand, w)| Scenario {
                        demand,
                        probability: w / total,
                    })
                    .collect();
                (resources, scenarios, budget)
            })
    })
}

fn tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn sip_matches_enumeration_and_respects_budget((resources, scenarios, budget) in instance()) {
        let model = DemandModel::new(scenarios.clone()).unwrap();
        let (plan, report) = solve_sip(&model, &resources, budget).unwrap();
        let best = enumerate_best(&scenarios, &resources, budget);
        prop_assert!(tie(report.expected_total, best), "{} vs {}", report.expected_total, best);
        if let Some(b) = budget {
            prop_assert!(plan.spend(&resources) <= b + 1e-9);
        }
        let (p, r) = solve_evf(&model, &resources, budget).unwrap();
        prop_assert!(report.expected_total <= r.expected_total + 1e-9);
        if let Some(b) = budget {
            prop_assert!(p.spend(&resources) <= b + 1e-9);
        }
        let trace: Vec<Vec<u64>> = scenarios.iter().map(|s| s.demand.clone()).collect();
        let (p, r) = solve_average_historical(&trace, &model, &resources, budget).unwrap();
        prop_assert!(report.expected_total <= r.expected_total + 1e-9);
        if let Some(b) = budget {
            prop_assert!(p.spend(&resources) <= b + 1e-9);
        }
    }

    #[test]
    fn recourse_identity((resources, scenarios, _) in instance(), xs in prop::collection::vec(0u64..=35, 3)) {
        let model = DemandModel::new(scenarios.clone()).unwrap();
        let plan = ReservationPlan { x: xs[..resources.len()].to_vec() };
        let report = evaluate_plan(&plan, &model, &resources).unwrap();
        prop_assert!(tie(report.expected_total, direct_cost(&plan.x, &scenarios, &resources)));
        prop_assert!(tie(report.expected_total, report.first_stage_cost + report.expected_on_demand_cost));
        for (s, sc) in scenarios.iter().zip(&report.scenarios) {
            for r in 0..resources.len() {
                // reserved plus bought on demand covers demand exactly when short
                prop_assert_eq!(sc.on_demand_units[r], s.demand[r].saturating_sub(plan.x[r]));
                prop_assert!(plan.x[r] + sc.on_demand_units[r] >= s.demand[r]);
            }
        }
    }

    #[test]
    fn per_resource_cost_is_discretely_convex((resources, scenarios, _) in instance()) {
        let model = DemandModel::new(scenarios).unwrap();
        for (r, res) in resources.iter().enumerate() {
            let curve = cost_curve(res, &model.marginal(r));
            for w in curve.windows(3) {
                prop_assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-9);
            }
        }
    }

    #[test]
    fn newsvendor_agrees_with_enumeration(
        p in 0.1f64..5.0,
        markup in 1.0f64..5.0,
        support in prop::collection::vec((0u64..=40, 0.01f64..1.0), 1..8),
    ) {
        let res = ResourceType::new("r", p, p * markup);
        let total: f64 = support.iter().map(|s| s.1).sum();
        let marginal: Vec<(u64, f64)> = support.iter().map(|&(d, w)| (d, w / total)).collect();
        let cost = |x: u64| p * x as f64 + marginal.iter().map(|&(d, q)| q * p * markup * d.saturating_sub(x) as f64).sum::<f64>();
        let peak = marginal.iter().map(|m| m.0).max().unwrap();
        let best = (0..=peak).map(cost).fold(f64::INFINITY, f64::min);
        let q = newsvendor_quantile(&res, &marginal);
        prop_assert!(tie(cost(q), best), "x={} cost {} best {}", q, cost(q), best);
    }
}

#[test]
fn uniform_integer_sample_mean() {
    let spec = DistributionSpec::Independent {
        marginals: vec![
            Marginal::UniformInteger { low: 0, high: 30 },
            Marginal::UniformInteger { low: 5, high: 9 },
        ],
    };
    let model = sample_scenarios(&spec, 20_000, &mut RngStream::new(77, "mean")).unwrap();
    assert!((model.mean_demand(0) - 15.0).abs() < 0.3, "{}", model.mean_demand(0));
    assert!((model.mean_demand(1) - 7.0).abs() < 0.05, "{}", model.mean_demand(1));
    for s in model.scenarios() {
        assert!(s.demand[0] <= 30 && (5..=9).contains(&s.demand[1]));
    }
}

#[test]
fn two_point_instance_totals() {
    let resources = vec![ResourceType::new("vm", 1.0, 3.0)];
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
    // reserving 20 costs 20; reserving 15 costs 15 + 0.5 * 3 * 5 = 22.5
    assert_eq!(solve_sip(&model, &resources, None).unwrap().1.expected_total, 20.0);
    assert_eq!(solve_evf(&model, &resources, None).unwrap().1.expected_total, 22.5);
    let trace = vec![vec![10], vec![20]];
    assert_eq!(
        solve_average_historical(&trace, &model, &resources, None)
            .unwrap()
            .1
            .expected_total,
        22.5
    );
}
