use edgemarket::evo::{Integration, PopulationState, SensingGame, SspPopulation, VspRegion};
use proptest::prelude::*;

fn region(id: usize, reward: f64) -> VspRegion {
    VspRegion {
        id: format!("v{id}"),
        reward_pool: reward,
        sync_coeff: 0.1,
    }
}

fn population(id: usize, size: u64, capability: f64, cost: Vec<f64>) -> SspPopulation {
    SspPopulation {
        id: format!("p{id}"),
        size,
        capability,
        cost,
        learning_rate: 1.0,
    }
}

fn normalized(raw: &[f64]) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

fn game_strategy() -> impl Strategy<Value = (SensingGame, PopulationState)> {
    (1usize..=3, 2usize..=4).prop_flat_map(|(np, nr)| {
        (
            prop::collection::vec(1.0f64..100.0, nr),
            prop::collection::vec((1u64..50, 0.5f64..2.0, prop::collection::vec(0.0f64..5.0, nr)), np),
            prop::collection::vec(prop::collection::vec(0.05f64..1.0, nr), np),
        )
            .prop_map(move |(rewards, pops, init)| {
                let regions = rewards.iter().enumerate().map(|(i, &r)| region(i, r)).collect();
                let populations = pops
                    .into_iter()
                    .enumerate()
                    .map(|(i, (n, w, c))| population(i, n, w, c))
                    .collect();
                let game = SensingGame::new(regions, populations).unwrap();
                let state = PopulationState::new(init.iter().map(|r| normalized(r)).collect()).unwrap();
                (game, state)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trajectories_stay_on_the_simplex((game, init) in game_strategy()) {
        let cfg = Integration { step: 0.01, tol: 1e-9, max_steps: 3_000, record_every: 25 };
        let traj = game.evolve(&init, &cfg).unwrap();
        prop_assert!(traj.max_drift <= 1e-9);
        for point in &traj.points {
            for row in point.state.shares() {
                prop_assert!(row.iter().all(|&x| x >= 0.0));
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn zero_cost_equilibrium_is_reward_proportional(rewards in prop::collection::vec(10.0f64..100.0, 2..=4)) {
        let regions: Vec<_> = rewards.iter().enumerate().map(|(i, &r)| region(i, r)).collect();
        let game = SensingGame::new(regions, vec![population(0, 200, 1.0, vec![0.0; rewards.len()])]).unwrap();
        let init = PopulationState::uniform(1, rewards.len());
        let traj = game.evolve(&init, &Integration { tol: 1e-9, ..Integration::default() }).unwrap();
        prop_assert!(traj.converged);
        let total: f64 = rewards.iter().sum();
        for (v, r) in rewards.iter().enumerate() {
            prop_assert!((traj.final_state().share(0, v) - r / total).abs() < 1e-4);
        }
    }
}

fn two_region() -> SensingGame {
    SensingGame::new(
        vec![region(0, 100.0), region(1, 50.0)],
        vec![population(0, 10, 1.0, vec![0.0, 0.0])],
    )
    .unwrap()
}

#[test]
fn halving_the_step_barely_moves_the_equilibrium() {
    let games = [
        two_region(),
        SensingGame::new(
            vec![region(0, 80.0), region(1, 30.0), region(2, 45.0)],
            vec![
                population(0, 12, 1.0, vec![1.0, 0.5, 0.0]),
                population(1, 6, 2.0, vec![0.0, 2.0, 1.0]),
            ],
        )
        .unwrap(),
    ];
    for game in games {
        let init = PopulationState::uniform(game.populations().len(), game.regions().len());
        let coarse = game
            .evolve(
                &init,
                &Integration {
                    step: 0.02,
                    tol: 1e-9,
                    ..Integration::default()
                },
            )
            .unwrap();
        let fine = game
            .evolve(
                &init,
                &Integration {
                    step: 0.01,
                    tol: 1e-9,
                    ..Integration::default()
                },
            )
            .unwrap();
        assert!(coarse.converged && fine.converged);
        assert!(coarse.final_state().max_abs_diff(fine.final_state()) < 1e-4);
    }
}

#[test]
fn occupied_regions_pay_the_same_at_equilibrium() {
    let game = SensingGame::new(
        vec![region(0, 90.0), region(1, 40.0), region(2, 20.0)],
        vec![population(0, 15, 1.0, vec![2.0, 0.0, 1.0])],
    )
    .unwrap();
    let traj = game
        .evolve(
            &PopulationState::uniform(1, 3),
            &Integration {
                tol: 1e-9,
                ..Integration::default()
            },
        )
        .unwrap();
    assert!(traj.converged);
    let state = traj.final_state();
    let occupied: Vec<f64> = (0..3)
        .filter(|&v| state.share(0, v) > 1e-3)
        .map(|v| traj.final_payoffs[0][v])
        .collect();
    assert!(occupied.len() >= 2);
    for u in &occupied {
        assert!((u - occupied[0]).abs() < 1e-4, "{occupied:?}");
    }
    // no empty region would pay more than the occupied ones
    for v in (0..3).filter(|&v| state.share(0, v) <= 1e-3) {
        assert!(traj.final_payoffs[0][v] <= occupied[0] + 1e-4);
    }
}

#[test]
fn sync_frequency_tracks_serving_mass() {
    let game = two_region();
    let state = PopulationState::new(vec![vec![0.3, 0.7]]).unwrap();
    for v in 0..2 {
        let mass = game.serving_mass_at(&state, v);
        assert!((game.sync_frequency(&state, v) - 0.1 * mass).abs() < 1e-12);
    }
}

#[test]
fn sweep_rows_follow_the_grid() {
    let game = two_region();
    let init = PopulationState::uniform(1, 2);
    let grid = [10.0, 200.0, 50.0];
    let rows = game.reward_sweep("v0", &grid, &init, &Integration::default()).unwrap();
    assert_eq!(rows.iter().map(|r| r.reward).collect::<Vec<_>>(), grid);
    // equilibrium share of v0 is R / (R + 50)
    for row in &rows {
        let expected = 10.0 * row.reward / (row.reward + 50.0);
        assert!(
            (row.masses[0] - expected).abs() < 1e-3,
            "{} vs {expected}",
            row.masses[0]
        );
    }
}
