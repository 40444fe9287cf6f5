//! Instance files, seeded instance generation, controller comparison and
//! unilateral-deviation probes.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::auction::{oracle_max_welfare, run_dda, AuctionOutcome, DdaInstance};
use super::controller::ClockController;
use super::learn::{train_q_controller, EpisodeLog, TrainConfig};
use super::qoe::{EdgeSeller, QoeParams, VrUser};
use super::DdaError;
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuyerSpec {
    pub id: String,
    pub head_speed: f64,
    pub bitrate: f64,
    /// Overrides the QoE-derived valuation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valuation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SellerSpec {
    pub id: String,
    pub energy_price: f64,
    pub base_cost: f64,
    /// Overrides the energy/base-cost model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
}

/// On-disk auction instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DdaInstanceFile {
    pub buyers: Vec<BuyerSpec>,
    pub sellers: Vec<SellerSpec>,
    #[serde(default)]
    pub qoe: QoeParams,
    pub p_low: f64,
    pub p_high: f64,
}

impl DdaInstanceFile {
    /// Resolves valuations and costs. Sellers are priced at the highest
    /// bitrate any buyer requests.
    pub fn build(&self) -> Result<DdaInstance, DdaError> {
        self.qoe.validate()?;
        let mut buyers = Vec::with_capacity(self.buyers.len());
        for b in &self.buyers {
            let mut user = VrUser::new(b.id.clone(), b.head_speed, b.bitrate, &self.qoe)?;
            if let Some(v) = b.valuation {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(DdaError::invalid("valuation", format!("buyer `{}` has {v}", b.id)));
                }
                user.valuation = v;
            }
            buyers.push(user);
        }
        let service_rate = self.buyers.iter().map(|b| b.bitrate).fold(0.0, f64::max);
        let mut sellers = Vec::with_capacity(self.sellers.len());
        for s in &self.sellers {
            let mut seller = EdgeSeller::new(s.id.clone(), s.energy_price, s.base_cost, service_rate)?;
            if let Some(c) = s.cost {
                if !(c >= 0.0 && c.is_finite()) {
                    return Err(DdaError::invalid("cost", format!("seller `{}` has {c}", s.id)));
                }
                seller.cost = c;
            }
            sellers.push(seller);
        }
        DdaInstance::new(buyers, sellers, self.p_low, self.p_high)
    }
}

/// Seeded random market: every buyer in an instance streams at one bitrate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InstanceGenerator {
    pub buyers: [usize; 2],
    pub sellers: [usize; 2],
    pub bitrate: [f64; 2],
    pub head_speed: [f64; 2],
    pub energy_price: [f64; 2],
    pub base_cost: [f64; 2],
    pub qoe: QoeParams,
    pub p_low: f64,
    pub p_high: f64,
    /// Round valuations and costs to whole currency units (valuations floored at 1).
    pub integer_values: bool,
}

impl Default for InstanceGenerator {
    fn default() -> Self {
        Self {
            buyers: [5, 20],
            sellers: [5, 20],
            bitrate: [1.0, 250.0],
            head_speed: [0.0, 2.0],
            energy_price: [0.05, 0.35],
            base_cost: [1.0, 30.0],
            qoe: QoeParams {
                lambda: 100.0,
                ..QoeParams::default()
            },
            p_low: 0.0,
            p_high: 100.0,
            integer_values: false,
        }
    }
}

fn check_range<T: PartialOrd + Copy + std::fmt::Display>(field: &str, r: [T; 2], lo: T) -> Result<(), DdaError> {
    if !(r[0] >= lo && r[0] <= r[1]) {
        return Err(DdaError::invalid(
            field,
            format!("range [{}, {}] is invalid", r[0], r[1]),
        ));
    }
    Ok(())
}

fn draw(rng: &mut RngStream, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.gen_range(r[0]..r[1])
    }
}

impl InstanceGenerator {
    pub fn validate(&self) -> Result<(), DdaError> {
        check_range("buyers", self.buyers, 0)?;
        check_range("sellers", self.sellers, 0)?;
        check_range("bitrate", self.bitrate, 0.0)?;
        check_range("head_speed", self.head_speed, 0.0)?;
        check_range("energy_price", self.energy_price, 0.0)?;
        check_range("base_cost", self.base_cost, 0.0)?;
        self.qoe.validate()?;
        if !(self.p_low < self.p_high) {
            return Err(DdaError::PriceBounds {
                p_low: self.p_low,
                p_high: self.p_high,
            });
        }
        Ok(())
    }

    /// Same generator pinned to one bitrate.
    pub fn at_bitrate(&self, bitrate: f64) -> Self {
        Self {
            bitrate: [bitrate, bitrate],
            ..self.clone()
        }
    }

    pub fn generate(&self, rng: &mut RngStream) -> Result<DdaInstance, DdaError> {
        self.validate()?;
        let nb = rng.gen_range(self.buyers[0]..=self.buyers[1]);
        let ns = rng.gen_range(self.sellers[0]..=self.sellers[1]);
        let bitrate = draw(rng, self.bitrate);
        let mut buyers = Vec::with_capacity(nb);
        for i in 0..nb {
            let mut user = VrUser::new(format!("b{i}"), draw(rng, self.head_speed), bitrate, &self.qoe)?;
            if self.integer_values {
                user.valuation = user.valuation.round().max(1.0);
            }
            buyers.push(user);
        }
        let mut sellers = Vec::with_capacity(ns);
        for j in 0..ns {
            let energy = draw(rng, self.energy_price);
            let base = draw(rng, self.base_cost);
            let mut seller = EdgeSeller::new(format!("s{j}"), energy, base, bitrate)?;
            if self.integer_values {
                seller.cost = seller.cost.round();
            }
            sellers.push(seller);
        }
        DdaInstance::new(buyers, sellers, self.p_low, self.p_high)
    }

    /// `count` instances, instance `i` drawn from substream `label/i`.
    pub fn generate_many(&self, count: usize, rng: &RngStream) -> Result<Vec<DdaInstance>, DdaError> {
        (0..count)
            .map(|i| self.generate(&mut rng.substream(&i.to_string())))
            .collect()
    }
}

/// Trains a step controller on a mix of markets: each episode picks one of
/// `bitrates` uniformly, or uses the generator unchanged when the list is empty.
pub fn train_on_bitrates(
    generator: &InstanceGenerator,
    bitrates: &[f64],
    cfg: &TrainConfig,
    rng: &RngStream,
) -> Result<(ClockController, Vec<EpisodeLog>), DdaError> {
    generator.validate()?;
    train_q_controller(
        |_, rng| {
            if bitrates.is_empty() {
                generator.generate(rng)
            } else {
                let b = bitrates[rng.gen_range(0..bitrates.len())];
                generator.at_bitrate(b).generate(rng)
            }
        },
        cfg,
        rng,
    )
}

/// One controller on one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub controller: String,
    pub instance: usize,
    pub welfare: f64,
    pub oracle_welfare: f64,
    pub rounds: usize,
    pub messages: usize,
}

impl RunRecord {
    /// `welfare / oracle`, defined as 1 when no trade has positive surplus.
    pub fn welfare_ratio(&self) -> f64 {
        if self.oracle_welfare > 0.0 {
            self.welfare / self.oracle_welfare
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControllerSummary {
    pub controller: String,
    pub instances: usize,
    pub mean_welfare: f64,
    pub mean_welfare_ratio: f64,
    pub mean_rounds: f64,
    pub mean_messages: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub runs: Vec<RunRecord>,
    pub summaries: Vec<ControllerSummary>,
}

pub fn summarize(name: &str, runs: &[RunRecord]) -> ControllerSummary {
    let n = runs.len().max(1) as f64;
    ControllerSummary {
        controller: name.to_string(),
        instances: runs.len(),
        mean_welfare: runs.iter().map(|r| r.welfare).sum::<f64>() / n,
        mean_welfare_ratio: runs.iter().map(|r| r.welfare_ratio()).sum::<f64>() / n,
        mean_rounds: runs.iter().map(|r| r.rounds as f64).sum::<f64>() / n,
        mean_messages: runs.iter().map(|r| r.messages as f64).sum::<f64>() / n,
    }
}

/// Runs every controller on every instance. Rows are ordered by controller,
/// then instance, regardless of how the work is scheduled.
pub fn compare_controllers(
    instances: &[DdaInstance],
    controllers: &[(String, ClockController)],
) -> Result<Comparison, DdaError> {
    if instances.is_empty() {
        return Err(DdaError::invalid("instances", "at least one instance is required"));
    }
    let oracle: Vec<f64> = instances
        .iter()
        .map(|i| oracle_max_welfare(&i.valuations(), &i.costs()))
        .collect();
    let mut runs = Vec::new();
    let mut summaries = Vec::new();
    for (name, controller) in controllers {
        let outcomes: Vec<AuctionOutcome> = instances
            .par_iter()
            .map(|inst| run_dda(inst, controller))
            .collect::<Result<_, _>>()?;
        let rows: Vec<RunRecord> = outcomes
            .into_iter()
            .enumerate()
            .map(|(i, o)| RunRecord {
                controller: name.clone(),
                instance: i,
                welfare: o.welfare,
                oracle_welfare: oracle[i],
                rounds: o.rounds,
                messages: o.messages,
            })
            .collect();
        summaries.push(summarize(name, &rows));
        runs.extend(rows);
    }
    Ok(Comparison { runs, summaries })
}

/// Which agent deviates in a truthfulness probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agent {
    Buyer(usize),
    Seller(usize),
}

/// Realized utility of `agent` under its true value.
pub fn agent_utility(instance: &DdaInstance, outcome: &AuctionOutcome, agent: Agent) -> f64 {
    match agent {
        Agent::Buyer(i) => outcome.buyer_price(i).map_or(0.0, |p| instance.buyers[i].valuation - p),
        Agent::Seller(j) => outcome.seller_price(j).map_or(0.0, |p| p - instance.sellers[j].cost),
    }
}

/// Utility gain of `agent` from acting on `misreport` instead of its true
/// value, everyone else truthful. Positive means the lie paid off.
pub fn truthfulness_probe(
    instance: &DdaInstance,
    agent: Agent,
    misreport: f64,
    controller: &ClockController,
) -> Result<f64, DdaError> {
    let mut reported = instance.clone();
    match agent {
        Agent::Buyer(i) if i < instance.buyers.len() => reported.buyers[i].valuation = misreport,
        Agent::Seller(j) if j < instance.sellers.len() => reported.sellers[j].cost = misreport,
        _ => return Err(DdaError::UnknownAgent(format!("{agent:?}"))),
    }
    if !misreport.is_finite() {
        return Err(DdaError::invalid("misreport", format!("{misreport} is not finite")));
    }
    let truthful = run_dda(instance, controller)?;
    let lying = run_dda(&reported, controller)?;
    Ok(agent_utility(instance, &lying, agent) - agent_utility(instance, &truthful, agent))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> DdaInstance {
        DdaInstance::from_values(&[10.0, 8.0, 6.0], &[3.0, 5.0, 9.0], 2.0, 12.0).unwrap()
    }

    #[test]
    fn identity_misreport_is_neutral() {
        let c = ClockController::fixed(1.0);
        assert_eq!(truthfulness_probe(&toy(), Agent::Buyer(1), 8.0, &c).unwrap(), 0.0);
        assert_eq!(truthfulness_probe(&toy(), Agent::Seller(2), 9.0, &c).unwrap(), 0.0);
        assert!(truthfulness_probe(&toy(), Agent::Seller(7), 9.0, &c).is_err());
    }

    #[test]
    fn losing_buyer_overstating_does_not_gain() {
        // buyer 2 (value 6) is unmatched when truthful; claiming at the top
        // of the clock makes it trade above its value
        let c = ClockController::fixed(1.0);
        let gain = truthfulness_probe(&toy(), Agent::Buyer(2), 13.0, &c).unwrap();
        assert!(gain <= 0.0, "gain {gain}");
    }

    #[test]
    fn single_instance_comparison_matches_run() {
        let c = ClockController::fixed(1.0);
        let cmp = compare_controllers(&[toy()], &[("fixed".into(), c.clone())]).unwrap();
        let out = run_dda(&toy(), &c).unwrap();
        let s = &cmp.summaries[0];
        assert_eq!(s.mean_welfare, out.welfare);
        assert_eq!(s.mean_rounds, out.rounds as f64);
        assert_eq!(s.mean_messages, out.messages as f64);
        assert_eq!(s.mean_welfare_ratio, 1.0);
        assert!(compare_controllers(&[], &[("fixed".into(), c)]).is_err());
    }

    #[test]
    fn generator_is_seeded() {
        let g = InstanceGenerator::default();
        let rng = RngStream::new(4, "gen");
        assert_eq!(g.generate_many(5, &rng).unwrap(), g.generate_many(5, &rng).unwrap());
        let ints = InstanceGenerator {
            integer_values: true,
            ..g
        };
        for inst in ints.generate_many(20, &rng).unwrap() {
            assert!(inst
                .valuations()
                .iter()
                .all(|v| v.fract() == 0.0 && *v >= 1.0 && *v <= 100.0));
            assert!(inst.costs().iter().all(|c| c.fract() == 0.0));
        }
    }

    #[test]
    fn instance_file_overrides() {
        let file: DdaInstanceFile = serde_json::from_str(
            r#"{"buyers":[{"id":"u1","head_speed":0,"bitrate":50},{"id":"u2","head_speed":1,"bitrate":10,"valuation":4}],
                "sellers":[{"id":"e1","energy_price":0.04,"base_cost":1}],
                "p_low":0,"p_high":12}"#,
        )
        .unwrap();
        let inst = file.build().unwrap();
        assert!((inst.buyers[0].valuation - 7.75).abs() < 5e-3);
        assert_eq!(inst.buyers[1].valuation, 4.0);
        assert!((inst.sellers[0].cost - 3.0).abs() < 1e-12);
        assert!(
            serde_json::from_str::<DdaInstanceFile>(r#"{"buyers":[],"sellers":[],"p_low":0,"p_high":1,"x":1}"#)
                .is_err()
        );
    }
}
