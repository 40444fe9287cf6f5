//! Double Dutch Auction engine.
//!
//! Two price clocks run toward each other: the buyer clock descends from
//! `p_high`, the seller clock ascends from `p_low`. Only one clock moves per
//! round. The buyer clock moves while claimed buyers do not outnumber
//! claimed sellers; otherwise the seller clock moves. After every move each
//! unclaimed buyer whose valuation reaches the buyer clock claims at that
//! price, and each unclaimed seller whose cost is covered by the seller clock
//! claims at that price (input order within a round).
//!
//! The auction stops when the clocks cross, or when one side has fully
//! claimed and the other side has claimed at least as many. The k-th claimed
//! buyer is paired with the k-th claimed seller and trades at the midpoint of
//! the two claim prices; pairs whose buyer claim is below the seller claim
//! are dropped.

use serde::Serialize;

use super::controller::{ClockController, ClockObservation, StepRule};
use super::qoe::{EdgeSeller, VrUser};
use super::DdaError;

/// Buyers, sellers and the opening prices of the two clocks.
#[derive(Debug, Clone, PartialEq)]
pub struct DdaInstance {
    pub buyers: Vec<VrUser>,
    pub sellers: Vec<EdgeSeller>,
    pub p_low: f64,
    pub p_high: f64,
}

impl DdaInstance {
    pub fn new(buyers: Vec<VrUser>, sellers: Vec<EdgeSeller>, p_low: f64, p_high: f64) -> Result<Self, DdaError> {
        if !(p_low.is_finite() && p_high.is_finite() && p_low < p_high) {
            return Err(DdaError::PriceBounds { p_low, p_high });
        }
        Ok(Self {
            buyers,
            sellers,
            p_low,
            p_high,
        })
    }

    /// Instance from bare valuations and costs (ids `b0..`, `s0..`).
    pub fn from_values(valuations: &[f64], costs: &[f64], p_low: f64, p_high: f64) -> Result<Self, DdaError> {
        Self::new(
            valuations
                .iter()
                .enumerate()
                .map(|(i, &v)| VrUser::with_valuation(format!("b{i}"), v))
                .collect(),
            costs
                .iter()
                .enumerate()
                .map(|(i, &c)| EdgeSeller::with_cost(format!("s{i}"), c))
                .collect(),
            p_low,
            p_high,
        )
    }

    pub fn valuations(&self) -> Vec<f64> {
        self.buyers.iter().map(|b| b.valuation).collect()
    }

    pub fn costs(&self) -> Vec<f64> {
        self.sellers.iter().map(|s| s.cost).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Buyer,
    Seller,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Claim {
    /// Index into the instance's buyer or seller list.
    pub index: usize,
    pub id: String,
    pub price: f64,
    pub round: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Match {
    pub buyer: usize,
    pub seller: usize,
    pub buyer_id: String,
    pub seller_id: String,
    pub price: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClockMove {
    pub side: Side,
    pub step: f64,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuctionOutcome {
    pub matches: Vec<Match>,
    pub rounds: usize,
    pub messages: usize,
    pub welfare: f64,
    pub claimed_buyers: Vec<Claim>,
    pub claimed_sellers: Vec<Claim>,
    pub moves: Vec<ClockMove>,
}

impl AuctionOutcome {
    /// Price paid by buyer `index`, if it traded.
    pub fn buyer_price(&self, index: usize) -> Option<f64> {
        self.matches.iter().find(|m| m.buyer == index).map(|m| m.price)
    }

    pub fn seller_price(&self, index: usize) -> Option<f64> {
        self.matches.iter().find(|m| m.seller == index).map(|m| m.price)
    }
}

/// Runs one auction with the given controller.
pub fn run_dda(instance: &DdaInstance, controller: &ClockController) -> Result<AuctionOutcome, DdaError> {
    controller.validate()?;
    let mut rule = controller.start();
    run_dda_with(instance, &mut rule, controller.min_step())
}

/// Runs one auction driven by an arbitrary step rule.
///
/// Steps are clamped from below at `min_step` so the round count stays
/// bounded by `(p_high - p_low) / min_step + 1`.
pub fn run_dda_with(
    instance: &DdaInstance,
    rule: &mut dyn StepRule,
    min_step: f64,
) -> Result<AuctionOutcome, DdaError> {
    let DdaInstance {
        buyers,
        sellers,
        p_low,
        p_high,
    } = instance;
    let (p_low, p_high) = (*p_low, *p_high);
    if !(p_low.is_finite() && p_high.is_finite() && p_low < p_high) {
        return Err(DdaError::PriceBounds { p_low, p_high });
    }
    if !(min_step > 0.0 && min_step.is_finite()) {
        return Err(DdaError::invalid(
            "min_step",
            format!("must be positive, got {min_step}"),
        ));
    }

    let range = p_high - p_low;
    let mut buyer_clock = p_high;
    let mut seller_clock = p_low;
    let mut buyer_claimed = vec![false; buyers.len()];
    let mut seller_claimed = vec![false; sellers.len()];
    let mut claimed_buyers: Vec<Claim> = Vec::new();
    let mut claimed_sellers: Vec<Claim> = Vec::new();
    let mut moves = Vec::new();

    let fraction = |claimed: usize, total: usize| if total == 0 { 1.0 } else { claimed as f64 / total as f64 };

    loop {
        let nb = claimed_buyers.len();
        let ns = claimed_sellers.len();
        let crossed = buyer_clock <= seller_clock;
        let buyers_done = nb == buyers.len() && ns >= nb;
        let sellers_done = ns == sellers.len() && nb >= ns;
        if crossed || buyers_done || sellers_done {
            break;
        }

        let obs = ClockObservation {
            spread: ((buyer_clock - seller_clock) / range).clamp(0.0, 1.0),
            claimed_buyers: fraction(nb, buyers.len()),
            claimed_sellers: fraction(ns, sellers.len()),
            round: moves.len(),
        };
        let step = rule.next_step(&obs).max(min_step);
        let side = if nb <= ns { Side::Buyer } else { Side::Seller };
        let price = match side {
            Side::Buyer => {
                buyer_clock -= step;
                buyer_clock
            }
            Side::Seller => {
                seller_clock += step;
                seller_clock
            }
        };
        moves.push(ClockMove { side, step, price });
        let round = moves.len();

        for (i, b) in buyers.iter().enumerate() {
            if !buyer_claimed[i] && b.valuation >= buyer_clock {
                buyer_claimed[i] = true;
                claimed_buyers.push(Claim {
                    index: i,
                    id: b.id.clone(),
                    price: buyer_clock,
                    round,
                });
            }
        }
        for (j, s) in sellers.iter().enumerate() {
            if !seller_claimed[j] && s.cost <= seller_clock {
                seller_claimed[j] = true;
                claimed_sellers.push(Claim {
                    index: j,
                    id: s.id.clone(),
                    price: seller_clock,
                    round,
                });
            }
        }
    }

    let mut matches = Vec::new();
    let mut welfare = 0.0;
    for (b, s) in claimed_buyers.iter().zip(&claimed_sellers) {
        if b.price < s.price {
            continue;
        }
        welfare += buyers[b.index].valuation - sellers[s.index].cost;
        matches.push(Match {
            buyer: b.index,
            seller: s.index,
            buyer_id: b.id.clone(),
            seller_id: s.id.clone(),
            price: 0.5 * (b.price + s.price),
        });
    }
    let rounds = moves.len();
    let messages = rounds * (buyers.len() + sellers.len()) + claimed_buyers.len() + claimed_sellers.len();
    Ok(AuctionOutcome {
        matches,
        rounds,
        messages,
        welfare,
        claimed_buyers,
        claimed_sellers,
        moves,
    })
}

/// Maximum welfare over all one-to-one matchings: pair the highest
/// valuations with the lowest costs while the pair still has non-negative
/// surplus.
pub fn oracle_max_welfare(valuations: &[f64], costs: &[f64]) -> f64 {
    let mut v = valuations.to_vec();
    let mut c = costs.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    c.sort_by(|a, b| a.total_cmp(b));
    v.iter().zip(&c).take_while(|(v, c)| v >= c).map(|(v, c)| v - c).sum()
}
