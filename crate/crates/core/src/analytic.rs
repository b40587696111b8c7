//! Closed-form bandwidth and latency under weighted interleaving.
//!
//! With traffic split across tiers in proportion to their weights, the
//! aggregate is capped by whichever tier saturates first:
//! `aggregate = min_i bandwidth_i / fraction_i`. The cap is highest when
//! fractions match each tier's share of total bandwidth, which is what the
//! weight recommendation chases with small-integer ratios. Loaded latency
//! stacks an M/M/1-style factor on each tier's unloaded latency.

use crate::calibration::{CalibrationError, ProfileSet, TierProfile, WorkloadMix};
use crate::policy::{InterleaveWeights, WeightsError, MAX_WEIGHT_VALUE};

use thiserror::Error;

/// Candidates whose predicted bandwidth is within this relative margin of
/// the best candidate count as ties. The model's accuracy against measured
/// sweeps is around ten percent, so distinctions finer than this margin are
/// below its resolving power; ties resolve toward the smallest weight total,
/// keeping recommendations on short, simple ratios.
pub const NEAR_TIE_MARGIN: f64 = 0.025;

#[derive(Debug, Error)]
pub enum AnalyticError {
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Weights(#[from] WeightsError),
    #[error("weights cover {weights} tiers but the profile set has {tiers}")]
    TierMismatch { weights: usize, tiers: usize },
    #[error("tier {tier:?} is infeasible at utilization {utilization:.4}; loaded latency requires utilization < 1")]
    InfeasibleLoad { tier: String, utilization: f64 },
    #[error(
        "no weight assignment with weight total <= {max_weight} can carry {demand_gbps:.2} GB/s"
    )]
    NoFeasibleWeights { demand_gbps: f64, max_weight: u32 },
    #[error("demand must be finite and non-negative, got {value}")]
    InvalidDemand { value: f64 },
    #[error("utilization must be finite and non-negative, got {value}")]
    InvalidUtilization { value: f64 },
    #[error("max weight must be in 1..={MAX_WEIGHT_VALUE}, got {value}")]
    InvalidMaxWeight { value: u32 },
}

/// An offered load level in GB/s for latency prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandPoint(f64);

impl DemandPoint {
    pub fn new(gbps: f64) -> Result<Self, AnalyticError> {
        if !gbps.is_finite() || gbps < 0.0 {
            return Err(AnalyticError::InvalidDemand { value: gbps });
        }
        Ok(DemandPoint(gbps))
    }

    pub fn gbps(self) -> f64 {
        self.0
    }
}

/// Load-dependent latency curve applied on top of a tier's unloaded latency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LatencyModelKind {
    /// latency(u) = unloaded / (1 - u), diverging at saturation.
    #[default]
    Mm1,
}

impl LatencyModelKind {
    /// Loaded latency at the given utilization, or None at or past saturation.
    pub fn loaded_ns(self, unloaded_ns: f64, utilization: f64) -> Option<f64> {
        match self {
            LatencyModelKind::Mm1 => (utilization < 1.0).then(|| unloaded_ns / (1.0 - utilization)),
        }
    }
}

/// What the bottleneck model says about one weighting of one mix.
#[derive(Debug, Clone)]
pub struct Prediction {
    /// Aggregate bandwidth in GB/s.
    pub aggregate_gbps: f64,
    /// Traffic fraction per tier; zero for tiers with zero weight.
    pub shares: Vec<f64>,
    /// Index of the tier that saturates first.
    pub bottleneck: usize,
    /// Per-tier utilization when the aggregate runs at its cap; the
    /// bottleneck tier sits at 1.0.
    pub utilization: Vec<f64>,
}

fn check_tier_count(
    profiles: &ProfileSet,
    weights: &InterleaveWeights,
) -> Result<(), AnalyticError> {
    if weights.len() != profiles.len() {
        return Err(AnalyticError::TierMismatch {
            weights: weights.len(),
            tiers: profiles.len(),
        });
    }
    Ok(())
}

/// Aggregate bandwidth under the min-bottleneck model.
pub fn predict_bandwidth(
    profiles: &ProfileSet,
    weights: &InterleaveWeights,
    mix: &WorkloadMix,
) -> Result<Prediction, AnalyticError> {
    check_tier_count(profiles, weights)?;
    let n = profiles.len();
    let mut shares = vec![0.0; n];
    let mut caps: Vec<Option<(f64, f64)>> = vec![None; n]; // (bandwidth, cap) for active tiers
    let mut aggregate = f64::INFINITY;
    let mut bottleneck = usize::MAX;
    for tier in 0..n {
        if weights.get(tier) == 0 {
            continue;
        }
        let share = weights.traffic_fraction(tier);
        let bandwidth = profiles.tier(tier).bandwidth_at(mix)?;
        let cap = bandwidth / share;
        shares[tier] = share;
        caps[tier] = Some((bandwidth, cap));
        if cap < aggregate {
            aggregate = cap;
            bottleneck = tier;
        }
    }
    let utilization = (0..n)
        .map(|tier| match caps[tier] {
            Some((bandwidth, _)) => aggregate * shares[tier] / bandwidth,
            None => 0.0,
        })
        .collect();
    Ok(Prediction {
        aggregate_gbps: aggregate,
        shares,
        bottleneck,
        utilization,
    })
}

/// The traffic split that would let every tier saturate together:
/// f_i = bandwidth_i / sum of bandwidths.
pub fn optimal_fraction(
    profiles: &ProfileSet,
    mix: &WorkloadMix,
) -> Result<Vec<f64>, AnalyticError> {
    let bandwidths = profiles.bandwidths_at(mix)?;
    let total: f64 = bandwidths.iter().sum();
    Ok(bandwidths.into_iter().map(|b| b / total).collect())
}

/// All weight vectors with total weight in [1, max_weight].
///
/// Bounding the total rather than each component keeps the candidate list on
/// coarse, practical ratios; a component-wise bound would admit long periods
/// like (8,3) that chase sub-margin gains the model cannot back up.
fn candidates(tiers: usize, max_weight: u32) -> Vec<Vec<u32>> {
    fn fill(out: &mut Vec<Vec<u32>>, prefix: &mut Vec<u32>, tiers: usize, budget: u32) {
        if prefix.len() == tiers {
            if prefix.iter().any(|&w| w > 0) {
                out.push(prefix.clone());
            }
            return;
        }
        for w in 0..=budget {
            prefix.push(w);
            fill(out, prefix, tiers, budget - w);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    fill(&mut out, &mut Vec::new(), tiers, max_weight);
    out
}

/// Tie order: smallest weight total first, then the largest tier-0 weight,
/// then lexicographically smallest vector.
fn tie_key(w: &[u32]) -> (u32, std::cmp::Reverse<u32>, Vec<u32>) {
    (w.iter().sum(), std::cmp::Reverse(w[0]), w.to_vec())
}

fn check_max_weight(max_weight: u32) -> Result<(), AnalyticError> {
    if max_weight == 0 || max_weight > MAX_WEIGHT_VALUE {
        return Err(AnalyticError::InvalidMaxWeight { value: max_weight });
    }
    Ok(())
}

/// The weight vector (total weight <= max_weight) maximizing predicted
/// bandwidth. Candidates within [`NEAR_TIE_MARGIN`] of the best are treated
/// as ties and resolved toward the simplest ratio.
pub fn recommend_weights(
    profiles: &ProfileSet,
    mix: &WorkloadMix,
    max_weight: u32,
) -> Result<(InterleaveWeights, Prediction), AnalyticError> {
    check_max_weight(max_weight)?;
    // Every tier must cover the mix before the search, so coverage errors
    // surface identically no matter which candidates activate which tiers.
    profiles.bandwidths_at(mix)?;
    let mut scored = Vec::new();
    let mut best = 0.0f64;
    for raw in candidates(profiles.len(), max_weight) {
        let weights = InterleaveWeights::new(raw)?;
        let prediction = predict_bandwidth(profiles, &weights, mix)?;
        best = best.max(prediction.aggregate_gbps);
        scored.push((weights, prediction));
    }
    let winner = scored
        .into_iter()
        .filter(|(_, p)| p.aggregate_gbps >= best * (1.0 - NEAR_TIE_MARGIN))
        .min_by_key(|(w, _)| tie_key(w.as_slice()))
        .expect("candidate list is never empty");
    Ok(winner)
}

/// Loaded latency of one tier at the given utilization.
pub fn loaded_latency(profile: &TierProfile, utilization: f64) -> Result<f64, AnalyticError> {
    if !utilization.is_finite() || utilization < 0.0 {
        return Err(AnalyticError::InvalidUtilization { value: utilization });
    }
    LatencyModelKind::default()
        .loaded_ns(profile.unloaded_latency_ns(), utilization)
        .ok_or_else(|| AnalyticError::InfeasibleLoad {
            tier: profile.name().to_string(),
            utilization,
        })
}

/// Traffic-weighted mean loaded latency with `demand` GB/s spread across
/// tiers by weight. Infeasible as soon as any tier reaches utilization 1.
pub fn mixture_latency(
    profiles: &ProfileSet,
    weights: &InterleaveWeights,
    mix: &WorkloadMix,
    demand: DemandPoint,
) -> Result<f64, AnalyticError> {
    check_tier_count(profiles, weights)?;
    let mut latency = 0.0;
    for tier in 0..profiles.len() {
        if weights.get(tier) == 0 {
            continue;
        }
        let share = weights.traffic_fraction(tier);
        let bandwidth = profiles.tier(tier).bandwidth_at(mix)?;
        let utilization = demand.gbps() * share / bandwidth;
        latency += share * loaded_latency(profiles.tier(tier), utilization)?;
    }
    Ok(latency)
}

/// The weight vector minimizing mixture latency at a demand level, searched
/// over the same candidate space as [`recommend_weights`]. Exact latency
/// ties (equivalent ratios) resolve toward the simplest ratio. Errors with
/// no-feasible-weights when every candidate saturates some tier.
pub fn recommend_weights_for_demand(
    profiles: &ProfileSet,
    mix: &WorkloadMix,
    demand: DemandPoint,
    max_weight: u32,
) -> Result<(InterleaveWeights, f64), AnalyticError> {
    check_max_weight(max_weight)?;
    profiles.bandwidths_at(mix)?;
    let mut winner: Option<(InterleaveWeights, f64)> = None;
    for raw in candidates(profiles.len(), max_weight) {
        let weights = InterleaveWeights::new(raw)?;
        let latency = match mixture_latency(profiles, &weights, mix, demand) {
            Ok(l) => l,
            Err(AnalyticError::InfeasibleLoad { .. }) => continue,
            Err(other) => return Err(other),
        };
        let better = match &winner {
            None => true,
            Some((held, held_latency)) => match latency.total_cmp(held_latency) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Greater => false,
                std::cmp::Ordering::Equal => tie_key(weights.as_slice()) < tie_key(held.as_slice()),
            },
        };
        if better {
            winner = Some((weights, latency));
        }
    }
    winner.ok_or(AnalyticError::NoFeasibleWeights {
        demand_gbps: demand.gbps(),
        max_weight,
    })
}
