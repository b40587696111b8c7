//! Weighted page interleaving: which tier gets the next page.
//!
//! Allocation order follows run-length semantics: a tier with weight w
//! receives w consecutive pages before the cursor moves to the next tier
//! with a nonzero weight. Over any aligned window of sum-of-weights pages
//! every tier receives exactly its weight.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use thiserror::Error;

/// Page granularity of the interleaving policy.
pub const PAGE_SIZE_BYTES: u64 = 4096;

/// Largest value a single interleave weight may take, mirroring the range
/// the kernel accepts for weighted interleave nodes.
pub const MAX_WEIGHT_VALUE: u32 = 255;

#[derive(Debug, Error)]
pub enum WeightsError {
    #[error("interleave weights are empty")]
    Empty,
    #[error("interleave weights are all zero; at least one tier must receive pages")]
    AllZero,
    #[error("interleave weight {value} at index {index} exceeds {MAX_WEIGHT_VALUE}")]
    TooLarge { index: usize, value: u32 },
    #[error("cannot parse interleave weights from {text:?}; expected comma-separated integers")]
    Malformed { text: String },
}

/// Per-tier page weights, e.g. (3,1): three pages on tier 0 for every one
/// on tier 1. Each weight is at most 255 and at least one is nonzero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InterleaveWeights(Vec<u32>);

impl InterleaveWeights {
    pub fn new(weights: Vec<u32>) -> Result<Self, WeightsError> {
        if weights.is_empty() {
            return Err(WeightsError::Empty);
        }
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, &w)| w > MAX_WEIGHT_VALUE)
        {
            return Err(WeightsError::TooLarge { index, value });
        }
        if weights.iter().all(|&w| w == 0) {
            return Err(WeightsError::AllZero);
        }
        Ok(InterleaveWeights(weights))
    }

    /// Convenience for the common two-tier case.
    pub fn pair(w0: u32, w1: u32) -> Result<Self, WeightsError> {
        Self::new(vec![w0, w1])
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, tier: usize) -> u32 {
        self.0[tier]
    }

    /// Sum of all weights; always >= 1.
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Fraction of pages (and, under uniform access, of traffic) directed
    /// at a tier: w_tier / total.
    pub fn traffic_fraction(&self, tier: usize) -> f64 {
        f64::from(self.0[tier]) / f64::from(self.total())
    }

    /// Parenthesized form used to label table rows and curve points: "(3,1)".
    pub fn label(&self) -> String {
        format!("({})", self)
    }
}

impl fmt::Display for InterleaveWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{w}")?;
        }
        Ok(())
    }
}

impl FromStr for InterleaveWeights {
    type Err = WeightsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parsed: Result<Vec<u32>, _> = s.split(',').map(|part| part.trim().parse()).collect();
        match parsed {
            Ok(v) => InterleaveWeights::new(v),
            Err(_) => Err(WeightsError::Malformed {
                text: s.to_string(),
            }),
        }
    }
}

/// Position within the run-length allocation cycle.
///
/// `remaining` counts pages still owed to the current tier, so it stays in
/// `[1, weight of current tier]` between calls.
#[derive(Debug, Clone)]
pub struct AllocatorCursor {
    tier: usize,
    remaining: u32,
}

impl AllocatorCursor {
    /// A fresh cursor positioned at the first tier with a nonzero weight.
    pub fn new(weights: &InterleaveWeights) -> Self {
        let tier = weights
            .as_slice()
            .iter()
            .position(|&w| w > 0)
            .expect("weights invariant: at least one nonzero");
        AllocatorCursor {
            tier,
            remaining: weights.get(tier),
        }
    }

    pub fn tier(&self) -> usize {
        self.tier
    }

    pub fn remaining(&self) -> u32 {
        self.remaining
    }
}

/// The tier receiving the next page; advances the cursor. Zero-weight tiers
/// are never returned. The cursor must have been created from `weights`.
pub fn next_tier(cursor: &mut AllocatorCursor, weights: &InterleaveWeights) -> usize {
    let tier = cursor.tier;
    cursor.remaining -= 1;
    if cursor.remaining == 0 {
        let n = weights.len();
        let mut next = (tier + 1) % n;
        while weights.get(next) == 0 {
            next = (next + 1) % n;
        }
        cursor.tier = next;
        cursor.remaining = weights.get(next);
    }
    tier
}

/// A materialized page-to-tier assignment.
#[derive(Debug, Clone)]
pub struct PageMap {
    weights: InterleaveWeights,
    assignment: Vec<u32>,
}

impl PageMap {
    pub fn page_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn tier_of(&self, page: usize) -> usize {
        self.assignment[page] as usize
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn weights(&self) -> &InterleaveWeights {
        &self.weights
    }

    /// Pages per tier over the whole map.
    pub fn tier_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.weights.len()];
        for &t in &self.assignment {
            counts[t as usize] += 1;
        }
        counts
    }

    /// Debug export, one `page_index,tier_index` row per page.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "page_index,tier_index")?;
        for (page, tier) in self.assignment.iter().enumerate() {
            writeln!(out, "{page},{tier}")?;
        }
        Ok(())
    }
}

/// Assign `page_count` pages by driving a fresh cursor through the weights.
pub fn allocate(page_count: usize, weights: &InterleaveWeights) -> PageMap {
    let mut cursor = AllocatorCursor::new(weights);
    let assignment = (0..page_count)
        .map(|_| next_tier(&mut cursor, weights) as u32)
        .collect();
    PageMap {
        weights: weights.clone(),
        assignment,
    }
}
