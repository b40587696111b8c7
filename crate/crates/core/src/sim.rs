//! Deterministic closed-loop simulation of tiered memory traffic.
//!
//! Each tier is a single FIFO server whose service time comes straight from
//! the calibration table; the tier's unloaded latency is a pipeline delay
//! that requests experience without occupying the server. A fixed population
//! of stream slots keeps `streams * outstanding_per_stream` requests in
//! flight, so the bottleneck server saturates once the population covers its
//! bandwidth-delay product. Runs are bit-reproducible: one ChaCha8 generator
//! seeded from the config drives every random choice, and the event queue
//! breaks time ties by issue order.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::calibration::{CalibrationError, ProfileSet, WorkloadMix};
use crate::policy::{self, InterleaveWeights};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error("simulation config: {reason}")]
    InvalidConfig { reason: String },
}

/// How streams pick pages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessPattern {
    /// Every request draws a page uniformly at random.
    UniformRandom,
    /// Each stream walks pages in order from its own starting offset.
    Sequential,
}

impl std::fmt::Display for AccessPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AccessPattern::UniformRandom => f.write_str("uniform_random"),
            AccessPattern::Sequential => f.write_str("sequential"),
        }
    }
}

impl std::str::FromStr for AccessPattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform_random" => Ok(AccessPattern::UniformRandom),
            "sequential" => Ok(AccessPattern::Sequential),
            other => Err(format!(
                "unknown access pattern {other:?} (expected uniform_random or sequential)"
            )),
        }
    }
}

/// Closed-loop run parameters.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub weights: InterleaveWeights,
    pub mix: WorkloadMix,
    pub streams: u32,
    pub outstanding_per_stream: u32,
    /// Bytes moved per request; at most one page.
    pub transfer_bytes: u32,
    pub page_count: usize,
    pub pattern: AccessPattern,
    /// None derives the default of one tenth of `measured_requests`.
    pub warmup_requests: Option<u64>,
    pub measured_requests: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(weights: InterleaveWeights, mix: WorkloadMix) -> Self {
        SimConfig {
            weights,
            mix,
            streams: 32,
            outstanding_per_stream: 32,
            transfer_bytes: 64,
            page_count: 40_320,
            pattern: AccessPattern::UniformRandom,
            warmup_requests: None,
            measured_requests: 100_000,
            seed: 42,
        }
    }

    pub fn warmup(&self) -> u64 {
        self.warmup_requests.unwrap_or(self.measured_requests / 10)
    }

    fn validate(&self, profiles: &ProfileSet) -> Result<(), SimError> {
        let bad = |reason: String| SimError::InvalidConfig { reason };
        if self.weights.len() != profiles.len() {
            return Err(bad(format!(
                "weights cover {} tiers but the profile set has {}",
                self.weights.len(),
                profiles.len()
            )));
        }
        if self.streams == 0 {
            return Err(bad("streams must be at least 1".into()));
        }
        if self.outstanding_per_stream == 0 {
            return Err(bad("outstanding_per_stream must be at least 1".into()));
        }
        if self.measured_requests < 2 {
            // Throughput is the rate of measured departures, which needs at
            // least two departure events to define an interval.
            return Err(bad("measured_requests must be at least 2".into()));
        }
        if self.page_count == 0 {
            return Err(bad("page_count must be at least 1".into()));
        }
        if self.transfer_bytes == 0 || u64::from(self.transfer_bytes) > policy::PAGE_SIZE_BYTES {
            return Err(bad(format!(
                "transfer_bytes must be in 1..={}, got {}",
                policy::PAGE_SIZE_BYTES,
                self.transfer_bytes
            )));
        }
        Ok(())
    }
}

/// Measured steady-state behavior of one run.
#[derive(Debug, Clone, Serialize)]
pub struct SimReport {
    pub achieved_gbps: f64,
    pub mean_latency_ns: f64,
    pub p50_latency_ns: f64,
    pub p95_latency_ns: f64,
    pub p99_latency_ns: f64,
    /// Measured requests routed to each tier.
    pub tier_requests: Vec<u64>,
    /// Of those, how many the mix pattern classified as reads / as writes.
    pub tier_reads: Vec<u64>,
    pub tier_writes: Vec<u64>,
    /// Server busy fraction over the measurement window.
    pub tier_utilization: Vec<f64>,
    pub total_time_ns: f64,
    pub seed: u64,
}

impl SimReport {
    pub fn csv_header(tier_count: usize) -> String {
        let mut header = String::from("label,achieved_gbps,mean_ns,p50_ns,p95_ns,p99_ns");
        for tier in 0..tier_count {
            header.push_str(&format!(",util_tier{tier}"));
        }
        header
    }

    pub fn csv_row(&self, label: &str) -> String {
        let mut row = format!(
            "{},{:.3},{:.2},{:.2},{:.2},{:.2}",
            crate::csv_field(label),
            self.achieved_gbps,
            self.mean_latency_ns,
            self.p50_latency_ns,
            self.p95_latency_ns,
            self.p99_latency_ns
        );
        for u in &self.tier_utilization {
            row.push_str(&format!(",{u:.4}"));
        }
        row
    }
}

/// Event-queue key: pops in time order, ties broken by issue sequence.
#[derive(Debug, PartialEq)]
struct Event {
    time: f64,
    seq: u64,
    slot: u32,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.seq.cmp(&other.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Run one closed-loop simulation to completion.
pub fn run(profiles: &ProfileSet, config: &SimConfig) -> Result<SimReport, SimError> {
    config.validate(profiles)?;
    let tier_count = profiles.len();
    let warmup = config.warmup();
    let measured = config.measured_requests;

    // Service time in ns for transfer_bytes at the tier's mix bandwidth
    // (bytes / (GB/s) is exactly ns). Only active tiers ever see traffic.
    let mut service_ns = vec![0.0f64; tier_count];
    let mut pipeline_ns = vec![0.0f64; tier_count];
    for tier in 0..tier_count {
        if config.weights.get(tier) == 0 {
            continue;
        }
        let bandwidth = profiles.tier(tier).bandwidth_at(&config.mix)?;
        service_ns[tier] = f64::from(config.transfer_bytes) / bandwidth;
        pipeline_ns[tier] = profiles.tier(tier).unloaded_latency_ns();
    }

    let page_map = policy::allocate(config.page_count, &config.weights);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let streams = config.streams as usize;
    let slots = streams * config.outstanding_per_stream as usize;
    let mut page_cursor: Vec<usize> = (0..streams)
        .map(|j| j * config.page_count / streams)
        .collect();
    let mut pattern_pos: Vec<u32> = vec![0; streams];
    let cycle = config.mix.cycle_len();
    let reads = config.mix.reads();

    let mut heap: BinaryHeap<Reverse<Event>> = BinaryHeap::with_capacity(slots + 1);
    let mut seq: u64 = 0;
    for slot in 0..slots as u32 {
        heap.push(Reverse(Event {
            time: 0.0,
            seq,
            slot,
        }));
        seq += 1;
    }

    let mut server_free = vec![0.0f64; tier_count];
    let mut busy: Vec<Vec<(f64, f64)>> = vec![Vec::new(); tier_count];
    let mut latencies: Vec<f64> = Vec::with_capacity(measured as usize);
    let mut tier_requests = vec![0u64; tier_count];
    let mut tier_reads = vec![0u64; tier_count];
    let mut tier_writes = vec![0u64; tier_count];
    let mut issued: u64 = 0;
    // Measurement window: first to last departure among measured requests.
    // Counting the M-1 departure intervals in between gives a throughput
    // estimate free of the one-sojourn edge bias that an issue-to-completion
    // window carries when the in-flight population is a visible fraction of
    // the measured quota.
    let mut window_start = f64::INFINITY;
    let mut window_end = 0.0f64;
    let mut clock_end = 0.0f64;

    while let Some(Reverse(event)) = heap.pop() {
        // Once the measurement quota is fully issued, window_end is final;
        // slots then issue unmeasured cooldown requests that keep the
        // servers loaded through the end of the window, and retire after.
        if issued >= warmup + measured && event.time >= window_end {
            continue;
        }
        let stream = event.slot as usize / config.outstanding_per_stream as usize;
        let page = match config.pattern {
            AccessPattern::UniformRandom => rng.gen_range(0..config.page_count),
            AccessPattern::Sequential => {
                let page = page_cursor[stream];
                page_cursor[stream] = (page + 1) % config.page_count;
                page
            }
        };
        let tier = page_map.tier_of(page);
        let is_read = pattern_pos[stream] < reads;
        pattern_pos[stream] = (pattern_pos[stream] + 1) % cycle;

        let start = event.time.max(server_free[tier]);
        let end = start + service_ns[tier];
        server_free[tier] = end;
        let completion = end + pipeline_ns[tier];
        clock_end = clock_end.max(completion);

        busy[tier].push((start, end));

        let index = issued;
        issued += 1;
        if index >= warmup && index < warmup + measured {
            latencies.push(completion - event.time);
            tier_requests[tier] += 1;
            if is_read {
                tier_reads[tier] += 1;
            } else {
                tier_writes[tier] += 1;
            }
            window_start = window_start.min(completion);
            window_end = window_end.max(completion);
        }

        heap.push(Reverse(Event {
            time: completion,
            seq,
            slot: event.slot,
        }));
        seq += 1;
    }

    let span = window_end - window_start;
    debug_assert!(span > 0.0);
    let bytes = (measured - 1) as f64 * f64::from(config.transfer_bytes);
    let mut tier_utilization = vec![0.0f64; tier_count];
    for tier in 0..tier_count {
        let occupied: f64 = busy[tier]
            .iter()
            .map(|&(s, e)| (e.min(window_end) - s.max(window_start)).max(0.0))
            .sum();
        tier_utilization[tier] = occupied / span;
    }

    latencies.sort_by(f64::total_cmp);
    let mean = latencies.iter().sum::<f64>() / latencies.len() as f64;
    let percentile = |q: f64| -> f64 {
        let rank = (q * latencies.len() as f64).ceil() as usize;
        latencies[rank.max(1) - 1]
    };

    Ok(SimReport {
        achieved_gbps: bytes / span,
        mean_latency_ns: mean,
        p50_latency_ns: percentile(0.50),
        p95_latency_ns: percentile(0.95),
        p99_latency_ns: percentile(0.99),
        tier_requests,
        tier_reads,
        tier_writes,
        tier_utilization,
        total_time_ns: clock_end,
        seed: config.seed,
    })
}

/// What a sweep varies.
#[derive(Debug, Clone)]
pub enum SweepAxis {
    /// Stream counts; total concurrency is streams * outstanding_per_stream.
    Concurrency(Vec<u32>),
    Weights(Vec<InterleaveWeights>),
}

#[derive(Debug)]
pub struct SweepPoint {
    pub label: String,
    pub result: Result<SimReport, SimError>,
}

/// Run the base config once per axis value. Point i runs with seed
/// `base.seed + i`; a failing point reports its error without stopping the
/// rest of the sweep.
pub fn sweep(profiles: &ProfileSet, base: &SimConfig, axis: &SweepAxis) -> Vec<SweepPoint> {
    let mut points = Vec::new();
    match axis {
        SweepAxis::Concurrency(levels) => {
            for (i, &streams) in levels.iter().enumerate() {
                let mut config = base.clone();
                config.streams = streams;
                config.seed = base.seed.wrapping_add(i as u64);
                let label = format!(
                    "c={}",
                    u64::from(streams) * u64::from(config.outstanding_per_stream)
                );
                points.push(SweepPoint {
                    label,
                    result: run(profiles, &config),
                });
            }
        }
        SweepAxis::Weights(sets) => {
            for (i, weights) in sets.iter().enumerate() {
                let mut config = base.clone();
                config.weights = weights.clone();
                // Keep whole interleave cycles so page fractions stay exact.
                let total = weights.total() as usize;
                let rem = config.page_count % total;
                if rem != 0 {
                    config.page_count += total - rem;
                }
                config.seed = base.seed.wrapping_add(i as u64);
                points.push(SweepPoint {
                    label: weights.label(),
                    result: run(profiles, &config),
                });
            }
        }
    }
    points
}
