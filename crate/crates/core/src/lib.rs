//! Bandwidth modeling and simulation for weighted page interleaving across
//! tiered memory.
//!
//! When a host backs part of its address space with a slower tier (CXL
//! expanders, a remote socket), spreading pages across tiers in a small
//! integer ratio can beat keeping everything in fast DRAM: the tiers serve
//! traffic in parallel and their bandwidths add, up to the point where one
//! tier saturates. This crate models that tradeoff from a handful of
//! per-tier calibration measurements:
//!
//! - [`calibration`] loads per-tier bandwidth tables keyed by read/write mix
//!   and interpolates between measured points.
//! - [`policy`] reproduces the kernel's weighted page interleaving, mapping
//!   page indices to tiers in runs of `w` pages per tier.
//! - [`analytic`] predicts aggregate bandwidth for a weight vector, finds
//!   the best small-integer weights, and estimates loaded latency under an
//!   offered demand.
//! - [`sim`] checks the model with a deterministic closed-loop event
//!   simulation of per-tier FIFO servers.
//! - [`report`] turns application measurements and sweep results into
//!   speedup tables and throughput-latency curves.
//! - [`dataset`] bundles a calibrated two-tier reference profile and the
//!   measurements taken on that host.
//!
//! The `memweave` binary wraps all of this in a CLI; the companion FFI
//! crate exposes the same operations over a C ABI.

pub mod analytic;
pub mod calibration;
pub mod dataset;
pub mod policy;
pub mod report;
pub mod sim;

pub use analytic::{
    loaded_latency, mixture_latency, optimal_fraction, predict_bandwidth, recommend_weights,
    recommend_weights_for_demand, AnalyticError, DemandPoint, LatencyModelKind, Prediction,
    NEAR_TIE_MARGIN,
};
pub use calibration::{
    load_profiles, parse_profiles, CalibrationError, CalibrationPoint, ProfileSet, TierKind,
    TierProfile, WorkloadMix, WriteKind,
};
pub use policy::{
    allocate, next_tier, AllocatorCursor, InterleaveWeights, PageMap, WeightsError,
    MAX_WEIGHT_VALUE, PAGE_SIZE_BYTES,
};
pub use report::{
    emit_curve, geomean, load_workloads, mlc_table, summarize, CurvePoint, Direction, Metric,
    MlcRow, ReportError, SpeedupRow, SummaryReport, WorkloadRecord,
};
pub use sim::{run, sweep, AccessPattern, SimConfig, SimError, SimReport, SweepAxis, SweepPoint};

/// Quote a CSV field per RFC 4180 when it holds a comma, quote, or newline.
pub(crate) fn csv_field(value: &str) -> String {
    if value.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}
