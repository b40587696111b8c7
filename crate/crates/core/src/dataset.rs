//! Bundled calibration data and reference measurements.
//!
//! The crate ships one calibrated profile (a two-socket Xeon 6 host with
//! Micron CZ122 CXL expanders, one DRAM tier and one CXL tier) plus the
//! measured aggregate-bandwidth tables and application results gathered on
//! that machine. Tests use these as ground truth; the CLI falls back to the
//! bundled profile when none is given.

use std::sync::OnceLock;

use crate::calibration::{self, ProfileSet, WorkloadMix, WriteKind};
use crate::report::{self, WorkloadRecord};

/// JSON source of the bundled profile, identical to profiles/micron_xeon6.json.
pub fn bundled_profile_json() -> &'static str {
    include_str!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../profiles/micron_xeon6.json"
    ))
}

/// The bundled profile, parsed. Panics only if the embedded JSON is invalid,
/// which the test suite rules out.
pub fn bundled_profiles() -> ProfileSet {
    static CACHE: OnceLock<ProfileSet> = OnceLock::new();
    CACHE
        .get_or_init(|| {
            calibration::parse_profiles(bundled_profile_json(), "bundled profile")
                .expect("bundled profile must parse")
        })
        .clone()
}

/// JSON source of the bundled application results.
pub fn bundled_workloads_json() -> &'static str {
    include_str!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../data/workloads.json"
    ))
}

/// The bundled application results, parsed.
pub fn bundled_workloads() -> Vec<WorkloadRecord> {
    report::parse_workloads(bundled_workloads_json(), "bundled workloads")
        .expect("bundled workloads must parse")
}

/// Aggregate bandwidth measured on the reference host for one mix across
/// interleave ratios. Rows are (dram_weight, cxl_weight, gbps).
#[derive(Debug, Clone, Copy)]
pub struct ReferenceSweep {
    pub name: &'static str,
    pub reads: u32,
    pub writes: u32,
    pub write_kind: WriteKind,
    pub rows: &'static [(u32, u32, f64)],
}

impl ReferenceSweep {
    pub fn mix(&self) -> WorkloadMix {
        WorkloadMix::new(self.reads, self.writes, self.write_kind)
            .expect("reference mixes are valid")
            .with_label(self.name)
    }
}

/// Measured aggregate bandwidth by interleave ratio, one table per mix.
/// (1,0) is the all-DRAM baseline and (0,1) the all-CXL floor.
pub const REFERENCE_SWEEPS: &[ReferenceSweep] = &[
    ReferenceSweep {
        name: "all-reads",
        reads: 1,
        writes: 0,
        write_kind: WriteKind::Regular,
        rows: &[
            (1, 0, 556.0),
            (1, 1, 394.0),
            (2, 1, 590.0),
            (5, 2, 669.0),
            (3, 1, 690.0),
            (4, 1, 677.0),
            (0, 1, 205.0),
        ],
    },
    ReferenceSweep {
        name: "2:1 read:write",
        reads: 2,
        writes: 1,
        write_kind: WriteKind::Regular,
        rows: &[
            (1, 0, 474.0),
            (1, 1, 422.0),
            (2, 1, 624.0),
            (5, 2, 636.0),
            (3, 1, 617.0),
            (4, 1, 586.0),
            (0, 1, 208.0),
        ],
    },
    ReferenceSweep {
        name: "1:1 read:write",
        reads: 1,
        writes: 1,
        write_kind: WriteKind::Regular,
        rows: &[
            (1, 0, 446.0),
            (1, 1, 409.0),
            (2, 1, 621.0),
            (5, 2, 614.0),
            (3, 1, 585.0),
            (4, 1, 551.0),
            (0, 1, 214.0),
        ],
    },
    ReferenceSweep {
        name: "2:1 non-temporal",
        reads: 2,
        writes: 1,
        write_kind: WriteKind::NonTemporal,
        rows: &[
            (1, 0, 466.0),
            (1, 1, 390.0),
            (2, 1, 533.0),
            (5, 2, 607.0),
            (3, 1, 601.0),
            (4, 1, 572.0),
            (0, 1, 189.0),
        ],
    },
];

/// Geometric-mean speedup of the best interleave ratio over the all-DRAM
/// baseline across the six reference applications, as published for the
/// reference host.
pub const REFERENCE_GEOMEAN_SPEEDUP: f64 = 1.24;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::TierKind;

    #[test]
    fn bundled_profile_parses_and_matches_disk_copy() {
        let profiles = bundled_profiles();
        assert_eq!(profiles.len(), 2);
        assert_eq!(profiles.tier(0).name(), "dram");
        assert_eq!(profiles.tier(0).kind(), TierKind::Dram);
        assert_eq!(profiles.tier(0).unloaded_latency_ns(), 100.0);
        assert_eq!(profiles.tier(1).name(), "cxl");
        assert_eq!(profiles.tier(1).kind(), TierKind::Cxl);
        assert_eq!(profiles.tier(1).unloaded_latency_ns(), 250.0);
        let disk = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../profiles/micron_xeon6.json"
        ))
        .unwrap();
        assert_eq!(bundled_profile_json(), disk);
    }

    #[test]
    fn bundled_workloads_cover_six_applications() {
        let records = bundled_workloads();
        assert_eq!(records.len(), 6);
        let names: Vec<&str> = records.iter().map(|r| r.workload.as_str()).collect();
        assert!(names.contains(&"LLM inference"));
        assert!(names.contains(&"HPCG"));
    }

    #[test]
    fn reference_sweeps_share_shape_and_endpoints() {
        assert_eq!(REFERENCE_SWEEPS.len(), 4);
        for sweep in REFERENCE_SWEEPS {
            assert_eq!(sweep.rows.len(), 7);
            assert_eq!(sweep.rows[0].0, 1);
            assert_eq!(sweep.rows[0].1, 0);
            let last = sweep.rows[sweep.rows.len() - 1];
            assert_eq!(last.0, 0);
            assert_eq!(last.1, 1);
            for &(_, _, gbps) in sweep.rows {
                assert!(gbps > 0.0);
            }
            let mix = sweep.mix();
            assert_eq!(mix.label(), Some(sweep.name));
        }
        // Single-tier rows agree with the calibration tables they came from.
        let profiles = bundled_profiles();
        for sweep in REFERENCE_SWEEPS {
            let mix = sweep.mix();
            let dram = profiles.tier(0).bandwidth_at(&mix).unwrap();
            let cxl = profiles.tier(1).bandwidth_at(&mix).unwrap();
            assert_eq!(sweep.rows[0].2, dram);
            assert_eq!(sweep.rows[6].2, cxl);
        }
    }
}
