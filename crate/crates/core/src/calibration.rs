//! Measured bandwidth tables for memory tiers.
//!
//! A [`TierProfile`] records aggregate bandwidth at a handful of read/write
//! mixes plus the tier's unloaded access latency. Between calibration points,
//! [`TierProfile::bandwidth_at`] interpolates linearly in read fraction within
//! a write-kind family; read-only points close the upper end of both families.
//! Outside the calibrated range lookups fail rather than extrapolate.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("failed to read profile file {path}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("failed to parse profile {origin}")]
    Parse {
        origin: String,
        source: serde_json::Error,
    },
    #[error("invalid workload mix: {reason}")]
    InvalidMix { reason: String },
    #[error("profile set has no tiers")]
    NoTiers,
    #[error("duplicate tier name {name:?}")]
    DuplicateTierName { name: String },
    #[error("tier {tier:?} has no calibration points")]
    EmptyPoints { tier: String },
    #[error("tier {tier:?} point {index}: bandwidth must be positive, got {gbps}")]
    NonPositiveBandwidth {
        tier: String,
        index: usize,
        gbps: f64,
    },
    #[error("tier {tier:?}: unloaded latency must be positive, got {latency_ns}")]
    NonPositiveLatency { tier: String, latency_ns: f64 },
    #[error("tier {tier:?}: duplicate calibration point at read fraction {read_fraction} ({write_kind} writes)")]
    DuplicatePoint {
        tier: String,
        read_fraction: f64,
        write_kind: WriteKind,
    },
    #[error("tier {tier:?}: read fraction {read_fraction:.4} outside calibrated range [{min:.4}, {max:.4}] for {write_kind} writes")]
    OutOfRange {
        tier: String,
        read_fraction: f64,
        min: f64,
        max: f64,
        write_kind: WriteKind,
    },
    #[error("tier {tier:?}: no calibration points for {write_kind} writes")]
    MissingFamily { tier: String, write_kind: WriteKind },
}

/// How writes in a mix reach memory: through the cache hierarchy or as
/// streaming stores that bypass it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WriteKind {
    Regular,
    NonTemporal,
}

impl fmt::Display for WriteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WriteKind::Regular => f.write_str("regular"),
            WriteKind::NonTemporal => f.write_str("non_temporal"),
        }
    }
}

/// A read/write ratio, e.g. 2 reads : 1 write.
///
/// `reads + writes >= 1`, and non-temporal mixes carry at least one write.
/// The textual form is `<R>r<W>w` with an optional `nt` suffix: `2r1w`,
/// `1r0w`, `2r1wnt`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkloadMix {
    reads: u32,
    writes: u32,
    write_kind: WriteKind,
    label: Option<String>,
}

impl WorkloadMix {
    pub fn new(reads: u32, writes: u32, write_kind: WriteKind) -> Result<Self, CalibrationError> {
        if reads == 0 && writes == 0 {
            return Err(CalibrationError::InvalidMix {
                reason: "reads + writes must be at least 1".into(),
            });
        }
        if write_kind == WriteKind::NonTemporal && writes == 0 {
            return Err(CalibrationError::InvalidMix {
                reason: "a non-temporal mix needs at least one write".into(),
            });
        }
        Ok(WorkloadMix {
            reads,
            writes,
            write_kind,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn reads(&self) -> u32 {
        self.reads
    }

    pub fn writes(&self) -> u32 {
        self.writes
    }

    pub fn write_kind(&self) -> WriteKind {
        self.write_kind
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn is_read_only(&self) -> bool {
        self.writes == 0
    }

    /// reads / (reads + writes).
    pub fn read_fraction(&self) -> f64 {
        f64::from(self.reads) / f64::from(self.reads + self.writes)
    }

    /// Total operations in one cycle of the mix pattern.
    pub fn cycle_len(&self) -> u32 {
        self.reads + self.writes
    }
}

impl fmt::Display for WorkloadMix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}r{}w", self.reads, self.writes)?;
        if self.write_kind == WriteKind::NonTemporal {
            f.write_str("nt")?;
        }
        Ok(())
    }
}

impl FromStr for WorkloadMix {
    type Err = CalibrationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: String| CalibrationError::InvalidMix { reason };
        let rest = s.trim();
        let r_pos = rest
            .find('r')
            .ok_or_else(|| bad(format!("{s:?} is not of the form <R>r<W>w[nt]")))?;
        let (reads_str, rest) = rest.split_at(r_pos);
        let rest = &rest[1..];
        let w_pos = rest
            .find('w')
            .ok_or_else(|| bad(format!("{s:?} is not of the form <R>r<W>w[nt]")))?;
        let (writes_str, suffix) = rest.split_at(w_pos);
        let suffix = &suffix[1..];
        let reads: u32 = reads_str
            .parse()
            .map_err(|_| bad(format!("bad read count {reads_str:?} in {s:?}")))?;
        let writes: u32 = writes_str
            .parse()
            .map_err(|_| bad(format!("bad write count {writes_str:?} in {s:?}")))?;
        let write_kind = match suffix {
            "" => WriteKind::Regular,
            "nt" => WriteKind::NonTemporal,
            other => return Err(bad(format!("unexpected suffix {other:?} in {s:?}"))),
        };
        WorkloadMix::new(reads, writes, write_kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TierKind {
    Dram,
    Cxl,
    Other,
}

impl fmt::Display for TierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TierKind::Dram => f.write_str("dram"),
            TierKind::Cxl => f.write_str("cxl"),
            TierKind::Other => f.write_str("other"),
        }
    }
}

/// One measured point: aggregate bandwidth for a tier driven at a mix.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationPoint {
    pub mix: WorkloadMix,
    pub gbps: f64,
}

/// A memory tier's calibration table.
#[derive(Debug, Clone)]
pub struct TierProfile {
    name: String,
    kind: TierKind,
    unloaded_latency_ns: f64,
    points: Vec<CalibrationPoint>,
}

impl TierProfile {
    pub fn new(
        name: impl Into<String>,
        kind: TierKind,
        unloaded_latency_ns: f64,
        points: Vec<CalibrationPoint>,
    ) -> Result<Self, CalibrationError> {
        let name = name.into();
        if points.is_empty() {
            return Err(CalibrationError::EmptyPoints { tier: name });
        }
        if unloaded_latency_ns <= 0.0 || unloaded_latency_ns.is_nan() {
            return Err(CalibrationError::NonPositiveLatency {
                tier: name,
                latency_ns: unloaded_latency_ns,
            });
        }
        for (index, p) in points.iter().enumerate() {
            if p.gbps <= 0.0 || p.gbps.is_nan() {
                return Err(CalibrationError::NonPositiveBandwidth {
                    tier: name,
                    index,
                    gbps: p.gbps,
                });
            }
        }
        // Point identity is (read fraction, write kind); two points that agree
        // on both would make the lookup ambiguous.
        for (i, a) in points.iter().enumerate() {
            for b in points.iter().skip(i + 1) {
                if a.mix.read_fraction().to_bits() == b.mix.read_fraction().to_bits()
                    && a.mix.write_kind() == b.mix.write_kind()
                {
                    return Err(CalibrationError::DuplicatePoint {
                        tier: name,
                        read_fraction: a.mix.read_fraction(),
                        write_kind: a.mix.write_kind(),
                    });
                }
            }
        }
        Ok(TierProfile {
            name,
            kind,
            unloaded_latency_ns,
            points,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> TierKind {
        self.kind
    }

    pub fn unloaded_latency_ns(&self) -> f64 {
        self.unloaded_latency_ns
    }

    pub fn points(&self) -> &[CalibrationPoint] {
        &self.points
    }

    /// Calibration points that bound the requested write kind: points of that
    /// kind with writes, plus read-only points shared by both families.
    fn family(&self, kind: WriteKind) -> Vec<(f64, f64)> {
        let mut picked: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter(|p| p.mix.is_read_only() || (p.mix.write_kind() == kind && p.mix.writes() > 0))
            .map(|p| (p.mix.read_fraction(), p.gbps))
            .collect();
        picked.sort_by(|a, b| a.0.total_cmp(&b.0));
        picked
    }

    /// Bandwidth for a mix: the stored value at an exact calibration point,
    /// otherwise linear interpolation in read fraction within the mix's
    /// write-kind family. Read fractions outside the family's calibrated
    /// range are an error; there is no extrapolation.
    pub fn bandwidth_at(&self, mix: &WorkloadMix) -> Result<f64, CalibrationError> {
        let rf = mix.read_fraction();
        for p in &self.points {
            if p.mix.read_fraction().to_bits() == rf.to_bits()
                && p.mix.write_kind() == mix.write_kind()
            {
                return Ok(p.gbps);
            }
        }
        if !self
            .points
            .iter()
            .any(|p| p.mix.write_kind() == mix.write_kind() && p.mix.writes() > 0)
        {
            // A lone read-only point cannot close an interval below 1.0.
            return Err(CalibrationError::MissingFamily {
                tier: self.name.clone(),
                write_kind: mix.write_kind(),
            });
        }
        let family = self.family(mix.write_kind());
        let (min, _) = family[0];
        let (max, _) = family[family.len() - 1];
        if rf < min || rf > max {
            return Err(CalibrationError::OutOfRange {
                tier: self.name.clone(),
                read_fraction: rf,
                min,
                max,
                write_kind: mix.write_kind(),
            });
        }
        let seg = family
            .windows(2)
            .find(|w| rf >= w[0].0 && rf <= w[1].0)
            .expect("read fraction inside family range has a bracketing segment");
        let (lo_rf, lo_bw) = seg[0];
        let (hi_rf, hi_bw) = seg[1];
        let t = (rf - lo_rf) / (hi_rf - lo_rf);
        Ok(lo_bw + t * (hi_bw - lo_bw))
    }
}

/// An ordered set of tier profiles. Index 0 is the lowest-latency tier by
/// convention; interleave weights and predictions index tiers in this order.
#[derive(Debug, Clone)]
pub struct ProfileSet {
    tiers: Vec<TierProfile>,
}

impl ProfileSet {
    pub fn new(tiers: Vec<TierProfile>) -> Result<Self, CalibrationError> {
        if tiers.is_empty() {
            return Err(CalibrationError::NoTiers);
        }
        for (i, a) in tiers.iter().enumerate() {
            if tiers.iter().skip(i + 1).any(|b| b.name == a.name) {
                return Err(CalibrationError::DuplicateTierName {
                    name: a.name.clone(),
                });
            }
        }
        Ok(ProfileSet { tiers })
    }

    pub fn tiers(&self) -> &[TierProfile] {
        &self.tiers
    }

    pub fn len(&self) -> usize {
        self.tiers.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tier(&self, index: usize) -> &TierProfile {
        &self.tiers[index]
    }

    /// Bandwidth of every tier at the mix, in tier order.
    pub fn bandwidths_at(&self, mix: &WorkloadMix) -> Result<Vec<f64>, CalibrationError> {
        self.tiers.iter().map(|t| t.bandwidth_at(mix)).collect()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    tiers: Vec<TierEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TierEntry {
    name: String,
    kind: TierKind,
    unloaded_latency_ns: f64,
    points: Vec<PointEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PointEntry {
    reads: u32,
    writes: u32,
    write_kind: WriteKind,
    gbps: f64,
    #[serde(default)]
    label: Option<String>,
}

/// Parse a profile set from JSON text. `origin` names the source in errors
/// (a file path, or something like "bundled").
pub fn parse_profiles(json: &str, origin: &str) -> Result<ProfileSet, CalibrationError> {
    let file: ProfileFile =
        serde_json::from_str(json).map_err(|source| CalibrationError::Parse {
            origin: origin.to_string(),
            source,
        })?;
    let mut tiers = Vec::with_capacity(file.tiers.len());
    for entry in file.tiers {
        let mut points = Vec::with_capacity(entry.points.len());
        for (index, p) in entry.points.into_iter().enumerate() {
            let mix = WorkloadMix::new(p.reads, p.writes, p.write_kind).map_err(|e| {
                CalibrationError::InvalidMix {
                    reason: format!("tier {:?} point {index}: {e}", entry.name),
                }
            })?;
            let mix = match p.label {
                Some(label) => mix.with_label(label),
                None => mix,
            };
            points.push(CalibrationPoint { mix, gbps: p.gbps });
        }
        tiers.push(TierProfile::new(
            entry.name,
            entry.kind,
            entry.unloaded_latency_ns,
            points,
        )?);
    }
    ProfileSet::new(tiers)
}

/// Load and validate a profile set from a JSON file.
pub fn load_profiles(path: impl AsRef<Path>) -> Result<ProfileSet, CalibrationError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CalibrationError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_profiles(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dram() -> TierProfile {
        crate::dataset::bundled_profiles().tier(0).clone()
    }

    fn mix(s: &str) -> WorkloadMix {
        s.parse().unwrap()
    }

    #[test]
    fn mix_invariants() {
        assert!(WorkloadMix::new(0, 0, WriteKind::Regular).is_err());
        assert!(WorkloadMix::new(3, 0, WriteKind::NonTemporal).is_err());
        assert!(WorkloadMix::new(0, 1, WriteKind::Regular).is_ok());
        assert!(WorkloadMix::new(2, 1, WriteKind::NonTemporal).is_ok());
    }

    #[test]
    fn mix_parse_and_display_round_trip() {
        for s in ["1r0w", "2r1w", "1r1w", "2r1wnt", "0r1w", "10r3wnt"] {
            assert_eq!(mix(s).to_string(), s);
        }
        assert!("".parse::<WorkloadMix>().is_err());
        assert!("2x1w".parse::<WorkloadMix>().is_err());
        assert!("2r1z".parse::<WorkloadMix>().is_err());
        assert!("2r1wx".parse::<WorkloadMix>().is_err());
        assert!("0r0w".parse::<WorkloadMix>().is_err());
        assert!("2r0wnt".parse::<WorkloadMix>().is_err());
    }

    #[test]
    fn read_fraction_values() {
        assert_eq!(mix("1r0w").read_fraction(), 1.0);
        assert_eq!(mix("1r1w").read_fraction(), 0.5);
        assert_eq!(mix("2r1w").read_fraction(), 2.0 / 3.0);
        // Equivalent ratios land on the same f64.
        assert_eq!(
            mix("2r1w").read_fraction().to_bits(),
            mix("4r2w").read_fraction().to_bits()
        );
    }

    #[test]
    fn exact_point_lookup_is_bit_exact() {
        let d = dram();
        assert_eq!(d.bandwidth_at(&mix("1r0w")).unwrap(), 556.0);
        assert_eq!(d.bandwidth_at(&mix("3r1w")).unwrap(), 486.0);
        assert_eq!(d.bandwidth_at(&mix("2r1w")).unwrap(), 474.0);
        assert_eq!(d.bandwidth_at(&mix("2r1wnt")).unwrap(), 466.0);
        assert_eq!(d.bandwidth_at(&mix("1r1w")).unwrap(), 446.0);
        // An equivalent ratio hits the same stored point.
        assert_eq!(d.bandwidth_at(&mix("4r2w")).unwrap(), 474.0);
        assert_eq!(d.bandwidth_at(&mix("5r0w")).unwrap(), 556.0);
    }

    #[test]
    fn interpolates_between_regular_points() {
        // 0.70 sits between 2r1w (2/3 -> 474) and 3r1w (3/4 -> 486).
        let d = dram();
        let got = d.bandwidth_at(&mix("7r3w")).unwrap();
        assert_relative_eq!(got, 478.8, max_relative = 1e-9);
    }

    #[test]
    fn read_only_point_closes_non_temporal_family() {
        // nt family for dram: 2/3 -> 466 plus the shared read-only 1.0 -> 556.
        let d = dram();
        let got = d.bandwidth_at(&mix("5r1wnt")).unwrap();
        let expect = 466.0 + ((5.0 / 6.0 - 2.0 / 3.0) / (1.0 - 2.0 / 3.0)) * (556.0 - 466.0);
        assert_relative_eq!(got, expect, max_relative = 1e-12);
        assert_relative_eq!(got, 511.0, max_relative = 1e-9);
    }

    #[test]
    fn out_of_range_is_an_error_not_extrapolation() {
        let d = dram();
        let err = d.bandwidth_at(&mix("3r7w")).unwrap_err();
        match err {
            CalibrationError::OutOfRange { min, max, .. } => {
                assert_relative_eq!(min, 0.5);
                assert_relative_eq!(max, 1.0);
            }
            other => panic!("expected OutOfRange, got {other:?}"),
        }
        // Below the nt family's lower knot as well.
        assert!(matches!(
            d.bandwidth_at(&mix("1r1wnt")),
            Err(CalibrationError::OutOfRange { .. })
        ));
    }

    #[test]
    fn missing_family_is_reported() {
        let p = TierProfile::new(
            "t",
            TierKind::Other,
            100.0,
            vec![
                CalibrationPoint {
                    mix: mix("1r0w"),
                    gbps: 100.0,
                },
                CalibrationPoint {
                    mix: mix("1r1w"),
                    gbps: 80.0,
                },
            ],
        )
        .unwrap();
        assert!(matches!(
            p.bandwidth_at(&mix("2r1wnt")),
            Err(CalibrationError::MissingFamily {
                write_kind: WriteKind::NonTemporal,
                ..
            })
        ));
        // The read-only point alone cannot close a regular interval either.
        let ro_only = TierProfile::new(
            "t",
            TierKind::Other,
            100.0,
            vec![CalibrationPoint {
                mix: mix("1r0w"),
                gbps: 100.0,
            }],
        )
        .unwrap();
        assert!(matches!(
            ro_only.bandwidth_at(&mix("2r1w")),
            Err(CalibrationError::MissingFamily { .. })
        ));
        assert_eq!(ro_only.bandwidth_at(&mix("1r0w")).unwrap(), 100.0);
    }

    #[test]
    fn validation_rejects_bad_tables() {
        let dup = TierProfile::new(
            "t",
            TierKind::Dram,
            100.0,
            vec![
                CalibrationPoint {
                    mix: mix("1r0w"),
                    gbps: 10.0,
                },
                CalibrationPoint {
                    mix: mix("2r0w"),
                    gbps: 11.0,
                },
            ],
        );
        assert!(matches!(dup, Err(CalibrationError::DuplicatePoint { .. })));

        let neg = TierProfile::new(
            "t",
            TierKind::Dram,
            100.0,
            vec![CalibrationPoint {
                mix: mix("1r0w"),
                gbps: 0.0,
            }],
        );
        assert!(matches!(
            neg,
            Err(CalibrationError::NonPositiveBandwidth { index: 0, .. })
        ));

        assert!(matches!(
            TierProfile::new(
                "t",
                TierKind::Dram,
                0.0,
                vec![CalibrationPoint {
                    mix: mix("1r0w"),
                    gbps: 1.0,
                }]
            ),
            Err(CalibrationError::NonPositiveLatency { .. })
        ));

        assert!(matches!(
            TierProfile::new("t", TierKind::Dram, 100.0, vec![]),
            Err(CalibrationError::EmptyPoints { .. })
        ));
    }

    #[test]
    fn profile_set_rejects_duplicate_names() {
        let t = dram();
        let mut u = dram();
        u.name = "dram".into();
        assert!(matches!(
            ProfileSet::new(vec![t, u]),
            Err(CalibrationError::DuplicateTierName { .. })
        ));
        assert!(matches!(
            ProfileSet::new(vec![]),
            Err(CalibrationError::NoTiers)
        ));
    }

    #[test]
    fn parse_rejects_malformed_json() {
        assert!(matches!(
            parse_profiles("{", "test"),
            Err(CalibrationError::Parse { .. })
        ));
        assert!(matches!(
            parse_profiles(r#"{"tiers": []}"#, "test"),
            Err(CalibrationError::NoTiers)
        ));
        // Unknown fields are rejected, catching schema typos.
        let extra = r#"{"tiers":[{"name":"a","kind":"dram","unloaded_latency_ns":1,
            "points":[{"reads":1,"writes":0,"write_kind":"regular","gbps":1,"extra":2}]}]}"#;
        assert!(matches!(
            parse_profiles(extra, "test"),
            Err(CalibrationError::Parse { .. })
        ));
        // A non-temporal point with no writes violates the mix invariant.
        let bad_mix = r#"{"tiers":[{"name":"a","kind":"dram","unloaded_latency_ns":1,
            "points":[{"reads":1,"writes":0,"write_kind":"non_temporal","gbps":1}]}]}"#;
        assert!(matches!(
            parse_profiles(bad_mix, "test"),
            Err(CalibrationError::InvalidMix { .. })
        ));
    }

    #[test]
    fn load_profiles_reports_missing_file() {
        assert!(matches!(
            load_profiles("/nonexistent/profile.json"),
            Err(CalibrationError::Io { .. })
        ));
    }
}
