//! Property tests: invariants that must hold for arbitrary inputs, checked
//! against independent straight-line reimplementations where one exists.

use memweave::{
    analytic, policy, report, CalibrationPoint, InterleaveWeights, ProfileSet, TierKind,
    TierProfile, WorkloadMix, WriteKind, NEAR_TIE_MARGIN,
};
use proptest::prelude::*;

fn mix(reads: u32, writes: u32, kind: WriteKind) -> WorkloadMix {
    WorkloadMix::new(reads, writes, kind).unwrap()
}

fn point(reads: u32, writes: u32, kind: WriteKind, gbps: f64) -> CalibrationPoint {
    CalibrationPoint {
        mix: mix(reads, writes, kind),
        gbps,
    }
}

/// Two tiers calibrated at read fractions 1.0, 0.75, 0.5 for regular
/// writes; bandwidths are the free variables.
fn two_tier_set(dram: [f64; 3], cxl: [f64; 3]) -> ProfileSet {
    let build = |name: &str, kind, latency, bws: [f64; 3]| {
        TierProfile::new(
            name,
            kind,
            latency,
            vec![
                point(1, 0, WriteKind::Regular, bws[0]),
                point(3, 1, WriteKind::Regular, bws[1]),
                point(1, 1, WriteKind::Regular, bws[2]),
            ],
        )
        .unwrap()
    };
    ProfileSet::new(vec![
        build("dram", TierKind::Dram, 100.0, dram),
        build("cxl", TierKind::Cxl, 250.0, cxl),
    ])
    .unwrap()
}

proptest! {
    /// Every aligned full-cycle window of a page map holds exactly w_i
    /// pages of tier i, wherever the window sits.
    #[test]
    fn aligned_windows_are_exact(
        raw in proptest::collection::vec(0u32..=32, 1..=4)
            .prop_filter("needs one positive weight", |v| v.iter().any(|&w| w > 0)),
        cycles in 1usize..=20,
    ) {
        let weights = InterleaveWeights::new(raw).unwrap();
        let cycle = weights.total() as usize;
        let map = policy::allocate(cycles * cycle, &weights);
        for window in 0..cycles {
            let mut counts = vec![0u32; weights.len()];
            for page in window * cycle..(window + 1) * cycle {
                counts[map.tier_of(page)] += 1;
            }
            prop_assert_eq!(&counts[..], weights.as_slice());
        }
    }

    /// Interpolated bandwidth always lies between its two bracketing
    /// calibration points.
    #[test]
    fn interpolation_is_bracketed(
        bws in proptest::array::uniform3(1.0f64..1000.0),
        reads in 1u32..=20,
        writes in 0u32..=20,
    ) {
        prop_assume!(writes <= reads); // keeps the read fraction in [0.5, 1.0]
        let tier = TierProfile::new(
            "t",
            TierKind::Other,
            100.0,
            vec![
                point(1, 0, WriteKind::Regular, bws[0]),
                point(3, 1, WriteKind::Regular, bws[1]),
                point(1, 1, WriteKind::Regular, bws[2]),
            ],
        )
        .unwrap();
        let query = mix(reads, writes, WriteKind::Regular);
        let got = tier.bandwidth_at(&query).unwrap();
        let rf = query.read_fraction();
        let (lo, hi) = if rf >= 0.75 { (bws[1], bws[0]) } else { (bws[2], bws[1]) };
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        prop_assert!(got >= lo - 1e-9 && got <= hi + 1e-9,
            "rf {rf}: {got} outside [{lo}, {hi}]");
    }

    /// Non-temporal queries interpolate within the non-temporal family,
    /// closed off by the shared read-only point.
    #[test]
    fn non_temporal_interpolation_is_bracketed(
        read_only in 1.0f64..1000.0,
        nt in 1.0f64..1000.0,
        reads in 3u32..=30,
        writes in 1u32..=10,
    ) {
        prop_assume!(writes * 3 <= reads); // read fraction in [0.75, 1.0]
        let tier = TierProfile::new(
            "t",
            TierKind::Other,
            100.0,
            vec![
                point(1, 0, WriteKind::Regular, read_only),
                point(3, 1, WriteKind::NonTemporal, nt),
            ],
        )
        .unwrap();
        let got = tier.bandwidth_at(&mix(reads, writes, WriteKind::NonTemporal)).unwrap();
        let (lo, hi) = (read_only.min(nt), read_only.max(nt));
        prop_assert!(got >= lo - 1e-9 && got <= hi + 1e-9);
    }

    /// The aggregate can never beat the sum of tier bandwidths, and hits
    /// it only when the traffic split matches the bandwidth split.
    #[test]
    fn aggregate_is_bounded_by_bandwidth_sum(
        dram in proptest::array::uniform3(1.0f64..1000.0),
        cxl in proptest::array::uniform3(1.0f64..1000.0),
        w0 in 0u32..=12,
        w1 in 0u32..=12,
    ) {
        prop_assume!(w0 + w1 > 0);
        let profiles = two_tier_set(dram, cxl);
        let weights = InterleaveWeights::pair(w0, w1).unwrap();
        let query = mix(3, 1, WriteKind::Regular);
        let prediction = analytic::predict_bandwidth(&profiles, &weights, &query).unwrap();
        let ceiling = if w0 > 0 && w1 > 0 { dram[1] + cxl[1] } else if w0 > 0 { dram[1] } else { cxl[1] };
        prop_assert!(prediction.aggregate_gbps <= ceiling * (1.0 + 1e-12));
    }

    /// The weight search agrees exactly with a brute-force scan that
    /// restates the documented rule from scratch: score every vector whose
    /// weights sum to at most the budget, keep those within the near-tie
    /// margin of the best, then take the lowest total, DRAM-heaviest,
    /// lexicographically smallest survivor.
    #[test]
    fn recommendation_matches_brute_force_oracle(
        dram in proptest::array::uniform3(50.0f64..1000.0),
        cxl in proptest::array::uniform3(50.0f64..1000.0),
        max_weight in 1u32..=6,
    ) {
        let profiles = two_tier_set(dram, cxl);
        let query = mix(1, 0, WriteKind::Regular);
        let got = analytic::recommend_weights(&profiles, &query, max_weight).unwrap().0;

        let score = |w0: u32, w1: u32| -> f64 {
            let total = f64::from(w0 + w1);
            let mut agg = f64::INFINITY;
            if w0 > 0 {
                agg = agg.min(dram[0] / (f64::from(w0) / total));
            }
            if w1 > 0 {
                agg = agg.min(cxl[0] / (f64::from(w1) / total));
            }
            agg
        };
        let mut best = f64::NEG_INFINITY;
        for w0 in 0..=max_weight {
            for w1 in 0..=max_weight.saturating_sub(w0) {
                if w0 + w1 == 0 {
                    continue;
                }
                best = best.max(score(w0, w1));
            }
        }
        let mut pick: Option<(u32, u32)> = None;
        for w0 in 0..=max_weight {
            for w1 in 0..=max_weight.saturating_sub(w0) {
                if w0 + w1 == 0 || score(w0, w1) < best * (1.0 - NEAR_TIE_MARGIN) {
                    continue;
                }
                let better = match pick {
                    None => true,
                    Some((p0, p1)) => {
                        let (ct, pt) = (w0 + w1, p0 + p1);
                        ct < pt || (ct == pt && w0 > p0)
                    }
                };
                if better {
                    pick = Some((w0, w1));
                }
            }
        }
        let (p0, p1) = pick.unwrap();
        prop_assert_eq!(got.as_slice(), &[p0, p1][..]);
    }

    /// Geometric mean is order-free and scales like the n-th root.
    #[test]
    fn geomean_permutation_and_scaling(
        values in proptest::collection::vec(0.1f64..10.0, 1..=8),
        rotate in 0usize..8,
        scale in 0.5f64..2.0,
    ) {
        let base = report::geomean(&values).unwrap();
        let mut rotated = values.clone();
        rotated.rotate_left(rotate % values.len());
        let permuted = report::geomean(&rotated).unwrap();
        prop_assert!((base - permuted).abs() <= 1e-9 * base.abs());

        let mut scaled = values.clone();
        scaled[0] *= scale;
        let expected = base * scale.powf(1.0 / values.len() as f64);
        let got = report::geomean(&scaled).unwrap();
        prop_assert!((got - expected).abs() <= 1e-9 * expected.abs());
    }
}
