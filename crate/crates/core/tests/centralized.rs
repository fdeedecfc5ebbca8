use cclab::centralized::{
    choose_branch, deliver_best_centralized, place_centralized, place_memory_shared,
    shared_prefix_bits, CentralCacheState, SubfilePartition,
};
use cclab::subsets::binomial;
use cclab::{
    BitString, Branch, CentralizedSystem, DeliveryTranscript, DemandVector, FileLibrary, Params,
    SchemeError, SegmentLabel, SubsetMask,
};

fn corner_rate(k: usize, n: usize, t: usize) -> f64 {
    (k - t) as f64 * (1.0 / (t + 1) as f64).min(n as f64 / k as f64)
}

/// Largest rate error from integer rounding: the split moves by under one
/// bit, and each uncoded part caches `floor(t L / K)` bits, costing under
/// one bit per requested file.
fn rounding_slack(k: usize, n: usize, m: f64, f: usize) -> f64 {
    let s = (k as f64 * m / n as f64).ceil() as usize;
    (corner_rate(k, n, s - 1) - corner_rate(k, n, s) + 2.0 * n.min(k) as f64) / f as f64
}

fn interpolated_rate(k: usize, n: usize, m: f64) -> f64 {
    let kq = k as f64 * m / n as f64;
    let s = kq.ceil();
    let theta = s - kq;
    let s = s as usize;
    if theta < 1e-12 {
        return corner_rate(k, n, s);
    }
    theta * corner_rate(k, n, s - 1) + (1.0 - theta) * corner_rate(k, n, s)
}

#[test]
fn fig1_placement_by_hand() {
    // K = N = 3, M = 1, F = 3: one bit per subfile
    let library = FileLibrary::new(vec![
        BitString::from_bits([true, false, true]),
        BitString::from_bits([false, false, true]),
        BitString::from_bits([true, true, false]),
    ])
    .unwrap();
    let params = Params::new(3, 3, 1.0).unwrap();
    let (partition, cache) = place_centralized(&library, &params).unwrap();
    assert_eq!(partition.subfile_bits(), 1);
    for k in 0..3 {
        assert_eq!(cache.cached_bits(k), 3);
    }
    let CentralCacheState::Coded { contents, .. } = &cache else {
        panic!("coded placement expected");
    };
    // user 0 holds W_{n,{0}}, the first bit of every file
    for n in 0..3 {
        let bit = contents[0][&(n, SubsetMask::from_members([0]))].get(0);
        assert_eq!(bit, library.file(n).get(0));
    }
}

#[test]
fn two_user_exchange_by_hand() {
    let library = FileLibrary::new(vec![
        BitString::from_bits([true, false, true, true]),
        BitString::from_bits([false, true, true, false]),
    ])
    .unwrap();
    let partition = SubfilePartition::split(&library, 2, 1).unwrap();
    let d = DemandVector::from_one_based(&[1, 2], 2).unwrap();
    let system = CentralizedSystem::place(&library, 2, 1).unwrap();
    let tr = system.deliver(&d).unwrap();
    assert_eq!(tr.segments().len(), 1);
    let mut expected = partition.subfile(0, SubsetMask::from_members([1])).clone();
    expected.xor_padded(partition.subfile(1, SubsetMask::from_members([0])));
    assert_eq!(tr.segments()[0].payload, expected);
    assert!((tr.measured_rate() - 0.5).abs() < 1e-12);
    assert_eq!(&system.decode(0, &tr, &d).unwrap(), library.file(0));
}

#[test]
fn fig1_delivery_sends_three_thirds() {
    let library = FileLibrary::random(3, 300, 1);
    let system = CentralizedSystem::place(&library, 3, 1).unwrap();
    for d in DemandVector::all(3, 3) {
        let tr = system.deliver(&d).unwrap();
        assert_eq!(tr.segments().len(), 3);
        assert!(tr.segments().iter().all(|s| s.payload.len() == 100));
        assert_eq!(tr.measured_rate(), 1.0);
    }
}

#[test]
fn uncoded_branch_when_coding_loses() {
    assert_eq!(choose_branch(3, 3, 1), Branch::Coded);
    assert_eq!(choose_branch(10, 2, 1), Branch::Uncoded);
    assert_eq!(choose_branch(10, 2, 2), Branch::Uncoded);

    let library = FileLibrary::random(2, 10, 4);
    let params = Params::new(10, 2, 0.4).unwrap();
    let d = DemandVector::distinct(10, 2);
    let (system, tr) = deliver_best_centralized(&library, &d, &params).unwrap();
    assert_eq!(system.branch(), Branch::Uncoded);
    assert_eq!(tr.segments().len(), 2);
    assert!(tr.segments().iter().all(|s| s.payload.len() == 8));
    assert!((tr.measured_rate() - 1.6).abs() < 1e-12);

    let same = DemandVector::new(vec![1; 10], 2).unwrap();
    let tr = system.deliver(&same).unwrap();
    assert_eq!(tr.segments().len(), 1);
    assert!(matches!(tr.segments()[0].label, SegmentLabel::File(1)));
    for k in 0..10 {
        assert_eq!(&system.decode(k, &tr, &same).unwrap(), library.file(1));
    }
}

#[test]
fn full_memory_needs_nothing() {
    let library = FileLibrary::random(3, 12, 2);
    let system = CentralizedSystem::place(&library, 3, 3).unwrap();
    let d = DemandVector::distinct(3, 3);
    let tr = system.deliver(&d).unwrap();
    assert_eq!(tr.total_bits(), 0);
    for k in 0..3 {
        assert_eq!(&system.decode(k, &tr, &d).unwrap(), library.file(d.of(k)));
    }
}

#[test]
fn empty_caches_at_t_zero() {
    let library = FileLibrary::random(2, 8, 3);
    let system = CentralizedSystem::place(&library, 3, 0).unwrap();
    for k in 0..3 {
        assert_eq!(system.cache().cached_bits(k), 0);
    }
}

#[test]
fn exhaustive_round_trip_small() {
    for k in 2..=3 {
        for n in 2..=3 {
            for t in 0..=k {
                let f = 6 * binomial(k, t) as usize;
                let library = FileLibrary::random(n, f, (k * n + t) as u64);
                let system = CentralizedSystem::place(&library, k, t).unwrap();
                for d in DemandVector::all(k, n) {
                    let tr = system.deliver(&d).unwrap();
                    assert!(tr.measured_rate() <= corner_rate(k, n, t) + 1e-12);
                    for u in 0..k {
                        assert_eq!(&system.decode(u, &tr, &d).unwrap(), library.file(d.of(u)));
                    }
                }
            }
        }
    }
}

#[test]
fn indivisible_and_non_corner_are_rejected() {
    let library = FileLibrary::random(3, 10, 0);
    assert!(matches!(
        SubfilePartition::split(&library, 3, 1),
        Err(SchemeError::IndivisibleFile { .. })
    ));
    let params = Params::new(3, 3, 1.5).unwrap();
    assert!(matches!(place_centralized(&library, &params), Err(SchemeError::NonCornerMemory(_))));
}

#[test]
fn corrupted_transcript_fails_decode_or_output() {
    let library = FileLibrary::random(3, 30, 9);
    let system = CentralizedSystem::place(&library, 3, 1).unwrap();
    let d = DemandVector::distinct(3, 3);
    let tr = system.deliver(&d).unwrap();
    let mut broken = DeliveryTranscript::new(tr.file_bits());
    for (i, seg) in tr.segments().iter().enumerate() {
        let mut payload = seg.payload.clone();
        if i == 0 {
            payload.set(0, !payload.get(0));
        }
        broken.push(seg.label, payload);
    }
    let wrong = (0..3).any(|u| system.decode(u, &broken, &d).ok().as_ref() != Some(library.file(d.of(u))));
    assert!(wrong);
}

#[test]
fn transcript_bytes_round_trip() {
    let library = FileLibrary::random(3, 60, 5);
    let system = CentralizedSystem::place(&library, 4, 2).unwrap();
    let d = DemandVector::from_one_based(&[1, 3, 2, 3], 3).unwrap();
    let tr = system.deliver(&d).unwrap();
    let back = DeliveryTranscript::from_bytes(&tr.to_bytes(), tr.file_bits()).unwrap();
    assert_eq!(back, tr);
}

#[test]
fn memory_sharing_reference_points() {
    for (k, n, m, f, rate) in [(2, 2, 0.5, 8, 1.25), (3, 3, 1.5, 36, 2.0 / 3.0)] {
        let params = Params::new(k, n, m).unwrap().with_file_bits(f).unwrap();
        let library = FileLibrary::random(n, f, 11);
        let system = place_memory_shared(&library, &params).unwrap();
        assert_eq!(system.parts().len(), 2);
        let d = DemandVector::distinct(k, n);
        let tr = system.deliver(&d).unwrap();
        assert!((tr.measured_rate() - rate).abs() < 1e-12, "K={k}: {}", tr.measured_rate());
    }
}

#[test]
fn memory_sharing_prefix_rounding() {
    assert_eq!(shared_prefix_bits(36, 0.5), 18);
    assert_eq!(shared_prefix_bits(37, 0.5), 19);
    assert_eq!(shared_prefix_bits(8, 0.5), 4);
    assert_eq!(shared_prefix_bits(373, 0.8), 299);
}

#[test]
fn memory_sharing_budget_rate_and_decode() {
    for (k, n, m, f) in [
        (2, 2, 0.5, 101),
        (3, 2, 0.9, 97),
        (3, 3, 1.5, 64),
        (4, 2, 1.3, 120),
        (4, 3, 0.4, 50),
        (5, 2, 0.7, 200),
    ] {
        let params = Params::new(k, n, m).unwrap().with_file_bits(f).unwrap();
        let library = FileLibrary::random(n, f, (k * 31 + f) as u64);
        let system = place_memory_shared(&library, &params).unwrap();
        let s = system.s();
        for u in 0..k {
            assert!(
                system.cached_bits(u) as f64 <= m * f as f64 + s as f64 + 1e-9,
                "budget K={k} N={n} M={m} F={f}: {}",
                system.cached_bits(u)
            );
        }
        let d = DemandVector::distinct(k, n);
        let tr = system.deliver(&d).unwrap();
        let err = (tr.measured_rate() - interpolated_rate(k, n, m)).abs();
        assert!(err <= rounding_slack(k, n, m, f) + 1e-12, "rate K={k} N={n} M={m} F={f}: {err}");
        for d in DemandVector::all(k, n) {
            let tr = system.deliver(&d).unwrap();
            for u in 0..k {
                assert_eq!(&system.decode(u, &tr, &d).unwrap(), library.file(d.of(u)));
            }
        }
    }
}

proptest::proptest! {
    #[test]
    fn memory_sharing_invariants(k in 2usize..=5, n in 1usize..=4, j in 1usize..20, f in 20usize..400, seed in 0u64..1000) {
        let m = n as f64 * j as f64 / 20.0;
        let params = Params::new(k, n, m).unwrap().with_file_bits(f).unwrap();
        let library = FileLibrary::random(n, f, seed);
        let system = place_memory_shared(&library, &params).unwrap();
        let s = system.s();
        for u in 0..k {
            proptest::prop_assert!(system.cached_bits(u) as f64 <= m * f as f64 + s as f64 + 1e-9);
        }
        let d = DemandVector::distinct(k, n);
        let tr = system.deliver(&d).unwrap();
        let err = (tr.measured_rate() - interpolated_rate(k, n, m)).abs();
        proptest::prop_assert!(err <= rounding_slack(k, n, m, f) + 1e-12);
        for u in 0..k {
            proptest::prop_assert_eq!(&system.decode(u, &tr, &d).unwrap(), library.file(d.of(u)));
        }
    }
}
