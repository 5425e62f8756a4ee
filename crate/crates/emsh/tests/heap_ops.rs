use em_core::{Device, DeviceParams};
use emsh::{Emsh, EmshError};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// m = 144, sqrt(m) = 12, node capacity B * 12.
fn soft_device(block: usize) -> Device {
    Device::new(DeviceParams::new(block, block * 144).unwrap())
}

fn small_hard_device() -> Device {
    Device::new(DeviceParams::new(4, 4 * 9).unwrap())
}

#[test]
fn one_insert_stays_in_buffer() {
    let dev = soft_device(8);
    let mut h = Emsh::soft(&dev, 0.1).unwrap();
    h.insert(42u64).unwrap();
    assert_eq!(h.buffer_len(), 1);
    assert!(h.root_counts().is_empty());
}

#[test]
fn full_buffer_becomes_one_rank0_tree() {
    let dev = soft_device(8);
    let mut h = Emsh::soft(&dev, 0.1).unwrap();
    let cap = h.params().node_cap();
    for k in 0..cap as u64 {
        h.insert(k).unwrap();
    }
    assert_eq!(h.buffer_len(), 0);
    let counts = h.root_counts();
    assert_eq!(counts.get(&0), Some(&1));
    assert_eq!(counts.len(), 1);
    h.check_invariants();
}

#[test]
fn deletemin_small_returns_minimum() {
    let dev = soft_device(8);
    let mut h = Emsh::soft(&dev, 0.2).unwrap();
    for k in [5u64, 3, 9] {
        h.insert(k).unwrap();
    }
    assert_eq!(h.deletemin().unwrap().key, 3);
}

#[test]
fn deletemin_empty_errors() {
    let dev = soft_device(8);
    let mut h: Emsh<u64> = Emsh::soft(&dev, 0.2).unwrap();
    assert!(matches!(h.deletemin(), Err(EmshError::Empty)));
    let mut hh: Emsh<u64> = Emsh::hard(&small_hard_device()).unwrap();
    assert!(matches!(hh.deletemin(), Err(EmshError::Empty)));
}

#[test]
fn hard_heap_drains_sorted_1000() {
    let dev = small_hard_device();
    let mut h = Emsh::hard(&dev).unwrap();
    let mut keys: Vec<u64> = (1..=1000).collect();
    keys.shuffle(&mut ChaCha8Rng::seed_from_u64(7));
    for k in keys {
        h.insert(k).unwrap();
    }
    for want in 1..=1000u64 {
        let got = h.deletemin().unwrap();
        assert_eq!(got.key, want);
        assert!(!got.was_corrupt);
    }
    assert!(h.is_empty());
}

#[test]
fn findmin_is_free_and_matches_deletemin() {
    let dev = soft_device(8);
    let mut h = Emsh::soft(&dev, 0.2).unwrap();
    for k in [5u64, 3, 9] {
        h.insert(k).unwrap();
    }
    let before = dev.stats();
    let fm = h.findmin().unwrap();
    assert_eq!(dev.stats(), before, "findmin charged I/O");
    assert_eq!(fm.key, 3);

    let dev2 = soft_device(8);
    let mut single = Emsh::soft(&dev2, 0.2).unwrap();
    single.insert(42u64).unwrap();
    assert_eq!(single.findmin().unwrap().key, 42);
}

#[test]
fn findmin_deletemin_agree_on_random_heaps() {
    for seed in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dev = small_hard_device();
        let mut h = Emsh::hard(&dev).unwrap();
        let n = rng.gen_range(1..200);
        for _ in 0..n {
            h.insert(rng.gen_range(0..10_000u64)).unwrap();
        }
        let before = dev.stats();
        let fm = h.findmin().unwrap();
        assert_eq!(dev.stats(), before);
        let dm = h.deletemin().unwrap();
        assert_eq!(fm.key, dm.key);
    }
}

#[test]
fn meld_with_empty_preserves_content() {
    let dev = soft_device(8);
    let mut h = Emsh::soft(&dev, 0.2).unwrap();
    let keys: Vec<u64> = (0..500).map(|i| i * 3 % 701).collect();
    for &k in &keys {
        h.insert(k).unwrap();
    }
    let empty = Emsh::soft(&dev, 0.2).unwrap();
    h.meld(empty).unwrap();
    h.check_invariants();
    let mut drained = Vec::new();
    while let Ok(r) = h.deletemin() {
        drained.push(r.key);
    }
    let mut expect = keys;
    expect.sort_unstable();
    drained.sort_unstable();
    assert_eq!(drained, expect);
}

#[test]
fn meld_hard_heaps_drains_merged_sorted_order() {
    let dev = small_hard_device();
    let mut h1 = Emsh::hard(&dev).unwrap();
    let mut h2 = Emsh::hard(&dev).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut all: Vec<u64> = (0..1200u64).map(|i| i * 2).collect();
    all.shuffle(&mut rng);
    let (a, b) = all.split_at(500);
    for &k in a {
        h1.insert(k).unwrap();
    }
    for &k in b {
        h2.insert(k).unwrap();
    }
    h1.meld(h2).unwrap();
    h1.check_invariants();
    let mut expect = all.clone();
    expect.sort_unstable();
    for want in expect {
        assert_eq!(h1.deletemin().unwrap().key, want);
    }
}

#[test]
fn meld_rejects_parameter_mismatch() {
    let dev = soft_device(8);
    let mut h1: Emsh<u64> = Emsh::soft(&dev, 0.2).unwrap();
    let h2: Emsh<u64> = Emsh::soft(&dev, 0.05).unwrap();
    assert!(matches!(h1.meld(h2), Err(EmshError::Incompatible(_))));
    // different devices are rejected too
    let mut h3: Emsh<u64> = Emsh::soft(&dev, 0.2).unwrap();
    let other_dev = soft_device(8);
    let h4: Emsh<u64> = Emsh::soft(&other_dev, 0.2).unwrap();
    assert!(matches!(h3.meld(h4), Err(EmshError::Incompatible(_))));
}

#[test]
fn soft_heap_corruption_bounded_throughout() {
    // m = 144; corruption must stay below epsilon * N after every operation
    for seed in 0..5u64 {
        for &eps in &[0.2f64, 0.05] {
            let dev = soft_device(8);
            let mut h = Emsh::soft(&dev, eps).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 4000u64;
            let mut live = 0i64;
            for i in 0..n {
                if live > 0 && rng.gen_bool(0.3) {
                    h.deletemin().unwrap();
                    live -= 1;
                } else {
                    h.insert(rng.gen_range(0..1_000_000u64)).unwrap();
                    live += 1;
                }
                let bound = (eps * h.inserted() as f64).ceil() as u64;
                assert!(
                    h.corrupt_count() <= bound,
                    "corruption {} over bound {} after op {} (seed {seed}, eps {eps})",
                    h.corrupt_count(),
                    bound,
                    i
                );
            }
            h.check_invariants();
        }
    }
}

#[test]
fn soft_heap_stress_invariants_hold() {
    let dev = soft_device(4);
    let mut h = Emsh::soft(&dev, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut live = 0i64;
    for step in 0..3000 {
        if live > 0 && rng.gen_bool(0.35) {
            h.deletemin().unwrap();
            live -= 1;
        } else {
            h.insert(rng.gen_range(0..100_000u64)).unwrap();
            live += 1;
        }
        if step % 97 == 0 {
            h.check_invariants();
        }
    }
    h.check_invariants();
}

#[test]
fn meld_stress_with_invariants_and_corruption_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..8 {
        let dev = soft_device(4);
        let eps = 0.1;
        let mut h1 = Emsh::soft(&dev, eps).unwrap();
        let mut h2 = Emsh::soft(&dev, eps).unwrap();
        let n1 = rng.gen_range(500..1500);
        let n2 = rng.gen_range(500..1500);
        for _ in 0..n1 {
            h1.insert(rng.gen_range(0..100_000u64)).unwrap();
        }
        for _ in 0..n2 {
            h2.insert(rng.gen_range(0..100_000u64)).unwrap();
        }
        // drain a little first so both heaps have staged buckets
        for _ in 0..rng.gen_range(0..50) {
            let _ = h1.deletemin();
            let _ = h2.deletemin();
        }
        let live_before = h1.len() + h2.len();
        let total_inserted = h1.inserted() + h2.inserted();
        h1.meld(h2).unwrap();
        h1.check_invariants();
        let bound = (eps * total_inserted as f64).ceil() as u64;
        assert!(h1.corrupt_count() <= bound);
        // the union multiset survives: drain count matches
        let mut remaining = 0u64;
        while h1.deletemin().is_ok() {
            remaining += 1;
        }
        assert_eq!(remaining, live_before);
    }
}

#[test]
fn delete_by_key_basic() {
    let dev = small_hard_device();
    let mut h = Emsh::hard(&dev).unwrap();
    for k in [1u64, 2, 3] {
        h.insert(k).unwrap();
    }
    h.delete_by_key(2).unwrap();
    assert_eq!(h.deletemin().unwrap().key, 1);
    assert_eq!(h.deletemin().unwrap().key, 3);
    assert!(matches!(h.deletemin(), Err(EmshError::Empty)));
}

#[test]
fn dangling_delete_surfaces_as_error() {
    let dev = small_hard_device();
    let mut h = Emsh::hard(&dev).unwrap();
    for k in [1u64, 2, 3] {
        h.insert(k).unwrap();
    }
    h.delete_by_key(7).unwrap();
    assert_eq!(h.deletemin().unwrap().key, 1);
    assert_eq!(h.deletemin().unwrap().key, 2);
    assert_eq!(h.deletemin().unwrap().key, 3);
    assert!(matches!(h.deletemin(), Err(EmshError::DanglingDelete)));
}

#[test]
fn delete_on_soft_heap_rejected() {
    let dev = soft_device(8);
    let mut h: Emsh<u64> = Emsh::soft(&dev, 0.2).unwrap();
    assert!(matches!(h.delete_by_key(1), Err(EmshError::NotHardHeap)));
}

#[test]
fn random_insert_delete_interleavings_match_multiset_oracle() {
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dev = small_hard_device();
        let mut h = Emsh::hard(&dev).unwrap();
        let mut oracle: std::collections::BTreeSet<u64> = Default::default();
        let mut pool: Vec<u64> = (0..1000u64).collect();
        pool.shuffle(&mut rng);
        for step in 0..1000 {
            let action = rng.gen_range(0..10);
            if action < 5 {
                if let Some(k) = pool.pop() {
                    h.insert(k).unwrap();
                    oracle.insert(k);
                }
            } else if action < 7 {
                if let Some(&k) = oracle.iter().nth(rng.gen_range(0..oracle.len().max(1)).min(oracle.len().saturating_sub(1))) {
                    if !oracle.is_empty() {
                        h.delete_by_key(k).unwrap();
                        oracle.remove(&k);
                    }
                }
            } else if !oracle.is_empty() {
                let got = h.deletemin().unwrap().key;
                let want = *oracle.iter().next().unwrap();
                assert_eq!(got, want, "step {step} seed {seed}");
                oracle.remove(&got);
            }
        }
        // final drain
        while let Some(&want) = oracle.iter().next() {
            assert_eq!(h.deletemin().unwrap().key, want);
            oracle.remove(&want);
        }
    }
}

#[test]
fn rebalance_epoch_shrinks_structure() {
    let dev = small_hard_device();
    let mut h = Emsh::hard(&dev).unwrap();
    let mut keys: Vec<u64> = (0..10_000).collect();
    keys.shuffle(&mut ChaCha8Rng::seed_from_u64(77));
    for k in keys {
        h.insert(k).unwrap();
    }
    for _ in 0..9_990 {
        h.deletemin().unwrap();
    }
    let tall = h.max_rank();
    let rebuilt = h.rebalance_epoch().unwrap();
    assert!(rebuilt, "trigger condition held (was rank {tall:?})");
    h.check_invariants();
    assert_eq!(h.len(), 10);
    // height afterwards: log_{sqrt m}(10/B) + 1 at most; everything fits the
    // insert buffer here so no tree should remain at all
    assert!(h.max_rank().is_none());
    let rest: Vec<u64> = (0..10).map(|_| h.deletemin().unwrap().key).collect();
    assert_eq!(rest, (9_990..10_000u64).collect::<Vec<_>>());
}

#[test]
fn rebalance_epoch_noop_when_many_remain() {
    let dev = small_hard_device();
    let mut h = Emsh::hard(&dev).unwrap();
    for k in 0..1000u64 {
        h.insert(k).unwrap();
    }
    assert!(!h.rebalance_epoch().unwrap());
    assert_eq!(h.len(), 1000);
}

#[test]
fn rebalance_does_not_change_drain_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut keys: Vec<u64> = (0..3000u64).collect();
    keys.shuffle(&mut rng);

    let run = |rebalance: bool| -> Vec<u64> {
        let dev = small_hard_device();
        let mut h = Emsh::hard(&dev).unwrap();
        for &k in &keys {
            h.insert(k).unwrap();
        }
        let mut out = Vec::new();
        for i in 0..3000 {
            out.push(h.deletemin().unwrap().key);
            if rebalance && i % 500 == 0 {
                h.rebalance_epoch().unwrap();
            }
        }
        out
    };
    assert_eq!(run(false), run(true));
}

#[test]
fn empty_rebalance_resets_counters() {
    let dev = small_hard_device();
    let mut h = Emsh::hard(&dev).unwrap();
    for k in 0..100u64 {
        h.insert(k).unwrap();
    }
    for _ in 0..100 {
        h.deletemin().unwrap();
    }
    assert!(h.rebalance_epoch().unwrap());
    assert_eq!(h.inserted(), 0);
    assert!(h.is_empty());
}
