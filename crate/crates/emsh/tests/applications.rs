use em_core::{Device, DeviceParams};
use emsh::{heap_sort, near_sort, select_median};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn soft_device() -> Device {
    // m = 144; memory deliberately small so selection has to recurse
    Device::new(DeviceParams::new(4, 4 * 144).unwrap())
}

fn hard_device() -> Device {
    Device::new(DeviceParams::new(4, 4 * 16).unwrap())
}

#[test]
fn median_of_seven() {
    let dev = soft_device();
    let items: Vec<u64> = (1..=7).collect();
    assert_eq!(select_median(&dev, &items, 0.1).unwrap(), 4);
}

#[test]
fn median_of_singleton() {
    let dev = soft_device();
    assert_eq!(select_median(&dev, &[5u64], 0.1).unwrap(), 5);
}

#[test]
fn median_of_1001_random_distinct() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut items: Vec<u64> = (0..1001u64).map(|i| i * 13 + 5).collect();
    items.shuffle(&mut rng);
    let dev = soft_device();
    let got = select_median(&dev, &items, 0.05).unwrap();
    let mut sorted = items;
    sorted.sort_unstable();
    assert_eq!(got, sorted[500]);
}

#[test]
fn median_empty_errors() {
    let dev = soft_device();
    assert!(select_median::<u64>(&dev, &[], 0.1).is_err());
}

#[test]
fn near_sort_hard_regime_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut items: Vec<u64> = (0..400).collect();
    items.shuffle(&mut rng);
    let dev = hard_device();
    let out = near_sort(&dev, &items, 1.0 / 1000.0).unwrap();
    let mut expect = items;
    expect.sort_unstable();
    assert_eq!(out, expect);
}

#[test]
fn near_sort_inversions_within_bound() {
    let n = 1000usize;
    let eps = 0.01f64;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut items: Vec<u64> = (0..n as u64).collect();
    items.shuffle(&mut rng);
    let dev = soft_device();
    let out = near_sort(&dev, &items, eps).unwrap();
    assert_eq!(out.len(), n);
    let inv = oracles::inversions(&out);
    let bound = (eps * (n * n) as f64) as u64;
    assert!(inv <= bound, "{inv} inversions exceed bound {bound}");
}

#[test]
fn near_sort_bound_across_seeds() {
    let n = 500usize;
    let eps = 0.02f64;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut items: Vec<u64> = (0..n as u64).collect();
        items.shuffle(&mut rng);
        let dev = soft_device();
        let out = near_sort(&dev, &items, eps).unwrap();
        let inv = oracles::inversions(&out);
        let bound = (eps * (n * n) as f64) as u64;
        assert!(inv <= bound, "seed {seed}: {inv} > {bound}");
        // permutation check
        let mut sorted = out;
        sorted.sort_unstable();
        assert_eq!(sorted, (0..n as u64).collect::<Vec<_>>());
    }
}

#[test]
fn heap_sort_empty() {
    let dev = hard_device();
    let (out, comparisons) = heap_sort::<u64>(&dev, &[]).unwrap();
    assert!(out.is_empty());
    assert_eq!(comparisons, 0);
}

#[test]
fn heap_sort_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let items: Vec<u64> = (0..1 << 10).map(|_| rng.gen_range(0..1_000_000)).collect();
    let dev = hard_device();
    let (out, _) = heap_sort(&dev, &items).unwrap();
    let mut expect = items;
    expect.sort_unstable();
    assert_eq!(out, expect);
}

#[test]
fn heap_sort_comparison_ratio() {
    // comparisons / (N log2 N) stays under 4 across sizes
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for exp in [8u32, 10, 12] {
        let n = 1usize << exp;
        let items: Vec<u64> = (0..n as u64).map(|_| rng.gen()).collect();
        let dev = hard_device();
        let (_, comparisons) = heap_sort(&dev, &items).unwrap();
        let ratio = comparisons as f64 / (n as f64 * (n as f64).log2());
        assert!(ratio <= 4.0, "n = {n}: ratio {ratio:.2} exceeds 4");
    }
}

#[test]
fn hard_heap_amortized_io_ceiling() {
    // total I/Os over N inserts + N deletemins <= C (N/B) log_m(N/B), C = 8
    let n = 1usize << 12;
    let dev = hard_device();
    let params = dev.params();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let items: Vec<u64> = (0..n as u64).map(|_| rng.gen()).collect();
    let before = dev.stats();
    let (_, _) = heap_sort(&dev, &items).unwrap();
    let delta = dev.stats().delta_since(before).total();
    let b = params.block_size() as f64;
    let m = params.fanout() as f64;
    let bound = 8.0 * (n as f64 / b) * ((n as f64 / b).ln() / m.ln()).max(1.0);
    assert!(
        (delta as f64) <= bound,
        "workload took {delta} I/Os, ceiling {bound:.0}"
    );
}
