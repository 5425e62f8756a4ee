//! Selection, near-sorting and heap sort on top of the heaps.

use crate::heap::Emsh;
use crate::{EmshError, Result};
use em_core::Device;

/// Exact median (lower median for even n) of distinct items, found by
/// repeated soft-heap partitioning: insert everything, delete roughly
/// epsilon*n minima, pivot on the largest deleted key and recurse on the
/// side holding the target rank.
pub fn select_median<K: Ord + Clone>(device: &Device, items: &[K], epsilon: f64) -> Result<K> {
    if items.is_empty() {
        return Err(EmshError::Empty);
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(EmshError::InvalidConfig(
            "selection needs an error rate in (0, 1/2)".into(),
        ));
    }
    let target = (items.len() - 1) / 2;
    select_kth(device, items.to_vec(), target, epsilon)
}

fn select_kth<K: Ord + Clone>(
    device: &Device,
    mut items: Vec<K>,
    mut k: usize,
    epsilon: f64,
) -> Result<K> {
    loop {
        let n = items.len();
        debug_assert!(k < n);
        if n <= device.params().memory() {
            // remainder fits in memory
            items.sort_unstable();
            return Ok(items.swap_remove(k));
        }
        let mut heap = Emsh::soft(device, epsilon)?;
        for item in &items {
            heap.insert(item.clone())?;
        }
        let deletions = ((epsilon * n as f64).ceil() as usize).clamp(1, n);
        let mut pivot: Option<K> = None;
        for _ in 0..deletions {
            let removed = heap.deletemin()?;
            // ranks are judged on true keys, so track the true maximum
            pivot = Some(match pivot.take() {
                None => removed.key,
                Some(p) => p.max(removed.key),
            });
        }
        let pivot = pivot.expect("at least one deletion");
        let (low, high): (Vec<K>, Vec<K>) = items.into_iter().partition(|x| *x <= pivot);
        debug_assert!(!low.is_empty());
        if k < low.len() {
            items = low;
        } else {
            k -= low.len();
            items = high;
        }
    }
}

/// Permutation of the input with at most epsilon * n^2 inversions: insert
/// everything into a soft heap and report the deletion order. With
/// epsilon < 1/n the heap is effectively exact and the output sorted.
pub fn near_sort<K: Ord + Clone>(device: &Device, items: &[K], epsilon: f64) -> Result<Vec<K>> {
    let n = items.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let hard_regime = epsilon < 1.0 / n as f64;
    let mut heap = if hard_regime {
        Emsh::hard(device)?
    } else {
        Emsh::soft(device, epsilon)?
    };
    for item in items {
        heap.insert(item.clone())?;
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(heap.deletemin()?.key);
    }
    Ok(out)
}

/// Sort via a hard heap; returns the sorted sequence and the number of key
/// comparisons performed.
pub fn heap_sort<K: Ord + Clone>(device: &Device, items: &[K]) -> Result<(Vec<K>, u64)> {
    let mut heap = Emsh::hard(device)?;
    for item in items {
        heap.insert(item.clone())?;
    }
    let mut out = Vec::with_capacity(items.len());
    for _ in 0..items.len() {
        out.push(heap.deletemin()?.key);
    }
    Ok((out, heap.comparisons()))
}
