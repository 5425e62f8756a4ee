//! Scanning and multiway-merge sorting.

use crate::device::{blocks_for, ArrayWriter, DiskArray, IoStats};
use crate::Result;

/// Visit every item in order. Charges exactly ceil(N/B) block reads and
/// returns the I/O delta of the scan.
pub fn em_scan<T: Clone>(arr: &DiskArray<T>, mut visit: impl FnMut(&T)) -> IoStats {
    let before = arr.device().stats();
    for item in arr.stream() {
        visit(&item);
    }
    arr.device().stats().delta_since(before)
}

/// Stable m-way multiway mergesort by an extracted key. Run formation loads
/// M items at a time; merging uses a fan-in of m-1 input streams plus one
/// output stream. Ties are broken by original position.
pub fn em_sort_by_key<T: Clone, K: Ord + Clone>(
    arr: &DiskArray<T>,
    key: impl Fn(&T) -> K,
) -> Result<DiskArray<T>> {
    let device = arr.device().clone();
    let params = device.params();
    let memory = params.memory();
    let fan_in = params.fanout().saturating_sub(1).max(2);

    // run formation: sort M-item chunks in memory
    let mut runs: Vec<DiskArray<(K, u64, T)>> = Vec::new();
    let mut chunk: Vec<(K, u64, T)> = Vec::with_capacity(memory.min(arr.len() + 1));
    let mut pos = 0u64;
    for item in arr.stream() {
        chunk.push((key(&item), pos, item));
        pos += 1;
        if chunk.len() == memory {
            flush_run(&device, &mut chunk, &mut runs)?;
        }
    }
    flush_run(&device, &mut chunk, &mut runs)?;

    if runs.is_empty() {
        let out: ArrayWriter<T> = ArrayWriter::new(&device)?;
        return Ok(out.finish());
    }

    // merge passes with fan-in m-1
    while runs.len() > 1 {
        let mut next = Vec::with_capacity(runs.len().div_ceil(fan_in));
        for group in runs.chunks(fan_in) {
            next.push(merge_group(group)?);
        }
        runs = next;
    }

    let sorted = runs.pop().unwrap();
    let mut out = ArrayWriter::new(&device)?;
    for (_, _, item) in sorted.stream() {
        out.push(item)?;
    }
    Ok(out.finish())
}

fn flush_run<T: Clone, K: Ord + Clone>(
    device: &crate::Device,
    chunk: &mut Vec<(K, u64, T)>,
    runs: &mut Vec<DiskArray<(K, u64, T)>>,
) -> Result<()> {
    if chunk.is_empty() {
        return Ok(());
    }
    chunk.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    runs.push(DiskArray::from_vec(device, std::mem::take(chunk))?);
    Ok(())
}

fn merge_group<T: Clone, K: Ord + Clone>(
    runs: &[DiskArray<(K, u64, T)>],
) -> Result<DiskArray<(K, u64, T)>> {
    let device = runs[0].device().clone();
    let mut out = ArrayWriter::new(&device)?;
    // linear-scan k-way merge; the fan-in is at most m-1
    let mut cursors: Vec<_> = runs.iter().map(|r| r.stream().peekable()).collect();
    loop {
        let mut best: Option<(usize, (K, u64))> = None;
        for (i, cur) in cursors.iter_mut().enumerate() {
            if let Some((k, p, _)) = cur.peek() {
                let cand = (k.clone(), *p);
                if best.as_ref().map_or(true, |(_, b)| cand < *b) {
                    best = Some((i, cand));
                }
            }
        }
        match best {
            Some((i, _)) => out.push(cursors[i].next().unwrap())?,
            None => break,
        }
    }
    Ok(out.finish())
}

/// Upper bound used in tests: C * (N/B) * (1 + ceil(log_m(N/M))) block
/// transfers for a sort of N items.
pub fn sort_bound(n: usize, block: usize, memory: usize, c: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let m = (memory / block).max(2) as f64;
    let passes = 1.0 + ((n as f64 / memory as f64).log(m)).max(0.0).ceil();
    c * blocks_for(n, block) * passes as u64
}
