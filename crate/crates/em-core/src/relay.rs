//! A priority queue for relaying values to later positions of a sweep.
//!
//! Keys are u64 positions and the workload is monotone: nothing is ever
//! popped below a key that has already been popped. Up to `mem_budget` items
//! live in an in-memory heap; on overflow the far half (largest keys) is
//! spilled to the device as a sorted run and merged back lazily.

use crate::device::{Device, DiskArray};
use crate::Result;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

pub struct RelayQueue<V> {
    device: Device,
    mem_budget: usize,
    heap: BinaryHeap<Reverse<(u64, u64, OrdShim<V>)>>,
    runs: Vec<RunCursor<V>>,
    seq: u64,
    len: usize,
}

struct RunCursor<V> {
    run: DiskArray<(u64, u64, V)>,
    pos: usize,
    head: Option<(u64, u64)>,
}

// values never participate in ordering; the (key, seq) prefix is unique
struct OrdShim<V>(V);

impl<V> PartialEq for OrdShim<V> {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}
impl<V> Eq for OrdShim<V> {}
impl<V> PartialOrd for OrdShim<V> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for OrdShim<V> {
    fn cmp(&self, _: &Self) -> std::cmp::Ordering {
        std::cmp::Ordering::Equal
    }
}

impl<V: Clone> RelayQueue<V> {
    pub fn new(device: &Device, mem_budget: usize) -> Self {
        RelayQueue {
            device: device.clone(),
            mem_budget: mem_budget.max(2),
            heap: BinaryHeap::new(),
            runs: Vec::new(),
            seq: 0,
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, key: u64, value: V) -> Result<()> {
        self.seq += 1;
        self.heap.push(Reverse((key, self.seq, OrdShim(value))));
        self.len += 1;
        if self.heap.len() > self.mem_budget {
            self.spill()?;
        }
        Ok(())
    }

    /// Smallest key currently queued.
    pub fn peek_key(&self) -> Option<u64> {
        let mem = self.heap.peek().map(|Reverse((k, _, _))| *k);
        let run = self.runs.iter().filter_map(|r| r.head.map(|(k, _)| k)).min();
        match (mem, run) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn pop_min(&mut self) -> Option<(u64, V)> {
        let mem_key = self.heap.peek().map(|Reverse((k, s, _))| (*k, *s));
        let run_idx = self
            .runs
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.head.map(|h| (h, i)))
            .min()
            .map(|(_, i)| i);
        let run_key = run_idx.map(|i| self.runs[i].head.unwrap());
        let take_mem = match (mem_key, run_key) {
            (Some(a), Some(b)) => a <= b,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => return None,
        };
        self.len -= 1;
        if take_mem {
            let Reverse((k, _, OrdShim(v))) = self.heap.pop().unwrap();
            Some((k, v))
        } else {
            let i = run_idx.unwrap();
            let item = self.runs[i].advance();
            if self.runs[i].head.is_none() {
                self.runs.swap_remove(i);
            }
            Some(item)
        }
    }

    /// Pop every entry whose key equals `key`, in insertion order.
    pub fn pop_all_at(&mut self, key: u64) -> Vec<V> {
        let mut out = Vec::new();
        let mut tagged: Vec<(u64, V)> = Vec::new();
        while self.peek_key() == Some(key) {
            // collect with sequence info for stable ordering across sources
            let mem_key = self.heap.peek().map(|Reverse((k, s, _))| (*k, *s));
            let run_idx = self
                .runs
                .iter()
                .enumerate()
                .filter_map(|(i, r)| r.head.map(|h| (h, i)))
                .min()
                .map(|(_, i)| i);
            let run_key = run_idx.map(|i| self.runs[i].head.unwrap());
            let take_mem = match (mem_key, run_key) {
                (Some(a), Some(b)) => a <= b,
                (Some(_), None) => true,
                _ => false,
            };
            self.len -= 1;
            if take_mem {
                let Reverse((_, s, OrdShim(v))) = self.heap.pop().unwrap();
                tagged.push((s, v));
            } else {
                let i = run_idx.unwrap();
                let (seq, v) = self.runs[i].advance_with_seq();
                if self.runs[i].head.is_none() {
                    self.runs.swap_remove(i);
                }
                tagged.push((seq, v));
            }
        }
        tagged.sort_by_key(|(s, _)| *s);
        out.extend(tagged.into_iter().map(|(_, v)| v));
        out
    }

    fn spill(&mut self) -> Result<()> {
        // move the far half (largest keys) to a sorted run on the device
        let keep = self.mem_budget / 2;
        let mut all: Vec<(u64, u64, V)> = std::mem::take(&mut self.heap)
            .into_sorted_vec()
            .into_iter()
            .rev() // into_sorted_vec of Reverse yields descending keys
            .map(|Reverse((k, s, OrdShim(v)))| (k, s, v))
            .collect();
        // `all` is ascending by (key, seq) after the rev above
        let spill = all.split_off(keep);
        for (k, s, v) in all {
            self.heap.push(Reverse((k, s, OrdShim(v))));
        }
        let run = DiskArray::from_vec(&self.device, spill)?;
        self.runs.push(RunCursor::new(run));
        Ok(())
    }
}

impl<V: Clone> RunCursor<V> {
    fn new(run: DiskArray<(u64, u64, V)>) -> Self {
        let head = if run.is_empty() {
            None
        } else {
            let (k, s, _) = run.get(0);
            Some((k, s))
        };
        RunCursor { run, pos: 0, head }
    }

    fn advance(&mut self) -> (u64, V) {
        let (k, s, v) = self.run.get(self.pos);
        let _ = s;
        self.step();
        (k, v)
    }

    fn advance_with_seq(&mut self) -> (u64, V) {
        let (_, s, v) = self.run.get(self.pos);
        self.step();
        (s, v)
    }

    fn step(&mut self) {
        self.pos += 1;
        self.head = if self.pos < self.run.len() {
            let (k, s, _) = self.run.get(self.pos);
            Some((k, s))
        } else {
            None
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DeviceParams;

    #[test]
    fn spill_and_merge_round_trip() {
        let dev = Device::new(DeviceParams::new(4, 16).unwrap());
        let mut q = RelayQueue::new(&dev, 8);
        let keys = [42u64, 7, 19, 3, 99, 12, 55, 21, 8, 70, 31, 5, 66, 2, 90];
        for (i, &k) in keys.iter().enumerate() {
            q.push(k, i).unwrap();
        }
        let mut sorted = keys.to_vec();
        sorted.sort_unstable();
        let mut popped = Vec::new();
        while let Some((k, _)) = q.pop_min() {
            popped.push(k);
        }
        assert_eq!(popped, sorted);
    }

    #[test]
    fn pop_all_at_preserves_insertion_order() {
        let dev = Device::new(DeviceParams::new(4, 16).unwrap());
        let mut q = RelayQueue::new(&dev, 4);
        for v in 0..10 {
            q.push(5, v).unwrap();
        }
        q.push(3, 100).unwrap();
        assert_eq!(q.pop_min().unwrap(), (3, 100));
        assert_eq!(q.pop_all_at(5), (0..10).collect::<Vec<_>>());
        assert!(q.is_empty());
    }
}
