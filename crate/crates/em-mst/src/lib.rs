//! Minimum spanning forests in external memory: staged Boruvka phases over a
//! schedule of edge buckets, with a heap-driven Prim endgame once the
//! contracted graph is small enough. Doubles as a connected-components
//! algorithm.
//!
//! Each stage builds buckets B_0..B_{g+1}, where B_k holds the (2^(2^k) - 1)
//! lightest external edges per supervertex plus a per-vertex threshold. A
//! phase hooks along B_0, contracts the selected pseudo-forest, cleans one
//! bucket (chosen by the trailing-zero rule), refills the lower buckets from
//! it and parks the accumulated star graphs in its place. Bucket fullness
//! therefore tracks a binary counter across phases.

mod contract;
mod prim;
mod stage;

use em_core::{Device, IoStats};
use std::collections::HashSet;
use thiserror::Error;

pub use prim::em_prim;
pub use stage::{PhaseTrace, StageTrace};

#[derive(Debug, Error)]
pub enum MstError {
    #[error("vertex id {0} out of range (n = {1})")]
    VertexRange(u32, usize),
    #[error(transparent)]
    Device(#[from] em_core::EmError),
    #[error(transparent)]
    Heap(#[from] emsh::EmshError),
}

pub type Result<T> = std::result::Result<T, MstError>;

/// Weight tagged with the edge id, making all weights unique.
pub type Wt<W> = (W, u32);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirEdge<W> {
    pub src: u32,
    pub dst: u32,
    pub wt: Wt<W>,
}

#[derive(Debug)]
pub struct Mst {
    /// Indices into the input edge list forming a minimum spanning forest.
    pub forest: Vec<u32>,
    /// Component label per vertex: the smallest vertex id in the component.
    pub components: Vec<u32>,
    /// I/O spent by the run.
    pub io: IoStats,
    /// Per-stage details when tracing was requested.
    pub trace: Vec<StageTrace>,
}

/// Compute a minimum spanning forest. Weights may repeat; they are
/// deduplicated internally by tagging with the edge id.
pub fn mst<W: Ord + Clone>(
    device: &Device,
    n: usize,
    edges: &[(u32, u32, W)],
    trace: bool,
) -> Result<Mst> {
    let before = device.stats();
    for &(u, v, _) in edges {
        if u as usize >= n {
            return Err(MstError::VertexRange(u, n));
        }
        if v as usize >= n {
            return Err(MstError::VertexRange(v, n));
        }
    }

    let mut labels: Vec<u32> = (0..n as u32).collect();
    let mut forest: HashSet<u32> = HashSet::new();
    // self loops drop out immediately; parallel edges survive (deduped by
    // the first cleanup)
    let mut current: Vec<DirEdge<W>> = edges
        .iter()
        .enumerate()
        .filter(|(_, &(u, v, _))| u != v)
        .map(|(i, (u, v, w))| DirEdge {
            src: *u,
            dst: *v,
            wt: (w.clone(), i as u32),
        })
        .collect();

    // plain boruvka phases while E <= V, avoiding sentinel augmentation
    loop {
        let live = live_vertices(&current);
        if current.is_empty() || current.len() > live {
            break;
        }
        let (next, stars) = stage::plain_phase(device, &current, &mut forest)?;
        apply_map(&mut labels, &stars);
        current = next;
    }

    let mut traces = Vec::new();
    if !current.is_empty() {
        let e0 = current.len();
        let b = device.params().block_size();
        let mut stage_idx = 0usize;
        while live_vertices(&current) > e0 / b && !current.is_empty() {
            let outcome = stage::run_stage(device, stage_idx, current, e0, trace, &mut forest)?;
            apply_map(&mut labels, &outcome.stage_map);
            current = outcome.graph;
            if trace {
                traces.push(outcome.trace);
            }
            stage_idx += 1;
            if outcome.reached_target {
                break;
            }
        }
    }

    // endgame: heap-driven Prim on the reduced graph
    if !current.is_empty() {
        let (chosen, prim_map) = prim::em_prim(device, &current)?;
        forest.extend(chosen);
        apply_map(&mut labels, &prim_map);
    }

    // canonical component labels: smallest original vertex id per class
    let mut canon: std::collections::HashMap<u32, u32> = Default::default();
    for (v, &l) in labels.iter().enumerate() {
        let entry = canon.entry(l).or_insert(v as u32);
        *entry = (*entry).min(v as u32);
    }
    let components: Vec<u32> = labels.iter().map(|l| canon[l]).collect();

    let mut forest: Vec<u32> = forest.into_iter().collect();
    forest.sort_unstable();
    Ok(Mst {
        forest,
        components,
        io: device.stats().delta_since(before),
        trace: traces,
    })
}

/// Component labels only: a minimum spanning forest run with the weights
/// ignored (edge ids alone give the unique total order).
pub fn connected_components(
    device: &Device,
    n: usize,
    edges: &[(u32, u32)],
) -> Result<Vec<u32>> {
    let unit: Vec<(u32, u32, u8)> = edges.iter().map(|&(u, v)| (u, v, 1u8)).collect();
    Ok(mst(device, n, &unit, false)?.components)
}

fn live_vertices<W>(edges: &[DirEdge<W>]) -> usize {
    let mut seen: HashSet<u32> = HashSet::new();
    for e in edges {
        seen.insert(e.src);
        seen.insert(e.dst);
    }
    seen.len()
}

fn apply_map(labels: &mut [u32], map: &std::collections::HashMap<u32, u32>) {
    if map.is_empty() {
        return;
    }
    for l in labels.iter_mut() {
        if let Some(&r) = map.get(l) {
            *l = r;
        }
    }
}
