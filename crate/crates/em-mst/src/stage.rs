//! One stage of the staged Boruvka schedule, plus the plain preprocessing
//! phase used while E <= V.

use crate::contract::contract;
use crate::{DirEdge, Result, Wt};
use em_core::{em_sort_by_key, ArrayWriter, Device, DiskArray, IoStats};
use std::collections::{HashMap, HashSet};

type ThreshRec<W> = (u32, Option<Wt<W>>);

enum Bucket<W> {
    Edges {
        edges: DiskArray<DirEdge<W>>,
        thresh: DiskArray<ThreshRec<W>>,
    },
    /// Star graphs summarizing the clustering done since this bucket was
    /// last filled; sorted by child.
    Stars(DiskArray<(u32, u32)>),
}

#[derive(Debug, Clone)]
pub struct PhaseTrace {
    /// Phase index within the stage, starting at 1.
    pub phase: usize,
    /// Fullness of buckets B_1..B_{g+1} at the end of the phase (true =
    /// holds edges). The binary-counter rule applies to every phase except
    /// a stage's final one, which dismantles the buckets.
    pub fullness: Vec<bool>,
    /// True for the phase that ends the stage (the top-bucket cleanup).
    pub final_phase: bool,
    /// (supervertex, size, component total) in stage-start units.
    pub sizes: Vec<(u32, u64, u64)>,
}

#[derive(Debug, Clone)]
pub struct StageTrace {
    pub stage: usize,
    pub g: usize,
    pub phases: Vec<PhaseTrace>,
    pub io: IoStats,
}

pub(crate) struct StageOutcome<W> {
    pub graph: Vec<DirEdge<W>>,
    pub stage_map: HashMap<u32, u32>,
    pub trace: StageTrace,
    pub reached_target: bool,
}

fn bucket_cap(k: usize) -> usize {
    // 2^(2^k) - 1, saturating well above any desk-scale edge count
    if k >= 6 {
        return usize::MAX;
    }
    (1usize << (1usize << k)) - 1
}

pub(crate) fn run_stage<W: Ord + Clone>(
    device: &Device,
    stage_idx: usize,
    graph: Vec<DirEdge<W>>,
    e0: usize,
    want_trace: bool,
    forest: &mut HashSet<u32>,
) -> Result<StageOutcome<W>> {
    let io_before = device.stats();
    let b = device.params().block_size();
    let v_j = super::live_vertices(&graph);
    let e_j = graph.len();

    // schedule arithmetic in exact integers over exponents: rho forced to at
    // least 2, log rho rounded up to a power of two so the stage runs
    // exactly 2^g phases
    let rho = ((e_j as f64 / v_j.max(1) as f64).max(2.0)).ceil() as usize;
    let l = (usize::BITS - (rho - 1).leading_zeros()).max(1) as usize; // ceil(log2 rho)
    let l_prime = l.next_power_of_two();
    let g = stage_idx + l_prime.trailing_zeros() as usize;
    let phases = (1usize << stage_idx) * l_prime;
    debug_assert_eq!(phases, 1 << g);

    // sizes and per-component totals for the growth-invariant trace
    let mut sizes: HashMap<u32, u64> = HashMap::new();
    let mut totals: HashMap<u32, u64> = HashMap::new();
    if want_trace {
        let mut ids: Vec<u32> = Vec::new();
        for e in &graph {
            ids.push(e.src);
            ids.push(e.dst);
        }
        ids.sort_unstable();
        ids.dedup();
        let index: HashMap<u32, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut dsu = DsuLocal::new(ids.len());
        for e in &graph {
            dsu.union(index[&e.src], index[&e.dst]);
        }
        let mut comp_count: HashMap<usize, u64> = HashMap::new();
        for &v in &ids {
            *comp_count.entry(dsu.find(index[&v])).or_insert(0) += 1;
        }
        for &v in &ids {
            sizes.insert(v, 1);
            totals.insert(v, comp_count[&dsu.find(index[&v])]);
        }
    }

    // stage-start buckets: B_{g+1} holds both orientations of every edge,
    // sorted by (source, weight); each lower bucket is a per-vertex prefix
    // of the one above with thresholds
    let mut both: Vec<DirEdge<W>> = Vec::with_capacity(2 * graph.len());
    for e in &graph {
        both.push(e.clone());
        both.push(DirEdge {
            src: e.dst,
            dst: e.src,
            wt: e.wt.clone(),
        });
    }
    drop(graph);
    let arr = DiskArray::from_vec(device, both)?;
    let top_edges = em_sort_by_key(&arr, |e| (e.src, e.wt.clone()))?;
    drop(arr);
    let top_thresh = {
        let mut w = ArrayWriter::new(device)?;
        let mut last: Option<u32> = None;
        for e in top_edges.stream() {
            if last != Some(e.src) {
                w.push((e.src, None))?;
                last = Some(e.src);
            }
        }
        w.finish()
    };

    let mut buckets: Vec<Bucket<W>> = Vec::with_capacity(g + 2);
    for _ in 0..=(g + 1) {
        buckets.push(Bucket::Stars(DiskArray::from_vec(device, Vec::new())?));
    }
    buckets[g + 1] = Bucket::Edges {
        edges: top_edges,
        thresh: top_thresh,
    };
    for k in (0..=g).rev() {
        let (src_edges, src_thresh) = match &buckets[k + 1] {
            Bucket::Edges { edges, thresh } => (edges, thresh),
            Bucket::Stars(_) => unreachable!(),
        };
        buckets[k] = fill_bucket(device, src_edges, src_thresh, bucket_cap(k))?;
    }

    let mut live = v_j;
    let mut traces: Vec<PhaseTrace> = Vec::new();

    for i in 1..=phases {
        // step 1: hook along B_0
        let s_edges: Vec<DirEdge<W >> = match &buckets[0] {
            Bucket::Edges { edges, .. } => edges.to_vec(),
            Bucket::Stars(_) => unreachable!("B_0 always holds edges"),
        };
        buckets[0] = Bucket::Edges {
            edges: DiskArray::from_vec(device, Vec::new())?,
            thresh: DiskArray::from_vec(device, Vec::new())?,
        };
        for e in &s_edges {
            forest.insert(e.wt.1);
        }

        // step 2: contract the selected pseudo-forest into stars
        let stars_i = contract(device, &s_edges)?;
        let hooked_away = stars_i.iter().filter(|(c, r)| c != r).count();
        live = live.saturating_sub(hooked_away);
        if want_trace {
            let mut gains: HashMap<u32, u64> = HashMap::new();
            for (&c, &r) in &stars_i {
                if c != r {
                    *gains.entry(r).or_insert(0) += sizes.get(&c).copied().unwrap_or(1);
                }
            }
            for (&c, &r) in &stars_i {
                if c != r {
                    sizes.remove(&c);
                }
            }
            for (r, gain) in gains {
                *sizes.entry(r).or_insert(1) += gain;
            }
        }
        let stars_arr = {
            let mut pairs: Vec<(u32, u32)> = stars_i.iter().map(|(&c, &r)| (c, r)).collect();
            pairs.sort_unstable();
            DiskArray::from_vec(device, pairs)?
        };

        // step 3: clean B_{f(i)}, where f = 1 + trailing zeros of i; the
        // final phase lands on B_{g+1} automatically
        let f = 1 + i.trailing_zeros() as usize;
        let mut fprime = DiskArray::from_vec(device, Vec::new())?;
        for k in (1..f).rev() {
            let level = match &buckets[k] {
                Bucket::Stars(s) => s,
                Bucket::Edges { .. } => unreachable!("schedule: B_{k} full at its cleanup"),
            };
            fprime = compose_maps(device, fprime, level)?;
        }
        fprime = compose_maps(device, fprime, &stars_arr)?;

        let (clean_edges, r_map) = {
            let (edges, thresh) = match &buckets[f] {
                Bucket::Edges { edges, thresh } => (edges, thresh),
                Bucket::Stars(_) => unreachable!("schedule: B_f full at its cleanup"),
            };
            cleanup(device, edges, thresh, &fprime)?
        };

        if i == phases {
            // last phase: the cleaned top bucket is the next stage's graph
            let graph = single_orientation(&clean_edges);
            let stage_map: HashMap<u32, u32> = fprime.stream().collect_map();
            if want_trace {
                traces.push(PhaseTrace {
                    phase: i,
                    fullness: Vec::new(),
                    final_phase: true,
                    sizes: trace_sizes(&sizes, &totals),
                });
            }
            return Ok(StageOutcome {
                graph,
                stage_map,
                trace: StageTrace {
                    stage: stage_idx,
                    g,
                    phases: traces,
                    io: device.stats().delta_since(io_before),
                },
                reached_target: false,
            });
        }

        // X_i: per supervertex, the cleaned edges lighter than its threshold
        let x_i = cut_below(device, &clean_edges, &r_map)?;

        // step 4: refill B_{f-1}..B_0, each a per-vertex prefix of X_i
        for k in (0..f).rev() {
            buckets[k] = fill_bucket(device, &x_i, &r_map, bucket_cap(k))?;
        }

        // step 5: park the composed stars in the emptied bucket
        buckets[f] = Bucket::Stars(fprime);

        if want_trace {
            traces.push(PhaseTrace {
                phase: i,
                fullness: fullness_of(&buckets, g),
                final_phase: false,
                sizes: trace_sizes(&sizes, &totals),
            });
        }

        // endgame switch: few enough supervertices for the Prim phase
        if live <= e0 / b {
            let total_map = compose_empty_buckets(device, &buckets, g)?;
            let (edges, thresh) = match &buckets[g + 1] {
                Bucket::Edges { edges, thresh } => (edges, thresh),
                Bucket::Stars(_) => unreachable!(),
            };
            let (clean_top, _) = cleanup(device, edges, thresh, &total_map)?;
            let graph = single_orientation(&clean_top);
            let stage_map: HashMap<u32, u32> = total_map.stream().collect_map();
            return Ok(StageOutcome {
                graph,
                stage_map,
                trace: StageTrace {
                    stage: stage_idx,
                    g,
                    phases: traces,
                    io: device.stats().delta_since(io_before),
                },
                reached_target: true,
            });
        }
    }
    unreachable!("the final phase returns from inside the loop")
}

/// Plain Boruvka phase over the whole edge set, used while E <= V.
pub(crate) fn plain_phase<W: Ord + Clone>(
    device: &Device,
    edges: &[DirEdge<W>],
    forest: &mut HashSet<u32>,
) -> Result<(Vec<DirEdge<W>>, HashMap<u32, u32>)> {
    let mut both: Vec<DirEdge<W>> = Vec::with_capacity(edges.len() * 2);
    for e in edges {
        both.push(e.clone());
        both.push(DirEdge {
            src: e.dst,
            dst: e.src,
            wt: e.wt.clone(),
        });
    }
    let arr = DiskArray::from_vec(device, both)?;
    let sorted = em_sort_by_key(&arr, |e| (e.src, e.wt.clone()))?;
    // hook: lightest incident edge per vertex
    let mut s_edges: Vec<DirEdge<W>> = Vec::new();
    let mut last: Option<u32> = None;
    for e in sorted.stream() {
        if last != Some(e.src) {
            last = Some(e.src);
            s_edges.push(e);
        }
    }
    for e in &s_edges {
        forest.insert(e.wt.1);
    }
    let stars = contract(device, &s_edges)?;
    let stars_arr = {
        let mut pairs: Vec<(u32, u32)> = stars.iter().map(|(&c, &r)| (c, r)).collect();
        pairs.sort_unstable();
        DiskArray::from_vec(device, pairs)?
    };
    let empty_thresh = {
        let mut w = ArrayWriter::new(device)?;
        let mut seen: Option<u32> = None;
        for e in sorted.stream() {
            if seen != Some(e.src) {
                w.push((e.src, None))?;
                seen = Some(e.src);
            }
        }
        w.finish()
    };
    let (clean, _) = cleanup(device, &sorted, &empty_thresh, &stars_arr)?;
    Ok((single_orientation(&clean), stars))
}

// ---- bucket operations ----------------------------------------------------

/// Per-vertex prefix of a (source, weight)-sorted edge array: keep up to
/// `cap` lightest edges per source; the threshold is the weight of the
/// (cap+1)-th edge when present, otherwise inherited from the source bucket.
fn fill_bucket<W: Ord + Clone>(
    device: &Device,
    src_edges: &DiskArray<DirEdge<W>>,
    src_thresh: &DiskArray<ThreshRec<W>>,
    cap: usize,
) -> Result<Bucket<W>> {
    let mut out_edges = ArrayWriter::new(device)?;
    let mut out_thresh = ArrayWriter::new(device)?;
    let mut edge_stream = src_edges.stream().peekable();
    for (v, parent_h) in src_thresh.stream() {
        // skip any edges of vertices without threshold records (cannot
        // happen when thresholds cover all sources)
        while edge_stream.peek().map_or(false, |e| e.src < v) {
            edge_stream.next();
        }
        let mut kept = 0usize;
        let mut threshold: Option<Wt<W>> = None;
        let mut inherited = true;
        while edge_stream.peek().map_or(false, |e| e.src == v) {
            let e = edge_stream.next().unwrap();
            if kept < cap {
                out_edges.push(e)?;
                kept += 1;
            } else if inherited {
                threshold = Some(e.wt.clone());
                inherited = false;
                // the rest of this group is ignored
            }
        }
        if inherited {
            out_thresh.push((v, parent_h))?;
        } else {
            out_thresh.push((v, threshold))?;
        }
    }
    Ok(Bucket::Edges {
        edges: out_edges.finish(),
        thresh: out_thresh.finish(),
    })
}

/// Rename a bucket through the composed star forest, drop internal edges,
/// dedupe multiples keeping the lightest, and reduce the thresholds to the
/// per-new-supervertex minimum.
fn cleanup<W: Ord + Clone>(
    device: &Device,
    edges: &DiskArray<DirEdge<W>>,
    thresh: &DiskArray<ThreshRec<W>>,
    map: &DiskArray<(u32, u32)>,
) -> Result<(DiskArray<DirEdge<W>>, DiskArray<ThreshRec<W>>)> {
    // rename sources (edges sorted by src, map sorted by child)
    let renamed_src = {
        let mut w = ArrayWriter::new(device)?;
        let mut map_stream = map.stream().peekable();
        for mut e in edges.stream() {
            while map_stream.peek().map_or(false, |&(c, _)| c < e.src) {
                map_stream.next();
            }
            if let Some(&(c, r)) = map_stream.peek() {
                if c == e.src {
                    e.src = r;
                }
            }
            w.push(e)?;
        }
        w.finish()
    };
    // rename destinations
    let by_dst = em_sort_by_key(&renamed_src, |e| e.dst)?;
    let renamed = {
        let mut w = ArrayWriter::new(device)?;
        let mut map_stream = map.stream().peekable();
        for mut e in by_dst.stream() {
            while map_stream.peek().map_or(false, |&(c, _)| c < e.dst) {
                map_stream.next();
            }
            if let Some(&(c, r)) = map_stream.peek() {
                if c == e.dst {
                    e.dst = r;
                }
            }
            w.push(e)?;
        }
        w.finish()
    };
    // remove self loops and keep the lightest copy of each multiple edge
    let grouped = em_sort_by_key(&renamed, |e| (e.src, e.dst, e.wt.clone()))?;
    let deduped = {
        let mut w = ArrayWriter::new(device)?;
        let mut last: Option<(u32, u32)> = None;
        for e in grouped.stream() {
            if e.src == e.dst {
                continue;
            }
            if last != Some((e.src, e.dst)) {
                last = Some((e.src, e.dst));
                w.push(e)?;
            }
        }
        w.finish()
    };
    let clean = em_sort_by_key(&deduped, |e| (e.src, e.wt.clone()))?;

    // thresholds: rename the vertex, then take the minimum per new vertex
    let renamed_thresh = {
        let mut w = ArrayWriter::new(device)?;
        let mut map_stream = map.stream().peekable();
        for (mut v, h) in thresh.stream() {
            while map_stream.peek().map_or(false, |&(c, _)| c < v) {
                map_stream.next();
            }
            if let Some(&(c, r)) = map_stream.peek() {
                if c == v {
                    v = r;
                }
            }
            w.push((v, h))?;
        }
        w.finish()
    };
    let by_vertex = em_sort_by_key(&renamed_thresh, |t| t.0)?;
    let reduced = {
        let mut w = ArrayWriter::new(device)?;
        let mut current: Option<ThreshRec<W>> = None;
        for (v, h) in by_vertex.stream() {
            match &mut current {
                Some((cv, ch)) if *cv == v => {
                    *ch = min_thresh(ch.take(), h);
                }
                _ => {
                    if let Some(t) = current.take() {
                        w.push(t)?;
                    }
                    current = Some((v, h));
                }
            }
        }
        if let Some(t) = current.take() {
            w.push(t)?;
        }
        w.finish()
    };
    Ok((clean, reduced))
}

/// None acts as +infinity.
fn min_thresh<W: Ord>(a: Option<Wt<W>>, b: Option<Wt<W>>) -> Option<Wt<W>> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if x <= y { x } else { y }),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

/// The minset X_i: per supervertex, all edges lighter than its threshold.
fn cut_below<W: Ord + Clone>(
    device: &Device,
    edges: &DiskArray<DirEdge<W>>,
    r_map: &DiskArray<ThreshRec<W>>,
) -> Result<DiskArray<DirEdge<W>>> {
    let mut w = ArrayWriter::new(device)?;
    let mut r_stream = r_map.stream().peekable();
    for e in edges.stream() {
        while r_stream.peek().map_or(false, |&(v, _)| v < e.src) {
            r_stream.next();
        }
        let below = match r_stream.peek() {
            Some((v, Some(h))) if *v == e.src => e.wt < *h,
            _ => true, // missing or infinite threshold
        };
        if below {
            w.push(e)?;
        }
    }
    Ok(w.finish())
}

/// compose(lower, upper): the map v -> upper(lower(v)) over the union of
/// both domains, with identity defaults. Both inputs sorted by child; the
/// result is sorted by child.
fn compose_maps(
    device: &Device,
    lower: DiskArray<(u32, u32)>,
    upper: &DiskArray<(u32, u32)>,
) -> Result<DiskArray<(u32, u32)>> {
    if lower.is_empty() {
        return clone_array(device, upper);
    }
    if upper.is_empty() {
        return Ok(lower);
    }
    // pass 1: rewrite lower's roots through upper
    let lower_by_root = em_sort_by_key(&lower, |p| p.1)?;
    let mut rewritten = ArrayWriter::new(device)?;
    {
        let mut up = upper.stream().peekable();
        for (c, r) in lower_by_root.stream() {
            while up.peek().map_or(false, |&(uc, _)| uc < r) {
                up.next();
            }
            match up.peek() {
                Some(&(uc, ur)) if uc == r => rewritten.push((c, ur))?,
                _ => rewritten.push((c, r))?,
            }
        }
    }
    // pass 2: upper entries whose child is not a lower child
    let mut extras = ArrayWriter::new(device)?;
    {
        let mut low = lower.stream().peekable();
        for (uc, ur) in upper.stream() {
            while low.peek().map_or(false, |&(lc, _)| lc < uc) {
                low.next();
            }
            match low.peek() {
                Some(&(lc, _)) if lc == uc => {}
                _ => extras.push((uc, ur))?,
            }
        }
    }
    let rewritten = rewritten.finish();
    let extras = extras.finish();
    let mut combined = ArrayWriter::new(device)?;
    for p in rewritten.stream() {
        combined.push(p)?;
    }
    for p in extras.stream() {
        combined.push(p)?;
    }
    em_sort_by_key(&combined.finish(), |p| p.0).map_err(Into::into)
}

fn compose_empty_buckets<W: Ord + Clone>(
    device: &Device,
    buckets: &[Bucket<W>],
    g: usize,
) -> Result<DiskArray<(u32, u32)>> {
    let mut acc = DiskArray::from_vec(device, Vec::new())?;
    for k in (1..=g).rev() {
        if let Bucket::Stars(s) = &buckets[k] {
            acc = compose_maps(device, acc, s)?;
        }
    }
    Ok(acc)
}

fn single_orientation<W: Ord + Clone>(edges: &DiskArray<DirEdge<W>>) -> Vec<DirEdge<W>> {
    edges.stream().filter(|e| e.src < e.dst).collect()
}

fn clone_array<T: Clone>(device: &Device, arr: &DiskArray<T>) -> Result<DiskArray<T>> {
    let mut w = ArrayWriter::new(device)?;
    for item in arr.stream() {
        w.push(item)?;
    }
    Ok(w.finish())
}

fn fullness_of<W>(buckets: &[Bucket<W>], g: usize) -> Vec<bool> {
    (1..=g + 1)
        .map(|k| matches!(buckets[k], Bucket::Edges { .. }))
        .collect()
}

fn trace_sizes(
    sizes: &HashMap<u32, u64>,
    totals: &HashMap<u32, u64>,
) -> Vec<(u32, u64, u64)> {
    let mut out: Vec<(u32, u64, u64)> = sizes
        .iter()
        .map(|(&v, &s)| (v, s, totals.get(&v).copied().unwrap_or(s)))
        .collect();
    out.sort_unstable();
    out
}

trait CollectMap {
    fn collect_map(self) -> HashMap<u32, u32>;
}

impl<I: Iterator<Item = (u32, u32)>> CollectMap for I {
    fn collect_map(self) -> HashMap<u32, u32> {
        self.collect()
    }
}

// local union-find for trace bookkeeping only
struct DsuLocal {
    parent: Vec<usize>,
}

impl DsuLocal {
    fn new(n: usize) -> Self {
        DsuLocal {
            parent: (0..n).collect(),
        }
    }
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}
