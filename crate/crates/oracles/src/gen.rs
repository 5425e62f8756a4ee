//! Deterministic random-instance generators. Every generator is a pure
//! function of its parameters and seed.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// G(n, m): m distinct edges chosen uniformly, no self loops.
pub fn gnm(n: usize, m: usize, seed: u64) -> Vec<(u32, u32)> {
    let max = n * (n - 1) / 2;
    assert!(m <= max, "gnm: too many edges requested");
    let mut r = rng(seed);
    let mut seen = HashSet::new();
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let u = r.gen_range(0..n as u32);
        let v = r.gen_range(0..n as u32);
        if u == v {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if seen.insert(key) {
            edges.push(key);
        }
    }
    edges
}

/// Connected G(n, m): a random spanning tree plus extra random edges.
pub fn gnm_connected(n: usize, m: usize, seed: u64) -> Vec<(u32, u32)> {
    assert!(m + 1 >= n, "need at least n-1 edges for connectivity");
    let mut r = rng(seed);
    let mut edges = Vec::with_capacity(m);
    let mut seen = HashSet::new();
    for (u, v) in random_tree(n, seed ^ 0x9e37_79b9) {
        seen.insert((u.min(v), u.max(v)));
        edges.push((u.min(v), u.max(v)));
    }
    while edges.len() < m {
        let u = r.gen_range(0..n as u32);
        let v = r.gen_range(0..n as u32);
        if u == v {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if seen.insert(key) {
            edges.push(key);
        }
    }
    edges
}

/// Uniform random labelled tree (Prüfer-free: random attachment over a
/// shuffled vertex order).
pub fn random_tree(n: usize, seed: u64) -> Vec<(u32, u32)> {
    let mut r = rng(seed);
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(&mut r);
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for i in 1..n {
        let j = r.gen_range(0..i);
        edges.push((order[j], order[i]));
    }
    edges
}

pub fn cycle(n: usize) -> Vec<(u32, u32)> {
    (0..n as u32).map(|i| (i, (i + 1) % n as u32)).collect()
}

pub fn complete(n: usize) -> Vec<(u32, u32)> {
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in (u + 1)..n as u32 {
            edges.push((u, v));
        }
    }
    edges
}

/// rows x cols grid graph, vertices numbered row-major.
pub fn grid(rows: usize, cols: usize) -> Vec<(u32, u32)> {
    let mut edges = Vec::new();
    let id = |r: usize, c: usize| (r * cols + c) as u32;
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    edges
}

/// Random weights in [1, max_w] attached to an edge list.
pub fn with_weights(edges: &[(u32, u32)], max_w: u64, seed: u64) -> Vec<(u32, u32, u64)> {
    let mut r = rng(seed);
    edges
        .iter()
        .map(|&(u, v)| (u, v, r.gen_range(1..=max_w)))
        .collect()
}

/// Random intervals: n triples (left, right, weight) with all 2n endpoint
/// values distinct integers.
pub fn random_intervals(n: usize, span: u64, max_w: u64, seed: u64) -> Vec<(u64, u64, u64)> {
    let mut r = rng(seed);
    let mut points: Vec<u64> = HashSet::<u64>::from_iter(
        std::iter::repeat_with(|| r.gen_range(0..span.max(2 * n as u64 * 4))).take(4 * n),
    )
    .into_iter()
    .collect();
    points.sort_unstable();
    assert!(points.len() >= 2 * n, "not enough distinct endpoints drawn");
    points.truncate(2 * n);
    points.shuffle(&mut r);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let a = points[2 * i];
        let b = points[2 * i + 1];
        out.push((a.min(b), a.max(b), r.gen_range(1..=max_w)));
    }
    out
}

/// A batch of `k` monotonic doubly linked lists over nodes 0..n-1, returned
/// as (pred, succ) per node.
pub fn monotonic_lists(n: usize, k: usize, seed: u64) -> Vec<(Option<u32>, Option<u32>)> {
    assert!(k >= 1 && k <= n);
    let mut r = rng(seed);
    let mut assignment: Vec<usize> = (0..n).map(|i| i % k).collect();
    assignment.shuffle(&mut r);
    // force every list nonempty by construction above (i % k covers all k)
    let mut nodes = vec![(None, None); n];
    let mut last: Vec<Option<u32>> = vec![None; k];
    for i in 0..n {
        let list = assignment[i];
        if let Some(prev) = last[list] {
            nodes[prev as usize].1 = Some(i as u32);
            nodes[i].0 = Some(prev);
        }
        last[list] = Some(i as u32);
    }
    nodes
}

/// A general doubly linked list over 0..n-1 with randomly interleaved
/// forward and backward stretches: returns (pred, succ) per node.
pub fn zigzag_list(n: usize, stretches: usize, seed: u64) -> Vec<(Option<u32>, Option<u32>)> {
    assert!(n >= 1);
    let mut r = StdRng::seed_from_u64(seed);
    let mut order: Vec<u32> = (0..n as u32).collect();
    // arrange the traversal order so positions alternate runs up and down
    order.shuffle(&mut r);
    let mut chain: Vec<u32> = Vec::with_capacity(n);
    let mut remaining: Vec<u32> = order;
    let mut ascending = true;
    while !remaining.is_empty() {
        let take = r
            .gen_range(1..=((n / stretches).max(1)))
            .min(remaining.len());
        let mut run: Vec<u32> = remaining.drain(..take).collect();
        run.sort_unstable();
        if !ascending {
            run.reverse();
        }
        chain.extend(run);
        ascending = !ascending;
    }
    let mut nodes = vec![(None, None); n];
    for w in chain.windows(2) {
        let (a, b) = (w[0], w[1]);
        nodes[a as usize].1 = Some(b);
        nodes[b as usize].0 = Some(a);
    }
    nodes
}
