//! Reference minimum-cut computations: Stoer-Wagner for moderate graphs and
//! an exhaustive partition scan for tiny ones. Both operate on unweighted
//! multigraphs given as edge lists (parallel edges count toward cut values).

/// Stoer-Wagner minimum cut on an unweighted multigraph. Returns the cut
/// value; `n >= 2` and the graph should be connected for a meaningful answer.
pub fn stoer_wagner(n: usize, edges: &[(u32, u32)]) -> u64 {
    assert!(n >= 2);
    let mut w = vec![vec![0u64; n]; n];
    for &(u, v) in edges {
        if u != v {
            w[u as usize][v as usize] += 1;
            w[v as usize][u as usize] += 1;
        }
    }
    let mut active: Vec<usize> = (0..n).collect();
    let mut best = u64::MAX;
    while active.len() > 1 {
        // maximum adjacency ordering
        let m = active.len();
        let mut in_a = vec![false; m];
        let mut weight_to_a = vec![0u64; m];
        let mut order = Vec::with_capacity(m);
        for _ in 0..m {
            let mut pick = usize::MAX;
            for i in 0..m {
                if !in_a[i] && (pick == usize::MAX || weight_to_a[i] > weight_to_a[pick]) {
                    pick = i;
                }
            }
            in_a[pick] = true;
            order.push(pick);
            for i in 0..m {
                if !in_a[i] {
                    weight_to_a[i] += w[active[pick]][active[i]];
                }
            }
        }
        let t = order[m - 1];
        let s = order[m - 2];
        best = best.min(weight_to_a[t]);
        // merge t into s
        let (vs, vt) = (active[s], active[t]);
        for i in 0..n {
            w[vs][i] += w[vt][i];
            w[i][vs] += w[i][vt];
        }
        w[vs][vs] = 0;
        active.remove(t);
    }
    best
}

/// Exhaustive 2^(n-1) partition scan. Returns (cut value, side not containing
/// vertex 0). Intended for n <= 12.
pub fn exhaustive_mincut(n: usize, edges: &[(u32, u32)]) -> (u64, Vec<u32>) {
    assert!((2..=20).contains(&n));
    let mut best = u64::MAX;
    let mut best_side = Vec::new();
    // vertex 0 stays on the fixed side; enumerate subsets of the rest
    for mask in 1u32..(1 << (n - 1)) {
        let side = |v: u32| -> bool { v != 0 && mask & (1 << (v - 1)) != 0 };
        let value = edges
            .iter()
            .filter(|&&(u, v)| side(u) != side(v))
            .count() as u64;
        if value < best {
            best = value;
            best_side = (1..n as u32).filter(|&v| side(v)).collect();
        }
    }
    (best, best_side)
}

/// Cut value of a given side (vertex subset) in an unweighted multigraph.
pub fn cut_value(edges: &[(u32, u32)], side: &[u32]) -> u64 {
    let side: std::collections::HashSet<u32> = side.iter().copied().collect();
    edges
        .iter()
        .filter(|&&(u, v)| side.contains(&u) != side.contains(&v))
        .count() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_has_cut_two() {
        let edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)];
        assert_eq!(stoer_wagner(5, &edges), 2);
        assert_eq!(exhaustive_mincut(5, &edges).0, 2);
    }

    #[test]
    fn complete_graph_cut() {
        let mut edges = Vec::new();
        for u in 0..5u32 {
            for v in (u + 1)..5 {
                edges.push((u, v));
            }
        }
        assert_eq!(stoer_wagner(5, &edges), 4);
        assert_eq!(exhaustive_mincut(5, &edges).0, 4);
    }

    #[test]
    fn parallel_edges_count() {
        let edges = [(0, 1), (0, 1), (1, 2), (2, 0)];
        assert_eq!(stoer_wagner(3, &edges), 2);
    }
}
