//! Brute-force reference implementations used to check the instrumented
//! algorithms. Everything here is plain in-memory code, kept deliberately
//! simple and independent of the simulated machines it validates.

pub mod dsu;
pub mod gen;
pub mod graph;
pub mod mincut;
pub mod verify;

pub use dsu::Dsu;

/// Kruskal's algorithm. Returns (total weight, chosen edge indices).
///
/// Ties are broken by edge index, but any tie-break yields the same total
/// weight, which is what the oracle comparisons use.
pub fn kruskal(n: usize, edges: &[(u32, u32, u64)]) -> (u64, Vec<usize>) {
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by_key(|&i| (edges[i].2, i));
    let mut dsu = Dsu::new(n);
    let mut total = 0u64;
    let mut chosen = Vec::new();
    for i in order {
        let (u, v, w) = edges[i];
        if dsu.union(u as usize, v as usize) {
            total += w;
            chosen.push(i);
        }
    }
    (total, chosen)
}

/// Component label (smallest vertex id in the component) for every vertex.
pub fn components(n: usize, edges: &[(u32, u32)]) -> Vec<u32> {
    let mut dsu = Dsu::new(n);
    for &(u, v) in edges {
        dsu.union(u as usize, v as usize);
    }
    let mut label = vec![u32::MAX; n];
    for v in 0..n {
        let r = dsu.find(v);
        label[r] = label[r].min(v as u32);
    }
    (0..n).map(|v| label[dsu.find(v)]).collect()
}

/// Dijkstra with non-negative integer edge weights. `u64::MAX` marks
/// unreachable vertices.
pub fn dijkstra(n: usize, adj: &[Vec<(u32, u64)>], source: u32) -> Vec<u64> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let mut dist = vec![u64::MAX; n];
    dist[source as usize] = 0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0u64, source)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if d > dist[u as usize] {
            continue;
        }
        for &(v, w) in &adj[u as usize] {
            let nd = d + w;
            if nd < dist[v as usize] {
                dist[v as usize] = nd;
                heap.push(Reverse((nd, v)));
            }
        }
    }
    dist
}

/// BFS levels from `source`; `u32::MAX` marks unreachable vertices.
pub fn bfs_levels(n: usize, adj: &[Vec<u32>], source: u32) -> Vec<u32> {
    let mut level = vec![u32::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    level[source as usize] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u as usize] {
            if level[v as usize] == u32::MAX {
                level[v as usize] = level[u as usize] + 1;
                queue.push_back(v);
            }
        }
    }
    level
}

/// Number of inversions, counted by merge sort in O(n log n).
pub fn inversions<T: Ord + Clone>(items: &[T]) -> u64 {
    fn rec<T: Ord + Clone>(items: &mut [T]) -> u64 {
        let n = items.len();
        if n <= 1 {
            return 0;
        }
        let mid = n / 2;
        let (left, right) = items.split_at_mut(mid);
        let mut inv = rec(left) + rec(right);
        let mut merged = Vec::with_capacity(n);
        let (mut i, mut j) = (0, 0);
        while i < left.len() && j < right.len() {
            if left[i] <= right[j] {
                merged.push(left[i].clone());
                i += 1;
            } else {
                inv += (left.len() - i) as u64;
                merged.push(right[j].clone());
                j += 1;
            }
        }
        merged.extend_from_slice(&left[i..]);
        merged.extend_from_slice(&right[j..]);
        items.clone_from_slice(&merged);
        inv
    }
    let mut copy = items.to_vec();
    rec(&mut copy)
}

/// Maximum matching size by bitmask DP; intended for n <= 20.
pub fn maximum_matching_size(n: usize, edges: &[(u32, u32)]) -> usize {
    assert!(n <= 20, "bitmask matching oracle limited to n <= 20");
    let mut memo = vec![u8::MAX; 1usize << n];
    fn solve(mask: usize, n: usize, edges: &[(u32, u32)], memo: &mut [u8]) -> u8 {
        if memo[mask] != u8::MAX {
            return memo[mask];
        }
        // skip the lowest unused vertex or match it
        let mut v = 0;
        while v < n && mask & (1 << v) != 0 {
            v += 1;
        }
        if v == n {
            memo[mask] = 0;
            return 0;
        }
        let mut best = solve(mask | (1 << v), n, edges, memo);
        for &(a, b) in edges {
            let (a, b) = (a as usize, b as usize);
            let (a, b) = if a == v { (a, b) } else if b == v { (b, a) } else { continue };
            if mask & (1 << b) == 0 && a != b {
                let r = 1 + solve(mask | (1 << a) | (1 << b), n, edges, memo);
                best = best.max(r);
            }
        }
        memo[mask] = best;
        best
    }
    solve(0, n, edges, &mut memo) as usize
}

/// Minimum-weight vertex cover by exhaustive search; intended for n <= 14.
pub fn min_weight_vertex_cover(n: usize, edges: &[(u32, u32)], weights: &[u64]) -> u64 {
    assert!(n <= 20, "exhaustive cover oracle limited to small n");
    let mut best = u64::MAX;
    for mask in 0usize..(1 << n) {
        if edges
            .iter()
            .all(|&(u, v)| mask & (1 << u) != 0 || mask & (1 << v) != 0)
        {
            let w: u64 = (0..n).filter(|&v| mask & (1 << v) != 0).map(|v| weights[v]).sum();
            best = best.min(w);
        }
    }
    best
}

/// Recursive expression-tree evaluation: `children[v]` lists v's children,
/// leaves carry scalars, internal nodes an operator tag.
pub fn eval_expr_tree(root: usize, children: &[Vec<usize>], value: &[i64], op: &[ExprOp]) -> i64 {
    if children[root].is_empty() {
        return value[root];
    }
    let kids: Vec<i64> = children[root]
        .iter()
        .map(|&c| eval_expr_tree(c, children, value, op))
        .collect();
    match op[root] {
        ExprOp::Add => kids.iter().sum(),
        ExprOp::Mul => kids.iter().product(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExprOp {
    Add,
    Mul,
}

/// Rooted-tree labellings computed by plain recursion: (preorder, postorder,
/// depth, descendant count), with preorder/postorder numbered from 1.
pub fn tree_labels(
    n: usize,
    root: usize,
    children: &[Vec<usize>],
) -> (Vec<u64>, Vec<u64>, Vec<u64>, Vec<u64>) {
    let mut pre = vec![0u64; n];
    let mut post = vec![0u64; n];
    let mut depth = vec![0u64; n];
    let mut desc = vec![1u64; n];
    let mut pre_ctr = 0u64;
    let mut post_ctr = 0u64;
    // explicit stack to avoid recursion limits on deep trees
    let mut stack = vec![(root, 0usize)];
    pre_ctr += 1;
    pre[root] = pre_ctr;
    while let Some(&mut (v, ref mut idx)) = stack.last_mut() {
        if *idx < children[v].len() {
            let c = children[v][*idx];
            *idx += 1;
            depth[c] = depth[v] + 1;
            pre_ctr += 1;
            pre[c] = pre_ctr;
            stack.push((c, 0));
        } else {
            post_ctr += 1;
            post[v] = post_ctr;
            stack.pop();
            if let Some(&(p, _)) = stack.last() {
                desc[p] += desc[v];
            }
        }
    }
    (pre, post, depth, desc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kruskal_triangle() {
        let (w, chosen) = kruskal(3, &[(0, 1, 1), (1, 2, 2), (0, 2, 3)]);
        assert_eq!(w, 3);
        assert_eq!(chosen.len(), 2);
    }

    #[test]
    fn inversion_count_small() {
        assert_eq!(inversions(&[1, 2, 3]), 0);
        assert_eq!(inversions(&[3, 2, 1]), 3);
        assert_eq!(inversions(&[2, 1, 3, 5, 4]), 2);
    }

    #[test]
    fn matching_oracle_triangle() {
        assert_eq!(maximum_matching_size(3, &[(0, 1), (1, 2), (0, 2)]), 1);
        assert_eq!(maximum_matching_size(4, &[(0, 1), (2, 3)]), 2);
    }

    #[test]
    fn cover_oracle_single_edge() {
        assert_eq!(min_weight_vertex_cover(2, &[(0, 1)], &[1, 3]), 1);
    }
}
