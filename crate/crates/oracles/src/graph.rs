//! Small adjacency helpers shared by the oracle routines and tests.

/// Undirected adjacency lists from an edge list.
pub fn adjacency(n: usize, edges: &[(u32, u32)]) -> Vec<Vec<u32>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u as usize].push(v);
        adj[v as usize].push(u);
    }
    adj
}

/// Weighted undirected adjacency lists.
pub fn adjacency_weighted(n: usize, edges: &[(u32, u32, u64)]) -> Vec<Vec<(u32, u64)>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v, w) in edges {
        adj[u as usize].push((v, w));
        adj[v as usize].push((u, w));
    }
    adj
}

pub fn is_connected(n: usize, edges: &[(u32, u32)]) -> bool {
    if n == 0 {
        return true;
    }
    let adj = adjacency(n, edges);
    let levels = crate::bfs_levels(n, &adj, 0);
    levels.iter().all(|&l| l != u32::MAX)
}

/// Minimum vertex degree; zero for an empty vertex set is reported as 0.
pub fn min_degree(n: usize, edges: &[(u32, u32)]) -> usize {
    let mut deg = vec![0usize; n];
    for &(u, v) in edges {
        deg[u as usize] += 1;
        deg[v as usize] += 1;
    }
    deg.into_iter().min().unwrap_or(0)
}
