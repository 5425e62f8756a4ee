//! Output verifiers: given a graph and a claimed solution, check feasibility
//! by direct adjacency scans.

use std::collections::HashSet;

/// Independent and maximal: no two chosen vertices adjacent, and every
/// unchosen vertex has a chosen neighbour.
pub fn check_mis(n: usize, edges: &[(u32, u32)], set: &[u32]) -> Result<(), String> {
    let chosen: HashSet<u32> = set.iter().copied().collect();
    for &(u, v) in edges {
        if u != v && chosen.contains(&u) && chosen.contains(&v) {
            return Err(format!("vertices {u} and {v} both chosen but adjacent"));
        }
    }
    let mut dominated = vec![false; n];
    for &v in &chosen {
        dominated[v as usize] = true;
    }
    for &(u, v) in edges {
        if chosen.contains(&u) {
            dominated[v as usize] = true;
        }
        if chosen.contains(&v) {
            dominated[u as usize] = true;
        }
    }
    match dominated.iter().position(|&d| !d) {
        Some(v) => Err(format!("vertex {v} neither chosen nor dominated")),
        None => Ok(()),
    }
}

/// Proper colouring with at most `max_colours` distinct colours.
pub fn check_colouring(
    _n: usize,
    edges: &[(u32, u32)],
    colour: &[u32],
    max_colours: usize,
) -> Result<(), String> {
    for &(u, v) in edges {
        if u != v && colour[u as usize] == colour[v as usize] {
            return Err(format!("edge ({u},{v}) monochromatic"));
        }
    }
    let used: HashSet<u32> = colour.iter().copied().collect();
    if used.len() > max_colours {
        return Err(format!("{} colours used, {} allowed", used.len(), max_colours));
    }
    Ok(())
}

/// Matching (vertex-disjoint) and maximal (every edge touches a matched vertex).
pub fn check_maximal_matching(
    _n: usize,
    edges: &[(u32, u32)],
    matching: &[(u32, u32)],
) -> Result<(), String> {
    let mut touched = HashSet::new();
    for &(u, v) in matching {
        if !touched.insert(u) || !touched.insert(v) {
            return Err(format!("matching edge ({u},{v}) shares a vertex"));
        }
    }
    for &(u, v) in edges {
        if u != v && !touched.contains(&u) && !touched.contains(&v) {
            return Err(format!("edge ({u},{v}) uncovered by the matching"));
        }
    }
    Ok(())
}

/// Vertex cover feasibility.
pub fn check_vertex_cover(_n: usize, edges: &[(u32, u32)], cover: &[u32]) -> Result<(), String> {
    let in_cover: HashSet<u32> = cover.iter().copied().collect();
    for &(u, v) in edges {
        if !in_cover.contains(&u) && !in_cover.contains(&v) {
            return Err(format!("edge ({u},{v}) not covered"));
        }
    }
    Ok(())
}

/// DFS-tree property: for every graph edge (u,v), the least common ancestor
/// of u and v in the tree is u or v (no cross edges).
pub fn check_dfs_tree(
    n: usize,
    edges: &[(u32, u32)],
    parent: &[Option<u32>],
) -> Result<(), String> {
    let mut depth = vec![0usize; n];
    let order = topo_order_by_parent(n, parent)?;
    for &v in &order {
        if let Some(p) = parent[v as usize] {
            depth[v as usize] = depth[p as usize] + 1;
        }
    }
    let lca = |mut a: u32, mut b: u32| -> u32 {
        while a != b {
            if depth[a as usize] >= depth[b as usize] {
                a = parent[a as usize].expect("walk past root");
            } else {
                b = parent[b as usize].expect("walk past root");
            }
        }
        a
    };
    for &(u, v) in edges {
        if u == v {
            continue;
        }
        let l = lca(u, v);
        if l != u && l != v {
            return Err(format!("edge ({u},{v}) is a cross edge (lca {l})"));
        }
    }
    Ok(())
}

fn topo_order_by_parent(n: usize, parent: &[Option<u32>]) -> Result<Vec<u32>, String> {
    // roots first, then children, detecting cycles
    let mut children = vec![Vec::new(); n];
    let mut order = Vec::with_capacity(n);
    for v in 0..n {
        match parent[v] {
            Some(p) => children[p as usize].push(v as u32),
            None => order.push(v as u32),
        }
    }
    let mut i = 0;
    while i < order.len() {
        let v = order[i];
        i += 1;
        order.extend(children[v as usize].iter().copied());
    }
    if order.len() != n {
        return Err("parent pointers contain a cycle".into());
    }
    Ok(order)
}
