//! Hook-and-contract: turn a set of per-vertex lightest out-edges into star
//! graphs via an Euler tour and OR-style list ranking.

use crate::{DirEdge, Result};
use em_core::{em_euler_tour, em_list_fold, ArrayWriter, Device, DiskArray, ListRecord};
use std::collections::{HashMap, HashSet};

/// Contract the pseudo-forest S (at most one out-edge per source). Returns
/// the star map child -> root for every vertex incident to S, rooting each
/// component at the smaller endpoint of its 2-cycle, or at its unique
/// hookless vertex.
pub fn contract<W: Ord + Clone>(
    device: &Device,
    s: &[DirEdge<W>],
) -> Result<HashMap<u32, u32>> {
    if s.is_empty() {
        return Ok(HashMap::new());
    }
    let out: HashMap<u32, u32> = s.iter().map(|e| (e.src, e.dst)).collect();
    debug_assert_eq!(out.len(), s.len(), "more than one out-edge per source");

    // every cycle in the pseudo-forest is a mutual pair; drop the arc leaving
    // the smaller endpoint, making it the root
    let mut arcs: Vec<(u32, u32)> = Vec::with_capacity(s.len());
    let mut roots: HashSet<u32> = HashSet::new();
    for e in s {
        let (u, v) = (e.src, e.dst);
        if out.get(&v) == Some(&u) {
            // mutual pair; keep only the arc from the larger endpoint
            if u < v {
                roots.insert(u);
                continue;
            }
        }
        arcs.push((u, v));
    }
    // hookless targets are roots of their in-trees
    for e in s {
        if !out.contains_key(&e.dst) {
            roots.insert(e.dst);
        }
    }

    // every mutual pair keeps one arc, so the arc set is nonempty and its
    // underlying undirected graph is a forest
    let undirected: Vec<(u64, u64)> = arcs.iter().map(|&(u, v)| (u as u64, v as u64)).collect();
    let edge_arr = DiskArray::from_vec(device, undirected)?;
    let tour = em_euler_tour(device, &edge_arr)?;

    // break each tree's tour at its root's first out-arc and mark the arc
    // list so an OR fold propagates the root id to every arc
    let tour_arcs = tour.arcs().to_vec();
    let n_arcs = tour_arcs.len();
    let mut succ: Vec<Option<u64>> = tour_arcs.iter().map(|a| Some(a.succ as u64)).collect();
    let mut marker: Vec<u64> = vec![0; n_arcs];
    for &r in &roots {
        if let Some(start) = tour.first_out(r as u64) {
            // the arc preceding `start` ends the list; it carries the marker
            let before = tour_arcs
                .iter()
                .position(|a| a.succ == start)
                .expect("tour cycle");
            succ[before] = None;
            marker[before] = r as u64 + 1;
        }
    }
    let mut pred: Vec<Option<u64>> = vec![None; n_arcs];
    for (i, s) in succ.iter().enumerate() {
        if let Some(s) = s {
            pred[*s as usize] = Some(i as u64);
        }
    }
    // rank with addition replaced by bitwise OR, traversing in reverse so
    // the marked arc is the head of its list
    let mut records = ArrayWriter::new(device)?;
    for i in 0..n_arcs {
        records.push(ListRecord {
            id: i as u64,
            succ: pred[i],
            pred: succ[i],
            weight: marker[i],
        })?;
    }
    let folded = em_list_fold(&records.finish(), |a, b| a | b)?;

    let mut map: HashMap<u32, u32> = HashMap::new();
    for (arc_idx, root_mark) in folded.stream() {
        debug_assert!(root_mark > 0, "arc reached by no root marker");
        let root = (root_mark - 1) as u32;
        let a = tour_arcs[arc_idx as usize];
        map.insert(a.from as u32, root);
        map.insert(a.to as u32, root);
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use em_core::DeviceParams;

    fn dev() -> Device {
        Device::new(DeviceParams::new(4, 16).unwrap())
    }

    fn arc(src: u32, dst: u32, id: u32) -> DirEdge<u32> {
        DirEdge {
            src,
            dst,
            wt: (id, id),
        }
    }

    #[test]
    fn mutual_pair_roots_at_smaller() {
        let s = vec![arc(3, 7, 0), arc(7, 3, 0)];
        let map = contract(&dev(), &s).unwrap();
        assert_eq!(map[&7], 3);
        assert_eq!(map[&3], 3);
    }

    #[test]
    fn star_hooks_to_center() {
        // every leaf hooks to c = 2; 2 hooks back to one of them, forming the
        // only cycle
        let s = vec![arc(5, 2, 0), arc(9, 2, 1), arc(4, 2, 2), arc(2, 4, 2)];
        let map = contract(&dev(), &s).unwrap();
        assert_eq!(map[&5], 2);
        assert_eq!(map[&9], 2);
        assert_eq!(map[&4], 2);
        assert_eq!(map[&2], 2);
    }

    #[test]
    fn chain_with_hookless_top() {
        // 1 -> 2 -> 3, vertex 3 has no out-edge: root 3
        let s = vec![arc(1, 2, 0), arc(2, 3, 1)];
        let map = contract(&dev(), &s).unwrap();
        assert_eq!(map[&1], 3);
        assert_eq!(map[&2], 3);
        assert_eq!(map[&3], 3);
    }

    #[test]
    fn random_pseudo_forest_matches_union_find() {
        use rand::seq::SliceRandom;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for round in 0..20 {
            // valid hook sets: in-trees whose tops either stay hookless or
            // close a mutual pair with their first child
            let n = 1000u32;
            let mut order: Vec<u32> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut keep: Vec<DirEdge<u32>> = Vec::new();
            let mut i = 0usize;
            while i < order.len() {
                let size = rng.gen_range(1..20).min(order.len() - i);
                let tree = &order[i..i + size];
                i += size;
                if size == 1 {
                    continue; // isolated vertex, no hooks
                }
                for (j, &v) in tree.iter().enumerate().skip(1) {
                    let parent = tree[rng.gen_range(0..j)];
                    keep.push(arc(v, parent, v));
                }
                if rng.gen_bool(0.5) {
                    // close the cycle: top hooks back to its first child
                    keep.push(arc(tree[0], tree[1], tree[0]));
                }
            }
            let map = contract(&dev(), &keep).unwrap();
            let mut dsu = oracles::Dsu::new(n as usize);
            for e in &keep {
                dsu.union(e.src as usize, e.dst as usize);
            }
            for e in &keep {
                assert!(
                    dsu.same(e.src as usize, map[&e.src] as usize),
                    "round {round}: root outside component"
                );
                assert_eq!(map[&e.src], map[&e.dst], "endpoints disagree on root");
            }
        }
    }
}
