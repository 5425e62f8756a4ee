//! Rooted-forest labellings derived from Euler tours and list ranking:
//! parents, tree roots, depths, preorder numbers and subtree sizes.
//!
//! The heavy lifting runs through the device-backed primitives; the results
//! come back as plain maps for the desk-scale consumers in the algorithm
//! crates.

use crate::device::{ArrayWriter, Device, DiskArray};
use crate::euler::em_euler_tour;
use crate::list_rank::{em_list_fold, ListRecord};
use crate::{EmError, Result};
use std::collections::HashMap;

#[derive(Debug, Default)]
pub struct ForestLabels {
    /// Parent of every non-root vertex.
    pub parent: HashMap<u64, u64>,
    /// Tree root of every vertex (roots map to themselves).
    pub root_of: HashMap<u64, u64>,
    /// Depth from the root (roots have depth 0).
    pub depth: HashMap<u64, u64>,
    /// Preorder number within the vertex's tree, numbered from 1.
    pub preorder: HashMap<u64, u64>,
    /// Number of vertices in the subtree (inclusive).
    pub subtree: HashMap<u64, u64>,
}

/// Root each tree of the forest at the given root and compute all labels.
/// `roots` must contain exactly one vertex per tree; isolated vertices may
/// be listed as roots of singleton trees.
pub fn label_forest(
    device: &Device,
    edges: &DiskArray<(u64, u64)>,
    roots: &[u64],
) -> Result<ForestLabels> {
    let tour = em_euler_tour(device, edges)?;
    let arcs = tour.arcs().to_vec();
    let n_arcs = arcs.len();

    let mut labels = ForestLabels::default();
    let root_set: HashMap<u64, ()> = roots.iter().map(|&r| (r, ())).collect();
    if root_set.len() != roots.len() {
        return Err(EmError::Precondition("duplicate roots".into()));
    }
    for &r in roots {
        labels.root_of.insert(r, r);
        labels.depth.insert(r, 0);
        labels.preorder.insert(r, 1);
        labels.subtree.insert(r, 1);
    }
    if n_arcs == 0 {
        return Ok(labels);
    }

    // break each tree's tour cycle just before the root's first out-arc
    let mut head_of_arc: Vec<Option<u64>> = vec![None; n_arcs]; // root + 1 marker
    let mut broken_succ: Vec<Option<u64>> = arcs.iter().map(|a| Some(a.succ as u64)).collect();
    let mut pred: Vec<Option<u64>> = vec![None; n_arcs];
    for &r in roots {
        if let Some(start) = tour.first_out(r) {
            head_of_arc[start] = Some(r + 1);
            // find the arc whose successor is `start`
            let before = arcs
                .iter()
                .position(|a| a.succ == start)
                .expect("tour is a cycle");
            broken_succ[before] = None;
        }
    }
    for (i, s) in broken_succ.iter().enumerate() {
        if let Some(s) = s {
            pred[*s as usize] = Some(i as u64);
        }
    }
    for (i, h) in head_of_arc.iter().enumerate() {
        if h.is_some() && pred[i].is_some() {
            return Err(EmError::Precondition(format!(
                "root {} is not the head of its tour; one root per tree required",
                h.unwrap() - 1
            )));
        }
    }
    if pred.iter().zip(head_of_arc.iter()).any(|(p, h)| p.is_none() && h.is_none()) {
        return Err(EmError::Precondition(
            "a tree has no designated root".into(),
        ));
    }

    // fold 1: arc positions (+) and root marker (max)
    #[derive(Clone)]
    struct W1 {
        pos: u64,
        root: u64,
    }
    let mut w = ArrayWriter::new(device)?;
    for i in 0..n_arcs {
        w.push(ListRecord {
            id: i as u64,
            succ: broken_succ[i],
            pred: pred[i],
            weight: W1 {
                pos: 1,
                root: head_of_arc[i].unwrap_or(0),
            },
        })?;
    }
    let fold1 = em_list_fold(&w.finish(), |a, b| W1 {
        pos: a.pos + b.pos,
        root: a.root.max(b.root),
    })?;
    let fold1: Vec<W1> = fold1.stream().map(|(_, v)| v).collect();

    // orient: arc i is downward iff it precedes its twin in the tour
    let mut down = vec![false; n_arcs];
    for (i, arc) in arcs.iter().enumerate() {
        down[i] = fold1[i].pos < fold1[arc.twin].pos;
    }
    for (i, arc) in arcs.iter().enumerate() {
        if down[i] {
            labels.parent.insert(arc.to, arc.from);
        }
        let root = fold1[i].root;
        debug_assert!(root > 0, "arc not reached from any root");
        labels.root_of.insert(arc.from, root - 1);
        labels.root_of.insert(arc.to, root - 1);
    }

    // fold 2: preorder count (down arcs) and signed depth
    #[derive(Clone)]
    struct W2 {
        pre: u64,
        depth: i64,
    }
    let mut w = ArrayWriter::new(device)?;
    for i in 0..n_arcs {
        w.push(ListRecord {
            id: i as u64,
            succ: broken_succ[i],
            pred: pred[i],
            weight: W2 {
                pre: down[i] as u64,
                depth: if down[i] { 1 } else { -1 },
            },
        })?;
    }
    let fold2 = em_list_fold(&w.finish(), |a, b| W2 {
        pre: a.pre + b.pre,
        depth: a.depth + b.depth,
    })?;
    let fold2: Vec<W2> = fold2.stream().map(|(_, v)| v).collect();

    for (i, arc) in arcs.iter().enumerate() {
        if down[i] {
            let v = arc.to;
            labels.depth.insert(v, fold2[i].depth as u64);
            labels.preorder.insert(v, fold2[i].pre + 1);
            let up = arc.twin;
            labels.subtree.insert(v, fold2[up].pre - fold2[i].pre + 1);
        }
    }
    // root subtree sizes: vertex count of the tree
    let mut tree_verts: HashMap<u64, u64> = HashMap::new();
    for (i, _) in arcs.iter().enumerate() {
        if down[i] {
            *tree_verts.entry(fold1[i].root - 1).or_insert(1) += 1;
        }
    }
    for (&r, &count) in &tree_verts {
        labels.subtree.insert(r, count);
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Device, DeviceParams};

    #[test]
    fn labels_on_small_tree() {
        //      1
        //    /   \
        //   2     3
        //  / \
        // 4   5
        let dev = Device::new(DeviceParams::new(4, 16).unwrap());
        let edges =
            DiskArray::from_vec(&dev, vec![(1u64, 2u64), (1, 3), (2, 4), (2, 5)]).unwrap();
        let l = label_forest(&dev, &edges, &[1]).unwrap();
        assert_eq!(l.parent[&2], 1);
        assert_eq!(l.parent[&4], 2);
        assert_eq!(l.depth[&1], 0);
        assert_eq!(l.depth[&4], 2);
        assert_eq!(l.subtree[&1], 5);
        assert_eq!(l.subtree[&2], 3);
        assert_eq!(l.subtree[&3], 1);
        assert_eq!(l.root_of[&5], 1);
        assert_eq!(l.preorder[&1], 1);
        // preorder of 2 and 3: 2 comes first (smaller arc order)
        assert_eq!(l.preorder[&2], 2);
    }

    #[test]
    fn forest_with_two_trees_and_isolated_root() {
        let dev = Device::new(DeviceParams::new(4, 16).unwrap());
        let edges = DiskArray::from_vec(&dev, vec![(1u64, 2u64), (5, 6), (6, 7)]).unwrap();
        let l = label_forest(&dev, &edges, &[1, 5, 9]).unwrap();
        assert_eq!(l.root_of[&2], 1);
        assert_eq!(l.root_of[&7], 5);
        assert_eq!(l.root_of[&9], 9);
        assert_eq!(l.subtree[&9], 1);
        assert_eq!(l.depth[&7], 2);
    }
}
