//! Euler tours of forests.
//!
//! Each undirected edge is expanded into a twin pair of directed arcs. Arcs
//! are sorted by source so each vertex's out-arcs form a rotation; the tour
//! successor of an arc (u,v) is the rotation successor of its twin (v,u).
//! Following successors from any arc traverses every undirected edge of the
//! arc's tree exactly twice, forming one cycle per tree.

use crate::device::{ArrayWriter, Device, DiskArray};
use crate::scan_sort::em_sort_by_key;
use crate::{EmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EulerArc {
    pub from: u64,
    pub to: u64,
    /// Index of the tour successor within the arc array.
    pub succ: usize,
    /// Index of the reverse arc within the arc array.
    pub twin: usize,
}

pub struct EulerTour {
    arcs: DiskArray<EulerArc>,
}

impl EulerTour {
    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn arcs(&self) -> &DiskArray<EulerArc> {
        &self.arcs
    }

    /// First out-arc of `v` in the sorted arc array, if any.
    pub fn first_out(&self, v: u64) -> Option<usize> {
        // binary search over the sorted (from, to) arcs
        let mut lo = 0usize;
        let mut hi = self.arcs.len();
        while lo < hi {
            let mid = (lo + hi) / 2;
            let a = self.arcs.get(mid);
            if (a.from, a.to) < (v, 0) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        if lo < self.arcs.len() && self.arcs.get(lo).from == v {
            Some(lo)
        } else {
            None
        }
    }
}

/// Build the Euler tour of a forest given as undirected edges. Errors if the
/// edge set contains a cycle or a repeated edge.
pub fn em_euler_tour(device: &Device, edges: &DiskArray<(u64, u64)>) -> Result<EulerTour> {
    check_forest(edges)?;
    // twin arcs tagged with their partner's original index
    let mut w = ArrayWriter::new(device)?;
    for (i, (u, v)) in edges.stream().enumerate() {
        w.push((u, v, 2 * i as u64 + 1))?; // arc 2i, twin is 2i+1
        w.push((v, u, 2 * i as u64))?;
    }
    let tagged = w.finish();
    // sort by (from, to); keep the original index to rebuild twin pointers
    let mut w = ArrayWriter::new(device)?;
    for (orig, (f, t, twin)) in tagged.stream().enumerate() {
        w.push((f, t, orig as u64, twin))?;
    }
    let sorted = em_sort_by_key(&w.finish(), |r| (r.0, r.1))?;
    // position of each original index after the sort
    let mut pos_tagged = ArrayWriter::new(device)?;
    for (new_pos, (_, _, orig, _)) in sorted.stream().enumerate() {
        pos_tagged.push((orig, new_pos as u64))?;
    }
    let old_to_new = em_sort_by_key(&pos_tagged.finish(), |r| r.0)?;
    let old_to_new: Vec<u64> = old_to_new.stream().map(|(_, p)| p).collect();

    // rotation successor within each source group, then tour successor
    let n = sorted.len();
    let group_start = {
        // start index of each source group, found in one scan
        let mut starts: Vec<(u64, usize)> = Vec::new();
        for (i, (f, _, _, _)) in sorted.stream().enumerate() {
            if starts.last().map_or(true, |&(g, _)| g != f) {
                starts.push((f, i));
            }
        }
        starts
    };
    let rotation_succ = |i: usize, from: u64, arr: &Vec<(u64, u64, u64, u64)>| -> usize {
        let next = i + 1;
        if next < n && arr[next].0 == from {
            next
        } else {
            // wrap to the start of this source group
            let gi = group_start
                .binary_search_by_key(&from, |&(g, _)| g)
                .expect("group exists");
            group_start[gi].1
        }
    };
    let sorted_vec = sorted.to_vec();
    let mut arcs = ArrayWriter::new(device)?;
    for &(f, t, _, twin_orig) in sorted_vec.iter() {
        let twin_new = old_to_new[twin_orig as usize] as usize;
        let succ = rotation_succ(twin_new, sorted_vec[twin_new].0, &sorted_vec);
        arcs.push(EulerArc {
            from: f,
            to: t,
            succ,
            twin: twin_new,
        })?;
    }
    Ok(EulerTour {
        arcs: arcs.finish(),
    })
}

fn check_forest(edges: &DiskArray<(u64, u64)>) -> Result<()> {
    use std::collections::HashMap;
    let mut ids: HashMap<u64, usize> = HashMap::new();
    let mut parent: Vec<usize> = Vec::new();
    let intern = |v: u64, parent: &mut Vec<usize>, ids: &mut HashMap<u64, usize>| -> usize {
        *ids.entry(v).or_insert_with(|| {
            parent.push(parent.len());
            parent.len() - 1
        })
    };
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (u, v) in edges.stream() {
        if u == v {
            return Err(EmError::MalformedInput("self loop in forest input".into()));
        }
        let (a, b) = (
            intern(u, &mut parent, &mut ids),
            intern(v, &mut parent, &mut ids),
        );
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return Err(EmError::MalformedInput(
                "input edges contain a cycle; not a forest".into(),
            ));
        }
        parent[ra] = rb;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Device, DeviceParams};

    fn device() -> Device {
        Device::new(DeviceParams::new(4, 16).unwrap())
    }

    fn tour_sequence(tour: &EulerTour, start: usize) -> Vec<(u64, u64)> {
        let arcs = tour.arcs().to_vec();
        let mut seq = Vec::new();
        let mut at = start;
        loop {
            seq.push((arcs[at].from, arcs[at].to));
            at = arcs[at].succ;
            if at == start {
                break;
            }
        }
        seq
    }

    #[test]
    fn single_edge_tour() {
        let dev = device();
        let edges = DiskArray::from_vec(&dev, vec![(1u64, 2u64)]).unwrap();
        let tour = em_euler_tour(&dev, &edges).unwrap();
        assert_eq!(tour.len(), 2);
        let seq = tour_sequence(&tour, tour.first_out(1).unwrap());
        assert_eq!(seq, vec![(1, 2), (2, 1)]);
    }

    #[test]
    fn path_tour_has_four_arcs() {
        let dev = device();
        let edges = DiskArray::from_vec(&dev, vec![(1u64, 2u64), (2, 3)]).unwrap();
        let tour = em_euler_tour(&dev, &edges).unwrap();
        assert_eq!(tour.len(), 4);
        let seq = tour_sequence(&tour, tour.first_out(1).unwrap());
        assert_eq!(seq.len(), 4);
        // every undirected edge appears exactly twice
        let mut counts = std::collections::HashMap::new();
        for (a, b) in seq {
            *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
        assert!(counts.values().all(|&c| c == 2));
    }

    #[test]
    fn non_forest_rejected() {
        let dev = device();
        let edges = DiskArray::from_vec(&dev, vec![(1u64, 2u64), (2, 3), (3, 1)]).unwrap();
        assert!(matches!(
            em_euler_tour(&dev, &edges),
            Err(EmError::MalformedInput(_))
        ));
    }
}
