//! List ranking by independent-set splicing.
//!
//! Segments of M/2 records are loaded into memory and their induced
//! sublists spliced out while the rest of the list streams by; once the
//! remainder fits in memory it is ranked directly and the spliced segments
//! are folded back in reverse order, one streaming pass per segment. The
//! combine operation only needs to be associative: every record carries both
//! its original weight and an effective weight that absorbs spliced-out
//! chains, so no inverse is ever required (which is what lets rank addition
//! be replaced by bitwise OR).

use crate::device::{ArrayWriter, DiskArray};
use crate::scan_sort::em_sort_by_key;
use crate::{EmError, Result};
use std::collections::HashMap;

/// One node of a linked list stored on the device.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListRecord<W> {
    pub id: u64,
    pub succ: Option<u64>,
    pub pred: Option<u64>,
    pub weight: W,
}

#[derive(Clone)]
struct Work<W> {
    id: u64,
    succ: Option<u64>,
    pred: Option<u64>,
    w_orig: W,
    w_eff: W,
    /// For list heads only: exclusive prefix inherited from spliced-out
    /// predecessors.
    base: Option<W>,
}

#[derive(Clone)]
enum Anchor<W> {
    /// Chain follows a surviving node; the captured value is w_eff(attach)
    /// at detach time.
    Node { attach: u64, captured: Option<W> },
    /// Chain is a list prefix; the value is the exclusive prefix of its
    /// first node.
    Origin(Option<W>),
}

#[derive(Clone)]
struct Chain<W> {
    anchor: Anchor<W>,
    nodes: Vec<ChainNode<W>>,
}

#[derive(Clone)]
struct ChainNode<W> {
    id: u64,
    w_orig: W,
    w_eff: W,
}

/// rank(x) = number of edges from the head of x's list to x. Output is in
/// input order.
pub fn em_list_rank(list: &DiskArray<ListRecord<u64>>) -> Result<DiskArray<(u64, u64)>> {
    let folded = em_list_fold(list, |a, b| a + b)?;
    let device = list.device().clone();
    let mut out = ArrayWriter::new(&device)?;
    for (id, incl) in folded.stream() {
        out.push((id, incl - 1))?;
    }
    Ok(out.finish())
}

/// Generalized ranking: for every node x, the fold of the weights of all
/// nodes from the head of x's list through x itself (inclusive), combined
/// left to right with the associative `combine`. Output is in input order.
pub fn em_list_fold<W: Clone>(
    list: &DiskArray<ListRecord<W>>,
    combine: impl Fn(&W, &W) -> W + Copy,
) -> Result<DiskArray<(u64, W)>> {
    let device = list.device().clone();
    let segment = (device.params().memory() / 2).max(device.params().block_size());
    validate(list)?;

    let acc_opt = |acc: &Option<W>, w: &W| -> W {
        match acc {
            None => w.clone(),
            Some(a) => combine(a, w),
        }
    };

    let mut current: DiskArray<Work<W>> = {
        let mut w = ArrayWriter::new(&device)?;
        for r in list.stream() {
            w.push(Work {
                id: r.id,
                succ: r.succ,
                pred: r.pred,
                w_orig: r.weight.clone(),
                w_eff: r.weight,
                base: None,
            })?;
        }
        w.finish()
    };
    let mut rounds: Vec<Vec<Chain<W>>> = Vec::new();

    // splice out until the remainder fits in one memory load
    while current.len() > segment {
        let mut stream = current.stream();
        let mut loaded: Vec<Work<W>> = Vec::with_capacity(segment);
        for _ in 0..segment {
            loaded.push(stream.next().unwrap());
        }
        let in_seg: HashMap<u64, usize> =
            loaded.iter().enumerate().map(|(i, r)| (r.id, i)).collect();

        // stitch the loaded records into maximal in-memory chains
        let mut chains: Vec<Chain<W>> = Vec::new();
        let mut tail_succ: Vec<Option<u64>> = Vec::new();
        let mut assigned = vec![false; loaded.len()];
        for i in 0..loaded.len() {
            let starts_chain = match loaded[i].pred {
                Some(p) => !in_seg.contains_key(&p),
                None => true,
            };
            if !starts_chain {
                continue;
            }
            let anchor = match loaded[i].pred {
                Some(p) => Anchor::Node {
                    attach: p,
                    captured: None,
                },
                None => Anchor::Origin(loaded[i].base.clone()),
            };
            let mut nodes = Vec::new();
            let mut at = i;
            loop {
                assigned[at] = true;
                nodes.push(ChainNode {
                    id: loaded[at].id,
                    w_orig: loaded[at].w_orig.clone(),
                    w_eff: loaded[at].w_eff.clone(),
                });
                match loaded[at].succ {
                    Some(s) if in_seg.contains_key(&s) => at = in_seg[&s],
                    other => {
                        chains.push(Chain { anchor, nodes });
                        tail_succ.push(other);
                        break;
                    }
                }
            }
        }
        if assigned.iter().any(|&a| !a) {
            // a segment node on no chain means the segment contains a cycle
            return Err(EmError::MalformedInput("cycle in linked list".into()));
        }

        let totals: Vec<W> = chains
            .iter()
            .map(|c| {
                let mut acc = c.nodes[0].w_eff.clone();
                for n in &c.nodes[1..] {
                    acc = combine(&acc, &n.w_eff);
                }
                acc
            })
            .collect();
        let attach_for: HashMap<u64, usize> = chains
            .iter()
            .enumerate()
            .filter_map(|(ci, c)| match &c.anchor {
                Anchor::Node { attach, .. } => Some((*attach, ci)),
                Anchor::Origin(_) => None,
            })
            .collect();
        // tail successor updates: new pred, and for prefix chains the
        // inherited exclusive base
        struct TailFix<W> {
            new_pred: Option<u64>,
            new_base: Option<Option<W>>,
        }
        let mut tail_fix: HashMap<u64, TailFix<W>> = HashMap::new();
        for (ci, c) in chains.iter().enumerate() {
            if let Some(s) = tail_succ[ci] {
                match &c.anchor {
                    Anchor::Node { attach, .. } => {
                        tail_fix.insert(
                            s,
                            TailFix {
                                new_pred: Some(*attach),
                                new_base: None,
                            },
                        );
                    }
                    Anchor::Origin(offset) => {
                        let base = acc_opt(offset, &totals[ci]);
                        tail_fix.insert(
                            s,
                            TailFix {
                                new_pred: None,
                                new_base: Some(Some(base)),
                            },
                        );
                    }
                }
            }
        }

        // stream the rest, bypassing the spliced chains
        let mut rest = ArrayWriter::new(&device)?;
        for mut r in stream {
            if let Some(&ci) = attach_for.get(&r.id) {
                if let Anchor::Node { captured, .. } = &mut chains[ci].anchor {
                    *captured = Some(r.w_eff.clone());
                }
                r.w_eff = combine(&r.w_eff, &totals[ci]);
                r.succ = tail_succ[ci];
            }
            if let Some(fix) = tail_fix.get(&r.id) {
                r.pred = fix.new_pred;
                if let Some(b) = &fix.new_base {
                    r.base = b.clone();
                }
            }
            rest.push(r)?;
        }
        current = rest.finish();
        rounds.push(chains);
    }

    // rank the in-memory remainder: the exclusive prefix folds effective
    // weights, which stand in for the true weights of everything spliced out
    let nodes: Vec<Work<W>> = current.to_vec();
    drop(current);
    let index: HashMap<u64, usize> = nodes.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
    let mut ranked_mem: Vec<(u64, Option<W>, W)> = Vec::with_capacity(nodes.len());
    let mut visited = vec![false; nodes.len()];
    for i in 0..nodes.len() {
        if nodes[i].pred.is_some() {
            continue;
        }
        let mut acc: Option<W> = nodes[i].base.clone();
        let mut at = i;
        loop {
            if visited[at] {
                return Err(EmError::MalformedInput("cycle in linked list".into()));
            }
            visited[at] = true;
            ranked_mem.push((nodes[at].id, acc.clone(), nodes[at].w_orig.clone()));
            acc = Some(acc_opt(&acc, &nodes[at].w_eff));
            match nodes[at].succ {
                Some(s) => at = index[&s],
                None => break,
            }
        }
    }
    if visited.iter().any(|&v| !v) {
        return Err(EmError::MalformedInput("cycle in linked list".into()));
    }

    // ranked carries (id, excl, w_orig); splice the segments back in reverse
    // order, one streaming pass each
    let mut ranked: DiskArray<(u64, Option<W>, W)> = DiskArray::from_vec(&device, ranked_mem)?;
    while let Some(chains) = rounds.pop() {
        let mut by_attach: HashMap<u64, Chain<W>> = HashMap::new();
        let mut prefix_chains: Vec<Chain<W>> = Vec::new();
        for c in chains {
            match &c.anchor {
                Anchor::Node { attach, .. } => {
                    by_attach.insert(*attach, c);
                }
                Anchor::Origin(_) => prefix_chains.push(c),
            }
        }
        let mut next = ArrayWriter::new(&device)?;
        for c in prefix_chains {
            let offset = match &c.anchor {
                Anchor::Origin(o) => o.clone(),
                _ => unreachable!(),
            };
            emit_chain(&mut next, &c, offset, combine)?;
        }
        for (id, excl, w_orig) in ranked.stream() {
            next.push((id, excl.clone(), w_orig))?;
            if let Some(c) = by_attach.remove(&id) {
                // excl(chain head) = excl(attach) + w_eff(attach) at detach
                let captured = match &c.anchor {
                    Anchor::Node { captured, .. } => captured
                        .clone()
                        .expect("attach point streamed by at detach"),
                    _ => unreachable!(),
                };
                let head_excl = Some(acc_opt(&excl, &captured));
                emit_chain(&mut next, &c, head_excl, combine)?;
            }
        }
        if !by_attach.is_empty() {
            return Err(EmError::MalformedInput(
                "dangling predecessor pointer".into(),
            ));
        }
        ranked = next.finish();
    }

    // inclusive value per node, then restore input order by a sort join
    let mut incl = ArrayWriter::new(&device)?;
    for (id, excl, w_orig) in ranked.stream() {
        let v = match excl {
            None => w_orig,
            Some(e) => combine(&e, &w_orig),
        };
        incl.push((id, v))?;
    }
    let incl = incl.finish();
    let by_id = em_sort_by_key(&incl, |r| r.0)?;
    let mut order = ArrayWriter::new(&device)?;
    for (pos, r) in list.stream().enumerate() {
        order.push((r.id, pos as u64))?;
    }
    let order = em_sort_by_key(&order.finish(), |r| r.0)?;
    let mut joined = ArrayWriter::new(&device)?;
    for ((id_a, v), (id_b, pos)) in by_id.stream().zip(order.stream()) {
        debug_assert_eq!(id_a, id_b);
        joined.push((pos, (id_a, v)))?;
    }
    let joined = em_sort_by_key(&joined.finish(), |r| r.0)?;
    let mut out = ArrayWriter::new(&device)?;
    for (_, pair) in joined.stream() {
        out.push(pair)?;
    }
    Ok(out.finish())
}

fn emit_chain<W: Clone>(
    out: &mut ArrayWriter<(u64, Option<W>, W)>,
    chain: &Chain<W>,
    head_excl: Option<W>,
    combine: impl Fn(&W, &W) -> W + Copy,
) -> Result<()> {
    let mut excl = head_excl;
    for node in &chain.nodes {
        out.push((node.id, excl.clone(), node.w_orig.clone()))?;
        excl = Some(match excl {
            None => node.w_eff.clone(),
            Some(e) => combine(&e, &node.w_eff),
        });
    }
    Ok(())
}

fn validate<W: Clone>(list: &DiskArray<ListRecord<W>>) -> Result<()> {
    let mut succ_of: HashMap<u64, Option<u64>> = HashMap::new();
    let mut pred_of: HashMap<u64, Option<u64>> = HashMap::new();
    for r in list.stream() {
        if succ_of.insert(r.id, r.succ).is_some() {
            return Err(EmError::MalformedInput(format!("duplicate id {}", r.id)));
        }
        pred_of.insert(r.id, r.pred);
    }
    for (&id, &succ) in &succ_of {
        if let Some(s) = succ {
            match pred_of.get(&s) {
                Some(Some(p)) if *p == id => {}
                _ => {
                    return Err(EmError::MalformedInput(format!(
                        "succ({id}) = {s} but pred({s}) does not point back"
                    )))
                }
            }
        }
    }
    for (&id, &pred) in &pred_of {
        if let Some(p) = pred {
            match succ_of.get(&p) {
                Some(Some(s)) if *s == id => {}
                _ => {
                    return Err(EmError::MalformedInput(format!(
                        "pred({id}) = {p} but succ({p}) does not point back"
                    )))
                }
            }
        }
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

    fn chain_records(ids: &[u64]) -> Vec<ListRecord<u64>> {
        ids.iter()
            .enumerate()
            .map(|(i, &id)| ListRecord {
                id,
                succ: ids.get(i + 1).copied(),
                pred: if i == 0 { None } else { Some(ids[i - 1]) },
                weight: 1,
            })
            .collect()
    }

    #[test]
    fn single_node_rank_zero() {
        let dev = device();
        let arr = DiskArray::from_vec(&dev, chain_records(&[7])).unwrap();
        let ranks = em_list_rank(&arr).unwrap();
        assert_eq!(ranks.to_vec(), vec![(7, 0)]);
    }

    #[test]
    fn five_chain_ranks() {
        let dev = device();
        let arr = DiskArray::from_vec(&dev, chain_records(&[10, 11, 12, 13, 14])).unwrap();
        let ranks = em_list_rank(&arr).unwrap();
        assert_eq!(
            ranks.to_vec(),
            vec![(10, 0), (11, 1), (12, 2), (13, 3), (14, 4)]
        );
    }

    #[test]
    fn long_chain_spliced_many_rounds() {
        let dev = device();
        let ids: Vec<u64> = (0..100).map(|i| i * 3 + 1).collect();
        let arr = DiskArray::from_vec(&dev, chain_records(&ids)).unwrap();
        let ranks = em_list_rank(&arr).unwrap();
        for (i, (id, r)) in ranks.to_vec().into_iter().enumerate() {
            assert_eq!(id, ids[i]);
            assert_eq!(r, i as u64);
        }
    }

    #[test]
    fn cycle_detected() {
        let dev = device();
        let mut recs = chain_records(&[1, 2, 3]);
        recs[2].succ = Some(1);
        recs[0].pred = Some(3);
        let arr = DiskArray::from_vec(&dev, recs).unwrap();
        assert!(matches!(
            em_list_rank(&arr),
            Err(EmError::MalformedInput(_))
        ));
    }

    #[test]
    fn or_fold_propagates_head_marker() {
        // marker at the head, OR carried to every node of a long list
        let dev = device();
        let ids: Vec<u64> = (0..64).map(|i| 1000 - i) .collect();
        let mut recs = chain_records(&ids);
        for (i, r) in recs.iter_mut().enumerate() {
            r.weight = if i == 0 { 0b100 } else { 0 };
        }
        let arr = DiskArray::from_vec(&dev, recs).unwrap();
        let folded = em_list_fold(&arr, |a, b| a | b).unwrap();
        for (_, v) in folded.to_vec() {
            assert_eq!(v, 0b100);
        }
    }
}
