//! The heap proper: insert buffer, node forest, per-rank buckets with
//! suffixmin pointers, and the Sift / Fill-Up / Meld machinery.

use crate::params::EmshParams;
use crate::{EmshError, Result};
use em_core::Device;
use std::cell::Cell;
use std::collections::{BTreeMap, VecDeque};

type NodeId = usize;

#[derive(Debug, Clone)]
struct Element<K> {
    key: K,
    delete_record: bool,
    corrupt: bool,
}

#[derive(Debug)]
enum NodeKind<K> {
    Pnode { elems: VecDeque<Element<K>> },
    Cnode { list: VecDeque<ListNode<K>>, ckey: Option<K> },
}

#[derive(Debug)]
struct ListNode<K> {
    elems: Vec<Element<K>>,
}

#[derive(Debug)]
struct Node<K> {
    rank: usize,
    children: Vec<NodeId>,
    kind: NodeKind<K>,
}

#[derive(Debug, Clone)]
struct Staged<K> {
    elem: Element<K>,
    src: NodeId,
}

#[derive(Debug)]
struct Bucket<K> {
    rank: usize,
    roots: Vec<NodeId>,
    /// Staged elements; sorted ascending for pure ranks, one listnode's
    /// worth sharing `staged_ckey` above the corruption rank.
    staged: VecDeque<Staged<K>>,
    staged_ckey: Option<K>,
    /// Items of the staged window still readable without fetching a block.
    window: usize,
    /// Rank of the bucket holding the smallest minkey among ranks >= this
    /// bucket's rank.
    suffixmin: usize,
}

/// Element returned by deletemin/findmin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Removed<K> {
    pub key: K,
    pub was_corrupt: bool,
}

pub struct Emsh<K: Ord + Clone> {
    device: Device,
    params: EmshParams,
    nodes: Vec<Option<Node<K>>>,
    free: Vec<NodeId>,
    buckets: BTreeMap<usize, Bucket<K>>,
    buffer: Vec<Element<K>>, // sorted ascending
    inserted: u64,
    deleted: u64,
    corrupt_tally: u64,
    comparisons: Cell<u64>,
}

impl<K: Ord + Clone> Emsh<K> {
    pub fn soft(device: &Device, epsilon: f64) -> Result<Self> {
        Ok(Self::with_params(device, EmshParams::soft(device.params(), epsilon)?))
    }

    pub fn hard(device: &Device) -> Result<Self> {
        Ok(Self::with_params(device, EmshParams::hard(device.params())?))
    }

    fn with_params(device: &Device, params: EmshParams) -> Self {
        Emsh {
            device: device.clone(),
            params,
            nodes: Vec::new(),
            free: Vec::new(),
            buckets: BTreeMap::new(),
            buffer: Vec::new(),
            inserted: 0,
            deleted: 0,
            corrupt_tally: 0,
            comparisons: Cell::new(0),
        }
    }

    pub fn params(&self) -> &EmshParams {
        &self.params
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn len(&self) -> u64 {
        self.inserted - self.deleted
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    /// Corrupt elements currently held, maintained incrementally.
    pub fn corrupt_count(&self) -> u64 {
        self.corrupt_tally
    }

    pub fn comparisons(&self) -> u64 {
        self.comparisons.get()
    }

    /// Largest tree rank present.
    pub fn max_rank(&self) -> Option<usize> {
        self.buckets.keys().next_back().copied()
    }

    // ---- comparison counting -------------------------------------------

    fn lt(&self, a: &K, b: &K) -> bool {
        self.comparisons.set(self.comparisons.get() + 1);
        a < b
    }

    fn le(&self, a: &K, b: &K) -> bool {
        self.comparisons.set(self.comparisons.get() + 1);
        a <= b
    }

    // ---- node arena ----------------------------------------------------

    fn alloc(&mut self, node: Node<K>) -> NodeId {
        match self.free.pop() {
            Some(id) => {
                self.nodes[id] = Some(node);
                id
            }
            None => {
                self.nodes.push(Some(node));
                self.nodes.len() - 1
            }
        }
    }

    fn node(&self, id: NodeId) -> &Node<K> {
        self.nodes[id].as_ref().expect("live node")
    }

    fn node_mut(&mut self, id: NodeId) -> &mut Node<K> {
        self.nodes[id].as_mut().expect("live node")
    }

    fn release(&mut self, id: NodeId) {
        self.nodes[id] = None;
        self.free.push(id);
    }

    fn is_leaf(&self, id: NodeId) -> bool {
        self.node(id).children.is_empty()
    }

    fn elem_count(&self, id: NodeId) -> usize {
        match &self.node(id).kind {
            NodeKind::Pnode { elems } => elems.len(),
            NodeKind::Cnode { list, .. } => list.iter().map(|l| l.elems.len()).sum(),
        }
    }

    fn pnode_len(&self, id: NodeId) -> usize {
        match &self.node(id).kind {
            NodeKind::Pnode { elems } => elems.len(),
            NodeKind::Cnode { .. } => panic!("pnode expected"),
        }
    }

    fn satisfies_pni(&self, id: NodeId) -> bool {
        let n = self.node(id);
        match &n.kind {
            NodeKind::Pnode { elems } => {
                if n.children.is_empty() {
                    elems.len() <= self.params.node_cap()
                } else {
                    elems.len() >= self.params.node_cap() / 2
                        && elems.len() <= self.params.node_cap()
                }
            }
            NodeKind::Cnode { .. } => panic!("pnode expected"),
        }
    }

    fn satisfies_cni(&self, id: NodeId) -> bool {
        let n = self.node(id);
        match &n.kind {
            NodeKind::Cnode { list, .. } => {
                if n.children.is_empty() {
                    true
                } else {
                    list.len() >= self.params.s(n.rank) / 2 + 1
                }
            }
            NodeKind::Pnode { .. } => panic!("cnode expected"),
        }
    }

    fn satisfies_invariant(&self, id: NodeId) -> bool {
        match &self.node(id).kind {
            NodeKind::Pnode { .. } => self.satisfies_pni(id),
            NodeKind::Cnode { .. } => self.satisfies_cni(id),
        }
    }

    /// Smallest operative key a tree rooted at `id` offers: first array
    /// element for pnodes, ckey for cnodes. None when exhausted.
    fn root_minkey(&self, id: NodeId) -> Option<K> {
        match &self.node(id).kind {
            NodeKind::Pnode { elems } => elems.front().map(|e| e.key.clone()),
            NodeKind::Cnode { list, ckey } => {
                if list.is_empty() {
                    None
                } else {
                    ckey.clone()
                }
            }
        }
    }

    // ---- corruption bookkeeping ----------------------------------------

    /// Set corruption flags of `elems` for governance by `ckey`, adjusting
    /// the tally. Elements always satisfy key <= governing ckey.
    fn regovern_slice(elems: &mut [Element<K>], ckey: &K, tally: &mut u64, cmps: &Cell<u64>) {
        for e in elems.iter_mut() {
            cmps.set(cmps.get() + 1);
            let want = e.key < *ckey;
            if want != e.corrupt {
                if want {
                    *tally += 1;
                } else {
                    *tally -= 1;
                }
                e.corrupt = want;
            }
        }
    }

    // ---- device charging -----------------------------------------------

    fn charge_batch_io(&self, items_read: usize, items_written: usize) {
        let b = self.params.device().block_size();
        let reads = if items_read == 0 { 0 } else { items_read.div_ceil(b) as u64 };
        let writes = if items_written == 0 { 0 } else { items_written.div_ceil(b) as u64 };
        self.device.charge(reads, writes);
    }

    // ---- insert ----------------------------------------------------------

    pub fn insert(&mut self, key: K) -> Result<()> {
        self.insert_element(Element {
            key,
            delete_record: false,
            corrupt: false,
        })
    }

    /// Hard heaps only: schedule deletion of the element with this key.
    pub fn delete_by_key(&mut self, key: K) -> Result<()> {
        if !self.params.is_hard() {
            return Err(EmshError::NotHardHeap);
        }
        self.insert_element(Element {
            key,
            delete_record: true,
            corrupt: false,
        })
    }

    fn insert_element(&mut self, elem: Element<K>) -> Result<()> {
        // binary insertion keeps the buffer sorted; counted comparisons
        let mut lo = 0usize;
        let mut hi = self.buffer.len();
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.le(&self.buffer[mid].key, &elem.key) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        self.buffer.insert(lo, elem);
        self.inserted += 1;
        if self.buffer.len() == self.params.node_cap() {
            self.flush_buffer()?;
        }
        Ok(())
    }

    /// Turn the full buffer into a rank-0 tree and meld it in as a carry.
    fn flush_buffer(&mut self) -> Result<()> {
        let elems: VecDeque<Element<K>> = std::mem::take(&mut self.buffer).into();
        self.charge_batch_io(0, elems.len());
        let node = self.alloc(Node {
            rank: 0,
            children: Vec::new(),
            kind: NodeKind::Pnode { elems },
        });
        let carry = Bucket {
            rank: 0,
            roots: vec![node],
            staged: VecDeque::new(),
            staged_ckey: None,
            window: 0,
            suffixmin: 0,
        };
        self.meld_positions(BTreeMap::new(), Some(carry))
    }

    // ---- findmin / deletemin ---------------------------------------------

    fn bucket_minkey(&self, b: &Bucket<K>) -> Option<K> {
        if b.rank > self.params.corruption_rank() {
            b.staged_ckey.clone()
        } else {
            b.staged.front().map(|s| s.elem.key.clone())
        }
    }

    /// Rank of the bucket holding the smallest minkey, via suffixmin at the
    /// lowest rank. No I/O.
    fn best_bucket(&self) -> Option<usize> {
        let (&lowest, b) = self.buckets.iter().next()?;
        let _ = lowest;
        Some(b.suffixmin)
    }

    fn update_suffixmin(&mut self) {
        let ranks: Vec<usize> = self.buckets.keys().copied().collect();
        let mut best: Option<(K, usize)> = None;
        for &rank in ranks.iter().rev() {
            let key = self
                .bucket_minkey(&self.buckets[&rank])
                .expect("live buckets hold staged elements");
            best = match best.take() {
                None => Some((key, rank)),
                Some((bk, br)) => {
                    if self.lt(&key, &bk) {
                        Some((key, rank))
                    } else {
                        Some((bk, br))
                    }
                }
            };
            let target = best.as_ref().unwrap().1;
            self.buckets.get_mut(&rank).unwrap().suffixmin = target;
        }
    }

    /// The element deletemin would return, without changing the heap or
    /// charging I/O.
    pub fn findmin(&self) -> Result<Removed<K>> {
        let (raw, _) = self.peek_raw().ok_or(EmshError::Empty)?;
        Ok(raw)
    }

    fn peek_raw(&self) -> Option<(Removed<K>, PopSource)> {
        let buf = self.buffer.first();
        let bucket = self.best_bucket().map(|rank| {
            let b = &self.buckets[&rank];
            let k = self.bucket_minkey(b).expect("bucket staged");
            (rank, k)
        });
        match (buf, bucket) {
            (None, None) => None,
            (Some(e), None) => Some((
                Removed {
                    key: e.key.clone(),
                    was_corrupt: false,
                },
                PopSource::Buffer,
            )),
            (None, Some((rank, k))) => Some((self.peek_bucket(rank, k), PopSource::Bucket(rank))),
            (Some(e), Some((rank, k))) => {
                if self.lt(&e.key, &k) {
                    Some((
                        Removed {
                            key: e.key.clone(),
                            was_corrupt: false,
                        },
                        PopSource::Buffer,
                    ))
                } else {
                    Some((self.peek_bucket(rank, k), PopSource::Bucket(rank)))
                }
            }
        }
    }

    fn peek_bucket(&self, rank: usize, minkey: K) -> Removed<K> {
        let b = &self.buckets[&rank];
        if rank > self.params.corruption_rank() {
            let s = b.staged.front().expect("staged");
            Removed {
                key: minkey,
                was_corrupt: s.elem.corrupt,
            }
        } else {
            Removed {
                key: minkey,
                was_corrupt: false,
            }
        }
    }

    /// Remove and return the minimum, annihilating delete records invisibly.
    pub fn deletemin(&mut self) -> Result<Removed<K>> {
        loop {
            let first = self.pop_raw()?.ok_or(EmshError::Empty)?;
            if first.delete_record {
                // the matching element must surface right behind the record
                match self.peek_raw_element() {
                    Some(e) if e.key == first.key && !e.delete_record => {
                        self.pop_raw()?;
                        self.deleted += 2;
                        continue;
                    }
                    _ => return Err(EmshError::DanglingDelete),
                }
            }
            // an element may be annihilated by its trailing delete record
            match self.peek_raw_element() {
                Some(e) if e.delete_record && e.key == first.key => {
                    self.pop_raw()?;
                    self.deleted += 2;
                    continue;
                }
                _ => {}
            }
            self.deleted += 1;
            return Ok(Removed {
                was_corrupt: first.corrupt,
                key: first.key,
            });
        }
    }

    fn peek_raw_element(&self) -> Option<Element<K>> {
        let (_, src) = self.peek_raw()?;
        Some(match src {
            PopSource::Buffer => self.buffer.first().unwrap().clone(),
            PopSource::Bucket(rank) => {
                let b = &self.buckets[&rank];
                let s = b.staged.front().unwrap();
                let mut e = s.elem.clone();
                if b.rank > self.params.corruption_rank() {
                    e.key = b.staged_ckey.clone().unwrap();
                }
                e
            }
        })
    }

    /// Pop the raw minimum entry (operative key; delete records included).
    fn pop_raw(&mut self) -> Result<Option<Element<K>>> {
        let src = match self.peek_raw() {
            None => return Ok(None),
            Some((_, src)) => src,
        };
        match src {
            PopSource::Buffer => Ok(Some(self.buffer.remove(0))),
            PopSource::Bucket(rank) => {
                let r = self.params.corruption_rank();
                let block = self.params.device().block_size();
                let mut fetch = false;
                let (mut e, now_empty, gov) = {
                    let b = self.buckets.get_mut(&rank).unwrap();
                    if b.window == 0 {
                        fetch = true;
                        b.window = block;
                    }
                    b.window -= 1;
                    let staged = b.staged.pop_front().expect("staged");
                    (staged.elem, b.staged.is_empty(), b.staged_ckey.clone())
                };
                if fetch {
                    self.device.charge(1, 0);
                }
                if rank > r {
                    if e.corrupt {
                        self.corrupt_tally -= 1;
                    }
                    e.key = gov.expect("governing ckey");
                }
                if now_empty {
                    self.refill_bucket(rank)?;
                }
                self.update_suffixmin();
                Ok(Some(e))
            }
        }
    }

    /// Fill-Up an emptied bucket; drop it (and exhausted roots) if nothing
    /// is left to stage.
    fn refill_bucket(&mut self, rank: usize) -> Result<()> {
        let mut bucket = self.buckets.remove(&rank).expect("bucket");
        self.fill_up(&mut bucket)?;
        if bucket.staged.is_empty() {
            debug_assert!(bucket.roots.is_empty(), "exhausted roots linger");
        } else {
            self.buckets.insert(rank, bucket);
        }
        Ok(())
    }

    fn release_subtree(&mut self, id: NodeId) {
        let children = std::mem::take(&mut self.node_mut(id).children);
        for c in children {
            self.release_subtree(c);
        }
        self.release(id);
    }

    // ---- fill-up ---------------------------------------------------------

    fn fill_up(&mut self, bucket: &mut Bucket<K>) -> Result<()> {
        debug_assert!(bucket.staged.is_empty());
        bucket.staged_ckey = None;
        if bucket.rank <= self.params.corruption_rank() {
            // sift violating roots, then stage the smallest elements overall
            for i in 0..bucket.roots.len() {
                let root = bucket.roots[i];
                if !self.is_leaf(root) && !self.satisfies_pni(root) {
                    self.sift(root)?;
                }
            }
            let take = self.params.node_cap() / 2;
            let staged = self.extract_from(&bucket.roots.clone(), take)?;
            bucket.staged = staged.into();
            // drop roots that are exhausted leaves with no staged elements
            let keep: Vec<NodeId> = bucket
                .roots
                .iter()
                .copied()
                .filter(|&root| {
                    let used = bucket.staged.iter().any(|s| s.src == root);
                    let live = self.elem_count(root) > 0 || !self.is_leaf(root);
                    if !used && !live {
                        self.release(root);
                    }
                    used || live
                })
                .collect();
            bucket.roots = keep;
        } else {
            for i in 0..bucket.roots.len() {
                let root = bucket.roots[i];
                if !self.is_leaf(root) && !self.satisfies_cni(root) {
                    self.sift(root)?;
                }
            }
            // pick the root with the smallest ckey that still has a list
            let mut best: Option<(K, NodeId)> = None;
            for &root in &bucket.roots {
                if let Some(k) = self.root_minkey(root) {
                    best = match best.take() {
                        None => Some((k, root)),
                        Some((bk, br)) => {
                            if self.lt(&k, &bk) {
                                Some((k, root))
                            } else {
                                Some((bk, br))
                            }
                        }
                    };
                }
            }
            let Some((ckey, y)) = best else {
                // every root exhausted: stage nothing, caller removes bucket
                let roots = std::mem::take(&mut bucket.roots);
                for root in roots {
                    self.release_subtree(root);
                }
                return Ok(());
            };
            // stage one non-last listnode (the only one if the list is a
            // singleton)
            let l = match &mut self.node_mut(y).kind {
                NodeKind::Cnode { list, .. } => list.pop_front().expect("nonempty list"),
                NodeKind::Pnode { .. } => unreachable!("cnode rank"),
            };
            let spill = l.elems.len().saturating_sub(self.params.device().block_size());
            self.charge_batch_io(l.elems.len(), spill);
            bucket.staged = l
                .elems
                .into_iter()
                .map(|elem| Staged { elem, src: y })
                .collect();
            bucket.staged_ckey = Some(ckey);
            // drop exhausted leaf roots other than the staging source
            let keep: Vec<NodeId> = bucket
                .roots
                .iter()
                .copied()
                .filter(|&root| {
                    let live =
                        root == y || self.elem_count(root) > 0 || !self.is_leaf(root);
                    if !live {
                        self.release(root);
                    }
                    live
                })
                .collect();
            bucket.roots = keep;
        }
        bucket.window = self.params.device().block_size().min(bucket.staged.len());
        Ok(())
    }

    /// k-way merge of the smallest `take` elements across the given pnodes,
    /// removing them from the nodes and recording their source.
    fn extract_from(&mut self, roots: &[NodeId], take: usize) -> Result<Vec<Staged<K>>> {
        let mut out: Vec<Staged<K>> = Vec::new();
        let mut touched: Vec<(NodeId, usize)> = roots.iter().map(|&r| (r, 0)).collect();
        while out.len() < take {
            let mut best: Option<(K, usize)> = None;
            for (i, &(root, _)) in touched.iter().enumerate() {
                let front = match &self.node(root).kind {
                    NodeKind::Pnode { elems } => elems.front(),
                    NodeKind::Cnode { .. } => unreachable!("pnode rank"),
                };
                if let Some(e) = front {
                    best = match best.take() {
                        None => Some((e.key.clone(), i)),
                        Some((bk, bi)) => {
                            if self.lt(&e.key, &bk) {
                                Some((e.key.clone(), i))
                            } else {
                                Some((bk, bi))
                            }
                        }
                    };
                }
            }
            let Some((_, i)) = best else { break };
            let (root, ref mut count) = touched[i];
            *count += 1;
            let elem = match &mut self.node_mut(root).kind {
                NodeKind::Pnode { elems } => elems.pop_front().unwrap(),
                NodeKind::Cnode { .. } => unreachable!(),
            };
            out.push(Staged { elem, src: root });
        }
        // one block minimum per root consulted, plus the staging write
        let b = self.params.device().block_size();
        let read_blocks: u64 = touched
            .iter()
            .map(|&(_, c)| c.max(1).div_ceil(b) as u64)
            .sum();
        let write_blocks = out.len().div_ceil(b) as u64;
        self.device.charge(read_blocks, write_blocks);
        Ok(out)
    }

    // ---- sift ------------------------------------------------------------

    /// Restore the invariant of a non-leaf node that fails it. Children must
    /// satisfy theirs.
    fn sift(&mut self, x: NodeId) -> Result<()> {
        debug_assert!(!self.is_leaf(x), "sift on a leaf");
        debug_assert!(
            !self.satisfies_invariant(x),
            "sift precondition: node must violate its invariant"
        );
        let rank = self.node(x).rank;
        let r = self.params.corruption_rank();
        if rank <= r {
            self.sift_pnode(x)
        } else if rank == r + 1 {
            self.sift_cnode_boundary(x)
        } else {
            self.sift_cnode_high(x)
        }
    }

    fn sift_pnode(&mut self, x: NodeId) -> Result<()> {
        let batch = self.extract_into_node(x)?;
        match &mut self.node_mut(x).kind {
            NodeKind::Pnode { elems } => elems.extend(batch),
            NodeKind::Cnode { .. } => unreachable!(),
        }
        self.drop_empty_leaf_children(x);
        Ok(())
    }

    /// extract() of the figure: gather the smallest min(cap/2, available)
    /// elements of x's children, sifting children that now violate PNI.
    fn extract_into_node(&mut self, x: NodeId) -> Result<Vec<Element<K>>> {
        let children = self.node(x).children.clone();
        let staged = self.extract_from(&children, self.params.node_cap() / 2)?;
        for &c in &children {
            if !self.is_leaf(c) && !self.satisfies_pni(c) {
                self.sift(c)?;
            }
        }
        Ok(staged.into_iter().map(|s| s.elem).collect())
    }

    fn sift_cnode_boundary(&mut self, x: NodeId) -> Result<()> {
        let cap = self.params.node_cap();
        let has_listnode = match &self.node(x).kind {
            NodeKind::Cnode { list, .. } => !list.is_empty(),
            _ => unreachable!(),
        };
        if has_listnode {
            // case (A): one listnode left
            let mut batch = self.extract_into_node(x)?;
            if batch.is_empty() {
                self.drop_empty_leaf_children(x);
                return Ok(());
            }
            let new_ckey = batch.iter().map(|e| &e.key).max().unwrap().clone();
            Self::regovern_slice(&mut batch, &new_ckey, &mut self.corrupt_tally, &self.comparisons);
            let batch_len = batch.len();
            let half = cap / 2;
            {
                let tally = &mut self.corrupt_tally;
                let cmps = &self.comparisons;
                match &mut self.nodes[x].as_mut().unwrap().kind {
                    NodeKind::Cnode { list, ckey } => {
                        // re-govern the existing elements under the new ckey
                        for l in list.iter_mut() {
                            Self::regovern_slice(&mut l.elems, &new_ckey, tally, cmps);
                        }
                        let l_len = list.back().map_or(0, |l| l.elems.len());
                        if batch_len == half {
                            list.push_front(ListNode { elems: batch });
                        } else if l_len + batch_len <= half {
                            list.back_mut().unwrap().elems.extend(batch);
                        } else {
                            // append, topping the old last up to cap/2
                            let need = half.saturating_sub(l_len);
                            let mut batch = batch;
                            let moved: Vec<Element<K>> = batch.drain(..need).collect();
                            list.back_mut().unwrap().elems.extend(moved);
                            list.push_back(ListNode { elems: batch });
                        }
                        *ckey = Some(new_ckey);
                    }
                    _ => unreachable!(),
                }
            }
            self.drop_empty_leaf_children(x);
        } else {
            // case (B): two extracts gather up to a full node's worth
            let mut batch = self.extract_into_node(x)?;
            if !self.node(x).children.is_empty() {
                let more = self.extract_into_node(x)?;
                batch.extend(more);
            }
            if batch.is_empty() {
                self.drop_empty_leaf_children(x);
                return Ok(());
            }
            let new_ckey = batch.iter().map(|e| &e.key).max().unwrap().clone();
            Self::regovern_slice(&mut batch, &new_ckey, &mut self.corrupt_tally, &self.comparisons);
            let half = cap / 2;
            let mut list = VecDeque::new();
            if batch.len() <= half {
                list.push_back(ListNode { elems: batch });
            } else {
                let rest = batch.split_off(half);
                list.push_back(ListNode { elems: batch });
                list.push_back(ListNode { elems: rest });
            }
            match &mut self.node_mut(x).kind {
                NodeKind::Cnode { list: l, ckey } => {
                    *l = list;
                    *ckey = Some(new_ckey);
                }
                _ => unreachable!(),
            }
            self.drop_empty_leaf_children(x);
        }
        Ok(())
    }

    fn sift_cnode_high(&mut self, x: NodeId) -> Result<()> {
        let cap = self.params.node_cap();
        let target = self.params.s(self.node(x).rank);
        loop {
            let list_len = match &self.node(x).kind {
                NodeKind::Cnode { list, .. } => list.len(),
                _ => unreachable!(),
            };
            if list_len >= target {
                break;
            }
            // child with the smallest ckey among those holding elements
            let children = self.node(x).children.clone();
            let mut best: Option<(K, NodeId)> = None;
            for &c in &children {
                if let Some(k) = self.root_minkey(c) {
                    best = match best.take() {
                        None => Some((k, c)),
                        Some((bk, bc)) => {
                            if self.lt(&k, &bk) {
                                Some((k, c))
                            } else {
                                Some((bk, bc))
                            }
                        }
                    };
                }
            }
            let Some((y_ckey, y)) = best else { break };
            // take y's whole list and append it after x's
            let y_list = match &mut self.node_mut(y).kind {
                NodeKind::Cnode { list, .. } => std::mem::take(list),
                _ => unreachable!("children of high cnodes are cnodes"),
            };
            {
                let tally = &mut self.corrupt_tally;
                let cmps = &self.comparisons;
                match &mut self.nodes[x].as_mut().unwrap().kind {
                    NodeKind::Cnode { list, ckey } => {
                        for l in list.iter_mut() {
                            Self::regovern_slice(&mut l.elems, &y_ckey, tally, cmps);
                        }
                        let mut y_list = y_list;
                        if let (Some(xl), Some(yl)) = (list.back(), y_list.front()) {
                            let (a, b) = (xl.elems.len(), yl.elems.len());
                            if a + b <= cap {
                                // merge the boundary pair
                                let mut xl = list.pop_back().unwrap();
                                let yl = y_list.pop_front().unwrap();
                                xl.elems.extend(yl.elems);
                                y_list.push_front(xl);
                            } else if a < cap / 2 {
                                // keep the old last legal by topping it up
                                let mut xl = list.pop_back().unwrap();
                                let yl = y_list.front_mut().unwrap();
                                let need = cap / 2 - a;
                                let moved: Vec<Element<K>> =
                                    yl.elems.drain(..need.min(yl.elems.len())).collect();
                                xl.elems.extend(moved);
                                y_list.push_front(xl);
                            }
                        }
                        list.extend(y_list);
                        *ckey = Some(y_ckey.clone());
                    }
                    _ => unreachable!(),
                }
            }
            self.charge_batch_io(cap, cap); // one boundary merge worth of I/O
            if self.is_leaf(y) {
                // y exhausted; drop it
                let pos = self.node(x).children.iter().position(|&c| c == y).unwrap();
                self.node_mut(x).children.remove(pos);
                self.release(y);
            } else if !self.satisfies_cni(y) {
                self.sift(y)?;
            }
            if self.node(x).children.is_empty() {
                break;
            }
        }
        self.drop_empty_leaf_children(x);
        Ok(())
    }

    fn drop_empty_leaf_children(&mut self, x: NodeId) {
        let children = self.node(x).children.clone();
        let mut keep = Vec::with_capacity(children.len());
        for c in children {
            if self.is_leaf(c) && self.elem_count(c) == 0 {
                self.release(c);
            } else {
                keep.push(c);
            }
        }
        self.node_mut(x).children = keep;
    }

    // ---- meld ------------------------------------------------------------

    /// Merge `other` into `self`. Both heaps must share parameters and live
    /// on the same device.
    pub fn meld(&mut self, other: Emsh<K>) -> Result<()> {
        if self.params != other.params {
            return Err(EmshError::Incompatible(
                "heaps built with different parameters".into(),
            ));
        }
        if !self.device.same_device(&other.device) {
            return Err(EmshError::Incompatible(
                "heaps live on different devices".into(),
            ));
        }
        let Emsh {
            nodes: other_nodes,
            buckets: other_buckets,
            buffer: other_buffer,
            inserted,
            deleted,
            corrupt_tally,
            comparisons,
            ..
        } = other;
        self.inserted += inserted;
        self.deleted += deleted;
        self.corrupt_tally += corrupt_tally;
        self.comparisons
            .set(self.comparisons.get() + comparisons.get());

        // graft the other arena, remapping node ids
        let mut remap: Vec<Option<NodeId>> = vec![None; other_nodes.len()];
        let mut imported: Vec<(NodeId, Vec<NodeId>)> = Vec::new();
        for (old, node) in other_nodes.into_iter().enumerate() {
            if let Some(node) = node {
                let children = node.children.clone();
                let new = self.alloc(node);
                remap[old] = Some(new);
                imported.push((new, children));
            }
        }
        for (new, children) in imported {
            self.node_mut(new).children = children
                .into_iter()
                .map(|c| remap[c].expect("child remapped"))
                .collect();
        }
        let mut other_buckets_remapped: BTreeMap<usize, Bucket<K>> = BTreeMap::new();
        for (rank, mut b) in other_buckets {
            b.roots = b
                .roots
                .into_iter()
                .map(|r| remap[r].expect("root remapped"))
                .collect();
            for s in b.staged.iter_mut() {
                s.src = remap[s.src].expect("staged source remapped");
            }
            other_buckets_remapped.insert(rank, b);
        }

        // combine insert buffers; overflow becomes the rank-0 carry
        let mut merged = Vec::with_capacity(self.buffer.len() + other_buffer.len());
        {
            let mut a = std::mem::take(&mut self.buffer).into_iter().peekable();
            let mut b = other_buffer.into_iter().peekable();
            loop {
                match (a.peek(), b.peek()) {
                    (Some(x), Some(y)) => {
                        if self.le(&x.key, &y.key) {
                            merged.push(a.next().unwrap());
                        } else {
                            merged.push(b.next().unwrap());
                        }
                    }
                    (Some(_), None) => merged.push(a.next().unwrap()),
                    (None, Some(_)) => merged.push(b.next().unwrap()),
                    (None, None) => break,
                }
            }
        }
        let carry = if merged.len() > self.params.node_cap() {
            let rest = merged.split_off(self.params.node_cap());
            let elems: VecDeque<Element<K>> = merged.into();
            self.charge_batch_io(0, elems.len());
            self.buffer = rest;
            let node = self.alloc(Node {
                rank: 0,
                children: Vec::new(),
                kind: NodeKind::Pnode { elems },
            });
            Some(Bucket {
                rank: 0,
                roots: vec![node],
                staged: VecDeque::new(),
                staged_ckey: None,
                window: 0,
                suffixmin: 0,
            })
        } else {
            self.buffer = merged;
            None
        };
        self.meld_positions(other_buckets_remapped, carry)
    }

    /// Digit-wise melding of bucket sequences, analogous to adding two
    /// sqrt(m)-radix numbers.
    fn meld_positions(
        &mut self,
        mut other: BTreeMap<usize, Bucket<K>>,
        carry0: Option<Bucket<K>>,
    ) -> Result<()> {
        let sqrt_m = self.params.sqrt_m();
        let r = self.params.corruption_rank();
        let mut carry = carry0;
        let mut i = 0usize;
        loop {
            let top = |m: &BTreeMap<usize, Bucket<K>>| m.keys().next_back().copied();
            if carry.is_none()
                && top(&self.buckets).map_or(true, |t| t < i)
                && top(&other).map_or(true, |t| t < i)
            {
                break;
            }
            let b1 = self.buckets.remove(&i);
            let b2 = other.remove(&i);
            let c = carry.take();
            let mut present: Vec<Bucket<K>> = Vec::new();
            for b in [b1, b2, c] {
                if let Some(b) = b {
                    present.push(b);
                }
            }
            if present.is_empty() {
                i += 1;
                continue;
            }
            if present.len() == 1 {
                let mut only = present.pop().unwrap();
                if only.staged.is_empty() {
                    self.fill_up(&mut only)?;
                }
                if !only.staged.is_empty() {
                    self.buckets.insert(i, only);
                }
                i += 1;
                continue;
            }
            // at least two buckets at this position
            if i <= r {
                // return staged elements to their source roots
                for b in present.iter_mut() {
                    let staged = std::mem::take(&mut b.staged);
                    let mut returned = 0usize;
                    // elements go back to the front of their source arrays,
                    // preserving sorted order
                    for s in staged.into_iter().rev() {
                        returned += 1;
                        match &mut self.node_mut(s.src).kind {
                            NodeKind::Pnode { elems } => elems.push_front(s.elem),
                            NodeKind::Cnode { .. } => unreachable!(),
                        }
                    }
                    self.charge_batch_io(returned, returned);
                }
                for b in present.iter() {
                    for &root in &b.roots {
                        if !self.is_leaf(root) && !self.satisfies_pni(root) {
                            self.sift(root)?;
                        }
                    }
                }
            } else {
                for b in present.iter_mut() {
                    if b.staged.is_empty() {
                        continue;
                    }
                    // merge the staged listnode into the min-ckey root
                    let mut best: Option<(K, NodeId)> = None;
                    for &root in &b.roots {
                        if let Some(k) = self.root_minkey(root) {
                            best = match best.take() {
                                None => Some((k, root)),
                                Some((bk, br)) => {
                                    if self.lt(&k, &bk) {
                                        Some((k, root))
                                    } else {
                                        Some((bk, br))
                                    }
                                }
                            };
                        }
                    }
                    let staged = std::mem::take(&mut b.staged);
                    let mut elems: Vec<Element<K>> =
                        staged.into_iter().map(|s| s.elem).collect();
                    let (x_ckey, x) = match best {
                        Some(v) => v,
                        None => {
                            // all roots exhausted: the staged elements are
                            // the only content; put them back on the source
                            // root as a fresh listnode
                            let src = b.roots.first().copied();
                            match src {
                                Some(root) => {
                                    let ck = b.staged_ckey.clone().expect("governing ckey");
                                    match &mut self.node_mut(root).kind {
                                        NodeKind::Cnode { list, ckey } => {
                                            list.push_back(ListNode { elems });
                                            *ckey = Some(ck);
                                        }
                                        NodeKind::Pnode { .. } => unreachable!(),
                                    }
                                    continue;
                                }
                                None => unreachable!("staged without roots"),
                            }
                        }
                    };
                    Self::regovern_slice(
                        &mut elems,
                        &x_ckey,
                        &mut self.corrupt_tally,
                        &self.comparisons,
                    );
                    let cap = self.params.node_cap();
                    let half = cap / 2;
                    self.charge_batch_io(elems.len(), elems.len());
                    match &mut self.node_mut(x).kind {
                        NodeKind::Cnode { list, .. } => {
                            let last_len = list.back().map_or(0, |l| l.elems.len());
                            if !list.is_empty() && last_len < half && elems.len() < half {
                                if last_len + elems.len() <= cap {
                                    list.back_mut().unwrap().elems.extend(elems);
                                } else {
                                    list.push_back(ListNode { elems });
                                }
                            } else if elems.len() >= half {
                                list.push_front(ListNode { elems });
                            } else {
                                list.push_back(ListNode { elems });
                            }
                        }
                        NodeKind::Pnode { .. } => unreachable!(),
                    }
                    if !self.is_leaf(x) && !self.satisfies_cni(x) {
                        self.sift(x)?;
                    }
                }
            }
            // pool the root pointers
            let mut pool: Vec<NodeId> = Vec::new();
            for b in present {
                pool.extend(b.roots);
            }
            if pool.len() < sqrt_m {
                let mut merged = Bucket {
                    rank: i,
                    roots: pool,
                    staged: VecDeque::new(),
                    staged_ckey: None,
                    window: 0,
                    suffixmin: i,
                };
                self.fill_up(&mut merged)?;
                if !merged.staged.is_empty() {
                    self.buckets.insert(i, merged);
                }
            } else {
                // hook sqrt_m roots under a new node of the next rank
                let hooked: Vec<NodeId> = pool.drain(..sqrt_m).collect();
                let kind = if i + 1 <= r {
                    NodeKind::Pnode {
                        elems: VecDeque::new(),
                    }
                } else {
                    NodeKind::Cnode {
                        list: VecDeque::new(),
                        ckey: None,
                    }
                };
                let x = self.alloc(Node {
                    rank: i + 1,
                    children: hooked,
                    kind,
                });
                self.sift(x)?;
                carry = Some(Bucket {
                    rank: i + 1,
                    roots: vec![x],
                    staged: VecDeque::new(),
                    staged_ckey: None,
                    window: 0,
                    suffixmin: i + 1,
                });
                if !pool.is_empty() {
                    let mut merged = Bucket {
                        rank: i,
                        roots: pool,
                        staged: VecDeque::new(),
                        staged_ckey: None,
                        window: 0,
                        suffixmin: i,
                    };
                    self.fill_up(&mut merged)?;
                    if !merged.staged.is_empty() {
                        self.buckets.insert(i, merged);
                    }
                }
            }
            i += 1;
        }
        self.update_suffixmin();
        Ok(())
    }

    // ---- epoch rebalancing -------------------------------------------------

    /// End-of-epoch rebuild for hard heaps: when few elements remain but the
    /// structure is tall, drain and reinsert. No-op if the trigger condition
    /// does not hold.
    pub fn rebalance_epoch(&mut self) -> Result<bool> {
        if !self.params.is_hard() {
            return Ok(false);
        }
        let live = self.inserted - self.deleted;
        if live == 0 {
            self.inserted = 0;
            self.deleted = 0;
            self.buffer.clear();
            return Ok(true);
        }
        if live >= self.inserted / self.params.sqrt_m() as u64 {
            return Ok(false);
        }
        let b = self.params.device().block_size() as u64;
        let height_cap = {
            // floor(log_{sqrt m}(N_I / B))
            let mut h = 0usize;
            let mut v = self.inserted / b.max(1);
            while v >= self.params.sqrt_m() as u64 {
                v /= self.params.sqrt_m() as u64;
                h += 1;
            }
            h
        };
        match self.max_rank() {
            Some(rank) if rank + 1 >= height_cap && height_cap > 0 => {}
            _ => return Ok(false),
        }
        // drain raw entries (delete records included) and reinsert
        let mut drained: Vec<Element<K>> = Vec::new();
        while let Some(e) = self.pop_raw()? {
            drained.push(e);
        }
        debug_assert!(self.buckets.is_empty());
        self.inserted = 0;
        self.deleted = 0;
        self.corrupt_tally = 0;
        self.buffer.clear();
        for e in drained {
            self.insert_element(e)?;
        }
        Ok(true)
    }

    // ---- instrumentation -------------------------------------------------

    /// Items waiting in the in-memory insert buffer. Test support.
    pub fn buffer_len(&self) -> usize {
        self.buffer.len()
    }

    /// Number of tree roots at each rank. Test support.
    pub fn root_counts(&self) -> BTreeMap<usize, usize> {
        self.buckets
            .iter()
            .map(|(&rank, b)| (rank, b.roots.len()))
            .collect()
    }

    /// Walk the whole structure and check every structural invariant.
    /// Panics with a description on the first violation. Test support.
    ///
    /// Staged elements are credited back to their source roots: deletions
    /// are counted against roots but the due sift is deferred to the next
    /// fill-up, so only the staged-inclusive sizes are invariant.
    pub fn check_invariants(&self) {
        let r = self.params.corruption_rank();
        let sqrt_m = self.params.sqrt_m();
        let mut live_corrupt = 0u64;
        for (&rank, bucket) in &self.buckets {
            assert!(bucket.roots.len() < sqrt_m.max(2), "root count over sqrt(m)-1");
            assert!(!bucket.staged.is_empty(), "live bucket without staged elements");
            for &root in &bucket.roots {
                assert_eq!(self.node(root).rank, rank, "root rank mismatch");
                live_corrupt += self.check_subtree_credited(root, true);
            }
            if rank > r {
                for s in &bucket.staged {
                    if s.elem.corrupt {
                        live_corrupt += 1;
                    }
                }
            }
            // suffixmin points at the min-minkey bucket among ranks >= rank
            let best = self
                .buckets
                .range(rank..)
                .min_by(|a, b| {
                    self.bucket_minkey(a.1)
                        .unwrap()
                        .cmp(&self.bucket_minkey(b.1).unwrap())
                })
                .map(|(&k, _)| k)
                .unwrap();
            let own = self.bucket_minkey(&self.buckets[&bucket.suffixmin]).unwrap();
            let best_key = self.bucket_minkey(&self.buckets[&best]).unwrap();
            assert!(
                own == best_key,
                "suffixmin of rank {rank} does not reach the minimum"
            );
        }
        assert_eq!(
            live_corrupt, self.corrupt_tally,
            "corrupt tally out of sync"
        );
    }

    fn check_subtree_credited(&self, id: NodeId, is_root: bool) -> u64 {
        let n = self.node(id);
        let r = self.params.corruption_rank();
        assert!(n.children.len() <= self.params.sqrt_m(), "fan-out exceeded");
        for &c in &n.children {
            assert_eq!(self.node(c).rank + 1, n.rank, "child rank mismatch");
        }
        let mut corrupt = 0u64;
        match &n.kind {
            NodeKind::Pnode { elems } => {
                assert!(n.rank <= r, "pnode above corruption rank");
                assert!(elems.len() <= self.params.node_cap(), "pnode overfull");
                // roots may run low between fill-ups: deletions are counted
                // against them but the sift waits for the next fill-up
                assert!(
                    is_root
                        || n.children.is_empty()
                        || elems.len() >= self.params.node_cap() / 2,
                    "PNI violated at an internal node"
                );
                assert!(
                    elems.iter().zip(elems.iter().skip(1)).all(|(a, b)| a.key <= b.key),
                    "pnode array unsorted"
                );
                // heap property: keys here are smaller than keys below
                if let Some(max) = elems.back() {
                    for &c in &n.children {
                        if let Some(cmin) = self.subtree_min_key(c) {
                            assert!(max.key <= cmin, "heap property violated at pnode");
                        }
                    }
                }
            }
            NodeKind::Cnode { list, ckey } => {
                assert!(n.rank > r, "cnode at pure rank");
                assert!(
                    is_root
                        || n.children.is_empty()
                        || list.len() >= self.params.s(n.rank) / 2 + 1,
                    "CNI violated at an internal node"
                );
                let cap = self.params.node_cap();
                for (i, l) in list.iter().enumerate() {
                    assert!(l.elems.len() <= cap, "listnode overfull");
                    if i + 1 != list.len() {
                        assert!(
                            l.elems.len() >= cap / 2,
                            "non-last listnode underfull"
                        );
                    }
                    for e in &l.elems {
                        if let Some(ck) = ckey {
                            assert!(e.key <= *ck, "list element above its ckey");
                            assert_eq!(e.corrupt, e.key < *ck, "corrupt flag wrong");
                        }
                        if e.corrupt {
                            corrupt += 1;
                        }
                    }
                }
                assert!(list.len() <= 3 * self.params.s(n.rank).max(1), "list too long");
                if let Some(ck) = ckey {
                    for &c in &n.children {
                        match &self.node(c).kind {
                            NodeKind::Cnode { ckey: cc, .. } => {
                                if let Some(cc) = cc {
                                    assert!(ck <= cc, "ckey order violated");
                                }
                            }
                            NodeKind::Pnode { elems } => {
                                if let Some(front) = elems.front() {
                                    assert!(*ck <= front.key, "boundary ckey order violated");
                                }
                            }
                        }
                    }
                }
            }
        }
        for &c in &n.children {
            corrupt += self.check_subtree_credited(c, false);
        }
        corrupt
    }

    fn subtree_min_key(&self, id: NodeId) -> Option<K> {
        match &self.node(id).kind {
            NodeKind::Pnode { elems } => elems.front().map(|e| e.key.clone()),
            NodeKind::Cnode { list, .. } => list
                .iter()
                .flat_map(|l| l.elems.iter().map(|e| e.key.clone()))
                .min(),
        }
    }
}

enum PopSource {
    Buffer,
    Bucket(usize),
}
