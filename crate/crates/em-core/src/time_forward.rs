//! Time-forward processing over a topologically ordered DAG.
//!
//! Nodes are visited in array order; each node's value is evaluated from its
//! payload and the values received from earlier nodes, then relayed through
//! a priority queue to the node's recipients (which must appear later).

use crate::device::{ArrayWriter, Device, DiskArray};
use crate::relay::RelayQueue;
use crate::{EmError, Result};

#[derive(Debug, Clone)]
pub struct TfNode<P> {
    pub id: u64,
    pub payload: P,
    /// Positions (indices into the node array) that receive this node's value.
    pub recipients: Vec<u64>,
}

/// Evaluate every node in order. `eval` receives the node and the values
/// sent to it, in sending order. Returns (id, value) in input order.
pub fn em_time_forward<P: Clone, V: Clone>(
    device: &Device,
    nodes: &DiskArray<TfNode<P>>,
    mut eval: impl FnMut(&TfNode<P>, &[V]) -> V,
) -> Result<DiskArray<(u64, V)>> {
    let mut relay: RelayQueue<V> = RelayQueue::new(device, device.params().memory() / 2);
    let mut out = ArrayWriter::new(device)?;
    for (pos, node) in nodes.stream().enumerate() {
        if let Some(k) = relay.peek_key() {
            if k < pos as u64 {
                return Err(EmError::Precondition(format!(
                    "undelivered message for position {k}; input not topologically sorted"
                )));
            }
        }
        let inbox = relay.pop_all_at(pos as u64);
        let value = eval(&node, &inbox);
        for &r in &node.recipients {
            if r <= pos as u64 {
                return Err(EmError::Precondition(format!(
                    "recipient {r} not after sender {pos}; input not topologically sorted"
                )));
            }
            relay.push(r, value.clone())?;
        }
        out.push((node.id, value))?;
    }
    if !relay.is_empty() {
        return Err(EmError::Precondition(
            "messages addressed past the end of the node array".into(),
        ));
    }
    Ok(out.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Device, DeviceParams};

    fn device() -> Device {
        Device::new(DeviceParams::new(4, 16).unwrap())
    }

    #[test]
    fn single_leaf_scalar() {
        let dev = device();
        let nodes = DiskArray::from_vec(
            &dev,
            vec![TfNode {
                id: 0,
                payload: 7i64,
                recipients: vec![],
            }],
        )
        .unwrap();
        let vals = em_time_forward(&dev, &nodes, |n, inbox| {
            n.payload + inbox.iter().sum::<i64>()
        })
        .unwrap();
        assert_eq!(vals.to_vec(), vec![(0, 7)]);
    }

    #[test]
    fn sum_tree_root_six() {
        // leaves 1,2,3 all feeding one root
        let dev = device();
        let mk = |id, payload, recipients: Vec<u64>| TfNode {
            id,
            payload,
            recipients,
        };
        let nodes = DiskArray::from_vec(
            &dev,
            vec![
                mk(10, 1i64, vec![3]),
                mk(11, 2, vec![3]),
                mk(12, 3, vec![3]),
                mk(13, 0, vec![]),
            ],
        )
        .unwrap();
        let vals = em_time_forward(&dev, &nodes, |n, inbox| {
            n.payload + inbox.iter().sum::<i64>()
        })
        .unwrap();
        assert_eq!(vals.to_vec()[3], (13, 6));
    }

    #[test]
    fn unsorted_input_rejected() {
        let dev = device();
        let nodes = DiskArray::from_vec(
            &dev,
            vec![TfNode {
                id: 0,
                payload: 0i64,
                recipients: vec![0],
            }],
        )
        .unwrap();
        assert!(matches!(
            em_time_forward(&dev, &nodes, |n, _: &[i64]| n.payload),
            Err(EmError::Precondition(_))
        ));
    }
}
