use crate::{EmshError, Result};
use em_core::DeviceParams;

/// Shape parameters of one heap: fan-out sqrt(m), node capacity B*sqrt(m),
/// corruption rank r and the list-size schedule s_k.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmshParams {
    device: DeviceParams,
    sqrt_m: usize,
    node_cap: usize,
    /// Ranks <= r hold pure nodes. `usize::MAX` encodes a hard heap (every
    /// node pure).
    r: usize,
}

impl EmshParams {
    /// Soft heap with error rate `epsilon` in (0, 1]. Requires sqrt(m) >= 11
    /// (m >= 121), the hypothesis under which the corruption bound holds.
    pub fn soft(device: DeviceParams, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(EmshError::InvalidConfig(format!(
                "error rate must be in (0, 1], got {epsilon}"
            )));
        }
        let sqrt_m = isqrt(device.fanout());
        if sqrt_m < 11 {
            return Err(EmshError::InvalidConfig(format!(
                "soft heap requires m >= 121 (sqrt(m) >= 11), got m = {}",
                device.fanout()
            )));
        }
        // r = smallest integer with sqrt(m)^r >= 1/epsilon
        let mut r = 0usize;
        let mut pow = 1.0f64;
        while pow * epsilon < 1.0 {
            pow *= sqrt_m as f64;
            r += 1;
        }
        Ok(EmshParams {
            device,
            sqrt_m,
            node_cap: device.block_size() * sqrt_m,
            r,
        })
    }

    /// Exact meldable priority queue: every node is pure.
    pub fn hard(device: DeviceParams) -> Result<Self> {
        let sqrt_m = isqrt(device.fanout());
        if sqrt_m < 2 {
            return Err(EmshError::InvalidConfig(format!(
                "hard heap requires m >= 4, got m = {}",
                device.fanout()
            )));
        }
        Ok(EmshParams {
            device,
            sqrt_m,
            node_cap: device.block_size() * sqrt_m,
            r: usize::MAX,
        })
    }

    pub fn device(&self) -> DeviceParams {
        self.device
    }

    pub fn sqrt_m(&self) -> usize {
        self.sqrt_m
    }

    /// B * sqrt(m): capacity of a node array, a listnode and the insert
    /// buffer.
    pub fn node_cap(&self) -> usize {
        self.node_cap
    }

    pub fn corruption_rank(&self) -> usize {
        self.r
    }

    pub fn is_hard(&self) -> bool {
        self.r == usize::MAX
    }

    /// s_k: 0 for k <= r, 2 at r+1, then ceil(1.5 s_{k-1}).
    pub fn s(&self, k: usize) -> usize {
        if k <= self.r {
            return 0;
        }
        let mut s = 2usize;
        for _ in (self.r + 1)..k {
            s = (3 * s).div_ceil(2);
        }
        s
    }
}

fn isqrt(n: usize) -> usize {
    let mut x = (n as f64).sqrt() as usize;
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    while x * x > n {
        x -= 1;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s_schedule_matches_recurrence_and_bounds() {
        let device = DeviceParams::new(8, 8 * 144).unwrap();
        let p = EmshParams::soft(device, 0.05).unwrap();
        assert_eq!(p.sqrt_m(), 12);
        let r = p.corruption_rank();
        // 12^r >= 20 with r minimal: 12^2 = 144 >= 20, 12^1 = 12 < 20
        assert_eq!(r, 2);
        assert_eq!(p.s(r), 0);
        assert_eq!(p.s(r + 1), 2);
        assert_eq!(p.s(r + 2), 3);
        assert_eq!(p.s(r + 3), 5);
        assert_eq!(p.s(r + 4), 8);
        for k in (r + 1)..(r + 12) {
            let lo = 1.5f64.powi((k - r - 1) as i32);
            let hi = 2.0 * 1.5f64.powi((k - r) as i32) - 1.0;
            let s = p.s(k) as f64;
            assert!(s >= lo && s <= hi, "s_{k} = {s} outside [{lo}, {hi}]");
        }
    }

    #[test]
    fn small_m_rejected_for_soft() {
        let device = DeviceParams::new(8, 8 * 100).unwrap();
        assert!(matches!(
            EmshParams::soft(device, 0.1),
            Err(EmshError::InvalidConfig(_))
        ));
        assert!(EmshParams::hard(device).is_ok());
    }
}
