use alloc::vec::Vec;

use crate::error::{invalid, Result};

pub const MAX_DEPTH: usize = 6;

/// Half-open rainfall-rate interval `[lo, hi)` in mm/h.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRange {
    pub lo: f64,
    pub hi: f64,
}

impl RateRange {
    pub fn contains(&self, y: f64) -> bool {
        y >= self.lo && y < self.hi
    }
}

/// Which side of a gate a path takes. `High` means target above threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Low,
    High,
}

/// Shape and thresholds of the gating tree.
///
/// Gates are stored in binary-heap order: gate 1 is the root and gate `k`
/// has children `2k` (low branch) and `2k + 1` (high branch). Experts are
/// numbered left to right, lowest rate range first.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeSpec {
    depth: usize,
    thresholds: Vec<f64>,
    expert_ranges: Vec<RateRange>,
}

impl TreeSpec {
    /// Build a spec over `[lo, hi)`.
    ///
    /// Explicit thresholds are given in heap order and must be strictly
    /// increasing when read in order. Without them, thresholds come from
    /// recursive geometric midpoints of `[max(lo, 1), hi)`.
    pub fn new(depth: usize, lo: f64, hi: f64, thresholds: Option<&[f64]>) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(invalid!("tree depth {depth} exceeds maximum {MAX_DEPTH}"));
        }
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
            return Err(invalid!("rate range [{lo}, {hi}) is invalid"));
        }
        let gates = (1usize << depth) - 1;
        let heap: Vec<f64> = match thresholds {
            Some(t) => {
                if t.len() != gates {
                    return Err(invalid!("depth {depth} needs {gates} thresholds, got {}", t.len()));
                }
                t.to_vec()
            }
            None => geometric_thresholds(depth, lo.max(1.0), hi),
        };
        if let Some(i) = heap.iter().position(|v| !v.is_finite()) {
            return Err(invalid!("threshold h{} is not finite", i + 1));
        }
        let ordered = in_order(&heap);
        let mut bounds = Vec::with_capacity(ordered.len() + 2);
        bounds.push((0usize, lo));
        bounds.extend(ordered.iter().copied());
        bounds.push((0usize, hi));
        for w in bounds.windows(2) {
            let ((ka, a), (kb, b)) = (w[0], w[1]);
            if !(b > a) {
                let name = |k: usize, v: f64| {
                    if k == 0 {
                        alloc::format!("range bound {v}")
                    } else {
                        alloc::format!("h{k}={v}")
                    }
                };
                return Err(invalid!(
                    "thresholds must increase in order: {} is not below {}",
                    name(ka, a),
                    name(kb, b)
                ));
            }
        }
        let expert_ranges = bounds.windows(2).map(|w| RateRange { lo: w[0].1, hi: w[1].1 }).collect();
        Ok(TreeSpec { depth, thresholds: heap, expert_ranges })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn gate_count(&self) -> usize {
        self.thresholds.len()
    }

    pub fn expert_count(&self) -> usize {
        self.expert_ranges.len()
    }

    /// Thresholds in heap order (`[h1, h2, ...]`).
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Threshold of 1-based gate `k`.
    pub fn threshold(&self, gate: usize) -> f64 {
        self.thresholds[gate - 1]
    }

    pub fn expert_ranges(&self) -> &[RateRange] {
        &self.expert_ranges
    }

    pub fn y_max(&self) -> f64 {
        self.expert_ranges.last().map_or(0.0, |r| r.hi)
    }

    /// Experts (0-based, contiguous) under 1-based gate `k`.
    pub fn gate_experts(&self, gate: usize) -> core::ops::Range<usize> {
        let level = usize::BITS as usize - 1 - gate.leading_zeros() as usize;
        let width = 1usize << (self.depth - level);
        let first = (gate - (1 << level)) * width;
        first..first + width
    }

    /// Union of the expert ranges under gate `k`.
    pub fn gate_range(&self, gate: usize) -> RateRange {
        let experts = self.gate_experts(gate);
        RateRange { lo: self.expert_ranges[experts.start].lo, hi: self.expert_ranges[experts.end - 1].hi }
    }

    /// Root-to-leaf gates and branches for 0-based expert `m`.
    pub fn expert_path(&self, expert: usize) -> Vec<(usize, Branch)> {
        let mut path = Vec::with_capacity(self.depth);
        let leaf = (1usize << self.depth) + expert;
        for level in (0..self.depth).rev() {
            let gate = leaf >> (level + 1);
            let branch = if (leaf >> level) & 1 == 1 { Branch::High } else { Branch::Low };
            path.push((gate, branch));
        }
        path
    }

    /// Index of the expert whose range holds `y`; the top range is open-ended.
    pub fn expert_for(&self, y: f64) -> usize {
        let m = self.expert_count();
        self.expert_ranges[..m - 1].iter().position(|r| y < r.hi).unwrap_or(m - 1)
    }
}

/// Heap-order thresholds used in the primary tree-depth configurations.
pub fn default_thresholds(depth: usize) -> Option<Vec<f64>> {
    const LEVELS: [&[f64]; 4] =
        [&[20.0], &[10.0, 40.0], &[5.0, 15.0, 30.0, 60.0], &[2.5, 7.5, 12.5, 17.5, 25.0, 35.0, 50.0, 70.0]];
    if depth > LEVELS.len() {
        return None;
    }
    Some(LEVELS[..depth].iter().flat_map(|l| l.iter().copied()).collect())
}

fn geometric_thresholds(depth: usize, lo: f64, hi: f64) -> Vec<f64> {
    let gates = (1usize << depth) - 1;
    let mut heap = alloc::vec![0.0; gates];
    fn fill(heap: &mut [f64], k: usize, lo: f64, hi: f64) {
        if k > heap.len() {
            return;
        }
        let mid = libm::sqrt(lo * hi);
        heap[k - 1] = mid;
        fill(heap, 2 * k, lo, mid);
        fill(heap, 2 * k + 1, mid, hi);
    }
    fill(&mut heap, 1, lo, hi);
    heap
}

/// In-order traversal of heap-ordered thresholds, paired with their 1-based gate index.
fn in_order(heap: &[f64]) -> Vec<(usize, f64)> {
    fn walk(heap: &[f64], k: usize, out: &mut Vec<(usize, f64)>) {
        if k > heap.len() {
            return;
        }
        walk(heap, 2 * k, out);
        out.push((k, heap[k - 1]));
        walk(heap, 2 * k + 1, out);
    }
    let mut out = Vec::with_capacity(heap.len());
    walk(heap, 1, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use alloc::vec;

    fn lows(spec: &TreeSpec) -> Vec<f64> {
        spec.expert_ranges().iter().map(|r| r.lo).collect()
    }

    #[test]
    fn depth_zero_is_single_expert() {
        let s = TreeSpec::new(0, 0.0, 80.0, None).unwrap();
        assert_eq!(s.gate_count(), 0);
        assert_eq!(s.expert_ranges(), &[RateRange { lo: 0.0, hi: 80.0 }]);
        assert!(s.expert_path(0).is_empty());
    }

    #[test]
    fn depth_one_single_threshold() {
        let s = TreeSpec::new(1, 0.0, 80.0, Some(&[20.0])).unwrap();
        assert_eq!(s.threshold(1), 20.0);
        assert_eq!(lows(&s), vec![0.0, 20.0]);
        assert_eq!(s.y_max(), 80.0);
    }

    #[test]
    fn depth_two_heap_order() {
        let s = TreeSpec::new(2, 0.0, 80.0, Some(&[20.0, 10.0, 40.0])).unwrap();
        assert_eq!(lows(&s), vec![0.0, 10.0, 20.0, 40.0]);
        assert_eq!(s.gate_experts(1), 0..4);
        assert_eq!(s.gate_experts(2), 0..2);
        assert_eq!(s.gate_experts(3), 2..4);
        assert_eq!(s.gate_range(3), RateRange { lo: 20.0, hi: 80.0 });
        // e3 = P(z1 = True) P(z3 = False)
        assert_eq!(s.expert_path(2), vec![(1, Branch::High), (3, Branch::Low)]);
        assert_eq!(s.expert_path(0), vec![(1, Branch::Low), (2, Branch::Low)]);
        assert_eq!(s.expert_for(15.0), 1);
        assert_eq!(s.expert_for(500.0), 3);
        assert_eq!(s.expert_for(20.0), 2);
    }

    #[test]
    fn published_configurations_are_accepted() {
        TreeSpec::new(3, 0.0, 450.0, Some(&[112.7, 47.0, 197.0, 21.2, 77.5, 152.5, 246.2])).unwrap();
        for depth in 0..=4 {
            let t = default_thresholds(depth).unwrap();
            let s = TreeSpec::new(depth, 0.0, 80.0, Some(&t)).unwrap();
            assert_eq!(s.expert_count(), 1 << depth);
        }
        assert_eq!(default_thresholds(2).unwrap(), vec![20.0, 10.0, 40.0]);
        assert!(default_thresholds(5).is_none());
    }

    #[test]
    fn generated_thresholds_are_geometric() {
        let s = TreeSpec::new(2, 0.0, 100.0, None).unwrap();
        assert!((s.threshold(1) - 10.0).abs() < 1e-12);
        assert!((s.threshold(2) - 10f64.sqrt()).abs() < 1e-12);
        assert!((s.threshold(3) - 1000f64.sqrt()).abs() < 1e-12);
        let s6 = TreeSpec::new(6, 0.0, 450.0, None).unwrap();
        assert_eq!(s6.expert_count(), 64);
    }

    #[test]
    fn malformed_thresholds_name_the_pair() {
        match TreeSpec::new(2, 0.0, 80.0, Some(&[20.0, 30.0, 40.0])) {
            Err(Error::InvalidInput(msg)) => assert!(msg.contains("h2=30") && msg.contains("h1=20"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(TreeSpec::new(2, 0.0, 80.0, Some(&[20.0, 10.0])).is_err());
        assert!(TreeSpec::new(1, 0.0, 80.0, Some(&[90.0])).is_err());
        assert!(TreeSpec::new(7, 0.0, 80.0, None).is_err());
    }
}
