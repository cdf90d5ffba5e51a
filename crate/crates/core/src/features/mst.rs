use alloc::vec;

use super::Point;

/// Anything with a 3D position.
pub trait Position {
    fn position(&self) -> [f64; 3];
}

impl Position for [f64; 3] {
    fn position(&self) -> [f64; 3] {
        *self
    }
}

impl Position for Point {
    fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// Total Euclidean length of a minimum spanning tree over the complete graph.
///
/// Dense Prim in O(n^2) time and O(n) memory. Returns `None` for fewer than
/// two points, where the length is undefined.
pub fn mst_length<P: Position>(points: &[P]) -> Option<f64> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let pos: alloc::vec::Vec<[f64; 3]> = points.iter().map(Position::position).collect();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut current = 0;
    in_tree[0] = true;
    let mut total = 0.0;
    for _ in 1..n {
        let [cx, cy, cz] = pos[current];
        let mut next = usize::MAX;
        let mut next_d = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let [x, y, z] = pos[j];
            let d = (x - cx) * (x - cx) + (y - cy) * (y - cy) + (z - cz) * (z - cz);
            if d < best[j] {
                best[j] = d;
            }
            if best[j] < next_d {
                next_d = best[j];
                next = j;
            }
        }
        in_tree[next] = true;
        total += libm::sqrt(next_d);
        current = next;
    }
    Some(total)
}
