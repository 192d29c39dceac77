//! Shortest paths on the phase lattice under the degenerate metric
//! `sqrt(2 Phi)` (Euclidean edge length times the weight at the edge
//! midpoint).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::lattice::PhaseLattice;
use super::potential::Potential;

#[derive(Copy, Clone, PartialEq)]
struct State {
    cost: f64,
    node: usize,
}

impl Eq for State {}

// Reversed on cost so the std max-heap pops the cheapest node first.
impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const NO_PRED: u32 = u32::MAX;

/// Distances from `src` to every lattice node, plus predecessors.
/// With `target` set, stops as soon as that node is settled.
fn run(
    lat: &PhaseLattice,
    pot: &Potential,
    src: usize,
    target: Option<usize>,
) -> (Vec<f64>, Vec<u32>) {
    let n = lat.len();
    let h = lat.dim();
    let sp = lat.spacing();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![NO_PRED; n];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(State {
        cost: 0.0,
        node: src,
    });

    let mut pu = [0.0f64; 3];
    let mut mid = [0.0f64; 3];

    while let Some(State { cost, node }) = heap.pop() {
        if cost > dist[node] {
            continue;
        }
        if Some(node) == target {
            break;
        }
        let ix = lat.unravel(node);
        lat.point(node, &mut pu);
        for &(off, len) in lat.offsets() {
            let Some(jx) = lat.step(ix, off) else {
                continue;
            };
            let next = lat.index(jx);
            for a in 0..h {
                mid[a] = pu[a] + 0.5 * sp * off[a] as f64;
            }
            let w = pot.metric_weight(&mid[..h]);
            let cand = cost + len * sp * w;
            if cand < dist[next] {
                dist[next] = cand;
                pred[next] = node as u32;
                heap.push(State {
                    cost: cand,
                    node: next,
                });
            }
        }
    }
    (dist, pred)
}

/// Full single-source sweep; used to tabulate well distance fields.
pub fn single_source(lat: &PhaseLattice, pot: &Potential, src: usize) -> Vec<f64> {
    run(lat, pot, src, None).0
}

/// Point-to-point search with early exit. Returns the lattice distance
/// and the node path from `src` to `dst` inclusive.
pub fn point_to_point(
    lat: &PhaseLattice,
    pot: &Potential,
    src: usize,
    dst: usize,
) -> (f64, Vec<usize>) {
    if src == dst {
        return (0.0, vec![src]);
    }
    let (dist, pred) = run(lat, pot, src, Some(dst));
    let mut path = vec![dst];
    let mut cur = dst;
    while cur != src {
        let p = pred[cur];
        assert!(p != NO_PRED, "target unreachable from source");
        cur = p as usize;
        path.push(cur);
    }
    path.reverse();
    (dist[dst], path)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// With Phi == 1/2 the weight is 1 and lattice distances reduce to
    /// octile geometry, which we can check by hand.
    fn unit_weight_potential() -> Potential {
        // (z - a)^2 (z - b)^2 has value 1/2 at z = 0 when a = -c, b = c
        // and c^4 = 1/2; constant enough only at z = 0, so instead use a
        // product potential evaluated on its flat direction: simpler to
        // just test monotone consistency below.
        Potential::DoubleWell {
            a: -1.0,
            b: 1.0,
            scale: 1.0,
        }
    }

    #[test]
    fn straight_line_on_axis_matches_quadrature() {
        // h = 1: the lattice path is the segment itself, so Dijkstra's
        // value equals the midpoint-rule quadrature of sqrt(2 Phi).
        let pot = unit_weight_potential();
        let lat = PhaseLattice::new(1, 401, 2.0).unwrap();
        let src = lat.nearest(&[-1.0]);
        let dst = lat.nearest(&[1.0]);
        let (d, path) = point_to_point(&lat, &pot, src, dst);
        assert_eq!(path.len(), 201);
        // int_{-1}^{1} sqrt(2) (1 - z^2) dz = 4 sqrt(2) / 3
        let exact = 4.0 * std::f64::consts::SQRT_2 / 3.0;
        assert!((d - exact).abs() < 1e-3, "d = {d}, exact = {exact}");
    }

    #[test]
    fn early_exit_matches_full_run() {
        let pot = Potential::ProductWells {
            wells: vec![vec![-0.5, 0.0], vec![0.5, 0.0]],
        };
        let lat = PhaseLattice::new(2, 41, 1.0).unwrap();
        let src = lat.nearest(&[-0.5, 0.0]);
        let dst = lat.nearest(&[0.5, 0.5]);
        let full = single_source(&lat, &pot, src);
        let (d, _) = point_to_point(&lat, &pot, src, dst);
        assert!((d - full[dst]).abs() < 1e-12);
    }
}
