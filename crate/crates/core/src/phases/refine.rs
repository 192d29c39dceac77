//! Continuous refinement of lattice geodesics.
//!
//! A candidate path is a polyline with fixed endpoints; its cost is the
//! midpoint-rule quadrature of the metric line integral. Projected
//! gradient descent with backtracking moves the interior nodes, clamped
//! to the phase box, and never accepts an increase.

use crate::params::{ARMIJO_C, BACKTRACK, MAX_BACKTRACKS, REFINE_REL_TOL, WEIGHT_GUARD};

use super::potential::Potential;

/// Midpoint-rule cost of a polyline under the metric `sqrt(2 Phi)`.
pub fn path_energy(pot: &Potential, pts: &[Vec<f64>]) -> f64 {
    let h = pot.dim();
    let mut mid = vec![0.0; h];
    let mut total = 0.0;
    for seg in pts.windows(2) {
        let mut len2 = 0.0;
        for a in 0..h {
            let d = seg[1][a] - seg[0][a];
            len2 += d * d;
            mid[a] = 0.5 * (seg[0][a] + seg[1][a]);
        }
        total += len2.sqrt() * pot.metric_weight(&mid);
    }
    total
}

/// Resample a polyline to `n` nodes, uniform in Euclidean arc length.
/// Endpoints are preserved exactly.
pub fn resample(pts: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    assert!(n >= 2 && pts.len() >= 2);
    let h = pts[0].len();
    let mut cum = Vec::with_capacity(pts.len());
    cum.push(0.0);
    for seg in pts.windows(2) {
        let mut len2 = 0.0;
        for a in 0..h {
            let d = seg[1][a] - seg[0][a];
            len2 += d * d;
        }
        cum.push(cum.last().unwrap() + len2.sqrt());
    }
    let total = *cum.last().unwrap();
    if total <= 0.0 {
        return vec![pts[0].clone(); n];
    }
    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    for k in 0..n {
        let target = total * k as f64 / (n - 1) as f64;
        while seg + 2 < cum.len() && cum[seg + 1] < target {
            seg += 1;
        }
        let span = (cum[seg + 1] - cum[seg]).max(1e-300);
        let t = ((target - cum[seg]) / span).clamp(0.0, 1.0);
        let mut p = vec![0.0; h];
        for a in 0..h {
            p[a] = pts[seg][a] + t * (pts[seg + 1][a] - pts[seg][a]);
        }
        out.push(p);
    }
    out
}

/// Gradient of [`path_energy`] with respect to the interior nodes.
/// Endpoint rows are left at zero.
fn energy_gradient(pot: &Potential, pts: &[Vec<f64>], grad: &mut [Vec<f64>]) {
    let h = pot.dim();
    for g in grad.iter_mut() {
        g.fill(0.0);
    }
    let mut mid = vec![0.0; h];
    let mut gphi = vec![0.0; h];
    let n = pts.len();
    for i in 0..n - 1 {
        let mut len2 = 0.0;
        for a in 0..h {
            let d = pts[i + 1][a] - pts[i][a];
            len2 += d * d;
            mid[a] = 0.5 * (pts[i][a] + pts[i + 1][a]);
        }
        let len = len2.sqrt();
        let w = pot.metric_weight(&mid);
        pot.gradient(&mid, &mut gphi);
        // d w / d mid = grad Phi / sqrt(2 Phi), guarded near the wells.
        let wg = w.max(WEIGHT_GUARD);
        let lg = len.max(WEIGHT_GUARD);
        for a in 0..h {
            let unit = (pts[i + 1][a] - pts[i][a]) / lg;
            let midterm = 0.5 * len * gphi[a] / wg;
            if i > 0 {
                grad[i][a] += -w * unit + midterm;
            }
            if i + 1 < n - 1 {
                grad[i + 1][a] += w * unit + midterm;
            }
        }
    }
}

/// Refine a polyline in place by projected gradient descent.
///
/// Returns the final cost. The cost sequence is nonincreasing by
/// construction; iteration stops after `max_iters`, when the relative
/// improvement drops below [`REFINE_REL_TOL`], or when the line search
/// stalls.
pub fn refine(
    pot: &Potential,
    pts: &mut [Vec<f64>],
    box_radius: f64,
    initial_step: f64,
    max_iters: usize,
) -> f64 {
    let h = pot.dim();
    let n = pts.len();
    let mut grad = vec![vec![0.0; h]; n];
    let mut trial = pts.to_vec();
    let mut energy = path_energy(pot, pts);
    let mut step = initial_step;

    for _ in 0..max_iters {
        energy_gradient(pot, pts, &mut grad);
        let gnorm2: f64 = grad.iter().flatten().map(|g| g * g).sum();
        if gnorm2 == 0.0 {
            break;
        }
        let mut alpha = step;
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..n {
                for a in 0..h {
                    trial[i][a] =
                        (pts[i][a] - alpha * grad[i][a]).clamp(-box_radius, box_radius);
                }
            }
            let cand = path_energy(pot, &trial);
            if cand <= energy - ARMIJO_C * alpha * gnorm2 {
                for i in 0..n {
                    pts[i].copy_from_slice(&trial[i]);
                }
                let rel = (energy - cand) / energy.max(1e-300);
                energy = cand;
                accepted = true;
                // Gentle growth so a conservative first step recovers.
                step = (alpha * 2.0).min(initial_step);
                if rel < REFINE_REL_TOL {
                    return energy;
                }
                break;
            }
            alpha *= BACKTRACK;
        }
        if !accepted {
            break;
        }
    }
    energy
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resample_preserves_endpoints_and_spacing() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let out = resample(&pts, 9);
        assert_eq!(out.len(), 9);
        assert_eq!(out[0], vec![0.0, 0.0]);
        assert_eq!(out[8], vec![1.0, 1.0]);
        // Total length 2 split into 8 equal pieces of length 0.25.
        for seg in out.windows(2) {
            let dx = seg[1][0] - seg[0][0];
            let dy = seg[1][1] - seg[0][1];
            assert!(((dx * dx + dy * dy).sqrt() - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn refinement_never_increases_cost() {
        let pot = Potential::ProductWells {
            wells: vec![vec![-0.5, 0.0], vec![0.5, 0.0]],
        };
        // A deliberately bad detour.
        let init = vec![
            vec![-0.5, 0.0],
            vec![-0.25, 0.8],
            vec![0.25, 0.8],
            vec![0.5, 0.0],
        ];
        let mut pts = resample(&init, 64);
        let before = path_energy(&pot, &pts);
        let after = refine(&pot, &mut pts, 1.0, 0.05, 200);
        assert!(after <= before);
        assert!((path_energy(&pot, &pts) - after).abs() < 1e-12);
        for p in &pts {
            assert!(p.iter().all(|v| v.abs() <= 1.0));
        }
    }

    #[test]
    fn straight_segment_is_stationary_for_symmetric_wells() {
        // For the scalar double well the straight segment is the geodesic;
        // refinement should not move it by much.
        let pot = Potential::DoubleWell {
            a: -1.0,
            b: 1.0,
            scale: 1.0,
        };
        let init = vec![vec![-1.0], vec![1.0]];
        let mut pts = resample(&init, 128);
        let before = path_energy(&pot, &pts);
        let after = refine(&pot, &mut pts, 2.0, 0.01, 200);
        assert!(after <= before + 1e-15);
        let exact = 4.0 * std::f64::consts::SQRT_2 / 3.0;
        assert!((after - exact).abs() < 1e-3);
    }
}
