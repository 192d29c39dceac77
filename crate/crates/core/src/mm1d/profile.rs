//! Optimal 1-D transition profiles between two wells.
//!
//! The profile minimizes `sum (eps/2)|dgamma/ds|^2 + Phi(gamma)/eps`
//! over sampled paths `gamma: [-L, L] -> R^h` with the endpoints
//! clamped to the wells. Initialization traverses the refined geodesic
//! between the wells at the speed `eps |gamma'| = sqrt(2 Phi)` that
//! balances the two terms; damped Gauss-Seidel Newton sweeps with an
//! energy safeguard then polish it.

use crate::error::{Error, Result};
use crate::params;
use crate::phases::PhaseSystem;

/// A sampled transition profile at thickness `epsilon`.
#[derive(Debug, Clone)]
pub struct Profile1D {
    pub epsilon: f64,
    /// Arc-length half-width `L`; samples cover `[-L, L]` uniformly.
    pub half_width: f64,
    pub samples: Vec<Vec<f64>>,
    pub energy: f64,
    /// Gradient-term share of the energy.
    pub grad_part: f64,
    /// Potential-term share of the energy.
    pub pot_part: f64,
}

impl Profile1D {
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.samples.len() - 1) as f64
    }

    /// Linear interpolation at arc position `s`, clamped to the
    /// endpoint wells outside `[-L, L]`.
    pub fn sample_at(&self, s: f64, out: &mut [f64]) {
        let n = self.samples.len();
        let h = self.samples[0].len();
        let t = (s + self.half_width) / self.spacing();
        if t <= 0.0 {
            out[..h].copy_from_slice(&self.samples[0]);
            return;
        }
        if t >= (n - 1) as f64 {
            out[..h].copy_from_slice(&self.samples[n - 1]);
            return;
        }
        let k = t.floor() as usize;
        let f = t - k as f64;
        for (a, o) in out[..h].iter_mut().enumerate() {
            *o = self.samples[k][a] * (1.0 - f) + self.samples[k + 1][a] * f;
        }
    }

    /// Relative gap between the two energy shares.
    pub fn equipartition_gap(&self) -> f64 {
        (self.grad_part - self.pot_part).abs() / self.energy.abs().max(1e-300)
    }
}

/// Sample count that keeps the spacing-to-epsilon ratio shrinking with
/// `epsilon`: about `4 (L / eps)^2`, clamped to a practical range.
pub fn profile_sample_count(epsilon: f64, half_width: f64) -> usize {
    let n = (4.0 * (half_width / epsilon).powi(2)).round() as usize;
    n.clamp(64, 20_000)
}

fn profile_energy_parts(
    sys: &PhaseSystem,
    samples: &[Vec<f64>],
    epsilon: f64,
    ds: f64,
) -> (f64, f64) {
    let h = samples[0].len();
    let mut grad = 0.0;
    let mut pot = 0.0;
    let mut mid = vec![0.0; h];
    for w in samples.windows(2) {
        let mut step_sq = 0.0;
        for a in 0..h {
            let d = w[1][a] - w[0][a];
            step_sq += d * d;
            mid[a] = 0.5 * (w[0][a] + w[1][a]);
        }
        grad += 0.5 * epsilon * step_sq / ds;
        pot += sys.eval_potential(&mid) / epsilon * ds;
    }
    (grad, pot)
}

/// Equipartition-speed initialization: walk the geodesic polyline at
/// `eps dsigma/ds = sqrt(2 Phi)` from its energy midpoint outward.
fn initial_samples(
    sys: &PhaseSystem,
    path: &[Vec<f64>],
    epsilon: f64,
    half_width: f64,
    n: usize,
) -> Vec<Vec<f64>> {
    let h = path[0].len();
    // Cumulative arc length of the polyline.
    let mut arc = vec![0.0];
    for w in path.windows(2) {
        let len: f64 = (0..h)
            .map(|a| (w[1][a] - w[0][a]).powi(2))
            .sum::<f64>()
            .sqrt();
        arc.push(arc.last().unwrap() + len);
    }
    let total = *arc.last().unwrap();
    let at = |sigma: f64| -> Vec<f64> {
        let sigma = sigma.clamp(0.0, total);
        let k = match arc.binary_search_by(|v| v.partial_cmp(&sigma).unwrap()) {
            Ok(k) => k.min(path.len() - 2),
            Err(k) => k.saturating_sub(1).min(path.len() - 2),
        };
        let seg = (arc[k + 1] - arc[k]).max(1e-300);
        let f = ((sigma - arc[k]) / seg).clamp(0.0, 1.0);
        (0..h)
            .map(|a| path[k][a] * (1.0 - f) + path[k + 1][a] * f)
            .collect()
    };
    // Energy midpoint: half the metric integral accumulated.
    let quad = 512;
    let dsig = total / quad as f64;
    let mut acc = vec![0.0];
    for k in 0..quad {
        let z = at((k as f64 + 0.5) * dsig);
        acc.push(acc.last().unwrap() + (2.0 * sys.eval_potential(&z)).sqrt() * dsig);
    }
    let half = acc.last().unwrap() * 0.5;
    let mid_idx = acc.iter().position(|&v| v >= half).unwrap_or(quad);
    let sigma_mid = mid_idx as f64 * dsig;

    let ds = 2.0 * half_width / (n - 1) as f64;
    let center = (n - 1) / 2;
    let mut samples = vec![vec![0.0; h]; n];
    samples[center] = at(sigma_mid);
    // March the speed ODE in substeps of the sample spacing.
    let substeps = 8;
    let dss = ds / substeps as f64;
    let mut sigma = sigma_mid;
    let (lower, upper) = samples.split_at_mut(center + 1);
    for slot in upper.iter_mut() {
        for _ in 0..substeps {
            let speed = (2.0 * sys.eval_potential(&at(sigma))).sqrt() / epsilon;
            let half_step = sigma + 0.5 * dss * speed;
            let speed = (2.0 * sys.eval_potential(&at(half_step))).sqrt() / epsilon;
            sigma = (sigma + dss * speed).min(total);
        }
        *slot = at(sigma);
    }
    sigma = sigma_mid;
    for slot in lower[..center].iter_mut().rev() {
        for _ in 0..substeps {
            let speed = (2.0 * sys.eval_potential(&at(sigma))).sqrt() / epsilon;
            let half_step = sigma - 0.5 * dss * speed;
            let speed = (2.0 * sys.eval_potential(&at(half_step))).sqrt() / epsilon;
            sigma = (sigma - dss * speed).max(0.0);
        }
        *slot = at(sigma);
    }
    samples[0] = path[0].clone();
    samples[n - 1] = path[path.len() - 1].clone();
    samples
}

/// Minimize the 1-D functional between wells `alpha` and `beta`.
pub fn optimal_profile(
    sys: &PhaseSystem,
    alpha: usize,
    beta: usize,
    epsilon: f64,
    half_width: f64,
    n_samples: usize,
) -> Result<Profile1D> {
    if alpha == beta {
        return Err(Error::InvalidSystem(format!(
            "profile endpoints coincide (well {alpha})"
        )));
    }
    let m = sys.num_wells();
    if alpha >= m || beta >= m {
        return Err(Error::InvalidSystem(format!(
            "well pair ({alpha}, {beta}) out of range for {m} wells"
        )));
    }
    if epsilon.is_nan() || epsilon <= 0.0 || half_width < 10.0 * epsilon {
        return Err(Error::InvalidSystem(format!(
            "need 0 < 10 eps <= L, got eps = {epsilon}, L = {half_width}"
        )));
    }
    if n_samples < 8 {
        return Err(Error::InvalidSystem(format!(
            "{n_samples} samples is too coarse"
        )));
    }

    let h = sys.h();
    let geo = sys.geodesic_distance(&sys.wells()[alpha].clone(), &sys.wells()[beta].clone())?;
    let mut samples = initial_samples(sys, &geo.path, epsilon, half_width, n_samples);
    let ds = 2.0 * half_width / (n_samples - 1) as f64;

    let (mut grad, mut pot) = profile_energy_parts(sys, &samples, epsilon, ds);
    let mut energy = grad + pot;
    let mut damping = 1.0f64;
    let fd = 1e-5;
    let mut trial = samples.clone();
    let mut gp = vec![0.0; h];
    let mut gm = vec![0.0; h];
    let mut probe = vec![0.0; h];
    let mut mid_l = vec![0.0; h];
    let mut mid_r = vec![0.0; h];
    for _ in 0..params::PROFILE_MAX_SWEEPS {
        // One damped Newton Gauss-Seidel sweep over interior samples.
        trial.clone_from(&samples);
        for k in 1..n_samples - 1 {
            for a in 0..h {
                for b in 0..h {
                    mid_l[b] = 0.5 * (trial[k - 1][b] + trial[k][b]);
                    mid_r[b] = 0.5 * (trial[k][b] + trial[k + 1][b]);
                }
                sys.potential_gradient(&mid_l, &mut gm);
                sys.potential_gradient(&mid_r, &mut gp);
                let g = epsilon * (2.0 * trial[k][a] - trial[k - 1][a] - trial[k + 1][a]) / ds
                    + (gm[a] + gp[a]) * 0.5 * ds / epsilon;
                // Diagonal curvature with a finite-difference Phi''.
                probe.copy_from_slice(&trial[k]);
                probe[a] += fd;
                sys.potential_gradient(&probe, &mut gp);
                probe[a] -= 2.0 * fd;
                sys.potential_gradient(&probe, &mut gm);
                let curv = ((gp[a] - gm[a]) / (2.0 * fd)).max(0.0);
                let hess = 2.0 * epsilon / ds + 0.5 * curv * ds / epsilon;
                trial[k][a] -= damping * g / hess;
            }
        }
        let (tg, tp) = profile_energy_parts(sys, &trial, epsilon, ds);
        let te = tg + tp;
        if te <= energy {
            let rel = (energy - te) / energy.abs().max(1e-300);
            std::mem::swap(&mut samples, &mut trial);
            grad = tg;
            pot = tp;
            energy = te;
            damping = (damping * 1.5).min(1.0);
            if rel < params::PROFILE_REL_TOL {
                break;
            }
        } else {
            damping *= 0.5;
            if damping < 1e-6 {
                break;
            }
        }
    }

    Ok(Profile1D {
        epsilon,
        half_width,
        samples,
        energy,
        grad_part: grad,
        pot_part: pot,
    })
}
