//! Bulk stored energy `W(F, z)`: a polyconvex, frame-indifferent,
//! coercive mixture of per-phase hyperelastic densities.
//!
//! Each of the `h + 1` phases contributes
//!
//! ```text
//! W_a(F) = mu_a |F U_a^{-1}|^2 + c1 |F|^p + c2 (det F)^r
//!        + c3 |F|^(2q) / (det F)^q + c4 (-log det F) - w0_a
//! ```
//!
//! with `w0_a` the value of the non-`mu` terms at `F = U_a`, so the
//! rotation orbit of the prestrain `U_a` realizes the documented
//! single-phase minimum `2 mu_a`. The mixture weight of phase `a <= h`
//! is `z_a^+`, the last phase gets `(1 - sum z)^+`, which extends `W`
//! continuously to all of `R^h`. Determinants `<= 0` evaluate to the
//! `+inf` sentinel. All terms depend on `F` only through `|F M|` and
//! `det F`, giving frame indifference up to rounding.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::Mat2;

/// Raw, serializable parameters of the energy family.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoredEnergyParams {
    /// One entry per phase, length `h + 1`.
    pub phases: Vec<PhaseElasticParams>,
    #[serde(default = "default_half")]
    pub c1: f64,
    #[serde(default = "default_half")]
    pub c2: f64,
    #[serde(default = "default_half")]
    pub c3: f64,
    /// Log-barrier constant; 0 disables the term.
    #[serde(default)]
    pub c4: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(default = "default_q")]
    pub q: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseElasticParams {
    pub mu: f64,
    /// Symmetric positive-definite prestrain, row-major.
    pub prestrain: [[f64; 2]; 2],
}

fn default_half() -> f64 {
    0.5
}
fn default_p() -> f64 {
    4.0
}
fn default_r() -> f64 {
    2.0
}
fn default_q() -> f64 {
    2.0
}

impl Default for StoredEnergyParams {
    /// Two martensite-like variants: `U_1 = I` and
    /// `U_2 = diag(lambda, 1/lambda)` with `lambda = 1.2`.
    fn default() -> Self {
        StoredEnergyParams {
            phases: vec![
                PhaseElasticParams {
                    mu: 2.0,
                    prestrain: [[1.0, 0.0], [0.0, 1.0]],
                },
                PhaseElasticParams {
                    mu: 2.0,
                    prestrain: [[1.2, 0.0], [0.0, 1.0 / 1.2]],
                },
            ],
            c1: 0.5,
            c2: 0.5,
            c3: 0.5,
            c4: 0.0,
            p: 4.0,
            r: 2.0,
            q: 2.0,
        }
    }
}

/// One phase of the validated energy: modulus, prestrain, and caches.
#[derive(Debug, Clone)]
pub struct PhaseElastic {
    pub mu: f64,
    pub prestrain: Mat2,
    /// `U^{-1} U^{-T}`, the kernel of the mu-term.
    inv_metric: Mat2,
    /// Non-mu terms evaluated at `U`, subtracted for normalization.
    w0: f64,
}

/// Validated stored-energy specification.
#[derive(Debug, Clone)]
pub struct StoredEnergySpec {
    phases: Vec<PhaseElastic>,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub p: f64,
    pub r: f64,
    pub q: f64,
    params: StoredEnergyParams,
}

impl StoredEnergySpec {
    pub fn from_params(params: &StoredEnergyParams) -> Result<Self> {
        let e = |msg: String| Error::InvalidEnergy(msg);
        if params.phases.is_empty() {
            return Err(e("need at least one phase".into()));
        }
        if !(params.c1 > 0.0 && params.c2 > 0.0 && params.c3 > 0.0) {
            return Err(e(format!(
                "coercivity constants must be positive: c1={} c2={} c3={}",
                params.c1, params.c2, params.c3
            )));
        }
        if params.c4 < 0.0 {
            return Err(e(format!("barrier constant c4={} negative", params.c4)));
        }
        if params.p < 2.0 {
            return Err(e(format!("exponent p={} must be >= n = 2", params.p)));
        }
        if params.r <= 1.0 {
            return Err(e(format!("exponent r={} must be > 1", params.r)));
        }
        if params.q <= 1.0 {
            return Err(e(format!("exponent q={} must be > n - 1 = 1", params.q)));
        }
        let mut spec = StoredEnergySpec {
            phases: Vec::with_capacity(params.phases.len()),
            c1: params.c1,
            c2: params.c2,
            c3: params.c3,
            c4: params.c4,
            p: params.p,
            r: params.r,
            q: params.q,
            params: params.clone(),
        };
        for (i, ph) in params.phases.iter().enumerate() {
            let u = Mat2 { m: ph.prestrain };
            if !u.is_finite() || ph.mu < 0.0 || !ph.mu.is_finite() {
                return Err(e(format!("phase {i}: non-finite or negative parameters")));
            }
            if (u.m[0][1] - u.m[1][0]).abs() > 1e-12 {
                return Err(e(format!("phase {i}: prestrain not symmetric")));
            }
            if u.det() <= 0.0 {
                return Err(e(format!("phase {i}: prestrain determinant not positive")));
            }
            let inv = u.inverse();
            let w0 = spec.core_terms(u);
            spec.phases.push(PhaseElastic {
                mu: ph.mu,
                prestrain: u,
                inv_metric: inv * inv.transpose(),
                w0,
            });
        }
        Ok(spec)
    }

    pub fn params(&self) -> &StoredEnergyParams {
        &self.params
    }

    /// Phase-space dimension `h` (one fewer than the phase count).
    pub fn h(&self) -> usize {
        self.phases.len() - 1
    }

    pub fn num_phases(&self) -> usize {
        self.phases.len()
    }

    pub fn phase(&self, alpha: usize) -> &PhaseElastic {
        &self.phases[alpha]
    }

    /// The single-phase minimum of `W_a` over the rotation orbit of its
    /// prestrain: exactly `2 mu_a` by the `w0` normalization.
    pub fn single_phase_minimum(&self, alpha: usize) -> f64 {
        2.0 * self.phases[alpha].mu
    }

    /// The shared non-`mu` core evaluated at `F` (requires `det F > 0`).
    fn core_terms(&self, f: Mat2) -> f64 {
        let det = f.det();
        let fr2 = f.frob_sq();
        let mut v = self.c1 * fr2.powf(0.5 * self.p)
            + self.c2 * det.powf(self.r)
            + self.c3 * fr2.powf(self.q) / det.powf(self.q);
        if self.c4 != 0.0 {
            v -= self.c4 * det.ln();
        }
        v
    }

    /// Derivative of the core with respect to `F`.
    fn core_derivative(&self, f: Mat2) -> Mat2 {
        let det = f.det();
        let fr2 = f.frob_sq();
        let cof = f.cof();
        let mut out = f * (self.c1 * self.p * fr2.powf(0.5 * self.p - 1.0));
        out = out + cof * (self.c2 * self.r * det.powf(self.r - 1.0));
        let dq = det.powf(self.q);
        out = out + f * (self.c3 * 2.0 * self.q * fr2.powf(self.q - 1.0) / dq)
            - cof * (self.c3 * self.q * fr2.powf(self.q) / (dq * det));
        if self.c4 != 0.0 {
            out = out - cof * (self.c4 / det);
        }
        out
    }

    /// Single-phase density `W_a(F)`; `+inf` when `det F <= 0`.
    pub fn eval_phase(&self, alpha: usize, f: Mat2) -> f64 {
        if f.det() <= 0.0 {
            return f64::INFINITY;
        }
        let ph = &self.phases[alpha];
        // |F U^{-1}|^2 = F : F (U^{-1} U^{-T})
        let mu_term = ph.mu * f.ddot(&(f * ph.inv_metric));
        mu_term + self.core_terms(f) - ph.w0
    }

    /// Mixture weights `(z_1^+, ..., z_h^+, (1 - sum z)^+)`.
    pub fn mixture_weights(&self, z: &[f64], out: &mut [f64]) {
        debug_assert_eq!(z.len(), self.h());
        let mut sum = 0.0;
        for (i, &zi) in z.iter().enumerate() {
            out[i] = zi.max(0.0);
            sum += zi;
        }
        out[self.h()] = (1.0 - sum).max(0.0);
    }

    /// The mixture density `W(F, z)`.
    ///
    /// Returns the `+inf` sentinel when `det F <= 0`; rejects non-finite
    /// inputs with a domain error.
    pub fn eval_w(&self, f: Mat2, z: &[f64]) -> Result<f64> {
        if !f.is_finite() || z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "eval_w input",
            });
        }
        if z.len() != self.h() {
            return Err(Error::ShapeMismatch(format!(
                "z has dimension {}, energy has h = {}",
                z.len(),
                self.h()
            )));
        }
        Ok(self.eval_w_unchecked(f, z))
    }

    /// As [`eval_w`](Self::eval_w) without input validation; hot-loop use.
    pub fn eval_w_unchecked(&self, f: Mat2, z: &[f64]) -> f64 {
        if f.det() <= 0.0 {
            return f64::INFINITY;
        }
        let core = self.core_terms(f);
        let mut acc = 0.0;
        let mut sum = 0.0;
        for (i, &zi) in z.iter().enumerate() {
            sum += zi;
            if zi > 0.0 {
                let ph = &self.phases[i];
                acc += zi * (ph.mu * f.ddot(&(f * ph.inv_metric)) + core - ph.w0);
            }
        }
        let last = 1.0 - sum;
        if last > 0.0 {
            let ph = &self.phases[self.h()];
            acc += last * (ph.mu * f.ddot(&(f * ph.inv_metric)) + core - ph.w0);
        }
        acc
    }

    /// Analytic derivative of `W` with respect to `F`.
    ///
    /// `det F <= 0` is a domain error here (the energy is `+inf` there).
    pub fn dw_df(&self, f: Mat2, z: &[f64]) -> Result<Mat2> {
        if !f.is_finite() || z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "dw_df input",
            });
        }
        if f.det() <= 0.0 {
            return Err(Error::InvalidEnergy(format!(
                "dw_df requires det F > 0, got {}",
                f.det()
            )));
        }
        Ok(self.dw_df_unchecked(f, z))
    }

    /// As [`dw_df`](Self::dw_df) without input validation.
    pub fn dw_df_unchecked(&self, f: Mat2, z: &[f64]) -> Mat2 {
        // W = sum_a wt_a (mu_a |F U_a^{-1}|^2 - w0_a) + s(z) * core(F)
        let mut weighted_metric = Mat2::ZERO;
        let mut s = 0.0;
        let mut sum = 0.0;
        for (i, &zi) in z.iter().enumerate() {
            sum += zi;
            if zi > 0.0 {
                let ph = &self.phases[i];
                weighted_metric = weighted_metric + ph.inv_metric * (zi * ph.mu);
                s += zi;
            }
        }
        let last = 1.0 - sum;
        if last > 0.0 {
            let ph = &self.phases[self.h()];
            weighted_metric = weighted_metric + ph.inv_metric * (last * ph.mu);
            s += last;
        }
        f * weighted_metric * 2.0 + self.core_derivative(f) * s
    }

    /// Partial derivatives of `W` with respect to the phase coordinates:
    /// `dW/dz_i = [z_i > 0] W_i(F) - [sum z < 1] W_{h+1}(F)`.
    /// At the weight kinks the right-sided rule `t > 0` applies.
    pub fn dw_dz(&self, f: Mat2, z: &[f64], out: &mut [f64]) {
        let sum: f64 = z.iter().sum();
        let last = if 1.0 - sum > 0.0 {
            self.eval_phase(self.h(), f)
        } else {
            0.0
        };
        for (i, &zi) in z.iter().enumerate() {
            let own = if zi > 0.0 { self.eval_phase(i, f) } else { 0.0 };
            out[i] = own - last;
        }
    }

    /// The documented coercivity constant. Using `log d <= d^r / (r e)`
    /// to absorb the barrier into the `det^r` term and
    /// `s_max = 1 + 2 sqrt(h) R` to bound the mixture weight sum over
    /// the phase ball of radius `R`,
    ///
    /// ```text
    /// C = min(c1, c2 - c4/(r e), c3, 1 / (s_max * max_a w0_a^+ + eps))
    /// ```
    ///
    /// guarantees `W >= C (|F|^p + (det F)^r + |F|^(2q)/(det F)^q) - 1/C`
    /// whenever `c2 > c4/(r e)` (always true for the default `c4 = 0`);
    /// for stronger barriers the returned constant is not a guarantee
    /// and [`coercivity_check`](Self::coercivity_check) reports whatever
    /// margin it finds.
    pub fn coercivity_constant(&self, box_radius: f64) -> f64 {
        let e = std::f64::consts::E;
        let s_max = 1.0 + 2.0 * (self.h() as f64).sqrt() * box_radius;
        let w0_max = self
            .phases
            .iter()
            .map(|ph| ph.w0.max(0.0))
            .fold(0.0f64, f64::max);
        let offset = s_max * w0_max + 1e-12;
        (self.c1)
            .min(self.c2 - self.c4 / (self.r * e))
            .min(self.c3)
            .min(1.0 / offset)
    }

    /// Maximum of `|W(RF, z) - W(F, z)|` over random states and
    /// rotations.
    pub fn frame_indifference_check(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = crate::rng(seed);
        let mut worst = 0.0f64;
        let mut z = vec![0.0; self.h()];
        for _ in 0..samples {
            let f = random_deformation_gradient(&mut rng);
            random_phase_point(&mut rng, 1.5, &mut z);
            let r = Mat2::rotation(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
            let a = self.eval_w_unchecked(f, &z);
            let b = self.eval_w_unchecked(r * f, &z);
            worst = worst.max((a - b).abs());
        }
        worst
    }

    /// Worst margin `W - (C * coercive_terms - 1/C)` over random states
    /// with `|z| <= box_radius`; nonnegative when the bound holds.
    pub fn coercivity_check(&self, samples: usize, box_radius: f64, seed: u64) -> f64 {
        let c = self.coercivity_constant(box_radius);
        let mut rng = crate::rng(seed);
        let mut z = vec![0.0; self.h()];
        let mut worst = f64::INFINITY;
        for _ in 0..samples {
            let f = random_deformation_gradient(&mut rng);
            random_phase_point(&mut rng, box_radius, &mut z);
            let det = f.det();
            let fr2 = f.frob_sq();
            let rhs = c * (fr2.powf(0.5 * self.p)
                + det.powf(self.r)
                + fr2.powf(self.q) / det.powf(self.q))
                - 1.0 / c;
            let margin = self.eval_w_unchecked(f, &z) - rhs;
            worst = worst.min(margin);
        }
        worst
    }
}

/// Random matrix with determinant bounded away from zero, for property
/// sweeps. Entries in `[-1.5, 1.5]`, resampled until `det >= 0.05`.
pub fn random_deformation_gradient(rng: &mut ChaCha8Rng) -> Mat2 {
    loop {
        let f = Mat2::new(
            rng.random_range(-1.5..1.5),
            rng.random_range(-1.5..1.5),
            rng.random_range(-1.5..1.5),
            rng.random_range(-1.5..1.5),
        );
        if f.det() >= 0.05 {
            return f;
        }
    }
}

/// Uniform sample from the ball of the given radius (by rejection).
pub fn random_phase_point(rng: &mut ChaCha8Rng, radius: f64, out: &mut [f64]) {
    loop {
        let mut norm2 = 0.0;
        for v in out.iter_mut() {
            *v = rng.random_range(-radius..radius);
            norm2 += *v * *v;
        }
        if norm2 <= radius * radius {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_spec() -> StoredEnergySpec {
        StoredEnergySpec::from_params(&StoredEnergyParams::default()).unwrap()
    }

    #[test]
    fn inverted_states_hit_the_sentinel() {
        let spec = default_spec();
        let f = Mat2::diag(1.0, -1.0);
        assert_eq!(spec.eval_w(f, &[0.5]).unwrap(), f64::INFINITY);
        assert!(spec.dw_df(f, &[0.5]).is_err());
    }

    #[test]
    fn rejects_non_finite_input() {
        let spec = default_spec();
        let f = Mat2::new(f64::NAN, 0.0, 0.0, 1.0);
        assert!(matches!(
            spec.eval_w(f, &[0.5]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn single_phase_collapse_at_basis_vectors() {
        // z = e_1 selects W_1 exactly; z = 0 selects the last phase.
        let spec = default_spec();
        let f = Mat2::new(1.1, 0.2, -0.1, 0.9);
        let w1 = spec.eval_w(f, &[1.0]).unwrap();
        assert_eq!(w1, spec.eval_phase(0, f));
        let w2 = spec.eval_w(f, &[0.0]).unwrap();
        assert_eq!(w2, spec.eval_phase(1, f));
    }

    #[test]
    fn rotation_orbit_of_prestrain_gives_documented_minimum() {
        let spec = default_spec();
        for alpha in 0..spec.num_phases() {
            let u = spec.phase(alpha).prestrain;
            for k in 0..8 {
                let r = Mat2::rotation(0.7 * k as f64);
                let v = spec.eval_phase(alpha, r * u);
                let expect = spec.single_phase_minimum(alpha);
                assert!(
                    (v - expect).abs() < 1e-12,
                    "phase {alpha}, k {k}: {v} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let spec = default_spec();
        let mut rng = crate::rng(7);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let f = random_deformation_gradient(&mut rng);
            if f.det() < 0.5 || f.det() > 2.0 {
                continue;
            }
            let mut z = vec![0.0; spec.h()];
            random_phase_point(&mut rng, 1.2, &mut z);
            // Keep clear of the weight kinks so the FD stencil stays on
            // one linear piece.
            if z.iter().any(|v| v.abs() < 1e-3) || (1.0 - z.iter().sum::<f64>()).abs() < 1e-3 {
                continue;
            }
            let g = spec.dw_df(f, &z).unwrap();
            let step = 1e-5;
            for i in 0..2 {
                for j in 0..2 {
                    let mut fp = f;
                    fp.m[i][j] += step;
                    let mut fm = f;
                    fm.m[i][j] -= step;
                    let fd = (spec.eval_w_unchecked(fp, &z) - spec.eval_w_unchecked(fm, &z))
                        / (2.0 * step);
                    let rel = (fd - g.m[i][j]).abs() / g.m[i][j].abs().max(1.0);
                    worst = worst.max(rel);
                }
            }
        }
        assert!(worst < 1e-6, "worst relative error {worst}");
    }

    #[test]
    fn z_derivative_matches_finite_differences() {
        let spec = default_spec();
        let mut rng = crate::rng(8);
        for _ in 0..50 {
            let f = random_deformation_gradient(&mut rng);
            let mut z = vec![0.0; spec.h()];
            random_phase_point(&mut rng, 1.2, &mut z);
            if z.iter().any(|v| v.abs() < 1e-3) || (1.0 - z.iter().sum::<f64>()).abs() < 1e-3 {
                continue;
            }
            let mut g = vec![0.0; spec.h()];
            spec.dw_dz(f, &z, &mut g);
            let step = 1e-6;
            for i in 0..spec.h() {
                let mut zp = z.clone();
                zp[i] += step;
                let mut zm = z.clone();
                zm[i] -= step;
                let fd = (spec.eval_w_unchecked(f, &zp) - spec.eval_w_unchecked(f, &zm))
                    / (2.0 * step);
                assert!(
                    (fd - g[i]).abs() < 1e-5 * (1.0 + g[i].abs()),
                    "{fd} vs {}",
                    g[i]
                );
            }
        }
    }

    #[test]
    fn stationarity_at_configured_minimizer() {
        // With U = I, the distortion term is stationary at conformal F,
        // so c4 = 2 mu + p * 2^(p/2 - 1) * c1 * ... reduces, for
        // p = 4, r = 2, to c4 = 2 mu + 8 c1 + 2 c2 making F = I critical.
        let mu = 2.0;
        let (c1, c2) = (0.5, 0.5);
        let params = StoredEnergyParams {
            phases: vec![PhaseElasticParams {
                mu,
                prestrain: [[1.0, 0.0], [0.0, 1.0]],
            }],
            c1,
            c2,
            c3: 0.5,
            c4: 2.0 * mu + 8.0 * c1 + 2.0 * c2,
            p: 4.0,
            r: 2.0,
            q: 2.0,
        };
        let spec = StoredEnergySpec::from_params(&params).unwrap();
        let g = spec.dw_df(Mat2::IDENTITY, &[]).unwrap();
        assert!(g.frob_sq().sqrt() < 1e-8, "gradient norm {}", g.frob_sq().sqrt());
    }

    #[test]
    fn gradient_scales_linearly_in_mu() {
        let tiny = 1e-300; // c's must be positive; make them negligible
        let mk = |mu: f64| {
            StoredEnergySpec::from_params(&StoredEnergyParams {
                phases: vec![PhaseElasticParams {
                    mu,
                    prestrain: [[1.0, 0.0], [0.0, 1.0]],
                }],
                c1: tiny,
                c2: tiny,
                c3: tiny,
                c4: 0.0,
                p: 4.0,
                r: 2.0,
                q: 2.0,
            })
            .unwrap()
        };
        let f = Mat2::new(1.3, 0.2, -0.4, 0.8);
        let g1 = mk(1.5).dw_df(f, &[]).unwrap();
        let g2 = mk(3.0).dw_df(f, &[]).unwrap();
        assert!((g2 - g1 * 2.0).frob_sq().sqrt() < 1e-12);
    }

    #[test]
    fn frame_indifference_sweep() {
        let spec = default_spec();
        assert!(spec.frame_indifference_check(1000, 42) < 1e-10);
    }

    #[test]
    fn coercivity_sweep_and_near_degenerate_states() {
        let spec = default_spec();
        let margin = spec.coercivity_check(10_000, 1.5, 43);
        assert!(margin >= 0.0, "coercivity margin {margin}");
        // Hand-picked states: the identity, and a nearly collapsed F
        // where the distortion term must carry the bound.
        let c = spec.coercivity_constant(1.5);
        for f in [Mat2::IDENTITY, Mat2::diag(1.0, 1e-6)] {
            let det = f.det();
            let fr2 = f.frob_sq();
            let rhs = c * (fr2.powf(0.5 * spec.p)
                + det.powf(spec.r)
                + fr2.powf(spec.q) / det.powf(spec.q))
                - 1.0 / c;
            assert!(spec.eval_w_unchecked(f, &[1.0]) >= rhs);
        }
    }

    #[test]
    fn mixture_weight_sum_is_at_least_one() {
        let spec = default_spec();
        let mut rng = crate::rng(44);
        let mut w = vec![0.0; spec.num_phases()];
        for _ in 0..1000 {
            let z = [rng.random_range(-5.0..5.0)];
            spec.mixture_weights(&z, &mut w);
            let s: f64 = w.iter().sum();
            assert!(s >= 1.0 - 1e-15);
            assert!(w.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn z_dependence_is_piecewise_linear() {
        // Along any z-segment within one sign pattern, W is affine.
        let spec = default_spec();
        let f = Mat2::new(1.2, 0.1, 0.0, 0.9);
        let (a, b) = (0.2, 0.7); // both z > 0 and sum < 1 throughout
        let wa = spec.eval_w_unchecked(f, &[a]);
        let wb = spec.eval_w_unchecked(f, &[b]);
        let wm = spec.eval_w_unchecked(f, &[0.5 * (a + b)]);
        assert!((wm - 0.5 * (wa + wb)).abs() < 1e-12);
        // Continuity across the kink at z = 0.
        let below = spec.eval_w_unchecked(f, &[-1e-12]);
        let above = spec.eval_w_unchecked(f, &[1e-12]);
        assert!((below - above).abs() < 1e-9);
    }

    #[test]
    fn separate_terms_are_midpoint_convex() {
        // |F|^p in F; det^r and -log det in det; |F|^(2q)/det^q in
        // (F, det) jointly.
        let spec = default_spec();
        let mut rng = crate::rng(45);
        for _ in 0..1000 {
            let f1 = random_deformation_gradient(&mut rng);
            let f2 = random_deformation_gradient(&mut rng);
            let fm = (f1 + f2) * 0.5;
            let powp = |f: Mat2| f.frob_sq().powf(0.5 * spec.p);
            assert!(powp(fm) <= 0.5 * (powp(f1) + powp(f2)) + 1e-10);

            let d1: f64 = rng.random_range(0.1..3.0);
            let d2: f64 = rng.random_range(0.1..3.0);
            let dm = 0.5 * (d1 + d2);
            assert!(dm.powf(spec.r) <= 0.5 * (d1.powf(spec.r) + d2.powf(spec.r)) + 1e-12);
            assert!(-dm.ln() <= 0.5 * (-d1.ln() - d2.ln()) + 1e-12);

            let dist = |f: Mat2, d: f64| f.frob_sq().powf(spec.q) / d.powf(spec.q);
            assert!(
                dist(fm, dm) <= 0.5 * (dist(f1, d1) + dist(f2, d2)) + 1e-8,
                "distortion term not midpoint convex"
            );
        }
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        let mut params = StoredEnergyParams::default();
        params.phases[0].prestrain = [[1.0, 0.3], [0.0, 1.0]]; // not symmetric
        assert!(StoredEnergySpec::from_params(&params).is_err());

        let mut params = StoredEnergyParams::default();
        params.c1 = 0.0;
        assert!(StoredEnergySpec::from_params(&params).is_err());

        let mut params = StoredEnergyParams::default();
        params.r = 1.0;
        assert!(StoredEnergySpec::from_params(&params).is_err());

        let mut params = StoredEnergyParams::default();
        params.phases[1].prestrain = [[1.0, 0.0], [0.0, -0.5]];
        assert!(StoredEnergySpec::from_params(&params).is_err());
    }
}
