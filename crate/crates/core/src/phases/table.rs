//! Tabulated geodesic distance-to-well fields.
//!
//! For each well `p_alpha` we store `phi_alpha(z) = d_Phi(p_alpha, z)` on
//! the phase lattice (one Dijkstra sweep per well) and interpolate
//! multilinearly. The fields are 1-Lipschitz with respect to the metric
//! `sqrt(2 Phi) |dz|` up to lattice metrication error; consumers that
//! need the exact eikonal bound use [`WellDistanceField::gradient_clamped`].

use super::lattice::PhaseLattice;
use super::potential::Potential;

#[derive(Debug, Clone)]
pub struct WellDistanceField {
    /// Index of the source well in the system's well list.
    pub well: usize,
    lat: PhaseLattice,
    values: Vec<f64>,
}

impl WellDistanceField {
    pub fn new(well: usize, lat: PhaseLattice, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), lat.len());
        WellDistanceField { well, lat, values }
    }

    fn clamp_to_box(&self, z: &[f64], out: &mut [f64; 3]) {
        let r = self.lat.radius();
        for a in 0..self.lat.dim() {
            out[a] = z[a].clamp(-r, r);
        }
    }

    /// Base cell and interpolation weights for a point.
    fn locate(&self, z: &[f64; 3]) -> ([usize; 3], [f64; 3]) {
        let n = self.lat.points_per_axis();
        let sp = self.lat.spacing();
        let r = self.lat.radius();
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..self.lat.dim() {
            let t = (z[a] + r) / sp;
            let i = (t.floor() as isize).clamp(0, n as isize - 2) as usize;
            base[a] = i;
            frac[a] = (t - i as f64).clamp(0.0, 1.0);
        }
        (base, frac)
    }

    fn sample(&self, values: &[f64], base: [usize; 3], frac: [f64; 3]) -> f64 {
        let h = self.lat.dim();
        let mut acc = 0.0;
        for corner in 0..(1usize << h) {
            let mut ix = base;
            let mut w = 1.0;
            for a in 0..h {
                if corner >> a & 1 == 1 {
                    ix[a] += 1;
                    w *= frac[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            acc += w * values[self.lat.index(ix)];
        }
        acc
    }

    /// Interpolated `phi_alpha(z)`; coordinates are clamped to the box.
    pub fn value(&self, z: &[f64]) -> f64 {
        let mut zz = [0.0; 3];
        self.clamp_to_box(z, &mut zz);
        let (base, frac) = self.locate(&zz);
        self.sample(&self.values, base, frac)
    }

    /// Central-difference nodal gradient, interpolated at `z`.
    pub fn gradient(&self, z: &[f64], out: &mut [f64]) {
        let h = self.lat.dim();
        let n = self.lat.points_per_axis();
        let sp = self.lat.spacing();
        let mut zz = [0.0; 3];
        self.clamp_to_box(z, &mut zz);
        let (base, frac) = self.locate(&zz);
        for axis in 0..h {
            let mut acc = 0.0;
            for corner in 0..(1usize << h) {
                let mut ix = base;
                let mut w = 1.0;
                for a in 0..h {
                    if corner >> a & 1 == 1 {
                        ix[a] += 1;
                        w *= frac[a];
                    } else {
                        w *= 1.0 - frac[a];
                    }
                }
                // One-sided at the box faces, central inside.
                let i = ix[axis];
                let (lo, hi, denom) = if i == 0 {
                    (0, 1, sp)
                } else if i == n - 1 {
                    (n - 2, n - 1, sp)
                } else {
                    (i - 1, i + 1, 2.0 * sp)
                };
                let mut ix_lo = ix;
                ix_lo[axis] = lo;
                let mut ix_hi = ix;
                ix_hi[axis] = hi;
                let slope =
                    (self.values[self.lat.index(ix_hi)] - self.values[self.lat.index(ix_lo)]) / denom;
                acc += w * slope;
            }
            out[axis] = acc;
        }
    }

    /// Gradient rescaled, if necessary, onto the eikonal bound
    /// `|grad phi_alpha| <= sqrt(2 Phi)`, which the exact distance field
    /// satisfies but the tabulated one can exceed by metrication error.
    pub fn gradient_clamped(&self, pot: &Potential, z: &[f64], out: &mut [f64]) {
        self.gradient(z, out);
        let bound = pot.metric_weight(z);
        let norm = out.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm > bound && norm > 0.0 {
            let s = bound / norm;
            for g in out.iter_mut() {
                *g *= s;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::dijkstra::single_source;
    use super::*;

    fn field_1d() -> (Potential, WellDistanceField) {
        let pot = Potential::DoubleWell {
            a: -1.0,
            b: 1.0,
            scale: 1.0,
        };
        let lat = PhaseLattice::new(1, 401, 2.0).unwrap();
        let src = lat.nearest(&[-1.0]);
        let values = single_source(&lat, &pot, src);
        (pot.clone(), WellDistanceField::new(0, lat, values))
    }

    #[test]
    fn interpolation_matches_quadrature() {
        let (_, field) = field_1d();
        // phi_1(0) = int_{-1}^{0} sqrt(2)(1 - z^2) dz = 2 sqrt(2) / 3
        let exact = 2.0 * std::f64::consts::SQRT_2 / 3.0;
        assert!((field.value(&[0.0]) - exact).abs() < 1e-3);
        assert_eq!(field.value(&[-1.0]), 0.0);
    }

    #[test]
    fn gradient_respects_eikonal_bound_after_clamp() {
        let (pot, field) = field_1d();
        let mut g = [0.0];
        for k in 0..200 {
            let z = [-1.9 + 3.8 * k as f64 / 199.0];
            field.gradient_clamped(&pot, &z, &mut g);
            assert!(g[0].abs() <= pot.metric_weight(&z) + 1e-14);
        }
    }
}
