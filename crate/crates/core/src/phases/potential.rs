//! Multi-well potential families on the phase space.
//!
//! A potential vanishes exactly on a finite set of wells and is strictly
//! positive elsewhere. All families have analytic gradients; the geodesic
//! refinement and the phase-block descent both depend on that.

use serde::{Deserialize, Serialize};

fn default_neg_one() -> f64 {
    -1.0
}

fn default_one() -> f64 {
    1.0
}

/// A multi-well potential `Phi: R^h -> [0, inf)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", deny_unknown_fields)]
pub enum Potential {
    /// Scalar double well `scale * (z - a)^2 (z - b)^2` with wells `a < b`.
    #[serde(rename = "double-well")]
    DoubleWell {
        #[serde(default = "default_neg_one")]
        a: f64,
        #[serde(default = "default_one")]
        b: f64,
        #[serde(default = "default_one")]
        scale: f64,
    },
    /// Product of squared distances to the listed wells,
    /// `prod_alpha |z - p_alpha|^2`.
    #[serde(rename = "product-of-squared-distances")]
    ProductWells { wells: Vec<Vec<f64>> },
    /// Product-of-squared-distances times a quadratic bump
    /// `1 + amplitude * |z - center|^2`, which breaks the symmetry of the
    /// plain product family without moving its zero set.
    #[serde(rename = "perturbed-quadratic-wells")]
    PerturbedWells {
        wells: Vec<Vec<f64>>,
        amplitude: f64,
        center: Vec<f64>,
    },
}

impl Potential {
    /// The scalar double well `(z^2 - 1)^2` with wells at -1 and 1.
    pub fn default_double_well() -> Self {
        Potential::DoubleWell {
            a: -1.0,
            b: 1.0,
            scale: 1.0,
        }
    }

    pub fn product_wells(wells: Vec<Vec<f64>>) -> Self {
        Potential::ProductWells { wells }
    }

    /// Phase-space dimension `h`.
    pub fn dim(&self) -> usize {
        match self {
            Potential::DoubleWell { .. } => 1,
            Potential::ProductWells { wells } | Potential::PerturbedWells { wells, .. } => {
                wells.first().map_or(0, |w| w.len())
            }
        }
    }

    /// The wells, each a point in `R^h`, in declaration order.
    pub fn wells(&self) -> Vec<Vec<f64>> {
        match self {
            Potential::DoubleWell { a, b, .. } => vec![vec![*a], vec![*b]],
            Potential::ProductWells { wells } | Potential::PerturbedWells { wells, .. } => {
                wells.clone()
            }
        }
    }

    /// Evaluate `Phi(z)`. `z` must have length `dim()`.
    pub fn eval(&self, z: &[f64]) -> f64 {
        match self {
            Potential::DoubleWell { a, b, scale } => {
                let t = z[0];
                scale * (t - a).powi(2) * (t - b).powi(2)
            }
            Potential::ProductWells { wells } => product_of_sq_dists(wells, z),
            Potential::PerturbedWells {
                wells,
                amplitude,
                center,
            } => product_of_sq_dists(wells, z) * bump(*amplitude, center, z),
        }
    }

    /// Analytic gradient of `Phi` at `z`, written into `out`.
    pub fn gradient(&self, z: &[f64], out: &mut [f64]) {
        match self {
            Potential::DoubleWell { a, b, scale } => {
                let t = z[0];
                out[0] = scale * 2.0 * (t - a) * (t - b) * ((t - b) + (t - a));
            }
            Potential::ProductWells { wells } => {
                product_gradient(wells, z, out);
            }
            Potential::PerturbedWells {
                wells,
                amplitude,
                center,
            } => {
                // (prod)' * bump + prod * bump'
                product_gradient(wells, z, out);
                let f = bump(*amplitude, center, z);
                let p = product_of_sq_dists(wells, z);
                for i in 0..z.len() {
                    out[i] = out[i] * f + p * 2.0 * amplitude * (z[i] - center[i]);
                }
            }
        }
    }

    /// Metric weight `sqrt(2 Phi(z))` used by the geodesic line integral.
    pub fn metric_weight(&self, z: &[f64]) -> f64 {
        (2.0 * self.eval(z)).sqrt()
    }
}

fn bump(amplitude: f64, center: &[f64], z: &[f64]) -> f64 {
    let mut d2 = 0.0;
    for i in 0..z.len() {
        let d = z[i] - center[i];
        d2 += d * d;
    }
    1.0 + amplitude * d2
}

fn product_of_sq_dists(wells: &[Vec<f64>], z: &[f64]) -> f64 {
    let mut prod = 1.0;
    for w in wells {
        let mut d2 = 0.0;
        for i in 0..z.len() {
            let d = z[i] - w[i];
            d2 += d * d;
        }
        prod *= d2;
    }
    prod
}

/// Gradient of the product of squared distances via prefix/suffix
/// products, so wells (where one factor vanishes) stay exact.
fn product_gradient(wells: &[Vec<f64>], z: &[f64], out: &mut [f64]) {
    let m = wells.len();
    let h = z.len();
    let mut q = vec![0.0; m];
    for (alpha, w) in wells.iter().enumerate() {
        let mut d2 = 0.0;
        for i in 0..h {
            let d = z[i] - w[i];
            d2 += d * d;
        }
        q[alpha] = d2;
    }
    let mut pref = vec![1.0; m + 1];
    for alpha in 0..m {
        pref[alpha + 1] = pref[alpha] * q[alpha];
    }
    let mut suf = vec![1.0; m + 1];
    for alpha in (0..m).rev() {
        suf[alpha] = suf[alpha + 1] * q[alpha];
    }
    out.fill(0.0);
    for (alpha, w) in wells.iter().enumerate() {
        let rest = pref[alpha] * suf[alpha + 1];
        for i in 0..h {
            out[i] += rest * 2.0 * (z[i] - w[i]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_gradient(pot: &Potential, z: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        let mut g = vec![0.0; z.len()];
        let mut zp = z.to_vec();
        for i in 0..z.len() {
            zp[i] = z[i] + h;
            let fp = pot.eval(&zp);
            zp[i] = z[i] - h;
            let fm = pot.eval(&zp);
            zp[i] = z[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
        g
    }

    #[test]
    fn double_well_values() {
        let pot = Potential::DoubleWell {
            a: -1.0,
            b: 1.0,
            scale: 1.0,
        };
        assert_eq!(pot.eval(&[-1.0]), 0.0);
        assert_eq!(pot.eval(&[1.0]), 0.0);
        assert_eq!(pot.eval(&[0.0]), 1.0);
        // (1 - z^2)^2 at z = 0.5
        assert!((pot.eval(&[0.5]) - 0.5625).abs() < 1e-15);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let pots = [
            Potential::DoubleWell {
                a: -1.0,
                b: 1.0,
                scale: 1.3,
            },
            Potential::ProductWells {
                wells: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            },
            Potential::PerturbedWells {
                wells: vec![vec![0.0], vec![1.0]],
                amplitude: 2.0,
                center: vec![-0.5],
            },
        ];
        let points: [&[f64]; 3] = [&[0.3, -0.4], &[0.9, 0.1], &[-0.2, 0.7]];
        for pot in &pots {
            let h = pot.dim();
            for pt in &points {
                let z = &pt[..h];
                let mut g = vec![0.0; h];
                pot.gradient(z, &mut g);
                let fd = fd_gradient(pot, z);
                for i in 0..h {
                    assert!(
                        (g[i] - fd[i]).abs() < 1e-6 * (1.0 + fd[i].abs()),
                        "{:?} at {:?}: {} vs {}",
                        pot,
                        z,
                        g[i],
                        fd[i]
                    );
                }
            }
        }
    }

    #[test]
    fn wells_are_exact_zeros() {
        let pot = Potential::PerturbedWells {
            wells: vec![vec![0.25, -0.75], vec![0.5, 0.5]],
            amplitude: 1.0,
            center: vec![0.0, 0.0],
        };
        for w in pot.wells() {
            assert_eq!(pot.eval(&w), 0.0);
            let mut g = vec![0.0; 2];
            pot.gradient(&w, &mut g);
            assert_eq!(g, vec![0.0, 0.0]);
        }
    }

    #[test]
    fn perturbation_keeps_positivity() {
        let pot = Potential::PerturbedWells {
            wells: vec![vec![0.0], vec![1.0]],
            amplitude: 3.0,
            center: vec![-0.5],
        };
        for k in 0..100 {
            let z = -2.0 + 4.0 * (k as f64) / 99.0;
            let away = (z - 0.0).abs().min((z - 1.0).abs());
            if away > 1e-3 {
                assert!(pot.eval(&[z]) > 0.0);
            }
        }
    }
}
