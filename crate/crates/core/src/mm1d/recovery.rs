//! Recovery fields: compose a sharp partition with a 1-D transition
//! profile across its deformed interfaces.
//!
//! Every reference cell edge separating two labels is mapped through
//! the nodal deformation into a segment in the deformed configuration.
//! Each node takes the profile value of the pair owning the nearest
//! mapped segment, evaluated at its signed deformed distance (negative
//! on the lower-label side), and clamped to an exact well value beyond
//! five thicknesses. For affine deformations the distance to the
//! mapped interface is exact.

use rayon::prelude::*;

use crate::fields::{DeformationField, PhaseField};
use crate::interfacial::PhasePartition;
use crate::math::Vec2;
use crate::mm1d::profile::{optimal_profile, profile_sample_count, Profile1D};
use crate::params;
use crate::phases::PhaseSystem;

/// A deformed interface segment between two labels.
struct MappedEdge {
    a: Vec2,
    b: Vec2,
    /// Label pair, `lo < hi`.
    lo: usize,
    hi: usize,
}

fn point_segment_distance_sq(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len_sq = ab.dot(ab);
    let t = if len_sq > 0.0 {
        ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let c = a + ab * t;
    (p - c).dot(p - c)
}

fn mapped_interface_edges(def: &DeformationField, part: &PhasePartition) -> Vec<MappedEdge> {
    let g = &def.grid;
    let mut edges = Vec::new();
    let mut push = |n1: usize, n2: usize, la: usize, lb: usize| {
        let (lo, hi) = if la < lb { (la, lb) } else { (lb, la) };
        edges.push(MappedEdge {
            a: def.values[n1],
            b: def.values[n2],
            lo,
            hi,
        });
    };
    for j in 0..g.ny {
        for i in 0..g.nx - 1 {
            let (la, lb) = (part.label(i, j), part.label(i + 1, j));
            if la != lb {
                push(g.node_index(i + 1, j), g.node_index(i + 1, j + 1), la, lb);
            }
        }
    }
    for j in 0..g.ny - 1 {
        for i in 0..g.nx {
            let (la, lb) = (part.label(i, j), part.label(i, j + 1));
            if la != lb {
                push(g.node_index(i, j + 1), g.node_index(i + 1, j + 1), la, lb);
            }
        }
    }
    edges
}

/// Label owning a node: the label its adjacent cells agree on most
/// (ties broken toward the lowest cell index).
fn node_label(part: &PhasePartition, i: usize, j: usize) -> usize {
    let g = &part.grid;
    let mut counts: Vec<(usize, usize)> = Vec::with_capacity(4);
    for (ci, cj) in [
        (i.wrapping_sub(1), j.wrapping_sub(1)),
        (i, j.wrapping_sub(1)),
        (i.wrapping_sub(1), j),
        (i, j),
    ] {
        if ci < g.nx && cj < g.ny {
            let l = part.label(ci, cj);
            match counts.iter_mut().find(|(ll, _)| *ll == l) {
                Some((_, c)) => *c += 1,
                None => counts.push((l, 1)),
            }
        }
    }
    counts
        .iter()
        .max_by_key(|&&(l, c)| (c, usize::MAX - l))
        .map(|&(l, _)| l)
        .unwrap()
}

/// Build the recovery phase field for a partition at thickness
/// `epsilon`.
pub fn recovery_sequence_2d(
    def: &DeformationField,
    part: &PhasePartition,
    epsilon: f64,
    sys: &PhaseSystem,
) -> PhaseField {
    assert_eq!(def.grid, part.grid, "fields live on different grids");
    assert!(epsilon > 0.0);
    let grid = def.grid;
    let h = sys.h();
    let wells = sys.wells();
    let edges = mapped_interface_edges(def, part);

    // One profile per label pair that actually meets.
    let mut pairs: Vec<(usize, usize)> = edges.iter().map(|e| (e.lo, e.hi)).collect();
    pairs.sort_unstable();
    pairs.dedup();
    let half_width = 10.0 * epsilon;
    let profiles: Vec<((usize, usize), Profile1D)> = pairs
        .iter()
        .map(|&(lo, hi)| {
            let n = profile_sample_count(epsilon, half_width);
            let p = optimal_profile(sys, lo, hi, epsilon, half_width, n)
                .expect("distinct wells in range");
            ((lo, hi), p)
        })
        .collect();

    let values: Vec<f64> = (0..grid.num_nodes())
        .into_par_iter()
        .flat_map_iter(|idx| {
            let j = idx / (grid.nx + 1);
            let i = idx % (grid.nx + 1);
            let own = node_label(part, i, j);
            let mut out = vec![0.0; h];
            if edges.is_empty() {
                out.copy_from_slice(&wells[own]);
                return out.into_iter();
            }
            let y = def.values[idx];
            let mut best = f64::INFINITY;
            let mut pair = (0, 0);
            for e in &edges {
                let d = point_segment_distance_sq(y, e.a, e.b);
                if d < best {
                    best = d;
                    pair = (e.lo, e.hi);
                }
            }
            let dist = best.sqrt();
            if dist > params::RECOVERY_CLAMP_WIDTHS * epsilon {
                out.copy_from_slice(&wells[own]);
                return out.into_iter();
            }
            // Signed: negative on the low-label side of the pair.
            let signed = if own == pair.0 { -dist } else { dist };
            let profile = &profiles
                .iter()
                .find(|(p, _)| *p == pair)
                .expect("profile built for every pair")
                .1;
            profile.sample_at(signed, &mut out);
            if own != pair.0 && own != pair.1 {
                // Node closer to a foreign interface than to its own:
                // keep its own phase instead of a mismatched profile.
                out.copy_from_slice(&wells[own]);
            }
            out.into_iter()
        })
        .collect();

    PhaseField { grid, h, values }
}

/// Masses of a sharp partition: component `a` sums the well coordinate
/// `wells[label]_a` weighted by the deformed cell volume.
pub fn partition_mass(def: &DeformationField, part: &PhasePartition, sys: &PhaseSystem) -> Vec<f64> {
    let grid = def.grid;
    let h = sys.h();
    let wells = sys.wells();
    let area = grid.cell_area();
    let mut mass = vec![0.0; h];
    for c in 0..grid.num_cells() {
        let (i, j) = grid.cell_coords(c);
        let det = def.cell_gradient(i, j).det();
        for a in 0..h {
            mass[a] += wells[part.labels[c]][a] * det * area;
        }
    }
    mass
}
