//! Uniform Cartesian grid with an interior mask and cut-cell arms.

use std::sync::Arc;

use rayon::prelude::*;

use super::domain::LakeDomain;
use crate::error::{LakeError, Result};

/// Interior nodes keep at least `KAPPA * h / 2` from the shoreline.
pub const KAPPA: f64 = 0.2;
pub const MIN_RESOLUTION: usize = 16;
pub const MIN_INTERIOR: usize = 100;
const PAD: usize = 2;
const SUBSAMPLES: usize = 16;

/// Lattice directions in the order east, west, north, south.
pub const DIRS: [[i64; 2]; 4] = [[1, 0], [-1, 0], [0, 1], [0, -1]];
pub const EAST: usize = 0;
pub const WEST: usize = 1;
pub const NORTH: usize = 2;
pub const SOUTH: usize = 3;

#[inline]
pub fn opposite(dir: usize) -> usize {
    dir ^ 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    /// Inside the lake but too close to the shore to carry an unknown.
    Boundary,
    Exterior,
}

/// Neighbour of an interior node along one lattice direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Arm {
    /// Another interior node (by interior index) at distance `h`.
    Node(usize),
    /// The shoreline, at the given distance along the grid line.
    Shore(f64),
}

impl Arm {
    pub fn length(&self, h: f64) -> f64 {
        match *self {
            Arm::Node(_) => h,
            Arm::Shore(len) => len,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Grid {
    domain: LakeDomain,
    n: usize,
    h: f64,
    origin: [f64; 2],
    nx: usize,
    ny: usize,
    kind: Vec<NodeKind>,
    lattice_to_interior: Vec<Option<usize>>,
    interior: Vec<usize>,
    arms: Vec<[Arm; 4]>,
    weights: Vec<f64>,
    dist: Vec<f64>,
    phi: Vec<f64>,
    depth: Vec<f64>,
}

impl Grid {
    /// Lays a lattice of spacing `max(bbox extent) / n` over the domain.
    pub fn build(domain: &LakeDomain, n: usize) -> Result<Arc<Grid>> {
        if n < MIN_RESOLUTION {
            return Err(LakeError::ResolutionTooCoarse {
                interior: 0,
                required: MIN_INTERIOR,
            });
        }
        let bb = domain.bbox();
        let h = (bb[2] - bb[0]).max(bb[3] - bb[1]) / n as f64;
        let origin = [bb[0] - PAD as f64 * h, bb[1] - PAD as f64 * h];
        let nx = ((bb[2] - bb[0]) / h).ceil() as usize + 1 + 2 * PAD;
        let ny = ((bb[3] - bb[1]) / h).ceil() as usize + 1 + 2 * PAD;
        Self::build_on_lattice(domain, n, h, origin, nx, ny)
    }

    /// Builds a grid over an explicit lattice window. Mostly useful to probe
    /// regions that miss the lake.
    pub fn build_on_lattice(
        domain: &LakeDomain,
        n: usize,
        h: f64,
        origin: [f64; 2],
        nx: usize,
        ny: usize,
    ) -> Result<Arc<Grid>> {
        let pos = |k: usize| [origin[0] + (k % nx) as f64 * h, origin[1] + (k / nx) as f64 * h];
        let phi: Vec<f64> = (0..nx * ny).map(|k| domain.phi(pos(k))).collect();
        let dist: Vec<f64> = (0..nx * ny)
            .into_par_iter()
            .map(|k| domain.boundary_distance(pos(k)))
            .collect();
        let kind: Vec<NodeKind> = (0..nx * ny)
            .map(|k| {
                if phi[k] <= 0.0 {
                    NodeKind::Exterior
                } else if dist[k] < 0.5 * KAPPA * h {
                    NodeKind::Boundary
                } else {
                    NodeKind::Interior
                }
            })
            .collect();
        let interior: Vec<usize> = (0..nx * ny)
            .filter(|&k| kind[k] == NodeKind::Interior && domain.depth(pos(k)) > 0.0)
            .collect();
        if interior.len() < MIN_INTERIOR {
            return Err(LakeError::ResolutionTooCoarse {
                interior: interior.len(),
                required: MIN_INTERIOR,
            });
        }
        let mut lattice_to_interior = vec![None; nx * ny];
        for (i, &k) in interior.iter().enumerate() {
            lattice_to_interior[k] = Some(i);
        }

        let arms: Vec<[Arm; 4]> = interior
            .par_iter()
            .map(|&k| {
                let (ix, iy) = ((k % nx) as i64, (k / nx) as i64);
                let mut out = [Arm::Shore(h); 4];
                for (d, dir) in DIRS.iter().enumerate() {
                    let jx = ix + dir[0];
                    let jy = iy + dir[1];
                    let nb = if jx >= 0 && jy >= 0 && (jx as usize) < nx && (jy as usize) < ny {
                        lattice_to_interior[jy as usize * nx + jx as usize]
                    } else {
                        None
                    };
                    out[d] = match nb {
                        Some(j) => Arm::Node(j),
                        None => Arm::Shore(shore_crossing(domain, pos(k), *dir, h)),
                    };
                }
                out
            })
            .collect();

        let mut grid = Grid {
            domain: domain.clone(),
            n,
            h,
            origin,
            nx,
            ny,
            depth: interior.iter().map(|&k| domain.depth(pos(k))).collect(),
            kind,
            lattice_to_interior,
            weights: vec![h * h; interior.len()],
            interior,
            arms,
            dist,
            phi,
        };
        grid.correct_cut_cells();
        Ok(Arc::new(grid))
    }

    /// Replaces `h^2` by the exact cell area inside the lake for cells near the
    /// shoreline and hands the area of cells without an unknown to a neighbour.
    fn correct_cut_cells(&mut self) {
        let h = self.h;
        let near: Vec<usize> = (0..self.nx * self.ny)
            .filter(|&k| self.dist[k] < h)
            .collect();
        let areas: Vec<f64> = near
            .par_iter()
            .map(|&k| {
                let c = self.lattice_pos(k);
                let mut inside = 0usize;
                for a in 0..SUBSAMPLES {
                    for b in 0..SUBSAMPLES {
                        let p = [
                            c[0] + h * ((a as f64 + 0.5) / SUBSAMPLES as f64 - 0.5),
                            c[1] + h * ((b as f64 + 0.5) / SUBSAMPLES as f64 - 0.5),
                        ];
                        if self.domain.phi(p) > 0.0 {
                            inside += 1;
                        }
                    }
                }
                h * h * inside as f64 / (SUBSAMPLES * SUBSAMPLES) as f64
            })
            .collect();
        for &k in &near {
            if let Some(i) = self.lattice_to_interior[k] {
                self.weights[i] = 0.0;
            }
        }
        for (&k, &area) in near.iter().zip(&areas) {
            if area == 0.0 {
                continue;
            }
            let target = self
                .lattice_to_interior[k]
                .or_else(|| self.donation_target(k));
            if let Some(i) = target {
                self.weights[i] += area;
            }
        }
    }

    /// Interior neighbour (4-neighbours first, then diagonals) with the
    /// largest defining function.
    fn donation_target(&self, k: usize) -> Option<usize> {
        let (ix, iy) = ((k % self.nx) as i64, (k / self.nx) as i64);
        let rings: [&[[i64; 2]]; 2] = [
            &DIRS,
            &[[1, 1], [1, -1], [-1, 1], [-1, -1]],
        ];
        for ring in rings {
            let mut best: Option<(usize, f64)> = None;
            for d in ring {
                if let Some(j) = self.lattice_index(ix + d[0], iy + d[1]) {
                    if let Some(i) = self.lattice_to_interior[j] {
                        if best.is_none_or(|(_, p)| self.phi[j] > p) {
                            best = Some((i, self.phi[j]));
                        }
                    }
                }
            }
            if let Some((i, _)) = best {
                return Some(i);
            }
        }
        None
    }

    pub fn domain(&self) -> &LakeDomain {
        &self.domain
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lattice_len(&self) -> usize {
        self.nx * self.ny
    }

    /// `[xmin, ymin, xmax, ymax]` of the lattice.
    pub fn lattice_bbox(&self) -> [f64; 4] {
        [
            self.origin[0],
            self.origin[1],
            self.origin[0] + (self.nx - 1) as f64 * self.h,
            self.origin[1] + (self.ny - 1) as f64 * self.h,
        ]
    }

    #[inline]
    pub fn lattice_index(&self, ix: i64, iy: i64) -> Option<usize> {
        if ix < 0 || iy < 0 || ix as usize >= self.nx || iy as usize >= self.ny {
            None
        } else {
            Some(iy as usize * self.nx + ix as usize)
        }
    }

    #[inline]
    pub fn lattice_pos(&self, k: usize) -> [f64; 2] {
        [
            self.origin[0] + (k % self.nx) as f64 * self.h,
            self.origin[1] + (k / self.nx) as f64 * self.h,
        ]
    }

    pub fn kind(&self, k: usize) -> NodeKind {
        self.kind[k]
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kind
    }

    pub fn interior_count(&self) -> usize {
        self.interior.len()
    }

    /// Lattice indices of interior nodes, in interior order.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    #[inline]
    pub fn interior_index(&self, k: usize) -> Option<usize> {
        self.lattice_to_interior[k]
    }

    /// Interior index at lattice coordinates, if any.
    #[inline]
    pub fn interior_at(&self, ix: i64, iy: i64) -> Option<usize> {
        self.lattice_index(ix, iy).and_then(|k| self.lattice_to_interior[k])
    }

    #[inline]
    pub fn coords(&self, i: usize) -> (i64, i64) {
        let k = self.interior[i];
        ((k % self.nx) as i64, (k / self.nx) as i64)
    }

    #[inline]
    pub fn node_pos(&self, i: usize) -> [f64; 2] {
        self.lattice_pos(self.interior[i])
    }

    pub fn arms(&self, i: usize) -> &[Arm; 4] {
        &self.arms[i]
    }

    pub fn all_arms(&self) -> &[[Arm; 4]] {
        &self.arms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Depth at interior nodes.
    pub fn depths(&self) -> &[f64] {
        &self.depth
    }

    pub fn depth(&self, i: usize) -> f64 {
        self.depth[i]
    }

    pub fn phi(&self, i: usize) -> f64 {
        self.phi[self.interior[i]]
    }

    /// Distance to the shoreline at an interior node.
    pub fn boundary_distance(&self, i: usize) -> f64 {
        self.dist[self.interior[i]]
    }

    pub fn lattice_boundary_distance(&self, k: usize) -> f64 {
        self.dist[k]
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Lattice cell `(cx, cy)` with lower-left corner node containing `x`, and
    /// the local coordinates in `[0, 1)^2`.
    #[inline]
    pub fn locate(&self, x: [f64; 2]) -> (i64, i64, f64, f64) {
        // points within roundoff of a lattice line snap onto it
        let snap = |s: f64| if (s - s.round()).abs() < 1e-10 { s.round() } else { s };
        let sx = snap((x[0] - self.origin[0]) / self.h);
        let sy = snap((x[1] - self.origin[1]) / self.h);
        let cx = sx.floor();
        let cy = sy.floor();
        (cx as i64, cy as i64, sx - cx, sy - cy)
    }

    /// Whether two grids describe the same discretization.
    pub fn same_as(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other)
            || (self.h == other.h
                && self.origin == other.origin
                && self.nx == other.nx
                && self.ny == other.ny
                && self.interior == other.interior
                && self.domain.bathymetry() == other.domain.bathymetry())
    }
}

/// Distance from `x` to the shoreline along the lattice direction `dir`.
/// Lines that graze the shore without crossing within `2h` are cut at `2h`.
fn shore_crossing(domain: &LakeDomain, x: [f64; 2], dir: [i64; 2], h: f64) -> f64 {
    let at = |s: f64| domain.phi([x[0] + s * dir[0] as f64, x[1] + s * dir[1] as f64]);
    let step = h / 8.0;
    let mut lo = 0.0;
    let mut hi = None;
    for m in 1..=16 {
        let s = m as f64 * step;
        if at(s) <= 0.0 {
            hi = Some(s);
            break;
        }
        lo = s;
    }
    let Some(mut hi) = hi else {
        return 2.0 * h;
    };
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if at(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * h.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}
