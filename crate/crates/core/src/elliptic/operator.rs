//! Symmetric cut-cell discretization of `div((1/b) grad psi)` with `psi = 0`
//! on the shoreline, and a Jacobi-preconditioned conjugate gradient solver.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{LakeError, Result};
use crate::geometry::grid::{Arm, Grid, DIRS};

/// Depth at the midpoint of arm `d` of interior node `i`.
pub fn face_depth(grid: &Grid, i: usize, d: usize) -> f64 {
    let x = grid.node_pos(i);
    match grid.arms(i)[d] {
        // symmetric in (i, j) so both rows see the same coefficient
        Arm::Node(j) => {
            let y = grid.node_pos(j);
            grid.domain()
                .depth([0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])])
        }
        Arm::Shore(len) => {
            let dir = DIRS[d];
            grid.domain()
                .depth([x[0] + 0.5 * len * dir[0] as f64, x[1] + 0.5 * len * dir[1] as f64])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final `||L psi - f|| / ||f||` in the grid L2 norm.
    pub relative_residual: f64,
}

/// The negated operator `A = -L`, which is symmetric positive definite.
#[derive(Debug, Clone)]
pub struct EllipticOperator {
    grid: Arc<Grid>,
    /// `k_d / (h h_d)` per arm.
    coeff: Vec<[f64; 4]>,
    diag: Vec<f64>,
}

impl EllipticOperator {
    pub fn new(grid: &Arc<Grid>) -> Result<Self> {
        let h = grid.h();
        let mut coeff = Vec::with_capacity(grid.interior_count());
        for i in 0..grid.interior_count() {
            let mut c = [0.0; 4];
            for (d, arm) in grid.arms(i).iter().enumerate() {
                let b = face_depth(grid, i, d);
                if !(b > 0.0) {
                    let x = grid.node_pos(i);
                    return Err(LakeError::SingularCoefficient {
                        x: x[0],
                        y: x[1],
                        value: b,
                    });
                }
                c[d] = 1.0 / (b * h * arm.length(h));
            }
            coeff.push(c);
        }
        let diag = coeff.iter().map(|c| c.iter().sum()).collect();
        Ok(EllipticOperator {
            grid: grid.clone(),
            coeff,
            diag,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `k_d / (h h_d)` for the four arms of node `i`.
    pub fn coefficients(&self, i: usize) -> &[f64; 4] {
        &self.coeff[i]
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// `out = -L psi`.
    pub fn apply_neg(&self, psi: &[f64], out: &mut [f64]) {
        let grid = &self.grid;
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let mut acc = self.diag[i] * psi[i];
            for (d, arm) in grid.arms(i).iter().enumerate() {
                if let Arm::Node(j) = *arm {
                    acc -= self.coeff[i][d] * psi[j];
                }
            }
            *o = acc;
        });
    }

    /// `L psi`.
    pub fn apply(&self, psi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; psi.len()];
        self.apply_neg(psi, &mut out);
        out.iter_mut().for_each(|v| *v = -*v);
        out
    }

    /// Solves `L psi = f` to relative grid-L2 residual `tol`, optionally from a
    /// starting guess.
    pub fn solve(&self, f: &[f64], tol: f64, guess: Option<&[f64]>) -> Result<(Vec<f64>, SolveStats)> {
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        pcg(
            |p, out| self.apply_neg(p, out),
            &self.diag,
            &rhs,
            self.grid.weights(),
            tol,
            guess,
            50 * self.grid.resolution(),
        )
    }
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive definite
/// `apply`. The residual is measured in the `weights`-weighted L2 norm.
pub fn pcg(
    apply: impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    rhs: &[f64],
    weights: &[f64],
    tol: f64,
    guess: Option<&[f64]>,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    let wnorm = |v: &[f64]| -> f64 {
        v.iter().zip(weights).map(|(a, w)| a * a * w).sum::<f64>().sqrt()
    };
    let fnorm = wnorm(rhs);
    let n = rhs.len();
    if fnorm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveStats {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let mut x = guess.map_or_else(|| vec![0.0; n], |g| g.to_vec());
    let mut r = vec![0.0; n];
    apply(&x, &mut r);
    for (ri, bi) in r.iter_mut().zip(rhs) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = wnorm(&r) / fnorm;
    let mut it = 0;
    while rel > tol {
        if it >= max_iter {
            return Err(LakeError::SolverDiverged {
                iterations: it,
                residual: rel,
                target: tol,
            });
        }
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
            z[k] = r[k] / diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
        rel = wnorm(&r) / fnorm;
        it += 1;
        if !rel.is_finite() {
            return Err(LakeError::SolverDiverged {
                iterations: it,
                residual: rel,
                target: tol,
            });
        }
    }
    Ok((
        x,
        SolveStats {
            iterations: it,
            relative_residual: rel,
        },
    ))
}

/// Sequential dot product, so results do not depend on the thread count.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
