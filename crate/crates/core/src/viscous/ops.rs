//! Discrete operators of the viscous scheme, all acting on interior stream
//! function values.
//!
//! Velocities live on grid arms: the slope of `psi` along an arm divided by
//! the depth at the arm midpoint is the velocity component normal to the arm.
//! With the arm mass `h h_e b_e` this reproduces the stream operator exactly,
//! `||u||^2_{L2_b} = h^2 psi^T (-L) psi`.

use std::sync::Arc;

use super::sparse::Csr;
use crate::elliptic::operator::{dot, face_depth, pcg, SolveStats};
use crate::elliptic::stream::StreamSolver;
use crate::error::{LakeError, Result};
use crate::geometry::field::{check_same, ScalarField, VectorField};
use crate::geometry::grid::{Arm, Grid, DIRS, EAST, NORTH, SOUTH, WEST};

/// Arm slope over depth as `(column, coefficient)` pairs.
fn arm_velocity(grid: &Grid, i: usize, d: usize) -> Vec<(usize, f64)> {
    let h = grid.h();
    let arm = grid.arms(i)[d];
    let c = 1.0 / (arm.length(h) * face_depth(grid, i, d));
    match arm {
        Arm::Node(j) => vec![(j, c), (i, -c)],
        Arm::Shore(_) => vec![(i, -c)],
    }
}

fn combine(parts: &[(f64, &[(usize, f64)])]) -> Vec<(usize, f64)> {
    parts
        .iter()
        .flat_map(|(s, row)| row.iter().map(move |&(c, v)| (c, s * v)))
        .collect()
}

/// Nodal velocity rows `(u_x, u_y)` matching `velocity_from_stream`.
fn velocity_rows(grid: &Grid) -> Vec<Vec<(usize, f64)>> {
    let h = grid.h();
    let axis = |i: usize, plus: usize, minus: usize| -> Vec<(usize, f64)> {
        let arms = grid.arms(i);
        let (hp, hm) = (arms[plus].length(h), arms[minus].length(h));
        let mut row = vec![(i, (hp / hm - hm / hp) / (hp + hm))];
        if let Arm::Node(j) = arms[plus] {
            row.push((j, hm / (hp * (hp + hm))));
        }
        if let Arm::Node(j) = arms[minus] {
            row.push((j, -hp / (hm * (hp + hm))));
        }
        row
    };
    let mut rows = Vec::with_capacity(2 * grid.interior_count());
    for i in 0..grid.interior_count() {
        let b = grid.depth(i);
        let dy: Vec<_> = axis(i, NORTH, SOUTH).into_iter().map(|(c, v)| (c, -v / b)).collect();
        let dx: Vec<_> = axis(i, EAST, WEST).into_iter().map(|(c, v)| (c, v / b)).collect();
        rows.push(dy);
        rows.push(dx);
    }
    rows
}

#[derive(Debug, Clone)]
pub struct ViscousOps {
    solver: StreamSolver,
    velocity: Csr,
    strain: Csr,
    strain_w: Vec<f64>,
    div: Csr,
    div_w: Vec<f64>,
    shore: Csr,
    shore_w: Vec<f64>,
    strain_gram: Csr,
    div_gram: Csr,
    shore_gram: Csr,
}

impl ViscousOps {
    /// Rejects bathymetries outside the viscous range `alpha < 1/2`.
    pub fn new(grid: &Arc<Grid>) -> Result<Self> {
        grid.domain().bathymetry().validate_viscous()?;
        let solver = StreamSolver::new(grid)?;
        let n = grid.interior_count();
        let h = grid.h();
        let dom = grid.domain();

        let velocity = Csr::from_rows(n, &velocity_rows(grid));

        // normal strains on full lattice cells; i is the south-west corner.
        // Each node's control volume is shared among its adjacent full cells,
        // so cut cells at the shore are carried by their inside neighbours.
        let mut cells = Vec::new();
        let mut cells_at = vec![0usize; n];
        for i in 0..n {
            let (ix, iy) = grid.coords(i);
            let corner = |dx, dy| grid.interior_at(ix + dx, iy + dy);
            let (Some(se), Some(nw), Some(ne)) = (corner(1, 0), corner(0, 1), corner(1, 1)) else {
                continue;
            };
            let linked = grid.arms(i)[EAST] == Arm::Node(se)
                && grid.arms(i)[NORTH] == Arm::Node(nw)
                && grid.arms(se)[NORTH] == Arm::Node(ne)
                && grid.arms(nw)[EAST] == Arm::Node(ne);
            if linked {
                for c in [i, se, nw, ne] {
                    cells_at[c] += 1;
                }
                cells.push([i, se, nw, ne]);
            }
        }
        let mut strain_rows = Vec::new();
        let mut strain_w = Vec::new();
        let mut div_rows = Vec::new();
        let mut div_w = Vec::new();
        for &[i, se, nw, ne] in &cells {
            let w: f64 = [i, se, nw, ne]
                .iter()
                .map(|&c| grid.weight(c) * grid.depth(c) / cells_at[c] as f64)
                .sum();
            // u_x = -v on vertical arms, u_y = v on horizontal arms
            let d11 = combine(&[
                (1.0 / h, &arm_velocity(grid, i, NORTH)),
                (-1.0 / h, &arm_velocity(grid, se, NORTH)),
            ]);
            let d22 = combine(&[
                (1.0 / h, &arm_velocity(grid, nw, EAST)),
                (-1.0 / h, &arm_velocity(grid, i, EAST)),
            ]);
            div_rows.push(combine(&[(1.0, &d11), (1.0, &d22)]));
            div_w.push(w);
            strain_rows.push(d11);
            strain_rows.push(d22);
            strain_w.extend([w, w]);
        }
        // shear at every node from its four arms
        for i in 0..n {
            let arms = grid.arms(i);
            let len = |d: usize| arms[d].length(h);
            let sx = 2.0 / (len(EAST) + len(WEST));
            let sy = 2.0 / (len(NORTH) + len(SOUTH));
            let d12 = combine(&[
                (0.5 * sx, &arm_velocity(grid, i, EAST)),
                (0.5 * sx, &arm_velocity(grid, i, WEST)),
                (-0.5 * sy, &arm_velocity(grid, i, NORTH)),
                (-0.5 * sy, &arm_velocity(grid, i, SOUTH)),
            ]);
            strain_rows.push(d12);
            strain_w.push(2.0 * grid.weight(i) * grid.depth(i));
        }

        // shoreline quadrature: a crossing of a lattice line stands for
        // h / (|n_x| + |n_y|) of arc length
        let mut shore_rows = Vec::new();
        let mut shore_w = Vec::new();
        let bs = dom.shore_depth();
        if bs > 0.0 {
            for i in 0..n {
                let x = grid.node_pos(i);
                let mut ds = 0.0;
                for (d, arm) in grid.arms(i).iter().enumerate() {
                    if let Arm::Shore(l) = *arm {
                        let p = [x[0] + l * DIRS[d][0] as f64, x[1] + l * DIRS[d][1] as f64];
                        let g = dom.grad_phi(p);
                        let gn = g[0].hypot(g[1]);
                        ds += h * gn / (g[0].abs() + g[1].abs());
                    }
                }
                if ds > 0.0 {
                    for c in 0..2 {
                        shore_rows.push(velocity.row(2 * i + c).collect::<Vec<_>>());
                        shore_w.push(ds * bs);
                    }
                }
            }
        }

        let strain = Csr::from_rows(n, &strain_rows);
        let div = Csr::from_rows(n, &div_rows);
        let shore = Csr::from_rows(n, &shore_rows);
        Ok(ViscousOps {
            strain_gram: strain.gram(&strain_w),
            div_gram: div.gram(&div_w),
            shore_gram: shore.gram(&shore_w),
            solver,
            velocity,
            strain,
            strain_w,
            div,
            div_w,
            shore,
            shore_w,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.solver.grid()
    }

    pub fn solver(&self) -> &StreamSolver {
        &self.solver
    }

    pub fn len(&self) -> usize {
        self.grid().interior_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `h^2 (-L) psi`, the mass matrix applied to a stream function.
    pub fn apply_mass(&self, psi: &[f64], out: &mut [f64]) {
        let h2 = self.grid().h().powi(2);
        self.solver.operator().apply_neg(psi, out);
        out.iter_mut().for_each(|v| *v *= h2);
    }

    /// `<u_a, u_b>_{L2_b}` of the velocities of two stream functions.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut m = vec![0.0; a.len()];
        self.apply_mass(b, &mut m);
        dot(a, &m)
    }

    /// `||u||^2_{L2_b}`.
    pub fn mass(&self, psi: &[f64]) -> f64 {
        self.inner(psi, psi)
    }

    /// `||D(u)||^2_{L2_b}`.
    pub fn strain_sq(&self, psi: &[f64]) -> f64 {
        self.strain.weighted_square(&self.strain_w, psi)
    }

    /// `||div u||^2_{L2_b}`.
    pub fn div_sq(&self, psi: &[f64]) -> f64 {
        self.div.weighted_square(&self.div_w, psi)
    }

    /// `int_{shore} |u|^2 b ds`; zero when the depth vanishes on the shore.
    pub fn shore_sq(&self, psi: &[f64]) -> f64 {
        self.shore.weighted_square(&self.shore_w, psi)
    }

    /// The viscous form `2 mu (||D u||^2 + ||div u||^2) + drag int |u|^2 b ds`
    /// with `drag = mu eta_mu`.
    pub fn dissipation(&self, psi: &[f64], mu: f64, drag: f64) -> f64 {
        let mut d = 2.0 * mu * (self.strain_sq(psi) + self.div_sq(psi));
        if drag > 0.0 {
            d += drag * self.shore_sq(psi);
        }
        d
    }

    /// `out += s K psi` for the viscous form `K`.
    pub fn add_viscous(&self, psi: &[f64], mu: f64, drag: f64, s: f64, out: &mut [f64]) {
        let mut tmp = vec![0.0; psi.len()];
        for (gram, c) in [
            (&self.strain_gram, 2.0 * mu),
            (&self.div_gram, 2.0 * mu),
            (&self.shore_gram, drag),
        ] {
            if c == 0.0 || gram.nrows() == 0 {
                continue;
            }
            gram.mul(psi, &mut tmp);
            for (o, t) in out.iter_mut().zip(&tmp) {
                *o += s * c * t;
            }
        }
    }

    /// Diagonal of `h^2 (-L) + s K`.
    pub fn system_diagonal(&self, mu: f64, drag: f64, s: f64) -> Vec<f64> {
        let h2 = self.grid().h().powi(2);
        let mut d: Vec<f64> = self.solver.operator().diagonal().iter().map(|v| h2 * v).collect();
        for (gram, c) in [
            (&self.strain_gram, 2.0 * mu),
            (&self.div_gram, 2.0 * mu),
            (&self.shore_gram, drag),
        ] {
            if c == 0.0 || gram.nrows() == 0 {
                continue;
            }
            for (o, g) in d.iter_mut().zip(gram.diagonal()) {
                *o += s * c * g;
            }
        }
        d
    }

    /// Solves `(h^2 (-L) + s K) psi = rhs`.
    pub fn solve_system(
        &self,
        rhs: &[f64],
        mu: f64,
        drag: f64,
        s: f64,
        tol: f64,
        guess: Option<&[f64]>,
    ) -> Result<(Vec<f64>, SolveStats)> {
        let diag = self.system_diagonal(mu, drag, s);
        let grid = self.grid();
        pcg(
            |p, out| {
                self.apply_mass(p, out);
                if s != 0.0 {
                    self.add_viscous(p, mu, drag, s, out);
                }
            },
            &diag,
            rhs,
            grid.weights(),
            tol,
            guess,
            50 * grid.resolution(),
        )
    }

    /// Nodal velocities `(u_x, u_y)`.
    pub fn velocity(&self, psi: &[f64]) -> Vec<[f64; 2]> {
        let mut flat = vec![0.0; 2 * psi.len()];
        self.velocity.mul(psi, &mut flat);
        flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect()
    }

    pub fn velocity_field(&self, psi: &[f64], t: f64) -> VectorField {
        let mut u = VectorField::from_interior(self.grid(), "u", &self.velocity(psi)).with_time(t);
        u.b_divergence_free = true;
        u
    }

    /// Weak advection term `<(u . grad) u, v>_b` over divergence-free test
    /// fields, which reduces to the vorticity flux `-h^2 J(psi, omega)` with
    /// `omega = L psi / b` and the Arakawa Jacobian `J`. Skew:
    /// `psi . advection(psi) = 0`. Outside the interior `psi` is zero and
    /// `omega` is extended by neighbour averages.
    pub fn advection(&self, psi: &[f64]) -> Vec<f64> {
        let grid = self.grid();
        let zeta = self.solver.operator().apply(psi);
        let mut p = vec![0.0; grid.lattice_len()];
        let mut w = vec![0.0; grid.lattice_len()];
        let mut known = vec![false; grid.lattice_len()];
        for (i, &k) in grid.interior().iter().enumerate() {
            p[k] = psi[i];
            w[k] = zeta[i] / grid.depth(i);
            known[k] = true;
        }
        let nx = grid.nx() as i64;
        let at = |ix: i64, iy: i64| grid.lattice_index(ix, iy);
        for k in 0..w.len() {
            if known[k] {
                continue;
            }
            let (ix, iy) = ((k as i64) % nx, (k as i64) / nx);
            let (mut sum, mut cnt) = (0.0, 0);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if let Some(j) = at(ix + dx, iy + dy) {
                        if known[j] {
                            sum += w[j];
                            cnt += 1;
                        }
                    }
                }
            }
            if cnt > 0 {
                w[k] = sum / cnt as f64;
            }
        }
        let get = |v: &[f64], ix: i64, iy: i64| at(ix, iy).map_or(0.0, |k| v[k]);
        (0..psi.len())
            .map(|i| {
                let (x, y) = grid.coords(i);
                let s = |dx, dy| get(&p, x + dx, y + dy);
                let z = |dx, dy| get(&w, x + dx, y + dy);
                let jpp = (s(1, 0) - s(-1, 0)) * (z(0, 1) - z(0, -1))
                    - (s(0, 1) - s(0, -1)) * (z(1, 0) - z(-1, 0));
                let jpx = s(1, 0) * (z(1, 1) - z(1, -1)) - s(-1, 0) * (z(-1, 1) - z(-1, -1))
                    - s(0, 1) * (z(1, 1) - z(-1, 1))
                    + s(0, -1) * (z(1, -1) - z(-1, -1));
                let jxp = z(0, 1) * (s(1, 1) - s(-1, 1)) - z(0, -1) * (s(1, -1) - s(-1, -1))
                    - z(1, 0) * (s(1, 1) - s(1, -1))
                    + z(-1, 0) * (s(-1, 1) - s(-1, -1));
                -(jpp + jpx + jxp) / 12.0
            })
            .collect()
    }
}

/// Projects a nodal velocity onto discretely `b`-divergence-free fields in
/// `L2_b`. Nodal values are averaged onto the arms, then the stream function
/// of the closest admissible arm field is found. Returns the velocity and
/// its stream function.
pub fn project_divfree_b(
    ops: &ViscousOps,
    u_star: &VectorField,
    tol: f64,
) -> Result<(VectorField, ScalarField)> {
    let grid = ops.grid();
    check_same(grid, u_star.grid())?;
    if !u_star.is_finite() {
        return Err(LakeError::InvalidInitialData("non-finite velocity".into()));
    }
    let h = grid.h();
    let n = grid.interior_count();
    let mut rhs = vec![0.0; n];
    for (i, r) in rhs.iter_mut().enumerate() {
        for (d, arm) in grid.arms(i).iter().enumerate() {
            let ui = u_star.at(i);
            let ue = match *arm {
                Arm::Node(j) => {
                    let uj = u_star.at(j);
                    [0.5 * (ui[0] + uj[0]), 0.5 * (ui[1] + uj[1])]
                }
                Arm::Shore(_) => ui,
            };
            // velocity normal to the arm, oriented as the outward slope
            let v = match d {
                EAST => ue[1],
                WEST => -ue[1],
                NORTH => -ue[0],
                _ => ue[0],
            };
            *r -= h * v;
        }
    }
    let (psi, _) = ops.solve_system(&rhs, 0.0, 0.0, 0.0, tol, None)?;
    let u = ops.velocity_field(&psi, u_star.time);
    let psi = ScalarField::from_interior(grid, "psi", &psi).with_time(u_star.time);
    Ok((u, psi))
}
