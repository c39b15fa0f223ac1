//! Grid-sampled scalar and vector fields and their weighted norms.

use std::sync::Arc;

use super::grid::Grid;
use crate::error::{LakeError, Result};

/// Weight applied inside `weighted_norm`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// `(sum |f|^p b w)^(1/p)`.
    B,
    /// Norm of `b^(1/p) f`; the same sum as [`WeightMode::B`] for finite `p`.
    BPow,
    None,
}

/// Values over the full lattice; entries away from interior nodes are zero.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
    pub name: String,
    pub time: f64,
}

#[derive(Debug, Clone)]
pub struct VectorField {
    grid: Arc<Grid>,
    values: Vec<[f64; 2]>,
    pub name: String,
    pub time: f64,
    /// Set when the field came from a stream function.
    pub b_divergence_free: bool,
}

impl ScalarField {
    pub fn zeros(grid: &Arc<Grid>, name: &str) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![0.0; grid.lattice_len()],
            name: name.to_string(),
            time: 0.0,
        }
    }

    /// Samples `f` at interior nodes.
    pub fn from_fn(grid: &Arc<Grid>, name: &str, f: impl Fn([f64; 2]) -> f64) -> Self {
        let mut out = Self::zeros(grid, name);
        for (i, &k) in grid.interior().iter().enumerate() {
            out.values[k] = f(grid.node_pos(i));
        }
        out
    }

    /// Builds a field from values listed in interior order.
    pub fn from_interior(grid: &Arc<Grid>, name: &str, interior: &[f64]) -> Self {
        assert_eq!(interior.len(), grid.interior_count());
        let mut out = Self::zeros(grid, name);
        for (&k, &v) in grid.interior().iter().zip(interior) {
            out.values[k] = v;
        }
        out
    }

    /// Builds a field from full-lattice values, zeroing non-interior entries.
    pub fn from_lattice(grid: &Arc<Grid>, name: &str, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.lattice_len() {
            return Err(LakeError::GridMismatch);
        }
        for (k, v) in values.iter_mut().enumerate() {
            if grid.interior_index(k).is_none() {
                *v = 0.0;
            }
        }
        Ok(ScalarField {
            grid: grid.clone(),
            values,
            name: name.to_string(),
            time: 0.0,
        })
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Full-lattice values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at interior index `i`.
    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        self.values[self.grid.interior()[i]]
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: f64) {
        let k = self.grid.interior()[i];
        self.values[k] = v;
    }

    /// Values in interior order.
    pub fn interior_values(&self) -> Vec<f64> {
        self.grid.interior().iter().map(|&k| self.values[k]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &ScalarField) -> Result<Self> {
        check_same(&self.grid, &other.grid)?;
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        self.axpy(-1.0, other)
    }
}

impl VectorField {
    pub fn zeros(grid: &Arc<Grid>, name: &str) -> Self {
        VectorField {
            grid: grid.clone(),
            values: vec![[0.0; 2]; grid.lattice_len()],
            name: name.to_string(),
            time: 0.0,
            b_divergence_free: false,
        }
    }

    pub fn from_fn(grid: &Arc<Grid>, name: &str, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let mut out = Self::zeros(grid, name);
        for (i, &k) in grid.interior().iter().enumerate() {
            out.values[k] = f(grid.node_pos(i));
        }
        out
    }

    pub fn from_interior(grid: &Arc<Grid>, name: &str, interior: &[[f64; 2]]) -> Self {
        assert_eq!(interior.len(), grid.interior_count());
        let mut out = Self::zeros(grid, name);
        for (&k, &v) in grid.interior().iter().zip(interior) {
            out.values[k] = v;
        }
        out
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    #[inline]
    pub fn at(&self, i: usize) -> [f64; 2] {
        self.values[self.grid.interior()[i]]
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: [f64; 2]) {
        let k = self.grid.interior()[i];
        self.values[k] = v;
    }

    pub fn interior_values(&self) -> Vec<[f64; 2]> {
        self.grid.interior().iter().map(|&k| self.values[k]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v[0].is_finite() && v[1].is_finite())
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField {
        let mut out = ScalarField::zeros(&self.grid, &self.name);
        for (o, v) in out.values.iter_mut().zip(&self.values) {
            *o = v[0].hypot(v[1]);
        }
        out.time = self.time;
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v[0].hypot(v[1])))
    }

    pub fn sub(&self, other: &VectorField) -> Result<Self> {
        check_same(&self.grid, &other.grid)?;
        let mut out = self.clone();
        out.b_divergence_free = false;
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            a[0] -= b[0];
            a[1] -= b[1];
        }
        Ok(out)
    }

    /// `(1 - s) * self + s * other`.
    pub fn lerp(&self, other: &VectorField, s: f64) -> Result<Self> {
        check_same(&self.grid, &other.grid)?;
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            a[0] += s * (b[0] - a[0]);
            a[1] += s * (b[1] - a[1]);
        }
        out.time = self.time + s * (other.time - self.time);
        Ok(out)
    }
}

pub(crate) fn check_same(a: &Arc<Grid>, b: &Arc<Grid>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a.same_as(b) {
        Ok(())
    } else {
        Err(LakeError::GridMismatch)
    }
}

/// Anything that can be measured pointwise on interior nodes.
pub trait NodeMagnitude {
    fn grid(&self) -> &Arc<Grid>;
    fn magnitude_at(&self, i: usize) -> f64;
}

impl NodeMagnitude for ScalarField {
    fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    fn magnitude_at(&self, i: usize) -> f64 {
        self.at(i).abs()
    }
}

impl NodeMagnitude for VectorField {
    fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    fn magnitude_at(&self, i: usize) -> f64 {
        let v = self.at(i);
        v[0].hypot(v[1])
    }
}

/// Quadrature approximation of a (weighted) Lebesgue norm over the lake.
/// `p = f64::INFINITY` gives the plain interior sup for every mode.
pub fn weighted_norm<F: NodeMagnitude>(field: &F, p: f64, mode: WeightMode) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(LakeError::InvalidExponent(p));
    }
    let grid = field.grid();
    let n = grid.interior_count();
    if p.is_infinite() {
        return Ok((0..n).fold(0.0, |m, i| m.max(field.magnitude_at(i))));
    }
    // scale by the max to keep large exponents in range
    let scale = (0..n).fold(0.0, |m: f64, i| m.max(field.magnitude_at(i)));
    if scale == 0.0 {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for i in 0..n {
        let w = match mode {
            WeightMode::B | WeightMode::BPow => grid.weight(i) * grid.depth(i),
            WeightMode::None => grid.weight(i),
        };
        sum += w * (field.magnitude_at(i) / scale).powf(p);
    }
    Ok(scale * sum.powf(1.0 / p))
}

/// Discrete L2 inner product over interior nodes with quadrature weights.
pub fn grid_l2(values: &[f64], grid: &Grid) -> f64 {
    values
        .iter()
        .zip(grid.weights())
        .map(|(v, w)| v * v * w)
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::domain::LakeDomain;
    use proptest::prelude::*;

    fn grid(alpha: f64, n: usize) -> Arc<Grid> {
        Grid::build(&LakeDomain::disk(alpha, 1.0).unwrap(), n).unwrap()
    }

    /// Composite Simpson rule on [0, 1].
    fn simpson(f: impl Fn(f64) -> f64, m: usize) -> f64 {
        let h = 1.0 / m as f64;
        let mut s = f(0.0) + f(1.0);
        for k in 1..m {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let g = grid(1.0, 32);
        let f = ScalarField::zeros(&g, "zero");
        for p in [1.0, 2.0, 7.5, f64::INFINITY] {
            for mode in [WeightMode::B, WeightMode::BPow, WeightMode::None] {
                assert_eq!(weighted_norm(&f, p, mode).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn unit_field_norms_match_radial_integrals() {
        let pi = std::f64::consts::PI;
        let flat = grid(0.0, 64);
        let one = ScalarField::from_fn(&flat, "one", |_| 1.0);
        let n = weighted_norm(&one, 2.0, WeightMode::B).unwrap();
        assert!((n - pi.sqrt()).abs() / pi.sqrt() < 1e-2);

        let deg = grid(1.0, 64);
        let one = ScalarField::from_fn(&deg, "one", |_| 1.0);
        let exact = (2.0 * pi * simpson(|r| (1.0 - r * r) * r, 1000)).sqrt();
        assert!((exact - (pi / 2.0).sqrt()).abs() < 1e-12);
        let n = weighted_norm(&one, 2.0, WeightMode::B).unwrap();
        assert!((n - exact).abs() / exact < 1e-2, "{n} vs {exact}");
    }

    #[test]
    fn exponent_below_one_rejected() {
        let g = grid(0.0, 32);
        let f = ScalarField::zeros(&g, "f");
        assert!(matches!(
            weighted_norm(&f, 0.5, WeightMode::None),
            Err(LakeError::InvalidExponent(_))
        ));
    }

    #[test]
    fn sup_norm_ignores_weights() {
        let g = grid(1.0, 32);
        let f = ScalarField::from_fn(&g, "x", |x| x[0]);
        let s = weighted_norm(&f, f64::INFINITY, WeightMode::BPow).unwrap();
        assert_eq!(s, weighted_norm(&f, f64::INFINITY, WeightMode::None).unwrap());
        assert!(s > 0.9 && s < 1.0);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = ScalarField::zeros(&grid(0.0, 32), "a");
        let b = ScalarField::zeros(&grid(0.0, 40), "b");
        assert!(matches!(a.sub(&b), Err(LakeError::GridMismatch)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn norm_is_absolutely_homogeneous(
            lambda in prop::sample::select(vec![-2.0, 0.5, 3.0]),
            p in 1.0f64..12.0,
            kx in -3.0f64..3.0,
        ) {
            let g = grid(1.0, 24);
            let f = ScalarField::from_fn(&g, "f", |x| (kx * x[0]).sin() + x[1]);
            let base = weighted_norm(&f, p, WeightMode::B).unwrap();
            let scaled = weighted_norm(&f.scaled(lambda), p, WeightMode::B).unwrap();
            prop_assert!((scaled - lambda.abs() * base).abs() <= 1e-12 * base.max(1.0));
        }
    }
}
