//! Compressed sparse rows, enough for the viscous quadratic forms.

use rayon::prelude::*;

#[derive(Debug, Clone, Default)]
pub struct Csr {
    ncols: usize,
    start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    /// Builds from `(row, col, value)` triplets; duplicates are summed in
    /// insertion order.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trip: Vec<(usize, usize, f64)>) -> Self {
        trip.sort_by_key(|&(r, c, _)| (r, c));
        let mut start = vec![0; nrows + 1];
        let mut cols = Vec::with_capacity(trip.len());
        let mut vals: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            if last == Some((r, c)) {
                *vals.last_mut().expect("merged entry") += v;
            } else {
                cols.push(c);
                vals.push(v);
                start[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            start[r + 1] += start[r];
        }
        Csr {
            ncols,
            start,
            cols,
            vals,
        }
    }

    pub fn from_rows(ncols: usize, rows: &[Vec<(usize, f64)>]) -> Self {
        let trip = rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v)))
            .collect();
        Self::from_triplets(rows.len(), ncols, trip)
    }

    pub fn nrows(&self) -> usize {
        self.start.len() - 1
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.start[r], self.start[r + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn row_dot(&self, r: usize, x: &[f64]) -> f64 {
        self.row(r).map(|(c, v)| v * x[c]).sum()
    }

    /// `out = self * x`.
    pub fn mul(&self, x: &[f64], out: &mut [f64]) {
        out.par_iter_mut()
            .enumerate()
            .for_each(|(r, o)| *o = self.row_dot(r, x));
    }

    pub fn transpose(&self) -> Csr {
        let mut trip = Vec::with_capacity(self.vals.len());
        for r in 0..self.nrows() {
            for (c, v) in self.row(r) {
                trip.push((c, r, v));
            }
        }
        Csr::from_triplets(self.ncols, self.nrows(), trip)
    }

    /// `S^T diag(w) S`.
    pub fn gram(&self, w: &[f64]) -> Csr {
        let mut trip = Vec::new();
        for (r, &wr) in w.iter().enumerate().take(self.nrows()) {
            for (a, va) in self.row(r) {
                for (b, vb) in self.row(r) {
                    trip.push((a, b, wr * va * vb));
                }
            }
        }
        Csr::from_triplets(self.ncols, self.ncols, trip)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows())
            .map(|r| self.row(r).filter(|&(c, _)| c == r).map(|(_, v)| v).sum())
            .collect()
    }

    /// `sum_r w_r (row_r . x)^2`.
    pub fn weighted_square(&self, w: &[f64], x: &[f64]) -> f64 {
        (0..self.nrows())
            .map(|r| {
                let s = self.row_dot(r, x);
                w[r] * s * s
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_matches_weighted_square() {
        let s = Csr::from_rows(3, &[vec![(0, 1.0), (2, -2.0)], vec![(1, 3.0), (1, 1.0)], vec![]]);
        let w = [2.0, 0.5, 7.0];
        let x = [0.3, -1.1, 0.7];
        let g = s.gram(&w);
        let mut gx = vec![0.0; 3];
        g.mul(&x, &mut gx);
        let q: f64 = gx.iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((q - s.weighted_square(&w, &x)).abs() < 1e-14);
        // duplicate entries in a row merge
        assert_eq!(s.row(1).collect::<Vec<_>>(), vec![(1, 4.0)]);
        let t = s.transpose();
        assert_eq!(t.row(2).collect::<Vec<_>>(), vec![(0, -2.0)]);
    }
}
