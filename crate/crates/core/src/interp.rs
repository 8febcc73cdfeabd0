//! Tensor-product four-point (cubic Lagrange) interpolation on grids.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid};

const MAX_TERMS: usize = 64;

/// Cubic Lagrange weights for nodes at offsets −1, 0, 1, 2 and fraction `t` in [0, 1).
pub fn cubic_weights(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

/// Flat offsets and weights of every node contributing at one point.
#[derive(Debug, Clone)]
pub struct Stencil {
    terms: [(usize, f64); MAX_TERMS],
    count: usize,
}

impl Stencil {
    /// Stencil at `q`. Periodic grids wrap indices; Dirichlet grids treat nodes
    /// past the walls as zero.
    pub fn new(grid: &Grid, q: &[f64]) -> Result<Self> {
        if !grid.contains(q) {
            return Err(Error::OutsideGrid { point: q.to_vec() });
        }
        let dim = grid.dim();
        // per axis: up to four (flat contribution, weight) pairs
        let mut axis_terms = [[(0usize, 0.0f64); 4]; 3];
        let mut axis_len = [0usize; 3];
        for k in 0..dim {
            let ax = grid.axis(k);
            let n = ax.points as isize;
            let s = (q[k] - ax.lower) / grid.dx()[k];
            let i0 = s.floor();
            let w = cubic_weights(s - i0);
            let i0 = i0 as isize;
            let stride = grid.strides()[k];
            for (j, wj) in w.iter().enumerate() {
                let i = i0 - 1 + j as isize;
                let idx = match grid.boundary() {
                    Boundary::Periodic => Some(i.rem_euclid(n) as usize),
                    Boundary::Dirichlet => (0..n).contains(&i).then_some(i as usize),
                };
                if let Some(idx) = idx {
                    axis_terms[k][axis_len[k]] = (idx * stride, *wj);
                    axis_len[k] += 1;
                }
            }
        }
        let mut terms = [(0usize, 0.0f64); MAX_TERMS];
        terms[0] = (0, 1.0);
        let mut count = 1;
        for k in 0..dim {
            let mut next = [(0usize, 0.0f64); MAX_TERMS];
            let mut m = 0;
            for &(off, w) in &terms[..count] {
                for &(o, wk) in &axis_terms[k][..axis_len[k]] {
                    next[m] = (off + o, w * wk);
                    m += 1;
                }
            }
            terms = next;
            count = m;
        }
        Ok(Self { terms, count })
    }

    pub fn apply(&self, field: &[C64]) -> C64 {
        self.terms[..self.count].iter().map(|&(i, w)| field[i] * w).sum()
    }

    pub fn apply_real(&self, field: &[f64]) -> f64 {
        self.terms[..self.count].iter().map(|&(i, w)| field[i] * w).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, GridSpec};

    #[test]
    fn weights_partition_unity_and_hit_nodes() {
        for t in [0.0, 0.1, 0.5, 0.93] {
            let w = cubic_weights(t);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
        assert_eq!(cubic_weights(0.0), [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn reproduces_cubics_exactly() {
        let g = make_grid(GridSpec::cube(2, -4.0, 4.0, 32)).unwrap();
        let f: Vec<f64> = (0..g.len())
            .map(|i| {
                let (x, y) = (g.coord_of(i, 0), g.coord_of(i, 1));
                x * x * x - 2.0 * x * y + y * y + 1.0
            })
            .collect();
        let (x, y) = (0.37, -1.91);
        let s = Stencil::new(&g, &[x, y]).unwrap();
        let exact = x * x * x - 2.0 * x * y + y * y + 1.0;
        assert!((s.apply_real(&f) - exact).abs() < 1e-12);
    }

    #[test]
    fn outside_point_rejected() {
        let g = make_grid(GridSpec::cube(1, -4.0, 4.0, 32)).unwrap();
        assert!(Stencil::new(&g, &[4.0]).is_err());
        assert!(Stencil::new(&g, &[-3.99]).is_ok());
    }
}
