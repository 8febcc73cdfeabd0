//! Uniform tensor-product grids over configuration space.
//!
//! Points are stored row-major with axis 0 slowest. Periodic grids cover
//! `[lower, upper)` with spacing `(upper - lower) / N`; Dirichlet grids use the
//! same nodes with the walls at `lower` (node 0, pinned to zero) and `upper`
//! (the first node past the end).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the total number of grid points.
pub const DEFAULT_MAX_POINTS: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    #[default]
    Periodic,
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

impl AxisSpec {
    pub fn new(lower: f64, upper: f64, points: usize) -> Self {
        Self { lower, upper, points }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub axes: Vec<AxisSpec>,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
}

fn default_max_points() -> usize {
    DEFAULT_MAX_POINTS
}

impl GridSpec {
    pub fn new(axes: Vec<AxisSpec>) -> Self {
        Self { axes, boundary: Boundary::Periodic, max_points: DEFAULT_MAX_POINTS }
    }

    pub fn cube(dim: usize, lower: f64, upper: f64, points: usize) -> Self {
        Self::new(vec![AxisSpec::new(lower, upper, points); dim])
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    /// Every violated constraint, in axis order.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(1..=3).contains(&self.axes.len()) {
            out.push(format!("dimension {} outside 1-3", self.axes.len()));
        }
        let mut total: usize = 1;
        for (k, ax) in self.axes.iter().enumerate() {
            if !(ax.lower.is_finite() && ax.upper.is_finite()) || ax.upper <= ax.lower {
                out.push(format!("axis {k}: upper bound {} must exceed lower bound {}", ax.upper, ax.lower));
            }
            if !ax.points.is_power_of_two() {
                out.push(format!("axis {k}: point count {} is not a power of two", ax.points));
            } else if ax.points < 16 {
                out.push(format!("axis {k}: point count {} below 16", ax.points));
            }
            total = total.saturating_mul(ax.points);
        }
        if total > self.max_points {
            out.push(format!("{} grid points exceed the memory cap of {}", total, self.max_points));
        }
        out
    }
}

/// A realized grid: coordinates, spacings, strides and spectral wave numbers.
#[derive(Debug, Clone)]
pub struct Grid {
    spec: GridSpec,
    dx: Vec<f64>,
    coords: Vec<Vec<f64>>,
    wavenumbers: Vec<Vec<f64>>,
    strides: Vec<usize>,
    len: usize,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.spec.axes == other.spec.axes && self.spec.boundary == other.spec.boundary
    }
}

pub fn make_grid(spec: GridSpec) -> Result<Grid> {
    Grid::new(spec)
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        let problems = spec.violations();
        if !problems.is_empty() {
            return Err(Error::Grid(problems.join("; ")));
        }
        let dim = spec.axes.len();
        let mut dx = Vec::with_capacity(dim);
        let mut coords = Vec::with_capacity(dim);
        let mut wavenumbers = Vec::with_capacity(dim);
        for ax in &spec.axes {
            let n = ax.points;
            let h = (ax.upper - ax.lower) / n as f64;
            dx.push(h);
            coords.push((0..n).map(|j| ax.lower + j as f64 * h).collect());
            let dk = 2.0 * PI / (ax.upper - ax.lower);
            wavenumbers.push(
                (0..n)
                    .map(|j| if j < n / 2 { j as f64 * dk } else { (j as f64 - n as f64) * dk })
                    .collect(),
            );
        }
        let mut strides = vec![1usize; dim];
        for k in (0..dim.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * spec.axes[k + 1].points;
        }
        let len = spec.axes.iter().map(|a| a.points).product();
        Ok(Self { spec, dx, coords, wavenumbers, strides, len })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.axes.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn boundary(&self) -> Boundary {
        self.spec.boundary
    }

    pub fn is_periodic(&self) -> bool {
        self.spec.boundary == Boundary::Periodic
    }

    pub fn axis(&self, k: usize) -> &AxisSpec {
        &self.spec.axes[k]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.spec.axes.iter().map(|a| a.points).collect()
    }

    pub fn points(&self, k: usize) -> usize {
        self.spec.axes[k].points
    }

    pub fn dx(&self) -> &[f64] {
        &self.dx
    }

    pub fn min_dx(&self) -> f64 {
        self.dx.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Quadrature weight of one cell, the product of spacings.
    pub fn cell_volume(&self) -> f64 {
        self.dx.iter().product()
    }

    pub fn volume(&self) -> f64 {
        self.spec.axes.iter().map(|a| a.upper - a.lower).product()
    }

    pub fn extent(&self, k: usize) -> f64 {
        self.spec.axes[k].upper - self.spec.axes[k].lower
    }

    pub fn coords(&self, k: usize) -> &[f64] {
        &self.coords[k]
    }

    /// Angular wave numbers in FFT order for axis `k`.
    pub fn wavenumbers(&self, k: usize) -> &[f64] {
        &self.wavenumbers[k]
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Multi-index of a flat offset.
    pub fn unflatten(&self, mut flat: usize, out: &mut [usize]) {
        for k in 0..self.dim() {
            out[k] = flat / self.strides[k];
            flat %= self.strides[k];
        }
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Coordinate of axis `k` at flat offset `flat`.
    pub fn coord_of(&self, flat: usize, k: usize) -> f64 {
        let i = (flat / self.strides[k]) % self.spec.axes[k].points;
        self.coords[k][i]
    }

    pub fn point_of(&self, flat: usize) -> Vec<f64> {
        (0..self.dim()).map(|k| self.coord_of(flat, k)).collect()
    }

    /// Whether `q` lies in the grid's domain: `[lower, upper)` per axis for
    /// periodic grids, `[lower, upper]` for Dirichlet grids.
    pub fn contains(&self, q: &[f64]) -> bool {
        q.len() == self.dim()
            && self.spec.axes.iter().zip(q).all(|(ax, &x)| match self.spec.boundary {
                Boundary::Periodic => x >= ax.lower && x < ax.upper,
                Boundary::Dirichlet => x >= ax.lower && x <= ax.upper,
            })
    }

    /// Map a coordinate back into `[lower, upper)`; returns the number of wraps.
    pub fn wrap(&self, q: &mut [f64]) -> u32 {
        let mut wraps = 0;
        for (ax, x) in self.spec.axes.iter().zip(q.iter_mut()) {
            let l = ax.upper - ax.lower;
            if *x < ax.lower || *x >= ax.upper {
                let shifted = (*x - ax.lower).rem_euclid(l);
                // rem_euclid can round up to l itself
                *x = if shifted >= l { ax.lower } else { ax.lower + shifted };
                wraps += 1;
            }
        }
        wraps
    }

    /// Fraction of each axis treated as the boundary strip by contamination checks.
    pub const BOUNDARY_STRIP: f64 = 1.0 / 16.0;

    /// Flags for points within the boundary strip of any axis.
    pub fn boundary_strip_mask(&self) -> Vec<bool> {
        let dim = self.dim();
        let mut idx = vec![0usize; dim];
        (0..self.len)
            .map(|flat| {
                self.unflatten(flat, &mut idx);
                (0..dim).any(|k| {
                    let n = self.points(k);
                    let w = ((n as f64 * Self::BOUNDARY_STRIP).ceil() as usize).max(1);
                    idx[k] < w || idx[k] >= n - w
                })
            })
            .collect()
    }
}
