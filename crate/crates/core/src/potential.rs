//! Scalar potentials realized on a grid.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::spectral::finite_difference_gradient;
use crate::state::PhysicalParams;

/// Declarative potential description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialKind {
    Free,
    /// `Σ ½ m_k ω_k² q_k²`.
    Harmonic { omega: Vec<f64> },
    /// Smooth bump along axis 0: `height · exp(−(x−center)²/(2·width²))`.
    Barrier { height: f64, width: f64, center: f64 },
    /// Wall normal to axis 0 with two openings along axis 1.
    DoubleSlit {
        slit_separation: f64,
        slit_width: f64,
        wall_position: f64,
        wall_height: f64,
        #[serde(default = "default_wall_thickness")]
        wall_thickness: f64,
    },
    /// Position-position coupling `strength · q_0 · q_1` used by pointer experiments.
    Bilinear { strength: f64 },
    /// Grid-ordered values (row-major, axis 0 slowest).
    Tabulated { values: Vec<f64> },
}

fn default_wall_thickness() -> f64 {
    0.5
}

impl PotentialKind {
    pub fn name(&self) -> &'static str {
        match self {
            PotentialKind::Free => "free",
            PotentialKind::Harmonic { .. } => "harmonic",
            PotentialKind::Barrier { .. } => "barrier",
            PotentialKind::DoubleSlit { .. } => "double-slit",
            PotentialKind::Bilinear { .. } => "bilinear",
            PotentialKind::Tabulated { .. } => "tabulated",
        }
    }

    pub fn violations(&self, grid: &Grid) -> Vec<String> {
        let dim = grid.dim();
        let mut out = Vec::new();
        match self {
            PotentialKind::Free => {}
            PotentialKind::Harmonic { omega } => {
                if omega.len() != dim {
                    out.push(format!("harmonic potential needs {dim} frequencies"));
                }
            }
            PotentialKind::Barrier { width, .. } => {
                if !(*width > 0.0) {
                    out.push("barrier width must be positive".into());
                }
            }
            PotentialKind::DoubleSlit { slit_width, slit_separation, wall_thickness, .. } => {
                if dim != 2 {
                    out.push("double-slit potential needs a 2D grid".into());
                }
                if !(*slit_width > 0.0 && *wall_thickness > 0.0 && slit_separation > slit_width) {
                    out.push("double-slit geometry needs positive width/thickness and separation > width".into());
                }
            }
            PotentialKind::Bilinear { .. } => {
                if dim != 2 {
                    out.push("bilinear coupling needs a 2D grid".into());
                }
            }
            PotentialKind::Tabulated { values } => {
                if values.len() != grid.len() {
                    out.push(format!("tabulated potential has {} values for {} grid points", values.len(), grid.len()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    out.push("tabulated potential has non-finite values".into());
                }
            }
        }
        out
    }

    /// The potential multiplied by `factor`. Harmonic potentials are already
    /// proportional to the masses and are returned unchanged.
    pub fn scaled(&self, factor: f64) -> PotentialKind {
        let mut out = self.clone();
        match &mut out {
            PotentialKind::Free | PotentialKind::Harmonic { .. } => {}
            PotentialKind::Barrier { height, .. } => *height *= factor,
            PotentialKind::DoubleSlit { wall_height, .. } => *wall_height *= factor,
            PotentialKind::Bilinear { strength } => *strength *= factor,
            PotentialKind::Tabulated { values } => values.iter_mut().for_each(|v| *v *= factor),
        }
        out
    }

    fn value(&self, q: &[f64], params: &PhysicalParams, flat: usize) -> f64 {
        match self {
            PotentialKind::Free => 0.0,
            PotentialKind::Harmonic { omega } => {
                q.iter().zip(omega).zip(&params.masses).map(|((x, w), m)| 0.5 * m * w * w * x * x).sum()
            }
            PotentialKind::Barrier { height, width, center } => {
                let d = q[0] - center;
                height * (-d * d / (2.0 * width * width)).exp()
            }
            PotentialKind::DoubleSlit { slit_separation, slit_width, wall_position, wall_height, wall_thickness } => {
                let in_wall = (q[0] - wall_position).abs() < 0.5 * wall_thickness;
                let y = q[1];
                let in_slit = (y - 0.5 * slit_separation).abs() < 0.5 * slit_width
                    || (y + 0.5 * slit_separation).abs() < 0.5 * slit_width;
                if in_wall && !in_slit {
                    *wall_height
                } else {
                    0.0
                }
            }
            PotentialKind::Bilinear { strength } => strength * q[0] * q[1],
            PotentialKind::Tabulated { values } => values[flat],
        }
    }
}

/// A potential realized as a real field on a grid.
#[derive(Debug, Clone)]
pub struct Potential {
    kind: PotentialKind,
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Potential {
    pub fn new(kind: PotentialKind, grid: Arc<Grid>, params: &PhysicalParams) -> Result<Self> {
        let problems = kind.violations(&grid);
        if !problems.is_empty() {
            return Err(Error::Potential(problems.join("; ")));
        }
        params.check_for(&grid)?;
        let mut q = vec![0.0; grid.dim()];
        let values: Vec<f64> = (0..grid.len())
            .map(|flat| {
                for (k, x) in q.iter_mut().enumerate() {
                    *x = grid.coord_of(flat, k);
                }
                kind.value(&q, params, flat)
            })
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Potential("non-finite potential value".into()));
        }
        Ok(Self { kind, grid, values })
    }

    pub fn free(grid: Arc<Grid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { kind: PotentialKind::Free, grid, values }
    }

    /// Load grid-ordered values from a CSV (any layout; values are read in order).
    pub fn from_csv(path: &Path, grid: Arc<Grid>, params: &PhysicalParams) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_path(path)?;
        let mut values = Vec::with_capacity(grid.len());
        for record in reader.records() {
            for field in record?.iter().filter(|f| !f.is_empty()) {
                let v: f64 = field.parse().map_err(|_| Error::Format {
                    path: path.to_path_buf(),
                    message: format!("not a number: {field:?}"),
                })?;
                values.push(v);
            }
        }
        Self::new(PotentialKind::Tabulated { values }, grid, params)
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// `∇V` on the grid by central differences.
    pub fn gradient(&self) -> Vec<Vec<f64>> {
        finite_difference_gradient(&self.grid, &self.values)
    }
}
