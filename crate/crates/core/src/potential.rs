//! External potentials realized on a grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Parametric description of a potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    Free,
    /// `V = omega^2 |x - center|^2 / 2`.
    Harmonic { omega: f64, center: Vec<f64> },
    /// A wall of the given height normal to axis 0, with openings centered at
    /// `slit_centers` along axis 1 (2D only; in 1D the wall has no openings).
    BarrierMask {
        wall_center: f64,
        wall_thickness: f64,
        height: f64,
        slit_centers: Vec<f64>,
        slit_width: f64,
    },
    /// Explicit values, one per cell in grid order.
    Tabulated { values: Vec<f64> },
}

/// A potential together with its values on a specific grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    kind: PotentialKind,
    grid: Grid,
    values: Vec<f64>,
}

impl Potential {
    pub fn free(grid: &Grid) -> Self {
        Self {
            kind: PotentialKind::Free,
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn realize(kind: PotentialKind, grid: &Grid) -> Result<Self> {
        let values = match &kind {
            PotentialKind::Free => vec![0.0; grid.len()],
            PotentialKind::Harmonic { omega, center } => {
                if center.len() != grid.dim() {
                    return Err(Error::Precondition("harmonic center dimension".into()));
                }
                (0..grid.len())
                    .map(|i| {
                        let p = grid.point(i);
                        let r2: f64 = center.iter().enumerate().map(|(a, c)| (p[a] - c).powi(2)).sum();
                        0.5 * omega * omega * r2
                    })
                    .collect()
            }
            PotentialKind::BarrierMask {
                wall_center,
                wall_thickness,
                height,
                slit_centers,
                slit_width,
            } => (0..grid.len())
                .map(|i| {
                    let p = grid.point(i);
                    if (p[0] - wall_center).abs() > wall_thickness / 2.0 {
                        return 0.0;
                    }
                    let open = grid.dim() == 2
                        && slit_centers.iter().any(|c| (p[1] - c).abs() <= slit_width / 2.0);
                    if open {
                        0.0
                    } else {
                        *height
                    }
                })
                .collect(),
            PotentialKind::Tabulated { values } => {
                if values.len() != grid.len() {
                    return Err(Error::GridMismatch);
                }
                values.clone()
            }
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("non-finite potential value".into()));
        }
        Ok(Self {
            kind,
            grid: grid.clone(),
            values,
        })
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_free(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_is_zero() {
        let g = Grid::line(-1.0, 1.0, 32).unwrap();
        let v = Potential::realize(PotentialKind::Free, &g).unwrap();
        assert!(v.is_free());
    }

    #[test]
    fn harmonic_values() {
        let g = Grid::line(-4.0, 4.0, 16).unwrap();
        let v = Potential::realize(PotentialKind::Harmonic { omega: 2.0, center: vec![1.0] }, &g).unwrap();
        // x = -4 + 0.5 * 10 = 1.0 is the minimum
        assert_eq!(v.values()[10], 0.0);
        assert!((v.values()[0] - 0.5 * 4.0 * 25.0).abs() < 1e-12);
    }

    #[test]
    fn barrier_has_openings() {
        let g = Grid::square(-8.0, 8.0, 64).unwrap();
        let v = Potential::realize(
            PotentialKind::BarrierMask {
                wall_center: 0.0,
                wall_thickness: 0.5,
                height: 100.0,
                slit_centers: vec![-2.0, 2.0],
                slit_width: 1.0,
            },
            &g,
        )
        .unwrap();
        let at = |x: f64, y: f64| {
            let h = 0.25;
            let i = ((x + 8.0) / h).round() as usize;
            let j = ((y + 8.0) / h).round() as usize;
            v.values()[i * 64 + j]
        };
        assert_eq!(at(0.0, 0.0), 100.0);
        assert_eq!(at(0.0, 2.0), 0.0);
        assert_eq!(at(0.0, -2.0), 0.0);
        assert_eq!(at(3.0, 0.0), 0.0);
    }

    #[test]
    fn tabulated_length_checked() {
        let g = Grid::line(-1.0, 1.0, 32).unwrap();
        assert!(Potential::realize(PotentialKind::Tabulated { values: vec![0.0; 31] }, &g).is_err());
        assert!(Potential::realize(PotentialKind::Tabulated { values: vec![f64::NAN; 32] }, &g).is_err());
    }
}
