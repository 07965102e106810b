//! Spatial grid and boundary patch bookkeeping.
//!
//! Axes are ordered `[tangential..., normal]`; the boundary face carrying the
//! data patch is always the coordinate face `x_n = 0`, i.e. normal index 0.
//! Node storage is row-major with the normal axis fastest, so the collar
//! `x_n <= depth` is a contiguous prefix of every tangential row.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discretization of the box `[0,L_1] x ... x [0,L_n]` and the time window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Spatial dimension n (1 or 2).
    pub dim: usize,
    /// Nodes per axis, `[tangential..., normal]`.
    pub counts: Vec<usize>,
    /// Node spacing per axis.
    pub spacing: Vec<f64>,
    /// Time step.
    pub time_step: f64,
    /// Full horizon T0 (the solver runs on (0, T0]).
    pub horizon: f64,
}

impl GridSpec {
    pub fn new(counts: &[usize], spacing: &[f64], time_step: f64, horizon: f64) -> Result<Self> {
        let g = GridSpec {
            dim: counts.len(),
            counts: counts.to_vec(),
            spacing: spacing.to_vec(),
            time_step,
            horizon,
        };
        g.validate_shape()?;
        Ok(g)
    }

    pub fn validate_shape(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::Dimension(format!("dim must be 1 or 2, got {}", self.dim)));
        }
        if self.spacing.len() != self.dim {
            return Err(Error::Dimension(format!(
                "spacing has {} entries for dim {}",
                self.spacing.len(),
                self.dim
            )));
        }
        if self.counts.iter().any(|&c| c < 3) {
            return Err(Error::Invalid("every axis needs at least 3 nodes".into()));
        }
        if self.spacing.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
            return Err(Error::Invalid("spacings must be strictly positive".into()));
        }
        if !(self.time_step > 0.0) || !(self.horizon > 0.0) {
            return Err(Error::Invalid("time_step and horizon must be positive".into()));
        }
        Ok(())
    }

    /// Physical extent per axis, `(count-1) * spacing`.
    pub fn extents(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(&self.spacing)
            .map(|(&c, &h)| (c - 1) as f64 * h)
            .collect()
    }

    pub fn n_nodes(&self) -> usize {
        self.counts.iter().product()
    }

    /// Nodes on the face x_n = 0 (product of tangential counts; 1 for dim 1).
    pub fn n_face(&self) -> usize {
        self.counts[..self.dim - 1].iter().product()
    }

    /// Normal-axis node count.
    pub fn n_norm(&self) -> usize {
        self.counts[self.dim - 1]
    }

    /// Normal-axis spacing.
    pub fn h_norm(&self) -> f64 {
        self.spacing[self.dim - 1]
    }

    /// Flat index; row-major, normal axis fastest.
    #[inline]
    pub fn idx(&self, tang: usize, norm: usize) -> usize {
        debug_assert!(norm < self.n_norm());
        tang * self.n_norm() + norm
    }

    /// Physical position of a node.
    pub fn pos(&self, tang: usize, norm: usize) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.dim);
        if self.dim == 2 {
            p.push(tang as f64 * self.spacing[0]);
        }
        p.push(norm as f64 * self.h_norm());
        p
    }

    /// Number of time samples (including both endpoints of (0, T0]).
    pub fn n_time(&self) -> usize {
        self.n_steps() + 1
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.time_step).round() as usize
    }

    /// The horizon must sit on the time lattice to round-off.
    pub fn validate_time_lattice(&self) -> Result<()> {
        let n = self.horizon / self.time_step;
        if (n - n.round()).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::Invalid(format!(
                "horizon {} is not an integer multiple of time_step {}",
                self.horizon, self.time_step
            )));
        }
        Ok(())
    }

    /// CFL bound `cfl_factor * min(spacing) / sqrt(max eigenvalue of g^{jk})`.
    pub fn cfl_bound(&self, max_metric_eig: f64, cfl_factor: f64) -> f64 {
        let h_min = self.spacing.iter().cloned().fold(f64::INFINITY, f64::min);
        cfl_factor * h_min / max_metric_eig.sqrt()
    }

    pub fn check_cfl(&self, max_metric_eig: f64, cfl_factor: f64) -> Result<()> {
        let bound = self.cfl_bound(max_metric_eig, cfl_factor);
        if self.time_step > bound {
            return Err(Error::Cfl {
                dt: self.time_step,
                bound,
            });
        }
        Ok(())
    }

    /// Trapezoid quadrature weight for a 1D lattice of `count` nodes.
    #[inline]
    pub fn trapezoid_weight(i: usize, count: usize) -> f64 {
        if count == 1 {
            1.0
        } else if i == 0 || i + 1 == count {
            0.5
        } else {
            1.0
        }
    }

    /// Grid with both axes (and the time step) refined by 2; the horizon and
    /// extents are unchanged.
    pub fn refined_half(&self) -> GridSpec {
        GridSpec {
            dim: self.dim,
            counts: self.counts.iter().map(|&c| 2 * c - 1).collect(),
            spacing: self.spacing.iter().map(|&h| 0.5 * h).collect(),
            time_step: 0.5 * self.time_step,
            horizon: self.horizon,
        }
    }
}

/// Open subset of the face x_n = 0 where sources act, with its time window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPatch {
    /// First tangential face-node index of the patch.
    pub face_start: usize,
    /// Number of face nodes in the patch (>= 1, contiguous).
    pub face_len: usize,
    /// Active source window T (sources supported in (0, T]).
    pub t_window: f64,
    /// Full data horizon T0 >= T.
    pub horizon: f64,
}

impl BoundaryPatch {
    pub fn new(face_start: usize, face_len: usize, t_window: f64, horizon: f64) -> Result<Self> {
        if face_len == 0 {
            return Err(Error::Invalid("patch must contain at least one face node".into()));
        }
        if !(t_window > 0.0) || t_window > horizon + 1e-12 {
            return Err(Error::Invalid(format!(
                "patch window T = {t_window} must satisfy 0 < T <= T0 = {horizon}"
            )));
        }
        Ok(BoundaryPatch {
            face_start,
            face_len,
            t_window,
            horizon,
        })
    }

    /// Whole-face patch for dim-1 grids (the face is a single node).
    pub fn point(t_window: f64, horizon: f64) -> Result<Self> {
        BoundaryPatch::new(0, 1, t_window, horizon)
    }

    pub fn face_end(&self) -> usize {
        self.face_start + self.face_len
    }

    pub fn contains_face(&self, i: usize) -> bool {
        i >= self.face_start && i < self.face_end()
    }

    pub fn check_against(&self, grid: &GridSpec) -> Result<()> {
        if self.face_end() > grid.n_face() {
            return Err(Error::Dimension(format!(
                "patch face range {}..{} exceeds face of {} nodes",
                self.face_start,
                self.face_end(),
                grid.n_face()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_indexing_and_extents() {
        let g = GridSpec::new(&[5, 4], &[0.5, 0.25], 0.125, 1.0).unwrap();
        assert_eq!(g.n_nodes(), 20);
        assert_eq!(g.n_face(), 5);
        assert_eq!(g.n_norm(), 4);
        assert_eq!(g.idx(2, 3), 11);
        assert_eq!(g.extents(), vec![2.0, 0.75]);
        assert_eq!(g.pos(2, 1), vec![1.0, 0.25]);
        assert_eq!(g.n_steps(), 8);
    }

    #[test]
    fn cfl_rejects_large_steps() {
        let g = GridSpec::new(&[8, 8], &[0.1, 0.1], 0.2, 1.0).unwrap();
        assert!(g.check_cfl(1.0, 0.9).is_err());
        let g = GridSpec::new(&[8, 8], &[0.1, 0.1], 0.05, 1.0).unwrap();
        assert!(g.check_cfl(1.0, 0.9).is_ok());
    }

    #[test]
    fn patch_window_validation() {
        assert!(BoundaryPatch::new(0, 4, 0.5, 1.0).is_ok());
        assert!(BoundaryPatch::new(0, 0, 0.5, 1.0).is_err());
        assert!(BoundaryPatch::new(0, 4, 2.0, 1.0).is_err());
    }
}
