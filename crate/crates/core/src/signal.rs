//! Boundary signals: Dirichlet sources and Neumann traces sampled on the
//! face lattice x_n = 0 over a time window, plus the analytic source shapes
//! (compactly supported bumps, plateau-modulated probes) used to generate
//! them at any sampling rate.

use serde::{Deserialize, Serialize};

use crate::coeff::poly_bump;
use crate::error::{Error, Result};
use crate::grid::{BoundaryPatch, GridSpec};
use crate::{c64, C64, I};

/// Complex samples f(y', t) on the face lattice; time axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySignal {
    pub patch: BoundaryPatch,
    /// Sampling interval.
    pub dt: f64,
    /// Time of sample 0.
    pub t0: f64,
    pub n_face: usize,
    pub n_time: usize,
    pub data: Vec<C64>,
}

impl BoundarySignal {
    pub fn zeros(patch: &BoundaryPatch, n_face: usize, dt: f64, n_time: usize) -> Self {
        BoundarySignal {
            patch: patch.clone(),
            dt,
            t0: 0.0,
            n_face,
            n_time,
            data: vec![C64::ZERO; n_face * n_time],
        }
    }

    #[inline]
    pub fn at(&self, face: usize, it: usize) -> C64 {
        self.data[face * self.n_time + it]
    }

    #[inline]
    pub fn row(&self, face: usize) -> &[C64] {
        &self.data[face * self.n_time..(face + 1) * self.n_time]
    }

    #[inline]
    pub fn row_mut(&mut self, face: usize) -> &mut [C64] {
        &mut self.data[face * self.n_time..(face + 1) * self.n_time]
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + (self.n_time - 1) as f64 * self.dt
    }

    /// Zero everywhere, in particular at t = 0 (compatibility with zero
    /// Cauchy data), outside the patch face range, and after the window?
    /// Only the two hard invariants are enforced: f(., t0) = 0 when t0 = 0
    /// and support inside the patch rows.
    pub fn check_compatibility(&self) -> Result<()> {
        if self.t0 == 0.0 {
            for face in 0..self.n_face {
                if self.at(face, 0).norm() > 0.0 {
                    return Err(Error::Invalid(format!(
                        "source is nonzero at t = 0 on face node {face}"
                    )));
                }
            }
        }
        for face in 0..self.n_face {
            if !self.patch.contains_face(face) && self.row(face).iter().any(|z| z.norm() > 0.0) {
                return Err(Error::Invalid(format!(
                    "source supported outside the patch at face node {face}"
                )));
            }
        }
        Ok(())
    }

    /// Central second-order time derivative (one-sided at the ends).
    pub fn time_derivative(&self) -> BoundarySignal {
        let mut out = self.clone();
        let nt = self.n_time;
        let dt = self.dt;
        for face in 0..self.n_face {
            let src = self.row(face).to_vec();
            let dst = out.row_mut(face);
            if nt == 1 {
                dst[0] = C64::ZERO;
                continue;
            }
            for it in 0..nt {
                dst[it] = if it > 0 && it + 1 < nt {
                    (src[it + 1] - src[it - 1]) / c64(2.0 * dt)
                } else if it == 0 {
                    (-c64(3.0) * src[0] + c64(4.0) * src[1] - src[2.min(nt - 1)]) / c64(2.0 * dt)
                } else {
                    (c64(3.0) * src[nt - 1] - c64(4.0) * src[nt - 2] + src[nt.saturating_sub(3)])
                        / c64(2.0 * dt)
                };
            }
        }
        out
    }

    /// Truncate to the first `n_time` samples.
    pub fn truncated(&self, n_time: usize) -> BoundarySignal {
        assert!(n_time <= self.n_time);
        let mut out = BoundarySignal::zeros(&self.patch, self.n_face, self.dt, n_time);
        out.t0 = self.t0;
        for face in 0..self.n_face {
            let src = &self.row(face)[..n_time];
            out.row_mut(face).copy_from_slice(src);
        }
        out
    }

    /// Shift the whole signal by `steps` samples (positive = later), filling
    /// with zeros; length preserved.
    pub fn shifted(&self, steps: i64) -> BoundarySignal {
        let mut out = BoundarySignal::zeros(&self.patch, self.n_face, self.dt, self.n_time);
        out.t0 = self.t0;
        for face in 0..self.n_face {
            for it in 0..self.n_time {
                let src = it as i64 - steps;
                if src >= 0 && (src as usize) < self.n_time {
                    out.data[face * self.n_time + it] = self.at(face, src as usize);
                }
            }
        }
        out
    }

    /// Reverse the time axis over the window (0, T): sample i -> n-1-i.
    pub fn time_reversed(&self) -> BoundarySignal {
        let mut out = self.clone();
        for face in 0..self.n_face {
            out.row_mut(face).reverse();
        }
        out
    }

    pub fn conjugated(&self) -> BoundarySignal {
        let mut out = self.clone();
        for z in &mut out.data {
            *z = z.conj();
        }
        out
    }

    pub fn scaled(&self, s: C64) -> BoundarySignal {
        let mut out = self.clone();
        for z in &mut out.data {
            *z *= s;
        }
        out
    }

    pub fn add_scaled(&mut self, other: &BoundarySignal, s: C64) {
        assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// Scale each face row by a real factor (used for the g^{1/4} boundary
    /// rescaling of the conformal trace transform).
    pub fn scale_rows(&mut self, factors: &[f64]) {
        assert_eq!(factors.len(), self.n_face);
        for face in 0..self.n_face {
            let s = c64(factors[face]);
            for z in self.row_mut(face) {
                *z *= s;
            }
        }
    }

    /// Cubic (Catmull-Rom) resample onto a finer uniform lattice with step
    /// `dt_new` and `n_new` samples starting at the same t0. Intended for
    /// smooth solved traces; dt_new need not divide dt.
    pub fn resampled(&self, dt_new: f64, n_new: usize) -> BoundarySignal {
        let mut out = BoundarySignal::zeros(&self.patch, self.n_face, dt_new, n_new);
        out.t0 = self.t0;
        let n = self.n_time as i64;
        for face in 0..self.n_face {
            let src = self.row(face);
            let get = |i: i64| -> C64 { src[i.clamp(0, n - 1) as usize] };
            for it in 0..n_new {
                let x = it as f64 * dt_new / self.dt;
                let i = x.floor() as i64;
                let u = x - i as f64;
                let (p0, p1, p2, p3) = (get(i - 1), get(i), get(i + 1), get(i + 2));
                let v = p1 * c64(1.0)
                    + (p2 - p0) * c64(0.5 * u)
                    + (p0 * c64(2.0) - p1 * c64(5.0) + p2 * c64(4.0) - p3) * c64(0.5 * u * u)
                    + (p3 - p0 + (p1 - p2) * c64(3.0)) * c64(0.5 * u * u * u);
                out.data[face * n_new + it] = v;
            }
        }
        out
    }

    /// Weighted L2 norm over face (spacing h_face) x time (trapezoid).
    pub fn l2_norm(&self, h_face: f64) -> f64 {
        self.l2_distance_to_zero(h_face)
    }

    fn l2_distance_to_zero(&self, h_face: f64) -> f64 {
        let mut acc = 0.0;
        for face in 0..self.n_face {
            let wf = GridSpec::trapezoid_weight(face, self.n_face) * h_face;
            for it in 0..self.n_time {
                let wt = GridSpec::trapezoid_weight(it, self.n_time) * self.dt;
                acc += wf * wt * self.at(face, it).norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn l2_distance(&self, other: &BoundarySignal, h_face: f64) -> f64 {
        assert_eq!(self.n_face, other.n_face);
        assert_eq!(self.n_time, other.n_time);
        let mut diff = self.clone();
        diff.add_scaled(other, c64(-1.0));
        diff.l2_distance_to_zero(h_face)
    }
}

/// Tangential envelope of a source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpaceProfile {
    /// 1 everywhere on the face (only sensible for dim-1 grids or windowed
    /// test profiles).
    Uniform,
    /// amp * (1 - r^2)^3 bump with r = (y - center)/radius.
    Bump { center: f64, radius: f64 },
    /// Unit-mass mollifier (1 - r^2)^3 / mass, support |y - center| < width.
    Mollifier { center: f64, width: f64 },
}

impl SpaceProfile {
    pub fn eval(&self, y: f64) -> f64 {
        match *self {
            SpaceProfile::Uniform => 1.0,
            SpaceProfile::Bump { center, radius } => poly_bump(y, center, radius),
            SpaceProfile::Mollifier { center, width } => {
                // 1D mass of (1-r^2)^3 over its support is width * 32/35
                poly_bump(y, center, width) * 35.0 / (32.0 * width)
            }
        }
    }

    /// Support interval (None = everywhere).
    pub fn support(&self) -> Option<(f64, f64)> {
        match *self {
            SpaceProfile::Uniform => None,
            SpaceProfile::Bump { center, radius } => Some((center - radius, center + radius)),
            SpaceProfile::Mollifier { center, width } => Some((center - width, center + width)),
        }
    }
}

/// Temporal envelope of a source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TimeProfile {
    /// (1 - r^2)^3 bump, r = (t - center)/radius.
    Bump { center: f64, radius: f64 },
    /// Quintic-smoothstep plateau: 1 on |t - center| < inner, 0 outside
    /// |t - center| > 2*inner.
    Plateau { center: f64, inner: f64 },
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
}

impl TimeProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Bump { center, radius } => poly_bump(t, center, radius),
            TimeProfile::Plateau { center, inner } => {
                let d = (t - center).abs();
                if d <= inner {
                    1.0
                } else if d >= 2.0 * inner {
                    0.0
                } else {
                    smoothstep((2.0 * inner - d) / inner)
                }
            }
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            TimeProfile::Bump { center, radius } => (center - radius, center + radius),
            TimeProfile::Plateau { center, inner } => (center - 2.0 * inner, center + 2.0 * inner),
        }
    }

    /// Earliest time the profile is nonzero (delayed-basis selection).
    pub fn start(&self) -> f64 {
        self.support().0
    }
}

/// Analytic boundary source: separable tangential x temporal envelope with
/// an optional carrier e^{i k (t - s0)}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceShape {
    pub space: SpaceProfile,
    pub time: TimeProfile,
    /// (k, s0): multiply by e^{i k (t - s0)}.
    pub carrier: Option<(f64, f64)>,
}

impl SourceShape {
    pub fn bump(y_center: f64, y_radius: f64, t_center: f64, t_radius: f64) -> Self {
        SourceShape {
            space: SpaceProfile::Bump {
                center: y_center,
                radius: y_radius,
            },
            time: TimeProfile::Bump {
                center: t_center,
                radius: t_radius,
            },
            carrier: None,
        }
    }

    pub fn eval(&self, y: f64, t: f64) -> C64 {
        let env = self.space.eval(y) * self.time.eval(t);
        match self.carrier {
            None => c64(env),
            Some((k, s0)) => c64(env) * (I * c64(k * (t - s0))).exp(),
        }
    }

    /// Sample on the face lattice of `grid` at rate `dt` with `n_time`
    /// samples starting at t = 0.
    pub fn materialize(
        &self,
        grid: &GridSpec,
        patch: &BoundaryPatch,
        dt: f64,
        n_time: usize,
    ) -> BoundarySignal {
        let n_face = grid.n_face();
        let h_face = if grid.dim == 2 { grid.spacing[0] } else { 0.0 };
        let mut s = BoundarySignal::zeros(patch, n_face, dt, n_time);
        for face in 0..n_face {
            let y = face as f64 * h_face;
            for it in 0..n_time {
                let t = it as f64 * dt;
                s.data[face * n_time + it] = self.eval(y, t);
            }
        }
        s
    }

    /// Verify the analytic support sits inside the patch and inside (0, T].
    pub fn check_support(&self, grid: &GridSpec, patch: &BoundaryPatch, t_max: f64) -> Result<()> {
        let (t_lo, t_hi) = self.time.support();
        if t_lo < 0.0 || t_hi > t_max + 1e-12 {
            return Err(Error::ProbeSupport {
                overflow: (0.0 - t_lo).max(t_hi - t_max).max(0.0),
            });
        }
        if grid.dim == 2 {
            if let Some((y_lo, y_hi)) = self.space.support() {
                let h = grid.spacing[0];
                let patch_lo = patch.face_start as f64 * h;
                let patch_hi = (patch.face_end() - 1) as f64 * h;
                if y_lo < patch_lo - 1e-12 || y_hi > patch_hi + 1e-12 {
                    return Err(Error::ProbeSupport {
                        overflow: (patch_lo - y_lo).max(y_hi - patch_hi).max(0.0),
                    });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patch() -> BoundaryPatch {
        BoundaryPatch::new(2, 5, 1.0, 1.0).unwrap()
    }

    #[test]
    fn derivative_of_linear_ramp_is_constant() {
        let mut s = BoundarySignal::zeros(&patch(), 8, 0.1, 11);
        for face in 0..8 {
            for it in 0..11 {
                s.data[face * 11 + it] = c64(0.3 * it as f64 * 0.1);
            }
        }
        let d = s.time_derivative();
        for z in &d.data {
            assert!((z.re - 0.3).abs() < 1e-12 && z.im.abs() < 1e-12);
        }
    }

    #[test]
    fn shift_and_truncate() {
        let mut s = BoundarySignal::zeros(&patch(), 2, 0.5, 4);
        s.data[1] = c64(7.0); // face 0, it 1
        let sh = s.shifted(2);
        assert_eq!(sh.at(0, 3), c64(7.0));
        assert_eq!(sh.at(0, 1), C64::ZERO);
        let tr = s.truncated(2);
        assert_eq!(tr.n_time, 2);
        assert_eq!(tr.at(0, 1), c64(7.0));
    }

    #[test]
    fn mollifier_has_unit_mass() {
        let m = SpaceProfile::Mollifier {
            center: 0.5,
            width: 0.2,
        };
        let n = 20_000;
        let h = 1.0 / n as f64;
        let mass: f64 = (0..=n).map(|i| m.eval(i as f64 * h) * h).sum::<f64>() - 0.5 * h * (m.eval(0.0) + m.eval(1.0));
        assert!((mass - 1.0).abs() < 1e-6, "mass = {mass}");
    }

    #[test]
    fn plateau_profile_shape() {
        let p = TimeProfile::Plateau {
            center: 0.5,
            inner: 0.1,
        };
        assert_eq!(p.eval(0.45), 1.0);
        assert_eq!(p.eval(0.5 + 0.21), 0.0);
        let mid = p.eval(0.5 + 0.15);
        assert!(mid > 0.0 && mid < 1.0);
    }

    #[test]
    fn support_check_flags_leak() {
        let g = GridSpec::new(&[9, 5], &[0.25, 0.25], 0.1, 2.0).unwrap();
        let p = BoundaryPatch::new(2, 5, 2.0, 2.0).unwrap();
        let ok = SourceShape::bump(1.0, 0.4, 0.5, 0.3);
        assert!(ok.check_support(&g, &p, 2.0).is_ok());
        let leak = SourceShape::bump(0.2, 0.4, 0.5, 0.3);
        assert!(leak.check_support(&g, &p, 2.0).is_err());
        let late = SourceShape::bump(1.0, 0.4, 1.9, 0.3);
        assert!(late.check_support(&g, &p, 2.0).is_err());
    }
}
