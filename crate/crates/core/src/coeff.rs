//! Coefficient fields of the hyperbolic operator and the two invariance
//! actions on them: gauge transformations and boundary-fixing
//! diffeomorphisms.
//!
//! The unknowns of the inverse problem are the inverse metric g^{jk}, the
//! magnetic potential A_j and the electric potential V, all sampled at grid
//! nodes. `g = det ||g^{jk}||^{-1}` is cached per node.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Sampled coefficients of the operator on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientField {
    pub grid: GridSpec,
    /// Inverse metric g^{jk}, dim*dim entries per node, row-major per node.
    pub metric_inv: Vec<f64>,
    /// Magnetic potential A_j, dim entries per node.
    pub potential_a: Vec<f64>,
    /// Electric potential V, one entry per node.
    pub potential_v: Vec<f64>,
    /// Cached g = 1/det(g^{jk}) per node.
    pub g_det: Vec<f64>,
}

/// Real gauge exponent psi with psi = 0 on the data patch; the induced
/// multiplier is c = e^{i psi}.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeFunction {
    pub grid: GridSpec,
    pub psi: Vec<f64>,
}

/// Sampled diffeomorphism y(x) fixing the face x_n = 0 pointwise, with its
/// Jacobian dy/dx per node.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffeoMap {
    pub grid: GridSpec,
    /// Forward map, dim entries per node.
    pub forward: Vec<f64>,
    /// Jacobian dy/dx, dim*dim entries per node.
    pub jacobian: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Asymmetric { node: usize, delta: f64 },
    NotPositiveDefinite { node: usize, min_eig: f64 },
    DetInconsistent { node: usize, delta: f64 },
    NonFinite { node: usize, what: &'static str },
}

/// Outcome of [`validate_coefficients`]; empty iff every invariant holds.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

impl CoefficientField {
    /// Build a field from analytic generators evaluated at node positions.
    /// `metric(pos)` returns the dim x dim inverse metric row-major,
    /// `a(pos)` the potential covector, `v(pos)` the scalar potential.
    pub fn from_functions(
        grid: &GridSpec,
        metric: impl Fn(&[f64]) -> Vec<f64>,
        a: impl Fn(&[f64]) -> Vec<f64>,
        v: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        grid.validate_shape()?;
        let dim = grid.dim;
        let n = grid.n_nodes();
        let mut metric_inv = vec![0.0; n * dim * dim];
        let mut potential_a = vec![0.0; n * dim];
        let mut potential_v = vec![0.0; n];
        for tang in 0..grid.n_face() {
            for norm in 0..grid.n_norm() {
                let node = grid.idx(tang, norm);
                let p = grid.pos(tang, norm);
                let m = metric(&p);
                if m.len() != dim * dim {
                    return Err(Error::Dimension("metric generator arity".into()));
                }
                metric_inv[node * dim * dim..(node + 1) * dim * dim].copy_from_slice(&m);
                let av = a(&p);
                if av.len() != dim {
                    return Err(Error::Dimension("potential generator arity".into()));
                }
                potential_a[node * dim..(node + 1) * dim].copy_from_slice(&av);
                potential_v[node] = v(&p);
            }
        }
        let mut field = CoefficientField {
            grid: grid.clone(),
            metric_inv,
            potential_a,
            potential_v,
            g_det: vec![0.0; n],
        };
        field.recompute_g_det()?;
        Ok(field)
    }

    /// Euclidean metric, zero potentials.
    pub fn flat(grid: &GridSpec) -> Result<Self> {
        let dim = grid.dim;
        Self::from_functions(
            grid,
            |_| identity_matrix(dim),
            |_| vec![0.0; dim],
            |_| 0.0,
        )
    }

    pub fn recompute_g_det(&mut self) -> Result<()> {
        let dim = self.grid.dim;
        for node in 0..self.grid.n_nodes() {
            let d = det(&self.metric_inv[node * dim * dim..(node + 1) * dim * dim], dim);
            if !(d > 0.0) {
                return Err(Error::Validity(format!(
                    "det g^(jk) = {d:.3e} at node {node} is not positive"
                )));
            }
            self.g_det[node] = 1.0 / d;
        }
        Ok(())
    }

    #[inline]
    pub fn metric_at(&self, node: usize) -> &[f64] {
        let d2 = self.grid.dim * self.grid.dim;
        &self.metric_inv[node * d2..(node + 1) * d2]
    }

    #[inline]
    pub fn a_at(&self, node: usize) -> &[f64] {
        let d = self.grid.dim;
        &self.potential_a[node * d..(node + 1) * d]
    }

    /// Largest eigenvalue of g^{jk} over all nodes (squared max wave speed).
    pub fn max_metric_eig(&self) -> f64 {
        let dim = self.grid.dim;
        let mut worst: f64 = 0.0;
        for node in 0..self.grid.n_nodes() {
            worst = worst.max(max_eig(self.metric_at(node), dim));
        }
        worst
    }

    /// Metric distance along the normal coordinate line from the face to
    /// depth `x_n` at tangential station `tang` (trapezoid in the normal
    /// slowness 1/sqrt(g^{nn})).
    pub fn normal_travel_time(&self, tang: usize, norm_levels: usize) -> f64 {
        let dim = self.grid.dim;
        let h = self.grid.h_norm();
        let mut acc = 0.0;
        for m in 0..norm_levels {
            let s0 = 1.0 / self.metric_at(self.grid.idx(tang, m))[dim * dim - 1].sqrt();
            let s1 = 1.0 / self.metric_at(self.grid.idx(tang, m + 1))[dim * dim - 1].sqrt();
            acc += 0.5 * h * (s0 + s1);
        }
        acc
    }
}

pub fn identity_matrix(dim: usize) -> Vec<f64> {
    let mut m = vec![0.0; dim * dim];
    for j in 0..dim {
        m[j * dim + j] = 1.0;
    }
    m
}

pub(crate) fn det(m: &[f64], dim: usize) -> f64 {
    match dim {
        1 => m[0],
        2 => m[0] * m[3] - m[1] * m[2],
        _ => unreachable!("dim <= 2"),
    }
}

pub(crate) fn max_eig(m: &[f64], dim: usize) -> f64 {
    match dim {
        1 => m[0],
        2 => {
            let tr = m[0] + m[3];
            let d = det(m, 2);
            let disc = (0.25 * tr * tr - d).max(0.0).sqrt();
            0.5 * tr + disc
        }
        _ => unreachable!(),
    }
}

pub(crate) fn min_eig(m: &[f64], dim: usize) -> f64 {
    match dim {
        1 => m[0],
        2 => {
            let tr = m[0] + m[3];
            let d = det(m, 2);
            let disc = (0.25 * tr * tr - d).max(0.0).sqrt();
            0.5 * tr - disc
        }
        _ => unreachable!(),
    }
}

pub(crate) fn invert(m: &[f64], dim: usize) -> Option<Vec<f64>> {
    let d = det(m, dim);
    if d.abs() < 1e-300 {
        return None;
    }
    Some(match dim {
        1 => vec![1.0 / d],
        2 => vec![m[3] / d, -m[1] / d, -m[2] / d, m[0] / d],
        _ => unreachable!(),
    })
}

/// Second-order partial derivative stencil along `axis` for a per-node
/// scalar field: central in the interior, one-sided three-point at faces.
pub fn fd_partial(grid: &GridSpec, field: &[f64], axis: usize) -> Vec<f64> {
    let dim = grid.dim;
    let n_face = grid.n_face();
    let n_norm = grid.n_norm();
    let mut out = vec![0.0; grid.n_nodes()];
    let h = grid.spacing[axis];
    let normal_axis = axis == dim - 1;
    for tang in 0..n_face {
        for norm in 0..n_norm {
            let node = grid.idx(tang, norm);
            let (i, count) = if normal_axis { (norm, n_norm) } else { (tang, n_face) };
            let at = |j: usize| -> f64 {
                if normal_axis {
                    field[grid.idx(tang, j)]
                } else {
                    field[grid.idx(j, norm)]
                }
            };
            out[node] = if i > 0 && i + 1 < count {
                (at(i + 1) - at(i - 1)) / (2.0 * h)
            } else if i == 0 {
                (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
            } else {
                (3.0 * at(count - 1) - 4.0 * at(count - 2) + at(count - 3)) / (2.0 * h)
            };
        }
    }
    out
}

/// Multilinear interpolation of a per-node field with `stride` components,
/// component `comp`, at physical position `pos` (clamped to the box).
pub fn sample_multilinear(
    grid: &GridSpec,
    data: &[f64],
    stride: usize,
    comp: usize,
    pos: &[f64],
) -> f64 {
    let dim = grid.dim;
    let mut base = [0usize; 2];
    let mut frac = [0.0f64; 2];
    for ax in 0..dim {
        let count = grid.counts[ax];
        let x = (pos[ax] / grid.spacing[ax]).clamp(0.0, (count - 1) as f64);
        let i = (x.floor() as usize).min(count - 2);
        base[ax] = i;
        frac[ax] = x - i as f64;
    }
    if dim == 1 {
        let a = data[base[0] * stride + comp];
        let b = data[(base[0] + 1) * stride + comp];
        a + frac[0] * (b - a)
    } else {
        let at = |i: usize, j: usize| data[grid.idx(i, j) * stride + comp];
        let (i, j) = (base[0], base[1]);
        let (fx, fy) = (frac[0], frac[1]);
        let a = at(i, j) * (1.0 - fx) * (1.0 - fy)
            + at(i + 1, j) * fx * (1.0 - fy)
            + at(i, j + 1) * (1.0 - fx) * fy
            + at(i + 1, j + 1) * fx * fy;
        a
    }
}

impl GaugeFunction {
    pub fn from_function(grid: &GridSpec, psi: impl Fn(&[f64]) -> f64) -> Self {
        let mut data = vec![0.0; grid.n_nodes()];
        for tang in 0..grid.n_face() {
            for norm in 0..grid.n_norm() {
                data[grid.idx(tang, norm)] = psi(&grid.pos(tang, norm));
            }
        }
        GaugeFunction {
            grid: grid.clone(),
            psi: data,
        }
    }

    /// Largest |psi| on the face x_n = 0 (must vanish there for membership
    /// in the gauge group).
    pub fn max_on_face(&self) -> f64 {
        (0..self.grid.n_face())
            .map(|t| self.psi[self.grid.idx(t, 0)].abs())
            .fold(0.0, f64::max)
    }
}

/// Gauge action: A_j -> A_j + d psi / d y_j; metric and V unchanged.
pub fn apply_gauge(coeffs: &CoefficientField, gauge: &GaugeFunction) -> Result<CoefficientField> {
    if gauge.grid != coeffs.grid {
        return Err(Error::Dimension("gauge grid differs from coefficient grid".into()));
    }
    if gauge.max_on_face() > 1e-12 {
        return Err(Error::Invalid(format!(
            "gauge exponent does not vanish on the patch face (max {:.3e})",
            gauge.max_on_face()
        )));
    }
    let dim = coeffs.grid.dim;
    let mut out = coeffs.clone();
    for axis in 0..dim {
        let dpsi = fd_partial(&coeffs.grid, &gauge.psi, axis);
        for node in 0..coeffs.grid.n_nodes() {
            out.potential_a[node * dim + axis] += dpsi[node];
        }
    }
    Ok(out)
}

impl DiffeoMap {
    /// Sample a map and its (analytic) Jacobian.
    pub fn from_functions(
        grid: &GridSpec,
        map: impl Fn(&[f64]) -> Vec<f64>,
        jac: impl Fn(&[f64]) -> Vec<f64>,
    ) -> Self {
        let dim = grid.dim;
        let n = grid.n_nodes();
        let mut forward = vec![0.0; n * dim];
        let mut jacobian = vec![0.0; n * dim * dim];
        for tang in 0..grid.n_face() {
            for norm in 0..grid.n_norm() {
                let node = grid.idx(tang, norm);
                let p = grid.pos(tang, norm);
                forward[node * dim..(node + 1) * dim].copy_from_slice(&map(&p));
                jacobian[node * dim * dim..(node + 1) * dim * dim].copy_from_slice(&jac(&p));
            }
        }
        DiffeoMap {
            grid: grid.clone(),
            forward,
            jacobian,
        }
    }

    pub fn identity(grid: &GridSpec) -> Self {
        let dim = grid.dim;
        Self::from_functions(grid, |p| p.to_vec(), |_| identity_matrix(dim))
    }

    /// Check the invariants: nonsingular Jacobian everywhere, identity on the
    /// face x_n = 0.
    pub fn validate(&self) -> Result<()> {
        let dim = self.grid.dim;
        for node in 0..self.grid.n_nodes() {
            let j = &self.jacobian[node * dim * dim..(node + 1) * dim * dim];
            let d = det(j, dim);
            if d.abs() < 1e-12 {
                let (tang, norm) = (node / self.grid.n_norm(), node % self.grid.n_norm());
                return Err(Error::Degenerate {
                    node: vec![tang, norm],
                    det: d,
                });
            }
        }
        for tang in 0..self.grid.n_face() {
            let node = self.grid.idx(tang, 0);
            let p = self.grid.pos(tang, 0);
            for ax in 0..dim {
                if (self.forward[node * dim + ax] - p[ax]).abs() > 1e-12 {
                    return Err(Error::Invalid(format!(
                        "diffeomorphism moves face node {tang} (axis {ax})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Invert the sampled map at `y` by Newton iteration on the multilinear
    /// interpolant. Returns the preimage x.
    pub fn invert_at(&self, y: &[f64]) -> Result<Vec<f64>> {
        let dim = self.grid.dim;
        let ext = self.grid.extents();
        let mut x: Vec<f64> = y.to_vec();
        for _ in 0..50 {
            let mut fy = vec![0.0; dim];
            for ax in 0..dim {
                fy[ax] = sample_multilinear(&self.grid, &self.forward, dim, ax, &x);
            }
            let mut j = vec![0.0; dim * dim];
            for c in 0..dim * dim {
                j[c] = sample_multilinear(&self.grid, &self.jacobian, dim * dim, c, &x);
            }
            let inv = invert(&j, dim).ok_or_else(|| Error::Degenerate {
                node: vec![],
                det: det(&j, dim),
            })?;
            let mut delta = 0.0;
            let mut xn = x.clone();
            for r in 0..dim {
                let mut step = 0.0;
                for c in 0..dim {
                    step += inv[r * dim + c] * (y[c] - fy[c]);
                }
                xn[r] = (x[r] + step).clamp(0.0, ext[r]);
                delta = f64::max(delta, step.abs());
            }
            x = xn;
            if delta < 1e-13 {
                break;
            }
        }
        Ok(x)
    }
}

/// Diffeomorphism action: metric pushed forward by (dy/dx) g (dy/dx)^T, the
/// potential 1-form pulled back through the inverse, V composed with x(y);
/// everything resampled onto the original grid by multilinear interpolation.
pub fn apply_diffeomorphism(
    coeffs: &CoefficientField,
    map: &DiffeoMap,
) -> Result<CoefficientField> {
    if map.grid != coeffs.grid {
        return Err(Error::Dimension("map grid differs from coefficient grid".into()));
    }
    map.validate()?;
    let grid = &coeffs.grid;
    let dim = grid.dim;
    let mut out = coeffs.clone();
    for tang in 0..grid.n_face() {
        for norm in 0..grid.n_norm() {
            let node = grid.idx(tang, norm);
            let y = grid.pos(tang, norm);
            let x = map.invert_at(&y)?;
            // sampled inputs at the preimage
            let mut g = vec![0.0; dim * dim];
            for c in 0..dim * dim {
                g[c] = sample_multilinear(grid, &coeffs.metric_inv, dim * dim, c, &x);
            }
            let mut j = vec![0.0; dim * dim];
            for c in 0..dim * dim {
                j[c] = sample_multilinear(grid, &map.jacobian, dim * dim, c, &x);
            }
            let mut a = vec![0.0; dim];
            for c in 0..dim {
                a[c] = sample_multilinear(grid, &coeffs.potential_a, dim, c, &x);
            }
            let v = sample_multilinear(grid, &coeffs.potential_v, 1, 0, &x);

            // g0 = J g J^T
            let mut g0 = vec![0.0; dim * dim];
            for r in 0..dim {
                for c in 0..dim {
                    let mut acc = 0.0;
                    for p in 0..dim {
                        for q in 0..dim {
                            acc += j[r * dim + p] * g[p * dim + q] * j[c * dim + q];
                        }
                    }
                    g0[r * dim + c] = acc;
                }
            }
            // symmetrize round-off
            for r in 0..dim {
                for c in (r + 1)..dim {
                    let s = 0.5 * (g0[r * dim + c] + g0[c * dim + r]);
                    g0[r * dim + c] = s;
                    g0[c * dim + r] = s;
                }
            }
            // pullback relation A = J^T A0  =>  A0 = J^{-T} A
            let jinv = invert(&j, dim).ok_or_else(|| Error::Degenerate {
                node: vec![tang, norm],
                det: det(&j, dim),
            })?;
            let mut a0 = vec![0.0; dim];
            for r in 0..dim {
                let mut acc = 0.0;
                for c in 0..dim {
                    // (J^{-T})_{rc} = (J^{-1})_{cr}
                    acc += jinv[c * dim + r] * a[c];
                }
                a0[r] = acc;
            }
            out.metric_inv[node * dim * dim..(node + 1) * dim * dim].copy_from_slice(&g0);
            out.potential_a[node * dim..(node + 1) * dim].copy_from_slice(&a0);
            out.potential_v[node] = v;
        }
    }
    out.recompute_g_det()?;
    Ok(out)
}

/// Check every [`CoefficientField`] invariant node by node.
pub fn validate_coefficients(coeffs: &CoefficientField) -> ValidationReport {
    let dim = coeffs.grid.dim;
    let mut report = ValidationReport::default();
    for node in 0..coeffs.grid.n_nodes() {
        let m = coeffs.metric_at(node);
        if m.iter().any(|x| !x.is_finite()) {
            report.violations.push(Violation::NonFinite {
                node,
                what: "metric",
            });
            continue;
        }
        if dim == 2 {
            let delta = (m[1] - m[2]).abs();
            if delta > 0.0 {
                report.violations.push(Violation::Asymmetric { node, delta });
            }
        }
        let lo = min_eig(m, dim);
        if !(lo > 0.0) {
            report
                .violations
                .push(Violation::NotPositiveDefinite { node, min_eig: lo });
        } else {
            let expect = 1.0 / det(m, dim);
            let delta = (coeffs.g_det[node] - expect).abs();
            if delta > 1e-12 * expect.abs().max(1.0) {
                report.violations.push(Violation::DetInconsistent { node, delta });
            }
        }
        if coeffs.a_at(node).iter().any(|x| !x.is_finite())
            || !coeffs.potential_v[node].is_finite()
        {
            report.violations.push(Violation::NonFinite {
                node,
                what: "potential",
            });
        }
    }
    report
}

/// Smooth compactly supported bump `amp * (1 - r^2)^3` on `r < 1` with
/// `r = |x - center| / radius` componentwise-scaled; 0 outside.
pub fn poly_bump(x: f64, center: f64, radius: f64) -> f64 {
    let r = (x - center) / radius;
    let s = 1.0 - r * r;
    if s <= 0.0 {
        0.0
    } else {
        s * s * s
    }
}

/// Derivative of [`poly_bump`] in x.
pub fn poly_bump_deriv(x: f64, center: f64, radius: f64) -> f64 {
    let r = (x - center) / radius;
    let s = 1.0 - r * r;
    if s <= 0.0 {
        0.0
    } else {
        -6.0 * r * s * s / radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(&[17, 9], &[0.125, 0.125], 0.05, 1.0).unwrap()
    }

    #[test]
    fn validate_flags_indefinite_node() {
        let g = grid();
        let mut c = CoefficientField::flat(&g).unwrap();
        // eigenvalues 3 and -1
        let node = g.idx(4, 4);
        c.metric_inv[node * 4..node * 4 + 4].copy_from_slice(&[1.0, 2.0, 2.0, 1.0]);
        let report = validate_coefficients(&c);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NotPositiveDefinite { node: n, .. } if *n == node)));
    }

    #[test]
    fn validate_flags_asymmetry() {
        let g = grid();
        let mut c = CoefficientField::flat(&g).unwrap();
        let node = g.idx(2, 3);
        c.metric_inv[node * 4 + 1] = 0.3;
        let report = validate_coefficients(&c);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Asymmetric { node: n, .. } if *n == node)));
    }

    #[test]
    fn clean_flat_field() {
        let c = CoefficientField::flat(&grid()).unwrap();
        assert!(validate_coefficients(&c).is_clean());
    }

    #[test]
    fn gauge_identity_and_linear() {
        let g = grid();
        let c = CoefficientField::from_functions(
            &g,
            |_| identity_matrix(2),
            |_| vec![0.3, -0.1],
            |_| 0.0,
        )
        .unwrap();
        let zero = GaugeFunction::from_function(&g, |_| 0.0);
        let same = apply_gauge(&c, &zero).unwrap();
        assert_eq!(same, c);

        // psi linear in the normal coordinate: A_n shifts by the slope
        // exactly at every node (including faces: the stencil is exact on
        // linear data).
        let alpha = 0.7;
        let lin = GaugeFunction::from_function(&g, |p| alpha * p[1]);
        let shifted = apply_gauge(&c, &lin).unwrap();
        for node in 0..g.n_nodes() {
            assert!((shifted.potential_a[node * 2 + 1] - (-0.1 + alpha)).abs() < 1e-12);
            assert!((shifted.potential_a[node * 2] - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn gauge_requires_vanishing_on_face() {
        let g = grid();
        let c = CoefficientField::flat(&g).unwrap();
        let bad = GaugeFunction::from_function(&g, |_| 1.0);
        assert!(apply_gauge(&c, &bad).is_err());
    }

    #[test]
    fn gauge_is_additive() {
        let g = grid();
        let c = CoefficientField::flat(&g).unwrap();
        let p1 = GaugeFunction::from_function(&g, |p| p[1] * p[1] * (1.0 + p[0]));
        let p2 = GaugeFunction::from_function(&g, |p| p[1] * (p[0] - 0.4).sin());
        let sum = GaugeFunction::from_function(&g, |p| {
            p[1] * p[1] * (1.0 + p[0]) + p[1] * (p[0] - 0.4).sin()
        });
        let a = apply_gauge(&apply_gauge(&c, &p1).unwrap(), &p2).unwrap();
        let b = apply_gauge(&c, &sum).unwrap();
        for (x, y) in a.potential_a.iter().zip(&b.potential_a) {
            assert!((x - y).abs() < 1e-11);
        }
    }

    #[test]
    fn quadrature_gauge_kills_normal_component() {
        // psi(y) = -int_0^{y_n} A_n(y', r) dr  (trapezoid on a fine lattice)
        // should leave |A_n| = O(h^2) on a 32-node 1D grid.
        let g = GridSpec::new(&[33], &[1.0 / 32.0], 0.01, 1.0).unwrap();
        let a_n = |x: f64| 0.5 + 0.3 * (3.0 * x).sin();
        let c = CoefficientField::from_functions(&g, |_| vec![1.0], |p| vec![a_n(p[0])], |_| 0.0)
            .unwrap();
        let quad = |y: f64| {
            // composite trapezoid of -A_n from 0 to y
            let steps = 2048;
            let h = y / steps as f64;
            let mut acc = 0.0;
            for i in 0..steps {
                acc += 0.5 * h * (a_n(i as f64 * h) + a_n((i + 1) as f64 * h));
            }
            -acc
        };
        let psi = GaugeFunction::from_function(&g, |p| quad(p[0]));
        let out = apply_gauge(&c, &psi).unwrap();
        let h = g.h_norm();
        let worst = out
            .potential_a
            .iter()
            .cloned()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst < 4.0 * h * h, "residual A_n = {worst:.3e}");
    }

    #[test]
    fn diffeo_identity_roundtrip() {
        let g = grid();
        let c = CoefficientField::from_functions(
            &g,
            |p| vec![1.0 + 0.1 * p[0], 0.0, 0.0, 1.0],
            |p| vec![p[1], 0.2],
            |p| p[0] * p[1],
        )
        .unwrap();
        let id = DiffeoMap::identity(&g);
        let out = apply_diffeomorphism(&c, &id).unwrap();
        for (x, y) in out.metric_inv.iter().zip(&c.metric_inv) {
            assert!((x - y).abs() < 1e-10);
        }
        for (x, y) in out.potential_v.iter().zip(&c.potential_v) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn diffeo_linear_map_constant_metric() {
        // y = M x with constant M close to the identity fixing x_n = 0 is not
        // boundary-fixing in general, so build it on the half-space style map
        // y1 = x1 + 0.2 x_n, y_n = x_n. Then M = [[1, 0.2], [0, 1]] and the
        // transformed constant metric must equal M G M^T; constant A maps to
        // M^{-T} A.
        let g = grid();
        let gm = vec![1.3, 0.1, 0.1, 0.9];
        let a = vec![0.4, -0.2];
        let c = CoefficientField::from_functions(&g, |_| gm.clone(), |_| a.clone(), |_| 1.0)
            .unwrap();
        let m = [1.0, 0.2, 0.0, 1.0];
        let map = DiffeoMap::from_functions(
            &g,
            |p| vec![p[0] + 0.2 * p[1], p[1]],
            |_| m.to_vec(),
        );
        let out = apply_diffeomorphism(&c, &map).unwrap();
        // oracle: direct 2x2 products
        let mgmt = [
            m[0] * (gm[0] * m[0] + gm[1] * m[1]) + m[1] * (gm[2] * m[0] + gm[3] * m[1]),
            m[0] * (gm[0] * m[2] + gm[1] * m[3]) + m[1] * (gm[2] * m[2] + gm[3] * m[3]),
            m[2] * (gm[0] * m[0] + gm[1] * m[1]) + m[3] * (gm[2] * m[0] + gm[3] * m[1]),
            m[2] * (gm[0] * m[2] + gm[1] * m[3]) + m[3] * (gm[2] * m[2] + gm[3] * m[3]),
        ];
        // M^{-T} A with M^{-1} = [[1, -0.2], [0, 1]]
        let a0 = [a[0], -0.2 * a[0] + a[1]];
        // check at an interior node unaffected by box clamping
        let node = g.idx(8, 3);
        for k in 0..4 {
            assert!(
                (out.metric_inv[node * 4 + k] - mgmt[k]).abs() < 1e-9,
                "metric entry {k}"
            );
        }
        for k in 0..2 {
            assert!((out.potential_a[node * 2 + k] - a0[k]).abs() < 1e-9);
        }
    }
}
