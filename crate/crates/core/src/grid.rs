//! Uniform one-dimensional grids for the truncated domains.
//!
//! Two geometries cover every problem in this crate: an interval (a, b)
//! with Dirichlet ends, and a radial ball of radius R in ambient dimension
//! n sampled along r in [0, R]. Radial integration carries the surface
//! measure factor omega_{n-1} r^{n-1}, so a nodal field f integrates as
//!
//! ```text
//!   integral ~ sum_i w_i f(x_i),   w_i = (trapezoid weight) * omega_{n-1} x_i^{n-1}
//! ```
//!
//! with the omega factor equal to 1 on intervals. The origin of a radial
//! grid is a regular node (the operator modules treat it by symmetry), and
//! only the outer radius is a Dirichlet boundary.

use crate::error::{Error, Result};

/// Geometry of the truncated domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// Interval (x_lo, x_hi) with Dirichlet conditions at both ends.
    Interval,
    /// Ball of radius x_hi in dimension `n`, sampled along the radius.
    /// Dirichlet condition at r = x_hi only.
    Radial,
}

/// Uniform grid with trapezoid quadrature weights.
#[derive(Debug, Clone)]
pub struct Grid {
    pub kind: GridKind,
    /// Ambient dimension: 1 for intervals, n >= 1 for radial balls.
    pub dimension: usize,
    pub x_lo: f64,
    pub x_hi: f64,
    pub node_count: usize,
    /// Node spacing h = (x_hi - x_lo) / (node_count - 1).
    pub spacing: f64,
    /// Quadrature weight per node, surface factor included.
    pub weights: Vec<f64>,
}

/// Surface area of the unit sphere S^{n-1} in R^n.
///
/// Uses the recursion s(n) = 2 pi / (n - 2) * s(n - 2) seeded with
/// s(1) = 2 and s(2) = 2 pi, which avoids gamma-function evaluation.
pub fn unit_sphere_area(n: usize) -> f64 {
    match n {
        0 => panic!("unit_sphere_area: dimension must be >= 1"),
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        _ => 2.0 * std::f64::consts::PI / (n as f64 - 2.0) * unit_sphere_area(n - 2),
    }
}

/// Builds an interval grid on (x_lo, x_hi) with `node_count` nodes.
pub fn build_interval_grid(x_lo: f64, x_hi: f64, node_count: usize) -> Result<Grid> {
    if !(x_hi > x_lo) || !x_lo.is_finite() || !x_hi.is_finite() {
        return Err(Error::invalid(format!(
            "interval ({x_lo}, {x_hi}) is empty or not finite"
        )));
    }
    if node_count < 3 {
        return Err(Error::invalid(format!(
            "node_count = {node_count}, need at least 3 nodes"
        )));
    }
    let h = (x_hi - x_lo) / (node_count - 1) as f64;
    let mut weights = vec![h; node_count];
    weights[0] = 0.5 * h;
    weights[node_count - 1] = 0.5 * h;
    Ok(Grid {
        kind: GridKind::Interval,
        dimension: 1,
        x_lo,
        x_hi,
        node_count,
        spacing: h,
        weights,
    })
}

/// Builds a radial grid on [0, radius] for a ball in dimension `dimension`.
///
/// The weight at node i is (trapezoid weight) * omega_{n-1} r_i^{n-1}; for
/// n >= 2 the origin therefore carries weight zero, which is the correct
/// trapezoid rule for the integrand f(r) r^{n-1}.
pub fn build_radial_grid(dimension: usize, radius: f64, node_count: usize) -> Result<Grid> {
    if dimension < 1 {
        return Err(Error::invalid("radial grid needs dimension >= 1"));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::invalid(format!("radius = {radius} must be positive")));
    }
    if node_count < 3 {
        return Err(Error::invalid(format!(
            "node_count = {node_count}, need at least 3 nodes"
        )));
    }
    let h = radius / (node_count - 1) as f64;
    let omega = unit_sphere_area(dimension);
    let weights = (0..node_count)
        .map(|i| {
            let trap = if i == 0 || i == node_count - 1 { 0.5 * h } else { h };
            let r = i as f64 * h;
            trap * omega * r.powi(dimension as i32 - 1)
        })
        .collect();
    Ok(Grid {
        kind: GridKind::Radial,
        dimension,
        x_lo: 0.0,
        x_hi: radius,
        node_count,
        spacing: h,
        weights,
    })
}

impl Grid {
    /// Coordinate of node i.
    pub fn node(&self, i: usize) -> f64 {
        self.x_lo + i as f64 * self.spacing
    }

    /// All node coordinates, boundary included.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.node_count).map(|i| self.node(i)).collect()
    }

    /// Index range of the unknowns: Dirichlet boundary nodes are excluded,
    /// the radial origin is not a boundary.
    pub fn interior_range(&self) -> std::ops::Range<usize> {
        match self.kind {
            GridKind::Interval => 1..self.node_count - 1,
            GridKind::Radial => 0..self.node_count - 1,
        }
    }

    pub fn interior_count(&self) -> usize {
        self.interior_range().len()
    }

    /// Coordinates of the interior nodes, aligned with operator indexing.
    pub fn interior_nodes(&self) -> Vec<f64> {
        self.interior_range().map(|i| self.node(i)).collect()
    }

    /// Quadrature weights restricted to the interior nodes.
    pub fn interior_weights(&self) -> &[f64] {
        &self.weights[self.interior_range()]
    }

    /// Trapezoid quadrature of a field sampled on all nodes.
    pub fn quadrature(&self, field: &[f64]) -> Result<f64> {
        if field.len() != self.node_count {
            return Err(Error::DimensionMismatch {
                expected: self.node_count,
                got: field.len(),
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(field)
            .map(|(w, f)| w * f)
            .sum())
    }

    /// Weighted inner product of two interior fields.
    pub fn inner_interior(&self, f: &[f64], g: &[f64]) -> f64 {
        self.interior_weights()
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    /// L2 norm of an interior field under the grid quadrature.
    pub fn l2_norm_interior(&self, f: &[f64]) -> f64 {
        self.inner_interior(f, f).max(0.0).sqrt()
    }

    /// L1 norm of an interior field under the grid quadrature.
    pub fn l1_norm_interior(&self, f: &[f64]) -> f64 {
        self.interior_weights()
            .iter()
            .zip(f)
            .map(|(w, a)| w * a.abs())
            .sum()
    }

    /// Measure of the domain (length, or ball volume).
    pub fn measure(&self) -> f64 {
        match self.kind {
            GridKind::Interval => self.x_hi - self.x_lo,
            GridKind::Radial => {
                unit_sphere_area(self.dimension) * self.x_hi.powi(self.dimension as i32)
                    / self.dimension as f64
            }
        }
    }

    /// Extends an interior field by the implicit zero boundary values.
    pub fn embed_interior(&self, f: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.node_count];
        for (k, i) in self.interior_range().enumerate() {
            full[i] = f[k];
        }
        full
    }
}
