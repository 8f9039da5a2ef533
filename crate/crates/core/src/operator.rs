//! Dirichlet operators L = -Delta + V assembled on the grids of [`crate::grid`].
//!
//! Unknowns live on interior nodes; Dirichlet boundary values are implicit
//! zeros, which keeps every operator square. Radial Laplacians are assembled
//! in conservative flux form: with cell volumes D_i and face areas r^{n-1}
//! the stiffness matrix S is symmetric tridiagonal, the nodal action is
//! D^{-1} S, and the stored matrix is the similarity transform
//!
//! ```text
//!   M = D^{-1/2} S D^{-1/2}
//! ```
//!
//! which is symmetric entry by entry and has the same spectrum as the nodal
//! operator. At the origin the flux form reduces exactly to the symmetric
//! limit -n u''(0) ~ (2n/h^2)(u_0 - u_1); on intervals D is the constant h
//! and M is the familiar (-1, 2, -1)/h^2 stencil. Potentials add to the
//! diagonal in either frame.

use crate::error::{Error, Result};
use crate::grid::{unit_sphere_area, Grid, GridKind};

/// Dirichlet marker. Only homogeneous Dirichlet conditions are supported;
/// the variant exists so serialized run metadata names the condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    Dirichlet,
}

/// Bounded potential sampled on interior nodes.
#[derive(Debug, Clone)]
pub struct PotentialField {
    pub values: Vec<f64>,
    /// Sup norm of the samples, computed at construction.
    pub sup_norm: f64,
}

impl PotentialField {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("potential contains non-finite samples"));
        }
        let sup_norm = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(PotentialField { values, sup_norm })
    }

    pub fn constant(grid: &Grid, value: f64) -> Result<Self> {
        Self::from_values(vec![value; grid.interior_count()])
    }
}

/// Symmetric tridiagonal operator in the mass-weighted frame.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    dim: usize,
    diag: Vec<f64>,
    /// Off-diagonal band, `off[i]` couples unknowns i and i+1.
    off: Vec<f64>,
    /// Positive frame weights (cell volumes; h on intervals; 1 for custom
    /// matrices). The nodal action of the operator is D^{-1/2} M D^{1/2}.
    mass: Vec<f64>,
    sqrt_mass: Vec<f64>,
    /// Grid quadrature weights on the interior nodes, used to normalize
    /// eigenfunctions. Coincides with `mass` up to O(h^2).
    quad: Vec<f64>,
    /// Nodal coupling coefficients to the low/high boundary node, used when
    /// applying the operator to a field with a nonzero boundary trace.
    bdry_lo: Option<f64>,
    bdry_hi: Option<f64>,
    /// Grid spacing (1 for custom matrices); used by time-step caps.
    pub spacing: f64,
    pub bc: BoundaryCondition,
}

/// Assembles -Delta with homogeneous Dirichlet conditions on `grid`.
pub fn assemble_dirichlet_laplacian(grid: &Grid) -> Result<OperatorMatrix> {
    let h = grid.spacing;
    let dim = grid.interior_count();
    if dim == 0 {
        return Err(Error::invalid("grid has no interior nodes"));
    }
    match grid.kind {
        GridKind::Interval => {
            // S = h * tridiag(-1, 2, -1)/h^2, D = h, so M is the plain stencil.
            let diag = vec![2.0 / (h * h); dim];
            let off = vec![-1.0 / (h * h); dim - 1];
            let mass = vec![h; dim];
            let sqrt_mass = vec![h.sqrt(); dim];
            Ok(OperatorMatrix {
                dim,
                diag,
                off,
                mass,
                sqrt_mass,
                quad: grid.interior_weights().to_vec(),
                bdry_lo: Some(-1.0 / (h * h)),
                bdry_hi: Some(-1.0 / (h * h)),
                spacing: h,
                bc: BoundaryCondition::Dirichlet,
            })
        }
        GridKind::Radial => {
            let n = grid.dimension as f64;
            let omega = unit_sphere_area(grid.dimension);
            // Face area omega * r^{n-1} at cell face i+1/2, cell volume
            // omega * (r_{i+1/2}^n - r_{i-1/2}^n)/n, with r_{-1/2} := 0.
            let face = |i: usize| -> f64 {
                let r = (i as f64 + 0.5) * h;
                omega * r.powf(n - 1.0)
            };
            let cell = |i: usize| -> f64 {
                let rp = (i as f64 + 0.5) * h;
                let rm = if i == 0 { 0.0 } else { (i as f64 - 0.5) * h };
                omega * (rp.powf(n) - rm.powf(n)) / n
            };
            let mass: Vec<f64> = (0..dim).map(cell).collect();
            let sqrt_mass: Vec<f64> = mass.iter().map(|m| m.sqrt()).collect();
            // Stiffness: S_ii sums the face conductances, the last interior
            // node keeps its conductance to the Dirichlet boundary.
            let mut diag = vec![0.0; dim];
            let mut off = vec![0.0; dim.saturating_sub(1)];
            for i in 0..dim {
                let right = face(i) / h;
                let left = if i == 0 { 0.0 } else { face(i - 1) / h };
                diag[i] = (left + right) / mass[i];
                if i + 1 < dim {
                    off[i] = -(face(i) / h) / (sqrt_mass[i] * sqrt_mass[i + 1]);
                }
            }
            let bdry_hi = Some(-(face(dim - 1) / h) / mass[dim - 1]);
            Ok(OperatorMatrix {
                dim,
                diag,
                off,
                mass,
                sqrt_mass,
                quad: grid.interior_weights().to_vec(),
                bdry_lo: None,
                bdry_hi,
                spacing: h,
                bc: BoundaryCondition::Dirichlet,
            })
        }
    }
}

/// Returns op + diag(V). The potential adds to the diagonal in both the
/// nodal and the mass-weighted frame, so symmetry is preserved exactly.
pub fn add_potential(op: &OperatorMatrix, pot: &PotentialField) -> Result<OperatorMatrix> {
    if pot.values.len() != op.dim {
        return Err(Error::DimensionMismatch {
            expected: op.dim,
            got: pot.values.len(),
        });
    }
    let mut out = op.clone();
    for (d, v) in out.diag.iter_mut().zip(&pot.values) {
        *d += v;
    }
    Ok(out)
}

impl OperatorMatrix {
    /// Builds a custom symmetric tridiagonal operator (unit mass frame).
    pub fn from_tridiag(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        let dim = diag.len();
        if dim == 0 || off.len() + 1 != dim {
            return Err(Error::invalid(
                "tridiagonal operator needs len(off) = len(diag) - 1 >= 0",
            ));
        }
        Ok(OperatorMatrix {
            dim,
            diag,
            off,
            mass: vec![1.0; dim],
            sqrt_mass: vec![1.0; dim],
            quad: vec![1.0; dim],
            bdry_lo: None,
            bdry_hi: None,
            spacing: 1.0,
            bc: BoundaryCondition::Dirichlet,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Subtracts a nodal multiplier from the diagonal, as in the
    /// linearization L - f_u(x, v). Symmetry is untouched.
    pub fn subtract_diagonal(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: values.len(),
            });
        }
        for (d, v) in self.diag.iter_mut().zip(values) {
            *d -= v;
        }
        Ok(())
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    /// Quadrature weights aligned with the unknowns.
    pub fn quad_weights(&self) -> &[f64] {
        &self.quad
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Matrix entry (i, j); zero outside the tridiagonal band.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if i + 1 == j {
            self.off[i]
        } else if j + 1 == i {
            self.off[j]
        } else {
            0.0
        }
    }

    /// Plain matrix action y = M x in the symmetric frame.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.dim];
        for i in 0..self.dim {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < self.dim {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
        Ok(y)
    }

    /// Nodal action of the operator on an interior field with zero boundary
    /// trace: D^{-1/2} M D^{1/2} w. Coincides with `apply` on intervals.
    pub fn apply_nodal(&self, w: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: w.len(),
            });
        }
        let scaled: Vec<f64> = w
            .iter()
            .zip(&self.sqrt_mass)
            .map(|(v, s)| v * s)
            .collect();
        let mut y = self.apply(&scaled)?;
        for (v, s) in y.iter_mut().zip(&self.sqrt_mass) {
            *v /= s;
        }
        Ok(y)
    }

    /// Nodal action on a field sampled on all grid nodes, honoring its
    /// actual boundary samples instead of assuming zeros. Returns values on
    /// the interior nodes.
    pub fn apply_field(&self, grid: &Grid, full: &[f64]) -> Result<Vec<f64>> {
        if full.len() != grid.node_count {
            return Err(Error::DimensionMismatch {
                expected: grid.node_count,
                got: full.len(),
            });
        }
        let range = grid.interior_range();
        if range.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: range.len(),
            });
        }
        let interior = &full[range];
        let mut y = self.apply_nodal(interior)?;
        if let Some(c) = self.bdry_lo {
            y[0] += c * full[0];
        }
        if let Some(c) = self.bdry_hi {
            y[self.dim - 1] += c * full[grid.node_count - 1];
        }
        Ok(y)
    }

    /// Rayleigh quotient of a nodal trial field in the operator's own mass
    /// inner product: <S xi, xi> / <D xi, xi>. The principal eigenvalue is
    /// the exact minimum of this quotient over nonzero trials.
    pub fn rayleigh_nodal(&self, xi: &[f64]) -> Result<f64> {
        let ax = self.apply_nodal(xi)?;
        let num: f64 = xi
            .iter()
            .zip(ax.iter().zip(&self.mass))
            .map(|(x, (a, m))| x * a * m)
            .sum();
        let den: f64 = xi
            .iter()
            .zip(&self.mass)
            .map(|(x, m)| x * x * m)
            .sum();
        if den <= 0.0 {
            return Err(Error::invalid("rayleigh quotient of the zero field"));
        }
        Ok(num / den)
    }

    /// Power-iteration estimate of the largest-magnitude eigenvalue.
    /// Deterministic start vector; used for time-step caps, where a few
    /// percent of slack is absorbed by the CFL safety constant.
    pub fn lambda_max_estimate(&self, iterations: usize) -> f64 {
        let mut v: Vec<f64> = (0..self.dim)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } * (1.0 + 1e-3 * i as f64))
            .collect();
        let mut lam = 0.0;
        for _ in 0..iterations.max(1) {
            let w = self.apply(&v).expect("dimension fixed");
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            lam = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()
                / v.iter().map(|a| a * a).sum::<f64>();
            v = w.into_iter().map(|x| x / norm).collect();
        }
        lam.abs()
    }

    /// Gershgorin lower bound on the spectrum.
    pub fn gershgorin_lower(&self) -> f64 {
        (0..self.dim)
            .map(|i| {
                let mut radius = 0.0;
                if i > 0 {
                    radius += self.off[i - 1].abs();
                }
                if i + 1 < self.dim {
                    radius += self.off[i].abs();
                }
                self.diag[i] - radius
            })
            .fold(f64::INFINITY, f64::min)
    }
}
