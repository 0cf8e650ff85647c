//! Discrete geometries: radial grids on balls, masked Cartesian grids on
//! general 2-D domains, and the shape algebra that produces them.

pub mod masked;
pub mod radial;
pub mod shape;

pub use masked::MaskedGrid;
pub use radial::RadialGrid;
pub use shape::{Domain, Shape};

use crate::error::Result;

/// A discretized domain the functional and solver operate on.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Radial(RadialGrid),
    Masked(MaskedGrid),
}

impl Grid {
    /// Number of nodal degrees of freedom.
    pub fn len(&self) -> usize {
        match self {
            Grid::Radial(g) => g.len(),
            Grid::Masked(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Ambient dimension of the underlying domain.
    pub fn dim(&self) -> u32 {
        match self {
            Grid::Radial(g) => g.dim(),
            Grid::Masked(_) => 2,
        }
    }

    pub fn spacing(&self) -> f64 {
        match self {
            Grid::Radial(g) => g.spacing(),
            Grid::Masked(g) => g.spacing(),
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        match self {
            Grid::Radial(g) => g.weights().to_vec(),
            Grid::Masked(g) => vec![g.spacing() * g.spacing(); g.len()],
        }
    }

    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        match self {
            Grid::Radial(g) => g.integrate(f),
            Grid::Masked(g) => g.integrate(f),
        }
    }

    /// Quadrature of `u^2`.
    pub fn l2_sq(&self, u: &[f64]) -> Result<f64> {
        match self {
            Grid::Radial(g) => {
                g.integrate(u)?; // length check
                Ok(u.iter().zip(g.weights()).map(|(v, w)| v * v * w).sum())
            }
            Grid::Masked(g) => {
                let h2 = g.spacing() * g.spacing();
                g.integrate(u)?;
                Ok(u.iter().map(|v| v * v).sum::<f64>() * h2)
            }
        }
    }

    /// Quadrature-weighted inner product.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        match self {
            Grid::Radial(g) => {
                g.integrate(u)?;
                g.integrate(v)?;
                Ok(u.iter()
                    .zip(v)
                    .zip(g.weights())
                    .map(|((a, b), w)| a * b * w)
                    .sum())
            }
            Grid::Masked(g) => {
                g.integrate(u)?;
                g.integrate(v)?;
                let h2 = g.spacing() * g.spacing();
                Ok(u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() * h2)
            }
        }
    }

    /// Quadrature-weighted l2 norm (the L2 proxy used by the stop rule).
    pub fn norm(&self, u: &[f64]) -> Result<f64> {
        Ok(self.l2_sq(u)?.sqrt())
    }

    pub fn laplacian(&self, u: &[f64]) -> Result<Vec<f64>> {
        match self {
            Grid::Radial(g) => g.laplacian(u),
            Grid::Masked(g) => g.laplacian(u),
        }
    }

    /// Discrete `∫ |∇u|²`, exactly the quadratic form `<-Δu, u>` of the
    /// grid's Laplacian in its quadrature.
    pub fn dirichlet(&self, u: &[f64]) -> Result<f64> {
        match self {
            Grid::Radial(g) => g.dirichlet(u),
            Grid::Masked(g) => g.dirichlet(u),
        }
    }

    /// The associated bilinear form `∫ ∇u·∇v`.
    pub fn dirichlet_bilinear(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        match self {
            Grid::Radial(g) => g.dirichlet_bilinear(u, v),
            Grid::Masked(g) => g.dirichlet_bilinear(u, v),
        }
    }
}

impl From<RadialGrid> for Grid {
    fn from(g: RadialGrid) -> Self {
        Grid::Radial(g)
    }
}

impl From<MaskedGrid> for Grid {
    fn from(g: MaskedGrid) -> Self {
        Grid::Masked(g)
    }
}
