//! The physics of the problem: standing-wave energy and charge, the
//! constraint-reduced functional `J` and its quadrature-exact gradient, the
//! barycenter map, and the PDE residual of the stationary equation
//! `-ε²Δu + W'(u) = ω²u`.
//!
//! The charge constraint `ω ∫u² = C` determines `ω = C/∫u²`, which turns the
//! manifold problem into unconstrained minimization of
//! `J(u) = ∫ ε²|∇u|²/2 + W(u) dx + C²/(2∫u²)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, MaskedGrid};
use crate::potential::Potential;

/// Below this L2 mass a field cannot carry charge.
pub const TOL_ZERO: f64 = 1e-14;

/// Charge data: the density parameter σ, the semiclassical parameter ε and
/// the total charge `C = σ ε^N` they induce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargeSpec {
    pub sigma: f64,
    pub eps: f64,
    pub dim: u32,
}

impl ChargeSpec {
    pub fn new(sigma: f64, eps: f64, dim: u32) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::invalid("sigma", format!("must be positive, got {sigma}")));
        }
        if !(eps > 0.0) {
            return Err(Error::invalid("eps", format!("must be positive, got {eps}")));
        }
        Ok(ChargeSpec { sigma, eps, dim })
    }

    /// Total charge `C = σ ε^N`.
    pub fn charge(&self) -> f64 {
        self.sigma * self.eps.powi(self.dim as i32)
    }
}

/// A field with its temporal frequency; the pair `(u, ω)` lives on the
/// charge manifold once `ω` has been projected via [`omega_from_u`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub u: Vec<f64>,
    pub omega: f64,
}

/// Standing-wave charge `C = ω ∫ u²`.
pub fn charge(u: &[f64], omega: f64, grid: &Grid) -> Result<f64> {
    Ok(omega * grid.l2_sq(u)?)
}

/// The frequency the charge constraint forces: `ω = C / ∫u²`.
pub fn omega_from_u(u: &[f64], grid: &Grid, c: f64) -> Result<f64> {
    let m2 = grid.l2_sq(u)?;
    if m2 <= TOL_ZERO {
        return Err(Error::DegenerateField { tol: TOL_ZERO });
    }
    Ok(c / m2)
}

/// Standing-wave energy `E_ε(u,ω) = ∫ ε²|∇u|²/2 + W(u) + ω²u²/2 dx`.
pub fn energy(u: &[f64], omega: f64, eps: f64, grid: &Grid, pot: &Potential) -> Result<f64> {
    let kinetic = 0.5 * eps * eps * grid.dirichlet(u)?;
    let w_vals: Vec<f64> = u.iter().map(|&s| pot.eval_w(s)).collect();
    let potential = grid.integrate(&w_vals)?;
    let mass = grid.l2_sq(u)?;
    Ok(kinetic + potential + 0.5 * omega * omega * mass)
}

/// Reduced functional `J(u) = ∫ ε²|∇u|²/2 + W(u) dx + C²/(2∫u²)`; identical
/// to `energy(u, omega_from_u(u), ...)`.
pub fn reduced_energy(u: &[f64], grid: &Grid, spec: &ChargeSpec, pot: &Potential) -> Result<f64> {
    let m2 = grid.l2_sq(u)?;
    if m2 <= TOL_ZERO {
        return Err(Error::DegenerateField { tol: TOL_ZERO });
    }
    let c = spec.charge();
    let kinetic = 0.5 * spec.eps * spec.eps * grid.dirichlet(u)?;
    let w_vals: Vec<f64> = u.iter().map(|&s| pot.eval_w(s)).collect();
    let potential = grid.integrate(&w_vals)?;
    Ok(kinetic + potential + c * c / (2.0 * m2))
}

/// Gradient of `J` in the quadrature-weighted l2 metric:
/// `g = -ε²Δu + W'(u) - ω²u` with `ω = C/∫u²`. By construction
/// `<g, v>_quadrature = d/dt J(u + t v)|_0` for every nodal direction `v`.
pub fn reduced_gradient(
    u: &[f64],
    grid: &Grid,
    spec: &ChargeSpec,
    pot: &Potential,
) -> Result<Vec<f64>> {
    let m2 = grid.l2_sq(u)?;
    if m2 <= TOL_ZERO {
        return Err(Error::DegenerateField { tol: TOL_ZERO });
    }
    let omega = spec.charge() / m2;
    let omega2 = omega * omega;
    let eps2 = spec.eps * spec.eps;
    let lap = grid.laplacian(u)?;
    Ok(u.iter()
        .zip(&lap)
        .map(|(&ui, &li)| -eps2 * li + pot.eval_wprime(ui) - omega2 * ui)
        .collect())
}

/// Barycenter `β(u) = ∫ x |∇u|² / ∫ |∇u|²` with the gradient magnitude taken
/// per cell from forward differences and moments over cell centers.
pub fn barycenter(u: &[f64], grid: &Grid) -> Result<[f64; 2]> {
    match grid {
        Grid::Radial(g) => {
            // radially symmetric by construction: the barycenter is the center
            if g.dirichlet(u)? <= 0.0 {
                return Err(Error::DegenerateGradient);
            }
            Ok([0.0, 0.0])
        }
        Grid::Masked(g) => barycenter_masked(u, g),
    }
}

pub fn barycenter_masked(u: &[f64], g: &MaskedGrid) -> Result<[f64; 2]> {
    if u.len() != g.len() {
        return Err(Error::LengthMismatch {
            expected: g.len(),
            got: u.len(),
        });
    }
    let mut total = 0.0;
    let mut moment = [0.0, 0.0];
    for k in 0..g.len() {
        let gsq = g.forward_grad_sq(u, k);
        let p = g.position(k);
        total += gsq;
        moment[0] += p[0] * gsq;
        moment[1] += p[1] * gsq;
    }
    if total <= 0.0 {
        return Err(Error::DegenerateGradient);
    }
    Ok([moment[0] / total, moment[1] / total])
}

/// Relative PDE residual `‖-ε²Δu + W'(u) - ω²u‖ / max(1, ‖u‖)` in the
/// quadrature norm.
pub fn pde_residual(u: &[f64], omega: f64, eps: f64, grid: &Grid, pot: &Potential) -> Result<f64> {
    let lap = grid.laplacian(u)?;
    let eps2 = eps * eps;
    let omega2 = omega * omega;
    let res: Vec<f64> = u
        .iter()
        .zip(&lap)
        .map(|(&ui, &li)| -eps2 * li + pot.eval_wprime(ui) - omega2 * ui)
        .collect();
    Ok(grid.norm(&res)? / grid.norm(u)?.max(1.0))
}
