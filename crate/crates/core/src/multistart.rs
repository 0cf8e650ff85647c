//! Start generation and deduplication for the multiplicity experiments: the
//! translated-profile initializer, the cutoff/rescale construction used for
//! the large-ball limit, and multistart with solution clustering.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{ChargeSpec, TOL_ZERO};
use crate::grid::{Domain, Grid, MaskedGrid, RadialGrid};
use crate::potential::Potential;
use crate::solver::{self, RadialSolve, SolveOptions, SolveResult};

/// Places the radial profile at `y`: samples `u_profile(|x - y|)` on the
/// domain grid and extends by zero where the profile ends. `y` must lie in
/// the eroded set D^- and the profile should live on `B_{2r}` with the same
/// charge data.
pub fn phi_epsilon(
    domain: &Domain,
    y: [f64; 2],
    profile: &RadialSolve,
    grid: &MaskedGrid,
) -> Result<Vec<f64>> {
    if !domain.shape.contains_eroded(y, 2.0 * domain.r) {
        return Err(Error::StartOutsideDomain { x: y[0], y: y[1] });
    }
    Ok((0..grid.len())
        .map(|k| {
            let p = grid.position(k);
            let d = ((p[0] - y[0]).powi(2) + (p[1] - y[1]).powi(2)).sqrt();
            profile.sample(d)
        })
        .collect())
}

/// The cutoff/rescale construction: `u_rho = t * χ_rho * u_profile` on the
/// target ball, with the piecewise-linear ramp `χ_rho` equal to 1 on
/// `[0, rho/2]`, 0 beyond `rho`, and `t` restoring the charge
/// `ω̄ ∫ (t w)² = sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffField {
    pub u: Vec<f64>,
    pub t: f64,
}

pub fn cutoff_rescale(
    profile: &RadialSolve,
    sigma: f64,
    target: &RadialGrid,
) -> Result<CutoffField> {
    let rho = target.rho();
    let ramp = |r: f64| {
        if r <= rho / 2.0 {
            1.0
        } else if r >= rho {
            0.0
        } else {
            (rho - r) / (rho / 2.0)
        }
    };
    let w: Vec<f64> = (0..target.len())
        .map(|k| {
            let r = target.radius(k);
            ramp(r) * profile.sample(r)
        })
        .collect();
    let wrapped = Grid::Radial(target.clone());
    let mass = wrapped.l2_sq(&w)?;
    if mass <= TOL_ZERO {
        return Err(Error::DegenerateField { tol: TOL_ZERO });
    }
    let omega_bar = profile.result.state.omega;
    if !(omega_bar > 0.0) {
        return Err(Error::invalid("profile", "profile frequency must be positive"));
    }
    let t = (sigma / (omega_bar * mass)).sqrt();
    Ok(CutoffField {
        u: w.into_iter().map(|v| t * v).collect(),
        t,
    })
}

/// One multistart run: where it started and what it found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartRun {
    pub start: [f64; 2],
    pub result: SolveResult,
}

/// All runs plus the indices of the distinct converged solutions
/// (class representatives, sorted by energy).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultistartReport {
    pub runs: Vec<StartRun>,
    pub distinct: Vec<usize>,
    /// Grid spacing the barycenter dedup radius was scaled by.
    pub h: f64,
}

/// Runs the descent from `phi_epsilon(y)` for every start and deduplicates:
/// two converged solutions are the same class when their energies agree to
/// `dedup_energy_rel` relatively and their barycenters are within
/// `dedup_bary_factor * h`. Non-converged runs are kept in `runs` but are
/// never class representatives.
pub fn multistart(
    domain: &Domain,
    spec: &ChargeSpec,
    pot: &Potential,
    opts: &SolveOptions,
    starts: &[[f64; 2]],
    h: f64,
) -> Result<MultistartReport> {
    if starts.is_empty() {
        return Err(Error::invalid("starts", "need at least one start point"));
    }
    for &y in starts {
        if !domain.shape.contains_eroded(y, 2.0 * domain.r) {
            return Err(Error::StartOutsideDomain { x: y[0], y: y[1] });
        }
    }
    let grid = domain.grid(h)?;
    let profile = profile_for_starts(domain, spec, pot, opts, h)?;
    let wrapped = Grid::Masked(grid.clone());
    let runs: Vec<StartRun> = starts
        .par_iter()
        .map(|&y| -> Result<StartRun> {
            let init = phi_epsilon(domain, y, &profile, &grid)?;
            let result = solver::minimize_reduced(&init, &wrapped, spec, pot, opts)?;
            Ok(StartRun { start: y, result })
        })
        .collect::<Result<_>>()?;
    let distinct = dedup(&runs, opts, h);
    Ok(MultistartReport { runs, distinct, h })
}

/// The shared radial profile on `B_{2r}` used to seed every start.
pub fn profile_for_starts(
    domain: &Domain,
    spec: &ChargeSpec,
    pot: &Potential,
    opts: &SolveOptions,
    h: f64,
) -> Result<RadialSolve> {
    let rho = 2.0 * domain.r;
    let n = ((8.0 * rho / h).ceil() as usize).max(128);
    solver::minimize_radial(2, rho, spec.eps, spec.sigma, n, pot, opts)
}

fn dedup(runs: &[StartRun], opts: &SolveOptions, h: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..runs.len())
        .filter(|&k| runs[k].result.converged)
        .collect();
    order.sort_by(|&a, &b| {
        runs[a]
            .result
            .energy
            .total_cmp(&runs[b].result.energy)
            .then(a.cmp(&b))
    });
    let bary_tol = opts.dedup_bary_factor * h;
    let mut classes: Vec<usize> = Vec::new();
    for &k in &order {
        let r = &runs[k].result;
        let is_new = classes.iter().all(|&c| {
            let rc = &runs[c].result;
            let same_energy =
                (r.energy - rc.energy).abs() <= opts.dedup_energy_rel * r.energy.abs().max(rc.energy.abs());
            let db = ((r.barycenter[0] - rc.barycenter[0]).powi(2)
                + (r.barycenter[1] - rc.barycenter[1]).powi(2))
            .sqrt();
            !(same_energy && db <= bary_tol)
        });
        if is_new {
            classes.push(k);
        }
    }
    classes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional;
    use crate::grid::Shape;

    fn ball_domain() -> Domain {
        Domain::new(
            Shape::Ball {
                center: [0.0, 0.0],
                rho: 1.0,
            },
            0.2,
            1,
        )
        .unwrap()
    }

    #[test]
    fn phi_centers_the_profile() {
        let domain = ball_domain();
        let spec = ChargeSpec::new(2.0, 0.4, 2).unwrap();
        let pot = Potential::default();
        let opts = SolveOptions::default();
        let h = 1.0 / 24.0;
        let grid = domain.grid(h).unwrap();
        let profile = profile_for_starts(&domain, &spec, &pot, &opts, h).unwrap();
        assert!(profile.result.converged);
        let y = [0.25, -0.1];
        let init = phi_epsilon(&domain, y, &profile, &grid).unwrap();
        let wrapped = Grid::Masked(grid.clone());
        let beta = functional::barycenter(&init, &wrapped).unwrap();
        let miss = ((beta[0] - y[0]).powi(2) + (beta[1] - y[1]).powi(2)).sqrt();
        assert!(miss <= h, "beta {beta:?} vs start {y:?}");

        // charge of the sampled profile matches σ εᴺ to quadrature accuracy,
        // and exactly after re-projection
        let c = spec.charge();
        let carried =
            functional::charge(&init, profile.result.state.omega, &wrapped).unwrap();
        assert!(
            (carried - c).abs() <= 0.05 * c,
            "sampled charge {carried} vs {c}"
        );
        let omega = functional::omega_from_u(&init, &wrapped, c).unwrap();
        let exact = functional::charge(&init, omega, &wrapped).unwrap();
        assert!((exact - c).abs() <= 1e-10 * c);
    }

    #[test]
    fn phi_rejects_start_outside_dminus() {
        let domain = ball_domain();
        let spec = ChargeSpec::new(2.0, 0.4, 2).unwrap();
        let pot = Potential::default();
        let opts = SolveOptions::default();
        let h = 1.0 / 16.0;
        let grid = domain.grid(h).unwrap();
        let profile = profile_for_starts(&domain, &spec, &pot, &opts, h).unwrap();
        // D^- is the ball of radius 1 - 2*0.2 = 0.6
        assert!(phi_epsilon(&domain, [0.8, 0.0], &profile, &grid).is_err());
    }

    #[test]
    fn multistart_requires_starts() {
        let domain = ball_domain();
        let spec = ChargeSpec::new(2.0, 0.5, 2).unwrap();
        let pot = Potential::default();
        let opts = SolveOptions::default();
        assert!(multistart(&domain, &spec, &pot, &opts, &[], 0.1).is_err());
    }

    #[test]
    fn cutoff_inactive_when_ball_is_large() {
        // profile supported on B_2, target B_8: ramp is 1 on the support, so
        // t = 1 up to the charge-projection roundoff and u is reproduced.
        let pot = Potential::default();
        let opts = SolveOptions::default();
        let profile = solver::minimize_radial(2, 2.0, 1.0, 2.0, 64, &pot, &opts).unwrap();
        let target = RadialGrid::build(2, 8.0, 256).unwrap();
        let cut = cutoff_rescale(&profile, 2.0, &target).unwrap();
        assert!((cut.t - 1.0).abs() < 1e-9, "t = {}", cut.t);
        for k in 0..target.len() {
            let r = target.radius(k);
            let expect = profile.sample(r);
            assert!((cut.u[k] - cut.t * expect).abs() <= 1e-12);
        }
    }
}
