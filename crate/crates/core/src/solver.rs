//! Constrained minimization of the reduced energy by steepest descent with
//! Armijo backtracking, plus the barycenter-penalized variant that realizes
//! the pinned-barycenter levels m*.
//!
//! The descent direction is the negative quadrature-metric gradient, so the
//! stop rule `‖g‖ <= grad_tol` bounds the PDE residual of the returned state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{self, ChargeSpec, FieldState, TOL_ZERO};
use crate::grid::{Grid, MaskedGrid, RadialGrid};
use crate::potential::Potential;

/// Step sizes below this are numerically dead: the line search failed.
const STEP_FLOOR: f64 = 1e-18;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub step0: f64,
    /// Base weight of the barycenter penalty (0 selects the schedule default).
    pub penalty_weight: f64,
    /// Factor applied to the penalty weight on each escalation.
    pub penalty_growth: f64,
    pub seed: u64,
    /// Two solutions are the same class when their energies agree to this
    /// relative tolerance ...
    pub dedup_energy_rel: f64,
    /// ... and their barycenters are within this multiple of the grid spacing.
    pub dedup_bary_factor: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iters: 20_000,
            grad_tol: 1e-6,
            armijo_c: 1e-4,
            backtrack: 0.5,
            step0: 1.0,
            penalty_weight: 0.0,
            penalty_growth: 10.0,
            seed: 0,
            dedup_energy_rel: 1e-6,
            dedup_bary_factor: 2.0,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters", "must be positive"));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::invalid("grad_tol", "must be positive"));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(Error::invalid("armijo_c", "must lie in (0, 1)"));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::invalid("backtrack", "must lie in (0, 1)"));
        }
        if !(self.step0 > 0.0) {
            return Err(Error::invalid("step0", "must be positive"));
        }
        if !(self.penalty_weight >= 0.0) {
            return Err(Error::invalid("penalty_weight", "must be nonnegative"));
        }
        if !(self.penalty_growth > 1.0) {
            return Err(Error::invalid("penalty_growth", "must exceed 1"));
        }
        if !(self.dedup_energy_rel > 0.0) {
            return Err(Error::invalid("dedup_energy_rel", "must be positive"));
        }
        if !(self.dedup_bary_factor > 0.0) {
            return Err(Error::invalid("dedup_bary_factor", "must be positive"));
        }
        Ok(())
    }
}

/// A converged (or diagnosed) minimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub state: FieldState,
    /// Reduced energy of the state (penalty excluded for penalized solves).
    pub energy: f64,
    /// Relative residual of the first-order system the run minimized
    /// (for penalized solves this is the penalized gradient).
    pub residual: f64,
    pub barycenter: [f64; 2],
    /// Accepted descent steps.
    pub iters: usize,
    pub converged: bool,
    /// `(objective, gradient norm)` after each accepted step, including the
    /// initial point. For penalized solves, the last penalty stage only.
    pub history: Vec<(f64, f64)>,
}

/// Objective evaluated by the descent loop: the reduced energy, optionally
/// augmented by a barycenter penalty `λ |β(u) - target|²`.
struct Objective<'a> {
    grid: &'a Grid,
    spec: &'a ChargeSpec,
    pot: &'a Potential,
    penalty: Option<(f64, [f64; 2])>,
}

impl Objective<'_> {
    fn value(&self, u: &[f64]) -> Result<f64> {
        let mut v = functional::reduced_energy(u, self.grid, self.spec, self.pot)?;
        if let Some((lambda, target)) = self.penalty {
            let beta = functional::barycenter(u, self.grid)?;
            let dx = beta[0] - target[0];
            let dy = beta[1] - target[1];
            v += lambda * (dx * dx + dy * dy);
        }
        Ok(v)
    }

    fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut g = functional::reduced_gradient(u, self.grid, self.spec, self.pot)?;
        if let Some((lambda, target)) = self.penalty {
            let masked = match self.grid {
                Grid::Masked(m) => m,
                Grid::Radial(_) => {
                    return Err(Error::invalid(
                        "penalty",
                        "barycenter penalty needs a masked grid",
                    ))
                }
            };
            accumulate_penalty_gradient(u, masked, lambda, target, &mut g)?;
        }
        Ok(g)
    }
}

/// Adds the quadrature-metric gradient of `λ |β(u) - target|²` to `g`.
/// β is a ratio of forward-difference quadratic forms, so the chain rule
/// spreads each cell's moment defect onto the cell and its E/N neighbors.
fn accumulate_penalty_gradient(
    u: &[f64],
    g: &MaskedGrid,
    lambda: f64,
    target: [f64; 2],
    out: &mut [f64],
) -> Result<()> {
    let beta = functional::barycenter_masked(u, g)?;
    let h2 = g.spacing() * g.spacing();
    let mut total = 0.0;
    for k in 0..g.len() {
        total += g.forward_grad_sq(u, k);
    }
    // A_k = 2λ(β_k - T_k)/G in moment coordinates
    let a = [
        2.0 * lambda * (beta[0] - target[0]) / total,
        2.0 * lambda * (beta[1] - target[1]) / total,
    ];
    let outside = MaskedGrid::outside();
    // d g_k/du puts 2d/h² on the forward neighbor and the negative sum on k;
    // a further /h² (the node weight) lands the result in the quadrature metric.
    let scale = 2.0 / (h2 * h2);
    for k in 0..g.len() {
        let p = g.position(k);
        let q = a[0] * (p[0] - beta[0]) + a[1] * (p[1] - beta[1]);
        let nbr = g.neighbors(k);
        let de = if nbr[1] == outside { -u[k] } else { u[nbr[1]] - u[k] };
        let dn = if nbr[3] == outside { -u[k] } else { u[nbr[3]] - u[k] };
        let te = q * scale * de;
        let tn = q * scale * dn;
        out[k] -= te + tn;
        if nbr[1] != outside {
            out[nbr[1]] += te;
        }
        if nbr[3] != outside {
            out[nbr[3]] += tn;
        }
    }
    Ok(())
}

/// Steepest descent with Armijo backtracking on the reduced functional.
/// Stops when the quadrature-weighted gradient norm drops to `grad_tol`;
/// a stalled line search at machine-level steps returns `converged = false`.
pub fn minimize_reduced(
    init: &[f64],
    grid: &Grid,
    spec: &ChargeSpec,
    pot: &Potential,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    opts.validate()?;
    let obj = Objective {
        grid,
        spec,
        pot,
        penalty: None,
    };
    descend(init, grid, &obj, opts)
}

fn descend(
    init: &[f64],
    grid: &Grid,
    obj: &Objective<'_>,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    if grid.l2_sq(init)? <= TOL_ZERO {
        return Err(Error::DegenerateField { tol: TOL_ZERO });
    }
    let mut u = init.to_vec();
    let mut value = obj.value(&u)?;
    let mut history = Vec::new();
    let mut step = opts.step0;
    let mut iters = 0;
    let mut converged = false;
    let mut gnorm;
    let weights = grid.weights();
    // previous iterate and gradient for the Barzilai-Borwein step length
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    loop {
        let g = obj.gradient(&u)?;
        let gnorm_sq = grid.l2_sq(&g)?;
        gnorm = gnorm_sq.sqrt();
        history.push((value, gnorm));
        if gnorm <= opts.grad_tol {
            converged = true;
            break;
        }
        if iters >= opts.max_iters {
            break;
        }
        // The search direction is always -g; the trial step length follows
        // the Barzilai-Borwein spectral rule (in the quadrature metric) when
        // the local curvature estimate is positive, which beats the raw
        // gradient step by the grid stiffness ε²/h². Armijo backtracking
        // below keeps every accepted step a strict descent either way.
        if let Some((pu, pg)) = &prev {
            let mut s_dot_y = 0.0;
            let mut y_dot_y = 0.0;
            for k in 0..u.len() {
                let s = u[k] - pu[k];
                let y = g[k] - pg[k];
                s_dot_y += s * y * weights[k];
                y_dot_y += y * y * weights[k];
            }
            if s_dot_y > 0.0 && y_dot_y > 0.0 {
                step = (s_dot_y / y_dot_y).clamp(STEP_FLOOR, 1e8);
            } else {
                step /= opts.backtrack;
            }
        } else {
            step /= opts.backtrack;
        }
        let mut accepted = false;
        while step >= STEP_FLOOR {
            let trial: Vec<f64> = u.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            // a degenerate trial (mass collapsed) is treated as an ascent;
            // the strict `tv < value` guards against no-op accepts once the
            // Armijo margin underflows
            match obj.value(&trial) {
                Ok(tv) if tv <= value - opts.armijo_c * step * gnorm_sq && tv < value => {
                    prev = Some((std::mem::take(&mut u), g));
                    u = trial;
                    value = tv;
                    accepted = true;
                    break;
                }
                verdict => {
                    // shrink toward the parabolic fit through (0, value) with
                    // slope -|g|² and (step, tv); fall back to the plain
                    // factor when the fit is unusable
                    let shrink = match verdict {
                        Ok(tv) => {
                            let denom = tv - value + step * gnorm_sq;
                            if denom > 0.0 {
                                (0.5 * step * gnorm_sq / denom * step)
                                    .clamp(0.1 * step, opts.backtrack * step)
                            } else {
                                opts.backtrack * step
                            }
                        }
                        Err(_) => opts.backtrack * step,
                    };
                    step = shrink;
                }
            }
        }
        if !accepted {
            // no decrease found at machine-precision step size
            break;
        }
        iters += 1;
    }

    let omega = functional::omega_from_u(&u, grid, obj.spec.charge())?;
    let residual = gnorm / grid.norm(&u)?.max(1.0);
    let barycenter = functional::barycenter(&u, grid).unwrap_or([0.0, 0.0]);
    let energy = functional::reduced_energy(&u, grid, obj.spec, obj.pot)?;
    Ok(SolveResult {
        state: FieldState { u, omega },
        energy,
        residual,
        barycenter,
        iters,
        converged,
        history,
    })
}

/// A radial minimizer together with the grid it lives on.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSolve {
    pub grid: RadialGrid,
    pub result: SolveResult,
}

impl RadialSolve {
    /// Interpolated profile value at radius `r`.
    pub fn sample(&self, r: f64) -> f64 {
        self.grid.interp(&self.result.state.u, r)
    }
}

/// Smooth compactly supported default initializer
/// `u0(r) = A max(0, 1 - (r/(rho/2))²)²` with `A` normalizing `∫u0² = C`
/// so the initial frequency is 1.
pub fn radial_bump_init(grid: &RadialGrid, c: f64) -> Result<Vec<f64>> {
    let half = grid.rho() / 2.0;
    let shape: Vec<f64> = (0..grid.len())
        .map(|k| {
            let t = grid.radius(k) / half;
            (1.0 - t * t).max(0.0).powi(2)
        })
        .collect();
    let wrapped = Grid::Radial(grid.clone());
    let mass = wrapped.l2_sq(&shape)?;
    if mass <= TOL_ZERO {
        return Err(Error::DegenerateField { tol: TOL_ZERO });
    }
    let amp = (c / mass).sqrt();
    Ok(shape.into_iter().map(|s| amp * s).collect())
}

/// Solve the radial problem on the ball `B_rho` and report the level
/// `m(ε, ρ)` estimate; the level does not depend on the ball center, which
/// the radial formulation has no notion of.
pub fn minimize_radial(
    dim: u32,
    rho: f64,
    eps: f64,
    sigma: f64,
    n: usize,
    pot: &Potential,
    opts: &SolveOptions,
) -> Result<RadialSolve> {
    let grid = RadialGrid::build(dim, rho, n)?;
    let spec = ChargeSpec::new(sigma, eps, dim)?;
    let init = radial_bump_init(&grid, spec.charge())?;
    let wrapped = Grid::Radial(grid.clone());
    let result = minimize_reduced(&init, &wrapped, &spec, pot, opts)?;
    Ok(RadialSolve { grid, result })
}

/// Ring-shaped initializer symmetric about `target`, normalized to charge `C`.
fn ring_init(grid: &MaskedGrid, target: [f64; 2], c: f64) -> Result<Vec<f64>> {
    let mut dmin = f64::INFINITY;
    let mut dmax: f64 = 0.0;
    for k in 0..grid.len() {
        let p = grid.position(k);
        let d = ((p[0] - target[0]).powi(2) + (p[1] - target[1]).powi(2)).sqrt();
        dmin = dmin.min(d);
        dmax = dmax.max(d);
    }
    let mid = 0.5 * (dmin + dmax);
    let halfwidth = (0.5 * (dmax - dmin)).max(grid.spacing());
    let shape: Vec<f64> = (0..grid.len())
        .map(|k| {
            let p = grid.position(k);
            let d = ((p[0] - target[0]).powi(2) + (p[1] - target[1]).powi(2)).sqrt();
            let t = (d - mid) / halfwidth;
            (1.0 - t * t).max(0.0).powi(2)
        })
        .collect();
    let wrapped = Grid::Masked(grid.clone());
    let mass = wrapped.l2_sq(&shape)?;
    if mass <= TOL_ZERO {
        return Err(Error::DegenerateField { tol: TOL_ZERO });
    }
    let amp = (c / mass).sqrt();
    Ok(shape.into_iter().map(|s| amp * s).collect())
}

/// Minimize `J(u) + λ|β(u) - target|²`, escalating λ until the barycenter
/// sits within one grid spacing of the target (at most 10 escalations).
/// The reported energy excludes the penalty term.
pub fn minimize_with_barycenter(
    grid: &MaskedGrid,
    spec: &ChargeSpec,
    pot: &Potential,
    target: [f64; 2],
    opts: &SolveOptions,
) -> Result<SolveResult> {
    opts.validate()?;
    let wrapped = Grid::Masked(grid.clone());
    let h = grid.spacing();
    let mut lambda = if opts.penalty_weight > 0.0 {
        opts.penalty_weight
    } else {
        1.0
    };
    let mut u = ring_init(grid, target, spec.charge())?;
    let mut last = None;
    for _ in 0..=10 {
        let obj = Objective {
            grid: &wrapped,
            spec,
            pot,
            penalty: Some((lambda, target)),
        };
        let mut result = descend(&u, &wrapped, &obj, opts)?;
        result.energy = functional::reduced_energy(&result.state.u, &wrapped, spec, pot)?;
        let miss = ((result.barycenter[0] - target[0]).powi(2)
            + (result.barycenter[1] - target[1]).powi(2))
        .sqrt();
        if miss <= h {
            return Ok(result);
        }
        u = result.state.u.clone();
        last = Some(result);
        lambda *= opts.penalty_growth;
    }
    let mut result = last.expect("at least one penalty stage ran");
    result.converged = false;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Domain, Shape};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Smallest eigenvalue of the weighted tridiagonal `-Δ` by Sturm-sequence
    /// bisection; an oracle independent of the solver path.
    fn ground_eigenvalue_dim1(grid: &RadialGrid) -> f64 {
        let m = grid.len();
        let h = grid.spacing();
        let h2 = h * h;
        // row k: diag d_k, off-diagonal e (uniform in dim 1)
        let diag: Vec<f64> = (0..m)
            .map(|k| if k == 0 { 1.0 / h2 } else { 2.0 / h2 })
            .collect();
        let off = -1.0 / h2;
        // count eigenvalues below x via the Sturm sequence of T - xI
        let count_below = |x: f64| {
            let mut count = 0;
            let mut d = diag[0] - x;
            if d < 0.0 {
                count += 1;
            }
            for k in 1..m {
                d = diag[k] - x - off * off / d;
                if d < 0.0 {
                    count += 1;
                }
            }
            count
        };
        let mut lo = 0.0;
        let mut hi = 4.0 / h2;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if count_below(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn linear_problem_matches_rayleigh_minimum() {
        // a = b = 0: J(u) = ε²/2 <-Δu,u> + Ω²/2 ∫u² + C²/(2∫u²) has minimum
        // C sqrt(ε²λ₁ + Ω²) over the discrete space.
        let n = 128;
        let rho = 1.0;
        let eps = 0.5;
        let sigma = 2.0;
        let pot = Potential {
            quartic_coeff: 0.0,
            sextic_coeff: 0.0,
            ..Potential::default()
        };
        let opts = SolveOptions {
            grad_tol: 1e-9,
            max_iters: 200_000,
            ..SolveOptions::default()
        };
        let solve = minimize_radial(1, rho, eps, sigma, n, &pot, &opts).unwrap();
        assert!(solve.result.converged);
        let lambda1 = ground_eigenvalue_dim1(&solve.grid);
        let c = sigma * eps; // dim 1
        let expected = c * (eps * eps * lambda1 + 1.0).sqrt();
        assert!(
            (solve.result.energy - expected).abs() <= 1e-8 * expected,
            "energy {} vs oracle {expected}",
            solve.result.energy
        );
    }

    #[test]
    fn restart_from_minimizer_is_immediate() {
        let pot = Potential::default();
        let opts = SolveOptions::default();
        let solve = minimize_radial(2, 4.0, 1.0, 5.0, 64, &pot, &opts).unwrap();
        assert!(solve.result.converged);
        let grid = Grid::Radial(solve.grid.clone());
        let spec = ChargeSpec::new(5.0, 1.0, 2).unwrap();
        let again = minimize_reduced(&solve.result.state.u, &grid, &spec, &pot, &opts).unwrap();
        assert!(again.iters <= 1);
        assert!((again.energy - solve.result.energy).abs() <= 1e-9 * solve.result.energy);
    }

    #[test]
    fn descent_is_monotone_and_charge_exact() {
        let pot = Potential::default();
        let opts = SolveOptions::default();
        let solve = minimize_radial(2, 6.0, 1.0, 5.0, 96, &pot, &opts).unwrap();
        let result = &solve.result;
        assert!(result.converged);
        for w in result.history.windows(2) {
            assert!(w[1].0 <= w[0].0, "energy increased: {w:?}");
        }
        // charge exactness of the returned state
        let grid = Grid::Radial(solve.grid.clone());
        let c = 5.0;
        let got = functional::charge(&result.state.u, result.state.omega, &grid).unwrap();
        assert!((got - c).abs() <= 1e-10 * c);
        // residual equals the final gradient norm (same vector) up to scaling
        let spec = ChargeSpec::new(5.0, 1.0, 2).unwrap();
        let g = functional::reduced_gradient(&result.state.u, &grid, &spec, &pot).unwrap();
        let gnorm = grid.norm(&g).unwrap();
        let expect = gnorm / grid.norm(&result.state.u).unwrap().max(1.0);
        assert!((result.residual - expect).abs() <= 1e-12 * (1.0 + expect));
        // and the PDE residual is bounded by the stop rule
        let res = functional::pde_residual(
            &result.state.u,
            result.state.omega,
            1.0,
            &grid,
            &pot,
        )
        .unwrap();
        assert!(res <= opts.grad_tol);
    }

    #[test]
    fn degenerate_init_rejected() {
        let pot = Potential::default();
        let grid = Grid::Radial(RadialGrid::build(2, 2.0, 32).unwrap());
        let spec = ChargeSpec::new(1.0, 1.0, 2).unwrap();
        let zero = vec![0.0; grid.len()];
        assert!(minimize_reduced(&zero, &grid, &spec, &pot, &SolveOptions::default()).is_err());
    }

    #[test]
    fn penalty_gradient_matches_finite_differences() {
        let dom = Domain::new(
            Shape::Annulus {
                center: [0.0, 0.0],
                rho: 1.0,
                gamma: 3.0,
            },
            0.2,
            2,
        )
        .unwrap();
        let g = dom.grid(0.25).unwrap();
        let wrapped = Grid::Masked(g.clone());
        let spec = ChargeSpec::new(2.0, 0.8, 2).unwrap();
        let pot = Potential::default();
        let lambda = 3.0;
        let target = [0.1, -0.05];
        let obj = Objective {
            grid: &wrapped,
            spec: &spec,
            pot: &pot,
            penalty: Some((lambda, target)),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let u: Vec<f64> = (0..g.len()).map(|_| rng.random_range(0.2..1.0)).collect();
        let grad = obj.gradient(&u).unwrap();
        for _ in 0..10 {
            let v: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let pairing = wrapped.inner(&grad, &v).unwrap();
            let h = 1e-6;
            let up: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + h * b).collect();
            let um: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - h * b).collect();
            let fd = (obj.value(&up).unwrap() - obj.value(&um).unwrap()) / (2.0 * h);
            assert!(
                (pairing - fd).abs() <= 1e-5 * (1.0 + pairing.abs()),
                "pairing {pairing} vs fd {fd}"
            );
        }
    }

    #[test]
    fn barycenter_penalty_symmetric_init_never_escalates() {
        // symmetric ring init about the annulus center: β is already at the
        // target, so the first stage suffices
        let dom = Domain::new(
            Shape::Annulus {
                center: [0.0, 0.0],
                rho: 1.0,
                gamma: 3.0,
            },
            0.2,
            2,
        )
        .unwrap();
        let h = 0.125;
        let g = dom.grid(h).unwrap();
        let spec = ChargeSpec::new(3.0, 1.0, 2).unwrap();
        let pot = Potential::default();
        let opts = SolveOptions {
            max_iters: 40_000,
            ..SolveOptions::default()
        };
        let result = minimize_with_barycenter(&g, &spec, &pot, [0.0, 0.0], &opts).unwrap();
        assert!(result.converged, "residual {}", result.residual);
        let miss =
            (result.barycenter[0].powi(2) + result.barycenter[1].powi(2)).sqrt();
        assert!(miss <= h, "barycenter drifted: {:?}", result.barycenter);
    }
}
