//! Batch experiments behind the acceptance checks: level scans in the ball
//! radius, the exact discrete scaling identity, the threshold-in-ε search,
//! the barycenter localization sweep, the multiplicity count, and the
//! cutoff-construction convergence study.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{self, ChargeSpec};
use crate::grid::{Domain, Grid, RadialGrid, Shape};
use crate::multistart::{self, MultistartReport};
use crate::potential::Potential;
use crate::solver::{self, SolveOptions};

/// Metadata shared by every row of a level table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    pub dim: u32,
    pub sigma: f64,
    pub potential: Potential,
}

/// One computed level `m(eps, rho)` or `m*(eps, rho, gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub eps: f64,
    pub rho: f64,
    /// Present on pinned-barycenter (m*) rows.
    pub gamma: Option<f64>,
    pub level: f64,
    pub n: usize,
    pub converged: bool,
    pub residual: f64,
}

/// Rows keyed uniquely by `(eps, rho, gamma, n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelTable {
    pub meta: TableMeta,
    rows: Vec<LevelRow>,
}

impl LevelTable {
    pub fn new(meta: TableMeta) -> Self {
        LevelTable {
            meta,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: LevelRow) -> Result<()> {
        let key = |r: &LevelRow| (r.eps, r.rho, r.gamma, r.n);
        if self.rows.iter().any(|r| key(r) == key(&row)) {
            return Err(Error::DuplicateTableKey(format!(
                "(eps={}, rho={}, gamma={:?}, n={})",
                row.eps, row.rho, row.gamma, row.n
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[LevelRow] {
        &self.rows
    }
}

fn radial_level_row(
    dim: u32,
    eps: f64,
    rho: f64,
    sigma: f64,
    n: usize,
    pot: &Potential,
    opts: &SolveOptions,
) -> Result<LevelRow> {
    let solve = solver::minimize_radial(dim, rho, eps, sigma, n, pot, opts)?;
    Ok(LevelRow {
        eps,
        rho,
        gamma: None,
        level: solve.result.energy,
        n,
        converged: solve.result.converged,
        residual: solve.result.residual,
    })
}

fn nodes_for(rho: f64, n_per_unit: f64) -> usize {
    ((rho * n_per_unit).round() as usize).max(8)
}

// ---------------------------------------------------------------------------
// rho scan: strict monotonicity and the large-ball plateau
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRhoReport {
    pub table: LevelTable,
    /// Indices `k` where the strict decrease `m(rho_k) > m(rho_{k+1})` failed.
    pub violations: Vec<usize>,
    /// Increment `m(rho_k) - m(rho_{k+1})` per consecutive pair.
    pub increments: Vec<f64>,
}

/// One radial solve per radius at a fixed node density, reporting strict
/// decrease violations and the plateau increments.
pub fn scan_rho(
    dim: u32,
    eps: f64,
    rho_list: &[f64],
    sigma: f64,
    n_per_unit: f64,
    pot: &Potential,
    opts: &SolveOptions,
) -> Result<ScanRhoReport> {
    if rho_list.len() < 2 {
        return Err(Error::invalid("rho_list", "need at least 2 radii"));
    }
    if rho_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("rho_list", "radii must be strictly increasing"));
    }
    let rows: Vec<LevelRow> = rho_list
        .par_iter()
        .map(|&rho| radial_level_row(dim, eps, rho, sigma, nodes_for(rho, n_per_unit), pot, opts))
        .collect::<Result<_>>()?;
    let mut table = LevelTable::new(TableMeta {
        dim,
        sigma,
        potential: *pot,
    });
    let mut violations = Vec::new();
    let mut increments = Vec::new();
    for (k, row) in rows.iter().enumerate() {
        if k + 1 < rows.len() {
            let inc = row.level - rows[k + 1].level;
            increments.push(inc);
            if !(inc > 0.0) {
                violations.push(k);
            }
        }
        table.push(*row)?;
    }
    Ok(ScanRhoReport {
        table,
        violations,
        increments,
    })
}

// ---------------------------------------------------------------------------
// exact discrete scaling identity
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub eps: f64,
    pub rho: f64,
    pub level: f64,
    pub base_level: f64,
    /// `eps^N * m(1, rho/eps)`.
    pub scaled_base: f64,
    pub rel_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub dim: u32,
    pub sigma: f64,
    pub rho_base: f64,
    pub n: usize,
    pub rows: Vec<ScalingRow>,
}

/// Checks `m(eps, eps*rho_base) = eps^N m(1, rho_base)` with matched node
/// counts: the two sides are the identical discrete problem under the
/// resampling `x -> x/eps`, so the gap is solver tolerance only.
pub fn check_scaling(
    dim: u32,
    eps_list: &[f64],
    rho_base: f64,
    sigma: f64,
    n: usize,
    pot: &Potential,
    opts: &SolveOptions,
) -> Result<ScalingReport> {
    if eps_list.is_empty() {
        return Err(Error::invalid("eps_grid", "need at least one epsilon"));
    }
    let base = radial_level_row(dim, 1.0, rho_base, sigma, n, pot, opts)?;
    let rows: Vec<ScalingRow> = eps_list
        .par_iter()
        .map(|&eps| -> Result<ScalingRow> {
            let rho = eps * rho_base;
            let row = radial_level_row(dim, eps, rho, sigma, n, pot, opts)?;
            let scaled = eps.powi(dim as i32) * base.level;
            let rel_gap = (row.level - scaled).abs() / row.level.abs().max(f64::MIN_POSITIVE);
            Ok(ScalingRow {
                eps,
                rho,
                level: row.level,
                base_level: base.level,
                scaled_base: scaled,
                rel_gap,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ScalingReport {
        dim,
        sigma,
        rho_base,
        n,
        rows,
    })
}

// ---------------------------------------------------------------------------
// threshold in epsilon: m(eps, rho) < m*(eps, rho, gamma)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonBarRow {
    pub eps: f64,
    /// Radial level on the ball of radius rho.
    pub m_rho: f64,
    /// Pinned-barycenter level on the annulus.
    pub m_star: f64,
    /// Radial level on the ball of radius gamma*rho (must be dominated by m*).
    pub m_gamma_rho: f64,
    pub margin: f64,
    pub combined_tol: f64,
    pub holds: bool,
    pub dominated: bool,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonBarReport {
    pub rho: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub rows: Vec<EpsilonBarRow>,
    /// Largest grid epsilon whose strict inequality holds beyond the
    /// combined solver tolerance, when any.
    pub eps_bar: Option<f64>,
}

/// Scans a decreasing epsilon grid for the threshold below which confinement
/// to the small ball is strictly cheaper than pinning the barycenter on the
/// annulus. The margin must clear a combined solver tolerance
/// `10 * grad_tol * (1 + max(|m|, |m*|))` to count.
pub fn find_epsilon_bar(
    rho: f64,
    gamma: f64,
    sigma: f64,
    eps_grid: &[f64],
    pot: &Potential,
    opts: &SolveOptions,
    n_per_unit: f64,
) -> Result<EpsilonBarReport> {
    if eps_grid.is_empty() {
        return Err(Error::invalid("eps_grid", "need at least one epsilon"));
    }
    if eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("eps_grid", "epsilons must be strictly decreasing"));
    }
    let h = 1.0 / n_per_unit;
    let shape = Shape::Annulus {
        center: [0.0, 0.0],
        rho,
        gamma,
    };
    let domain = Domain::new(shape, 0.25 * (gamma - 1.0) * rho, 2)?;
    let annulus = domain.grid(h)?;
    // the radial references are cheap 1-D solves, so they get extra resolution
    let radial_n = |radius: f64| nodes_for(radius, 4.0 * n_per_unit).max(64);
    let rows: Vec<EpsilonBarRow> = eps_grid
        .par_iter()
        .map(|&eps| -> Result<EpsilonBarRow> {
            let spec = ChargeSpec::new(sigma, eps, 2)?;
            let small = radial_level_row(2, eps, rho, sigma, radial_n(rho), pot, opts)?;
            let large =
                radial_level_row(2, eps, gamma * rho, sigma, radial_n(gamma * rho), pot, opts)?;
            let pinned =
                solver::minimize_with_barycenter(&annulus, &spec, pot, [0.0, 0.0], opts)?;
            let margin = pinned.energy - small.level;
            let combined_tol =
                10.0 * opts.grad_tol * (1.0 + small.level.abs().max(pinned.energy.abs()));
            let converged = small.converged && large.converged && pinned.converged;
            Ok(EpsilonBarRow {
                eps,
                m_rho: small.level,
                m_star: pinned.energy,
                m_gamma_rho: large.level,
                margin,
                combined_tol,
                holds: converged && margin > combined_tol,
                dominated: pinned.energy >= large.level,
                converged,
            })
        })
        .collect::<Result<_>>()?;
    let eps_bar = rows
        .iter()
        .filter(|r| r.holds)
        .map(|r| r.eps)
        .fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.max(e))));
    Ok(EpsilonBarReport {
        rho,
        gamma,
        sigma,
        rows,
        eps_bar,
    })
}

// ---------------------------------------------------------------------------
// localization of low-energy barycenters in D^+
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    /// The energy threshold m(eps, r).
    pub threshold: f64,
    pub report: MultistartReport,
    /// Indices of converged runs below the threshold.
    pub qualifying: Vec<usize>,
    /// Qualifying runs whose barycenter escaped D^+ = dilate(D, r).
    pub violations: Vec<usize>,
    /// True when no converged run fell below the threshold.
    pub vacuous: bool,
}

/// Multistart from a lattice of D^- points; every converged result with
/// energy below `m(eps, r)` must keep its barycenter inside D^+.
pub fn localization_check(
    domain: &Domain,
    eps: f64,
    sigma: f64,
    pot: &Potential,
    opts: &SolveOptions,
    h: f64,
    n_starts: usize,
) -> Result<LocalizationReport> {
    let starts = lattice_starts(domain, n_starts)?;
    let report = multistart::multistart(domain, &ChargeSpec::new(sigma, eps, 2)?, pot, opts, &starts, h)?;
    let threshold = level_on_small_ball(domain.r, eps, sigma, pot, opts)?;
    let mut qualifying = Vec::new();
    let mut violations = Vec::new();
    for (k, run) in report.runs.iter().enumerate() {
        if run.result.converged && run.result.energy < threshold {
            qualifying.push(k);
            if !domain.shape.contains_dilated(run.result.barycenter, domain.r) {
                violations.push(k);
            }
        }
    }
    let vacuous = qualifying.is_empty();
    Ok(LocalizationReport {
        threshold,
        report,
        qualifying,
        violations,
        vacuous,
    })
}

/// `m(eps, r)` on the localization ball, resolved finely (1-D is cheap).
pub fn level_on_small_ball(
    r: f64,
    eps: f64,
    sigma: f64,
    pot: &Potential,
    opts: &SolveOptions,
) -> Result<f64> {
    let solve = solver::minimize_radial(2, r, eps, sigma, 256, pot, opts)?;
    Ok(solve.result.energy)
}

/// Lattice of D^- points with spacing `r`, capped at `limit` points.
pub fn lattice_starts(domain: &Domain, limit: usize) -> Result<Vec<[f64; 2]>> {
    if limit == 0 {
        return Err(Error::invalid("n_starts", "must be positive"));
    }
    let (lo, hi) = domain.shape.bounding_box();
    let spacing = domain.r;
    let mut starts = Vec::new();
    let ni = ((hi[0] - lo[0]) / spacing).ceil() as usize + 1;
    let nj = ((hi[1] - lo[1]) / spacing).ceil() as usize + 1;
    for j in 0..nj {
        for i in 0..ni {
            let p = [lo[0] + i as f64 * spacing, lo[1] + j as f64 * spacing];
            if domain.shape.contains_eroded(p, 2.0 * domain.r) {
                starts.push(p);
            }
        }
    }
    if starts.is_empty() {
        return Err(Error::EmptyErosion {
            dist: 2.0 * domain.r,
        });
    }
    if starts.len() > limit {
        // deterministic thinning: keep an evenly strided subset
        let stride = starts.len().div_ceil(limit);
        starts = starts.into_iter().step_by(stride).collect();
    }
    Ok(starts)
}

// ---------------------------------------------------------------------------
// multiplicity count vs cat(D)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityReport {
    pub report: MultistartReport,
    pub distinct_count: usize,
    pub cat_hint: u32,
    /// Energy and barycenter of each distinct class representative.
    pub classes: Vec<(f64, [f64; 2])>,
    /// Shortfall against cat(D) is a finding, not an error.
    pub reaches_cat: bool,
    /// The m(eps, r) threshold and any localization violations among runs.
    pub threshold: f64,
    pub localization_violations: Vec<usize>,
}

/// Multistart plus dedup; reports the number of distinct solutions found and
/// compares it against the supplied LS category of the domain.
pub fn multiplicity_experiment(
    domain: &Domain,
    eps: f64,
    sigma: f64,
    pot: &Potential,
    opts: &SolveOptions,
    h: f64,
    starts: Option<&[[f64; 2]]>,
) -> Result<MultiplicityReport> {
    let generated;
    let starts = match starts {
        Some(s) => s,
        None => {
            generated = lattice_starts(domain, 64)?;
            &generated
        }
    };
    let spec = ChargeSpec::new(sigma, eps, 2)?;
    let report = multistart::multistart(domain, &spec, pot, opts, starts, h)?;
    let classes: Vec<(f64, [f64; 2])> = report
        .distinct
        .iter()
        .map(|&k| (report.runs[k].result.energy, report.runs[k].result.barycenter))
        .collect();
    let threshold = level_on_small_ball(domain.r, eps, sigma, pot, opts)?;
    let localization_violations: Vec<usize> = report
        .runs
        .iter()
        .enumerate()
        .filter(|(_, run)| {
            run.result.converged
                && run.result.energy < threshold
                && !domain.shape.contains_dilated(run.result.barycenter, domain.r)
        })
        .map(|(k, _)| k)
        .collect();
    let distinct_count = report.distinct.len();
    Ok(MultiplicityReport {
        distinct_count,
        cat_hint: domain.cat_hint,
        classes,
        reaches_cat: distinct_count >= domain.cat_hint as usize,
        threshold,
        localization_violations,
        report,
    })
}

// ---------------------------------------------------------------------------
// cutoff construction convergence (large-ball limit)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffRow {
    pub rho: f64,
    /// Charge-restoring rescale factor t_rho.
    pub t: f64,
    /// Energy of the cutoff field at the reference frequency.
    pub energy: f64,
    /// Solved level m(1, rho) on the same grid.
    pub m_rho: f64,
    pub sandwich_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffReport {
    pub reference_rho: f64,
    pub reference_energy: f64,
    pub rows: Vec<CutoffRow>,
    pub nonincreasing: bool,
    /// `E(u_rho) - E(reference)` at the largest rho.
    pub tail_gap: f64,
}

/// Builds `u_rho` from a reference profile on a ball twice the largest
/// requested radius and reports the energy column against the levels
/// `m(1, rho)`.
pub fn cutoff_convergence(
    rho_list: &[f64],
    sigma: f64,
    pot: &Potential,
    opts: &SolveOptions,
    n_per_unit: f64,
    dim: u32,
) -> Result<CutoffReport> {
    if rho_list.is_empty() {
        return Err(Error::invalid("rho_list", "need at least one radius"));
    }
    if rho_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("rho_list", "radii must be strictly increasing"));
    }
    let reference_rho = 2.0 * rho_list.last().unwrap();
    let reference = solver::minimize_radial(
        dim,
        reference_rho,
        1.0,
        sigma,
        nodes_for(reference_rho, n_per_unit),
        pot,
        opts,
    )?;
    let reference_energy = reference.result.energy;
    let omega_bar = reference.result.state.omega;
    let rows: Vec<CutoffRow> = rho_list
        .par_iter()
        .map(|&rho| -> Result<CutoffRow> {
            let n = nodes_for(rho, n_per_unit);
            let target = RadialGrid::build(dim, rho, n)?;
            let cut = multistart::cutoff_rescale(&reference, sigma, &target)?;
            let wrapped = Grid::Radial(target.clone());
            let energy = functional::energy(&cut.u, omega_bar, 1.0, &wrapped, pot)?;
            let m_row = radial_level_row(dim, 1.0, rho, sigma, n, pot, opts)?;
            let tol = 10.0 * opts.grad_tol * (1.0 + m_row.level.abs());
            Ok(CutoffRow {
                rho,
                t: cut.t,
                energy,
                m_rho: m_row.level,
                sandwich_ok: energy >= m_row.level - tol,
            })
        })
        .collect::<Result<_>>()?;
    let nonincreasing = rows.windows(2).all(|w| w[1].energy <= w[0].energy);
    let tail_gap = rows.last().unwrap().energy - reference_energy;
    Ok(CutoffReport {
        reference_rho,
        reference_energy,
        rows,
        nonincreasing,
        tail_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scan_rho_rejects_bad_lists() {
        let pot = Potential::default();
        let opts = SolveOptions::default();
        assert!(scan_rho(2, 1.0, &[4.0], 5.0, 8.0, &pot, &opts).is_err());
        assert!(scan_rho(2, 1.0, &[4.0, 4.0], 5.0, 8.0, &pot, &opts).is_err());
        assert!(scan_rho(2, 1.0, &[6.0, 4.0], 5.0, 8.0, &pot, &opts).is_err());
    }

    #[test]
    fn scaling_empty_eps_rejected() {
        let pot = Potential::default();
        let opts = SolveOptions::default();
        assert!(check_scaling(2, &[], 8.0, 5.0, 64, &pot, &opts).is_err());
    }

    #[test]
    fn scaling_identity_at_eps_one_is_exact() {
        let pot = Potential::default();
        let opts = SolveOptions::default();
        let report = check_scaling(2, &[1.0], 6.0, 5.0, 96, &pot, &opts).unwrap();
        // identical discrete problem on both sides: bitwise-equal level
        assert_eq!(report.rows[0].rel_gap, 0.0);
    }

    #[test]
    fn epsilon_bar_rejects_bad_grids() {
        let pot = Potential::default();
        let opts = SolveOptions::default();
        assert!(find_epsilon_bar(1.0, 4.0, 5.0, &[], &pot, &opts, 8.0).is_err());
        assert!(find_epsilon_bar(1.0, 4.0, 5.0, &[0.2, 0.5], &pot, &opts, 8.0).is_err());
    }

    #[test]
    fn duplicate_level_rows_rejected() {
        let mut table = LevelTable::new(TableMeta {
            dim: 2,
            sigma: 1.0,
            potential: Potential::default(),
        });
        let row = LevelRow {
            eps: 1.0,
            rho: 4.0,
            gamma: None,
            level: 1.0,
            n: 32,
            converged: true,
            residual: 0.0,
        };
        table.push(row).unwrap();
        assert!(table.push(row).is_err());
    }

    #[test]
    fn lattice_starts_stay_in_dminus() {
        let domain = Domain::new(Shape::default_dumbbell(), 0.25, 2).unwrap();
        let starts = lattice_starts(&domain, 64).unwrap();
        assert!(!starts.is_empty());
        for y in &starts {
            assert!(domain.shape.contains_eroded(*y, 2.0 * domain.r));
        }
        // both lobes are represented
        assert!(starts.iter().any(|y| y[0] < -1.0));
        assert!(starts.iter().any(|y| y[0] > 1.0));
    }
}
