//! Experiment dispatch: builds the configured objects, runs the requested
//! experiment on a bounded thread pool, and writes `results.csv`,
//! `summary.json`, field dumps and `run.log` into the output directory.
//!
//! Completed runs exit cleanly even when a lemma check reports violations;
//! only operational failures (bad config, unwritable output, solver
//! preconditions) surface as errors.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use serde_json::json;

use crate::config::{ExperimentKind, RunConfig, ShapeSpec};
use crate::error::{Error, Result};
use crate::experiments;
use crate::functional::ChargeSpec;
use crate::grid::{Domain, Grid};
use crate::multistart::{self, MultistartReport};
use crate::report::{csv_row, fmt_f64, write_masked_field, write_radial_field};
use crate::solver;

pub struct RunOutput {
    pub out_dir: PathBuf,
    /// One pass/fail style summary line per experiment.
    pub summary_line: String,
}

/// Executes the configured experiment with at most `threads` worker threads.
pub fn run(cfg: &RunConfig, threads: usize) -> Result<RunOutput> {
    cfg.validate()?;
    let started = Instant::now();
    fs::create_dir_all(&cfg.out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let summary_line = pool.install(|| dispatch(cfg))?;
    let log = format!(
        "# resolved configuration\n{}\n# seed = {}\n# threads = {}\n# wall_time_s = {:.3}\n# {}\n",
        crate::config::print_config(cfg),
        cfg.solver.seed,
        threads.max(1),
        started.elapsed().as_secs_f64(),
        summary_line,
    );
    fs::write(cfg.out_dir.join("run.log"), log)?;
    Ok(RunOutput {
        out_dir: cfg.out_dir.clone(),
        summary_line,
    })
}

fn dispatch(cfg: &RunConfig) -> Result<String> {
    match cfg.kind {
        ExperimentKind::VerifyPotential => run_verify_potential(cfg),
        ExperimentKind::Minimize => run_minimize(cfg),
        ExperimentKind::ScanRho => run_scan_rho(cfg),
        ExperimentKind::CheckScaling => run_check_scaling(cfg),
        ExperimentKind::EpsilonBar => run_epsilon_bar(cfg),
        ExperimentKind::Localization => run_localization(cfg),
        ExperimentKind::Multiplicity => run_multiplicity(cfg),
        ExperimentKind::Cutoff => run_cutoff(cfg),
    }
}

fn write_results(cfg: &RunConfig, header: &str, rows: &[String]) -> Result<()> {
    let mut text = String::with_capacity(rows.len() * 64 + header.len() + 1);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    fs::write(cfg.out_dir.join("results.csv"), text)?;
    Ok(())
}

fn write_summary(cfg: &RunConfig, body: serde_json::Value) -> Result<()> {
    let mut value = json!({
        "schema_version": 1,
        "experiment": cfg.kind.as_str(),
    });
    if let (Some(obj), Some(extra)) = (value.as_object_mut(), body.as_object()) {
        for (k, v) in extra {
            obj.insert(k.clone(), v.clone());
        }
    }
    let text = serde_json::to_string_pretty(&value).expect("summary serialization");
    fs::write(cfg.out_dir.join("summary.json"), text)?;
    Ok(())
}

fn domain_from(cfg: &RunConfig) -> Result<Domain> {
    Domain::new(cfg.shape.build()?, cfg.r, cfg.cat_hint)
}

fn run_verify_potential(cfg: &RunConfig) -> Result<String> {
    let report = cfg.potential.verify_hypotheses(cfg.dim, &cfg.scan)?;
    let mut rows = vec![
        csv_row(&[
            "w1".into(),
            report.w1_ok.to_string(),
            fmt_f64(report.w_min),
            fmt_f64(report.w_argmin),
        ]),
        csv_row(&[
            "w2".into(),
            report.w2_ok.to_string(),
            fmt_f64(report.n_at_s0),
            fmt_f64(report.s0),
        ]),
        csv_row(&[
            "np".into(),
            report.np_ok.to_string(),
            fmt_f64(report.np_margin),
            fmt_f64(report.np_argmin),
        ]),
        csv_row(&[
            "quad_bound".into(),
            report.quad_ok.to_string(),
            fmt_f64(report.quad_beta1),
            fmt_f64(report.quad_delta),
        ]),
        csv_row(&[
            "subcritical".into(),
            report.subcritical_ok.to_string(),
            fmt_f64(cfg.potential.p),
            fmt_f64(report.two_star),
        ]),
    ];
    if let Some(growth_ok) = report.growth_ok {
        rows.push(csv_row(&[
            "growth_exp".into(),
            growth_ok.to_string(),
            fmt_f64(cfg.potential.growth_exp.unwrap_or(f64::NAN)),
            String::new(),
        ]));
    }
    write_results(cfg, "check,ok,value,location", &rows)?;
    write_summary(
        cfg,
        json!({
            "report": report,
            "all_ok": report.all_ok(),
        }),
    )?;
    Ok(format!(
        "verify-potential: {}",
        if report.all_ok() { "all hypotheses hold" } else { "violations found" }
    ))
}

fn run_minimize(cfg: &RunConfig) -> Result<String> {
    let eps = cfg.eps.expect("validated");
    let header = "shape,eps,sigma,energy,omega,residual,barycenter_x,barycenter_y,iters,converged";
    let (result, shape_tag) = match &cfg.shape {
        ShapeSpec::Ball { rho, .. } => {
            let n = ((rho * cfg.n_per_unit).round() as usize).max(8);
            let solve = solver::minimize_radial(cfg.dim, *rho, eps, cfg.sigma, n, &cfg.potential, &cfg.solver)?;
            write_radial_field(&cfg.out_dir.join("u.field"), &solve.grid, &solve.result.state.u)?;
            (solve.result, "ball")
        }
        _ => {
            if cfg.dim != 2 {
                return Err(Error::invalid("dim", "masked domains support dimension 2 only"));
            }
            let domain = domain_from(cfg)?;
            let grid = domain.grid(cfg.spacing())?;
            let spec = ChargeSpec::new(cfg.sigma, eps, 2)?;
            let profile = multistart::profile_for_starts(&domain, &spec, &cfg.potential, &cfg.solver, cfg.spacing())?;
            let anchor = domain.shape.anchor();
            let init = multistart::phi_epsilon(&domain, anchor, &profile, &grid)?;
            let wrapped = Grid::Masked(grid.clone());
            let result = solver::minimize_reduced(&init, &wrapped, &spec, &cfg.potential, &cfg.solver)?;
            write_masked_field(&cfg.out_dir.join("u.field"), &grid, &result.state.u)?;
            let tag = match &cfg.shape {
                ShapeSpec::Annulus { .. } => "annulus",
                ShapeSpec::Rectangle { .. } => "rectangle",
                ShapeSpec::Dumbbell { .. } => "dumbbell",
                ShapeSpec::MaskFile { .. } => "maskfile",
                ShapeSpec::Ball { .. } => unreachable!(),
            };
            (result, tag)
        }
    };
    let rows = vec![csv_row(&[
        shape_tag.into(),
        fmt_f64(eps),
        fmt_f64(cfg.sigma),
        fmt_f64(result.energy),
        fmt_f64(result.state.omega),
        fmt_f64(result.residual),
        fmt_f64(result.barycenter[0]),
        fmt_f64(result.barycenter[1]),
        result.iters.to_string(),
        result.converged.to_string(),
    ])];
    write_results(cfg, header, &rows)?;
    write_summary(
        cfg,
        json!({
            "energy": result.energy,
            "omega": result.state.omega,
            "residual": result.residual,
            "barycenter": result.barycenter,
            "iters": result.iters,
            "converged": result.converged,
        }),
    )?;
    Ok(format!(
        "minimize: energy {} (converged: {})",
        fmt_f64(result.energy),
        result.converged
    ))
}

fn run_scan_rho(cfg: &RunConfig) -> Result<String> {
    let eps = cfg.eps.expect("validated");
    let rho_list = cfg.rho_list.as_deref().expect("validated");
    let report = experiments::scan_rho(
        cfg.dim,
        eps,
        rho_list,
        cfg.sigma,
        cfg.n_per_unit,
        &cfg.potential,
        &cfg.solver,
    )?;
    let rows: Vec<String> = report
        .table
        .rows()
        .iter()
        .map(|r| {
            csv_row(&[
                fmt_f64(r.eps),
                fmt_f64(r.rho),
                r.n.to_string(),
                fmt_f64(r.level),
                r.converged.to_string(),
                fmt_f64(r.residual),
            ])
        })
        .collect();
    write_results(cfg, "eps,rho,n,level,converged,residual", &rows)?;
    write_summary(
        cfg,
        json!({
            "violations": report.violations,
            "increments": report.increments,
            "strictly_decreasing": report.violations.is_empty(),
        }),
    )?;
    Ok(format!(
        "scan-rho: {} rows, strict decrease {}",
        report.table.rows().len(),
        if report.violations.is_empty() { "holds" } else { "violated" }
    ))
}

fn run_check_scaling(cfg: &RunConfig) -> Result<String> {
    let eps_grid = cfg.eps_grid.as_deref().expect("validated");
    let rho_base = match &cfg.shape {
        ShapeSpec::Ball { rho, .. } => *rho,
        _ => return Err(Error::invalid("shape", "check-scaling runs on a ball")),
    };
    let report = experiments::check_scaling(
        cfg.dim,
        eps_grid,
        rho_base,
        cfg.sigma,
        cfg.n_nodes,
        &cfg.potential,
        &cfg.solver,
    )?;
    let rows: Vec<String> = report
        .rows
        .iter()
        .map(|r| {
            csv_row(&[
                fmt_f64(r.eps),
                fmt_f64(r.rho),
                fmt_f64(r.level),
                fmt_f64(r.base_level),
                fmt_f64(r.scaled_base),
                fmt_f64(r.rel_gap),
            ])
        })
        .collect();
    write_results(cfg, "eps,rho,level,base_level,scaled_base,rel_gap", &rows)?;
    let worst = report.rows.iter().map(|r| r.rel_gap).fold(0.0, f64::max);
    write_summary(cfg, json!({ "rows": report.rows, "worst_rel_gap": worst }))?;
    Ok(format!("check-scaling: worst relative gap {}", fmt_f64(worst)))
}

fn run_epsilon_bar(cfg: &RunConfig) -> Result<String> {
    let eps_grid = cfg.eps_grid.as_deref().expect("validated");
    let ShapeSpec::Annulus { rho, gamma, .. } = &cfg.shape else {
        return Err(Error::invalid("shape", "epsilon-bar runs on an annulus"));
    };
    let report = experiments::find_epsilon_bar(
        *rho,
        *gamma,
        cfg.sigma,
        eps_grid,
        &cfg.potential,
        &cfg.solver,
        cfg.n_per_unit,
    )?;
    let rows: Vec<String> = report
        .rows
        .iter()
        .map(|r| {
            csv_row(&[
                fmt_f64(r.eps),
                fmt_f64(r.m_rho),
                fmt_f64(r.m_star),
                fmt_f64(r.m_gamma_rho),
                fmt_f64(r.margin),
                fmt_f64(r.combined_tol),
                r.holds.to_string(),
                r.dominated.to_string(),
                r.converged.to_string(),
            ])
        })
        .collect();
    write_results(
        cfg,
        "eps,m_rho,m_star,m_gamma_rho,margin,combined_tol,holds,dominated,converged",
        &rows,
    )?;
    write_summary(
        cfg,
        json!({
            "eps_bar": report.eps_bar,
            "rows": report.rows,
            "all_dominated": report.rows.iter().all(|r| r.dominated),
        }),
    )?;
    Ok(match report.eps_bar {
        Some(e) => format!("epsilon-bar: threshold holds from eps = {}", fmt_f64(e)),
        None => "epsilon-bar: inequality never held on the grid".to_string(),
    })
}

fn multistart_rows(report: &MultistartReport) -> Vec<String> {
    report
        .runs
        .iter()
        .map(|run| {
            csv_row(&[
                fmt_f64(run.start[0]),
                fmt_f64(run.start[1]),
                run.result.converged.to_string(),
                fmt_f64(run.result.energy),
                fmt_f64(run.result.residual),
                fmt_f64(run.result.barycenter[0]),
                fmt_f64(run.result.barycenter[1]),
                run.result.iters.to_string(),
            ])
        })
        .collect()
}

const MULTISTART_HEADER: &str =
    "start_x,start_y,converged,energy,residual,barycenter_x,barycenter_y,iters";

fn run_localization(cfg: &RunConfig) -> Result<String> {
    let eps = cfg.eps.expect("validated");
    let domain = domain_from(cfg)?;
    let report = experiments::localization_check(
        &domain,
        eps,
        cfg.sigma,
        &cfg.potential,
        &cfg.solver,
        cfg.spacing(),
        cfg.n_starts,
    )?;
    write_results(cfg, MULTISTART_HEADER, &multistart_rows(&report.report))?;
    write_summary(
        cfg,
        json!({
            "threshold": report.threshold,
            "qualifying": report.qualifying,
            "violations": report.violations,
            "vacuous": report.vacuous,
            "localized": report.violations.is_empty(),
        }),
    )?;
    Ok(if report.vacuous {
        "localization: no qualifying states".to_string()
    } else {
        format!(
            "localization: {}/{} qualifying states inside D+",
            report.qualifying.len() - report.violations.len(),
            report.qualifying.len()
        )
    })
}

fn run_multiplicity(cfg: &RunConfig) -> Result<String> {
    let eps = cfg.eps.expect("validated");
    let domain = domain_from(cfg)?;
    let report = experiments::multiplicity_experiment(
        &domain,
        eps,
        cfg.sigma,
        &cfg.potential,
        &cfg.solver,
        cfg.spacing(),
        cfg.starts.as_deref(),
    )?;
    write_results(cfg, MULTISTART_HEADER, &multistart_rows(&report.report))?;
    // dump the distinct representatives for inspection
    let grid = domain.grid(cfg.spacing())?;
    for (class_idx, &run_idx) in report.report.distinct.iter().enumerate() {
        write_masked_field(
            &cfg.out_dir.join(format!("class_{class_idx}.field")),
            &grid,
            &report.report.runs[run_idx].result.state.u,
        )?;
    }
    write_summary(
        cfg,
        json!({
            "distinct_count": report.distinct_count,
            "cat_hint": report.cat_hint,
            "reaches_cat": report.reaches_cat,
            "classes": report.classes,
            "threshold": report.threshold,
            "localization_violations": report.localization_violations,
        }),
    )?;
    Ok(format!(
        "multiplicity: {} distinct solutions (cat hint {})",
        report.distinct_count, report.cat_hint
    ))
}

fn run_cutoff(cfg: &RunConfig) -> Result<String> {
    let rho_list = cfg.rho_list.as_deref().expect("validated");
    let report = experiments::cutoff_convergence(
        rho_list,
        cfg.sigma,
        &cfg.potential,
        &cfg.solver,
        cfg.n_per_unit,
        cfg.dim,
    )?;
    let rows: Vec<String> = report
        .rows
        .iter()
        .map(|r| {
            csv_row(&[
                fmt_f64(r.rho),
                fmt_f64(r.t),
                fmt_f64(r.energy),
                fmt_f64(r.m_rho),
                r.sandwich_ok.to_string(),
            ])
        })
        .collect();
    write_results(cfg, "rho,t,energy,m_rho,sandwich_ok", &rows)?;
    write_summary(
        cfg,
        json!({
            "reference_rho": report.reference_rho,
            "reference_energy": report.reference_energy,
            "nonincreasing": report.nonincreasing,
            "tail_gap": report.tail_gap,
            "rows": report.rows,
        }),
    )?;
    Ok(format!(
        "cutoff: tail gap {} over reference {}",
        fmt_f64(report.tail_gap),
        fmt_f64(report.reference_energy)
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn verify_potential_run_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "[experiment]\nkind = verify-potential\nout = {}\n",
            dir.path().join("run").display()
        );
        let cfg = parse_config(&text).unwrap();
        let out = run(&cfg, 1).unwrap();
        assert!(out.out_dir.join("results.csv").exists());
        assert!(out.out_dir.join("summary.json").exists());
        assert!(out.out_dir.join("run.log").exists());
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.out_dir.join("summary.json")).unwrap())
                .unwrap();
        assert_eq!(summary["schema_version"], 1);
        assert_eq!(summary["all_ok"], true);
    }

    #[test]
    fn minimize_ball_writes_row_and_field() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "[experiment]\nkind = minimize\nout = {}\n\
             [charge]\neps = 1\n[domain]\nshape = ball\nrho = 4\nn_per_unit = 16\n",
            dir.path().join("run").display()
        );
        let cfg = parse_config(&text).unwrap();
        let out = run(&cfg, 1).unwrap();
        let csv = fs::read_to_string(out.out_dir.join("results.csv")).unwrap();
        assert_eq!(csv.lines().count(), 2, "{csv}");
        assert!(out.out_dir.join("u.field").exists());
    }

    #[test]
    fn reproducible_results_csv() {
        let dir = tempfile::tempdir().unwrap();
        let base = "[experiment]\nkind = scan-rho\nrho_list = 2, 3\n[charge]\neps = 1\n\
                    [domain]\nn_per_unit = 8\n[solver]\nseed = 7\n";
        let run_once = |sub: &str, threads: usize| {
            let text = format!("{base}");
            let mut cfg = parse_config(&text).unwrap();
            cfg.out_dir = dir.path().join(sub);
            run(&cfg, threads).unwrap();
            fs::read_to_string(dir.path().join(sub).join("results.csv")).unwrap()
        };
        let a = run_once("a", 1);
        let b = run_once("b", 1);
        assert_eq!(a, b);
        let c = run_once("c", 4);
        assert_eq!(a, c);
    }
}
