//! Run configuration: a line-oriented `key = value` format with `[section]`
//! headers, strict about unknown and duplicate keys so typos never pass
//! silently. `parse_config(print_config(c)) == c` for every valid config.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Shape;
use crate::potential::{Potential, ScanParams};
use crate::report;
use crate::solver::SolveOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    VerifyPotential,
    Minimize,
    ScanRho,
    CheckScaling,
    EpsilonBar,
    Localization,
    Multiplicity,
    Cutoff,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::VerifyPotential => "verify-potential",
            ExperimentKind::Minimize => "minimize",
            ExperimentKind::ScanRho => "scan-rho",
            ExperimentKind::CheckScaling => "check-scaling",
            ExperimentKind::EpsilonBar => "epsilon-bar",
            ExperimentKind::Localization => "localization",
            ExperimentKind::Multiplicity => "multiplicity",
            ExperimentKind::Cutoff => "cutoff",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "verify-potential" => ExperimentKind::VerifyPotential,
            "minimize" => ExperimentKind::Minimize,
            "scan-rho" => ExperimentKind::ScanRho,
            "check-scaling" => ExperimentKind::CheckScaling,
            "epsilon-bar" => ExperimentKind::EpsilonBar,
            "localization" => ExperimentKind::Localization,
            "multiplicity" => ExperimentKind::Multiplicity,
            "cutoff" => ExperimentKind::Cutoff,
            _ => return None,
        })
    }
}

/// Domain geometry as configured (mask files are loaded lazily at run time).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ShapeSpec {
    Ball {
        center: [f64; 2],
        rho: f64,
    },
    Annulus {
        center: [f64; 2],
        rho: f64,
        gamma: f64,
    },
    Rectangle {
        lo: [f64; 2],
        hi: [f64; 2],
    },
    Dumbbell {
        center: [f64; 2],
        lobe_rho: f64,
        separation: f64,
        neck_halfwidth: f64,
    },
    MaskFile {
        path: PathBuf,
    },
}

impl ShapeSpec {
    pub fn build(&self) -> Result<Shape> {
        Ok(match self {
            ShapeSpec::Ball { center, rho } => Shape::Ball {
                center: *center,
                rho: *rho,
            },
            ShapeSpec::Annulus { center, rho, gamma } => Shape::Annulus {
                center: *center,
                rho: *rho,
                gamma: *gamma,
            },
            ShapeSpec::Rectangle { lo, hi } => Shape::Rectangle { lo: *lo, hi: *hi },
            ShapeSpec::Dumbbell {
                center,
                lobe_rho,
                separation,
                neck_halfwidth,
            } => Shape::Dumbbell {
                center: *center,
                lobe_rho: *lobe_rho,
                separation: *separation,
                neck_halfwidth: *neck_halfwidth,
            },
            ShapeSpec::MaskFile { path } => report::read_mask_file(path)?,
        })
    }
}

/// A fully validated run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    pub out_dir: PathBuf,
    pub potential: Potential,
    pub scan: ScanParams,
    pub sigma: f64,
    pub eps: Option<f64>,
    pub eps_grid: Option<Vec<f64>>,
    pub dim: u32,
    pub shape: ShapeSpec,
    /// Localization radius of the domain.
    pub r: f64,
    pub cat_hint: u32,
    /// Grid resolution in nodes per unit length (`h = 1/n_per_unit`).
    pub n_per_unit: f64,
    pub rho_list: Option<Vec<f64>>,
    pub n_starts: usize,
    pub starts: Option<Vec<[f64; 2]>>,
    /// Node count for the matched-resolution scaling check.
    pub n_nodes: usize,
    pub solver: SolveOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            kind: ExperimentKind::VerifyPotential,
            out_dir: PathBuf::from("out"),
            potential: Potential::default(),
            scan: ScanParams::default(),
            sigma: DEFAULT_SIGMA,
            eps: None,
            eps_grid: None,
            dim: 2,
            shape: ShapeSpec::Ball {
                center: [0.0, 0.0],
                rho: 1.0,
            },
            r: 0.2,
            cat_hint: 1,
            n_per_unit: 16.0,
            rho_list: None,
            n_starts: 32,
            starts: None,
            n_nodes: 256,
            solver: SolveOptions::default(),
        }
    }
}

/// Default charge density, frozen from a one-time scan over
/// σ in {1, 2, 5, 10, 20, 50} at ε = 1, ρ = 8 (see the shipped
/// `configs/defaults.conf` for the scan log).
pub const DEFAULT_SIGMA: f64 = 5.0;

impl RunConfig {
    pub fn spacing(&self) -> f64 {
        1.0 / self.n_per_unit
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::invalid("sigma", format!("must be positive, got {}", self.sigma)));
        }
        if let Some(eps) = self.eps {
            if !(eps > 0.0) {
                return Err(Error::invalid("eps", format!("must be positive, got {eps}")));
            }
        }
        if let Some(grid) = &self.eps_grid {
            if grid.iter().any(|&e| !(e > 0.0)) {
                return Err(Error::invalid("eps_grid", "all entries must be positive"));
            }
        }
        if !(1..=3).contains(&self.dim) {
            return Err(Error::invalid("dim", format!("must be 1, 2 or 3, got {}", self.dim)));
        }
        if !(self.r > 0.0) {
            return Err(Error::invalid("r", format!("must be positive, got {}", self.r)));
        }
        if self.cat_hint == 0 {
            return Err(Error::invalid("cat_hint", "must be at least 1"));
        }
        if !(self.n_per_unit > 0.0) {
            return Err(Error::invalid("n_per_unit", "must be positive"));
        }
        if self.n_nodes < 3 {
            return Err(Error::invalid("n", "need at least 3 nodes"));
        }
        self.solver.validate()?;
        // per-experiment requirements
        match self.kind {
            ExperimentKind::VerifyPotential => {}
            ExperimentKind::Minimize | ExperimentKind::Localization | ExperimentKind::Multiplicity => {
                if self.eps.is_none() {
                    return Err(Error::invalid("eps", "this experiment needs a single eps"));
                }
            }
            ExperimentKind::ScanRho | ExperimentKind::Cutoff => {
                if self.eps.is_none() && self.kind == ExperimentKind::ScanRho {
                    return Err(Error::invalid("eps", "scan-rho needs a single eps"));
                }
                match &self.rho_list {
                    None => return Err(Error::invalid("rho_list", "this experiment needs rho_list")),
                    Some(list) if list.len() < 2 && self.kind == ExperimentKind::ScanRho => {
                        return Err(Error::invalid("rho_list", "need at least 2 radii"))
                    }
                    _ => {}
                }
            }
            ExperimentKind::CheckScaling | ExperimentKind::EpsilonBar => {
                if self.eps_grid.as_deref().is_none_or(|g| g.is_empty()) {
                    return Err(Error::invalid("eps_grid", "this experiment needs eps_grid"));
                }
                if self.kind == ExperimentKind::EpsilonBar {
                    if !matches!(self.shape, ShapeSpec::Annulus { .. }) {
                        return Err(Error::invalid("shape", "epsilon-bar runs on an annulus"));
                    }
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// raw parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct RawEntry {
    section: String,
    key: String,
    value: String,
    line: usize,
}

fn parse_raw(text: &str) -> Result<Vec<RawEntry>> {
    let mut entries: Vec<RawEntry> = Vec::new();
    let mut section = String::new();
    let mut seen: BTreeMap<(String, String), usize> = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return Err(Error::Config(format!("line {line_no}: unterminated section header")));
            };
            section = name.trim().to_string();
            if section.is_empty() {
                return Err(Error::Config(format!("line {line_no}: empty section name")));
            }
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(Error::Config(format!(
                "line {line_no}: expected `key = value`, got `{line}`"
            )));
        };
        let key = line[..eq].trim().to_string();
        let value = line[eq + 1..].trim().to_string();
        if key.is_empty() {
            return Err(Error::Config(format!("line {line_no}: empty key")));
        }
        if section.is_empty() {
            return Err(Error::Config(format!(
                "line {line_no}: key `{key}` appears before any [section] header"
            )));
        }
        if let Some(first) = seen.insert((section.clone(), key.clone()), line_no) {
            return Err(Error::Config(format!(
                "duplicate key `{section}.{key}` on lines {first} and {line_no}"
            )));
        }
        entries.push(RawEntry {
            section: section.clone(),
            key,
            value,
            line: line_no,
        });
    }
    Ok(entries)
}

/// Consumes typed values out of the raw entry list and reports leftovers.
struct Extractor {
    entries: Vec<RawEntry>,
    used: Vec<bool>,
}

impl Extractor {
    fn new(entries: Vec<RawEntry>) -> Self {
        let used = vec![false; entries.len()];
        Extractor { entries, used }
    }

    fn take(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        for (k, e) in self.entries.iter().enumerate() {
            if !self.used[k] && e.section == section && e.key == key {
                self.used[k] = true;
                return Some((e.value.clone(), e.line));
            }
        }
        None
    }

    fn finish(self) -> Result<()> {
        for (k, e) in self.entries.iter().enumerate() {
            if !self.used[k] {
                return Err(Error::Config(format!(
                    "line {}: unknown key `{}.{}`",
                    e.line, e.section, e.key
                )));
            }
        }
        Ok(())
    }
}

fn parse_f64(value: &str, line: usize, key: &str) -> Result<f64> {
    value.parse::<f64>().map_err(|_| {
        Error::Config(format!("line {line}: `{key}` expects a number, got `{value}`"))
    })
}

fn parse_usize(value: &str, line: usize, key: &str) -> Result<usize> {
    value.parse::<usize>().map_err(|_| {
        Error::Config(format!("line {line}: `{key}` expects an integer, got `{value}`"))
    })
}

fn parse_list_f64(value: &str, line: usize, key: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|part| parse_f64(part.trim(), line, key))
        .collect()
}

fn parse_pair(value: &str, line: usize, key: &str) -> Result<[f64; 2]> {
    let list = parse_list_f64(value, line, key)?;
    if list.len() != 2 {
        return Err(Error::Config(format!(
            "line {line}: `{key}` expects two numbers, got {}",
            list.len()
        )));
    }
    Ok([list[0], list[1]])
}

/// `(x1, y1) (x2, y2) ...`
fn parse_points(value: &str, line: usize, key: &str) -> Result<Vec<[f64; 2]>> {
    let mut points = Vec::new();
    let mut rest = value.trim();
    while !rest.is_empty() {
        let Some(open) = rest.find('(') else {
            return Err(Error::Config(format!(
                "line {line}: `{key}` expects `(x, y)` groups, got `{rest}`"
            )));
        };
        let Some(close) = rest[open..].find(')') else {
            return Err(Error::Config(format!("line {line}: `{key}` has an unclosed `(`")));
        };
        let inner = &rest[open + 1..open + close];
        points.push(parse_pair(inner, line, key)?);
        rest = rest[open + close + 1..].trim_start();
    }
    if points.is_empty() {
        return Err(Error::Config(format!("line {line}: `{key}` lists no points")));
    }
    Ok(points)
}

/// Parse and validate a config, optionally applying `--set section.key=value`
/// overrides before typing.
pub fn parse_config_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut entries = parse_raw(text)?;
    for (path, value) in overrides {
        let Some((section, key)) = path.split_once('.') else {
            return Err(Error::Config(format!(
                "--set expects `section.key=value`, got `{path}`"
            )));
        };
        if let Some(e) = entries
            .iter_mut()
            .find(|e| e.section == section && e.key == key)
        {
            e.value = value.clone();
        } else {
            entries.push(RawEntry {
                section: section.to_string(),
                key: key.to_string(),
                value: value.clone(),
                line: 0,
            });
        }
    }
    build(entries)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with_overrides(text, &[])
}

fn build(entries: Vec<RawEntry>) -> Result<RunConfig> {
    let mut ex = Extractor::new(entries);
    let mut cfg = RunConfig::default();

    // [experiment]
    if let Some((v, line)) = ex.take("experiment", "kind") {
        cfg.kind = ExperimentKind::parse(&v).ok_or_else(|| {
            Error::Config(format!("line {line}: unknown experiment kind `{v}`"))
        })?;
    } else {
        return Err(Error::Config("missing required key `experiment.kind`".into()));
    }
    if let Some((v, _)) = ex.take("experiment", "out") {
        cfg.out_dir = PathBuf::from(v);
    }
    if let Some((v, line)) = ex.take("experiment", "rho_list") {
        cfg.rho_list = Some(parse_list_f64(&v, line, "rho_list")?);
    }
    if let Some((v, line)) = ex.take("experiment", "n_starts") {
        cfg.n_starts = parse_usize(&v, line, "n_starts")?;
    }
    if let Some((v, line)) = ex.take("experiment", "starts") {
        cfg.starts = Some(parse_points(&v, line, "starts")?);
    }
    if let Some((v, line)) = ex.take("experiment", "n") {
        cfg.n_nodes = parse_usize(&v, line, "n")?;
    }

    macro_rules! take_f64 {
        ($section:literal, $key:literal => $slot:expr) => {
            if let Some((v, line)) = ex.take($section, $key) {
                $slot = parse_f64(&v, line, $key)?;
            }
        };
    }

    // [potential]
    take_f64!("potential", "omega0" => cfg.potential.omega0);
    take_f64!("potential", "a" => cfg.potential.quartic_coeff);
    take_f64!("potential", "b" => cfg.potential.sextic_coeff);
    take_f64!("potential", "q" => cfg.potential.q);
    take_f64!("potential", "p" => cfg.potential.p);
    take_f64!("potential", "c1" => cfg.potential.c1);
    take_f64!("potential", "c2" => cfg.potential.c2);
    take_f64!("potential", "s0" => cfg.potential.s0);
    if let Some((v, line)) = ex.take("potential", "growth_exp") {
        cfg.potential.growth_exp = Some(parse_f64(&v, line, "growth_exp")?);
    }
    if let Some((v, line)) = ex.take("potential", "scan_max") {
        cfg.scan.s_max = parse_f64(&v, line, "scan_max")?;
    }
    if let Some((v, line)) = ex.take("potential", "scan_points") {
        cfg.scan.points = parse_usize(&v, line, "scan_points")?;
    }

    // [charge]
    if let Some((v, line)) = ex.take("charge", "sigma") {
        cfg.sigma = parse_f64(&v, line, "sigma")?;
    }
    if let Some((v, line)) = ex.take("charge", "eps") {
        cfg.eps = Some(parse_f64(&v, line, "eps")?);
    }
    if let Some((v, line)) = ex.take("charge", "eps_grid") {
        cfg.eps_grid = Some(parse_list_f64(&v, line, "eps_grid")?);
    }

    // [domain]
    if let Some((v, line)) = ex.take("domain", "dim") {
        cfg.dim = parse_usize(&v, line, "dim")? as u32;
    }
    let center = match ex.take("domain", "center") {
        Some((v, line)) => parse_pair(&v, line, "center")?,
        None => [0.0, 0.0],
    };
    let shape_tag = ex.take("domain", "shape");
    let rho = ex.take("domain", "rho");
    let gamma = ex.take("domain", "gamma");
    let corners = ex.take("domain", "corners");
    let lobe_rho = ex.take("domain", "lobe_rho");
    let separation = ex.take("domain", "separation");
    let neck_halfwidth = ex.take("domain", "neck_halfwidth");
    let mask_path = ex.take("domain", "path");
    if let Some((tag, line)) = shape_tag {
        cfg.shape = match tag.as_str() {
            "ball" => ShapeSpec::Ball {
                center,
                rho: match &rho {
                    Some((v, l)) => parse_f64(v, *l, "rho")?,
                    None => 1.0,
                },
            },
            "annulus" => ShapeSpec::Annulus {
                center,
                rho: match &rho {
                    Some((v, l)) => parse_f64(v, *l, "rho")?,
                    None => 1.0,
                },
                gamma: match &gamma {
                    Some((v, l)) => parse_f64(v, *l, "gamma")?,
                    None => 4.0,
                },
            },
            "rectangle" => {
                let Some((v, l)) = &corners else {
                    return Err(Error::Config(format!(
                        "line {line}: rectangle shape needs `corners = x0, y0, x1, y1`"
                    )));
                };
                let c = parse_list_f64(v, *l, "corners")?;
                if c.len() != 4 {
                    return Err(Error::Config(format!(
                        "line {l}: `corners` expects four numbers"
                    )));
                }
                ShapeSpec::Rectangle {
                    lo: [c[0].min(c[2]), c[1].min(c[3])],
                    hi: [c[0].max(c[2]), c[1].max(c[3])],
                }
            }
            "dumbbell" => ShapeSpec::Dumbbell {
                center,
                lobe_rho: match &lobe_rho {
                    Some((v, l)) => parse_f64(v, *l, "lobe_rho")?,
                    None => 1.0,
                },
                separation: match &separation {
                    Some((v, l)) => parse_f64(v, *l, "separation")?,
                    None => 4.0,
                },
                neck_halfwidth: match &neck_halfwidth {
                    Some((v, l)) => parse_f64(v, *l, "neck_halfwidth")?,
                    None => 0.3,
                },
            },
            "maskfile" => {
                let Some((v, _)) = &mask_path else {
                    return Err(Error::Config(format!(
                        "line {line}: maskfile shape needs `path = <file>`"
                    )));
                };
                ShapeSpec::MaskFile {
                    path: PathBuf::from(v),
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "line {line}: unknown shape `{other}`"
                )))
            }
        };
    } else if rho.is_some()
        || gamma.is_some()
        || corners.is_some()
        || lobe_rho.is_some()
        || separation.is_some()
        || neck_halfwidth.is_some()
        || mask_path.is_some()
    {
        return Err(Error::Config(
            "domain parameters given without `domain.shape`".into(),
        ));
    }
    if let Some((v, line)) = ex.take("domain", "r") {
        cfg.r = parse_f64(&v, line, "r")?;
    }
    if let Some((v, line)) = ex.take("domain", "cat_hint") {
        cfg.cat_hint = parse_usize(&v, line, "cat_hint")? as u32;
    }
    let npu = ex.take("domain", "n_per_unit");
    let spacing = ex.take("domain", "h");
    match (npu, spacing) {
        (Some((v, line)), None) => cfg.n_per_unit = parse_f64(&v, line, "n_per_unit")?,
        (None, Some((v, line))) => {
            let h = parse_f64(&v, line, "h")?;
            if !(h > 0.0) {
                return Err(Error::invalid("h", format!("must be positive, got {h}")));
            }
            cfg.n_per_unit = 1.0 / h;
        }
        (Some(_), Some((_, line))) => {
            return Err(Error::Config(format!(
                "line {line}: give either `n_per_unit` or `h`, not both"
            )))
        }
        (None, None) => {}
    }

    // [solver]
    if let Some((v, line)) = ex.take("solver", "max_iters") {
        cfg.solver.max_iters = parse_usize(&v, line, "max_iters")?;
    }
    take_f64!("solver", "grad_tol" => cfg.solver.grad_tol);
    take_f64!("solver", "armijo_c" => cfg.solver.armijo_c);
    take_f64!("solver", "backtrack" => cfg.solver.backtrack);
    take_f64!("solver", "step0" => cfg.solver.step0);
    take_f64!("solver", "penalty_weight" => cfg.solver.penalty_weight);
    take_f64!("solver", "penalty_growth" => cfg.solver.penalty_growth);
    take_f64!("solver", "dedup_energy_rel" => cfg.solver.dedup_energy_rel);
    take_f64!("solver", "dedup_bary_factor" => cfg.solver.dedup_bary_factor);
    if let Some((v, line)) = ex.take("solver", "seed") {
        cfg.solver.seed = v.parse::<u64>().map_err(|_| {
            Error::Config(format!("line {line}: `seed` expects an integer, got `{v}`"))
        })?;
    }

    ex.finish()?;
    cfg.validate()?;
    Ok(cfg)
}

// ---------------------------------------------------------------------------
// canonical printing
// ---------------------------------------------------------------------------

pub fn print_config(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let push = |out: &mut String, s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    push(&mut out, "[experiment]".into());
    push(&mut out, format!("kind = {}", cfg.kind.as_str()));
    push(&mut out, format!("out = {}", cfg.out_dir.display()));
    if let Some(list) = &cfg.rho_list {
        push(&mut out, format!("rho_list = {}", join_f64(list)));
    }
    push(&mut out, format!("n_starts = {}", cfg.n_starts));
    if let Some(starts) = &cfg.starts {
        let rendered: Vec<String> = starts.iter().map(|p| format!("({}, {})", p[0], p[1])).collect();
        push(&mut out, format!("starts = {}", rendered.join(" ")));
    }
    push(&mut out, format!("n = {}", cfg.n_nodes));

    push(&mut out, "\n[potential]".into());
    push(&mut out, format!("omega0 = {}", cfg.potential.omega0));
    push(&mut out, format!("a = {}", cfg.potential.quartic_coeff));
    push(&mut out, format!("b = {}", cfg.potential.sextic_coeff));
    push(&mut out, format!("q = {}", cfg.potential.q));
    push(&mut out, format!("p = {}", cfg.potential.p));
    push(&mut out, format!("c1 = {}", cfg.potential.c1));
    push(&mut out, format!("c2 = {}", cfg.potential.c2));
    push(&mut out, format!("s0 = {}", cfg.potential.s0));
    if let Some(g) = cfg.potential.growth_exp {
        push(&mut out, format!("growth_exp = {g}"));
    }
    push(&mut out, format!("scan_max = {}", cfg.scan.s_max));
    push(&mut out, format!("scan_points = {}", cfg.scan.points));

    push(&mut out, "\n[charge]".into());
    push(&mut out, format!("sigma = {}", cfg.sigma));
    if let Some(eps) = cfg.eps {
        push(&mut out, format!("eps = {eps}"));
    }
    if let Some(grid) = &cfg.eps_grid {
        push(&mut out, format!("eps_grid = {}", join_f64(grid)));
    }

    push(&mut out, "\n[domain]".into());
    push(&mut out, format!("dim = {}", cfg.dim));
    match &cfg.shape {
        ShapeSpec::Ball { center, rho } => {
            push(&mut out, "shape = ball".into());
            push(&mut out, format!("center = {}, {}", center[0], center[1]));
            push(&mut out, format!("rho = {rho}"));
        }
        ShapeSpec::Annulus { center, rho, gamma } => {
            push(&mut out, "shape = annulus".into());
            push(&mut out, format!("center = {}, {}", center[0], center[1]));
            push(&mut out, format!("rho = {rho}"));
            push(&mut out, format!("gamma = {gamma}"));
        }
        ShapeSpec::Rectangle { lo, hi } => {
            push(&mut out, "shape = rectangle".into());
            push(
                &mut out,
                format!("corners = {}, {}, {}, {}", lo[0], lo[1], hi[0], hi[1]),
            );
        }
        ShapeSpec::Dumbbell {
            center,
            lobe_rho,
            separation,
            neck_halfwidth,
        } => {
            push(&mut out, "shape = dumbbell".into());
            push(&mut out, format!("center = {}, {}", center[0], center[1]));
            push(&mut out, format!("lobe_rho = {lobe_rho}"));
            push(&mut out, format!("separation = {separation}"));
            push(&mut out, format!("neck_halfwidth = {neck_halfwidth}"));
        }
        ShapeSpec::MaskFile { path } => {
            push(&mut out, "shape = maskfile".into());
            push(&mut out, format!("path = {}", path.display()));
        }
    }
    push(&mut out, format!("r = {}", cfg.r));
    push(&mut out, format!("cat_hint = {}", cfg.cat_hint));
    push(&mut out, format!("n_per_unit = {}", cfg.n_per_unit));

    push(&mut out, "\n[solver]".into());
    push(&mut out, format!("max_iters = {}", cfg.solver.max_iters));
    push(&mut out, format!("grad_tol = {}", cfg.solver.grad_tol));
    push(&mut out, format!("armijo_c = {}", cfg.solver.armijo_c));
    push(&mut out, format!("backtrack = {}", cfg.solver.backtrack));
    push(&mut out, format!("step0 = {}", cfg.solver.step0));
    push(&mut out, format!("penalty_weight = {}", cfg.solver.penalty_weight));
    push(&mut out, format!("penalty_growth = {}", cfg.solver.penalty_growth));
    push(&mut out, format!("seed = {}", cfg.solver.seed));
    push(&mut out, format!("dedup_energy_rel = {}", cfg.solver.dedup_energy_rel));
    push(&mut out, format!("dedup_bary_factor = {}", cfg.solver.dedup_bary_factor));
    out
}

fn join_f64(list: &[f64]) -> String {
    list.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config("[experiment]\nkind = verify-potential\n").unwrap();
        assert_eq!(cfg.kind, ExperimentKind::VerifyPotential);
        assert_eq!(cfg.potential, Potential::default());
        assert_eq!(cfg.solver, SolveOptions::default());
        assert_eq!(cfg.sigma, DEFAULT_SIGMA);
    }

    #[test]
    fn negative_sigma_names_the_field() {
        let err = parse_config("[experiment]\nkind = verify-potential\n[charge]\nsigma = -1\n")
            .unwrap_err();
        assert!(err.to_string().contains("sigma"), "{err}");
    }

    #[test]
    fn duplicate_key_reports_both_lines() {
        let text = "[experiment]\nkind = minimize\n[charge]\nsigma = 1\nsigma = 2\n";
        let err = parse_config(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('4') && msg.contains('5'), "{msg}");
    }

    #[test]
    fn unknown_key_rejected() {
        let err =
            parse_config("[experiment]\nkind = verify-potential\n[charge]\nsgima = 1\n").unwrap_err();
        assert!(err.to_string().contains("sgima"), "{err}");
    }

    #[test]
    fn syntax_error_carries_line_number() {
        let err = parse_config("[experiment]\nkind = verify-potential\nnot a pair\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn overrides_replace_values() {
        let text = "[experiment]\nkind = minimize\n[charge]\nsigma = 1\neps = 0.5\n";
        let cfg = parse_config_with_overrides(
            text,
            &[("charge.sigma".to_string(), "3.5".to_string())],
        )
        .unwrap();
        assert_eq!(cfg.sigma, 3.5);
    }

    #[test]
    fn roundtrip_examples() {
        let text = "\
[experiment]
kind = multiplicity
out = runs/mult
n_starts = 8
starts = (-2, 0) (2, 0)

[charge]
sigma = 5
eps = 0.25

[domain]
shape = dumbbell
r = 0.25
cat_hint = 2
n_per_unit = 16
";
        let cfg = parse_config(text).unwrap();
        let printed = print_config(&cfg);
        let reparsed = parse_config(&printed).unwrap();
        assert_eq!(cfg, reparsed);
    }

    proptest! {
        #[test]
        fn roundtrip_random_configs(
            sigma in 0.1f64..50.0,
            eps in 0.05f64..2.0,
            rho in 0.5f64..16.0,
            gamma in 1.1f64..8.0,
            r in 0.01f64..0.2,
            seed in 0u64..1000,
            grad_exp in 3u32..9,
        ) {
            let mut cfg = RunConfig {
                kind: ExperimentKind::EpsilonBar,
                sigma,
                eps: Some(eps),
                eps_grid: Some(vec![eps * 2.0, eps]),
                shape: ShapeSpec::Annulus { center: [0.0, 0.0], rho, gamma },
                r,
                cat_hint: 2,
                ..RunConfig::default()
            };
            cfg.solver.seed = seed;
            cfg.solver.grad_tol = 10f64.powi(-(grad_exp as i32));
            let printed = print_config(&cfg);
            let reparsed = parse_config(&printed).unwrap();
            prop_assert_eq!(cfg, reparsed);
        }
    }
}
