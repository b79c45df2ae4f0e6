use std::path::Path;

use livsic_core::basis::{first_obstruction, kernel_basis, BasisElement, BasisError, BasisGrid, Obstruction};
use livsic_core::cohomology::{
    alternating_coefficient_check, horseshoe_variation_check, ladder, neumann_solve, CohomologyError, LadderConfig,
    SolveReport,
};
use livsic_core::map_model::{find_horseshoe, Covering, MapError};
use livsic_core::observables::inner_product_grid;
use livsic_core::transfer_operator::{density_for, TransferError};
use livsic_core::verify::{run_suites, CheckOutcome, VerifyConfig};
use livsic_core::{build_map, Interval, InvariantDensity, MapSpec, Observable, PiecewiseMap};
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, Loaded};
use crate::output::{num, Writer};

#[derive(Debug, Clone, Copy)]
pub enum Command {
    Density,
    Solve,
    Depth,
    Basis,
    Verify,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("`{0}` needs an [observable] section")]
    MissingObservable(&'static str),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Cohomology(#[from] CohomologyError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Config(_) => "cli::ConfigError",
            CliError::MissingObservable(_) => "cli::MissingObservable",
            CliError::Map(e) => e.code(),
            CliError::Transfer(e) => e.code(),
            CliError::Cohomology(e) => e.code(),
            CliError::Basis(e) => e.code(),
            CliError::Io { .. } => "cli::Io",
        }
    }

    /// Bad maps and horseshoe candidates are configuration problems.
    pub fn exit_status(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::MissingObservable(_) | CliError::Map(_) => 2,
            _ => 3,
        }
    }
}

struct Io<'a>(&'a Path);

impl Io<'_> {
    fn wrap(&self, source: std::io::Error) -> CliError {
        CliError::Io { path: self.0.display().to_string(), source }
    }
}

struct Setup {
    map: PiecewiseMap,
    density: InvariantDensity,
}

fn setup(loaded: &Loaded) -> Result<Setup, CliError> {
    let c = &loaded.config;
    let mut map = build_map(&c.map)?;
    if let Some(hs) = c.horseshoe {
        let witness = find_horseshoe(&map, hs.j, hs.j1, hs.j2)?;
        map = map.with_horseshoe(witness);
    }
    let density = density_for(&map, c.grid.n, c.grid.tol, c.grid.max_iter)?;
    Ok(Setup { map, density })
}

fn observable(loaded: &Loaded, command: &'static str) -> Result<Observable, CliError> {
    loaded.observable()?.ok_or(CliError::MissingObservable(command))
}

/// Returns `false` only when `verify` recorded a failing check.
pub fn execute(command: Command, loaded: &Loaded, out: &Path) -> Result<bool, CliError> {
    let name = match command {
        Command::Density => "density",
        Command::Solve => "solve",
        Command::Depth => "depth",
        Command::Basis => "basis",
        Command::Verify => "verify",
    };
    // fail on a missing observable before any numerics
    let u = match command {
        Command::Solve | Command::Depth => Some(observable(loaded, name)?),
        Command::Basis => loaded.observable()?,
        _ => None,
    };
    let s = setup(loaded)?;
    let io = Io(out);
    let w = Writer::new(out, name, loaded.hash()).map_err(|e| io.wrap(e))?;
    match command {
        Command::Density => density(loaded, &s, &w).map_err(|e| io.wrap(e))?,
        Command::Solve => solve(loaded, &s, u.as_ref().expect("checked"), &w, &io)?,
        Command::Depth => depth(loaded, &s, u.as_ref().expect("checked"), &w, &io)?,
        Command::Basis => basis(loaded, &s, u.as_ref(), &w, &io)?,
        Command::Verify => return verify(loaded, &s, &w, &io),
    }
    Ok(true)
}

#[derive(Serialize)]
struct DensityBody<'a> {
    map: &'a MapSpec,
    n: usize,
    support: Interval,
    core: Interval,
    expansion: f64,
    /// Extremes of `h` on the core.
    min: f64,
    max: f64,
    integral: f64,
    residual: f64,
    iterations: usize,
}

fn density(loaded: &Loaded, s: &Setup, w: &Writer) -> std::io::Result<()> {
    let h = &s.density;
    let xs = h.h.midpoints();
    w.csv("density.csv", &["x", "h"], xs.iter().zip(&h.h.values).map(|(x, v)| vec![num(*x), num(*v)]))?;
    w.json(
        "density.json",
        &DensityBody {
            map: &loaded.config.map,
            n: h.n(),
            support: h.support(),
            core: h.core,
            expansion: s.map.expansion,
            min: h.a,
            max: h.b,
            integral: h.h.integral(),
            residual: h.residual,
            iterations: h.iterations,
        },
    )
}

#[derive(Serialize)]
struct SolveBody<'a> {
    map: &'a MapSpec,
    n: usize,
    eps_tail: f64,
    eps_res: f64,
    #[serde(flatten)]
    report: &'a SolveReport,
}

fn solve(loaded: &Loaded, s: &Setup, u: &Observable, w: &Writer, io: &Io) -> Result<(), CliError> {
    let cfg = &loaded.config.solver;
    let report = neumann_solve(&s.map, &s.density, u, cfg)?;
    if let Some(v) = &report.solution {
        let xs = v.midpoints();
        w.csv("solution.csv", &["x", "v"], xs.iter().zip(&v.values).map(|(x, y)| vec![num(*x), num(*y)]))
            .map_err(|e| io.wrap(e))?;
    }
    let body = SolveBody {
        map: &loaded.config.map,
        n: s.density.n(),
        eps_tail: cfg.eps_tail,
        eps_res: cfg.eps_res,
        report: &report,
    };
    w.json("solve.json", &body).map_err(|e| io.wrap(e))
}

#[derive(Serialize)]
struct BasisSummary {
    kind: &'static str,
    size: usize,
    levels: usize,
}

#[derive(Serialize)]
struct DepthBody<'a> {
    map: &'a MapSpec,
    n: usize,
    p: f64,
    /// `null` when the observable is constant modulo the basis.
    depth: Option<usize>,
    constant: bool,
    obstruction: Option<Obstruction>,
    bound: Option<f64>,
    covering: Option<Covering>,
    alternating_check: Option<bool>,
    horseshoe_check: Option<bool>,
    basis: Option<BasisSummary>,
    basis_error: Option<&'static str>,
    variation_trace: &'a [f64],
    sup_trace: &'a [f64],
    composition_residuals: &'a [f64],
    rungs: &'a [SolveReport],
    caveat: Option<&'a str>,
}

fn basis_kind(map: &PiecewiseMap) -> &'static str {
    match map.kind {
        livsic_core::MapKind::Doubling { .. } => "fourier",
        _ => "lambda",
    }
}

fn depth(loaded: &Loaded, s: &Setup, u: &Observable, w: &Writer, io: &Io) -> Result<(), CliError> {
    let c = &loaded.config;
    let (map, h) = (&s.map, &s.density);
    // Without a basis the ladder still runs, just without tables or a bound.
    let (grid, basis_error) = match kernel_basis(map, h, c.basis.n_max, c.basis.budget, c.basis.max_depth) {
        Ok(b) if !b.is_empty() => (Some(BasisGrid::new(&b, map, h, c.basis.levels)), None),
        Ok(_) => (None, Some("basis::EmptyFamily")),
        Err(e) => (None, Some(e.code())),
    };
    let cfg = LadderConfig {
        solver: c.solver,
        p: c.ladder.p,
        max_depth: c.ladder.max_depth,
        threshold: c.ladder.threshold,
        constant_tol: c.ladder.constant_tol,
    };
    let r = ladder(map, h, u, &cfg, grid.as_ref())?;
    let alternating_check = match r.obstruction {
        Some(Obstruction::At { row, level, .. }) if !r.tables.is_empty() => {
            Some(alternating_coefficient_check(&r.tables, row, level))
        }
        _ => None,
    };
    let horseshoe_check = match map.horseshoe {
        Some(_) => Some(horseshoe_variation_check(map, u, c.ladder.p, h.n())?),
        None => None,
    };

    let wrap = |e| io.wrap(e);
    for (i, g) in r.chain.iter().enumerate() {
        let xs = g.midpoints();
        w.csv(&format!("rung_{i}.csv"), &["x", "u"], xs.iter().zip(&g.values).map(|(x, v)| vec![num(*x), num(*v)]))
            .map_err(wrap)?;
    }
    let rows = (0..r.variation_trace.len())
        .map(|i| vec![i.to_string(), num(r.variation_trace[i]), num(r.sup_trace[i]), num(r.composition_residuals[i])]);
    w.csv("variation_trace.csv", &["rung", "variation", "sup", "composition_residual"], rows).map_err(wrap)?;

    let body = DepthBody {
        map: &c.map,
        n: h.n(),
        p: r.p,
        depth: r.depth_value(),
        constant: r.depth_value().is_none(),
        obstruction: r.obstruction,
        bound: r.bound,
        covering: r.covering,
        alternating_check,
        horseshoe_check,
        basis: grid.as_ref().map(|g| BasisSummary {
            kind: basis_kind(map),
            size: g.labels.len(),
            levels: g.levels - 1,
        }),
        basis_error,
        variation_trace: &r.variation_trace,
        sup_trace: &r.sup_trace,
        composition_residuals: &r.composition_residuals,
        rungs: &r.rung_reports,
        caveat: r.caveat.as_deref(),
    };
    w.json("depth.json", &body).map_err(wrap)
}

#[derive(Serialize)]
struct ElementRow<'a> {
    id: usize,
    label: &'a str,
    norm_check: f64,
    kernel_residual: f64,
}

#[derive(Serialize)]
struct BasisBody<'a> {
    map: &'a MapSpec,
    n: usize,
    kind: &'static str,
    levels: usize,
    elements: Vec<ElementRow<'a>>,
    /// `max |⟨φ_a, φ_b⟩ − δ_ab|` at level 0.
    orthonormality_defect: f64,
    obstruction: Option<Obstruction>,
}

fn basis(loaded: &Loaded, s: &Setup, u: Option<&Observable>, w: &Writer, io: &Io) -> Result<(), CliError> {
    let c = &loaded.config;
    let (map, h) = (&s.map, &s.density);
    let elements: Vec<BasisElement> = kernel_basis(map, h, c.basis.n_max, c.basis.budget, c.basis.max_depth)?;
    let grid = BasisGrid::new(&elements, map, h, c.basis.levels);
    let mut defect = 0.0f64;
    for (a, va) in grid.values.iter().enumerate() {
        for (b, vb) in grid.values.iter().enumerate().skip(a) {
            let want = if a == b { 1.0 } else { 0.0 };
            defect = defect.max((inner_product_grid(&va[0], &vb[0], &h.h) - want).abs());
        }
    }
    let mut obstruction = None;
    if let Some(u) = u {
        let table = grid.table_of(u);
        obstruction = Some(first_obstruction(&table, c.ladder.threshold));
        let mut header: Vec<String> = vec!["row".into(), "label".into()];
        header.extend((0..=table.levels).map(|j| format!("c{j}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows = table.entries.iter().enumerate().map(|(i, row)| {
            let mut r = vec![i.to_string(), table.labels[i].clone()];
            r.extend(row.iter().map(|v| num(*v)));
            r
        });
        w.csv("coefficients.csv", &header, rows).map_err(|e| io.wrap(e))?;
    }
    let body = BasisBody {
        map: &c.map,
        n: h.n(),
        kind: basis_kind(map),
        levels: c.basis.levels,
        elements: elements
            .iter()
            .map(|e| ElementRow {
                id: e.id,
                label: &e.label,
                norm_check: e.norm_check,
                kernel_residual: e.kernel_residual,
            })
            .collect(),
        orthonormality_defect: defect,
        obstruction,
    };
    w.json("basis.json", &body).map_err(|e| io.wrap(e))
}

#[derive(Serialize)]
struct VerifyBody<'a> {
    map: &'a MapSpec,
    n: usize,
    seed: u64,
    trials: usize,
    passed: usize,
    failed: usize,
    checks: &'a [CheckOutcome],
}

fn verify(loaded: &Loaded, s: &Setup, w: &Writer, io: &Io) -> Result<bool, CliError> {
    let c = &loaded.config;
    let cfg =
        VerifyConfig { trials: c.verify.trials, seed: c.seed, basis_levels: c.basis.levels, n_max: c.basis.n_max };
    let checks = run_suites(&s.map, &s.density, &cfg);
    let failed = checks.iter().filter(|o| !o.passed).count();
    let width = checks.iter().map(|o| o.name.chars().count()).max().unwrap_or(0);
    for o in &checks {
        let status = if o.passed { "ok" } else { "FAIL" };
        let (worst, tol) = (format!("{:.3e}", o.worst), format!("{:.1e}", o.tolerance));
        println!("{:<18} {:<width$}  {worst:>10} ≤ {tol:<8} {status}", o.suite, o.name);
    }
    println!("{} of {} checks passed", checks.len() - failed, checks.len());
    let body = VerifyBody {
        map: &c.map,
        n: s.density.n(),
        seed: c.seed,
        trials: c.verify.trials,
        passed: checks.len() - failed,
        failed,
        checks: &checks,
    };
    w.json("verify.json", &body).map_err(|e| io.wrap(e))?;
    Ok(failed == 0)
}
