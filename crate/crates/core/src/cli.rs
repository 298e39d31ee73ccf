//! Command line front end. `run_cli` returns the process exit code: 0 on
//! success, 1 on numerical failure, 2 on invalid usage.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::assembly::{evaluate_solution, ExactSolution, MethodParams, Variant};
use crate::harness::{
    run_condition_study, run_convergence_cut_square, run_convergence_fitted_square, run_fixed_method_eigen_study,
    run_worst_case_circle, solve_problem, FixedMethodConfig, Geometry, ManufacturedProblem, StudyResult,
    CIRCLE_MESH_SIZES, CIRCLE_SEGMENTS, DEFAULT_TAUS, SMALL_TAUS, SQUARE_MESH_COUNTS,
};
use crate::output::{fmt_f64, write_atomic, write_study};
use crate::plot::{heatmap, Plot, Series, PALETTE};
use crate::Error;

/// Shift count of the reduced worst-case study.
pub const QUICK_SHIFTS: usize = 25;

#[derive(Debug, Parser)]
#[command(name = "cutiga", version, about = "Stabilized Nitsche cut IGA for the 2D Poisson problem")]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "CUTIGA_OUT", default_value = "results")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one manufactured problem and report its errors.
    Solve(SolveArgs),
    /// Convergence study on the square or worst case over shifted circle grids.
    Convergence(ConvergenceArgs),
    /// Condition numbers with and without basis removal over circle shifts.
    Condition(ConditionArgs),
    /// Smallest eigenvalue under refinement with the method frozen on a coarse mesh.
    Eigenstudy(EigenArgs),
    /// Write the element classification of a domain.
    ExportGeometry(GeometryArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeometryKind {
    Square,
    Circle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Ls,
    Std,
    Both,
}

impl VariantArg {
    fn variants(self) -> Vec<Variant> {
        match self {
            VariantArg::Ls => vec![Variant::LsStabilized],
            VariantArg::Std => vec![Variant::StandardNitsche],
            VariantArg::Both => vec![Variant::LsStabilized, Variant::StandardNitsche],
        }
    }
}

#[derive(Debug, Args)]
pub struct GeometryArgs {
    #[arg(long, value_enum, default_value = "square")]
    pub geometry: GeometryKind,
    /// Elements per side of the square grid.
    #[arg(long)]
    pub n: Option<usize>,
    /// Fraction of the last element row and column lying outside the square.
    #[arg(long)]
    pub delta_cut: Option<f64>,
    /// Mesh size of the circle grid.
    #[arg(long)]
    pub h: Option<f64>,
    /// Shift parameter of the circle grid in [0, 1].
    #[arg(long)]
    pub t: Option<f64>,
    /// Number of polygon edges approximating the circle.
    #[arg(long, default_value_t = CIRCLE_SEGMENTS)]
    pub segments: usize,
}

impl GeometryArgs {
    fn resolve(&self) -> Result<Geometry, String> {
        match self.geometry {
            GeometryKind::Square => {
                if self.h.is_some() || self.t.is_some() {
                    return Err("--h and --t apply to the circle geometry".into());
                }
                Ok(Geometry::Square {
                    n: self.n.unwrap_or(16),
                    delta_cut: self.delta_cut.unwrap_or(0.0),
                })
            }
            GeometryKind::Circle => {
                if self.n.is_some() || self.delta_cut.is_some() {
                    return Err("--n and --delta-cut apply to the square geometry".into());
                }
                let t = self.t.unwrap_or(0.0);
                if !(0.0..=1.0).contains(&t) {
                    return Err(format!("--t must lie in [0, 1], got {t}"));
                }
                Ok(Geometry::Circle {
                    h: self.h.unwrap_or(0.13),
                    t,
                    segments: self.segments,
                })
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct MethodArgs {
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    #[arg(long, default_value_t = MethodParams::DEFAULT_BETA)]
    pub beta: f64,
    /// Basis removal constant.
    #[arg(long, default_value_t = MethodParams::DEFAULT_REMOVAL_C)]
    pub c: f64,
}

impl MethodArgs {
    fn params(&self, tau: f64, variant: Variant) -> Result<MethodParams, Error> {
        let mut params = MethodParams::new(1.0, tau, variant);
        params.p = self.p;
        params.beta = self.beta;
        params.removal_c = self.c;
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[command(flatten)]
    pub method: MethodArgs,
    #[arg(long, value_enum, default_value = "ls")]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 0.1)]
    pub tau: f64,
    /// Disable basis function removal.
    #[arg(long)]
    pub no_removal: bool,
    /// Raster points per side for sampling the solution.
    #[arg(long, default_value_t = 101)]
    pub raster: usize,
    /// Also write the system matrix (COO text) and right-hand side.
    #[arg(long)]
    pub export_system: bool,
    /// Write the solution raster and an SVG heatmap.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[arg(long, value_enum, default_value = "square")]
    pub geometry: GeometryKind,
    /// Square only; 0 gives the fitted mesh.
    #[arg(long, default_value_t = 0.0)]
    pub delta_cut: f64,
    #[arg(long, value_enum, default_value = "both")]
    pub variant: VariantArg,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_TAUS)]
    pub tau: Vec<f64>,
    /// Use the small stabilization parameters 1e-3, 1e-4, 1e-5.
    #[arg(long, conflicts_with = "tau")]
    pub small_tau: bool,
    #[command(flatten)]
    pub method: MethodArgs,
    /// Square grid element counts.
    #[arg(long, value_delimiter = ',', default_values_t = SQUARE_MESH_COUNTS)]
    pub ns: Vec<usize>,
    /// Circle mesh sizes.
    #[arg(long, value_delimiter = ',', default_values_t = CIRCLE_MESH_SIZES)]
    pub hs: Vec<f64>,
    /// Grid shifts per circle mesh size.
    #[arg(long, default_value_t = 100)]
    pub shifts: usize,
    /// Reduced circle study with 25 shifts.
    #[arg(long, conflicts_with = "shifts")]
    pub quick: bool,
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Args)]
pub struct ConditionArgs {
    #[arg(long, default_value_t = 0.13)]
    pub h: f64,
    #[arg(long, default_value_t = 100)]
    pub shifts: usize,
    #[arg(long, value_enum, default_value = "both")]
    pub variant: VariantArg,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_TAUS)]
    pub tau: Vec<f64>,
    #[command(flatten)]
    pub method: MethodArgs,
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Args)]
pub struct EigenArgs {
    #[arg(long, default_value_t = 10)]
    pub base_n: usize,
    #[arg(long, default_value_t = 4)]
    pub levels: usize,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.5, 0.9])]
    pub delta_cuts: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 0.1])]
    pub tau: Vec<f64>,
    #[arg(long, default_value_t = MethodParams::DEFAULT_BETA)]
    pub beta: f64,
    #[arg(long, value_enum, default_value = "both")]
    pub variant: VariantArg,
    /// Largest system handled by dense eigensolves; larger ones use Lanczos.
    #[arg(long, default_value_t = 1000)]
    pub dense_threshold: usize,
    #[arg(long)]
    pub plot: bool,
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::Geometry(_) => Failure::Usage(e.to_string()),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numerical(format!("i/o error: {e}"))
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.jobs {
        Some(0) => Err(Failure::Usage("--jobs must be positive".into())),
        Some(j) => match rayon::ThreadPoolBuilder::new().num_threads(j).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(Failure::Numerical(e.to_string())),
        },
        None => dispatch(&cli),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            1
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a, &cli.out),
        Command::Convergence(a) => cmd_convergence(a, &cli.out),
        Command::Condition(a) => cmd_condition(a, &cli.out),
        Command::Eigenstudy(a) => cmd_eigenstudy(a, &cli.out),
        Command::ExportGeometry(a) => cmd_export_geometry(a, &cli.out),
    }
}

fn single_variant(v: VariantArg) -> Result<Variant, Failure> {
    match v {
        VariantArg::Ls => Ok(Variant::LsStabilized),
        VariantArg::Std => Ok(Variant::StandardNitsche),
        VariantArg::Both => Err(Failure::Usage("solve takes a single --variant (ls or std)".into())),
    }
}

fn cmd_solve(a: &SolveArgs, out: &Path) -> Result<(), Failure> {
    let geometry = a.geometry.resolve().map_err(Failure::Usage)?;
    if a.raster < 2 {
        return Err(Failure::Usage("--raster must be at least 2".into()));
    }
    let params = a.method.params(a.tau, single_variant(a.variant)?)?;
    let exact = ManufacturedProblem;
    let sol = solve_problem(&geometry, &params, !a.no_removal, &exact)
        .map_err(|e| Failure::Numerical(format!("{} solve on {geometry:?}: {e}", params.variant)))?;
    println!(
        "{} {} h = {:.6} dofs = {} removed = {}",
        geometry.tag(),
        params.variant,
        sol.domain.grid().h,
        sol.space.n_dofs(),
        sol.removal.removed.len()
    );
    println!("L2 error      {:.6e}", sol.errors.l2);
    println!("H1 semi error {:.6e}", sol.errors.h1_semi);
    println!("energy error  {:.6e}", sol.errors.energy);

    if a.export_system {
        let domain = &sol.domain;
        let sys = crate::assembly::assemble(&sol.space, domain, &sol.params, &exact).map_err(Failure::from)?;
        write_atomic(&out.join("system_matrix.coo"), sys.a.to_coo_text().as_bytes())?;
        write_atomic(&out.join("system_rhs.txt"), sys.rhs_text().as_bytes())?;
        println!("wrote {}", out.join("system_matrix.coo").display());
    }

    if a.plot {
        let verts = sol.domain.boundary().vertices();
        let (lo, hi) = verts.iter().fold(
            ((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY)),
            |(lo, hi), p| ((lo.0.min(p.x), lo.1.min(p.y)), (hi.0.max(p.x), hi.1.max(p.y))),
        );
        let m = a.raster;
        let mut csv = String::from("x,y,inside,u_h,grad_norm,u_exact\n");
        let mut values = Vec::with_capacity(m * m);
        for j in 0..m {
            for i in 0..m {
                let pt = crate::Point::new(
                    lo.0 + (hi.0 - lo.0) * i as f64 / (m - 1) as f64,
                    lo.1 + (hi.1 - lo.1) * j as f64 / (m - 1) as f64,
                );
                let inside = sol.domain.boundary().contains(&pt);
                let (u, g) = evaluate_solution(&sol.space, &sol.coeffs, &pt);
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    fmt_f64(pt.x),
                    fmt_f64(pt.y),
                    inside as u8,
                    fmt_f64(u),
                    fmt_f64(g.norm()),
                    fmt_f64(exact.u(&pt))
                ));
                values.push(inside.then_some(u));
            }
        }
        let stem = format!("solve_{}_{}", geometry.tag(), params.variant.tag());
        write_atomic(&out.join(format!("{stem}_raster.csv")), csv.as_bytes())?;
        let svg = heatmap("u_h", &values, m, m, lo, hi);
        write_atomic(&out.join(format!("{stem}.svg")), svg.as_bytes())?;
        println!("wrote {}", out.join(format!("{stem}.svg")).display());
    }
    Ok(())
}

fn print_rates(s: &StudyResult) {
    println!("{} {} tau = {} beta = {}", s.study, s.variant, s.tau, s.beta);
    println!("  {:>10} {:>12} {:>12} {:>12}", "h", "L2", "H1", "energy");
    for r in &s.summary {
        let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4e}"));
        println!(
            "  {:>10.5} {:>12} {:>12} {:>12}",
            r.h,
            f(r.l2_error),
            f(r.h1_error),
            f(r.energy_error)
        );
    }
    println!("  {:>10} {:>12} {:>12} {:>12}", "rate", "L2", "H1", "energy");
    for r in &s.rates {
        println!(
            "  {:>10.5} {:>12.3} {:>12.3} {:>12.3}",
            r.h_fine, r.l2_rate, r.h1_rate, r.energy_rate
        );
    }
}

fn report_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn cmd_convergence(a: &ConvergenceArgs, out: &Path) -> Result<(), Failure> {
    if a.geometry == GeometryKind::Circle && a.delta_cut != 0.0 {
        return Err(Failure::Usage("--delta-cut applies to the square geometry".into()));
    }
    let taus: Vec<f64> = if a.small_tau { SMALL_TAUS.to_vec() } else { a.tau.clone() };
    let shifts = if a.quick { QUICK_SHIFTS } else { a.shifts };
    if shifts == 0 {
        return Err(Failure::Usage("--shifts must be positive".into()));
    }
    let mut studies = Vec::new();
    let mut lsfail = None;
    for variant in a.variant.variants() {
        for &tau in &taus {
            let params = a.method.params(tau, variant)?;
            let s = match a.geometry {
                GeometryKind::Square if a.delta_cut == 0.0 => run_convergence_fitted_square(&params, &a.ns),
                GeometryKind::Square => run_convergence_cut_square(&params, &a.ns, a.delta_cut),
                GeometryKind::Circle => Ok(run_worst_case_circle(&params, &a.hs, shifts)),
            }
            .map_err(|e| match e {
                Error::Run { .. } => Failure::Numerical(e.to_string()),
                other => Failure::from(other),
            })?;
            print_rates(&s);
            if s.failures() > 0 {
                let first = s.records.iter().find(|r| r.failed).expect("failure exists");
                let msg = format!(
                    "{} tau = {}: {} failed runs, first at h = {} t = {:?}: {}",
                    s.variant,
                    s.tau,
                    s.failures(),
                    first.h,
                    first.t,
                    first.message.as_deref().unwrap_or("")
                );
                eprintln!("warning: {msg}");
                if variant == Variant::LsStabilized && lsfail.is_none() {
                    lsfail = Some(msg);
                }
            }
            report_written(&write_study(out, &s)?);
            studies.push(s);
        }
    }
    if a.plot {
        let mut plot = Plot::new("worst-case errors", "h", "error").log_log();
        for (k, s) in studies.iter().enumerate() {
            let l2: Vec<(f64, f64)> = s.summary.iter().filter_map(|r| Some((r.h, r.l2_error?))).collect();
            let en: Vec<(f64, f64)> = s.summary.iter().filter_map(|r| Some((r.h, r.energy_error?))).collect();
            let color = PALETTE[k % PALETTE.len()];
            plot = plot
                .with_series(Series::new(format!("L2 {} {}", s.variant, s.tau), l2, color))
                .with_series(Series::new(format!("E {} {}", s.variant, s.tau), en, color).dashed());
        }
        if let Some(first) = studies.first() {
            let p = a.method.p as f64;
            let l2: Vec<(f64, f64)> = first.summary.iter().filter_map(|r| Some((r.h, r.l2_error?))).collect();
            let en: Vec<(f64, f64)> = first.summary.iter().filter_map(|r| Some((r.h, r.energy_error?))).collect();
            plot = plot.reference_slope(&l2, p + 1.0).reference_slope(&en, p);
        }
        let path = out.join(format!("convergence_{:?}.svg", a.geometry).to_lowercase());
        write_atomic(&path, plot.render().as_bytes())?;
        println!("wrote {}", path.display());
    }
    match lsfail {
        Some(msg) => Err(Failure::Numerical(msg)),
        None => Ok(()),
    }
}

fn cmd_condition(a: &ConditionArgs, out: &Path) -> Result<(), Failure> {
    if a.shifts == 0 {
        return Err(Failure::Usage("--shifts must be positive".into()));
    }
    let mut studies = Vec::new();
    for variant in a.variant.variants() {
        for &tau in &a.tau {
            let params = a.method.params(tau, variant)?;
            let s = run_condition_study(&params, a.h, a.shifts).map_err(|e| match e {
                Error::InvalidParameter(_) | Error::Geometry(_) => Failure::Usage(e.to_string()),
                other => Failure::Numerical(format!("{variant} tau = {tau}: {other}")),
            })?;
            let kmax = |f: fn(&crate::harness::RunRecord) -> Option<f64>| {
                s.records.iter().filter_map(f).fold(0.0, f64::max)
            };
            let lmin = s.records.iter().filter_map(|r| r.lambda_min).fold(f64::INFINITY, f64::min);
            println!(
                "condition {} tau = {} h = {}: max kappa = {:.3e}, max kappa (removal) = {:.3e}, min lambda_min = {:.3e}",
                s.variant,
                s.tau,
                a.h,
                kmax(|r| r.kappa),
                kmax(|r| r.kappa_br),
                lmin
            );
            if s.failures() > 0 {
                eprintln!("warning: {} shifts with an indefinite reduced matrix", s.failures());
            }
            report_written(&write_study(out, &s)?);
            studies.push(s);
        }
    }
    if a.plot {
        let mut plot = Plot::new(format!("condition numbers, h = {}", a.h), "t", "kappa");
        plot.log_y = true;
        for (k, s) in studies.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let before: Vec<(f64, f64)> = s.records.iter().filter_map(|r| Some((r.t?, r.kappa?))).collect();
            let after: Vec<(f64, f64)> = s.records.iter().filter_map(|r| Some((r.t?, r.kappa_br?))).collect();
            plot = plot
                .with_series(Series::new(format!("{} {} no removal", s.variant, s.tau), before, color).dashed())
                .with_series(Series::new(format!("{} {} removal", s.variant, s.tau), after, color));
        }
        let path = out.join("condition.svg");
        write_atomic(&path, plot.render().as_bytes())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_eigenstudy(a: &EigenArgs, out: &Path) -> Result<(), Failure> {
    if a.base_n < 3 || a.levels == 0 {
        return Err(Failure::Usage("--base-n must be at least 3 and --levels positive".into()));
    }
    let cfg = FixedMethodConfig {
        base_n: a.base_n,
        levels: a.levels,
        delta_cuts: a.delta_cuts.clone(),
        taus: a.tau.clone(),
        beta: a.beta,
        variants: a.variant.variants(),
        dense_threshold: a.dense_threshold,
    };
    let studies = run_fixed_method_eigen_study(&cfg).map_err(Failure::from)?;
    for s in &studies {
        println!("eigenstudy {} tau = {}", s.variant, s.tau);
        for r in &s.records {
            println!(
                "  delta_cut = {:.2} level = {} dofs = {:>6} lambda_min = {:+.6e}",
                r.delta_cut.unwrap_or(0.0),
                r.refinement.unwrap_or(0),
                r.n_dofs,
                r.lambda_min.unwrap_or(f64::NAN)
            );
        }
        report_written(&write_study(out, s)?);
    }
    if a.plot {
        let mut plot = Plot::new("smallest eigenvalue, frozen method", "refinement", "|lambda_min| (red: negative)");
        plot.log_y = true;
        let mut k = 0;
        for s in &studies {
            for &dc in &a.delta_cuts {
                let rows: Vec<_> = s.records.iter().filter(|r| r.delta_cut == Some(dc)).collect();
                let pts = rows
                    .iter()
                    .filter_map(|r| Some((r.refinement? as f64, r.lambda_min?.abs())))
                    .collect();
                let color = PALETTE[k % PALETTE.len()];
                let mut series = Series::new(format!("{} tau {} dc {}", s.variant, s.tau, dc), pts, color);
                series.marker_colors = Some(
                    rows.iter()
                        .map(|r| if r.lambda_min.unwrap_or(0.0) < 0.0 { "#d62728" } else { color }.to_string())
                        .collect(),
                );
                plot = plot.with_series(series);
                k += 1;
            }
        }
        let path = out.join("eigenstudy.svg");
        write_atomic(&path, plot.render().as_bytes())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_export_geometry(a: &GeometryArgs, out: &Path) -> Result<(), Failure> {
    let geometry = a.resolve().map_err(Failure::Usage)?;
    let domain = geometry.build().map_err(Failure::from)?;
    let name = match geometry {
        Geometry::Square { n, delta_cut } => format!("geometry_square_n{n}_dc{delta_cut}.txt"),
        Geometry::Circle { h, t, .. } => format!("geometry_circle_h{h}_t{t}.txt"),
    };
    let path = out.join(name);
    write_atomic(&path, domain.export_geometry_text().as_bytes())?;
    println!(
        "{} elements: {} interior, {} cut, {} outside",
        domain.grid().n_elements(),
        domain.count(crate::ElementKind::Interior),
        domain.count(crate::ElementKind::Cut),
        domain.count(crate::ElementKind::Outside)
    );
    println!("wrote {}", path.display());
    Ok(())
}
