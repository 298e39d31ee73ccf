//! Manufactured-solution experiments: convergence on fitted and cut squares,
//! worst-case convergence over shifted circle grids, the conditioning sweep
//! and the frozen-method smallest-eigenvalue study.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{
    assemble, basis_energy_norms, error_norms, ErrorNorms, ExactSolution, MethodParams, Variant, ZeroData,
};
use crate::geometry::{make_unit_circle_domain, make_unit_square_domain, ImmersedDomain};
use crate::linalg::{
    basis_removal, restrict_system, solve_spd, sym_eigen_extremes, RemovalReport, DEFAULT_DENSE_THRESHOLD,
};
use crate::spline::TensorSplineSpace;
use crate::{Error, Point, Vector};

/// Polygon resolution of the unit circle.
pub const CIRCLE_SEGMENTS: usize = 4096;

pub const CIRCLE_MESH_SIZES: [f64; 4] = [0.26, 0.13, 0.065, 0.0325];
pub const SQUARE_MESH_COUNTS: [usize; 4] = [8, 16, 32, 64];
pub const DEFAULT_TAUS: [f64; 3] = [1.0, 0.1, 0.01];
pub const SMALL_TAUS: [f64; 3] = [1e-3, 1e-4, 1e-5];

/// `u(x, y) = (sin 2x + x cos 3y) / 10`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ManufacturedProblem;

impl ExactSolution for ManufacturedProblem {
    fn u(&self, x: &Point) -> f64 {
        0.1 * ((2.0 * x.x).sin() + x.x * (3.0 * x.y).cos())
    }

    fn grad_u(&self, x: &Point) -> Vector {
        Vector::new(
            0.1 * (2.0 * (2.0 * x.x).cos() + (3.0 * x.y).cos()),
            -0.3 * x.x * (3.0 * x.y).sin(),
        )
    }

    fn laplacian_u(&self, x: &Point) -> f64 {
        0.1 * (-4.0 * (2.0 * x.x).sin() - 9.0 * x.x * (3.0 * x.y).cos())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Geometry {
    Square { n: usize, delta_cut: f64 },
    Circle { h: f64, t: f64, segments: usize },
}

impl Geometry {
    pub fn circle(h: f64, t: f64) -> Self {
        Geometry::Circle {
            h,
            t,
            segments: CIRCLE_SEGMENTS,
        }
    }

    pub fn build(&self) -> Result<ImmersedDomain, Error> {
        Ok(match *self {
            Geometry::Square { n, delta_cut } => make_unit_square_domain(n, delta_cut)?,
            Geometry::Circle { h, t, segments } => make_unit_circle_domain(h, t, segments)?,
        })
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Geometry::Square { .. } => "square",
            Geometry::Circle { .. } => "circle",
        }
    }
}

/// One row of a study. Fields that a study does not compute stay `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunRecord {
    pub geometry: String,
    pub h: f64,
    pub n: Option<usize>,
    pub t: Option<f64>,
    pub delta_cut: Option<f64>,
    pub refinement: Option<usize>,
    pub variant: String,
    pub tau: f64,
    pub beta: f64,
    pub c: Option<f64>,
    pub l2_error: Option<f64>,
    pub h1_error: Option<f64>,
    pub energy_error: Option<f64>,
    pub n_dofs: usize,
    pub n_removed: usize,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub kappa: Option<f64>,
    pub lambda_min_br: Option<f64>,
    pub lambda_max_br: Option<f64>,
    pub kappa_br: Option<f64>,
    pub failed: bool,
    pub message: Option<String>,
    pub wall_time_s: f64,
}

impl RunRecord {
    fn base(geometry: &Geometry, h: f64, params: &MethodParams) -> Self {
        let (n, t, delta_cut) = match *geometry {
            Geometry::Square { n, delta_cut } => (Some(n), None, Some(delta_cut)),
            Geometry::Circle { t, .. } => (None, Some(t), None),
        };
        Self {
            geometry: geometry.tag().to_string(),
            h,
            n,
            t,
            delta_cut,
            variant: params.variant.tag().to_string(),
            tau: params.tau,
            beta: params.beta,
            ..Default::default()
        }
    }

    /// Copy without the wall time, for determinism checks.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time_s: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRecord {
    pub h_coarse: f64,
    pub h_fine: f64,
    pub l2_rate: f64,
    pub h1_rate: f64,
    pub energy_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyResult {
    pub study: String,
    pub variant: String,
    pub tau: f64,
    pub beta: f64,
    pub c: Option<f64>,
    /// Every run.
    pub records: Vec<RunRecord>,
    /// One row per mesh size (worst case over shifts for circle studies).
    pub summary: Vec<RunRecord>,
    pub rates: Vec<RateRecord>,
}

impl StudyResult {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.failed).count()
    }

    /// `<study>_<variant>_tau<tau>_beta<beta>`.
    pub fn file_stem(&self) -> String {
        format!("{}_{}_tau{}_beta{}", self.study, self.variant, self.tau, self.beta)
    }
}

/// `log(e_coarse / e_fine) / log(h_coarse / h_fine)` for successive pairs.
pub fn convergence_rates(hs: &[f64], errors: &[f64]) -> Vec<f64> {
    hs.windows(2)
        .zip(errors.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

fn rate_table(summary: &[RunRecord]) -> Vec<RateRecord> {
    let hs: Vec<f64> = summary.iter().map(|r| r.h).collect();
    let pick = |f: fn(&RunRecord) -> Option<f64>| -> Vec<f64> { summary.iter().map(|r| f(r).unwrap_or(f64::NAN)).collect() };
    let l2 = convergence_rates(&hs, &pick(|r| r.l2_error));
    let h1 = convergence_rates(&hs, &pick(|r| r.h1_error));
    let en = convergence_rates(&hs, &pick(|r| r.energy_error));
    (0..l2.len())
        .map(|k| RateRecord {
            h_coarse: hs[k],
            h_fine: hs[k + 1],
            l2_rate: l2[k],
            h1_rate: h1[k],
            energy_rate: en[k],
        })
        .collect()
}

/// Discrete solution together with what produced it.
#[derive(Debug, Clone)]
pub struct Solution {
    pub domain: ImmersedDomain,
    pub space: TensorSplineSpace,
    pub params: MethodParams,
    pub coeffs: Vec<f64>,
    pub removal: RemovalReport,
    pub errors: ErrorNorms,
}

/// Builds, assembles and solves one manufactured problem. Basis removal uses the
/// energy norms of the stabilized method for both variants.
pub fn solve_problem(
    geometry: &Geometry,
    params: &MethodParams,
    removal: bool,
    exact: &dyn ExactSolution,
) -> Result<Solution, Error> {
    let domain = geometry.build()?;
    let h = domain.grid().h;
    let params = MethodParams { delta: h, ..*params };
    let space = TensorSplineSpace::new(&domain, params.p)?;
    let sys = assemble(&space, &domain, &params, &ExactAsData(exact))?;
    let report = if removal {
        let ls = MethodParams {
            variant: Variant::LsStabilized,
            ..params
        };
        let norms = basis_energy_norms(&space, &domain, &ls)?;
        basis_removal(&norms, params.removal_c, h, params.p)
    } else {
        RemovalReport::none(space.n_dofs())
    };
    let reduced = restrict_system(&sys, &report)?;
    let x = solve_spd(&reduced.a, &reduced.b)?;
    let coeffs = reduced.embed(&x);
    let errors = error_norms(&space, &domain, &params, &coeffs, exact)?;
    Ok(Solution {
        domain,
        space,
        params,
        coeffs,
        removal: report,
        errors,
    })
}

struct ExactAsData<'a>(&'a dyn ExactSolution);

impl crate::assembly::ProblemData for ExactAsData<'_> {
    fn f(&self, x: &Point) -> f64 {
        -self.0.laplacian_u(x)
    }

    fn g(&self, x: &Point) -> f64 {
        self.0.u(x)
    }

    fn grad_g(&self, x: &Point) -> Vector {
        self.0.grad_u(x)
    }
}

fn geometry_h(geometry: &Geometry) -> f64 {
    match *geometry {
        Geometry::Square { n, delta_cut } => 1.0 / (n as f64 - delta_cut),
        Geometry::Circle { h, .. } => h,
    }
}

/// Runs one solve and records it; failures become records instead of errors.
pub fn run_single(geometry: &Geometry, params: &MethodParams, removal: bool) -> RunRecord {
    let start = Instant::now();
    let mut rec = RunRecord::base(geometry, geometry_h(geometry), params);
    if removal {
        rec.c = Some(params.removal_c);
    }
    match solve_problem(geometry, params, removal, &ManufacturedProblem) {
        Ok(sol) => {
            rec.h = sol.domain.grid().h;
            rec.l2_error = Some(sol.errors.l2);
            rec.h1_error = Some(sol.errors.h1_semi);
            rec.energy_error = Some(sol.errors.energy);
            rec.n_dofs = sol.space.n_dofs();
            rec.n_removed = sol.removal.removed.len();
        }
        Err(e) => {
            rec.failed = true;
            rec.message = Some(e.to_string());
        }
    }
    rec.wall_time_s = start.elapsed().as_secs_f64();
    rec
}

fn study(name: &str, params: &MethodParams, c: Option<f64>, records: Vec<RunRecord>, summary: Vec<RunRecord>) -> StudyResult {
    let rates = rate_table(&summary);
    StudyResult {
        study: name.to_string(),
        variant: params.variant.tag().to_string(),
        tau: params.tau,
        beta: params.beta,
        c,
        records,
        summary,
        rates,
    }
}

fn square_study(name: &str, params: &MethodParams, ns: &[usize], delta_cut: f64) -> Result<StudyResult, Error> {
    let records: Vec<RunRecord> = ns
        .par_iter()
        .map(|&n| {
            let geometry = Geometry::Square { n, delta_cut };
            let rec = run_single(&geometry, params, false);
            if rec.failed {
                let msg = rec.message.clone().unwrap_or_default();
                Err(Error::InvalidParameter(msg).with_context(format!("{name}: n = {n}, delta_cut = {delta_cut}")))
            } else {
                Ok(rec)
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(study(name, params, None, records.clone(), records))
}

/// Fitted unit square, no basis removal.
pub fn run_convergence_fitted_square(params: &MethodParams, ns: &[usize]) -> Result<StudyResult, Error> {
    square_study("convergence_square_fitted", params, ns, 0.0)
}

/// Unit square whose last row and column stick out by `delta_cut h`, no removal.
pub fn run_convergence_cut_square(params: &MethodParams, ns: &[usize], delta_cut: f64) -> Result<StudyResult, Error> {
    if !(0.0..1.0).contains(&delta_cut) {
        return Err(crate::geometry::GeometryError::InvalidDeltaCut(delta_cut).into());
    }
    square_study("convergence_square_cut", params, ns, delta_cut)
}

/// Shift parameters `t_k = k / (n - 1)`.
pub fn shifts(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|k| k as f64 / (n - 1) as f64).collect(),
    }
}

fn worst(records: &[RunRecord]) -> RunRecord {
    let ok: Vec<&RunRecord> = records.iter().filter(|r| !r.failed).collect();
    let mut out = records[0].clone();
    out.t = None;
    let max_of = |f: fn(&RunRecord) -> Option<f64>| ok.iter().filter_map(|r| f(r)).fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    out.l2_error = max_of(|r| r.l2_error);
    out.h1_error = max_of(|r| r.h1_error);
    out.energy_error = max_of(|r| r.energy_error);
    out.n_dofs = records.iter().map(|r| r.n_dofs).max().unwrap_or(0);
    out.n_removed = records.iter().map(|r| r.n_removed).max().unwrap_or(0);
    out.failed = records.iter().any(|r| r.failed);
    out.message = out.failed.then(|| format!("{} of {} shifts failed", records.len() - ok.len(), records.len()));
    out.wall_time_s = records.iter().map(|r| r.wall_time_s).sum();
    out
}

/// Worst case over `n_shifts` grid shifts per mesh size, with basis removal.
pub fn run_worst_case_circle(params: &MethodParams, hs: &[f64], n_shifts: usize) -> StudyResult {
    let ts = shifts(n_shifts);
    let mut records = Vec::new();
    let mut summary = Vec::new();
    for &h in hs {
        let per_h: Vec<RunRecord> = ts
            .par_iter()
            .map(|&t| run_single(&Geometry::circle(h, t), params, true))
            .collect();
        summary.push(worst(&per_h));
        records.extend(per_h);
    }
    study("worst_case_circle", params, Some(params.removal_c), records, summary)
}

/// Extreme eigenvalues and condition numbers before and after basis removal on
/// the shifted circle grids. The removal set comes from the stabilized
/// method's energy norms and is shared by both variants.
pub fn run_condition_study(params: &MethodParams, h: f64, n_shifts: usize) -> Result<StudyResult, Error> {
    params.validate()?;
    let ts = shifts(n_shifts);
    let records: Vec<RunRecord> = ts
        .par_iter()
        .map(|&t| condition_run(params, h, t))
        .collect::<Result<_, _>>()?;
    Ok(study("condition", params, Some(params.removal_c), records, Vec::new()))
}

fn condition_run(params: &MethodParams, h: f64, t: f64) -> Result<RunRecord, Error> {
    let start = Instant::now();
    let geometry = Geometry::circle(h, t);
    let domain = geometry.build()?;
    let params = MethodParams {
        delta: domain.grid().h,
        ..*params
    };
    let space = TensorSplineSpace::new(&domain, params.p)?;
    let sys = assemble(&space, &domain, &params, &ZeroData)?;
    let ls = MethodParams {
        variant: Variant::LsStabilized,
        ..params
    };
    let norms = basis_energy_norms(&space, &domain, &ls)?;
    let report = basis_removal(&norms, params.removal_c, domain.grid().h, params.p);
    let reduced = restrict_system(&sys, &report)?;

    let before = sym_eigen_extremes(&sys.a, DEFAULT_DENSE_THRESHOLD)?;
    let after = sym_eigen_extremes(&reduced.a, DEFAULT_DENSE_THRESHOLD)?;
    let kappa = |min: f64, max: f64| if min > 0.0 { max / min } else { f64::INFINITY };

    let mut rec = RunRecord::base(&geometry, domain.grid().h, &params);
    rec.c = Some(params.removal_c);
    rec.n_dofs = space.n_dofs();
    rec.n_removed = report.removed.len();
    rec.lambda_min = Some(before.min);
    rec.lambda_max = Some(before.max);
    rec.kappa = Some(kappa(before.min, before.max));
    rec.lambda_min_br = Some(after.min);
    rec.lambda_max_br = Some(after.max);
    rec.kappa_br = Some(kappa(after.min, after.max));
    rec.failed = !(after.min > 0.0);
    if rec.failed {
        rec.message = Some("reduced matrix not positive definite".into());
    }
    rec.wall_time_s = start.elapsed().as_secs_f64();
    Ok(rec)
}

/// Configuration of the frozen-method eigenvalue study.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedMethodConfig {
    pub base_n: usize,
    /// Number of meshes: `base_n, 2 base_n, ..., 2^(levels-1) base_n`.
    pub levels: usize,
    pub delta_cuts: Vec<f64>,
    pub taus: Vec<f64>,
    pub beta: f64,
    pub variants: Vec<Variant>,
    pub dense_threshold: usize,
}

impl Default for FixedMethodConfig {
    fn default() -> Self {
        Self {
            base_n: 10,
            levels: 4,
            delta_cuts: vec![0.0, 0.5, 0.9],
            taus: vec![1.0, 0.1],
            beta: MethodParams::DEFAULT_BETA,
            variants: vec![Variant::LsStabilized, Variant::StandardNitsche],
            dense_threshold: 1000,
        }
    }
}

/// Smallest stiffness eigenvalue under refinement with the method (its `h`,
/// `delta` and stabilization band) frozen on the `base_n x base_n` mesh.
/// The fine band is the set of fine elements whose centers fall in a coarse
/// band element.
pub fn run_fixed_method_eigen_study(cfg: &FixedMethodConfig) -> Result<Vec<StudyResult>, Error> {
    let mut out = Vec::new();
    for &variant in &cfg.variants {
        for &tau in &cfg.taus {
            let mut params = MethodParams::new(1.0, tau, variant);
            params.beta = cfg.beta;
            params.validate()?;
            let jobs: Vec<(f64, usize)> = cfg
                .delta_cuts
                .iter()
                .flat_map(|&dc| (0..cfg.levels).map(move |k| (dc, k)))
                .collect();
            let records: Vec<RunRecord> = jobs
                .par_iter()
                .map(|&(dc, k)| fixed_method_run(cfg, &params, dc, k))
                .collect::<Result<_, _>>()?;
            out.push(study("eigenstudy", &params, None, records, Vec::new()));
        }
    }
    Ok(out)
}

fn fixed_method_run(cfg: &FixedMethodConfig, params: &MethodParams, delta_cut: f64, level: usize) -> Result<RunRecord, Error> {
    let start = Instant::now();
    let coarse = make_unit_square_domain(cfg.base_n, delta_cut)?;
    let n = cfg.base_n << level;
    let geometry = Geometry::Square { n, delta_cut };
    let mut fine = geometry.build()?;
    let mask = (0..fine.grid().n_elements())
        .map(|e| {
            let c = fine.grid().element_center(e);
            coarse
                .grid()
                .element_at(&c)
                .is_some_and(|ce| coarse.in_stab_subdomain(ce))
        })
        .collect();
    fine.set_stab_subdomain(mask);
    let params = MethodParams {
        delta: coarse.grid().h,
        ..*params
    };
    let space = TensorSplineSpace::new(&fine, params.p)?;
    let sys = assemble(&space, &fine, &params, &ZeroData)?;
    let eig = sym_eigen_extremes(&sys.a, cfg.dense_threshold)?;

    let mut rec = RunRecord::base(&geometry, fine.grid().h, &params);
    rec.refinement = Some(level);
    rec.n_dofs = space.n_dofs();
    rec.lambda_min = Some(eig.min);
    rec.lambda_max = Some(eig.max);
    rec.kappa = (eig.min > 0.0).then(|| eig.max / eig.min);
    rec.wall_time_s = start.elapsed().as_secs_f64();
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn manufactured_source_consistent() {
        let u = ManufacturedProblem;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let p = Point::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
            let f = crate::assembly::ProblemData::f(&u, &p);
            assert!((f + u.laplacian_u(&p)).abs() < 1e-12);
        }
        // finite-difference check of the closed-form derivatives
        let p = Point::new(0.3, -0.7);
        let e = 1e-5;
        let fd = |dx: f64, dy: f64| u.u(&Point::new(p.x + dx, p.y + dy));
        let gx = (fd(e, 0.0) - fd(-e, 0.0)) / (2.0 * e);
        let gy = (fd(0.0, e) - fd(0.0, -e)) / (2.0 * e);
        assert!((u.grad_u(&p) - Vector::new(gx, gy)).norm() < 1e-9);
        let e = 1e-4;
        let lap = (fd(e, 0.0) + fd(-e, 0.0) + fd(0.0, e) + fd(0.0, -e) - 4.0 * fd(0.0, 0.0)) / (e * e);
        assert!((u.laplacian_u(&p) - lap).abs() < 1e-6);
    }

    #[test]
    fn rates_of_power_law() {
        let hs = [0.4, 0.2, 0.1, 0.05];
        let errs: Vec<f64> = hs.iter().map(|h: &f64| 3.7 * h.powf(2.5)).collect();
        for r in convergence_rates(&hs, &errs) {
            assert!((r - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_sequence() {
        assert_eq!(shifts(1), vec![0.0]);
        let s = shifts(100);
        assert_eq!(s.len(), 100);
        assert_eq!(s[0], 0.0);
        assert_eq!(s[99], 1.0);
    }

    #[test]
    fn worst_case_is_max_of_shifts() {
        let params = MethodParams::new(0.26, 0.1, Variant::LsStabilized);
        let res = run_worst_case_circle(&params, &[0.26], 4);
        let max_l2 = res.records.iter().filter_map(|r| r.l2_error).fold(0.0, f64::max);
        assert_eq!(res.summary[0].l2_error, Some(max_l2));
        assert_eq!(res.failures(), 0);
    }

    #[test]
    fn deterministic_records() {
        let params = MethodParams::new(0.26, 0.1, Variant::LsStabilized);
        let a = run_worst_case_circle(&params, &[0.26], 3);
        let b = run_worst_case_circle(&params, &[0.26], 3);
        let strip = |r: &StudyResult| r.records.iter().map(RunRecord::without_timing).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn zero_delta_cut_is_the_fitted_study() {
        let params = MethodParams::new(0.1, 0.1, Variant::LsStabilized);
        let a = run_convergence_fitted_square(&params, &[6, 12]).unwrap();
        let b = run_convergence_cut_square(&params, &[6, 12], 0.0).unwrap();
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.l2_error.unwrap().to_bits(), y.l2_error.unwrap().to_bits());
            assert_eq!(x.energy_error.unwrap().to_bits(), y.energy_error.unwrap().to_bits());
        }
    }
}
