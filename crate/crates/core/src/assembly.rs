//! Assembly of the least-squares stabilized and the standard symmetric Nitsche
//! systems, solution evaluation and error norms.
//!
//! Both methods share one element loop parameterized by [`FormCoefficients`]:
//!
//! ```text
//! A(v, w) = c_grad (grad v, grad w)_Ω + c_lap (Δv, Δw)_{band ∩ Ω}
//!         - c_nit [(n·grad v, w)_∂Ω + (v, n·grad w)_∂Ω]
//!         + c_mass (v, w)_∂Ω + c_tan (grad_T v, grad_T w)_∂Ω
//! L(w)    = c_grad (f, w)_Ω - c_lap (f, Δw)_{band ∩ Ω}
//!         - c_nit (g, n·grad w)_∂Ω + c_mass (g, w)_∂Ω + c_tan (grad_T g, grad_T w)_∂Ω
//! ```

use serde::{Deserialize, Serialize};

use crate::geometry::{ElementKind, ImmersedDomain};
use crate::linalg::CsrMatrix;
use crate::quadrature::{cut_cell_rule, gauss_segment, tensor_rule, QuadRule};
use crate::spline::{LocalBasis, TensorSplineSpace};
use crate::{Error, Point, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Symmetric Nitsche with the band least-squares and tangential terms.
    #[serde(rename = "ls")]
    LsStabilized,
    /// Symmetric Nitsche with penalty `beta (2 + 1/tau) / h` only.
    #[serde(rename = "std")]
    StandardNitsche,
}

impl Variant {
    pub fn tag(self) -> &'static str {
        match self {
            Variant::LsStabilized => "ls",
            Variant::StandardNitsche => "std",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ls" | "ls-stabilized" => Ok(Variant::LsStabilized),
            "std" | "standard" => Ok(Variant::StandardNitsche),
            other => Err(format!("unknown method variant '{other}' (expected 'ls' or 'std')")),
        }
    }
}

/// Method parameters. `delta` is the band width and also the length scale of
/// the standard method's penalty; it equals the mesh size unless the method is
/// frozen on a coarser mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodParams {
    pub p: usize,
    pub beta: f64,
    pub tau: f64,
    pub delta: f64,
    pub variant: Variant,
    pub removal_c: f64,
}

impl MethodParams {
    pub const DEFAULT_BETA: f64 = 10.0;
    pub const DEFAULT_REMOVAL_C: f64 = 0.01;

    /// Quadratic splines, `beta = 10`, `c = 0.01` and `delta = h`.
    pub fn new(h: f64, tau: f64, variant: Variant) -> Self {
        Self {
            p: 2,
            beta: Self::DEFAULT_BETA,
            tau,
            delta: h,
            variant,
            removal_c: Self::DEFAULT_REMOVAL_C,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |what: &str, v: f64| Err(Error::InvalidParameter(format!("{what} must be positive, got {v}")));
        if self.p < 2 {
            return Err(Error::InvalidParameter(format!("degree must be at least 2, got {}", self.p)));
        }
        if !(self.beta > 0.0) {
            return bad("beta", self.beta);
        }
        if !(self.tau > 0.0) {
            return bad("tau", self.tau);
        }
        if !(self.delta > 0.0) {
            return bad("delta", self.delta);
        }
        if !(self.removal_c >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "removal constant must be non-negative, got {}",
                self.removal_c
            )));
        }
        Ok(())
    }

    /// `(2 + 1/tau) / delta`.
    pub fn boundary_mass_weight(&self) -> f64 {
        (2.0 + 1.0 / self.tau) / self.delta
    }
}

/// Right-hand side data: source `f` in the domain, Dirichlet datum `g` and
/// the full gradient of an extension of `g` on the boundary.
pub trait ProblemData: Sync {
    fn f(&self, x: &Point) -> f64;
    fn g(&self, x: &Point) -> f64;
    fn grad_g(&self, x: &Point) -> Vector;
}

/// Closed-form solution used for manufactured data and error measurement.
pub trait ExactSolution: Sync {
    fn u(&self, x: &Point) -> f64;
    fn grad_u(&self, x: &Point) -> Vector;
    fn laplacian_u(&self, x: &Point) -> f64;
}

/// Every exact solution defines data through `f = -Δu`, `g = u`, `grad g = grad u`.
impl<T: ExactSolution> ProblemData for T {
    fn f(&self, x: &Point) -> f64 {
        -self.laplacian_u(x)
    }

    fn g(&self, x: &Point) -> f64 {
        self.u(x)
    }

    fn grad_g(&self, x: &Point) -> Vector {
        self.grad_u(x)
    }
}

/// Homogeneous data, for matrix-only assembly.
pub struct ZeroData;

impl ExactSolution for ZeroData {
    fn u(&self, _: &Point) -> f64 {
        0.0
    }

    fn grad_u(&self, _: &Point) -> Vector {
        Vector::zeros()
    }

    fn laplacian_u(&self, _: &Point) -> f64 {
        0.0
    }
}

/// `u = a + b x + c y`.
#[derive(Debug, Clone, Copy)]
pub struct LinearSolution {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ExactSolution for LinearSolution {
    fn u(&self, x: &Point) -> f64 {
        self.a + self.b * x.x + self.c * x.y
    }

    fn grad_u(&self, _: &Point) -> Vector {
        Vector::new(self.b, self.c)
    }

    fn laplacian_u(&self, _: &Point) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadOrders {
    /// Gauss points per axis on full elements.
    pub volume: usize,
    /// Cut-cell triangles are integrated exactly to degree `2 cut - 1`.
    pub cut: usize,
    /// Gauss points per boundary segment.
    pub boundary: usize,
}

impl Default for QuadOrders {
    fn default() -> Self {
        Self {
            volume: 4,
            cut: 4,
            boundary: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormCoefficients {
    pub grad: f64,
    pub lap: f64,
    pub nitsche: f64,
    pub bnd_mass: f64,
    pub bnd_tangential: f64,
}

impl FormCoefficients {
    pub fn for_params(params: &MethodParams) -> Self {
        match params.variant {
            Variant::LsStabilized => Self::ls_stabilized(params),
            Variant::StandardNitsche => Self::standard(params),
        }
    }

    pub fn ls_stabilized(params: &MethodParams) -> Self {
        Self {
            grad: 1.0,
            lap: params.tau * params.delta * params.delta,
            nitsche: 1.0,
            bnd_mass: params.beta * params.boundary_mass_weight(),
            bnd_tangential: params.beta * 2.0 * params.delta,
        }
    }

    pub fn standard(params: &MethodParams) -> Self {
        Self {
            grad: 1.0,
            lap: 0.0,
            nitsche: 1.0,
            bnd_mass: params.beta * (2.0 + 1.0 / params.tau) / params.delta,
            bnd_tangential: 0.0,
        }
    }

    /// Gram matrix of the energy norm `|||v|||_h^2 = a_h(v, v) + b_h(v, v)`.
    pub fn energy_norm(params: &MethodParams) -> Self {
        Self {
            grad: 1.0,
            lap: params.tau * params.delta * params.delta,
            nitsche: 0.0,
            bnd_mass: params.boundary_mass_weight(),
            bnd_tangential: 2.0 * params.delta,
        }
    }

    /// The boundary penalty form `b_h` (without `beta`).
    pub fn penalty(params: &MethodParams) -> Self {
        Self {
            grad: 0.0,
            lap: 0.0,
            nitsche: 0.0,
            bnd_mass: params.boundary_mass_weight(),
            bnd_tangential: 2.0 * params.delta,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SystemMatrices {
    pub a: CsrMatrix,
    pub b: Vec<f64>,
    pub dofs: Vec<(i64, i64)>,
}

impl SystemMatrices {
    pub fn n_dofs(&self) -> usize {
        self.b.len()
    }

    /// One value per line, 17 significant digits.
    pub fn rhs_text(&self) -> String {
        self.b.iter().map(|v| format!("{v:.16e}\n")).collect()
    }
}

/// Support-overlap pattern: DOFs couple when their indices differ by at most
/// `p` in both directions.
pub fn sparsity_pattern(space: &TensorSplineSpace) -> CsrMatrix {
    let p = space.degree() as i64;
    let rows = space
        .dofs()
        .iter()
        .map(|&(i1, i2)| {
            let mut r = Vec::with_capacity((2 * p as usize + 1).pow(2));
            for j2 in (i2 - p)..=(i2 + p) {
                for j1 in (i1 - p)..=(i1 + p) {
                    if let Some(d) = space.dof_of((j1, j2)) {
                        r.push(d);
                    }
                }
            }
            r
        })
        .collect();
    CsrMatrix::from_pattern(space.n_dofs(), rows)
}

fn element_volume_rule(domain: &ImmersedDomain, elem: usize, quad: &QuadOrders) -> QuadRule {
    match domain.kind(elem) {
        ElementKind::Interior => {
            let (lo, hi) = domain.grid().element_box(elem);
            tensor_rule(&lo, &hi, quad.volume)
        }
        ElementKind::Cut => cut_cell_rule(domain.cut_polygon(elem), quad.cut),
        ElementKind::Outside => QuadRule::default(),
    }
}

fn check_grids(space: &TensorSplineSpace, domain: &ImmersedDomain) -> Result<(), Error> {
    if space.grid() != domain.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Generic symmetric assembly. Elements are swept in row-major order and
/// each element-local block is computed on its upper triangle and mirrored,
/// so the global matrix is bitwise symmetric.
pub fn assemble_form(
    space: &TensorSplineSpace,
    domain: &ImmersedDomain,
    coeffs: &FormCoefficients,
    quad: &QuadOrders,
    data: Option<&dyn ProblemData>,
) -> Result<SystemMatrices, Error> {
    check_grids(space, domain)?;
    let mut a = sparsity_pattern(space);
    let mut b = vec![0.0; space.n_dofs()];
    let mut basis: Vec<LocalBasis> = Vec::with_capacity(16);
    let mut local = Vec::new();
    let mut local_b = Vec::new();
    let mut dofs: Vec<usize> = Vec::new();

    for elem in 0..domain.grid().n_elements() {
        let segments = domain.boundary_segments(elem);
        let kind = domain.kind(elem);
        if kind == ElementKind::Outside && segments.is_empty() {
            continue;
        }
        let center = domain.grid().element_center(elem);
        space.eval_on_element(elem, &center, &mut basis);
        dofs.clear();
        dofs.extend(basis.iter().map(|lb| lb.dof));
        let n = dofs.len();
        if n == 0 {
            continue;
        }
        local.clear();
        local.resize(n * n, 0.0);
        local_b.clear();
        local_b.resize(n, 0.0);

        let stab = domain.in_stab_subdomain(elem);
        let lap = if stab { coeffs.lap } else { 0.0 };
        let rule = element_volume_rule(domain, elem, quad);
        for (pt, &w) in rule.points.iter().zip(&rule.weights) {
            space.eval_on_element(elem, pt, &mut basis);
            for i in 0..n {
                let bi = &basis[i].eval;
                for j in i..n {
                    let bj = &basis[j].eval;
                    local[i * n + j] +=
                        w * (coeffs.grad * bi.grad.dot(&bj.grad) + lap * bi.laplacian * bj.laplacian);
                }
            }
            if let Some(data) = data {
                let f = data.f(pt);
                for i in 0..n {
                    let bi = &basis[i].eval;
                    local_b[i] += w * (coeffs.grad * f * bi.value - lap * f * bi.laplacian);
                }
            }
        }

        for seg in segments {
            let rule = gauss_segment(&seg.a, &seg.b, quad.boundary);
            let (nrm, tan) = (seg.normal, seg.tangent);
            for (pt, &w) in rule.points.iter().zip(&rule.weights) {
                space.eval_on_element(elem, pt, &mut basis);
                for i in 0..n {
                    let bi = &basis[i].eval;
                    let dn_i = nrm.dot(&bi.grad);
                    let dt_i = tan.dot(&bi.grad);
                    for j in i..n {
                        let bj = &basis[j].eval;
                        let dn_j = nrm.dot(&bj.grad);
                        let dt_j = tan.dot(&bj.grad);
                        local[i * n + j] += w
                            * (-coeffs.nitsche * (dn_i * bj.value + bi.value * dn_j)
                                + coeffs.bnd_mass * bi.value * bj.value
                                + coeffs.bnd_tangential * dt_i * dt_j);
                    }
                }
                if let Some(data) = data {
                    let g = data.g(pt);
                    let dt_g = tan.dot(&data.grad_g(pt));
                    for i in 0..n {
                        let bi = &basis[i].eval;
                        local_b[i] += w
                            * (-coeffs.nitsche * g * nrm.dot(&bi.grad)
                                + coeffs.bnd_mass * g * bi.value
                                + coeffs.bnd_tangential * dt_g * tan.dot(&bi.grad));
                    }
                }
            }
        }

        for i in 0..n {
            b[dofs[i]] += local_b[i];
            for j in i..n {
                let v = local[i * n + j];
                a.add(dofs[i], dofs[j], v);
                if i != j {
                    a.add(dofs[j], dofs[i], v);
                }
            }
        }
    }

    Ok(SystemMatrices {
        a,
        b,
        dofs: space.dofs().to_vec(),
    })
}

/// Assembles the system of the variant selected in `params`.
pub fn assemble(
    space: &TensorSplineSpace,
    domain: &ImmersedDomain,
    params: &MethodParams,
    data: &dyn ProblemData,
) -> Result<SystemMatrices, Error> {
    params.validate()?;
    assemble_form(
        space,
        domain,
        &FormCoefficients::for_params(params),
        &QuadOrders::default(),
        Some(data),
    )
}

/// Standard symmetric Nitsche system regardless of `params.variant`.
pub fn assemble_standard(
    space: &TensorSplineSpace,
    domain: &ImmersedDomain,
    params: &MethodParams,
    data: &dyn ProblemData,
) -> Result<SystemMatrices, Error> {
    let params = MethodParams {
        variant: Variant::StandardNitsche,
        ..*params
    };
    assemble(space, domain, &params, data)
}

/// Gram matrix of the energy norm.
pub fn energy_gram_matrix(
    space: &TensorSplineSpace,
    domain: &ImmersedDomain,
    params: &MethodParams,
) -> Result<CsrMatrix, Error> {
    params.validate()?;
    let sys = assemble_form(
        space,
        domain,
        &FormCoefficients::energy_norm(params),
        &QuadOrders::default(),
        None,
    )?;
    Ok(sys.a)
}

/// Matrix of the penalty form `b_h`.
pub fn penalty_matrix(
    space: &TensorSplineSpace,
    domain: &ImmersedDomain,
    params: &MethodParams,
) -> Result<CsrMatrix, Error> {
    params.validate()?;
    let sys = assemble_form(
        space,
        domain,
        &FormCoefficients::penalty(params),
        &QuadOrders::default(),
        None,
    )?;
    Ok(sys.a)
}

/// Energy norm of every active basis function.
pub fn basis_energy_norms(
    space: &TensorSplineSpace,
    domain: &ImmersedDomain,
    params: &MethodParams,
) -> Result<Vec<f64>, Error> {
    let m = energy_gram_matrix(space, domain, params)?;
    Ok(m.diagonal().into_iter().map(|d| d.max(0.0).sqrt()).collect())
}

/// Value and gradient of `sum_i coeffs[i] phi_i` at `pt`.
pub fn evaluate_solution(space: &TensorSplineSpace, coeffs: &[f64], pt: &Point) -> (f64, Vector) {
    let mut basis = Vec::with_capacity(16);
    let elem = space.locate(pt);
    space.eval_on_element(elem, pt, &mut basis);
    basis.iter().fold((0.0, Vector::zeros()), |(v, g), lb| {
        let c = coeffs[lb.dof];
        (v + c * lb.eval.value, g + lb.eval.grad * c)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorNorms {
    pub l2: f64,
    pub h1_semi: f64,
    pub energy: f64,
}

/// L2, H1-seminorm and energy-norm errors of a discrete solution, integrated
/// with the assembly quadrature over the domain, the band and the boundary.
pub fn error_norms(
    space: &TensorSplineSpace,
    domain: &ImmersedDomain,
    params: &MethodParams,
    coeffs: &[f64],
    exact: &dyn ExactSolution,
) -> Result<ErrorNorms, Error> {
    check_grids(space, domain)?;
    if coeffs.len() != space.n_dofs() {
        return Err(Error::InvalidParameter(format!(
            "coefficient vector has length {}, space has {} DOFs",
            coeffs.len(),
            space.n_dofs()
        )));
    }
    let quad = QuadOrders::default();
    let mut basis = Vec::with_capacity(16);
    let (mut l2, mut h1, mut lap_band, mut bnd_val, mut bnd_tan) = (0.0, 0.0, 0.0, 0.0, 0.0);

    let uh_at = |elem: usize, pt: &Point, basis: &mut Vec<LocalBasis>| {
        space.eval_on_element(elem, pt, basis);
        basis.iter().fold((0.0, Vector::zeros(), 0.0), |(v, g, l), lb| {
            let c = coeffs[lb.dof];
            (v + c * lb.eval.value, g + lb.eval.grad * c, l + c * lb.eval.laplacian)
        })
    };

    for elem in 0..domain.grid().n_elements() {
        let stab = domain.in_stab_subdomain(elem);
        let rule = element_volume_rule(domain, elem, &quad);
        for (pt, &w) in rule.points.iter().zip(&rule.weights) {
            let (v, g, l) = uh_at(elem, pt, &mut basis);
            let e = v - exact.u(pt);
            let ge = g - exact.grad_u(pt);
            l2 += w * e * e;
            h1 += w * ge.norm_squared();
            if stab {
                let le = l - exact.laplacian_u(pt);
                lap_band += w * le * le;
            }
        }
        for seg in domain.boundary_segments(elem) {
            let rule = gauss_segment(&seg.a, &seg.b, quad.boundary);
            for (pt, &w) in rule.points.iter().zip(&rule.weights) {
                let (v, g, _) = uh_at(elem, pt, &mut basis);
                let e = v - exact.u(pt);
                let te = seg.tangent.dot(&(g - exact.grad_u(pt)));
                bnd_val += w * e * e;
                bnd_tan += w * te * te;
            }
        }
    }
    let energy2 = h1
        + params.tau * params.delta * params.delta * lap_band
        + params.boundary_mass_weight() * bnd_val
        + 2.0 * params.delta * bnd_tan;
    Ok(ErrorNorms {
        l2: l2.sqrt(),
        h1_semi: h1.sqrt(),
        energy: energy2.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_unit_circle_domain, make_unit_square_domain};
    use crate::linalg::solve_spd;

    fn setup(n: usize, dc: f64) -> (ImmersedDomain, TensorSplineSpace) {
        let dom = make_unit_square_domain(n, dc).unwrap();
        let space = TensorSplineSpace::new(&dom, 2).unwrap();
        (dom, space)
    }

    #[test]
    fn exact_symmetry_both_variants() {
        let dom = make_unit_circle_domain(0.26, 0.3, 1024).unwrap();
        let space = TensorSplineSpace::new(&dom, 2).unwrap();
        for variant in [Variant::LsStabilized, Variant::StandardNitsche] {
            let params = MethodParams::new(dom.grid().h, 0.1, variant);
            let sys = assemble(&space, &dom, &params, &LinearSolution { a: 0.0, b: 1.0, c: 2.0 }).unwrap();
            assert!(sys.a.is_symmetric_exact());
        }
    }

    #[test]
    fn patch_test_fitted_square() {
        let (dom, space) = setup(8, 0.0);
        let exact = LinearSolution { a: 0.0, b: 1.0, c: 2.0 };
        for variant in [Variant::LsStabilized, Variant::StandardNitsche] {
            let params = MethodParams::new(dom.grid().h, 0.1, variant);
            let sys = assemble(&space, &dom, &params, &exact).unwrap();
            let x = solve_spd(&sys.a, &sys.b).unwrap();
            let err = error_norms(&space, &dom, &params, &x, &exact).unwrap();
            assert!(err.l2 < 1e-10 && err.energy < 1e-9, "{variant}: {err:?}");
        }
    }

    #[test]
    fn beta_enters_linearly() {
        let (dom, space) = setup(6, 0.5);
        let mut params = MethodParams::new(dom.grid().h, 0.1, Variant::LsStabilized);
        let a10 = assemble(&space, &dom, &params, &ZeroData).unwrap().a;
        params.beta = 20.0;
        let a20 = assemble(&space, &dom, &params, &ZeroData).unwrap().a;
        let pen = penalty_matrix(&space, &dom, &params).unwrap();
        let diff = a20.add_scaled(-1.0, &a10).add_scaled(-10.0, &pen);
        assert!(diff.max_abs() < 1e-10 * a20.max_abs());
    }

    #[test]
    fn standard_equals_ls_without_stabilization_terms() {
        let (dom, space) = setup(6, 0.5);
        let params = MethodParams::new(dom.grid().h, 0.1, Variant::LsStabilized);
        let mut c = FormCoefficients::ls_stabilized(&params);
        c.lap = 0.0;
        c.bnd_tangential = 0.0;
        let ls = assemble_form(&space, &dom, &c, &QuadOrders::default(), None).unwrap().a;
        let std = assemble_standard(&space, &dom, &params, &ZeroData).unwrap().a;
        assert!(ls.add_scaled(-1.0, &std).max_abs() < 1e-12 * std.max_abs());
    }

    #[test]
    fn pattern_row_sizes() {
        let (_, space) = setup(8, 0.0);
        let pat = sparsity_pattern(&space);
        let max_row = (0..pat.nrows()).map(|i| pat.row(i).0.len()).max().unwrap();
        assert_eq!(max_row, 25);
    }

    #[test]
    fn evaluate_zero_and_single() {
        let (_, space) = setup(8, 0.0);
        let zero = vec![0.0; space.n_dofs()];
        let pt = Point::new(0.31, 0.77);
        assert_eq!(evaluate_solution(&space, &zero, &pt), (0.0, Vector::zeros()));
        let idx = (2, 5);
        let mut e = zero.clone();
        e[space.dof_of(idx).unwrap()] = 1.0;
        let (v, g) = evaluate_solution(&space, &e, &pt);
        let direct = space.eval_basis(idx, &pt);
        assert!((v - direct.value).abs() < 1e-15);
        assert!((g - direct.grad).norm() < 1e-13);
    }

    #[test]
    fn energy_error_dominates_h1() {
        let (dom, space) = setup(6, 0.3);
        let params = MethodParams::new(dom.grid().h, 0.1, Variant::LsStabilized);
        let coeffs: Vec<f64> = (0..space.n_dofs()).map(|i| (i as f64 * 0.37).sin()).collect();
        let err = error_norms(&space, &dom, &params, &coeffs, &LinearSolution { a: 1.0, b: 0.0, c: 0.0 }).unwrap();
        assert!(err.energy >= err.h1_semi);
    }

    #[test]
    fn mismatched_grid_rejected() {
        let (dom_a, _) = setup(6, 0.0);
        let (_, space_b) = setup(7, 0.0);
        let params = MethodParams::new(dom_a.grid().h, 0.1, Variant::LsStabilized);
        assert!(matches!(
            assemble(&space_b, &dom_a, &params, &ZeroData),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn invalid_params_rejected() {
        let (dom, space) = setup(6, 0.0);
        let mut params = MethodParams::new(dom.grid().h, 0.1, Variant::LsStabilized);
        params.tau = 0.0;
        assert!(assemble(&space, &dom, &params, &ZeroData).is_err());
    }
}
