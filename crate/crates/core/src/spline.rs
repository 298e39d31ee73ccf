//! Uniform B-spline bases.
//!
//! Knots are uniform, `x_j = x0 + j h`, with no repeated knots anywhere: basis
//! functions crossing the domain boundary are ordinary interior B-splines.
//! Basis function `i` is the cardinal B-spline of degree `p` translated to
//! `[x_i, x_{i+p+1}]`, so it covers the elements `i, ..., i + p`.

use nalgebra::Matrix2;

use crate::geometry::{BackgroundGrid, ImmersedDomain};
use crate::{Error, Point, Vector};

/// Cardinal B-spline `N_p(s)` supported on `[0, p + 1)`, evaluated by the
/// Cox-de Boor recursion on integer knots. Degrees up to 15.
pub fn cardinal_bspline(p: usize, s: f64) -> f64 {
    assert!(p < 16, "degree {p} exceeds the supported maximum of 15");
    if !(0.0..(p + 1) as f64).contains(&s) {
        return 0.0;
    }
    let m = s.floor() as usize;
    // table[r] holds N_k(s - r)
    let mut table = [0.0; 16];
    table[m] = 1.0;
    for k in 1..=p {
        for r in 0..=(p - k) {
            let sr = s - r as f64;
            table[r] = (sr * table[r] + (k as f64 + 1.0 - sr) * table[r + 1]) / k as f64;
        }
    }
    table[0]
}

/// `d`-th derivative of `N_p` via the difference formula
/// `N_p^(d)(s) = sum_q (-1)^q C(d, q) N_{p-d}(s - q)`.
pub fn cardinal_bspline_derivative(p: usize, d: usize, s: f64) -> f64 {
    if d > p {
        return 0.0;
    }
    let mut binom = 1.0;
    let mut acc = 0.0;
    for q in 0..=d {
        let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * cardinal_bspline(p - d, s - q as f64);
        binom = binom * (d - q) as f64 / (q + 1) as f64;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplineSpace1D {
    pub degree: usize,
    pub h: f64,
    pub origin: f64,
    pub i_min: i64,
    pub i_max: i64,
}

impl SplineSpace1D {
    /// Space over `n_elements` elements starting at `origin`; carries every basis
    /// function whose support touches one of those elements.
    pub fn new(degree: usize, h: f64, origin: f64, n_elements: usize) -> Result<Self, Error> {
        if degree < 2 {
            return Err(Error::InvalidParameter(format!(
                "spline degree must be at least 2, got {degree}"
            )));
        }
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!("mesh size must be positive, got {h}")));
        }
        Ok(Self {
            degree,
            h,
            origin,
            i_min: -(degree as i64),
            i_max: n_elements as i64 - 1,
        })
    }

    pub fn knot(&self, j: i64) -> f64 {
        self.origin + j as f64 * self.h
    }

    pub fn n_basis(&self) -> usize {
        (self.i_max - self.i_min + 1) as usize
    }

    /// Support interval `[x_i, x_{i+p+1}]`.
    pub fn support(&self, i: i64) -> (f64, f64) {
        (self.knot(i), self.knot(i + self.degree as i64 + 1))
    }

    /// Value, first and second derivative of basis `i` at `x`. Entries above
    /// `max_deriv` are left at zero.
    pub fn eval(&self, i: i64, x: f64, max_deriv: usize) -> [f64; 3] {
        let s = (x - self.knot(i)) / self.h;
        let p = self.degree;
        let mut out = [0.0; 3];
        out[0] = cardinal_bspline(p, s);
        if max_deriv >= 1 {
            out[1] = cardinal_bspline_derivative(p, 1, s) / self.h;
        }
        if max_deriv >= 2 {
            out[2] = cardinal_bspline_derivative(p, 2, s) / (self.h * self.h);
        }
        out
    }

    /// Index of the element containing `x` (half-open, unclamped).
    pub fn element_of(&self, x: f64) -> i64 {
        ((x - self.origin) / self.h).floor() as i64
    }
}

/// Value, gradient, Hessian and Laplacian of a tensor-product basis function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisEval {
    pub value: f64,
    pub grad: Vector,
    pub hessian: Matrix2<f64>,
    pub laplacian: f64,
}

impl BasisEval {
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            grad: Vector::zeros(),
            hessian: Matrix2::zeros(),
            laplacian: 0.0,
        }
    }

    fn tensor(ex: [f64; 3], ey: [f64; 3]) -> Self {
        let hessian = Matrix2::new(ex[2] * ey[0], ex[1] * ey[1], ex[1] * ey[1], ex[0] * ey[2]);
        Self {
            value: ex[0] * ey[0],
            grad: Vector::new(ex[1] * ey[0], ex[0] * ey[1]),
            hessian,
            laplacian: ex[2] * ey[0] + ex[0] * ey[2],
        }
    }
}

/// A basis function evaluated inside one element.
#[derive(Debug, Clone, Copy)]
pub struct LocalBasis {
    pub dof: usize,
    pub eval: BasisEval,
}

const INACTIVE: usize = usize::MAX;

/// Tensor-product spline space restricted to the basis functions whose support
/// intersects the domain.
#[derive(Debug, Clone)]
pub struct TensorSplineSpace {
    pub x: SplineSpace1D,
    pub y: SplineSpace1D,
    grid: BackgroundGrid,
    active: Vec<(i64, i64)>,
    lookup: Vec<usize>,
}

impl TensorSplineSpace {
    /// Builds the space on the domain's background grid. A basis function is
    /// active when its support covers at least one element with a non-empty
    /// intersection with the domain.
    pub fn new(domain: &ImmersedDomain, degree: usize) -> Result<Self, Error> {
        let grid = *domain.grid();
        let x = SplineSpace1D::new(degree, grid.h, grid.origin.x, grid.nx)?;
        let y = SplineSpace1D::new(degree, grid.h, grid.origin.y, grid.ny)?;
        let (nbx, nby) = (x.n_basis(), y.n_basis());
        let p = degree as i64;

        let mut lookup = vec![INACTIVE; nbx * nby];
        let mut active = Vec::new();
        // row-major in (i2, i1) keeps the matrix profile narrow
        for i2 in y.i_min..=y.i_max {
            for i1 in x.i_min..=x.i_max {
                let hit = (i2..=i2 + p).any(|ey| {
                    (i1..=i1 + p).any(|ex| {
                        ex >= 0
                            && ey >= 0
                            && (ex as usize) < grid.nx
                            && (ey as usize) < grid.ny
                            && domain.is_active_element(grid.element_index(ex as usize, ey as usize))
                    })
                });
                if hit {
                    let slot = (i2 - y.i_min) as usize * nbx + (i1 - x.i_min) as usize;
                    lookup[slot] = active.len();
                    active.push((i1, i2));
                }
            }
        }
        Ok(Self {
            x,
            y,
            grid,
            active,
            lookup,
        })
    }

    pub fn degree(&self) -> usize {
        self.x.degree
    }

    pub fn grid(&self) -> &BackgroundGrid {
        &self.grid
    }

    pub fn n_dofs(&self) -> usize {
        self.active.len()
    }

    /// Multi-index of each DOF, in DOF order.
    pub fn dofs(&self) -> &[(i64, i64)] {
        &self.active
    }

    pub fn dof_of(&self, idx: (i64, i64)) -> Option<usize> {
        let (i1, i2) = idx;
        if i1 < self.x.i_min || i1 > self.x.i_max || i2 < self.y.i_min || i2 > self.y.i_max {
            return None;
        }
        let slot = (i2 - self.y.i_min) as usize * self.x.n_basis() + (i1 - self.x.i_min) as usize;
        match self.lookup[slot] {
            INACTIVE => None,
            d => Some(d),
        }
    }

    /// Axis-aligned support box of a basis function.
    pub fn support_box(&self, idx: (i64, i64)) -> (Point, Point) {
        let (x0, x1) = self.x.support(idx.0);
        let (y0, y1) = self.y.support(idx.1);
        (Point::new(x0, y0), Point::new(x1, y1))
    }

    pub fn eval_basis(&self, idx: (i64, i64), pt: &Point) -> BasisEval {
        let ex = self.x.eval(idx.0, pt.x, 2);
        let ey = self.y.eval(idx.1, pt.y, 2);
        BasisEval::tensor(ex, ey)
    }

    /// Active multi-indices whose support contains element `elem`.
    pub fn active_basis_on_element(&self, elem: usize) -> Vec<(i64, i64)> {
        let (ex, ey) = self.grid.element_coords(elem);
        let p = self.degree() as i64;
        let mut out = Vec::with_capacity((self.degree() + 1).pow(2));
        for i2 in (ey as i64 - p)..=ey as i64 {
            for i1 in (ex as i64 - p)..=ex as i64 {
                if self.dof_of((i1, i2)).is_some() {
                    out.push((i1, i2));
                }
            }
        }
        out
    }

    /// Evaluates every active basis function of `elem` at `pt`, reusing `out`.
    /// `pt` is assumed to lie in the closure of the element.
    pub fn eval_on_element(&self, elem: usize, pt: &Point, out: &mut Vec<LocalBasis>) {
        out.clear();
        let (ex, ey) = self.grid.element_coords(elem);
        let p = self.degree();
        let mut vx = [[0.0; 3]; 8];
        let mut vy = [[0.0; 3]; 8];
        for k in 0..=p {
            vx[k] = self.x.eval(ex as i64 - p as i64 + k as i64, pt.x, 2);
            vy[k] = self.y.eval(ey as i64 - p as i64 + k as i64, pt.y, 2);
        }
        for ky in 0..=p {
            let i2 = ey as i64 - p as i64 + ky as i64;
            for kx in 0..=p {
                let i1 = ex as i64 - p as i64 + kx as i64;
                if let Some(dof) = self.dof_of((i1, i2)) {
                    out.push(LocalBasis {
                        dof,
                        eval: BasisEval::tensor(vx[kx], vy[ky]),
                    });
                }
            }
        }
    }

    /// Element of the background grid containing `pt`, clamped to the grid.
    pub fn locate(&self, pt: &Point) -> usize {
        let ex = self.x.element_of(pt.x).clamp(0, self.grid.nx as i64 - 1) as usize;
        let ey = self.y.element_of(pt.y).clamp(0, self.grid.ny as i64 - 1) as usize;
        self.grid.element_index(ex, ey)
    }
}
