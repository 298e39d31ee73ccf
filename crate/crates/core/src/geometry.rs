//! Polygonal domains immersed in a uniform background grid.
//!
//! Elements are clipped against the half-planes of the polygon edges that come
//! near them. This is exact as long as the boundary is convex inside every
//! element it crosses; reflex vertices inside an element are rejected.

use std::fmt::Write as _;

use thiserror::Error;

use crate::{Point, Vector};

/// Degenerate-cut tolerance, relative to `h^2` for areas and `h` for lengths.
pub const EPS_GEO: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon must be counterclockwise (signed area {0})")]
    NotCounterclockwise(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("delta_cut must lie in [0, 1), got {0}")]
    InvalidDeltaCut(f64),
    #[error("reflex polygon vertex inside element ({0}, {1}); cut cells must be locally convex")]
    NonConvexCut(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundGrid {
    pub origin: Point,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl BackgroundGrid {
    pub fn new(origin: Point, h: f64, nx: usize, ny: usize) -> Result<Self, GeometryError> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(GeometryError::InvalidGrid(format!("h must be positive, got {h}")));
        }
        if nx == 0 || ny == 0 {
            return Err(GeometryError::InvalidGrid("empty grid".into()));
        }
        Ok(Self { origin, h, nx, ny })
    }

    pub fn n_elements(&self) -> usize {
        self.nx * self.ny
    }

    pub fn element_index(&self, ex: usize, ey: usize) -> usize {
        ey * self.nx + ex
    }

    pub fn element_coords(&self, elem: usize) -> (usize, usize) {
        (elem % self.nx, elem / self.nx)
    }

    /// Lower-left and upper-right corners of an element.
    pub fn element_box(&self, elem: usize) -> (Point, Point) {
        let (ex, ey) = self.element_coords(elem);
        let lo = Point::new(
            self.origin.x + ex as f64 * self.h,
            self.origin.y + ey as f64 * self.h,
        );
        let hi = Point::new(
            self.origin.x + (ex + 1) as f64 * self.h,
            self.origin.y + (ey + 1) as f64 * self.h,
        );
        (lo, hi)
    }

    pub fn element_center(&self, elem: usize) -> Point {
        let (lo, hi) = self.element_box(elem);
        Point::new(0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y))
    }

    /// Element containing `pt`, if any.
    pub fn element_at(&self, pt: &Point) -> Option<usize> {
        let fx = ((pt.x - self.origin.x) / self.h).floor();
        let fy = ((pt.y - self.origin.y) / self.h).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.nx as f64 || fy >= self.ny as f64 {
            return None;
        }
        Some(self.element_index(fx as usize, fy as usize))
    }

    /// The (up to 8) face and corner neighbours of an element.
    pub fn neighbors(&self, elem: usize) -> impl Iterator<Item = usize> + '_ {
        let (ex, ey) = self.element_coords(elem);
        (-1i64..=1)
            .flat_map(move |dy| (-1i64..=1).map(move |dx| (dx, dy)))
            .filter(|&(dx, dy)| dx != 0 || dy != 0)
            .filter_map(move |(dx, dy)| {
                let x = ex as i64 + dx;
                let y = ey as i64 + dy;
                (x >= 0 && y >= 0 && (x as usize) < self.nx && (y as usize) < self.ny)
                    .then(|| self.element_index(x as usize, y as usize))
            })
    }
}

/// Closed polygon, counterclockwise, last vertex connected to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        let area = signed_area(&vertices);
        if !(area > 0.0) {
            return Err(GeometryError::NotCounterclockwise(area));
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn n_edges(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge(&self, k: usize) -> (Point, Point) {
        let n = self.vertices.len();
        (self.vertices[k], self.vertices[(k + 1) % n])
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        (0..self.n_edges())
            .map(|k| {
                let (a, b) = self.edge(k);
                (b - a).norm()
            })
            .sum()
    }

    /// Even-odd point containment.
    pub fn contains(&self, pt: &Point) -> bool {
        let mut inside = false;
        for k in 0..self.n_edges() {
            let (a, b) = self.edge(k);
            if (a.y > pt.y) != (b.y > pt.y) {
                let x = a.x + (pt.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if x > pt.x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Whether the interior angle at vertex `k` exceeds pi.
    pub fn is_reflex(&self, k: usize) -> bool {
        let n = self.vertices.len();
        let prev = self.vertices[(k + n - 1) % n];
        let cur = self.vertices[k];
        let next = self.vertices[(k + 1) % n];
        let e0 = cur - prev;
        let e1 = next - cur;
        let cross = e0.x * e1.y - e0.y * e1.x;
        cross < -1e-14 * e0.norm() * e1.norm()
    }

    pub fn translated(&self, shift: Vector) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v + shift).collect(),
        }
    }
}

pub fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    let mut acc = 0.0;
    for k in 0..n {
        let a = vertices[k];
        let b = vertices[(k + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    0.5 * acc
}

/// Area centroid of a simple polygon with positive area.
pub fn centroid(vertices: &[Point]) -> Point {
    let n = vertices.len();
    let mut a = 0.0;
    let (mut cx, mut cy) = (0.0, 0.0);
    for k in 0..n {
        let p = vertices[k];
        let q = vertices[(k + 1) % n];
        let cr = p.x * q.y - q.x * p.y;
        a += cr;
        cx += (p.x + q.x) * cr;
        cy += (p.y + q.y) * cr;
    }
    if a.abs() < f64::MIN_POSITIVE {
        let inv = 1.0 / n as f64;
        return Point::new(
            vertices.iter().map(|v| v.x).sum::<f64>() * inv,
            vertices.iter().map(|v| v.y).sum::<f64>() * inv,
        );
    }
    Point::new(cx / (3.0 * a), cy / (3.0 * a))
}

/// Outward unit normal of a boundary edge traversed counterclockwise.
pub fn outward_normal(a: &Point, b: &Point) -> Vector {
    let t = (b - a).normalize();
    Vector::new(t.y, -t.x)
}

/// Sutherland-Hodgman step: keeps the part of `poly` on the left of the
/// directed line `a -> b`.
fn clip_half_plane(poly: &[Point], a: &Point, b: &Point) -> Vec<Point> {
    let d = b - a;
    let side = |p: &Point| d.x * (p.y - a.y) - d.y * (p.x - a.x);
    let mut out = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for k in 0..n {
        let cur = poly[k];
        let next = poly[(k + 1) % n];
        let sc = side(&cur);
        let sn = side(&next);
        if sc >= 0.0 {
            out.push(cur);
        }
        if (sc >= 0.0) != (sn >= 0.0) {
            let s = sc / (sc - sn);
            out.push(cur + (next - cur) * s);
        }
    }
    out
}

fn box_polygon(lo: &Point, hi: &Point) -> Vec<Point> {
    vec![
        *lo,
        Point::new(hi.x, lo.y),
        *hi,
        Point::new(lo.x, hi.y),
    ]
}

fn edge_touches_box(a: &Point, b: &Point, lo: &Point, hi: &Point, tol: f64) -> bool {
    a.x.min(b.x) <= hi.x + tol
        && a.x.max(b.x) >= lo.x - tol
        && a.y.min(b.y) <= hi.y + tol
        && a.y.max(b.y) >= lo.y - tol
}

/// `elem ∩ boundary-polygon` as a counterclockwise vertex list, empty when the
/// intersection has no area.
pub fn clip_element(lo: &Point, hi: &Point, boundary: &Polygon) -> Vec<Point> {
    let tol = EPS_GEO * (hi.x - lo.x);
    let candidates: Vec<usize> = (0..boundary.n_edges())
        .filter(|&k| {
            let (a, b) = boundary.edge(k);
            edge_touches_box(&a, &b, lo, hi, tol)
        })
        .collect();
    clip_with_edges(lo, hi, boundary, &candidates)
}

fn clip_with_edges(lo: &Point, hi: &Point, boundary: &Polygon, edges: &[usize]) -> Vec<Point> {
    let square = box_polygon(lo, hi);
    if edges.is_empty() {
        let c = Point::new(0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y));
        return if boundary.contains(&c) { square } else { Vec::new() };
    }
    let mut poly = square;
    for &k in edges {
        let (a, b) = boundary.edge(k);
        poly = clip_half_plane(&poly, &a, &b);
        if poly.len() < 3 {
            return Vec::new();
        }
    }
    if signed_area(&poly) <= 0.0 {
        return Vec::new();
    }
    poly
}

/// Liang-Barsky clip of segment `a -> b` against a box expanded by `tol`;
/// endpoints are clamped back onto the exact box.
fn clip_segment(a: &Point, b: &Point, lo: &Point, hi: &Point, tol: f64) -> Option<(Point, Point)> {
    let d = b - a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    let checks = [
        (-d.x, a.x - (lo.x - tol)),
        (d.x, (hi.x + tol) - a.x),
        (-d.y, a.y - (lo.y - tol)),
        (d.y, (hi.y + tol) - a.y),
    ];
    for (p, q) in checks {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    if t0 >= t1 {
        return None;
    }
    let clamp = |p: Point| Point::new(p.x.clamp(lo.x, hi.x), p.y.clamp(lo.y, hi.y));
    Some((clamp(a + d * t0), clamp(a + d * t1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Interior,
    Cut,
    Outside,
}

/// Straight piece of the domain boundary lying in one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySegment {
    pub a: Point,
    pub b: Point,
    pub normal: Vector,
    pub tangent: Vector,
}

impl BoundarySegment {
    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    pub fn midpoint(&self) -> Point {
        Point::from((self.a.coords + self.b.coords) * 0.5)
    }
}

#[derive(Debug, Clone)]
pub struct ImmersedDomain {
    grid: BackgroundGrid,
    boundary: Polygon,
    kinds: Vec<ElementKind>,
    /// Clipped polygon for cut elements, empty otherwise.
    cut_polygons: Vec<Vec<Point>>,
    segments: Vec<Vec<BoundarySegment>>,
    stab: Vec<bool>,
}

impl ImmersedDomain {
    /// Classifies every element, caches cut geometry and extracts the
    /// stabilization band (boundary elements and their neighbours).
    pub fn new(grid: BackgroundGrid, boundary: Polygon) -> Result<Self, GeometryError> {
        let n_el = grid.n_elements();
        let h = grid.h;
        let tol = EPS_GEO * h;

        // bin edges into the elements their bounding boxes touch
        let mut bins: Vec<Vec<usize>> = vec![Vec::new(); n_el];
        for k in 0..boundary.n_edges() {
            let (a, b) = boundary.edge(k);
            let range = |lo: f64, hi: f64, o: f64, n: usize| {
                let i0 = ((lo - tol - o) / h).floor().max(0.0);
                let i1 = ((hi + tol - o) / h).floor().min(n as f64 - 1.0);
                (i0 as i64, i1 as i64)
            };
            let (x0, x1) = range(a.x.min(b.x), a.x.max(b.x), grid.origin.x, grid.nx);
            let (y0, y1) = range(a.y.min(b.y), a.y.max(b.y), grid.origin.y, grid.ny);
            for ey in y0..=y1 {
                for ex in x0..=x1 {
                    let e = grid.element_index(ex as usize, ey as usize);
                    let (lo, hi) = grid.element_box(e);
                    if edge_touches_box(&a, &b, &lo, &hi, tol) {
                        bins[e].push(k);
                    }
                }
            }
        }

        let reflex: Vec<usize> = (0..boundary.n_edges())
            .filter(|&k| boundary.is_reflex(k))
            .collect();
        for &k in &reflex {
            let v = boundary.vertices()[k];
            for e in 0..n_el {
                let (lo, hi) = grid.element_box(e);
                if v.x > lo.x + tol && v.x < hi.x - tol && v.y > lo.y + tol && v.y < hi.y - tol {
                    let (ex, ey) = grid.element_coords(e);
                    return Err(GeometryError::NonConvexCut(ex, ey));
                }
            }
        }

        // inside test for edge-free elements: crossings along each row of centers
        let mut row_inside = vec![false; n_el];
        for ey in 0..grid.ny {
            let yc = grid.origin.y + (ey as f64 + 0.5) * h;
            let mut xs: Vec<f64> = (0..boundary.n_edges())
                .filter_map(|k| {
                    let (a, b) = boundary.edge(k);
                    ((a.y > yc) != (b.y > yc)).then(|| a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y))
                })
                .collect();
            xs.sort_by(|a, b| a.total_cmp(b));
            for ex in 0..grid.nx {
                let xc = grid.origin.x + (ex as f64 + 0.5) * h;
                let right = xs.iter().filter(|&&x| x > xc).count();
                row_inside[grid.element_index(ex, ey)] = right % 2 == 1;
            }
        }

        let full = h * h;
        let mut kinds = vec![ElementKind::Outside; n_el];
        let mut cut_polygons = vec![Vec::new(); n_el];
        let mut segments = vec![Vec::new(); n_el];
        for e in 0..n_el {
            let (lo, hi) = grid.element_box(e);
            if bins[e].is_empty() {
                if row_inside[e] {
                    kinds[e] = ElementKind::Interior;
                }
                continue;
            }
            let poly = clip_with_edges(&lo, &hi, &boundary, &bins[e]);
            let area = if poly.is_empty() { 0.0 } else { signed_area(&poly) };
            kinds[e] = if area < EPS_GEO * full {
                ElementKind::Outside
            } else if area > (1.0 - EPS_GEO) * full {
                ElementKind::Interior
            } else {
                cut_polygons[e] = poly;
                ElementKind::Cut
            };

            for &k in &bins[e] {
                let (a, b) = boundary.edge(k);
                let Some((p, q)) = clip_segment(&a, &b, &lo, &hi, tol) else {
                    continue;
                };
                if (q - p).norm() <= 1e-13 * h {
                    continue;
                }
                let normal = outward_normal(&a, &b);
                let mid = Point::from((p.coords + q.coords) * 0.5);
                // a piece on a grid line belongs to the element on the domain side
                let probe = mid - normal * (1e-9 * h);
                if probe.x < lo.x || probe.x >= hi.x || probe.y < lo.y || probe.y >= hi.y {
                    continue;
                }
                segments[e].push(BoundarySegment {
                    a: p,
                    b: q,
                    normal,
                    tangent: (b - a).normalize(),
                });
            }
        }

        let mut dom = Self {
            grid,
            boundary,
            kinds,
            cut_polygons,
            segments,
            stab: vec![false; n_el],
        };
        dom.stab = dom.extract_stab_subdomain();
        Ok(dom)
    }

    pub fn grid(&self) -> &BackgroundGrid {
        &self.grid
    }

    pub fn boundary(&self) -> &Polygon {
        &self.boundary
    }

    pub fn kind(&self, elem: usize) -> ElementKind {
        self.kinds[elem]
    }

    pub fn kinds(&self) -> &[ElementKind] {
        &self.kinds
    }

    pub fn is_active_element(&self, elem: usize) -> bool {
        self.kinds[elem] != ElementKind::Outside
    }

    /// Clipped polygon of a cut element (empty for other kinds).
    pub fn cut_polygon(&self, elem: usize) -> &[Point] {
        &self.cut_polygons[elem]
    }

    /// `elem ∩ Ω` as a polygon for any element kind.
    pub fn clipped_region(&self, elem: usize) -> Vec<Point> {
        match self.kinds[elem] {
            ElementKind::Interior => {
                let (lo, hi) = self.grid.element_box(elem);
                box_polygon(&lo, &hi)
            }
            ElementKind::Cut => self.cut_polygons[elem].clone(),
            ElementKind::Outside => Vec::new(),
        }
    }

    pub fn element_area(&self, elem: usize) -> f64 {
        match self.kinds[elem] {
            ElementKind::Interior => self.grid.h * self.grid.h,
            ElementKind::Cut => signed_area(&self.cut_polygons[elem]),
            ElementKind::Outside => 0.0,
        }
    }

    /// Boundary pieces owned by an element. Pieces along a grid line belong to
    /// the element on the domain side.
    pub fn boundary_segments(&self, elem: usize) -> &[BoundarySegment] {
        &self.segments[elem]
    }

    pub fn count(&self, kind: ElementKind) -> usize {
        self.kinds.iter().filter(|&&k| k == kind).count()
    }

    /// Elements meeting the boundary (cut, or carrying boundary segments),
    /// together with their face and corner neighbours, restricted to elements
    /// that intersect the domain.
    pub fn extract_stab_subdomain(&self) -> Vec<bool> {
        let n_el = self.grid.n_elements();
        let mut mark = vec![false; n_el];
        for e in 0..n_el {
            if self.kinds[e] == ElementKind::Cut || !self.segments[e].is_empty() {
                mark[e] = true;
                for nb in self.grid.neighbors(e) {
                    mark[nb] = true;
                }
            }
        }
        for e in 0..n_el {
            mark[e] &= self.is_active_element(e);
        }
        mark
    }

    pub fn in_stab_subdomain(&self, elem: usize) -> bool {
        self.stab[elem]
    }

    pub fn stab_subdomain(&self) -> &[bool] {
        &self.stab
    }

    /// Replaces the stabilization band, e.g. to freeze it from a coarser mesh.
    /// Elements outside the domain are dropped from the mask.
    pub fn set_stab_subdomain(&mut self, mask: Vec<bool>) {
        assert_eq!(mask.len(), self.grid.n_elements());
        self.stab = mask
            .into_iter()
            .enumerate()
            .map(|(e, m)| m && self.is_active_element(e))
            .collect();
    }

    /// Line-based dump: `ex ey x1 y1 x2 y2 ...` per non-empty element region.
    pub fn export_geometry_text(&self) -> String {
        let mut out = String::new();
        for e in 0..self.grid.n_elements() {
            let poly = self.clipped_region(e);
            if poly.is_empty() {
                continue;
            }
            let (ex, ey) = self.grid.element_coords(e);
            let kind = match self.kinds[e] {
                ElementKind::Interior => "interior",
                ElementKind::Cut => "cut",
                ElementKind::Outside => "outside",
            };
            let _ = write!(out, "{ex} {ey}");
            for v in &poly {
                let _ = write!(out, " {:.17e} {:.17e}", v.x, v.y);
            }
            let _ = writeln!(out, " # {kind}{}", if self.stab[e] { " stab" } else { "" });
        }
        out
    }
}

/// Unit square with `n x n` elements; the last row and column stick out of the
/// domain by `delta_cut * h`.
pub fn make_unit_square_domain(n: usize, delta_cut: f64) -> Result<ImmersedDomain, GeometryError> {
    if n < 3 {
        return Err(GeometryError::InvalidGrid(format!("need at least 3 elements per side, got {n}")));
    }
    if !(0.0..1.0).contains(&delta_cut) {
        return Err(GeometryError::InvalidDeltaCut(delta_cut));
    }
    let h = 1.0 / (n as f64 - delta_cut);
    let grid = BackgroundGrid::new(Point::origin(), h, n, n)?;
    let square = Polygon::new(vec![
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(1.0, 1.0),
        Point::new(0.0, 1.0),
    ])?;
    ImmersedDomain::new(grid, square)
}

/// Regular `segments`-gon inscribed in the unit circle.
pub fn circle_polygon(segments: usize) -> Result<Polygon, GeometryError> {
    let verts = (0..segments)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / segments as f64;
            Point::new(a.cos(), a.sin())
        })
        .collect();
    Polygon::new(verts)
}

/// Unit disk on a background grid shifted by `(t h, t h / 3)`.
pub fn make_unit_circle_domain(h: f64, t: f64, segments: usize) -> Result<ImmersedDomain, GeometryError> {
    if !(h > 0.0 && h < 1.0) {
        return Err(GeometryError::InvalidGrid(format!("circle mesh size must be in (0, 1), got {h}")));
    }
    let poly = circle_polygon(segments)?;
    let k = (1.0 / h).ceil() as usize + 2;
    let origin = Point::new(t * h - k as f64 * h, t * h / 3.0 - k as f64 * h);
    let grid = BackgroundGrid::new(origin, h, 2 * k + 1, 2 * k + 1)?;
    ImmersedDomain::new(grid, poly)
}
