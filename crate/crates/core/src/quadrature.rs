//! Gauss rules on segments, full elements, triangles and cut cells.

use crate::geometry::{centroid, signed_area, EPS_GEO};
use crate::{Point, Vector};

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// Legendre three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = x;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        // recompute the derivative at the converged node
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = if n > 1 { n as f64 * (x * p1 - p0) / (x * x - 1.0) } else { 1.0 };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Area rule.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn extend(&mut self, other: QuadRule) {
        self.points.extend(other.points);
        self.weights.extend(other.weights);
    }
}

/// Line rule carrying the segment's outward normal and unit tangent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundaryRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub normal: Vector,
    pub tangent: Vector,
}

impl BoundaryRule {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }
}

/// `npts`-point Gauss rule on the segment `a -> b`. The normal is the right-hand
/// normal of the direction, which points outward for counterclockwise boundaries.
pub fn gauss_segment(a: &Point, b: &Point, npts: usize) -> BoundaryRule {
    let d = b - a;
    let len = d.norm();
    if len == 0.0 {
        return BoundaryRule::default();
    }
    let tangent = d / len;
    let (xs, ws) = gauss_legendre(npts);
    BoundaryRule {
        points: xs.iter().map(|&s| a + d * (0.5 * (s + 1.0))).collect(),
        weights: ws.iter().map(|&w| 0.5 * len * w).collect(),
        normal: Vector::new(tangent.y, -tangent.x),
        tangent,
    }
}

/// Tensor Gauss rule on the box `[lo, hi]`, exact for `Q^{2 npts - 1}`.
pub fn tensor_rule(lo: &Point, hi: &Point, npts: usize) -> QuadRule {
    let (xs, ws) = gauss_legendre(npts);
    let (dx, dy) = (hi.x - lo.x, hi.y - lo.y);
    let mut rule = QuadRule {
        points: Vec::with_capacity(npts * npts),
        weights: Vec::with_capacity(npts * npts),
    };
    for (sy, wy) in xs.iter().zip(&ws) {
        for (sx, wx) in xs.iter().zip(&ws) {
            rule.points.push(Point::new(
                lo.x + 0.5 * (sx + 1.0) * dx,
                lo.y + 0.5 * (sy + 1.0) * dy,
            ));
            rule.weights.push(0.25 * dx * dy * wx * wy);
        }
    }
    rule
}

/// Collapsed (conical product) Gauss rule on a triangle: `npts + 1` points
/// along the collapsed direction and `npts` across, exact for total degree
/// `2 npts - 1`, all weights positive and all points interior.
pub fn triangle_rule(a: &Point, b: &Point, c: &Point, npts: usize) -> QuadRule {
    let area2 = (b - a).perp(&(c - a));
    if area2 <= 0.0 {
        return QuadRule::default();
    }
    let (us, wu) = gauss_legendre(npts + 1);
    let (vs, wv) = gauss_legendre(npts);
    let mut rule = QuadRule::default();
    for (u, wu) in us.iter().zip(&wu) {
        let u = 0.5 * (u + 1.0);
        for (v, wv) in vs.iter().zip(&wv) {
            let v = 0.5 * (v + 1.0);
            // (u, v) in the unit square -> barycentric (1 - u, u (1 - v), u v)
            let l1 = u * (1.0 - v);
            let l2 = u * v;
            let p = a + (b - a) * l1 + (c - a) * l2;
            rule.points.push(p);
            rule.weights.push(0.25 * wu * wv * u * area2);
        }
    }
    rule
}

/// Fan triangulation from the centroid with a triangle rule of degree
/// `2 npts - 1` on each piece.
pub fn cut_cell_rule(polygon: &[Point], npts: usize) -> QuadRule {
    if polygon.len() < 3 {
        return QuadRule::default();
    }
    let area = signed_area(polygon);
    let scale = polygon
        .iter()
        .map(|p| (p - polygon[0]).norm_squared())
        .fold(0.0, f64::max);
    if area <= EPS_GEO * scale {
        return QuadRule::default();
    }
    let c = centroid(polygon);
    let mut rule = QuadRule::default();
    let n = polygon.len();
    for k in 0..n {
        rule.extend(triangle_rule(&c, &polygon[k], &polygon[(k + 1) % n], npts));
    }
    rule
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_nodes_known_values() {
        let (x, w) = gauss_legendre(2);
        assert!((x[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15);
        let (x, w) = gauss_legendre(3);
        assert!((x[2] - (0.6f64).sqrt()).abs() < 1e-15);
        assert!((w[1] - 8.0 / 9.0).abs() < 1e-15);
        let (_, w) = gauss_legendre(1);
        assert_eq!(w, vec![2.0]);
        for n in 1..=12 {
            let (_, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            assert!(w.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn segment_length_and_exactness() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(3.0, 4.0);
        let r = gauss_segment(&a, &b, 2);
        assert!((r.weights.iter().sum::<f64>() - 5.0).abs() < 1e-14);
        let unit = gauss_segment(&a, &Point::new(1.0, 0.0), 3);
        assert!((unit.integrate(|p| p.x.powi(5)) - 1.0 / 6.0).abs() < 1e-14);
        assert!(gauss_segment(&a, &a, 3).is_empty());
    }

    #[test]
    fn two_point_rule_is_not_exact_for_quartics() {
        let r = gauss_segment(&Point::new(0.0, 0.0), &Point::new(1.0, 0.0), 2);
        let v = r.integrate(|p| p.x.powi(4));
        // nodes (1 -+ 1/sqrt3)/2 give 7/36
        assert!((v - 7.0 / 36.0).abs() < 1e-15);
        assert!((v - 0.2).abs() > 1e-3);
    }

    #[test]
    fn tensor_exactness() {
        let r = tensor_rule(&Point::new(0.0, 0.0), &Point::new(1.0, 1.0), 4);
        assert!((r.integrate(|p| p.x.powi(3) * p.y.powi(3)) - 1.0 / 16.0).abs() < 1e-14);
        let r = tensor_rule(&Point::new(0.2, 0.3), &Point::new(0.45, 0.55), 1);
        assert!((r.measure() - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn right_triangle_first_moment() {
        let r = triangle_rule(
            &Point::new(0.0, 0.0),
            &Point::new(1.0, 0.0),
            &Point::new(0.0, 1.0),
            4,
        );
        assert!((r.integrate(|p| p.x) - 1.0 / 6.0).abs() < 1e-14);
        assert!(r.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn full_element_cut_cell() {
        let sq = [
            Point::new(0.0, 0.0),
            Point::new(0.1, 0.0),
            Point::new(0.1, 0.1),
            Point::new(0.0, 0.1),
        ];
        let r = cut_cell_rule(&sq, 4);
        assert!((r.measure() - 0.01).abs() < 1e-16);
    }

    #[test]
    fn degenerate_cut_cell_is_empty() {
        let flat = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, 0.0)];
        assert!(cut_cell_rule(&flat, 4).is_empty());
    }
}
