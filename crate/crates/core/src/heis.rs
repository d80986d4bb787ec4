//! Heisenberg group primitives.
//!
//! Points of `R^3` carry the product
//! `(x, y, z) * (x', y', z') = (x + x', y + y', z + z' + (x y' - y x') / 2)`.
//! Curves are stored as piecewise-affine polylines on the uniform grid
//! `u_j = j / J`. The discrete horizontality rule integrates the contact form
//! exactly along each affine segment, so lifting, the residual and the
//! oriented-area functional all agree with each other up to round-off.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the plane `{z = 0}`; also used for planar vectors.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub const ZERO: PlanarPoint = PlanarPoint { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at angle `theta` from the positive x-axis.
    pub fn from_angle(theta: f64) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Scalar cross product `a.x b.y - a.y b.x`.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    /// Counter-clockwise rotation by 90 degrees, `(x, y) -> (-y, x)`.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn rotate(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lift(self, z: f64) -> HPoint {
        HPoint::new(self.x, self.y, z)
    }
}

impl Add for PlanarPoint {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for PlanarPoint {
    fn add_assign(&mut self, rhs: Self) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for PlanarPoint {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for PlanarPoint {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl Mul<PlanarPoint> for f64 {
    type Output = PlanarPoint;
    fn mul(self, rhs: PlanarPoint) -> PlanarPoint {
        PlanarPoint::new(self * rhs.x, self * rhs.y)
    }
}

/// A point of the Heisenberg group.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl HPoint {
    pub const ORIGIN: HPoint = HPoint { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn planar(self) -> PlanarPoint {
        PlanarPoint::new(self.x, self.y)
    }

    /// Group inverse `(-x, -y, -z)`.
    pub fn inverse(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    fn magnitude(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }
}

/// Group product `p * q`.
pub fn group_compose(p: HPoint, q: HPoint) -> HPoint {
    HPoint::new(p.x + q.x, p.y + q.y, p.z + q.z + 0.5 * (p.x * q.y - p.y * q.x))
}

/// Planar polyline with `J + 1` nodes at `u_j = j / J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarPolyline {
    nodes: Vec<PlanarPoint>,
}

impl PlanarPolyline {
    pub fn new(nodes: Vec<PlanarPoint>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Degenerate(format!(
                "polyline needs at least 2 nodes, got {}",
                nodes.len()
            )));
        }
        if let Some(j) = nodes.iter().position(|p| !p.is_finite()) {
            return Err(Error::Invalid(format!("node {j} is not finite")));
        }
        Ok(Self { nodes })
    }

    /// Straight segment from `a` to `b` with `segments` equal pieces.
    pub fn segment(a: PlanarPoint, b: PlanarPoint, segments: usize) -> Result<Self> {
        let n = segments.max(1);
        let nodes = (0..=n)
            .map(|j| {
                let u = j as f64 / n as f64;
                a + u * (b - a)
            })
            .collect();
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[PlanarPoint] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<PlanarPoint> {
        self.nodes
    }

    /// Number of segments `J`.
    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn first(&self) -> PlanarPoint {
        self.nodes[0]
    }

    pub fn last(&self) -> PlanarPoint {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn reversed(&self) -> Self {
        let mut nodes = self.nodes.clone();
        nodes.reverse();
        Self { nodes }
    }

    /// Per-segment Euclidean lengths.
    pub fn segment_lengths(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| w[0].distance(w[1])).collect()
    }

    /// Index and length of the first segment that is not strictly positive.
    pub fn first_degenerate_segment(&self) -> Option<(usize, f64)> {
        self.segment_lengths()
            .into_iter()
            .enumerate()
            .find(|(_, l)| !(*l > 0.0))
    }

    pub fn map(&self, f: impl Fn(PlanarPoint) -> PlanarPoint) -> Self {
        Self {
            nodes: self.nodes.iter().map(|&p| f(p)).collect(),
        }
    }
}

/// Polyline in the Heisenberg group with nodes at `u_j = j / J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HPolyline {
    nodes: Vec<HPoint>,
}

impl HPolyline {
    pub fn new(nodes: Vec<HPoint>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Degenerate(format!(
                "polyline needs at least 2 nodes, got {}",
                nodes.len()
            )));
        }
        if let Some(j) = nodes.iter().position(|p| !p.is_finite()) {
            return Err(Error::Invalid(format!("node {j} is not finite")));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[HPoint] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<HPoint> {
        self.nodes
    }

    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn first(&self) -> HPoint {
        self.nodes[0]
    }

    pub fn last(&self) -> HPoint {
        self.nodes[self.nodes.len() - 1]
    }

    /// The projected curve in the plane `{z = 0}`.
    pub fn planar(&self) -> PlanarPolyline {
        PlanarPolyline {
            nodes: self.nodes.iter().map(|p| p.planar()).collect(),
        }
    }

    pub fn is_horizontal(&self) -> bool {
        let scale = 1.0 + self.nodes.iter().map(|p| p.magnitude()).fold(0.0, f64::max);
        max_abs(&horizontality_residual(self)) <= 1e-10 * scale
    }
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Applies the left translation `p -> a * p` to every node.
pub fn left_translate(a: HPoint, curve: &HPolyline) -> HPolyline {
    HPolyline {
        nodes: curve.nodes.iter().map(|&p| group_compose(a, p)).collect(),
    }
}

/// Per-segment residual `(z_j - z_{j-1}) - (c_{j-1} x c_j) / 2`.
///
/// The second term is the exact integral of the contact form along the
/// affine segment, so a curve is discretely horizontal iff all residuals
/// vanish.
pub fn horizontality_residual(curve: &HPolyline) -> Vec<f64> {
    curve
        .nodes
        .windows(2)
        .map(|w| (w[1].z - w[0].z) - 0.5 * w[0].planar().cross(w[1].planar()))
        .collect()
}

/// Oriented-area functional of the piecewise-affine curve (shoelace sum).
pub fn discrete_g(curve: &PlanarPolyline) -> f64 {
    curve.nodes.windows(2).map(|w| 0.5 * w[0].cross(w[1])).sum()
}

/// Which endpoint of a lift carries a prescribed height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftAnchor {
    AtStart(f64),
    AtEnd(f64),
}

/// Horizontal lift of a planar polyline.
///
/// Heights accumulate the shoelace increments forward from `AtStart` or
/// backward from `AtEnd`; the anchored endpoint is matched exactly.
pub fn horizontal_lift(curve: &PlanarPolyline, anchor: LiftAnchor) -> HPolyline {
    let c = &curve.nodes;
    let n = c.len();
    let increments: Vec<f64> = c.windows(2).map(|w| 0.5 * w[0].cross(w[1])).collect();
    let mut z = vec![0.0; n];
    match anchor {
        LiftAnchor::AtStart(z0) => {
            z[0] = z0;
            for j in 1..n {
                z[j] = z[j - 1] + increments[j - 1];
            }
        }
        LiftAnchor::AtEnd(z1) => {
            z[n - 1] = z1;
            for j in (0..n - 1).rev() {
                z[j] = z[j + 1] - increments[j];
            }
        }
    }
    HPolyline {
        nodes: c.iter().zip(z).map(|(p, z)| p.lift(z)).collect(),
    }
}

/// Sub-Riemannian length of a horizontal polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GLength {
    /// Euclidean length of the planar projection.
    pub length: f64,
    pub max_residual: f64,
    /// False when the residuals exceed the round-off tolerance; the length is
    /// then only the length of the projection.
    pub horizontal: bool,
}

pub fn curve_length_g(curve: &HPolyline) -> GLength {
    let length = curve
        .nodes
        .windows(2)
        .map(|w| w[0].planar().distance(w[1].planar()))
        .sum();
    GLength {
        length,
        max_residual: max_abs(&horizontality_residual(curve)),
        horizontal: curve.is_horizontal(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn unit_polygon(j: usize) -> PlanarPolyline {
        PlanarPolyline::new(
            (0..=j)
                .map(|k| PlanarPoint::from_angle(2.0 * PI * k as f64 / j as f64))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn compose_examples() {
        let p = group_compose(HPoint::new(1.0, 0.0, 0.0), HPoint::new(0.0, 1.0, 0.0));
        assert_eq!(p, HPoint::new(1.0, 1.0, 0.5));
        let q = HPoint::new(0.3, -1.2, 2.5);
        assert_eq!(group_compose(q, HPoint::ORIGIN), q);
        assert_eq!(group_compose(q, q.inverse()), HPoint::ORIGIN);
    }

    #[test]
    fn translate_to_origin_and_vertical_shift() {
        let c = PlanarPolyline::new(vec![
            PlanarPoint::new(1.0, 2.0),
            PlanarPoint::new(1.5, 2.2),
            PlanarPoint::new(2.0, 3.0),
        ])
        .unwrap();
        let g = horizontal_lift(&c, LiftAnchor::AtStart(0.7));
        let t = left_translate(g.first().inverse(), &g);
        assert_abs_diff_eq!(t.first().x, 0.0);
        assert_abs_diff_eq!(t.first().y, 0.0);
        assert_abs_diff_eq!(t.first().z, 0.0, epsilon = 1e-15);

        let v = left_translate(HPoint::new(0.0, 0.0, 1.25), &g);
        for (a, b) in v.nodes().iter().zip(g.nodes()) {
            assert_eq!(a.x, b.x);
            assert_eq!(a.y, b.y);
            assert_abs_diff_eq!(a.z, b.z + 1.25, epsilon = 1e-15);
        }
        assert_eq!(left_translate(HPoint::ORIGIN, &g), g);
    }

    #[test]
    fn residual_of_planar_curves() {
        let line = HPolyline::new(
            (0..=10)
                .map(|k| HPoint::new(-1.0 + 0.3 * k as f64, 0.5 * (-1.0 + 0.3 * k as f64), 0.0))
                .collect(),
        )
        .unwrap();
        assert!(horizontality_residual(&line).iter().all(|r| r.abs() < 1e-15));

        // Lower semicircle from 0 to (2R, 0) lying in the plane: not horizontal.
        let r = 1.5;
        let n = 200;
        let semi = HPolyline::new(
            (0..=n)
                .map(|k| {
                    let phi = PI - PI * k as f64 / n as f64;
                    HPoint::new(r + r * phi.cos(), -r * phi.sin(), 0.0)
                })
                .collect(),
        )
        .unwrap();
        let total: f64 = horizontality_residual(&semi).iter().sum();
        // Inscribed polygon area (n/2) R^2 sin(pi/n) tends to the half disc.
        let expected = -0.5 * n as f64 * r * r * (PI / n as f64).sin();
        assert_abs_diff_eq!(total, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(total, -0.5 * PI * r * r, epsilon = 1e-3);
        assert!(!semi.is_horizontal());
    }

    #[test]
    fn g_of_polygon() {
        assert_eq!(
            discrete_g(&PlanarPolyline::segment(PlanarPoint::ZERO, PlanarPoint::new(1.0, 0.0), 1).unwrap()),
            0.0
        );
        let c = unit_polygon(100);
        let expected = 50.0 * (2.0 * PI / 100.0).sin();
        assert_abs_diff_eq!(discrete_g(&c), expected, epsilon = 1e-13);
        assert_abs_diff_eq!(discrete_g(&c), 3.139526, epsilon = 1e-6);
        assert_abs_diff_eq!(discrete_g(&c.reversed()), -expected, epsilon = 1e-13);
    }

    #[test]
    fn lift_of_polygon() {
        let c = unit_polygon(100);
        let fwd = horizontal_lift(&c, LiftAnchor::AtStart(0.0));
        assert_abs_diff_eq!(fwd.last().z, discrete_g(&c), epsilon = 1e-14);
        assert_abs_diff_eq!(fwd.last().z, 3.139526, epsilon = 1e-6);
        assert!(horizontality_residual(&fwd).iter().all(|r| r.abs() < 1e-15));

        let bwd = horizontal_lift(&c, LiftAnchor::AtEnd(discrete_g(&c)));
        for (a, b) in fwd.nodes().iter().zip(bwd.nodes()) {
            assert_abs_diff_eq!(a.z, b.z, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(bwd.first().z, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn lengths() {
        let seg = PlanarPolyline::segment(PlanarPoint::ZERO, PlanarPoint::new(3.0, 4.0), 7).unwrap();
        let g = horizontal_lift(&seg, LiftAnchor::AtStart(0.0));
        let len = curve_length_g(&g);
        assert_abs_diff_eq!(len.length, 5.0, epsilon = 1e-14);
        assert!(len.horizontal);

        let circle = horizontal_lift(&unit_polygon(100), LiftAnchor::AtStart(0.0));
        let l = curve_length_g(&circle).length;
        assert_abs_diff_eq!(l, 200.0 * (PI / 100.0).sin(), epsilon = 1e-12);
        assert_abs_diff_eq!(l, 6.282152, epsilon = 1e-6);
        let moved = left_translate(HPoint::new(-3.0, 0.4, 9.0), &circle);
        assert_abs_diff_eq!(curve_length_g(&moved).length, l, epsilon = 1e-12);
        assert!(curve_length_g(&moved).horizontal);
    }

    #[test]
    fn non_horizontal_length_is_flagged() {
        let g = HPolyline::new(vec![HPoint::new(0.0, 0.0, 0.0), HPoint::new(1.0, 0.0, 1.0)]).unwrap();
        let len = curve_length_g(&g);
        assert!(!len.horizontal);
        assert_eq!(len.max_residual, 1.0);
    }

    #[test]
    fn rejects_short_or_nonfinite() {
        assert!(PlanarPolyline::new(vec![PlanarPoint::ZERO]).is_err());
        assert!(HPolyline::new(vec![HPoint::ORIGIN, HPoint::new(f64::NAN, 0.0, 0.0)]).is_err());
    }
}
