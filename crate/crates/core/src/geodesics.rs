//! Length-minimising horizontal curves between two points.
//!
//! After a left translation moving the start point to the origin the
//! projection of a minimiser is a straight segment, a circular arc, or (when
//! both points lie on one vertical line) a full circle that can be rotated
//! freely about the common vertical axis.
//!
//! Two objects are produced for every pair of endpoints:
//!
//! * a [`GeodesicSpec`] holding the closed-form parameters of the smooth
//!   minimiser (curvature multiplier, length, initial tangent, circle centre);
//! * a sampled polyline. Its nodes lie exactly on the circle of a *discrete*
//!   minimiser: equal central angles, with the total angle chosen so that the
//!   shoelace area of the inscribed polygon reproduces the height gap. The
//!   polyline is therefore exactly horizontal and ends exactly at `Q`; it
//!   converges to the smooth curve at second order in the sample count.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heis::{group_compose, horizontal_lift, HPoint, HPolyline, LiftAnchor, PlanarPoint, PlanarPolyline};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeodesicKind {
    Line,
    Arc,
    VerticalFamily,
}

/// Closed-form parameters of a horizontal minimiser.
///
/// The projection is `c(s) = A + (1/lambda) (sin(lambda s - alpha0), cos(lambda s - alpha0))`
/// for `lambda != 0`, and `c(s) = c(0) + s B` for the line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicSpec {
    pub kind: GeodesicKind,
    pub lambda: f64,
    /// Length of the projection, equal to the sub-Riemannian length.
    pub s_f: f64,
    /// Angle of the initial unit tangent, in `[0, 2 pi)`.
    pub alpha0: f64,
    /// Circle centre `A` (the start point for a line).
    pub center: PlanarPoint,
    /// Unit initial tangent `B`.
    pub tangent: PlanarPoint,
    /// Winding count of the vertical family, 0 otherwise.
    pub k_cover: i32,
}

impl GeodesicSpec {
    pub fn radius(&self) -> f64 {
        if self.lambda == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.lambda.abs()
        }
    }

    /// Point of the projected curve at arc length `s`.
    pub fn planar_at(&self, s: f64) -> PlanarPoint {
        if self.lambda == 0.0 {
            self.center + s * self.tangent
        } else {
            let phase = self.lambda * s - self.alpha0;
            self.center + (1.0 / self.lambda) * PlanarPoint::new(phase.sin(), phase.cos())
        }
    }
}

fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// `sin(theta) - n sin(theta / n)`, with `n = None` standing for `n -> infinity`
/// (`sin(theta) - theta`). Uses the Taylor series near zero where the
/// difference cancels.
fn sin_defect(theta: f64, n: Option<usize>) -> f64 {
    if theta.abs() < 0.5 {
        let t2 = theta * theta;
        let n2 = n.map(|n| 1.0 / (n as f64 * n as f64));
        let mut term = theta;
        let mut sum = 0.0;
        let mut scale = 1.0;
        for k in 1..=12 {
            term *= -t2 / ((2 * k) as f64 * (2 * k + 1) as f64);
            if let Some(n2) = n2 {
                scale *= n2;
            } else {
                scale = 0.0;
            }
            sum += term * (1.0 - scale);
        }
        sum
    } else {
        match n {
            Some(n) => theta.sin() - n as f64 * (theta / n as f64).sin(),
            None => theta.sin() - theta,
        }
    }
}

/// Height-to-chord ratio `h / r^2` of an arc (or, for `Some(n)`, of the
/// inscribed polygon with `n` equal chords) subtending the signed angle
/// `theta`. Odd in `theta`, strictly decreasing on `(-2 pi, 2 pi)`.
pub fn arc_height_ratio(theta: f64, n: Option<usize>) -> f64 {
    let s = (0.5 * theta).sin();
    sin_defect(theta, n) / (8.0 * s * s)
}

/// Solves `arc_height_ratio(theta, n) = ratio` for `theta` in `(-2 pi, 2 pi)`.
pub fn solve_arc_angle(ratio: f64, n: Option<usize>) -> Result<f64> {
    if ratio == 0.0 {
        return Ok(0.0);
    }
    if !ratio.is_finite() {
        return Err(Error::Invalid(format!("height ratio {ratio} is not finite")));
    }
    if let Some(n) = n {
        if n < 3 {
            return Err(Error::Degenerate(format!(
                "a sampled arc needs at least 3 segments, got {n}"
            )));
        }
    }
    // g(theta) = -ratio(theta) increases from 0 to +inf on (0, 2 pi).
    let target = ratio.abs();
    let g = |t: f64| -arc_height_ratio(t, n);
    let (mut lo, mut hi) = (0.0_f64, TAU);
    let mut iterations = 0;
    while iterations < 2000 {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    // `hi` never moved: the target lies beyond what doubles can resolve near 2 pi.
    if hi == TAU {
        return Err(Error::RootNotFound { lo, hi, iterations });
    }
    Ok(-ratio.signum() * theta)
}

/// Left translation taking `p` to the origin, applied to `q`.
fn relative(p: HPoint, q: HPoint) -> HPoint {
    group_compose(p.inverse(), q)
}

/// Chooses `B` from the chord and the signed angle `theta = lambda s_f`.
fn arc_tangent(lambda: f64, theta: f64, chord: PlanarPoint) -> PlanarPoint {
    // 1 - cos(theta) written as 2 sin^2(theta / 2) to avoid cancellation.
    let s = theta.sin();
    let half = (0.5 * theta).sin();
    let one_minus_cos = 2.0 * half * half;
    let f = lambda / (2.0 * one_minus_cos);
    PlanarPoint::new(
        f * (s * chord.x - one_minus_cos * chord.y),
        f * (one_minus_cos * chord.x + s * chord.y),
    )
}

fn arc_center(start: PlanarPoint, lambda: f64, tangent: PlanarPoint) -> PlanarPoint {
    start - (1.0 / lambda) * PlanarPoint::new(-tangent.y, tangent.x)
}

/// Closed-form endpoint of the horizontal geodesic leaving `start` with
/// multiplier `lambda`, length `s_f` and initial tangent angle `alpha0`.
pub fn geodesic_endpoint(start: HPoint, lambda: f64, s_f: f64, alpha0: f64) -> HPoint {
    let b = PlanarPoint::from_angle(alpha0);
    let rel = if lambda == 0.0 {
        (s_f * b).lift(0.0)
    } else {
        let theta = lambda * s_f;
        let center = arc_center(PlanarPoint::ZERO, lambda, b);
        let phase = theta - alpha0;
        let end = center + (1.0 / lambda) * PlanarPoint::new(phase.sin(), phase.cos());
        end.lift((theta.sin() - theta) / (2.0 * lambda * lambda))
    };
    group_compose(start, rel)
}

/// Geodesic from `p` to `q`, with the default rotation `alpha0 = 0` for the
/// vertical family.
pub fn geodesic_between(p: HPoint, q: HPoint, samples: usize) -> Result<(HPolyline, GeodesicSpec)> {
    geodesic_between_with(p, q, samples, 0.0)
}

/// Geodesic from `p` to `q` sampled with `samples` segments of equal length.
///
/// `vertical_alpha0` only matters when both points lie on one vertical line,
/// where it selects a member of the one-parameter family of minimisers.
pub fn geodesic_between_with(
    p: HPoint,
    q: HPoint,
    samples: usize,
    vertical_alpha0: f64,
) -> Result<(HPolyline, GeodesicSpec)> {
    if !p.is_finite() || !q.is_finite() {
        return Err(Error::Invalid("endpoints must be finite".into()));
    }
    if p == q {
        return Err(Error::Degenerate("geodesic endpoints coincide".into()));
    }
    if samples == 0 {
        return Err(Error::Degenerate("need at least one sample segment".into()));
    }
    let rel = relative(p, q);
    let chord = rel.planar();
    let r = chord.norm();
    let h = rel.z;
    let scale = 1.0 + p.planar().norm().max(q.planar().norm());

    let (spec, planar_rel) = if r <= 1e-14 * scale {
        vertical(h, samples, vertical_alpha0)?
    } else if h.abs() <= 1e-15 * (1.0 + r * r) {
        line(chord, samples)
    } else {
        arc(chord, h, samples)?
    };

    // Back to the original frame: the projection of a left translation is a
    // planar translation, and the discrete lift commutes with it.
    let start = p.planar();
    let mut nodes: Vec<PlanarPoint> = planar_rel.into_iter().map(|c| c + start).collect();
    nodes[0] = start;
    let last = nodes.len() - 1;
    nodes[last] = q.planar();
    let planar = PlanarPolyline::new(nodes)?;
    let mut curve = horizontal_lift(&planar, LiftAnchor::AtStart(p.z)).into_nodes();
    let n = curve.len();
    curve[n - 1].z = q.z;
    let spec = GeodesicSpec {
        center: spec.center + start,
        ..spec
    };
    Ok((HPolyline::new(curve)?, spec))
}

fn line(chord: PlanarPoint, samples: usize) -> (GeodesicSpec, Vec<PlanarPoint>) {
    let len = chord.norm();
    let b = (1.0 / len) * chord;
    let spec = GeodesicSpec {
        kind: GeodesicKind::Line,
        lambda: 0.0,
        s_f: len,
        alpha0: normalize_angle(b.y.atan2(b.x)),
        center: PlanarPoint::ZERO,
        tangent: b,
        k_cover: 0,
    };
    let nodes = (0..=samples).map(|j| (j as f64 / samples as f64) * chord).collect();
    (spec, nodes)
}

fn arc(chord: PlanarPoint, h: f64, samples: usize) -> Result<(GeodesicSpec, Vec<PlanarPoint>)> {
    let r = chord.norm();
    let ratio = h / (r * r);

    let theta = solve_arc_angle(ratio, None)?;
    let lambda = 2.0 * (0.5 * theta).sin() / r;
    let tangent = arc_tangent(lambda, theta, chord);
    let spec = GeodesicSpec {
        kind: GeodesicKind::Arc,
        lambda,
        s_f: theta / lambda,
        alpha0: normalize_angle(tangent.y.atan2(tangent.x)),
        center: arc_center(PlanarPoint::ZERO, lambda, tangent),
        tangent,
        k_cover: 0,
    };

    let theta_n = solve_arc_angle(ratio, Some(samples))?;
    let lambda_n = 2.0 * (0.5 * theta_n).sin() / r;
    let tangent_n = arc_tangent(lambda_n, theta_n, chord);
    let nodes = circle_nodes(lambda_n, theta_n, tangent_n, samples);
    Ok((spec, nodes))
}

fn vertical(h: f64, samples: usize, alpha0: f64) -> Result<(GeodesicSpec, Vec<PlanarPoint>)> {
    if samples < 3 {
        return Err(Error::Degenerate(format!(
            "a sampled circle needs at least 3 segments, got {samples}"
        )));
    }
    // Q3 - P3 = -pi k / lambda^2 with k = lambda s_f / 2 pi.
    let k: i32 = if h < 0.0 { 1 } else { -1 };
    let sign = k as f64;
    let lambda = sign * (PI / h.abs()).sqrt();
    let alpha0 = normalize_angle(alpha0);
    let tangent = PlanarPoint::from_angle(alpha0);
    let spec = GeodesicSpec {
        kind: GeodesicKind::VerticalFamily,
        lambda,
        s_f: TAU / lambda.abs(),
        alpha0,
        center: arc_center(PlanarPoint::ZERO, lambda, tangent),
        tangent,
        k_cover: k,
    };

    // Inscribed N-gon with area |h|: (N/2) R^2 sin(2 pi / N) = |h|.
    let n = samples as f64;
    let radius = (2.0 * h.abs() / (n * (TAU / n).sin())).sqrt();
    let lambda_n = sign / radius;
    let nodes = circle_nodes(lambda_n, sign * TAU, tangent, samples);
    Ok((spec, nodes))
}

/// Equal-angle nodes on the circle through the origin with curvature
/// multiplier `lambda`, initial tangent `tangent`, total signed angle `theta`.
fn circle_nodes(lambda: f64, theta: f64, tangent: PlanarPoint, samples: usize) -> Vec<PlanarPoint> {
    let alpha0 = tangent.y.atan2(tangent.x);
    let center = arc_center(PlanarPoint::ZERO, lambda, tangent);
    (0..=samples)
        .map(|j| {
            let phase = theta * (j as f64 / samples as f64) - alpha0;
            center + (1.0 / lambda) * PlanarPoint::new(phase.sin(), phase.cos())
        })
        .collect()
}

/// Length of the minimiser between `p` and `q`.
pub fn geodesic_length(p: HPoint, q: HPoint) -> Result<f64> {
    geodesic_between(p, q, 3).map(|(_, spec)| spec.s_f)
}

/// Parameters `(a, b, alpha, beta)` of the polynomial horizontal curve from
/// the origin to `m`.
fn family_parameters(m: HPoint, b: f64) -> Result<(f64, f64, f64, f64)> {
    let denom = 5.0 * m.x + b;
    if denom == 0.0 {
        return Err(Error::ParameterSingularity(format!(
            "5 M1 + b vanishes (M1 = {}, b = {b}); choose another b",
            m.x
        )));
    }
    let beta = (60.0 * m.z - 10.0 * m.x * m.y + 10.0 * b * m.y) / denom;
    Ok((m.x - b, b, m.y - beta, beta))
}

/// Member `b` of the polynomial family of horizontal curves from `p` to `q`,
/// sampled at `u_j = j / samples`.
///
/// The smooth curve is exactly horizontal; the returned heights are its exact
/// values, so the discrete residual is only second order small.
pub fn example_family_curve(p: HPoint, q: HPoint, b: f64, samples: usize) -> Result<HPolyline> {
    if samples == 0 {
        return Err(Error::Degenerate("need at least one sample segment".into()));
    }
    let m = relative(p, q);
    let (a, b, alpha, beta) = family_parameters(m, b)?;
    let mut nodes: Vec<HPoint> = (0..=samples)
        .map(|j| {
            let u = j as f64 / samples as f64;
            let local = HPoint::new(
                a * u + b * u * u,
                alpha * u * u + beta * u * u * u,
                alpha * a * u.powi(3) / 6.0 + a * beta * u.powi(4) / 4.0 + b * beta * u.powi(5) / 10.0,
            );
            group_compose(p, local)
        })
        .collect();
    nodes[0] = p;
    nodes[samples] = q;
    HPolyline::new(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heis::{discrete_g, horizontality_residual};
    use approx::assert_abs_diff_eq;

    #[test]
    fn quoted_arc_endpoint() {
        let q = geodesic_endpoint(HPoint::ORIGIN, PI, 1.0, 2.0 * PI / 3.0);
        assert_abs_diff_eq!(q.z, -1.0 / (2.0 * PI), epsilon = 1e-15);
        assert_abs_diff_eq!(q.z, -0.159155, epsilon = 1e-6);
        let (_, spec) = geodesic_between(HPoint::ORIGIN, q, 100).unwrap();
        assert_eq!(spec.kind, GeodesicKind::Arc);
        assert_abs_diff_eq!(spec.lambda, PI, epsilon = 1e-10);
        assert_abs_diff_eq!(spec.s_f, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(spec.alpha0, 2.0 * PI / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn line_case() {
        let (curve, spec) = geodesic_between(HPoint::ORIGIN, HPoint::new(1.0, 0.0, 0.0), 10).unwrap();
        assert_eq!(spec.kind, GeodesicKind::Line);
        assert_eq!(spec.lambda, 0.0);
        assert_abs_diff_eq!(spec.s_f, 1.0, epsilon = 1e-15);
        assert!(horizontality_residual(&curve).iter().all(|r| r.abs() < 1e-15));
    }

    #[test]
    fn vertical_case() {
        let q = HPoint::new(0.0, 0.0, 1.0);
        let (curve, spec) = geodesic_between(HPoint::ORIGIN, q, 100).unwrap();
        assert_eq!(spec.kind, GeodesicKind::VerticalFamily);
        assert_abs_diff_eq!(spec.lambda.abs(), PI.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(spec.lambda.abs(), 1.772454, epsilon = 1e-6);
        assert_abs_diff_eq!(spec.radius(), 0.564190, epsilon = 1e-6);
        assert_abs_diff_eq!(spec.s_f, 2.0 * PI.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(spec.s_f, 3.544908, epsilon = 1e-6);
        assert_eq!(spec.k_cover.abs(), 1);
        // The smooth curve closes on Q.
        let end = geodesic_endpoint(HPoint::ORIGIN, spec.lambda, spec.s_f, spec.alpha0);
        assert_abs_diff_eq!(end.x, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(end.y, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(end.z, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(discrete_g(&curve.planar()), 1.0, epsilon = 1e-12);
        assert_eq!(curve.last(), q);
    }

    #[test]
    fn coincident_points_rejected() {
        let p = HPoint::new(1.0, 2.0, 3.0);
        assert!(matches!(geodesic_between(p, p, 10), Err(Error::Degenerate(_))));
    }

    #[test]
    fn lengths_and_symmetry() {
        assert_abs_diff_eq!(
            geodesic_length(HPoint::ORIGIN, HPoint::new(1.0, 0.0, 0.0)).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            geodesic_length(HPoint::ORIGIN, HPoint::new(0.0, 0.0, 1.0)).unwrap(),
            2.0 * PI.sqrt(),
            epsilon = 1e-14
        );
        let p = HPoint::new(0.2, -0.4, 1.0);
        let q = HPoint::new(-1.0, 0.7, -0.3);
        assert_abs_diff_eq!(
            geodesic_length(p, q).unwrap(),
            geodesic_length(q, p).unwrap(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn family_straight_member() {
        let c = example_family_curve(HPoint::ORIGIN, HPoint::new(1.0, 0.0, 0.0), 0.0, 10).unwrap();
        for (j, p) in c.nodes().iter().enumerate() {
            assert_abs_diff_eq!(p.x, j as f64 / 10.0, epsilon = 1e-15);
            assert_eq!(p.y, 0.0);
            assert_eq!(p.z, 0.0);
        }
    }

    #[test]
    fn family_endpoints_and_singularity() {
        let p = HPoint::new(0.5, -0.5, 0.0);
        let q = HPoint::new(0.0, 0.0, -2.0);
        for b in [-3.0, -0.5, 0.0, 1.0, 4.0] {
            let c = example_family_curve(p, q, b, 200).unwrap();
            assert_eq!(c.first(), p);
            assert_eq!(c.last(), q);
            // Residual is only second order small for the sampled curve.
            let max = horizontality_residual(&c).iter().fold(0.0f64, |m, r| m.max(r.abs()));
            assert!(max < 1e-3, "b = {b}: {max}");
        }
        // M1 = -0.5, so b = 2.5 is singular.
        assert!(matches!(
            example_family_curve(p, q, 2.5, 10),
            Err(Error::ParameterSingularity(_))
        ));
    }

    #[test]
    fn family_residual_is_second_order() {
        let p = HPoint::new(0.1, 0.3, 0.2);
        let q = HPoint::new(1.0, -0.5, 0.7);
        let max_res = |n| {
            let c = example_family_curve(p, q, 1.0, n).unwrap();
            horizontality_residual(&c).iter().fold(0.0f64, |m, r| m.max(r.abs()))
        };
        let total = |n| -> f64 {
            let c = example_family_curve(p, q, 1.0, n).unwrap();
            horizontality_residual(&c).iter().sum()
        };
        let ratio = total(50) / total(100);
        assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
        assert!(max_res(100) < max_res(50));
    }

    #[test]
    fn sampled_arc_needs_three_segments() {
        assert!(solve_arc_angle(-0.1, Some(2)).is_err());
        assert!(geodesic_between(HPoint::ORIGIN, HPoint::new(0.0, 0.0, 1.0), 2).is_err());
    }
}
