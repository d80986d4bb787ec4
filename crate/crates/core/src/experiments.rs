//! Initial-data generators and the built-in experiment presets.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::curves::TriodState;
use crate::error::{Error, Result};
use crate::geodesics::{example_family_curve, geodesic_between_with};
use crate::heis::{discrete_g, HPoint, PlanarPoint, PlanarPolyline};

/// Handles of one cubic Bezier arm from the junction `S` to the endpoint `P`:
/// control points `S`, `S + d1 * direction`, `P + d2 * end_direction`, `P`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BezierArm {
    pub direction: PlanarPoint,
    pub d1: f64,
    pub end_direction: PlanarPoint,
    pub d2: f64,
}

impl BezierArm {
    /// Arm that samples the straight segment `S -> P` uniformly.
    pub fn straight(s: PlanarPoint, p: PlanarPoint) -> Self {
        let chord = p - s;
        let len = chord.norm();
        let dir = (1.0 / len) * chord;
        Self {
            direction: dir,
            d1: len / 3.0,
            end_direction: -dir,
            d2: len / 3.0,
        }
    }

    /// Arm with equal handle lengths `d` at both ends.
    pub fn symmetric(direction: PlanarPoint, end_direction: PlanarPoint, d: f64) -> Self {
        Self {
            direction,
            d1: d,
            end_direction,
            d2: d,
        }
    }

    pub fn sample(&self, s: PlanarPoint, p: PlanarPoint, segments: usize) -> Result<PlanarPolyline> {
        let c1 = s + self.d1 * self.direction;
        let c2 = p + self.d2 * self.end_direction;
        let mut nodes: Vec<PlanarPoint> = (0..=segments)
            .map(|j| {
                let u = j as f64 / segments as f64;
                let v = 1.0 - u;
                (v * v * v) * s + (3.0 * u * v * v) * c1 + (3.0 * u * u * v) * c2 + (u * u * u) * p
            })
            .collect();
        nodes[0] = s;
        nodes[segments] = p;
        // The first chord follows the prescribed junction direction exactly.
        if segments > 1 {
            let along = (nodes[1] - s).dot(self.direction);
            nodes[1] = s + along * self.direction;
        }
        PlanarPolyline::new(nodes)
    }
}

/// How the initial curves are generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialKind {
    /// Planar segments; endpoint heights follow from lifting.
    PlanarLine,
    /// Segments in space, each of which must already be horizontal.
    Line3d,
    /// Cubic Bezier arms leaving the junction at mutual 120 degrees.
    Bezier { arms: [BezierArm; 3] },
    /// Polynomial horizontal curves with parameter `b` per curve.
    ExampleFamily { b: [f64; 3] },
    /// Sampled minimisers; `vertical_alpha0` picks the member of the
    /// vertical family when an endpoint lies above the junction.
    GeodesicSampled { vertical_alpha0: f64 },
}

/// Endpoint with optional height. A missing height is completed by lifting
/// the initial curve; a given one is checked against the lift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
}

impl Endpoint {
    pub fn planar(&self) -> PlanarPoint {
        PlanarPoint::new(self.x, self.y)
    }
}

/// Which files a run writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default = "default_true")]
    pub csv: bool,
    #[serde(default)]
    pub svg: bool,
    #[serde(default)]
    pub snapshots: Vec<f64>,
}

fn default_true() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            csv: true,
            svg: false,
            snapshots: Vec::new(),
        }
    }
}

/// Full description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub name: String,
    pub junction: HPoint,
    pub endpoints: [Endpoint; 3],
    pub initial: InitialKind,
    #[serde(rename = "J")]
    pub segments: usize,
    /// Time step as a decimal string, parsed once.
    pub dt: String,
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_sing: Option<f64>,
    pub eps_steady: f64,
    #[serde(default)]
    pub outputs: OutputConfig,
    /// Tolerance when checking given endpoint heights against the lift.
    #[serde(default = "default_height_tol")]
    pub height_tolerance: f64,
}

fn default_height_tol() -> f64 {
    1e-3
}

pub const SCHEMA_VERSION: u32 = 1;

impl ExperimentConfig {
    pub fn dt_value(&self) -> Result<f64> {
        let dt: f64 = self.dt.trim().parse().map_err(|_| Error::Config {
            path: "dt".into(),
            message: format!("not a number: {:?}", self.dt),
        })?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Config {
                path: "dt".into(),
                message: "must be positive".into(),
            });
        }
        Ok(dt)
    }

    /// Checks the fields that serde cannot.
    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, message: &str| Error::Config {
            path: path.into(),
            message: message.into(),
        };
        if self.schema != SCHEMA_VERSION {
            return Err(bad("schema", &format!("unsupported version {}", self.schema)));
        }
        if self.segments < 2 {
            return Err(bad("J", "need at least two segments per curve"));
        }
        self.dt_value()?;
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(bad("T", "must be finite and non-negative"));
        }
        if let Some(e) = self.eps_sing {
            if !(e > 0.0) {
                return Err(bad("eps_sing", "must be positive"));
            }
        }
        if !(self.eps_steady >= 0.0) {
            return Err(bad("eps_steady", "must be non-negative"));
        }
        if !self.junction.is_finite() {
            return Err(bad("junction", "must be finite"));
        }
        for (i, p) in self.endpoints.iter().enumerate() {
            if !p.planar().is_finite() || p.z.is_some_and(|z| !z.is_finite()) {
                return Err(bad(&format!("endpoints[{i}]"), "must be finite"));
            }
        }
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let (a, b) = (self.endpoints[i], self.endpoints[j]);
            if a.planar() == b.planar() && a.z.is_some() && a.z == b.z {
                return Err(bad(
                    &format!("endpoints[{j}]"),
                    &format!("coincides with endpoints[{i}]"),
                ));
            }
        }
        Ok(())
    }

    /// Builds the initial triod.
    pub fn initial_state(&self) -> Result<TriodState> {
        self.validate()?;
        let s = self.junction;
        let j = self.segments;
        let state = match &self.initial {
            InitialKind::PlanarLine => make_initial_planar_line(s, self.planar_endpoints(), j)?,
            InitialKind::Line3d => make_initial_line3d(s, self.spatial_endpoints("line_3d")?, j)?,
            InitialKind::Bezier { arms } => make_initial_bezier_compatible(s, self.planar_endpoints(), arms, j)?,
            InitialKind::ExampleFamily { b } => {
                make_initial_family(s, self.spatial_endpoints("example_family")?, *b, j)?
            }
            InitialKind::GeodesicSampled { vertical_alpha0 } => {
                make_initial_geodesic(s, self.spatial_endpoints("geodesic_sampled")?, j, *vertical_alpha0)?
            }
        };
        for (a, p) in self.endpoints.iter().enumerate() {
            if let Some(z) = p.z {
                let got = state.endpoint_z[a];
                if (got - z).abs() > self.height_tolerance {
                    return Err(Error::Config {
                        path: format!("endpoints[{a}].z"),
                        message: format!(
                            "lifted height {got} differs from {z} by more than {}",
                            self.height_tolerance
                        ),
                    });
                }
            }
        }
        Ok(state)
    }

    fn planar_endpoints(&self) -> [PlanarPoint; 3] {
        self.endpoints.map(|p| p.planar())
    }

    fn spatial_endpoints(&self, kind: &str) -> Result<[HPoint; 3]> {
        let mut out = [HPoint::ORIGIN; 3];
        for (a, p) in self.endpoints.iter().enumerate() {
            let z = p.z.ok_or_else(|| Error::Config {
                path: format!("endpoints[{a}].z"),
                message: format!("required for {kind} initial data"),
            })?;
            out[a] = HPoint::new(p.x, p.y, z);
        }
        Ok(out)
    }
}

fn triod_from_curves(s: HPoint, curves: [PlanarPolyline; 3]) -> Result<TriodState> {
    let z = [0, 1, 2].map(|a| s.z + discrete_g(&curves[a]));
    TriodState::new(curves, z, 0.0)
}

/// Straight planar segments from the junction; endpoint heights by lifting.
pub fn make_initial_planar_line(s: HPoint, p: [PlanarPoint; 3], segments: usize) -> Result<TriodState> {
    let start = s.planar();
    let mut curves = Vec::with_capacity(3);
    for (a, q) in p.iter().enumerate() {
        if *q == start {
            return Err(Error::Degenerate(format!(
                "endpoint {} coincides with the junction",
                a + 1
            )));
        }
        curves.push(PlanarPolyline::segment(start, *q, segments)?);
    }
    let curves: [PlanarPolyline; 3] = curves.try_into().expect("three curves");
    triod_from_curves(s, curves)
}

/// Straight segments in space. Each must be horizontal, i.e. its height gain
/// must equal `(s_x q_y - s_y q_x) / 2`.
pub fn make_initial_line3d(s: HPoint, p: [HPoint; 3], segments: usize) -> Result<TriodState> {
    for (a, q) in p.iter().enumerate() {
        if q.planar() == s.planar() {
            return Err(Error::Degenerate(format!("endpoint {} lies above the junction", a + 1)));
        }
        let expected = 0.5 * s.planar().cross(q.planar());
        let got = q.z - s.z;
        if (got - expected).abs() > 1e-12 * (1.0 + expected.abs()) {
            return Err(Error::NotHorizontal(format!(
                "segment to endpoint {} gains height {got} but a horizontal segment gains {expected}",
                a + 1
            )));
        }
    }
    let mut t = make_initial_planar_line(s, p.map(|q| q.planar()), segments)?;
    t.endpoint_z = p.map(|q| q.z);
    Ok(t)
}

fn check_directions(dirs: [PlanarPoint; 3]) -> Result<()> {
    for d in dirs {
        if (d.norm() - 1.0).abs() > 1e-8 {
            return Err(Error::Invalid(format!("junction direction {d:?} is not a unit vector")));
        }
    }
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        if (dirs[i].dot(dirs[j]) + 0.5).abs() > 1e-8 {
            return Err(Error::Invalid(format!(
                "junction directions {} and {} are not at 120 degrees",
                i + 1,
                j + 1
            )));
        }
    }
    Ok(())
}

/// Cubic Bezier arms meeting at 120 degrees; endpoint heights by lifting.
pub fn make_initial_bezier_compatible(
    s: HPoint,
    p: [PlanarPoint; 3],
    arms: &[BezierArm; 3],
    segments: usize,
) -> Result<TriodState> {
    check_directions(arms.map(|a| a.direction))?;
    let start = s.planar();
    let curves = [
        arms[0].sample(start, p[0], segments)?,
        arms[1].sample(start, p[1], segments)?,
        arms[2].sample(start, p[2], segments)?,
    ];
    triod_from_curves(s, curves)
}

/// Polynomial horizontal curves; heights re-derived from the sampled
/// projections so that the discrete lifts meet at the junction.
pub fn make_initial_family(s: HPoint, p: [HPoint; 3], b: [f64; 3], segments: usize) -> Result<TriodState> {
    let mut curves = Vec::with_capacity(3);
    for a in 0..3 {
        curves.push(example_family_curve(s, p[a], b[a], segments)?.planar());
    }
    triod_from_curves(s, curves.try_into().expect("three curves"))
}

/// Sampled minimisers from the junction to each endpoint.
pub fn make_initial_geodesic(s: HPoint, p: [HPoint; 3], segments: usize, vertical_alpha0: f64) -> Result<TriodState> {
    let mut curves = Vec::with_capacity(3);
    for q in p {
        curves.push(geodesic_between_with(s, q, segments, vertical_alpha0)?.0.planar());
    }
    triod_from_curves(s, curves.try_into().expect("three curves"))
}

/// Bisection for a handle length giving the lifted endpoint height
/// `target`; `arm(d)` builds the arm for handle length `d`.
pub fn calibrate_handle(
    s: HPoint,
    p: PlanarPoint,
    segments: usize,
    target: f64,
    lo: f64,
    hi: f64,
    arm: impl Fn(f64) -> BezierArm,
) -> Result<f64> {
    let height = |d: f64| -> Result<f64> { Ok(s.z + discrete_g(&arm(d).sample(s.planar(), p, segments)?) - target) };
    let (mut a, mut b) = (lo, hi);
    let mut fa = height(a)?;
    let fb = height(b)?;
    if fa.signum() == fb.signum() {
        return Err(Error::RootNotFound { lo, hi, iterations: 0 });
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = height(m)?;
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
        if b - a <= 1e-15 * (1.0 + m.abs()) {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

fn unit(x: f64, y: f64) -> PlanarPoint {
    let n = (x * x + y * y).sqrt();
    PlanarPoint::new(x / n, y / n)
}

fn ep(x: f64, y: f64, z: Option<f64>) -> Endpoint {
    Endpoint { x, y, z }
}

/// Handle lengths calibrated at `J = 100` so that the lifted endpoint
/// heights reproduce the quoted values to three decimals.
pub mod handles {
    pub const EXP5: f64 = 1.0537502111983361;
    pub const EXP6: f64 = 3.0162112895207525;
    pub const EXP7: f64 = 0.13048067000388475;
    pub const UPPER_BUBBLE_013: f64 = 0.23627139043009387;
    pub const LOWER_BUBBLE_002: f64 = 0.0381326112702738;
    pub const LOOP_195: f64 = 7.795992250371082;
    pub const LOOP_104: f64 = 6.65881368246875;
    pub const LOOP_039: f64 = 5.609781974497997;
    pub const EXP12: f64 = 0.13960652514105837;
}

pub const EXPERIMENT_COUNT: usize = 15;

/// Preset `id` in `1..=15`, with `J = 100` and `dt = 1e-4`.
pub fn builtin_experiment(id: usize) -> Result<ExperimentConfig> {
    let s3 = 3f64.sqrt();
    let origin = HPoint::ORIGIN;
    let up = PlanarPoint::new(-0.5, 0.5 * s3);
    let down = PlanarPoint::new(-0.5, -0.5 * s3);
    let (junction, endpoints, initial, t_end, snapshots): (HPoint, [Endpoint; 3], InitialKind, f64, Vec<f64>) = match id
    {
        1 => (
            origin,
            [
                ep(-2.0, 0.0, Some(0.0)),
                ep(1.0, -s3, Some(0.0)),
                ep(1.0, s3, Some(0.0)),
            ],
            InitialKind::PlanarLine,
            1.0,
            vec![0.0, 1.0],
        ),
        2 => (
            origin,
            [
                ep(-0.5, 0.0, Some(0.0)),
                ep(1.0, -3.0, Some(0.0)),
                ep(1.0, 3.0, Some(0.0)),
            ],
            InitialKind::PlanarLine,
            5.0,
            vec![0.0, 1.0, 5.0],
        ),
        3 => (
            origin,
            [
                ep(-0.5, 0.0, Some(0.0)),
                ep(1.0, -9.0, Some(0.0)),
                ep(1.0, 9.0, Some(0.0)),
            ],
            InitialKind::PlanarLine,
            2.0,
            vec![0.0, 1.0, 1.46],
        ),
        4 => (
            HPoint::new(0.0, 0.1, 0.0),
            // The third height is the one that makes the segment horizontal.
            [
                ep(1.0, 0.0, Some(-0.05)),
                ep(0.0, 0.0, Some(0.0)),
                ep(-0.5, 0.5 * s3, Some(0.025)),
            ],
            InitialKind::Line3d,
            0.5,
            vec![0.0, 0.5],
        ),
        5 | 6 => {
            let (y, z, d): (f64, f64, f64) = if id == 5 {
                (3.0, 0.167, handles::EXP5)
            } else {
                (9.0, 2.74, handles::EXP6)
            };
            let p1 = PlanarPoint::new(-0.5, 0.0);
            let len = (1.0 + y * y).sqrt();
            let arms = [
                BezierArm::straight(PlanarPoint::ZERO, p1),
                BezierArm {
                    direction: PlanarPoint::new(0.5, -0.5 * s3),
                    d1: d,
                    end_direction: unit(-1.0, y),
                    d2: len / 3.0,
                },
                BezierArm {
                    direction: PlanarPoint::new(0.5, 0.5 * s3),
                    d1: d,
                    end_direction: unit(-1.0, -y),
                    d2: len / 3.0,
                },
            ];
            (
                origin,
                [ep(-0.5, 0.0, Some(0.0)), ep(1.0, -y, Some(-z)), ep(1.0, y, Some(z))],
                InitialKind::Bezier { arms },
                if id == 5 { 5.0 } else { 20.0 },
                if id == 5 {
                    vec![0.0, 1.0, 5.0]
                } else {
                    vec![0.0, 1.0, 5.0, 16.6]
                },
            )
        }
        7 => {
            let arms = [
                BezierArm::straight(PlanarPoint::ZERO, PlanarPoint::new(1.0, 0.0)),
                BezierArm::symmetric(up, PlanarPoint::new(0.5, 0.5 * s3), handles::EXP7),
                BezierArm::symmetric(down, PlanarPoint::new(0.5, -0.5 * s3), handles::EXP7),
            ];
            (
                origin,
                [
                    ep(1.0, 0.0, Some(0.0)),
                    ep(1.0, 0.0, Some(-0.07)),
                    ep(1.0, 0.0, Some(0.07)),
                ],
                InitialKind::Bezier { arms },
                0.2,
                vec![0.0, 0.02, 0.05, 0.2],
            )
        }
        8..=11 => {
            let s = HPoint::new(-1.0, 0.0, 0.0);
            let c1 = BezierArm::straight(s.planar(), PlanarPoint::ZERO);
            let upper_bubble = BezierArm::symmetric(up, PlanarPoint::new(0.5, 0.5 * s3), handles::UPPER_BUBBLE_013);
            let lower_bubble = BezierArm::symmetric(down, PlanarPoint::new(0.5, -0.5 * s3), handles::LOWER_BUBBLE_002);
            let upper_loop = BezierArm::symmetric(up, unit(-2.0, 1.0), handles::LOOP_195);
            let lower_loop = |d| BezierArm::symmetric(down, unit(-2.0, -1.0), d);
            let (c2, z2, c3, z3, t_end, snaps) = match id {
                8 => (upper_bubble, -0.13, lower_bubble, 0.02, 0.2, vec![0.0, 0.02, 0.2]),
                9 => (upper_loop, 1.95, lower_bubble, 0.02, 20.0, vec![0.0, 0.5, 5.0, 20.0]),
                10 => (
                    upper_loop,
                    1.95,
                    lower_loop(handles::LOOP_104),
                    -1.04,
                    2.0,
                    vec![0.0, 0.5, 1.2],
                ),
                _ => (
                    upper_loop,
                    1.95,
                    lower_loop(handles::LOOP_039),
                    -0.39,
                    5.0,
                    vec![0.0, 0.36, 0.38, 0.5, 5.0],
                ),
            };
            (
                s,
                [ep(0.0, 0.0, Some(0.0)), ep(0.0, 0.0, Some(z2)), ep(0.0, 0.0, Some(z3))],
                InitialKind::Bezier { arms: [c1, c2, c3] },
                t_end,
                snaps,
            )
        }
        12 => {
            let arms = [
                BezierArm::straight(PlanarPoint::ZERO, PlanarPoint::new(-1.0, 0.0)),
                BezierArm::symmetric(PlanarPoint::new(0.5, -0.5 * s3), down, handles::EXP12),
                BezierArm::symmetric(PlanarPoint::new(0.5, 0.5 * s3), up, handles::EXP12),
            ];
            (
                origin,
                [
                    ep(-1.0, 0.0, Some(0.0)),
                    ep(1.0, 0.0, Some(0.07)),
                    ep(1.0, 0.0, Some(-0.07)),
                ],
                InitialKind::Bezier { arms },
                0.3,
                vec![0.0, 0.05, 0.3],
            )
        }
        13 => (
            origin,
            [ep(0.0, 0.0, Some(-PI)), ep(1.0, -s3, Some(0.0)), ep(1.0, s3, Some(0.0))],
            // Tangent pointing down: the loop of c1 lies left of the origin.
            InitialKind::GeodesicSampled {
                vertical_alpha0: 1.5 * PI,
            },
            7.0,
            vec![0.0, 1.0, 2.0, 7.0],
        ),
        14 => (
            HPoint::new(0.5, -0.5, 0.0),
            [
                ep(1.0, 0.0, Some(0.0)),
                ep(0.0, 0.0, Some(0.0)),
                ep(0.0, 0.0, Some(-2.0)),
            ],
            InitialKind::ExampleFamily { b: [1.0; 3] },
            2.0,
            vec![0.0, 1.0, 1.42],
        ),
        15 => (
            HPoint::new(0.1, 0.1, 0.0),
            [
                ep(1.0, 0.0, Some(0.0)),
                ep(0.0, 0.0, Some(0.0)),
                ep(-0.5, 0.5 * s3, Some(0.0)),
            ],
            InitialKind::ExampleFamily { b: [0.0; 3] },
            0.5,
            vec![0.0, 0.1, 0.2],
        ),
        _ => {
            return Err(Error::Invalid(format!(
                "experiment id must be in 1..={EXPERIMENT_COUNT}, got {id}"
            )))
        }
    };
    Ok(ExperimentConfig {
        schema: SCHEMA_VERSION,
        name: format!("experiment-{id:02}"),
        junction,
        endpoints,
        initial,
        segments: 100,
        dt: "1e-4".into(),
        t_end,
        eps_sing: None,
        eps_steady: 1e-6,
        outputs: OutputConfig {
            csv: true,
            svg: false,
            snapshots,
        },
        height_tolerance: default_height_tol(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{junction_angle_defect, lift_triod};
    use crate::heis::horizontality_residual;
    use approx::assert_abs_diff_eq;

    #[test]
    fn every_preset_builds() {
        for id in 1..=EXPERIMENT_COUNT {
            let cfg = builtin_experiment(id).unwrap();
            let t = cfg.initial_state().unwrap_or_else(|e| panic!("experiment {id}: {e}"));
            assert!(t.validate().is_valid(), "experiment {id}");
            let (lifts, spread) = lift_triod(&t);
            assert!(spread <= 1e-10, "experiment {id}: spread {spread}");
            for l in &lifts {
                assert!(horizontality_residual(l).iter().all(|r| r.abs() <= 1e-10));
            }
        }
        assert!(builtin_experiment(0).is_err());
        assert!(builtin_experiment(16).is_err());
    }

    #[test]
    fn steiner_preset() {
        let cfg = builtin_experiment(1).unwrap();
        assert_eq!(cfg.junction, HPoint::ORIGIN);
        assert_eq!(cfg.endpoints[0].planar(), PlanarPoint::new(-2.0, 0.0));
        assert_eq!(cfg.initial, InitialKind::PlanarLine);
        let t = cfg.initial_state().unwrap();
        assert_abs_diff_eq!(t.energy(), 6.0, epsilon = 1e-13);
        assert_eq!(t.segments(), 100);
        assert_eq!(cfg.dt_value().unwrap(), 1e-4);
    }

    #[test]
    fn line3d_checks_horizontality() {
        let cfg = builtin_experiment(4).unwrap();
        assert_eq!(cfg.junction, HPoint::new(0.0, 0.1, 0.0));
        assert_eq!(cfg.initial, InitialKind::Line3d);
        let t = cfg.initial_state().unwrap();
        assert_eq!(t.endpoint_z, [-0.05, 0.0, 0.025]);

        let s = HPoint::new(0.0, 0.1, 0.0);
        let p3 = HPoint::new(-0.5, 0.5 * 3f64.sqrt(), 0.05);
        let err = make_initial_line3d(s, [HPoint::new(1.0, 0.0, -0.05), HPoint::ORIGIN, p3], 10).unwrap_err();
        assert!(matches!(err, Error::NotHorizontal(_)));
        let err = make_initial_planar_line(HPoint::ORIGIN, [PlanarPoint::ZERO; 3], 10).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn bezier_presets_reproduce_quoted_heights() {
        let quoted: [(usize, [f64; 3]); 7] = [
            (5, [0.0, -0.167, 0.167]),
            (6, [0.0, -2.74, 2.74]),
            (7, [0.0, -0.07, 0.07]),
            (8, [0.0, -0.13, 0.02]),
            (9, [0.0, 1.95, 0.02]),
            (10, [0.0, 1.95, -1.04]),
            (11, [0.0, 1.95, -0.39]),
        ];
        for (id, z) in quoted {
            let t = builtin_experiment(id).unwrap().initial_state().unwrap();
            for (a, (got, want)) in t.endpoint_z.iter().zip(z).enumerate() {
                assert!((got - want).abs() <= 1e-3, "experiment {id} curve {}", a + 1);
            }
            assert!(junction_angle_defect(&t).unwrap() <= 1e-8);
        }
        let t = builtin_experiment(12).unwrap().initial_state().unwrap();
        assert!((t.endpoint_z[1] - 0.07).abs() <= 1e-3);
        assert!((t.endpoint_z[2] + 0.07).abs() <= 1e-3);
    }

    #[test]
    fn calibration_recovers_frozen_handles() {
        let s3 = 3f64.sqrt();
        let p = PlanarPoint::new(1.0, -3.0);
        let d = calibrate_handle(HPoint::ORIGIN, p, 100, -0.167, 0.01, 10.0, |d| BezierArm {
            direction: PlanarPoint::new(0.5, -0.5 * s3),
            d1: d,
            end_direction: unit(-1.0, 3.0),
            d2: 10f64.sqrt() / 3.0,
        })
        .unwrap();
        assert_abs_diff_eq!(d, handles::EXP5, epsilon = 1e-9);
    }

    #[test]
    fn bezier_rejects_bad_directions() {
        let arms = [
            BezierArm::straight(PlanarPoint::ZERO, PlanarPoint::new(-1.0, 0.0)),
            BezierArm::straight(PlanarPoint::ZERO, PlanarPoint::new(1.0, -3.0)),
            BezierArm::straight(PlanarPoint::ZERO, PlanarPoint::new(1.0, 3.0)),
        ];
        let p = [
            PlanarPoint::new(-1.0, 0.0),
            PlanarPoint::new(1.0, -3.0),
            PlanarPoint::new(1.0, 3.0),
        ];
        assert!(make_initial_bezier_compatible(HPoint::ORIGIN, p, &arms, 10).is_err());
    }

    #[test]
    fn circle_preset_closes_on_itself() {
        let t = builtin_experiment(13).unwrap().initial_state().unwrap();
        assert_eq!(t.endpoints()[0], PlanarPoint::ZERO);
        assert_abs_diff_eq!(t.endpoint_z[0], -PI, epsilon = 1e-12);
        // Centre of the loop is (-1, 0).
        let far = t.node(0, 50);
        assert!(far.x < -1.9);
    }

    #[test]
    fn family_presets() {
        let cfg = builtin_experiment(15).unwrap();
        assert_eq!(cfg.initial, InitialKind::ExampleFamily { b: [0.0; 3] });
        assert_eq!(cfg.endpoints[2].planar(), PlanarPoint::new(-0.5, 0.5 * 3f64.sqrt()));
        let t = cfg.initial_state().unwrap();
        for a in 0..3 {
            assert!(t.endpoint_z[a].abs() < 1e-3);
        }
    }

    #[test]
    fn config_validation_names_field() {
        let mut cfg = builtin_experiment(2).unwrap();
        cfg.dt = "-1".into();
        assert!(matches!(cfg.validate(), Err(Error::Config { ref path, .. }) if path == "dt"));
        let mut cfg = builtin_experiment(2).unwrap();
        cfg.segments = 1;
        assert!(matches!(cfg.validate(), Err(Error::Config { ref path, .. }) if path == "J"));
        let mut cfg = builtin_experiment(4).unwrap();
        cfg.endpoints[0].z = None;
        assert!(matches!(cfg.initial_state(), Err(Error::Config { ref path, .. }) if path == "endpoints[0].z"));
    }
}
