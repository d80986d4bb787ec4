//! Piecewise-affine curves on the uniform grid, the lumped quadrature rule
//! and the triod container.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heis::{PlanarPoint, PlanarPolyline};

/// Lumped quadrature `(h/2) sum_j [chi(u_j^-) + chi(u_{j-1}^+)]` of a
/// piecewise-continuous function given by its one-sided nodal limits.
///
/// `left[j]` is the limit from the left at `u_j` (unused for `j = 0`),
/// `right[j]` the limit from the right (unused for `j = J`).
pub fn mass_lumped_integral(left: &[f64], right: &[f64]) -> Result<f64> {
    if left.len() != right.len() {
        return Err(Error::SizeMismatch {
            expected: left.len(),
            got: right.len(),
        });
    }
    if left.len() < 2 {
        return Err(Error::SizeMismatch {
            expected: 2,
            got: left.len(),
        });
    }
    let segments = left.len() - 1;
    let h = 1.0 / segments as f64;
    let sum: f64 = (1..=segments).map(|j| left[j] + right[j - 1]).sum();
    Ok(0.5 * h * sum)
}

pub fn discrete_length(curve: &PlanarPolyline) -> f64 {
    curve.nodes().windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Unit tangent, unit normal and length of one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentFrame {
    pub tangent: PlanarPoint,
    /// `tangent` rotated by +90 degrees.
    pub normal: PlanarPoint,
    pub length: f64,
}

pub fn segment_frames(curve: &PlanarPolyline) -> Result<Vec<SegmentFrame>> {
    curve
        .nodes()
        .windows(2)
        .enumerate()
        .map(|(j, w)| {
            let d = w[1] - w[0];
            let length = d.norm();
            if !(length > 0.0) {
                return Err(Error::Regularity {
                    curve: 0,
                    segment: j,
                    length,
                });
            }
            let tangent = (1.0 / length) * d;
            Ok(SegmentFrame {
                tangent,
                normal: tangent.perp(),
                length,
            })
        })
        .collect()
}

/// Three planar curves `c_1, c_2, c_3` sharing their first node (the
/// projected junction) with the last node of `c_alpha` pinned at
/// `endpoints[alpha]`.
///
/// The junction and the endpoints are stored once, so coincidence at `u = 0`
/// and the pinned ends at `u = 1` hold by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriodState {
    junction: PlanarPoint,
    interior: [Vec<PlanarPoint>; 3],
    endpoints: [PlanarPoint; 3],
    /// Heights `P_alpha^3` of the fixed endpoints, used for lifting.
    pub endpoint_z: [f64; 3],
    pub time: f64,
}

/// One failed triod invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Node 0 of `curve` differs from node 0 of curve 1.
    JunctionMismatch {
        curve: usize,
    },
    /// The last node of `curve` is not its prescribed endpoint.
    EndpointMismatch {
        curve: usize,
    },
    /// Curves carry different segment counts.
    UnequalSegments {
        counts: [usize; 3],
    },
    /// Fewer than two segments: no interior node to move.
    TooFewSegments {
        curve: usize,
        segments: usize,
    },
    Irregular {
        curve: usize,
        segment: usize,
        length: f64,
    },
    NonFinite {
        curve: usize,
    },
}

/// Outcome of [`validate_triod`]; empty when every invariant holds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the triod invariants on three raw curves; curve indices in the
/// report are 1-based.
pub fn validate_triod(curves: &[PlanarPolyline; 3], endpoints: &[PlanarPoint; 3]) -> ValidationReport {
    let mut violations = Vec::new();
    let counts = [curves[0].segments(), curves[1].segments(), curves[2].segments()];
    if counts.iter().any(|&c| c != counts[0]) {
        violations.push(Violation::UnequalSegments { counts });
    }
    let junction = curves[0].first();
    for (a, curve) in curves.iter().enumerate() {
        let id = a + 1;
        if curve.nodes().iter().any(|p| !p.is_finite()) {
            violations.push(Violation::NonFinite { curve: id });
            continue;
        }
        if curve.segments() < 2 {
            violations.push(Violation::TooFewSegments {
                curve: id,
                segments: curve.segments(),
            });
        }
        if curve.first() != junction {
            violations.push(Violation::JunctionMismatch { curve: id });
        }
        if curve.last() != endpoints[a] {
            violations.push(Violation::EndpointMismatch { curve: id });
        }
        for (segment, length) in curve.segment_lengths().into_iter().enumerate() {
            if !(length > 0.0) {
                violations.push(Violation::Irregular {
                    curve: id,
                    segment,
                    length,
                });
            }
        }
    }
    ValidationReport { violations }
}

impl TriodState {
    /// Builds a triod from three curves starting at a common junction; the
    /// last node of each curve becomes its pinned endpoint.
    pub fn new(curves: [PlanarPolyline; 3], endpoint_z: [f64; 3], time: f64) -> Result<Self> {
        let endpoints = [curves[0].last(), curves[1].last(), curves[2].last()];
        let report = validate_triod(&curves, &endpoints);
        if let Some(v) = report.violations.first() {
            return Err(match *v {
                Violation::Irregular { curve, segment, length } => Error::Regularity { curve, segment, length },
                ref other => Error::Invalid(format!("invalid triod: {other:?}")),
            });
        }
        let junction = curves[0].first();
        let interior = curves.map(|c| {
            let n = c.nodes().len();
            c.nodes()[1..n - 1].to_vec()
        });
        Ok(Self {
            junction,
            interior,
            endpoints,
            endpoint_z,
            time,
        })
    }

    pub fn junction(&self) -> PlanarPoint {
        self.junction
    }

    pub fn endpoints(&self) -> &[PlanarPoint; 3] {
        &self.endpoints
    }

    /// Segment count `J`, shared by all three curves.
    pub fn segments(&self) -> usize {
        self.interior[0].len() + 1
    }

    /// Node `j` of curve `alpha` (0-based curve index).
    pub fn node(&self, alpha: usize, j: usize) -> PlanarPoint {
        let n = self.segments();
        if j == 0 {
            self.junction
        } else if j == n {
            self.endpoints[alpha]
        } else {
            self.interior[alpha][j - 1]
        }
    }

    /// Node list of curve `alpha` (0-based).
    pub fn curve_nodes(&self, alpha: usize) -> Vec<PlanarPoint> {
        let mut nodes = Vec::with_capacity(self.segments() + 1);
        nodes.push(self.junction);
        nodes.extend_from_slice(&self.interior[alpha]);
        nodes.push(self.endpoints[alpha]);
        nodes
    }

    pub fn curve(&self, alpha: usize) -> PlanarPolyline {
        PlanarPolyline::new(self.curve_nodes(alpha)).expect("triod curves are finite with >= 3 nodes")
    }

    pub fn curves(&self) -> [PlanarPolyline; 3] {
        [self.curve(0), self.curve(1), self.curve(2)]
    }

    pub fn lengths(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| discrete_length(&self.curve(a)))
    }

    /// Total energy `L_E(c) = sum_alpha L_E(c_alpha)`.
    pub fn energy(&self) -> f64 {
        self.lengths().iter().sum()
    }

    /// Checks regularity; the other invariants hold by construction.
    pub fn validate(&self) -> ValidationReport {
        validate_triod(&self.curves(), &self.endpoints)
    }

    /// Returns the state with the junction moved by `junction_shift` and the
    /// interior nodes of curve `alpha` moved by `shifts[alpha][j - 1]`.
    pub(crate) fn displaced(&self, junction_shift: PlanarPoint, shifts: &[Vec<PlanarPoint>; 3], dt: f64) -> Self {
        let mut next = self.clone();
        next.junction += junction_shift;
        for (curve, shift) in next.interior.iter_mut().zip(shifts) {
            for (p, d) in curve.iter_mut().zip(shift) {
                *p += *d;
            }
        }
        next.time = self.time + dt;
        next
    }

    /// Applies a planar map to every node (junction, interior and endpoints).
    pub fn map_planar(&self, f: impl Fn(PlanarPoint) -> PlanarPoint) -> Self {
        Self {
            junction: f(self.junction),
            interior: self.interior.clone().map(|v| v.into_iter().map(&f).collect()),
            endpoints: self.endpoints.map(&f),
            endpoint_z: self.endpoint_z,
            time: self.time,
        }
    }
}
