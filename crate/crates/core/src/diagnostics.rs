//! Stationarity and constraint instrumentation for triod states.

use crate::curves::{mass_lumped_integral, TriodState};
use crate::error::{Error, Result};
use crate::flow::{FlowOutcome, StepSolution};
use crate::heis::{horizontal_lift, HPolyline, LiftAnchor, PlanarPoint};

/// `|sum_alpha tau_alpha|` for the unit tangents of the first segments,
/// pointing away from the junction.
pub fn junction_angle_defect(t: &TriodState) -> Result<f64> {
    let mut sum = PlanarPoint::ZERO;
    for a in 0..3 {
        let d = t.node(a, 1) - t.junction();
        let l = d.norm();
        if !(l > 0.0) {
            return Err(Error::Regularity {
                curve: a + 1,
                segment: 0,
                length: l,
            });
        }
        sum += (1.0 / l) * d;
    }
    Ok(sum.norm())
}

/// Per-curve statistics of the nodal curvature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureStats {
    pub means: [f64; 3],
    pub stddevs: [f64; 3],
    pub sum: f64,
}

fn lumped_masses(nodes: &[PlanarPoint]) -> Vec<f64> {
    let mut m = vec![0.0; nodes.len()];
    for j in 0..nodes.len() - 1 {
        let l = nodes[j].distance(nodes[j + 1]);
        m[j] += 0.5 * l;
        m[j + 1] += 0.5 * l;
    }
    m
}

/// Mass-weighted mean and standard deviation of the solved curvatures,
/// with weights taken from the state `t` the step started from.
pub fn curvature_sum_test(sol: &StepSolution, t: &TriodState) -> CurvatureStats {
    let mut means = [0.0; 3];
    let mut stddevs = [0.0; 3];
    for a in 0..3 {
        let m = lumped_masses(&t.curve_nodes(a));
        let total: f64 = m.iter().sum();
        let mean = m.iter().zip(&sol.kappa[a]).map(|(w, k)| w * k).sum::<f64>() / total;
        let var = m
            .iter()
            .zip(&sol.kappa[a])
            .map(|(w, k)| w * (k - mean) * (k - mean))
            .sum::<f64>()
            / total;
        means[a] = mean;
        stddevs[a] = var.sqrt();
    }
    CurvatureStats {
        means,
        stddevs,
        sum: means.iter().sum(),
    }
}

/// Converts `(mu_1, mu_2, mu_3)` to `(lambda_1, lambda_2)` through
/// `mu_1 = -lambda_1`, `mu_2 = lambda_1 - lambda_2`, `mu_3 = lambda_2`.
pub fn multiplier_to_lambda(mu: [f64; 3]) -> Result<(f64, f64)> {
    let scale = 1.0 + mu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sum = mu.iter().sum::<f64>();
    if sum.abs() > 1e-10 * scale {
        return Err(Error::MultiplierSum(sum));
    }
    let (l1, l2) = (-mu[0], mu[2]);
    let mismatch = (mu[1] - (l1 - l2)).abs();
    if mismatch > 1e-10 * scale {
        return Err(Error::MultiplierSum(mismatch));
    }
    Ok((l1, l2))
}

pub fn lambda_to_multiplier(lambda: (f64, f64)) -> [f64; 3] {
    [-lambda.0, lambda.0 - lambda.1, lambda.1]
}

/// Solves the 2x2 multiplier system with the discrete lengths and lumped
/// curvature integrals `I_alpha` of `t` and `kappa`:
///
/// ```text
/// (L1 + L2) l1 - L2 l2        = I2 - I1
/// -L2 l1 + (L2 + L3) l2       = I3 - I2
/// ```
pub fn lambda_from_system(t: &TriodState, kappa: &[Vec<f64>; 3]) -> Result<(f64, f64)> {
    let mut len = [0.0; 3];
    let mut ik = [0.0; 3];
    for a in 0..3 {
        let m = lumped_masses(&t.curve_nodes(a));
        if m.len() != kappa[a].len() {
            return Err(Error::SizeMismatch {
                expected: m.len(),
                got: kappa[a].len(),
            });
        }
        len[a] = m.iter().sum();
        ik[a] = m.iter().zip(&kappa[a]).map(|(w, k)| w * k).sum();
    }
    let (a11, a12, a22) = (len[0] + len[1], -len[1], len[1] + len[2]);
    let det = a11 * a22 - a12 * a12;
    if !(det.abs() > 0.0) {
        return Err(Error::Degenerate("multiplier system is singular".into()));
    }
    let (b1, b2) = (ik[1] - ik[0], ik[2] - ik[1]);
    Ok(((b1 * a22 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det))
}

/// Lifts each projected curve backward from its fixed endpoint and returns
/// the curves with the spread of their junction heights.
pub fn lift_triod(t: &TriodState) -> ([HPolyline; 3], f64) {
    let lifts = [0, 1, 2].map(|a| horizontal_lift(&t.curve(a), LiftAnchor::AtEnd(t.endpoint_z[a])));
    let z = [0, 1, 2].map(|a| lifts[a].first().z);
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = z.iter().cloned().fold(f64::INFINITY, f64::min);
    (lifts, max - min)
}

/// Everything the stationarity checks look at, for one solved step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarityReport {
    pub angle_defect: f64,
    pub curvature_means: [f64; 3],
    pub curvature_stddevs: [f64; 3],
    pub curvature_sum: f64,
    pub lambda: (f64, f64),
    pub junction_z_spread: f64,
}

/// Builds the report from the state a step started at and its solution.
pub fn stationarity_report(t: &TriodState, sol: &StepSolution) -> Result<StationarityReport> {
    let stats = curvature_sum_test(sol, t);
    Ok(StationarityReport {
        angle_defect: junction_angle_defect(t)?,
        curvature_means: stats.means,
        curvature_stddevs: stats.stddevs,
        curvature_sum: stats.sum,
        lambda: multiplier_to_lambda(sol.mu)?,
        junction_z_spread: lift_triod(t).1,
    })
}

/// One row of the energy table. The row at the initial time carries no
/// multipliers or dissipation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRow {
    pub t: f64,
    pub total: f64,
    pub lengths: [f64; 3],
    pub mu: Option<[f64; 3]>,
    pub dissipation: Option<f64>,
    pub angle_defect: f64,
    pub z_spread: f64,
}

/// Energy table of a run, starting with the initial state. Fails if the
/// total energy increases anywhere beyond round-off.
pub fn energy_series(outcome: &FlowOutcome) -> Result<Vec<EnergyRow>> {
    let t0 = &outcome.initial_state;
    let lengths = t0.lengths();
    let mut rows = Vec::with_capacity(outcome.series.len() + 1);
    rows.push(EnergyRow {
        t: t0.time,
        total: lengths.iter().sum(),
        lengths,
        mu: None,
        dissipation: None,
        angle_defect: junction_angle_defect(t0).unwrap_or(f64::NAN),
        z_spread: lift_triod(t0).1,
    });
    for e in &outcome.series {
        let total: f64 = e.lengths.iter().sum();
        let prev = rows.last().map(|r: &EnergyRow| r.total).unwrap_or(total);
        if total > prev + 1e-10 * (1.0 + prev) {
            return Err(Error::Stability {
                before: prev,
                after: total,
                dissipation: e.report.dissipation,
            });
        }
        rows.push(EnergyRow {
            t: e.t,
            total,
            lengths: e.lengths,
            mu: Some(e.mu),
            dissipation: Some(e.report.dissipation),
            angle_defect: e.angle_defect,
            z_spread: e.z_spread,
        });
    }
    Ok(rows)
}

/// Lumped integral `int^h kappa |c_u| du` of a nodal curvature on one curve,
/// through the generic quadrature rule.
pub fn lumped_curvature_integral(nodes: &[PlanarPoint], kappa: &[f64]) -> Result<f64> {
    let n = nodes.len() - 1;
    let speed: Vec<f64> = nodes.windows(2).map(|w| w[0].distance(w[1]) * n as f64).collect();
    let mut left = vec![0.0; n + 1];
    let mut right = vec![0.0; n + 1];
    if kappa.len() != n + 1 {
        return Err(Error::SizeMismatch {
            expected: n + 1,
            got: kappa.len(),
        });
    }
    for j in 0..n {
        right[j] = kappa[j] * speed[j];
        left[j + 1] = kappa[j + 1] * speed[j];
    }
    mass_lumped_integral(&left, &right)
}
