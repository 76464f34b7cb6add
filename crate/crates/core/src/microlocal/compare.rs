//! Containment of scan-detected singular directions in the geometric
//! singular pair cone, with the Killing-frequency constraint.

use alloc::string::String;
use alloc::vec::Vec;

use crate::geometry::SpacetimeModel;

use super::{DecayReport, MicrolocalError, Verdict};

#[derive(Clone, Debug)]
pub struct ContainmentRow {
    pub direction: [f64; 4],
    /// Angle to the nearest cone direction (π when the cone is empty).
    pub angle_to_cone: f64,
    /// `|ξ(∂^τ) + ξ'(∂^τ)|` on the unit direction.
    pub killing_residual: f64,
    pub fitted_order: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct ContainmentReport {
    /// One row per singular direction of the scan.
    pub rows: Vec<ContainmentRow>,
    /// Cone directions at the base pair.
    pub cone: Vec<[f64; 4]>,
    /// Angular tolerance actually applied (`angle_mult · Δθ`).
    pub angle_tolerance: f64,
    pub killing_tolerance: f64,
    pub pass: bool,
}

/// Check every singular direction of a pair scan against the singular pair
/// cone at `(q, q')`: angular containment within `angle_mult · Δθ` and the
/// Killing constraint `|ξ₀ + ξ'₀| ≤ killing_tol`. Counterexamples are
/// retained in the report rows.
pub fn wf_to_r_compare(
    report: &DecayReport,
    model: &SpacetimeModel,
    q: [f64; 2],
    q_prime: [f64; 2],
    angle_mult: f64,
    killing_tol: f64,
) -> Result<ContainmentReport, MicrolocalError> {
    if report.dim != 4 {
        return Err(MicrolocalError::GridMismatch(String::from(
            "containment check needs a pair (4-dimensional) scan report",
        )));
    }
    let qq = [q[0], q[1], 0.0, 0.0];
    let qp = [q_prime[0], q_prime[1], 0.0, 0.0];
    let cone = crate::geometry::r_cone_directions(model, &qq, &qp);
    let angle_tolerance = angle_mult * report.delta_theta;
    let mut rows = Vec::new();
    let mut pass = true;
    for r in report.rows.iter().filter(|r| r.verdict == Verdict::Singular) {
        let mut best = core::f64::consts::PI;
        for c in &cone {
            let mut dot = 0.0;
            for i in 0..4 {
                dot += c[i] * r.direction[i];
            }
            let ang = libm::acos(dot.clamp(-1.0, 1.0));
            if ang < best {
                best = ang;
            }
        }
        let killing_residual = libm::fabs(r.direction[0] + r.direction[2]);
        let ok = best <= angle_tolerance && killing_residual <= killing_tol;
        pass &= ok;
        rows.push(ContainmentRow {
            direction: r.direction,
            angle_to_cone: best,
            killing_residual,
            fitted_order: r.fit.order,
            pass: ok,
        });
    }
    Ok(ContainmentReport {
        rows,
        cone,
        angle_tolerance,
        killing_tolerance: killing_tol,
        pass,
    })
}
