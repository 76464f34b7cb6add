//! Stationary flat-chart Lorentzian geometry.
//!
//! Signature convention `(+,-,…,-)`; the Killing time direction is the first
//! chart coordinate on every supported model. Covectors pair with chart
//! vectors through the plain component sum `ξ(v) = Σ ξ_μ v^μ`; the metric
//! enters only when raising indices or testing nullity.
//!
//! Supported models are flat-chart stationary spacetimes (Minkowski 1+1 and
//! 1+3, and the spatially periodic cylinder). Geodesics are integrated with
//! fixed-step RK4 in Hamiltonian form; nullity drift is monitored rather than
//! corrected, and for these charts it stays at roundoff.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::num::{bisect, golden_min};

pub const MAX_DIM: usize = 4;

/// Relative nullity tolerance: `|g^{μν}ξ_μξ_ν| ≤ EPS_NULL·|ξ|²`.
pub const EPS_NULL: f64 = 1e-9;
/// Relative covector-match tolerance used by [`related`].
pub const RELATED_TOL: f64 = 1e-7;
/// Default affine step for the RK4 integrator.
pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub enum GeometryError {
    ZeroCovector,
    NotNull { null_form: f64 },
    NonPositiveStep,
    EmptyRange,
    RangeExceeded { t0: f64, reached: (f64, f64) },
    BadCylinder { circumference: f64 },
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::ZeroCovector => write!(f, "zero covector excluded from T*M \\ {{0}}"),
            GeometryError::NotNull { null_form } => {
                write!(f, "covector is not null (g^{{μν}}ξ_μξ_ν = {null_form:e})")
            }
            GeometryError::NonPositiveStep => write!(f, "integration step must be positive"),
            GeometryError::EmptyRange => write!(f, "affine range is empty"),
            GeometryError::RangeExceeded { t0, reached } => write!(
                f,
                "Cauchy time {t0} outside integrated time range [{}, {}]; extend the affine range",
                reached.0, reached.1
            ),
            GeometryError::BadCylinder { circumference } => {
                write!(f, "cylinder circumference must be positive, got {circumference}")
            }
        }
    }
}

/// Stationary spacetime models on flat charts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpacetimeModel {
    Minkowski1p1,
    Minkowski1p3,
    /// `ℝ × S¹` with flat metric; the spatial coordinate is periodic with the
    /// given circumference.
    CylinderRxS1 { circumference: f64 },
}

impl SpacetimeModel {
    pub fn cylinder(circumference: f64) -> Result<Self, GeometryError> {
        if circumference > 0.0 && circumference.is_finite() {
            Ok(SpacetimeModel::CylinderRxS1 { circumference })
        } else {
            Err(GeometryError::BadCylinder { circumference })
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SpacetimeModel::Minkowski1p3 => 4,
            _ => 2,
        }
    }

    pub fn name(&self) -> String {
        match self {
            SpacetimeModel::Minkowski1p1 => String::from("minkowski-1p1"),
            SpacetimeModel::Minkowski1p3 => String::from("minkowski-1p3"),
            SpacetimeModel::CylinderRxS1 { circumference } => {
                format!("cylinder-L{circumference}")
            }
        }
    }

    /// Metric components `g_{μν}` at a chart point (diagonal for all
    /// supported models, independent of the point).
    pub fn metric(&self, _q: &[f64]) -> [[f64; MAX_DIM]; MAX_DIM] {
        let mut g = [[0.0; MAX_DIM]; MAX_DIM];
        g[0][0] = 1.0;
        for i in 1..self.dim() {
            g[i][i] = -1.0;
        }
        g
    }

    /// Inverse metric `g^{μν}` (equal to the metric on these charts).
    pub fn inverse_metric(&self, q: &[f64]) -> [[f64; MAX_DIM]; MAX_DIM] {
        self.metric(q)
    }

    /// Coordinate gradient `∂_μ g^{αβ}`; identically zero on flat charts.
    /// Kept in the integrator so a curved stationary chart can be plugged in
    /// without touching the transport code.
    pub fn inverse_metric_gradient(
        &self,
        _q: &[f64],
    ) -> [[[f64; MAX_DIM]; MAX_DIM]; MAX_DIM] {
        [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM]
    }

    /// Components of the Killing time direction `∂^τ`.
    pub fn killing_field(&self) -> [f64; MAX_DIM] {
        let mut v = [0.0; MAX_DIM];
        v[0] = 1.0;
        v
    }

    /// Wrap a chart point into the fundamental domain (cylinder only).
    pub fn canonical_point(&self, q: &[f64; MAX_DIM]) -> [f64; MAX_DIM] {
        let mut out = *q;
        if let SpacetimeModel::CylinderRxS1 { circumference } = self {
            out[1] = wrap_periodic(out[1], *circumference);
        }
        out
    }

    /// Squared chart distance between points, minimized over windings on the
    /// cylinder.
    pub fn chart_dist_sq(&self, a: &[f64; MAX_DIM], b: &[f64; MAX_DIM]) -> f64 {
        match self {
            SpacetimeModel::CylinderRxS1 { circumference } => {
                let dt = a[0] - b[0];
                let mut dx = wrap_periodic(a[1] - b[1], *circumference);
                if dx > 0.5 * circumference {
                    dx -= circumference;
                }
                dt * dt + dx * dx
            }
            _ => {
                let mut acc = 0.0;
                for i in 0..self.dim() {
                    let d = a[i] - b[i];
                    acc += d * d;
                }
                acc
            }
        }
    }

    /// Minimal spatial separation (over windings for the cylinder).
    pub fn spatial_distance(&self, a: &[f64; MAX_DIM], b: &[f64; MAX_DIM]) -> f64 {
        match self {
            SpacetimeModel::CylinderRxS1 { circumference } => {
                let mut dx = wrap_periodic(a[1] - b[1], *circumference);
                if dx > 0.5 * circumference {
                    dx = circumference - dx;
                }
                dx
            }
            _ => {
                let mut acc = 0.0;
                for i in 1..self.dim() {
                    let d = a[i] - b[i];
                    acc += d * d;
                }
                libm::sqrt(acc)
            }
        }
    }
}

/// Reduce `x` into `[0, period)`.
#[inline]
fn wrap_periodic(x: f64, period: f64) -> f64 {
    let y = x - period * libm::floor(x / period);
    if y >= period {
        y - period
    } else {
        y
    }
}

/// A base point with a covector attached, the atom of the null sets and of
/// the singular pair cone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovectorPoint {
    pub point: [f64; MAX_DIM],
    pub covector: [f64; MAX_DIM],
}

impl CovectorPoint {
    pub fn new_2d(q: [f64; 2], xi: [f64; 2]) -> Self {
        CovectorPoint {
            point: [q[0], q[1], 0.0, 0.0],
            covector: [xi[0], xi[1], 0.0, 0.0],
        }
    }

    pub fn covector_norm_sq(&self, dim: usize) -> f64 {
        self.covector[..dim].iter().map(|x| x * x).sum()
    }
}

/// Orientation classes of a covector: not null, or null with the raised
/// vector future-/past-pointing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NullClass {
    NotNull,
    /// `ξ(∂^τ) > 0`; the raised vector is future-pointing.
    FutureNull,
    /// `ξ(∂^τ) < 0`; the raised vector is past-pointing.
    PastNull,
}

/// `g^{μν}(q) ξ_μ ξ_ν`.
pub fn null_form(model: &SpacetimeModel, p: &CovectorPoint) -> f64 {
    let ginv = model.inverse_metric(&p.point);
    let d = model.dim();
    let mut acc = 0.0;
    for mu in 0..d {
        for nu in 0..d {
            acc += ginv[mu][nu] * p.covector[mu] * p.covector[nu];
        }
    }
    acc
}

/// Raised vector `ξ^μ = g^{μν} ξ_ν`.
pub fn raise(model: &SpacetimeModel, p: &CovectorPoint) -> [f64; MAX_DIM] {
    let ginv = model.inverse_metric(&p.point);
    let d = model.dim();
    let mut v = [0.0; MAX_DIM];
    for mu in 0..d {
        for nu in 0..d {
            v[mu] += ginv[mu][nu] * p.covector[nu];
        }
    }
    v
}

/// Classify a nonzero covector with relative nullity tolerance `eps_null`.
pub fn classify_null(
    model: &SpacetimeModel,
    p: &CovectorPoint,
    eps_null: f64,
) -> Result<NullClass, GeometryError> {
    let d = model.dim();
    let norm_sq = p.covector_norm_sq(d);
    if norm_sq == 0.0 {
        return Err(GeometryError::ZeroCovector);
    }
    let nf = null_form(model, p);
    if libm::fabs(nf) > eps_null * norm_sq {
        return Ok(NullClass::NotNull);
    }
    // ξ(∂^τ) is the first component for these charts. A null covector with
    // vanishing time component would be zero, so the sign is decisive.
    if p.covector[0] > 0.0 {
        Ok(NullClass::FutureNull)
    } else {
        Ok(NullClass::PastNull)
    }
}

/// A numerically integrated bicharacteristic strip: samples of the lightlike
/// geodesic with its co-parallel covector.
#[derive(Clone, Debug)]
pub struct Bicharacteristic {
    pub seed: CovectorPoint,
    /// `(affine parameter, state, null form at the sample)`.
    pub samples: Vec<(f64, CovectorPoint, f64)>,
    pub affine_range: (f64, f64),
    /// Max |null form| drift per unit affine length over the orbit,
    /// relative to |ξ|².
    pub max_drift_rate: f64,
}

impl Bicharacteristic {
    /// State at affine parameter `s` by linear interpolation between samples
    /// (exact for flat-chart orbits, which are straight lines).
    pub fn state_at(&self, s: f64) -> CovectorPoint {
        let samples = &self.samples;
        if s <= samples[0].0 {
            return extrapolate(&samples[0], &samples[1], s);
        }
        if s >= samples[samples.len() - 1].0 {
            return extrapolate(&samples[samples.len() - 2], &samples[samples.len() - 1], s);
        }
        let mut lo = 0usize;
        let mut hi = samples.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if samples[mid].0 <= s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        extrapolate(&samples[lo], &samples[hi], s)
    }
}

fn extrapolate(a: &(f64, CovectorPoint, f64), b: &(f64, CovectorPoint, f64), s: f64) -> CovectorPoint {
    let u = if b.0 == a.0 { 0.0 } else { (s - a.0) / (b.0 - a.0) };
    let mut out = a.1;
    for i in 0..MAX_DIM {
        out.point[i] = a.1.point[i] + u * (b.1.point[i] - a.1.point[i]);
        out.covector[i] = a.1.covector[i] + u * (b.1.covector[i] - a.1.covector[i]);
    }
    out
}

/// Integrate the bicharacteristic through a null seed over the affine range
/// with fixed-step RK4 in Hamiltonian form:
/// `dq^μ/ds = g^{μν}ξ_ν`, `dξ_μ/ds = -½ ∂_μ g^{αβ} ξ_α ξ_β`.
///
/// Cylinder positions are kept on the covering space; wrap with
/// [`SpacetimeModel::canonical_point`] when comparing chart points.
pub fn integrate_bicharacteristic(
    model: &SpacetimeModel,
    seed: &CovectorPoint,
    affine_range: (f64, f64),
    step: f64,
) -> Result<Bicharacteristic, GeometryError> {
    if step <= 0.0 {
        return Err(GeometryError::NonPositiveStep);
    }
    if affine_range.1 <= affine_range.0 {
        return Err(GeometryError::EmptyRange);
    }
    match classify_null(model, seed, EPS_NULL)? {
        NullClass::NotNull => {
            return Err(GeometryError::NotNull {
                null_form: null_form(model, seed),
            })
        }
        _ => {}
    }
    let d = model.dim();
    let rhs = |state: &CovectorPoint| -> ([f64; MAX_DIM], [f64; MAX_DIM]) {
        let ginv = model.inverse_metric(&state.point);
        let grad = model.inverse_metric_gradient(&state.point);
        let mut dq = [0.0; MAX_DIM];
        let mut dxi = [0.0; MAX_DIM];
        for mu in 0..d {
            for nu in 0..d {
                dq[mu] += ginv[mu][nu] * state.covector[nu];
            }
        }
        for mu in 0..d {
            let mut acc = 0.0;
            for al in 0..d {
                for be in 0..d {
                    acc += grad[mu][al][be] * state.covector[al] * state.covector[be];
                }
            }
            dxi[mu] = -0.5 * acc;
        }
        (dq, dxi)
    };

    // March from s=0 outwards so the seed itself is a sample; the two legs
    // are concatenated in affine order.
    let march = |sign: f64, extent: f64| -> Vec<(f64, CovectorPoint, f64)> {
        let mut out = Vec::new();
        let mut state = *seed;
        let mut s = 0.0;
        let n = (libm::ceil(extent / step) as usize).max(1);
        let h = sign * extent / n as f64;
        for _ in 0..n {
            let (k1q, k1x) = rhs(&state);
            let mid1 = advance(&state, &k1q, &k1x, 0.5 * h);
            let (k2q, k2x) = rhs(&mid1);
            let mid2 = advance(&state, &k2q, &k2x, 0.5 * h);
            let (k3q, k3x) = rhs(&mid2);
            let end = advance(&state, &k3q, &k3x, h);
            let (k4q, k4x) = rhs(&end);
            for i in 0..d {
                state.point[i] += h / 6.0
                    * (k1q[i] + 2.0 * k2q[i] + 2.0 * k3q[i] + k4q[i]);
                state.covector[i] += h / 6.0
                    * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            }
            s += h;
            out.push((s, state, null_form(model, &state)));
        }
        out
    };

    let nf0 = null_form(model, seed);
    let mut samples: Vec<(f64, CovectorPoint, f64)> = Vec::new();
    if affine_range.0 < 0.0 {
        let mut back = march(-1.0, -affine_range.0);
        back.reverse();
        samples.extend(back);
    }
    samples.push((0.0, *seed, nf0));
    if affine_range.1 > 0.0 {
        samples.extend(march(1.0, affine_range.1));
    }

    let norm_sq = seed.covector_norm_sq(d).max(1e-300);
    let mut max_drift_rate = 0.0f64;
    for (s, _, nf) in &samples {
        if *s != 0.0 {
            let rate = libm::fabs(nf - nf0) / libm::fabs(*s) / norm_sq;
            if rate > max_drift_rate {
                max_drift_rate = rate;
            }
        }
    }

    Ok(Bicharacteristic {
        seed: *seed,
        samples,
        affine_range,
        max_drift_rate,
    })
}

fn advance(
    state: &CovectorPoint,
    dq: &[f64; MAX_DIM],
    dxi: &[f64; MAX_DIM],
    h: f64,
) -> CovectorPoint {
    let mut out = *state;
    for i in 0..MAX_DIM {
        out.point[i] += h * dq[i];
        out.covector[i] += h * dxi[i];
    }
    out
}

/// Whether the bicharacteristic through `p` reaches `p2` (base point within
/// chart tolerance, transported covector within relative tolerance `tol`).
///
/// The affine location is found by minimizing the chart distance along the
/// integrated orbit; on the cylinder every winding reachable within the
/// integrated range is tried.
pub fn related(
    model: &SpacetimeModel,
    p: &CovectorPoint,
    p2: &CovectorPoint,
    tol: f64,
) -> Result<bool, GeometryError> {
    for cp in [p, p2] {
        if classify_null(model, cp, EPS_NULL)? == NullClass::NotNull {
            return Err(GeometryError::NotNull {
                null_form: null_form(model, cp),
            });
        }
    }
    let d = model.dim();
    let scale = libm::sqrt(p.covector_norm_sq(d));

    // Same base point: the relation degenerates to covector equality.
    if model.chart_dist_sq(&p.point, &p2.point) <= (tol * scale) * (tol * scale) {
        return Ok(covectors_match(p, p2, d, tol));
    }

    // Affine extent sufficient to reach the target time coordinate, plus
    // margin; ξ_0 ≠ 0 for any nonzero null covector on these charts.
    let v = raise(model, p);
    let dt = p2.point[0] - p.point[0];
    let s_guess = dt / v[0];
    let extent = libm::fabs(s_guess) + 2.0;
    let orbit = integrate_bicharacteristic(model, p, (-extent, extent), DEFAULT_STEP)?;

    let windings: i64 = match model {
        SpacetimeModel::CylinderRxS1 { circumference } => {
            libm::ceil((2.0 * extent * scale) / circumference) as i64 + 1
        }
        _ => 0,
    };

    let tol_sq = (tol * scale.max(1.0)) * (tol * scale.max(1.0));
    for w in -windings..=windings {
        let mut target = p2.point;
        if let SpacetimeModel::CylinderRxS1 { circumference } = model {
            target[1] = p2.point[1] + w as f64 * circumference;
        }
        let dist_sq = |s: f64| -> f64 {
            let st = orbit.state_at(s);
            let mut acc = 0.0;
            for i in 0..d {
                let dd = st.point[i] - target[i];
                acc += dd * dd;
            }
            acc
        };
        let s_star = golden_min(-extent, extent, 1e-12 * extent.max(1.0), dist_sq);
        if dist_sq(s_star) <= tol_sq {
            let st = orbit.state_at(s_star);
            if covectors_match(&st, p2, d, tol) {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

fn covectors_match(a: &CovectorPoint, b: &CovectorPoint, d: usize, tol: f64) -> bool {
    let scale = libm::sqrt(a.covector_norm_sq(d)).max(1e-300);
    let mut acc = 0.0;
    for i in 0..d {
        let dd = a.covector[i] - b.covector[i];
        acc += dd * dd;
    }
    libm::sqrt(acc) <= tol * scale
}

/// Membership in the singular pair cone of stationary passive states: the
/// first covector past-null, the second future-null, and the first related
/// to the sign-flipped second along a lightlike geodesic. Malformed input
/// (zero or non-null covectors) yields `false` rather than an error.
pub fn in_r(model: &SpacetimeModel, p: &CovectorPoint, p2: &CovectorPoint) -> bool {
    let c1 = match classify_null(model, p, EPS_NULL) {
        Ok(c) => c,
        Err(_) => return false,
    };
    let c2 = match classify_null(model, p2, EPS_NULL) {
        Ok(c) => c,
        Err(_) => return false,
    };
    if c1 != NullClass::PastNull || c2 != NullClass::FutureNull {
        return false;
    }
    let mut flipped = *p2;
    for x in flipped.covector.iter_mut() {
        *x = -*x;
    }
    related(model, p, &flipped, RELATED_TOL).unwrap_or(false)
}

/// Strict causal separation: neither point lies in the closed causal
/// future/past of the other. Analytic light-cone test; the cylinder
/// minimizes the spatial separation over windings.
pub fn causally_separated(model: &SpacetimeModel, q: &[f64; MAX_DIM], q2: &[f64; MAX_DIM]) -> bool {
    let dt = libm::fabs(q[0] - q2[0]);
    let dx = model.spatial_distance(q, q2);
    dt < dx
}

/// The unique affine parameter where the orbit crosses the Cauchy surface
/// `{time = t0}`, with the transported covector there (bisection on the
/// monotone time coordinate). Cylinder output is wrapped to the chart.
pub fn cauchy_intersection(
    model: &SpacetimeModel,
    orbit: &Bicharacteristic,
    t0: f64,
) -> Result<(f64, CovectorPoint), GeometryError> {
    let first = orbit.samples.first().expect("orbit has samples");
    let last = orbit.samples.last().expect("orbit has samples");
    let (t_lo, t_hi) = (first.1.point[0], last.1.point[0]);
    let (t_min, t_max) = if t_lo <= t_hi { (t_lo, t_hi) } else { (t_hi, t_lo) };
    if t0 < t_min || t0 > t_max {
        return Err(GeometryError::RangeExceeded {
            t0,
            reached: (t_min, t_max),
        });
    }
    let s = bisect(first.0, last.0, 1e-13 * (last.0 - first.0).abs().max(1.0), |s| {
        orbit.state_at(s).point[0] - t0
    });
    let mut state = orbit.state_at(s);
    state.point = model.canonical_point(&state.point);
    Ok((s, state))
}

/// Unit pair directions `(ξ; ξ')` of the singular cone at a base pair on a
/// two-dimensional chart: one for each past-null ray at `q` whose geodesic
/// reaches `q'` (both rays when `q = q'`), each paired with `ξ' = -ξ`.
pub fn r_cone_directions(
    model: &SpacetimeModel,
    q: &[f64; MAX_DIM],
    q2: &[f64; MAX_DIM],
) -> Vec<[f64; 4]> {
    assert_eq!(model.dim(), 2, "pair cone directions implemented for 2-dim charts");
    let inv_sqrt2 = 1.0 / libm::sqrt(2.0);
    let rays = [[-inv_sqrt2, inv_sqrt2], [-inv_sqrt2, -inv_sqrt2]];
    let mut out = Vec::new();
    for xi in rays {
        let p = CovectorPoint::new_2d([q[0], q[1]], xi);
        let p2 = CovectorPoint::new_2d([q2[0], q2[1]], xi);
        let same = model.chart_dist_sq(q, q2) <= 1e-20;
        let hits = same || related(model, &p, &p2, RELATED_TOL).unwrap_or(false);
        if hits {
            // Joint normalization: (ξ, -ξ)/√2 is a unit vector in ℝ⁴.
            out.push([
                xi[0] * inv_sqrt2,
                xi[1] * inv_sqrt2,
                -xi[0] * inv_sqrt2,
                -xi[1] * inv_sqrt2,
            ]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mink() -> SpacetimeModel {
        SpacetimeModel::Minkowski1p1
    }

    fn cyl() -> SpacetimeModel {
        SpacetimeModel::cylinder(2.0 * core::f64::consts::PI).unwrap()
    }

    #[test]
    fn null_form_examples() {
        let m = mink();
        assert_eq!(
            null_form(&m, &CovectorPoint::new_2d([0.0, 0.0], [1.0, 1.0])),
            0.0
        );
        assert_eq!(
            null_form(&m, &CovectorPoint::new_2d([0.0, 0.0], [1.0, 0.0])),
            1.0
        );
        let c = cyl();
        assert_eq!(
            null_form(&c, &CovectorPoint::new_2d([0.3, 1.2], [2.0, 2.0])),
            0.0
        );
    }

    #[test]
    fn classify_null_examples() {
        let m = mink();
        let f = classify_null(&m, &CovectorPoint::new_2d([0.0, 0.0], [1.0, 1.0]), EPS_NULL);
        assert_eq!(f.unwrap(), NullClass::FutureNull);
        let p = classify_null(&m, &CovectorPoint::new_2d([0.0, 0.0], [-1.0, 1.0]), EPS_NULL);
        assert_eq!(p.unwrap(), NullClass::PastNull);
        let n = classify_null(&m, &CovectorPoint::new_2d([0.0, 0.0], [1.0, 0.0]), EPS_NULL);
        assert_eq!(n.unwrap(), NullClass::NotNull);
        let z = classify_null(&m, &CovectorPoint::new_2d([0.0, 0.0], [0.0, 0.0]), EPS_NULL);
        assert_eq!(z.unwrap_err(), GeometryError::ZeroCovector);
    }

    #[test]
    fn bicharacteristic_straight_line() {
        let m = mink();
        let seed = CovectorPoint::new_2d([0.0, 0.0], [-1.0, 1.0]);
        let orbit = integrate_bicharacteristic(&m, &seed, (0.0, 2.0), 1e-3).unwrap();
        // Raised vector of (-1, 1) is (-1, -1): q(s) = (-s, -s), ξ constant.
        let st = orbit.state_at(2.0);
        assert!((st.point[0] + 2.0).abs() < 1e-12);
        assert!((st.point[1] + 2.0).abs() < 1e-12);
        assert!((st.covector[0] + 1.0).abs() < 1e-14);
        assert!((st.covector[1] - 1.0).abs() < 1e-14);
        assert!(orbit.max_drift_rate <= 1e-9);

        let seed2 = CovectorPoint::new_2d([0.0, 0.0], [1.0, 1.0]);
        let orbit2 = integrate_bicharacteristic(&m, &seed2, (0.0, 1.0), 1e-3).unwrap();
        let st2 = orbit2.state_at(1.0);
        assert!((st2.point[0] - 1.0).abs() < 1e-12 && (st2.point[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn bicharacteristic_rejects_bad_input() {
        let m = mink();
        let timelike = CovectorPoint::new_2d([0.0, 0.0], [1.0, 0.0]);
        assert!(matches!(
            integrate_bicharacteristic(&m, &timelike, (0.0, 1.0), 1e-3),
            Err(GeometryError::NotNull { .. })
        ));
        let seed = CovectorPoint::new_2d([0.0, 0.0], [1.0, 1.0]);
        assert!(matches!(
            integrate_bicharacteristic(&m, &seed, (0.0, 1.0), 0.0),
            Err(GeometryError::NonPositiveStep)
        ));
    }

    #[test]
    fn cylinder_orbit_wraps() {
        // Seed ((0,0),(1,-1)); raised vector (1, 1): after affine 2π the
        // spatial coordinate returns to 0 on the circle of circumference 2π.
        let c = cyl();
        let seed = CovectorPoint::new_2d([0.0, 0.0], [1.0, -1.0]);
        let orbit = integrate_bicharacteristic(&c, &seed, (0.0, 2.0 * core::f64::consts::PI), 1e-3)
            .unwrap();
        let st = orbit.state_at(2.0 * core::f64::consts::PI);
        let wrapped = c.canonical_point(&st.point);
        assert!((wrapped[0] - 2.0 * core::f64::consts::PI).abs() < 1e-10);
        assert!(wrapped[1].abs() < 1e-9 || (wrapped[1] - 2.0 * core::f64::consts::PI).abs() < 1e-9);
        assert!((st.covector[0] - 1.0).abs() < 1e-14 && (st.covector[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn related_examples() {
        let m = mink();
        let p = CovectorPoint::new_2d([0.0, 0.0], [-1.0, 1.0]);
        let on_orbit = CovectorPoint::new_2d([-1.0, -1.0], [-1.0, 1.0]);
        let off_orbit = CovectorPoint::new_2d([1.0, 0.0], [-1.0, 1.0]);
        assert!(related(&m, &p, &on_orbit, RELATED_TOL).unwrap());
        assert!(!related(&m, &p, &off_orbit, RELATED_TOL).unwrap());
        assert!(related(&m, &p, &p, RELATED_TOL).unwrap());
        // Same point, different covector on the same ray scale: not related.
        let scaled = CovectorPoint::new_2d([0.0, 0.0], [-2.0, 2.0]);
        assert!(!related(&m, &p, &scaled, RELATED_TOL).unwrap());
        // Non-null input is an error.
        let bad = CovectorPoint::new_2d([0.0, 0.0], [1.0, 0.0]);
        assert!(related(&m, &p, &bad, RELATED_TOL).is_err());
    }

    #[test]
    fn related_on_cylinder_through_winding() {
        let c = cyl();
        let l = 2.0 * core::f64::consts::PI;
        let p = CovectorPoint::new_2d([0.0, 0.0], [1.0, -1.0]);
        // One full winding forward in affine parameter lands at (L, 0).
        let p2 = CovectorPoint::new_2d([l, 0.0], [1.0, -1.0]);
        assert!(related(&c, &p, &p2, RELATED_TOL).unwrap());
    }

    #[test]
    fn in_r_examples() {
        let m = mink();
        let p = CovectorPoint::new_2d([0.0, 0.0], [-1.0, 1.0]);
        // Transported along raised vector (-1,-1); -ξ' = (-1, 1) matches.
        let p2 = CovectorPoint::new_2d([-1.0, -1.0], [1.0, -1.0]);
        assert!(in_r(&m, &p, &p2));
        // Diagonal with ξ' = -ξ.
        let diag = CovectorPoint::new_2d([0.0, 0.0], [1.0, -1.0]);
        assert!(in_r(&m, &p, &diag));
        // First slot future-null: excluded.
        let fut = CovectorPoint::new_2d([0.0, 0.0], [1.0, 1.0]);
        let q2 = CovectorPoint::new_2d([-1.0, -1.0], [1.0, -1.0]);
        assert!(!in_r(&m, &fut, &q2));
    }

    #[test]
    fn causal_separation_examples() {
        let m = mink();
        assert!(causally_separated(&m, &[0.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]));
        assert!(!causally_separated(&m, &[0.0, 0.0, 0.0, 0.0], &[2.0, 1.0, 0.0, 0.0]));
        // Null boundary counts as causally related (closed cones).
        assert!(!causally_separated(&m, &[0.0, 0.0, 0.0, 0.0], &[1.0, 1.0, 0.0, 0.0]));
        // Cylinder: minimal null travel time to the antipode is π.
        let c = cyl();
        assert!(causally_separated(
            &c,
            &[0.0, 0.0, 0.0, 0.0],
            &[0.1, core::f64::consts::PI, 0.0, 0.0]
        ));
        assert!(!causally_separated(
            &c,
            &[0.0, 0.0, 0.0, 0.0],
            &[3.2, core::f64::consts::PI, 0.0, 0.0]
        ));
    }

    #[test]
    fn minkowski_1p3_causal_separation() {
        let m = SpacetimeModel::Minkowski1p3;
        assert!(causally_separated(&m, &[0.0, 0.0, 0.0, 0.0], &[1.0, 2.0, 2.0, 1.0]));
        assert!(!causally_separated(&m, &[0.0, 0.0, 0.0, 0.0], &[4.0, 2.0, 2.0, 1.0]));
    }

    #[test]
    fn cauchy_intersection_examples() {
        let m = mink();
        let seed = CovectorPoint::new_2d([0.0, 0.0], [-1.0, 1.0]);
        let orbit = integrate_bicharacteristic(&m, &seed, (-3.0, 3.0), 1e-3).unwrap();
        let (s, st) = cauchy_intersection(&m, &orbit, -2.0).unwrap();
        assert!((s - 2.0).abs() < 1e-10);
        assert!((st.point[0] + 2.0).abs() < 1e-10 && (st.point[1] + 2.0).abs() < 1e-10);
        assert!((st.covector[0] + 1.0).abs() < 1e-12 && (st.covector[1] - 1.0).abs() < 1e-12);

        let seed2 = CovectorPoint::new_2d([0.0, 0.0], [1.0, 1.0]);
        let orbit2 = integrate_bicharacteristic(&m, &seed2, (-1.0, 1.0), 1e-3).unwrap();
        let (s0, _) = cauchy_intersection(&m, &orbit2, 0.0).unwrap();
        assert!(s0.abs() < 1e-10);

        assert!(matches!(
            cauchy_intersection(&m, &orbit2, 5.0),
            Err(GeometryError::RangeExceeded { .. })
        ));
    }

    #[test]
    fn cauchy_intersection_cylinder_unwrap() {
        // Seed ((0,0),(1,-1)), t0 = 3π: affine 3π, spatial coordinate 3π mod 2π = π.
        let c = cyl();
        let pi = core::f64::consts::PI;
        let seed = CovectorPoint::new_2d([0.0, 0.0], [1.0, -1.0]);
        let orbit = integrate_bicharacteristic(&c, &seed, (0.0, 10.0), 1e-3).unwrap();
        let (s, st) = cauchy_intersection(&c, &orbit, 3.0 * pi).unwrap();
        assert!((s - 3.0 * pi).abs() < 1e-9);
        assert!((st.point[1] - pi).abs() < 1e-9);
    }

    #[test]
    fn r_cone_directions_at_null_pair_and_diagonal() {
        let m = mink();
        let q = [0.0, 0.0, 0.0, 0.0];
        // q' on the past-left null ray from q (direction (-1,-1)).
        let q2 = [-1.5, -1.5, 0.0, 0.0];
        let dirs = r_cone_directions(&m, &q, &q2);
        assert_eq!(dirs.len(), 1);
        let s = 1.0 / (2.0f64);
        assert!((dirs[0][0] + s.sqrt() / (2.0f64).sqrt()).abs() < 1e-12);
        // Diagonal carries both rays.
        let diag = r_cone_directions(&m, &q, &q);
        assert_eq!(diag.len(), 2);
        // Spacelike pair carries none.
        let sp = r_cone_directions(&m, &q, &[0.0, 2.0, 0.0, 0.0]);
        assert!(sp.is_empty());
    }
}
