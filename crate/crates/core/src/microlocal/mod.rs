//! Oscillatory-integral decay engine: windowed transforms of two-time
//! correlations and of pair kernels at frequencies `λ⁻¹k`, decay-order
//! fitting over a geometric λ-grid, and regular/singular classification.
//!
//! A direction `k` is scanned by evaluating
//!
//! `I(λ, k) = ∫ e^{-iλ⁻¹ k·t} h(t) C_λ(t) dt`
//!
//! with `h` a product of compact bumps and `C_λ` the correlation of the
//! λ-coupled testing family, taking the sup over a small neighborhood of
//! grid directions, and fitting the slope of `log|I|` against `log λ`.
//! Superpolynomial decay (fitted order at least `s_star`) classifies the
//! direction regular; bounded non-decay (order at most `s_low`) classifies
//! it singular.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::num::Window;

pub mod compare;
pub mod engine;
pub mod scans;

pub use compare::{wf_to_r_compare, ContainmentReport, ContainmentRow};
pub use engine::{oscillatory_integral, OscOptions, ScanTables};
pub use scans::{
    acs_scan, exp_suppression_magnitudes, wf_pair_scan, wf_scan_sampled_1d, AcsFamily,
    InjectedLine, PairScanInput, PairVariant, Sampled1d,
};

#[derive(Clone, Debug, PartialEq)]
pub enum MicrolocalError {
    OscillationUnresolved { disagreement: f64, tol: f64 },
    NyquistViolation { spacing: f64, required: f64 },
    WindowExceedsChart { needed: (f64, f64), chart: (f64, f64) },
    GridMismatch(String),
    BadConfig(String),
    State(crate::states::StateError),
}

impl fmt::Display for MicrolocalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MicrolocalError::OscillationUnresolved { disagreement, tol } => write!(
                f,
                "oscillation unresolved: node-doubling disagreement {disagreement:e} > {tol:e}"
            ),
            MicrolocalError::NyquistViolation { spacing, required } => write!(
                f,
                "sample spacing {spacing} too coarse for the smallest scale (need <= {required})"
            ),
            MicrolocalError::WindowExceedsChart { needed, chart } => write!(
                f,
                "window needs chart coverage [{}, {}] but samples cover [{}, {}]",
                needed.0, needed.1, chart.0, chart.1
            ),
            MicrolocalError::GridMismatch(s) => write!(f, "direction grid mismatch: {s}"),
            MicrolocalError::BadConfig(s) => write!(f, "invalid scan config: {s}"),
            MicrolocalError::State(e) => write!(f, "state evaluation failed: {e}"),
        }
    }
}

impl From<crate::states::StateError> for MicrolocalError {
    fn from(e: crate::states::StateError) -> Self {
        MicrolocalError::State(e)
    }
}

// ---------------------------------------------------------------------------
// Direction grids
// ---------------------------------------------------------------------------

/// Unit scan directions with a fixed neighbor structure. The antipode of
/// every direction is in the grid, and every direction has unit norm.
#[derive(Clone, Debug)]
pub struct DirectionGrid {
    pub dim: usize,
    pub directions: Vec<[f64; 4]>,
    pub neighbors: Vec<Vec<usize>>,
    /// Pitch between adjacent directions; containment tolerances are stated
    /// as multiples of this resolution.
    pub delta_theta: f64,
}

impl DirectionGrid {
    /// The two directions of the line (1-dimensional scans).
    pub fn line() -> Self {
        DirectionGrid {
            dim: 1,
            directions: vec![[1.0, 0.0, 0.0, 0.0], [-1.0, 0.0, 0.0, 0.0]],
            neighbors: vec![vec![0], vec![1]],
            delta_theta: core::f64::consts::PI,
        }
    }

    /// `n` equally spaced directions on the circle (`n` even so antipodes
    /// are present).
    pub fn circle(n: usize) -> Self {
        assert!(n >= 4 && n % 2 == 0);
        let mut directions = Vec::with_capacity(n);
        let mut neighbors = Vec::with_capacity(n);
        for i in 0..n {
            let th = 2.0 * core::f64::consts::PI * i as f64 / n as f64;
            directions.push([libm::cos(th), libm::sin(th), 0.0, 0.0]);
            neighbors.push(vec![(i + n - 1) % n, i, (i + 1) % n]);
        }
        DirectionGrid {
            dim: 2,
            directions,
            neighbors,
            delta_theta: 2.0 * core::f64::consts::PI / n as f64,
        }
    }

    /// Product grid on `S³` for pair scans: directions
    /// `(cos ψ · u(θ), sin ψ · u(θ'))` over `n_theta` angles per slot and the
    /// given ψ levels (each in `(0, π/2)`; the slot-degenerate poles are
    /// excluded since a zero covector is not a scan direction).
    pub fn pair_sphere(n_theta: usize, psi_levels: &[f64]) -> Self {
        assert!(n_theta >= 8 && n_theta % 2 == 0);
        assert!(!psi_levels.is_empty());
        let n_psi = psi_levels.len();
        let total = n_theta * n_theta * n_psi;
        let mut directions = Vec::with_capacity(total);
        let mut neighbors = Vec::with_capacity(total);
        let idx = |ip: usize, i1: usize, i2: usize| (ip * n_theta + i1) * n_theta + i2;
        for (ip, &psi) in psi_levels.iter().enumerate() {
            let (cp, sp) = (libm::cos(psi), libm::sin(psi));
            for i1 in 0..n_theta {
                let th1 = 2.0 * core::f64::consts::PI * i1 as f64 / n_theta as f64;
                for i2 in 0..n_theta {
                    let th2 = 2.0 * core::f64::consts::PI * i2 as f64 / n_theta as f64;
                    directions.push([
                        cp * libm::cos(th1),
                        cp * libm::sin(th1),
                        sp * libm::cos(th2),
                        sp * libm::sin(th2),
                    ]);
                    let mut nb = vec![idx(ip, i1, i2)];
                    nb.push(idx(ip, (i1 + n_theta - 1) % n_theta, i2));
                    nb.push(idx(ip, (i1 + 1) % n_theta, i2));
                    nb.push(idx(ip, i1, (i2 + n_theta - 1) % n_theta));
                    nb.push(idx(ip, i1, (i2 + 1) % n_theta));
                    if ip > 0 {
                        nb.push(idx(ip - 1, i1, i2));
                    }
                    if ip + 1 < n_psi {
                        nb.push(idx(ip + 1, i1, i2));
                    }
                    neighbors.push(nb);
                }
            }
        }
        let mut pitch = 0.0f64;
        for (i, nbs) in neighbors.iter().enumerate() {
            for &j in nbs {
                if j == i {
                    continue;
                }
                let mut dot = 0.0;
                for c in 0..4 {
                    dot += directions[i][c] * directions[j][c];
                }
                let ang = libm::acos(dot.clamp(-1.0, 1.0));
                if ang > pitch {
                    pitch = ang;
                }
            }
        }
        DirectionGrid {
            dim: 4,
            directions,
            neighbors,
            delta_theta: pitch,
        }
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Index of the grid direction closest to `d` (by angle).
    pub fn nearest(&self, d: &[f64; 4]) -> usize {
        let mut best = 0usize;
        let mut best_dot = f64::NEG_INFINITY;
        for (i, g) in self.directions.iter().enumerate() {
            let mut dot = 0.0;
            for c in 0..4 {
                dot += g[c] * d[c];
            }
            if dot > best_dot {
                best_dot = dot;
                best = i;
            }
        }
        best
    }

    /// Whether the antipode of every direction is present on the grid.
    pub fn antipode_closed(&self, tol: f64) -> bool {
        for d in &self.directions {
            let neg = [-d[0], -d[1], -d[2], -d[3]];
            let j = self.nearest(&neg);
            let mut dot = 0.0;
            for c in 0..4 {
                dot += self.directions[j][c] * neg[c];
            }
            if dot < 1.0 - tol {
                return false;
            }
        }
        true
    }
}

// ---------------------------------------------------------------------------
// Scan configuration
// ---------------------------------------------------------------------------

/// Controls for a decay scan. Every threshold consumed by the engine lives
/// here so reports can echo the full configuration.
#[derive(Clone, Debug)]
pub struct ScanConfig {
    /// Strictly decreasing λ grid.
    pub lambdas: Vec<f64>,
    /// Per-axis window factor of the product window `h`; `h(0) = 1`.
    pub window: Window,
    /// Decay order at or above which a direction is regular.
    pub s_star: f64,
    /// Order at or below which a direction is singular.
    pub s_low: f64,
    /// Magnitudes below this absolute floor are excluded from fits.
    pub noise_floor: f64,
    /// Extra exponent per smearing slot of the λ-coupled family
    /// normalization `λ^{-(dim + offset)} b(·/λ)`.
    pub family_exponent_offset: f64,
    /// Support radius of the unit-scale smearing family (support `λ·r₀`).
    pub smearing_radius: f64,
    /// Spatial translation offsets over which field scans take the sup.
    pub spatial_offsets: Vec<f64>,
    /// Pair-scan frequency damping `ε = eps_reg_factor · λ_min`.
    pub eps_reg_factor: f64,
    /// Window transforms below this fraction of `ŵ(0)` are treated as zero
    /// when solving for the resonant mode windows. Values much below 1e-15
    /// are not resolvable in double precision.
    pub window_cut: f64,
    /// Relative tolerance of the mode quadratures.
    pub quad_rel_tol: f64,
}

impl ScanConfig {
    /// Default λ grid 1/4 … 1/256 with the wide correlation window.
    pub fn acs_default() -> Self {
        ScanConfig {
            lambdas: geometric_lambdas(0.25, 7),
            window: Window::new(3.0, 1),
            s_star: 4.0,
            s_low: 1.0,
            noise_floor: 1e-13,
            family_exponent_offset: 0.5,
            smearing_radius: 1.0,
            spatial_offsets: vec![0.0, 0.37],
            eps_reg_factor: 0.1,
            window_cut: 1e-15,
            quad_rel_tol: 1e-10,
        }
    }

    /// Default pair-scan configuration: narrow translation window (so the
    /// scan stays local relative to the light cone) over λ = 1/4 … 1/512.
    pub fn pair_default() -> Self {
        ScanConfig {
            lambdas: geometric_lambdas(0.25, 8),
            window: Window::new(0.55, 3),
            s_star: 4.0,
            s_low: 1.0,
            noise_floor: 1e-13,
            family_exponent_offset: 0.5,
            smearing_radius: 1.0,
            spatial_offsets: vec![0.0],
            eps_reg_factor: 0.1,
            window_cut: 1e-15,
            quad_rel_tol: 1e-10,
        }
    }

    pub fn lambda_min(&self) -> f64 {
        *self.lambdas.last().expect("nonempty lambda grid")
    }

    pub fn validate(&self) -> Result<(), MicrolocalError> {
        if self.lambdas.len() < 4 {
            return Err(MicrolocalError::BadConfig(String::from(
                "need at least 4 lambda points",
            )));
        }
        for w in self.lambdas.windows(2) {
            if w[1] >= w[0] {
                return Err(MicrolocalError::BadConfig(String::from(
                    "lambda grid must be strictly decreasing",
                )));
            }
        }
        if *self.lambdas.first().unwrap() <= 0.0 || self.lambda_min() <= 0.0 {
            return Err(MicrolocalError::BadConfig(String::from(
                "lambda values must be positive",
            )));
        }
        Ok(())
    }
}

pub fn geometric_lambdas(first: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut l = first;
    for _ in 0..count {
        out.push(l);
        l *= 0.5;
    }
    out
}

// ---------------------------------------------------------------------------
// Decay fitting and verdicts
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Regular,
    Singular,
    Inconclusive,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Regular => "regular",
            Verdict::Singular => "singular",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Where a verdict came from: a decay fit, or the noise floor (all or most
/// magnitudes below the floor, which certifies decay by itself).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Fit,
    Floor,
}

#[derive(Clone, Copy, Debug)]
pub struct FitResult {
    /// Fitted decay order (slope of log|I| vs log λ); `+∞` when everything
    /// sat below the floor.
    pub order: f64,
    pub rms_residual: f64,
    /// More than half of the points were excluded as floor-level.
    pub noise_flag: bool,
    pub used_points: usize,
}

/// Least-squares decay order of `|I(λ)|` over the λ grid, excluding points
/// below the absolute noise floor.
pub fn fit_decay(
    lambdas: &[f64],
    magnitudes: &[f64],
    noise_floor: f64,
) -> Result<FitResult, MicrolocalError> {
    if lambdas.len() < 4 || lambdas.len() != magnitudes.len() {
        return Err(MicrolocalError::BadConfig(String::from(
            "decay fit needs >= 4 aligned (lambda, magnitude) points",
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (l, m) in lambdas.iter().zip(magnitudes.iter()) {
        if *m > noise_floor {
            xs.push(libm::log(*l));
            ys.push(libm::log(*m));
        }
    }
    let excluded = lambdas.len() - xs.len();
    let noise_flag = 2 * excluded > lambdas.len();
    if xs.len() < 2 {
        return Ok(FitResult {
            order: f64::INFINITY,
            rms_residual: 0.0,
            noise_flag: true,
            used_points: xs.len(),
        });
    }
    let (slope, _b, rms) = crate::num::linear_fit(&xs, &ys);
    Ok(FitResult {
        order: slope,
        rms_residual: rms,
        noise_flag,
        used_points: xs.len(),
    })
}

/// Verdict rule: floor-certified decay is regular; otherwise the fitted
/// order is compared against the two thresholds.
pub fn classify(fit: &FitResult, s_star: f64, s_low: f64) -> (Verdict, Provenance) {
    if fit.order.is_infinite() || (fit.noise_flag && fit.order >= s_low) {
        return (Verdict::Regular, Provenance::Floor);
    }
    if fit.order >= s_star {
        (Verdict::Regular, Provenance::Fit)
    } else if fit.order <= s_low {
        (Verdict::Singular, Provenance::Fit)
    } else {
        (Verdict::Inconclusive, Provenance::Fit)
    }
}

/// Scan outcome for one direction.
#[derive(Clone, Debug)]
pub struct DirectionReport {
    pub direction: [f64; 4],
    /// Neighborhood-sup magnitudes, one per λ.
    pub magnitudes: Vec<f64>,
    pub fit: FitResult,
    pub verdict: Verdict,
    pub provenance: Provenance,
}

/// Full decay report over a direction grid.
#[derive(Clone, Debug)]
pub struct DecayReport {
    pub dim: usize,
    pub lambdas: Vec<f64>,
    pub delta_theta: f64,
    pub rows: Vec<DirectionReport>,
}

impl DecayReport {
    pub fn singular_rows(&self) -> impl Iterator<Item = &DirectionReport> {
        self.rows.iter().filter(|r| r.verdict == Verdict::Singular)
    }

    pub fn count(&self, v: Verdict) -> usize {
        self.rows.iter().filter(|r| r.verdict == v).count()
    }

    /// Row whose direction is closest to `d`.
    pub fn row_nearest(&self, d: &[f64; 4]) -> &DirectionReport {
        let mut best = 0usize;
        let mut best_dot = f64::NEG_INFINITY;
        for (i, r) in self.rows.iter().enumerate() {
            let mut dot = 0.0;
            for c in 0..4 {
                dot += r.direction[c] * d[c];
            }
            if dot > best_dot {
                best_dot = dot;
                best = i;
            }
        }
        &self.rows[best]
    }
}

/// Assemble per-direction reports from raw magnitude tables: apply the
/// neighborhood sup, fit, classify. Reports are ordered by direction index.
pub fn assemble_report(
    grid: &DirectionGrid,
    cfg: &ScanConfig,
    raw: &[Vec<f64>],
) -> Result<DecayReport, MicrolocalError> {
    let mut rows = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let mut sup = vec![0.0f64; cfg.lambdas.len()];
        for &j in &grid.neighbors[i] {
            for (s, m) in sup.iter_mut().zip(raw[j].iter()) {
                if *m > *s {
                    *s = *m;
                }
            }
        }
        let fit = fit_decay(&cfg.lambdas, &sup, cfg.noise_floor)?;
        let (verdict, provenance) = classify(&fit, cfg.s_star, cfg.s_low);
        rows.push(DirectionReport {
            direction: grid.directions[i],
            magnitudes: sup,
            fit,
            verdict,
            provenance,
        });
    }
    Ok(DecayReport {
        dim: grid.dim,
        lambdas: cfg.lambdas.clone(),
        delta_theta: grid.delta_theta,
        rows,
    })
}

/// Deterministic fan-out hook: maps direction indices to per-λ magnitude
/// vectors. The serial mapper preserves index order; a parallel runner must
/// reduce in index order to keep reports byte-reproducible.
pub trait DirectionMapper: Sync {
    fn run(&self, n: usize, eval: &(dyn Fn(usize) -> Vec<f64> + Sync)) -> Vec<Vec<f64>>;
}

pub struct SerialMapper;

impl DirectionMapper for SerialMapper {
    fn run(&self, n: usize, eval: &(dyn Fn(usize) -> Vec<f64> + Sync)) -> Vec<Vec<f64>> {
        (0..n).map(eval).collect()
    }
}
