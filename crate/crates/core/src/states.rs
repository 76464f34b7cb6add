//! Explicit passive-state models and their correlation functions.
//!
//! Every model exposes stationary two-time correlations
//! `C_AB(t) = ω(A α_t(B))` in one of two forms:
//!
//! * a finite sum of spectral lines `Σ w_j e^{i ν_j t}` (oscillator ladder
//!   channels, trace-state observables), or
//! * a dispersion integral over field modes with thermal occupation
//!   `n̄(ω) = 1/(e^{βω}-1)` (smeared Klein-Gordon channels).
//!
//! Smeared two-point functions are evaluated as mode integrals
//!
//! `ω₂(f⊗g) = ∫ dμ(κ) [ (1+n̄) F(η) G(-η) + n̄ F(-η) G(η) ] / (2ω)`
//!
//! with `η = (ω_κ, -κ)`, `ω_κ = √(κ²+m²)`, transform convention
//! `F(η) = ∫ f(x) e^{-iη·x} dx`, and `dμ = dκ/2π` on the Minkowski chart or
//! `L⁻¹ Σ_{κ ∈ 2πℤ/L}` on the cylinder. Positivity and the KMS property
//! hold mode by mode, so the evaluator realizes them up to quadrature error.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::geometry::SpacetimeModel;
use crate::num::{c64, cis, hermitian_eigen, AdaptiveQuad, Complex, FourierTable, RadialBump};

#[derive(Clone, Debug, PartialEq)]
pub enum StateError {
    NonPositiveMass,
    NonPositiveBeta,
    NonPositiveFrequency,
    NotHermitian { max_asymmetry: f64 },
    DimensionMismatch { expected: usize, got: usize },
    UnsupportedChart(String),
    BadMixture(String),
    QuadratureFailure { tail: f64, tol: f64 },
    IncompatibleGrid { h: f64, epsilon: f64 },
    WrongKind(String),
}

impl fmt::Display for StateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateError::NonPositiveMass => write!(f, "field mass must be strictly positive"),
            StateError::NonPositiveBeta => write!(f, "inverse temperature must be strictly positive"),
            StateError::NonPositiveFrequency => write!(f, "mode frequency must be strictly positive"),
            StateError::NotHermitian { max_asymmetry } => {
                write!(f, "matrix is not hermitian (max asymmetry {max_asymmetry:e})")
            }
            StateError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            StateError::UnsupportedChart(s) => write!(f, "unsupported chart for field state: {s}"),
            StateError::BadMixture(s) => write!(f, "invalid mixture: {s}"),
            StateError::QuadratureFailure { tail, tol } => {
                write!(f, "mode-sum tail {tail:e} exceeds tolerance {tol:e}")
            }
            StateError::IncompatibleGrid { h, epsilon } => write!(
                f,
                "finite-difference spacing h={h} incompatible with regularization ε={epsilon} (need h² < ε)"
            ),
            StateError::WrongKind(s) => write!(f, "operation not defined for this state kind: {s}"),
        }
    }
}

// ---------------------------------------------------------------------------
// Single-mode oscillator channels
// ---------------------------------------------------------------------------

/// Ladder operators of the oscillator algebra.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Lower,
    Raise,
}

/// `ω(X α_t(Y))` for the quasifree oscillator state with occupation `nbar`:
/// `α_t(a) = e^{-iω₀t} a`, so the only nonzero channels are
/// `ω(a α_t(a†)) = (1+n̄) e^{iω₀t}` and `ω(a† α_t(a)) = n̄ e^{-iω₀t}`.
pub fn single_mode_corr(omega0: f64, nbar: f64, x: Ladder, y: Ladder, t: f64) -> Complex {
    match (x, y) {
        (Ladder::Lower, Ladder::Raise) => cis(omega0 * t) * (1.0 + nbar),
        (Ladder::Raise, Ladder::Lower) => cis(-omega0 * t) * nbar,
        _ => c64(0.0, 0.0),
    }
}

/// Thermal occupation `n̄ = 1/(e^{βω} - 1)`.
#[inline]
pub fn thermal_occupation(beta: f64, omega: f64) -> f64 {
    1.0 / (libm::expm1(beta * omega))
}

// ---------------------------------------------------------------------------
// Trace state on a finite matrix algebra
// ---------------------------------------------------------------------------

/// The normalized trace state over `M_n(ℂ)` with dynamics generated by a
/// hermitian `H`: `ω(A) = tr(A)/n`, `α_t(A) = e^{itH} A e^{-itH}`.
#[derive(Clone, Debug)]
pub struct MatrixState {
    pub dim: usize,
    pub hamiltonian: Vec<Complex>,
    eigenvalues: Vec<f64>,
    /// Unitary of eigenvectors, column-wise: `H = V diag(E) V†`.
    eigenvectors: Vec<Complex>,
}

impl MatrixState {
    pub fn new(dim: usize, hamiltonian: Vec<Complex>) -> Result<Self, StateError> {
        if hamiltonian.len() != dim * dim {
            return Err(StateError::DimensionMismatch {
                expected: dim * dim,
                got: hamiltonian.len(),
            });
        }
        let mut asym = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                let d = (hamiltonian[i * dim + j] - hamiltonian[j * dim + i].conj()).norm();
                if d > asym {
                    asym = d;
                }
            }
        }
        if asym > 1e-12 {
            return Err(StateError::NotHermitian { max_asymmetry: asym });
        }
        let (eigenvalues, eigenvectors) = hermitian_eigen(dim, &hamiltonian);
        Ok(MatrixState {
            dim,
            hamiltonian,
            eigenvalues,
            eigenvectors,
        })
    }

    fn to_eigenbasis(&self, a: &[Complex]) -> Vec<Complex> {
        let n = self.dim;
        let v = &self.eigenvectors;
        // A' = V† A V.
        let mut tmp = vec![c64(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = c64(0.0, 0.0);
                for k in 0..n {
                    acc += a[i * n + k] * v[k * n + j];
                }
                tmp[i * n + j] = acc;
            }
        }
        let mut out = vec![c64(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = c64(0.0, 0.0);
                for k in 0..n {
                    acc += v[k * n + i].conj() * tmp[k * n + j];
                }
                out[i * n + j] = acc;
            }
        }
        out
    }

    /// Direct two-time evaluation `ω(α_{t1}(A) α_{t2}(B))`; the stationarity
    /// invariant is checked against the line form built by
    /// [`MatrixState::correlation_lines`].
    pub fn two_time(
        &self,
        a: &[Complex],
        b: &[Complex],
        t1: f64,
        t2: f64,
    ) -> Result<Complex, StateError> {
        let n = self.dim;
        if a.len() != n * n || b.len() != n * n {
            return Err(StateError::DimensionMismatch {
                expected: n * n,
                got: if a.len() != n * n { a.len() } else { b.len() },
            });
        }
        let ap = self.to_eigenbasis(a);
        let bp = self.to_eigenbasis(b);
        let e = &self.eigenvalues;
        let mut acc = c64(0.0, 0.0);
        for j in 0..n {
            for k in 0..n {
                // (α_t A)'_{jk} = e^{i(E_j - E_k)t} A'_{jk}.
                let phase = cis((e[j] - e[k]) * t1 + (e[k] - e[j]) * t2);
                acc += ap[j * n + k] * bp[k * n + j] * phase;
            }
        }
        Ok(acc / n as f64)
    }

    /// `ω(A α_t(B)) = tr(A e^{itH} B e^{-itH})/n` as a finite line sum.
    pub fn correlation_lines(
        &self,
        a: &[Complex],
        b: &[Complex],
    ) -> Result<Vec<SpectralLine>, StateError> {
        let n = self.dim;
        if a.len() != n * n || b.len() != n * n {
            return Err(StateError::DimensionMismatch {
                expected: n * n,
                got: if a.len() != n * n { a.len() } else { b.len() },
            });
        }
        let ap = self.to_eigenbasis(a);
        let bp = self.to_eigenbasis(b);
        let e = &self.eigenvalues;
        let mut lines = Vec::new();
        for j in 0..n {
            for k in 0..n {
                let w = ap[j * n + k] * bp[k * n + j] / n as f64;
                if w.norm() > 0.0 {
                    lines.push(SpectralLine {
                        frequency: e[k] - e[j],
                        weight: w,
                    });
                }
            }
        }
        Ok(lines)
    }
}

/// `tr(A e^{itH} B e^{-itH})/n` via the eigendecomposition of `H`.
pub fn matrix_trace_corr(
    state: &MatrixState,
    a: &[Complex],
    b: &[Complex],
    t: f64,
) -> Result<Complex, StateError> {
    state.two_time(a, b, 0.0, t)
}

// ---------------------------------------------------------------------------
// Smearing functions
// ---------------------------------------------------------------------------

/// A finite complex combination of translated, scaled copies of the standard
/// radial bump on a two-dimensional chart. Compact support: the union of
/// balls of the terms' radii.
#[derive(Clone, Debug, PartialEq)]
pub struct Smearing {
    pub terms: Vec<SmearingTerm>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmearingTerm {
    pub amplitude: Complex,
    pub center: [f64; 2],
    pub scale: f64,
}

impl Smearing {
    /// Single real bump `b(|x-center|/scale)`.
    pub fn bump(center: [f64; 2], scale: f64) -> Self {
        Smearing {
            terms: vec![SmearingTerm {
                amplitude: c64(1.0, 0.0),
                center,
                scale,
            }],
        }
    }

    pub fn scaled(mut self, amp: Complex) -> Self {
        for t in self.terms.iter_mut() {
            t.amplitude *= amp;
        }
        self
    }

    pub fn plus(mut self, other: &Smearing) -> Self {
        self.terms.extend(other.terms.iter().copied());
        self
    }

    /// Pointwise value.
    pub fn value(&self, x: [f64; 2]) -> Complex {
        let mut acc = c64(0.0, 0.0);
        for t in &self.terms {
            let r = libm::sqrt(
                (x[0] - t.center[0]) * (x[0] - t.center[0])
                    + (x[1] - t.center[1]) * (x[1] - t.center[1]),
            );
            acc += t.amplitude * RadialBump::new(t.scale).value(r);
        }
        acc
    }

    /// Complex conjugate smearing.
    pub fn conjugated(&self) -> Smearing {
        Smearing {
            terms: self
                .terms
                .iter()
                .map(|t| SmearingTerm {
                    amplitude: t.amplitude.conj(),
                    ..*t
                })
                .collect(),
        }
    }

    /// Translate in coordinate time by `t` (pullback along the Killing flow).
    pub fn time_translated(&self, t: f64) -> Smearing {
        Smearing {
            terms: self
                .terms
                .iter()
                .map(|tm| SmearingTerm {
                    center: [tm.center[0] + t, tm.center[1]],
                    ..*tm
                })
                .collect(),
        }
    }

    /// Transform `F(η) = ∫ f(x) e^{-iη·x} dx = Σ amp e^{-iη·c} s² B₂(s|η|)`.
    pub fn transform(&self, eta: [f64; 2]) -> Complex {
        let rho = libm::sqrt(eta[0] * eta[0] + eta[1] * eta[1]);
        let mut acc = c64(0.0, 0.0);
        for t in &self.terms {
            let b = RadialBump::transform_2d_unit(t.scale * rho) * t.scale * t.scale;
            acc += t.amplitude * cis(-(eta[0] * t.center[0] + eta[1] * t.center[1])) * b;
        }
        acc
    }

    /// Transform evaluated against a precomputed radial table (scan loops).
    pub fn transform_with(&self, table: &FourierTable, eta: [f64; 2]) -> Complex {
        let rho = libm::sqrt(eta[0] * eta[0] + eta[1] * eta[1]);
        let mut acc = c64(0.0, 0.0);
        for t in &self.terms {
            let b = table.eval(t.scale * rho) * t.scale * t.scale;
            acc += t.amplitude * cis(-(eta[0] * t.center[0] + eta[1] * t.center[1])) * b;
        }
        acc
    }

    /// Transform through a shared context table, falling back to direct
    /// quadrature for arguments beyond the tabulated range.
    pub fn transform_cached(&self, ctx: &FieldContext, eta: [f64; 2]) -> Complex {
        let rho = libm::sqrt(eta[0] * eta[0] + eta[1] * eta[1]);
        let mut acc = c64(0.0, 0.0);
        for t in &self.terms {
            let arg = t.scale * rho;
            let b = if arg <= ctx.radial.p_max() {
                ctx.radial.eval(arg)
            } else {
                RadialBump::transform_2d_unit(arg)
            } * t.scale
                * t.scale;
            acc += t.amplitude * cis(-(eta[0] * t.center[0] + eta[1] * t.center[1])) * b;
        }
        acc
    }

    pub fn max_scale(&self) -> f64 {
        let mut m = 0.0f64;
        for t in &self.terms {
            if t.scale > m {
                m = t.scale;
            }
        }
        m
    }
}

// ---------------------------------------------------------------------------
// Klein-Gordon field states
// ---------------------------------------------------------------------------

/// Massive scalar field data on a 1+1 chart (Minkowski line or cylinder).
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub spacetime: SpacetimeModel,
    pub mass: f64,
    /// `None` for the vacuum; `(β, occupation_scale)` for the thermal state.
    /// `occupation_scale` multiplies `n̄` and exists as a detuning knob for
    /// negative-control checks; the physical state has scale 1.
    pub thermal: Option<(f64, f64)>,
}

impl FieldState {
    pub fn vacuum(spacetime: SpacetimeModel, mass: f64) -> Result<Self, StateError> {
        Self::build(spacetime, mass, None)
    }

    pub fn kms(spacetime: SpacetimeModel, mass: f64, beta: f64) -> Result<Self, StateError> {
        if beta <= 0.0 {
            return Err(StateError::NonPositiveBeta);
        }
        Self::build(spacetime, mass, Some((beta, 1.0)))
    }

    pub fn kms_detuned(
        spacetime: SpacetimeModel,
        mass: f64,
        beta: f64,
        occupation_scale: f64,
    ) -> Result<Self, StateError> {
        if beta <= 0.0 {
            return Err(StateError::NonPositiveBeta);
        }
        Self::build(spacetime, mass, Some((beta, occupation_scale)))
    }

    fn build(
        spacetime: SpacetimeModel,
        mass: f64,
        thermal: Option<(f64, f64)>,
    ) -> Result<Self, StateError> {
        if mass <= 0.0 {
            // Massless 1+1 fields are infrared-singular; excluded by contract.
            return Err(StateError::NonPositiveMass);
        }
        if spacetime.dim() != 2 {
            return Err(StateError::UnsupportedChart(spacetime.name()));
        }
        Ok(FieldState {
            spacetime,
            mass,
            thermal,
        })
    }

    #[inline]
    pub fn dispersion(&self, kappa: f64) -> f64 {
        libm::sqrt(kappa * kappa + self.mass * self.mass)
    }

    /// Occupation of the mode with frequency `omega` (0 for the vacuum).
    #[inline]
    pub fn occupation(&self, omega: f64) -> f64 {
        match self.thermal {
            None => 0.0,
            Some((beta, scale)) => scale * thermal_occupation(beta, omega),
        }
    }

    pub fn beta(&self) -> Option<f64> {
        self.thermal.map(|(b, _)| b)
    }

    /// Integrate `weight(κ, ω)` against the mode measure, restricted to
    /// `|κ| ≤ k_max`. Returns the integral and a crude tail bound from the
    /// integrand magnitude at the cut.
    pub fn mode_integral<F: Fn(f64, f64) -> Complex>(
        &self,
        k_max: f64,
        rel_tol: f64,
        weight: F,
    ) -> (Complex, f64) {
        match self.spacetime {
            SpacetimeModel::CylinderRxS1 { circumference } => {
                let dk = 2.0 * core::f64::consts::PI / circumference;
                let n_max = libm::floor(k_max / dk) as i64;
                let mut acc = c64(0.0, 0.0);
                // Fixed summation order (ascending n) for reproducibility.
                for n in -n_max..=n_max {
                    let kappa = n as f64 * dk;
                    acc += weight(kappa, self.dispersion(kappa));
                }
                acc /= circumference;
                let edge = weight((n_max + 1) as f64 * dk, self.dispersion((n_max + 1) as f64 * dk))
                    .norm()
                    / circumference;
                (acc, edge * 8.0)
            }
            _ => {
                let quad = AdaptiveQuad::new();
                let f = |kappa: f64| weight(kappa, self.dispersion(kappa));
                let r = quad.integrate(-k_max, k_max, rel_tol, 1e-16, &f);
                let inv_2pi = 1.0 / (2.0 * core::f64::consts::PI);
                let edge = f(k_max).norm().max(f(-k_max).norm()) * inv_2pi;
                (
                    r.value * inv_2pi,
                    edge * 8.0 + r.error_estimate * inv_2pi,
                )
            }
        }
    }
}

/// Quadrature controls for smeared evaluations.
#[derive(Clone, Copy, Debug)]
pub struct QuadSpec {
    pub rel_tol: f64,
    /// Mode cutoff selector: integrate to `|κ| = bandwidth/scale_min + mass`.
    /// The transform products sit below 1e-16 of their peak beyond it.
    pub bump_bandwidth: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            rel_tol: 1e-11,
            bump_bandwidth: 340.0,
        }
    }
}

/// Shared radial-transform table for field-mode evaluations. Building the
/// table costs a fraction of a second; clones share the storage.
#[derive(Clone, Debug)]
pub struct FieldContext {
    radial: Arc<FourierTable>,
}

impl FieldContext {
    /// Table covering the arguments reachable under the default bandwidth
    /// (`√2 · bump_bandwidth` plus slack for the mass shell).
    pub fn standard() -> Self {
        Self::with_p_max(540.0)
    }

    pub fn with_p_max(p_max: f64) -> Self {
        FieldContext {
            radial: Arc::new(RadialBump::transform_2d_table(p_max)),
        }
    }

    pub fn radial(&self) -> &FourierTable {
        &self.radial
    }
}

/// Value of a smeared two-point evaluation along with its truncation audit.
#[derive(Clone, Copy, Debug)]
pub struct TwoPointValue {
    pub value: Complex,
    pub k_max: f64,
    pub tail_bound: f64,
}

/// Smeared two-point function `ω₂(f ⊗ g)` of a field state.
pub fn field_two_point(
    state: &FieldState,
    f: &Smearing,
    g: &Smearing,
    quad: &QuadSpec,
    ctx: &FieldContext,
) -> Result<TwoPointValue, StateError> {
    let scale_min = f.max_scale().min(g.max_scale()).max(1e-6);
    let k_max = quad.bump_bandwidth / scale_min + state.mass;
    let (value, tail) = state.mode_integral(k_max, quad.rel_tol, |kappa, omega| {
        let eta = [omega, -kappa];
        let neg = [-omega, kappa];
        let nbar = state.occupation(omega);
        let plus = f.transform_cached(ctx, eta) * g.transform_cached(ctx, neg) * (1.0 + nbar);
        let minus = f.transform_cached(ctx, neg) * g.transform_cached(ctx, eta) * nbar;
        (plus + minus) / (2.0 * omega)
    });
    // The smearing transforms decay sub-exponentially; the recorded tail
    // bound makes the truncation auditable.
    let tol = quad.rel_tol * value.norm().max(1e-30) + 1e-20;
    if tail > tol.max(1e-14) {
        return Err(StateError::QuadratureFailure { tail, tol });
    }
    Ok(TwoPointValue {
        value,
        k_max,
        tail_bound: tail,
    })
}

// ---------------------------------------------------------------------------
// Correlation kernels
// ---------------------------------------------------------------------------

/// One spectral line of a stationary correlation: contributes
/// `weight · e^{i frequency · t}` to `C(t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralLine {
    pub frequency: f64,
    pub weight: Complex,
}

/// A smeared field channel `C(t) = ω(Φ(f) α_t(Φ(g)))`.
#[derive(Clone, Debug)]
pub struct ModeChannel {
    pub state: FieldState,
    pub f: Smearing,
    pub g: Smearing,
    pub quad: QuadSpec,
    pub ctx: FieldContext,
}

impl ModeChannel {
    fn k_max(&self) -> f64 {
        let scale_min = self.f.max_scale().min(self.g.max_scale()).max(1e-6);
        self.quad.bump_bandwidth / scale_min + self.state.mass
    }

    /// `C(t) = ∫ dμ (1/2ω) [(1+n̄) F(η)G(-η) e^{iωt} + n̄ F(-η)G(η) e^{-iωt}]`.
    pub fn eval(&self, t: f64) -> Complex {
        let (v, _) = self.state.mode_integral(self.k_max(), self.quad.rel_tol, |kappa, omega| {
            let eta = [omega, -kappa];
            let neg = [-omega, kappa];
            let nbar = self.state.occupation(omega);
            let plus = self.f.transform_cached(&self.ctx, eta)
                * self.g.transform_cached(&self.ctx, neg)
                * (1.0 + nbar)
                * cis(omega * t);
            let minus = self.f.transform_cached(&self.ctx, neg)
                * self.g.transform_cached(&self.ctx, eta)
                * nbar
                * cis(-omega * t);
            (plus + minus) / (2.0 * omega)
        });
        v
    }

    fn bound(&self) -> f64 {
        let (v, _) = self.state.mode_integral(self.k_max(), self.quad.rel_tol, |kappa, omega| {
            let eta = [omega, -kappa];
            let neg = [-omega, kappa];
            let nbar = self.state.occupation(omega);
            let m = (self.f.transform_cached(&self.ctx, eta)
                * self.g.transform_cached(&self.ctx, neg))
            .norm()
                * (1.0 + nbar)
                + (self.f.transform_cached(&self.ctx, neg)
                    * self.g.transform_cached(&self.ctx, eta))
                .norm()
                    * nbar;
            c64(m / (2.0 * omega), 0.0)
        });
        v.re
    }
}

/// A stationary bounded correlation kernel `t ↦ ω(A α_t(B))`.
#[derive(Clone, Debug)]
pub enum Kernel {
    Lines(Vec<SpectralLine>),
    Mode(Box<ModeChannel>),
    Mixture(Vec<(f64, Kernel)>),
}

impl Kernel {
    pub fn eval(&self, t: f64) -> Complex {
        match self {
            Kernel::Lines(lines) => {
                let mut acc = c64(0.0, 0.0);
                for l in lines {
                    acc += l.weight * cis(l.frequency * t);
                }
                acc
            }
            Kernel::Mode(ch) => ch.eval(t),
            Kernel::Mixture(parts) => {
                let mut acc = c64(0.0, 0.0);
                for (w, k) in parts {
                    acc += k.eval(t) * *w;
                }
                acc
            }
        }
    }

    /// Upper bound for `sup_t |C(t)|`.
    pub fn bound(&self) -> f64 {
        match self {
            Kernel::Lines(lines) => lines.iter().map(|l| l.weight.norm()).sum(),
            Kernel::Mode(ch) => ch.bound(),
            Kernel::Mixture(parts) => parts.iter().map(|(w, k)| w * k.bound()).sum(),
        }
    }

    /// Largest line frequency (quadrature sizing hint).
    pub fn max_frequency(&self) -> f64 {
        match self {
            Kernel::Lines(lines) => lines
                .iter()
                .map(|l| libm::fabs(l.frequency))
                .fold(0.0, f64::max),
            Kernel::Mode(ch) => ch.k_max(),
            Kernel::Mixture(parts) => parts
                .iter()
                .map(|(_, k)| k.max_frequency())
                .fold(0.0, f64::max),
        }
    }

    pub fn scaled(self, w: f64) -> Kernel {
        Kernel::Mixture(vec![(w, self)])
    }
}

// ---------------------------------------------------------------------------
// State models and channels
// ---------------------------------------------------------------------------

/// The passive-state zoo plus the infinite-temperature trace state.
#[derive(Clone, Debug)]
pub enum StateModel {
    SingleModeGround { omega0: f64 },
    SingleModeKms { omega0: f64, beta: f64, occupation_scale: f64 },
    FieldVacuum(FieldState),
    FieldKms(FieldState),
    MatrixTrace(MatrixState),
    Mixture(Vec<(f64, StateModel)>),
}

impl StateModel {
    pub fn single_mode_ground(omega0: f64) -> Result<Self, StateError> {
        if omega0 <= 0.0 {
            return Err(StateError::NonPositiveFrequency);
        }
        Ok(StateModel::SingleModeGround { omega0 })
    }

    pub fn single_mode_kms(omega0: f64, beta: f64) -> Result<Self, StateError> {
        if omega0 <= 0.0 {
            return Err(StateError::NonPositiveFrequency);
        }
        if beta <= 0.0 {
            return Err(StateError::NonPositiveBeta);
        }
        Ok(StateModel::SingleModeKms {
            omega0,
            beta,
            occupation_scale: 1.0,
        })
    }

    /// Occupation for a single-mode state kind.
    pub fn single_mode_occupation(&self) -> Option<(f64, f64)> {
        match self {
            StateModel::SingleModeGround { omega0 } => Some((*omega0, 0.0)),
            StateModel::SingleModeKms {
                omega0,
                beta,
                occupation_scale,
            } => Some((*omega0, occupation_scale * thermal_occupation(*beta, *omega0))),
            _ => None,
        }
    }

    /// Whether the model is a mixture of ground/KMS(β>0) states.
    pub fn is_strictly_passive(&self) -> bool {
        match self {
            StateModel::SingleModeGround { .. } | StateModel::SingleModeKms { .. } => true,
            StateModel::FieldVacuum(_) => true,
            StateModel::FieldKms(f) => f.thermal.is_some(),
            StateModel::MatrixTrace(_) => false,
            StateModel::Mixture(parts) => parts.iter().all(|(_, s)| s.is_strictly_passive()),
        }
    }

    /// Smallest inverse temperature among thermal components, if any.
    pub fn min_beta(&self) -> Option<f64> {
        match self {
            StateModel::SingleModeKms { beta, .. } => Some(*beta),
            StateModel::FieldKms(f) => f.beta(),
            StateModel::Mixture(parts) => {
                let mut out: Option<f64> = None;
                for (_, s) in parts {
                    if let Some(b) = s.min_beta() {
                        out = Some(match out {
                            None => b,
                            Some(prev) => prev.min(b),
                        });
                    }
                }
                out
            }
            _ => None,
        }
    }
}

/// Construct a strictly passive mixture; weights must be positive and sum to
/// one, components ground or KMS at β > 0 (the trace state is excluded).
pub fn mix(components: Vec<(f64, StateModel)>) -> Result<StateModel, StateError> {
    if components.is_empty() {
        return Err(StateError::BadMixture(String::from("no components")));
    }
    let mut total = 0.0;
    for (w, s) in &components {
        if *w <= 0.0 {
            return Err(StateError::BadMixture(String::from("non-positive weight")));
        }
        if !s.is_strictly_passive() {
            return Err(StateError::BadMixture(String::from(
                "component is not a ground or KMS (β>0) state",
            )));
        }
        total += w;
    }
    if libm::fabs(total - 1.0) > 1e-15 * components.len() as f64 {
        return Err(StateError::BadMixture(String::from("weights do not sum to 1")));
    }
    Ok(StateModel::Mixture(components))
}

/// Observable channels for correlation kernels.
#[derive(Clone, Debug)]
pub enum Channel {
    /// Single-mode ladder pair `(A, B)`.
    Ladder(Ladder, Ladder),
    /// Trace-state observable pair (row-major matrices).
    MatrixPair(Vec<Complex>, Vec<Complex>),
    /// Smeared field pair `(Φ(f), Φ(g))`.
    Smeared(Smearing, Smearing),
}

impl Channel {
    pub fn swapped(&self) -> Channel {
        match self {
            Channel::Ladder(a, b) => Channel::Ladder(*b, *a),
            Channel::MatrixPair(a, b) => Channel::MatrixPair(b.clone(), a.clone()),
            Channel::Smeared(f, g) => Channel::Smeared(g.clone(), f.clone()),
        }
    }
}

/// Kernel `C_AB(t) = ω(A α_t(B))` of a state/channel pair. The context is
/// consulted only for smeared field channels.
pub fn correlation_kernel(
    state: &StateModel,
    channel: &Channel,
    ctx: &FieldContext,
) -> Result<Kernel, StateError> {
    match (state, channel) {
        (StateModel::Mixture(parts), ch) => {
            let mut out = Vec::new();
            for (w, s) in parts {
                out.push((*w, correlation_kernel(s, ch, ctx)?));
            }
            Ok(Kernel::Mixture(out))
        }
        (s, Channel::Ladder(x, y)) => {
            let (omega0, nbar) = s.single_mode_occupation().ok_or_else(|| {
                StateError::WrongKind(String::from("ladder channel needs a single-mode state"))
            })?;
            let line = match (x, y) {
                (Ladder::Lower, Ladder::Raise) => Some(SpectralLine {
                    frequency: omega0,
                    weight: c64(1.0 + nbar, 0.0),
                }),
                (Ladder::Raise, Ladder::Lower) => Some(SpectralLine {
                    frequency: -omega0,
                    weight: c64(nbar, 0.0),
                }),
                _ => None,
            };
            Ok(Kernel::Lines(line.into_iter().collect()))
        }
        (StateModel::MatrixTrace(m), Channel::MatrixPair(a, b)) => {
            Ok(Kernel::Lines(m.correlation_lines(a, b)?))
        }
        (StateModel::FieldVacuum(f) | StateModel::FieldKms(f), Channel::Smeared(sf, sg)) => {
            Ok(Kernel::Mode(Box::new(ModeChannel {
                state: f.clone(),
                f: sf.clone(),
                g: sg.clone(),
                quad: QuadSpec::default(),
                ctx: ctx.clone(),
            })))
        }
        _ => Err(StateError::WrongKind(String::from(
            "channel does not match state kind",
        ))),
    }
}

/// Kernel pair `(C_AB, C_BA)` for the KMS/trace checks.
pub fn correlation_kernel_pair(
    state: &StateModel,
    channel: &Channel,
    ctx: &FieldContext,
) -> Result<(Kernel, Kernel), StateError> {
    Ok((
        correlation_kernel(state, channel, ctx)?,
        correlation_kernel(state, &channel.swapped(), ctx)?,
    ))
}

// ---------------------------------------------------------------------------
// Quasifree n-point combinatorics
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Statistics {
    Bosonic,
    Fermionic,
}

/// Quasifree `n`-point value from a two-point table: zero for odd `n`; for
/// even `n` the sum over complete pairings `{(i₁<j₁),…}` of
/// `Π ω₂(i_k, j_k)`, signed by the pairing permutation for fermions.
pub fn quasifree_npoint<F: Fn(usize, usize) -> Complex>(
    n: usize,
    statistics: Statistics,
    two_point: F,
) -> Complex {
    if n == 0 {
        return c64(1.0, 0.0);
    }
    if n % 2 == 1 {
        return c64(0.0, 0.0);
    }
    let mut used = vec![false; n];
    pairing_sum(&mut used, n, statistics, &two_point)
}

fn pairing_sum<F: Fn(usize, usize) -> Complex>(
    used: &mut Vec<bool>,
    n: usize,
    statistics: Statistics,
    two_point: &F,
) -> Complex {
    // First unused index pairs with every later unused index; the fermionic
    // sign counts the unused indices jumped over.
    let first = match used.iter().position(|u| !u) {
        None => return c64(1.0, 0.0),
        Some(i) => i,
    };
    used[first] = true;
    let mut acc = c64(0.0, 0.0);
    let mut skipped = 0usize;
    for j in (first + 1)..n {
        if used[j] {
            continue;
        }
        used[j] = true;
        let sub = pairing_sum(used, n, statistics, two_point);
        used[j] = false;
        let sign = match statistics {
            Statistics::Bosonic => 1.0,
            Statistics::Fermionic => {
                if skipped % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        acc += two_point(first, j) * sub * sign;
        skipped += 1;
    }
    used[first] = false;
    acc
}

// ---------------------------------------------------------------------------
// Wave-equation residuals
// ---------------------------------------------------------------------------

/// Residual scan of `(□ + m²)` applied to the regularized position-space
/// kernel by second-order central differences.
#[derive(Clone, Debug)]
pub struct WaveResidualSpec {
    /// Frequency damping `e^{-εω}` of the point-sampled kernel.
    pub epsilon: f64,
    /// Finite-difference spacing.
    pub h: f64,
    /// Mass used in the operator (defaults to the state's mass; a mismatch
    /// is a detection test, not an error).
    pub operator_mass: Option<f64>,
    /// Pair separations `z = x - x'` at which the residual is sampled.
    pub separations: Vec<[f64; 2]>,
}

#[derive(Clone, Debug)]
pub struct WaveResidualReport {
    pub max_relative_residual: f64,
    pub kernel_scale: f64,
    pub per_point: Vec<([f64; 2], f64)>,
    pub k_max: f64,
}

/// Point value of the ε-damped kernel `W_ε(z) = ω₂(x, x')`, `z = x - x'`.
pub fn regularized_kernel_value(state: &FieldState, epsilon: f64, z: [f64; 2]) -> Complex {
    let k_max = damped_k_max(state, epsilon);
    let (v, _) = state.mode_integral(k_max, 1e-11, |kappa, omega| {
        let damp = libm::exp(-epsilon * omega);
        let nbar = state.occupation(omega);
        let phase = omega * z[0] - kappa * z[1];
        (cis(-phase) * (1.0 + nbar) + cis(phase) * nbar) * (damp / (2.0 * omega))
    });
    v
}

fn damped_k_max(state: &FieldState, epsilon: f64) -> f64 {
    // e^{-εω} < 1e-18 beyond the cut.
    42.0 / epsilon + state.mass
}

/// Max relative residual of the wave operator on the sampled kernel. The
/// translation-invariant kernels make the two operator slots coincide up to
/// the sign of the inner derivative, so one difference stencil serves both.
pub fn wave_residual(
    state: &FieldState,
    spec: &WaveResidualSpec,
) -> Result<WaveResidualReport, StateError> {
    if spec.h * spec.h >= spec.epsilon {
        return Err(StateError::IncompatibleGrid {
            h: spec.h,
            epsilon: spec.epsilon,
        });
    }
    let m_op = spec.operator_mass.unwrap_or(state.mass);
    let h = spec.h;
    let eps = spec.epsilon;
    let mut per_point = Vec::with_capacity(spec.separations.len());
    let mut kernel_scale = 0.0f64;
    let mut max_res = 0.0f64;
    for &z in &spec.separations {
        let w = |dz0: f64, dz1: f64| regularized_kernel_value(state, eps, [z[0] + dz0, z[1] + dz1]);
        let center = w(0.0, 0.0);
        let d2t = (w(h, 0.0) - center * 2.0 + w(-h, 0.0)) / (h * h);
        let d2x = (w(0.0, h) - center * 2.0 + w(0.0, -h)) / (h * h);
        let resid = (d2t - d2x + center * (m_op * m_op)).norm();
        per_point.push((z, resid));
        if center.norm() > kernel_scale {
            kernel_scale = center.norm();
        }
        if resid > max_res {
            max_res = resid;
        }
    }
    let k_max = damped_k_max(state, eps);
    Ok(WaveResidualReport {
        max_relative_residual: max_res / kernel_scale.max(1e-300),
        kernel_scale,
        per_point,
        k_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_ground_examples() {
        // Vacuum a a† expectation at t = 0.
        let v = single_mode_corr(1.0, 0.0, Ladder::Lower, Ladder::Raise, 0.0);
        assert!((v - c64(1.0, 0.0)).norm() < 1e-15);
        // a annihilates the vacuum.
        for t in [0.0, 0.7, -2.0] {
            assert_eq!(
                single_mode_corr(1.0, 0.0, Ladder::Raise, Ladder::Lower, t),
                c64(0.0, 0.0)
            );
        }
        // Same-type channels vanish.
        assert_eq!(
            single_mode_corr(1.0, 0.5, Ladder::Lower, Ladder::Lower, 0.3),
            c64(0.0, 0.0)
        );
    }

    #[test]
    fn kms_occupation_at_beta_ln2() {
        // n̄ = 1/(e^{ln 2} - 1) = 1 at ω₀ = 1.
        let nbar = thermal_occupation(core::f64::consts::LN_2, 1.0);
        assert!((nbar - 1.0).abs() < 1e-14);
        let v = single_mode_corr(1.0, nbar, Ladder::Raise, Ladder::Lower, 0.0);
        assert!((v - c64(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn matrix_trace_identity_channel() {
        let h = vec![c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)];
        let m = MatrixState::new(2, h).unwrap();
        let eye = vec![c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)];
        for t in [0.0, 1.3, -0.4] {
            let v = matrix_trace_corr(&m, &eye, &eye, t).unwrap();
            assert!((v - c64(1.0, 0.0)).norm() < 1e-13);
        }
        // Trace property at t = 0 for a random-ish pair.
        let a = vec![c64(0.3, 0.1), c64(-1.0, 0.4), c64(2.0, 0.0), c64(0.0, -0.7)];
        let b = vec![c64(1.1, -0.2), c64(0.5, 0.9), c64(-0.3, 0.0), c64(0.8, 0.1)];
        let ab = matrix_trace_corr(&m, &a, &b, 0.0).unwrap();
        let ba = matrix_trace_corr(&m, &b, &a, 0.0).unwrap();
        assert!((ab - ba).norm() < 1e-13);
    }

    #[test]
    fn matrix_trace_flip_channel_is_cos_t() {
        // H = diag(0, 1), A = B = σ_x: ω(A α_t(B)) = cos t.
        let h = vec![c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)];
        let m = MatrixState::new(2, h).unwrap();
        let sx = vec![c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)];
        for t in [0.0, 0.8, 2.4, -1.1] {
            let v = matrix_trace_corr(&m, &sx, &sx, t).unwrap();
            assert!((v - c64(libm::cos(t), 0.0)).norm() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn matrix_state_rejects_non_hermitian_and_mismatch() {
        let bad = vec![c64(0.0, 0.0), c64(1.0, 0.0), c64(0.5, 0.0), c64(0.0, 0.0)];
        assert!(matches!(
            MatrixState::new(2, bad),
            Err(StateError::NotHermitian { .. })
        ));
        let h = vec![c64(0.0, 0.0); 4];
        let m = MatrixState::new(2, h).unwrap();
        let a3 = vec![c64(0.0, 0.0); 9];
        assert!(matches!(
            m.two_time(&a3, &a3, 0.0, 0.0),
            Err(StateError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn matrix_lines_match_direct_two_time() {
        let h = vec![
            c64(0.3, 0.0),
            c64(0.2, 0.5),
            c64(0.2, -0.5),
            c64(-0.9, 0.0),
        ];
        let m = MatrixState::new(2, h).unwrap();
        let a = vec![c64(0.1, 0.2), c64(0.7, -0.3), c64(-0.2, 0.0), c64(0.4, 0.4)];
        let b = vec![c64(-0.6, 0.1), c64(0.2, 0.2), c64(0.9, -0.5), c64(0.0, 0.3)];
        let lines = m.correlation_lines(&a, &b).unwrap();
        let k = Kernel::Lines(lines);
        for t in [0.0, 0.9, -1.7] {
            let direct = m.two_time(&a, &b, 0.0, t).unwrap();
            assert!((k.eval(t) - direct).norm() < 1e-12);
            // Stationarity: two-time depends only on the difference.
            let shifted = m.two_time(&a, &b, 0.55, t + 0.55).unwrap();
            assert!((direct - shifted).norm() < 1e-12);
        }
    }

    #[test]
    fn quasifree_odd_vanishes_and_two_point_identity() {
        let w2 = |_i: usize, _j: usize| c64(0.7, -0.2);
        assert_eq!(quasifree_npoint(3, Statistics::Bosonic, w2), c64(0.0, 0.0));
        assert_eq!(quasifree_npoint(5, Statistics::Fermionic, w2), c64(0.0, 0.0));
        let w2d = |i: usize, j: usize| c64((i + 1) as f64, (j + 1) as f64);
        assert_eq!(quasifree_npoint(2, Statistics::Bosonic, w2d), w2d(0, 1));
    }

    #[test]
    fn quasifree_four_point_pairings() {
        // Bosonic: w(0,1)w(2,3) + w(0,2)w(1,3) + w(0,3)w(1,2).
        let w = |i: usize, j: usize| c64((3 * i + j + 1) as f64, 0.0);
        let expect = w(0, 1) * w(2, 3) + w(0, 2) * w(1, 3) + w(0, 3) * w(1, 2);
        let got = quasifree_npoint(4, Statistics::Bosonic, w);
        assert!((got - expect).norm() < 1e-12);
        // Fermionic signs: + - + on the same pairing order.
        let expect_f = w(0, 1) * w(2, 3) - w(0, 2) * w(1, 3) + w(0, 3) * w(1, 2);
        let got_f = quasifree_npoint(4, Statistics::Fermionic, w);
        assert!((got_f - expect_f).norm() < 1e-12);
    }

    #[test]
    fn mixture_validation() {
        let g = StateModel::single_mode_ground(1.0).unwrap();
        let k = StateModel::single_mode_kms(1.0, 1.0).unwrap();
        assert!(mix(vec![(0.5, g.clone()), (0.5, k.clone())]).is_ok());
        assert!(mix(vec![(0.5, g.clone()), (0.6, k.clone())]).is_err());
        // Trace component rejected.
        let h = vec![c64(0.0, 0.0); 4];
        let tr = StateModel::MatrixTrace(MatrixState::new(2, h).unwrap());
        assert!(mix(vec![(1.0, tr)]).is_err());
        // Single component of weight 1 reproduces the component kernel.
        let m = mix(vec![(1.0, g.clone())]).unwrap();
        let ch = Channel::Ladder(Ladder::Lower, Ladder::Raise);
        let ctx = FieldContext::with_p_max(8.0);
        let k1 = correlation_kernel(&g, &ch, &ctx).unwrap();
        let k2 = correlation_kernel(&m, &ch, &ctx).unwrap();
        for t in [0.0, 0.3, 2.0] {
            assert!((k1.eval(t) - k2.eval(t)).norm() < 1e-15);
        }
    }

    #[test]
    fn mixture_kernel_is_convex_combination() {
        let g = StateModel::single_mode_ground(1.0).unwrap();
        let k = StateModel::single_mode_kms(1.0, 1.0).unwrap();
        let m = mix(vec![(0.25, g.clone()), (0.75, k.clone())]).unwrap();
        let ch = Channel::Ladder(Ladder::Lower, Ladder::Raise);
        let ctx = FieldContext::with_p_max(8.0);
        let kg = correlation_kernel(&g, &ch, &ctx).unwrap();
        let kk = correlation_kernel(&k, &ch, &ctx).unwrap();
        let km = correlation_kernel(&m, &ch, &ctx).unwrap();
        for t in [0.0, 1.0, -0.6] {
            let expect = kg.eval(t) * 0.25 + kk.eval(t) * 0.75;
            assert!((km.eval(t) - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn smearing_seminorm_scaling() {
        // sup |∂^k f_λ| grows like λ^{-k}: finite differences on the profile.
        let d1 = |s: &Smearing, x: f64, h: f64| {
            (s.value([x + h, 0.0]).re - s.value([x - h, 0.0]).re) / (2.0 * h)
        };
        let f1 = Smearing::bump([0.0, 0.0], 1.0);
        let f2 = Smearing::bump([0.0, 0.0], 0.5);
        let mut m1 = 0.0f64;
        let mut m2 = 0.0f64;
        for i in 0..200 {
            let x = -1.0 + 0.01 * i as f64;
            m1 = m1.max(libm::fabs(d1(&f1, x, 1e-5)));
            m2 = m2.max(libm::fabs(d1(&f2, 0.5 * x, 1e-5)));
        }
        let ratio = m2 / m1;
        assert!((ratio - 2.0).abs() < 0.05, "ratio={ratio}");
    }

    #[test]
    fn field_state_validation() {
        assert!(matches!(
            FieldState::vacuum(SpacetimeModel::Minkowski1p1, 0.0),
            Err(StateError::NonPositiveMass)
        ));
        assert!(matches!(
            FieldState::kms(SpacetimeModel::Minkowski1p1, 1.0, 0.0),
            Err(StateError::NonPositiveBeta)
        ));
        assert!(matches!(
            FieldState::vacuum(SpacetimeModel::Minkowski1p3, 1.0),
            Err(StateError::UnsupportedChart(_))
        ));
    }

    #[test]
    fn wave_residual_rejects_incompatible_grid() {
        let st = FieldState::vacuum(SpacetimeModel::Minkowski1p1, 1.0).unwrap();
        let spec = WaveResidualSpec {
            epsilon: 1e-4,
            h: 0.5,
            operator_mass: None,
            separations: vec![[0.0, 1.0]],
        };
        assert!(matches!(
            wave_residual(&st, &spec),
            Err(StateError::IncompatibleGrid { .. })
        ));
    }
}
