//! Stochastic trigonometric time stepping for the P1 semi-discretization.
//!
//! With `E = e^{k𝔸_h}` the schemes are
//!
//! ```text
//! linear, additive:        U^{n+1} = E (U^n + P_h ΔW^n)
//! semilinear, multiplic.:  U^{n+1} = E (U^n + k G(U^n) + F(U^n) P_h ΔW^n)
//! ```
//!
//! `G` and `F` act on nodal values. [`ExactLinearSampler`] draws the exact
//! semi-discrete mild solution of the linear problem on the same Brownian
//! path the scheme consumes, which is what strong-error measurements need.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::fem1d::{self, FemFunction, FemPair, FemSystem, Rotation, SpectralProjector};
use crate::noise::{process, NoiseSpec, NormalStream, PathTable, WienerIncrement};
use crate::quadrature::gauss_legendre;

pub type PointwiseMap = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Drift `g = (g₁, g₂)` and diffusion multipliers `f = (f₁, f₂)`, each a
/// pointwise map of `(u₁, u₂)`, with declared growth and Lipschitz constants.
#[derive(Clone)]
pub struct Nonlinearity {
    pub g1: PointwiseMap,
    pub g2: PointwiseMap,
    pub f1: PointwiseMap,
    pub f2: PointwiseMap,
    pub declared_kg: f64,
    pub declared_kf: f64,
    pub declared_lg: f64,
    pub declared_lf: f64,
}

impl std::fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("declared_kg", &self.declared_kg)
            .field("declared_kf", &self.declared_kf)
            .field("declared_lg", &self.declared_lg)
            .field("declared_lf", &self.declared_lf)
            .finish_non_exhaustive()
    }
}

/// Worst observed difference quotients against the declared constants.
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzReport {
    pub max_quotient_g: f64,
    pub max_quotient_f: f64,
    pub holds: bool,
}

impl Nonlinearity {
    /// `g ≡ 0`, `f ≡ 1`: the additive-noise linear problem.
    pub fn additive() -> Self {
        Self {
            g1: Arc::new(|_, _| 0.0),
            g2: Arc::new(|_, _| 0.0),
            f1: Arc::new(|_, _| 1.0),
            f2: Arc::new(|_, _| 1.0),
            declared_kg: 0.0,
            declared_kf: 0.0,
            declared_lg: 0.0,
            declared_lf: 1.0,
        }
    }

    /// `g ≡ 0`, `f ≡ 0`: deterministic free evolution.
    pub fn zero() -> Self {
        Self {
            f1: Arc::new(|_, _| 0.0),
            f2: Arc::new(|_, _| 0.0),
            declared_lf: 0.0,
            ..Self::additive()
        }
    }

    /// Checks `|Δg₁| + |Δg₂| ≤ K_g (|Δu₁| + |Δu₂|)` (and likewise for `f`)
    /// on `n_pairs` random argument pairs in `[−10, 10]²`.
    pub fn validate_lipschitz(&self, n_pairs: usize, seed: u64) -> LipschitzReport {
        let mut stream = NormalStream::new(seed, 0, 0, 0);
        let mut draw = || 20.0 * stream.uniform() - 10.0;
        let (mut qg, mut qf) = (0.0f64, 0.0f64);
        for _ in 0..n_pairs {
            let (a, b, c, d) = (draw(), draw(), draw(), draw());
            let dist = (a - c).abs() + (b - d).abs();
            if dist == 0.0 {
                continue;
            }
            let dg = ((self.g1)(a, b) - (self.g1)(c, d)).abs() + ((self.g2)(a, b) - (self.g2)(c, d)).abs();
            let df = ((self.f1)(a, b) - (self.f1)(c, d)).abs() + ((self.f2)(a, b) - (self.f2)(c, d)).abs();
            qg = qg.max(dg / dist);
            qf = qf.max(df / dist);
        }
        let holds = qg <= self.declared_kg + 1e-9 && qf <= self.declared_kf + 1e-9;
        LipschitzReport { max_quotient_g: qg, max_quotient_f: qf, holds }
    }
}

/// `g = (√(u₂²+1), √(u₁²+1))`, `f = (√(u₁²+1), √(u₂²+1))`.
pub fn paper_nonlinearity() -> Nonlinearity {
    Nonlinearity {
        g1: Arc::new(|_, b| b.hypot(1.0)),
        g2: Arc::new(|a, _| a.hypot(1.0)),
        f1: Arc::new(|a, _| a.hypot(1.0)),
        f2: Arc::new(|_, b| b.hypot(1.0)),
        declared_kg: 1.0,
        declared_kf: 1.0,
        declared_lg: SQRT_2,
        declared_lf: SQRT_2,
    }
}

/// How the multiplicative term `F(Uⁿ)ΔWⁿ` is realized in `V_h`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorOrdering {
    /// Nodal product `f(Uⁿ) · P_hΔWⁿ`.
    #[default]
    ProjectThenMultiply,
    /// `P_h(I_h f(Uⁿ) · ΔWⁿ)` with the product integrated by quadrature.
    MultiplyThenProject,
}

/// Initial data `(u_{0,1}, u_{0,2})`.
#[derive(Clone)]
pub struct InitialData {
    pub re: ScalarFn,
    pub im: ScalarFn,
}

impl InitialData {
    /// `u₀(x) = sin(2πx) + i x(1 − x)`.
    pub fn paper() -> Self {
        Self {
            re: Arc::new(|x| (2.0 * std::f64::consts::PI * x).sin()),
            im: Arc::new(|x| x * (1.0 - x)),
        }
    }

    pub fn zero() -> Self {
        Self { re: Arc::new(|_| 0.0), im: Arc::new(|_| 0.0) }
    }
}

/// Problem definition; `nonlinearity = None` selects the linear
/// additive-noise problem.
#[derive(Clone)]
pub struct ModelProblem {
    pub nonlinearity: Option<Nonlinearity>,
    pub noise: NoiseSpec,
    pub initial: InitialData,
    pub final_time: f64,
    pub ordering: OperatorOrdering,
}

impl std::fmt::Debug for ModelProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelProblem")
            .field("nonlinearity", &self.nonlinearity)
            .field("noise", &self.noise)
            .field("final_time", &self.final_time)
            .field("ordering", &self.ordering)
            .finish_non_exhaustive()
    }
}

impl ModelProblem {
    pub fn new(nonlinearity: Option<Nonlinearity>, noise: NoiseSpec, initial: InitialData, final_time: f64) -> Result<Self> {
        if !(final_time > 0.0) || !final_time.is_finite() {
            return Err(Error::domain(format!("final time must be positive, got {final_time}")));
        }
        Ok(Self { nonlinearity, noise, initial, final_time, ordering: OperatorOrdering::default() })
    }

    /// The semilinear test problem with paper nonlinearity and initial data.
    pub fn paper(noise: NoiseSpec, final_time: f64) -> Result<Self> {
        Self::new(Some(paper_nonlinearity()), noise, InitialData::paper(), final_time)
    }

    /// Linear additive-noise problem with the same initial data.
    pub fn linear(noise: NoiseSpec, final_time: f64) -> Result<Self> {
        Self::new(None, noise, InitialData::paper(), final_time)
    }

    pub fn with_ordering(mut self, ordering: OperatorOrdering) -> Self {
        self.ordering = ordering;
        self
    }

    pub fn is_linear(&self) -> bool {
        self.nonlinearity.is_none()
    }

    /// `(P_h u_{0,1}, P_h u_{0,2})`.
    pub fn initial_pair(&self, system: &FemSystem) -> Result<FemPair> {
        let re = fem1d::l2_project(|x| (self.initial.re)(x), system)?;
        let im = fem1d::l2_project(|x| (self.initial.im)(x), system)?;
        FemPair::new(re, im)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeState {
    pub step_index: usize,
    pub pair: FemPair,
}

impl SchemeState {
    pub fn initial(pair: FemPair) -> Self {
        Self { step_index: 0, pair }
    }
}

fn check_dt(inc: &WienerIncrement, k: f64) -> Result<()> {
    if (inc.dt - k).abs() > 1e-12 * k.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::domain(format!("increment spans {} but step is {k}", inc.dt)));
    }
    Ok(())
}

/// Quadrature data for [`OperatorOrdering::MultiplyThenProject`].
#[derive(Clone, Debug)]
struct ProductQuadrature {
    /// Per cell and point: `(local coordinate ξ, weight · h)`.
    points: Vec<(f64, f64)>,
    /// `√2 sin(jπx_q)`, row per global quadrature point.
    modes: DMatrix<f64>,
}

const PRODUCT_QUADRATURE_ORDER: usize = 8;

impl ProductQuadrature {
    fn new(system: &FemSystem, num_modes: usize) -> Self {
        let mesh = system.mesh();
        let h = mesh.h();
        let (xs, ws) = gauss_legendre(PRODUCT_QUADRATURE_ORDER);
        let points: Vec<(f64, f64)> = xs.iter().zip(&ws).map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w * h)).collect();
        let nq = points.len();
        let modes = DMatrix::from_fn(mesh.num_cells() * nq, num_modes, |row, jj| {
            let (cell, q) = (row / nq, row % nq);
            let x = (cell as f64 + points[q].0) * h;
            SQRT_2 * ((jj + 1) as f64 * std::f64::consts::PI * x).sin()
        });
        Self { points, modes }
    }

    /// Load vector of `I(nodal) · W` against the hat functions, where `I`
    /// interpolates the interior values and `boundary` at both end points.
    fn product_load(&self, nodal: &[f64], boundary: f64, coeffs: &[f64]) -> Vec<f64> {
        let w_at = &self.modes * DVector::from_column_slice(coeffs);
        let n = nodal.len();
        let n_cells = n + 1;
        let nq = self.points.len();
        let mut b = vec![0.0; n];
        for cell in 0..n_cells {
            let left = if cell == 0 { boundary } else { nodal[cell - 1] };
            let right = if cell == n { boundary } else { nodal[cell] };
            let (mut bl, mut br) = (0.0, 0.0);
            for (q, &(xi, wh)) in self.points.iter().enumerate() {
                let val = (left * (1.0 - xi) + right * xi) * w_at[cell * nq + q] * wh;
                bl += val * (1.0 - xi);
                br += val * xi;
            }
            if cell >= 1 {
                b[cell - 1] += bl;
            }
            if cell < n {
                b[cell] += br;
            }
        }
        b
    }
}

/// Reusable stepping context: one mesh, one mode count.
#[derive(Clone, Debug)]
pub struct Integrator<'a> {
    system: &'a FemSystem,
    projector: SpectralProjector,
    ordering: OperatorOrdering,
    product: Option<ProductQuadrature>,
    rotation: Rotation,
}

impl<'a> Integrator<'a> {
    pub fn new(system: &'a FemSystem, num_modes: usize, ordering: OperatorOrdering) -> Self {
        let product = match ordering {
            OperatorOrdering::MultiplyThenProject => Some(ProductQuadrature::new(system, num_modes)),
            OperatorOrdering::ProjectThenMultiply => None,
        };
        Self { system, projector: SpectralProjector::new(system, num_modes), ordering, product, rotation: Rotation::Exact }
    }

    #[doc(hidden)]
    pub fn with_rotation(mut self, rotation: Rotation) -> Self {
        self.rotation = rotation;
        self
    }

    pub fn system(&self) -> &FemSystem {
        self.system
    }

    pub fn projector(&self) -> &SpectralProjector {
        &self.projector
    }

    fn propagate(&self, re: &[f64], im: &[f64], k: f64) -> FemPair {
        let mut cre = self.system.to_modal(re);
        let mut cim = self.system.to_modal(im);
        fem1d::rotate_modal(&mut cre, &mut cim, self.system.eig_values(), k, self.rotation);
        FemPair {
            re: FemFunction::new(self.system.from_modal(&cre)),
            im: FemFunction::new(self.system.from_modal(&cim)),
        }
    }

    fn finish(&self, state: &SchemeState, pair: FemPair) -> Result<SchemeState> {
        let step_index = state.step_index + 1;
        if !pair.is_finite() {
            return Err(Error::Blowup { step: step_index, detail: "non-finite nodal value".into() });
        }
        Ok(SchemeState { step_index, pair })
    }

    /// `U^{n+1} = e^{k𝔸_h}(Uⁿ + P_hΔWⁿ)`.
    pub fn step_linear(&self, state: &SchemeState, inc: &WienerIncrement, k: f64) -> Result<SchemeState> {
        check_dt(inc, k)?;
        let p1 = self.projector.project(&inc.dw1, self.system);
        let p2 = self.projector.project(&inc.dw2, self.system);
        let re: Vec<f64> = state.pair.re.nodal_values.iter().zip(&p1.nodal_values).map(|(u, d)| u + d).collect();
        let im: Vec<f64> = state.pair.im.nodal_values.iter().zip(&p2.nodal_values).map(|(u, d)| u + d).collect();
        self.finish(state, self.propagate(&re, &im, k))
    }

    /// `U^{n+1} = e^{k𝔸_h}(Uⁿ + k G(Uⁿ) + F(Uⁿ)ΔWⁿ)`.
    pub fn step_semilinear(&self, state: &SchemeState, inc: &WienerIncrement, k: f64, nl: &Nonlinearity) -> Result<SchemeState> {
        check_dt(inc, k)?;
        let u1 = &state.pair.re.nodal_values;
        let u2 = &state.pair.im.nodal_values;
        let (noise1, noise2) = match (&self.ordering, &self.product) {
            (OperatorOrdering::MultiplyThenProject, Some(pq)) => {
                let f1: Vec<f64> = u1.iter().zip(u2).map(|(a, b)| (nl.f1)(*a, *b)).collect();
                let f2: Vec<f64> = u1.iter().zip(u2).map(|(a, b)| (nl.f2)(*a, *b)).collect();
                // The solution vanishes on the boundary, so f is sampled there at (0, 0).
                (
                    self.system.solve_mass(&pq.product_load(&f1, (nl.f1)(0.0, 0.0), &inc.dw1)),
                    self.system.solve_mass(&pq.product_load(&f2, (nl.f2)(0.0, 0.0), &inc.dw2)),
                )
            }
            _ => {
                let p1 = self.projector.project(&inc.dw1, self.system).nodal_values;
                let p2 = self.projector.project(&inc.dw2, self.system).nodal_values;
                let n1 = u1.iter().zip(u2).zip(&p1).map(|((a, b), d)| (nl.f1)(*a, *b) * d).collect();
                let n2 = u1.iter().zip(u2).zip(&p2).map(|((a, b), d)| (nl.f2)(*a, *b) * d).collect();
                (n1, n2)
            }
        };
        let re: Vec<f64> = u1
            .iter()
            .zip(u2)
            .zip(&noise1)
            .map(|((a, b), w)| a + (k * (nl.g1)(*a, *b) + w))
            .collect();
        let im: Vec<f64> = u1
            .iter()
            .zip(u2)
            .zip(&noise2)
            .map(|((a, b), w)| b + (k * (nl.g2)(*a, *b) + w))
            .collect();
        self.finish(state, self.propagate(&re, &im, k))
    }

    /// Dispatches on the problem type.
    pub fn step(&self, problem: &ModelProblem, state: &SchemeState, inc: &WienerIncrement, k: f64) -> Result<SchemeState> {
        match &problem.nonlinearity {
            None => self.step_linear(state, inc, k),
            Some(nl) => self.step_semilinear(state, inc, k, nl),
        }
    }
}

/// One step of the linear additive scheme.
pub fn step_linear_additive(state: &SchemeState, inc: &WienerIncrement, k: f64, system: &FemSystem) -> Result<SchemeState> {
    Integrator::new(system, inc.num_modes(), OperatorOrdering::default()).step_linear(state, inc, k)
}

/// One step of the semilinear multiplicative scheme (nodal product ordering).
pub fn step_semilinear(
    state: &SchemeState,
    inc: &WienerIncrement,
    k: f64,
    system: &FemSystem,
    nl: &Nonlinearity,
) -> Result<SchemeState> {
    Integrator::new(system, inc.num_modes(), OperatorOrdering::default()).step_semilinear(state, inc, k, nl)
}

fn check_path(problem: &ModelProblem, path: &PathTable) -> Result<()> {
    if path.num_modes() != problem.noise.num_modes {
        return Err(Error::domain(format!(
            "path has {} modes, problem expects {}",
            path.num_modes(),
            problem.noise.num_modes
        )));
    }
    let span = path.final_time();
    if (span - problem.final_time).abs() > 1e-9 * problem.final_time {
        return Err(Error::domain(format!("path spans [0, {span}], problem ends at {}", problem.final_time)));
    }
    Ok(())
}

/// Runs the scheme over the whole path and returns every state `U⁰ … U^{N_t}`.
pub fn run_trajectory(problem: &ModelProblem, system: &FemSystem, path: &PathTable) -> Result<Vec<SchemeState>> {
    let mut states = Vec::with_capacity(path.num_steps() + 1);
    run_with(problem, system, path, |s| states.push(s.clone()))?;
    Ok(states)
}

/// Streaming variant that keeps only the final state.
pub fn run_final(problem: &ModelProblem, system: &FemSystem, path: &PathTable) -> Result<SchemeState> {
    let integrator = Integrator::new(system, problem.noise.num_modes, problem.ordering);
    run_final_with(problem, &integrator, path)
}

/// Streaming run with a caller-owned [`Integrator`].
pub fn run_final_with(problem: &ModelProblem, integrator: &Integrator<'_>, path: &PathTable) -> Result<SchemeState> {
    check_path(problem, path)?;
    let k = path.dt();
    let mut state = SchemeState::initial(problem.initial_pair(integrator.system())?);
    for inc in path.increments() {
        state = integrator.step(problem, &state, inc, k)?;
    }
    Ok(state)
}

/// Runs the scheme and calls `visit` on every state including `U⁰`.
pub fn run_with<F: FnMut(&SchemeState)>(problem: &ModelProblem, system: &FemSystem, path: &PathTable, mut visit: F) -> Result<()> {
    check_path(problem, path)?;
    let integrator = Integrator::new(system, problem.noise.num_modes, problem.ordering);
    let k = path.dt();
    let mut state = SchemeState::initial(problem.initial_pair(system)?);
    visit(&state);
    for inc in path.increments() {
        state = integrator.step(problem, &state, inc, k)?;
        visit(&state);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Exact mild solution of the linear semi-discrete problem.

/// `∫₀ᵏ cos(a u) du`.
fn int_cos(a: f64, k: f64) -> f64 {
    if a == 0.0 {
        k
    } else {
        (a * k).sin() / a
    }
}

/// `∫₀ᵏ sin(a u) du = 2 sin²(ak/2) / a`.
fn int_sin(a: f64, k: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        2.0 * (0.5 * a * k).sin().powi(2) / a
    }
}

/// `∫₀ᵏ cos(λu) cos(μu) du`.
pub fn int_cos_cos(l: f64, m: f64, k: f64) -> f64 {
    0.5 * (int_cos(l - m, k) + int_cos(l + m, k))
}

/// `∫₀ᵏ sin(λu) sin(μu) du`.
pub fn int_sin_sin(l: f64, m: f64, k: f64) -> f64 {
    0.5 * (int_cos(l - m, k) - int_cos(l + m, k))
}

/// `∫₀ᵏ cos(λu) sin(μu) du`.
pub fn int_cos_sin(l: f64, m: f64, k: f64) -> f64 {
    0.5 * (int_sin(m + l, k) + int_sin(m - l, k))
}

/// Covariance of `(Δβ, ∫cos(λ(k−τ))dβ, ∫sin(λ(k−τ))dβ)` over a step of
/// length `k` for a standard Brownian motion `β`.
pub fn convolution_triple_covariance(lambda: f64, k: f64) -> [[f64; 3]; 3] {
    let c = int_cos(lambda, k);
    let s = int_sin(lambda, k);
    let cc = int_cos_cos(lambda, lambda, k);
    let ss = int_sin_sin(lambda, lambda, k);
    let cs = int_cos_sin(lambda, lambda, k);
    [[k, c, s], [c, cc, cs], [s, cs, ss]]
}

/// Factor `F` with `F Fᵀ = C` for a symmetric PSD matrix, clamping negative
/// eigenvalues produced by rounding. Returns the number of clamped values.
pub fn psd_factor(cov: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let sym = (cov + cov.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut clamped = 0;
    let mut factor = eig.eigenvectors.clone();
    for (j, &v) in eig.eigenvalues.iter().enumerate() {
        let root = if v < 0.0 {
            clamped += 1;
            if v < -1e-10 * top {
                log::warn!("covariance eigenvalue {v:e} clamped to zero (largest {top:e})");
            }
            0.0
        } else {
            v.sqrt()
        };
        factor.column_mut(j).scale_mut(root);
    }
    (factor, clamped)
}

/// Draws the triple from `xi` (three independent standard normals).
pub fn sample_convolution_triple(lambda: f64, k: f64, xi: [f64; 3]) -> [f64; 3] {
    let cov = convolution_triple_covariance(lambda, k);
    let (f, _) = psd_factor(&DMatrix::from_fn(3, 3, |i, j| cov[i][j]));
    let out = f * DVector::from_column_slice(&xi);
    [out[0], out[1], out[2]]
}

/// Exact sampler for `X_h(T)` of the linear additive problem, coupled to the
/// increments the scheme sees.
///
/// In discrete eigen-coordinates `P_h W_i = Σ_m B_{i,m} φ_{h,m}` with
/// `ΔB_i = C ΔW_i`, `C = Vᵀ G`. Over one step the convolutions
/// `∫cos(λ_m(t_{n+1}−τ)) dB_{i,m}` (and the sine analogue) are split into their
/// conditional mean given the increments, `ΔB_{i,m} · (1/k)∫₀ᵏ cos(λ_m u)du`,
/// and a Brownian-bridge remainder. The remainder is Gaussian with covariance
/// `K ⊙ Σ`, where `K` is the bridge covariance of the trig functions and
/// `Σ = C Γ Cᵀ`; it is sampled from auxiliary streams keyed like the path.
#[derive(Clone, Debug)]
pub struct ExactLinearSampler {
    k: f64,
    eig_values: Vec<f64>,
    noise_modal: DMatrix<f64>,
    mean_cos: Vec<f64>,
    mean_sin: Vec<f64>,
    bridge_factor: DMatrix<f64>,
    correlated: bool,
    clamped: usize,
}

impl ExactLinearSampler {
    pub fn new(system: &FemSystem, noise: &NoiseSpec, k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::domain("step must be positive"));
        }
        let n = system.dim();
        let load = fem1d::sine_load_matrix(system.mesh(), noise.num_modes);
        let noise_modal = system.eig_vectors().transpose() * &load;
        let gammas = noise.mode_variances();
        let weighted = DMatrix::from_fn(n, noise.num_modes, |m, j| noise_modal[(m, j)] * gammas[j].sqrt());
        let sigma = &weighted * weighted.transpose();
        let lam = system.eig_values();
        let ic: Vec<f64> = lam.iter().map(|&l| int_cos(l, k)).collect();
        let is: Vec<f64> = lam.iter().map(|&l| int_sin(l, k)).collect();
        let cov = DMatrix::from_fn(2 * n, 2 * n, |a, b| {
            let (ma, ca) = (a % n, a < n);
            let (mb, cb) = (b % n, b < n);
            let (la, lb) = (lam[ma], lam[mb]);
            let bridge = match (ca, cb) {
                (true, true) => int_cos_cos(la, lb, k) - ic[ma] * ic[mb] / k,
                (false, false) => int_sin_sin(la, lb, k) - is[ma] * is[mb] / k,
                (true, false) => int_cos_sin(la, lb, k) - ic[ma] * is[mb] / k,
                (false, true) => int_cos_sin(lb, la, k) - ic[mb] * is[ma] / k,
            };
            bridge * sigma[(ma, mb)]
        });
        let (bridge_factor, clamped) = psd_factor(&cov);
        Ok(Self {
            k,
            eig_values: lam.to_vec(),
            noise_modal,
            mean_cos: ic.iter().map(|v| v / k).collect(),
            mean_sin: is.iter().map(|v| v / k).collect(),
            bridge_factor,
            correlated: noise.correlated,
            clamped,
        })
    }

    pub fn step(&self) -> f64 {
        self.k
    }

    /// Eigenvalues of the bridge covariance that were clamped to zero.
    pub fn clamped_eigenvalues(&self) -> usize {
        self.clamped
    }

    fn bridge_draw(&self, path: &PathTable, proc_id: u64, step: usize) -> DVector<f64> {
        let mut xi = vec![0.0; self.bridge_factor.ncols()];
        NormalStream::new(path.seed(), path.sample_index(), proc_id, step as u64).fill(&mut xi);
        &self.bridge_factor * DVector::from_vec(xi)
    }

    /// Evolves eigen-coordinates `(c₁, c₂)` of `X_h(0)` to the end of `path`.
    pub fn evolve_modal(&self, mut c1: Vec<f64>, mut c2: Vec<f64>, path: &PathTable) -> Result<(Vec<f64>, Vec<f64>)> {
        if (path.dt() - self.k).abs() > 1e-12 * self.k {
            return Err(Error::domain(format!("sampler built for step {}, path has {}", self.k, path.dt())));
        }
        if path.num_modes() != self.noise_modal.ncols() {
            return Err(Error::domain("path mode count does not match the sampler"));
        }
        let n = self.eig_values.len();
        for (step, inc) in path.increments().iter().enumerate() {
            let db1 = &self.noise_modal * DVector::from_column_slice(&inc.dw1);
            let db2 = &self.noise_modal * DVector::from_column_slice(&inc.dw2);
            let z1 = self.bridge_draw(path, process::BRIDGE1, step);
            let z2 = if self.correlated { z1.clone() } else { self.bridge_draw(path, process::BRIDGE2, step) };
            fem1d::rotate_modal(&mut c1, &mut c2, &self.eig_values, self.k, Rotation::Exact);
            for m in 0..n {
                let yc1 = self.mean_cos[m] * db1[m] + z1[m];
                let ys1 = self.mean_sin[m] * db1[m] + z1[n + m];
                let yc2 = self.mean_cos[m] * db2[m] + z2[m];
                let ys2 = self.mean_sin[m] * db2[m] + z2[n + m];
                c1[m] += yc1 - ys2;
                c2[m] += ys1 + yc2;
            }
        }
        Ok((c1, c2))
    }
}

/// Draws the exact semi-discrete mild solution `X_h(T)` on the Brownian path
/// underlying `path`.
pub fn exact_linear_mild(problem: &ModelProblem, system: &FemSystem, path: &PathTable) -> Result<FemPair> {
    if !problem.is_linear() {
        return Err(Error::domain("exact mild solution is only available for the linear problem"));
    }
    check_path(problem, path)?;
    let sampler = ExactLinearSampler::new(system, &problem.noise, path.dt())?;
    exact_linear_mild_with(problem, system, &sampler, path)
}

pub fn exact_linear_mild_with(
    problem: &ModelProblem,
    system: &FemSystem,
    sampler: &ExactLinearSampler,
    path: &PathTable,
) -> Result<FemPair> {
    let x0 = problem.initial_pair(system)?;
    let (c1, c2) = sampler.evolve_modal(
        system.to_modal(&x0.re.nodal_values),
        system.to_modal(&x0.im.nodal_values),
        path,
    )?;
    FemPair::new(FemFunction::new(system.from_modal(&c1)), FemFunction::new(system.from_modal(&c2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem1d::{apply_discrete_trig, assemble, project_spectral, Mesh};
    use crate::noise::sample_path;
    use crate::quadrature::integrate;
    use crate::spectral::SpectralField;

    fn system(n: usize) -> FemSystem {
        assemble(&Mesh::new(n).unwrap()).unwrap()
    }

    fn bits(p: &FemPair) -> Vec<u64> {
        p.re.nodal_values.iter().chain(&p.im.nodal_values).map(|x| x.to_bits()).collect()
    }

    #[test]
    fn paper_nonlinearity_values_and_symmetry() {
        let nl = paper_nonlinearity();
        assert_eq!((nl.g1)(0.0, 0.0), 1.0);
        assert_eq!((nl.f1)(0.0, 0.0), 1.0);
        for &(a, b) in &[(0.3, -2.0), (5.0, 1.5), (-7.0, 0.0)] {
            assert_eq!((nl.g1)(a, b), (nl.g2)(b, a));
            assert_eq!((nl.f1)(a, b), (nl.f2)(b, a));
        }
        assert_eq!(nl.declared_kg, 1.0);
        assert_eq!(nl.declared_lf, SQRT_2);
    }

    #[test]
    fn lipschitz_validation() {
        let report = paper_nonlinearity().validate_lipschitz(10_000, 1);
        assert!(report.holds, "{report:?}");
        assert!(report.max_quotient_g <= 1.0 + 1e-9);
        let mut bad = paper_nonlinearity();
        bad.g1 = Arc::new(|_, b| 3.0 * b);
        assert!(!bad.validate_lipschitz(10_000, 1).holds);
    }

    #[test]
    fn dt_mismatch_is_rejected() {
        let sys = system(8);
        let st = SchemeState::initial(FemPair::zeros(7));
        let inc = WienerIncrement::zeros(4, 0.1);
        assert!(matches!(step_linear_additive(&st, &inc, 0.2, &sys), Err(Error::Domain(_))));
        assert!(matches!(step_semilinear(&st, &inc, 0.2, &sys, &paper_nonlinearity()), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_state_zero_increment_stays_zero() {
        let sys = system(8);
        let st = SchemeState::initial(FemPair::zeros(7));
        let out = step_linear_additive(&st, &WienerIncrement::zeros(4, 0.1), 0.1, &sys).unwrap();
        assert_eq!(out.step_index, 1);
        assert!(out.pair.re.nodal_values.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn zero_increment_is_a_pure_rotation() {
        let sys = system(32);
        let problem = ModelProblem::linear(NoiseSpec::new(2.0, 8).unwrap(), 1.0).unwrap();
        let st = SchemeState::initial(problem.initial_pair(&sys).unwrap());
        let n0 = sys.combined_norm(&st.pair);
        let out = step_linear_additive(&st, &WienerIncrement::zeros(8, 0.05), 0.05, &sys).unwrap();
        assert!((sys.combined_norm(&out.pair) - n0).abs() <= 1e-11 * n0);
    }

    #[test]
    fn single_step_matches_composed_oracle() {
        let sys = system(16);
        let mut inc = WienerIncrement::zeros(6, 0.1);
        inc.dw1[2] = 0.7;
        inc.dw2[0] = -0.2;
        let st = SchemeState::initial(FemPair::zeros(15));
        let out = step_linear_additive(&st, &inc, 0.1, &sys).unwrap();
        let p = FemPair::new(
            project_spectral(&SpectralField::new(inc.dw1.clone()), &sys),
            project_spectral(&SpectralField::new(inc.dw2.clone()), &sys),
        )
        .unwrap();
        let expected = apply_discrete_trig(&p, 0.1, &sys);
        for (a, b) in bits(&out.pair).iter().zip(bits(&expected)) {
            assert!((f64::from_bits(*a) - f64::from_bits(b)).abs() < 1e-14);
        }
    }

    #[test]
    fn semilinear_with_additive_nonlinearity_is_bitwise_linear() {
        let sys = system(16);
        let spec = NoiseSpec::new(1.5, 10).unwrap();
        let path = sample_path(&spec, 0.5, 4, 3, 0).unwrap();
        let problem = ModelProblem::linear(spec, 0.5).unwrap();
        let mut a = SchemeState::initial(problem.initial_pair(&sys).unwrap());
        let mut b = a.clone();
        let nl = Nonlinearity::additive();
        for inc in path.increments() {
            a = step_linear_additive(&a, inc, path.dt(), &sys).unwrap();
            b = step_semilinear(&b, inc, path.dt(), &sys, &nl).unwrap();
            assert_eq!(bits(&a.pair), bits(&b.pair));
        }
    }

    #[test]
    fn semilinear_with_zero_nonlinearity_is_free_rotation() {
        let sys = system(16);
        let mut inc = WienerIncrement::zeros(5, 0.1);
        inc.dw1[0] = 3.0;
        let problem = ModelProblem::linear(NoiseSpec::new(1.5, 5).unwrap(), 1.0).unwrap();
        let st = SchemeState::initial(problem.initial_pair(&sys).unwrap());
        let a = step_semilinear(&st, &inc, 0.1, &sys, &Nonlinearity::zero()).unwrap();
        let b = step_linear_additive(&st, &WienerIncrement::zeros(5, 0.1), 0.1, &sys).unwrap();
        assert_eq!(bits(&a.pair), bits(&b.pair));
    }

    #[test]
    fn constant_drift_step_matches_oracle() {
        let sys = system(16);
        let k = 0.05;
        let mut nl = Nonlinearity::zero();
        nl.g1 = Arc::new(|_, _| 1.0);
        let st = SchemeState::initial(FemPair::zeros(15));
        let out = step_semilinear(&st, &WienerIncrement::zeros(4, k), k, &sys, &nl).unwrap();
        // P_h(1) is the constant interpolant at interior nodes of V_h only
        // through the nodal Nemytskii convention: nodal value 1.
        let start = FemPair::new(FemFunction::new(vec![k; 15]), FemFunction::zeros(15)).unwrap();
        let expected = apply_discrete_trig(&start, k, &sys);
        for (a, b) in bits(&out.pair).iter().zip(bits(&expected)) {
            assert!((f64::from_bits(*a) - f64::from_bits(b)).abs() < 1e-14);
        }
    }

    #[test]
    fn blowup_is_reported_with_step() {
        let sys = system(8);
        let mut nl = Nonlinearity::zero();
        nl.g1 = Arc::new(|a, _| if a != 0.0 { f64::NAN } else { 1.0 });
        let problem = ModelProblem::new(Some(nl), NoiseSpec::new(1.0, 2).unwrap(), InitialData::zero(), 1.0).unwrap();
        let path = PathTable::zeros(2, 1.0, 10).unwrap();
        match run_final(&problem, &sys, &path) {
            Err(Error::Blowup { step, .. }) => assert_eq!(step, 2),
            other => panic!("expected blowup, got {other:?}"),
        }
    }

    #[test]
    fn trajectory_bookkeeping() {
        let sys = system(16);
        let spec = NoiseSpec::new(2.501, 16).unwrap();
        let problem = ModelProblem::paper(spec.clone(), 1.0).unwrap();
        let path = sample_path(&spec, 1.0, 8, 1, 0).unwrap();
        let states = run_trajectory(&problem, &sys, &path).unwrap();
        assert_eq!(states.len(), 9);
        assert_eq!(states.last().unwrap().step_index, 8);
        let last = run_final(&problem, &sys, &path).unwrap();
        assert_eq!(bits(&last.pair), bits(&states[8].pair));
        let one = step_semilinear(&states[0], &path.increments()[0], path.dt(), &sys, problem.nonlinearity.as_ref().unwrap()).unwrap();
        assert_eq!(bits(&one.pair), bits(&states[1].pair));

        let short = sample_path(&spec, 0.5, 8, 1, 0).unwrap();
        assert!(run_final(&problem, &sys, &short).is_err());
    }

    #[test]
    fn zero_noise_run_preserves_norm() {
        let sys = system(64);
        let problem = ModelProblem::linear(NoiseSpec::new(2.0, 4).unwrap(), 1.0).unwrap();
        let path = PathTable::zeros(4, 1.0, 64).unwrap();
        let states = run_trajectory(&problem, &sys, &path).unwrap();
        let n0 = sys.combined_norm(&states[0].pair);
        let n1 = sys.combined_norm(&states[64].pair);
        assert!((n1 - n0).abs() <= 1e-10 * n0);
    }

    #[test]
    fn paper_problem_stays_finite() {
        let sys = system(64);
        let spec = NoiseSpec::new(2.501, 64).unwrap();
        let problem = ModelProblem::paper(spec.clone(), 1.0).unwrap();
        let integ = Integrator::new(&sys, 64, OperatorOrdering::default());
        for i in 0..100 {
            let path = sample_path(&spec, 1.0, 64, 77, i).unwrap();
            let out = run_final_with(&problem, &integ, &path).unwrap();
            assert!(out.pair.is_finite());
        }
    }

    #[test]
    fn multiply_then_project_matches_nodal_for_constant_multiplier() {
        // With f ≡ 1 both orderings are P_h ΔW, up to quadrature error.
        let sys = system(32);
        let mut inc = WienerIncrement::zeros(16, 0.01);
        inc.dw1[0] = 0.3;
        inc.dw1[7] = -0.1;
        inc.dw2[3] = 0.2;
        let st = SchemeState::initial(FemPair::zeros(31));
        let nl = Nonlinearity::additive();
        let a = Integrator::new(&sys, 16, OperatorOrdering::ProjectThenMultiply).step_semilinear(&st, &inc, 0.01, &nl).unwrap();
        let b = Integrator::new(&sys, 16, OperatorOrdering::MultiplyThenProject).step_semilinear(&st, &inc, 0.01, &nl).unwrap();
        let diff: f64 = a.pair.re.nodal_values.iter().zip(&b.pair.re.nodal_values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-6, "diff={diff}");
    }

    #[test]
    fn trig_integrals_match_quadrature() {
        let k = 0.1;
        for &(l, m) in &[(9.87, 9.87), (9.87, 39.5), (1234.5, 17.0), (0.0, 3.0), (500.0, 500.0 + 1e-9)] {
            let q = |f: &dyn Fn(f64) -> f64| integrate(f, 0.0, k, 256, 10);
            let cc = q(&|u| (l * u).cos() * (m * u).cos());
            let ss = q(&|u| (l * u).sin() * (m * u).sin());
            let cs = q(&|u| (l * u).cos() * (m * u).sin());
            assert!((int_cos_cos(l, m, k) - cc).abs() < 1e-13, "cc {l} {m}");
            assert!((int_sin_sin(l, m, k) - ss).abs() < 1e-13, "ss {l} {m}");
            assert!((int_cos_sin(l, m, k) - cs).abs() < 1e-13, "cs {l} {m}");
        }
    }

    #[test]
    fn triple_small_angle_limit() {
        let k = 1e-3;
        let c = convolution_triple_covariance(1e-4, k);
        assert!((c[1][1] - k).abs() < 1e-12);
        assert!((c[0][1] - k).abs() < 1e-12);
        assert!(c[0][2].abs() < 1e-9 && c[1][2].abs() < 1e-9);
        let t = sample_convolution_triple(1e-4, k, [0.3, -1.0, 2.0]);
        assert!((t[0] - t[1]).abs() < 1e-6 * t[0].abs().max(1.0));
    }

    #[test]
    fn triple_cos_marginal_variance() {
        let sys = system(16);
        let l = sys.eig_values()[0];
        let k = 0.1;
        let n = 100_000;
        let mut acc = 0.0;
        for i in 0..n {
            let mut st = NormalStream::new(5, i, 9, 0);
            let xi = [st.next_normal(), st.next_normal(), st.next_normal()];
            acc += sample_convolution_triple(l, k, xi)[1].powi(2);
        }
        let v = acc / n as f64;
        let expected = k / 2.0 + (2.0 * l * k).sin() / (4.0 * l);
        let sigma = expected * (2.0 / n as f64).sqrt();
        assert!((v - expected).abs() <= 3.0 * sigma, "{v} vs {expected}");
    }

    #[test]
    fn exact_sampler_one_step_variance() {
        // After one step from zero: Var(re_m) = Σ_mm(∫cos²) + Σ_mm(∫sin²).
        let sys = system(8);
        let spec = NoiseSpec::new(1.0, 12).unwrap();
        let k = 0.05;
        let sampler = ExactLinearSampler::new(&sys, &spec, k).unwrap();
        let load = fem1d::sine_load_matrix(sys.mesh(), 12);
        let c = sys.eig_vectors().transpose() * load;
        let m = 0;
        let sigma_mm: f64 = (0..12).map(|j| c[(m, j)].powi(2) * spec.mode_variance(j + 1)).sum();
        let l = sys.eig_values()[m];
        let expected = sigma_mm * (int_cos_cos(l, l, k) + int_sin_sin(l, l, k));
        let n = 50_000;
        let mut acc = 0.0;
        for i in 0..n {
            let path = sample_path(&spec, k, 1, 21, i).unwrap();
            let (c1, _) = sampler.evolve_modal(vec![0.0; 7], vec![0.0; 7], &path).unwrap();
            acc += c1[m] * c1[m];
        }
        let v = acc / n as f64;
        let sd = expected * (2.0 / n as f64).sqrt();
        assert!((v - expected).abs() <= 3.0 * sd, "{v} vs {expected}");
    }

    #[test]
    fn exact_mild_zero_noise_is_rotation() {
        let sys = system(16);
        let spec = NoiseSpec::new(2.0, 8).unwrap().with_intensity(0.0);
        let problem = ModelProblem::linear(spec.clone(), 1.0).unwrap();
        let path = sample_path(&spec, 1.0, 16, 1, 0).unwrap();
        let exact = exact_linear_mild(&problem, &sys, &path).unwrap();
        let rotated = apply_discrete_trig(&problem.initial_pair(&sys).unwrap(), 1.0, &sys);
        for (a, b) in exact.re.nodal_values.iter().zip(&rotated.re.nodal_values) {
            assert!((a - b).abs() < 1e-11);
        }
        let semilinear = ModelProblem::paper(spec, 1.0).unwrap();
        assert!(exact_linear_mild(&semilinear, &sys, &path).is_err());
    }
}
