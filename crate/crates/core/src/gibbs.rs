//! Configuration-space Gibbs measure `∝ exp(-β[½ qᵀAq + dx·Σ G(q_i)])`.
//!
//! Sampling is random-walk Metropolis with single-site Gaussian proposals.
//! The normalisation is never computed; every expectation is a ratio
//! estimator (MCMC) or a ratio of quadratures.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::chain::ChainParams;
use crate::error::{check_dim, Error, Result};
use crate::observable::ObservableSpec;
use crate::quadrature;
use crate::rng;
use crate::stats::{self, EstimateWithError, Method};

/// Target acceptance rate for step-size adaptation during burn-in.
pub const TARGET_ACCEPTANCE: f64 = 0.3;
const SYMMETRY_TOL: f64 = 1e-12;

/// Symmetric matrix of a discretised elliptic operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct StiffnessMatrix {
    entries: DMatrix<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for StiffnessMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::validation("stiffness matrix must be square"));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }
}

impl From<StiffnessMatrix> for Vec<Vec<f64>> {
    fn from(m: StiffnessMatrix) -> Self {
        m.entries.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

impl StiffnessMatrix {
    /// Checks squareness, finiteness and symmetry. Positivity is checked by
    /// [`coercivity_constant`] and by [`GibbsSpec::new`].
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::validation("stiffness matrix must be square and non-empty"));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("stiffness matrix has non-finite entries"));
        }
        let scale = entries.amax().max(f64::MIN_POSITIVE);
        let asym = (&entries - entries.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::validation(format!("stiffness matrix is not symmetric (|A - Aᵀ| = {asym:e})")));
        }
        Ok(Self { entries })
    }

    /// `tridiag(-1, 2, -1) / h²` with Dirichlet ends.
    pub fn second_difference_1d(n: usize, h: f64) -> Result<Self> {
        let inv = 1.0 / (h * h);
        Self::new(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0 * inv
            } else if i.abs_diff(j) == 1 {
                -inv
            } else {
                0.0
            }
        }))
    }

    /// Five-point Dirichlet Laplacian (negated) on an `nx × ny` interior grid.
    pub fn five_point_2d(nx: usize, ny: usize, h: f64) -> Result<Self> {
        let n = nx * ny;
        let inv = 1.0 / (h * h);
        let idx = |i: usize, j: usize| i * ny + j;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..nx {
            for j in 0..ny {
                let k = idx(i, j);
                m[(k, k)] = 4.0 * inv;
                if i > 0 {
                    m[(k, idx(i - 1, j))] = -inv;
                }
                if i + 1 < nx {
                    m[(k, idx(i + 1, j))] = -inv;
                }
                if j > 0 {
                    m[(k, idx(i, j - 1))] = -inv;
                }
                if j + 1 < ny {
                    m[(k, idx(i, j + 1))] = -inv;
                }
            }
        }
        Self::new(m)
    }

    /// Square of the 1-D second difference: a fourth-order operator.
    pub fn biharmonic_1d(n: usize, h: f64) -> Result<Self> {
        let d = Self::second_difference_1d(n, h)?;
        Self::new(&d.entries * &d.entries)
    }

    /// The wave-chain stiffness `(1/dx)·tridiag(-1, 2, -1)`.
    pub fn chain(prm: &ChainParams) -> Self {
        Self {
            entries: prm.stiffness(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(&self.entries * factor)
    }

    /// `A + shift·I`.
    pub fn shifted(&self, shift: f64) -> Result<Self> {
        let n = self.dim();
        Self::new(&self.entries + DMatrix::<f64>::identity(n, n) * shift)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// Smallest eigenvalue of `A`, the discrete coercivity constant.
pub fn coercivity_constant(a: &StiffnessMatrix) -> Result<f64> {
    let eig = nalgebra::SymmetricEigen::new(a.entries.clone());
    let lambda_min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if lambda_min <= 0.0 {
        return Err(Error::NotCoercive { lambda_min });
    }
    Ok(lambda_min)
}

/// A single term `coef · z^power` of a nodal polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyTerm {
    pub coef: f64,
    pub power: u32,
}

/// Globally Lipschitz nodal functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum LipschitzFn {
    /// `amplitude · sin(frequency · z)`.
    Sine { amplitude: f64, frequency: f64 },
    /// `slope · z`.
    Linear { slope: f64 },
}

impl LipschitzFn {
    fn value(&self, z: f64) -> f64 {
        match *self {
            LipschitzFn::Sine { amplitude, frequency } => amplitude * (frequency * z).sin(),
            LipschitzFn::Linear { slope } => slope * z,
        }
    }

    fn d1(&self, z: f64) -> f64 {
        match *self {
            LipschitzFn::Sine { amplitude, frequency } => amplitude * frequency * (frequency * z).cos(),
            LipschitzFn::Linear { slope } => slope,
        }
    }

    fn d2(&self, z: f64) -> f64 {
        match *self {
            LipschitzFn::Sine { amplitude, frequency } => -amplitude * frequency * frequency * (frequency * z).sin(),
            LipschitzFn::Linear { .. } => 0.0,
        }
    }

    /// Smallest valid Lipschitz constant.
    pub fn sharp_constant(&self) -> f64 {
        match *self {
            LipschitzFn::Sine { amplitude, frequency } => (amplitude * frequency).abs(),
            LipschitzFn::Linear { slope } => slope.abs(),
        }
    }
}

/// Nodal potential `G`; the total is `dx·Σ_i G(q_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    None,
    /// `Σ coef·z^power` with even powers and non-negative coefficients.
    Polynomial { terms: Vec<PolyTerm> },
    Lipschitz { function: LipschitzFn, lipschitz_constant: f64 },
}

impl PotentialSpec {
    /// `(g/2k)·z^{2k}`.
    pub fn polynomial_even(g: f64, k: u32) -> Self {
        PotentialSpec::Polynomial {
            terms: vec![PolyTerm {
                coef: g / (2.0 * k as f64),
                power: 2 * k,
            }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::None => Ok(()),
            PotentialSpec::Polynomial { terms } => {
                for t in terms {
                    if !(t.coef >= 0.0 && t.coef.is_finite()) {
                        return Err(Error::validation("polynomial coefficients must be non-negative"));
                    }
                    if t.power < 2 || t.power % 2 != 0 {
                        return Err(Error::validation(format!(
                            "polynomial powers must be even and at least 2, got {}",
                            t.power
                        )));
                    }
                }
                Ok(())
            }
            PotentialSpec::Lipschitz {
                function,
                lipschitz_constant,
            } => {
                if !(lipschitz_constant.is_finite() && *lipschitz_constant >= 0.0) {
                    return Err(Error::validation("Lipschitz constant must be finite and non-negative"));
                }
                if function.sharp_constant() > lipschitz_constant * (1.0 + 1e-12) {
                    return Err(Error::validation(format!(
                        "declared Lipschitz constant {} is below the function's constant {}",
                        lipschitz_constant,
                        function.sharp_constant()
                    )));
                }
                Ok(())
            }
        }
    }

    #[inline]
    pub fn value(&self, z: f64) -> f64 {
        match self {
            PotentialSpec::None => 0.0,
            PotentialSpec::Polynomial { terms } => terms.iter().map(|t| t.coef * z.powi(t.power as i32)).sum(),
            PotentialSpec::Lipschitz { function, .. } => function.value(z),
        }
    }

    pub fn derivative(&self, z: f64) -> f64 {
        match self {
            PotentialSpec::None => 0.0,
            PotentialSpec::Polynomial { terms } => terms
                .iter()
                .map(|t| t.coef * t.power as f64 * z.powi(t.power as i32 - 1))
                .sum(),
            PotentialSpec::Lipschitz { function, .. } => function.d1(z),
        }
    }

    pub fn second_derivative(&self, z: f64) -> f64 {
        match self {
            PotentialSpec::None => 0.0,
            PotentialSpec::Polynomial { terms } => terms
                .iter()
                .map(|t| {
                    let p = t.power as f64;
                    t.coef * p * (p - 1.0) * z.powi(t.power as i32 - 2)
                })
                .sum(),
            PotentialSpec::Lipschitz { function, .. } => function.d2(z),
        }
    }

    pub fn is_none(&self) -> bool {
        match self {
            PotentialSpec::None => true,
            PotentialSpec::Polynomial { terms } => terms.iter().all(|t| t.coef == 0.0),
            PotentialSpec::Lipschitz { .. } => false,
        }
    }
}

/// The measure `∝ exp(-β[½ qᵀAq + dx·Σ G(q_i)])` on `R^N`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GibbsSpecRepr", into = "GibbsSpecRepr")]
pub struct GibbsSpec {
    stiffness: StiffnessMatrix,
    potential: PotentialSpec,
    beta: f64,
    dx: f64,
    chol: Cholesky<f64, Dyn>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GibbsSpecRepr {
    stiffness: StiffnessMatrix,
    potential: PotentialSpec,
    beta: f64,
    dx: f64,
}

impl TryFrom<GibbsSpecRepr> for GibbsSpec {
    type Error = Error;
    fn try_from(r: GibbsSpecRepr) -> Result<Self> {
        GibbsSpec::new(r.stiffness, r.potential, r.beta, r.dx)
    }
}

impl From<GibbsSpec> for GibbsSpecRepr {
    fn from(s: GibbsSpec) -> Self {
        GibbsSpecRepr {
            stiffness: s.stiffness,
            potential: s.potential,
            beta: s.beta,
            dx: s.dx,
        }
    }
}

impl GibbsSpec {
    pub fn new(stiffness: StiffnessMatrix, potential: PotentialSpec, beta: f64, dx: f64) -> Result<Self> {
        potential.validate()?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::validation("beta must be positive"));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::validation("dx must be positive"));
        }
        let chol = Cholesky::new(stiffness.entries.clone()).ok_or_else(|| Error::NotCoercive {
            lambda_min: coercivity_constant(&stiffness).err().map_or(f64::NAN, |e| match e {
                Error::NotCoercive { lambda_min } => lambda_min,
                _ => f64::NAN,
            }),
        })?;
        Ok(Self {
            stiffness,
            potential,
            beta,
            dx,
            chol,
        })
    }

    /// Gibbs measure of the wave chain's configuration sector.
    pub fn from_chain(prm: &ChainParams) -> Result<Self> {
        Self::new(
            StiffnessMatrix::chain(prm),
            PotentialSpec::polynomial_even(prm.g, prm.k),
            prm.beta,
            prm.dx(),
        )
    }

    /// Same spec at a different inverse temperature.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.stiffness.clone(), self.potential.clone(), beta, self.dx)
    }

    pub fn dim(&self) -> usize {
        self.stiffness.dim()
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn stiffness(&self) -> &StiffnessMatrix {
        &self.stiffness
    }
    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    /// `½ qᵀAq + dx·Σ G(q_i)`.
    pub fn energy(&self, q: &[f64]) -> f64 {
        let qv = DVector::from_column_slice(q);
        let quad = 0.5 * qv.dot(&(self.stiffness.entries() * &qv));
        quad + self.dx * q.iter().map(|&z| self.potential.value(z)).sum::<f64>()
    }

    /// `∇(½ qᵀAq + dx·Σ G)`.
    pub fn energy_gradient(&self, q: &[f64]) -> DVector<f64> {
        let qv = DVector::from_column_slice(q);
        let mut g = self.stiffness.entries() * qv;
        for (gi, &z) in g.iter_mut().zip(q) {
            *gi += self.dx * self.potential.derivative(z);
        }
        g
    }

    /// `A + dx·diag(G''(q_i))`.
    pub fn energy_hessian(&self, q: &[f64]) -> DMatrix<f64> {
        let mut h = self.stiffness.entries().clone();
        for (i, &z) in q.iter().enumerate() {
            h[(i, i)] += self.dx * self.potential.second_derivative(z);
        }
        h
    }

    /// Covariance `(βA)⁻¹` of the Gaussian part.
    pub fn gaussian_covariance(&self) -> DMatrix<f64> {
        self.chol.inverse() / self.beta
    }

    /// Exact draw from the Gaussian part `N(0, (βA)⁻¹)`.
    pub fn sample_gaussian(&self, rng: &mut rng::Rng) -> Vec<f64> {
        let n = self.dim();
        let z = DVector::from_vec(rng::normal_vec(rng, n)) / self.beta.sqrt();
        // A = LLᵀ, so L⁻ᵀz has covariance A⁻¹
        let l = self.chol.l();
        let x = l
            .transpose()
            .solve_upper_triangular(&z)
            .expect("Cholesky factor has a positive diagonal");
        x.iter().copied().collect()
    }

    fn observable(&self, f: &ObservableSpec, q: &[f64]) -> f64 {
        f.evaluate_with(q, self.dx, || self.energy(q))
    }
}

/// Unnormalised log density `-β[½ qᵀAq + dx·Σ G(q_i)]`, zero at the origin
/// whenever `G(0) = 0`.
pub fn log_density(spec: &GibbsSpec, q: &[f64]) -> Result<f64> {
    check_dim(spec.dim(), q.len())?;
    Ok(-spec.beta * spec.energy(q))
}

/// Metropolis acceptance probability `min(1, π(y)/π(x))` for a symmetric proposal.
pub fn metropolis_acceptance(spec: &GibbsSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    let d = log_density(spec, y)? - log_density(spec, x)?;
    Ok(d.exp().min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcConfig {
    pub n_samples: usize,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default = "one")]
    pub thinning: usize,
    #[serde(default = "default_step")]
    pub step_scale: f64,
    pub seed: u64,
    /// Stream index for independent chains sharing a master seed.
    #[serde(default)]
    pub stream: u64,
}

fn one() -> usize {
    1
}
fn default_step() -> f64 {
    0.5
}

impl McmcConfig {
    pub fn new(n_samples: usize, burn_in: usize, seed: u64) -> Self {
        Self {
            n_samples,
            burn_in,
            thinning: 1,
            step_scale: 0.5,
            seed,
            stream: 0,
        }
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn with_thinning(mut self, thinning: usize) -> Self {
        self.thinning = thinning;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::validation("n_samples must be at least 1"));
        }
        if self.thinning == 0 {
            return Err(Error::validation("thinning must be at least 1"));
        }
        if !(self.step_scale > 0.0 && self.step_scale.is_finite()) {
            return Err(Error::validation("step_scale must be positive"));
        }
        Ok(())
    }
}

/// Recorded draws (one row per retained sweep) plus sampler diagnostics.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub draws: Vec<Vec<f64>>,
    /// Acceptance rate over the production phase.
    pub acceptance_rate: f64,
    /// Proposal scale after burn-in adaptation.
    pub step_scale: f64,
}

/// Random-walk Metropolis with single-site Gaussian proposals, started at
/// the origin. One sweep proposes a move at every site in order; one sweep
/// per `thinning` is recorded. During burn-in the proposal scale follows a
/// Robbins–Monro update toward [`TARGET_ACCEPTANCE`] and is then frozen.
pub fn mcmc_sample(spec: &GibbsSpec, cfg: &McmcConfig) -> Result<SampleBatch> {
    mcmc_sample_from(spec, cfg, &vec![0.0; spec.dim()])
}

pub fn mcmc_sample_from(spec: &GibbsSpec, cfg: &McmcConfig, start: &[f64]) -> Result<SampleBatch> {
    cfg.validate()?;
    check_dim(spec.dim(), start.len())?;
    let n = spec.dim();
    let a = spec.stiffness.entries();
    let beta = spec.beta;
    let dx = spec.dx;
    let pot = &spec.potential;
    let mut rng = rng::stream(cfg.seed, cfg.stream);
    let mut q = start.to_vec();
    let mut aq: Vec<f64> = (a * DVector::from_column_slice(&q)).iter().copied().collect();
    let mut scale = cfg.step_scale;

    let sweep = |q: &mut Vec<f64>, aq: &mut Vec<f64>, scale: f64, rng: &mut rng::Rng| -> usize {
        let mut accepted = 0;
        for i in 0..n {
            let delta = scale * rng::normal(rng);
            let old = q[i];
            let new = old + delta;
            let d_energy = delta * aq[i] + 0.5 * delta * delta * a[(i, i)] + dx * (pot.value(new) - pot.value(old));
            let log_u: f64 = rng.random::<f64>().ln();
            if log_u < -beta * d_energy {
                q[i] = new;
                for (j, v) in aq.iter_mut().enumerate() {
                    *v += delta * a[(j, i)];
                }
                accepted += 1;
            }
        }
        accepted
    };

    for b in 0..cfg.burn_in {
        let acc = sweep(&mut q, &mut aq, scale, &mut rng) as f64 / n as f64;
        let gain = 1.0 / (1.0 + b as f64).powf(0.6);
        scale *= (gain * (acc - TARGET_ACCEPTANCE)).exp();
    }

    let mut draws = Vec::with_capacity(cfg.n_samples);
    let mut accepted = 0usize;
    let mut proposed = 0usize;
    while draws.len() < cfg.n_samples {
        for _ in 0..cfg.thinning {
            accepted += sweep(&mut q, &mut aq, scale, &mut rng);
            proposed += n;
        }
        if q.iter().any(|x| !x.is_finite()) {
            return Err(Error::Diverged {
                t: draws.len() as f64,
                norm: f64::INFINITY,
            });
        }
        draws.push(q.clone());
    }
    Ok(SampleBatch {
        draws,
        acceptance_rate: accepted as f64 / proposed as f64,
        step_scale: scale,
    })
}

/// Batch-means estimate of `E[F]` over recorded draws.
pub fn estimate_from_draws(spec: &GibbsSpec, f: &ObservableSpec, draws: &[Vec<f64>]) -> EstimateWithError {
    let xs: Vec<f64> = draws.iter().map(|q| spec.observable(f, q)).collect();
    stats::batch_means(&xs, stats::DEFAULT_BATCHES, Method::Mcmc)
}

/// MCMC expectation of `F` with batch-means standard error.
pub fn expectation(spec: &GibbsSpec, f: &ObservableSpec, cfg: &McmcConfig) -> Result<EstimateWithError> {
    f.validate(spec.dim())?;
    let batch = mcmc_sample(spec, cfg)?;
    Ok(estimate_from_draws(spec, f, &batch.draws))
}

/// Quadrature expectation for `N ≤ 2`, the independent oracle for MCMC.
pub fn expectation_quadrature(spec: &GibbsSpec, f: &ObservableSpec, tol: f64) -> Result<EstimateWithError> {
    f.validate(spec.dim())?;
    let mean = match spec.dim() {
        1 => quadrature::weighted_mean_1d(
            |x| log_density(spec, &[x]).unwrap_or(f64::NEG_INFINITY),
            |x| spec.observable(f, &[x]),
            tol,
        ),
        2 => {
            let logp = |x: f64, y: f64| -spec.beta * spec.energy(&[x, y]);
            let r = quadrature::effective_support(|x| logp(x, 0.0).max(logp(0.0, x)), 60.0) * 1.5;
            let shift = logp(0.0, 0.0).max(
                (-200..=200)
                    .flat_map(|i| (-200..=200).map(move |j| (i, j)))
                    .map(|(i, j)| logp(i as f64 * r / 200.0, j as f64 * r / 200.0))
                    .fold(f64::NEG_INFINITY, f64::max),
            );
            let inner_tol = tol / (2.0 * r);
            let z = quadrature::adaptive_simpson(
                |x| quadrature::adaptive_simpson(|y| (logp(x, y) - shift).exp(), -r, r, inner_tol),
                -r,
                r,
                tol,
            );
            let num = quadrature::adaptive_simpson(
                |x| {
                    quadrature::adaptive_simpson(
                        |y| spec.observable(f, &[x, y]) * (logp(x, y) - shift).exp(),
                        -r,
                        r,
                        inner_tol,
                    )
                },
                -r,
                r,
                tol,
            );
            num / z
        }
        n => {
            return Err(Error::validation(format!(
                "quadrature oracle supports N <= 2, got N = {n}"
            )))
        }
    };
    Ok(EstimateWithError {
        mean,
        stderr: 0.0,
        n_effective: f64::INFINITY,
        method: Method::Quadrature,
    })
}

/// Outcome of the Lipschitz reweighting check.
#[derive(Debug, Clone, Serialize)]
pub struct LipschitzReport {
    /// Fraction of consecutive draw pairs on which `|G(z) - G(z')| ≤ L|z - z'|`
    /// holds at every site.
    pub weight_in_bounds: f64,
    /// Mean of `exp(-½ dx Σ G(φ_i))` under the Gaussian part.
    pub gaussian_mean_weight: EstimateWithError,
    /// Rigorous upper bound on that mean from `|G(z)| ≤ |G(0)| + L|z|`.
    pub analytic_bound: f64,
    /// Exact mean for linear `G`, from the Gaussian moment generating function.
    pub exact_linear_value: Option<f64>,
    /// `true` when every weight lies in `(0, 1]` (guaranteed for `G ≥ 0`).
    pub weights_in_unit_interval: bool,
}

/// Reweighting functional `exp(-½ dx Σ G(φ_i))`.
pub fn reweighting_functional(spec: &GibbsSpec, phi: &[f64]) -> f64 {
    (-0.5 * spec.dx * phi.iter().map(|&z| spec.potential.value(z)).sum::<f64>()).exp()
}

/// Samples the Gaussian part exactly and checks integrability of the
/// Lipschitz reweighting. `cfg.n_samples` draws from stream `cfg.stream`.
pub fn lipschitz_weight_check(spec: &GibbsSpec, cfg: &McmcConfig) -> Result<LipschitzReport> {
    cfg.validate()?;
    let (function, l) = match spec.potential {
        PotentialSpec::Lipschitz {
            function,
            lipschitz_constant,
        } => (function, lipschitz_constant),
        _ => return Err(Error::validation("lipschitz_weight_check needs a Lipschitz potential")),
    };
    let mut rng = rng::stream(cfg.seed, cfg.stream);
    let draws: Vec<Vec<f64>> = (0..cfg.n_samples).map(|_| spec.sample_gaussian(&mut rng)).collect();
    let weights: Vec<f64> = draws.iter().map(|phi| reweighting_functional(spec, phi)).collect();

    let pairs = draws.len().saturating_sub(1);
    let ok = draws
        .windows(2)
        .filter(|w| {
            w[0].iter().zip(&w[1]).all(|(&z, &zp)| {
                let (gz, gzp) = (function.value(z), function.value(zp));
                // allow for cancellation in the subtraction
                let slack = 4.0 * f64::EPSILON * (gz.abs() + gzp.abs() + l * (z.abs() + zp.abs()));
                (gz - gzp).abs() <= l * (z - zp).abs() + slack
            })
        })
        .count();
    let weight_in_bounds = if pairs == 0 { 1.0 } else { ok as f64 / pairs as f64 };

    let cov = spec.gaussian_covariance();
    let n = spec.dim();
    let ones = DVector::from_element(n, 1.0);
    let sum_cov = ones.dot(&(&cov * &ones));
    let exact_linear_value = match function {
        LipschitzFn::Linear { slope } => {
            let t = 0.5 * spec.dx * slope;
            Some((0.5 * t * t * sum_cov).exp())
        }
        _ => None,
    };
    // exp(t|x|) ≤ exp(tx) + exp(-tx) and sᵀΣs ≤ N·λ_max(Σ) for s ∈ {±1}^N
    let lambda_max = nalgebra::SymmetricEigen::new(cov)
        .eigenvalues
        .iter()
        .copied()
        .fold(0.0, f64::max);
    let t = 0.5 * spec.dx * l;
    let g0 = function.value(0.0).abs();
    let log_bound = 0.5 * spec.dx * n as f64 * g0 + n as f64 * std::f64::consts::LN_2 + 0.5 * t * t * n as f64 * lambda_max;
    let weights_in_unit_interval = weights.iter().all(|&w| w > 0.0 && w <= 1.0);

    Ok(LipschitzReport {
        weight_in_bounds,
        gaussian_mean_weight: stats::iid_estimate(&weights, Method::Mcmc),
        analytic_bound: log_bound.exp(),
        exact_linear_value,
        weights_in_unit_interval,
    })
}

/// `E[φ(0)²]` for the chain Gibbs measure on `(-a, a)` at each `N` (even),
/// tracking the lattice approximants toward the continuum.
pub fn continuum_probe(
    ns: &[usize],
    a: f64,
    g: f64,
    k: u32,
    beta: f64,
    cfg: &McmcConfig,
) -> Result<Vec<(usize, EstimateWithError)>> {
    ns.iter()
        .map(|&n| {
            if n % 2 != 0 {
                return Err(Error::validation("continuum probe needs even N so that x = 0 is a site"));
            }
            let prm = ChainParams::new(n, a, g, k)?.with_beta(beta)?;
            let spec = GibbsSpec::from_chain(&prm)?;
            // site index n/2 (1-based) sits at x = 0
            let mid = n / 2 - 1;
            let est = if spec.potential.is_none() {
                EstimateWithError::exact(spec.gaussian_covariance()[(mid, mid)])
            } else {
                expectation(&spec, &ObservableSpec::SiteSquare { site: mid }, cfg)?
            };
            Ok((n, est))
        })
        .collect()
}
