//! Langevin dynamics and the semilinear stochastic heat equation.
//!
//! Overdamped: `dq = -∇V dt + √(2kT) dW`. Underdamped: `dq = p dt`,
//! `dp = (-∇V - γp) dt + √(2γkT) dW`. Both leave `exp(-V/kT)` invariant.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::gibbs::{self, GibbsSpec, McmcConfig, PolyTerm, PotentialSpec, StiffnessMatrix};
use crate::quadrature;
use crate::rng::{self, Rng};
use crate::stats::{self, EstimateWithError, Method};

/// Largest allowed `dt·|V''|` along the visited path.
pub const STABILITY_LIMIT: f64 = 0.5;
const DEFAULT_DIVERGENCE_BOUND: f64 = 1e8;

/// Separable potential `V(q) = Σ_i v(q_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LangevinPotential {
    /// `v(z) = stiffness·z²/2`.
    Quadratic { stiffness: f64 },
    /// `v(z) = a·z⁴/4 - b·z²/2`.
    DoubleWell { a: f64, b: f64 },
    /// `v(z) = Σ_m c_m z^m`.
    Polynomial { coefficients: Vec<f64> },
}

impl LangevinPotential {
    pub fn value(&self, z: f64) -> f64 {
        match self {
            LangevinPotential::Quadratic { stiffness } => 0.5 * stiffness * z * z,
            LangevinPotential::DoubleWell { a, b } => 0.25 * a * z.powi(4) - 0.5 * b * z * z,
            LangevinPotential::Polynomial { coefficients } => coefficients.iter().rev().fold(0.0, |acc, c| acc * z + c),
        }
    }

    pub fn derivative(&self, z: f64) -> f64 {
        match self {
            LangevinPotential::Quadratic { stiffness } => stiffness * z,
            LangevinPotential::DoubleWell { a, b } => a * z.powi(3) - b * z,
            LangevinPotential::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (m, c)| acc * z + m as f64 * c),
        }
    }

    pub fn second_derivative(&self, z: f64) -> f64 {
        match self {
            LangevinPotential::Quadratic { stiffness } => *stiffness,
            LangevinPotential::DoubleWell { a, b } => 3.0 * a * z * z - b,
            LangevinPotential::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(2)
                .map(|(m, c)| (m * (m - 1)) as f64 * c * z.powi(m as i32 - 2))
                .sum(),
        }
    }

    /// `v → ∞` as `|z| → ∞`.
    pub fn is_confining(&self) -> bool {
        match self {
            LangevinPotential::Quadratic { stiffness } => *stiffness > 0.0,
            LangevinPotential::DoubleWell { a, .. } => *a > 0.0,
            LangevinPotential::Polynomial { coefficients } => {
                match coefficients.iter().rposition(|&c| c != 0.0) {
                    Some(deg) => deg >= 2 && deg % 2 == 0 && coefficients[deg] > 0.0,
                    None => false,
                }
            }
        }
    }
}

fn default_gamma() -> f64 {
    1.0
}
fn default_bound() -> f64 {
    DEFAULT_DIVERGENCE_BOUND
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LangevinSpec {
    pub potential: LangevinPotential,
    pub kt: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub dim: usize,
    #[serde(default = "default_bound")]
    pub divergence_bound: f64,
}

impl LangevinSpec {
    pub fn new(potential: LangevinPotential, kt: f64, dim: usize) -> Result<Self> {
        let s = Self {
            potential,
            kt,
            gamma: 1.0,
            dim,
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        self.gamma = gamma;
        self.validate()?;
        Ok(self)
    }

    /// `kT = 0` is accepted for deterministic gradient flow.
    pub fn validate(&self) -> Result<()> {
        if !(self.kt >= 0.0 && self.kt.is_finite()) {
            return Err(Error::validation("kT must be non-negative and finite"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::validation("gamma must be positive"));
        }
        if self.dim == 0 {
            return Err(Error::validation("dimension must be at least 1"));
        }
        if !(self.divergence_bound > 0.0) {
            return Err(Error::validation("divergence bound must be positive"));
        }
        Ok(())
    }

    fn require_equilibrium(&self) -> Result<()> {
        if !(self.kt > 0.0) {
            return Err(Error::validation("equilibrium checks need kT > 0"));
        }
        if !self.potential.is_confining() {
            return Err(Error::validation("equilibrium checks need a confining potential"));
        }
        Ok(())
    }

    /// Normalised one-dimensional Boltzmann density `exp(-v/kT)/Z`.
    pub fn boltzmann_reference(&self) -> Result<BoltzmannReference> {
        self.require_equilibrium()?;
        let logw = |z: f64| -self.potential.value(z) / self.kt;
        let r = quadrature::effective_support(logw, 60.0);
        let shift = (-4000..=4000)
            .map(|i| logw(i as f64 * r / 4000.0))
            .fold(f64::NEG_INFINITY, f64::max);
        let z = quadrature::composite_gauss(|x| (logw(x) - shift).exp(), -r, r, 400, 10);
        Ok(BoltzmannReference {
            potential: self.potential.clone(),
            kt: self.kt,
            shift,
            z,
            support: r,
        })
    }
}

/// `exp(-v/kT)/Z` with `Z` computed by Gauss–Legendre quadrature.
#[derive(Debug, Clone)]
pub struct BoltzmannReference {
    potential: LangevinPotential,
    kt: f64,
    shift: f64,
    z: f64,
    support: f64,
}

impl BoltzmannReference {
    pub fn density(&self, x: f64) -> f64 {
        (-self.potential.value(x) / self.kt - self.shift).exp() / self.z
    }

    /// Probability mass of `[lo, hi]`.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        let lo = lo.max(-self.support);
        let hi = hi.min(self.support);
        if hi <= lo {
            return 0.0;
        }
        let panels = ((hi - lo) / self.support * 100.0).ceil().max(4.0) as usize;
        quadrature::composite_gauss(|x| self.density(x), lo, hi, panels, 10)
    }

    pub fn support(&self) -> f64 {
        self.support
    }
}

fn check_state(q: &[f64], bound: f64, t: f64) -> Result<()> {
    let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !norm.is_finite() || norm > bound {
        return Err(Error::Diverged { t, norm });
    }
    Ok(())
}

fn check_stability(spec: &LangevinSpec, q: &[f64], dt: f64, t: f64) -> Result<()> {
    let worst = q
        .iter()
        .map(|&z| spec.potential.second_derivative(z).abs())
        .fold(0.0, f64::max);
    if dt * worst >= STABILITY_LIMIT {
        return Err(Error::validation(format!(
            "time step too large at t = {t}: dt·|V''| = {} ≥ {STABILITY_LIMIT}",
            dt * worst
        )));
    }
    Ok(())
}

fn step_count(t: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) || !(t >= 0.0 && t.is_finite()) {
        return Err(Error::validation("need dt > 0 and T ≥ 0"));
    }
    Ok((t / dt).round() as usize)
}

/// Euler–Maruyama for the overdamped equation. `visit(step, q)` sees every
/// state including the initial one.
pub fn overdamped_run<V: FnMut(usize, &[f64])>(
    spec: &LangevinSpec,
    q0: &[f64],
    steps: usize,
    dt: f64,
    rng: &mut Rng,
    mut visit: V,
) -> Result<Vec<f64>> {
    spec.validate()?;
    check_dim(spec.dim, q0.len())?;
    let amp = (2.0 * spec.kt * dt).sqrt();
    let mut q = q0.to_vec();
    check_stability(spec, &q, dt, 0.0)?;
    visit(0, &q);
    for n in 1..=steps {
        for x in q.iter_mut() {
            let noise = if amp > 0.0 { amp * rng::normal(rng) } else { 0.0 };
            *x += -spec.potential.derivative(*x) * dt + noise;
        }
        if n % 64 == 0 || n == steps {
            let t = n as f64 * dt;
            check_state(&q, spec.divergence_bound, t)?;
            check_stability(spec, &q, dt, t)?;
        }
        visit(n, &q);
    }
    Ok(q)
}

/// Recorded path: `states[i]` is the state at `times[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

/// Overdamped path on `[0, T]`, recording every `record_every` steps.
pub fn euler_maruyama_trajectory(
    spec: &LangevinSpec,
    q0: &[f64],
    t: f64,
    dt: f64,
    seed: u64,
    record_every: usize,
) -> Result<Trajectory> {
    let steps = step_count(t, dt)?;
    let every = record_every.max(1);
    let mut rng = rng::stream(seed, 0);
    let mut out = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
    };
    overdamped_run(spec, q0, steps, dt, &mut rng, |n, q| {
        if n % every == 0 || n == steps {
            out.times.push(n as f64 * dt);
            out.states.push(q.to_vec());
        }
    })?;
    Ok(out)
}

/// Final states of `n_paths` independent overdamped paths (stream = path index).
pub fn ensemble_endpoints(spec: &LangevinSpec, q0: &[f64], t: f64, dt: f64, n_paths: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let steps = step_count(t, dt)?;
    (0..n_paths)
        .map(|i| {
            let mut rng = rng::stream(seed, i as u64);
            overdamped_run(spec, q0, steps, dt, &mut rng, |_, _| {})
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramConfig {
    pub dt: f64,
    /// Discarded initial time.
    pub burn_in: f64,
    pub n_samples: usize,
    /// Steps between recorded samples.
    pub sample_every: usize,
    pub bins: usize,
    /// Histogram half-width; samples outside fall into the edge bins.
    pub range: f64,
    pub seed: u64,
    #[serde(default)]
    pub q0: f64,
}

impl HistogramConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.burn_in >= 0.0) || !(self.range > 0.0) {
            return Err(Error::validation("histogram config needs dt > 0, burn_in ≥ 0, range > 0"));
        }
        if self.n_samples == 0 || self.sample_every == 0 || self.bins == 0 {
            return Err(Error::validation("histogram config needs positive counts"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HistogramReport {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Reference probability per bin divided by bin width (edge bins include tails).
    pub reference: Vec<f64>,
    /// `max_i |count_i/(n·width) - reference_i|`.
    pub sup_discrepancy: f64,
    pub n_samples: usize,
    pub mean: EstimateWithError,
    pub second_moment: EstimateWithError,
    /// Fraction of samples with positive coordinate.
    pub positive_fraction: EstimateWithError,
}

impl HistogramReport {
    fn build<M: Fn(f64, f64) -> f64>(samples: &[f64], bins: usize, range: f64, mass: M) -> Self {
        let width = 2.0 * range / bins as f64;
        let bin_edges: Vec<f64> = (0..=bins).map(|i| -range + i as f64 * width).collect();
        let mut counts = vec![0u64; bins];
        for &x in samples {
            let i = ((x + range) / width).floor();
            let i = if i < 0.0 { 0 } else { (i as usize).min(bins - 1) };
            counts[i] += 1;
        }
        let reference: Vec<f64> = (0..bins)
            .map(|i| {
                let lo = if i == 0 { f64::NEG_INFINITY } else { bin_edges[i] };
                let hi = if i + 1 == bins { f64::INFINITY } else { bin_edges[i + 1] };
                mass(lo, hi) / width
            })
            .collect();
        let n = samples.len() as f64;
        let sup_discrepancy = counts
            .iter()
            .zip(&reference)
            .map(|(&c, r)| (c as f64 / (n * width) - r).abs())
            .fold(0.0, f64::max);
        let sq: Vec<f64> = samples.iter().map(|x| x * x).collect();
        let pos: Vec<f64> = samples.iter().map(|&x| if x > 0.0 { 1.0 } else { 0.0 }).collect();
        Self {
            bin_edges,
            counts,
            reference,
            sup_discrepancy,
            n_samples: samples.len(),
            mean: stats::batch_means(samples, stats::DEFAULT_BATCHES, Method::TimeAverage),
            second_moment: stats::batch_means(&sq, stats::DEFAULT_BATCHES, Method::TimeAverage),
            positive_fraction: stats::batch_means(&pos, stats::DEFAULT_BATCHES, Method::TimeAverage),
        }
    }

    /// Rows `(bin_center, count, reference)`.
    pub fn rows(&self) -> Vec<(f64, u64, f64)> {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (0.5 * (self.bin_edges[i] + self.bin_edges[i + 1]), c, self.reference[i]))
            .collect()
    }
}

/// Long overdamped run in one dimension compared with `exp(-V/kT)/Z`.
pub fn stationary_histogram_check(spec: &LangevinSpec, cfg: &HistogramConfig) -> Result<HistogramReport> {
    cfg.validate()?;
    if spec.dim != 1 {
        return Err(Error::validation("histogram check needs dim = 1"));
    }
    let reference = spec.boltzmann_reference()?;
    let burn = step_count(cfg.burn_in, cfg.dt)?;
    let steps = burn + cfg.n_samples * cfg.sample_every;
    let mut rng = rng::stream(cfg.seed, 0);
    let mut samples = Vec::with_capacity(cfg.n_samples);
    overdamped_run(spec, &[cfg.q0], steps, cfg.dt, &mut rng, |n, q| {
        if n > burn && (n - burn) % cfg.sample_every == 0 {
            samples.push(q[0]);
        }
    })?;
    Ok(HistogramReport::build(&samples, cfg.bins, cfg.range, |lo, hi| reference.mass(lo, hi)))
}

#[derive(Debug, Clone, Serialize)]
pub struct UnderdampedReport {
    pub q: HistogramReport,
    pub p: HistogramReport,
    /// `E[q·p]`, zero under the product-form equilibrium.
    pub qp_covariance: EstimateWithError,
}

/// Kinetic Langevin in one dimension, integrated with the BAOAB splitting
/// (half kick, half drift, exact Ornstein–Uhlenbeck momentum update, half
/// drift, half kick). Both marginals are compared with their Boltzmann factors.
pub fn underdamped_equilibrium_check(spec: &LangevinSpec, cfg: &HistogramConfig) -> Result<UnderdampedReport> {
    cfg.validate()?;
    spec.validate()?;
    if spec.dim != 1 {
        return Err(Error::validation("underdamped check needs dim = 1"));
    }
    let reference = spec.boltzmann_reference()?;
    let dt = cfg.dt;
    let c1 = (-spec.gamma * dt).exp();
    let c2 = (spec.kt * (1.0 - c1 * c1)).sqrt();
    let burn = step_count(cfg.burn_in, dt)?;
    let steps = burn + cfg.n_samples * cfg.sample_every;
    let mut rng = rng::stream(cfg.seed, 0);
    let (mut q, mut p) = (cfg.q0, 0.0);
    let mut f = -spec.potential.derivative(q);
    let mut qs = Vec::with_capacity(cfg.n_samples);
    let mut ps = Vec::with_capacity(cfg.n_samples);
    for n in 1..=steps {
        p += 0.5 * dt * f;
        q += 0.5 * dt * p;
        p = c1 * p + c2 * rng::normal(&mut rng);
        q += 0.5 * dt * p;
        f = -spec.potential.derivative(q);
        p += 0.5 * dt * f;
        if n % 64 == 0 {
            let t = n as f64 * dt;
            check_state(&[q, p], spec.divergence_bound, t)?;
            check_stability(spec, &[q], dt, t)?;
        }
        if n > burn && (n - burn) % cfg.sample_every == 0 {
            qs.push(q);
            ps.push(p);
        }
    }
    let kt = spec.kt;
    let p_mass = |lo: f64, hi: f64| {
        let cdf = |x: f64| {
            if x.is_infinite() {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                0.5 * (1.0 + erf(x / (2.0 * kt).sqrt()))
            }
        };
        cdf(hi) - cdf(lo)
    };
    let qp: Vec<f64> = qs.iter().zip(&ps).map(|(a, b)| a * b).collect();
    Ok(UnderdampedReport {
        q: HistogramReport::build(&qs, cfg.bins, cfg.range, |lo, hi| reference.mass(lo, hi)),
        p: HistogramReport::build(&ps, cfg.bins, cfg.range, p_mass),
        qp_covariance: stats::batch_means(&qp, stats::DEFAULT_BATCHES, Method::TimeAverage),
    })
}

/// Error function by Gauss–Legendre quadrature of its defining integral.
fn erf(x: f64) -> f64 {
    if x.abs() > 8.0 {
        return x.signum();
    }
    let v = quadrature::composite_gauss(|t| (-t * t).exp(), 0.0, x.abs(), 16, 10);
    x.signum() * 2.0 / std::f64::consts::PI.sqrt() * v
}

/// A drift term `λ·U^power` (odd power) of the stochastic heat equation.
pub type DriftTerm = PolyTerm;

/// `∂_t U = ½∂²_x U - Σ_j λ_j U^j + ξ` on `(-a, a)` with Dirichlet ends,
/// discretised on `M` interior nodes with spacing `2a/(M+1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpdeSpec {
    pub a: f64,
    pub m: usize,
    /// Entries `coef·U^power`, odd powers, `coef ≥ 0`.
    #[serde(default)]
    pub drift: Vec<DriftTerm>,
    /// Multiplier of the unit white noise; `0` switches to the deterministic heat flow.
    #[serde(default = "one_f64")]
    pub noise_amplitude: f64,
    #[serde(default = "default_bound")]
    pub divergence_bound: f64,
}

fn one_f64() -> f64 {
    1.0
}

impl SpdeSpec {
    pub fn new(a: f64, m: usize, drift: Vec<DriftTerm>) -> Result<Self> {
        let s = Self {
            a,
            m,
            drift,
            noise_amplitude: 1.0,
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::validation("half-length a must be positive"));
        }
        if self.m == 0 {
            return Err(Error::validation("need at least one interior node"));
        }
        for t in &self.drift {
            if t.power % 2 == 0 {
                return Err(Error::validation(format!("drift powers must be odd, got {}", t.power)));
            }
            if !(t.coef >= 0.0 && t.coef.is_finite()) {
                return Err(Error::validation("drift coefficients must be non-negative"));
            }
        }
        if !(self.noise_amplitude >= 0.0 && self.noise_amplitude.is_finite()) {
            return Err(Error::validation("noise amplitude must be non-negative"));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.a / (self.m as f64 + 1.0)
    }

    fn drift_value(&self, u: f64) -> f64 {
        self.drift.iter().map(|t| t.coef * u.powi(t.power as i32)).sum()
    }

    /// Eigenvalue `μ_k` of `-Δ_h` (k from 1).
    pub fn mode_eigenvalue(&self, k: usize) -> f64 {
        let dx = self.dx();
        let s = (k as f64 * std::f64::consts::PI / (2.0 * (self.m as f64 + 1.0))).sin();
        4.0 * s * s / (dx * dx)
    }

    /// Mode `k` sampled at the nodes, normalised so that `dx·Σ e_k² = 1`.
    pub fn mode_shape(&self, k: usize) -> Vec<f64> {
        let m1 = self.m as f64 + 1.0;
        let norm = (2.0 / (m1 * self.dx())).sqrt();
        (1..=self.m)
            .map(|i| norm * (k as f64 * i as f64 * std::f64::consts::PI / m1).sin())
            .collect()
    }

    /// `dx·Σ U_i e_k(i)`.
    pub fn mode_coefficient(&self, u: &[f64], k: usize) -> f64 {
        self.dx() * u.iter().zip(self.mode_shape(k)).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Stationary lattice density `∝ exp(-½Σ(ΔU)²/dx - 2dx·Σ𝒱(U_i))`,
    /// `𝒱(U) = Σ_j λ_j U^{j+1}/(j+1)`, as a Gibbs spec at `β = 1`.
    pub fn lattice_gibbs(&self) -> Result<GibbsSpec> {
        let dx = self.dx();
        let a = StiffnessMatrix::second_difference_1d(self.m, 1.0)?.scaled(1.0 / dx)?;
        let terms: Vec<PolyTerm> = self
            .drift
            .iter()
            .map(|t| PolyTerm {
                coef: 2.0 * t.coef / (t.power as f64 + 1.0),
                power: t.power + 1,
            })
            .collect();
        let pot = if terms.is_empty() {
            PotentialSpec::None
        } else {
            PotentialSpec::Polynomial { terms }
        };
        GibbsSpec::new(a, pot, 1.0, dx)
    }

    /// Exact covariance of the lattice density when the drift is at most linear.
    pub fn gaussian_covariance(&self) -> Result<Option<DMatrix<f64>>> {
        if self.drift.iter().any(|t| t.power > 1 && t.coef != 0.0) {
            return Ok(None);
        }
        let g = self.lattice_gibbs()?;
        let h = g.energy_hessian(&vec![0.0; self.m]);
        Ok(Some(
            h.cholesky()
                .ok_or(Error::NotCoercive { lambda_min: f64::NAN })?
                .inverse(),
        ))
    }
}

/// Tridiagonal solver with a constant stencil, factored once.
struct Thomas {
    c_prime: Vec<f64>,
    denom: Vec<f64>,
    off: f64,
}

impl Thomas {
    fn new(n: usize, diag: f64, off: f64) -> Self {
        let mut c_prime = vec![0.0; n];
        let mut denom = vec![0.0; n];
        for i in 0..n {
            let d = if i == 0 { diag } else { diag - off * c_prime[i - 1] };
            denom[i] = d;
            c_prime[i] = off / d;
        }
        Self { c_prime, denom, off }
    }

    fn solve(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        rhs[0] /= self.denom[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.off * rhs[i - 1]) / self.denom[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.c_prime[i] * rhs[i + 1];
        }
    }
}

/// Field path plus a calibration diagnostic.
#[derive(Debug, Clone)]
pub struct FieldTrajectory {
    pub times: Vec<f64>,
    pub fields: Vec<Vec<f64>>,
    /// Sample variance of the per-node noise increments divided by `dt/dx`.
    pub noise_variance_ratio: f64,
}

/// Semi-implicit stepping: the linear part `½Δ_h` is treated by the
/// trapezoidal rule, the polynomial drift explicitly, and the noise enters
/// as `√(dt/dx)·ξ_i` per node. `visit(step, U)` sees every state.
pub fn spde_run<V: FnMut(usize, &[f64])>(
    spec: &SpdeSpec,
    u0: &[f64],
    steps: usize,
    dt: f64,
    rng: &mut Rng,
    mut visit: V,
) -> Result<(Vec<f64>, f64)> {
    spec.validate()?;
    check_dim(spec.m, u0.len())?;
    let dx = spec.dx();
    if !(dt > 0.0) || dt > 0.25 * dx * dx * (1.0 + 1e-12) {
        return Err(Error::validation(format!(
            "dt = {dt} must lie in (0, 0.25·dx²] = (0, {}]",
            0.25 * dx * dx
        )));
    }
    let m = spec.m;
    let r = 0.25 * dt / (dx * dx);
    let solver = Thomas::new(m, 1.0 + 2.0 * r, -r);
    let amp = spec.noise_amplitude * (dt / dx).sqrt();
    let mut u = u0.to_vec();
    let mut rhs = vec![0.0; m];
    let (mut xi_sum, mut xi_sq, mut xi_n) = (0.0, 0.0, 0usize);
    visit(0, &u);
    for n in 1..=steps {
        for i in 0..m {
            let left = if i == 0 { 0.0 } else { u[i - 1] };
            let right = if i + 1 == m { 0.0 } else { u[i + 1] };
            let mut v = u[i] + r * (left - 2.0 * u[i] + right) - dt * spec.drift_value(u[i]);
            if amp > 0.0 {
                let inc = amp * rng::normal(rng);
                xi_sum += inc;
                xi_sq += inc * inc;
                xi_n += 1;
                v += inc;
            }
            rhs[i] = v;
        }
        solver.solve(&mut rhs);
        u.copy_from_slice(&rhs);
        if n % 64 == 0 || n == steps {
            check_state(&u, spec.divergence_bound, n as f64 * dt)?;
        }
        visit(n, &u);
    }
    let ratio = if xi_n > 1 {
        let mean = xi_sum / xi_n as f64;
        (xi_sq / xi_n as f64 - mean * mean) / (spec.noise_amplitude.powi(2) * dt / dx)
    } else {
        f64::NAN
    };
    Ok((u, ratio))
}

pub fn spde_evolve(spec: &SpdeSpec, u0: &[f64], t: f64, dt: f64, seed: u64, record_every: usize) -> Result<FieldTrajectory> {
    let steps = step_count(t, dt)?;
    let every = record_every.max(1);
    let mut rng = rng::stream(seed, 0);
    let mut times = Vec::new();
    let mut fields = Vec::new();
    let (_, ratio) = spde_run(spec, u0, steps, dt, &mut rng, |n, u| {
        if n % every == 0 || n == steps {
            times.push(n as f64 * dt);
            fields.push(u.to_vec());
        }
    })?;
    Ok(FieldTrajectory {
        times,
        fields,
        noise_variance_ratio: ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpdeRunConfig {
    pub dt: f64,
    pub burn_in: f64,
    pub n_samples: usize,
    pub sample_every: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentComparison {
    /// Zero-based node index.
    pub node: usize,
    pub sde_m2: EstimateWithError,
    pub reference_m2: EstimateWithError,
    pub sde_m4: EstimateWithError,
    pub reference_m4: EstimateWithError,
}

impl MomentComparison {
    pub fn max_z(&self) -> f64 {
        self.sde_m2
            .z_score(&self.reference_m2)
            .abs()
            .max(self.sde_m4.z_score(&self.reference_m4).abs())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeVariance {
    pub k: usize,
    pub sampled: EstimateWithError,
    pub exact: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpdeStationaryReport {
    pub probes: Vec<MomentComparison>,
    /// Mode variances against `1/μ_k` when the drift vanishes.
    pub modes: Vec<ModeVariance>,
    pub noise_variance_ratio: f64,
    pub max_z: f64,
}

/// Long-run SPDE statistics at three probe nodes (quarter, middle,
/// three-quarter) against the lattice density; the reference is exact for
/// at most linear drift and MCMC otherwise.
pub fn spde_stationary_check(spec: &SpdeSpec, run: &SpdeRunConfig, mcmc: &McmcConfig, n_modes: usize) -> Result<SpdeStationaryReport> {
    let m = spec.m;
    let probes = [m / 4, m / 2, (3 * m) / 4];
    let burn = step_count(run.burn_in, run.dt)?;
    let steps = burn + run.n_samples * run.sample_every.max(1);
    let every = run.sample_every.max(1);
    let mut rng = rng::stream(run.seed, 0);
    let mut samples: Vec<Vec<f64>> = Vec::with_capacity(run.n_samples);
    let (_, ratio) = spde_run(spec, &vec![0.0; m], steps, run.dt, &mut rng, |n, u| {
        if n > burn && (n - burn) % every == 0 {
            samples.push(u.to_vec());
        }
    })?;
    let moment = |draws: &[Vec<f64>], i: usize, p: i32, method| {
        let xs: Vec<f64> = draws.iter().map(|u| u[i].powi(p)).collect();
        stats::batch_means(&xs, stats::DEFAULT_BATCHES, method)
    };

    let cov = spec.gaussian_covariance()?;
    let mcmc_draws = match cov {
        Some(_) => None,
        None => Some(gibbs::mcmc_sample(&spec.lattice_gibbs()?, mcmc)?.draws),
    };
    let probes: Vec<MomentComparison> = probes
        .iter()
        .map(|&i| {
            let (reference_m2, reference_m4) = match (&cov, &mcmc_draws) {
                (Some(c), _) => {
                    let v = c[(i, i)];
                    (EstimateWithError::exact(v), EstimateWithError::exact(3.0 * v * v))
                }
                (None, Some(d)) => (moment(d, i, 2, Method::Mcmc), moment(d, i, 4, Method::Mcmc)),
                (None, None) => unreachable!(),
            };
            MomentComparison {
                node: i,
                sde_m2: moment(&samples, i, 2, Method::TimeAverage),
                reference_m2,
                sde_m4: moment(&samples, i, 4, Method::TimeAverage),
                reference_m4,
            }
        })
        .collect();

    let modes = if spec.drift.iter().all(|t| t.coef == 0.0) {
        (1..=n_modes.min(m))
            .map(|k| {
                let shape = DVector::from_vec(spec.mode_shape(k));
                let dx = spec.dx();
                let c2: Vec<f64> = samples
                    .iter()
                    .map(|u| (dx * DVector::from_column_slice(u).dot(&shape)).powi(2))
                    .collect();
                ModeVariance {
                    k,
                    sampled: stats::batch_means(&c2, stats::DEFAULT_BATCHES, Method::TimeAverage),
                    exact: spec.noise_amplitude.powi(2) / spec.mode_eigenvalue(k),
                }
            })
            .collect()
    } else {
        Vec::new()
    };
    let max_z = probes
        .iter()
        .map(MomentComparison::max_z)
        .chain(
            modes
                .iter()
                .map(|mv| mv.sampled.z_score(&EstimateWithError::exact(mv.exact)).abs()),
        )
        .fold(0.0, f64::max);
    Ok(SpdeStationaryReport {
        probes,
        modes,
        noise_variance_ratio: ratio,
        max_z,
    })
}
