//! Low-temperature structure of the Gibbs measure: the stationary point of
//! the configuration energy and the first-order Laplace expansion.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gibbs::{self, GibbsSpec, McmcConfig};
use crate::observable::ObservableSpec;
use crate::stats::{self, EstimateWithError};

/// Tolerated deviation of the fitted log-log slope from -1.
pub const CONCENTRATION_SLOPE_TOL: f64 = 0.15;

#[derive(Debug, Clone, Serialize)]
pub struct StationarySolution {
    pub phi_star: Vec<f64>,
    pub residual_norm: f64,
    pub newton_iters: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExpansionResult {
    pub zeroth: f64,
    pub first_order: f64,
    pub beta: f64,
}

impl ExpansionResult {
    pub fn total(&self) -> f64 {
        self.zeroth + self.first_order
    }
}

/// Damped Newton iteration on `Aφ + dx·G'(φ) = 0` from `φ = 0`; the step is
/// halved until the residual norm decreases.
pub fn solve_stationary(spec: &GibbsSpec, tol: f64, max_iter: usize) -> Result<StationarySolution> {
    if !(tol > 0.0) {
        return Err(Error::validation("tolerance must be positive"));
    }
    let n = spec.dim();
    let mut phi = vec![0.0; n];
    let mut r = spec.energy_gradient(&phi);
    let mut rn = r.norm();
    let mut iters = 0;
    while rn > tol {
        if iters == max_iter {
            return Err(Error::NonConvergence {
                what: "stationary Newton iteration",
                iterations: iters,
                residual: rn,
            });
        }
        let h = spec.energy_hessian(&phi);
        let step = h.lu().solve(&(-&r)).ok_or(Error::NonConvergence {
            what: "stationary Newton iteration (singular Jacobian)",
            iterations: iters,
            residual: rn,
        })?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = phi.iter().zip(step.iter()).map(|(p, s)| p + lambda * s).collect();
            let rt = spec.energy_gradient(&trial);
            let rtn = rt.norm();
            if rtn < rn || lambda < 1e-12 {
                phi = trial;
                r = rt;
                rn = rtn;
                break;
            }
            lambda *= 0.5;
        }
        iters += 1;
    }
    Ok(StationarySolution {
        phi_star: phi,
        residual_norm: rn,
        newton_iters: iters,
    })
}

fn observable_hessian(spec: &GibbsSpec, f: &ObservableSpec, q: &[f64]) -> DMatrix<f64> {
    f.hessian(q, spec.dx()).unwrap_or_else(|| spec.energy_hessian(q))
}

fn observable_value(spec: &GibbsSpec, f: &ObservableSpec, q: &[f64]) -> f64 {
    f.evaluate_with(q, spec.dx(), || spec.energy(q))
}

/// `F(φ*)` and `(1/2β)·Tr[∇²F(φ*)·(A + ∇²G(φ*))⁻¹]`.
pub fn laplace_expansion(spec: &GibbsSpec, f: &ObservableSpec, beta: f64) -> Result<ExpansionResult> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::validation("beta must be positive"));
    }
    f.validate(spec.dim())?;
    let sol = solve_stationary(spec, 1e-12, 100)?;
    laplace_expansion_at(spec, f, beta, &sol.phi_star)
}

pub fn laplace_expansion_at(spec: &GibbsSpec, f: &ObservableSpec, beta: f64, phi: &[f64]) -> Result<ExpansionResult> {
    let h = spec.energy_hessian(phi);
    let chol = Cholesky::new(h)
        .ok_or_else(|| Error::ExpansionInvalid("Hessian at the stationary point is not positive definite".into()))?;
    let hf = observable_hessian(spec, f, phi);
    let inv = chol.inverse();
    let trace = (&hf * &inv).trace();
    Ok(ExpansionResult {
        zeroth: observable_value(spec, f, phi),
        first_order: trace / (2.0 * beta),
        beta,
    })
}

/// One row of the expansion-accuracy table.
#[derive(Debug, Clone, Serialize)]
pub struct ExpansionRow {
    pub beta: f64,
    pub sampled: EstimateWithError,
    pub expansion: ExpansionResult,
    /// `|sampled - zeroth - first_order|`.
    pub error: f64,
}

/// Samples `E[F]` at each β and compares with the two-term expansion.
/// Stream `i` of `cfg.seed` is used for the `i`-th β.
pub fn expansion_table(spec: &GibbsSpec, f: &ObservableSpec, betas: &[f64], cfg: &McmcConfig) -> Result<Vec<ExpansionRow>> {
    let sol = solve_stationary(spec, 1e-12, 100)?;
    betas
        .iter()
        .enumerate()
        .map(|(i, &beta)| {
            let at = spec.with_beta(beta)?;
            let sampled = gibbs::expectation(&at, f, &cfg.with_stream(cfg.stream + i as u64))?;
            let expansion = laplace_expansion_at(&at, f, beta, &sol.phi_star)?;
            Ok(ExpansionRow {
                beta,
                error: (sampled.mean - expansion.total()).abs(),
                sampled,
                expansion,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationRow {
    pub beta: f64,
    /// `E‖q - φ*‖²`.
    pub mean_sq_distance: EstimateWithError,
    /// Sample mean of `Σ_i q_i`, which vanishes for symmetric specs.
    pub mean_sum: EstimateWithError,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationReport {
    pub phi_star: Vec<f64>,
    pub rows: Vec<ConcentrationRow>,
    /// Least-squares slope of `log E‖q - φ*‖²` against `log β`.
    pub slope: f64,
    pub passed: bool,
}

/// Checks that the measure concentrates on `φ*` at rate `1/β`.
pub fn concentration_check(spec: &GibbsSpec, betas: &[f64], cfg: &McmcConfig) -> Result<ConcentrationReport> {
    if betas.len() < 2 {
        return Err(Error::validation("concentration check needs at least two temperatures"));
    }
    let sol = solve_stationary(spec, 1e-12, 100)?;
    let phi = DVector::from_column_slice(&sol.phi_star);
    let mut rows = Vec::with_capacity(betas.len());
    for (i, &beta) in betas.iter().enumerate() {
        let at = spec.with_beta(beta)?;
        let batch = gibbs::mcmc_sample(&at, &cfg.with_stream(cfg.stream + i as u64))?;
        let d2: Vec<f64> = batch
            .draws
            .iter()
            .map(|q| (DVector::from_column_slice(q) - &phi).norm_squared())
            .collect();
        let sums: Vec<f64> = batch.draws.iter().map(|q| q.iter().sum()).collect();
        rows.push(ConcentrationRow {
            beta,
            mean_sq_distance: stats::batch_means(&d2, stats::DEFAULT_BATCHES, stats::Method::Mcmc),
            mean_sum: stats::batch_means(&sums, stats::DEFAULT_BATCHES, stats::Method::Mcmc),
        });
    }
    let lx: Vec<f64> = rows.iter().map(|r| r.beta.ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.mean_sq_distance.mean.ln()).collect();
    let slope = stats::linear_slope(&lx, &ly);
    Ok(ConcentrationReport {
        phi_star: sol.phi_star,
        passed: (slope + 1.0).abs() <= CONCENTRATION_SLOPE_TOL,
        rows,
        slope,
    })
}
