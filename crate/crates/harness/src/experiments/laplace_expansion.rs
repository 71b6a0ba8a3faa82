//! Low-temperature expansion of Gibbs expectations about the minimiser.
//!
//! Artifacts:
//! * `expansion.csv`: `beta, mcmc_mean, mcmc_stderr, quadrature, expansion, mcmc_error, quadrature_error`
//! * `concentration.csv`: `case, beta, mean_sq_distance, stderr`

use ergokit_core::chain::ChainParams;
use ergokit_core::gibbs::{expectation_quadrature, GibbsSpec, McmcConfig, PotentialSpec, StiffnessMatrix};
use ergokit_core::io::Csv;
use ergokit_core::stationary::{concentration_check, expansion_table, laplace_expansion, solve_stationary};
use ergokit_core::{EstimateWithError, Method, ObservableSpec};
use nalgebra::DMatrix;
use serde::Deserialize;

use super::{nonzero, positive, ratio};
use crate::{Context, HarnessError, Recorder};

/// Error ratio per doubling of β: 4 ± 30%.
const RATIO_BAND: (f64, f64) = (2.8, 5.2);
const Z_MAX: f64 = 3.0;
const EXACT_TOL: f64 = 1e-12;
const SOLVER_TOL: f64 = 1e-12;
const QUADRATURE_TOL: f64 = 1e-12;
const SLOPE_TOL: f64 = ergokit_core::stationary::CONCENTRATION_SLOPE_TOL;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// One-site stiffness `A₀`.
    pub a0: f64,
    /// Quartic coupling: the potential is `g·q⁴/4`.
    pub g: f64,
    pub betas: Vec<f64>,
    pub samples: usize,
    pub burn_in: usize,
    /// Temperatures of the concentration check.
    pub concentration_betas: Vec<f64>,
    pub concentration_samples: usize,
    /// Sites of the Gaussian chain used for exactness checks.
    pub gaussian_sites: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            a0: 1.0,
            g: 1.0,
            betas: vec![10.0, 20.0, 40.0],
            samples: 8_000_000,
            burn_in: 20_000,
            concentration_betas: vec![40.0, 80.0, 160.0],
            concentration_samples: 1_000_000,
            gaussian_sites: 4,
        }
    }
}

impl super::Params for Params {
    fn check(&self) -> Result<(), HarnessError> {
        positive("a0", self.a0)?;
        positive("g", self.g)?;
        nonzero("samples", self.samples)?;
        nonzero("concentration_samples", self.concentration_samples)?;
        nonzero("gaussian_sites", self.gaussian_sites)?;
        for (name, bs) in [("betas", &self.betas), ("concentration_betas", &self.concentration_betas)] {
            if bs.len() < 2 || bs.iter().any(|b| !(*b > 0.0)) {
                return Err(HarnessError::Config(format!("{name} needs at least two positive values")));
            }
        }
        Ok(())
    }
}

pub fn run(p: &Params, seed: u64, rec: &mut Recorder) -> Result<(), HarnessError> {
    let a = StiffnessMatrix::new(DMatrix::from_element(1, 1, p.a0)).context("stiffness")?;
    let spec = GibbsSpec::new(a, PotentialSpec::polynomial_even(p.g, 2), p.betas[0], 1.0).context("quartic spec")?;
    let sol = solve_stationary(&spec, SOLVER_TOL, 100).context("stationary point")?;
    rec.at_most("stationary_residual", sol.residual_norm, SOLVER_TOL, format!("{} Newton steps", sol.newton_iters));

    let f = ObservableSpec::SiteSquare { site: 0 };
    let cfg = McmcConfig::new(p.samples, p.burn_in, seed);
    let rows = expansion_table(&spec, &f, &p.betas, &cfg).context("expansion table")?;
    let mut csv = Csv::new(&[
        "beta",
        "mcmc_mean",
        "mcmc_stderr",
        "quadrature",
        "expansion",
        "mcmc_error",
        "quadrature_error",
    ]);
    let mut quad_errors = Vec::new();
    for r in &rows {
        let at = spec.with_beta(r.beta).context("spec")?;
        let quad = expectation_quadrature(&at, &f, QUADRATURE_TOL).context("quadrature")?;
        let qerr = (quad.mean - r.expansion.total()).abs();
        quad_errors.push(qerr);
        csv.row(&[
            r.beta.into(),
            r.sampled.mean.into(),
            r.sampled.stderr.into(),
            quad.mean.into(),
            r.expansion.total().into(),
            r.error.into(),
            qerr.into(),
        ]);
        rec.at_most(
            format!("first_order_beta{}", r.beta),
            (r.expansion.total() - 1.0 / (r.beta * p.a0)).abs(),
            EXACT_TOL,
            "two-term expansion is 1/(βA₀)",
        );
        rec.agree(format!("mcmc_vs_quadrature_beta{}", r.beta), &r.sampled, &quad, Z_MAX);
    }
    rec.artifact("expansion.csv", csv);
    for (i, w) in rows.windows(2).enumerate() {
        rec.within(
            format!("mcmc_error_ratio_beta{}", w[0].beta),
            ratio(w[0].error, w[1].error),
            RATIO_BAND.0,
            RATIO_BAND.1,
            format!("|E - 1/β|: {:e} → {:e}", w[0].error, w[1].error),
        );
        rec.within(
            format!("quadrature_error_ratio_beta{}", w[0].beta),
            ratio(quad_errors[i], quad_errors[i + 1]),
            RATIO_BAND.0,
            RATIO_BAND.1,
            "same ratio with the quadrature oracle",
        );
    }

    gaussian(p, seed, rec)?;
    concentration(p, &spec, seed, rec)
}

fn gaussian_chain(p: &Params, beta: f64) -> Result<GibbsSpec, HarnessError> {
    let prm = ChainParams::new(p.gaussian_sites, 1.0, 0.0, 1)
        .and_then(|c| c.with_beta(beta))
        .context("chain")?;
    GibbsSpec::from_chain(&prm).context("Gaussian spec")
}

/// For a Gaussian measure and quadratic `F` the expansion is exact.
fn gaussian(p: &Params, _seed: u64, rec: &mut Recorder) -> Result<(), HarnessError> {
    let norm2 = ObservableSpec::CustomPolynomial {
        coefficients: vec![0.0, 0.0, 1.0],
        site: None,
    };
    let mut worst: f64 = 0.0;
    for &beta in &p.betas {
        let spec = gaussian_chain(p, beta)?;
        let e = laplace_expansion(&spec, &norm2, beta).context("Gaussian expansion")?;
        let exact = spec.gaussian_covariance().trace();
        worst = worst.max((e.total() - exact).abs() / exact);
    }
    rec.at_most("gaussian_exactness", worst, EXACT_TOL, "expansion vs Tr((βA)⁻¹), relative");
    Ok(())
}

fn concentration(p: &Params, quartic: &GibbsSpec, seed: u64, rec: &mut Recorder) -> Result<(), HarnessError> {
    let mut csv = Csv::new(&["case", "beta", "mean_sq_distance", "stderr"]);
    let cfg = McmcConfig::new(p.concentration_samples, p.burn_in, seed).with_stream(50);
    let gauss = gaussian_chain(p, p.concentration_betas[0])?;
    for (name, spec) in [("quartic", quartic), ("gaussian", &gauss)] {
        let r = concentration_check(spec, &p.concentration_betas, &cfg).context("concentration")?;
        for row in &r.rows {
            csv.row(&[
                name.into(),
                row.beta.into(),
                row.mean_sq_distance.mean.into(),
                row.mean_sq_distance.stderr.into(),
            ]);
            rec.agree(
                format!("{name}_symmetric_mean_beta{}", row.beta),
                &row.mean_sum,
                &EstimateWithError::exact(0.0),
                Z_MAX,
            );
        }
        rec.within(
            format!("{name}_concentration_slope"),
            r.slope,
            -1.0 - SLOPE_TOL,
            -1.0 + SLOPE_TOL,
            "log-log slope of E‖q - φ*‖² against β",
        );
        if name == "gaussian" {
            // doubling β halves E‖q‖²; exact trace as a second reference
            for w in r.rows.windows(2) {
                let (x, y) = (&w[0].mean_sq_distance, &w[1].mean_sq_distance);
                let diff = EstimateWithError {
                    mean: x.mean * w[0].beta / w[1].beta - y.mean,
                    stderr: (x.stderr * w[0].beta / w[1].beta).hypot(y.stderr),
                    n_effective: x.n_effective.min(y.n_effective),
                    method: Method::Mcmc,
                };
                rec.agree(
                    format!("gaussian_halving_beta{}", w[0].beta),
                    &diff,
                    &EstimateWithError::exact(0.0),
                    Z_MAX,
                );
            }
            for row in &r.rows {
                let exact = gaussian_chain(p, row.beta)?.gaussian_covariance().trace();
                rec.agree(
                    format!("gaussian_trace_beta{}", row.beta),
                    &row.mean_sq_distance,
                    &EstimateWithError::exact(exact),
                    Z_MAX,
                );
            }
        }
    }
    rec.artifact("concentration.csv", csv);
    Ok(())
}
