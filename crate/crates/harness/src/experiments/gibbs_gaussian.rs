//! The Metropolis sampler against exact Gaussian covariances and
//! one-dimensional quadrature, plus the Lipschitz reweighting checks.
//!
//! Artifacts:
//! * `covariance_n{N}.csv`: `i, j, sampled, stderr, exact, z`
//! * `quadrature.csv`: `observable, mcmc_mean, mcmc_stderr, quadrature, z`
//! * `lipschitz.csv`: `function, mean_weight, stderr, bound, exact`
//! * `continuum.csv`: `n, variance_at_origin, bridge_variance`

use ergokit_core::chain::ChainParams;
use ergokit_core::gibbs::{
    self, coercivity_constant, expectation_quadrature, lipschitz_weight_check, GibbsSpec, LipschitzFn, McmcConfig,
    PotentialSpec, StiffnessMatrix,
};
use ergokit_core::io::Csv;
use ergokit_core::stats::{self, Method};
use ergokit_core::{rng, EstimateWithError, ObservableSpec};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Deserialize;

use super::{nonzero, positive};
use crate::{Context, HarnessError, Recorder};

const Z_MAX: f64 = 3.0;
const EXACT_TOL: f64 = 1e-12;
const QUADRATURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub beta: f64,
    /// Draws for each covariance test.
    pub covariance_samples: usize,
    pub burn_in: usize,
    /// Chain size of the larger covariance test (half-length 1).
    pub chain_sites: usize,
    /// Draws for the quartic comparison with quadrature.
    pub quartic_samples: usize,
    /// Exact Gaussian draws for the Lipschitz checks.
    pub lipschitz_samples: usize,
    /// Even chain sizes for the continuum probe.
    pub continuum_ns: Vec<usize>,
    /// Random pairs for the detailed-balance identity.
    pub balance_pairs: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            beta: 1.0,
            covariance_samples: 400_000,
            burn_in: 20_000,
            chain_sites: 16,
            quartic_samples: 400_000,
            lipschitz_samples: 200_000,
            continuum_ns: vec![8, 16, 32, 64],
            balance_pairs: 1000,
        }
    }
}

impl super::Params for Params {
    fn check(&self) -> Result<(), HarnessError> {
        positive("beta", self.beta)?;
        nonzero("covariance_samples", self.covariance_samples)?;
        nonzero("chain_sites", self.chain_sites)?;
        nonzero("quartic_samples", self.quartic_samples)?;
        nonzero("lipschitz_samples", self.lipschitz_samples)?;
        if self.continuum_ns.iter().any(|n| n % 2 != 0 || *n == 0) {
            return Err(HarnessError::Config("continuum_ns must be positive and even".into()));
        }
        Ok(())
    }
}

fn covariance_test(
    name: &str,
    spec: &GibbsSpec,
    p: &Params,
    seed: u64,
    stream: u64,
    rec: &mut Recorder,
) -> Result<(), HarnessError> {
    let cfg = McmcConfig::new(p.covariance_samples, p.burn_in, seed).with_stream(stream);
    let batch = gibbs::mcmc_sample(spec, &cfg).context("covariance sampling")?;
    let exact = spec.gaussian_covariance();
    let n = spec.dim();
    // the mean is zero by symmetry, so E[q_i q_j] is the covariance
    let entries: Vec<(usize, usize, EstimateWithError)> = (0..n)
        .flat_map(|i| (i..n).map(move |j| (i, j)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(i, j)| {
            let xs: Vec<f64> = batch.draws.iter().map(|q| q[i] * q[j]).collect();
            (i, j, stats::batch_means(&xs, stats::DEFAULT_BATCHES, Method::Mcmc))
        })
        .collect();
    let mut csv = Csv::new(&["i", "j", "sampled", "stderr", "exact", "z"]);
    let mut worst: f64 = 0.0;
    let mut outside = 0;
    for (i, j, e) in &entries {
        let z = e.z_score(&EstimateWithError::exact(exact[(*i, *j)]));
        worst = worst.max(z);
        if z > Z_MAX {
            outside += 1;
        }
        csv.row(&[(*i).into(), (*j).into(), e.mean.into(), e.stderr.into(), exact[(*i, *j)].into(), z.into()]);
    }
    rec.artifact(&format!("covariance_{name}.csv"), csv);
    rec.at_most(
        format!("covariance_{name}"),
        worst,
        Z_MAX,
        format!(
            "max |z| over {} entries, {outside} outside; acceptance {:.3}",
            entries.len(),
            batch.acceptance_rate
        ),
    );
    Ok(())
}

pub fn run(p: &Params, seed: u64, rec: &mut Recorder) -> Result<(), HarnessError> {
    // two sites: (βA)⁻¹ = [[2, 1], [1, 2]]/(3β)
    let a2 = StiffnessMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0])).context("stiffness")?;
    rec.at_most(
        "coercivity_n2",
        (coercivity_constant(&a2).context("coercivity")? - 1.0).abs(),
        EXACT_TOL,
        "smallest eigenvalue of [[2,-1],[-1,2]] is 1",
    );
    let s2 = GibbsSpec::new(a2, PotentialSpec::None, p.beta, 1.0).context("Gibbs spec")?;
    let c2 = s2.gaussian_covariance();
    let analytic = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]) / (3.0 * p.beta);
    rec.at_most("covariance_n2_analytic", (&c2 - &analytic).amax(), EXACT_TOL, "Var(q₁) = 2/(3β)");
    covariance_test("n2", &s2, p, seed, 0, rec)?;

    let prm = ChainParams::new(p.chain_sites, 1.0, 0.0, 1)
        .and_then(|c| c.with_beta(p.beta))
        .context("chain")?;
    let s16 = GibbsSpec::from_chain(&prm).context("Gibbs spec")?;
    covariance_test(&format!("n{}", p.chain_sites), &s16, p, seed, 1, rec)?;

    detailed_balance(p, &s16, seed, rec)?;
    quartic(p, seed, rec)?;
    lipschitz(p, seed, rec)?;
    continuum(p, seed, rec)
}

/// `π(x)·α(x→y) = π(y)·α(y→x)` for the Metropolis kernel.
fn detailed_balance(p: &Params, spec: &GibbsSpec, seed: u64, rec: &mut Recorder) -> Result<(), HarnessError> {
    let quartic = GibbsSpec::new(
        spec.stiffness().clone(),
        PotentialSpec::polynomial_even(1.0, 2),
        spec.beta(),
        spec.dx(),
    )
    .context("quartic spec")?;
    let mut r = rng::stream(seed, 1 << 33);
    let mut worst: f64 = 0.0;
    for _ in 0..p.balance_pairs {
        let x = rng::normal_vec(&mut r, spec.dim());
        let y: Vec<f64> = x.iter().map(|v| v + 0.3 * rng::normal(&mut r)).collect();
        let lx = gibbs::log_density(&quartic, &x).context("density")?;
        let ly = gibbs::log_density(&quartic, &y).context("density")?;
        let fwd = lx + gibbs::metropolis_acceptance(&quartic, &x, &y).context("acceptance")?.ln();
        let bwd = ly + gibbs::metropolis_acceptance(&quartic, &y, &x).context("acceptance")?.ln();
        worst = worst.max((fwd - bwd).abs() / lx.abs().max(ly.abs()).max(1.0));
    }
    rec.at_most("detailed_balance", worst, EXACT_TOL, "relative log-flux asymmetry");
    Ok(())
}

fn quartic(p: &Params, seed: u64, rec: &mut Recorder) -> Result<(), HarnessError> {
    let a1 = StiffnessMatrix::new(DMatrix::from_element(1, 1, 1.0)).context("stiffness")?;
    let spec = GibbsSpec::new(a1, PotentialSpec::polynomial_even(1.0, 2), p.beta, 1.0).context("quartic spec")?;
    let observables = [
        ("q2", ObservableSpec::SiteSquare { site: 0 }),
        (
            "q4",
            ObservableSpec::CustomPolynomial {
                coefficients: vec![0.0, 0.0, 0.0, 0.0, 1.0],
                site: Some(0),
            },
        ),
        ("energy", ObservableSpec::Energy),
    ];
    let cfg = McmcConfig::new(p.quartic_samples, p.burn_in, seed).with_stream(2);
    let batch = gibbs::mcmc_sample(&spec, &cfg).context("quartic sampling")?;
    let mut csv = Csv::new(&["observable", "mcmc_mean", "mcmc_stderr", "quadrature", "z"]);
    for (name, f) in &observables {
        let mc = gibbs::estimate_from_draws(&spec, f, &batch.draws);
        let quad = expectation_quadrature(&spec, f, QUADRATURE_TOL).context("quadrature")?;
        csv.row(&[(*name).into(), mc.mean.into(), mc.stderr.into(), quad.mean.into(), mc.z_score(&quad).into()]);
        rec.agree(format!("quartic_{name}"), &mc, &quad, Z_MAX);
    }
    rec.artifact("quadrature.csv", csv);
    Ok(())
}

fn lipschitz(p: &Params, seed: u64, rec: &mut Recorder) -> Result<(), HarnessError> {
    let prm = ChainParams::new(8, 1.0, 0.0, 1)
        .and_then(|c| c.with_beta(p.beta))
        .context("chain")?;
    let a = StiffnessMatrix::chain(&prm);
    let cases = [
        ("sine", LipschitzFn::Sine { amplitude: 1.5, frequency: 2.0 }),
        ("linear", LipschitzFn::Linear { slope: 3.0 }),
    ];
    let mut csv = Csv::new(&["function", "mean_weight", "stderr", "bound", "exact"]);
    for (i, (name, function)) in cases.iter().enumerate() {
        let pot = PotentialSpec::Lipschitz {
            function: *function,
            lipschitz_constant: function.sharp_constant(),
        };
        let spec = GibbsSpec::new(a.clone(), pot, p.beta, prm.dx()).context("Lipschitz spec")?;
        let cfg = McmcConfig::new(p.lipschitz_samples, 0, seed).with_stream(10 + i as u64);
        let r = lipschitz_weight_check(&spec, &cfg).context("Lipschitz check")?;
        let w = r.gaussian_mean_weight;
        csv.row(&[
            (*name).into(),
            w.mean.into(),
            w.stderr.into(),
            r.analytic_bound.into(),
            r.exact_linear_value.unwrap_or(f64::NAN).into(),
        ]);
        rec.flag(
            format!("lipschitz_{name}_pairs"),
            r.weight_in_bounds == 1.0,
            format!("fraction of pairs within L: {}", r.weight_in_bounds),
        );
        rec.flag(
            format!("lipschitz_{name}_finite"),
            w.mean.is_finite() && w.mean <= r.analytic_bound,
            format!("mean weight {} vs bound {}", w.mean, r.analytic_bound),
        );
        if let Some(exact) = r.exact_linear_value {
            rec.agree(format!("lipschitz_{name}_mgf"), &w, &EstimateWithError::exact(exact), Z_MAX);
        }
    }
    rec.artifact("lipschitz.csv", csv);
    Ok(())
}

/// Free field: the variance at the origin is the discrete Brownian-bridge value.
fn continuum(p: &Params, seed: u64, rec: &mut Recorder) -> Result<(), HarnessError> {
    let cfg = McmcConfig::new(1, 0, seed);
    let rows = gibbs::continuum_probe(&p.continuum_ns, 1.0, 0.0, 1, p.beta, &cfg).context("continuum probe")?;
    let mut csv = Csv::new(&["n", "variance_at_origin", "bridge_variance"]);
    let mut worst: f64 = 0.0;
    let mut prev_gap = f64::INFINITY;
    let mut monotone = true;
    for (n, e) in &rows {
        let np1 = *n as f64 + 1.0;
        let j = (*n / 2) as f64;
        let dx = 2.0 / *n as f64;
        let bridge = j * (np1 - j) * dx / np1 / p.beta;
        worst = worst.max((e.mean - bridge).abs());
        let gap = (e.mean - 0.5 / p.beta).abs();
        monotone &= gap < prev_gap;
        prev_gap = gap;
        csv.row(&[(*n).into(), e.mean.into(), bridge.into()]);
    }
    rec.artifact("continuum.csv", csv);
    rec.at_most("continuum_bridge", worst, EXACT_TOL, "lattice variance vs bridge formula");
    rec.flag("continuum_monotone", monotone, "distance to the continuum value 1/(2β) decreases with N");
    Ok(())
}
