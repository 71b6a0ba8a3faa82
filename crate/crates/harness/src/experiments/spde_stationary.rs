//! Long runs of the lattice stochastic heat equation against its stationary
//! lattice density.
//!
//! Artifacts:
//! * `modes.csv`: `k, sampled, stderr, exact, z` (pure diffusion case)
//! * `moments.csv`: `case, node, moment, sde, sde_stderr, reference, reference_stderr, z`

use ergokit_core::gibbs::McmcConfig;
use ergokit_core::io::Csv;
use ergokit_core::langevin::{spde_stationary_check, DriftTerm, SpdeRunConfig, SpdeSpec, SpdeStationaryReport};
use ergokit_core::EstimateWithError;
use rayon::prelude::*;
use serde::Deserialize;

use super::{nonzero, positive};
use crate::{Context, HarnessError, Recorder};

const Z_MAX: f64 = 3.0;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub a: f64,
    pub m: usize,
    /// `dt = dt_factor·dx²`; at most 0.25.
    pub dt_factor: f64,
    pub burn_in: f64,
    pub n_samples: usize,
    pub sample_every: usize,
    /// Modes checked in the pure diffusion case.
    pub n_modes: usize,
    /// Linear and cubic drift coefficients of the two drift cases.
    pub lambda1: f64,
    pub lambda3: f64,
    /// MCMC reference for the nonlinear case.
    pub mcmc_samples: usize,
    pub mcmc_burn_in: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            a: std::f64::consts::FRAC_PI_2,
            m: 31,
            dt_factor: 0.2,
            burn_in: 20.0,
            n_samples: 200_000,
            sample_every: 50,
            n_modes: 8,
            lambda1: 1.0,
            lambda3: 1.0,
            mcmc_samples: 400_000,
            mcmc_burn_in: 20_000,
        }
    }
}

impl super::Params for Params {
    fn check(&self) -> Result<(), HarnessError> {
        positive("a", self.a)?;
        nonzero("m", self.m)?;
        positive("dt_factor", self.dt_factor)?;
        if self.dt_factor > 0.25 {
            return Err(HarnessError::Config("dt_factor must not exceed 0.25".into()));
        }
        nonzero("n_samples", self.n_samples)?;
        nonzero("sample_every", self.sample_every)?;
        nonzero("mcmc_samples", self.mcmc_samples)?;
        positive("lambda1", self.lambda1)?;
        positive("lambda3", self.lambda3)?;
        Ok(())
    }
}

pub fn run(p: &Params, seed: u64, rec: &mut Recorder) -> Result<(), HarnessError> {
    let cases: Vec<(&str, Vec<DriftTerm>)> = vec![
        ("diffusion", vec![]),
        ("linear", vec![DriftTerm { coef: p.lambda1, power: 1 }]),
        ("cubic", vec![DriftTerm { coef: p.lambda3, power: 3 }]),
    ];
    let reports: Vec<(SpdeSpec, SpdeStationaryReport)> = cases
        .par_iter()
        .enumerate()
        .map(|(i, (name, drift))| {
            let spec = SpdeSpec::new(p.a, p.m, drift.clone()).context(name)?;
            let dx = spec.dx();
            let run = SpdeRunConfig {
                dt: p.dt_factor * dx * dx,
                burn_in: p.burn_in,
                n_samples: p.n_samples,
                sample_every: p.sample_every,
                seed: seed.wrapping_add(i as u64),
            };
            let mcmc = McmcConfig::new(p.mcmc_samples, p.mcmc_burn_in, seed).with_stream(100 + i as u64);
            let r = spde_stationary_check(&spec, &run, &mcmc, p.n_modes).context(name)?;
            Ok((spec, r))
        })
        .collect::<Result<_, HarnessError>>()?;

    let mut modes = Csv::new(&["k", "sampled", "stderr", "exact", "z"]);
    let mut moments = Csv::new(&[
        "case",
        "node",
        "moment",
        "sde",
        "sde_stderr",
        "reference",
        "reference_stderr",
        "z",
    ]);
    for ((name, _), (spec, r)) in cases.iter().zip(&reports) {
        for mv in &r.modes {
            let exact = EstimateWithError::exact(mv.exact);
            modes.row(&[
                mv.k.into(),
                mv.sampled.mean.into(),
                mv.sampled.stderr.into(),
                mv.exact.into(),
                mv.sampled.z_score(&exact).into(),
            ]);
            rec.agree(format!("{name}_mode{}_variance", mv.k), &mv.sampled, &exact, Z_MAX);
        }
        for pr in &r.probes {
            for (moment, sde, reference) in [("m2", &pr.sde_m2, &pr.reference_m2), ("m4", &pr.sde_m4, &pr.reference_m4)] {
                moments.row(&[
                    (*name).into(),
                    pr.node.into(),
                    moment.into(),
                    sde.mean.into(),
                    sde.stderr.into(),
                    reference.mean.into(),
                    reference.stderr.into(),
                    sde.z_score(reference).into(),
                ]);
                rec.agree(format!("{name}_node{}_{moment}", pr.node), sde, reference, Z_MAX);
            }
        }
        // per-node increments: n_samples·sample_every + burn-in steps, m nodes each
        let dt = p.dt_factor * spec.dx() * spec.dx();
        let draws = ((p.burn_in / dt).round() as usize + p.n_samples * p.sample_every) * p.m;
        let se = (2.0 / draws as f64).sqrt();
        rec.at_most(
            format!("{name}_noise_calibration"),
            (r.noise_variance_ratio - 1.0).abs() / se,
            Z_MAX,
            format!("increment variance / (dt/dx) = {}", r.noise_variance_ratio),
        );
    }
    rec.artifact("modes.csv", modes);
    rec.artifact("moments.csv", moments);
    Ok(())
}
