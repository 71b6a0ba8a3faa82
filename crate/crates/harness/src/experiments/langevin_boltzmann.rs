//! Langevin dynamics against the Boltzmann law.
//!
//! Artifacts:
//! * `histogram_{case}.csv`: `bin_center, count, empirical_density, reference_density`
//! * `moments.csv`: `case, quantity, sampled, stderr, exact, z`

use ergokit_core::io::Csv;
use ergokit_core::langevin::{
    euler_maruyama_trajectory, stationary_histogram_check, underdamped_equilibrium_check, HistogramConfig,
    HistogramReport, LangevinPotential, LangevinSpec,
};
use ergokit_core::stats;
use ergokit_core::EstimateWithError;
use rayon::prelude::*;
use serde::Deserialize;

use super::{nonzero, positive};
use crate::{Context, HarnessError, Recorder};

const Z_MAX: f64 = 3.0;
const SUP_TOL: f64 = 0.05;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub ou_stiffness: f64,
    pub ou_kt: f64,
    pub ou: Run,
    pub double_well_a: f64,
    pub double_well_b: f64,
    pub double_well_kt: f64,
    pub double_well: Run,
    pub underdamped_gammas: Vec<f64>,
    pub underdamped: Run,
    /// Free-particle run for the noise calibration.
    pub noise_kt: f64,
    pub noise_dt: f64,
    pub noise_horizon: f64,
}

/// Sampling schedule of one long run.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Run {
    pub dt: f64,
    pub burn_in: f64,
    pub n_samples: usize,
    pub sample_every: usize,
    pub bins: usize,
    pub range: f64,
}

impl Run {
    fn config(&self, seed: u64) -> HistogramConfig {
        HistogramConfig {
            dt: self.dt,
            burn_in: self.burn_in,
            n_samples: self.n_samples,
            sample_every: self.sample_every,
            bins: self.bins,
            range: self.range,
            seed,
            q0: 0.0,
        }
    }
}

impl Default for Params {
    fn default() -> Self {
        Self {
            ou_stiffness: 1.0,
            ou_kt: 1.0,
            ou: Run {
                dt: 1e-3,
                burn_in: 10.0,
                n_samples: 1_000_000,
                sample_every: 100,
                bins: 50,
                range: 5.0,
            },
            double_well_a: 1.0,
            double_well_b: 1.0,
            double_well_kt: 0.5,
            double_well: Run {
                dt: 1e-3,
                burn_in: 10.0,
                n_samples: 1_000_000,
                sample_every: 100,
                bins: 50,
                range: 2.5,
            },
            underdamped_gammas: vec![0.5, 2.0],
            underdamped: Run {
                dt: 1e-2,
                burn_in: 20.0,
                n_samples: 1_000_000,
                sample_every: 10,
                bins: 50,
                range: 5.0,
            },
            noise_kt: 0.7,
            noise_dt: 1e-2,
            noise_horizon: 2000.0,
        }
    }
}

impl super::Params for Params {
    fn check(&self) -> Result<(), HarnessError> {
        for (name, v) in [
            ("ou_stiffness", self.ou_stiffness),
            ("ou_kt", self.ou_kt),
            ("double_well_a", self.double_well_a),
            ("double_well_kt", self.double_well_kt),
            ("noise_kt", self.noise_kt),
            ("noise_dt", self.noise_dt),
            ("noise_horizon", self.noise_horizon),
        ] {
            positive(name, v)?;
        }
        if self.underdamped_gammas.iter().any(|g| !(*g > 0.0)) {
            return Err(HarnessError::Config("underdamped_gammas must be positive".into()));
        }
        for r in [&self.ou, &self.double_well, &self.underdamped] {
            r.config(0).validate().context("run schedule")?;
            nonzero("n_samples", r.n_samples)?;
        }
        Ok(())
    }
}

fn histogram_csv(h: &HistogramReport) -> Csv {
    let mut c = Csv::new(&["bin_center", "count", "empirical_density", "reference_density"]);
    let width = h.bin_edges[1] - h.bin_edges[0];
    for (centre, count, reference) in h.rows() {
        let emp = count as f64 / (h.n_samples as f64 * width);
        c.row(&[centre.into(), count.into(), emp.into(), reference.into()]);
    }
    c
}

struct Moments(Csv);

impl Moments {
    fn add(&mut self, rec: &mut Recorder, case: &str, quantity: &str, e: &EstimateWithError, exact: f64) {
        let x = EstimateWithError::exact(exact);
        self.0.row(&[case.into(), quantity.into(), e.mean.into(), e.stderr.into(), exact.into(), e.z_score(&x).into()]);
        rec.agree(format!("{case}_{quantity}"), e, &x, Z_MAX);
    }
}

enum Outcome {
    Over(HistogramReport),
    Under(Box<ergokit_core::langevin::UnderdampedReport>),
}

pub fn run(p: &Params, seed: u64, rec: &mut Recorder) -> Result<(), HarnessError> {
    let ou = LangevinSpec::new(LangevinPotential::Quadratic { stiffness: p.ou_stiffness }, p.ou_kt, 1).context("OU")?;
    let dw = LangevinSpec::new(
        LangevinPotential::DoubleWell {
            a: p.double_well_a,
            b: p.double_well_b,
        },
        p.double_well_kt,
        1,
    )
    .context("double well")?;
    let mut jobs: Vec<(String, LangevinSpec, HistogramConfig, bool)> = vec![
        ("ou".into(), ou.clone(), p.ou.config(seed), false),
        ("double_well".into(), dw, p.double_well.config(seed.wrapping_add(1)), false),
    ];
    for (i, &g) in p.underdamped_gammas.iter().enumerate() {
        let s = ou.clone().with_gamma(g).context("underdamped")?;
        jobs.push((format!("underdamped_gamma{g}"), s, p.underdamped.config(seed.wrapping_add(2 + i as u64)), true));
    }
    let outcomes: Vec<Outcome> = jobs
        .par_iter()
        .map(|(name, spec, cfg, under)| {
            if *under {
                underdamped_equilibrium_check(spec, cfg).map(|u| Outcome::Under(Box::new(u))).context(name)
            } else {
                stationary_histogram_check(spec, cfg).map(Outcome::Over).context(name)
            }
        })
        .collect::<Result<_, _>>()?;

    let var = p.ou_kt / p.ou_stiffness;
    let mut moments = Moments(Csv::new(&["case", "quantity", "sampled", "stderr", "exact", "z"]));
    for ((name, _, _, _), out) in jobs.iter().zip(&outcomes) {
        match out {
            Outcome::Over(h) if name == "ou" => {
                moments.add(rec, name, "variance", &h.second_moment, var);
                moments.add(rec, name, "mean", &h.mean, 0.0);
                rec.artifact("histogram_ou.csv", histogram_csv(h));
            }
            Outcome::Over(h) => {
                rec.at_most(
                    format!("{name}_sup_discrepancy"),
                    h.sup_discrepancy,
                    SUP_TOL,
                    "max |empirical - Boltzmann| density over bins",
                );
                moments.add(rec, name, "positive_fraction", &h.positive_fraction, 0.5);
                rec.artifact(&format!("histogram_{name}.csv"), histogram_csv(h));
            }
            Outcome::Under(u) => {
                moments.add(rec, name, "p_variance", &u.p.second_moment, p.ou_kt);
                moments.add(rec, name, "q_variance", &u.q.second_moment, var);
                moments.add(rec, name, "qp_covariance", &u.qp_covariance, 0.0);
                rec.artifact(&format!("histogram_{name}_p.csv"), histogram_csv(&u.p));
            }
        }
    }

    // free particle: increments are N(0, 2kT·dt)
    let free = LangevinSpec::new(LangevinPotential::Polynomial { coefficients: vec![] }, p.noise_kt, 1).context("free")?;
    let tr = euler_maruyama_trajectory(&free, &[0.0], p.noise_horizon, p.noise_dt, seed.wrapping_add(100), 1)
        .context("noise calibration")?;
    let inc: Vec<f64> = tr.states.windows(2).map(|w| w[1][0] - w[0][0]).collect();
    let expect = 2.0 * p.noise_kt * p.noise_dt;
    let est = EstimateWithError {
        mean: stats::variance(&inc),
        stderr: expect * (2.0 / inc.len() as f64).sqrt(),
        n_effective: inc.len() as f64,
        method: ergokit_core::Method::Ensemble,
    };
    moments.add(rec, "noise", "increment_variance", &est, expect);
    rec.artifact("moments.csv", moments.0);
    Ok(())
}
