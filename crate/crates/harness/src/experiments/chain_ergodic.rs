//! Time averages of the wave chain started from the Gibbs measure, and the
//! structural properties of its integrator.
//!
//! Artifacts:
//! * `averages.csv`: `observable, time_average_mean, time_average_stderr, gibbs_mean, gibbs_stderr, z`
//! * `drift.csv`: `dt, max_relative_drift`

use ergokit_core::chain::{self, ChainParams, ChainState};
use ergokit_core::gibbs::{self, GibbsSpec, McmcConfig};
use ergokit_core::io::Csv;
use ergokit_core::stats::{self, Method};
use ergokit_core::{rng, EstimateWithError, ObservableSpec};
use rayon::prelude::*;
use serde::Deserialize;

use super::{nonzero, positive, ratio, HALVING_BAND};
use crate::{Context, HarnessError, Recorder};

const Z_MAX: f64 = 3.0;
const REVERSIBILITY_TOL: f64 = 1e-12;
const JACOBIAN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub chain: ChainParams,
    /// Number of Gibbs-drawn initial conditions.
    pub n_starts: usize,
    pub horizon: f64,
    pub dt: f64,
    /// Sweeps discarded before each initial draw.
    pub start_burn_in: usize,
    /// Samples for the Gibbs reference expectation.
    pub gibbs_samples: usize,
    pub gibbs_burn_in: usize,
    /// Zero-based site of the `q²` observable.
    pub site: usize,
    /// Horizon and coarse step of the energy-drift halving test.
    pub drift_horizon: f64,
    pub drift_dt: f64,
    /// Horizon and step of the reversibility and Jacobian checks.
    pub flow_horizon: f64,
    pub flow_dt: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            chain: ChainParams::new(16, 1.0, 1.0, 2).expect("valid default chain"),
            n_starts: 200,
            horizon: 200.0,
            dt: 1e-3,
            start_burn_in: 4000,
            gibbs_samples: 400_000,
            gibbs_burn_in: 20_000,
            site: 7,
            drift_horizon: 10.0,
            drift_dt: 1e-2,
            flow_horizon: 1.0,
            flow_dt: 1e-2,
        }
    }
}

impl super::Params for Params {
    fn check(&self) -> Result<(), HarnessError> {
        self.chain.validate().context("chain")?;
        nonzero("n_starts", self.n_starts)?;
        nonzero("gibbs_samples", self.gibbs_samples)?;
        for (name, v) in [
            ("horizon", self.horizon),
            ("dt", self.dt),
            ("drift_horizon", self.drift_horizon),
            ("drift_dt", self.drift_dt),
            ("flow_horizon", self.flow_horizon),
            ("flow_dt", self.flow_dt),
        ] {
            positive(name, v)?;
        }
        if self.site >= self.chain.n {
            return Err(HarnessError::Config(format!("site {} out of range", self.site)));
        }
        if self.chain.nu != 0.0 {
            return Err(HarnessError::Config("chain-ergodic needs nu = 0".into()));
        }
        Ok(())
    }
}

/// Initial condition `i`: configuration from its own Metropolis chain,
/// momenta from `exp(-β·dx·p²/2)`.
fn gibbs_start(p: &Params, spec: &GibbsSpec, seed: u64, i: usize) -> Result<ChainState, HarnessError> {
    let cfg = McmcConfig::new(1, p.start_burn_in, seed).with_stream(1000 + i as u64);
    let q = gibbs::mcmc_sample(spec, &cfg).context("initial draw")?.draws.remove(0);
    let mut r = rng::stream(seed, (1 << 40) + i as u64);
    let sd = 1.0 / (p.chain.beta * p.chain.dx()).sqrt();
    let mom = rng::normal_vec(&mut r, p.chain.n).into_iter().map(|z| sd * z).collect();
    Ok(ChainState { q, p: mom, t: 0.0 })
}

pub fn run(p: &Params, seed: u64, rec: &mut Recorder) -> Result<(), HarnessError> {
    let prm = p.chain;
    let spec = GibbsSpec::from_chain(&prm).context("Gibbs spec")?;
    let observables = [ObservableSpec::SiteSquare { site: p.site }, ObservableSpec::L2NormSq];
    let names = [format!("q{}_squared", p.site), "l2_norm_squared".to_string()];

    let starts: Vec<ChainState> = (0..p.n_starts)
        .into_par_iter()
        .map(|i| gibbs_start(p, &spec, seed, i))
        .collect::<Result<_, _>>()?;

    // each start gives one time average per observable
    let averages: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|s0| {
            let steps = (p.horizon / p.dt).round() as usize;
            let dx = prm.dx();
            let mut sums = vec![0.0; observables.len()];
            chain::integrate(s0, &prm, p.dt, steps, |s| {
                for (acc, f) in sums.iter_mut().zip(&observables) {
                    *acc += f.evaluate_with(&s.q, dx, || unreachable!());
                }
            })
            .context("chain trajectory")?;
            Ok(sums.into_iter().map(|x| x / steps as f64).collect())
        })
        .collect::<Result<_, HarnessError>>()?;

    let references: Vec<EstimateWithError> = observables
        .par_iter()
        .enumerate()
        .map(|(j, f)| {
            let cfg = McmcConfig::new(p.gibbs_samples, p.gibbs_burn_in, seed).with_stream(j as u64);
            gibbs::expectation(&spec, f, &cfg).context("Gibbs expectation")
        })
        .collect::<Result<_, _>>()?;

    let mut csv = Csv::new(&[
        "observable",
        "time_average_mean",
        "time_average_stderr",
        "gibbs_mean",
        "gibbs_stderr",
        "z",
    ]);
    for (j, name) in names.iter().enumerate() {
        let xs: Vec<f64> = averages.iter().map(|a| a[j]).collect();
        let ens = stats::iid_estimate(&xs, Method::Ensemble);
        let reference = references[j];
        let z = ens.z_score(&reference);
        csv.row(&[
            name.as_str().into(),
            ens.mean.into(),
            ens.stderr.into(),
            reference.mean.into(),
            reference.stderr.into(),
            z.into(),
        ]);
        rec.agree(format!("stationarity_{name}"), &ens, &reference, Z_MAX);
    }
    rec.artifact("averages.csv", csv);

    symplectic(p, &starts[0], rec)
}

fn symplectic(p: &Params, s0: &ChainState, rec: &mut Recorder) -> Result<(), HarnessError> {
    let prm = p.chain;
    let coarse = chain::max_relative_energy_drift(s0, &prm, p.drift_horizon, p.drift_dt).context("energy drift")?;
    let fine =
        chain::max_relative_energy_drift(s0, &prm, p.drift_horizon, 0.5 * p.drift_dt).context("energy drift")?;
    let mut csv = Csv::new(&["dt", "max_relative_drift"]);
    csv.row(&[p.drift_dt.into(), coarse.into()]);
    csv.row(&[(0.5 * p.drift_dt).into(), fine.into()]);
    rec.artifact("drift.csv", csv);
    rec.within(
        "energy_drift_halving",
        ratio(coarse, fine),
        HALVING_BAND.0,
        HALVING_BAND.1,
        format!("drift {coarse:e} → {fine:e}"),
    );

    // forward, flip momenta, forward again, flip back
    let steps = (p.flow_horizon / p.flow_dt).round() as usize;
    let there = chain::integrate(s0, &prm, p.flow_dt, steps, |_| {}).context("forward flow")?;
    let flipped = ChainState {
        q: there.q.clone(),
        p: there.p.iter().map(|x| -x).collect(),
        t: 0.0,
    };
    let back = chain::integrate(&flipped, &prm, p.flow_dt, steps, |_| {}).context("reverse flow")?;
    let scale = s0.q.iter().chain(&s0.p).map(|x| x.abs()).fold(1.0, f64::max);
    let err = s0
        .q
        .iter()
        .zip(&back.q)
        .map(|(a, b)| (a - b).abs())
        .chain(s0.p.iter().zip(&back.p).map(|(a, b)| (a + b).abs()))
        .fold(0.0, f64::max)
        / scale;
    rec.at_most("reversibility", err, REVERSIBILITY_TOL, "relative max-norm round-trip error");

    let jac = chain::liouville_jacobian_check(s0, &prm, p.flow_horizon, p.flow_dt).context("Jacobian")?;
    rec.at_most("liouville_jacobian", jac, JACOBIAN_TOL, "|det J - 1| of the flow map");
    Ok(())
}
