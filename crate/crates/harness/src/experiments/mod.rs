//! The eight experiments. Each module defines a parameter struct with
//! defaults for every field and a `run` function.

mod chain_ergodic;
mod galerkin_converge;
mod gibbs_gaussian;
mod kanai;
mod langevin_boltzmann;
mod laplace_expansion;
mod rage_decay;
mod spde_stationary;

use serde::de::DeserializeOwned;

use crate::{Experiment, ExperimentConfig, HarnessError, Recorder};

pub use chain_ergodic::Params as ChainErgodicParams;
pub use galerkin_converge::Params as GalerkinConvergeParams;
pub use gibbs_gaussian::Params as GibbsGaussianParams;
pub use kanai::Params as KanaiParams;
pub use langevin_boltzmann::Params as LangevinBoltzmannParams;
pub use laplace_expansion::Params as LaplaceExpansionParams;
pub use rage_decay::Params as RageDecayParams;
pub use spde_stationary::Params as SpdeStationaryParams;

pub(crate) trait Params: DeserializeOwned {
    fn check(&self) -> Result<(), HarnessError> {
        Ok(())
    }
}

type RunFn<P> = fn(&P, u64, &mut Recorder) -> Result<(), HarnessError>;

fn decode<P: Params>(cfg: &ExperimentConfig) -> Result<P, HarnessError> {
    let p: P = cfg.parameters()?;
    p.check()?;
    Ok(p)
}

macro_rules! entry {
    ($name:literal, $desc:literal, $module:ident) => {
        Experiment {
            name: $name,
            description: $desc,
            validate: |cfg| decode::<$module::Params>(cfg).map(|_| ()),
            run: |cfg, rec| {
                let p = decode::<$module::Params>(cfg)?;
                let f: RunFn<$module::Params> = $module::run;
                f(&p, cfg.seed, rec)
            },
        }
    };
}

pub(crate) static REGISTRY: &[Experiment] = &[
    entry!(
        "rage-decay",
        "Cesàro averages of unitary orbits, mean-ergodic and semigroup limits",
        rage_decay
    ),
    entry!(
        "chain-ergodic",
        "Wave-chain time averages from Gibbs-drawn starts vs Gibbs expectations; symplectic checks",
        chain_ergodic
    ),
    entry!(
        "gibbs-gaussian",
        "Metropolis sampler vs exact Gaussian covariance and quadrature; Lipschitz reweighting",
        gibbs_gaussian
    ),
    entry!(
        "kanai",
        "Damped chain vs its exponentially rescaled undamped form",
        kanai
    ),
    entry!(
        "langevin-boltzmann",
        "Overdamped and underdamped Langevin stationary laws vs Boltzmann weights",
        langevin_boltzmann
    ),
    entry!(
        "spde-stationary",
        "Lattice stochastic heat equation: mode variances and moments vs the stationary density",
        spde_stationary
    ),
    entry!(
        "galerkin-converge",
        "Galerkin wave solver: accuracy, convergence, a priori bound, interpolation, Gronwall, chain agreement",
        galerkin_converge
    ),
    entry!(
        "laplace-expansion",
        "Low-temperature saddle-point expansion of Gibbs expectations",
        laplace_expansion
    ),
];

/// `v` must be positive and finite.
pub(crate) fn positive(name: &str, v: f64) -> Result<(), HarnessError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(HarnessError::Config(format!("{name} must be positive, got {v}")))
    }
}

pub(crate) fn nonzero(name: &str, v: usize) -> Result<(), HarnessError> {
    if v > 0 {
        Ok(())
    } else {
        Err(HarnessError::Config(format!("{name} must be at least 1")))
    }
}

/// `a/b` of two energy-drift style errors, for dt-halving tests.
pub(crate) fn ratio(coarse: f64, fine: f64) -> f64 {
    if fine == 0.0 {
        f64::NAN
    } else {
        coarse / fine
    }
}

/// dt-halving band for second-order schemes.
pub(crate) const HALVING_BAND: (f64, f64) = (3.2, 4.8);
