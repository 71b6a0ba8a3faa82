//! Checks that tie modules together through independent references.

use ergokit_core::gibbs::{self, GibbsSpec, McmcConfig, PotentialSpec, StiffnessMatrix};
use ergokit_core::langevin::{self, LangevinPotential, LangevinSpec};
use ergokit_core::spectral::{semigroup_ergodic_limit, AccretiveOperator};
use ergokit_core::stats::{self, EstimateWithError, Method};
use ergokit_core::ObservableSpec;
use nalgebra::DMatrix;

#[test]
fn ou_mean_follows_the_semigroup() {
    // E[q(t)] = exp(-t)q₀ for dq = -q dt + √2 dW; the drift generator is A = 1
    let spec = LangevinSpec::new(LangevinPotential::Quadratic { stiffness: 1.0 }, 1.0, 1).unwrap();
    let t = 1.0;
    let ends = langevin::ensemble_endpoints(&spec, &[2.0], t, 1e-3, 4000, 77).unwrap();
    let xs: Vec<f64> = ends.iter().map(|q| q[0]).collect();
    let est = stats::iid_estimate(&xs, Method::Ensemble);

    let a = AccretiveOperator::from_symmetric(DMatrix::from_element(1, 1, 1.0)).unwrap();
    let exact = a.apply_semigroup(&[2.0], t).unwrap()[0];
    assert!((exact - 2.0 * (-1.0f64).exp()).abs() < 1e-14);
    assert!(est.agrees_with(&EstimateWithError::exact(exact), 3.0), "{est:?} vs {exact}");
    let avg = semigroup_ergodic_limit(&a, &[2.0], 50.0).unwrap();
    assert!(avg.limit[0].abs() < 1e-14);
}

#[test]
fn time_average_equals_ensemble_average() {
    let spec = LangevinSpec::new(LangevinPotential::DoubleWell { a: 1.0, b: 1.0 }, 1.0, 1).unwrap();
    let tr = langevin::euler_maruyama_trajectory(&spec, &[0.0], 4000.0, 2e-3, 3, 10).unwrap();
    let sq: Vec<f64> = tr.states.iter().skip(500).map(|q| q[0] * q[0]).collect();
    let time = stats::batch_means(&sq, stats::DEFAULT_BATCHES, Method::TimeAverage);

    let ends = langevin::ensemble_endpoints(&spec, &[0.0], 20.0, 2e-3, 2000, 4).unwrap();
    let sq: Vec<f64> = ends.iter().map(|q| q[0] * q[0]).collect();
    let ens = stats::iid_estimate(&sq, Method::Ensemble);
    assert!(time.agrees_with(&ens, 3.0), "{time:?} vs {ens:?}");
}

#[test]
fn quartic_mcmc_matches_quadrature() {
    let a = StiffnessMatrix::new(DMatrix::from_element(1, 1, 1.0)).unwrap();
    let s = GibbsSpec::new(a, PotentialSpec::polynomial_even(2.0, 2), 1.0, 1.0).unwrap();
    let f = ObservableSpec::SiteSquare { site: 0 };
    let q = gibbs::expectation_quadrature(&s, &f, 1e-12).unwrap();
    let m = gibbs::expectation(&s, &f, &McmcConfig::new(400_000, 5_000, 31)).unwrap();
    assert!(m.agrees_with(&q, 3.0), "{m:?} vs {q:?}");
}

#[test]
fn two_site_mcmc_matches_quadrature() {
    let a = StiffnessMatrix::second_difference_1d(2, 1.0).unwrap();
    let s = GibbsSpec::new(a, PotentialSpec::polynomial_even(1.0, 2), 1.0, 1.0).unwrap();
    let f = ObservableSpec::L2NormSq;
    let q = gibbs::expectation_quadrature(&s, &f, 1e-9).unwrap();
    let m = gibbs::expectation(&s, &f, &McmcConfig::new(300_000, 5_000, 32)).unwrap();
    assert!(m.agrees_with(&q, 3.0), "{m:?} vs {q:?}");
}
