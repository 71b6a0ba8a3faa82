//! Scalar observables on a configuration `q ∈ R^N`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An observable `F(q)`. Site indices are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    /// `q_i²`.
    SiteSquare { site: usize },
    /// `dx·Σ q_i²`, the lattice L² norm squared.
    L2NormSq,
    /// The energy of the surrounding model (full Hamiltonian for a chain,
    /// configuration energy for a Gibbs measure).
    Energy,
    /// `Σ_m c_m q_site^m`, or `Σ_i Σ_m c_m q_i^m` when `site` is absent.
    CustomPolynomial {
        coefficients: Vec<f64>,
        #[serde(default)]
        site: Option<usize>,
    },
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

fn poly_d2(c: &[f64], x: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(2)
        .map(|(m, &cm)| cm * (m * (m - 1)) as f64 * x.powi(m as i32 - 2))
        .sum()
}

impl ObservableSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        let site = match self {
            ObservableSpec::SiteSquare { site } => Some(*site),
            ObservableSpec::CustomPolynomial { site, coefficients } => {
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::validation("polynomial coefficients must be finite"));
                }
                *site
            }
            _ => None,
        };
        match site {
            Some(i) if i >= n => Err(Error::validation(format!(
                "observable site {i} out of range for {n} sites"
            ))),
            _ => Ok(()),
        }
    }

    /// Value at `q`; `energy` is only called for [`ObservableSpec::Energy`].
    pub fn evaluate_with<E: FnOnce() -> f64>(&self, q: &[f64], dx: f64, energy: E) -> f64 {
        match self {
            ObservableSpec::SiteSquare { site } => q[*site] * q[*site],
            ObservableSpec::L2NormSq => dx * q.iter().map(|x| x * x).sum::<f64>(),
            ObservableSpec::Energy => energy(),
            ObservableSpec::CustomPolynomial { coefficients, site } => match site {
                Some(i) => poly(coefficients, q[*i]),
                None => q.iter().map(|&x| poly(coefficients, x)).sum(),
            },
        }
    }

    /// Hessian at `q`; `None` for [`ObservableSpec::Energy`], whose Hessian
    /// depends on the model.
    pub fn hessian(&self, q: &[f64], dx: f64) -> Option<DMatrix<f64>> {
        let n = q.len();
        let mut h = DMatrix::zeros(n, n);
        match self {
            ObservableSpec::SiteSquare { site } => h[(*site, *site)] = 2.0,
            ObservableSpec::L2NormSq => h.fill_diagonal(2.0 * dx),
            ObservableSpec::Energy => return None,
            ObservableSpec::CustomPolynomial { coefficients, site } => match site {
                Some(i) => h[(*i, *i)] = poly_d2(coefficients, q[*i]),
                None => {
                    for i in 0..n {
                        h[(i, i)] = poly_d2(coefficients, q[i]);
                    }
                }
            },
        }
        Some(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_each_kind() {
        let q = [1.0, -2.0, 3.0];
        let no_energy = || panic!("energy not needed");
        assert_eq!(ObservableSpec::SiteSquare { site: 1 }.evaluate_with(&q, 0.5, no_energy), 4.0);
        assert_eq!(ObservableSpec::L2NormSq.evaluate_with(&q, 0.5, no_energy), 7.0);
        assert_eq!(ObservableSpec::Energy.evaluate_with(&q, 0.5, || 11.0), 11.0);
        let sum = ObservableSpec::CustomPolynomial { coefficients: vec![0.0, 1.0], site: None };
        assert_eq!(sum.evaluate_with(&q, 1.0, no_energy), 2.0);
        let cubic = ObservableSpec::CustomPolynomial { coefficients: vec![1.0, 0.0, 0.0, 2.0], site: Some(0) };
        assert_eq!(cubic.evaluate_with(&q, 1.0, no_energy), 3.0);
        assert_eq!(cubic.hessian(&q, 1.0).unwrap()[(0, 0)], 12.0);
    }

    #[test]
    fn rejects_out_of_range_site() {
        assert!(ObservableSpec::SiteSquare { site: 3 }.validate(3).is_err());
        assert!(ObservableSpec::SiteSquare { site: 2 }.validate(3).is_ok());
    }

    #[test]
    fn json_shape() {
        let o: ObservableSpec = serde_json::from_str(r#"{"kind":"site_square","site":4}"#).unwrap();
        assert_eq!(o, ObservableSpec::SiteSquare { site: 4 });
        assert!(serde_json::from_str::<ObservableSpec>(r#"{"kind":"site_square","site":4,"x":1}"#).is_err());
    }
}
