//! Finite-dimensional spectral machinery.
//!
//! Everything here is closed form in the eigenbasis: the time integral of
//! `exp(i(λ_j - λ_k)t)` over `[0, T]` is evaluated analytically, so Cesàro
//! averages carry no discretisation error. A composite Gauss–Legendre path
//! is kept as an independent cross-check.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{check_dim, Error, Result};
use crate::quadrature;

/// Relative tolerance for the Hermitian symmetry check.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Relative Frobenius tolerance on `V·Λ·V† - H`.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;
/// Tolerance on the closed-form vs quadrature Cesàro average.
pub const QUADRATURE_AGREEMENT_TOL: f64 = 1e-8;
/// Accretivity slack: eigenvalue real parts must exceed `-ACCRETIVE_TOL`.
pub const ACCRETIVE_TOL: f64 = 1e-12;

/// Dense Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    entries: DMatrix<C64>,
}

impl HermitianOperator {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::validation(format!(
                "operator must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::validation("operator has non-finite entries"));
        }
        let scale = entries.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let n = entries.nrows();
        for i in 0..n {
            for j in i..n {
                let d = (entries[(i, j)] - entries[(j, i)].conj()).norm();
                if d > HERMITIAN_TOL * scale {
                    return Err(Error::validation(format!(
                        "operator is not Hermitian at ({i},{j}): |h_ij - conj(h_ji)| = {d:e}"
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn from_real_symmetric(m: &DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(|x| C64::new(x, 0.0)))
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(values.len(), values.iter().map(|&x| C64::new(x, 0.0)));
        Self::new(DMatrix::from_diagonal(&d))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }
}

/// Complex state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub components: DVector<C64>,
}

impl StateVector {
    pub fn new(components: DVector<C64>) -> Self {
        Self { components }
    }

    pub fn from_real(xs: &[f64]) -> Self {
        Self::new(DVector::from_iterator(xs.len(), xs.iter().map(|&x| C64::new(x, 0.0))))
    }

    pub fn from_complex(xs: &[C64]) -> Self {
        Self::new(DVector::from_column_slice(xs))
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[k] = C64::new(1.0, 0.0);
        Self::new(v)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn norm(&self) -> f64 {
        self.components.norm()
    }

    /// `⟨self, other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.components.dotc(&other.components)
    }
}

/// Ascending eigenvalues and unitary eigenvector matrix of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<C64>,
    pub source_dim: usize,
}

/// Decompose `h` as `V·diag(λ)·V†` with ascending `λ`.
pub fn spectral_decompose(h: &HermitianOperator) -> Result<SpectralDecomposition> {
    let n = h.dim();
    if is_diagonal(&h.entries) {
        // exact: the eigenbasis is a permutation of the standard basis
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| h.entries[(a, a)].re.total_cmp(&h.entries[(b, b)].re));
        let mut eigenvectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            eigenvectors[(src, dst)] = C64::new(1.0, 0.0);
        }
        return Ok(SpectralDecomposition {
            eigenvalues: order.iter().map(|&k| h.entries[(k, k)].re).collect(),
            eigenvectors,
            source_dim: n,
        });
    }
    let eig = nalgebra::SymmetricEigen::try_new(h.entries.clone(), f64::EPSILON, 10_000 * n.max(1))
        .ok_or(Error::NonConvergence {
            what: "Hermitian eigensolver",
            iterations: 10_000 * n.max(1),
            residual: f64::NAN,
        })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    let d = SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        source_dim: n,
    };
    let err = d.reconstruction_error(h);
    if !(err <= RECONSTRUCTION_TOL) {
        return Err(Error::NonConvergence {
            what: "Hermitian eigensolver (reconstruction check)",
            iterations: 0,
            residual: err,
        });
    }
    Ok(d)
}

fn is_diagonal(m: &DMatrix<C64>) -> bool {
    let n = m.nrows();
    (0..n).all(|j| (0..n).all(|i| i == j || m[(i, j)] == C64::new(0.0, 0.0)))
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.source_dim
    }

    pub fn reconstruct(&self) -> DMatrix<C64> {
        let lam = DVector::from_iterator(
            self.dim(),
            self.eigenvalues.iter().map(|&l| C64::new(l, 0.0)),
        );
        &self.eigenvectors * DMatrix::from_diagonal(&lam) * self.eigenvectors.adjoint()
    }

    /// Relative Frobenius error of the reconstruction against `h`.
    pub fn reconstruction_error(&self, h: &HermitianOperator) -> f64 {
        let diff = self.reconstruct() - h.entries();
        let scale = h.entries().norm().max(f64::MIN_POSITIVE);
        diff.norm() / scale
    }

    /// `max |(V†V - I)_ij|`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.eigenvectors.adjoint() * &self.eigenvectors;
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// `λ_max - λ_min`.
    pub fn diameter(&self) -> f64 {
        match (self.eigenvalues.first(), self.eigenvalues.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }

    /// Default grouping tolerance: `1e-9 × spectral diameter`.
    pub fn default_degeneracy_tol(&self) -> f64 {
        1e-9 * self.diameter()
    }

    /// Default kernel threshold: `|λ| ≤ 1e-9·max|λ|`, floored at `1e-12`.
    pub fn kernel_tol(&self) -> f64 {
        let m = self.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max);
        (1e-9 * m).max(1e-12)
    }

    /// Index ranges of eigenvalue groups; neighbours closer than `tol` are chained.
    pub fn degenerate_groups(&self, tol: f64) -> Vec<std::ops::Range<usize>> {
        let mut groups = Vec::new();
        let mut start = 0;
        for j in 1..=self.eigenvalues.len() {
            if j == self.eigenvalues.len() || self.eigenvalues[j] - self.eigenvalues[j - 1] > tol {
                groups.push(start..j);
                start = j;
            }
        }
        groups
    }

    /// Spectral coefficients `V†ψ`.
    pub fn coefficients(&self, psi: &StateVector) -> Result<DVector<C64>> {
        check_dim(self.dim(), psi.dim())?;
        Ok(self.eigenvectors.adjoint() * &psi.components)
    }

    fn synthesize(&self, coeffs: &DVector<C64>) -> StateVector {
        StateVector::new(&self.eigenvectors * coeffs)
    }

    /// Smallest gap between distinct (non-degenerate) consecutive eigenvalues.
    pub fn min_gap(&self, tol: f64) -> f64 {
        self.eigenvalues
            .windows(2)
            .map(|w| w[1] - w[0])
            .filter(|&g| g > tol)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `(exp(iωT) - 1)/(iωT)`, the Cesàro kernel of a single frequency.
pub fn cesaro_kernel(omega: f64, t: f64) -> C64 {
    let x = omega * t;
    if x.abs() < 1e-4 {
        // 1 + ix/2 - x²/6 - ix³/24
        C64::new(1.0 - x * x / 6.0, x / 2.0 - x * x * x / 24.0)
    } else {
        C64::new(x.sin() / x, (1.0 - x.cos()) / x)
    }
}

/// `(1 - exp(-z))/z` for complex `z`, with its removable singularity at 0.
pub fn decay_kernel(z: C64) -> C64 {
    if z.norm() < 1e-4 {
        C64::new(1.0, 0.0) - z / 2.0 + z * z / 6.0 - z * z * z / 24.0
    } else {
        (C64::new(1.0, 0.0) - (-z).exp()) / z
    }
}

/// `exp(itL)ψ`.
pub fn evolve_unitary(d: &SpectralDecomposition, psi: &StateVector, t: f64) -> Result<StateVector> {
    let mut c = d.coefficients(psi)?;
    for (cj, &lam) in c.iter_mut().zip(&d.eigenvalues) {
        *cj *= C64::from_polar(1.0, lam * t);
    }
    Ok(d.synthesize(&c))
}

fn overlap_weights(
    d: &SpectralDecomposition,
    psi_tilde: &StateVector,
    psi: &StateVector,
) -> Result<Vec<C64>> {
    let a = d.coefficients(psi_tilde)?;
    let b = d.coefficients(psi)?;
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).collect())
}

/// `(1/T)∫₀^T |⟨ψ̃, exp(itL)ψ⟩|² dt` in closed form.
pub fn cesaro_correlation(
    d: &SpectralDecomposition,
    psi_tilde: &StateVector,
    psi: &StateVector,
    t: f64,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::validation(format!("averaging time must be positive, got {t}")));
    }
    let w = overlap_weights(d, psi_tilde, psi)?;
    let lam = &d.eigenvalues;
    let mut acc = 0.0;
    for j in 0..w.len() {
        acc += w[j].norm_sqr();
        for k in (j + 1)..w.len() {
            // (j,k) and (k,j) terms are complex conjugates of each other.
            let term = w[j] * w[k].conj() * cesaro_kernel(lam[j] - lam[k], t);
            acc += 2.0 * term.re;
        }
    }
    Ok(acc)
}

/// The same average by composite Gauss–Legendre quadrature with `n_quad`
/// panels of 8 nodes.
pub fn cesaro_correlation_quadrature(
    d: &SpectralDecomposition,
    psi_tilde: &StateVector,
    psi: &StateVector,
    t: f64,
    n_quad: usize,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::validation(format!("averaging time must be positive, got {t}")));
    }
    if n_quad < 2 {
        return Err(Error::validation("n_quad must be at least 2"));
    }
    let w = overlap_weights(d, psi_tilde, psi)?;
    let lam = d.eigenvalues.clone();
    let integral = quadrature::composite_gauss(
        |s| {
            let amp: C64 = w
                .iter()
                .zip(&lam)
                .map(|(wj, &l)| wj * C64::from_polar(1.0, l * s))
                .sum();
            amp.norm_sqr()
        },
        0.0,
        t,
        n_quad,
        8,
    );
    Ok(integral / t)
}

/// Closed-form average, cross-checked against quadrature to
/// [`QUADRATURE_AGREEMENT_TOL`].
pub fn cesaro_correlation_checked(
    d: &SpectralDecomposition,
    psi_tilde: &StateVector,
    psi: &StateVector,
    t: f64,
    n_quad: usize,
) -> Result<f64> {
    let closed = cesaro_correlation(d, psi_tilde, psi, t)?;
    let quad = cesaro_correlation_quadrature(d, psi_tilde, psi, t, n_quad)?;
    let gap = (closed - quad).abs();
    if gap > QUADRATURE_AGREEMENT_TOL {
        return Err(Error::NonConvergence {
            what: "Cesàro quadrature cross-check",
            iterations: n_quad,
            residual: gap,
        });
    }
    Ok(closed)
}

/// `lim_{T→∞}` of [`cesaro_correlation`]: `Σ_g |⟨ψ̃, P_g ψ⟩|²` over
/// eigenvalue groups formed with `degeneracy_tol`.
pub fn cesaro_limit_exact(
    d: &SpectralDecomposition,
    psi_tilde: &StateVector,
    psi: &StateVector,
    degeneracy_tol: f64,
) -> Result<f64> {
    if !(degeneracy_tol >= 0.0) {
        return Err(Error::validation("degeneracy tolerance must be non-negative"));
    }
    let w = overlap_weights(d, psi_tilde, psi)?;
    Ok(d
        .degenerate_groups(degeneracy_tol)
        .into_iter()
        .map(|g| w[g].iter().sum::<C64>().norm_sqr())
        .sum())
}

/// Finite-`T` orbit average and its infinite-time limit.
#[derive(Debug, Clone)]
pub struct MeanErgodic {
    pub finite: StateVector,
    pub limit: StateVector,
}

/// `(1/T)∫₀^T exp(itL)ψ dt` and the kernel projection `P_ker(L)ψ`.
pub fn mean_ergodic_vector(d: &SpectralDecomposition, psi: &StateVector, t: f64) -> Result<MeanErgodic> {
    mean_ergodic_vector_with_tol(d, psi, t, d.kernel_tol())
}

pub fn mean_ergodic_vector_with_tol(
    d: &SpectralDecomposition,
    psi: &StateVector,
    t: f64,
    kernel_tol: f64,
) -> Result<MeanErgodic> {
    if !(t > 0.0) {
        return Err(Error::validation(format!("averaging time must be positive, got {t}")));
    }
    let c = d.coefficients(psi)?;
    let finite: DVector<C64> = DVector::from_iterator(
        c.len(),
        c.iter().zip(&d.eigenvalues).map(|(cj, &l)| cj * cesaro_kernel(l, t)),
    );
    let limit: DVector<C64> = DVector::from_iterator(
        c.len(),
        c.iter().zip(&d.eigenvalues).map(|(cj, &l)| {
            if l.abs() <= kernel_tol {
                *cj
            } else {
                C64::new(0.0, 0.0)
            }
        }),
    );
    Ok(MeanErgodic {
        finite: d.synthesize(&finite),
        limit: d.synthesize(&limit),
    })
}

/// A scalar time average together with its infinite-time limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AverageWithLimit {
    pub finite: f64,
    pub limit: f64,
}

/// `(1/T)∫₀^T ‖K exp(itL)ψ‖² dt` and its limit `Σ_g ‖K P_g ψ‖²`.
pub fn compact_rage_average(
    d: &SpectralDecomposition,
    k: &DMatrix<C64>,
    psi: &StateVector,
    t: f64,
) -> Result<AverageWithLimit> {
    compact_rage_average_with_tol(d, k, psi, t, d.default_degeneracy_tol())
}

pub fn compact_rage_average_with_tol(
    d: &SpectralDecomposition,
    k: &DMatrix<C64>,
    psi: &StateVector,
    t: f64,
    degeneracy_tol: f64,
) -> Result<AverageWithLimit> {
    if !(t > 0.0) {
        return Err(Error::validation(format!("averaging time must be positive, got {t}")));
    }
    check_dim(d.dim(), k.nrows())?;
    check_dim(d.dim(), k.ncols())?;
    let c = d.coefficients(psi)?;
    // u_j = c_j K v_j
    let kv = k * &d.eigenvectors;
    let n = d.dim();
    let cols: Vec<DVector<C64>> = (0..n).map(|j| kv.column(j) * c[j]).collect();
    let lam = &d.eigenvalues;
    let mut finite = 0.0;
    for j in 0..n {
        finite += cols[j].norm_squared();
        for m in (j + 1)..n {
            let g = cols[m].dotc(&cols[j]);
            finite += 2.0 * (g * cesaro_kernel(lam[j] - lam[m], t)).re;
        }
    }
    let limit = d
        .degenerate_groups(degeneracy_tol)
        .into_iter()
        .map(|g| {
            let mut v = DVector::<C64>::zeros(n);
            for j in g {
                v += &cols[j];
            }
            v.norm_squared()
        })
        .sum();
    Ok(AverageWithLimit { finite, limit })
}

/// Real matrix with spectrum in the closed right half-plane, carried with
/// its eigendecomposition `A = V·diag(λ)·V⁻¹`.
#[derive(Debug, Clone)]
pub struct AccretiveOperator {
    entries: DMatrix<f64>,
    eigenvalues: Vec<C64>,
    eigenvectors: DMatrix<C64>,
    inverse_eigenvectors: DMatrix<C64>,
}

impl AccretiveOperator {
    /// Validate a supplied eigendecomposition against `entries`.
    pub fn new(entries: DMatrix<f64>, eigenvalues: Vec<C64>, eigenvectors: DMatrix<C64>) -> Result<Self> {
        let n = entries.nrows();
        if !entries.is_square() || n == 0 {
            return Err(Error::validation("generator must be square and non-empty"));
        }
        check_dim(n, eigenvalues.len())?;
        check_dim(n, eigenvectors.nrows())?;
        check_dim(n, eigenvectors.ncols())?;
        if let Some(bad) = eigenvalues.iter().find(|l| l.re < -ACCRETIVE_TOL) {
            return Err(Error::validation(format!(
                "generator is not accretive: eigenvalue {bad} has negative real part"
            )));
        }
        let inverse_eigenvectors = eigenvectors
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::validation("eigenvector matrix is singular"))?;
        let a = entries.map(|x| C64::new(x, 0.0));
        let lam = DMatrix::from_diagonal(&DVector::from_column_slice(&eigenvalues));
        let resid = (&a * &eigenvectors - &eigenvectors * lam).norm();
        let scale = a.norm().max(1.0) * eigenvectors.norm();
        if resid > 1e-9 * scale {
            return Err(Error::validation(format!(
                "supplied eigendecomposition does not match the matrix (residual {resid:e})"
            )));
        }
        Ok(Self {
            entries,
            eigenvalues,
            eigenvectors,
            inverse_eigenvectors,
        })
    }

    /// Symmetric positive semidefinite generator; eigendecomposition computed.
    pub fn from_symmetric(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::validation("generator must be square"));
        }
        let eig = nalgebra::SymmetricEigen::new(entries.clone());
        let lam: Vec<C64> = eig.eigenvalues.iter().map(|&l| C64::new(l, 0.0)).collect();
        let v = eig.eigenvectors.map(|x| C64::new(x, 0.0));
        Self::new(entries, lam, v)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    /// Default kernel threshold, as for the Hermitian case.
    pub fn kernel_tol(&self) -> f64 {
        let m = self.eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max);
        (1e-9 * m).max(1e-12)
    }

    fn apply_spectral<F: Fn(C64) -> C64>(&self, f: &[f64], g: F) -> Result<Vec<f64>> {
        check_dim(self.dim(), f.len())?;
        let fv = DVector::from_iterator(f.len(), f.iter().map(|&x| C64::new(x, 0.0)));
        let mut c = &self.inverse_eigenvectors * fv;
        for (cj, &l) in c.iter_mut().zip(&self.eigenvalues) {
            *cj *= g(l);
        }
        Ok((&self.eigenvectors * c).iter().map(|z| z.re).collect())
    }

    /// `exp(-tA) f`.
    pub fn apply_semigroup(&self, f: &[f64], t: f64) -> Result<Vec<f64>> {
        self.apply_spectral(f, |l| (-l * t).exp())
    }

    /// `P_ker(A) f` along the eigenbasis.
    pub fn kernel_projection(&self, f: &[f64]) -> Result<Vec<f64>> {
        let tol = self.kernel_tol();
        self.apply_spectral(f, |l| {
            if l.norm() <= tol {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }
}

/// Finite-`T` semigroup average and its limit.
#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupAverage {
    pub finite: Vec<f64>,
    pub limit: Vec<f64>,
}

/// `(1/T)∫₀^T exp(-tA) f dt` and `P_ker(A) f`.
pub fn semigroup_ergodic_limit(a: &AccretiveOperator, f: &[f64], t: f64) -> Result<SemigroupAverage> {
    if !(t > 0.0) {
        return Err(Error::validation(format!("averaging time must be positive, got {t}")));
    }
    Ok(SemigroupAverage {
        finite: a.apply_spectral(f, |l| decay_kernel(l * t))?,
        limit: a.kernel_projection(f)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use std::f64::consts::PI;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn random_hermitian(n: usize, seed: u64) -> HermitianOperator {
        let mut r = rng::stream(seed, 0);
        let mut m = DMatrix::<C64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c(rng::normal(&mut r));
            for j in (i + 1)..n {
                let z = C64::new(rng::normal(&mut r), rng::normal(&mut r));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        HermitianOperator::new(m).unwrap()
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = DMatrix::<C64>::identity(2, 2);
        m[(0, 1)] = C64::new(0.0, 1.0);
        m[(1, 0)] = C64::new(0.0, 1.0);
        assert!(matches!(HermitianOperator::new(m), Err(Error::Validation(_))));
    }

    #[test]
    fn identity_and_diagonal() {
        let d = spectral_decompose(&HermitianOperator::diagonal(&[1.0, 1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(d.eigenvalues, vec![1.0, 1.0, 1.0]);
        assert!(d.orthonormality_error() < 1e-12);

        let d = spectral_decompose(&HermitianOperator::diagonal(&[3.0, 1.0, 2.0]).unwrap()).unwrap();
        assert_eq!(d.eigenvalues, vec![1.0, 2.0, 3.0]);
        // columns are ±standard basis vectors, reordered
        assert!((d.eigenvectors[(1, 0)].norm() - 1.0).abs() < 1e-14);
        assert!((d.eigenvectors[(2, 1)].norm() - 1.0).abs() < 1e-14);
        assert!((d.eigenvectors[(0, 2)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_reconstruction() {
        let h = random_hermitian(8, 11);
        let d = spectral_decompose(&h).unwrap();
        // oracle: rebuild V Λ V† independently of the decomposition's own check
        let mut rebuilt = DMatrix::<C64>::zeros(8, 8);
        for j in 0..8 {
            let v = d.eigenvectors.column(j);
            rebuilt += v * v.adjoint() * c(d.eigenvalues[j]);
        }
        let err = (rebuilt - h.entries()).norm() / h.entries().norm();
        assert!(err < 1e-10, "err = {err:e}");
        assert!(d.orthonormality_error() < 1e-12);
        assert!(d.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn evolution_examples() {
        let d = spectral_decompose(&HermitianOperator::diagonal(&[1.0, 2.0]).unwrap()).unwrap();
        let psi = StateVector::from_real(&[1.0, 0.0]);
        let out = evolve_unitary(&d, &psi, PI).unwrap();
        assert!((out.components[0] - c(-1.0)).norm() < 1e-14);
        assert!(out.components[1].norm() < 1e-14);

        let h = random_hermitian(5, 3);
        let d = spectral_decompose(&h).unwrap();
        let psi = StateVector::from_real(&[0.3, -1.0, 0.2, 0.0, 2.0]);
        let same = evolve_unitary(&d, &psi, 0.0).unwrap();
        assert!((same.components - &psi.components).norm() < 1e-13);

        let eig = StateVector::new(d.eigenvectors.column(2).into_owned());
        let t = 0.77;
        let rotated = evolve_unitary(&d, &eig, t).unwrap();
        let expect = &eig.components * C64::from_polar(1.0, d.eigenvalues[2] * t);
        assert!((rotated.components - expect).norm() < 1e-13);
    }

    #[test]
    fn evolve_dim_mismatch() {
        let d = spectral_decompose(&HermitianOperator::diagonal(&[1.0, 2.0]).unwrap()).unwrap();
        let psi = StateVector::from_real(&[1.0, 0.0, 0.0]);
        assert!(matches!(
            evolve_unitary(&d, &psi, 1.0),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn cesaro_two_level() {
        let d = spectral_decompose(&HermitianOperator::diagonal(&[1.0, 2.0]).unwrap()).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let psi = StateVector::from_real(&[s, s]);
        // integrand 1/2 + cos(t)/2 over a full period
        let v = cesaro_correlation_checked(&d, &psi, &psi, 2.0 * PI, 64).unwrap();
        assert!((v - 0.5).abs() < 1e-14);
        let lim = cesaro_limit_exact(&d, &psi, &psi, d.default_degeneracy_tol()).unwrap();
        assert!((lim - 0.5).abs() < 1e-15);
        // closed form at another T: 1/2 + sin(T)/(2T)
        let t = 3.3;
        let v = cesaro_correlation(&d, &psi, &psi, t).unwrap();
        assert!((v - (0.5 + t.sin() / (2.0 * t))).abs() < 1e-14);
    }

    #[test]
    fn cesaro_eigenvector_and_orthogonal() {
        let h = random_hermitian(6, 5);
        let d = spectral_decompose(&h).unwrap();
        let v = StateVector::new(d.eigenvectors.column(1).into_owned());
        let w = StateVector::new(d.eigenvectors.column(4).into_owned());
        for t in [0.1, 1.0, 50.0] {
            assert!((cesaro_correlation(&d, &v, &v, t).unwrap() - 1.0).abs() < 1e-12);
            assert!(cesaro_correlation(&d, &w, &v, t).unwrap().abs() < 1e-24);
        }
    }

    #[test]
    fn cesaro_rejects_bad_time() {
        let d = spectral_decompose(&HermitianOperator::diagonal(&[1.0]).unwrap()).unwrap();
        let p = StateVector::from_real(&[1.0]);
        assert!(cesaro_correlation(&d, &p, &p, 0.0).is_err());
        assert!(cesaro_correlation_quadrature(&d, &p, &p, 1.0, 1).is_err());
    }

    #[test]
    fn limit_single_group_and_uniform() {
        let d = spectral_decompose(&HermitianOperator::diagonal(&[2.0, 2.0, 2.0]).unwrap()).unwrap();
        let a = StateVector::from_real(&[1.0, 2.0, 0.5]);
        let b = StateVector::from_real(&[0.3, -1.0, 4.0]);
        let lim = cesaro_limit_exact(&d, &a, &b, 1e-12).unwrap();
        assert!((lim - a.inner(&b).norm_sqr()).abs() < 1e-12);

        let n = 7;
        let vals: Vec<f64> = (0..n).map(|j| j as f64 * 0.5 - 1.0).collect();
        let d = spectral_decompose(&HermitianOperator::diagonal(&vals).unwrap()).unwrap();
        let psi = StateVector::from_real(&vec![1.0 / (n as f64).sqrt(); n]);
        let lim = cesaro_limit_exact(&d, &psi, &psi, d.default_degeneracy_tol()).unwrap();
        assert!((lim - 1.0 / n as f64).abs() < 1e-15);
    }

    #[test]
    fn mean_ergodic_examples() {
        let d = spectral_decompose(&HermitianOperator::diagonal(&[0.0, 3.0]).unwrap()).unwrap();
        let psi = StateVector::from_real(&[0.4, -1.2]);
        let me = mean_ergodic_vector(&d, &psi, 10.0).unwrap();
        assert!((me.limit.components[0] - c(0.4)).norm() < 1e-15);
        assert!(me.limit.components[1].norm() < 1e-15);

        let k = StateVector::from_real(&[1.5, 0.0]);
        for t in [0.5, 7.0, 1e3] {
            let me = mean_ergodic_vector(&d, &k, t).unwrap();
            assert!((me.finite.components - &k.components).norm() < 1e-14);
        }

        let d = spectral_decompose(&HermitianOperator::diagonal(&[0.0, 1.0]).unwrap()).unwrap();
        let psi = StateVector::from_real(&[0.0, 1.0]);
        let me = mean_ergodic_vector(&d, &psi, 2.0 * PI).unwrap();
        assert!(me.finite.norm() < 1e-15);
    }

    #[test]
    fn compact_examples() {
        let d = spectral_decompose(&HermitianOperator::diagonal(&[1.0, 2.0]).unwrap()).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let psi = StateVector::from_real(&[s, s]);
        let mut proj = DMatrix::<C64>::zeros(2, 2);
        proj[(0, 0)] = c(1.0);
        let r = compact_rage_average(&d, &proj, &psi, 100.0).unwrap();
        assert!((r.limit - 0.5).abs() < 1e-15);
        // K commutes with L here, so the average is exactly the limit
        assert!((r.finite - 0.5).abs() < 1e-15);

        let zero = DMatrix::<C64>::zeros(2, 2);
        let r = compact_rage_average(&d, &zero, &psi, 3.0).unwrap();
        assert_eq!((r.finite, r.limit), (0.0, 0.0));

        let h = random_hermitian(5, 9);
        let d = spectral_decompose(&h).unwrap();
        let psi = StateVector::from_real(&[1.0, 2.0, -1.0, 0.5, 0.1]);
        let id = DMatrix::<C64>::identity(5, 5);
        let r = compact_rage_average(&d, &id, &psi, 4.0).unwrap();
        let n2 = psi.norm().powi(2);
        assert!((r.limit - n2).abs() < 1e-12);
        assert!((r.finite - n2).abs() < 1e-12);
    }

    #[test]
    fn compact_finite_matches_quadrature_of_norm() {
        let h = random_hermitian(4, 21);
        let d = spectral_decompose(&h).unwrap();
        let mut r = rng::stream(21, 1);
        let k = DMatrix::<C64>::from_fn(4, 4, |_, _| C64::new(rng::normal(&mut r), rng::normal(&mut r)));
        let psi = StateVector::from_real(&[0.2, 1.0, -0.7, 0.4]);
        let t = 6.0;
        let got = compact_rage_average(&d, &k, &psi, t).unwrap().finite;
        let quad = quadrature::composite_gauss(
            |s| (&k * evolve_unitary(&d, &psi, s).unwrap().components).norm_squared(),
            0.0,
            t,
            200,
            8,
        ) / t;
        assert!((got - quad).abs() < 1e-10, "{got} vs {quad}");
    }

    #[test]
    fn semigroup_examples() {
        let a = AccretiveOperator::from_symmetric(DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0]))).unwrap();
        let s = semigroup_ergodic_limit(&a, &[1.0, 1.0], 5.0).unwrap();
        assert!((s.limit[0] - 1.0).abs() < 1e-15 && s.limit[1].abs() < 1e-15);
        assert!((s.finite[0] - 1.0).abs() < 1e-15);
        assert!((s.finite[1] - (1.0 - (-5.0f64).exp()) / 5.0).abs() < 1e-14);

        let a = AccretiveOperator::from_symmetric(DMatrix::from_element(1, 1, 2.0)).unwrap();
        let s = semigroup_ergodic_limit(&a, &[1.0], 1.0).unwrap();
        let expect = (1.0 - (-2.0f64).exp()) / 2.0;
        assert!((s.finite[0] - expect).abs() < 1e-14);
        assert!((s.finite[0] - 0.4323).abs() < 1e-4);
        assert_eq!(s.limit[0], 0.0);
    }

    #[test]
    fn semigroup_rejects_growing_mode() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![-0.5, 1.0]));
        assert!(AccretiveOperator::from_symmetric(m).is_err());
    }

    #[test]
    fn semigroup_non_normal_generator() {
        // upper triangular, eigenvalues 0 and 1
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0]);
        let v = DMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(1.0)]);
        let op = AccretiveOperator::new(a, vec![c(0.0), c(1.0)], v).unwrap();
        let f = [0.3, 2.0];
        // explicit RK4 oracle for f' = -A f with trapezoid time integral
        let t_end = 40.0;
        let dt = 1e-3;
        let rhs = |x: &[f64; 2]| [-(x[1]), -x[1]];
        let mut x = f;
        let mut integral = [0.0, 0.0];
        let steps = (t_end / dt) as usize;
        for _ in 0..steps {
            let k1 = rhs(&x);
            let x2 = [x[0] + 0.5 * dt * k1[0], x[1] + 0.5 * dt * k1[1]];
            let k2 = rhs(&x2);
            let x3 = [x[0] + 0.5 * dt * k2[0], x[1] + 0.5 * dt * k2[1]];
            let k3 = rhs(&x3);
            let x4 = [x[0] + dt * k3[0], x[1] + dt * k3[1]];
            let k4 = rhs(&x4);
            let next = [
                x[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                x[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            ];
            integral[0] += 0.5 * dt * (x[0] + next[0]);
            integral[1] += 0.5 * dt * (x[1] + next[1]);
            x = next;
        }
        let s = semigroup_ergodic_limit(&op, &f, t_end).unwrap();
        for i in 0..2 {
            assert!((s.finite[i] - integral[i] / t_end).abs() < 1e-6);
            assert!((x[i] - s.limit[i]).abs() < 1e-4);
        }
    }

    #[test]
    fn kernel_series_branch_is_continuous() {
        for &w in &[1e-6, 9.99e-5, 1.0001e-4] {
            let a = cesaro_kernel(w, 1.0);
            let x = w;
            let direct = C64::new(x.sin() / x, (1.0 - x.cos()) / x);
            assert!((a - direct).norm() < 1e-9);
        }
    }
}
