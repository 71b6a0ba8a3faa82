//! Cesàro averages of unitary orbits and ergodic limits.
//!
//! Artifacts:
//! * `cesaro.csv`: `n, horizon, limit, finite, relative_gap`
//! * `doubling.csv`: `case, horizon, rms_error, ratio`

use ergokit_core::io::Csv;
use ergokit_core::quadrature::composite_gauss;
use ergokit_core::rng;
use ergokit_core::spectral::{
    cesaro_correlation, cesaro_correlation_quadrature, cesaro_limit_exact, compact_rage_average, mean_ergodic_vector,
    semigroup_ergodic_limit, spectral_decompose, AccretiveOperator, HermitianOperator, SpectralDecomposition,
    StateVector, RECONSTRUCTION_TOL,
};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Deserialize;

use super::{nonzero, positive};
use crate::{Context, HarnessError, Recorder};

/// Tolerance on `1/n` for the exact limit.
const LIMIT_TOL: f64 = 1e-12;
/// Relative tolerance of the finite-horizon average.
const FINITE_TOL: f64 = 0.05;
const QUADRATURE_TOL: f64 = 1e-8;
const IDENTITY_TOL: f64 = 1e-10;
/// Band for the error ratio under horizon doubling.
const DOUBLING_BAND: (f64, f64) = (1.6, 2.4);

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Superposition sizes.
    pub ns: Vec<usize>,
    /// Horizon in units of the inverse minimal gap.
    pub horizon_gaps: f64,
    /// Largest `n` also checked against time quadrature.
    pub quadrature_max_n: usize,
    /// Largest `n` for the compact-operator average.
    pub compact_max_n: usize,
    /// First horizon of the doubling sequence.
    pub doubling_start: f64,
    pub doublings: usize,
    /// Size of the path-graph generator used for the ergodic limits.
    pub graph_size: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            ns: vec![2, 10, 100, 1000],
            horizon_gaps: 1e4,
            quadrature_max_n: 10,
            compact_max_n: 100,
            doubling_start: 100.0,
            doublings: 4,
            graph_size: 6,
        }
    }
}

impl super::Params for Params {
    fn check(&self) -> Result<(), HarnessError> {
        if self.ns.is_empty() || self.ns.iter().any(|&n| n < 2) {
            return Err(HarnessError::Config("ns must be non-empty with every n ≥ 2".into()));
        }
        positive("horizon_gaps", self.horizon_gaps)?;
        positive("doubling_start", self.doubling_start)?;
        nonzero("doublings", self.doublings)?;
        if self.graph_size < 2 {
            return Err(HarnessError::Config("graph_size must be at least 2".into()));
        }
        Ok(())
    }
}

struct CesaroRow {
    n: usize,
    horizon: f64,
    limit: f64,
    finite: f64,
    quadrature_gap: Option<f64>,
    compact: Option<(f64, f64)>,
}

fn cesaro_case(p: &Params, n: usize, seed: u64, stream: u64) -> Result<CesaroRow, HarnessError> {
    let ctx = |s: &str| format!("rage-decay n={n}: {s}");
    let lam: Vec<f64> = (0..n).map(|j| j as f64).collect();
    let h = HermitianOperator::diagonal(&lam).context(&ctx("operator"))?;
    let d = spectral_decompose(&h).context(&ctx("decomposition"))?;
    let mut r = rng::stream(seed, stream);
    let amp = 1.0 / (n as f64).sqrt();
    let psi: Vec<C64> = (0..n)
        .map(|_| C64::from_polar(amp, rng::uniform(&mut r) * std::f64::consts::TAU))
        .collect();
    let psi = StateVector::from_complex(&psi);
    let gap = d.min_gap(d.default_degeneracy_tol());
    let horizon = p.horizon_gaps / gap;
    let limit = cesaro_limit_exact(&d, &psi, &psi, d.default_degeneracy_tol()).context(&ctx("limit"))?;
    let finite = cesaro_correlation(&d, &psi, &psi, horizon).context(&ctx("average"))?;
    let quadrature_gap = if n <= p.quadrature_max_n {
        // enough 8-node panels to resolve the fastest beat
        let panels = (d.diameter() * horizon / std::f64::consts::PI).ceil() as usize + 16;
        let q = cesaro_correlation_quadrature(&d, &psi, &psi, horizon, panels).context(&ctx("quadrature"))?;
        Some((q - finite).abs())
    } else {
        None
    };
    let compact = if n <= p.compact_max_n {
        let mut k = DMatrix::<C64>::zeros(n, n);
        k[(0, 0)] = C64::new(1.0, 0.0);
        let a = compact_rage_average(&d, &k, &psi, horizon).context(&ctx("compact average"))?;
        Some((a.finite, a.limit))
    } else {
        None
    };
    Ok(CesaroRow {
        n,
        horizon,
        limit,
        finite,
        quadrature_gap,
        compact,
    })
}

/// Free-boundary path-graph Laplacian: its kernel is the constants.
fn path_laplacian(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            if i == 0 || i + 1 == n {
                1.0
            } else {
                2.0
            }
        } else if i.abs_diff(j) == 1 {
            -1.0
        } else {
            0.0
        }
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// RMS over `[t, 2t]` of `err(s)`, by composite Gauss quadrature fine
/// enough to resolve frequencies up to `omega_max`.
fn window_rms<F: Fn(f64) -> f64>(err: F, t: f64, omega_max: f64) -> f64 {
    let panels = (omega_max * t / std::f64::consts::PI).ceil() as usize + 16;
    (composite_gauss(|s| err(s).powi(2), t, 2.0 * t, panels, 8) / t).sqrt()
}

fn doubling_rows<F: Fn(f64) -> f64>(p: &Params, err: F, omega_max: f64) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    let mut prev: Option<f64> = None;
    for j in 0..=p.doublings {
        let t = p.doubling_start * 2f64.powi(j as i32);
        let e = window_rms(&err, t, omega_max);
        out.push((t, e, prev.map_or(f64::NAN, |q| q / e)));
        prev = Some(e);
    }
    out
}

pub fn run(p: &Params, seed: u64, rec: &mut Recorder) -> Result<(), HarnessError> {
    let rows: Vec<CesaroRow> = p
        .ns
        .par_iter()
        .enumerate()
        .map(|(i, &n)| cesaro_case(p, n, seed, i as u64))
        .collect::<Result<_, _>>()?;

    let mut csv = Csv::new(&["n", "horizon", "limit", "finite", "relative_gap"]);
    for r in &rows {
        let expect = 1.0 / r.n as f64;
        let rel = (r.finite - r.limit).abs() / r.limit;
        csv.row(&[r.n.into(), r.horizon.into(), r.limit.into(), r.finite.into(), rel.into()]);
        rec.at_most(
            format!("cesaro_limit_n{}", r.n),
            (r.limit - expect).abs(),
            LIMIT_TOL,
            format!("limit {} vs 1/n", r.limit),
        );
        rec.at_most(
            format!("cesaro_finite_n{}", r.n),
            rel,
            FINITE_TOL,
            format!("average at T = {} is {}", r.horizon, r.finite),
        );
        if let Some(g) = r.quadrature_gap {
            rec.at_most(format!("cesaro_quadrature_n{}", r.n), g, QUADRATURE_TOL, "closed form vs time quadrature");
        }
        if let Some((finite, limit)) = r.compact {
            rec.at_most(
                format!("compact_limit_n{}", r.n),
                (limit - expect).abs(),
                LIMIT_TOL,
                "rank-one K: limit is |ψ_1|²",
            );
            rec.at_most(
                format!("compact_finite_n{}", r.n),
                (finite - limit).abs() / limit,
                FINITE_TOL,
                format!("average {finite}"),
            );
        }
    }
    rec.artifact("cesaro.csv", csv);

    ergodic_limits(p, seed, rec)
}

fn ergodic_limits(p: &Params, seed: u64, rec: &mut Recorder) -> Result<(), HarnessError> {
    let n = p.graph_size;
    let lap = path_laplacian(n);
    let mut r = rng::stream(seed, 1 << 32);
    let f: Vec<f64> = rng::normal_vec(&mut r, n);
    let mean = f.iter().sum::<f64>() / n as f64;
    let constant = vec![mean; n];
    let mut csv = Csv::new(&["case", "horizon", "rms_error", "ratio"]);

    // unitary orbit exp(itL)ψ
    let h = HermitianOperator::from_real_symmetric(&lap).context("path operator")?;
    let d: SpectralDecomposition = spectral_decompose(&h).context("path decomposition")?;
    rec.at_most(
        "decomposition_reconstruction",
        d.reconstruction_error(&h),
        RECONSTRUCTION_TOL,
        "‖V diag(λ) V* - L‖",
    );
    let psi = StateVector::from_real(&f);
    let me = mean_ergodic_vector(&d, &psi, 1.0).context("mean-ergodic limit")?;
    let limit_re: Vec<f64> = me.limit.components.iter().map(|z| z.re).collect();
    let limit_im = me.limit.components.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    rec.at_most(
        "unitary_limit_identity",
        max_abs_diff(&limit_re, &constant).max(limit_im),
        IDENTITY_TOL,
        "limit equals projection onto constants",
    );
    let omega = d.diameter();
    let err = |t: f64| {
        let m = mean_ergodic_vector(&d, &psi, t).expect("positive horizon");
        (&m.finite.components - &m.limit.components).norm()
    };
    for (t, e, ratio) in doubling_rows(p, err, omega) {
        csv.row(&["unitary".into(), t.into(), e.into(), ratio.into()]);
        if ratio.is_finite() {
            rec.within(format!("unitary_doubling_T{t}"), ratio, DOUBLING_BAND.0, DOUBLING_BAND.1, "O(1/T) decay");
        }
    }

    // symmetric semigroup exp(-tL)
    let sym = AccretiveOperator::from_symmetric(lap.clone()).context("symmetric generator")?;
    let lim = semigroup_ergodic_limit(&sym, &f, 1.0).context("semigroup limit")?;
    rec.at_most(
        "semigroup_symmetric_identity",
        max_abs_diff(&lim.limit, &constant),
        IDENTITY_TOL,
        "limit equals projection onto constants",
    );
    let err = |t: f64| {
        let a = semigroup_ergodic_limit(&sym, &f, t).expect("positive horizon");
        a.finite.iter().zip(&a.limit).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    };
    for (t, e, ratio) in doubling_rows(p, err, 1.0) {
        csv.row(&["semigroup_symmetric".into(), t.into(), e.into(), ratio.into()]);
        if ratio.is_finite() {
            rec.within(
                format!("semigroup_symmetric_doubling_T{t}"),
                ratio,
                DOUBLING_BAND.0,
                DOUBLING_BAND.1,
                "O(1/T) decay",
            );
        }
    }

    // non-normal idempotent generator: P_ker = I - A
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0]);
    let c = |x: f64| C64::new(x, 0.0);
    let v = DMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(1.0)]);
    let nn = AccretiveOperator::new(a, vec![c(0.0), c(1.0)], v).context("non-normal generator")?;
    let g = [f[0], f[1 % n]];
    let lim = semigroup_ergodic_limit(&nn, &g, 1.0).context("non-normal limit")?;
    let oracle = [g[0] - g[1], 0.0];
    let again = nn.kernel_projection(&lim.limit).context("projection")?;
    rec.at_most(
        "semigroup_nonnormal_identity",
        max_abs_diff(&lim.limit, &oracle).max(max_abs_diff(&again, &lim.limit)),
        IDENTITY_TOL,
        "limit equals (I - A)f and is idempotent",
    );
    let err = |t: f64| {
        let s = semigroup_ergodic_limit(&nn, &g, t).expect("positive horizon");
        s.finite.iter().zip(&s.limit).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    };
    for (t, e, ratio) in doubling_rows(p, err, 1.0) {
        csv.row(&["semigroup_nonnormal".into(), t.into(), e.into(), ratio.into()]);
        if ratio.is_finite() {
            rec.within(
                format!("semigroup_nonnormal_doubling_T{t}"),
                ratio,
                DOUBLING_BAND.0,
                DOUBLING_BAND.1,
                "O(1/T) decay",
            );
        }
    }
    rec.artifact("doubling.csv", csv);
    Ok(())
}
