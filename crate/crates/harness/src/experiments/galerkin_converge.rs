//! Spectral Galerkin solution of the defocusing wave equation, and its
//! agreement with the wave chain.
//!
//! Artifacts:
//! * `single_mode.csv`: `dt, error`
//! * `convergence.csv`: `data, n_coarse, n_fine, l2_difference`
//! * `cross_solver.csv`: `solver, resolution, dt, value_at_origin`
//!
//! The a priori bound, interpolation and Gronwall results appear only as checks.

use ergokit_core::chain::{self, ChainParams, ChainState};
use ergokit_core::galerkin::{
    convergence_study, gronwall_stability_check, holder_interpolation_check, integrate_wave, GalerkinSpec, ModeState,
};
use ergokit_core::io::Csv;
use ergokit_core::rng;
use rayon::prelude::*;
use serde::Deserialize;

use super::{nonzero, positive, ratio, HALVING_BAND};
use crate::{Context, HarnessError, Recorder};

const A_PRIORI_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub a: f64,
    pub g: f64,
    pub k: u32,
    /// Horizon and coarse step of the single-mode accuracy test.
    pub single_mode_horizon: f64,
    pub single_mode_dt: f64,
    pub convergence_ns: Vec<usize>,
    pub convergence_horizon: f64,
    pub convergence_dt: f64,
    /// Modes, horizon and step of the a priori bound and energy-drift runs.
    pub energy_n: usize,
    pub energy_horizon: f64,
    pub energy_dt: f64,
    pub holder_fields: usize,
    pub holder_q: f64,
    pub gronwall_n: usize,
    pub gronwall_delta: f64,
    pub gronwall_horizon: f64,
    pub gronwall_dt: f64,
    /// Chain sizes (coarse, fine) and Galerkin sizes (coarse, fine) of the
    /// cross-solver comparison, its amplitude and horizon.
    pub cross_chain_ns: (usize, usize),
    pub cross_galerkin_ns: (usize, usize),
    pub cross_amplitude: f64,
    pub cross_horizon: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            a: 1.0,
            g: 1.0,
            k: 2,
            single_mode_horizon: 10.0,
            single_mode_dt: 0.05,
            convergence_ns: vec![8, 16, 32],
            convergence_horizon: 1.0,
            convergence_dt: 1e-3,
            energy_n: 32,
            energy_horizon: 5.0,
            energy_dt: 2e-4,
            holder_fields: 1000,
            holder_q: 3.0,
            gronwall_n: 16,
            gronwall_delta: 1e-6,
            gronwall_horizon: 5.0,
            gronwall_dt: 1e-3,
            cross_chain_ns: (128, 256),
            cross_galerkin_ns: (16, 32),
            cross_amplitude: 1.0,
            cross_horizon: 2.0,
        }
    }
}

impl super::Params for Params {
    fn check(&self) -> Result<(), HarnessError> {
        for (name, v) in [
            ("a", self.a),
            ("single_mode_horizon", self.single_mode_horizon),
            ("single_mode_dt", self.single_mode_dt),
            ("convergence_horizon", self.convergence_horizon),
            ("convergence_dt", self.convergence_dt),
            ("energy_horizon", self.energy_horizon),
            ("energy_dt", self.energy_dt),
            ("gronwall_horizon", self.gronwall_horizon),
            ("gronwall_dt", self.gronwall_dt),
            ("cross_horizon", self.cross_horizon),
        ] {
            positive(name, v)?;
        }
        GalerkinSpec::single_term(self.energy_n, self.a, self.g, self.k).context("spec")?;
        nonzero("gronwall_n", self.gronwall_n)?;
        if !(self.gronwall_delta >= 0.0) {
            return Err(HarnessError::Config("gronwall_delta must be non-negative".into()));
        }
        let (c0, c1) = self.cross_chain_ns;
        let (g0, g1) = self.cross_galerkin_ns;
        if c0 % 2 != 0 || c1 % 2 != 0 || c0 == 0 || c0 >= c1 || g0 == 0 || g0 >= g1 {
            return Err(HarnessError::Config(
                "cross-solver sizes must increase and chain sizes must be even".into(),
            ));
        }
        Ok(())
    }
}

fn spec(p: &Params, n: usize) -> Result<GalerkinSpec, HarnessError> {
    GalerkinSpec::single_term(n, p.a, p.g, p.k).context("Galerkin spec")
}

pub fn run(p: &Params, seed: u64, rec: &mut Recorder) -> Result<(), HarnessError> {
    single_mode(p, rec)?;
    convergence(p, rec)?;
    energy(p, rec)?;
    holder(p, seed, rec)?;
    gronwall(p, seed, rec)?;
    cross_solver(p, rec)
}

/// Linear problem in mode 1: `u₁(t) = cos(√μ₁ t)`.
fn single_mode(p: &Params, rec: &mut Recorder) -> Result<(), HarnessError> {
    let lin = GalerkinSpec::single_term(4, p.a, 0.0, p.k).context("linear spec")?;
    let omega = lin.eigenvalue(1).sqrt();
    let err = |dt: f64| -> Result<f64, HarnessError> {
        let s0 = ModeState::at_rest(vec![1.0, 0.0, 0.0, 0.0]);
        let tr = integrate_wave(&lin, &s0, p.single_mode_horizon, dt, 1).context("linear run")?;
        Ok(tr
            .states
            .iter()
            .map(|s| (s.u[0] - (omega * s.t).cos()).abs())
            .fold(0.0, f64::max))
    };
    let coarse = err(p.single_mode_dt)?;
    let fine = err(0.5 * p.single_mode_dt)?;
    let mut csv = Csv::new(&["dt", "error"]);
    csv.row(&[p.single_mode_dt.into(), coarse.into()]);
    csv.row(&[(0.5 * p.single_mode_dt).into(), fine.into()]);
    rec.artifact("single_mode.csv", csv);
    rec.within(
        "single_mode_halving",
        ratio(coarse, fine),
        HALVING_BAND.0,
        HALVING_BAND.1,
        format!("max error {coarse:e} → {fine:e}"),
    );
    Ok(())
}

fn convergence(p: &Params, rec: &mut Recorder) -> Result<(), HarnessError> {
    let terms = spec(p, 1)?.terms;
    let a = p.a;
    let smooth = move |x: f64| 1.0 - (x / a).powi(2);
    let rough = move |x: f64| 1.0 - (x / a).abs();
    let (t_smooth, t_rough) = rayon::join(
        || convergence_study(p.a, &terms, &p.convergence_ns, smooth, p.convergence_horizon, p.convergence_dt),
        || convergence_study(p.a, &terms, &p.convergence_ns, rough, p.convergence_horizon, p.convergence_dt),
    );
    let mut csv = Csv::new(&["data", "n_coarse", "n_fine", "l2_difference"]);
    for (name, t) in [("smooth", t_smooth.context("smooth study")?), ("rough", t_rough.context("rough study")?)] {
        for r in &t.rows {
            csv.row(&[name.into(), r.n_coarse.into(), r.n_fine.into(), r.l2_difference.into()]);
        }
        let diffs: Vec<String> = t.rows.iter().map(|r| format!("{:e}", r.l2_difference)).collect();
        rec.flag(
            format!("convergence_{name}_decreasing"),
            t.strictly_decreasing,
            format!("successive L² differences {}", diffs.join(", ")),
        );
    }
    rec.artifact("convergence.csv", csv);
    Ok(())
}

fn energy(p: &Params, rec: &mut Recorder) -> Result<(), HarnessError> {
    let s = spec(p, p.energy_n)?;
    let a = p.a;
    let s0 = ModeState::at_rest(s.project(|x| 1.0 - (x / a).powi(2)).context("projection")?);
    let runs: Vec<_> = [p.energy_dt, 2.0 * p.energy_dt, 4.0 * p.energy_dt]
        .par_iter()
        .map(|&dt| integrate_wave(&s, &s0, p.energy_horizon, dt, usize::MAX).context("energy run"))
        .collect::<Result<_, _>>()?;
    rec.at_most(
        "a_priori_bound",
        runs[0].a_priori_ratio() - 1.0,
        A_PRIORI_TOL,
        "max_t E(t)/E(0) - 1",
    );
    rec.within(
        "energy_drift_halving",
        ratio(runs[2].max_relative_drift(), runs[1].max_relative_drift()),
        HALVING_BAND.0,
        HALVING_BAND.1,
        format!(
            "drift {:e} → {:e}",
            runs[2].max_relative_drift(),
            runs[1].max_relative_drift()
        ),
    );
    Ok(())
}

/// Random smooth fields: sine series with decaying random coefficients.
fn holder(p: &Params, seed: u64, rec: &mut Recorder) -> Result<(), HarnessError> {
    let s = spec(p, 16)?;
    let grid = s.grid().context("grid")?;
    let mut r = rng::stream(seed, 7);
    let fields: Vec<Vec<f64>> = (0..p.holder_fields)
        .map(|_| {
            let u: Vec<f64> = (1..=s.n).map(|m| rng::normal(&mut r) / (m * m) as f64).collect();
            grid.field(&u)
        })
        .collect();
    let h = holder_interpolation_check(&fields, &grid.weights, p.holder_q, p.k).context("interpolation")?;
    rec.flag(
        "holder_interpolation",
        h.passed,
        format!("θ = {}, min slack {:e} over {} fields", h.theta, h.min_slack, fields.len()),
    );
    Ok(())
}

fn gronwall(p: &Params, seed: u64, rec: &mut Recorder) -> Result<(), HarnessError> {
    let s = spec(p, p.gronwall_n)?;
    let a = p.a;
    let u0 = s.project(|x| 1.0 - (x / a).powi(2)).context("projection")?;
    let mut r = rng::stream(seed, 8);
    let bump: Vec<f64> = (1..=s.n).map(|m| rng::normal(&mut r) / (m * m) as f64).collect();
    let g = gronwall_stability_check(&s, &u0, &bump, p.gronwall_delta, p.gronwall_horizon, p.gronwall_dt)
        .context("Gronwall")?;
    rec.at_most(
        "gronwall_envelope",
        g.sup_ratio,
        1.0 + ergokit_core::galerkin::GRONWALL_TOL,
        format!("measured M = {}, rate {}", g.m, g.rate),
    );
    let lin = GalerkinSpec::single_term(p.gronwall_n, p.a, 0.0, p.k).context("linear spec")?;
    let g0 = gronwall_stability_check(&lin, &u0, &bump, p.gronwall_delta, p.gronwall_horizon, p.gronwall_dt)
        .context("linear Gronwall")?;
    rec.at_most(
        "gronwall_linear_constant",
        (g0.sup_ratio - 1.0).abs(),
        1e-6,
        "linear problem: energy norm of the difference is conserved",
    );
    let z = gronwall_stability_check(&s, &u0, &bump, 0.0, p.gronwall_horizon, p.gronwall_dt).context("uniqueness")?;
    rec.flag("gronwall_uniqueness", z.passed && z.sup_ratio == 0.0, "δ = 0 gives W ≡ 0");
    Ok(())
}

/// Chain on `N` sites whose Dirichlet ghosts sit at `±a`: spacing
/// `2a/(N+1)`, so the chain half-length parameter is `aN/(N+1)`. Returns
/// `U(0, T)` by averaging the two sites adjacent to the origin.
fn chain_centre(p: &Params, n: usize) -> Result<(f64, f64), HarnessError> {
    let prm = ChainParams::new(n, p.a * n as f64 / (n as f64 + 1.0), p.g, p.k).context("chain")?;
    let dx = prm.dx();
    let q0: Vec<f64> = (1..=n)
        .map(|i| p.cross_amplitude * (std::f64::consts::FRAC_PI_2 * (-p.a + i as f64 * dx) / p.a).cos())
        .collect();
    let dt = dx / 8.0;
    let steps = (p.cross_horizon / dt).round() as usize;
    let dt = p.cross_horizon / steps as f64;
    let end = chain::integrate(&ChainState::at_rest(q0), &prm, dt, steps, |_| {}).context("chain run")?;
    Ok((0.5 * (end.q[n / 2 - 1] + end.q[n / 2]), dt))
}

fn galerkin_centre(p: &Params, n: usize) -> Result<(f64, f64), HarnessError> {
    let s = spec(p, n)?;
    let a = p.a;
    let amp = p.cross_amplitude;
    let u0 = s
        .project(|x| amp * (std::f64::consts::FRAC_PI_2 * x / a).cos())
        .context("projection")?;
    let dt = 0.016 / n as f64;
    let steps = (p.cross_horizon / dt).round() as usize;
    let dt = p.cross_horizon / steps as f64;
    let tr = integrate_wave(&s, &ModeState::at_rest(u0), p.cross_horizon, dt, usize::MAX).context("Galerkin run")?;
    Ok((s.field_at(&tr.final_state().u, 0.0), dt))
}

fn cross_solver(p: &Params, rec: &mut Recorder) -> Result<(), HarnessError> {
    let (c0, c1) = p.cross_chain_ns;
    let (g0, g1) = p.cross_galerkin_ns;
    let jobs = [("chain", c0), ("chain", c1), ("galerkin", g0), ("galerkin", g1)];
    let vals: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(solver, n)| if solver == "chain" { chain_centre(p, n) } else { galerkin_centre(p, n) })
        .collect::<Result<_, _>>()?;
    let mut csv = Csv::new(&["solver", "resolution", "dt", "value_at_origin"]);
    for ((solver, n), (v, dt)) in jobs.iter().zip(&vals) {
        csv.row(&[(*solver).into(), (*n).into(), (*dt).into(), (*v).into()]);
    }
    rec.artifact("cross_solver.csv", csv);
    let chain_err = (vals[1].0 - vals[0].0).abs();
    let gal_err = (vals[3].0 - vals[2].0).abs();
    let gap = (vals[1].0 - vals[3].0).abs();
    rec.at_most(
        "cross_solver_agreement",
        gap,
        chain_err + gal_err,
        format!(
            "chain N={c1}: {}, Galerkin n={g1}: {}; self-convergence {chain_err:e} + {gal_err:e}",
            vals[1].0, vals[3].0
        ),
    );
    Ok(())
}
