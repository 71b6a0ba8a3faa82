//! The discretised nonlinear wave chain.
//!
//! `N` interior sites on `(-a, a)` with spacing `dx = 2a/N` and implicit
//! Dirichlet ghosts `q_0 = q_{N+1} = 0`. The Hamiltonian is
//!
//! ```text
//! H = Σ dx·p_i²/2 + Σ_{i=0..N} dx·((q_{i+1}-q_i)/dx)²/2 + Σ dx·(g/2k)·q_i^{2k}
//! ```
//!
//! with `p` the site velocity, so the flow is `q̇ = p`,
//! `ṗ = Δ_h q - g q^{2k-1}`, and `exp(-βH)` is the matching Boltzmann weight.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::observable::ObservableSpec;
use crate::stats::{self, EstimateWithError, Method};

/// States with any `|q_i|` or `|p_i|` above this are treated as diverged.
pub const DIVERGENCE_BOUND: f64 = 1e100;
/// Central-difference step for the flow-map Jacobian.
pub const JACOBIAN_FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainParams {
    /// Interior site count.
    pub n: usize,
    /// Half-length of the domain.
    pub a: f64,
    pub g: f64,
    /// Nonlinearity power: the potential is `q^{2k}`.
    pub k: u32,
    #[serde(default)]
    pub nu: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
}

fn default_beta() -> f64 {
    1.0
}

impl ChainParams {
    pub fn new(n: usize, a: f64, g: f64, k: u32) -> Result<Self> {
        let p = Self {
            n,
            a,
            g,
            k,
            nu: 0.0,
            beta: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_nu(mut self, nu: f64) -> Result<Self> {
        self.nu = nu;
        self.validate()?;
        Ok(self)
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        self.beta = beta;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::validation("chain needs at least one site"));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::validation("half-length a must be positive"));
        }
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return Err(Error::validation("coupling g must be non-negative"));
        }
        if self.k == 0 {
            return Err(Error::validation("nonlinearity power k must be at least 1"));
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::validation("viscosity nu must be non-negative"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::validation("inverse temperature beta must be positive"));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.a / self.n as f64
    }

    /// Position of site `i` (0 and `N+1` are the ghosts).
    pub fn site_position(&self, i: usize) -> f64 {
        -self.a + i as f64 * self.dx()
    }

    /// Angular frequency of harmonic normal mode `m ∈ 1..=N`.
    pub fn normal_mode_frequency(&self, m: usize) -> f64 {
        2.0 / self.dx() * (m as f64 * std::f64::consts::PI / (2.0 * (self.n as f64 + 1.0))).sin()
    }

    /// Unnormalised shape of normal mode `m` at the interior sites.
    pub fn normal_mode_shape(&self, m: usize) -> Vec<f64> {
        let np1 = self.n as f64 + 1.0;
        (1..=self.n)
            .map(|i| (m as f64 * std::f64::consts::PI * i as f64 / np1).sin())
            .collect()
    }

    /// Stiffness `(1/dx)·tridiag(-1, 2, -1)`: the quadratic part of the
    /// potential energy is `½ qᵀ A q`.
    pub fn stiffness(&self) -> DMatrix<f64> {
        let n = self.n;
        let inv = 1.0 / self.dx();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0 * inv
            } else if i.abs_diff(j) == 1 {
                -inv
            } else {
                0.0
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    #[serde(default)]
    pub t: f64,
}

impl ChainState {
    pub fn zeros(n: usize) -> Self {
        Self {
            q: vec![0.0; n],
            p: vec![0.0; n],
            t: 0.0,
        }
    }

    pub fn at_rest(q: Vec<f64>) -> Self {
        let n = q.len();
        Self { q, p: vec![0.0; n], t: 0.0 }
    }

    pub fn validate(&self, prm: &ChainParams) -> Result<()> {
        check_dim(prm.n, self.q.len())?;
        check_dim(prm.n, self.p.len())?;
        if self.q.iter().chain(&self.p).any(|x| !x.is_finite()) {
            return Err(Error::validation("chain state has non-finite entries"));
        }
        Ok(())
    }

    fn check_bounded(&self) -> Result<()> {
        let worst = self
            .q
            .iter()
            .chain(&self.p)
            .map(|x| x.abs())
            .fold(0.0, |m: f64, x| if x.is_nan() { f64::INFINITY } else { m.max(x) });
        if worst > DIVERGENCE_BOUND {
            Err(Error::Diverged { t: self.t, norm: worst })
        } else {
            Ok(())
        }
    }
}

/// Potential energy: gradient plus nonlinear terms.
pub fn potential_energy(q: &[f64], prm: &ChainParams) -> f64 {
    let dx = prm.dx();
    let n = q.len();
    let mut grad = 0.0;
    let mut prev = 0.0;
    for &qi in q {
        grad += (qi - prev) * (qi - prev);
        prev = qi;
    }
    grad += prev * prev;
    let two_k = 2 * prm.k as i32;
    let nonlinear: f64 = if prm.g == 0.0 {
        0.0
    } else {
        q.iter().map(|x| x.powi(two_k)).sum::<f64>() * prm.g / two_k as f64
    };
    debug_assert_eq!(n, prm.n);
    grad / (2.0 * dx) + dx * nonlinear
}

pub fn chain_energy(s: &ChainState, prm: &ChainParams) -> f64 {
    let dx = prm.dx();
    let kinetic: f64 = s.p.iter().map(|p| p * p).sum::<f64>() * 0.5 * dx;
    kinetic + potential_energy(&s.q, prm)
}

/// Site acceleration `Δ_h q - g q^{2k-1}` written into `out`.
fn acceleration_into(q: &[f64], prm: &ChainParams, out: &mut [f64]) {
    let n = q.len();
    let inv_dx2 = 1.0 / (prm.dx() * prm.dx());
    let pow = 2 * prm.k as i32 - 1;
    for i in 0..n {
        let left = if i == 0 { 0.0 } else { q[i - 1] };
        let right = if i + 1 == n { 0.0 } else { q[i + 1] };
        let mut a = (left - 2.0 * q[i] + right) * inv_dx2;
        if prm.g != 0.0 {
            a -= prm.g * q[i].powi(pow);
        }
        out[i] = a;
    }
}

pub fn acceleration(q: &[f64], prm: &ChainParams) -> Vec<f64> {
    let mut out = vec![0.0; q.len()];
    acceleration_into(q, prm, &mut out);
    out
}

/// Velocity-Verlet integrator with a cached acceleration.
pub(crate) struct Verlet<F: FnMut(&[f64], f64, &mut [f64])> {
    accel: F,
    acc: Vec<f64>,
}

impl<F: FnMut(&[f64], f64, &mut [f64])> Verlet<F> {
    pub(crate) fn new(mut accel: F, q: &[f64], t: f64) -> Self {
        let mut acc = vec![0.0; q.len()];
        accel(q, t, &mut acc);
        Self { accel, acc }
    }

    pub(crate) fn step(&mut self, q: &mut [f64], p: &mut [f64], t: f64, dt: f64) {
        let h = 0.5 * dt;
        for (pi, ai) in p.iter_mut().zip(&self.acc) {
            *pi += h * ai;
        }
        for (qi, pi) in q.iter_mut().zip(p.iter()) {
            *qi += dt * pi;
        }
        (self.accel)(q, t + dt, &mut self.acc);
        for (pi, ai) in p.iter_mut().zip(&self.acc) {
            *pi += h * ai;
        }
    }
}

fn conservative_only(prm: &ChainParams) -> Result<()> {
    if prm.nu != 0.0 {
        return Err(Error::validation(
            "conservative stepping requires nu = 0; use kanai_residual for the damped chain",
        ));
    }
    Ok(())
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::validation(format!("time step must be positive, got {dt}")));
    }
    Ok(())
}

/// One Störmer–Verlet step of the conservative flow.
pub fn leapfrog_step(s: &ChainState, prm: &ChainParams, dt: f64) -> Result<ChainState> {
    conservative_only(prm)?;
    s.validate(prm)?;
    check_dt(dt)?;
    let mut out = s.clone();
    let mut v = Verlet::new(|q: &[f64], _t, a: &mut [f64]| acceleration_into(q, prm, a), &out.q, out.t);
    v.step(&mut out.q, &mut out.p, s.t, dt);
    out.t += dt;
    out.check_bounded()?;
    Ok(out)
}

/// Run `steps` Verlet steps, calling `visit` after each one.
pub fn integrate<V: FnMut(&ChainState)>(
    s0: &ChainState,
    prm: &ChainParams,
    dt: f64,
    steps: usize,
    mut visit: V,
) -> Result<ChainState> {
    conservative_only(prm)?;
    s0.validate(prm)?;
    check_dt(dt)?;
    let mut s = s0.clone();
    let mut v = Verlet::new(|q: &[f64], _t, a: &mut [f64]| acceleration_into(q, prm, a), &s.q, s.t);
    for j in 0..steps {
        let t = s0.t + j as f64 * dt;
        v.step(&mut s.q, &mut s.p, t, dt);
        s.t = s0.t + (j + 1) as f64 * dt;
        if j % 64 == 63 || j + 1 == steps {
            s.check_bounded()?;
        }
        visit(&s);
    }
    Ok(s)
}

fn step_count(t: f64, dt: f64) -> Result<usize> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::validation(format!("horizon must be non-negative, got {t}")));
    }
    check_dt(dt)?;
    Ok((t / dt).round() as usize)
}

/// Trajectory average `(1/T) Σ F(q(t_j)) dt` with batch-means standard error.
pub fn time_average_observable(
    s0: &ChainState,
    prm: &ChainParams,
    t: f64,
    dt: f64,
    f: &ObservableSpec,
) -> Result<EstimateWithError> {
    conservative_only(prm)?;
    f.validate(prm.n)?;
    let steps = step_count(t, dt)?;
    if steps < 100 {
        return Err(Error::validation("averaging window must span at least 100 steps"));
    }
    let dx = prm.dx();
    let mut samples = Vec::with_capacity(steps);
    integrate(s0, prm, dt, steps, |s| {
        samples.push(f.evaluate_with(&s.q, dx, || chain_energy(s, prm)));
    })?;
    let mut e = stats::batch_means(&samples, stats::DEFAULT_BATCHES, Method::TimeAverage);
    if !e.stderr.is_finite() {
        e.stderr = 0.0;
    }
    Ok(e)
}

/// `max_t |E(t) - E(0)| / |E(0)|` over `T/dt` steps.
pub fn max_relative_energy_drift(s0: &ChainState, prm: &ChainParams, t: f64, dt: f64) -> Result<f64> {
    let steps = step_count(t, dt)?;
    let e0 = chain_energy(s0, prm);
    if e0 == 0.0 {
        return Err(Error::validation("relative drift undefined for zero initial energy"));
    }
    let mut worst: f64 = 0.0;
    integrate(s0, prm, dt, steps, |s| {
        worst = worst.max((chain_energy(s, prm) - e0).abs());
    })?;
    Ok(worst / e0.abs())
}

/// Rows `(t, E, F_1..F_m)` every `every` steps, starting with `t = 0`.
pub fn record_trajectory(
    s0: &ChainState,
    prm: &ChainParams,
    t: f64,
    dt: f64,
    every: usize,
    observables: &[ObservableSpec],
) -> Result<Vec<Vec<f64>>> {
    for f in observables {
        f.validate(prm.n)?;
    }
    let steps = step_count(t, dt)?;
    let every = every.max(1);
    let dx = prm.dx();
    let row = |s: &ChainState| {
        let e = chain_energy(s, prm);
        let mut r = vec![s.t, e];
        r.extend(observables.iter().map(|f| f.evaluate_with(&s.q, dx, || e)));
        r
    };
    let mut rows = vec![row(s0)];
    let mut count = 0;
    integrate(s0, prm, dt, steps, |s| {
        count += 1;
        if count % every == 0 {
            rows.push(row(s));
        }
    })?;
    Ok(rows)
}

/// `|det J - 1|` for the time-`T` Verlet flow map on `(q, p)`, with `J`
/// from central differences of step [`JACOBIAN_FD_STEP`].
pub fn liouville_jacobian_check(s0: &ChainState, prm: &ChainParams, t: f64, dt: f64) -> Result<f64> {
    liouville_jacobian_check_with_step(s0, prm, t, dt, JACOBIAN_FD_STEP)
}

pub fn liouville_jacobian_check_with_step(
    s0: &ChainState,
    prm: &ChainParams,
    t: f64,
    dt: f64,
    h: f64,
) -> Result<f64> {
    conservative_only(prm)?;
    s0.validate(prm)?;
    let steps = step_count(t, dt)?;
    if steps == 0 {
        return Ok(0.0);
    }
    let n = prm.n;
    let flow = |s: &ChainState| -> Result<Vec<f64>> {
        let end = integrate(s, prm, dt, steps, |_| {})?;
        Ok(end.q.into_iter().chain(end.p).collect())
    };
    let mut jac = DMatrix::zeros(2 * n, 2 * n);
    for col in 0..2 * n {
        let mut plus = s0.clone();
        let mut minus = s0.clone();
        if col < n {
            plus.q[col] += h;
            minus.q[col] -= h;
        } else {
            plus.p[col - n] += h;
            minus.p[col - n] -= h;
        }
        let fp = flow(&plus)?;
        let fm = flow(&minus)?;
        for row in 0..2 * n {
            jac[(row, col)] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    Ok((jac.determinant() - 1.0).abs())
}

/// Acceleration of the damped chain without the friction term.
fn damped_conservative_accel(q: &[f64], prm: &ChainParams, out: &mut [f64]) {
    acceleration_into(q, prm, out)
}

/// Acceleration of the rescaled field `β = exp(νt/2)·q`:
/// `Δ_h β + (ν²/4)β - g·exp(-(k-1)νt)·β^{2k-1}`.
pub fn rescaled_acceleration(beta: &[f64], t: f64, prm: &ChainParams, out: &mut [f64]) {
    let n = beta.len();
    let inv_dx2 = 1.0 / (prm.dx() * prm.dx());
    let mass = 0.25 * prm.nu * prm.nu;
    let pow = 2 * prm.k as i32 - 1;
    let coupling = prm.g * (-(prm.k as f64 - 1.0) * prm.nu * t).exp();
    for i in 0..n {
        let left = if i == 0 { 0.0 } else { beta[i - 1] };
        let right = if i + 1 == n { 0.0 } else { beta[i + 1] };
        let mut a = (left - 2.0 * beta[i] + right) * inv_dx2 + mass * beta[i];
        if prm.g != 0.0 {
            a -= coupling * beta[i].powi(pow);
        }
        out[i] = a;
    }
}

/// Damped chain `q̈ = Δ_h q - νq̇ - g q^{2k-1}` from rest at `U0`, integrated
/// directly (Strang splitting: exact friction half-steps around a Verlet
/// step) and through the rescaled undamped equation. Returns
/// `max_t ‖exp(νt/2)q(t) - β(t)‖₂ / ‖β(t)‖₂`.
pub fn kanai_residual(prm: &ChainParams, u0: &[f64], t: f64, dt: f64) -> Result<f64> {
    prm.validate()?;
    check_dim(prm.n, u0.len())?;
    let steps = step_count(t, dt)?;
    let n = prm.n;

    let mut q = u0.to_vec();
    let mut qdot = vec![0.0; n];
    let mut direct = Verlet::new(|x: &[f64], _t, a: &mut [f64]| damped_conservative_accel(x, prm, a), &q, 0.0);
    let friction = (-0.5 * prm.nu * dt).exp();

    let mut beta = u0.to_vec();
    // β̇(0) = U¹ + (ν/2)U⁰ with U¹ = 0
    let mut beta_dot: Vec<f64> = u0.iter().map(|x| 0.5 * prm.nu * x).collect();
    let mut rescaled = Verlet::new(|x: &[f64], s, a: &mut [f64]| rescaled_acceleration(x, s, prm, a), &beta, 0.0);

    let mut worst: f64 = 0.0;
    for j in 0..steps {
        let tj = j as f64 * dt;
        qdot.iter_mut().for_each(|v| *v *= friction);
        direct.step(&mut q, &mut qdot, tj, dt);
        qdot.iter_mut().for_each(|v| *v *= friction);
        rescaled.step(&mut beta, &mut beta_dot, tj, dt);

        let t_next = tj + dt;
        let scale = (0.5 * prm.nu * t_next).exp();
        let mut num = 0.0;
        let mut den = 0.0;
        for (qi, bi) in q.iter().zip(&beta) {
            num += (scale * qi - bi).powi(2);
            den += bi * bi;
        }
        if !num.is_finite() || !den.is_finite() || den.sqrt() > DIVERGENCE_BOUND {
            return Err(Error::Diverged { t: t_next, norm: den.sqrt() });
        }
        if den > 0.0 {
            worst = worst.max((num / den).sqrt());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use std::f64::consts::PI;

    #[test]
    fn energy_hand_example() {
        let prm = ChainParams::new(1, 0.5, 2.0, 1).unwrap();
        let s = ChainState {
            q: vec![1.0],
            p: vec![2.0],
            t: 0.0,
        };
        assert_eq!(chain_energy(&s, &prm), 4.0);
        assert_eq!(chain_energy(&ChainState::zeros(1), &prm), 0.0);
    }

    #[test]
    fn harmonic_mode_energy() {
        // oracle: a normal mode with amplitude c has E = (dx/2)·(c²ω²+ċ²)·Σ s_i²
        let prm = ChainParams::new(9, 1.0, 0.0, 1).unwrap();
        let m = 3;
        let shape = prm.normal_mode_shape(m);
        let (c, cdot) = (0.7, -0.4);
        let s = ChainState {
            q: shape.iter().map(|x| c * x).collect(),
            p: shape.iter().map(|x| cdot * x).collect(),
            t: 0.0,
        };
        let w = prm.normal_mode_frequency(m);
        let norm2: f64 = shape.iter().map(|x| x * x).sum();
        let expect = 0.5 * prm.dx() * norm2 * (c * c * w * w + cdot * cdot);
        assert!((chain_energy(&s, &prm) - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn stiffness_matches_gradient_energy() {
        let prm = ChainParams::new(5, 1.3, 0.0, 1).unwrap();
        let q = [0.3, -0.1, 0.8, 0.2, -0.5];
        let a = prm.stiffness();
        let qv = nalgebra::DVector::from_column_slice(&q);
        let quad = 0.5 * qv.dot(&(&a * &qv));
        assert!((quad - potential_energy(&q, &prm)).abs() < 1e-13);
    }

    #[test]
    fn zero_state_is_fixed() {
        let prm = ChainParams::new(4, 1.0, 1.0, 2).unwrap();
        let s = leapfrog_step(&ChainState::zeros(4), &prm, 0.01).unwrap();
        assert!(s.q.iter().chain(&s.p).all(|&x| x == 0.0));
    }

    #[test]
    fn reversibility_single_step() {
        let prm = ChainParams::new(6, 1.0, 1.0, 2).unwrap();
        let mut r = rng::stream(1, 0);
        let s0 = ChainState {
            q: rng::normal_vec(&mut r, 6),
            p: rng::normal_vec(&mut r, 6),
            t: 0.0,
        };
        let s1 = leapfrog_step(&s0, &prm, 1e-3).unwrap();
        let mut back = s1.clone();
        back.p.iter_mut().for_each(|p| *p = -*p);
        let mut back = leapfrog_step(&back, &prm, 1e-3).unwrap();
        back.p.iter_mut().for_each(|p| *p = -*p);
        for (a, b) in back.q.iter().chain(&back.p).zip(s0.q.iter().chain(&s0.p)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn harmonic_period_return_is_second_order() {
        let prm = ChainParams::new(7, 1.0, 0.0, 1).unwrap();
        let m = 2;
        let shape = prm.normal_mode_shape(m);
        let period = 2.0 * PI / prm.normal_mode_frequency(m);
        // after one period the position error is O(dt⁴); the velocity carries the O(dt²) phase error
        let err = |steps: usize| {
            let dt = period / steps as f64;
            let end = integrate(&ChainState::at_rest(shape.clone()), &prm, dt, steps, |_| {}).unwrap();
            end.p.iter().map(|v| v.abs()).fold(0.0, f64::max)
        };
        let e1 = err(200);
        let e2 = err(400);
        assert!(e1 < 1e-3);
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn energy_time_average_equals_energy() {
        let prm = ChainParams::new(5, 1.0, 1.0, 2).unwrap();
        let s0 = ChainState::at_rest(vec![0.1, 0.5, -0.3, 0.2, 0.0]);
        let e0 = chain_energy(&s0, &prm);
        let avg = time_average_observable(&s0, &prm, 5.0, 1e-3, &ObservableSpec::Energy).unwrap();
        assert!((avg.mean - e0).abs() < 1e-5 * e0);
    }

    #[test]
    fn harmonic_site_average_is_half_amplitude() {
        let prm = ChainParams::new(5, 1.0, 0.0, 1).unwrap();
        let m = 1;
        let shape = prm.normal_mode_shape(m);
        let w = prm.normal_mode_frequency(m);
        let periods = 40.0;
        let t = periods * 2.0 * PI / w;
        let dt = t / 200_000.0;
        let site = 2;
        let avg = time_average_observable(
            &ChainState::at_rest(shape.clone()),
            &prm,
            t,
            dt,
            &ObservableSpec::SiteSquare { site },
        )
        .unwrap();
        let expect = 0.5 * shape[site] * shape[site];
        assert!((avg.mean - expect).abs() < 1e-4, "{} vs {}", avg.mean, expect);
    }

    #[test]
    fn conservative_ops_reject_damping() {
        let prm = ChainParams::new(3, 1.0, 0.0, 1).unwrap().with_nu(0.1).unwrap();
        assert!(leapfrog_step(&ChainState::zeros(3), &prm, 0.1).is_err());
    }

    #[test]
    fn blow_up_reports_divergence() {
        // dt far beyond the stability limit of the stiff harmonic chain
        let prm = ChainParams::new(32, 0.01, 0.0, 1).unwrap();
        let s0 = ChainState::at_rest(vec![1.0; 32]);
        let err = integrate(&s0, &prm, 1.0, 10_000, |_| {}).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }));
    }

    #[test]
    fn jacobian_identity_and_harmonic() {
        let prm = ChainParams::new(4, 1.0, 0.0, 1).unwrap();
        let s0 = ChainState::at_rest(vec![0.2, -0.1, 0.4, 0.3]);
        assert_eq!(liouville_jacobian_check(&s0, &prm, 0.0, 0.01).unwrap(), 0.0);
        assert!(liouville_jacobian_check(&s0, &prm, 2.0, 0.01).unwrap() <= 1e-8);
    }

    #[test]
    fn harmonic_update_matrix_has_unit_determinant() {
        // oracle: the explicit linear one-step map of Verlet for q̈ = -Kq is
        // [[I - dt²K/2, dt I], [-dt K + dt³K²/4, I - dt²K/2]]
        let prm = ChainParams::new(3, 1.0, 0.0, 1).unwrap();
        let dt = 0.05;
        let kmat = prm.stiffness() / prm.dx();
        let id = DMatrix::<f64>::identity(3, 3);
        let a = &id - &kmat * (dt * dt / 2.0);
        let b = &id * dt;
        let c = &kmat * (-dt) + &kmat * &kmat * (dt * dt * dt / 4.0);
        let mut m = DMatrix::zeros(6, 6);
        m.view_mut((0, 0), (3, 3)).copy_from(&a);
        m.view_mut((0, 3), (3, 3)).copy_from(&b);
        m.view_mut((3, 0), (3, 3)).copy_from(&c);
        m.view_mut((3, 3), (3, 3)).copy_from(&a);
        assert!((m.determinant() - 1.0).abs() < 1e-12);
        // and it is the map the integrator applies
        let s0 = ChainState {
            q: vec![0.3, -0.2, 0.1],
            p: vec![0.0, 0.5, -0.4],
            t: 0.0,
        };
        let s1 = leapfrog_step(&s0, &prm, dt).unwrap();
        let x0 = nalgebra::DVector::from_iterator(6, s0.q.iter().chain(&s0.p).copied());
        let x1 = &m * x0;
        for (i, v) in s1.q.iter().chain(&s1.p).enumerate() {
            assert!((x1[i] - v).abs() < 1e-13);
        }
    }

    #[test]
    fn kanai_without_damping_is_exact() {
        let prm = ChainParams::new(8, 1.0, 1.0, 2).unwrap();
        let u0: Vec<f64> = prm.normal_mode_shape(1).iter().map(|x| 0.5 * x).collect();
        let r = kanai_residual(&prm, &u0, 2.0, 1e-3).unwrap();
        assert!(r < 1e-13, "residual {r:e}");
    }

    #[test]
    fn kanai_linear_second_order() {
        let prm = ChainParams::new(8, 1.0, 0.0, 1).unwrap().with_nu(0.5).unwrap();
        let u0: Vec<f64> = prm.normal_mode_shape(1);
        let r1 = kanai_residual(&prm, &u0, 2.0, 2e-3).unwrap();
        let r2 = kanai_residual(&prm, &u0, 2.0, 1e-3).unwrap();
        let ratio = r1 / r2;
        assert!(r1 < 1e-2, "r1 {r1:e} r2 {r2:e}");
        assert!((3.2..4.8).contains(&ratio), "ratio {ratio}");
    }
}
