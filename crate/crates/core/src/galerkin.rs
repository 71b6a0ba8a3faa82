//! Spectral Galerkin solver for the defocusing polynomial wave equation
//! `U_tt = U_xx - Σ_j c_j U^{p_j}` on `(-a, a)` with Dirichlet ends.
//!
//! Basis `e_m(x) = sin(mπ(x+a)/(2a))/√a`, orthonormal in `L²(-a, a)`, with
//! `-e_m'' = μ_m e_m`, `μ_m = (mπ/(2a))²`. The nonlinear projection uses
//! Gauss–Legendre quadrature on an oversampled grid.

use serde::{Deserialize, Serialize};

use crate::chain::Verlet;
use crate::error::{check_dim, Error, Result};
use crate::quadrature;

/// Largest tolerated change of the projection when the quadrature grid is doubled.
pub const RESOLUTION_TOL: f64 = 1e-10;
const DIVERGENCE_BOUND: f64 = 1e100;

/// `coef·U^power` with odd `power` and `coef ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearTerm {
    pub coef: f64,
    pub power: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GalerkinSpec {
    pub n: usize,
    pub a: f64,
    #[serde(default)]
    pub terms: Vec<NonlinearTerm>,
    pub quad_points: usize,
}

impl GalerkinSpec {
    /// Single-term nonlinearity `g·U^{2k-1}` with the minimal dealiased grid.
    pub fn single_term(n: usize, a: f64, g: f64, k: u32) -> Result<Self> {
        let terms = if g == 0.0 {
            Vec::new()
        } else {
            vec![NonlinearTerm { coef: g, power: 2 * k - 1 }]
        };
        Self::with_terms(n, a, terms)
    }

    pub fn with_terms(n: usize, a: f64, terms: Vec<NonlinearTerm>) -> Result<Self> {
        let mut s = Self {
            n,
            a,
            terms,
            quad_points: 0,
        };
        s.quad_points = s.min_quad_points().max(16);
        s.validate()?;
        Ok(s)
    }

    fn max_power(&self) -> usize {
        self.terms.iter().map(|t| t.power as usize).max().unwrap_or(1)
    }

    /// `2·(max exponent)·n`.
    pub fn min_quad_points(&self) -> usize {
        2 * self.max_power() * self.n
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::validation("need at least one mode"));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::validation("half-length a must be positive"));
        }
        for t in &self.terms {
            if t.power % 2 == 0 {
                return Err(Error::validation(format!("nonlinear exponents must be odd, got {}", t.power)));
            }
            if !(t.coef >= 0.0 && t.coef.is_finite()) {
                return Err(Error::validation("nonlinear coefficients must be non-negative"));
            }
        }
        if self.quad_points < self.min_quad_points() {
            return Err(Error::validation(format!(
                "quad_points = {} is below the dealiasing minimum {}",
                self.quad_points,
                self.min_quad_points()
            )));
        }
        Ok(())
    }

    pub fn eigenvalue(&self, m: usize) -> f64 {
        let w = m as f64 * std::f64::consts::PI / (2.0 * self.a);
        w * w
    }

    pub fn basis(&self, m: usize, x: f64) -> f64 {
        (m as f64 * std::f64::consts::PI * (x + self.a) / (2.0 * self.a)).sin() / self.a.sqrt()
    }

    pub fn is_linear(&self) -> bool {
        self.terms.iter().all(|t| t.coef == 0.0)
    }

    fn nonlinearity(&self, u: f64) -> f64 {
        self.terms.iter().map(|t| t.coef * u.powi(t.power as i32)).sum()
    }

    /// `Σ c_j U^{p_j+1}/(p_j+1)`.
    fn potential_density(&self, u: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coef * u.powi(t.power as i32 + 1) / (t.power as f64 + 1.0))
            .sum()
    }

    /// `Σ c_j p_j |u|^{p_j-1}`, a bound on the derivative of the nonlinearity.
    fn derivative_bound(&self, u: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coef * t.power as f64 * u.abs().powi(t.power as i32 - 1))
            .sum()
    }

    /// Precomputed quadrature grid and basis values.
    pub fn grid(&self) -> Result<Grid> {
        self.validate()?;
        Ok(Grid::new(self, self.quad_points))
    }

    /// Mode coefficients `⟨f, e_m⟩` of a function.
    pub fn project<F: Fn(f64) -> f64>(&self, f: F) -> Result<Vec<f64>> {
        let grid = self.grid()?;
        Ok((0..self.n)
            .map(|m| {
                grid.nodes
                    .iter()
                    .zip(&grid.weights)
                    .zip(&grid.basis[m])
                    .map(|((&x, w), b)| w * f(x) * b)
                    .sum()
            })
            .collect())
    }

    /// `U(x) = Σ u_m e_m(x)`.
    pub fn field_at(&self, u: &[f64], x: f64) -> f64 {
        u.iter().enumerate().map(|(m, c)| c * self.basis(m + 1, x)).sum()
    }
}

/// Quadrature nodes, weights and `e_m(x_q)` for a given grid size.
#[derive(Debug, Clone)]
pub struct Grid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `basis[m][q] = e_{m+1}(x_q)`.
    pub basis: Vec<Vec<f64>>,
}

impl Grid {
    fn new(spec: &GalerkinSpec, points: usize) -> Self {
        let (nodes, weights) = quadrature::gauss_legendre_on(points, -spec.a, spec.a);
        let basis = (1..=spec.n)
            .map(|m| nodes.iter().map(|&x| spec.basis(m, x)).collect())
            .collect();
        Self { nodes, weights, basis }
    }

    /// Field values at the nodes.
    pub fn field(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nodes.len()];
        for (c, row) in u.iter().zip(&self.basis) {
            if *c == 0.0 {
                continue;
            }
            for (o, b) in out.iter_mut().zip(row) {
                *o += c * b;
            }
        }
        out
    }

    /// `⟨N(U), e_m⟩` for all modes.
    fn projection(&self, spec: &GalerkinSpec, u: &[f64], out: &mut [f64]) {
        let vals: Vec<f64> = self
            .field(u)
            .iter()
            .zip(&self.weights)
            .map(|(&f, w)| w * spec.nonlinearity(f))
            .collect();
        for (o, row) in out.iter_mut().zip(&self.basis) {
            *o = row.iter().zip(&vals).map(|(b, v)| b * v).sum();
        }
    }

    fn accel(&self, spec: &GalerkinSpec, u: &[f64], out: &mut [f64]) {
        if spec.is_linear() {
            out.iter_mut().for_each(|o| *o = 0.0);
        } else {
            self.projection(spec, u, out);
        }
        for (m, (o, c)) in out.iter_mut().zip(u).enumerate() {
            *o = -spec.eigenvalue(m + 1) * c - *o;
        }
    }

    /// `½‖v‖² + ½Σμ_m u_m² + ∫ Σ c_j U^{p_j+1}/(p_j+1) dx`.
    fn energy(&self, spec: &GalerkinSpec, s: &ModeState) -> f64 {
        let kinetic = 0.5 * s.v.iter().map(|x| x * x).sum::<f64>();
        let elastic = 0.5
            * s.u
                .iter()
                .enumerate()
                .map(|(m, c)| spec.eigenvalue(m + 1) * c * c)
                .sum::<f64>();
        let pot = if spec.is_linear() {
            0.0
        } else {
            self.field(&s.u)
                .iter()
                .zip(&self.weights)
                .map(|(&f, w)| w * spec.potential_density(f))
                .sum()
        };
        kinetic + elastic + pot
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    #[serde(default)]
    pub t: f64,
}

impl ModeState {
    pub fn at_rest(u: Vec<f64>) -> Self {
        let n = u.len();
        Self { u, v: vec![0.0; n], t: 0.0 }
    }

    fn validate(&self, spec: &GalerkinSpec) -> Result<()> {
        check_dim(spec.n, self.u.len())?;
        check_dim(spec.n, self.v.len())
    }
}

/// Accelerations `ü_m = -μ_m u_m - ⟨N(U), e_m⟩`, with a resolution check
/// against a grid of twice the size.
pub fn galerkin_rhs(s: &ModeState, spec: &GalerkinSpec) -> Result<Vec<f64>> {
    s.validate(spec)?;
    let grid = spec.grid()?;
    let mut out = vec![0.0; spec.n];
    grid.accel(spec, &s.u, &mut out);
    check_resolution(spec, &s.u, &grid)?;
    Ok(out)
}

fn check_resolution(spec: &GalerkinSpec, u: &[f64], grid: &Grid) -> Result<()> {
    if spec.is_linear() {
        return Ok(());
    }
    let fine = Grid::new(spec, 2 * grid.nodes.len());
    let mut coarse_p = vec![0.0; spec.n];
    let mut fine_p = vec![0.0; spec.n];
    grid.projection(spec, u, &mut coarse_p);
    fine.projection(spec, u, &mut fine_p);
    let scale = fine_p.iter().map(|x| x.abs()).fold(1.0, f64::max);
    let change = coarse_p
        .iter()
        .zip(&fine_p)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if change > RESOLUTION_TOL * scale {
        return Err(Error::UnderResolved { change });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct GalerkinTrajectory {
    pub states: Vec<ModeState>,
    /// Energy at every step, starting with the initial state.
    pub energies: Vec<f64>,
}

impl GalerkinTrajectory {
    pub fn final_state(&self) -> &ModeState {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// `max_t |E(t) - E(0)| / |E(0)|` (absolute when `E(0) = 0`).
    pub fn max_relative_drift(&self) -> f64 {
        let e0 = self.energies[0];
        let scale = if e0 == 0.0 { 1.0 } else { e0.abs() };
        self.energies.iter().map(|e| (e - e0).abs() / scale).fold(0.0, f64::max)
    }

    /// `max_t E(t) / E(0)`, the a priori bound functional relative to its start.
    pub fn a_priori_ratio(&self) -> f64 {
        let e0 = self.energies[0];
        if e0 == 0.0 {
            return if self.energies.iter().all(|&e| e == 0.0) { 1.0 } else { f64::INFINITY };
        }
        self.energies.iter().map(|e| e / e0).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Velocity-Verlet integration of the mode system. States are recorded every
/// `record_every` steps and at the end; the quadrature resolution is checked
/// on the initial and final states.
pub fn integrate_wave(spec: &GalerkinSpec, s0: &ModeState, t: f64, dt: f64, record_every: usize) -> Result<GalerkinTrajectory> {
    integrate_with(spec, s0, t, dt, record_every, |_, _| {})
}

fn integrate_with<V: FnMut(&ModeState, &[f64])>(
    spec: &GalerkinSpec,
    s0: &ModeState,
    t: f64,
    dt: f64,
    record_every: usize,
    mut visit: V,
) -> Result<GalerkinTrajectory> {
    s0.validate(spec)?;
    if !(dt > 0.0 && dt.is_finite()) || !(t >= 0.0) {
        return Err(Error::validation("need dt > 0 and T ≥ 0"));
    }
    let grid = spec.grid()?;
    check_resolution(spec, &s0.u, &grid)?;
    let steps = (t / dt).round() as usize;
    let every = record_every.max(1);
    let mut s = s0.clone();
    let mut verlet = Verlet::new(|u: &[f64], _t, a: &mut [f64]| grid.accel(spec, u, a), &s.u, s.t);
    let mut states = vec![s.clone()];
    let mut energies = vec![grid.energy(spec, &s)];
    visit(&s, &grid.field(&s.u));
    for j in 1..=steps {
        verlet.step(&mut s.u, &mut s.v, s.t, dt);
        s.t = s0.t + j as f64 * dt;
        let e = grid.energy(spec, &s);
        if !e.is_finite() || e.abs() > DIVERGENCE_BOUND {
            return Err(Error::Diverged { t: s.t, norm: e.abs().sqrt() });
        }
        energies.push(e);
        visit(&s, &grid.field(&s.u));
        if j % every == 0 || j == steps {
            states.push(s.clone());
        }
    }
    check_resolution(spec, &s.u, &grid)?;
    Ok(GalerkinTrajectory { states, energies })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n_coarse: usize,
    pub n_fine: usize,
    /// `‖U_fine(T) - U_coarse(T)‖_{L²}`.
    pub l2_difference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub strictly_decreasing: bool,
    /// Final fields at `x = 0` for each `n`.
    pub centre_values: Vec<(usize, f64)>,
}

/// Solves the same problem at each `n` and reports successive differences.
/// The bases are nested and orthonormal, so the `L²` distance is the
/// Euclidean distance of the zero-padded coefficient vectors.
pub fn convergence_study<F: Fn(f64) -> f64>(
    a: f64,
    terms: &[NonlinearTerm],
    ns: &[usize],
    u0: F,
    t: f64,
    dt: f64,
) -> Result<ConvergenceTable> {
    if ns.len() < 2 || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::validation("need at least two strictly increasing mode counts"));
    }
    let mut finals = Vec::with_capacity(ns.len());
    for &n in ns {
        let spec = GalerkinSpec::with_terms(n, a, terms.to_vec())?;
        let s0 = ModeState::at_rest(spec.project(&u0)?);
        let tr = integrate_wave(&spec, &s0, t, dt, usize::MAX)?;
        finals.push((spec.clone(), tr.final_state().u.clone()));
    }
    let rows: Vec<ConvergenceRow> = finals
        .windows(2)
        .map(|w| {
            let (coarse, fine) = (&w[0].1, &w[1].1);
            let d2: f64 = fine
                .iter()
                .enumerate()
                .map(|(m, f)| (f - coarse.get(m).copied().unwrap_or(0.0)).powi(2))
                .sum();
            ConvergenceRow {
                n_coarse: w[0].0.n,
                n_fine: w[1].0.n,
                l2_difference: d2.sqrt(),
            }
        })
        .collect();
    let strictly_decreasing = rows.windows(2).all(|w| w[1].l2_difference < w[0].l2_difference);
    let centre_values = finals.iter().map(|(s, u)| (s.n, s.field_at(u, 0.0))).collect();
    Ok(ConvergenceTable {
        rows,
        strictly_decreasing,
        centre_values,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GronwallReport {
    /// `sup_t ‖W(t)‖_E / (‖W(0)‖_E·e^{rt})`.
    pub sup_ratio: f64,
    /// Measured bound on `|a(x,t)|` over the grid and trajectory.
    pub m: f64,
    /// Envelope rate `r = max(M, M/(2√μ₁))`.
    pub rate: f64,
    pub passed: bool,
}

/// Tolerance on the envelope ratio.
pub const GRONWALL_TOL: f64 = 0.05;

/// Energy seminorm `‖W‖_E² = Σ (ẇ_m² + μ_m w_m²)`.
pub fn energy_norm(spec: &GalerkinSpec, w: &[f64], wdot: &[f64]) -> f64 {
    w.iter()
        .zip(wdot)
        .enumerate()
        .map(|(m, (a, b))| b * b + spec.eigenvalue(m + 1) * a * a)
        .sum::<f64>()
        .sqrt()
}

/// Evolves `U0` and `U0 + δ·bump` and checks that their difference stays
/// inside the Gronwall envelope. `M = sup Σ c_j p_j max(|U|, |V|)^{p_j-1}`
/// bounds the difference quotient of the nonlinearity by the mean-value theorem.
pub fn gronwall_stability_check(
    spec: &GalerkinSpec,
    u0: &[f64],
    bump: &[f64],
    delta: f64,
    t: f64,
    dt: f64,
) -> Result<GronwallReport> {
    check_dim(spec.n, u0.len())?;
    check_dim(spec.n, bump.len())?;
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::validation("perturbation size must be non-negative"));
    }
    let s_u = ModeState::at_rest(u0.to_vec());
    let s_v = ModeState::at_rest(u0.iter().zip(bump).map(|(a, b)| a + delta * b).collect());
    if delta == 0.0 || s_u == s_v {
        return Ok(GronwallReport {
            sup_ratio: 0.0,
            m: 0.0,
            rate: 0.0,
            passed: true,
        });
    }
    let mut fields_u: Vec<Vec<f64>> = Vec::new();
    let tr_u = integrate_with(spec, &s_u, t, dt, 1, |_, f| fields_u.push(f.to_vec()))?;
    let mut m: f64 = 0.0;
    let mut idx = 0;
    let tr_v = integrate_with(spec, &s_v, t, dt, 1, |_, f| {
        for (a, b) in fields_u[idx].iter().zip(f) {
            m = m.max(spec.derivative_bound(a.abs().max(b.abs())));
        }
        idx += 1;
    })?;
    let rate = m.max(m / (2.0 * spec.eigenvalue(1).sqrt()));
    let norm = |i: usize| {
        let (su, sv) = (&tr_u.states[i], &tr_v.states[i]);
        let w: Vec<f64> = su.u.iter().zip(&sv.u).map(|(a, b)| a - b).collect();
        let wd: Vec<f64> = su.v.iter().zip(&sv.v).map(|(a, b)| a - b).collect();
        energy_norm(spec, &w, &wd)
    };
    let w0 = norm(0);
    let sup_ratio = (0..tr_u.states.len())
        .map(|i| norm(i) / (w0 * (rate * (tr_u.states[i].t - s_u.t)).exp()))
        .fold(0.0, f64::max);
    Ok(GronwallReport {
        sup_ratio,
        m,
        rate,
        passed: sup_ratio <= 1.0 + GRONWALL_TOL,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HolderReport {
    pub theta: f64,
    /// Smallest `(rhs - lhs)/rhs` over the fields (zero for vanishing fields).
    pub min_slack: f64,
    pub passed: bool,
}

/// `θ` with `1/q = (1-θ)/2 + θ/(2k)`.
pub fn holder_theta(q: f64, k: u32) -> Result<f64> {
    let top = 2.0 * k as f64;
    if k < 1 || !(q >= 2.0 && q <= top) {
        return Err(Error::validation(format!("need 2 ≤ q ≤ 2k, got q = {q}, k = {k}")));
    }
    if q == 2.0 {
        return Ok(0.0);
    }
    Ok((0.5 - 1.0 / q) / (0.5 - 1.0 / top))
}

fn lp_norm(f: &[f64], w: &[f64], p: f64) -> f64 {
    f.iter().zip(w).map(|(x, w)| w * x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Checks `‖f‖_q ≤ ‖f‖_2^{1-θ}·‖f‖_{2k}^θ` for each field sampled at
/// quadrature nodes with the given weights.
pub fn holder_interpolation_check(fields: &[Vec<f64>], weights: &[f64], q: f64, k: u32) -> Result<HolderReport> {
    let theta = holder_theta(q, k)?;
    let mut min_slack = f64::INFINITY;
    let mut passed = true;
    for f in fields {
        check_dim(weights.len(), f.len())?;
        let lhs = lp_norm(f, weights, q);
        let rhs = lp_norm(f, weights, 2.0).powf(1.0 - theta) * lp_norm(f, weights, 2.0 * k as f64).powf(theta);
        let slack = if rhs > 0.0 { (rhs - lhs) / rhs } else { 0.0 };
        if slack < -1e-12 {
            passed = false;
        }
        min_slack = min_slack.min(slack);
    }
    if fields.is_empty() {
        min_slack = 0.0;
    }
    Ok(HolderReport {
        theta,
        min_slack,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cubic(n: usize) -> GalerkinSpec {
        GalerkinSpec::single_term(n, 1.0, 1.0, 2).unwrap()
    }

    #[test]
    fn basis_is_orthonormal() {
        let s = cubic(6);
        let g = s.grid().unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let ip: f64 = g.basis[i].iter().zip(&g.basis[j]).zip(&g.weights).map(|((a, b), w)| a * b * w).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn rhs_examples() {
        let s = cubic(5);
        assert!(galerkin_rhs(&ModeState::at_rest(vec![0.0; 5]), &s).unwrap().iter().all(|&x| x == 0.0));

        let lin = GalerkinSpec::single_term(5, 1.0, 0.0, 2).unwrap();
        let mut u = vec![0.0; 5];
        u[2] = 0.8;
        let acc = galerkin_rhs(&ModeState::at_rest(u), &lin).unwrap();
        assert_eq!(acc[2], -lin.eigenvalue(3) * 0.8);
        assert!(acc.iter().enumerate().all(|(i, &x)| i == 2 || x == 0.0));
    }

    #[test]
    fn cubic_single_mode_projection() {
        // ⟨(c e_m)³, e_m⟩ = c³/a² ∫ sin⁴ = c³·(3/4)/a over (-a, a)
        let a = 1.3;
        let s = GalerkinSpec::single_term(4, a, 1.0, 2).unwrap();
        let c = 0.6;
        for m in 0..4 {
            let mut u = vec![0.0; 4];
            u[m] = c;
            let acc = galerkin_rhs(&ModeState::at_rest(u), &s).unwrap();
            let proj = -acc[m] - s.eigenvalue(m + 1) * c;
            assert!((proj - 0.75 * c.powi(3) / a).abs() < RESOLUTION_TOL, "m={m}: {proj} vs {}", 0.75 * c.powi(3) / a);
        }
    }

    #[test]
    fn under_resolution_is_flagged() {
        let mut s = GalerkinSpec::single_term(6, 1.0, 1.0, 2).unwrap();
        s.quad_points = 6;
        assert!(s.validate().is_err());
        // bypass validation to exercise the resolution check itself
        let g = Grid::new(&s, 6);
        let u = vec![1.0, 0.5, 0.3, 0.2, 0.1, 0.05];
        assert!(matches!(check_resolution(&s, &u, &g), Err(Error::UnderResolved { .. })));
    }

    #[test]
    fn single_linear_mode_is_a_cosine() {
        let s = GalerkinSpec::single_term(3, 1.0, 0.0, 1).unwrap();
        let err = |dt: f64| {
            let tr = integrate_wave(&s, &ModeState::at_rest(vec![0.0, 1.0, 0.0]), 2.0, dt, 1).unwrap();
            let w = s.eigenvalue(2).sqrt();
            tr.states.iter().map(|st| (st.u[1] - (w * st.t).cos()).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(1e-2), err(5e-3));
        assert!(e1 < 1e-3);
        assert!((3.2..4.8).contains(&(e1 / e2)), "{}", e1 / e2);
    }

    #[test]
    fn energy_drift_is_second_order() {
        let s = cubic(8);
        let u0 = s.project(|x| 1.0 - x * x).unwrap();
        let drift = |dt| integrate_wave(&s, &ModeState::at_rest(u0.clone()), 2.0, dt, usize::MAX).unwrap().max_relative_drift();
        let ratio = drift(4e-3) / drift(2e-3);
        assert!((3.2..4.8).contains(&ratio), "{ratio}");
    }

    #[test]
    fn zero_data_stays_zero() {
        let s = cubic(4);
        let tr = integrate_wave(&s, &ModeState::at_rest(vec![0.0; 4]), 1.0, 1e-2, 1).unwrap();
        assert!(tr.states.iter().all(|st| st.u.iter().chain(&st.v).all(|&x| x == 0.0)));
    }

    #[test]
    fn linear_first_mode_converges_trivially() {
        let t = convergence_study(1.0, &[], &[1, 2, 4], |x| (PI * (x + 1.0) / 2.0).sin(), 1.0, 1e-3).unwrap();
        assert!(t.rows.iter().all(|r| r.l2_difference < 1e-12));
    }

    #[test]
    fn gronwall_trivial_cases() {
        let s = cubic(6);
        let u0 = s.project(|x| 1.0 - x * x).unwrap();
        let bump = s.project(|x| (-20.0 * x * x).exp()).unwrap();
        let r = gronwall_stability_check(&s, &u0, &bump, 0.0, 1.0, 1e-3).unwrap();
        assert!(r.passed && r.sup_ratio == 0.0);

        let lin = GalerkinSpec::single_term(6, 1.0, 0.0, 2).unwrap();
        let r = gronwall_stability_check(&lin, &u0, &bump, 1e-3, 2.0, 1e-3).unwrap();
        assert_eq!(r.m, 0.0);
        assert!((r.sup_ratio - 1.0).abs() < 1e-3 && r.passed, "{}", r.sup_ratio);
    }

    #[test]
    fn holder_examples() {
        let (x, w) = quadrature::gauss_legendre_on(32, -1.0, 1.0);
        let constant = vec![vec![0.7; 32]];
        let r = holder_interpolation_check(&constant, &w, 3.0, 2).unwrap();
        assert!(r.passed && r.min_slack.abs() < 1e-13);

        let field: Vec<f64> = x.iter().map(|x| x.sin() + 0.3).collect();
        let r = holder_interpolation_check(&[field], &w, 2.0, 2).unwrap();
        assert_eq!(r.theta, 0.0);
        assert!(r.min_slack.abs() < 1e-14);

        assert!(holder_interpolation_check(&constant, &w, 5.0, 2).is_err());
        assert!(holder_interpolation_check(&constant, &w, 1.5, 2).is_err());
    }

    #[test]
    fn theta_interpolates_exponents() {
        let th = holder_theta(3.0, 2).unwrap();
        assert!((1.0 / 3.0 - ((1.0 - th) / 2.0 + th / 4.0)).abs() < 1e-15);
        assert_eq!(holder_theta(4.0, 2).unwrap(), 1.0);
    }
}
