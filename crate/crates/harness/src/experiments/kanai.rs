//! The damped chain against its exponentially rescaled undamped form.
//!
//! Artifact `residuals.csv`: `g, k, nu, dt, residual`

use ergokit_core::chain::{kanai_residual, ChainParams};
use ergokit_core::io::Csv;
use serde::Deserialize;

use super::{nonzero, positive, ratio, HALVING_BAND};
use crate::{Context, HarnessError, Recorder};

/// Without damping the two integrations coincide.
const UNDAMPED_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub n: usize,
    pub a: f64,
    pub nu: f64,
    pub horizon: f64,
    /// Coarse step; the fine step is half of it.
    pub dt: f64,
    /// `(g, k)` pairs.
    pub cases: Vec<(f64, u32)>,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            n: 16,
            a: 1.0,
            nu: 0.5,
            horizon: 5.0,
            dt: 1e-2,
            cases: vec![(0.0, 1), (1.0, 1), (1.0, 2)],
        }
    }
}

impl super::Params for Params {
    fn check(&self) -> Result<(), HarnessError> {
        nonzero("n", self.n)?;
        positive("a", self.a)?;
        positive("nu", self.nu)?;
        positive("horizon", self.horizon)?;
        positive("dt", self.dt)?;
        for &(g, k) in &self.cases {
            ChainParams::new(self.n, self.a, g, k).context("case")?;
        }
        Ok(())
    }
}

pub fn run(p: &Params, _seed: u64, rec: &mut Recorder) -> Result<(), HarnessError> {
    let mut csv = Csv::new(&["g", "k", "nu", "dt", "residual"]);
    for &(g, k) in &p.cases {
        let prm = ChainParams::new(p.n, p.a, g, k).and_then(|c| c.with_nu(p.nu)).context("chain")?;
        let u0: Vec<f64> = (1..=p.n)
            .map(|i| (std::f64::consts::FRAC_PI_2 * (prm.site_position(i) + p.a) / p.a).sin())
            .collect();
        let coarse = kanai_residual(&prm, &u0, p.horizon, p.dt).context("damped chain")?;
        let fine = kanai_residual(&prm, &u0, p.horizon, 0.5 * p.dt).context("damped chain")?;
        csv.row(&[g.into(), k.into(), p.nu.into(), p.dt.into(), coarse.into()]);
        csv.row(&[g.into(), k.into(), p.nu.into(), (0.5 * p.dt).into(), fine.into()]);
        rec.within(
            format!("kanai_halving_g{g}_k{k}"),
            ratio(coarse, fine),
            HALVING_BAND.0,
            HALVING_BAND.1,
            format!("residual {coarse:e} → {fine:e}"),
        );

        let undamped = ChainParams::new(p.n, p.a, g, k).context("chain")?;
        let r0 = kanai_residual(&undamped, &u0, p.horizon, p.dt).context("undamped chain")?;
        csv.row(&[g.into(), k.into(), 0f64.into(), p.dt.into(), r0.into()]);
        rec.at_most(format!("kanai_undamped_g{g}_k{k}"), r0, UNDAMPED_TOL, "ν = 0: identical flows");
    }
    rec.artifact("residuals.csv", csv);
    Ok(())
}
