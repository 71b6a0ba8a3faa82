//! JSON decoders for matrices, states and specs, and a fixed-precision CSV writer.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Deserialize;

use crate::chain::{ChainParams, ChainState};
use crate::error::{Error, Result};
use crate::gibbs::GibbsSpec;
use crate::spectral::HermitianOperator;

fn parse_json<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

/// Row-major complex matrix: `[[[re, im], ...], ...]`.
pub fn parse_complex_matrix(text: &str) -> Result<DMatrix<C64>> {
    let rows: Vec<Vec<[f64; 2]>> = parse_json(text)?;
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return Err(Error::Parse("matrix must be non-empty".into()));
    }
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Parse("matrix rows have different lengths".into()));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

/// A Hermitian operator in the [`parse_complex_matrix`] layout.
pub fn parse_hermitian(text: &str) -> Result<HermitianOperator> {
    HermitianOperator::new(parse_complex_matrix(text)?)
}

/// Complex vector as `[[re, im], ...]`, or a plain real array.
pub fn parse_complex_vector(text: &str) -> Result<Vec<C64>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Real(f64),
        Complex([f64; 2]),
    }
    let xs: Vec<Entry> = parse_json(text)?;
    Ok(xs
        .into_iter()
        .map(|e| match e {
            Entry::Real(x) => C64::new(x, 0.0),
            Entry::Complex([re, im]) => C64::new(re, im),
        })
        .collect())
}

pub fn parse_real_vector(text: &str) -> Result<Vec<f64>> {
    parse_json(text)
}

/// Either `{"q": [...], "p": [...], "t": 0}` or a bare array of positions
/// (the chain then starts at rest). The result is validated against `prm`.
pub fn parse_chain_state(text: &str, prm: &ChainParams) -> Result<ChainState> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Positions(Vec<f64>),
        Full(ChainState),
    }
    let s = match parse_json::<Repr>(text)? {
        Repr::Positions(q) => ChainState::at_rest(q),
        Repr::Full(s) => s,
    };
    s.validate(prm)?;
    Ok(s)
}

pub fn parse_gibbs_spec(text: &str) -> Result<GibbsSpec> {
    parse_json(text)
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV with a header row; numeric cells use [`format_float`].
#[derive(Debug, Clone, Default)]
pub struct Csv {
    text: String,
    columns: usize,
}

/// A CSV cell.
#[derive(Debug, Clone, Copy)]
pub enum Cell<'a> {
    Float(f64),
    Int(i64),
    Text(&'a str),
}

impl From<f64> for Cell<'_> {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}
impl From<usize> for Cell<'_> {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}
impl From<u32> for Cell<'_> {
    fn from(x: u32) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell<'_> {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}
impl From<bool> for Cell<'_> {
    fn from(x: bool) -> Self {
        Cell::Int(x as i64)
    }
}
impl<'a> From<&'a str> for Cell<'a> {
    fn from(x: &'a str) -> Self {
        Cell::Text(x)
    }
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self {
            text,
            columns: header.len(),
        }
    }

    /// Panics if the row length differs from the header's.
    pub fn row(&mut self, cells: &[Cell<'_>]) -> &mut Self {
        assert_eq!(cells.len(), self.columns, "CSV row length must match the header");
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match c {
                Cell::Float(x) => self.text.push_str(&format_float(*x)),
                Cell::Int(x) => {
                    let _ = write!(self.text, "{x}");
                }
                Cell::Text(s) => self.text.push_str(s),
            }
        }
        self.text.push('\n');
        self
    }

    pub fn float_row(&mut self, xs: &[f64]) -> &mut Self {
        let cells: Vec<Cell<'_>> = xs.iter().map(|&x| Cell::Float(x)).collect();
        self.row(&cells)
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, &self.text)
    }
}
