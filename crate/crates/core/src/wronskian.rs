//! Jet-valued Wronskians.
//!
//! The matrix convention is fixed: functions are columns, derivative orders
//! are rows, so entry `(i, j)` is `f_j^(i)(x)`. `W_k` replaces column `k` with
//! the unit vector `(0, ..., 0, 1)^T`, which makes `W_k / W` the Cramer
//! solution of the variation-of-parameters system.

use std::fmt;
use std::sync::Arc;

use crate::expr::Expression;
use crate::jet::Jet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    Expression,
    Constructed { stage: usize },
    Combination,
}

/// A function that can report its derivatives at any point.
///
/// Implementations must be deterministic and prefix-consistent: the jet of
/// order `m` equals the first `m + 1` coefficients of the jet of order `m + 1`.
pub trait SmoothMap: Send + Sync + fmt::Debug {
    fn eval_jet(&self, x: f64, order: usize) -> Result<Jet>;

    fn kind(&self) -> MapKind;

    fn value(&self, x: f64) -> Result<f64> {
        Ok(self.eval_jet(x, 0)?.value())
    }
}

impl SmoothMap for Expression {
    fn eval_jet(&self, x: f64, order: usize) -> Result<Jet> {
        Ok(Expression::eval_jet(self, x, order)?)
    }

    fn kind(&self) -> MapKind {
        MapKind::Expression
    }

    fn value(&self, x: f64) -> Result<f64> {
        Ok(self.eval(x)?)
    }
}

/// Ordered family of functions whose Wronskian is taken.
#[derive(Debug, Clone)]
pub struct WronskiFrame {
    functions: Vec<Arc<dyn SmoothMap>>,
}

impl WronskiFrame {
    pub fn new(functions: Vec<Arc<dyn SmoothMap>>) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::InvalidConfig("a Wronski frame needs at least one function".into()));
        }
        Ok(Self { functions })
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[Arc<dyn SmoothMap>] {
        &self.functions
    }

    /// Frame with columns `i` and `j` exchanged.
    pub fn swapped(&self, i: usize, j: usize) -> Self {
        let mut functions = self.functions.clone();
        functions.swap(i, j);
        Self { functions }
    }

    /// Jets of every column, each carrying enough orders for a Wronskian jet
    /// of order `jet_order`.
    pub fn columns(&self, x: f64, jet_order: usize) -> Result<Vec<Jet>> {
        let needed = self.len() - 1 + jet_order;
        self.functions.iter().map(|f| f.eval_jet(x, needed)).collect()
    }
}

/// `W(f1..fn)` at `x` as a jet of order `jet_order`.
pub fn wronskian(frame: &WronskiFrame, x: f64, jet_order: usize) -> Result<Jet> {
    let cols = frame.columns(x, jet_order)?;
    Ok(wronskian_of_columns(&cols, jet_order))
}

/// `W_k(f1..fn)` for 1-based `k`.
pub fn replaced_wronskian(frame: &WronskiFrame, k: usize, x: f64, jet_order: usize) -> Result<Jet> {
    check_index(k, frame.len())?;
    let cols = frame.columns(x, jet_order)?;
    Ok(replaced_wronskian_of_columns(&cols, k, jet_order))
}

/// Jet of the variation-of-parameters integrand `(W_k / W) h` for 1-based `k`.
pub fn variation_integrand(
    frame: &WronskiFrame,
    h: &dyn SmoothMap,
    k: usize,
    x: f64,
    jet_order: usize,
) -> Result<Jet> {
    check_index(k, frame.len())?;
    let cols = frame.columns(x, jet_order)?;
    let w = wronskian_of_columns(&cols, jet_order);
    let wk = replaced_wronskian_of_columns(&cols, k, jet_order);
    let ratio = wk.div(&w).map_err(|_| Error::SingularWronskian { x })?;
    Ok(ratio.mul(&h.eval_jet(x, jet_order)?)?)
}

fn check_index(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidConfig(format!("column index {k} outside 1..={n}")));
    }
    Ok(())
}

fn entry(cols: &[Jet], row: usize, col: usize, jet_order: usize) -> Jet {
    cols[col]
        .derivative_jet(row, jet_order)
        .expect("column jet too short for the requested Wronskian order")
}

/// Wronskian from precomputed column jets (each of order `>= n - 1 + jet_order`).
pub fn wronskian_of_columns(cols: &[Jet], jet_order: usize) -> Jet {
    let n = cols.len();
    let matrix: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| entry(cols, i, j, jet_order)).collect())
        .collect();
    determinant(matrix)
}

/// Signed minor deleting the last row and column `k` (1-based): equals the
/// determinant with column `k` replaced by `(0, ..., 0, 1)^T`.
pub fn replaced_wronskian_of_columns(cols: &[Jet], k: usize, jet_order: usize) -> Jet {
    let n = cols.len();
    let anchor = cols[0].anchor();
    if n == 1 {
        return Jet::constant(anchor, 1.0, jet_order);
    }
    let minor: Vec<Vec<Jet>> = (0..n - 1)
        .map(|i| {
            (0..n)
                .filter(|&j| j != k - 1)
                .map(|j| entry(cols, i, j, jet_order))
                .collect()
        })
        .collect();
    let det = determinant(minor);
    if (n + k).is_multiple_of(2) {
        det
    } else {
        det.negate()
    }
}

/// All variation integrands `(W_k / W) h`, k = 1..n, from precomputed columns.
///
/// `W` is expanded along its last row against the same `W_k`, so the Cramer
/// identities hold with the exact cofactors used for the ratios.
pub fn variation_integrands_of_columns(cols: &[Jet], h: &Jet, jet_order: usize) -> Result<Vec<Jet>> {
    let n = cols.len();
    let anchor = cols[0].anchor();
    let replaced: Vec<Jet> = (1..=n)
        .map(|k| replaced_wronskian_of_columns(cols, k, jet_order))
        .collect();
    let mut w = Jet::constant(anchor, 0.0, jet_order);
    for (col, wk) in cols.iter().zip(&replaced) {
        let top = col
            .derivative_jet(n - 1, jet_order)
            .expect("column jet too short for the requested Wronskian order");
        w = w.add(&top.mul(wk)?)?;
    }
    let h = h.truncate(jet_order);
    replaced
        .iter()
        .map(|wk| {
            let ratio = wk.div(&w).map_err(|_| Error::SingularWronskian { x: anchor })?;
            Ok(ratio.mul(&h)?)
        })
        .collect()
}

/// Determinant of a square jet matrix: cofactor expansion up to 4x4,
/// fraction-free elimination above (falling back to cofactors when no
/// usable pivot exists).
pub fn determinant(matrix: Vec<Vec<Jet>>) -> Jet {
    if matrix.len() <= 4 {
        determinant_cofactor(&matrix)
    } else {
        determinant_elimination(matrix.clone()).unwrap_or_else(|| determinant_cofactor(&matrix))
    }
}

pub(crate) fn determinant_cofactor(matrix: &[Vec<Jet>]) -> Jet {
    let mut cols: Vec<usize> = (0..matrix.len()).collect();
    laplace(matrix, 0, &mut cols)
}

fn laplace(m: &[Vec<Jet>], row: usize, cols: &mut Vec<usize>) -> Jet {
    if cols.len() == 1 {
        return m[row][cols[0]].clone();
    }
    let mut acc: Option<Jet> = None;
    for idx in 0..cols.len() {
        let c = cols.remove(idx);
        let minor = laplace(m, row + 1, cols);
        cols.insert(idx, c);
        let term = m[row][c].mul(&minor).expect("matrix jets share one anchor");
        acc = Some(match acc {
            None if idx % 2 == 0 => term,
            None => term.negate(),
            Some(a) if idx % 2 == 0 => a.add(&term).expect("shared anchor"),
            Some(a) => a.sub(&term).expect("shared anchor"),
        });
    }
    acc.expect("nonempty column set")
}

/// Bareiss elimination with partial pivoting on leading values. `None` when a
/// pivot is too small to divide by.
pub(crate) fn determinant_elimination(mut a: Vec<Vec<Jet>>) -> Option<Jet> {
    let n = a.len();
    let mut negate = false;
    let mut prev: Option<Jet> = None;
    for k in 0..n - 1 {
        let pivot = (k..n)
            .max_by(|&i, &j| a[i][k].value().abs().total_cmp(&a[j][k].value().abs()))
            .expect("nonempty pivot range");
        if pivot != k {
            a.swap(pivot, k);
            negate = !negate;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let cross = a[k][k]
                    .mul(&a[i][j])
                    .and_then(|p| p.sub(&a[i][k].mul(&a[k][j])?))
                    .ok()?;
                a[i][j] = match &prev {
                    Some(p) => cross.div(p).ok()?,
                    None => cross,
                };
            }
        }
        prev = Some(a[k][k].clone());
    }
    let det = a[n - 1][n - 1].clone();
    Some(if negate { det.negate() } else { det })
}
