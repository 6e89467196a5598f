//! Dense symbolic matrices over the canonical expression field, with the
//! elimination routines the constraint algorithm needs: rank, left null
//! space, and inversion.
//!
//! Pivoting is deterministic (columns left to right, first eliminable row),
//! so repeated runs of the analysis produce byte-identical output.

use num::{Signed, Zero};
use thiserror::Error;

use crate::expr::gcd::{poly_gcd, poly_lcm};
use crate::expr::{Context, Expr, Poly};

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular and cannot be inverted")]
    SingularMatrix,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// A dense matrix of canonical expressions, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Expr>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

/// A left zero mode `v` of a matrix `f`: `v^T f = 0`, components normalized
/// to cleared denominators with unit rational content.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroMode {
    pub components: Vec<Expr>,
}

impl SymMatrix {
    pub fn zeros(rows: usize, cols: usize) -> SymMatrix {
        SymMatrix {
            rows,
            cols,
            data: vec![Expr::zero(); rows * cols],
            row_labels: Vec::new(),
            col_labels: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> SymMatrix {
        let mut m = SymMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Expr::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Expr>>) -> SymMatrix {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        SymMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
            row_labels: Vec::new(),
            col_labels: Vec::new(),
        }
    }

    pub fn with_labels(mut self, row_labels: Vec<String>, col_labels: Vec<String>) -> SymMatrix {
        assert!(row_labels.is_empty() || row_labels.len() == self.rows);
        assert!(col_labels.is_empty() || col_labels.len() == self.cols);
        self.row_labels = row_labels;
        self.col_labels = col_labels;
        self
    }

    pub fn at(&self, r: usize, c: usize) -> &Expr {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, e: Expr) {
        self.data[r * self.cols + c] = e;
    }

    pub fn row(&self, r: usize) -> &[Expr] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> SymMatrix {
        let mut t = SymMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.at(r, c).clone());
            }
        }
        t.row_labels = self.col_labels.clone();
        t.col_labels = self.row_labels.clone();
        t
    }

    pub fn mul(&self, rhs: &SymMatrix, ctx: &Context) -> Result<SymMatrix, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = SymMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for c in 0..rhs.cols {
                let mut acc = Expr::zero();
                for k in 0..self.cols {
                    acc = acc.add(&self.at(r, k).mul(rhs.at(k, c), ctx), ctx);
                }
                out.set(r, c, acc);
            }
        }
        Ok(out)
    }

    /// Append the rows of `other` below the rows of `self`.
    pub fn vstack(&self, other: &SymMatrix) -> Result<SymMatrix, LinalgError> {
        if self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "vstack {} cols with {} cols",
                self.cols, other.cols
            )));
        }
        let mut out = SymMatrix::zeros(self.rows + other.rows, self.cols);
        out.data = self.data.iter().chain(other.data.iter()).cloned().collect();
        out.col_labels = self.col_labels.clone();
        if !self.row_labels.is_empty() && !other.row_labels.is_empty() {
            out.row_labels = self
                .row_labels
                .iter()
                .chain(other.row_labels.iter())
                .cloned()
                .collect();
        }
        Ok(out)
    }

    pub fn is_antisymmetric(&self, ctx: &Context) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for r in 0..self.rows {
            for c in r..self.cols {
                if !self.at(r, c).add(self.at(c, r), ctx).is_zero() {
                    return false;
                }
            }
        }
        true
    }
}

/// Row echelon reduction over the expression field. Returns the reduced
/// matrix and the pivot columns in order. Deterministic: columns are scanned
/// left to right, and for each the first unprocessed row with a nonzero
/// entry becomes the pivot row.
fn rref(m: &SymMatrix, ctx: &Context) -> (SymMatrix, Vec<usize>) {
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut pr = 0usize;
    for pc in 0..a.cols {
        if pr >= a.rows {
            break;
        }
        let Some(src) = (pr..a.rows).find(|&r| !a.at(r, pc).is_zero()) else {
            continue;
        };
        if src != pr {
            for c in 0..a.cols {
                let tmp = a.at(src, c).clone();
                a.set(src, c, a.at(pr, c).clone());
                a.set(pr, c, tmp);
            }
        }
        let piv = a.at(pr, pc).clone();
        for c in pc..a.cols {
            let e = a
                .at(pr, c)
                .div(&piv, ctx)
                .expect("pivot is nonzero by construction");
            a.set(pr, c, e);
        }
        for r in 0..a.rows {
            if r == pr || a.at(r, pc).is_zero() {
                continue;
            }
            let factor = a.at(r, pc).clone();
            for c in pc..a.cols {
                let e = a.at(r, c).sub(&factor.mul(a.at(pr, c), ctx), ctx);
                a.set(r, c, e);
            }
        }
        pivots.push(pc);
        pr += 1;
    }
    (a, pivots)
}

pub fn rank(m: &SymMatrix, ctx: &Context) -> usize {
    rref(m, ctx).1.len()
}

/// Basis for the left null space of `m`: all `v` with `v^T m = 0`. Computed
/// as the (right) null space of the transpose. Free variables are set to one
/// a column at a time, in column order, so the basis is deterministic.
pub fn left_null_space(m: &SymMatrix, ctx: &Context) -> Vec<ZeroMode> {
    let t = m.transpose();
    let (r, pivots) = rref(&t, ctx);
    let n = t.cols;
    let is_pivot: Vec<bool> = {
        let mut v = vec![false; n];
        for &p in &pivots {
            v[p] = true;
        }
        v
    };
    let mut modes = Vec::new();
    for free in 0..n {
        if is_pivot[free] {
            continue;
        }
        let mut comp = vec![Expr::zero(); n];
        comp[free] = Expr::one();
        for (row, &pc) in pivots.iter().enumerate() {
            comp[pc] = r.at(row, free).neg();
        }
        modes.push(normalize_mode(comp, ctx));
    }
    modes
}

/// Clear denominators, divide out the common rational content, and orient
/// the sign: if the first nonzero component is constant, make it positive.
fn normalize_mode(comp: Vec<Expr>, ctx: &Context) -> ZeroMode {
    let mut den_lcm = Poly::one();
    for e in &comp {
        den_lcm = poly_lcm(&den_lcm, e.denominator());
    }
    let scale = Expr::from_poly(den_lcm, ctx);
    let mut cleared: Vec<Expr> = comp.iter().map(|e| e.mul(&scale, ctx)).collect();

    let mut content_gcd: Option<Poly> = None;
    for e in &cleared {
        if e.is_zero() {
            continue;
        }
        content_gcd = Some(match content_gcd {
            None => e.numerator().clone(),
            Some(g) => poly_gcd(&g, e.numerator()),
        });
    }
    if let Some(g) = content_gcd {
        if let Some(c) = g.as_constant() {
            if !c.is_zero() && c.abs() != num::rational::BigRational::from_integer(1.into()) {
                let inv = Expr::from_rational(c.abs().recip());
                cleared = cleared.iter().map(|e| e.mul(&inv, ctx)).collect();
            }
        }
    }

    if let Some(first) = cleared.iter().find(|e| !e.is_zero()) {
        if let Some(c) = first.as_rational() {
            if c.is_negative() {
                cleared = cleared.iter().map(Expr::neg).collect();
            }
        }
    }
    ZeroMode {
        components: cleared,
    }
}

/// Invert via Gauss-Jordan elimination on the augmented matrix `[m | I]`.
pub fn invert(m: &SymMatrix, ctx: &Context) -> Result<SymMatrix, LinalgError> {
    if m.rows != m.cols {
        return Err(LinalgError::DimensionMismatch(format!(
            "cannot invert {}x{} matrix",
            m.rows, m.cols
        )));
    }
    let n = m.rows;
    let mut aug = SymMatrix::zeros(n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            aug.set(r, c, m.at(r, c).clone());
        }
        aug.set(r, n + r, Expr::one());
    }
    let (red, pivots) = rref(&aug, ctx);
    if pivots.len() < n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
        return Err(LinalgError::SingularMatrix);
    }
    let mut inv = SymMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            inv.set(r, c, red.at(r, n + c).clone());
        }
    }
    inv.row_labels = m.col_labels.clone();
    inv.col_labels = m.row_labels.clone();
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{SymbolKind, SymbolTable};

    fn ctx() -> Context {
        Context::new()
    }

    fn int(n: i64) -> Expr {
        Expr::from_int(n)
    }

    #[test]
    fn rank_counts_pivots() {
        let c = ctx();
        let m = SymMatrix::from_rows(vec![
            vec![int(1), int(2), int(3)],
            vec![int(2), int(4), int(6)],
            vec![int(1), int(0), int(1)],
        ]);
        assert_eq!(rank(&m, &c), 2);
        assert_eq!(rank(&SymMatrix::zeros(3, 3), &c), 0);
        assert_eq!(rank(&SymMatrix::identity(4), &c), 4);
    }

    #[test]
    fn left_null_space_of_rank_deficient_matrix() {
        let c = ctx();
        // rows 0 and 1 are proportional; (2, -1, 0) is a left zero mode.
        let m = SymMatrix::from_rows(vec![
            vec![int(1), int(2)],
            vec![int(2), int(4)],
            vec![int(0), int(1)],
        ]);
        let modes = left_null_space(&m, &c);
        assert_eq!(modes.len(), 1);
        assert_eq!(modes[0].components, vec![int(2), int(-1), int(0)]);
    }

    #[test]
    fn null_modes_annihilate_from_the_left() {
        let c = ctx();
        let m = SymMatrix::from_rows(vec![
            vec![int(0), int(-1), int(0)],
            vec![int(1), int(0), int(0)],
            vec![int(0), int(0), int(0)],
        ]);
        let modes = left_null_space(&m, &c);
        assert_eq!(modes.len(), 1);
        for mode in &modes {
            let v = SymMatrix::from_rows(vec![mode.components.clone()]);
            let prod = v.mul(&m, &c).unwrap();
            assert!((0..m.cols).all(|j| prod.at(0, j).is_zero()));
        }
    }

    #[test]
    fn symbolic_two_by_two_inverse() {
        let mut table = SymbolTable::new();
        let a = table.declare("a", SymbolKind::Parameter).unwrap();
        let b = table.declare("b", SymbolKind::Parameter).unwrap();
        let mut c = Context::new();
        c.table = table;
        let m = SymMatrix::from_rows(vec![
            vec![Expr::zero(), Expr::var(a)],
            vec![Expr::var(a).neg(), Expr::var(b)],
        ]);
        let inv = invert(&m, &c).unwrap();
        let prod = m.mul(&inv, &c).unwrap();
        assert_eq!(prod, SymMatrix::identity(2));
        // inverse of [[0, a], [-a, b]] is [[b/a^2, -1/a], [1/a, 0]]
        let a2 = Expr::var(a).mul(&Expr::var(a), &c);
        assert_eq!(*inv.at(0, 0), Expr::var(b).div(&a2, &c).unwrap());
        assert_eq!(*inv.at(1, 0), Expr::one().div(&Expr::var(a), &c).unwrap());
    }

    #[test]
    fn singular_inversion_fails() {
        let c = ctx();
        let m = SymMatrix::from_rows(vec![vec![int(1), int(2)], vec![int(2), int(4)]]);
        assert_eq!(invert(&m, &c), Err(LinalgError::SingularMatrix));
    }

    #[test]
    fn antisymmetry_check() {
        let c = ctx();
        let m = SymMatrix::from_rows(vec![vec![int(0), int(3)], vec![int(-3), int(0)]]);
        assert!(m.is_antisymmetric(&c));
        let m2 = SymMatrix::from_rows(vec![vec![int(0), int(3)], vec![int(3), int(0)]]);
        assert!(!m2.is_antisymmetric(&c));
    }

    #[test]
    fn mode_normalization_clears_denominators() {
        let mut c = Context::new();
        let k = c.table.declare("k", SymbolKind::Parameter).unwrap();
        // v1 + k v2 = 0 gives the raw mode (-k, 1); the leading entry is
        // non-constant, so no sign flip is applied.
        let m = SymMatrix::from_rows(vec![vec![Expr::one()], vec![Expr::var(k)]]);
        let modes = left_null_space(&m, &c);
        assert_eq!(modes.len(), 1);
        assert_eq!(modes[0].components, vec![Expr::var(k).neg(), Expr::one()]);
    }

    #[test]
    fn vstack_and_labels() {
        let c = ctx();
        let top = SymMatrix::from_rows(vec![vec![int(1), int(0)]])
            .with_labels(vec!["x".into()], vec!["x".into(), "p".into()]);
        let bot = SymMatrix::from_rows(vec![vec![int(0), int(1)]])
            .with_labels(vec!["p".into()], vec!["x".into(), "p".into()]);
        let s = top.vstack(&bot).unwrap();
        assert_eq!(s.rows, 2);
        assert_eq!(s.row_labels, vec!["x".to_string(), "p".to_string()]);
        assert_eq!(rank(&s, &c), 2);
    }
}
