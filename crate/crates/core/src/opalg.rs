//! Second-quantized operator expressions and their compilation to sparse
//! matrices on a basis.
//!
//! A term's factors are written left to right as in the printed product and
//! act on a ket right to left. Expressions are never normal-ordered or
//! simplified; two expressions are the same operator when their compiled
//! matrices agree.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{apply_annihilation, apply_creation, Basis, FockState, FockVector};
use crate::kspace::Mode;
use crate::scalar::{cplx, norm_sqr, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Factor {
    pub mode: Mode,
    pub dagger: bool,
}

impl Factor {
    pub fn create(mode: Mode) -> Self {
        Self { mode, dagger: true }
    }

    pub fn annihilate(mode: Mode) -> Self {
        Self { mode, dagger: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term<T> {
    pub coeff: Complex<T>,
    pub factors: Vec<Factor>,
}

impl<T: Real> Term<T> {
    /// Acts on a basis state; `None` when a factor hits Pauli exclusion or an
    /// empty mode.
    #[inline]
    pub fn act(&self, state: FockState) -> Option<(Complex<T>, FockState)> {
        let mut s = state;
        let mut sign = 1i8;
        for f in self.factors.iter().rev() {
            let (sg, next) = if f.dagger {
                apply_creation(s, f.mode)?
            } else {
                apply_annihilation(s, f.mode)?
            };
            sign *= sg;
            s = next;
        }
        let c = if sign < 0 { -self.coeff } else { self.coeff };
        Some((c, s))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorExpr<T> {
    terms: Vec<Term<T>>,
}

impl<T: Real> Default for OperatorExpr<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Real> OperatorExpr<T> {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn identity() -> Self {
        Self::scalar(cplx(T::one()))
    }

    pub fn scalar(c: Complex<T>) -> Self {
        Self::from_terms(vec![Term {
            coeff: c,
            factors: Vec::new(),
        }])
    }

    /// Drops terms whose coefficient is exactly zero.
    pub fn from_terms(terms: Vec<Term<T>>) -> Self {
        Self {
            terms: terms
                .into_iter()
                .filter(|t| t.coeff.re != T::zero() || t.coeff.im != T::zero())
                .collect(),
        }
    }

    pub fn monomial(coeff: Complex<T>, factors: Vec<Factor>) -> Self {
        Self::from_terms(vec![Term { coeff, factors }])
    }

    pub fn creation(mode: Mode) -> Self {
        Self::monomial(cplx(T::one()), vec![Factor::create(mode)])
    }

    pub fn annihilation(mode: Mode) -> Self {
        Self::monomial(cplx(T::one()), vec![Factor::annihilate(mode)])
    }

    /// `a†_m a_m`
    pub fn number(mode: Mode) -> Self {
        Self::monomial(cplx(T::one()), vec![Factor::create(mode), Factor::annihilate(mode)])
    }

    pub fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scaled(&self, c: Complex<T>) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff * c,
                    factors: t.factors.clone(),
                })
                .collect(),
        )
    }

    pub fn scaled_re(&self, c: T) -> Self {
        self.scaled(cplx(c))
    }

    /// Term-wise concatenation; `self` stands to the left.
    pub fn multiply(&self, rhs: &Self) -> Self {
        let mut out = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                let mut factors = Vec::with_capacity(a.factors.len() + b.factors.len());
                factors.extend_from_slice(&a.factors);
                factors.extend_from_slice(&b.factors);
                out.push(Term {
                    coeff: a.coeff * b.coeff,
                    factors,
                });
            }
        }
        Self::from_terms(out)
    }

    pub fn sum(&self, rhs: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(rhs.terms.iter().cloned());
        Self::from_terms(terms)
    }

    pub fn difference(&self, rhs: &Self) -> Self {
        self.sum(&rhs.scaled_re(-T::one()))
    }

    /// Reversed factors, flipped daggers, conjugated coefficients.
    pub fn adjoint(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff.conj(),
                    factors: t
                        .factors
                        .iter()
                        .rev()
                        .map(|f| Factor {
                            mode: f.mode,
                            dagger: !f.dagger,
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// `AB - BA` as an expression.
    pub fn commutator(&self, rhs: &Self) -> Self {
        self.multiply(rhs).difference(&rhs.multiply(self))
    }

    /// `self^n` by repeated multiplication; `n = 0` is the identity.
    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::identity(), |acc, _| acc.multiply(self))
    }

    /// Highest mode index referenced, if any.
    pub fn max_mode(&self) -> Option<Mode> {
        self.terms.iter().flat_map(|t| t.factors.iter().map(|f| f.mode)).max()
    }

    pub fn apply_to_state(&self, s: FockState) -> FockVector<T> {
        let mut out = FockVector::zero();
        for t in &self.terms {
            if let Some((c, next)) = t.act(s) {
                out.add(next, c);
            }
        }
        out
    }

    /// `op |v⟩` on a sparse vector.
    pub fn apply(&self, v: &FockVector<T>) -> FockVector<T> {
        let mut out = FockVector::zero();
        for (s, a) in v.iter() {
            for t in &self.terms {
                if let Some((c, next)) = t.act(s) {
                    out.add(next, c * a);
                }
            }
        }
        out
    }

    pub fn compile(&self, basis: &Basis) -> Result<SectorMatrix<T>> {
        self.compile_between(basis, basis)
    }

    /// Matrix from `domain` to `codomain`. Any image component outside the
    /// codomain is an error rather than being dropped.
    pub fn compile_between(&self, domain: &Basis, codomain: &Basis) -> Result<SectorMatrix<T>> {
        let columns: Vec<Result<Vec<(usize, Complex<T>)>>> = domain
            .states()
            .par_iter()
            .map(|&s| {
                let mut col: BTreeMap<usize, Complex<T>> = BTreeMap::new();
                for t in &self.terms {
                    if let Some((c, next)) = t.act(s) {
                        let row = codomain
                            .index_of(next)
                            .ok_or(Error::OutsideCodomain { state: next.0 })?;
                        *col.entry(row).or_insert_with(|| cplx(T::zero())) += c;
                    }
                }
                Ok(col
                    .into_iter()
                    .filter(|(_, c)| c.re != T::zero() || c.im != T::zero())
                    .collect())
            })
            .collect();
        let mut col_ptr = Vec::with_capacity(domain.len() + 1);
        let mut row_idx = Vec::new();
        let mut vals = Vec::new();
        col_ptr.push(0);
        for col in columns {
            for (r, c) in col? {
                row_idx.push(r);
                vals.push(c);
            }
            col_ptr.push(row_idx.len());
        }
        Ok(SectorMatrix {
            domain: domain.clone(),
            codomain: codomain.clone(),
            col_ptr,
            row_idx,
            vals,
            hermitian: false,
        })
    }
}

/// Frobenius norm of `op` restricted to `domain`, with no codomain needed.
pub fn restricted_norm<T: Real>(op: &OperatorExpr<T>, domain: &Basis) -> T {
    let per_column: Vec<T> = domain
        .states()
        .par_iter()
        .map(|&s| op.apply_to_state(s).norm_sqr())
        .collect();
    per_column.into_iter().fold(T::zero(), |a, b| a + b).sqrt()
}

/// `[a, b]` compiled on a closed basis.
pub fn commutator_matrix<T: Real>(
    a: &OperatorExpr<T>,
    b: &OperatorExpr<T>,
    basis: &Basis,
) -> Result<SectorMatrix<T>> {
    a.commutator(b).compile(basis)
}

impl<T: Real> Add for OperatorExpr<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.sum(&rhs)
    }
}

impl<T: Real> Sub for OperatorExpr<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.difference(&rhs)
    }
}

impl<T: Real> Mul for OperatorExpr<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.multiply(&rhs)
    }
}

impl<T: Real> Mul<Complex<T>> for OperatorExpr<T> {
    type Output = Self;
    fn mul(self, rhs: Complex<T>) -> Self {
        self.scaled(rhs)
    }
}

impl<T: Real> Neg for OperatorExpr<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scaled_re(-T::one())
    }
}

impl<T: Real> fmt::Display for OperatorExpr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({}{:+}i)", t.coeff.re, t.coeff.im)?;
            for fac in &t.factors {
                write!(f, " a{}_{}", if fac.dagger { "†" } else { "" }, fac.mode.0)?;
            }
        }
        Ok(())
    }
}

/// Compressed-column complex matrix between two bases.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorMatrix<T> {
    domain: Basis,
    codomain: Basis,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    vals: Vec<Complex<T>>,
    hermitian: bool,
}

impl<T: Real> SectorMatrix<T> {
    pub fn domain(&self) -> &Basis {
        &self.domain
    }

    pub fn codomain(&self) -> &Basis {
        &self.codomain
    }

    pub fn nrows(&self) -> usize {
        self.codomain.len()
    }

    pub fn ncols(&self) -> usize {
        self.domain.len()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_square_on_one_basis(&self) -> bool {
        self.domain == self.codomain
    }

    /// Set only by [`SectorMatrix::verify_hermitian`].
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// `(row, col, value)` in column-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex<T>)> + '_ {
        (0..self.ncols()).flat_map(move |c| {
            (self.col_ptr[c]..self.col_ptr[c + 1]).map(move |k| (self.row_idx[k], c, self.vals[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        let range = self.col_ptr[col]..self.col_ptr[col + 1];
        match self.row_idx[range.clone()].binary_search(&row) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => cplx(T::zero()),
        }
    }

    fn from_triplets(
        domain: Basis,
        codomain: Basis,
        mut triplets: Vec<(usize, usize, Complex<T>)>,
    ) -> Self {
        triplets.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        let mut col_ptr = vec![0usize; domain.len() + 1];
        let mut row_idx = Vec::with_capacity(triplets.len());
        let mut vals: Vec<Complex<T>> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().expect("entry exists") += v;
            } else {
                row_idx.push(r);
                vals.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..domain.len() {
            col_ptr[c + 1] += col_ptr[c];
        }
        Self {
            domain,
            codomain,
            col_ptr,
            row_idx,
            vals,
            hermitian: false,
        }
    }

    pub fn adjoint(&self) -> Self {
        let t = self.entries().map(|(r, c, v)| (c, r, v.conj())).collect();
        let mut m = Self::from_triplets(self.codomain.clone(), self.domain.clone(), t);
        m.hermitian = self.hermitian;
        m
    }

    pub fn scaled(&self, f: Complex<T>) -> Self {
        let mut m = self.clone();
        for v in &mut m.vals {
            *v = *v * f;
        }
        m.hermitian = false;
        m
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.domain != other.domain || self.codomain != other.codomain {
            return Err(Error::Config("matrices act between different bases".into()));
        }
        Ok(())
    }

    /// `self + f·other`
    pub fn axpy(&self, f: Complex<T>, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let t = self
            .entries()
            .chain(other.entries().map(|(r, c, v)| (r, c, v * f)))
            .collect();
        Ok(Self::from_triplets(self.domain.clone(), self.codomain.clone(), t))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(cplx(-T::one()), other)
    }

    /// `self · rhs`; requires `self.domain == rhs.codomain`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.domain != rhs.codomain {
            return Err(Error::Config("inner bases of a matrix product differ".into()));
        }
        let mut t = Vec::new();
        for c in 0..rhs.ncols() {
            let mut acc: BTreeMap<usize, Complex<T>> = BTreeMap::new();
            for k in rhs.col_ptr[c]..rhs.col_ptr[c + 1] {
                let (mid, b) = (rhs.row_idx[k], rhs.vals[k]);
                for j in self.col_ptr[mid]..self.col_ptr[mid + 1] {
                    *acc.entry(self.row_idx[j]).or_insert_with(|| cplx(T::zero())) += self.vals[j] * b;
                }
            }
            t.extend(acc.into_iter().map(|(r, v)| (r, c, v)));
        }
        Ok(Self::from_triplets(rhs.domain.clone(), self.codomain.clone(), t))
    }

    pub fn matvec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.ncols());
        let mut y = vec![cplx(T::zero()); self.nrows()];
        for (c, xc) in x.iter().enumerate() {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[k]] += self.vals[k] * xc;
            }
        }
        y
    }

    pub fn apply(&self, v: &FockVector<T>) -> Result<FockVector<T>> {
        let x = v.to_dense(&self.domain)?;
        Ok(FockVector::from_dense(&self.codomain, &self.matvec(&x)))
    }

    pub fn frobenius_norm(&self) -> T {
        self.vals.iter().map(|v| norm_sqr(*v)).fold(T::zero(), |a, b| a + b).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.vals.iter().map(|v| v.norm()).fold(T::zero(), T::max)
    }

    /// Largest `|A_ij - conj(A_ji)|`; infinite when the bases differ.
    pub fn hermitian_deviation(&self) -> T {
        if !self.is_square_on_one_basis() {
            return T::infinity();
        }
        self.entries()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(T::zero(), T::max)
    }

    /// Sets the Hermitian flag when the deviation is within `tol`.
    pub fn verify_hermitian(mut self, tol: T) -> Result<Self> {
        let dev = self.hermitian_deviation();
        if dev <= tol {
            self.hermitian = true;
            Ok(self)
        } else {
            Err(Error::NotHermitian {
                deviation: dev.to_f64_lossy(),
            })
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex<T>> {
        let mut m = DMatrix::from_element(self.nrows(), self.ncols(), cplx(T::zero()));
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }

    /// Coordinate-format export with 1-based indices. The bases are listed in
    /// comment lines as hexadecimal occupation masks.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate complex general")?;
        let list = |b: &Basis| b.states().iter().map(|s| s.to_hex()).collect::<Vec<_>>().join(" ");
        writeln!(w, "% codomain {}", list(&self.codomain))?;
        writeln!(w, "% domain {}", list(&self.domain))?;
        writeln!(w, "{} {} {}", self.nrows(), self.ncols(), self.nnz())?;
        for (r, c, v) in self.entries() {
            writeln!(w, "{} {} {:.16e} {:.16e}", r + 1, c + 1, v.re, v.im)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn cr(m: usize) -> OperatorExpr<f64> {
        OperatorExpr::creation(Mode(m))
    }

    fn an(m: usize) -> OperatorExpr<f64> {
        OperatorExpr::annihilation(Mode(m))
    }

    #[test]
    fn multiply_concatenates() {
        let p = cr(0).scaled_re(2.0).multiply(&an(1).scaled_re(3.0));
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.terms()[0].coeff, c(6.0, 0.0));
        assert_eq!(p.terms()[0].factors, vec![Factor::create(Mode(0)), Factor::annihilate(Mode(1))]);
        let x = cr(0).multiply(&an(2)).sum(&an(3).scaled(c(0.0, 1.5)));
        assert_eq!(x.multiply(&OperatorExpr::identity()), x);
    }

    #[test]
    fn pauli_kills_product() {
        let p = cr(0).multiply(&cr(1)).multiply(&cr(1));
        let m = p.compile(&Basis::full(4)).unwrap();
        assert_eq!(m.nnz(), 0);
    }

    #[test]
    fn adjoint_examples() {
        assert_eq!(cr(0).adjoint(), an(0));
        let x = cr(0).multiply(&an(1)).scaled(c(0.0, 1.0));
        let expected = cr(1).multiply(&an(0)).scaled(c(0.0, -1.0));
        assert_eq!(x.adjoint(), expected);
        assert_eq!(x.adjoint().adjoint(), x);
    }

    #[test]
    fn zero_coefficients_are_pruned() {
        let x = cr(0).scaled_re(0.0);
        assert!(x.is_zero());
        assert!(cr(0).sum(&cr(1)).scaled_re(0.0).is_zero());
    }

    #[test]
    fn number_operator_on_sector() {
        let n = (0..4).fold(OperatorExpr::zero(), |acc, m| acc + OperatorExpr::number(Mode(m)));
        let basis = Basis::new((0..16u64).filter(|s| s.count_ones() == 2).map(FockState).collect());
        let m = n.compile(&basis).unwrap();
        let d = m.to_dense();
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                let e = if i == j { 2.0 } else { 0.0 };
                assert_eq!(d[(i, j)], c(e, 0.0));
            }
        }
    }

    #[test]
    fn self_commutator_vanishes() {
        let a = cr(0).multiply(&an(2)).sum(&cr(1).multiply(&cr(3)).scaled(c(0.5, -0.25)));
        assert_eq!(commutator_matrix(&a, &a, &Basis::full(4)).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn codomain_leakage_is_reported() {
        let basis = Basis::new(vec![FockState(0b1), FockState(0b10)]);
        assert!(matches!(cr(2).compile(&basis), Err(Error::OutsideCodomain { .. })));
        let full = Basis::full(3);
        let m = cr(2).compile_between(&basis, &full).unwrap();
        assert_eq!((m.nrows(), m.ncols(), m.nnz()), (8, 2, 2));
    }

    #[test]
    fn hermitian_flag_requires_verification() {
        let h = OperatorExpr::number(Mode(0)) + cr(0).multiply(&an(1)) + cr(1).multiply(&an(0));
        let m = h.compile(&Basis::full(2)).unwrap();
        assert!(!m.is_hermitian());
        assert!(m.verify_hermitian(1e-12).unwrap().is_hermitian());
        let nh = cr(0).multiply(&an(1)).compile(&Basis::full(2)).unwrap();
        assert!(matches!(nh.verify_hermitian(1e-12), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn coordinate_export() {
        let m = cr(0).compile(&Basis::full(1)).unwrap();
        let mut buf = Vec::new();
        m.write_coordinate(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate complex general\n"));
        assert!(text.contains("\n2 2 1\n2 1 1.0000000000000000e0 0.0000000000000000e0\n"));
    }

    fn arb_expr(n_modes: usize) -> impl Strategy<Value = OperatorExpr<f64>> {
        let factor = (0..n_modes, any::<bool>()).prop_map(|(m, d)| Factor { mode: Mode(m), dagger: d });
        let term = (-1.0f64..1.0, -1.0f64..1.0, prop::collection::vec(factor, 0..4))
            .prop_map(|(re, im, factors)| Term { coeff: Complex::new(re, im), factors });
        prop::collection::vec(term, 1..6).prop_map(OperatorExpr::from_terms)
    }

    fn dense_close(a: &DMatrix<Complex<f64>>, b: &DMatrix<Complex<f64>>, tol: f64) -> bool {
        a.shape() == b.shape() && a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() <= tol)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn compile_is_linear(a in arb_expr(4), b in arb_expr(4), al in -2.0f64..2.0, be in -2.0f64..2.0) {
            let basis = Basis::full(4);
            let lhs = a.scaled_re(al).sum(&b.scaled_re(be)).compile(&basis).unwrap().to_dense();
            let rhs = a.compile(&basis).unwrap().to_dense() * Complex::new(al, 0.0)
                + b.compile(&basis).unwrap().to_dense() * Complex::new(be, 0.0);
            prop_assert!(dense_close(&lhs, &rhs, 1e-12));
        }

        #[test]
        fn compile_is_multiplicative_on_full_space(a in arb_expr(4), b in arb_expr(4)) {
            let basis = Basis::full(4);
            let prod = a.multiply(&b).compile(&basis).unwrap();
            let (ma, mb) = (a.compile(&basis).unwrap(), b.compile(&basis).unwrap());
            prop_assert!(dense_close(&prod.to_dense(), &(ma.to_dense() * mb.to_dense()), 1e-12));
            prop_assert!(dense_close(&prod.to_dense(), &ma.matmul(&mb).unwrap().to_dense(), 1e-12));
        }

        #[test]
        fn compile_commutes_with_adjoint(a in arb_expr(4)) {
            let basis = Basis::full(4);
            let lhs = a.compile(&basis).unwrap().adjoint().to_dense();
            let rhs = a.adjoint().compile(&basis).unwrap().to_dense();
            prop_assert!(dense_close(&lhs, &rhs, 1e-12));
        }

        #[test]
        fn sparse_apply_matches_matrix(a in arb_expr(4), amps in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16)) {
            let basis = Basis::full(4);
            let v = FockVector::from_dense(&basis, &amps.iter().map(|(r, i)| Complex::new(*r, *i)).collect::<Vec<_>>());
            let direct = a.apply(&v);
            let via = a.compile(&basis).unwrap().apply(&v).unwrap();
            for s in basis.states() {
                prop_assert!((direct.amplitude(*s) - via.amplitude(*s)).norm() < 1e-12);
            }
            let rn = restricted_norm(&a, &basis);
            prop_assert!((rn - a.compile(&basis).unwrap().frobenius_norm()).abs() < 1e-12);
        }
    }
}
