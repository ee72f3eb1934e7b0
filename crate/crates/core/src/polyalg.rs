//! Sparse complex polynomials in the X-variables and the differential
//! operators that act on them exactly: Δ_X, the angular-momentum
//! derivations D_V•, the linear forms Θ_Q and the harmonic projection Π_X.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hgroup::{EndomorphismSpace, SquareMatrix};
use crate::scalar::{cx, imag_unit, re, Cx, Real};

pub type Exponents = Vec<u32>;

/// Sparse multivariate polynomial with complex coefficients.
#[derive(Clone, PartialEq)]
pub struct ComplexPolynomial<T: Real> {
    dim: usize,
    terms: BTreeMap<Exponents, Cx<T>>,
}

fn drop_threshold<T: Real>() -> T {
    T::epsilon() * T::lit(4.5)
}

impl<T: Real> ComplexPolynomial<T> {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: Cx<T>) -> Self {
        Self::monomial(dim, vec![0; dim], c)
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, re(T::one()))
    }

    pub fn monomial(dim: usize, exps: Exponents, c: Cx<T>) -> Self {
        assert_eq!(exps.len(), dim, "exponent vector length must equal dimension");
        let mut terms = BTreeMap::new();
        if c != Cx::new(T::zero(), T::zero()) {
            terms.insert(exps, c);
        }
        Self { dim, terms }
    }

    /// The coordinate function x_j.
    pub fn variable(dim: usize, j: usize) -> Self {
        let mut e = vec![0; dim];
        e[j] = 1;
        Self::monomial(dim, e, re(T::one()))
    }

    /// Linear form Σ c_j x_j.
    pub fn linear(coeffs: &[Cx<T>]) -> Self {
        let dim = coeffs.len();
        let mut out = Self::zero(dim);
        for (j, &c) in coeffs.iter().enumerate() {
            let mut e = vec![0; dim];
            e[j] = 1;
            out.add_term(e, c);
        }
        out.canonicalize();
        out
    }

    /// |X|² restricted to the coordinates in `range`.
    pub fn squared_norm_on(dim: usize, range: std::ops::Range<usize>) -> Self {
        let mut out = Self::zero(dim);
        for j in range {
            let mut e = vec![0; dim];
            e[j] = 2;
            out.add_term(e, re(T::one()));
        }
        out
    }

    /// |X|².
    pub fn squared_norm(dim: usize) -> Self {
        Self::squared_norm_on(dim, 0..dim)
    }

    pub fn from_terms<I: IntoIterator<Item = (Exponents, Cx<T>)>>(dim: usize, it: I) -> Self {
        let mut out = Self::zero(dim);
        for (e, c) in it {
            assert_eq!(e.len(), dim);
            out.add_term(e, c);
        }
        out.canonicalize();
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &Cx<T>)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exps: &[u32]) -> Cx<T> {
        self.terms.get(exps).copied().unwrap_or_else(|| Cx::new(T::zero(), T::zero()))
    }

    fn add_term(&mut self, e: Exponents, c: Cx<T>) {
        let slot = self.terms.entry(e).or_insert_with(|| Cx::new(T::zero(), T::zero()));
        *slot += c;
    }

    /// Drops exact zeros and coefficients negligible against the largest one.
    pub fn canonicalize(&mut self) {
        let scale = self.max_coefficient();
        let cut = scale * drop_threshold::<T>();
        self.terms.retain(|_, c| c.norm() > cut && c.norm() > T::zero());
    }

    /// Largest coefficient modulus.
    pub fn max_coefficient(&self) -> T {
        self.terms.values().fold(T::zero(), |m, c| m.max(c.norm()))
    }

    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(|e| total_degree(e)).max()
    }

    pub fn min_degree(&self) -> Option<usize> {
        self.terms.keys().map(|e| total_degree(e)).min()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.degree() == self.min_degree()
    }

    pub fn homogeneous_part(&self, n: usize) -> Self {
        Self {
            dim: self.dim,
            terms: self.terms.iter().filter(|(e, _)| total_degree(e) == n).map(|(e, c)| (e.clone(), *c)).collect(),
        }
    }

    pub fn scale(&self, s: Cx<T>) -> Self {
        let mut out = Self { dim: self.dim, terms: self.terms.iter().map(|(e, c)| (e.clone(), *c * s)).collect() };
        out.canonicalize();
        out
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(re(s))
    }

    pub fn conj(&self) -> Self {
        Self { dim: self.dim, terms: self.terms.iter().map(|(e, c)| (e.clone(), c.conj())).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_dim(other);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out.canonicalize();
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(re(-T::one())))
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_dim(other);
        let mut out = Self::zero(self.dim);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Exponents = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, *c1 * *c2);
            }
        }
        out.canonicalize();
        out
    }

    pub fn pow(&self, n: usize) -> Self {
        let mut acc = Self::one(self.dim);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// ∂/∂x_j.
    pub fn derivative(&self, j: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            if e[j] > 0 {
                let mut d = e.clone();
                let m = d[j];
                d[j] -= 1;
                out.add_term(d, *c * T::from_usize_exact(m as usize));
            }
        }
        out.canonicalize();
        out
    }

    /// Multiplication by x_j.
    pub fn mul_variable(&self, j: usize) -> Self {
        Self {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let mut d = e.clone();
                    d[j] += 1;
                    (d, *c)
                })
                .collect(),
        }
    }

    /// Flat Laplacian Σ_j ∂_j².
    pub fn laplacian(&self) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            for j in 0..self.dim {
                let m = e[j];
                if m >= 2 {
                    let mut d = e.clone();
                    d[j] -= 2;
                    out.add_term(d, *c * T::from_usize_exact((m * (m - 1)) as usize));
                }
            }
        }
        out.canonicalize();
        out
    }

    /// Euler operator X·∇.
    pub fn euler(&self) -> Self {
        let mut out = Self {
            dim: self.dim,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), *c * T::from_usize_exact(total_degree(e)))).collect(),
        };
        out.canonicalize();
        out
    }

    /// Gradient dotted with another polynomial vector field: Σ_j f_j ∂_j P.
    pub fn directional(&self, field: &[ComplexPolynomial<T>]) -> Self {
        assert_eq!(field.len(), self.dim);
        let mut out = Self::zero(self.dim);
        for (j, f) in field.iter().enumerate() {
            if f.is_zero() {
                continue;
            }
            let d = self.derivative(j);
            if !d.is_zero() {
                out = out.add(&f.mul(&d));
            }
        }
        out
    }

    /// Derivation along the linear vector field X ↦ M X: Σ_j (M X)_j ∂_j P.
    pub fn derivation_along(&self, m: &SquareMatrix<T>) -> Self {
        assert_eq!(m.dim(), self.dim);
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            for j in 0..self.dim {
                if e[j] == 0 {
                    continue;
                }
                let factor = *c * T::from_usize_exact(e[j] as usize);
                for l in 0..self.dim {
                    let mjl = m[(j, l)];
                    if mjl == T::zero() {
                        continue;
                    }
                    let mut d = e.clone();
                    d[j] -= 1;
                    d[l] += 1;
                    out.add_term(d, factor * mjl);
                }
            }
        }
        out.canonicalize();
        out
    }

    pub fn eval(&self, x: &[T]) -> Cx<T> {
        assert_eq!(x.len(), self.dim);
        let mut acc = Cx::new(T::zero(), T::zero());
        for (e, c) in &self.terms {
            let mut m = T::one();
            for (xi, &p) in x.iter().zip(e) {
                if p > 0 {
                    m *= xi.powi(p as i32);
                }
            }
            acc += *c * m;
        }
        acc
    }

    /// Evaluation at a complex point.
    pub fn eval_complex(&self, x: &[Cx<T>]) -> Cx<T> {
        assert_eq!(x.len(), self.dim);
        let mut acc = Cx::new(T::zero(), T::zero());
        for (e, c) in &self.terms {
            let mut m = re(T::one());
            for (xi, &p) in x.iter().zip(e) {
                if p > 0 {
                    m *= xi.powi(p as i32);
                }
            }
            acc += *c * m;
        }
        acc
    }

    /// Largest coefficient modulus of self − other.
    pub fn distance(&self, other: &Self) -> T {
        let mut worst = T::zero();
        for (e, c) in &self.terms {
            worst = worst.max((*c - other.coefficient(e)).norm());
        }
        for (e, c) in &other.terms {
            if !self.terms.contains_key(e) {
                worst = worst.max(c.norm());
            }
        }
        worst
    }

    fn check_dim(&self, other: &Self) {
        assert_eq!(self.dim, other.dim, "polynomial dimension mismatch");
    }
}

pub(crate) fn total_degree(e: &[u32]) -> usize {
    e.iter().map(|&p| p as usize).sum()
}

impl<T: Real> fmt::Debug for ComplexPolynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({}{:+}i)", c.re, c.im)?;
            for (j, &p) in e.iter().enumerate() {
                match p {
                    0 => {}
                    1 => write!(f, "·x{}", j + 1)?,
                    _ => write!(f, "·x{}^{}", j + 1, p)?,
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermRecord {
    exps: Vec<u32>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolynomialRecord {
    terms: Vec<TermRecord>,
}

impl<T: Real> Serialize for ComplexPolynomial<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolynomialRecord {
            terms: self
                .terms
                .iter()
                .map(|(e, c)| TermRecord { exps: e.clone(), re: c.re.as_f64(), im: c.im.as_f64() })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de, T: Real> Deserialize<'de> for ComplexPolynomial<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = PolynomialRecord::deserialize(d)?;
        let dim = rec.terms.first().map(|t| t.exps.len()).unwrap_or(0);
        if rec.terms.iter().any(|t| t.exps.len() != dim) {
            return Err(serde::de::Error::custom("inconsistent exponent lengths"));
        }
        Ok(Self::from_terms(dim, rec.terms.into_iter().map(|t| (t.exps, cx(T::lit(t.re), T::lit(t.im))))))
    }
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
}

/// Θ_Q(X, V_u) = ⟨Q + i J_{V_u}(Q), X⟩.
pub fn theta<T: Real>(q: &[T], v_unit: &[T], space: &EndomorphismSpace<T>) -> Result<ComplexPolynomial<T>> {
    let k = space.x_dim();
    if q.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: q.len() });
    }
    let tol = T::lit(1e-10);
    let nq = norm(q);
    if (nq - T::one()).abs() > tol {
        return Err(Error::NotUnit { what: "Q", norm: nq.as_f64() });
    }
    let nv = norm(v_unit);
    if (nv - T::one()).abs() > tol {
        return Err(Error::NotUnit { what: "V_u", norm: nv.as_f64() });
    }
    let jq = space.j_of(v_unit)?.apply(q);
    let coeffs: Vec<Cx<T>> = q.iter().zip(&jq).map(|(&a, &b)| cx(a, b)).collect();
    Ok(ComplexPolynomial::linear(&coeffs))
}

/// Θ_Q^p · conj(Θ_Q)^q.
pub fn theta_power<T: Real>(
    q: &[T],
    v_unit: &[T],
    space: &EndomorphismSpace<T>,
    p: usize,
    qq: usize,
) -> Result<ComplexPolynomial<T>> {
    let th = theta(q, v_unit, space)?;
    Ok(th.pow(p).mul(&th.conj().pow(qq)))
}

/// D_V• P: derivative along the X-field J_V(X); V need not be a unit vector.
pub fn dv_apply<T: Real>(
    v: &[T],
    p: &ComplexPolynomial<T>,
    space: &EndomorphismSpace<T>,
) -> Result<ComplexPolynomial<T>> {
    if p.dim() != space.x_dim() {
        return Err(Error::DimensionMismatch { expected: space.x_dim(), got: p.dim() });
    }
    Ok(p.derivation_along(&space.j_of(v)?))
}

/// Δ_X P.
pub fn laplacian_x<T: Real>(p: &ComplexPolynomial<T>) -> ComplexPolynomial<T> {
    p.laplacian()
}

/// Coefficients B_j of the series Π_X = Σ_j B_j |X|^{2j} Δ_X^j on
/// homogeneous polynomials of degree n in k variables, obtained by
/// requiring Δ-annihilation order by order:
/// B_{j+1} = −B_j / (2(j+1)(k + 2n − 2j − 4)).
pub fn projection_coefficients<T: Real>(n: usize, k: usize) -> Vec<T> {
    let mut out = vec![T::one()];
    let mut j = 0usize;
    while 2 * (j + 1) <= n {
        let denom = 2 * (j + 1) * (k + 2 * n - 2 * j - 4);
        let next = -out[j] / T::from_usize_exact(denom);
        out.push(next);
        j += 1;
    }
    out
}

/// Harmonic component of a homogeneous polynomial (Fischer decomposition).
pub fn harmonic_project<T: Real>(p: &ComplexPolynomial<T>) -> Result<ComplexPolynomial<T>> {
    if p.is_zero() {
        return Ok(p.clone());
    }
    if !p.is_homogeneous() {
        return Err(Error::NotHomogeneous);
    }
    let n = p.degree().unwrap_or(0);
    let k = p.dim();
    let r2 = ComplexPolynomial::squared_norm(k);
    let coeffs = projection_coefficients::<T>(n, k);
    let mut result = p.clone();
    let mut lap_power = p.clone();
    let mut r_power = ComplexPolynomial::one(k);
    for b in coeffs.iter().skip(1) {
        lap_power = lap_power.laplacian();
        if lap_power.is_zero() {
            break;
        }
        r_power = r_power.mul(&r2);
        result = result.add(&r_power.mul(&lap_power).scale_real(*b));
    }
    Ok(result)
}

/// Magnetic moment −i·D_J• for a single complex structure: eigenvalue
/// p − υ on polynomials of holomorphic bidegree (p, υ).
pub fn magnetic_moment<T: Real>(p: &ComplexPolynomial<T>, j: &SquareMatrix<T>) -> ComplexPolynomial<T> {
    p.derivation_along(j).scale(-imag_unit::<T>())
}

/// Harmonic component by brute force: solves Δ(P − |X|²R) = 0 for R on the
/// degree n−2 monomials with a dense LU solve. Independent of the series
/// behind [`harmonic_project`].
pub fn harmonic_project_by_solve(p: &ComplexPolynomial<f64>) -> Result<ComplexPolynomial<f64>> {
    use nalgebra::{DMatrix, DVector};
    use num_complex::Complex64;
    type P = ComplexPolynomial<f64>;
    if p.is_zero() {
        return Ok(p.clone());
    }
    if !p.is_homogeneous() {
        return Err(Error::NotHomogeneous);
    }
    let k = p.dim();
    let n = p.degree().unwrap_or(0);
    if n < 2 {
        return Ok(p.clone());
    }
    let monos = monomials_of_degree(k, n - 2);
    let index: std::collections::HashMap<Vec<u32>, usize> =
        monos.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
    let m = monos.len();
    let r2 = P::squared_norm(k);
    let mut a = DMatrix::<Complex64>::zeros(m, m);
    for (j, e) in monos.iter().enumerate() {
        let col = r2.mul(&P::monomial(k, e.clone(), Complex64::new(1.0, 0.0))).laplacian();
        for (ee, cc) in col.terms() {
            a[(index[ee], j)] = *cc;
        }
    }
    let mut b = DVector::<Complex64>::zeros(m);
    for (ee, cc) in p.laplacian().terms() {
        b[index[ee]] = *cc;
    }
    let sol = a.lu().solve(&b).ok_or(Error::RankDeficient(0.0))?;
    let mut rpoly = P::zero(k);
    for (i, e) in monos.iter().enumerate() {
        rpoly = rpoly.add(&P::monomial(k, e.clone(), sol[i]));
    }
    Ok(p.sub(&r2.mul(&rpoly)))
}

/// Exponent vectors of all monomials of total degree n in k variables.
pub fn monomials_of_degree(k: usize, n: usize) -> Vec<Vec<u32>> {
    if k == 1 {
        return vec![vec![n as u32]];
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in monomials_of_degree(k - 1, n - first) {
            rest.insert(0, first as u32);
            out.push(rest);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hgroup::build_htype;
    use num_complex::Complex64;
    use proptest::prelude::*;

    type P = ComplexPolynomial<f64>;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn theta_on_heisenberg_plane() {
        let s = build_htype::<f64>(1, 1, 0).unwrap();
        let th = theta(&[1.0, 0.0], &[1.0], &s).unwrap();
        let expected = P::linear(&[c(1.0, 0.0), c(0.0, 1.0)]);
        assert_eq!(th.distance(&expected), 0.0);
    }

    #[test]
    fn theta_at_q_is_one() {
        let s = build_htype::<f64>(3, 1, 1).unwrap();
        let q: Vec<f64> = [0.3, -0.1, 0.4, 0.2, 0.5, 0.1, -0.6, 0.25].to_vec();
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        let q: Vec<f64> = q.iter().map(|x| x / n).collect();
        let v = [0.6, 0.0, 0.8];
        let th = theta(&q, &v, &s).unwrap();
        assert!((th.eval(&q) - c(1.0, 0.0)).norm() < 1e-14);
        assert!(matches!(theta(&q, &[1.0, 1.0, 0.0], &s), Err(Error::NotUnit { .. })));
        assert!(matches!(theta(&[2.0; 8], &v, &s), Err(Error::NotUnit { .. })));
    }

    #[test]
    fn theta_quaternionic_coefficients() {
        // Oracle: J_3 e1 read from the left-multiplication-by-k matrix is e4.
        let s = build_htype::<f64>(3, 1, 0).unwrap();
        let th = theta(&[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &s).unwrap();
        let jq = s.basis()[2].apply(&[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(jq, vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(th.coefficient(&[1, 0, 0, 0]), c(1.0, 0.0));
        assert_eq!(th.coefficient(&[0, 0, 0, 1]), c(0.0, 1.0));
        assert_eq!(th.len(), 2);
    }

    #[test]
    fn dv_on_theta_powers() {
        let s = build_htype::<f64>(3, 2, 0).unwrap();
        let q = [0.5, 0.5, 0.0, 0.0, 0.5, 0.0, 0.5, 0.0];
        let v = [0.0, 1.2, 1.6];
        let vn = 2.0;
        let vu: Vec<f64> = v.iter().map(|x| x / vn).collect();
        let th = theta(&q, &vu, &s).unwrap();
        // D_V Θ = +i|V| Θ with D_V the derivation along J_V X.
        let d = dv_apply(&v, &th, &s).unwrap();
        assert!(d.distance(&th.scale(c(0.0, vn))) < 1e-14);
        for (p, qq) in [(0, 0), (1, 0), (2, 1), (0, 3), (2, 2)] {
            let f = theta_power(&q, &vu, &s, p, qq).unwrap();
            let lhs = dv_apply(&v, &f, &s).unwrap();
            let rhs = f.scale(c(0.0, (p as f64 - qq as f64) * vn));
            assert!(lhs.distance(&rhs) < 1e-12 * (1.0 + f.max_coefficient()), "p={p} q={qq}");
        }
    }

    #[test]
    fn dv_term_by_term_oracle() {
        // k = 2, V = 2: D = 2(x1 ∂_2 − x2 ∂_1), so D(x1²) = −4 x1 x2.
        let s = build_htype::<f64>(1, 1, 0).unwrap();
        let p = P::monomial(2, vec![2, 0], c(1.0, 0.0));
        let d = dv_apply(&[2.0], &p, &s).unwrap();
        assert_eq!(d.distance(&P::monomial(2, vec![1, 1], c(-4.0, 0.0))), 0.0);
        assert!(dv_apply(&[2.0], &P::one(2), &s).unwrap().is_zero());
    }

    #[test]
    fn laplacian_examples() {
        assert_eq!(P::monomial(2, vec![2, 0], c(1.0, 0.0)).laplacian().distance(&P::constant(2, c(2.0, 0.0))), 0.0);
        assert_eq!(P::squared_norm(4).laplacian().distance(&P::constant(4, c(8.0, 0.0))), 0.0);
        let s = build_htype::<f64>(3, 1, 1).unwrap();
        let q = [0.0, 0.6, 0.0, 0.0, 0.0, 0.0, 0.8, 0.0];
        let th = theta(&q, &[1.0, 0.0, 0.0], &s).unwrap();
        // Θ is isotropic, so Θ² is harmonic.
        let lap = th.pow(2).laplacian();
        assert!(lap.max_coefficient() < 1e-14);
    }

    #[test]
    fn harmonic_projection_examples() {
        let r2 = P::squared_norm(2);
        assert!(harmonic_project(&r2).unwrap().is_zero());
        for k in 2..6 {
            let mut e = vec![0; k];
            e[0] = 2;
            let x1sq = P::monomial(k, e, c(1.0, 0.0));
            let expected = x1sq.sub(&P::squared_norm(k).scale_real(1.0 / k as f64));
            assert!(harmonic_project(&x1sq).unwrap().distance(&expected) < 1e-15);
        }
        let s = build_htype::<f64>(1, 2, 0).unwrap();
        let th = theta(&[1.0, 0.0, 0.0, 0.0], &[1.0], &s).unwrap();
        let h = th.pow(3);
        assert!(harmonic_project(&h).unwrap().distance(&h) < 1e-14);
        let nonhom = P::one(2).add(&P::variable(2, 0));
        assert_eq!(harmonic_project(&nonhom).unwrap_err(), Error::NotHomogeneous);
    }

    fn homogeneous_strategy() -> impl Strategy<Value = P> {
        (2usize..5, 0usize..6).prop_flat_map(|(k, n)| {
            let monos = monomials_of_degree(k, n);
            let len = monos.len();
            prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), len)
                .prop_map(move |cs| P::from_terms(k, monos.iter().cloned().zip(cs.into_iter().map(|(a, b)| c(a, b)))))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn projection_matches_linear_algebra_oracle(p in homogeneous_strategy()) {
            prop_assume!(!p.is_zero());
            let h = harmonic_project(&p).unwrap();
            let scale = p.max_coefficient();
            prop_assert!(h.laplacian().max_coefficient() <= 1e-12 * scale * 10.0);
            prop_assert!(h.distance(&harmonic_project_by_solve(&p).unwrap()) <= 1e-10 * scale);
            // Idempotence.
            prop_assert!(harmonic_project(&h).unwrap().distance(&h) <= 1e-12 * scale);
        }

        #[test]
        fn projection_commutes_with_dv(p in homogeneous_strategy(), v in -2.0f64..2.0) {
            let k = p.dim();
            prop_assume!(k % 2 == 0 && !p.is_zero());
            let s = build_htype::<f64>(1, k / 2, 0).unwrap();
            let lhs = harmonic_project(&dv_apply(&[v], &p, &s).unwrap()).unwrap();
            let rhs = dv_apply(&[v], &harmonic_project(&p).unwrap(), &s).unwrap();
            prop_assert!(lhs.distance(&rhs) <= 1e-10 * (1.0 + p.max_coefficient()));
        }
    }

    #[test]
    fn projection_coefficient_series() {
        // B_1 = −1/(2k) for quadratics.
        let b = projection_coefficients::<f64>(2, 5);
        assert_eq!(b.len(), 2);
        assert!((b[1] + 0.1).abs() < 1e-16);
    }

    #[test]
    fn json_round_trip() {
        let p = P::linear(&[c(1.0, -0.5), c(0.0, 2.0)]).pow(2);
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.starts_with("{\"terms\":[{\"exps\":"));
        let back: P = serde_json::from_str(&s).unwrap();
        assert_eq!(back.distance(&p), 0.0);
    }
}
