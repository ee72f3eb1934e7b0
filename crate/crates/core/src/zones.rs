//! Zeeman zones: the extended Fock representation, Gram–Schmidt zone bases
//! and the closed-form projection kernels δ^(a).
//!
//! Zone elements are stored as flat L² functions P·e^{−λ|X|²/2}. The map
//! P ↦ P·e^{−λ|X|²/2} is unitary from L²(e^{−λ|X|²}dX) onto L²(dX), so the
//! polynomial part is the representative in the weighted picture where the
//! Fock operators act.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{gauss_hermite_product, gaussian_rule};
use crate::polyalg::ComplexPolynomial;
use crate::scalar::{cx, re, CompensatedSum, Cx, Real};
use crate::zeeman::{complex_coordinate, GaussianPoly};

use crate::special::factorial;
pub use crate::special::laguerre;

/// Generators of the extended Fock representation, zero-based coordinate index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FockOp {
    /// ρ_c(z_i) = −∂_{z̄_i} + λ z_i
    Z(usize),
    /// ρ_c(z̄_i) = ∂_{z_i}
    ZBar(usize),
}

/// ∂_{z_i} (or ∂_{z̄_i} when `conj`) = ½(∂_x ∓ i∂_y) on the i-th pair.
pub fn wirtinger<T: Real>(p: &ComplexPolynomial<T>, i: usize, conj: bool) -> ComplexPolynomial<T> {
    let dx = p.derivative(2 * i);
    let dy = p.derivative(2 * i + 1);
    let s = if conj { T::one() } else { -T::one() };
    dx.add(&dy.scale(cx(T::zero(), s))).scale_real(T::lit(0.5))
}

/// Applies ρ_c to the weighted representative of ψ.
pub fn fock_apply<T: Real>(op: FockOp, psi: &GaussianPoly<T>, lambda: T) -> Result<GaussianPoly<T>> {
    let k = psi.k();
    let i = match op {
        FockOp::Z(i) | FockOp::ZBar(i) => i,
    };
    if 2 * i + 1 >= k {
        return Err(Error::InvalidInput(format!("complex coordinate index {i} exceeds k/2 = {}", k / 2)));
    }
    if (psi.lambda() - lambda).abs() > T::lit(1e-12) * lambda {
        return Err(Error::InvalidInput(format!("envelope rate {} does not match λ = {lambda}", psi.lambda())));
    }
    let p = psi.poly();
    let out = match op {
        FockOp::Z(i) => {
            wirtinger(p, i, true).scale_real(-T::one()).add(&p.mul(&complex_coordinate(k, i, false)).scale_real(lambda))
        }
        FockOp::ZBar(i) => wirtinger(p, i, false),
    };
    GaussianPoly::new(out, lambda)
}

/// Polynomial in the complex coordinates, Σ c_{αβ} z^α z̄^β. Inner products
/// in L²(e^{−λ|X|²}dX) are exact: ⟨z^a z̄^b, z^c z̄^d⟩ vanishes unless
/// a − b = c − d and equals π (a+d)!/λ^{a+d+1} otherwise, per coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderPoly<T: Real> {
    n: usize,
    terms: BTreeMap<(Vec<u32>, Vec<u32>), Cx<T>>,
}

impl<T: Real> LadderPoly<T> {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn monomial(alpha: &[usize], beta: &[usize]) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(
            (alpha.iter().map(|&v| v as u32).collect(), beta.iter().map(|&v| v as u32).collect()),
            re(T::one()),
        );
        Self { n: alpha.len(), terms }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(Vec<u32>, Vec<u32>), &Cx<T>)> {
        self.terms.iter()
    }

    pub fn scale(&self, s: Cx<T>) -> Self {
        Self { n: self.n, terms: self.terms.iter().map(|(e, c)| (e.clone(), *c * s)).collect() }
    }

    /// self − s·other.
    pub fn sub_scaled(&self, other: &Self, s: Cx<T>) -> Self {
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            let slot = terms.entry(e.clone()).or_insert(re(T::zero()));
            *slot -= *c * s;
        }
        Self { n: self.n, terms }
    }

    /// ⟨P, Q⟩ in L²(e^{−λ|X|²}dX), using a factorial table of sufficient length.
    pub fn inner(&self, other: &Self, lambda: T, fact: &[T]) -> Cx<T> {
        let mut acc = CompensatedSum::new();
        'pairs: for ((a1, b1), c1) in &self.terms {
            for ((a2, b2), c2) in &other.terms {
                let mut w = T::one();
                for j in 0..self.n {
                    if a1[j] + b2[j] != b1[j] + a2[j] {
                        continue 'pairs;
                    }
                }
                for j in 0..self.n {
                    let m = (a1[j] + b2[j]) as usize;
                    w *= T::PI() * fact[m] / lambda.powi(m as i32 + 1);
                }
                acc.add(*c1 * c2.conj() * w);
            }
        }
        acc.value()
    }

    /// Value at X ∈ R^{2n} (polynomial part only).
    pub fn eval(&self, x: &[T]) -> Cx<T> {
        let zs: Vec<Cx<T>> = (0..self.n).map(|j| cx(x[2 * j], x[2 * j + 1])).collect();
        let mut acc = CompensatedSum::new();
        for ((a, b), c) in &self.terms {
            let mut v = *c;
            for j in 0..self.n {
                v = v * zs[j].powu(a[j]) * zs[j].conj().powu(b[j]);
            }
            acc.add(v);
        }
        acc.value()
    }

    /// Expansion in the real coordinates of R^{2n}.
    pub fn to_real(&self) -> ComplexPolynomial<T> {
        let k = 2 * self.n;
        let mut out = ComplexPolynomial::zero(k);
        for ((a, b), c) in &self.terms {
            let ua: Vec<usize> = a.iter().map(|&v| v as usize).collect();
            let ub: Vec<usize> = b.iter().map(|&v| v as usize).collect();
            out = out.add(&ladder_monomial::<T>(k, &ua, &ub).scale(*c));
        }
        out
    }
}

fn factorial_table<T: Real>(n: usize) -> Vec<T> {
    (0..=n).map(factorial::<T>).collect()
}

/// One orthonormal zone element with its ladder labels.
#[derive(Clone, Debug)]
pub struct ZoneElement<T: Real> {
    /// Holomorphic multi-index α.
    pub alpha: Vec<usize>,
    /// Antiholomorphic multi-index β, |β| = a.
    pub beta: Vec<usize>,
    /// The element in complex coordinates.
    pub ladder: LadderPoly<T>,
    pub function: GaussianPoly<T>,
}

impl<T: Real> ZoneElement<T> {
    pub fn holomorphic_degree(&self) -> usize {
        self.alpha.iter().sum()
    }

    /// Accurate evaluation through the complex-coordinate form.
    pub fn eval(&self, x: &[T]) -> Cx<T> {
        let r2 = x.iter().fold(T::zero(), |acc, &v| acc + v * v);
        self.ladder.eval(x) * (-self.function.lambda() * r2 / T::lit(2.0)).exp()
    }
}

/// Orthonormal basis of gross zone a truncated at total degree `degree_max`.
#[derive(Clone, Debug)]
pub struct ZoneBasis<T: Real> {
    pub a: usize,
    pub lambda: T,
    pub k: usize,
    pub degree_max: usize,
    pub elements: Vec<ZoneElement<T>>,
}

/// Largest truncation degree accepted by [`build_zone_basis`].
pub const MAX_ZONE_DEGREE: usize = 80;

/// Multi-indices of length n and total `total`, in lexicographic order
/// (first coordinate largest first).
pub fn compositions(n: usize, total: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in compositions(n - 1, total - first) {
            let mut v = vec![first];
            v.append(&mut rest);
            out.push(v);
        }
    }
    out
}

fn ladder_monomial<T: Real>(k: usize, alpha: &[usize], beta: &[usize]) -> ComplexPolynomial<T> {
    let mut out = ComplexPolynomial::one(k);
    for (i, (&a, &b)) in alpha.iter().zip(beta).enumerate() {
        out = out.mul(&complex_coordinate::<T>(k, i, false).pow(a)).mul(&complex_coordinate::<T>(k, i, true).pow(b));
    }
    out
}

/// Gram–Schmidt of {z̄^β z^α : |β| = a} against zones 0..a−1, in graded
/// lexicographic order, inside L²(e^{−λ|X|²}dX).
pub fn build_zone_basis<T: Real>(a: usize, k: usize, lambda: T, degree_max: usize) -> Result<ZoneBasis<T>> {
    if k == 0 || k % 2 == 1 {
        return Err(Error::InvalidInput(format!("k must be even and positive, got {k}")));
    }
    if degree_max < a {
        return Err(Error::InvalidInput(format!("degree_max {degree_max} must be at least the zone index {a}")));
    }
    if degree_max > MAX_ZONE_DEGREE {
        return Err(Error::BudgetExceeded(format!("zone degree {degree_max} (max {MAX_ZONE_DEGREE})")));
    }
    if !(lambda > T::zero()) {
        return Err(Error::InvalidInput(format!("λ must be positive, got {lambda}")));
    }
    let n = k / 2;
    let fact = factorial_table::<T>(2 * degree_max + 1);
    // Elements with different α − β per coordinate are exactly orthogonal.
    let mut done: BTreeMap<Vec<i64>, Vec<LadderPoly<T>>> = BTreeMap::new();
    let mut elements = Vec::new();
    for zone in 0..=a {
        for p in 0..=(degree_max - zone) {
            for alpha in compositions(n, p) {
                for beta in compositions(n, zone) {
                    let raw = LadderPoly::<T>::monomial(&alpha, &beta);
                    let raw_norm = raw.inner(&raw, lambda, &fact).re.sqrt();
                    let mut v = raw.scale(re(T::one() / raw_norm));
                    // Two passes of modified Gram–Schmidt.
                    let key: Vec<i64> = alpha.iter().zip(&beta).map(|(&x, &y)| x as i64 - y as i64).collect();
                    let same = done.entry(key).or_default();
                    for _ in 0..2 {
                        for u in same.iter() {
                            let c = v.inner(u, lambda, &fact);
                            if c.norm() > T::zero() {
                                v = v.sub_scaled(u, c);
                            }
                        }
                    }
                    let pivot = v.inner(&v, lambda, &fact).re.sqrt();
                    if pivot < T::lit(1e-12) {
                        return Err(Error::RankDeficient(pivot.as_f64()));
                    }
                    let v = v.scale(re(T::one() / pivot));
                    if zone == a {
                        elements.push(ZoneElement {
                            alpha: alpha.clone(),
                            beta: beta.clone(),
                            function: GaussianPoly::new(v.to_real(), lambda)?,
                            ladder: v.clone(),
                        });
                    }
                    same.push(v);
                }
            }
        }
    }
    Ok(ZoneBasis { a, lambda, k, degree_max, elements })
}

impl<T: Real> ZoneBasis<T> {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Number of elements of holomorphic degree p (total degree p + a).
    pub fn count_at_level(&self, p: usize) -> usize {
        self.elements.iter().filter(|e| e.holomorphic_degree() == p).count()
    }

    /// max |⟨φ_i, φ_j⟩ − δ_ij| with exact complex-coordinate moments.
    pub fn gram_residual(&self) -> T {
        let fact = factorial_table::<T>(2 * self.degree_max + 1);
        let mut worst = T::zero();
        for (i, ei) in self.elements.iter().enumerate() {
            for (j, ej) in self.elements.iter().enumerate().skip(i) {
                let g = ei.ladder.inner(&ej.ladder, self.lambda, &fact);
                let target = if i == j { re(T::one()) } else { re(T::zero()) };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }

    /// max |⟨φ_i, φ_j⟩ − δ_ij| under a tensor Gauss–Hermite rule applied to
    /// the real-coordinate representatives (exact while 2·degree_max ≤ 60).
    pub fn gram_residual_quadrature(&self) -> Result<T> {
        self.gram_residual_with_rule(2 * self.degree_max)
    }

    /// Same check with a rule exact through total degree `rule_degree`.
    pub fn gram_residual_with_rule(&self, rule_degree: usize) -> Result<T> {
        let rule = gaussian_rule(self.k, self.lambda, rule_degree)?;
        let values: Vec<Vec<Cx<T>>> =
            self.elements.iter().map(|e| rule.nodes().map(|(x, _)| e.ladder.eval(x)).collect()).collect();
        let weights: Vec<T> = rule.nodes().map(|(_, w)| w).collect();
        let mut worst = T::zero();
        for i in 0..values.len() {
            for j in i..values.len() {
                let g = crate::scalar::compensated_sum(
                    values[i].iter().zip(&values[j]).zip(&weights).map(|((a, b), w)| *a * b.conj() * *w),
                );
                let target = if i == j { re(T::one()) } else { re(T::zero()) };
                worst = worst.max((g - target).norm());
            }
        }
        Ok(worst)
    }

    /// Σ_i φ_i(z) conj(φ_i(w)).
    pub fn kernel_sum(&self, z: &[T], w: &[T]) -> Cx<T> {
        self.elements.iter().fold(re(T::zero()), |acc, e| acc + e.eval(z) * e.eval(w).conj())
    }

    /// Coefficients ⟨f, φ_i⟩.
    pub fn coefficients(&self, f: &GaussianPoly<T>) -> Result<Vec<Cx<T>>> {
        self.elements.iter().map(|e| f.inner(&e.function)).collect()
    }

    /// ‖f − P f‖/‖f‖ with P the orthogonal projection onto the span.
    pub fn projection_residual(&self, f: &GaussianPoly<T>) -> Result<T> {
        let mut rest = f.clone();
        for e in &self.elements {
            let c = f.inner(&e.function)?;
            rest = rest.sub(&e.function.scale(c))?;
        }
        Ok(rest.norm() / f.norm())
    }
}

/// z·w̄ = Σ_j z_j conj(w_j) = ⟨X, Y⟩ + i⟨X, JY⟩ for the standard J.
pub fn hermitian_pairing<T: Real>(x: &[T], y: &[T]) -> Cx<T> {
    let mut s = re(T::zero());
    for j in 0..x.len() / 2 {
        let z = cx(x[2 * j], x[2 * j + 1]);
        let w = cx(y[2 * j], y[2 * j + 1]);
        s += z * w.conj();
    }
    s
}

fn sq_dist<T: Real>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |acc, (a, b)| acc + (*a - *b) * (*a - *b))
}

fn sq_norm<T: Real>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |acc, a| acc + *a * *a)
}

/// δ^(a)(z, w) = (λ/π)^{k/2} L_a^{(k/2−1)}(λ|z−w|²) e^{λ(z·w̄ − (|z|²+|w|²)/2)}.
pub fn delta_kernel<T: Real>(a: usize, k: usize, lambda: T, z: &[T], w: &[T]) -> Cx<T> {
    assert!(z.len() == k && w.len() == k, "points must lie in R^k");
    let alpha = T::from_usize_exact(k) / T::lit(2.0) - T::one();
    let pre = (lambda / T::PI()).powf(T::from_usize_exact(k) / T::lit(2.0));
    let lag = laguerre(a, alpha, lambda * sq_dist(z, w));
    let expo = (hermitian_pairing(z, w) - re((sq_norm(z) + sq_norm(w)) / T::lit(2.0))) * lambda;
    expo.exp() * (pre * lag)
}

/// Spread density |δ^(a)(Z, w)|².
pub fn spread_density<T: Real>(a: usize, k: usize, lambda: T, center: &[T], w: &[T]) -> T {
    delta_kernel(a, k, lambda, center, w).norm_sqr()
}

/// ∫ f(u) dU for integrands shaped like δ(z, u)·δ(u, w): a Gauss–Hermite
/// rule of rate λ centered at (z + w)/2.
fn integrate_pair<T: Real, F: Fn(&[T]) -> Cx<T>>(
    k: usize,
    lambda: T,
    z: &[T],
    w: &[T],
    per_dim: usize,
    f: F,
) -> Result<Cx<T>> {
    let center: Vec<T> = z.iter().zip(w).map(|(a, b)| (*a + *b) / T::lit(2.0)).collect();
    let rule = gauss_hermite_product(k, lambda, per_dim, &center)?;
    Ok(rule.integrate_flat(f))
}

/// ∫ δ^(a)(z, u) δ^(b)(u, w) du by quadrature.
pub fn kernel_composition<T: Real>(
    a: usize,
    b: usize,
    k: usize,
    lambda: T,
    z: &[T],
    w: &[T],
    per_dim: usize,
) -> Result<Cx<T>> {
    integrate_pair(k, lambda, z, w, per_dim, |u| delta_kernel(a, k, lambda, z, u) * delta_kernel(b, k, lambda, u, w))
}

/// ∫ δ^(a)(z, w) f(w) dw for a zone function f.
pub fn reproduce<T: Real>(a: usize, lambda: T, f: &GaussianPoly<T>, z: &[T], per_dim: usize) -> Result<Cx<T>> {
    let k = f.k();
    let center: Vec<T> = z.iter().map(|&v| v / T::lit(2.0)).collect();
    let rule = gauss_hermite_product(k, lambda, per_dim, &center)?;
    Ok(rule.integrate_flat(|w| delta_kernel(a, k, lambda, z, w) * f.eval(w)))
}

/// ∫ |δ^(a)(Z, w)|² dw by quadrature; equals δ^(a)(Z, Z) by idempotence.
pub fn spread_mass<T: Real>(a: usize, k: usize, lambda: T, center: &[T], per_dim: usize) -> Result<T> {
    let rule = gauss_hermite_product(k, lambda, per_dim, center)?;
    Ok(rule.integrate_flat(|w| re(spread_density(a, k, lambda, center, w))).re)
}

/// Worst relative residual of ρ_c(z_i)/ρ_c(z̄_i) images of zone elements
/// leaving the zone: the image is projected onto a wider basis of the same zone.
pub fn zone_invariance_residual<T: Real>(basis: &ZoneBasis<T>, wide: &ZoneBasis<T>) -> Result<T> {
    if wide.a != basis.a || wide.degree_max < basis.degree_max + 1 {
        return Err(Error::InvalidInput("wide basis must be the same zone with one more degree".into()));
    }
    let mut worst = T::zero();
    for e in &basis.elements {
        for i in 0..basis.k / 2 {
            for op in [FockOp::Z(i), FockOp::ZBar(i)] {
                let img = fock_apply(op, &e.function, basis.lambda)?;
                // Exact cancellations (∂_z z̄^β = 0) leave round-off residue.
                if img.norm() <= T::lit(1e-12) * (T::one() + basis.lambda) * e.function.norm() {
                    continue;
                }
                worst = worst.max(wide.projection_residual(&img)?);
            }
        }
    }
    Ok(worst)
}

/// Lowest-weight vectors of a gross zone (experimental): the common kernel
/// of all ρ_c(z̄_i) on the zone elements of holomorphic degree ≤ 1, found by
/// SVD. Each vector generates one irreducible component, so the count is
/// the number of irreducible zones inside the gross zone.
#[derive(Clone, Debug)]
pub struct IrreducibleSplit<T: Real> {
    pub vacua: Vec<GaussianPoly<T>>,
}

pub fn irreducible_split_experimental<T: Real>(a: usize, k: usize, lambda: T) -> Result<IrreducibleSplit<T>> {
    let basis = build_zone_basis(a, k, lambda, a + 1)?;
    let n = k / 2;
    let cols = basis.len();
    // Rows: coefficients of ρ_c(z̄_i)φ_j against the same basis.
    let mut rows = Vec::new();
    for i in 0..n {
        let images: Vec<GaussianPoly<T>> =
            basis.elements.iter().map(|e| fock_apply(FockOp::ZBar(i), &e.function, lambda)).collect::<Result<_>>()?;
        for target in &basis.elements {
            let row: Vec<Complex64> = images
                .iter()
                .map(|img| {
                    let c = img.inner(&target.function).expect("same envelope");
                    Complex64::new(c.re.as_f64(), c.im.as_f64())
                })
                .collect();
            rows.push(row);
        }
    }
    let m = DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]);
    // Null space of m through the Hermitian Gram matrix m*m.
    let gram = m.adjoint() * &m;
    let eig = nalgebra::linalg::SymmetricEigen::new(gram);
    let mut vacua = Vec::new();
    for (idx, val) in eig.eigenvalues.iter().enumerate() {
        if val.abs() < 1e-10 {
            let v: DVector<Complex64> = eig.eigenvectors.column(idx).into_owned();
            let mut poly = ComplexPolynomial::zero(k);
            for (j, e) in basis.elements.iter().enumerate() {
                let c = cx(T::lit(v[j].re), T::lit(v[j].im));
                poly = poly.add(&e.function.poly().scale(c));
            }
            vacua.push(GaussianPoly::new(poly, lambda)?);
        }
    }
    Ok(IrreducibleSplit { vacua })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::binomial;
    use crate::zeeman::{landau_eigenfunction, zone_multiplicity};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    type P = ComplexPolynomial<f64>;

    #[test]
    fn fock_examples() {
        let one = GaussianPoly::ground(2, 1.3).unwrap();
        assert!(fock_apply(FockOp::ZBar(0), &one, 1.3).unwrap().poly().is_zero());
        let up = fock_apply(FockOp::Z(0), &one, 1.3).unwrap();
        assert!(up.poly().distance(&complex_coordinate::<f64>(2, 0, false).scale_real(1.3)) < 1e-15);
        assert!(fock_apply(FockOp::Z(1), &one, 1.3).is_err());
    }

    #[test]
    fn canonical_commutation_on_random_polynomials() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let lam = 0.8;
        for _ in 0..10 {
            let terms = (0..5).map(|_| {
                let e: Vec<u32> = (0..4).map(|_| rng.gen_range(0..3)).collect();
                (e, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            });
            let f = GaussianPoly::new(P::from_terms(4, terms), lam).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    let ab = fock_apply(FockOp::ZBar(i), &fock_apply(FockOp::Z(j), &f, lam).unwrap(), lam).unwrap();
                    let ba = fock_apply(FockOp::Z(j), &fock_apply(FockOp::ZBar(i), &f, lam).unwrap(), lam).unwrap();
                    let comm = ab.poly().sub(ba.poly());
                    let expect = if i == j { f.poly().scale_real(lam) } else { P::zero(4) };
                    assert!(comm.distance(&expect) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn holomorphic_zone_in_the_plane() {
        let lam = 1.5;
        let b = build_zone_basis::<f64>(0, 2, lam, 8).unwrap();
        assert_eq!(b.len(), 9);
        for (p, e) in b.elements.iter().enumerate() {
            // Normalized z^p e^{−λ|z|²/2}: ‖z^p‖² = π p!/λ^{p+1}.
            let fact: f64 = (1..=p).map(|i| i as f64).product();
            let norm = (PI * fact / lam.powi(p as i32 + 1)).sqrt();
            let expect = complex_coordinate::<f64>(2, 0, false).pow(p).scale_real(1.0 / norm);
            assert!(e.function.poly().distance(&expect) < 1e-12, "p={p}");
        }
        assert!(b.gram_residual() < 1e-12);
    }

    #[test]
    fn first_antiholomorphic_element_is_conj_z() {
        let b = build_zone_basis::<f64>(1, 2, 1.0, 4).unwrap();
        let first = &b.elements[0];
        // Oracle: projection of z̄ onto the holomorphic zone, by quadrature.
        let rule = crate::numerics::gaussian_rule::<f64>(2, 1.0, 12).unwrap();
        for p in 0..6 {
            let ov = rule.integrate(|x| Complex64::new(x[0], -x[1]) * Complex64::new(x[0], x[1]).powu(p as u32).conj());
            assert!(ov.norm() < 1e-14);
        }
        let expect = complex_coordinate::<f64>(2, 0, true).scale_real(1.0 / PI.sqrt());
        assert!(first.function.poly().distance(&expect) < 1e-13);
    }

    #[test]
    fn zone_elements_are_landau_functions() {
        let lam = 0.7;
        for a in 0..=3 {
            let b = build_zone_basis::<f64>(a, 2, lam, 10).unwrap();
            assert!(b.gram_residual() < 1e-10);
            for e in &b.elements {
                let h = landau_eigenfunction(&e.alpha, &e.beta, lam).unwrap();
                let c = e.function.inner(&h).unwrap().norm() / h.norm();
                assert!((c - 1.0).abs() < 1e-10, "a={a} α={:?}", e.alpha);
            }
        }
    }

    #[test]
    fn dimension_counts_match_multiplicities() {
        for k in [2usize, 4, 6] {
            for a in 0..=2 {
                let d = 4;
                let b = build_zone_basis::<f64>(a, k, 1.0, a + d).unwrap();
                for p in 0..=d {
                    assert_eq!(b.count_at_level(p) as u64, zone_multiplicity(a, p, k), "k={k} a={a} p={p}");
                }
                let total: u64 = (0..=d).map(|p| binomial((p + k / 2 - 1) as u64, p as u64)).sum::<u64>()
                    * binomial((a + k / 2 - 1) as u64, a as u64);
                assert_eq!(b.len() as u64, total);
                assert!(b.gram_residual() < 1e-10);
            }
        }
    }

    #[test]
    fn magnetic_number_of_zone_elements() {
        let b = build_zone_basis::<f64>(2, 4, 1.0, 5).unwrap();
        let j = crate::zeeman::standard_complex_structure::<f64>(4);
        for e in &b.elements {
            let m = e.holomorphic_degree() as f64 - 2.0;
            let mm = crate::polyalg::magnetic_moment(e.function.poly(), &j);
            assert!(mm.distance(&e.function.poly().scale_real(m)) < 1e-10);
        }
    }

    #[test]
    fn delta_kernel_examples() {
        for k in [2usize, 4] {
            let z = vec![0.3; k];
            let v = delta_kernel(0, k, 1.7, &z, &z);
            assert!((v.re - (1.7 / PI).powf(k as f64 / 2.0)).abs() < 1e-14 && v.im.abs() < 1e-14);
        }
        let z = [0.4, -0.2];
        assert!((delta_kernel(1, 2, 1.0, &z, &z).re - 1.0 / PI).abs() < 1e-15);
        assert_eq!(laguerre::<f64>(0, 0.0, 3.0), 1.0);
        assert!((laguerre::<f64>(2, 1.0, 0.0) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn spread_density_properties() {
        let c = [0.2, 0.1];
        assert!((spread_density(0, 2, 1.0, &c, &c) - 1.0 / (PI * PI)).abs() < 1e-15);
        assert!(spread_density(2, 2, 1.0, &c, &[9.0, -7.0]) < 1e-30);
        // ∫|δ(Z,w)|² dw = δ(Z,Z) by idempotence and Hermitian symmetry.
        for a in 0..3 {
            let mass = spread_mass(a, 2, 1.0, &c, 30).unwrap();
            assert!((mass - delta_kernel(a, 2, 1.0, &c, &c).re).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn delta_kernel_is_hermitian_positive(
            a in 0usize..4,
            x in proptest::collection::vec(-2.0f64..2.0, 2),
            y in proptest::collection::vec(-2.0f64..2.0, 2),
        ) {
            let d = delta_kernel(a, 2, 1.0, &x, &y);
            let e = delta_kernel(a, 2, 1.0, &y, &x);
            prop_assert!((d - e.conj()).norm() < 1e-14);
            let bound = (delta_kernel(a, 2, 1.0, &x, &x).re * delta_kernel(a, 2, 1.0, &y, &y).re).sqrt();
            prop_assert!(d.norm() <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn kernel_matches_basis_sum() {
        let pts = [[0.0, 0.0], [1.0, -0.5], [-1.2, 1.1]];
        for a in 0..=3 {
            let b = build_zone_basis::<f64>(a, 2, 1.0, a + 30).unwrap();
            for z in &pts {
                for w in &pts {
                    let d = delta_kernel(a, 2, 1.0, z, w);
                    assert!((d - b.kernel_sum(z, w)).norm() < 1e-9, "a={a}");
                }
            }
        }
    }

    #[test]
    fn idempotence_orthogonality_reproduction() {
        let z = [0.5, -0.3];
        let w = [-0.2, 0.6];
        for a in 0..=2 {
            let comp = kernel_composition(a, a, 2, 1.0, &z, &w, 40).unwrap();
            let d = delta_kernel(a, 2, 1.0, &z, &w);
            assert!((comp - d).norm() < 1e-10 * d.norm());
            for b in 0..=2 {
                if b != a {
                    assert!(kernel_composition(a, b, 2, 1.0, &z, &w, 40).unwrap().norm() < 1e-10);
                }
            }
            let basis = build_zone_basis::<f64>(a, 2, 1.0, a + 3).unwrap();
            for e in &basis.elements {
                let r = reproduce(a, 1.0, &e.function, &z, 40).unwrap();
                assert!((r - e.function.eval(&z)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn planar_zones_are_invariant() {
        for a in 0..=2 {
            let b = build_zone_basis::<f64>(a, 2, 1.0, a + 5).unwrap();
            let wide = build_zone_basis::<f64>(a, 2, 1.0, a + 6).unwrap();
            assert!(zone_invariance_residual(&b, &wide).unwrap() < 1e-10);
        }
    }

    #[test]
    fn vacua_count_components() {
        for (a, k) in [(0usize, 2usize), (1, 2), (1, 4), (2, 4), (1, 6)] {
            let split = irreducible_split_experimental::<f64>(a, k, 1.0).unwrap();
            assert_eq!(split.vacua.len() as u64, binomial((a + k / 2 - 1) as u64, a as u64), "a={a} k={k}");
        }
    }

    #[test]
    fn gram_by_quadrature_agrees() {
        for (a, k, d) in [(0usize, 2usize, 10usize), (2, 2, 12), (1, 4, 5)] {
            let b = build_zone_basis::<f64>(a, k, 0.9, d).unwrap();
            assert!(b.gram_residual_quadrature().unwrap() < 1e-10, "a={a} k={k}");
            // Real-coordinate form agrees with the ladder form.
            let x = vec![0.3; k];
            for e in &b.elements {
                assert!((e.function.eval(&x) - e.eval(&x)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_and_input_errors() {
        assert!(build_zone_basis::<f64>(3, 2, 1.0, 2).is_err());
        assert!(build_zone_basis::<f64>(0, 3, 1.0, 2).is_err());
    }
}
