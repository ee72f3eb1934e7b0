//! Quadrature backbone: tensor Gauss–Hermite rules on R^k against Gaussian
//! envelopes, product rules on spheres S² ⊂ R³ and polynomial moments.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::polyalg::ComplexPolynomial;
use crate::scalar::{compensated_sum, re, CompensatedSum, Cx, Real};

/// Largest polynomial exactness degree accepted by [`gaussian_rule`].
pub const MAX_GAUSSIAN_DEGREE: usize = 60;
/// Largest tensor-product node count any rule may allocate.
pub const MAX_TENSOR_NODES: usize = 1 << 24;
/// Largest number of 1D nodes in a Gauss–Hermite factor.
pub const MAX_HERMITE_NODES: usize = 160;

#[derive(Clone, Debug, PartialEq)]
pub enum Domain<T: Real> {
    /// R^k against e^{−Σ rates_j·(x_j − center_j)²}.
    Gaussian { rates: Vec<T>, center: Vec<T>, exact_degree: usize },
    /// Sphere of the given radius in R³.
    Sphere { radius: T, order: usize },
    /// Closed interval.
    Interval { a: T, b: T },
}

/// Nodes, positive weights and the domain they integrate over.
#[derive(Clone, Debug)]
pub struct QuadratureRule<T: Real> {
    dim: usize,
    nodes: Vec<T>,
    weights: Vec<T>,
    domain: Domain<T>,
}

/// Gauss–Hermite nodes and weights for ∫ f(x) e^{−x²} dx, computed in f64.
pub fn gauss_hermite_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let pim4 = PI.powf(-0.25);
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss–Legendre nodes and weights on [−1, 1], computed in f64.
pub fn gauss_legendre_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

impl<T: Real> QuadratureRule<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    pub fn node(&self, i: usize) -> &[T] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> T {
        self.weights[i]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&[T], T)> {
        self.nodes.chunks(self.dim).zip(self.weights.iter().copied())
    }

    pub fn weight_sum(&self) -> T {
        compensated_sum(self.weights.iter().map(|&w| re(w))).re
    }

    /// Σ w_i f(x_i): the integral of f against the rule's own weight
    /// (Gaussian envelope for R^k rules, surface measure for spheres).
    pub fn integrate<F: Fn(&[T]) -> Cx<T>>(&self, f: F) -> Cx<T> {
        let mut acc = CompensatedSum::new();
        for (x, w) in self.nodes() {
            acc.add(f(x) * w);
        }
        acc.value()
    }

    /// ∫ f dX over R^k: divides the Gaussian envelope back out.
    pub fn integrate_flat<F: Fn(&[T]) -> Cx<T>>(&self, f: F) -> Cx<T> {
        match &self.domain {
            Domain::Gaussian { rates, center, .. } => self.integrate(|x| {
                let e = x
                    .iter()
                    .zip(center)
                    .zip(rates)
                    .fold(T::zero(), |acc, ((a, c), r)| acc + *r * (*a - *c) * (*a - *c));
                f(x) * e.exp()
            }),
            _ => self.integrate(f),
        }
    }

    /// Moves a Gaussian rule to a new center.
    pub fn recentered(&self, center: &[T]) -> Self {
        match &self.domain {
            Domain::Gaussian { rates, center: old, exact_degree } => {
                assert_eq!(center.len(), self.dim);
                let mut nodes = self.nodes.clone();
                for chunk in nodes.chunks_mut(self.dim) {
                    for ((x, o), c) in chunk.iter_mut().zip(old).zip(center) {
                        *x = *x - *o + *c;
                    }
                }
                Self {
                    dim: self.dim,
                    nodes,
                    weights: self.weights.clone(),
                    domain: Domain::Gaussian {
                        rates: rates.clone(),
                        center: center.to_vec(),
                        exact_degree: *exact_degree,
                    },
                }
            }
            _ => self.clone(),
        }
    }
}

/// Tensor Gauss–Hermite rule with `per_dim` nodes per axis for the weight
/// e^{−rate·|X − center|²} on R^k.
pub fn gauss_hermite_product<T: Real>(k: usize, rate: T, per_dim: usize, center: &[T]) -> Result<QuadratureRule<T>> {
    gauss_hermite_anisotropic(&vec![rate; k], per_dim, center)
}

/// Tensor Gauss–Hermite rule for e^{−Σ rates_j (x_j − center_j)²}.
pub fn gauss_hermite_anisotropic<T: Real>(rates: &[T], per_dim: usize, center: &[T]) -> Result<QuadratureRule<T>> {
    let k = rates.len();
    if let Some(r) = rates.iter().find(|r| **r <= T::zero() || !r.is_finite()) {
        return Err(Error::InvalidInput(format!("Gaussian rate must be positive, got {r}")));
    }
    if center.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: center.len() });
    }
    if per_dim == 0 || per_dim > MAX_HERMITE_NODES {
        return Err(Error::BudgetExceeded(format!("{per_dim} nodes per axis (max {MAX_HERMITE_NODES})")));
    }
    let total = (per_dim as f64).powi(k as i32);
    if total > MAX_TENSOR_NODES as f64 {
        return Err(Error::BudgetExceeded(format!("{per_dim}^{k} tensor nodes (max {MAX_TENSOR_NODES})")));
    }
    let total = total as usize;
    let (x1, w1) = gauss_hermite_1d(per_dim);
    let axes: Vec<(Vec<T>, Vec<T>)> = rates
        .iter()
        .map(|&r| {
            let scale = T::one() / r.sqrt();
            (x1.iter().map(|&x| T::lit(x) * scale).collect(), w1.iter().map(|&w| T::lit(w) * scale).collect())
        })
        .collect();
    let mut nodes = Vec::with_capacity(total * k);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; k];
    for _ in 0..total {
        let mut w = T::one();
        for (axis, &i) in idx.iter().enumerate() {
            nodes.push(axes[axis].0[i] + center[axis]);
            w *= axes[axis].1[i];
        }
        weights.push(w);
        for slot in idx.iter_mut().rev() {
            *slot += 1;
            if *slot < per_dim {
                break;
            }
            *slot = 0;
        }
    }
    Ok(QuadratureRule {
        dim: k,
        nodes,
        weights,
        domain: Domain::Gaussian { rates: rates.to_vec(), center: center.to_vec(), exact_degree: 2 * per_dim - 1 },
    })
}

/// Tensor rule on R^k exact for polynomials of degree ≤ `degree` against
/// e^{−λ|X|²}.
pub fn gaussian_rule<T: Real>(k: usize, lambda: T, degree: usize) -> Result<QuadratureRule<T>> {
    if degree > MAX_GAUSSIAN_DEGREE {
        return Err(Error::BudgetExceeded(format!("exactness degree {degree} (max {MAX_GAUSSIAN_DEGREE})")));
    }
    if k == 0 || k > 8 {
        return Err(Error::BudgetExceeded(format!("dimension {k} (supported 1..=8)")));
    }
    gauss_hermite_product(k, lambda, degree / 2 + 1, &vec![T::zero(); k])
}

/// Product rule on the sphere of radius R in R³: Gauss–Legendre in cos θ
/// times uniform azimuth; exact on spherical harmonics through `order`.
pub fn sphere_rule<T: Real>(radius: T, order: usize) -> Result<QuadratureRule<T>> {
    if order < 3 {
        return Err(Error::InvalidInput(format!("sphere rule order must be ≥ 3, got {order}")));
    }
    let n_theta = order / 2 + 1;
    let n_phi = order + 1;
    let (ct, wt) = gauss_legendre_1d(n_theta);
    let r2 = radius * radius;
    let mut nodes = Vec::with_capacity(3 * n_theta * n_phi);
    let mut weights = Vec::with_capacity(n_theta * n_phi);
    for (c, w) in ct.iter().zip(&wt) {
        let s = (1.0 - c * c).sqrt();
        for j in 0..n_phi {
            let phi = 2.0 * PI * (j as f64 + 0.5) / n_phi as f64;
            nodes.push(radius * T::lit(s * phi.cos()));
            nodes.push(radius * T::lit(s * phi.sin()));
            nodes.push(radius * T::lit(*c));
            weights.push(r2 * T::lit(w * 2.0 * PI / n_phi as f64));
        }
    }
    Ok(QuadratureRule { dim: 3, nodes, weights, domain: Domain::Sphere { radius, order } })
}

/// Gauss–Legendre rule on [a, b].
pub fn interval_rule<T: Real>(a: T, b: T, n: usize) -> QuadratureRule<T> {
    let (x, w) = gauss_legendre_1d(n);
    let half = (b - a) / T::lit(2.0);
    let mid = (a + b) / T::lit(2.0);
    QuadratureRule {
        dim: 1,
        nodes: x.iter().map(|&t| mid + half * T::lit(t)).collect(),
        weights: w.iter().map(|&t| half * T::lit(t)).collect(),
        domain: Domain::Interval { a, b },
    }
}

/// ⟨f, g⟩ = Σ w_i f(x_i) conj(g(x_i)).
pub fn inner_product<T: Real, F, G>(f: F, g: G, rule: &QuadratureRule<T>) -> Cx<T>
where
    F: Fn(&[T]) -> Cx<T>,
    G: Fn(&[T]) -> Cx<T>,
{
    rule.integrate(|x| f(x) * g(x).conj())
}

/// One-dimensional moments m_n = ∫ x^n e^{−rate·x²} dx for n ≤ max_power,
/// integrated by a Gauss–Hermite rule that is exact at that degree.
#[derive(Clone, Debug)]
pub struct GaussianMoments<T: Real> {
    rate: T,
    table: Vec<T>,
}

impl<T: Real> GaussianMoments<T> {
    pub fn new(rate: T, max_power: usize) -> Self {
        let n = max_power / 2 + 1;
        let (x, w) = gauss_hermite_1d(n);
        let rate64 = rate.as_f64();
        let table = (0..=max_power)
            .map(|p| {
                if p % 2 == 1 {
                    return T::zero();
                }
                let s: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi.powi(p as i32)).sum();
                T::lit(s / rate64.powf(p as f64 / 2.0 + 0.5))
            })
            .collect();
        Self { rate, table }
    }

    pub fn rate(&self) -> T {
        self.rate
    }

    pub fn max_power(&self) -> usize {
        self.table.len() - 1
    }

    pub fn get(&self, p: usize) -> T {
        self.table[p]
    }

    /// ∫ x^e e^{−rate|X|²} dX for a multi-index.
    pub fn monomial(&self, e: &[u32]) -> T {
        e.iter().fold(T::one(), |acc, &p| acc * self.table[p as usize])
    }

    /// ∫ P e^{−rate|X|²} dX.
    pub fn integrate(&self, p: &ComplexPolynomial<T>) -> Cx<T> {
        compensated_sum(p.terms().map(|(e, c)| *c * self.monomial(e)))
    }

    /// ∫ P conj(Q) e^{−rate|X|²} dX, summing only parity-compatible pairs.
    pub fn inner(&self, p: &ComplexPolynomial<T>, q: &ComplexPolynomial<T>) -> Cx<T> {
        let mut acc = CompensatedSum::new();
        let mut buf = vec![0u32; p.dim()];
        for (e1, c1) in p.terms() {
            for (e2, c2) in q.terms() {
                if e1.iter().zip(e2).any(|(a, b)| (a + b) % 2 == 1) {
                    continue;
                }
                for ((slot, a), b) in buf.iter_mut().zip(e1).zip(e2) {
                    *slot = a + b;
                }
                acc.add(*c1 * c2.conj() * self.monomial(&buf));
            }
        }
        acc.value()
    }
}

/// Moments table large enough for the product of two polynomials.
pub fn moments_for<T: Real>(rate: T, p: &ComplexPolynomial<T>, q: &ComplexPolynomial<T>) -> GaussianMoments<T> {
    let maxp = p.terms().flat_map(|(e, _)| e.iter().copied()).max().unwrap_or(0)
        + q.terms().flat_map(|(e, _)| e.iter().copied()).max().unwrap_or(0);
    GaussianMoments::new(rate, maxp as usize + 1)
}

/// ∫ P conj(Q) e^{−rate|X|²} dX.
pub fn polynomial_inner_product<T: Real>(p: &ComplexPolynomial<T>, q: &ComplexPolynomial<T>, rate: T) -> Cx<T> {
    moments_for(rate, p, q).inner(p, q)
}

/// ∫_{R^k} exp(−α|Y|² + ⟨b, Y⟩ + c) dY = (π/α)^{k/2} exp(⟨b, b⟩/(4α) + c)
/// for complex α with Re α > 0 (principal branch) and complex b, c.
pub fn complex_gaussian_integral<T: Real>(alpha: Cx<T>, b: &[Cx<T>], c: Cx<T>) -> Result<Cx<T>> {
    if alpha.re <= T::zero() {
        return Err(Error::InvalidInput(format!("complex Gaussian needs Re α > 0, got {alpha}")));
    }
    let bb = b.iter().fold(Cx::new(T::zero(), T::zero()), |acc, x| acc + x * x);
    let root = (re::<T>(T::PI()) / alpha).sqrt();
    let mut pre = Cx::new(T::one(), T::zero());
    for _ in 0..b.len() {
        pre *= root;
    }
    Ok(pre * (bb / (alpha * T::lit(4.0)) + c).exp())
}
