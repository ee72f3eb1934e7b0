//! Sphere-Fourier transforms of Θ-polynomials, the intertwining maps κ and ω,
//! and a truncated Galerkin check of isospectrality for σ-equivalent groups.
//!
//! A generated function is stored node by node: for each node V of the
//! sphere rule on S_{R_Z} it keeps the X-polynomial P_V with
//! F(X, Z) = Σ_V w_V e^{i⟨Z,V⟩} P_V(X) e^{−|X|²/2}. Operators act either on
//! the recipe (Q, p, q, R_Z, φ) or directly on the node polynomials.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hgroup::{EndomorphismSpace, SquareMatrix};
use crate::numerics::{polynomial_inner_product, sphere_rule};
use crate::polyalg::{harmonic_project, theta_power, ComplexPolynomial};
use crate::scalar::{cx, imag_unit, re, CompensatedSum, Cx, Real};
use crate::special::binomial;
use crate::zeeman::{box_gamma_apply, gamma_rate, GaussianPoly};

/// Sphere rule order used when none is given. Phases e^{i⟨Z,V⟩} with
/// |Z|·R_Z ≤ 4 are resolved to round-off at this order.
pub const DEFAULT_SPHERE_ORDER: usize = 24;

/// Largest polynomial degree accepted by the Galerkin check.
pub const MAX_ISOSPEC_DEGREE: usize = 10;

const FD_STEP: f64 = 2e-3;

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

fn check_unit<T: Real>(what: &'static str, v: &[T]) -> Result<()> {
    let n = norm(v);
    if (n - T::one()).abs() > T::lit(1e-10) {
        return Err(Error::NotUnit { what, norm: n.as_f64() });
    }
    Ok(())
}

/// φ(|X|, V) = Σ_j c_j(V)·ρ^{2j}·e^{−ρ²/2}, the c_j polynomials on the Z-space.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorProfile<T: Real> {
    coeffs: Vec<ComplexPolynomial<T>>,
}

impl<T: Real> GeneratorProfile<T> {
    pub fn new(coeffs: Vec<ComplexPolynomial<T>>) -> Result<Self> {
        let Some(first) = coeffs.first() else {
            return Err(Error::InvalidInput("a profile needs at least one coefficient".into()));
        };
        let l = first.dim();
        if let Some(bad) = coeffs.iter().find(|c| c.dim() != l) {
            return Err(Error::DimensionMismatch { expected: l, got: bad.dim() });
        }
        Ok(Self { coeffs })
    }

    /// Profile with V-independent coefficients.
    pub fn radial(l: usize, coeffs: &[Cx<T>]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| ComplexPolynomial::constant(l, c)).collect())
    }

    pub fn l(&self) -> usize {
        self.coeffs[0].dim()
    }

    pub fn coefficients(&self) -> &[ComplexPolynomial<T>] {
        &self.coeffs
    }

    pub fn scale(&self, s: Cx<T>) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c.scale(s)).collect() }
    }

    /// Multiplies by ρ² − r², so every generated function vanishes on |X| = r.
    pub fn with_dirichlet_factor(&self, r: T) -> Self {
        let l = self.l();
        let r2 = re(r * r);
        let n = self.coeffs.len();
        let coeffs = (0..=n)
            .map(|j| {
                let lower = if j > 0 { self.coeffs[j - 1].clone() } else { ComplexPolynomial::zero(l) };
                let same = if j < n { self.coeffs[j].scale(-r2) } else { ComplexPolynomial::zero(l) };
                lower.add(&same)
            })
            .collect();
        Self { coeffs }
    }

    pub fn eval(&self, rho: T, v: &[T]) -> Cx<T> {
        let u = rho * rho;
        let mut acc = re(T::zero());
        let mut up = T::one();
        for c in &self.coeffs {
            acc += c.eval(v) * up;
            up *= u;
        }
        acc * (-u / T::lit(2.0)).exp()
    }

    /// Σ_j c_j(v)|X|^{2j} as a polynomial on R^k.
    fn radial_poly(&self, v: &[T], k: usize) -> ComplexPolynomial<T> {
        let r2 = ComplexPolynomial::squared_norm(k);
        let mut out = ComplexPolynomial::zero(k);
        let mut power = ComplexPolynomial::one(k);
        for c in &self.coeffs {
            out = out.add(&power.scale(c.eval(v)));
            power = power.mul(&r2);
        }
        out
    }
}

/// Data that determines F_{QpqR_Z}(φ) or its harmonic variant.
#[derive(Clone, Debug, PartialEq)]
pub struct Recipe<T: Real> {
    pub q: Vec<T>,
    pub p: usize,
    pub qbar: usize,
    pub r_z: T,
    pub phi: GeneratorProfile<T>,
    pub harmonic: bool,
}

#[derive(Clone, Debug)]
struct Node<T: Real> {
    v: Vec<T>,
    weight: T,
    poly: ComplexPolynomial<T>,
}

/// A function on H_l^(a,b) given by sphere quadrature in the Z-frequency.
#[derive(Clone, Debug)]
pub struct GeneratedFunction<T: Real> {
    recipe: Option<Recipe<T>>,
    space: EndomorphismSpace<T>,
    order: usize,
    r_z: T,
    nodes: Vec<Node<T>>,
    // Evaluation happens at point_map·X when set.
    point_map: Option<SquareMatrix<T>>,
}

/// F_{QpqR_Z}(φ) at the default sphere order.
pub fn fourier_sphere<T: Real>(
    q: &[T],
    p: usize,
    qbar: usize,
    r_z: T,
    phi: &GeneratorProfile<T>,
    space: &EndomorphismSpace<T>,
    harmonic: bool,
) -> Result<GeneratedFunction<T>> {
    fourier_sphere_with_order(q, p, qbar, r_z, phi, space, harmonic, DEFAULT_SPHERE_ORDER)
}

#[allow(clippy::too_many_arguments)]
pub fn fourier_sphere_with_order<T: Real>(
    q: &[T],
    p: usize,
    qbar: usize,
    r_z: T,
    phi: &GeneratorProfile<T>,
    space: &EndomorphismSpace<T>,
    harmonic: bool,
    order: usize,
) -> Result<GeneratedFunction<T>> {
    let recipe = Recipe { q: q.to_vec(), p, qbar, r_z, phi: phi.clone(), harmonic };
    GeneratedFunction::build(recipe, space, order)
}

impl<T: Real> GeneratedFunction<T> {
    fn build(recipe: Recipe<T>, space: &EndomorphismSpace<T>, order: usize) -> Result<Self> {
        let l = space.center_dim();
        if l != 3 {
            return Err(Error::UnsupportedCenterDimension(l));
        }
        if recipe.phi.l() != l {
            return Err(Error::DimensionMismatch { expected: l, got: recipe.phi.l() });
        }
        let k = space.x_dim();
        if recipe.q.len() != k {
            return Err(Error::DimensionMismatch { expected: k, got: recipe.q.len() });
        }
        check_unit("Q", &recipe.q)?;
        if !(recipe.r_z > T::zero()) || !recipe.r_z.is_finite() {
            return Err(Error::InvalidInput(format!("R_Z must be positive, got {}", recipe.r_z)));
        }
        let rule = sphere_rule(recipe.r_z, order)?;
        let raw: Vec<(Vec<T>, T)> = rule.nodes().map(|(v, w)| (v.to_vec(), w)).collect();
        let nodes = raw
            .into_par_iter()
            .map(|(v, weight)| {
                let unit: Vec<T> = v.iter().map(|&c| c / recipe.r_z).collect();
                let mut angular = theta_power(&recipe.q, &unit, space, recipe.p, recipe.qbar)?;
                if recipe.harmonic {
                    angular = harmonic_project(&angular)?;
                }
                let poly = recipe.phi.radial_poly(&v, k).mul(&angular);
                Ok(Node { v, weight, poly })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { r_z: recipe.r_z, recipe: Some(recipe), space: space.clone(), order, nodes, point_map: None })
    }

    /// The recipe, or `None` once an operator has been applied directly.
    pub fn recipe(&self) -> Option<&Recipe<T>> {
        self.recipe.as_ref()
    }

    pub fn space(&self) -> &EndomorphismSpace<T> {
        &self.space
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn r_z(&self) -> T {
        self.r_z
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Integrand polynomials P_V, one per sphere node.
    pub fn node_polys(&self) -> impl Iterator<Item = &ComplexPolynomial<T>> {
        self.nodes.iter().map(|n| &n.poly)
    }

    pub fn point_map(&self) -> Option<&SquareMatrix<T>> {
        self.point_map.as_ref()
    }

    /// Same recipe at another sphere order.
    pub fn with_order(&self, order: usize) -> Result<Self> {
        let recipe = self.require_recipe()?;
        Self::build(recipe.clone(), &self.space, order)
    }

    fn require_recipe(&self) -> Result<&Recipe<T>> {
        self.recipe
            .as_ref()
            .ok_or_else(|| Error::ContractViolation("operation needs a recipe-form generated function".into()))
    }

    fn require_unmapped(&self, what: &str) -> Result<()> {
        if self.point_map.is_some() {
            return Err(Error::ContractViolation(format!("{what} acts on functions without a pending point map")));
        }
        Ok(())
    }

    fn mapped(&self, x: &[T]) -> Vec<T> {
        match &self.point_map {
            Some(m) => m.apply(x),
            None => x.to_vec(),
        }
    }

    // w_V P(X) e^{−|X|²/2} for each node.
    fn amplitudes<'a, I>(&self, polys: I, x: &[T]) -> Vec<Cx<T>>
    where
        I: Iterator<Item = &'a ComplexPolynomial<T>>,
    {
        let y = self.mapped(x);
        let env = (-dot(&y, &y) / T::lit(2.0)).exp();
        polys.zip(&self.nodes).map(|(p, n)| p.eval(&y) * (n.weight * env)).collect()
    }

    fn z_sum(&self, amps: &[Cx<T>], z: &[T]) -> Cx<T> {
        let mut acc = CompensatedSum::new();
        for (a, n) in amps.iter().zip(&self.nodes) {
            let ph = dot(z, &n.v);
            acc.add(*a * cx(ph.cos(), ph.sin()));
        }
        acc.value()
    }

    pub fn eval(&self, x: &[T], z: &[T]) -> Cx<T> {
        assert_eq!(x.len(), self.space.x_dim(), "X has the wrong dimension");
        assert_eq!(z.len(), self.space.center_dim(), "Z has the wrong dimension");
        let amps = self.amplitudes(self.nodes.iter().map(|n| &n.poly), x);
        self.z_sum(&amps, z)
    }

    pub fn eval_many(&self, points: &[(Vec<T>, Vec<T>)]) -> Vec<Cx<T>> {
        points.par_iter().map(|(x, z)| self.eval(x, z)).collect()
    }

    /// X ↦ F(X, z) as P(X)·e^{−|X|²/2}; the pending point map is ignored,
    /// which leaves L²-norms unchanged since point maps are orthogonal.
    pub fn x_slice(&self, z: &[T]) -> Result<GaussianPoly<T>> {
        let k = self.space.x_dim();
        let mut poly = ComplexPolynomial::zero(k);
        for n in &self.nodes {
            let ph = dot(z, &n.v);
            poly = poly.add(&n.poly.scale(cx(ph.cos(), ph.sin()) * n.weight));
        }
        GaussianPoly::new(poly, T::one())
    }

    /// ‖F(·, z)‖ in L²(R^k), from exact Gaussian moments.
    pub fn x_norm(&self, z: &[T]) -> Result<T> {
        Ok(self.x_slice(z)?.norm())
    }

    fn with_nodes(&self, nodes: Vec<Node<T>>) -> Self {
        Self { recipe: None, space: self.space.clone(), order: self.order, r_z: self.r_z, nodes, point_map: None }
    }

    fn rebuild_scaled(&self, s: Cx<T>) -> Result<Self> {
        let mut recipe = self.require_recipe()?.clone();
        recipe.phi = recipe.phi.scale(s);
        Self::build(recipe, &self.space, self.order)
    }

    /// Group Laplacian Δ = Δ_X + (1 + |X|²/4)Δ_Z + Σ_α ∂_α D_α• applied
    /// exactly to each node integrand.
    pub fn laplacian_direct(&self) -> Result<Self> {
        self.require_unmapped("Δ")?;
        let k = self.space.x_dim();
        let weight = ComplexPolynomial::one(k).add(&ComplexPolynomial::squared_norm(k).scale_real(T::lit(0.25)));
        let nodes = self
            .nodes
            .par_iter()
            .map(|n| {
                let lap = GaussianPoly::new(n.poly.clone(), T::one())?.laplacian().into_poly();
                let zpart = n.poly.mul(&weight).scale_real(-dot(&n.v, &n.v));
                // Σ_α iV_α D_α = i·D along J_V.
                let rot = n.poly.derivation_along(&self.space.j_of(&n.v)?).scale(imag_unit());
                Ok(Node { v: n.v.clone(), weight: n.weight, poly: lap.add(&zpart).add(&rot) })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.with_nodes(nodes))
    }

    /// Recipe rewrite of M: φ ↦ (q − p)|V|·φ.
    pub fn m_apply(&self) -> Result<Self> {
        let r = self.require_recipe()?;
        let factor = (T::from_usize_exact(r.qbar) - T::from_usize_exact(r.p)) * r.r_z;
        self.rebuild_scaled(re(factor))
    }

    /// Recipe rewrite of Δ_Z: φ ↦ −|V|²·φ.
    pub fn delta_z_apply(&self) -> Result<Self> {
        let r = self.require_recipe()?.r_z;
        self.rebuild_scaled(re(-r * r))
    }

    /// M = Σ_α ∂_{Z_α} D_α• with D_α exact on the node polynomials and the
    /// Z-derivatives by Richardson-extrapolated central differences.
    pub fn m_direct(&self, points: &[(Vec<T>, Vec<T>)]) -> Result<Vec<Cx<T>>> {
        self.require_unmapped("M")?;
        let derived: Vec<Vec<ComplexPolynomial<T>>> = self
            .space
            .basis()
            .iter()
            .map(|j| self.nodes.iter().map(|n| n.poly.derivation_along(j)).collect())
            .collect();
        let h = T::lit(FD_STEP);
        Ok(points
            .par_iter()
            .map(|(x, z)| {
                let mut total = re(T::zero());
                for (alpha, polys) in derived.iter().enumerate() {
                    let amps = self.amplitudes(polys.iter(), x);
                    total += first_difference(|s| self.z_sum(&amps, &shifted(z, alpha, s)), h);
                }
                total
            })
            .collect())
    }

    /// Δ_Z by Richardson-extrapolated second differences.
    pub fn delta_z_direct(&self, points: &[(Vec<T>, Vec<T>)]) -> Result<Vec<Cx<T>>> {
        self.require_unmapped("Δ_Z")?;
        let h = T::lit(FD_STEP);
        Ok(points
            .par_iter()
            .map(|(x, z)| {
                let amps = self.amplitudes(self.nodes.iter().map(|n| &n.poly), x);
                let centre = self.z_sum(&amps, z);
                (0..z.len())
                    .map(|alpha| second_difference(|s| self.z_sum(&amps, &shifted(z, alpha, s)), centre, h))
                    .fold(re(T::zero()), |a, b| a + b)
            })
            .collect())
    }
}

fn shifted<T: Real>(z: &[T], alpha: usize, s: T) -> Vec<T> {
    let mut out = z.to_vec();
    out[alpha] += s;
    out
}

fn first_difference<T: Real, F: Fn(T) -> Cx<T>>(f: F, h: T) -> Cx<T> {
    let d = |s: T| (f(s) - f(-s)) / (s + s);
    let half = h / T::lit(2.0);
    (d(half) * T::lit(4.0) - d(h)) / T::lit(3.0)
}

fn second_difference<T: Real, F: Fn(T) -> Cx<T>>(f: F, centre: Cx<T>, h: T) -> Cx<T> {
    let d = |s: T| (f(s) - centre * T::lit(2.0) + f(-s)) / (s * s);
    let half = h / T::lit(2.0);
    (d(half) * T::lit(4.0) - d(h)) / T::lit(3.0)
}

/// Largest |a − b| over the samples, relative to max(1e−300, max|b|).
pub fn relative_deviation<T: Real>(a: &[Cx<T>], b: &[Cx<T>]) -> T {
    let scale = b.iter().fold(T::zero(), |m, v| m.max(v.norm())).max(T::min_positive_value());
    a.iter().zip(b).fold(T::zero(), |m, (x, y)| m.max((*x - *y).norm())) / scale
}

/// Deterministic (X, Z) cloud, uniform in [−1.2, 1.2]^k × [−1, 1]^l.
pub fn sample_points<T: Real>(k: usize, l: usize, n: usize, seed: u64) -> Vec<(Vec<T>, Vec<T>)> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x = (0..k).map(|_| T::lit(rng.gen_range(-1.2..1.2))).collect();
            let z = (0..l).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect();
            (x, z)
        })
        .collect()
}

/// Ratio estimate of an eigenvalue from operator values: mean of Af/f over
/// the points where |f| is not negligible, and the spread around it.
#[derive(Clone, Copy, Debug)]
pub struct RatioEstimate<T: Real> {
    pub mean: Cx<T>,
    pub spread: T,
}

pub fn ratio_estimate<T: Real>(applied: &[Cx<T>], values: &[Cx<T>]) -> RatioEstimate<T> {
    let scale = values.iter().fold(T::zero(), |m, v| m.max(v.norm()));
    let ratios: Vec<Cx<T>> =
        applied.iter().zip(values).filter(|(_, v)| v.norm() > T::lit(1e-3) * scale).map(|(a, v)| *a / *v).collect();
    if ratios.is_empty() {
        return RatioEstimate { mean: re(T::nan()), spread: T::nan() };
    }
    let n = T::from_usize_exact(ratios.len());
    let mean = ratios.iter().fold(re(T::zero()), |a, b| a + b) / n;
    let spread = ratios.iter().fold(T::zero(), |m, r| m.max((*r - mean).norm()));
    RatioEstimate { mean, spread }
}

/// Which of κ and ω a point map realizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntertwinerKind {
    Kappa,
    Omega,
}

/// κ_{Qpq} or ω_{QQ̃pq}, with the orthogonal X-map K of its realization
/// (K, id_Z): the image of F is X ↦ F(KᵀX).
#[derive(Clone, Debug)]
pub struct Intertwiner<T: Real> {
    kind: IntertwinerKind,
    q: Vec<T>,
    q_target: Vec<T>,
    p: usize,
    qbar: usize,
    source: EndomorphismSpace<T>,
    target: EndomorphismSpace<T>,
    point: SquareMatrix<T>,
}

// Q followed by J_α Q; orthonormal by the Clifford relations.
fn clifford_frame<T: Real>(q: &[T], space: &EndomorphismSpace<T>) -> Vec<Vec<T>> {
    std::iter::once(q.to_vec()).chain(space.basis().iter().map(|j| j.apply(q))).collect()
}

// Orthonormal frame extended by Gram–Schmidt over e_1, …, e_k.
fn complete_frame<T: Real>(frame: &[Vec<T>], k: usize) -> Result<Vec<Vec<T>>> {
    for (i, a) in frame.iter().enumerate() {
        for (j, b) in frame.iter().enumerate() {
            let target = if i == j { T::one() } else { T::zero() };
            if (dot(a, b) - target).abs() > T::lit(1e-10) {
                return Err(Error::ContractViolation("S_Q frame is not orthonormal".into()));
            }
        }
    }
    let mut out = frame.to_vec();
    for e in 0..k {
        if out.len() == k {
            break;
        }
        let mut v = vec![T::zero(); k];
        v[e] = T::one();
        for _ in 0..2 {
            for f in &out {
                let c = dot(&v, f);
                for (vi, fi) in v.iter_mut().zip(f) {
                    *vi -= c * *fi;
                }
            }
        }
        let n = norm(&v);
        if n > T::lit(1e-6) {
            out.push(v.into_iter().map(|c| c / n).collect());
        }
    }
    if out.len() != k {
        return Err(Error::ContractViolation("frame completion fell short".into()));
    }
    Ok(out)
}

// Σ_i dst_i src_iᵀ.
fn frame_map<T: Real>(src: &[Vec<T>], dst: &[Vec<T>]) -> SquareMatrix<T> {
    let k = src.len();
    let rows: Vec<Vec<T>> = (0..k)
        .map(|r| (0..k).map(|c| src.iter().zip(dst).fold(T::zero(), |acc, (s, d)| acc + d[r] * s[c])).collect())
        .collect();
    SquareMatrix::from_rows(&rows)
}

/// κ_{Qpq}: functions on H_l^(a,b) to functions on H_l^(a′,b′), a + b = a′ + b′.
pub fn kappa<T: Real>(
    q: &[T],
    p: usize,
    qbar: usize,
    space: &EndomorphismSpace<T>,
    space_prime: &EndomorphismSpace<T>,
) -> Result<Intertwiner<T>> {
    if !space.same_family(space_prime) {
        return Err(Error::SignatureMismatch(format!("{:?} vs {:?}", space.spec(), space_prime.spec())));
    }
    let k = space.x_dim();
    if q.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: q.len() });
    }
    check_unit("Q", q)?;
    let src = complete_frame(&clifford_frame(q, space), k)?;
    let dst = complete_frame(&clifford_frame(q, space_prime), k)?;
    Ok(Intertwiner {
        kind: IntertwinerKind::Kappa,
        q: q.to_vec(),
        q_target: q.to_vec(),
        p,
        qbar,
        source: space.clone(),
        target: space_prime.clone(),
        point: frame_map(&src, &dst),
    })
}

/// ω_{QQ̃pq} on a single group.
pub fn omega<T: Real>(
    q: &[T],
    q_tilde: &[T],
    p: usize,
    qbar: usize,
    space: &EndomorphismSpace<T>,
) -> Result<Intertwiner<T>> {
    let k = space.x_dim();
    for v in [q, q_tilde] {
        if v.len() != k {
            return Err(Error::DimensionMismatch { expected: k, got: v.len() });
        }
    }
    check_unit("Q", q)?;
    check_unit("Q̃", q_tilde)?;
    let src = complete_frame(&clifford_frame(q, space), k)?;
    let dst = complete_frame(&clifford_frame(q_tilde, space), k)?;
    Ok(Intertwiner {
        kind: IntertwinerKind::Omega,
        q: q.to_vec(),
        q_target: q_tilde.to_vec(),
        p,
        qbar,
        source: space.clone(),
        target: space.clone(),
        point: frame_map(&src, &dst),
    })
}

impl<T: Real> Intertwiner<T> {
    pub fn kind(&self) -> IntertwinerKind {
        self.kind
    }

    /// The orthogonal X-map K.
    pub fn point_map(&self) -> &SquareMatrix<T> {
        &self.point
    }

    pub fn source(&self) -> &EndomorphismSpace<T> {
        &self.source
    }

    pub fn target(&self) -> &EndomorphismSpace<T> {
        &self.target
    }

    /// max |KᵀK − I|.
    pub fn orthogonality_defect(&self) -> T {
        let k = self.point.dim();
        (&(&self.point.transpose() * &self.point) - &SquareMatrix::identity(k)).max_abs()
    }

    /// Recipe functions are rebuilt with the target's Θ factors; functions
    /// produced by direct operators are composed with the point map.
    pub fn apply(&self, f: &GeneratedFunction<T>) -> Result<GeneratedFunction<T>> {
        if f.space != self.source {
            return Err(Error::SignatureMismatch(format!(
                "function lives on {:?}, map starts at {:?}",
                f.space.spec(),
                self.source.spec()
            )));
        }
        match &f.recipe {
            Some(r) => {
                let q_dev = r.q.iter().zip(&self.q).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
                if q_dev > T::lit(1e-12) || r.p != self.p || r.qbar != self.qbar {
                    return Err(Error::ContractViolation("recipe does not match the map's (Q, p, q)".into()));
                }
                let mut recipe = r.clone();
                recipe.q = self.q_target.clone();
                GeneratedFunction::build(recipe, &self.target, f.order)
            }
            None => {
                let kt = self.point.transpose();
                let composed = match &f.point_map {
                    Some(m) => m * &kt,
                    None => kt,
                };
                let mut out = f.clone();
                out.space = self.target.clone();
                out.point_map = Some(composed);
                Ok(out)
            }
        }
    }
}

/// Relative ‖map(ΔF) − Δ′(map F)‖ over the sample points; Δ direct on both sides.
pub fn intertwining_residual<T: Real>(
    map: &Intertwiner<T>,
    f: &GeneratedFunction<T>,
    points: &[(Vec<T>, Vec<T>)],
) -> Result<T> {
    let left = map.apply(&f.laplacian_direct()?)?;
    let right = map.apply(f)?.laplacian_direct()?;
    Ok(relative_deviation(&left.eval_many(points), &right.eval_many(points)))
}

/// Relative deviation of map(F)(X, Z) from F(KᵀX, Z).
pub fn point_realization_residual<T: Real>(
    map: &Intertwiner<T>,
    f: &GeneratedFunction<T>,
    points: &[(Vec<T>, Vec<T>)],
) -> Result<T> {
    let image = map.apply(f)?;
    let kt = map.point.transpose();
    let pulled: Vec<(Vec<T>, Vec<T>)> = points.iter().map(|(x, z)| (kt.apply(x), z.clone())).collect();
    Ok(relative_deviation(&image.eval_many(points), &f.eval_many(&pulled)))
}

/// Worst relative change of ‖F(·, z)‖ under the map, over the given z.
pub fn norm_preservation_defect<T: Real>(map: &Intertwiner<T>, f: &GeneratedFunction<T>, zs: &[Vec<T>]) -> Result<T> {
    let image = map.apply(f)?;
    let mut worst = T::zero();
    for z in zs {
        let a = f.x_norm(z)?;
        let b = image.x_norm(z)?;
        worst = worst.max((a - b).abs() / a.max(T::min_positive_value()));
    }
    Ok(worst)
}

fn onto_sphere<T: Real>(points: &[(Vec<T>, Vec<T>)], r_x: T) -> Vec<(Vec<T>, Vec<T>)> {
    points
        .iter()
        .map(|(x, z)| {
            let n = norm(x);
            (x.iter().map(|&c| c * r_x / n).collect(), z.clone())
        })
        .collect()
}

/// Restriction to |X| = r_x: the map's image restricted to the sphere equals
/// the source restricted to the sphere, read through Kᵀ, which keeps it.
/// Returns max(relative value deviation, max ||KᵀX| − r_x|).
pub fn restriction_residual<T: Real>(
    map: &Intertwiner<T>,
    f: &GeneratedFunction<T>,
    r_x: T,
    points: &[(Vec<T>, Vec<T>)],
) -> Result<T> {
    let on_sphere = onto_sphere(points, r_x);
    let kt = map.point.transpose();
    let radius_drift = on_sphere.iter().fold(T::zero(), |m, (x, _)| m.max((norm(&kt.apply(x)) - r_x).abs()));
    Ok(point_realization_residual(map, f, &on_sphere)?.max(radius_drift))
}

/// Values on |X| = r_x of F and of its image, relative to the image's
/// largest value over the unrestricted points.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DirichletReport {
    pub source_on_boundary: f64,
    pub image_on_boundary: f64,
}

pub fn dirichlet_residual<T: Real>(
    map: &Intertwiner<T>,
    f: &GeneratedFunction<T>,
    r_x: T,
    points: &[(Vec<T>, Vec<T>)],
) -> Result<DirichletReport> {
    let image = map.apply(f)?;
    let bulk = |g: &GeneratedFunction<T>| g.eval_many(points).iter().fold(T::zero(), |m, v| m.max(v.norm()));
    let boundary = onto_sphere(points, r_x);
    let edge = |g: &GeneratedFunction<T>| g.eval_many(&boundary).iter().fold(T::zero(), |m, v| m.max(v.norm()));
    let s_scale = bulk(f).max(T::min_positive_value());
    let i_scale = bulk(&image).max(T::min_positive_value());
    Ok(DirichletReport {
        source_on_boundary: (edge(f) / s_scale).as_f64(),
        image_on_boundary: (edge(&image) / i_scale).as_f64(),
    })
}

/// (d_pq, d_n) with d_pq = C(p+k−1, k−1)·C(q+k−1, k−1), d_n = C(n+k−1, k−1).
pub fn dim_counts(p: usize, q: usize, n: usize, k: usize) -> (u64, u64) {
    assert!(k >= 1, "X-space dimension must be positive");
    let c = |m: usize| binomial((m + k - 1) as u64, (k - 1) as u64);
    (c(p) * c(q), c(n))
}

/// Numerical rank of {Θ_Q^p conj(Θ_Q)^q : Q ∈ qs} at a fixed unit V.
pub fn theta_family_rank<T: Real>(
    qs: &[Vec<T>],
    p: usize,
    qbar: usize,
    v_unit: &[T],
    space: &EndomorphismSpace<T>,
) -> Result<usize> {
    let polys = qs.iter().map(|q| theta_power(q, v_unit, space, p, qbar)).collect::<Result<Vec<_>>>()?;
    let mut index: HashMap<Vec<u32>, usize> = HashMap::new();
    for poly in &polys {
        for (e, _) in poly.terms() {
            let next = index.len();
            index.entry(e.clone()).or_insert(next);
        }
    }
    let mut m = DMatrix::<Complex64>::zeros(index.len().max(1), polys.len());
    for (col, poly) in polys.iter().enumerate() {
        for (e, c) in poly.terms() {
            m[(index[e], col)] = Complex64::new(c.re.as_f64(), c.im.as_f64());
        }
    }
    let sv = m.svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0, f64::max);
    Ok(sv.iter().filter(|&&s| s > 1e-9 * top.max(f64::MIN_POSITIVE)).count())
}

/// Spectrum of Box_γ on polynomials of degree ≤ d times e^{−λ|X|²/2},
/// λ = π|Z_γ|.
#[derive(Clone, Debug, Serialize)]
pub struct GalerkinSpectrum {
    pub lambda: f64,
    pub eigenvalues: Vec<f64>,
    /// max |⟨ψ_m, ψ_n⟩ − δ_mn| of the one-dimensional factors.
    pub gram_defect: f64,
    /// Worst relative loss of ‖Box ψ‖² when expanded in the truncated basis.
    pub closure_defect: f64,
    pub hermiticity_defect: f64,
    pub blocks: usize,
}

/// Two sorted spectra and their largest gap.
#[derive(Clone, Debug, Serialize)]
pub struct IsospecReport {
    pub eigs_a: Vec<f64>,
    pub eigs_b: Vec<f64>,
    pub gap: f64,
    pub closure_defect: f64,
}

// Coefficient vectors (in powers of x) of the normalized Hermite
// polynomials for the weight e^{−λx²}.
fn hermite_coefficients<T: Real>(lambda: T, n_max: usize) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = vec![vec![(lambda / T::PI()).sqrt().sqrt()]];
    let a = (lambda + lambda).sqrt();
    for n in 0..n_max {
        let mut next = vec![T::zero(); n + 2];
        for (e, &c) in out[n].iter().enumerate() {
            next[e + 1] += a * c;
        }
        if n > 0 {
            let s = T::from_usize_exact(n).sqrt();
            for (e, &c) in out[n - 1].iter().enumerate() {
                next[e] -= s * c;
            }
        }
        let d = T::from_usize_exact(n + 1).sqrt();
        out.push(next.into_iter().map(|c| c / d).collect());
    }
    out
}

fn poly_1d<T: Real>(coeffs: &[T]) -> ComplexPolynomial<T> {
    ComplexPolynomial::from_terms(1, coeffs.iter().enumerate().map(|(e, &c)| (vec![e as u32], re(c))))
}

fn multi_indices(k: usize, max_total: usize) -> Vec<Vec<u32>> {
    fn rec(k: usize, left: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur.push(v as u32);
            rec(k, left - v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, max_total, &mut Vec::with_capacity(k), &mut out);
    out.sort_by(|a, b| {
        let (sa, sb): (u32, u32) = (a.iter().sum(), b.iter().sum());
        sa.cmp(&sb).then_with(|| b.cmp(a))
    });
    out
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Galerkin matrix of Box_γ in the orthonormal tensor Hermite basis of
/// degree ≤ degree_max. The Hermite expansion of each image uses the
/// one-dimensional moment tables ⟨x^e, h_m⟩; the matrix splits into
/// coupled blocks that are diagonalized separately.
pub fn galerkin_spectrum<T: Real>(
    space: &EndomorphismSpace<T>,
    z_gamma: &[T],
    degree_max: usize,
) -> Result<GalerkinSpectrum> {
    if degree_max > MAX_ISOSPEC_DEGREE {
        return Err(Error::BudgetExceeded(format!("degree {degree_max} exceeds {MAX_ISOSPEC_DEGREE}")));
    }
    let l = space.center_dim();
    if z_gamma.len() != l {
        return Err(Error::DimensionMismatch { expected: l, got: z_gamma.len() });
    }
    let lambda = gamma_rate(z_gamma);
    if !(lambda > T::zero()) {
        return Err(Error::InvalidInput("Z_γ must be nonzero".into()));
    }
    let k = space.x_dim();
    let herm = hermite_coefficients(lambda, degree_max);
    let herm_polys: Vec<ComplexPolynomial<T>> = herm.iter().map(|c| poly_1d(c)).collect();

    let mut gram_defect = T::zero();
    for (m, a) in herm_polys.iter().enumerate() {
        for (n, b) in herm_polys.iter().enumerate() {
            let target = if m == n { T::one() } else { T::zero() };
            gram_defect = gram_defect.max((polynomial_inner_product(a, b, lambda) - re(target)).norm());
        }
    }
    if gram_defect > T::lit(1e-9) {
        return Err(Error::GramConditioning(gram_defect.as_f64()));
    }
    // overlap[e][m] = ⟨x^e, h_m⟩.
    let overlap: Vec<Vec<T>> = (0..=degree_max)
        .map(|e| {
            let mono = ComplexPolynomial::monomial(1, vec![e as u32], re(T::one()));
            herm_polys.iter().map(|h| polynomial_inner_product(&mono, h, lambda).re).collect()
        })
        .collect();

    let basis = multi_indices(k, degree_max);
    let lookup: HashMap<Vec<u32>, usize> = basis.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
    let nb = basis.len();

    let columns = basis
        .par_iter()
        .map(|n| -> Result<(Vec<(usize, Complex64)>, T)> {
            let mut terms: Vec<(Vec<u32>, T)> = vec![(Vec::with_capacity(k), T::one())];
            for &ni in n {
                let mut next = Vec::new();
                for (e, c) in &terms {
                    for (pw, &hc) in herm[ni as usize].iter().enumerate() {
                        if hc != T::zero() {
                            let mut e2 = e.clone();
                            e2.push(pw as u32);
                            next.push((e2, *c * hc));
                        }
                    }
                }
                terms = next;
            }
            let psi = ComplexPolynomial::from_terms(k, terms.into_iter().map(|(e, c)| (e, re(c))));
            let image = box_gamma_apply(&GaussianPoly::new(psi, lambda)?, z_gamma, space)?;
            let mut coef: HashMap<usize, Cx<T>> = HashMap::new();
            for (e, c) in image.poly().terms() {
                let mut cands: Vec<(Vec<u32>, T)> = vec![(Vec::with_capacity(k), T::one())];
                for &ei in e {
                    let mut next = Vec::new();
                    for (m, w) in &cands {
                        let mut mi = ei as i64;
                        while mi >= 0 {
                            let ov = overlap[ei as usize][mi as usize];
                            let mut m2 = m.clone();
                            m2.push(mi as u32);
                            next.push((m2, *w * ov));
                            mi -= 2;
                        }
                    }
                    cands = next;
                }
                for (m, w) in cands {
                    let Some(&idx) = lookup.get(&m) else {
                        return Err(Error::ContractViolation("Box_γ image left the truncated space".into()));
                    };
                    *coef.entry(idx).or_insert_with(|| re(T::zero())) += *c * w;
                }
            }
            let captured = coef.values().fold(T::zero(), |acc, c| acc + c.norm_sqr());
            let total = image.norm_sq();
            let loss = (total - captured).abs() / total.max(T::min_positive_value());
            let mut col: Vec<(usize, Complex64)> =
                coef.into_iter().map(|(i, c)| (i, Complex64::new(c.re.as_f64(), c.im.as_f64()))).collect();
            col.sort_by_key(|e| e.0);
            Ok((col, loss))
        })
        .collect::<Result<Vec<_>>>()?;

    let closure_defect = columns.iter().fold(0.0f64, |m, c| m.max(c.1.as_f64()));
    let scale = columns.iter().flat_map(|c| c.0.iter()).fold(0.0f64, |m, e| m.max(e.1.norm()));
    let cut = 1e-14 * scale;
    let mut entries: HashMap<(usize, usize), Complex64> = HashMap::new();
    let mut parent: Vec<usize> = (0..nb).collect();
    for (col, (vals, _)) in columns.iter().enumerate() {
        for &(row, v) in vals {
            if v.norm() <= cut {
                continue;
            }
            entries.insert((row, col), v);
            let (a, b) = (find(&mut parent, row), find(&mut parent, col));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let hermiticity_defect = entries.iter().fold(0.0f64, |m, (&(r, c), v)| {
        let w = entries.get(&(c, r)).copied().unwrap_or_default();
        m.max((v - w.conj()).norm())
    }) / scale.max(f64::MIN_POSITIVE);

    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..nb {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut group_list: Vec<Vec<usize>> = groups.into_values().collect();
    group_list.sort_by_key(|g| g[0]);
    let mut eigenvalues: Vec<f64> = group_list
        .par_iter()
        .flat_map_iter(|g| {
            let pos: HashMap<usize, usize> = g.iter().enumerate().map(|(i, &b)| (b, i)).collect();
            let mut m = DMatrix::<Complex64>::zeros(g.len(), g.len());
            for &c in g {
                for &(r, v) in &columns[c].0 {
                    if let Some(&ri) = pos.get(&r) {
                        m[(ri, pos[&c])] += v * 0.5;
                        m[(pos[&c], ri)] += v.conj() * 0.5;
                    }
                }
            }
            SymmetricEigen::new(m).eigenvalues.iter().copied().collect::<Vec<f64>>()
        })
        .collect();
    eigenvalues.sort_by(|a, b| a.total_cmp(b));
    Ok(GalerkinSpectrum {
        lambda: lambda.as_f64(),
        eigenvalues,
        gram_defect: gram_defect.as_f64(),
        closure_defect,
        hermiticity_defect,
        blocks: group_list.len(),
    })
}

/// Largest distance from a computed eigenvalue to the nearest level
/// −(4p + k)λ − 4λ², p = 0..=degree_max.
pub fn level_defect(spectrum: &GalerkinSpectrum, k: usize, degree_max: usize) -> f64 {
    let lam = spectrum.lambda;
    let levels: Vec<f64> = (0..=degree_max).map(|p| -((4 * p + k) as f64) * lam - 4.0 * lam * lam).collect();
    spectrum
        .eigenvalues
        .iter()
        .map(|e| levels.iter().fold(f64::INFINITY, |m, l| m.min((e - l).abs())))
        .fold(0.0, f64::max)
}

/// Compares the truncated spectra of Box_γ on two spaces of equal X-dimension.
pub fn isospec_compare<T: Real>(
    space_a: &EndomorphismSpace<T>,
    z_a: &[T],
    space_b: &EndomorphismSpace<T>,
    z_b: &[T],
    degree_max: usize,
) -> Result<IsospecReport> {
    if space_a.x_dim() != space_b.x_dim() || space_a.center_dim() != space_b.center_dim() {
        return Err(Error::SignatureMismatch(format!("{:?} vs {:?}", space_a.spec(), space_b.spec())));
    }
    let a = galerkin_spectrum(space_a, z_a, degree_max)?;
    let b = galerkin_spectrum(space_b, z_b, degree_max)?;
    let gap = a.eigenvalues.iter().zip(&b.eigenvalues).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    Ok(IsospecReport {
        closure_defect: a.closure_defect.max(b.closure_defect),
        eigs_a: a.eigenvalues,
        eigs_b: b.eigenvalues,
        gap,
    })
}

/// Truncated Box_γ spectra of two members of one family at the same Z_γ.
pub fn isospec_check<T: Real>(
    space: &EndomorphismSpace<T>,
    space_prime: &EndomorphismSpace<T>,
    z_gamma: &[T],
    degree_max: usize,
) -> Result<IsospecReport> {
    if !space.same_family(space_prime) {
        return Err(Error::SignatureMismatch(format!("{:?} vs {:?}", space.spec(), space_prime.spec())));
    }
    isospec_compare(space, z_gamma, space_prime, z_gamma, degree_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hgroup::build_htype;
    use proptest::prelude::*;

    fn unit(v: Vec<f64>) -> Vec<f64> {
        let n = norm(&v);
        v.into_iter().map(|c| c / n).collect()
    }

    fn generic_q(k: usize) -> Vec<f64> {
        unit((0..k).map(|i| 0.3 + 0.17 * i as f64 - 0.05 * (i * i) as f64).collect())
    }

    fn profile() -> GeneratorProfile<f64> {
        // c_0 = 1 + 0.2 V_1, c_1 = 0.3 − 0.1i V_3.
        let c0 = ComplexPolynomial::one(3).add(&ComplexPolynomial::variable(3, 0).scale_real(0.2));
        let c1 =
            ComplexPolynomial::constant(3, cx(0.3, 0.0)).add(&ComplexPolynomial::variable(3, 2).scale(cx(0.0, -0.1)));
        GeneratorProfile::new(vec![c0, c1]).unwrap()
    }

    fn spaces() -> (Space, Space) {
        (build_htype(3, 2, 0).unwrap(), build_htype(3, 1, 1).unwrap())
    }

    type Space = EndomorphismSpace<f64>;

    #[test]
    fn dim_count_examples() {
        assert_eq!(dim_counts(0, 0, 0, 4), (1, 1));
        assert_eq!(dim_counts(1, 1, 2, 4).0, 16);
        assert_eq!(dim_counts(1, 1, 2, 4).1, 10);
    }

    #[test]
    fn center_dimension_one_rejected() {
        let s = build_htype::<f64>(1, 2, 0).unwrap();
        let phi = GeneratorProfile::radial(1, &[re(1.0)]).unwrap();
        let err = fourier_sphere(&generic_q(4), 1, 0, 1.0, &phi, &s, false).unwrap_err();
        assert!(matches!(err, Error::UnsupportedCenterDimension(1)));
    }

    #[test]
    fn radial_generator_is_sinc_transform() {
        let (a, b) = spaces();
        let phi = GeneratorProfile::radial(3, &[re(1.0), re(0.5)]).unwrap();
        let r = 1.5;
        let fa = fourier_sphere(&generic_q(8), 0, 0, r, &phi, &a, false).unwrap();
        let fb = fourier_sphere(&unit(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]), 0, 0, r, &phi, &b, false).unwrap();
        for (x, z) in sample_points::<f64>(8, 3, 8, 3) {
            let u: f64 = x.iter().map(|v| v * v).sum();
            let zn = norm(&z);
            let g = (1.0 + 0.5 * u) * (-u / 2.0).exp();
            let expect = g * 4.0 * std::f64::consts::PI * r * r * (r * zn).sin() / (r * zn);
            let va = fa.eval(&x, &z);
            assert!((va - re(expect)).norm() < 1e-10 * expect.abs().max(1.0), "{va} vs {expect}");
            assert!((va - fb.eval(&x, &z)).norm() < 1e-12);
        }
    }

    #[test]
    fn quadrature_order_doubling_converges() {
        let (a, _) = spaces();
        let f = fourier_sphere(&generic_q(8), 1, 1, 2.0, &profile(), &a, false).unwrap();
        let g = f.with_order(2 * DEFAULT_SPHERE_ORDER).unwrap();
        let pts = sample_points::<f64>(8, 3, 16, 5);
        assert!(relative_deviation(&f.eval_many(&pts), &g.eval_many(&pts)) < 1e-8);
    }

    #[test]
    fn delta_z_eigenvalue_by_differences() {
        let (a, _) = spaces();
        for harmonic in [false, true] {
            let f = fourier_sphere(&generic_q(8), 1, 1, 1.5, &profile(), &a, harmonic).unwrap();
            let pts = sample_points::<f64>(8, 3, 16, 7);
            let direct = f.delta_z_direct(&pts).unwrap();
            let recipe = f.delta_z_apply().unwrap().eval_many(&pts);
            assert!(relative_deviation(&direct, &recipe) < 1e-6);
            let est = ratio_estimate(&direct, &f.eval_many(&pts));
            assert!((est.mean - re(-2.25)).norm() < 1e-6, "{:?}", est);
        }
    }

    #[test]
    fn harmonic_nodes_are_harmonic() {
        let (a, _) = spaces();
        let phi = GeneratorProfile::radial(3, &[re(1.0)]).unwrap();
        let f = fourier_sphere(&generic_q(8), 1, 1, 1.0, &phi, &a, true).unwrap();
        for poly in f.node_polys() {
            assert!(poly.laplacian().max_coefficient() < 1e-12);
        }
        let plain = fourier_sphere(&generic_q(8), 1, 1, 1.0, &phi, &a, false).unwrap();
        assert!(plain.node_polys().any(|p| p.laplacian().max_coefficient() > 1e-3));
    }

    #[test]
    fn m_eigenvalue_sign_from_direct_mode() {
        let (a, _) = spaces();
        let pts = sample_points::<f64>(8, 3, 16, 11);
        for (p, q) in [(1usize, 0usize), (0, 1), (1, 1), (2, 0)] {
            for r in [1.0, 2.0, 4.0] {
                let f = fourier_sphere(&generic_q(8), p, q, r, &profile(), &a, false).unwrap();
                let direct = f.m_direct(&pts).unwrap();
                let est = ratio_estimate(&direct, &f.eval_many(&pts));
                let expect = (q as f64 - p as f64) * r;
                assert!((est.mean - re(expect)).norm() < 1e-6, "p={p} q={q} r={r}: {:?}", est);
                if p != q {
                    let recipe = f.m_apply().unwrap().eval_many(&pts);
                    assert!(relative_deviation(&direct, &recipe) < 1e-6);
                }
            }
        }
    }

    #[test]
    fn m_identity_in_harmonic_variant() {
        let (_, b) = spaces();
        let pts = sample_points::<f64>(8, 3, 16, 13);
        let f = fourier_sphere(&generic_q(8), 2, 0, 2.0, &profile(), &b, true).unwrap();
        let direct = f.m_direct(&pts).unwrap();
        let recipe = f.m_apply().unwrap().eval_many(&pts);
        assert!(relative_deviation(&direct, &recipe) < 1e-6);
    }

    #[test]
    fn kappa_intertwines_laplacians() {
        let (a, b) = spaces();
        let q = generic_q(8);
        let map = kappa(&q, 1, 0, &a, &b).unwrap();
        assert!(map.orthogonality_defect() < 1e-13);
        let f = fourier_sphere(&q, 1, 0, 2.0, &profile(), &a, false).unwrap();
        let pts = sample_points::<f64>(8, 3, 64, 17);
        assert!(intertwining_residual(&map, &f, &pts).unwrap() < 1e-8);
        assert!(point_realization_residual(&map, &f, &pts).unwrap() < 1e-12);
        // κ is not the identity: the images differ as functions.
        let image = map.apply(&f).unwrap();
        assert!(relative_deviation(&image.eval_many(&pts), &f.eval_many(&pts)) > 1e-3);
    }

    #[test]
    fn kappa_on_second_order_families() {
        let (a, b) = spaces();
        let q = generic_q(8);
        let pts = sample_points::<f64>(8, 3, 24, 19);
        let phi = GeneratorProfile::new(vec![profile().coefficients()[0].clone()]).unwrap();
        for (p, qq, harmonic) in [(1, 1, false), (2, 0, false), (1, 1, true), (0, 2, true)] {
            let map = kappa(&q, p, qq, &a, &b).unwrap();
            let f = fourier_sphere(&q, p, qq, 1.0, &phi, &a, harmonic).unwrap();
            assert!(intertwining_residual(&map, &f, &pts).unwrap() < 1e-8);
        }
    }

    #[test]
    fn kappa_trivial_cases() {
        let (a, b) = spaces();
        let q = generic_q(8);
        let same = kappa(&q, 1, 0, &a, &a).unwrap();
        assert!((same.point_map() - &SquareMatrix::identity(8)).max_abs() < 1e-14);
        let f = fourier_sphere(&q, 1, 0, 1.0, &profile(), &a, false).unwrap();
        assert_eq!(same.apply(&f).unwrap().recipe(), f.recipe());

        let radial = fourier_sphere(&q, 0, 0, 1.0, &profile(), &a, false).unwrap();
        let image = kappa(&q, 0, 0, &a, &b).unwrap().apply(&radial).unwrap();
        let pts = sample_points::<f64>(8, 3, 8, 23);
        assert!(relative_deviation(&image.eval_many(&pts), &radial.eval_many(&pts)) < 1e-12);
    }

    #[test]
    fn kappa_rejects_other_families() {
        let a = build_htype::<f64>(3, 2, 0).unwrap();
        let c = build_htype::<f64>(3, 1, 0).unwrap();
        assert!(matches!(kappa(&generic_q(8), 1, 0, &a, &c), Err(Error::SignatureMismatch(_))));
    }

    #[test]
    fn norms_restrictions_and_dirichlet() {
        let (a, b) = spaces();
        let q = generic_q(8);
        let map = kappa(&q, 1, 0, &a, &b).unwrap();
        let f = fourier_sphere(&q, 1, 0, 1.0, &profile(), &a, false).unwrap();
        let pts = sample_points::<f64>(8, 3, 16, 29);
        let zs: Vec<Vec<f64>> = pts.iter().take(4).map(|p| p.1.clone()).collect();
        assert!(norm_preservation_defect(&map, &f, &zs).unwrap() < 1e-8);
        assert!(restriction_residual(&map, &f, 1.3, &pts).unwrap() < 1e-8);

        let walled = fourier_sphere(&q, 1, 0, 1.0, &profile().with_dirichlet_factor(1.3), &a, false).unwrap();
        let rep = dirichlet_residual(&map, &walled, 1.3, &pts).unwrap();
        assert!(rep.source_on_boundary < 1e-12 && rep.image_on_boundary < 1e-8, "{rep:?}");
    }

    #[test]
    fn omega_on_mixed_group() {
        let (_, b) = spaces();
        let q = generic_q(8);
        let qt = unit(vec![0.1, -0.4, 0.2, 0.7, -0.3, 0.05, 0.6, -0.2]);
        let map = omega(&q, &qt, 1, 0, &b).unwrap();
        let f = fourier_sphere(&q, 1, 0, 2.0, &profile(), &b, false).unwrap();
        let pts = sample_points::<f64>(8, 3, 64, 31);
        assert!(intertwining_residual(&map, &f, &pts).unwrap() < 1e-8);
        assert!(point_realization_residual(&map, &f, &pts).unwrap() < 1e-12);

        let back = omega(&qt, &q, 1, 0, &b).unwrap();
        assert_eq!(back.apply(&map.apply(&f).unwrap()).unwrap().recipe(), f.recipe());
        let id = omega(&q, &q, 1, 0, &b).unwrap();
        assert!((id.point_map() - &SquareMatrix::identity(8)).max_abs() < 1e-14);
    }

    #[test]
    fn direct_functions_map_through_points() {
        let (a, b) = spaces();
        let q = generic_q(8);
        let map = kappa(&q, 1, 0, &a, &b).unwrap();
        let f = fourier_sphere(&q, 1, 0, 1.0, &profile(), &a, false).unwrap();
        let lap = f.laplacian_direct().unwrap();
        let image = map.apply(&lap).unwrap();
        assert!(image.recipe().is_none());
        assert!(image.laplacian_direct().is_err());
    }

    #[test]
    fn theta_family_spans_holomorphic_products() {
        let s = build_htype::<f64>(3, 1, 0).unwrap();
        let qs: Vec<Vec<f64>> = (0..12)
            .map(|i| unit((0..4).map(|j| ((i * 7 + j * 3) % 11) as f64 - 5.0 + 0.1 * j as f64).collect()))
            .collect();
        let v = unit(vec![0.3, -0.5, 0.8]);
        // Θ_Q runs over a k/2-dimensional space of linear forms.
        assert_eq!(theta_family_rank(&qs, 1, 0, &v, &s).unwrap(), 2);
        assert_eq!(theta_family_rank(&qs, 1, 1, &v, &s).unwrap(), 4);
        assert_eq!(theta_family_rank(&qs, 2, 0, &v, &s).unwrap(), 3);
    }

    #[test]
    fn galerkin_levels_and_isospectrality() {
        let (a, b) = spaces();
        let z = [0.0, 0.0, 1.0];
        let rep = isospec_check(&a, &b, &z, 3).unwrap();
        assert!(rep.gap < 1e-8, "gap {}", rep.gap);
        assert!(rep.closure_defect < 1e-10);
        let spec = galerkin_spectrum(&a, &z, 3).unwrap();
        assert!(level_defect(&spec, 8, 3) < 1e-8);
        assert!(spec.hermiticity_defect < 1e-12);
        assert_eq!(spec.eigenvalues.len(), 165);
        let same = isospec_check(&a, &a, &z, 3).unwrap();
        assert!(same.gap < 1e-12);
    }

    #[test]
    fn galerkin_generic_direction() {
        let (a, b) = spaces();
        let z = [0.3, -0.2, 0.4];
        let rep = isospec_check(&a, &b, &z, 2).unwrap();
        assert!(rep.gap < 1e-8);
    }

    #[test]
    fn negative_control_differs() {
        let s = build_htype::<f64>(1, 1, 0).unwrap();
        let rep = isospec_compare(&s, &[0.5], &s, &[1.0], 4).unwrap();
        assert!(rep.gap > 0.1);
    }

    #[test]
    fn galerkin_degree_budget() {
        let (a, _) = spaces();
        assert!(matches!(galerkin_spectrum(&a, &[0.0, 0.0, 1.0], 11), Err(Error::BudgetExceeded(_))));
        assert!(galerkin_spectrum(&a, &[0.0, 0.0, 0.0], 2).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn kappa_point_map_carries_frame(seed in 0u64..1000) {
            let (a, b) = spaces();
            let (x, _) = sample_points::<f64>(8, 3, 1, seed).remove(0);
            let q = unit(x);
            let map = kappa(&q, 1, 0, &a, &b).unwrap();
            prop_assert!(map.orthogonality_defect() < 1e-12);
            let k = map.point_map();
            let kq = k.apply(&q);
            prop_assert!(kq.iter().zip(&q).all(|(u, v)| (u - v).abs() < 1e-12));
            for (j, jp) in a.basis().iter().zip(b.basis()) {
                let lhs = k.apply(&j.apply(&q));
                let rhs = jp.apply(&q);
                prop_assert!(lhs.iter().zip(&rhs).all(|(u, v)| (u - v).abs() < 1e-12));
            }
        }

        #[test]
        fn dim_counts_symmetric(p in 0usize..5, q in 0usize..5, k in 1usize..9) {
            let (a, _) = dim_counts(p, q, p + q, k);
            let (b, _) = dim_counts(q, p, p + q, k);
            prop_assert_eq!(a, b);
        }
    }
}
