//! Zeeman operators Box_γ and Box_λ acting exactly on polynomial × Gaussian
//! functions, their eigenfunctions and the enumerated spectrum.
//!
//! Complex coordinates are z_j = x_{2j−1} + i·x_{2j}; with J e₁ = e₂ the
//! derivation D_J• multiplies z_j by i and z̄_j by −i, so the magnetic moment
//! −i·D_J• has eigenvalue p − υ on bidegree (p, υ).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hgroup::{build_htype, EndomorphismSpace, SquareMatrix};
use crate::numerics::GaussianMoments;
use crate::polyalg::{harmonic_project, magnetic_moment, ComplexPolynomial};
use crate::scalar::{cx, imag_unit, re, Cx, Real};
use crate::special::binomial;

/// P(X)·e^{−λ|X|²/2}.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPoly<T: Real> {
    poly: ComplexPolynomial<T>,
    lambda: T,
}

impl<T: Real> GaussianPoly<T> {
    pub fn new(poly: ComplexPolynomial<T>, lambda: T) -> Result<Self> {
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidInput(format!("envelope rate must be positive, got {lambda}")));
        }
        Ok(Self { poly, lambda })
    }

    /// The bare envelope e^{−λ|X|²/2}.
    pub fn ground(k: usize, lambda: T) -> Result<Self> {
        Self::new(ComplexPolynomial::one(k), lambda)
    }

    pub fn poly(&self) -> &ComplexPolynomial<T> {
        &self.poly
    }

    pub fn into_poly(self) -> ComplexPolynomial<T> {
        self.poly
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn k(&self) -> usize {
        self.poly.dim()
    }

    pub fn eval(&self, x: &[T]) -> Cx<T> {
        let r2 = x.iter().fold(T::zero(), |acc, &v| acc + v * v);
        self.poly.eval(x) * (-self.lambda * r2 / T::lit(2.0)).exp()
    }

    fn with_poly(&self, poly: ComplexPolynomial<T>) -> Self {
        Self { poly, lambda: self.lambda }
    }

    fn check_rate(&self, other: &Self) -> Result<()> {
        if (self.lambda - other.lambda).abs() > T::epsilon() * T::lit(16.0) * self.lambda {
            return Err(Error::InvalidInput(format!("envelope rates differ: {} vs {}", self.lambda, other.lambda)));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_rate(other)?;
        Ok(self.with_poly(self.poly.add(&other.poly)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_rate(other)?;
        Ok(self.with_poly(self.poly.sub(&other.poly)))
    }

    pub fn scale(&self, s: Cx<T>) -> Self {
        self.with_poly(self.poly.scale(s))
    }

    /// Δ_X(P g) = g·[ΔP − 2λ X·∇P + P(λ²|X|² − kλ)].
    pub fn laplacian(&self) -> Self {
        let k = self.k();
        let lam = self.lambda;
        let r2 = ComplexPolynomial::squared_norm(k);
        let euler = self.poly.euler().scale_real(-(lam + lam));
        let pot = self.poly.mul(&r2).scale_real(lam * lam);
        let shift = self.poly.scale_real(-lam * T::from_usize_exact(k));
        self.with_poly(self.poly.laplacian().add(&euler).add(&pot).add(&shift))
    }

    /// Multiplication by a polynomial.
    pub fn mul_poly(&self, q: &ComplexPolynomial<T>) -> Self {
        self.with_poly(self.poly.mul(q))
    }

    pub fn mul_r2(&self) -> Self {
        self.mul_poly(&ComplexPolynomial::squared_norm(self.k()))
    }

    /// Derivative along the linear field X ↦ M X. For skew M the radial
    /// envelope is annihilated, so only the polynomial part moves.
    pub fn derivation_skew(&self, m: &SquareMatrix<T>) -> Self {
        self.with_poly(self.poly.derivation_along(m))
    }

    /// ‖f‖² in L²(R^k).
    pub fn norm_sq(&self) -> T {
        let maxp = self.poly.terms().flat_map(|(e, _)| e.iter().copied()).max().unwrap_or(0) as usize;
        GaussianMoments::new(self.lambda, 2 * maxp + 1).inner(&self.poly, &self.poly).re
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    /// ⟨f, g⟩ in L²(R^k).
    pub fn inner(&self, other: &Self) -> Result<Cx<T>> {
        self.check_rate(other)?;
        let maxp = self.poly.terms().chain(other.poly.terms()).flat_map(|(e, _)| e.iter().copied()).max().unwrap_or(0)
            as usize;
        Ok(GaussianMoments::new(self.lambda, 2 * maxp + 1).inner(&self.poly, &other.poly))
    }

    pub fn to_exp_poly(&self) -> ExpPoly<T> {
        let k = self.k();
        ExpPoly::new(self.poly.clone(), ComplexPolynomial::squared_norm(k).scale_real(-self.lambda / T::lit(2.0)))
    }
}

/// P(X)·exp(Q(X)) with complex polynomials P and Q, deg Q ≤ 2. Closed under
/// the magnetic operators, and the carrier for kernel closed forms.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpPoly<T: Real> {
    poly: ComplexPolynomial<T>,
    exponent: ComplexPolynomial<T>,
}

impl<T: Real> ExpPoly<T> {
    pub fn new(poly: ComplexPolynomial<T>, exponent: ComplexPolynomial<T>) -> Self {
        assert_eq!(poly.dim(), exponent.dim());
        Self { poly, exponent }
    }

    pub fn poly(&self) -> &ComplexPolynomial<T> {
        &self.poly
    }

    pub fn exponent(&self) -> &ComplexPolynomial<T> {
        &self.exponent
    }

    pub fn dim(&self) -> usize {
        self.poly.dim()
    }

    pub fn eval(&self, x: &[T]) -> Cx<T> {
        self.poly.eval(x) * self.exponent.eval(x).exp()
    }

    fn with_poly(&self, poly: ComplexPolynomial<T>) -> Self {
        Self { poly, exponent: self.exponent.clone() }
    }

    pub fn scale(&self, s: Cx<T>) -> Self {
        self.with_poly(self.poly.scale(s))
    }

    pub fn mul_poly(&self, q: &ComplexPolynomial<T>) -> Self {
        self.with_poly(self.poly.mul(q))
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self { poly: self.poly.mul(&other.poly), exponent: self.exponent.add(&other.exponent) }
    }

    /// Sum of two functions sharing an exponent.
    pub fn add_same_exponent(&self, other: &Self) -> Result<Self> {
        if self.exponent.distance(&other.exponent)
            > T::epsilon() * T::lit(64.0) * (T::one() + self.exponent.max_coefficient())
        {
            return Err(Error::InvalidInput("exponents differ".into()));
        }
        Ok(self.with_poly(self.poly.add(&other.poly)))
    }

    pub fn derivative(&self, j: usize) -> Self {
        let dp = self.poly.derivative(j);
        let dq = self.exponent.derivative(j);
        self.with_poly(dp.add(&self.poly.mul(&dq)))
    }

    /// Δ(P e^Q) = (ΔP + 2∇P·∇Q + P(ΔQ + ∇Q·∇Q)) e^Q.
    pub fn laplacian(&self) -> Self {
        let mut out = self.poly.laplacian();
        let mut grad_sq = self.exponent.laplacian();
        for j in 0..self.dim() {
            let dq = self.exponent.derivative(j);
            out = out.add(&self.poly.derivative(j).mul(&dq).scale_real(T::lit(2.0)));
            grad_sq = grad_sq.add(&dq.mul(&dq));
        }
        self.with_poly(out.add(&self.poly.mul(&grad_sq)))
    }

    /// Derivative along the linear field X ↦ M X.
    pub fn derivation(&self, m: &SquareMatrix<T>) -> Self {
        let dp = self.poly.derivation_along(m);
        let dq = self.exponent.derivation_along(m);
        self.with_poly(dp.add(&self.poly.mul(&dq)))
    }
}

/// Δ_X + 2i·D_F• − V(X) − c with F a skew field (λJ or πJ_{Z_γ}),
/// V = |F X|² and c the additive constant.
#[derive(Clone, Debug)]
pub struct MagneticOperator<T: Real> {
    field: SquareMatrix<T>,
    potential: ComplexPolynomial<T>,
    constant: T,
}

impl<T: Real> MagneticOperator<T> {
    /// Box_λ for the single complex structure of an l = 1 space.
    pub fn box_lambda(space: &EndomorphismSpace<T>, lambda: T, include_constant: bool) -> Result<Self> {
        if space.center_dim() != 1 {
            return Err(Error::InvalidInput(
                "Box_λ needs a single complex structure (l = 1); use box_gamma_apply".into(),
            ));
        }
        let k = space.x_dim();
        let c = if include_constant { T::lit(4.0) * lambda * lambda } else { T::zero() };
        Ok(Self {
            field: space.basis()[0].scale(lambda),
            potential: ComplexPolynomial::squared_norm(k).scale_real(lambda * lambda),
            constant: c,
        })
    }

    /// Box_γ = Δ_X + 2πi D_γ• − 4π²|Z_γ|²(1 + |X|²/4).
    pub fn box_gamma(space: &EndomorphismSpace<T>, z_gamma: &[T]) -> Result<Self> {
        let k = space.x_dim();
        let pi = T::PI();
        let zz = z_gamma.iter().fold(T::zero(), |acc, &z| acc + z * z);
        Ok(Self {
            field: space.j_of(z_gamma)?.scale(pi),
            potential: ComplexPolynomial::squared_norm(k).scale_real(pi * pi * zz),
            constant: T::lit(4.0) * pi * pi * zz,
        })
    }

    /// Box for independent blocks (λ_i, k_i) with the standard complex
    /// structure on each block.
    pub fn from_blocks(blocks: &[(T, usize)], include_constant: bool) -> Result<Self> {
        let mut structured = Vec::new();
        for &(lam, ki) in blocks {
            if ki == 0 || ki % 2 == 1 {
                return Err(Error::InvalidInput(format!("block dimension must be even and positive, got {ki}")));
            }
            structured.push((lam, standard_complex_structure::<T>(ki)));
        }
        Self::from_structures(&structured, include_constant)
    }

    /// Box for independent blocks (λ_i, J_i), J_i an orthogonal complex
    /// structure on the i-th coordinate block.
    pub fn from_structures(blocks: &[(T, SquareMatrix<T>)], include_constant: bool) -> Result<Self> {
        let k: usize = blocks.iter().map(|b| b.1.dim()).sum();
        let mut mats = Vec::new();
        let mut potential = ComplexPolynomial::zero(k);
        let mut offset = 0;
        for (lam, j) in blocks {
            let ki = j.dim();
            mats.push(j.scale(*lam));
            potential =
                potential.add(&ComplexPolynomial::squared_norm_on(k, offset..offset + ki).scale_real(*lam * *lam));
            offset += ki;
        }
        let constant = match (include_constant, blocks) {
            (false, _) => T::zero(),
            (true, [(lam, _)]) => T::lit(4.0) * *lam * *lam,
            (true, _) => {
                return Err(Error::InvalidInput("the additive constant is only defined for a single λ".into()));
            }
        };
        Ok(Self { field: SquareMatrix::block_diagonal(&mats), potential, constant })
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn constant(&self) -> T {
        self.constant
    }

    pub fn apply(&self, f: &GaussianPoly<T>) -> GaussianPoly<T> {
        let two_i = imag_unit::<T>() * T::lit(2.0);
        let lap = f.laplacian();
        let rot = f.derivation_skew(&self.field).scale(two_i);
        let pot = f.mul_poly(&self.potential).scale(re(-T::one()));
        let shift = f.scale(re(-self.constant));
        GaussianPoly { poly: lap.poly.add(&rot.poly).add(&pot.poly).add(&shift.poly), lambda: f.lambda }
    }

    pub fn apply_exp(&self, f: &ExpPoly<T>) -> ExpPoly<T> {
        let two_i = imag_unit::<T>() * T::lit(2.0);
        let lap = f.laplacian();
        let rot = f.derivation(&self.field).scale(two_i);
        let pot = f.mul_poly(&self.potential).scale(re(-T::one()));
        let shift = f.scale(re(-self.constant));
        ExpPoly::new(lap.poly.add(&rot.poly).add(&pot.poly).add(&shift.poly), f.exponent.clone())
    }

    /// H = −½·Box.
    pub fn hamiltonian_exp(&self, f: &ExpPoly<T>) -> ExpPoly<T> {
        self.apply_exp(f).scale(re(-T::lit(0.5)))
    }
}

/// Block-diagonal J with J e_{2j−1} = e_{2j} on R^k.
pub fn standard_complex_structure<T: Real>(k: usize) -> SquareMatrix<T> {
    assert!(k.is_multiple_of(2) && k > 0, "complex structure needs even dimension");
    build_htype::<T>(1, k / 2, 0).expect("l = 1 is supported").basis()[0].clone()
}

/// (Δ_X + 2i λ D_J• − λ²|X|² − 4λ²·[flag]) f.
pub fn box_lambda_apply<T: Real>(
    f: &GaussianPoly<T>,
    lambda: T,
    space: &EndomorphismSpace<T>,
    include_constant: bool,
) -> Result<GaussianPoly<T>> {
    if (f.lambda - lambda).abs() > T::lit(1e-12) * lambda {
        return Err(Error::InvalidInput(format!("envelope rate {} does not match λ = {lambda}", f.lambda)));
    }
    if f.k() != space.x_dim() {
        return Err(Error::DimensionMismatch { expected: space.x_dim(), got: f.k() });
    }
    Ok(MagneticOperator::box_lambda(space, lambda, include_constant)?.apply(f))
}

/// (Δ_X + 2πi D_γ• − 4π²|Z_γ|²(1 + |X|²/4)) f. Any envelope rate is
/// accepted; the rate π|Z_γ| keeps the polynomial degree unchanged.
pub fn box_gamma_apply<T: Real>(
    f: &GaussianPoly<T>,
    z_gamma: &[T],
    space: &EndomorphismSpace<T>,
) -> Result<GaussianPoly<T>> {
    if f.k() != space.x_dim() {
        return Err(Error::DimensionMismatch { expected: space.x_dim(), got: f.k() });
    }
    Ok(MagneticOperator::box_gamma(space, z_gamma)?.apply(f))
}

/// Envelope rate that matches Box_γ: π|Z_γ|.
pub fn gamma_rate<T: Real>(z_gamma: &[T]) -> T {
    T::PI() * z_gamma.iter().fold(T::zero(), |acc, &z| acc + z * z).sqrt()
}

/// Applies the group Laplacian Δ = Δ_X + (1 + |X|²/4)Δ_Z + Σ_α ∂_α D_α• to
/// F(X, Z) = f(X)·e^{2πi⟨Z_γ, Z⟩} term by term and returns the X-factor.
pub fn full_laplacian_apply<T: Real>(
    f: &GaussianPoly<T>,
    z_gamma: &[T],
    space: &EndomorphismSpace<T>,
) -> Result<GaussianPoly<T>> {
    let l = space.center_dim();
    if z_gamma.len() != l {
        return Err(Error::DimensionMismatch { expected: l, got: z_gamma.len() });
    }
    let k = f.k();
    let two_pi = T::PI() * T::lit(2.0);
    // Z-frequencies of e^{i⟨ζ, Z⟩}: ∂_α ↦ iζ_α, Δ_Z ↦ −|ζ|².
    let zeta: Vec<T> = z_gamma.iter().map(|&z| two_pi * z).collect();
    let zeta_sq = zeta.iter().fold(T::zero(), |acc, &z| acc + z * z);
    let mut out = f.laplacian();
    let quarter_r2 = ComplexPolynomial::squared_norm(k).scale_real(T::lit(0.25));
    let weight = ComplexPolynomial::one(k).add(&quarter_r2);
    out = out.add(&f.mul_poly(&weight).scale(re(-zeta_sq)))?;
    for (alpha, j) in space.basis().iter().enumerate() {
        let d = f.derivation_skew(j).scale(cx(T::zero(), zeta[alpha]));
        out = out.add(&d)?;
    }
    Ok(out)
}

/// Eigenvalue constant convention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstantMode {
    /// 4λ², the constant the operator produces.
    Derived,
    /// 4kλ², the constant scaled by the field dimension.
    Scaled,
}

/// Box_λ eigenvalue at holomorphic degree p.
pub fn eigenvalue<T: Real>(p: usize, k: usize, lambda: T, include_constant: bool, mode: ConstantMode) -> T {
    let base = T::from_usize_exact(4 * p + k) * lambda;
    let constant = if !include_constant {
        T::zero()
    } else {
        match mode {
            ConstantMode::Derived => T::lit(4.0) * lambda * lambda,
            ConstantMode::Scaled => T::lit(4.0) * T::from_usize_exact(k) * lambda * lambda,
        }
    };
    -(base + constant)
}

/// Energy of H_Z = −½Box without the constant: (2p + k/2)λ.
pub fn level_energy<T: Real>(p: usize, k: usize, lambda: T) -> T {
    (T::from_usize_exact(2 * p) + T::from_usize_exact(k) / T::lit(2.0)) * lambda
}

/// z_j (or z̄_j when `conj`) as a polynomial on R^k, j zero-based.
pub fn complex_coordinate<T: Real>(k: usize, j: usize, conj: bool) -> ComplexPolynomial<T> {
    assert!(2 * j + 1 < k, "complex coordinate index out of range");
    let s = if conj { -T::one() } else { T::one() };
    let mut coeffs = vec![re(T::zero()); k];
    coeffs[2 * j] = re(T::one());
    coeffs[2 * j + 1] = cx(T::zero(), s);
    ComplexPolynomial::linear(&coeffs)
}

/// Complex Hermite polynomial in the j-th coordinate:
/// H_{p,q} = Σ_i (−1)^i i! C(p,i) C(q,i) λ^{−i} z^{p−i} z̄^{q−i}.
pub fn complex_hermite<T: Real>(k: usize, j: usize, p: usize, q: usize, lambda: T) -> ComplexPolynomial<T> {
    let z = complex_coordinate::<T>(k, j, false);
    let zb = complex_coordinate::<T>(k, j, true);
    let mut out = ComplexPolynomial::zero(k);
    let mut fact = T::one();
    for i in 0..=p.min(q) {
        if i > 0 {
            fact *= T::from_usize_exact(i);
        }
        let sign = if i % 2 == 0 { T::one() } else { -T::one() };
        let c = sign * fact * T::lit((binomial(p as u64, i as u64) * binomial(q as u64, i as u64)) as f64)
            / lambda.powi(i as i32);
        out = out.add(&z.pow(p - i).mul(&zb.pow(q - i)).scale_real(c));
    }
    out
}

/// Landau eigenfunction Π_j H_{p_j,q_j}(z_j)·e^{−λ|X|²/2}: holomorphic
/// degree |p|, antiholomorphic degree |q|, Box_λ eigenvalue depending on |p|.
pub fn landau_eigenfunction<T: Real>(p: &[usize], q: &[usize], lambda: T) -> Result<GaussianPoly<T>> {
    if p.len() != q.len() || p.is_empty() {
        return Err(Error::InvalidInput("holomorphic and antiholomorphic index lists must match".into()));
    }
    let k = 2 * p.len();
    let mut poly = ComplexPolynomial::one(k);
    for (j, (&pj, &qj)) in p.iter().zip(q).enumerate() {
        poly = poly.mul(&complex_hermite(k, j, pj, qj, lambda));
    }
    GaussianPoly::new(poly, lambda)
}

/// H·e^{−λ|X|²/2} for H harmonic, homogeneous of degree p + υ and of
/// bidegree (p, υ) under J.
pub fn eigenfunction<T: Real>(
    p: usize,
    upsilon: usize,
    h: &ComplexPolynomial<T>,
    lambda: T,
    j: &SquareMatrix<T>,
) -> Result<GaussianPoly<T>> {
    if h.is_zero() {
        return Err(Error::InvalidInput("zero polynomial is not an eigenfunction".into()));
    }
    if !h.is_homogeneous() {
        return Err(Error::NotHomogeneous);
    }
    if h.degree() != Some(p + upsilon) {
        return Err(Error::WrongBidegree { p, upsilon });
    }
    let scale = h.max_coefficient();
    let lap = h.laplacian();
    let tol = T::lit(1e-10) * scale;
    if lap.max_coefficient() > tol {
        return Err(Error::NotHarmonic(lap.max_coefficient().as_f64()));
    }
    let m = T::from_usize_exact(p) - T::from_usize_exact(upsilon);
    let defect = magnetic_moment(h, j).sub(&h.scale_real(m));
    if defect.max_coefficient() > tol {
        return Err(Error::WrongBidegree { p, upsilon });
    }
    GaussianPoly::new(h.clone(), lambda)
}

/// Harmonic polynomial of bidegree (p, υ) built as Π_X(z_1^p z̄_2^υ) (or
/// z_1^p z̄_1^υ when k = 2, which is harmonic only if pυ = 0).
pub fn harmonic_bidegree<T: Real>(k: usize, p: usize, upsilon: usize) -> Result<ComplexPolynomial<T>> {
    let second = if k >= 4 { 1 } else { 0 };
    let raw = complex_coordinate::<T>(k, 0, false).pow(p).mul(&complex_coordinate::<T>(k, second, true).pow(upsilon));
    harmonic_project(&raw)
}

/// Multiplicity of a level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Multiplicity {
    Finite(u64),
    /// Infinite multiplicity of a level on the whole space.
    Divergent,
}

impl Serialize for Multiplicity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Multiplicity::Finite(n) => s.serialize_u64(*n),
            Multiplicity::Divergent => s.serialize_str("inf"),
        }
    }
}

/// Zone selector for spectra and kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZoneSelector {
    Global,
    Gross(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumLine {
    #[serde(rename = "E")]
    pub e: f64,
    pub p: usize,
    pub upsilon: Option<usize>,
    pub l: Option<usize>,
    pub m: Option<i64>,
    pub mult: Multiplicity,
}

/// Spectrum lines ordered from the ground state upward (E decreasing).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumTable {
    pub lines: Vec<SpectrumLine>,
}

impl SpectrumTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("E,p,upsilon,l,m,mult\n");
        let opt = |v: Option<String>| v.unwrap_or_else(|| "*".into());
        for line in &self.lines {
            let mult = match line.mult {
                Multiplicity::Finite(n) => n.to_string(),
                Multiplicity::Divergent => "inf".into(),
            };
            out.push_str(&format!(
                "{:.16e},{},{},{},{},{}\n",
                line.e,
                line.p,
                opt(line.upsilon.map(|v| v.to_string())),
                opt(line.l.map(|v| v.to_string())),
                opt(line.m.map(|v| v.to_string())),
                mult
            ));
        }
        out
    }
}

/// Multiplicity of level p on gross zone a: C(a+k/2−1, a)·C(p+k/2−1, p).
pub fn zone_multiplicity(a: usize, p: usize, k: usize) -> u64 {
    let n = (k / 2) as u64;
    binomial(a as u64 + n - 1, a as u64) * binomial(p as u64 + n - 1, p as u64)
}

/// Levels with |E| ≤ e_max.
pub fn spectrum<T: Real>(
    zone: ZoneSelector,
    k: usize,
    lambda: T,
    e_max: T,
    include_constant: bool,
    mode: ConstantMode,
) -> Result<SpectrumTable> {
    if k == 0 || k % 2 == 1 {
        return Err(Error::InvalidInput(format!("k must be even and positive, got {k}")));
    }
    if !(lambda > T::zero()) {
        return Err(Error::InvalidInput(format!("λ must be positive, got {lambda}")));
    }
    if !e_max.is_finite() {
        return Err(Error::InvalidInput("E_max must be finite".into()));
    }
    let mut lines = Vec::new();
    let mut p = 0usize;
    loop {
        let e = eigenvalue(p, k, lambda, include_constant, mode);
        if e.abs() > e_max {
            break;
        }
        let line = match zone {
            ZoneSelector::Global => {
                SpectrumLine { e: e.as_f64(), p, upsilon: None, l: None, m: None, mult: Multiplicity::Divergent }
            }
            ZoneSelector::Gross(a) => SpectrumLine {
                e: e.as_f64(),
                p,
                upsilon: Some(a),
                l: Some(p + a),
                m: Some(p as i64 - a as i64),
                mult: Multiplicity::Finite(zone_multiplicity(a, p, k)),
            },
        };
        lines.push(line);
        p += 1;
    }
    Ok(SpectrumTable { lines })
}

/// ‖Box h − E h‖/‖h‖ in L²(R^k).
pub fn eigen_residual<T: Real>(op: &MagneticOperator<T>, h: &GaussianPoly<T>, e: T) -> T {
    let image = op.apply(h);
    let diff = GaussianPoly { poly: image.poly.sub(&h.poly.scale_real(e)), lambda: h.lambda };
    diff.norm() / h.norm()
}

/// Rayleigh quotient ⟨Box h, h⟩/⟨h, h⟩.
pub fn rayleigh<T: Real>(op: &MagneticOperator<T>, h: &GaussianPoly<T>) -> Cx<T> {
    let image = op.apply(h);
    image.inner(h).expect("same envelope") / re(h.norm_sq())
}
