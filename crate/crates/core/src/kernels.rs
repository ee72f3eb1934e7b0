//! Wiener–Kac (heat) and Dirac–Feynman (Schrödinger) kernels of
//! H_Z = −½·Box, globally and on the gross zones, their partition functions
//! and the identities they satisfy.
//!
//! Every formula is written through a complex time τ: τ = t for e^{−tH} and
//! τ = i·t for e^{−itH}. Level p of any zone has energy E_p = Σ_j λ_j(2p_j + 1)
//! summed over complex coordinates, so the zonal kernels are
//! d^(a)(τ, X, Y) = Σ e^{−τE} h(X) conj(h(Y)) over the zone's Landau functions.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hgroup::SquareMatrix;
use crate::numerics::{complex_gaussian_integral, gauss_hermite_anisotropic};
use crate::polyalg::ComplexPolynomial;
use crate::scalar::{cx, imag_unit, re, CompensatedSum, Cx, Real};
use crate::special::{binomial, laguerre, laguerre_coefficients};
use crate::zeeman::{standard_complex_structure, ExpPoly, MagneticOperator, ZoneSelector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    /// Heat flow e^{−tH}.
    Wk,
    /// Schrödinger flow e^{−itH}.
    Df,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    EigenSum,
}

/// Field block: rate λ_i and an orthogonal complex structure J_i.
#[derive(Clone, Debug)]
pub struct Block<T: Real> {
    lambda: T,
    j: SquareMatrix<T>,
    /// Rows f_1, J f_1, f_2, J f_2, … of an orthonormal J-frame.
    frame: SquareMatrix<T>,
}

impl<T: Real> Block<T> {
    pub fn new(lambda: T, j: SquareMatrix<T>) -> Result<Self> {
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidInput(format!("block rate must be positive, got {lambda}")));
        }
        let k = j.dim();
        if k == 0 || k % 2 == 1 {
            return Err(Error::InvalidInput(format!("block dimension must be even and positive, got {k}")));
        }
        let sq = &j * &j;
        let skew = &j + &j.transpose();
        let defect = (&sq + &SquareMatrix::identity(k)).max_abs().max(skew.max_abs());
        if defect > T::lit(1e-10) {
            return Err(Error::InvalidInput(format!("J must be skew with J² = −1 (defect {:e})", defect.as_f64())));
        }
        let frame = complex_frame(&j);
        Ok(Self { lambda, j, frame })
    }

    pub fn standard(lambda: T, k: usize) -> Result<Self> {
        if k == 0 || k % 2 == 1 {
            return Err(Error::InvalidInput(format!("block dimension must be even and positive, got {k}")));
        }
        Self::new(lambda, standard_complex_structure(k))
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.j.dim()
    }

    pub fn structure(&self) -> &SquareMatrix<T> {
        &self.j
    }

    /// Complex coordinates z_m = ⟨x, f_{2m−1}⟩ + i⟨x, J f_{2m−1}⟩.
    fn complex_coordinates(&self, x: &[T]) -> Vec<Cx<T>> {
        let f = self.frame.apply(x);
        f.chunks(2).map(|c| cx(c[0], c[1])).collect()
    }

    /// ⟨x, y⟩ + i⟨x, J y⟩ = Σ z_m conj(w_m).
    fn pairing(&self, x: &[T], y: &[T]) -> Cx<T> {
        let jy = self.j.apply(y);
        cx(dot(x, y), dot(x, &jy))
    }
}

fn complex_frame<T: Real>(j: &SquareMatrix<T>) -> SquareMatrix<T> {
    let k = j.dim();
    let mut rows: Vec<Vec<T>> = Vec::with_capacity(k);
    for start in 0..k {
        if rows.len() == k {
            break;
        }
        let mut v = vec![T::zero(); k];
        v[start] = T::one();
        for _ in 0..2 {
            for r in &rows {
                let c = dot(&v, r);
                for (vi, ri) in v.iter_mut().zip(r) {
                    *vi -= c * *ri;
                }
            }
        }
        let n = dot(&v, &v).sqrt();
        if n < T::lit(1e-6) {
            continue;
        }
        let v: Vec<T> = v.iter().map(|&a| a / n).collect();
        let jv = j.apply(&v);
        rows.push(v);
        rows.push(jv);
    }
    SquareMatrix::from_rows(&rows)
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + (*x - *y) * (*x - *y))
}

/// Blocks, flow kind, zone and the additive-constant switch.
#[derive(Clone, Debug)]
pub struct KernelParams<T: Real> {
    blocks: Vec<Block<T>>,
    offsets: Vec<usize>,
    kind: KernelKind,
    zone: ZoneSelector,
    include_constant: bool,
}

impl<T: Real> KernelParams<T> {
    pub fn new(blocks: Vec<Block<T>>, kind: KernelKind, zone: ZoneSelector) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidInput("at least one block is required".into()));
        }
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut k = 0;
        for b in &blocks {
            offsets.push(k);
            k += b.dim();
        }
        Ok(Self { blocks, offsets, kind, zone, include_constant: false })
    }

    /// Blocks (λ_i, k_i) with standard complex structures.
    pub fn standard(blocks: &[(T, usize)], kind: KernelKind, zone: ZoneSelector) -> Result<Self> {
        let blocks = blocks.iter().map(|&(l, k)| Block::standard(l, k)).collect::<Result<Vec<_>>>()?;
        Self::new(blocks, kind, zone)
    }

    pub fn single(k: usize, lambda: T, kind: KernelKind, zone: ZoneSelector) -> Result<Self> {
        Self::standard(&[(lambda, k)], kind, zone)
    }

    /// Adds the constant 4λ² of Box (a factor e^{−2λ²τ}); one block only.
    pub fn with_constant(mut self, include_constant: bool) -> Result<Self> {
        if include_constant && self.blocks.len() != 1 {
            return Err(Error::InvalidInput("the additive constant is only defined for a single λ".into()));
        }
        self.include_constant = include_constant;
        Ok(self)
    }

    pub fn with_kind(mut self, kind: KernelKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_zone(mut self, zone: ZoneSelector) -> Self {
        self.zone = zone;
        self
    }

    pub fn blocks(&self) -> &[Block<T>] {
        &self.blocks
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn zone(&self) -> ZoneSelector {
        self.zone
    }

    pub fn include_constant(&self) -> bool {
        self.include_constant
    }

    /// Total dimension k = Σ k_i.
    pub fn k(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).sum()
    }

    /// H = −½·Box for these blocks, as an exact operator on ExpPoly.
    pub fn operator(&self) -> Result<MagneticOperator<T>> {
        let structured: Vec<(T, SquareMatrix<T>)> = self.blocks.iter().map(|b| (b.lambda, b.j.clone())).collect();
        MagneticOperator::from_structures(&structured, self.include_constant)
    }

    fn slice<'a>(&self, i: usize, x: &'a [T]) -> &'a [T] {
        &x[self.offsets[i]..self.offsets[i] + self.blocks[i].dim()]
    }

    fn tau(&self, t: T) -> Cx<T> {
        match self.kind {
            KernelKind::Wk => re(t),
            KernelKind::Df => cx(T::zero(), t),
        }
    }

    fn constant_factor(&self, tau: Cx<T>) -> Cx<T> {
        if self.include_constant {
            let l = self.blocks[0].lambda;
            (-tau * (T::lit(2.0) * l * l)).exp()
        } else {
            re(T::one())
        }
    }

    fn check_points(&self, x: &[T], y: &[T]) -> Result<()> {
        let k = self.k();
        for p in [x, y] {
            if p.len() != k {
                return Err(Error::DimensionMismatch { expected: k, got: p.len() });
            }
        }
        Ok(())
    }

    fn check_time(&self, t: T) -> Result<()> {
        if !t.is_finite() || (self.kind == KernelKind::Wk && t < T::zero()) {
            return Err(Error::NonPositiveTime(t.as_f64()));
        }
        Ok(())
    }

    fn check_pole(&self, t: T) -> Result<()> {
        for b in &self.blocks {
            if (b.lambda * t).sin().abs() < T::lit(1e-6) {
                return Err(Error::Pole { lambda: b.lambda.as_f64(), t: t.as_f64() });
            }
        }
        Ok(())
    }

    fn complex_coordinates(&self, x: &[T]) -> Vec<(T, Cx<T>)> {
        let mut out = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            for z in b.complex_coordinates(self.slice(i, x)) {
                out.push((b.lambda, z));
            }
        }
        out
    }

    fn half_k(&self) -> usize {
        self.k() / 2
    }
}

// ---------------------------------------------------------------------------
// Closed forms, numeric.

/// d^(0)(τ, X, Y) = Π(λ_i e^{−λ_iτ}/π)^{k_i/2} exp Σλ_i(−½(|X_i|²+|Y_i|²) + e^{−2λ_iτ}⟨X_i, Y_i + iJY_i⟩).
fn zone0_tau<T: Real>(p: &KernelParams<T>, tau: Cx<T>, x: &[T], y: &[T]) -> Cx<T> {
    let mut pre = p.constant_factor(tau);
    let mut expo = re(T::zero());
    for (i, b) in p.blocks.iter().enumerate() {
        let (xi, yi) = (p.slice(i, x), p.slice(i, y));
        let q = (-tau * b.lambda).exp();
        pre *= (q * (b.lambda / T::PI())).powi((b.dim() / 2) as i32);
        let half = (dot(xi, xi) + dot(yi, yi)) / T::lit(2.0);
        expo += (b.pairing(xi, yi) * q * q - half) * b.lambda;
    }
    pre * expo.exp()
}

/// Σ_i (1 − s_i)(λ_i(|X_i|² + |Y_i|²) − k_i/2 − λ_i(1 + s_i)⟨X_i, Y_i + iJY_i⟩),
/// s_i = e^{−2λ_iτ}; at λ = 1, k = 2 this is the explicit long term.
fn long_term1_tau<T: Real>(p: &KernelParams<T>, tau: Cx<T>, x: &[T], y: &[T]) -> Cx<T> {
    let mut acc = re(T::zero());
    for (i, b) in p.blocks.iter().enumerate() {
        let (xi, yi) = (p.slice(i, x), p.slice(i, y));
        let s = (-tau * (T::lit(2.0) * b.lambda)).exp();
        let radial = (dot(xi, xi) + dot(yi, yi)) * b.lambda - T::from_usize_exact(b.dim()) / T::lit(2.0);
        let cross = b.pairing(xi, yi) * (s + T::one()) * b.lambda;
        acc += (-s + T::one()) * (-cross + radial);
    }
    acc
}

fn laguerre_argument<T: Real>(p: &KernelParams<T>, x: &[T], y: &[T]) -> T {
    p.blocks.iter().enumerate().fold(T::zero(), |acc, (i, b)| acc + b.lambda * sq_dist(p.slice(i, x), p.slice(i, y)))
}

fn laguerre_alpha<T: Real>(p: &KernelParams<T>) -> T {
    T::from_usize_exact(p.half_k()) - T::one()
}

fn zonal_closed_tau<T: Real>(p: &KernelParams<T>, a: usize, tau: Cx<T>, x: &[T], y: &[T]) -> Result<Cx<T>> {
    let d0 = zone0_tau(p, tau, x, y);
    match a {
        0 => Ok(d0),
        1 => {
            let lag = laguerre(1, laguerre_alpha(p), laguerre_argument(p, x, y));
            Ok((long_term1_tau(p, tau, x, y) + lag) * d0)
        }
        _ => Err(Error::ClosedFormUnavailable(a)),
    }
}

/// Π(λ_i/(2π sinh λ_iτ))^{k_i/2} exp(−Σλ_i(½coth(λ_iτ)|X_i−Y_i|² + i⟨X_i, JY_i⟩)).
fn global_wk_tau<T: Real>(p: &KernelParams<T>, tau: Cx<T>, x: &[T], y: &[T]) -> Cx<T> {
    let mut pre = p.constant_factor(tau);
    let mut expo = re(T::zero());
    for (i, b) in p.blocks.iter().enumerate() {
        let (xi, yi) = (p.slice(i, x), p.slice(i, y));
        let lt = tau * b.lambda;
        let sh = lt.sinh();
        pre *= (re::<T>(b.lambda) / (sh * (T::lit(2.0) * T::PI()))).powi((b.dim() / 2) as i32);
        let coth = lt.cosh() / sh;
        let jy = b.j.apply(yi);
        expo -= (coth * (sq_dist(xi, yi) / T::lit(2.0)) + cx(T::zero(), dot(xi, &jy))) * b.lambda;
    }
    pre * expo.exp()
}

/// The explicit Feynman form Π(λ_i/(2πi sin λ_it))^{k_i/2}
/// exp(iΣλ_i(½cot(λ_it)|X_i−Y_i|² − ⟨X_i, JY_i⟩)), coded directly in t.
fn global_df_explicit<T: Real>(p: &KernelParams<T>, t: T, x: &[T], y: &[T]) -> Cx<T> {
    let mut pre = p.constant_factor(cx(T::zero(), t));
    let mut phase = T::zero();
    for (i, b) in p.blocks.iter().enumerate() {
        let (xi, yi) = (p.slice(i, x), p.slice(i, y));
        let lt = b.lambda * t;
        let denom = cx(T::zero(), T::lit(2.0) * T::PI() * lt.sin());
        pre *= (re::<T>(b.lambda) / denom).powi((b.dim() / 2) as i32);
        let jy = b.j.apply(yi);
        phase += b.lambda * (lt.cos() / lt.sin() * sq_dist(xi, yi) / T::lit(2.0) - dot(xi, &jy));
    }
    pre * cx(T::zero(), phase).exp()
}

/// The explicit zone-0 Feynman kernel, written with cos/sin of λt.
fn zone0_df_explicit<T: Real>(p: &KernelParams<T>, t: T, x: &[T], y: &[T]) -> Cx<T> {
    let mut pre = p.constant_factor(cx(T::zero(), t));
    let mut expo = re(T::zero());
    for (i, b) in p.blocks.iter().enumerate() {
        let (xi, yi) = (p.slice(i, x), p.slice(i, y));
        let lt = b.lambda * t;
        let e1 = cx(lt.cos(), -lt.sin());
        let e2 = cx((lt + lt).cos(), -(lt + lt).sin());
        pre *= (e1 * (b.lambda / T::PI())).powi((b.dim() / 2) as i32);
        let jy = b.j.apply(yi);
        let pair = cx(dot(xi, yi), dot(xi, &jy));
        expo += (e2 * pair - (dot(xi, xi) + dot(yi, yi)) / T::lit(2.0)) * b.lambda;
    }
    pre * expo.exp()
}

// ---------------------------------------------------------------------------
// Eigen-sums over normalized Landau functions.

/// Upper limit on the number of levels any eigen-sum may visit.
pub const MAX_EIGEN_LEVELS: usize = 20_000;

/// Row p ↦ p+1 of the normalized Landau functions:
/// h_{p+1,b} = (√λ z h_{p,b} − √b h_{p,b−1})/√(p+1), envelope included.
fn landau_step<T: Real>(lambda: T, z: Cx<T>, p: usize, row: &[Cx<T>]) -> Vec<Cx<T>> {
    let sl = lambda.sqrt();
    let inv = T::one() / T::from_usize_exact(p + 1).sqrt();
    (0..row.len())
        .map(|b| {
            let mut v = z * row[b] * sl;
            if b > 0 {
                v -= row[b - 1] * T::from_usize_exact(b).sqrt();
            }
            v * inv
        })
        .collect()
}

/// h_{0,b} = √(λ^{b+1}/(π b!)) z̄^b e^{−λ|z|²/2} for b ≤ bmax.
fn landau_row0<T: Real>(lambda: T, z: Cx<T>, bmax: usize) -> Vec<Cx<T>> {
    let mut out = Vec::with_capacity(bmax + 1);
    out.push(re((lambda / T::PI()).sqrt() * (-lambda * z.norm_sqr() / T::lit(2.0)).exp()));
    for b in 1..=bmax {
        let prev = out[b - 1];
        out.push(prev * z.conj() * (lambda / T::from_usize_exact(b)).sqrt());
    }
    out
}

/// Σ_p e^{−τλ(2p+1)} h_{p,b}(z) conj(h_{p,b}(w)) for b ≤ bmax, summed until
/// the terms are negligible past the peak of the Landau functions.
fn level_sum_1d<T: Real>(lambda: T, tau: Cx<T>, z: Cx<T>, w: Cx<T>, bmax: usize) -> Result<Vec<Cx<T>>> {
    let r2 = z.norm_sqr().max(w.norm_sqr());
    let p_min = (lambda * r2).ceil().to_usize().unwrap_or(MAX_EIGEN_LEVELS) + bmax + 8;
    let step = (-tau * (T::lit(2.0) * lambda)).exp();
    let mut weight = (-tau * lambda).exp();
    let mut hz = landau_row0(lambda, z, bmax);
    let mut hw = landau_row0(lambda, w, bmax);
    let mut acc: Vec<CompensatedSum<T>> = (0..=bmax).map(|_| CompensatedSum::new()).collect();
    let mut quiet = 0;
    for p in 0..MAX_EIGEN_LEVELS {
        let mut largest = T::zero();
        for b in 0..=bmax {
            let term = hz[b] * hw[b].conj() * weight;
            acc[b].add(term);
            largest = largest.max(term.norm());
        }
        let scale = acc.iter().fold(T::min_positive_value(), |m, s| m.max(s.value().norm()));
        quiet = if largest <= T::epsilon() * T::lit(0.01) * scale { quiet + 1 } else { 0 };
        if p >= p_min && quiet >= 8 {
            return Ok(acc.iter().map(|s| s.value()).collect());
        }
        hz = landau_step(lambda, z, p, &hz);
        hw = landau_step(lambda, w, p, &hw);
        weight *= step;
    }
    Err(Error::BudgetExceeded(format!("eigen-sum did not settle within {MAX_EIGEN_LEVELS} levels")))
}

/// Zonal kernel as an eigen-sum: Σ over β with |β| = a of Π_j (coordinate
/// level sums), assembled by convolution over the complex coordinates.
fn zonal_eigen_tau<T: Real>(p: &KernelParams<T>, a: usize, tau: Cx<T>, x: &[T], y: &[T]) -> Result<Cx<T>> {
    let zs = p.complex_coordinates(x);
    let ws = p.complex_coordinates(y);
    let mut conv = vec![re(T::zero()); a + 1];
    conv[0] = re(T::one());
    for ((lambda, z), (_, w)) in zs.iter().zip(&ws) {
        let sums = level_sum_1d(*lambda, tau, *z, *w, a)?;
        let mut next = vec![re(T::zero()); a + 1];
        for m in 0..=a {
            for b in 0..=m {
                next[m] += conv[m - b] * sums[b];
            }
        }
        conv = next;
    }
    Ok(conv[a] * p.constant_factor(tau))
}

/// Global heat kernel as Σ_a of the zonal eigen-sums (all levels and zones).
fn global_eigen_wk<T: Real>(p: &KernelParams<T>, t: T, x: &[T], y: &[T]) -> Result<Cx<T>> {
    let zs = p.complex_coordinates(x);
    let ws = p.complex_coordinates(y);
    let mut out = p.constant_factor(re(t));
    for ((lambda, z), (_, w)) in zs.iter().zip(&ws) {
        let lambda = *lambda;
        let r = z.norm().max(w.norm());
        let pmax =
            (T::lit(20.0) / (lambda * t) + lambda * r * r + T::lit(10.0)).ceil().to_usize().unwrap_or(usize::MAX);
        let bmax_f = (T::from_usize_exact(pmax.min(MAX_EIGEN_LEVELS)).sqrt() + lambda.sqrt() * r + T::lit(8.0)).powi(2);
        let bmax = bmax_f.ceil().to_usize().unwrap_or(usize::MAX);
        if pmax > MAX_EIGEN_LEVELS || bmax > MAX_EIGEN_LEVELS || (pmax as f64) * (bmax as f64) > 5e7 {
            return Err(Error::BudgetExceeded(format!("global eigen-sum needs {pmax}×{bmax} terms")));
        }
        let step = (-T::lit(2.0) * lambda * t).exp();
        let mut weight = (-lambda * t).exp();
        let mut hz = landau_row0(lambda, *z, bmax);
        let mut hw = landau_row0(lambda, *w, bmax);
        let mut acc = CompensatedSum::new();
        for level in 0..=pmax {
            let mut row = CompensatedSum::new();
            for b in 0..=bmax {
                row.add(hz[b] * hw[b].conj());
            }
            acc.add(row.value() * weight);
            hz = landau_step(lambda, *z, level, &hz);
            hw = landau_step(lambda, *w, level, &hw);
            weight *= step;
        }
        out *= acc.value();
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Public evaluators.

/// Explicit global heat kernel.
pub fn wk_global<T: Real>(params: &KernelParams<T>, t: T, x: &[T], y: &[T]) -> Result<Cx<T>> {
    params.check_points(x, y)?;
    if !(t > T::zero()) {
        return Err(Error::NonPositiveTime(t.as_f64()));
    }
    Ok(global_wk_tau(params, re(t), x, y))
}

/// Global heat kernel summed over every zone and level; the reference the
/// explicit formula is judged against.
pub fn wk_global_eigen_sum<T: Real>(params: &KernelParams<T>, t: T, x: &[T], y: &[T]) -> Result<Cx<T>> {
    params.check_points(x, y)?;
    if !(t > T::zero()) {
        return Err(Error::NonPositiveTime(t.as_f64()));
    }
    global_eigen_wk(params, t, x, y)
}

/// Explicit global Feynman kernel; rejects times where some sin(λ_i t) vanishes.
pub fn df_global<T: Real>(params: &KernelParams<T>, t: T, x: &[T], y: &[T]) -> Result<Cx<T>> {
    params.check_points(x, y)?;
    params.check_pole(t)?;
    Ok(global_df_explicit(params, t, x, y))
}

fn zonal<T: Real>(params: &KernelParams<T>, a: usize, t: T, x: &[T], y: &[T], method: Method) -> Result<Cx<T>> {
    params.check_points(x, y)?;
    params.check_time(t)?;
    let tau = params.tau(t);
    match method {
        Method::ClosedForm => zonal_closed_tau(params, a, tau, x, y),
        Method::EigenSum => zonal_eigen_tau(params, a, tau, x, y),
    }
}

/// Zonal heat kernel d_1^(a); closed form for a ∈ {0, 1}.
pub fn wk_zonal<T: Real>(a: usize, params: &KernelParams<T>, t: T, x: &[T], y: &[T], method: Method) -> Result<Cx<T>> {
    zonal(&params.clone().with_kind(KernelKind::Wk), a, t, x, y, method)
}

/// Zonal Feynman kernel d_i^(a); closed form for a ∈ {0, 1}.
pub fn df_zonal<T: Real>(a: usize, params: &KernelParams<T>, t: T, x: &[T], y: &[T], method: Method) -> Result<Cx<T>> {
    zonal(&params.clone().with_kind(KernelKind::Df), a, t, x, y, method)
}

/// Dispatch on the kind and zone stored in `params`.
pub fn evaluate<T: Real>(params: &KernelParams<T>, t: T, x: &[T], y: &[T], method: Method) -> Result<Cx<T>> {
    match (params.kind, params.zone, method) {
        (KernelKind::Wk, ZoneSelector::Global, Method::ClosedForm) => wk_global(params, t, x, y),
        (KernelKind::Wk, ZoneSelector::Global, Method::EigenSum) => wk_global_eigen_sum(params, t, x, y),
        (KernelKind::Df, ZoneSelector::Global, Method::ClosedForm) => df_global(params, t, x, y),
        (KernelKind::Df, ZoneSelector::Global, Method::EigenSum) => {
            Err(Error::ContractViolation("the global Feynman kernel has no convergent eigen-sum".into()))
        }
        (_, ZoneSelector::Gross(a), m) => zonal(params, a, t, x, y, m),
    }
}

/// D^(a) = L_a^{(k/2−1)}(Σλ_i|X_i−Y_i|²)·d^(0).
pub fn dominant_kernel<T: Real>(
    kind: KernelKind,
    a: usize,
    params: &KernelParams<T>,
    t: T,
    x: &[T],
    y: &[T],
) -> Result<Cx<T>> {
    let p = params.clone().with_kind(kind);
    p.check_points(x, y)?;
    p.check_time(t)?;
    let lag = laguerre(a, laguerre_alpha(&p), laguerre_argument(&p, x, y));
    Ok(zone0_tau(&p, p.tau(t), x, y) * lag)
}

// ---------------------------------------------------------------------------
// Partition functions.

/// Z^(a) = C(a+k/2−1, a)·Π e^{−k_iλ_iτ/2}/(1 − e^{−2λ_iτ})^{k_i/2}.
pub fn partition<T: Real>(kind: KernelKind, a: usize, params: &KernelParams<T>, t: T) -> Result<Cx<T>> {
    let p = params.clone().with_kind(kind);
    match kind {
        KernelKind::Wk if !(t > T::zero()) => return Err(Error::NonPositiveTime(t.as_f64())),
        KernelKind::Df => p.check_pole(t)?,
        _ => {}
    }
    let tau = p.tau(t);
    let mut z = re(T::lit(binomial((a + p.half_k() - 1) as u64, a as u64) as f64)) * p.constant_factor(tau);
    for b in &p.blocks {
        let half = (b.dim() / 2) as i32;
        let num = (-tau * b.lambda).exp();
        let den = -(-tau * (T::lit(2.0) * b.lambda)).exp() + T::one();
        z *= (num / den).powi(half);
    }
    Ok(z)
}

/// Truncated eigen-sum with a certified bound on the neglected tail.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenSum<T: Real> {
    pub value: Cx<T>,
    pub tail_bound: T,
    /// Levels kept per complex coordinate.
    pub levels: usize,
}

/// Σ over the zone's eigenstates of e^{−τE} at a complex time with Re τ > 0:
/// C(a+n−1, a)·Π_j Σ_{p ≤ P} e^{−τλ_j(2p+1)} with the geometric tail bound.
fn partition_sum_tau<T: Real>(p: &KernelParams<T>, a: usize, tau: Cx<T>, tol: T) -> Result<EigenSum<T>> {
    let mult = T::lit(binomial((a + p.half_k() - 1) as u64, a as u64) as f64);
    let coords: Vec<T> = p.blocks.iter().flat_map(|b| std::iter::repeat_n(b.lambda, b.dim() / 2)).collect();
    let worst = coords.iter().fold(T::one(), |m, &l| m.min(l)) * tau.re;
    let q = (-T::lit(2.0) * worst).exp();
    // Relative tail per coordinate q^{P+1}/(1 − q) below tol/n.
    let n = T::from_usize_exact(coords.len());
    let levels_f = ((tol / n * (T::one() - q)).ln() / q.ln()).ceil();
    let levels = levels_f.to_usize().unwrap_or(usize::MAX).max(1);
    if levels > 50_000_000 {
        return Err(Error::BudgetExceeded(format!("partition eigen-sum needs {levels} levels")));
    }
    let mut value = re(mult) * p.constant_factor(tau);
    let mut with_tail = mult * p.constant_factor(tau).norm();
    let mut without_tail = with_tail;
    for &lambda in &coords {
        let step = (-tau * (T::lit(2.0) * lambda)).exp();
        let mut w = (-tau * lambda).exp();
        let mut acc = CompensatedSum::new();
        for _ in 0..levels {
            acc.add(w);
            w *= step;
        }
        let s = acc.value();
        let qj = step.norm();
        let tail = w.norm() / (T::one() - qj);
        value *= s;
        with_tail *= s.norm() + tail;
        without_tail *= s.norm();
    }
    Ok(EigenSum { value, tail_bound: with_tail - without_tail, levels })
}

/// Partition function as a truncated eigen-sum. The Feynman series is
/// Abel-summed: sums at τ = ε + it for ε = ε₀/2^m are extrapolated to ε = 0.
pub fn partition_eigen_sum<T: Real>(kind: KernelKind, a: usize, params: &KernelParams<T>, t: T) -> Result<EigenSum<T>> {
    let p = params.clone().with_kind(kind);
    match kind {
        KernelKind::Wk => {
            if !(t > T::zero()) {
                return Err(Error::NonPositiveTime(t.as_f64()));
            }
            partition_sum_tau(&p, a, re(t), T::lit(1e-16))
        }
        KernelKind::Df => {
            p.check_pole(t)?;
            // Distance from it to the nearest pole iπm/λ sets the extrapolation radius.
            let gap = p.blocks.iter().fold(T::infinity(), |m, b| {
                let period = T::PI() / b.lambda;
                let r = t - (t / period).round() * period;
                m.min(r.abs())
            });
            let lam_max = p.blocks.iter().fold(T::zero(), |m, b| m.max(b.lambda));
            let eps0 = (gap / T::lit(4.0)).min(T::lit(0.1) / lam_max);
            let rounds = 7;
            let mut eps = Vec::new();
            let mut vals = Vec::new();
            let mut tail = T::zero();
            let mut levels = 0;
            for m in 0..rounds {
                let e = eps0 / T::lit(2f64.powi(m));
                let s = partition_sum_tau(&p, a, cx(e, t), T::lit(1e-17))?;
                tail = tail.max(s.tail_bound);
                levels = levels.max(s.levels);
                eps.push(e);
                vals.push(s.value);
            }
            let (value, err) = neville_at_zero(&eps, &vals);
            Ok(EigenSum { value, tail_bound: tail + err, levels })
        }
    }
}

/// Polynomial extrapolation of (x_i, y_i) to x = 0; the error estimate is
/// the change contributed by the last point.
fn neville_at_zero<T: Real>(x: &[T], y: &[Cx<T>]) -> (Cx<T>, T) {
    let n = x.len();
    let mut table: Vec<Cx<T>> = y.to_vec();
    let mut last_change = T::zero();
    for level in 1..n {
        for i in 0..n - level {
            let j = i + level;
            let v = (table[i + 1] * x[i] - table[i] * x[j]) / (x[i] - x[j]);
            if i == 0 {
                last_change = (v - table[0]).norm();
            }
            table[i] = v;
        }
    }
    (table[0], last_change)
}

/// Per-coordinate Gaussian rates λ_i(1 − e^{−2λ_iτ}) of the kernel diagonal.
fn diagonal_rates<T: Real>(p: &KernelParams<T>, tau: Cx<T>) -> Vec<Cx<T>> {
    p.blocks
        .iter()
        .flat_map(|b| {
            let r = (-(-tau * (T::lit(2.0) * b.lambda)).exp() + T::one()) * b.lambda;
            std::iter::repeat_n(r, b.dim())
        })
        .collect()
}

/// ∫ Σ c_e X^e · e^{−Σ α_j x_j²} dX for complex α_j with Re α_j > 0, by
/// the moments Γ(m + ½)/α^{m+½}.
fn complex_moment_integral<T: Real>(poly: &ComplexPolynomial<T>, rates: &[Cx<T>]) -> Result<Cx<T>> {
    if let Some(r) = rates.iter().find(|r| !(r.re > T::zero())) {
        return Err(Error::ContractViolation(format!("Gaussian rate {r} has no decay")));
    }
    let mut acc = CompensatedSum::new();
    'terms: for (e, c) in poly.terms() {
        let mut v = *c;
        for (j, &ej) in e.iter().enumerate() {
            if ej % 2 == 1 {
                continue 'terms;
            }
            // Γ(m + ½) = √π (2m−1)!!/2^m.
            let m = (ej / 2) as usize;
            let mut g = T::PI().sqrt();
            for i in 0..m {
                g *= (T::from_usize_exact(2 * i + 1)) / T::lit(2.0);
            }
            v *= rates[j].powf(-(T::from_usize_exact(m) + T::lit(0.5))) * g;
        }
        acc.add(v);
    }
    Ok(acc.value())
}

/// Trace of the dominant kernel: a Gauss–Hermite rule matched to the
/// diagonal decay for the heat flow, exact complex Gaussian moments for the
/// Feynman flow.
pub fn dominant_trace<T: Real>(
    kind: KernelKind,
    a: usize,
    params: &KernelParams<T>,
    t: T,
    per_dim: usize,
) -> Result<Cx<T>> {
    let p = params.clone().with_kind(kind);
    if kind == KernelKind::Df {
        p.check_pole(t)?;
    } else if !(t > T::zero()) {
        return Err(Error::NonPositiveTime(t.as_f64()));
    }
    let tau = p.tau(t);
    let rates = diagonal_rates(&p, tau);
    let lag0 = laguerre(a, laguerre_alpha(&p), T::zero());
    match kind {
        KernelKind::Wk => {
            let real_rates: Vec<T> = rates.iter().map(|r| r.re).collect();
            let rule = gauss_hermite_anisotropic(&real_rates, per_dim, &vec![T::zero(); p.k()])?;
            Ok(rule.integrate_flat(|x| zone0_tau(&p, tau, x, x) * lag0))
        }
        KernelKind::Df => {
            let zero = vec![T::zero(); p.k()];
            let pre = zone0_tau(&p, tau, &zero, &zero) * lag0;
            Ok(complex_moment_integral(&ComplexPolynomial::constant(p.k(), pre), &rates)?)
        }
    }
}

/// Trace of the long-term remainder d^(a) − D^(a). The heat flow is
/// integrated by quadrature (closed form for a ≤ 1, eigen-sum beyond); the
/// Feynman flow by exact moments, available for a ≤ 1.
pub fn remainder_trace<T: Real>(
    kind: KernelKind,
    a: usize,
    params: &KernelParams<T>,
    t: T,
    per_dim: usize,
) -> Result<Cx<T>> {
    let p = params.clone().with_kind(kind);
    if a == 0 {
        return Ok(re(T::zero()));
    }
    if kind == KernelKind::Df {
        p.check_pole(t)?;
    } else if !(t > T::zero()) {
        return Err(Error::NonPositiveTime(t.as_f64()));
    }
    let tau = p.tau(t);
    let rates = diagonal_rates(&p, tau);
    let lag0 = laguerre(a, laguerre_alpha(&p), T::zero());
    match kind {
        KernelKind::Wk => {
            let real_rates: Vec<T> = rates.iter().map(|r| r.re).collect();
            let rule = gauss_hermite_anisotropic(&real_rates, per_dim, &vec![T::zero(); p.k()])?;
            let failure = std::cell::RefCell::new(None);
            let v = rule.integrate_flat(|x| {
                let d = if a == 1 { zonal_closed_tau(&p, a, tau, x, x) } else { zonal_eigen_tau(&p, a, tau, x, x) };
                match d {
                    Ok(d) => d - zone0_tau(&p, tau, x, x) * lag0,
                    Err(e) => {
                        failure.replace(Some(e));
                        re(T::zero())
                    }
                }
            });
            match failure.into_inner() {
                Some(e) => Err(e),
                None => Ok(v),
            }
        }
        KernelKind::Df => {
            if a > 1 {
                return Err(Error::ClosedFormUnavailable(a));
            }
            let k = p.k();
            let vars: Vec<ComplexPolynomial<T>> = (0..k).map(|j| ComplexPolynomial::variable(k, j)).collect();
            let lt = long_term1_symbolic(&p, tau, &vars, &vars);
            let zero = vec![T::zero(); k];
            let pre = zone0_tau(&p, tau, &zero, &zero);
            complex_moment_integral(&lt.scale(pre), &rates)
        }
    }
}

// ---------------------------------------------------------------------------
// Symbolic kernels: P·e^Q in polynomial arguments, for exact operator
// application and Gaussian integration.

type Poly<T> = ComplexPolynomial<T>;

/// Coordinates of a point as constant polynomials in `dim` variables.
pub fn constant_point<T: Real>(dim: usize, x: &[T]) -> Vec<Poly<T>> {
    x.iter().map(|&v| Poly::constant(dim, re(v))).collect()
}

/// Variables x_offset, …, x_{offset+k−1} of a `dim`-variable space.
pub fn variable_point<T: Real>(dim: usize, offset: usize, k: usize) -> Vec<Poly<T>> {
    (offset..offset + k).map(|j| Poly::variable(dim, j)).collect()
}

fn sym_dim<T: Real>(x: &[Poly<T>]) -> usize {
    x[0].dim()
}

fn sym_dot<T: Real>(a: &[Poly<T>], b: &[Poly<T>]) -> Poly<T> {
    let mut out = Poly::zero(sym_dim(a));
    for (u, v) in a.iter().zip(b) {
        out = out.add(&u.mul(v));
    }
    out
}

fn sym_apply<T: Real>(m: &SquareMatrix<T>, v: &[Poly<T>]) -> Vec<Poly<T>> {
    let n = m.dim();
    (0..n)
        .map(|r| {
            let mut out = Poly::zero(sym_dim(v));
            for c in 0..n {
                if m[(r, c)] != T::zero() {
                    out = out.add(&v[c].scale_real(m[(r, c)]));
                }
            }
            out
        })
        .collect()
}

fn sym_sub<T: Real>(a: &[Poly<T>], b: &[Poly<T>]) -> Vec<Poly<T>> {
    a.iter().zip(b).map(|(u, v)| u.sub(v)).collect()
}

fn sym_slice<'a, T: Real>(p: &KernelParams<T>, i: usize, x: &'a [Poly<T>]) -> &'a [Poly<T>] {
    &x[p.offsets[i]..p.offsets[i] + p.blocks[i].dim()]
}

/// ⟨x, y⟩ + i⟨x, J y⟩.
fn sym_pairing<T: Real>(b: &Block<T>, x: &[Poly<T>], y: &[Poly<T>]) -> Poly<T> {
    sym_dot(x, y).add(&sym_dot(x, &sym_apply(&b.j, y)).scale(imag_unit()))
}

fn zone0_symbolic<T: Real>(p: &KernelParams<T>, tau: Cx<T>, x: &[Poly<T>], y: &[Poly<T>]) -> ExpPoly<T> {
    let dim = sym_dim(x);
    let mut pre = p.constant_factor(tau);
    let mut expo = Poly::zero(dim);
    for (i, b) in p.blocks.iter().enumerate() {
        let (xi, yi) = (sym_slice(p, i, x), sym_slice(p, i, y));
        let q = (-tau * b.lambda).exp();
        pre *= (q * (b.lambda / T::PI())).powi((b.dim() / 2) as i32);
        let half = sym_dot(xi, xi).add(&sym_dot(yi, yi)).scale_real(T::lit(0.5));
        expo = expo.add(&sym_pairing(b, xi, yi).scale(q * q).sub(&half).scale_real(b.lambda));
    }
    ExpPoly::new(Poly::constant(dim, pre), expo)
}

fn long_term1_symbolic<T: Real>(p: &KernelParams<T>, tau: Cx<T>, x: &[Poly<T>], y: &[Poly<T>]) -> Poly<T> {
    let dim = sym_dim(x);
    let mut acc = Poly::zero(dim);
    for (i, b) in p.blocks.iter().enumerate() {
        let (xi, yi) = (sym_slice(p, i, x), sym_slice(p, i, y));
        let s = (-tau * (T::lit(2.0) * b.lambda)).exp();
        let radial = sym_dot(xi, xi)
            .add(&sym_dot(yi, yi))
            .scale_real(b.lambda)
            .sub(&Poly::constant(dim, re(T::from_usize_exact(b.dim()) / T::lit(2.0))));
        let cross = sym_pairing(b, xi, yi).scale((s + T::one()) * b.lambda);
        acc = acc.add(&radial.sub(&cross).scale(-s + T::one()));
    }
    acc
}

fn laguerre_symbolic<T: Real>(n: usize, alpha: T, u: &Poly<T>) -> Poly<T> {
    let coeffs = laguerre_coefficients(n, alpha);
    let mut out = Poly::zero(u.dim());
    let mut power = Poly::one(u.dim());
    for c in coeffs {
        out = out.add(&power.scale_real(c));
        power = power.mul(u);
    }
    out
}

fn laguerre_argument_symbolic<T: Real>(p: &KernelParams<T>, x: &[Poly<T>], y: &[Poly<T>]) -> Poly<T> {
    let mut u = Poly::zero(sym_dim(x));
    for (i, b) in p.blocks.iter().enumerate() {
        let d = sym_sub(sym_slice(p, i, x), sym_slice(p, i, y));
        u = u.add(&sym_dot(&d, &d).scale_real(b.lambda));
    }
    u
}

fn zonal_symbolic<T: Real>(
    p: &KernelParams<T>,
    a: usize,
    tau: Cx<T>,
    x: &[Poly<T>],
    y: &[Poly<T>],
) -> Result<ExpPoly<T>> {
    let d0 = zone0_symbolic(p, tau, x, y);
    match a {
        0 => Ok(d0),
        1 => {
            let lag = laguerre_symbolic(1, laguerre_alpha(p), &laguerre_argument_symbolic(p, x, y));
            Ok(d0.mul_poly(&lag.add(&long_term1_symbolic(p, tau, x, y))))
        }
        _ => Err(Error::ClosedFormUnavailable(a)),
    }
}

fn global_wk_symbolic<T: Real>(p: &KernelParams<T>, tau: Cx<T>, x: &[Poly<T>], y: &[Poly<T>]) -> ExpPoly<T> {
    let dim = sym_dim(x);
    let mut pre = p.constant_factor(tau);
    let mut expo = Poly::zero(dim);
    for (i, b) in p.blocks.iter().enumerate() {
        let (xi, yi) = (sym_slice(p, i, x), sym_slice(p, i, y));
        let lt = tau * b.lambda;
        let sh = lt.sinh();
        pre *= (re::<T>(b.lambda) / (sh * (T::lit(2.0) * T::PI()))).powi((b.dim() / 2) as i32);
        let coth = lt.cosh() / sh;
        let d = sym_sub(xi, yi);
        let quad = sym_dot(&d, &d).scale(coth * T::lit(0.5));
        let cross = sym_dot(xi, &sym_apply(&b.j, yi)).scale(imag_unit());
        expo = expo.sub(&quad.add(&cross).scale_real(b.lambda));
    }
    ExpPoly::new(Poly::constant(dim, pre), expo)
}

fn global_df_explicit_symbolic<T: Real>(p: &KernelParams<T>, t: T, x: &[Poly<T>], y: &[Poly<T>]) -> ExpPoly<T> {
    let dim = sym_dim(x);
    let mut pre = p.constant_factor(cx(T::zero(), t));
    let mut expo = Poly::zero(dim);
    for (i, b) in p.blocks.iter().enumerate() {
        let (xi, yi) = (sym_slice(p, i, x), sym_slice(p, i, y));
        let lt = b.lambda * t;
        pre *= (re::<T>(b.lambda) / cx(T::zero(), T::lit(2.0) * T::PI() * lt.sin())).powi((b.dim() / 2) as i32);
        let d = sym_sub(xi, yi);
        let inner =
            sym_dot(&d, &d).scale_real(lt.cos() / lt.sin() / T::lit(2.0)).sub(&sym_dot(xi, &sym_apply(&b.j, yi)));
        expo = expo.add(&inner.scale(cx(T::zero(), b.lambda)));
    }
    ExpPoly::new(Poly::constant(dim, pre), expo)
}

fn zone0_df_explicit_symbolic<T: Real>(p: &KernelParams<T>, t: T, x: &[Poly<T>], y: &[Poly<T>]) -> ExpPoly<T> {
    let dim = sym_dim(x);
    let mut pre = p.constant_factor(cx(T::zero(), t));
    let mut expo = Poly::zero(dim);
    for (i, b) in p.blocks.iter().enumerate() {
        let (xi, yi) = (sym_slice(p, i, x), sym_slice(p, i, y));
        let lt = b.lambda * t;
        let e1 = cx(lt.cos(), -lt.sin());
        let e2 = cx((lt + lt).cos(), -(lt + lt).sin());
        pre *= (e1 * (b.lambda / T::PI())).powi((b.dim() / 2) as i32);
        let jy = sym_apply(&b.j, yi);
        let pair = sym_dot(xi, yi).add(&sym_dot(xi, &jy).scale(imag_unit()));
        let half = sym_dot(xi, xi).add(&sym_dot(yi, yi)).scale_real(T::lit(0.5));
        expo = expo.add(&pair.scale(e2).sub(&half).scale_real(b.lambda));
    }
    ExpPoly::new(Poly::constant(dim, pre), expo)
}

/// The kernel selected by `params` at time t as P·e^Q in symbolic arguments.
/// Only closed forms are available (global kernels, zones a ≤ 1).
pub fn symbolic_kernel<T: Real>(params: &KernelParams<T>, t: T, x: &[Poly<T>], y: &[Poly<T>]) -> Result<ExpPoly<T>> {
    let k = params.k();
    if x.len() != k || y.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: x.len().min(y.len()) });
    }
    params.check_time(t)?;
    match (params.kind, params.zone) {
        (KernelKind::Wk, ZoneSelector::Global) => {
            if !(t > T::zero()) {
                return Err(Error::NonPositiveTime(t.as_f64()));
            }
            Ok(global_wk_symbolic(params, re(t), x, y))
        }
        (KernelKind::Df, ZoneSelector::Global) => {
            params.check_pole(t)?;
            Ok(global_df_explicit_symbolic(params, t, x, y))
        }
        (_, ZoneSelector::Gross(a)) => zonal_symbolic(params, a, params.tau(t), x, y),
    }
}

/// ∫_{R^d} P·e^Q for a quadratic exponent whose real part is negative
/// definite. The tensor Gauss–Hermite rule sits in the principal axes of
/// Re Q, centered at its maximum; the imaginary part is integrated as part of
/// the integrand.
pub fn integrate_exp_poly<T: Real>(f: &ExpPoly<T>, per_dim: usize) -> Result<Cx<T>> {
    let d = f.dim();
    if f.exponent().degree().unwrap_or(0) > 2 {
        return Err(Error::InvalidInput("exponent must be at most quadratic".into()));
    }
    let mut quad = DMatrix::<f64>::zeros(d, d);
    let mut lin = vec![0.0f64; d];
    for (e, c) in f.exponent().terms() {
        let idx: Vec<usize> = e.iter().enumerate().flat_map(|(j, &m)| std::iter::repeat_n(j, m as usize)).collect();
        match idx.as_slice() {
            [i, j] if i == j => quad[(*i, *i)] += -c.re.as_f64(),
            [i, j] => {
                quad[(*i, *j)] += -c.re.as_f64() / 2.0;
                quad[(*j, *i)] += -c.re.as_f64() / 2.0;
            }
            [i] => lin[*i] += c.re.as_f64(),
            _ => {}
        }
    }
    // Re Q = −Uᵀ M U + βᵀU + const with M = V diag(r) Vᵀ.
    let eig = SymmetricEigen::new(quad);
    if let Some(r) = eig.eigenvalues.iter().find(|r| **r <= 1e-12) {
        return Err(Error::ContractViolation(format!("integrand has no Gaussian decay (rate {r:e})")));
    }
    let v = eig.eigenvectors;
    let beta = nalgebra::DVector::from_vec(lin);
    let center = {
        let w = v.transpose() * &beta;
        let scaled =
            nalgebra::DVector::from_iterator(d, w.iter().zip(eig.eigenvalues.iter()).map(|(b, r)| b / (2.0 * r)));
        &v * scaled
    };
    let rates: Vec<T> = eig.eigenvalues.iter().map(|&r| T::lit(r)).collect();
    let rule = gauss_hermite_anisotropic(&rates, per_dim, &vec![T::zero(); d])?;
    let vt: Vec<T> = v.iter().map(|&x| T::lit(x)).collect();
    let c: Vec<T> = center.iter().map(|&x| T::lit(x)).collect();
    Ok(rule.integrate_flat(|w| {
        let mut u = vec![T::zero(); d];
        for i in 0..d {
            let mut s = c[i];
            for j in 0..d {
                s += vt[i + j * d] * w[j];
            }
            u[i] = s;
        }
        f.eval(&u)
    }))
}

// ---------------------------------------------------------------------------
// Identities.

/// Default Gauss–Hermite nodes per axis for kernel integrals.
pub const DEFAULT_KERNEL_NODES: usize = 40;

/// Worst relative residual of ∫ d(t, X, U) d(s, U, Y) dU = d(t+s, X, Y) over
/// sample pairs. Closed forms are integrated symbolically; other zones use
/// eigen-sum kernels on a Gauss–Hermite grid. The global Feynman kernel is
/// rejected: the integral does not exist.
pub fn verify_ck<T: Real>(
    params: &KernelParams<T>,
    t: T,
    s: T,
    samples: &[(Vec<T>, Vec<T>)],
    per_dim: usize,
) -> Result<T> {
    if params.kind == KernelKind::Df && params.zone == ZoneSelector::Global {
        return Err(Error::ContractViolation(
            "the global Feynman kernel is neither L¹ nor L² in its second argument; Chapman-Kolmogorov is undefined"
                .into(),
        ));
    }
    let k = params.k();
    let mut worst = T::zero();
    for (x, y) in samples {
        params.check_points(x, y)?;
        let closed = !matches!(params.zone, ZoneSelector::Gross(a) if a > 1);
        let (lhs, rhs) = if closed {
            let u = variable_point::<T>(k, 0, k);
            let left = symbolic_kernel(params, t, &constant_point(k, x), &u)?;
            let right = symbolic_kernel(params, s, &u, &constant_point(k, y))?;
            let rhs = evaluate(params, t + s, x, y, Method::ClosedForm)?;
            (integrate_exp_poly(&left.mul(&right), per_dim)?, rhs)
        } else {
            let rates: Vec<T> = params.blocks.iter().flat_map(|b| std::iter::repeat_n(b.lambda, b.dim())).collect();
            let rule = gauss_hermite_anisotropic(&rates, per_dim, &vec![T::zero(); k])?;
            let failure = std::cell::RefCell::new(None);
            let v = rule.integrate_flat(|u| {
                match (evaluate(params, t, x, u, Method::EigenSum), evaluate(params, s, u, y, Method::EigenSum)) {
                    (Ok(a), Ok(b)) => a * b,
                    (Err(e), _) | (_, Err(e)) => {
                        failure.replace(Some(e));
                        re(T::zero())
                    }
                }
            });
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            (v, evaluate(params, t + s, x, y, Method::EigenSum)?)
        };
        worst = worst.max((lhs - rhs).norm() / rhs.norm().max(T::min_positive_value()));
    }
    Ok(worst)
}

/// Residual of a kernel against its evolution equation at one step size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PdeStudy<T: Real> {
    pub h: T,
    /// Relative residual at step h.
    pub residual: T,
    /// Relative residual at step h/2.
    pub residual_half: T,
    /// residual / residual_half; ≈ 4 for a second-order consistent solution.
    pub ratio: T,
}

/// Relative residual of (∂_t + H)d (heat) or (∂_t + iH)d (Feynman): central
/// difference in t, exact application of H = −½·Box in X on the closed form.
pub fn pde_residual<T: Real>(params: &KernelParams<T>, t: T, x: &[T], y: &[T], h: T) -> Result<T> {
    params.check_points(x, y)?;
    if !(h > T::zero()) {
        return Err(Error::InvalidInput(format!("step must be positive, got {h}")));
    }
    let k = params.k();
    let vars = variable_point::<T>(k, 0, k);
    let yc = constant_point(k, y);
    let f = symbolic_kernel(params, t, &vars, &yc)?;
    let hf = params.operator()?.hamiltonian_exp(&f).eval(x);
    let forward = symbolic_kernel(params, t + h, &vars, &yc)?.eval(x);
    let backward = symbolic_kernel(params, t - h, &vars, &yc)?.eval(x);
    let dt = (forward - backward) / (h + h);
    let generator = match params.kind {
        KernelKind::Wk => hf,
        KernelKind::Df => hf * imag_unit(),
    };
    let scale = dt.norm().max(generator.norm()).max(f.eval(x).norm()).max(T::min_positive_value());
    Ok((dt + generator).norm() / scale)
}

pub fn pde_study<T: Real>(params: &KernelParams<T>, t: T, x: &[T], y: &[T], h: T) -> Result<PdeStudy<T>> {
    let residual = pde_residual(params, t, x, y, h)?;
    let residual_half = pde_residual(params, t, x, y, h / T::lit(2.0))?;
    Ok(PdeStudy { h, residual, residual_half, ratio: residual / residual_half.max(T::min_positive_value()) })
}

/// |∫ d_global(t, X, Y) φ(Y) dY − φ(X)| for φ(Y) = e^{−|Y − c|²/2}. The heat
/// kernel is integrated by quadrature, the Feynman kernel by the complex
/// Gaussian integral, block by block.
pub fn smeared_limit<T: Real>(params: &KernelParams<T>, t: T, x: &[T], c: &[T], per_dim: usize) -> Result<T> {
    params.check_points(x, c)?;
    let k = params.k();
    let phi_x = (-sq_dist(x, c) / T::lit(2.0)).exp();
    let integral = match params.kind {
        KernelKind::Wk => {
            let g = params.clone().with_zone(ZoneSelector::Global);
            let yv = variable_point::<T>(k, 0, k);
            let kernel = symbolic_kernel(&g, t, &constant_point(k, x), &yv)?;
            let d: Vec<Poly<T>> = yv.iter().zip(c).map(|(v, &ci)| v.sub(&Poly::constant(k, re(ci)))).collect();
            let test = ExpPoly::new(Poly::one(k), sym_dot(&d, &d).scale_real(-T::lit(0.5)));
            integrate_exp_poly(&kernel.mul(&test), per_dim)?
        }
        KernelKind::Df => {
            params.check_pole(t)?;
            let mut total = params.constant_factor(cx(T::zero(), t));
            for (i, b) in params.blocks.iter().enumerate() {
                let (xi, ci) = (params.slice(i, x), params.slice(i, c));
                let lt = b.lambda * t;
                let cot = lt.cos() / lt.sin();
                let alpha = cx(T::lit(0.5), -b.lambda * cot / T::lit(2.0));
                let jx = b.j.apply(xi);
                // Exponent in Y: −α|Y|² + ⟨−iλ cot·X + iλ JX + c, Y⟩ + iλ cot|X|²/2 − |c|²/2.
                let lin: Vec<Cx<T>> = (0..b.dim()).map(|m| cx(ci[m], b.lambda * (jx[m] - cot * xi[m]))).collect();
                let c0 = cx(-dot(ci, ci) / T::lit(2.0), b.lambda * cot * dot(xi, xi) / T::lit(2.0));
                let pre =
                    (re::<T>(b.lambda) / cx(T::zero(), T::lit(2.0) * T::PI() * lt.sin())).powi((b.dim() / 2) as i32);
                total *= pre * complex_gaussian_integral(alpha, &lin, c0)?;
            }
            total
        }
    };
    Ok((integral - re(phi_x)).norm())
}

/// Relative residual of ∫∫ δ^(a)(X,U) d_global(t,U,V) δ^(a)(V,Y) dU dV against
/// the zonal heat kernel d^(a)(t, X, Y); one block, zones with a closed form
/// or an eigen-sum reference.
pub fn compression_residual<T: Real>(
    params: &KernelParams<T>,
    a: usize,
    t: T,
    x: &[T],
    y: &[T],
    per_dim: usize,
) -> Result<T> {
    if params.blocks.len() != 1 {
        return Err(Error::InvalidInput("zone compression is implemented for a single block".into()));
    }
    let p = params.clone().with_kind(KernelKind::Wk).with_zone(ZoneSelector::Global);
    p.check_points(x, y)?;
    let k = p.k();
    let dim = 2 * k;
    let u = variable_point::<T>(dim, 0, k);
    let v = variable_point::<T>(dim, k, k);
    let xc = constant_point(dim, x);
    let yc = constant_point(dim, y);
    // δ^(a) is the zonal kernel at τ = 0.
    let delta = |l: &[Poly<T>], r: &[Poly<T>]| -> ExpPoly<T> {
        let d0 = zone0_symbolic(&p, re(T::zero()), l, r);
        let lag = laguerre_symbolic(a, laguerre_alpha(&p), &laguerre_argument_symbolic(&p, l, r));
        d0.mul_poly(&lag)
    };
    let global = global_wk_symbolic(&p, re(t), &u, &v);
    let integrand = delta(&xc, &u).mul(&global).mul(&delta(&v, &yc));
    let lhs = integrate_exp_poly(&integrand, per_dim)?;
    let zonal = p.clone().with_zone(ZoneSelector::Gross(a));
    let rhs = if a <= 1 {
        evaluate(&zonal, t, x, y, Method::ClosedForm)?
    } else {
        evaluate(&zonal, t, x, y, Method::EigenSum)?
    };
    Ok((lhs - rhs).norm() / rhs.norm().max(T::min_positive_value()))
}

/// Coefficientwise distance between the heat closed forms continued to
/// τ = it and the explicit Feynman forms: zone 0 and the global kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WickReport<T: Real> {
    pub zone0: T,
    pub global: T,
}

pub fn wick_consistency<T: Real>(params: &KernelParams<T>, t: T) -> Result<WickReport<T>> {
    params.check_pole(t)?;
    let k = params.k();
    let dim = 2 * k;
    let x = variable_point::<T>(dim, 0, k);
    let y = variable_point::<T>(dim, k, k);
    let tau = cx(T::zero(), t);
    let distance =
        |a: &ExpPoly<T>, b: &ExpPoly<T>| a.poly().distance(b.poly()).max(a.exponent().distance(b.exponent()));
    let zone0 = distance(&zone0_symbolic(params, tau, &x, &y), &zone0_df_explicit_symbolic(params, t, &x, &y));
    let global = distance(&global_wk_symbolic(params, tau, &x, &y), &global_df_explicit_symbolic(params, t, &x, &y));
    Ok(WickReport { zone0, global })
}

/// Explicit Feynman zone-0 kernel at a point (independent of the τ-continued form).
pub fn df_zone0_explicit<T: Real>(params: &KernelParams<T>, t: T, x: &[T], y: &[T]) -> Result<Cx<T>> {
    params.check_points(x, y)?;
    Ok(zone0_df_explicit(params, t, x, y))
}

/// Verdict on the explicit global heat kernel: heat-equation residual with
/// its step-halving ratio, and the largest deviation from the eigen-sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GlobalWkReport<T: Real> {
    pub pde: PdeStudy<T>,
    pub eigen_sum_deviation: T,
    pub consistent: bool,
}

pub fn global_wk_report<T: Real>(
    params: &KernelParams<T>,
    t: T,
    samples: &[(Vec<T>, Vec<T>)],
    h: T,
) -> Result<GlobalWkReport<T>> {
    let g = params.clone().with_kind(KernelKind::Wk).with_zone(ZoneSelector::Global);
    let mut pde = PdeStudy { h, residual: T::zero(), residual_half: T::zero(), ratio: T::zero() };
    let mut dev = T::zero();
    for (x, y) in samples {
        let s = pde_study(&g, t, x, y, h)?;
        if s.residual >= pde.residual {
            pde = s;
        }
        let explicit = wk_global(&g, t, x, y)?;
        let reference = wk_global_eigen_sum(&g, t, x, y)?;
        dev = dev.max((explicit - reference).norm() / reference.norm().max(T::min_positive_value()));
    }
    let second_order = pde.residual < T::lit(1e-5) && (pde.ratio > T::lit(3.0) || pde.residual < T::lit(1e-11));
    Ok(GlobalWkReport { pde, eigen_sum_deviation: dev, consistent: second_order && dev < T::lit(1e-8) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn single(kind: KernelKind, zone: ZoneSelector) -> KernelParams<f64> {
        KernelParams::single(2, 1.0, kind, zone).unwrap()
    }

    const PTS: [[f64; 2]; 4] = [[0.0, 0.0], [0.4, -0.3], [-1.0, 0.7], [1.2, 1.1]];

    #[test]
    fn global_heat_kernel_at_origin() {
        let p = single(KernelKind::Wk, ZoneSelector::Global);
        for t in [0.3, 1.0, 2.0] {
            let v = wk_global(&p, t, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
            assert!((v.re - 1.0 / (2.0 * PI * t.sinh())).abs() < 1e-14 && v.im.abs() < 1e-15);
            let e = wk_global_eigen_sum(&p, t, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
            assert!((e - v).norm() < 1e-12, "t={t}");
        }
        assert!(matches!(wk_global(&p, 0.0, &[0.0; 2], &[0.0; 2]), Err(Error::NonPositiveTime(_))));
    }

    #[test]
    fn explicit_global_heat_kernel_matches_eigen_sum() {
        for lam in [0.5, 1.0, 2.0] {
            let p = KernelParams::single(2, lam, KernelKind::Wk, ZoneSelector::Global).unwrap();
            for x in &PTS {
                for y in &PTS {
                    let a = wk_global(&p, 0.7, x, y).unwrap();
                    let b = wk_global_eigen_sum(&p, 0.7, x, y).unwrap();
                    assert!((a - b).norm() < 1e-11 * (1.0 + b.norm()), "λ={lam} {x:?} {y:?}");
                }
            }
        }
    }

    #[test]
    fn hermitian_symmetry() {
        let p = single(KernelKind::Wk, ZoneSelector::Global);
        let (x, y) = ([0.3, -0.8], [1.1, 0.2]);
        let a = wk_global(&p, 0.4, &x, &y).unwrap();
        let b = wk_global(&p, 0.4, &y, &x).unwrap();
        assert!((a - b.conj()).norm() < 1e-15);
        for a_zone in 0..2 {
            let d1 = wk_zonal(a_zone, &p, 0.4, &x, &y, Method::ClosedForm).unwrap();
            let d2 = wk_zonal(a_zone, &p, 0.4, &y, &x, Method::ClosedForm).unwrap();
            assert!((d1 - d2.conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn zonal_closed_forms_match_eigen_sums() {
        for (k, lam) in [(2usize, 1.0), (2, 0.6), (4, 1.3)] {
            let p = KernelParams::single(k, lam, KernelKind::Wk, ZoneSelector::Gross(0)).unwrap();
            let pts: Vec<Vec<f64>> =
                (0..4).map(|i| (0..k).map(|j| ((i * 7 + j * 3) % 5) as f64 * 0.35 - 0.7).collect()).collect();
            for a in 0..2 {
                for t in [0.2, 1.0] {
                    for x in &pts {
                        for y in &pts {
                            let c = wk_zonal(a, &p, t, x, y, Method::ClosedForm).unwrap();
                            let e = wk_zonal(a, &p, t, x, y, Method::EigenSum).unwrap();
                            assert!((c - e).norm() < 1e-12, "WK k={k} λ={lam} a={a} t={t}");
                            let c = df_zonal(a, &p, t, x, y, Method::ClosedForm).unwrap();
                            let e = df_zonal(a, &p, t, x, y, Method::EigenSum).unwrap();
                            assert!((c - e).norm() < 1e-12, "DF k={k} λ={lam} a={a} t={t}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn two_block_closed_forms_match_eigen_sums() {
        let p = KernelParams::standard(&[(0.7, 2), (1.6, 2)], KernelKind::Wk, ZoneSelector::Gross(1)).unwrap();
        let x = [0.3, -0.2, 0.5, 0.1];
        let y = [-0.4, 0.6, 0.2, -0.3];
        for kind in [KernelKind::Wk, KernelKind::Df] {
            let q = p.clone().with_kind(kind);
            for a in 0..2 {
                let q = q.clone().with_zone(ZoneSelector::Gross(a));
                let c = evaluate(&q, 0.45, &x, &y, Method::ClosedForm).unwrap();
                let e = evaluate(&q, 0.45, &x, &y, Method::EigenSum).unwrap();
                assert!((c - e).norm() < 1e-12, "{kind:?} a={a}");
            }
        }
    }

    #[test]
    fn explicit_long_term_is_the_unit_normalization() {
        // λ = 1, k = 2: (1−s)(|X|²+|Y|²−1−(1+s)⟨X, Y+iJY⟩).
        let p = single(KernelKind::Wk, ZoneSelector::Gross(1));
        let (x, y) = ([0.3, 0.5], [-0.6, 0.2]);
        for t in [0.1f64, 0.8] {
            let s = (-2.0 * t).exp();
            let pair = Complex64::new(x[0] * y[0] + x[1] * y[1], x[1] * y[0] - x[0] * y[1]);
            let explicit =
                (pair * (-(1.0 + s)) + (x[0] * x[0] + x[1] * x[1] + y[0] * y[0] + y[1] * y[1] - 1.0)) * (1.0 - s);
            assert!((long_term1_tau(&p, re(t), &x, &y) - explicit).norm() < 1e-15);
        }
    }

    use num_complex::Complex64;

    #[test]
    fn higher_zones_from_eigen_sums_only() {
        let p = single(KernelKind::Wk, ZoneSelector::Gross(2));
        let x = [0.2, 0.1];
        assert!(matches!(wk_zonal(2, &p, 0.5, &x, &x, Method::ClosedForm), Err(Error::ClosedFormUnavailable(2))));
        assert!(wk_zonal(2, &p, 0.5, &x, &x, Method::EigenSum).unwrap().re > 0.0);
    }

    #[test]
    fn zonal_limits_are_projection_kernels() {
        let (x, y) = ([0.4, -0.1], [-0.3, 0.8]);
        for a in 0..4 {
            let p = single(KernelKind::Wk, ZoneSelector::Gross(a));
            let d = crate::zones::delta_kernel(a, 2, 1.0, &x, &y);
            let e = wk_zonal(a, &p, 0.0, &x, &y, Method::EigenSum).unwrap();
            assert!((d - e).norm() < 1e-12, "a={a}");
            if a <= 1 {
                assert!((wk_zonal(a, &p, 0.0, &x, &y, Method::ClosedForm).unwrap() - d).norm() < 1e-15);
                assert!((df_zonal(a, &p, 0.0, &x, &y, Method::ClosedForm).unwrap() - d).norm() < 1e-15);
            }
        }
        let p = single(KernelKind::Wk, ZoneSelector::Gross(1));
        assert_eq!(long_term1_tau(&p, re(0.0), &x, &y), re(0.0));
    }

    #[test]
    fn feynman_diagonal_modulus_is_periodic() {
        let p = single(KernelKind::Df, ZoneSelector::Gross(0));
        let x = [0.5, -0.4];
        for t in [0.3, 1.1] {
            let a = df_zonal(0, &p, t, &x, &x, Method::ClosedForm).unwrap().norm();
            let b = df_zonal(0, &p, t + PI, &x, &x, Method::ClosedForm).unwrap().norm();
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn pole_rejection() {
        let p = single(KernelKind::Df, ZoneSelector::Global);
        assert!(matches!(df_global(&p, PI, &[0.0; 2], &[0.0; 2]), Err(Error::Pole { .. })));
        assert!(matches!(partition(KernelKind::Df, 0, &p, 2.0 * PI), Err(Error::Pole { .. })));
        assert!(df_global(&p, 1.0, &[0.0; 2], &[0.0; 2]).is_ok());
    }

    #[test]
    fn feynman_prefactor_is_the_continued_heat_prefactor() {
        let p = single(KernelKind::Df, ZoneSelector::Global);
        for t in [0.4, 1.3, 2.2] {
            let df = df_global(&p, t, &[0.0; 2], &[0.0; 2]).unwrap();
            let wk = global_wk_tau(&p, Complex64::new(0.0, t), &[0.0; 2], &[0.0; 2]);
            assert!((df - wk).norm() < 1e-14);
            assert!((df.norm() - 1.0 / (2.0 * PI * t.sin().abs())).abs() < 1e-14);
        }
    }

    #[test]
    fn wick_rotation_coefficientwise() {
        for p in [
            single(KernelKind::Wk, ZoneSelector::Gross(0)),
            KernelParams::standard(&[(0.5, 2), (1.5, 4)], KernelKind::Wk, ZoneSelector::Gross(0)).unwrap(),
        ] {
            let r = wick_consistency(&p, 0.9).unwrap();
            assert!(r.zone0 < 1e-14 && r.global < 1e-13, "{r:?}");
        }
        let p = single(KernelKind::Df, ZoneSelector::Gross(0));
        let (x, y) = ([0.3, 0.2], [0.1, -0.5]);
        let a = df_zone0_explicit(&p, 0.7, &x, &y).unwrap();
        let b = df_zonal(0, &p, 0.7, &x, &y, Method::ClosedForm).unwrap();
        assert!((a - b).norm() < 1e-15);
    }

    #[test]
    fn partition_examples() {
        let p = single(KernelKind::Wk, ZoneSelector::Gross(0));
        for t in [0.5, 1.0, 2.0] {
            let z = partition(KernelKind::Wk, 0, &p, t).unwrap();
            assert!((z.re - 1.0 / (2.0 * t.sinh())).abs() < 1e-14);
            // Geometric-series oracle Σ_p e^{−t(2p+1)}.
            let oracle: f64 = (0..400).map(|n: i32| (-f64::from(2 * n + 1) * t).exp()).sum();
            assert!((z.re - oracle).abs() < 1e-14);
        }
        assert!(partition(KernelKind::Wk, 0, &p, 60.0).unwrap().norm() < 1e-25);
        assert!((partition(KernelKind::Wk, 0, &p, 1.0).unwrap().re - 0.425_459_064_1).abs() < 1e-10);
    }

    #[test]
    fn partition_binomial_ratio_is_exact() {
        for k in [2usize, 4, 6] {
            let p = KernelParams::single(k, 0.8, KernelKind::Wk, ZoneSelector::Gross(0)).unwrap();
            let z0 = partition(KernelKind::Wk, 0, &p, 0.7).unwrap();
            for a in 0..4 {
                let za = partition(KernelKind::Wk, a, &p, 0.7).unwrap();
                let c = binomial((a + k / 2 - 1) as u64, a as u64) as f64;
                assert_eq!(za, z0 * c, "k={k} a={a}");
            }
        }
    }

    #[test]
    fn partition_triple_agreement() {
        for k in [2usize, 4] {
            let p = KernelParams::single(k, 1.0, KernelKind::Wk, ZoneSelector::Gross(0)).unwrap();
            for a in 0..3 {
                for t in [0.5, 1.0, 2.0] {
                    let z = partition(KernelKind::Wk, a, &p, t).unwrap();
                    let tr = dominant_trace(KernelKind::Wk, a, &p, t, 8).unwrap();
                    let es = partition_eigen_sum(KernelKind::Wk, a, &p, t).unwrap();
                    assert!((z - tr).norm() < 1e-12 * z.norm());
                    assert!((z - es.value).norm() < 1e-13 * z.norm() && es.tail_bound < 1e-14 * z.norm());
                }
            }
        }
    }

    #[test]
    fn feynman_partition_by_abel_summation_and_moments() {
        let p = KernelParams::standard(&[(1.0, 2), (0.6, 2)], KernelKind::Df, ZoneSelector::Gross(0)).unwrap();
        for a in 0..3 {
            for t in [0.5, 1.3] {
                let z = partition(KernelKind::Df, a, &p, t).unwrap();
                let es = partition_eigen_sum(KernelKind::Df, a, &p, t).unwrap();
                assert!((z - es.value).norm() < 1e-8 * z.norm(), "a={a} t={t}: {} vs {}", z, es.value);
                let tr = dominant_trace(KernelKind::Df, a, &p, t, 8).unwrap();
                assert!((z - tr).norm() < 1e-12 * z.norm());
            }
        }
    }

    #[test]
    fn remainder_traces_vanish() {
        for kind in [KernelKind::Wk, KernelKind::Df] {
            let p = KernelParams::standard(&[(1.0, 2), (0.5, 2)], kind, ZoneSelector::Gross(1)).unwrap();
            let r = remainder_trace(kind, 1, &p, 0.8, 12).unwrap();
            assert!(r.norm() < 1e-12, "{kind:?}: {r}");
        }
        let p = single(KernelKind::Wk, ZoneSelector::Gross(2));
        for a in 2..4 {
            assert!(remainder_trace(KernelKind::Wk, a, &p, 0.6, 16).unwrap().norm() < 1e-10);
        }
    }

    #[test]
    fn chapman_kolmogorov() {
        let samples: Vec<(Vec<f64>, Vec<f64>)> =
            vec![(vec![0.2, -0.1], vec![0.5, 0.3]), (vec![-0.7, 0.4], vec![0.1, 0.9])];
        for zone in [ZoneSelector::Gross(0), ZoneSelector::Gross(1), ZoneSelector::Global] {
            let p = single(KernelKind::Wk, zone);
            let r = verify_ck(&p, 0.3, 0.7, &samples, DEFAULT_KERNEL_NODES).unwrap();
            assert!(r < 1e-10, "{zone:?}: {r:e}");
        }
        let p = single(KernelKind::Wk, ZoneSelector::Gross(2));
        assert!(verify_ck(&p, 0.3, 0.7, &samples, 30).unwrap() < 1e-9);
        let p = single(KernelKind::Df, ZoneSelector::Gross(0));
        assert!(verify_ck(&p, 0.3, 0.7, &samples, DEFAULT_KERNEL_NODES).unwrap() < 1e-9);
        let p = single(KernelKind::Df, ZoneSelector::Global);
        assert!(matches!(verify_ck(&p, 0.3, 0.7, &samples, 10), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn evolution_equations() {
        let (x, y) = ([0.3, -0.4], [0.5, 0.2]);
        for kind in [KernelKind::Wk, KernelKind::Df] {
            for a in 0..2 {
                let p = single(kind, ZoneSelector::Gross(a));
                let s = pde_study(&p, 0.6, &x, &y, 1e-3).unwrap();
                assert!(s.residual < 1e-5, "{kind:?} a={a}: {s:?}");
                assert!((s.ratio - 4.0).abs() < 0.2, "{kind:?} a={a}: {s:?}");
            }
        }
        let p =
            KernelParams::single(2, 0.8, KernelKind::Wk, ZoneSelector::Gross(0)).unwrap().with_constant(true).unwrap();
        assert!(pde_residual(&p, 0.6, &x, &y, 1e-3).unwrap() < 1e-5);
    }

    #[test]
    fn explicit_global_heat_kernel_verdict() {
        let p = single(KernelKind::Wk, ZoneSelector::Global);
        let samples = vec![(vec![0.3, -0.4], vec![0.5, 0.2]), (vec![1.0, 0.0], vec![0.0, 1.0])];
        let r = global_wk_report(&p, 0.6, &samples, 1e-3).unwrap();
        assert!(r.consistent, "{r:?}");
    }

    #[test]
    fn smeared_limits() {
        let x = [0.3, -0.2];
        let c = [0.1, 0.4];
        let p = single(KernelKind::Wk, ZoneSelector::Global);
        let e1 = smeared_limit(&p, 0.1, &x, &c, 40).unwrap();
        let e2 = smeared_limit(&p, 0.01, &x, &c, 40).unwrap();
        assert!(e2 < e1 && e2 < 0.02, "{e1} {e2}");
        let p = single(KernelKind::Df, ZoneSelector::Global);
        let f1 = smeared_limit(&p, 0.1, &x, &c, 0).unwrap();
        let f2 = smeared_limit(&p, 0.001, &x, &c, 0).unwrap();
        assert!(f2 < f1 && f2 < 2e-3, "{f1} {f2}");
    }

    #[test]
    fn zones_compress_the_global_flow() {
        let (x, y) = ([0.2, -0.3], [0.4, 0.1]);
        let p = single(KernelKind::Wk, ZoneSelector::Global);
        for a in 0..3 {
            let r = compression_residual(&p, a, 0.5, &x, &y, 24).unwrap();
            assert!(r < 1e-5, "a={a}: {r:e}");
        }
    }

    #[test]
    fn rotated_complex_structure() {
        // J' = O J O^T for a rotation O mixing the planes of R⁴.
        let c = 0.6f64;
        let s = 0.8f64;
        let o = SquareMatrix::from_rows(&[
            vec![c, 0.0, -s, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![s, 0.0, c, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ]);
        let j0 = standard_complex_structure::<f64>(4);
        let j = &(&o * &j0) * &o.transpose();
        let rotated =
            KernelParams::new(vec![Block::new(0.9, j).unwrap()], KernelKind::Wk, ZoneSelector::Gross(1)).unwrap();
        let plain = KernelParams::single(4, 0.9, KernelKind::Wk, ZoneSelector::Gross(1)).unwrap();
        let x = [0.3, -0.1, 0.5, 0.2];
        let y = [-0.2, 0.4, 0.1, 0.6];
        let ot = o.transpose();
        let a = evaluate(&rotated, 0.5, &x, &y, Method::EigenSum).unwrap();
        let b = evaluate(&plain, 0.5, &ot.apply(&x), &ot.apply(&y), Method::ClosedForm).unwrap();
        let c2 = evaluate(&rotated, 0.5, &x, &y, Method::ClosedForm).unwrap();
        assert!((a - b).norm() < 1e-12 && (a - c2).norm() < 1e-12);
        assert!(Block::new(1.0, SquareMatrix::<f64>::identity(2)).is_err());
    }

    #[test]
    fn integrate_exp_poly_against_closed_gaussian() {
        // ∫ (1 + x²) e^{−x² − y² + xy + i y} over R².
        let x = Poly::<f64>::variable(2, 0);
        let y = Poly::<f64>::variable(2, 1);
        let expo = x.mul(&x).add(&y.mul(&y)).scale_real(-1.0).add(&x.mul(&y)).add(&y.scale(Complex64::new(0.0, 1.0)));
        let f = ExpPoly::new(Poly::one(2).add(&x.mul(&x)), expo);
        let v = integrate_exp_poly(&f, 30).unwrap();
        // Oracle: M = [[1, −½], [−½, 1]], b = (0, i): ∫ = π/√det M · exp(bᵀM⁻¹b/4)·(1 + E[x²]),
        // with mean m = M⁻¹b/2 and covariance M⁻¹/2.
        let det: f64 = 0.75;
        let minv = [[1.0 / det, 0.5 / det], [0.5 / det, 1.0 / det]];
        let b = [Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0)];
        let quad = b[1] * b[1] * minv[1][1];
        let base = Complex64::new(PI / det.sqrt(), 0.0) * (quad / 4.0).exp();
        let mean_x = b[1] * minv[0][1] / 2.0;
        let ex2 = mean_x * mean_x + minv[0][0] / 2.0;
        assert!((v - base * (ex2 + 1.0)).norm() < 1e-13);
        let bad = ExpPoly::new(Poly::one(2), x.mul(&x));
        assert!(integrate_exp_poly(&bad, 4).is_err());
    }

    proptest! {
        #[test]
        fn heat_kernels_positive_on_diagonal(a in 0usize..3, t in 0.05f64..3.0, x0 in -1.5f64..1.5, x1 in -1.5f64..1.5) {
            let p = single(KernelKind::Wk, ZoneSelector::Gross(a));
            let v = wk_zonal(a, &p, t, &[x0, x1], &[x0, x1], Method::EigenSum).unwrap();
            prop_assert!(v.re > 0.0 && v.im.abs() < 1e-14 * (1.0 + v.re));
        }

        #[test]
        fn partition_decreases_in_time(t in 0.05f64..5.0, dt in 0.01f64..1.0) {
            let p = single(KernelKind::Wk, ZoneSelector::Gross(0));
            prop_assert!(partition(KernelKind::Wk, 0, &p, t + dt).unwrap().re < partition(KernelKind::Wk, 0, &p, t).unwrap().re);
        }
    }
}
