//! Skew-endomorphism spaces J_z of Heisenberg-type groups H_l^(a,b).
//!
//! The X-space is R^k with k = r·(a+b). The center Z = R^l acts through
//! J_Z = Σ Z_α J_α, block-diagonal with j_Z on the first `a` irreducible
//! blocks and −j_Z on the last `b`. For l = 1 the block is the rotation
//! generator on R², for l = 3 it is left multiplication by the pure
//! quaternion Z₁i + Z₂j + Z₃k on R⁴ ≅ H (basis 1, i, j, k).

use std::ops::{Add, Mul, Neg, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense square real matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix<T: Real> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> SquareMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix rows must be square");
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Builds a matrix whose j-th column is `cols[j]`.
    pub fn from_columns(cols: &[Vec<T>]) -> Self {
        let n = cols.len();
        let mut m = Self::zeros(n);
        for (j, col) in cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| (0..self.n).fold(T::zero(), |acc, j| acc + self[(i, j)] * x[j])).collect()
    }

    pub fn scale(&self, s: T) -> Self {
        Self { n: self.n, data: self.data.iter().map(|&v| v * s).collect() }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// Places `blocks` along the diagonal.
    pub fn block_diagonal(blocks: &[SquareMatrix<T>]) -> Self {
        let n = blocks.iter().map(|b| b.n).sum();
        let mut m = Self::zeros(n);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.n {
                for j in 0..b.n {
                    m[(off + i, off + j)] = b[(i, j)];
                }
            }
            off += b.n;
        }
        m
    }
}

impl<T: Real> std::ops::Index<(usize, usize)> for SquareMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T: Real> std::ops::IndexMut<(usize, usize)> for SquareMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

impl<T: Real> Add for &SquareMatrix<T> {
    type Output = SquareMatrix<T>;
    fn add(self, rhs: Self) -> SquareMatrix<T> {
        assert_eq!(self.n, rhs.n);
        SquareMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect() }
    }
}

impl<T: Real> Sub for &SquareMatrix<T> {
    type Output = SquareMatrix<T>;
    fn sub(self, rhs: Self) -> SquareMatrix<T> {
        assert_eq!(self.n, rhs.n);
        SquareMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect() }
    }
}

impl<T: Real> Neg for &SquareMatrix<T> {
    type Output = SquareMatrix<T>;
    fn neg(self) -> SquareMatrix<T> {
        self.scale(-T::one())
    }
}

impl<T: Real> Mul for &SquareMatrix<T> {
    type Output = SquareMatrix<T>;
    fn mul(self, rhs: Self) -> SquareMatrix<T> {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for l in 0..n {
                let a = self[(i, l)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * rhs[(l, j)];
                }
            }
        }
        out
    }
}

/// Signature of an H-type group, as it appears in configuration files:
/// `{"l": 3, "a": 2, "b": 0}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub l: usize,
    pub a: usize,
    pub b: usize,
}

/// Clifford data of H_l^(a,b).
#[derive(Clone, Debug, PartialEq)]
pub struct EndomorphismSpace<T: Real> {
    spec: GroupSpec,
    block: usize,
    basis: Vec<SquareMatrix<T>>,
}

/// Irreducible block size r(l).
pub fn block_size(l: usize) -> Result<usize> {
    match l {
        1 => Ok(2),
        3 => Ok(4),
        other => Err(Error::UnsupportedCenterDimension(other)),
    }
}

fn irreducible_generators<T: Real>(l: usize) -> Result<Vec<SquareMatrix<T>>> {
    let (o, z) = (T::one(), T::zero());
    match l {
        // J e1 = e2: columns are images of the basis vectors.
        1 => Ok(vec![SquareMatrix::from_rows(&[vec![z, -o], vec![o, z]])]),
        3 => {
            // Left multiplication by i, j, k on the basis (1, i, j, k).
            let li =
                SquareMatrix::from_rows(&[vec![z, -o, z, z], vec![o, z, z, z], vec![z, z, z, -o], vec![z, z, o, z]]);
            let lj =
                SquareMatrix::from_rows(&[vec![z, z, -o, z], vec![z, z, z, o], vec![o, z, z, z], vec![z, -o, z, z]]);
            let lk =
                SquareMatrix::from_rows(&[vec![z, z, z, -o], vec![z, z, -o, z], vec![z, o, z, z], vec![o, z, z, z]]);
            Ok(vec![li, lj, lk])
        }
        other => Err(Error::UnsupportedCenterDimension(other)),
    }
}

/// Builds the endomorphism space of H_l^(a,b).
pub fn build_htype<T: Real>(l: usize, a: usize, b: usize) -> Result<EndomorphismSpace<T>> {
    let generators = irreducible_generators::<T>(l)?;
    if a + b == 0 {
        return Err(Error::InvalidInput("a + b must be at least 1".into()));
    }
    let block = block_size(l)?;
    let basis = generators
        .iter()
        .map(|j| {
            let neg = -j;
            let blocks: Vec<_> = (0..a).map(|_| j.clone()).chain((0..b).map(|_| neg.clone())).collect();
            SquareMatrix::block_diagonal(&blocks)
        })
        .collect();
    Ok(EndomorphismSpace { spec: GroupSpec { l, a, b }, block, basis })
}

impl<T: Real> EndomorphismSpace<T> {
    pub fn from_spec(spec: GroupSpec) -> Result<Self> {
        build_htype(spec.l, spec.a, spec.b)
    }

    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    /// Center dimension l.
    pub fn center_dim(&self) -> usize {
        self.spec.l
    }

    /// X-space dimension k = r·(a+b).
    pub fn x_dim(&self) -> usize {
        self.block * (self.spec.a + self.spec.b)
    }

    pub fn block_size(&self) -> usize {
        self.block
    }

    pub fn basis(&self) -> &[SquareMatrix<T>] {
        &self.basis
    }

    /// J_Z = Σ Z_α J_α.
    pub fn j_of(&self, z: &[T]) -> Result<SquareMatrix<T>> {
        if z.len() != self.spec.l {
            return Err(Error::DimensionMismatch { expected: self.spec.l, got: z.len() });
        }
        let mut m = SquareMatrix::zeros(self.x_dim());
        for (zi, j) in z.iter().zip(&self.basis) {
            m = &m + &j.scale(*zi);
        }
        Ok(m)
    }

    /// Two spaces with equal l and a+b (σ-equivalent members of one family).
    pub fn same_family(&self, other: &Self) -> bool {
        self.spec.l == other.spec.l && self.spec.a + self.spec.b == other.spec.a + other.spec.b
    }

    /// Worst deviation from the polarized Clifford identity
    /// J_Z J_W + J_W J_Z = −2⟨Z,W⟩·id and from skewness over a random sample.
    pub fn clifford_defect(&self, samples: usize, seed: u64) -> T {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = self.spec.l;
        let k = self.x_dim();
        let mut worst = T::zero();
        for _ in 0..samples {
            let z: Vec<T> = (0..l).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect();
            let w: Vec<T> = (0..l).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect();
            let jz = self.j_of(&z).expect("sample has center dimension");
            let jw = self.j_of(&w).expect("sample has center dimension");
            let dot = z.iter().zip(&w).fold(T::zero(), |acc, (a, b)| acc + *a * *b);
            let anti = &(&jz * &jw) + &(&jw * &jz);
            let target = SquareMatrix::identity(k).scale(-(dot + dot));
            worst = worst.max((&anti - &target).max_abs());
            worst = worst.max((&jz + &jz.transpose()).max_abs());
        }
        worst
    }

    /// Checks the structural invariants; returns the worst defect.
    pub fn validate(&self) -> Result<T> {
        let defect = self.clifford_defect(32, 0x5eed);
        if defect > T::lit(1e-12).max(T::epsilon() * T::lit(64.0)) {
            return Err(Error::InvalidInput(format!("Clifford condition violated by {defect}")));
        }
        Ok(defect)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_dev(a: &SquareMatrix<f64>, b: &SquareMatrix<f64>) -> f64 {
        (a - b).max_abs()
    }

    #[test]
    fn heisenberg_complex_structure() {
        let s = build_htype::<f64>(1, 1, 0).unwrap();
        assert_eq!(s.x_dim(), 2);
        let j = &s.basis()[0];
        assert_eq!(max_dev(&(j * j), &SquareMatrix::identity(2).scale(-1.0)), 0.0);
        // J e1 = e2
        assert_eq!(j.apply(&[1.0, 0.0]), vec![0.0, 1.0]);
    }

    #[test]
    fn quaternion_generators_anticommute() {
        let s = build_htype::<f64>(3, 1, 0).unwrap();
        assert_eq!(s.x_dim(), 4);
        let id = SquareMatrix::identity(4);
        let b = s.basis();
        for a in 0..3 {
            assert_eq!(max_dev(&(&b[a] * &b[a]), &id.scale(-1.0)), 0.0);
            for c in 0..3 {
                if a != c {
                    let anti = &(&b[a] * &b[c]) + &(&b[c] * &b[a]);
                    assert_eq!(anti.max_abs(), 0.0);
                }
            }
        }
        // i·j = k as left multiplications
        assert_eq!(max_dev(&(&b[0] * &b[1]), &b[2]), 0.0);
    }

    #[test]
    fn signature_blocks_flip_sign() {
        let s = build_htype::<f64>(3, 1, 1).unwrap();
        assert_eq!(s.x_dim(), 8);
        let j1 = &s.basis()[0];
        for i in 0..4 {
            for c in 0..4 {
                assert_eq!(j1[(i + 4, c + 4)], -j1[(i, c)]);
                assert_eq!(j1[(i, c + 4)], 0.0);
            }
        }
        assert!(s.validate().unwrap() < 1e-12);
    }

    #[test]
    fn j_of_is_linear_and_clifford() {
        let s = build_htype::<f64>(3, 1, 0).unwrap();
        assert_eq!(s.j_of(&[0.0, 0.0, 0.0]).unwrap().max_abs(), 0.0);
        assert_eq!(max_dev(&s.j_of(&[1.0, 0.0, 0.0]).unwrap(), &s.basis()[0]), 0.0);
        let r = 1.0 / 2f64.sqrt();
        let jz = s.j_of(&[r, r, 0.0]).unwrap();
        assert!(max_dev(&(&jz * &jz), &SquareMatrix::identity(4).scale(-1.0)) < 1e-15);
        assert!(matches!(s.j_of(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn unsupported_center() {
        assert_eq!(build_htype::<f64>(2, 1, 0).unwrap_err(), Error::UnsupportedCenterDimension(2));
        assert!(build_htype::<f64>(1, 0, 0).is_err());
    }

    #[test]
    fn family_members_share_dimension() {
        for (a, b) in [(2, 0), (1, 1), (0, 2)] {
            let s = build_htype::<f64>(3, a, b).unwrap();
            assert_eq!(s.x_dim(), 8);
            assert!(s.clifford_defect(64, 7) < 1e-12);
            assert!(s.same_family(&build_htype(3, 2, 0).unwrap()));
        }
        let f = build_htype::<f32>(3, 2, 1).unwrap();
        assert!(f.clifford_defect(8, 1) < 1e-5);
    }
}
