//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real floating-point scalar the engine is generic over (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_exact(n: usize) -> Self {
        Self::from_usize(n).expect("integer representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over the engine scalar.
pub type Cx<T> = Complex<T>;

#[inline]
pub(crate) fn cx<T: Real>(re: T, im: T) -> Cx<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn re<T: Real>(x: T) -> Cx<T> {
    Complex::new(x, T::zero())
}

#[inline]
pub(crate) fn imag_unit<T: Real>() -> Cx<T> {
    Complex::new(T::zero(), T::one())
}

/// Neumaier compensated accumulator for complex sums.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum<T: Real> {
    sum: Cx<T>,
    carry: Cx<T>,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self { sum: Cx::new(T::zero(), T::zero()), carry: Cx::new(T::zero(), T::zero()) }
    }

    #[inline]
    pub fn add(&mut self, x: Cx<T>) {
        let (s, c) = neumaier_step(self.sum.re, self.carry.re, x.re);
        self.sum.re = s;
        self.carry.re = c;
        let (s, c) = neumaier_step(self.sum.im, self.carry.im, x.im);
        self.sum.im = s;
        self.carry.im = c;
    }

    pub fn value(&self) -> Cx<T> {
        self.sum + self.carry
    }
}

#[inline]
fn neumaier_step<T: Real>(sum: T, carry: T, x: T) -> (T, T) {
    let t = sum + x;
    let c = if sum.abs() >= x.abs() { carry + ((sum - t) + x) } else { carry + ((x - t) + sum) };
    (t, c)
}

/// Compensated sum of a sequence of complex values.
pub fn compensated_sum<T: Real, I: IntoIterator<Item = Cx<T>>>(items: I) -> Cx<T> {
    let mut acc = CompensatedSum::new();
    for x in items {
        acc.add(x);
    }
    acc.value()
}

/// Compensated sum of real values.
pub fn compensated_sum_real<T: Real, I: IntoIterator<Item = T>>(items: I) -> T {
    compensated_sum(items.into_iter().map(re)).re
}
