//! Binomials and generalized Laguerre polynomials.

use crate::scalar::Real;

/// Integer binomial coefficient C(n, k); zero when k > n.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    u64::try_from(acc).expect("binomial coefficient overflows u64")
}

/// Generalized binomial coefficient C(x, j) for real upper argument.
pub fn binomial_real<T: Real>(x: T, j: usize) -> T {
    let mut acc = T::one();
    for i in 0..j {
        acc = acc * (x - T::from_usize_exact(i)) / T::from_usize_exact(i + 1);
    }
    acc
}

/// Generalized Laguerre polynomial L_n^(α)(x) by the three-term recurrence
/// (n+1) L_{n+1} = (2n + 1 + α − x) L_n − (n + α) L_{n−1}.
pub fn laguerre<T: Real>(n: usize, alpha: T, x: T) -> T {
    let mut prev = T::one();
    if n == 0 {
        return prev;
    }
    let mut cur = T::one() + alpha - x;
    for m in 1..n {
        let mf = T::from_usize_exact(m);
        let next = ((mf + mf + T::one() + alpha - x) * cur - (mf + alpha) * prev) / (mf + T::one());
        prev = cur;
        cur = next;
    }
    cur
}

/// Power-series coefficients of L_n^(α): L_n^(α)(x) = Σ_j c_j x^j with
/// c_j = (−1)^j C(n + α, n − j) / j!.
pub fn laguerre_coefficients<T: Real>(n: usize, alpha: T) -> Vec<T> {
    let top = T::from_usize_exact(n) + alpha;
    let mut out = Vec::with_capacity(n + 1);
    let mut factorial = T::one();
    for j in 0..=n {
        if j > 0 {
            factorial *= T::from_usize_exact(j);
        }
        let sign = if j % 2 == 0 { T::one() } else { -T::one() };
        out.push(sign * binomial_real(top, n - j) / factorial);
    }
    out
}

pub(crate) fn factorial<T: Real>(n: usize) -> T {
    (1..=n).fold(T::one(), |acc, i| acc * T::from_usize_exact(i))
}
