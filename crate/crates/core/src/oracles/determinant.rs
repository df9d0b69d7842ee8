//! Exact integer determinants.
//!
//! The main engine eliminates modulo several 31-bit primes and recombines
//! with the Chinese remainder theorem; the number of primes comes from an a
//! priori bound on the (nonnegative) determinant. Bareiss fraction-free
//! elimination over big integers is kept as an independent cross-check.

use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Distinct primes below 2^31, largest first.
fn primes() -> impl Iterator<Item = u64> {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES
        .get_or_init(|| {
            ((1u64 << 30)..(1u64 << 31))
                .rev()
                .filter(|&n| is_prime(n))
                .take(1024)
                .collect()
        })
        .iter()
        .copied()
}

/// Deterministic Miller-Rabin for 32-bit inputs.
fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2, 3, 5, 7, 11, 13] {
        if n.is_multiple_of(q) {
            return n == q;
        }
    }
    let (mut d, mut s) = (n - 1, 0);
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 7, 61] {
        if a % n == 0 {
            continue;
        }
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = x * x % n;
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

/// Determinant of a square integer matrix modulo `p` (row-major input).
pub fn det_mod(matrix: &[i64], size: usize, p: u64) -> u64 {
    let mut a: Vec<u64> = matrix.iter().map(|&x| x.rem_euclid(p as i64) as u64).collect();
    // Rows stop being nonzero past `end[r]`; keeps banded Laplacians cheap.
    let mut end: Vec<usize> = (0..size)
        .map(|r| (0..size).rev().find(|&c| a[r * size + c] != 0).map_or(0, |c| c + 1))
        .collect();
    let mut det = 1u64;
    for col in 0..size {
        let Some(piv) = (col..size).find(|&r| a[r * size + col] != 0) else {
            return 0;
        };
        if piv != col {
            for c in col..size {
                a.swap(piv * size + c, col * size + c);
            }
            end.swap(piv, col);
            det = (p - det) % p;
        }
        let pv = a[col * size + col];
        det = det * pv % p;
        let inv = pow_mod(pv, p - 2, p);
        let row_end = end[col];
        for r in col + 1..size {
            let x = a[r * size + col];
            if x == 0 {
                continue;
            }
            let f = x * inv % p;
            for c in col..row_end {
                let v = a[col * size + c];
                if v != 0 {
                    let cell = &mut a[r * size + c];
                    *cell = (*cell + p - f * v % p) % p;
                }
            }
            end[r] = end[r].max(row_end);
        }
    }
    det
}

/// Determinant known to lie in `[0, bound]`, by CRT over enough primes.
pub fn det_nonneg_bounded(matrix: &[i64], size: usize, bound: &BigUint) -> BigUint {
    if size == 0 {
        return BigUint::one();
    }
    let mut modulus = BigUint::one();
    let mut value = BigUint::zero();
    for p in primes() {
        let r = det_mod(matrix, size, p);
        // Garner step: value += modulus * ((r - value) * modulus^{-1} mod p).
        let v_mod = (&value % p).to_u64_digits().first().copied().unwrap_or(0);
        let m_mod = (&modulus % p).to_u64_digits().first().copied().unwrap_or(0);
        let t = (r + p - v_mod) % p * pow_mod(m_mod, p - 2, p) % p;
        value += &modulus * t;
        modulus *= p;
        if &modulus > bound {
            return value;
        }
    }
    unreachable!("prime supply exhausted")
}

/// Bareiss fraction-free determinant.
pub fn det_bareiss(matrix: &[i64], size: usize) -> BigInt {
    if size == 0 {
        return BigInt::one();
    }
    let mut a: Vec<BigInt> = matrix.iter().map(|&x| BigInt::from(x)).collect();
    let mut sign = 1;
    let mut prev = BigInt::one();
    for k in 0..size - 1 {
        if a[k * size + k].is_zero() {
            let Some(piv) = (k + 1..size).find(|&r| !a[r * size + k].is_zero()) else {
                return BigInt::zero();
            };
            for c in 0..size {
                a.swap(piv * size + c, k * size + c);
            }
            sign = -sign;
        }
        for i in k + 1..size {
            for j in k + 1..size {
                let num = &a[i * size + j] * &a[k * size + k] - &a[i * size + k] * &a[k * size + j];
                let (q, r) = num.div_rem(&prev);
                debug_assert!(r.is_zero());
                a[i * size + j] = q;
            }
        }
        prev = a[k * size + k].clone();
    }
    let d = a[size * size - 1].clone();
    if sign < 0 {
        -d
    } else {
        d
    }
}

/// Bareiss result as a nonnegative integer (panics on a negative value).
pub fn det_bareiss_nonneg(matrix: &[i64], size: usize) -> BigUint {
    let d = det_bareiss(matrix, size);
    assert!(!d.is_negative(), "negative determinant");
    d.to_biguint().expect("nonnegative")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_matrices() {
        let m = [2, 1, 1, 3];
        assert_eq!(det_bareiss(&m, 2), BigInt::from(5));
        assert_eq!(det_nonneg_bounded(&m, 2, &BigUint::from(6u32)), BigUint::from(5u32));
        let sing = [1, 2, 2, 4];
        assert_eq!(det_bareiss(&sing, 2), BigInt::zero());
        assert_eq!(det_mod(&sing, 2, 101), 0);
        let swap = [0, 1, 1, 0];
        assert_eq!(det_bareiss(&swap, 2), BigInt::from(-1));
        assert_eq!(det_mod(&swap, 2, 101), 100);
    }

    #[test]
    fn large_values_need_several_primes() {
        // diag(2^40, 2^40, 3): determinant 3 * 2^80.
        let big = 1i64 << 40;
        let m = [big, 0, 0, 0, big, 0, 0, 0, 3];
        let expect = BigUint::from(3u32) << 80;
        assert_eq!(det_nonneg_bounded(&m, 3, &(BigUint::one() << 90)), expect);
        assert_eq!(det_bareiss_nonneg(&m, 3), expect);
    }

    #[test]
    fn primes_are_prime() {
        let ps: Vec<u64> = primes().take(3).collect();
        assert_eq!(ps[0], 2147483647);
        assert!(ps.iter().all(|&p| is_prime(p)));
        let naive = |n: u64| (2..).take_while(|f| f * f <= n).all(|f| !n.is_multiple_of(f));
        for n in 2..5000 {
            assert_eq!(is_prime(n), naive(n), "{n}");
        }
    }
}
