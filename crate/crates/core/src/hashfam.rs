//! k-wise independent hashing `[n] -> [m]` for `m` a power of two.
//!
//! A function is a random polynomial of degree `k - 1` over `GF(2^f)` with
//! `2^f >= max(n, m)`, evaluated at `x - 1` and truncated to the low
//! `log2 m` bits. Distinct points give independent uniform field values,
//! and truncation keeps them uniform on the buckets. The field modulus is
//! the first irreducible `x^f + c` in increasing order of `c`, found once
//! per degree with Rabin's test.

use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Carryless product of two polynomials of degree below 64.
fn clmul(a: u64, b: u64) -> u128 {
    let (a, mut b) = (a as u128, b);
    let mut acc = 0u128;
    let mut shift = 0;
    while b != 0 {
        let tz = b.trailing_zeros();
        shift += tz;
        b >>= tz;
        acc ^= a << shift;
        b >>= 1;
        shift += 1;
    }
    acc
}

fn degree(p: u128) -> i32 {
    127 - p.leading_zeros() as i32
}

/// Remainder of `a` modulo `p` in `GF(2)[x]`.
fn poly_rem(mut a: u128, p: u128) -> u128 {
    let dp = degree(p);
    while a != 0 && degree(a) >= dp {
        a ^= p << (degree(a) - dp);
    }
    a
}

fn poly_gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let r = poly_rem(a, b);
        a = b;
        b = r;
    }
    a
}

/// `a * b mod p` for `a, b` already reduced modulo `p`.
fn mulmod(a: u64, b: u64, p: u128) -> u64 {
    poly_rem(clmul(a, b), p) as u64
}

/// `x^(2^e) mod p` by repeated squaring.
fn x_pow_2pow(e: u32, p: u128) -> u64 {
    let mut r = poly_rem(2, p) as u64;
    for _ in 0..e {
        r = mulmod(r, r, p);
    }
    r
}

fn prime_factors(mut n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Rabin's irreducibility test for a polynomial of degree `f`.
fn is_irreducible(p: u128, f: u32) -> bool {
    if x_pow_2pow(f, p) as u128 != poly_rem(2, p) {
        return false;
    }
    prime_factors(f).into_iter().all(|q| {
        let h = (x_pow_2pow(f / q, p) as u128) ^ poly_rem(2, p);
        poly_gcd(p, h) == 1
    })
}

static MODULI: [OnceLock<u128>; 64] = [const { OnceLock::new() }; 64];

/// Irreducible polynomial of degree `f` (1 to 63), including the `x^f` term.
pub fn field_modulus(f: u32) -> u128 {
    assert!((1..64).contains(&f), "field degree {f} outside 1..=63");
    *MODULI[f as usize].get_or_init(|| {
        let top = 1u128 << f;
        (1u128..top)
            .map(|c| top | c)
            .find(|&p| is_irreducible(p, f))
            .expect("an irreducible polynomial exists in every degree")
    })
}

/// One function from the family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KWiseHash {
    k: usize,
    n: u64,
    m: u64,
    field_bits: u32,
    out_bits: u32,
    /// Coefficients, constant term first.
    coeffs: Vec<u64>,
    #[serde(skip)]
    modulus: u128,
}

impl KWiseHash {
    /// Draws a function from the family using `rng`.
    pub fn sample<R: Rng + ?Sized>(k: usize, n: u64, m: u64, rng: &mut R) -> Result<Self> {
        if k == 0 {
            return Err(invalid("independence k must be at least 1"));
        }
        if n == 0 {
            return Err(invalid("domain must be nonempty"));
        }
        if !m.is_power_of_two() {
            return Err(invalid(format!("range size {m} is not a power of two")));
        }
        let out_bits = m.trailing_zeros();
        let need = n.max(m);
        let field_bits = (64 - (need - 1).leading_zeros()).max(1);
        if field_bits > 63 {
            return Err(invalid("domain or range too large for a 63-bit field"));
        }
        let mask = (1u64 << field_bits) - 1;
        let coeffs = (0..k).map(|_| rng.gen::<u64>() & mask).collect();
        Ok(Self { k, n, m, field_bits, out_bits, coeffs, modulus: field_modulus(field_bits) })
    }

    pub fn independence(&self) -> usize {
        self.k
    }

    pub fn domain(&self) -> u64 {
        self.n
    }

    pub fn range(&self) -> u64 {
        self.m
    }

    pub fn field_bits(&self) -> u32 {
        self.field_bits
    }

    /// Random bits drawn: `k` field elements.
    pub fn seed_bits(&self) -> usize {
        self.k * self.field_bits as usize
    }

    /// Bucket of `x` in `0..m`, for `x` in `1..=n`.
    pub fn eval(&self, x: u64) -> Result<u64> {
        if x == 0 || x > self.n {
            return Err(Error::OutOfRange { value: x as f64, lo: 1.0, hi: self.n as f64 });
        }
        Ok(self.eval_unchecked(x))
    }

    /// As [`eval`](Self::eval) without the range check.
    #[inline]
    pub fn eval_unchecked(&self, x: u64) -> u64 {
        let modulus = if self.modulus == 0 { field_modulus(self.field_bits) } else { self.modulus };
        let z = x - 1;
        let mut acc = 0u64;
        for &c in self.coeffs.iter().rev() {
            acc = mulmod(acc, z, modulus) ^ c;
        }
        acc & (self.m - 1)
    }
}

/// Draws a function with a seeded generator.
pub fn sample_hash(k: usize, n: u64, m: u64, seed: u64) -> Result<KWiseHash> {
    KWiseHash::sample(k, n, m, &mut crate::rng::stream(seed, &[0x4a54_4a54]))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force irreducibility: no factor of degree 1..=f/2.
    fn irreducible_naive(p: u128) -> bool {
        let f = degree(p);
        (2u128..(1u128 << (f / 2 + 1))).all(|q| poly_rem(p, q) != 0)
    }

    #[test]
    fn moduli_are_irreducible() {
        for f in 1..=14 {
            let p = field_modulus(f);
            assert_eq!(degree(p), f as i32);
            assert!(irreducible_naive(p), "degree {f}: {p:b}");
        }
        for f in 15..64 {
            assert_eq!(degree(field_modulus(f)), f as i32);
        }
        // x^8 + x^4 + x^3 + x + 1 is the first in this order
        assert_eq!(field_modulus(8), 0x11b);
    }

    #[test]
    fn rabin_matches_naive() {
        for p in 4u128..1024 {
            assert_eq!(is_irreducible(p, degree(p) as u32), irreducible_naive(p), "{p:b}");
        }
    }

    #[test]
    fn field_multiplication_is_a_group() {
        // every nonzero element has an inverse in GF(2^8)
        let p = field_modulus(8);
        for a in 1u64..256 {
            assert!((1u64..256).any(|b| mulmod(a, b, p) == 1), "{a}");
        }
    }

    #[test]
    fn basic_contract() {
        let h = sample_hash(4, 100, 1, 3).unwrap();
        assert!((1..=100).all(|x| h.eval(x).unwrap() == 0));
        let a = sample_hash(4, 1000, 64, 7).unwrap();
        let b = sample_hash(4, 1000, 64, 7).unwrap();
        assert_eq!(a, b);
        assert!((1..=1000).all(|x| a.eval(x).unwrap() == b.eval(x).unwrap() && a.eval(x).unwrap() < 64));
        assert!(a.eval(0).is_err() && a.eval(1001).is_err());
        assert!(sample_hash(4, 10, 12, 1).is_err());
        assert_eq!(a.seed_bits(), 4 * 10);
    }

    #[test]
    fn serde_roundtrip_recomputes_modulus() {
        let a = sample_hash(3, 500, 8, 11).unwrap();
        let b: KWiseHash = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        assert!((1..=500).all(|x| a.eval(x).unwrap() == b.eval(x).unwrap()));
    }

    #[test]
    fn polynomial_of_degree_one_is_a_bijection() {
        // with k = 2, m = n = 2^f and a nonzero slope the map is a permutation
        let mut rng = crate::rng::stream(5, &[]);
        let h = loop {
            let h = KWiseHash::sample(2, 256, 256, &mut rng).unwrap();
            if h.coeffs[1] != 0 {
                break h;
            }
        };
        let mut seen = vec![false; 256];
        for x in 1..=256 {
            seen[h.eval(x).unwrap() as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }
}
