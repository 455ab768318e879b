//! Number-theoretic primitives shared by every stage of the pipeline.
//!
//! Factor-base primes always fit in a machine word, so the per-prime
//! routines work on `u64` with `u128` intermediates. Anything that touches N
//! itself goes through `num-bigint`.

use num_bigint::{BigInt, BigUint, RandBigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Nonnegative residue of an arbitrary-precision integer modulo a word.
pub fn mod_small(x: &BigInt, p: u64) -> u64 {
    let r = mod_small_unsigned(x.magnitude(), p);
    if x.sign() == Sign::Minus && r != 0 {
        p - r
    } else {
        r
    }
}

pub fn mod_small_unsigned(x: &BigUint, p: u64) -> u64 {
    let p = p as u128;
    let mut r: u128 = 0;
    for digit in x.iter_u64_digits().rev() {
        r = ((r << 64) | digit as u128) % p;
    }
    r as u64
}

/// Inverse of `a` modulo `m`, or `None` when they share a factor.
pub fn inv_mod_u64(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = ((a % m) as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

fn check_odd_prime(p: u64) -> Result<()> {
    if p <= 2 || p.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("{p} is not an odd prime")));
    }
    Ok(())
}

/// Legendre symbol (a | p) for an odd prime p.
pub fn legendre(a: &BigInt, p: u64) -> Result<i8> {
    check_odd_prime(p)?;
    Ok(legendre_u64(mod_small(a, p), p))
}

/// Legendre symbol for a word-sized residue, via the binary Jacobi recurrence.
pub fn legendre_u64(a: u64, p: u64) -> i8 {
    let mut a = a % p;
    let mut n = p;
    let mut t = 1i8;
    while a != 0 {
        while a.is_multiple_of(2) {
            a /= 2;
            if matches!(n % 8, 3 | 5) {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// Square root of `n` modulo the odd prime `p`. Returns the smaller of the
/// two roots; the other one is `p - s`.
pub fn tonelli_shanks(n: u64, p: u64) -> Result<u64> {
    check_odd_prime(p)?;
    let n = n % p;
    if n == 0 {
        return Ok(0);
    }
    if legendre_u64(n, p) != 1 {
        return Err(Error::NoRoot { n, p });
    }
    let root = if p % 4 == 3 {
        pow_mod(n, (p + 1) / 4, p)
    } else {
        let mut q = p - 1;
        let mut s = 0u32;
        while q.is_multiple_of(2) {
            q /= 2;
            s += 1;
        }
        let mut z = 2u64;
        while legendre_u64(z, p) != -1 {
            z += 1;
        }
        let mut m = s;
        let mut c = pow_mod(z, q, p);
        let mut t = pow_mod(n, q, p);
        let mut r = pow_mod(n, q.div_ceil(2), p);
        while t != 1 {
            let mut i = 0u32;
            let mut t2 = t;
            while t2 != 1 {
                t2 = mul_mod(t2, t2, p);
                i += 1;
            }
            let b = pow_mod(c, 1u64 << (m - i - 1), p);
            m = i;
            c = mul_mod(b, b, p);
            t = mul_mod(t, c, p);
            r = mul_mod(r, b, p);
        }
        r
    };
    Ok(root.min(p - root))
}

/// Inverse of `a` modulo `m`. A shared factor is reported through
/// [`Error::NotInvertible`] together with the gcd.
pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Result<BigInt> {
    if *m <= BigInt::one() {
        return Err(Error::InvalidArgument(format!("modulus {m} must exceed 1")));
    }
    let e = a.mod_floor(m).extended_gcd(m);
    if !e.gcd.is_one() {
        return Err(Error::NotInvertible { gcd: e.gcd });
    }
    Ok(e.x.mod_floor(m))
}

pub fn isqrt_floor(n: &BigInt) -> Result<BigInt> {
    if n.is_negative() {
        return Err(Error::InvalidArgument(format!("square root of negative {n}")));
    }
    Ok(n.sqrt())
}

/// ⌈√N⌉, exact.
pub fn isqrt_ceil(n: &BigInt) -> Result<BigInt> {
    let r = isqrt_floor(n)?;
    if &(&r * &r) == n {
        Ok(r)
    } else {
        Ok(r + 1)
    }
}

const SMALL_WITNESSES: [u64; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];
const RANDOM_ROUNDS: usize = 40;

fn miller_rabin_u64(n: u64) -> bool {
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &SMALL_WITNESSES[..12] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn miller_rabin_witness(n: &BigUint, nm1: &BigUint, d: &BigUint, s: u64, a: &BigUint) -> bool {
    let mut x = a.modpow(d, n);
    if x.is_one() || &x == nm1 {
        return true;
    }
    for _ in 1..s {
        x = (&x * &x) % n;
        if &x == nm1 {
            return true;
        }
    }
    false
}

/// Primality verdict: deterministic below 3.3·10²⁴ (first 13 prime
/// witnesses), 40 seeded random Miller–Rabin rounds above.
pub fn is_probable_prime(n: &BigUint) -> bool {
    if let Some(small) = n.to_u64() {
        if small < 2 {
            return false;
        }
        for &p in &SMALL_WITNESSES {
            if small == p {
                return true;
            }
            if small % p == 0 {
                return false;
            }
        }
        return miller_rabin_u64(small);
    }
    for &p in &SMALL_WITNESSES {
        if mod_small_unsigned(n, p) == 0 {
            return false;
        }
    }
    let nm1 = n - 1u32;
    let s = nm1.trailing_zeros().unwrap_or(0);
    let d = &nm1 >> s;
    let deterministic_limit: BigUint = "3317044064679887385961981".parse().unwrap();
    if *n < deterministic_limit {
        return SMALL_WITNESSES
            .iter()
            .all(|&a| miller_rabin_witness(n, &nm1, &d, s, &BigUint::from(a)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mod_small_unsigned(n, u64::MAX));
    let two = BigUint::from(2u32);
    (0..RANDOM_ROUNDS).all(|_| {
        let a = rng.gen_biguint_range(&two, &nm1);
        miller_rabin_witness(n, &nm1, &d, s, &a)
    })
}

/// Returns `(b, e)` with `b^e = n` and `e ≥ 2` maximal, if any.
pub fn is_perfect_power(n: &BigUint) -> Option<(BigUint, u32)> {
    if *n < BigUint::from(4u32) {
        return None;
    }
    let bits = n.bits() as u32;
    for e in (2..=bits).rev() {
        let b = n.nth_root(e);
        if b > BigUint::one() && &num_traits::pow(b.clone(), e as usize) == n {
            return Some((b, e));
        }
    }
    None
}

/// All primes strictly below `limit`.
pub fn primes_below(limit: u64) -> Vec<u64> {
    if limit < 3 {
        return Vec::new();
    }
    let limit = limit as usize;
    let mut composite = vec![false; limit];
    let mut out = Vec::new();
    for i in 2..limit {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j < limit {
            composite[j] = true;
            j += i;
        }
    }
    out
}

/// The first `count` primes, ascending from 2.
pub fn small_primes(count: usize) -> Vec<u64> {
    if count == 0 {
        return Vec::new();
    }
    let c = count.max(6) as f64;
    let mut limit = (c * (c.ln() + c.ln().ln())).ceil() as u64 + 10;
    loop {
        let mut primes = primes_below(limit);
        if primes.len() >= count {
            primes.truncate(count);
            return primes;
        }
        limit *= 2;
    }
}

/// Number of decimal digits of a positive integer.
pub fn decimal_digits(n: &BigUint) -> usize {
    if n.is_zero() {
        1
    } else {
        n.to_str_radix(10).len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn squares_mod(p: u64) -> Vec<bool> {
        let mut sq = vec![false; p as usize];
        for y in 1..p {
            sq[(y * y % p) as usize] = true;
        }
        sq
    }

    #[test]
    fn legendre_examples() {
        assert_eq!(legendre(&big(1), 7).unwrap(), 1);
        assert_eq!(legendre(&big(3), 7).unwrap(), -1);
        assert_eq!(legendre(&big(2), 7).unwrap(), 1);
        assert_eq!(legendre(&big(14), 7).unwrap(), 0);
        assert_eq!(legendre(&big(-1), 7).unwrap(), -1);
    }

    #[test]
    fn legendre_rejects_non_odd_primes() {
        assert!(matches!(legendre(&big(1), 2), Err(Error::InvalidArgument(_))));
        assert!(matches!(legendre(&big(1), 8), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn legendre_matches_enumeration_below_200() {
        for p in primes_below(200).into_iter().skip(1) {
            let sq = squares_mod(p);
            for a in 0..p {
                let expected = if a == 0 {
                    0
                } else if sq[a as usize] {
                    1
                } else {
                    -1
                };
                assert_eq!(legendre(&big(a as i64), p).unwrap(), expected, "a={a} p={p}");
            }
        }
    }

    #[test]
    fn tonelli_shanks_examples() {
        assert_eq!(tonelli_shanks(2, 7).unwrap(), 3);
        assert_eq!(tonelli_shanks(0, 7).unwrap(), 0);
        assert_eq!(tonelli_shanks(4, 13).unwrap(), 2);
        assert!(matches!(tonelli_shanks(3, 7), Err(Error::NoRoot { .. })));
    }

    #[test]
    fn tonelli_shanks_exhaustive_small_primes() {
        // 17, 41, 97, 193, 257 have p ≡ 1 mod 8, exercising the full loop.
        for p in primes_below(300).into_iter().skip(1) {
            for a in 1..p {
                if legendre_u64(a, p) == 1 {
                    let s = tonelli_shanks(a, p).unwrap();
                    assert_eq!(mul_mod(s, s, p), a);
                    assert!(s <= p - s);
                }
            }
        }
    }

    #[test]
    fn mod_inverse_examples() {
        assert_eq!(mod_inverse(&big(3), &big(7)).unwrap(), big(5));
        assert_eq!(mod_inverse(&big(1), &big(11)).unwrap(), big(1));
        assert_eq!(
            mod_inverse(&big(6), &big(9)),
            Err(Error::NotInvertible { gcd: big(3) })
        );
        assert_eq!(inv_mod_u64(15, 11), Some(3));
        assert_eq!(inv_mod_u64(6, 9), None);
    }

    #[test]
    fn isqrt_ceil_examples() {
        assert_eq!(isqrt_ceil(&big(91)).unwrap(), big(10));
        assert_eq!(isqrt_ceil(&big(100)).unwrap(), big(10));
        assert_eq!(isqrt_ceil(&big(0)).unwrap(), big(0));
        assert!(isqrt_ceil(&big(-1)).is_err());
    }

    #[test]
    fn primality_examples() {
        assert!(is_probable_prime(&BigUint::from(97u32)));
        assert!(!is_probable_prime(&BigUint::from(91u32)));
        assert!(is_probable_prime(&BigUint::from(2u32)));
        assert!(!is_probable_prime(&BigUint::from(1u32)));
        // Strong pseudoprime to bases 2..37 (first 12 primes); 41 exposes it.
        let psp: BigUint = "318665857834031151167461".parse().unwrap();
        assert!(!is_probable_prime(&psp));
        let p: BigUint = "170141183460469231731687303715884105727".parse().unwrap();
        assert!(is_probable_prime(&p));
        let carmichael_like: BigUint = "170141183460469231731687303715884105727".parse::<BigUint>().unwrap()
            * BigUint::from(1000000007u64);
        assert!(!is_probable_prime(&carmichael_like));
    }

    #[test]
    fn primality_matches_sieve_below_10000() {
        let primes = primes_below(10_000);
        let mut is_p = vec![false; 10_000];
        for &p in &primes {
            is_p[p as usize] = true;
        }
        for n in 0..10_000u64 {
            assert_eq!(is_probable_prime(&BigUint::from(n)), is_p[n as usize], "n={n}");
        }
    }

    #[test]
    fn perfect_power_examples() {
        assert_eq!(is_perfect_power(&BigUint::from(8u32)), Some((BigUint::from(2u32), 3)));
        assert_eq!(is_perfect_power(&BigUint::from(91u32)), None);
        assert_eq!(
            is_perfect_power(&BigUint::from(1_000_000u32)),
            Some((BigUint::from(10u32), 6))
        );
        assert_eq!(is_perfect_power(&BigUint::from(243u32)), Some((BigUint::from(3u32), 5)));
    }

    #[test]
    fn small_primes_examples() {
        assert_eq!(small_primes(4), vec![2, 3, 5, 7]);
        assert_eq!(small_primes(1), vec![2]);
        assert_eq!(small_primes(10), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(small_primes(10_000).last(), Some(&104_729));
    }

    proptest! {
        #[test]
        fn isqrt_ceil_brackets(n in 1u128..u128::MAX) {
            let bn = BigInt::from(n);
            let r = isqrt_ceil(&bn).unwrap();
            prop_assert!(&r * &r >= bn);
            let rm1 = &r - 1;
            prop_assert!(&rm1 * &rm1 < bn);
        }

        #[test]
        fn mod_inverse_is_inverse(a in -1_000_000i64..1_000_000, m in 2i64..100_000) {
            let (a, m) = (big(a), big(m));
            if let Ok(b) = mod_inverse(&a, &m) {
                prop_assert!((&a * &b).mod_floor(&m).is_one());
                prop_assert!(b > BigInt::zero() && b < m);
            } else {
                prop_assert!(!a.gcd(&m).is_one());
            }
        }

        #[test]
        fn mod_small_agrees_with_bigint(x in any::<i128>(), p in 2u64..u64::MAX) {
            let bx = BigInt::from(x);
            let expected = bx.mod_floor(&BigInt::from(p)).to_u64().unwrap();
            prop_assert_eq!(mod_small(&bx, p), expected);
        }
    }
}
