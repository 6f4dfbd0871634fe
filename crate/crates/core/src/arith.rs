//! Exact integer kernels: factorization, squarefree/squareful predicates,
//! quadratic residue symbols, and the gcd-entanglement invariants of a
//! coefficient vector.

use crate::error::{Error, Result};
use serde::Serialize;

pub fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn gcd4(v: [u64; 4]) -> u64 {
    v.iter().fold(0u64, |g, &x| gcd_u64(g, x))
}

/// Floor square root, exact for all u128 inputs.
pub fn isqrt_u128(n: u128) -> u128 {
    if n == 0 {
        return 0;
    }
    let mut x = (n as f64).sqrt() as u128;
    // Newton fixup around the float estimate.
    while x > 0 && x.checked_mul(x).is_none_or(|v| v > n) {
        x -= 1;
    }
    while (x + 1).checked_mul(x + 1).is_some_and(|v| v <= n) {
        x += 1;
    }
    x
}

pub fn isqrt_u64(n: u64) -> u64 {
    isqrt_u128(n as u128) as u64
}

pub fn is_square_u128(n: u128) -> bool {
    let r = isqrt_u128(n);
    r * r == n
}

/// True iff `n` is a perfect square (negative inputs are never squares).
pub fn is_square_i128(n: i128) -> bool {
    n >= 0 && is_square_u128(n as u128)
}

/// Simple prime sieve, ascending.
pub fn primes_upto(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for p in 2..=n {
        if !composite[p] {
            out.push(p as u64);
            let mut m = p * p;
            while m <= n {
                composite[m] = true;
                m += p;
            }
        }
    }
    out
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, m);
        }
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, valid for all n < 2^64.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d & 1 == 0 {
        d >>= 1;
        s += 1;
    }
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Brent-style Pollard rho with deterministic parameters.
fn pollard_rho(n: u64) -> u64 {
    debug_assert!(n > 1 && !is_prime_u64(n) && n % 2 == 1);
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mulmod(x, x, n) + c) % n;
        let mut x = 2u64;
        let mut y = 2u64;
        let mut d = 1u64;
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd_u64(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

const TRIAL_LIMIT: u64 = 1 << 21;

/// Factorization of a nonzero signed integer: `sign * prod p^e = n`,
/// primes strictly increasing, exponents >= 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Factorization {
    pub n: i64,
    pub sign: i8,
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    /// Reconstruct sign * prod p^e.
    pub fn value(&self) -> i128 {
        let mut v: i128 = self.sign as i128;
        for &(p, e) in &self.factors {
            for _ in 0..e {
                v *= p as i128;
            }
        }
        v
    }

    pub fn nu(&self, p: u64) -> u32 {
        self.factors
            .iter()
            .find(|&&(q, _)| q == p)
            .map(|&(_, e)| e)
            .unwrap_or(0)
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    pub fn is_squareful(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e >= 2)
    }

    /// Smallest positive r with |n|/r a perfect square (the product of the
    /// primes of odd exponent).
    pub fn squarefree_part(&self) -> u64 {
        self.factors
            .iter()
            .filter(|&&(_, e)| e % 2 == 1)
            .map(|&(p, _)| p)
            .product()
    }

    pub fn mobius(&self) -> i8 {
        if !self.is_squarefree() {
            0
        } else if self.factors.len() % 2 == 0 {
            1
        } else {
            -1
        }
    }
}

/// Factor a nonzero 63-bit integer by trial division up to 2^21 with a
/// deterministic Miller-Rabin/Pollard-rho fallback for the cofactor.
pub fn factorize(n: i64) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::invalid("factorize(0)"));
    }
    if n == i64::MIN {
        return Err(Error::invalid("factorize: |n| must fit in 63 bits"));
    }
    let sign: i8 = if n < 0 { -1 } else { 1 };
    let mut m = n.unsigned_abs();
    let mut factors: Vec<(u64, u32)> = Vec::new();
    let push = |p: u64, e: u32, factors: &mut Vec<(u64, u32)>| {
        if e > 0 {
            factors.push((p, e));
        }
    };
    let mut e2 = 0;
    while m % 2 == 0 {
        m /= 2;
        e2 += 1;
    }
    push(2, e2, &mut factors);
    let mut p = 3u64;
    while p <= TRIAL_LIMIT && p * p <= m {
        if m % p == 0 {
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            push(p, e, &mut factors);
        }
        p += 2;
    }
    // Remaining cofactor is 1, a prime, or a product of primes > 2^21.
    let mut stack = Vec::new();
    if m > 1 {
        stack.push(m);
    }
    let mut big: Vec<u64> = Vec::new();
    while let Some(v) = stack.pop() {
        if is_prime_u64(v) {
            big.push(v);
        } else if is_square_u128(v as u128) {
            let r = isqrt_u64(v);
            stack.push(r);
            stack.push(r);
        } else {
            let d = pollard_rho(v);
            stack.push(d);
            stack.push(v / d);
        }
    }
    big.sort_unstable();
    let mut i = 0;
    while i < big.len() {
        let p = big[i];
        let mut e = 0;
        while i < big.len() && big[i] == p {
            e += 1;
            i += 1;
        }
        factors.push((p, e));
    }
    factors.sort_unstable_by_key(|&(p, _)| p);
    Ok(Factorization { n, sign, factors })
}

pub fn is_squarefree(n: i64) -> Result<bool> {
    Ok(factorize(n)?.is_squarefree())
}

pub fn is_squareful(n: i64) -> Result<bool> {
    Ok(factorize(n)?.is_squareful())
}

/// Smallest positive r such that |m|/r is a perfect square.
pub fn squarefree_part(m: i64) -> Result<u64> {
    Ok(factorize(m)?.squarefree_part())
}

pub fn mobius(n: u64) -> Result<i8> {
    if n == 0 {
        return Err(Error::invalid("mobius(0)"));
    }
    Ok(factorize(n as i64)?.mobius())
}

/// Jacobi symbol (a/n) for odd positive n. Rejects even n; use `kronecker`
/// for the extension to even or negative lower arguments.
pub fn jacobi(a: i64, n: u64) -> Result<i8> {
    if n == 0 || n % 2 == 0 {
        return Err(Error::invalid("jacobi: modulus must be odd and positive"));
    }
    let mut a = a.rem_euclid(n as i64) as u64;
    let mut n = n;
    let mut t: i8 = 1;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    Ok(if n == 1 { t } else { 0 })
}

/// Kronecker symbol (a/n), the full extension of the Jacobi symbol to all
/// integer lower arguments. Kept separate so the strict Jacobi entry point
/// never silently accepts an even modulus.
pub fn kronecker(a: i64, n: i64) -> i8 {
    match n {
        0 => {
            if a == 1 || a == -1 {
                1
            } else {
                0
            }
        }
        1 => 1,
        -1 => {
            if a < 0 {
                -1
            } else {
                1
            }
        }
        2 => {
            if a % 2 == 0 {
                0
            } else {
                match a.rem_euclid(8) {
                    1 | 7 => 1,
                    _ => -1,
                }
            }
        }
        _ if n < 0 => kronecker(a, -1) * kronecker(a, -n),
        _ => {
            let f = n.trailing_zeros();
            let odd = (n >> f) as u64;
            let two_part = if f == 0 {
                1
            } else {
                let k2 = kronecker(a, 2);
                if f % 2 == 0 {
                    k2 * k2
                } else {
                    k2
                }
            };
            if two_part == 0 {
                0
            } else {
                two_part * jacobi(a, odd).expect("odd modulus")
            }
        }
    }
}

fn checked_prod_abs(vals: &[u64]) -> Result<u128> {
    let mut acc: u128 = 1;
    for &v in vals {
        acc = acc
            .checked_mul(v as u128)
            .ok_or_else(|| Error::overflow("product of coefficients"))?;
    }
    Ok(acc)
}

/// gcd-entanglement invariant of four positive integers:
/// prod_i gcd(g_i, prod_{j != i} g_j), computed prime-by-prime so the
/// intermediate triple products never need to be materialized.
fn delta_of(g: [u64; 4]) -> Result<u128> {
    let facs: Vec<Factorization> = g
        .iter()
        .map(|&v| factorize(v as i64))
        .collect::<Result<_>>()?;
    let mut primes: Vec<u64> = facs
        .iter()
        .flat_map(|f| f.factors.iter().map(|&(p, _)| p))
        .collect();
    primes.sort_unstable();
    primes.dedup();
    let mut delta: u128 = 1;
    for p in primes {
        let nu: Vec<u32> = facs.iter().map(|f| f.nu(p)).collect();
        let total: u32 = nu.iter().sum();
        let mut e: u32 = 0;
        for i in 0..4 {
            e += nu[i].min(total - nu[i]);
        }
        for _ in 0..e {
            delta = delta
                .checked_mul(p as u128)
                .ok_or_else(|| Error::overflow("delta"))?;
        }
    }
    Ok(delta)
}

/// A vector of four nonzero coefficients with its derived invariants: the
/// product A, the sign pattern, and the gcd-entanglement measure Delta.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoeffVector {
    pub a: [i64; 4],
    /// A = a1 a2 a3 a4 (checked 128-bit).
    pub product: i128,
    pub eps: [i8; 4],
    pub delta: u128,
}

impl CoeffVector {
    pub fn new(a: [i64; 4]) -> Result<CoeffVector> {
        if a.iter().any(|&x| x == 0) {
            return Err(Error::invalid("coefficient vector with zero coordinate"));
        }
        if a.contains(&i64::MIN) {
            return Err(Error::invalid("coefficients must fit in 63 bits"));
        }
        let abs = checked_prod_abs(&a.map(|x| x.unsigned_abs()))?;
        if abs > i128::MAX as u128 {
            return Err(Error::overflow("coefficient product"));
        }
        let neg = a.iter().filter(|&&x| x < 0).count() % 2 == 1;
        let product = if neg { -(abs as i128) } else { abs as i128 };
        let eps = a.map(|x| if x < 0 { -1i8 } else { 1 });
        let delta = delta_of(a.map(|x| x.unsigned_abs()))?;
        Ok(CoeffVector {
            a,
            product,
            eps,
            delta,
        })
    }

    /// Delta with each coefficient replaced by gcd(a_i, c_i), where
    /// gcd(x, 0) = |x|. Coincides with Delta at c = 0.
    pub fn delta_c(&self, c: [i64; 4]) -> Result<u128> {
        let mut g = [0u64; 4];
        for i in 0..4 {
            g[i] = gcd_u64(self.a[i].unsigned_abs(), c[i].unsigned_abs());
        }
        delta_of(g)
    }

    /// Value of the dual quadratic form: sum_i (A / a_i) c_i^2.
    pub fn dual_form(&self, c: [i64; 4]) -> Result<i128> {
        let mut acc: i128 = 0;
        for i in 0..4 {
            let cofactor = self.product / self.a[i] as i128;
            let ci = c[i] as i128;
            let sq = ci
                .checked_mul(ci)
                .ok_or_else(|| Error::overflow("dual form"))?;
            let term = cofactor
                .checked_mul(sq)
                .ok_or_else(|| Error::overflow("dual form"))?;
            acc = acc
                .checked_add(term)
                .ok_or_else(|| Error::overflow("dual form"))?;
        }
        Ok(acc)
    }
}
