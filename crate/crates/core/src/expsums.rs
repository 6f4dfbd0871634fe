//! Quadratic Gauss sums, the complete exponential sums S_{q,a}(c), their
//! multiplicative fast paths, partial sums, and the singular series.
//!
//! The direct path evaluates the defining finite sums in double precision
//! with exact integer phase reduction. The fast path evaluates prime-power
//! sums in closed form with exact integer/rational arithmetic (eighth roots
//! of unity over i128 for p = 2), then multiplies across prime powers.

use crate::arith::{factorize, is_square_i128, jacobi, primes_upto, CoeffVector};
use crate::error::{Error, Result};
use crate::lseries::{fundamental_discriminant, QuadChar};
use crate::rational::Rat;
use serde::Serialize;
use std::f64::consts::PI;

/// Minimal complex value for sum evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Cx {
    pub re: f64,
    pub im: f64,
}

impl Cx {
    pub const ZERO: Cx = Cx { re: 0.0, im: 0.0 };
    pub const ONE: Cx = Cx { re: 1.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Cx {
        Cx { re, im }
    }

    /// e^(2 pi i k / q) with the phase reduced exactly in the integers first.
    pub fn unit_phase(k: i64, q: u64) -> Cx {
        let r = k.rem_euclid(q as i64) as f64 / q as f64;
        let ang = 2.0 * PI * r;
        Cx {
            re: ang.cos(),
            im: ang.sin(),
        }
    }

    pub fn add(self, o: Cx) -> Cx {
        Cx {
            re: self.re + o.re,
            im: self.im + o.im,
        }
    }

    pub fn mul(self, o: Cx) -> Cx {
        Cx {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }

    pub fn scale(self, s: f64) -> Cx {
        Cx {
            re: self.re * s,
            im: self.im * s,
        }
    }

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn sub(self, o: Cx) -> Cx {
        Cx {
            re: self.re - o.re,
            im: self.im - o.im,
        }
    }
}

/// Direct quadratic Gauss sum: sum over b mod q of e_q(m b^2).
pub fn gauss_g(m: i64, q: u64) -> Result<Cx> {
    if q == 0 {
        return Err(Error::invalid("gauss_g: modulus must be positive"));
    }
    let mut acc = Cx::ZERO;
    let mq = m.rem_euclid(q as i64) as u64;
    for b in 0..q {
        let phase = ((mq as u128 * ((b as u128 * b as u128) % q as u128)) % q as u128) as i64;
        acc = acc.add(Cx::unit_phase(phase, q));
    }
    Ok(acc)
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SumMethod {
    Direct,
    GaussProduct,
    Multiplicative,
}

/// Value of a complete exponential sum S_{q,a}(c), with the exact integer
/// when the evaluation path proves one.
#[derive(Clone, Debug, Serialize)]
pub struct ExpSumValue {
    pub q: u64,
    pub a: [i64; 4],
    pub c: [i64; 4],
    pub value: Cx,
    pub exact: Option<i128>,
    pub method: SumMethod,
}

const DIRECT_Q_LIMIT: u64 = 3000;

/// Direct evaluation of S_{q,a}(c): sum over k coprime to q and b mod q^4 of
/// e_q(k F_a(b) + b.c). The b-sum factors over coordinates, which is an exact
/// rearrangement of the defining finite sum.
pub fn s_q_direct(a: &CoeffVector, c: [i64; 4], q: u64) -> Result<ExpSumValue> {
    if q == 0 {
        return Err(Error::invalid("s_q_direct: q must be positive"));
    }
    if q > DIRECT_Q_LIMIT {
        return Err(Error::budget(format!(
            "s_q_direct: q = {} exceeds the direct-path limit {}",
            q, DIRECT_Q_LIMIT
        )));
    }
    let mut total = Cx::ZERO;
    for k in 0..q {
        if crate::arith::gcd_u64(k, q) != 1 && q != 1 {
            continue;
        }
        let mut term = Cx::ONE;
        for i in 0..4 {
            let ka = (k as i128 * a.a[i] as i128).rem_euclid(q as i128) as i64;
            let ci = c[i].rem_euclid(q as i64);
            let mut inner = Cx::ZERO;
            for b in 0..q {
                let b2 = ((b as u128 * b as u128) % q as u128) as i64;
                let phase = (ka as i128 * b2 as i128 + ci as i128 * b as i128).rem_euclid(q as i128) as i64;
                inner = inner.add(Cx::unit_phase(phase, q));
            }
            term = term.mul(inner);
        }
        total = total.add(term);
    }
    let exact = {
        let r = total.re.round();
        if total.im.abs() <= 1e-9 * (q as f64).powi(4).max(1.0) && (total.re - r).abs() < 1e-3 {
            Some(r as i128)
        } else {
            None
        }
    };
    Ok(ExpSumValue {
        q,
        a: a.a,
        c,
        value: total,
        exact,
        method: SumMethod::Direct,
    })
}

fn val_p(mut m: u64, p: u64) -> u32 {
    let mut v = 0;
    while m % p == 0 {
        m /= p;
        v += 1;
    }
    v
}

/// Element of Z[zeta_8] with zeta^4 = -1, used for the exact p = 2 path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Cyc8 {
    c: [i128; 4],
}

impl Cyc8 {
    const ZERO: Cyc8 = Cyc8 { c: [0, 0, 0, 0] };
    const ONE: Cyc8 = Cyc8 { c: [1, 0, 0, 0] };
    // sqrt(2) = zeta - zeta^3
    const SQRT2: Cyc8 = Cyc8 { c: [0, 1, 0, -1] };

    fn mul(self, o: Cyc8) -> Result<Cyc8> {
        let mut out = [0i128; 4];
        for i in 0..4 {
            if self.c[i] == 0 {
                continue;
            }
            for j in 0..4 {
                if o.c[j] == 0 {
                    continue;
                }
                let prod = self.c[i]
                    .checked_mul(o.c[j])
                    .ok_or_else(|| Error::overflow("cyclotomic product"))?;
                let k = i + j;
                let (idx, sgn) = if k < 4 { (k, 1) } else { (k - 4, -1) };
                out[idx] = out[idx]
                    .checked_add(sgn * prod)
                    .ok_or_else(|| Error::overflow("cyclotomic product"))?;
            }
        }
        Ok(Cyc8 { c: out })
    }

    fn add(self, o: Cyc8) -> Result<Cyc8> {
        let mut out = [0i128; 4];
        for i in 0..4 {
            out[i] = self.c[i]
                .checked_add(o.c[i])
                .ok_or_else(|| Error::overflow("cyclotomic sum"))?;
        }
        Ok(Cyc8 { c: out })
    }

    fn scale(self, s: i128) -> Result<Cyc8> {
        let mut out = [0i128; 4];
        for i in 0..4 {
            out[i] = self.c[i]
                .checked_mul(s)
                .ok_or_else(|| Error::overflow("cyclotomic scale"))?;
        }
        Ok(Cyc8 { c: out })
    }

    /// The value as a rational integer, if it is one.
    fn as_integer(self) -> Option<i128> {
        if self.c[1] == 0 && self.c[2] == 0 && self.c[3] == 0 {
            Some(self.c[0])
        } else {
            None
        }
    }
}

/// Exact scaled sum t = S_{p^n, a}(0) / p^(4n) for an odd prime p, from the
/// closed form of the one-variable Gauss sums: each factor with unit part m'
/// contributes p^(e/2) (m'/p)^e times a fourth root of unity, and the sum
/// over k coprime to p^n vanishes unless the total Jacobi exponent is even.
fn s_odd_prime_power_scaled(a: &[i64; 4], p: u64, n: u32) -> Result<Rat> {
    debug_assert!(p % 2 == 1 && n >= 1);
    let nu: [u32; 4] = std::array::from_fn(|i| val_p(a[i].unsigned_abs(), p));
    let mut e_sum: u32 = 0;
    let mut odd_e = 0u32;
    let mut kappa: i128 = 1;
    for i in 0..4 {
        if nu[i] >= n {
            continue;
        }
        let e = n - nu[i];
        e_sum += e;
        if e % 2 == 1 {
            odd_e += 1;
        }
        let unit = a[i] / (p as i64).pow(nu[i]);
        let sym = jacobi(unit, p)? as i128;
        debug_assert!(sym != 0);
        if e % 2 == 1 {
            kappa *= sym;
        }
    }
    if e_sum % 2 == 1 {
        return Ok(Rat::ZERO);
    }
    let mut sign = kappa;
    if p % 4 == 3 && (odd_e / 2) % 2 == 1 {
        sign = -sign;
    }
    // t = sign * (p-1) * p^(n - 1 - E/2)
    let base = Rat::from_int(sign * (p as i128 - 1));
    base.mul_pow(p as i128, n as i32 - 1 - (e_sum / 2) as i32)
}

/// Exact scaled sum t = S_{2^n, a}(0) / 2^(4n), evaluated in Z[zeta_8]. The
/// summand depends on k only through k mod 8, so for n > 3 the sum over odd
/// k mod 2^n collapses to 2^(n-3) times the four odd classes mod 8.
fn s_two_power_scaled(a: &[i64; 4], n: u32) -> Result<Rat> {
    debug_assert!(n >= 1);
    let (ks, mult): (Vec<u64>, u32) = if n <= 3 {
        ((1..(1u64 << n)).step_by(2).collect(), 0)
    } else {
        (vec![1, 3, 5, 7], n - 3)
    };
    let nu: [u32; 4] = std::array::from_fn(|i| val_p(a[i].unsigned_abs(), 2));
    let mut total = Cyc8::ZERO;
    let mut pow_common: Option<u32> = None;
    for &k in &ks {
        let mut cyc = Cyc8::ONE;
        let mut pow: u32 = 0;
        let mut zero = false;
        for i in 0..4 {
            let v = nu[i];
            if v >= n {
                pow += n;
                continue;
            }
            let e = n - v;
            if e == 1 {
                zero = true;
                break;
            }
            let unit = (a[i] >> v) as i128;
            let m = (k as i128 * unit).rem_euclid(1i128 << e.min(63)) as u64;
            // m is an odd positive representative; the factor is
            // 2^(v + e/2) (2/m)^e (1 + i^m), with sqrt(2) kept symbolic.
            let j2: i128 = match m % 8 {
                1 | 7 => 1,
                _ => -1,
            };
            let jac = if e % 2 == 1 { j2 } else { 1 };
            let phase = if m % 4 == 1 {
                Cyc8 { c: [1, 0, 1, 0] } // 1 + i
            } else {
                Cyc8 { c: [1, 0, -1, 0] } // 1 - i
            };
            pow += v + e / 2;
            cyc = cyc.mul(phase)?.scale(jac)?;
            if e % 2 == 1 {
                cyc = cyc.mul(Cyc8::SQRT2)?;
            }
        }
        if zero {
            continue;
        }
        match pow_common {
            None => pow_common = Some(pow),
            Some(p0) => {
                if p0 != pow {
                    return Err(Error::inconsistency(
                        "two-adic sum: mismatched scale between residue classes",
                    ));
                }
            }
        }
        total = total.add(cyc)?;
    }
    let Some(pow) = pow_common else {
        return Ok(Rat::ZERO);
    };
    let c0 = total.as_integer().ok_or_else(|| {
        Error::inconsistency("two-adic sum did not reduce to a rational integer")
    })?;
    // S = 2^mult * 2^pow * c0, so t = c0 * 2^(mult + pow - 4n).
    Rat::from_int(c0).mul_pow(2, mult as i32 + pow as i32 - 4 * n as i32)
}

/// Exact t = S_{p^n, a}(0) / p^(4n).
pub fn s_prime_power_scaled(a: &[i64; 4], p: u64, n: u32) -> Result<Rat> {
    if n == 0 {
        return Ok(Rat::ONE);
    }
    if p == 2 {
        s_two_power_scaled(a, n)
    } else {
        s_odd_prime_power_scaled(a, p, n)
    }
}

/// Fast evaluation of S_{q,a}(0) through prime-power closed forms and
/// multiplicativity in q. The result is exact.
pub fn s_q_fast(a: &CoeffVector, q: u64) -> Result<ExpSumValue> {
    if q == 0 {
        return Err(Error::invalid("s_q_fast: q must be positive"));
    }
    let f = factorize(q as i64)?;
    let mut t = Rat::ONE;
    for &(p, e) in &f.factors {
        t = t.mul(&s_prime_power_scaled(&a.a, p, e)?)?;
    }
    // S_q = t * q^4.
    let q4 = (q as i128).pow(4);
    let s = t.mul(&Rat::from_int(q4))?;
    if !s.is_integer() {
        return Err(Error::inconsistency(format!(
            "S_{{{},a}}(0) = {} is not an integer",
            q, s
        )));
    }
    let exact = s.numer();
    let method = if f.factors.len() <= 1 {
        SumMethod::GaussProduct
    } else {
        SumMethod::Multiplicative
    };
    Ok(ExpSumValue {
        q,
        a: a.a,
        c: [0; 4],
        value: Cx::new(exact as f64, 0.0),
        exact: Some(exact),
        method,
    })
}

/// Partial sum over q <= x of q^(-3) S_{q,a}(c). For c = 0 the fast exact
/// path covers every q; for general c the direct path is used (small x).
pub fn sigma_partial(a: &CoeffVector, c: [i64; 4], x: u64) -> Result<Cx> {
    if c == [0; 4] {
        // Sieve smallest prime factors; t(q) = prod of prime-power t values,
        // and q^(-3) S_q = q * t(q).
        let n = x as usize;
        let mut acc = 0.0f64;
        if n >= 1 {
            let mut spf = vec![0u32; n + 1];
            for i in 2..=n {
                if spf[i] == 0 {
                    let mut m = i;
                    while m <= n {
                        if spf[m] == 0 {
                            spf[m] = i as u32;
                        }
                        m += i;
                    }
                }
            }
            let mut t = vec![0.0f64; n + 1];
            t[1] = 1.0;
            for q in 2..=n {
                let p = spf[q] as u64;
                let mut rest = q as u64;
                let mut e = 0u32;
                while rest % p == 0 {
                    rest /= p;
                    e += 1;
                }
                t[q] = t[rest as usize] * s_prime_power_scaled(&a.a, p, e)?.to_f64();
            }
            for q in 1..=n {
                acc += q as f64 * t[q];
            }
        }
        Ok(Cx::new(acc, 0.0))
    } else {
        if x > 200 {
            return Err(Error::budget(
                "sigma_partial with c != 0 is limited to x <= 200",
            ));
        }
        let mut acc = Cx::ZERO;
        for q in 1..=x {
            let v = s_q_direct(a, c, q)?.value;
            acc = acc.add(v.scale(1.0 / (q as f64).powi(3)));
        }
        Ok(acc)
    }
}

/// Number of pairs (u, v) mod r with u^3 = v^3 (mod r), for squarefree r.
/// Multiplicative; each prime is counted from the cube-residue histogram.
pub fn rho(r: u64) -> Result<u64> {
    if r == 0 {
        return Err(Error::invalid("rho(0)"));
    }
    let f = factorize(r as i64)?;
    if !f.is_squarefree() {
        return Err(Error::invalid("rho requires a squarefree argument"));
    }
    let mut out: u64 = 1;
    for &(p, _) in &f.factors {
        let mut hist = vec![0u64; p as usize];
        for u in 0..p {
            let c = ((u as u128 * u as u128 % p as u128) * u as u128 % p as u128) as usize;
            hist[c] += 1;
        }
        let count: u64 = hist.iter().map(|&h| h * h).sum();
        out = out
            .checked_mul(count)
            .ok_or_else(|| Error::overflow("rho"))?;
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesMethod {
    /// Truncated Euler product over good primes up to the cutoff.
    EulerProduct { cutoff: u64 },
    /// L(1,chi)/L(2,chi) for the Kronecker character of the fundamental
    /// discriminant, with exact bad-prime factors.
    LHybrid,
}

/// A truncated/accelerated singular-series (or Euler product) value with its
/// reported tail bound.
#[derive(Clone, Debug, Serialize)]
pub struct SeriesEstimate {
    pub value: f64,
    pub cutoff: u64,
    /// For the hybrid method this is a rigorous bound; for the truncated
    /// Euler product it is an empirical estimate (difference between the
    /// product at the cutoff and at half the cutoff).
    pub tail_bound: f64,
    pub method: SeriesMethod,
    /// Exact product of the factors at primes dividing 2A.
    pub bad_factor: f64,
    /// Product over the remaining primes.
    pub good_factor: f64,
}

/// The factor at one bad prime: 1 + sum over j >= 1 of p^(-4j) S_{p^j}(0),
/// summed exactly until the terms become geometric (with step-two ratio
/// verification), then closed off exactly.
fn bad_prime_factor(a: &[i64; 4], p: u64) -> Result<Rat> {
    let maxv = (0..4)
        .map(|i| val_p(a[i].unsigned_abs(), p))
        .max()
        .unwrap();
    let j_exact = maxv + 3;
    let mut acc = Rat::ONE;
    for j in 1..=j_exact {
        acc = acc.add(&s_prime_power_scaled(a, p, j)?)?;
    }
    let t1 = s_prime_power_scaled(a, p, j_exact + 1)?;
    let t2 = s_prime_power_scaled(a, p, j_exact + 2)?;
    let t3 = s_prime_power_scaled(a, p, j_exact + 3)?;
    let t4 = s_prime_power_scaled(a, p, j_exact + 4)?;
    // Beyond max valuation the terms satisfy t_{j+2} = rho * t_j for a fixed
    // rational rho with |rho| < 1; verify on both parity tracks.
    let rho = if !t1.is_zero() {
        t3.div(&t1)?
    } else if !t2.is_zero() {
        t4.div(&t2)?
    } else {
        if !(t3.is_zero() && t4.is_zero()) {
            return Err(Error::inconsistency("bad-prime tail: zero pattern broken"));
        }
        return Ok(acc);
    };
    let check_a = t1.mul(&rho)?;
    let check_b = t2.mul(&rho)?;
    if check_a != t3 || check_b != t4 || rho.abs() >= Rat::ONE {
        return Err(Error::inconsistency(
            "bad-prime tail is not step-two geometric",
        ));
    }
    let tail = t1.add(&t2)?.div(&Rat::ONE.sub(&rho)?)?;
    acc.add(&tail)
}

/// The singular series: the absolutely convergent sum over q of q^(-4)
/// S_{q,a}(0), valid when the coefficient product is not a perfect square.
/// Computed as (exact bad-prime factors) x (good-prime product), the latter
/// by either a truncated Euler product or an L-function ratio.
pub fn singular_series(a: &CoeffVector, method: &SeriesMethod, tol: f64) -> Result<SeriesEstimate> {
    if tol <= 0.0 {
        return Err(Error::invalid("singular_series: tol must be positive"));
    }
    if is_square_i128(a.product) {
        return Err(Error::invalid(
            "singular series undefined: coefficient product is a perfect square",
        ));
    }
    if a.product.unsigned_abs() >= (1u128 << 63) {
        return Err(Error::invalid(
            "singular series: |A| must fit in 63 bits",
        ));
    }
    let big_a = a.product as i64;
    let fa = factorize(big_a)?;
    let mut bad_primes: Vec<u64> = fa.factors.iter().map(|&(p, _)| p).collect();
    if !bad_primes.contains(&2) {
        bad_primes.insert(0, 2);
    }
    let mut bad = Rat::ONE;
    for &p in &bad_primes {
        bad = bad.mul(&bad_prime_factor(&a.a, p)?)?;
    }
    let disc = fundamental_discriminant(big_a)?;
    let chi = QuadChar::new(disc);
    // Internal guard: the Kronecker character must restrict to (A/p) on
    // primes coprime to 2A.
    let mut checked = 0;
    let mut p = 3u64;
    while checked < 50 {
        if is_prime_check(p) && big_a % p as i64 != 0 {
            if chi.eval(p as i64) != jacobi(big_a, p)? {
                return Err(Error::inconsistency(format!(
                    "character mismatch at p = {}: ({}/p) != chi_{}(p)",
                    p, big_a, disc
                )));
            }
            checked += 1;
        }
        p += 2;
    }
    let (good, cutoff, tail) = match method {
        SeriesMethod::EulerProduct { cutoff } => {
            let cutoff = (*cutoff).max(100);
            let primes = primes_upto(cutoff);
            let mut prod = 1.0f64;
            let mut prod_half = 1.0f64;
            for &p in &primes {
                if big_a % p as i64 == 0 || p == 2 {
                    continue;
                }
                let x = jacobi(big_a, p)? as f64;
                let pf = p as f64;
                let factor = (1.0 - x / (pf * pf)) / (1.0 - x / pf);
                prod *= factor;
                if p <= cutoff / 2 {
                    prod_half *= factor;
                }
            }
            (prod, cutoff, (prod - prod_half).abs())
        }
        SeriesMethod::LHybrid => {
            let l1 = chi.l_one()?;
            let (l2, l2_tail) = chi.l_two(tol.min(1e-10))?;
            let mut ratio = l1 / l2;
            // Reinsert the Euler factors of L at primes dividing 2A but not
            // the conductor.
            for &p in &bad_primes {
                let x = chi.eval(p as i64) as f64;
                if x != 0.0 {
                    let pf = p as f64;
                    ratio *= (1.0 - x / pf) / (1.0 - x / (pf * pf));
                }
            }
            let rel = l2_tail / l2 * ratio.abs() + 1e-12;
            (ratio, chi.modulus(), rel)
        }
    };
    Ok(SeriesEstimate {
        value: bad.to_f64() * good,
        cutoff,
        tail_bound: tail * bad.to_f64().abs() + 1e-12,
        method: method.clone(),
        bad_factor: bad.to_f64(),
        good_factor: good,
    })
}

fn is_prime_check(p: u64) -> bool {
    crate::arith::is_prime_u64(p)
}

/// Oracle for the singular series: raw partial sums of q^(-4) S_q(0) up to
/// qmax, Cesaro-smoothed over the top half of the range. The raw sums
/// oscillate (the character is nonprincipal), so this is only a cross-check,
/// never the primary value.
pub fn truncated_q_sum_cesaro(a: &CoeffVector, qmax: u64) -> Result<f64> {
    let n = qmax as usize;
    let mut spf = vec![0u32; n + 1];
    for i in 2..=n {
        if spf[i] == 0 {
            let mut m = i;
            while m <= n {
                if spf[m] == 0 {
                    spf[m] = i as u32;
                }
                m += i;
            }
        }
    }
    let mut t = vec![0.0f64; n + 1];
    if n >= 1 {
        t[1] = 1.0;
    }
    for q in 2..=n {
        let p = spf[q] as u64;
        let mut rest = q as u64;
        let mut e = 0u32;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        t[q] = t[rest as usize] * s_prime_power_scaled(&a.a, p, e)?.to_f64();
    }
    let mut partial = 0.0f64;
    let mut window_sum = 0.0f64;
    let mut window_n = 0u64;
    for q in 1..=n {
        partial += t[q];
        if q as u64 > qmax / 2 {
            window_sum += partial;
            window_n += 1;
        }
    }
    Ok(window_sum / window_n.max(1) as f64)
}
