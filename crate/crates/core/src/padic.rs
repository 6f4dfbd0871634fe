//! The inclusion-exclusion weight omega, solution counts modulo prime
//! powers, stabilized p-adic local densities (exact rationals), and the two
//! routes to the same fibre constant: the omega-weighted singular-series sum
//! and the Euler product of local densities.

use crate::arith::{factorize, is_square_i128, jacobi, CoeffVector};
use crate::error::{Error, Result};
use crate::expsums::{s_prime_power_scaled, singular_series, SeriesMethod};
use crate::lseries::{fundamental_discriminant, QuadChar};
use crate::rational::Rat;
use serde::Serialize;
use std::f64::consts::PI;

/// Argument triple of the inclusion-exclusion weight.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OmegaArg {
    pub r: [u64; 4],
    pub s: [u64; 4],
    pub s0: u64,
}

/// The multiplicative inclusion-exclusion weight. Zero unless every r_i and
/// s_i is squarefree, s_0 is squarefree, gcd(s_1..s_4) = 1, and each prime
/// of RS divides every r_i s_i; otherwise mu(s_0) times, for each prime
/// p | RS, (-1)^(k+1) with k the number of the eight coordinates that p
/// divides. s_0 enters only through mu(s_0): a coordinate may carry the same
/// prime in both s_i and s_0 (the divisibility conditions then overlap), and
/// exactly this overlap makes the weighted sum over all (r, s, s_0) the
/// indicator of gcd(z_1..z_4) = 1 on squareful quadruples.
pub fn omega(arg: &OmegaArg) -> Result<i8> {
    let OmegaArg { r, s, s0 } = *arg;
    if r.contains(&0) || s.contains(&0) || s0 == 0 {
        return Err(Error::invalid("omega: arguments must be positive"));
    }
    let fr: Vec<_> = r.iter().map(|&v| factorize(v as i64)).collect::<Result<_>>()?;
    let fs: Vec<_> = s.iter().map(|&v| factorize(v as i64)).collect::<Result<_>>()?;
    if fr.iter().chain(fs.iter()).any(|f| !f.is_squarefree()) {
        return Ok(0);
    }
    let mu0 = factorize(s0 as i64)?.mobius();
    if mu0 == 0 {
        return Ok(0);
    }
    if crate::arith::gcd4(s) > 1 {
        return Ok(0);
    }
    let mut primes: Vec<u64> = fr
        .iter()
        .chain(fs.iter())
        .flat_map(|f| f.factors.iter().map(|&(p, _)| p))
        .collect();
    primes.sort_unstable();
    primes.dedup();
    let mut sign: i8 = mu0;
    for p in primes {
        if (0..4).any(|i| r[i] % p != 0 && s[i] % p != 0) {
            return Ok(0);
        }
        let k = (0..4).filter(|&i| r[i] % p == 0).count()
            + (0..4).filter(|&i| s[i] % p == 0).count();
        if !(4..=7).contains(&k) {
            // Cannot happen once the support rules above hold; reported
            // rather than silently extending the definition.
            return Err(Error::inconsistency(format!(
                "omega: prime {} has coordinate count {} outside 4..=7",
                p, k
            )));
        }
        if k % 2 == 0 {
            sign = -sign;
        }
    }
    Ok(sign)
}

/// One supported single-prime pattern of the weight: which coordinates of r
/// and s receive the prime, and the resulting sign.
#[derive(Clone, Copy, Debug)]
pub struct PrimePattern {
    pub r_mask: u8,
    pub s_mask: u8,
    pub sign: i8,
}

/// All single-prime patterns with nonzero weight: every coordinate is
/// covered by r or s, and not all four coordinates carry s.
pub fn prime_patterns() -> Vec<PrimePattern> {
    let mut out = Vec::new();
    for r_mask in 0u8..16 {
        for s_mask in 0u8..16 {
            if (0..4).any(|i| r_mask & (1 << i) == 0 && s_mask & (1 << i) == 0) {
                continue;
            }
            if s_mask == 0b1111 {
                continue;
            }
            let k = r_mask.count_ones() + s_mask.count_ones();
            debug_assert!((4..=7).contains(&k));
            let sign = if k % 2 == 0 { -1 } else { 1 };
            out.push(PrimePattern {
                r_mask,
                s_mask,
                sign,
            });
        }
    }
    out
}

fn pow_u128(p: u64, e: u32) -> Result<u128> {
    let mut acc: u128 = 1;
    for _ in 0..e {
        acc = acc
            .checked_mul(p as u128)
            .ok_or_else(|| Error::overflow("prime power"))?;
    }
    Ok(acc)
}

fn val_p(mut m: u64, p: u64) -> u32 {
    let mut v = 0;
    while m > 0 && m % p == 0 {
        m /= p;
        v += 1;
    }
    v
}

fn check_squarefree_vec(y: &[i64; 4]) -> Result<()> {
    for &v in y {
        if v == 0 {
            return Err(Error::invalid("coordinate must be nonzero"));
        }
        if !factorize(v)?.is_squarefree() {
            return Err(Error::invalid(format!("{} is not squarefree", v)));
        }
    }
    Ok(())
}

/// Coefficients s_i^2 y_i^3 as i64, with overflow reported.
fn scaled_coeffs(s: &[u64; 4], y: &[i64; 4]) -> Result<[i64; 4]> {
    let mut a = [0i64; 4];
    for i in 0..4 {
        let v = (y[i] as i128)
            .checked_pow(3)
            .and_then(|c| c.checked_mul((s[i] as i128) * (s[i] as i128)))
            .ok_or_else(|| Error::overflow("s^2 y^3"))?;
        if v.unsigned_abs() >= (1u128 << 62) {
            return Err(Error::overflow("s^2 y^3 exceeds 63 bits"));
        }
        a[i] = v as i64;
    }
    Ok(a)
}

/// Density N_a(p^n) / p^(3n) = 1 + sum_{j<=n} p^(-4j) S_{p^j,a}(0), exact.
fn count_density(a: &[i64; 4], p: u64, n: u32) -> Result<Rat> {
    let mut acc = Rat::ONE;
    for j in 1..=n {
        acc = acc.add(&s_prime_power_scaled(a, p, j)?)?;
    }
    Ok(acc)
}

const BRUTE_LIMIT: u128 = 1 << 26;

/// Brute count of m mod p^n with sum_i a_i m_i^2 = 0 (mod p^n), where
/// coordinate i is restricted to multiples of p when `restricted[i]`.
/// Histogram convolution keeps the cost at O(p^(2n)).
fn brute_count(a: &[i64; 4], p: u64, n: u32, restricted: [bool; 4]) -> Result<u128> {
    let q = pow_u128(p, n)?;
    if q.checked_mul(q).is_none_or(|v| v > BRUTE_LIMIT) {
        return Err(Error::budget(format!(
            "brute modular count: p^2n = {}^{} too large",
            p,
            2 * n
        )));
    }
    let q = q as u64;
    let mut hists: Vec<Vec<u64>> = Vec::with_capacity(4);
    for i in 0..4 {
        let mut h = vec![0u64; q as usize];
        let step = if restricted[i] { p } else { 1 };
        let mut m = 0u64;
        while m < q {
            let sq = (m as u128 * m as u128 % q as u128) as u64;
            let c = a[i].rem_euclid(q as i64) as u64;
            let v = (c as u128 * sq as u128 % q as u128) as usize;
            h[v] += 1;
            m += step;
        }
        hists.push(h);
    }
    let conv = |x: &[u64], y: &[u64]| -> Vec<u128> {
        let mut out = vec![0u128; q as usize];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0 {
                continue;
            }
            for (j, &yj) in y.iter().enumerate() {
                if yj != 0 {
                    out[(i + j) % q as usize] += xi as u128 * yj as u128;
                }
            }
        }
        out
    };
    let h12 = conv(&hists[0], &hists[1]);
    let h34 = conv(&hists[2], &hists[3]);
    let mut total: u128 = 0;
    for v in 0..q as usize {
        let w = (q as usize - v) % q as usize;
        total += h12[v] * h34[w];
    }
    Ok(total)
}

/// N_{s,y}(p^n): number of m mod p^n with sum s_i^2 y_i^3 m_i^2 = 0 mod p^n.
/// Small moduli are counted directly; larger ones through the exact
/// Gauss-sum identity, whose result must come out an integer.
pub fn n_count(s: &[u64; 4], y: &[i64; 4], p: u64, n: u32) -> Result<u128> {
    check_squarefree_vec(y)?;
    if n == 0 {
        return Ok(1);
    }
    let a = scaled_coeffs(s, y)?;
    if pow_u128(p, 2 * n).map_or(false, |v| v <= BRUTE_LIMIT) {
        return brute_count(&a, p, n, [false; 4]);
    }
    let dens = count_density(&a, p, n)?;
    let p3n = pow_u128(p, 3 * n)?;
    if p3n > i128::MAX as u128 {
        return Err(Error::overflow("n_count: p^(3n) exceeds 128 bits"));
    }
    let scaled = dens.mul(&Rat::from_int(p3n as i128))?;
    if !scaled.is_integer() || scaled.numer() < 0 {
        return Err(Error::inconsistency(format!(
            "N_count({},{}) did not reduce to a nonnegative integer: {}",
            p, n, scaled
        )));
    }
    Ok(scaled.numer() as u128)
}

/// M_N(y,p): count of m mod p^N satisfying the congruence with some m_j y_j
/// coprime to p. Subtracts the fully p-divisible part, which after rescaling
/// is the count for the coefficient system with s_j = p on the coordinates
/// where p does not divide y_j. M_0 = 0 by convention.
pub fn m_count(y: &[i64; 4], p: u64, n: u32) -> Result<u128> {
    check_squarefree_vec(y)?;
    if n == 0 {
        return Ok(0);
    }
    let dens = m_density(y, p, n)?;
    let p3n = pow_u128(p, 3 * n)?;
    if p3n > i128::MAX as u128 {
        return Err(Error::overflow("m_count: p^(3n) exceeds 128 bits"));
    }
    let scaled = dens.mul(&Rat::from_int(p3n as i128))?;
    if !scaled.is_integer() || scaled.numer() < 0 {
        return Err(Error::inconsistency(format!(
            "M_count({},{}) did not reduce to a nonnegative integer: {}",
            p, n, scaled
        )));
    }
    Ok(scaled.numer() as u128)
}

/// M_N(y,p) / p^(3N), exact.
fn m_density(y: &[i64; 4], p: u64, n: u32) -> Result<Rat> {
    if n == 0 {
        return Ok(Rat::ZERO);
    }
    let ones = [1u64; 4];
    let free: [bool; 4] = std::array::from_fn(|i| y[i].unsigned_abs() % p == 0);
    let c = free.iter().filter(|&&f| !f).count() as u32;
    let s: [u64; 4] = std::array::from_fn(|i| if free[i] { 1 } else { p });
    let d1 = padic_count_density(&ones, y, p, n)?;
    let d2 = padic_count_density(&s, y, p, n)?;
    d1.sub(&d2.mul_pow(p as i128, -(c as i32))?)
}

/// N_{s,y}(p^n) / p^(3n) as an exact rational, preferring the closed-form
/// Gauss route and falling back to brute force only for cross-checks.
fn padic_count_density(s: &[u64; 4], y: &[i64; 4], p: u64, n: u32) -> Result<Rat> {
    let a = scaled_coeffs(s, y)?;
    count_density(&a, p, n)
}

/// A stabilized local density: the exact rational limit of M_N / p^(3N).
#[derive(Clone, Debug, Serialize)]
pub struct LocalDensity {
    pub p: u64,
    pub y: [i64; 4],
    pub n_stable: u32,
    pub value: Rat,
}

/// Stabilized local density at p. The level sweep runs past the largest
/// coefficient valuation, verifies three consecutive equal values (the term
/// structure is step-two geometric there, so equality persists), and checks
/// the closed form at primes away from 2Y.
pub fn local_density(y: &[i64; 4], p: u64, tol: f64) -> Result<LocalDensity> {
    check_squarefree_vec(y)?;
    if !crate::arith::is_prime_u64(p) {
        return Err(Error::invalid(format!("{} is not prime", p)));
    }
    let maxv = (0..4)
        .map(|i| val_p(y[i].unsigned_abs(), p) * 3)
        .max()
        .unwrap()
        + 2;
    let mut levels: Vec<Rat> = vec![Rat::ZERO];
    let mut stable_at: Option<u32> = None;
    let mut n = 0u32;
    while n < 40 {
        n += 1;
        levels.push(m_density(y, p, n)?);
        let l = levels.len();
        if n >= maxv + 2
            && l >= 3
            && levels[l - 1] == levels[l - 2]
            && levels[l - 2] == levels[l - 3]
        {
            // Geometric tail bound on the remaining terms.
            let nu_sum: u32 = (0..4).map(|i| val_p(y[i].unsigned_abs(), p) * 3).sum();
            let bound = 2.0 * (p as f64).powi(nu_sum as i32 / 2 + 2 - n as i32);
            if bound < tol {
                stable_at = Some(n);
                break;
            }
        }
    }
    let Some(top) = stable_at else {
        return Err(Error::inconsistency(format!(
            "local density at p = {} failed to stabilize within 40 levels",
            p
        )));
    };
    let value = levels[top as usize];
    let n_stable = (1..=top)
        .find(|&k| levels[k as usize] == value)
        .unwrap_or(top);
    // Closed form at primes not dividing 2Y:
    // (1 - p^-2)(1 - chi p^-2)/(1 - chi p^-1) with chi = (Y/p).
    let yprod: i128 = y.iter().map(|&v| v as i128).product();
    if p != 2 && yprod.unsigned_abs() % p as u128 != 0 {
        let chi = jacobi((yprod % p as i128) as i64, p)? as i128;
        let p2 = (p * p) as i128;
        let closed = Rat::new(p2 - 1, p2)?
            .mul(&Rat::new(p2 - chi, p2)?)?
            .div(&Rat::new(p as i128 - chi, p as i128)?)?;
        if closed != value {
            return Err(Error::inconsistency(format!(
                "local density at p = {} disagrees with the closed form: {} vs {}",
                p, value, closed
            )));
        }
    }
    Ok(LocalDensity {
        p,
        y: *y,
        n_stable,
        value,
    })
}

/// Result of the omega-weighted singular-series sum over the support of a
/// fibre's coefficient vector.
#[derive(Clone, Debug, Serialize)]
pub struct InnerSum {
    pub value: f64,
    pub tail_bound: f64,
    pub terms: usize,
}

const ZETA2_INV: f64 = 6.0 / (PI * PI);

/// The finite omega-weighted sum over r | y, supported s, and all s_0 of
/// omega(r, s, s0) times the singular series of the rescaled coefficients
/// over the rescaling volume. Overlap between s_0 and s is genuine: the
/// divisibility conditions combine through lcm(s_i, s_0), so the singular
/// series argument is scaled coordinatewise by lcm(s_i, s_0)^2. The part of
/// s_0 supported outside the primes of Y sums in closed form to
/// zeta(2)^(-1) prod_{p | Y} (1 - p^-2)^(-1).
pub fn inner_sum(y: &[i64; 4], tol: f64, method: &SeriesMethod) -> Result<InnerSum> {
    check_squarefree_vec(y)?;
    let yprod: i128 = y.iter().map(|&v| v as i128).product();
    if is_square_i128(yprod) {
        return Err(Error::invalid(
            "inner sum undefined: coordinate product is a perfect square",
        ));
    }
    let fy = factorize(yprod.unsigned_abs() as i64)?;
    // Per-prime configurations: the lcm mask says which coordinates pick up
    // the prime in lcm(s_i, s_0).
    struct Config {
        l_mask: u8,
        sign: i8,
    }
    let mut per_prime: Vec<(u64, Vec<Config>)> = Vec::new();
    for &(p, _) in &fy.factors {
        let t_mask: u8 = (0..4)
            .filter(|&i| y[i].unsigned_abs() % p == 0)
            .fold(0u8, |m, i| m | (1 << i));
        let mut configs = vec![
            // p absent from r, s, s0.
            Config { l_mask: 0, sign: 1 },
            // p only in s0: mu contributes the sign, every coordinate
            // rescales.
            Config {
                l_mask: 0b1111,
                sign: -1,
            },
        ];
        for pat in prime_patterns() {
            // r only on coordinates dividing y; s forced on the others.
            if pat.r_mask & !t_mask != 0 || pat.s_mask & !t_mask != !t_mask & 0b1111 {
                continue;
            }
            for s0_on in [false, true] {
                configs.push(Config {
                    l_mask: if s0_on { 0b1111 } else { pat.s_mask },
                    sign: pat.sign * if s0_on { -1 } else { 1 },
                });
            }
        }
        per_prime.push((p, configs));
    }
    // Cartesian product across the primes of Y.
    let mut combos: Vec<([u64; 4], i8)> = vec![([1; 4], 1)];
    for (p, configs) in &per_prime {
        let mut next = Vec::with_capacity(combos.len() * configs.len());
        for &(l, sign) in &combos {
            for cfg in configs {
                let mut l2 = l;
                for i in 0..4 {
                    if cfg.l_mask & (1 << i) != 0 {
                        l2[i] *= p;
                    }
                }
                next.push((l2, sign * cfg.sign));
            }
        }
        combos = next;
    }
    let mut base = ZETA2_INV;
    for &(p, _) in &fy.factors {
        let pf = p as f64;
        base /= 1.0 - 1.0 / (pf * pf);
    }
    let per_term_tol = tol / (combos.len() as f64 * 4.0);
    let mut value = 0.0f64;
    let mut tail = 0.0f64;
    for (l, sign) in &combos {
        let a = scaled_coeffs(l, y)?;
        let cv = CoeffVector::new(a)?;
        let series = singular_series(&cv, method, per_term_tol)?;
        let l_prod: f64 = l.iter().map(|&v| v as f64).product();
        value += *sign as f64 * base * series.value / l_prod;
        tail += base * series.tail_bound / l_prod;
    }
    Ok(InnerSum {
        value,
        tail_bound: tail,
        terms: combos.len(),
    })
}

/// The Euler product of local densities over all primes: exact stabilized
/// factors at p | 2Y, and the L-accelerated closed form elsewhere.
#[derive(Clone, Debug, Serialize)]
pub struct DensityProduct {
    pub value: f64,
    pub tail_bound: f64,
    pub bad: Vec<LocalDensity>,
}

pub fn euler_product_density(y: &[i64; 4], tol: f64) -> Result<DensityProduct> {
    check_squarefree_vec(y)?;
    let yprod: i128 = y.iter().map(|&v| v as i128).product();
    if is_square_i128(yprod) {
        return Err(Error::invalid(
            "density product undefined: coordinate product is a perfect square",
        ));
    }
    if yprod.unsigned_abs() >= (1u128 << 62) {
        return Err(Error::overflow("density product: |Y| too large"));
    }
    let mut bad_primes: Vec<u64> = vec![2];
    for &(p, _) in &factorize(yprod.unsigned_abs() as i64)?.factors {
        if p != 2 {
            bad_primes.push(p);
        }
    }
    let mut bad = Vec::new();
    let mut value = 1.0f64;
    for &p in &bad_primes {
        let d = local_density(y, p, tol)?;
        value *= d.value.to_f64();
        bad.push(d);
    }
    // Good primes: prod (1 - p^-2) (1 - chi p^-2) / (1 - chi p^-1)
    //   = zeta(2)^-1 prod_{p|2Y} (1-p^-2)^-1
    //     * L(1,chi)/L(2,chi) prod_{p|2Y} (1 - chi(p)/p)/(1 - chi(p)/p^2).
    let disc = fundamental_discriminant(yprod as i64)?;
    let chi = QuadChar::new(disc);
    let mut good = ZETA2_INV;
    for &p in &bad_primes {
        let pf = p as f64;
        good /= 1.0 - 1.0 / (pf * pf);
    }
    let l1 = chi.l_one()?;
    let (l2, l2_tail) = chi.l_two(tol.min(1e-10))?;
    let mut ratio = l1 / l2;
    for &p in &bad_primes {
        let x = chi.eval(p as i64) as f64;
        if x != 0.0 {
            let pf = p as f64;
            ratio *= (1.0 - x / pf) / (1.0 - x / (pf * pf));
        }
    }
    good *= ratio;
    let total = value * good;
    Ok(DensityProduct {
        value: total,
        tail_bound: (l2_tail / l2).abs() * total.abs() + 1e-12,
        bad,
    })
}
