//! The z = y^3 x^2 decomposition of squareful integers, complete enumeration
//! up to a bound, the thin-set membership test, and an optional binary cache
//! of the enumeration table.

use crate::arith::{factorize, isqrt_u64};
use crate::error::{Error, Result};
use serde::Serialize;
use std::io::{Read, Write};
use std::path::Path;

/// A squareful integer with its unique decomposition z = y^3 x^2,
/// y squarefree and sharing the sign of z, x >= 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SquarefulDecomp {
    pub z: i64,
    pub y: i64,
    pub x: u64,
}

/// Decompose a nonzero squareful integer into its unique (y, x) pair.
pub fn decompose(z: i64) -> Result<SquarefulDecomp> {
    let f = factorize(z)?;
    if !f.is_squareful() {
        return Err(Error::invalid(format!("{} is not squareful", z)));
    }
    let mut y: i64 = f.sign as i64;
    let mut x: u64 = 1;
    for &(p, e) in &f.factors {
        // e = 3a + 2b with a in {0,1}: odd exponents put one p^3 into y^3.
        let (a, b) = if e % 2 == 1 { (1, (e - 3) / 2) } else { (0, e / 2) };
        if a == 1 {
            y *= p as i64;
        }
        for _ in 0..b {
            x = x
                .checked_mul(p)
                .ok_or_else(|| Error::overflow("decompose"))?;
        }
    }
    Ok(SquarefulDecomp { z, y, x })
}

/// All squareful integers in [1, B] with their decompositions, ascending.
/// Signed values are derived views; the table stores positives only.
#[derive(Clone, Debug)]
pub struct SquarefulTable {
    pub bound: u64,
    pub entries: Vec<SquarefulDecomp>,
}

/// Sieve of squarefree flags for 1..=limit.
pub fn squarefree_sieve(limit: u64) -> Vec<bool> {
    let n = limit as usize;
    let mut flag = vec![true; n + 1];
    if n >= 1 {
        flag[0] = false;
    }
    let mut d = 2u64;
    while d * d <= limit {
        let sq = (d * d) as usize;
        let mut m = sq;
        while m <= n {
            flag[m] = false;
            m += sq;
        }
        d += 1;
    }
    flag
}

impl SquarefulTable {
    pub fn build(bound: u64) -> Result<SquarefulTable> {
        if bound == 0 {
            return Err(Error::invalid("enumeration bound must be >= 1"));
        }
        if bound > (1u64 << 62) {
            return Err(Error::invalid("enumeration bound exceeds 63-bit range"));
        }
        let ymax = cbrt_floor(bound);
        let sqfree = squarefree_sieve(ymax.max(1));
        let mut entries = Vec::new();
        for y in 1..=ymax {
            if !sqfree[y as usize] {
                continue;
            }
            let y3 = (y as u128).pow(3);
            let xmax = isqrt_u64((bound as u128 / y3) as u64);
            for x in 1..=xmax {
                let z = y3 as u64 * x * x;
                entries.push(SquarefulDecomp {
                    z: z as i64,
                    y: y as i64,
                    x,
                });
            }
        }
        entries.sort_unstable_by_key(|e| e.z);
        Ok(SquarefulTable { bound, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The count the table must have: sum over squarefree y with y^3 <= B of
    /// floor(sqrt(B / y^3)).
    pub fn expected_count(bound: u64) -> u64 {
        let ymax = cbrt_floor(bound);
        let sqfree = squarefree_sieve(ymax.max(1));
        let mut total = 0u64;
        for y in 1..=ymax {
            if sqfree[y as usize] {
                let y3 = (y as u128).pow(3);
                total += isqrt_u64((bound as u128 / y3) as u64);
            }
        }
        total
    }

    /// Both signs of every entry, ascending by z.
    pub fn signed_entries(&self) -> Vec<SquarefulDecomp> {
        let mut out = Vec::with_capacity(2 * self.entries.len());
        for e in self.entries.iter().rev() {
            out.push(SquarefulDecomp {
                z: -e.z,
                y: -e.y,
                x: e.x,
            });
        }
        out.extend_from_slice(&self.entries);
        out
    }

    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(16 + 24 * self.entries.len());
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        buf.extend_from_slice(&self.bound.to_le_bytes());
        for e in &self.entries {
            buf.extend_from_slice(&e.z.to_le_bytes());
            buf.extend_from_slice(&e.y.to_le_bytes());
            buf.extend_from_slice(&e.x.to_le_bytes());
        }
        let mut file = std::fs::File::create(path)
            .map_err(|e| Error::invalid(format!("cache write {}: {}", path.display(), e)))?;
        file.write_all(&buf)
            .map_err(|e| Error::invalid(format!("cache write {}: {}", path.display(), e)))?;
        Ok(())
    }

    pub fn read_cache(path: &Path) -> Result<SquarefulTable> {
        let mut buf = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut buf))
            .map_err(|e| Error::invalid(format!("cache read {}: {}", path.display(), e)))?;
        if buf.len() < 16 || &buf[0..4] != CACHE_MAGIC {
            return Err(Error::invalid("cache: bad magic"));
        }
        let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
        if version != CACHE_VERSION {
            return Err(Error::invalid(format!("cache: unsupported version {}", version)));
        }
        let bound = u64::from_le_bytes(buf[8..16].try_into().unwrap());
        let body = &buf[16..];
        if body.len() % 24 != 0 {
            return Err(Error::invalid("cache: truncated record"));
        }
        let mut entries = Vec::with_capacity(body.len() / 24);
        for rec in body.chunks_exact(24) {
            let z = i64::from_le_bytes(rec[0..8].try_into().unwrap());
            let y = i64::from_le_bytes(rec[8..16].try_into().unwrap());
            let x = u64::from_le_bytes(rec[16..24].try_into().unwrap());
            entries.push(SquarefulDecomp { z, y, x });
        }
        let table = SquarefulTable { bound, entries };
        table.validate()?;
        Ok(table)
    }

    /// Check completeness, ordering, and the decomposition identity.
    pub fn validate(&self) -> Result<()> {
        if self.entries.len() as u64 != Self::expected_count(self.bound) {
            return Err(Error::inconsistency("table: wrong entry count"));
        }
        let mut prev = 0i64;
        for e in &self.entries {
            if e.z <= prev {
                return Err(Error::inconsistency("table: not strictly ascending"));
            }
            prev = e.z;
            let v = (e.y as i128).pow(3) * (e.x as i128).pow(2);
            if v != e.z as i128 || e.z <= 0 || e.z as u64 > self.bound {
                return Err(Error::inconsistency("table: invalid record"));
            }
        }
        Ok(())
    }
}

const CACHE_MAGIC: &[u8; 4] = b"SQFT";
const CACHE_VERSION: u32 = 1;

fn cbrt_floor(n: u64) -> u64 {
    let mut r = (n as f64).cbrt() as u64;
    while r > 0 && (r as u128).pow(3) > n as u128 {
        r -= 1;
    }
    while ((r + 1) as u128).pow(3) <= n as u128 {
        r += 1;
    }
    r
}

/// True iff z1 z2 z3 z4 is a perfect square. Works on the merged
/// factorization, so arbitrary 63-bit coordinates are exact.
pub fn is_thin(z: &[i64; 4]) -> Result<bool> {
    if z.iter().any(|&v| v == 0) {
        return Err(Error::invalid("thin test with zero coordinate"));
    }
    let negatives = z.iter().filter(|&&v| v < 0).count();
    if negatives % 2 == 1 {
        return Ok(false);
    }
    let mut odd_primes = std::collections::BTreeMap::<u64, u32>::new();
    for &v in z {
        for (p, e) in factorize(v)?.factors {
            *odd_primes.entry(p).or_insert(0) += e;
        }
    }
    Ok(odd_primes.values().all(|&e| e % 2 == 0))
}

/// Sign-aware product of the y-parts; for squareful coordinates, the tuple is
/// thin exactly when this product is a perfect square.
pub fn y_product(decomps: &[SquarefulDecomp; 4]) -> i128 {
    decomps.iter().map(|d| d.y as i128).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{is_square_i128, is_squareful, is_squarefree};

    #[test]
    fn decompose_examples() {
        assert_eq!(
            decompose(1).unwrap(),
            SquarefulDecomp { z: 1, y: 1, x: 1 }
        );
        assert_eq!(
            decompose(72).unwrap(),
            SquarefulDecomp { z: 72, y: 2, x: 3 }
        );
        assert_eq!(
            decompose(-25).unwrap(),
            SquarefulDecomp { z: -25, y: -1, x: 5 }
        );
        assert!(decompose(12).is_err());
        assert!(decompose(0).is_err());
    }

    #[test]
    fn decompose_compose_identity() {
        for y in -50i64..=50 {
            if y == 0 || !is_squarefree(y).unwrap() {
                continue;
            }
            for x in 1u64..=50 {
                let z = y.pow(3) * (x * x) as i64;
                let d = decompose(z).unwrap();
                assert_eq!((d.y, d.x), (y, x), "z={}", z);
            }
        }
    }

    #[test]
    fn enumerate_examples() {
        let t = SquarefulTable::build(1).unwrap();
        assert_eq!(t.entries.iter().map(|e| e.z).collect::<Vec<_>>(), vec![1]);
        let t = SquarefulTable::build(10).unwrap();
        assert_eq!(
            t.entries.iter().map(|e| e.z).collect::<Vec<_>>(),
            vec![1, 4, 8, 9]
        );
        let t = SquarefulTable::build(100).unwrap();
        assert_eq!(
            t.entries.iter().map(|e| e.z).collect::<Vec<_>>(),
            vec![1, 4, 8, 9, 16, 25, 27, 32, 36, 49, 64, 72, 81, 100]
        );
        assert_eq!(t.len(), 14);
        assert!(SquarefulTable::build(0).is_err());
    }

    #[test]
    fn enumeration_matches_direct_scan() {
        // Completeness against a scan of the squareful predicate, and the
        // closed-form count, at several bounds.
        for bound in [10u64, 100, 1000, 50_000] {
            let t = SquarefulTable::build(bound).unwrap();
            t.validate().unwrap();
            let scan: Vec<u64> = (1..=bound)
                .filter(|&n| is_squareful(n as i64).unwrap())
                .collect();
            assert_eq!(scan.len() as u64, SquarefulTable::expected_count(bound));
            assert_eq!(
                t.entries.iter().map(|e| e.z as u64).collect::<Vec<_>>(),
                scan
            );
        }
    }

    #[test]
    fn enumeration_count_formula_at_large_bound() {
        // Completeness at one million via the closed-form count.
        let t = SquarefulTable::build(1_000_000).unwrap();
        t.validate().unwrap();
        assert_eq!(
            t.len() as u64,
            SquarefulTable::expected_count(1_000_000)
        );
    }

    #[test]
    fn signed_view_is_sorted_and_symmetric() {
        let t = SquarefulTable::build(100).unwrap();
        let v = t.signed_entries();
        assert_eq!(v.len(), 2 * t.len());
        for w in v.windows(2) {
            assert!(w[0].z < w[1].z);
        }
        for e in &v {
            assert_eq!((e.y as i128).pow(3) * (e.x as i128).pow(2), e.z as i128);
            assert_eq!(e.z < 0, e.y < 0);
        }
    }

    #[test]
    fn thin_examples_and_invariances() {
        assert!(is_thin(&[1, 1, 1, 1]).unwrap());
        assert!(is_thin(&[1, -1, 9, -9]).unwrap());
        assert!(!is_thin(&[1, 8, 16, -25]).unwrap());
        assert!(is_thin(&[1, 0, 1, 1]).is_err());
        let z = [3, -12, 5, -20];
        assert_eq!(is_thin(&z).unwrap(), true); // product 3600 = 60^2
        let perm = [z[3], z[1], z[0], z[2]];
        let neg = z.map(|v| -v);
        assert_eq!(is_thin(&z).unwrap(), is_thin(&perm).unwrap());
        assert_eq!(is_thin(&z).unwrap(), is_thin(&neg).unwrap());
    }

    #[test]
    fn thin_agrees_with_y_product_on_squareful_quadruples() {
        let t = SquarefulTable::build(100).unwrap();
        let signed = t.signed_entries();
        // All quadruples from the B=100 table are too many only if we take
        // ordered tuples over the signed list; sample the positive entries
        // exhaustively with both sign choices on two slots.
        for a in &t.entries {
            for b in &t.entries {
                for c in &signed {
                    for d in &signed {
                        let z = [a.z, b.z, c.z, d.z];
                        let decs = [*a, *b, *c, *d];
                        let yp = y_product(&decs);
                        assert_eq!(
                            is_thin(&z).unwrap(),
                            is_square_i128(yp),
                            "z={:?}",
                            z
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn cache_roundtrip() {
        let dir = std::env::temp_dir().join("squareful_cache_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("table.bin");
        let t = SquarefulTable::build(5000).unwrap();
        t.write_cache(&path).unwrap();
        let r = SquarefulTable::read_cache(&path).unwrap();
        assert_eq!(r.bound, t.bound);
        assert_eq!(r.entries, t.entries);
        // Corrupt the magic and confirm rejection.
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(SquarefulTable::read_cache(&path).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
