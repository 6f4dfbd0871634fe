//! Exact counters for the quadruple-sum problem: the primitive/thin-filtered
//! quadruple counts, tail counts by the y-part product, box counts, quadric
//! and fibre counts, the sieve sets with divisibility conditions, and the
//! inclusion-exclusion verifier.
//!
//! The fast path is a meet-in-the-middle over a sorted pair-sum index built
//! from the signed squareful table; brute-force enumerations of the same
//! quantities serve as oracles at desk scale.

use crate::arith::{gcd4, gcd_u64, is_square_i128, isqrt_u64, CoeffVector};
use crate::error::{Error, Result};
use crate::padic::prime_patterns;
use crate::squareful::{SquarefulDecomp, SquarefulTable};
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

/// Per-query filters. All off means: ordered quadruples of nonzero squareful
/// values bounded by the table, summing to zero, no further condition.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct CountFilters {
    /// gcd(z_1,..,z_4) = 1.
    pub primitive: bool,
    /// Exclude tuples whose product is a perfect square (equivalently,
    /// whose y-part product is one).
    pub exclude_square_y: bool,
    /// |y_1 y_2 y_3 y_4| <= ymax.
    pub ymax: Option<u128>,
    /// |y_1 y_2 y_3 y_4| >= ymin.
    pub ymin: Option<u128>,
    /// r_i | y_i coordinatewise.
    pub rdiv: Option<[u64; 4]>,
    /// s_i | x_i coordinatewise.
    pub sdiv: Option<[u64; 4]>,
    /// s0 | x_i for every i.
    pub s0: Option<u64>,
}

impl CountFilters {
    fn order_sensitive(&self) -> bool {
        let asym = |v: &[u64; 4]| v[2] != v[3];
        self.rdiv.as_ref().is_some_and(asym) || self.sdiv.as_ref().is_some_and(asym)
    }

    /// Filters that do not depend on the tuple ordering.
    fn passes_unordered(&self, e: &[SquarefulDecomp; 4]) -> bool {
        if self.primitive {
            let g = gcd4([
                e[0].z.unsigned_abs(),
                e[1].z.unsigned_abs(),
                e[2].z.unsigned_abs(),
                e[3].z.unsigned_abs(),
            ]);
            if g != 1 {
                return false;
            }
        }
        if self.exclude_square_y || self.ymax.is_some() || self.ymin.is_some() {
            let yprod: i128 = e.iter().map(|d| d.y as i128).product();
            if self.exclude_square_y && is_square_i128(yprod) {
                return false;
            }
            let ab = yprod.unsigned_abs();
            if self.ymax.is_some_and(|d| ab > d) {
                return false;
            }
            if self.ymin.is_some_and(|d| ab < d) {
                return false;
            }
        }
        if let Some(s0) = self.s0 {
            if e.iter().any(|d| d.x % s0 != 0) {
                return false;
            }
        }
        true
    }

    /// Per-coordinate divisibility for a fixed assignment of entries to
    /// slots.
    fn passes_slots(&self, e: &[SquarefulDecomp; 4]) -> bool {
        if let Some(r) = self.rdiv {
            if (0..4).any(|i| e[i].y.unsigned_abs() % r[i] != 0) {
                return false;
            }
        }
        if let Some(s) = self.sdiv {
            if (0..4).any(|i| e[i].x % s[i] != 0) {
                return false;
            }
        }
        true
    }
}

/// One exact count with its algorithm tag and elapsed wall time.
#[derive(Clone, Debug, Serialize)]
pub struct CountResult {
    pub count: u64,
    pub algorithm: &'static str,
    /// Wall time; excluded from serialized records so identical queries
    /// produce byte-identical output.
    #[serde(skip)]
    pub seconds: f64,
}

/// Record of the pair-sum index: the sum z_i + z_j for an unordered pair
/// i <= j of positions in the signed table, 12 bytes each.
#[derive(Clone, Copy)]
#[repr(C)]
struct PairRec {
    sum: i64,
    i: u16,
    j: u16,
}

/// Sorted pair-sum index over the unordered pairs with nonnegative sum drawn
/// from a contiguous row range of the signed table, with a hash map from
/// each distinct sum to its record range. Ordered tuples are recovered
/// through the multiplicity of each record (1 on the diagonal, 2 off it)
/// and the global-negation symmetry of solutions.
pub struct PairSumIndex {
    records: Vec<PairRec>,
    by_sum: std::collections::HashMap<i64, (u32, u32)>,
}

impl PairSumIndex {
    fn build(entries: &[SquarefulDecomp], rows: std::ops::Range<usize>) -> PairSumIndex {
        let n = entries.len();
        let mut records = Vec::new();
        for i in rows {
            let zi = entries[i].z;
            let lb = entries.partition_point(|e| e.z < -zi);
            for j in lb.max(i)..n {
                records.push(PairRec {
                    sum: zi + entries[j].z,
                    i: i as u16,
                    j: j as u16,
                });
            }
        }
        records.par_sort_unstable_by_key(|r| r.sum);
        let mut by_sum = std::collections::HashMap::new();
        let mut pos = 0usize;
        while pos < records.len() {
            let s = records[pos].sum;
            let start = pos;
            while pos < records.len() && records[pos].sum == s {
                pos += 1;
            }
            by_sum.insert(s, (start as u32, (pos - start) as u32));
        }
        PairSumIndex { records, by_sum }
    }

    fn range(&self, sum: i64) -> &[PairRec] {
        match self.by_sum.get(&sum) {
            Some(&(start, len)) => &self.records[start as usize..(start + len) as usize],
            None => &[],
        }
    }

    fn row_sizes(entries: &[SquarefulDecomp]) -> Vec<usize> {
        let n = entries.len();
        (0..n)
            .map(|i| {
                let zi = entries[i].z;
                let lb = entries.partition_point(|e| e.z < -zi);
                n - lb.max(i)
            })
            .collect()
    }
}

const DEFAULT_BUDGET: usize = 4 << 30;
const FAST_BOUND_LIMIT: u64 = 100_000_000;

fn signed_entries_checked(table: &SquarefulTable) -> Result<Vec<SquarefulDecomp>> {
    if table.bound > FAST_BOUND_LIMIT {
        return Err(Error::invalid(format!(
            "fast count supports bounds up to {}",
            FAST_BOUND_LIMIT
        )));
    }
    let v = table.signed_entries();
    if v.len() > u16::MAX as usize + 1 {
        return Err(Error::budget("signed table exceeds 16-bit indexing"));
    }
    Ok(v)
}

/// Count ordered quadruples summing to zero via the pair-sum index. The
/// outer ordered pair ranges over sums <= 0; inner pairs with positive sum
/// stand for themselves and their negated mirror.
fn mitm_count(
    entries: &[SquarefulDecomp],
    filters: &CountFilters,
    budget: usize,
) -> Result<u64> {
    let n = entries.len();
    if n == 0 {
        return Ok(0);
    }
    let sizes = PairSumIndex::row_sizes(entries);
    let rec_bytes = std::mem::size_of::<PairRec>();
    let budget_pairs = (budget / rec_bytes).max(1);
    let order_sensitive = filters.order_sensitive();
    let has_slot_filters = filters.rdiv.is_some() || filters.sdiv.is_some();
    let needs_y = filters.exclude_square_y || filters.ymax.is_some() || filters.ymin.is_some();
    let mut grand: u64 = 0;
    let mut row = 0usize;
    while row < n {
        let mut end = row;
        let mut pairs = 0usize;
        while end < n && (pairs == 0 || pairs + sizes[end] <= budget_pairs) {
            pairs += sizes[end];
            end += 1;
        }
        let index = PairSumIndex::build(entries, row..end);
        grand += (0..n)
            .into_par_iter()
            .map(|k1| {
                let e1 = entries[k1];
                let mut local: u64 = 0;
                // Slot-1 divisibility prunes the whole row.
                if !slot_ok(filters, 0, &e1) {
                    return 0;
                }
                // Ordered second coordinate with z1 + z2 <= 0.
                let ub = entries.partition_point(|e| e.z <= -e1.z);
                for k2 in 0..ub {
                    let e2 = entries[k2];
                    if !slot_ok(filters, 1, &e2) {
                        continue;
                    }
                    let s12 = e1.z + e2.z;
                    let base: u64 = if s12 < 0 { 2 } else { 1 };
                    let g12 = gcd_u64(e1.z.unsigned_abs(), e2.z.unsigned_abs());
                    let y12 = e1.y as i128 * e2.y as i128;
                    for rec in index.range(-s12) {
                        let (i3, i4) = (rec.i as usize, rec.j as usize);
                        let e3 = entries[i3];
                        let e4 = entries[i4];
                        if filters.primitive && g12 != 1 {
                            let g = gcd_u64(
                                gcd_u64(g12, e3.z.unsigned_abs()),
                                e4.z.unsigned_abs(),
                            );
                            if g != 1 {
                                continue;
                            }
                        }
                        if needs_y {
                            let yprod = y12 * e3.y as i128 * e4.y as i128;
                            if filters.exclude_square_y && is_square_i128(yprod) {
                                continue;
                            }
                            let ab = yprod.unsigned_abs();
                            if filters.ymax.is_some_and(|d| ab > d)
                                || filters.ymin.is_some_and(|d| ab < d)
                            {
                                continue;
                            }
                        }
                        if let Some(s0) = filters.s0 {
                            if e1.x % s0 != 0
                                || e2.x % s0 != 0
                                || e3.x % s0 != 0
                                || e4.x % s0 != 0
                            {
                                continue;
                            }
                        }
                        let assignments: u64 = if !has_slot_filters {
                            if i3 == i4 {
                                1
                            } else {
                                2
                            }
                        } else if i3 == i4 {
                            u64::from(slot_ok(filters, 2, &e3) && slot_ok(filters, 3, &e4))
                        } else if order_sensitive {
                            u64::from(slot_ok(filters, 2, &e3) && slot_ok(filters, 3, &e4))
                                + u64::from(slot_ok(filters, 2, &e4) && slot_ok(filters, 3, &e3))
                        } else {
                            2 * u64::from(slot_ok(filters, 2, &e3) && slot_ok(filters, 3, &e4))
                        };
                        local += base * assignments;
                    }
                }
                local
            })
            .sum::<u64>();
        row = end;
    }
    Ok(grand)
}

#[inline]
fn slot_ok(filters: &CountFilters, slot: usize, e: &SquarefulDecomp) -> bool {
    if let Some(r) = filters.rdiv {
        if e.y.unsigned_abs() % r[slot] != 0 {
            return false;
        }
    }
    if let Some(s) = filters.sdiv {
        if e.x % s[slot] != 0 {
            return false;
        }
    }
    true
}

/// Enumerate (rather than count) all ordered solutions, single-threaded.
/// Intended for oracle-scale bounds.
fn mitm_collect(
    entries: &[SquarefulDecomp],
    filters: &CountFilters,
) -> Result<Vec<[SquarefulDecomp; 4]>> {
    let n = entries.len();
    let index = PairSumIndex::build(entries, 0..n);
    let mut out = Vec::new();
    let neg = |d: &SquarefulDecomp| SquarefulDecomp {
        z: -d.z,
        y: -d.y,
        x: d.x,
    };
    for k1 in 0..n {
        let z1 = entries[k1].z;
        let ub = entries.partition_point(|e| e.z <= -z1);
        for k2 in 0..ub {
            let s12 = z1 + entries[k2].z;
            for rec in index.range(-s12) {
                let (i3, i4) = (rec.i as usize, rec.j as usize);
                let mut push_orders = |a: SquarefulDecomp, b: SquarefulDecomp| {
                    let tuple = [entries[k1], entries[k2], a, b];
                    if filters.passes_unordered(&tuple) && filters.passes_slots(&tuple) {
                        out.push(tuple);
                    }
                    if s12 < 0 {
                        let mirrored = [neg(&entries[k1]), neg(&entries[k2]), neg(&a), neg(&b)];
                        if filters.passes_unordered(&mirrored) && filters.passes_slots(&mirrored) {
                            out.push(mirrored);
                        }
                    }
                };
                push_orders(entries[i3], entries[i4]);
                if i3 != i4 {
                    push_orders(entries[i4], entries[i3]);
                }
            }
        }
    }
    Ok(out)
}

/// Fast exact count over the table with the given filters.
pub fn count_fast(table: &SquarefulTable, filters: &CountFilters) -> Result<CountResult> {
    count_fast_with_budget(table, filters, DEFAULT_BUDGET)
}

pub fn count_fast_with_budget(
    table: &SquarefulTable,
    filters: &CountFilters,
    budget: usize,
) -> Result<CountResult> {
    let start = Instant::now();
    let entries = signed_entries_checked(table)?;
    let count = mitm_count(&entries, filters, budget)?;
    Ok(CountResult {
        count,
        algorithm: "meet-in-the-middle",
        seconds: start.elapsed().as_secs_f64(),
    })
}

const NAIVE_K4_LIMIT: u64 = 100_000;

/// Naive enumeration of ordered k-tuples (k = 3 or 4) of signed squareful
/// values summing to zero: loops over k-1 coordinates and solves for the
/// last by lookup. Independent of the pair-sum index machinery.
pub fn count_nk_naive(
    table: &SquarefulTable,
    k: u32,
    filters: &CountFilters,
) -> Result<CountResult> {
    let start = Instant::now();
    let entries = table.signed_entries();
    let lookup = |z: i64| -> Option<SquarefulDecomp> {
        entries
            .binary_search_by_key(&z, |e| e.z)
            .ok()
            .map(|i| entries[i])
    };
    let count: u64 = match k {
        3 => {
            let mut c = 0u64;
            for e1 in &entries {
                for e2 in &entries {
                    let Some(e3) = lookup(-(e1.z + e2.z)) else {
                        continue;
                    };
                    if filters.primitive
                        && gcd4([
                            e1.z.unsigned_abs(),
                            e2.z.unsigned_abs(),
                            e3.z.unsigned_abs(),
                            0,
                        ]) != 1
                    {
                        continue;
                    }
                    c += 1;
                }
            }
            c
        }
        4 => {
            if table.bound > NAIVE_K4_LIMIT {
                return Err(Error::budget(format!(
                    "naive quadruple enumeration supports bounds up to {}; use the fast path",
                    NAIVE_K4_LIMIT
                )));
            }
            entries
                .par_iter()
                .map(|e1| {
                    let mut c = 0u64;
                    for e2 in &entries {
                        let s12 = e1.z + e2.z;
                        for e3 in &entries {
                            let Some(e4) = lookup(-(s12 + e3.z)) else {
                                continue;
                            };
                            let tuple = [*e1, *e2, *e3, e4];
                            if filters.passes_unordered(&tuple) && filters.passes_slots(&tuple) {
                                c += 1;
                            }
                        }
                    }
                    c
                })
                .sum()
        }
        _ => return Err(Error::invalid("k must be 3 or 4")),
    };
    Ok(CountResult {
        count,
        algorithm: "naive-enumeration",
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// N(B) with optional |Y| cutoff: primitive quadruples, square products
/// removed.
pub fn count_n(table: &SquarefulTable, ymax: Option<u128>, remove_thin: bool) -> Result<CountResult> {
    count_fast(
        table,
        &CountFilters {
            primitive: true,
            exclude_square_y: remove_thin,
            ymax,
            ..Default::default()
        },
    )
}

/// M(B, D): primitive quadruples with |Y| >= D, square products included.
pub fn count_m(table: &SquarefulTable, ymin: u128) -> Result<CountResult> {
    count_fast(
        table,
        &CountFilters {
            primitive: true,
            ymin: Some(ymin),
            ..Default::default()
        },
    )
}

/// Counts M(B, D) for every D in `ds` from one pass: each recovered
/// primitive tuple credits every threshold at or below its |Y|.
pub fn count_m_sweep(table: &SquarefulTable, ds: &[u128]) -> Result<Vec<(u128, u64)>> {
    let entries = signed_entries_checked(table)?;
    let n = entries.len();
    let index = PairSumIndex::build(&entries, 0..n);
    let mut thresholds: Vec<u128> = ds.to_vec();
    thresholds.sort_unstable();
    let counts = (0..n)
        .into_par_iter()
        .map(|k1| {
            let mut local = vec![0u64; thresholds.len()];
            let e1 = entries[k1];
            let ub = entries.partition_point(|e| e.z <= -e1.z);
            for k2 in 0..ub {
                let e2 = entries[k2];
                let s12 = e1.z + e2.z;
                let base: u64 = if s12 < 0 { 2 } else { 1 };
                let g12 = gcd_u64(e1.z.unsigned_abs(), e2.z.unsigned_abs());
                let y12 = e1.y as i128 * e2.y as i128;
                for rec in index.range(-s12) {
                    let (i3, i4) = (rec.i as usize, rec.j as usize);
                    let e3 = entries[i3];
                    let e4 = entries[i4];
                    if g12 != 1 {
                        let g =
                            gcd_u64(gcd_u64(g12, e3.z.unsigned_abs()), e4.z.unsigned_abs());
                        if g != 1 {
                            continue;
                        }
                    }
                    let yabs = (y12 * e3.y as i128 * e4.y as i128).unsigned_abs();
                    let mult = base * if i3 == i4 { 1 } else { 2 };
                    let upto = thresholds.partition_point(|&d| d <= yabs);
                    for slot in local.iter_mut().take(upto) {
                        *slot += mult;
                    }
                }
            }
            local
        })
        .reduce(
            || vec![0u64; thresholds.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let lookup: std::collections::HashMap<u128, u64> =
        thresholds.iter().copied().zip(counts).collect();
    Ok(ds.iter().map(|&d| (d, lookup[&d])).collect())
}

/// N(X, Y): solutions of sum x_i^2 y_i^3 = 0 in the box |x_i| <= X_i,
/// |y_i| <= Y_i with y_i squarefree, all coordinates nonzero. Split into two
/// halves matched through a hash map; x-signs contribute a factor 2 per
/// coordinate since only x^2 enters.
pub fn count_boxes(xb: [u64; 4], yb: [u64; 4]) -> Result<CountResult> {
    let start = Instant::now();
    if xb.contains(&0) || yb.contains(&0) {
        return Err(Error::invalid("box bounds must be positive"));
    }
    let sqfree = crate::squareful::squarefree_sieve(*yb.iter().max().unwrap());
    let coord_values = |xmax: u64, ymax: u64| -> Vec<i128> {
        let mut vals = Vec::new();
        for y in 1..=ymax {
            if !sqfree[y as usize] {
                continue;
            }
            let y3 = (y as i128).pow(3);
            for x in 1..=xmax {
                let v = y3 * (x as i128) * (x as i128);
                vals.push(v);
                vals.push(-v);
            }
        }
        vals
    };
    let lists: Vec<Vec<i128>> = (0..4).map(|i| coord_values(xb[i], yb[i])).collect();
    let half1 = lists[0].len() as u128 * lists[1].len() as u128;
    let half2 = lists[2].len() as u128 * lists[3].len() as u128;
    if half1 + half2 > 2_000_000_000 {
        return Err(Error::budget("box count: search range too large"));
    }
    let mut map = std::collections::HashMap::<i128, u64>::new();
    for &v1 in &lists[0] {
        for &v2 in &lists[1] {
            *map.entry(v1 + v2).or_insert(0) += 1;
        }
    }
    let mut count: u64 = 0;
    for &v3 in &lists[2] {
        for &v4 in &lists[3] {
            if let Some(&c) = map.get(&-(v3 + v4)) {
                count += c;
            }
        }
    }
    // Each coordinate value stands for x and -x.
    count = count
        .checked_mul(16)
        .ok_or_else(|| Error::overflow("box count"))?;
    Ok(CountResult {
        count,
        algorithm: "split-pair-hash",
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// N_a(B): solutions of sum a_i x_i^2 = 0 with all x_i nonzero and
/// |a_i x_i^2| <= B. Loops over the first three coordinates (positive) and
/// solves for the fourth; signs contribute the factor 16.
pub fn count_quadric(a: &CoeffVector, bound: u64) -> Result<CountResult> {
    let start = Instant::now();
    if bound == 0 {
        return Err(Error::invalid("bound must be positive"));
    }
    let lim: Vec<u64> = a
        .a
        .iter()
        .map(|&ai| isqrt_u64(bound / ai.unsigned_abs().max(1)))
        .collect();
    let work = lim[0] as u128 * lim[1] as u128 * lim[2] as u128;
    if work > 4_000_000_000 {
        return Err(Error::budget("quadric count: search range too large"));
    }
    let a4 = a.a[3] as i128;
    let count: u64 = (1..=lim[0])
        .into_par_iter()
        .map(|x1| {
            let mut c = 0u64;
            let t1 = a.a[0] as i128 * (x1 as i128) * (x1 as i128);
            for x2 in 1..=lim[1] {
                let t2 = t1 + a.a[1] as i128 * (x2 as i128) * (x2 as i128);
                for x3 in 1..=lim[2] {
                    let t = t2 + a.a[2] as i128 * (x3 as i128) * (x3 as i128);
                    // a4 x4^2 = -t
                    if t == 0 || (-t).signum() != a4.signum() {
                        continue;
                    }
                    let q = -t / a4;
                    if -t % a4 != 0 {
                        continue;
                    }
                    if t.unsigned_abs() > bound as u128 {
                        continue;
                    }
                    let x4 = crate::arith::isqrt_u128(q as u128);
                    if x4 > 0 && (x4 * x4) as i128 == q {
                        c += 16;
                    }
                }
            }
            c
        })
        .sum();
    Ok(CountResult {
        count,
        algorithm: "triple-loop-solve",
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// N_y(B): solutions of sum y_i^3 x_i^2 = 0 with x in (Z\0)^4,
/// gcd(x_1 y_1, .., x_4 y_4) = 1 and |y_i^3 x_i^2| <= B.
pub fn fibre_count(y: &[i64; 4], bound: u64) -> Result<CountResult> {
    let start = Instant::now();
    for &v in y {
        if v == 0 || !crate::arith::factorize(v)?.is_squarefree() {
            return Err(Error::invalid("fibre: y must have squarefree nonzero coordinates"));
        }
    }
    let a: Vec<i128> = y.iter().map(|&v| (v as i128).pow(3)).collect();
    let lim: Vec<u64> = a
        .iter()
        .map(|&ai| isqrt_u64((bound as u128 / ai.unsigned_abs().max(1)) as u64))
        .collect();
    let work = lim[0] as u128 * lim[1] as u128 * lim[2] as u128;
    if work > 4_000_000_000 {
        return Err(Error::budget("fibre count: search range too large"));
    }
    let count: u64 = (1..=lim[0])
        .into_par_iter()
        .map(|x1| {
            let mut c = 0u64;
            let t1 = a[0] * (x1 as i128) * (x1 as i128);
            for x2 in 1..=lim[1] {
                let t2 = t1 + a[1] * (x2 as i128) * (x2 as i128);
                for x3 in 1..=lim[2] {
                    let t = t2 + a[2] * (x3 as i128) * (x3 as i128);
                    if t == 0 || (-t).signum() != a[3].signum() {
                        continue;
                    }
                    if -t % a[3] != 0 {
                        continue;
                    }
                    let q = -t / a[3];
                    if t.unsigned_abs() > bound as u128 {
                        continue;
                    }
                    let x4 = crate::arith::isqrt_u128(q as u128);
                    if x4 == 0 || (x4 * x4) as i128 != q {
                        continue;
                    }
                    let g = gcd4([
                        x1 * y[0].unsigned_abs(),
                        x2 * y[1].unsigned_abs(),
                        x3 * y[2].unsigned_abs(),
                        x4 as u64 * y[3].unsigned_abs(),
                    ]);
                    if g == 1 {
                        c += 16;
                    }
                }
            }
            c
        })
        .sum();
    Ok(CountResult {
        count,
        algorithm: "triple-loop-solve",
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// The positive-orthant divisible fibre count: x in N^4 with s_i | x_i and
/// s0 | x_i, sum y_i^3 x_i^2 = 0, x_i <= sqrt(B / |y_i|^3). No sign factor.
pub fn fibre_count_divisible(
    y: &[i64; 4],
    bound: u64,
    s: &[u64; 4],
    s0: u64,
) -> Result<u64> {
    let a: Vec<i128> = y.iter().map(|&v| (v as i128).pow(3)).collect();
    let step: Vec<u64> = (0..4)
        .map(|i| s[i] / gcd_u64(s[i], s0) * s0)
        .collect();
    let lim: Vec<u64> = a
        .iter()
        .map(|&ai| isqrt_u64((bound as u128 / ai.unsigned_abs().max(1)) as u64))
        .collect();
    let mut count = 0u64;
    let mut x1 = step[0];
    while x1 <= lim[0] {
        let t1 = a[0] * (x1 as i128) * (x1 as i128);
        let mut x2 = step[1];
        while x2 <= lim[1] {
            let t2 = t1 + a[1] * (x2 as i128) * (x2 as i128);
            let mut x3 = step[2];
            while x3 <= lim[2] {
                let t = t2 + a[2] * (x3 as i128) * (x3 as i128);
                x3 += step[2];
                if t == 0 || (-t).signum() != a[3].signum() || -t % a[3] != 0 {
                    continue;
                }
                if t.unsigned_abs() > bound as u128 {
                    continue;
                }
                let q = -t / a[3];
                let x4 = crate::arith::isqrt_u128(q as u128);
                if x4 > 0 && (x4 * x4) as i128 == q && x4 as u64 % step[3] == 0 {
                    count += 1;
                }
            }
            x2 += step[1];
        }
        x1 += step[0];
    }
    Ok(count)
}

/// #N(B; r, s, s0): quadruples (not necessarily primitive) with nonsquare
/// y-product, |Y| <= D, and the coordinatewise divisibility conditions.
pub fn count_script_n(
    table: &SquarefulTable,
    ymax: u128,
    r: [u64; 4],
    s: [u64; 4],
    s0: u64,
) -> Result<CountResult> {
    count_fast(
        table,
        &CountFilters {
            exclude_square_y: true,
            ymax: Some(ymax),
            rdiv: Some(r),
            sdiv: Some(s),
            s0: Some(s0),
            ..Default::default()
        },
    )
}

/// Outcome of the inclusion-exclusion identity check.
#[derive(Clone, Debug, Serialize)]
pub struct InclusionExclusionCheck {
    pub bound: u64,
    pub ymax: u128,
    pub lhs: u64,
    pub rhs: i64,
    pub equal: bool,
    pub patterns: usize,
}

const VERIFY_BOUND_LIMIT: u64 = 100_000;

/// Verifies that the primitive count equals the omega-weighted sum of the
/// divisibility-constrained counts. The left side filters on gcd = 1; the
/// right side enumerates every supported (r, s) pattern, counts solutions
/// satisfying the divisibility conditions, and weights the s0-divisor counts
/// by the Mobius function.
pub fn verify_inclusion_exclusion(
    table: &SquarefulTable,
    ymax: u128,
) -> Result<InclusionExclusionCheck> {
    if table.bound > VERIFY_BOUND_LIMIT {
        return Err(Error::budget(format!(
            "inclusion-exclusion verification supports bounds up to {}",
            VERIFY_BOUND_LIMIT
        )));
    }
    let entries = signed_entries_checked(table)?;
    let sols = mitm_collect(
        &entries,
        &CountFilters {
            exclude_square_y: true,
            ymax: Some(ymax),
            ..Default::default()
        },
    )?;
    let lhs = sols
        .iter()
        .filter(|t| {
            gcd4([
                t[0].z.unsigned_abs(),
                t[1].z.unsigned_abs(),
                t[2].z.unsigned_abs(),
                t[3].z.unsigned_abs(),
            ]) == 1
        })
        .count() as u64;

    // Supported (r, s) patterns: per prime p, every coordinate carries p in
    // r or s (r only where p | y is possible, i.e. r_i <= ymax overall), not
    // all four in s. R = prod r_i divides the y-product, so R <= ymax.
    let sqrt_b = isqrt_u64(table.bound);
    let primes = crate::arith::primes_upto(ymax.min(u64::MAX as u128) as u64);
    let mut combos: Vec<([u64; 4], [u64; 4], i8, u128)> = vec![([1; 4], [1; 4], 1, 1)];
    for &p in &primes {
        let base = std::mem::take(&mut combos);
        for (r, s, sign, rprod) in base {
            combos.push((r, s, sign, rprod));
            for pat in prime_patterns() {
                let new_rprod = rprod * (p as u128).pow(pat.r_mask.count_ones());
                if new_rprod > ymax {
                    continue;
                }
                let mut r2 = r;
                let mut s2 = s;
                let mut ok = true;
                for i in 0..4 {
                    if pat.r_mask & (1 << i) != 0 {
                        r2[i] *= p;
                    }
                    if pat.s_mask & (1 << i) != 0 {
                        s2[i] *= p;
                        if s2[i] > sqrt_b {
                            ok = false;
                        }
                    }
                }
                if ok {
                    combos.push((r2, s2, sign * pat.sign, new_rprod));
                }
            }
        }
    }

    let mu_small: Vec<i8> = (0..=sqrt_b)
        .map(|v| {
            if v == 0 {
                0
            } else {
                crate::arith::mobius(v).unwrap_or(0)
            }
        })
        .collect();
    let rhs: i128 = combos
        .par_iter()
        .map(|&(r, s, sign, _)| {
            let mut acc: i128 = 0;
            for t in &sols {
                if (0..4).any(|i| t[i].y.unsigned_abs() % r[i] != 0 || t[i].x % s[i] != 0) {
                    continue;
                }
                // Weighted count over all squarefree s0 dividing gcd(x):
                // sum of mu(s0) over s0 | gcd(x_1..x_4).
                let g = gcd4([t[0].x, t[1].x, t[2].x, t[3].x]);
                let mut mu_sum: i64 = 0;
                let mut d = 1u64;
                while d * d <= g {
                    if g % d == 0 {
                        mu_sum += mu_small[d as usize] as i64;
                        let e = g / d;
                        if e != d {
                            mu_sum += mu_small[e as usize] as i64;
                        }
                    }
                    d += 1;
                }
                acc += mu_sum as i128;
            }
            sign as i128 * acc
        })
        .sum();

    let rhs = i64::try_from(rhs).map_err(|_| Error::overflow("inclusion-exclusion sum"))?;
    Ok(InclusionExclusionCheck {
        bound: table.bound,
        ymax,
        lhs,
        rhs,
        equal: lhs as i64 == rhs,
        patterns: combos.len(),
    })
}
