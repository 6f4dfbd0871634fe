//! Acceptance suite: every release-gating criterion with its tolerance
//! pinned in code. Each test prints one pass/fail line; criterion 13 reruns
//! the payload computations of criteria 1-12 on one- and eight-thread pools
//! and requires byte-identical JSON.

use serde_json::{json, Value};
use squareful::arith::{gcd_u64, is_square_i128, jacobi, CoeffVector};
use squareful::counting::{
    count_m_sweep, count_n, count_nk_naive, count_quadric, fibre_count, verify_inclusion_exclusion,
    CountFilters,
};
use squareful::expsums::{s_q_direct, s_q_fast, singular_series, SeriesMethod};
use squareful::padic::{euler_product_density, inner_sum, local_density};
use squareful::rational::Rat;
use squareful::squareful::{squarefree_sieve, SquarefulTable};
use squareful::Result;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

const MC_SEED: u64 = 12345;

fn table(bound: u64) -> Arc<SquarefulTable> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<SquarefulTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().unwrap().get(&bound) {
        return t.clone();
    }
    let t = Arc::new(SquarefulTable::build(bound).expect("table"));
    cache.lock().unwrap().insert(bound, t.clone());
    t
}

struct Outcome {
    pass: bool,
    detail: String,
    payload: Value,
}

fn report(id: u32, name: &str, out: &Outcome) {
    println!(
        "criterion {:02} {} — {}: {}",
        id,
        if out.pass { "PASS" } else { "FAIL" },
        name,
        out.detail
    );
}

// 1. Meet-in-the-middle equals naive enumeration; fast path under a second.
fn criterion_1() -> Result<Outcome> {
    let filters = CountFilters {
        primitive: true,
        exclude_square_y: true,
        ..Default::default()
    };
    let mut rows = Vec::new();
    let mut pass = true;
    let mut fast_secs_at_1e4 = 0.0;
    for b in [100u64, 1_000, 5_000, 10_000] {
        let t = table(b);
        let fast = squareful::counting::count_fast(&t, &filters)?;
        let naive = count_nk_naive(&t, 4, &filters)?;
        pass &= fast.count == naive.count;
        if b == 10_000 {
            fast_secs_at_1e4 = fast.seconds;
            pass &= fast.seconds < 1.0;
        }
        rows.push(json!({"bound": b, "fast": fast.count, "naive": naive.count}));
    }
    Ok(Outcome {
        pass,
        detail: format!("four bounds, fast path at 1e4 took {:.3}s", fast_secs_at_1e4),
        payload: json!(rows),
    })
}

// 2. Pinned small counts.
fn criterion_2() -> Result<Outcome> {
    let t10 = table(10);
    let n10 = count_n(&t10, None, true)?.count;
    let sweep = count_m_sweep(&t10, &[1, 2, 5])?;
    let n3 = count_nk_naive(
        &table(9),
        3,
        &CountFilters {
            primitive: true,
            ..Default::default()
        },
    )?
    .count;
    let pass = n10 == 24
        && sweep == vec![(1, 150), (2, 48), (5, 0)]
        && n3 == 12;
    Ok(Outcome {
        pass,
        detail: format!(
            "N(10)={} M(10,1)={} M(10,2)={} M(10,5)={} N3(9)={}",
            n10, sweep[0].1, sweep[1].1, sweep[2].1, n3
        ),
        payload: json!({"n10": n10, "m": sweep, "n3_9": n3}),
    })
}

// 3. Inclusion-exclusion identity, exactly, over the (B, D) grid.
fn criterion_3() -> Result<Outcome> {
    let mut pass = true;
    let mut rows = Vec::new();
    for b in [5u64, 10, 100, 1_000, 10_000] {
        for d in [1u128, 5, 10, 20] {
            let check = verify_inclusion_exclusion(&table(b), d)?;
            pass &= check.equal;
            rows.push(json!({
                "bound": b, "ymax": d, "lhs": check.lhs, "rhs": check.rhs,
                "patterns": check.patterns
            }));
        }
    }
    Ok(Outcome {
        pass,
        detail: "20 (B,D) pairs, exact equality".into(),
        payload: json!(rows),
    })
}

fn fibre_sum(bound: u64) -> Result<u64> {
    let mut ymax = 1u64;
    while (ymax + 1).pow(3) <= bound {
        ymax += 1;
    }
    let sqfree = squarefree_sieve(ymax);
    let mut coords: Vec<i64> = Vec::new();
    for m in 1..=ymax {
        if sqfree[m as usize] {
            coords.push(m as i64);
            coords.push(-(m as i64));
        }
    }
    let mut total = 0u64;
    for &y1 in &coords {
        for &y2 in &coords {
            for &y3 in &coords {
                for &y4 in &coords {
                    let y = [y1, y2, y3, y4];
                    let prod: i128 = y.iter().map(|&v| v as i128).product();
                    if is_square_i128(prod) {
                        continue;
                    }
                    total += fibre_count(&y, bound)?.count;
                }
            }
        }
    }
    Ok(total)
}

// 4. Fibre identity: 16 N(B) equals the sum of fibre counts, exactly.
fn criterion_4() -> Result<Outcome> {
    let mut pass = true;
    let mut rows = Vec::new();
    for b in [10u64, 100, 1_000] {
        let n = count_n(&table(b), None, true)?.count;
        let total = fibre_sum(b)?;
        pass &= 16 * n == total;
        if b == 10 {
            pass &= total == 384;
        }
        rows.push(json!({"bound": b, "lhs_16n": 16 * n, "rhs": total}));
    }
    Ok(Outcome {
        pass,
        detail: "B in {10, 100, 1000}; at B=10 both sides 384".into(),
        payload: json!(rows),
    })
}

// 5. Closed form S_q(0) = (A/q) phi(q) q^2 for q coprime to 2A.
fn criterion_5() -> Result<Outcome> {
    let mut pass = true;
    let mut checked = 0u32;
    for a in [[1i64, 1, 1, -1], [1, 1, 1, -2], [1, 2, 3, -5]] {
        let cv = CoeffVector::new(a)?;
        let big_a = cv.product as i64;
        for q in 1..=500u64 {
            if q % 2 == 0 || gcd_u64(q, big_a.unsigned_abs()) != 1 {
                continue;
            }
            let phi = {
                let f = squareful::arith::factorize(q as i64)?;
                let mut phi = q;
                for &(p, _) in &f.factors {
                    phi = phi / p * (p - 1);
                }
                phi
            };
            let expect = jacobi(big_a, q)? as i128 * phi as i128 * (q as i128).pow(2);
            let got = s_q_fast(&cv, q)?.exact;
            pass &= got == Some(expect);
            checked += 1;
        }
    }
    Ok(Outcome {
        pass,
        detail: format!("{} (a, q) pairs, exact integer match", checked),
        payload: json!({"pairs": checked}),
    })
}

// 6. Multiplicativity at c = 0 over coprime pairs up to 60. The product
// side uses the direct double sums, the composite side the exact
// multiplicative path. Error is measured relative to the natural magnitude
// of the sums (|S_q| is of size up to q^3), which also covers the pairs
// where the exact value is zero and a ratio would be ill-posed.
fn criterion_6() -> Result<Outcome> {
    let cv = CoeffVector::new([1, 1, 1, -1])?;
    let direct: Vec<f64> = (1..=60u64)
        .map(|q| s_q_direct(&cv, [0; 4], q).map(|v| v.value.re))
        .collect::<Result<_>>()?;
    let mut max_rel = 0.0f64;
    let mut pairs = 0;
    for q1 in 1..=60u64 {
        for q2 in q1..=60u64 {
            if gcd_u64(q1, q2) != 1 {
                continue;
            }
            pairs += 1;
            let lhs = s_q_fast(&cv, q1 * q2)?.exact.unwrap() as f64;
            let rhs = direct[q1 as usize - 1] * direct[q2 as usize - 1];
            let scale = lhs.abs().max(((q1 * q2) as f64).powf(2.5));
            max_rel = max_rel.max((lhs - rhs).abs() / scale);
        }
    }
    Ok(Outcome {
        pass: max_rel <= 1e-8,
        detail: format!("{} coprime pairs, max relative error {:.2e}", pairs, max_rel),
        payload: json!({"pairs": pairs, "max_rel_err": max_rel}),
    })
}

// 7. Singular series cross-method agreement against the L-value reference.
fn criterion_7() -> Result<Outcome> {
    let cv = CoeffVector::new([1, 1, 1, -1])?;
    let target = (PI / 4.0) / 0.915_965_594_2;
    let euler = singular_series(&cv, &SeriesMethod::EulerProduct { cutoff: 100_000 }, 1e-6)?;
    let hybrid = singular_series(&cv, &SeriesMethod::LHybrid, 1e-9)?;
    let e_err = (euler.good_factor - target).abs();
    let h_err = (hybrid.good_factor - target).abs();
    let cross = (euler.value - hybrid.value).abs();
    let pass = e_err <= 1e-3 && h_err <= 1e-6 && cross <= 1e-3;
    Ok(Outcome {
        pass,
        detail: format!(
            "odd part: euler err {:.2e}, hybrid err {:.2e}, cross {:.2e}",
            e_err, h_err, cross
        ),
        payload: json!({
            "euler": euler.value, "hybrid": hybrid.value,
            "euler_good": euler.good_factor, "hybrid_good": hybrid.good_factor
        }),
    })
}

// 8. Local densities: pinned value, closed-form sweep, and the equality of
// the two routes to the fibre constant; under a minute.
fn criterion_8() -> Result<Outcome> {
    let start = Instant::now();
    let d = local_density(&[1, 1, 1, -1], 3, 1e-9)?;
    let mut pass = d.value == Rat::new(20, 27)? && d.n_stable == 1;

    // Closed-form equality at p <= 50 away from 2Y for all |y_i| <= 3
    // (local_density verifies the closed form internally and errors on any
    // mismatch; n_stable == 1 is asserted here).
    let mut sweep = 0u32;
    let coords = [1i64, -1, 2, -2, 3, -3];
    let mut seen = std::collections::HashSet::new();
    for &y1 in &coords {
        for &y2 in &coords {
            for &y3 in &coords {
                for &y4 in &coords {
                    let y = [y1, y2, y3, y4];
                    let mut k = y;
                    k.sort_unstable();
                    if !seen.insert(k) {
                        continue;
                    }
                    let yprod: i128 = y.iter().map(|&v| v as i128).product();
                    for p in [3u64, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
                        if yprod.unsigned_abs() % p as u128 == 0 {
                            continue;
                        }
                        let dd = local_density(&y, p, 1e-9)?;
                        pass &= dd.n_stable == 1;
                        sweep += 1;
                    }
                }
            }
        }
    }

    // Equality of the weighted singular-series sum and the density product.
    let classes = squareful::constant::fibre_classes(30);
    let mut max_diff = 0.0f64;
    for y in &classes {
        let lhs = inner_sum(y, 1e-4, &SeriesMethod::LHybrid)?;
        let rhs = euler_product_density(y, 1e-9)?;
        max_diff = max_diff.max((lhs.value - rhs.value).abs());
    }
    pass &= max_diff <= 1e-3;
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 60.0;
    Ok(Outcome {
        pass,
        detail: format!(
            "20/27 exact; {} closed-form checks; {} classes, max |inner - euler| {:.2e}; {:.1}s",
            sweep,
            classes.len(),
            max_diff,
            secs
        ),
        payload: json!({
            "pinned": d.value.to_string(), "closed_form_checks": sweep,
            "classes": classes.len(), "max_diff": max_diff
        }),
    })
}

// 9. Quadric point count against its predicted constant at desk scale.
fn criterion_9() -> Result<Outcome> {
    let cv = CoeffVector::new([1, 1, 1, -2])?;
    let series = singular_series(&cv, &SeriesMethod::LHybrid, 1e-9)?;
    let sigma = squareful::archimedean::sigma_infinity(&[1, 1, 1, -1], 1e-9)?;
    let deviation = |b: u64| -> Result<f64> {
        let n = count_quadric(&cv, b)?.count;
        let predicted = series.value * sigma.value * b as f64 / 2f64.sqrt();
        Ok((n as f64 / predicted - 1.0).abs())
    };
    let dev3 = deviation(1_000)?;
    let dev5 = deviation(100_000)?;
    let pass = dev5 <= 0.10 && dev5 < dev3;
    Ok(Outcome {
        pass,
        detail: format!("deviation 1e3: {:.4}, 1e5: {:.4}", dev3, dev5),
        payload: json!({"dev_1e3": dev3, "dev_1e5": dev5}),
    })
}

// 10. Archimedean density: exact zeros, the (3,1) reference value,
// invariances, and quadrature/Monte Carlo agreement.
fn criterion_10() -> Result<Outcome> {
    let mut pass = true;
    let zero = squareful::archimedean::sigma_infinity(&[1, 1, 1, 1], 1e-8)?;
    pass &= zero.value == 0.0;
    let q31 = squareful::archimedean::sigma_infinity(&[1, 1, 1, -1], 1e-8)?;
    pass &= (q31.value - 2.0 * PI).abs() <= 1e-3;
    let mut inv_err = 0.0f64;
    let base22 = squareful::archimedean::sigma_infinity(&[1, 1, -1, -1], 1e-8)?;
    for eps in [
        [1i8, -1, 1, -1],
        [-1, 1, -1, 1],
        [-1, -1, 1, 1],
        [1, -1, -1, 1],
    ] {
        let v = squareful::archimedean::sigma_infinity(&eps, 1e-8)?;
        inv_err = inv_err.max((v.value - base22.value).abs());
    }
    let neg31 = squareful::archimedean::sigma_infinity(&[-1, -1, -1, 1], 1e-8)?;
    inv_err = inv_err.max((neg31.value - q31.value).abs());
    pass &= inv_err <= 1e-6;
    let mut mc_rows = Vec::new();
    for eps in [[1i8, 1, 1, -1], [1, 1, -1, -1]] {
        let q = squareful::archimedean::sigma_infinity(&eps, 1e-8)?;
        let m = squareful::archimedean::sigma_infinity_mc(&eps, MC_SEED, 4_000_000)?;
        pass &= (q.value - m.value).abs() <= q.error_estimate + m.error_estimate;
        mc_rows.push(json!({
            "eps": eps, "quadrature": q.value, "mc": m.value,
            "combined_err": q.error_estimate + m.error_estimate
        }));
    }
    Ok(Outcome {
        pass,
        detail: format!(
            "2pi err {:.2e}, invariance err {:.2e}, MC within combined error",
            (q31.value - 2.0 * PI).abs(),
            inv_err
        ),
        payload: json!({"q31": q31.value, "q22": base22.value, "mc": mc_rows}),
    })
}

// 11. End-to-end comparison at the pinned cutoff D = 50.
fn criterion_11() -> Result<Outcome> {
    let start = Instant::now();
    let c = squareful::constant::leading_constant(50, 1e-3)?;
    let mut ratios = Vec::new();
    for b in [10_000u64, 100_000, 1_000_000] {
        let n = count_n(&table(b), None, true)?.count;
        ratios.push((b, n, n as f64 / (c.value * b as f64)));
    }
    let final_ok = (ratios[2].2 - 1.0).abs() <= 0.25;
    let monotone = (ratios[0].2 - 1.0).abs() >= (ratios[1].2 - 1.0).abs()
        && (ratios[1].2 - 1.0).abs() >= (ratios[2].2 - 1.0).abs();
    let secs = start.elapsed().as_secs_f64();
    let pass = final_ok && monotone && secs < 600.0;
    Ok(Outcome {
        pass,
        detail: format!(
            "c(50)={:.4}; ratios {:.4}, {:.4}, {:.4}; {:.0}s",
            c.value, ratios[0].2, ratios[1].2, ratios[2].2, secs
        ),
        payload: json!({
            "c50": c.value,
            "rows": ratios.iter().map(|&(b, n, r)| json!({"bound": b, "observed": n, "ratio": r})).collect::<Vec<_>>()
        }),
    })
}

// 12. Tail counts nonincreasing in the cutoff.
fn criterion_12() -> Result<Outcome> {
    let ds: Vec<u128> = (0..=10).map(|k| 1u128 << k).collect();
    let rows = count_m_sweep(&table(1_000_000), &ds)?;
    let pass = rows.windows(2).all(|w| w[0].1 >= w[1].1);
    Ok(Outcome {
        pass,
        detail: format!(
            "M(1e6, D) over D = 1..1024: {} .. {}",
            rows.first().unwrap().1,
            rows.last().unwrap().1
        ),
        payload: json!(rows),
    })
}

fn run_payloads() -> Result<Vec<Value>> {
    let runners: Vec<fn() -> Result<Outcome>> = vec![
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
        criterion_11,
        criterion_12,
    ];
    runners.into_iter().map(|f| Ok(f()?.payload)).collect()
}

macro_rules! criterion_test {
    ($test:ident, $id:expr, $name:expr, $runner:ident) => {
        #[test]
        fn $test() {
            let out = $runner().expect("criterion computation failed");
            report($id, $name, &out);
            assert!(out.pass, "criterion {} failed: {}", $id, out.detail);
        }
    };
}

criterion_test!(acceptance_01_oracle_equivalence, 1, "fast count equals naive enumeration", criterion_1);
criterion_test!(acceptance_02_pinned_small_counts, 2, "pinned small counts", criterion_2);
criterion_test!(acceptance_03_inclusion_exclusion, 3, "inclusion-exclusion identity", criterion_3);
criterion_test!(acceptance_04_fibre_identity, 4, "fibre decomposition identity", criterion_4);
criterion_test!(acceptance_05_closed_form, 5, "exponential-sum closed form", criterion_5);
criterion_test!(acceptance_06_multiplicativity, 6, "multiplicativity at c = 0", criterion_6);
criterion_test!(acceptance_07_singular_series, 7, "singular series cross-method", criterion_7);
criterion_test!(acceptance_08_local_densities, 8, "local densities", criterion_8);
criterion_test!(acceptance_09_quadric_prediction, 9, "quadric count vs predicted constant", criterion_9);
criterion_test!(acceptance_10_archimedean, 10, "archimedean density", criterion_10);
criterion_test!(acceptance_11_end_to_end, 11, "end-to-end constant vs count", criterion_11);
criterion_test!(acceptance_12_tail_monotone, 12, "tail counts nonincreasing", criterion_12);

#[test]
fn acceptance_13_determinism() {
    let run_in_pool = |threads: usize| -> Vec<Value> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("pool");
        pool.install(|| run_payloads().expect("payload run"))
    };
    let one = serde_json::to_string(&run_in_pool(1)).unwrap();
    let eight = serde_json::to_string(&run_in_pool(8)).unwrap();
    let out = Outcome {
        pass: one == eight,
        detail: format!("{} payload bytes per run", one.len()),
        payload: Value::Null,
    };
    report(13, "byte-identical across thread counts", &out);
    assert!(out.pass, "criterion 13 failed: outputs differ between 1 and 8 threads");
}
