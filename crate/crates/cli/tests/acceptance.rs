//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Each criterion checks library results against oracles
//! computed here from raw matrix entries or sequence values.

// `!(x <= tol)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::time::Instant;

use fpu_cli::format::serialize_operator;
use fpu_cli::run_command;
use fpu_core::gnvw::{self, IndexReport, SynthParams, INDEX_TOL};
use fpu_core::{Complex64, EventuallyPeriodicSeq as Seq, Operator};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("shift index", shift_index),
        ("integrality", integrality),
        ("additivity", additivity),
        ("trace identity", trace_identity),
        ("factorization", factorization),
        ("end-periodic splitting", end_periodic_splitting),
        ("divisibility", divisibility),
        ("torsion-freeness", torsion_freeness),
        ("mod-3 reduction", mod3_reduction),
        ("kernel and image of alpha", alpha_kernel_image),
        ("propagation subadditivity", subadditivity),
        ("cli round-trip and determinism", cli_golden),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.2}s]", n + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{secs:.2}s]", n + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- oracles

/// `‖U_{-+}‖² - ‖U_{+-}‖²` summed entry by entry over a box that contains
/// every nonzero corner entry.
fn oracle_index(u: &Operator) -> f64 {
    let w = (u.radius() + u.period() + 2 * u.band() + 2) as i64;
    let mut acc = 0.0;
    for i in -w..w {
        for j in -w..w {
            let m = u.entry(i, j).norm_sqr();
            if i < 0 && j >= 0 {
                acc += m;
            } else if i >= 0 && j < 0 {
                acc -= m;
            }
        }
    }
    acc
}

fn oracle_propagation(u: &Operator, tol: f64) -> usize {
    let w = (u.radius() + u.period() + u.band() + 2) as i64;
    let b = u.band() as i64;
    let mut best = 0;
    for i in -w..w {
        for j in i - b..=i + b {
            if u.entry(i, j).norm() > tol {
                best = best.max((i - j).unsigned_abs() as usize);
            }
        }
    }
    best
}

/// Max `|(AB)_{ij} - C_{ij}|` with the product formed entry by entry.
fn oracle_product_error(a: &Operator, b: &Operator, c: &Operator) -> f64 {
    let reach = (a.band() + b.band()) as i64;
    let w = (a.radius().max(b.radius()).max(c.radius()) + 2 * (a.period() * b.period()) + reach as usize) as i64;
    let la = a.band() as i64;
    let mut worst = 0.0f64;
    for i in -w..w {
        for j in i - reach..=i + reach {
            let mut z = Complex64::new(0.0, 0.0);
            for k in i - la..=i + la {
                z += a.entry(i, k) * b.entry(k, j);
            }
            worst = worst.max((z - c.entry(i, j)).norm());
        }
    }
    worst
}

/// Largest entry coupling two different blocks of the grid `k + size·Z`.
fn oracle_off_block(x: &Operator, size: i64, k: i64) -> f64 {
    let w = x.radius() as i64 + 3 * size + x.period() as i64;
    let b = x.band() as i64;
    let mut worst = 0.0f64;
    for i in -w..w {
        for j in i - b..=i + b {
            if (i - k).div_euclid(size) != (j - k).div_euclid(size) {
                worst = worst.max(x.entry(i, j).norm());
            }
        }
    }
    worst
}

fn random_params(rng: &mut ChaCha8Rng) -> SynthParams {
    SynthParams {
        target_index: rng.random_range(-3..=3),
        period: rng.random_range(1..=4),
        block_size: rng.random_range(1..=4),
        patch_blocks: rng.random_range(0..=2),
        seed: rng.random(),
    }
}

fn random_seq(rng: &mut ChaCha8Rng) -> Seq {
    let mut vals = |lo: usize, hi: usize| -> Vec<i64> {
        let n = rng.random_range(lo..=hi);
        (0..n).map(|_| rng.random_range(-9..=9)).collect()
    };
    let left = vals(1, 4);
    let core = vals(0, 6);
    let right = vals(1, 4);
    let offset = rng.random_range(-6..=6);
    Seq::from_i64(&left, offset, &core, &right).unwrap()
}

/// Positions covering the non-periodic part plus several tail periods.
fn window(seqs: &[&Seq]) -> std::ops::Range<i64> {
    let lo = seqs.iter().map(|s| s.check_window().0).min().unwrap();
    let hi = seqs.iter().map(|s| s.check_window().1).max().unwrap();
    let pad = hi - lo;
    (lo - pad)..(hi + pad)
}

/// Membership decided from partial sums alone: the preimage of `a` under
/// `1 - S` is forced up to a constant, and it is bounded iff it returns to
/// the same value one full tail period later, far out on both sides.
fn oracle_member(a: &Seq) -> bool {
    let (lo, hi) = a.check_window();
    let p = (a.left_period().len() * a.right_period().len()) as i64;
    let far_r = hi.max(0) + 4 * (hi - lo) + p;
    let far_l = lo.min(0) - 4 * (hi - lo) - p;
    let right: BigInt = (far_r..far_r + p).map(|k| a.eval(k)).sum();
    let left: BigInt = (far_l - p..far_l).map(|k| a.eval(k)).sum();
    right == BigInt::from(0) && left == BigInt::from(0)
}

// --------------------------------------------------------------- criteria

fn shift_index() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for k in -8i64..=8 {
        let path = dir.path().join(format!("s{k}.op"));
        std::fs::write(&path, serialize_operator(&Operator::shift(k))).map_err(|e| e.to_string())?;
        let r = run_command(&["op", "index", path.to_str().unwrap(), "--porcelain"]);
        ensure!(r.exit_code == 0, "S^{k}: exit {} ({})", r.exit_code, r.stderr.trim());
        let field = |key: &str| -> Option<String> {
            r.stdout
                .lines()
                .find_map(|l| l.strip_prefix(key).map(|v| v.trim().to_string()))
        };
        let index: i64 = field("index ").and_then(|v| v.parse().ok()).ok_or("no index line")?;
        let deviation: f64 = field("deviation ").and_then(|v| v.parse().ok()).ok_or("no deviation line")?;
        ensure!(index == k, "S^{k}: index {index}");
        ensure!(deviation <= 1e-12, "S^{k}: deviation {deviation:e}");
        ensure!(oracle_index(&Operator::shift(k)) == k as f64, "S^{k}: oracle disagrees");
    }
    let s = run_command(&["op", "index", "tests/fixtures/shift.op"]);
    ensure!(s.stdout.starts_with("index 1\n"), "op index shift.op printed {:?}", s.stdout);
    Ok("op index returns k exactly for S^k, k in [-8, 8]".into())
}

fn integrality_reports() -> Result<Vec<(SynthParams, Operator, IndexReport)>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1d3);
    (0..200)
        .map(|_| {
            let p = random_params(&mut rng);
            let u = gnvw::synth_random(p).map_err(|e| e.to_string())?;
            let r = gnvw::index(&u, INDEX_TOL).map_err(|e| format!("{p:?}: {e}"))?;
            Ok((p, u, r))
        })
        .collect()
}

fn integrality() -> Outcome {
    let mut worst = 0.0f64;
    for (p, u, r) in integrality_reports()? {
        ensure!(u.unitarity_residual() <= 1e-9, "{p:?}: not unitary");
        ensure!(r.deviation <= 1e-8, "{p:?}: deviation {:e}", r.deviation);
        ensure!(r.rounded == p.target_index, "{p:?}: index {} expected {}", r.rounded, p.target_index);
        let oracle = oracle_index(&u);
        ensure!((oracle - r.raw).abs() <= 1e-10, "{p:?}: raw {} vs oracle {oracle}", r.raw);
        worst = worst.max(r.deviation);
    }
    Ok(format!("200 operators, max deviation {worst:.1e}"))
}

fn random_pairs() -> Vec<(Operator, Operator)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xadd);
    (0..100)
        .map(|_| {
            let u = gnvw::synth_random(random_params(&mut rng)).unwrap();
            let v = gnvw::synth_random(random_params(&mut rng)).unwrap();
            (u, v)
        })
        .collect()
}

fn additivity() -> Outcome {
    for (n, (u, v)) in random_pairs().iter().enumerate() {
        let iu = gnvw::index(u, INDEX_TOL).map_err(|e| e.to_string())?.rounded;
        let iv = gnvw::index(v, INDEX_TOL).map_err(|e| e.to_string())?.rounded;
        let uv = u.multiply(v);
        let r = gnvw::index(&uv, INDEX_TOL).map_err(|e| format!("pair {n}: {e}"))?;
        ensure!(r.rounded == iu + iv, "pair {n}: ind(UV) = {} but {iu} + {iv}", r.rounded);
        ensure!(oracle_index(&uv).round() as i64 == iu + iv, "pair {n}: oracle disagrees");
    }
    Ok("100 pairs, ind(UV) = ind(U) + ind(V) exactly".into())
}

fn trace_identity() -> Outcome {
    let mut reports: Vec<IndexReport> = integrality_reports()?.into_iter().map(|(_, _, r)| r).collect();
    for (u, v) in random_pairs() {
        for x in [&u, &v, &u.multiply(&v)] {
            reports.push(gnvw::index(x, INDEX_TOL).map_err(|e| e.to_string())?);
        }
    }
    for k in -8..=8 {
        reports.push(gnvw::index(&Operator::shift(k), INDEX_TOL).map_err(|e| e.to_string())?);
    }
    let mut worst = 0.0f64;
    for r in &reports {
        let gap = (r.trace_check - r.raw).abs();
        ensure!(gap <= 1e-8, "trace check {} vs raw {}", r.trace_check, r.raw);
        worst = worst.max(gap);
    }
    Ok(format!("{} reports, max |traceCheck - raw| {worst:.1e}", reports.len()))
}

fn factorization() -> Outcome {
    // (period, block) pairs whose synthesized operators have band <= 3 and
    // period <= 4.
    let shapes = [(1, 1), (2, 1), (3, 1), (4, 1), (1, 2), (2, 2), (4, 2)];
    let mut rng = ChaCha8Rng::seed_from_u64(0xdec);
    let (mut worst_res, mut worst_leak, mut worst_unit) = (0.0f64, 0.0f64, 0.0f64);
    for n in 0..50 {
        let (period, block_size) = shapes[n % shapes.len()];
        let p = SynthParams {
            target_index: 0,
            period,
            block_size,
            patch_blocks: rng.random_range(0..=1),
            seed: rng.random(),
        };
        let u = gnvw::synth_random(p).map_err(|e| e.to_string())?;
        ensure!(u.band() <= 3 && u.period() <= 4, "{p:?}: band {} period {}", u.band(), u.period());
        let d = gnvw::decompose(&u, 1e-9).map_err(|e| format!("{p:?}: {e}"))?;
        ensure!(d.residual <= 1e-8, "{p:?}: residual {:e}", d.residual);
        ensure!(d.block_leakage <= 1e-9, "{p:?}: leakage {:e}", d.block_leakage);
        ensure!(d.v_unitarity <= 1e-9 && d.w_unitarity <= 1e-9, "{p:?}: factor unitarity");
        let size = d.block_size as i64;
        let product = oracle_product_error(&d.v, &d.w, &u);
        ensure!(product <= 1e-8, "{p:?}: V·W differs from U by {product:e}");
        let off = oracle_off_block(&d.v, size, 0).max(oracle_off_block(&d.w, size, -size / 2));
        ensure!(off == 0.0, "{p:?}: factor entry {off:e} outside its block pattern");
        ensure!(d.v.unitarity_residual() <= 1e-9 && d.w.unitarity_residual() <= 1e-9, "{p:?}: oracle unitarity");
        worst_res = worst_res.max(d.residual.max(product));
        worst_leak = worst_leak.max(d.block_leakage);
        worst_unit = worst_unit.max(d.v_unitarity.max(d.w_unitarity));
    }
    match gnvw::decompose(&Operator::shift(1), 1e-9) {
        Err(e) if e.to_string().contains("nonzero index") => {}
        other => return Err(format!("decompose(S) returned {other:?}")),
    }
    Ok(format!(
        "50 operators, residual {worst_res:.1e}, leakage {worst_leak:.1e}, unitarity {worst_unit:.1e}; S rejected"
    ))
}

fn end_periodic_splitting() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xe9d);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let p = SynthParams {
            patch_blocks: rng.random_range(1..=2),
            ..random_params(&mut rng)
        };
        let u = gnvw::synth_random(p).map_err(|e| e.to_string())?;
        ensure!(u.radius() > 0, "{p:?}: no patch");
        let s = gnvw::factor_end_periodic(&u, 1e-9).map_err(|e| format!("{p:?}: {e}"))?;
        let finite = Operator::from(s.finite_part.clone());
        let periodic = Operator::Periodic(s.periodic_part.clone());
        let err = oracle_product_error(&finite, &periodic, &u);
        ensure!(err <= 1e-9, "{p:?}: finite·periodic differs from U by {err:e}");
        let w = s.window as i64;
        let reach = w + 2 * (u.band() + u.period()) as i64 + 4;
        for i in -reach..reach {
            for j in -reach..reach {
                let inside = (-w..w).contains(&i) && (-w..w).contains(&j);
                if !inside {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    let dev = (finite.entry(i, j) - Complex64::new(delta, 0.0)).norm();
                    ensure!(dev <= 1e-9, "{p:?}: finite part deviates {dev:e} at ({i}, {j}) outside window {w}");
                }
            }
        }
        worst = worst.max(err);
    }
    Ok(format!("50 operators, max reconstruction error {worst:.1e}"))
}

fn divisibility() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd1f);
    for _ in 0..200 {
        let a = random_seq(&mut rng);
        let n: u64 = rng.random_range(2..=7);
        let w = a.divide_class(n).map_err(|e| e.to_string())?;
        let nb = BigInt::from(n);
        for j in window(&[&a, &w.b, &w.c]) {
            let lhs = a.eval(j) - &nb * w.b.eval(j);
            let rhs = w.c.eval(j) - w.c.eval(j + 1);
            ensure!(lhs == rhs, "a = {a}, n = {n}: identity fails at {j}");
            let c = w.c.eval(j);
            ensure!(c >= BigInt::from(0) && c < nb, "a = {a}, n = {n}: c_{j} = {c}");
        }
        ensure!(&a - &w.b.scale(n as i64) == w.c.one_minus_s(), "a = {a}, n = {n}: structural identity");
    }
    Ok("200 sequences, a - n·b = (1-S)c exactly with 0 <= c < n".into())
}

fn torsion_freeness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7f);
    let mut premises = 0;
    for case in 0..100 {
        // Half the cases are built inside Im(1-S) so the premise is exercised.
        let a = if case % 2 == 0 {
            random_seq(&mut rng).one_minus_s()
        } else {
            random_seq(&mut rng)
        };
        let n = rng.random_range(1..=7);
        let na = a.scale(n);
        let m = na.in_image_one_minus_s().member;
        ensure!(m == oracle_member(&na), "membership of {na} disagrees with the oracle");
        if m {
            premises += 1;
            ensure!(a.in_image_one_minus_s().member && oracle_member(&a), "{n}·a in Im(1-S) but a = {a} is not");
        }
    }
    Ok(format!("100 cases, {premises} with n·a in Im(1-S), all with a in Im(1-S)"))
}

fn mod3_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3);
    for _ in 0..100 {
        let a = random_seq(&mut rng);
        let d = &a - &a.bar_reduce3();
        ensure!(d.in_image_one_minus_s().member, "a - ā not in Im(1-S) for a = {a}");
        ensure!(oracle_member(&d), "oracle rejects a - ā for a = {a}");
    }
    Ok("100 sequences, a - ā in Im(1-S)".into())
}

fn alpha_kernel_image() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa1);
    let mut alternating = 0;
    for case in 0..100 {
        let a = if case % 3 == 0 {
            Seq::alternating(rng.random_range(-9..=9))
        } else {
            random_seq(&mut rng)
        };
        let a0 = a.eval(0);
        let is_alt = window(&[&a]).all(|j| a.eval(j) == if j.rem_euclid(2) == 0 { a0.clone() } else { -a0.clone() });
        let (x, y) = a.alpha_map();
        let zero = x.is_zero() && y.is_zero();
        ensure!(zero == is_alt, "alpha({a}) zero = {zero}, alternating = {is_alt}");
        alternating += is_alt as usize;
    }
    for _ in 0..100 {
        let a = random_seq(&mut rng);
        let (x, y) = a.alpha_map();
        let ba = Seq::beta_interleave(&x, &y);
        ensure!(ba.in_image_one_minus_s().member && oracle_member(&ba), "β(α({a})) not in Im(1-S)");
    }
    Ok(format!("100 kernel cases ({alternating} alternating), 100 image cases"))
}

fn subadditivity() -> Outcome {
    let tol = 1e-9;
    for (n, (u, v)) in random_pairs().iter().enumerate() {
        let uv = u.multiply(v);
        let (pu, pv, puv) = (oracle_propagation(u, tol), oracle_propagation(v, tol), oracle_propagation(&uv, tol));
        ensure!(puv <= pu + pv, "pair {n}: prop(UV) = {puv} > {pu} + {pv}");
        ensure!(uv.propagation(tol) == puv, "pair {n}: library propagation disagrees");
    }
    Ok("100 products, prop(UV) <= prop(U) + prop(V)".into())
}

fn cli_golden() -> Outcome {
    let fixtures = common::fixture_count();
    ensure!(fixtures >= 20, "only {fixtures} fixture files");
    let failures = common::run_golden_suite(false);
    ensure!(failures.is_empty(), "{} golden mismatches, first:\n{}", failures.len(), failures[0]);

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let transcript = |tag: &str| -> String {
        let u = dir.path().join(format!("{tag}.op"));
        let u = u.to_str().unwrap();
        let synth = ["op", "synth", "--index", "2", "--period", "3", "--block", "2", "--patch", "1", "--seed", "2024", "--porcelain"];
        let mut out = run_command(&synth).stdout;
        let mut write = synth.to_vec();
        write.extend(["-o", u]);
        run_command(&write);
        for cmd in [["op", "index", u, "--porcelain"], ["op", "check", u, "--porcelain"], ["op", "factor", u, "--porcelain"]] {
            out.push_str(&run_command(&cmd).stdout);
        }
        out
    };
    let (first, second) = (transcript("a"), transcript("b"));
    ensure!(first == second, "porcelain output differs between runs");
    ensure!(first.contains("index 2\n"), "synthesized operator has the wrong index");
    Ok(format!("{} golden cases over {fixtures} fixtures, repeat runs byte-identical", common::CASES.len()))
}
