//! GNVW index and the block-diagonal factorization of index-zero operators.
//!
//! With `P` the projection onto `span{e_i : i >= 0}`, the index is
//! `ind(U) = ‖U_{-+}‖²_HS - ‖U_{+-}‖²_HS = trace(P - U*PU)`; both sides are
//! computed from different data and reported together.
//!
//! An index-zero `U` with `prop(U) <= L` factors as `U = VW` with `V`
//! block diagonal on the grid `[2tL, 2(t+1)L)` and `W` block diagonal on the
//! grid shifted by `-L`. Each block of `W` comes from a unitary that conjugates
//! `U*P_tU` back to `P_t` on a window of size `2L`, `P_t` being the projection
//! onto indices `>= 2tL`.

use nalgebra::linalg::SymmetricEigen;
use num_complex::Complex64;
use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, haar_unitary, max_abs, polar_unitary, unitarity_residual, CMatrix};
use crate::opcore::{
    block_diagonal, BlockLayout, EndPeriodicOperator, Operator, PeriodicBandOperator, CANON_TOL,
};

/// Default acceptance tolerance for `|raw - rounded|`.
pub const INDEX_TOL: f64 = 1e-6;
/// Eigenvalues of a window projection must lie this close to 0 or 1.
pub const PROJECTION_TOL: f64 = 1e-6;
/// Extracted blocks with a larger unitarity residual are rejected outright.
pub const REUNITARIZE_MAX: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct IndexReport {
    pub raw: f64,
    pub rounded: i64,
    pub deviation: f64,
    pub hs_minus_plus: f64,
    pub hs_plus_minus: f64,
    /// `trace(P - U*PU)` from the diagonal of `U*PU`.
    pub trace_check: f64,
}

/// Computes the index from the corner blocks and cross-checks it against the
/// trace of `P - U*PU`. Fails if the raw value is farther than `tol` from an
/// integer.
pub fn index(u: &Operator, tol: f64) -> Result<IndexReport> {
    let corners = u.corner_data();
    let hs_minus_plus = frobenius_sq(&corners.minus_plus);
    let hs_plus_minus = frobenius_sq(&corners.plus_minus);
    let raw = hs_minus_plus - hs_plus_minus;
    let rounded = raw.round() as i64;
    let deviation = (raw - rounded as f64).abs();

    // (U*PU)_{ii} = Σ_{k>=0} |U_{ki}|²; outside [-L, L) the diagonal of
    // P - U*PU vanishes for a unitary of propagation <= L.
    let l = corners.reach as i64;
    let trace_check = (-l..l)
        .map(|i| {
            let p = if i >= 0 { 1.0 } else { 0.0 };
            let col: f64 = ((i - l).max(0)..=i + l).map(|k| u.entry(k, i).norm_sqr()).fold(0.0, |a, x| a + x);
            p - col
        })
        .fold(0.0, |a, x| a + x);

    if deviation > tol {
        return Err(Error::Numerical(format!(
            "index {raw} deviates from the nearest integer by {deviation:e} (tolerance {tol:e})"
        )));
    }
    Ok(IndexReport {
        raw,
        rounded,
        deviation,
        hs_minus_plus,
        hs_plus_minus,
        trace_check,
    })
}

/// Given the matrix of a projection `Q` on the window `e_{-L}, …, e_{L-1}`
/// with `trace(P - Q) = 0` there, returns a unitary `V̂` with `V̂*QV̂ = P`.
///
/// Columns `0..L` (window positions `-L..-1`) span `ker Q`, columns `L..2L`
/// span `range Q`. Any orthonormal bases satisfy the identity; these come from
/// a Hermitian eigendecomposition.
pub fn conjugating_unitary(q_window: &CMatrix, half: usize) -> Result<CMatrix> {
    let n = 2 * half;
    if q_window.nrows() != n || q_window.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "window matrix is {}×{}, expected {n}×{n}",
            q_window.nrows(),
            q_window.ncols()
        )));
    }
    let hermitian = (q_window + q_window.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(hermitian);

    let mut kernel = Vec::new();
    let mut range = Vec::new();
    for (col, &lambda) in eig.eigenvalues.iter().enumerate() {
        let gap = lambda.abs().min((lambda - 1.0).abs());
        if gap > PROJECTION_TOL {
            return Err(Error::Numerical(format!(
                "window matrix is not a projection: eigenvalue {lambda}"
            )));
        }
        if lambda >= 0.5 {
            range.push(col);
        } else {
            kernel.push(col);
        }
    }
    if range.len() != half {
        return Err(Error::TraceMismatch {
            rank: range.len(),
            expected: half,
        });
    }

    let mut v = CMatrix::zeros(n, n);
    for (dst, &src) in kernel.iter().chain(range.iter()).enumerate() {
        v.set_column(dst, &eig.eigenvectors.column(src));
    }

    let p = CMatrix::from_fn(n, n, |r, c| {
        if r == c && r >= half {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let err = max_abs(&(v.adjoint() * q_window * &v - p));
    if err > 1e-8 {
        return Err(Error::Numerical(format!(
            "conjugation residual {err:e} exceeds 1e-8"
        )));
    }
    Ok(v)
}

/// `U*P_tU` restricted to `[2tL - L, 2tL + L)`, in local coordinates.
fn projected_window(u: &Operator, half: usize, t: i64) -> CMatrix {
    let l = half as i64;
    let centre = 2 * t * l;
    let start = centre - l;
    let band = u.band() as i64;
    CMatrix::from_fn(2 * half, 2 * half, |r, c| {
        let (a, b) = (start + r as i64, start + c as i64);
        let lo = centre.max(a.min(b) - band);
        let hi = a.max(b) + band;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in lo..=hi {
            acc += u.entry(k, a).conj() * u.entry(k, b);
        }
        acc
    })
}

#[derive(Clone, Debug)]
pub struct DecompositionResult {
    /// Block diagonal on `[2tL, 2(t+1)L)`.
    pub v: Operator,
    /// Block diagonal on `[2tL - L, 2tL + L)`.
    pub w: Operator,
    /// `2L`.
    pub block_size: usize,
    /// Max `|(VW - U)_{ij}|` over the verification window.
    pub residual: f64,
    /// Largest entry of `V` or `W` outside its block pattern before cleanup.
    pub block_leakage: f64,
    pub v_unitarity: f64,
    pub w_unitarity: f64,
}

pub fn decompose(u: &Operator, tol: f64) -> Result<DecompositionResult> {
    decompose_with_jobs(u, tol, 1)
}

/// Factors an index-zero periodic or end-periodic unitary as `U = VW`.
///
/// The half block size `L` is `lcm(prop(U), period)`, raised to a multiple
/// that is at least the patch radius for end-periodic input, so the block
/// grid is compatible with the period and only finitely many distinct blocks
/// occur. `jobs > 1` computes the per-block unitaries on a thread pool.
pub fn decompose_with_jobs(u: &Operator, tol: f64, jobs: usize) -> Result<DecompositionResult> {
    let report = index(u, INDEX_TOL)?;
    if report.rounded != 0 {
        return Err(Error::NonzeroIndex(report.rounded));
    }
    u.check_unitary(tol)?;

    let period = u.period();
    let base = u.propagation(CANON_TOL).max(1).lcm(&period);
    let radius = u.radius();
    let half = if radius > base { base * radius.div_ceil(base) } else { base };
    let l = half as i64;
    let size = 2 * half;

    // Block unitaries of W: the representative tail block plus every block
    // whose window (padded by the band) meets the patch.
    let band = u.band() as i64;
    let r = radius as i64;
    let central: Vec<i64> = if radius == 0 {
        Vec::new()
    } else {
        let reach = r + l + band;
        let t_max = Integer::div_ceil(&reach, &(2 * l)) + 1;
        (-t_max..=t_max)
            .filter(|&t| {
                let lo = 2 * t * l - l - band;
                let hi = 2 * t * l + l + band;
                lo < r && hi > -r
            })
            .collect()
    };
    let background = Operator::Periodic(u.background().clone());
    let solve = |t: Option<i64>| -> Result<CMatrix> {
        let q = match t {
            Some(t) => projected_window(u, half, t),
            None => projected_window(&background, half, 0),
        };
        Ok(conjugating_unitary(&q, half)?.adjoint())
    };
    let mut tasks: Vec<Option<i64>> = vec![None];
    tasks.extend(central.iter().map(|&t| Some(t)));
    let blocks: Vec<CMatrix> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| tasks.par_iter().map(|&t| solve(t)).collect::<Result<Vec<_>>>())?
    } else {
        tasks.iter().map(|&t| solve(t)).collect::<Result<Vec<_>>>()?
    };
    let w_layout = if central.is_empty() {
        BlockLayout::Repeated(blocks[0].clone())
    } else {
        BlockLayout::Finite {
            background: blocks[0].clone(),
            central: central.iter().copied().zip(blocks[1..].iter().cloned()).collect(),
        }
    };
    let w = block_diagonal(-l, size, &w_layout)?;

    let v_raw = u.multiply(&w.adjoint());
    let leak_v = off_block_magnitude(&v_raw, 0, size);
    let leak_w = off_block_magnitude(&w, -l, size);
    let block_leakage = leak_v.max(leak_w);
    if block_leakage > tol {
        return Err(Error::Numerical(format!(
            "block leakage {block_leakage:e} exceeds tolerance {tol:e}"
        )));
    }

    let v = clean_blocks(&v_raw, size)?;
    let residual = v.multiply(&w).max_difference(u);
    let v_unitarity = v.unitarity_residual();
    let w_unitarity = w.unitarity_residual();
    for (what, value) in [
        ("factorization residual", residual),
        ("unitarity residual of V", v_unitarity),
        ("unitarity residual of W", w_unitarity),
    ] {
        if value > tol {
            return Err(Error::Numerical(format!(
                "{what} {value:e} exceeds tolerance {tol:e}"
            )));
        }
    }
    Ok(DecompositionResult {
        v,
        w,
        block_size: size,
        residual,
        block_leakage,
        v_unitarity,
        w_unitarity,
    })
}

/// Largest `|A_{ij}|` with `i`, `j` in different blocks of the grid aligned at
/// `k` with block size `size`, over the patch plus two grid periods each side.
fn off_block_magnitude(a: &Operator, k: i64, size: usize) -> f64 {
    let s = size as i64;
    let band = a.band() as i64;
    let w = a.radius() as i64 + 2 * s.lcm(&(a.period() as i64)) + band;
    let mut worst = 0.0f64;
    for i in -w..w {
        for j in i - band..=i + band {
            if (i - k).div_euclid(s) != (j - k).div_euclid(s) {
                worst = worst.max(a.entry(i, j).norm());
            }
        }
    }
    worst
}

fn extract_block(a: &Operator, start: i64, size: usize) -> Result<CMatrix> {
    let m = CMatrix::from_fn(size, size, |r, c| a.entry(start + r as i64, start + c as i64));
    let res = unitarity_residual(&m);
    if res > REUNITARIZE_MAX {
        return Err(Error::Numerical(format!(
            "extracted block at {start} has unitarity residual {res:e}"
        )));
    }
    Ok(if res > CANON_TOL { polar_unitary(&m) } else { m })
}

/// Rebuilds `a` from its diagonal blocks on the grid aligned at 0, dropping
/// off-block entries and snapping each block to the nearest unitary.
fn clean_blocks(a: &Operator, size: usize) -> Result<Operator> {
    let s = size as i64;
    // The background's period divides `size`, so block 0 of the background
    // represents every tail block.
    let tail = {
        let bg = Operator::Periodic(a.background().clone());
        extract_block(&bg, 0, size)?
    };
    let r = a.radius() as i64;
    if r == 0 {
        return block_diagonal(0, size, &BlockLayout::Repeated(tail));
    }
    let central = (Integer::div_floor(&-r, &s)..Integer::div_ceil(&r, &s))
        .map(|t| Ok((t, extract_block(a, t * s, size)?)))
        .collect::<Result<Vec<_>>>()?;
    block_diagonal(
        0,
        size,
        &BlockLayout::Finite {
            background: tail,
            central,
        },
    )
}

/// The unique periodic operator agreeing with `u` outside its patch.
pub fn retract_periodic(u: &EndPeriodicOperator, tol: f64) -> Result<PeriodicBandOperator> {
    let bg = u.background().clone();
    let res = Operator::Periodic(bg.clone()).unitarity_residual();
    if res > tol {
        return Err(Error::Validation(format!(
            "background is not unitary (residual {res:e}); the patch does not describe an end-periodic unitary"
        )));
    }
    Ok(bg)
}

/// `U = finite_part · periodic_part`.
#[derive(Clone, Debug)]
pub struct EndPeriodicSplit {
    /// Identity background; differs from `I` only inside `[-window, window)²`.
    pub finite_part: EndPeriodicOperator,
    pub periodic_part: PeriodicBandOperator,
    pub window: usize,
    /// Max `|(U r(U)*)_{ij} - δ_{ij}|` outside the window.
    pub outside_deviation: f64,
    /// Max `|(finite_part · periodic_part - U)_{ij}|`.
    pub residual: f64,
}

/// Splits an end-periodic unitary into a finite perturbation of the identity
/// times its periodic retraction: `finite_part = U · r(U)*`.
pub fn factor_end_periodic(u: &Operator, tol: f64) -> Result<EndPeriodicSplit> {
    let periodic = retract_periodic(&u.to_end_periodic(), tol)?;
    let periodic_op = Operator::Periodic(periodic.clone());
    let product = u.multiply(&periodic_op.adjoint()).to_end_periodic();

    let outside_deviation = Operator::Periodic(product.background().clone())
        .max_difference(&Operator::identity());
    if outside_deviation > tol {
        return Err(Error::Numerical(format!(
            "U r(U)* differs from the identity outside the patch by {outside_deviation:e}"
        )));
    }
    let finite = EndPeriodicOperator::from_fn(
        PeriodicBandOperator::identity(),
        product.radius(),
        |i, j| product.entry(i, j),
    )
    .shrunk(CANON_TOL);

    let residual = Operator::EndPeriodic(finite.clone())
        .multiply(&periodic_op)
        .max_difference(u);
    if residual > tol {
        return Err(Error::Numerical(format!(
            "finite · periodic differs from U by {residual:e}"
        )));
    }
    Ok(EndPeriodicSplit {
        window: finite.radius(),
        finite_part: finite,
        periodic_part: periodic,
        outside_deviation,
        residual,
    })
}

/// Parameters of [`synth_random`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SynthParams {
    pub target_index: i64,
    /// Period of the diagonal phase layer.
    pub period: usize,
    pub block_size: usize,
    /// The finite factor is a Haar unitary of size `2 · patch_blocks`.
    pub patch_blocks: usize,
    pub seed: u64,
}

/// Block layer of `block × block` Haar blocks aligned at `offset`, with
/// `reps` independent blocks repeated cyclically.
fn haar_layer(rng: &mut ChaCha8Rng, block: usize, reps: usize, offset: i64) -> PeriodicBandOperator {
    let blocks: Vec<CMatrix> = (0..reps).map(|_| haar_unitary(block, rng)).collect();
    let b = block as i64;
    PeriodicBandOperator::from_fn(block * reps, block - 1, |i, d| {
        let r = (i - offset).rem_euclid(b);
        let t = (i - offset).div_euclid(b).rem_euclid(reps as i64) as usize;
        let c = r + d;
        if (0..b).contains(&c) {
            blocks[t][(r as usize, c as usize)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Seeded test operator `S^k · D · A_0 · A_1 · F` of index `k`.
///
/// `D` is a diagonal phase layer of period `period`; `A_0`, `A_1` are Haar
/// block layers of block size `block_size` aligned at `0` and
/// `block_size / 2` with period `lcm(period, block_size)`; `F` is an embedded
/// Haar unitary of size `2 · patch_blocks` (omitted when zero). Every factor
/// but `S^k` has index 0.
pub fn synth_random(params: SynthParams) -> Result<Operator> {
    let SynthParams {
        target_index,
        period,
        block_size,
        patch_blocks,
        seed,
    } = params;
    if period == 0 || block_size == 0 {
        return Err(Error::InvalidArgument(
            "period and block size must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases: Vec<Complex64> = (0..period)
        .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
        .collect();
    let diag = PeriodicBandOperator::from_fn(period, 0, |i, _| phases[i as usize]);

    let full = period.lcm(&block_size);
    let reps = full / block_size;
    let mut u = Operator::shift(target_index).multiply(&diag.into());
    u = u.multiply(&haar_layer(&mut rng, block_size, reps, 0).into());
    if block_size > 1 {
        let offset = (block_size / 2) as i64;
        u = u.multiply(&haar_layer(&mut rng, block_size, reps, offset).into());
    }
    if patch_blocks > 0 {
        let f = EndPeriodicOperator::embed_finite(&haar_unitary(2 * patch_blocks, &mut rng))?;
        u = u.multiply(&f.into());
    }
    Ok(u.trimmed(0.0))
}
