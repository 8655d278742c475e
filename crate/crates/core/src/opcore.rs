//! Banded operators on `l2(Z)` with finite data.
//!
//! Two storage classes cover everything the crate manipulates:
//!
//! * [`PeriodicBandOperator`]: `U_{i+tn, j+tn} = U_{ij}`, stored as one period
//!   of diagonals `U_{i, i+d}` for `0 <= i < n`, `|d| <= band`.
//! * [`EndPeriodicOperator`]: a periodic background overridden by a dense patch
//!   on the window `[-R, R)²`. Finite perturbations of the identity and
//!   block-diagonal operators with finitely many distinct blocks live here.
//!
//! Entries are `Complex64`. The shift convention is `(Sv)_i = v_{i+1}`, so
//! `S` has a single unit diagonal at `d = +1`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_integer::Integer;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Default tolerance for unitarity and equality checks.
pub const CHECK_TOL: f64 = 1e-9;
/// Entries closer than this to the background are dropped from patches.
pub const CANON_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicBandOperator {
    period: usize,
    band: usize,
    /// Row-major `period × (2·band + 1)`; column `d + band` holds `U_{i, i+d}`.
    diagonals: Vec<Complex64>,
}

impl PeriodicBandOperator {
    /// Builds an operator from `(i, d, value)` triples with `0 <= i < period`
    /// and `|d| <= band`. Absent entries are zero; duplicates are rejected.
    /// Unitarity is not checked here.
    pub fn new(
        period: usize,
        band: usize,
        entries: impl IntoIterator<Item = (usize, i64, Complex64)>,
    ) -> Result<Self> {
        if period == 0 {
            return Err(Error::InvalidArgument("period must be positive".into()));
        }
        let mut op = Self::zero(period, band);
        let mut seen = vec![false; op.diagonals.len()];
        for (i, d, z) in entries {
            if i >= period {
                return Err(Error::InvalidArgument(format!(
                    "row {i} outside period range 0..{period}"
                )));
            }
            if d.unsigned_abs() as usize > band {
                return Err(Error::InvalidArgument(format!(
                    "diagonal {d} exceeds band {band}"
                )));
            }
            let slot = op.slot(i, d);
            if std::mem::replace(&mut seen[slot], true) {
                return Err(Error::InvalidArgument(format!("duplicate entry ({i}, {d})")));
            }
            op.diagonals[slot] = z;
        }
        Ok(op)
    }

    pub fn zero(period: usize, band: usize) -> Self {
        assert!(period > 0, "period must be positive");
        Self {
            period,
            band,
            diagonals: vec![ZERO; period * (2 * band + 1)],
        }
    }

    pub fn identity() -> Self {
        Self::shift(0)
    }

    /// `S^k`: period 1, single unit diagonal at `d = k`.
    pub fn shift(k: i64) -> Self {
        let band = k.unsigned_abs() as usize;
        let mut op = Self::zero(1, band);
        let slot = op.slot(0, k);
        op.diagonals[slot] = ONE;
        op
    }

    /// Tabulates `f(i, d)` over one period.
    pub fn from_fn(period: usize, band: usize, mut f: impl FnMut(i64, i64) -> Complex64) -> Self {
        let mut op = Self::zero(period, band);
        let b = band as i64;
        for i in 0..period {
            for d in -b..=b {
                let slot = op.slot(i, d);
                op.diagonals[slot] = f(i as i64, d);
            }
        }
        op
    }

    fn slot(&self, i: usize, d: i64) -> usize {
        i * (2 * self.band + 1) + (d + self.band as i64) as usize
    }

    pub fn period(&self) -> usize {
        self.period
    }

    /// Storage band; an upper bound for the propagation.
    pub fn band(&self) -> usize {
        self.band
    }

    /// `U_{i,j}` for arbitrary integers.
    pub fn entry(&self, i: i64, j: i64) -> Complex64 {
        let d = j - i;
        if d.unsigned_abs() as usize > self.band {
            return ZERO;
        }
        let r = i.rem_euclid(self.period as i64) as usize;
        self.diagonals[self.slot(r, d)]
    }

    /// Nonzero stored entries as `(i, d, value)`.
    pub fn nonzero_entries(&self) -> impl Iterator<Item = (usize, i64, Complex64)> + '_ {
        let b = self.band as i64;
        (0..self.period).flat_map(move |i| {
            (-b..=b).filter_map(move |d| {
                let z = self.diagonals[self.slot(i, d)];
                (z != ZERO).then_some((i, d, z))
            })
        })
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.period, self.band, |i, d| self.entry(i + d, i).conj())
    }

    pub fn propagation(&self, tol: f64) -> usize {
        self.nonzero_entries()
            .filter(|(_, _, z)| z.norm() > tol)
            .map(|(_, d, _)| d.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Exact banded product; period is the lcm of the periods.
    pub fn multiply(&self, other: &Self) -> Self {
        let period = self.period.lcm(&other.period);
        let band = self.band + other.band;
        let la = self.band as i64;
        Self::from_fn(period, band, |i, d| {
            product_entry(|r, c| self.entry(r, c), |r, c| other.entry(r, c), la, i, i + d)
        })
    }

    /// Same operator with a shorter storage band, dropping diagonals whose
    /// entries are all at most `tol`.
    pub fn trimmed(&self, tol: f64) -> Self {
        let band = self.propagation(tol);
        Self::from_fn(self.period, band, |i, d| self.entry(i, i + d))
    }
}

/// `Σ_k A_{ik} B_{kj}` over `|k - i| <= la`, summed in increasing `k`.
fn product_entry(
    a: impl Fn(i64, i64) -> Complex64,
    b: impl Fn(i64, i64) -> Complex64,
    la: i64,
    i: i64,
    j: i64,
) -> Complex64 {
    let mut acc = ZERO;
    for k in i - la..=i + la {
        acc += a(i, k) * b(k, j);
    }
    acc
}

#[derive(Clone, Debug, PartialEq)]
pub struct EndPeriodicOperator {
    background: PeriodicBandOperator,
    radius: usize,
    /// `2R × 2R`; entry `(r, c)` is `U_{r-R, c-R}`.
    patch: CMatrix,
}

impl EndPeriodicOperator {
    /// Background plus explicit patch entries `(i, j, value)` with
    /// `-R <= i, j < R`. Inside the window, absent entries are zero.
    pub fn new(
        background: PeriodicBandOperator,
        radius: usize,
        entries: impl IntoIterator<Item = (i64, i64, Complex64)>,
    ) -> Result<Self> {
        let r = radius as i64;
        let mut patch = CMatrix::zeros(2 * radius, 2 * radius);
        let mut seen = BTreeMap::new();
        for (i, j, z) in entries {
            if i < -r || i >= r || j < -r || j >= r {
                return Err(Error::InvalidArgument(format!(
                    "patch entry ({i}, {j}) outside window [-{radius}, {radius})"
                )));
            }
            if seen.insert((i, j), ()).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate patch entry ({i}, {j})")));
            }
            patch[((i + r) as usize, (j + r) as usize)] = z;
        }
        Ok(Self {
            background,
            radius,
            patch,
        })
    }

    /// A periodic operator viewed as end-periodic with an empty patch.
    pub fn lift(background: PeriodicBandOperator) -> Self {
        Self {
            background,
            radius: 0,
            patch: CMatrix::zeros(0, 0),
        }
    }

    /// Patch of radius `radius` filled by `f`.
    pub fn from_fn(
        background: PeriodicBandOperator,
        radius: usize,
        mut f: impl FnMut(i64, i64) -> Complex64,
    ) -> Self {
        let r = radius as i64;
        let patch = CMatrix::from_fn(2 * radius, 2 * radius, |row, col| {
            f(row as i64 - r, col as i64 - r)
        });
        Self {
            background,
            radius,
            patch,
        }
    }

    /// Identity outside `[-m, m)²`, `M` inside, with `M_{0,0}` at `(-m, -m)`.
    pub fn embed_finite(m: &CMatrix) -> Result<Self> {
        if !m.is_square() || !m.nrows().is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "embedded matrix must be square of even size, got {}×{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self {
            background: PeriodicBandOperator::identity(),
            radius: m.nrows() / 2,
            patch: m.clone(),
        })
    }

    pub fn background(&self) -> &PeriodicBandOperator {
        &self.background
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn patch(&self) -> &CMatrix {
        &self.patch
    }

    fn in_window(&self, i: i64) -> bool {
        let r = self.radius as i64;
        -r <= i && i < r
    }

    pub fn entry(&self, i: i64, j: i64) -> Complex64 {
        if self.in_window(i) && self.in_window(j) {
            let r = self.radius as i64;
            self.patch[((i + r) as usize, (j + r) as usize)]
        } else {
            self.background.entry(i, j)
        }
    }

    /// Nonzero patch entries as `(i, j, value)`.
    pub fn patch_entries(&self) -> impl Iterator<Item = (i64, i64, Complex64)> + '_ {
        let r = self.radius as i64;
        let n = 2 * self.radius;
        (0..n).flat_map(move |row| {
            (0..n).filter_map(move |col| {
                let z = self.patch[(row, col)];
                (z != ZERO).then_some((row as i64 - r, col as i64 - r, z))
            })
        })
    }

    /// Structural propagation bound: background band or farthest nonzero
    /// patch entry from the diagonal.
    pub fn band(&self) -> usize {
        self.background.band.max(self.patch_reach(0.0))
    }

    fn patch_reach(&self, tol: f64) -> usize {
        self.patch_entries()
            .filter(|(_, _, z)| z.norm() > tol)
            .map(|(i, j, _)| (i - j).unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            background: self.background.adjoint(),
            radius: self.radius,
            patch: self.patch.adjoint(),
        }
    }

    /// Smallest patch window outside of which the operator agrees with its
    /// background within `tol`.
    pub fn shrunk(&self, tol: f64) -> Self {
        let reach = |x: i64| if x >= 0 { x + 1 } else { -x };
        let need = self
            .window_entries()
            .filter(|&(i, j)| (self.entry(i, j) - self.background.entry(i, j)).norm() > tol)
            .map(|(i, j)| reach(i).max(reach(j)))
            .max()
            .unwrap_or(0) as usize;
        if need == self.radius {
            return self.clone();
        }
        Self::from_fn(self.background.clone(), need, |i, j| self.entry(i, j))
    }

    fn window_entries(&self) -> impl Iterator<Item = (i64, i64)> {
        let r = self.radius as i64;
        (-r..r).flat_map(move |i| (-r..r).map(move |j| (i, j)))
    }
}

/// Either storage class; all algebra goes through this type.
#[derive(Clone, Debug, PartialEq)]
pub enum Operator {
    Periodic(PeriodicBandOperator),
    EndPeriodic(EndPeriodicOperator),
}

impl From<PeriodicBandOperator> for Operator {
    fn from(op: PeriodicBandOperator) -> Self {
        Operator::Periodic(op)
    }
}

impl From<EndPeriodicOperator> for Operator {
    fn from(op: EndPeriodicOperator) -> Self {
        Operator::EndPeriodic(op).normalized()
    }
}

impl Operator {
    pub fn identity() -> Self {
        PeriodicBandOperator::identity().into()
    }

    pub fn shift(k: i64) -> Self {
        PeriodicBandOperator::shift(k).into()
    }

    /// End-periodic values with an empty patch become periodic.
    pub fn normalized(self) -> Self {
        match self {
            Operator::EndPeriodic(e) if e.radius == 0 => Operator::Periodic(e.background),
            other => other,
        }
    }

    pub fn entry(&self, i: i64, j: i64) -> Complex64 {
        match self {
            Operator::Periodic(p) => p.entry(i, j),
            Operator::EndPeriodic(e) => e.entry(i, j),
        }
    }

    pub fn background(&self) -> &PeriodicBandOperator {
        match self {
            Operator::Periodic(p) => p,
            Operator::EndPeriodic(e) => &e.background,
        }
    }

    pub fn period(&self) -> usize {
        self.background().period
    }

    /// Patch radius; zero for periodic operators.
    pub fn radius(&self) -> usize {
        match self {
            Operator::Periodic(_) => 0,
            Operator::EndPeriodic(e) => e.radius,
        }
    }

    /// Structural band: no nonzero entry lies farther from the diagonal.
    pub fn band(&self) -> usize {
        match self {
            Operator::Periodic(p) => p.band,
            Operator::EndPeriodic(e) => e.band(),
        }
    }

    pub fn to_end_periodic(&self) -> EndPeriodicOperator {
        match self {
            Operator::Periodic(p) => EndPeriodicOperator::lift(p.clone()),
            Operator::EndPeriodic(e) => e.clone(),
        }
    }

    pub fn adjoint(&self) -> Self {
        match self {
            Operator::Periodic(p) => Operator::Periodic(p.adjoint()),
            Operator::EndPeriodic(e) => Operator::EndPeriodic(e.adjoint()),
        }
    }

    /// Banded product `self · other`.
    ///
    /// Periodic factors give a periodic product with the lcm period. Otherwise
    /// the patch is first sized to the envelope
    /// `max(R_A, R_B) + lcm(n_A, n_B) + band_A + band_B` and then shrunk to
    /// the entries that differ from the product of backgrounds.
    pub fn multiply(&self, other: &Self) -> Self {
        let background = self.background().multiply(other.background());
        if let (Operator::Periodic(_), Operator::Periodic(_)) = (self, other) {
            return Operator::Periodic(background);
        }
        let (la, lb) = (self.band(), other.band());
        let radius = self.radius().max(other.radius())
            + self.period().lcm(&other.period())
            + la
            + lb;
        let reach = (la + lb) as i64;
        let product = EndPeriodicOperator::from_fn(background, radius, |i, j| {
            if (i - j).abs() > reach {
                ZERO
            } else {
                product_entry(|r, c| self.entry(r, c), |r, c| other.entry(r, c), la as i64, i, j)
            }
        });
        Operator::EndPeriodic(product.shrunk(CANON_TOL)).normalized()
    }

    /// Drops background diagonals whose entries are all at most `tol`.
    pub fn trimmed(&self, tol: f64) -> Self {
        match self {
            Operator::Periodic(p) => Operator::Periodic(p.trimmed(tol)),
            Operator::EndPeriodic(e) => Operator::EndPeriodic(EndPeriodicOperator {
                background: e.background.trimmed(tol),
                radius: e.radius,
                patch: e.patch.clone(),
            }),
        }
    }

    /// Largest `|i - j|` with `|U_{ij}| > tol`.
    pub fn propagation(&self, tol: f64) -> usize {
        match self {
            Operator::Periodic(p) => p.propagation(tol),
            Operator::EndPeriodic(e) => e.background.propagation(tol).max(e.patch_reach(tol)),
        }
    }

    /// Rows and columns that cover the patch plus one full period and band on
    /// each side.
    pub fn verification_window(&self) -> (i64, i64) {
        let w = (self.radius() + self.period() + self.band()) as i64;
        (-w, w)
    }

    /// Max of `|(UU*)_{ij} - δ_{ij}|` and `|(U*U)_{ij} - δ_{ij}|` over the
    /// verification window.
    pub fn unitarity_residual(&self) -> f64 {
        let (lo, hi) = self.verification_window();
        let b = self.band() as i64;
        let mut worst = 0.0f64;
        for i in lo..hi {
            for j in i - 2 * b..=i + 2 * b {
                let delta = if i == j { ONE } else { ZERO };
                let mut uu = ZERO;
                let mut u_u = ZERO;
                for k in i - b..=i + b {
                    uu += self.entry(i, k) * self.entry(j, k).conj();
                    u_u += self.entry(k, i).conj() * self.entry(k, j);
                }
                worst = worst.max((uu - delta).norm()).max((u_u - delta).norm());
            }
        }
        worst
    }

    /// Fails with a numerical error unless the unitarity residual is at most `tol`.
    pub fn check_unitary(&self, tol: f64) -> Result<f64> {
        let res = self.unitarity_residual();
        if res <= tol {
            Ok(res)
        } else {
            Err(Error::Numerical(format!(
                "operator is not unitary: residual {res:e} exceeds {tol:e}"
            )))
        }
    }

    /// Finitely supported parts of the corners `U_{-+}` and `U_{+-}`.
    pub fn corner_data(&self) -> CornerData {
        let l = self.band();
        let li = l as i64;
        CornerData {
            reach: l,
            minus_plus: CMatrix::from_fn(l, l, |r, c| self.entry(r as i64 - li, c as i64)),
            plus_minus: CMatrix::from_fn(l, l, |r, c| self.entry(r as i64, c as i64 - li)),
        }
    }

    /// `(Uψ)_i = Σ_j U_{ij} ψ_j`.
    pub fn apply(&self, psi: &StateVector) -> StateVector {
        let b = self.band() as i64;
        let mut out: BTreeMap<i64, Complex64> = BTreeMap::new();
        for (&j, &v) in &psi.amplitudes {
            for i in j - b..=j + b {
                let z = self.entry(i, j);
                if z != ZERO {
                    *out.entry(i).or_insert(ZERO) += z * v;
                }
            }
        }
        StateVector { amplitudes: out }
    }

    /// Entrywise comparison over a window covering both patches, the common
    /// period and the bands.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_difference(other) <= tol
    }

    pub fn max_difference(&self, other: &Self) -> f64 {
        let b = self.band().max(other.band()) as i64;
        let w = (self.radius().max(other.radius())
            + self.period().lcm(&other.period())
            + b as usize) as i64;
        let mut worst = 0.0f64;
        for i in -w..w {
            for j in i - b..=i + b {
                worst = worst.max((self.entry(i, j) - other.entry(i, j)).norm());
            }
        }
        worst
    }
}

impl std::ops::Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: Self) -> Operator {
        self.multiply(rhs)
    }
}

/// Nonzero parts of the off-diagonal corners.
///
/// `minus_plus[(r, c)] = U_{r - reach, c}` and `plus_minus[(r, c)] = U_{r, c - reach}`;
/// every corner entry outside these `reach × reach` blocks vanishes.
#[derive(Clone, Debug, PartialEq)]
pub struct CornerData {
    pub reach: usize,
    pub minus_plus: CMatrix,
    pub plus_minus: CMatrix,
}

/// How the blocks of a block-diagonal operator are given.
#[derive(Clone, Debug)]
pub enum BlockLayout {
    /// One block repeated along the whole diagonal.
    Repeated(CMatrix),
    /// Explicit blocks at the listed block indices `t` (block `t` covers
    /// `[k + tL, k + (t+1)L)`), `background` everywhere else.
    Finite {
        background: CMatrix,
        central: Vec<(i64, CMatrix)>,
    },
}

/// `Δ_k(M)`: every block `[k + tL, k + (t+1)L)²` equal to `M`.
pub fn delta_embed(m: &CMatrix, k: i64) -> Result<PeriodicBandOperator> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::InvalidArgument(format!(
            "block must be square and nonempty, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let l = m.nrows();
    let li = l as i64;
    Ok(PeriodicBandOperator::from_fn(l, l - 1, |i, d| {
        let r = (i - k).rem_euclid(li);
        let c = r + d;
        if (0..li).contains(&c) {
            m[(r as usize, c as usize)]
        } else {
            ZERO
        }
    }))
}

/// Element of `B_k(L)`: block diagonal with `L × L` blocks aligned at `k`.
pub fn block_diagonal(k: i64, block: usize, layout: &BlockLayout) -> Result<Operator> {
    if block == 0 {
        return Err(Error::InvalidArgument("block size must be positive".into()));
    }
    let check = |m: &CMatrix| {
        if m.nrows() != block || m.ncols() != block {
            Err(Error::InvalidArgument(format!(
                "block is {}×{}, expected {block}×{block}",
                m.nrows(),
                m.ncols()
            )))
        } else {
            Ok(())
        }
    };
    match layout {
        BlockLayout::Repeated(m) => {
            check(m)?;
            Ok(delta_embed(m, k)?.into())
        }
        BlockLayout::Finite {
            background,
            central,
        } => {
            check(background)?;
            let l = block as i64;
            let mut blocks = BTreeMap::new();
            for (t, m) in central {
                check(m)?;
                if blocks.insert(*t, m).is_some() {
                    return Err(Error::InvalidArgument(format!("block index {t} given twice")));
                }
            }
            let bg = delta_embed(background, k)?;
            let radius = blocks
                .keys()
                .map(|&t| (-(k + t * l)).max(k + (t + 1) * l).max(0))
                .max()
                .unwrap_or(0) as usize;
            let op = EndPeriodicOperator::from_fn(bg.clone(), radius, |i, j| {
                let (ti, tj) = ((i - k).div_euclid(l), (j - k).div_euclid(l));
                match blocks.get(&ti) {
                    Some(m) if ti == tj => {
                        let start = k + ti * l;
                        m[((i - start) as usize, (j - start) as usize)]
                    }
                    _ => bg.entry(i, j),
                }
            });
            Ok(op.into())
        }
    }
}

/// Finitely supported vector in `l2(Z)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StateVector {
    amplitudes: BTreeMap<i64, Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: impl IntoIterator<Item = (i64, Complex64)>) -> Self {
        let mut map = BTreeMap::new();
        for (i, z) in amplitudes {
            *map.entry(i).or_insert(ZERO) += z;
        }
        Self { amplitudes: map }
    }

    pub fn delta(i: i64) -> Self {
        Self::new([(i, ONE)])
    }

    pub fn get(&self, i: i64) -> Complex64 {
        self.amplitudes.get(&i).copied().unwrap_or(ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.amplitudes.iter().map(|(&i, &z)| (i, z))
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.values().fold(0.0, |a, z| a + z.norm_sqr()).sqrt()
    }

    /// Indices with amplitude above `tol`.
    pub fn support(&self, tol: f64) -> Vec<i64> {
        self.iter().filter(|(_, z)| z.norm() > tol).map(|(i, _)| i).collect()
    }

    pub fn max_difference(&self, other: &Self) -> f64 {
        self.amplitudes
            .keys()
            .chain(other.amplitudes.keys())
            .map(|&i| (self.get(i) - other.get(i)).norm())
            .fold(0.0, f64::max)
    }
}
