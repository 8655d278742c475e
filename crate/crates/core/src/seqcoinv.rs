//! Eventually periodic integer sequences and the coinvariant group `l∞(Z)_S`.
//!
//! A sequence is stored as a periodic left tail, an explicit core and a
//! periodic right tail. Every value is a [`BigInt`], so all identities hold
//! exactly. Values are kept in canonical form (minimal tail periods, core
//! trimmed against both tails), which makes `==` the mathematical equality.
//!
//! `S` is the left shift `(Sa)_j = a_{j+1}`. The quotient `l∞(Z)_S` is
//! `l∞(Z) / Im(1 - S)`; membership in `Im(1 - S)` is decided by the tail
//! period sums and comes with an explicit preimage.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EventuallyPeriodicSeq {
    left_period: Vec<BigInt>,
    core_offset: i64,
    core: Vec<BigInt>,
    right_period: Vec<BigInt>,
}

/// Witness of `a - n·b = (1 - S)c` with `0 <= c_j < n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DivisionWitness {
    pub b: EventuallyPeriodicSeq,
    pub c: EventuallyPeriodicSeq,
}

/// Result of testing `a ∈ Im(1 - S)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Membership {
    pub member: bool,
    /// `c` with `(1 - S)c = a` and `c_0 = 0`, present iff `member`.
    pub witness: Option<EventuallyPeriodicSeq>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointwiseOp {
    Add,
    Sub,
}

fn big_vec(values: &[i64]) -> Vec<BigInt> {
    values.iter().map(|&v| BigInt::from(v)).collect()
}

/// Shortest prefix whose cyclic repetition reproduces `v`.
fn minimal_cycle(v: &[BigInt]) -> Vec<BigInt> {
    let len = v.len();
    for d in 1..=len {
        if len.is_multiple_of(d) && (0..len).all(|i| v[i] == v[(i + d) % len]) {
            return v[..d].to_vec();
        }
    }
    v.to_vec()
}

fn lcm(a: usize, b: usize) -> usize {
    a.lcm(&b)
}

fn floor_div(a: i64, n: i64) -> i64 {
    Integer::div_floor(&a, &n)
}

fn ceil_div(a: i64, n: i64) -> i64 {
    Integer::div_ceil(&a, &n)
}

impl EventuallyPeriodicSeq {
    /// Builds and canonicalizes a sequence. Both tail periods must be nonempty.
    pub fn new(
        left_period: Vec<BigInt>,
        core_offset: i64,
        core: Vec<BigInt>,
        right_period: Vec<BigInt>,
    ) -> Result<Self> {
        if left_period.is_empty() {
            return Err(Error::InvalidArgument("left period is empty".into()));
        }
        if right_period.is_empty() {
            return Err(Error::InvalidArgument("right period is empty".into()));
        }
        Ok(Self::raw(left_period, core_offset, core, right_period))
    }

    pub fn from_i64(left: &[i64], core_offset: i64, core: &[i64], right: &[i64]) -> Result<Self> {
        Self::new(big_vec(left), core_offset, big_vec(core), big_vec(right))
    }

    fn raw(
        left_period: Vec<BigInt>,
        core_offset: i64,
        core: Vec<BigInt>,
        right_period: Vec<BigInt>,
    ) -> Self {
        Self {
            left_period,
            core_offset,
            core,
            right_period,
        }
        .canonicalize()
    }

    pub fn zero() -> Self {
        Self::constant(0)
    }

    pub fn constant(value: i64) -> Self {
        let v = vec![BigInt::from(value)];
        Self::raw(v.clone(), 0, Vec::new(), v)
    }

    /// `δ_k`: one at index `k`, zero elsewhere.
    pub fn delta(k: i64) -> Self {
        Self::raw(vec![BigInt::zero()], k, vec![BigInt::from(1)], vec![BigInt::zero()])
    }

    /// `(…, t, -t, t, -t, …)` with `a_0 = t`.
    pub fn alternating(t: i64) -> Self {
        let v = big_vec(&[t, -t]);
        Self::raw(v.clone(), 0, Vec::new(), v)
    }

    pub fn left_period(&self) -> &[BigInt] {
        &self.left_period
    }

    pub fn core_offset(&self) -> i64 {
        self.core_offset
    }

    pub fn core(&self) -> &[BigInt] {
        &self.core
    }

    pub fn right_period(&self) -> &[BigInt] {
        &self.right_period
    }

    /// One past the last core index.
    pub fn core_end(&self) -> i64 {
        self.core_offset + self.core.len() as i64
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    /// `a_j`.
    pub fn eval(&self, j: i64) -> BigInt {
        let end = self.core_end();
        if j >= end {
            let p = self.right_period.len() as i64;
            self.right_period[(j - end).rem_euclid(p) as usize].clone()
        } else if j >= self.core_offset {
            self.core[(j - self.core_offset) as usize].clone()
        } else {
            let p = self.left_period.len() as i64;
            self.left_period[(j - self.core_offset).rem_euclid(p) as usize].clone()
        }
    }

    /// Index window outside of which every operand of a routine is in its
    /// periodic regime; tests compare on a multiple of it.
    pub fn check_window(&self) -> (i64, i64) {
        let p = lcm(self.left_period.len(), self.right_period.len()) as i64;
        let pad = 3 * p + self.core.len() as i64;
        (self.core_offset - pad, self.core_end() + pad)
    }

    /// Builds a sequence from `f`, which must be `pl`-periodic on `j < lo` and
    /// `pr`-periodic on `j >= hi`.
    fn tabulate(lo: i64, hi: i64, pl: usize, pr: usize, mut f: impl FnMut(i64) -> BigInt) -> Self {
        debug_assert!(lo <= hi && pl > 0 && pr > 0);
        let left = (0..pl as i64).map(|x| f(lo - pl as i64 + x)).collect();
        let core = (lo..hi).map(&mut f).collect();
        let right = (hi..hi + pr as i64).map(&mut f).collect();
        Self::raw(left, lo, core, right)
    }

    fn canonicalize(mut self) -> Self {
        self.left_period = minimal_cycle(&self.left_period);
        self.right_period = minimal_cycle(&self.right_period);

        while let Some(last) = self.core.last() {
            if last != self.right_period.last().unwrap() {
                break;
            }
            self.core.pop();
            self.right_period.rotate_right(1);
        }

        let mut drop = 0;
        while drop < self.core.len() && self.core[drop] == self.left_period[drop % self.left_period.len()] {
            drop += 1;
        }
        if drop > 0 {
            self.core.drain(..drop);
            self.core_offset += drop as i64;
            let p = self.left_period.len();
            self.left_period.rotate_left(drop % p);
        }

        if self.core.is_empty() {
            self.normalize_boundary();
        }
        self
    }

    /// With an empty core the tail boundary can slide; pin it.
    fn normalize_boundary(&mut self) {
        if self.left_period == self.right_period {
            // Purely periodic: anchor the phase at index 0.
            let p = self.right_period.len() as i64;
            let r = (-self.core_offset).rem_euclid(p) as usize;
            self.right_period.rotate_left(r);
            self.left_period = self.right_period.clone();
            self.core_offset = 0;
            return;
        }
        // Leftmost boundary. Distinct periodic tails agree on at most
        // lcm(p_l, p_r) - 1 consecutive positions.
        let limit = lcm(self.left_period.len(), self.right_period.len());
        let mut steps = 0;
        while self.left_period.last() == self.right_period.last() {
            self.core_offset -= 1;
            self.left_period.rotate_right(1);
            self.right_period.rotate_right(1);
            steps += 1;
            assert!(steps <= limit, "distinct tails cannot agree over a full common period");
        }
    }

    pub fn pointwise(&self, other: &Self, op: PointwiseOp) -> Self {
        let lo = self.core_offset.min(other.core_offset);
        let hi = self.core_end().max(other.core_end());
        let pl = lcm(self.left_period.len(), other.left_period.len());
        let pr = lcm(self.right_period.len(), other.right_period.len());
        Self::tabulate(lo, hi, pl, pr, |j| match op {
            PointwiseOp::Add => self.eval(j) + other.eval(j),
            PointwiseOp::Sub => self.eval(j) - other.eval(j),
        })
    }

    pub fn scale(&self, n: i64) -> Self {
        let n = BigInt::from(n);
        let mul = |v: &[BigInt]| v.iter().map(|x| x * &n).collect::<Vec<_>>();
        Self::raw(
            mul(&self.left_period),
            self.core_offset,
            mul(&self.core),
            mul(&self.right_period),
        )
    }

    /// `S^k a`, i.e. `r_j = a_{j+k}`.
    pub fn shift(&self, k: i64) -> Self {
        Self {
            left_period: self.left_period.clone(),
            core_offset: self.core_offset - k,
            core: self.core.clone(),
            right_period: self.right_period.clone(),
        }
        .canonicalize()
    }

    /// `a - Sa`.
    pub fn one_minus_s(&self) -> Self {
        self - &self.shift(1)
    }

    /// `r_i = a_{ni} + … + a_{ni+n-1}`, groups anchored at index 0.
    pub fn block_sum(&self, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("block size must be positive".into()));
        }
        let n = n as i64;
        let lo = floor_div(self.core_offset, n) - 1;
        let hi = ceil_div(self.core_end(), n) + 1;
        Ok(Self::tabulate(
            lo,
            hi,
            self.left_period.len(),
            self.right_period.len(),
            |i| (0..n).map(|t| self.eval(n * i + t)).sum(),
        ))
    }

    /// `α(a) = ((a_{2j} + a_{2j+1})_j, (-a_{2j-1} - a_{2j})_j)`.
    pub fn alpha_map(&self) -> (Self, Self) {
        let lo = floor_div(self.core_offset, 2) - 2;
        let hi = ceil_div(self.core_end(), 2) + 2;
        let (pl, pr) = (self.left_period.len(), self.right_period.len());
        let first = Self::tabulate(lo, hi, pl, pr, |j| self.eval(2 * j) + self.eval(2 * j + 1));
        let second = Self::tabulate(lo, hi, pl, pr, |j| -self.eval(2 * j - 1) - self.eval(2 * j));
        (first, second)
    }

    /// `β(a, b)`: `r_{2j} = a_j`, `r_{2j+1} = b_j`.
    pub fn beta_interleave(a: &Self, b: &Self) -> Self {
        let lo = 2 * a.core_offset.min(b.core_offset) - 2;
        let hi = 2 * a.core_end().max(b.core_end()) + 2;
        let pl = 2 * lcm(a.left_period.len(), b.left_period.len());
        let pr = 2 * lcm(a.right_period.len(), b.right_period.len());
        Self::tabulate(lo, hi, pl, pr, |i| {
            let j = floor_div(i, 2);
            if i.rem_euclid(2) == 0 {
                a.eval(j)
            } else {
                b.eval(j)
            }
        })
    }

    /// Moves each 3-block sum `a_{3i} + a_{3i+1} + a_{3i+2}` to index `3i` and
    /// zeroes `3i+1`, `3i+2`. The result is congruent to `a` modulo `Im(1 - S)`.
    pub fn bar_reduce3(&self) -> Self {
        let lo = 3 * (floor_div(self.core_offset, 3) - 1);
        let hi = 3 * (ceil_div(self.core_end(), 3) + 1);
        Self::tabulate(
            lo,
            hi,
            3 * self.left_period.len(),
            3 * self.right_period.len(),
            |j| {
                if j.rem_euclid(3) == 0 {
                    self.eval(j) + self.eval(j + 1) + self.eval(j + 2)
                } else {
                    BigInt::zero()
                }
            },
        )
    }

    /// Decides `a ∈ Im(1 - S)`.
    ///
    /// The preimage is forced up to a constant by `c_{j+1} = c_j - a_j`; it is
    /// bounded iff neither tail drifts, i.e. both tail period sums vanish.
    pub fn in_image_one_minus_s(&self) -> Membership {
        let left_sum: BigInt = self.left_period.iter().sum();
        let right_sum: BigInt = self.right_period.iter().sum();
        if !left_sum.is_zero() || !right_sum.is_zero() {
            return Membership {
                member: false,
                witness: None,
            };
        }
        let (pl, pr) = (self.left_period.len(), self.right_period.len());
        let lo = self.core_offset.min(0) - pl as i64;
        let hi = self.core_end().max(0);
        let from = lo - pl as i64;
        let to = hi + pr as i64;

        // c_0 = 0, c_{j+1} = c_j - a_j in both directions.
        let mut values = vec![BigInt::zero(); (to - from) as usize];
        let idx = |j: i64| (j - from) as usize;
        for j in 0..to - 1 {
            values[idx(j + 1)] = &values[idx(j)] - self.eval(j);
        }
        for j in (from..0).rev() {
            values[idx(j)] = &values[idx(j + 1)] + self.eval(j);
        }
        let witness = Self::tabulate(lo, hi, pl, pr, |j| values[idx(j)].clone());
        Membership {
            member: true,
            witness: Some(witness),
        }
    }

    /// Equality in `l∞(Z)_S`.
    pub fn coinv_equal(&self, other: &Self) -> bool {
        (self - other).in_image_one_minus_s().member
    }

    /// Divides the class of `a` by `n`: returns `(b, c)` with
    /// `a - n·b = (1 - S)c` and `0 <= c_j < n`.
    ///
    /// Runs the two-sided recursion from `c_0 = 0`. On each tail the state
    /// `c_j ∈ [0, n)` sampled once per tail period must recur, which closes
    /// the tails of `b` and `c`.
    pub fn divide_class(&self, n: u64) -> Result<DivisionWitness> {
        if n == 0 {
            return Err(Error::InvalidArgument("divisor must be positive".into()));
        }
        let nb = BigInt::from(n);
        let mut b: BTreeMap<i64, BigInt> = BTreeMap::new();
        let mut c: BTreeMap<i64, BigInt> = BTreeMap::new();
        c.insert(0, BigInt::zero());

        // Rightward: b_j = ceil((a_j - c_j) / n), c_{j+1} = -a_j + n b_j + c_j.
        let pr = self.right_period.len() as i64;
        let tail_r = self.core_end().max(0);
        let mut seen: HashMap<BigInt, i64> = HashMap::new();
        let mut j = 0i64;
        let (right_start, right_len) = loop {
            if j >= tail_r && (j - tail_r) % pr == 0 {
                let state = c[&j].clone();
                if let Some(&first) = seen.get(&state) {
                    break (first, j - first);
                }
                seen.insert(state, j);
            }
            let a = self.eval(j);
            let cj = &c[&j];
            let bj = (&a - cj).div_ceil(&nb);
            let next = -&a + &nb * &bj + cj;
            debug_assert!(!next.is_negative() && next < nb);
            b.insert(j, bj);
            c.insert(j + 1, next);
            j += 1;
        };

        // Leftward: b_k = floor((a_k + c_{k+1}) / n), c_k = a_k - n b_k + c_{k+1}.
        let pl = self.left_period.len() as i64;
        let tail_l = self.core_offset.min(0);
        let mut seen: HashMap<BigInt, i64> = HashMap::new();
        let mut m = 0i64;
        let (left_end, left_len) = loop {
            if m <= tail_l && (tail_l - m) % pl == 0 {
                let state = c[&m].clone();
                if let Some(&first) = seen.get(&state) {
                    break (first, first - m);
                }
                seen.insert(state, m);
            }
            let k = m - 1;
            let a = self.eval(k);
            let x = &a + &c[&m];
            let bk = x.div_floor(&nb);
            let ck = x - &nb * &bk;
            debug_assert!(!ck.is_negative() && ck < nb);
            b.insert(k, bk);
            c.insert(k, ck);
            m = k;
        };

        let build = |map: &BTreeMap<i64, BigInt>| {
            Self::tabulate(
                left_end,
                right_start,
                left_len as usize,
                right_len as usize,
                |j| map[&j].clone(),
            )
        };
        Ok(DivisionWitness {
            b: build(&b),
            c: build(&c),
        })
    }
}

impl std::ops::Add for &EventuallyPeriodicSeq {
    type Output = EventuallyPeriodicSeq;
    fn add(self, rhs: Self) -> EventuallyPeriodicSeq {
        self.pointwise(rhs, PointwiseOp::Add)
    }
}

impl std::ops::Sub for &EventuallyPeriodicSeq {
    type Output = EventuallyPeriodicSeq;
    fn sub(self, rhs: Self) -> EventuallyPeriodicSeq {
        self.pointwise(rhs, PointwiseOp::Sub)
    }
}

impl std::ops::Neg for &EventuallyPeriodicSeq {
    type Output = EventuallyPeriodicSeq;
    fn neg(self) -> EventuallyPeriodicSeq {
        self.scale(-1)
    }
}

impl fmt::Display for EventuallyPeriodicSeq {
    /// `(l…)* [offset: core…] (r…)*`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[BigInt]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        write!(
            f,
            "({})* [{}: {}] ({})*",
            join(&self.left_period),
            self.core_offset,
            join(&self.core),
            join(&self.right_period)
        )
    }
}
