//! Line-oriented text formats for operators, sequences and state vectors.
//!
//! ```text
//! FPUOP 1            EPSEQ 1              STATE 1
//! period 2           left 1 -1            amp 0 1.0 0.0
//! band 1             core -3 4 0 7        amp 3 0.0 -0.5
//! patch-radius 1     right 0              END
//! bg 0 1 1.0 0.0     END
//! patch -1 0 0.0 1.0
//! END
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Absent entries are
//! zero. Floats are written in shortest round-trip form, so
//! `parse(serialize(x)) == x` exactly.

use std::fmt::Write as _;

use fpu_core::{
    Complex64, EndPeriodicOperator, EventuallyPeriodicSeq, Operator, PeriodicBandOperator,
    StateVector,
};
use num_bigint::BigInt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

type Parsed<T> = Result<T, ParseError>;

fn fail<T>(line: usize, message: impl Into<String>) -> Parsed<T> {
    Err(ParseError {
        line,
        message: message.into(),
    })
}

/// Non-blank, non-comment lines with 1-based numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(n, raw)| {
        let words: Vec<&str> = raw.split_whitespace().collect();
        match words.first() {
            None => None,
            Some(w) if w.starts_with('#') => None,
            Some(_) => Some((n + 1, words)),
        }
    })
}

fn number<T: std::str::FromStr>(line: usize, what: &str, word: &str) -> Parsed<T> {
    word.parse()
        .or_else(|_| fail(line, format!("invalid {what} `{word}`")))
}

fn arity(line: usize, words: &[&str], n: usize) -> Parsed<()> {
    if words.len() != n {
        return fail(
            line,
            format!("`{}` expects {} fields, found {}", words[0], n - 1, words.len() - 1),
        );
    }
    Ok(())
}

/// Shared envelope: header on the first content line, `END` on the last.
fn body<'a>(text: &'a str, header: &str) -> Parsed<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = content_lines(text).collect::<Vec<_>>();
    let Some((first, words)) = lines.first() else {
        return fail(1, format!("empty input, expected `{header}`"));
    };
    if words.join(" ") != header {
        return fail(*first, format!("expected header `{header}`"));
    }
    let last_line = text.lines().count().max(1);
    match lines.last() {
        Some((_, w)) if lines.len() > 1 && w.as_slice() == ["END"] => {}
        _ => return fail(last_line, "missing `END`"),
    }
    lines.remove(0);
    lines.pop();
    if let Some((n, _)) = lines.iter().find(|(_, w)| w.as_slice() == ["END"]) {
        return fail(*n, "content after `END`");
    }
    Ok(lines)
}

/// Shortest round-trip decimal, with `-0.0` written as `0.0`.
pub fn fmt_float(x: f64) -> String {
    format!("{:?}", if x == 0.0 { 0.0 } else { x })
}

fn fmt_complex(z: Complex64) -> String {
    format!("{} {}", fmt_float(z.re), fmt_float(z.im))
}

pub fn parse_operator(text: &str) -> Parsed<Operator> {
    let lines = body(text, "FPUOP 1")?;
    let mut period = None;
    let mut band = None;
    let mut radius = None;
    let mut bg = Vec::new();
    let mut patch = Vec::new();
    for (n, w) in lines {
        let set = |slot: &mut Option<usize>, w: &[&str]| -> Parsed<()> {
            arity(n, w, 2)?;
            if slot.is_some() {
                return fail(n, format!("`{}` given twice", w[0]));
            }
            *slot = Some(number(n, w[0], w[1])?);
            Ok(())
        };
        match w[0] {
            "period" => set(&mut period, &w)?,
            "band" => set(&mut band, &w)?,
            "patch-radius" => set(&mut radius, &w)?,
            "bg" => {
                arity(n, &w, 5)?;
                let i: i64 = number(n, "row", w[1])?;
                let d: i64 = number(n, "diagonal", w[2])?;
                let z = Complex64::new(number(n, "real part", w[3])?, number(n, "imaginary part", w[4])?);
                bg.push((n, i, d, z));
            }
            "patch" => {
                arity(n, &w, 5)?;
                let i: i64 = number(n, "row", w[1])?;
                let j: i64 = number(n, "column", w[2])?;
                let z = Complex64::new(number(n, "real part", w[3])?, number(n, "imaginary part", w[4])?);
                patch.push((n, i, j, z));
            }
            other => return fail(n, format!("unknown keyword `{other}`")),
        }
    }
    let last = text.lines().count().max(1);
    let period = period.map_or_else(|| fail(last, "missing `period`"), Ok)?;
    let band = band.map_or_else(|| fail(last, "missing `band`"), Ok)?;
    let radius = radius.unwrap_or(0);
    if period == 0 {
        return fail(last, "period must be positive");
    }

    let mut seen = std::collections::BTreeSet::new();
    for &(n, i, d, _) in &bg {
        if i < 0 || i >= period as i64 {
            return fail(n, format!("row {i} outside 0..{period}"));
        }
        if d.unsigned_abs() as usize > band {
            return fail(n, format!("diagonal {d} violates band {band}"));
        }
        if !seen.insert((i, d)) {
            return fail(n, format!("duplicate background entry ({i}, {d})"));
        }
    }
    let background = PeriodicBandOperator::new(
        period,
        band,
        bg.iter().map(|&(_, i, d, z)| (i as usize, d, z)),
    )
    .or_else(|e| fail(last, e.to_string()))?;

    let r = radius as i64;
    let mut seen = std::collections::BTreeSet::new();
    for &(n, i, j, _) in &patch {
        if !(-r..r).contains(&i) || !(-r..r).contains(&j) {
            return fail(n, format!("patch entry ({i}, {j}) outside window [-{r}, {r})"));
        }
        if !seen.insert((i, j)) {
            return fail(n, format!("duplicate patch entry ({i}, {j})"));
        }
    }
    if radius == 0 {
        return Ok(Operator::Periodic(background));
    }
    let op = EndPeriodicOperator::new(background, radius, patch.iter().map(|&(_, i, j, z)| (i, j, z)))
        .or_else(|e| fail(last, e.to_string()))?;
    Ok(Operator::EndPeriodic(op))
}

pub fn serialize_operator(op: &Operator) -> String {
    let bg = op.background();
    let mut out = String::from("FPUOP 1\n");
    writeln!(out, "period {}", bg.period()).unwrap();
    writeln!(out, "band {}", bg.band()).unwrap();
    writeln!(out, "patch-radius {}", op.radius()).unwrap();
    for (i, d, z) in bg.nonzero_entries() {
        writeln!(out, "bg {i} {d} {}", fmt_complex(z)).unwrap();
    }
    if let Operator::EndPeriodic(e) = op {
        for (i, j, z) in e.patch_entries() {
            writeln!(out, "patch {i} {j} {}", fmt_complex(z)).unwrap();
        }
    }
    out.push_str("END\n");
    out
}

fn integers(n: usize, words: &[&str]) -> Parsed<Vec<BigInt>> {
    words.iter().map(|w| number(n, "integer", w)).collect()
}

pub fn parse_seq(text: &str) -> Parsed<EventuallyPeriodicSeq> {
    let lines = body(text, "EPSEQ 1")?;
    let mut left = None;
    let mut core = None;
    let mut right = None;
    for (n, w) in lines {
        let slot = match w[0] {
            "left" => &mut left,
            "right" => &mut right,
            "core" => &mut core,
            other => return fail(n, format!("unknown keyword `{other}`")),
        };
        if slot.is_some() {
            return fail(n, format!("`{}` given twice", w[0]));
        }
        if w[0] == "core" {
            let offset: i64 = match w.get(1) {
                Some(o) => number(n, "offset", o)?,
                None => 0,
            };
            *slot = Some((n, offset, integers(n, w.get(2..).unwrap_or(&[]))?));
        } else {
            if w.len() == 1 {
                return fail(n, format!("`{}` period is empty", w[0]));
            }
            *slot = Some((n, 0, integers(n, &w[1..])?));
        }
    }
    let last = text.lines().count().max(1);
    let (_, _, left) = left.map_or_else(|| fail(last, "missing `left`"), Ok)?;
    let (_, _, right) = right.map_or_else(|| fail(last, "missing `right`"), Ok)?;
    let (_, offset, core) = core.unwrap_or((last, 0, Vec::new()));
    EventuallyPeriodicSeq::new(left, offset, core, right).or_else(|e| fail(last, e.to_string()))
}

pub fn serialize_seq(a: &EventuallyPeriodicSeq) -> String {
    let join = |v: &[BigInt]| v.iter().map(|x| format!(" {x}")).collect::<String>();
    format!(
        "EPSEQ 1\nleft{}\ncore {}{}\nright{}\nEND\n",
        join(a.left_period()),
        a.core_offset(),
        join(a.core()),
        join(a.right_period())
    )
}

pub fn parse_state(text: &str) -> Parsed<StateVector> {
    let lines = body(text, "STATE 1")?;
    let mut amps = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (n, w) in lines {
        if w[0] != "amp" {
            return fail(n, format!("unknown keyword `{}`", w[0]));
        }
        arity(n, &w, 4)?;
        let i: i64 = number(n, "site", w[1])?;
        if !seen.insert(i) {
            return fail(n, format!("duplicate amplitude at site {i}"));
        }
        let z = Complex64::new(number(n, "real part", w[2])?, number(n, "imaginary part", w[3])?);
        amps.push((i, z));
    }
    Ok(StateVector::new(amps))
}

/// Writes every stored site, including exact zeros produced by cancellation.
pub fn serialize_state(psi: &StateVector) -> String {
    let mut out = String::from("STATE 1\n");
    for (i, z) in psi.iter() {
        writeln!(out, "amp {i} {}", fmt_complex(z)).unwrap();
    }
    out.push_str("END\n");
    out
}
