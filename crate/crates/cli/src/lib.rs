//! Command-line front end for `fpu-core`.
//!
//! [`run_command`] executes one invocation and returns its exit code and
//! captured output, so tests drive the same code path as the `fpu` binary.
//!
//! Exit codes: `0` success, `1` usage or validation error, `2` a numerical
//! check failed (non-unitary input, nonzero index, tolerance exceeded).

pub mod format;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use fpu_core::gnvw::{self, SynthParams, INDEX_TOL};
use fpu_core::opcore::CHECK_TOL;
use fpu_core::{EventuallyPeriodicSeq, Operator};

pub use format::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandResult {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] fpu_core::Error),
    /// A requested check ran and failed; the report is still printed.
    #[error("{0}")]
    Check(String),
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Core(e) if e.is_numerical() => 2,
            Failure::Check(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "fpu",
    version,
    about = "Finite propagation unitaries: GNVW index, block factorization, shift coinvariants"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    group: Group,
}

#[derive(Args, Debug)]
struct Global {
    /// One `key value` pair per line, no decoration.
    #[arg(long, global = true)]
    porcelain: bool,
    /// Override the tolerance of the command's numerical checks.
    #[arg(long, global = true, value_name = "X")]
    tol: Option<f64>,
    /// Worker threads for `op decompose`.
    #[arg(long, global = true, default_value_t = 1, value_name = "N")]
    jobs: usize,
}

#[derive(Subcommand, Debug)]
enum Group {
    /// Operator commands (`FPUOP 1` files).
    #[command(subcommand)]
    Op(OpCmd),
    /// Sequence commands (`EPSEQ 1` files).
    #[command(subcommand)]
    Seq(SeqCmd),
}

#[derive(Subcommand, Debug)]
enum OpCmd {
    /// GNVW index with its corner and trace cross-check.
    Index { file: PathBuf },
    /// Unitarity residual and structural data.
    Check { file: PathBuf },
    /// Product `A·B`.
    Mul {
        a: PathBuf,
        b: PathBuf,
        #[arg(short = 'o', value_name = "OUT")]
        out: Option<PathBuf>,
    },
    Adjoint {
        file: PathBuf,
        #[arg(short = 'o', value_name = "OUT")]
        out: Option<PathBuf>,
    },
    /// Factor an index-zero unitary as `V·W` with block-diagonal factors.
    Decompose {
        file: PathBuf,
        #[arg(short = 'o', num_args = 2, value_names = ["V", "W"])]
        out: Option<Vec<PathBuf>>,
    },
    /// Periodic operator agreeing with the input outside its patch.
    Retract {
        file: PathBuf,
        #[arg(short = 'o', value_name = "OUT")]
        out: Option<PathBuf>,
    },
    /// Split an end-periodic unitary into finite part times periodic part.
    Factor {
        file: PathBuf,
        #[arg(short = 'o', num_args = 2, value_names = ["FINITE", "PERIODIC"])]
        out: Option<Vec<PathBuf>>,
    },
    /// Seeded random unitary with a prescribed index.
    Synth {
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        index: i64,
        #[arg(long, default_value_t = 1)]
        period: usize,
        #[arg(long, default_value_t = 2)]
        block: usize,
        #[arg(long, default_value_t = 0)]
        patch: usize,
        #[arg(long)]
        seed: u64,
        #[arg(short = 'o', value_name = "OUT")]
        out: Option<PathBuf>,
    },
    /// Apply an operator to a `STATE 1` vector.
    Apply {
        op: PathBuf,
        state: PathBuf,
        #[arg(short = 'o', value_name = "OUT")]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum SeqCmd {
    /// Witnesses `b`, `c` with `a - n·b = (1-S)c` and `0 <= c < n`.
    Divide {
        file: PathBuf,
        n: u64,
        #[arg(short = 'o', num_args = 2, value_names = ["B", "C"])]
        out: Option<Vec<PathBuf>>,
    },
    /// Decide membership in `Im(1-S)`.
    Member {
        file: PathBuf,
        /// Write the witness `c` with `(1-S)c = a`, if any.
        #[arg(short = 'o', value_name = "OUT")]
        out: Option<PathBuf>,
    },
    /// Equality in the coinvariants.
    Equal { a: PathBuf, b: PathBuf },
    Reduce3 {
        file: PathBuf,
        #[arg(short = 'o', value_name = "OUT")]
        out: Option<PathBuf>,
    },
    Alpha {
        file: PathBuf,
        #[arg(short = 'o', num_args = 2, value_names = ["X", "Y"])]
        out: Option<Vec<PathBuf>>,
    },
    Blocksum {
        file: PathBuf,
        n: u64,
        #[arg(short = 'o', value_name = "OUT")]
        out: Option<PathBuf>,
    },
    /// `r_j = a_{j+k}`.
    Shift {
        file: PathBuf,
        #[arg(allow_negative_numbers = true)]
        k: i64,
        #[arg(short = 'o', value_name = "OUT")]
        out: Option<PathBuf>,
    },
    Add {
        a: PathBuf,
        b: PathBuf,
        #[arg(short = 'o', value_name = "OUT")]
        out: Option<PathBuf>,
    },
}

/// Ordered `key value` lines. The first line is the headline; in human mode
/// the remaining lines are indented under it.
#[derive(Default)]
struct Report {
    lines: Vec<(String, String)>,
    /// Verbatim payload (serialized files) printed after the report.
    payload: String,
}

impl Report {
    fn put(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.lines.push((key.to_string(), value.to_string()));
        self
    }

    fn float(&mut self, key: &str, value: f64) -> &mut Self {
        self.put(key, format::fmt_float(value))
    }

    fn render(&self, porcelain: bool) -> String {
        let mut out = String::new();
        for (n, (k, v)) in self.lines.iter().enumerate() {
            if !porcelain && n > 0 {
                out.push_str("  ");
            }
            out.push_str(k);
            out.push(' ');
            out.push_str(v);
            out.push('\n');
        }
        out.push_str(&self.payload);
        out
    }
}

/// Runs one invocation; `args` excludes the program name.
pub fn run_command<S: AsRef<str>>(args: &[S]) -> CommandResult {
    let argv = std::iter::once("fpu").chain(args.iter().map(|s| s.as_ref()));
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CommandResult { exit_code: 1, stdout: String::new(), stderr: text }
            } else {
                CommandResult { exit_code: 0, stdout: text, stderr: String::new() }
            };
        }
    };
    let mut report = Report::default();
    let outcome = match &cli.group {
        Group::Op(cmd) => run_op(cmd, &cli.global, &mut report),
        Group::Seq(cmd) => run_seq(cmd, &mut report),
    };
    let stdout = report.render(cli.global.porcelain);
    match outcome {
        Ok(()) => CommandResult { exit_code: 0, stdout, stderr: String::new() },
        Err(e) => CommandResult {
            exit_code: e.exit_code(),
            stdout,
            stderr: format!("error: {e}\n"),
        },
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|source| Failure::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|source| Failure::Io {
        path: path.display().to_string(),
        source,
    })
}

fn load_op(path: &Path) -> Result<Operator, Failure> {
    format::parse_operator(&read(path)?).map_err(|source| Failure::Parse {
        path: path.display().to_string(),
        source,
    })
}

fn load_seq(path: &Path) -> Result<EventuallyPeriodicSeq, Failure> {
    format::parse_seq(&read(path)?).map_err(|source| Failure::Parse {
        path: path.display().to_string(),
        source,
    })
}

/// Writes to `out` if given, otherwise appends the text to the report.
fn emit(report: &mut Report, out: Option<&PathBuf>, text: String) -> Result<(), Failure> {
    match out {
        Some(p) => write(p, &text),
        None => {
            report.payload.push_str(&text);
            Ok(())
        }
    }
}

fn emit_pair(out: Option<&Vec<PathBuf>>, first: String, second: String) -> Result<(), Failure> {
    if let Some(paths) = out {
        write(&paths[0], &first)?;
        write(&paths[1], &second)?;
    }
    Ok(())
}

fn require_unitary(u: &Operator, tol: f64) -> Result<(), Failure> {
    let res = u.unitarity_residual();
    if res > tol {
        return Err(Failure::Check(format!(
            "operator is not unitary: residual {res:e} exceeds {tol:e}"
        )));
    }
    Ok(())
}

fn run_op(cmd: &OpCmd, g: &Global, report: &mut Report) -> Result<(), Failure> {
    let tol = g.tol.unwrap_or(CHECK_TOL);
    match cmd {
        OpCmd::Index { file } => {
            let u = load_op(file)?;
            require_unitary(&u, CHECK_TOL)?;
            let r = gnvw::index(&u, g.tol.unwrap_or(INDEX_TOL))?;
            report
                .put("index", r.rounded)
                .float("raw", r.raw)
                .float("deviation", r.deviation)
                .float("hs-minus-plus", r.hs_minus_plus)
                .float("hs-plus-minus", r.hs_plus_minus)
                .float("trace-check", r.trace_check);
        }
        OpCmd::Check { file } => {
            let u = load_op(file)?;
            let res = u.unitarity_residual();
            report
                .put("unitary", res <= tol)
                .float("residual", res)
                .put("period", u.period())
                .put("band", u.band())
                .put("patch-radius", u.radius())
                .put("propagation", u.propagation(CHECK_TOL));
            if res > tol {
                return Err(Failure::Check(format!(
                    "unitarity residual {res:e} exceeds {tol:e}"
                )));
            }
        }
        OpCmd::Mul { a, b, out } => {
            let p = load_op(a)?.multiply(&load_op(b)?);
            emit(report, out.as_ref(), format::serialize_operator(&p))?;
        }
        OpCmd::Adjoint { file, out } => {
            let a = load_op(file)?.adjoint();
            emit(report, out.as_ref(), format::serialize_operator(&a))?;
        }
        OpCmd::Decompose { file, out } => {
            let u = load_op(file)?;
            let d = gnvw::decompose_with_jobs(&u, tol, g.jobs.max(1))?;
            report
                .put("block-size", d.block_size)
                .float("residual", d.residual)
                .float("block-leakage", d.block_leakage)
                .float("v-unitarity", d.v_unitarity)
                .float("w-unitarity", d.w_unitarity);
            emit_pair(
                out.as_ref(),
                format::serialize_operator(&d.v),
                format::serialize_operator(&d.w),
            )?;
        }
        OpCmd::Retract { file, out } => {
            let u = load_op(file)?;
            let r = gnvw::retract_periodic(&u.to_end_periodic(), tol)?;
            emit(report, out.as_ref(), format::serialize_operator(&r.into()))?;
        }
        OpCmd::Factor { file, out } => {
            let u = load_op(file)?;
            require_unitary(&u, tol)?;
            let s = gnvw::factor_end_periodic(&u, tol)?;
            report
                .put("window", s.window)
                .float("outside-deviation", s.outside_deviation)
                .float("residual", s.residual);
            emit_pair(
                out.as_ref(),
                format::serialize_operator(&s.finite_part.clone().into()),
                format::serialize_operator(&s.periodic_part.clone().into()),
            )?;
        }
        OpCmd::Synth {
            index,
            period,
            block,
            patch,
            seed,
            out,
        } => {
            let u = gnvw::synth_random(SynthParams {
                target_index: *index,
                period: *period,
                block_size: *block,
                patch_blocks: *patch,
                seed: *seed,
            })?;
            emit(report, out.as_ref(), format::serialize_operator(&u))?;
        }
        OpCmd::Apply { op, state, out } => {
            let u = load_op(op)?;
            let psi = format::parse_state(&read(state)?).map_err(|source| Failure::Parse {
                path: state.display().to_string(),
                source,
            })?;
            emit(report, out.as_ref(), format::serialize_state(&u.apply(&psi)))?;
        }
    }
    Ok(())
}

fn run_seq(cmd: &SeqCmd, report: &mut Report) -> Result<(), Failure> {
    match cmd {
        SeqCmd::Divide { file, n, out } => {
            let w = load_seq(file)?.divide_class(*n)?;
            report.put("quotient", &w.b).put("witness", &w.c);
            emit_pair(out.as_ref(), format::serialize_seq(&w.b), format::serialize_seq(&w.c))?;
        }
        SeqCmd::Member { file, out } => {
            let m = load_seq(file)?.in_image_one_minus_s();
            report.put("member", m.member);
            if let Some(c) = &m.witness {
                report.put("witness", c);
                if let Some(p) = out {
                    write(p, &format::serialize_seq(c))?;
                }
            }
        }
        SeqCmd::Equal { a, b } => {
            let eq = load_seq(a)?.coinv_equal(&load_seq(b)?);
            report.put("equal", eq);
        }
        SeqCmd::Reduce3 { file, out } => {
            let r = load_seq(file)?.bar_reduce3();
            emit(report, out.as_ref(), format::serialize_seq(&r))?;
        }
        SeqCmd::Alpha { file, out } => {
            let (x, y) = load_seq(file)?.alpha_map();
            report.put("x", &x).put("y", &y);
            emit_pair(out.as_ref(), format::serialize_seq(&x), format::serialize_seq(&y))?;
        }
        SeqCmd::Blocksum { file, n, out } => {
            let r = load_seq(file)?.block_sum(*n)?;
            emit(report, out.as_ref(), format::serialize_seq(&r))?;
        }
        SeqCmd::Shift { file, k, out } => {
            let r = load_seq(file)?.shift(*k);
            emit(report, out.as_ref(), format::serialize_seq(&r))?;
        }
        SeqCmd::Add { a, b, out } => {
            let r = &load_seq(a)? + &load_seq(b)?;
            emit(report, out.as_ref(), format::serialize_seq(&r))?;
        }
    }
    Ok(())
}
