//! Golden-file runner shared by the golden and acceptance targets.
//!
//! Every case runs one command against `tests/fixtures` and compares exit
//! code, stdout and stderr with `tests/golden/<name>.txt`.

#![allow(dead_code)]

use std::path::PathBuf;

use fpu_cli::run_command;

pub const CASES: &[(&str, &str)] = &[
    ("index_shift", "op index F/shift.op"),
    ("index_shift_porcelain", "op index F/shift.op --porcelain"),
    ("index_shift_inv", "op index F/shift_inv.op --porcelain"),
    ("index_shift3", "op index F/shift3.op --porcelain"),
    ("index_identity", "op index F/identity.op --porcelain"),
    ("index_swap", "op index F/swap.op --porcelain"),
    ("index_walk", "op index F/walk.op --porcelain"),
    ("index_embedded_swap", "op index F/embedded_swap.op --porcelain"),
    ("index_patched_shift", "op index F/patched_shift.op --porcelain"),
    ("index_non_unitary", "op index F/half_shift.op"),
    ("check_root_swap", "op check F/root_swap.op --porcelain"),
    ("check_zero", "op check F/zero.op --porcelain"),
    ("check_walk", "op check F/walk.op"),
    ("parse_bad_band", "op check F/bad_band.op"),
    ("parse_duplicate", "op check F/duplicate.op"),
    ("parse_no_end", "op index F/no_end.op"),
    ("mul_shift_shift_inv", "op mul F/shift.op F/shift_inv.op"),
    ("mul_root_swap_squared", "op mul F/root_swap.op F/root_swap.op"),
    ("mul_walk", "op mul F/root_swap.op F/cshift.op"),
    ("mul_end_periodic", "op mul F/embedded_swap.op F/shift.op"),
    ("adjoint_root_swap", "op adjoint F/root_swap.op"),
    ("adjoint_patched_shift", "op adjoint F/patched_shift.op"),
    ("decompose_shift", "op decompose F/shift.op -o v.op w.op"),
    ("decompose_swap", "op decompose F/swap.op --porcelain"),
    ("decompose_cshift", "op decompose F/cshift.op --porcelain"),
    ("decompose_embedded_swap", "op decompose F/embedded_swap.op --porcelain"),
    ("retract_patched_shift", "op retract F/patched_shift.op"),
    ("retract_embedded_swap", "op retract F/embedded_swap.op"),
    ("factor_patched_shift", "op factor F/patched_shift.op --porcelain"),
    ("apply_shift", "op apply F/shift.op F/pulse.st"),
    ("apply_root_swap", "op apply F/root_swap.op F/pulse.st"),
    ("synth_missing_seed", "op synth --index 1"),
    ("member_const1", "seq member F/const1.seq"),
    ("member_delta0", "seq member F/delta0.seq --porcelain"),
    ("member_dipole", "seq member F/dipole.seq --porcelain"),
    ("member_step", "seq member F/step.seq --porcelain"),
    ("member_big", "seq member F/big.seq --porcelain"),
    ("equal_delta_shifted", "seq equal F/delta0.seq F/dipole.seq --porcelain"),
    ("equal_const_delta", "seq equal F/const1.seq F/delta0.seq --porcelain"),
    ("divide_const1", "seq divide F/const1.seq 3 --porcelain"),
    ("divide_mixed", "seq divide F/mixed.seq 4 --porcelain"),
    ("divide_big", "seq divide F/big.seq 7 --porcelain"),
    ("reduce3_mixed", "seq reduce3 F/mixed.seq"),
    ("alpha_alternating", "seq alpha F/alternating.seq --porcelain"),
    ("alpha_mixed", "seq alpha F/mixed.seq --porcelain"),
    ("blocksum_mixed", "seq blocksum F/mixed.seq 2"),
    ("shift_mixed", "seq shift F/mixed.seq -3"),
    ("add_step_alternating", "seq add F/step.seq F/alternating.seq"),
    ("parse_empty_period", "seq member F/empty_left.seq"),
    ("unknown_command", "op frobnicate F/shift.op"),
    ("missing_file", "seq member F/nonexistent.seq"),
];

pub fn render(code: i32, stdout: &str, stderr: &str) -> String {
    format!("exit {code}\n--- stdout\n{stdout}--- stderr\n{stderr}")
}

/// Runs every case; returns the mismatches. With `update` set the expected
/// files are rewritten instead.
pub fn run_golden_suite(update: bool) -> Vec<String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests");
    let scratch = tempfile::tempdir().unwrap();
    let mut failures = Vec::new();
    for (name, line) in CASES {
        // Fixture paths stay relative so messages do not depend on the checkout.
        let args: Vec<String> = line
            .split_whitespace()
            .map(|w| match w {
                "v.op" | "w.op" => scratch.path().join(w).display().to_string(),
                _ => w.replacen("F/", "tests/fixtures/", 1),
            })
            .collect();
        let r = run_command(&args);
        let actual = render(r.exit_code, &r.stdout, &r.stderr);
        let path = dir.join("golden").join(format!("{name}.txt"));
        if update {
            std::fs::write(&path, &actual).unwrap();
            continue;
        }
        match std::fs::read_to_string(&path) {
            Ok(expected) if expected == actual => {}
            Ok(expected) => {
                failures.push(format!("{name}:\n--- expected\n{expected}--- actual\n{actual}"))
            }
            Err(_) => failures.push(format!("{name}: missing golden file {}", path.display())),
        }
    }
    failures
}

/// Fixture files referenced by the suite.
pub fn fixture_count() -> usize {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    std::fs::read_dir(dir).unwrap().count()
}
