use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use untangle_cli::{file_to_record, from_json_str, to_json_string, InstanceFile, RecordFile};
use untangle_core::phi_l;

fn untangle(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_untangle"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn untangle")
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn gen_run_audit_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = untangle(
        dir,
        &[
            "gen", "--kind", "random", "--points", "10", "--seed", "7", "--out",
            "instance.json",
        ],
    );
    assert_exit(&out, 0);

    // The instance file round-trips bit-exactly through the typed form.
    let text = fs::read_to_string(dir.join("instance.json")).unwrap();
    let inst: InstanceFile = from_json_str(&text, "instance.json").unwrap();
    assert_eq!(to_json_string(&inst), text);

    let out = untangle(
        dir,
        &[
            "run",
            "--input",
            "instance.json",
            "--record",
            "record.json",
            "--csv",
            "record.csv",
        ],
    );
    assert_exit(&out, 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("steps="), "run summary missing: {stdout}");
    assert!(stdout.contains("terminated=true"));

    let out = untangle(dir, &["audit", "--record", "record.json"]);
    assert_exit(&out, 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));

    // Record files round-trip bit-exactly as well.
    let text = fs::read_to_string(dir.join("record.json")).unwrap();
    let rf: RecordFile = from_json_str(&text, "record.json").unwrap();
    assert_eq!(to_json_string(&rf), text);
}

#[test]
fn identical_inputs_produce_identical_bytes() {
    let tmp_a = tempfile::tempdir().unwrap();
    let tmp_b = tempfile::tempdir().unwrap();
    for dir in [tmp_a.path(), tmp_b.path()] {
        assert_exit(
            &untangle(
                dir,
                &[
                    "gen", "--kind", "nearconvex", "--interior", "2", "--points", "12",
                    "--seed", "41", "--out", "i.json",
                ],
            ),
            0,
        );
        assert_exit(
            &untangle(
                dir,
                &[
                    "run",
                    "--input",
                    "i.json",
                    "--strategy",
                    "random",
                    "--seed",
                    "5",
                    "--record",
                    "r.json",
                    "--csv",
                    "r.csv",
                ],
            ),
            0,
        );
        assert_exit(
            &untangle(dir, &["render", "--record", "r.json", "--step", "0", "--out", "r.svg"]),
            0,
        );
    }
    for name in ["i.json", "r.json", "r.csv", "r.svg"] {
        let a = fs::read(tmp_a.path().join(name)).unwrap();
        let b = fs::read(tmp_b.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn csv_drop_column_sums_to_potential_difference() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_exit(
        &untangle(
            dir,
            &["gen", "--kind", "random", "--points", "12", "--seed", "19", "--out", "i.json"],
        ),
        0,
    );
    assert_exit(
        &untangle(
            dir,
            &["run", "--input", "i.json", "--record", "r.json", "--csv", "r.csv"],
        ),
        0,
    );
    let csv = fs::read_to_string(dir.join("r.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("step,flip_key,phi_x,phi_l,drop,distinct_so_far")
    );
    let dropped: i64 = lines
        .map(|l| l.split(',').nth(4).unwrap().parse::<i64>().unwrap())
        .sum();

    let text = fs::read_to_string(dir.join("r.json")).unwrap();
    let rf: RecordFile = from_json_str(&text, "r.json").unwrap();
    let rec = file_to_record(&rf, "r.json").unwrap();
    let initial = phi_l(rec.initial(), rec.line_set()).phi_l_total as i64;
    let final_c = rec.final_configuration().unwrap();
    let fin = phi_l(&final_c, rec.line_set()).phi_l_total as i64;
    assert_eq!(dropped, initial - fin);
}

#[test]
fn audit_rejects_corrupted_record() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_exit(
        &untangle(
            dir,
            &["gen", "--kind", "maxcross", "--points", "8", "--seed", "3", "--out", "i.json"],
        ),
        0,
    );
    assert_exit(
        &untangle(dir, &["run", "--input", "i.json", "--record", "r.json"]),
        0,
    );
    let text = fs::read_to_string(dir.join("r.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let steps = v["steps"].as_array_mut().unwrap();
    assert!(!steps.is_empty(), "maxcross run produced no steps");
    let phi = steps[0]["phi_x"].as_u64().unwrap();
    steps[0]["phi_x"] = serde_json::json!(phi + 1);
    fs::write(dir.join("bad.json"), serde_json::to_string_pretty(&v).unwrap()).unwrap();

    let out = untangle(dir, &["audit", "--record", "bad.json"]);
    assert_exit(&out, 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    // Unknown generator kind: our own flag validation.
    assert_exit(
        &untangle(dir, &["gen", "--kind", "bogus", "--points", "4"]),
        2,
    );
    // Missing source: reduce needs --input or --with-sequence.
    assert_exit(&untangle(dir, &["reduce", "--to", "rb"]), 2);
    // Unknown flag: clap's own usage error.
    assert_exit(&untangle(dir, &["gen", "--nope"]), 2);
}

#[test]
fn missing_file_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    assert_exit(
        &untangle(tmp.path(), &["run", "--input", "no-such-file.json"]),
        1,
    );
}

#[test]
fn oracle_guard_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_exit(
        &untangle(
            dir,
            &["gen", "--kind", "random", "--points", "12", "--seed", "1", "--out", "i.json"],
        ),
        0,
    );
    let out = untangle(dir, &["oracle", "--input", "i.json", "--mode", "longest"]);
    assert_exit(&out, 3);
}

#[test]
fn reduce_transforms_recorded_sequence() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_exit(
        &untangle(
            dir,
            &["gen", "--kind", "random", "--points", "8", "--seed", "23", "--out", "i.json"],
        ),
        0,
    );
    assert_exit(
        &untangle(dir, &["run", "--input", "i.json", "--record", "r.json"]),
        0,
    );
    assert_exit(
        &untangle(
            dir,
            &[
                "reduce",
                "--to",
                "rb",
                "--with-sequence",
                "r.json",
                "--out",
                "reduced.json",
                "--record-out",
                "rb.json",
            ],
        ),
        0,
    );

    let reduced: InstanceFile = from_json_str(
        &fs::read_to_string(dir.join("reduced.json")).unwrap(),
        "reduced.json",
    )
    .unwrap();
    assert_eq!(reduced.version, "rb");

    let src: RecordFile =
        from_json_str(&fs::read_to_string(dir.join("r.json")).unwrap(), "r.json").unwrap();
    let tgt: RecordFile =
        from_json_str(&fs::read_to_string(dir.join("rb.json")).unwrap(), "rb.json").unwrap();
    assert_eq!(tgt.steps.len(), 2 * src.steps.len());

    // The transformed record is a valid record in its own right.
    let out = untangle(dir, &["audit", "--record", "rb.json"]);
    assert_exit(&out, 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
}

#[test]
fn render_covers_instances_and_steps() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_exit(
        &untangle(
            dir,
            &["gen", "--kind", "maxcross", "--points", "6", "--seed", "2", "--out", "i.json"],
        ),
        0,
    );
    let out = untangle(dir, &["render", "--input", "i.json"]);
    assert_exit(&out, 0);
    let svg = String::from_utf8_lossy(&out.stdout);
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<line").count(), 3);
    assert_eq!(svg.matches("<circle").count(), 6);

    assert_exit(
        &untangle(dir, &["run", "--input", "i.json", "--record", "r.json"]),
        0,
    );
    assert_exit(
        &untangle(dir, &["render", "--record", "r.json", "--step", "1", "--out", "s.svg"]),
        0,
    );
    assert!(fs::read_to_string(dir.join("s.svg")).unwrap().starts_with("<svg"));

    let out = untangle(dir, &["render", "--record", "r.json", "--step", "999"]);
    assert_exit(&out, 1);
}

#[test]
fn oracle_fixture_values_are_stable() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    // Frozen brute-force values: (file, longest, shortest).
    let frozen = [
        ("fx01_mm_single.json", 0, 0),
        ("fx02_mm_cross.json", 1, 1),
        ("fx03_mm_stacked.json", 0, 0),
        ("fx04_mm_spectator.json", 1, 1),
        ("fx05_mm_hexagon.json", 3, 1),
        ("fx06_rb_cross.json", 1, 1),
        ("fx07_rb_ladder.json", 2, 2),
        ("fx08_tsp_triangle.json", 0, 0),
        ("fx09_g_multi.json", 1, 1),
        ("fx10_g_fan.json", 2, 1),
    ];
    for (name, longest, shortest) in frozen {
        let path = dir.join(name);
        let out = untangle(
            &dir,
            &["oracle", "--input", path.to_str().unwrap(), "--mode", "longest"],
        );
        assert_exit(&out, 0);
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(v["value"].as_u64(), Some(longest), "{name} longest");
        assert_eq!(
            v["witness"].as_array().map(|w| w.len() as u64),
            Some(longest),
            "{name} witness length"
        );

        let out = untangle(
            &dir,
            &["oracle", "--input", path.to_str().unwrap(), "--mode", "shortest"],
        );
        assert_exit(&out, 0);
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(v["value"].as_u64(), Some(shortest), "{name} shortest");
    }
}
