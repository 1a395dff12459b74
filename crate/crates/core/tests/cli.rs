//! The command-line front end: stage selection and exit codes.

use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_skillpanel"));
    c.env("RUST_LOG", "error").env_remove("SKILLPANEL_OUT");
    c
}

fn code(c: &mut Command) -> i32 {
    c.output().unwrap().status.code().unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    assert_eq!(code(bin().arg("extract").arg("--out").arg(&out)), 3);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[taxonomy]\ntau = 2.0\n").unwrap();
    assert_eq!(code(bin().arg("all").arg("--config").arg(&bad).arg("--out").arg(&out)), 2);

    std::fs::write(&bad, "[nonsense]\nx = 1\n").unwrap();
    assert_eq!(code(bin().arg("train").arg("--config").arg(&bad).arg("--out").arg(&out)), 2);

    assert_eq!(code(bin().arg("--config").arg(dir.path().join("absent.toml")).arg("stability")), 2);
    assert_eq!(code(bin().args(["train", "--stage", "panel"]).arg("--out").arg(&out)), 2);
    assert_eq!(code(bin().args(["--stage", "nope"]).arg("--out").arg(&out)), 2);
    assert_eq!(code(&mut bin()), 2);
}

#[test]
fn stage_flag_and_out_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let from_env = dir.path().join("env");
    let from_flag = dir.path().join("flag");
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, "[fixture]\nfirms = 10\nyears = 2\nper_level = 3\nboilerplate = 50\n").unwrap();

    let run = bin()
        .args(["--stage", "gen-data", "--config"])
        .arg(&cfg)
        .env("SKILLPANEL_OUT", &from_env)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(from_env.join("gen-data/manifest.json").exists());

    let run = bin()
        .args(["gen-data", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&from_flag)
        .env("SKILLPANEL_OUT", &from_env)
        .output()
        .unwrap();
    assert!(run.status.success());
    assert!(from_flag.join("gen-data/postings.jsonl").exists());

    // the second invocation against the same directory is a no-op
    let again = bin().arg("gen-data").arg("--config").arg(&cfg).arg("--out").arg(&from_flag).output().unwrap();
    assert_eq!(String::from_utf8_lossy(&again.stdout).trim(), "gen-data: up to date");
}
