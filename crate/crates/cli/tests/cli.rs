use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twoscale"))
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("twoscale-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn unknown_config_key_exits_2() {
    let d = scratch("badkey");
    let cfg = d.join("c.txt");
    fs::write(&cfg, "experiment=custom\nbogus=1\n").unwrap();
    let o = run(bin().args(["experiment", "--config"]).arg(&cfg));
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bad_flag_value_exits_2() {
    assert_eq!(run(bin().args(["theory", "--format", "json"])).status.code(), Some(2));
    assert_eq!(run(bin().args(["experiment", "nonsense"])).status.code(), Some(2));
}

#[test]
fn degenerate_field_exits_3() {
    let d = scratch("flat");
    let f = d.join("flat.csv");
    let mut s = String::from("t1,t2,value\n");
    for i in 0..8 {
        for j in 0..8 {
            s.push_str(&format!("{i},{j},1\n"));
        }
    }
    fs::write(&f, s).unwrap();
    let o = run(bin().arg("estimate").arg(&f));
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn fast_criterion_exits_0() {
    let o = run(bin().args(["verify", "--criterion", "1"]));
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("criterion  1 PASS"));
}

#[test]
fn simulate_then_estimate_agrees_across_formats() {
    let d = scratch("sim");
    let cfg = d.join("c.txt");
    fs::write(&cfg, "experiment=custom\nn=16\nparam=0.5\n").unwrap();
    let o = run(bin().args(["simulate", "--seed", "7", "--config"]).arg(&cfg).arg("--out").arg(&d));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let est = |p: PathBuf| {
        let o = run(bin().arg("estimate").arg(p).args(["--format", "csv"]));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    let a = est(d.join("field_n16_phi0.5_r0.rsf1"));
    let b = est(d.join("field_n16_phi0.5_r0.csv"));
    assert_eq!(a, b);
}

#[test]
fn experiment_rerun_is_byte_identical_and_config_round_trips() {
    let d = scratch("exp");
    let cfg = d.join("c.txt");
    fs::write(&cfg, "# small run\nexperiment=custom\nn=12\nn=16\nparam=0.4\nreps=20\n").unwrap();
    let go = |out: &str, threads: &str| {
        let o = run(bin()
            .args(["experiment", "--seed", "11", "--threads", threads, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(d.join(out)));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    go("a", "1");
    go("b", "0");
    let mut files: Vec<_> = fs::read_dir(d.join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    assert!(files.iter().any(|f| f.to_string_lossy().ends_with(".csv")));
    for f in &files {
        if f == "config.txt" {
            continue;
        }
        assert_eq!(fs::read(d.join("a").join(f)).unwrap(), fs::read(d.join("b").join(f)).unwrap(), "{f:?}");
    }
    let written = d.join("a").join("config.txt");
    let o = run(bin().args(["experiment", "--config"]).arg(&written).arg("--out").arg(d.join("c")));
    assert!(o.status.success());
    for f in &files {
        if f != "config.txt" {
            assert_eq!(fs::read(d.join("a").join(f)).unwrap(), fs::read(d.join("c").join(f)).unwrap(), "{f:?}");
        }
    }
}
