use std::path::{Path, PathBuf};
use std::process::Command;

use uam_contact::harness::{self, EventKind, LogRow, RunLog, Scenario};

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn short(sc: Scenario) -> Scenario {
    Scenario { duration: 6.0, ..sc }
}

#[test]
fn shipped_scenarios_load_and_match_builders() {
    let pairs = [
        ("exp1_slow.toml", Scenario::exp1_slow()),
        ("exp1_fast.toml", Scenario::exp1_fast()),
        ("exp2_vertical.toml", Scenario::exp2_vertical()),
        ("exp2_tilted.toml", Scenario::exp2_tilted()),
    ];
    for (file, built) in pairs {
        let loaded = Scenario::load(&scenario_dir().join(file)).unwrap();
        assert_eq!(loaded, built, "{file}");
    }
}

#[test]
fn replay_is_bit_identical() {
    let sc = short(Scenario::exp1_fast());
    let a = harness::run(&sc).unwrap();
    let b = harness::run(&sc).unwrap();
    let (mut ca, mut cb) = (Vec::new(), Vec::new());
    a.write_csv(&mut ca).unwrap();
    b.write_csv(&mut cb).unwrap();
    assert_eq!(ca, cb);
    assert_eq!(a.events, b.events);

    let other = harness::run(&Scenario { seed: sc.seed + 1, ..sc }).unwrap();
    assert_ne!(other.rows, a.rows);
}

#[test]
fn logs_pass_schema_checks() {
    for sc in [Scenario::exp1_slow(), Scenario::exp2_tilted()] {
        let log = harness::run(&short(sc)).unwrap();
        assert!(log.rows.windows(2).all(|w| w[1].t > w[0].t));
        assert!(log.rows.iter().all(LogRow::is_finite));
        let dt = log.rows[1].t - log.rows[0].t;
        assert!((dt - 0.002).abs() < 1e-12);

        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), LogRow::HEADER.join(","));
        assert!(lines.all(|l| l.split(',').count() == LogRow::HEADER.len()));

        let back = RunLog::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.len(), log.rows.len());
        assert_eq!(back[10], log.rows[10]);
    }
}

#[test]
fn contact_is_made_and_held() {
    let log = harness::run(&short(Scenario::exp1_slow())).unwrap();
    let first = log.events.iter().find(|e| e.kind == EventKind::ContactMade).expect("contact");
    // 0.15 m stand-off at 0.1 m/s
    assert!(first.t > 1.0 && first.t < 3.0, "{}", first.t);
    assert_eq!(log.rows.last().unwrap().mode, 1);
    assert!(harness::metrics(&log, 3.0).provenance.values().sum::<usize>() > 0);
}

#[test]
fn sweep_matches_sequential_runs() {
    let scs = vec![short(Scenario::exp1_slow()), short(Scenario::exp2_vertical())];
    let dir = tempfile::tempdir().unwrap();
    let results = harness::sweep(&scs, Some(dir.path()), 3.0);
    for (sc, r) in scs.iter().zip(&results) {
        assert_eq!(r.scenario, sc.name);
        let seq = harness::metrics(&harness::run(sc).unwrap(), 3.0);
        assert_eq!(r.outcome.as_ref().unwrap(), &seq);
        assert!(dir.path().join(format!("{}.csv", sc.name)).exists());
        assert!(dir.path().join(format!("{}.events.csv", sc.name)).exists());
    }
}

#[test]
fn invalid_scenarios_rejected() {
    assert!(Scenario::from_toml("duration = -1.0").is_err());
    assert!(Scenario::from_toml("[controller]\ncontrol_rate_hz = 5000.0").is_err());
    assert!(Scenario::from_toml("[gain_box]\nk_f_min = 2.0\nk_f_max = 1.0\nb_f_min = 10.0\nb_f_max = 40.0").is_err());
    assert!(Scenario::from_toml("[motion]\nkind = \"slide\"\ndirection = [0.0, 0.0]\nspeed = 0.1").is_err());
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uam-contact"))
}

#[test]
fn cli_run_then_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("s.toml");
    std::fs::write(&sc, short(Scenario::exp1_slow()).to_toml()).unwrap();
    let out = dir.path().join("out");
    let st = cli().arg("run").arg(&sc).arg("--out").arg(&out).args(["--seed", "7", "--duration", "5"]).status().unwrap();
    assert!(st.success());
    let rows = RunLog::read_csv(std::fs::File::open(out.join("exp1-slow.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 2500);
    let log = out.join("exp1-slow.csv");
    let o = cli().arg("metrics").arg(&log).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("force_rms="));
    assert!(text.contains("contact_switches=1"));
    assert!(text.contains("provenance."));
}

#[test]
fn cli_region_export_and_bench() {
    let dir = tempfile::tempdir().unwrap();
    let regions = dir.path().join("regions.csv");
    let o = cli()
        .args(["region-export", "--k-e", "50", "--b-e", "1.0", "--bitmap", "10", "--out"])
        .arg(&regions)
        .output()
        .unwrap();
    assert!(o.status.success());
    let grid = std::fs::read_to_string(dir.path().join("regions.NS1.grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 1 + 11 * 11);
    let text = std::fs::read_to_string(&regions).unwrap();
    assert!(text.starts_with("condition,index,k_f,b_f"));
    assert!(text.lines().any(|l| l.starts_with("NS1")));

    let bench = dir.path().join("bench.csv");
    let o = cli().args(["bench-scheduler", "--n", "20,40", "--reps", "3", "--out"]).arg(&bench).output().unwrap();
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(&bench).unwrap().lines().count(), 3);
}

#[test]
fn cli_sweep_and_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.toml");
    std::fs::write(&a, short(Scenario::exp1_fast()).to_toml()).unwrap();
    let o = cli().arg("sweep").arg(&a).arg("--seeds").arg("2").arg("--out").arg(dir.path()).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "approach_speed = 0.0").unwrap();
    let o = cli().arg("run").arg(&bad).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8(o.stderr).unwrap().contains("approach_speed"));
}
