use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_simulate");

const SMALL_PULSE: &str = r#"
scenario = "pulse"
seed = 7
[material]
ms = 8.0e5
a_ex = 1.3e-11
ku = 5.0e2
alpha = 0.02
tau = 1.0e-11
[geometry]
size = [40e-9, 20e-9, 5e-9]
cell = [4e-9, 4e-9, 5e-9]
[time]
dt = 1.0e-14
duration = 5.0e-13
[applied]
pulse_amplitude_ms = 0.01
pulse_frequency = 5.0e11
pulse_end = 2.0e-12
[output]
cadence = 5
snapshot_every = 25
"#;

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().unwrap()
}

#[test]
fn pulse_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "pulse.toml", SMALL_PULSE);
    let out = dir.path().join("out");
    let res = run(&[cfg.to_str().unwrap(), "--output", out.to_str().unwrap(), "--audit"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let ts = std::fs::read_to_string(out.join("timeseries.csv")).unwrap();
    let lines: Vec<&str> = ts.lines().collect();
    assert_eq!(lines[0], "step,t,mx,my,mz,F,J,gmres_iters");
    assert_eq!(lines.len(), 1 + 11);
    for step in [1, 26, 51] {
        assert!(out.join(format!("snapshot_{step}.txt")).exists(), "snapshot {step}");
    }
    let audit = std::fs::read_to_string(out.join("audit.txt")).unwrap();
    assert!(audit.contains("status ok"));
}

#[test]
fn repeated_runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL_PULSE.replace("seed = 7", "seed = 7\nstray_field = true") + "[initial]\nkind = \"random\"\n";
    let cfg = write(dir.path(), "c.toml", &text);
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        assert!(run(&[cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]).status.success());
        outputs.push(std::fs::read(out.join("timeseries.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn snapshot_restart_continues_from_state() {
    let dir = tempfile::tempdir().unwrap();
    let first = write(dir.path(), "first.toml", SMALL_PULSE);
    let out = dir.path().join("first");
    assert!(run(&[first.to_str().unwrap(), "--output", out.to_str().unwrap()]).status.success());
    let snap = out.join("snapshot_51.txt");
    let second_text = SMALL_PULSE.replace("scenario = \"pulse\"", "scenario = \"relax\"")
        + &format!("[initial]\nkind = \"snapshot\"\npath = \"{}\"\n", snap.display());
    let second = write(dir.path(), "second.toml", &second_text);
    let out2 = dir.path().join("second");
    let res = run(&[second.to_str().unwrap(), "--output", out2.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let final_first = std::fs::read_to_string(out.join("timeseries.csv")).unwrap();
    let start_second = std::fs::read_to_string(out2.join("timeseries.csv")).unwrap();
    let cols = |line: &str| line.split(',').skip(2).take(3).map(str::to_string).collect::<Vec<_>>();
    assert_eq!(cols(final_first.lines().last().unwrap()), cols(start_second.lines().nth(1).unwrap()));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", &SMALL_PULSE.replace("ms = 8.0e5\n", ""));
    let res = run(&[bad.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("material.ms"));

    let good = write(dir.path(), "good.toml", SMALL_PULSE);
    let res = run(&[good.to_str().unwrap(), "--scenario", "spin"]);
    assert_eq!(res.status.code(), Some(1));

    let res = run(&[dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn solver_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL_PULSE.to_string() + "[solver]\ntol = 1.0e-15\nmax_iters = 1\n";
    let cfg = write(dir.path(), "c.toml", &text);
    let res = run(&[cfg.to_str().unwrap(), "--output", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(String::from_utf8_lossy(&res.stderr).contains("step"));
}

#[test]
fn bundled_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            illg::driver::load_config(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert!(n >= 8);
}

#[test]
fn audited_sweep_closes_loop() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
scenario = "hysteresis"
stray_field = true
[material]
ms = 8.0e5
a_ex = 1.3e-11
ku = 5.0e2
alpha = 0.5
tau = 1.0e-12
[geometry]
size = [100e-9, 40e-9, 10e-9]
cell = [10e-9, 10e-9, 10e-9]
[time]
dt = 1.0e-12
[hysteresis]
axis = "long"
field_min_t = -0.2
field_max_t = 0.2
n_field_steps = 9
max_steps_per_field = 2000
"#;
    let cfg = write(dir.path(), "h.toml", text);
    let out = dir.path().join("h");
    let res = run(&[cfg.to_str().unwrap(), "--output", out.to_str().unwrap(), "--audit"]);
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(std::fs::read_to_string(out.join("audit.txt")).unwrap().contains("status ok"));
    let rows = std::fs::read_to_string(out.join("hysteresis.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 2 * 9 - 1);
    let closure: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("loop closure: "))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(closure < 1e-3, "closure {closure}");
}
