use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn isofactor(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isofactor"))
        .args(args)
        .current_dir(dir)
        .env_remove("ISOFACTOR_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check {name}"))
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn mielnik_family_passes_with_oscillator_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let o = isofactor(
        &["family", "--system", "oscillator", "--scheme", "mielnik", "--gamma", "2", "--levels", "5"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&dir.path().join("family_oscillator_mielnik_gamma2.json"));
    let computed: Vec<f64> = report["spectra"]["computed"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    for (e, want) in computed.iter().zip([1.0, 3.0, 5.0, 7.0, 9.0]) {
        assert!((e - want).abs() < 2e-3);
    }
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
    let (header, rows) = read_csv(&dir.path().join("family_oscillator_mielnik_gamma2.csv"));
    assert_eq!(
        header,
        ["x", "V", "V_transformed", "missing_state", "psi_0", "psi_1", "psi_2", "psi_3", "psi_4"]
    );
    assert_eq!(rows.len(), 4001);
}

#[test]
fn gamma_below_bound_exits_with_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = isofactor(&["family", "--scheme", "mielnik", "--gamma", "0.5"], dir.path());
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("sqrt(pi)/2"), "{err}");
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn generalized_hydrogen_reduces_to_sdih_output() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["family", "--system", "hydrogen", "--l", "1"];
    let gen: Vec<&str> = base
        .iter()
        .copied()
        .chain(["--scheme", "generalized", "--k", "0", "--lambda", "0"])
        .collect();
    let sdih: Vec<&str> = base.iter().copied().chain(["--scheme", "sdih"]).collect();
    assert_eq!(code(&isofactor(&gen, dir.path())), 0);
    assert_eq!(code(&isofactor(&sdih, dir.path())), 0);
    let (ha, a) = read_csv(&dir.path().join("family_hydrogen_generalized_l1_k0_lambda0.csv"));
    let (hb, b) = read_csv(&dir.path().join("family_hydrogen_sdih_l1.csv"));
    assert_eq!(ha, hb);
    assert_eq!(a.len(), b.len());
    for (ra, rb) in a.iter().zip(&b) {
        for (x, y) in ra.iter().zip(rb) {
            assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
        }
    }
}

#[test]
fn default_verify_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = isofactor(&["verify"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report = read_json(&dir.path().join("verify_oscillator_sdih.json"));
    for name in ["riccati_residual", "intertwining_0", "isospectral", "orthogonality", "commutator"] {
        assert_eq!(check(&report, name)["pass"], true, "{name}");
    }
    // Every printed check line carries its tolerance.
    let out = String::from_utf8_lossy(&o.stdout);
    for line in out.lines().filter(|l| l.contains("PASS") || l.contains("FAIL")) {
        assert!(line.contains("tol"), "{line}");
    }
}

#[test]
fn corrupted_beta_fails_intertwining_and_residual() {
    let dir = tempfile::tempdir().unwrap();
    let o = isofactor(&["verify", "--corrupt-beta", "0.01"], dir.path());
    assert_eq!(code(&o), 1);
    let report = read_json(&dir.path().join("verify_oscillator_sdih.json"));
    for name in ["riccati_residual", "intertwining_0", "intertwining_1", "intertwining_2"] {
        assert_eq!(check(&report, name)["pass"], false, "{name}");
    }
}

#[test]
fn chain_suite_reproduces_shifted_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let o = isofactor(&["verify", "--scheme", "chain", "--epsilons=-1,-3"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report = read_json(&dir.path().join("verify_oscillator_chain_eps-1_-3.json"));
    assert_eq!(check(&report, "spectrum")["pass"], true);
    let predicted: Vec<f64> = report["spectra"]["predicted"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(predicted, [-3.0, -1.0, 1.0, 3.0, 5.0]);
}

#[test]
fn chain_with_repeated_energy_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&isofactor(&["chain", "--epsilons=-1,-1"], dir.path())), 2);
}

#[test]
fn identical_configs_give_identical_json() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["verify", "--scheme", "mielnik", "--gamma", "5"];
    assert_eq!(code(&isofactor(&args, a.path())), 0);
    assert_eq!(code(&isofactor(&args, b.path())), 0);
    let name = "verify_oscillator_mielnik_gamma5.json";
    let ja = fs::read(a.path().join(name)).unwrap();
    assert_eq!(ja, fs::read(b.path().join(name)).unwrap());
    let text = String::from_utf8(ja).unwrap();
    let (c, k, s) = (text.find("\"config\"").unwrap(), text.find("\"checks\"").unwrap(), text.find("\"spectra\"").unwrap());
    assert!(c < k && k < s);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.cfg"),
        "# family settings\nsystem = oscillator\nscheme = mielnik\ngamma = 2\nlevels = 4\nout-dir = from_file\n",
    )
    .unwrap();
    let o = isofactor(&["family", "--config", "run.cfg", "--gamma", "5"], dir.path());
    assert_eq!(code(&o), 0);
    let report = read_json(&dir.path().join("from_file/family_oscillator_mielnik_gamma5.json"));
    assert_eq!(report["config"]["gamma"], 5.0);
    assert_eq!(report["config"]["levels"], 4);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.cfg"), "gama = 2\n").unwrap();
    assert_eq!(code(&isofactor(&["family", "--config", "bad.cfg"], dir.path())), 2);
}

#[test]
fn env_var_sets_output_root() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_isofactor"))
        .args(["spectrum", "--scheme", "sdih"])
        .current_dir(dir.path())
        .env("ISOFACTOR_OUT_DIR", "env_out")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("env_out/spectrum_oscillator_sdih.json").exists());
}

#[test]
fn sweep_reports_follow_parameter_order() {
    let dir = tempfile::tempdir().unwrap();
    let o = isofactor(&["family", "--scheme", "mielnik", "--gamma", "1.0:3.0:0.5", "--plot"], dir.path());
    assert_eq!(code(&o), 0);
    let sweep = read_json(&dir.path().join("family_oscillator_mielnik_sweep.json"));
    let gammas: Vec<f64> = sweep
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["config"]["gamma"].as_f64().unwrap())
        .collect();
    assert_eq!(gammas, [1.0, 1.5, 2.0, 2.5, 3.0]);
    let script = fs::read_to_string(dir.path().join("family_oscillator_mielnik_gamma1.5.gp")).unwrap();
    assert!(script.contains("'family_oscillator_mielnik_gamma1.5.csv' using 1:3"));
}

#[test]
fn hydrogen_family_below_bound_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = isofactor(
        &["family", "--system", "hydrogen", "--l", "1", "--scheme", "mielnik", "--lambda", "0.1"],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("(2l)!(l/2)^(2l+1)"));
}

#[test]
fn catalog_lists_entries_and_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let o = isofactor(&["catalog"], dir.path());
    assert_eq!(code(&o), 0);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("beta_p(r) = l/r - 1/l"));
    assert!(out.contains("eps = -3"));
    assert!(out.contains("sqrt(pi)/2 = 0.8862269"));
}
