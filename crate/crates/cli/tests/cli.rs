use std::path::{Path, PathBuf};
use std::process::Command;

use decoh_cli::{evaluate, run, ScenarioConfig};
use gamma_decoherence::analysis::{RoundtripModel, TimeSeries};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_decoh"))
}

fn scenario_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("decoh-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn column(csv_path: &Path, name: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_path(csv_path).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records()
        .map(|rec| rec.unwrap()[idx].parse().unwrap())
        .collect()
}

#[test]
fn repeated_runs_are_byte_identical() {
    for file in ["rabi_qed.toml", "mc_check.toml", "ion.toml", "ramsey.toml"] {
        let a = scratch(&format!("det-a-{file}"));
        let b = scratch(&format!("det-b-{file}"));
        for dir in [&a, &b] {
            let status = bin()
                .args(["run", "--quiet", "--output"])
                .arg(dir)
                .arg(scenario_file(file))
                .status()
                .unwrap();
            assert!(status.success());
        }
        let mut csvs = 0;
        for entry in std::fs::read_dir(&a).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "csv") {
                let other = b.join(path.file_name().unwrap());
                assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(other).unwrap());
                csvs += 1;
            }
        }
        assert!(csvs >= 1);
    }
}

#[test]
fn validate_reports_missing_tau() {
    let dir = scratch("validate");
    let text = std::fs::read_to_string(scenario_file("rabi_qed.toml")).unwrap();
    let bad = dir.join("bad.toml");
    std::fs::write(&bad, text.replace("tau = 0.5e-6", "")).unwrap();
    let out = bin().arg("validate").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1, "{stdout}");
    assert!(stdout.contains("tau"));

    let negative = dir.join("negative.toml");
    std::fs::write(&negative, text.replace("n_points = 401", "n_points = -3")).unwrap();
    let out = bin().arg("validate").arg(&negative).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1);

    for file in std::fs::read_dir(scenario_file("")).unwrap() {
        let path = file.unwrap().path();
        let out = bin().arg("validate").arg(&path).output().unwrap();
        assert!(out.status.success(), "{}", path.display());
    }
}

#[test]
fn run_refuses_invalid_files() {
    let dir = scratch("refuse");
    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "scenario = \"interrupted\"\n[params]\ntau1 = 3.0\ntau2 = 2.0\n[grid]\nt_start = 0.0\nt_stop = 1.0\nn_points = 3\n").unwrap();
    let out = bin()
        .args(["run", "--output"])
        .arg(&dir)
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("tau1"));
}

#[test]
fn ion_csv_recovers_tau() {
    let dir = scratch("ion");
    let text = std::fs::read_to_string(scenario_file("ion.toml"))
        .unwrap()
        .replace("gamma0 = 11.9e3", "tau = 1.7e-8");
    let cfg = ScenarioConfig::parse(&text).unwrap();
    let report = run(&cfg, &dir).unwrap();
    let csv_path = dir.join("ion.csv");
    let series =
        TimeSeries::new(column(&csv_path, "t_s"), column(&csv_path, "p_averaged")).unwrap();
    let omega0 = report.derived("omega_n_rad_s").unwrap();
    let model = RoundtripModel::Ion {
        omega0,
        lamb_dicke: 0.202,
    };
    let (tau, _) = model.estimate_tau(&series).unwrap();
    assert!((tau / 1.7e-8 - 1.0).abs() < 0.02, "{tau}");
    assert!(dir.join("ion_ratios.csv").exists());
    assert!(dir.join("ion.report.json").exists());
}

#[test]
fn seed_and_sample_overrides() {
    let dir = scratch("override");
    let cfg = scenario_file("rabi_qed.toml");
    let run_with = |extra: &[&str], sub: &str| {
        let out = dir.join(sub);
        let status = bin()
            .args(["run", "-q", "--output"])
            .arg(&out)
            .args(extra)
            .arg(&cfg)
            .status()
            .unwrap();
        assert!(status.success());
        column(&out.join("rabi_qed.csv"), "p_mc")
    };
    let a = run_with(&[], "a");
    let b = run_with(&["--seed", "11"], "b");
    let c = run_with(&["--samples", "3000"], "c");
    assert_ne!(a, b);
    assert_ne!(a, c);

    let plain = dir.join("plain.toml");
    let text = std::fs::read_to_string(&cfg).unwrap();
    let cut = text.find("[mc]").unwrap();
    std::fs::write(&plain, &text[..cut]).unwrap();
    let out = dir.join("d");
    let status = bin()
        .args(["run", "-q", "--samples", "2000", "--output"])
        .arg(&out)
        .arg(&plain)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(column(&out.join("rabi_qed.csv"), "p_mc").len(), 401);
}

#[test]
fn output_directory_from_environment() {
    let dir = scratch("env");
    let status = bin()
        .env("DECOH_OUTPUT_DIR", &dir)
        .args(["run", "-q"])
        .arg(scenario_file("interrupted.toml"))
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.join("interrupted.csv").exists());
}

#[test]
fn list_scenarios_names_all() {
    let out = bin().arg("list-scenarios").output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    for name in [
        "rabi-qed",
        "ramsey",
        "ion",
        "interrupted",
        "mc-check",
        "master-eq",
        "gamma-diag",
    ] {
        assert!(stdout.contains(name), "{name}");
    }
}

#[test]
fn csv_schemas() {
    let expected = [
        ("rabi_qed.toml", "t_s,p_ideal,p_averaged,p_mc,p_mc_stderr"),
        ("ion.toml", "t_s,p_ideal,p_averaged"),
        (
            "ramsey.toml",
            "delta_rad_s,p_theory,p_averaged,p_gaussian,visibility",
        ),
        ("interrupted.toml", "t,F,linear_approx,abs_err"),
        ("master_eq.toml", "t_s,re_rho01,im_rho01,purity,trace"),
        ("gamma_diag.toml", "t_prime,density,cdf"),
    ];
    for (file, header) in expected {
        let text = std::fs::read_to_string(scenario_file(file)).unwrap();
        let (_, out) = evaluate(&ScenarioConfig::parse(&text).unwrap()).unwrap();
        assert_eq!(out.tables[0].header.join(","), header, "{file}");
        let bytes = out.tables[0].to_csv().unwrap();
        assert!(bytes.starts_with(format!("{header}\n").as_bytes()));
    }
}
