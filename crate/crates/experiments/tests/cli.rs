//! End-to-end runs of the `avgpg` binary and the experiment library.

use std::fs;
use std::path::Path;
use std::process::Command;

use avgpg::complexity::c_p_estimate;
use avgpg::mdp::{generate_mdp, KernelFamily, MdpGeneratorSpec, RewardFamily};
use avgpg_experiments::dataset::Table;
use avgpg_experiments::runs::{
    self, BOUND_SUMMARY_HEADER, BOUND_TRACE_HEADER, CURVE_HEADER, CURVE_SUMMARY_HEADER,
    DISCOUNT_HEADER, SCALING_HEADER,
};
use avgpg_experiments::{ExperimentConfig, ExperimentKind};

const SMALL: &str = r#"
seeds = [0, 1]
sizes = [[3, 3], [4, 2]]
iterations = 60
step_size = 0.1
record_every = 5
diameter_size = [4, 3]
deltas = [0.0, 0.25, 1.0]
cp_size = [4, 3]
cp_weights = [0.0, 0.5]
scaling_states = [3]
scaling_actions = [2, 3]
scaling_instances = 5
bound_size = [3, 2]
discount_levels = 4
discount_iterations = 20
search_evaluations = 100
"#;

fn avgpg(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_avgpg"))
        .args(args)
        .current_dir(dir)
        .env_remove("AVGPG_WORKERS")
        .output()
        .expect("binary runs")
}

fn small_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    dir
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn every_experiment_writes_pinned_headers() {
    let dir = small_dir();
    let cases: [(&str, &[(&str, &[&str])]); 6] = [
        ("size-sweep", &[("size_sweep.v1.csv", &CURVE_HEADER), ("size_sweep_summary.v1.csv", &CURVE_SUMMARY_HEADER)]),
        ("reward-diameter", &[("reward_diameter.v1.csv", &CURVE_HEADER), ("reward_diameter_summary.v1.csv", &CURVE_SUMMARY_HEADER)]),
        ("cp-sweep", &[("cp_sweep.v1.csv", &CURVE_HEADER), ("cp_sweep_summary.v1.csv", &CURVE_SUMMARY_HEADER)]),
        ("constant-scaling", &[("constant_scaling.v1.csv", &SCALING_HEADER)]),
        ("bound-verify", &[("bound_verify.v1.csv", &BOUND_TRACE_HEADER), ("bound_verify_summary.v1.csv", &BOUND_SUMMARY_HEADER)]),
        ("discount-compare", &[("discount_compare.v1.csv", &DISCOUNT_HEADER)]),
    ];
    for (cmd, files) in cases {
        let out = avgpg(&[cmd, "--config", "small.toml", "--out", "out"], dir.path());
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        for (file, expected) in files {
            assert_eq!(header(&dir.path().join("out").join(file)), expected.join(","));
        }
    }
    assert_eq!(
        CURVE_HEADER.join(","),
        "num_states,num_actions,seed,param,constant,iter,rho,improvement,eta,status"
    );
    assert_eq!(
        BOUND_TRACE_HEADER.join(","),
        "seed,iter,rho,gap,cumulative_regret,bound_theorem1,eta,status"
    );
    for (cmd, file) in [("constants", "constants.json"), ("evaluate", "evaluate.json")] {
        let out = avgpg(&[cmd, "--config", "small.toml", "--out", "out"], dir.path());
        assert!(out.status.success());
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("out").join(file)).unwrap()).unwrap();
        assert!(v.is_object());
    }
}

#[test]
fn reruns_and_worker_counts_give_identical_bytes() {
    let dir = small_dir();
    for (out_dir, workers) in [("a", "1"), ("b", "4"), ("c", "4")] {
        for cmd in ["size-sweep", "cp-sweep", "constant-scaling"] {
            let out = avgpg(&[cmd, "--config", "small.toml", "--out", out_dir, "--workers", workers], dir.path());
            assert!(out.status.success());
        }
    }
    for file in ["size_sweep.v1.csv", "cp_sweep_summary.v1.csv", "constant_scaling.v1.csv"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        assert_eq!(a, fs::read(dir.path().join("b").join(file)).unwrap());
        assert_eq!(a, fs::read(dir.path().join("c").join(file)).unwrap());
    }
}

#[test]
fn environment_overrides_workers() {
    let dir = small_dir();
    let out = Command::new(env!("CARGO_BIN_EXE_avgpg"))
        .args(["evaluate", "--config", "small.toml", "--out", "out", "--workers", "3"])
        .current_dir(dir.path())
        .env("AVGPG_WORKERS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("AVGPG_WORKERS=2 overrides"));
}

#[test]
fn exit_codes() {
    let dir = small_dir();
    fs::write(dir.path().join("bad.toml"), "seeds = []").unwrap();
    fs::write(dir.path().join("typo.toml"), "seedz = [1]").unwrap();
    fs::write(dir.path().join("wrong_kind.toml"), "kind = \"cp-sweep\"").unwrap();
    for cfg in ["bad.toml", "typo.toml", "wrong_kind.toml", "missing.toml"] {
        let out = avgpg(&["size-sweep", "--config", cfg], dir.path());
        assert_eq!(out.status.code(), Some(2), "{cfg}");
    }
    // A fixed step larger than 1/L₂ breaks the ascent inequality, which
    // strict mode reports as a failure.
    let out = avgpg(&["bound-verify", "--config", "small.toml", "--out", "o", "--strict"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = avgpg(&["bound-verify", "--config", "small.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let out = avgpg(&["plotdata", "--input", "o/bound_verify.v1.csv", "--kind", "heatmap"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_override_shifts_seeds() {
    let dir = small_dir();
    let out = avgpg(&["size-sweep", "--config", "small.toml", "--out", "o", "--seed-override", "7"], dir.path());
    assert!(out.status.success());
    let table = Table::read(fs::File::open(dir.path().join("o/size_sweep_summary.v1.csv")).unwrap()).unwrap();
    let seeds: Vec<&str> = table.rows.iter().map(|r| r[2].as_str()).collect();
    assert_eq!(seeds, ["7", "8", "7", "8"]);
}

#[test]
fn plotdata_reshapes_sweeps() {
    let dir = small_dir();
    assert!(avgpg(&["size-sweep", "--config", "small.toml", "--out", "o"], dir.path()).status.success());
    let out = avgpg(&["plotdata", "--input", "o/size_sweep.v1.csv", "--kind", "size-sweep", "--out", "p"], dir.path());
    assert!(out.status.success());
    let table = Table::read(fs::File::open(dir.path().join("p/size_sweep.v1.plot.csv")).unwrap()).unwrap();
    assert_eq!(table.header, ["x", "y", "group"]);
    assert!(table.rows.iter().any(|r| r[2] == "num_states=4;num_actions=2;seed=1"));
}

fn small_config() -> ExperimentConfig {
    ExperimentConfig::from_toml(SMALL).unwrap()
}

#[test]
fn certified_curves_are_monotone() {
    let mut config = small_config();
    config.step_size = avgpg_experiments::config::StepSpec::Named("certified".into());
    for run in runs::size_sweep(&config) {
        let curve = run.result.unwrap();
        assert!(curve.is_monotone());
        assert!(curve.eta > 0.0 && curve.eta < 1.0);
    }
}

#[test]
fn diameter_sweep_shares_kernels() {
    let config = small_config();
    let kernel = |delta: f64| {
        generate_mdp(&MdpGeneratorSpec::new(
            4,
            3,
            KernelFamily::DirichletUniform,
            RewardFamily::DiameterControlled { delta },
            0,
        ))
        .unwrap()
        .kernel_flat()
        .to_vec()
    };
    assert_eq!(kernel(0.0), kernel(1.0));
    let runs = runs::reward_diameter_sweep(&config);
    for run in &runs {
        let c_r = run.constant.unwrap();
        if run.param == Some(0.0) {
            assert!(c_r < 1e-12);
        } else {
            assert!(c_r > 0.0);
        }
    }
}

#[test]
fn cp_sweep_endpoints() {
    let config = small_config();
    let budget = config.budget(0);
    let flat = runs::interpolated_mdp(&config, 4, 3, 0, 0.0).unwrap();
    assert!(c_p_estimate(&flat, &budget, false).value < 1e-12);
    let mut last = 0.0;
    for w in [0.25, 0.5, 0.75] {
        let mdp = runs::interpolated_mdp(&config, 4, 3, 0, w).unwrap();
        let c_p = c_p_estimate(&mdp, &budget, false).value;
        assert!(c_p > last && c_p <= 3f64.sqrt());
        last = c_p;
    }
}

#[test]
fn constant_scaling_cells() {
    let config = small_config();
    let rows = runs::constant_scaling(&config);
    // Five families, two quantities each, one size, two action counts.
    assert_eq!(rows.len(), 5 * 2 * 2 * config.scaling_instances);
    for r in &rows {
        let (value, _) = r.result.clone().unwrap();
        assert!(value <= (r.num_actions as f64).sqrt() + 1e-12);
    }
    let ds = runs::scaling_dataset(&rows);
    assert_eq!(ds.failures, 0);
}

#[test]
fn bound_verify_trivial_instance() {
    let mdp = avgpg::TabularMdp::new(2, 2, vec![0.5; 8], vec![0.25; 4]).unwrap();
    let mut config = small_config();
    config.step_size = avgpg_experiments::config::StepSpec::Named("certified".into());
    let outcome = runs::verify_instance(&mdp, &config, 0).unwrap();
    assert_eq!(outcome.trace.records[0].gap, Some(0.0));
    assert!(outcome.report.passed());
}

#[test]
fn oversized_oracle_is_a_row_failure() {
    let mut config = small_config();
    config.bound_size = [20, 4];
    config.seeds = vec![0];
    config.validate(ExperimentKind::BoundVerify).unwrap();
    let runs = runs::bound_verification(&config);
    assert!(runs[0].result.as_ref().unwrap_err().contains("oracle infeasible"));
    let (_, summary) = runs::bound_datasets(&runs);
    assert_eq!(summary.failures, 1);
}
