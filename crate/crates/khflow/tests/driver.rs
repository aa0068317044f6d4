use khflow::compare::{compare, load_series};
use khflow::config::RunConfig;
use khflow::driver::{run, run_in_memory, run_pair};
use khflow::output::read_qoi;
use khflow::perturb::PerturbationSpec;
use khflow::Error;
use std::path::Path;
use std::process::Command;

const SMALL: &str = r#"
re = 100.0
n = 4
k = 2
dt_factor = 10.0
end_tbar = 0.5
qoi_every = 5
snapshot_tbar = [0.0, 0.5]
thickness_lines = 64
spectrum_lines = 16
spectrum_samples = 32
snapshot_grid = 9
"#;

fn small(dir: &Path, extra: &[&str]) -> RunConfig {
    let mut ov: Vec<String> = extra.iter().map(|s| s.to_string()).collect();
    ov.push(format!("output_dir={:?}", dir.to_str().unwrap()));
    RunConfig::from_toml_str(SMALL, &ov).unwrap()
}

#[test]
fn identical_configs_give_bitwise_identical_qoi_files() {
    let t = tempfile::tempdir().unwrap();
    for f in ["saddle", "stream"] {
        let a = small(&t.path().join(format!("a_{f}")), &[&format!("formulation=\"{f}\"")]);
        let b = small(&t.path().join(format!("b_{f}")), &[&format!("formulation=\"{f}\"")]);
        assert_eq!(a.hash(), b.hash());
        run(&a).unwrap();
        run(&b).unwrap();
        let qa = std::fs::read(a.output_dir.join("qoi.csv")).unwrap();
        let qb = std::fs::read(b.output_dir.join("qoi.csv")).unwrap();
        assert!(qa.len() > 200);
        assert_eq!(qa, qb);
        for name in ["trajectory.csv", "spectrum_tbar0.csv", "profile_tbar0p5.csv", "field_tbar0p5.vtk", "run_meta.json"] {
            assert!(a.output_dir.join(name).is_file(), "{name}");
        }
    }
}

#[test]
fn restart_matches_uninterrupted_run() {
    let t = tempfile::tempdir().unwrap();
    let full = small(&t.path().join("full"), &["checkpoint_every=20"]);
    let ra = run(&full).unwrap();
    // the checkpoint left behind is the one at step 40 (the last multiple before 50 written mid-run)
    let ck = full.output_dir.join("checkpoint.bin");
    assert!(ck.is_file());
    let restarted = small(&t.path().join("restart"), &[&format!("restart={:?}", ck.to_str().unwrap())]);
    assert_eq!(restarted.hash(), full.hash());
    let rb = run(&restarted).unwrap();
    assert_eq!(ra.steps, rb.steps);
    assert!(ra.final_state.iter().zip(&rb.final_state).all(|(x, y)| x.to_bits() == y.to_bits()));
    let first = rb.records[0].step;
    let tail: Vec<_> = ra.records.iter().filter(|r| r.step >= first).collect();
    assert_eq!(tail.len(), rb.records.len());
    for (x, y) in tail.iter().zip(&rb.records) {
        assert_eq!((x.k.to_bits(), x.e.to_bits(), x.p.to_bits()), (y.k.to_bits(), y.e.to_bits(), y.p.to_bits()));
        assert_eq!(x.eps_int.to_bits(), y.eps_int.to_bits());
    }
    // a checkpoint from another configuration is refused
    let other = small(&t.path().join("other"), &["re=1000.0", &format!("restart={:?}", ck.to_str().unwrap())]);
    assert!(run(&other).is_err());
}

#[test]
fn invalid_config_lists_every_problem_and_writes_nothing() {
    let t = tempfile::tempdir().unwrap();
    let dir = t.path().join("never");
    let mut c = small(&dir, &[]);
    c.n = 0;
    c.k = 12;
    c.qoi_every = 0;
    match run(&c) {
        Err(Error::Config(v)) => assert_eq!(v.len(), 3, "{v:?}"),
        other => panic!("{other:?}"),
    }
    assert!(!dir.exists());
    assert!(RunConfig::from_toml_str("re = 100.0\nbogus = 1\n", &[]).is_err());
}

#[test]
fn kh_run_invariants_hold_per_sample() {
    let t = tempfile::tempdir().unwrap();
    let out = run_in_memory(&small(t.path(), &[])).unwrap();
    assert_eq!(out.steps, 50);
    assert_eq!(out.records.len(), 11);
    let k0 = out.records[0].k;
    for w in out.records.windows(2) {
        assert!(w[1].k <= w[0].k + 1e-10 * k0);
    }
    assert!(out.max_rel_divergence < 1e-10);
    assert!(out.failure.is_none());
    assert_eq!(out.spectra.len(), 2);
    assert!(!t.path().join("qoi.csv").exists());
}

#[test]
fn oracle_engine_runs_and_compares_with_itself() {
    let t = tempfile::tempdir().unwrap();
    let c = small(&t.path().join("o"), &["engine=\"oracle\"", "oracle_modes=32"]);
    let out = run(&c).unwrap();
    assert_eq!(out.engine, "oracle");
    let s = load_series(&c.output_dir.join("qoi.csv")).unwrap();
    let r = compare(&s, &s, 0.5, &[("K", 0.0), ("E", 0.0), ("P", 0.0)]).unwrap();
    assert!(r.iter().all(|q| q.pass && q.max_rel_deviation == 0.0));
    assert!(compare(&s, &s, 0.6, &[("K", 0.01)]).is_err());
    let recs = read_qoi(&c.output_dir.join("qoi.csv")).unwrap();
    assert_eq!(recs.len(), out.records.len());
    assert_eq!(recs[3].k.to_bits(), out.records[3].k.to_bits());
}

#[test]
fn pair_without_effective_perturbation_does_not_diverge() {
    let t = tempfile::tempdir().unwrap();
    let mut c = small(&t.path().join("pair"), &["end_tbar=0.2"]);
    c.perturbation = PerturbationSpec::SolverRtol { rtol: 1e-12 };
    let (_, _, rep) = run_pair(&c, 0.1).unwrap();
    assert!(rep.qois.iter().all(|q| q.t_div.is_none() && q.max_deviation == 0.0), "{}", rep.summary());
    assert!(c.output_dir.join("divergence_summary.txt").is_file());
    c.perturbation = PerturbationSpec::RoundingNoise { amplitude: 1e-10, seed: 7 };
    c.output_dir = t.path().join("noise");
    let (_, _, rep) = run_pair(&c, 0.1).unwrap();
    let p = rep.max_p_deviation_until(1.0);
    assert!(p > 0.0 && p < 1e-6, "{p}");
}

#[test]
fn cli_reports_config_errors_and_compares_files() {
    let exe = env!("CARGO_BIN_EXE_khflow");
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("bad.toml");
    std::fs::write(&cfg, "n = 0\nk = 0\n").unwrap();
    let o = Command::new(exe).args(["run", "--config", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("n must be") && err.contains("k must be"), "{err}");

    let good = t.path().join("good.toml");
    std::fs::write(&good, SMALL).unwrap();
    let dir = t.path().join("run");
    let o = Command::new(exe)
        .args(["run", "--config", good.to_str().unwrap(), "--override"])
        .arg(format!("output_dir={:?}", dir.to_str().unwrap()))
        .args(["--override", "end_tbar=0.1"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let q = dir.join("qoi.csv");
    let o = Command::new(exe)
        .args(["compare", "--a", q.to_str().unwrap(), "--b", q.to_str().unwrap(), "--tmax", "0.1"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("pass"));
}
