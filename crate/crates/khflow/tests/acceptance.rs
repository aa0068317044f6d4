//! Acceptance checks. Each test prints one `criterion N: PASS|FAIL` line
//! (straight to stdout, so it shows even when the harness captures output)
//! and then asserts the verdict.
//!
//! Fast criteria run with `cargo test`; the long runs are `#[ignore]`d:
//!
//! ```text
//! cargo test --release -p khflow --test acceptance -- --ignored --test-threads 1
//! ```

use khflow::assembly::{Convection, DEFAULT_PENALTY};
use khflow::compare::{compare, Series};
use khflow::config::RunConfig;
use khflow::driver::{run_in_memory, run_pair, RunOutput};
use khflow::kh::{self, InitialCondition};
use khflow::mesh::StructuredMesh;
use khflow::perturb::PerturbationSpec;
use khflow::qoi::{self, QoiRecord};
use khflow::selforg::{decay_bound_check, mu1, EigenMode, ModeConvention, TrajectoryPoint, Variant};
use khflow::space::build_space;
use khflow::spectral::Oracle;
use khflow::system::{project_velocity, Discretization, Formulation};
use khflow::timestep::{Stepper, StepperOptions, TimeState};
use std::io::Write;
use std::path::PathBuf;
use std::sync::OnceLock;

fn say(line: &str) {
    let mut o = std::io::stdout().lock();
    let _ = writeln!(o, "{line}");
    let _ = o.flush();
}

fn verdict(id: &str, pass: bool, detail: &str) -> bool {
    say(&format!("criterion {id}: {} | {detail}", if pass { "PASS" } else { "FAIL" }));
    pass
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn config(text: &str) -> RunConfig {
    RunConfig::from_toml_str(text, &[]).unwrap()
}

fn series(records: &[QoiRecord]) -> Series {
    let col = |f: fn(&QoiRecord) -> f64| records.iter().map(f).collect::<Vec<_>>();
    Series {
        t_tbar: col(|r| r.t_over_tbar),
        cols: [("K".to_string(), col(|r| r.k)), ("E".to_string(), col(|r| r.e)), ("P".to_string(), col(|r| r.p))].into(),
    }
}

fn stream_disc(n: usize, k: usize, nu: f64) -> Discretization {
    let space = build_space(StructuredMesh::new(n).unwrap(), k).unwrap();
    Discretization::new(space, nu, DEFAULT_PENALTY, Formulation::Stream, Convection::default_order(k)).unwrap()
}

// ---------------------------------------------------------------- 1

#[test]
fn criterion_1_initial_qois() {
    let ic = InitialCondition::default();
    let (n, k) = (64, 8);
    let space = build_space(StructuredMesh::new(n).unwrap(), k).unwrap();
    let u = project_velocity(&space, Formulation::Stream, &|x, y| ic.velocity(x, y), k + 6).unwrap();
    let en = qoi::energies(&space, &u);
    let ok_k = (en.k - 0.4822).abs() <= 5e-4;
    let ok_e = (en.e - 37.63).abs() <= 0.05;
    let ok_p = rel(en.p, 95219.0) <= 0.01;
    let pass = verdict(
        "1",
        ok_k && ok_e && ok_p,
        &format!("RT{k} on {n}x{n}: K0 = {:.6} (0.4822 +- 5e-4), E0 = {:.4} (37.63 +- 0.05), P0 = {:.1} (95219 +- 1%)", en.k, en.e, en.p),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 2

fn taylor_k(d: &Discretization, x0: &[f64], dt: f64, t_end: f64) -> Vec<(f64, f64)> {
    let mut st = Stepper::new(d, StepperOptions::new(dt)).unwrap();
    let mut s = TimeState::initial(x0.to_vec(), dt);
    let steps = (t_end / dt).round() as u64;
    let mut out = vec![(0.0, d.kinetic_energy(&s.x))];
    while s.step < steps {
        st.step(&mut s).unwrap();
        out.push((s.t(), d.kinetic_energy(&s.x)));
    }
    out
}

fn l2_error(space: &khflow::space::VelocitySpace, u: &[f64], exact: &dyn Fn(f64, f64) -> [f64; 2]) -> f64 {
    let m = 192;
    let pts: Vec<(f64, f64)> =
        (0..m * m).map(|i| (((i % m) as f64 + 0.5) / m as f64, ((i / m) as f64 + 0.5) / m as f64)).collect();
    let v = space.evaluate(u, &pts);
    let s: f64 = pts
        .iter()
        .zip(&v)
        .map(|(p, w)| {
            let e = exact(p.0, p.1);
            (w[0] - e[0]).powi(2) + (w[1] - e[1]).powi(2)
        })
        .sum();
    (s / (m * m) as f64).sqrt()
}

#[test]
#[ignore = "28000 steps at n=32, k=4 (about half an hour)"]
fn criterion_2_taylor_vortex() {
    let nu = 1e-3;
    let mode = EigenMode::unit(1, 1, Variant::Sin);
    let lambda = 5.0 * std::f64::consts::PI.powi(2);
    let g = |x: f64, y: f64| mode.velocity(x, y);
    let d = stream_disc(32, 4, nu);
    let x0 = d.project(&g, 10).unwrap();
    let decay = |traj: &[(f64, f64)]| {
        let k0 = traj[0].1;
        traj.iter().map(|(t, k)| rel(*k, k0 * (-2.0 * nu * lambda * t).exp())).fold(0.0, f64::max)
    };

    // main run at the default step
    let traj = taylor_k(&d, &x0, kh::default_dt(), 1.0);
    let err = decay(&traj);
    let ok_main = err <= 1e-4;

    // time-step halving at K(t = 0.5); steps large enough for the time error to dominate
    let at_half = |dt: f64| {
        let tr = taylor_k(&d, &x0, dt, 0.5);
        let (t, k) = *tr.last().unwrap();
        (k, rel(k, tr[0].1 * (-2.0 * nu * lambda * t).exp()))
    };
    let (k1, e1) = at_half(0.02);
    let (k2, e2) = at_half(0.01);
    let (k3, _) = at_half(0.005);
    let ratio = e1 / e2;
    let richardson = (k1 - k2) / (k2 - k3);
    let ok_dt = (3.2..=4.8).contains(&ratio);

    // projection error under h refinement
    let errs: Vec<f64> = [4, 8, 16]
        .iter()
        .map(|&n| {
            let space = build_space(StructuredMesh::new(n).unwrap(), 4).unwrap();
            let u = project_velocity(&space, Formulation::Stream, &g, 10).unwrap();
            l2_error(&space, &u, &g)
        })
        .collect();
    let rates: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let ok_h = rates.iter().all(|r| *r >= 5.0 - 0.1);

    let pass = verdict(
        "2",
        ok_main && ok_dt && ok_h,
        &format!(
            "max rel K error to t=1: {err:.3e} (<= 1e-4); dt halving error ratio {ratio:.3} (4 +- 20%), \
             Richardson ratio {richardson:.3}; projection L2 rates {rates:.3?} (>= k+1 = 5)"
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 3

/// Max over time of `|K(t) − K(0) + 2ν∫E|` and `|E(t) − E(0) + 2ν∫P|`,
/// integrals by the trapezoid rule over every step.
fn oracle_balance_residuals(modes: usize, dt: f64, tbar_end: f64) -> (f64, f64) {
    let nu = kh::viscosity(100.0);
    let o = Oracle::new(modes, modes, nu, dt).unwrap();
    let ic = InitialCondition::default();
    let mut s = o.init(&|x, y| ic.vorticity(x, y));
    let e0 = o.energies(&s);
    let steps = (tbar_end * kh::tbar() / dt).round() as u64;
    let (mut ie, mut ip, mut rk, mut re) = (0.0, 0.0, 0.0f64, 0.0f64);
    let mut prev = e0;
    for _ in 0..steps {
        o.step(&mut s).unwrap();
        let en = o.energies(&s);
        ie += 0.5 * dt * (prev.e + en.e);
        ip += 0.5 * dt * (prev.p + en.p);
        rk = rk.max((en.k - e0.k + 2.0 * nu * ie).abs());
        re = re.max((en.e - e0.e + 2.0 * nu * ip).abs());
        prev = en;
    }
    (rk, re)
}

#[test]
fn criterion_3_oracle_energy_identities() {
    let dt = kh::default_dt();
    let (k1, e1) = oracle_balance_residuals(128, 2.0 * dt, 10.0);
    let (k2, e2) = oracle_balance_residuals(128, dt, 10.0);
    let (rk, re) = (k1 / k2, e1 / e2);
    let ok = |r: f64| (3.2..=4.8).contains(&r);
    let pass = verdict(
        "3",
        ok(rk) && ok(re),
        &format!(
            "128x128 modes, Re=100, t/tbar <= 10: |dK/dt + 2nuE| residual {k1:.3e} -> {k2:.3e} (ratio {rk:.3}), \
             |dE/dt + 2nuP| residual {e1:.3e} -> {e2:.3e} (ratio {re:.3}); required 4 +- 20%"
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 4

fn kh_fem(re: f64, n: usize, k: usize, dt_factor: f64, end: f64, qoi_every: u64) -> RunConfig {
    config(&format!(
        "re = {re:?}\nn = {n}\nk = {k}\ndt_factor = {dt_factor:?}\nend_tbar = {end:?}\nformulation = \"stream\"\n\
         qoi_every = {qoi_every}\nsnapshot_tbar = []\n"
    ))
}

fn kh_oracle(re: f64, dt_factor: f64, end: f64, qoi_every: u64) -> RunConfig {
    config(&format!(
        "engine = \"oracle\"\nre = {re:?}\noracle_modes = 128\ndt_factor = {dt_factor:?}\nend_tbar = {end:?}\n\
         qoi_every = {qoi_every}\nsnapshot_tbar = []\n"
    ))
}

fn cross_engine(label: &str, fem: &RunOutput, oracle: &RunOutput, tmax: f64) -> (bool, String) {
    let r = compare(&series(&oracle.records), &series(&fem.records), tmax, &[("K", 0.01), ("E", 0.01), ("P", 0.05)]).unwrap();
    let detail = r
        .iter()
        .map(|q| format!("{} {:.3e} at t/tbar {:.2} (< {})", q.qoi, q.max_rel_deviation, q.at_tbar, q.tolerance))
        .collect::<Vec<_>>()
        .join(", ");
    (r.iter().all(|q| q.pass), format!("{label}: {detail}"))
}

#[test]
#[ignore = "50000 FEM steps plus the oracle (under an hour)"]
fn criterion_4_cross_engine() {
    let fem = run_in_memory(&kh_fem(100.0, 16, 4, 1.0, 50.0, 250)).unwrap();
    let oracle = run_in_memory(&kh_oracle(100.0, 1.0, 50.0, 250)).unwrap();
    assert!(fem.failure.is_none() && oracle.failure.is_none());
    let (pass, detail) = cross_engine("FEM RT4 16x16 vs oracle 128x128, t/tbar <= 50", &fem, &oracle, 50.0);
    selforg_line("8 (criterion 4 runs)", kh::viscosity(100.0), &[("fem", &fem), ("oracle", &oracle)]);
    let pass = verdict("4", pass, &detail);
    assert!(pass);
}

/// Same comparison with the layer resolved (RT8), for context next to the
/// criterion itself; only reported.
#[test]
#[ignore = "12500 steps at n=16, k=8 plus the oracle"]
fn criterion_4_supplement_rt8() {
    let fem = run_in_memory(&kh_fem(100.0, 16, 8, 4.0, 50.0, 62)).unwrap();
    let oracle = run_in_memory(&kh_oracle(100.0, 4.0, 50.0, 62)).unwrap();
    let (pass, detail) = cross_engine("supplement, FEM RT8 16x16 vs oracle, dt x4", &fem, &oracle, 50.0);
    say(&format!("criterion 4 (supplement, not the criterion): {} | {detail}", if pass { "within" } else { "outside" }));
}

// ---------------------------------------------------------------- 5

#[test]
#[ignore = "100000 steps at n=16, k=4 plus a 20000-step check (about an hour)"]
fn criterion_5_energy_loss() {
    // step-size insensitivity first: default step against four times it
    let fine = run_in_memory(&kh_fem(100.0, 16, 4, 1.0, 20.0, 1000)).unwrap();
    let coarse = run_in_memory(&kh_fem(100.0, 16, 4, 4.0, 20.0, 250)).unwrap();
    let mut dk = 0.0f64;
    let mut de = 0.0f64;
    for (a, b) in fine.records.iter().zip(&coarse.records) {
        assert_eq!(a.step, 4 * b.step);
        dk = dk.max(rel(b.k, a.k));
        de = de.max(rel(b.e, a.e));
    }
    let insensitive = dk <= 1e-4 && de <= 1e-3;

    let long = run_in_memory(&kh_fem(100.0, 16, 4, 4.0, 400.0, 250)).unwrap();
    assert!(long.failure.is_none(), "{:?}", long.failure);
    let k0 = long.records[0].k;
    let last = long.records.last().unwrap();
    let loss = 100.0 * (1.0 - last.k / k0);
    let ok = (loss - 20.41).abs() <= 0.5;
    selforg_line("8 (criterion 5 run)", kh::viscosity(100.0), &[("fem", &long)]);
    let pass = verdict(
        "5",
        ok && insensitive,
        &format!(
            "RT4 16x16, Re=100, dt = 4 dt0: energy loss at t/tbar = {:.1} is {loss:.3}% (20.41 +- 0.5); \
             dt vs 4 dt to t/tbar = 20: max rel K dev {dk:.2e} (<= 1e-4), E dev {de:.2e} (<= 1e-3)",
            last.t_over_tbar
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 6

#[test]
#[ignore = "200000 steps at n=16, k=8 (overnight)"]
fn criterion_6_numerical_dissipation() {
    let out = run_in_memory(&kh_fem(10000.0, 16, 8, 1.0, 200.0, 20)).unwrap();
    assert!(out.failure.is_none(), "{:?}", out.failure);
    let last = out.records.last().unwrap();
    let ok_int = (2.5e-5..=2.3e-4).contains(&last.eps_int);
    let ok_rel = (1.7e-2..=1.5e-1).contains(&last.eps_rel);
    selforg_line("8 (criterion 6 run)", kh::viscosity(10000.0), &[("fem", &out)]);
    let pass = verdict(
        "6",
        ok_int && ok_rel,
        &format!(
            "RT8 16x16, Re=10000, t/tbar = {:.1}: eps_int = {:.3e} in [2.5e-5, 2.3e-4], eps_rel = {:.3e} in [1.7e-2, 1.5e-1]",
            last.t_over_tbar, last.eps_int, last.eps_rel
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 7 and 8

fn example_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/examples")
}

/// Every shipped example, run once in memory and shared by criteria 7 and 8.
fn example_runs() -> &'static [(String, RunConfig, RunOutput)] {
    static RUNS: OnceLock<Vec<(String, RunConfig, RunOutput)>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let mut files: Vec<_> = std::fs::read_dir(example_dir())
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect();
        files.sort();
        assert!(!files.is_empty());
        files
            .into_iter()
            .map(|p| {
                let cfg = RunConfig::load(&p, &[]).unwrap();
                let out = run_in_memory(&cfg).unwrap();
                (p.file_name().unwrap().to_string_lossy().into_owned(), cfg, out)
            })
            .collect()
    })
}

/// Peaks of the initial spectrum, ignoring the mean flow at κ = 0.
fn top_two_wavenumbers(energy: &[f64]) -> [usize; 2] {
    let mut idx: Vec<usize> = (1..energy.len()).collect();
    idx.sort_by(|a, b| energy[*b].total_cmp(&energy[*a]));
    let mut t = [idx[0], idx[1]];
    t.sort();
    t
}

#[test]
fn criterion_7_monotonicity_suite() {
    let mut all = true;
    let mut parts = Vec::new();
    for (name, _, out) in example_runs() {
        assert!(out.failure.is_none(), "{name}: {:?}", out.failure);
        let k0 = out.records[0].k;
        let slack = 1e-10 * k0;
        let k_up = out.records.windows(2).map(|w| w[1].k - w[0].k).fold(f64::NEG_INFINITY, f64::max);
        let e_up = out.records.windows(2).map(|w| w[1].e - w[0].e).fold(f64::NEG_INFINITY, f64::max);
        let delta0 = out.records[0].delta_ratio;
        let spec0 = out.spectra.iter().find(|s| s.t == 0.0).expect("example has a snapshot at t = 0");
        let peaks = top_two_wavenumbers(&spec0.energy);
        let ok = k_up <= slack
            && e_up <= slack
            && out.max_rel_divergence <= 1e-10
            && (delta0 - 1.0).abs() <= 0.02
            && peaks == [4, 10];
        all &= ok;
        parts.push(format!(
            "{name}: max dK {k_up:.2e}, max dE {e_up:.2e} (<= {slack:.1e}), div {:.1e}, delta(0)/delta0 {delta0:.4}, peaks {peaks:?}",
            out.max_rel_divergence
        ));
    }
    let pass = verdict("7", all, &parts.join("; "));
    assert!(pass);
}

/// Relative tolerance on the per-sample increase of Q.
const Q_TOL: f64 = 1e-8;

fn selforg_check(label: &str, traj: &[TrajectoryPoint], nu: f64) -> (bool, String) {
    let r = decay_bound_check(traj, nu, mu1(ModeConvention::default()), Q_TOL);
    let e_ok = r.e_bound.iter().all(|b| *b);
    let q_ok = r.q_monotone.iter().all(|b| *b);
    let gap_ok = r.lambda_ge_q.iter().all(|b| *b);
    let q_rise = traj.windows(2).map(|w| (w[1].e / w[1].k) / (w[0].e / w[0].k) - 1.0).fold(0.0, f64::max);
    (
        e_ok && q_ok && gap_ok,
        format!(
            "{label}: E bound {e_ok}, Q non-increasing {q_ok} (largest relative rise {q_rise:.1e}), min (Lambda - Q)/Q = {:.3e}",
            r.min_gap
        ),
    )
}

fn selforg_line(id: &str, nu: f64, runs: &[(&str, &RunOutput)]) -> bool {
    let mut all = true;
    let mut parts = Vec::new();
    for (label, out) in runs {
        let (ok, s) = selforg_check(label, &out.trajectory, nu);
        all &= ok;
        parts.push(s);
    }
    verdict(id, all, &parts.join("; "))
}

#[test]
fn criterion_8_self_organization() {
    let mut all = true;
    let mut parts = Vec::new();
    for (name, cfg, out) in example_runs() {
        let (ok, s) = selforg_check(name, &out.trajectory, cfg.nu());
        all &= ok;
        parts.push(s);
    }
    let pass = verdict("8", all, &parts.join("; "));

    // A Taylor vortex is the equality case Λ = Q: Q is constant, so the
    // projected mode's discretization error alone decides the sign of its
    // drift. Reported for context, not part of the verdict.
    let nu = 1e-2;
    let mode = EigenMode::unit(1, 1, Variant::Sin);
    let d = stream_disc(8, 4, nu);
    let x0 = d.project(&|x, y| mode.velocity(x, y), 10).unwrap();
    let dt = 1e-2;
    let mut st = Stepper::new(&d, StepperOptions::new(dt)).unwrap();
    let mut s = TimeState::initial(x0, dt);
    let mut traj = Vec::new();
    for _ in 0..50 {
        let e = qoi::energies(&d.space, &d.velocity(&s.x));
        traj.push(TrajectoryPoint { t: s.t(), k: e.k, e: e.e, p: e.p });
        st.step(&mut s).unwrap();
    }
    let (ok, line) = selforg_check("Taylor vortex (1,1), RT4 8x8", &traj, nu);
    say(&format!("criterion 8 (supplement, equality case, not counted): {} | {line}", if ok { "holds" } else { "does not hold" }));
    assert!(pass);
}

// ---------------------------------------------------------------- 9

#[test]
fn criterion_9_determinism() {
    let cfg = config(
        "re = 10000.0\nn = 6\nk = 3\ndt_factor = 4.0\nend_tbar = 1.0\nqoi_every = 10\nsnapshot_tbar = []\nthickness_lines = 128\n",
    );
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for tag in ["a", "b"] {
        let mut c = cfg.clone();
        c.output_dir = dir.path().join(tag);
        khflow::driver::run(&c).unwrap();
        files.push(std::fs::read(c.output_dir.join("qoi.csv")).unwrap());
    }
    let same = files[0] == files[1];
    let pass = verdict("9 (determinism)", same, &format!("two runs of one config, qoi.csv of {} bytes bitwise identical: {same}", files[0].len()));
    assert!(pass);
}

#[test]
#[ignore = "two runs at n=32, k=4 to t/tbar = 400 (several hours)"]
fn criterion_9_sensitivity() {
    let mut cfg = kh_fem(10000.0, 32, 4, 4.0, 400.0, 250);
    cfg.perturbation = PerturbationSpec::SolverRtol { rtol: 1e-6 };
    cfg.output_dir = PathBuf::new();
    let (reference, perturbed, rep) = run_pair(&cfg, 0.1).unwrap();
    let early = rep.max_p_deviation_until(50.0);
    let late = rep.palinstrophy_deviation.iter().filter(|(t, _)| *t > 50.0 && *t <= 400.0 + 1e-9).map(|p| p.1).fold(0.0, f64::max);
    let refine = |o: &RunOutput| o.refinements.map_or(0, |s| s.max);
    let pass = verdict(
        "9 (sensitivity)",
        early < 0.01 && late > 0.1,
        &format!(
            "RT4 32x32, Re=10000, solver rtol 1e-6 vs 1e-12: max P deviation {early:.3e} for t/tbar <= 50 (< 1%), \
             {late:.3e} for 50 < t/tbar <= 400 (> 10%); most refinement steps per solve: reference {}, perturbed {}",
            refine(&reference),
            refine(&perturbed)
        ),
    );
    assert!(pass);
}
