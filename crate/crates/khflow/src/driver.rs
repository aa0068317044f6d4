//! Runs a configured simulation with either engine, sampling QoIs and
//! writing every output file.

use crate::assembly::Convection;
use crate::config::{Engine, RunConfig};
use crate::kh::{self, InitialCondition};
use crate::linalg::RefineSettings;
use crate::mesh::StructuredMesh;
use crate::output::{self, GridFields, QoiWriter};
use crate::perturb::{self, PerturbationSpec};
use crate::qoi::{self, DissipationAccumulator, Energies, ProfileRecord, QoiRecord, SpectrumRecord};
use crate::selforg::{self, EigenMode, TrajectoryPoint};
use crate::space::{broken_curl, build_space};
use crate::spectral::{Oracle, SpectralState};
use crate::system::Discretization;
use crate::timestep::{Checkpoint, RefinementStats, Stepper, StepperOptions, TimeState};
use crate::Error;
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Everything a run produced, including a failure that stopped it early.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunOutput {
    pub config_hash: String,
    pub engine: String,
    pub records: Vec<QoiRecord>,
    pub trajectory: Vec<TrajectoryPoint>,
    #[serde(skip)]
    pub spectra: Vec<SpectrumRecord>,
    #[serde(skip)]
    pub profiles: Vec<ProfileRecord>,
    pub refinements: Option<RefinementStats>,
    pub max_cfl: f64,
    /// Largest `‖div u‖ / ‖curl u‖` over the samples.
    pub max_rel_divergence: f64,
    pub n_unknowns: usize,
    pub steps: u64,
    pub dt: f64,
    pub warnings: Vec<String>,
    pub failure: Option<String>,
    #[serde(skip)]
    pub final_state: Vec<f64>,
}

/// Where files go; `None` keeps everything in memory.
struct Sink<'a> {
    dir: Option<&'a Path>,
    hash: String,
    qoi: Option<QoiWriter>,
}

impl Sink<'_> {
    fn path(&self, name: &str) -> Option<PathBuf> {
        self.dir.map(|d| d.join(name))
    }
}

/// CFL number above which a warning is recorded.
pub const CFL_WARN: f64 = 1.0;

/// Validates, creates the output directory and runs; the run's failure, if
/// any, is returned as an error after the partial outputs are written.
pub fn run(cfg: &RunConfig) -> Result<RunOutput, Error> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let out = simulate(cfg, Some(&cfg.output_dir))?;
    if let Some(f) = &out.failure {
        return Err(Error::Solver(format!("run stopped early: {f}")));
    }
    Ok(out)
}

/// Runs without touching the file system.
pub fn run_in_memory(cfg: &RunConfig) -> Result<RunOutput, Error> {
    cfg.validate()?;
    simulate(cfg, None)
}

fn snapshot_steps(cfg: &RunConfig) -> Vec<(f64, u64)> {
    let total = cfg.steps();
    let mut v: Vec<(f64, u64)> =
        cfg.snapshot_tbar.iter().map(|&t| (t, cfg.steps_to(t))).filter(|&(_, s)| s <= total).collect();
    v.sort_by_key(|p| p.1);
    v.dedup_by_key(|p| p.1);
    v
}

fn tag(t: f64) -> String {
    format!("{t}").replace('.', "p")
}

fn simulate(cfg: &RunConfig, dir: Option<&Path>) -> Result<RunOutput, Error> {
    let hash = cfg.hash();
    let engine = match cfg.engine {
        Engine::Fem => "fem",
        Engine::Oracle => "oracle",
    };
    let mut sink = Sink { dir, hash: hash.clone(), qoi: None };
    if let Some(p) = sink.path("qoi.csv") {
        sink.qoi = Some(QoiWriter::create(&p, engine, &hash)?);
    }
    let mut out = RunOutput { config_hash: hash, engine: engine.into(), dt: cfg.dt(), ..Default::default() };
    let res = match cfg.engine {
        Engine::Fem => run_fem(cfg, &mut sink, &mut out),
        Engine::Oracle => run_oracle(cfg, &mut sink, &mut out),
    };
    if let Err(e) = res {
        out.failure = Some(e.to_string());
    }
    if let Some(w) = sink.qoi.as_mut() {
        w.flush()?;
    }
    if let Some(p) = sink.path("trajectory.csv") {
        let mut rows = selforg::trajectory_rows(&out.trajectory);
        rows.iter_mut().for_each(|r| r[0] /= kh::tbar());
        output::write_trajectory(&p, &sink.hash, &rows)?;
    }
    if let Some(p) = sink.path("run_meta.json") {
        let meta = serde_json::json!({
            "schema": output::META_SCHEMA,
            "config_hash": out.config_hash,
            "config": cfg,
            "engine": out.engine,
            "perturbation": cfg.perturbation.label(),
            "reference_reynolds_number": cfg.is_reference_re(),
            "n_unknowns": out.n_unknowns,
            "steps": out.steps,
            "dt": out.dt,
            "refinements": out.refinements,
            "max_cfl": out.max_cfl,
            "max_rel_divergence": out.max_rel_divergence,
            "warnings": out.warnings,
            "failure": out.failure,
        });
        std::fs::write(p, serde_json::to_string_pretty(&meta).expect("meta serializes"))?;
    }
    Ok(out)
}

/// Appends a sample and streams it to `qoi.csv`.
fn record(
    sink: &mut Sink,
    out: &mut RunOutput,
    acc: &mut DissipationAccumulator,
    nu: f64,
    step: u64,
    t: f64,
    en: Energies,
    delta: Result<f64, Error>,
) -> Result<(), Error> {
    let (eps_int, eps_rel) = acc.push(t, en.k, en.e, nu);
    let delta_ratio = delta.unwrap_or_else(|e| {
        if out.warnings.len() < 16 {
            out.warnings.push(format!("step {step}: {e}"));
        }
        f64::NAN
    });
    let r = QoiRecord { step, t, t_over_tbar: t / kh::tbar(), k: en.k, e: en.e, p: en.p, delta_ratio, eps_int, eps_rel };
    if let Some(w) = sink.qoi.as_mut() {
        w.push(&r)?;
    }
    out.records.push(r);
    out.trajectory.push(TrajectoryPoint { t, k: en.k, e: en.e, p: en.p });
    Ok(())
}

fn emit_snapshot(
    sink: &Sink,
    out: &mut RunOutput,
    tbar: f64,
    spec: SpectrumRecord,
    prof: ProfileRecord,
    fields: impl FnOnce() -> GridFields,
) -> Result<(), Error> {
    let t = tag(tbar);
    if let Some(p) = sink.path(&format!("spectrum_tbar{t}.csv")) {
        output::write_spectrum(&p, &sink.hash, &spec)?;
    }
    if let Some(p) = sink.path(&format!("profile_tbar{t}.csv")) {
        output::write_profile(&p, &sink.hash, &prof)?;
    }
    if let Some(p) = sink.path(&format!("field_tbar{t}.vtk")) {
        output::write_vtk(&p, &sink.hash, tbar, &fields())?;
    }
    out.spectra.push(spec);
    out.profiles.push(prof);
    Ok(())
}

fn initial_condition(cfg: &RunConfig) -> InitialCondition {
    InitialCondition { include_20pi: cfg.include_20pi, c_n: cfg.c_n }
}

fn run_fem(cfg: &RunConfig, sink: &mut Sink, out: &mut RunOutput) -> Result<(), Error> {
    let space = build_space(StructuredMesh::new(cfg.n)?, cfg.k)?;
    let quad = match cfg.perturbation {
        PerturbationSpec::ConvectionQuadratureOrder { order } => order,
        _ => Convection::default_order(cfg.k),
    };
    let nu = cfg.nu();
    let disc = Discretization::new(space, nu, cfg.penalty, cfg.formulation, quad)?;
    out.n_unknowns = disc.n_unknowns;
    let dt = cfg.dt();
    let mut opts = StepperOptions::new(dt);
    opts.refine = RefineSettings { rtol: cfg.solver_rtol, max_refinements: cfg.max_refinements, enabled: true };
    match cfg.perturbation {
        PerturbationSpec::SolverRtol { rtol } => opts.refine.rtol = rtol,
        PerturbationSpec::RegularizedDirectSolve => opts.regularized = true,
        _ => {}
    }
    let mut stepper = Stepper::new(&disc, opts)?;
    if let PerturbationSpec::RoundingNoise { amplitude, seed } = cfg.perturbation {
        stepper.set_hook(Box::new(move |step, x| perturb::rounding_noise(x, amplitude, seed, step)));
    }
    let npts = cfg.k + 6;
    let mut acc = DissipationAccumulator::default();
    let mut state = match &cfg.restart {
        Some(p) => {
            let c = Checkpoint::read(p)?;
            if c.config_hash != out.config_hash {
                return Err(Error::Invalid(format!("checkpoint {} belongs to a different configuration", p.display())));
            }
            if c.state.dt != dt || c.state.x.len() != disc.n_unknowns || c.extra.len() != 5 {
                return Err(Error::Invalid("checkpoint does not match the discretization".into()));
            }
            acc = DissipationAccumulator {
                k0: c.extra[0],
                last_t: c.extra[1],
                last_e: c.extra[2],
                integral: c.extra[3],
                started: c.extra[4] != 0.0,
            };
            c.state
        }
        None => {
            let ic = initial_condition(cfg);
            TimeState::initial(disc.project(&|x, y| ic.velocity(x, y), npts)?, dt)
        }
    };
    let seed = match cfg.perturbation {
        PerturbationSpec::EigenmodeSeed { k1, k2, amplitude, variant, at_tbar } => {
            let m = EigenMode::unit(k1, k2, variant);
            Some((cfg.steps_to(at_tbar), amplitude, disc.project(&|x, y| m.velocity(x, y), npts)?))
        }
        _ => None,
    };
    let total = cfg.steps();
    let snaps = snapshot_steps(cfg);
    let start = state.step;
    loop {
        let step = state.step;
        if let Some((at, amp, dx)) = &seed {
            if *at == step {
                for v in [Some(&mut state.x), state.x_prev.as_mut()].into_iter().flatten() {
                    v.iter_mut().zip(dx).for_each(|(a, b)| *a += amp * b);
                }
            }
        }
        if cfg.checkpoint_every > 0 && step > start && step % cfg.checkpoint_every == 0 {
            if let Some(p) = sink.path("checkpoint.bin") {
                let extra = vec![acc.k0, acc.last_t, acc.last_e, acc.integral, if acc.started { 1.0 } else { 0.0 }];
                Checkpoint { config_hash: out.config_hash.clone(), state: state.clone(), extra }.write(&p)?;
            }
        }
        let u = disc.velocity(&state.x);
        if step % cfg.qoi_every == 0 || step == total {
            let en = qoi::energies(&disc.space, &u);
            let delta = qoi::vorticity_thickness(&disc.space, &u, cfg.thickness_lines);
            record(sink, out, &mut acc, nu, step, state.t(), en, delta)?;
            let dn: f64 = disc.space.divergence_norms(&u).iter().map(|v| v * v).sum::<f64>().sqrt();
            let scale = (2.0 * en.e).sqrt();
            if scale > 0.0 {
                out.max_rel_divergence = out.max_rel_divergence.max(dn / scale);
            }
            let c = stepper.cfl(&state);
            if c > CFL_WARN && !out.warnings.iter().any(|w| w.starts_with("CFL")) {
                out.warnings.push(format!("CFL number {c:.3} exceeds {CFL_WARN} at step {step}; the time step is not adapted"));
            }
        }
        if let Some(&(tb, _)) = snaps.iter().find(|s| s.1 == step) {
            let t = state.t();
            let spec = qoi::spectrum(&disc.space, &u, t, cfg.spectrum_lines, cfg.spectrum_samples);
            let prof = qoi::mean_profile(&disc.space, &u, t, cfg.spectrum_samples, cfg.spectrum_lines);
            emit_snapshot(sink, out, tb, spec, prof, || {
                let g = cfg.snapshot_grid;
                let w = broken_curl(&disc.space, &u);
                let pts: Vec<(f64, f64)> = (0..g * g)
                    .map(|i| ((i % g) as f64 / (g - 1) as f64, (i / g) as f64 / (g - 1) as f64))
                    .collect();
                GridFields {
                    nx: g,
                    ny: g,
                    dx: 1.0 / (g - 1) as f64,
                    dy: 1.0 / (g - 1) as f64,
                    vorticity: pts.iter().map(|p| w.evaluate(p.0, p.1)[0]).collect(),
                    velocity: disc.space.evaluate(&u, &pts),
                }
            })?;
        }
        out.steps = step;
        out.refinements = Some(stepper.stats);
        out.max_cfl = stepper.max_cfl;
        if step >= total {
            break;
        }
        if let Err(e) = stepper.step(&mut state) {
            out.final_state = state.x.clone();
            return Err(e);
        }
    }
    out.final_state = state.x;
    Ok(())
}

fn run_oracle(cfg: &RunConfig, sink: &mut Sink, out: &mut RunOutput) -> Result<(), Error> {
    if cfg.restart.is_some() || cfg.checkpoint_every > 0 {
        return Err(Error::Invalid("checkpoints are supported for the fem engine only".into()));
    }
    let nu = cfg.nu();
    let dt = cfg.dt();
    let m = cfg.oracle_modes;
    let o = Oracle::new(m, m, nu, dt)?;
    let ic = initial_condition(cfg);
    let mut s: SpectralState = o.init(&|x, y| ic.vorticity(x, y));
    out.n_unknowns = m * m;
    out.warnings.push(format!("initial spectral truncation (relative L2) {:.3e}", s.truncation));
    let mut acc = DissipationAccumulator::default();
    let total = cfg.steps();
    let snaps = snapshot_steps(cfg);
    let lines = qoi::line_positions(cfg.thickness_lines);
    loop {
        let step = s.step;
        match cfg.perturbation {
            PerturbationSpec::EigenmodeSeed { k1, k2, amplitude, variant, at_tbar } if cfg.steps_to(at_tbar) == step => {
                let mode = EigenMode::unit(k1, k2, variant);
                o.add_vorticity(&mut s, amplitude, &|x, y| mode.vorticity(x, y));
            }
            _ => {}
        }
        if step % cfg.qoi_every == 0 || step == total {
            let en = o.energies(&s);
            let delta = qoi::thickness_from_profile(&o.mean_vorticity(&s, &lines));
            record(sink, out, &mut acc, nu, step, s.t(), en, delta)?;
        }
        if let Some(&(tb, _)) = snaps.iter().find(|p| p.1 == step) {
            let samples = o.sample_u1(&s);
            let ys: Vec<f64> = (0..=m).map(|j| j as f64 / m as f64).collect();
            let spec = qoi::spectrum_from_samples(s.t(), &samples);
            let prof = qoi::profile_from_samples(s.t(), &ys, &samples);
            emit_snapshot(sink, out, tb, spec, prof, || {
                let (u, v) = o.velocity(&s);
                GridFields {
                    nx: m,
                    ny: m + 1,
                    dx: 1.0 / m as f64,
                    dy: 1.0 / m as f64,
                    vorticity: o.vorticity(&s),
                    velocity: u.iter().zip(&v).map(|(a, b)| [*a, *b]).collect(),
                }
            })?;
        }
        out.steps = step;
        if step >= total {
            break;
        }
        o.step(&mut s)?;
        if let PerturbationSpec::RoundingNoise { amplitude, seed } = cfg.perturbation {
            let mut flat: Vec<f64> = s.w.iter().flat_map(|c| [c.re, c.im]).collect();
            perturb::rounding_noise(&mut flat, amplitude, seed, s.step);
            for (c, v) in s.w.iter_mut().zip(flat.chunks_exact(2)) {
                *c = num_complex::Complex64::new(v[0], v[1]);
            }
        }
    }
    Ok(())
}

/// Runs the reference configuration (perturbation removed) and the
/// perturbed one, then compares their trajectories.
pub fn run_pair(cfg: &RunConfig, threshold: f64) -> Result<(RunOutput, RunOutput, perturb::DivergenceReport), Error> {
    let mut reference = cfg.clone();
    reference.perturbation = PerturbationSpec::None;
    let (ra, rb) = match &cfg.output_dir {
        d if d.as_os_str().is_empty() => (run_in_memory(&reference)?, run_in_memory(cfg)?),
        d => {
            reference.output_dir = d.join("reference");
            let mut pert = cfg.clone();
            pert.output_dir = d.join("perturbed");
            for c in [&reference, &pert] {
                c.validate()?;
                std::fs::create_dir_all(&c.output_dir)?;
            }
            (simulate(&reference, Some(&reference.output_dir))?, simulate(&pert, Some(&pert.output_dir))?)
        }
    };
    let mut rep = perturb::divergence_report(&ra.config_hash, &rb.config_hash, &ra.records, &rb.records, threshold)?;
    rep.failure = ra.failure.clone().or(rb.failure.clone());
    if !cfg.output_dir.as_os_str().is_empty() {
        let d = &cfg.output_dir;
        std::fs::write(d.join("divergence_summary.txt"), rep.summary())?;
        let mut w = csv::Writer::from_path(d.join("divergence.csv")).map_err(|e| Error::Format(e.to_string()))?;
        w.write_record(["schema", "t_over_tbar", "rel_dev_P"]).map_err(|e| Error::Format(e.to_string()))?;
        for (t, v) in &rep.palinstrophy_deviation {
            w.write_record([output::DIVERGENCE_SCHEMA.to_string(), output::num(*t), output::num(*v)])
                .map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush()?;
    }
    Ok((ra, rb, rep))
}
