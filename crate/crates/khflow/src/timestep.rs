//! SBDF2 IMEX integration of `M du/dt + A u + C(u) u = 0` in incremental form.
//!
//! The first step is implicit-explicit Euler with `M + Δt A`; later steps use
//! `M + ⅔Δt A` with second-order extrapolation of the convection term. Both
//! operators are factorized once per run. Time is always `step · Δt`.

use crate::linalg::{FactorizedOperator, RefineSettings};
use crate::system::Discretization;
use crate::Error;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// Single-step relative K growth that aborts a run.
pub const BLOWUP_GROWTH: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct TimeState {
    pub x_prev: Option<Vec<f64>>,
    pub x: Vec<f64>,
    pub step: u64,
    pub dt: f64,
}

impl TimeState {
    pub fn initial(x: Vec<f64>, dt: f64) -> Self {
        TimeState { x_prev: None, x, step: 0, dt }
    }

    pub fn t(&self) -> f64 {
        self.step as f64 * self.dt
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepperOptions {
    pub dt: f64,
    pub refine: RefineSettings,
    /// Factorize with the pressure-mass regularization and skip refinement.
    pub regularized: bool,
}

impl StepperOptions {
    pub fn new(dt: f64) -> Self {
        StepperOptions { dt, refine: RefineSettings::default(), regularized: false }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RefinementStats {
    pub solves: u64,
    pub total: u64,
    pub max: u64,
    pub histogram: [u64; 4],
    pub max_rel_residual: f64,
}

impl RefinementStats {
    fn record(&mut self, r: usize, res: f64) {
        self.solves += 1;
        self.total += r as u64;
        self.max = self.max.max(r as u64);
        self.histogram[r.min(3)] += 1;
        self.max_rel_residual = self.max_rel_residual.max(res);
    }

    pub fn mean(&self) -> f64 {
        if self.solves == 0 {
            0.0
        } else {
            self.total as f64 / self.solves as f64
        }
    }
}

/// Hook applied to the unknown vector after every completed step.
pub type StepHook<'h> = Box<dyn FnMut(u64, &mut [f64]) + 'h>;

pub struct Stepper<'a> {
    pub disc: &'a Discretization,
    pub opts: StepperOptions,
    euler: Option<FactorizedOperator>,
    sbdf: Option<FactorizedOperator>,
    conv_prev: Option<Vec<f64>>,
    pub stats: RefinementStats,
    pub max_cfl: f64,
    hook: Option<StepHook<'a>>,
}

impl<'a> Stepper<'a> {
    pub fn new(disc: &'a Discretization, opts: StepperOptions) -> Result<Self, Error> {
        if !(opts.dt > 0.0) || !opts.dt.is_finite() {
            return Err(Error::Invalid("time step must be positive".into()));
        }
        Ok(Stepper { disc, opts, euler: None, sbdf: None, conv_prev: None, stats: RefinementStats::default(), max_cfl: 0.0, hook: None })
    }

    pub fn set_hook(&mut self, hook: StepHook<'a>) {
        self.hook = Some(hook);
    }

    fn operator(&mut self, euler: bool) -> Result<&FactorizedOperator, Error> {
        let gamma = if euler { self.opts.dt } else { 2.0 / 3.0 * self.opts.dt };
        let slot = if euler { &mut self.euler } else { &mut self.sbdf };
        if slot.is_none() {
            *slot = Some(self.disc.factorize(gamma, RefineSettings::default(), self.opts.regularized)?);
        }
        let op = slot.as_mut().unwrap();
        op.settings = {
            let mut s = self.opts.refine;
            s.enabled = s.enabled && !self.opts.regularized;
            s
        };
        Ok(op)
    }

    /// Advances `state` by one step (Euler when no previous state exists).
    pub fn step(&mut self, state: &mut TimeState) -> Result<(), Error> {
        if state.dt != self.opts.dt {
            return Err(Error::Invalid("state and stepper time steps differ".into()));
        }
        let dt = self.opts.dt;
        let d = self.disc;
        let k_old = d.kinetic_energy(&state.x);
        let conv = d.convection_residual(&state.x);
        let ax = d.sys_stokes.mul_vec(&state.x);
        let n = state.x.len();
        let mut rhs = vec![0.0; n];
        match &state.x_prev {
            None => {
                for i in 0..n {
                    rhs[i] = -(dt * conv[i] + dt * ax[i]);
                }
            }
            Some(xp) => {
                if self.conv_prev.is_none() {
                    self.conv_prev = Some(d.convection_residual(xp));
                }
                let cp = self.conv_prev.as_ref().unwrap();
                let diff: Vec<f64> = state.x.iter().zip(xp).map(|(a, b)| a - b).collect();
                let md = d.sys_mass.mul_vec(&diff);
                let (c43, c23) = (4.0 / 3.0 * dt, 2.0 / 3.0 * dt);
                for i in 0..n {
                    rhs[i] = -(c43 * conv[i] - c23 * cp[i] + c23 * ax[i] - md[i] / 3.0);
                }
            }
        }
        let euler = state.x_prev.is_none();
        let (delta, st) = self.operator(euler)?.solve_refined(&rhs)?;
        self.stats.record(st.refinements, st.rel_residual);
        let mut next: Vec<f64> = state.x.iter().zip(&delta).map(|(a, b)| a + b).collect();
        if let Some(h) = self.hook.as_mut() {
            h(state.step + 1, &mut next);
        }
        let k_new = d.kinetic_energy(&next);
        if !k_new.is_finite() || k_new > k_old * (1.0 + BLOWUP_GROWTH) + f64::MIN_POSITIVE {
            return Err(Error::BlowUp(format!(
                "kinetic energy grew from {k_old:e} to {k_new:e} in step {} (Δt = {dt:e}); reduce the time step",
                state.step + 1
            )));
        }
        self.conv_prev = Some(conv);
        state.x_prev = Some(std::mem::replace(&mut state.x, next));
        state.step += 1;
        Ok(())
    }

    /// CFL number `Δt (k+1)² max|u| / h`, with `max|u|` sampled on a
    /// `(k+2)²` point lattice per element. Recorded; never adapts `Δt`.
    pub fn cfl(&mut self, state: &TimeState) -> f64 {
        let c = cfl_number(self.disc, &state.x, self.opts.dt);
        self.max_cfl = self.max_cfl.max(c);
        c
    }
}

pub fn cfl_number(d: &Discretization, x: &[f64], dt: f64) -> f64 {
    let sp = &d.space;
    let u = d.velocity(x);
    let m = sp.k + 2;
    let mut umax = 0.0f64;
    for e in 0..sp.num_elements() {
        for a in 0..m {
            for b in 0..m {
                let xi = -1.0 + 2.0 * a as f64 / (m - 1) as f64;
                let eta = -1.0 + 2.0 * b as f64 / (m - 1) as f64;
                let v = sp.evaluate_reference(e, &u, xi, eta);
                umax = umax.max(v[0].hypot(v[1]));
            }
        }
    }
    let k1 = (sp.k + 1) as f64;
    dt * k1 * k1 * umax / sp.h()
}

/// Restartable snapshot of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config_hash: String,
    pub state: TimeState,
    /// Caller-defined accumulators (e.g. the dissipation integral).
    pub extra: Vec<f64>,
}

const MAGIC: &[u8; 8] = b"KHFLOWCP";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config_hash: String,
    step: u64,
    dt_bits: u64,
    n: u64,
    has_prev: bool,
    extra: u64,
    layout: String,
}

fn put(w: &mut impl Write, v: &[f64]) -> std::io::Result<()> {
    for x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn take(r: &mut impl Read, n: usize) -> Result<Vec<f64>, Error> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf).map_err(|_| Error::Format("checkpoint truncated".into()))?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

impl Checkpoint {
    pub fn write(&self, path: &Path) -> Result<(), Error> {
        let h = Header {
            config_hash: self.config_hash.clone(),
            step: self.state.step,
            dt_bits: self.state.dt.to_bits(),
            n: self.state.x.len() as u64,
            has_prev: self.state.x_prev.is_some(),
            extra: self.extra.len() as u64,
            layout: "f64le: x_prev (if has_prev), x, extra".into(),
        };
        let js = serde_json::to_vec(&h).map_err(|e| Error::Format(e.to_string()))?;
        let tmp = path.with_extension("tmp");
        {
            let mut f = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
            f.write_all(MAGIC)?;
            f.write_all(&VERSION.to_le_bytes())?;
            f.write_all(&(js.len() as u64).to_le_bytes())?;
            f.write_all(&js)?;
            if let Some(p) = &self.state.x_prev {
                put(&mut f, p)?;
            }
            put(&mut f, &self.state.x)?;
            put(&mut f, &self.extra)?;
            f.flush()?;
        }
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, Error> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 8];
        f.read_exact(&mut magic).map_err(|_| Error::Format("checkpoint truncated".into()))?;
        if &magic != MAGIC {
            return Err(Error::Format("not a checkpoint file".into()));
        }
        let mut b4 = [0u8; 4];
        f.read_exact(&mut b4)?;
        let v = u32::from_le_bytes(b4);
        if v != VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {v}")));
        }
        let mut b8 = [0u8; 8];
        f.read_exact(&mut b8)?;
        let len = u64::from_le_bytes(b8) as usize;
        let mut js = vec![0u8; len];
        f.read_exact(&mut js)?;
        let h: Header = serde_json::from_slice(&js).map_err(|e| Error::Format(e.to_string()))?;
        let n = h.n as usize;
        let x_prev = if h.has_prev { Some(take(&mut f, n)?) } else { None };
        let x = take(&mut f, n)?;
        let extra = take(&mut f, h.extra as usize)?;
        Ok(Checkpoint {
            config_hash: h.config_hash,
            state: TimeState { x_prev, x, step: h.step, dt: f64::from_bits(h.dt_bits) },
            extra,
        })
    }
}
