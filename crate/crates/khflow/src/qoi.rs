//! Quantities of interest: kinetic energy, enstrophy, palinstrophy,
//! vorticity thickness, line-averaged profiles, longitudinal spectra and the
//! time-integrated numerical dissipation.
//!
//! K, E and P are evaluated exactly from the element-wise Legendre
//! expansion (equivalent to a Gauss rule of sufficient order), using broken
//! derivatives.

use crate::kh::{DELTA0, U_INF};
use crate::poly;
use crate::space::{modal_derivative, VelocitySpace};
use crate::Error;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Energies {
    pub k: f64,
    pub e: f64,
    pub p: f64,
}

/// One time sample of the scalar QoIs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QoiRecord {
    pub step: u64,
    pub t: f64,
    pub t_over_tbar: f64,
    pub k: f64,
    pub e: f64,
    pub p: f64,
    pub delta_ratio: f64,
    pub eps_int: f64,
    pub eps_rel: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumRecord {
    pub t: f64,
    pub kappa: Vec<usize>,
    pub energy: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileRecord {
    pub t: f64,
    pub y: Vec<f64>,
    pub mean_u1: Vec<f64>,
    pub rms_u1: Vec<f64>,
}

/// K, E and P in one pass over the elements.
pub fn energies(space: &VelocitySpace, u: &[f64]) -> Energies {
    let d = space.m1;
    let h = space.h();
    let w = 0.25 * h * h;
    let s = 2.0 / h;
    let (mut a, mut b) = (vec![0.0; d * d], vec![0.0; d * d]);
    let mut om = vec![0.0; d * d];
    let (mut k, mut e, mut p) = (0.0, 0.0, 0.0);
    for el in 0..space.num_elements() {
        let m = space.modal(el, u);
        let kk: f64 = m.u1.iter().chain(&m.u2).map(|v| v * v).sum();
        modal_derivative(&space.dleg, &m.u2, 0, &mut a);
        modal_derivative(&space.dleg, &m.u1, 1, &mut b);
        for ((o, x), y) in om.iter_mut().zip(&a).zip(&b) {
            *o = s * (x - y);
        }
        let ee: f64 = om.iter().map(|v| v * v).sum();
        modal_derivative(&space.dleg, &om, 0, &mut a);
        modal_derivative(&space.dleg, &om, 1, &mut b);
        let pp: f64 = a.iter().chain(&b).map(|v| v * v).sum::<f64>() * s * s;
        k += kk;
        e += ee;
        p += pp;
    }
    Energies { k: 0.5 * w * k, e: 0.5 * w * e, p: 0.5 * w * p }
}

pub fn kinetic_energy(space: &VelocitySpace, u: &[f64]) -> f64 {
    energies(space, u).k
}

pub fn enstrophy(space: &VelocitySpace, u: &[f64]) -> f64 {
    energies(space, u).e
}

pub fn palinstrophy(space: &VelocitySpace, u: &[f64]) -> f64 {
    energies(space, u).p
}

/// `n` equidistant lines `y_j = j / (n - 1)` covering [0, 1].
pub fn line_positions(n: usize) -> Vec<f64> {
    (0..n).map(|j| j as f64 / (n - 1) as f64).collect()
}

/// x-average of the broken vorticity along each line, integrated exactly per cell.
pub fn mean_vorticity(space: &VelocitySpace, u: &[f64], ys: &[f64]) -> Vec<f64> {
    let w = crate::space::broken_curl(space, u);
    let n = space.mesh.n;
    let d = w.d;
    let h = space.h();
    let (mut py, mut t) = (vec![0.0; d], vec![0.0; d]);
    ys.iter()
        .map(|&y| {
            let j = ((y * n as f64).floor().max(0.0) as usize).min(n - 1);
            let eta = 2.0 * (y * n as f64 - j as f64) - 1.0;
            poly::legendre_all(d, eta, &mut py, &mut t);
            let mut s = 0.0;
            for i in 0..n {
                let b = w.block(j * n + i, 0);
                for my in 0..d {
                    s += b[my] * py[my];
                }
            }
            s * 0.5 * h * std::f64::consts::SQRT_2
        })
        .collect()
}

/// `δ(t)/δ₀` with `δ = 2u∞ / max_j |⟨ω⟩(y_j)|` over `lines` equidistant lines.
pub fn vorticity_thickness(space: &VelocitySpace, u: &[f64], lines: usize) -> Result<f64, Error> {
    thickness_from_profile(&mean_vorticity(space, u, &line_positions(lines)))
}

pub fn thickness_from_profile(mean_w: &[f64]) -> Result<f64, Error> {
    let m = mean_w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::Undefined("vorticity thickness: x-averaged vorticity vanishes".into()));
    }
    Ok(2.0 * U_INF / m / DELTA0)
}

/// Samples `u₁` at `x_i = i / nx` on each line `y`.
pub fn sample_u1(space: &VelocitySpace, u: &[f64], ys: &[f64], nx: usize) -> Vec<Vec<f64>> {
    let n = space.mesh.n;
    let (m1, m2) = (space.m1, space.m2);
    let mut loc = vec![0.0; space.nloc()];
    let (mut py, mut nv, mut t) = (vec![0.0; m2], vec![0.0; m1], vec![0.0; m1.max(m2)]);
    let mut g = vec![0.0; m1];
    ys.iter()
        .map(|&y| {
            let j = ((y * n as f64).floor().max(0.0) as usize).min(n - 1);
            let eta = 2.0 * (y * n as f64 - j as f64) - 1.0;
            poly::legendre_all(m2, eta, &mut py, &mut t);
            let mut line = vec![0.0; nx];
            let mut cur = usize::MAX;
            for (s, out) in line.iter_mut().enumerate() {
                let x = s as f64 / nx as f64;
                let i = ((x * n as f64).floor() as usize).min(n - 1);
                if i != cur {
                    space.gather(j * n + i, u, &mut loc);
                    for a in 0..m1 {
                        g[a] = (0..m2).map(|b| loc[a * m2 + b] * py[b]).sum();
                    }
                    cur = i;
                }
                let xi = 2.0 * (x * n as f64 - i as f64) - 1.0;
                poly::hierarchical_all(m1, xi, &mut nv, &mut t);
                *out = g.iter().zip(&nv).map(|(a, b)| a * b).sum();
            }
            line
        })
        .collect()
}

/// Line mean and RMS of `u₁` from samples.
pub fn profile_from_samples(t: f64, ys: &[f64], samples: &[Vec<f64>]) -> ProfileRecord {
    let mut mean = Vec::with_capacity(ys.len());
    let mut rms = Vec::with_capacity(ys.len());
    for line in samples {
        let nx = line.len() as f64;
        let m = line.iter().sum::<f64>() / nx;
        let r = (line.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / nx).sqrt();
        mean.push(m);
        rms.push(r);
    }
    ProfileRecord { t, y: ys.to_vec(), mean_u1: mean, rms_u1: rms }
}

pub fn mean_profile(space: &VelocitySpace, u: &[f64], t: f64, nx: usize, lines: usize) -> ProfileRecord {
    let ys = line_positions(lines);
    profile_from_samples(t, &ys, &sample_u1(space, u, &ys, nx))
}

/// `E(κ) = ∫₀¹ |û₁(κ, y)|² dy` with `û(κ) = (1/N) Σ u(x_i) e^{-2πiκx_i}`,
/// trapezoid rule over equidistant lines; `κ = 0..=N/2`.
pub fn spectrum_from_samples(t: f64, samples: &[Vec<f64>]) -> SpectrumRecord {
    let nx = samples[0].len();
    let lines = samples.len();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(nx);
    let nk = nx / 2 + 1;
    let mut energy = vec![0.0; nk];
    let mut buf = vec![Complex64::new(0.0, 0.0); nx];
    let dy = 1.0 / (lines - 1) as f64;
    for (j, line) in samples.iter().enumerate() {
        for (b, v) in buf.iter_mut().zip(line) {
            *b = Complex64::new(*v, 0.0);
        }
        fft.process(&mut buf);
        let w = if j == 0 || j == lines - 1 { 0.5 * dy } else { dy };
        for (kk, e) in energy.iter_mut().enumerate() {
            *e += w * buf[kk].norm_sqr() / (nx * nx) as f64;
        }
    }
    SpectrumRecord { t, kappa: (0..nk).collect(), energy }
}

pub fn spectrum(space: &VelocitySpace, u: &[f64], t: f64, lines: usize, samples: usize) -> SpectrumRecord {
    let ys = line_positions(lines);
    spectrum_from_samples(t, &sample_u1(space, u, &ys, samples))
}

/// Integrated numerical dissipation `ε_int(t) = |K(0) − K(t) − 2ν ∫₀ᵗ E dτ|`
/// and its relative version `ε_int / |K(0) − K(t)|`, trapezoid in time.
pub fn numerical_dissipation(t: &[f64], k: &[f64], e: &[f64], nu: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(t.len());
    let mut integral = 0.0;
    for i in 0..t.len() {
        if i > 0 {
            integral += 0.5 * (t[i] - t[i - 1]) * (e[i] + e[i - 1]);
        }
        let loss = k[0] - k[i];
        let eps = (loss - 2.0 * nu * integral).abs();
        let rel = if loss != 0.0 { eps / loss.abs() } else { 0.0 };
        out.push((eps, rel));
    }
    out
}

/// Running state for [`numerical_dissipation`] when samples arrive one at a time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DissipationAccumulator {
    pub k0: f64,
    pub last_t: f64,
    pub last_e: f64,
    pub integral: f64,
    pub started: bool,
}

impl DissipationAccumulator {
    pub fn push(&mut self, t: f64, k: f64, e: f64, nu: f64) -> (f64, f64) {
        if !self.started {
            self.started = true;
            self.k0 = k;
        } else {
            self.integral += 0.5 * (t - self.last_t) * (e + self.last_e);
        }
        self.last_t = t;
        self.last_e = e;
        let loss = self.k0 - k;
        let eps = (loss - 2.0 * nu * self.integral).abs();
        (eps, if loss != 0.0 { eps / loss.abs() } else { 0.0 })
    }
}
