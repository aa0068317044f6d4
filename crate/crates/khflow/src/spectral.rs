//! Fourier (x) by sine (y) pseudo-spectral solver of the vorticity equation
//! `∂t ω + u·∇ω = ν Δω` with `ω = 0` on the walls, used as an independent
//! reference for the finite element solver.
//!
//! The vorticity is extended oddly to `y ∈ [0, 2)` and represented by a full
//! complex FFT on an `N x 2M` grid, so the sine basis in `y` is enforced by
//! keeping `ω̂(k₁, −k₂) = −ω̂(k₁, k₂)`. Wavenumbers are `(2πk₁, πk₂)`.
//! Products are dealiased with the 2/3 rule in both directions and time
//! integration uses SBDF2 (diffusion implicit, advection extrapolated),
//! started with IMEX Euler.

use crate::qoi::Energies;
use crate::Error;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralState {
    /// Coefficients `[ix * 2M + iy]` with `ω(x,y) = Σ ω̂ e^{2πik₁x + iπk₂y}`.
    pub w: Vec<Complex64>,
    pub w_prev: Option<Vec<Complex64>>,
    pub nl_prev: Option<Vec<Complex64>>,
    pub step: u64,
    pub dt: f64,
    /// Relative L2 norm removed by the dealiasing mask at initialization.
    pub truncation: f64,
}

impl SpectralState {
    pub fn t(&self) -> f64 {
        self.step as f64 * self.dt
    }
}

pub struct Oracle {
    pub n: usize,
    pub m: usize,
    pub nu: f64,
    pub dt: f64,
    kx: Vec<f64>,
    ky: Vec<f64>,
    keep: Vec<bool>,
    fx: (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>),
    fy: (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>),
}

impl std::fmt::Debug for Oracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Oracle").field("n", &self.n).field("m", &self.m).field("nu", &self.nu).field("dt", &self.dt).finish()
    }
}

fn signed(i: usize, len: usize) -> i64 {
    if i < len / 2 {
        i as i64
    } else {
        i as i64 - len as i64
    }
}

impl Oracle {
    /// `n` Fourier modes in x, `m` sine modes in y.
    pub fn new(n: usize, m: usize, nu: f64, dt: f64) -> Result<Self, Error> {
        if n < 4 || m < 2 || n % 2 != 0 {
            return Err(Error::Invalid("oracle needs an even n ≥ 4 and m ≥ 2".into()));
        }
        if !(nu >= 0.0) || !(dt > 0.0) {
            return Err(Error::Invalid("oracle needs ν ≥ 0 and Δt > 0".into()));
        }
        let ny = 2 * m;
        let kx: Vec<f64> = (0..n).map(|i| 2.0 * PI * signed(i, n) as f64).collect();
        let ky: Vec<f64> = (0..ny).map(|j| PI * signed(j, ny) as f64).collect();
        let mut keep = vec![false; n * ny];
        for i in 0..n {
            for j in 0..ny {
                let (a, b) = (signed(i, n).unsigned_abs() as usize, signed(j, ny).unsigned_abs() as usize);
                keep[i * ny + j] = 3 * a < n && 3 * b < ny && b > 0;
            }
        }
        let mut p = FftPlanner::new();
        Ok(Oracle {
            n,
            m,
            nu,
            dt,
            kx,
            ky,
            keep,
            fx: (p.plan_fft_forward(n), p.plan_fft_inverse(n)),
            fy: (p.plan_fft_forward(ny), p.plan_fft_inverse(ny)),
        })
    }

    fn ny(&self) -> usize {
        2 * self.m
    }

    fn k2(&self, idx: usize) -> f64 {
        let (i, j) = (idx / self.ny(), idx % self.ny());
        self.kx[i] * self.kx[i] + self.ky[j] * self.ky[j]
    }

    /// In-place 2D transform; the forward direction is normalized by `1/(N·2M)`.
    fn fft2(&self, a: &mut [Complex64], forward: bool) {
        let (n, ny) = (self.n, self.ny());
        let (fx, fy) = if forward { (&self.fx.0, &self.fy.0) } else { (&self.fx.1, &self.fy.1) };
        for row in a.chunks_exact_mut(ny) {
            fy.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..ny {
            for i in 0..n {
                col[i] = a[i * ny + j];
            }
            fx.process(&mut col);
            for i in 0..n {
                a[i * ny + j] = col[i];
            }
        }
        if forward {
            let s = 1.0 / (n * ny) as f64;
            a.iter_mut().for_each(|v| *v *= s);
        }
    }

    fn symmetrize(&self, w: &mut [Complex64]) {
        let ny = self.ny();
        for i in 0..self.n {
            let r = &mut w[i * ny..(i + 1) * ny];
            r[0] = Complex64::new(0.0, 0.0);
            r[self.m] = Complex64::new(0.0, 0.0);
            for j in 1..self.m {
                let a = 0.5 * (r[j] - r[ny - j]);
                r[j] = a;
                r[ny - j] = -a;
            }
        }
    }

    /// Transforms grid samples of the analytic vorticity on `[0,1]²` and
    /// truncates to the dealiased modes.
    pub fn init(&self, w: &dyn Fn(f64, f64) -> f64) -> SpectralState {
        let (n, ny) = (self.n, self.ny());
        let mut a = vec![Complex64::new(0.0, 0.0); n * ny];
        for i in 0..n {
            let x = i as f64 / n as f64;
            for j in 1..self.m {
                let y = j as f64 / self.m as f64;
                let v = w(x, y);
                a[i * ny + j] = Complex64::new(v, 0.0);
                a[i * ny + ny - j] = Complex64::new(-v, 0.0);
            }
        }
        self.fft2(&mut a, true);
        self.symmetrize(&mut a);
        let total: f64 = a.iter().map(|c| c.norm_sqr()).sum();
        let mut cut = 0.0;
        for (c, k) in a.iter_mut().zip(&self.keep) {
            if !k {
                cut += c.norm_sqr();
                *c = Complex64::new(0.0, 0.0);
            }
        }
        SpectralState {
            w: a,
            w_prev: None,
            nl_prev: None,
            step: 0,
            dt: self.dt,
            truncation: if total > 0.0 { (cut / total).sqrt() } else { 0.0 },
        }
    }

    /// Spectral coefficients of `u₁ = ∂yψ` and `u₂ = −∂xψ` with `−Δψ = ω`.
    fn velocity_hat(&self, w: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let ny = self.ny();
        let i1 = Complex64::new(0.0, 1.0);
        let mut u = vec![Complex64::new(0.0, 0.0); w.len()];
        let mut v = u.clone();
        for (idx, c) in w.iter().enumerate() {
            let k2 = self.k2(idx);
            if k2 > 0.0 {
                let psi = c / k2;
                u[idx] = i1 * self.ky[idx % ny] * psi;
                v[idx] = -i1 * self.kx[idx / ny] * psi;
            }
        }
        (u, v)
    }

    /// Velocity on the grid `x_i = i/N`, `y_j = j/M` (`j = 0..=M`), `[j*N + i]`.
    pub fn velocity(&self, s: &SpectralState) -> (Vec<f64>, Vec<f64>) {
        let (mut u, mut v) = self.velocity_hat(&s.w);
        self.fft2(&mut u, false);
        self.fft2(&mut v, false);
        let (n, ny) = (self.n, self.ny());
        let pick = |a: &[Complex64]| {
            let mut out = vec![0.0; n * (self.m + 1)];
            for j in 0..=self.m {
                for i in 0..n {
                    out[j * n + i] = a[i * ny + j].re;
                }
            }
            out
        };
        (pick(&u), pick(&v))
    }

    /// Vorticity on the same grid as [`Oracle::velocity`].
    pub fn vorticity(&self, s: &SpectralState) -> Vec<f64> {
        let mut w = s.w.clone();
        self.fft2(&mut w, false);
        let (n, ny) = (self.n, self.ny());
        let mut out = vec![0.0; n * (self.m + 1)];
        for j in 0..=self.m {
            for i in 0..n {
                out[j * n + i] = w[i * ny + j].re;
            }
        }
        out
    }

    /// Adds `amplitude · ω` for the sampled vorticity `ω` to the current
    /// and previous states.
    pub fn add_vorticity(&self, s: &mut SpectralState, amplitude: f64, w: &dyn Fn(f64, f64) -> f64) {
        let add = self.init(w);
        for v in [Some(&mut s.w), s.w_prev.as_mut()].into_iter().flatten() {
            for (a, b) in v.iter_mut().zip(&add.w) {
                *a += amplitude * b;
            }
        }
    }

    /// Dealiased `û·∇ω` in spectral space.
    fn nonlinear(&self, w: &[Complex64]) -> Vec<Complex64> {
        let ny = self.ny();
        let i1 = Complex64::new(0.0, 1.0);
        let (mut u, mut v) = self.velocity_hat(w);
        let mut wx: Vec<Complex64> = w.iter().enumerate().map(|(k, c)| i1 * self.kx[k / ny] * c).collect();
        let mut wy: Vec<Complex64> = w.iter().enumerate().map(|(k, c)| i1 * self.ky[k % ny] * c).collect();
        for a in [&mut u, &mut v, &mut wx, &mut wy] {
            self.fft2(a, false);
        }
        let mut nl: Vec<Complex64> =
            (0..w.len()).map(|k| Complex64::new(u[k].re * wx[k].re + v[k].re * wy[k].re, 0.0)).collect();
        self.fft2(&mut nl, true);
        for (c, k) in nl.iter_mut().zip(&self.keep) {
            if !k {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        self.symmetrize(&mut nl);
        nl
    }

    pub fn step(&self, s: &mut SpectralState) -> Result<(), Error> {
        if s.dt != self.dt {
            return Err(Error::Invalid("state and oracle time steps differ".into()));
        }
        let dt = self.dt;
        let nl = self.nonlinear(&s.w);
        let mut next = vec![Complex64::new(0.0, 0.0); s.w.len()];
        match (&s.w_prev, &s.nl_prev) {
            (Some(wp), Some(np)) => {
                for (idx, c) in next.iter_mut().enumerate() {
                    let rhs = 4.0 * s.w[idx] - wp[idx] - 2.0 * dt * (2.0 * nl[idx] - np[idx]);
                    *c = rhs / (3.0 + 2.0 * dt * self.nu * self.k2(idx));
                }
            }
            _ => {
                for (idx, c) in next.iter_mut().enumerate() {
                    *c = (s.w[idx] - dt * nl[idx]) / (1.0 + dt * self.nu * self.k2(idx));
                }
            }
        }
        s.w_prev = Some(std::mem::replace(&mut s.w, next));
        s.nl_prev = Some(nl);
        s.step += 1;
        if s.w.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::BlowUp(format!("oracle state non-finite at step {}", s.step)));
        }
        Ok(())
    }

    /// K, E and P from the modal coefficients (Parseval on the physical half).
    pub fn energies(&self, s: &SpectralState) -> Energies {
        let (mut k, mut e, mut p) = (0.0, 0.0, 0.0);
        for (idx, c) in s.w.iter().enumerate() {
            let a = c.norm_sqr();
            let k2 = self.k2(idx);
            if k2 > 0.0 {
                k += a / k2;
            }
            e += a;
            p += a * k2;
        }
        Energies { k: 0.5 * k, e: 0.5 * e, p: 0.5 * p }
    }

    /// Exact x-average of ω on each line `y`.
    pub fn mean_vorticity(&self, s: &SpectralState, ys: &[f64]) -> Vec<f64> {
        ys.iter()
            .map(|&y| (0..self.ny()).map(|j| (s.w[j] * Complex64::from_polar(1.0, self.ky[j] * y)).re).sum())
            .collect()
    }

    /// `u₁` samples on the lines `y_j = j/M` (`j = 0..=M`), `N` per line.
    pub fn sample_u1(&self, s: &SpectralState) -> Vec<Vec<f64>> {
        let (u, _) = self.velocity(s);
        u.chunks_exact(self.n).map(|c| c.to_vec()).collect()
    }

    /// Grid quadrature of K from the sampled velocity (trapezoid in y).
    pub fn grid_kinetic_energy(&self, s: &SpectralState) -> f64 {
        let (u, v) = self.velocity(s);
        let n = self.n;
        let mut k = 0.0;
        for j in 0..=self.m {
            let w = if j == 0 || j == self.m { 0.5 } else { 1.0 };
            for i in 0..n {
                k += w * (u[j * n + i].powi(2) + v[j * n + i].powi(2));
            }
        }
        0.5 * k / (n * self.m) as f64
    }

    /// Number of distinct real sine-Fourier modes `(|k₁|, k₂ ≥ 1)` with
    /// coefficient magnitude above `tol`.
    pub fn active_modes(&self, s: &SpectralState, tol: f64) -> usize {
        let ny = self.ny();
        let mut seen = std::collections::BTreeSet::new();
        for (idx, c) in s.w.iter().enumerate() {
            if c.norm() > tol {
                let (i, j) = (idx / ny, idx % ny);
                seen.insert((signed(i, self.n).unsigned_abs(), signed(j, ny).unsigned_abs()));
            }
        }
        seen.len()
    }
}
