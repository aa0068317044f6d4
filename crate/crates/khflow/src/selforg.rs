//! Eigenpairs of the Laplacian under the channel boundary conditions
//! (periodic in x, `ω = 0` on the walls), Taylor vortices, the Rayleigh
//! quotient `Q = E/K`, the dissipation quotient `Λ = P/E` and decay-bound checks.
//!
//! Domain `(0, π/a) x (0, π/b)`; the unit square is `a = b = π`.
//! Eigenfunctions: `ŵ = c sin(2a k₁ x) sin(b k₂ y)` (sin variant) or
//! `c cos(2a k₁ x) sin(b k₂ y)` (cos variant), normalized to unit L² norm,
//! with eigenvalue `λ = 4a²k₁² + b²k₂²` (obtained by applying `-Δ`).

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Sin,
    Cos,
}

pub fn eigenvalue(k1: u32, k2: u32, a: f64, b: f64) -> f64 {
    4.0 * a * a * (k1 * k1) as f64 + b * b * (k2 * k2) as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenMode {
    pub k1: u32,
    pub k2: u32,
    pub variant: Variant,
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
}

impl EigenMode {
    pub fn new(k1: u32, k2: u32, variant: Variant, a: f64, b: f64) -> Self {
        EigenMode { k1, k2, variant, a, b, lambda: eigenvalue(k1, k2, a, b) }
    }

    /// Mode on the unit square.
    pub fn unit(k1: u32, k2: u32, variant: Variant) -> Self {
        Self::new(k1, k2, variant, PI, PI)
    }

    /// True when the stated eigenfunction vanishes identically.
    pub fn is_trivial(&self) -> bool {
        self.k2 == 0 || (self.k1 == 0 && self.variant == Variant::Sin)
    }

    fn amplitude(&self) -> f64 {
        let c = 2.0 * (self.a * self.b).sqrt() / PI;
        if self.k1 == 0 {
            c / 2f64.sqrt()
        } else {
            c
        }
    }

    fn parts(&self, x: f64, y: f64) -> (f64, f64, f64, f64) {
        let ax = 2.0 * self.a * self.k1 as f64;
        let by = self.b * self.k2 as f64;
        let (fx, dfx) = match self.variant {
            Variant::Sin => ((ax * x).sin(), ax * (ax * x).cos()),
            Variant::Cos => ((ax * x).cos(), -ax * (ax * x).sin()),
        };
        (fx, dfx, (by * y).sin(), by * (by * y).cos())
    }

    /// Unit-norm vorticity eigenfunction.
    pub fn vorticity(&self, x: f64, y: f64) -> f64 {
        if self.is_trivial() {
            return 0.0;
        }
        let (fx, _, gy, _) = self.parts(x, y);
        self.amplitude() * fx * gy
    }

    /// Velocity `(∂yψ, −∂xψ)` of the stream function `ψ = ŵ/λ`.
    pub fn velocity(&self, x: f64, y: f64) -> [f64; 2] {
        if self.is_trivial() {
            return [0.0, 0.0];
        }
        let (fx, dfx, gy, dgy) = self.parts(x, y);
        let s = self.amplitude() / self.lambda;
        [s * fx * dgy, -s * dfx * gy]
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 / self.lambda
    }
}

/// Which index pairs count as eigenmodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeConvention {
    /// Allow `k₁ = 0` (x-independent shear modes, cos variant).
    pub include_k1_zero: bool,
    /// Allow `k₂ = 0`, whose eigenfunctions vanish identically.
    pub include_k2_zero: bool,
}

impl Default for ModeConvention {
    fn default() -> Self {
        ModeConvention { include_k1_zero: true, include_k2_zero: false }
    }
}

/// Smallest admissible eigenvalue on the unit square under `conv`.
pub fn mu1(conv: ModeConvention) -> f64 {
    let mut best = f64::INFINITY;
    for k1 in 0..4u32 {
        for k2 in 0..4u32 {
            if k1 == 0 && !conv.include_k1_zero {
                continue;
            }
            if k2 == 0 && !conv.include_k2_zero {
                continue;
            }
            let m = EigenMode::unit(k1, k2, Variant::Cos);
            if !conv.include_k2_zero && m.is_trivial() {
                continue;
            }
            if k1 == 0 && k2 == 0 {
                continue;
            }
            best = best.min(m.lambda);
        }
    }
    best
}

/// Exact Navier-Stokes solution `ŵ exp(−νλt)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaylorVortex {
    pub mode: EigenMode,
    pub nu: f64,
    pub t: f64,
}

pub fn taylor_vortex(mode: EigenMode, nu: f64, t: f64) -> TaylorVortex {
    TaylorVortex { mode, nu, t }
}

impl TaylorVortex {
    pub fn decay(&self) -> f64 {
        (-self.nu * self.mode.lambda * self.t).exp()
    }

    pub fn vorticity(&self, x: f64, y: f64) -> f64 {
        self.decay() * self.mode.vorticity(x, y)
    }

    pub fn velocity(&self, x: f64, y: f64) -> [f64; 2] {
        let d = self.decay();
        let v = self.mode.velocity(x, y);
        [d * v[0], d * v[1]]
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.mode.kinetic_energy() * self.decay().powi(2)
    }
}

pub fn rayleigh_quotient(k: f64, e: f64) -> f64 {
    e / k
}

pub fn dissipation_quotient(e: f64, p: f64) -> f64 {
    p / e
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    /// Physical time.
    pub t: f64,
    pub k: f64,
    pub e: f64,
    pub p: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DecayReport {
    pub e_bound: Vec<bool>,
    pub k_bound: Vec<bool>,
    pub q_monotone: Vec<bool>,
    pub lambda_ge_q: Vec<bool>,
    /// Smallest `(Λ − Q)/Q` seen.
    pub min_gap: f64,
}

impl DecayReport {
    pub fn all_hold(&self) -> bool {
        [&self.e_bound, &self.k_bound, &self.q_monotone, &self.lambda_ge_q]
            .iter()
            .all(|v| v.iter().all(|b| *b))
    }
}

/// Relative slack of the exponential bounds.
pub const BOUND_SLACK: f64 = 1e-8;
/// Relative slack for `Λ − Q ≥ 0`.
pub const GAP_SLACK: f64 = 1e-8;

/// Checks `E(t) ≤ E(0) e^{−2νμ₁t}`, the same for K, monotone `Q`, and
/// `Λ ≥ Q` on a sampled trajectory. `q_tol` is the relative tolerance on
/// the per-sample increase of Q.
pub fn decay_bound_check(traj: &[TrajectoryPoint], nu: f64, mu1: f64, q_tol: f64) -> DecayReport {
    let mut r = DecayReport { min_gap: f64::INFINITY, ..Default::default() };
    let Some(first) = traj.first() else { return r };
    let t0 = first.t;
    let mut prev_q: Option<f64> = None;
    for s in traj {
        let f = (-2.0 * nu * mu1 * (s.t - t0)).exp() * (1.0 + BOUND_SLACK);
        r.e_bound.push(s.e <= first.e * f);
        r.k_bound.push(s.k <= first.k * f);
        if s.k > 0.0 && s.e > 0.0 {
            let q = rayleigh_quotient(s.k, s.e);
            let l = dissipation_quotient(s.e, s.p);
            r.q_monotone.push(prev_q.is_none_or(|pq| q <= pq * (1.0 + q_tol)));
            r.lambda_ge_q.push(l - q >= -GAP_SLACK * q);
            r.min_gap = r.min_gap.min((l - q) / q);
            prev_q = Some(q);
        }
    }
    r
}

/// Phase-plane CSV rows `t, K, E, Q, Λ`.
pub fn trajectory_rows(traj: &[TrajectoryPoint]) -> Vec<[f64; 5]> {
    traj.iter()
        .map(|s| [s.t, s.k, s.e, rayleigh_quotient(s.k, s.e), dissipation_quotient(s.e, s.p)])
        .collect()
}
