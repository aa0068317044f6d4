//! Kelvin-Helmholtz shear layer: parameters and the analytic initial state.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Initial vorticity thickness.
pub const DELTA0: f64 = 1.0 / 28.0;
/// Reference velocity.
pub const U_INF: f64 = 1.0;
/// Noise amplitude.
pub const C_N: f64 = 1e-3;
/// Reynolds numbers with standard reference data.
pub const REFERENCE_RE: [f64; 3] = [100.0, 1000.0, 10000.0];

/// Time unit `t̄ = δ₀ / u∞`.
pub fn tbar() -> f64 {
    DELTA0 / U_INF
}

/// `ν = δ₀ u∞ / Re = 1 / (28 Re)`.
pub fn viscosity(re: f64) -> f64 {
    DELTA0 * U_INF / re
}

/// Default step `Δt = δ₀ · 10⁻³`.
pub fn default_dt() -> f64 {
    DELTA0 * 1e-3
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    /// Keep the `cos(20πx)` mode of the perturbation.
    pub include_20pi: bool,
    pub c_n: f64,
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition { include_20pi: true, c_n: C_N }
    }
}

impl InitialCondition {
    fn envelope(y: f64) -> f64 {
        let s = (y - 0.5) / DELTA0;
        U_INF * (-s * s).exp()
    }

    /// Perturbation stream function `ψ`.
    pub fn psi(&self, x: f64, y: f64) -> f64 {
        let c20 = if self.include_20pi { (20.0 * PI * x).cos() } else { 0.0 };
        Self::envelope(y) * ((8.0 * PI * x).cos() + c20)
    }

    /// `(u₁, u₂) = u∞ tanh((2y−1)/δ₀) e_x + c_n (∂yψ, −∂xψ)`.
    pub fn velocity(&self, x: f64, y: f64) -> [f64; 2] {
        let env = Self::envelope(y);
        let c20 = if self.include_20pi { (20.0 * PI * x).cos() } else { 0.0 };
        let s20 = if self.include_20pi { 20.0 * PI * (20.0 * PI * x).sin() } else { 0.0 };
        let psi = env * ((8.0 * PI * x).cos() + c20);
        let dpsi_dy = -2.0 * (y - 0.5) / (DELTA0 * DELTA0) * psi;
        let dpsi_dx = -env * (8.0 * PI * (8.0 * PI * x).sin() + s20);
        [U_INF * ((2.0 * y - 1.0) / DELTA0).tanh() + self.c_n * dpsi_dy, -self.c_n * dpsi_dx]
    }

    /// Analytic vorticity `ω = ∂x u₂ − ∂y u₁`.
    pub fn vorticity(&self, x: f64, y: f64) -> f64 {
        let th = ((2.0 * y - 1.0) / DELTA0).tanh();
        let mean = -2.0 * U_INF / DELTA0 * (1.0 - th * th);
        // -Δψ for ψ = env(y) c(x)
        let env = Self::envelope(y);
        let s = (y - 0.5) / (DELTA0 * DELTA0);
        let env_yy = env * (4.0 * s * s - 2.0 / (DELTA0 * DELTA0));
        let (c, cxx) = if self.include_20pi {
            (
                (8.0 * PI * x).cos() + (20.0 * PI * x).cos(),
                -(8.0 * PI).powi(2) * (8.0 * PI * x).cos() - (20.0 * PI).powi(2) * (20.0 * PI * x).cos(),
            )
        } else {
            ((8.0 * PI * x).cos(), -(8.0 * PI).powi(2) * (8.0 * PI * x).cos())
        };
        mean - self.c_n * (env * cxx + env_yy * c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameters() {
        assert!((viscosity(100.0) - 1.0 / 2800.0).abs() < 1e-18);
        for re in [1.0, 100.0, 1e4, 3.7] {
            assert!((viscosity(re) * 28.0 * re - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn point_values() {
        let ic = InitialCondition::default();
        let v = ic.velocity(0.0, 0.5);
        assert!(v[0].abs() < 1e-15 && v[1].abs() < 1e-15);
        let v = ic.velocity(0.25, 0.5);
        assert!(v[0].abs() < 1e-15 && v[1].abs() < 1e-15);
        let v = ic.velocity(1.0 / 16.0, 0.5);
        let expect = C_N * PI * (8.0 - 10.0 * 2f64.sqrt());
        assert!(v[0].abs() < 1e-15 && (v[1] - expect).abs() < 1e-15);
        assert!((v[1] + 0.019297).abs() < 1e-6);
    }

    #[test]
    fn vorticity_matches_finite_differences() {
        let ic = InitialCondition::default();
        let h = 1e-6;
        for &(x, y) in &[(0.1, 0.47), (0.33, 0.52), (0.7, 0.5)] {
            let du2 = (ic.velocity(x + h, y)[1] - ic.velocity(x - h, y)[1]) / (2.0 * h);
            let du1 = (ic.velocity(x, y + h)[0] - ic.velocity(x, y - h)[0]) / (2.0 * h);
            let w = ic.vorticity(x, y);
            assert!((du2 - du1 - w).abs() < 1e-5 * w.abs().max(1.0), "{} {}", du2 - du1, w);
        }
    }
}
