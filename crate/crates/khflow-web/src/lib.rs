//! WebAssembly bindings for the demo page in `www/`.
//!
//! Three operations: sample the initial vorticity, step a pseudo-spectral
//! simulation while reading its energies and field, and take the energy
//! spectrum of the current state.

use khflow::kh::{self, InitialCondition};
use khflow::qoi;
use khflow::spectral::{Oracle, SpectralState};
use wasm_bindgen::prelude::*;

fn ic(include_20pi: bool, c_n: f64) -> InitialCondition {
    InitialCondition { include_20pi, c_n }
}

/// Vorticity of the initial condition on an `n x n` grid of cell centres,
/// row `j` (bottom to top) at `[j*n + i]`.
#[wasm_bindgen]
pub fn initial_vorticity(n: usize, include_20pi: bool, c_n: f64) -> Vec<f32> {
    let f = ic(include_20pi, c_n);
    let h = 1.0 / n as f64;
    (0..n * n)
        .map(|idx| f.vorticity(((idx % n) as f64 + 0.5) * h, ((idx / n) as f64 + 0.5) * h) as f32)
        .collect()
}

/// A running pseudo-spectral simulation.
#[wasm_bindgen]
pub struct Simulation {
    oracle: Oracle,
    state: SpectralState,
    nu: f64,
}

impl Simulation {
    pub fn create(modes: usize, re: f64, dt_factor: f64, include_20pi: bool, c_n: f64) -> Result<Simulation, String> {
        if !(re > 0.0 && dt_factor > 0.0) {
            return Err("Re and the step factor must be positive".into());
        }
        let nu = kh::viscosity(re);
        let oracle = Oracle::new(modes, modes, nu, dt_factor * kh::default_dt()).map_err(|e| e.to_string())?;
        let f = ic(include_20pi, c_n);
        let state = oracle.init(&|x, y| f.vorticity(x, y));
        Ok(Simulation { oracle, state, nu })
    }

    pub fn advance_by(&mut self, steps: u32) -> Result<(), String> {
        for _ in 0..steps {
            self.oracle.step(&mut self.state).map_err(|e| e.to_string())?;
        }
        Ok(())
    }
}

#[wasm_bindgen]
impl Simulation {
    #[wasm_bindgen(constructor)]
    pub fn new(modes: usize, re: f64, dt_factor: f64, include_20pi: bool, c_n: f64) -> Result<Simulation, JsError> {
        Simulation::create(modes, re, dt_factor, include_20pi, c_n).map_err(|e| JsError::new(&e))
    }

    pub fn advance(&mut self, steps: u32) -> Result<(), JsError> {
        self.advance_by(steps).map_err(|e| JsError::new(&e))
    }

    pub fn time_tbar(&self) -> f64 {
        self.state.t() / kh::tbar()
    }

    pub fn viscosity(&self) -> f64 {
        self.nu
    }

    /// `[K, E, P, δ/δ₀]`.
    pub fn energies(&self) -> Vec<f64> {
        let e = self.oracle.energies(&self.state);
        let ys = qoi::line_positions(257);
        let d = qoi::thickness_from_profile(&self.oracle.mean_vorticity(&self.state, &ys)).unwrap_or(f64::NAN);
        vec![e.k, e.e, e.p, d]
    }

    pub fn width(&self) -> usize {
        self.oracle.n
    }

    pub fn height(&self) -> usize {
        self.oracle.m + 1
    }

    /// Vorticity on the `width x height` grid, rows bottom to top.
    pub fn vorticity(&self) -> Vec<f32> {
        self.oracle.vorticity(&self.state).into_iter().map(|v| v as f32).collect()
    }

    /// `E(κ)` for `κ = 0..=width/2`.
    pub fn spectrum(&self) -> Vec<f64> {
        qoi::spectrum_from_samples(self.state.t(), &self.oracle.sample_u1(&self.state)).energy
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_field_is_the_shear_layer() {
        let w = initial_vorticity(8, true, 0.0);
        // ω = −(2/δ₀) sech²((2y − 1)/δ₀) without the perturbation
        let y = 3.5 / 8.0;
        let want = -2.0 / kh::DELTA0 / ((2.0 * y - 1.0) / kh::DELTA0).cosh().powi(2);
        assert!((w[3 * 8 + 5] as f64 - want).abs() < 1e-4 * want.abs());
        assert!(w.iter().all(|v| *v <= 0.0));
    }

    #[test]
    fn simulation_steps_and_reports() {
        let mut s = Simulation::create(32, 100.0, 4.0, true, 1e-3).unwrap();
        let e0 = s.energies();
        s.advance_by(10).unwrap();
        let e1 = s.energies();
        assert!(e1[0] < e0[0] && e1[1] < e0[1]);
        assert!((s.time_tbar() - 0.04).abs() < 1e-12);
        assert_eq!(s.vorticity().len(), s.width() * s.height());
        let sp = s.spectrum();
        assert_eq!(sp.len(), 17);
        assert!(sp[4] > sp[3] && sp[10] > sp[9]);
        assert!(Simulation::create(32, -1.0, 1.0, true, 1e-3).is_err());
        assert!(Simulation::create(7, 100.0, 1.0, true, 1e-3).is_err());
    }
}
