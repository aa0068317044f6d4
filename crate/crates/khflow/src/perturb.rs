//! Controlled perturbations and trajectory-divergence reports.
//!
//! `rounding_noise` emulates last-bit rounding differences (such as fused
//! versus separate multiply-add) by multiplying every unknown by
//! `1 + ρξ` after each step; it is an emulation, not a hardware toggle.

use crate::config::{Engine, RunConfig};
use crate::qoi::QoiRecord;
use crate::selforg::Variant;
use crate::system::Formulation;
use crate::Error;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

fn default_rho() -> f64 {
    f64::EPSILON
}
fn default_variant() -> Variant {
    Variant::Sin
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationSpec {
    #[default]
    None,
    ConvectionQuadratureOrder {
        order: usize,
    },
    SolverRtol {
        rtol: f64,
    },
    RegularizedDirectSolve,
    RoundingNoise {
        #[serde(default = "default_rho")]
        amplitude: f64,
        seed: u64,
    },
    EigenmodeSeed {
        k1: u32,
        k2: u32,
        amplitude: f64,
        #[serde(default = "default_variant")]
        variant: Variant,
        /// Application time in units of `t̄`.
        #[serde(default)]
        at_tbar: f64,
    },
}

impl PerturbationSpec {
    pub fn label(&self) -> &'static str {
        match self {
            PerturbationSpec::None => "none",
            PerturbationSpec::ConvectionQuadratureOrder { .. } => "convection_quadrature_order",
            PerturbationSpec::SolverRtol { .. } => "solver_rtol",
            PerturbationSpec::RegularizedDirectSolve => "regularized_direct_solve",
            PerturbationSpec::RoundingNoise { .. } => "rounding_noise (emulated last-bit noise)",
            PerturbationSpec::EigenmodeSeed { .. } => "eigenmode_seed",
        }
    }

    pub fn validate(&self, cfg: &RunConfig) -> Result<(), Error> {
        let mut e = Vec::new();
        let fem_only = |e: &mut Vec<String>, what: &str| {
            if cfg.engine != Engine::Fem {
                e.push(format!("perturbation {what} requires engine = \"fem\""));
            }
        };
        match *self {
            PerturbationSpec::None => {}
            PerturbationSpec::ConvectionQuadratureOrder { order } => {
                fem_only(&mut e, "convection_quadrature_order");
                if order < 2 {
                    e.push(format!("convection quadrature order must be at least 2 (got {order})"));
                }
            }
            PerturbationSpec::SolverRtol { rtol } => {
                fem_only(&mut e, "solver_rtol");
                if !(rtol > 0.0 && rtol < 1.0) {
                    e.push(format!("perturbation rtol must be in (0, 1) (got {rtol})"));
                }
            }
            PerturbationSpec::RegularizedDirectSolve => {
                fem_only(&mut e, "regularized_direct_solve");
                if cfg.formulation != Formulation::Saddle {
                    e.push("regularized_direct_solve requires formulation = \"saddle\"".into());
                }
            }
            PerturbationSpec::RoundingNoise { amplitude, .. } => {
                if !(amplitude >= 0.0) || !amplitude.is_finite() {
                    e.push(format!("rounding noise amplitude must be non-negative (got {amplitude})"));
                }
            }
            PerturbationSpec::EigenmodeSeed { k1, k2, amplitude, variant, at_tbar } => {
                if k2 == 0 || (k1 == 0 && variant == Variant::Sin) {
                    e.push(format!("eigenmode ({k1},{k2},{variant:?}) vanishes identically"));
                }
                if !amplitude.is_finite() {
                    e.push("eigenmode amplitude must be finite".into());
                }
                if !(at_tbar >= 0.0) {
                    e.push("eigenmode at_tbar must be non-negative".into());
                }
            }
        }
        if e.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(e))
        }
    }
}

/// Multiplies `v[i]` by `1 + ρξᵢ`, `ξᵢ` uniform in `[-1, 1)` drawn from a
/// ChaCha stream keyed by `(seed, step)` at position `i`.
pub fn rounding_noise(v: &mut [f64], rho: f64, seed: u64, step: u64) {
    if rho == 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step);
    for x in v.iter_mut() {
        let xi = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 52) as f64) - 1.0;
        *x *= 1.0 + rho * xi;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QoiDivergence {
    pub qoi: String,
    /// Earliest sampled `t/t̄` with relative deviation above the threshold.
    pub t_div: Option<f64>,
    /// Largest relative deviation with `t/t̄ ≤ horizon`.
    pub max_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub reference_id: String,
    pub perturbed_id: String,
    pub threshold: f64,
    pub horizon_tbar: f64,
    pub compared_samples: usize,
    /// Set when one run stopped early; the report covers the common part.
    pub failure: Option<String>,
    pub qois: Vec<QoiDivergence>,
    /// `(t/t̄, relative deviation of P)` per common sample.
    pub palinstrophy_deviation: Vec<(f64, f64)>,
}

pub const DEFAULT_THRESHOLD: f64 = 0.1;
pub const REPORT_HORIZON_TBAR: f64 = 200.0;

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(f64::MIN_POSITIVE)
    }
}

/// Compares two trajectories sample by sample (matched on step index).
pub fn divergence_report(
    reference_id: &str,
    perturbed_id: &str,
    a: &[QoiRecord],
    b: &[QoiRecord],
    threshold: f64,
) -> Result<DivergenceReport, Error> {
    let common = a.len().min(b.len());
    for (x, y) in a.iter().zip(b) {
        if x.step != y.step {
            return Err(Error::Invalid(format!("runs sampled at different steps ({} vs {})", x.step, y.step)));
        }
    }
    let getters: [(&str, fn(&QoiRecord) -> f64); 3] = [("P", |r| r.p), ("E", |r| r.e), ("K", |r| r.k)];
    let qois = getters
        .iter()
        .map(|(name, g)| {
            let mut t_div = None;
            let mut max_deviation = 0.0f64;
            for (x, y) in a.iter().zip(b) {
                let d = rel(g(x), g(y));
                if t_div.is_none() && d > threshold {
                    t_div = Some(x.t_over_tbar);
                }
                if x.t_over_tbar <= REPORT_HORIZON_TBAR {
                    max_deviation = max_deviation.max(d);
                }
            }
            QoiDivergence { qoi: name.to_string(), t_div, max_deviation }
        })
        .collect();
    Ok(DivergenceReport {
        reference_id: reference_id.into(),
        perturbed_id: perturbed_id.into(),
        threshold,
        horizon_tbar: REPORT_HORIZON_TBAR,
        compared_samples: common,
        failure: None,
        qois,
        palinstrophy_deviation: a.iter().zip(b).map(|(x, y)| (x.t_over_tbar, rel(x.p, y.p))).collect(),
    })
}

impl DivergenceReport {
    pub fn summary(&self) -> String {
        let mut s = format!(
            "reference {} vs perturbed {} ({} common samples, threshold {:.0}%)\n",
            self.reference_id,
            self.perturbed_id,
            self.compared_samples,
            self.threshold * 100.0
        );
        for q in &self.qois {
            let td = q.t_div.map_or("never".to_string(), |t| format!("t/tbar = {t:.3}"));
            s += &format!(
                "  {}: first divergence {td}; max deviation up to t/tbar = {} is {:.3e}\n",
                q.qoi, self.horizon_tbar, q.max_deviation
            );
        }
        if let Some(f) = &self.failure {
            s += &format!("  partial report: {f}\n");
        }
        s
    }

    /// Largest relative P deviation at samples with `t/t̄ ≤ tbar`.
    pub fn max_p_deviation_until(&self, tbar: f64) -> f64 {
        self.palinstrophy_deviation.iter().filter(|(t, _)| *t <= tbar + 1e-9).map(|p| p.1).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_is_keyed_and_bounded() {
        let base: Vec<f64> = (1..50).map(|i| i as f64).collect();
        let mut a = base.clone();
        rounding_noise(&mut a, 0.0, 1, 1);
        assert_eq!(a, base);
        let mut a = base.clone();
        let mut b = base.clone();
        rounding_noise(&mut a, 1e-3, 7, 3);
        rounding_noise(&mut b, 1e-3, 7, 3);
        assert_eq!(a, b);
        let mut c = base.clone();
        rounding_noise(&mut c, 1e-3, 7, 4);
        assert_ne!(a, c);
        for (x, y) in a.iter().zip(&base) {
            assert!((x / y - 1.0).abs() <= 1e-3);
        }
    }

    #[test]
    fn identical_runs_never_diverge() {
        let r: Vec<QoiRecord> = (0..5).map(|i| QoiRecord { step: i, t_over_tbar: i as f64, k: 1.0, e: 2.0, p: 3.0, ..Default::default() }).collect();
        let rep = divergence_report("a", "b", &r, &r, DEFAULT_THRESHOLD).unwrap();
        assert!(rep.qois.iter().all(|q| q.t_div.is_none() && q.max_deviation == 0.0));
        let mut s = r.clone();
        s[3].p = 4.0;
        let rep = divergence_report("a", "b", &r, &s, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(rep.qois[0].t_div, Some(3.0));
        assert!(rep.max_p_deviation_until(2.0) == 0.0);
    }
}
