use khflow::assembly::{Convection, DEFAULT_PENALTY};
use khflow::config::RunConfig;
use khflow::linalg::{dot, Csr};
use khflow::mesh::StructuredMesh;
use khflow::perturb::rounding_noise;
use khflow::qoi::{self, spectrum_from_samples};
use khflow::selforg::{dissipation_quotient, eigenvalue, rayleigh_quotient, EigenMode, Variant};
use khflow::space::build_space;
use khflow::system::{Discretization, Formulation};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

proptest! {
    #[test]
    fn csr_matches_dense(
        entries in prop::collection::vec((0usize..7, 0usize..5, -10.0f64..10.0), 0..40),
        x in prop::collection::vec(-1.0f64..1.0, 5),
    ) {
        let a = Csr::from_triplets(7, 5, entries.clone());
        let mut dense = [[0.0; 5]; 7];
        for (i, j, v) in &entries {
            dense[*i][*j] += v;
        }
        let y = a.mul_vec(&x);
        for i in 0..7 {
            let want: f64 = (0..5).map(|j| dense[i][j] * x[j]).sum();
            prop_assert!((y[i] - want).abs() < 1e-12 * (1.0 + want.abs()));
            for j in 0..5 {
                prop_assert!((a.get(i, j) - dense[i][j]).abs() < 1e-12);
                prop_assert_eq!(a.transpose().get(j, i), a.get(i, j));
            }
        }
        let ata = a.transpose().matmul(&a);
        prop_assert!(ata.asymmetry() <= 1e-12 * (1.0 + ata.max_abs()));
        prop_assert!(ata.quad_form(&x) >= -1e-12);
    }

    #[test]
    fn rounding_noise_is_relative_and_reproducible(
        v in prop::collection::vec(-1e3f64..1e3, 1..50),
        rho in 0.0f64..1e-3,
        seed in any::<u64>(),
        step in 0u64..1000,
    ) {
        let mut a = v.clone();
        let mut b = v.clone();
        rounding_noise(&mut a, rho, seed, step);
        rounding_noise(&mut b, rho, seed, step);
        prop_assert_eq!(&a, &b);
        for (x, y) in v.iter().zip(&a) {
            prop_assert!((x - y).abs() <= rho * x.abs() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn quotients_are_scale_invariant(k in 1e-3f64..1.0, e in 1e-3f64..10.0, p in 1e-3f64..100.0, s in 1e-3f64..1e3) {
        let q = rayleigh_quotient(k, e);
        prop_assert!((rayleigh_quotient(s * k, s * e) - q).abs() <= 1e-12 * q);
        let l = dissipation_quotient(e, p);
        prop_assert!((dissipation_quotient(s * e, s * p) - l).abs() <= 1e-12 * l);
    }

    #[test]
    fn eigenmodes_have_unit_enstrophy_density(k1 in 0u32..4, k2 in 1u32..4, cos in any::<bool>()) {
        let m = EigenMode::unit(k1, k2, if cos { Variant::Cos } else { Variant::Sin });
        prop_assume!(!m.is_trivial());
        prop_assert!((m.lambda - eigenvalue(k1, k2, std::f64::consts::PI, std::f64::consts::PI)).abs() < 1e-12 * m.lambda);
        // midpoint rule is exact for these trigonometric polynomials
        let n = 32;
        let mut w2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (x, y) = ((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64);
                w2 += m.vorticity(x, y).powi(2);
            }
        }
        prop_assert!((w2 / (n * n) as f64 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn spectrum_satisfies_parseval(amps in prop::collection::vec(-1.0f64..1.0, 6), lines in 2usize..6) {
        let nx = 16;
        let samples: Vec<Vec<f64>> = (0..lines)
            .map(|l| {
                (0..nx)
                    .map(|i| {
                        let x = i as f64 / nx as f64;
                        amps.iter().enumerate().map(|(m, a)| a * (2.0 * std::f64::consts::PI * (m as f64) * x + l as f64).cos()).sum()
                    })
                    .collect()
            })
            .collect();
        let s = spectrum_from_samples(0.0, &samples);
        prop_assert!(s.energy.iter().all(|e| *e >= 0.0));
        // one-sided |û|²: interior wavenumbers stand for ±κ
        let line_e: Vec<f64> = samples.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>() / nx as f64).collect();
        let h = 1.0 / (lines - 1) as f64;
        let want = h * (line_e.iter().sum::<f64>() - 0.5 * (line_e[0] + line_e[lines - 1]));
        let e = &s.energy;
        let total = e[0] + e[nx / 2] + 2.0 * e[1..nx / 2].iter().sum::<f64>();
        prop_assert!((total - want).abs() < 1e-12 * (1.0 + want));
    }

    #[test]
    fn config_survives_toml_round_trip(re in 1.0f64..1e5, n in 1usize..64, k in 1usize..9, dt in 0.1f64..10.0) {
        let c = RunConfig::from_toml_str(&format!("re = {re:?}\nn = {n}\nk = {k}\ndt_factor = {dt:?}\n"), &[]).unwrap();
        let back = RunConfig::from_toml_str(&c.to_toml(), &[]).unwrap();
        prop_assert_eq!(back.hash(), c.hash());
        prop_assert!((c.nu() * 28.0 * re - 1.0).abs() < 1e-14);
    }
}

/// Random stream-function coefficients give exactly divergence-free,
/// normal-continuous fields, for which upwind convection can only dissipate.
#[test]
fn convection_never_creates_energy_on_divergence_free_fields() {
    let space = build_space(StructuredMesh::new(3).unwrap(), 2).unwrap();
    let d = Discretization::new(space, 0.0, DEFAULT_PENALTY, Formulation::Stream, Convection::default_order(2)).unwrap();
    let mut runner = TestRunner::new(Config { cases: 64, ..Config::default() });
    runner
        .run(&prop::collection::vec(-1.0f64..1.0, d.n_unknowns), |x| {
            let u = d.velocity(&x);
            prop_assert!(d.space.divergence_norms(&u).iter().all(|v| *v < 1e-11));
            prop_assert!(d.space.max_normal_jump(&u, 4) < 1e-11);
            let c = d.convection.apply_vec(&d.space, &u);
            let scale = dot(&c, &c).sqrt() * dot(&u, &u).sqrt();
            prop_assert!(dot(&u, &c) >= -1e-11 * scale);
            let en = qoi::energies(&d.space, &u);
            prop_assert!(en.k >= 0.0 && en.e >= 0.0 && en.p >= 0.0);
            prop_assert!((en.k - 0.5 * d.sys_mass.quad_form(&x)).abs() <= 1e-10 * (1.0 + en.k));
            Ok(())
        })
        .unwrap();
}
