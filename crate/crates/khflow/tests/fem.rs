use khflow::assembly::DEFAULT_PENALTY;
use khflow::kh::InitialCondition;
use khflow::linalg::dot;
use khflow::mesh::StructuredMesh;
use khflow::qoi;
use khflow::selforg::{EigenMode, Variant};
use khflow::space::build_space;
use khflow::system::{Discretization, Formulation};

fn disc(n: usize, k: usize, nu: f64, f: Formulation) -> Discretization {
    let space = build_space(StructuredMesh::new(n).unwrap(), k).unwrap();
    let q = khflow::assembly::Convection::default_order(k);
    Discretization::new(space, nu, DEFAULT_PENALTY, f, q).unwrap()
}

#[test]
fn constant_field_projects_exactly() {
    for f in [Formulation::Saddle, Formulation::Stream] {
        let d = disc(4, 2, 1e-3, f);
        let x = d.project(&|_, _| [1.0, 0.0], 6).unwrap();
        let u = d.velocity(&x);
        let e = qoi::energies(&d.space, &u);
        assert!((e.k - 0.5).abs() < 1e-12, "{f:?} {}", e.k);
        assert!(e.e.abs() < 1e-20 && e.p.abs() < 1e-20);
        assert!((d.kinetic_energy(&x) - 0.5).abs() < 1e-12);
        let c = d.convection.apply_vec(&d.space, &u);
        assert!(c.iter().all(|v| v.abs() < 1e-13));
        let v = d.space.evaluate(&u, &[(0.3, 0.6), (0.99, 0.01)]);
        for p in v {
            assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12);
        }
    }
}

#[test]
fn formulations_agree_on_kh_projection() {
    let ic = InitialCondition::default();
    let g = |x: f64, y: f64| ic.velocity(x, y);
    let a = disc(6, 2, 1e-3, Formulation::Saddle);
    let b = disc(6, 2, 1e-3, Formulation::Stream);
    let ua = a.velocity(&a.project(&g, 8).unwrap());
    let ub = b.velocity(&b.project(&g, 8).unwrap());
    let diff: f64 = ua.iter().zip(&ub).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = ua.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(diff <= 1e-9 * scale, "{diff}");
    for u in [&ua, &ub] {
        let dn = a.space.divergence_norms(u);
        assert!(dn.iter().all(|v| *v <= 1e-10), "{:?}", dn.iter().cloned().fold(0.0, f64::max));
        assert!(a.space.max_normal_jump(u, 5) <= 1e-12);
    }
}

#[test]
fn kh_initial_energy_converges() {
    let ic = InitialCondition::default();
    let d = disc(16, 6, 1e-3, Formulation::Stream);
    let x = d.project(&|x, y| ic.velocity(x, y), 12).unwrap();
    let e = qoi::energies(&d.space, &d.velocity(&x));
    assert!((e.k - 0.48221).abs() < 1e-5, "{}", e.k);
    assert!((e.e / 37.6338 - 1.0).abs() < 1e-2, "{}", e.e);
    assert!((e.p / 95219.18 - 1.0).abs() < 5e-2, "{}", e.p);
}

#[test]
fn convection_conserves_or_dissipates() {
    let ic = InitialCondition::default();
    for (n, k) in [(3, 1), (4, 2), (3, 3)] {
        let d = disc(n, k, 0.0, Formulation::Saddle);
        let u = d.velocity(&d.project(&|x, y| ic.velocity(x, y), 8).unwrap());
        let c = d.convection.apply_vec(&d.space, &u);
        let w = dot(&u, &c);
        let scale = dot(&c, &c).sqrt() * dot(&u, &u).sqrt();
        // exactly divergence-free and normal-continuous: only upwind jumps remain
        assert!(w >= -1e-12 * scale, "{n} {k} {w}");
    }
}

#[test]
fn stokes_rayleigh_quotient_matches_eigenvalue() {
    let nu = 1e-2;
    for mode in [EigenMode::unit(1, 1, Variant::Sin), EigenMode::unit(0, 1, Variant::Cos), EigenMode::unit(1, 2, Variant::Cos)] {
        let d = disc(8, 4, nu, Formulation::Stream);
        let x = d.project(&|x, y| mode.velocity(x, y), 10).unwrap();
        let rate = d.sys_stokes.quad_form(&x) / d.sys_mass.quad_form(&x);
        let exact = nu * mode.lambda;
        assert!((rate / exact - 1.0).abs() < 5e-3, "{mode:?} {rate} {exact}");
        let e = qoi::energies(&d.space, &d.velocity(&x));
        assert!((e.k - mode.kinetic_energy()).abs() < 1e-6 * mode.kinetic_energy());
        assert!((e.e - 0.5).abs() < 1e-4);
        assert!((e.p / e.e / mode.lambda - 1.0).abs() < 1e-3);
    }
}

fn l2_error(d: &Discretization, u: &[f64], exact: &dyn Fn(f64, f64) -> [f64; 2]) -> f64 {
    let m = 96;
    let pts: Vec<(f64, f64)> = (0..m * m)
        .map(|i| (((i % m) as f64 + 0.5) / m as f64, ((i / m) as f64 + 0.5) / m as f64))
        .collect();
    let v = d.space.evaluate(u, &pts);
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
fn projection_converges_at_order_k_plus_one() {
    let mode = EigenMode::unit(1, 1, Variant::Sin);
    let g = |x: f64, y: f64| mode.velocity(x, y);
    for k in [1, 2, 3] {
        let errs: Vec<f64> = [4, 8]
            .iter()
            .map(|&n| {
                let d = disc(n, k, 0.0, Formulation::Stream);
                let u = d.velocity(&d.project(&g, k + 4).unwrap());
                l2_error(&d, &u, &g)
            })
            .collect();
        let rate = (errs[0] / errs[1]).log2();
        assert!(rate > k as f64 + 0.7, "k={k} rate={rate} {errs:?}");
    }
}

#[test]
fn penalty_keeps_viscous_operator_coercive() {
    let d = disc(4, 3, 1.0, Formulation::Saddle);
    let nv = d.space.n_vel;
    for seed in 0..5u64 {
        let u: Vec<f64> = (0..nv).map(|i| (((i as u64 + 1) * (seed + 7) * 2654435761) % 1000) as f64 / 500.0 - 1.0).collect();
        assert!(d.visc.quad_form(&u) > 0.0);
    }
    assert!(d.visc.asymmetry() < 1e-12 * d.visc.max_abs());
    assert!(d.mass.asymmetry() < 1e-14);
}
