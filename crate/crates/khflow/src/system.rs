//! The semi-discrete system `M du/dt + A u + C(u) u = 0` in one of two
//! algebraic formulations:
//!
//! - [`Formulation::Saddle`]: velocity plus discontinuous Q_k pressure (one
//!   element-constant mode pinned), factorized with a pivot-free `LDLᵀ` in an
//!   elimination order that keeps every leading block nonsingular;
//! - [`Formulation::Stream`]: the velocity is the curl of a continuous stream
//!   function, giving an SPD system with the same discrete velocities.

use crate::assembly::{self, Convection};
use crate::linalg::{self, Csr, FactorizedOperator, Kind, Ordering, RefineSettings};
use crate::space::{StreamSpace, VelocitySpace};
use crate::Error;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    Saddle,
    Stream,
}

/// Scale of the pressure-mass regularization used by the regularized solve.
pub const PRESSURE_REGULARIZATION: f64 = -1e-12;

pub struct Discretization {
    pub space: VelocitySpace,
    pub formulation: Formulation,
    pub nu: f64,
    pub penalty: f64,
    pub mass: Csr,
    pub visc: Csr,
    /// `B` with the pinned pressure row removed.
    pub div: Csr,
    pub stream: Option<(StreamSpace, Csr, Csr)>,
    pub sys_mass: Csr,
    pub sys_stokes: Csr,
    pub n_unknowns: usize,
    pub convection: Convection,
    order: Option<Vec<usize>>,
}

impl std::fmt::Debug for Discretization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Discretization")
            .field("n", &self.space.mesh.n)
            .field("k", &self.space.k)
            .field("formulation", &self.formulation)
            .field("n_unknowns", &self.n_unknowns)
            .finish()
    }
}

impl Discretization {
    pub fn new(
        space: VelocitySpace,
        nu: f64,
        penalty: f64,
        formulation: Formulation,
        quad_order: usize,
    ) -> Result<Self, Error> {
        if !(nu >= 0.0) {
            return Err(Error::Invalid("viscosity must be non-negative".into()));
        }
        let mass = assembly::assemble_mass(&space);
        let visc = assembly::assemble_viscous(&space, nu, penalty);
        let bfull = assembly::assemble_divergence(&space);
        let div = drop_first_row(&bfull);
        let convection = Convection::new(&space, quad_order);
        let nv = space.n_vel;
        let (stream, sys_mass, sys_stokes, n_unknowns, order) = match formulation {
            Formulation::Saddle => {
                let np = div.nrows;
                let mut t = Vec::new();
                mass.triplets_at(0, 0, 1.0, &mut t);
                let sm = Csr::from_triplets(nv + np, nv + np, t);
                let mut t = Vec::new();
                visc.triplets_at(0, 0, 1.0, &mut t);
                div.triplets_at(nv, 0, 1.0, &mut t);
                div.transpose().triplets_at(0, nv, 1.0, &mut t);
                let ss = Csr::from_triplets(nv + np, nv + np, t);
                let order = saddle_order(&space, &ss)?;
                (None, sm, ss, nv + np, Some(order))
            }
            Formulation::Stream => {
                let ss = StreamSpace::new(&space);
                let c = ss.curl_matrix(&space);
                let ct = c.transpose();
                let sm = ct.matmul(&mass.matmul(&c));
                let sk = ct.matmul(&visc.matmul(&c));
                let n = ss.n_dofs;
                (Some((ss, c, ct)), sm, sk, n, None)
            }
        };
        Ok(Discretization {
            space,
            formulation,
            nu,
            penalty,
            mass,
            visc,
            div,
            stream,
            sys_mass,
            sys_stokes,
            n_unknowns,
            convection,
            order,
        })
    }

    /// Velocity coefficients of an unknown vector.
    pub fn velocity(&self, x: &[f64]) -> Vec<f64> {
        match &self.stream {
            None => x[..self.space.n_vel].to_vec(),
            Some((_, c, _)) => c.mul_vec(x),
        }
    }

    /// Pressure coefficients (all `(k+1)²` modes per element) of an unknown vector.
    pub fn pressure(&self, x: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.space.n_pres];
        if self.stream.is_none() {
            p[1..].copy_from_slice(&x[self.space.n_vel..]);
        }
        p
    }

    /// Maps a velocity-space functional to the unknown space.
    pub fn restrict(&self, r: &[f64]) -> Vec<f64> {
        match &self.stream {
            None => {
                let mut out = vec![0.0; self.n_unknowns];
                out[..r.len()].copy_from_slice(r);
                out
            }
            Some((_, _, ct)) => ct.mul_vec(r),
        }
    }

    /// `C(u) u` in the unknown space for unknown vector `x`.
    pub fn convection_residual(&self, x: &[f64]) -> Vec<f64> {
        let u = self.velocity(x);
        let r = self.convection.apply_vec(&self.space, &u);
        self.restrict(&r)
    }

    /// `M + γ A` in the unknown space.
    pub fn operator(&self, gamma: f64) -> Csr {
        self.sys_mass.add(1.0, &self.sys_stokes, gamma)
    }

    /// Factorizes `M + γ A`; `regularize` adds the pressure mass times
    /// [`PRESSURE_REGULARIZATION`] to the factorized matrix (saddle only).
    pub fn factorize(&self, gamma: f64, settings: RefineSettings, regularize: bool) -> Result<FactorizedOperator, Error> {
        self.factorize_matrix(self.operator(gamma), settings, regularize)
    }

    fn factorize_matrix(&self, m: Csr, settings: RefineSettings, regularize: bool) -> Result<FactorizedOperator, Error> {
        match self.formulation {
            Formulation::Stream => {
                if regularize {
                    return Err(Error::Invalid("pressure regularization requires the saddle formulation".into()));
                }
                FactorizedOperator::new(m, None, Kind::Llt, Ordering::Amd, settings)
            }
            Formulation::Saddle => {
                let reg = regularize.then(|| {
                    let nv = self.space.n_vel;
                    let w = 0.25 * self.space.h() * self.space.h() * PRESSURE_REGULARIZATION;
                    let t = (nv..self.n_unknowns).map(|i| (i, i, w)).collect();
                    Csr::from_triplets(self.n_unknowns, self.n_unknowns, t)
                });
                FactorizedOperator::new(
                    m,
                    reg.as_ref(),
                    Kind::Ldlt,
                    Ordering::Custom(self.order.clone().unwrap()),
                    settings,
                )
            }
        }
    }

    /// Discrete L2 projection of `g` onto the divergence-free subspace.
    pub fn project(&self, g: &dyn Fn(f64, f64) -> [f64; 2], npts: usize) -> Result<Vec<f64>, Error> {
        let cons = match &self.stream {
            Some((_, c, ct)) => Constraint::Stream(c, ct),
            None => Constraint::Saddle(&self.div),
        };
        project_with(&self.space, &self.mass, cons, g, npts)
    }

    /// Unknown vector with the given velocity coefficients (which must lie in
    /// the divergence-free subspace for the stream formulation).
    pub fn from_velocity(&self, u: &[f64]) -> Result<Vec<f64>, Error> {
        match &self.stream {
            None => {
                let mut x = vec![0.0; self.n_unknowns];
                x[..u.len()].copy_from_slice(u);
                Ok(x)
            }
            Some((_, c, ct)) => {
                // least squares through the mass inner product
                let mu = self.mass.mul_vec(u);
                let b = ct.mul_vec(&mu);
                let op = FactorizedOperator::new(self.sys_mass.clone(), None, Kind::Llt, Ordering::Amd, RefineSettings::default())?;
                let _ = c;
                Ok(op.solve_refined(&b)?.0)
            }
        }
    }

    /// Kinetic energy `½ uᵀ M u` of an unknown vector.
    pub fn kinetic_energy(&self, x: &[f64]) -> f64 {
        0.5 * self.sys_mass.quad_form(x)
    }
}

/// Velocity coefficients of the L2 projection of `g` onto the
/// divergence-free subspace, assembling only what the projection needs (no
/// viscous or convection operators), so it also fits large meshes at high order.
pub fn project_velocity(
    space: &VelocitySpace,
    formulation: Formulation,
    g: &dyn Fn(f64, f64) -> [f64; 2],
    npts: usize,
) -> Result<Vec<f64>, Error> {
    let mass = assembly::assemble_mass(space);
    match formulation {
        Formulation::Saddle => {
            let div = drop_first_row(&assembly::assemble_divergence(space));
            let x = project_with(space, &mass, Constraint::Saddle(&div), g, npts)?;
            Ok(x[..space.n_vel].to_vec())
        }
        Formulation::Stream => {
            let c = StreamSpace::new(space).curl_matrix(space);
            let ct = c.transpose();
            let x = project_with(space, &mass, Constraint::Stream(&c, &ct), g, npts)?;
            Ok(c.mul_vec(&x))
        }
    }
}

enum Constraint<'a> {
    Saddle(&'a Csr),
    Stream(&'a Csr, &'a Csr),
}

fn project_with(
    space: &VelocitySpace,
    mass: &Csr,
    cons: Constraint<'_>,
    g: &dyn Fn(f64, f64) -> [f64; 2],
    npts: usize,
) -> Result<Vec<f64>, Error> {
    let f = assembly::load_vector(space, g, npts);
    match cons {
        Constraint::Stream(c, ct) => {
            let m = ct.matmul(&mass.matmul(c));
            let op = FactorizedOperator::new(m, None, Kind::Llt, Ordering::Amd, RefineSettings::default())?;
            Ok(op.solve_refined(&ct.mul_vec(&f))?.0)
        }
        Constraint::Saddle(div) => {
            let nv = space.n_vel;
            let n = nv + div.nrows;
            let mut t = Vec::new();
            mass.triplets_at(0, 0, 1.0, &mut t);
            div.triplets_at(nv, 0, 1.0, &mut t);
            div.transpose().triplets_at(0, nv, 1.0, &mut t);
            let m = Csr::from_triplets(n, n, t);
            let order = saddle_order(space, &m)?;
            let op = FactorizedOperator::new(m, None, Kind::Ldlt, Ordering::Custom(order), RefineSettings::default())?;
            let mut b = f;
            b.resize(n, 0.0);
            let (mut x, _) = op.solve_refined(&b)?;
            // the projection multiplier is not a Navier-Stokes pressure
            x[nv..].iter_mut().for_each(|v| *v = 0.0);
            Ok(x)
        }
    }
}

fn drop_first_row(b: &Csr) -> Csr {
    let mut t = Vec::new();
    for i in 1..b.nrows {
        let (c, v) = b.row(i);
        for (j, a) in c.iter().zip(v) {
            t.push((i - 1, *j, *a));
        }
    }
    Csr::from_triplets(b.nrows - 1, b.ncols, t)
}

/// Elimination order for the saddle unknowns `[u; p without p_0]`.
///
/// Non-constant pressure modes of an element wait for all bubbles of that
/// element (the local divergence from bubbles onto them is onto), constant
/// modes wait for every facet unknown of their element (subsets of element
/// flux rows are independent once `p_0` is dropped).
fn saddle_order(space: &VelocitySpace, stokes: &Csr) -> Result<Vec<usize>, Error> {
    let (nv, np_loc) = (space.n_vel, space.npres_loc());
    let m2 = space.m2;
    let pidx = |e: usize, l: usize| nv + e * np_loc + l - 1;
    let mut cons = Vec::with_capacity(space.n_pres - 1);
    for (e, el) in space.mesh.elements.iter().enumerate() {
        let b0 = space.bubble_start(e);
        let bubbles: Vec<usize> = (b0..b0 + 2 * space.k * m2).collect();
        for l in 1..np_loc {
            cons.push((pidx(e, l), bubbles.clone()));
        }
        if e > 0 {
            let facets: Vec<usize> = el.facets.iter().filter_map(|&f| space.facet_dofs(f)).flat_map(|s| s..s + m2).collect();
            cons.push((pidx(e, 0), facets));
        }
    }
    linalg::saddle_ordering(stokes, &cons)
}
