//! Raviart-Thomas velocity space RT_k on the structured mesh, its
//! discontinuous Q_k pressure partner, and the continuous Q_{k+1} stream
//! function space whose curl spans the discretely divergence-free subspace.
//!
//! Element-local velocity basis (reference coordinates ξ, η in [-1, 1]):
//! - u1 functions `N̂_a(ξ) p̂_b(η) e_x` with `a < k+2`, `b < k+1`, local index `a (k+1) + b`
//! - u2 functions `p̂_i(ξ) N̂_j(η) e_y` with `j < k+2`, `i < k+1`, local index
//!   `(k+2)(k+1) + j (k+1) + i`
//!
//! `N̂_0`/`N̂_1` carry the normal trace on the left/right (bottom/top) facet;
//! their coefficients are the facet DOFs shared by both neighbors. Wall facets
//! have no DOFs, which imposes `u·n = 0` strongly.

use crate::mesh::{FacetKind, StructuredMesh};
use crate::poly;
use crate::Error;

pub const NONE: usize = usize::MAX;

#[derive(Clone, Debug)]
pub struct VelocitySpace {
    pub mesh: StructuredMesh,
    pub k: usize,
    /// `k + 2`: size of the hierarchical family.
    pub m1: usize,
    /// `k + 1`: size of the Legendre family.
    pub m2: usize,
    pub n_vel: usize,
    pub n_pres: usize,
    pub n_facet_dofs: usize,
    facet_start: Vec<usize>,
    l2g: Vec<usize>,
    /// `N̂_a` in Legendre coefficients (`m1 x m1`).
    pub to_leg: Vec<Vec<f64>>,
    /// `N̂_a'` in Legendre coefficients (`m1 x m2`).
    pub dn_leg: Vec<Vec<f64>>,
    /// Legendre differentiation (`m1 x m1`).
    pub dleg: Vec<Vec<f64>>,
}

impl VelocitySpace {
    pub fn new(mesh: StructuredMesh, k: usize) -> Result<Self, Error> {
        build_space(mesh, k)
    }

    pub fn nloc(&self) -> usize {
        2 * self.m1 * self.m2
    }

    pub fn npres_loc(&self) -> usize {
        self.m2 * self.m2
    }

    pub fn h(&self) -> f64 {
        self.mesh.h
    }

    pub fn num_elements(&self) -> usize {
        self.mesh.num_elements()
    }

    /// Global indices of the local velocity DOFs (`NONE` on walls).
    pub fn l2g(&self, e: usize) -> &[usize] {
        let n = self.nloc();
        &self.l2g[e * n..(e + 1) * n]
    }

    /// First global DOF of a facet, or `None` for walls.
    pub fn facet_dofs(&self, f: usize) -> Option<usize> {
        let s = self.facet_start[f];
        (s != NONE).then_some(s)
    }

    pub fn bubble_start(&self, e: usize) -> usize {
        self.n_facet_dofs + e * 2 * self.k * self.m2
    }

    pub fn gather(&self, e: usize, u: &[f64], out: &mut [f64]) {
        for (o, &g) in out.iter_mut().zip(self.l2g(e)) {
            *o = if g == NONE { 0.0 } else { u[g] };
        }
    }

    pub fn u1_index(&self, a: usize, b: usize) -> usize {
        a * self.m2 + b
    }

    pub fn u2_index(&self, j: usize, i: usize) -> usize {
        self.m1 * self.m2 + j * self.m2 + i
    }

    /// DOF count in the convention of counting facet DOFs before periodic
    /// identification (walls included) and only the divergence-free part of
    /// the element interiors.
    pub fn dof_count_reported(&self) -> usize {
        let (n, k) = (self.mesh.n, self.k);
        (k + 1) * 2 * n * (n + 1) + n * n * (2 * k * (k + 1) - ((k + 1) * (k + 1) - 1))
    }

    /// Element-local modal representation in tensor Legendre form.
    pub fn modal(&self, e: usize, u: &[f64]) -> ElementModal {
        let mut loc = vec![0.0; self.nloc()];
        self.gather(e, u, &mut loc);
        self.modal_from_local(&loc)
    }

    pub fn modal_from_local(&self, loc: &[f64]) -> ElementModal {
        let (m1, m2) = (self.m1, self.m2);
        let mut u1 = vec![0.0; m1 * m1];
        let mut u2 = vec![0.0; m1 * m1];
        for a in 0..m1 {
            for b in 0..m2 {
                let c = loc[a * m2 + b];
                if c == 0.0 {
                    continue;
                }
                for (mx, t) in self.to_leg[a].iter().enumerate() {
                    u1[mx * m1 + b] += c * t;
                }
            }
        }
        for j in 0..m1 {
            for i in 0..m2 {
                let c = loc[m1 * m2 + j * m2 + i];
                if c == 0.0 {
                    continue;
                }
                for (my, t) in self.to_leg[j].iter().enumerate() {
                    u2[i * m1 + my] += c * t;
                }
            }
        }
        ElementModal { d: m1, u1, u2 }
    }

    /// Velocity at physical points.
    pub fn evaluate(&self, u: &[f64], points: &[(f64, f64)]) -> Vec<[f64; 2]> {
        let (m1, m2) = (self.m1, self.m2);
        let mut loc = vec![0.0; self.nloc()];
        let (mut nx, mut ny, mut px, mut py, mut tmp) =
            (vec![0.0; m1], vec![0.0; m1], vec![0.0; m1], vec![0.0; m1], vec![0.0; m1]);
        points
            .iter()
            .map(|&(x, y)| {
                let (e, xi, eta) = self.mesh.locate(x, y);
                self.gather(e, u, &mut loc);
                poly::hierarchical_all(m1, xi, &mut nx, &mut tmp);
                poly::hierarchical_all(m1, eta, &mut ny, &mut tmp);
                poly::legendre_all(m1, xi, &mut px, &mut tmp);
                poly::legendre_all(m1, eta, &mut py, &mut tmp);
                let mut v = [0.0; 2];
                for a in 0..m1 {
                    for b in 0..m2 {
                        v[0] += loc[a * m2 + b] * nx[a] * py[b];
                        v[1] += loc[m1 * m2 + a * m2 + b] * px[b] * ny[a];
                    }
                }
                v
            })
            .collect()
    }

    /// Element-wise L2 norms of `div u`, exact (the divergence is in Q_k).
    pub fn divergence_norms(&self, u: &[f64]) -> Vec<f64> {
        let (m1, m2) = (self.m1, self.m2);
        let mut loc = vec![0.0; self.nloc()];
        let mut d = vec![0.0; m2 * m2];
        (0..self.num_elements())
            .map(|e| {
                self.gather(e, u, &mut loc);
                local_divergence(self, &loc, &mut d);
                let _ = m1;
                d.iter().map(|v| v * v).sum::<f64>().sqrt()
            })
            .collect()
    }

    /// Largest jump of the normal velocity across interior and periodic facets,
    /// sampled at Gauss points.
    pub fn max_normal_jump(&self, u: &[f64], npts: usize) -> f64 {
        let mut worst: f64 = 0.0;
        let (xs, _) = poly::gauss_legendre(npts);
        let h = self.h();
        for f in &self.mesh.facets {
            if let FacetKind::Wall(_) = f.kind {
                continue;
            }
            let (o, nb) = (&self.mesh.elements[f.owner], &self.mesh.elements[f.neighbor.unwrap()]);
            for &s in &xs {
                let t = 0.5 * (s + 1.0) * h;
                let (po, pn) = match f.orientation {
                    crate::mesh::Orientation::Vertical => {
                        let y = o.lo[1] + t;
                        ((o.hi[0], y), (nb.lo[0], y))
                    }
                    crate::mesh::Orientation::Horizontal => {
                        let x = o.lo[0] + t;
                        ((x, o.hi[1]), (x, nb.lo[1]))
                    }
                };
                let vo = self.evaluate_in(f.owner, u, po);
                let vn = self.evaluate_in(f.neighbor.unwrap(), u, pn);
                let c = if f.normal[0] != 0.0 { 0 } else { 1 };
                worst = worst.max((vo[c] - vn[c]).abs());
            }
        }
        worst
    }

    /// Evaluation inside a given element (points on its boundary allowed).
    pub fn evaluate_in(&self, e: usize, u: &[f64], p: (f64, f64)) -> [f64; 2] {
        let el = &self.mesh.elements[e];
        let h = self.h();
        let xi = (2.0 * (p.0 - el.lo[0]) / h - 1.0).clamp(-1.0, 1.0);
        let eta = (2.0 * (p.1 - el.lo[1]) / h - 1.0).clamp(-1.0, 1.0);
        self.evaluate_reference(e, u, xi, eta)
    }

    pub fn evaluate_reference(&self, e: usize, u: &[f64], xi: f64, eta: f64) -> [f64; 2] {
        let (m1, m2) = (self.m1, self.m2);
        let mut loc = vec![0.0; self.nloc()];
        self.gather(e, u, &mut loc);
        let (mut nx, mut ny, mut px, mut py, mut tmp) =
            (vec![0.0; m1], vec![0.0; m1], vec![0.0; m1], vec![0.0; m1], vec![0.0; m1]);
        poly::hierarchical_all(m1, xi, &mut nx, &mut tmp);
        poly::hierarchical_all(m1, eta, &mut ny, &mut tmp);
        poly::legendre_all(m1, xi, &mut px, &mut tmp);
        poly::legendre_all(m1, eta, &mut py, &mut tmp);
        let mut v = [0.0; 2];
        for a in 0..m1 {
            for b in 0..m2 {
                v[0] += loc[a * m2 + b] * nx[a] * py[b];
                v[1] += loc[m1 * m2 + a * m2 + b] * px[b] * ny[a];
            }
        }
        v
    }
}

/// `d[mx * m2 + my]`: coefficients of `div u` in the tensor Legendre basis of
/// Q_k. Since the basis is orthonormal, `‖div u‖²_T = Σ d²`.
pub fn local_divergence(space: &VelocitySpace, loc: &[f64], d: &mut [f64]) {
    let (m1, m2) = (space.m1, space.m2);
    // div = (2/h)[Σ c1_ab G_a,mx p̂_b + Σ c2_ji p̂_i G_j,my]; the L2 norm
    // carries h/2, so the factors cancel.
    d.iter_mut().for_each(|v| *v = 0.0);
    for a in 0..m1 {
        for b in 0..m2 {
            let c = loc[a * m2 + b];
            for mx in 0..m2 {
                d[mx * m2 + b] += c * space.dn_leg[a][mx];
            }
        }
    }
    for j in 0..m1 {
        for i in 0..m2 {
            let c = loc[m1 * m2 + j * m2 + i];
            for my in 0..m2 {
                d[i * m2 + my] += c * space.dn_leg[j][my];
            }
        }
    }
}

/// Builds the velocity space of order `k` (1..=8) on `mesh`.
pub fn build_space(mesh: StructuredMesh, k: usize) -> Result<VelocitySpace, Error> {
    if !(1..=8).contains(&k) {
        return Err(Error::Invalid(format!("unsupported order k = {k} (must be 1..=8)")));
    }
    let (m1, m2) = (k + 2, k + 1);
    let nf = mesh.facets.len();
    let mut facet_start = vec![NONE; nf];
    let mut next = 0;
    for (f, fac) in mesh.facets.iter().enumerate() {
        if !matches!(fac.kind, FacetKind::Wall(_)) {
            facet_start[f] = next;
            next += m2;
        }
    }
    let n_facet_dofs = next;
    let nel = mesh.num_elements();
    let nb = 2 * k * m2;
    let n_vel = n_facet_dofs + nel * nb;
    let nloc = 2 * m1 * m2;
    let mut l2g = vec![NONE; nel * nloc];
    for (e, el) in mesh.elements.iter().enumerate() {
        let base = e * nloc;
        let bub = n_facet_dofs + e * nb;
        let mut nb_next = bub;
        for a in 0..m1 {
            for b in 0..m2 {
                let g = match a {
                    0 | 1 => {
                        let s = facet_start[el.facets[a]];
                        if s == NONE { NONE } else { s + b }
                    }
                    _ => {
                        nb_next += 1;
                        nb_next - 1
                    }
                };
                l2g[base + a * m2 + b] = g;
            }
        }
        for j in 0..m1 {
            for i in 0..m2 {
                let g = match j {
                    0 | 1 => {
                        let s = facet_start[el.facets[2 + j]];
                        if s == NONE { NONE } else { s + i }
                    }
                    _ => {
                        nb_next += 1;
                        nb_next - 1
                    }
                };
                l2g[base + m1 * m2 + j * m2 + i] = g;
            }
        }
        debug_assert_eq!(nb_next, bub + nb);
    }
    Ok(VelocitySpace {
        n_vel,
        n_pres: nel * m2 * m2,
        n_facet_dofs,
        facet_start,
        l2g,
        to_leg: poly::hierarchical_to_legendre(m1),
        dn_leg: poly::hierarchical_derivative_to_legendre(m1),
        dleg: poly::legendre_derivative_matrix(m1),
        mesh,
        k,
        m1,
        m2,
    })
}

/// Tensor-Legendre coefficients of one element's velocity; both components
/// stored as `d x d` arrays indexed `[mx * d + my]` with `d = k + 2`.
#[derive(Clone, Debug)]
pub struct ElementModal {
    pub d: usize,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

/// `∂/∂ξ` (axis 0) or `∂/∂η` (axis 1) of a `d x d` Legendre array.
pub fn modal_derivative(dleg: &[Vec<f64>], c: &[f64], axis: usize, out: &mut [f64]) {
    let d = dleg.len();
    out.iter_mut().for_each(|v| *v = 0.0);
    for mx in 0..d {
        for my in 0..d {
            let v = c[mx * d + my];
            if v == 0.0 {
                continue;
            }
            if axis == 0 {
                for l in 0..mx {
                    out[l * d + my] += v * dleg[mx][l];
                }
            } else {
                for l in 0..my {
                    out[mx * d + l] += v * dleg[my][l];
                }
            }
        }
    }
}

/// Piecewise polynomial field in tensor Legendre form on each element.
#[derive(Clone, Debug)]
pub struct DgField {
    pub n: usize,
    pub d: usize,
    pub ncomp: usize,
    pub coeffs: Vec<f64>,
}

impl DgField {
    pub fn block(&self, e: usize, c: usize) -> &[f64] {
        let s = self.d * self.d;
        let o = (e * self.ncomp + c) * s;
        &self.coeffs[o..o + s]
    }

    /// `Σ_T ‖f_c‖²_T` summed over components.
    pub fn l2_norm_sq(&self) -> f64 {
        let h = 1.0 / self.n as f64;
        let w = 0.25 * h * h;
        let s = self.d * self.d * self.ncomp;
        self.coeffs.chunks(s).map(|c| c.iter().map(|v| v * v).sum::<f64>()).sum::<f64>() * w
    }

    pub fn evaluate(&self, x: f64, y: f64) -> Vec<f64> {
        let mesh_n = self.n;
        let nf = mesh_n as f64;
        let xs = x.rem_euclid(1.0);
        let i = ((xs * nf).floor() as usize).min(mesh_n - 1);
        let j = ((y * nf).floor().max(0.0) as usize).min(mesh_n - 1);
        let xi = 2.0 * (xs * nf - i as f64) - 1.0;
        let eta = 2.0 * (y * nf - j as f64) - 1.0;
        let e = j * mesh_n + i;
        let d = self.d;
        let (mut px, mut py, mut t) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
        poly::legendre_all(d, xi, &mut px, &mut t);
        poly::legendre_all(d, eta, &mut py, &mut t);
        (0..self.ncomp)
            .map(|c| {
                let b = self.block(e, c);
                let mut s = 0.0;
                for mx in 0..d {
                    for my in 0..d {
                        s += b[mx * d + my] * px[mx] * py[my];
                    }
                }
                s
            })
            .collect()
    }
}

/// Element-wise vorticity `∂x u2 - ∂y u1`.
pub fn broken_curl(space: &VelocitySpace, u: &[f64]) -> DgField {
    let d = space.m1;
    let s = 2.0 / space.h();
    let mut coeffs = vec![0.0; space.num_elements() * d * d];
    let mut a = vec![0.0; d * d];
    let mut b = vec![0.0; d * d];
    for e in 0..space.num_elements() {
        let m = space.modal(e, u);
        modal_derivative(&space.dleg, &m.u2, 0, &mut a);
        modal_derivative(&space.dleg, &m.u1, 1, &mut b);
        let out = &mut coeffs[e * d * d..(e + 1) * d * d];
        for ((o, x), y) in out.iter_mut().zip(&a).zip(&b) {
            *o = s * (x - y);
        }
    }
    DgField { n: space.mesh.n, d, ncomp: 1, coeffs }
}

/// Element-wise gradient of the broken vorticity.
pub fn broken_grad_curl(space: &VelocitySpace, u: &[f64]) -> DgField {
    let w = broken_curl(space, u);
    let d = w.d;
    let s = 2.0 / space.h();
    let mut coeffs = vec![0.0; space.num_elements() * 2 * d * d];
    let mut a = vec![0.0; d * d];
    for e in 0..space.num_elements() {
        for c in 0..2 {
            modal_derivative(&space.dleg, w.block(e, 0), c, &mut a);
            let o = (e * 2 + c) * d * d;
            for (dst, v) in coeffs[o..o + d * d].iter_mut().zip(&a) {
                *dst = s * v;
            }
        }
    }
    DgField { n: space.mesh.n, d, ncomp: 2, coeffs }
}

/// Continuous Q_{k+1} stream-function space: periodic in x, zero on the
/// bottom wall and a single free constant on the top wall.
#[derive(Clone, Debug)]
pub struct StreamSpace {
    pub n_dofs: usize,
    m1: usize,
    l2g: Vec<usize>,
}

impl StreamSpace {
    pub fn new(space: &VelocitySpace) -> Self {
        let (n, k, m1) = (space.mesh.n, space.k, space.m1);
        // vertices (interior rows), top constant, vertical edges, horizontal
        // interior edges, element interiors
        let n_vert = n * (n - 1);
        let top = n_vert;
        let vedge0 = n_vert + 1;
        let hedge0 = vedge0 + n * n * k;
        let int0 = hedge0 + n * (n - 1) * k;
        let n_dofs = int0 + n * n * k * k;
        let vertex = |ii: usize, jj: usize| -> usize {
            if jj == 0 {
                NONE
            } else if jj == n {
                top
            } else {
                (jj - 1) * n + ii % n
            }
        };
        let mut l2g = vec![NONE; n * n * m1 * m1];
        for j in 0..n {
            for i in 0..n {
                let e = j * n + i;
                let base = e * m1 * m1;
                for a in 0..m1 {
                    for b in 0..m1 {
                        let g = match (a < 2, b < 2) {
                            (true, true) => vertex(i + a, j + b),
                            (true, false) => vedge0 + (j * n + (i + a) % n) * k + (b - 2),
                            (false, true) => {
                                let jj = j + b;
                                if jj == 0 || jj == n {
                                    NONE
                                } else {
                                    hedge0 + ((jj - 1) * n + i) * k + (a - 2)
                                }
                            }
                            (false, false) => int0 + e * k * k + (a - 2) * k + (b - 2),
                        };
                        l2g[base + a * m1 + b] = g;
                    }
                }
            }
        }
        StreamSpace { n_dofs, m1, l2g }
    }

    pub fn l2g(&self, e: usize) -> &[usize] {
        let s = self.m1 * self.m1;
        &self.l2g[e * s..(e + 1) * s]
    }

    /// Sparse curl map from stream-function coefficients to RT coefficients.
    pub fn curl_matrix(&self, space: &VelocitySpace) -> crate::linalg::Csr {
        let (m1, m2) = (space.m1, space.m2);
        let s = 2.0 / space.h();
        let g = &space.dn_leg;
        let mut done = vec![false; space.n_vel];
        let mut t = Vec::new();
        for e in 0..space.num_elements() {
            let vl = space.l2g(e);
            let pl = self.l2g(e);
            for a in 0..m1 {
                for bp in 0..m2 {
                    let row = vl[a * m2 + bp];
                    if row == NONE || done[row] {
                        continue;
                    }
                    done[row] = true;
                    // u1 = ∂y ψ: coefficient (a, b') = s Σ_b ψ_ab G[b][b']
                    for b in 0..m1 {
                        let col = pl[a * m1 + b];
                        if col != NONE && g[b][bp] != 0.0 {
                            t.push((row, col, s * g[b][bp]));
                        }
                    }
                }
            }
            for j in 0..m1 {
                for i in 0..m2 {
                    let row = vl[m1 * m2 + j * m2 + i];
                    if row == NONE || done[row] {
                        continue;
                    }
                    done[row] = true;
                    // u2 = -∂x ψ: coefficient (j, i) = -s Σ_a ψ_aj G[a][i]
                    for a in 0..m1 {
                        let col = pl[a * m1 + j];
                        if col != NONE && g[a][i] != 0.0 {
                            t.push((row, col, -s * g[a][i]));
                        }
                    }
                }
            }
        }
        crate::linalg::Csr::from_triplets(space.n_vel, self.n_dofs, t)
    }
}
