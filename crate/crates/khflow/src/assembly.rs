//! Mass matrix, symmetric interior penalty viscous operator, divergence
//! coupling and the matrix-free upwind convection residual.
//!
//! Element contributions are reduced into the global arrays in element order,
//! then facet order, so every result is a pure function of its inputs.

use crate::linalg::Csr;
use crate::mesh::{FacetKind, Orientation};
use crate::poly::{self, Tab1d};
use crate::space::{VelocitySpace, NONE};

/// Default penalty factor `α` in `σ = α (k+1)² / h`.
pub const DEFAULT_PENALTY: f64 = 4.0;

/// 1D reference matrices: mass of `N̂`, stiffness of `N̂`, stiffness of `p̂`.
struct Ref1d {
    mn: Vec<Vec<f64>>,
    sn: Vec<Vec<f64>>,
    sp: Vec<Vec<f64>>,
}

fn ref1d(m1: usize) -> Ref1d {
    let t = Tab1d::new(m1, m1 + 2);
    let m2 = m1 - 1;
    let q = t.len();
    let f = |a: &Vec<f64>, b: &Vec<f64>| (0..q).map(|i| t.w[i] * a[i] * b[i]).sum::<f64>();
    let mn = (0..m1).map(|a| (0..m1).map(|b| f(&t.nv[a], &t.nv[b])).collect()).collect();
    let sn = (0..m1).map(|a| (0..m1).map(|b| f(&t.nd[a], &t.nd[b])).collect()).collect();
    let sp = (0..m2).map(|a| (0..m2).map(|b| f(&t.pd[a], &t.pd[b])).collect()).collect();
    Ref1d { mn, sn, sp }
}

fn scatter_local(
    l2g: &[usize],
    rows: &[usize],
    cols: &[usize],
    mat: &dyn Fn(usize, usize) -> f64,
    t: &mut Vec<(usize, usize, f64)>,
) {
    for &r in rows {
        let gr = l2g[r];
        if gr == NONE {
            continue;
        }
        for &c in cols {
            let gc = l2g[c];
            if gc == NONE {
                continue;
            }
            let v = mat(r, c);
            if v != 0.0 {
                t.push((gr, gc, v));
            }
        }
    }
}

/// Velocity mass matrix `M_ij = ∫ φ_i · φ_j`.
pub fn assemble_mass(space: &VelocitySpace) -> Csr {
    let (m1, m2) = (space.m1, space.m2);
    let r = ref1d(m1);
    let w = 0.25 * space.h() * space.h();
    let mut t = Vec::new();
    let u1: Vec<usize> = (0..m1 * m2).collect();
    let u2: Vec<usize> = (m1 * m2..2 * m1 * m2).collect();
    let f = |x: usize, y: usize| -> f64 {
        // same formula for both components: hierarchical index major, Legendre minor
        let (x, y) = (x % (m1 * m2), y % (m1 * m2));
        let (a, b, a2, b2) = (x / m2, x % m2, y / m2, y % m2);
        if b != b2 { 0.0 } else { w * r.mn[a][a2] }
    };
    for e in 0..space.num_elements() {
        let l2g = space.l2g(e);
        scatter_local(l2g, &u1, &u1, &f, &mut t);
        scatter_local(l2g, &u2, &u2, &f, &mut t);
    }
    Csr::from_triplets(space.n_vel, space.n_vel, t)
}

/// Viscous block `ν a_h(u, v)` of the symmetric interior penalty method with
/// penalty `σ = α (k+1)²/h`, acting on tangential jumps across interior and
/// periodic facets. Wall facets contribute nothing (free slip).
pub fn assemble_viscous(space: &VelocitySpace, nu: f64, alpha: f64) -> Csr {
    let (m1, m2) = (space.m1, space.m2);
    let h = space.h();
    let r = ref1d(m1);
    let mut t = Vec::new();
    let u1: Vec<usize> = (0..m1 * m2).collect();
    let u2: Vec<usize> = (m1 * m2..2 * m1 * m2).collect();
    let vol = |x: usize, y: usize| -> f64 {
        let comp2 = x >= m1 * m2;
        let (x, y) = (x % (m1 * m2), y % (m1 * m2));
        let (a, b, a2, b2) = (x / m2, x % m2, y / m2, y % m2);
        // normal-direction family N̂ (index a), tangential family p̂ (index b)
        let _ = comp2;
        let mut v = r.mn[a][a2] * r.sp[b][b2];
        if b == b2 {
            v += r.sn[a][a2];
        }
        nu * v
    };
    for e in 0..space.num_elements() {
        let l2g = space.l2g(e);
        scatter_local(l2g, &u1, &u1, &vol, &mut t);
        scatter_local(l2g, &u2, &u2, &vol, &mut t);
    }
    let sigma = alpha * ((space.k + 1) * (space.k + 1)) as f64 / h;
    let (pm, pp) = poly::legendre_endpoints(m2);
    let (dm, dp) = poly::legendre_endpoint_derivatives(m2);
    for f in &space.mesh.facets {
        if matches!(f.kind, FacetKind::Wall(_)) {
            continue;
        }
        let (l, rr) = (f.owner, f.neighbor.unwrap());
        // tangential component: u2 on vertical facets, u1 on horizontal ones
        let off = match f.orientation {
            Orientation::Vertical => m1 * m2,
            Orientation::Horizontal => 0,
        };
        // (global index, normal-family index, trace, normal derivative, jump sign)
        let mut fns: Vec<(usize, usize, f64, f64, f64)> = Vec::with_capacity(2 * m1 * m2);
        for (e, trace, der, eps) in [(l, &pp, &dp, 1.0), (rr, &pm, &dm, -1.0)] {
            let l2g = space.l2g(e);
            for j in 0..m1 {
                for i in 0..m2 {
                    let g = l2g[off + j * m2 + i];
                    if g != NONE {
                        fns.push((g, j, trace[i], 2.0 / h * der[i], eps));
                    }
                }
            }
        }
        let w = 0.5 * h * nu;
        for &(gb, jb, tb, db, eb) in &fns {
            for &(ga, ja, ta, da, ea) in &fns {
                let m = r.mn[jb][ja];
                if m == 0.0 {
                    continue;
                }
                let v = -0.5 * da * eb * tb - 0.5 * db * ea * ta + sigma * ea * eb * ta * tb;
                if v != 0.0 {
                    t.push((gb, ga, w * m * v));
                }
            }
        }
    }
    Csr::from_triplets(space.n_vel, space.n_vel, t)
}

/// Pressure coupling `B_qv = -∫ div v q` (rows: pressure DOFs, `(k+1)²` per element).
pub fn assemble_divergence(space: &VelocitySpace) -> Csr {
    let (m1, m2) = (space.m1, space.m2);
    let w = -0.5 * space.h();
    let g = &space.dn_leg;
    let np = m2 * m2;
    let mut t = Vec::new();
    for e in 0..space.num_elements() {
        let l2g = space.l2g(e);
        for a in 0..m1 {
            for b in 0..m2 {
                let col = l2g[a * m2 + b];
                if col == NONE {
                    continue;
                }
                for mx in 0..m2 {
                    if g[a][mx] != 0.0 {
                        t.push((e * np + mx * m2 + b, col, w * g[a][mx]));
                    }
                }
            }
        }
        for j in 0..m1 {
            for i in 0..m2 {
                let col = l2g[m1 * m2 + j * m2 + i];
                if col == NONE {
                    continue;
                }
                for my in 0..m2 {
                    if g[j][my] != 0.0 {
                        t.push((e * np + i * m2 + my, col, w * g[j][my]));
                    }
                }
            }
        }
    }
    Csr::from_triplets(space.n_pres, space.n_vel, t)
}

/// Pressure mass matrix (identity times `h²/4` in the orthonormal basis).
pub fn assemble_pressure_mass(space: &VelocitySpace) -> Csr {
    let w = 0.25 * space.h() * space.h();
    Csr::from_triplets(space.n_pres, space.n_pres, (0..space.n_pres).map(|i| (i, i, w)).collect())
}

/// Flat tables `[index * q + point]` for sum factorization.
#[derive(Clone, Debug)]
struct Tables {
    q: usize,
    w: Vec<f64>,
    x: Vec<f64>,
    nv: Vec<f64>,
    nd: Vec<f64>,
    pv: Vec<f64>,
    pd: Vec<f64>,
}

impl Tables {
    fn new(m1: usize, npts: usize) -> Self {
        let t = Tab1d::new(m1, npts);
        let flat = |v: &Vec<Vec<f64>>| v.iter().flatten().copied().collect::<Vec<f64>>();
        Tables { q: npts, w: t.w.clone(), x: t.x.clone(), nv: flat(&t.nv), nd: flat(&t.nd), pv: flat(&t.pv), pd: flat(&t.pd) }
    }
}

/// Scratch buffers for one element evaluation.
struct Work {
    t1v: Vec<f64>,
    t1d: Vec<f64>,
    t2v: Vec<f64>,
    t2d: Vec<f64>,
    u1: Vec<f64>,
    u1x: Vec<f64>,
    u1y: Vec<f64>,
    u2: Vec<f64>,
    u2x: Vec<f64>,
    u2y: Vec<f64>,
}

impl Work {
    fn new(q: usize, m2: usize) -> Self {
        let z = |n| vec![0.0; n];
        Work {
            t1v: z(q * m2),
            t1d: z(q * m2),
            t2v: z(q * m2),
            t2d: z(q * m2),
            u1: z(q * q),
            u1x: z(q * q),
            u1y: z(q * q),
            u2: z(q * q),
            u2x: z(q * q),
            u2y: z(q * q),
        }
    }
}

/// Matrix-free upwind convection `r_i = c_h(u; u, φ_i)` with a tensor
/// Gauss rule exact to degree `quad_order`.
#[derive(Clone, Debug)]
pub struct Convection {
    m1: usize,
    m2: usize,
    h: f64,
    pub quad_order: usize,
    tab: Tables,
    pm: Vec<f64>,
    pp: Vec<f64>,
}

impl Convection {
    pub fn default_order(k: usize) -> usize {
        3 * (k + 1)
    }

    pub fn new(space: &VelocitySpace, quad_order: usize) -> Self {
        assert!(quad_order >= 2, "convection quadrature order must be at least 2");
        let npts = poly::points_for_order(quad_order);
        let (pm, pp) = poly::legendre_endpoints(space.m2);
        Convection { m1: space.m1, m2: space.m2, h: space.h(), quad_order, tab: Tables::new(space.m1, npts), pm, pp }
    }

    /// Evaluates `C(u) u` into `out` (overwritten).
    pub fn apply(&self, space: &VelocitySpace, u: &[f64], out: &mut [f64]) {
        let (m1, m2) = (self.m1, self.m2);
        let nloc = 2 * m1 * m2;
        let nel = space.num_elements();
        let mut coef = vec![0.0; nel * nloc];
        for e in 0..nel {
            space.gather(e, u, &mut coef[e * nloc..(e + 1) * nloc]);
        }
        let mut lres = vec![0.0; nel * nloc];
        let mut w = Work::new(self.tab.q, m2);
        for e in 0..nel {
            self.volume(&coef[e * nloc..(e + 1) * nloc], &mut lres[e * nloc..(e + 1) * nloc], &mut w);
        }
        let q = self.tab.q;
        let mut fl = vec![0.0; q];
        let mut fr = vec![0.0; q];
        let mut sl = vec![0.0; m1];
        let mut sr = vec![0.0; m1];
        let hw = 0.5 * self.h;
        let t = &self.tab;
        for f in &space.mesh.facets {
            if matches!(f.kind, FacetKind::Wall(_)) {
                continue;
            }
            let (l, r) = (f.owner, f.neighbor.unwrap());
            let cl = &coef[l * nloc..(l + 1) * nloc];
            let cr = &coef[r * nloc..(r + 1) * nloc];
            // normal offset (component carrying u·n) and tangential offset
            let (noff, toff) = match f.orientation {
                Orientation::Vertical => (0, m1 * m2),
                Orientation::Horizontal => (m1 * m2, 0),
            };
            for a in 0..m1 {
                let (mut x, mut y) = (0.0, 0.0);
                for b in 0..m2 {
                    x += cl[toff + a * m2 + b] * self.pp[b];
                    y += cr[toff + a * m2 + b] * self.pm[b];
                }
                sl[a] = x;
                sr[a] = y;
            }
            for iq in 0..q {
                let mut un = 0.0;
                for b in 0..m2 {
                    un += cl[noff + m2 + b] * t.pv[b * q + iq];
                }
                let (mut ul, mut ur) = (0.0, 0.0);
                for a in 0..m1 {
                    ul += sl[a] * t.nv[a * q + iq];
                    ur += sr[a] * t.nv[a * q + iq];
                }
                let jump = ul - ur;
                let c = -0.5 * un * jump;
                let p = 0.5 * un.abs() * jump;
                fl[iq] = t.w[iq] * hw * (c + p);
                fr[iq] = t.w[iq] * hw * (c - p);
            }
            for (e, fv, tr) in [(l, &fl, &self.pp), (r, &fr, &self.pm)] {
                let dst = &mut lres[e * nloc + toff..e * nloc + toff + m1 * m2];
                for a in 0..m1 {
                    let mut s = 0.0;
                    for iq in 0..q {
                        s += fv[iq] * t.nv[a * q + iq];
                    }
                    for b in 0..m2 {
                        dst[a * m2 + b] += s * tr[b];
                    }
                }
            }
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        for e in 0..nel {
            let l2g = space.l2g(e);
            for (g, v) in l2g.iter().zip(&lres[e * nloc..(e + 1) * nloc]) {
                if *g != NONE {
                    out[*g] += v;
                }
            }
        }
    }

    pub fn apply_vec(&self, space: &VelocitySpace, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; space.n_vel];
        self.apply(space, u, &mut out);
        out
    }

    fn volume(&self, c: &[f64], res: &mut [f64], w: &mut Work) {
        let (m1, m2) = (self.m1, self.m2);
        let t = &self.tab;
        let q = t.q;
        let (c1, c2) = c.split_at(m1 * m2);
        for iq in 0..q {
            for b in 0..m2 {
                let (mut v, mut d) = (0.0, 0.0);
                for a in 0..m1 {
                    let x = c1[a * m2 + b];
                    v += x * t.nv[a * q + iq];
                    d += x * t.nd[a * q + iq];
                }
                w.t1v[iq * m2 + b] = v;
                w.t1d[iq * m2 + b] = d;
                let (mut v, mut d) = (0.0, 0.0);
                for j in 0..m1 {
                    let x = c2[j * m2 + b];
                    v += x * t.nv[j * q + iq];
                    d += x * t.nd[j * q + iq];
                }
                w.t2v[iq * m2 + b] = v;
                w.t2d[iq * m2 + b] = d;
            }
        }
        for iq in 0..q {
            for ir in 0..q {
                let (mut a0, mut a1, mut a2) = (0.0, 0.0, 0.0);
                let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
                for b in 0..m2 {
                    let (tv, td) = (w.t1v[iq * m2 + b], w.t1d[iq * m2 + b]);
                    let (pv, pd) = (t.pv[b * q + ir], t.pd[b * q + ir]);
                    a0 += tv * pv;
                    a1 += td * pv;
                    a2 += tv * pd;
                    // u2: x-index iq uses the Legendre family, y-index ir the hierarchical one
                    let (sv, sd) = (w.t2v[ir * m2 + b], w.t2d[ir * m2 + b]);
                    let (qv, qd) = (t.pv[b * q + iq], t.pd[b * q + iq]);
                    b0 += sv * qv;
                    b1 += sv * qd;
                    b2 += sd * qv;
                }
                let k = iq * q + ir;
                w.u1[k] = a0;
                w.u1x[k] = a1;
                w.u1y[k] = a2;
                w.u2[k] = b0;
                w.u2x[k] = b1;
                w.u2y[k] = b2;
            }
        }
        // weighted integrands, stored in place of u1x / u2x
        let s = 0.5 * self.h;
        for iq in 0..q {
            for ir in 0..q {
                let k = iq * q + ir;
                let ww = t.w[iq] * t.w[ir] * s;
                let g1 = ww * (w.u1[k] * w.u1x[k] + w.u2[k] * w.u1y[k]);
                let g2 = ww * (w.u1[k] * w.u2x[k] + w.u2[k] * w.u2y[k]);
                w.u1x[k] = g1;
                w.u2x[k] = g2;
            }
        }
        let (r1, r2) = res.split_at_mut(m1 * m2);
        for iq in 0..q {
            for b in 0..m2 {
                let (mut s1, mut s2) = (0.0, 0.0);
                for ir in 0..q {
                    s1 += w.u1x[iq * q + ir] * t.pv[b * q + ir];
                    // R2[r][i] = Σ_q g2[q][r] p̂_i(x_q): here iq plays r
                    s2 += w.u2x[ir * q + iq] * t.pv[b * q + ir];
                }
                w.t1v[iq * m2 + b] = s1;
                w.t2v[iq * m2 + b] = s2;
            }
        }
        for a in 0..m1 {
            for b in 0..m2 {
                let (mut s1, mut s2) = (0.0, 0.0);
                for iq in 0..q {
                    let nv = t.nv[a * q + iq];
                    s1 += w.t1v[iq * m2 + b] * nv;
                    s2 += w.t2v[iq * m2 + b] * nv;
                }
                r1[a * m2 + b] += s1;
                r2[a * m2 + b] += s2;
            }
        }
    }
}

/// Load vector `f_i = ∫ g · φ_i` with an `npts`-point tensor Gauss rule per element.
pub fn load_vector(space: &VelocitySpace, g: &dyn Fn(f64, f64) -> [f64; 2], npts: usize) -> Vec<f64> {
    let (m1, m2) = (space.m1, space.m2);
    let t = Tables::new(m1, npts);
    let q = t.q;
    let h = space.h();
    let nloc = 2 * m1 * m2;
    let mut out = vec![0.0; space.n_vel];
    let mut g1 = vec![0.0; q * q];
    let mut g2 = vec![0.0; q * q];
    let mut loc = vec![0.0; nloc];
    for (e, el) in space.mesh.elements.iter().enumerate() {
        for iq in 0..q {
            let x = el.lo[0] + 0.5 * (t.x[iq] + 1.0) * h;
            for ir in 0..q {
                let y = el.lo[1] + 0.5 * (t.x[ir] + 1.0) * h;
                let v = g(x, y);
                let w = t.w[iq] * t.w[ir] * 0.25 * h * h;
                g1[iq * q + ir] = w * v[0];
                g2[iq * q + ir] = w * v[1];
            }
        }
        for a in 0..m1 {
            for b in 0..m2 {
                let (mut s1, mut s2) = (0.0, 0.0);
                for iq in 0..q {
                    for ir in 0..q {
                        s1 += g1[iq * q + ir] * t.nv[a * q + iq] * t.pv[b * q + ir];
                        s2 += g2[iq * q + ir] * t.pv[b * q + iq] * t.nv[a * q + ir];
                    }
                }
                loc[a * m2 + b] = s1;
                loc[m1 * m2 + a * m2 + b] = s2;
            }
        }
        for (gidx, v) in space.l2g(e).iter().zip(&loc) {
            if *gidx != NONE {
                out[*gidx] += v;
            }
        }
    }
    out
}
