//! Sparse matrices and direct solves with iterative refinement.
//!
//! Factorizations are delegated to faer's sparse Cholesky family: `LLᵀ`
//! for SPD systems and pivot-free `LDLᵀ` for the saddle-point systems,
//! which are made safe by the constrained elimination order built in
//! [`saddle_ordering`]. Residuals are always formed with the unfactorized
//! matrix using compensated (double-double) dot products.

use crate::Error;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::ldlt::factor::{LdltParams, LdltRegularization};
use faer::linalg::cholesky::llt::factor::{LltParams, LltRegularization};
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, LdltRef, LltRef, SymbolicCholesky,
    SymmetricOrdering,
};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Par, Side, Spec};

/// Compressed sparse row matrix with sorted, duplicate-free rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl Csr {
    /// Builds from `(row, col, value)` triplets. Duplicates are summed in
    /// insertion order, so the result is a pure function of the triplet list.
    pub fn from_triplets(nrows: usize, ncols: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut data: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            assert!(r < nrows && c < ncols, "triplet out of range");
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Csr { nrows, ncols, indptr, indices, data }
    }

    pub fn identity(n: usize) -> Self {
        Csr::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.data[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map(|p| v[p]).unwrap_or(0.0)
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            let mut s = 0.0;
            for (j, a) in c.iter().zip(v) {
                s += a * x[*j];
            }
            *yi = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec(x, &mut y);
        y
    }

    /// `y = Aᵀ x`
    pub fn matvec_t(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.nrows);
        assert_eq!(y.len(), self.ncols);
        y.iter_mut().for_each(|v| *v = 0.0);
        for (i, xi) in x.iter().enumerate() {
            let (c, v) = self.row(i);
            for (j, a) in c.iter().zip(v) {
                y[*j] += a * xi;
            }
        }
    }

    pub fn transpose(&self) -> Csr {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (j, a) in c.iter().zip(v) {
                t.push((*j, i, *a));
            }
        }
        Csr::from_triplets(self.ncols, self.nrows, t)
    }

    /// Sparse product `A B` with a dense row accumulator.
    pub fn matmul(&self, b: &Csr) -> Csr {
        assert_eq!(self.ncols, b.nrows);
        let mut acc = vec![0.0; b.ncols];
        let mut mark = vec![usize::MAX; b.ncols];
        let mut cols: Vec<usize> = Vec::new();
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for i in 0..self.nrows {
            cols.clear();
            let (ca, va) = self.row(i);
            for (k, a) in ca.iter().zip(va) {
                let (cb, vb) = b.row(*k);
                for (j, bv) in cb.iter().zip(vb) {
                    if mark[*j] != i {
                        mark[*j] = i;
                        acc[*j] = 0.0;
                        cols.push(*j);
                    }
                    acc[*j] += a * bv;
                }
            }
            cols.sort_unstable();
            for &j in &cols {
                indices.push(j);
                data.push(acc[j]);
            }
            indptr[i + 1] = indices.len();
        }
        Csr { nrows: self.nrows, ncols: b.ncols, indptr, indices, data }
    }

    /// `alpha A + beta B` (patterns merged).
    pub fn add(&self, alpha: f64, b: &Csr, beta: f64) -> Csr {
        assert_eq!((self.nrows, self.ncols), (b.nrows, b.ncols));
        let mut t = Vec::with_capacity(self.nnz() + b.nnz());
        for (m, s) in [(self, alpha), (b, beta)] {
            for i in 0..m.nrows {
                let (c, v) = m.row(i);
                for (j, a) in c.iter().zip(v) {
                    t.push((i, *j, s * a));
                }
            }
        }
        Csr::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn scale(&self, s: f64) -> Csr {
        let mut m = self.clone();
        m.data.iter_mut().for_each(|v| *v *= s);
        m
    }

    /// Embeds `self` into a larger zero matrix at offset `(r0, c0)`.
    pub fn triplets_at(&self, r0: usize, c0: usize, s: f64, out: &mut Vec<(usize, usize, f64)>) {
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (j, a) in c.iter().zip(v) {
                out.push((r0 + i, c0 + *j, s * a));
            }
        }
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (j, a) in c.iter().zip(v) {
                m = m.max((a - self.get(*j, i)).abs());
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Quadratic form `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let y = self.mul_vec(x);
        dot(x, &y)
    }

    /// Symmetric permutation `P A Pᵀ` where new index `i` is old `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Csr {
        let mut inv = vec![0; order.len()];
        for (i, &o) in order.iter().enumerate() {
            inv[o] = i;
        }
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (j, a) in c.iter().zip(v) {
                t.push((inv[i], inv[*j], *a));
            }
        }
        Csr::from_triplets(self.nrows, self.ncols, t)
    }

    /// Upper triangle of a symmetric matrix, as CSC column data.
    fn upper_as_csc(&self) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        // entries j <= i of row i are column i of the upper triangle
        let mut ptr = vec![0usize; self.nrows + 1];
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (j, a) in c.iter().zip(v) {
                if *j <= i {
                    idx.push(*j);
                    val.push(*a);
                }
            }
            ptr[i + 1] = idx.len();
        }
        (ptr, idx, val)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Veltkamp split into 26-bit halves.
#[inline(always)]
fn split(a: f64) -> (f64, f64) {
    let c = 134217729.0 * a;
    let hi = c - (c - a);
    (hi, a - hi)
}

/// Dekker's error-free product; avoids `mul_add`, which is a slow libm
/// call on targets without hardware FMA enabled.
#[inline(always)]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, al * bl - (((p - ah * bh) - al * bh) - ah * bl))
}

/// `r = b - A x` with compensated accumulation (Ogita-Rump-Oishi Dot2).
pub fn residual(a: &Csr, x: &[f64], b: &[f64], r: &mut [f64]) {
    for (i, ri) in r.iter_mut().enumerate() {
        let (c, v) = a.row(i);
        let mut s = b[i];
        let mut comp = 0.0;
        for (j, aij) in c.iter().zip(v) {
            let (p, pe) = two_prod(-aij, x[*j]);
            let (s2, e) = two_sum(s, p);
            s = s2;
            comp += e + pe;
        }
        *ri = s + comp;
    }
}

/// Plain `r = b - A x` plus a rigorous bound on the 2-norm of its rounding
/// error; returns `(‖r‖₂, bound)`.
pub fn residual_with_bound(a: &Csr, x: &[f64], b: &[f64], r: &mut [f64]) -> (f64, f64) {
    let u = f64::EPSILON / 2.0;
    let (mut rr, mut ee) = (0.0, 0.0);
    for (i, ri) in r.iter_mut().enumerate() {
        let (c, v) = a.row(i);
        let mut s = b[i];
        let mut m = b[i].abs();
        for (j, aij) in c.iter().zip(v) {
            let p = aij * x[*j];
            s -= p;
            m += p.abs();
        }
        let nu = (c.len() + 1) as f64 * u;
        let g = nu / (1.0 - nu) * m;
        *ri = s;
        rr += s * s;
        ee += g * g;
    }
    // the accumulations above carry their own relative error, far below 1%
    (rr.sqrt(), 1.01 * ee.sqrt())
}

/// Which factorization kernel to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    /// Cholesky `LLᵀ`; fails on matrices that are not positive definite.
    Llt,
    /// Pivot-free `LDLᵀ`; the caller supplies an elimination order with
    /// nonsingular leading blocks.
    Ldlt,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefineSettings {
    pub rtol: f64,
    pub max_refinements: usize,
    /// Skip refinement entirely (used for the regularized-solve scenario).
    pub enabled: bool,
}

impl Default for RefineSettings {
    fn default() -> Self {
        RefineSettings { rtol: 1e-12, max_refinements: 10, enabled: true }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub refinements: usize,
    pub rel_residual: f64,
}

/// A factorization of a symmetric matrix plus the matrix itself (for true residuals).
pub struct FactorizedOperator {
    matrix: Csr,
    symbolic: SymbolicCholesky<usize>,
    values: Vec<f64>,
    kind: Kind,
    pub settings: RefineSettings,
    solve_mem: std::cell::RefCell<MemBuffer>,
}

impl std::fmt::Debug for FactorizedOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FactorizedOperator")
            .field("n", &self.matrix.nrows)
            .field("kind", &self.kind)
            .field("factor_nnz", &self.values.len())
            .finish()
    }
}

/// Elimination order for a symmetric matrix.
#[derive(Clone, Debug)]
pub enum Ordering {
    Amd,
    Natural,
    /// `order[i]` = original index eliminated at position `i`.
    Custom(Vec<usize>),
}

impl FactorizedOperator {
    /// Factorizes `matrix`. If `regularization` is given, the factor is
    /// computed for `matrix + regularization` while residuals keep using
    /// `matrix`.
    pub fn new(
        matrix: Csr,
        regularization: Option<&Csr>,
        kind: Kind,
        ordering: Ordering,
        settings: RefineSettings,
    ) -> Result<Self, Error> {
        let n = matrix.nrows;
        if matrix.ncols != n {
            return Err(Error::Solver("matrix is not square".into()));
        }
        let target = match regularization {
            Some(r) => matrix.add(1.0, r, 1.0),
            None => matrix.clone(),
        };
        let (ptr, idx, val) = target.upper_as_csc();
        let sym = SymbolicSparseColMatRef::new_checked(n, n, &ptr, None, &idx);
        let a = SparseColMatRef::new(sym, &val);
        let (fwd, inv): (Vec<usize>, Vec<usize>);
        let ord = match &ordering {
            Ordering::Amd => SymmetricOrdering::Amd,
            Ordering::Natural => SymmetricOrdering::Identity,
            Ordering::Custom(order) => {
                if order.len() != n {
                    return Err(Error::Solver("ordering length mismatch".into()));
                }
                fwd = order.clone();
                let mut iv = vec![usize::MAX; n];
                for (i, &o) in fwd.iter().enumerate() {
                    if o >= n || iv[o] != usize::MAX {
                        return Err(Error::Solver("ordering is not a permutation".into()));
                    }
                    iv[o] = i;
                }
                inv = iv;
                SymmetricOrdering::Custom(faer::perm::PermRef::new_checked(&fwd, &inv, n))
            }
        };
        let symbolic = factorize_symbolic_cholesky(sym, Side::Upper, ord, CholeskySymbolicParams::default())
            .map_err(|e| Error::Solver(format!("symbolic factorization failed: {e:?}")))?;
        let mut values = vec![0.0f64; symbolic.len_val()];
        let par = Par::Seq;
        match kind {
            Kind::Llt => {
                let req = symbolic.factorize_numeric_llt_scratch::<f64>(par, Spec::<LltParams, f64>::default());
                let mut mem = MemBuffer::new(req);
                symbolic
                    .factorize_numeric_llt(
                        &mut values,
                        a,
                        Side::Upper,
                        LltRegularization::default(),
                        par,
                        MemStack::new(&mut mem),
                        Spec::<LltParams, f64>::default(),
                    )
                    .map_err(|e| Error::NotPositiveDefinite(format!("{e}")))?;
            }
            Kind::Ldlt => {
                let req = symbolic.factorize_numeric_ldlt_scratch::<f64>(par, Spec::<LdltParams, f64>::default());
                let mut mem = MemBuffer::new(req);
                symbolic
                    .factorize_numeric_ldlt(
                        &mut values,
                        a,
                        Side::Upper,
                        LdltRegularization::default(),
                        par,
                        MemStack::new(&mut mem),
                        Spec::<LdltParams, f64>::default(),
                    )
                    .map_err(|e| Error::Solver(format!("LDLT breakdown: {e}")))?;
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver("factorization produced non-finite values".into()));
        }
        let solve_mem = MemBuffer::new(symbolic.solve_in_place_scratch::<f64>(1, par));
        Ok(FactorizedOperator {
            matrix,
            symbolic,
            values,
            kind,
            settings,
            solve_mem: std::cell::RefCell::new(solve_mem),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows
    }

    pub fn matrix(&self) -> &Csr {
        &self.matrix
    }

    pub fn factor_nnz(&self) -> usize {
        self.values.len()
    }

    /// One application of the factorization, without refinement.
    pub fn solve_once(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        let mut mem = self.solve_mem.borrow_mut();
        let stack = MemStack::new(&mut mem);
        let mat = MatMut::from_column_major_slice_mut(rhs, n, 1);
        match self.kind {
            Kind::Llt => LltRef::<usize, f64>::new(&self.symbolic, &self.values)
                .solve_in_place_with_conj(Conj::No, mat, Par::Seq, stack),
            Kind::Ldlt => LdltRef::<usize, f64>::new(&self.symbolic, &self.values)
                .solve_in_place_with_conj(Conj::No, mat, Par::Seq, stack),
        }
    }

    /// Solves `A x = b` and refines until `‖b - A x‖₂ ≤ rtol ‖b‖₂`.
    pub fn solve_refined(&self, b: &[f64]) -> Result<(Vec<f64>, SolveStats), Error> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let bn = norm2(b);
        if bn == 0.0 {
            return Ok((vec![0.0; n], SolveStats::default()));
        }
        let mut x = b.to_vec();
        self.solve_once(&mut x);
        let mut r = vec![0.0; n];
        let (plain, bound) = residual_with_bound(&self.matrix, &x, b, &mut r);
        if !plain.is_finite() {
            return Err(Error::Solver("non-finite solution".into()));
        }
        let s = self.settings;
        // the cheap residual already certifies the tolerance in the common case
        if !s.enabled || plain + bound <= s.rtol * bn {
            return Ok((x, SolveStats { refinements: 0, rel_residual: plain / bn }));
        }
        residual(&self.matrix, &x, b, &mut r);
        let mut rel = norm2(&r) / bn;
        let mut it = 0;
        while rel > s.rtol {
            if it == s.max_refinements {
                return Err(Error::Solver(format!(
                    "iterative refinement did not reach rtol {:e} within {} steps (residual {:e})",
                    s.rtol, s.max_refinements, rel
                )));
            }
            let mut d = r.clone();
            self.solve_once(&mut d);
            for (xi, di) in x.iter_mut().zip(&d) {
                *xi += di;
            }
            residual(&self.matrix, &x, b, &mut r);
            let new_rel = norm2(&r) / bn;
            it += 1;
            if !(new_rel < rel) {
                return Err(Error::Solver(format!(
                    "iterative refinement stagnated at relative residual {new_rel:e} (target {:e})",
                    s.rtol
                )));
            }
            rel = new_rel;
        }
        Ok((x, SolveStats { refinements: it, rel_residual: rel }))
    }
}

/// Fill-reducing elimination order for a saddle-point matrix `[K Bᵀ; B 0]`.
///
/// Starts from AMD on the full pattern and then moves each constrained
/// unknown (a pressure mode) to just after the last of its prerequisites
/// (the velocity unknowns whose presence makes its row independent), never
/// earlier than its AMD position. With pivot-free `LDLᵀ` every leading block
/// is then nonsingular whenever the prerequisite sets are chosen so that the
/// constraint rows restricted to any prefix have full row rank.
pub fn saddle_ordering(pattern: &Csr, constraints: &[(usize, Vec<usize>)]) -> Result<Vec<usize>, Error> {
    let base = amd_order(pattern)?;
    let n = base.len();
    let mut pos = vec![0usize; n];
    for (p, &v) in base.iter().enumerate() {
        pos[v] = p;
    }
    // (slot, tier, original position): tier 1 sorts after the unknown in slot
    let mut key: Vec<(usize, u8, usize)> = (0..n).map(|v| (pos[v], 0, pos[v])).collect();
    for (v, pre) in constraints {
        let last = pre.iter().map(|&u| pos[u]).max().unwrap_or(0);
        key[*v] = if last > pos[*v] { (last, 1, pos[*v]) } else { (pos[*v], 0, pos[*v]) };
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| key[v]);
    Ok(order)
}

/// Approximate minimum degree order of a symmetric sparsity pattern.
pub fn amd_order(pattern: &Csr) -> Result<Vec<usize>, Error> {
    let n = pattern.nrows;
    if n == 0 {
        return Ok(Vec::new());
    }
    let (ptr, idx, _) = pattern.upper_as_csc();
    let sym = SymbolicSparseColMatRef::new_checked(n, n, &ptr, None, &idx);
    let mut fwd = vec![0usize; n];
    let mut inv = vec![0usize; n];
    let req = faer::sparse::linalg::amd::order_scratch::<usize>(n, idx.len());
    let mut mem = MemBuffer::new(req);
    faer::sparse::linalg::amd::order(&mut fwd, &mut inv, sym, Default::default(), MemStack::new(&mut mem))
        .map_err(|e| Error::Solver(format!("AMD failed: {e:?}")))?;
    Ok(fwd)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> Csr {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        Csr::from_triplets(n, n, t)
    }

    #[test]
    fn identity_solve() {
        let f = FactorizedOperator::new(Csr::identity(5), None, Kind::Llt, Ordering::Amd, Default::default()).unwrap();
        let b = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let (x, st) = f.solve_refined(&b).unwrap();
        assert_eq!(x, b);
        assert_eq!(st.refinements, 0);
        let (z, st) = f.solve_refined(&[0.0; 5]).unwrap();
        assert!(z.iter().all(|v| *v == 0.0) && st.refinements == 0);
    }

    #[test]
    fn spd_and_indefinite() {
        let a = laplace_1d(50);
        let f = FactorizedOperator::new(a.clone(), None, Kind::Llt, Ordering::Amd, Default::default()).unwrap();
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let (x, st) = f.solve_refined(&b).unwrap();
        let mut r = vec![0.0; 50];
        residual(&a, &x, &b, &mut r);
        assert!(norm2(&r) / norm2(&b) <= 1e-12 && st.rel_residual <= 1e-12);
        // [I 1; 1 0]-type saddle: LLT must refuse, LDLT with a good order works
        let s = Csr::from_triplets(3, 3, vec![(0, 0, 1.0), (1, 1, 1.0), (0, 2, 1.0), (2, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0)]);
        assert!(matches!(
            FactorizedOperator::new(s.clone(), None, Kind::Llt, Ordering::Natural, Default::default()),
            Err(Error::NotPositiveDefinite(_))
        ));
        let f = FactorizedOperator::new(s.clone(), None, Kind::Ldlt, Ordering::Natural, Default::default()).unwrap();
        let (x, _) = f.solve_refined(&[1.0, 2.0, 3.0]).unwrap();
        let y = s.mul_vec(&x);
        for (a, b) in y.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn plain_residual_bound_covers_rounding() {
        let a = laplace_1d(40).scale(1e8);
        let x: Vec<f64> = (0..40).map(|i| 1.0 + 1e-3 * (i as f64 * 0.7).cos()).collect();
        let b = a.mul_vec(&x);
        let xp: Vec<f64> = x.iter().map(|v| v * (1.0 + 1e-15)).collect();
        let (mut r1, mut r2) = (vec![0.0; 40], vec![0.0; 40]);
        let (plain, bound) = residual_with_bound(&a, &xp, &b, &mut r1);
        residual(&a, &xp, &b, &mut r2);
        let d: f64 = r1.iter().zip(&r2).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        assert!(d <= bound && bound > 0.0);
        assert!((plain - norm2(&r1)).abs() <= 1e-12 * plain.max(1e-300));
    }

    #[test]
    fn matmul_transpose() {
        let a = Csr::from_triplets(2, 3, vec![(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0)]);
        let ata = a.transpose().matmul(&a);
        assert_eq!(ata.get(2, 2), 4.0);
        assert_eq!(ata.get(0, 2), 2.0);
        assert_eq!(ata.get(1, 1), 9.0);
        assert_eq!(ata.asymmetry(), 0.0);
    }

    #[test]
    fn ordering_delays_constrained_unknowns() {
        // arrow pattern: unknown 0 couples to all others
        let mut t: Vec<_> = (0..5).map(|i| (i, i, 1.0)).collect();
        for i in 1..5 {
            t.push((0, i, 1.0));
            t.push((i, 0, 1.0));
        }
        let p = Csr::from_triplets(5, 5, t);
        let order = saddle_ordering(&p, &[(1, vec![0, 2, 3, 4])]).unwrap();
        let at = |v: usize| order.iter().position(|&x| x == v).unwrap();
        for u in [0, 2, 3, 4] {
            assert!(at(1) > at(u));
        }
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2, 3, 4]);
    }
}
