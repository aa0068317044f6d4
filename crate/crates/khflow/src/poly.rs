//! One-dimensional building blocks on the reference interval [-1, 1]:
//! Gauss-Legendre rules, orthonormal Legendre polynomials and the
//! integrated-Legendre (hierarchical H1) family.

use std::f64::consts::PI;

/// Gauss-Legendre rule with `n` points, exact for degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Number of Gauss points needed to integrate polynomials of degree `order` exactly.
pub fn points_for_order(order: usize) -> usize {
    order / 2 + 1
}

/// Classical (unnormalized) Legendre P_n and its derivative at `x`.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p1 = x;
    let mut d0 = 0.0;
    let mut d1 = 1.0;
    for j in 1..n {
        let jf = j as f64;
        let p2 = ((2.0 * jf + 1.0) * x * p1 - jf * p0) / (jf + 1.0);
        let d2 = d0 + (2.0 * jf + 1.0) * p1;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
    }
    (p1, d1)
}

/// Orthonormal Legendre values `p̂_0..p̂_{m-1}` and derivatives at `x`.
pub fn legendre_all(m: usize, x: f64, val: &mut [f64], der: &mut [f64]) {
    let mut p = [0.0f64; 3];
    let mut d = [0.0f64; 3];
    for j in 0..m {
        let (pj, dj) = if j == 0 {
            (1.0, 0.0)
        } else if j == 1 {
            (x, 1.0)
        } else {
            let jf = (j - 1) as f64;
            let pj = ((2.0 * jf + 1.0) * x * p[1] - jf * p[0]) / (jf + 1.0);
            (pj, d[0] + (2.0 * jf + 1.0) * p[1])
        };
        p[0] = p[1];
        p[1] = pj;
        d[0] = d[1];
        d[1] = dj;
        let s = ((2 * j + 1) as f64 / 2.0).sqrt();
        val[j] = s * pj;
        der[j] = s * dj;
    }
}

/// Hierarchical H1 family `N̂_0..N̂_{m-1}` and derivatives at `x`.
///
/// `N̂_0 = (1-x)/2`, `N̂_1 = (1+x)/2`, and for `i >= 2` the bubble
/// `N̂_i` is the antiderivative of `p̂_{i-1}` vanishing at both ends.
pub fn hierarchical_all(m: usize, x: f64, val: &mut [f64], der: &mut [f64]) {
    let mut pv = vec![0.0; m + 1];
    let mut pd = vec![0.0; m + 1];
    legendre_all(m + 1, x, &mut pv, &mut pd);
    for i in 0..m {
        match i {
            0 => {
                val[0] = 0.5 * (1.0 - x);
                der[0] = -0.5;
            }
            1 => {
                val[1] = 0.5 * (1.0 + x);
                der[1] = 0.5;
            }
            _ => {
                let a = (((2 * i - 1) * (2 * i + 1)) as f64).sqrt();
                let b = (((2 * i - 1) * (2 * i - 3)) as f64).sqrt();
                val[i] = pv[i] / a - pv[i - 2] / b;
                der[i] = pv[i - 1];
            }
        }
    }
}

/// Coefficients of `N̂_a` in the orthonormal Legendre basis: row `a`, length `m`.
pub fn hierarchical_to_legendre(m: usize) -> Vec<Vec<f64>> {
    let mut t = vec![vec![0.0; m]; m];
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    let r6 = 1.0 / 6f64.sqrt();
    t[0][0] = r2;
    if m > 1 {
        t[0][1] = -r6;
        t[1][0] = r2;
        t[1][1] = r6;
    }
    for (i, row) in t.iter_mut().enumerate().skip(2) {
        row[i] = 1.0 / (((2 * i - 1) * (2 * i + 1)) as f64).sqrt();
        row[i - 2] = -1.0 / (((2 * i - 1) * (2 * i - 3)) as f64).sqrt();
    }
    t
}

/// Coefficients of `N̂_a'` in the orthonormal Legendre basis: `m` rows, `m - 1` columns.
pub fn hierarchical_derivative_to_legendre(m: usize) -> Vec<Vec<f64>> {
    let mut g = vec![vec![0.0; m - 1]; m];
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    g[0][0] = -r2;
    g[1][0] = r2;
    for (i, row) in g.iter_mut().enumerate().skip(2) {
        row[i - 1] = 1.0;
    }
    g
}

/// Differentiation matrix of orthonormal Legendre: `p̂_m' = Σ_l d[m][l] p̂_l`.
pub fn legendre_derivative_matrix(m: usize) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; m]; m];
    for (i, row) in d.iter_mut().enumerate() {
        for (l, v) in row.iter_mut().enumerate().take(i) {
            if (i - l) % 2 == 1 {
                *v = (((2 * i + 1) * (2 * l + 1)) as f64).sqrt();
            }
        }
    }
    d
}

/// Orthonormal Legendre values at the interval ends: `(p̂_j(-1), p̂_j(+1))`.
pub fn legendre_endpoints(m: usize) -> (Vec<f64>, Vec<f64>) {
    let plus: Vec<f64> = (0..m).map(|j| ((2 * j + 1) as f64 / 2.0).sqrt()).collect();
    let minus = plus
        .iter()
        .enumerate()
        .map(|(j, v)| if j % 2 == 0 { *v } else { -*v })
        .collect();
    (minus, plus)
}

/// Orthonormal Legendre derivatives at the interval ends.
pub fn legendre_endpoint_derivatives(m: usize) -> (Vec<f64>, Vec<f64>) {
    // P_j'(1) = j(j+1)/2, P_j'(-1) = (-1)^{j+1} j(j+1)/2
    let plus: Vec<f64> = (0..m)
        .map(|j| ((2 * j + 1) as f64 / 2.0).sqrt() * (j * (j + 1)) as f64 / 2.0)
        .collect();
    let minus = plus
        .iter()
        .enumerate()
        .map(|(j, v)| if j % 2 == 1 { *v } else { -*v })
        .collect();
    (minus, plus)
}

/// Tabulated 1D bases at the points of a Gauss rule.
#[derive(Clone, Debug)]
pub struct Tab1d {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    /// `nv[a][q]`, `nd[a][q]`: hierarchical values/derivatives, `a < k + 2`.
    pub nv: Vec<Vec<f64>>,
    pub nd: Vec<Vec<f64>>,
    /// `pv[b][q]`, `pd[b][q]`: Legendre values/derivatives, `b < k + 2`.
    pub pv: Vec<Vec<f64>>,
    pub pd: Vec<Vec<f64>>,
}

impl Tab1d {
    pub fn new(m: usize, npts: usize) -> Self {
        let (x, w) = gauss_legendre(npts);
        Self::at_points(m, x, w)
    }

    pub fn at_points(m: usize, x: Vec<f64>, w: Vec<f64>) -> Self {
        let q = x.len();
        let mut nv = vec![vec![0.0; q]; m];
        let mut nd = vec![vec![0.0; q]; m];
        let mut pv = vec![vec![0.0; q]; m];
        let mut pd = vec![vec![0.0; q]; m];
        let mut a = vec![0.0; m];
        let mut b = vec![0.0; m];
        for (iq, &xq) in x.iter().enumerate() {
            hierarchical_all(m, xq, &mut a, &mut b);
            for i in 0..m {
                nv[i][iq] = a[i];
                nd[i][iq] = b[i];
            }
            legendre_all(m, xq, &mut a, &mut b);
            for i in 0..m {
                pv[i][iq] = a[i];
                pd[i][iq] = b[i];
            }
        }
        Tab1d { x, w, nv, nd, pv, pd }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}
