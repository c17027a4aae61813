//! Dense complex linear algebra: Jacobi eigensolver, small SVD, Lanczos.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C>,
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C;
    fn index(&self, (r, c): (usize, usize)) -> &C {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C {
        &mut self.data[r * self.cols + c]
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<C>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.concat(),
        })
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<C>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, |x| x.len());
        Self::from_fn(r, c, |i, j| cols[j][i])
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = C::new(*v, 0.0);
        }
        m
    }

    /// `|u><v|`.
    pub fn outer(u: &[C], v: &[C]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        self.rows
    }

    pub fn data(&self) -> &[C] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[C] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<C>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, o: &CMatrix) -> Self {
        assert_eq!(self.cols, o.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * o.cols..(i + 1) * o.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                for (dst, b) in orow.iter_mut().zip(o.row(k)) {
                    *dst += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C]) -> Vec<C> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, o: &CMatrix) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &CMatrix) -> Self {
        self.add(&o.scale(C::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// Kronecker product with `self` on the leading factor.
    pub fn kron(&self, o: &CMatrix) -> Self {
        Self::from_fn(self.rows * o.rows, self.cols * o.cols, |i, j| {
            self[(i / o.rows, j / o.cols)] * o[(i % o.rows, j % o.cols)]
        })
    }

    pub fn trace(&self) -> C {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest `|a_ij - conj(a_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Largest entrywise distance to another matrix.
    pub fn max_abs_diff(&self, o: &CMatrix) -> f64 {
        self.data
            .iter()
            .zip(&o.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |U†U − I|` entrywise.
    pub fn unitarity_defect(&self) -> f64 {
        self.adjoint()
            .matmul(self)
            .max_abs_diff(&CMatrix::identity(self.cols))
    }
}

pub fn dot(u: &[C], v: &[C]) -> C {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(u: &[C]) -> f64 {
    u.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Unit vector along `u`, or `None` when `u` is numerically zero.
pub fn normalize(u: &[C]) -> Option<Vec<C>> {
    let n = norm(u);
    if n < 1e-150 {
        return None;
    }
    Some(u.iter().map(|a| a / n).collect())
}

/// Orthonormal basis of the span of `vectors` (modified Gram-Schmidt, two passes).
pub fn orthonormal_basis(vectors: &[Vec<C>], drop_tol: f64) -> Vec<Vec<C>> {
    let mut basis: Vec<Vec<C>> = Vec::new();
    for v in vectors {
        let scale = norm(v);
        if scale == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        if norm(&w) > drop_tol * scale {
            basis.push(normalize(&w).expect("checked nonzero"));
        }
    }
    basis
}

/// Completes an orthonormal set to a basis of `C^dim`.
fn complete_basis(mut basis: Vec<Vec<C>>, dim: usize) -> Vec<Vec<C>> {
    for e in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut w = vec![ZERO; dim];
        w[e] = ONE;
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        if norm(&w) > 1e-6 {
            basis.push(normalize(&w).expect("checked nonzero"));
        }
    }
    basis
}

/// Eigenvalues in descending order with eigenvectors as matrix columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigen {
    pub fn vector(&self, j: usize) -> Vec<C> {
        self.vectors.column(j)
    }
}

pub const JACOBI_MAX_SWEEPS: usize = 64;
pub const JACOBI_REL_TOL: f64 = 1e-12;

/// Cyclic complex Jacobi diagonalization of a Hermitian matrix.
pub fn eig_hermitian(h: &CMatrix) -> Result<Eigen> {
    if !h.is_square() {
        return Err(Error::Dimension(format!("{}x{} is not square", h.rows, h.cols)));
    }
    let n = h.rows;
    let fro = h.frobenius_norm();
    let defect = h.hermitian_defect();
    if defect > 1e-12 * fro.max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    let mut a = CMatrix::from_fn(n, n, |i, j| (h[(i, j)] + h[(j, i)].conj()) * 0.5);
    let mut v = CMatrix::identity(n);
    let target = JACOBI_REL_TOL * fro;
    let off = |a: &CMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };
    let mut converged = fro == 0.0 || off(&a) <= target;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        converged = off(&a) <= target;
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps,
            off: off(&a),
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(Eigen { values, vectors })
}

fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r < 1e-300 {
        return;
    }
    let n = a.rows;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let phase = apq / r;
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // W = diag(1, conj(phase)) · [[c, s], [-s, c]]
    let w_pp = C::new(c, 0.0);
    let w_pq = C::new(s, 0.0);
    let w_qp = phase.conj() * (-s);
    let w_qq = phase.conj() * c;
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * w_pp + akq * w_qp;
        a[(k, q)] = akp * w_pq + akq * w_qq;
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * w_pp + vkq * w_qp;
        v[(k, q)] = vkp * w_pq + vkq * w_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = w_pp.conj() * apk + w_qp.conj() * aqk;
        a[(q, k)] = w_pq.conj() * apk + w_qq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C::new(a[(q, q)].re, 0.0);
}

/// `m = A · diag(σ) · B†` with σ descending; `A` and `B` unitary.
pub struct Svd {
    pub a: CMatrix,
    pub sigma: Vec<f64>,
    pub b: CMatrix,
}

/// SVD of a square matrix through the eigendecomposition of `m†m`.
pub fn svd_square(m: &CMatrix) -> Result<Svd> {
    let n = m.rows;
    if !m.is_square() {
        return Err(Error::Dimension("svd_square needs a square matrix".into()));
    }
    let eig = eig_hermitian(&m.adjoint().matmul(m))?;
    let scale = eig.values.first().copied().unwrap_or(0.0).max(0.0).sqrt();
    let mut sigma = Vec::with_capacity(n);
    let mut left = Vec::new();
    for j in 0..n {
        let s = eig.values[j].max(0.0).sqrt();
        sigma.push(s);
        if s > 1e-13 * scale.max(1e-300) {
            left.push(m.matvec(&eig.vector(j)));
        }
    }
    // Gram-Schmidt in descending σ order keeps the dominant directions exact
    let mut a_cols = orthonormal_basis(&left, 1e-9);
    let kept = a_cols.len();
    a_cols = complete_basis(a_cols, n);
    for s in sigma.iter_mut().skip(kept) {
        *s = 0.0;
    }
    Ok(Svd {
        a: CMatrix::from_columns(&a_cols),
        sigma,
        b: eig.vectors,
    })
}

/// Unitary `U` maximizing `Re tr(U m)`; the maximum is the trace norm of `m`.
pub fn max_re_trace_unitary(m: &CMatrix) -> Result<CMatrix> {
    let svd = svd_square(m)?;
    Ok(svd.b.matmul(&svd.a.adjoint()))
}

/// Positive square root of a PSD matrix; small negative eigenvalues are clamped.
pub fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let eig = eig_hermitian(m)?;
    let n = m.rows;
    let roots: Vec<f64> = eig.values.iter().map(|v| v.max(0.0).sqrt()).collect();
    let mut out = CMatrix::zeros(n, n);
    for (j, r) in roots.iter().enumerate() {
        if *r == 0.0 {
            continue;
        }
        let col = eig.vector(j);
        for i in 0..n {
            let a = col[i] * r;
            for k in 0..n {
                out[(i, k)] += a * col[k].conj();
            }
        }
    }
    Ok(out)
}

/// Top eigenpair of a Hermitian operator given by its action.
///
/// Lanczos with full reorthogonalization started from `start`.
pub fn lanczos_top(
    dim: usize,
    matvec: impl Fn(&[C]) -> Vec<C>,
    start: &[C],
    max_iter: usize,
    tol: f64,
) -> Result<(f64, Vec<C>)> {
    let q0 = normalize(start).ok_or_else(|| Error::Dimension("zero Lanczos start".into()))?;
    let mut basis: Vec<Vec<C>> = vec![q0];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let limit = max_iter.min(dim).max(1);
    let best = loop {
        let j = basis.len() - 1;
        let mut w = matvec(&basis[j]);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let bnext = norm(&w);
        let k = alpha.len();
        // the dense Ritz solve costs O(k³), so test convergence at doubling sizes
        let last = bnext < 1e-14 || k >= limit;
        if !last && !(k >= 4 && k.is_power_of_two()) {
            beta.push(bnext);
            basis.push(w.iter().map(|x| x / bnext).collect());
            continue;
        }
        let t = CMatrix::from_fn(k, k, |r, c| {
            if r == c {
                C::new(alpha[r], 0.0)
            } else if r + 1 == c {
                C::new(beta[r], 0.0)
            } else if c + 1 == r {
                C::new(beta[c], 0.0)
            } else {
                ZERO
            }
        });
        let te = eig_hermitian(&t)?;
        let y = te.vector(0);
        if bnext * y[k - 1].norm() <= tol || last {
            let mut ritz = vec![ZERO; dim];
            for (coef, b) in y.iter().zip(&basis) {
                for (ri, bi) in ritz.iter_mut().zip(b) {
                    *ri += coef * bi;
                }
            }
            break (te.values[0], ritz);
        }
        beta.push(bnext);
        basis.push(w.iter().map(|x| x / bnext).collect());
    };
    let v = normalize(&best.1).expect("Ritz vectors have unit norm");
    Ok((best.0, v))
}

/// Serializable `[re, im]` rows for matrix dumps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixDump(pub Vec<Vec<[f64; 2]>>);

impl From<&CMatrix> for MatrixDump {
    fn from(m: &CMatrix) -> Self {
        MatrixDump(
            (0..m.rows)
                .map(|r| m.row(r).iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        )
    }
}

impl TryFrom<&MatrixDump> for CMatrix {
    type Error = Error;
    fn try_from(d: &MatrixDump) -> Result<Self> {
        let rows: Vec<Vec<C>> = d
            .0
            .iter()
            .map(|r| r.iter().map(|[a, b]| C::new(*a, *b)).collect())
            .collect();
        CMatrix::from_rows(&rows)
    }
}
