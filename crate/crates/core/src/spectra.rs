//! Acceptance operators, spectral decompositions and density matrices.

use num_complex::Complex64;
use rand::Rng;

use crate::circuit::{apply_circuit, project, Amplitude, Circuit, Projector, StateVector};
use crate::error::{Error, Result};
use crate::exact::ExactScalar;
use crate::linalg::{eig_hermitian, CMatrix, Eigen, C};
use crate::rng::gaussian_complex;

/// Practical dimension cap for dense eigen work.
pub const EIGEN_DIM_CAP: usize = 256;
/// Tolerance for clamping acceptance spectra into `[0, 1]`.
pub const CLAMP_TOL: f64 = 1e-9;

/// Float Hermitian matrix with an optional exact mirror.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    matrix: CMatrix,
    exact: Option<Vec<Vec<ExactScalar>>>,
}

impl HermitianMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let d = matrix.hermitian_defect();
        if !matrix.is_square() || d > 1e-12 * matrix.frobenius_norm().max(1.0) {
            return Err(Error::NotHermitian(d));
        }
        Ok(Self {
            matrix,
            exact: None,
        })
    }

    pub fn from_exact(entries: Vec<Vec<ExactScalar>>) -> Result<Self> {
        let n = entries.len();
        for i in 0..n {
            for j in 0..n {
                if entries[i][j] != entries[j][i].conj() {
                    return Err(Error::NotHermitian(f64::NAN));
                }
            }
        }
        let matrix = CMatrix::from_fn(n, n, |i, j| entries[i][j].to_c64());
        Ok(Self {
            matrix,
            exact: Some(entries),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn exact(&self) -> Option<&Vec<Vec<ExactScalar>>> {
        self.exact.as_ref()
    }

    pub fn exact_diagonal(&self) -> Option<Vec<ExactScalar>> {
        self.exact
            .as_ref()
            .map(|e| (0..e.len()).map(|i| e[i][i].clone()).collect())
    }

    /// Exact trace when an exact mirror exists.
    pub fn exact_trace(&self) -> Option<ExactScalar> {
        self.exact_diagonal()
            .map(|d| d.iter().fold(ExactScalar::zero(), |acc, x| &acc + x))
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `v† H v`.
    pub fn expectation(&self, v: &[C]) -> f64 {
        crate::linalg::dot(v, &self.matrix.matvec(v)).re
    }

    /// `I − H`, exact when possible.
    pub fn complement(&self) -> HermitianMatrix {
        let n = self.dim();
        let matrix = CMatrix::identity(n).sub(&self.matrix);
        let exact = self.exact.as_ref().map(|e| {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let id = if i == j {
                                ExactScalar::one()
                            } else {
                                ExactScalar::zero()
                            };
                            &id - &e[i][j]
                        })
                        .collect()
                })
                .collect()
        });
        HermitianMatrix { matrix, exact }
    }
}

/// Descending eigenvalues with orthonormal eigenvectors as columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn eigenvector(&self, j: usize) -> Vec<C> {
        self.eigenvectors.column(j)
    }

    /// Weights `|<v_j|w>|²` of a vector in the eigenbasis.
    pub fn weights(&self, w: &[C]) -> Vec<f64> {
        (0..self.eigenvalues.len())
            .map(|j| crate::linalg::dot(&self.eigenvector(j), w).norm_sqr())
            .collect()
    }
}

impl From<Eigen> for SpectralDecomposition {
    fn from(e: Eigen) -> Self {
        Self {
            eigenvalues: e.values,
            eigenvectors: e.vectors,
        }
    }
}

pub fn eig(h: &HermitianMatrix) -> Result<SpectralDecomposition> {
    if h.dim() > EIGEN_DIM_CAP {
        return Err(Error::CapExceeded {
            what: "eigen dimension",
            requested: h.dim(),
            cap: EIGEN_DIM_CAP,
        });
    }
    Ok(eig_hermitian(&h.matrix)?.into())
}

/// Spectrum of an acceptance operator, clamped into `[0, 1]`.
pub fn acceptance_spectrum(q: &HermitianMatrix) -> Result<SpectralDecomposition> {
    let mut s = eig(q)?;
    for v in s.eigenvalues.iter_mut() {
        if *v < -CLAMP_TOL || *v > 1.0 + CLAMP_TOL {
            return Err(Error::SpectrumOutOfRange(*v));
        }
        *v = v.clamp(0.0, 1.0);
    }
    Ok(s)
}

/// Largest eigenvalue of an acceptance operator.
pub fn max_acceptance(q: &HermitianMatrix) -> Result<f64> {
    Ok(acceptance_spectrum(q)?.eigenvalues[0])
}

/// Columns `Λ_outcome A (|j>|0^k>)` for every message basis state `j`.
pub fn projected_columns<S: Amplitude>(
    verifier: &Circuit,
    m: usize,
    k: usize,
    proj: Projector,
    outcome: bool,
) -> Result<Vec<StateVector<S>>> {
    if verifier.width() != m + k {
        return Err(Error::WidthMismatch {
            expected: m + k,
            actual: verifier.width(),
        });
    }
    (0..1usize << m)
        .map(|j| {
            let input = StateVector::<S>::basis(m + k, j << k)?;
            project(&apply_circuit(&input, verifier)?, proj, outcome)
        })
        .collect()
}

/// Gram matrix `G[i][j] = <v_i|v_j>`.
pub fn gram<S: Amplitude>(cols: &[StateVector<S>]) -> Result<Vec<Vec<S>>> {
    let d = cols.len();
    let mut g = vec![vec![S::zero(); d]; d];
    for i in 0..d {
        for j in i..d {
            let v = cols[i].inner(&cols[j])?;
            g[j][i] = v.conj();
            g[i][j] = v;
        }
    }
    Ok(g)
}

/// Acceptance operator `Q = (I⊗<0^k|) A† Π₁ A (I⊗|0^k>)` for the output qubit 0.
pub fn acceptance_operator(
    verifier: &Circuit,
    m: usize,
    k: usize,
    exact: bool,
) -> Result<HermitianMatrix> {
    operator_for(verifier, m, k, Projector::FIRST_QUBIT_ONE, true, exact)
}

/// `(I⊗<0^k|) A† Λ A (I⊗|0^k>)` for an arbitrary projector outcome.
pub fn operator_for(
    verifier: &Circuit,
    m: usize,
    k: usize,
    proj: Projector,
    outcome: bool,
    exact: bool,
) -> Result<HermitianMatrix> {
    if exact {
        let cols = projected_columns::<ExactScalar>(verifier, m, k, proj, outcome)?;
        HermitianMatrix::from_exact(gram(&cols)?)
    } else {
        let cols = projected_columns::<Complex64>(verifier, m, k, proj, outcome)?;
        let g = gram(&cols)?;
        HermitianMatrix::new(CMatrix::from_rows(&g)?)
    }
}

/// Density matrix validated on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

pub const DENSITY_TOL: f64 = 1e-9;

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidDensity("not square".into()));
        }
        let defect = m.hermitian_defect();
        if defect > DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("not Hermitian ({defect:e})")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let e = eig_hermitian(&m)?;
        let min = *e.values.last().unwrap_or(&0.0);
        if min < -DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("eigenvalue {min}")));
        }
        Ok(Self { m })
    }

    pub fn pure(v: &[C]) -> Result<Self> {
        Self::new(CMatrix::outer(v, v))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            m: CMatrix::identity(dim).scale(C::new(1.0 / dim as f64, 0.0)),
        }
    }

    /// Ginibre-random state of the given rank.
    pub fn random(dim: usize, rank: usize, rng: &mut impl Rng) -> Self {
        let g = CMatrix::from_fn(dim, rank.max(1), |_, _| gaussian_complex(rng));
        let p = g.matmul(&g.adjoint());
        let tr = p.trace().re;
        Self {
            m: p.scale(C::new(1.0 / tr, 0.0)),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn tensor(&self, o: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            m: self.m.kron(&o.m),
        }
    }

    /// `tr(Λ ρ)`.
    pub fn expectation(&self, op: &CMatrix) -> f64 {
        op.matmul(&self.m).trace().re
    }
}

/// Partial trace keeping the listed factors of a `dims` tensor product.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize], dims: &[usize]) -> Result<DensityMatrix> {
    let total: usize = dims.iter().product();
    if total != rho.dim() {
        return Err(Error::Dimension(format!(
            "factor dims {dims:?} do not multiply to {}",
            rho.dim()
        )));
    }
    if keep.iter().any(|&f| f >= dims.len()) || keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Dimension(format!("keep list {keep:?} invalid")));
    }
    let m = partial_trace_matrix(rho.matrix(), keep, dims);
    Ok(DensityMatrix { m })
}

/// Unvalidated partial trace of any square operator.
pub fn partial_trace_matrix(m: &CMatrix, keep: &[usize], dims: &[usize]) -> CMatrix {
    let traced: Vec<usize> = (0..dims.len()).filter(|f| !keep.contains(f)).collect();
    let dk: usize = keep.iter().map(|&f| dims[f]).product();
    let dt: usize = traced.iter().map(|&f| dims[f]).product();
    // index of the full basis state from kept and traced multi-indices
    let compose = |ik: usize, it: usize| -> usize {
        let mut digits = vec![0usize; dims.len()];
        let mut r = ik;
        for &f in keep.iter().rev() {
            digits[f] = r % dims[f];
            r /= dims[f];
        }
        let mut r = it;
        for &f in traced.iter().rev() {
            digits[f] = r % dims[f];
            r /= dims[f];
        }
        digits.iter().zip(dims).fold(0, |acc, (d, n)| acc * n + d)
    };
    let mut out = CMatrix::zeros(dk, dk);
    for i in 0..dk {
        for j in 0..dk {
            let mut s = C::new(0.0, 0.0);
            for t in 0..dt {
                s += m[(compose(i, t), compose(j, t))];
            }
            out[(i, j)] = s;
        }
    }
    out
}

/// Reduced state on the leading factor of a vector in `C^{d_keep} ⊗ C^{d_rest}`.
pub fn reduce_vector(v: &[C], d_keep: usize) -> CMatrix {
    let d_rest = v.len() / d_keep;
    CMatrix::from_fn(d_keep, d_keep, |i, j| {
        (0..d_rest)
            .map(|t| v[i * d_rest + t] * v[j * d_rest + t].conj())
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;
    use crate::rng::seeded;

    #[test]
    fn identity_verifier_operator() {
        let c = parse_circuit("qubits 2").unwrap();
        for exact in [false, true] {
            let q = acceptance_operator(&c, 1, 1, exact).unwrap();
            let want = CMatrix::diag(&[0.0, 1.0]);
            assert!(q.matrix().max_abs_diff(&want) < 1e-15);
            let s = acceptance_spectrum(&q).unwrap();
            assert_eq!(s.eigenvalues, vec![1.0, 0.0]);
        }
        let q = acceptance_operator(&c, 1, 1, true).unwrap();
        assert_eq!(q.exact_trace().unwrap(), ExactScalar::one());
    }

    #[test]
    fn hadamard_verifier_matches_dense_product() {
        // dense oracle: Q = (I⊗<0|)(H⊗I)†(|1><1|⊗I)(H⊗I)(I⊗|0>)
        let c = parse_circuit("qubits 2\nH 0").unwrap();
        let q = acceptance_operator(&c, 1, 1, false).unwrap();
        let h = 1.0 / 2f64.sqrt();
        let hm = CMatrix::from_rows(&[
            vec![C::new(h, 0.0), C::new(h, 0.0)],
            vec![C::new(h, 0.0), C::new(-h, 0.0)],
        ])
        .unwrap();
        let a = hm.kron(&CMatrix::identity(2));
        let pi1 = CMatrix::diag(&[0.0, 1.0]).kron(&CMatrix::identity(2));
        let full = a.adjoint().matmul(&pi1).matmul(&a);
        let restricted = CMatrix::from_fn(2, 2, |i, j| full[(i << 1, j << 1)]);
        assert!(q.matrix().max_abs_diff(&restricted) < 1e-15);
        let s = acceptance_spectrum(&q).unwrap();
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-12 && s.eigenvalues[1].abs() < 1e-12);
    }

    #[test]
    fn complement_sums_to_identity_exactly() {
        let c = parse_circuit("qubits 3\nH 1\nT 1 0 2\nH 0\nS 2").unwrap();
        let q1 = acceptance_operator(&c, 1, 2, true).unwrap();
        let q0 = operator_for(&c, 1, 2, Projector::FIRST_QUBIT_ONE, false, true).unwrap();
        assert_eq!(q0.exact().unwrap(), q1.complement().exact().unwrap());
    }

    #[test]
    fn max_acceptance_examples() {
        let q = HermitianMatrix::new(CMatrix::diag(&[0.0, 1.0])).unwrap();
        assert_eq!(max_acceptance(&q).unwrap(), 1.0);
        let q = HermitianMatrix::new(CMatrix::diag(&[0.5, 0.5])).unwrap();
        assert_eq!(max_acceptance(&q).unwrap(), 0.5);
        let q = HermitianMatrix::new(CMatrix::diag(&[1.5, 0.5])).unwrap();
        assert!(matches!(max_acceptance(&q), Err(Error::SpectrumOutOfRange(_))));
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = seeded(1);
        let a = DensityMatrix::random(2, 2, &mut rng);
        let b = DensityMatrix::random(3, 1, &mut rng);
        let r = partial_trace(&a.tensor(&b), &[0], &[2, 3]).unwrap();
        assert!(r.matrix().max_abs_diff(a.matrix()) < 1e-12);
        let r = partial_trace(&a.tensor(&b), &[1], &[2, 3]).unwrap();
        assert!(r.matrix().max_abs_diff(b.matrix()) < 1e-12);

        let s = 1.0 / 2f64.sqrt();
        let bell = vec![C::new(s, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(s, 0.0)];
        let r = partial_trace(&DensityMatrix::pure(&bell).unwrap(), &[0], &[2, 2]).unwrap();
        assert!(r.matrix().max_abs_diff(&DensityMatrix::maximally_mixed(2).matrix().clone()) < 1e-15);

        assert!(partial_trace(&a, &[0], &[3]).is_err());
    }

    #[test]
    fn partial_trace_matches_index_contraction() {
        let mut rng = seeded(2);
        for _ in 0..20 {
            let v = crate::rng::random_unit_vector(4, &mut rng);
            let rho = DensityMatrix::pure(&v).unwrap();
            // naive 4-index contraction rho_A[i][j] = Σ_t v[i,t] conj(v[j,t])
            let mut naive = [[C::new(0.0, 0.0); 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    for t in 0..2 {
                        naive[i][j] += v[2 * i + t] * v[2 * j + t].conj();
                    }
                }
            }
            let r = partial_trace(&rho, &[0], &[2, 2]).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert!((r.matrix()[(i, j)] - naive[i][j]).norm() < 1e-12);
                }
            }
            assert!(reduce_vector(&v, 2).max_abs_diff(r.matrix()) < 1e-15);
        }
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new(CMatrix::diag(&[0.5, 0.6])).is_err());
        assert!(DensityMatrix::new(CMatrix::diag(&[1.5, -0.5])).is_err());
        assert!(DensityMatrix::new(CMatrix::diag(&[0.25, 0.75])).is_ok());
    }
}
