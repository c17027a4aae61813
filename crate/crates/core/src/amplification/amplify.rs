use num_complex::Complex64;
use rand::Rng;

use super::binomial::{binomial_tail, multilinear_tail};
use super::procedure_b::{sample_with, SampledRun};
use super::QmaInstance;
use crate::circuit::FloatState;
use crate::error::{Error, Result};
use crate::linalg::{dot, CMatrix};
use crate::rng::seeded;
use crate::spectra::{acceptance_spectrum, HermitianMatrix, EIGEN_DIM_CAP};

/// Procedure B wrapped as an instance with target error `2^{-r}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MwInstance {
    pub base: QmaInstance,
    pub r: u32,
    pub q: u64,
    /// Number of measurement events, `8 q² r`.
    pub n: usize,
    /// Smallest accepting agreement count.
    pub threshold: usize,
}

pub fn amplify_mw(inst: &QmaInstance, r: u32) -> Result<MwInstance> {
    inst.thresholds.validate()?;
    let q = inst.thresholds.gap_q();
    let n = (8 * q * q * r as u64) as usize;
    Ok(MwInstance {
        base: inst.clone(),
        r,
        q,
        n,
        threshold: inst.thresholds.count_threshold(n),
    })
}

impl MwInstance {
    /// Merlin's message length, unchanged by amplification.
    pub fn message_qubits(&self) -> usize {
        self.base.m
    }

    /// Acceptance of an eigenvector with eigenvalue `p`.
    pub fn eigen_acceptance(&self, p: f64) -> f64 {
        binomial_tail(&p, self.n, self.threshold)
    }

    /// Acceptance of any witness from its weights in the eigenbasis of `Q`.
    pub fn analytic_acceptance(&self, witness: &FloatState) -> Result<f64> {
        let spec = acceptance_spectrum(&self.base.acceptance_operator(false)?)?;
        let weights = spec.weights(witness.amplitudes());
        Ok(spec
            .eigenvalues
            .iter()
            .zip(weights)
            .map(|(p, w)| w * self.eigen_acceptance(*p))
            .sum())
    }

    /// Executes the amplified verifier once.
    pub fn run(&self, witness: &FloatState, seed: u64) -> Result<SampledRun> {
        let mut rng = seeded(seed);
        sample_with(&self.base, witness, self.n, &mut rng)
    }

    /// Fraction of accepting runs over `runs` seeded executions.
    pub fn estimate(&self, witness: &FloatState, runs: usize, rng: &mut impl Rng) -> Result<f64> {
        let mut acc = 0usize;
        for _ in 0..runs {
            if sample_with(&self.base, witness, self.n, rng)?.accepted {
                acc += 1;
            }
        }
        Ok(acc as f64 / runs as f64)
    }
}

/// `t` copies of the message, accepting on `⌈t(a+b)/2⌉` or more acceptances.
#[derive(Clone, Debug, PartialEq)]
pub struct KitaevInstance {
    pub base: QmaInstance,
    pub t: usize,
    pub threshold: usize,
}

pub fn amplify_kitaev(inst: &QmaInstance, t: usize) -> Result<KitaevInstance> {
    if t == 0 {
        return Err(Error::Instance("copy count must be at least 1".into()));
    }
    Ok(KitaevInstance {
        base: inst.clone(),
        t,
        threshold: inst.thresholds.count_threshold(t),
    })
}

impl KitaevInstance {
    pub fn message_qubits(&self) -> usize {
        self.t * self.base.m
    }

    /// Acceptance of a product witness `ψ₁ ⊗ … ⊗ ψ_t`.
    pub fn product_acceptance(&self, witnesses: &[FloatState]) -> Result<f64> {
        if witnesses.len() != self.t {
            return Err(Error::Dimension(format!(
                "{} witnesses for {} copies",
                witnesses.len(),
                self.t
            )));
        }
        let q = self.base.acceptance_operator(false)?;
        let ps: Vec<f64> = witnesses
            .iter()
            .map(|w| q.expectation(w.amplitudes()).clamp(0.0, 1.0))
            .collect();
        Ok(multilinear_tail(&ps, self.threshold))
    }

    /// Runs the `t` copies independently and applies the count rule.
    pub fn sample(&self, witnesses: &[FloatState], seed: u64) -> Result<bool> {
        let q = self.base.acceptance_operator(false)?;
        let mut rng = seeded(seed);
        let mut count = 0;
        for w in witnesses {
            if rng.random::<f64>() < q.expectation(w.amplitudes()) {
                count += 1;
            }
        }
        Ok(count >= self.threshold)
    }

    /// Acceptance operator on all `t·m` message qubits.
    pub fn acceptance_operator(&self) -> Result<HermitianMatrix> {
        let q1 = self.base.acceptance_operator(false)?;
        let q0 = q1.complement();
        let pairs = vec![(q0.matrix().clone(), q1.matrix().clone()); self.t];
        HermitianMatrix::new(threshold_tensor_sum(&pairs, self.threshold)?)
    }
}

/// `Σ_{z: Σz ≥ threshold} Q₁^{(z₁)} ⊗ … ⊗ Q_N^{(z_N)}` for pairs `(Q^{(0)}, Q^{(1)})`.
pub fn threshold_tensor_sum(pairs: &[(CMatrix, CMatrix)], threshold: usize) -> Result<CMatrix> {
    let dim: usize = pairs.iter().map(|(q, _)| q.rows()).product();
    if dim > EIGEN_DIM_CAP {
        return Err(Error::CapExceeded {
            what: "tensor-sum dimension",
            requested: dim,
            cap: EIGEN_DIM_CAP,
        });
    }
    // buckets[c] = sum of products with exactly c factors of Q^{(1)}
    let mut buckets = vec![CMatrix::identity(1)];
    for (q0, q1) in pairs {
        let d = buckets[0].rows() * q0.rows();
        let mut next = vec![CMatrix::zeros(d, d); buckets.len() + 1];
        for (c, b) in buckets.iter().enumerate() {
            next[c] = next[c].add(&b.kron(q0));
            next[c + 1] = next[c + 1].add(&b.kron(q1));
        }
        buckets = next;
    }
    let mut out = CMatrix::zeros(dim, dim);
    for b in buckets.iter().skip(threshold) {
        out = out.add(b);
    }
    Ok(out)
}

/// `ψ† Q ψ` clamped to `[0,1]`.
pub fn witness_acceptance(q: &HermitianMatrix, w: &[Complex64]) -> f64 {
    dot(w, &q.matrix().matvec(w)).re.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplification::Thresholds;
    use crate::circuit::Circuit;

    fn inst() -> QmaInstance {
        let mut c = Circuit::new(3);
        c.h(1).unwrap().cnot(1, 0).unwrap();
        QmaInstance::new(c, 1, 2, Thresholds::from_ratios((3, 4), (1, 4)).unwrap()).unwrap()
    }

    #[test]
    fn mw_repetition_count() {
        let a = amplify_mw(&inst(), 2).unwrap();
        assert_eq!(a.q, 2);
        assert_eq!(a.n, 64);
        assert_eq!(a.message_qubits(), 1);
        assert!(a.eigen_acceptance(0.75) >= 0.75);
    }

    #[test]
    fn kitaev_single_copy_matches_base() {
        let base = inst();
        let k = amplify_kitaev(&base, 1).unwrap();
        assert_eq!(k.message_qubits(), 1);
        let q = base.acceptance_operator(false).unwrap();
        let w = FloatState::basis(1, 1).unwrap();
        let direct = witness_acceptance(&q, w.amplitudes());
        // threshold ⌈(a+b)/2⌉ = 1: accept iff the single copy accepts
        assert!((k.product_acceptance(&[w]).unwrap() - direct).abs() < 1e-15);
        let k3 = amplify_kitaev(&base, 3).unwrap();
        assert_eq!(k3.message_qubits(), 3);
        assert_eq!(k3.threshold, 2);
    }

    #[test]
    fn tensor_sum_of_identity_split() {
        // Q1 = p I, Q0 = (1-p) I: the sum is tail(p) · I
        let p = 0.3;
        let pairs = vec![(CMatrix::identity(2).scale((1.0 - p).into()), CMatrix::identity(2).scale(p.into())); 3];
        let m = threshold_tensor_sum(&pairs, 2).unwrap();
        let want = binomial_tail(&p, 3, 2);
        assert!(m.max_abs_diff(&CMatrix::identity(8).scale(want.into())) < 1e-15);
    }
}
