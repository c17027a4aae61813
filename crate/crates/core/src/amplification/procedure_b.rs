use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::QmaInstance;
use crate::circuit::{apply_circuit, project, Amplitude, Circuit, FloatState, Projector, StateVector};
use crate::error::{Error, Result};
use crate::linalg::{norm, C};
use crate::rng::seeded;

/// Largest repetition count accepted by enumerate mode.
pub const ENUMERATE_MAX_N: usize = 20;

/// Probability of every reachable agreement pattern `z ∈ {0,1}^N`.
///
/// Pattern keys store `z_i` at bit `i − 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryDistribution<S> {
    pub n: usize,
    /// Smallest accepting count, `⌈N(a+b)/2⌉`.
    pub threshold: usize,
    pub probs: BTreeMap<u64, S>,
}

impl<S: Amplitude> TrajectoryDistribution<S> {
    pub fn weight(z: u64) -> usize {
        z.count_ones() as usize
    }

    pub fn prob(&self, z: u64) -> S {
        self.probs.get(&z).cloned().unwrap_or_else(S::zero)
    }

    pub fn total(&self) -> S {
        self.probs.values().fold(S::zero(), |acc, p| acc.add(p))
    }

    /// Probability that the count of agreements reaches the threshold.
    pub fn acceptance(&self) -> S {
        self.probs
            .iter()
            .filter(|(z, _)| Self::weight(**z) >= self.threshold)
            .fold(S::zero(), |acc, (_, p)| acc.add(p))
    }

    /// Pattern as a `z_1 … z_N` bit string.
    pub fn pattern_string(&self, z: u64) -> String {
        (0..self.n).map(|i| if z >> i & 1 == 1 { '1' } else { '0' }).collect()
    }

    pub fn to_f64_map(&self) -> BTreeMap<String, f64> {
        self.probs
            .iter()
            .map(|(z, p)| (self.pattern_string(*z), p.to_c64().re))
            .collect()
    }
}

struct Branch<S> {
    z: u64,
    y_last: bool,
    state: StateVector<S>,
}

fn check_witness<S: Amplitude>(inst: &QmaInstance, witness: &StateVector<S>) -> Result<()> {
    if witness.num_qubits() != inst.m {
        return Err(Error::WidthMismatch {
            expected: inst.m,
            actual: witness.num_qubits(),
        });
    }
    let nrm = witness.norm_sqr();
    let ok = if S::EXACT {
        nrm == S::one()
    } else {
        (nrm.to_c64().re - 1.0).abs() <= 1e-9
    };
    if !ok {
        return Err(Error::NotNormalized(nrm.to_c64().re));
    }
    Ok(())
}

/// The `i`-th step (1-based): odd steps apply `A` and measure the output
/// qubit, even steps apply `A†` and test the workspace for all zeros.
fn step_ops(inst: &QmaInstance, dagger: &Circuit, i: usize) -> (Circuit, Projector) {
    if i % 2 == 1 {
        (inst.verifier.clone(), Projector::FIRST_QUBIT_ONE)
    } else {
        (
            dagger.clone(),
            Projector::RegisterZero {
                start: inst.m,
                len: inst.k,
            },
        )
    }
}

/// Enumerates every measurement branch of `N` events, pruning branches of
/// probability zero. Branch states stay unnormalized, so their squared norms
/// are the joint outcome probabilities.
pub fn run_procedure_b<S: Amplitude>(
    inst: &QmaInstance,
    witness: &StateVector<S>,
    n: usize,
) -> Result<TrajectoryDistribution<S>> {
    if n == 0 {
        return Err(Error::Instance("procedure B needs N ≥ 1".into()));
    }
    if n > ENUMERATE_MAX_N {
        return Err(Error::CapExceeded {
            what: "enumerated repetitions",
            requested: n,
            cap: ENUMERATE_MAX_N,
        });
    }
    check_witness(inst, witness)?;
    let start = witness.tensor(&StateVector::<S>::zero_state(inst.k)?)?;
    let dagger = inst.verifier.dagger();
    let mut branches = vec![Branch {
        z: 0,
        y_last: true,
        state: start,
    }];
    for i in 1..=n {
        let (circ, proj) = step_ops(inst, &dagger, i);
        let next: Result<Vec<Vec<Branch<S>>>> = branches
            .into_par_iter()
            .map(|b| {
                let evolved = apply_circuit(&b.state, &circ)?;
                let mut out = Vec::with_capacity(2);
                for y in [false, true] {
                    let post = project(&evolved, proj, y)?;
                    if post.norm_sqr().is_zero() {
                        continue;
                    }
                    let agree = (y == b.y_last) as u64;
                    out.push(Branch {
                        z: b.z | agree << (i - 1),
                        y_last: y,
                        state: post,
                    });
                }
                Ok(out)
            })
            .collect();
        branches = next?.into_iter().flatten().collect();
    }
    let mut probs = BTreeMap::new();
    for b in branches {
        probs.insert(b.z, b.state.norm_sqr());
    }
    Ok(TrajectoryDistribution {
        n,
        threshold: inst.thresholds.count_threshold(n),
        probs,
    })
}

/// One sampled run of procedure B.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampledRun {
    pub y: Vec<bool>,
    pub z: Vec<bool>,
    pub accepted: bool,
}

/// Draws one trajectory with the seeded generator.
pub fn sample_procedure_b(
    inst: &QmaInstance,
    witness: &FloatState,
    n: usize,
    seed: u64,
) -> Result<SampledRun> {
    let mut rng = seeded(seed);
    sample_with(inst, witness, n, &mut rng)
}

pub(crate) fn sample_with(
    inst: &QmaInstance,
    witness: &FloatState,
    n: usize,
    rng: &mut impl Rng,
) -> Result<SampledRun> {
    if n == 0 {
        return Err(Error::Instance("procedure B needs N ≥ 1".into()));
    }
    check_witness(inst, witness)?;
    let mut state = witness.tensor(&FloatState::zero_state(inst.k)?)?;
    let dagger = inst.verifier.dagger();
    let (mut ys, mut zs) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut y_last = true;
    for i in 1..=n {
        let (circ, proj) = step_ops(inst, &dagger, i);
        let evolved = apply_circuit(&state, &circ)?;
        let one = project(&evolved, proj, true)?;
        let p1 = one.norm_sqr().re;
        let y = rng.random::<f64>() < p1;
        state = if y {
            one.normalized()?
        } else {
            project(&evolved, proj, false)?.normalized()?
        };
        zs.push(y == y_last);
        ys.push(y);
        y_last = y;
    }
    let count = zs.iter().filter(|z| **z).count();
    Ok(SampledRun {
        accepted: inst.thresholds.accepts(count, n),
        y: ys,
        z: zs,
    })
}

/// Residuals of the four two-dimensional rotation identities and of
/// `|δ₁> = |φ>` for an eigenvector `ψ` of `Q` with eigenvalue `0 < p < 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrenceResiduals {
    pub unit_norms: f64,
    pub a_delta0: f64,
    pub a_delta1: f64,
    pub adag_gamma0: f64,
    pub adag_gamma1: f64,
    pub delta1_is_phi: f64,
}

impl RecurrenceResiduals {
    pub fn max(&self) -> f64 {
        [
            self.unit_norms,
            self.a_delta0,
            self.a_delta1,
            self.adag_gamma0,
            self.adag_gamma1,
            self.delta1_is_phi,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn recurrence_residuals(inst: &QmaInstance, psi: &[C], p: f64) -> Result<RecurrenceResiduals> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Instance(format!("eigenvalue {p} is not interior")));
    }
    let a = &inst.verifier;
    let ad = a.dagger();
    let pi = Projector::FIRST_QUBIT_ONE;
    let delta = Projector::RegisterZero {
        start: inst.m,
        len: inst.k,
    };
    let phi = FloatState::from_amplitudes(psi.to_vec())?.tensor(&FloatState::zero_state(inst.k)?)?;
    let (sp, sq) = (p.sqrt(), (1.0 - p).sqrt());
    let scale = |s: &FloatState, c: f64| s.scale(&Complex64::new(c, 0.0));

    let a_phi = apply_circuit(&project(&phi, delta, true)?, a)?;
    let gamma0 = scale(&project(&a_phi, pi, false)?, 1.0 / sq);
    let gamma1 = scale(&project(&a_phi, pi, true)?, 1.0 / sp);
    let back = apply_circuit(&project(&gamma1, pi, true)?, &ad)?;
    let delta0 = scale(&project(&back, delta, false)?, 1.0 / sq);
    let delta1 = scale(&project(&back, delta, true)?, 1.0 / sp);

    let dist = |x: &FloatState, y: &FloatState| -> f64 {
        let d: Vec<C> = x
            .amplitudes()
            .iter()
            .zip(y.amplitudes())
            .map(|(u, v)| u - v)
            .collect();
        norm(&d)
    };
    let combo = |x: &FloatState, cx: f64, y: &FloatState, cy: f64| -> Result<FloatState> {
        scale(x, cx).add_state(&scale(y, cy))
    };
    let unit_norms = [&gamma0, &gamma1, &delta0, &delta1]
        .iter()
        .map(|v| (norm(v.amplitudes()) - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(RecurrenceResiduals {
        unit_norms,
        a_delta0: dist(&apply_circuit(&delta0, a)?, &combo(&gamma0, -sp, &gamma1, sq)?),
        a_delta1: dist(&apply_circuit(&delta1, a)?, &combo(&gamma0, sq, &gamma1, sp)?),
        adag_gamma0: dist(&apply_circuit(&gamma0, &ad)?, &combo(&delta0, -sp, &delta1, sq)?),
        adag_gamma1: dist(&apply_circuit(&gamma1, &ad)?, &combo(&delta0, sq, &delta1, sp)?),
        delta1_is_phi: dist(&delta1, &phi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplification::Thresholds;
    use crate::circuit::parse_circuit;
    use crate::exact::ExactScalar;

    fn half_instance() -> QmaInstance {
        // message q0, workspace q1 q2: H on q1, then copy q1 into q0
        let mut c = Circuit::new(3);
        c.h(1).unwrap().cnot(1, 0).unwrap();
        QmaInstance::new(c, 1, 2, Thresholds::from_ratios((3, 4), (1, 4)).unwrap()).unwrap()
    }

    #[test]
    fn certain_acceptance_gives_all_ones() {
        let c = parse_circuit("qubits 2").unwrap();
        let inst = QmaInstance::new(c, 1, 1, Thresholds::from_ratios((3, 4), (1, 4)).unwrap()).unwrap();
        let w = StateVector::<ExactScalar>::basis(1, 1).unwrap();
        let d = run_procedure_b(&inst, &w, 5).unwrap();
        assert_eq!(d.probs.len(), 1);
        assert_eq!(d.prob(0b11111), ExactScalar::one());
        assert_eq!(d.acceptance(), ExactScalar::one());
    }

    #[test]
    fn half_eigenvalue_is_uniform_over_patterns() {
        let inst = half_instance();
        let w = StateVector::<ExactScalar>::basis(1, 0).unwrap();
        let n = 4;
        let d = run_procedure_b(&inst, &w, n).unwrap();
        assert_eq!(d.total(), ExactScalar::one());
        for z in 0..1u64 << n {
            assert_eq!(d.prob(z), ExactScalar::from_dyadic(1, n as u32), "z={z:04b}");
        }
        // threshold 2 of 4: 11/16
        assert_eq!(d.acceptance(), ExactScalar::from_dyadic(11, 4));
    }

    #[test]
    fn odd_n_ends_after_a_forward_step() {
        let inst = half_instance();
        let w = StateVector::<ExactScalar>::basis(1, 1).unwrap();
        let d = run_procedure_b(&inst, &w, 3).unwrap();
        assert_eq!(d.n, 3);
        assert_eq!(d.total(), ExactScalar::one());
    }

    #[test]
    fn caps_and_preconditions() {
        let inst = half_instance();
        let w = StateVector::<ExactScalar>::basis(1, 0).unwrap();
        assert!(matches!(run_procedure_b(&inst, &w, 21), Err(Error::CapExceeded { .. })));
        assert!(run_procedure_b(&inst, &w, 0).is_err());
        let bad = StateVector::from_amplitudes(vec![ExactScalar::one(), ExactScalar::one()]).unwrap();
        assert!(matches!(run_procedure_b(&inst, &bad, 2), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let inst = half_instance();
        let w = FloatState::basis(1, 0).unwrap();
        let r1 = sample_procedure_b(&inst, &w, 12, 99).unwrap();
        let r2 = sample_procedure_b(&inst, &w, 12, 99).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.z.len(), 12);
    }

    #[test]
    fn recurrences_hold_for_half_instance() {
        let inst = half_instance();
        for idx in 0..2 {
            let mut psi = vec![C::new(0.0, 0.0); 2];
            psi[idx] = C::new(1.0, 0.0);
            let r = recurrence_residuals(&inst, &psi, 0.5).unwrap();
            assert!(r.max() < 1e-12, "{r:?}");
        }
    }
}
