use std::fmt::Debug;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{width_caps, Circuit, Gate};
use crate::error::{Error, Result};
use crate::exact::ExactScalar;

/// Scalar type a state vector can carry.
pub trait Amplitude: Clone + Debug + PartialEq + Send + Sync + 'static {
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn conj(&self) -> Self;
    fn mul_i(&self) -> Self;
    fn mul_frac_1_sqrt2(&self) -> Self;
    /// Whether the value is zero; floats use an absolute cut of 1e-300.
    fn is_zero(&self) -> bool;
    fn to_c64(&self) -> Complex64;

    fn norm_sqr(&self) -> Self {
        self.mul(&self.conj())
    }
}

impl Amplitude for Complex64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn mul_i(&self) -> Self {
        Complex64::new(-self.im, self.re)
    }
    fn mul_frac_1_sqrt2(&self) -> Self {
        self * std::f64::consts::FRAC_1_SQRT_2
    }
    fn is_zero(&self) -> bool {
        Complex64::norm_sqr(self) < 1e-300
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn norm_sqr(&self) -> Self {
        Complex64::new(Complex64::norm_sqr(self), 0.0)
    }
}

impl Amplitude for ExactScalar {
    const EXACT: bool = true;

    fn zero() -> Self {
        ExactScalar::zero()
    }
    fn one() -> Self {
        ExactScalar::one()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn conj(&self) -> Self {
        ExactScalar::conj(self)
    }
    fn mul_i(&self) -> Self {
        ExactScalar::mul_i(self)
    }
    fn mul_frac_1_sqrt2(&self) -> Self {
        ExactScalar::mul_frac_1_sqrt2(self)
    }
    fn is_zero(&self) -> bool {
        ExactScalar::is_zero(self)
    }
    fn to_c64(&self) -> Complex64 {
        ExactScalar::to_c64(self)
    }
}

/// Dense state on `n` qubits; qubit 0 is the most significant index bit.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<S> {
    n: usize,
    amps: Vec<S>,
}

pub type FloatState = StateVector<Complex64>;

fn check_cap<S: Amplitude>(n: usize) -> Result<()> {
    let (float_cap, exact_cap) = width_caps();
    let cap = if S::EXACT { exact_cap } else { float_cap };
    if n > cap {
        return Err(Error::CapExceeded {
            what: "state width",
            requested: n,
            cap,
        });
    }
    Ok(())
}

impl<S: Amplitude> StateVector<S> {
    /// Computational basis state `|index>`.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_cap::<S>(n)?;
        if index >= 1 << n {
            return Err(Error::Dimension(format!("basis index {index} on {n} qubits")));
        }
        let mut amps = vec![S::zero(); 1 << n];
        amps[index] = S::one();
        Ok(Self { n, amps })
    }

    pub fn zero_state(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    pub fn from_amplitudes(amps: Vec<S>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::Dimension(format!("{len} amplitudes is not a power of two")));
        }
        let n = len.trailing_zeros() as usize;
        check_cap::<S>(n)?;
        Ok(Self { n, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[S] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<S> {
        self.amps
    }

    /// `Σ a·conj(a)`.
    pub fn norm_sqr(&self) -> S {
        self.amps
            .iter()
            .fold(S::zero(), |acc, a| acc.add(&a.norm_sqr()))
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<S> {
        if self.n != other.n {
            return Err(Error::WidthMismatch {
                expected: self.n,
                actual: other.n,
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .fold(S::zero(), |acc, (a, b)| acc.add(&a.conj().mul(b))))
    }

    /// `self ⊗ other` with `self` on the leading qubits.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        check_cap::<S>(self.n + other.n)?;
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a.mul(b));
            }
        }
        Ok(Self {
            n: self.n + other.n,
            amps,
        })
    }

    pub fn to_float(&self) -> FloatState {
        StateVector {
            n: self.n,
            amps: self.amps.iter().map(|a| a.to_c64()).collect(),
        }
    }

    pub fn apply_gate(&mut self, g: &Gate) {
        let n = self.n;
        let bit = |q: usize| 1usize << (n - 1 - q);
        match *g {
            Gate::H(q) => {
                let m = bit(q);
                let body = |chunk: &mut [S]| {
                    let (lo, hi) = chunk.split_at_mut(m);
                    for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                        let s = a.add(b).mul_frac_1_sqrt2();
                        let d = a.sub(b).mul_frac_1_sqrt2();
                        *a = s;
                        *b = d;
                    }
                };
                if !S::EXACT && n >= 12 {
                    self.amps.par_chunks_mut(2 * m).for_each(body);
                } else {
                    self.amps.chunks_mut(2 * m).for_each(body);
                }
            }
            Gate::S(q) => {
                let m = bit(q);
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & m != 0 {
                        *a = a.mul_i();
                    }
                }
            }
            Gate::T(c1, c2, t) => {
                let (m1, m2, mt) = (bit(c1), bit(c2), bit(t));
                for i in 0..self.amps.len() {
                    if i & m1 != 0 && i & m2 != 0 && i & mt == 0 {
                        self.amps.swap(i, i | mt);
                    }
                }
            }
        }
    }

    /// Scales every amplitude.
    pub fn scale(&self, s: &S) -> Self {
        Self {
            n: self.n,
            amps: self.amps.iter().map(|a| a.mul(s)).collect(),
        }
    }

    pub fn add_state(&self, o: &Self) -> Result<Self> {
        if self.n != o.n {
            return Err(Error::WidthMismatch {
                expected: self.n,
                actual: o.n,
            });
        }
        Ok(Self {
            n: self.n,
            amps: self.amps.iter().zip(&o.amps).map(|(a, b)| a.add(b)).collect(),
        })
    }
}

impl FloatState {
    pub fn normalized(&self) -> Result<FloatState> {
        let nrm = self.norm_sqr().re.sqrt();
        if nrm < 1e-150 {
            return Err(Error::ZeroProbability);
        }
        Ok(self.scale(&Complex64::new(1.0 / nrm, 0.0)))
    }

    /// Checks `‖ψ‖² = 1` within `tol`.
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let n = self.norm_sqr().re;
        if (n - 1.0).abs() > tol {
            return Err(Error::NotNormalized(n));
        }
        Ok(())
    }
}

/// Returns `U_c · state`.
pub fn apply_circuit<S: Amplitude>(state: &StateVector<S>, c: &Circuit) -> Result<StateVector<S>> {
    if state.n != c.width() {
        return Err(Error::WidthMismatch {
            expected: c.width(),
            actual: state.n,
        });
    }
    let mut out = state.clone();
    for g in c.gates() {
        out.apply_gate(g);
    }
    Ok(out)
}

/// Two-outcome projective measurements used by the protocols.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projector {
    /// Outcome 1 iff qubit `q` is 1.
    QubitOne(usize),
    /// Outcome 1 iff qubits `start..start+len` are all 0.
    RegisterZero { start: usize, len: usize },
}

impl Projector {
    /// The output-qubit projector `Π₁` on qubit 0.
    pub const FIRST_QUBIT_ONE: Projector = Projector::QubitOne(0);

    /// Outcome of basis index `i` on `n` qubits.
    pub fn outcome(&self, n: usize, i: usize) -> bool {
        match *self {
            Projector::QubitOne(q) => i >> (n - 1 - q) & 1 == 1,
            Projector::RegisterZero { start, len } => {
                let mask = ((1usize << len) - 1) << (n - start - len);
                i & mask == 0
            }
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        let ok = match *self {
            Projector::QubitOne(q) => q < n,
            Projector::RegisterZero { start, len } => start + len <= n,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension(format!("{self:?} on {n} qubits")))
        }
    }
}

/// Unnormalized post-measurement branches and their squared norms.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement<S> {
    pub prob_0: S,
    pub prob_1: S,
    pub post_0: StateVector<S>,
    pub post_1: StateVector<S>,
}

/// `Λ_outcome · state`, unnormalized.
pub fn project<S: Amplitude>(
    state: &StateVector<S>,
    proj: Projector,
    outcome: bool,
) -> Result<StateVector<S>> {
    proj.check(state.n)?;
    let amps = state
        .amps
        .iter()
        .enumerate()
        .map(|(i, a)| {
            if proj.outcome(state.n, i) == outcome {
                a.clone()
            } else {
                S::zero()
            }
        })
        .collect();
    Ok(StateVector { n: state.n, amps })
}

pub fn measure_projector<S: Amplitude>(
    state: &StateVector<S>,
    proj: Projector,
) -> Result<Measurement<S>> {
    let post_0 = project(state, proj, false)?;
    let post_1 = project(state, proj, true)?;
    Ok(Measurement {
        prob_0: post_0.norm_sqr(),
        prob_1: post_1.norm_sqr(),
        post_0,
        post_1,
    })
}

/// Floating measurement with renormalized post-states.
///
/// A branch of zero probability is returned as `Err(ZeroProbability)`.
pub fn measure_renormalized(
    state: &FloatState,
    proj: Projector,
) -> Result<(f64, Result<FloatState>, Result<FloatState>)> {
    let m = measure_projector(state, proj)?;
    Ok((m.prob_1.re, m.post_0.normalized(), m.post_1.normalized()))
}

/// Dense matrix of a circuit; `u[row][col]`.
pub fn unitary_matrix<S: Amplitude>(c: &Circuit) -> Result<Vec<Vec<S>>> {
    let n = c.width();
    let dim = 1usize << n;
    let mut u = vec![vec![S::zero(); dim]; dim];
    for col in 0..dim {
        let out = apply_circuit(&StateVector::<S>::basis(n, col)?, c)?;
        for (row, a) in out.amps.into_iter().enumerate() {
            u[row][col] = a;
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;
    use proptest::prelude::*;

    type Ex = StateVector<ExactScalar>;

    fn run(text: &str, input: usize) -> Ex {
        let c = parse_circuit(text).unwrap();
        apply_circuit(&Ex::basis(c.width(), input).unwrap(), &c).unwrap()
    }

    #[test]
    fn gate_examples() {
        let h = ExactScalar::frac_1_sqrt2();
        assert_eq!(run("qubits 1\nH 0", 0).amplitudes(), &[h.clone(), h]);
        assert_eq!(
            run("qubits 1\nS 0", 1).amplitudes(),
            &[ExactScalar::zero(), ExactScalar::i()]
        );
        let out = run("qubits 3\nT 0 1 2", 0b110);
        assert_eq!(out, Ex::basis(3, 0b111).unwrap());
    }

    #[test]
    fn dagger_of_ishift_is_minus_i() {
        let c = parse_circuit("qubits 1\nS 0").unwrap().dagger();
        let out = apply_circuit(&Ex::basis(1, 1).unwrap(), &c).unwrap();
        // S^3 oracle: i^3 = -i
        let s3 = &(&ExactScalar::i() * &ExactScalar::i()) * &ExactScalar::i();
        assert_eq!(out.amplitudes()[1], s3);
        assert_eq!(out.amplitudes()[1], -ExactScalar::i());
    }

    #[test]
    fn macros_act_as_named() {
        let mut c = crate::circuit::Circuit::new(3);
        c.x(0).unwrap();
        assert_eq!(apply_circuit(&Ex::basis(3, 0).unwrap(), &c).unwrap(), Ex::basis(3, 0b100).unwrap());
        for input in 0..8 {
            let mut c = crate::circuit::Circuit::new(3);
            c.cnot(0, 2).unwrap();
            let want = if input & 0b100 != 0 { input ^ 1 } else { input };
            let out = apply_circuit(&Ex::basis(3, input).unwrap(), &c).unwrap();
            assert_eq!(out, Ex::basis(3, want).unwrap(), "input {input:03b}");
        }
    }

    #[test]
    fn measurement_examples() {
        let plus = run("qubits 1\nH 0", 0);
        let m = measure_projector(&plus, Projector::FIRST_QUBIT_ONE).unwrap();
        assert_eq!(m.prob_1, ExactScalar::from_dyadic(1, 1));
        assert_eq!(&m.prob_0 + &m.prob_1, ExactScalar::one());

        // message |1>, workspace |00>
        let s = Ex::basis(3, 0b100).unwrap();
        let m = measure_projector(&s, Projector::RegisterZero { start: 1, len: 2 }).unwrap();
        assert_eq!(m.prob_1, ExactScalar::one());

        let f = s.to_float();
        let (p, post0, post1) = measure_renormalized(&f, Projector::RegisterZero { start: 1, len: 2 }).unwrap();
        assert_eq!(p, 1.0);
        assert!(matches!(post0, Err(Error::ZeroProbability)));
        assert_eq!(post1.unwrap(), f);
    }

    #[test]
    fn width_mismatch_is_reported() {
        let c = parse_circuit("qubits 2\nH 0").unwrap();
        assert!(matches!(
            apply_circuit(&Ex::basis(1, 0).unwrap(), &c),
            Err(Error::WidthMismatch { expected: 2, actual: 1 })
        ));
    }

    pub(crate) fn arb_circuit(max_width: usize, max_gates: usize) -> impl Strategy<Value = Circuit> {
        (3..=max_width).prop_flat_map(move |n| {
            let gate = prop_oneof![
                (0..n).prop_map(Gate::H),
                (0..n).prop_map(Gate::S),
                proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 3)
                    .prop_shuffle()
                    .prop_map(|v| Gate::T(v[0], v[1], v[2])),
            ];
            proptest::collection::vec(gate, 0..=max_gates)
                .prop_map(move |gs| Circuit::from_gates(n, gs).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn norm_preserved_exactly(c in arb_circuit(5, 24), input in 0usize..32) {
            let s = Ex::basis(c.width(), input % (1 << c.width())).unwrap();
            let out = apply_circuit(&s, &c).unwrap();
            prop_assert_eq!(out.norm_sqr(), ExactScalar::one());
        }

        #[test]
        fn dagger_inverts(c in arb_circuit(5, 24), input in 0usize..32) {
            let s = Ex::basis(c.width(), input % (1 << c.width())).unwrap();
            let back = apply_circuit(&apply_circuit(&s, &c).unwrap(), &c.dagger()).unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn float_tracks_exact(c in arb_circuit(5, 40), input in 0usize..32) {
            let s = Ex::basis(c.width(), input % (1 << c.width())).unwrap();
            let exact = apply_circuit(&s, &c).unwrap();
            let float = apply_circuit(&s.to_float(), &c).unwrap();
            for (a, b) in exact.amplitudes().iter().zip(float.amplitudes()) {
                prop_assert!((a.to_c64() - b).norm() <= 1e-12);
            }
        }

        #[test]
        fn text_round_trip(c in arb_circuit(6, 30)) {
            prop_assert_eq!(parse_circuit(&c.to_text()).unwrap(), c);
        }
    }
}
