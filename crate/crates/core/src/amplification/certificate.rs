use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{MwInstance, QmaInstance};
use crate::circuit::{apply_circuit, measure_projector, width_caps, Circuit, FloatState, Gate, Projector};
use crate::error::{Error, Result};
use crate::exact::GaussianInt;

/// Integer bit cap for certificate numerators.
pub const CERTIFICATE_BIT_CAP: u64 = 1 << 16;

/// Integers `(h, g)` with `h / 2^g = tr(Q)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapCertificate {
    #[serde(with = "decimal")]
    pub h: BigInt,
    pub g: u64,
    /// Decision rule the certificate feeds.
    pub claim: String,
}

pub const PP_CLAIM: &str = "accept iff 2h - 2^g > 0";

mod decimal {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl GapCertificate {
    fn new(h: BigInt, g: u64) -> Self {
        Self {
            h,
            g,
            claim: PP_CLAIM.to_string(),
        }
    }

    pub fn pow2g(&self) -> BigInt {
        BigInt::one() << self.g
    }

    /// `2h − 2^g`.
    pub fn decision_value(&self) -> BigInt {
        (&self.h << 1u32) - self.pow2g()
    }

    /// `h / 2^g` as an exact rational.
    pub fn value(&self) -> BigRational {
        BigRational::new(self.h.clone(), self.pow2g())
    }

    pub fn value_f64(&self) -> f64 {
        self.value().to_f64().unwrap_or(f64::NAN)
    }
}

/// `(2h ≥ 2^g, 2h ≤ 2^g / 2)`, evaluated over the integers.
pub fn a0pp_check(cert: &GapCertificate) -> (bool, bool) {
    let two_h = &cert.h << 1u32;
    let p = cert.pow2g();
    (two_h >= p, (two_h << 1u32) <= p)
}

fn check_exact_width(width: usize) -> Result<()> {
    let (_, cap) = width_caps();
    if width > cap {
        return Err(Error::CapExceeded {
            what: "exact width",
            requested: width,
            cap,
        });
    }
    Ok(())
}

/// Amplitudes `c / √2^s` with Gaussian-integer numerators.
fn apply_scaled(amps: &mut [GaussianInt], n: usize, g: &Gate) {
    let bit = |q: usize| 1usize << (n - 1 - q);
    match *g {
        Gate::H(q) => {
            let m = bit(q);
            for i in 0..amps.len() {
                if i & m == 0 {
                    let (a, b) = (amps[i].clone(), amps[i | m].clone());
                    amps[i] = &a + &b;
                    amps[i | m] = &a - &b;
                }
            }
        }
        Gate::S(q) => {
            let m = bit(q);
            for (i, a) in amps.iter_mut().enumerate() {
                if i & m != 0 {
                    *a = a.mul_i();
                }
            }
        }
        Gate::T(c1, c2, t) => {
            let (m1, m2, mt) = (bit(c1), bit(c2), bit(t));
            for i in 0..amps.len() {
                if i & m1 != 0 && i & m2 != 0 && i & mt == 0 {
                    amps.swap(i, i | mt);
                }
            }
        }
    }
}

/// Certificate by summing squared path amplitudes over accepting outputs.
///
/// Every amplitude of `A|j,0^k>` is `c/√2^g` with `c ∈ Z[i]` and `g` the
/// Hadamard count, so `h = Σ_j Σ_{x accepting} |c_{j,x}|²` is an integer.
pub fn counting_certificate(inst: &QmaInstance) -> Result<GapCertificate> {
    let n = inst.width();
    check_exact_width(n)?;
    let g = inst.verifier.hadamard_count() as u64;
    let out_mask = 1usize << (n - 1);
    let per_input: Vec<BigInt> = (0..1usize << inst.m)
        .into_par_iter()
        .map(|j| {
            let mut amps = vec![GaussianInt::zero(); 1 << n];
            amps[j << inst.k] = GaussianInt::new(1, 0);
            for gate in inst.verifier.gates() {
                apply_scaled(&mut amps, n, gate);
            }
            amps.iter()
                .enumerate()
                .filter(|(x, _)| x & out_mask != 0)
                .map(|(_, c)| c.norm_sqr())
                .sum()
        })
        .collect();
    let h: BigInt = per_input.into_iter().sum();
    if h.bits() > CERTIFICATE_BIT_CAP {
        return Err(Error::ExactOverflow {
            bits: h.bits(),
            cap: CERTIFICATE_BIT_CAP,
        });
    }
    Ok(GapCertificate::new(h, g))
}

/// Certificate read off the exact diagonal of `Q`, scaled by `2^{#H}`.
pub fn exact_trace_certificate(inst: &QmaInstance) -> Result<GapCertificate> {
    check_exact_width(inst.width())?;
    let q = inst.acceptance_operator(true)?;
    let tr = q
        .exact_trace()
        .and_then(|t| t.to_rational())
        .ok_or_else(|| Error::Instance("trace of Q is not rational".into()))?;
    let g = inst.verifier.hadamard_count() as u64;
    let scaled = tr * BigRational::from_integer(BigInt::one() << g);
    if !scaled.is_integer() {
        return Err(Error::Instance("2^g tr(Q) is not an integer".into()));
    }
    Ok(GapCertificate::new(scaled.to_integer(), g))
}

/// Dense operator with Gaussian-integer entries over a shared `2^scale`.
#[derive(Clone, Debug, PartialEq)]
struct ScaledDensity {
    dim: usize,
    entries: Vec<GaussianInt>,
}

impl ScaledDensity {
    fn at(&self, r: usize, c: usize) -> &GaussianInt {
        &self.entries[r * self.dim + c]
    }

    fn trace(&self) -> BigInt {
        (0..self.dim).map(|i| self.at(i, i).re.clone()).sum()
    }

    fn add_assign(&mut self, o: &ScaledDensity) {
        for (a, b) in self.entries.iter_mut().zip(&o.entries) {
            *a = &*a + b;
        }
    }

    /// `G ρ G†` in place; Hadamards raise the scale by one.
    fn conjugate(&mut self, n: usize, g: &Gate) {
        let d = self.dim;
        let bit = |q: usize| 1usize << (n - 1 - q);
        match *g {
            Gate::H(q) => {
                let m = bit(q);
                for r in 0..d {
                    if r & m == 0 {
                        for c in 0..d {
                            let (a, b) = (self.entries[r * d + c].clone(), self.entries[(r | m) * d + c].clone());
                            self.entries[r * d + c] = &a + &b;
                            self.entries[(r | m) * d + c] = &a - &b;
                        }
                    }
                }
                for r in 0..d {
                    for c in 0..d {
                        if c & m == 0 {
                            let (a, b) = (self.entries[r * d + c].clone(), self.entries[r * d + (c | m)].clone());
                            self.entries[r * d + c] = &a + &b;
                            self.entries[r * d + (c | m)] = &a - &b;
                        }
                    }
                }
            }
            Gate::S(q) => {
                let m = bit(q);
                for r in 0..d {
                    for c in 0..d {
                        let e = &mut self.entries[r * d + c];
                        match (r & m != 0, c & m != 0) {
                            (true, false) => *e = e.mul_i(),
                            (false, true) => *e = -&e.mul_i(),
                            _ => {}
                        }
                    }
                }
            }
            Gate::T(c1, c2, t) => {
                let (m1, m2, mt) = (bit(c1), bit(c2), bit(t));
                let perm = |i: usize| if i & m1 != 0 && i & m2 != 0 { i ^ mt } else { i };
                let old = std::mem::take(&mut self.entries);
                let mut entries = vec![GaussianInt::zero(); d * d];
                for (idx, e) in old.into_iter().enumerate() {
                    entries[perm(idx / d) * d + perm(idx % d)] = e;
                }
                self.entries = entries;
            }
        }
    }

    /// `Λ ρ Λ` for the projector selecting `outcome`.
    fn projected(&self, n: usize, proj: Projector, outcome: bool) -> ScaledDensity {
        let d = self.dim;
        let keep: Vec<bool> = (0..d).map(|i| proj.outcome(n, i) == outcome).collect();
        let entries = self
            .entries
            .iter()
            .enumerate()
            .map(|(idx, e)| {
                if keep[idx / d] && keep[idx % d] {
                    e.clone()
                } else {
                    GaussianInt::zero()
                }
            })
            .collect();
        ScaledDensity { dim: d, entries }
    }
}

/// Certificate of the amplified verifier: `h / 2^g = tr(Q_B)` with
/// `g = N · #H(A)`.
///
/// Runs the measurement sequence on the unnormalized operator
/// `I_m ⊗ |0^k><0^k|`, merging histories that share the last outcome and the
/// agreement count. Cells that have reached the threshold are banked and
/// cells that can no longer reach it are dropped.
pub fn amplified_certificate(mw: &MwInstance) -> Result<GapCertificate> {
    let inst = &mw.base;
    let n_q = inst.width();
    check_exact_width(n_q)?;
    let dim = 1usize << n_q;
    let hs = inst.verifier.hadamard_count() as u64;
    let g_total = mw.n as u64 * hs;
    let forward = inst.verifier.clone();
    let backward: Circuit = inst.verifier.dagger();
    let workspace_zero = Projector::RegisterZero {
        start: inst.m,
        len: inst.k,
    };

    let mut rho0 = ScaledDensity {
        dim,
        entries: vec![GaussianInt::zero(); dim * dim],
    };
    for j in 0..1usize << inst.m {
        let i = j << inst.k;
        rho0.entries[i * dim + i] = GaussianInt::new(1, 0);
    }
    let mut cells: BTreeMap<(bool, usize), ScaledDensity> = BTreeMap::new();
    cells.insert((true, 0), rho0);
    let mut accepted = BigInt::zero();
    let t = mw.threshold;

    for i in 1..=mw.n {
        let (circ, proj) = if i % 2 == 1 {
            (&forward, Projector::FIRST_QUBIT_ONE)
        } else {
            (&backward, workspace_zero)
        };
        let remaining = mw.n - i;
        let scale = i as u64 * hs;
        let outputs: Vec<Vec<((bool, usize), ScaledDensity)>> = cells
            .into_par_iter()
            .map(|((y, w), mut rho)| {
                for g in circ.gates() {
                    rho.conjugate(n_q, g);
                }
                [false, true]
                    .into_iter()
                    .map(|b| ((b, w + (b == y) as usize), rho.projected(n_q, proj, b)))
                    .collect()
            })
            .collect();
        let mut next: BTreeMap<(bool, usize), ScaledDensity> = BTreeMap::new();
        for ((b, w), rho) in outputs.into_iter().flatten() {
            let tr = rho.trace();
            if tr.is_zero() {
                continue;
            }
            if w >= t {
                accepted += tr << (g_total - scale);
            } else if w + remaining >= t {
                match next.get_mut(&(b, w)) {
                    Some(acc) => acc.add_assign(&rho),
                    None => {
                        next.insert((b, w), rho);
                    }
                }
            }
        }
        cells = next;
        if accepted.bits() > CERTIFICATE_BIT_CAP {
            return Err(Error::ExactOverflow {
                bits: accepted.bits(),
                cap: CERTIFICATE_BIT_CAP,
            });
        }
    }
    Ok(GapCertificate::new(accepted, g_total))
}

/// Acceptance on the totally mixed message, computed two ways.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedStateAcceptance {
    /// `2^{-m} tr(Q)`.
    pub direct: f64,
    /// Average acceptance over the `2^m` basis messages.
    pub basis_average: f64,
}

impl MixedStateAcceptance {
    pub fn discrepancy(&self) -> f64 {
        (self.direct - self.basis_average).abs()
    }
}

pub fn mixed_state_acceptance(inst: &QmaInstance) -> Result<MixedStateAcceptance> {
    let q = inst.acceptance_operator(false)?;
    let dm = (1usize << inst.m) as f64;
    let direct = q.trace() / dm;
    let mut total = 0.0;
    for j in 0..1usize << inst.m {
        let input = FloatState::basis(inst.width(), j << inst.k)?;
        let out = apply_circuit(&input, &inst.verifier)?;
        total += measure_projector(&out, Projector::FIRST_QUBIT_ONE)?.prob_1.re;
    }
    Ok(MixedStateAcceptance {
        direct,
        basis_average: total / dm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplification::{amplify_mw, binomial_tail, Thresholds};
    use crate::circuit::parse_circuit;

    fn qma(text: &str, m: usize, k: usize) -> QmaInstance {
        QmaInstance::new(parse_circuit(text).unwrap(), m, k, Thresholds::from_ratios((3, 4), (1, 4)).unwrap()).unwrap()
    }

    #[test]
    fn certificate_examples() {
        let c = counting_certificate(&qma("qubits 2", 1, 1)).unwrap();
        assert_eq!((c.h.clone(), c.g), (BigInt::from(1), 0));
        // one qubit message, no workspace, single Hadamard: tr(Q) = 1/2 + 1/2
        let c = counting_certificate(&qma("qubits 1\nH 0", 1, 0)).unwrap();
        assert_eq!(c.g, 1);
        assert_eq!(c.value(), BigRational::from_integer(1.into()));
        // zero-message variant: acceptance ½ from one Hadamard amplitude
        let c = counting_certificate(&qma("qubits 1\nH 0", 0, 1)).unwrap();
        assert_eq!((c.h.clone(), c.g), (BigInt::from(1), 1));
    }

    #[test]
    fn a0pp_conditions() {
        let full = GapCertificate::new(BigInt::from(8), 3);
        assert_eq!(a0pp_check(&full), (true, false));
        let none = GapCertificate::new(BigInt::zero(), 3);
        assert_eq!(a0pp_check(&none), (false, true));
        assert_eq!(GapCertificate::new(BigInt::from(3), 2).decision_value(), BigInt::from(2));
    }

    #[test]
    fn path_sum_matches_exact_trace() {
        let inst = qma("qubits 3\nH 1\nT 1 2 0\nH 2\nS 0\nH 0\nT 0 1 2", 1, 2);
        assert_eq!(counting_certificate(&inst).unwrap(), exact_trace_certificate(&inst).unwrap());
    }

    #[test]
    fn amplified_certificate_matches_binomial_tails() {
        // Q = ½ I on one message qubit
        let mut c = Circuit::new(3);
        c.h(1).unwrap().cnot(1, 0).unwrap();
        let inst = QmaInstance::new(c, 1, 2, Thresholds::from_ratios((3, 4), (1, 4)).unwrap()).unwrap();
        let mut mw = amplify_mw(&inst, 1).unwrap();
        // shorten to keep the unit test quick
        mw.n = 6;
        mw.threshold = inst.thresholds.count_threshold(6);
        let cert = amplified_certificate(&mw).unwrap();
        let half = BigRational::new(1.into(), 2.into());
        let tail = binomial_tail(&half, 6, mw.threshold);
        assert_eq!(cert.value(), tail * BigRational::from_integer(2.into()));
        assert_eq!(cert.g, 6 * inst.verifier.hadamard_count() as u64);
    }

    #[test]
    fn mixed_state_examples() {
        let r = mixed_state_acceptance(&qma("qubits 2", 1, 1)).unwrap();
        assert_eq!((r.direct, r.basis_average), (0.5, 0.5));
        // X on the output qubit of a zero-workspace verifier accepts every message half the time
        let r = mixed_state_acceptance(&qma("qubits 1\nH 0\nS 0\nS 0\nH 0", 1, 0)).unwrap();
        assert!((r.direct - 0.5).abs() < 1e-15);
    }
}
