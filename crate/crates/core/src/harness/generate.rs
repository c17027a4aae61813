//! Seeded instance generators.

use std::fmt;
use std::str::FromStr;

use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Instance;
use crate::amplification::{Label, Prob, QmaInstance, Thresholds};
use crate::circuit::{width_caps, Circuit, Gate};
use crate::error::{Error, Result};
use crate::qam::QamInstance;
use crate::qmam::QipInstance;
use crate::rng::{seeded, SimRng};
use crate::spectra::acceptance_spectrum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    /// Verifier whose top eigenvalue is a requested target.
    QmaP,
    /// Verifier with a requested two-point spectrum on one message qubit.
    QmaDyadic,
    QmaRandom,
    /// Yes/no verifiers with spectra `{3/4, 1/4}` and `{1/4, 1/4}`.
    QmaPair,
    QamRandom,
    /// Coin families whose average error stays under a target.
    QamBounded,
    /// Proof system with an honest prover accepting with certainty.
    QipPerfect,
    /// Proof system whose maximum acceptance is exactly `epsilon`.
    QipNo,
    QipRandom,
}

pub const KINDS: [Kind; 9] = [
    Kind::QmaP,
    Kind::QmaDyadic,
    Kind::QmaRandom,
    Kind::QmaPair,
    Kind::QamRandom,
    Kind::QamBounded,
    Kind::QipPerfect,
    Kind::QipNo,
    Kind::QipRandom,
];

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::QmaP => "qma-p",
            Kind::QmaDyadic => "qma-dyadic",
            Kind::QmaRandom => "qma-random",
            Kind::QmaPair => "qma-pair",
            Kind::QamRandom => "qam-random",
            Kind::QamBounded => "qam-bounded",
            Kind::QipPerfect => "qip-perfect",
            Kind::QipNo => "qip-no",
            Kind::QipRandom => "qip-random",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        KINDS
            .iter()
            .find(|k| k.name() == s)
            .copied()
            .ok_or_else(|| Error::Config(format!("unknown instance kind `{s}`")))
    }
}

/// Size and target parameters; unset fields take per-kind defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenParams {
    pub m: Option<usize>,
    pub k: Option<usize>,
    pub s: Option<usize>,
    pub gates: Option<usize>,
    /// Top eigenvalue for `qma-p`.
    pub target: Option<Prob>,
    /// `(p0, p1)` for `qma-dyadic`.
    pub spectrum: Option<(Prob, Prob)>,
    /// Average error bound for `qam-bounded`.
    pub error: Option<Prob>,
    /// Soundness error for `qip-no`.
    pub epsilon: Option<Prob>,
    pub label: Option<Label>,
    pub a: Option<Prob>,
    pub b: Option<Prob>,
}

pub fn generate_instance(kind: Kind, seed: u64, p: &GenParams) -> Result<Instance> {
    let mut rng = seeded(seed);
    let inst = match kind {
        Kind::QmaP => gen_qma_p(p, &mut rng)?,
        Kind::QmaDyadic => gen_qma_dyadic(p, &mut rng)?,
        Kind::QmaRandom => gen_qma_random(p, &mut rng)?,
        Kind::QmaPair => gen_qma_pair(p, &mut rng)?,
        Kind::QamRandom => gen_qam_random(p, &mut rng)?,
        Kind::QamBounded => gen_qam_bounded(p, &mut rng)?,
        Kind::QipPerfect => gen_qip_perfect(p, &mut rng)?,
        Kind::QipNo => gen_qip_no(p, &mut rng)?,
        Kind::QipRandom => gen_qip_random(p, &mut rng)?,
    };
    check_width(&inst)?;
    Ok(inst)
}

fn check_width(inst: &Instance) -> Result<()> {
    let (cap, _) = width_caps();
    let w = match inst {
        Instance::Qma { inst, .. } => inst.width(),
        Instance::Qam(q) => q.m + q.k,
        Instance::Qmam(q) => 2 * (q.k + q.m),
    };
    if w > cap {
        return Err(Error::CapExceeded {
            what: "generated width",
            requested: w,
            cap,
        });
    }
    Ok(())
}

/// Uniformly random H/S/Toffoli sequence; Toffolis only when `width ≥ 3`.
pub fn random_circuit(width: usize, gates: usize, rng: &mut impl Rng) -> Result<Circuit> {
    let mut c = Circuit::new(width);
    if width == 0 {
        return Ok(c);
    }
    let kinds = if width >= 3 { 3 } else { 2 };
    for _ in 0..gates {
        let g = match rng.random_range(0..kinds) {
            0 => Gate::H(rng.random_range(0..width)),
            1 => Gate::S(rng.random_range(0..width)),
            _ => {
                let mut qs: Vec<usize> = (0..width).collect();
                qs.shuffle(rng);
                Gate::T(qs[0], qs[1], qs[2])
            }
        };
        c.push(g)?;
    }
    Ok(c)
}

/// Random H/S word on `q`, used to rotate a message qubit's basis.
fn scramble(c: &mut Circuit, q: usize, rng: &mut impl Rng) -> Result<()> {
    for _ in 0..rng.random_range(2..8) {
        if rng.random_bool(0.5) {
            c.h(q)?;
        } else {
            c.s(q)?;
        }
    }
    Ok(())
}

fn thresholds(p: &GenParams, a: (i64, i64), b: (i64, i64)) -> Result<Thresholds> {
    Thresholds::new(
        p.a.clone().unwrap_or_else(|| Prob::new(a.0, a.1)),
        p.b.clone().unwrap_or_else(|| Prob::new(b.0, b.1)),
    )
}

/// Eigenvalues of `Q`, descending.
fn measured_spectrum(inst: &QmaInstance) -> Result<Vec<f64>> {
    Ok(acceptance_spectrum(&inst.acceptance_operator(false)?)?.eigenvalues)
}

fn label_from_top(inst: &QmaInstance, top: f64) -> Option<Label> {
    let t = &inst.thresholds;
    if top >= t.a.to_f64() - 1e-12 {
        Some(Label::Yes)
    } else if top <= t.b.to_f64() + 1e-12 {
        Some(Label::No)
    } else {
        None
    }
}

fn finish_qma(mut inst: QmaInstance, label: Option<Label>) -> Result<Instance> {
    let spectrum = measured_spectrum(&inst)?;
    inst.label = label.or_else(|| label_from_top(&inst, spectrum[0]));
    Ok(Instance::Qma {
        inst,
        spectrum: Some(spectrum),
    })
}

/// Quarter-dyadic probability as a count out of 4.
fn quarters(p: &Prob) -> Option<u8> {
    let x = &p.0 * num_rational::BigRational::from_integer(4.into());
    if x.is_integer() {
        x.to_integer().to_u8().filter(|&q| q <= 4)
    } else {
        None
    }
}

/// Spectra reachable by [`dyadic_verifier`], in quarters.
fn reachable(p0: u8, p1: u8) -> bool {
    let half = |x: u8| x.is_multiple_of(2);
    (half(p0) && half(p1)) || (!half(p0) && !half(p1))
}

/// Verifier on `m` message and `k ≥ 3` work qubits with
/// `Q = diag(p0/4, p1/4) ⊗ I` before scrambling.
///
/// The first message qubit is moved into work qubit `t`, two work qubits
/// `w1, w2` are put in uniform superposition and the output qubit receives
/// `g_t(w)` where `g_1 = g_0 ⊕ h` with `h` affine, so that at most two
/// controls are ever needed.
fn dyadic_verifier(m: usize, k: usize, p0: u8, p1: u8, rng: &mut impl Rng) -> Result<Circuit> {
    if k < 3 {
        return Err(Error::Config(format!("dyadic verifier needs k ≥ 3, got {k}")));
    }
    if p0 > 4 || p1 > 4 || !reachable(p0, p1) {
        return Err(Error::Config(format!(
            "spectrum ({p0}/4, {p1}/4) is not reachable with two uniform bits"
        )));
    }
    // ANF over (1, w1, w2, w1w2) for g0 and (1, w1, w2) for h
    let weight = |anf: [bool; 4]| {
        (0..4u8)
            .filter(|w| {
                let (a, b) = (w & 1 == 1, w & 2 == 2);
                anf[0] ^ (anf[1] & a) ^ (anf[2] & b) ^ (anf[3] & a & b)
            })
            .count() as u8
    };
    let bits = |x: u8, n: usize| -> Vec<bool> { (0..n).map(|i| x >> i & 1 == 1).collect() };
    let mut choices = Vec::new();
    for g in 0..16u8 {
        let g0 = bits(g, 4);
        for h in 0..8u8 {
            let h = bits(h, 3);
            let g1 = [g0[0] ^ h[0], g0[1] ^ h[1], g0[2] ^ h[2], g0[3]];
            if weight([g0[0], g0[1], g0[2], g0[3]]) == p0 && weight(g1) == p1 {
                choices.push((g0.clone(), h));
            }
        }
    }
    let (g0, h) = choices[rng.random_range(0..choices.len())].clone();
    let (q0, w1, w2, t) = (0, m, m + 1, m + 2);
    let mut c = Circuit::new(m + k);
    c.cnot(q0, t)?.cnot(t, q0)?.h(w1)?.h(w2)?;
    if g0[0] {
        c.x(q0)?;
    }
    if g0[1] {
        c.cnot(w1, q0)?;
    }
    if g0[2] {
        c.cnot(w2, q0)?;
    }
    if g0[3] {
        c.toffoli(w1, w2, q0)?;
    }
    if h[0] {
        c.cnot(t, q0)?;
    }
    if h[1] {
        c.toffoli(t, w1, q0)?;
    }
    if h[2] {
        c.toffoli(t, w2, q0)?;
    }
    Ok(c)
}

fn scrambled_dyadic(m: usize, k: usize, p0: u8, p1: u8, rng: &mut impl Rng) -> Result<Circuit> {
    let mut c = Circuit::new(m + k);
    scramble(&mut c, 0, rng)?;
    c.append(&dyadic_verifier(m, k, p0, p1, rng)?)?;
    Ok(c)
}

fn gen_qma_p(p: &GenParams, rng: &mut SimRng) -> Result<Instance> {
    let (m, k) = (p.m.unwrap_or(1), p.k.unwrap_or(2));
    let target = p.target.clone().unwrap_or_else(|| Prob::new(1, 2));
    let th = thresholds(p, (2, 3), (1, 3))?;
    let unreachable = || Error::Config(format!("target {target} is not reachable with m={m}, k={k}"));
    if m == 0 {
        return Err(unreachable());
    }
    let c = if target == Prob::new(1, 2) && k == 2 {
        // one Hadamard: the output flips with probability ½ whatever the message
        let mut c = Circuit::new(m + k);
        c.h(m)?.cnot(m, 0)?;
        c
    } else {
        let q = quarters(&target).ok_or_else(unreachable)?;
        if k < 3 {
            return Err(unreachable());
        }
        let lower: Vec<u8> = (0..=q).filter(|&x| reachable(q, x)).collect();
        let p1 = lower[rng.random_range(0..lower.len())];
        scrambled_dyadic(m, k, q, p1, rng)?
    };
    let inst = QmaInstance::new(c, m, k, th)?;
    let spectrum = measured_spectrum(&inst)?;
    if (spectrum[0] - target.to_f64()).abs() > 1e-9 {
        return Err(unreachable());
    }
    finish_qma(inst, p.label)
}

fn gen_qma_dyadic(p: &GenParams, rng: &mut SimRng) -> Result<Instance> {
    let (m, k) = (p.m.unwrap_or(1), p.k.unwrap_or(3));
    let (p0, p1) = match &p.spectrum {
        Some((a, b)) => {
            let bad = || Error::Config(format!("spectrum ({a}, {b}) is not quarter-dyadic"));
            (quarters(a).ok_or_else(bad)?, quarters(b).ok_or_else(bad)?)
        }
        None => loop {
            let (a, b) = (rng.random_range(0..=4u8), rng.random_range(0..=4u8));
            if reachable(a, b) {
                break (a, b);
            }
        },
    };
    let inst = QmaInstance::new(scrambled_dyadic(m, k, p0, p1, rng)?, m, k, thresholds(p, (2, 3), (1, 3))?)?;
    finish_qma(inst, p.label)
}

fn gen_qma_random(p: &GenParams, rng: &mut SimRng) -> Result<Instance> {
    let (m, k) = (p.m.unwrap_or(1), p.k.unwrap_or(2));
    let gates = p.gates.unwrap_or(4 * (m + k));
    let inst = QmaInstance::new(random_circuit(m + k, gates, rng)?, m, k, thresholds(p, (2, 3), (1, 3))?)?;
    finish_qma(inst, p.label)
}

fn gen_qma_pair(p: &GenParams, rng: &mut SimRng) -> Result<Instance> {
    let (m, k) = (p.m.unwrap_or(1), p.k.unwrap_or(3));
    let label = p.label.unwrap_or(Label::Yes);
    let (p0, p1) = match label {
        Label::Yes => (3, 1),
        Label::No => (1, 1),
    };
    let th = Thresholds::from_ratios((3, 4), (1, 4))?;
    let inst = QmaInstance::new(scrambled_dyadic(m, k, p0, p1, rng)?, m, k, th)?;
    finish_qma(inst, Some(label))
}

fn gen_qam_random(p: &GenParams, rng: &mut SimRng) -> Result<Instance> {
    let (s, m, k) = (p.s.unwrap_or(1), p.m.unwrap_or(1), p.k.unwrap_or(2));
    let gates = p.gates.unwrap_or(4 * (m + k));
    let family = (0..1usize << s)
        .map(|_| random_circuit(m + k, gates, rng))
        .collect::<Result<Vec<_>>>()?;
    let mut q = QamInstance::new(s, m, k, family, thresholds(p, (2, 3), (1, 3))?)?;
    q.label = p.label;
    Ok(Instance::Qam(q))
}

/// Coin spectra (in quarters) with top eigenvalue `mu`.
fn spectra_with_top(mu: u8) -> Vec<(u8, u8)> {
    let mut out = Vec::new();
    for x in 0..=mu {
        if reachable(mu, x) {
            out.push((mu, x));
            if x != mu {
                out.push((x, mu));
            }
        }
    }
    out
}

fn gen_qam_bounded(p: &GenParams, rng: &mut SimRng) -> Result<Instance> {
    let s = p.s.unwrap_or(3);
    let (m, k) = (1, 3);
    let label = p.label.unwrap_or(Label::Yes);
    let error = p.error.clone().unwrap_or_else(|| Prob::new(1, 9));
    if error.0 >= Prob::new(1, 2).0 || error.0 < Prob::new(0, 1).0 {
        return Err(Error::Config(format!("error bound {error} must lie in [0, 1/2)")));
    }
    let coins = 1usize << s;
    // error budget in quarters summed over coins
    let budget = (&error.0 * num_rational::BigRational::from_integer((4 * coins).into()))
        .floor()
        .to_integer()
        .to_u64()
        .unwrap_or(0);
    let (perfect, degraded): (u8, [u8; 2]) = match label {
        Label::Yes => (4, [3, 2]),
        Label::No => (0, [1, 2]),
    };
    let cost = |mu: u8| (mu as i64 - perfect as i64).unsigned_abs();
    let mut mu = vec![perfect; coins];
    let mut order: Vec<usize> = (0..coins).collect();
    order.shuffle(rng);
    let mut spent = 0;
    for y in order {
        if rng.random_bool(0.5) {
            let cand = degraded[rng.random_range(0..2)];
            if spent + cost(cand) <= budget {
                spent += cost(cand);
                mu[y] = cand;
            }
        }
    }
    let family = mu
        .iter()
        .map(|&top| {
            let opts = spectra_with_top(top);
            let (p0, p1) = opts[rng.random_range(0..opts.len())];
            scrambled_dyadic(m, k, p0, p1, rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let one = Prob::new(1, 1);
    let th = Thresholds::new(Prob(&one.0 - &error.0), error)?;
    Ok(Instance::Qam(QamInstance::new(s, m, k, family, th)?.with_label(label)))
}

fn gen_qip_perfect(p: &GenParams, rng: &mut SimRng) -> Result<Instance> {
    let (k, m) = (p.k.unwrap_or(1), p.m.unwrap_or(1));
    let gates = p.gates.unwrap_or(4 * (k + m));
    let v1 = random_circuit(k + m, gates, rng)?;
    let w = random_circuit(m, gates.div_ceil(2), rng)?;
    let mut v2 = Circuit::new(k + m);
    v2.append_at(&w, k)?.append(&v1.dagger())?.x(0)?;
    let q = QipInstance::new(v1, v2, k, m, 1.0)?
        .with_honest_prover(w.dagger())?
        .with_label(Label::Yes);
    Ok(Instance::Qmam(q))
}

/// Circuit `C` on `k` qubits with `Pr[C|0…0> gives 1 on qubit 0] = ε`.
fn epsilon_circuit(eps: &Prob, k: usize) -> Result<Circuit> {
    let bad = || Error::Config(format!("epsilon {eps} with k={k} has no construction; use 0, 1/2 (k ≥ 1) or 1/4, 1/16 (k ≥ 3)"));
    let mut c = Circuit::new(k);
    if *eps == Prob::new(0, 1) {
    } else if *eps == Prob::new(1, 2) {
        c.h(0)?;
    } else if *eps == Prob::new(1, 4) && k >= 3 {
        c.h(1)?.h(2)?.toffoli(1, 2, 0)?;
    } else if *eps == Prob::new(1, 16) && k >= 3 {
        c.h(0)?
            .h(1)?
            .toffoli(0, 1, 2)?
            .h(0)?
            .toffoli(0, 2, 1)?
            .toffoli(0, 1, 2)?
            .h(1)?
            .toffoli(1, 2, 0)?;
    } else {
        return Err(bad());
    }
    Ok(c)
}

fn gen_qip_no(p: &GenParams, rng: &mut SimRng) -> Result<Instance> {
    let eps = p.epsilon.clone().unwrap_or_else(|| Prob::new(1, 4));
    let small = eps == Prob::new(0, 1) || eps == Prob::new(1, 2);
    let (k, m) = (p.k.unwrap_or(if small { 1 } else { 3 }), p.m.unwrap_or(1));
    let c = epsilon_circuit(&eps, k)?;
    let r = random_circuit(k, p.gates.unwrap_or(3 * k), rng)?;
    let v1 = r.embed(k + m, 0)?;
    let mut v2 = r.dagger().embed(k + m, 0)?;
    v2.append_at(&c, 0)?;
    let q = QipInstance::new(v1, v2, k, m, eps.to_f64())?.with_label(Label::No);
    Ok(Instance::Qmam(q))
}

fn gen_qip_random(p: &GenParams, rng: &mut SimRng) -> Result<Instance> {
    let (k, m) = (p.k.unwrap_or(1), p.m.unwrap_or(1));
    let gates = p.gates.unwrap_or(4 * (k + m));
    let v1 = random_circuit(k + m, gates, rng)?;
    let v2 = random_circuit(k + m, gates, rng)?;
    let mut q = QipInstance::new(v1, v2, k, m, 1.0)?;
    q.label = p.label;
    Ok(Instance::Qmam(q))
}
