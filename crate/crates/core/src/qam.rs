//! Two-message games where Arthur's coins come first.
//!
//! The repeated game is handled spectrally: every coin string contributes
//! its pair `(Q^{(0)}_y, Q^{(1)}_y)` and the `N`-fold threshold game is the
//! tensor sum over agreement patterns.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplification::{
    amplified_certificate, amplify_mw, multilinear_tail, threshold_tensor_sum, GapCertificate, Label,
    QmaInstance, Thresholds, binomial::TailScalar,
};
use crate::circuit::{apply_circuit, Circuit, FloatState, Layout};
use crate::error::{Error, Result};
use crate::linalg::{dot, eig_hermitian, CMatrix};
use crate::rng::seeded;
use crate::spectra::{acceptance_spectrum, HermitianMatrix, CLAMP_TOL, EIGEN_DIM_CAP};

/// Coin count above which the Markov check samples coin strings.
pub const EXHAUSTIVE_COIN_CAP: usize = 12;

/// Family `{A_y}` indexed by coin strings of length `s`.
///
/// `family[y]` is the verifier for the coin string whose first character is
/// the most significant bit of `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct QamInstance {
    pub s: usize,
    pub m: usize,
    pub k: usize,
    pub family: Vec<Circuit>,
    pub thresholds: Thresholds,
    pub label: Option<Label>,
}

/// Renders coin index `y` as an `s`-character bitstring.
pub fn coin_key(y: usize, s: usize) -> String {
    (0..s).map(|i| if y >> (s - 1 - i) & 1 == 1 { '1' } else { '0' }).collect()
}

/// Inverse of [`coin_key`].
pub fn parse_coin_key(key: &str, s: usize) -> Result<usize> {
    if key.len() != s || !key.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(Error::Instance(format!("coin string `{key}` is not {s} bits")));
    }
    Ok(key.bytes().fold(0, |acc, b| acc << 1 | (b - b'0') as usize))
}

impl QamInstance {
    pub fn new(s: usize, m: usize, k: usize, family: Vec<Circuit>, thresholds: Thresholds) -> Result<Self> {
        if family.len() != 1 << s {
            return Err(Error::Instance(format!(
                "{} circuits for {} coin strings",
                family.len(),
                1usize << s
            )));
        }
        thresholds.validate()?;
        let family = family
            .into_iter()
            .map(|c| {
                if c.width() != m + k {
                    return Err(Error::WidthMismatch {
                        expected: m + k,
                        actual: c.width(),
                    });
                }
                match c.layout() {
                    Some(_) => Ok(c),
                    None => c.with_layout(Layout::message_workspace(m, k)),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            s,
            m,
            k,
            family,
            thresholds,
            label: None,
        })
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    pub fn coins(&self) -> usize {
        self.family.len()
    }

    /// Coin `y` viewed as a one-message game.
    pub fn coin_game(&self, y: usize) -> Result<QmaInstance> {
        QmaInstance::new(self.family[y].clone(), self.m, self.k, self.thresholds.clone())
    }

    /// `Q^{(1)}_y` for every coin, in coin order.
    pub fn coin_operators(&self, exact: bool) -> Result<Vec<HermitianMatrix>> {
        (0..self.coins())
            .into_par_iter()
            .map(|y| self.coin_game(y)?.acceptance_operator(exact))
            .collect()
    }
}

/// Paired spectra of `Q^{(1)}_y` (descending) and `Q^{(0)}_y` (ascending).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoinSpectrum {
    pub y: String,
    pub p1: Vec<f64>,
    pub p0: Vec<f64>,
}

impl CoinSpectrum {
    /// `μ(A_y)`.
    pub fn top(&self) -> f64 {
        self.p1[0]
    }

    /// `max_i |p⁰_i + p¹_i − 1|`.
    pub fn pairing_residual(&self) -> f64 {
        self.p1
            .iter()
            .zip(&self.p0)
            .map(|(a, b)| (a + b - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

pub fn coin_spectra(inst: &QamInstance) -> Result<Vec<CoinSpectrum>> {
    let ops = inst.coin_operators(false)?;
    ops.par_iter()
        .enumerate()
        .map(|(y, q1)| {
            let p1 = acceptance_spectrum(q1)?.eigenvalues;
            let mut p0 = acceptance_spectrum(&q1.complement())?.eigenvalues;
            p0.reverse();
            Ok(CoinSpectrum {
                y: coin_key(y, inst.s),
                p1,
                p0,
            })
        })
        .collect()
}

/// `2^{-s} Σ_y ψ_y† Q_y ψ_y` for a strategy keyed by coin string.
pub fn qam_value(inst: &QamInstance, strategy: &BTreeMap<String, FloatState>) -> Result<f64> {
    let ops = inst.coin_operators(false)?;
    let mut total = 0.0;
    for (y, q) in ops.iter().enumerate() {
        let key = coin_key(y, inst.s);
        let w = strategy.get(&key).ok_or_else(|| Error::MissingCoin(key.clone()))?;
        if w.num_qubits() != inst.m {
            return Err(Error::WidthMismatch {
                expected: inst.m,
                actual: w.num_qubits(),
            });
        }
        w.check_normalized(1e-9)?;
        total += q.expectation(w.amplitudes()).clamp(0.0, 1.0);
    }
    Ok(total / ops.len() as f64)
}

/// Same value by running each coin's circuit and measuring its output.
pub fn simulated_qam_value(inst: &QamInstance, strategy: &BTreeMap<String, FloatState>) -> Result<f64> {
    let mut total = 0.0;
    for (y, c) in inst.family.iter().enumerate() {
        let key = coin_key(y, inst.s);
        let w = strategy.get(&key).ok_or(Error::MissingCoin(key))?;
        let input = w.tensor(&FloatState::zero_state(inst.k)?)?;
        let out = apply_circuit(&input, c)?;
        total += crate::circuit::measure_projector(&out, crate::circuit::Projector::FIRST_QUBIT_ONE)?
            .prob_1
            .re;
    }
    Ok(total / inst.coins() as f64)
}

/// `2^{-s} Σ_y μ(A_y)`.
pub fn optimal_qam_value(inst: &QamInstance) -> Result<f64> {
    let spectra = coin_spectra(inst)?;
    Ok(spectra.iter().map(CoinSpectrum::top).sum::<f64>() / spectra.len() as f64)
}

/// Top-eigenvector strategy for every coin.
pub fn optimal_strategy(inst: &QamInstance) -> Result<BTreeMap<String, FloatState>> {
    let ops = inst.coin_operators(false)?;
    ops.iter()
        .enumerate()
        .map(|(y, q)| {
            let v = acceptance_spectrum(q)?.eigenvector(0);
            Ok((coin_key(y, inst.s), FloatState::from_amplitudes(v)?))
        })
        .collect()
}

/// `f(X₁…X_N)` summed over agreement patterns reaching `threshold`.
pub fn multilinear_f<T: TailScalar>(xs: &[T], threshold: usize) -> T {
    multilinear_tail(xs, threshold)
}

/// Outcome of comparing the repeated game's optimum with independent play.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepetitionValue {
    pub n: usize,
    pub threshold: usize,
    pub lambda_max: f64,
    pub independent_value: f64,
    /// Largest `|v†Mv − f(p_{i₁},…)|` over product eigenvectors `v`.
    pub lattice_residual: f64,
    /// Maximum of `f` over the eigenvalue lattice.
    pub lattice_max: f64,
}

impl RepetitionValue {
    pub fn residual(&self) -> f64 {
        (self.lambda_max - self.independent_value).abs()
    }

    /// The lattice maximum sits at the all-top corner.
    pub fn corner_is_max(&self, tol: f64) -> bool {
        self.lattice_max <= self.independent_value + tol
    }
}

/// Tensor-sum optimum versus `f` at the top eigenvalues for coins `ys`.
pub fn parallel_repetition_value(inst: &QamInstance, ys: &[usize]) -> Result<RepetitionValue> {
    let n = ys.len();
    let dim = 1usize.checked_shl((n * inst.m) as u32).unwrap_or(usize::MAX);
    if n == 0 || dim > EIGEN_DIM_CAP {
        return Err(Error::CapExceeded {
            what: "repetition dimension",
            requested: dim,
            cap: EIGEN_DIM_CAP,
        });
    }
    if let Some(&y) = ys.iter().find(|&&y| y >= inst.coins()) {
        return Err(Error::MissingCoin(format!("{y}")));
    }
    let threshold = inst.thresholds.count_threshold(n);
    let ops = inst.coin_operators(false)?;
    let pairs: Vec<(CMatrix, CMatrix)> = ys
        .iter()
        .map(|&y| (ops[y].complement().matrix().clone(), ops[y].matrix().clone()))
        .collect();
    let big = threshold_tensor_sum(&pairs, threshold)?;
    let lambda_max = eig_hermitian(&big)?.values[0];

    let spectra: Vec<_> = ys
        .iter()
        .map(|&y| acceptance_spectrum(&ops[y]))
        .collect::<Result<_>>()?;
    let tops: Vec<f64> = spectra.iter().map(|s| s.eigenvalues[0]).collect();
    let independent_value = multilinear_f(&tops, threshold);

    let d = 1usize << inst.m;
    let mut lattice_residual: f64 = 0.0;
    let mut lattice_max = f64::NEG_INFINITY;
    for flat in 0..d.pow(n as u32) {
        let idx: Vec<usize> = (0..n).map(|j| flat / d.pow((n - 1 - j) as u32) % d).collect();
        let ps: Vec<f64> = idx.iter().zip(&spectra).map(|(&i, s)| s.eigenvalues[i]).collect();
        let f = multilinear_f(&ps, threshold);
        lattice_max = lattice_max.max(f);
        let mut v = vec![Complex64::one()];
        for (&i, s) in idx.iter().zip(&spectra) {
            let e = s.eigenvector(i);
            v = v.iter().flat_map(|a| e.iter().map(move |b| a * b)).collect();
        }
        let q = dot(&v, &big.matvec(&v)).re;
        lattice_residual = lattice_residual.max((q - f).abs());
    }
    Ok(RepetitionValue {
        n,
        threshold,
        lambda_max,
        independent_value,
        lattice_residual,
        lattice_max,
    })
}

/// Acceptance of the repeated game run as one circuit on `N(m+k)` qubits.
///
/// The joint witness lives on the `N·m` message qubits in copy order; the
/// game accepts when at least `threshold` output qubits read 1.
pub fn repetition_circuit_acceptance(inst: &QamInstance, ys: &[usize], witness: &FloatState) -> Result<f64> {
    let n = ys.len();
    let block = inst.m + inst.k;
    if witness.num_qubits() != n * inst.m {
        return Err(Error::WidthMismatch {
            expected: n * inst.m,
            actual: witness.num_qubits(),
        });
    }
    let width = n * block;
    let mut big = Circuit::new(width);
    for (i, &y) in ys.iter().enumerate() {
        big.append_at(&inst.family[y], i * block)?;
    }
    let mut amps = vec![Complex64::zero(); 1 << width];
    for (j, a) in witness.amplitudes().iter().enumerate() {
        // spread each copy's m message bits to the head of its block
        let mut idx = 0usize;
        for c in 0..n {
            let bits = (j >> ((n - 1 - c) * inst.m)) & ((1 << inst.m) - 1);
            idx |= bits << ((n - 1 - c) * block + inst.k);
        }
        amps[idx] = *a;
    }
    let out = apply_circuit(&FloatState::from_amplitudes(amps)?, &big)?;
    let threshold = inst.thresholds.count_threshold(n);
    let outputs: Vec<usize> = (0..n).map(|c| 1usize << (width - 1 - c * block)).collect();
    Ok(out
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| outputs.iter().filter(|&&b| i & b != 0).count() >= threshold)
        .map(|(_, a)| a.norm_sqr())
        .sum())
}

/// Result of the 2/3-fraction test on a μ table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovReport {
    pub truth: Label,
    pub mu: Vec<f64>,
    /// `E[1 − μ]` for yes-instances, `E[μ]` for no-instances.
    pub expected_error: f64,
    pub precondition_ok: bool,
    pub good: usize,
    pub total: usize,
    pub fraction_good: f64,
    pub passes: bool,
}

/// Counts good coins: `3μ ≥ 2` (yes) or `3μ ≤ 1` (no), with `slack`.
fn count_good<T: TailScalar>(mu: &[T], truth: Label, slack: &T) -> (usize, T) {
    let one = T::one();
    let two = one.clone() + &one;
    let three = two.clone() + &one;
    let mut err_sum = T::zero();
    let mut good = 0;
    for u in mu {
        let three_mu = three.clone() * u;
        let ok = match truth {
            Label::Yes => three_mu.clone() + slack >= two,
            Label::No => three_mu.clone() - slack <= one,
        };
        good += ok as usize;
        err_sum = err_sum
            + &match truth {
                Label::Yes => one.clone() - u,
                Label::No => u.clone(),
            };
    }
    (good, err_sum)
}

fn markov_report(mu: Vec<f64>, truth: Label) -> MarkovReport {
    let total = mu.len();
    let (good, err_sum) = count_good(&mu, truth, &CLAMP_TOL);
    let expected_error = err_sum / total as f64;
    MarkovReport {
        truth,
        expected_error,
        precondition_ok: expected_error <= 1.0 / 9.0 + CLAMP_TOL,
        good,
        total,
        fraction_good: good as f64 / total as f64,
        passes: 3 * good >= 2 * total,
        mu,
    }
}

/// Exhaustive over coins up to [`EXHAUSTIVE_COIN_CAP`], sampled beyond.
pub fn markov_check(inst: &QamInstance, truth: Label) -> Result<MarkovReport> {
    if inst.s > EXHAUSTIVE_COIN_CAP {
        return markov_check_sampled(inst, truth, 0);
    }
    let spectra = coin_spectra(inst)?;
    Ok(markov_report(spectra.iter().map(CoinSpectrum::top).collect(), truth))
}

/// Markov check on `64·s` seeded coin strings.
pub fn markov_check_sampled(inst: &QamInstance, truth: Label, seed: u64) -> Result<MarkovReport> {
    let mut rng = seeded(seed);
    let ys: Vec<usize> = (0..64 * inst.s.max(1)).map(|_| rng.random_range(0..inst.coins())).collect();
    let mu = ys
        .par_iter()
        .map(|&y| Ok(acceptance_spectrum(&inst.coin_game(y)?.acceptance_operator(false)?)?.eigenvalues[0]))
        .collect::<Result<Vec<f64>>>()?;
    Ok(markov_report(mu, truth))
}

/// Exact Markov test on a rational μ table.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactMarkov {
    pub expected_error: BigRational,
    pub precondition_ok: bool,
    pub fraction_good: BigRational,
    pub passes: bool,
}

pub fn markov_fraction_exact(mu: &[BigRational], truth: Label) -> ExactMarkov {
    let total = BigInt::from(mu.len());
    let (good, err_sum) = count_good(mu, truth, &BigRational::zero());
    let expected_error = err_sum / BigRational::from_integer(total.clone());
    let fraction_good = BigRational::new(BigInt::from(good), total);
    ExactMarkov {
        precondition_ok: expected_error <= BigRational::new(1.into(), 9.into()),
        passes: fraction_good >= BigRational::new(2.into(), 3.into()),
        expected_error,
        fraction_good,
    }
}

/// μ table with `E[1−μ] = 1/9` exactly and as many coins as possible
/// pushed just below `2/3`.
///
/// With `2^s` coins, `c = ⌊2^s/3⌋` bad coins each carry error
/// `2^s / (9c)`, which exceeds `1/3`; the rest accept with certainty.
pub fn markov_boundary_table(s: u32) -> Vec<BigRational> {
    let n = 1usize << s;
    let c = n / 3;
    let mut mu = vec![BigRational::one(); n];
    if c == 0 {
        return mu;
    }
    let z = BigRational::new(BigInt::from(n), BigInt::from(9 * c));
    for u in mu.iter_mut().take(c) {
        *u = BigRational::one() - &z;
    }
    mu
}

/// K-membership requirement induced by `μ(A_y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Requirement {
    In,
    Out,
    Indeterminate,
}

/// Per-coin PP certificate of the amplified coin game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoinCertificate {
    pub y: String,
    pub mu: f64,
    pub requirement: Requirement,
    pub certificate: GapCertificate,
    /// `2h > 2^g`.
    pub in_k: bool,
}

impl CoinCertificate {
    pub fn consistent(&self) -> bool {
        match self.requirement {
            Requirement::In => self.in_k,
            Requirement::Out => !self.in_k,
            Requirement::Indeterminate => true,
        }
    }
}

/// Amplification exponent making the trace test sound: `r = m + 2`.
pub fn bp_pp_conditions(inst: &QamInstance) -> Result<Vec<CoinCertificate>> {
    let coin_thresholds = Thresholds::from_ratios((2, 3), (1, 3))?;
    (0..inst.coins())
        .into_par_iter()
        .map(|y| {
            let game = QmaInstance::new(inst.family[y].clone(), inst.m, inst.k, coin_thresholds.clone())?;
            let mu = acceptance_spectrum(&game.acceptance_operator(false)?)?.eigenvalues[0];
            let mw = amplify_mw(&game, inst.m as u32 + 2)?;
            let certificate = amplified_certificate(&mw)?;
            let in_k = certificate.decision_value() > BigInt::zero();
            let requirement = if mu >= 2.0 / 3.0 - CLAMP_TOL {
                Requirement::In
            } else if mu <= 1.0 / 3.0 + CLAMP_TOL {
                Requirement::Out
            } else {
                Requirement::Indeterminate
            };
            Ok(CoinCertificate {
                y: coin_key(y, inst.s),
                mu,
                requirement,
                certificate,
                in_k,
            })
        })
        .collect()
}
