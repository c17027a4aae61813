//! One-message games: witness-preserving amplification, the copy-based
//! baseline, counting certificates and the totally-mixed-witness reduction.

mod amplify;
pub mod binomial;
mod certificate;
mod procedure_b;

pub use amplify::{amplify_kitaev, amplify_mw, threshold_tensor_sum, witness_acceptance, KitaevInstance, MwInstance};
pub use binomial::{analytic_acceptance, binomial_tail, multilinear_tail, success_count_distribution};
pub use certificate::{
    a0pp_check, amplified_certificate, counting_certificate, exact_trace_certificate,
    mixed_state_acceptance, GapCertificate, MixedStateAcceptance,
};
pub use procedure_b::{
    recurrence_residuals, run_procedure_b, sample_procedure_b, RecurrenceResiduals,
    SampledRun, TrajectoryDistribution, ENUMERATE_MAX_N,
};

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::circuit::{Circuit, Layout};
use crate::error::{Error, Result};
use crate::spectra::{acceptance_operator, HermitianMatrix};

/// Exact rational probability, serialized as `"p/q"` and parsed from either
/// such a string or a JSON number.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prob(pub BigRational);

impl Prob {
    pub fn new(num: i64, den: i64) -> Self {
        Prob(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn from_f64(v: f64) -> Option<Self> {
        BigRational::from_float(v).map(Prob)
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for Prob {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Thresholds(format!("cannot parse `{s}` as a probability"));
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            return Ok(Prob(BigRational::new(n, d)));
        }
        let v: f64 = s.parse().map_err(|_| bad())?;
        Prob::from_f64(v).ok_or_else(bad)
    }
}

impl Serialize for Prob {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Prob {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Prob::from_f64(v)
                .ok_or_else(|| serde::de::Error::custom(format!("bad probability {v}"))),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Completeness `a` and soundness `b` with `1 ≥ a > b ≥ 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    pub a: Prob,
    pub b: Prob,
}

impl Thresholds {
    pub fn new(a: Prob, b: Prob) -> Result<Self> {
        let t = Self { a, b };
        t.validate()?;
        Ok(t)
    }

    pub fn from_ratios(a: (i64, i64), b: (i64, i64)) -> Result<Self> {
        Self::new(Prob::new(a.0, a.1), Prob::new(b.0, b.1))
    }

    pub fn validate(&self) -> Result<()> {
        let (zero, one) = (BigRational::zero(), BigRational::one());
        let in_range = |p: &BigRational| *p >= zero && *p <= one;
        if !in_range(&self.a.0) || !in_range(&self.b.0) {
            return Err(Error::Thresholds(format!("a={} b={} outside [0,1]", self.a, self.b)));
        }
        if self.a.0 <= self.b.0 {
            return Err(Error::Thresholds(format!("need a > b, got a={} b={}", self.a, self.b)));
        }
        Ok(())
    }

    /// Smallest integer count `c` with `c ≥ n(a+b)/2`.
    pub fn count_threshold(&self, n: usize) -> usize {
        let x = (&self.a.0 + &self.b.0) * BigRational::from_integer(BigInt::from(n))
            / BigRational::from_integer(BigInt::from(2));
        let c = x.ceil().to_integer();
        if c.is_negative() {
            0
        } else {
            c.to_usize().expect("threshold fits in usize")
        }
    }

    /// Exact test `count ≥ n(a+b)/2`.
    pub fn accepts(&self, count: usize, n: usize) -> bool {
        count >= self.count_threshold(n)
    }

    /// Gap parameter `q = ⌈1/(a−b)⌉`, so that `a − b ≥ 1/q`.
    pub fn gap_q(&self) -> u64 {
        let gap = &self.a.0 - &self.b.0;
        let inv = gap.recip();
        inv.ceil().to_integer().to_u64().expect("gap fits in u64")
    }

    /// Midpoint `(a+b)/2` as a float.
    pub fn midpoint(&self) -> f64 {
        ((&self.a.0 + &self.b.0) / BigRational::from_integer(2.into()))
            .to_f64()
            .unwrap_or(f64::NAN)
    }
}

/// Ground truth recorded with generated instances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Yes,
    No,
}

/// Verifier `A` on `m` message qubits followed by `k` work qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct QmaInstance {
    pub verifier: Circuit,
    pub m: usize,
    pub k: usize,
    pub thresholds: Thresholds,
    pub label: Option<Label>,
}

impl QmaInstance {
    pub fn new(verifier: Circuit, m: usize, k: usize, thresholds: Thresholds) -> Result<Self> {
        if verifier.width() != m + k {
            return Err(Error::WidthMismatch {
                expected: m + k,
                actual: verifier.width(),
            });
        }
        thresholds.validate()?;
        let verifier = match verifier.layout() {
            Some(_) => verifier,
            None => verifier.with_layout(Layout::message_workspace(m, k))?,
        };
        Ok(Self {
            verifier,
            m,
            k,
            thresholds,
            label: None,
        })
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    pub fn width(&self) -> usize {
        self.m + self.k
    }

    pub fn acceptance_operator(&self, exact: bool) -> Result<HermitianMatrix> {
        acceptance_operator(&self.verifier, self.m, self.k, exact)
    }
}
