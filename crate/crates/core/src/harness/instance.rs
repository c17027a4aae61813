use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::atomic_write;
use crate::amplification::{Label, Prob, QmaInstance, Thresholds};
use crate::circuit::parse_circuit;
use crate::error::{Error, Result};
use crate::qam::{coin_key, parse_coin_key, QamInstance};
use crate::qmam::QipInstance;

/// On-disk form, tagged by `type`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum InstanceFile {
    Qma {
        m: usize,
        k: usize,
        a: Prob,
        b: Prob,
        circuit: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<Label>,
        /// Target spectrum, re-measured after construction.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spectrum: Option<Vec<f64>>,
    },
    Qam {
        s: usize,
        m: usize,
        k: usize,
        a: Prob,
        b: Prob,
        circuits: BTreeMap<String, String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<Label>,
    },
    Qmam {
        k: usize,
        m: usize,
        epsilon: f64,
        v1: String,
        v2: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        honest_prover: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<Label>,
    },
}

/// Parsed instance of any protocol.
#[derive(Clone, Debug, PartialEq)]
pub enum Instance {
    Qma {
        inst: QmaInstance,
        spectrum: Option<Vec<f64>>,
    },
    Qam(QamInstance),
    Qmam(QipInstance),
}

impl Instance {
    pub fn protocol(&self) -> super::Protocol {
        match self {
            Instance::Qma { .. } => super::Protocol::Qma,
            Instance::Qam(_) => super::Protocol::Qam,
            Instance::Qmam(_) => super::Protocol::Qmam,
        }
    }

    pub fn label(&self) -> Option<Label> {
        match self {
            Instance::Qma { inst, .. } => inst.label,
            Instance::Qam(q) => q.label,
            Instance::Qmam(q) => q.label,
        }
    }

    pub fn to_file(&self) -> InstanceFile {
        match self {
            Instance::Qma { inst, spectrum } => InstanceFile::Qma {
                m: inst.m,
                k: inst.k,
                a: inst.thresholds.a.clone(),
                b: inst.thresholds.b.clone(),
                circuit: inst.verifier.to_text(),
                label: inst.label,
                spectrum: spectrum.clone(),
            },
            Instance::Qam(q) => InstanceFile::Qam {
                s: q.s,
                m: q.m,
                k: q.k,
                a: q.thresholds.a.clone(),
                b: q.thresholds.b.clone(),
                circuits: q
                    .family
                    .iter()
                    .enumerate()
                    .map(|(y, c)| (coin_key(y, q.s), c.to_text()))
                    .collect(),
                label: q.label,
            },
            Instance::Qmam(q) => InstanceFile::Qmam {
                k: q.k,
                m: q.m,
                epsilon: q.epsilon,
                v1: q.v1.to_text(),
                v2: q.v2.to_text(),
                honest_prover: q.honest_prover.as_ref().map(|c| c.to_text()),
                label: q.label,
            },
        }
    }

    pub fn from_file(f: InstanceFile) -> Result<Self> {
        Ok(match f {
            InstanceFile::Qma {
                m,
                k,
                a,
                b,
                circuit,
                label,
                spectrum,
            } => {
                let mut inst = QmaInstance::new(parse_circuit(&circuit)?, m, k, Thresholds::new(a, b)?)?;
                inst.label = label;
                Instance::Qma { inst, spectrum }
            }
            InstanceFile::Qam {
                s,
                m,
                k,
                a,
                b,
                circuits,
                label,
            } => {
                let mut family = vec![None; 1usize << s];
                for (key, text) in &circuits {
                    let y = parse_coin_key(key, s)?;
                    family[y] = Some(parse_circuit(text)?);
                }
                let family = family
                    .into_iter()
                    .enumerate()
                    .map(|(y, c)| c.ok_or_else(|| Error::MissingCoin(coin_key(y, s))))
                    .collect::<Result<Vec<_>>>()?;
                let mut q = QamInstance::new(s, m, k, family, Thresholds::new(a, b)?)?;
                q.label = label;
                Instance::Qam(q)
            }
            InstanceFile::Qmam {
                k,
                m,
                epsilon,
                v1,
                v2,
                honest_prover,
                label,
            } => {
                let mut q = QipInstance::new(parse_circuit(&v1)?, parse_circuit(&v2)?, k, m, epsilon)?;
                if let Some(w) = honest_prover {
                    q = q.with_honest_prover(parse_circuit(&w)?)?;
                }
                q.label = label;
                Instance::Qmam(q)
            }
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.to_json()?.as_bytes())
    }
}
