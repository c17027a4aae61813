//! Circuits over the Toffoli / Hadamard / i-shift gate set.
//!
//! Qubit 0 is the most significant bit of a basis index. The canonical layout
//! puts message qubits first and workspace after them.

mod state;

pub use state::{
    apply_circuit, measure_projector, measure_renormalized, project, unitary_matrix, Amplitude,
    FloatState, Measurement, Projector, StateVector,
};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const DEFAULT_FLOAT_WIDTH_CAP: usize = 14;
pub const DEFAULT_EXACT_WIDTH_CAP: usize = 10;

/// Width caps for dense simulation as `(float, exact)`.
///
/// `QAMG_WIDTH_CAP` overrides both: either a single number or `float,exact`.
pub fn width_caps() -> (usize, usize) {
    let default = (DEFAULT_FLOAT_WIDTH_CAP, DEFAULT_EXACT_WIDTH_CAP);
    let Ok(raw) = std::env::var("QAMG_WIDTH_CAP") else {
        return default;
    };
    let parts: Vec<_> = raw.split(',').map(|p| p.trim().parse::<usize>()).collect();
    match parts.as_slice() {
        [Ok(n)] => (*n, *n),
        [Ok(f), Ok(e)] => (*f, *e),
        _ => default,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    /// Hadamard.
    H(usize),
    /// i-shift: |0> -> |0>, |1> -> i|1>.
    S(usize),
    /// Toffoli with controls `.0`, `.1` and target `.2`.
    T(usize, usize, usize),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::S(q) => vec![q],
            Gate::T(a, b, c) => vec![a, b, c],
        }
    }

    fn validate(&self, width: usize) -> std::result::Result<(), String> {
        let qs = self.qubits();
        if let Some(q) = qs.iter().find(|&&q| q >= width) {
            return Err(format!("qubit index {q} out of range for width {width}"));
        }
        if let Gate::T(a, b, c) = *self {
            if a == b || a == c || b == c {
                return Err(format!("duplicate Toffoli index in T {a} {b} {c}"));
            }
        }
        Ok(())
    }

    fn relabel(&self, map: &[usize]) -> Gate {
        match *self {
            Gate::H(q) => Gate::H(map[q]),
            Gate::S(q) => Gate::S(map[q]),
            Gate::T(a, b, c) => Gate::T(map[a], map[b], map[c]),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::H(q) => write!(f, "H {q}"),
            Gate::S(q) => write!(f, "S {q}"),
            Gate::T(a, b, c) => write!(f, "T {a} {b} {c}"),
        }
    }
}

/// A named contiguous block of qubits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub len: usize,
}

/// Register partition of a circuit's qubits, in order from qubit 0.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Layout {
    pub registers: Vec<Register>,
}

impl Layout {
    pub fn new(regs: &[(&str, usize)]) -> Self {
        Self {
            registers: regs
                .iter()
                .map(|(n, l)| Register {
                    name: n.to_string(),
                    len: *l,
                })
                .collect(),
        }
    }

    /// Message register followed by workspace.
    pub fn message_workspace(m: usize, k: usize) -> Self {
        Self::new(&[("message", m), ("workspace", k)])
    }

    pub fn width(&self) -> usize {
        self.registers.iter().map(|r| r.len).sum()
    }

    /// `(start, len)` of the named register.
    pub fn find(&self, name: &str) -> Option<(usize, usize)> {
        let mut start = 0;
        for r in &self.registers {
            if r.name == name {
                return Some((start, r.len));
            }
            start += r.len;
        }
        None
    }

    /// Qubit permutation that reorders registers to `order`; entry `q` gives
    /// the new index of old qubit `q`.
    pub fn permutation_to(&self, order: &[&str]) -> Result<Vec<usize>> {
        if order.len() != self.registers.len() {
            return Err(Error::Dimension("register order has wrong length".into()));
        }
        let mut map = vec![0; self.width()];
        let mut next = 0;
        for name in order {
            let (start, len) = self
                .find(name)
                .ok_or_else(|| Error::Dimension(format!("unknown register {name}")))?;
            for i in 0..len {
                map[start + i] = next + i;
            }
            next += len;
        }
        Ok(map)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    width: usize,
    gates: Vec<Gate>,
    layout: Option<Layout>,
}

impl Circuit {
    pub fn new(width: usize) -> Self {
        Self {
            width,
            gates: Vec::new(),
            layout: None,
        }
    }

    pub fn from_gates(width: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Self::new(width);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn layout(&self) -> Option<&Layout> {
        self.layout.as_ref()
    }

    pub fn with_layout(mut self, layout: Layout) -> Result<Self> {
        if layout.width() != self.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                actual: layout.width(),
            });
        }
        self.layout = Some(layout);
        Ok(self)
    }

    pub fn hadamard_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::H(_))).count()
    }

    pub fn push(&mut self, g: Gate) -> Result<()> {
        g.validate(self.width).map_err(Error::InvalidGate)?;
        self.gates.push(g);
        Ok(())
    }

    pub fn h(&mut self, q: usize) -> Result<&mut Self> {
        self.push(Gate::H(q))?;
        Ok(self)
    }

    pub fn s(&mut self, q: usize) -> Result<&mut Self> {
        self.push(Gate::S(q))?;
        Ok(self)
    }

    pub fn toffoli(&mut self, c1: usize, c2: usize, t: usize) -> Result<&mut Self> {
        self.push(Gate::T(c1, c2, t))?;
        Ok(self)
    }

    /// Z = S S.
    pub fn z(&mut self, q: usize) -> Result<&mut Self> {
        self.s(q)?.s(q)
    }

    /// X = H S S H.
    pub fn x(&mut self, q: usize) -> Result<&mut Self> {
        self.h(q)?.z(q)?.h(q)
    }

    /// CNOT from `c` to `t` using a borrowed qubit in any state.
    ///
    /// `T(c,a,t) X_a T(c,a,t) X_a` flips `t` when `c∧a` and when `c∧¬a`.
    pub fn cnot(&mut self, c: usize, t: usize) -> Result<&mut Self> {
        if c == t {
            return Err(Error::InvalidGate(format!("CNOT {c} {t} has equal qubits")));
        }
        let a = (0..self.width)
            .find(|&q| q != c && q != t)
            .ok_or_else(|| Error::InvalidGate("CNOT needs a third qubit to borrow".into()))?;
        self.toffoli(c, a, t)?.x(a)?.toffoli(c, a, t)?.x(a)
    }

    /// SWAP of two qubits as three CNOTs.
    pub fn swap(&mut self, p: usize, q: usize) -> Result<&mut Self> {
        self.cnot(p, q)?.cnot(q, p)?.cnot(p, q)
    }

    pub fn append(&mut self, other: &Circuit) -> Result<&mut Self> {
        if other.width != self.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                actual: other.width,
            });
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(self)
    }

    /// Places `other` on this circuit's qubits starting at `offset`.
    pub fn append_at(&mut self, other: &Circuit, offset: usize) -> Result<&mut Self> {
        if offset + other.width > self.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                actual: offset + other.width,
            });
        }
        let map: Vec<usize> = (0..other.width).map(|q| q + offset).collect();
        self.gates.extend(other.gates.iter().map(|g| g.relabel(&map)));
        Ok(self)
    }

    /// Same gates on a wider register, qubit `q` sent to `q + offset`.
    pub fn embed(&self, width: usize, offset: usize) -> Result<Circuit> {
        let mut c = Circuit::new(width);
        c.append_at(self, offset)?;
        Ok(c)
    }

    /// Relabels qubits; `map[q]` is the new index of qubit `q`.
    pub fn permute(&self, map: &[usize]) -> Result<Circuit> {
        let mut seen = vec![false; self.width];
        if map.len() != self.width {
            return Err(Error::Dimension("permutation length differs from width".into()));
        }
        for &q in map {
            if q >= self.width || seen[q] {
                return Err(Error::Dimension("map is not a permutation".into()));
            }
            seen[q] = true;
        }
        Ok(Circuit {
            width: self.width,
            gates: self.gates.iter().map(|g| g.relabel(map)).collect(),
            layout: None,
        })
    }

    /// Adapter between layouts: reorders registers to `order`.
    pub fn reorder_registers(&self, order: &[&str]) -> Result<Circuit> {
        let layout = self
            .layout
            .as_ref()
            .ok_or_else(|| Error::Dimension("circuit has no layout".into()))?;
        let map = layout.permutation_to(order)?;
        let regs = order
            .iter()
            .map(|n| {
                let (_, len) = layout.find(n).expect("checked by permutation_to");
                (*n, len)
            })
            .collect::<Vec<_>>();
        self.permute(&map)?.with_layout(Layout::new(&regs))
    }

    /// Inverse circuit. S† is recorded as three S gates.
    pub fn dagger(&self) -> Circuit {
        let mut gates = Vec::with_capacity(self.gates.len());
        for g in self.gates.iter().rev() {
            match *g {
                Gate::S(q) => gates.extend([Gate::S(q); 3]),
                other => gates.push(other),
            }
        }
        Circuit {
            width: self.width,
            gates,
            layout: self.layout.clone(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("qubits {}\n", self.width);
        for g in &self.gates {
            s.push_str(&g.to_string());
            s.push('\n');
        }
        s
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Parses the line format: `qubits N`, then `H q`, `S q` or `T c1 c2 t`.
pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut circuit: Option<Circuit> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let nums = |toks: &[&str]| -> Result<Vec<usize>> {
            toks.iter()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| err(format!("expected a qubit index, found `{t}`")))
                })
                .collect()
        };
        let Some(c) = circuit.as_mut() else {
            if toks[0] != "qubits" || toks.len() != 2 {
                return Err(err("first line must be `qubits N`".into()));
            }
            let n = nums(&toks[1..])?[0];
            circuit = Some(Circuit::new(n));
            continue;
        };
        let gate = match (toks[0], toks.len()) {
            ("H", 2) => Gate::H(nums(&toks[1..])?[0]),
            ("S", 2) => Gate::S(nums(&toks[1..])?[0]),
            ("T", 4) => {
                let v = nums(&toks[1..])?;
                Gate::T(v[0], v[1], v[2])
            }
            ("H" | "S" | "T", _) => return Err(err(format!("wrong operand count in `{line}`"))),
            ("qubits", _) => return Err(err("repeated `qubits` header".into())),
            (op, _) => return Err(err(format!("unknown gate `{op}`"))),
        };
        gate.validate(c.width).map_err(err)?;
        c.gates.push(gate);
    }
    circuit.ok_or(Error::Parse {
        line: 1,
        msg: "missing `qubits N` header".into(),
    })
}

impl FromStr for Circuit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_circuit(s)
    }
}
