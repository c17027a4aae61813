//! Three-message games and the one-coin translation of three-message
//! interactive proofs.
//!
//! Registers follow the proof-system layout: the verifier's `V` (k qubits,
//! output on its first qubit) then the message `M` (m qubits). Merlin's
//! workspace `P` always has `l = k + m` qubits.

mod fidelity;
mod seesaw;

pub use fidelity::{
    bloch_grid_value, fidelity, fidelity_sum_gap, uhlmann_bound_check, v_only_projector, UhlmannCheck,
};
pub use seesaw::{
    optimize_game, random_unitary, seesaw_chain, Branch, Game, MerlinStrategy, SeesawOptions, SeesawResult,
    StrategyClass, DENSE_STATE_STEP_CAP,
};

use serde::{Deserialize, Serialize};

use crate::amplification::Label;
use crate::circuit::{unitary_matrix, Circuit, Layout, Projector};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C};
use crate::spectra::{reduce_vector, EIGEN_DIM_CAP};
use fidelity::fidelity_psd;
use seesaw::overlap_seesaw;

/// Heads is coin 0, tails is coin 1.
pub const HEADS: usize = 0;
pub const TAILS: usize = 1;

/// Three-message proof system `(V₁, V₂)` on `V ⊗ M`.
#[derive(Clone, Debug, PartialEq)]
pub struct QipInstance {
    pub v1: Circuit,
    pub v2: Circuit,
    pub k: usize,
    pub m: usize,
    /// Claimed soundness error.
    pub epsilon: f64,
    /// Honest prover's unitary on `M`, if the base has one.
    pub honest_prover: Option<Circuit>,
    pub label: Option<Label>,
}

impl QipInstance {
    pub fn new(v1: Circuit, v2: Circuit, k: usize, m: usize, epsilon: f64) -> Result<Self> {
        for c in [&v1, &v2] {
            if c.width() != k + m {
                return Err(Error::WidthMismatch {
                    expected: k + m,
                    actual: c.width(),
                });
            }
        }
        if k == 0 {
            return Err(Error::Instance("the verifier needs at least one qubit".into()));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Instance(format!("epsilon {epsilon} outside [0,1]")));
        }
        let layout = Layout::new(&[("V", k), ("M", m)]);
        Ok(Self {
            v1: v1.with_layout(layout.clone())?,
            v2: v2.with_layout(layout)?,
            k,
            m,
            epsilon,
            honest_prover: None,
            label: None,
        })
    }

    pub fn with_honest_prover(mut self, w: Circuit) -> Result<Self> {
        if w.width() != self.m {
            return Err(Error::WidthMismatch {
                expected: self.m,
                actual: w.width(),
            });
        }
        self.honest_prover = Some(w);
        Ok(self)
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    pub fn dv(&self) -> usize {
        1 << self.k
    }

    pub fn dm(&self) -> usize {
        1 << self.m
    }

    /// Prover workspace dimension `2^{k+m}`.
    pub fn dp(&self) -> usize {
        1 << (self.k + self.m)
    }

    fn unitaries(&self) -> Result<(CMatrix, CMatrix)> {
        let dense = |c: &Circuit| -> Result<CMatrix> { CMatrix::from_rows(&unitary_matrix::<C>(c)?) };
        Ok((dense(&self.v1)?, dense(&self.v2)?))
    }

    /// `Λ_T = V₁ Δ₁ V₁†` and `Λ_H = V₂† Π₁ V₂` on `V ⊗ M`.
    pub fn projectors(&self) -> Result<(CMatrix, CMatrix)> {
        let n = self.k + self.m;
        let d = 1usize << n;
        let (u1, u2) = self.unitaries()?;
        let diag = |proj: Projector| CMatrix::diag(&(0..d).map(|i| proj.outcome(n, i) as u8 as f64).collect::<Vec<_>>());
        let delta1 = diag(Projector::RegisterZero { start: 0, len: self.k });
        let pi1 = diag(Projector::FIRST_QUBIT_ONE);
        let lt = u1.matmul(&delta1).matmul(&u1.adjoint());
        let lh = u2.adjoint().matmul(&pi1).matmul(&u2);
        Ok((lt, lh))
    }

    /// Honest prover `(ψ, U)` on `M ⊗ P`: `ψ = |0⟩`, `U = W ⊗ I_P`.
    pub fn honest_strategy(&self) -> Result<QipProver> {
        let w = self
            .honest_prover
            .as_ref()
            .ok_or_else(|| Error::Instance("instance carries no honest prover".into()))?;
        let u = CMatrix::from_rows(&unitary_matrix::<C>(w)?)?.kron(&CMatrix::identity(self.dp()));
        let mut psi = vec![C::new(0.0, 0.0); self.dm() * self.dp()];
        psi[0] = C::new(1.0, 0.0);
        Ok(QipProver { psi, u })
    }

    /// The proof system's own acceptance as a one-branch game over `ψ ∈ M ⊗ P`.
    pub fn direct_game(&self) -> Result<Game> {
        let (_, lh) = self.projectors()?;
        let (u1, _) = self.unitaries()?;
        let (dv, dm, dp) = (self.dv(), self.dm(), self.dp());
        // J = (V₁ ⊗ I_P)(|0^k⟩ ⊗ I_{M⊗P})
        let j = CMatrix::from_fn(dv * dm * dp, dm * dp, |r, c| {
            let (vm, p) = (r / dp, r % dp);
            let (m2, p2) = (c / dp, c % dp);
            if p == p2 {
                u1[(vm, m2)]
            } else {
                C::new(0.0, 0.0)
            }
        });
        Game::new(dv, dm, dp, vec![Branch { weight: 1.0, lambda: lh }])?.with_input(j)
    }
}

/// Prover of the underlying proof system.
#[derive(Clone, Debug, PartialEq)]
pub struct QipProver {
    /// State of `M ⊗ P`.
    pub psi: Vec<C>,
    /// Unitary on `M ⊗ P`.
    pub u: CMatrix,
}

/// The one-coin game: Merlin sends `V`, sees the coin, then sends `M`.
#[derive(Clone, Debug, PartialEq)]
pub struct QmamInstance {
    pub base: QipInstance,
    pub s: usize,
    /// First message length, `k`.
    pub m1: usize,
    /// Second message length, `m`.
    pub m2: usize,
}

pub fn build_qmam(base: &QipInstance) -> QmamInstance {
    QmamInstance {
        base: base.clone(),
        s: 1,
        m1: base.k,
        m2: base.m,
    }
}

impl QmamInstance {
    /// Heads accepts on `Λ_H`, tails on `Λ_T`, each with weight ½.
    pub fn game(&self) -> Result<Game> {
        let b = &self.base;
        let (lt, lh) = b.projectors()?;
        Game::new(
            b.dv(),
            b.dm(),
            b.dp(),
            vec![
                Branch { weight: 0.5, lambda: lh },
                Branch { weight: 0.5, lambda: lt },
            ],
        )
    }

    /// Merlin runs `V₁` himself, then applies `U` only on heads.
    pub fn honest_translation(&self, prover: &QipProver) -> Result<MerlinStrategy> {
        let b = &self.base;
        let (dv, de) = (b.dv(), b.dm() * b.dp());
        if prover.psi.len() != de || prover.u.rows() != de {
            return Err(Error::Dimension(format!("prover acts on dimension {}, need {de}", prover.psi.len())));
        }
        let (u1, _) = b.unitaries()?;
        let mut start = vec![C::new(0.0, 0.0); dv * de];
        start[..de].copy_from_slice(&prover.psi);
        let psi = fidelity::apply_left(&u1, &start);
        Ok(MerlinStrategy {
            psi,
            unitaries: vec![prover.u.clone(), CMatrix::identity(de)],
        })
    }
}

/// `½·Pr[heads accepts] + ½·Pr[tails accepts]` under the translated prover.
pub fn honest_value(inst: &QmamInstance, prover: &QipProver) -> Result<f64> {
    let strat = inst.honest_translation(prover)?;
    Ok(inst.game()?.value(&strat))
}

/// `½ + √ε / 2`.
pub fn soundness_bound(base: &QipInstance) -> f64 {
    0.5 + base.epsilon.sqrt() / 2.0
}

/// Cheating optimum for both strategy classes.
#[derive(Clone, Debug)]
pub struct CheatingOutcome {
    pub best: SeesawResult,
    /// Optimum when Merlin uses one unitary for both coins.
    pub single_u: SeesawResult,
}

/// See-saw over Merlin strategies; the per-coin search is warm-started from
/// the shared-unitary optimum, so it never reports less.
pub fn optimize_cheating(inst: &QmamInstance, opts: &SeesawOptions) -> Result<CheatingOutcome> {
    let game = inst.game()?;
    check_game_dim(&game)?;
    let single_u = optimize_game(
        &game,
        &SeesawOptions {
            class: StrategyClass::Shared,
            ..opts.clone()
        },
        &[],
    )?;
    let best = optimize_game(
        &game,
        &SeesawOptions {
            class: StrategyClass::PerCoin,
            ..opts.clone()
        },
        std::slice::from_ref(&single_u.strategy),
    )?;
    Ok(CheatingOutcome { best, single_u })
}

fn check_game_dim(game: &Game) -> Result<()> {
    // the dense state step and Lanczos basis both scale with this
    const CAP: usize = 4 * EIGEN_DIM_CAP * EIGEN_DIM_CAP;
    if game.full_dim() > CAP {
        return Err(Error::CapExceeded {
            what: "game dimension",
            requested: game.full_dim(),
            cap: CAP,
        });
    }
    Ok(())
}

/// Maximum acceptance computed from the circuit form and from fidelities of
/// reduced-state sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxAcceptTwoWays {
    pub direct: f64,
    pub fidelity_form: f64,
    pub converged: bool,
}

impl MaxAcceptTwoWays {
    pub fn discrepancy(&self) -> f64 {
        (self.direct - self.fidelity_form).abs()
    }
}

/// Largest `k + m` accepted by [`max_accept_two_ways`].
pub const TWO_WAYS_WIDTH_CAP: usize = 6;

pub fn max_accept_two_ways(base: &QipInstance, opts: &SeesawOptions) -> Result<MaxAcceptTwoWays> {
    if base.k + base.m > TWO_WAYS_WIDTH_CAP {
        return Err(Error::CapExceeded {
            what: "k+m for the dense optimization",
            requested: base.k + base.m,
            cap: TWO_WAYS_WIDTH_CAP,
        });
    }
    let direct = optimize_game(&base.direct_game()?, opts, &[])?;
    let (lt, lh) = base.projectors()?;
    let dv = base.dv();
    let dim = dv * base.dm() * base.dp();
    let ip = CMatrix::identity(base.dp());
    let (pt, ph) = (lt.kron(&ip), lh.kron(&ip));
    let (_, a, b, conv) = overlap_seesaw(&pt, &ph, dv, dim, opts)?;
    let f = fidelity_psd(&reduce_vector(&a, dv), &reduce_vector(&b, dv))?;
    Ok(MaxAcceptTwoWays {
        direct: direct.value,
        fidelity_form: f * f,
        converged: direct.converged && conv,
    })
}

/// Value of the game when the optimal `V`-state is chosen and both
/// projectors act on `V` alone: `½ λ_max(P_T + P_H)`.
pub fn v_only_value(inst: &QmamInstance) -> Result<Option<f64>> {
    let (lt, lh) = inst.base.projectors()?;
    let (dv, dm) = (inst.base.dv(), inst.base.dm());
    match (v_only_projector(&lt, dv, dm), v_only_projector(&lh, dv, dm)) {
        (Some(pt), Some(ph)) => Ok(Some(0.5 * crate::linalg::eig_hermitian(&pt.add(&ph))?.values[0])),
        _ => Ok(None),
    }
}

/// `Λ₁ ⊗ Λ₂` on `(V₁V₂)(M₁M₂)` from factors on `V₁M₁` and `V₂M₂`.
fn regroup_kron(a: &CMatrix, b: &CMatrix, dv: (usize, usize), dm: (usize, usize)) -> CMatrix {
    let d = dv.0 * dv.1 * dm.0 * dm.1;
    let split = |i: usize| {
        let (v, m) = (i / (dm.0 * dm.1), i % (dm.0 * dm.1));
        let (v1, v2) = (v / dv.1, v % dv.1);
        let (m1, m2) = (m / dm.1, m % dm.1);
        (v1 * dm.0 + m1, v2 * dm.1 + m2)
    };
    CMatrix::from_fn(d, d, |r, c| {
        let (r1, r2) = split(r);
        let (c1, c2) = split(c);
        a[(r1, c1)] * b[(r2, c2)]
    })
}

/// AND-repetition of two games played in parallel.
///
/// Coin strings pair up as `y = y₁·|Y₂| + y₂`; registers regroup to
/// `(V₁V₂)(M₁M₂)(P₁P₂)`.
pub fn repeat_pair(g1: &Game, g2: &Game) -> Result<Game> {
    if g1.input.is_some() || g2.input.is_some() {
        return Err(Error::Instance("repetition needs games without an input isometry".into()));
    }
    let mut branches = Vec::new();
    for b1 in &g1.branches {
        for b2 in &g2.branches {
            branches.push(Branch {
                weight: b1.weight * b2.weight,
                lambda: regroup_kron(&b1.lambda, &b2.lambda, (g1.dv, g2.dv), (g1.dm, g2.dm)),
            });
        }
    }
    Game::new(g1.dv * g2.dv, g1.dm * g2.dm, g1.dp * g2.dp, branches)
}

/// `N`-fold AND-repetition.
pub fn repeat_game(g: &Game, n: usize) -> Result<Game> {
    if n == 0 {
        return Err(Error::Instance("repetition count must be positive".into()));
    }
    let mut out = g.clone();
    for _ in 1..n {
        out = repeat_pair(&out, g)?;
    }
    check_game_dim(&out)?;
    Ok(out)
}

/// Product strategy for [`repeat_pair`].
pub fn repeat_strategy_pair(g1: &Game, s1: &MerlinStrategy, g2: &Game, s2: &MerlinStrategy) -> MerlinStrategy {
    let (dv, dm, dp) = ((g1.dv, g2.dv), (g1.dm, g2.dm), (g1.dp, g2.dp));
    let full = dv.0 * dv.1 * dm.0 * dm.1 * dp.0 * dp.1;
    let psi = (0..full)
        .map(|i| {
            let p = i % (dp.0 * dp.1);
            let m = i / (dp.0 * dp.1) % (dm.0 * dm.1);
            let v = i / (dp.0 * dp.1 * dm.0 * dm.1);
            let idx1 = ((v / dv.1) * dm.0 + m / dm.1) * dp.0 + p / dp.1;
            let idx2 = ((v % dv.1) * dm.1 + m % dm.1) * dp.1 + p % dp.1;
            s1.psi[idx1] * s2.psi[idx2]
        })
        .collect();
    let de = dm.0 * dm.1 * dp.0 * dp.1;
    let split = |e: usize| {
        let (m, p) = (e / (dp.0 * dp.1), e % (dp.0 * dp.1));
        ((m / dm.1) * dp.0 + p / dp.1, (m % dm.1) * dp.1 + p % dp.1)
    };
    let mut unitaries = Vec::new();
    for u1 in &s1.unitaries {
        for u2 in &s2.unitaries {
            unitaries.push(CMatrix::from_fn(de, de, |r, c| {
                let (r1, r2) = split(r);
                let (c1, c2) = split(c);
                u1[(r1, c1)] * u2[(r2, c2)]
            }));
        }
    }
    MerlinStrategy { psi, unitaries }
}

pub fn repeat_strategy(g: &Game, s: &MerlinStrategy, n: usize) -> Result<MerlinStrategy> {
    if n == 0 {
        return Err(Error::Instance("repetition count must be positive".into()));
    }
    let (mut game, mut strat) = (g.clone(), s.clone());
    for _ in 1..n {
        strat = repeat_strategy_pair(&game, &strat, g, s);
        game = repeat_pair(&game, g)?;
    }
    Ok(strat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{apply_circuit, measure_projector, parse_circuit, FloatState};
    use crate::linalg::norm;
    use crate::rng::{random_unit_vector, seeded};

    fn identity_base() -> QipInstance {
        QipInstance::new(Circuit::new(2), Circuit::new(2), 1, 1, 0.0).unwrap()
    }

    /// Base with perfect completeness: `V₂ = X_{v0} V₁† (I ⊗ W)`, honest `U = W†`.
    fn perfect_base() -> QipInstance {
        let v1 = parse_circuit("qubits 3\nH 0\nT 0 1 2\nH 2\nS 1\nT 2 1 0\nH 1").unwrap();
        let w = parse_circuit("qubits 2\nH 0\nS 1\nH 1").unwrap();
        let mut v2 = Circuit::new(3);
        v2.append_at(&w, 1).unwrap().append(&v1.dagger()).unwrap().x(0).unwrap();
        QipInstance::new(v1, v2, 1, 2, 0.0)
            .unwrap()
            .with_honest_prover(w.dagger())
            .unwrap()
    }

    #[test]
    fn arities_and_identity_structure() {
        let q = build_qmam(&identity_base());
        assert_eq!((q.s, q.m1, q.m2), (1, 1, 1));
        let (lt, lh) = q.base.projectors().unwrap();
        assert!(lt.max_abs_diff(&CMatrix::diag(&[1.0, 1.0, 0.0, 0.0])) < 1e-15);
        assert!(lh.max_abs_diff(&CMatrix::diag(&[0.0, 0.0, 1.0, 1.0])) < 1e-15);
        assert!((v_only_value(&q).unwrap().unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn perfect_base_is_honestly_won() {
        let base = perfect_base();
        let q = build_qmam(&base);
        let prover = base.honest_strategy().unwrap();
        assert!((honest_value(&q, &prover).unwrap() - 1.0).abs() < 1e-12);
        // the proof system itself accepts with certainty
        let g = base.direct_game().unwrap();
        let s = MerlinStrategy {
            psi: prover.psi.clone(),
            unitaries: vec![prover.u.clone()],
        };
        assert!((g.value(&s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn honest_value_matches_branch_simulation() {
        let base = perfect_base();
        let q = build_qmam(&base);
        let mut rng = seeded(1);
        let de = base.dm() * base.dp();
        let prover = QipProver {
            psi: random_unit_vector(de, &mut rng),
            u: random_unitary(de, &mut rng).unwrap(),
        };
        let got = honest_value(&q, &prover).unwrap();
        // oracle: simulate both coins on V M P with the circuit simulator
        let n = base.k + base.m + base.k + base.m;
        let mut start = vec![C::new(0.0, 0.0); 1 << n];
        start[..de].copy_from_slice(&prover.psi);
        let after_v1 = apply_circuit(&FloatState::from_amplitudes(start).unwrap(), &base.v1.embed(n, 0).unwrap()).unwrap();
        let dv = base.dv();
        let heads_in: Vec<C> = (0..dv).flat_map(|v| prover.u.matvec(&after_v1.amplitudes()[v * de..(v + 1) * de])).collect();
        let heads_out = apply_circuit(&FloatState::from_amplitudes(heads_in).unwrap(), &base.v2.embed(n, 0).unwrap()).unwrap();
        let heads = measure_projector(&heads_out, Projector::FIRST_QUBIT_ONE).unwrap().prob_1.re;
        let tails_out = apply_circuit(&after_v1, &base.v1.dagger().embed(n, 0).unwrap()).unwrap();
        let tails = norm(&tails_out.amplitudes()[..de]).powi(2);
        assert!((got - 0.5 * (heads + tails)).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&got));
    }

    #[test]
    fn identity_base_cheating_is_half() {
        let q = build_qmam(&identity_base());
        let out = optimize_cheating(&q, &SeesawOptions::default()).unwrap();
        assert!((out.best.value - 0.5).abs() < 1e-8);
        assert!(out.single_u.value <= out.best.value + 1e-12);
        assert_eq!(soundness_bound(&q.base), 0.5);
    }

    #[test]
    fn two_ways_agree_on_identity_base() {
        let r = max_accept_two_ways(&identity_base(), &SeesawOptions::default()).unwrap();
        // V stays |0⟩ and the output reads V, so nobody is accepted
        assert!(r.direct.abs() < 1e-9 && r.fidelity_form.abs() < 1e-9);
        let r = max_accept_two_ways(&perfect_base(), &SeesawOptions::default()).unwrap();
        assert!((r.direct - 1.0).abs() < 1e-8 && (r.fidelity_form - 1.0).abs() < 1e-8);
    }

    #[test]
    fn repetition_preserves_honest_value() {
        let base = perfect_base();
        let q = build_qmam(&base);
        let g = q.game().unwrap();
        let s = q.honest_translation(&base.honest_strategy().unwrap()).unwrap();
        let g1 = QmamInstance { base: identity_base(), ..build_qmam(&identity_base()) }.game().unwrap();
        let s1 = MerlinStrategy {
            psi: {
                let mut v = vec![C::new(0.0, 0.0); g1.full_dim()];
                v[0] = C::new(1.0, 0.0);
                v
            },
            unitaries: vec![CMatrix::identity(g1.de()); 2],
        };
        let g2 = repeat_pair(&g1, &g1).unwrap();
        let s2 = repeat_strategy_pair(&g1, &s1, &g1, &s1);
        let p1 = g1.branch_probabilities(&s1);
        let p2 = g2.branch_probabilities(&s2);
        for (y, p) in p2.iter().enumerate() {
            assert!((p - p1[y / 2] * p1[y % 2]).abs() < 1e-12);
        }
        assert!((g.value(&s) - 1.0).abs() < 1e-12);
    }
}
