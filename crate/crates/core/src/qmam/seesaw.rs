//! Alternating maximization of Merlin's value in a three-message game.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fidelity::{apply_left, apply_right, best_alignment};
use crate::error::{Error, Result};
use crate::linalg::{dot, eig_hermitian, lanczos_top, max_re_trace_unitary, norm, normalize, CMatrix, C};
use crate::rng::{gaussian_complex, random_unit_vector, substream};

/// Above this state dimension the state step uses Lanczos.
pub const DENSE_STATE_STEP_CAP: usize = 64;

/// One coin outcome: weight and accepting projector on `V ⊗ M`.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub weight: f64,
    pub lambda: CMatrix,
}

/// Merlin's state lives on `V ⊗ M ⊗ P` with `V` as the major index; each
/// coin's unitary acts on `M ⊗ P`.
///
/// `input`, when present, is an isometry from a smaller free space onto
/// `V ⊗ M ⊗ P`; the state step then optimizes over that free space.
#[derive(Clone, Debug, PartialEq)]
pub struct Game {
    pub dv: usize,
    pub dm: usize,
    pub dp: usize,
    pub branches: Vec<Branch>,
    pub input: Option<CMatrix>,
}

/// State and per-coin unitaries.
#[derive(Clone, Debug, PartialEq)]
pub struct MerlinStrategy {
    pub psi: Vec<C>,
    pub unitaries: Vec<CMatrix>,
}

impl MerlinStrategy {
    pub fn validate(&self, game: &Game, tol: f64) -> Result<()> {
        if self.psi.len() != game.free_dim() || self.unitaries.len() != game.branches.len() {
            return Err(Error::Dimension("strategy does not match the game".into()));
        }
        let n = norm(&self.psi);
        if (n * n - 1.0).abs() > tol {
            return Err(Error::NotNormalized(n * n));
        }
        for u in &self.unitaries {
            if u.rows() != game.de() || u.unitarity_defect() > tol {
                return Err(Error::Dimension("strategy unitary is not unitary on M⊗P".into()));
            }
        }
        Ok(())
    }
}

impl Game {
    pub fn new(dv: usize, dm: usize, dp: usize, branches: Vec<Branch>) -> Result<Self> {
        for b in &branches {
            if b.lambda.rows() != dv * dm || !b.lambda.is_square() {
                return Err(Error::Dimension(format!("branch projector is {}×{}, need {}", b.lambda.rows(), b.lambda.cols(), dv * dm)));
            }
        }
        Ok(Self {
            dv,
            dm,
            dp,
            branches,
            input: None,
        })
    }

    pub fn with_input(mut self, input: CMatrix) -> Result<Self> {
        if input.rows() != self.full_dim() {
            return Err(Error::Dimension("input isometry has the wrong range".into()));
        }
        self.input = Some(input);
        Ok(self)
    }

    /// Dimension of `M ⊗ P`.
    pub fn de(&self) -> usize {
        self.dm * self.dp
    }

    pub fn full_dim(&self) -> usize {
        self.dv * self.de()
    }

    pub fn free_dim(&self) -> usize {
        self.input.as_ref().map_or(self.full_dim(), |j| j.cols())
    }

    fn embed(&self, psi: &[C]) -> Vec<C> {
        match &self.input {
            Some(j) => j.matvec(psi),
            None => psi.to_vec(),
        }
    }

    fn embed_adjoint(&self, x: &[C]) -> Vec<C> {
        match &self.input {
            Some(j) => (0..j.cols()).map(|c| (0..j.rows()).map(|r| j[(r, c)].conj() * x[r]).sum()).collect(),
            None => x.to_vec(),
        }
    }

    /// Acceptance probability of each branch (unweighted).
    pub fn branch_probabilities(&self, s: &MerlinStrategy) -> Vec<f64> {
        let full = self.embed(&s.psi);
        self.branches
            .iter()
            .zip(&s.unitaries)
            .map(|(b, u)| {
                let x = apply_left(&b.lambda, &apply_right(u, &full, self.dv));
                norm(&x).powi(2)
            })
            .collect()
    }

    pub fn value(&self, s: &MerlinStrategy) -> f64 {
        self.branches
            .iter()
            .zip(self.branch_probabilities(s))
            .map(|(b, p)| b.weight * p)
            .sum()
    }

    /// `Σ_y w_y (I⊗U_y)†(Λ_y⊗I)(I⊗U_y)` applied to a free-space vector.
    fn state_operator(&self, us: &[CMatrix], x: &[C]) -> Vec<C> {
        let full = self.embed(x);
        let mut acc = vec![C::new(0.0, 0.0); full.len()];
        for (b, u) in self.branches.iter().zip(us) {
            let y = apply_right(&u.adjoint(), &apply_left(&b.lambda, &apply_right(u, &full, self.dv)), self.dv);
            for (a, v) in acc.iter_mut().zip(y) {
                *a += v * b.weight;
            }
        }
        self.embed_adjoint(&acc)
    }
}

/// Which unitaries Merlin may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyClass {
    /// One unitary per coin outcome.
    PerCoin,
    /// The same unitary whatever the coin.
    Shared,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeesawOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
    pub class: StrategyClass,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 500,
            restarts: 16,
            seed: 0,
            class: StrategyClass::PerCoin,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SeesawResult {
    pub value: f64,
    pub strategy: MerlinStrategy,
    pub converged: bool,
    pub iterations: usize,
    /// Values after each full iteration of the winning chain.
    pub history: Vec<f64>,
}

/// Haar-random unitary as the polar factor of a Ginibre matrix.
pub fn random_unitary(d: usize, rng: &mut impl rand::Rng) -> Result<CMatrix> {
    let g = CMatrix::from_fn(d, d, |_, _| gaussian_complex(rng));
    max_re_trace_unitary(&g)
}

fn state_step(game: &Game, s: &MerlinStrategy) -> Result<Vec<C>> {
    let d = game.free_dim();
    if d <= DENSE_STATE_STEP_CAP {
        let cols: Vec<Vec<C>> = (0..d)
            .map(|j| {
                let mut e = vec![C::new(0.0, 0.0); d];
                e[j] = C::new(1.0, 0.0);
                game.state_operator(&s.unitaries, &e)
            })
            .collect();
        let h = CMatrix::from_columns(&cols);
        let h = h.add(&h.adjoint()).scale(C::new(0.5, 0.0));
        return Ok(eig_hermitian(&h)?.vector(0));
    }
    // a fixed small tilt keeps Lanczos off an invariant subspace of ψ
    let start: Vec<C> = s
        .psi
        .iter()
        .enumerate()
        .map(|(i, a)| a + C::new(1e-3 / (1.0 + i as f64).sqrt(), 0.0))
        .collect();
    let (_, v) = lanczos_top(d, |x| game.state_operator(&s.unitaries, x), &start, d, 1e-12)?;
    Ok(v)
}

fn unitary_step(game: &Game, s: &MerlinStrategy, class: StrategyClass) -> Result<Vec<CMatrix>> {
    let full = game.embed(&s.psi);
    let target = |ys: &[usize]| {
        let mut t = vec![C::new(0.0, 0.0); full.len()];
        for &y in ys {
            let b = &game.branches[y];
            let chi = apply_left(&b.lambda, &apply_right(&s.unitaries[y], &full, game.dv));
            for (a, c) in t.iter_mut().zip(chi) {
                *a += c * b.weight;
            }
        }
        t
    };
    match class {
        StrategyClass::PerCoin => (0..game.branches.len())
            .map(|y| best_alignment(&full, &target(&[y]), game.dv))
            .collect(),
        StrategyClass::Shared => {
            let all: Vec<usize> = (0..game.branches.len()).collect();
            let u = best_alignment(&full, &target(&all), game.dv)?;
            Ok(vec![u; game.branches.len()])
        }
    }
}

/// One see-saw chain; the value never decreases between iterations.
pub fn seesaw_chain(game: &Game, start: MerlinStrategy, opts: &SeesawOptions) -> Result<SeesawResult> {
    let mut s = start;
    let mut value = game.value(&s);
    let mut history = vec![value];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        iterations += 1;
        let before = value;
        let psi = state_step(game, &s)?;
        let cand = MerlinStrategy {
            psi,
            unitaries: s.unitaries.clone(),
        };
        let v = game.value(&cand);
        if v > value {
            s = cand;
            value = v;
        }
        let cand = MerlinStrategy {
            psi: s.psi.clone(),
            unitaries: unitary_step(game, &s, opts.class)?,
        };
        let v = game.value(&cand);
        if v > value {
            s = cand;
            value = v;
        }
        history.push(value);
        if value - before < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(SeesawResult {
        value,
        strategy: s,
        converged,
        iterations,
        history,
    })
}

fn random_start(game: &Game, seed: u64, restart: u64, class: StrategyClass) -> Result<MerlinStrategy> {
    let mut rng = substream(seed, restart);
    let psi = random_unit_vector(game.free_dim(), &mut rng);
    let nb = game.branches.len();
    let unitaries = if restart == 0 {
        vec![CMatrix::identity(game.de()); nb]
    } else {
        match class {
            StrategyClass::Shared => vec![random_unitary(game.de(), &mut rng)?; nb],
            StrategyClass::PerCoin => (0..nb).map(|_| random_unitary(game.de(), &mut rng)).collect::<Result<_>>()?,
        }
    };
    Ok(MerlinStrategy { psi, unitaries })
}

/// Best chain over seeded restarts plus any warm starts.
pub fn optimize_game(game: &Game, opts: &SeesawOptions, warm: &[MerlinStrategy]) -> Result<SeesawResult> {
    let mut starts: Vec<MerlinStrategy> = warm.to_vec();
    for r in 0..opts.restarts {
        starts.push(random_start(game, opts.seed, r as u64, opts.class)?);
    }
    if starts.is_empty() {
        return Err(Error::Instance("see-saw needs at least one start".into()));
    }
    let results: Vec<SeesawResult> = starts
        .into_par_iter()
        .map(|s| seesaw_chain(game, s, opts))
        .collect::<Result<_>>()?;
    let best = results
        .into_iter()
        .reduce(|a, b| if b.value > a.value { b } else { a })
        .expect("at least one restart");
    Ok(best)
}

/// Best `|⟨b|(I⊗W)|a⟩|²` over `a ∈ range(P_a ⊗ I)`, `b ∈ range(P_b ⊗ I)`.
///
/// Returns the squared overlap and the two purifications with `W` folded
/// into `a`.
pub(crate) fn overlap_seesaw(
    pa: &CMatrix,
    pb: &CMatrix,
    dv: usize,
    dim: usize,
    opts: &SeesawOptions,
) -> Result<(f64, Vec<C>, Vec<C>, bool)> {
    let runs: Vec<_> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|r| -> Result<Option<(f64, Vec<C>, Vec<C>, bool)>> {
            let mut rng = substream(opts.seed, r as u64);
            let Some(mut a) = normalize(&apply_left(pa, &random_unit_vector(dim, &mut rng))) else {
                return Ok(None);
            };
            let Some(mut b) = normalize(&apply_left(pb, &a)).or_else(|| normalize(&apply_left(pb, &random_unit_vector(dim, &mut rng)))) else {
                return Ok(None);
            };
            let mut w = CMatrix::identity(dim / dv);
            let score = |a: &[C], b: &[C], w: &CMatrix| dot(b, &apply_right(w, a, dv)).norm_sqr();
            let mut best = score(&a, &b, &w);
            let mut converged = false;
            for _ in 0..opts.max_iters {
                let before = best;
                let w_new = best_alignment(&a, &b, dv)?;
                if score(&a, &b, &w_new) > best {
                    w = w_new;
                    best = score(&a, &b, &w);
                }
                if let Some(a_new) = normalize(&apply_left(pa, &apply_right(&w.adjoint(), &b, dv))) {
                    if score(&a_new, &b, &w) > best {
                        a = a_new;
                        best = score(&a, &b, &w);
                    }
                }
                if let Some(b_new) = normalize(&apply_left(pb, &apply_right(&w, &a, dv))) {
                    if score(&a, &b_new, &w) > best {
                        b = b_new;
                        best = score(&a, &b, &w);
                    }
                }
                if best - before < opts.tol {
                    converged = true;
                    break;
                }
            }
            Ok(Some((best, apply_right(&w, &a, dv), b, converged)))
        })
        .collect::<Result<_>>()?;
    Ok(runs
        .into_iter()
        .flatten()
        .reduce(|x, y| if y.0 > x.0 { y } else { x })
        .unwrap_or((0.0, vec![C::new(0.0, 0.0); dim], vec![C::new(0.0, 0.0); dim], true)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn v_only_game(pt: CMatrix, ph: CMatrix) -> Game {
        let dm = 2;
        let id = CMatrix::identity(dm);
        Game::new(
            2,
            dm,
            4,
            vec![
                Branch {
                    weight: 0.5,
                    lambda: ph.kron(&id),
                },
                Branch {
                    weight: 0.5,
                    lambda: pt.kron(&id),
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn orthogonal_projectors_give_half() {
        let g = v_only_game(CMatrix::diag(&[1.0, 0.0]), CMatrix::diag(&[0.0, 1.0]));
        let r = optimize_game(&g, &SeesawOptions::default(), &[]).unwrap();
        assert!((r.value - 0.5).abs() < 1e-8);
        r.strategy.validate(&g, 1e-9).unwrap();
    }

    #[test]
    fn chains_are_monotone() {
        let mut rng = seeded(12);
        let p = random_unit_vector(2, &mut rng);
        let g = v_only_game(CMatrix::diag(&[1.0, 0.0]), CMatrix::outer(&p, &p));
        for class in [StrategyClass::PerCoin, StrategyClass::Shared] {
            let opts = SeesawOptions {
                class,
                ..Default::default()
            };
            let start = random_start(&g, 3, 1, class).unwrap();
            let r = seesaw_chain(&g, start, &opts).unwrap();
            assert!(r.history.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn lanczos_and_dense_state_steps_agree() {
        let mut rng = seeded(2);
        let lam = |rng: &mut _| {
            let v = random_unit_vector(8, rng);
            CMatrix::outer(&v, &v)
        };
        let g = Game::new(4, 2, 16, vec![Branch { weight: 1.0, lambda: lam(&mut rng) }]).unwrap();
        let s = MerlinStrategy {
            psi: random_unit_vector(g.full_dim(), &mut rng),
            unitaries: vec![random_unitary(g.de(), &mut rng).unwrap()],
        };
        let v = state_step(&g, &s).unwrap();
        let with = MerlinStrategy { psi: v, ..s };
        // Λ has rank one, so the best state reaches probability 1
        assert!((g.value(&with) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn overlap_of_shared_reduced_state_is_one() {
        let p = CMatrix::diag(&[1.0, 0.0]).kron(&CMatrix::identity(2));
        let (v, _, _, _) = overlap_seesaw(&p, &p, 2, 16, &SeesawOptions::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
    }
}
