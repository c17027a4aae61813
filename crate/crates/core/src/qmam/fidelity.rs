use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, eig_hermitian, max_re_trace_unitary, normalize, orthonormal_basis, CMatrix, C};
use crate::rng::{random_unit_vector, seeded};
use crate::spectra::{reduce_vector, DensityMatrix};

/// `F(ρ,ξ) = tr √(√ρ ξ √ρ)`.
pub fn fidelity(rho: &DensityMatrix, xi: &DensityMatrix) -> Result<f64> {
    if rho.dim() != xi.dim() {
        return Err(Error::Dimension(format!("fidelity of {}- and {}-dim states", rho.dim(), xi.dim())));
    }
    fidelity_psd(rho.matrix(), xi.matrix())
}

/// Eigenvalues below this are treated as rounding noise before square roots.
pub const FIDELITY_EIG_FLOOR: f64 = 1e-14;

fn floored_sqrt(v: f64) -> f64 {
    if v < FIDELITY_EIG_FLOOR {
        0.0
    } else {
        v.sqrt()
    }
}

/// Fidelity of PSD operators without trace validation.
pub(crate) fn fidelity_psd(rho: &CMatrix, xi: &CMatrix) -> Result<f64> {
    let e = eig_hermitian(rho)?;
    let n = rho.rows();
    let mut s = CMatrix::zeros(n, n);
    for (j, v) in e.values.iter().enumerate() {
        let r = floored_sqrt(*v);
        if r > 0.0 {
            s = s.add(&CMatrix::outer(&e.vector(j), &e.vector(j)).scale(C::new(r, 0.0)));
        }
    }
    let inner = s.matmul(xi).matmul(&s);
    let inner = inner.add(&inner.adjoint()).scale(C::new(0.5, 0.0));
    let f: f64 = eig_hermitian(&inner)?.values.iter().map(|v| floored_sqrt(*v)).sum();
    Ok(f.clamp(0.0, 1.0))
}

/// `1 + F(ρ,ξ) − F(ρ,σ)² − F(σ,ξ)²`, never below zero up to rounding.
pub fn fidelity_sum_gap(rho: &DensityMatrix, sigma: &DensityMatrix, xi: &DensityMatrix) -> Result<f64> {
    let f_rx = fidelity(rho, xi)?;
    let f_rs = fidelity(rho, sigma)?;
    let f_sx = fidelity(sigma, xi)?;
    Ok(1.0 + f_rx - f_rs * f_rs - f_sx * f_sx)
}

/// `(I_V ⊗ W) x` for `x ∈ C^{dv} ⊗ C^{de}`.
pub(crate) fn apply_right(w: &CMatrix, x: &[C], dv: usize) -> Vec<C> {
    let de = w.rows();
    let mut out = Vec::with_capacity(x.len());
    for v in 0..dv {
        out.extend(w.matvec(&x[v * de..(v + 1) * de]));
    }
    out
}

/// `(Λ ⊗ I_R) x` for `Λ` on the leading `Λ.rows()` dimensions.
pub(crate) fn apply_left(l: &CMatrix, x: &[C]) -> Vec<C> {
    let d = l.rows();
    let dr = x.len() / d;
    let mut out = vec![C::new(0.0, 0.0); x.len()];
    for i in 0..d {
        let row = l.row(i);
        let o = &mut out[i * dr..(i + 1) * dr];
        for (j, lij) in row.iter().enumerate() {
            if *lij == C::new(0.0, 0.0) {
                continue;
            }
            for (oi, xj) in o.iter_mut().zip(&x[j * dr..(j + 1) * dr]) {
                *oi += lij * xj;
            }
        }
    }
    out
}

/// Unitary `W` on the trailing factor maximizing `Re ⟨t|(I ⊗ W)|s⟩`.
///
/// Works in the span of the row blocks of `s` and `t`, so the cost depends
/// on `dv` rather than on the trailing dimension.
pub(crate) fn best_alignment(s: &[C], t: &[C], dv: usize) -> Result<CMatrix> {
    let de = s.len() / dv;
    let blocks: Vec<Vec<C>> = (0..dv)
        .flat_map(|v| [s[v * de..(v + 1) * de].to_vec(), t[v * de..(v + 1) * de].to_vec()])
        .collect();
    let q = orthonormal_basis(&blocks, 1e-12);
    let r = q.len();
    if r == 0 {
        return Ok(CMatrix::identity(de));
    }
    // M_s = Σ_v (Q†s_v)(Q†t_v)†
    let mut ms = CMatrix::zeros(r, r);
    for v in 0..dv {
        let sv = &s[v * de..(v + 1) * de];
        let tv = &t[v * de..(v + 1) * de];
        let a: Vec<C> = q.iter().map(|b| dot(b, sv)).collect();
        let c: Vec<C> = q.iter().map(|b| dot(b, tv)).collect();
        for i in 0..r {
            for j in 0..r {
                ms[(i, j)] += a[i] * c[j].conj();
            }
        }
    }
    let us = max_re_trace_unitary(&ms)?;
    let mut w = CMatrix::identity(de);
    for i in 0..r {
        for j in 0..r {
            let d = us[(i, j)] - if i == j { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) };
            if d.norm_sqr() == 0.0 {
                continue;
            }
            for a in 0..de {
                let qa = q[i][a] * d;
                for b in 0..de {
                    w[(a, b)] += qa * q[j][b].conj();
                }
            }
        }
    }
    Ok(w)
}

/// Best squared overlap `|⟨x|(I ⊗ W)|a⟩|²` over `a ∈ range(P ⊗ I)` and
/// unitaries `W`, by alternating exact maximizations.
///
/// Returns the final `a` after the map `W` has been folded into it, so the
/// reduced state of the returned vector on the leading factor is feasible.
pub(crate) fn purification_seesaw(
    x: &[C],
    p: &CMatrix,
    dv: usize,
    start: Vec<C>,
    max_iters: usize,
    tol: f64,
) -> Result<(f64, Vec<C>)> {
    let mut a = start;
    let mut w = CMatrix::identity(x.len() / dv);
    let score = |a: &[C], w: &CMatrix| dot(x, &apply_right(w, a, dv)).norm_sqr();
    let mut best = score(&a, &w);
    for _ in 0..max_iters {
        let w_new = best_alignment(&a, x, dv)?;
        let back = apply_right(&w_new.adjoint(), x, dv);
        let a_new = match normalize(&apply_left(p, &back)) {
            Some(v) => v,
            None => break,
        };
        let s = score(&a_new, &w_new);
        if s <= best + tol {
            if s > best {
                best = s;
                a = a_new;
                w = w_new;
            }
            break;
        }
        best = s;
        a = a_new;
        w = w_new;
    }
    Ok((best, apply_right(&w, &a, dv)))
}

/// Measured probability of `Λ` against the Uhlmann-type fidelity bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UhlmannCheck {
    pub measured: f64,
    pub bound: f64,
    pub converged: bool,
}

impl UhlmannCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.measured <= self.bound + tol
    }
}

/// `tr(Λ·joint)` versus `max_{ρ∈S_V(Λ)} F(σ,ρ)²` with `σ = tr_M joint`.
pub fn uhlmann_bound_check(joint: &DensityMatrix, dv: usize, dm: usize, lambda: &CMatrix) -> Result<UhlmannCheck> {
    let d = dv * dm;
    if joint.dim() != d || lambda.rows() != d || !lambda.is_square() {
        return Err(Error::Dimension(format!("joint {} and Λ {} for dv={dv}, dm={dm}", joint.dim(), lambda.rows())));
    }
    let measured = joint.expectation(lambda).clamp(0.0, 1.0);
    // x = Σ √λ_i |e_i⟩|i⟩ purifies the joint state on (V,M,R)
    let eig = eig_hermitian(joint.matrix())?;
    let mut x = vec![C::new(0.0, 0.0); d * d];
    for (i, val) in eig.values.iter().enumerate() {
        let s = val.max(0.0).sqrt();
        if s == 0.0 {
            continue;
        }
        for (r, e) in eig.vector(i).iter().enumerate() {
            x[r * d + i] = e * s;
        }
    }
    let sigma = reduce_vector(&x, dv);
    let start = match normalize(&apply_left(lambda, &x)) {
        Some(a) => a,
        None => match normalize(&apply_left(lambda, &random_unit_vector(d * d, &mut seeded(0)))) {
            Some(a) => a,
            None => {
                return Ok(UhlmannCheck {
                    measured,
                    bound: 0.0,
                    converged: true,
                })
            }
        },
    };
    const ITERS: usize = 500;
    let (_, a) = purification_seesaw(&x, lambda, dv, start, ITERS, 1e-13)?;
    let rho = reduce_vector(&a, dv);
    let f = fidelity_psd(&sigma, &rho)?;
    Ok(UhlmannCheck {
        measured,
        bound: f * f,
        converged: true,
    })
}

/// `P` with `Λ = P ⊗ I_M`, if `Λ` acts on the leading factor only.
pub fn v_only_projector(lambda: &CMatrix, dv: usize, dm: usize) -> Option<CMatrix> {
    let p = CMatrix::from_fn(dv, dv, |i, j| (0..dm).map(|m| lambda[(i * dm + m, j * dm + m)]).sum::<C>() / dm as f64);
    (p.kron(&CMatrix::identity(dm)).max_abs_diff(lambda) < 1e-9).then_some(p)
}

/// `max_σ ½ tr((P_T + P_H) σ)` over a Bloch-sphere grid of qubit states.
pub fn bloch_grid_value(p_t: &CMatrix, p_h: &CMatrix, steps: usize) -> Result<f64> {
    if p_t.rows() != 2 || p_h.rows() != 2 {
        return Err(Error::Dimension("Bloch grid needs qubit operators".into()));
    }
    let s = p_t.add(p_h);
    let mut best = f64::NEG_INFINITY;
    for i in 0..=steps {
        let theta = std::f64::consts::PI * i as f64 / steps as f64;
        for j in 0..2 * steps {
            let phi = std::f64::consts::PI * j as f64 / steps as f64;
            let (x, y, z) = (theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
            // σ = (I + xX + yY + zZ)/2
            let sigma = CMatrix::from_fn(2, 2, |r, c| match (r, c) {
                (0, 0) => C::new((1.0 + z) / 2.0, 0.0),
                (1, 1) => C::new((1.0 - z) / 2.0, 0.0),
                (0, 1) => C::new(x / 2.0, -y / 2.0),
                _ => C::new(x / 2.0, y / 2.0),
            });
            best = best.max(0.5 * s.matmul(&sigma).trace().re);
        }
    }
    Ok(best)
}
