//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use qamg_core::amplification::{
    a0pp_check, amplified_certificate, amplify_mw, binomial_tail, counting_certificate, exact_trace_certificate,
    mixed_state_acceptance, recurrence_residuals, run_procedure_b, Label, Prob, QmaInstance,
};
use qamg_core::circuit::{apply_circuit, unitary_matrix, Amplitude, StateVector};
use qamg_core::exact::ExactScalar;
use qamg_core::harness::{generate_instance, random_circuit, GenParams, Instance, Kind};
use qamg_core::linalg::{CMatrix, C};
use qamg_core::qam::{
    coin_spectra, markov_boundary_table, markov_check, markov_fraction_exact, parallel_repetition_value, QamInstance,
};
use qamg_core::qmam::{
    bloch_grid_value, build_qmam, fidelity_sum_gap, honest_value, max_accept_two_ways, optimize_cheating,
    optimize_game, random_unitary, repeat_game, repeat_strategy, uhlmann_bound_check, v_only_projector,
    QipInstance, SeesawOptions, StrategyClass,
};
use qamg_core::rng::{random_unit_vector, seeded};
use qamg_core::spectra::{acceptance_spectrum, DensityMatrix};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn gen(kind: Kind, seed: u64, p: GenParams) -> Result<Instance, String> {
    generate_instance(kind, seed, &p).map_err(e2s)
}

fn qma(kind: Kind, seed: u64, p: GenParams) -> Result<QmaInstance, String> {
    match gen(kind, seed, p)? {
        Instance::Qma { inst, .. } => Ok(inst),
        _ => Err("expected a one-message instance".into()),
    }
}

fn qip(kind: Kind, seed: u64, p: GenParams) -> Result<QipInstance, String> {
    match gen(kind, seed, p)? {
        Instance::Qmam(q) => Ok(q),
        _ => Err("expected a proof-system instance".into()),
    }
}

fn qam(kind: Kind, seed: u64, p: GenParams) -> Result<QamInstance, String> {
    match gen(kind, seed, p)? {
        Instance::Qam(q) => Ok(q),
        _ => Err("expected a two-message instance".into()),
    }
}

fn sizes(m: usize, k: usize) -> GenParams {
    GenParams {
        m: Some(m),
        k: Some(k),
        ..Default::default()
    }
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

// ---------------------------------------------------------------- oracles

fn matvec<S: Amplitude>(m: &[Vec<S>], v: &[S]) -> Vec<S> {
    m.iter()
        .map(|row| row.iter().zip(v).fold(S::zero(), |acc, (a, b)| acc.add(&a.mul(b))))
        .collect()
}

/// `<ψ| Q^w (I−Q)^{n−w} |ψ>`, the spectral sum without diagonalizing.
fn pattern_weight<S: Amplitude>(q: &[Vec<S>], psi: &[S], n: usize, w: usize) -> S {
    let mut v = psi.to_vec();
    for _ in 0..n - w {
        let qv = matvec(q, &v);
        v = v.iter().zip(&qv).map(|(a, b)| a.sub(b)).collect();
    }
    for _ in 0..w {
        v = matvec(q, &v);
    }
    psi.iter().zip(&v).fold(S::zero(), |acc, (a, b)| acc.add(&a.conj().mul(b)))
}

fn binom(n: usize, k: usize) -> BigInt {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    c
}

fn tail_exact(p: &BigRational, n: usize, threshold: usize) -> BigRational {
    let q = BigRational::one() - p;
    (threshold..=n)
        .map(|c| BigRational::from_integer(binom(n, c)) * num_traits::pow(p.clone(), c) * num_traits::pow(q.clone(), n - c))
        .fold(BigRational::zero(), |a, b| a + b)
}

/// `tr(Q)` by simulating every basis message.
fn trace_by_simulation(inst: &QmaInstance) -> Result<BigRational, String> {
    let mut total = BigRational::zero();
    let n = inst.width();
    for j in 0..1usize << inst.m {
        let out = apply_circuit(&StateVector::<ExactScalar>::basis(n, j << inst.k).map_err(e2s)?, &inst.verifier)
            .map_err(e2s)?;
        let top = 1usize << (n - 1);
        for (x, a) in out.amplitudes().iter().enumerate() {
            if x & top != 0 {
                total += a.norm_sqr().to_rational().ok_or("irrational probability")?;
            }
        }
    }
    Ok(total)
}

fn float_rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect()).collect()
}

// ---------------------------------------------------------------- criteria

fn c1_trajectory_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut rng = seeded(101);
    for seed in 0..50u64 {
        let (m, k, n) = (1 + seed as usize % 2, 1 + (seed as usize / 2) % 3, 1 + seed as usize % 6);
        let inst = qma(Kind::QmaRandom, seed, sizes(m, k))?;
        // float: random witness
        let q = inst.acceptance_operator(false).map_err(e2s)?;
        let psi = random_unit_vector(1 << m, &mut rng);
        let dist = run_procedure_b(&inst, &StateVector::from_amplitudes(psi.clone()).map_err(e2s)?, n).map_err(e2s)?;
        let qf = float_rows(q.matrix());
        for z in 0..1u64 << n {
            let w = z.count_ones() as usize;
            let want = pattern_weight(&qf, &psi, n, w).re;
            worst = worst.max((dist.prob(z).re - want).abs());
        }
        // exact: witness with exact amplitudes
        let qe = inst.acceptance_operator(true).map_err(e2s)?;
        let qe = qe.exact().ok_or("no exact operator")?.clone();
        let dim = 1usize << m;
        let (i, j) = (rng.random_range(0..dim), rng.random_range(0..dim));
        let mut amps = vec![ExactScalar::zero(); dim];
        if i == j {
            amps[i] = ExactScalar::one();
        } else {
            amps[i] = ExactScalar::frac_1_sqrt2();
            amps[j] = if rng.random_bool(0.5) {
                ExactScalar::frac_1_sqrt2()
            } else {
                ExactScalar::frac_1_sqrt2().mul_i()
            };
        }
        let exact = run_procedure_b(&inst, &StateVector::from_amplitudes(amps.clone()).map_err(e2s)?, n).map_err(e2s)?;
        for z in 0..1u64 << n {
            let want = pattern_weight(&qe, &amps, n, z.count_ones() as usize);
            ensure(Amplitude::sub(&exact.prob(z), &want).is_zero(), || {
                format!("seed {seed}: exact pattern {z:b} is {} but the spectral sum is {want}", exact.prob(z))
            })?;
        }
    }
    ensure(worst <= 1e-9, || format!("float residual {worst:e}"))?;
    Ok(format!("50 instances, float residual {worst:.1e}, exact mode equal"))
}

fn c2_amplification_endpoints() -> Outcome {
    let (a, b) = (rat(3, 4), rat(1, 4));
    for m in [1usize, 2] {
        let inst = qma(Kind::QmaPair, m as u64, sizes(m, 3))?;
        for r in [1u32, 2, 4] {
            let mw = amplify_mw(&inst, r).map_err(e2s)?;
            ensure(mw.q == 2 && mw.n == 32 * r as usize, || format!("r={r}: N = {}", mw.n))?;
            ensure(mw.message_qubits() == m, || format!("message length {} != {m}", mw.message_qubits()))?;
            ensure(mw.threshold == mw.n / 2, || format!("threshold {}", mw.threshold))?;
            let bound = BigRational::new(BigInt::one(), BigInt::one() << r);
            for p in [a.clone(), rat(7, 8), BigRational::one()] {
                let t = binomial_tail(&p, mw.n, mw.threshold);
                ensure(t == tail_exact(&p, mw.n, mw.threshold), || format!("tail mismatch at p={p}"))?;
                ensure(t >= BigRational::one() - &bound, || format!("r={r}, p={p}: acceptance {t}"))?;
            }
            for p in [b.clone(), rat(1, 8), BigRational::zero()] {
                let t = binomial_tail(&p, mw.n, mw.threshold);
                ensure(t == tail_exact(&p, mw.n, mw.threshold), || format!("tail mismatch at p={p}"))?;
                ensure(t <= bound, || format!("r={r}, p={p}: acceptance {t}"))?;
            }
        }
    }
    Ok("r in {1,2,4}, N = 32r, endpoints exact".into())
}

fn c3_recurrence() -> Outcome {
    let (mut found, mut worst) = (0, 0.0f64);
    let mut seed = 0u64;
    while found < 20 {
        ensure(seed < 500, || format!("only {found} instances with interior eigenvalues"))?;
        let inst = qma(Kind::QmaRandom, 1000 + seed, sizes(1 + seed as usize % 2, 1 + seed as usize % 3))?;
        seed += 1;
        let spec = acceptance_spectrum(&inst.acceptance_operator(false).map_err(e2s)?).map_err(e2s)?;
        if let Some(j) = spec.eigenvalues.iter().position(|p| *p > 1e-3 && *p < 1.0 - 1e-3) {
            let res = recurrence_residuals(&inst, &spec.eigenvector(j), spec.eigenvalues[j]).map_err(e2s)?;
            worst = worst.max(res.max());
            found += 1;
        }
    }
    ensure(worst <= 1e-9, || format!("residual {worst:e}"))?;
    Ok(format!("20 instances, max residual {worst:.1e}"))
}

fn c4_certificates() -> Outcome {
    let mut count = 0;
    for seed in 0..20u64 {
        let (m, k) = (1 + seed as usize % 3, 1 + seed as usize % 7);
        let inst = qma(Kind::QmaRandom, 2000 + seed, sizes(m, k))?;
        let cert = counting_certificate(&inst).map_err(e2s)?;
        let tr = trace_by_simulation(&inst)?;
        ensure(cert.value() == tr, || format!("seed {seed}: h/2^g = {} but tr(Q) = {tr}", cert.value()))?;
        ensure(exact_trace_certificate(&inst).map_err(e2s)?.value() == tr, || format!("seed {seed}: trace certificate"))?;
        count += 1;
    }
    let mut pairs = 0;
    for seed in 0..2u64 {
        for (label, spectrum) in [(Label::Yes, [rat(3, 4), rat(1, 4)]), (Label::No, [rat(1, 4), rat(1, 4)])] {
            let p = GenParams {
                label: Some(label),
                ..sizes(1, 3)
            };
            let inst = qma(Kind::QmaPair, 3000 + seed, p)?;
            let mw = amplify_mw(&inst, inst.m as u32 + 2).map_err(e2s)?;
            let cert = amplified_certificate(&mw).map_err(e2s)?;
            let want: BigRational = spectrum.iter().map(|p| tail_exact(p, mw.n, mw.threshold)).sum();
            ensure(cert.value() == want, || format!("{label:?}: certificate {} vs {want}", cert.value()))?;
            let (h4, p) = (&cert.h << 2u32, cert.pow2g());
            let (pos, neg) = a0pp_check(&cert);
            match label {
                Label::Yes => ensure(h4 >= &p * 3 && pos && !neg, || "yes pair fails".into())?,
                Label::No => ensure(h4 <= p && neg && !pos, || "no pair fails".into())?,
            }
        }
        pairs += 1;
    }
    Ok(format!("{count} exact instances bit-exact, {pairs} amplified pairs (N = 96) separated"))
}

fn c5_mixed_state() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let (m, k) = (1 + seed as usize % 3, 1 + seed as usize % 2);
        let inst = qma(Kind::QmaRandom, 4000 + seed, sizes(m, k))?;
        let mixed = mixed_state_acceptance(&inst).map_err(e2s)?;
        let tr = trace_by_simulation(&inst)?;
        let want = num_traits::ToPrimitive::to_f64(&tr).unwrap() / (1u64 << m) as f64;
        worst = worst.max((mixed.direct - want).abs()).max(mixed.discrepancy());
    }
    ensure(worst <= 1e-12, || format!("discrepancy {worst:e}"))?;
    Ok(format!("20 instances, m <= 3, max discrepancy {worst:.1e}"))
}

fn c6_qam_repetition() -> Outcome {
    let (mut worst, mut checked) = (0.0f64, 0);
    for seed in 0..25u64 {
        let s = 1 + seed as usize % 2;
        let p = GenParams {
            s: Some(s),
            ..sizes(1, 2)
        };
        let inst = qam(Kind::QamRandom, 5000 + seed, p)?;
        let tops: Vec<f64> = coin_spectra(&inst).map_err(e2s)?.iter().map(|c| c.top()).collect();
        let coins = inst.coins();
        for n in 1..=3usize {
            let threshold = n.div_ceil(2);
            for idx in 0..coins.pow(n as u32) {
                let ys: Vec<usize> = (0..n).map(|i| idx / coins.pow(i as u32) % coins).collect();
                let rv = parallel_repetition_value(&inst, &ys).map_err(e2s)?;
                // independent play, summed over outcome strings
                let mut f = 0.0;
                for x in 0..1usize << n {
                    if (x.count_ones() as usize) < threshold {
                        continue;
                    }
                    f += ys
                        .iter()
                        .enumerate()
                        .map(|(i, y)| if x >> i & 1 == 1 { tops[*y] } else { 1.0 - tops[*y] })
                        .product::<f64>();
                }
                worst = worst.max((rv.lambda_max - f).abs()).max(rv.residual());
                ensure(rv.corner_is_max(1e-9), || format!("seed {seed}, ys {ys:?}: lattice maximum off the corner"))?;
                checked += 1;
            }
        }
    }
    ensure(worst <= 1e-9, || format!("residual {worst:e}"))?;
    Ok(format!("25 instances, {checked} coin tuples, max residual {worst:.1e}"))
}

fn c7_markov() -> Outcome {
    for seed in 0..25u64 {
        let label = if seed % 2 == 0 { Label::Yes } else { Label::No };
        let p = GenParams {
            s: Some(1 + seed as usize % 6),
            error: Some(Prob::new(1, 9)),
            label: Some(label),
            ..Default::default()
        };
        let inst = qam(Kind::QamBounded, 6000 + seed, p)?;
        let rep = markov_check(&inst, label).map_err(e2s)?;
        let tops: Vec<f64> = coin_spectra(&inst).map_err(e2s)?.iter().map(|c| c.top()).collect();
        let err: f64 = tops.iter().map(|u| if label == Label::Yes { 1.0 - u } else { *u }).sum::<f64>() / tops.len() as f64;
        let good = tops
            .iter()
            .filter(|u| if label == Label::Yes { **u >= 2.0 / 3.0 } else { **u <= 1.0 / 3.0 })
            .count();
        ensure(err <= 1.0 / 9.0 + 1e-12 && rep.precondition_ok, || format!("seed {seed}: error {err}"))?;
        ensure(rep.good == good && 3 * good >= 2 * tops.len() && rep.passes, || {
            format!("seed {seed}: {good} of {} good", tops.len())
        })?;
    }
    let mu = markov_boundary_table(10);
    let exact = markov_fraction_exact(&mu, Label::Yes);
    ensure(exact.expected_error == rat(1, 9), || format!("boundary error {}", exact.expected_error))?;
    let good = mu.iter().filter(|u| (*u).clone() * BigInt::from(3) >= BigRational::from_integer(2.into())).count();
    let frac = BigRational::new(BigInt::from(good), BigInt::from(mu.len()));
    ensure(frac == exact.fraction_good && frac >= rat(2, 3) && exact.passes, || format!("boundary fraction {frac}"))?;
    Ok(format!("25 instances pass; boundary E[Z] = 1/9 with fraction {frac}"))
}

fn c8_qmam() -> Outcome {
    for seed in 0..10u64 {
        let (k, m) = (1 + seed as usize % 2, 1 + (seed as usize / 2) % 2);
        let base = qip(Kind::QipPerfect, 7000 + seed, sizes(m, k))?;
        let v = honest_value(&build_qmam(&base), &base.honest_strategy().map_err(e2s)?).map_err(e2s)?;
        ensure((v - 1.0).abs() <= 1e-9, || format!("perfect base {seed}: honest value {v}"))?;
    }
    let cases: [(i64, i64, usize); 10] =
        [(0, 1, 1), (0, 1, 1), (0, 1, 1), (0, 1, 3), (1, 4, 3), (1, 4, 3), (1, 4, 3), (1, 16, 3), (1, 16, 3), (1, 16, 3)];
    let mut worst_gap = f64::NEG_INFINITY;
    let mut grid_cases = 0;
    for (i, (n, d, k)) in cases.into_iter().chain([(1, 2, 1), (1, 2, 1)]).enumerate() {
        let p = GenParams {
            epsilon: Some(Prob::new(n, d)),
            ..sizes(1, k)
        };
        let base = qip(Kind::QipNo, 7100 + i as u64, p)?;
        let qm = build_qmam(&base);
        let out = optimize_cheating(&qm, &SeesawOptions::default()).map_err(e2s)?;
        let bound = 0.5 + (n as f64 / d as f64).sqrt() / 2.0;
        let v = out.best.value;
        ensure(v <= bound + 1e-4, || format!("eps={n}/{d}: cheat {v} > {bound}"))?;
        worst_gap = worst_gap.max(v - bound);
        if k == 1 {
            let (lt, lh) = base.projectors().map_err(e2s)?;
            let (pt, ph) = (
                v_only_projector(&lt, base.dv(), base.dm()).ok_or("tails projector acts on M")?,
                v_only_projector(&lh, base.dv(), base.dm()).ok_or("heads projector acts on M")?,
            );
            let grid = bloch_grid_value(&pt, &ph, 400).map_err(e2s)?;
            ensure((v - grid).abs() <= 1e-4, || format!("eps={n}/{d}: cheat {v} vs grid {grid}"))?;
            grid_cases += 1;
        }
    }
    Ok(format!(
        "10 honest bases at 1; 12 no-instances, max(cheat - bound) = {worst_gap:.1e}; {grid_cases} grid checks"
    ))
}

fn c9_fidelity() -> Outcome {
    let mut rng = seeded(909);
    let mut worst = f64::INFINITY;
    for _ in 0..1000 {
        let d = rng.random_range(2..=8);
        let mut st = || {
            let r = rng.random_range(1..=d);
            DensityMatrix::random(d, r, &mut rng)
        };
        let (rho, sigma, xi) = (st(), st(), st());
        worst = worst.min(fidelity_sum_gap(&rho, &sigma, &xi).map_err(e2s)?);
    }
    ensure(worst >= -1e-9, || format!("inequality violated by {:e}", -worst))?;
    let mut slack = f64::INFINITY;
    for _ in 0..1000 {
        let (dv, dm) = [(2, 2), (2, 3), (2, 4), (3, 2), (4, 2)][rng.random_range(0..5)];
        let d = dv * dm;
        let joint = DensityMatrix::random(d, rng.random_range(1..=d), &mut rng);
        let u = random_unitary(d, &mut rng).map_err(e2s)?;
        let rank = rng.random_range(1..d);
        let lambda = CMatrix::from_fn(d, d, |i, j| (0..rank).map(|c| u[(i, c)] * u[(j, c)].conj()).sum::<C>());
        let chk = uhlmann_bound_check(&joint, dv, dm, &lambda).map_err(e2s)?;
        ensure(chk.holds(1e-9), || format!("measured {} above bound {}", chk.measured, chk.bound))?;
        slack = slack.min(chk.bound - chk.measured);
    }
    Ok(format!("1000 triples (min gap {worst:.1e}), 1000 joints (min slack {slack:.1e})"))
}

fn c10_two_ways() -> Outcome {
    let shapes = [(1, 1), (1, 1), (1, 2), (2, 1), (1, 2), (2, 1), (2, 2), (2, 2), (1, 3), (3, 1)];
    let mut worst = 0.0f64;
    for (i, (k, m)) in shapes.into_iter().enumerate() {
        let base = qip(Kind::QipRandom, 8000 + i as u64, sizes(m, k))?;
        let two = max_accept_two_ways(&base, &SeesawOptions::default()).map_err(e2s)?;
        ensure(two.discrepancy() <= 1e-6, || {
            format!("k={k} m={m}: direct {} vs fidelity form {}", two.direct, two.fidelity_form)
        })?;
        worst = worst.max(two.discrepancy());
    }
    Ok(format!("10 instances, max discrepancy {worst:.1e}"))
}

fn c11_parallel_repetition() -> Outcome {
    let p = GenParams {
        epsilon: Some(Prob::new(1, 2)),
        ..sizes(1, 1)
    };
    let base = qip(Kind::QipNo, 9000, p)?;
    let qm = build_qmam(&base);
    let game = qm.game().map_err(e2s)?;
    let opts = SeesawOptions::default();
    let single = optimize_cheating(&qm, &opts).map_err(e2s)?.best;
    let b = single.value;
    let expect = 0.5 * (1.0 + std::f64::consts::FRAC_1_SQRT_2);
    ensure((b - expect).abs() <= 1e-6, || format!("single-shot value {b}, expected {expect}"))?;
    let g2 = repeat_game(&game, 2).map_err(e2s)?;
    let warm = repeat_strategy(&game, &single.strategy, 2).map_err(e2s)?;
    let rep = optimize_game(
        &g2,
        &SeesawOptions {
            class: StrategyClass::PerCoin,
            ..opts.clone()
        },
        &[warm],
    )
    .map_err(e2s)?;
    ensure(rep.value <= b * b + 1e-3, || format!("repeated cheat {} > b^2 = {}", rep.value, b * b))?;
    let perfect = qip(Kind::QipPerfect, 9001, sizes(1, 1))?;
    let pq = build_qmam(&perfect);
    let pg = pq.game().map_err(e2s)?;
    let honest = pq.honest_translation(&perfect.honest_strategy().map_err(e2s)?).map_err(e2s)?;
    let hv = repeat_game(&pg, 2).map_err(e2s)?.value(&repeat_strategy(&pg, &honest, 2).map_err(e2s)?);
    ensure((hv - 1.0).abs() <= 1e-9, || format!("repeated honest value {hv}"))?;
    Ok(format!("b = {b:.6}, repeated cheat {:.6} <= b^2 = {:.6}, honest {hv:.9}", rep.value, b * b))
}

fn c12_unitarity() -> Outcome {
    let mut rng = seeded(1212);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let width = 2 + i % 5;
        let c = random_circuit(width, rng.random_range(1..=40), &mut rng).map_err(e2s)?;
        let u = unitary_matrix::<ExactScalar>(&c).map_err(e2s)?;
        let dim = u.len();
        for a in 0..dim {
            for b in 0..dim {
                let s = (0..dim).fold(ExactScalar::zero(), |acc, r| Amplitude::add(&acc, &u[r][a].conj().mul(&u[r][b])));
                let want = if a == b { ExactScalar::one() } else { ExactScalar::zero() };
                ensure(Amplitude::sub(&s, &want).is_zero(), || format!("circuit {i}: (U†U)[{a}][{b}] = {s}"))?;
            }
        }
        let uf = unitary_matrix::<Complex64>(&c).map_err(e2s)?;
        for (re, rf) in u.iter().zip(&uf) {
            for (e, f) in re.iter().zip(rf) {
                worst = worst.max((e.to_c64() - f).norm());
            }
        }
    }
    ensure(worst <= 1e-12, || format!("float/exact gap {worst:e}"))?;
    Ok(format!("100 circuits unitary bit-exact, float/exact gap {worst:.1e}"))
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 12] = [
        ("trajectory distribution oracle", 30, c1_trajectory_oracle),
        ("amplification endpoints", 5, c2_amplification_endpoints),
        ("recurrence residuals", 10, c3_recurrence),
        ("counting certificate exactness", 60, c4_certificates),
        ("mixed-state reduction", 5, c5_mixed_state),
        ("two-message repetition optimality", 60, c6_qam_repetition),
        ("Markov fraction", 30, c7_markov),
        ("three-message completeness and soundness", 300, c8_qmam),
        ("fidelity inequality and Uhlmann bound", 60, c9_fidelity),
        ("two characterizations of max acceptance", 120, c10_two_ways),
        ("three-message parallel repetition", 300, c11_parallel_repetition),
        ("exactness and unitarity", 30, c12_unitarity),
    ];
    let only: Option<usize> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        let start = Instant::now();
        let out = f();
        let took = start.elapsed();
        let out = match out {
            Ok(msg) if took > Duration::from_secs(*limit) => Err(format!("{msg}; took {took:.1?}, limit {limit}s")),
            other => other,
        };
        match out {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg} [{took:.2?}]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg} [{took:.2?}]", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
