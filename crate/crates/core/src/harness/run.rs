use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use super::report::{Check, Report};
use super::{atomic_write, ExperimentConfig, Instance, Mode};
use crate::amplification::{
    amplify_kitaev, binomial_tail, counting_certificate, exact_trace_certificate, mixed_state_acceptance,
    run_procedure_b, sample_procedure_b, Label, QmaInstance, TrajectoryDistribution,
};
use crate::circuit::{width_caps, Amplitude, FloatState, StateVector};
use crate::error::{Error, Result};
use crate::exact::ExactScalar;
use crate::qam::{
    bp_pp_conditions, coin_spectra, markov_check, markov_check_sampled, optimal_qam_value, optimal_strategy,
    parallel_repetition_value, qam_value, simulated_qam_value, QamInstance, EXHAUSTIVE_COIN_CAP,
};
use crate::qmam::{
    build_qmam, honest_value, optimize_cheating, optimize_game, repeat_game, repeat_strategy, soundness_bound,
    v_only_value, QipInstance, SeesawOptions, StrategyClass,
};
use crate::rng::{seeded, RNG_NAME};
use crate::spectra::{acceptance_spectrum, max_acceptance, SpectralDecomposition, EIGEN_DIM_CAP};

/// Accuracy of float eigenvalues and simulated probabilities.
const FLOAT_TOL: f64 = 1e-9;
const DEFAULT_REPS: usize = 4;
const DEFAULT_SAMPLES: usize = 1000;
const DEFAULT_RESTARTS: usize = 16;
/// Coin tuples scanned exhaustively before falling back to a seeded sample.
const TUPLE_SCAN_CAP: usize = 256;
const TUPLE_SAMPLE: usize = 64;

/// Loads the instance, runs it and writes the report when an output path is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let inst = Instance::load(&cfg.instance)?;
    let report = run_instance(&inst, cfg)?;
    if let Some(out) = &cfg.output {
        atomic_write(out, report.to_json()?.as_bytes())?;
    }
    Ok(report)
}

/// Runs independent experiments in parallel, results in input order.
pub fn run_batch(cfgs: &[ExperimentConfig]) -> Vec<Result<Report>> {
    cfgs.par_iter().map(run_experiment).collect()
}

pub fn run_instance(inst: &Instance, cfg: &ExperimentConfig) -> Result<Report> {
    let protocol = inst.protocol();
    cfg.validate(protocol)?;
    let start = Instant::now();
    let mut r = Report {
        protocol,
        mode: cfg.mode,
        instance: cfg.instance.display().to_string(),
        label: inst.label(),
        seed: cfg.seed,
        rng: RNG_NAME.to_string(),
        exact: cfg.exact,
        params: BTreeMap::new(),
        values: BTreeMap::new(),
        exact_values: BTreeMap::new(),
        checks: Vec::new(),
        table: BTreeMap::new(),
        passed: false,
        wall_clock_s: 0.0,
    };
    for (k, v) in [("reps", cfg.reps), ("copies", cfg.copies), ("restarts", cfg.restarts), ("samples", cfg.samples)] {
        if let Some(v) = v {
            r.params.insert(k.into(), v as u64);
        }
    }
    match inst {
        Instance::Qma { inst, spectrum } => run_qma(inst, spectrum.as_deref(), cfg, &mut r)?,
        Instance::Qam(q) => run_qam(q, cfg, &mut r)?,
        Instance::Qmam(q) => run_qmam(q, cfg, &mut r)?,
    }
    r.passed = r.checks.iter().all(|c| c.pass);
    r.wall_clock_s = start.elapsed().as_secs_f64();
    Ok(r)
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

/// `Σ_j w_j p_j^{w}(1−p_j)^{N−w}` for a pattern of weight `w`.
fn pattern_oracle(spec: &SpectralDecomposition, weights: &[f64], n: usize, w: usize) -> f64 {
    spec.eigenvalues
        .iter()
        .zip(weights)
        .map(|(p, a)| a * p.powi(w as i32) * (1.0 - p).powi((n - w) as i32))
        .sum()
}

fn tail_oracle(spec: &SpectralDecomposition, weights: &[f64], n: usize, threshold: usize) -> f64 {
    spec.eigenvalues
        .iter()
        .zip(weights)
        .map(|(p, a)| a * binomial_tail(p, n, threshold))
        .sum()
}

fn distribution_residual<S: Amplitude>(
    dist: &TrajectoryDistribution<S>,
    spec: &SpectralDecomposition,
    weights: &[f64],
) -> f64 {
    (0..1u64 << dist.n)
        .map(|z| {
            let w = TrajectoryDistribution::<S>::weight(z);
            (dist.prob(z).to_c64().re - pattern_oracle(spec, weights, dist.n, w)).abs()
        })
        .fold(0.0, f64::max)
}

fn certificate_checks(inst: &QmaInstance, r: &mut Report) -> Result<()> {
    let counted = counting_certificate(inst)?;
    let traced = exact_trace_certificate(inst)?;
    r.exact_values.insert("certificate_h".into(), counted.h.to_string());
    r.exact_values.insert("certificate_g".into(), counted.g.to_string());
    r.exact_values.insert("trace".into(), traced.value().to_string());
    r.check(Check::holds("certificate_equals_trace", counted.value() == traced.value()));
    Ok(())
}

/// Whether the instance is treated as a yes-instance when computing errors.
fn truth(inst: &QmaInstance, top: f64) -> Label {
    inst.label.unwrap_or(if top >= inst.thresholds.midpoint() {
        Label::Yes
    } else {
        Label::No
    })
}

fn run_qma(inst: &QmaInstance, declared: Option<&[f64]>, cfg: &ExperimentConfig, r: &mut Report) -> Result<()> {
    let q = inst.acceptance_operator(false)?;
    let spec = acceptance_spectrum(&q)?;
    let top = spec.eigenvalues[0];
    r.value("top_eigenvalue", top, FLOAT_TOL);
    if let Some(d) = declared {
        let diff = if d.len() == spec.eigenvalues.len() {
            d.iter().zip(&spec.eigenvalues).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        r.check(Check::within("declared_spectrum", diff, 0.0, FLOAT_TOL));
    }
    if cfg.exact {
        check_exact_width(inst.width())?;
    }
    let top_vec = FloatState::from_amplitudes(spec.eigenvector(0))?;
    match cfg.mode {
        Mode::Enumerate => {
            let n = cfg.reps.unwrap_or(DEFAULT_REPS);
            let threshold = inst.thresholds.count_threshold(n);
            let (residual, acceptance, analytic) = if cfg.exact {
                // exact amplitudes need an exact witness: the all-zero message
                let w = StateVector::<ExactScalar>::basis(inst.m, 0)?;
                let weights = spec.weights(w.to_float().amplitudes());
                let dist = run_procedure_b(inst, &w, n)?;
                r.exact_values.insert("acceptance".into(), dist.acceptance().to_string());
                certificate_checks(inst, r)?;
                (
                    distribution_residual(&dist, &spec, &weights),
                    dist.acceptance().to_c64().re,
                    tail_oracle(&spec, &weights, n, threshold),
                )
            } else {
                let weights = spec.weights(top_vec.amplitudes());
                let dist = run_procedure_b(inst, &top_vec, n)?;
                (
                    distribution_residual(&dist, &spec, &weights),
                    dist.acceptance().re,
                    tail_oracle(&spec, &weights, n, threshold),
                )
            };
            r.value("acceptance", acceptance, FLOAT_TOL);
            r.value("analytic_acceptance", analytic, FLOAT_TOL);
            r.check(Check::within("pattern_residual", residual, 0.0, FLOAT_TOL));
            r.check(Check::within("acceptance_residual", acceptance, analytic, FLOAT_TOL));
            r.row("N", n);
            r.row("threshold", threshold);
            r.row("acceptance", acceptance);
            r.row("analytic", analytic);
            r.row("residual", residual);
        }
        Mode::Sample => {
            let n = cfg.reps.unwrap_or(DEFAULT_REPS);
            let samples = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
            let mut rng = seeded(cfg.seed.expect("validated"));
            let seeds: Vec<u64> = (0..samples).map(|_| rng.random()).collect();
            let accepted = seeds
                .iter()
                .map(|&s| sample_procedure_b(inst, &top_vec, n, s).map(|run| run.accepted as usize))
                .sum::<Result<usize>>()?;
            let estimate = accepted as f64 / samples as f64;
            let weights = spec.weights(top_vec.amplitudes());
            let analytic = tail_oracle(&spec, &weights, n, inst.thresholds.count_threshold(n));
            let five_sigma = 5.0 * (analytic * (1.0 - analytic) / samples as f64).sqrt() + FLOAT_TOL;
            r.value("estimate", estimate, five_sigma);
            r.value("analytic_acceptance", analytic, FLOAT_TOL);
            r.check(Check::within("estimate_vs_analytic", estimate, analytic, five_sigma));
            r.row("N", n);
            r.row("samples", samples);
            r.row("estimate", estimate);
            r.row("analytic", analytic);
        }
        Mode::Analytic => {
            let label = truth(inst, top);
            let (scheme, n_or_t, message_qubits, acc) = if let Some(t) = cfg.copies {
                let kit = amplify_kitaev(inst, t)?;
                let acc = binomial_tail(&top, t, kit.threshold);
                if (1usize << kit.message_qubits()) <= EIGEN_DIM_CAP {
                    let lam = max_acceptance(&kit.acceptance_operator()?)?;
                    r.check(Check::within("copies_top_vs_product", lam, acc, FLOAT_TOL));
                }
                ("copies", t, kit.message_qubits(), acc)
            } else {
                let q2 = inst.thresholds.gap_q() as usize * inst.thresholds.gap_q() as usize;
                let n = cfg.reps.unwrap_or(8 * q2);
                let acc = binomial_tail(&top, n, inst.thresholds.count_threshold(n));
                let r_eff = n / (8 * q2);
                let t = &inst.thresholds;
                let in_promise = match label {
                    Label::Yes => top >= t.a.to_f64() - FLOAT_TOL,
                    Label::No => top <= t.b.to_f64() + FLOAT_TOL,
                };
                if r_eff >= 1 && in_promise {
                    let err = if label == Label::Yes { 1.0 - acc } else { acc };
                    r.check(Check::at_most("amplified_error", err, (-(r_eff as f64)).exp2(), 1e-12));
                }
                ("repeated", n, inst.m, acc)
            };
            let error = if label == Label::Yes { 1.0 - acc } else { acc };
            r.value("acceptance", acc, FLOAT_TOL);
            r.value("error", error, FLOAT_TOL);
            if inst.m <= 3 {
                let mixed = mixed_state_acceptance(inst)?;
                r.value("mixed_state_acceptance", mixed.direct, 1e-12);
                r.check(Check::within("mixed_vs_basis_average", mixed.discrepancy(), 0.0, 1e-12));
            }
            if cfg.exact {
                certificate_checks(inst, r)?;
            }
            r.row("scheme", scheme);
            r.row("N_or_t", n_or_t);
            r.row("message_qubits", message_qubits);
            r.row("error", error);
        }
    }
    Ok(())
}

/// Coin tuples of length `n`: all of them, or a seeded sample when too many.
fn coin_tuples(coins: usize, n: usize, seed: u64) -> Vec<Vec<usize>> {
    let total = (coins as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if total <= TUPLE_SCAN_CAP as u128 {
        (0..total as usize)
            .map(|mut i| {
                let mut t = vec![0; n];
                for slot in t.iter_mut().rev() {
                    *slot = i % coins;
                    i /= coins;
                }
                t
            })
            .collect()
    } else {
        let mut rng = seeded(seed);
        (0..TUPLE_SAMPLE)
            .map(|_| (0..n).map(|_| rng.random_range(0..coins)).collect())
            .collect()
    }
}

fn run_qam(inst: &QamInstance, cfg: &ExperimentConfig, r: &mut Report) -> Result<()> {
    if cfg.exact {
        check_exact_width(inst.m + inst.k)?;
    }
    let value = optimal_qam_value(inst)?;
    r.value("value", value, FLOAT_TOL);
    let pairing = coin_spectra(inst)?
        .iter()
        .map(|c| c.pairing_residual())
        .fold(0.0, f64::max);
    r.check(Check::within("spectral_pairing", pairing, 0.0, FLOAT_TOL));
    let n = cfg.reps.unwrap_or(2);
    let mut fraction = serde_json::Value::Null;
    let mut rep_residual = 0.0;
    match cfg.mode {
        Mode::Enumerate | Mode::Analytic => {
            let tuples = coin_tuples(inst.coins(), n, cfg.seed.unwrap_or(0));
            let reps = tuples
                .par_iter()
                .map(|ys| parallel_repetition_value(inst, ys))
                .collect::<Result<Vec<_>>>()?;
            rep_residual = reps.iter().map(|v| v.residual()).fold(0.0, f64::max);
            let corners = reps.iter().filter(|v| !v.corner_is_max(FLOAT_TOL)).count();
            r.value("tuples", tuples.len() as f64, 0.0);
            r.check(Check::within("repetition_residual", rep_residual, 0.0, FLOAT_TOL));
            r.check(Check::at_most("lattice_corner_violations", corners as f64, 0.0, 0.0));
            if cfg.mode == Mode::Enumerate {
                let strat = optimal_strategy(inst)?;
                let simulated = simulated_qam_value(inst, &strat)?;
                r.check(Check::within("simulated_value", simulated, qam_value(inst, &strat)?, FLOAT_TOL));
            }
            if let Some(label) = inst.label {
                if inst.s <= EXHAUSTIVE_COIN_CAP {
                    let m = markov_check(inst, label)?;
                    fraction = markov_values(&m, r).into();
                }
            }
            if cfg.exact {
                let certs = bp_pp_conditions(inst)?;
                let bad = certs.iter().filter(|c| !c.consistent()).count();
                let in_k = certs.iter().filter(|c| c.in_k).count();
                r.value("coins_in_k", in_k as f64, 0.0);
                r.check(Check::at_most("certificate_inconsistencies", bad as f64, 0.0, 0.0));
            }
        }
        Mode::Sample => {
            let label = inst
                .label
                .ok_or_else(|| Error::Config("sampled Markov check needs a labelled instance".into()))?;
            let m = markov_check_sampled(inst, label, cfg.seed.expect("validated"))?;
            fraction = markov_values(&m, r).into();
        }
    }
    r.row("s", inst.s);
    r.row("N", n);
    r.row("value", value);
    r.row("repetition_residual", rep_residual);
    r.row("fraction_good", fraction);
    Ok(())
}

fn markov_values(m: &crate::qam::MarkovReport, r: &mut Report) -> f64 {
    r.value("expected_error", m.expected_error, FLOAT_TOL);
    r.value("fraction_good", m.fraction_good, 0.0);
    if m.precondition_ok {
        r.check(Check::at_least("markov_fraction", m.fraction_good, 2.0 / 3.0, 0.0));
    }
    m.fraction_good
}

fn run_qmam(base: &QipInstance, cfg: &ExperimentConfig, r: &mut Report) -> Result<()> {
    let opts = SeesawOptions {
        restarts: cfg.restarts.unwrap_or(DEFAULT_RESTARTS),
        seed: cfg.seed.unwrap_or(0),
        ..SeesawOptions::default()
    };
    let qm = build_qmam(base);
    let game = qm.game()?;
    let bound = soundness_bound(base);
    let honest = match &base.honest_prover {
        Some(_) => {
            let prover = base.honest_strategy()?;
            let v = honest_value(&qm, &prover)?;
            r.check(Check::within("honest_value", v, 1.0, FLOAT_TOL));
            Some((v, qm.honest_translation(&prover)?))
        }
        None => None,
    };
    let cheat = optimize_cheating(&qm, &opts)?;
    let b = cheat.best.value;
    r.value("cheat_value", b, opts.tol);
    r.value("single_u_value", cheat.single_u.value, opts.tol);
    r.value("bound", bound, 0.0);
    r.value("iterations", cheat.best.iterations as f64, 0.0);
    let sound = base.label == Some(Label::No);
    if sound {
        r.check(Check::at_most("cheat_vs_bound", b, bound, 1e-4));
    }
    if let Some(v) = v_only_value(&qm)? {
        r.value("v_only_value", v, FLOAT_TOL);
        r.check(Check::at_least("cheat_reaches_v_only_optimum", b, v, 1e-4));
    }
    let t = cfg.copies.unwrap_or(1);
    let mut rep_value = b;
    if t >= 2 {
        let g = repeat_game(&game, t)?;
        if let Some((_, s)) = &honest {
            let hv = g.value(&repeat_strategy(&game, s, t)?);
            r.check(Check::within("repeated_honest_value", hv, 1.0, FLOAT_TOL));
        }
        let warm = repeat_strategy(&game, &cheat.best.strategy, t)?;
        let rep = optimize_game(
            &g,
            &SeesawOptions {
                class: StrategyClass::PerCoin,
                ..opts.clone()
            },
            &[warm],
        )?;
        rep_value = rep.value;
        r.value("repeated_cheat_value", rep.value, opts.tol);
        if sound {
            r.check(Check::at_most("repeated_cheat_vs_power", rep.value, b.powi(t as i32), 1e-3));
        }
    }
    r.row("k", base.k);
    r.row("m", base.m);
    r.row("epsilon", base.epsilon);
    r.row("copies", t);
    r.row("honest_value", honest.as_ref().map(|h| h.0));
    r.row("cheat_value", b);
    r.row("repeated_cheat_value", rep_value);
    r.row("bound", bound);
    r.row("converged", cheat.best.converged);
    r.row("iterations", cheat.best.iterations);
    Ok(())
}
