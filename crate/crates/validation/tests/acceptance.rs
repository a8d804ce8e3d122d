//! Acceptance checks: one PASS/FAIL line per criterion.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::f64::consts::{PI, SQRT_2};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use macroent::mcsim::{collective_commutator_norm, estimate_f_bipartition, estimate_f_iid, exact_loss_oracle};
use macroent::mcsim::{Bipartition, RunConfig};
use macroent::optimizer::{optimize_ime, optimize_observables, optimize_rme, SearchMode};
use macroent::quantum::*;
use macroent::robustness::{sweep_q, witness_threshold};
use macroent::witness::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(id: usize, limit: Duration, body: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let out = body();
    let elapsed = t.elapsed();
    let pass = out.pass && elapsed < limit;
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} {verdict}: {} [{:.2} s, limit {} s]", out.detail, elapsed.as_secs_f64(), limit.as_secs());
    pass
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn threshold(s: &PairScenario, form: WitnessForm, kind: NoiseKind) -> f64 {
    witness_threshold(s, form, kind, None, &AdversaryOptions::default()).map(|t| t.critical_value).unwrap_or(f64::NAN)
}

fn main() -> ExitCode {
    let mut results = Vec::new();
    let rme = rme_state();
    let ime = ime_state();

    results.push(check(1, secs(30), || {
        let r = optimize_rme(2, 64, 0, SearchMode::SpinPlane).unwrap();
        let target = 4.0 * (1.0 - SQRT_2);
        let schmidt = r.scenario.pure_state().unwrap().schmidt_coefficients();
        let ds = (schmidt[0] - (PI / 8.0).cos()).abs().max((schmidt[1] - (PI / 8.0).sin()).abs());
        Outcome {
            pass: (r.best_f - target).abs() <= 1e-6 && ds <= 1e-4,
            detail: format!("qubit optimum best_f = {:.10} (target {target:.10}), Schmidt deviation {ds:.2e}", r.best_f),
        }
    }));

    results.push(check(2, secs(1), || {
        let lambda = threshold(&rme, WitnessForm::Iid, NoiseKind::Depolarize);
        let p = threshold(&rme, WitnessForm::Iid, NoiseKind::Loss);
        let lambda_exact = (3.0 - (1.0 + 4.0 * SQRT_2).sqrt()) / 2.0;
        let p_exact = 2.0 - SQRT_2;
        Outcome {
            pass: (lambda - lambda_exact).abs() <= 1e-9 && (p - p_exact).abs() <= 1e-9,
            detail: format!(
                "lambda* = {lambda:.12} (exact {lambda_exact:.12}), p* = {p:.12} (exact {p_exact:.12})"
            ),
        }
    }));

    results.push(check(3, secs(120), || {
        let eps = threshold(&rme, WitnessForm::Iid, NoiseKind::Povm);
        let exact = (SQRT_2 - 1.0) / (3.0 * SQRT_2);
        Outcome {
            pass: (eps - exact).abs() <= 1e-3,
            detail: format!("qubit worst-case POVM threshold eps* = {eps:.7} (exact {exact:.7})"),
        }
    }));

    let mut ime_opt = None;
    results.push(check(4, secs(300), || {
        let canonical = f_avg(&ime).f;
        let r = optimize_ime(3, 256, 0).unwrap();
        let outcome = Outcome {
            pass: (-0.22..=-0.20).contains(&canonical) && r.best_f <= -0.20,
            detail: format!("f_avg(ime) = {canonical:.6}, 256-start qutrit search best_f = {:.10}", r.best_f),
        };
        ime_opt = Some(r.scenario);
        outcome
    }));

    results.push(check(5, secs(300), || {
        let Some(s) = ime_opt.as_ref() else {
            return Outcome { pass: false, detail: "no optimized qutrit scenario".into() };
        };
        let dep = threshold(s, WitnessForm::Averaged, NoiseKind::Depolarize);
        let loss = threshold(s, WitnessForm::Averaged, NoiseKind::Loss);
        let povm = threshold(s, WitnessForm::Averaged, NoiseKind::Povm);
        let dep_c = threshold(&ime, WitnessForm::Averaged, NoiseKind::Depolarize);
        let loss_c = threshold(&ime, WitnessForm::Averaged, NoiseKind::Loss);
        Outcome {
            pass: (0.055..=0.065).contains(&dep) && (0.235..=0.245).contains(&loss) && (0.015..=0.025).contains(&povm),
            detail: format!(
                "optimized qutrit state: lambda* = {dep:.5}, p* = {loss:.5}, eps* = {povm:.5}; \
                 rounded canonical state: lambda* = {dep_c:.5}, p* = {loss_c:.5}"
            ),
        }
    }));

    results.push(check(6, secs(1), || {
        let t = sweep_q(&ime, 101).unwrap();
        let frac = t.negative_fraction();
        let gap = (t.trapezoid() - f_avg(&ime).f).abs();
        Outcome {
            pass: t.grid.len() == 101 && frac >= 0.9 && gap <= 1e-3,
            detail: format!("negative fraction {frac:.4}, |trapezoid - f_avg| = {gap:.2e}"),
        }
    }));

    results.push(check(7, secs(300), || {
        let qubit = optimize_ime(2, 256, 0).unwrap().best_f;
        let phi = optimize_observables(&phi_plus(), WitnessForm::Iid, SearchMode::General, 256, 0).unwrap().best_f;
        Outcome {
            pass: qubit >= -1e-6 && phi >= -1e-6,
            detail: format!(
                "qubit averaged search best = {qubit:.8} (needs >= -1e-6), maximally entangled qubit best f = {phi:.2e}"
            ),
        }
    }));

    results.push(check(8, secs(60), || {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut lift = 0.0f64;
        for trial in 0..100 {
            let n = 1 + trial % 4;
            let d = if n == 4 { 2 } else { 2 + trial % 2 };
            let s = random_scenario(&mut rng, d);
            lift = lift.max((lifted_witness(&s, n) - f_iid(&s).f).abs());
        }
        let mut split = 0.0f64;
        let mut cases = vec![ime.clone(), rme.clone()];
        cases.extend((0..4).map(|i| random_symmetric_scenario(&mut rng, 2 + i % 2)));
        for s in &cases {
            for q in [0.2, 0.5, 0.8] {
                split = split.max((split_witness(s, 3, q, 0.0) - f_q(s, q).unwrap().f).abs());
            }
        }
        let mut loss = 0.0f64;
        let loss_cases = [rme.clone(), ime.clone(), random_scenario(&mut rng, 2)];
        for s in &loss_cases {
            for n in 1..=4 {
                for p in [0.0, 0.1, 0.3, 0.5, 0.7, 1.0] {
                    let closed = f_iid_noisy(s, &NoiseSpec::loss(p).unwrap()).unwrap().f;
                    loss = loss.max((exact_loss_oracle(s, n, p).unwrap().f - closed).abs());
                }
            }
        }
        Outcome {
            pass: lift <= 1e-10 && split <= 1e-10 && loss <= 1e-12,
            detail: format!("max deviations: copies {lift:.1e}, multinomial split {split:.1e}, loss patterns {loss:.1e}"),
        }
    }));

    results.push(check(9, secs(60), || {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut worst = f64::INFINITY;
        for trial in 0..10_000 {
            let d = 2 + trial % 2;
            let rho = random_separable(&mut rng, d);
            let ops: Vec<Observable> = (0..4).map(|_| random_observable(&mut rng, d)).collect();
            let f = f_general(&rho, &ops[0], &ops[1], &ops[2], &ops[3], d, d).unwrap().f;
            worst = worst.min(f);
        }
        Outcome { pass: worst >= -1e-9, detail: format!("minimum f over 10000 separable states = {worst:.3e}") }
    }));

    results.push(check(10, secs(180), || {
        let a = estimate_f_iid(&rme, &RunConfig::new(512, 4096, 20240601)).unwrap();
        let target_a = 4.0 * (1.0 - SQRT_2);
        let cfg = RunConfig { bipartition: Bipartition::Random, ..RunConfig::new(256, 8192, 20240602) };
        let b = estimate_f_bipartition(&ime, &cfg).unwrap();
        let target_b = f_avg(&ime).f;
        let za = (a.f_hat - target_a).abs() / a.stderr;
        let zb = (b.f_hat - target_b).abs() / b.stderr;
        Outcome {
            pass: za <= 4.0 && zb <= 4.0,
            detail: format!(
                "fixed split {:.4} +- {:.4} ({za:.2} sigma), random split {:.4} +- {:.4} ({zb:.2} sigma)",
                a.f_hat, a.stderr, b.f_hat, b.stderr
            ),
        }
    }));

    results.push(check(11, secs(1), || {
        let x = Observable::new(pauli_x()).unwrap();
        let y = Observable::new(pauli_y()).unwrap();
        let mut worst = 0.0f64;
        for n in [1usize, 2, 3, 10, 100, 1000, 1_000_000] {
            for alpha in [0.0, 0.5, 1.0] {
                let expected = 2.0 * (n as f64).powf(1.0 - 2.0 * alpha);
                let v = collective_commutator_norm(&x, &y, n, alpha).unwrap();
                worst = worst.max((v - expected).abs() / expected);
            }
        }
        Outcome {
            pass: worst <= 1e-12,
            detail: format!("max relative deviation from 2 n^(1 - 2 alpha) = {worst:.1e}"),
        }
    }));

    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
