#![allow(dead_code)]

use macroent::linalg::{apply_local, eig_hermitian, hermitian_from_params, inner, tensor, tensor_all, CMatrix};
use macroent::quantum::{Ket, Observable, PairScenario};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn random_amplitudes<R: Rng>(rng: &mut R, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

pub fn random_ket<R: Rng>(rng: &mut R, d: usize) -> Ket {
    Ket::normalized(d, random_amplitudes(rng, d * d)).unwrap()
}

pub fn random_hermitian<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    let p: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    hermitian_from_params(d, &p)
}

/// Random Hermitian matrix rescaled to operator norm `norm`.
pub fn random_bounded<R: Rng>(rng: &mut R, d: usize, norm: f64) -> CMatrix {
    let h = random_hermitian(rng, d);
    let es = eig_hermitian(&h).unwrap();
    h.scale_real(norm / es.max_abs().max(1e-12))
}

pub fn random_observable<R: Rng>(rng: &mut R, d: usize) -> Observable {
    let norm = rng.random_range(0.1..1.0);
    Observable::new(random_bounded(rng, d, norm)).unwrap()
}

pub fn random_scenario(rng: &mut ChaCha8Rng, d: usize) -> PairScenario {
    let ket = random_ket(rng, d);
    let ops: Vec<Observable> = (0..4).map(|_| random_observable(rng, d)).collect();
    PairScenario::from_ket(&ket, ops[0].clone(), ops[1].clone(), ops[2].clone(), ops[3].clone()).unwrap()
}

/// Permutation-symmetric random scenario.
pub fn random_symmetric_scenario(rng: &mut ChaCha8Rng, d: usize) -> PairScenario {
    let mut amps = random_amplitudes(rng, d * d);
    for i in 0..d {
        for j in 0..i {
            amps[i * d + j] = amps[j * d + i];
        }
    }
    let ket = Ket::normalized(d, amps).unwrap();
    let ops: Vec<Observable> = (0..4).map(|_| random_observable(rng, d)).collect();
    PairScenario::from_ket(&ket, ops[0].clone(), ops[1].clone(), ops[2].clone(), ops[3].clone()).unwrap()
}

pub fn hermitian_strategy(d: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec(-1.0f64..1.0, d * d).prop_map(move |p| hermitian_from_params(d, &p))
}

pub fn complex_matrix_strategy(rows: usize, cols: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), rows * cols)
        .prop_map(move |v| CMatrix::from_vec(rows, cols, v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap())
}

/// `|ψ><ψ|^{⊗n}` as a state vector.
pub fn tensor_power(psi: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![c(1.0, 0.0)];
    for _ in 0..n {
        out = out.iter().flat_map(|a| psi.iter().map(move |b| a * b)).collect();
    }
    out
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Reorders a state of `n` pairs from `a1 b1 a2 b2 …` to `a1 … an b1 … bn`.
pub fn group_by_party(psi: &[Complex64], d: usize, n: usize) -> Vec<Complex64> {
    let sites = 2 * n;
    let mut out = vec![c(0.0, 0.0); psi.len()];
    for (idx, amp) in psi.iter().enumerate() {
        let digits: Vec<usize> = (0..sites).map(|k| idx / d.pow((sites - 1 - k) as u32) % d).collect();
        let order: Vec<usize> = (0..n).map(|i| 2 * i).chain((0..n).map(|i| 2 * i + 1)).collect();
        let target = order.iter().fold(0, |acc, &k| acc * d + digits[k]);
        out[target] = *amp;
    }
    out
}

/// `Σ_i op^{(i)} · scale` on `n` sites of dimension `d`.
pub fn collective(op: &CMatrix, n: usize, scale: f64) -> CMatrix {
    let d = op.rows();
    let id = CMatrix::identity(d);
    let mut out = CMatrix::zeros(d.pow(n as u32), d.pow(n as u32));
    for i in 0..n {
        let factors: Vec<&CMatrix> = (0..n).map(|k| if k == i { op } else { &id }).collect();
        out = &out + &tensor_all(&factors);
    }
    out.scale_real(scale)
}

/// Witness of `n` copies of the pair with collective observables, by
/// direct evaluation on the `d^{2n}`-dimensional state.
pub fn lifted_witness(s: &PairScenario, n: usize) -> f64 {
    let d = s.dim();
    let psi = group_by_party(&tensor_power(s.pure_state().unwrap().amplitudes(), n), d, n);
    let rho = CMatrix::outer(&psi, &psi);
    let r = 1.0 / (n as f64).sqrt();
    let obs = |o: &Observable| Observable::unbounded(collective(o.matrix(), n, r)).unwrap();
    let dn = d.pow(n as u32);
    macroent::witness::f_general(&rho, &obs(&s.a1), &obs(&s.a2), &obs(&s.b1), &obs(&s.b2), dn, dn).unwrap().f
}

/// Witness of `n` pairs whose particles independently join Alice with
/// probability `q` and are lost with probability `loss`, by enumerating
/// pair configurations with multinomial weights and all loss patterns.
pub fn split_witness(s: &PairScenario, n: usize, q: f64, loss: f64) -> f64 {
    let sym = s.swap_symmetrized_state();
    let d = s.dim();
    let es = eig_hermitian(&sym).unwrap();
    let sites = 2 * n;
    let fact = |k: usize| (1..=k).product::<usize>() as f64;
    let ka = s.commutator_a();
    let kb = s.commutator_b();
    let mut m = [0.0; 4];
    let mut m2 = [0.0; 4];
    let mut cross = [0.0; 2];
    let mut comm = [0.0; 2];
    let ops_a = [s.a1.matrix(), s.a2.matrix()];
    let ops_b = [s.b1.matrix(), s.b2.matrix()];
    for na in 0..=n {
        for nb in 0..=(n - na) {
            let nab = n - na - nb;
            let w = fact(n) / (fact(na) * fact(nab) * fact(nb))
                * q.powi(2 * na as i32)
                * (2.0 * q * (1.0 - q)).powi(nab as i32)
                * (1.0 - q).powi(2 * nb as i32);
            if w == 0.0 {
                continue;
            }
            let alice = |j: usize| j / 2 < na || (j / 2 < na + nab && j % 2 == 0);
            for pattern in 0u32..(1 << sites) {
                let kept = pattern.count_ones() as i32;
                let wl = (1.0 - loss).powi(kept) * loss.powi(sites as i32 - kept);
                if wl == 0.0 {
                    continue;
                }
                let alive = |j: usize| pattern >> j & 1 == 1;
                // Mixture over the eigen-decomposition of each pair state.
                let n_terms = es.values.len().pow(n as u32);
                for t in 0..n_terms {
                    let idx: Vec<usize> = (0..n).map(|k| t / es.values.len().pow(k as u32) % es.values.len()).collect();
                    let pw: f64 = idx.iter().map(|&i| es.values[i]).product();
                    if pw.abs() < 1e-15 {
                        continue;
                    }
                    let mut psi = vec![c(1.0, 0.0)];
                    for &i in &idx {
                        psi = psi.iter().flat_map(|a| es.vectors[i].iter().map(move |b| a * b)).collect();
                    }
                    let weight = w * wl * pw;
                    let coll = |side_a: bool, which: usize, scale: f64| {
                        let mut out = vec![c(0.0, 0.0); psi.len()];
                        for j in 0..sites {
                            if alice(j) == side_a && alive(j) {
                                let op = match (side_a, which) {
                                    (true, 2) => ka.matrix(),
                                    (false, 2) => kb.matrix(),
                                    (true, k) => ops_a[k],
                                    (false, k) => ops_b[k],
                                };
                                let v = apply_local(&psi, d, j, sites, op);
                                for (o, x) in out.iter_mut().zip(&v) {
                                    *o += x * scale;
                                }
                            }
                        }
                        out
                    };
                    let r = 1.0 / (n as f64).sqrt();
                    let vs = [coll(true, 0, r), coll(false, 0, r), coll(true, 1, r), coll(false, 1, r)];
                    for k in 0..4 {
                        m[k] += weight * inner(&psi, &vs[k]).re;
                        m2[k] += weight * inner(&vs[k], &vs[k]).re;
                    }
                    cross[0] += weight * inner(&vs[0], &vs[1]).re;
                    cross[1] += weight * inner(&vs[2], &vs[3]).re;
                    comm[0] += weight * inner(&psi, &coll(true, 2, 1.0 / n as f64)).re;
                    comm[1] += weight * inner(&psi, &coll(false, 2, 1.0 / n as f64)).re;
                }
            }
        }
    }
    let var = |k: usize| m2[k] - m[k] * m[k];
    var(0) + var(1) + 2.0 * (cross[0] - m[0] * m[1]) + var(2) + var(3) - 2.0 * (cross[1] - m[2] * m[3])
        - comm[0].abs()
        - comm[1].abs()
}

/// Random separable two-party state: a mixture of up to five product states.
pub fn random_separable<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    let k = rng.random_range(1..=5);
    let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut rho = CMatrix::zeros(d * d, d * d);
    for w in weights {
        let pa = random_projector(rng, d);
        let pb = random_projector(rng, d);
        rho = &rho + &tensor(&pa, &pb).scale_real(w / total);
    }
    rho
}

pub fn random_projector<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    let v = random_amplitudes(rng, d);
    let n: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    CMatrix::outer(&v, &v).scale_real(1.0 / n)
}
