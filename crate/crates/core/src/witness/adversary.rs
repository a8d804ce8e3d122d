//! Worst-case imperfect measurements.
//!
//! Every measured observable `O = Σ_k o_k P_k` is implemented by a POVM
//! `E_k = P_k + ε C_k` with `Σ_k C_k = 0` and `‖C_k‖ ≤ 1`. The statistics
//! the witness sees are then built from `M1 = O + ε Σ o_k C_k` and
//! `M2 = O² + ε Σ o_k² C_k`. The adversary picks the family that pushes the
//! witness value up, hiding the violation.

use std::sync::OnceLock;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, hermitian_from_params, min_eigenvalue, operator_norm, CMatrix};
use crate::optimizer::nelder_mead::{minimize_polished, NelderMeadOptions};
use crate::quantum::{Observable, PairScenario};
use crate::witness::terms::{assemble, marginal, pair_expect, Jet, PairStatistics, Terms, WitnessForm};

/// How the ε-dependence of the statistics is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expansion {
    /// Keep the full polynomial dependence on ε.
    Exact,
    /// Keep terms linear in ε only.
    FirstOrder,
}

/// Constraints on the perturbation families and solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdversaryOptions {
    pub expansion: Expansion,
    /// Restrict every `C_k` to be traceless.
    pub traceless: bool,
    /// Require `P_k + ε C_k ≥ 0`; infeasible families are shrunk radially.
    pub positivity: bool,
    pub starts: usize,
    pub seed: u64,
}

impl Default for AdversaryOptions {
    fn default() -> Self {
        Self { expansion: Expansion::FirstOrder, traceless: true, positivity: false, starts: 32, seed: 0 }
    }
}

/// Spectral data of one measured observable.
#[derive(Debug, Clone)]
struct Measured {
    obs: CMatrix,
    obs_sq: CMatrix,
    outcomes: Vec<f64>,
    projectors: Vec<CMatrix>,
}

impl Measured {
    fn new(o: &Observable) -> Self {
        let es = eig_hermitian(o.matrix()).expect("observable is Hermitian");
        let (outcomes, projectors) = es.eigenspaces().into_iter().unzip();
        Self { obs: o.matrix().clone(), obs_sq: o.matrix() * o.matrix(), outcomes, projectors }
    }

    fn dim(&self) -> usize {
        self.obs.rows()
    }

    fn n_params(&self) -> usize {
        (self.outcomes.len() - 1) * self.dim() * self.dim()
    }

    /// The perturbation family encoded by `p`.
    fn family(&self, p: &[f64], opts: &AdversaryOptions) -> Vec<CMatrix> {
        let d = self.dim();
        let m = self.outcomes.len();
        let mut fam: Vec<CMatrix> = p
            .chunks(d * d)
            .map(|chunk| {
                let h = hermitian_from_params(d, chunk);
                let mut c = eig_hermitian(&h).expect("hermitian").map(f64::sin);
                if opts.traceless {
                    let shift = c.trace().re / d as f64;
                    c = &c - &CMatrix::identity(d).scale_real(shift);
                }
                c
            })
            .collect();
        let mut last = CMatrix::zeros(d, d);
        for c in &fam {
            last = &last - c;
        }
        fam.push(last);
        debug_assert_eq!(fam.len(), m);
        let largest = fam.iter().map(operator_norm).fold(0.0, f64::max);
        if largest > 1.0 {
            fam = fam.iter().map(|c| c.scale_real(1.0 / largest)).collect();
        }
        fam
    }

    /// Largest `t ∈ [0, 1]` with `P_k + t ε C_k ≥ 0` for every outcome.
    fn feasible_fraction(&self, fam: &[CMatrix], eps: f64) -> f64 {
        let ok = |t: f64| {
            self.projectors
                .iter()
                .zip(fam)
                .all(|(p, c)| min_eigenvalue(&(p + &c.scale_real(t * eps))).unwrap_or(-1.0) >= -1e-12)
        };
        if ok(1.0) {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// `(Σ o_k C_k, Σ o_k² C_k)` for the family encoded by `p`.
    fn deviations(&self, p: &[f64], eps: f64, opts: &AdversaryOptions) -> (CMatrix, CMatrix) {
        let d = self.dim();
        if self.outcomes.len() < 2 {
            return (CMatrix::zeros(d, d), CMatrix::zeros(d, d));
        }
        let fam = self.family(p, opts);
        let t = if opts.positivity { self.feasible_fraction(&fam, eps) } else { 1.0 };
        let mut d1 = CMatrix::zeros(d, d);
        let mut d2 = CMatrix::zeros(d, d);
        for (o, c) in self.outcomes.iter().zip(&fam) {
            d1 = &d1 + &c.scale_real(t * o);
            d2 = &d2 + &c.scale_real(t * o * o);
        }
        (d1, d2)
    }

    /// Moment operators `(M1, M1', M2, M2')` with primes marking ε-slopes.
    fn moments(&self, (d1, d2): (CMatrix, CMatrix), eps: f64, expansion: Expansion) -> MomentOps {
        match expansion {
            Expansion::Exact => MomentOps {
                m1: &self.obs + &d1.scale_real(eps),
                m1_slope: None,
                m2: &self.obs_sq + &d2.scale_real(eps),
                m2_slope: None,
            },
            Expansion::FirstOrder => MomentOps {
                m1: self.obs.clone(),
                m1_slope: Some(d1),
                m2: self.obs_sq.clone(),
                m2_slope: Some(d2),
            },
        }
    }
}

struct MomentOps {
    m1: CMatrix,
    m1_slope: Option<CMatrix>,
    m2: CMatrix,
    m2_slope: Option<CMatrix>,
}

fn single(rho: &CMatrix, m: &CMatrix, slope: &Option<CMatrix>) -> Jet {
    Jet::new(rho.trace_product(m).re, slope.as_ref().map_or(0.0, |s| rho.trace_product(s).re))
}

fn pair(sigma: &CMatrix, x: &MomentOps, y: &MomentOps) -> Jet {
    let value = pair_expect(sigma, &x.m1, &y.m1);
    let mut slope = 0.0;
    if let Some(sx) = &x.m1_slope {
        slope += pair_expect(sigma, sx, &y.m1);
    }
    if let Some(sy) = &y.m1_slope {
        slope += pair_expect(sigma, &x.m1, sy);
    }
    Jet::new(value, slope)
}

/// Measured observables in the order `A1, A2, K_A, B1, B2, K_B`.
const BLOCKS: [&[usize]; 4] = [&[0, 3], &[1, 4], &[2], &[5]];

/// Orthonormal basis of `d×d` Hermitian matrices under `Re tr(XY)`.
fn hermitian_basis(d: usize) -> Vec<CMatrix> {
    let mut basis = Vec::with_capacity(d * d);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        let mut e = CMatrix::zeros(d, d);
        e[(i, i)] = Complex64::new(1.0, 0.0);
        basis.push(e);
    }
    for i in 0..d {
        for j in i + 1..d {
            let mut e = CMatrix::zeros(d, d);
            e[(i, j)] = Complex64::new(r, 0.0);
            e[(j, i)] = Complex64::new(r, 0.0);
            basis.push(e);
            let mut e = CMatrix::zeros(d, d);
            e[(i, j)] = Complex64::new(0.0, -r);
            e[(j, i)] = Complex64::new(0.0, r);
            basis.push(e);
        }
    }
    basis
}

/// Worst-case perturbed witness for one scenario and witness form.
pub struct Adversary {
    form: WitnessForm,
    sigma: CMatrix,
    rho_a: CMatrix,
    rho_b: CMatrix,
    measured: [Measured; 6],
    opts: AdversaryOptions,
    /// Maximizing parameters when they do not depend on ε.
    cached: OnceLock<Vec<Vec<f64>>>,
}

/// Outcome of the adversary at one ε.
#[derive(Debug, Clone)]
pub struct AdversaryResult {
    pub eps: f64,
    pub f: f64,
    pub terms: Terms<f64>,
    /// Best parameters per observable, order `A1, A2, K_A, B1, B2, K_B`.
    pub params: Vec<Vec<f64>>,
}

impl Adversary {
    pub fn new(s: &PairScenario, form: WitnessForm, opts: AdversaryOptions) -> Result<Self> {
        if opts.starts == 0 {
            return Err(Error::InvalidParameter("adversary needs at least one start".into()));
        }
        if let WitnessForm::Bipartition(q) = form {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::InvalidParameter(format!("bipartition fraction {q} outside [0, 1]")));
            }
        }
        let sigma = match form {
            WitnessForm::Iid => s.sigma.clone(),
            _ => s.swap_symmetrized_state(),
        };
        let d = s.dim();
        let rho_a = marginal(&sigma, d, 0);
        let rho_b = marginal(&sigma, d, 1);
        let measured = [
            Measured::new(&s.a1),
            Measured::new(&s.a2),
            Measured::new(&s.commutator_a()),
            Measured::new(&s.b1),
            Measured::new(&s.b2),
            Measured::new(&s.commutator_b()),
        ];
        Ok(Self { form, sigma, rho_a, rho_b, measured, opts, cached: OnceLock::new() })
    }

    pub fn options(&self) -> &AdversaryOptions {
        &self.opts
    }

    /// Number of free parameters of each measured observable.
    pub fn param_counts(&self) -> [usize; 6] {
        std::array::from_fn(|k| self.measured[k].n_params())
    }

    fn terms_from_deviations(&self, eps: f64, devs: Vec<(CMatrix, CMatrix)>) -> Terms<Jet> {
        let ops: Vec<MomentOps> = self
            .measured
            .iter()
            .zip(devs)
            .map(|(m, dev)| m.moments(dev, eps, self.opts.expansion))
            .collect();
        let side = |k: usize| if k < 3 { &self.rho_a } else { &self.rho_b };
        let slot = [0usize, 1, 3, 4];
        let mean = std::array::from_fn(|i| single(side(slot[i]), &ops[slot[i]].m1, &ops[slot[i]].m1_slope));
        let second = std::array::from_fn(|i| single(side(slot[i]), &ops[slot[i]].m2, &ops[slot[i]].m2_slope));
        let same = std::array::from_fn(|i| pair(&self.sigma, &ops[slot[i]], &ops[slot[i]]));
        let stats = PairStatistics {
            mean,
            second,
            same,
            cross: [pair(&self.sigma, &ops[0], &ops[3]), pair(&self.sigma, &ops[1], &ops[4])],
            comm: [
                single(&self.rho_a, &ops[2].m1, &ops[2].m1_slope),
                single(&self.rho_b, &ops[5].m1, &ops[5].m1_slope),
            ],
        };
        assemble(&stats, self.form)
    }

    /// Witness terms for explicit perturbation parameters.
    pub fn terms_for(&self, eps: f64, params: &[Vec<f64>]) -> Terms<Jet> {
        let devs = self.measured.iter().zip(params).map(|(m, p)| m.deviations(p, eps, &self.opts)).collect();
        self.terms_from_deviations(eps, devs)
    }

    /// Witness value for explicit perturbation parameters.
    pub fn value_for(&self, eps: f64, params: &[Vec<f64>]) -> f64 {
        self.terms_for(eps, params).f().at(eps)
    }

    fn zero_params(&self) -> Vec<Vec<f64>> {
        self.measured.iter().map(|m| vec![0.0; m.n_params()]).collect()
    }

    fn zero_deviations(&self) -> Vec<(CMatrix, CMatrix)> {
        self.measured
            .iter()
            .map(|m| (CMatrix::zeros(m.dim(), m.dim()), CMatrix::zeros(m.dim(), m.dim())))
            .collect()
    }

    /// Whether the maximizer is the same for every ε, which holds for the
    /// linearized witness unless a commutator expectation vanishes.
    fn is_linear(&self) -> bool {
        if self.opts.expansion != Expansion::FirstOrder || self.opts.positivity {
            return false;
        }
        let base = self.terms_from_deviations(0.0, self.zero_deviations());
        let comm = [self.rho_a.trace_product(&self.measured[2].obs).re, self.rho_b.trace_product(&self.measured[5].obs).re];
        base.f().value.is_finite() && comm.iter().all(|c| c.abs() > 1e-12)
    }

    /// Matrices `(G1, G2)` per observable with slope `Σ Re tr(G1 D1) + Re tr(G2 D2)`.
    fn gradients(&self) -> Vec<(CMatrix, CMatrix)> {
        let slope = |k: usize, dev: (CMatrix, CMatrix)| {
            let mut devs = self.zero_deviations();
            devs[k] = dev;
            self.terms_from_deviations(0.0, devs).f().slope
        };
        self.measured
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let d = m.dim();
                let basis = hermitian_basis(d);
                let mut g1 = CMatrix::zeros(d, d);
                let mut g2 = CMatrix::zeros(d, d);
                for e in &basis {
                    g1 = &g1 + &e.scale_real(slope(k, (e.clone(), CMatrix::zeros(d, d))));
                    g2 = &g2 + &e.scale_real(slope(k, (CMatrix::zeros(d, d), e.clone())));
                }
                (g1, g2)
            })
            .collect()
    }

    /// Multi-start maximization of `objective` over one block's parameters.
    fn maximize_block(&self, b: usize, n: usize, objective: impl Fn(&[f64]) -> f64 + Sync) -> Vec<f64> {
        let nm = NelderMeadOptions { max_iter: 2000, diameter_tol: 1e-9, initial_step: 0.7 };
        let runs: Vec<_> = (0..self.opts.starts)
            .into_par_iter()
            .map(|start| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed);
                rng.set_stream(((b as u64) << 32) | start as u64);
                let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
                minimize_polished(|x: &[f64]| -objective(x), &x0, &nm, 4)
            })
            .collect();
        runs.into_iter().reduce(|a, b| if b.value < a.value { b } else { a }).expect("at least one start").x
    }

    fn optimize(&self, eps: f64) -> Vec<Vec<f64>> {
        let mut params = self.zero_params();
        let linear = self.is_linear();
        let grads = if linear { Some(self.gradients()) } else { None };
        for (b, block) in BLOCKS.iter().enumerate() {
            let sizes: Vec<usize> = block.iter().map(|&k| self.measured[k].n_params()).collect();
            let n: usize = sizes.iter().sum();
            if n == 0 {
                continue;
            }
            let split = |x: &[f64]| -> Vec<(usize, Vec<f64>)> {
                let mut off = 0;
                block
                    .iter()
                    .zip(&sizes)
                    .map(|(&k, &len)| {
                        off += len;
                        (k, x[off - len..off].to_vec())
                    })
                    .collect()
            };
            let best = match &grads {
                Some(g) => self.maximize_block(b, n, |x| {
                    split(x)
                        .into_iter()
                        .map(|(k, p)| {
                            let (d1, d2) = self.measured[k].deviations(&p, eps, &self.opts);
                            g[k].0.trace_product(&d1).re + g[k].1.trace_product(&d2).re
                        })
                        .sum()
                }),
                None => {
                    let base = params.clone();
                    self.maximize_block(b, n, |x| {
                        let mut p = base.clone();
                        for (k, v) in split(x) {
                            p[k] = v;
                        }
                        self.value_for(eps, &p)
                    })
                }
            };
            for (k, v) in split(&best) {
                params[k] = v;
            }
        }
        params
    }

    /// Maximizes the witness over perturbation families at fixed `eps`.
    pub fn worst_case(&self, eps: f64) -> Result<AdversaryResult> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!("perturbation strength {eps} must be ≥ 0")));
        }
        let params = if eps == 0.0 {
            self.zero_params()
        } else if self.is_linear() {
            self.cached.get_or_init(|| self.optimize(eps)).clone()
        } else {
            self.optimize(eps)
        };
        let jets = self.terms_for(eps, &params);
        let terms = Terms {
            var_xa: jets.var_xa.at(eps),
            var_xb: jets.var_xb.at(eps),
            cov_x: jets.cov_x.at(eps),
            var_pa: jets.var_pa.at(eps),
            var_pb: jets.var_pb.at(eps),
            cov_p: jets.cov_p.at(eps),
            comm_a: jets.comm_a.at(eps),
            comm_b: jets.comm_b.at(eps),
        };
        Ok(AdversaryResult { eps, f: terms.f(), terms, params })
    }
}
