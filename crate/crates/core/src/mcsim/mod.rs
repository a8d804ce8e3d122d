//! Finite-N Monte Carlo simulation of the collective intensity measurements.

pub mod oracle;
pub mod sampler;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{tensor, CMatrix};
use crate::quantum::{DepolarizingChannel, Povm, PairScenario};
use crate::witness::Terms;
pub use oracle::{collective_commutator_norm, exact_loss_oracle};
pub use sampler::{sample_pair, JointTable};

/// Number of batches used for standard errors.
pub const BATCHES: usize = 16;

/// How particles are split between the two parties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bipartition {
    /// Alice gets the first particle of every pair.
    FixedSplit,
    /// Each particle goes to Alice with probability `q`.
    Fixed(f64),
    /// As `Fixed` with `q` drawn uniformly per shot.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub pairs: usize,
    pub shots: usize,
    pub loss_p: f64,
    pub depolarize_lambda: f64,
    pub bipartition: Bipartition,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(pairs: usize, shots: usize, seed: u64) -> Self {
        Self { pairs, shots, loss_p: 0.0, depolarize_lambda: 0.0, bipartition: Bipartition::FixedSplit, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} = {x} outside [0, 1]")))
            }
        };
        prob("loss_p", self.loss_p)?;
        prob("depolarize_lambda", self.depolarize_lambda)?;
        if let Bipartition::Fixed(q) = self.bipartition {
            prob("q", q)?;
        }
        if self.pairs == 0 {
            return Err(Error::InvalidParameter("at least one pair is required".into()));
        }
        if self.shots < 2 * BATCHES {
            return Err(Error::InvalidParameter(format!(
                "{} shots cannot be split into {BATCHES} batches of at least 2",
                self.shots
            )));
        }
        Ok(())
    }
}

/// Sampled witness with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub f_hat: f64,
    pub stderr: f64,
    pub terms: BTreeMap<String, (f64, f64)>,
    pub config: RunConfig,
}

impl McEstimate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimate serializes")
    }
}

/// Tree summation, independent of how the inputs were produced.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 8 {
        return x.iter().sum();
    }
    let (a, b) = x.split_at(x.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn mean(x: &[f64]) -> f64 {
    pairwise_sum(x) / x.len() as f64
}

/// Plug-in covariance.
fn covariance(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let prods: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    mean(&prods)
}

/// One measurement setting: what each side measures on its particles.
struct Setting {
    alice: Povm,
    bob: Povm,
}

/// Outcome tables for every combination of sides and Kraus branches.
struct SettingTables {
    /// Indexed by `[side1][side2][k1 * K + k2]`, side 0 = Alice.
    tables: [[Vec<JointTable>; 2]; 2],
}

struct Simulation<'a> {
    cfg: &'a RunConfig,
    kraus_weights: Vec<f64>,
    settings: Vec<SettingTables>,
}

impl<'a> Simulation<'a> {
    fn new(s: &PairScenario, cfg: &'a RunConfig, needs_both_orders: bool) -> Result<Self> {
        cfg.validate()?;
        let d = s.dim();
        let channel = DepolarizingChannel::new(d, cfg.depolarize_lambda)?;
        let kraus: Vec<(f64, CMatrix)> =
            if cfg.depolarize_lambda > 0.0 { channel.kraus() } else { vec![(1.0, CMatrix::identity(d))] };
        let settings = [
            Setting { alice: s.a1.projective(), bob: s.b1.projective() },
            Setting { alice: s.a2.projective(), bob: s.b2.projective() },
            Setting { alice: s.commutator_a().projective(), bob: Povm::trivial(d) },
            Setting { alice: Povm::trivial(d), bob: s.commutator_b().projective() },
        ];
        let rotated: Vec<CMatrix> = kraus
            .iter()
            .flat_map(|(_, u)| kraus.iter().map(move |(_, v)| (u, v)))
            .map(|(u, v)| {
                let k = tensor(u, v);
                &(&k * &s.sigma) * &k.adjoint()
            })
            .collect();
        let settings = settings
            .iter()
            .map(|st| {
                let povm = |side: usize| if side == 0 { &st.alice } else { &st.bob };
                let build = |s1: usize, s2: usize| -> Result<Vec<JointTable>> {
                    if !needs_both_orders && !(s1 == 0 && s2 == 1) {
                        return Ok(Vec::new());
                    }
                    rotated.iter().map(|rho| JointTable::new(rho, povm(s1), povm(s2))).collect()
                };
                Ok(SettingTables { tables: [[build(0, 0)?, build(0, 1)?], [build(1, 0)?, build(1, 1)?]] })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { cfg, kraus_weights: kraus.iter().map(|k| k.0).collect(), settings })
    }

    fn kraus_index(&self, rng: &mut ChaCha8Rng) -> usize {
        if self.kraus_weights.len() == 1 {
            return 0;
        }
        let mut u: f64 = rng.random();
        for (k, w) in self.kraus_weights.iter().enumerate() {
            if u < *w {
                return k;
            }
            u -= w;
        }
        self.kraus_weights.len() - 1
    }

    /// Intensities `(x_A, x_B)` of one shot.
    fn shot(&self, setting: usize, shot: usize) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(((setting as u64) << 40) | shot as u64);
        let q = match self.cfg.bipartition {
            Bipartition::FixedSplit => None,
            Bipartition::Fixed(q) => Some(q),
            Bipartition::Random => Some(rng.random::<f64>()),
        };
        let tabs = &self.settings[setting];
        let nk = self.kraus_weights.len();
        let mut sums = [0.0f64; 2];
        for _ in 0..self.cfg.pairs {
            let (s1, s2) = match q {
                None => (0, 1),
                Some(q) => (usize::from(rng.random::<f64>() >= q), usize::from(rng.random::<f64>() >= q)),
            };
            let k1 = self.kraus_index(&mut rng);
            let k2 = self.kraus_index(&mut rng);
            let (o1, o2) = tabs.tables[s1][s2][k1 * nk + k2].sample(&mut rng);
            if self.cfg.loss_p == 0.0 || rng.random::<f64>() >= self.cfg.loss_p {
                sums[s1] += o1;
            }
            if self.cfg.loss_p == 0.0 || rng.random::<f64>() >= self.cfg.loss_p {
                sums[s2] += o2;
            }
        }
        let scale = (self.cfg.pairs as f64).sqrt();
        (sums[0] / scale, sums[1] / scale)
    }

    fn run(&self) -> McEstimate {
        let shots = self.cfg.shots;
        let samples: Vec<Vec<(f64, f64)>> = (0..4)
            .map(|setting| (0..shots).into_par_iter().map(|k| self.shot(setting, k)).collect())
            .collect();
        let scale = (self.cfg.pairs as f64).sqrt();
        let terms_of = |range: std::ops::Range<usize>| -> Terms<f64> {
            let col = |setting: usize, side: usize| -> Vec<f64> {
                samples[setting][range.clone()].iter().map(|p| if side == 0 { p.0 } else { p.1 }).collect()
            };
            let (xa, xb, pa, pb) = (col(0, 0), col(0, 1), col(1, 0), col(1, 1));
            Terms {
                var_xa: covariance(&xa, &xa),
                var_xb: covariance(&xb, &xb),
                cov_x: covariance(&xa, &xb),
                var_pa: covariance(&pa, &pa),
                var_pb: covariance(&pb, &pb),
                cov_p: covariance(&pa, &pb),
                comm_a: mean(&col(2, 0)).abs() / scale,
                comm_b: mean(&col(3, 1)).abs() / scale,
            }
        };
        let full = terms_of(0..shots);
        let per_batch = shots / BATCHES;
        let batches: Vec<Terms<f64>> = (0..BATCHES).map(|b| terms_of(b * per_batch..(b + 1) * per_batch)).collect();
        let se = |get: &dyn Fn(&Terms<f64>) -> f64| {
            let v: Vec<f64> = batches.iter().map(get).collect();
            let m = mean(&v);
            let dev: Vec<f64> = v.iter().map(|x| (x - m).powi(2)).collect();
            (pairwise_sum(&dev) / (BATCHES as f64 - 1.0) / BATCHES as f64).sqrt()
        };
        let mut terms = BTreeMap::new();
        for (k, (name, value)) in full.named().into_iter().enumerate() {
            let err = se(&|t: &Terms<f64>| t.named()[k].1);
            terms.insert(name.to_string(), (value, err));
        }
        McEstimate { f_hat: full.f(), stderr: se(&|t: &Terms<f64>| t.f()), terms, config: *self.cfg }
    }
}

/// Samples the fixed-split witness: Alice holds the first particle of each pair.
pub fn estimate_f_iid(s: &PairScenario, cfg: &RunConfig) -> Result<McEstimate> {
    if cfg.bipartition != Bipartition::FixedSplit {
        return Err(Error::InvalidParameter("fixed-split estimate needs the fixed_split bipartition".into()));
    }
    Ok(Simulation::new(s, cfg, false)?.run())
}

/// Samples the witness with particles assigned to the parties at random.
pub fn estimate_f_bipartition(s: &PairScenario, cfg: &RunConfig) -> Result<McEstimate> {
    if cfg.bipartition == Bipartition::FixedSplit {
        return Err(Error::InvalidParameter("random-split estimate needs a fixed(q) or random bipartition".into()));
    }
    Ok(Simulation::new(s, cfg, true)?.run())
}

/// Dispatches on the configured bipartition.
pub fn estimate(s: &PairScenario, cfg: &RunConfig) -> Result<McEstimate> {
    match cfg.bipartition {
        Bipartition::FixedSplit => estimate_f_iid(s, cfg),
        _ => estimate_f_bipartition(s, cfg),
    }
}
