//! Witness functionals in the noiseless case and under noise.

pub mod adversary;
pub mod terms;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{commutator, expect, tensor, CMatrix};
use crate::quantum::{Observable, PairScenario};

pub use adversary::{Adversary, AdversaryOptions, AdversaryResult, Expansion};
pub use terms::{assemble, LocalTraces, PairStatistics, Terms, WitnessForm};

/// Kind of imperfection applied to the measurement scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    None,
    Depolarize,
    Loss,
    Povm,
}

impl NoiseKind {
    /// Name of the noise level parameter.
    pub fn parameter(&self) -> &'static str {
        match self {
            NoiseKind::None => "none",
            NoiseKind::Depolarize => "lambda",
            NoiseKind::Loss => "p",
            NoiseKind::Povm => "epsilon",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::None => "none",
            NoiseKind::Depolarize => "depolarize",
            NoiseKind::Loss => "loss",
            NoiseKind::Povm => "povm",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub level: f64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, level: f64) -> Result<Self> {
        let ok = match kind {
            NoiseKind::None => true,
            NoiseKind::Depolarize | NoiseKind::Loss => (0.0..=1.0).contains(&level),
            NoiseKind::Povm => level >= 0.0 && level.is_finite(),
        };
        if !ok {
            return Err(Error::InvalidParameter(format!("{kind} level {level} out of range")));
        }
        Ok(Self { kind, level })
    }

    pub fn none() -> Self {
        Self { kind: NoiseKind::None, level: 0.0 }
    }

    pub fn depolarize(lambda: f64) -> Result<Self> {
        Self::new(NoiseKind::Depolarize, lambda)
    }

    pub fn loss(p: f64) -> Result<Self> {
        Self::new(NoiseKind::Loss, p)
    }

    pub fn povm(eps: f64) -> Result<Self> {
        Self::new(NoiseKind::Povm, eps)
    }

    fn regime(&self) -> Regime {
        match self.kind {
            NoiseKind::None => Regime::Noiseless,
            NoiseKind::Depolarize => Regime::Depolarized(self.level),
            NoiseKind::Loss => Regime::Lossy(self.level),
            NoiseKind::Povm => Regime::PovmWorstCase(self.level),
        }
    }
}

/// Conditions under which a witness value was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    Noiseless,
    Depolarized(f64),
    Lossy(f64),
    PovmWorstCase(f64),
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Noiseless => "noiseless",
            Regime::Depolarized(_) => "depolarized",
            Regime::Lossy(_) => "lossy",
            Regime::PovmWorstCase(_) => "povm_worstcase",
        }
    }

    pub fn level(&self) -> Option<f64> {
        match *self {
            Regime::Noiseless => None,
            Regime::Depolarized(x) | Regime::Lossy(x) | Regime::PovmWorstCase(x) => Some(x),
        }
    }
}

/// A witness value with its summands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub f: f64,
    pub terms: BTreeMap<String, f64>,
    pub regime: String,
    pub level: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub q: Option<f64>,
}

impl WitnessReport {
    pub fn from_terms(t: &Terms<f64>, regime: Regime, q: Option<f64>) -> Self {
        Self {
            f: t.f(),
            terms: t.named().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            regime: regime.name().to_string(),
            level: regime.level(),
            q,
        }
    }

    /// Recomputes `f` from the stored summands.
    pub fn reconstruct(&self) -> Option<f64> {
        let g = |k: &str| self.terms.get(k).copied();
        Some(g("var_x")? + g("var_p")? - g("comm_a")? - g("comm_b")?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("bipartition fraction {q} outside [0, 1]")));
    }
    Ok(())
}

fn warn_if_asymmetric(s: &PairScenario) {
    if !s.is_swap_symmetric() {
        log::warn!(
            "pair state is not permutation symmetric (asymmetry {:.3e}); using its symmetrized statistics",
            s.swap_asymmetry()
        );
    }
}

/// Witness built from arbitrary operators on a bipartite space.
///
/// `x_a`, `p_a` act on the first factor of dimension `dim_a` and `x_b`,
/// `p_b` on the second of dimension `dim_b`.
pub fn f_general(
    rho: &CMatrix,
    x_a: &Observable,
    p_a: &Observable,
    x_b: &Observable,
    p_b: &Observable,
    dim_a: usize,
    dim_b: usize,
) -> Result<WitnessReport> {
    if x_a.dim() != dim_a || p_a.dim() != dim_a || x_b.dim() != dim_b || p_b.dim() != dim_b {
        return Err(Error::DimensionMismatch("observables do not match the split".into()));
    }
    if !rho.is_square() || rho.rows() != dim_a * dim_b {
        return Err(Error::DimensionMismatch(format!(
            "state is {}x{}, split is {dim_a}x{dim_b}",
            rho.rows(),
            rho.cols()
        )));
    }
    let ia = CMatrix::identity(dim_a);
    let ib = CMatrix::identity(dim_b);
    let on_a = |o: &CMatrix| tensor(o, &ib);
    let on_b = |o: &CMatrix| tensor(&ia, o);
    let ev = |o: &CMatrix| expect(rho, o).map(|z| z.re);
    let (xa, pa) = (x_a.matrix(), p_a.matrix());
    let (xb, pb) = (x_b.matrix(), p_b.matrix());
    let var = |o: &CMatrix| -> Result<f64> { Ok(ev(&(o * o))? - ev(o)?.powi(2)) };
    let cov = |a: &CMatrix, b: &CMatrix| -> Result<f64> { Ok(ev(&(a * b))? - ev(a)? * ev(b)?) };
    let (xa_f, xb_f, pa_f, pb_f) = (on_a(xa), on_b(xb), on_a(pa), on_b(pb));
    let terms = Terms {
        var_xa: var(&xa_f)?,
        var_xb: var(&xb_f)?,
        cov_x: cov(&xa_f, &xb_f)?,
        var_pa: var(&pa_f)?,
        var_pb: var(&pb_f)?,
        cov_p: cov(&pa_f, &pb_f)?,
        comm_a: expect(rho, &on_a(&commutator(xa, pa)))?.norm(),
        comm_b: expect(rho, &on_b(&commutator(xb, pb)))?.norm(),
    };
    Ok(WitnessReport::from_terms(&terms, Regime::Noiseless, None))
}

/// Witness for many identical copies of the pair with a fixed split.
pub fn f_iid(s: &PairScenario) -> WitnessReport {
    let t = assemble(&PairStatistics::iid(s), WitnessForm::Iid);
    WitnessReport::from_terms(&t, Regime::Noiseless, None)
}

/// Witness when each particle joins Alice's side with probability `q`.
pub fn f_q(s: &PairScenario, q: f64) -> Result<WitnessReport> {
    check_q(q)?;
    let t = assemble(&PairStatistics::symmetrized(s), WitnessForm::Bipartition(q));
    Ok(WitnessReport::from_terms(&t, Regime::Noiseless, Some(q)))
}

/// Bipartition witness averaged over `q`.
pub fn f_avg(s: &PairScenario) -> WitnessReport {
    warn_if_asymmetric(s);
    let t = assemble(&PairStatistics::symmetrized(s), WitnessForm::Averaged);
    WitnessReport::from_terms(&t, Regime::Noiseless, None)
}

fn noisy_stats(stats: PairStatistics<f64>, s: &PairScenario, noise: &NoiseSpec) -> Result<PairStatistics<f64>> {
    match noise.kind {
        NoiseKind::None => Ok(stats),
        NoiseKind::Depolarize => Ok(stats.depolarized(noise.level, &LocalTraces::of(s))),
        NoiseKind::Loss => Ok(stats.lossy(noise.level)),
        NoiseKind::Povm => Err(Error::Unsupported(
            "measurement imperfections need the worst-case adversary".into(),
        )),
    }
}

/// Closed-form witness under depolarization or loss for a fixed split.
pub fn f_iid_noisy(s: &PairScenario, noise: &NoiseSpec) -> Result<WitnessReport> {
    let st = noisy_stats(PairStatistics::iid(s), s, noise)?;
    Ok(WitnessReport::from_terms(&assemble(&st, WitnessForm::Iid), noise.regime(), None))
}

/// Closed-form bipartition witness under depolarization or loss.
pub fn f_q_noisy(s: &PairScenario, q: f64, noise: &NoiseSpec) -> Result<WitnessReport> {
    check_q(q)?;
    let st = noisy_stats(PairStatistics::symmetrized(s), s, noise)?;
    Ok(WitnessReport::from_terms(&assemble(&st, WitnessForm::Bipartition(q)), noise.regime(), Some(q)))
}

/// Closed-form averaged witness under depolarization or loss.
pub fn f_avg_noisy(s: &PairScenario, noise: &NoiseSpec) -> Result<WitnessReport> {
    warn_if_asymmetric(s);
    let st = noisy_stats(PairStatistics::symmetrized(s), s, noise)?;
    Ok(WitnessReport::from_terms(&assemble(&st, WitnessForm::Averaged), noise.regime(), None))
}

fn povm_report(s: &PairScenario, form: WitnessForm, eps: f64, opts: &AdversaryOptions) -> Result<WitnessReport> {
    let r = Adversary::new(s, form, *opts)?.worst_case(eps)?;
    Ok(WitnessReport::from_terms(&r.terms, Regime::PovmWorstCase(eps), None))
}

/// Largest fixed-split witness value reachable by perturbing the POVMs by `eps`.
pub fn f_iid_povm_worstcase(s: &PairScenario, eps: f64, opts: &AdversaryOptions) -> Result<WitnessReport> {
    povm_report(s, WitnessForm::Iid, eps, opts)
}

/// Largest averaged witness value reachable by perturbing the POVMs by `eps`.
pub fn f_avg_povm_worstcase(s: &PairScenario, eps: f64, opts: &AdversaryOptions) -> Result<WitnessReport> {
    warn_if_asymmetric(s);
    povm_report(s, WitnessForm::Averaged, eps, opts)
}

/// Evaluates any witness form under any single noise kind.
pub fn evaluate(s: &PairScenario, form: WitnessForm, noise: &NoiseSpec, opts: &AdversaryOptions) -> Result<WitnessReport> {
    match (form, noise.kind) {
        (_, NoiseKind::Povm) => {
            if let WitnessForm::Bipartition(q) = form {
                check_q(q)?;
            }
            let mut r = povm_report(s, form, noise.level, opts)?;
            if let WitnessForm::Bipartition(q) = form {
                r.q = Some(q);
            }
            Ok(r)
        }
        (WitnessForm::Iid, _) => f_iid_noisy(s, noise),
        (WitnessForm::Bipartition(q), _) => f_q_noisy(s, q, noise),
        (WitnessForm::Averaged, _) => f_avg_noisy(s, noise),
    }
}
