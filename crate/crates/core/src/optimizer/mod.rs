//! Search over states and observables for maximal violations.

pub mod nelder_mead;
pub mod params;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::quantum::{swap_conjugate, Ket, PairScenario, ScenarioFile};
use crate::witness::{assemble, PairStatistics, WitnessForm};
use nelder_mead::{minimize_polished, NelderMeadOptions};
pub use params::{decode, encode, Layout, ObservableLayout, ParamVector, StateLayout};

/// Search space of the observables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    SpinPlane,
    General,
}

impl SearchMode {
    fn layout(self) -> ObservableLayout {
        match self {
            SearchMode::SpinPlane => ObservableLayout::SpinPlane,
            SearchMode::General => ObservableLayout::General,
        }
    }
}

/// Best scenario found by a multi-start search.
#[derive(Debug, Clone)]
pub struct OptResult {
    pub best_f: f64,
    pub scenario: PairScenario,
    pub params: ParamVector,
    pub starts: usize,
    pub seed: u64,
    pub per_start_bests: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptResultFile {
    pub best_f: f64,
    pub scenario: ScenarioFile,
    pub starts: usize,
    pub seed: u64,
    pub per_start_bests: Vec<f64>,
}

impl OptResult {
    pub fn to_file(&self) -> Result<OptResultFile> {
        Ok(OptResultFile {
            best_f: self.best_f,
            scenario: ScenarioFile::from_scenario(&self.scenario)?,
            starts: self.starts,
            seed: self.seed,
            per_start_bests: self.per_start_bests.clone(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file()?)?)
    }
}

/// Witness value of the scenario encoded by `x`, `+∞` when undecodable.
pub fn objective(layout: &Layout, form: WitnessForm, x: &[f64]) -> f64 {
    let Ok((amps, ops)) = layout.decode_raw(x) else {
        return f64::INFINITY;
    };
    let mut sigma = CMatrix::outer(&amps, &amps);
    if form != WitnessForm::Iid {
        sigma = (&sigma + &swap_conjugate(&sigma, layout.dim)).scale_real(0.5);
    }
    let stats = PairStatistics::from_parts(&sigma, [&ops[0], &ops[1], &ops[2], &ops[3]]);
    let f = assemble(&stats, form).f();
    if f.is_finite() { f } else { f64::INFINITY }
}

fn initial_point(layout: &Layout, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x: Vec<f64> = (0..layout.state_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    for _ in 0..4 * layout.observable_len() {
        x.push(match layout.observables {
            ObservableLayout::SpinPlane => rng.random_range(-PI..PI),
            ObservableLayout::General => rng.random_range(-1.5..1.5),
        });
    }
    x
}

/// Multi-start minimization of the witness `form` over `layout`.
pub fn search(layout: &Layout, form: WitnessForm, starts: usize, seed: u64) -> Result<OptResult> {
    if starts == 0 {
        return Err(Error::InvalidParameter("at least one start is required".into()));
    }
    let nm = NelderMeadOptions { max_iter: 2000, diameter_tol: 1e-9, initial_step: 0.4 };
    let runs: Vec<(Vec<f64>, f64)> = (0..starts)
        .into_par_iter()
        .map(|start| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(start as u64);
            let x0 = initial_point(layout, &mut rng);
            let m = minimize_polished(|x: &[f64]| objective(layout, form, x), &x0, &nm, 6);
            log::debug!("start {start}: f = {} after {} iterations", m.value, m.iterations);
            (m.x, m.value)
        })
        .collect();
    let per_start_bests: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let (best_x, best_f) = runs
        .into_iter()
        .reduce(|a, b| if b.1 < a.1 { b } else { a })
        .expect("at least one start");
    let params = ParamVector { values: best_x, layout: layout.clone() };
    let scenario = params.decode()?;
    Ok(OptResult { best_f, scenario, params, starts, seed, per_start_bests })
}

/// Maximal fixed-split violation for qubit pairs.
pub fn optimize_rme(dim: usize, starts: usize, seed: u64, mode: SearchMode) -> Result<OptResult> {
    if dim != 2 {
        return Err(Error::Unsupported(format!("fixed-split search is defined for qubits, got dimension {dim}")));
    }
    search(&Layout::new(dim, StateLayout::Free, mode.layout())?, WitnessForm::Iid, starts, seed)
}

/// Maximal averaged-bipartition violation over symmetric states and spin-plane observables.
pub fn optimize_ime(dim: usize, starts: usize, seed: u64) -> Result<OptResult> {
    if dim != 2 && dim != 3 {
        return Err(Error::Unsupported(format!("averaged search supports dimensions 2 and 3, got {dim}")));
    }
    search(&Layout::new(dim, StateLayout::Symmetric, ObservableLayout::SpinPlane)?, WitnessForm::Averaged, starts, seed)
}

/// Search over observables only, for a fixed pair state.
pub fn optimize_observables(ket: &Ket, form: WitnessForm, mode: SearchMode, starts: usize, seed: u64) -> Result<OptResult> {
    search(&Layout::new(ket.dim(), StateLayout::Fixed(ket.clone()), mode.layout())?, form, starts, seed)
}
