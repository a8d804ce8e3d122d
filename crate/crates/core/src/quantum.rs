//! States, observables, measurements and channels for a two-party pair source.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, commutator, eig_hermitian, operator_norm, partial_trace, tensor, CMatrix, ONE, ZERO};

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const IDEMPOTENCE_TOL: f64 = 1e-12;

/// Normalized pure state of a pair of qudits of equal dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    dim: usize,
    amps: Vec<Complex64>,
}

impl Ket {
    /// Wraps amplitudes that are already normalized.
    pub fn new(dim: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_len(dim, &amps)?;
        let norm = norm_sqr(&amps).sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("norm {norm} is not 1")));
        }
        Ok(Self { dim, amps })
    }

    /// Normalizes the amplitudes.
    pub fn normalized(dim: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_len(dim, &amps)?;
        let norm = norm_sqr(&amps).sqrt();
        if !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite amplitudes".into()));
        }
        Ok(Self { dim, amps: amps.into_iter().map(|a| a / norm).collect() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Amplitude of `|i j>`.
    pub fn amp(&self, i: usize, j: usize) -> Complex64 {
        self.amps[i * self.dim + j]
    }

    pub fn density(&self) -> CMatrix {
        CMatrix::outer(&self.amps, &self.amps)
    }

    /// Removes the global phase so the largest amplitude is real and positive.
    pub fn fix_phase(&self) -> Self {
        let k = self
            .amps
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map_or(0, |(k, _)| k);
        let a = self.amps[k];
        let phase = if a.norm() > 0.0 { a.conj() / a.norm() } else { ONE };
        Self { dim: self.dim, amps: self.amps.iter().map(|z| z * phase).collect() }
    }

    /// Schmidt coefficients in descending order.
    pub fn schmidt_coefficients(&self) -> Vec<f64> {
        let rho_a = partial_trace(&self.density(), &[self.dim, self.dim], &[0]).expect("square");
        let es = eig_hermitian(&rho_a).expect("hermitian");
        es.values.iter().map(|v| v.max(0.0).sqrt()).collect()
    }
}

fn check_len(dim: usize, amps: &[Complex64]) -> Result<()> {
    if dim < 2 || amps.len() != dim * dim {
        return Err(Error::DimensionMismatch(format!("{} amplitudes for local dimension {dim}", amps.len())));
    }
    Ok(())
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(Complex64::norm_sqr).sum()
}

/// Hermitian operator with a known bound on its spectral norm.
#[derive(Debug, Clone)]
pub struct Observable {
    matrix: CMatrix,
    norm_bound: f64,
}

impl Observable {
    /// Builds a bounded observable, `‖O‖ ≤ 1`.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_bound(matrix, 1.0)
    }

    pub fn with_bound(matrix: CMatrix, norm_bound: f64) -> Result<Self> {
        let residual = matrix.hermiticity_residual();
        if residual > HERMITICITY_TOL {
            return Err(Error::NonHermitian { residual });
        }
        let matrix = matrix.hermitian_part();
        let norm = operator_norm(&matrix);
        if norm > norm_bound + 1e-9 {
            return Err(Error::InvalidObservable(format!("norm {norm} exceeds bound {norm_bound}")));
        }
        Ok(Self { matrix, norm_bound })
    }

    /// Builds an observable whose bound is its own spectral norm.
    pub fn unbounded(matrix: CMatrix) -> Result<Self> {
        let residual = matrix.hermiticity_residual();
        if residual > HERMITICITY_TOL {
            return Err(Error::NonHermitian { residual });
        }
        let matrix = matrix.hermitian_part();
        let norm_bound = operator_norm(&matrix);
        Ok(Self { matrix, norm_bound })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    /// Projective measurement of the observable.
    pub fn projective(&self) -> Povm {
        let es = eig_hermitian(&self.matrix).expect("observable is Hermitian");
        let (outcomes, elements) = es.eigenspaces().into_iter().unzip();
        Povm { outcomes, elements }
    }
}

/// Measurement with real-valued outcomes.
#[derive(Debug, Clone)]
pub struct Povm {
    pub outcomes: Vec<f64>,
    pub elements: Vec<CMatrix>,
}

impl Povm {
    pub fn dim(&self) -> usize {
        self.elements.first().map_or(0, CMatrix::rows)
    }

    /// Trivial one-outcome measurement, used for particles nobody measures.
    pub fn trivial(dim: usize) -> Self {
        Self { outcomes: vec![0.0], elements: vec![CMatrix::identity(dim)] }
    }
}

/// Numerical health of a POVM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PovmReport {
    pub hermiticity_residual: f64,
    pub min_eigenvalue: f64,
    pub completeness_residual: f64,
    pub idempotence_residual: f64,
}

impl PovmReport {
    pub fn is_valid(&self) -> bool {
        self.hermiticity_residual <= HERMITICITY_TOL
            && self.min_eigenvalue >= -HERMITICITY_TOL
            && self.completeness_residual <= HERMITICITY_TOL
    }

    pub fn is_projective(&self) -> bool {
        self.is_valid() && self.idempotence_residual <= IDEMPOTENCE_TOL
    }
}

/// Checks Hermiticity, positivity and completeness of every element.
pub fn validate_povm(povm: &Povm) -> Result<PovmReport> {
    let d = povm.dim();
    if povm.elements.is_empty() || povm.elements.len() != povm.outcomes.len() {
        return Err(Error::InvalidParameter("outcomes and elements differ in number".into()));
    }
    let mut sum = CMatrix::zeros(d, d);
    let mut herm: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    let mut idem: f64 = 0.0;
    for e in &povm.elements {
        if e.rows() != d || !e.is_square() {
            return Err(Error::DimensionMismatch("POVM elements differ in shape".into()));
        }
        herm = herm.max(e.hermiticity_residual());
        min_eig = min_eig.min(linalg::min_eigenvalue(&e.hermitian_part())?);
        idem = idem.max((e * e).max_abs_diff(e));
        sum = &sum + e;
    }
    Ok(PovmReport {
        hermiticity_residual: herm,
        min_eigenvalue: min_eig,
        completeness_residual: sum.max_abs_diff(&CMatrix::identity(d)),
        idempotence_residual: idem,
    })
}

/// Two-particle source state together with the four local observables.
///
/// `a1`, `a2` act on the first particle, `b1`, `b2` on the second.
#[derive(Debug, Clone)]
pub struct PairScenario {
    pub sigma: CMatrix,
    pub a1: Observable,
    pub a2: Observable,
    pub b1: Observable,
    pub b2: Observable,
}

impl PairScenario {
    pub fn new(sigma: CMatrix, a1: Observable, a2: Observable, b1: Observable, b2: Observable) -> Result<Self> {
        let d = a1.dim();
        if [a2.dim(), b1.dim(), b2.dim()].iter().any(|&x| x != d) {
            return Err(Error::DimensionMismatch("observables differ in dimension".into()));
        }
        if !sigma.is_square() || sigma.rows() != d * d {
            return Err(Error::DimensionMismatch(format!(
                "pair state is {}x{}, expected {}",
                sigma.rows(),
                sigma.cols(),
                d * d
            )));
        }
        let residual = sigma.hermiticity_residual();
        if residual > HERMITICITY_TOL {
            return Err(Error::NonHermitian { residual });
        }
        let tr = sigma.trace();
        if (tr - ONE).norm() > 1e-10 {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let sigma = sigma.hermitian_part();
        if linalg::min_eigenvalue(&sigma)? < -1e-10 {
            return Err(Error::InvalidState("pair state is not positive semidefinite".into()));
        }
        Ok(Self { sigma, a1, a2, b1, b2 })
    }

    pub fn from_ket(ket: &Ket, a1: Observable, a2: Observable, b1: Observable, b2: Observable) -> Result<Self> {
        Self::new(ket.density(), a1, a2, b1, b2)
    }

    /// Local dimension of each particle.
    pub fn dim(&self) -> usize {
        self.a1.dim()
    }

    /// Largest entrywise deviation from `SσS = σ`.
    pub fn swap_asymmetry(&self) -> f64 {
        swap_conjugate(&self.sigma, self.dim()).max_abs_diff(&self.sigma)
    }

    pub fn is_swap_symmetric(&self) -> bool {
        self.swap_asymmetry() <= HERMITICITY_TOL
    }

    /// `(σ + SσS)/2`.
    pub fn swap_symmetrized_state(&self) -> CMatrix {
        (&self.sigma + &swap_conjugate(&self.sigma, self.dim())).scale_real(0.5)
    }

    /// `K_A = -i[A1, A2]`.
    pub fn commutator_a(&self) -> Observable {
        commutator_observable(&self.a1, &self.a2)
    }

    /// `K_B = -i[B1, B2]`.
    pub fn commutator_b(&self) -> Observable {
        commutator_observable(&self.b1, &self.b2)
    }

    /// Returns the pair state as a ket when it is pure.
    pub fn pure_state(&self) -> Result<Ket> {
        let es = eig_hermitian(&self.sigma)?;
        if es.values[0] < 1.0 - 1e-9 {
            return Err(Error::Unsupported(format!(
                "pair state is mixed (largest eigenvalue {})",
                es.values[0]
            )));
        }
        Ok(Ket::normalized(self.dim(), es.vectors[0].clone())?.fix_phase())
    }
}

/// Conjugation by the swap operator, `S m S`.
pub fn swap_conjugate(m: &CMatrix, d: usize) -> CMatrix {
    let mut out = CMatrix::zeros(d * d, d * d);
    let sw = |k: usize| (k % d) * d + k / d;
    for r in 0..d * d {
        for c in 0..d * d {
            out[(sw(r), sw(c))] = m[(r, c)];
        }
    }
    out
}

/// `-i[a, b]` as an observable bounded by its own norm.
pub fn commutator_observable(a: &Observable, b: &Observable) -> Observable {
    let k = commutator(a.matrix(), b.matrix()).scale(Complex64::new(0.0, -1.0));
    Observable::unbounded(k).expect("commutator of Hermitian operators is anti-Hermitian")
}

/// Local depolarizing channel `ρ ↦ (1-λ)ρ + λ tr(ρ) I/d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepolarizingChannel {
    dim: usize,
    lambda: f64,
}

impl DepolarizingChannel {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!("depolarizing strength {lambda} outside [0, 1]")));
        }
        if dim < 2 {
            return Err(Error::InvalidParameter(format!("dimension {dim}")));
        }
        Ok(Self { dim, lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let d = self.dim as f64;
        let mixed = CMatrix::identity(self.dim).scale(rho.trace() / d);
        &rho.scale_real(1.0 - self.lambda) + &mixed.scale_real(self.lambda)
    }

    /// Kraus decomposition with clock-and-shift operators.
    ///
    /// Element 0 is proportional to the identity with weight
    /// `1 - λ + λ/d²`; the remaining `d² - 1` have weight `λ/d²` each.
    pub fn kraus(&self) -> Vec<(f64, CMatrix)> {
        let d = self.dim;
        let weights0 = 1.0 - self.lambda + self.lambda / (d * d) as f64;
        let w = self.lambda / (d * d) as f64;
        weyl_operators(d)
            .into_iter()
            .enumerate()
            .map(|(k, u)| (if k == 0 { weights0 } else { w }, u))
            .collect()
    }

    /// Kraus operators with their weights folded in.
    pub fn kraus_operators(&self) -> Vec<CMatrix> {
        self.kraus().into_iter().map(|(w, u)| u.scale_real(w.sqrt())).collect()
    }
}

/// Unitaries `X^a Z^b`, `a, b ∈ 0..d`, with the identity first.
pub fn weyl_operators(d: usize) -> Vec<CMatrix> {
    let mut shift = CMatrix::zeros(d, d);
    let mut clock = CMatrix::zeros(d, d);
    for k in 0..d {
        shift[((k + 1) % d, k)] = ONE;
        clock[(k, k)] = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / d as f64);
    }
    let mut ops = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            ops.push(&shift.powi(a as u32) * &clock.powi(b as u32));
        }
    }
    ops
}

/// Applies a local channel to both particles of a pair state.
pub fn depolarize_pair(sigma: &CMatrix, channel: &DepolarizingChannel) -> CMatrix {
    let d = channel.dim();
    let kraus = channel.kraus_operators();
    let mut out = CMatrix::zeros(d * d, d * d);
    for ka in &kraus {
        for kb in &kraus {
            let k = tensor(ka, kb);
            out = &out + &(&(&k * sigma) * &k.adjoint());
        }
    }
    out
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_rows(&[vec![ZERO, Complex64::new(0.0, -1.0)], vec![Complex64::new(0.0, 1.0), ZERO]])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::diagonal(&[1.0, -1.0])
}

/// Spin-1 operator `S_x` normalized to unit norm.
pub fn spin1_x() -> CMatrix {
    CMatrix::from_real(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]).scale_real(FRAC_1_SQRT_2)
}

/// Spin-1 operator `S_y` normalized to unit norm.
pub fn spin1_y() -> CMatrix {
    let mi = Complex64::new(0.0, -1.0);
    let pi = Complex64::new(0.0, 1.0);
    CMatrix::from_rows(&[vec![ZERO, mi, ZERO], vec![pi, ZERO, mi], vec![ZERO, pi, ZERO]]).scale_real(FRAC_1_SQRT_2)
}

/// `(S_x, S_y)` for local dimension 2 or 3.
pub fn spin_plane_pair(dim: usize) -> Result<(CMatrix, CMatrix)> {
    match dim {
        2 => Ok((pauli_x(), pauli_y())),
        3 => Ok((spin1_x(), spin1_y())),
        _ => Err(Error::Unsupported(format!("spin-plane observables for dimension {dim}"))),
    }
}

/// `cos φ S_x + sin φ S_y`.
pub fn spin_plane_observable(dim: usize, phi: f64) -> Result<Observable> {
    let (sx, sy) = spin_plane_pair(dim)?;
    Observable::new(&sx.scale_real(phi.cos()) + &sy.scale_real(phi.sin()))
}

/// Two-qubit state `cos(π/8)|00> - sin(π/8)|11>` measured with `σx`, `σy` on both sides.
pub fn rme_state() -> PairScenario {
    let (c, s) = ((PI / 8.0).cos(), (PI / 8.0).sin());
    let ket = Ket::normalized(2, vec![c.into(), ZERO, ZERO, (-s).into()]).expect("valid amplitudes");
    let x = Observable::new(pauli_x()).expect("bounded");
    let y = Observable::new(pauli_y()).expect("bounded");
    PairScenario::from_ket(&ket, x.clone(), y.clone(), x, y).expect("valid scenario")
}

/// Spin-plane angle of the shared observable in the two-qutrit scenario.
pub const IME_PHI: f64 = 1.20;

/// Amplitudes of the reference two-qutrit state before normalization.
pub fn ime_amplitudes() -> Vec<Complex64> {
    let c = Complex64::new;
    let mut amps = vec![ZERO; 9];
    amps[0] = c(0.34, -0.87);
    amps[2] = c(0.07, 0.0);
    amps[6] = c(0.07, 0.0);
    amps[4] = c(-0.33, 0.0);
    amps[8] = c(0.03, 0.07);
    amps
}

/// Two-qutrit reference scenario with `A1 = S_x`, `A2 = B1 = S_φ`, `B2 = -S_x`.
pub fn ime_state() -> PairScenario {
    let ket = Ket::normalized(3, ime_amplitudes()).expect("valid amplitudes");
    let a1 = Observable::new(spin1_x()).expect("bounded");
    let a2 = spin_plane_observable(3, IME_PHI).expect("qutrit");
    let b2 = Observable::new(spin1_x().scale_real(-1.0)).expect("bounded");
    PairScenario::from_ket(&ket, a1, a2.clone(), a2, b2).expect("valid scenario")
}

/// Maximally entangled two-qubit state `(|00> + |11>)/√2`.
pub fn phi_plus() -> Ket {
    Ket::normalized(2, vec![ONE, ZERO, ZERO, ONE]).expect("valid amplitudes")
}

/// On-disk scenario format.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub dim: usize,
    pub state: Vec<[f64; 2]>,
    pub observables: ObservableSet,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSet {
    #[serde(rename = "A1")]
    pub a1: Vec<[f64; 2]>,
    #[serde(rename = "A2")]
    pub a2: Vec<[f64; 2]>,
    #[serde(rename = "B1")]
    pub b1: Vec<[f64; 2]>,
    #[serde(rename = "B2")]
    pub b2: Vec<[f64; 2]>,
}

fn to_pairs(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn from_pairs(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|p| Complex64::new(p[0], p[1])).collect()
}

impl ScenarioFile {
    /// Builds a scenario, normalizing the state amplitudes.
    pub fn to_scenario(&self) -> Result<PairScenario> {
        let d = self.dim;
        if d < 2 {
            return Err(Error::Scenario(format!("dimension {d}")));
        }
        if self.state.len() != d * d {
            return Err(Error::Scenario(format!("state has {} amplitudes, expected {}", self.state.len(), d * d)));
        }
        if self.state.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Scenario("non-finite amplitude".into()));
        }
        let ket = Ket::normalized(d, from_pairs(&self.state))?;
        let obs = |name: &str, v: &[[f64; 2]]| -> Result<Observable> {
            if v.len() != d * d {
                return Err(Error::Scenario(format!("{name} has {} entries, expected {}", v.len(), d * d)));
            }
            let m = CMatrix::from_vec(d, d, from_pairs(v))?;
            Observable::new(m).map_err(|e| Error::Scenario(format!("{name}: {e}")))
        };
        let o = &self.observables;
        PairScenario::from_ket(&ket, obs("A1", &o.a1)?, obs("A2", &o.a2)?, obs("B1", &o.b1)?, obs("B2", &o.b2)?)
    }

    /// Serializes a scenario with a pure pair state.
    pub fn from_scenario(s: &PairScenario) -> Result<Self> {
        let ket = s.pure_state()?;
        let m = |o: &Observable| to_pairs(o.matrix().data());
        Ok(Self {
            dim: s.dim(),
            state: to_pairs(ket.amplitudes()),
            observables: ObservableSet { a1: m(&s.a1), a2: m(&s.a2), b1: m(&s.b1), b2: m(&s.b2) },
        })
    }
}

impl PairScenario {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        file.to_scenario()
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ScenarioFile::from_scenario(self)?)?)
    }
}
