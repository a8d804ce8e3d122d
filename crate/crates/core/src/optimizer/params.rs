//! Unconstrained parameterization of scenarios.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, hermitian_from_params, hermitian_to_params, CMatrix};
use crate::quantum::{spin_plane_pair, Ket, Observable, PairScenario};

/// How the pair state is parameterized.
#[derive(Debug, Clone, PartialEq)]
pub enum StateLayout {
    /// All `d²` complex amplitudes.
    Free,
    /// Amplitudes with `c_ij = c_ji`, upper triangle only.
    Symmetric,
    /// The state is not searched over.
    Fixed(Ket),
}

/// How each of the four observables is parameterized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservableLayout {
    /// One angle `φ` giving `cos φ S_x + sin φ S_y`.
    SpinPlane,
    /// `d²` reals `h` giving `sin(H(h))` for the Hermitian matrix `H(h)`.
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub dim: usize,
    pub state: StateLayout,
    pub observables: ObservableLayout,
}

/// Parameter vector with its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub values: Vec<f64>,
    pub layout: Layout,
}

impl Layout {
    pub fn new(dim: usize, state: StateLayout, observables: ObservableLayout) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!("dimension {dim}")));
        }
        if observables == ObservableLayout::SpinPlane {
            spin_plane_pair(dim)?;
        }
        if let StateLayout::Fixed(k) = &state {
            if k.dim() != dim {
                return Err(Error::DimensionMismatch("fixed state dimension".into()));
            }
        }
        Ok(Self { dim, state, observables })
    }

    fn amplitude_slots(&self) -> Vec<Vec<usize>> {
        let d = self.dim;
        match self.state {
            StateLayout::Free => (0..d * d).map(|k| vec![k]).collect(),
            StateLayout::Symmetric => {
                let mut slots = Vec::new();
                for i in 0..d {
                    for j in i..d {
                        slots.push(if i == j { vec![i * d + i] } else { vec![i * d + j, j * d + i] });
                    }
                }
                slots
            }
            StateLayout::Fixed(_) => Vec::new(),
        }
    }

    pub fn state_len(&self) -> usize {
        2 * self.amplitude_slots().len()
    }

    pub fn observable_len(&self) -> usize {
        match self.observables {
            ObservableLayout::SpinPlane => 1,
            ObservableLayout::General => self.dim * self.dim,
        }
    }

    pub fn len(&self) -> usize {
        self.state_len() + 4 * self.observable_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Amplitudes, unnormalized.
    fn amplitudes(&self, x: &[f64]) -> Vec<Complex64> {
        let d = self.dim;
        if let StateLayout::Fixed(k) = &self.state {
            return k.amplitudes().to_vec();
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); d * d];
        for (s, slot) in self.amplitude_slots().iter().enumerate() {
            let z = Complex64::new(x[2 * s] + if s == 0 { 1.0 } else { 0.0 }, x[2 * s + 1]);
            for &k in slot {
                amps[k] = z;
            }
        }
        amps
    }

    fn observable(&self, x: &[f64]) -> CMatrix {
        match self.observables {
            ObservableLayout::SpinPlane => {
                let (sx, sy) = spin_plane_pair(self.dim).expect("checked in Layout::new");
                &sx.scale_real(x[0].cos()) + &sy.scale_real(x[0].sin())
            }
            ObservableLayout::General => {
                let h = hermitian_from_params(self.dim, x);
                eig_hermitian(&h).expect("hermitian by construction").map(f64::sin)
            }
        }
    }

    /// The raw state vector and observables `A1, A2, B1, B2` for `x`.
    pub fn decode_raw(&self, x: &[f64]) -> Result<(Vec<Complex64>, [CMatrix; 4])> {
        if x.len() != self.len() {
            return Err(Error::InvalidParameter(format!("{} parameters for a layout of {}", x.len(), self.len())));
        }
        let amps = self.amplitudes(x);
        let norm = amps.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        if !(norm > 1e-150) || !norm.is_finite() {
            return Err(Error::InvalidState("parameters give a zero state".into()));
        }
        let amps: Vec<Complex64> = amps.into_iter().map(|a| a / norm).collect();
        let off = self.state_len();
        let m = self.observable_len();
        let ops = std::array::from_fn(|k| self.observable(&x[off + k * m..off + (k + 1) * m]));
        Ok((amps, ops))
    }

    pub fn decode(&self, x: &[f64]) -> Result<PairScenario> {
        let (amps, ops) = self.decode_raw(x)?;
        let ket = Ket::normalized(self.dim, amps)?;
        let [a1, a2, b1, b2] = ops.map(|o| Observable::new(o.hermitian_part()));
        PairScenario::from_ket(&ket, a1?, a2?, b1?, b2?)
    }

    /// Parameters reproducing `s`, which must have a pure state of the
    /// right form and observables representable in this layout.
    pub fn encode(&self, s: &PairScenario) -> Result<ParamVector> {
        if s.dim() != self.dim {
            return Err(Error::DimensionMismatch("scenario dimension".into()));
        }
        let mut values = Vec::with_capacity(self.len());
        match &self.state {
            StateLayout::Fixed(k) => {
                if s.sigma.max_abs_diff(&k.density()) > 1e-10 {
                    return Err(Error::InvalidState("state differs from the fixed state".into()));
                }
            }
            _ => {
                let ket = s.pure_state()?;
                let amps = ket.amplitudes();
                let slots = self.amplitude_slots();
                for (idx, slot) in slots.iter().enumerate() {
                    let z = amps[slot[0]];
                    if slot.iter().any(|&k| (amps[k] - z).norm() > 1e-10) {
                        return Err(Error::InvalidState("state is not permutation symmetric".into()));
                    }
                    values.push(z.re - if idx == 0 { 1.0 } else { 0.0 });
                    values.push(z.im);
                }
            }
        }
        for o in [&s.a1, &s.a2, &s.b1, &s.b2] {
            values.extend(self.encode_observable(o.matrix())?);
        }
        Ok(ParamVector { values, layout: self.clone() })
    }

    fn encode_observable(&self, o: &CMatrix) -> Result<Vec<f64>> {
        match self.observables {
            ObservableLayout::SpinPlane => {
                let (sx, sy) = spin_plane_pair(self.dim)?;
                let nx = sx.trace_product(&sx).re;
                let cx = sx.trace_product(o).re / nx;
                let cy = sy.trace_product(o).re / nx;
                let phi = cy.atan2(cx);
                let rebuilt = &sx.scale_real(phi.cos()) + &sy.scale_real(phi.sin());
                if rebuilt.max_abs_diff(o) > 1e-10 {
                    return Err(Error::InvalidObservable("observable is not a unit spin-plane operator".into()));
                }
                Ok(vec![phi])
            }
            ObservableLayout::General => {
                let es = eig_hermitian(o)?;
                let h = es.map(|v| v.clamp(-1.0, 1.0).asin());
                Ok(hermitian_to_params(&h))
            }
        }
    }
}

impl ParamVector {
    pub fn zeros(layout: Layout) -> Self {
        Self { values: vec![0.0; layout.len()], layout }
    }

    pub fn decode(&self) -> Result<PairScenario> {
        self.layout.decode(&self.values)
    }
}

/// `decode(encode(s))` for any scenario representable in `layout`.
pub fn encode(s: &PairScenario, layout: &Layout) -> Result<ParamVector> {
    layout.encode(s)
}

pub fn decode(p: &ParamVector) -> Result<PairScenario> {
    p.decode()
}
