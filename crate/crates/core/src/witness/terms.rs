//! Single-pair statistics and the assembly of witness terms from them.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::linalg::{partial_trace, CMatrix};
use crate::quantum::PairScenario;

/// Minimal arithmetic needed to assemble a witness.
pub trait Scalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {
    fn constant(x: f64) -> Self;
    fn abs(self) -> Self;
}

impl Scalar for f64 {
    fn constant(x: f64) -> Self {
        x
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
}

/// First-order truncated expansion `value + slope·ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub slope: f64,
}

impl Jet {
    pub fn new(value: f64, slope: f64) -> Self {
        Self { value, slope }
    }

    pub fn at(self, eps: f64) -> f64 {
        self.value + eps * self.slope
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet::new(self.value + o.value, self.slope + o.slope)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet::new(self.value - o.value, self.slope - o.slope)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet::new(self.value * o.value, self.value * o.slope + self.slope * o.value)
    }
}

impl Scalar for Jet {
    fn constant(x: f64) -> Self {
        Jet::new(x, 0.0)
    }
    fn abs(self) -> Self {
        if self.value > 0.0 {
            self
        } else if self.value < 0.0 {
            Jet::new(-self.value, -self.slope)
        } else {
            Jet::new(0.0, self.slope.abs())
        }
    }
}

/// Index of an observable in the statistics arrays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    A1 = 0,
    A2 = 1,
    B1 = 2,
    B2 = 3,
}

/// Expectation values of one pair that enter every witness form.
///
/// `mean` and `second` are single-particle moments, `same` is the
/// correlator of one observable measured on both particles, `cross` holds
/// `<A1⊗B1>` and `<A2⊗B2>`, `comm` holds `<K_A>` and `<K_B>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStatistics<T> {
    pub mean: [T; 4],
    pub second: [T; 4],
    pub same: [T; 4],
    pub cross: [T; 2],
    pub comm: [T; 2],
}

/// `tr(σ (X⊗Y))` without forming the tensor product.
pub fn pair_expect(sigma: &CMatrix, x: &CMatrix, y: &CMatrix) -> f64 {
    let d = x.rows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            let row = i * d + j;
            for k in 0..d {
                let xki = x[(k, i)];
                if xki == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for l in 0..d {
                    acc += sigma[(row, k * d + l)] * xki * y[(l, j)];
                }
            }
        }
    }
    acc.re
}

/// Marginal of the first (`0`) or second (`1`) particle.
pub fn marginal(sigma: &CMatrix, d: usize, which: usize) -> CMatrix {
    partial_trace(sigma, &[d, d], &[which]).expect("pair state shape checked by PairScenario")
}

fn single_expect(rho: &CMatrix, x: &CMatrix) -> f64 {
    rho.trace_product(x).re
}

impl PairStatistics<f64> {
    /// Statistics with Alice on the first particle and Bob on the second.
    pub fn from_state(sigma: &CMatrix, s: &PairScenario) -> Self {
        Self::from_parts(sigma, [s.a1.matrix(), s.a2.matrix(), s.b1.matrix(), s.b2.matrix()])
    }

    /// Same as [`Self::from_state`] for raw matrices in the order `A1, A2, B1, B2`.
    pub fn from_parts(sigma: &CMatrix, ops: [&CMatrix; 4]) -> Self {
        let d = ops[0].rows();
        let rho_a = marginal(sigma, d, 0);
        let rho_b = marginal(sigma, d, 1);
        let rho_for = |k: usize| if k < 2 { &rho_a } else { &rho_b };
        let mean = std::array::from_fn(|k| single_expect(rho_for(k), ops[k]));
        let second = std::array::from_fn(|k| single_expect(rho_for(k), &(ops[k] * ops[k])));
        let same = std::array::from_fn(|k| pair_expect(sigma, ops[k], ops[k]));
        let cross = [pair_expect(sigma, ops[0], ops[2]), pair_expect(sigma, ops[1], ops[3])];
        // <-i[X, Y]> = 2 Im tr(ρ X Y)
        let comm_of = |rho: &CMatrix, x: &CMatrix, y: &CMatrix| 2.0 * rho.trace_product(&(x * y)).im;
        let comm = [comm_of(&rho_a, ops[0], ops[1]), comm_of(&rho_b, ops[2], ops[3])];
        Self { mean, second, same, cross, comm }
    }

    pub fn iid(s: &PairScenario) -> Self {
        Self::from_state(&s.sigma, s)
    }

    /// Statistics of the swap-symmetrized state, as seen by a random split.
    pub fn symmetrized(s: &PairScenario) -> Self {
        Self::from_state(&s.swap_symmetrized_state(), s)
    }

    /// Effect of local depolarization of strength `lambda` on both particles.
    pub fn depolarized(&self, lambda: f64, tr: &LocalTraces) -> Self {
        let k = 1.0 - lambda;
        let pair = |c: f64, mx: f64, my: f64, tx: f64, ty: f64| {
            k * k * c + lambda * k * (mx * ty + my * tx) + lambda * lambda * tx * ty
        };
        let m = self.mean;
        let t = tr.first;
        Self {
            mean: std::array::from_fn(|i| k * m[i] + lambda * t[i]),
            second: std::array::from_fn(|i| k * self.second[i] + lambda * tr.second[i]),
            same: std::array::from_fn(|i| pair(self.same[i], m[i], m[i], t[i], t[i])),
            cross: [pair(self.cross[0], m[0], m[2], t[0], t[2]), pair(self.cross[1], m[1], m[3], t[1], t[3])],
            comm: [k * self.comm[0] + lambda * tr.comm[0], k * self.comm[1] + lambda * tr.comm[1]],
        }
    }

    /// Effect of independent particle loss with probability `p`.
    pub fn lossy(&self, p: f64) -> Self {
        let r = 1.0 - p;
        Self {
            mean: self.mean.map(|x| r * x),
            second: self.second.map(|x| r * x),
            same: self.same.map(|x| r * r * x),
            cross: self.cross.map(|x| r * r * x),
            comm: self.comm.map(|x| r * x),
        }
    }
}

/// Normalized traces `tr(X)/d`, `tr(X²)/d`, `tr(K)/d` of the local operators.
#[derive(Debug, Clone, Copy)]
pub struct LocalTraces {
    pub first: [f64; 4],
    pub second: [f64; 4],
    pub comm: [f64; 2],
}

impl LocalTraces {
    pub fn of(s: &PairScenario) -> Self {
        let d = s.dim() as f64;
        let ops = [s.a1.matrix(), s.a2.matrix(), s.b1.matrix(), s.b2.matrix()];
        Self {
            first: ops.map(|o| o.trace().re / d),
            second: ops.map(|o| (o * o).trace().re / d),
            comm: [s.commutator_a().matrix().trace().re / d, s.commutator_b().matrix().trace().re / d],
        }
    }
}

/// Which way the two sides' particles are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WitnessForm {
    /// Alice holds the first particle of every pair.
    Iid,
    /// Each particle lands on Alice's side with probability `q`.
    Bipartition(f64),
    /// Bipartition form averaged over `q ∈ [0, 1]`.
    Averaged,
}

/// The eight summands of a witness.
///
/// `f = var_xa + var_xb + 2 cov_x + var_pa + var_pb - 2 cov_p - comm_a - comm_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Terms<T> {
    pub var_xa: T,
    pub var_xb: T,
    pub cov_x: T,
    pub var_pa: T,
    pub var_pb: T,
    pub cov_p: T,
    pub comm_a: T,
    pub comm_b: T,
}

impl<T: Scalar> Terms<T> {
    pub fn f(&self) -> T {
        let two = T::constant(2.0);
        self.var_xa + self.var_xb + two * self.cov_x + self.var_pa + self.var_pb
            - two * self.cov_p
            - self.comm_a
            - self.comm_b
    }

    /// `Var(x_A + x_B)`.
    pub fn var_x(&self) -> T {
        self.var_xa + self.var_xb + T::constant(2.0) * self.cov_x
    }

    /// `Var(p_A - p_B)`.
    pub fn var_p(&self) -> T {
        self.var_pa + self.var_pb - T::constant(2.0) * self.cov_p
    }
}

impl Terms<f64> {
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("var_x", self.var_x()),
            ("var_p", self.var_p()),
            ("var_xa", self.var_xa),
            ("var_xb", self.var_xb),
            ("cov_x", self.cov_x),
            ("var_pa", self.var_pa),
            ("var_pb", self.var_pb),
            ("cov_p", self.cov_p),
            ("comm_a", self.comm_a),
            ("comm_b", self.comm_b),
        ]
    }
}

/// Assembles the witness terms of `form` from single-pair statistics.
pub fn assemble<T: Scalar>(st: &PairStatistics<T>, form: WitnessForm) -> Terms<T> {
    let c = T::constant;
    let (a1, a2, b1, b2) = (Slot::A1 as usize, Slot::A2 as usize, Slot::B1 as usize, Slot::B2 as usize);
    match form {
        WitnessForm::Iid => {
            let var = |k: usize| st.second[k] - st.mean[k] * st.mean[k];
            Terms {
                var_xa: var(a1),
                var_xb: var(b1),
                cov_x: st.cross[0] - st.mean[a1] * st.mean[b1],
                var_pa: var(a2),
                var_pb: var(b2),
                cov_p: st.cross[1] - st.mean[a2] * st.mean[b2],
                comm_a: st.comm[0].abs(),
                comm_b: st.comm[1].abs(),
            }
        }
        WitnessForm::Bipartition(q) => {
            let qb = 1.0 - q;
            let var = |k: usize, w: f64| {
                c(2.0 * w) * st.second[k] + c(2.0 * w * w) * st.same[k] - c(4.0 * w * w) * st.mean[k] * st.mean[k]
            };
            let cov = |x: T, ma: T, mb: T| c(2.0 * q * qb) * (x - c(2.0) * ma * mb);
            Terms {
                var_xa: var(a1, q),
                var_xb: var(b1, qb),
                cov_x: cov(st.cross[0], st.mean[a1], st.mean[b1]),
                var_pa: var(a2, q),
                var_pb: var(b2, qb),
                cov_p: cov(st.cross[1], st.mean[a2], st.mean[b2]),
                comm_a: c(2.0 * q) * st.comm[0].abs(),
                comm_b: c(2.0 * qb) * st.comm[1].abs(),
            }
        }
        WitnessForm::Averaged => {
            let var = |k: usize| {
                st.second[k] + c(2.0 / 3.0) * st.same[k] - c(4.0 / 3.0) * st.mean[k] * st.mean[k]
            };
            let cov = |x: T, ma: T, mb: T| c(1.0 / 3.0) * x - c(2.0 / 3.0) * ma * mb;
            Terms {
                var_xa: var(a1),
                var_xb: var(b1),
                cov_x: cov(st.cross[0], st.mean[a1], st.mean[b1]),
                var_pa: var(a2),
                var_pb: var(b2),
                cov_p: cov(st.cross[1], st.mean[a2], st.mean[b2]),
                comm_a: st.comm[0].abs(),
                comm_b: st.comm[1].abs(),
            }
        }
    }
}
