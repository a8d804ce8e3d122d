//! Exact small-N references for the sampled estimators.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{apply_local, commutator, inner, operator_norm, CMatrix};
use crate::quantum::{Observable, PairScenario};
use crate::witness::{Regime, Terms, WitnessReport};

/// Largest number of pairs the loss enumeration accepts.
pub const MAX_ORACLE_PAIRS: usize = 4;

fn tensor_power(psi: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..n {
        out = out.iter().flat_map(|a| psi.iter().map(move |b| a * b)).collect();
    }
    out
}

fn combine(vectors: &[Vec<Complex64>], select: impl Fn(usize) -> bool, scale: f64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); vectors[0].len()];
    for (k, v) in vectors.iter().enumerate() {
        if select(k) {
            for (o, x) in out.iter_mut().zip(v) {
                *o += x * scale;
            }
        }
    }
    out
}

/// Witness of `N` copies of the pair when every particle is lost with
/// probability `p`, by enumerating all `2^{2N}` loss patterns.
///
/// A lost particle contributes nothing to its side's intensity. The state
/// must be pure.
pub fn exact_loss_oracle(s: &PairScenario, pairs: usize, p: f64) -> Result<WitnessReport> {
    if pairs == 0 || pairs > MAX_ORACLE_PAIRS {
        return Err(Error::InvalidParameter(format!("{pairs} pairs, enumeration supports 1 to {MAX_ORACLE_PAIRS}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("loss probability {p} outside [0, 1]")));
    }
    let d = s.dim();
    let sites = 2 * pairs;
    let psi = tensor_power(s.pure_state()?.amplitudes(), pairs);
    let ca = s.commutator_a();
    let cb = s.commutator_b();
    // Per site: first and second observable and commutator of that site's party.
    let ops = |site: usize| -> [&CMatrix; 3] {
        if site % 2 == 0 {
            [s.a1.matrix(), s.a2.matrix(), ca.matrix()]
        } else {
            [s.b1.matrix(), s.b2.matrix(), cb.matrix()]
        }
    };
    let applied: Vec<Vec<Vec<Complex64>>> =
        (0..3).map(|k| (0..sites).map(|j| apply_local(&psi, d, j, sites, ops(j)[k])).collect()).collect();

    let n = pairs as f64;
    let root = n.sqrt();
    // Accumulated E⟨X⟩ for xa, xb, pa, pb, E⟨X²⟩ for the same, E⟨xa xb⟩, E⟨pa pb⟩, E⟨C_A⟩, E⟨C_B⟩.
    let mut first = [0.0f64; 4];
    let mut second = [0.0f64; 4];
    let mut cross = [0.0f64; 2];
    let mut comm = [0.0f64; 2];
    for pattern in 0u32..(1 << sites) {
        let alive = |j: usize| pattern >> j & 1 == 1;
        let kept = pattern.count_ones() as i32;
        let weight = (1.0 - p).powi(kept) * p.powi(sites as i32 - kept);
        if weight == 0.0 {
            continue;
        }
        let side = |k: usize, parity: usize, scale: f64| combine(&applied[k], |j| j % 2 == parity && alive(j), scale);
        let vs = [side(0, 0, 1.0 / root), side(0, 1, 1.0 / root), side(1, 0, 1.0 / root), side(1, 1, 1.0 / root)];
        for (k, v) in vs.iter().enumerate() {
            first[k] += weight * inner(&psi, v).re;
            second[k] += weight * inner(v, v).re;
        }
        cross[0] += weight * inner(&vs[0], &vs[1]).re;
        cross[1] += weight * inner(&vs[2], &vs[3]).re;
        for (c, parity) in comm.iter_mut().zip([0, 1]) {
            *c += weight * inner(&psi, &side(2, parity, 1.0 / n)).re;
        }
    }
    let var = |k: usize| second[k] - first[k] * first[k];
    let terms = Terms {
        var_xa: var(0),
        var_xb: var(1),
        cov_x: cross[0] - first[0] * first[1],
        var_pa: var(2),
        var_pb: var(3),
        cov_p: cross[1] - first[2] * first[3],
        comm_a: comm[0].abs(),
        comm_b: comm[1].abs(),
    };
    Ok(WitnessReport::from_terms(&terms, Regime::Lossy(p), None))
}

/// Operator norm of `−i[A^{(n)}, B^{(n)}]` for the collective observables
/// `A^{(n)} = n^{−α} Σ_k a_k`, from the single-particle commutator.
pub fn collective_commutator_norm(a: &Observable, b: &Observable, n: usize, alpha: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("at least one particle is required".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("coarse-graining exponent {alpha} outside [0, 1]")));
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch("observables act on different spaces".into()));
    }
    let c = commutator(a.matrix(), b.matrix()).scale(Complex64::new(0.0, -1.0));
    Ok((n as f64).powf(1.0 - 2.0 * alpha) * operator_norm(&c))
}
