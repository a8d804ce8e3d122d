//! Born-rule sampling of joint outcomes on one pair.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::quantum::{validate_povm, Povm};
use crate::witness::terms::pair_expect;

/// Joint outcome distribution `P(a, b) = tr[σ (E_a ⊗ F_b)]`.
#[derive(Debug, Clone)]
pub struct JointTable {
    values: Vec<(f64, f64)>,
    cumulative: Vec<f64>,
}

impl JointTable {
    pub fn new(sigma: &CMatrix, e_a: &Povm, e_b: &Povm) -> Result<Self> {
        for p in [e_a, e_b] {
            let report = validate_povm(p)?;
            if !report.is_valid() {
                return Err(Error::InvalidParameter(format!("invalid POVM: {report:?}")));
            }
        }
        if sigma.rows() != e_a.dim() * e_b.dim() {
            return Err(Error::DimensionMismatch("POVMs do not match the pair state".into()));
        }
        let mut values = Vec::new();
        let mut probs = Vec::new();
        for (a, ea) in e_a.outcomes.iter().zip(&e_a.elements) {
            for (b, fb) in e_b.outcomes.iter().zip(&e_b.elements) {
                values.push((*a, *b));
                probs.push(pair_expect(sigma, ea, fb).max(0.0));
            }
        }
        Ok(Self::from_probabilities(values, probs))
    }

    fn from_probabilities(values: Vec<(f64, f64)>, probs: Vec<f64>) -> Self {
        let total: f64 = probs.iter().sum();
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p / total;
                acc
            })
            .collect();
        Self { values, cumulative }
    }

    pub fn probabilities(&self) -> Vec<((f64, f64), f64)> {
        let mut prev = 0.0;
        self.values
            .iter()
            .zip(&self.cumulative)
            .map(|(v, c)| {
                let p = c - prev;
                prev = *c;
                (*v, p)
            })
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let u: f64 = rng.random();
        let k = self.cumulative.partition_point(|&c| c <= u).min(self.values.len() - 1);
        self.values[k]
    }
}

/// Draws one joint outcome of measuring `e_a` on the first particle and
/// `e_b` on the second.
pub fn sample_pair<R: Rng + ?Sized>(sigma: &CMatrix, e_a: &Povm, e_b: &Povm, rng: &mut R) -> Result<(f64, f64)> {
    Ok(JointTable::new(sigma, e_a, e_b)?.sample(rng))
}
