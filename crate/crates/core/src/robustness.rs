//! Threshold search and parameter sweeps.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::PairScenario;
use crate::witness::{self, Adversary, AdversaryOptions, NoiseKind, NoiseSpec, WitnessForm};

/// Default bisection tolerance for closed-form witnesses.
pub const CLOSED_FORM_TOL: f64 = 1e-10;
/// Default bisection tolerance for adversary-based witnesses.
pub const ADVERSARY_TOL: f64 = 1e-4;

/// Located sign change of a witness as a function of a noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub parameter: String,
    pub critical_value: f64,
    pub bracket: [f64; 2],
    pub iterations: usize,
    /// `|f(critical_value)|`.
    pub residual: f64,
}

impl ThresholdResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("threshold serializes")
    }
}

fn finite(level: f64, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("witness value at level {level}")))
    }
}

/// Bisection for the sign change of `witness` on `[lo, hi]`.
pub fn find_threshold<F>(parameter: &str, witness: F, bracket: [f64; 2], tol: f64) -> Result<ThresholdResult>
where
    F: Fn(f64) -> Result<f64>,
{
    let [mut lo, mut hi] = bracket;
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("bracket [{lo}, {hi}] with tolerance {tol}")));
    }
    let f_lo = finite(lo, witness(lo)?)?;
    let f_hi = finite(hi, witness(hi)?)?;
    if (f_lo < 0.0) == (f_hi < 0.0) {
        return Err(Error::NoSignChange { lo, hi });
    }
    let lo_negative = f_lo < 0.0;
    let mut iterations = 0;
    while hi - lo >= tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = finite(mid, witness(mid)?)?;
        iterations += 1;
        if (v < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let critical_value = 0.5 * (lo + hi);
    let residual = finite(critical_value, witness(critical_value)?)?.abs();
    Ok(ThresholdResult { parameter: parameter.to_string(), critical_value, bracket: [lo, hi], iterations, residual })
}

/// First sub-interval of an evenly spaced coarse grid on which `witness` changes sign.
pub fn coarse_bracket<F>(witness: &F, lo: f64, hi: f64, points: usize) -> Result<[f64; 2]>
where
    F: Fn(f64) -> Result<f64>,
{
    let points = points.max(2);
    let grid: Vec<f64> = (0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect();
    let mut prev = (grid[0], finite(grid[0], witness(grid[0])?)?);
    for &x in &grid[1..] {
        let v = finite(x, witness(x)?)?;
        if (v < 0.0) != (prev.1 < 0.0) {
            return Ok([prev.0, x]);
        }
        prev = (x, v);
    }
    Err(Error::NoSignChange { lo, hi })
}

/// Search range of each noise level.
pub fn noise_domain(kind: NoiseKind) -> Result<[f64; 2]> {
    match kind {
        NoiseKind::Depolarize | NoiseKind::Loss => Ok([0.0, 1.0]),
        NoiseKind::Povm => Ok([0.0, 0.5]),
        NoiseKind::None => Err(Error::Unsupported("threshold needs a noise kind".into())),
    }
}

/// Noise level at which the witness of `form` stops detecting entanglement.
pub fn witness_threshold(
    s: &PairScenario,
    form: WitnessForm,
    kind: NoiseKind,
    tol: Option<f64>,
    adversary: &AdversaryOptions,
) -> Result<ThresholdResult> {
    let [lo, hi] = noise_domain(kind)?;
    match kind {
        NoiseKind::Povm => {
            let adv = Adversary::new(s, form, *adversary)?;
            let w = |eps: f64| adv.worst_case(eps).map(|r| r.f);
            let bracket = coarse_bracket(&w, lo, hi, 11)?;
            find_threshold(kind.parameter(), w, bracket, tol.unwrap_or(ADVERSARY_TOL))
        }
        _ => {
            let w = |x: f64| witness::evaluate(s, form, &NoiseSpec::new(kind, x)?, adversary).map(|r| r.f);
            let bracket = coarse_bracket(&w, lo, hi, 11)?;
            find_threshold(kind.parameter(), w, bracket, tol.unwrap_or(CLOSED_FORM_TOL))
        }
    }
}

/// Witness values on a parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub parameter: String,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl SweepTable {
    pub fn new(parameter: &str, grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::DimensionMismatch("grid and values differ in length".into()));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("grid is not strictly increasing".into()));
        }
        Ok(Self { parameter: parameter.to_string(), grid, values })
    }

    /// Trapezoid rule over the grid.
    pub fn trapezoid(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }

    /// Sub-intervals where the values are negative, with sign changes
    /// located by linear interpolation between grid points.
    pub fn negative_intervals(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::new();
        let mut start: Option<f64> = None;
        let n = self.grid.len();
        for i in 0..n {
            let (x, v) = (self.grid[i], self.values[i]);
            if v < 0.0 && start.is_none() {
                start = Some(if i == 0 { x } else { crossing(self.grid[i - 1], self.values[i - 1], x, v) });
            }
            if v >= 0.0 {
                if let Some(s) = start.take() {
                    out.push([s, crossing(self.grid[i - 1], self.values[i - 1], x, v)]);
                }
            }
        }
        if let Some(s) = start {
            out.push([s, self.grid[n - 1]]);
        }
        out
    }

    /// Fraction of the grid range covered by [`Self::negative_intervals`].
    pub fn negative_fraction(&self) -> f64 {
        let span = self.grid[self.grid.len() - 1] - self.grid[0];
        self.negative_intervals().iter().map(|[a, b]| b - a).sum::<f64>() / span
    }

    /// CSV with header `param,f` and 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"param,f\n")?;
        for (x, v) in self.grid.iter().zip(&self.values) {
            writeln!(w, "{x:.16e},{v:.16e}")?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }
}

fn crossing(x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    if y1 == y0 {
        return x0;
    }
    x0 + (x1 - x0) * y0 / (y0 - y1)
}

/// Uniform grid on `[lo, hi]` with both endpoints.
pub fn uniform_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|k| if k + 1 == steps { hi } else { lo + (hi - lo) * k as f64 / (steps - 1) as f64 })
        .collect()
}

/// `f_q` on a uniform grid of `q ∈ [0, 1]`.
pub fn sweep_q(s: &PairScenario, steps: usize) -> Result<SweepTable> {
    if steps < 2 {
        return Err(Error::InvalidParameter(format!("sweep needs at least 2 steps, got {steps}")));
    }
    let grid = uniform_grid(0.0, 1.0, steps);
    let values = grid.iter().map(|&q| witness::f_q(s, q).map(|r| r.f)).collect::<Result<Vec<_>>>()?;
    SweepTable::new("q", grid, values)
}

/// Witness of `form` at each noise level of `grid`.
pub fn sweep_noise(
    s: &PairScenario,
    form: WitnessForm,
    kind: NoiseKind,
    grid: &[f64],
    adversary: &AdversaryOptions,
) -> Result<SweepTable> {
    if kind == NoiseKind::None {
        return Err(Error::Unsupported("sweep needs a noise kind".into()));
    }
    let specs = grid.iter().map(|&x| NoiseSpec::new(kind, x)).collect::<Result<Vec<_>>>()?;
    let values = if kind == NoiseKind::Povm {
        let adv = Adversary::new(s, form, *adversary)?;
        specs.iter().map(|n| adv.worst_case(n.level).map(|r| r.f)).collect::<Result<Vec<_>>>()?
    } else {
        specs
            .par_iter()
            .map(|n| witness::evaluate(s, form, n, adversary).map(|r| r.f))
            .collect::<Result<Vec<_>>>()?
    };
    SweepTable::new(kind.parameter(), grid.to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_on_a_line() {
        let r = find_threshold("x", |x| Ok(x - 0.3), [0.0, 1.0], 1e-12).unwrap();
        assert!((r.critical_value - 0.3).abs() < 1e-12);
        assert!(r.iterations <= 40);
    }

    #[test]
    fn no_sign_change_is_an_error() {
        assert!(matches!(find_threshold("x", |x| Ok(x + 1.0), [0.0, 1.0], 1e-6), Err(Error::NoSignChange { .. })));
    }

    #[test]
    fn non_finite_is_an_error() {
        assert!(matches!(find_threshold("x", |_| Ok(f64::NAN), [0.0, 1.0], 1e-6), Err(Error::NonFinite(_))));
    }

    #[test]
    fn csv_format() {
        let t = SweepTable::new("q", vec![0.0, 0.5], vec![-1.0, 0.25]).unwrap();
        let csv = t.to_csv();
        assert_eq!(csv, "param,f\n0.0000000000000000e0,-1.0000000000000000e0\n5.0000000000000000e-1,2.5000000000000000e-1\n");
    }

    #[test]
    fn negative_intervals_interpolate() {
        let t = SweepTable::new("q", vec![0.0, 1.0, 2.0], vec![1.0, -1.0, 1.0]).unwrap();
        assert_eq!(t.negative_intervals(), vec![[0.5, 1.5]]);
    }
}
