//! Dense complex linear algebra for small Hilbert spaces.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Eigenvalues closer than this are treated as one degenerate eigenspace.
pub const DEGENERACY_GAP: f64 = 1e-9;

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.iter().flatten().copied().collect() }
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data: data.iter().map(|&x| Complex64::new(x, 0.0)).collect() }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    /// Outer product |u><v|.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for (i, a) in u.iter().enumerate() {
            for (j, b) in v.iter().enumerate() {
                m[(i, j)] = a * b.conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(c, r)] = self[(r, c)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(c, r)] = self[(r, c)];
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() <= tol
    }

    /// Returns `(self + self†)/2`.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_real(0.5)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| self.data[r * self.cols..(r + 1) * self.cols].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Returns `tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Complex64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = ZERO;
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += self[(i, j)] * other[(j, i)];
            }
        }
        acc
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut out = Self::identity(self.rows);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_real(-1.0)
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "incompatible shapes for product");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for CMatrix {
            type Output = CMatrix;
            fn $m(self, rhs: CMatrix) -> CMatrix {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca, rb, cb) = (a.rows, a.cols, b.rows, b.cols);
    let mut out = CMatrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            let x = a[(i, j)];
            if x == ZERO {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = x * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of a sequence of matrices.
pub fn tensor_all(factors: &[&CMatrix]) -> CMatrix {
    factors.iter().fold(CMatrix::identity(1), |acc, f| tensor(&acc, f))
}

/// Partial trace of `m` over every subsystem not listed in `keep`.
///
/// `dims` gives the local dimensions in tensor order and `keep` the retained
/// subsystems in ascending order.
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.rows != total {
        return Err(Error::DimensionMismatch(format!(
            "matrix {}x{} does not match subsystem dimensions {dims:?}",
            m.rows, m.cols
        )));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::InvalidParameter(format!("invalid kept subsystems {keep:?}")));
    }
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let offsets = |subs: &[usize]| -> Vec<usize> {
        let mut offs = vec![0usize];
        for &s in subs {
            let mut next = Vec::with_capacity(offs.len() * dims[s]);
            for &o in &offs {
                for digit in 0..dims[s] {
                    next.push(o + digit * strides[s]);
                }
            }
            offs = next;
        }
        offs
    };
    let kept_offsets = offsets(keep);
    let traced_offsets = offsets(&traced);
    let n = kept_offsets.len();
    let mut out = CMatrix::zeros(n, n);
    for (i, &ri) in kept_offsets.iter().enumerate() {
        for (j, &cj) in kept_offsets.iter().enumerate() {
            out[(i, j)] = traced_offsets.iter().map(|&t| m[(ri + t, cj + t)]).sum();
        }
    }
    Ok(out)
}

/// Commutator `[a, b] = ab - ba`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    &(a * b) - &(b * a)
}

/// Expectation value `tr(state · op)` of an operator in a normalized state.
pub fn expect(state: &CMatrix, op: &CMatrix) -> Result<Complex64> {
    if !state.is_square() || !op.is_square() || state.rows != op.rows {
        return Err(Error::DimensionMismatch(format!(
            "state {}x{} vs operator {}x{}",
            state.rows, state.cols, op.rows, op.cols
        )));
    }
    let tr = state.trace();
    if (tr - ONE).norm() > 1e-8 {
        return Err(Error::InvalidState(format!("trace {tr} is not 1")));
    }
    Ok(state.trace_product(op))
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, `vectors[k]` belongs to `values[k]`.
    pub vectors: Vec<Vec<Complex64>>,
}

impl EigenSystem {
    /// Groups the spectrum into distinct eigenvalues and their projectors.
    pub fn eigenspaces(&self) -> Vec<(f64, CMatrix)> {
        let n = self.values.len();
        let mut groups: Vec<(Vec<f64>, CMatrix)> = Vec::new();
        for k in 0..n {
            let proj = CMatrix::outer(&self.vectors[k], &self.vectors[k]);
            match groups.last_mut() {
                Some((vals, p)) if vals.last().is_some_and(|&v| v - self.values[k] < DEGENERACY_GAP) => {
                    vals.push(self.values[k]);
                    *p = &*p + &proj;
                }
                _ => groups.push((vec![self.values[k]], proj)),
            }
        }
        groups
            .into_iter()
            .map(|(vals, p)| (vals.iter().sum::<f64>() / vals.len() as f64, p))
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Rebuilds `Σ f(λ) |v><v|`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut out = CMatrix::zeros(n, n);
        for (val, vec) in self.values.iter().zip(&self.vectors) {
            let w = f(*val);
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += vec[i] * vec[j].conj() * w;
                }
            }
        }
        out
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
pub fn eig_hermitian(m: &CMatrix) -> Result<EigenSystem> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", m.rows, m.cols)));
    }
    let scale = m.frobenius_norm().max(1e-300);
    let residual = m.hermiticity_residual();
    if residual > 1e-10 * scale.max(1.0) {
        return Err(Error::NonHermitian { residual });
    }
    if m.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("matrix entry".into()));
    }
    let n = m.rows;
    let mut a = m.hermitian_part();
    let mut v = CMatrix::identity(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let e = apq.conj() / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let es = e * s;
                let ec = e * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = akp * c - akq * es;
                    a[(k, q)] = akp * s + akq * ec;
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * c - vkq * es;
                    v[(k, q)] = vkp * s + vkq * ec;
                }
                let (ces, cec) = (es.conj(), ec.conj());
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = apk * c - aqk * ces;
                    a[(q, k)] = apk * s + aqk * cec;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    Ok(EigenSystem {
        values: order.iter().map(|&i| a[(i, i)].re).collect(),
        vectors: order.iter().map(|&i| (0..n).map(|r| v[(r, i)]).collect()).collect(),
    })
}

/// Spectral norm (largest singular value).
pub fn operator_norm(m: &CMatrix) -> f64 {
    if m.is_square() && m.is_hermitian(1e-12) {
        if let Ok(es) = eig_hermitian(m) {
            return es.max_abs();
        }
    }
    let g = &m.adjoint() * m;
    eig_hermitian(&g).map(|es| es.values[0].max(0.0).sqrt()).unwrap_or(f64::NAN)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    eig_hermitian(m).map(|es| *es.values.last().unwrap_or(&0.0))
}

/// Applies the single-site operator `op` to site `site` of a state vector on
/// sites with local dimension `d`.
pub fn apply_local(state: &[Complex64], d: usize, site: usize, sites: usize, op: &CMatrix) -> Vec<Complex64> {
    assert_eq!(op.rows(), d);
    let stride = d.pow((sites - 1 - site) as u32);
    let block = stride * d;
    let mut out = vec![ZERO; state.len()];
    for base in (0..state.len()).step_by(block) {
        for inner in 0..stride {
            let idx0 = base + inner;
            for r in 0..d {
                let mut acc = ZERO;
                for c in 0..d {
                    let x = op[(r, c)];
                    if x != ZERO {
                        acc += x * state[idx0 + c * stride];
                    }
                }
                out[idx0 + r * stride] = acc;
            }
        }
    }
    out
}

/// Inner product `<u|v>`.
pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Hermitian matrix from `d²` reals: the diagonal, then the real and
/// imaginary parts of each upper-triangle entry.
pub fn hermitian_from_params(d: usize, p: &[f64]) -> CMatrix {
    assert_eq!(p.len(), d * d, "expected {} parameters", d * d);
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = Complex64::new(p[i], 0.0);
    }
    let mut k = d;
    for i in 0..d {
        for j in i + 1..d {
            let z = Complex64::new(p[k], p[k + 1]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    m
}

/// Inverse of [`hermitian_from_params`].
pub fn hermitian_to_params(m: &CMatrix) -> Vec<f64> {
    let d = m.rows();
    let mut p: Vec<f64> = (0..d).map(|i| m[(i, i)].re).collect();
    for i in 0..d {
        for j in i + 1..d {
            p.push(m[(i, j)].re);
            p.push(m[(i, j)].im);
        }
    }
    p
}
