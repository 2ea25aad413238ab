//! Dense complex matrices on one to three qubits.
//!
//! Every multi-qubit object uses the same lexicographic basis ordering
//! `|q0 q1 …⟩`, with `q0` the most significant bit. For the teleportation
//! pipeline the factors are, in order, the input qubit `a`, the sender half
//! of the channel `A`, the receiver qubit `B`, and the auxiliary qubit `b`
//! when extraction is performed.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Absolute tolerance used for Hermiticity, positivity and projector checks.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Probabilities below this are treated as a null outcome.
pub const NULL_PROBABILITY: f64 = 1e-14;

const SUPPORTED_DIMS: [usize; 3] = [2, 4, 8];

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Square complex matrix of dimension 2, 4 or 8, stored row-major.
#[derive(Clone, PartialEq, Serialize)]
pub struct Matrix {
    dim: usize,
    data: Vec<C64>,
}

impl Matrix {
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        check_dim(dim)?;
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                left: dim * dim,
                right: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<const N: usize>(rows: [[C64; N]; N]) -> Result<Self> {
        Self::new(N, rows.iter().flatten().copied().collect())
    }

    pub fn from_real_rows<const N: usize>(rows: [[f64; N]; N]) -> Result<Self> {
        Self::new(N, rows.iter().flatten().map(|&x| re(x)).collect())
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::zeroed(dim))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let mut m = Self::zeroed(dim);
        for i in 0..dim {
            m[(i, i)] = re(1.0);
        }
        Ok(m)
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let dim = values.len();
        check_dim(dim)?;
        let mut m = Self::zeroed(dim);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = re(v);
        }
        Ok(m)
    }

    /// `|v⟩⟨v|` for an unnormalized ket.
    pub fn outer(ket: &[C64]) -> Result<Self> {
        let dim = ket.len();
        check_dim(dim)?;
        let mut m = Self::zeroed(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = ket[i] * ket[j].conj();
            }
        }
        Ok(m)
    }

    pub(crate) fn zeroed(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn dagger(&self) -> Self {
        let mut out = Self::zeroed(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(i, j)] = self[(j, i)].conj();
            }
        }
        out
    }

    /// Entry-wise complex conjugate (not the adjoint).
    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(re(factor))
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Self> {
        self.check_same_dim(rhs)?;
        Ok(self.mul_unchecked(rhs))
    }

    fn mul_unchecked(&self, rhs: &Matrix) -> Self {
        let n = self.dim;
        let mut out = Self::zeroed(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    /// `U·M·U†`.
    pub fn conjugate_by(&self, u: &Matrix) -> Result<Self> {
        self.check_same_dim(u)?;
        Ok(u.mul_unchecked(self).mul_unchecked(&u.dagger()))
    }

    /// `⟨v|M|v⟩` for a ket of matching dimension.
    pub fn expectation(&self, ket: &[C64]) -> Result<C64> {
        if ket.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: ket.len(),
            });
        }
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += ket[i].conj() * self[(i, j)] * ket[j];
            }
        }
        Ok(acc)
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> Result<f64> {
        self.check_same_dim(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let prod = self.mul_unchecked(&self.dagger());
        let id = Self::eye_unchecked(self.dim);
        prod.max_abs_diff(&id).map(|d| d <= tol).unwrap_or(false)
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        self.projector_deviation() <= tol
    }

    fn projector_deviation(&self) -> f64 {
        let sq = self.mul_unchecked(self);
        let idem = sq.max_abs_diff(self).unwrap_or(f64::INFINITY);
        idem.max(self.hermitian_deviation())
    }

    /// `Tr(ρ²)`, real for Hermitian input.
    pub fn purity(&self) -> f64 {
        self.mul_unchecked(self).trace().re
    }

    /// Checks unit trace, Hermiticity and positivity within [`HERMITIAN_TOL`].
    pub fn validate_density(&self) -> Result<()> {
        let dev = self.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > HERMITIAN_TOL || tr.im.abs() > HERMITIAN_TOL {
            return Err(Error::NotDensityMatrix(format!("trace {tr}")));
        }
        let eig = hermitian_eigenvalues(self)?;
        if let Some(&min) = eig.last() {
            if min < -HERMITIAN_TOL {
                return Err(Error::NotDensityMatrix(format!(
                    "negative eigenvalue {min:e}"
                )));
            }
        }
        Ok(())
    }

    fn eye_unchecked(dim: usize) -> Self {
        let mut m = Self::zeroed(dim);
        for i in 0..dim {
            m[(i, i)] = re(1.0);
        }
        m
    }

    fn check_same_dim(&self, other: &Matrix) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in add");
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in sub");
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in mul");
        self.mul_unchecked(rhs)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if SUPPORTED_DIMS.contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension { dim })
    }
}

pub fn sigma_x() -> Matrix {
    Matrix::from_real_rows([[0.0, 1.0], [1.0, 0.0]]).unwrap()
}

pub fn sigma_y() -> Matrix {
    let z = re(0.0);
    Matrix::from_rows([[z, c(0.0, -1.0)], [c(0.0, 1.0), z]]).unwrap()
}

pub fn sigma_z() -> Matrix {
    Matrix::from_real_rows([[1.0, 0.0], [0.0, -1.0]]).unwrap()
}

pub fn identity2() -> Matrix {
    Matrix::eye_unchecked(2)
}

/// `|k⟩⟨k|` on a single qubit.
pub fn basis_projector(k: usize) -> Matrix {
    let mut m = Matrix::zeroed(2);
    m[(k & 1, k & 1)] = re(1.0);
    m
}

/// Kronecker product `A ⊗ B`.
pub fn tensor(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let dim = a.dim * b.dim;
    if !matches!(dim, 4 | 8) {
        return Err(Error::UnsupportedDimension { dim });
    }
    let mut out = Matrix::zeroed(dim);
    for i in 0..a.dim {
        for j in 0..a.dim {
            let aij = a[(i, j)];
            for k in 0..b.dim {
                for l in 0..b.dim {
                    out[(i * b.dim + k, j * b.dim + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// Traces out every qubit not listed in `keep`.
///
/// `keep` holds qubit positions (0 = most significant) in increasing order;
/// the kept qubits retain their relative order in the result.
pub fn partial_trace(m: &Matrix, keep: &[usize]) -> Result<Matrix> {
    let n = m.n_qubits();
    if n < 2 {
        return Err(Error::InvalidSubsystems(format!(
            "a {}-dimensional matrix has no subsystems to trace",
            m.dim
        )));
    }
    if keep.is_empty() {
        return Err(Error::InvalidSubsystems("nothing kept".into()));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSubsystems(format!(
            "{keep:?} must be strictly increasing"
        )));
    }
    if let Some(&q) = keep.iter().find(|&&q| q >= n) {
        return Err(Error::InvalidSubsystems(format!(
            "qubit {q} out of range for {n} qubits"
        )));
    }
    if keep.len() == n {
        return Ok(m.clone());
    }

    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let out_dim = 1usize << keep.len();
    let mut out = Matrix::zeroed(out_dim);

    // Scatter the bits of `local` onto the given qubit positions.
    let spread = |local: usize, positions: &[usize]| -> usize {
        positions
            .iter()
            .enumerate()
            .map(|(bit, &q)| {
                let v = (local >> (positions.len() - 1 - bit)) & 1;
                v << (n - 1 - q)
            })
            .sum()
    };

    for i in 0..out_dim {
        let row = spread(i, keep);
        for j in 0..out_dim {
            let col = spread(j, keep);
            let mut acc = C64::new(0.0, 0.0);
            for e in 0..(1usize << traced.len()) {
                let env = spread(e, &traced);
                acc += m[(row | env, col | env)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Result of a projective measurement branch.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// `Tr(P·M·P)`, reported as exactly zero below [`NULL_PROBABILITY`].
    pub probability: f64,
    /// Normalized post-measurement state; `None` for a null outcome.
    pub post: Option<Matrix>,
}

impl Projection {
    pub fn is_null(&self) -> bool {
        self.post.is_none()
    }
}

pub fn project(m: &Matrix, p: &Matrix) -> Result<Projection> {
    m.check_same_dim(p)?;
    let dev = p.projector_deviation();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotProjector { deviation: dev });
    }
    Ok(project_unchecked(m, p))
}

pub(crate) fn project_unchecked(m: &Matrix, p: &Matrix) -> Projection {
    let pmp = p.mul_unchecked(m).mul_unchecked(p);
    let prob = pmp.trace().re;
    if prob < NULL_PROBABILITY {
        Projection {
            probability: 0.0,
            post: None,
        }
    } else {
        Projection {
            probability: prob,
            post: Some(pmp.scale_real(1.0 / prob)),
        }
    }
}

/// Real eigenvalues of a Hermitian matrix, sorted in descending order.
pub fn hermitian_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    let (values, _) = hermitian_eigh(m)?;
    // The real embedding doubles every eigenvalue; keep one of each pair.
    Ok(values.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_map(m: &Matrix, f: impl Fn(f64) -> f64) -> Result<Matrix> {
    let n = m.dim;
    let (values, vectors) = hermitian_eigh(m)?;
    let size = 2 * n;
    let mut real = vec![0.0; size * size];
    for (k, v) in vectors.chunks(size).enumerate() {
        // Both copies of an eigenvalue must map to the same f(λ), or the
        // result stops being the embedding of a complex matrix.
        let pair = 2 * (k / 2);
        let fl = f(0.5 * (values[pair] + values[pair + 1]));
        for i in 0..size {
            for j in 0..size {
                real[i * size + j] += fl * v[i] * v[j];
            }
        }
    }
    let mut out = Matrix::zeroed(n);
    for i in 0..n {
        for j in 0..n {
            let re = 0.5 * (real[i * size + j] + real[(i + n) * size + (j + n)]);
            let im = 0.5 * (real[(i + n) * size + j] - real[i * size + (j + n)]);
            out[(i, j)] = c(re, im);
        }
    }
    Ok(out)
}

/// Diagonalizes the real symmetric embedding `[[A, -B], [B, A]]` of a
/// Hermitian matrix `A + iB`. Returns eigenvalues (descending, each repeated
/// twice) and the matching eigenvectors stored contiguously.
fn hermitian_eigh(m: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let dev = m.hermitian_deviation();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let n = m.dim;
    let size = 2 * n;
    let mut a = vec![0.0; size * size];
    for i in 0..n {
        for j in 0..n {
            // Symmetrize so that round-off in the input cannot break Jacobi.
            let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            a[i * size + j] = z.re;
            a[(i + n) * size + (j + n)] = z.re;
            a[(i + n) * size + j] = z.im;
            a[i * size + (j + n)] = -z.im;
        }
    }
    let (values, vectors) = jacobi_symmetric(a, size);
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&x, &y| values[y].total_cmp(&values[x]));
    let sorted_values = order.iter().map(|&k| values[k]).collect();
    let mut sorted_vectors = Vec::with_capacity(size * size);
    for &k in &order {
        sorted_vectors.extend((0..size).map(|i| vectors[i * size + k]));
    }
    Ok((sorted_values, sorted_vectors))
}

/// Cyclic Jacobi rotations on a dense real symmetric matrix.
///
/// Returns the unsorted eigenvalues and the eigenvector matrix `V` with
/// eigenvectors in its columns.
fn jacobi_symmetric(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = cs * akp - sn * akq;
                    a[k * n + q] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = cs * apk - sn * aqk;
                    a[q * n + k] = sn * apk + cs * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = cs * vkp - sn * vkq;
                    v[k * n + q] = sn * vkp + cs * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

/// Single-qubit pure state `a0|0⟩ + a1|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PureState2 {
    a0: C64,
    a1: C64,
}

impl PureState2 {
    pub const NORM_TOL: f64 = 1e-12;

    pub fn new(a0: C64, a1: C64) -> Result<Self> {
        if !(a0.re.is_finite() && a0.im.is_finite() && a1.re.is_finite() && a1.im.is_finite()) {
            return Err(Error::NonFinite("pure state amplitudes"));
        }
        let norm_sqr = a0.norm_sqr() + a1.norm_sqr();
        if (norm_sqr - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::UnnormalizedState { norm_sqr });
        }
        Ok(Self { a0, a1 })
    }

    /// Normalizes the given amplitudes; fails only on the zero vector.
    pub fn normalized(a0: C64, a1: C64) -> Result<Self> {
        let norm = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::UnnormalizedState {
                norm_sqr: norm * norm,
            });
        }
        Self::new(a0 / norm, a1 / norm)
    }

    /// State with `|⟨0|ψ⟩|² = t` and phases `θ0`, `θ1`.
    pub fn from_angles(t: f64, theta0: f64, theta1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!("population {t} outside [0, 1]")));
        }
        Self::new(
            C64::from_polar(t.sqrt(), theta0),
            C64::from_polar((1.0 - t).sqrt(), theta1),
        )
    }

    pub fn zero() -> Self {
        Self { a0: re(1.0), a1: re(0.0) }
    }

    pub fn one() -> Self {
        Self { a0: re(0.0), a1: re(1.0) }
    }

    pub fn plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { a0: re(h), a1: re(h) }
    }

    pub fn a0(&self) -> C64 {
        self.a0
    }

    pub fn a1(&self) -> C64 {
        self.a1
    }

    pub fn ket(&self) -> [C64; 2] {
        [self.a0, self.a1]
    }

    /// `|⟨0|ψ⟩|²`.
    pub fn p0(&self) -> f64 {
        self.a0.norm_sqr()
    }

    /// `|⟨1|ψ⟩|²`.
    pub fn p1(&self) -> f64 {
        self.a1.norm_sqr()
    }

    /// `⟨0|ψ⟩⟨ψ|1⟩`, the off-diagonal entry of `|ψ⟩⟨ψ|`.
    pub fn coherence(&self) -> C64 {
        self.a0 * self.a1.conj()
    }

    pub fn density(&self) -> Matrix {
        Matrix::outer(&self.ket()).expect("qubit ket has dimension 2")
    }

    /// `⟨ψ|ρ|ψ⟩` for a single-qubit operator.
    pub fn overlap_with(&self, rho: &Matrix) -> Result<f64> {
        Ok(rho.expectation(&self.ket())?.re)
    }
}
