//! Dense complex linear algebra at small dimension.
//!
//! Everything here is sized for Hamiltonians of dimension up to ~10^3:
//! dense row-major storage, a cyclic Jacobi eigensolver for Hermitian
//! matrices (chosen for its unconditionally orthonormal eigenvectors), and
//! spectral evolution operators. The one genuinely delicate primitive is
//! [`phase_increment`], which returns `e^{ix} - 1` at full relative accuracy
//! even for |x| ~ 1e-12; the protocol engine never forms near-unity
//! amplitudes directly and leans on it everywhere.
//!
//! All types are immutable after construction and safe to share across
//! threads; operations are pure functions.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;

use crate::error::{Error, Result};

/// Double-precision complex scalar used for all amplitudes.
pub type C64 = Complex<f64>;

/// Tolerance for the Hermitian-symmetry precondition check.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Off-diagonal threshold (relative to the largest entry) at which the
/// Jacobi sweep stops.
const JACOBI_OFF_TOL: f64 = 1e-13;
/// Sweep cap; cyclic Jacobi on a finite Hermitian matrix converges far
/// sooner than this.
const JACOBI_MAX_SWEEPS: usize = 64;
/// Slack allowed on state norms: norm^2 may exceed 1 by at most this.
const NORM_TOL: f64 = 1e-12;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major data, checking shape and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Internal constructor for results of arithmetic on validated inputs.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    /// Zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_raw(rows, cols, vec![C64::new(0.0, 0.0); rows * cols])
    }

    /// Identity matrix.
    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(1.0, 0.0);
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

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    /// Largest entry magnitude, `max_ij |A_ij|`.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, z| m.max(abs_c(*z)))
    }

    /// Worst Hermitian-symmetry violation, `max_ij |A_ij - conj(A_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max(abs_c(self.get(i, j) - self.get(j, i).conj()));
            }
        }
        worst
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    /// Matrix product; panics on shape mismatch (internal contract).
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    let v = out.get(i, j) + a * rhs.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..self.cols {
                acc += self.get(i, j) * v[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Largest entry of `A - B`; both shapes must match.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(0.0f64, |m, (a, b)| m.max(abs_c(a - b)))
    }
}

/// Kronecker product `A (x) B`; dimensions multiply.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows() * b.rows();
    let cols = a.cols() * b.cols();
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ia in 0..a.rows() {
        for ja in 0..a.cols() {
            let f = a.get(ia, ja);
            for ib in 0..b.rows() {
                for jb in 0..b.cols() {
                    out.set(ia * b.rows() + ib, ja * b.cols() + jb, f * b.get(ib, jb));
                }
            }
        }
    }
    out
}

/// `e^{ix} - 1`, computed as `(-2 sin^2(x/2), sin x)`.
///
/// Both components keep full relative accuracy however small `x` is; this is
/// the building block that lets the engine track amplitude deficits of order
/// 1e-25 in plain doubles.
#[inline]
pub fn phase_increment(x: f64) -> C64 {
    let h = libm::sin(0.5 * x);
    C64::new(-2.0 * h * h, libm::sin(x))
}

#[inline]
pub(crate) fn abs_c(z: C64) -> f64 {
    libm::hypot(z.re, z.im)
}

/// Complex state vector, possibly sub-normalized.
///
/// Post-selected branches carry norms below one before renormalization;
/// `normalized` records whether the norm is 1 within 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
    normalized: bool,
}

impl StateVector {
    /// Builds a state, requiring finite amplitudes and norm^2 <= 1 + 1e-12.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if !amplitudes
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        let n2: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if n2 > 1.0 + NORM_TOL {
            return Err(Error::NotSubNormalized { norm_sqr: n2 });
        }
        let normalized = libm::fabs(n2 - 1.0) <= NORM_TOL;
        Ok(Self {
            amplitudes,
            normalized,
        })
    }

    /// Basis state `|index>` in dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Self {
            amplitudes,
            normalized: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }
}

/// Eigenvalues and orthonormal eigenvectors of a Hermitian matrix.
///
/// Eigenvalues are sorted ascending; column `k` of `vectors` is the
/// eigenvector for `eigenvalues[k]`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    vectors: ComplexMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Amplitude `<basis_index | v_k>`.
    #[inline]
    pub fn amplitude(&self, basis_index: usize, k: usize) -> C64 {
        self.vectors.get(basis_index, k)
    }

    /// Eigenvector matrix (columns are eigenvectors).
    pub fn vectors(&self) -> &ComplexMatrix {
        &self.vectors
    }

    /// Reconstructs `sum_k E_k v_k v_k^dag`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = self.dim();
        let mut out = ComplexMatrix::zeros(d, d);
        for k in 0..d {
            let e = self.eigenvalues[k];
            for i in 0..d {
                for j in 0..d {
                    let v = out.get(i, j) + e * self.amplitude(i, k) * self.amplitude(j, k).conj();
                    out.set(i, j, v);
                }
            }
        }
        out
    }
}

/// Diagonalizes a Hermitian matrix by cyclic Jacobi rotations.
///
/// The eigenvectors are a product of exact unitaries, so their Gram matrix
/// is the identity to machine precision regardless of eigenvalue clustering.
pub fn spectral_decompose(h: &ComplexMatrix) -> Result<SpectralDecomposition> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch {
            expected: h.rows(),
            got: h.cols(),
        });
    }
    let defect = h.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NonHermitian { defect });
    }

    let d = h.rows();
    let mut a = h.clone();
    // Symmetrize exactly so roundoff in the input cannot leak into the sweep.
    for i in 0..d {
        a.set(i, i, C64::new(a.get(i, i).re, 0.0));
        for j in (i + 1)..d {
            let avg = 0.5 * (a.get(i, j) + a.get(j, i).conj());
            a.set(i, j, avg);
            a.set(j, i, avg.conj());
        }
    }
    let mut v = ComplexMatrix::identity(d);
    let scale = h.max_abs();
    let threshold = JACOBI_OFF_TOL * scale.max(f64::MIN_POSITIVE);

    let mut converged = d < 2 || scale == 0.0;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut off = 0.0f64;
        for p in 0..d {
            for q in (p + 1)..d {
                off = off.max(abs_c(a.get(p, q)));
            }
        }
        if off <= threshold {
            converged = true;
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                jacobi_rotate(&mut a, &mut v, p, q, threshold);
            }
        }
    }
    if !converged {
        // One final check: the quadratic tail of the sweep may have landed
        // exactly on the threshold after the last rotation.
        let mut off = 0.0f64;
        for p in 0..d {
            for q in (p + 1)..d {
                off = off.max(abs_c(a.get(p, q)));
            }
        }
        if off > threshold {
            return Err(Error::NoConvergence);
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    let diag: Vec<f64> = (0..d).map(|i| a.get(i, i).re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).expect("finite eigenvalues"));

    let eigenvalues: Vec<f64> = order.iter().map(|&k| diag[k]).collect();
    let mut vectors = ComplexMatrix::zeros(d, d);
    for (new_k, &old_k) in order.iter().enumerate() {
        for i in 0..d {
            vectors.set(i, new_k, v.get(i, old_k));
        }
    }

    Ok(SpectralDecomposition {
        eigenvalues,
        vectors,
    })
}

/// One Jacobi rotation zeroing `a[p][q]`, accumulated into `v`.
fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, skip: f64) {
    let apq = a.get(p, q);
    let r = abs_c(apq);
    if r <= skip {
        return;
    }
    let phase = apq / r; // e^{i alpha}
    let app = a.get(p, p).re;
    let aqq = a.get(q, q).re;

    // Zeroing A'[p][q] needs r(1 - t^2) + t(aqq - app) = 0; take the stable
    // small-magnitude root t = -sign(zeta) / (|zeta| + sqrt(1 + zeta^2)).
    let zeta = (aqq - app) / (2.0 * r);
    let t = if zeta >= 0.0 {
        -1.0 / (zeta + libm::sqrt(1.0 + zeta * zeta))
    } else {
        1.0 / (-zeta + libm::sqrt(1.0 + zeta * zeta))
    };
    let c = 1.0 / libm::sqrt(1.0 + t * t);
    let s = t * c;

    let d = a.rows();
    // Columns p and q of A (rows follow by Hermitian mirroring).
    for k in 0..d {
        if k == p || k == q {
            continue;
        }
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        let new_kp = c * akp + s * phase.conj() * akq;
        let new_kq = -s * phase * akp + c * akq;
        a.set(k, p, new_kp);
        a.set(p, k, new_kp.conj());
        a.set(k, q, new_kq);
        a.set(q, k, new_kq.conj());
    }
    let new_pp = app * c * c + 2.0 * r * s * c + aqq * s * s;
    let new_qq = app * s * s - 2.0 * r * s * c + aqq * c * c;
    a.set(p, p, C64::new(new_pp, 0.0));
    a.set(q, q, C64::new(new_qq, 0.0));
    a.set(p, q, C64::new(0.0, 0.0));
    a.set(q, p, C64::new(0.0, 0.0));

    for k in 0..v.rows() {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, c * vkp + s * phase.conj() * vkq);
        v.set(k, q, -s * phase * vkp + c * vkq);
    }
}

/// Evolution operator `K(t) = sum_k e^{-i E_k t} v_k v_k^dag`.
pub fn evolution_operator(decomp: &SpectralDecomposition, t: f64) -> ComplexMatrix {
    let d = decomp.dim();
    let phases: Vec<C64> = decomp
        .eigenvalues()
        .iter()
        .map(|&e| {
            let x = -e * t;
            C64::new(libm::cos(x), libm::sin(x))
        })
        .collect();
    let mut out = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..d {
                acc += phases[k] * decomp.amplitude(i, k) * decomp.amplitude(j, k).conj();
            }
            out.set(i, j, acc);
        }
    }
    out
}
