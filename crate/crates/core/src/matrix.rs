//! Dense complex matrices and the Hermitian factorizations the information
//! computations need.
//!
//! The channel matrices of the relay schemes are very sparse (two nonzeros per
//! column, one time slot per column), so their Gram matrices are banded. The
//! Gram builder accumulates only nonzero products and records the bandwidth it
//! saw; the Cholesky routines then stay inside that band. A dense input simply
//! yields a full band and the same code runs as an ordinary dense Cholesky.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        ComplexMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting wrong lengths and
    /// non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::DataLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn column(&self, col: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    /// Submatrix made of the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, cols.len());
        for r in 0..self.rows {
            for (k, &c) in cols.iter().enumerate() {
                out.set(r, k, self.get(r, c));
            }
        }
        out
    }

    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|z| **z != ZERO).count()
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Euclidean norm of one column.
    pub fn column_norm(&self, col: usize) -> f64 {
        (0..self.rows)
            .map(|r| self.get(r, col).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, " ")?;
            for c in 0..self.cols {
                let z = self.get(r, c);
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Hermitian positive-semidefinite Gram matrix of a channel matrix, taken on
/// its smaller side: `H Hᴴ` when `rows <= cols`, `Hᴴ H` otherwise.
///
/// `det(I + η H Hᴴ) = det(I + η Hᴴ H)`, so either side gives the same
/// log-determinant. The Gram does not depend on η, so one Gram serves a whole
/// SNR sweep.
#[derive(Clone, Debug)]
pub struct Gram {
    n: usize,
    band: usize,
    data: Vec<C64>,
}

impl Gram {
    pub fn of(h: &ComplexMatrix) -> Self {
        let (rows, cols) = h.shape();
        let mut acc = HermitianAccumulator::new(rows.min(cols));
        let mut nz: Vec<(usize, C64)> = Vec::with_capacity(rows.max(cols));
        if rows <= cols {
            // Σ_j h_j h_jᴴ over columns
            for c in 0..cols {
                nz.clear();
                nz.extend(
                    (0..rows)
                        .map(|r| (r, h.get(r, c)))
                        .filter(|(_, z)| *z != ZERO),
                );
                acc.add_outer(&nz, 1.0);
            }
        } else {
            // Σ_i conj(g_i) g_iᵀ over rows
            for r in 0..rows {
                nz.clear();
                nz.extend(
                    (0..cols)
                        .map(|c| (c, h.get(r, c).conj()))
                        .filter(|(_, z)| *z != ZERO),
                );
                acc.add_outer(&nz, 1.0);
            }
        }
        Gram {
            n: acc.n,
            band: acc.band,
            data: acc.data,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Largest `|i - j|` with a nonzero entry.
    pub fn bandwidth(&self) -> usize {
        self.band
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    /// Natural log of `det(I + η G)`.
    pub fn ln_det_shifted(&self, eta: f64, work: &mut Vec<C64>) -> Result<f64> {
        let n = self.n;
        work.clear();
        work.resize(n * n, ZERO);
        for i in 0..n {
            let lo = i.saturating_sub(self.band);
            for j in lo..=i {
                work[i * n + j] = self.data[i * n + j] * eta;
            }
            work[i * n + i] += ONE;
        }
        cholesky_band_in_place(work, n, self.band)
    }

    /// `log2 det(I + η G)` in bits, clamped at zero against rounding.
    pub fn mutual_information(&self, eta: f64, work: &mut Vec<C64>) -> Result<f64> {
        let ln_det = self.ln_det_shifted(eta, work)?;
        Ok((ln_det / std::f64::consts::LN_2).max(0.0))
    }
}

/// Dense Hermitian matrix built from scaled outer products `w · v vᴴ`, tracking the bandwidth of the touched entries.
#[derive(Clone, Debug)]
pub(crate) struct HermitianAccumulator {
    pub(crate) n: usize,
    pub(crate) band: usize,
    pub(crate) data: Vec<C64>,
}

impl HermitianAccumulator {
    pub(crate) fn new(n: usize) -> Self {
        HermitianAccumulator {
            n,
            band: 0,
            data: vec![ZERO; n * n],
        }
    }

    pub(crate) fn identity(n: usize) -> Self {
        let mut acc = Self::new(n);
        for i in 0..n {
            acc.data[i * n + i] = ONE;
        }
        acc
    }

    /// Back to the identity. Only the band can hold nonzero off-diagonals.
    pub(crate) fn reset_identity(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in i.saturating_sub(self.band)..(i + self.band + 1).min(n) {
                self.data[i * n + j] = ZERO;
            }
            self.data[i * n + i] = ONE;
        }
        self.band = 0;
    }

    /// Adds `weight · v vᴴ` where `v` is given by its nonzero entries.
    pub(crate) fn add_outer(&mut self, nz: &[(usize, C64)], weight: f64) {
        let n = self.n;
        for &(p, vp) in nz {
            let wp = vp * weight;
            for &(q, vq) in nz {
                self.data[p * n + q] += wp * vq.conj();
                self.band = self.band.max(p.abs_diff(q));
            }
        }
    }
}

/// In-place lower Cholesky factorization `A = L Lᴴ` of a Hermitian positive
/// definite matrix stored dense row-major, restricted to the given
/// bandwidth. Only the lower band is read. Returns `ln det A`.
pub(crate) fn cholesky_band_in_place(a: &mut [C64], n: usize, band: usize) -> Result<f64> {
    let mut ln_det = 0.0;
    for j in 0..n {
        let lo = j.saturating_sub(band);
        let mut d = a[j * n + j].re;
        for k in lo..j {
            d -= a[j * n + k].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let ljj = d.sqrt();
        a[j * n + j] = C64::new(ljj, 0.0);
        ln_det += 2.0 * ljj.ln();
        let hi = (j + band + 1).min(n);
        for i in j + 1..hi {
            let lo_i = i.saturating_sub(band);
            let mut s = a[i * n + j];
            for k in lo_i..j {
                s -= a[i * n + k] * a[j * n + k].conj();
            }
            a[i * n + j] = s / ljj;
        }
    }
    if !ln_det.is_finite() {
        return Err(Error::NonFinite("log-determinant"));
    }
    Ok(ln_det)
}

/// Solves `L y = b` in place for a banded lower factor from
/// [`cholesky_band_in_place`].
pub(crate) fn forward_subst_band(l: &[C64], n: usize, band: usize, b: &mut [C64]) {
    // leading zeros of b stay zero
    let first = b.iter().position(|z| *z != ZERO).unwrap_or(n);
    for i in first..n {
        let lo = i.saturating_sub(band);
        let mut s = b[i];
        for k in lo..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i].re;
    }
}
