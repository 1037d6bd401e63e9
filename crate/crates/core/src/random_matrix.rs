//! Random channel matrices and the linear algebra built on them.
//!
//! A complex channel `H̄ ∈ ℂ^{M×N}` has i.i.d. circularly symmetric standard
//! complex Gaussian entries. Its widely linear (WL) counterpart stacks the
//! real part on top of the imaginary part, giving a `2M×N` real matrix with
//! i.i.d. `N(0, 0.5)` entries.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;

/// Dense complex matrix with at least one row and one column.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

/// Dense real matrix, typically the output of [`wl_transform`].
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix(DMatrix<f64>);

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension(format!("{rows}x{cols} matrix")));
    }
    Ok(())
}

impl ComplexMatrix {
    pub fn new(inner: DMatrix<Complex64>) -> Result<Self> {
        check_dims(inner.nrows(), inner.ncols())?;
        if inner.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Contract("non-finite matrix entry".into()));
        }
        Ok(Self(inner))
    }

    /// Build from `(re, im)` pairs in row-major order.
    pub fn from_row_pairs(rows: usize, cols: usize, pairs: &[(f64, f64)]) -> Result<Self> {
        check_dims(rows, cols)?;
        if pairs.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                pairs.len()
            )));
        }
        Self::new(DMatrix::from_row_iterator(
            rows,
            cols,
            pairs.iter().map(|&(re, im)| Complex64::new(re, im)),
        ))
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        check_dims(rows, cols)?;
        Ok(Self(DMatrix::zeros(rows, cols)))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }
}

impl RealMatrix {
    pub fn new(inner: DMatrix<f64>) -> Result<Self> {
        check_dims(inner.nrows(), inner.ncols())?;
        if inner.iter().any(|x| !x.is_finite()) {
            return Err(Error::Contract("non-finite matrix entry".into()));
        }
        Ok(Self(inner))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored column by column.
#[derive(Debug, Clone)]
pub struct OrderedEigenSystem {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl OrderedEigenSystem {
    /// `V Λ Vᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.eigenvectors
            * DMatrix::from_diagonal(&self.eigenvalues)
            * self.eigenvectors.transpose()
    }

    /// Eigenvector belonging to the smallest eigenvalue.
    pub fn smallest_eigenvector(&self) -> DVector<f64> {
        self.eigenvectors.column(0).into_owned()
    }
}

/// Draw an `m×n` channel with i.i.d. `CN(0, 1)` entries.
pub fn sample_channel<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<ComplexMatrix> {
    check_dims(m, n)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let inner = DMatrix::from_fn(m, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(s * re, s * im)
    });
    Ok(ComplexMatrix(inner))
}

/// Stack real parts over imaginary parts: `ℂ^{M×N} → ℝ^{2M×N}`.
pub fn wl_transform(x: &ComplexMatrix) -> RealMatrix {
    let m = x.rows();
    let inner = DMatrix::from_fn(2 * m, x.cols(), |i, j| {
        if i < m {
            x.0[(i, j)].re
        } else {
            x.0[(i - m, j)].im
        }
    });
    RealMatrix(inner)
}

/// Ascending eigendecomposition of a real symmetric matrix.
///
/// Within a degenerate eigenspace any orthonormal basis may be returned.
pub fn ordered_eig_sym(a: &DMatrix<f64>) -> Result<OrderedEigenSystem> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::Dimension(format!(
            "{}x{} is not square",
            n,
            a.ncols()
        )));
    }
    let scale = a.amax().max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::Contract(format!(
                    "matrix not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let eig = a.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| eig.eigenvalues[p].total_cmp(&eig.eigenvalues[q]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(OrderedEigenSystem {
        eigenvalues,
        eigenvectors,
    })
}

/// Ascending eigenvalues only.
pub fn ordered_eigenvalues_sym(a: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Uniform point on the real unit sphere in `ℝ^n`, generated as `α/‖α‖`
/// with `α` standard normal.
pub fn sample_haar_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<DVector<f64>> {
    if n == 0 {
        return Err(Error::Dimension("unit vector of dimension 0".into()));
    }
    loop {
        let v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 0.0 {
            return Ok(v / norm);
        }
    }
}

/// Uniform point on the complex unit sphere in `ℂ^n`.
pub fn sample_complex_haar_unit_vector<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
) -> Result<DVector<Complex64>> {
    if n == 0 {
        return Err(Error::Dimension("unit vector of dimension 0".into()));
    }
    loop {
        let v = DVector::from_fn(n, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let norm = v.norm();
        if norm > 0.0 {
            return Ok(v.unscale(norm));
        }
    }
}

/// `X Xᵀ` for `X ∈ ℝ^{n×m}` with i.i.d. standard normal entries.
pub fn sample_real_wishart<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> DMatrix<f64> {
    let x = DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    &x * x.transpose()
}

/// `2 HᵀH`, a real central Wishart matrix when `H` comes from
/// `wl_transform(sample_channel(..))`.
pub fn scaled_gram(h: &RealMatrix) -> DMatrix<f64> {
    (h.0.transpose() * &h.0) * 2.0
}
