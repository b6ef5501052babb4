//! Quadratic-form metrics, their subspace factorization, and projection onto
//! the epsilon-positive-definite cone.

pub mod admm;

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};

use crate::error::MetricError;

/// Absolute/relative tolerance used when checking symmetry of inputs.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Eigenvalues above `-PSD_TOL` are treated as zero when factorizing.
pub const PSD_TOL: f64 = 1e-10;

/// Symmetric matrix whose eigenvalues are all at least `epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonPdMatrix {
    entries: DMatrix<f64>,
    epsilon: f64,
}

impl EpsilonPdMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.entries
    }
}

fn check_square(a: &DMatrix<f64>) -> Result<usize, MetricError> {
    if a.nrows() != a.ncols() {
        return Err(MetricError::NotSquare(a.nrows(), a.ncols()));
    }
    Ok(a.nrows())
}

/// Largest absolute difference between `a` and its transpose.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows().min(a.ncols());
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

pub fn is_symmetric(a: &DMatrix<f64>) -> bool {
    a.nrows() == a.ncols() && asymmetry(a) <= SYMMETRY_TOL * a.amax().max(1.0)
}

fn require_symmetric(a: &DMatrix<f64>) -> Result<(), MetricError> {
    check_square(a)?;
    if !is_symmetric(a) {
        return Err(MetricError::NotSymmetric(asymmetry(a)));
    }
    Ok(())
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(a.clone()).eigenvalues.min()
}

pub fn min_eigenvalue2(a: &Matrix2<f64>) -> f64 {
    // Closed form for 2x2 symmetric matrices.
    let m = 0.5 * (a[(0, 0)] + a[(1, 1)]);
    let d = 0.5 * (a[(0, 0)] - a[(1, 1)]);
    let off = 0.5 * (a[(0, 1)] + a[(1, 0)]);
    m - d.hypot(off)
}

/// `V diag(max(lambda, floor)) V^T`, symmetrized against rounding.
fn clip_eigenvalues(a: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(a.clone());
    let clipped = eig.eigenvalues.map(|l| l.max(floor));
    let v = &eig.eigenvectors;
    let out = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    (&out + out.transpose()) * 0.5
}

/// Squared distance `(x1 - x2)^T A (x1 - x2)`.
pub fn metric(x1: &[f64], x2: &[f64], a: &DMatrix<f64>) -> Result<f64, MetricError> {
    let n = check_square(a)?;
    if x1.len() != x2.len() {
        return Err(MetricError::DimensionMismatch(x1.len(), x2.len()));
    }
    if x1.len() != n {
        return Err(MetricError::DimensionMismatch(x1.len(), n));
    }
    let diff = DVector::from_iterator(n, x1.iter().zip(x2).map(|(a, b)| a - b));
    Ok(diff.dot(&(a * &diff)))
}

/// Quadratic form `x^T A x` for two-dimensional outputs.
#[inline]
pub fn quad_form2(x: &nalgebra::Vector2<f64>, a: &Matrix2<f64>) -> f64 {
    x.dot(&(a * x))
}

/// Factor a PSD matrix as `A = B B^T` with `B = Psi Xi^(1/2)` from its
/// eigendecomposition. Columns of `B` span the metric subspace.
pub fn factorize(a: &DMatrix<f64>) -> Result<DMatrix<f64>, MetricError> {
    require_symmetric(a)?;
    let eig = SymmetricEigen::new(a.clone());
    let scale = a.amax().max(1.0);
    let lowest = eig.eigenvalues.min();
    if lowest < -PSD_TOL * scale {
        return Err(MetricError::NotPsd(lowest));
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

/// Euclidean projection onto the epsilon-positive-definite cone by clipping
/// eigenvalues at `eps`. Non-symmetric input is rejected.
pub fn project_epd(a: &DMatrix<f64>, eps: f64) -> Result<EpsilonPdMatrix, MetricError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(MetricError::BadEpsilon(eps));
    }
    require_symmetric(a)?;
    Ok(EpsilonPdMatrix { entries: clip_eigenvalues(a, eps), epsilon: eps })
}

/// Projection onto `{F : F - S is PSD}` for fixed symmetric `S`.
pub fn project_above(f: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<DMatrix<f64>, MetricError> {
    require_symmetric(f)?;
    require_symmetric(s)?;
    if f.shape() != s.shape() {
        return Err(MetricError::DimensionMismatch(f.nrows(), s.nrows()));
    }
    Ok(s + clip_eigenvalues(&(f - s), 0.0))
}

/// Maps each point to its coordinates `B^T x` in the metric subspace of `A`.
pub fn project_subspace(points: &[DVector<f64>], a: &DMatrix<f64>) -> Result<Vec<DVector<f64>>, MetricError> {
    let b = factorize(a)?;
    let bt = b.transpose();
    points
        .iter()
        .map(|p| {
            if p.len() != b.nrows() {
                Err(MetricError::DimensionMismatch(p.len(), b.nrows()))
            } else {
                Ok(&bt * p)
            }
        })
        .collect()
}

pub fn to_dmatrix(a: &Matrix2<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(2, 2, a.as_slice())
}

pub fn from_dmatrix(a: &DMatrix<f64>) -> Matrix2<f64> {
    Matrix2::from_column_slice(a.as_slice())
}

/// [`project_epd`] for 2x2 weight matrices.
pub fn project_epd2(a: &Matrix2<f64>, eps: f64) -> Result<Matrix2<f64>, MetricError> {
    project_epd(&to_dmatrix(a), eps).map(|m| from_dmatrix(m.entries()))
}

/// [`project_above`] for 2x2 weight matrices.
pub fn project_above2(f: &Matrix2<f64>, s: &Matrix2<f64>) -> Result<Matrix2<f64>, MetricError> {
    project_above(&to_dmatrix(f), &to_dmatrix(s)).map(|m| from_dmatrix(&m))
}
