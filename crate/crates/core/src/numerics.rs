//! Dense linear-algebra kernels shared by the statistical modules.
//!
//! The symmetric eigensolver is a cyclic Jacobi iteration: it is slower than
//! tridiagonal QR for large matrices but every matrix we decompose is at most
//! a few hundred rows, and Jacobi gives small eigenvalues to high relative
//! accuracy, which matters for the near-zero canonical correlations that the
//! factor-count test is built on.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default relative floor applied to eigenvalues before inversion.
pub const DEFAULT_FLOOR_REL: f64 = 1e-10;

/// Rank tolerance for least-squares designs, relative to the design norm.
pub const RANK_TOL_REL: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a symmetric matrix, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub eigenvalues: DVector<f64>,
    /// Column `j` is the unit eigenvector for `eigenvalues[j]`.
    pub eigenvectors: DMatrix<f64>,
}

impl SymEig {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(f(lambda)) V^T`.
    pub fn reconstruct_with<F: Fn(f64) -> f64>(&self, f: F) -> DMatrix<f64> {
        let n = self.dim();
        let mut scaled = self.eigenvectors.clone();
        for j in 0..n {
            let w = f(self.eigenvalues[j]);
            scaled.column_mut(j).scale_mut(w);
        }
        let out = &scaled * self.eigenvectors.transpose();
        symmetrize(&out)
    }
}

/// `(A + A^T) / 2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

fn check_finite(a: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteInput(what))
    }
}

/// Symmetric eigen-decomposition.
///
/// The input is symmetrized first. Eigenvalues come back descending and each
/// eigenvector is signed so that its entry of largest magnitude is
/// nonnegative (first such entry on ties).
pub fn sym_eig(a: &DMatrix<f64>) -> Result<SymEig> {
    if !a.is_square() {
        return Err(Error::InvalidArgument(format!(
            "sym_eig needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    check_finite(a, "sym_eig")?;
    let n = a.nrows();
    let sym = symmetrize(a);

    // Row-major working copy; the loops below index (i, j) heavily.
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = sym[(i, j)];
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let frob2: f64 = m.iter().map(|x| x * x).sum();
    let target = (f64::EPSILON * f64::EPSILON) * frob2;

    let mut converged = n <= 1;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * m[i * n + j] * m[i * n + j];
            }
        }
        if off <= target || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let g = m[k * n + p];
                    let h = m[k * n + q];
                    let kp = g - s * (h + g * tau);
                    let kq = h + s * (g - h * tau);
                    m[k * n + p] = kp;
                    m[p * n + k] = kp;
                    m[k * n + q] = kq;
                    m[q * n + k] = kq;
                }
                for k in 0..n {
                    let g = v[k * n + p];
                    let h = v[k * n + q];
                    v[k * n + p] = g - s * (h + g * tau);
                    v[k * n + q] = h + s * (g - h * tau);
                }
            }
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[j * n + j]
            .partial_cmp(&m[i * n + i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });

    let mut eigenvalues = DVector::zeros(n);
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues[dst] = m[src * n + src];
        let mut best = 0;
        let mut best_abs = -1.0;
        for k in 0..n {
            let x = v[k * n + src].abs();
            if x > best_abs {
                best_abs = x;
                best = k;
            }
        }
        let sign = if v[best * n + src] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..n {
            eigenvectors[(k, dst)] = sign * v[k * n + src];
        }
    }
    Ok(SymEig {
        eigenvalues,
        eigenvectors,
    })
}

/// `V diag(max(lambda, floor)^power) V^T` for a symmetric PSD matrix, with
/// `floor = floor_rel * lambda_max`.
pub fn spd_power(a: &DMatrix<f64>, floor_rel: f64, power: f64) -> Result<DMatrix<f64>> {
    let eig = sym_eig(a)?;
    spd_power_from_eig(&eig, floor_rel, power)
}

pub fn spd_power_from_eig(eig: &SymEig, floor_rel: f64, power: f64) -> Result<DMatrix<f64>> {
    if eig.dim() == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let lambda_max = eig.eigenvalues[0];
    if lambda_max.is_nan() || lambda_max <= 0.0 || !lambda_max.is_normal() {
        return Err(Error::AllEigenvaluesFloored { lambda_max });
    }
    let floor = floor_rel * lambda_max;
    Ok(eig.reconstruct_with(|l| l.max(floor).powf(power)))
}

/// Symmetric inverse square root with a relative eigenvalue floor.
pub fn inv_sqrt_spd(a: &DMatrix<f64>, floor_rel: f64) -> Result<DMatrix<f64>> {
    spd_power(a, floor_rel, -0.5)
}

/// Symmetric square root, floored the same way as [`inv_sqrt_spd`] so the
/// two are exact inverses of one another.
pub fn sqrt_spd(a: &DMatrix<f64>, floor_rel: f64) -> Result<DMatrix<f64>> {
    spd_power(a, floor_rel, 0.5)
}

/// Floored inverse of a symmetric PSD matrix.
pub fn inv_spd(a: &DMatrix<f64>, floor_rel: f64) -> Result<DMatrix<f64>> {
    spd_power(a, floor_rel, -1.0)
}

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coef: DVector<f64>,
    pub residuals: DVector<f64>,
    pub rss: f64,
}

/// Householder QR of a tall design, kept around so many responses can be
/// regressed on the same columns.
pub struct QrDesign {
    qr: nalgebra::linalg::QR<f64, nalgebra::Dyn, nalgebra::Dyn>,
    r: DMatrix<f64>,
    nrows: usize,
    ncols: usize,
}

impl QrDesign {
    pub fn new(x: &DMatrix<f64>) -> Result<Self> {
        check_finite(x, "qr_least_squares")?;
        let (nrows, ncols) = x.shape();
        if nrows < ncols {
            return Err(Error::RankDeficient {
                rank: nrows,
                cols: ncols,
                series: None,
            });
        }
        let qr = x.clone().qr();
        let r = qr.r();
        let tol = RANK_TOL_REL * x.norm();
        let rank = (0..ncols).filter(|&j| r[(j, j)].abs() > tol).count();
        if rank < ncols {
            return Err(Error::RankDeficient {
                rank,
                cols: ncols,
                series: None,
            });
        }
        Ok(Self { qr, r, nrows, ncols })
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// `Q^T y` over all `T` rows.
    pub fn rotate(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut z = y.clone();
        self.qr.q_tr_mul(&mut z);
        z
    }

    pub fn solve(&self, x: &DMatrix<f64>, y: &DVector<f64>) -> LeastSquares {
        let z = self.rotate(y);
        let head = z.rows(0, self.ncols).into_owned();
        let coef = self
            .r
            .solve_upper_triangular(&head)
            .expect("triangular factor has full rank");
        let residuals = y - x * &coef;
        let rss = residuals.norm_squared();
        LeastSquares { coef, residuals, rss }
    }

    /// Residual sums of squares for every leading-column prefix of the
    /// design: entry `j` is the RSS of regressing `y` on the first `j`
    /// columns. Monotone non-increasing by construction.
    pub fn prefix_rss(&self, y: &DVector<f64>) -> Vec<f64> {
        let z = self.rotate(y);
        let mut out = vec![0.0; self.ncols + 1];
        let mut acc: f64 = z.rows(self.ncols, self.nrows - self.ncols).norm_squared();
        out[self.ncols] = acc;
        for j in (0..self.ncols).rev() {
            acc += z[j] * z[j];
            out[j] = acc;
        }
        out
    }
}

/// Ordinary least squares through a Householder QR factorization.
pub fn qr_least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LeastSquares> {
    if x.nrows() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "design has {} rows but response has {}",
            x.nrows(),
            y.len()
        )));
    }
    check_finite(
        &DMatrix::from_column_slice(y.len(), 1, y.as_slice()),
        "qr_least_squares",
    )?;
    let design = QrDesign::new(x)?;
    Ok(design.solve(x, y))
}
