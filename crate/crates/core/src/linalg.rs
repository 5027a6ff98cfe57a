//! Dense linear-algebra kernels shared by the solvers and diagnostics:
//! matrix exponentials, spectral quantities, weighted operator norms,
//! Gauss-Legendre quadrature nodes, and the small interpolation rules used
//! when a delayed signal must be read between aligned samples.

use nalgebra::linalg::{Schur, SymmetricEigen};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{real, real_of, Scalar};

/// Matrix exponential of a dense square matrix.
///
/// Thin wrapper over `nalgebra`'s scaling-and-squaring Padé implementation so
/// call sites stay decoupled from the backend.
#[must_use]
pub fn expm<T: Scalar>(a: &DMatrix<T>) -> DMatrix<T> {
    a.exp()
}

/// Largest real part over the spectrum of `a`.
///
/// Uses the real Schur form; errors if the matrix is empty, non-square, or
/// the QR iteration fails to converge.
pub fn spectral_abscissa<T: Scalar>(a: &DMatrix<T>) -> Result<T> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::domain("spectral_abscissa needs a nonempty square matrix"));
    }
    let schur = Schur::try_new(a.clone(), T::default_epsilon() * real(64.0), 100_000)
        .ok_or_else(|| Error::linalg("Schur iteration did not converge"))?;
    let eig = schur.complex_eigenvalues();
    let mut worst = eig[0].re;
    for z in eig.iter().skip(1) {
        if z.re > worst {
            worst = z.re;
        }
    }
    Ok(worst)
}

/// Largest singular value (Euclidean operator norm).
pub fn op_norm<T: Scalar>(m: &DMatrix<T>) -> T {
    if m.nrows() == 0 || m.ncols() == 0 {
        return T::zero();
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Symmetric square root and inverse square root of an SPD Gram matrix.
///
/// With `G = R^T R`, the norm `sqrt(x^T G x)` equals `|R x|`, so operator
/// norms in the weighted geometry are ordinary 2-norms of `R M R^{-1}`.
#[derive(Debug, Clone)]
pub struct GramFactor<T: Scalar> {
    pub sqrt: DMatrix<T>,
    pub inv_sqrt: DMatrix<T>,
}

impl<T: Scalar> GramFactor<T> {
    /// Factor an SPD matrix; errors on asymmetry or nonpositive eigenvalues.
    pub fn new(gram: &DMatrix<T>) -> Result<Self> {
        let n = gram.nrows();
        if n == 0 || gram.ncols() != n {
            return Err(Error::domain("Gram matrix must be square and nonempty"));
        }
        let scale = gram.amax();
        let tol = scale * T::default_epsilon() * real_of::<T>(n) * real(16.0);
        for i in 0..n {
            for j in (i + 1)..n {
                if (gram[(i, j)] - gram[(j, i)]).abs() > tol {
                    return Err(Error::domain("Gram matrix must be symmetric"));
                }
            }
        }
        let eig = SymmetricEigen::new(gram.clone());
        let mut d_sqrt = DVector::<T>::zeros(n);
        let mut d_inv = DVector::<T>::zeros(n);
        for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda <= T::zero() {
                return Err(Error::domain("Gram matrix must be positive definite"));
            }
            d_sqrt[i] = lambda.sqrt();
            d_inv[i] = T::one() / d_sqrt[i];
        }
        let q = &eig.eigenvectors;
        let sqrt = q * DMatrix::from_diagonal(&d_sqrt) * q.transpose();
        let inv_sqrt = q * DMatrix::from_diagonal(&d_inv) * q.transpose();
        Ok(GramFactor { sqrt, inv_sqrt })
    }

    /// Norm of a vector in the weighted geometry.
    pub fn norm(&self, v: &DVector<T>) -> T {
        (&self.sqrt * v).norm()
    }
}

/// Operator norm of `m` as a map between weighted spaces.
///
/// `out_factor` and `in_factor` are `None` for Euclidean geometry on that
/// side; otherwise the weighted norm is `sigma_max(R_out m R_in^{-1})`.
pub fn weighted_op_norm<T: Scalar>(
    m: &DMatrix<T>,
    out_factor: Option<&GramFactor<T>>,
    in_factor: Option<&GramFactor<T>>,
) -> T {
    let mut work = m.clone();
    if let Some(f) = out_factor {
        work = &f.sqrt * work;
    }
    if let Some(f) = in_factor {
        work *= &f.inv_sqrt;
    }
    op_norm(&work)
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
///
/// Nodes come from Newton iteration on the Legendre recurrence, computed in
/// `f64` and converted, which is far below the discretization error of any
/// consumer here. `q` must be at least 1.
pub fn gauss_legendre_01<T: Scalar>(q: usize) -> Result<(Vec<T>, Vec<T>)> {
    if q == 0 {
        return Err(Error::domain("quadrature needs at least one node"));
    }
    let mut nodes = vec![T::zero(); q];
    let mut weights = vec![T::zero(); q];
    for i in 0..q {
        // Standard initial guess for the i-th root of P_q on [-1, 1].
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        for _ in 0..64 {
            let (p, dp) = legendre_with_derivative(q, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(q, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map from [-1, 1] to [0, 1]; reverse order so nodes ascend.
        nodes[q - 1 - i] = real((1.0 + x) / 2.0);
        weights[q - 1 - i] = real(w / 2.0);
    }
    Ok((nodes, weights))
}

fn legendre_with_derivative(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if q == 0 {
        return (1.0, 0.0);
    }
    for n in 1..q {
        let pn = ((2 * n + 1) as f64 * x * p1 - n as f64 * p0) / (n as f64 + 1.0);
        p0 = p1;
        p1 = pn;
    }
    let dp = (q as f64) * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Lagrange weights of the cubic through four equally spaced samples at
/// integer offsets `0..4`, evaluated at fractional position `x` in `[0, 3]`.
pub fn lagrange_cubic_weights<T: Scalar>(x: T) -> [T; 4] {
    let mut w = [T::zero(); 4];
    for (i, wi) in w.iter_mut().enumerate() {
        let xi = real_of::<T>(i);
        let mut prod = T::one();
        for j in 0..4 {
            if j != i {
                let xj = real_of::<T>(j);
                prod *= (x - xj) / (xi - xj);
            }
        }
        *wi = prod;
    }
    w
}

/// Reads a uniformly sampled vector signal at fractional index `pos`,
/// using the cubic through the four nearest samples. The stencil is clamped
/// at both ends of the buffer, so `pos` may sit anywhere in
/// `[0, len - 1]`.
pub fn read_fractional<T: Scalar>(samples: &[DVector<T>], pos: T) -> DVector<T> {
    let len = samples.len();
    debug_assert!(len >= 1);
    if len == 1 {
        return samples[0].clone();
    }
    if len < 4 {
        // Too short for a cubic: fall back to linear between neighbors.
        let lo = pos.floor().to_usize().unwrap_or(0).min(len - 2);
        let frac = pos - real_of::<T>(lo);
        return &samples[lo] * (T::one() - frac) + &samples[lo + 1] * frac;
    }
    let anchor = pos.floor().to_isize().unwrap_or(0);
    let base = anchor.saturating_sub(1).clamp(0, len as isize - 4) as usize;
    let x = pos - real_of::<T>(base);
    let w = lagrange_cubic_weights(x);
    let mut out = &samples[base] * w[0];
    for i in 1..4 {
        out += &samples[base + i] * w[i];
    }
    out
}

/// Largest singular value of a large dense matrix via power iteration on
/// `M^T M`, with a deterministic start vector. Intended for the tall
/// composition matrices in the admissibility estimates, where a full SVD
/// would dominate the runtime.
pub fn sigma_max_power<T: Scalar>(m: &DMatrix<T>, max_iter: usize, rel_tol: T) -> T {
    sigma_max_op(m.ncols(), |v| m * v, |w| m.transpose() * w, max_iter, rel_tol)
}

/// Largest singular value of a linear map given only as a pair of closures
/// for the map and its adjoint; same power iteration as [`sigma_max_power`]
/// without ever materializing the matrix. Used for the triangular
/// composition maps in the admissibility estimates, whose dense form would
/// not fit in memory at fine grids.
pub fn sigma_max_op<T: Scalar>(
    dim_in: usize,
    apply: impl Fn(&DVector<T>) -> DVector<T>,
    apply_t: impl Fn(&DVector<T>) -> DVector<T>,
    max_iter: usize,
    rel_tol: T,
) -> T {
    if dim_in == 0 {
        return T::zero();
    }
    let mut v = DVector::<T>::from_element(dim_in, T::one() / real_of::<T>(dim_in).sqrt());
    let mut sigma = T::zero();
    for _ in 0..max_iter {
        let w = apply(&v);
        let mut u = apply_t(&w);
        let norm = u.norm();
        if norm == T::zero() {
            return T::zero();
        }
        u /= norm;
        let sigma_new = norm.sqrt();
        let done = (sigma_new - sigma).abs() <= rel_tol * sigma_new;
        sigma = sigma_new;
        v = u;
        if done {
            break;
        }
    }
    sigma
}
