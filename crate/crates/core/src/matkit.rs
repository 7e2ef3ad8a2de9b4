//! Dense complex linear algebra kernel shared by all other modules:
//! Hermitian eigendecompositions, rank decisions, PSD tests, generalized
//! inverses, linear solves with residual control and the structured
//! Sylvester/Lyapunov solver used to assemble Pick matrices.

use nalgebra::{Complex, DMatrix, DVector};
use thiserror::Error;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Complex scalar from real and imaginary parts.
#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Complex scalar from a real.
#[inline]
pub fn cr(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Absolute/relative tolerance pair. `abs` guards near-zero scales,
/// `rel` is measured against the natural scale of the operands.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Result<Self, MatKitError> {
        if abs.is_nan() || rel.is_nan() || abs < 0.0 || rel < 0.0 || (abs == 0.0 && rel == 0.0) {
            return Err(MatKitError::BadTolerance { abs, rel });
        }
        Ok(Self { abs, rel })
    }

    /// Threshold for residuals measured against `scale`.
    #[inline]
    pub fn threshold(&self, scale: f64) -> f64 {
        self.abs + self.rel * scale
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-12,
            rel: 1e-9,
        }
    }
}

#[derive(Debug, Error)]
pub enum MatKitError {
    #[error("matrix is not Hermitian (symmetry residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,
    #[error("matrix is singular to working precision (condition estimate {cond_estimate:.3e})")]
    Singular { cond_estimate: f64 },
    #[error("spectra of B2 and B2* intersect; Lyapunov equation has no unique solution")]
    ResonantSpectrum,
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("invalid tolerance abs={abs}, rel={rel}")]
    BadTolerance { abs: f64, rel: f64 },
}

/// True when every entry is finite.
pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn ensure_finite(m: &CMat) -> Result<(), MatKitError> {
    if is_finite(m) {
        Ok(())
    } else {
        Err(MatKitError::NonFinite)
    }
}

/// Frobenius norm.
#[inline]
pub fn fnorm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entry magnitude.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// (M + M*)/2.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// ‖M − M*‖ in the Frobenius norm.
pub fn hermitian_residual(m: &CMat) -> f64 {
    fnorm(&(m - m.adjoint()))
}

fn ensure_hermitian(m: &CMat) -> Result<(), MatKitError> {
    if !m.is_square() {
        return Err(MatKitError::ShapeMismatch {
            expected: "square matrix".into(),
            got: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    let res = hermitian_residual(m);
    let scale = fnorm(m).max(1.0);
    if res > 1e-8 * scale {
        return Err(MatKitError::NotHermitian { residual: res });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix. Returns eigenvalues in
/// ascending order and a unitary matrix of eigenvectors (as columns),
/// so that `M = U diag(w) U*`.
pub fn herm_eig(m: &CMat) -> Result<(DVector<f64>, CMat), MatKitError> {
    ensure_finite(m)?;
    ensure_hermitian(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok((DVector::zeros(0), CMat::zeros(0, 0)));
    }
    let se = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let w = DVector::from_iterator(n, order.iter().map(|&k| se.eigenvalues[k]));
    let mut u = CMat::zeros(n, n);
    for (j, &k) in order.iter().enumerate() {
        u.set_column(j, &se.eigenvectors.column(k));
    }
    Ok((w, u))
}

/// PSD test with one-sided tolerance. Returns the verdict together with the
/// smallest eigenvalue so callers can apply their own margins.
pub fn psd_check(m: &CMat, tol: Tolerance) -> Result<(bool, f64), MatKitError> {
    let (w, _) = herm_eig(m)?;
    let min_eig = if w.is_empty() { 0.0 } else { w[0] };
    let is_psd = min_eig >= -tol.threshold(fnorm(m));
    Ok((is_psd, min_eig))
}

/// Number of singular values above `tol.rel` times the largest one.
pub fn numeric_rank(m: &CMat, tol: Tolerance) -> Result<usize, MatKitError> {
    ensure_finite(m)?;
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0);
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > tol.rel * smax).count())
}

/// Solve `A X = B` for square `A` by LU with a residual check.
pub fn solve_linear(a: &CMat, b: &CMat) -> Result<CMat, MatKitError> {
    ensure_finite(a)?;
    ensure_finite(b)?;
    if !a.is_square() || a.nrows() != b.nrows() {
        return Err(MatKitError::ShapeMismatch {
            expected: format!("square A with {} rhs rows", a.nrows()),
            got: format!("A {}x{}, B {}x{}", a.nrows(), a.ncols(), b.nrows(), b.ncols()),
        });
    }
    if a.nrows() == 0 {
        return Ok(CMat::zeros(0, b.ncols()));
    }
    let lu = a.clone().lu();
    let x = match lu.solve(b) {
        Some(x) => x,
        None => return Err(MatKitError::Singular { cond_estimate: cond_estimate(a) }),
    };
    let resid = fnorm(&(a * &x - b));
    let scale = fnorm(a) * fnorm(&x) + fnorm(b);
    if !resid.is_finite() || resid > 1e-10 * scale.max(1.0) {
        return Err(MatKitError::Singular { cond_estimate: cond_estimate(a) });
    }
    Ok(x)
}

/// Ratio of extreme singular values; `inf` when numerically singular.
pub fn cond_estimate(a: &CMat) -> f64 {
    if a.nrows() == 0 {
        return 1.0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.iter().fold(0.0f64, |x, &y| x.max(y));
    let smin = sv.iter().fold(f64::INFINITY, |x, &y| x.min(y));
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Kronecker product.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let scaled = b.scale(1.0) * a[(i, j)];
            out.view_mut((i * br, j * bc), (br, bc)).copy_from(&scaled);
        }
    }
    out
}

/// Unique Hermitian solution `P` of the Sylvester-type Lyapunov equation
///
/// ```text
/// P B2 - B2* P = C2* C1 - C1* C2
/// ```
///
/// which for diagonal `B2 = diag(lambda_j)` reproduces the Pick matrix
/// entrywise. Requires the spectra of `B2` and `B2*` to be disjoint.
pub fn solve_lyapunov_pick(b2: &CMat, c1: &CMat, c2: &CMat) -> Result<CMat, MatKitError> {
    ensure_finite(b2)?;
    ensure_finite(c1)?;
    ensure_finite(c2)?;
    let n = b2.nrows();
    if !b2.is_square() || c1.ncols() != n || c2.ncols() != n {
        return Err(MatKitError::ShapeMismatch {
            expected: format!("B2 {n}x{n}, C1/C2 with {n} columns"),
            got: format!(
                "B2 {}x{}, C1 {}x{}, C2 {}x{}",
                b2.nrows(),
                b2.ncols(),
                c1.nrows(),
                c1.ncols(),
                c2.nrows(),
                c2.ncols()
            ),
        });
    }
    let q = c2.adjoint() * c1 - c1.adjoint() * c2;
    if n == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    // vec(P B2) = (B2^T (x) I) vec P,  vec(B2* P) = (I (x) B2*) vec P
    let eye = CMat::identity(n, n);
    let m = kron(&b2.transpose(), &eye) - kron(&eye, &b2.adjoint());
    let rhs = CMat::from_iterator(n * n, 1, q.iter().cloned());
    let x = match m.clone().lu().solve(&rhs) {
        Some(x) => x,
        None => return Err(MatKitError::ResonantSpectrum),
    };
    let p = CMat::from_iterator(n, n, x.iter().cloned());
    let scale = (fnorm(&p) * fnorm(b2) + fnorm(&q)).max(1.0);
    let resid = fnorm(&(&p * b2 - b2.adjoint() * &p - &q));
    if !resid.is_finite() || resid > 1e-10 * scale {
        return Err(MatKitError::ResonantSpectrum);
    }
    Ok(hermitian_part(&p))
}

/// Moore-Penrose pseudoinverse through the SVD with a relative
/// singular-value cutoff.
pub fn moore_penrose(m: &CMat, tol: Tolerance) -> Result<CMat, MatKitError> {
    ensure_finite(m)?;
    let (r, c_) = m.shape();
    if r == 0 || c_ == 0 {
        return Ok(CMat::zeros(c_, r));
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd with u");
    let vt = svd.v_t.expect("svd with v_t");
    let sv = &svd.singular_values;
    let smax = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    let cut = tol.abs + tol.rel * smax;
    let k = sv.len();
    let mut sinv = CMat::zeros(k, k);
    for i in 0..k {
        if sv[i] > cut {
            sinv[(i, i)] = cr(1.0 / sv[i]);
        }
    }
    Ok(vt.adjoint() * sinv * u.adjoint())
}

/// Deterministic phase fix: scales every column so its entry of largest
/// magnitude (smallest index on ties) is real and positive.
pub fn phase_fix_columns(m: &mut CMat) {
    for j in 0..m.ncols() {
        let col = m.column(j);
        let mut best = 0usize;
        let mut best_abs = -1.0f64;
        for (i, z) in col.iter().enumerate() {
            let a = z.norm();
            if a > best_abs + 1e-15 * best_abs.abs().max(1.0) {
                best = i;
                best_abs = a;
            }
        }
        if best_abs > 0.0 {
            let phase = col[best] / col[best].norm();
            let scaled = m.column(j) * phase.conj();
            m.set_column(j, &scaled);
        }
    }
}

/// Orthonormal basis of the column span (SVD-based), with deterministic
/// column phases. Returns an `n x rank` matrix.
pub fn column_space_basis(m: &CMat, tol: Tolerance) -> CMat {
    let n = m.nrows();
    if n == 0 || m.ncols() == 0 {
        return CMat::zeros(n, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd with u");
    let sv = &svd.singular_values;
    let smax = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    let rank = if smax == 0.0 {
        0
    } else {
        sv.iter().filter(|&&s| s > tol.rel * smax).count()
    };
    let mut basis = CMat::zeros(n, rank);
    for j in 0..rank {
        basis.set_column(j, &u.column(j));
    }
    phase_fix_columns(&mut basis);
    basis
}

/// Orthonormal basis of the null space of `m` (right singular vectors with
/// negligible singular values), deterministic phases. Returns `ncols x nullity`.
pub fn null_space_basis(m: &CMat, tol: Tolerance) -> CMat {
    let c_ = m.ncols();
    if c_ == 0 {
        return CMat::zeros(0, 0);
    }
    if m.nrows() == 0 {
        let mut id = CMat::identity(c_, c_);
        phase_fix_columns(&mut id);
        return id;
    }
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("svd with v_t");
    let sv = &svd.singular_values;
    let smax = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut keep: Vec<usize> = Vec::new();
    for i in 0..vt.nrows() {
        let s = if i < sv.len() { sv[i] } else { 0.0 };
        if smax == 0.0 || s <= tol.rel * smax {
            keep.push(i);
        }
    }
    // v_t has min(r,c) rows; the remaining rows of a full V would also be
    // null vectors. Complete with a projector-based completion when needed.
    let mut vecs: Vec<CVec> = keep
        .iter()
        .map(|&i| CVec::from_iterator(c_, vt.row(i).iter().map(|z| z.conj())))
        .collect();
    let expected = c_ - numeric_rank(m, tol).unwrap_or(0);
    if vecs.len() < expected {
        // complete via orthogonal complement of the row space
        let v = vt.adjoint(); // c x min(r,c)
        let proj = &v * v.adjoint();
        let id = CMat::identity(c_, c_);
        let compl = &id - proj;
        let extra = column_space_basis(&compl, tol);
        for j in 0..extra.ncols() {
            vecs.push(extra.column(j).into_owned());
            if vecs.len() == expected {
                break;
            }
        }
    }
    let mut out = CMat::zeros(c_, vecs.len());
    for (j, v) in vecs.iter().enumerate() {
        out.set_column(j, v);
    }
    phase_fix_columns(&mut out);
    out
}
