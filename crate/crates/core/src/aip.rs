//! Core of the interpolation machinery: validated data sets, metric
//! adjoints, the boundary image of the degenerate part, the J-unitary
//! corrector, resolvent-matrix realizations and the linear-fractional
//! parametrization of solutions.
//!
//! A data set consists of matrices `B1, B2` on an `N`-dimensional
//! coefficient space, output maps `C1, C2` into a `d`-dimensional scale
//! space, and a Hermitian PSD Gram form `K` tied together by the structure
//! identity
//!
//! ```text
//! B1* K B2 - B2* K B1 = C2* C1 - C1* C2.
//! ```
//!
//! All solutions of the associated interpolation problem are swept by a
//! linear-fractional transform of a `2d x 2d` rational matrix function
//! `Theta(z)` over Nevanlinna parameter pairs; when the form `K` is
//! degenerate, `Theta` carries a J-unitary right factor `V` and the
//! parameter pairs are constrained on a `nu`-dimensional block.

use crate::matkit::{
    c, cond_estimate, cr, fnorm, herm_eig, is_finite, max_abs, numeric_rank, solve_linear, C64,
    CMat, CVec, MatKitError, Tolerance,
};
use crate::nevanlinna::{NevanlinnaError, NevanlinnaObject};
use crate::polyx::{det_small, fit_matpoly, MatPoly};
use crate::report::VerificationReport;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AipError {
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("shift point is not regular for the pencil B2 - mu B1")]
    ShiftNotRegular,
    #[error("Gram form K is singular; metric inverse unavailable")]
    SingularK,
    #[error("subspace is not J-neutral (residual {0:.3e})")]
    NotNeutral(f64),
    #[error("degenerate dimension nu={nu} exceeds scale dimension d={d}")]
    DimensionExceeded { nu: usize, d: usize },
    #[error("parameter is not admissible: {0}")]
    InadmissibleParameter(String),
    #[error("LFT denominator singular at {0}")]
    DenominatorSingular(C64),
    #[error("pole of the realization at {0}")]
    PoleAtPoint(C64),
    #[error("invalid data: {0}")]
    Invalid(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl From<MatKitError> for AipError {
    fn from(e: MatKitError) -> Self {
        AipError::Numeric(e.to_string())
    }
}

impl From<NevanlinnaError> for AipError {
    fn from(e: NevanlinnaError) -> Self {
        AipError::Numeric(e.to_string())
    }
}

type Result<T> = std::result::Result<T, AipError>;

/// The signature matrix `J = [[0, -iI], [iI, 0]]` of size `2d`.
pub fn j_matrix(d: usize) -> CMat {
    let mut j = CMat::zeros(2 * d, 2 * d);
    for k in 0..d {
        j[(k, d + k)] = c(0.0, -1.0);
        j[(d + k, k)] = c(0.0, 1.0);
    }
    j
}

/// How metric adjoints against the form `K` are computed: through `K^{-1}`
/// when `K` is invertible, or through a reflexive generalized inverse `X`
/// with `X K X = X`, `K X K = K` and `B1 ran X` contained in `ran X`.
#[derive(Clone, Debug)]
pub enum KAdjoint {
    RegularInverse,
    PseudoX { x: CMat },
}

/// Validated problem data. `ker_basis` spans the kernel of `K`,
/// `x0_basis` a complement invariant under `B1` and `B2`.
#[derive(Clone, Debug)]
pub struct AipDataSet {
    pub n: usize,
    pub d: usize,
    pub b1: CMat,
    pub b2: CMat,
    pub c1: CMat,
    pub c2: CMat,
    pub k: CMat,
    pub ker_basis: CMat,
    pub x0_basis: CMat,
    pub kadj: KAdjoint,
}

impl AipDataSet {
    /// Data set with nondegenerate `K`: the complement is the whole space.
    pub fn new_regular(b1: CMat, b2: CMat, c1: CMat, c2: CMat, k: CMat) -> Result<Self> {
        let n = b1.nrows();
        let d = c1.nrows();
        Self::new(
            b1,
            b2,
            c1,
            c2,
            k,
            CMat::zeros(n, 0),
            CMat::identity(n, n),
            KAdjoint::RegularInverse,
        )
        .map(|mut ds| {
            ds.n = n;
            ds.d = d;
            ds
        })
    }

    pub fn new(
        b1: CMat,
        b2: CMat,
        c1: CMat,
        c2: CMat,
        k: CMat,
        ker_basis: CMat,
        x0_basis: CMat,
        kadj: KAdjoint,
    ) -> Result<Self> {
        let n = b1.nrows();
        let d = c1.nrows();
        for (m, what, rows, cols) in [
            (&b1, "B1", n, n),
            (&b2, "B2", n, n),
            (&c1, "C1", d, n),
            (&c2, "C2", d, n),
            (&k, "K", n, n),
        ] {
            if m.shape() != (rows, cols) {
                return Err(AipError::Invalid(format!(
                    "{what} must be {rows}x{cols}, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if !is_finite(m) {
                return Err(AipError::Invalid(format!("{what} has non-finite entries")));
            }
        }
        if ker_basis.nrows() != n || x0_basis.nrows() != n {
            return Err(AipError::Invalid("basis row count must equal N".into()));
        }
        if ker_basis.ncols() + x0_basis.ncols() != n {
            return Err(AipError::Invalid(
                "kernel and complement dimensions must sum to N".into(),
            ));
        }
        if let KAdjoint::PseudoX { x } = &kadj {
            if x.shape() != (n, n) {
                return Err(AipError::Invalid("X must be NxN".into()));
            }
        }
        Ok(AipDataSet {
            n,
            d,
            b1,
            b2,
            c1,
            c2,
            k,
            ker_basis,
            x0_basis,
            kadj,
        })
    }

    pub fn rank(&self) -> usize {
        self.x0_basis.ncols()
    }

    pub fn nu0(&self) -> usize {
        self.ker_basis.ncols()
    }

    /// Coordinates of the skew projection onto the complement along the
    /// kernel, expressed in the `x0_basis` columns.
    pub fn project_x0_coords(&self, h: &CVec) -> Result<CVec> {
        let r = self.rank();
        if self.nu0() == 0 {
            // x0_basis is square invertible
            let hm = CMat::from_column_slice(self.n, 1, h.as_slice());
            let coords = solve_linear(&self.x0_basis, &hm)?;
            return Ok(coords.column(0).into_owned());
        }
        let mut full = CMat::zeros(self.n, self.n);
        full.view_mut((0, 0), (self.n, r)).copy_from(&self.x0_basis);
        full.view_mut((0, r), (self.n, self.nu0())).copy_from(&self.ker_basis);
        let hm = CMat::from_column_slice(self.n, 1, h.as_slice());
        let coords = solve_linear(&full, &hm)?;
        Ok(CVec::from_iterator(r, coords.column(0).iter().take(r).cloned()))
    }

    /// Compressed model on the invariant complement: restricted operators,
    /// the positive-definite compressed Gram form and the metric adjoints.
    pub fn compressed(&self) -> Result<CompressedModel> {
        let r = self.rank();
        let d = self.d;
        let x0 = &self.x0_basis;
        let gram = x0.adjoint() * x0;
        let restrict = |b: &CMat| -> Result<CMat> {
            // solve x0 * Bc = B x0 in the least-squares sense; exact when
            // the complement is invariant
            let rhs = x0.adjoint() * (b * x0);
            solve_linear(&gram, &rhs).map_err(AipError::from)
        };
        let b1c = restrict(&self.b1)?;
        let b2c = restrict(&self.b2)?;
        let c1c = &self.c1 * x0;
        let c2c = &self.c2 * x0;
        let kr = crate::matkit::hermitian_part(&(x0.adjoint() * &self.k * x0));
        let mut cstack = CMat::zeros(2 * d, r);
        cstack.view_mut((0, 0), (d, r)).copy_from(&c1c);
        cstack.view_mut((d, 0), (d, r)).copy_from(&c2c);
        // metric adjoints of C1, C2 in complement coordinates
        let cadj = solve_linear(&kr, &cstack.adjoint()).map_err(|_| AipError::SingularK)?;
        Ok(CompressedModel {
            r,
            d,
            b1c,
            b2c,
            c1c,
            c2c,
            kr,
            cstack,
            cadj,
        })
    }
}

/// Restriction of a data set to the invariant complement of `ker K`,
/// carrying the compressed Gram form (positive definite there).
#[derive(Clone, Debug)]
pub struct CompressedModel {
    pub r: usize,
    pub d: usize,
    pub b1c: CMat,
    pub b2c: CMat,
    pub c1c: CMat,
    pub c2c: CMat,
    pub kr: CMat,
    /// `[C1; C2]` stacked, `2d x r`.
    pub cstack: CMat,
    /// `Kr^{-1} [C1*, C2*]`, `r x 2d`: metric adjoints of `C1` (first `d`
    /// columns) and `C2` (last `d` columns).
    pub cadj: CMat,
}

impl CompressedModel {
    /// Metric adjoint of the restricted operator `B` (given in complement
    /// coordinates): `Kr^{-1} B* Kr`.
    pub fn metric_adjoint(&self, b: &CMat) -> Result<CMat> {
        solve_linear(&self.kr, &(b.adjoint() * &self.kr)).map_err(AipError::from)
    }

    pub fn c1_adj(&self) -> CMat {
        self.cadj.columns(0, self.d).into_owned()
    }

    pub fn c2_adj(&self) -> CMat {
        self.cadj.columns(self.d, self.d).into_owned()
    }
}

/// Metric adjoint `C^+` of an output map `C` (`d x N`): `K^{-1} C*` when the
/// form is invertible, `X C*` in the degenerate case.
pub fn k_adjoint(data: &AipDataSet, c_map: &CMat) -> Result<CMat> {
    if c_map.ncols() != data.n {
        return Err(AipError::Invalid("C must have N columns".into()));
    }
    match &data.kadj {
        KAdjoint::RegularInverse => {
            solve_linear(&data.k, &c_map.adjoint()).map_err(|_| AipError::SingularK)
        }
        KAdjoint::PseudoX { x } => Ok(x * c_map.adjoint()),
    }
}

/// Structure and consistency checks for a data set. All outcomes are report
/// entries; nothing is thrown.
pub fn validate_data(data: &AipDataSet, tol: Tolerance) -> VerificationReport {
    let mut rep = VerificationReport::new();
    let scale = (fnorm(&data.b1) * fnorm(&data.k) * fnorm(&data.b2))
        .max(fnorm(&data.c1) * fnorm(&data.c2))
        .max(1.0);

    // structure identity tying the form to the output maps
    let lhs = data.b1.adjoint() * &data.k * &data.b2 - data.b2.adjoint() * &data.k * &data.b1;
    let rhs = data.c2.adjoint() * &data.c1 - data.c1.adjoint() * &data.c2;
    rep.residual_check(
        "structure-identity",
        "form-output-compatibility",
        fnorm(&(lhs - rhs)),
        tol.threshold(scale),
    );

    // Gram form PSD
    match crate::matkit::psd_check(&data.k, tol) {
        Ok((_, min_eig)) => {
            rep.bound_check("gram-psd", "form-nonnegative", min_eig, -tol.threshold(fnorm(&data.k)));
        }
        Err(e) => {
            rep.flag_check("gram-psd", "form-nonnegative", false, &e.to_string());
        }
    }

    // splitting: complement + kernel spans everything, K kills the kernel
    let r = data.rank();
    let nu0 = data.nu0();
    if r + nu0 == data.n {
        let mut full = CMat::zeros(data.n, data.n);
        full.view_mut((0, 0), (data.n, r)).copy_from(&data.x0_basis);
        if nu0 > 0 {
            full.view_mut((0, r), (data.n, nu0)).copy_from(&data.ker_basis);
        }
        let rank = numeric_rank(&full, tol).unwrap_or(0);
        rep.flag_check(
            "splitting-direct-sum",
            "complement-plus-kernel",
            rank == data.n,
            &format!("rank {rank} of {}", data.n),
        );
    } else {
        rep.flag_check("splitting-direct-sum", "complement-plus-kernel", false, "dimension mismatch");
    }
    if nu0 > 0 {
        rep.residual_check(
            "kernel-annihilated",
            "form-kernel",
            fnorm(&(&data.k * &data.ker_basis)),
            tol.threshold(fnorm(&data.k)),
        );
    }

    // invariance of the complement under B1, B2
    let q = crate::matkit::column_space_basis(&data.x0_basis, tol);
    for (b, name) in [(&data.b1, "complement-invariant-b1"), (&data.b2, "complement-invariant-b2")] {
        let img = b * &data.x0_basis;
        let resid = fnorm(&(&img - &q * (q.adjoint() * &img)));
        rep.residual_check(name, "invariant-complement", resid, tol.threshold(fnorm(b).max(1.0)));
    }

    // sampled regularity of the pencil B2 - z B1: the uniqueness argument
    // needs regular points in both half-planes, not at any fixed point, so
    // isolated singular samples (a node hitting the grid) are tolerated
    for (name, samples) in [
        ("pencil-regular-upper", [c(0.0, 1.0), c(0.0, 2.0), c(0.7, 1.3)]),
        ("pencil-regular-lower", [c(0.0, -1.0), c(0.0, -2.0), c(0.7, -1.3)]),
    ] {
        let mut regular = 0usize;
        for &z in &samples {
            let pencil = &data.b2 - &data.b1 * z;
            let cond = cond_estimate(&pencil);
            if cond.is_finite() && cond < 1e13 {
                regular += 1;
            }
        }
        rep.flag_check(
            name,
            "pencil-regularity",
            regular > 0,
            &format!("{regular} of {} samples regular", samples.len()),
        );
    }

    // surjectivity of the second output map on the complement
    let c2x0 = &data.c2 * &data.x0_basis;
    let c2rank = numeric_rank(&c2x0, tol).unwrap_or(0);
    rep.flag_check(
        "scale-surjective",
        "function-form-available",
        c2rank == data.d,
        &format!("rank {} of {}", c2rank, data.d),
    );

    // generalized-inverse identities in the degenerate case
    if let KAdjoint::PseudoX { x } = &data.kadj {
        let sx = fnorm(x).max(1.0);
        let sk = fnorm(&data.k).max(1.0);
        rep.residual_check(
            "pseudo-reflexive",
            "generalized-inverse",
            fnorm(&(x * &data.k * x - x)),
            tol.threshold(sx * sx * sk),
        );
        rep.residual_check(
            "pseudo-inner",
            "generalized-inverse",
            fnorm(&(&data.k * x * &data.k - &data.k)),
            tol.threshold(sk * sk * sx),
        );
        let img = &data.b1 * x;
        let resid = fnorm(&(&img - &q * (q.adjoint() * &img)));
        rep.residual_check(
            "pseudo-range-invariant",
            "shift-invariance",
            resid,
            tol.threshold(fnorm(&data.b1).max(1.0) * sx),
        );
    }
    rep
}

/// Basis of the boundary image of the degenerate part: the span of
/// `(-C1 u, C2 u)` over kernel generators `u`, orthonormal with
/// deterministic phases. Its dimension `nu` drives the admissible-parameter
/// block structure.
#[derive(Clone, Debug)]
pub struct GammaSubspace {
    pub basis: CMat,
    pub d: usize,
}

impl GammaSubspace {
    pub fn nu(&self) -> usize {
        self.basis.ncols()
    }

    /// Residual of J-neutrality `basis* J basis`.
    pub fn neutrality_residual(&self) -> f64 {
        let j = j_matrix(self.d);
        fnorm(&(self.basis.adjoint() * j * &self.basis))
    }
}

pub fn gamma_of_kernel(data: &AipDataSet) -> GammaSubspace {
    let d = data.d;
    let nu0 = data.nu0();
    let mut stacked = CMat::zeros(2 * d, nu0);
    for j in 0..nu0 {
        let u = data.ker_basis.column(j);
        let top = -(&data.c1 * u);
        let bot = &data.c2 * u;
        for i in 0..d {
            stacked[(i, j)] = top[i];
            stacked[(d + i, j)] = bot[i];
        }
    }
    let basis = crate::matkit::column_space_basis(&stacked, Tolerance::default());
    GammaSubspace { basis, d }
}

/// Deterministic completion of the (sign-adjusted) boundary image to a
/// J-unitary matrix `V`: the image columns become the leading columns of
/// the second block, a dual neutral family fills the matching columns of
/// the first block, and the J-orthogonal complement is split into
/// hyperbolic pairs through the eigendecomposition of the compressed
/// signature matrix.
pub fn build_corrector_v(gamma: &GammaSubspace, d: usize) -> Result<CMat> {
    let nu = gamma.nu();
    if nu > d {
        return Err(AipError::DimensionExceeded { nu, d });
    }
    let j = j_matrix(d);
    if nu == 0 {
        return Ok(CMat::identity(2 * d, 2 * d));
    }
    let neut = gamma.neutrality_residual();
    if neut > 1e-10 * (1.0 + fnorm(&gamma.basis)) {
        return Err(AipError::NotNeutral(neut));
    }

    // sign adjustment: negate the first block of each basis vector
    let mut target = gamma.basis.clone();
    for col in 0..nu {
        for row in 0..d {
            target[(row, col)] = -target[(row, col)];
        }
    }
    let mut s = crate::matkit::column_space_basis(&target, Tolerance::default());
    if s.ncols() != nu {
        return Err(AipError::Numeric("boundary image lost rank".into()));
    }
    crate::matkit::phase_fix_columns(&mut s);

    // dual family t_k = i J s_k: pairs to -i delta and stays neutral
    let t = &j * &s * c(0.0, 1.0);

    let m = d - nu;
    let mut cols_q: Vec<CVec> = (0..nu).map(|k| t.column(k).into_owned()).collect();
    let mut cols_p: Vec<CVec> = (0..nu).map(|k| s.column(k).into_owned()).collect();

    if m > 0 {
        // J-orthogonal complement of span(s, t)
        let mut rows = CMat::zeros(2 * nu, 2 * d);
        for k in 0..nu {
            let js = (&j * s.column(k)).adjoint();
            let jt = (&j * t.column(k)).adjoint();
            rows.view_mut((k, 0), (1, 2 * d)).copy_from(&js);
            rows.view_mut((nu + k, 0), (1, 2 * d)).copy_from(&jt);
        }
        let ub = crate::matkit::null_space_basis(&rows, Tolerance::default());
        if ub.ncols() != 2 * m {
            return Err(AipError::Numeric(format!(
                "J-complement has dimension {}, expected {}",
                ub.ncols(),
                2 * m
            )));
        }
        let jc = crate::matkit::hermitian_part(&(ub.adjoint() * &j * &ub));
        let (w, u) = herm_eig(&jc)?;
        let mut pos: Vec<usize> = Vec::new();
        let mut negs: Vec<usize> = Vec::new();
        for (i, &wi) in w.iter().enumerate() {
            if wi > 0.0 {
                pos.push(i);
            } else {
                negs.push(i);
            }
        }
        if pos.len() != m || negs.len() != m {
            return Err(AipError::Numeric("signature split of J-complement failed".into()));
        }
        for i in 0..m {
            let f = (&ub * u.column(pos[i])) / cr(w[pos[i]].sqrt());
            let g = (&ub * u.column(negs[i])) / cr((-w[negs[i]]).sqrt());
            let a = (&f + &g) / cr(2.0_f64.sqrt());
            let b = (&f - &g) * c(0.0, -1.0) / cr(2.0_f64.sqrt());
            cols_q.push(a);
            cols_p.push(b);
        }
    }

    let mut v = CMat::zeros(2 * d, 2 * d);
    for (k, col) in cols_q.iter().enumerate() {
        v.set_column(k, col);
    }
    for (k, col) in cols_p.iter().enumerate() {
        v.set_column(d + k, col);
    }
    let resid = fnorm(&(v.adjoint() * &j * &v - &j));
    if resid > 1e-10 * (1.0 + fnorm(&v).powi(2)) {
        return Err(AipError::Numeric(format!("corrector is not J-unitary (residual {resid:.3e})")));
    }
    Ok(v)
}

/// Which realization formula a [`ThetaRealization`] carries.
#[derive(Clone, Debug, PartialEq)]
pub enum ThetaKind {
    /// `Theta(z) = (I - z C (I - z B1)^{-1} R) V`, nondegenerate form.
    Regular,
    /// Same formula with adjoints through the generalized inverse.
    Singular,
    /// Pencil form built at a real shift `mu`:
    /// `Theta(z) = (I + i(z - mu) C (B2 - z B1)^{-1} Radj) [[I,0],[mu,I]] V`.
    Shifted { mu: f64 },
}

/// Structured rational `2d x 2d` matrix function stored as realization
/// data; every evaluation is a fresh linear solve against the stored
/// matrices.
#[derive(Clone, Debug)]
pub struct ThetaRealization {
    pub d: usize,
    pub nu: usize,
    pub v: CMat,
    pub kind: ThetaKind,
    bcore: CMat,
    b2core: Option<CMat>,
    cstack: CMat,
    rcore: CMat,
}

impl ThetaRealization {
    pub fn state_dim(&self) -> usize {
        self.bcore.nrows()
    }

    /// The value `Theta` takes at its base point (0, or the shift `mu`).
    pub fn base_point(&self) -> C64 {
        match self.kind {
            ThetaKind::Shifted { mu } => cr(mu),
            _ => cr(0.0),
        }
    }

    pub fn base_value(&self) -> CMat {
        match self.kind {
            ThetaKind::Shifted { mu } => shift_factor(self.d, mu) * &self.v,
            _ => self.v.clone(),
        }
    }

    fn pencil_at(&self, z: C64) -> CMat {
        match &self.kind {
            ThetaKind::Shifted { .. } => {
                self.b2core.as_ref().expect("pencil present") - &self.bcore * z
            }
            _ => CMat::identity(self.state_dim(), self.state_dim()) - &self.bcore * z,
        }
    }

    /// Scalar denominator `det` of the pencil at `z`; `Theta` times this
    /// determinant is a matrix polynomial.
    pub fn den_at(&self, z: C64) -> C64 {
        det_small(&self.pencil_at(z))
    }

    pub fn den_degree_bound(&self) -> usize {
        self.state_dim()
    }

    pub fn eval(&self, z: C64) -> Result<CMat> {
        let two_d = 2 * self.d;
        let pencil = self.pencil_at(z);
        let y = solve_linear(&pencil, &self.rcore).map_err(|_| AipError::PoleAtPoint(z))?;
        let base = match &self.kind {
            ThetaKind::Shifted { mu } => {
                let factor = c(0.0, 1.0) * (z - cr(*mu));
                (CMat::identity(two_d, two_d) + &self.cstack * y * factor)
                    * shift_factor(self.d, *mu)
            }
            _ => CMat::identity(two_d, two_d) - &self.cstack * y * z,
        };
        Ok(base * &self.v)
    }

    /// `den(z) * Theta(z)`, finite wherever the solve succeeds; used for
    /// polynomial clearing.
    pub fn eval_cleared(&self, z: C64) -> Option<CMat> {
        let th = self.eval(z).ok()?;
        Some(th * self.den_at(z))
    }
}

fn shift_factor(d: usize, mu: f64) -> CMat {
    let mut f = CMat::identity(2 * d, 2 * d);
    for k in 0..d {
        f[(d + k, k)] = cr(mu);
    }
    f
}

/// Anything that acts like a resolvent matrix in the linear-fractional
/// parametrization: reports its scale dimension, the forced parameter block
/// size, and a polynomial-cleared evaluation `den(z) * Theta(z)` together
/// with a degree bound for `den`.
pub trait ThetaLike {
    fn scale_dim(&self) -> usize;
    fn forced_block(&self) -> usize;
    /// Degree bound of the matrix polynomial `den(z) * Theta(z)`.
    fn cleared_degree_bound(&self) -> usize;
    fn eval_cleared(&self, z: C64) -> Option<CMat>;
}

impl ThetaLike for ThetaRealization {
    fn scale_dim(&self) -> usize {
        self.d
    }
    fn forced_block(&self) -> usize {
        self.nu
    }
    fn cleared_degree_bound(&self) -> usize {
        self.state_dim()
    }
    fn eval_cleared(&self, z: C64) -> Option<CMat> {
        ThetaRealization::eval_cleared(self, z)
    }
}

/// Resolvent-matrix realization for data with `B2 = I`.
pub fn build_theta(data: &AipDataSet) -> Result<ThetaRealization> {
    let scale = fnorm(&data.b2).max(1.0);
    if fnorm(&(&data.b2 - CMat::identity(data.n, data.n))) > 1e-10 * scale {
        return Err(AipError::AssumptionViolated(
            "B2 must be the identity; use build_theta_shifted otherwise".into(),
        ));
    }
    let comp = data.compressed()?;
    let gamma = gamma_of_kernel(data);
    let nu = gamma.nu();
    let v = build_corrector_v(&gamma, data.d)?;
    // R = [C2_adj, -C1_adj]
    let mut rcore = CMat::zeros(comp.r, 2 * data.d);
    rcore.view_mut((0, 0), (comp.r, data.d)).copy_from(&comp.c2_adj());
    rcore
        .view_mut((0, data.d), (comp.r, data.d))
        .copy_from(&(-comp.c1_adj()));
    let kind = if data.nu0() == 0 { ThetaKind::Regular } else { ThetaKind::Singular };
    Ok(ThetaRealization {
        d: data.d,
        nu,
        v,
        kind,
        bcore: comp.b1c,
        b2core: None,
        cstack: comp.cstack,
        rcore,
    })
}

/// Pencil-form realization usable whenever `B2 - mu B1` is invertible for a
/// real shift `mu` (e.g. node-diagonal `B2` in tangential problems).
pub fn build_theta_shifted(data: &AipDataSet, mu: f64) -> Result<ThetaRealization> {
    let comp = data.compressed()?;
    let pencil = &comp.b2c - &comp.b1c * cr(mu);
    if !cond_estimate(&pencil).is_finite() || cond_estimate(&pencil) > 1e12 {
        return Err(AipError::ShiftNotRegular);
    }
    let gamma = gamma_of_kernel(data);
    let nu = gamma.nu();
    let v = build_corrector_v(&gamma, data.d)?;
    // Radj = Kr^{-1} (B2c - mu B1c)^{-*} [C1;C2]* J
    let j = j_matrix(data.d);
    let rhs = comp.cstack.adjoint() * &j;
    let t1 = solve_linear(&pencil.adjoint(), &rhs).map_err(|_| AipError::ShiftNotRegular)?;
    let radj = solve_linear(&comp.kr, &t1).map_err(|_| AipError::SingularK)?;
    Ok(ThetaRealization {
        d: data.d,
        nu,
        v,
        kind: ThetaKind::Shifted { mu },
        bcore: comp.b1c,
        b2core: Some(comp.b2c),
        cstack: comp.cstack,
        rcore: radj,
    })
}

/// Whether a parameter object respects the forced block structure: its
/// first `nu x nu` blocks must be `(q, p) = (0, I)` and the off blocks must
/// vanish; the trailing blocks form a free parameter of size `d - nu`.
pub fn admissible_parameter(param: &NevanlinnaObject, nu: usize) -> bool {
    if nu == 0 {
        return true;
    }
    let d = param.dim();
    if nu > d {
        return false;
    }
    let block_ok = |m: &CMat, ident: bool| -> bool {
        let scale = max_abs(m).max(1.0);
        for i in 0..d {
            for j in 0..d {
                if i < nu || j < nu {
                    let expect = if ident && i == j { cr(1.0) } else { cr(0.0) };
                    if (m[(i, j)] - expect).norm() > 1e-12 * scale {
                        return false;
                    }
                }
            }
        }
        true
    };
    match param {
        NevanlinnaObject::ConstantPair { q, p } => block_ok(q, false) && block_ok(p, true),
        NevanlinnaObject::AffineFunction { alpha, beta } => {
            block_ok(alpha, false) && block_ok(beta, false)
        }
        NevanlinnaObject::HerglotzOfMeasure { measure, alpha, beta } => {
            block_ok(alpha, false)
                && block_ok(beta, false)
                && measure.atoms.iter().all(|a| block_ok(&a.weight, false))
        }
        NevanlinnaObject::RationalQuotient { .. } => false,
    }
}

/// `[Psi_par; Phi_par]` stacked as a `2d x d` column function of the
/// parameter (the first block feeds the first block row of `Theta`).
fn param_columns(param: &NevanlinnaObject, z: C64) -> std::result::Result<CMat, NevanlinnaError> {
    let d = param.dim();
    let (phi, psi) = param.eval(z)?;
    let mut cols = CMat::zeros(2 * d, d);
    cols.view_mut((0, 0), (d, d)).copy_from(&psi);
    cols.view_mut((d, 0), (d, d)).copy_from(&phi);
    Ok(cols)
}

/// Scalar polynomial clearing the parameter's poles, with its degree.
fn param_clearing(param: &NevanlinnaObject) -> (Vec<C64>, usize) {
    match param {
        NevanlinnaObject::HerglotzOfMeasure { measure, .. } => {
            let mut poly = vec![cr(1.0)];
            for a in &measure.atoms {
                // multiply by (t_k - z)
                let mut next = vec![cr(0.0); poly.len() + 1];
                for (i, &co) in poly.iter().enumerate() {
                    next[i] += co * cr(a.t);
                    next[i + 1] -= co;
                }
                poly = next;
            }
            let deg = poly.len() - 1;
            (poly, deg)
        }
        _ => (vec![cr(1.0)], 0),
    }
}

/// Linear-fractional solve: applies `Theta` to an admissible parameter pair
/// and returns the solution as an unreduced rational quotient whose columns
/// are matrix polynomials (the representation stays exact at isolated poles
/// of `Theta` itself).
pub fn lft_solve<T: ThetaLike + ?Sized>(theta: &T, param: &NevanlinnaObject) -> Result<NevanlinnaObject> {
    if param.dim() != theta.scale_dim() {
        return Err(AipError::InadmissibleParameter(format!(
            "parameter dimension {} does not match scale dimension {}",
            param.dim(),
            theta.scale_dim()
        )));
    }
    if !admissible_parameter(param, theta.forced_block()) {
        return Err(AipError::InadmissibleParameter(format!(
            "parameter must carry the forced (0, I) block of size nu = {}",
            theta.forced_block()
        )));
    }
    let d = theta.scale_dim();
    let (denp, denp_deg) = param_clearing(param);
    let deg_bound = theta.cleared_degree_bound() + denp_deg + 1;
    let fitted = fit_matpoly(2 * d, d, deg_bound, |z| {
        let cleared = theta.eval_cleared(z)?;
        let cols = param_columns(param, z).ok()?;
        Some(cleared * cols * crate::polyx::eval_scalar(&denp, z))
    })
    .map_err(AipError::Numeric)?;

    let mut num_coeffs = Vec::with_capacity(fitted.coeffs.len());
    let mut den_coeffs = Vec::with_capacity(fitted.coeffs.len());
    for co in &fitted.coeffs {
        num_coeffs.push(co.rows(0, d).into_owned());
        den_coeffs.push(co.rows(d, d).into_owned());
    }
    let mut num = MatPoly { rows: d, cols: d, coeffs: num_coeffs };
    let mut den = MatPoly { rows: d, cols: d, coeffs: den_coeffs };
    num.trim();
    den.trim();

    // the normalizer Phi - z Psi must be invertible somewhere off the axis
    let probes = [c(0.21, 0.93), c(-0.4, 1.31), c(0.77, -1.13)];
    let ok = probes.iter().any(|&z| {
        let w = den.eval(z) - num.eval(z) * z;
        cond_estimate(&w).is_finite() && cond_estimate(&w) < 1e12
    });
    if !ok {
        return Err(AipError::DenominatorSingular(probes[0]));
    }
    Ok(NevanlinnaObject::rational_quotient(num, den))
}

/// Normalized solution values `(psi(z), phi(z))` with `phi - z psi = I`.
pub fn lft_normalized_at(sol: &NevanlinnaObject, z: C64) -> Result<(CMat, CMat)> {
    let (phi, psi) = crate::nevanlinna::normalized_at(sol, z).map_err(AipError::from)?;
    Ok((psi, phi))
}

/// Evaluation of the canonical interpolation map attached to a function
/// solution `m`: `F h (z) = [I, -m(z)] G(z) P h` with `G` the resolvent
/// column of the data and `P` the skew projection onto the complement.
/// Vanishes identically on the kernel of the form.
pub fn f_map(data: &AipDataSet, sol: &NevanlinnaObject, h: &CVec, z: C64) -> Result<CVec> {
    if h.len() != data.n {
        return Err(AipError::Invalid("h must have N entries".into()));
    }
    let m = sol.m_value(z).map_err(|_| AipError::PoleAtPoint(z))?;
    let comp = data.compressed()?;
    let hp = data.project_x0_coords(h)?;
    let hp_mat = CMat::from_column_slice(comp.r, 1, hp.as_slice());
    let ident = CMat::identity(comp.r, comp.r);
    let b2_is_id = fnorm(&(&data.b2 - CMat::identity(data.n, data.n))) <= 1e-10 * fnorm(&data.b2).max(1.0);
    let g = if b2_is_id {
        let pencil = &ident - &comp.b1c * z;
        let y = solve_linear(&pencil, &hp_mat).map_err(|_| AipError::PoleAtPoint(z))?;
        &comp.cstack * y
    } else {
        let pencil = &comp.b2c - &comp.b1c * z;
        let y = solve_linear(&pencil, &hp_mat).map_err(|_| AipError::PoleAtPoint(z))?;
        &comp.cstack * y
    };
    let c1part = g.rows(0, data.d).column(0).into_owned();
    let c2part = g.rows(data.d, data.d).column(0).into_owned();
    Ok(&c1part - &m * &c2part)
}

/// J-property diagnostics of a realization: the base value, exact
/// J-unitarity at real regular points, and nonnegativity of the Hermitian
/// quadratic kernel at non-real points.
pub fn theta_j_checks(theta: &ThetaRealization, grid: &[C64], tol: Tolerance) -> VerificationReport {
    let mut rep = VerificationReport::new();
    let j = j_matrix(theta.d);

    // corrector J-unitarity
    let vres = fnorm(&(theta.v.adjoint() * &j * &theta.v - &j));
    rep.residual_check(
        "corrector-j-unitary",
        "j-unitarity",
        vres,
        tol.threshold(fnorm(&theta.v).powi(2).max(1.0)),
    );

    // base value
    match theta.eval(theta.base_point()) {
        Ok(t0) => {
            rep.residual_check(
                "theta-base-value",
                "base-point-identity",
                fnorm(&(t0 - theta.base_value())),
                tol.threshold(fnorm(&theta.v).max(1.0)),
            );
        }
        Err(e) => {
            rep.flag_check("theta-base-value", "base-point-identity", false, &e.to_string());
        }
    }

    for &z in grid {
        let th = match theta.eval(z) {
            Ok(t) => t,
            Err(_) => {
                rep.flag_check(
                    &format!("j-kernel@{z}"),
                    "potapov-kernel",
                    true,
                    "skipped: pole of the realization",
                );
                continue;
            }
        };
        let q = &j - &th * &j * th.adjoint();
        let scale = fnorm(&th).powi(2).max(1.0);
        if z.im == 0.0 {
            rep.residual_check(
                &format!("j-unitary-real@{z}"),
                "real-axis-j-identity",
                fnorm(&q),
                tol.threshold(scale),
            );
        } else {
            let herm = crate::matkit::hermitian_part(&(q / cr(2.0 * z.im)));
            match herm_eig(&herm) {
                Ok((w, _)) => {
                    let min_eig = if w.is_empty() { 0.0 } else { w[0] };
                    rep.bound_check(
                        &format!("j-kernel@{z}"),
                        "potapov-kernel",
                        min_eig,
                        -tol.threshold(scale),
                    );
                }
                Err(e) => {
                    rep.flag_check(&format!("j-kernel@{z}"), "potapov-kernel", false, &e.to_string());
                }
            }
        }
    }
    rep
}
