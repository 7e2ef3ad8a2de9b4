//! Problem front-ends: translation of tangential interpolation data and
//! truncated matrix moment sequences into validated data sets, plus the
//! moment-specific machinery (Hankel solvability analysis, invariant
//! generalized inverses, orthogonal and adjacent polynomials, the series
//! form of the resolvent matrix, and measure extraction).

use crate::aip::{AipDataSet, AipError, KAdjoint, ThetaLike};
use crate::matkit::{
    c, cond_estimate, cr, fnorm, herm_eig, hermitian_part, hermitian_residual, moore_penrose,
    numeric_rank, solve_lyapunov_pick, C64, CMat, MatKitError, Tolerance,
};
use crate::nevanlinna::{
    default_grid, DiscreteMeasure, MeasureAtom, NevanlinnaError, NevanlinnaObject,
};
use crate::polyx::{det_poly, MatPoly};
use crate::report::VerificationReport;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("Hankel matrix is not PSD (min eig {min_eig:.3e})")]
    HankelNotPsd { min_eig: f64 },
    #[error("moment data admits no exact solution (range condition fails)")]
    ExactnessFailure,
    #[error("Hankel matrix singular; operation needs the nondegenerate case")]
    SingularHankel,
    #[error("no invariant coordinate support found: {0}")]
    NoInvariantSupport(String),
    #[error("Pick matrix is not PSD (min eig {min_eig:.3e})")]
    PickNotPsd { min_eig: f64 },
    #[error("symmetric nodes make the Lyapunov solution non-unique; supply the matrix explicitly")]
    ResonantSpectrum,
    #[error("denominator has a non-real pole at {0} with non-negligible residue")]
    NonRealPole(C64),
    #[error("residue at t={t} is not PSD (min eig {min_eig:.3e})")]
    ResidueNotPsd { t: f64, min_eig: f64 },
    #[error("function is not the transform of a discrete measure: {0}")]
    NotAMeasureTransform(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl From<MatKitError> for ProblemError {
    fn from(e: MatKitError) -> Self {
        ProblemError::Numeric(e.to_string())
    }
}

impl From<AipError> for ProblemError {
    fn from(e: AipError) -> Self {
        ProblemError::Numeric(e.to_string())
    }
}

impl From<NevanlinnaError> for ProblemError {
    fn from(e: NevanlinnaError) -> Self {
        ProblemError::Numeric(e.to_string())
    }
}

type Result<T> = std::result::Result<T, ProblemError>;

// ---------------------------------------------------------------------------
// tangential interpolation
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct TangentialNode {
    pub lambda: C64,
    pub multiplicity: usize,
}

/// Tangential interpolation data: at each node `lambda_j` (with chains for
/// multiplicities), the solution must satisfy `m(lambda_j) eta_j = xi_j`.
/// Columns of `xi`/`eta` follow the chain layout of the nodes.
#[derive(Clone, Debug)]
pub struct TangentialSpec {
    pub d: usize,
    pub nodes: Vec<TangentialNode>,
    pub xi: CMat,
    pub eta: CMat,
    pub pick: Option<CMat>,
}

impl TangentialSpec {
    pub fn total_dim(&self) -> usize {
        self.nodes.iter().map(|n| n.multiplicity).sum()
    }

    fn validate(&self) -> Result<()> {
        let n = self.total_dim();
        if n == 0 {
            return Err(ProblemError::Invalid("no interpolation nodes".into()));
        }
        for node in &self.nodes {
            if node.multiplicity == 0 {
                return Err(ProblemError::Invalid("zero multiplicity".into()));
            }
            if node.lambda.im == 0.0 {
                return Err(ProblemError::Invalid(format!(
                    "node {} must be non-real",
                    node.lambda
                )));
            }
        }
        if self.xi.shape() != (self.d, n) || self.eta.shape() != (self.d, n) {
            return Err(ProblemError::Invalid(format!(
                "xi/eta must be {}x{n}",
                self.d
            )));
        }
        Ok(())
    }
}

fn jordan_cell(lambda: C64, size: usize) -> CMat {
    let mut j = CMat::zeros(size, size);
    for i in 0..size {
        j[(i, i)] = lambda;
        if i + 1 < size {
            j[(i, i + 1)] = cr(1.0);
        }
    }
    j
}

/// Build the data set of a tangential problem: `B1 = I`, `B2` the
/// block-diagonal of node cells, `C1/C2` the target/direction columns and
/// `K` the (supplied or computed) solution of
/// `P B2 - B2* P = C2* C1 - C1* C2`.
pub fn build_tangential(spec: &TangentialSpec) -> Result<AipDataSet> {
    spec.validate()?;
    let n = spec.total_dim();
    let mut b2 = CMat::zeros(n, n);
    let mut at = 0usize;
    for node in &spec.nodes {
        b2.view_mut((at, at), (node.multiplicity, node.multiplicity))
            .copy_from(&jordan_cell(node.lambda, node.multiplicity));
        at += node.multiplicity;
    }
    let b1 = CMat::identity(n, n);

    let p = match &spec.pick {
        Some(p) => {
            if p.shape() != (n, n) {
                return Err(ProblemError::Invalid("supplied Pick matrix has wrong shape".into()));
            }
            let scale = fnorm(p).max(1.0);
            if hermitian_residual(p) > 1e-10 * scale {
                return Err(ProblemError::Invalid("supplied Pick matrix is not Hermitian".into()));
            }
            let rhs = spec.eta.adjoint() * &spec.xi - spec.xi.adjoint() * &spec.eta;
            let resid = fnorm(&(p * &b2 - b2.adjoint() * p - rhs));
            if resid > 1e-8 * (scale * fnorm(&b2)).max(1.0) {
                return Err(ProblemError::Invalid(
                    "supplied Pick matrix does not solve the Lyapunov equation".into(),
                ));
            }
            p.clone()
        }
        None => solve_lyapunov_pick(&b2, &spec.xi, &spec.eta).map_err(|e| match e {
            MatKitError::ResonantSpectrum => ProblemError::ResonantSpectrum,
            other => ProblemError::from(other),
        })?,
    };

    let (_, min_eig) = crate::matkit::psd_check(&p, Tolerance::default())?;
    if min_eig < -1e-10 * fnorm(&p).max(1.0) {
        return Err(ProblemError::PickNotPsd { min_eig });
    }
    AipDataSet::new_regular(b1, b2, spec.xi.clone(), spec.eta.clone(), p).map_err(ProblemError::from)
}

// ---------------------------------------------------------------------------
// moment sequences
// ---------------------------------------------------------------------------

/// Truncated matrix moment sequence `s_0, ..., s_{2n}` of Hermitian `d x d`
/// moments.
#[derive(Clone, Debug)]
pub struct MomentSequence {
    pub d: usize,
    pub n: usize,
    pub s: Vec<CMat>,
}

impl MomentSequence {
    pub fn new(d: usize, n: usize, s: Vec<CMat>) -> Result<Self> {
        if s.len() != 2 * n + 1 {
            return Err(ProblemError::Invalid(format!(
                "expected {} moments, got {}",
                2 * n + 1,
                s.len()
            )));
        }
        for (j, m) in s.iter().enumerate() {
            if m.shape() != (d, d) {
                return Err(ProblemError::Invalid(format!("moment {j} must be {d}x{d}")));
            }
            if hermitian_residual(m) > 1e-10 * fnorm(m).max(1.0) {
                return Err(ProblemError::Invalid(format!("moment {j} is not Hermitian")));
            }
        }
        Ok(MomentSequence { d, n, s })
    }

    pub fn scalar(s: &[f64]) -> Result<Self> {
        let n = (s.len() - 1) / 2;
        Self::new(
            1,
            n,
            s.iter().map(|&x| CMat::from_element(1, 1, cr(x))).collect(),
        )
    }

    /// Block Hankel matrix `(s_{i+j})` of order `k`, size `(k+1)d`.
    pub fn hankel(&self, k: usize) -> CMat {
        let d = self.d;
        let mut h = CMat::zeros((k + 1) * d, (k + 1) * d);
        for i in 0..=k {
            for j in 0..=k {
                h.view_mut((i * d, j * d), (d, d)).copy_from(&self.s[i + j]);
            }
        }
        h
    }

    pub fn block_dim(&self) -> usize {
        (self.n + 1) * self.d
    }

    /// Block upper shift `T` on `(n+1)` blocks of size `d`.
    pub fn shift(&self) -> CMat {
        let d = self.d;
        let nn = self.block_dim();
        let mut t = CMat::zeros(nn, nn);
        for j in 0..self.n {
            for i in 0..d {
                t[(j * d + i, (j + 1) * d + i)] = cr(1.0);
            }
        }
        t
    }
}

/// Solvability analysis: positivity of the Hankel matrix and the range
/// condition for an exact solution (the stacked tail column must lie in the
/// range of the lower-order Hankel matrix).
pub fn hankel_exactness(ms: &MomentSequence, tol: Tolerance) -> VerificationReport {
    let mut rep = VerificationReport::new();
    let sn = ms.hankel(ms.n);
    match crate::matkit::psd_check(&sn, tol) {
        Ok((_, min_eig)) => {
            rep.bound_check("hankel-psd", "solvability", min_eig, -tol.threshold(fnorm(&sn)));
        }
        Err(e) => {
            rep.flag_check("hankel-psd", "solvability", false, &e.to_string());
        }
    }
    if ms.n == 0 {
        rep.flag_check("exactness-range", "exact-solution", true, "trivial at order 0");
        return rep;
    }
    let d = ms.d;
    let snm1 = ms.hankel(ms.n - 1);
    let mut tail = CMat::zeros(ms.n * d, d);
    for j in 0..ms.n {
        tail.view_mut((j * d, 0), (d, d)).copy_from(&ms.s[ms.n + 1 + j]);
    }
    let pinv = match moore_penrose(&snm1, tol) {
        Ok(p) => p,
        Err(e) => {
            rep.flag_check("exactness-range", "exact-solution", false, &e.to_string());
            return rep;
        }
    };
    let resid = fnorm(&(&tail - &snm1 * pinv * &tail));
    rep.residual_check(
        "exactness-range",
        "exact-solution",
        resid,
        tol.threshold(fnorm(&tail).max(fnorm(&snm1))),
    );
    rep
}

/// Leading-principal-first search for a Hermitian reflexive generalized
/// inverse `X` of the Hankel matrix whose range is spanned by coordinate
/// vectors and invariant under the block shift. Candidate supports are
/// unions of leading segments of the `d` scalar shift chains; the first
/// support whose principal compression is invertible wins.
fn invariant_support(ms: &MomentSequence, tol: Tolerance) -> Result<(CMat, Vec<usize>)> {
    let d = ms.d;
    let n = ms.n;
    let nn = ms.block_dim();
    let sn = ms.hankel(n);
    let r = numeric_rank(&sn, tol)?;
    if r == 0 {
        return Ok((CMat::zeros(nn, nn), Vec::new()));
    }
    if r == nn {
        let x = crate::matkit::solve_linear(&sn, &CMat::identity(nn, nn))
            .map_err(|e| ProblemError::NoInvariantSupport(e.to_string()))?;
        return Ok((hermitian_part(&x), (0..nn).collect()));
    }

    // enumerate cutoff tuples (k_0..k_{d-1}) with sum r; leading-principal
    // tuple first, then lexicographically
    let lead: Vec<usize> = (0..d).map(|c_| (0..=n).filter(|j| j * d + c_ < r).count()).collect();
    let mut tuples: Vec<Vec<usize>> = Vec::new();
    fn compositions(d: usize, total: usize, cap: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if d == 1 {
            if total <= cap {
                let mut t = prefix.clone();
                t.push(total);
                out.push(t);
            }
            return;
        }
        for k in (0..=total.min(cap)).rev() {
            prefix.push(k);
            compositions(d - 1, total - k, cap, prefix, out);
            prefix.pop();
        }
    }
    let mut prefix = Vec::new();
    compositions(d, r, n + 1, &mut prefix, &mut tuples);
    tuples.retain(|t| *t != lead);
    tuples.insert(0, lead);

    for cuts in &tuples {
        let mut support: Vec<usize> = Vec::with_capacity(r);
        for (c_, &k) in cuts.iter().enumerate() {
            for j in 0..k {
                support.push(j * d + c_);
            }
        }
        support.sort_unstable();
        let mut compressed = CMat::zeros(r, r);
        for (a, &ia) in support.iter().enumerate() {
            for (b, &ib) in support.iter().enumerate() {
                compressed[(a, b)] = sn[(ia, ib)];
            }
        }
        if numeric_rank(&compressed, tol).unwrap_or(0) != r {
            continue;
        }
        let cond = cond_estimate(&compressed);
        if !cond.is_finite() || cond > 1e12 {
            continue;
        }
        let inv = match crate::matkit::solve_linear(&compressed, &CMat::identity(r, r)) {
            Ok(i) => i,
            Err(_) => continue,
        };
        let mut x = CMat::zeros(nn, nn);
        for (a, &ia) in support.iter().enumerate() {
            for (b, &ib) in support.iter().enumerate() {
                x[(ia, ib)] = inv[(a, b)];
            }
        }
        let x = hermitian_part(&x);
        // verify the defining identities before accepting
        let sx = fnorm(&x).max(1.0);
        let sk = fnorm(&sn).max(1.0);
        let t = ms.shift();
        let ok = fnorm(&(&x * &sn * &x - &x)) <= 1e-10 * sx * sx * sk
            && fnorm(&(&sn * &x * &sn - &sn)) <= 1e-10 * sk * sk * sx
            && {
                let q = crate::matkit::column_space_basis(&x, tol);
                let img = &t * &q;
                fnorm(&(&img - &q * (q.adjoint() * &img))) <= 1e-10 * sx.max(1.0)
            };
        if ok {
            return Ok((x, support));
        }
    }
    Err(ProblemError::NoInvariantSupport(format!(
        "rank {r} of {nn}; no admissible chain-segment support among {} candidates",
        tuples.len()
    )))
}

/// Hermitian `X` with `X S X = X`, `S X S = S`, `rank X = rank S` and shift
/// invariant range, for a solvable truncated moment sequence.
pub fn hankel_pseudo_x(ms: &MomentSequence, tol: Tolerance) -> Result<CMat> {
    let sn = ms.hankel(ms.n);
    let (psd, min_eig) = crate::matkit::psd_check(&sn, tol)?;
    if !psd {
        return Err(ProblemError::HankelNotPsd { min_eig });
    }
    Ok(invariant_support(ms, tol)?.0)
}

/// Build the data set of a truncated moment problem: shift/identity pair,
/// moment output rows, Hankel Gram form; in the degenerate case the metric
/// adjoints run through the invariant generalized inverse.
pub fn build_truncated_moment(ms: &MomentSequence) -> Result<AipDataSet> {
    let tol = Tolerance::default();
    let d = ms.d;
    let nn = ms.block_dim();
    let sn = ms.hankel(ms.n);
    let (psd, min_eig) = crate::matkit::psd_check(&sn, tol)?;
    if !psd {
        return Err(ProblemError::HankelNotPsd { min_eig });
    }

    let b1 = ms.shift();
    let b2 = CMat::identity(nn, nn);
    let mut c1 = CMat::zeros(d, nn);
    for j in 1..=ms.n {
        c1.view_mut((0, j * d), (d, d)).copy_from(&ms.s[j - 1]);
    }
    let mut c2 = CMat::zeros(d, nn);
    c2.view_mut((0, 0), (d, d)).copy_from(&(-CMat::identity(d, d)));

    let r = numeric_rank(&sn, tol)?;
    if r == nn {
        return AipDataSet::new_regular(b1, b2, c1, c2, sn).map_err(ProblemError::from);
    }

    // degenerate case: must admit an exact solution
    let exact = hankel_exactness(ms, tol);
    if !exact.all_passed() {
        return Err(ProblemError::ExactnessFailure);
    }
    let (x, support) = invariant_support(ms, tol)?;
    let mut x0 = CMat::zeros(nn, support.len());
    for (col, &idx) in support.iter().enumerate() {
        x0[(idx, col)] = cr(1.0);
    }
    let ker = crate::matkit::null_space_basis(&sn, tol);
    AipDataSet::new(b1, b2, c1, c2, sn, ker, x0, KAdjoint::PseudoX { x }).map_err(ProblemError::from)
}

// ---------------------------------------------------------------------------
// orthogonal polynomials and the series resolvent matrix
// ---------------------------------------------------------------------------

/// Matrix polynomials orthonormal against the moment form, with their
/// adjacent (second kind) companions.
#[derive(Clone, Debug)]
pub struct OrthogonalSystem {
    pub p: Vec<MatPoly>,
    pub padj: Vec<MatPoly>,
}

/// Pairing `G(P, Q) = sum_{a,b} Q_b* s_{a+b} P_a` so that
/// `K(P u, Q v) = v* G(P, Q) u`.
fn moment_pairing(ms: &MomentSequence, p: &MatPoly, q: &MatPoly) -> CMat {
    let d = ms.d;
    let mut g = CMat::zeros(d, d);
    for (a, pa) in p.coeffs.iter().enumerate() {
        for (b, qb) in q.coeffs.iter().enumerate() {
            if a + b < ms.s.len() {
                g += qb.adjoint() * &ms.s[a + b] * pa;
            }
        }
    }
    g
}

fn matpoly_sub(a: &MatPoly, b: &MatPoly) -> MatPoly {
    let len = a.coeffs.len().max(b.coeffs.len());
    let mut coeffs = Vec::with_capacity(len);
    for k in 0..len {
        let mut m = CMat::zeros(a.rows, a.cols);
        if k < a.coeffs.len() {
            m += &a.coeffs[k];
        }
        if k < b.coeffs.len() {
            m -= &b.coeffs[k];
        }
        coeffs.push(m);
    }
    MatPoly { rows: a.rows, cols: a.cols, coeffs }
}

fn matpoly_scale_right(p: &MatPoly, a: &CMat) -> MatPoly {
    MatPoly {
        rows: p.rows,
        cols: a.ncols(),
        coeffs: p.coeffs.iter().map(|co| co * a).collect(),
    }
}

/// Orthonormalize the monomial basis against the moment form by block
/// Gram-Schmidt (projections applied twice), normalizing each degree with
/// the inverse adjoint Cholesky factor so leading coefficients come out
/// upper triangular with positive diagonal. Adjacent polynomials follow
/// from the difference-quotient pairing.
pub fn orthogonal_polynomials(ms: &MomentSequence) -> Result<OrthogonalSystem> {
    let tol = Tolerance::default();
    let d = ms.d;
    let sn = ms.hankel(ms.n);
    if numeric_rank(&sn, tol)? != ms.block_dim() {
        return Err(ProblemError::SingularHankel);
    }
    let mut ps: Vec<MatPoly> = Vec::with_capacity(ms.n + 1);
    for k in 0..=ms.n {
        // monomial t^k I
        let mut coeffs = vec![CMat::zeros(d, d); k + 1];
        coeffs[k] = CMat::identity(d, d);
        let mut resid = MatPoly { rows: d, cols: d, coeffs };
        for _pass in 0..2 {
            for pj in ps.iter() {
                let a = moment_pairing(ms, &resid, pj);
                resid = matpoly_sub(&resid, &matpoly_scale_right(pj, &a));
            }
        }
        let g = hermitian_part(&moment_pairing(ms, &resid, &resid));
        let chol = g
            .clone()
            .cholesky()
            .ok_or_else(|| ProblemError::Numeric(format!("degree {k} block not positive definite")))?;
        let linv = crate::matkit::solve_linear(&chol.l().adjoint(), &CMat::identity(d, d))?;
        ps.push(matpoly_scale_right(&resid, &linv));
    }

    // adjacent polynomials: coefficients B_m = sum_a s_a A_{a+m+1}
    let mut padj: Vec<MatPoly> = Vec::with_capacity(ms.n + 1);
    for p in &ps {
        let deg = p.coeffs.len() - 1;
        if deg == 0 {
            padj.push(MatPoly::zero(d, d));
            continue;
        }
        let mut coeffs = Vec::with_capacity(deg);
        for m in 0..deg {
            let mut bm = CMat::zeros(d, d);
            for a in 0..=(deg - m - 1) {
                bm += &ms.s[a] * &p.coeffs[a + m + 1];
            }
            coeffs.push(bm);
        }
        padj.push(MatPoly { rows: d, cols: d, coeffs });
    }
    Ok(OrthogonalSystem { p: ps, padj })
}

/// The resolvent matrix assembled from orthogonal-polynomial sums; exact on
/// the truncated space and polynomial in the spectral variable.
#[derive(Clone, Debug)]
pub struct ThetaSeries {
    pub d: usize,
    poly: MatPoly,
}

impl ThetaSeries {
    pub fn eval(&self, z: C64) -> CMat {
        self.poly.eval(z)
    }
}

impl ThetaLike for ThetaSeries {
    fn scale_dim(&self) -> usize {
        self.d
    }
    fn forced_block(&self) -> usize {
        0
    }
    fn cleared_degree_bound(&self) -> usize {
        self.poly.degree()
    }
    fn eval_cleared(&self, z: C64) -> Option<CMat> {
        Some(self.eval(z))
    }
}

/// Series form of the resolvent matrix from orthogonal/adjacent polynomial
/// sums over the truncated system (gauge invariant: each term pairs a
/// polynomial value with an evaluation at zero of the same degree).
pub fn theta_series(ms: &MomentSequence) -> Result<ThetaSeries> {
    let sys = orthogonal_polynomials(ms)?;
    theta_series_from_system(ms.d, &sys)
}

/// Assemble the series entries from a given orthonormal system.
pub fn theta_series_from_system(d: usize, sys: &OrthogonalSystem) -> Result<ThetaSeries> {
    let deg = sys
        .p
        .iter()
        .chain(sys.padj.iter())
        .map(|p| p.coeffs.len())
        .max()
        .unwrap_or(1);
    // entries have degree at most deg + 1 (one extra factor of z)
    let mut coeffs = vec![CMat::zeros(2 * d, 2 * d); deg + 2];
    coeffs[0] = CMat::identity(2 * d, 2 * d);

    let mut add_block = |row: usize, col: usize, p: &MatPoly, at0: &CMat, sign: f64| {
        // adds sign * z * p(z) * at0^* into the (row, col) d x d block
        let w = at0.adjoint();
        for (k, co) in p.coeffs.iter().enumerate() {
            let term = co * &w * cr(sign);
            let mut view = coeffs[k + 1].view_mut((row * d, col * d), (d, d));
            view += term;
        }
    };

    for k in 0..sys.p.len() {
        let p0 = sys.p[k].eval(cr(0.0));
        let padj0 = sys.padj[k].eval(cr(0.0));
        add_block(0, 0, &sys.padj[k], &p0, 1.0); // I + z sum padj_k(z) p_k(0)*
        add_block(0, 1, &sys.padj[k], &padj0, 1.0); // z sum padj_k(z) padj_k(0)*
        add_block(1, 0, &sys.p[k], &p0, -1.0); // -z sum p_k(z) p_k(0)*
        add_block(1, 1, &sys.p[k], &padj0, -1.0); // I - z sum p_k(z) padj_k(0)*
    }
    let mut poly = MatPoly { rows: 2 * d, cols: 2 * d, coeffs };
    poly.trim();
    Ok(ThetaSeries { d, poly })
}

// ---------------------------------------------------------------------------
// measures from rational solutions
// ---------------------------------------------------------------------------

/// Recover the discrete measure of a rational solution: atom locations from
/// the real zeros of the denominator determinant, weights by least squares
/// against exact samples of the function, validated against the function on
/// the default grid.
pub fn extract_measure(sol: &NevanlinnaObject) -> Result<DiscreteMeasure> {
    let (num, den) = match sol {
        NevanlinnaObject::RationalQuotient { num, den } => (num, den),
        NevanlinnaObject::HerglotzOfMeasure { measure, alpha, beta } => {
            if fnorm(alpha) > 1e-12 || fnorm(beta) > 1e-12 {
                return Err(ProblemError::NotAMeasureTransform("affine part present".into()));
            }
            return Ok(measure.clone());
        }
        _ => {
            return Err(ProblemError::Invalid(
                "measure extraction needs a rational quotient solution".into(),
            ))
        }
    };
    let d = den.rows;
    let detd = det_poly(den).map_err(ProblemError::Numeric)?;
    let roots = crate::polyx::poly_roots(&detd);

    // split real and non-real roots; non-real roots must carry no residue
    let mut reals: Vec<f64> = Vec::new();
    for z in &roots {
        if z.im.abs() <= 1e-7 * (1.0 + z.re.abs()) {
            reals.push(z.re);
        } else if pole_strength(sol, *z) > 1e-8 {
            return Err(ProblemError::NonRealPole(*z));
        }
    }
    reals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let _ = num;
    let eval = |z: C64| sol.m_value(z).ok();
    measure_from_pole_candidates(d, &reals, &eval)
}

/// Shared engine: given real pole candidates and an exact evaluator of the
/// function, cluster the candidates, fit the weights by least squares and
/// validate the transform on the default grid. The cluster threshold widens
/// if roundoff split a multiple denominator root.
pub(crate) fn measure_from_pole_candidates(
    d: usize,
    sorted_reals: &[f64],
    m_eval: &dyn Fn(C64) -> Option<CMat>,
) -> Result<DiscreteMeasure> {
    for widen in [1e-8, 1e-7, 1e-6, 1e-5, 1e-4] {
        let atoms = cluster_reals(sorted_reals, widen);
        match fit_weights(m_eval, d, &atoms) {
            Ok(measure) => {
                if stieltjes_matches(m_eval, &measure, 1e-8) {
                    return validate_weights(measure);
                }
            }
            Err(_) => continue,
        }
    }
    Err(ProblemError::NotAMeasureTransform(
        "no discrete measure reproduces the function on the verification grid".into(),
    ))
}

fn cluster_reals(sorted: &[f64], tol_scale: f64) -> Vec<f64> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for &t in sorted {
        match out.last_mut() {
            Some((c_, k)) if (t - *c_).abs() <= tol_scale * (1.0 + c_.abs()) => {
                *c_ = (*c_ * (*k as f64) + t) / (*k as f64 + 1.0);
                *k += 1;
            }
            _ => out.push((t, 1)),
        }
    }
    out.into_iter().map(|(t, _)| t).collect()
}

fn pole_strength(sol: &NevanlinnaObject, z0: C64) -> f64 {
    let delta = 1e-6 * (1.0 + z0.norm());
    let mut strength: f64 = 0.0;
    for k in 0..4 {
        let ang = std::f64::consts::FRAC_PI_4 + std::f64::consts::FRAC_PI_2 * k as f64;
        let z = z0 + c(delta * ang.cos(), delta * ang.sin());
        if let Ok(m) = sol.m_value(z) {
            strength = strength.max(fnorm(&m) * delta);
        }
    }
    strength
}

/// Least-squares weights from exact samples: the Cauchy system
/// `sum_k W_k/(t_k - z_s) = m(z_s)` is linear in the weights and shares one
/// coefficient matrix across all entries.
fn fit_weights(m_eval: &dyn Fn(C64) -> Option<CMat>, d: usize, atoms: &[f64]) -> Result<DiscreteMeasure> {
    if atoms.is_empty() {
        return DiscreteMeasure::new(d, Vec::new()).map_err(ProblemError::from);
    }
    let mut samples: Vec<C64> = default_grid();
    for &t in atoms {
        samples.push(c(t, 0.37));
        samples.push(c(t, -1.31));
    }
    let s = samples.len();
    let k = atoms.len();
    let mut a = CMat::zeros(s, k);
    let mut rhs = CMat::zeros(s, d * d);
    for (row, &z) in samples.iter().enumerate() {
        for (col, &t) in atoms.iter().enumerate() {
            a[(row, col)] = cr(1.0) / (cr(t) - z);
        }
        let m = m_eval(z).ok_or_else(|| ProblemError::Numeric(format!("evaluation failed at {z}")))?;
        for i in 0..d {
            for j in 0..d {
                rhs[(row, i * d + j)] = m[(i, j)];
            }
        }
    }
    let pinv = moore_penrose(&a, Tolerance::default())?;
    let w = pinv * rhs; // k x d^2
    let mut out = Vec::with_capacity(k);
    for (col, &t) in atoms.iter().enumerate() {
        let mut weight = CMat::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                weight[(i, j)] = w[(col, i * d + j)];
            }
        }
        out.push(MeasureAtom { t, weight: hermitian_part(&weight) });
    }
    // drop atoms with negligible weight (cancelled denominator factors)
    let scale = out.iter().map(|a_| fnorm(&a_.weight)).fold(0.0f64, f64::max).max(1e-300);
    out.retain(|a_| fnorm(&a_.weight) > 1e-10 * scale);
    DiscreteMeasure::new(d, out).map_err(|e| ProblemError::Numeric(e.to_string()))
}

fn stieltjes_matches(m_eval: &dyn Fn(C64) -> Option<CMat>, measure: &DiscreteMeasure, rel: f64) -> bool {
    for &z in &default_grid() {
        let m = match m_eval(z) {
            Some(m) => m,
            None => return false,
        };
        let st = match measure.stieltjes(z) {
            Ok(st) => st,
            Err(_) => return false,
        };
        if fnorm(&(&m - &st)) > rel * fnorm(&m).max(1.0) {
            return false;
        }
    }
    true
}

fn validate_weights(measure: DiscreteMeasure) -> Result<DiscreteMeasure> {
    for a in &measure.atoms {
        let (w, _) = herm_eig(&a.weight)?;
        let min_eig = if w.is_empty() { 0.0 } else { w[0] };
        if min_eig < -1e-8 * fnorm(&a.weight).max(1.0) {
            return Err(ProblemError::ResidueNotPsd { t: a.t, min_eig });
        }
    }
    Ok(measure)
}

/// Moment verification: equality up to order `2n - 1`, PSD defect at order
/// `2n`, and an exactness note.
pub fn verify_moments(measure: &DiscreteMeasure, ms: &MomentSequence, tol: Tolerance) -> VerificationReport {
    let mut rep = VerificationReport::new();
    let top = 2 * ms.n;
    for j in 0..top {
        let resid = fnorm(&(measure.moment(j) - &ms.s[j]));
        rep.residual_check(
            &format!("moment-match-{j}"),
            "power-moments",
            resid,
            tol.threshold(fnorm(&ms.s[j]).max(1.0)),
        );
    }
    let defect = &ms.s[top] - measure.moment(top);
    match crate::matkit::psd_check(&hermitian_part(&defect), tol) {
        Ok((_, min_eig)) => {
            rep.bound_check(
                &format!("moment-defect-{top}"),
                "top-moment-defect",
                min_eig,
                -tol.threshold(fnorm(&ms.s[top]).max(1.0)),
            );
            let exact = fnorm(&defect) <= tol.threshold(fnorm(&ms.s[top]).max(1.0));
            rep.flag_check(
                "moment-exact",
                "top-moment-equality",
                true,
                if exact { "exact" } else { "not exact" },
            );
        }
        Err(e) => {
            rep.flag_check(&format!("moment-defect-{top}"), "top-moment-defect", false, &e.to_string());
        }
    }
    rep
}

/// Sampled large-argument diagnostics along the imaginary axis: the scaled
/// expansion remainders must decay as the radius grows.
pub fn stieltjes_asymptotics_check(
    sol: &NevanlinnaObject,
    ms: &MomentSequence,
    radii: &[f64],
) -> VerificationReport {
    let mut rep = VerificationReport::new();
    if radii.len() < 2 {
        rep.flag_check("asymptotics", "expansion-decay", false, "need at least two radii");
        return rep;
    }
    let mut sorted = radii.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let orders = (2 * ms.n + 1).min(ms.s.len());
    for j in 1..=orders {
        let value_at = |r: f64| -> Option<f64> {
            let z = c(0.0, r);
            let m = sol.m_value(z).ok()?;
            let mut acc = m;
            for k in 0..j {
                acc += &ms.s[k] / z.powi(k as i32 + 1);
            }
            Some(fnorm(&acc) * z.norm().powi(j as i32))
        };
        match (value_at(sorted[0]), value_at(*sorted.last().unwrap())) {
            (Some(small), Some(large)) => {
                rep.flag_check(
                    &format!("asymptotics-order-{j}"),
                    "expansion-decay",
                    large <= small.max(1e-12) || large <= 1e-10,
                    &format!("{small:.3e} at R={} -> {large:.3e} at R={}", sorted[0], sorted.last().unwrap()),
                );
            }
            _ => {
                rep.flag_check(&format!("asymptotics-order-{j}"), "expansion-decay", false, "evaluation failed");
            }
        }
    }
    rep
}
