//! Independent ground truth: assembles the symmetric relation and its
//! adjoint explicitly from the data set, realizes canonical selfadjoint
//! extensions from constant boundary parameters by direct linear solves,
//! and computes compressed resolvents, Weyl pairs, state-space fields and
//! spectral measures. None of this touches the resolvent-matrix machinery,
//! which is exactly why it can cross-check it.
//!
//! The model works in coordinates of the invariant complement with the
//! compressed Gram metric. Data with `B2 != I` is first carried to that
//! normal form by a real shift `mu` (the pencil `B2 - mu B1` must be
//! invertible); compressed resolvents of the original problem are then
//! evaluations of the transformed one at `z - mu`.

use crate::aip::{AipDataSet, AipError};
use crate::matkit::{
    cond_estimate, cr, fnorm, hermitian_residual, numeric_rank, solve_linear, C64, CMat, CVec,
    MatKitError, Tolerance,
};
use crate::nevanlinna::{NevanlinnaError, PairFunction};
use crate::polyx::{det_poly, MatPoly};
use crate::problems::{measure_from_pole_candidates, ProblemError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("element is not in the adjoint relation (residual {0:.3e})")]
    NotInAdjoint(f64),
    #[error("resolvent system singular at {0} (point in the spectrum?)")]
    SystemSingular(C64),
    #[error("boundary relation is not selfadjoint: {0}")]
    BoundaryNotSelfadjoint(String),
    #[error("extension has no total operator part representable by a discrete measure: {0}")]
    RelationNotGraph(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl From<MatKitError> for OracleError {
    fn from(e: MatKitError) -> Self {
        OracleError::Numeric(e.to_string())
    }
}

impl From<AipError> for OracleError {
    fn from(e: AipError) -> Self {
        OracleError::Numeric(e.to_string())
    }
}

type Result<T> = std::result::Result<T, OracleError>;

/// An element `{(g, v), (g', v')}` of the adjoint relation, in complement
/// coordinates.
#[derive(Clone, Debug)]
pub struct RelationElement {
    pub g: CVec,
    pub v: CVec,
    pub gp: CVec,
    pub vp: CVec,
}

/// Explicit model of the adjoint relation of the data's symmetric part:
/// `g = B1+ g' + C1+ v' - C2+ v` with metric adjoints taken against the
/// compressed Gram form.
#[derive(Clone, Debug)]
pub struct AdjointRelationModel {
    pub r: usize,
    pub d: usize,
    /// real shift carrying the data to `B2 = I` form; `0` when unneeded
    pub mu: f64,
    kr: CMat,
    c1t: CMat,
    c2t: CMat,
    b1adj: CMat,
    c1adj: CMat,
    c2adj: CMat,
}

impl AdjointRelationModel {
    pub fn new(data: &AipDataSet) -> Result<Self> {
        let comp = data.compressed()?;
        let ident = CMat::identity(comp.r, comp.r);
        let b2_is_id = fnorm(&(&comp.b2c - &ident)) <= 1e-10 * fnorm(&comp.b2c).max(1.0);
        if b2_is_id {
            return Self::from_parts(comp.kr, comp.b1c, comp.c1c, comp.c2c, 0.0);
        }
        for mu in [0.0, 0.5, -0.5, 1.0, -1.0, 0.7, -0.7, 2.0] {
            if let Ok(model) = Self::with_shift_parts(&comp, mu) {
                return Ok(model);
            }
        }
        Err(OracleError::Invalid(
            "no real shift makes the pencil B2 - mu B1 invertible".into(),
        ))
    }

    pub fn new_with_shift(data: &AipDataSet, mu: f64) -> Result<Self> {
        let comp = data.compressed()?;
        Self::with_shift_parts(&comp, mu)
    }

    fn with_shift_parts(comp: &crate::aip::CompressedModel, mu: f64) -> Result<Self> {
        let pencil = &comp.b2c - &comp.b1c * cr(mu);
        let cond = cond_estimate(&pencil);
        if !cond.is_finite() || cond > 1e10 {
            return Err(OracleError::Invalid(format!("shift {mu} leaves the pencil singular")));
        }
        let ident = CMat::identity(comp.r, comp.r);
        let sinv = solve_linear(&pencil, &ident)?;
        Self::from_parts(
            comp.kr.clone(),
            &comp.b1c * &sinv,
            &comp.c1c * &sinv,
            (&comp.c2c - &comp.c1c * cr(mu)) * &sinv,
            mu,
        )
    }

    fn from_parts(kr: CMat, b1t: CMat, c1t: CMat, c2t: CMat, mu: f64) -> Result<Self> {
        let r = b1t.nrows();
        let d = c1t.nrows();
        let b1adj = solve_linear(&kr, &(b1t.adjoint() * &kr))?;
        let c1adj = solve_linear(&kr, &c1t.adjoint())?;
        let c2adj = solve_linear(&kr, &c2t.adjoint())?;
        Ok(AdjointRelationModel {
            r,
            d,
            mu,
            kr,
            c1t,
            c2t,
            b1adj,
            c1adj,
            c2adj,
        })
    }

    /// Residual of the adjoint-relation membership equation for an element.
    pub fn adjoint_residual(&self, e: &RelationElement) -> f64 {
        let lhs = &e.g
            - (&self.b1adj * &e.gp + &self.c1adj * &e.vp - &self.c2adj * &e.v);
        let scale = 1.0 + e.g.norm() + e.gp.norm() + e.v.norm() + e.vp.norm();
        lhs.norm() / scale
    }

    /// An element of the adjoint from free components `(g', v, v')`.
    pub fn element_from_free(&self, gp: CVec, v: CVec, vp: CVec) -> RelationElement {
        let g = &self.b1adj * &gp + &self.c1adj * &vp - &self.c2adj * &v;
        RelationElement { g, v, gp, vp }
    }

    /// Defect element at `z`: `(-F(conj z)+ u, u)` doubled by `z`, where
    /// `F(z) = (C2 - z C1)(I - z B1)^{-1}`.
    pub fn defect_element(&self, z: C64, u: &CVec) -> Result<RelationElement> {
        let ident = CMat::identity(self.r, self.r);
        // F(conj z)+ = (I - z B1+)^{-1} (C2+ - z C1+)
        let rhs = (&self.c2adj - &self.c1adj * z) * CMat::from_column_slice(self.d, 1, u.as_slice());
        let pencil = &ident - &self.b1adj * z;
        let g = solve_linear(&pencil, &rhs).map_err(|_| OracleError::SystemSingular(z))?;
        let g = -g.column(0).into_owned();
        Ok(RelationElement {
            gp: &g * z,
            vp: u * z,
            g,
            v: u.clone(),
        })
    }

    /// Dimension of the defect space at `z`: nullity of the homogeneous
    /// membership system.
    pub fn defect_dimension(&self, z: C64) -> Result<usize> {
        let ident = CMat::identity(self.r, self.r);
        let mut m = CMat::zeros(self.r, self.r + self.d);
        m.view_mut((0, 0), (self.r, self.r))
            .copy_from(&(&ident - &self.b1adj * z));
        m.view_mut((0, self.r), (self.r, self.d))
            .copy_from(&(&self.c2adj - &self.c1adj * z));
        let rank = numeric_rank(&m, Tolerance::default())?;
        Ok(self.r + self.d - rank)
    }

    /// Compressed Gram inner product of the model space.
    pub fn metric(&self) -> &CMat {
        &self.kr
    }
}

/// Boundary images `(G1, G2) = (-v + C1 g', v' - C2 g')` of an element
/// validated to lie in the adjoint relation.
pub fn boundary_map(model: &AdjointRelationModel, e: &RelationElement) -> Result<(CVec, CVec)> {
    let resid = model.adjoint_residual(e);
    if resid > 1e-8 {
        return Err(OracleError::NotInAdjoint(resid));
    }
    let g1 = -&e.v + &model.c1t * &e.gp;
    let g2 = &e.vp - &model.c2t * &e.gp;
    Ok((g1, g2))
}

/// Canonical selfadjoint extensions, indexed by a constant boundary
/// relation `(G1, G2) in ran [-q0; p0]`.
#[derive(Clone, Debug)]
pub enum ExtensionSpec {
    /// `G1 = tau G2` with Hermitian `tau`.
    Graph { tau: CMat },
    /// `G2 = 0`.
    Infinity,
    /// `(G1, G2) in ran [-q0; p0]` with `q0* p0` Hermitian and `[q0; p0]`
    /// of full column rank.
    General { q0: CMat, p0: CMat },
}

impl ExtensionSpec {
    pub fn to_qp(&self, d: usize) -> (CMat, CMat) {
        match self {
            ExtensionSpec::Graph { tau } => (-tau.clone(), CMat::identity(d, d)),
            ExtensionSpec::Infinity => (CMat::identity(d, d), CMat::zeros(d, d)),
            ExtensionSpec::General { q0, p0 } => (q0.clone(), p0.clone()),
        }
    }

    pub fn check_selfadjoint(&self, d: usize) -> Result<()> {
        let (q0, p0) = self.to_qp(d);
        if let ExtensionSpec::Graph { tau } = self {
            if hermitian_residual(tau) > 1e-10 * fnorm(tau).max(1.0) {
                return Err(OracleError::BoundaryNotSelfadjoint("tau is not Hermitian".into()));
            }
        }
        let pairing = q0.adjoint() * &p0;
        if hermitian_residual(&pairing) > 1e-10 * fnorm(&pairing).max(1.0) {
            return Err(OracleError::BoundaryNotSelfadjoint("q0* p0 is not Hermitian".into()));
        }
        let mut stack = CMat::zeros(2 * d, d);
        stack.view_mut((0, 0), (d, d)).copy_from(&q0);
        stack.view_mut((d, 0), (d, d)).copy_from(&p0);
        let rank = numeric_rank(&stack, Tolerance::default())?;
        if rank != d {
            return Err(OracleError::BoundaryNotSelfadjoint(format!(
                "[q0; p0] has rank {rank}, expected {d}"
            )));
        }
        Ok(())
    }

    /// The extension matched to a constant parameter pair of the
    /// linear-fractional parametrization: the parameter columns are pushed
    /// through the corrector, `[q~; p~] = V [q; p]`, and the boundary
    /// relation is `(G1, G2) in ran [-q~; p~]`.
    pub fn from_constant_pair(q: &CMat, p: &CMat, corrector: &CMat) -> Result<Self> {
        let d = q.nrows();
        if corrector.shape() != (2 * d, 2 * d) {
            return Err(OracleError::Invalid("corrector dimension mismatch".into()));
        }
        let mut cols = CMat::zeros(2 * d, d);
        cols.view_mut((0, 0), (d, d)).copy_from(q);
        cols.view_mut((d, 0), (d, d)).copy_from(p);
        let pushed = corrector * cols;
        let spec = ExtensionSpec::General {
            q0: pushed.rows(0, d).into_owned(),
            p0: pushed.rows(d, d).into_owned(),
        };
        spec.check_selfadjoint(d)?;
        Ok(spec)
    }

    /// Whether a boundary pair lies in the relation's range (least-squares
    /// residual against `[-q0; p0]`).
    pub fn contains(&self, d: usize, g1: &CVec, g2: &CVec) -> Result<f64> {
        let (q0, p0) = self.to_qp(d);
        let mut stack = CMat::zeros(2 * d, d);
        stack.view_mut((0, 0), (d, d)).copy_from(&(-&q0));
        stack.view_mut((d, 0), (d, d)).copy_from(&p0);
        let mut target = CVec::zeros(2 * d);
        for i in 0..d {
            target[i] = g1[i];
            target[d + i] = g2[i];
        }
        let pinv = crate::matkit::moore_penrose(&stack, Tolerance::default())?;
        let coef = &pinv * CMat::from_column_slice(2 * d, 1, target.as_slice());
        let resid = (&stack * coef).column(0) - &target;
        Ok(resid.norm() / (1.0 + target.norm()))
    }
}

/// Assemble and solve the direct resolvent system of an extension at a
/// (shift-corrected) spectral point. RHS layout: one column per scale
/// direction. Returns `(g-block, v-block)`.
fn resolvent_blocks(
    model: &AdjointRelationModel,
    ext: &ExtensionSpec,
    lambda: C64,
) -> Result<(CMat, CMat)> {
    ext.check_selfadjoint(model.d)?;
    let z = lambda - cr(model.mu);
    let (r, d) = (model.r, model.d);
    let (q0, p0) = ext.to_qp(d);
    let ident_r = CMat::identity(r, r);
    let n_tot = r + 2 * d;
    let mut sys = CMat::zeros(n_tot, n_tot);
    // membership rows: (I - z B1+) g + (C2+ - z C1+) v = C1+ u
    sys.view_mut((0, 0), (r, r)).copy_from(&(&ident_r - &model.b1adj * z));
    sys.view_mut((0, r), (r, d)).copy_from(&(&model.c2adj - &model.c1adj * z));
    // boundary rows G1 + q0 c = 0: z C1 g - v + q0 c = 0
    sys.view_mut((r, 0), (d, r)).copy_from(&(&model.c1t * z));
    sys.view_mut((r, r), (d, d)).copy_from(&(-CMat::identity(d, d)));
    sys.view_mut((r, r + d), (d, d)).copy_from(&q0);
    // boundary rows G2 - p0 c = 0: -z C2 g + z v - p0 c = -u
    sys.view_mut((r + d, 0), (d, r)).copy_from(&(-(&model.c2t * z)));
    sys.view_mut((r + d, r), (d, d)).copy_from(&(CMat::identity(d, d) * z));
    sys.view_mut((r + d, r + d), (d, d)).copy_from(&(-&p0));

    let mut rhs = CMat::zeros(n_tot, d);
    rhs.view_mut((0, 0), (r, d)).copy_from(&model.c1adj);
    rhs.view_mut((r + d, 0), (d, d)).copy_from(&(-CMat::identity(d, d)));

    let sol = solve_linear(&sys, &rhs).map_err(|_| OracleError::SystemSingular(lambda))?;
    Ok((sol.rows(0, r).into_owned(), sol.rows(r, d).into_owned()))
}

/// Compressed resolvent `psi(z)` of the extension: the scale block of
/// `(A~ - z)^{-1}` restricted to the scale space.
pub fn l_resolvent_direct(
    model: &AdjointRelationModel,
    ext: &ExtensionSpec,
    lambda: C64,
) -> Result<CMat> {
    Ok(resolvent_blocks(model, ext, lambda)?.1)
}

/// Solution function `m(z) = psi(z) (I + z psi(z))^{-1}`.
pub fn m_direct(model: &AdjointRelationModel, ext: &ExtensionSpec, lambda: C64) -> Result<CMat> {
    let psi = l_resolvent_direct(model, ext, lambda)?;
    let phi = CMat::identity(model.d, model.d) + &psi * lambda;
    let x = solve_linear(&phi.adjoint(), &psi.adjoint())
        .map_err(|_| OracleError::SystemSingular(lambda))?;
    Ok(x.adjoint())
}

/// State-space field `gamma(z)`: the model-space block of the resolvent
/// columns.
pub fn gamma_field(model: &AdjointRelationModel, ext: &ExtensionSpec, lambda: C64) -> Result<CMat> {
    Ok(resolvent_blocks(model, ext, lambda)?.0)
}

/// The normalized Weyl pair `(phi, psi)` of an extension as an exactly
/// evaluable pair function (with exact derivatives through the squared
/// resolvent).
pub struct WeylPair<'a> {
    pub model: &'a AdjointRelationModel,
    pub ext: ExtensionSpec,
}

pub fn weyl_pair<'a>(model: &'a AdjointRelationModel, ext: ExtensionSpec) -> WeylPair<'a> {
    WeylPair { model, ext }
}

impl WeylPair<'_> {
    fn psi_and_deriv(&self, lambda: C64) -> Result<(CMat, CMat)> {
        let model = self.model;
        let z = lambda - cr(model.mu);
        let (r, d) = (model.r, model.d);
        let (g, v) = resolvent_blocks(model, &self.ext, lambda)?;
        // second solve: (A~ - z) x2 = x1 with x1 the resolvent columns
        let (q0, p0) = self.ext.to_qp(d);
        let ident_r = CMat::identity(r, r);
        let n_tot = r + 2 * d;
        let mut sys = CMat::zeros(n_tot, n_tot);
        sys.view_mut((0, 0), (r, r)).copy_from(&(&ident_r - &model.b1adj * z));
        sys.view_mut((0, r), (r, d)).copy_from(&(&model.c2adj - &model.c1adj * z));
        sys.view_mut((r, 0), (d, r)).copy_from(&(&model.c1t * z));
        sys.view_mut((r, r), (d, d)).copy_from(&(-CMat::identity(d, d)));
        sys.view_mut((r, r + d), (d, d)).copy_from(&q0);
        sys.view_mut((r + d, 0), (d, r)).copy_from(&(-(&model.c2t * z)));
        sys.view_mut((r + d, r), (d, d)).copy_from(&(CMat::identity(d, d) * z));
        sys.view_mut((r + d, r + d), (d, d)).copy_from(&(-&p0));

        // rhs from x1 = (g, v): membership picks up B1+ g + C1+ v, the
        // boundary rows pick up the inhomogeneity of g' = z g2 + g,
        // v' = z v2 + v
        let mut rhs = CMat::zeros(n_tot, d);
        rhs.view_mut((0, 0), (r, d))
            .copy_from(&(&model.b1adj * &g + &model.c1adj * &v));
        rhs.view_mut((r, 0), (d, d)).copy_from(&(-(&model.c1t * &g)));
        rhs.view_mut((r + d, 0), (d, d)).copy_from(&(&model.c2t * &g - &v));
        let sol = solve_linear(&sys, &rhs).map_err(|_| OracleError::SystemSingular(lambda))?;
        Ok((v, sol.rows(r, d).into_owned()))
    }
}

impl PairFunction for WeylPair<'_> {
    fn dim(&self) -> usize {
        self.model.d
    }

    fn pair_at(&self, z: C64) -> std::result::Result<(CMat, CMat), NevanlinnaError> {
        let psi = l_resolvent_direct(self.model, &self.ext, z)
            .map_err(|_| NevanlinnaError::PoleAtPoint(z))?;
        let phi = CMat::identity(self.model.d, self.model.d) + &psi * z;
        Ok((phi, psi))
    }

    fn pair_deriv_at(&self, z: C64) -> std::result::Result<(CMat, CMat), NevanlinnaError> {
        let (psi, dpsi) = self
            .psi_and_deriv(z)
            .map_err(|_| NevanlinnaError::PoleAtPoint(z))?;
        // phi(z) = I + z psi(z): phi' = psi + z psi'
        let dphi = &psi + &dpsi * z;
        Ok((dphi, dpsi))
    }
}

/// Spectral measure of the extension's solution function: atom candidates
/// are the real eigenvalues of the direct system pencil, the weights are
/// the compressed spectral projections recovered by exact-sample least
/// squares, and the result is validated against the resolvent on the grid.
pub fn spectral_measure_direct(
    model: &AdjointRelationModel,
    ext: &ExtensionSpec,
) -> Result<crate::nevanlinna::DiscreteMeasure> {
    ext.check_selfadjoint(model.d)?;
    let (r, d) = (model.r, model.d);
    let (q0, p0) = ext.to_qp(d);

    // pencil A - z B of the solution-function system in (g, v, c)
    let n_tot = r + 2 * d;
    let mut a = CMat::zeros(n_tot, n_tot);
    let mut b = CMat::zeros(n_tot, n_tot);
    a.view_mut((0, 0), (r, r)).copy_from(&CMat::identity(r, r));
    a.view_mut((0, r), (r, d)).copy_from(&model.c2adj);
    b.view_mut((0, 0), (r, r)).copy_from(&model.b1adj);
    a.view_mut((r, r), (d, d)).copy_from(&(-CMat::identity(d, d)));
    a.view_mut((r, r + d), (d, d)).copy_from(&q0);
    b.view_mut((r, 0), (d, r)).copy_from(&(-&model.c1t));
    a.view_mut((r + d, r + d), (d, d)).copy_from(&(-&p0));
    b.view_mut((r + d, 0), (d, r)).copy_from(&model.c2t);

    let pencil = MatPoly {
        rows: n_tot,
        cols: n_tot,
        coeffs: vec![a, -b],
    };
    let det = det_poly(&pencil).map_err(OracleError::Numeric)?;
    let maxc = det.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    if maxc <= 1e-300 {
        return Err(OracleError::RelationNotGraph("system pencil identically singular".into()));
    }
    let mut reals: Vec<f64> = crate::polyx::poly_roots(&det)
        .into_iter()
        .filter(|z| z.im.abs() <= 1e-7 * (1.0 + z.re.abs()))
        .map(|z| z.re + model.mu)
        .collect();
    reals.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let eval = |z: C64| m_direct(model, ext, z).ok();
    measure_from_pole_candidates(d, &reals, &eval).map_err(|e| match e {
        ProblemError::NotAMeasureTransform(msg) => OracleError::RelationNotGraph(msg),
        other => OracleError::Numeric(other.to_string()),
    })
}

/// Elements of the symmetric relation generated by kernel vectors of the
/// form (the boundary-relevant degenerate part), in model coordinates.
/// Only meaningful for data in `B2 = I` form.
pub fn kernel_boundary_elements(data: &AipDataSet) -> Result<Vec<RelationElement>> {
    let mut out = Vec::new();
    for jcol in 0..data.nu0() {
        let u = data.ker_basis.column(jcol).into_owned();
        let b1u = &data.b1 * &u;
        let g = data.project_x0_coords(&b1u)?;
        let v = &data.c1 * &u;
        // the class of u itself is zero in the model space
        let gp = CVec::zeros(data.rank());
        let vp = &data.c2 * &u;
        out.push(RelationElement { g, v, gp, vp });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aip::{build_theta, AipDataSet, KAdjoint};
    use crate::matkit::c;
    use crate::nevanlinna::{default_grid, membership_check, NevanlinnaObject};

    fn moment_101() -> AipDataSet {
        let b1 = CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(0.0), cr(0.0)]);
        AipDataSet::new_regular(
            b1,
            CMat::identity(2, 2),
            CMat::from_row_slice(1, 2, &[cr(0.0), cr(1.0)]),
            CMat::from_row_slice(1, 2, &[cr(-1.0), cr(0.0)]),
            CMat::identity(2, 2),
        )
        .unwrap()
    }

    fn moment_111() -> AipDataSet {
        let b1 = CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(0.0), cr(0.0)]);
        let k = CMat::from_row_slice(2, 2, &[cr(1.0), cr(1.0), cr(1.0), cr(1.0)]);
        let x = CMat::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(0.0)]);
        AipDataSet::new(
            b1,
            CMat::identity(2, 2),
            CMat::from_row_slice(1, 2, &[cr(0.0), cr(1.0)]),
            CMat::from_row_slice(1, 2, &[cr(-1.0), cr(0.0)]),
            k,
            CMat::from_column_slice(2, 1, &[cr(1.0), cr(-1.0)]),
            CMat::from_column_slice(2, 1, &[cr(1.0), cr(0.0)]),
            KAdjoint::PseudoX { x },
        )
        .unwrap()
    }

    fn tangential_node_i() -> AipDataSet {
        AipDataSet::new_regular(
            CMat::identity(1, 1),
            CMat::from_element(1, 1, c(0.0, 1.0)),
            CMat::from_element(1, 1, c(0.0, 1.0)),
            CMat::identity(1, 1),
            CMat::identity(1, 1),
        )
        .unwrap()
    }

    fn graph(tau: f64) -> ExtensionSpec {
        ExtensionSpec::Graph { tau: CMat::from_element(1, 1, cr(tau)) }
    }

    #[test]
    fn direct_resolvent_hand_cases() {
        let model = AdjointRelationModel::new(&moment_101()).unwrap();

        // G2 = 0: psi = -1/(2z), m = -1/z
        for &z in &default_grid() {
            let psi = l_resolvent_direct(&model, &ExtensionSpec::Infinity, z).unwrap();
            assert!((psi[(0, 0)] + cr(1.0) / (z * 2.0)).norm() < 1e-12);
            let m = m_direct(&model, &ExtensionSpec::Infinity, z).unwrap();
            assert!((m[(0, 0)] + cr(1.0) / z).norm() < 1e-12);
        }

        // G1 = 0 (tau = 0): m = z/(1 - z^2)
        for &z in &default_grid() {
            let m = m_direct(&model, &graph(0.0), z).unwrap();
            assert!((m[(0, 0)] - z / (cr(1.0) - z * z)).norm() < 1e-12);
        }

        // degenerate data, tau = -1: psi = 1/(1 - 2z), m = 1/(1 - z)
        let model = AdjointRelationModel::new(&moment_111()).unwrap();
        for &z in &default_grid() {
            let psi = l_resolvent_direct(&model, &graph(-1.0), z).unwrap();
            assert!((psi[(0, 0)] - cr(1.0) / (cr(1.0) - z * 2.0)).norm() < 1e-12);
            let m = m_direct(&model, &graph(-1.0), z).unwrap();
            assert!((m[(0, 0)] - cr(1.0) / (cr(1.0) - z)).norm() < 1e-12);
        }
    }

    #[test]
    fn shifted_model_matches_tangential_solutions() {
        let model = AdjointRelationModel::new(&tangential_node_i()).unwrap();
        // extension from parameter (0,1) with identity corrector: G1 = 0
        let ext = ExtensionSpec::from_constant_pair(
            &CMat::zeros(1, 1),
            &CMat::identity(1, 1),
            &CMat::identity(2, 2),
        )
        .unwrap();
        for &z in &default_grid() {
            let m = m_direct(&model, &ext, z).unwrap();
            assert!((m[(0, 0)] - z).norm() < 1e-11, "expected m = z at {z}");
        }
        let ext = ExtensionSpec::from_constant_pair(
            &CMat::identity(1, 1),
            &CMat::zeros(1, 1),
            &CMat::identity(2, 2),
        )
        .unwrap();
        for &z in &default_grid() {
            let m = m_direct(&model, &ext, z).unwrap();
            assert!((m[(0, 0)] + cr(1.0) / z).norm() < 1e-11, "expected m = -1/z at {z}");
        }
    }

    #[test]
    fn boundary_map_hand_values() {
        // elements of the symmetric part map to zero
        let data = moment_101();
        let model = AdjointRelationModel::new(&data).unwrap();
        let h = CVec::from_column_slice(&[c(0.3, 0.2), c(-1.1, 0.7)]);
        let elem = RelationElement {
            g: CVec::from_column_slice(&[h[1], cr(0.0)]), // B1 h = (h2, 0)
            v: &data.c1 * &h,
            gp: h.clone(),
            vp: &data.c2 * &h,
        };
        assert!(model.adjoint_residual(&elem) < 1e-12);
        let (g1, g2) = boundary_map(&model, &elem).unwrap();
        assert!(g1.norm() < 1e-12 && g2.norm() < 1e-12);

        // kernel element of the degenerate case: image (1, -1)
        let data = moment_111();
        let model = AdjointRelationModel::new(&data).unwrap();
        let elems = kernel_boundary_elements(&data).unwrap();
        assert_eq!(elems.len(), 1);
        // the generator may come scaled; compare directions
        let (g1, g2) = boundary_map(&model, &elems[0]).unwrap();
        let cross = g1[0] * cr(-1.0) - g2[0] * cr(1.0);
        assert!(cross.norm() < 1e-12, "boundary image not parallel to (1,-1)");
        assert!((g1[0] - cr(1.0)).norm() < 1e-12 || (g1[0] + cr(1.0)).norm() < 1e-12);
    }

    #[test]
    fn defect_elements_and_dimension() {
        for data in [moment_101(), moment_111()] {
            let model = AdjointRelationModel::new(&data).unwrap();
            let z = c(0.4, 1.3);
            let u = CVec::from_column_slice(&[cr(1.0)]);
            let e = model.defect_element(z, &u).unwrap();
            assert!(model.adjoint_residual(&e) < 1e-10);
            assert_eq!(model.defect_dimension(z).unwrap(), 1);
        }
    }

    #[test]
    fn green_identity_random_elements() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
        for data in [moment_101(), moment_111(), tangential_node_i()] {
            let model = AdjointRelationModel::new(&data).unwrap();
            let kr = model.metric().clone();
            for _ in 0..40 {
                let mut rand_vec = |len: usize| {
                    CVec::from_iterator(len, (0..len).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)))
                };
                let f = model.element_from_free(rand_vec(model.r), rand_vec(model.d), rand_vec(model.d));
                let g = model.element_from_free(rand_vec(model.r), rand_vec(model.d), rand_vec(model.d));
                // (f', g) - (f, g') in the product metric
                let ip_h = |a: &CVec, b: &CVec| (b.adjoint() * &kr * a)[(0, 0)];
                let ip_l = |a: &CVec, b: &CVec| (b.adjoint() * a)[(0, 0)];
                let lhs = ip_h(&f.gp, &g.g) + ip_l(&f.vp, &g.v) - ip_h(&f.g, &g.gp) - ip_l(&f.v, &g.vp);
                let (f1, f2) = boundary_map(&model, &f).unwrap();
                let (g1, g2) = boundary_map(&model, &g).unwrap();
                let rhs = ip_l(&f1, &g2) - ip_l(&f2, &g1);
                assert!(
                    (lhs - rhs).norm() <= 1e-10 * (1.0 + lhs.norm()),
                    "Green identity residual {:.3e}",
                    (lhs - rhs).norm()
                );
            }
        }
    }

    #[test]
    fn weyl_pair_values_and_membership() {
        let model = AdjointRelationModel::new(&moment_101()).unwrap();
        let wp = weyl_pair(&model, ExtensionSpec::Infinity);
        // (phi, psi) = (1/2, -1/(2z))
        let z = c(0.0, 1.0);
        let (phi, psi) = wp.pair_at(z).unwrap();
        assert!((phi[(0, 0)] - cr(0.5)).norm() < 1e-12);
        assert!((psi[(0, 0)] + cr(1.0) / (z * 2.0)).norm() < 1e-12);
        // conjugate symmetry
        let (_, psic) = wp.pair_at(z.conj()).unwrap();
        assert!((psic[(0, 0)] - psi[(0, 0)].conj()).norm() < 1e-12);
        // membership on the default grid
        let rep = membership_check(&wp, &default_grid(), Tolerance::default());
        assert!(rep.all_passed(), "weyl pair membership failed:\n{rep}");
    }

    #[test]
    fn gamma_field_factorizes_kernel() {
        let model = AdjointRelationModel::new(&moment_101()).unwrap();
        let ext = ExtensionSpec::Infinity;
        let pts = [c(0.0, 1.0), c(0.0, 2.0), c(1.0, 1.0), c(-0.5, -1.5)];
        for &z in &pts {
            for &w in &pts {
                let psi_z = l_resolvent_direct(&model, &ext, z).unwrap();
                let psi_w = l_resolvent_direct(&model, &ext, w).unwrap();
                let lhs = (&psi_z - psi_w.adjoint()) / (z - w.conj()) - &psi_z * psi_w.adjoint();
                let gz = gamma_field(&model, &ext, z.conj()).unwrap();
                let gw = gamma_field(&model, &ext, w.conj()).unwrap();
                let rhs = gz.adjoint() * model.metric() * gw;
                assert!(fnorm(&(lhs - rhs)) < 1e-10, "factorization fails at ({z}, {w})");
            }
        }
    }

    #[test]
    fn spectral_measures_hand_cases() {
        let model = AdjointRelationModel::new(&moment_101()).unwrap();
        let meas = spectral_measure_direct(&model, &graph(0.0)).unwrap();
        assert_eq!(meas.atoms.len(), 2);
        assert!((meas.atoms[0].t + 1.0).abs() < 1e-9);
        assert!((meas.atoms[1].t - 1.0).abs() < 1e-9);
        for a in &meas.atoms {
            assert!((a.weight[(0, 0)] - cr(0.5)).norm() < 1e-9);
        }

        let model = AdjointRelationModel::new(&moment_111()).unwrap();
        let meas = spectral_measure_direct(&model, &graph(-1.0)).unwrap();
        assert_eq!(meas.atoms.len(), 1);
        assert!((meas.atoms[0].t - 1.0).abs() < 1e-9);
        assert!((meas.atoms[0].weight[(0, 0)] - cr(1.0)).norm() < 1e-9);
    }

    #[test]
    fn vanishing_resolvent_direction() {
        // C2 = 0 and tau = 0 force psi to vanish
        let data = AipDataSet::new_regular(
            CMat::zeros(1, 1),
            CMat::identity(1, 1),
            CMat::zeros(1, 1),
            CMat::zeros(1, 1),
            CMat::identity(1, 1),
        )
        .unwrap();
        let model = AdjointRelationModel::new(&data).unwrap();
        let psi = l_resolvent_direct(&model, &graph(0.0), c(0.3, 1.0)).unwrap();
        assert!(psi[(0, 0)].norm() < 1e-13);
    }

    #[test]
    fn extension_containment_of_degenerate_part() {
        // the pinned dictionary's extension contains every kernel generator
        let data = moment_111();
        let model = AdjointRelationModel::new(&data).unwrap();
        let theta = build_theta(&data).unwrap();
        let ext = ExtensionSpec::from_constant_pair(
            &CMat::zeros(1, 1),
            &CMat::identity(1, 1),
            &theta.v,
        )
        .unwrap();
        for e in kernel_boundary_elements(&data).unwrap() {
            let (g1, g2) = boundary_map(&model, &e).unwrap();
            let resid = ext.contains(1, &g1, &g2).unwrap();
            assert!(resid < 1e-10, "containment residual {resid:.3e}");
        }
        // and the mismatched extension does not
        let wrong = ExtensionSpec::Graph { tau: CMat::zeros(1, 1) };
        let e = &kernel_boundary_elements(&data).unwrap()[0];
        let (g1, g2) = boundary_map(&model, e).unwrap();
        assert!(wrong.contains(1, &g1, &g2).unwrap() > 0.1);
    }

    #[test]
    fn rejects_non_selfadjoint_boundary() {
        let model = AdjointRelationModel::new(&moment_101()).unwrap();
        let bad = ExtensionSpec::Graph { tau: CMat::from_element(1, 1, c(0.0, 1.0)) };
        assert!(matches!(
            l_resolvent_direct(&model, &bad, c(0.0, 1.0)),
            Err(OracleError::BoundaryNotSelfadjoint(_))
        ));
    }

    #[test]
    fn oracle_matches_lft_on_hand_data() {
        // the central cross-check, on the three hand cases with a couple of
        // Hermitian parameters each
        let params = [(0.0, 1.0), (1.0, 0.0), (1.0, 1.0), (-0.7, 1.0)];
        for data in [moment_101(), tangential_node_i()] {
            let model = AdjointRelationModel::new(&data).unwrap();
            let theta = if fnorm(&(&data.b2 - CMat::identity(data.n, data.n))) < 1e-12 {
                build_theta(&data).unwrap()
            } else {
                crate::aip::build_theta_shifted(&data, 0.0).unwrap()
            };
            for &(q, p) in &params {
                let qv = CMat::from_element(1, 1, cr(q));
                let pv = CMat::from_element(1, 1, cr(p));
                let param = NevanlinnaObject::constant_pair(qv.clone(), pv.clone()).unwrap();
                let sol = crate::aip::lft_solve(&theta, &param).unwrap();
                let ext = ExtensionSpec::from_constant_pair(&qv, &pv, &theta.v).unwrap();
                for &z in &default_grid() {
                    let m_lft = sol.m_value(z).unwrap();
                    let m_dir = m_direct(&model, &ext, z).unwrap();
                    assert!(
                        fnorm(&(&m_lft - &m_dir)) <= 1e-9 * fnorm(&m_dir).max(1.0),
                        "mismatch for (q,p)=({q},{p}) at {z}: {m_lft} vs {m_dir}"
                    );
                }
            }
        }
    }
}
