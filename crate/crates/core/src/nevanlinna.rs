//! Closed-form representations of matrix-valued Nevanlinna functions and
//! pairs, their kernel Gram matrices, pair normalization and sampled
//! class-membership verification.
//!
//! A pair `{Phi, Psi}` of `d x d` matrix functions holomorphic off the real
//! axis belongs to the class when the kernel
//!
//! ```text
//! N_w(z) = (Psi(conj z)* Phi(conj w) - Phi(conj z)* Psi(conj w)) / (z - conj w)
//! ```
//!
//! is nonnegative, the pairing `Psi(conj z)* Phi(z)` is Hermitian, and
//! `Phi(z) - z Psi(z)` is invertible off the axis. A function `m` embeds as
//! the pair `{I, m}`.

use crate::matkit::{
    c, cr, fnorm, herm_eig, hermitian_residual, is_finite, solve_linear, C64, CMat, CVec,
    Tolerance,
};
use crate::polyx::MatPoly;
use crate::report::VerificationReport;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NevanlinnaError {
    #[error("evaluation point {0} coincides with a pole of the representation")]
    PoleAtPoint(C64),
    #[error("Phi(z) - z Psi(z) is singular at {0}")]
    NormalizationSingular(C64),
    #[error("invalid object: {0}")]
    InvalidObject(String),
    #[error("non-finite data")]
    NonFinite,
}

type Result<T> = std::result::Result<T, NevanlinnaError>;

/// The fixed eight-point verification grid used by default throughout the
/// crate: conjugate-closed, with points in both half-planes.
pub fn default_grid() -> Vec<C64> {
    vec![
        c(0.0, 1.0),
        c(0.0, -1.0),
        c(0.0, 2.0),
        c(0.0, -2.0),
        c(1.0, 1.0),
        c(-1.0, -1.0),
        c(-1.0, 2.0),
        c(1.0, -2.0),
    ]
}

/// A discrete matrix measure: finitely many real atoms with Hermitian PSD
/// weights of a common dimension.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    pub atoms: Vec<MeasureAtom>,
    dim: usize,
}

#[derive(Clone, Debug)]
pub struct MeasureAtom {
    pub t: f64,
    pub weight: CMat,
}

impl DiscreteMeasure {
    pub fn new(dim: usize, atoms: Vec<MeasureAtom>) -> Result<Self> {
        for a in &atoms {
            if !a.t.is_finite() || !is_finite(&a.weight) {
                return Err(NevanlinnaError::NonFinite);
            }
            if a.weight.nrows() != dim || a.weight.ncols() != dim {
                return Err(NevanlinnaError::InvalidObject(format!(
                    "weight at t={} is {}x{}, expected {dim}x{dim}",
                    a.t,
                    a.weight.nrows(),
                    a.weight.ncols()
                )));
            }
            let scale = fnorm(&a.weight).max(1.0);
            if hermitian_residual(&a.weight) > 1e-10 * scale {
                return Err(NevanlinnaError::InvalidObject(format!(
                    "weight at t={} is not Hermitian",
                    a.t
                )));
            }
            let (w, _) = herm_eig(&a.weight).map_err(|e| NevanlinnaError::InvalidObject(e.to_string()))?;
            if !w.is_empty() && w[0] < -1e-10 * scale {
                return Err(NevanlinnaError::InvalidObject(format!(
                    "weight at t={} is not PSD (min eig {:.3e})",
                    a.t, w[0]
                )));
            }
        }
        let mut sorted: Vec<&MeasureAtom> = atoms.iter().collect();
        sorted.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
        for pair in sorted.windows(2) {
            if (pair[1].t - pair[0].t).abs() <= 1e-12 * (1.0 + pair[0].t.abs()) {
                return Err(NevanlinnaError::InvalidObject(format!(
                    "duplicate atom location t={}",
                    pair[0].t
                )));
            }
        }
        let mut atoms = atoms;
        atoms.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
        Ok(DiscreteMeasure { atoms, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// j-th power moment `sum_k t_k^j W_k`.
    pub fn moment(&self, j: usize) -> CMat {
        let mut s = CMat::zeros(self.dim, self.dim);
        for a in &self.atoms {
            s += &a.weight * cr(a.t.powi(j as i32));
        }
        s
    }

    /// Stieltjes transform `sum_k W_k / (t_k - z)`.
    pub fn stieltjes(&self, z: C64) -> Result<CMat> {
        let mut s = CMat::zeros(self.dim, self.dim);
        for a in &self.atoms {
            let den = cr(a.t) - z;
            if den.norm() <= 1e-14 * (1.0 + a.t.abs()) {
                return Err(NevanlinnaError::PoleAtPoint(z));
            }
            s += &a.weight / den;
        }
        Ok(s)
    }

    pub fn total_mass(&self) -> CMat {
        self.moment(0)
    }
}

/// A matrix Nevanlinna function or pair in closed form. All variants are
/// exactly evaluable at any non-real point (and at real points away from
/// atoms and poles).
#[derive(Clone, Debug)]
pub enum NevanlinnaObject {
    /// Constant pair `{Phi, Psi} = {p, q}`.
    ConstantPair { q: CMat, p: CMat },
    /// `m(z) = alpha + beta z` as the pair `{I, m}`.
    AffineFunction { alpha: CMat, beta: CMat },
    /// `m(z) = alpha + beta z + sum_k W_k/(t_k - z)` as the pair `{I, m}`.
    HerglotzOfMeasure {
        measure: DiscreteMeasure,
        alpha: CMat,
        beta: CMat,
    },
    /// Unreduced quotient produced by the linear-fractional solver:
    /// the pair `{Phi, Psi} = {den(z), num(z)}` with matrix-polynomial
    /// entries; the solution function is `num(z) den(z)^{-1}`.
    RationalQuotient { num: MatPoly, den: MatPoly },
}

fn ensure_hermitian_named(m: &CMat, what: &str) -> Result<()> {
    if hermitian_residual(m) > 1e-10 * fnorm(m).max(1.0) {
        return Err(NevanlinnaError::InvalidObject(format!("{what} must be Hermitian")));
    }
    Ok(())
}

fn ensure_psd_named(m: &CMat, what: &str) -> Result<()> {
    ensure_hermitian_named(m, what)?;
    let (w, _) = herm_eig(m).map_err(|e| NevanlinnaError::InvalidObject(e.to_string()))?;
    if !w.is_empty() && w[0] < -1e-10 * fnorm(m).max(1.0) {
        return Err(NevanlinnaError::InvalidObject(format!(
            "{what} must be PSD (min eig {:.3e})",
            w[0]
        )));
    }
    Ok(())
}

impl NevanlinnaObject {
    /// Constant pair `(q, p)`; checks the Hermitian pairing `q* p = p* q`
    /// and invertibility of `p - z q` at `z = +/- i`.
    pub fn constant_pair(q: CMat, p: CMat) -> Result<Self> {
        let d = q.nrows();
        if !q.is_square() || !p.is_square() || p.nrows() != d {
            return Err(NevanlinnaError::InvalidObject("q, p must be square of equal size".into()));
        }
        if !is_finite(&q) || !is_finite(&p) {
            return Err(NevanlinnaError::NonFinite);
        }
        let pairing = q.adjoint() * &p;
        if hermitian_residual(&pairing) > 1e-10 * fnorm(&pairing).max(1.0) {
            return Err(NevanlinnaError::InvalidObject(
                "q* p is not Hermitian; not a valid pair".into(),
            ));
        }
        for z in [c(0.0, 1.0), c(0.0, -1.0)] {
            let den = &p - &q * z;
            if solve_linear(&den, &CMat::identity(d, d)).is_err() {
                return Err(NevanlinnaError::InvalidObject(format!(
                    "p - z q singular at z = {z}; not a valid pair"
                )));
            }
        }
        Ok(NevanlinnaObject::ConstantPair { q, p })
    }

    pub fn affine(alpha: CMat, beta: CMat) -> Result<Self> {
        if !alpha.is_square() || alpha.shape() != beta.shape() {
            return Err(NevanlinnaError::InvalidObject("alpha, beta must be square of equal size".into()));
        }
        if !is_finite(&alpha) || !is_finite(&beta) {
            return Err(NevanlinnaError::NonFinite);
        }
        ensure_hermitian_named(&alpha, "alpha")?;
        ensure_psd_named(&beta, "beta")?;
        Ok(NevanlinnaObject::AffineFunction { alpha, beta })
    }

    pub fn herglotz(measure: DiscreteMeasure, alpha: CMat, beta: CMat) -> Result<Self> {
        let d = measure.dim();
        if alpha.shape() != (d, d) || beta.shape() != (d, d) {
            return Err(NevanlinnaError::InvalidObject("alpha/beta dimension mismatch with measure".into()));
        }
        ensure_hermitian_named(&alpha, "alpha")?;
        ensure_psd_named(&beta, "beta")?;
        Ok(NevanlinnaObject::HerglotzOfMeasure { measure, alpha, beta })
    }

    /// Used by the LFT solver; the pair is certified by construction and by
    /// sampled checks, not revalidated here.
    pub fn rational_quotient(num: MatPoly, den: MatPoly) -> Self {
        NevanlinnaObject::RationalQuotient { num, den }
    }

    pub fn dim(&self) -> usize {
        match self {
            NevanlinnaObject::ConstantPair { p, .. } => p.nrows(),
            NevanlinnaObject::AffineFunction { alpha, .. } => alpha.nrows(),
            NevanlinnaObject::HerglotzOfMeasure { alpha, .. } => alpha.nrows(),
            NevanlinnaObject::RationalQuotient { den, .. } => den.rows,
        }
    }

    /// Pair values `(Phi(z), Psi(z))`. A function `m` is returned as
    /// `(I, m(z))`; the LFT quotient returns its unreduced columns.
    pub fn eval(&self, z: C64) -> Result<(CMat, CMat)> {
        let d = self.dim();
        match self {
            NevanlinnaObject::ConstantPair { q, p } => Ok((p.clone(), q.clone())),
            NevanlinnaObject::AffineFunction { alpha, beta } => {
                Ok((CMat::identity(d, d), alpha + beta * z))
            }
            NevanlinnaObject::HerglotzOfMeasure { measure, alpha, beta } => {
                let m = alpha + beta * z + measure.stieltjes(z)?;
                Ok((CMat::identity(d, d), m))
            }
            NevanlinnaObject::RationalQuotient { num, den } => Ok((den.eval(z), num.eval(z))),
        }
    }

    /// Derivatives `(Phi'(z), Psi'(z))`, exact per variant.
    pub fn eval_deriv(&self, z: C64) -> Result<(CMat, CMat)> {
        let d = self.dim();
        match self {
            NevanlinnaObject::ConstantPair { .. } => Ok((CMat::zeros(d, d), CMat::zeros(d, d))),
            NevanlinnaObject::AffineFunction { beta, .. } => Ok((CMat::zeros(d, d), beta.clone())),
            NevanlinnaObject::HerglotzOfMeasure { measure, beta, .. } => {
                let mut s = beta.clone();
                for a in &measure.atoms {
                    let den = cr(a.t) - z;
                    if den.norm() <= 1e-14 * (1.0 + a.t.abs()) {
                        return Err(NevanlinnaError::PoleAtPoint(z));
                    }
                    s += &a.weight / (den * den);
                }
                Ok((CMat::zeros(d, d), s))
            }
            NevanlinnaObject::RationalQuotient { num, den } => {
                Ok((den.deriv().eval(z), num.deriv().eval(z)))
            }
        }
    }

    /// Function value `m(z) = Psi(z) Phi(z)^{-1}` where defined.
    pub fn m_value(&self, z: C64) -> Result<CMat> {
        let (phi, psi) = self.eval(z)?;
        // m = Psi Phi^{-1}  <=>  m Phi = Psi  <=>  Phi* m* = Psi*
        let x = solve_linear(&phi.adjoint(), &psi.adjoint())
            .map_err(|_| NevanlinnaError::PoleAtPoint(z))?;
        Ok(x.adjoint())
    }

    /// Like [`Self::m_value`], but resolves removable singularities of the
    /// unreduced quotient at non-real points (numerator and denominator
    /// sharing a singular direction, e.g. at interpolation nodes) by a
    /// three-level extrapolated limit in the vertical direction. Genuine
    /// poles on the axis still error.
    pub fn m_value_or_limit(&self, z: C64) -> Result<CMat> {
        match self.m_value(z) {
            Ok(m) => Ok(m),
            Err(e) if z.im != 0.0 => {
                let h = 1e-4 * (1.0 + z.norm());
                let dir = c(0.0, z.im.signum());
                let mut vals = Vec::with_capacity(3);
                for k in 0..3 {
                    let step = dir * cr(h / f64::powi(2.0, k));
                    match self.m_value(z + step) {
                        Ok(m) => vals.push(m),
                        Err(_) => return Err(e),
                    }
                }
                // error model a h + b h^2: (8 f(h/4) - 6 f(h/2) + f(h)) / 3
                Ok((&vals[2] * cr(8.0) - &vals[1] * cr(6.0) + &vals[0]) / cr(3.0))
            }
            Err(e) => Err(e),
        }
    }
}

/// Values of matrix Nevanlinna pairs on demand; implemented by
/// [`NevanlinnaObject`] and by the direct-extension solver, so kernel and
/// membership machinery can run on either.
pub trait PairFunction {
    fn dim(&self) -> usize;
    fn pair_at(&self, z: C64) -> Result<(CMat, CMat)>;
    fn pair_deriv_at(&self, z: C64) -> Result<(CMat, CMat)>;
}

impl PairFunction for NevanlinnaObject {
    fn dim(&self) -> usize {
        NevanlinnaObject::dim(self)
    }
    fn pair_at(&self, z: C64) -> Result<(CMat, CMat)> {
        self.eval(z)
    }
    fn pair_deriv_at(&self, z: C64) -> Result<(CMat, CMat)> {
        self.eval_deriv(z)
    }
}

/// Normalized pair values `(phi(z), psi(z)) = (Phi W^{-1}, Psi W^{-1})` with
/// `W = Phi(z) - z Psi(z)`, so that `phi(z) - z psi(z) = I`.
pub fn normalized_at(f: &dyn PairFunction, z: C64) -> Result<(CMat, CMat)> {
    let (phi, psi) = f.pair_at(z)?;
    let w = &phi - &psi * z;
    let d = f.dim();
    let winv = solve_linear(&w, &CMat::identity(d, d))
        .map_err(|_| NevanlinnaError::NormalizationSingular(z))?;
    Ok((&phi * &winv, &psi * &winv))
}

/// Normalized pair values over a grid.
pub fn normalize(f: &dyn PairFunction, grid: &[C64]) -> Result<Vec<(CMat, CMat)>> {
    grid.iter().map(|&z| normalized_at(f, z)).collect()
}

/// Kernel value `N_w(z)` with the conjugate-pair limit handled through the
/// exact derivative. `z = w` on the real axis is rejected.
pub fn kernel_value(f: &dyn PairFunction, z: C64, w: C64) -> Result<CMat> {
    let den = z - w.conj();
    let scale = z.norm().max(w.norm()).max(1.0);
    let (phi_zc, psi_zc) = f.pair_at(z.conj())?;
    if den.norm() > 1e-10 * scale {
        let (phi_wc, psi_wc) = f.pair_at(w.conj())?;
        Ok((psi_zc.adjoint() * phi_wc - phi_zc.adjoint() * psi_wc) / den)
    } else {
        // w -> conj(z): N = Phi(conj z)* Psi'(z) - Psi(conj z)* Phi'(z)
        let (dphi, dpsi) = f.pair_deriv_at(z)?;
        Ok(phi_zc.adjoint() * dpsi - psi_zc.adjoint() * dphi)
    }
}

/// Gram matrix of the kernel over points and directions:
/// `G[k, j] = v_k* N_{w_j}(w_k) v_j`.
pub fn pair_kernel_gram(f: &dyn PairFunction, points: &[C64], directions: &[CVec]) -> Result<CMat> {
    assert_eq!(points.len(), directions.len(), "one direction per point");
    let p = points.len();
    let mut g = CMat::zeros(p, p);
    for k in 0..p {
        for j in 0..p {
            let n = kernel_value(f, points[k], points[j])?;
            let val = (directions[k].adjoint() * &n * &directions[j])[(0, 0)];
            g[(k, j)] = val;
        }
    }
    // enforce exact Hermitian symmetry of the Gram before spectral tests
    Ok(crate::matkit::hermitian_part(&g))
}

/// Full block Gram over a grid using all standard basis directions at every
/// point; this is the PSD object behind class membership.
pub fn kernel_gram_full(f: &dyn PairFunction, grid: &[C64]) -> Result<CMat> {
    let d = f.dim();
    let mut points = Vec::with_capacity(grid.len() * d);
    let mut dirs = Vec::with_capacity(grid.len() * d);
    for &z in grid {
        for a in 0..d {
            let mut e = CVec::zeros(d);
            e[a] = cr(1.0);
            points.push(z);
            dirs.push(e);
        }
    }
    pair_kernel_gram(f, &points, &dirs)
}

/// Sampled class-membership verification: kernel nonnegativity over the
/// grid, Hermitian pairing, and invertibility of `Phi(z) - z Psi(z)`.
/// Failures are report entries; points where the representation itself has
/// a pole are recorded as skipped.
pub fn membership_check(f: &dyn PairFunction, grid: &[C64], tol: Tolerance) -> VerificationReport {
    let mut rep = VerificationReport::new();
    let d = f.dim();

    // kernel PSD over the evaluable part of the grid
    let evaluable: Vec<C64> = grid
        .iter()
        .copied()
        .filter(|&z| f.pair_at(z).is_ok() && f.pair_at(z.conj()).is_ok())
        .collect();
    if evaluable.len() < grid.len() {
        rep.flag_check(
            "grid-evaluable",
            "representation-poles",
            true,
            &format!("{} of {} grid points evaluable", evaluable.len(), grid.len()),
        );
    }
    match kernel_gram_full(f, &evaluable) {
        Ok(g) => match herm_eig(&g) {
            Ok((w, _)) => {
                let min_eig = if w.is_empty() { 0.0 } else { w[0] };
                let bound = -tol.threshold(fnorm(&g));
                rep.bound_check("kernel-psd", "pair-kernel-gram", min_eig, bound);
            }
            Err(e) => {
                rep.flag_check("kernel-psd", "pair-kernel-gram", false, &e.to_string());
            }
        },
        Err(e) => {
            rep.flag_check("kernel-psd", "pair-kernel-gram", false, &e.to_string());
        }
    }

    // Hermitian pairing and denominator invertibility per point
    for &z in &evaluable {
        let (phi, psi) = match (f.pair_at(z), f.pair_at(z.conj())) {
            (Ok(v), Ok(vc)) => {
                let sym = vc.1.adjoint() * &v.0 - vc.0.adjoint() * &v.1;
                let scale = (fnorm(&v.0) + fnorm(&v.1)).powi(2).max(1.0);
                rep.residual_check(
                    &format!("pairing-hermitian@{z}"),
                    "symmetry-identity",
                    fnorm(&sym),
                    tol.threshold(scale),
                );
                v
            }
            _ => continue,
        };
        let w = &phi - &psi * z;
        let cond = crate::matkit::cond_estimate(&w);
        let pass = cond.is_finite() && cond < 1e13;
        rep.flag_check(
            &format!("denominator-invertible@{z}"),
            "pair-condition-iii",
            pass,
            &format!("cond {:.3e}", cond),
        );
        let _ = d;
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m_of(obj: &NevanlinnaObject, z: C64) -> CMat {
        obj.m_value(z).unwrap()
    }

    fn delta(t: f64, w: f64) -> DiscreteMeasure {
        DiscreteMeasure::new(
            1,
            vec![MeasureAtom {
                t,
                weight: CMat::from_element(1, 1, cr(w)),
            }],
        )
        .unwrap()
    }

    fn herglotz_of(measure: DiscreteMeasure) -> NevanlinnaObject {
        let d = measure.dim();
        NevanlinnaObject::herglotz(measure, CMat::zeros(d, d), CMat::zeros(d, d)).unwrap()
    }

    #[test]
    fn eval_examples() {
        let obj = NevanlinnaObject::constant_pair(CMat::zeros(1, 1), CMat::identity(1, 1)).unwrap();
        let (phi, psi) = obj.eval(c(0.3, 1.7)).unwrap();
        assert_eq!(phi[(0, 0)], cr(1.0));
        assert_eq!(psi[(0, 0)], cr(0.0));

        // point mass at 0: m(i) = -1/i = i
        let obj = herglotz_of(delta(0.0, 1.0));
        let m = m_of(&obj, c(0.0, 1.0));
        assert!((m[(0, 0)] - c(0.0, 1.0)).norm() < 1e-14);

        let obj = NevanlinnaObject::affine(CMat::zeros(1, 1), CMat::identity(1, 1)).unwrap();
        let (phi, psi) = obj.eval(c(0.0, 2.0)).unwrap();
        assert_eq!(phi[(0, 0)], cr(1.0));
        assert!((psi[(0, 0)] - c(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn normalize_hand_case() {
        // {I, -1/z} at z=i: phi = 1/2, psi = i/2, and phi - z psi = 1
        let obj = herglotz_of(delta(0.0, 1.0));
        let (phi, psi) = normalized_at(&obj, c(0.0, 1.0)).unwrap();
        assert!((phi[(0, 0)] - cr(0.5)).norm() < 1e-14);
        assert!((psi[(0, 0)] - c(0.0, 0.5)).norm() < 1e-14);
        let ident = &phi - &psi * c(0.0, 1.0);
        assert!((ident[(0, 0)] - cr(1.0)).norm() < 1e-14);
    }

    /// Test-only wrapper that multiplies a pair by an invertible constant,
    /// producing an equivalent pair.
    struct Scaled<'a>(&'a NevanlinnaObject, C64);
    impl PairFunction for Scaled<'_> {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn pair_at(&self, z: C64) -> super::Result<(CMat, CMat)> {
            let (phi, psi) = self.0.eval(z)?;
            Ok((phi * self.1, psi * self.1))
        }
        fn pair_deriv_at(&self, z: C64) -> super::Result<(CMat, CMat)> {
            let (dphi, dpsi) = self.0.eval_deriv(z)?;
            Ok((dphi * self.1, dpsi * self.1))
        }
    }

    #[test]
    fn normalize_idempotent_and_class_invariant() {
        let obj = herglotz_of(delta(0.5, 2.0));
        let scaled = Scaled(&obj, c(2.0, 0.7));
        for &z in &default_grid() {
            let (phi, psi) = normalized_at(&obj, z).unwrap();
            // renormalizing the normalized values changes nothing
            let w = &phi - &psi * z;
            assert!(fnorm(&(&w - &CMat::identity(1, 1))) < 1e-12);
            // an equivalent pair normalizes to the same values
            let (phi2, psi2) = normalized_at(&scaled, z).unwrap();
            assert!(fnorm(&(&phi2 - &phi)) < 1e-10);
            assert!(fnorm(&(&psi2 - &psi)) < 1e-10);
        }
    }

    #[test]
    fn kernel_hand_values() {
        // m(z) = z at w = i: N = 1
        let obj = NevanlinnaObject::affine(CMat::zeros(1, 1), CMat::identity(1, 1)).unwrap();
        let n = kernel_value(&obj, c(0.0, 1.0), c(0.0, 1.0)).unwrap();
        assert!((n[(0, 0)] - cr(1.0)).norm() < 1e-14);

        // m(z) = -1/z at w = i: N = 1
        let obj = herglotz_of(delta(0.0, 1.0));
        let n = kernel_value(&obj, c(0.0, 1.0), c(0.0, 1.0)).unwrap();
        assert!((n[(0, 0)] - cr(1.0)).norm() < 1e-14);

        // constant Hermitian m: kernel vanishes
        let obj = NevanlinnaObject::constant_pair(CMat::identity(1, 1), CMat::from_element(1, 1, cr(3.0)))
            .unwrap();
        let g = kernel_gram_full(&obj, &default_grid()).unwrap();
        assert!(fnorm(&g) < 1e-13);
    }

    #[test]
    fn conjugate_pair_entry_uses_derivative() {
        // grid contains i and -i; the (i, -i) kernel entry is the z->conj w
        // limit, equal to m'(i) for a function pair
        let obj = herglotz_of(delta(0.0, 1.0)); // m = -1/z, m' = 1/z^2
        let n = kernel_value(&obj, c(0.0, 1.0), c(0.0, -1.0)).unwrap();
        // m'(i) = 1/i^2 = -1
        assert!((n[(0, 0)] - cr(-1.0)).norm() < 1e-13);
    }

    #[test]
    fn membership_examples() {
        let tol = Tolerance::default();
        let grid = default_grid();

        let good = NevanlinnaObject::affine(CMat::zeros(1, 1), CMat::identity(1, 1)).unwrap();
        assert!(membership_check(&good, &grid, tol).all_passed());

        // m(z) = -z is not in the class: kernel value -1 at w = i
        let bad = NevanlinnaObject::RationalQuotient {
            num: MatPoly {
                rows: 1,
                cols: 1,
                coeffs: vec![CMat::zeros(1, 1), CMat::from_element(1, 1, cr(-1.0))],
            },
            den: MatPoly::constant(CMat::identity(1, 1)),
        };
        let rep = membership_check(&bad, &grid, tol);
        assert!(!rep.all_passed());
        assert!(!rep.find("kernel-psd").unwrap().pass);

        let const_pair =
            NevanlinnaObject::constant_pair(CMat::identity(2, 2), crate::matkit::hermitian_part(
                &CMat::from_row_slice(2, 2, &[cr(1.0), c(0.0, 0.4), c(0.0, -0.4), cr(-2.0)]),
            ))
            .unwrap();
        assert!(membership_check(&const_pair, &grid, tol).all_passed());
    }

    #[test]
    fn closed_form_variants_pass_membership() {
        let tol = Tolerance::default();
        let grid = default_grid();
        let beta = crate::matkit::hermitian_part(&CMat::from_row_slice(
            2,
            2,
            &[cr(2.0), c(0.3, 0.1), c(0.3, -0.1), cr(1.0)],
        ));
        let alpha = crate::matkit::hermitian_part(&CMat::from_row_slice(
            2,
            2,
            &[cr(-1.0), c(0.2, 0.7), c(0.2, -0.7), cr(0.5)],
        ));
        let objs = vec![
            NevanlinnaObject::constant_pair(CMat::identity(2, 2), alpha.clone()).unwrap(),
            NevanlinnaObject::affine(alpha.clone(), beta.clone()).unwrap(),
            NevanlinnaObject::herglotz(
                DiscreteMeasure::new(
                    2,
                    vec![
                        MeasureAtom {
                            t: -1.0,
                            weight: CMat::from_row_slice(2, 2, &[cr(1.0), cr(0.5), cr(0.5), cr(0.5)]),
                        },
                        MeasureAtom {
                            t: 2.0,
                            weight: CMat::from_row_slice(2, 2, &[cr(0.5), cr(0.0), cr(0.0), cr(0.0)]),
                        },
                    ],
                )
                .unwrap(),
                alpha,
                beta,
            )
            .unwrap(),
        ];
        for obj in &objs {
            let rep = membership_check(obj, &grid, tol);
            assert!(rep.all_passed(), "membership failed:\n{rep}");
            let g = kernel_gram_full(obj, &grid).unwrap();
            let (w, _) = herm_eig(&g).unwrap();
            assert!(w[0] >= -1e-10);
        }
    }

    #[test]
    fn eval_respects_conjugate_symmetry() {
        let objs = vec![
            NevanlinnaObject::constant_pair(
                CMat::from_row_slice(1, 1, &[cr(0.7)]),
                CMat::from_row_slice(1, 1, &[cr(1.3)]),
            )
            .unwrap(),
            NevanlinnaObject::affine(CMat::from_element(1, 1, cr(0.4)), CMat::from_element(1, 1, cr(2.0)))
                .unwrap(),
            herglotz_of(delta(1.5, 0.7)),
        ];
        for obj in &objs {
            for &z in &default_grid() {
                let (phi, psi) = obj.eval(z).unwrap();
                let (phic, psic) = obj.eval(z.conj()).unwrap();
                assert!(fnorm(&(phic - phi.adjoint())) < 1e-12);
                assert!(fnorm(&(psic - psi.adjoint())) < 1e-12);
            }
        }
    }

    #[test]
    fn herglotz_gram_matches_summation_oracle() {
        // independent oracle: G[k,j] = v_k* (beta + sum W/((t - w_k)(t - conj w_j))) v_j
        let w1 = CMat::from_row_slice(2, 2, &[cr(1.0), c(0.2, 0.1), c(0.2, -0.1), cr(0.3)]);
        let w2 = CMat::from_row_slice(2, 2, &[cr(0.4), cr(0.0), cr(0.0), cr(0.9)]);
        let beta = CMat::from_row_slice(2, 2, &[cr(0.5), cr(0.0), cr(0.0), cr(0.25)]);
        let measure = DiscreteMeasure::new(
            2,
            vec![
                MeasureAtom { t: -0.7, weight: w1.clone() },
                MeasureAtom { t: 1.9, weight: w2.clone() },
            ],
        )
        .unwrap();
        let obj = NevanlinnaObject::herglotz(measure, CMat::zeros(2, 2), beta.clone()).unwrap();

        let grid = default_grid();
        let mut points = Vec::new();
        let mut dirs = Vec::new();
        for (i, &z) in grid.iter().enumerate() {
            let mut e = CVec::zeros(2);
            e[i % 2] = cr(1.0);
            points.push(z);
            dirs.push(e);
        }
        let g = pair_kernel_gram(&obj, &points, &dirs).unwrap();

        let mut oracle = CMat::zeros(points.len(), points.len());
        for k in 0..points.len() {
            for j in 0..points.len() {
                let mut n = beta.clone();
                for (t, w) in [(-0.7, &w1), (1.9, &w2)] {
                    n += w / ((cr(t) - points[k]) * (cr(t) - points[j].conj()));
                }
                oracle[(k, j)] = (dirs[k].adjoint() * n * &dirs[j])[(0, 0)];
            }
        }
        let oracle = crate::matkit::hermitian_part(&oracle);
        assert!(fnorm(&(&g - &oracle)) <= 1e-12 * fnorm(&oracle).max(1.0));
    }

    #[test]
    fn invalid_objects_rejected() {
        // q* p not Hermitian
        let q = CMat::from_row_slice(1, 1, &[c(0.0, 1.0)]);
        let p = CMat::identity(1, 1);
        assert!(NevanlinnaObject::constant_pair(q, p).is_err());
        // beta not PSD
        assert!(NevanlinnaObject::affine(CMat::zeros(1, 1), CMat::from_element(1, 1, cr(-1.0))).is_err());
        // duplicate atoms
        assert!(DiscreteMeasure::new(
            1,
            vec![
                MeasureAtom { t: 1.0, weight: CMat::identity(1, 1) },
                MeasureAtom { t: 1.0, weight: CMat::identity(1, 1) },
            ],
        )
        .is_err());
    }

    #[test]
    fn measure_moments_and_mass() {
        let meas = DiscreteMeasure::new(
            1,
            vec![
                MeasureAtom { t: 1.0, weight: CMat::from_element(1, 1, cr(0.5)) },
                MeasureAtom { t: -1.0, weight: CMat::from_element(1, 1, cr(0.5)) },
            ],
        )
        .unwrap();
        assert!((meas.moment(0)[(0, 0)] - cr(1.0)).norm() < 1e-15);
        assert!(meas.moment(1)[(0, 0)].norm() < 1e-15);
        assert!((meas.moment(2)[(0, 0)] - cr(1.0)).norm() < 1e-15);
        // Stieltjes transform z/(1-z^2) at z = 2i: 2i/(1+4) hmm: (1/2)/(1-2i) + (1/2)/(-1-2i)
        let z = c(0.0, 2.0);
        let expect = z / (cr(1.0) - z * z);
        assert!((meas.stieltjes(z).unwrap()[(0, 0)] - expect).norm() < 1e-14);
    }
}
