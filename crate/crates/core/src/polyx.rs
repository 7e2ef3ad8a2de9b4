//! Matrix polynomials and the small polynomial toolbox used for exact
//! rational bookkeeping: interpolation of polynomial matrix functions from
//! exact samples on circles, determinants of matrix polynomials, and a
//! Durand-Kerner root finder with Newton polishing.

use crate::matkit::{c, cr, fnorm, C64, CMat};

/// Matrix polynomial `P(z) = sum_k coeffs[k] z^k` with `rows x cols`
/// coefficients stored in ascending degree order.
#[derive(Clone, Debug)]
pub struct MatPoly {
    pub rows: usize,
    pub cols: usize,
    pub coeffs: Vec<CMat>,
}

impl MatPoly {
    pub fn zero(rows: usize, cols: usize) -> Self {
        MatPoly {
            rows,
            cols,
            coeffs: vec![CMat::zeros(rows, cols)],
        }
    }

    pub fn constant(m: CMat) -> Self {
        MatPoly {
            rows: m.nrows(),
            cols: m.ncols(),
            coeffs: vec![m],
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Horner evaluation.
    pub fn eval(&self, z: C64) -> CMat {
        let mut acc = CMat::zeros(self.rows, self.cols);
        for k in (0..self.coeffs.len()).rev() {
            acc = acc * z + &self.coeffs[k];
        }
        acc
    }

    /// Coefficient-wise derivative.
    pub fn deriv(&self) -> MatPoly {
        if self.coeffs.len() <= 1 {
            return MatPoly::zero(self.rows, self.cols);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, m)| m * cr(k as f64))
            .collect();
        MatPoly {
            rows: self.rows,
            cols: self.cols,
            coeffs,
        }
    }

    /// Drop trailing coefficients that are negligible relative to the
    /// largest coefficient.
    pub fn trim(&mut self) {
        let scale = self
            .coeffs
            .iter()
            .map(crate::matkit::max_abs)
            .fold(0.0f64, f64::max)
            .max(1e-300);
        while self.coeffs.len() > 1 {
            let last = self.coeffs.last().unwrap();
            if crate::matkit::max_abs(last) <= 1e-13 * scale {
                self.coeffs.pop();
            } else {
                break;
            }
        }
    }

    pub fn max_coeff_abs(&self) -> f64 {
        self.coeffs
            .iter()
            .map(crate::matkit::max_abs)
            .fold(0.0f64, f64::max)
    }
}

/// Fit a matrix polynomial of degree at most `deg_bound` to an evaluator
/// known to be polynomial (e.g. a rational function multiplied by its
/// denominator). Samples on circles of a few deterministic radii; the fit
/// is validated against the evaluator at probe points off the sample set.
///
/// The evaluator returns `None` where it cannot be evaluated (a pole of an
/// intermediate factor); such radii are skipped.
pub fn fit_matpoly<F>(rows: usize, cols: usize, deg_bound: usize, f: F) -> Result<MatPoly, String>
where
    F: Fn(C64) -> Option<CMat>,
{
    const RADII: [f64; 6] = [1.0, 1.7, 0.59, 2.31, 0.83, 3.1];
    let s = deg_bound + 1;
    let mut last_err = String::from("no radius attempted");
    'radius: for &rho in RADII.iter() {
        let mut samples: Vec<CMat> = Vec::with_capacity(s);
        for k in 0..s {
            let ang = 2.0 * std::f64::consts::PI * (k as f64) / (s as f64);
            let z = c(rho * ang.cos(), rho * ang.sin());
            match f(z) {
                Some(v) if crate::matkit::is_finite(&v) => samples.push(v),
                _ => {
                    last_err = format!("evaluation failed on circle of radius {rho}");
                    continue 'radius;
                }
            }
        }
        // inverse DFT: c_j = rho^{-j} (1/s) sum_k f(z_k) e^{-2 pi i j k / s}
        let mut coeffs: Vec<CMat> = Vec::with_capacity(s);
        for j in 0..s {
            let mut acc = CMat::zeros(rows, cols);
            for (k, sample) in samples.iter().enumerate() {
                let ang = -2.0 * std::f64::consts::PI * (j as f64) * (k as f64) / (s as f64);
                acc += sample * c(ang.cos(), ang.sin());
            }
            acc /= cr(s as f64 * rho.powi(j as i32));
            coeffs.push(acc);
        }
        let mut poly = MatPoly { rows, cols, coeffs };
        poly.trim();
        // probe validation off the sample set
        let probes = [
            c(0.83, 0.41) * cr(rho),
            c(-0.31, 1.12) * cr(rho),
            c(0.05, -0.73) * cr(rho),
        ];
        let mut ok = true;
        for &p in probes.iter() {
            match f(p) {
                Some(v) => {
                    let fit = poly.eval(p);
                    let scale = fnorm(&v).max(poly.max_coeff_abs()).max(1.0);
                    if fnorm(&(fit - v)) > 1e-8 * scale {
                        ok = false;
                        last_err = format!("fit validation failed at radius {rho}");
                        break;
                    }
                }
                None => {
                    ok = false;
                    last_err = format!("probe evaluation failed at radius {rho}");
                    break;
                }
            }
        }
        if ok {
            return Ok(poly);
        }
    }
    Err(last_err)
}

/// Determinant of a matrix polynomial as a scalar polynomial (ascending
/// coefficients), computed by sampling determinants and refitting.
pub fn det_poly(p: &MatPoly) -> Result<Vec<C64>, String> {
    assert_eq!(p.rows, p.cols, "determinant needs a square polynomial");
    let d = p.rows;
    if d == 0 {
        return Ok(vec![cr(1.0)]);
    }
    let bound = p.degree() * d;
    let fitted = fit_matpoly(1, 1, bound, |z| {
        let m = p.eval(z);
        Some(CMat::from_element(1, 1, det_small(&m)))
    })?;
    Ok(fitted.coeffs.iter().map(|m| m[(0, 0)]).collect())
}

/// Determinant by LU for small dense matrices.
pub fn det_small(m: &CMat) -> C64 {
    if m.nrows() == 0 {
        return cr(1.0);
    }
    m.clone().lu().determinant()
}

/// Evaluate a scalar polynomial (ascending coefficients).
pub fn eval_scalar(coeffs: &[C64], z: C64) -> C64 {
    let mut acc = cr(0.0);
    for k in (0..coeffs.len()).rev() {
        acc = acc * z + coeffs[k];
    }
    acc
}

fn eval_scalar_deriv(coeffs: &[C64], z: C64) -> C64 {
    let mut acc = cr(0.0);
    for k in (1..coeffs.len()).rev() {
        acc = acc * z + coeffs[k] * cr(k as f64);
    }
    acc
}

/// All finite roots of a scalar polynomial via Durand-Kerner iteration with
/// Newton polishing. Near-zero leading coefficients are trimmed first, so
/// "roots at infinity" are simply dropped.
pub fn poly_roots(coeffs: &[C64]) -> Vec<C64> {
    let maxc = coeffs.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    if maxc == 0.0 {
        return Vec::new();
    }
    let mut cs: Vec<C64> = coeffs.to_vec();
    while cs.len() > 1 && cs.last().unwrap().norm() <= 1e-12 * maxc {
        cs.pop();
    }
    let deg = cs.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let lead = *cs.last().unwrap();
    let monic: Vec<C64> = cs.iter().map(|&z| z / lead).collect();
    let radius = 1.0 + monic.iter().map(|z| z.norm()).fold(0.0f64, f64::max);

    let seed = c(0.4, 0.9);
    let mut roots: Vec<C64> = (0..deg)
        .map(|k| {
            let mut z = cr(0.5 * radius);
            for _ in 0..=k {
                z *= seed;
            }
            z
        })
        .collect();
    for _ in 0..500 {
        let mut max_step = 0.0f64;
        for k in 0..deg {
            let zk = roots[k];
            let mut denom = cr(1.0);
            for j in 0..deg {
                if j != k {
                    denom *= zk - roots[j];
                }
            }
            if denom.norm() < 1e-290 {
                continue;
            }
            let step = eval_scalar(&monic, zk) / denom;
            roots[k] = zk - step;
            max_step = max_step.max(step.norm());
        }
        if max_step <= 1e-14 * radius {
            break;
        }
    }
    // Newton polish
    for r in roots.iter_mut() {
        for _ in 0..4 {
            let d = eval_scalar_deriv(&monic, *r);
            if d.norm() < 1e-280 {
                break;
            }
            let step = eval_scalar(&monic, *r) / d;
            if !step.re.is_finite() || !step.im.is_finite() {
                break;
            }
            *r -= step;
            if step.norm() <= 1e-16 * radius {
                break;
            }
        }
    }
    roots
}
