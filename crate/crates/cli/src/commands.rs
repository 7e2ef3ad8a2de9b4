//! Command implementations. Every command parses the problem file, runs its
//! checks, prints a deterministic JSON report to stdout and communicates
//! hard failures through the exit code: 0 all pass, 1 verification
//! failures, 2 input errors.

use crate::reportfile::ReportFile;
use crate::schema::{mat_from, parameter_object, Problem, ProblemFile};
use aip_core::aip::{
    admissible_parameter, build_theta, build_theta_shifted, lft_solve, theta_j_checks,
    validate_data, AipDataSet, KAdjoint, ThetaKind, ThetaRealization,
};
use aip_core::matkit::{c, cr, fnorm, CMat, Tolerance, C64};
use aip_core::nevanlinna::{membership_check, NevanlinnaObject};
use aip_core::oracle::{m_direct, AdjointRelationModel, ExtensionSpec};
use aip_core::problems::{
    build_tangential, build_truncated_moment, extract_measure, hankel_exactness,
    stieltjes_asymptotics_check, verify_moments, MomentSequence, TangentialSpec,
};
use aip_core::report::VerificationReport;
use std::path::{Path, PathBuf};

/// Input/usage problems exit with code 2; verification failures are carried
/// through the report and exit with 1.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

type Result<T> = std::result::Result<T, InputError>;

pub fn read_problem(path: &Path, tol_abs: Option<f64>, tol_rel: Option<f64>) -> Result<ProblemFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))?;
    let mut pf = ProblemFile::parse(&text).map_err(InputError)?;
    if tol_abs.is_some() || tol_rel.is_some() {
        let mut over = pf.tolerances.unwrap_or(crate::schema::ToleranceOverride { abs: None, rel: None });
        if tol_abs.is_some() {
            over.abs = tol_abs;
        }
        if tol_rel.is_some() {
            over.rel = tol_rel;
        }
        pf.tolerances = Some(over);
    }
    Ok(pf)
}

pub enum BuiltProblem {
    Moment { ms: MomentSequence, data: AipDataSet },
    Tangential { spec: TangentialSpec, data: AipDataSet },
    Raw { data: AipDataSet, v_override: Option<CMat> },
}

impl BuiltProblem {
    pub fn data(&self) -> &AipDataSet {
        match self {
            BuiltProblem::Moment { data, .. } => data,
            BuiltProblem::Tangential { data, .. } => data,
            BuiltProblem::Raw { data, .. } => data,
        }
    }
}

pub fn build_problem(pf: &ProblemFile) -> Result<BuiltProblem> {
    match &pf.problem {
        Problem::TruncatedMoment { .. } => {
            let ms = pf.moment_sequence().map_err(InputError)?.unwrap();
            let data = build_truncated_moment(&ms).map_err(|e| InputError(e.to_string()))?;
            Ok(BuiltProblem::Moment { ms, data })
        }
        Problem::Tangential { .. } => {
            let spec = pf.tangential_spec().map_err(InputError)?.unwrap();
            let data = build_tangential(&spec).map_err(|e| InputError(e.to_string()))?;
            Ok(BuiltProblem::Tangential { spec, data })
        }
        Problem::RawAip { b1, b2, c1, c2, k, x, v } => {
            let tol = pf.tolerance();
            let b1 = mat_from(b1).map_err(InputError)?;
            let b2 = mat_from(b2).map_err(InputError)?;
            let c1 = mat_from(c1).map_err(InputError)?;
            let c2 = mat_from(c2).map_err(InputError)?;
            let k = mat_from(k).map_err(InputError)?;
            let ker = aip_core::matkit::null_space_basis(&k, tol);
            let data = if ker.ncols() == 0 {
                AipDataSet::new_regular(b1, b2, c1, c2, k)
            } else {
                let x_mat = match x {
                    Some(xm) => mat_from(xm).map_err(InputError)?,
                    None => aip_core::matkit::moore_penrose(&k, tol)
                        .map_err(|e| InputError(e.to_string()))?,
                };
                let x0 = aip_core::matkit::column_space_basis(&x_mat, tol);
                AipDataSet::new(b1, b2, c1, c2, k, ker, x0, KAdjoint::PseudoX { x: x_mat })
            }
            .map_err(|e| InputError(e.to_string()))?;
            let v_override = v.as_ref().map(mat_from).transpose().map_err(InputError)?;
            Ok(BuiltProblem::Raw { data, v_override })
        }
    }
}

pub fn build_theta_for(bp: &BuiltProblem) -> Result<ThetaRealization> {
    let data = bp.data();
    let b2_is_id =
        fnorm(&(&data.b2 - CMat::identity(data.n, data.n))) <= 1e-10 * fnorm(&data.b2).max(1.0);
    let mut theta = if b2_is_id {
        build_theta(data).map_err(|e| InputError(e.to_string()))?
    } else {
        build_theta_shifted(data, 0.0).map_err(|e| InputError(e.to_string()))?
    };
    if let BuiltProblem::Raw { v_override: Some(v), .. } = bp {
        if v.shape() != theta.v.shape() {
            return Err(InputError("corrector override has wrong shape".into()));
        }
        theta.v = v.clone();
    }
    Ok(theta)
}

fn parameter_at(pf: &ProblemFile, idx: usize) -> Result<NevanlinnaObject> {
    let p = pf
        .parameters
        .get(idx)
        .ok_or_else(|| InputError(format!("parameter index {idx} out of range (have {})", pf.parameters.len())))?;
    parameter_object(p).map_err(InputError)
}

fn require_admissible(theta: &ThetaRealization, param: &NevanlinnaObject) -> Result<()> {
    if !admissible_parameter(param, theta.nu) {
        return Err(InputError(format!(
            "parameter is not admissible: with a degenerate block of size nu = {}, the pair must \
             have the block form q = diag(0_nu, q1), p = diag(I_nu, p1)",
            theta.nu
        )));
    }
    Ok(())
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

// ---------------------------------------------------------------------------

pub fn cmd_validate(pf: &ProblemFile) -> Result<(String, bool)> {
    let grid = pf.grid_points();
    let tol = pf.tolerance();
    let mut out = ReportFile::new("validate", pf, &grid);

    match &pf.problem {
        Problem::TruncatedMoment { .. } => {
            let ms = pf.moment_sequence().map_err(InputError)?.unwrap();
            let exact = hankel_exactness(&ms, tol);
            let solvable = exact.find("hankel-psd").map(|c_| c_.pass).unwrap_or(false);
            out.absorb("", &exact);
            if solvable {
                match build_truncated_moment(&ms) {
                    Ok(data) => out.absorb("", &validate_data(&data, tol)),
                    Err(e) => {
                        let mut rep = VerificationReport::new();
                        rep.flag_check("data-build", "problem-translation", false, &e.to_string());
                        out.absorb("", &rep);
                    }
                }
            }
        }
        Problem::Tangential { .. } => {
            let spec = pf.tangential_spec().map_err(InputError)?.unwrap();
            match build_tangential(&spec) {
                Ok(data) => {
                    let mut rep = VerificationReport::new();
                    rep.flag_check("pick-psd", "solvability", true, "");
                    out.absorb("", &rep);
                    out.absorb("", &validate_data(&data, tol));
                }
                Err(e) => {
                    let mut rep = VerificationReport::new();
                    rep.flag_check("pick-psd", "solvability", false, &e.to_string());
                    out.absorb("", &rep);
                }
            }
        }
        Problem::RawAip { .. } => {
            let bp = build_problem(pf)?;
            out.absorb("", &validate_data(bp.data(), tol));
        }
    }
    let passed = out.passed;
    Ok((out.render(), passed))
}

// ---------------------------------------------------------------------------

fn solution_checks(
    pf: &ProblemFile,
    bp: &BuiltProblem,
    theta: &ThetaRealization,
    sol: &NevanlinnaObject,
    grid: &[C64],
    tol: Tolerance,
) -> VerificationReport {
    let mut rep = VerificationReport::new();
    rep.merge(membership_check(sol, grid, tol));
    rep.merge(theta_j_checks(theta, grid, tol));
    match bp {
        BuiltProblem::Moment { ms, .. } => match extract_measure(sol) {
            Ok(measure) => {
                rep.merge(verify_moments(&measure, ms, Tolerance { abs: 1e-8, rel: 0.0 }));
                rep.merge(stieltjes_asymptotics_check(sol, ms, &[10.0, 100.0, 1000.0]));
            }
            Err(e) => {
                rep.flag_check("measure-extraction", "integral-representation", false, &e.to_string());
            }
        },
        BuiltProblem::Tangential { spec, .. } => {
            let mut at = 0usize;
            for (jn, node) in spec.nodes.iter().enumerate() {
                if node.multiplicity == 1 {
                    match sol.m_value_or_limit(node.lambda) {
                        Ok(m) => {
                            let resid = (&m * spec.eta.column(at) - spec.xi.column(at)).norm();
                            rep.residual_check(
                                &format!("interpolation-node-{jn}"),
                                "target-identity",
                                resid,
                                1e-8,
                            );
                        }
                        Err(e) => {
                            rep.flag_check(
                                &format!("interpolation-node-{jn}"),
                                "target-identity",
                                false,
                                &e.to_string(),
                            );
                        }
                    }
                } else {
                    // chain conditions: the solution must stay bounded at
                    // the node (no pole), which encodes the higher-order
                    // interpolation through the data set
                    let probe = |eps: f64| {
                        sol.m_value(node.lambda + c(eps, eps))
                            .map(|m| fnorm(&m))
                            .unwrap_or(f64::INFINITY)
                    };
                    let near = probe(1e-5);
                    let nearer = probe(1e-6);
                    rep.flag_check(
                        &format!("interpolation-chain-{jn}"),
                        "chain-membership",
                        near.is_finite() && nearer <= 10.0 * near.max(1.0),
                        &format!("|m| {near:.3e} -> {nearer:.3e} approaching the node"),
                    );
                }
                at += node.multiplicity;
            }
        }
        BuiltProblem::Raw { .. } => {}
    }
    let _ = pf;
    rep
}

pub fn cmd_solve(
    pf: &ProblemFile,
    param_idx: usize,
    grid_override: Option<Vec<C64>>,
    out_csv: Option<PathBuf>,
    input_path: &Path,
) -> Result<(String, bool)> {
    let grid = grid_override.unwrap_or_else(|| pf.grid_points());
    let tol = pf.tolerance();
    let bp = build_problem(pf)?;
    let theta = build_theta_for(&bp)?;
    let param = parameter_at(pf, param_idx)?;
    require_admissible(&theta, &param)?;
    let sol = lft_solve(&theta, &param).map_err(|e| InputError(e.to_string()))?;

    let mut out = ReportFile::new("solve", pf, &grid);
    out.absorb(&format!("param{param_idx}"), &solution_checks(pf, &bp, &theta, &sol, &grid, tol));

    // CSV samples over the grid
    let mut csv = String::new();
    let d = sol.dim();
    let mut header = vec!["re_lambda".to_string(), "im_lambda".to_string()];
    for i in 0..d {
        for j in 0..d {
            header.push(format!("re_m_{i}{j}"));
            header.push(format!("im_m_{i}{j}"));
        }
    }
    header.push("status".to_string());
    csv.push_str(&header.join(","));
    csv.push('\n');
    for &z in &grid {
        let m = sol.m_value(z).ok();
        let mut row = vec![fmt17(z.re), fmt17(z.im)];
        match &m {
            Some(mat) => {
                for i in 0..d {
                    for j in 0..d {
                        row.push(fmt17(mat[(i, j)].re));
                        row.push(fmt17(mat[(i, j)].im));
                    }
                }
                row.push("ok".into());
            }
            None => {
                for _ in 0..(2 * d * d) {
                    row.push(String::new());
                }
                row.push("pole".into());
            }
        }
        csv.push_str(&row.join(","));
        csv.push('\n');
        out.push_sample(param_idx, z, m.as_ref());
    }
    let csv_path = out_csv.unwrap_or_else(|| {
        let stem = input_path.file_stem().and_then(|s| s.to_str()).unwrap_or("problem");
        PathBuf::from(format!("{stem}.solve{param_idx}.csv"))
    });
    std::fs::write(&csv_path, csv)
        .map_err(|e| InputError(format!("cannot write {}: {e}", csv_path.display())))?;

    let passed = out.passed;
    Ok((out.render(), passed))
}

pub fn cmd_verify(pf: &ProblemFile) -> Result<(String, bool)> {
    let grid = pf.grid_points();
    let tol = pf.tolerance();
    let bp = build_problem(pf)?;
    let theta = build_theta_for(&bp)?;
    let mut out = ReportFile::new("verify", pf, &grid);
    out.absorb("data", &validate_data(bp.data(), tol));
    out.absorb("theta", &theta_j_checks(&theta, &grid, tol));
    for idx in 0..pf.parameters.len() {
        let param = parameter_at(pf, idx)?;
        if !admissible_parameter(&param, theta.nu) {
            let mut rep = VerificationReport::new();
            rep.flag_check("admissible", "forced-block-structure", false, "parameter rejected");
            out.absorb(&format!("param{idx}"), &rep);
            continue;
        }
        match lft_solve(&theta, &param) {
            Ok(sol) => {
                out.absorb(&format!("param{idx}"), &solution_checks(pf, &bp, &theta, &sol, &grid, tol))
            }
            Err(e) => {
                let mut rep = VerificationReport::new();
                rep.flag_check("solve", "linear-fractional-transform", false, &e.to_string());
                out.absorb(&format!("param{idx}"), &rep);
            }
        }
    }
    let passed = out.passed;
    Ok((out.render(), passed))
}

pub fn cmd_oracle_check(pf: &ProblemFile) -> Result<(String, bool)> {
    let grid = pf.grid_points();
    let tol = pf.tolerance();
    let bp = build_problem(pf)?;
    let theta = build_theta_for(&bp)?;
    let data = bp.data();
    let model = match theta.kind {
        ThetaKind::Shifted { mu } => AdjointRelationModel::new_with_shift(data, mu),
        _ => AdjointRelationModel::new(data),
    }
    .map_err(|e| InputError(e.to_string()))?;

    let mut out = ReportFile::new("oracle-check", pf, &grid);
    out.absorb("theta", &theta_j_checks(&theta, &grid, tol));

    if pf.parameters.is_empty() {
        return Err(InputError("oracle-check needs at least one constant parameter".into()));
    }
    for idx in 0..pf.parameters.len() {
        let (q, p) = match &pf.parameters[idx] {
            crate::schema::Parameter::Constant { q, p } => {
                (mat_from(q).map_err(InputError)?, mat_from(p).map_err(InputError)?)
            }
            _ => {
                return Err(InputError(format!(
                    "oracle-check accepts constant parameters only; parameter {idx} is not constant"
                )))
            }
        };
        let param =
            NevanlinnaObject::constant_pair(q.clone(), p.clone()).map_err(|e| InputError(e.to_string()))?;
        let mut rep = VerificationReport::new();
        if !admissible_parameter(&param, theta.nu) {
            rep.flag_check("admissible", "forced-block-structure", false, "parameter rejected");
            out.absorb(&format!("param{idx}"), &rep);
            continue;
        }
        let agreement = (|| -> std::result::Result<f64, String> {
            let sol = lft_solve(&theta, &param).map_err(|e| e.to_string())?;
            let ext = ExtensionSpec::from_constant_pair(&q, &p, &theta.v).map_err(|e| e.to_string())?;
            let mut max_dev: f64 = 0.0;
            for &z in &grid {
                let m_lft = sol.m_value(z).map_err(|e| e.to_string())?;
                let m_dir = m_direct(&model, &ext, z).map_err(|e| e.to_string())?;
                max_dev = max_dev.max(fnorm(&(&m_lft - &m_dir)) / fnorm(&m_dir).max(1.0));
            }
            Ok(max_dev)
        })();
        match agreement {
            Ok(dev) => {
                rep.residual_check("oracle-agreement", "transform-vs-direct", dev, 1e-8);
            }
            Err(msg) => {
                rep.flag_check("oracle-agreement", "transform-vs-direct", false, &msg);
            }
        }
        out.absorb(&format!("param{idx}"), &rep);
    }
    let passed = out.passed;
    Ok((out.render(), passed))
}

pub fn parse_segment(spec: &str) -> Result<Vec<C64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["imag", rmin, rmax, count] => {
            let rmin: f64 = rmin.parse().map_err(|_| InputError("bad rmin".into()))?;
            let rmax: f64 = rmax.parse().map_err(|_| InputError("bad rmax".into()))?;
            let count: usize = count.parse().map_err(|_| InputError("bad count".into()))?;
            if rmin <= 0.0 || rmax <= rmin || count < 2 {
                return Err(InputError("imag segment needs 0 < rmin < rmax and count >= 2".into()));
            }
            Ok((0..count)
                .map(|k| {
                    let t = k as f64 / (count - 1) as f64;
                    c(0.0, rmin * (rmax / rmin).powf(t))
                })
                .collect())
        }
        ["line", from, to, count] => {
            let parse_pt = |s: &str| -> Result<C64> {
                let nums: Vec<&str> = s.split(',').collect();
                if nums.len() != 2 {
                    return Err(InputError(format!("bad point {s:?}; expected re,im")));
                }
                Ok(c(
                    nums[0].parse().map_err(|_| InputError("bad re".into()))?,
                    nums[1].parse().map_err(|_| InputError("bad im".into()))?,
                ))
            };
            let a = parse_pt(from)?;
            let b = parse_pt(to)?;
            let count: usize = count.parse().map_err(|_| InputError("bad count".into()))?;
            if count < 1 {
                return Err(InputError("count must be positive".into()));
            }
            Ok((0..count)
                .map(|k| {
                    let t = if count == 1 { 0.0 } else { k as f64 / (count - 1) as f64 };
                    a + (b - a) * cr(t)
                })
                .collect())
        }
        _ => Err(InputError(
            "segment must be imag:<rmin>:<rmax>:<count> or line:<re,im>:<re,im>:<count>".into(),
        )),
    }
}

pub fn cmd_sample(
    pf: &ProblemFile,
    segment: &str,
    param_idx: usize,
    with_theta: bool,
    out_csv: Option<PathBuf>,
) -> Result<(String, bool)> {
    let points = parse_segment(segment)?;
    let bp = build_problem(pf)?;
    let theta = build_theta_for(&bp)?;
    let param = parameter_at(pf, param_idx)?;
    require_admissible(&theta, &param)?;
    let sol = lft_solve(&theta, &param).map_err(|e| InputError(e.to_string()))?;

    let d = sol.dim();
    let mut csv = String::new();
    let mut header = vec!["re_lambda".to_string(), "im_lambda".to_string()];
    for i in 0..d {
        for j in 0..d {
            header.push(format!("re_m_{i}{j}"));
            header.push(format!("im_m_{i}{j}"));
        }
    }
    if with_theta {
        for i in 0..2 * d {
            for j in 0..2 * d {
                header.push(format!("re_theta_{i}{j}"));
                header.push(format!("im_theta_{i}{j}"));
            }
        }
    }
    header.push("status".to_string());
    csv.push_str(&header.join(","));
    csv.push('\n');

    for &z in &points {
        let mut row = vec![fmt17(z.re), fmt17(z.im)];
        let m = sol.m_value(z).ok();
        let mut status = "ok";
        match &m {
            Some(mat) => {
                for i in 0..d {
                    for j in 0..d {
                        row.push(fmt17(mat[(i, j)].re));
                        row.push(fmt17(mat[(i, j)].im));
                    }
                }
            }
            None => {
                status = "pole";
                for _ in 0..(2 * d * d) {
                    row.push(String::new());
                }
            }
        }
        if with_theta {
            match theta.eval(z) {
                Ok(th) => {
                    for i in 0..2 * d {
                        for j in 0..2 * d {
                            row.push(fmt17(th[(i, j)].re));
                            row.push(fmt17(th[(i, j)].im));
                        }
                    }
                }
                Err(_) => {
                    status = "pole";
                    for _ in 0..(2 * (2 * d) * (2 * d)) {
                        row.push(String::new());
                    }
                }
            }
        }
        row.push(status.into());
        csv.push_str(&row.join(","));
        csv.push('\n');
    }

    match out_csv {
        Some(path) => {
            std::fs::write(&path, &csv)
                .map_err(|e| InputError(format!("cannot write {}: {e}", path.display())))?;
            Ok((format!("wrote {} samples to {}", points.len(), path.display()), true))
        }
        None => Ok((csv, true)),
    }
}
