//! Problem-file schema: JSON with complex numbers as `[re, im]` pairs and
//! matrices as row-major nested arrays. Parsing is strict (unknown fields
//! rejected) and re-serialization round-trips every matrix bit-exactly.

use aip_core::matkit::{CMat, C64};
use aip_core::nevanlinna::{DiscreteMeasure, MeasureAtom, NevanlinnaObject};
use aip_core::problems::{MomentSequence, TangentialNode, TangentialSpec};
use serde::{Deserialize, Serialize};

pub type CNum = [f64; 2];
pub type Matrix = Vec<Vec<CNum>>;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema_version: String,
    pub problem: Problem,
    #[serde(default)]
    pub parameters: Vec<Parameter>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<CNum>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceOverride>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Problem {
    Tangential {
        d: usize,
        nodes: Vec<NodeSpec>,
        xi: Matrix,
        eta: Matrix,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pick: Option<Matrix>,
    },
    TruncatedMoment {
        d: usize,
        n: usize,
        moments: Vec<Matrix>,
    },
    RawAip {
        b1: Matrix,
        b2: Matrix,
        c1: Matrix,
        c2: Matrix,
        k: Matrix,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x: Option<Matrix>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v: Option<Matrix>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub lambda: CNum,
    #[serde(default = "one")]
    pub multiplicity: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Parameter {
    Constant { q: Matrix, p: Matrix },
    Affine { alpha: Matrix, beta: Matrix },
    Herglotz {
        alpha: Matrix,
        beta: Matrix,
        atoms: Vec<AtomSpec>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub t: f64,
    pub weight: Matrix,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel: Option<f64>,
}

pub fn c_from(v: CNum) -> C64 {
    C64::new(v[0], v[1])
}

pub fn c_to(z: C64) -> CNum {
    [z.re, z.im]
}

pub fn mat_from(m: &Matrix) -> Result<CMat, String> {
    let rows = m.len();
    let cols = m.first().map(|r| r.len()).unwrap_or(0);
    if m.iter().any(|r| r.len() != cols) {
        return Err("ragged matrix rows".into());
    }
    let mut out = CMat::zeros(rows, cols);
    for (i, row) in m.iter().enumerate() {
        for (j, &z) in row.iter().enumerate() {
            out[(i, j)] = c_from(z);
        }
    }
    Ok(out)
}

pub fn mat_to(m: &CMat) -> Matrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| c_to(m[(i, j)])).collect())
        .collect()
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let pf: ProblemFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if pf.schema_version != "1" {
            return Err(format!("unsupported schema_version {:?}", pf.schema_version));
        }
        Ok(pf)
    }

    pub fn tolerance(&self) -> aip_core::matkit::Tolerance {
        let mut tol = aip_core::matkit::Tolerance::default();
        if let Some(o) = &self.tolerances {
            if let Some(abs) = o.abs {
                tol.abs = abs;
            }
            if let Some(rel) = o.rel {
                tol.rel = rel;
            }
        }
        tol
    }

    pub fn grid_points(&self) -> Vec<C64> {
        match &self.grid {
            Some(g) if !g.is_empty() => g.iter().map(|&z| c_from(z)).collect(),
            _ => aip_core::nevanlinna::default_grid(),
        }
    }

    pub fn tangential_spec(&self) -> Result<Option<TangentialSpec>, String> {
        if let Problem::Tangential { d, nodes, xi, eta, pick } = &self.problem {
            let spec = TangentialSpec {
                d: *d,
                nodes: nodes
                    .iter()
                    .map(|n| TangentialNode { lambda: c_from(n.lambda), multiplicity: n.multiplicity })
                    .collect(),
                xi: mat_from(xi)?,
                eta: mat_from(eta)?,
                pick: pick.as_ref().map(mat_from).transpose()?,
            };
            Ok(Some(spec))
        } else {
            Ok(None)
        }
    }

    pub fn moment_sequence(&self) -> Result<Option<MomentSequence>, String> {
        if let Problem::TruncatedMoment { d, n, moments } = &self.problem {
            let s = moments.iter().map(mat_from).collect::<Result<Vec<_>, _>>()?;
            let ms = MomentSequence::new(*d, *n, s).map_err(|e| e.to_string())?;
            Ok(Some(ms))
        } else {
            Ok(None)
        }
    }
}

pub fn parameter_object(p: &Parameter) -> Result<NevanlinnaObject, String> {
    match p {
        Parameter::Constant { q, p } => {
            NevanlinnaObject::constant_pair(mat_from(q)?, mat_from(p)?).map_err(|e| e.to_string())
        }
        Parameter::Affine { alpha, beta } => {
            NevanlinnaObject::affine(mat_from(alpha)?, mat_from(beta)?).map_err(|e| e.to_string())
        }
        Parameter::Herglotz { alpha, beta, atoms } => {
            let alpha = mat_from(alpha)?;
            let beta = mat_from(beta)?;
            let d = alpha.nrows();
            let atoms = atoms
                .iter()
                .map(|a| Ok(MeasureAtom { t: a.t, weight: mat_from(&a.weight)? }))
                .collect::<Result<Vec<_>, String>>()?;
            let measure = DiscreteMeasure::new(d, atoms).map_err(|e| e.to_string())?;
            NevanlinnaObject::herglotz(measure, alpha, beta).map_err(|e| e.to_string())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_file() -> String {
        r#"{
            "schema_version": "1",
            "problem": {"type": "truncated_moment", "d": 1, "n": 1,
                        "moments": [[[[1.0, 0.0]]], [[[0.1234567890123456, 0.0]]], [[[1.0, 0.0]]]]},
            "parameters": [{"type": "constant", "q": [[[0.0, 0.0]]], "p": [[[1.0, 0.0]]]}],
            "grid": [[0.0, 1.0], [0.0, -1.0]]
        }"#
        .to_string()
    }

    #[test]
    fn round_trip_bit_identical() {
        let pf = ProblemFile::parse(&sample_file()).unwrap();
        let text = serde_json::to_string(&pf).unwrap();
        let pf2 = ProblemFile::parse(&text).unwrap();
        let m1 = pf.moment_sequence().unwrap().unwrap();
        let m2 = pf2.moment_sequence().unwrap().unwrap();
        for (a, b) in m1.s.iter().zip(m2.s.iter()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert!(x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits());
            }
        }
    }

    #[test]
    fn missing_field_is_named() {
        let bad = r#"{
            "schema_version": "1",
            "problem": {"type": "tangential", "d": 1,
                        "nodes": [{"lambda": [0.0, 1.0]}],
                        "xi": [[[0.0, 1.0]]]}
        }"#;
        let err = ProblemFile::parse(bad).unwrap_err();
        assert!(err.contains("eta"), "error should name the missing field: {err}");
    }

    #[test]
    fn unknown_schema_version_rejected() {
        let text = sample_file().replace("\"1\"", "\"99\"");
        assert!(ProblemFile::parse(&text).unwrap_err().contains("schema_version"));
    }
}
