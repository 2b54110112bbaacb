//! JSON file formats shared by the CLI: algebras, polynomial distributions,
//! matrices over a declared field, and product Anosov systems. Scalars are
//! serialized as exact strings ("num/den" or "num/den+num/den*r" with r = √d).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::lie::{GradedAlgebra, Grading, LieAlgebraSpec};
use crate::linalg::SMat;
use crate::nilmanifold::{build_product_anosov, NilError, ProductAnosovSystem};
use crate::poly::{MPoly, PolyVectorField};
use crate::scalar::{Field, Scalar, ScalarError};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("scalar error: {0}")]
    Scalar(#[from] ScalarError),
    #[error("system construction failed: {0}")]
    System(#[from] NilError),
    #[error("bad file: {0}")]
    Format(String),
}

/// Field tag in files: the string "Q" or an object {"sqrt": d}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Named(String),
    Sqrt { sqrt: u64 },
}

impl FieldSpec {
    pub fn to_field(&self) -> Result<Field, IoError> {
        match self {
            FieldSpec::Named(s) if s == "Q" => Ok(Field::Rational),
            FieldSpec::Named(s) => Err(IoError::Format(format!("unknown field {s:?}"))),
            FieldSpec::Sqrt { sqrt } => {
                // Validate the radicand through the scalar constructor.
                Scalar::sqrt_of(*sqrt)?;
                Ok(Field::Quadratic(*sqrt))
            }
        }
    }

    pub fn from_field(f: Field) -> FieldSpec {
        match f {
            Field::Rational => FieldSpec::Named("Q".into()),
            Field::Quadratic(d) => FieldSpec::Sqrt { sqrt: d },
        }
    }
}

fn parse_scalar(s: &str, field: Field) -> Result<Scalar, IoError> {
    Ok(Scalar::parse(s, field)?)
}

fn parse_matrix(rows: &[Vec<String>], field: Field) -> Result<SMat, IoError> {
    let r = rows.len();
    if r == 0 || rows.iter().any(|row| row.len() != rows[0].len()) {
        return Err(IoError::Format("matrix rows must be non-empty and equal-length".into()));
    }
    let c = rows[0].len();
    let mut m = SMat::zero(r, c);
    for (i, row) in rows.iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            m[(i, j)] = parse_scalar(s, field)?;
        }
    }
    Ok(m)
}

fn matrix_to_strings(m: &SMat) -> Vec<Vec<String>> {
    (0..m.rows)
        .map(|i| (0..m.cols).map(|j| m[(i, j)].to_string()).collect())
        .collect()
}

/// Algebra file: structure constants, basis names and grading layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraFile {
    pub dim: usize,
    pub field: FieldSpec,
    pub basis: Vec<String>,
    pub brackets: Vec<BracketEntry>,
    pub grading: Vec<Vec<usize>>,
}

/// One bracket [e_i, e_j] = Σ out[k]·e_k with i < j; keys are basis indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketEntry {
    pub i: usize,
    pub j: usize,
    pub out: BTreeMap<String, String>,
}

impl AlgebraFile {
    pub fn to_algebra(&self) -> Result<GradedAlgebra, IoError> {
        let field = self.field.to_field()?;
        let n = self.dim;
        if self.basis.len() != n {
            return Err(IoError::Format(format!(
                "expected {n} basis names, found {}",
                self.basis.len()
            )));
        }
        let mut alg = LieAlgebraSpec::with_names(n, self.basis.clone());
        for entry in &self.brackets {
            if entry.i >= entry.j || entry.j >= n {
                return Err(IoError::Format(format!(
                    "bracket indices ({}, {}) must satisfy i < j < dim",
                    entry.i, entry.j
                )));
            }
            let mut v = vec![Scalar::zero(); n];
            for (k, s) in &entry.out {
                let k: usize = k
                    .parse()
                    .map_err(|_| IoError::Format(format!("bad output index {k:?}")))?;
                if k >= n {
                    return Err(IoError::Format(format!("output index {k} out of range")));
                }
                v[k] = parse_scalar(s, field)?;
            }
            alg.set_bracket(entry.i, entry.j, v)
                .map_err(|e| IoError::Format(e.to_string()))?;
        }
        let grading = Grading::new(self.grading.clone(), n)
            .map_err(|e| IoError::Format(e.to_string()))?;
        Ok(GradedAlgebra::new(alg, grading))
    }

    pub fn from_algebra(g: &GradedAlgebra) -> AlgebraFile {
        let brackets = g
            .algebra
            .brackets
            .iter()
            .filter(|(_, c)| !c.iter().all(|v| v.is_zero()))
            .map(|(&(i, j), c)| BracketEntry {
                i,
                j,
                out: c
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| !v.is_zero())
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .collect(),
            })
            .collect();
        AlgebraFile {
            dim: g.dim(),
            field: FieldSpec::from_field(g.algebra.field()),
            basis: g.algebra.basis_names.clone(),
            brackets,
            grading: g.grading.layers.clone(),
        }
    }
}

/// Distribution file: a frame of polynomial vector fields in n variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionFile {
    pub n: usize,
    pub field: FieldSpec,
    pub vars: Vec<String>,
    /// fields[f][component] = sparse monomial map "e1,…,en" ↦ scalar.
    pub fields: Vec<Vec<BTreeMap<String, String>>>,
}

impl DistributionFile {
    pub fn to_fields(&self) -> Result<Vec<PolyVectorField>, IoError> {
        let field = self.field.to_field()?;
        let n = self.n;
        if self.vars.len() != n {
            return Err(IoError::Format(format!(
                "expected {n} variable names, found {}",
                self.vars.len()
            )));
        }
        let mut out = Vec::new();
        for components in &self.fields {
            if components.len() != n {
                return Err(IoError::Format(format!(
                    "each field needs {n} components, found {}",
                    components.len()
                )));
            }
            let mut comps = Vec::new();
            for mono in components {
                let mut p = MPoly::zero(n);
                for (key, s) in mono {
                    let exps: Result<Vec<u32>, _> =
                        key.split(',').map(|t| t.trim().parse()).collect();
                    let exps =
                        exps.map_err(|_| IoError::Format(format!("bad exponent key {key:?}")))?;
                    if exps.len() != n {
                        return Err(IoError::Format(format!(
                            "exponent key {key:?} needs {n} entries"
                        )));
                    }
                    p.insert_term(exps, parse_scalar(s, field)?);
                }
                comps.push(p);
            }
            out.push(PolyVectorField::new(comps));
        }
        Ok(out)
    }

    pub fn from_fields(fields: &[PolyVectorField], field: Field, vars: Vec<String>) -> DistributionFile {
        let n = fields.first().map(|f| f.n).unwrap_or(vars.len());
        let encoded = fields
            .iter()
            .map(|f| {
                f.components
                    .iter()
                    .map(|p| {
                        p.terms
                            .iter()
                            .map(|(e, c)| {
                                let key = e
                                    .iter()
                                    .map(|x| x.to_string())
                                    .collect::<Vec<_>>()
                                    .join(",");
                                (key, c.to_string())
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        DistributionFile {
            n,
            field: FieldSpec::from_field(field),
            vars,
            fields: encoded,
        }
    }
}

/// Matrix file: a square matrix over a declared field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub field: FieldSpec,
    pub entries: Vec<Vec<String>>,
}

impl MatrixFile {
    pub fn to_matrix(&self) -> Result<(SMat, Field), IoError> {
        let field = self.field.to_field()?;
        let m = parse_matrix(&self.entries, field)?;
        if m.rows != m.cols {
            return Err(IoError::Format("matrix must be square".into()));
        }
        Ok((m, field))
    }

    pub fn from_matrix(m: &SMat, field: Field) -> MatrixFile {
        MatrixFile {
            field: FieldSpec::from_field(field),
            entries: matrix_to_strings(m),
        }
    }
}

/// Product Anosov system file: the factor algebra and λ determine the
/// system; the emitted matrices are certificates, re-derived and
/// cross-checked on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    pub field: FieldSpec,
    pub lambda: String,
    pub factor: AlgebraFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice_basis: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_in_lattice: Option<Vec<Vec<String>>>,
}

impl SystemFile {
    pub fn to_system(&self) -> Result<ProductAnosovSystem, IoError> {
        let field = self.field.to_field()?;
        if !field.is_quadratic() {
            return Err(IoError::Format("system field must be quadratic".into()));
        }
        let lambda = parse_scalar(&self.lambda, field)?;
        let factor = self.factor.to_algebra()?;
        let sys = build_product_anosov(&factor, &lambda)?;
        for (name, stored, actual) in [
            ("map", &self.map, &sys.map),
            ("lattice_basis", &self.lattice_basis, &sys.lattice_basis),
            ("map_in_lattice", &self.map_in_lattice, &sys.map_in_lattice),
        ] {
            if let Some(rows) = stored {
                if &parse_matrix(rows, field)? != actual {
                    return Err(IoError::Format(format!(
                        "stored {name} disagrees with the rebuilt system"
                    )));
                }
            }
        }
        Ok(sys)
    }

    pub fn from_system(sys: &ProductAnosovSystem) -> SystemFile {
        SystemFile {
            field: FieldSpec::from_field(sys.lambda.field),
            lambda: sys.lambda.to_string(),
            factor: AlgebraFile::from_algebra(&sys.factor.algebra),
            map: Some(matrix_to_strings(&sys.map)),
            lattice_basis: Some(matrix_to_strings(&sys.lattice_basis)),
            map_in_lattice: Some(matrix_to_strings(&sys.map_in_lattice)),
        }
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_algebra(path: &Path) -> Result<GradedAlgebra, IoError> {
    read_json::<AlgebraFile>(path)?.to_algebra()
}

pub fn read_distribution(path: &Path) -> Result<Vec<PolyVectorField>, IoError> {
    read_json::<DistributionFile>(path)?.to_fields()
}

pub fn read_matrix(path: &Path) -> Result<(SMat, Field), IoError> {
    read_json::<MatrixFile>(path)?.to_matrix()
}

pub fn read_system(path: &Path) -> Result<ProductAnosovSystem, IoError> {
    read_json::<SystemFile>(path)?.to_system()
}
