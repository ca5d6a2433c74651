//! JSON documents for models, POVMs and priors, plus parsers for
//! reparametrizations given on the command line.
//!
//! A matrix is a row-major array of rows. Each entry may be a number, a
//! `[re, im]` pair, an expression string, or `{"re": .., "im": ..}` whose parts
//! are numbers or expression strings. Expressions use `x` / `x1..xN` for the
//! parameters.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::measure::Povm;
use crate::model::{ComplexExpr, DerivativeMode, ExprMatrix, FamilyKind, StateFamily, DEFAULT_STEP};
use crate::multiparam::Reparam;
use crate::numat::CMatrix;
use crate::qfi::Prior;

fn schema(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        message: message.into(),
    }
}

/// Deserializes `text`, reporting the failing field path.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { "<root>".to_string() } else { path };
        schema(path, e.into_inner().to_string())
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Text(String),
}

impl Scalar {
    fn to_expr(&self, path: &str) -> Result<Expr> {
        match self {
            Scalar::Number(v) => Ok(Expr::Num(*v)),
            Scalar::Text(s) => parse(s).map_err(|e| schema(path, e.to_string())),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Number(f64),
    Pair([f64; 2]),
    Text(String),
    Parts {
        re: Scalar,
        #[serde(default)]
        im: Option<Scalar>,
    },
}

impl Entry {
    fn to_complex(&self, path: &str) -> Result<ComplexExpr> {
        Ok(match self {
            Entry::Number(v) => ComplexExpr::real(Expr::Num(*v)),
            Entry::Pair([re, im]) => ComplexExpr::new(Expr::Num(*re), Expr::Num(*im)),
            Entry::Text(s) => ComplexExpr::real(parse(s).map_err(|e| schema(path, e.to_string()))?),
            Entry::Parts { re, im } => ComplexExpr::new(
                re.to_expr(&format!("{path}.re"))?,
                match im {
                    Some(im) => im.to_expr(&format!("{path}.im"))?,
                    None => Expr::Num(0.0),
                },
            ),
        })
    }
}

pub type MatrixSpec = Vec<Vec<Entry>>;

fn expr_matrix(spec: &MatrixSpec, dim: usize, path: &str) -> Result<ExprMatrix> {
    if spec.len() != dim {
        return Err(schema(path, format!("expected {dim} rows, found {}", spec.len())));
    }
    let mut entries = Vec::with_capacity(dim * dim);
    for (i, row) in spec.iter().enumerate() {
        if row.len() != dim {
            return Err(schema(
                format!("{path}[{i}]"),
                format!("expected {dim} columns, found {}", row.len()),
            ));
        }
        for (j, e) in row.iter().enumerate() {
            entries.push(e.to_complex(&format!("{path}[{i}][{j}]"))?);
        }
    }
    ExprMatrix::new(dim, entries)
}

fn constant_matrix(spec: &MatrixSpec, dim: usize, path: &str) -> Result<CMatrix> {
    let m = expr_matrix(spec, dim, path)?;
    if m.max_var() > 0 {
        return Err(schema(path, "this matrix must not depend on the parameters"));
    }
    m.eval(&[]).map_err(|e| schema(path, e.to_string()))
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindName {
    Unitary,
    Kraus,
    Mixture,
    PurePath,
    Diagonal,
    Expression,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Analytic,
    CentralDifference,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivativeSpec {
    pub mode: ModeName,
    #[serde(default)]
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub weight: Scalar,
    pub state: MatrixSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    pub dim: usize,
    #[serde(default = "one")]
    pub nparams: usize,
    pub kind: KindName,
    #[serde(default)]
    pub generator: Option<MatrixSpec>,
    #[serde(default)]
    pub base: Option<MatrixSpec>,
    #[serde(default)]
    pub operators: Option<Vec<MatrixSpec>>,
    #[serde(default)]
    pub components: Option<Vec<Component>>,
    #[serde(default)]
    pub vector: Option<Vec<Entry>>,
    #[serde(default)]
    pub probabilities: Option<Vec<Scalar>>,
    #[serde(default)]
    pub matrix: Option<MatrixSpec>,
    #[serde(default)]
    pub derivative: Option<DerivativeSpec>,
    #[serde(default)]
    pub ranges: Option<Vec<[f64; 2]>>,
}

fn one() -> usize {
    1
}

fn require<'a, T>(field: &'a Option<T>, name: &str, kind: &str) -> Result<&'a T> {
    field
        .as_ref()
        .ok_or_else(|| schema(name, format!("required for kind `{kind}`")))
}

/// A family together with the declared parameter ranges.
#[derive(Debug, Clone)]
pub struct Model {
    pub name: Option<String>,
    pub family: StateFamily,
    pub ranges: Option<Vec<(f64, f64)>>,
}

impl Model {
    pub fn range(&self, mu: usize) -> Option<(f64, f64)> {
        self.ranges.as_ref().map(|r| r[mu])
    }
}

impl ModelFile {
    fn kind_label(&self) -> &'static str {
        match self.kind {
            KindName::Unitary => "unitary",
            KindName::Kraus => "kraus",
            KindName::Mixture => "mixture",
            KindName::PurePath => "pure_path",
            KindName::Diagonal => "diagonal",
            KindName::Expression => "expression",
        }
    }

    fn reject_unused(&self) -> Result<()> {
        let used: &[&str] = match self.kind {
            KindName::Unitary => &["generator", "base"],
            KindName::Kraus => &["operators", "base"],
            KindName::Mixture => &["components"],
            KindName::PurePath => &["vector"],
            KindName::Diagonal => &["probabilities"],
            KindName::Expression => &["matrix"],
        };
        let present = [
            ("generator", self.generator.is_some()),
            ("base", self.base.is_some()),
            ("operators", self.operators.is_some()),
            ("components", self.components.is_some()),
            ("vector", self.vector.is_some()),
            ("probabilities", self.probabilities.is_some()),
            ("matrix", self.matrix.is_some()),
        ];
        for (field, set) in present {
            if set && !used.contains(&field) {
                return Err(schema(
                    field,
                    format!("not used by kind `{}`", self.kind_label()),
                ));
            }
        }
        Ok(())
    }

    pub fn into_model(self) -> Result<Model> {
        self.reject_unused()?;
        let d = self.dim;
        let kind = self.kind_label();
        let family_kind = match self.kind {
            KindName::Unitary => FamilyKind::Unitary {
                generator: constant_matrix(require(&self.generator, "generator", kind)?, d, "generator")?,
                base: constant_matrix(require(&self.base, "base", kind)?, d, "base")?,
            },
            KindName::Kraus => FamilyKind::Kraus {
                operators: require(&self.operators, "operators", kind)?
                    .iter()
                    .enumerate()
                    .map(|(k, m)| expr_matrix(m, d, &format!("operators[{k}]")))
                    .collect::<Result<_>>()?,
                base: constant_matrix(require(&self.base, "base", kind)?, d, "base")?,
            },
            KindName::Mixture => FamilyKind::Mixture {
                components: require(&self.components, "components", kind)?
                    .iter()
                    .enumerate()
                    .map(|(k, c)| {
                        Ok((
                            c.weight.to_expr(&format!("components[{k}].weight"))?,
                            constant_matrix(&c.state, d, &format!("components[{k}].state"))?,
                        ))
                    })
                    .collect::<Result<_>>()?,
            },
            KindName::PurePath => FamilyKind::PurePath {
                vector: require(&self.vector, "vector", kind)?
                    .iter()
                    .enumerate()
                    .map(|(k, e)| e.to_complex(&format!("vector[{k}]")))
                    .collect::<Result<_>>()?,
            },
            KindName::Diagonal => FamilyKind::Diagonal {
                probabilities: require(&self.probabilities, "probabilities", kind)?
                    .iter()
                    .enumerate()
                    .map(|(k, e)| e.to_expr(&format!("probabilities[{k}]")))
                    .collect::<Result<_>>()?,
            },
            KindName::Expression => FamilyKind::Expression {
                matrix: expr_matrix(require(&self.matrix, "matrix", kind)?, d, "matrix")?,
            },
        };
        let mut family = StateFamily::new(d, self.nparams, family_kind)?;
        if let Some(spec) = &self.derivative {
            let mode = match spec.mode {
                ModeName::Analytic => DerivativeMode::Analytic,
                ModeName::CentralDifference => DerivativeMode::CentralDifference,
            };
            family = family.with_derivative(mode, spec.step.unwrap_or(DEFAULT_STEP))?;
        }
        let ranges = match self.ranges {
            None => None,
            Some(r) => {
                if r.len() != self.nparams {
                    return Err(schema(
                        "ranges",
                        format!("expected {} intervals, found {}", self.nparams, r.len()),
                    ));
                }
                for (k, [lo, hi]) in r.iter().enumerate() {
                    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                        return Err(schema(format!("ranges[{k}]"), format!("empty interval [{lo}, {hi}]")));
                    }
                }
                Some(r.into_iter().map(|[lo, hi]| (lo, hi)).collect())
            }
        };
        Ok(Model {
            name: self.name,
            family,
            ranges,
        })
    }
}

pub fn parse_model(text: &str) -> Result<Model> {
    from_json::<ModelFile>(text)?.into_model()
}

pub fn load_model(path: &Path) -> Result<Model> {
    parse_model(&read_text(path)?)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovmFile {
    pub elements: Vec<MatrixSpec>,
    #[serde(default)]
    pub labels: Option<Vec<String>>,
}

impl PovmFile {
    pub fn into_povm(self) -> Result<Povm> {
        let d = self.elements.first().map_or(0, Vec::len);
        let elements = self
            .elements
            .iter()
            .enumerate()
            .map(|(k, m)| constant_matrix(m, d, &format!("elements[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        match self.labels {
            Some(labels) => {
                if labels.len() != elements.len() {
                    return Err(schema(
                        "labels",
                        format!("expected {} labels, found {}", elements.len(), labels.len()),
                    ));
                }
                Povm::new(elements, labels)
            }
            None => Povm::unlabeled(elements),
        }
    }
}

pub fn parse_povm(text: &str) -> Result<Povm> {
    from_json::<PovmFile>(text)?.into_povm()
}

pub fn load_povm(path: &Path) -> Result<Povm> {
    parse_povm(&read_text(path)?)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorFile {
    pub density: String,
    pub interval: [f64; 2],
}

impl PriorFile {
    pub fn into_prior(self) -> Result<Prior> {
        let density = parse(&self.density).map_err(|e| schema("density", e.to_string()))?;
        Prior::new(density, self.interval[0], self.interval[1])
    }
}

pub fn parse_prior(text: &str) -> Result<Prior> {
    from_json::<PriorFile>(text)?.into_prior()
}

pub fn load_prior(path: &Path) -> Result<Prior> {
    parse_prior(&read_text(path)?)
}

pub fn parse_map(map: &[String]) -> Result<Vec<Expr>> {
    map.iter()
        .enumerate()
        .map(|(k, s)| parse(s).map_err(|e| schema(format!("map[{k}]"), e.to_string())))
        .collect()
}

pub fn reparam_from_rows(rows: &[Vec<f64>]) -> Result<Reparam> {
    let n = rows.len();
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(schema(
            format!("matrix[{i}]"),
            format!("expected {n} columns, found {}", row.len()),
        ));
    }
    Reparam::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ErrorClass;
    use crate::model::ParamPoint;
    use num_complex::Complex64;

    fn schema_path(err: Error) -> String {
        match err {
            Error::Schema { path, .. } => path,
            other => panic!("expected a schema error, got {other:?}"),
        }
    }

    #[test]
    fn diagonal_model() {
        let m = parse_model(
            r#"{"dim": 2, "kind": "diagonal", "probabilities": ["x", "1-x"], "ranges": [[0, 1]]}"#,
        )
        .unwrap();
        let rho = m.family.evaluate(&ParamPoint::scalar(0.25).unwrap()).unwrap();
        assert!((rho.matrix()[(0, 0)].re - 0.25).abs() < 1e-15);
        assert_eq!(m.range(0), Some((0.0, 1.0)));
    }

    #[test]
    fn entry_forms() {
        let m = parse_model(
            r#"{"dim": 2, "kind": "expression", "matrix": [
                [0.5, {"re": "0.1*x", "im": -0.2}],
                [[0.1, 0.2], "0.5"]
            ]}"#,
        )
        .unwrap();
        let rho = m.family.evaluate(&ParamPoint::scalar(1.0).unwrap()).unwrap();
        assert_eq!(rho.matrix()[(0, 1)], Complex64::new(0.1, -0.2));
        assert_eq!(rho.matrix()[(1, 0)], Complex64::new(0.1, 0.2));
    }

    #[test]
    fn schema_errors_carry_paths() {
        let err = parse_model(r#"{"dim": 2, "kind": "diagonal", "probabilities": ["x", [1, 2, 3]]}"#)
            .unwrap_err();
        assert_eq!(schema_path(err), "probabilities[1]");

        let err = parse_model(r#"{"dim": "two", "kind": "diagonal"}"#).unwrap_err();
        assert_eq!(schema_path(err), "dim");

        let err = parse_model(r#"{"dim": 2, "kind": "sideways"}"#).unwrap_err();
        assert_eq!(schema_path(err), "kind");

        let err = parse_model(r#"{"dim": 2, "kind": "unitary", "base": [[1, 0], [0, 0]]}"#).unwrap_err();
        assert_eq!(schema_path(err), "generator");

        let err = parse_model(r#"{"dim": 2, "kind": "pure_path", "vector": ["cos(x)", "sin(x"]}"#)
            .unwrap_err();
        assert_eq!(err.class(), ErrorClass::Validation);
        assert_eq!(schema_path(err), "vector[1]");

        let err = parse_model(r#"{"dim": 2, "kind": "diagonal", "probabilities": ["x", "1-x"], "extra": 1}"#)
            .unwrap_err();
        assert_eq!(schema_path(err), "extra");
    }

    #[test]
    fn wrong_shape() {
        let err = parse_model(
            r#"{"dim": 2, "kind": "unitary", "generator": [[1, 0], [0]], "base": [[1, 0], [0, 0]]}"#,
        )
        .unwrap_err();
        assert_eq!(schema_path(err), "generator[1]");
    }

    #[test]
    fn povm_file() {
        let p = parse_povm(r#"{"elements": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]], "labels": ["0", "1"]}"#).unwrap();
        assert_eq!(p.len(), 2);
        assert!(parse_povm(r#"{"elements": [[[1, 0], [0, 0]]]}"#).is_err());
    }

    #[test]
    fn prior_file() {
        let p = parse_prior(r#"{"density": "1", "interval": [0, 1]}"#).unwrap();
        assert_eq!(p.support(), (0.0, 1.0));
        assert!(parse_prior(r#"{"density": "2", "interval": [0, 1]}"#).is_err());
    }

    #[test]
    fn reparam_forms() {
        let b = reparam_from_rows(&[vec![0.5, 0.5], vec![0.5, -0.5]]).unwrap();
        let map = parse_map(&["x1+x2".into(), "x1-x2".into()]).unwrap();
        let m = Reparam::from_map(&map, &[0.5, 0.0], DEFAULT_STEP).unwrap();
        assert!((b.matrix() * 2.0 - m.matrix()).amax() < 1e-9);
        assert!(reparam_from_rows(&[vec![1.0, 0.0], vec![1.0]]).is_err());
    }

    #[test]
    fn missing_file_is_validation() {
        let err = load_model(Path::new("/nonexistent/model.json")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert_eq!(err.class(), ErrorClass::Validation);
    }
}
