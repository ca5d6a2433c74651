//! Reference families. The JSON models shipped under `models/` describe the
//! same families; tests check that both lower to identical states.

use crate::error::Result;
use crate::expr::{parse, Expr};
use crate::model::{ComplexExpr, DerivativeMode, ExprMatrix, FamilyKind, StateFamily};
use crate::numat::{from_rows, real_diag, CMatrix};

fn exprs(src: &[&str]) -> Result<Vec<Expr>> {
    Ok(src.iter().map(|s| parse(s)).collect::<std::result::Result<_, _>>()?)
}

pub fn diagonal_from_strings(probs: &[&str]) -> Result<StateFamily> {
    diagonal_with_params(probs, 1)
}

pub fn diagonal_with_params(probs: &[&str], nparams: usize) -> Result<StateFamily> {
    let probabilities = exprs(probs)?;
    StateFamily::new(probs.len(), nparams, FamilyKind::Diagonal { probabilities })
}

/// Real-valued path entries.
pub fn pure_path_from_strings(entries: &[&str]) -> Result<StateFamily> {
    let vector = exprs(entries)?
        .into_iter()
        .map(ComplexExpr::real)
        .collect::<Vec<_>>();
    StateFamily::new(entries.len(), 1, FamilyKind::PurePath { vector })
}

/// Real-valued Kraus operators given as row-major expression strings.
pub fn kraus_from_strings(dim: usize, ops: &[&[&[&str]]], base: &CMatrix) -> Result<StateFamily> {
    let mut operators = Vec::new();
    for op in ops {
        let mut entries = Vec::new();
        for row in op.iter() {
            for s in row.iter() {
                entries.push(ComplexExpr::real(parse(s)?));
            }
        }
        operators.push(ExprMatrix::new(dim, entries)?);
    }
    StateFamily::new(
        dim,
        1,
        FamilyKind::Kraus {
            operators,
            base: base.clone(),
        },
    )
}

pub fn unitary(generator: CMatrix, base: CMatrix) -> Result<StateFamily> {
    let d = generator.nrows();
    StateFamily::new(d, 1, FamilyKind::Unitary { generator, base })
}

fn plus_state() -> CMatrix {
    from_rows(&[&[(0.5, 0.0), (0.5, 0.0)], &[(0.5, 0.0), (0.5, 0.0)]])
}

fn sigma_z_half() -> CMatrix {
    real_diag(&[0.5, -0.5])
}

/// `2^-17`, close to the default step. Entries linear in the parameter then
/// difference without round-off at dyadic points.
pub const DYADIC_STEP: f64 = 7.62939453125e-6;

fn sigma_x_half() -> CMatrix {
    from_rows(&[&[(0.0, 0.0), (0.5, 0.0)], &[(0.5, 0.0), (0.0, 0.0)]])
}

/// `diag(x, 1 - x)`.
pub fn diagonal_qubit() -> StateFamily {
    diagonal_from_strings(&["x", "1-x"])
        .and_then(|f| f.with_derivative(DerivativeMode::Analytic, DYADIC_STEP))
        .expect("static family")
}

/// `cos x |0> + sin x |1>`.
pub fn rotation_path() -> StateFamily {
    pure_path_from_strings(&["cos(x)", "sin(x)"]).expect("static family")
}

/// `|+>` under `exp(-i x sz/2)`.
pub fn phase_plus() -> StateFamily {
    unitary(sigma_z_half(), plus_state()).expect("static family")
}

/// `diag(0.75, 0.25)` under `exp(-i x sx/2)`.
pub fn unitary_mixed() -> StateFamily {
    unitary(sigma_x_half(), real_diag(&[0.75, 0.25])).expect("static family")
}

/// Amplitude damping with strength `x` acting on `|1><1|`.
pub fn amplitude_damping() -> StateFamily {
    kraus_from_strings(
        2,
        &[
            &[&["1", "0"], &["0", "sqrt(1-x)"]],
            &[&["0", "sqrt(x)"], &["0", "0"]],
        ],
        &real_diag(&[0.0, 1.0]),
    )
    .expect("static family")
}

/// `diag(x1, x2, 1 - x1 - x2)`.
pub fn qutrit_diagonal() -> StateFamily {
    diagonal_with_params(&["x1", "x2", "1-x1-x2"], 2)
        .and_then(|f| f.with_derivative(DerivativeMode::Analytic, DYADIC_STEP))
        .expect("static family")
}

/// Fixed `diag(0.3, 0.7)`, nominally depending on one parameter.
pub fn constant_qubit() -> StateFamily {
    diagonal_from_strings(&["0.3", "0.7"]).expect("static family")
}

/// Phase path `(e^{-ix/2}|0> + e^{ix/2}|1>)/sqrt 2`, the pure-path twin of
/// [`phase_plus`].
pub fn phase_path() -> StateFamily {
    let half = (0.5f64).sqrt();
    let vector = vec![
        ComplexExpr::new(
            parse(&format!("{half}*cos(x/2)")).expect("static"),
            parse(&format!("-{half}*sin(x/2)")).expect("static"),
        ),
        ComplexExpr::new(
            parse(&format!("{half}*cos(x/2)")).expect("static"),
            parse(&format!("{half}*sin(x/2)")).expect("static"),
        ),
    ];
    StateFamily::new(2, 1, FamilyKind::PurePath { vector }).expect("static family")
}

/// Mixture of `|0><0|` and `|+><+|` with weights `(x, 1 - x)`.
pub fn mixture_qubit() -> StateFamily {
    let components = vec![
        (parse("x").expect("static"), real_diag(&[1.0, 0.0])),
        (parse("1-x").expect("static"), plus_state()),
    ];
    StateFamily::new(2, 1, FamilyKind::Mixture { components }).expect("static family")
}

/// Bloch-ball family given entry by entry:
/// `rho = (I + r (sin x sx + cos x sz))/2` with `r = 0.8`.
pub fn bloch_expression() -> StateFamily {
    let c = |re: &str, im: &str| ComplexExpr::new(parse(re).expect("static"), parse(im).expect("static"));
    let entries = vec![
        c("0.5+0.4*cos(x)", "0"),
        c("0.4*sin(x)", "0"),
        c("0.4*sin(x)", "0"),
        c("0.5-0.4*cos(x)", "0"),
    ];
    let matrix = ExprMatrix::new(2, entries).expect("static");
    StateFamily::new(2, 1, FamilyKind::Expression { matrix }).expect("static family")
}

/// `I/2` as a plain matrix.
pub fn maximally_mixed_qubit() -> CMatrix {
    real_diag(&[0.5, 0.5])
}
