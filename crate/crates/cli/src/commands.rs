use std::path::Path;

use qmetro::files::{self, Model};
use qmetro::geometry::bures_metric_check;
use qmetro::mc::{crb_experiment, Experiment, RNG_ALGORITHM};
use qmetro::measure::{
    classical_fisher, classical_fisher_matrix, optimal_estimator, optimal_povm, Povm,
};
use qmetro::multiparam::{crb_bounds, qfi_matrix, reparametrize, Reparam, ATTAINABILITY_NOTE};
use qmetro::qfi::{
    estimability, qfi_decomposed, qfi_pure, qfi_scalar, qfi_unitary, van_trees, MeasurementCount,
};
use qmetro::sld::{self, lyapunov_residual, DEFAULT_RANK_TOL};
use qmetro::{Error, ParamPoint, Result, StateFamily};
use serde_json::{json, Value};

use crate::report::{complex_matrix, num, nums, real_matrix, Report};
use crate::{Command, MethodArg, Point};

fn load_model(report: &mut Report, path: &Path) -> Result<Model> {
    let text = files::read_text(path)?;
    report.inputs.file("model", path, &text);
    files::parse_model(&text)
}

fn load_povm(report: &mut Report, path: &Path) -> Result<Povm> {
    let text = files::read_text(path)?;
    report.inputs.file("povm", path, &text);
    files::parse_povm(&text)
}

/// Loads the model and checks `--lambda` against it.
fn setup(report: &mut Report, point: &Point) -> Result<(Model, ParamPoint)> {
    let model = load_model(report, &point.model)?;
    report.inputs.set("lambda", nums(&point.lambda));
    let p = parse_point(&model, &point.lambda)?;
    range_warnings(report, &model, &p);
    Ok((model, p))
}

fn parse_point(model: &Model, lambda: &[f64]) -> Result<ParamPoint> {
    let n = model.family.nparams();
    if lambda.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "--lambda is required ({n} comma-separated value(s))"
        )));
    }
    if lambda.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: lambda.len(),
        });
    }
    ParamPoint::new(lambda.to_vec())
}

fn range_warnings(report: &mut Report, model: &Model, p: &ParamPoint) {
    for (mu, &v) in p.values().iter().enumerate() {
        if let Some((lo, hi)) = model.range(mu) {
            if v < lo || v > hi {
                report.warn(format!(
                    "parameter {} = {v} lies outside the declared range [{lo}, {hi}]",
                    mu + 1
                ));
            }
        }
    }
}

fn rank_warning(report: &mut Report, fam: &StateFamily, p: &ParamPoint) -> Result<()> {
    let rank = fam.evaluate(p)?.rank(DEFAULT_RANK_TOL);
    if rank < fam.dim() {
        report.warn(format!(
            "state has rank {rank} < {}; the SLD is fixed to zero on the kernel-kernel block",
            fam.dim()
        ));
    }
    Ok(())
}

fn parse_rows(src: &str) -> Result<Vec<Vec<f64>>> {
    src.split(';')
        .map(|row| {
            row.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::InvalidArgument(format!("--b entry `{}`: {e}", v.trim())))
                })
                .collect()
        })
        .collect()
}

pub fn run(command: Command) -> Result<Report> {
    match command {
        Command::Qfi { point, method } => {
            let mut r = Report::new("qfi");
            let (model, p) = setup(&mut r, &point)?;
            let fam = &model.family;
            let name = match method {
                MethodArg::Generic => "generic",
                MethodArg::Pure => "pure",
                MethodArg::Unitary => "unitary",
                MethodArg::Decomposed => "decomposed",
            };
            r.inputs.set("method", json!(name));
            let q = match method {
                MethodArg::Generic => qfi_scalar(fam, &p)?,
                MethodArg::Pure => qfi_pure(fam, &p)?,
                MethodArg::Unitary => qfi_unitary(fam)?,
                MethodArg::Decomposed => qfi_decomposed(fam, &p)?,
            };
            rank_warning(&mut r, fam, &p)?;
            r.result("h", num(q.h));
            r.result("method", json!(q.method.name()));
            if let (Some(c), Some(qp)) = (q.classical_part, q.quantum_part) {
                r.result("classical_part", num(c));
                r.result("quantum_part", num(qp));
            }
            Ok(r)
        }
        Command::Sld { point, param } => {
            let mut r = Report::new("sld");
            let (model, p) = setup(&mut r, &point)?;
            r.inputs.set("param", json!(param));
            let fam = &model.family;
            if param == 0 || param > fam.nparams() {
                return Err(Error::InvalidArgument(format!(
                    "--param must be in 1..={}, got {param}",
                    fam.nparams()
                )));
            }
            let sol = sld::solve(fam, &p, param - 1)?;
            rank_warning(&mut r, fam, &p)?;
            let l = sol.sld.matrix();
            r.result("sld", complex_matrix(l));
            r.result("support_rank", json!(sol.sld.support_rank()));
            r.result("residual", num(lyapunov_residual(&sol.sld, &sol.rho, &sol.drho)));
            r.result("h", num(sol.rho.expect(&(l * l))));
            Ok(r)
        }
        Command::PovmFisher { point, povm } => {
            let mut r = Report::new("povm-fisher");
            let (model, p) = setup(&mut r, &point)?;
            let povm = load_povm(&mut r, &povm)?;
            let fam = &model.family;
            let probs = qmetro::measure::born_probs(&fam.evaluate(&p)?, &povm)?;
            r.result("probabilities", nums(&probs));
            r.result("labels", json!(povm.labels()));
            if fam.nparams() == 1 {
                let f = classical_fisher(fam, &povm, &p)?;
                let h = qfi_scalar(fam, &p)?.h;
                if f.boundary {
                    r.warn(format!(
                        "outcomes {:?} have vanishing probability but non-zero slope; the point is on a boundary of the support",
                        f.skipped
                    ));
                }
                r.result("fisher", num(f.value));
                r.result("qfi", num(h));
                r.result("skipped_outcomes", json!(f.skipped));
            } else {
                let f = classical_fisher_matrix(fam, &povm, &p)?;
                r.result("fisher_matrix", real_matrix(&f));
                r.result("qfi_matrix", real_matrix(qfi_matrix(fam, &p)?.matrix()));
            }
            Ok(r)
        }
        Command::OptimalPovm { point } => {
            let mut r = Report::new("optimal-povm");
            let (model, p) = setup(&mut r, &point)?;
            let fam = &model.family;
            let povm = optimal_povm(fam, &p)?;
            let f = classical_fisher(fam, &povm, &p)?;
            let h = qfi_scalar(fam, &p)?.h;
            r.result(
                "elements",
                Value::Array(povm.elements().iter().map(complex_matrix).collect()),
            );
            r.result("labels", json!(povm.labels()));
            r.result("fisher", num(f.value));
            r.result("qfi", num(h));
            Ok(r)
        }
        Command::Estimator { point } => {
            let mut r = Report::new("estimator");
            let (model, p) = setup(&mut r, &point)?;
            let fam = &model.family;
            let est = optimal_estimator(fam, &p)?;
            let rho = fam.evaluate(&p)?;
            let o = est.matrix();
            let mean = rho.expect(o);
            let variance = rho.expect(&(o * o)) - mean * mean;
            r.result("operator", complex_matrix(o));
            r.result("mean", num(mean));
            r.result("variance", num(variance));
            r.result("qfi", num(est.qfi()));
            r.result("crb", num(1.0 / est.qfi()));
            Ok(r)
        }
        Command::QfiMatrix { point } => {
            let mut r = Report::new("qfi-matrix");
            let (model, p) = setup(&mut r, &point)?;
            let h = qfi_matrix(&model.family, &p)?;
            r.result("h", real_matrix(h.matrix()));
            Ok(r)
        }
        Command::Crb { point, measurements } => {
            let mut r = Report::new("crb");
            let (model, p) = setup(&mut r, &point)?;
            r.inputs.set("measurements", json!(measurements));
            let h = qfi_matrix(&model.family, &p)?;
            let b = crb_bounds(&h, measurements)?;
            if h.n() > 1 {
                r.warn(ATTAINABILITY_NOTE);
            }
            r.result("h", real_matrix(h.matrix()));
            r.result("per_parameter", nums(&b.per_parameter));
            r.result("covariance", real_matrix(&b.covariance));
            Ok(r)
        }
        Command::Reparam {
            point,
            b,
            map,
            measurements,
        } => {
            let mut r = Report::new("reparam");
            let model = load_model(&mut r, &point.model)?;
            r.inputs.set("lambda", nums(&point.lambda));
            r.inputs.set("measurements", json!(measurements));
            let (jac, old) = match (b, map) {
                (Some(b), None) => {
                    r.inputs.set("b", json!(b));
                    let p = parse_point(&model, &point.lambda)?;
                    (files::reparam_from_rows(&parse_rows(&b)?)?, p)
                }
                (None, Some(map)) => {
                    r.inputs.set("map", json!(map));
                    let parts: Vec<String> = map.split(';').map(|s| s.trim().to_string()).collect();
                    let exprs = files::parse_map(&parts)?;
                    let new_point = parse_point(&model, &point.lambda)?;
                    let old = Reparam::map_point(&exprs, new_point.values())?;
                    let jac = Reparam::from_map(&exprs, new_point.values(), model.family.step())?;
                    (jac, ParamPoint::new(old)?)
                }
                _ => {
                    return Err(Error::InvalidArgument(
                        "give exactly one of --b or --map".into(),
                    ))
                }
            };
            range_warnings(&mut r, &model, &old);
            let h = qfi_matrix(&model.family, &old)?;
            let h_tilde = reparametrize(&h, &jac)?;
            let bounds = crb_bounds(&h_tilde, measurements)?;
            if h.n() > 1 {
                r.warn(ATTAINABILITY_NOTE);
            }
            r.result("old_point", nums(old.values()));
            r.result("b", real_matrix(jac.matrix()));
            r.result("h", real_matrix(h.matrix()));
            r.result("h_tilde", real_matrix(h_tilde.matrix()));
            r.result("per_parameter", nums(&bounds.per_parameter));
            Ok(r)
        }
        Command::BuresCheck { point, step } => {
            let mut r = Report::new("bures-check");
            let (model, p) = setup(&mut r, &point)?;
            r.inputs.set("step", num(step));
            let b = bures_metric_check(&model.family, &p, step)?;
            for w in &b.warnings {
                r.warn(w.clone());
            }
            r.result("fidelity", num(b.fidelity));
            r.result("bures_sq", num(b.bures_sq));
            r.result("metric_fd", num(b.metric_fd));
            r.result("metric_step", num(b.metric_step));
            r.result("metric_half_step", num(b.metric_half_step));
            r.result("qfi_quarter", num(b.qfi_quarter));
            r.result("rel_err", num(b.rel_err));
            Ok(r)
        }
        Command::Estimability { point, delta } => {
            let mut r = Report::new("estimability");
            let (model, p) = setup(&mut r, &point)?;
            r.inputs.set("delta", num(delta));
            model.family.require_single()?;
            let h = qfi_scalar(&model.family, &p)?.h;
            let e = estimability(p.values()[0], h)?;
            r.result("h", num(h));
            r.result("q", num(e.q));
            let m = match e.measurements(delta)? {
                MeasurementCount::Finite(m) => json!(m),
                MeasurementCount::Unbounded => {
                    r.warn("Q vanishes; no finite number of measurements reaches the requested precision");
                    json!("unbounded")
                }
            };
            r.result("measurements", m);
            Ok(r)
        }
        Command::VanTrees {
            model,
            prior,
            measurements,
            povm,
        } => {
            let mut r = Report::new("van-trees");
            let m = load_model(&mut r, &model)?;
            let text = files::read_text(&prior)?;
            r.inputs.file("prior", &prior, &text);
            r.inputs.set("measurements", json!(measurements));
            let prior = files::parse_prior(&text)?;
            let povm = povm.map(|path| load_povm(&mut r, &path)).transpose()?;
            let v = van_trees(&m.family, &prior, measurements, povm.as_ref())?;
            r.result("z_f", num(v.z_f));
            r.result("z_h", num(v.z_h));
            r.result("prior_information", num(v.prior_information));
            r.result("mean_fisher", num(v.mean_fisher));
            r.result("mean_qfi", num(v.mean_qfi));
            r.result("bound", num(v.bound));
            Ok(r)
        }
        Command::Simulate {
            point,
            povm,
            shots,
            reps,
            seed,
            lo,
            hi,
        } => {
            let mut r = Report::new("simulate");
            let (model, p) = setup(&mut r, &point)?;
            let fam = model.family.clone();
            fam.require_single()?;
            let (povm, source) = match povm {
                Some(path) => (load_povm(&mut r, &path)?, "file"),
                None => (optimal_povm(&fam, &p)?, "sld-eigenprojectors"),
            };
            let declared = model.range(0);
            let lo = lo.or(declared.map(|d| d.0));
            let hi = hi.or(declared.map(|d| d.1));
            let (Some(lo), Some(hi)) = (lo, hi) else {
                return Err(Error::InvalidArgument(
                    "the model declares no range; pass --lo and --hi".into(),
                ));
            };
            r.inputs.set("shots", json!(shots));
            r.inputs.set("reps", json!(reps));
            r.inputs.set("seed", json!(seed));
            r.inputs.set("lo", num(lo));
            r.inputs.set("hi", num(hi));
            let exp = Experiment {
                family: fam,
                true_lambda: p.values()[0],
                povm,
                shots,
                reps,
                seed,
                lo,
                hi,
            };
            let rep = crb_experiment(&exp)?;
            if rep.boundary_hits > 0 {
                r.warn(format!(
                    "{} of {reps} estimates sit on the edge of [{lo}, {hi}]",
                    rep.boundary_hits
                ));
            }
            r.result("rng", json!(RNG_ALGORITHM));
            r.result("povm_source", json!(source));
            r.result("mean", num(rep.mean));
            r.result("bias", num(rep.bias));
            r.result("empirical_var", num(rep.empirical_var));
            r.result("fisher", num(rep.fisher));
            r.result("qfi", num(rep.qfi));
            r.result("crb_classical", num(rep.crb_classical));
            r.result("crb_quantum", num(rep.crb_quantum));
            r.result("ratio_to_crb", num(rep.ratio_to_crb));
            r.result("ratio_to_quantum_crb", num(rep.ratio_to_quantum_crb));
            r.result("boundary_hits", json!(rep.boundary_hits));
            r.result("estimates", nums(&rep.estimates));
            Ok(r)
        }
    }
}
