use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use qdilate::generators::{generate, GeneratorSpec, Instance};
use qdilate::hardy::{verify_rotational_properties, TruncatedHardy};
use qdilate::linalg::{op_norm, RelationVariant};
use qdilate::pair::dilate_pair;
use qdilate::phase::{verify_doubly_q, verify_q_pair, verify_q_tuple, QPair, QTuple};
use qdilate::report::{all_passed, Check};
use qdilate::tuple::{brehmer_check, brehmer_dilation, fuglede_putnam_check, pure_dilation};
use qdilate::{DilationError, ToleranceConfig};

const EXIT_FAIL: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NONCONV: u8 = 3;

#[derive(Parser)]
#[command(
    name = "qdilate",
    version,
    about = "Isometric dilations of Q-commuting pairs and q-commuting tuples"
)]
struct Cli {
    /// Verification tolerance (overrides the default 1e-8)
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Write the JSON output here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance from a generator spec (a JSON file or inline JSON)
    Gen {
        spec: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Dilate a pair (or a q-commuting 2-tuple, read as a left pair with Q = qI)
    DilatePair {
        input: PathBuf,
        #[arg(long, default_value_t = 5)]
        kmax: usize,
    },
    /// Dilate a tuple into rotational shifts (pure) or a sum over subsets (brehmer)
    DilateTuple {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Pure)]
        mode: Mode,
        /// Fixed degree cap; adaptive when omitted
        #[arg(long)]
        deg: Option<usize>,
    },
    /// Run the property battery on an instance
    Verify {
        input: PathBuf,
        /// Degree cap of the rotational model space
        #[arg(long, default_value_t = 3)]
        deg: usize,
    },
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Pure,
    Brehmer,
}

#[derive(Serialize)]
struct ErrorBody {
    code: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Value::is_null")]
    data: Value,
}

#[derive(Serialize)]
struct Report {
    command: &'static str,
    status: &'static str,
    tolerances: ToleranceConfig,
    truncation: Value,
    checks: Vec<Check>,
    details: Value,
    error: Option<ErrorBody>,
}

impl Report {
    fn new(command: &'static str, cfg: &ToleranceConfig) -> Self {
        Report {
            command,
            status: "pass",
            tolerances: *cfg,
            truncation: Value::Null,
            checks: Vec::new(),
            details: Value::Null,
            error: None,
        }
    }

    fn finish(mut self) -> (Self, u8) {
        if self.error.is_none() && !all_passed(&self.checks) {
            self.status = "fail";
            return (self, EXIT_FAIL);
        }
        (self, 0)
    }

    fn fail_with(mut self, err: &DilationError) -> (Self, u8) {
        let code = exit_code(err);
        self.status = if code == EXIT_FAIL { "fail" } else { "error" };
        self.error = Some(error_body(err));
        (self, code)
    }
}

fn exit_code(err: &DilationError) -> u8 {
    match err {
        e if e.is_non_convergence() => EXIT_NONCONV,
        DilationError::NotPure
        | DilationError::NotSzego { .. }
        | DilationError::NotBrehmer { .. }
        | DilationError::IsometryDefect { .. } => EXIT_FAIL,
        _ => EXIT_INPUT,
    }
}

fn error_body(err: &DilationError) -> ErrorBody {
    let data = match err {
        DilationError::NotSzego { min_eigenvalue } => json!({ "min_eigenvalue": min_eigenvalue }),
        DilationError::NotBrehmer {
            subset,
            min_eigenvalue,
        } => json!({
            "subset": subset,
            "min_eigenvalue": min_eigenvalue,
        }),
        DilationError::RelationViolated {
            residual,
            norm_excess,
        } => {
            json!({ "residual": residual, "norm_excess": norm_excess })
        }
        DilationError::TruncationNotConverged { deg_cap, defect } => {
            json!({ "deg_cap": deg_cap, "defect": defect })
        }
        DilationError::IsometryDefect { residual } => json!({ "residual": residual }),
        _ => Value::Null,
    };
    ErrorBody {
        code: err.code(),
        message: err.to_string(),
        data,
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn read_instance(path: &Path) -> qdilate::Result<Instance> {
    let text = fs::read_to_string(path)?;
    let inst: Instance = serde_json::from_str(&text)?;
    inst.revalidate()
}

fn read_spec(arg: &str) -> qdilate::Result<GeneratorSpec> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg)?
    };
    Ok(serde_json::from_str(&text)?)
}

/// A 2-tuple `T1 T2 = q T2 T1` is the left pair with `Q = qI`.
fn as_pair(inst: Instance) -> qdilate::Result<QPair> {
    match inst {
        Instance::Pair(p) => Ok(p),
        Instance::Tuple(t) if t.n() == 2 => {
            let q = t.phases().q_value(0, 1)?;
            QPair::scalar(t.op(0).clone(), t.op(1).clone(), q, RelationVariant::Left)
        }
        Instance::Tuple(t) => Err(DilationError::InvalidInstance(format!(
            "dilate-pair needs a pair or a 2-tuple, got {} operators",
            t.n()
        ))),
    }
}

fn as_tuple(inst: Instance) -> qdilate::Result<QTuple> {
    match inst {
        Instance::Tuple(t) => Ok(t),
        Instance::Pair(_) => Err(DilationError::InvalidInstance(
            "dilate-tuple needs a tuple".into(),
        )),
    }
}

fn cmd_gen(spec: &str, seed: u64, cfg: &ToleranceConfig) -> qdilate::Result<(Value, String)> {
    let spec = read_spec(spec)?;
    let inst = generate(&spec, seed)?;
    let summary = match &inst {
        Instance::Tuple(t) => {
            let rel = verify_q_tuple(t, cfg);
            format!(
                "tuple n={} dim={} relation_residual={:.3e} norm_excess={:.3e}",
                t.n(),
                t.dim(),
                rel.max_relation_residual,
                rel.max_norm_excess
            )
        }
        Instance::Pair(p) => {
            let rel = verify_q_pair(p, cfg);
            format!(
                "pair {} dim={} relation_residual={:.3e} norm_excess={:.3e}",
                p.variant.name(),
                p.dim(),
                rel.max_relation_residual,
                rel.max_norm_excess
            )
        }
    };
    Ok((to_value(&inst), summary))
}

fn cmd_dilate_pair(input: &Path, kmax: usize, cfg: &ToleranceConfig) -> (Report, u8) {
    let mut rep = Report::new("dilate-pair", cfg);
    rep.truncation = json!({ "k_max": kmax, "n_blocks": kmax + 2 });
    let pair = match read_instance(input).and_then(as_pair) {
        Ok(p) => p,
        Err(e) => return rep.fail_with(&e),
    };
    match dilate_pair(&pair, kmax, cfg) {
        Ok((_, r)) => {
            rep.checks = r.checks();
            rep.details = to_value(&r);
            rep.finish()
        }
        Err(e) => {
            rep.details = to_value(&verify_q_pair(&pair, cfg));
            rep.fail_with(&e)
        }
    }
}

fn cmd_dilate_tuple(
    input: &Path,
    mode: Mode,
    deg: Option<usize>,
    cfg: &ToleranceConfig,
) -> (Report, u8) {
    let mut rep = Report::new("dilate-tuple", cfg);
    rep.truncation = json!({ "mode": mode, "deg_cap": deg, "adaptive": deg.is_none() });
    let t = match read_instance(input).and_then(as_tuple) {
        Ok(t) => t,
        Err(e) => return rep.fail_with(&e),
    };
    let relation = verify_q_tuple(&t, cfg);
    if let Err(e) = relation.clone().into_result() {
        rep.details = json!({ "relation": relation });
        return rep.fail_with(&e);
    }
    let positivity = match brehmer_check(&t, cfg) {
        Ok(p) => p,
        Err(e) => return rep.fail_with(&e),
    };
    match mode {
        Mode::Pure => match pure_dilation(&t, deg, cfg) {
            Ok(d) => {
                rep.truncation =
                    json!({ "mode": mode, "deg_cap": d.report.deg_cap, "adaptive": deg.is_none() });
                rep.checks = d.report.checks();
                rep.details = json!({ "positivity": positivity, "pure": d.report });
                rep.finish()
            }
            Err(e) => {
                rep.details = json!({ "positivity": positivity });
                rep.fail_with(&e)
            }
        },
        Mode::Brehmer => match brehmer_dilation(&t, deg, cfg) {
            Ok(d) => {
                rep.truncation =
                    json!({ "mode": mode, "deg_cap": d.report.deg_cap, "adaptive": deg.is_none() });
                rep.checks = d.report.checks();
                rep.details = to_value(&d.report);
                rep.finish()
            }
            Err(e) => {
                rep.details = json!({ "positivity": positivity });
                rep.fail_with(&e)
            }
        },
    }
}

fn verify_tuple(
    t: &QTuple,
    deg: usize,
    cfg: &ToleranceConfig,
    rep: &mut Report,
) -> qdilate::Result<()> {
    let relation = verify_q_tuple(t, cfg);
    rep.checks.extend(relation.checks("q_relation"));
    let doubly = verify_doubly_q(t, cfg);
    let positivity = brehmer_check(t, cfg)?;
    for s in &positivity.subsets {
        let name: Vec<String> = s.subset.iter().map(|i| i.to_string()).collect();
        rep.checks.push(Check::flag(
            format!("brehmer_psd_{{{}}}", name.join(",")),
            s.is_psd,
        ));
    }
    let sp = TruncatedHardy::new(t.n(), 1, deg)?;
    let model = verify_rotational_properties(&sp, t.phases(), cfg.verify_tol)?;
    rep.checks.push(Check::le(
        "model_q_commutation",
        model.q_commutation,
        cfg.verify_tol,
    ));
    rep.checks
        .push(Check::le("model_isometry", model.isometry, cfg.verify_tol));
    rep.checks
        .push(Check::le("model_doubly_q", model.doubly_q, cfg.verify_tol));
    rep.checks.push(Check::le(
        "model_adjoint_formula",
        model.adjoint_formula,
        cfg.verify_tol,
    ));
    // Fuglede-Putnam on every ordered pair whose second operator is normal.
    let mut fp = Vec::new();
    for i in 0..t.n() {
        for j in 0..t.n() {
            if i == j {
                continue;
            }
            let n = t.op(j);
            let normality = op_norm(&(n * n.adjoint() - n.adjoint() * n));
            if normality > cfg.verify_tol {
                continue;
            }
            let q = t.phases().q_value(i, j)?;
            if let Ok(r) = fuglede_putnam_check(t.op(i), n, q, cfg) {
                rep.checks.push(Check::le(
                    format!("fuglede_putnam_{i}_{j}"),
                    r.conclusion,
                    r.threshold,
                ));
                fp.push(json!({ "x": i, "n": j, "report": r }));
            }
        }
    }
    rep.truncation = json!({ "model_deg_cap": deg });
    rep.details = json!({
        "kind": "tuple",
        "relation": relation,
        "doubly_q": doubly,
        "positivity": positivity,
        "rotational_model": model,
        "fuglede_putnam": fp,
    });
    Ok(())
}

fn cmd_verify(input: &Path, deg: usize, cfg: &ToleranceConfig) -> (Report, u8) {
    let mut rep = Report::new("verify", cfg);
    let inst = match read_instance(input) {
        Ok(i) => i,
        Err(e) => return rep.fail_with(&e),
    };
    match inst {
        Instance::Tuple(t) => {
            if let Err(e) = verify_tuple(&t, deg, cfg, &mut rep) {
                return rep.fail_with(&e);
            }
        }
        Instance::Pair(p) => {
            let relation = verify_q_pair(&p, cfg);
            rep.checks = relation.checks("q_relation");
            rep.details = json!({ "kind": "pair", "variant": p.variant, "relation": relation });
        }
    }
    rep.finish()
}

fn emit(value: &Value, out: Option<&Path>) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)? + "\n";
    match out {
        Some(p) => fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = ToleranceConfig::default();
    if let Some(tol) = cli.tol {
        cfg = cfg.with_verify_tol(tol);
    }
    let out = cli.out.as_deref();
    if let Err(e) = cfg.validate() {
        let (rep, code) = Report::new("config", &ToleranceConfig::default()).fail_with(&e);
        let _ = emit(&to_value(&rep), None);
        return ExitCode::from(code);
    }

    let (value, code) = match &cli.command {
        Command::Gen { spec, seed } => match cmd_gen(spec, *seed, &cfg) {
            Ok((value, summary)) => {
                if out.is_some() {
                    println!("{summary}");
                } else {
                    eprintln!("{summary}");
                }
                (value, 0)
            }
            Err(e) => {
                // No instance file is written on failure.
                let (rep, code) = Report::new("gen", &cfg).fail_with(&e);
                let _ = emit(&to_value(&rep), None);
                return ExitCode::from(code);
            }
        },
        Command::DilatePair { input, kmax } => {
            let (rep, code) = cmd_dilate_pair(input, *kmax, &cfg);
            (to_value(&rep), code)
        }
        Command::DilateTuple { input, mode, deg } => {
            let (rep, code) = cmd_dilate_tuple(input, *mode, *deg, &cfg);
            (to_value(&rep), code)
        }
        Command::Verify { input, deg } => {
            let (rep, code) = cmd_verify(input, *deg, &cfg);
            (to_value(&rep), code)
        }
    };
    if let Err(e) = emit(&value, out) {
        eprintln!("cannot write output: {e}");
        return ExitCode::from(EXIT_INPUT);
    }
    ExitCode::from(code)
}
