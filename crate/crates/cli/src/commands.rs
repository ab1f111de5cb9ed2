use std::fs::File;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use blockmt::{
    adaptive_bh, adaptive_bonferroni, bh, bky_adaptive_bh, bonferroni, lambda_threshold,
    two_stage_bh, EstimatorKind, EstimatorSpec, TestOutcome,
};
use serde_json::{json, Number, Value};

use crate::args::{EstimatorArg, Format, GlobalArgs, MethodArg, TestArgs, ThresholdArgs, VerifyArgs};
use crate::checks::{self, CheckResult};
use crate::error::{CliError, CliResult};
use crate::format::{human, machine};
use crate::input::{read_pvalues, PValueFile};

pub fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(File::create(p).map_err(|e| {
            CliError::input(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn check_unit_interval(name: &str, x: f64) -> CliResult<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(CliError::parameter(format!("{name} must lie in (0, 1), got {x}")))
    }
}

fn read_input(path: &Path) -> CliResult<PValueFile> {
    if path.as_os_str() == "-" {
        read_pvalues(io::stdin().lock())
    } else {
        let f = File::open(path)
            .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
        read_pvalues(f)
    }
}

/// Result of `blockmt test` before formatting.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub method: MethodArg,
    pub alpha: f64,
    pub lambda: Option<f64>,
    pub estimator: Option<EstimatorKind>,
    pub lambda_threshold: f64,
    pub outcome: TestOutcome,
}

impl Analysis {
    pub fn n0_hat(&self) -> Option<f64> {
        self.outcome.estimator_value
    }
}

pub fn analyze(
    file: &PValueFile,
    method: MethodArg,
    estimator: EstimatorArg,
    alpha: f64,
    lambda: Option<f64>,
) -> CliResult<Analysis> {
    check_unit_interval("alpha", alpha)?;
    if let Some(l) = lambda {
        check_unit_interval("lambda", l)?;
    }
    let p = &file.matrix;
    let layout = p.layout();
    let kind = match estimator {
        EstimatorArg::Storey => EstimatorKind::Storey,
        EstimatorArg::Block => EstimatorKind::Block,
    };
    let spec = || -> CliResult<EstimatorSpec> {
        let l = lambda.ok_or_else(|| {
            CliError::parameter(format!("--lambda is required for {}", method.name()))
        })?;
        Ok(EstimatorSpec::new(kind, l)?)
    };
    let outcome = match method {
        MethodArg::Bh => TestOutcome::from_flat(layout, &bh(p.values(), alpha)?)?,
        MethodArg::Bonferroni => TestOutcome::from_flat(layout, &bonferroni(p.values(), alpha)?)?,
        MethodArg::Bky => TestOutcome::from_flat(layout, &bky_adaptive_bh(p.values(), alpha)?)?,
        MethodArg::TwoStageBh => two_stage_bh(p, alpha)?,
        MethodArg::AdaptiveBh => adaptive_bh(p, alpha, &spec()?)?,
        MethodArg::AdaptiveBonferroni => adaptive_bonferroni(p, alpha, &spec()?)?,
    };
    Ok(Analysis {
        method,
        alpha,
        lambda,
        estimator: method.is_adaptive().then_some(kind),
        lambda_threshold: lambda_threshold(layout.b())?,
        outcome,
    })
}

/// Rewrites every float in `v` with 17 significant digits.
fn fix_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("float");
            if x.is_finite() {
                *n = Number::from_str(&machine(x)).expect("valid number");
            }
        }
        Value::Array(xs) => xs.iter_mut().for_each(fix_floats),
        Value::Object(m) => m.values_mut().for_each(fix_floats),
        _ => {}
    }
}

pub fn analysis_json(file: &PValueFile, a: &Analysis) -> CliResult<Value> {
    let n = file.matrix.layout().n() as f64;
    let hypotheses: Vec<Value> = file
        .hypotheses
        .iter()
        .zip(file.matrix.layout().cells())
        .map(|(h, (i, j))| {
            json!({
                "block_id": h.block_id,
                "hypothesis_id": h.hypothesis_id,
                "p_value": h.p_value,
                "rejected": a.outcome.is_rejected(i, j),
            })
        })
        .collect();
    let outcome = serde_json::to_value(&a.outcome)
        .map_err(|e| CliError::input(format!("serializing outcome: {e}")))?;
    let mut v = json!({
        "method": a.method.name(),
        "alpha": a.alpha,
        "lambda": a.lambda,
        "estimator": a.estimator.map(EstimatorKind::name),
        "n": file.matrix.layout().n(),
        "b": file.matrix.layout().b(),
        "R": a.outcome.rejections,
        "B": a.outcome.significant_blocks,
        "n0_hat": a.n0_hat(),
        "pi0_hat": a.n0_hat().map(|v| v / n),
        "lambda_threshold": a.lambda_threshold,
        "outcome": outcome,
        "hypotheses": hypotheses,
    });
    fix_floats(&mut v);
    Ok(v)
}

fn write_table(out: &mut dyn Write, file: &PValueFile, a: &Analysis, delim: u8) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new().delimiter(delim).from_writer(out);
    let io_err = |e: csv::Error| CliError::input(format!("writing output: {e}"));
    w.write_record(["block_id", "hypothesis_id", "p_value", "rejected"])
        .map_err(io_err)?;
    for (h, (i, j)) in file.hypotheses.iter().zip(file.matrix.layout().cells()) {
        let rejected = if a.outcome.is_rejected(i, j) { "1" } else { "0" };
        w.write_record([&h.block_id, &h.hypothesis_id, &machine(h.p_value), rejected])
            .map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

fn summary_line(file: &PValueFile, a: &Analysis) -> String {
    let n = file.matrix.layout().n() as f64;
    let mut s = format!(
        "{}: R = {}, B = {}",
        a.method.name(),
        a.outcome.rejections,
        a.outcome.significant_blocks
    );
    if let Some(n0) = a.n0_hat() {
        s.push_str(&format!(", n0_hat = {}, pi0_hat = {}", human(n0), human(n0 / n)));
    }
    s
}

pub fn cmd_test(global: &GlobalArgs, args: &TestArgs) -> CliResult<()> {
    let alpha = global.alpha();
    check_unit_interval("alpha", alpha)?;
    if let Some(l) = global.lambda {
        check_unit_interval("lambda", l)?;
    }
    if args.method.is_adaptive() && global.lambda.is_none() {
        return Err(CliError::parameter(format!(
            "--lambda is required for {}",
            args.method.name()
        )));
    }
    let file = read_input(&args.input)?;
    let a = analyze(&file, args.method, args.estimator, alpha, global.lambda)?;
    if let Some(l) = a.lambda.filter(|_| args.method.is_adaptive()) {
        if l < a.lambda_threshold {
            eprintln!(
                "warning: lambda = {} is below the threshold {} for b = {} blocks",
                human(l),
                human(a.lambda_threshold),
                file.matrix.layout().b()
            );
        }
    }
    let mut out = open_output(global.output.as_deref())?;
    match args.format {
        Format::Json => {
            let v = analysis_json(&file, &a)?;
            serde_json::to_writer_pretty(&mut out, &v)
                .map_err(|e| CliError::input(format!("writing output: {e}")))?;
            writeln!(out)?;
        }
        Format::Csv | Format::Tsv => {
            let delim = if args.format == Format::Csv { b',' } else { b'\t' };
            write_table(&mut out, &file, &a, delim)?;
            eprintln!("{}", summary_line(&file, &a));
        }
    }
    out.flush()?;
    Ok(())
}

pub fn cmd_threshold(global: &GlobalArgs, args: &ThresholdArgs) -> CliResult<()> {
    if args.b == 0 {
        return Err(CliError::parameter("b must be at least 1"));
    }
    let b = usize::try_from(args.b).map_err(|_| CliError::parameter("b is too large"))?;
    let t = lambda_threshold(b)?;
    let mut out = open_output(global.output.as_deref())?;
    writeln!(out, "{}", machine(t))?;
    out.flush()?;
    Ok(())
}

/// Checks selected by `args`, in a fixed order.
pub fn verification_checks(global: &GlobalArgs, args: &VerifyArgs) -> CliResult<Vec<CheckResult>> {
    let all = args.run_all();
    let seed = global.seed();
    let mut results = Vec::new();
    if all || args.oracle {
        results.extend(checks::oracle_checks(args.instances, seed)?);
        results.extend(checks::reduction_checks(args.instances, seed.wrapping_add(1))?);
    }
    if all || args.property1 {
        results.push(checks::property1_check(args.max_b, args.max_s)?);
    }
    if all || args.identity {
        results.push(checks::identity_check()?);
    }
    if all || args.lemma1 {
        results.push(checks::lemma1_check(args.instances, seed.wrapping_add(2))?);
    }
    if all || args.lemma2 {
        results.push(checks::lemma2_check()?);
    }
    Ok(results)
}

pub fn cmd_verify(global: &GlobalArgs, args: &VerifyArgs) -> CliResult<()> {
    let results = verification_checks(global, args)?;
    let mut out = open_output(global.output.as_deref())?;
    for r in &results {
        writeln!(out, "{r}")?;
    }
    out.flush()?;
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(CliError::verification(format!("{failed} of {} checks failed", results.len())));
    }
    Ok(())
}
