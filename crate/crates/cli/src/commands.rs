//! Command implementations.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use parallax::{catalog_keys, lookup, AlgebraElement, ParallelizedManifold, Point, Tolerances};
use serde_json::{json, Map, Value};

use crate::report::{envelope, format_float, number, numbers, to_json_string, CheckRecord};
use crate::suites;
use crate::{
    AssocArgs, Command, Common, FlowArgs, ProductArgs, QuotientArgs, TensorArgs, TolProfile,
    VerifyArgs,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Compute(#[from] parallax::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Returns `Ok(false)` when a verification ran but some check failed.
pub fn dispatch(command: Command) -> CliResult<bool> {
    match command {
        Command::List => {
            print!("{}", list_text());
            Ok(true)
        }
        Command::Verify(args) => verify(args),
        Command::Bracket(args) => bracket(args).map(|_| true),
        Command::Assoc(args) => assoc(args).map(|_| true),
        Command::Flow(args) => flow(args).map(|_| true),
        Command::Product(args) => product(args).map(|_| true),
        Command::Quotient(args) => quotient(args).map(|_| true),
        Command::Factorize(args) => factorize(args).map(|_| true),
    }
}

pub fn list_text() -> String {
    let mut out = String::new();
    for key in catalog_keys() {
        let m = lookup(key).expect("catalog keys resolve");
        out.push_str(&format!(
            "{key} (n={}, ambient={})\n",
            m.dim(),
            m.ambient_dim()
        ));
    }
    out
}

impl Common {
    fn key(&self) -> CliResult<&str> {
        match (&self.manifold_pos, &self.manifold_flag) {
            (Some(a), Some(b)) if a != b => {
                Err(usage(format!("conflicting manifolds {a:?} and {b:?}")))
            }
            (Some(k), _) | (None, Some(k)) => Ok(k),
            (None, None) => Err(usage("no manifold given (positional or --manifold)")),
        }
    }

    fn manifold(&self) -> CliResult<ParallelizedManifold> {
        let tol = match self.tol_profile {
            TolProfile::Default => Tolerances::default(),
            TolProfile::Strict => Tolerances::strict(),
        };
        let m = lookup(self.key()?).map_err(usage)?;
        Ok(ParallelizedManifold::new(m, tol)?)
    }

    fn profile_name(&self) -> &'static str {
        match self.tol_profile {
            TolProfile::Default => "default",
            TolProfile::Strict => "strict",
        }
    }

    /// Writes JSON and CSV where requested; JSON goes to stdout when neither is.
    fn emit(&self, doc: Map<String, Value>, csv: impl FnOnce() -> String) -> CliResult<()> {
        let json_text = to_json_string(&Value::Object(doc));
        if let Some(path) = &self.csv {
            write_out(path, &csv())?;
        }
        match &self.json {
            Some(path) => write_out(path, &json_text),
            None if self.csv.is_none() => write_out(Path::new("-"), &json_text),
            None => Ok(()),
        }
    }
}

fn write_out(path: &Path, text: &str) -> CliResult<()> {
    let io_err = |source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    if path == Path::new("-") {
        io::stdout().write_all(text.as_bytes()).map_err(io_err)
    } else {
        fs::write(path, text).map_err(io_err)
    }
}

fn parse_point(pm: &ParallelizedManifold, coords: &[f64]) -> CliResult<Point> {
    if coords.is_empty() {
        return Err(usage("missing --point"));
    }
    pm.point(coords).map_err(|e| usage(format!("--point: {e}")))
}

fn parse_element(
    pm: &ParallelizedManifold,
    coeffs: &[f64],
    flag: &str,
) -> CliResult<AlgebraElement> {
    if coeffs.is_empty() {
        return Err(usage(format!("missing {flag}")));
    }
    pm.element(coeffs)
        .map_err(|e| usage(format!("{flag}: {e}")))
}

fn csv_float(x: f64) -> String {
    format_float(x)
}

fn vector_csv(header: &str, xs: &[f64]) -> String {
    let mut out = format!("{header}\n");
    for (i, x) in xs.iter().enumerate() {
        out.push_str(&format!("{i},{}\n", csv_float(*x)));
    }
    out
}

fn verify(args: VerifyArgs) -> CliResult<bool> {
    let c = &args.common;
    let pm = c.manifold()?;
    let records = suites::run(&pm, args.suite, args.samples, args.seed);
    for r in &records {
        println!("{}", r.summary_line());
    }
    let passed = records.iter().all(CheckRecord::passed);
    let failed = records.iter().filter(|r| !r.passed()).count();
    println!("{} checks, {} failed", records.len(), failed);
    let mut doc = envelope(
        "verify",
        pm.id(),
        json!({"suite": args.suite.name(), "samples": args.samples, "tol_profile": c.profile_name()}),
    );
    doc.insert("seed".into(), json!(args.seed));
    doc.insert(
        "checks".into(),
        Value::Array(records.iter().map(CheckRecord::to_value).collect()),
    );
    doc.insert("passed".into(), json!(passed));
    if let Some(path) = &c.json {
        write_out(path, &to_json_string(&Value::Object(doc)))?;
    }
    if let Some(path) = &c.csv {
        let mut out = String::from("name,max_residual,tolerance,samples,passed\n");
        for r in &records {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.name,
                csv_float(r.max_residual),
                csv_float(r.tolerance),
                r.samples,
                r.passed()
            ));
        }
        write_out(path, &out)?;
    }
    Ok(passed)
}

fn point_params(c: &Common, coords: &[f64]) -> Map<String, Value> {
    let mut p = Map::new();
    p.insert("point".into(), numbers(coords));
    p.insert("tol_profile".into(), json!(c.profile_name()));
    p
}

fn bracket(args: TensorArgs) -> CliResult<()> {
    let c = &args.common;
    let pm = c.manifold()?;
    let s = parse_point(&pm, &args.point)?;
    let tensor = pm.bracket_tensor(&s)?;
    let mut doc = envelope(
        "bracket",
        pm.id(),
        Value::Object(point_params(c, &args.point)),
    );
    doc.insert("basepoint".into(), numbers(s.as_slice()));
    doc.insert(
        "convention".into(),
        json!("b[i][j][k] is component k of [e_i, e_j] at the basepoint"),
    );
    doc.insert("tensor".into(), json!(nested3(&tensor.to_nested())));
    if let (Some(x), Some(y)) = (&args.xi, &args.eta) {
        let value = pm.bracket(
            &s,
            &parse_element(&pm, x, "--xi")?,
            &parse_element(&pm, y, "--eta")?,
        )?;
        doc.insert("value".into(), numbers(value.as_slice()));
    }
    let n = tensor.dim();
    c.emit(doc, || {
        let mut out = String::from("i,j,k,value\n");
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    out.push_str(&format!("{i},{j},{k},{}\n", csv_float(tensor.get(i, j, k))));
                }
            }
        }
        out
    })
}

fn nested3(t: &[Vec<Vec<f64>>]) -> Value {
    Value::Array(
        t.iter()
            .map(|row| Value::Array(row.iter().map(|v| numbers(v)).collect()))
            .collect(),
    )
}

fn assoc(args: AssocArgs) -> CliResult<()> {
    let t = &args.tensor;
    let c = &t.common;
    let pm = c.manifold()?;
    let s = parse_point(&pm, &t.point)?;
    let tensor = pm.associator_tensor(&s, args.fd)?;
    let source = serde_json::to_value(tensor.source()).expect("enum serializes");
    let mut params = point_params(c, &t.point);
    params.insert("fd".into(), json!(args.fd));
    let mut doc = envelope("assoc", pm.id(), Value::Object(params));
    doc.insert("basepoint".into(), numbers(s.as_slice()));
    doc.insert(
        "convention".into(),
        json!("a[d][i][j][k] is component k of the derivative of [e_i, e_j] along rho(e_d)"),
    );
    doc.insert("source".into(), source);
    doc.insert(
        "tensor".into(),
        Value::Array(tensor.to_nested().iter().map(|b| nested3(b)).collect()),
    );
    if let (Some(x), Some(y), Some(g)) = (&t.xi, &t.eta, &args.gamma) {
        let (x, y, g) = (
            parse_element(&pm, x, "--xi")?,
            parse_element(&pm, y, "--eta")?,
            parse_element(&pm, g, "--gamma")?,
        );
        let value = tensor.apply(g.coeffs(), x.coeffs(), y.coeffs());
        doc.insert("value".into(), numbers(value.as_slice()));
    }
    let n = tensor.dim();
    c.emit(doc, || {
        let mut out = String::from("direction,arg1,arg2,component,value\n");
        for d in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        out.push_str(&format!(
                            "{d},{i},{j},{k},{}\n",
                            csv_float(tensor.get(d, i, j, k))
                        ));
                    }
                }
            }
        }
        out
    })
}

fn flow(args: FlowArgs) -> CliResult<()> {
    let c = &args.common;
    let pm = c.manifold()?;
    let s = parse_point(&pm, &args.point)?;
    let xi = parse_element(&pm, &args.xi, "--xi")?;
    if !args.t.is_finite() {
        return Err(usage("--t must be finite"));
    }
    let closed = !args.numeric && pm.closed_form_flow(&xi, &s, args.t)?.is_some();
    let result = if args.numeric {
        pm.flow_numeric(&xi, &s, args.t)?
    } else {
        pm.flow(&xi, &s, args.t)?
    };
    let mut params = point_params(c, &args.point);
    params.insert("xi".into(), numbers(&args.xi));
    params.insert("t".into(), number(args.t));
    let mut doc = envelope("flow", pm.id(), Value::Object(params));
    doc.insert(
        "method".into(),
        json!(if closed { "closed_form" } else { "numeric" }),
    );
    doc.insert("endpoint".into(), numbers(result.endpoint.as_slice()));
    doc.insert("steps_taken".into(), json!(result.steps_taken));
    doc.insert(
        "max_constraint_drift".into(),
        number(result.max_constraint_drift),
    );
    c.emit(doc, || {
        vector_csv("index,value", result.endpoint.as_slice())
    })
}

fn product(args: ProductArgs) -> CliResult<()> {
    let c = &args.common;
    let pm = c.manifold()?;
    let s = parse_point(&pm, &args.point)?;
    let xi = parse_element(&pm, &args.xi, "--xi")?;
    let p = pm.product(&xi, &s)?;
    let mut params = point_params(c, &args.point);
    params.insert("xi".into(), numbers(&args.xi));
    let mut doc = envelope("product", pm.id(), Value::Object(params));
    doc.insert("endpoint".into(), numbers(p.as_slice()));
    c.emit(doc, || vector_csv("index,value", p.as_slice()))
}

fn quotient_setup(
    args: &QuotientArgs,
    command: &str,
) -> CliResult<(ParallelizedManifold, Point, Point, Map<String, Value>)> {
    let c = &args.common;
    if !(args.trust_radius.is_finite() && args.trust_radius > 0.0) {
        return Err(usage("--trust-radius must be positive"));
    }
    let pm = c.manifold()?.with_trust_radius(args.trust_radius);
    let s = parse_point(&pm, &args.point)?;
    if args.target.is_empty() {
        return Err(usage("missing --target"));
    }
    let p = pm
        .point(&args.target)
        .map_err(|e| usage(format!("--target: {e}")))?;
    let mut params = point_params(c, &args.point);
    params.insert("target".into(), numbers(&args.target));
    params.insert("trust_radius".into(), number(args.trust_radius));
    let doc = envelope(command, pm.id(), Value::Object(params));
    Ok((pm, s, p, doc))
}

fn quotient(args: QuotientArgs) -> CliResult<()> {
    let (pm, s, p, mut doc) = quotient_setup(&args, "quotient")?;
    let q = pm.right_quotient(&p, &s)?;
    doc.insert("xi".into(), numbers(q.xi.as_slice()));
    doc.insert("iterations".into(), json!(q.iterations));
    doc.insert("residual".into(), number(q.residual));
    args.common
        .emit(doc, || vector_csv("index,value", q.xi.as_slice()))
}

fn factorize(args: QuotientArgs) -> CliResult<()> {
    let (pm, s, p, mut doc) = quotient_setup(&args, "factorize")?;
    let steps = pm.factorize(&p, &s, args.trust_radius)?;
    let back = pm.reassemble(&steps, &s)?;
    doc.insert(
        "convention".into(),
        json!("target = steps[0]·(steps[1]·(…·(steps[k-1]·point)))"),
    );
    doc.insert("step_count".into(), json!(steps.len()));
    doc.insert(
        "steps".into(),
        Value::Array(steps.iter().map(|x| numbers(x.as_slice())).collect()),
    );
    doc.insert("reassembly_distance".into(), number(pm.distance(&back, &p)));
    args.common.emit(doc, || {
        let mut out = String::from("step,index,value\n");
        for (k, x) in steps.iter().enumerate() {
            for (i, v) in x.as_slice().iter().enumerate() {
                out.push_str(&format!("{k},{i},{}\n", csv_float(*v)));
            }
        }
        out
    })
}
