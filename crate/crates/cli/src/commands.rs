//! Subcommand bodies. Each returns the exit code and the text meant for
//! stdout so the binary stays a thin shell around them.

use std::path::{Path, PathBuf};
use std::time::Instant;

use conecalc::cones::{matrix_membership, square_dims, Certificate, ConeId, Status, Verdict, Witness};
use conecalc::suites::{run_suite, SuiteReport, SuiteStatus, SUITES};
use conecalc::{LinMap, SearchOpts};
use serde::Serialize;
use serde_json::{json, Value};

use crate::document::{kraus_pairs, Document, Meta, Payload, Rep};
use crate::error::{CliError, Result};

/// Flags shared by every subcommand.
#[derive(Clone, Copy, Debug)]
pub struct Global {
    pub tol: f64,
    pub seed: u64,
    pub restarts: usize,
    pub json: bool,
    pub timings: bool,
}

impl Default for Global {
    fn default() -> Self {
        Global { tol: 1e-9, seed: 0, restarts: 16, json: false, timings: false }
    }
}

impl Global {
    pub fn opts(&self) -> SearchOpts {
        let mut o = SearchOpts::default().with_seed(self.seed).with_margin(self.tol);
        o.restarts = self.restarts;
        o
    }

    fn meta(&self) -> Meta {
        Meta { seed: Some(self.seed), tolerances: Some(self.opts().tol) }
    }
}

pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    /// Extra lines for stderr.
    pub stderr: String,
}

impl Outcome {
    fn out(code: i32, stdout: String) -> Self {
        Outcome { code, stdout, stderr: String::new() }
    }
}

pub fn parse_cone(s: &str) -> Result<ConeId> {
    s.parse().map_err(|e: conecalc::Error| match e {
        conecalc::Error::Unsupported(msg) if msg.starts_with("unknown cone") => CliError::UnknownCone(s.to_string()),
        other => CliError::Usage(other.to_string()),
    })
}

pub fn parse_dims(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `m,n`, got `{s}`"))?;
    let m: usize = a.trim().parse().map_err(|_| format!("bad dimension `{a}`"))?;
    let n: usize = b.trim().parse().map_err(|_| format!("bad dimension `{b}`"))?;
    if m == 0 || n == 0 {
        return Err("dimensions must be positive".into());
    }
    Ok((m, n))
}

fn status_code(s: Status) -> i32 {
    match s {
        Status::Member => 0,
        Status::NotMember => 1,
        Status::Inconclusive => 2,
    }
}

pub fn check(cone: &str, input: &Path, dims: Option<(usize, usize)>, g: &Global) -> Result<Outcome> {
    let cone = parse_cone(cone)?;
    let doc = Document::read(input)?;
    let (x, dims) = match doc.payload {
        Payload::Map { map, .. } => {
            let n = map.n();
            if let Some(d) = dims {
                if d != (n, n) {
                    return Err(CliError::dim("--dims", format!("a map on M_{n} has Choi dims {n},{n}")));
                }
            }
            (map.into_choi(), (n, n))
        }
        Payload::Matrix(x) => {
            let d = match dims {
                Some(d) => d,
                None => square_dims(&x).map_err(|_| {
                    CliError::dim("payload", format!("{}x{} is not n²xn²; pass --dims m,n", x.rows(), x.cols()))
                })?,
            };
            if x.shape() != (d.0 * d.1, d.0 * d.1) {
                return Err(CliError::dim("payload", format!("{}x{} does not fit dims {},{}", x.rows(), x.cols(), d.0, d.1)));
            }
            (x, d)
        }
        other => {
            return Err(CliError::schema("kind", format!("check needs a matrix or map, got {:?}", other.kind())));
        }
    };
    if !x.is_hermitian(g.opts().tol.hermitian) {
        return Err(CliError::schema("payload", "check needs a Hermitian operator"));
    }
    let t = Instant::now();
    let v = matrix_membership(cone, &x, dims, &g.opts())?;
    let elapsed = t.elapsed().as_secs_f64();
    let code = status_code(v.status);
    log::info!("check {cone} on {}x{} took {elapsed:.3}s", dims.0, dims.1);

    if g.json {
        let mut payload = json!({
            "command": "check",
            "cone": cone.to_string(),
            "dims": [dims.0, dims.1],
            "status": v.status.to_string(),
            "verdict": v,
        });
        if g.timings {
            payload["timings"] = json!({ "total_s": elapsed });
        }
        return Ok(Outcome::out(code, report(g, payload)));
    }
    Ok(Outcome::out(code, verdict_text(cone, dims, &v)))
}

fn report(g: &Global, payload: Value) -> String {
    let mut doc = Document::new(Payload::Report(payload));
    doc.meta = g.meta();
    doc.emit()
}

fn verdict_text(cone: ConeId, dims: (usize, usize), v: &Verdict) -> String {
    let mut s = format!("cone {cone} on {}x{}: {}\n", dims.0, dims.1, v.status);
    s += &format!("value: {:.6e}\n", v.value);
    if let Some(c) = &v.certificate {
        s += &format!("certificate: {}\n", certificate_text(c));
    }
    if let Some(w) = &v.witness {
        s += &format!("witness: {}\n", witness_text(w));
    }
    if v.evidence.restarts > 0 {
        s += &format!("search: {} restarts, {} iterations\n", v.evidence.restarts, v.evidence.iterations);
    }
    s
}

fn certificate_text(c: &Certificate) -> String {
    match c {
        Certificate::Spectrum { min_eigenvalue } => format!("spectrum, min eigenvalue {min_eigenvalue:.6e}"),
        Certificate::PartialTransposeSpectrum { min_eigenvalue } => {
            format!("partial transpose spectrum, min eigenvalue {min_eigenvalue:.6e}")
        }
        Certificate::PptLowDimension { min_eigenvalue, min_pt_eigenvalue } => format!(
            "PPT in low dimension, min eigenvalues {min_eigenvalue:.6e} / {min_pt_eigenvalue:.6e}"
        ),
        Certificate::Conic { coefficients, residual } => {
            format!("conic combination of {} generators, residual {residual:.3e}", coefficients.len())
        }
        Certificate::Isotropic { identity_weight, entangled_weight, bound } => format!(
            "isotropic a={identity_weight:.6e} c={entangled_weight:.6e} within bound {bound:.6e}"
        ),
        Certificate::SeparableBall { distance, radius } => {
            format!("separable ball, distance {distance:.6e} < radius {radius:.6e}")
        }
        Certificate::Pairings { min_pairing, count } => format!("{count} pairings, min {min_pairing:.6e}"),
        Certificate::SchmidtSpectral { k, residual } => {
            format!("spectral decomposition with Schmidt rank {k} vectors, residual {residual:.3e}")
        }
        Certificate::Sampled { trials, inconclusive } => {
            format!("sampled, {trials} trials without violation ({inconclusive} inconclusive)")
        }
        Certificate::Named(name) => name.clone(),
    }
}

fn vec_text(v: &[conecalc::C64]) -> String {
    let parts: Vec<String> = v.iter().map(|z| format!("{:.4}{:+.4}i", z.re, z.im)).collect();
    format!("[{}]", parts.join(", "))
}

fn witness_text(w: &Witness) -> String {
    match w {
        Witness::Vector(v) => format!("vector {}", vec_text(v)),
        Witness::PartialTransposeVector { vector, first_factor } => format!(
            "vector for the partial transpose on the {} factor {}",
            if *first_factor { "first" } else { "second" },
            vec_text(vector)
        ),
        Witness::Product { v, w } => format!("product vector {} ⊗ {}", vec_text(v), vec_text(w)),
        Witness::Schmidt { z, k } => format!("Schmidt rank {k} vector {}", vec_text(z)),
        Witness::Matrix(m) => format!("{}x{} pairing matrix", m.rows(), m.cols()),
        Witness::Generator { index, pairing } => format!("generator {index}, pairing {pairing:.6e}"),
        Witness::Pushed { inner, .. } => format!("pushed input; {}", witness_text(inner)),
    }
}

pub fn convert(input: &Path, to: Rep, output: Option<&PathBuf>) -> Result<Outcome> {
    let doc = Document::read(input)?;
    let map = match doc.payload {
        Payload::Map { map, .. } => map,
        Payload::Matrix(x) => {
            if !x.is_square() {
                return Err(CliError::dim("payload", format!("a Choi matrix must be square, got {}x{}", x.rows(), x.cols())));
            }
            let (n, _) = square_dims(&x)
                .map_err(|_| CliError::dim("payload", format!("{}x{} is not n²xn²", x.rows(), x.cols())))?;
            LinMap::from_choi(n, x)?
        }
        other => return Err(CliError::schema("kind", format!("convert needs a matrix or map, got {:?}", other.kind()))),
    };
    let residual = map.kraus_residual(&kraus_pairs(&map));
    let mut out = Document::new(Payload::Map { map, rep: to });
    out.meta = doc.meta;
    let line = format!("round-trip residual: {residual:.3e}\n");
    match output {
        Some(p) => {
            out.write(p)?;
            Ok(Outcome::out(0, line))
        }
        None => Ok(Outcome { code: 0, stdout: out.emit(), stderr: line }),
    }
}

/// Wire form of one suite run.
#[derive(Serialize)]
struct SuiteOut<'a> {
    suite: &'a str,
    title: &'a str,
    n: usize,
    seed: u64,
    trials: usize,
    status: SuiteStatus,
    violations: Vec<String>,
    checks: &'a [conecalc::suites::SuiteCheck],
    notes: &'a [String],
    timings: Option<Value>,
}

fn unexpected(r: &SuiteReport) -> Vec<String> {
    let mut out = Vec::new();
    for c in &r.checks {
        if c.report.status != c.expected {
            out.push(format!("{}: {} (expected {})", c.report.property, c.report.status, c.expected));
        }
        for f in &c.failures {
            out.push(format!("{}: {f}", c.report.property));
        }
    }
    out
}

pub fn verify(suite: &str, n: usize, trials: usize, g: &Global) -> Result<Outcome> {
    let names: Vec<&str> = if suite.eq_ignore_ascii_case("all") { SUITES.to_vec() } else { vec![suite] };
    let opts = g.opts();
    let mut runs = Vec::new();
    for name in names {
        let t = Instant::now();
        let reps = run_suite(name, n, trials, &opts)?;
        let secs = t.elapsed().as_secs_f64();
        for r in reps {
            log::info!("suite {} finished in {secs:.2}s: {}", r.suite, r.status);
            runs.push((r, secs));
        }
    }
    let all_pass = runs.iter().all(|(r, _)| r.status == SuiteStatus::Pass);
    let code = if all_pass { 0 } else { 1 };

    if g.json {
        let suites: Vec<SuiteOut> = runs
            .iter()
            .map(|(r, secs)| SuiteOut {
                suite: &r.suite,
                title: &r.title,
                n: r.n,
                seed: r.seed,
                trials: r.trials,
                status: r.status,
                violations: unexpected(r),
                checks: &r.checks,
                notes: &r.notes,
                timings: g.timings.then(|| json!({ "total_s": secs })),
            })
            .collect();
        let payload = json!({
            "command": "verify",
            "status": if all_pass { "pass" } else { "fail" },
            "suites": suites,
        });
        return Ok(Outcome::out(code, report(g, payload)));
    }

    let mut s = String::new();
    for (r, secs) in &runs {
        s += &format!("{} {}  (n={}, seed={}, trials={})\n", r.suite, r.status.to_string().to_uppercase(), r.n, r.seed, r.trials);
        s += &format!("  {}\n", r.title);
        for c in &r.checks {
            let mark = if c.passed() { "ok  " } else { "FAIL" };
            s += &format!(
                "  [{mark}] {}: {} (expected {}), {} trials, {} inconclusive\n",
                c.report.property, c.report.status, c.expected, c.report.trials, c.report.inconclusive
            );
            for (k, v) in &c.report.metrics {
                s += &format!("         {k} = {v:.6e}\n");
            }
            for f in &c.failures {
                s += &format!("         unmet: {f}\n");
            }
        }
        for note in &r.notes {
            s += &format!("  {note}\n");
        }
        if g.timings {
            s += &format!("  time: {secs:.2}s\n");
        }
    }
    let passed = runs.iter().filter(|(r, _)| r.status == SuiteStatus::Pass).count();
    s += &format!("{passed}/{} suites passed\n", runs.len());
    Ok(Outcome::out(code, s))
}
