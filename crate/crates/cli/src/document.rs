//! On-disk documents.
//!
//! Every file is one JSON object
//!
//! ```text
//! { "format_version": 1, "kind": "...", "meta": {...}, "payload": {...} }
//! ```
//!
//! Complex entries are `[re, im]` pairs listed row-major. Emitting a parsed
//! document reproduces canonical input byte for byte: fields come out in a
//! fixed order, floats in shortest round-trip form, and the `hermitian` flag
//! of a matrix is recomputed rather than trusted.

use std::path::Path;

use conecalc::cones::GenCone;
use conecalc::opsys::SystemTag;
use conecalc::{CMat, KrausPair, LinMap, Tolerances, C64};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

pub const FORMAT_VERSION: u32 = 1;

const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Matrix,
    Map,
    Gencone,
    Osystem,
    Report,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
}

/// How a map is written down.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Rep {
    Choi,
    Kraus,
}

#[derive(Clone, Debug)]
pub enum OsPayload {
    Canonical { n: usize, tag: SystemTag },
    Generated { n: usize, cone: GenCone },
}

#[derive(Clone, Debug)]
pub enum Payload {
    Matrix(CMat),
    Map { map: LinMap, rep: Rep },
    GenCone(GenCone),
    OSystem(OsPayload),
    Report(Value),
}

impl Payload {
    pub fn kind(&self) -> Kind {
        match self {
            Payload::Matrix(_) => Kind::Matrix,
            Payload::Map { .. } => Kind::Map,
            Payload::GenCone(_) => Kind::Gencone,
            Payload::OSystem(_) => Kind::Osystem,
            Payload::Report(_) => Kind::Report,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Document {
    pub meta: Meta,
    pub payload: Payload,
}

// wire shapes. Top-level fields keep this order; payload keys come out sorted.

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    format_version: u32,
    kind: Kind,
    #[serde(default)]
    meta: Meta,
    payload: Value,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    #[serde(default)]
    hermitian: bool,
    entries: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPair {
    left: RawMatrix,
    right: RawMatrix,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMap {
    n: usize,
    rep: Rep,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    choi: Option<RawMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kraus: Option<Vec<RawPair>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenCone {
    dim: usize,
    generators: Vec<RawMatrix>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tag: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generators: Option<Vec<RawMatrix>>,
}

fn raw_matrix(x: &CMat) -> RawMatrix {
    RawMatrix {
        rows: x.rows(),
        cols: x.cols(),
        hermitian: x.rows() == x.cols() && x.hermitian_deviation() <= HERMITIAN_TOL * x.max_abs().max(1.0),
        entries: x.data().iter().map(|z| [z.re, z.im]).collect(),
    }
}

fn matrix_from_raw(raw: RawMatrix, field: &str) -> Result<CMat> {
    let want = raw.rows * raw.cols;
    if raw.entries.len() != want {
        return Err(CliError::dim(
            format!("{field}.entries"),
            format!("expected {want} entries for {}x{}, found {}", raw.rows, raw.cols, raw.entries.len()),
        ));
    }
    if let Some(i) = raw.entries.iter().position(|e| !e[0].is_finite() || !e[1].is_finite()) {
        return Err(CliError::schema(format!("{field}.entries[{i}]"), "entries must be finite"));
    }
    let data = raw.entries.into_iter().map(|[re, im]| C64::new(re, im)).collect();
    Ok(CMat::from_vec(raw.rows, raw.cols, data)?)
}

fn typed<T: serde::de::DeserializeOwned>(v: Value, field: &str) -> Result<T> {
    serde_json::from_value(v).map_err(|e| CliError::schema(field, e.to_string()))
}

fn square(x: &CMat, field: &str, want: usize) -> Result<()> {
    if x.shape() != (want, want) {
        return Err(CliError::dim(field, format!("expected {want}x{want}, found {}x{}", x.rows(), x.cols())));
    }
    Ok(())
}

impl Document {
    pub fn new(payload: Payload) -> Self {
        Document { meta: Meta::default(), payload }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawDocument = serde_json::from_str(text).map_err(|e| CliError::Parse {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })?;
        if raw.format_version != FORMAT_VERSION {
            return Err(CliError::schema(
                "format_version",
                format!("unsupported version {} (this build reads {FORMAT_VERSION})", raw.format_version),
            ));
        }
        let payload = match raw.kind {
            Kind::Matrix => Payload::Matrix(matrix_from_raw(typed(raw.payload, "payload")?, "payload")?),
            Kind::Map => parse_map(typed(raw.payload, "payload")?)?,
            Kind::Gencone => {
                let g: RawGenCone = typed(raw.payload, "payload")?;
                let mut gens = Vec::with_capacity(g.generators.len());
                for (i, m) in g.generators.into_iter().enumerate() {
                    let field = format!("payload.generators[{i}]");
                    let x = matrix_from_raw(m, &field)?;
                    square(&x, &field, g.dim)?;
                    gens.push(x);
                }
                Payload::GenCone(GenCone::new(g.dim, gens)?)
            }
            Kind::Osystem => Payload::OSystem(parse_system(typed(raw.payload, "payload")?)?),
            Kind::Report => Payload::Report(raw.payload),
        };
        Ok(Document { meta: raw.meta, payload })
    }

    pub fn emit(&self) -> String {
        let payload = match &self.payload {
            Payload::Matrix(x) => to_value(&raw_matrix(x)),
            Payload::Map { map, rep } => to_value(&raw_map(map, *rep)),
            Payload::GenCone(c) => to_value(&RawGenCone {
                dim: c.dim(),
                generators: c.gens().iter().map(raw_matrix).collect(),
            }),
            Payload::OSystem(OsPayload::Canonical { n, tag }) => to_value(&RawSystem {
                n: *n,
                tag: Some(tag.to_string()),
                generators: None,
            }),
            Payload::OSystem(OsPayload::Generated { n, cone }) => to_value(&RawSystem {
                n: *n,
                tag: None,
                generators: Some(cone.gens().iter().map(raw_matrix).collect()),
            }),
            Payload::Report(v) => v.clone(),
        };
        let raw = RawDocument {
            format_version: FORMAT_VERSION,
            kind: self.payload.kind(),
            meta: self.meta.clone(),
            payload,
        };
        let mut s = serde_json::to_string_pretty(&raw).expect("documents serialize");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        Document::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.emit()).map_err(|source| CliError::Io { path: path.into(), source })
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("payload serializes")
}

fn raw_map(map: &LinMap, rep: Rep) -> RawMap {
    match rep {
        Rep::Choi => RawMap { n: map.n(), rep, choi: Some(raw_matrix(map.choi())), kraus: None },
        Rep::Kraus => RawMap {
            n: map.n(),
            rep,
            choi: None,
            kraus: Some(
                kraus_pairs(map)
                    .iter()
                    .map(|p| RawPair { left: raw_matrix(&p.left), right: raw_matrix(&p.right) })
                    .collect(),
            ),
        },
    }
}

/// Pairs as loaded if the map came from a Kraus form, else freshly computed.
pub fn kraus_pairs(map: &LinMap) -> Vec<KrausPair> {
    match map.cached_kraus() {
        Some(p) => p.to_vec(),
        None => map.kraus_from_choi(),
    }
}

fn parse_map(raw: RawMap) -> Result<Payload> {
    let n = raw.n;
    if n == 0 {
        return Err(CliError::dim("payload.n", "n must be positive"));
    }
    let map = match raw.rep {
        Rep::Choi => {
            let m = raw.choi.ok_or_else(|| CliError::schema("payload.choi", "missing for rep \"choi\""))?;
            let x = matrix_from_raw(m, "payload.choi")?;
            square(&x, "payload.choi", n * n)?;
            LinMap::from_choi(n, x)?
        }
        Rep::Kraus => {
            let pairs = raw.kraus.ok_or_else(|| CliError::schema("payload.kraus", "missing for rep \"kraus\""))?;
            if pairs.is_empty() {
                return Err(CliError::schema("payload.kraus", "needs at least one pair"));
            }
            let mut out = Vec::with_capacity(pairs.len());
            for (i, p) in pairs.into_iter().enumerate() {
                let left = matrix_from_raw(p.left, &format!("payload.kraus[{i}].left"))?;
                let right = matrix_from_raw(p.right, &format!("payload.kraus[{i}].right"))?;
                square(&left, &format!("payload.kraus[{i}].left"), n)?;
                square(&right, &format!("payload.kraus[{i}].right"), n)?;
                out.push(KrausPair { left, right });
            }
            LinMap::from_kraus(out)?
        }
    };
    Ok(Payload::Map { map, rep: raw.rep })
}

fn parse_system(raw: RawSystem) -> Result<OsPayload> {
    let n = raw.n;
    if n == 0 {
        return Err(CliError::dim("payload.n", "n must be positive"));
    }
    match (raw.tag, raw.generators) {
        (Some(t), None) => {
            let tag: SystemTag = t.parse().map_err(|e: conecalc::Error| CliError::schema("payload.tag", e.to_string()))?;
            Ok(OsPayload::Canonical { n, tag })
        }
        (None, Some(gens)) => {
            let mut out = Vec::with_capacity(gens.len());
            for (i, m) in gens.into_iter().enumerate() {
                let field = format!("payload.generators[{i}]");
                let x = matrix_from_raw(m, &field)?;
                square(&x, &field, n * n)?;
                out.push(x);
            }
            Ok(OsPayload::Generated { n, cone: GenCone::new(n * n, out)? })
        }
        _ => Err(CliError::schema("payload", "give exactly one of `tag` and `generators`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use conecalc::matrix::max_entangled;

    #[test]
    fn matrix_round_trip() {
        let mut x = max_entangled(2);
        x[(0, 1)] = C64::new(0.1, -1e-300);
        let doc = Document::new(Payload::Matrix(x.clone()));
        let text = doc.emit();
        let back = Document::parse(&text).unwrap();
        assert_eq!(back.emit(), text);
        let Payload::Matrix(y) = back.payload else { panic!("kind") };
        assert_eq!(y, x);
    }

    #[test]
    fn hermitian_flag_is_recomputed() {
        let text = r#"{"format_version":1,"kind":"matrix","payload":{"rows":1,"cols":1,"hermitian":false,"entries":[[2.0,0.0]]}}"#;
        let doc = Document::parse(text).unwrap();
        assert!(doc.emit().contains("\"hermitian\": true"));
    }

    #[test]
    fn choi_map_loads() {
        let doc = Document::new(Payload::Map { map: LinMap::identity(2), rep: Rep::Choi });
        let back = Document::parse(&doc.emit()).unwrap();
        let Payload::Map { map, rep } = back.payload else { panic!("kind") };
        assert_eq!(rep, Rep::Choi);
        assert_eq!(map.n(), 2);
    }

    #[test]
    fn entry_count_mismatch_names_the_field() {
        let text = r#"{"format_version":1,"kind":"matrix","payload":{"rows":2,"cols":2,"entries":[[1,0],[0,0],[0,0]]}}"#;
        match Document::parse(text) {
            Err(CliError::Dim { field, .. }) => assert_eq!(field, "payload.entries"),
            other => panic!("{other:?}"),
        }
        let text = r#"{"format_version":1,"kind":"map","payload":{"n":2,"rep":"choi","choi":{"rows":3,"cols":3,"entries":[[1,0],[0,0],[0,0],[0,0],[1,0],[0,0],[0,0],[0,0],[1,0]]}}}"#;
        match Document::parse(text) {
            Err(CliError::Dim { field, .. }) => assert_eq!(field, "payload.choi"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        match Document::parse("{\n  \"format_version\": 1,\n  oops\n}") {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn kraus_form_of_a_conjugation_map() {
        let a = CMat::from_vec(2, 2, vec![C64::new(0.3, 1.1), C64::new(-0.7, 0.2), C64::new(1.9, -0.4), C64::new(0.05, 0.6)]).unwrap();
        let map = LinMap::ad(&a).unwrap();
        let pairs = kraus_pairs(&map);
        assert!(map.kraus_residual(&pairs) <= 1e-10);
        let doc = Document::new(Payload::Map { map, rep: Rep::Kraus });
        let text = doc.emit();
        assert_eq!(Document::parse(&text).unwrap().emit(), text);
    }

    #[test]
    fn systems_round_trip() {
        let doc = Document::new(Payload::OSystem(OsPayload::Canonical { n: 3, tag: SystemTag::OminK(2) }));
        let text = doc.emit();
        assert_eq!(Document::parse(&text).unwrap().emit(), text);
    }
}
