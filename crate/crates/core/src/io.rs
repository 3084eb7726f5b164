//! Instance file formats and run reports.
//!
//! Two input formats are read: a whitespace-separated edge list of QMC
//! edges, and a JSON document carrying one local term per edge. Reports are
//! written as JSON with every float rounded to 12 significant digits.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{
    AnalysisCurve, Fact2Audit, GridSearchResult, HermiteBracket, StarAudit, TriangleAudit,
};
use crate::analysis::special::{GammaCheck, HelperAudit};
use crate::analysis::triangle::{DualCertificateReport, Fact2Chain};
use crate::instance::{Instance, InstanceError, InstanceKind, LocalTerm, WeightedGraph};
use crate::lasserre::MomentSolution;
use crate::rounding::RoundingReport;

/// Significant digits kept in serialized reports.
pub const REPORT_DIGITS: usize = 12;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write report: {0}")]
    Write(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("invalid instance json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("instance has no edges")]
    Empty,
}

/// Input file format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceFormat {
    EdgeList,
    InstanceJson,
}

impl InstanceFormat {
    /// `.json` files are instance documents, everything else an edge list.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => InstanceFormat::InstanceJson,
            _ => InstanceFormat::EdgeList,
        }
    }
}

/// One edge of an instance document; `c` is the cost matrix row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub i: usize,
    pub j: usize,
    pub w: f64,
    pub c_id: f64,
    pub c: [f64; 9],
}

/// Serialized form of an [`Instance`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub kind: InstanceKind,
    pub edges: Vec<EdgeRecord>,
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance) -> Self {
        let edges = inst
            .edge_terms()
            .map(|(e, t)| EdgeRecord {
                i: e.i,
                j: e.j,
                w: e.w,
                c_id: t.c_id,
                c: std::array::from_fn(|k| t.c[k / 3][k % 3]),
            })
            .collect();
        Self {
            n: inst.n(),
            kind: inst.kind(),
            edges,
        }
    }

    pub fn to_instance(&self) -> Result<Instance, IoError> {
        if self.edges.is_empty() {
            return Err(IoError::Empty);
        }
        let edges = self.edges.iter().map(|r| {
            let c = Matrix3::from_row_slice(&r.c);
            (r.i, r.j, r.w, LocalTerm::new(r.c_id, c))
        });
        Ok(Instance::from_edges(self.n, edges, self.kind)?)
    }
}

/// Parses `u v w` lines as QMC edges. Blank lines and `#` comments are
/// skipped; the vertex count is one more than the largest index.
pub fn parse_edge_list(text: &str) -> Result<Instance, IoError> {
    let mut edges = Vec::new();
    let mut seen = BTreeSet::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| IoError::Line { line, message };
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(format!("expected `u v w`, found {} fields", fields.len())));
        }
        let u: usize = fields[0].parse().map_err(|_| err(format!("bad vertex `{}`", fields[0])))?;
        let v: usize = fields[1].parse().map_err(|_| err(format!("bad vertex `{}`", fields[1])))?;
        let w: f64 = fields[2].parse().map_err(|_| err(format!("bad weight `{}`", fields[2])))?;
        if u == v {
            return Err(err(format!("self-loop on vertex {u}")));
        }
        if !(w > 0.0 && w.is_finite()) {
            return Err(err(format!("weight {w} is not positive")));
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(err(format!("duplicate edge ({u}, {v})")));
        }
        edges.push((u, v, w));
    }
    let n = edges.iter().map(|&(u, v, _)| u.max(v) + 1).max().ok_or(IoError::Empty)?;
    Ok(Instance::qmc(WeightedGraph::new(n, edges)?))
}

pub fn parse_instance_json(text: &str) -> Result<Instance, IoError> {
    serde_json::from_str::<InstanceFile>(text)?.to_instance()
}

pub fn load_instance(path: &Path, format: InstanceFormat) -> Result<Instance, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    match format {
        InstanceFormat::EdgeList => parse_edge_list(&text),
        InstanceFormat::InstanceJson => parse_instance_json(&text),
    }
}

/// SHA-256 of the instance document, hex encoded.
pub fn instance_digest(inst: &Instance) -> String {
    let doc = serde_json::to_string(&InstanceFile::from_instance(inst)).expect("instance documents serialize");
    hex::encode(Sha256::digest(doc.as_bytes()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub digest: String,
    pub n: usize,
    pub edges: usize,
    pub kind: InstanceKind,
}

impl InstanceSummary {
    pub fn of(inst: &Instance) -> Self {
        Self {
            digest: instance_digest(inst),
            n: inst.n(),
            edges: inst.graph().edges().len(),
            kind: inst.kind(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeSummary {
    pub i: usize,
    pub j: usize,
    pub w: f64,
    pub mu: f64,
    pub v: f64,
    pub s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxationSummary {
    pub level: usize,
    pub objective: f64,
    pub residual: f64,
    pub status: String,
    pub edges: Vec<EdgeSummary>,
}

impl RelaxationSummary {
    pub fn of(sol: &MomentSolution) -> Self {
        Self {
            level: sol.level(),
            objective: sol.objective,
            residual: sol.residual,
            status: format!("{:?}", sol.status).to_lowercase(),
            edges: sol
                .edges
                .iter()
                .map(|e| EdgeSummary {
                    i: e.i,
                    j: e.j,
                    w: e.w,
                    mu: e.mu,
                    v: e.v,
                    s: e.s,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ascent_energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ascent_restart: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triangle: Option<TriangleAudit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub star: Option<Vec<StarAudit>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fact2: Option<Fact2Audit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fact2_chain: Option<Fact2Chain>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual: Option<DualCertificateReport>,
    pub passed: bool,
}

impl AuditSummary {
    /// Recomputes `passed` from the audits present.
    pub fn finalize(&mut self) {
        self.passed = self.triangle.as_ref().is_none_or(|a| a.passed())
            && self.star.as_ref().is_none_or(|s| s.iter().all(|a| a.passed))
            && self.fact2.as_ref().is_none_or(|a| a.passed())
            && self.fact2_chain.as_ref().is_none_or(|c| c.passed)
            && self.dual.as_ref().is_none_or(|d| d.passed);
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<AnalysisCurve>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_check: Option<GammaCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub helpers: Option<HelperAudit>,
}

/// Truncated expectation at `a = b = c` next to the exact value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketRow {
    pub a: f64,
    pub bracket: HermiteBracket,
    pub exact: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NumericsSummary {
    pub brackets: Vec<BracketRow>,
    pub grid: Vec<GridSearchResult>,
}

/// Everything one command produced. Sections not touched by the command are
/// omitted.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<RelaxationSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounding: Option<RoundingReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audits: Option<AuditSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numerics: Option<NumericsSummary>,
    /// Wall-clock seconds per stage.
    #[serde(default)]
    pub timings: BTreeMap<String, f64>,
}

/// Rounds to [`REPORT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", REPORT_DIGITS - 1, x).parse().expect("formatted floats parse")
}

fn round_value(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64().and_then(|x| serde_json::Number::from_f64(round_sig(x))) {
                *n = x;
            }
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(round_value),
        serde_json::Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with floats rounded to 12 significant digits.
pub fn to_report_json<T: Serialize>(value: &T) -> Result<String, IoError> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    Ok(serde_json::to_string_pretty(&v)?)
}

/// `label,x,value` rows of a curve.
pub fn write_curve_csv<W: Write>(curve: &AnalysisCurve, out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "x", "value"])?;
    for &(x, y) in &curve.points {
        w.write_record([curve.label.clone(), round_sig(x).to_string(), round_sig(y).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-edge rows of a relaxation.
pub fn write_edges_csv<W: Write>(edges: &[EdgeSummary], out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "j", "w", "mu", "v", "s"])?;
    for e in edges {
        w.write_record([
            e.i.to_string(),
            e.j.to_string(),
            round_sig(e.w).to_string(),
            round_sig(e.mu).to_string(),
            round_sig(e.v).to_string(),
            round_sig(e.s).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::special::{alpha_curve, check_gamma};
    use crate::instance::qmc_instance;
    use crate::lasserre::solve_level;
    use crate::rounding::{threshold_round, RoundOptions};
    use crate::sdp::SolverConfig;
    use proptest::prelude::*;

    #[test]
    fn edge_list_examples() {
        let one = parse_edge_list("0 1 1.0\n").unwrap();
        assert_eq!(one.n(), 2);
        assert!(one.terms()[0].is_qmc());
        let tri = parse_edge_list("# triangle\n0 1 1\n1 2 1 # second\n\n0 2 1\n").unwrap();
        assert_eq!(tri.n(), 3);
        assert_eq!(tri.graph().edges().len(), 3);
    }

    #[test]
    fn edge_list_errors_carry_line_numbers() {
        let cases = [
            ("0 0 1.0", 1, "self-loop"),
            ("0 1 1\n# c\n1 0 2", 3, "duplicate"),
            ("0 1 -1", 1, "not positive"),
            ("0 1 0", 1, "not positive"),
            ("0 1", 1, "fields"),
            ("\n0 x 1", 2, "bad vertex"),
            ("0 1 abc", 1, "bad weight"),
        ];
        for (text, want_line, fragment) in cases {
            match parse_edge_list(text) {
                Err(IoError::Line { line, message }) => {
                    assert_eq!(line, want_line, "{text}");
                    assert!(message.contains(fragment), "{message}");
                }
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(matches!(parse_edge_list("# nothing\n"), Err(IoError::Empty)));
    }

    #[test]
    fn instance_json_enforces_the_declared_kind() {
        let doc = r#"{"n": 2, "kind": "rank1", "edges": [
            {"i": 0, "j": 1, "w": 1.0, "c_id": 0.25, "c": [-0.25, 0, 0, 0, -0.25, 0, 0, 0, -0.25]}]}"#;
        assert!(parse_instance_json(doc).is_ok());
        let bad = doc.replace("-0.25, 0, 0, 0, -0.25", "0.5, 0, 0, 0, 0.5");
        assert!(matches!(parse_instance_json(&bad), Err(IoError::Instance(InstanceError::KindMismatch { .. }))));
        assert!(matches!(parse_instance_json("{"), Err(IoError::Json(_))));
    }

    #[test]
    fn files_load_by_format() {
        let dir = tempfile::tempdir().unwrap();
        let list = dir.path().join("tri.txt");
        std::fs::write(&list, "0 1 1\n1 2 1\n0 2 1\n").unwrap();
        let tri = load_instance(&list, InstanceFormat::from_path(&list)).unwrap();
        let json = dir.path().join("tri.json");
        std::fs::write(&json, serde_json::to_string(&InstanceFile::from_instance(&tri)).unwrap()).unwrap();
        assert_eq!(InstanceFormat::from_path(&json), InstanceFormat::InstanceJson);
        let back = load_instance(&json, InstanceFormat::InstanceJson).unwrap();
        assert_eq!(back, tri);
        assert_eq!(instance_digest(&back), instance_digest(&tri));
        assert!(matches!(
            load_instance(&dir.path().join("missing"), InstanceFormat::EdgeList),
            Err(IoError::Read { .. })
        ));
    }

    #[test]
    fn digest_depends_on_weights() {
        let a = parse_edge_list("0 1 1\n").unwrap();
        let b = parse_edge_list("0 1 0.5\n").unwrap();
        assert_ne!(instance_digest(&a), instance_digest(&b));
        assert_eq!(instance_digest(&a).len(), 64);
    }

    #[test]
    fn report_round_trips() {
        let inst = qmc_instance(WeightedGraph::new(2, [(0, 1, 1.0)]).unwrap());
        let sol = solve_level(&inst, 2, &SolverConfig::default()).unwrap();
        let (_, rounding) = threshold_round(&inst, &sol, &RoundOptions::default()).unwrap();
        let mut audits = AuditSummary {
            dual: Some(crate::analysis::dual_certificate_check()),
            ..Default::default()
        };
        audits.finalize();
        assert!(audits.passed);
        let report = RunReport {
            command: "round".into(),
            instance: Some(InstanceSummary::of(&inst)),
            relaxation: Some(RelaxationSummary::of(&sol)),
            rounding: Some(rounding),
            audits: Some(audits),
            analysis: Some(AnalysisSummary {
                curve: Some(alpha_curve(5)),
                gamma_check: Some(check_gamma(0.911).unwrap()),
                helpers: None,
            }),
            timings: BTreeMap::from([("total".to_string(), 0.25)]),
            ..Default::default()
        };
        let exact = serde_json::to_string(&report).unwrap();
        assert_eq!(serde_json::from_str::<RunReport>(&exact).unwrap(), report);
        let rounded = to_report_json(&report).unwrap();
        let parsed: RunReport = serde_json::from_str(&rounded).unwrap();
        assert_eq!(to_report_json(&parsed).unwrap(), rounded);
    }

    #[test]
    fn csv_tables() {
        let mut buf = Vec::new();
        write_curve_csv(&alpha_curve(3), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("label,x,value\n"));
    }

    proptest! {
        #[test]
        fn rounding_keeps_twelve_digits(x in -1e6f64..1e6) {
            let r = round_sig(x);
            prop_assert!((r - x).abs() <= 1e-11 * x.abs());
            prop_assert_eq!(round_sig(r), r);
        }

        #[test]
        fn instance_documents_round_trip(ws in proptest::collection::vec(0.01f64..1.0, 1..6)) {
            let n = ws.len() + 1;
            let inst = qmc_instance(WeightedGraph::new(n, ws.iter().enumerate().map(|(k, &w)| (k, k + 1, w))).unwrap());
            let doc = serde_json::to_string(&InstanceFile::from_instance(&inst)).unwrap();
            prop_assert_eq!(parse_instance_json(&doc).unwrap(), inst);
        }
    }
}
