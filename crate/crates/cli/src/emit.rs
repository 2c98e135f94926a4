use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::Format;

/// A check that failed during a run; printed as JSON on stderr.
#[derive(Clone, Debug, Serialize)]
pub struct Failure {
    pub check: String,
    pub violations: usize,
    pub detail: String,
}

/// Rendered output of one subcommand plus any failed checks.
#[derive(Debug)]
pub struct Output {
    pub body: String,
    pub failures: Vec<Failure>,
}

/// Metadata, free-form notes and rows in the requested format.
///
/// CSV puts metadata and notes in `# ` comment lines before the header; JSON
/// carries the same content under `meta`, `notes` and `rows`.
pub fn render<T: Serialize>(
    format: Format,
    meta: &[(String, String)],
    notes: &[String],
    rows: &[T],
) -> anyhow::Result<String> {
    match format {
        Format::Csv => {
            let mut out = String::new();
            for (k, v) in meta {
                out.push_str(&format!("# {k}: {v}\n"));
            }
            for n in notes {
                out.push_str(&format!("# {n}\n"));
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r)?;
            }
            out.push_str(&String::from_utf8(w.into_inner()?)?);
            Ok(out)
        }
        Format::Json => {
            let meta: Map<String, Value> = meta.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
            let doc = json!({ "meta": meta, "notes": notes, "rows": rows });
            Ok(serde_json::to_string_pretty(&doc)? + "\n")
        }
    }
}
