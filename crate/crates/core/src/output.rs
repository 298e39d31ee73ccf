//! CSV and JSON persistence of study results. Files are written to a temporary
//! sibling and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::harness::{RunRecord, StudyResult};

pub const CSV_HEADER: &[&str] = &[
    "geometry",
    "h",
    "n",
    "t",
    "delta_cut",
    "refinement",
    "variant",
    "tau",
    "beta",
    "c",
    "l2_error",
    "h1_error",
    "energy_error",
    "n_dofs",
    "n_removed",
    "lambda_min",
    "lambda_max",
    "kappa",
    "lambda_min_br",
    "lambda_max_br",
    "kappa_br",
    "failed",
    "message",
    "wall_time_s",
];

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv_row(r: &RunRecord) -> String {
    let fields = [
        r.geometry.clone(),
        fmt_f64(r.h),
        r.n.map(|n| n.to_string()).unwrap_or_default(),
        opt(r.t),
        opt(r.delta_cut),
        r.refinement.map(|n| n.to_string()).unwrap_or_default(),
        r.variant.clone(),
        fmt_f64(r.tau),
        fmt_f64(r.beta),
        opt(r.c),
        opt(r.l2_error),
        opt(r.h1_error),
        opt(r.energy_error),
        r.n_dofs.to_string(),
        r.n_removed.to_string(),
        opt(r.lambda_min),
        opt(r.lambda_max),
        opt(r.kappa),
        opt(r.lambda_min_br),
        opt(r.lambda_max_br),
        opt(r.kappa_br),
        r.failed.to_string(),
        quote(r.message.as_deref().unwrap_or("")),
        fmt_f64(r.wall_time_s),
    ];
    fields.join(",")
}

pub fn records_csv(records: &[RunRecord]) -> String {
    let mut out = CSV_HEADER.join(",");
    out.push('\n');
    for r in records {
        out.push_str(&csv_row(r));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct JsonStudy<'a> {
    study: &'a str,
    variant: &'a str,
    tau: f64,
    beta: f64,
    c: Option<f64>,
    generator: &'static str,
    records: &'a [RunRecord],
    summary: &'a [RunRecord],
    rates: &'a [crate::harness::RateRecord],
}

pub fn study_json(s: &StudyResult) -> String {
    let doc = JsonStudy {
        study: &s.study,
        variant: &s.variant,
        tau: s.tau,
        beta: s.beta,
        c: s.c,
        generator: concat!("cutiga ", env!("CARGO_PKG_VERSION")),
        records: &s.records,
        summary: &s.summary,
        rates: &s.rates,
    };
    serde_json::to_string_pretty(&doc).expect("study serializes")
}

pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Writes `<stem>.csv`, `<stem>.json` and, when present, `<stem>_summary.csv`.
pub fn write_study(dir: &Path, s: &StudyResult) -> std::io::Result<Vec<PathBuf>> {
    let stem = s.file_stem();
    let mut written = Vec::new();
    let csv = dir.join(format!("{stem}.csv"));
    write_atomic(&csv, records_csv(&s.records).as_bytes())?;
    written.push(csv);
    let json = dir.join(format!("{stem}.json"));
    write_atomic(&json, study_json(s).as_bytes())?;
    written.push(json);
    if !s.summary.is_empty() && s.summary != s.records {
        let sum = dir.join(format!("{stem}_summary.csv"));
        write_atomic(&sum, records_csv(&s.summary).as_bytes())?;
        written.push(sum);
    }
    Ok(written)
}
