//! sweep run: one CSV row per (d, A, B) with nullity, predicted dimension and genus.

use std::path::Path;

use serde::Serialize;
use serde_json::json;

use kbound::kmatrix::KMatrix;
use kbound::potentials::{
    freedom_split, ksym_constraints, ksym_nullspace, ksym_residual, ksym_sample, offdiag_sample, theorem_dimension,
};
use kbound::spectral::spectral_curve;

use crate::error::{CliError, CliResult};
use crate::io::{child_seed, parse_f64_list, parse_usize_list, write_file};
use crate::{Ctx, Output};

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Row {
    pub d: usize,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub nullity: Option<usize>,
    pub dimension: usize,
    pub dimension_ok: Option<bool>,
    pub degenerate: bool,
    pub re_freedom: Option<usize>,
    pub im_freedom: Option<usize>,
    pub genus: Option<i64>,
    pub ksym_residual: Option<f64>,
    pub error: String,
}

fn row(seed: u64, d: usize, a: f64, b: f64, offdiag: bool) -> Row {
    let mut r = Row { d, a, b, dimension: theorem_dimension(d), ..Row::default() };
    let k = KMatrix::new(a, b);
    r.degenerate = k.roots().degenerate;
    let mut step = || -> kbound::Result<()> {
        let sys = ksym_constraints(d, &k)?;
        let n = ksym_nullspace(&sys)?.dim;
        r.nullity = Some(n);
        r.dimension_ok = Some(n == r.dimension);
        let (re, im) = freedom_split(&sys)?;
        r.re_freedom = Some(re);
        r.im_freedom = Some(im);
        let s = child_seed(seed, &format!("sweep/{d}/{a}/{b}"));
        let xi = if offdiag { offdiag_sample(d, &k, s)? } else { ksym_sample(d, &k, s)? };
        r.ksym_residual = Some(ksym_residual(&xi, &k));
        r.genus = Some(spectral_curve(&xi)?.genus);
        Ok(())
    };
    if let Err(e) = step() {
        r.error = e.to_string();
    }
    r
}

pub fn rows(seed: u64, degrees: &[usize], a: &[f64], b: &[f64], offdiag: bool) -> Vec<Row> {
    let mut out = vec![];
    for &d in degrees {
        for &ai in a {
            for &bi in b {
                out.push(row(seed, d, ai, bi, offdiag));
            }
        }
    }
    out
}

pub fn run(ctx: &Ctx, degrees: &str, a: &str, b: &str, offdiag: bool, out: Option<&Path>) -> CliResult<Output> {
    let degrees = parse_usize_list(degrees).map_err(|e| CliError::usage(format!("--degrees: {e}")))?;
    if degrees.contains(&0) {
        return Err(CliError::usage("--degrees: degree must be ≥ 1"));
    }
    let a = parse_f64_list(a).map_err(|e| CliError::usage(format!("--A: {e}")))?;
    let b = parse_f64_list(b).map_err(|e| CliError::usage(format!("--B: {e}")))?;
    let table = rows(ctx.seed, &degrees, &a, &b, offdiag);
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(vec![]);
    w.write_record(["d", "A", "B", "nullity", "dimension", "dimension_ok", "degenerate", "re_freedom", "im_freedom", "genus", "ksym_residual", "error"])?;
    for r in &table {
        w.serialize(r)?;
    }
    let body = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    let mut text = String::new();
    match out {
        Some(p) => {
            write_file(p, &body)?;
            text += &format!("wrote {} ({} rows)\n", p.display(), table.len());
        }
        None => text += &String::from_utf8(body).expect("csv is utf-8"),
    }
    // the dimension count assumes four simple K-roots, so degenerate rows are reported but not gated;
    // row errors are not verification failures either
    let pass = table.iter().all(|r| r.degenerate || r.dimension_ok != Some(false));
    Ok(Output { json: json!({"rows": table, "pass": pass}), text, pass })
}
