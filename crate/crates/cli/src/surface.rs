//! surface generate|verify and twoboundary analyze.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde_json::json;

use kbound::circle::UnitCircleGrid;
use kbound::frame::*;
use kbound::kmatrix::KMatrix;
use kbound::laurent::C64;
use kbound::potentials::{ksym_residual, Potential, KSYM_PRE_TOL};

use crate::commands::checks_text;
use crate::error::{CliError, CliResult};
use crate::io::{domain_grid, read_potential_file, write_file};
use crate::report::{all_pass, Check};
use crate::{Ctx, GridArgs, Output};

pub struct GenerateArgs {
    pub file: PathBuf,
    pub grid: GridArgs,
    pub sym_point: C64,
    pub h: f64,
    pub out: PathBuf,
    pub report: Option<PathBuf>,
    pub omega: Option<PathBuf>,
}

/// Everything downstream of the frame field.
struct Run {
    xi: Potential,
    k: KMatrix,
    rescaled: bool,
    ff: FrameField,
    calibration: f64,
    omega: Vec<f64>,
}

/// Loads and validates the potential, rescales it to the metric normalization if needed
/// and computes frames on the grid. Nothing is written.
fn prepare(file: &Path, g: &GridArgs) -> CliResult<Run> {
    let pf = read_potential_file(file)?;
    let xi = pf.potential()?;
    let rescaled = (xi.normalization_product() - NORMALIZATION).abs() > 1e-12;
    let xi = if rescaled { xi.normalized()? } else { xi };
    let dom = domain_grid(g.grid, g.domain)?;
    let circle = UnitCircleGrid::new(4 * g.modes).map_err(|e| CliError::usage(format!("--modes: {e}")))?;
    let calibration = calibrate_metric(circle, g.modes)?;
    let ff = frame_field(&xi, dom, circle, g.modes)?;
    let omega = metric_extract(&ff, calibration)?;
    Ok(Run { xi, k: pf.kmatrix(), rescaled, ff, calibration, omega })
}

fn iwasawa_max(ff: &FrameField) -> f64 {
    let r = ff.max_residuals();
    r.unitarity.max(r.analyticity).max(r.reconstruction)
}

fn interior_mean_error(geo: &SurfaceGeometry, dom: &DomainGrid, h: f64) -> f64 {
    let mut e = 0.0f64;
    for j in 1..dom.ny - 1 {
        for i in 1..dom.nx - 1 {
            e = e.max((geo.mean[dom.index(i, j)] - h).abs());
        }
    }
    e
}

fn obj(imm: &ImmersionGrid) -> Vec<u8> {
    let dom = imm.dom;
    let mut s = Vec::with_capacity(40 * dom.len());
    for p in &imm.coords {
        let _ = writeln!(s, "v {:.12e} {:.12e} {:.12e}", p[0], p[1], p[2]);
    }
    for j in 0..dom.ny - 1 {
        for i in 0..dom.nx - 1 {
            let v = |i, j| dom.index(i, j) + 1;
            let _ = writeln!(s, "f {} {} {} {}", v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1));
        }
    }
    s
}

fn omega_csv(omega: &[f64], dom: &DomainGrid) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["x", "y", "omega"])?;
    for j in 0..dom.ny {
        for i in 0..dom.nx {
            w.serialize((dom.x(i), dom.y(j), omega[dom.index(i, j)]))?;
        }
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

/// K-symmetry and boundary residuals along y = 0, or `None` when ξ is not K-symmetric.
fn boundary_block(run: &Run, k: &KMatrix) -> CliResult<Option<(KSymReport, f64)>> {
    if ksym_residual(&run.xi, k) > KSYM_PRE_TOL || run.ff.dom.row_of(0.0).is_none() {
        return Ok(None);
    }
    Ok(Some((ksym_report(&run.ff, k)?, boundary_residual(&run.omega, &run.ff.dom, k)?)))
}

pub fn generate(ctx: &Ctx, a: &GenerateArgs) -> CliResult<Output> {
    let run = prepare(&a.file, &a.grid)?;
    let imm = sym_bobenko(&run.ff, a.sym_point, a.h)?;
    let geo = surface_geometry(&imm);
    let dom = run.ff.dom;
    let t = &ctx.tols;
    let mut checks = vec![
        Check::keyed(t, "surface.iwasawa", iwasawa_max(&run.ff)),
        Check::keyed(t, "surface.reality", imm.reality),
        Check::keyed(t, "surface.mean_curvature", interior_mean_error(&geo, &dom, a.h)),
        Check::keyed(t, "surface.sinh_gordon", sinh_gordon_residual(&run.omega, &dom)),
    ];
    let ks = ksym_residual(&run.xi, &run.k);
    let mut rep = json!({
        "potential": a.file.display().to_string(),
        "A": run.k.a,
        "B": run.k.b,
        "grid": [dom.nx, dom.ny],
        "domain": [dom.x_range.0, dom.x_range.1, dom.y_range.0, dom.y_range.1],
        "modes": run.ff.n_modes,
        "sym_point": [a.sym_point.re, a.sym_point.im],
        "H": a.h,
        "rescaled": run.rescaled,
        "metric_constant": run.calibration,
        "iwasawa": run.ff.max_residuals(),
        "conformality": geo.conformality,
        "omega_range": [run.omega.iter().copied().fold(f64::INFINITY, f64::min), run.omega.iter().copied().fold(f64::NEG_INFINITY, f64::max)],
        "ksym_residual": ks,
        "k_symmetric": ks <= KSYM_PRE_TOL,
    });
    if let Some((r, b)) = boundary_block(&run, &run.k)? {
        checks.push(Check::keyed(t, "surface.boundary_y0", b));
        checks.push(Check::keyed(t, "surface.phi_sym", r.phi_sym));
        checks.push(Check::keyed(t, "surface.frame_sym", r.frame_sym));
        checks.push(Check::keyed(t, "surface.b_sym", r.b_sym));
        checks.push(Check::keyed(t, "surface.zeta_sym", r.zeta_sym));
        rep["boundary_y0"] = json!(b);
        rep["ksym"] = serde_json::to_value(r)?;
    }
    let pass = all_pass(&checks);
    rep["checks"] = serde_json::to_value(&checks)?;
    rep["tolerances"] = serde_json::to_value(t.map())?;
    rep["pass"] = json!(pass);

    write_file(&a.out, &obj(&imm))?;
    let mut text = format!("wrote {} ({}×{} vertices)\n", a.out.display(), dom.nx, dom.ny);
    if let Some(p) = &a.omega {
        write_file(p, &omega_csv(&run.omega, &dom)?)?;
        text += &format!("wrote {}\n", p.display());
    }
    if let Some(p) = &a.report {
        write_file(p, serde_json::to_string_pretty(&rep)?.as_bytes())?;
        text += &format!("wrote {}\n", p.display());
    }
    text += &checks_text(&checks);
    Ok(Output { json: rep, text, pass })
}

pub fn verify(ctx: &Ctx, file: &Path, g: &GridArgs, a: f64, b: f64, second: Option<(f64, f64, f64)>, report: Option<&Path>) -> CliResult<Output> {
    let run = prepare(file, g)?;
    let k = KMatrix::new(a, b);
    let dom = run.ff.dom;
    let t = &ctx.tols;
    let sg = sinh_gordon_residual(&run.omega, &dom);
    let ks = ksym_residual(&run.xi, &k);
    let mut checks = vec![Check::keyed(t, "surface.sinh_gordon", sg), Check::keyed(t, "surface.ksym", ks)];
    let mut rep = json!({"A": a, "B": b, "grid": [dom.nx, dom.ny], "modes": run.ff.n_modes, "rescaled": run.rescaled, "sinh_gordon": sg, "ksym": ks});
    let b0 = boundary_residual(&run.omega, &dom, &k)?;
    checks.push(Check::keyed(t, "surface.boundary_y0", b0));
    rep["boundary_y0"] = json!(b0);
    match boundary_block(&run, &k)? {
        Some((r, _)) => {
            for (key, v) in [
                ("phi_sym", r.phi_sym),
                ("frame_sym", r.frame_sym),
                ("b_sym", r.b_sym),
                ("zeta_sym", r.zeta_sym),
                ("family_sym", r.family_sym),
            ] {
                checks.push(Check::keyed(t, &format!("surface.{key}"), v));
                rep[key] = json!(v);
            }
            rep["diff_kf"] = json!(r.diff_kf);
            rep["f_identity"] = json!(r.f_identity);
            rep["f_identity_reflected"] = json!(r.f_identity_reflected);
        }
        None => {
            let fs = frame_sym_row(&run.ff, &k, dom.snap_row(0.0)?.0);
            checks.push(Check::keyed(t, "surface.frame_sym", fs));
            rep["frame_sym"] = json!(fs);
        }
    }
    if let Some((a1, b1, y1)) = second {
        let k1 = KMatrix::new(a1, b1);
        let dd = dressing_matrix(&run.ff, &k, &k1, y1)?;
        let b1r = boundary_residual_at(&run.omega, &dom, &k1, y1)?;
        checks.push(Check::keyed(t, "surface.boundary_y1", b1r));
        checks.push(Check::keyed(t, "surface.z_independence", dd.z_independence));
        checks.push(Check::keyed(t, "surface.det_unitarity", dd.det_residual.max(dd.unitarity)));
        rep["A1"] = json!(a1);
        rep["B1"] = json!(b1);
        rep["y1"] = json!(y1);
        rep["boundary_y1"] = json!(b1r);
        rep["z_independence"] = json!(dd.z_independence);
        rep["det_residual"] = json!(dd.det_residual);
        rep["unitarity"] = json!(dd.unitarity);
        rep["commutator"] = json!(commutator_residual(&dd, &run.xi));
    }
    let pass = all_pass(&checks);
    rep["checks"] = serde_json::to_value(&checks)?;
    rep["tolerances"] = serde_json::to_value(t.map())?;
    rep["pass"] = json!(pass);
    let mut text = String::new();
    if let Some(p) = report {
        write_file(p, serde_json::to_string_pretty(&rep)?.as_bytes())?;
        text += &format!("wrote {}\n", p.display());
    }
    text += &checks_text(&checks);
    Ok(Output { json: rep, text, pass })
}

pub fn twoboundary(ctx: &Ctx, file: &Path, g: &GridArgs, y1: f64, a1: Option<f64>, b1: f64) -> CliResult<Output> {
    let run = prepare(file, g)?;
    let k0 = run.k;
    let k1 = match a1 {
        Some(a1) => KMatrix::new(a1, b1),
        None => matched_second_boundary(&run.ff, y1, b1)?,
    };
    let t = &ctx.tols;
    let dd = dressing_matrix(&run.ff, &k0, &k1, y1)?;
    let tb = two_boundary_report(&run.ff, &k0, &k1, y1)?;
    let comm = commutator_residual(&dd, &run.xi);
    let mut rep = json!({
        "K0": k0, "K1": k1, "matched": a1.is_none(), "y1": y1, "row": dd.row, "snap": dd.snap,
        "z_independence": dd.z_independence, "det_residual": dd.det_residual, "unitarity": dd.unitarity,
        "commutator": comm, "report": tb,
    });
    let checks = vec![
        Check::keyed(t, "twoboundary.det_unitarity", dd.det_residual.max(dd.unitarity)),
        Check::keyed(t, "twoboundary.z_independence", dd.z_independence),
        Check::keyed(t, "twoboundary.k1pkf2", tb.k1pkf2),
        Check::keyed(t, "twoboundary.commutator", comm),
    ];
    if let Ok(cm) = commutant_decompose(&dd, &run.xi) {
        let (_, rec) = dressing_reconstruct(&dd, &run.xi, &cm);
        rep["commutant"] = json!({"reconstruction": rec, "eigenvalue_agreement": cm.agreement});
    }
    let pass = all_pass(&checks);
    rep["checks"] = serde_json::to_value(&checks)?;
    rep["pass"] = json!(pass);
    let text = format!("K₁ = ({}, {}) at y₁ = {y1}\n{}", k1.a, k1.b, checks_text(&checks));
    Ok(Output { json: rep, text, pass })
}
