//! suite run: the named verification battery.
//!
//! Every entry has a unique id, a one-line statement of what it checks, and either a
//! residual compared against the tolerance of the same id or an exact mismatch count.
//! Random inputs come from per-id child seeds of the root seed.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use kbound::circle::{circle_sample, fourier_coefficients, UnitCircleGrid};
use kbound::exact::{from_ratio, nullspace, Q};
use kbound::frame::*;
use kbound::kmatrix::*;
use kbound::laurent::{adjugate2, c, det2, identity, inv2, norm, LaurentMatrix, Mat2, C64};
use kbound::potentials::*;
use kbound::spectral::{circle_reality_residual, curve_polynomial, exact_genus, nu_symmetry_residual, spectral_curve, ExactPotential};

use crate::error::CliResult;
use crate::io::{child_seed, write_file};
use crate::report::{Check, Environment, Kind};
use crate::tol::Tolerances;
use crate::{Ctx, Output};

#[derive(Clone, Debug, Serialize)]
pub struct Entry {
    pub id: String,
    pub statement: &'static str,
    pub kind: Kind,
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub environment: Environment,
    pub tolerances: std::collections::BTreeMap<String, f64>,
    pub tests: Vec<Entry>,
    pub passed: usize,
    pub failed: usize,
    pub pass: bool,
}

struct Battery<'a> {
    seed: u64,
    tols: &'a Tolerances,
    out: Vec<Entry>,
}

impl Battery<'_> {
    fn rng(&self, id: &str) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(child_seed(self.seed, id))
    }

    fn push(&mut self, statement: &'static str, chk: Check) {
        assert!(self.out.iter().all(|e| e.id != chk.id), "duplicate test id {}", chk.id);
        self.out.push(Entry { id: chk.id, statement, kind: chk.kind, value: chk.value, tolerance: chk.tolerance, pass: chk.pass });
    }

    fn float(&mut self, id: &str, statement: &'static str, value: f64) {
        let chk = Check::keyed(self.tols, id, value);
        self.push(statement, chk);
    }

    fn exact(&mut self, id: &str, statement: &'static str, mismatches: usize) {
        self.push(statement, Check::exact(id, mismatches));
    }
}

fn fmax(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

fn random_k(r: &mut ChaCha8Rng) -> KMatrix {
    loop {
        let k = KMatrix::new(r.random_range(-3.0..3.0), r.random_range(-3.0..3.0));
        if (k.a - k.b).abs() > 0.1 && (k.a + k.b).abs() > 0.1 && k.a.abs() > 0.1 && k.b.abs() > 0.1 {
            return k;
        }
    }
}

/// Rational K on an eighths grid with four simple roots, as the dimension count requires.
fn rational_k(r: &mut ChaCha8Rng) -> KMatrix {
    loop {
        let k = KMatrix::new(r.random_range(-24i32..=24) as f64 / 8.0, r.random_range(-24i32..=24) as f64 / 8.0);
        if !k.roots().degenerate {
            return k;
        }
    }
}

fn random_lam(r: &mut ChaCha8Rng) -> C64 {
    C64::from_polar(r.random_range(0.3..3.0), r.random_range(0.0..std::f64::consts::TAU))
}

fn random_mat(r: &mut ChaCha8Rng) -> Mat2 {
    Mat2::from_fn(|_, _| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
}

fn cv(u: nalgebra::Vector2<f64>) -> nalgebra::Vector2<C64> {
    nalgebra::Vector2::new(c(u[0], 0.0), c(u[1], 0.0))
}

/// First normalizable degree-one sample with a balanced Im β₋₁ : Im β₀ split; a
/// lopsided split needs more loop modes than the suite's frame fields carry.
fn delaunay(seed: u64, k: &KMatrix) -> Potential {
    (0..1000u64)
        .filter_map(|i| ksym_sample(1, k, seed.wrapping_add(i)).ok())
        .filter_map(|p| p.normalized().ok())
        .find(|p| (p.beta_k(-1).im / p.beta_k(0).im).ln().abs() <= MAX_BETA_RATIO.ln())
        .expect("a normalizable degree-one sample")
}

const MAX_BETA_RATIO: f64 = 4.0;

fn field(xi: &Potential, n: usize) -> kbound::Result<FrameField> {
    frame_field(xi, DomainGrid::square(1.0, n)?, UnitCircleGrid::new(128)?, DEFAULT_MODES)
}

fn laurent(b: &mut Battery) {
    let mut r = b.rng("laurent");
    let xs: Vec<LaurentMatrix> = (0..10).map(|_| LaurentMatrix::new(-2, (0..5).map(|_| random_mat(&mut r)).collect())).collect();
    let adj = fmax(xs.iter().map(|x| (x * &x.adjugate()).dist(&LaurentMatrix::identity().scale_by_poly(&x.det()))));
    b.float("laurent.det_adjugate", "X·adj X = det X·𝟙 for Laurent matrices", adj);
    let inv = fmax(xs.iter().map(|x| x.star().star().dist(x).max(x.invert().invert().dist(x))));
    b.float("laurent.star_involution", "star and λ ↦ λ⁻¹ are involutions", inv);
    let g = UnitCircleGrid::new(64).unwrap();
    let ft = fmax(xs.iter().map(|x| fourier_coefficients(&circle_sample(x, g), -2..=2).map(|y| y.dist(x)).unwrap_or(f64::INFINITY)));
    b.float("laurent.fourier_roundtrip", "circle sampling and DFT recover the coefficients", ft);
}

fn contour_residue(k: &KMatrix, z0: C64, rad: f64) -> Mat2 {
    let m = 256;
    let mut acc = Mat2::zeros();
    for j in 0..m {
        let w = C64::from_polar(rad, std::f64::consts::TAU * j as f64 / m as f64);
        acc += inv2(&k.eval(z0 + w).unwrap()).unwrap() * w;
    }
    acc / c(m as f64, 0.0)
}

fn kmatrix(b: &mut Battery) {
    let mut r = b.rng("kmatrix");
    let ks: Vec<KMatrix> = (0..20).map(|_| random_k(&mut r)).collect();
    let (mut sym, mut unit) = (0.0f64, 0.0f64);
    for k in &ks {
        for _ in 0..16 {
            let l = random_lam(&mut r);
            let m = k.eval(l).unwrap();
            sym = sym.max(norm(&(m - m.transpose())));
            sym = sym.max(norm(&(k.eval(l.conj()).unwrap().map(|z| z.conj()) - m)));
            sym = sym.max(norm(&(k.eval(l.inv()).unwrap() - adjugate2(&m))));
        }
        unit = unit.max(norm(&(k.eval(c(1.0, 0.0)).unwrap() - identity() * c(4.0 * (k.a - k.b), 0.0))));
        unit = unit.max(norm(&(k.eval(c(-1.0, 0.0)).unwrap() - identity() * c(4.0 * (k.a + k.b), 0.0))));
    }
    b.float("kmatrix.symmetry", "K symmetric, real structure K(λ̄)‾ = K(λ), K(λ⁻¹) = adj K(λ)", sym);
    b.float("kmatrix.values_at_unit", "K(±1) = 4(A∓B)𝟙", unit);

    let (mut roots, mut orth, mut aind, mut diag, mut res, mut swap) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut mu_bad = 0;
    for k in &ks {
        let co: Vec<f64> = k.quartic().coeffs().iter().map(|z| z.re).collect();
        let mut cm = nalgebra::DMatrix::<f64>::zeros(4, 4);
        for i in 1..4 {
            cm[(i, i - 1)] = 1.0;
        }
        for i in 0..4 {
            cm[(i, 3)] = -co[i] / co[4];
        }
        let q = k.roots();
        roots = roots.max(fmax(cm.complex_eigenvalues().iter().map(|z| q.distance(*z))));
        let (v, w) = k.kernels().unwrap();
        orth = orth.max(v.dot(&w).abs());
        if let Ok((v2, w2)) = KMatrix::new(k.a + 0.75, k.b).kernels() {
            aind = aind.max((v - v2).norm()).max((w - w2).norm());
        }
        let e = k.eigen();
        mu_bad += (e.mu_minus.invert() != e.mu_plus) as usize;
        let vc = e.big_v.map(|x| c(x, 0.0));
        let vi = e.big_v.try_inverse().unwrap().map(|x| c(x, 0.0));
        for l in UnitCircleGrid::new(16).unwrap().points() {
            let d = Mat2::new(e.mu_minus.eval(l), c(0.0, 0.0), c(0.0, 0.0), e.mu_plus.eval(l));
            let m = k.eval(l).unwrap();
            diag = diag.max(norm(&(vc * d * vi - m)) / norm(&m).max(1.0));
        }
        let mem = q.members();
        let rs = k.inverse_residues().unwrap();
        for (i, en) in rs.entries.iter().enumerate() {
            let sep = (0..4).filter(|&j| j != i).map(|j| (mem[j] - mem[i]).norm()).fold(f64::MAX, f64::min);
            res = res.max(norm(&(contour_residue(k, en.pole, (0.3 * sep).min(0.3 * mem[i].norm())) - en.matrix)));
        }
        let s = fmax(rs.entries.iter().map(|e| norm(&e.matrix))).max(1.0);
        for (i, u) in [(0, w), (1, w), (2, v), (3, v)] {
            swap = swap.max((rs.entries[i].matrix * cv(u)).norm() / s);
        }
    }
    b.float("kmatrix.roots_companion", "root quadruple matches companion-matrix eigenvalues", roots);
    b.float("kmatrix.kernel_orthogonality", "kernel vectors v, v⊥ are orthogonal", orth);
    b.float("kmatrix.kernel_a_independence", "kernel vectors do not depend on A", aind);
    b.exact("kmatrix.eigen_inversion", "μ₋(λ⁻¹) = μ₊(λ) coefficientwise", mu_bad);
    b.float("kmatrix.diagonalization", "K = V diag(μ₋, μ₊) V⁻¹", diag);
    b.float("kmatrix.residues_contour", "closed-form residues of K⁻¹ match contour quadrature", res);
    b.float("kmatrix.kernel_swap", "residue at ϱ, r annihilates v⊥; at ϱ⁻¹, r⁻¹ annihilates v", swap);

    let mut bad = 0;
    for (i, k0) in ks.iter().enumerate() {
        let k1 = KMatrix::new(r.random_range(-3.0..3.0), if i % 2 == 0 { k0.b } else { r.random_range(-3.0..3.0) });
        bad += ((k_commutator(k0, &k1).max_norm() <= 1e-12) != ((k0.b - k1.b).abs() <= 1e-12)) as usize;
    }
    b.exact("kmatrix.commutator_criterion", "[K₀, K₁] = 0 exactly when B₀ = B₁", bad);

    let mut rec = 0.0f64;
    let mut rem = 0.0f64;
    for (i, k0) in ks.iter().enumerate().take(8) {
        let k1 = KMatrix::new(r.random_range(-2.0..2.0), 0.0);
        let k1 = KMatrix::new(k1.a, -k1.a * k0.b / k0.a);
        let pd = k_product_decompose(k0, &k1).unwrap();
        for l in UnitCircleGrid::new(64).unwrap().points() {
            if k1.roots().distance(l) < 1e-2 || pd.den.eval(l).norm() < 1e-3 {
                continue;
            }
            let direct = ratio_direct(k0, &k1, l).unwrap();
            rec = rec.max(norm(&(pd.eval(l) - direct)) / norm(&direct).max(1.0));
        }
        if k1 != *k0 {
            let inter = double_ksym_intersect(1 + i % 4, k0, &k1).unwrap();
            rem = rem.max(fmax(inter.factors.iter().map(|(_, e)| *e)));
        }
    }
    b.float("kmatrix.product_decomposition", "K₁⁻¹K₀ = p𝟙 + qη when A₀B₁ + A₁B₀ = 0", rec);
    b.float("kmatrix.double_ksym_division", "doubly K-symmetric potentials are multiples of η", rem);
}

fn potentials(b: &mut Battery) {
    let mut r = b.rng("potentials");
    let (mut dim_bad, mut split_bad, mut float_bad) = (0, 0, 0);
    for d in 1..=8 {
        for _ in 0..3 {
            let k = rational_k(&mut r);
            let sys = ksym_constraints(d, &k).unwrap();
            let n = ksym_nullspace(&sys).unwrap().dim;
            dim_bad += (n != theorem_dimension(d)) as usize;
            split_bad += (freedom_split(&sys).unwrap() != theorem_freedom(d)) as usize;
            float_bad += ksym_nullspace_with(&sys, RankMode::Float).map_or(true, |f| f.dim != n) as usize;
        }
    }
    b.exact("potentials.dimension_theorem", "exact nullity is (3d−2)/2 for even d and (3d+1)/2 for odd d", dim_bad);
    b.exact("potentials.freedom_split", "Re β and Im β freedom counts match the prediction", split_bad);
    b.exact("potentials.float_rank", "SVD rank agrees with the exact rank", float_bad);

    let (mut ks, mut ids) = (0.0f64, 0.0f64);
    for d in 1..=6 {
        for s in 0..5u64 {
            let k = random_k(&mut r);
            let xi = ksym_sample(d, &k, child_seed(b.seed, "potentials") ^ (16 * d as u64 + s)).unwrap();
            ks = ks.max(ksym_residual(&xi, &k));
            ids = ids.max(structural_identities(&xi, &k).unwrap().max_residual());
        }
    }
    b.float("potentials.ksym_sample", "sampled potentials satisfy Kξ + ξ*K = 0", ks);
    b.float("potentials.structural_identities", "coefficient identities and kernel-eigenspace property", ids);

    let mut rep = 0.0f64;
    for d in 1..=10 {
        let k = random_k(&mut r);
        let xi = offdiag_sample(d, &k, d as u64).unwrap();
        rep = rep.max(offdiag_factorize(&xi, &k).map(|f| f.reproduction).unwrap_or(f64::INFINITY));
    }
    b.float("potentials.offdiag_factorization", "off-diagonal K-symmetric ξ = p(λ)·core", rep);

    let k = KMatrix::new(0.375, 0.75);
    let xi = ksym_sample(3, &k, 5).unwrap();
    let file = PotentialFile::new(&xi, &k, PotentialMeta::default());
    let back: PotentialFile = serde_json::from_str(&serde_json::to_string(&file).unwrap()).unwrap();
    b.exact("potentials.file_roundtrip", "potential files round-trip bit-exactly", (back != file || back.potential().unwrap() != xi) as usize);
}

fn qpoly_mul(a: &[Q], b: &[Q]) -> Vec<Q> {
    let mut out = vec![from_ratio(0, 1); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn spectral(b: &mut Battery) {
    let mut r = b.rng("spectral");
    let (mut nu, mut re) = (0.0f64, 0.0f64);
    for d in 1..=6 {
        let k = random_k(&mut r);
        let xi = ksym_sample(d, &k, d as u64).unwrap();
        nu = nu.max(nu_symmetry_residual(&curve_polynomial(&xi), d));
        re = re.max(circle_reality_residual(&xi, 64));
    }
    b.float("spectral.nu_symmetry", "curve coefficients satisfy a_k = conj(a_{2d−k})", nu);
    b.float("spectral.circle_reality", "λ^{1−d}(−det ξ) is real on the unit circle", re);

    let mut off_bad = 0;
    for d in 1..=8 {
        let k = random_k(&mut r);
        off_bad += spectral_curve(&offdiag_sample(d, &k, 3).unwrap()).map_or(true, |cv| cv.genus != 1) as usize;
    }
    b.exact("spectral.offdiag_genus", "off-diagonal K-symmetric potentials have genus one", off_bad);

    let mut gen_bad = 0;
    for s in 0..4u64 {
        let k = random_k(&mut r);
        gen_bad += spectral_curve(&ksym_sample(3, &k, s).unwrap()).map_or(true, |cv| cv.genus != 3) as usize;
    }
    b.exact("spectral.generic_genus", "generic K-symmetric potentials of degree 3 have genus 3", gen_bad);

    let mut sq_bad = 0;
    for d in 1..=3 {
        let k = KMatrix::new(r.random_range(-16i32..=16) as f64 / 8.0, r.random_range(1i32..=16) as f64 / 8.0);
        let sys = ksym_constraints(d, &k).unwrap();
        let basis = nullspace(&sys.exact_rows, sys.n_unknowns());
        let mut x = vec![from_ratio(0, 1); sys.n_unknowns()];
        for v in &basis {
            let w = from_ratio(r.random_range(1i64..=3), 1);
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi += vi * &w;
            }
        }
        let ex = ExactPotential::from_unknowns(d, &x);
        let g0 = exact_genus(&ex.curve_polynomial()).map(|g| g.genus);
        let p = vec![from_ratio(2, 1), from_ratio(r.random_range(-6i64..6), 3), from_ratio(2, 1)];
        let sc = ex.times_real_poly(&qpoly_mul(&p, &p)).unwrap();
        let ge = exact_genus(&sc.curve_polynomial()).map(|g| g.genus);
        let gf = spectral_curve(&sc.to_potential().unwrap()).map(|cv| cv.genus);
        sq_bad += !(g0.is_ok() && g0 == ge && ge == gf) as usize;
    }
    b.exact("spectral.square_invariance", "genus is unchanged by ξ ↦ p²ξ with p real palindromic", sq_bad);
}

fn frame(b: &mut Battery) -> kbound::Result<()> {
    let mut r = b.rng("frame");
    let ex = fmax((0..50).map(|_| {
        let m = random_mat(&mut r) * c(2.0, 0.0);
        let m = m - identity() * (m.trace() / 2.0);
        norm(&(expm2(&m) * expm2(&-m) - identity()))
    }));
    b.float("frame.expm_inverse", "exp(X)·exp(−X) = 𝟙 for trace-free X", ex);

    let (g, g2) = (UnitCircleGrid::new(128)?, UnitCircleGrid::new(256)?);
    let (mut res, mut agree) = (0.0f64, 0.0f64);
    for d in 1..=3 {
        let xi = random_potential(d, 1.0, child_seed(b.seed, "frame.iwasawa") + d as u64)?;
        let sup = fmax(UnitCircleGrid::new(512)?.points().into_iter().map(|l| norm(&xi.eval(l))));
        let xi = xi.scale(1.0 / sup);
        for z in [c(0.4, 0.0), c(-0.3, 0.6), c(0.0, -1.0)] {
            let f = iwasawa_factor(&holomorphic_frame(&xi, z, g), 32)?;
            res = res.max(f.residuals.unitarity).max(f.residuals.analyticity).max(f.residuals.reconstruction);
            let o = iwasawa_dense_oracle(&holomorphic_frame(&xi, z, g2), 64)?;
            agree = agree.max(fmax((0..g.n()).map(|j| norm(&(f.f.values[j] - o.f.values[2 * j])))));
        }
    }
    b.float("frame.iwasawa_residuals", "Φ = F·B with F unitary and B holomorphic in the disk", res);
    b.float("frame.iwasawa_oracle", "Toeplitz Cholesky agrees with the doubled-truncation dense solve", agree);

    b.float("frame.calibration", "vacuum anchoring gives the metric constant 4", (calibrate_metric(g, DEFAULT_MODES)? - METRIC_CONSTANT).abs());
    let vac = field(&vacuum(), 32)?;
    let om = metric_extract(&vac, METRIC_CONSTANT)?;
    b.float("frame.vacuum_omega", "the vacuum has ω ≡ 0", fmax(om.iter().map(|w| w.abs())));
    let geo = surface_geometry(&sym_bobenko(&vac, c(1.0, 0.0), 0.5)?);
    let dom = vac.dom;
    let herr = fmax((1..dom.ny - 1).flat_map(|j| (1..dom.nx - 1).map(move |i| (i, j))).map(|(i, j)| (geo.mean[dom.index(i, j)] - 0.5).abs()));
    b.float("frame.vacuum_mean_curvature", "the vacuum immersion has mean curvature H", herr);

    let k0 = KMatrix::new(1.0, 2.0);
    let xi = delaunay(child_seed(b.seed, "frame.delaunay") % 1000, &k0);
    let ff = field(&xi, 16)?;
    let lam0 = C64::from_polar(1.0, 0.7);
    b.float("frame.immersion_reality", "Sym–Bobenko f is trace-free anti-Hermitian at |λ₀| = 1", sym_bobenko(&ff, lam0, 0.5)?.reality);
    let mut iso = 0.0f64;
    for idx in (0..ff.dom.len()).step_by(17) {
        let fr = ff.frame(idx);
        for (j, x) in ff.xi_samples().iter().enumerate() {
            let f = fr.values[j];
            let zeta = inv2(&f).expect("unitary") * x * f;
            iso = iso.max((det2(&zeta) - det2(x)).norm());
        }
    }
    b.float("frame.isospectrality", "det F⁻¹ξF = det ξ", iso);
    b.float("frame.unitarity", "extended frames are unitary on the circle", ff.max_residuals().unitarity);
    let rep = ksym_report(&ff, &k0)?;
    b.float("frame.phi_sym", "KΦ_λ(z) = (Φ_λ̄(z̄)*)⁻¹K", rep.phi_sym);
    b.float("frame.frame_sym", "KF_λ = F_{λ⁻¹}K along y = 0", rep.frame_sym);
    b.float("frame.b_sym", "KB_λ = (B_λ̄*)⁻¹K along y = 0", rep.b_sym);
    b.float("frame.zeta_sym", "Kζ + ζ*K = 0 along y = 0", rep.zeta_sym);
    b.float("frame.differentiated_frame_sym", "λ-derivative of KF_λ = F_{λ⁻¹}K", rep.diff_kf);
    b.float("frame.f_identity_reflected", "Kf + f_{λ⁻¹}K equals the frame-derivative term", rep.f_identity_reflected);

    let om16 = metric_extract(&ff, METRIC_CONSTANT)?;
    let row = ff.dom.row_of(0.0).expect("y = 0 is a node");
    let bs = fmax((0..ff.dom.nx).map(|i| {
        let idx = ff.dom.index(i, row);
        (omega_y_spectral(&ff, idx) - (k0.a * om16[idx].exp() + k0.b * (-om16[idx]).exp())).abs()
    }));
    b.float("frame.boundary_spectral", "ω_y = Ae^ω + Be^{−ω} on y = 0 with exact ω_y", bs);

    let (mut sg, mut br) = (vec![], vec![]);
    for n in [32, 64] {
        let f = field(&xi, n)?;
        let w = metric_extract(&f, METRIC_CONSTANT)?;
        sg.push(sinh_gordon_residual(&w, &f.dom));
        br.push(boundary_residual(&w, &f.dom, &k0)?);
    }
    b.float("frame.sinh_gordon_order", "sinh-Gordon residual decays as h² (|ratio − 4|)", (sg[0] / sg[1] - 4.0).abs());
    b.float("frame.boundary_order", "one-sided boundary residual decays as h² (|ratio − 4|)", (br[0] / br[1] - 4.0).abs());

    let bad = random_potential(1, 0.25, 4)?;
    let fb = field(&bad, 8)?;
    let ctrl = frame_sym_row(&fb, &k0, fb.dom.row_of(0.0).expect("y = 0 is a node")).min(ksym_residual(&bad, &k0));
    b.float("frame.negative_control", "non-K-symmetric ξ breaks the frame symmetry (10⁻²/residual)", 1e-2 / ctrl);

    let mut r = b.rng("frame.lemma");
    let (mut lem, mut ure) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let (w, wy): (f64, f64) = (r.random_range(-1.0..1.0), r.random_range(-2.0..2.0));
        let k = KMatrix::new(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
        let l = C64::from_polar(r.random_range(0.5..2.0), r.random_range(0.0..std::f64::consts::TAU));
        lem = lem.max(lemma_identity_residual(w, wy, l, &k)?);
        ure = ure.max(norm(&(u_matrix(w, wy, l.conj()).adjoint() + u_matrix(w, wy, l.inv()))));
    }
    b.float("frame.lemma_identity", "KU_λ − U_{λ⁻¹}K is the boundary defect times (0,−1;1,0)", lem);
    b.float("frame.u_reality", "conj(U_λ̄)ᵗ = −U_{λ⁻¹}", ure);

    twoboundary(b, &ff, &xi, &k0)
}

fn twoboundary(b: &mut Battery, ff: &FrameField, xi: &Potential, k0: &KMatrix) -> kbound::Result<()> {
    let dd = dressing_matrix(ff, k0, k0, 0.0)?;
    b.float("twoboundary.degenerate_identity", "K₁ = K₀ at y₁ = 0 gives C = 𝟙", fmax(dd.c.values.iter().map(|m| norm(&(m - identity())))));
    let (mut du, mut zi, mut kf, mut cm) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (y1, b1) in [(0.5, 0.5), (-0.5, 1.0)] {
        let k1 = matched_second_boundary(ff, y1, b1)?;
        let dd = dressing_matrix(ff, k0, &k1, y1)?;
        du = du.max(dd.det_residual).max(dd.unitarity);
        zi = zi.max(dd.z_independence);
        cm = cm.max(commutator_residual(&dd, xi));
        kf = kf.max(two_boundary_report(ff, k0, &k1, y1)?.k1pkf2);
    }
    b.float("twoboundary.det_unitarity", "C has det 1 and is unitary on the circle", du);
    b.float("twoboundary.z_independence", "C does not depend on x along y = y₁", zi);
    b.float("twoboundary.k1pkf2", "the K₁ identity for the dressed frame holds", kf);
    b.float("twoboundary.commutator", "M commutes with ξ for a matched second boundary", cm);

    let (mut prod, mut finv, mut div) = (0.0f64, 0.0f64, 0.0f64);
    for (a, bb) in [(1.0, 2.0), (0.5, -0.3), (0.0, 1.0)] {
        let k0 = KMatrix::new(a, bb);
        let k1 = complementary(&k0);
        let xi = ksym_sample(1, &k0, 2)?;
        let dd = synthetic_commuting(&xi, &k0, &k1, UnitCircleGrid::new(128)?);
        let cmt = commutant_decompose(&dd, &xi)?;
        let chk = complementary_check(&dd, &xi, &cmt);
        prod = prod.max(chk.product);
        finv = finv.max(chk.f_inversion);
        div = div.max(divisor_check(&k0, &k1).distance);
    }
    b.float("twoboundary.complementary_product", "(f − gν)(f + gν) = 1 for complementary constants", prod);
    b.float("twoboundary.f_inversion", "f(λ⁻¹) = f(λ) for complementary constants", finv);
    b.float("twoboundary.divisors", "zeros and poles of f ∓ gν sit at ϱ₀, r₀, ϱ₁, r₁", div);
    Ok(())
}

pub fn battery(seed: u64, tols: &Tolerances) -> SuiteReport {
    let mut b = Battery { seed, tols, out: vec![] };
    laurent(&mut b);
    kmatrix(&mut b);
    potentials(&mut b);
    spectral(&mut b);
    if let Err(e) = frame(&mut b) {
        // a pipeline error fails the suite; remaining frame entries are absent
        b.exact("frame.pipeline", "frame pipeline runs without error", 1);
        eprintln!("kbound: frame pipeline error: {e}");
    }
    let failed = b.out.iter().filter(|e| !e.pass).count();
    SuiteReport {
        seed,
        environment: Environment::current(),
        tolerances: tols.map().clone(),
        passed: b.out.len() - failed,
        failed,
        pass: failed == 0,
        tests: b.out,
    }
}

pub fn run(ctx: &Ctx, report: Option<&Path>) -> CliResult<Output> {
    let rep = battery(ctx.seed, &ctx.tols);
    let mut text = String::new();
    for e in &rep.tests {
        let v = e.value.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "non-finite".into());
        let t = e.tolerance.map(|t| format!(" < {t:.1e}")).unwrap_or_default();
        let _ = writeln!(text, "{} {:<38} {v}{t}  {}", if e.pass { "PASS" } else { "FAIL" }, e.id, e.statement);
    }
    let _ = writeln!(text, "{} passed, {} failed", rep.passed, rep.failed);
    let js = serde_json::to_value(&rep)?;
    if let Some(p) = report {
        write_file(p, serde_json::to_string_pretty(&js)?.as_bytes())?;
        let _ = writeln!(text, "wrote {}", p.display());
    }
    Ok(Output { json: js, text, pass: rep.pass })
}
