use kbound::circle::UnitCircleGrid;
use kbound::frame::*;
use kbound::kmatrix::KMatrix;
use kbound::laurent::{c, det2, identity, inv2, norm};
use kbound::potentials::{ksym_residual, ksym_sample, random_potential, vacuum, Potential};

fn grid() -> UnitCircleGrid {
    UnitCircleGrid::new(128).unwrap()
}

fn delaunay(k: &KMatrix) -> Potential {
    ksym_sample(1, k, 2).unwrap().normalized().unwrap()
}

#[test]
fn vacuum_is_a_round_cylinder() {
    let dom = DomainGrid::square(1.0, 32).unwrap();
    let ff = frame_field(&vacuum(), dom, grid(), 32).unwrap();
    let imm = sym_bobenko(&ff, c(1.0, 0.0), 0.5).unwrap();
    assert!(imm.reality <= 1e-10);
    let geo = surface_geometry(&imm);
    for j in 1..dom.ny - 1 {
        for i in 1..dom.nx - 1 {
            let k = dom.index(i, j);
            assert!((geo.mean[k].abs() - 0.5).abs() <= 1e-2);
            assert!(geo.gauss[k].abs() <= 1e-8);
        }
    }
    assert!(geo.conformality <= 1e-2);
}

#[test]
fn isospectral_killing_field_and_loop_identity() {
    let xi = random_potential(2, 0.3, 9).unwrap();
    let g = grid();
    let dom = DomainGrid::square(1.0, 6).unwrap();
    let ff = frame_field(&xi, dom, g, 32).unwrap();
    for idx in 0..dom.len() {
        let fr = ff.frame(idx);
        for (j, l) in g.points().iter().enumerate() {
            let x = xi.eval(*l);
            let f = fr.values[j];
            let zeta = inv2(&f).unwrap() * x * f;
            assert!((det2(&zeta) - det2(&x)).norm() <= 1e-9);
            // conj(F_{1/λ̄})ᵗ = F_λ⁻¹ on the circle
            assert!(norm(&(f.adjoint() * f - identity())) <= 1e-8);
        }
    }
}

#[test]
fn delaunay_one_boundary_chain() {
    let k = KMatrix::new(1.0, 2.0);
    let xi = delaunay(&k);
    assert!(ksym_residual(&xi, &k) <= 1e-9);
    let dom = DomainGrid::square(1.0, 32).unwrap();
    let ff = frame_field(&xi, dom, grid(), 32).unwrap();
    let om = metric_extract(&ff, METRIC_CONSTANT).unwrap();
    let rep = ksym_report(&ff, &k).unwrap();
    assert!(rep.phi_sym <= 1e-8);
    assert!(rep.frame_sym <= 1e-7 && rep.b_sym <= 1e-7 && rep.zeta_sym <= 1e-7);
    assert!(rep.diff_kf <= 1e-9);
    assert!(rep.f_identity_reflected <= 1e-9);
    // negative control: a row away from the boundary
    let row = dom.row_of(0.5).unwrap();
    assert!(frame_sym_row(&ff, &k, row) > 1e-2);
    // exact ω_y satisfies the boundary condition
    let r0 = dom.row_of(0.0).unwrap();
    for i in 0..dom.nx {
        let idx = dom.index(i, r0);
        let w = om[idx];
        assert!((omega_y_spectral(&ff, idx) - (k.a * w.exp() + k.b / w.exp())).abs() <= 1e-10);
    }
    // immersion-based ω agrees to O(h²)
    let imm = sym_bobenko(&ff, c(1.0, 0.0), 0.5).unwrap();
    let om2 = omega_from_immersion(&imm);
    for j in 0..dom.ny {
        for i in 1..dom.nx - 1 {
            let q = dom.index(i, j);
            assert!((om2[q] - om[q]).abs() <= 2e-2);
        }
    }
}

#[test]
fn sinh_gordon_and_boundary_converge_at_second_order() {
    let k = KMatrix::new(1.0, 2.0);
    let xi = delaunay(&k);
    let mut sg = vec![];
    let mut br = vec![];
    for n in [32usize, 64] {
        let dom = DomainGrid::square(1.0, n).unwrap();
        let ff = frame_field(&xi, dom, grid(), 32).unwrap();
        let om = metric_extract(&ff, METRIC_CONSTANT).unwrap();
        sg.push(sinh_gordon_residual(&om, &dom));
        br.push(boundary_residual(&om, &dom, &k).unwrap());
    }
    let (rs, rb) = (sg[0] / sg[1], br[0] / br[1]);
    assert!((3.5..=4.5).contains(&rs), "sinh-Gordon ratio {rs}");
    assert!((3.0..=5.0).contains(&rb), "boundary ratio {rb}");
}

#[test]
fn non_symmetric_potential_breaks_boundary() {
    let k = KMatrix::new(1.0, 2.0);
    let xi = random_potential(1, 0.25, 4).unwrap();
    let xi = xi.normalized().unwrap_or(xi);
    assert!(ksym_residual(&xi, &k) > 1e-3);
    let dom = DomainGrid::square(1.0, 16).unwrap();
    let ff = frame_field(&xi, dom, grid(), 32).unwrap();
    assert!(matches!(ksym_report(&ff, &k), Err(kbound::Error::NotKSymmetric)));
    assert!(frame_sym_row(&ff, &k, dom.row_of(0.0).unwrap()) > 1e-2);
}

#[test]
fn associated_family_keeps_the_metric() {
    let xi = delaunay(&KMatrix::new(1.0, 2.0));
    let dom = DomainGrid::square(1.0, 32).unwrap();
    let ff = frame_field(&xi, dom, grid(), 32).unwrap();
    let a = omega_from_immersion(&sym_bobenko(&ff, c(1.0, 0.0), 0.5).unwrap());
    let t = 0.7f64;
    let b = omega_from_immersion(&sym_bobenko(&ff, c(t.cos(), t.sin()), 0.5).unwrap());
    let d = a.iter().zip(&b).filter(|(x, _)| x.is_finite()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(d <= 2e-2, "{d}");
}

#[test]
fn two_boundary_delaunay_and_degenerate_case() {
    let k0 = KMatrix::new(1.0, 2.0);
    let xi = delaunay(&k0);
    let dom = DomainGrid::square(1.0, 16).unwrap();
    let ff = frame_field(&xi, dom, grid(), 32).unwrap();
    let dd = dressing_matrix(&ff, &k0, &k0, 0.0).unwrap();
    assert!(dd.c.values.iter().all(|m| norm(&(m - identity())) <= 1e-8));
    let rep = two_boundary_report(&ff, &k0, &k0, 0.0).unwrap();
    assert!(rep.first_zeta <= 1e-7 && rep.second_zeta <= 1e-7 && rep.dressed_potential <= 1e-7);

    let y1 = 0.5;
    let k1 = matched_second_boundary(&ff, y1, 0.5).unwrap();
    let dd = dressing_matrix(&ff, &k0, &k1, y1).unwrap();
    assert!(dd.z_independence <= 1e-7 && dd.det_residual <= 1e-8 && dd.unitarity <= 1e-8);
    let cm = commutant_decompose(&dd, &xi).unwrap();
    let (_, rec) = dressing_reconstruct(&dd, &xi, &cm);
    assert!(rec <= 1e-7);
    let rep = two_boundary_report(&ff, &k0, &k1, y1).unwrap();
    assert!(rep.second_zeta <= 1e-7 && rep.dressed_phi <= 1e-7 && rep.k1pkf2 <= 1e-7 && rep.equivalent);

    // an unmatched K₁: C depends on x and both second-boundary residuals are large together
    let k1 = KMatrix::new(0.3, -0.7);
    let dd = dressing_matrix(&ff, &k0, &k1, y1).unwrap();
    assert!(dd.z_independence > 1e-2 && dd.det_residual <= 1e-8);
    assert!(matches!(commutant_decompose(&dd, &xi), Err(kbound::Error::NotCommuting)));
    let rep = two_boundary_report(&ff, &k0, &k1, y1).unwrap();
    assert!(rep.second_zeta > 1e-2 && rep.equivalent && rep.k1pkf2 <= 1e-7);
}

#[test]
fn complementary_constants() {
    for (a, b) in [(1.0, 2.0), (0.5, -0.3), (0.0, 1.0)] {
        let k0 = KMatrix::new(a, b);
        let k1 = complementary(&k0);
        let xi = ksym_sample(1, &k0, 2).unwrap();
        let dd = synthetic_commuting(&xi, &k0, &k1, grid());
        let cm = commutant_decompose(&dd, &xi).unwrap();
        assert!(cm.agreement <= 1e-7);
        let chk = complementary_check(&dd, &xi, &cm);
        assert!(chk.product <= 1e-8 && chk.det_m <= 1e-8 && chk.f_formula <= 1e-8 && chk.f_inversion <= 1e-8, "{chk:?}");
        let (_, rec) = dressing_reconstruct(&dd, &xi, &cm);
        assert!(rec <= 1e-7);
        assert!(divisor_check(&k0, &k1).distance <= 1e-6);
    }
}
