//! K-matrices and their spectral data.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::{c, inv2, LaurentMatrix, LaurentPoly, Mat2, C64};

/// Relative distance under which two roots count as coincident.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Absolute tolerance on |A₀B₁ + A₁B₀|.
pub const SIGN_CHANGE_TOL: f64 = 1e-12;

/// Boundary constants (A, B) of K(λ) = (4A−4Bλ, λ−λ⁻¹; λ−λ⁻¹, 4A−4Bλ⁻¹).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMatrix {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootQuadruple {
    pub varrho: C64,
    pub r: C64,
    pub varrho_inv: C64,
    pub r_inv: C64,
    pub degenerate: bool,
}

impl RootQuadruple {
    pub fn members(&self) -> [C64; 4] {
        [self.varrho, self.r, self.varrho_inv, self.r_inv]
    }

    /// Smallest distance from λ to a member.
    pub fn distance(&self, lam: C64) -> f64 {
        self.members().iter().map(|z| (z - lam).norm()).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KEigenSystem {
    pub mu_minus: LaurentPoly,
    pub mu_plus: LaurentPoly,
    pub v: Vector2<f64>,
    pub v_perp: Vector2<f64>,
    /// Columns v, v⊥.
    pub big_v: Matrix2<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residue {
    pub pole: C64,
    /// Scalar residue of μ∓⁻¹ at the pole.
    pub scalar: f64,
    pub matrix: Mat2,
}

/// Residues of K⁻¹ at ϱ, r, ϱ⁻¹, r⁻¹ in that order.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidueSet {
    pub entries: [Residue; 4],
}

/// K₁⁻¹K₀ = p·𝟙 + q·η with p = p_num/den, q = q_num/den and den = −λ²det K₁.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductDecomposition {
    pub p_num: LaurentPoly,
    pub q_num: LaurentPoly,
    pub den: LaurentPoly,
    pub eta: LaurentMatrix,
}

impl ProductDecomposition {
    pub fn p(&self, lam: C64) -> C64 {
        self.p_num.eval(lam) / self.den.eval(lam)
    }

    pub fn q(&self, lam: C64) -> C64 {
        self.q_num.eval(lam) / self.den.eval(lam)
    }

    pub fn eval(&self, lam: C64) -> Mat2 {
        Mat2::identity() * self.p(lam) + self.eta.eval(lam) * self.q(lam)
    }
}

fn close(x: C64, y: C64) -> bool {
    (x - y).norm() <= DEGENERACY_TOL * 1f64.max(x.norm()).max(y.norm())
}

/// Unit vector with first nonzero component positive.
fn canonical(v: Vector2<f64>) -> Vector2<f64> {
    let u = v / v.norm();
    let lead = if u[0] != 0.0 { u[0] } else { u[1] };
    if lead < 0.0 {
        -u
    } else {
        u
    }
}

impl KMatrix {
    pub fn new(a: f64, b: f64) -> Self {
        KMatrix { a, b }
    }

    pub fn s_a(&self) -> f64 {
        (4.0 * self.a * self.a + 1.0).sqrt()
    }

    pub fn s_b(&self) -> f64 {
        (4.0 * self.b * self.b + 1.0).sqrt()
    }

    pub fn eval(&self, lam: C64) -> Result<Mat2> {
        if lam == C64::new(0.0, 0.0) {
            return Err(Error::Domain("K(λ) is undefined at λ = 0".into()));
        }
        Ok(self.eval_unchecked(lam))
    }

    pub(crate) fn eval_unchecked(&self, lam: C64) -> Mat2 {
        let li = lam.inv();
        let off = lam - li;
        Mat2::new(
            c(4.0 * self.a, 0.0) - lam * (4.0 * self.b),
            off,
            off,
            c(4.0 * self.a, 0.0) - li * (4.0 * self.b),
        )
    }

    /// K as a Laurent matrix with exponents −1..1.
    pub fn to_laurent(&self) -> LaurentMatrix {
        let (a, b) = (self.a, self.b);
        let r = |x: f64| c(x, 0.0);
        LaurentMatrix::raw(
            -1,
            vec![
                Mat2::new(r(0.0), r(-1.0), r(-1.0), r(-4.0 * b)),
                Mat2::new(r(4.0 * a), r(0.0), r(0.0), r(4.0 * a)),
                Mat2::new(r(-4.0 * b), r(1.0), r(1.0), r(0.0)),
            ],
        )
    }

    /// −λ²det K(λ) as an ordinary quartic (exponents 0..4).
    pub fn quartic(&self) -> LaurentPoly {
        let (a, b) = (self.a, self.b);
        LaurentPoly::from_real(
            0,
            &[1.0, 16.0 * a * b, -2.0 * (8.0 * a * a + 8.0 * b * b + 1.0), 16.0 * a * b, 1.0],
        )
    }

    pub fn roots(&self) -> RootQuadruple {
        let (sa, sb) = (self.s_a(), self.s_b());
        let (a2, b2) = (2.0 * self.a, 2.0 * self.b);
        let varrho = c((a2 - sa) / (b2 + sb), 0.0);
        let r = c((a2 + sa) / (b2 + sb), 0.0);
        let varrho_inv = c((a2 + sa) / (b2 - sb), 0.0);
        let r_inv = c((a2 - sa) / (b2 - sb), 0.0);
        let m = [varrho, r, varrho_inv, r_inv];
        let mut degenerate = false;
        for i in 0..4 {
            for j in i + 1..4 {
                degenerate |= close(m[i], m[j]);
            }
        }
        RootQuadruple { varrho, r, varrho_inv, r_inv, degenerate }
    }

    /// Unit kernels (ker K(ϱ) = ker K(r), ker K(ϱ⁻¹) = ker K(r⁻¹)).
    pub fn kernels(&self) -> Result<(Vector2<f64>, Vector2<f64>)> {
        if self.roots().degenerate {
            return Err(Error::DegenerateK);
        }
        let e = self.eigen();
        Ok((e.v, e.v_perp))
    }

    pub fn eigen(&self) -> KEigenSystem {
        let (a, b, sb) = (self.a, self.b, self.s_b());
        let mu_minus = LaurentPoly::from_real(-1, &[-2.0 * b + sb, 4.0 * a, -2.0 * b - sb]);
        let mu_plus = LaurentPoly::from_real(-1, &[-2.0 * b - sb, 4.0 * a, -2.0 * b + sb]);
        let v = canonical(Vector2::new(-sb - 2.0 * b, 1.0));
        let v_perp = canonical(Vector2::new(sb - 2.0 * b, 1.0));
        let big_v = Matrix2::from_columns(&[v, v_perp]);
        KEigenSystem { mu_minus, mu_plus, v, v_perp, big_v }
    }

    /// Closed-form scalar residues of μ₋⁻¹ at ϱ, r and of μ₊⁻¹ at ϱ⁻¹, r⁻¹.
    pub fn scalar_residues(&self) -> [f64; 4] {
        let (sa, sb) = (self.s_a(), self.s_b());
        let t = self.a / sa;
        let (m, p) = (2.0 * self.b - sb, 2.0 * self.b + sb);
        [(0.5 - t) * m, (0.5 + t) * m, (0.5 + t) * p, (0.5 - t) * p]
    }

    pub fn inverse_residues(&self) -> Result<ResidueSet> {
        let roots = self.roots();
        if roots.degenerate {
            return Err(Error::DegenerateK);
        }
        let e = self.eigen();
        let proj = |u: &Vector2<f64>| {
            let m = u * u.transpose();
            Mat2::new(c(m[(0, 0)], 0.0), c(m[(0, 1)], 0.0), c(m[(1, 0)], 0.0), c(m[(1, 1)], 0.0))
        };
        let (pv, pp) = (proj(&e.v), proj(&e.v_perp));
        let s = self.scalar_residues();
        let poles = roots.members();
        let mk = |i: usize, p: &Mat2| Residue { pole: poles[i], scalar: s[i], matrix: p * c(s[i], 0.0) };
        Ok(ResidueSet { entries: [mk(0, &pv), mk(1, &pv), mk(2, &pp), mk(3, &pp)] })
    }
}

pub fn k_eval(k: &KMatrix, lam: C64) -> Result<Mat2> {
    k.eval(lam)
}

pub fn k_roots(k: &KMatrix) -> RootQuadruple {
    k.roots()
}

pub fn k_kernels(k: &KMatrix) -> Result<(Vector2<f64>, Vector2<f64>)> {
    k.kernels()
}

pub fn k_eigen(k: &KMatrix) -> KEigenSystem {
    k.eigen()
}

pub fn k_inverse_residues(k: &KMatrix) -> Result<ResidueSet> {
    k.inverse_residues()
}

pub fn k_commutator(k0: &KMatrix, k1: &KMatrix) -> LaurentMatrix {
    k0.to_laurent().commutator(&k1.to_laurent())
}

pub fn sign_change_holds(k0: &KMatrix, k1: &KMatrix) -> bool {
    (k0.a * k1.b + k1.a * k0.b).abs() <= SIGN_CHANGE_TOL
}

pub fn k_product_decompose(k0: &KMatrix, k1: &KMatrix) -> Result<ProductDecomposition> {
    if !sign_change_holds(k0, k1) {
        return Err(Error::TraceObstruction);
    }
    let (a0, b0, a1, b1) = (k0.a, k0.b, k1.a, k1.b);
    let s = 16.0 * (a0 * a1 + b0 * b1);
    // −λ²(s − (λ−λ⁻¹)²) = λ⁴ − (s+2)λ² + 1
    let p_num = LaurentPoly::from_real(0, &[1.0, 0.0, -(s + 2.0), 0.0, 1.0]);
    // −λ²·(−4i(λ−λ⁻¹)) = 4i(λ³ − λ)
    let q_num = LaurentPoly::new(0, vec![c(0.0, 0.0), c(0.0, -4.0), c(0.0, 0.0), c(0.0, 4.0)]);
    let den = k1.quartic();
    let i = c(0.0, 1.0);
    let da = a1 - a0;
    let db = b1 - b0;
    let d = 4.0 * a0 * b1;
    let z = c(0.0, 0.0);
    let eta = LaurentMatrix::new(
        -1,
        vec![
            Mat2::new(z, i * (-db), z, z),
            Mat2::new(i * d, i * da, i * da, i * (-d)),
            Mat2::new(z, z, i * (-db), z),
        ],
    );
    Ok(ProductDecomposition { p_num, q_num, den, eta })
}

/// K₁⁻¹K₀ evaluated directly.
pub fn ratio_direct(k0: &KMatrix, k1: &KMatrix, lam: C64) -> Option<Mat2> {
    inv2(&k1.eval_unchecked(lam)).map(|k1i| k1i * k0.eval_unchecked(lam))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::UnitCircleGrid;
    use crate::laurent::{adjugate2, det2, norm};
    use proptest::prelude::*;

    fn arb_k() -> impl Strategy<Value = KMatrix> {
        (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b)| KMatrix::new(a, b))
    }

    fn arb_lam() -> impl Strategy<Value = C64> {
        (0.2f64..3.0, 0.0f64..std::f64::consts::TAU).prop_map(|(r, t)| C64::from_polar(r, t))
    }

    #[test]
    fn values_at_plus_minus_one() {
        let k = KMatrix::new(1.0, 2.0);
        assert!(norm(&(k.eval(c(1.0, 0.0)).unwrap() - Mat2::identity() * c(-4.0, 0.0))) < 1e-15);
        assert!(norm(&(k.eval(c(-1.0, 0.0)).unwrap() - Mat2::identity() * c(12.0, 0.0))) < 1e-15);
        let k = KMatrix::new(0.0, 0.0);
        let v = k.eval(c(0.0, 1.0)).unwrap();
        let z = c(0.0, 0.0);
        // λ − λ⁻¹ at λ = i is 2i
        assert!(norm(&(v - Mat2::new(z, c(0.0, 2.0), c(0.0, 2.0), z))) < 1e-15);
        assert!(k.eval(z).is_err());
    }

    #[test]
    fn laurent_form_matches_eval() {
        let k = KMatrix::new(0.7, -1.3);
        let l = k.to_laurent();
        for lam in [c(0.3, 0.4), c(-2.0, 1.0), c(0.0, 1.0)] {
            assert!(norm(&(l.eval(lam) - k.eval(lam).unwrap())) < 1e-14);
        }
        let det = l.det().shift(2).scale(c(-1.0, 0.0));
        assert!(det.dist(&k.quartic()) < 1e-13);
    }

    #[test]
    fn det_at_zero_constants() {
        let l = KMatrix::new(0.0, 0.0).to_laurent();
        let want = LaurentPoly::from_real(-2, &[-1.0, 0.0, 2.0, 0.0, -1.0]);
        assert!(l.det().dist(&want) < 1e-15);
    }

    #[test]
    fn roots_example() {
        let q = KMatrix::new(0.0, 0.75).roots();
        assert!((q.varrho.re + 0.302776).abs() < 1e-6);
        assert!((q.r.re - 0.302776).abs() < 1e-6);
        assert!((q.varrho_inv.re + 3.302776).abs() < 1e-6);
        assert!((q.r_inv.re - 3.302776).abs() < 1e-6);
        assert!(!q.degenerate);
    }

    #[test]
    fn roots_match_companion_eigenvalues() {
        // oracle: eigenvalues of the companion matrix of −λ²det K
        for (a, b) in [(0.0, 0.75), (1.0, 2.0), (-0.4, 0.3), (2.5, -1.0)] {
            let k = KMatrix::new(a, b);
            let q = k.quartic();
            let co: Vec<f64> = q.coeffs().iter().map(|z| z.re).collect();
            let mut m = nalgebra::DMatrix::<f64>::zeros(4, 4);
            for i in 1..4 {
                m[(i, i - 1)] = 1.0;
            }
            for i in 0..4 {
                m[(i, 3)] = -co[i] / co[4];
            }
            let eig = m.complex_eigenvalues();
            let roots = k.roots();
            for z in eig.iter() {
                assert!(roots.distance(*z) < 1e-9, "({a},{b}) {z}");
            }
        }
    }

    #[test]
    fn degenerate_at_zero() {
        let q = KMatrix::new(0.0, 0.0).roots();
        assert!(q.degenerate);
        let m: Vec<f64> = q.members().iter().map(|z| z.re).collect();
        assert_eq!(m, vec![-1.0, 1.0, -1.0, 1.0]);
        assert_eq!(KMatrix::new(0.0, 0.0).kernels(), Err(Error::DegenerateK));
        assert!(KMatrix::new(0.0, 0.0).inverse_residues().is_err());
    }

    #[test]
    fn kernels_examples() {
        let (v, w) = KMatrix::new(0.3, 0.0).kernels().unwrap();
        let h = 0.5f64.sqrt();
        assert!((v - Vector2::new(h, -h)).norm() < 1e-15);
        assert!((w - Vector2::new(h, h)).norm() < 1e-15);
        // A = −1, B = 1 makes K(−1) vanish (ϱ = ϱ⁻¹ = −1), so compare eigenvectors there
        let base = KMatrix::new(0.0, 1.0).kernels().unwrap();
        assert_eq!(KMatrix::new(2.0, 1.0).kernels().unwrap(), base);
        assert!(KMatrix::new(-1.0, 1.0).roots().degenerate);
        let e = KMatrix::new(-1.0, 1.0).eigen();
        assert_eq!((e.v, e.v_perp), base);
        let k = KMatrix::new(2.0, 1.0);
        let q = k.roots();
        let to_c = |u: Vector2<f64>| nalgebra::Vector2::new(c(u[0], 0.0), c(u[1], 0.0));
        for (lam, u) in [(q.varrho, base.0), (q.r, base.0), (q.varrho_inv, base.1), (q.r_inv, base.1)] {
            assert!((k.eval(lam).unwrap() * to_c(u)).norm() < 1e-10);
        }
    }

    #[test]
    fn eigen_examples() {
        let k = KMatrix::new(0.6, 5.0);
        let e = k.eigen();
        let one = c(1.0, 0.0);
        assert!((e.mu_minus.eval(one) - c(4.0 * 0.6 - 20.0, 0.0)).norm() < 1e-13);
        assert!((e.mu_plus.eval(one) - c(4.0 * 0.6 - 20.0, 0.0)).norm() < 1e-13);
        assert_eq!(e.mu_minus.invert(), e.mu_plus);
        assert!(e.v.dot(&e.v_perp).abs() < 1e-15);
        // unnormalized form is exactly orthogonal
        let s = k.s_b();
        assert!(((-s - 10.0) * (s - 10.0) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn residue_closed_form_matches_limit() {
        // (½ − A/s_A)(2B − s_B) = ϱ/(2s_A)
        for (a, b) in [(1.0, 2.0), (-0.3, 0.4), (0.0, 0.75)] {
            let k = KMatrix::new(a, b);
            let rs = k.scalar_residues();
            let q = k.roots();
            assert!((rs[0] - q.varrho.re / (2.0 * k.s_a())).abs() < 1e-13);
            let rr = k.inverse_residues().unwrap();
            let row = rr.entries[0].matrix.row(0);
            let ratio = row[1] / row[0];
            assert!((ratio - c(2.0 * b - k.s_b(), 0.0)).norm() < 1e-12);
        }
    }

    /// Trapezoid contour quadrature of K⁻¹ on a small circle around `z0`.
    fn contour_residue(k: &KMatrix, z0: C64, rad: f64) -> Mat2 {
        let m = 256;
        let mut acc = Mat2::zeros();
        for j in 0..m {
            let t = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            let w = C64::from_polar(rad, t);
            let kinv = inv2(&k.eval(z0 + w).unwrap()).unwrap();
            acc += kinv * w;
        }
        acc / c(m as f64, 0.0)
    }

    #[test]
    fn residues_match_contour_quadrature() {
        for (a, b) in [(1.0, 2.0), (-0.3, 0.4), (0.0, 0.75), (0.5, -1.5)] {
            let k = KMatrix::new(a, b);
            let q = k.roots();
            let m = q.members();
            let rs = k.inverse_residues().unwrap();
            for (i, e) in rs.entries.iter().enumerate() {
                let sep = (0..4).filter(|&j| j != i).map(|j| (m[j] - m[i]).norm()).fold(f64::MAX, f64::min);
                let rad = (0.3 * sep).min(0.3 * m[i].norm());
                let num = contour_residue(&k, e.pole, rad);
                assert!(norm(&(num - e.matrix)) < 1e-8, "({a},{b}) pole {i}");
                // rank one
                assert!(det2(&e.matrix).norm() < 1e-12);
            }
            // kernel swap: ker res at ϱ is ker K(ϱ⁻¹)
            let (v, w) = k.kernels().unwrap();
            let wc = nalgebra::Vector2::new(c(w[0], 0.0), c(w[1], 0.0));
            let vc = nalgebra::Vector2::new(c(v[0], 0.0), c(v[1], 0.0));
            assert!((rs.entries[0].matrix * wc).norm() < 1e-12);
            assert!((rs.entries[1].matrix * wc).norm() < 1e-12);
            assert!((rs.entries[2].matrix * vc).norm() < 1e-12);
            assert!((rs.entries[3].matrix * vc).norm() < 1e-12);
        }
    }

    #[test]
    fn commutator_examples() {
        let z = k_commutator(&KMatrix::new(0.3, 1.0), &KMatrix::new(-2.0, 1.0));
        assert!(z.max_norm() < 1e-14);
        let k0 = KMatrix::new(0.5, 1.5);
        let k1 = KMatrix::new(-1.0, 0.5);
        let cm = k_commutator(&k0, &k1);
        let want = Mat2::new(c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)) * c(-16.0, 0.0);
        assert!(norm(&(cm.eval(c(0.0, 1.0)) - want)) < 1e-12);
        let sw = k_commutator(&k1, &k0);
        assert!((&cm + &sw).max_norm() < 1e-14);
        // closed form 4(λ−λ⁻¹)²(B₀−B₁)(0,−1;1,0)
        for lam in [c(0.3, 1.1), c(-2.0, 0.2)] {
            let p = lam - lam.inv();
            let f = Mat2::new(c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)) * (p * p * 4.0 * (k0.b - k1.b));
            assert!(norm(&(cm.eval(lam) - f)) < 1e-12);
        }
    }

    #[test]
    fn product_decomposition_example() {
        let k0 = KMatrix::new(1.0, 1.0);
        let k1 = KMatrix::new(2.0, -2.0);
        let pd = k_product_decompose(&k0, &k1).unwrap();
        let i = c(0.0, 1.0);
        let z = c(0.0, 0.0);
        let want = LaurentMatrix::new(
            -1,
            vec![
                Mat2::new(z, i * 3.0, z, z),
                Mat2::new(i * -8.0, i, i, i * 8.0),
                Mat2::new(z, z, i * 3.0, z),
            ],
        );
        assert!(pd.eta.dist(&want) < 1e-15);
        assert!(pd.eta.trace().is_zero());
        let g = UnitCircleGrid::new(64).unwrap();
        let roots = k1.roots();
        for lam in g.points() {
            if roots.distance(lam) < 1e-3 {
                continue;
            }
            let direct = ratio_direct(&k0, &k1, lam).unwrap();
            assert!(norm(&(pd.eval(lam) - direct)) < 1e-10);
        }
    }

    #[test]
    fn product_decomposition_self_ratio() {
        let k = KMatrix::new(0.0, 0.8);
        let pd = k_product_decompose(&k, &k).unwrap();
        for lam in UnitCircleGrid::new(64).unwrap().points() {
            if k.roots().distance(lam) < 1e-3 {
                continue;
            }
            assert!((pd.p(lam) - c(1.0, 0.0)).norm() < 1e-10);
            assert!(norm(&(pd.eta.eval(lam) * pd.q(lam))) < 1e-10);
        }
    }

    #[test]
    fn trace_obstruction() {
        let e = k_product_decompose(&KMatrix::new(1.0, 1.0), &KMatrix::new(1.0, 1.0));
        assert_eq!(e, Err(Error::TraceObstruction));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn k_properties(k in arb_k(), lam in arb_lam()) {
            let m = k.eval(lam).unwrap();
            prop_assert!(norm(&(m - m.transpose())) < 1e-12);
            let mc = k.eval(lam.conj()).unwrap().map(|z| z.conj());
            prop_assert!(norm(&(mc - m)) < 1e-12);
            let mi = k.eval(lam.inv()).unwrap();
            prop_assert!(norm(&(mi - adjugate2(&m))) < 1e-12);
        }

        #[test]
        fn det_is_product_of_eigenvalues(k in arb_k(), lam in arb_lam()) {
            let e = k.eigen();
            let d = det2(&k.eval(lam).unwrap());
            let p = e.mu_minus.eval(lam) * e.mu_plus.eval(lam);
            prop_assert!((d - p).norm() <= 1e-12 * (1.0 + d.norm()));
        }

        #[test]
        fn diagonalization(k in arb_k()) {
            let e = k.eigen();
            let vc = e.big_v.map(|x| c(x, 0.0));
            let vi = e.big_v.try_inverse().unwrap().map(|x| c(x, 0.0));
            for lam in UnitCircleGrid::new(16).unwrap().points() {
                let d = Mat2::new(e.mu_minus.eval(lam), c(0.0, 0.0), c(0.0, 0.0), e.mu_plus.eval(lam));
                let m = k.eval(lam).unwrap();
                prop_assert!(norm(&(vc * d * vi - m)) <= 1e-12 * (1.0 + norm(&m)));
            }
        }

        #[test]
        fn roots_invariants(k in arb_k()) {
            let q = k.roots();
            prop_assume!(!q.degenerate);
            prop_assert!((q.varrho * q.varrho_inv - 1.0).norm() < 1e-10);
            prop_assert!((q.r * q.r_inv - 1.0).norm() < 1e-10);
            for z in q.members() {
                prop_assert!(q.distance(z.inv()) < 1e-10 * (1.0 + z.norm()));
                let d = det2(&k.eval(z).unwrap());
                prop_assert!(d.norm() < 1e-10 * (1.0 + z.norm() + z.inv().norm()).powi(2));
            }
            let neg = KMatrix::new(-k.a, -k.b).roots();
            for z in neg.members() {
                prop_assert!(q.distance(z) < 1e-10 * (1.0 + z.norm()));
            }
        }

        #[test]
        fn product_reconstruction(a0 in -2.0f64..2.0, b0 in 0.1f64..2.0, a1 in -2.0f64..2.0) {
            // B₁ fixed by A₀B₁ = −A₁B₀
            prop_assume!(a0.abs() > 0.1);
            let b1 = -a1 * b0 / a0;
            let k0 = KMatrix::new(a0, b0);
            let k1 = KMatrix::new(a1, b1);
            let pd = k_product_decompose(&k0, &k1).unwrap();
            for lam in UnitCircleGrid::new(64).unwrap().points() {
                if pd.den.eval(lam).norm() < 1e-3 {
                    continue;
                }
                let direct = ratio_direct(&k0, &k1, lam).unwrap();
                prop_assert!(norm(&(pd.eval(lam) - direct)) < 1e-10 * (1.0 + norm(&direct)));
            }
        }
    }
}
