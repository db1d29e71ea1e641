//! Named tolerances. Built-in defaults match the shipped `tolerances.json`; a
//! `--tol-file` overrides any subset of keys.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{CliError, CliResult};
use crate::io::read_to_string;

/// (key, default) pairs. Suite tests are keyed by their id, command checks by `surface.*`.
pub const DEFAULTS: &[(&str, f64)] = &[
    ("laurent.det_adjugate", 1e-12),
    ("laurent.star_involution", 1e-14),
    ("laurent.fourier_roundtrip", 1e-12),
    ("kmatrix.symmetry", 1e-12),
    ("kmatrix.values_at_unit", 1e-12),
    ("kmatrix.roots_companion", 1e-10),
    ("kmatrix.kernel_orthogonality", 1e-12),
    ("kmatrix.kernel_a_independence", 1e-12),
    ("kmatrix.diagonalization", 1e-12),
    ("kmatrix.residues_contour", 1e-8),
    ("kmatrix.kernel_swap", 1e-12),
    ("kmatrix.product_decomposition", 1e-10),
    ("kmatrix.double_ksym_division", 1e-9),
    ("potentials.ksym_sample", 1e-9),
    ("potentials.structural_identities", 1e-9),
    ("potentials.offdiag_factorization", 1e-12),
    ("spectral.nu_symmetry", 1e-11),
    ("spectral.circle_reality", 1e-12),
    ("frame.expm_inverse", 1e-12),
    ("frame.iwasawa_residuals", 1e-8),
    ("frame.iwasawa_oracle", 1e-8),
    ("frame.calibration", 1e-6),
    ("frame.vacuum_omega", 1e-6),
    ("frame.vacuum_mean_curvature", 1e-3),
    ("frame.immersion_reality", 1e-10),
    ("frame.isospectrality", 1e-9),
    ("frame.unitarity", 1e-7),
    ("frame.phi_sym", 1e-8),
    ("frame.frame_sym", 1e-7),
    ("frame.b_sym", 1e-7),
    ("frame.zeta_sym", 1e-7),
    ("frame.differentiated_frame_sym", 1e-9),
    ("frame.f_identity_reflected", 1e-7),
    ("frame.boundary_spectral", 1e-10),
    ("frame.sinh_gordon_order", 0.5),
    ("frame.boundary_order", 1.0),
    ("frame.negative_control", 1.0),
    ("frame.lemma_identity", 1e-12),
    ("frame.u_reality", 1e-14),
    ("twoboundary.degenerate_identity", 1e-8),
    ("twoboundary.det_unitarity", 1e-8),
    ("twoboundary.z_independence", 1e-7),
    ("twoboundary.k1pkf2", 1e-7),
    ("twoboundary.commutator", 1e-7),
    ("twoboundary.complementary_product", 1e-8),
    ("twoboundary.f_inversion", 1e-8),
    ("twoboundary.divisors", 1e-6),
    ("potential.ksym", 1e-9),
    ("potential.identities", 1e-9),
    ("surface.iwasawa", 1e-8),
    ("surface.reality", 1e-10),
    ("surface.mean_curvature", 1e-3),
    ("surface.sinh_gordon", 5e-2),
    ("surface.ksym", 1e-9),
    ("surface.boundary_y0", 1e-4),
    ("surface.boundary_y1", 1e-4),
    ("surface.phi_sym", 1e-8),
    ("surface.frame_sym", 1e-7),
    ("surface.b_sym", 1e-7),
    ("surface.zeta_sym", 1e-7),
    ("surface.family_sym", 1e-6),
    ("surface.z_independence", 1e-7),
    ("surface.det_unitarity", 1e-8),
];

#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances(BTreeMap<String, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances(DEFAULTS.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }
}

impl Tolerances {
    /// Defaults overlaid with the keys of a JSON object. Unknown keys and
    /// negative or non-finite values are configuration errors.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let over: BTreeMap<String, f64> = serde_json::from_str(text)?;
        let mut t = Tolerances::default();
        for (k, v) in over {
            if !t.0.contains_key(&k) {
                return Err(CliError::usage(format!("unknown tolerance key {k:?}")));
            }
            if !(v.is_finite() && v >= 0.0) {
                return Err(CliError::usage(format!("tolerance {k} must be finite and ≥ 0, got {v}")));
            }
            t.0.insert(k, v);
        }
        Ok(t)
    }

    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Tolerances::default()),
            Some(p) => Tolerances::from_json(&read_to_string(p)?),
        }
    }

    pub fn get(&self, key: &str) -> f64 {
        *self.0.get(key).unwrap_or_else(|| panic!("no tolerance named {key}"))
    }

    pub fn map(&self) -> &BTreeMap<String, f64> {
        &self.0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.0).expect("map of floats serializes")
    }
}
