//! Bulk material indices and the slab / effective-index mode solvers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Three-term Sellmeier material, `n² = 1 + Σ Bᵢλ²/(λ² − Cᵢ)` with λ in µm.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialModel<T> {
    pub name: String,
    pub sellmeier_b: [T; 3],
    /// Resonance wavelengths squared, µm².
    pub sellmeier_c: [T; 3],
    /// Inclusive validity interval in µm.
    pub valid_range: (T, T),
}

/// Built-in materials, selectable by name in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuiltinMaterial {
    Sio2,
    Si3n4,
}

impl BuiltinMaterial {
    pub fn model<T: Real>(self) -> MaterialModel<T> {
        match self {
            BuiltinMaterial::Sio2 => MaterialModel::silica(),
            BuiltinMaterial::Si3n4 => MaterialModel::silicon_nitride(),
        }
    }
}

impl<T: Real> MaterialModel<T> {
    /// Fused silica (Malitson 1965).
    pub fn silica() -> Self {
        Self {
            name: "SiO2".into(),
            sellmeier_b: [T::lit(0.6961663), T::lit(0.4079426), T::lit(0.8974794)],
            sellmeier_c: [
                T::lit(0.0684043 * 0.0684043),
                T::lit(0.1162414 * 0.1162414),
                T::lit(9.896161 * 9.896161),
            ],
            valid_range: (T::lit(0.21), T::lit(6.7)),
        }
    }

    /// Stoichiometric LPCVD silicon nitride (Luke et al. 2015).
    pub fn silicon_nitride() -> Self {
        Self {
            name: "Si3N4".into(),
            sellmeier_b: [T::lit(3.0249), T::lit(40314.0), T::zero()],
            sellmeier_c: [T::lit(0.1353406 * 0.1353406), T::lit(1239.842 * 1239.842), T::zero()],
            valid_range: (T::lit(0.31), T::lit(5.504)),
        }
    }

    pub fn index(&self, wavelength_um: T) -> Result<T> {
        let (lo, hi) = self.valid_range;
        if !(wavelength_um >= lo && wavelength_um <= hi) {
            return Err(Error::Domain {
                material: self.name.clone(),
                wavelength_um: wavelength_um.as_f64(),
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            });
        }
        let l2 = wavelength_um * wavelength_um;
        let mut n2 = T::one();
        for (b, c) in self.sellmeier_b.iter().zip(&self.sellmeier_c) {
            if *b != T::zero() {
                n2 += *b * l2 / (l2 - *c);
            }
        }
        Ok(n2.sqrt())
    }
}

/// Free-function form of [`MaterialModel::index`].
pub fn sellmeier_index<T: Real>(material: &MaterialModel<T>, wavelength_um: T) -> Result<T> {
    material.index(wavelength_um)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    /// Electric field parallel to the slab interfaces.
    Te,
    /// Electric field normal to the slab interfaces.
    Tm,
}

/// Fundamental-mode effective index of a three-layer slab, or `None` below cutoff.
///
/// The film of index `film` and thickness `thickness_um` sits between half
/// spaces `lower` and `upper`.
pub fn slab_effective_index<T: Real>(
    film: T,
    lower: T,
    upper: T,
    thickness_um: T,
    wavelength_um: T,
    pol: Polarization,
) -> Option<T> {
    let clad = lower.max(upper);
    if !(film > clad) || !(thickness_um > T::zero()) {
        return None;
    }
    let k0 = T::TAU() / wavelength_um;
    let (r_lower, r_upper) = match pol {
        Polarization::Te => (T::one(), T::one()),
        Polarization::Tm => ((film / lower).powi(2), (film / upper).powi(2)),
    };
    // Transverse resonance; strictly decreasing in n on (clad, film).
    let residual = |n: T| -> T {
        let kappa = k0 * (film * film - n * n).max(T::zero()).sqrt();
        let g_lower = k0 * (n * n - lower * lower).max(T::zero()).sqrt();
        let g_upper = k0 * (n * n - upper * upper).max(T::zero()).sqrt();
        kappa * thickness_um - (r_lower * g_lower).atan2(kappa) - (r_upper * g_upper).atan2(kappa)
    };

    let mut lo = clad;
    let mut hi = film;
    let f_lo = residual(lo);
    if !(f_lo > T::zero()) {
        return None;
    }
    // Bisection to full precision; the residual is cheap and smooth.
    for _ in 0..200 {
        let mid = lo + (hi - lo) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if residual(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let n = lo + (hi - lo) * T::lit(0.5);
    if n > clad {
        Some(n)
    } else {
        None
    }
}

/// Rectangular strip core on a buried-oxide layer, air above and beside.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveguideGeometry<T> {
    pub width_um: T,
    pub height_um: T,
    /// Buried oxide thickness. The oxide is treated as semi-infinite by the
    /// effective-index solver; the value is kept for tabulated models and reports.
    pub oxide_height_um: T,
    pub core: MaterialModel<T>,
    pub substrate: MaterialModel<T>,
    pub top_cladding_index: T,
}

impl<T: Real> WaveguideGeometry<T> {
    pub fn new(
        width_um: T,
        height_um: T,
        oxide_height_um: T,
        core: MaterialModel<T>,
        substrate: MaterialModel<T>,
        top_cladding_index: T,
    ) -> Result<Self> {
        let g = Self {
            width_um,
            height_um,
            oxide_height_um,
            core,
            substrate,
            top_cladding_index,
        };
        g.validate()?;
        Ok(g)
    }

    /// Silicon nitride on silica with an air top cladding.
    pub fn silicon_nitride_strip(width_um: T, height_um: T, oxide_height_um: T) -> Result<Self> {
        Self::new(
            width_um,
            height_um,
            oxide_height_um,
            MaterialModel::silicon_nitride(),
            MaterialModel::silica(),
            T::one(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("width", self.width_um),
            ("height", self.height_um),
            ("oxide height", self.oxide_height_um),
        ] {
            if !(v > T::zero()) {
                return Err(Error::Config(format!("waveguide {name} must be positive, got {v}")));
            }
        }
        if !(self.top_cladding_index >= T::one()) {
            return Err(Error::Config("top cladding index must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_width(&self, width_um: T) -> Self {
        Self {
            width_um,
            ..self.clone()
        }
    }

    pub fn with_height(&self, height_um: T) -> Self {
        Self {
            height_um,
            ..self.clone()
        }
    }

    fn cutoff(&self, wavelength_um: T) -> Error {
        Error::Cutoff {
            width_um: self.width_um.as_f64(),
            height_um: self.height_um.as_f64(),
            wavelength_um: wavelength_um.as_f64(),
        }
    }

    /// Core and substrate indices at a wavelength, checking the index contrast.
    pub fn layer_indices(&self, wavelength_um: T) -> Result<(T, T)> {
        let n_core = self.core.index(wavelength_um)?;
        let n_sub = self.substrate.index(wavelength_um)?;
        if !(n_core > n_sub && n_core > self.top_cladding_index) {
            return Err(Error::Config(format!(
                "core index {n_core} does not exceed the cladding indices at {wavelength_um} µm"
            )));
        }
        Ok((n_core, n_sub))
    }

    /// Fundamental quasi-TE effective index by the two-step effective-index method.
    ///
    /// The vertical slab (air / core / oxide) is solved for TE, then the
    /// lateral slab of that index between air walls is solved for TM, which
    /// is the polarization the horizontal quasi-TE field sees at the sidewalls.
    pub fn eim_effective_index(&self, wavelength_um: T) -> Result<T> {
        let (n_core, n_sub) = self.layer_indices(wavelength_um)?;
        let air = self.top_cladding_index;
        let n_vertical = slab_effective_index(n_core, n_sub, air, self.height_um, wavelength_um, Polarization::Te)
            .ok_or_else(|| self.cutoff(wavelength_um))?;
        let n_eff = slab_effective_index(n_vertical, air, air, self.width_um, wavelength_um, Polarization::Tm)
            .ok_or_else(|| self.cutoff(wavelength_um))?;
        // Below the oxide index the mode leaks into the substrate.
        if !(n_eff > n_sub && n_eff < n_core) {
            return Err(self.cutoff(wavelength_um));
        }
        Ok(n_eff)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_indices() {
        let silica = MaterialModel::<f64>::silica();
        let nitride = MaterialModel::<f64>::silicon_nitride();
        // Reference values evaluated independently from the published coefficients.
        assert!((silica.index(1.553).unwrap() - 1.444).abs() < 5e-4);
        assert!((nitride.index(1.553).unwrap() - 1.996).abs() < 5e-4);
        for m in [&silica, &nitride] {
            assert!(m.index(0.62).unwrap() > m.index(1.55).unwrap());
        }
    }

    #[test]
    fn out_of_range_is_rejected() {
        let nitride = MaterialModel::<f64>::silicon_nitride();
        let err = nitride.index(0.2).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("Si3N4") && msg.contains("0.31"), "{msg}");
    }

    #[test]
    fn single_precision_material() {
        let n = MaterialModel::<f32>::silicon_nitride().index(1.553).unwrap();
        assert!((n - 1.996).abs() < 1e-3);
    }

    #[test]
    fn symmetric_slab_te_matches_closed_form_dispersion() {
        // Symmetric slab: tan(κd/2) = γ/κ for the fundamental TE mode.
        let (nf, nc, d, lam) = (2.0_f64, 1.45, 0.7, 1.25);
        let n = slab_effective_index(nf, nc, nc, d, lam, Polarization::Te).unwrap();
        let k0 = std::f64::consts::TAU / lam;
        let kappa = k0 * (nf * nf - n * n).sqrt();
        let gamma = k0 * (n * n - nc * nc).sqrt();
        assert!(((kappa * d / 2.0).tan() - gamma / kappa).abs() < 1e-9);
    }

    #[test]
    fn tm_index_is_below_te() {
        let te = slab_effective_index(2.0_f64, 1.0, 1.0, 0.8, 1.3, Polarization::Te).unwrap();
        let tm = slab_effective_index(2.0_f64, 1.0, 1.0, 0.8, 1.3, Polarization::Tm).unwrap();
        assert!(tm < te);
    }

    #[test]
    fn thin_asymmetric_slab_is_cut_off() {
        assert!(slab_effective_index(2.0_f64, 1.9, 1.0, 0.01, 1.5, Polarization::Te).is_none());
    }

    #[test]
    fn guidance_bounds_and_cutoff() {
        let g = WaveguideGeometry::<f64>::silicon_nitride_strip(1.617, 0.7, 1.0).unwrap();
        for lam in [0.6, 0.8, 1.2, 1.6] {
            let n = g.eim_effective_index(lam).unwrap();
            let (n_core, n_sub) = g.layer_indices(lam).unwrap();
            assert!(n_sub < n && n < n_core);
        }
        let tiny = WaveguideGeometry::<f64>::silicon_nitride_strip(0.1, 0.1, 1.0).unwrap();
        assert!(tiny.eim_effective_index(1.55).unwrap_err().is_cutoff());
    }

    #[test]
    fn geometry_validation() {
        assert!(WaveguideGeometry::<f64>::silicon_nitride_strip(0.0, 0.7, 1.0).is_err());
        assert!(WaveguideGeometry::<f64>::silicon_nitride_strip(1.0, 0.7, -1.0).is_err());
    }
}
