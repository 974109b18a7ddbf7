//! Device configuration: a sectioned TOML document with explicit units in
//! key names. Every key has a default, and the defaults are the published
//! design point, so an empty file describes the reference device.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::material::BuiltinMaterial;
use crate::spectra::BandwidthUnit;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnitsSection {
    /// How `*_THz` bandwidths convert to rad/ps.
    pub bandwidth_unit: BandwidthUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialsSection {
    pub core: BuiltinMaterial,
    pub substrate: BuiltinMaterial,
    pub top_cladding_index: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveguideSection {
    pub height_um: f64,
    pub oxide_height_um: f64,
    pub width_sfwm_um: f64,
    pub width_dfg_um: f64,
    /// Common offset added to both widths.
    pub delta_w_um: f64,
    /// Re-optimize both widths at the configured height so the two
    /// processes phasematch at the configured wavelengths under the active
    /// dispersion model. When set, the widths above are ignored.
    pub optimize_widths: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WavelengthsSection {
    pub pump1_um: f64,
    pub pump2_um: f64,
    pub signal_um: f64,
    /// Re-solve pump-1 and signal wavelengths (pump-2 fixed) so both
    /// processes are exactly phasematched before computing spectra.
    pub rephasematch: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SfwmSection {
    #[serde(rename = "sigma1_THz")]
    pub sigma1_thz: f64,
    /// Heralding-arm filter bandwidth; `inf` removes the filter.
    #[serde(rename = "sigma_f_THz")]
    pub sigma_f_thz: f64,
    pub ring_length_um: f64,
    pub reflectivity: f64,
    #[serde(rename = "gamma_fwm_per_mW")]
    pub gamma_fwm_per_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DfgSection {
    #[serde(rename = "L_um")]
    pub length_um: f64,
    #[serde(rename = "sigma2_THz")]
    pub sigma2_thz: f64,
    #[serde(rename = "gamma_dfg_per_mW")]
    pub gamma_dfg_per_mw: f64,
    #[serde(rename = "power1_mW")]
    pub power1_mw: f64,
    #[serde(rename = "power2_mW")]
    pub power2_mw: f64,
    pub nu_rad: f64,
    /// Coupling scale; calibrated against the target below when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(rename = "calibration_power_product_mW2")]
    pub calibration_power_product_mw2: f64,
    pub calibration_angle_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridsSection {
    /// Samples per axis for both joint functions.
    pub points: usize,
    /// JSA signal half-span in units of σ₁.
    pub jsa_signal_half_span_sigma1: f64,
    /// JSA idler half-span in units of σ_f (σ₁-based when unfiltered).
    pub jsa_idler_half_span_sigma_f: f64,
    /// Mapping-function half-span on both axes in units of max(σ₁, σ₂).
    pub mf_half_span_sigma: f64,
    pub mf_quadrature_nodes: usize,
    /// Mapping-function integration half-window in combined-bandwidth units.
    pub mf_window_sigmas: f64,
    pub contour_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    /// Cumulative Schmidt weight retained.
    pub truncation: f64,
    #[serde(rename = "newton_tolerance_per_um")]
    pub newton_tolerance: f64,
    pub newton_max_iterations: usize,
    pub geometry_tolerance_um: f64,
    pub width_step_um: f64,
    pub height_step_um: f64,
    pub height_min_um: f64,
    pub height_max_um: f64,
    pub width_min_um: f64,
    pub width_max_um: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceConfig {
    pub units: UnitsSection,
    pub materials: MaterialsSection,
    pub waveguide: WaveguideSection,
    pub wavelengths: WavelengthsSection,
    pub sfwm: SfwmSection,
    pub dfg: DfgSection,
    pub grids: GridsSection,
    pub solver: SolverSection,
}

impl Default for UnitsSection {
    fn default() -> Self {
        Self {
            bandwidth_unit: BandwidthUnit::Angular,
        }
    }
}

impl Default for MaterialsSection {
    fn default() -> Self {
        Self {
            core: BuiltinMaterial::Si3n4,
            substrate: BuiltinMaterial::Sio2,
            top_cladding_index: 1.0,
        }
    }
}

impl Default for WaveguideSection {
    fn default() -> Self {
        Self {
            height_um: 0.7,
            oxide_height_um: 1.0,
            width_sfwm_um: 0.953,
            width_dfg_um: 1.617,
            delta_w_um: 0.0,
            optimize_widths: true,
        }
    }
}

impl Default for WavelengthsSection {
    fn default() -> Self {
        Self {
            pump1_um: 0.822,
            pump2_um: 1.554,
            signal_um: 1.253,
            rephasematch: true,
        }
    }
}

impl Default for SfwmSection {
    fn default() -> Self {
        Self {
            sigma1_thz: 6.0,
            sigma_f_thz: 1.0,
            ring_length_um: 43.0,
            reflectivity: 0.86,
            gamma_fwm_per_mw: 5.05,
        }
    }
}

impl Default for DfgSection {
    fn default() -> Self {
        Self {
            length_um: 1.0e4,
            sigma2_thz: 0.7,
            gamma_dfg_per_mw: 2.5,
            power1_mw: 2.075,
            power2_mw: 4.0,
            nu_rad: 0.0,
            epsilon: None,
            calibration_power_product_mw2: 8.3,
            calibration_angle_rad: std::f64::consts::FRAC_PI_2,
        }
    }
}

impl Default for GridsSection {
    fn default() -> Self {
        Self {
            points: 256,
            jsa_signal_half_span_sigma1: 5.0,
            jsa_idler_half_span_sigma_f: 5.0,
            mf_half_span_sigma: 5.0,
            mf_quadrature_nodes: 129,
            mf_window_sigmas: 6.0,
            contour_points: 161,
        }
    }
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            truncation: 0.999,
            newton_tolerance: 1e-10,
            newton_max_iterations: 60,
            geometry_tolerance_um: 1e-5,
            width_step_um: 0.002,
            height_step_um: 0.025,
            height_min_um: 0.3,
            height_max_um: 0.9,
            width_min_um: 0.6,
            width_max_um: 2.2,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && !v.is_nan() {
        Ok(())
    } else {
        Err(Error::Config(format!("`{name}` must be positive, got {v}")))
    }
}

impl DeviceConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let w = &self.waveguide;
        positive("waveguide.height_um", w.height_um)?;
        positive("waveguide.oxide_height_um", w.oxide_height_um)?;
        positive("waveguide.width_sfwm_um + delta_w_um", w.width_sfwm_um + w.delta_w_um)?;
        positive("waveguide.width_dfg_um + delta_w_um", w.width_dfg_um + w.delta_w_um)?;
        let l = &self.wavelengths;
        positive("wavelengths.pump1_um", l.pump1_um)?;
        positive("wavelengths.pump2_um", l.pump2_um)?;
        positive("wavelengths.signal_um", l.signal_um)?;
        let s = &self.sfwm;
        positive("sfwm.sigma1_THz", s.sigma1_thz)?;
        positive("sfwm.sigma_f_THz", s.sigma_f_thz)?;
        positive("sfwm.ring_length_um", s.ring_length_um)?;
        if !(s.reflectivity > 0.0 && s.reflectivity < 1.0) {
            return Err(Error::Config(format!("`sfwm.reflectivity` must lie in (0, 1), got {}", s.reflectivity)));
        }
        let d = &self.dfg;
        positive("dfg.L_um", d.length_um)?;
        positive("dfg.sigma2_THz", d.sigma2_thz)?;
        positive("dfg.gamma_dfg_per_mW", d.gamma_dfg_per_mw)?;
        positive("dfg.calibration_power_product_mW2", d.calibration_power_product_mw2)?;
        if !(d.power1_mw >= 0.0 && d.power2_mw >= 0.0) {
            return Err(Error::Config("`dfg.power1_mW` and `dfg.power2_mW` must be non-negative".into()));
        }
        if let Some(e) = d.epsilon {
            positive("dfg.epsilon", e)?;
        }
        let g = &self.grids;
        if g.points < crate::spectra::MIN_GRID_POINTS {
            return Err(Error::Config(format!(
                "`grids.points` must be at least {}, got {}",
                crate::spectra::MIN_GRID_POINTS,
                g.points
            )));
        }
        if g.jsa_signal_half_span_sigma1 < 3.0 || g.mf_half_span_sigma < 3.0 {
            return Err(Error::Config("grid half-spans must cover at least 3 bandwidths".into()));
        }
        positive("grids.jsa_idler_half_span_sigma_f", g.jsa_idler_half_span_sigma_f)?;
        positive("grids.mf_window_sigmas", g.mf_window_sigmas)?;
        if g.mf_quadrature_nodes < 2 {
            return Err(Error::Config("`grids.mf_quadrature_nodes` must be at least 2".into()));
        }
        let v = &self.solver;
        if !(v.truncation > 0.0 && v.truncation <= 1.0) {
            return Err(Error::Config(format!("`solver.truncation` must lie in (0, 1], got {}", v.truncation)));
        }
        positive("solver.newton_tolerance_per_um", v.newton_tolerance)?;
        positive("solver.geometry_tolerance_um", v.geometry_tolerance_um)?;
        positive("solver.width_step_um", v.width_step_um)?;
        positive("solver.height_step_um", v.height_step_um)?;
        if !(v.height_min_um > 0.0 && v.height_max_um >= v.height_min_um) {
            return Err(Error::Config("height search range must satisfy 0 < min ≤ max".into()));
        }
        if !(v.width_min_um > 0.0 && v.width_max_um >= v.width_min_um) {
            return Err(Error::Config("width search range must satisfy 0 < min ≤ max".into()));
        }
        Ok(())
    }

    /// Overrides one key by dotted path, e.g. `dfg.L_um`. The key must
    /// already exist and hold a number (or a boolean for boolean keys).
    pub fn set(&mut self, path: &str, value: f64) -> Result<()> {
        let mut doc = toml::Value::try_from(&*self).map_err(|e| Error::Config(e.to_string()))?;
        let parts: Vec<&str> = path.split('.').collect();
        let (last, sections) = parts.split_last().ok_or_else(|| Error::Config("empty parameter path".into()))?;
        let mut node = &mut doc;
        for s in sections {
            node = node
                .get_mut(*s)
                .ok_or_else(|| Error::Config(format!("unknown configuration section `{s}` in `{path}`")))?;
        }
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{path}` does not name a key")))?;
        let slot = match table.get_mut(*last) {
            Some(slot) => slot,
            // Optional numeric keys are absent from the serialized form.
            None if path == "dfg.epsilon" => {
                table.insert((*last).to_string(), toml::Value::Float(value));
                return self.reload(doc);
            }
            None => return Err(Error::Config(format!("unknown configuration key `{path}`"))),
        };
        *slot = match slot {
            toml::Value::Float(_) => toml::Value::Float(value),
            toml::Value::Integer(_) => {
                if value.fract() != 0.0 || !value.is_finite() {
                    return Err(Error::Config(format!("`{path}` takes an integer, got {value}")));
                }
                toml::Value::Integer(value as i64)
            }
            toml::Value::Boolean(_) => toml::Value::Boolean(value != 0.0),
            _ => return Err(Error::Config(format!("`{path}` is not a numeric key"))),
        };
        self.reload(doc)
    }

    fn reload(&mut self, doc: toml::Value) -> Result<()> {
        let cfg: Self = doc.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        *self = cfg;
        Ok(())
    }

    /// Whether `path` names a settable key.
    pub fn has_key(&self, path: &str) -> bool {
        if path == "dfg.epsilon" {
            return true;
        }
        let Ok(doc) = toml::Value::try_from(self) else {
            return false;
        };
        let mut node = &doc;
        for s in path.split('.') {
            match node.get(s) {
                Some(n) => node = n,
                None => return false,
            }
        }
        matches!(node, toml::Value::Float(_) | toml::Value::Integer(_) | toml::Value::Boolean(_))
    }

    /// SHA-256 of the canonical (key-sorted) JSON form; independent of the
    /// key order of the source file.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("configuration always serializes");
        let canonical = serde_json::to_string(&value).expect("JSON value always serializes");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn bandwidth(&self, thz: f64) -> f64 {
        self.units.bandwidth_unit.to_rad_per_ps(thz)
    }

    pub fn width_sfwm(&self) -> f64 {
        self.waveguide.width_sfwm_um + self.waveguide.delta_w_um
    }

    pub fn width_dfg(&self) -> f64 {
        self.waveguide.width_dfg_um + self.waveguide.delta_w_um
    }
}
