//! The staged device evaluation: geometry → re-phasematching → joint
//! spectra → Schmidt decompositions → gate.

use std::sync::Arc;

use crate::config::DeviceConfig;
use crate::dispersion::{DispersionModel, NeffTable};
use crate::error::{Error, Result};
use crate::gate::{
    calibrate_epsilon, evolve_heralded, evolve_pure, min_power_product, GateParameters, HeraldedOutput, PureInput,
    QubitOutput,
};
use crate::material::WaveguideGeometry;
use crate::phasematch::{
    delta_k_dfg, delta_k_sfwm, minimize_geometry, objective, rephasematch, AxisRange, DesignWavelengths,
    GeometryOptimum, GeometrySearchSpace, NewtonOptions,
};
use crate::schmidt::{purity, schmidt_decompose, schmidt_number, Purity, SchmidtDecomposition};
use crate::spectra::{
    dfg_mapping_function, sfwm_jsa, Axis, CavitySpec, FilterSpec, JointAmplitude, MappingQuadrature, PumpSpec,
    SpectralGrid,
};

/// Dispersion source shared by every evaluation: the built-in
/// effective-index solver or an imported table.
#[derive(Debug, Clone, Default)]
pub struct DispersionChoice {
    pub table: Option<Arc<NeffTable<f64>>>,
}

impl DispersionChoice {
    pub fn effective_index() -> Self {
        Self { table: None }
    }

    pub fn tabulated(table: NeffTable<f64>) -> Self {
        Self {
            table: Some(Arc::new(table)),
        }
    }

    pub fn model(&self, geometry: WaveguideGeometry<f64>) -> DispersionModel<f64> {
        match &self.table {
            Some(t) => DispersionModel::tabulated(Arc::clone(t), geometry),
            None => DispersionModel::effective_index_method(geometry),
        }
    }

    pub fn label(&self) -> &'static str {
        if self.table.is_some() {
            "tabulated"
        } else {
            "effective-index"
        }
    }
}

/// Cross-section of one waveguide from the configuration.
pub fn geometry(cfg: &DeviceConfig, width_um: f64) -> Result<WaveguideGeometry<f64>> {
    WaveguideGeometry::new(
        width_um,
        cfg.waveguide.height_um,
        cfg.waveguide.oxide_height_um,
        cfg.materials.core.model(),
        cfg.materials.substrate.model(),
        cfg.materials.top_cladding_index,
    )
}

pub fn configured_wavelengths(cfg: &DeviceConfig) -> DesignWavelengths<f64> {
    DesignWavelengths {
        pump1_um: cfg.wavelengths.pump1_um,
        pump2_um: cfg.wavelengths.pump2_um,
        signal_um: cfg.wavelengths.signal_um,
    }
}

/// Geometry search space from the solver section, at the configured height.
pub fn search_space(cfg: &DeviceConfig, fixed_height: bool) -> GeometrySearchSpace<f64> {
    let s = &cfg.solver;
    let widths = AxisRange::new(s.width_min_um, s.width_max_um, s.width_step_um);
    GeometrySearchSpace {
        height: if fixed_height {
            AxisRange::fixed(cfg.waveguide.height_um)
        } else {
            AxisRange::new(s.height_min_um, s.height_max_um, s.height_step_um)
        },
        width_sfwm: widths,
        width_dfg: widths,
        tolerance: s.geometry_tolerance_um,
    }
}

/// The two cross-sections in use, after any width optimization and offset.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedGeometry {
    pub height_um: f64,
    pub width_sfwm_um: f64,
    pub width_dfg_um: f64,
    /// Set when the widths came from the geometry search.
    pub search: Option<GeometryOptimum<f64>>,
}

impl ResolvedGeometry {
    pub fn models(&self, cfg: &DeviceConfig, dispersion: &DispersionChoice) -> Result<(DispersionModel<f64>, DispersionModel<f64>)> {
        let g = geometry(cfg, self.width_sfwm_um)?.with_height(self.height_um);
        Ok((dispersion.model(g.clone()), dispersion.model(g.with_width(self.width_dfg_um))))
    }
}

/// Geometry stage: either the configured widths or the widths minimizing
/// the joint phase mismatch at the configured height; the common offset
/// `delta_w_um` is applied afterwards.
pub fn resolve_geometry(cfg: &DeviceConfig, dispersion: &DispersionChoice) -> Result<ResolvedGeometry> {
    let run = || -> Result<ResolvedGeometry> {
        let dw = cfg.waveguide.delta_w_um;
        if !cfg.waveguide.optimize_widths {
            return Ok(ResolvedGeometry {
                height_um: cfg.waveguide.height_um,
                width_sfwm_um: cfg.width_sfwm(),
                width_dfg_um: cfg.width_dfg(),
                search: None,
            });
        }
        let template = dispersion.model(geometry(cfg, cfg.waveguide.width_sfwm_um)?);
        let opt = minimize_geometry(&template, &template, &search_space(cfg, true), &configured_wavelengths(cfg))?;
        Ok(ResolvedGeometry {
            height_um: opt.height_um,
            width_sfwm_um: opt.width_sfwm_um + dw,
            width_dfg_um: opt.width_dfg_um + dw,
            search: Some(opt),
        })
    };
    run().map_err(|e| e.in_stage("geometry"))
}

/// Everything computed for one operating point.
#[derive(Debug, Clone)]
pub struct PointEvaluation {
    pub geometry: ResolvedGeometry,
    pub wavelengths: DesignWavelengths<f64>,
    pub rephase_iterations: usize,
    pub delta_k_sfwm: f64,
    pub delta_k_dfg: f64,
    /// Joint objective at the configured (not re-solved) wavelengths.
    pub objective_at_configured: f64,
    pub jsa: JointAmplitude<f64>,
    pub mf: JointAmplitude<f64>,
    pub jsa_modes: SchmidtDecomposition<f64>,
    pub mf_modes: SchmidtDecomposition<f64>,
    pub purity: Purity<f64>,
    pub schmidt_number: f64,
    pub gate: GateParameters<f64>,
    pub heralded: HeraldedOutput<f64>,
    /// The gate acting on the leading heralded mode as a pure input.
    pub pure: QubitOutput<f64>,
    pub min_power_product: f64,
}

impl PointEvaluation {
    pub fn fidelity(&self) -> f64 {
        self.heralded.fidelity
    }

    pub fn epsilon(&self) -> f64 {
        self.gate.epsilon.unwrap_or(f64::NAN)
    }
}

/// Gate parameters from the configuration, without `ε`.
pub fn gate_parameters(cfg: &DeviceConfig) -> GateParameters<f64> {
    GateParameters {
        length_um: cfg.dfg.length_um,
        gamma: cfg.dfg.gamma_dfg_per_mw,
        power1_mw: cfg.dfg.power1_mw,
        power2_mw: cfg.dfg.power2_mw,
        sigma1: cfg.bandwidth(cfg.sfwm.sigma1_thz),
        sigma2: cfg.bandwidth(cfg.dfg.sigma2_thz),
        nu: cfg.dfg.nu_rad,
        epsilon: cfg.dfg.epsilon,
    }
}

/// Signal axis shared by the joint spectrum and the mapping function, so
/// their modes can be overlapped directly. Its span covers both pumps.
pub fn signal_axis(cfg: &DeviceConfig, signal_omega: f64) -> Axis<f64> {
    let s1 = cfg.bandwidth(cfg.sfwm.sigma1_thz);
    let s2 = cfg.bandwidth(cfg.dfg.sigma2_thz);
    let g = &cfg.grids;
    let half = (g.jsa_signal_half_span_sigma1 * s1).max(g.mf_half_span_sigma * s1.max(s2));
    Axis::new(signal_omega, half, g.points)
}

/// Heralding joint spectral amplitude at the given central wavelengths.
pub fn sfwm_joint(cfg: &DeviceConfig, wl: &DesignWavelengths<f64>, model: &DispersionModel<f64>) -> Result<JointAmplitude<f64>> {
    let (w1, _, ws) = wl.omegas();
    let sf = cfg.bandwidth(cfg.sfwm.sigma_f_thz);
    let signal = signal_axis(cfg, ws);
    let idler0 = 2.0 * w1 - ws;
    let idler_half = if sf.is_finite() {
        cfg.grids.jsa_idler_half_span_sigma_f * sf
    } else {
        signal.half_span
    };
    let grid = SpectralGrid::new(signal, Axis::new(idler0, idler_half, cfg.grids.points))?;
    let pump1 = PumpSpec::new(w1, cfg.bandwidth(cfg.sfwm.sigma1_thz), cfg.dfg.power1_mw)?;
    let cavity = CavitySpec::new(cfg.sfwm.ring_length_um, cfg.sfwm.reflectivity)?.tuned_to(idler0);
    let filter = if sf.is_finite() {
        FilterSpec::new(idler0, sf)?
    } else {
        FilterSpec::open(idler0)
    };
    sfwm_jsa(&grid, &pump1, &cavity, &filter, model)
}

/// Frequency-conversion mapping function at the given central wavelengths.
pub fn dfg_joint(cfg: &DeviceConfig, wl: &DesignWavelengths<f64>, model: &DispersionModel<f64>) -> Result<JointAmplitude<f64>> {
    let (w1, w2, ws) = wl.omegas();
    let s1 = cfg.bandwidth(cfg.sfwm.sigma1_thz);
    let s2 = cfg.bandwidth(cfg.dfg.sigma2_thz);
    let g = &cfg.grids;
    let grid = SpectralGrid::new(
        signal_axis(cfg, ws),
        Axis::new(w1 - w2 + ws, g.mf_half_span_sigma * s1.max(s2), g.points),
    )?;
    let pump1 = PumpSpec::new(w1, s1, cfg.dfg.power1_mw)?;
    let pump2 = PumpSpec::new(w2, s2, cfg.dfg.power2_mw)?;
    let quad = MappingQuadrature {
        nodes: g.mf_quadrature_nodes,
        half_width_sigmas: g.mf_window_sigmas,
    };
    dfg_mapping_function(&grid, &pump1, &pump2, cfg.dfg.length_um, model, quad)
}

/// Both joint functions at the given central wavelengths.
pub fn joint_functions(
    cfg: &DeviceConfig,
    wl: &DesignWavelengths<f64>,
    sfwm: &DispersionModel<f64>,
    dfg: &DispersionModel<f64>,
) -> Result<(JointAmplitude<f64>, JointAmplitude<f64>)> {
    Ok((sfwm_joint(cfg, wl, sfwm)?, dfg_joint(cfg, wl, dfg)?))
}

/// Re-phasematching stage: the central wavelengths at which both
/// processes are phasematched (or the configured ones when disabled),
/// with the Newton iteration count.
///
/// `seed` overrides the configured wavelengths as the starting point of the
/// solve (used to continue along a sweep).
pub fn solve_wavelengths(
    cfg: &DeviceConfig,
    dispersion: &DispersionChoice,
    geometry: &ResolvedGeometry,
    seed: Option<DesignWavelengths<f64>>,
) -> Result<(DesignWavelengths<f64>, usize)> {
    let (sfwm, dfg) = geometry.models(cfg, dispersion).map_err(|e| e.in_stage("geometry"))?;
    let configured = configured_wavelengths(cfg);
    if !cfg.wavelengths.rephasematch {
        return Ok((configured, 0));
    }
    let start = seed.unwrap_or(configured);
    let opts = NewtonOptions {
        tolerance: cfg.solver.newton_tolerance,
        max_iterations: cfg.solver.newton_max_iterations,
        ..NewtonOptions::default()
    };
    let r = rephasematch(&sfwm, &dfg, &start, opts)
        .or_else(|e| {
            // A continuation seed can land in the wrong basin; retry from the
            // configured wavelengths before giving up.
            if seed.is_some() {
                rephasematch(&sfwm, &dfg, &configured, opts)
            } else {
                Err(e)
            }
        })
        .map_err(|e| e.in_stage("rephasematch"))?;
    Ok((r.wavelengths, r.iterations))
}

fn truncated_modes(cfg: &DeviceConfig, joint: &JointAmplitude<f64>) -> Result<SchmidtDecomposition<f64>> {
    schmidt_decompose(joint, cfg.solver.truncation).map_err(|e| e.in_stage("schmidt"))
}

/// `ε` calibrated at the given point: the value for which the configured
/// power product yields the configured fundamental-mode coupling angle.
pub fn calibrated_epsilon(cfg: &DeviceConfig, dispersion: &DispersionChoice, geometry: &ResolvedGeometry) -> Result<f64> {
    let (wl, _) = solve_wavelengths(cfg, dispersion, geometry, None)?;
    let (_, dfg) = geometry.models(cfg, dispersion).map_err(|e| e.in_stage("geometry"))?;
    let mf = dfg_joint(cfg, &wl, &dfg).map_err(|e| e.in_stage("spectra"))?;
    let modes = truncated_modes(cfg, &mf)?;
    let gate = GateParameters {
        epsilon: None,
        ..gate_parameters(cfg)
    };
    calibrate_epsilon(
        modes.coefficients[0],
        &gate,
        cfg.dfg.calibration_power_product_mw2,
        cfg.dfg.calibration_angle_rad,
    )
    .map_err(|e| e.in_stage("gate"))
}

/// Every stage after re-phasematching, at fixed central wavelengths. When
/// the configuration carries no `ε`, it is calibrated at this point.
pub fn evaluate_at(
    cfg: &DeviceConfig,
    dispersion: &DispersionChoice,
    geometry: &ResolvedGeometry,
    wavelengths: DesignWavelengths<f64>,
    rephase_iterations: usize,
) -> Result<PointEvaluation> {
    let (sfwm, dfg) = geometry.models(cfg, dispersion).map_err(|e| e.in_stage("geometry"))?;
    let objective_at_configured = objective(&sfwm, &dfg, &configured_wavelengths(cfg));
    let (w1, w2, ws) = wavelengths.omegas();
    let mismatch = || -> Result<(f64, f64)> {
        Ok((delta_k_sfwm(&sfwm, w1, ws)?.delta_k, delta_k_dfg(&dfg, w1, w2, ws)?.delta_k))
    };
    let (dk_s, dk_d) = mismatch().map_err(|e| e.in_stage("rephasematch"))?;

    let (jsa, mf) = joint_functions(cfg, &wavelengths, &sfwm, &dfg).map_err(|e| e.in_stage("spectra"))?;
    let jsa_modes = truncated_modes(cfg, &jsa)?;
    let mf_modes = truncated_modes(cfg, &mf)?;
    let purity = purity(&jsa_modes);
    let k = schmidt_number(&mf_modes);

    let run_gate = || -> Result<(GateParameters<f64>, HeraldedOutput<f64>, QubitOutput<f64>, f64)> {
        let mut gate = gate_parameters(cfg);
        if gate.epsilon.is_none() {
            gate.epsilon = Some(calibrate_epsilon(
                mf_modes.coefficients[0],
                &gate,
                cfg.dfg.calibration_power_product_mw2,
                cfg.dfg.calibration_angle_rad,
            )?);
        }
        let heralded = evolve_heralded(&jsa_modes, &mf_modes, &gate)?;
        let input = PureInput::normalized("heralded fundamental", jsa_modes.axis_a, jsa_modes.modes_a[0].clone())?;
        let pure = evolve_pure(&input, &mf_modes, &gate)?;
        let p_min = min_power_product(mf_modes.coefficients[0], &gate)?;
        Ok((gate, heralded, pure, p_min))
    };
    let (gate, heralded, pure, min_power_product) = run_gate().map_err(|e| e.in_stage("gate"))?;

    Ok(PointEvaluation {
        geometry: geometry.clone(),
        wavelengths,
        rephase_iterations,
        delta_k_sfwm: dk_s,
        delta_k_dfg: dk_d,
        objective_at_configured,
        jsa,
        mf,
        jsa_modes,
        mf_modes,
        purity,
        schmidt_number: k,
        gate,
        heralded,
        pure,
        min_power_product,
    })
}

/// Runs every stage after geometry for one operating point.
pub fn evaluate_point(
    cfg: &DeviceConfig,
    dispersion: &DispersionChoice,
    geometry: &ResolvedGeometry,
    seed: Option<DesignWavelengths<f64>>,
) -> Result<PointEvaluation> {
    let (wl, iterations) = solve_wavelengths(cfg, dispersion, geometry, seed)?;
    evaluate_at(cfg, dispersion, geometry, wl, iterations)
}

/// Geometry resolution followed by the full point evaluation.
pub fn evaluate(cfg: &DeviceConfig, dispersion: &DispersionChoice) -> Result<PointEvaluation> {
    let g = resolve_geometry(cfg, dispersion)?;
    evaluate_point(cfg, dispersion, &g, None)
}

/// Classification of a failed evaluation for sweep tables.
pub fn failure_flag(err: &Error) -> &'static str {
    match err.root() {
        Error::NoRoot(_) => "no-root",
        _ => "cutoff",
    }
}
