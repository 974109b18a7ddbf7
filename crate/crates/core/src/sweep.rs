//! Parameter sweeps over the device pipeline.
//!
//! A sweep runs in two phases. Central wavelengths are re-solved point by
//! point in grid order, each solve seeded from the previous point, so the
//! continuation path is fixed. The expensive spectral stages then run in
//! parallel and are gathered back by grid index. Tables are therefore
//! byte-identical for any thread count.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::DeviceConfig;
use crate::error::{Error, Result};
use crate::phasematch::DesignWavelengths;
use crate::pipeline::{
    configured_wavelengths, evaluate_at, evaluate_point, failure_flag, resolve_geometry, solve_wavelengths,
    DispersionChoice, PointEvaluation, ResolvedGeometry,
};
use crate::spectra::JointAmplitude;

/// Quantities a sweep can tabulate per point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Fidelity,
    Purity,
    SchmidtNumber,
    MinPowerProduct,
    RelativePairRate,
}

impl OutputKind {
    pub const ALL: [OutputKind; 5] = [
        OutputKind::Fidelity,
        OutputKind::Purity,
        OutputKind::SchmidtNumber,
        OutputKind::MinPowerProduct,
        OutputKind::RelativePairRate,
    ];

    pub fn column(self) -> &'static str {
        match self {
            OutputKind::Fidelity => "fidelity",
            OutputKind::Purity => "purity",
            OutputKind::SchmidtNumber => "schmidt_number",
            OutputKind::MinPowerProduct => "min_power_product_mW2",
            OutputKind::RelativePairRate => "relative_pair_rate",
        }
    }
}

fn default_outputs() -> Vec<OutputKind> {
    vec![OutputKind::Fidelity]
}

/// One swept parameter: `steps` evenly spaced values from `start` to `stop`
/// inclusive. A single step evaluates `start` alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub path: String,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepAxis {
    pub fn new(path: impl Into<String>, start: f64, stop: f64, steps: usize) -> Self {
        Self {
            path: path.into(),
            start,
            stop,
            steps,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let span = self.stop - self.start;
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| if i + 1 == self.steps { self.stop } else { self.start + span * (i as f64 / last) })
            .collect()
    }
}

/// An outer parameter taking an explicit list of values; a plan with outer
/// axes produces one table per combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuterAxis {
    pub path: String,
    pub values: Vec<f64>,
}

/// Numeric or boolean override value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Override {
    Number(f64),
    Flag(bool),
}

impl Override {
    fn as_f64(self) -> f64 {
        match self {
            Override::Number(x) => x,
            Override::Flag(b) => f64::from(u8::from(b)),
        }
    }
}

/// A sweep description, stored as TOML:
///
/// ```toml
/// name = "width-deviation"
/// rephasematch = true
/// outputs = ["fidelity", "purity"]
///
/// [[axis]]
/// path = "waveguide.delta_w_um"
/// start = -0.076
/// stop = 0.076
/// steps = 33
///
/// [fixed]
/// "grids.points" = 128
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    #[serde(default)]
    pub name: String,
    /// Overrides the configuration's re-phasematching switch when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rephasematch: Option<bool>,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<OutputKind>,
    #[serde(default, rename = "axis")]
    pub axes: Vec<SweepAxis>,
    #[serde(default)]
    pub fixed: BTreeMap<String, Override>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outer: Vec<OuterAxis>,
}

impl SweepPlan {
    pub fn new(name: impl Into<String>, axes: Vec<SweepAxis>) -> Self {
        Self {
            name: name.into(),
            rephasematch: None,
            outputs: default_outputs(),
            axes,
            fixed: BTreeMap::new(),
            outer: Vec::new(),
        }
    }

    pub fn with_outputs(mut self, outputs: &[OutputKind]) -> Self {
        self.outputs = outputs.to_vec();
        self
    }

    pub fn with_fixed(mut self, path: impl Into<String>, value: f64) -> Self {
        self.fixed.insert(path.into(), Override::Number(value));
        self
    }

    pub fn with_rephasematch(mut self, on: bool) -> Self {
        self.rephasematch = Some(on);
        self
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let plan: Self = toml::from_str(text).map_err(|e| Error::Config(format!("sweep plan: {e}")))?;
        Ok(plan)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("sweep plans always serialize")
    }

    /// Structural checks and key resolution against `base`; run before
    /// any point is evaluated.
    pub fn validate(&self, base: &DeviceConfig) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::Config("sweep plan has no axes".into()));
        }
        if self.axes.len() > 2 {
            return Err(Error::Config(format!("sweep plan has {} axes; at most 2 are supported", self.axes.len())));
        }
        if self.outputs.is_empty() {
            return Err(Error::Config("sweep plan requests no outputs".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for a in &self.axes {
            if a.steps == 0 {
                return Err(Error::Config(format!("axis `{}` needs at least one step", a.path)));
            }
            if !(a.start.is_finite() && a.stop.is_finite()) {
                return Err(Error::Config(format!("axis `{}` has a non-finite bound", a.path)));
            }
            if !seen.insert(a.path.as_str()) {
                return Err(Error::Config(format!("axis `{}` appears twice", a.path)));
            }
        }
        for o in &self.outer {
            if o.values.is_empty() {
                return Err(Error::Config(format!("outer axis `{}` has no values", o.path)));
            }
            if !seen.insert(o.path.as_str()) {
                return Err(Error::Config(format!("`{}` is swept twice", o.path)));
            }
        }
        let paths = self
            .axes
            .iter()
            .map(|a| a.path.as_str())
            .chain(self.outer.iter().map(|o| o.path.as_str()))
            .chain(self.fixed.keys().map(String::as_str));
        for p in paths {
            if !base.has_key(p) {
                return Err(Error::Config(format!("unknown configuration key `{p}` in sweep plan")));
            }
        }
        Ok(())
    }

    /// Number of points per table.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.steps).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid coordinates in row-major order (last axis fastest).
    pub fn coordinates(&self) -> Vec<Vec<f64>> {
        let mut coords = vec![Vec::new()];
        for a in &self.axes {
            let vals = a.values();
            coords = coords
                .into_iter()
                .flat_map(|c| {
                    vals.iter().map(move |v| {
                        let mut next = c.clone();
                        next.push(*v);
                        next
                    })
                })
                .collect();
        }
        coords
    }

    /// Combinations of outer-axis values in row-major order; a single empty
    /// combination when there are no outer axes.
    pub fn outer_combinations(&self) -> Vec<Vec<(String, f64)>> {
        let mut combos = vec![Vec::new()];
        for o in &self.outer {
            combos = combos
                .into_iter()
                .flat_map(|c: Vec<(String, f64)>| {
                    o.values.iter().map(move |v| {
                        let mut next = c.clone();
                        next.push((o.path.clone(), *v));
                        next
                    })
                })
                .collect();
        }
        combos
    }

    /// Whether the plan sets cross-section keys explicitly, in which case
    /// every point uses its configured widths rather than the design ones.
    fn sets_cross_section(&self) -> bool {
        const KEYS: [&str; 4] = [
            "waveguide.width_sfwm_um",
            "waveguide.width_dfg_um",
            "waveguide.height_um",
            "waveguide.optimize_widths",
        ];
        self.axes
            .iter()
            .map(|a| a.path.as_str())
            .chain(self.outer.iter().map(|o| o.path.as_str()))
            .chain(self.fixed.keys().map(String::as_str))
            .any(|p| KEYS.contains(&p))
    }
}

/// Outcome classification of a sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointFlag {
    Ok,
    Cutoff,
    NoRoot,
}

impl fmt::Display for PointFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PointFlag::Ok => "ok",
            PointFlag::Cutoff => "cutoff",
            PointFlag::NoRoot => "no-root",
        })
    }
}

fn flag_of(err: &Error) -> PointFlag {
    match failure_flag(err) {
        "no-root" => PointFlag::NoRoot,
        _ => PointFlag::Cutoff,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub coordinates: Vec<f64>,
    /// Central wavelengths used at this point, when resolved.
    pub wavelengths: Option<DesignWavelengths<f64>>,
    /// One entry per requested output; `None` on failed points.
    pub values: Vec<Option<f64>>,
    pub flag: PointFlag,
    /// Diagnostic for failed points.
    pub message: Option<String>,
}

impl SweepRow {
    pub fn value(&self, output: usize) -> Option<f64> {
        self.values.get(output).copied().flatten()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub name: String,
    pub axes: Vec<SweepAxis>,
    pub outputs: Vec<OutputKind>,
    /// Outer-axis values this table was evaluated at.
    pub outer: Vec<(String, f64)>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Values of one output in grid order (`None` where a point failed).
    pub fn column(&self, output: OutputKind) -> Option<Vec<Option<f64>>> {
        let k = self.outputs.iter().position(|o| *o == output)?;
        Some(self.rows.iter().map(|r| r.value(k)).collect())
    }

    /// Comma-separated table: axis columns, the central wavelengths used,
    /// the requested outputs and the point flag. Failed values are empty.
    pub fn write_table(&self, mut w: impl Write) -> std::io::Result<()> {
        for (path, v) in &self.outer {
            writeln!(w, "# {path} = {v}")?;
        }
        let mut header: Vec<String> = self.axes.iter().map(|a| a.path.clone()).collect();
        header.extend(["lambda1_um", "lambda2_um", "lambdas_um"].map(String::from));
        header.extend(self.outputs.iter().map(|o| o.column().to_string()));
        header.push("flag".into());
        writeln!(w, "{}", header.join(","))?;
        for row in &self.rows {
            let mut cells: Vec<String> = row.coordinates.iter().map(|x| x.to_string()).collect();
            match &row.wavelengths {
                Some(wl) => cells.extend([wl.pump1_um, wl.pump2_um, wl.signal_um].map(|x| x.to_string())),
                None => cells.extend(std::iter::repeat(String::new()).take(3)),
            }
            cells.extend(row.values.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
            cells.push(row.flag.to_string());
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_table_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_table(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("tables are UTF-8")
    }
}

/// Photon-pair rate of `jsa` relative to `reference`: the ratio of their
/// filtered, unnormalized joint-spectral weights `∫∫|F|²`.
pub fn relative_pair_rate(jsa: &JointAmplitude<f64>, reference: &JointAmplitude<f64>) -> f64 {
    jsa.raw_norm_sq / reference.raw_norm_sq
}

/// Quantities fixed by the base configuration and shared by every point:
/// the design cross-section, the calibrated `ε` and the pair-rate reference.
#[derive(Debug, Clone)]
pub struct DesignReference {
    /// Cross-section before the configured width offset.
    pub geometry: ResolvedGeometry,
    pub epsilon: f64,
    pub reference_pair_weight: f64,
    pub design: PointEvaluation,
}

impl DesignReference {
    pub fn new(base: &DeviceConfig, dispersion: &DispersionChoice) -> Result<Self> {
        let mut undisplaced = base.clone();
        undisplaced.waveguide.delta_w_um = 0.0;
        let geometry = resolve_geometry(&undisplaced, dispersion)?;
        let design = evaluate_point(base, dispersion, &offset(&geometry, base), None)?;
        Ok(Self {
            geometry,
            epsilon: design.epsilon(),
            reference_pair_weight: design.jsa.raw_norm_sq,
            design,
        })
    }

    /// Cross-section for a point configuration.
    pub fn geometry_for(&self, point: &DeviceConfig, explicit: bool) -> ResolvedGeometry {
        if explicit || !point.waveguide.optimize_widths {
            ResolvedGeometry {
                height_um: point.waveguide.height_um,
                width_sfwm_um: point.width_sfwm(),
                width_dfg_um: point.width_dfg(),
                search: None,
            }
        } else {
            offset(&self.geometry, point)
        }
    }
}

fn offset(g: &ResolvedGeometry, cfg: &DeviceConfig) -> ResolvedGeometry {
    let dw = cfg.waveguide.delta_w_um;
    ResolvedGeometry {
        width_sfwm_um: g.width_sfwm_um + dw,
        width_dfg_um: g.width_dfg_um + dw,
        ..g.clone()
    }
}

/// Configuration of every point of one table, validated up front.
fn point_configs(plan: &SweepPlan, base: &DeviceConfig, outer: &[(String, f64)], epsilon: f64) -> Result<Vec<DeviceConfig>> {
    let mut common = base.clone();
    for (path, v) in &plan.fixed {
        common.set(path, v.as_f64())?;
    }
    for (path, v) in outer {
        common.set(path, *v)?;
    }
    if let Some(on) = plan.rephasematch {
        common.wavelengths.rephasematch = on;
    }
    common.dfg.epsilon = Some(epsilon);
    plan.coordinates()
        .into_iter()
        .map(|coords| {
            let mut cfg = common.clone();
            for (a, v) in plan.axes.iter().zip(coords) {
                cfg.set(&a.path, v)?;
            }
            Ok(cfg)
        })
        .collect()
}

enum Solved {
    Ready(ResolvedGeometry, DesignWavelengths<f64>, usize),
    Failed(Error),
}

fn table(
    plan: &SweepPlan,
    dispersion: &DispersionChoice,
    reference: &DesignReference,
    configs: &[DeviceConfig],
    outer: Vec<(String, f64)>,
) -> SweepResult {
    let explicit = plan.sets_cross_section();

    // Phase 1: wavelength continuation in grid order.
    let mut previous: Option<DesignWavelengths<f64>> = None;
    let solved: Vec<Solved> = configs
        .iter()
        .map(|cfg| {
            let geometry = reference.geometry_for(cfg, explicit);
            let seed = previous.map(|p| DesignWavelengths {
                pump2_um: cfg.wavelengths.pump2_um,
                ..p
            });
            match solve_wavelengths(cfg, dispersion, &geometry, seed) {
                Ok((wl, it)) => {
                    if cfg.wavelengths.rephasematch {
                        previous = Some(wl);
                    }
                    Solved::Ready(geometry, wl, it)
                }
                Err(e) => Solved::Failed(e),
            }
        })
        .collect();

    // Phase 2: independent spectral evaluations, gathered by index.
    let coords = plan.coordinates();
    let rows: Vec<SweepRow> = configs
        .par_iter()
        .zip(solved.into_par_iter())
        .zip(coords.into_par_iter())
        .map(|((cfg, s), coordinates)| match s {
            Solved::Failed(e) => SweepRow {
                coordinates,
                wavelengths: None,
                values: vec![None; plan.outputs.len()],
                flag: flag_of(&e),
                message: Some(e.to_string()),
            },
            Solved::Ready(geometry, wl, it) => match evaluate_at(cfg, dispersion, &geometry, wl, it) {
                Ok(point) => SweepRow {
                    coordinates,
                    wavelengths: Some(wl),
                    values: plan.outputs.iter().map(|o| Some(output_value(*o, &point, reference))).collect(),
                    flag: PointFlag::Ok,
                    message: None,
                },
                Err(e) => SweepRow {
                    coordinates,
                    wavelengths: Some(wl),
                    values: vec![None; plan.outputs.len()],
                    flag: flag_of(&e),
                    message: Some(e.to_string()),
                },
            },
        })
        .collect();

    SweepResult {
        name: plan.name.clone(),
        axes: plan.axes.clone(),
        outputs: plan.outputs.clone(),
        outer,
        rows,
    }
}

fn output_value(kind: OutputKind, p: &PointEvaluation, reference: &DesignReference) -> f64 {
    match kind {
        OutputKind::Fidelity => p.fidelity(),
        OutputKind::Purity => p.purity.value,
        OutputKind::SchmidtNumber => p.schmidt_number,
        OutputKind::MinPowerProduct => p.min_power_product,
        OutputKind::RelativePairRate => p.jsa.raw_norm_sq / reference.reference_pair_weight,
    }
}

/// Runs a plan without outer axes against `base`. The plan is validated
/// (including every point's configuration) before anything is evaluated.
pub fn run_sweep(plan: &SweepPlan, base: &DeviceConfig, dispersion: &DispersionChoice) -> Result<SweepResult> {
    if !plan.outer.is_empty() {
        return Err(Error::Config("plan has outer axes; run it as a matrix".into()));
    }
    let mut tables = run_matrix(plan, base, dispersion)?;
    Ok(tables.remove(0))
}

/// Runs a plan once per combination of its outer-axis values.
pub fn run_matrix(plan: &SweepPlan, base: &DeviceConfig, dispersion: &DispersionChoice) -> Result<Vec<SweepResult>> {
    plan.validate(base)?;
    base.validate()?;
    let combos = plan.outer_combinations();
    // Resolve every point configuration before the (expensive) reference.
    let probe = base.dfg.epsilon.unwrap_or(1.0);
    for outer in &combos {
        point_configs(plan, base, outer, probe)?;
    }
    let reference = DesignReference::new(base, dispersion)?;
    run_with_reference(plan, base, dispersion, &reference)
}

/// As [`run_matrix`], reusing an already evaluated design reference.
pub fn run_with_reference(
    plan: &SweepPlan,
    base: &DeviceConfig,
    dispersion: &DispersionChoice,
    reference: &DesignReference,
) -> Result<Vec<SweepResult>> {
    plan.validate(base)?;
    plan.outer_combinations()
        .into_iter()
        .map(|outer| {
            let configs = point_configs(plan, base, &outer, reference.epsilon)?;
            Ok(table(plan, dispersion, reference, &configs, outer))
        })
        .collect()
}

/// Fidelity maps over cavity length and reflectivity for every combination
/// of DFG length and pump-1 bandwidth, at fixed pump-2 and filter
/// bandwidths. Ranges are `(start, stop, steps)`.
#[allow(clippy::too_many_arguments)]
pub fn fidelity_matrix(
    lengths_um: &[f64],
    sigma1_thz: &[f64],
    ring_length_um: (f64, f64, usize),
    reflectivity: (f64, f64, usize),
    sigma2_thz: f64,
    sigma_f_thz: f64,
    base: &DeviceConfig,
    dispersion: &DispersionChoice,
) -> Result<Vec<SweepResult>> {
    if lengths_um.iter().chain(sigma1_thz).chain([&sigma2_thz, &sigma_f_thz]).any(|x| !(*x > 0.0)) {
        return Err(Error::Config("fidelity matrix values must be positive".into()));
    }
    let plan = fidelity_matrix_plan(lengths_um, sigma1_thz, ring_length_um, reflectivity, sigma2_thz, sigma_f_thz);
    run_matrix(&plan, base, dispersion)
}

pub fn fidelity_matrix_plan(
    lengths_um: &[f64],
    sigma1_thz: &[f64],
    ring_length_um: (f64, f64, usize),
    reflectivity: (f64, f64, usize),
    sigma2_thz: f64,
    sigma_f_thz: f64,
) -> SweepPlan {
    let mut plan = SweepPlan::new(
        "fidelity-matrix",
        vec![
            SweepAxis::new("sfwm.ring_length_um", ring_length_um.0, ring_length_um.1, ring_length_um.2),
            SweepAxis::new("sfwm.reflectivity", reflectivity.0, reflectivity.1, reflectivity.2),
        ],
    )
    .with_fixed("dfg.sigma2_THz", sigma2_thz)
    .with_fixed("sfwm.sigma_f_THz", sigma_f_thz);
    plan.outer = vec![
        OuterAxis {
            path: "dfg.L_um".into(),
            values: lengths_um.to_vec(),
        },
        OuterAxis {
            path: "sfwm.sigma1_THz".into(),
            values: sigma1_thz.to_vec(),
        },
    ];
    plan
}

/// Largest contiguous run of grid points satisfying `pred` along a 1-D
/// table, as `(first, last)` indices.
pub fn longest_run(values: &[Option<f64>], pred: impl Fn(f64) -> bool) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for (i, v) in values.iter().enumerate() {
        if v.is_some_and(&pred) {
            let s = *start.get_or_insert(i);
            if best.is_none_or(|(a, b)| i - s > b - a) {
                best = Some((s, i));
            }
        } else {
            start = None;
        }
    }
    best
}

/// Configured wavelengths of `base` after the plan's fixed overrides, for
/// reporting.
pub fn plan_wavelengths(plan: &SweepPlan, base: &DeviceConfig) -> Result<DesignWavelengths<f64>> {
    let mut cfg = base.clone();
    for (path, v) in &plan.fixed {
        cfg.set(path, v.as_f64())?;
    }
    Ok(configured_wavelengths(&cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_base() -> DeviceConfig {
        let mut cfg = DeviceConfig::default();
        cfg.grids.points = 64;
        cfg.grids.mf_quadrature_nodes = 65;
        cfg
    }

    #[test]
    fn plan_round_trips_through_toml() {
        let plan = SweepPlan::new("t", vec![SweepAxis::new("waveguide.delta_w_um", -0.01, 0.01, 3)])
            .with_fixed("grids.points", 128.0)
            .with_rephasematch(true)
            .with_outputs(&[OutputKind::Fidelity, OutputKind::Purity]);
        let back = SweepPlan::from_toml_str(&plan.to_toml_string()).unwrap();
        assert_eq!(plan, back);
    }

    #[test]
    fn plan_errors_before_execution() {
        let base = DeviceConfig::default();
        assert!(SweepPlan::from_toml_str("").unwrap().validate(&base).is_err());
        let bad = SweepPlan::new("t", vec![SweepAxis::new("dfg.nope", 0.0, 1.0, 2)]);
        let err = run_sweep(&bad, &base, &DispersionChoice::effective_index()).unwrap_err();
        assert!(err.is_usage() && err.to_string().contains("dfg.nope"));
        let three = SweepPlan::new(
            "t",
            vec![
                SweepAxis::new("dfg.L_um", 1.0, 2.0, 2),
                SweepAxis::new("dfg.nu_rad", 0.0, 1.0, 2),
                SweepAxis::new("sfwm.reflectivity", 0.5, 0.6, 2),
            ],
        );
        assert!(three.validate(&base).is_err());
        assert!(SweepPlan::from_toml_str("bogus = 1").is_err());
        // An out-of-range point value is rejected before evaluation.
        let wild = SweepPlan::new("t", vec![SweepAxis::new("sfwm.reflectivity", 0.5, 1.5, 3)]);
        assert!(run_sweep(&wild, &base, &DispersionChoice::effective_index()).unwrap_err().is_usage());
    }

    #[test]
    fn axis_values_hit_both_ends() {
        let a = SweepAxis::new("x", -0.076, 0.076, 33);
        let v = a.values();
        assert_eq!(v.len(), 33);
        assert_eq!(v[0], -0.076);
        assert_eq!(v[32], 0.076);
        assert_eq!(SweepAxis::new("x", 2.0, 5.0, 1).values(), vec![2.0]);
    }

    #[test]
    fn coordinates_are_row_major() {
        let plan = SweepPlan::new("t", vec![SweepAxis::new("a", 0.0, 1.0, 2), SweepAxis::new("b", 0.0, 2.0, 3)]);
        let c = plan.coordinates();
        assert_eq!(c.len(), plan.len());
        assert_eq!(c[1], vec![0.0, 1.0]);
        assert_eq!(c[3], vec![1.0, 0.0]);
    }

    #[test]
    fn longest_run_picks_the_widest_interval() {
        let v = [Some(0.5), Some(0.995), Some(0.992), None, Some(0.999), Some(0.991), Some(0.993), Some(0.2)];
        assert_eq!(longest_run(&v, |x| x > 0.99), Some((4, 6)));
        assert_eq!(longest_run(&[Some(0.1)], |x| x > 0.99), None);
    }

    #[test]
    fn single_point_plan_matches_a_direct_evaluation() {
        let base = quick_base();
        let d = DispersionChoice::effective_index();
        let plan = SweepPlan::new("t", vec![SweepAxis::new("dfg.nu_rad", 0.0, 0.0, 1)])
            .with_outputs(&OutputKind::ALL);
        let r = run_sweep(&plan, &base, &d).unwrap();
        assert_eq!(r.rows.len(), 1);
        let direct = crate::pipeline::evaluate(&base, &d).unwrap();
        let row = &r.rows[0];
        assert_eq!(row.flag, PointFlag::Ok);
        assert_eq!(row.value(0), Some(direct.fidelity()));
        assert_eq!(row.value(1), Some(direct.purity.value));
        assert_eq!(row.value(2), Some(direct.schmidt_number));
        assert_eq!(row.value(3), Some(direct.min_power_product));
        assert_eq!(row.value(4), Some(1.0));
    }

    #[test]
    fn failed_points_are_flagged_not_dropped() {
        let base = quick_base();
        let d = DispersionChoice::effective_index();
        // Far too narrow to guide at the pump-2 wavelength.
        let plan = SweepPlan::new("t", vec![SweepAxis::new("waveguide.width_dfg_um", 0.05, 1.9133, 2)])
            .with_rephasematch(false);
        let r = run_sweep(&plan, &base, &d).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.rows[0].flag, PointFlag::Cutoff);
        assert_eq!(r.rows[0].value(0), None);
        assert_eq!(r.rows[1].flag, PointFlag::Ok);
        let text = r.to_table_string();
        assert!(text.lines().nth(1).unwrap().ends_with(",cutoff"));
    }
}
