//! The command-line operations, independent of argument parsing: each
//! command evaluates, writes its data files into an output directory, and
//! returns a report. Reports and data files are deterministic; the run
//! timestamp lives only in the manifest.

use std::path::{Path, PathBuf};
use std::time::SystemTime;

use num_complex::Complex;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::DeviceConfig;
use crate::dispersion::{Dispersion, DispersionModel, NeffTable};
use crate::error::{Error, Result};
use crate::gate::{evolve_pure, PureInput, QubitOutput};
use crate::phasematch::{
    objective_profile, objective_surface, phasematch_contours, write_contours, write_objective_surface, ContourPlane,
};
use crate::pipeline::{configured_wavelengths, evaluate, search_space, DispersionChoice, PointEvaluation};
use crate::scalar::{linspace, wavelength_from_omega};
use crate::schmidt::SchmidtDecomposition;
use crate::spectra::{Axis, BandwidthUnit};
use crate::sweep::{run_matrix, SweepPlan, SweepResult};

/// Ordered `key = value` record with a JSON twin.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, Value)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.entries.push((key.into(), value.into()));
    }

    pub fn number(&mut self, key: impl Into<String>, value: f64) {
        self.push(key, number(value));
    }

    pub fn numbers(&mut self, key: impl Into<String>, values: impl IntoIterator<Item = f64>) {
        self.push(key, Value::Array(values.into_iter().map(number).collect()));
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(Value::as_f64)
    }

    pub fn entries(&self) -> &[(String, Value)] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let shown = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.push_str(&format!("{k} = {shown}\n"));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        Value::Object(self.entries.iter().cloned().collect::<Map<_, _>>())
    }
}

fn number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or_else(|| Value::String(x.to_string()), Value::Number)
}

/// Record of one command run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub version: String,
    pub timestamp: String,
    pub dispersion_model: String,
    /// Output files relative to the output directory, sorted.
    pub files: Vec<String>,
}

/// Output directory that records every file written into it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(Self { root, files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.path(name);
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.files.push(path.clone());
        Ok(path)
    }

    /// Writes through a formatter that targets an in-memory buffer.
    pub fn write_with(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<PathBuf> {
        let mut buf = Vec::new();
        f(&mut buf).map_err(|e| Error::io(self.path(name), e))?;
        self.write(name, buf)
    }

    pub fn record(&mut self, paths: impl IntoIterator<Item = PathBuf>) {
        self.files.extend(paths);
    }

    pub fn files(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .files
            .iter()
            .map(|p| p.strip_prefix(&self.root).unwrap_or(p).to_string_lossy().into_owned())
            .collect();
        names.sort();
        names.dedup();
        names
    }

    /// Writes the report (text and JSON) and then the manifest listing
    /// every file, including the manifest itself.
    pub fn finish(mut self, ctx: &Context, command: &str, report: &Report) -> Result<RunManifest> {
        self.write(&format!("{command}_report.txt"), report.to_text())?;
        let json = serde_json::to_string_pretty(&report.to_json()).expect("reports serialize");
        self.write(&format!("{command}_report.json"), json + "\n")?;
        let manifest_name = format!("{command}.manifest.json");
        self.files.push(self.path(&manifest_name));
        let manifest = RunManifest {
            command: command.to_string(),
            config_hash: ctx.config.hash(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: humantime::format_rfc3339_seconds(SystemTime::now()).to_string(),
            dispersion_model: ctx.dispersion.label().to_string(),
            files: self.files(),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifests serialize");
        let path = self.path(&manifest_name);
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}

/// Inputs shared by every command.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: DeviceConfig,
    pub dispersion: DispersionChoice,
    pub out: PathBuf,
}

impl Context {
    pub fn new(config: DeviceConfig, dispersion: DispersionChoice, out: impl Into<PathBuf>) -> Self {
        Self {
            config,
            dispersion,
            out: out.into(),
        }
    }

    /// Loads the configuration (embedded defaults when `None`) and an
    /// optional dispersion table.
    pub fn load(config: Option<&Path>, table: Option<&Path>, out: impl Into<PathBuf>) -> Result<Self> {
        let config = match config {
            Some(p) => DeviceConfig::load(p)?,
            None => DeviceConfig::default(),
        };
        let dispersion = match table {
            Some(p) => DispersionChoice::tabulated(NeffTable::read(p)?),
            None => DispersionChoice::effective_index(),
        };
        Ok(Self::new(config, dispersion, out))
    }

    fn unit(&self) -> BandwidthUnit {
        self.config.units.bandwidth_unit
    }
}

/// Common report entries describing an evaluated operating point.
fn point_report(r: &mut Report, ctx: &Context, p: &PointEvaluation) {
    let wl = &p.wavelengths;
    let (w1, w2, ws) = wl.omegas();
    r.push("dispersion_model", ctx.dispersion.label());
    r.push("config_hash", ctx.config.hash());
    r.number("height_um", p.geometry.height_um);
    r.number("width_sfwm_um", p.geometry.width_sfwm_um);
    r.number("width_dfg_um", p.geometry.width_dfg_um);
    r.number("delta_w_um", ctx.config.waveguide.delta_w_um);
    if let Some(s) = &p.geometry.search {
        r.number("geometry_objective", s.objective);
    }
    r.number("objective_at_configured_wavelengths", p.objective_at_configured);
    r.number("lambda1_um", wl.pump1_um);
    r.number("lambda2_um", wl.pump2_um);
    r.number("lambdas_um", wl.signal_um);
    r.number("lambdai_um", wavelength_from_omega(2.0 * w1 - ws));
    r.number("lambdar_um", wavelength_from_omega(w1 - w2 + ws));
    r.push("rephase_iterations", p.rephase_iterations);
    r.number("delta_k_sfwm_per_um", p.delta_k_sfwm);
    r.number("delta_k_dfg_per_um", p.delta_k_dfg);
    r.number("purity", p.purity.value);
    r.number("jsa_schmidt_number", crate::schmidt::schmidt_number(&p.jsa_modes));
    r.numbers("jsa_coefficients", p.jsa_modes.coefficients.iter().copied().take(5));
    r.number("mf_schmidt_number", p.schmidt_number);
    r.numbers("mf_coefficients", p.mf_modes.coefficients.iter().copied().take(7));
    r.number("epsilon", p.epsilon());
    r.number("leading_overlap", p.heralded.leading_overlap);
    r.number("fidelity", p.fidelity());
    r.number("fidelity_pure_fundamental", p.pure.fidelity);
    r.number("fidelity_uncertainty", p.heralded.fidelity_uncertainty);
    r.number("min_power_product_mW2", p.min_power_product);
}

/// Options of the `design` command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DesignOptions {
    /// Also write the objective and phasematching-contour data.
    pub figures: bool,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self { figures: true }
    }
}

/// Full design pipeline at the configured point, with spectra, Schmidt
/// modes, objective data and phasematching contours written to disk.
pub fn design(ctx: &Context, opts: DesignOptions) -> Result<(Report, PointEvaluation)> {
    let p = evaluate(&ctx.config, &ctx.dispersion)?;
    let mut out = OutputDir::create(&ctx.out)?;
    let unit = ctx.unit();
    let mut r = Report::new();
    r.push("command", "design");
    point_report(&mut r, ctx, &p);

    write_spectra(&mut out, &p, unit)?;
    if opts.figures {
        write_objective_data(&mut out, ctx, &p)?;
    }
    out.finish(ctx, "design", &r)?;
    Ok((r, p))
}

fn write_spectra(out: &mut OutputDir, p: &PointEvaluation, unit: BandwidthUnit) -> Result<()> {
    out.write_with("jsa_intensity.dat", |w| p.jsa.write_intensity(w, ("domega_s_THz", "domega_i_THz"), unit))?;
    out.write_with("mf_intensity.dat", |w| p.mf.write_intensity(w, ("domega_s_THz", "domega_r_THz"), unit))?;
    let files = p.jsa.export(&out.path("jsa.dat"), ("omega_s", "omega_i"))?;
    out.record(files);
    let files = p.mf.export(&out.path("mf.dat"), ("omega_s", "omega_r"))?;
    out.record(files);
    let files = p.jsa_modes.export_modes(out.root(), "jsa_mode", unit)?;
    out.record(files);
    let files = p.mf_modes.export_modes(out.root(), "mf_mode", unit)?;
    out.record(files);
    out.write_with("schmidt_coefficients.dat", |w| {
        use std::io::Write;
        writeln!(w, "function index coefficient")?;
        for (name, d) in [("jsa", &p.jsa_modes), ("mf", &p.mf_modes)] {
            for (k, c) in d.coefficients.iter().enumerate() {
                writeln!(w, "{name} {} {:e}", k + 1, c)?;
            }
        }
        Ok(())
    })?;
    Ok(())
}

fn write_objective_data(out: &mut OutputDir, ctx: &Context, p: &PointEvaluation) -> Result<()> {
    let cfg = &ctx.config;
    let wl = configured_wavelengths(cfg);
    let template = ctx.dispersion.model(crate::pipeline::geometry(cfg, cfg.waveguide.width_sfwm_um)?);
    let profile = objective_profile(&template, &template, &search_space(cfg, false), &wl)?;
    out.write_with("objective_vs_height.dat", |w| write_objective_surface(w, &profile))?;

    let n = cfg.grids.contour_points;
    let s = &cfg.solver;
    let widths = linspace(s.width_min_um, s.width_max_um, n);
    let surface = objective_surface(&template, &template, p.geometry.height_um, &widths, &widths, &wl);
    out.write_with("objective_surface.dat", |w| write_objective_surface(w, &surface))?;

    let (sfwm, dfg) = p.geometry.models(cfg, &ctx.dispersion)?;
    let plane = ContourPlane {
        pump1_um: (0.75, 0.95),
        signal_um: (1.05, 1.7),
        points: n,
        pump2_um: p.wavelengths.pump2_um,
    };
    let lines = phasematch_contours(&sfwm, &dfg, &plane);
    out.write_with("phasematch_contours.dat", |w| write_contours(w, &lines))?;
    Ok(())
}

/// Runs a sweep plan; writes one table per outer-axis combination and,
/// optionally, a grey-scale raster of the first output.
pub fn sweep(ctx: &Context, plan: &SweepPlan, heatmap: bool) -> Result<(Report, Vec<SweepResult>)> {
    let tables = run_matrix(plan, &ctx.config, &ctx.dispersion)?;
    let mut out = OutputDir::create(&ctx.out)?;
    let stem = if plan.name.is_empty() { "sweep" } else { plan.name.as_str() };
    let mut r = Report::new();
    r.push("command", "sweep");
    r.push("plan", stem);
    r.push("dispersion_model", ctx.dispersion.label());
    r.push("config_hash", ctx.config.hash());
    r.push("tables", tables.len());
    r.push("points_per_table", plan.len());
    for (k, t) in tables.iter().enumerate() {
        let name = if tables.len() == 1 {
            stem.to_string()
        } else {
            format!("{stem}_{}", k + 1)
        };
        out.write(&format!("{name}.csv"), t.to_table_string())?;
        if heatmap {
            if let Some(img) = heatmap_pgm(t) {
                out.write(&format!("{name}.pgm"), img)?;
            }
        }
        let ok = t.rows.iter().filter(|row| row.flag == crate::sweep::PointFlag::Ok).count();
        r.push(format!("{name}.ok_points"), ok);
    }
    out.finish(ctx, "sweep", &r)?;
    Ok((r, tables))
}

/// Plain (ASCII) PGM of the first output: one pixel per point, rows along
/// the first axis (last value at the top), columns along the second.
/// Values are scaled linearly between the table's extremes; failed points
/// are black.
pub fn heatmap_pgm(t: &SweepResult) -> Option<String> {
    let values: Vec<Option<f64>> = t.rows.iter().map(|r| r.value(0)).collect();
    let (rows, cols) = match t.axes.len() {
        1 => (1, t.axes[0].steps),
        2 => (t.axes[0].steps, t.axes[1].steps),
        _ => return None,
    };
    let finite = values.iter().flatten().copied().filter(|x| x.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut s = format!("P2\n# {}: {}\n{cols} {rows}\n255\n", t.outputs[0].column(), t.name);
    for i in (0..rows).rev() {
        let line: Vec<String> = (0..cols)
            .map(|j| match values[i * cols + j] {
                Some(x) if x.is_finite() => (((x - lo) / span) * 254.0).round() as u8 + 1,
                _ => 0,
            })
            .map(|v| v.to_string())
            .collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    Some(s)
}

/// Input state of the `gate` command.
#[derive(Debug, Clone, PartialEq)]
pub enum GateInput {
    /// Leading heralded signal mode of the designed source.
    Fundamental,
    /// `domega_THz re im` spectral-amplitude file.
    File(PathBuf),
}

impl GateInput {
    pub fn parse(spec: &str) -> Self {
        if spec == "fundamental" {
            GateInput::Fundamental
        } else {
            GateInput::File(PathBuf::from(spec))
        }
    }
}

/// Reads a `domega_THz re im` amplitude table and resamples it linearly
/// onto `axis` offsets; the amplitude is zero outside the table.
pub fn read_amplitude(path: &Path, axis: &Axis<f64>, unit: BandwidthUnit) -> Result<Vec<Complex<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_amplitude(&text, axis, unit)
}

pub fn parse_amplitude(text: &str, axis: &Axis<f64>, unit: BandwidthUnit) -> Result<Vec<Complex<f64>>> {
    let mut samples: Vec<(f64, Complex<f64>)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.first().is_some_and(|f| f.parse::<f64>().is_err()) && samples.is_empty() {
            // Column header.
            continue;
        }
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 columns `domega re im`, found {}", fields.len()),
            });
        }
        let mut v = [0.0_f64; 3];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("`{f}` is not a number"),
            })?;
            if !slot.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("non-finite value `{f}`"),
                });
            }
        }
        let x = unit.to_rad_per_ps(v[0]);
        if samples.last().is_some_and(|(p, _)| x <= *p) {
            return Err(Error::Parse {
                line: line_no,
                message: "frequency offsets must increase strictly".into(),
            });
        }
        samples.push((x, Complex::new(v[1], v[2])));
    }
    if samples.len() < 2 {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: "amplitude file needs at least two samples".into(),
        });
    }
    Ok(axis
        .offsets()
        .into_iter()
        .map(|x| {
            let k = samples.partition_point(|(p, _)| *p <= x);
            if k == 0 || k == samples.len() {
                // Exactly on the last sample counts as inside.
                return match samples.last() {
                    Some((p, z)) if k == samples.len() && *p == x => *z,
                    _ => Complex::new(0.0, 0.0),
                };
            }
            let (x0, z0) = samples[k - 1];
            let (x1, z1) = samples[k];
            let t = (x - x0) / (x1 - x0);
            z0 * (1.0 - t) + z1 * t
        })
        .collect())
}

/// Overrides of the `gate` command.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GateOptions {
    pub nu: Option<f64>,
    pub powers_mw: Option<(f64, f64)>,
}

/// Applies the gate to an input state at the design point.
pub fn gate(ctx: &Context, input: &GateInput, opts: &GateOptions) -> Result<(Report, QubitOutput<f64>)> {
    let p = evaluate(&ctx.config, &ctx.dispersion)?;
    let mut params = p.gate;
    if let Some(nu) = opts.nu {
        params.nu = nu;
    }
    if let Some((p1, p2)) = opts.powers_mw {
        params.power1_mw = p1;
        params.power2_mw = p2;
    }
    let (label, state) = match input {
        GateInput::Fundamental => (
            "fundamental".to_string(),
            PureInput::normalized("fundamental", p.jsa_modes.axis_a, p.jsa_modes.modes_a[0].clone())?,
        ),
        GateInput::File(path) => {
            let amp = read_amplitude(path, &p.mf_modes.axis_a, ctx.unit())?;
            (path.display().to_string(), PureInput::normalized(path.display().to_string(), p.mf_modes.axis_a, amp)?)
        }
    };
    let q = evolve_pure(&state, &p.mf_modes, &params).map_err(|e| e.in_stage("gate"))?;

    let mut r = Report::new();
    r.push("command", "gate");
    r.push("input", label);
    r.push("dispersion_model", ctx.dispersion.label());
    r.push("config_hash", ctx.config.hash());
    r.number("nu_rad", params.nu);
    r.number("power1_mW", params.power1_mw);
    r.number("power2_mW", params.power2_mw);
    r.number("power_product_mW2", params.power_product());
    r.number("epsilon", params.epsilon.unwrap_or(f64::NAN));
    r.numbers("theta_abs_rad", q.theta.iter().map(|t| t.norm()));
    r.number("theta1_rad", q.theta[0].norm());
    r.numbers("overlap_abs", q.overlaps.iter().map(|o| o.norm()));
    let alpha = q.alpha * q.normalization;
    let beta = q.beta * q.normalization;
    r.number("alpha_re", alpha.re);
    r.number("alpha_im", alpha.im);
    r.number("beta_re", beta.re);
    r.number("beta_im", beta.im);
    r.number("alpha_abs_sq", alpha.norm_sqr());
    r.number("beta_abs_sq", beta.norm_sqr());
    r.number("beta_phase_rad", beta.arg());
    r.number("spurious_weight", q.spurious_weight() * q.normalization * q.normalization);
    r.number("out_of_span_weight", q.out_of_span * q.normalization * q.normalization);
    r.number("fidelity", q.fidelity);
    r.number("fidelity_uncertainty", q.fidelity_uncertainty);
    r.number("min_power_product_mW2", p.min_power_product);

    let out = OutputDir::create(&ctx.out)?;
    out.finish(ctx, "gate", &r)?;
    Ok((r, q))
}

/// Options of the `dispersion` command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionOptions {
    pub lambda_min_um: f64,
    pub lambda_max_um: f64,
    pub points: usize,
}

impl Default for DispersionOptions {
    fn default() -> Self {
        Self {
            lambda_min_um: 0.55,
            lambda_max_um: 1.7,
            points: 116,
        }
    }
}

fn cell(x: Result<f64>) -> String {
    match x {
        Ok(v) => v.to_string(),
        Err(e) if e.is_cutoff() => "cutoff".into(),
        Err(_) => "invalid".into(),
    }
}

/// Effective and group indices of both cross-sections over a wavelength
/// range; with an imported table, also its comparison against the
/// effective-index solver.
pub fn dispersion(ctx: &Context, opts: DispersionOptions) -> Result<Report> {
    if !(opts.lambda_min_um > 0.0 && opts.lambda_max_um > opts.lambda_min_um && opts.points >= 2) {
        return Err(Error::Config("wavelength range needs 0 < min < max and at least 2 points".into()));
    }
    let cfg = &ctx.config;
    let g = crate::pipeline::resolve_geometry(cfg, &ctx.dispersion)?;
    let (sfwm, dfg) = g.models(cfg, &ctx.dispersion)?;
    let lambdas = linspace(opts.lambda_min_um, opts.lambda_max_um, opts.points);
    let row = |m: &DispersionModel<f64>, l: f64| -> (String, String) {
        let w = crate::scalar::omega_from_wavelength(l);
        (cell(m.effective_index(l)), cell(m.group_index(w)))
    };
    let mut out = OutputDir::create(&ctx.out)?;
    out.write_with("dispersion.dat", |w| {
        use std::io::Write;
        writeln!(w, "wavelength_um neff_sfwm ng_sfwm neff_dfg ng_dfg")?;
        for &l in &lambdas {
            let (a, b) = row(&sfwm, l);
            let (c, d) = row(&dfg, l);
            writeln!(w, "{l} {a} {b} {c} {d}")?;
        }
        Ok(())
    })?;
    if ctx.dispersion.table.is_some() {
        out.write_with("dispersion_compare.dat", |w| {
            use std::io::Write;
            writeln!(w, "guide wavelength_um neff_effective_index neff_table")?;
            for (name, model) in [("sfwm", &sfwm), ("dfg", &dfg)] {
                let eim = DispersionModel::effective_index_method(model.geometry.clone());
                for (l, pair) in crate::dispersion::compare_models(&eim, model, &lambdas) {
                    match pair {
                        Some((a, b)) => writeln!(w, "{name} {l} {a} {b}")?,
                        None => writeln!(w, "{name} {l} cutoff cutoff")?,
                    }
                }
            }
            Ok(())
        })?;
    }

    let wl = configured_wavelengths(cfg);
    let mut r = Report::new();
    r.push("command", "dispersion");
    r.push("dispersion_model", ctx.dispersion.label());
    r.push("config_hash", cfg.hash());
    r.number("height_um", g.height_um);
    r.number("width_sfwm_um", g.width_sfwm_um);
    r.number("width_dfg_um", g.width_dfg_um);
    for (name, l) in [("lambda1", wl.pump1_um), ("lambda2", wl.pump2_um), ("lambdas", wl.signal_um)] {
        for (guide, m) in [("sfwm", &sfwm), ("dfg", &dfg)] {
            r.push(format!("neff_{guide}_{name}"), row(m, l).0);
        }
    }
    out.finish(ctx, "dispersion", &r)?;
    Ok(r)
}

/// Which joint function the `schmidt` command decomposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchmidtTarget {
    Jsa,
    Mf,
    Both,
}

/// Schmidt decompositions at the design point, with modes, coefficients and
/// quality measures.
pub fn schmidt(ctx: &Context, target: SchmidtTarget) -> Result<Report> {
    let p = evaluate(&ctx.config, &ctx.dispersion)?;
    let mut out = OutputDir::create(&ctx.out)?;
    let mut r = Report::new();
    r.push("command", "schmidt");
    r.push("dispersion_model", ctx.dispersion.label());
    r.push("config_hash", ctx.config.hash());
    r.number("truncation", ctx.config.solver.truncation);
    let chosen: Vec<(&str, &SchmidtDecomposition<f64>, &crate::spectra::JointAmplitude<f64>)> = match target {
        SchmidtTarget::Jsa => vec![("jsa", &p.jsa_modes, &p.jsa)],
        SchmidtTarget::Mf => vec![("mf", &p.mf_modes, &p.mf)],
        SchmidtTarget::Both => vec![("jsa", &p.jsa_modes, &p.jsa), ("mf", &p.mf_modes, &p.mf)],
    };
    for (name, d, joint) in chosen {
        let files = d.export_modes(out.root(), &format!("{name}_mode"), ctx.unit())?;
        out.record(files);
        let recon = d.reconstruct();
        let rms = (recon
            .iter()
            .zip(&joint.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / recon.len() as f64)
            .sqrt();
        r.push(format!("{name}_rank"), d.rank());
        r.numbers(format!("{name}_coefficients"), d.coefficients.iter().copied());
        r.number(format!("{name}_schmidt_number"), crate::schmidt::schmidt_number(d));
        r.number(format!("{name}_purity"), crate::schmidt::purity(d).value);
        r.number(format!("{name}_residual"), d.residual);
        r.number(format!("{name}_reconstruction_rms"), rms);
        r.number(format!("{name}_orthonormality_error"), d.orthonormality_error());
    }
    out.finish(ctx, "schmidt", &r)?;
    Ok(r)
}
