//! Joint spectral functions of the two processes on uniform frequency grids:
//! the cavity-filtered SFWM joint spectral amplitude and the DFG mapping
//! function.

use std::io::Write;
use std::path::Path;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{Dispersion, SampledDispersion};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::scalar::{sinc, Real};

/// How bandwidths and plotted frequency offsets quoted in "THz" map onto
/// angular frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthUnit {
    /// 1 THz ≙ 1 rad/ps.
    #[default]
    Angular,
    /// 1 THz ≙ 2π rad/ps.
    Cyclic,
}

impl BandwidthUnit {
    pub fn to_rad_per_ps<T: Real>(self, thz: T) -> T {
        match self {
            BandwidthUnit::Angular => thz,
            BandwidthUnit::Cyclic => thz * T::TAU(),
        }
    }

    pub fn from_rad_per_ps<T: Real>(self, omega: T) -> T {
        match self {
            BandwidthUnit::Angular => omega,
            BandwidthUnit::Cyclic => omega / T::TAU(),
        }
    }
}

/// Knot spacing of the `k(ω)` band samplers, rad/ps.
const SAMPLER_SPACING: f64 = 0.05;
pub const MIN_GRID_POINTS: usize = 64;

/// One uniformly sampled frequency axis, symmetric about its centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis<T> {
    pub center: T,
    pub half_span: T,
    pub points: usize,
}

impl<T: Real> Axis<T> {
    pub fn new(center: T, half_span: T, points: usize) -> Self {
        Self {
            center,
            half_span,
            points,
        }
    }

    pub fn spacing(&self) -> T {
        T::lit(2.0) * self.half_span / T::from_usize_lossy(self.points - 1)
    }

    /// Offset of sample `i` from the centre.
    #[inline]
    pub fn offset(&self, i: usize) -> T {
        -self.half_span + self.spacing() * T::from_usize_lossy(i)
    }

    pub fn offsets(&self) -> Vec<T> {
        let d = self.spacing();
        (0..self.points)
            .map(|i| -self.half_span + d * T::from_usize_lossy(i))
            .collect()
    }

    pub fn omegas(&self) -> Vec<T> {
        self.offsets().into_iter().map(|d| self.center + d).collect()
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.points < MIN_GRID_POINTS {
            return Err(Error::Config(format!(
                "{name} axis needs at least {MIN_GRID_POINTS} points, got {}",
                self.points
            )));
        }
        if !(self.half_span > T::zero() && self.center > self.half_span) {
            return Err(Error::Config(format!(
                "{name} axis must have 0 < half-span < centre (got centre {}, half-span {})",
                self.center, self.half_span
            )));
        }
        Ok(())
    }

    /// Same sampling (within rounding) as another axis.
    pub fn matches(&self, other: &Axis<T>) -> bool {
        let tol = T::lit(1e-9) * self.center.abs().max(T::one());
        self.points == other.points
            && (self.center - other.center).abs() <= tol
            && (self.half_span - other.half_span).abs() <= tol
    }
}

/// Two-dimensional grid; axis `a` is the signal, axis `b` the idler or the
/// converted field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGrid<T> {
    pub a: Axis<T>,
    pub b: Axis<T>,
}

impl<T: Real> SpectralGrid<T> {
    pub fn new(a: Axis<T>, b: Axis<T>) -> Result<Self> {
        let g = Self { a, b };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        self.a.validate("first")?;
        self.b.validate("second")
    }

    pub fn len(&self) -> usize {
        self.a.points * self.b.points
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Area element `Δω_a·Δω_b`.
    pub fn cell(&self) -> T {
        self.a.spacing() * self.b.spacing()
    }

    pub fn transposed(&self) -> Self {
        Self { a: self.b, b: self.a }
    }

    fn require_coverage(axis: &Axis<T>, sigma: T, name: &str) -> Result<()> {
        if T::lit(2.0) * axis.half_span < T::lit(6.0) * sigma {
            return Err(Error::Config(format!(
                "{name} axis spans {} rad/ps, less than six bandwidths ({} rad/ps)",
                T::lit(2.0) * axis.half_span,
                T::lit(6.0) * sigma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpSpec<T> {
    pub center: T,
    pub sigma: T,
    pub power_mw: T,
}

impl<T: Real> PumpSpec<T> {
    pub fn new(center: T, sigma: T, power_mw: T) -> Result<Self> {
        if !(sigma > T::zero()) || !(power_mw >= T::zero()) || !(center > T::zero()) {
            return Err(Error::Config(format!(
                "pump needs centre > 0, bandwidth > 0 and power ≥ 0 (got {center}, {sigma}, {power_mw})"
            )));
        }
        Ok(Self {
            center,
            sigma,
            power_mw,
        })
    }

    /// `α(ω) = exp(−(ω − ω₀)²/(2σ²))`.
    #[inline]
    pub fn envelope(&self, omega: T) -> T {
        pump_envelope(omega - self.center, self.sigma)
    }
}

/// Transform-limited Gaussian envelope at an offset from its centre.
#[inline]
pub fn pump_envelope<T: Real>(offset: T, sigma: T) -> T {
    (-(offset * offset) / (T::lit(2.0) * sigma * sigma)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavitySpec<T> {
    pub round_trip_um: T,
    pub reflectivity: T,
    /// When set, the round-trip phase is referenced to this frequency so a
    /// resonance sits exactly on it.
    pub resonance: Option<T>,
}

impl<T: Real> CavitySpec<T> {
    pub fn new(round_trip_um: T, reflectivity: T) -> Result<Self> {
        if !(round_trip_um > T::zero()) || !(reflectivity > T::zero() && reflectivity < T::one()) {
            return Err(Error::Config(format!(
                "cavity needs l_c > 0 and 0 < R < 1 (got {round_trip_um}, {reflectivity})"
            )));
        }
        Ok(Self {
            round_trip_um,
            reflectivity,
            resonance: None,
        })
    }

    pub fn tuned_to(mut self, omega: T) -> Self {
        self.resonance = Some(omega);
        self
    }

    /// `A = (1 − R)/(1 − R·e^{iφ})` for a round-trip phase `φ`.
    #[inline]
    pub fn transfer_from_phase(&self, phase: T) -> Complex<T> {
        let r = self.reflectivity;
        let denom = Complex::new(T::one() - r * phase.cos(), -r * phase.sin());
        Complex::new(T::one() - r, T::zero()) / denom
    }
}

/// Airy transfer `(1 − R)/(1 − R·e^{i·k(ω)·l_c})`, referenced to the tuned
/// resonance when the cavity has one.
pub fn airy_cavity<T: Real, D: Dispersion<T> + ?Sized>(omega: T, cavity: &CavitySpec<T>, model: &D) -> Result<Complex<T>> {
    let k = model.propagation_constant(omega)?;
    let k0 = match cavity.resonance {
        Some(w0) => model.propagation_constant(w0)?,
        None => T::zero(),
    };
    Ok(cavity.transfer_from_phase((k - k0) * cavity.round_trip_um))
}

/// Gaussian amplitude bandpass; an infinite bandwidth means no filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec<T> {
    pub center: T,
    pub sigma: T,
}

impl<T: Real> FilterSpec<T> {
    pub fn new(center: T, sigma: T) -> Result<Self> {
        if !(sigma > T::zero()) {
            return Err(Error::Config(format!("filter bandwidth must be positive, got {sigma}")));
        }
        Ok(Self { center, sigma })
    }

    pub fn open(center: T) -> Self {
        Self {
            center,
            sigma: T::infinity(),
        }
    }

    #[inline]
    pub fn transmission(&self, omega: T) -> T {
        if self.sigma.is_infinite() {
            T::one()
        } else {
            pump_envelope(omega - self.center, self.sigma)
        }
    }
}

/// Complex joint spectral function sampled on a grid, row-major with
/// `values[ia * b.points + ib]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointAmplitude<T> {
    pub grid: SpectralGrid<T>,
    pub values: Vec<Complex<T>>,
    /// `Σ|F|²·Δω_a·Δω_b` before normalization.
    pub raw_norm_sq: T,
    pub normalized: bool,
}

impl<T: Real> JointAmplitude<T> {
    /// Wraps sampled values and normalizes them to unit integrated intensity.
    pub fn from_values(grid: SpectralGrid<T>, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Contract(format!(
                "{} samples for a {}×{} grid",
                values.len(),
                grid.a.points,
                grid.b.points
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Contract("joint amplitude contains non-finite samples".into()));
        }
        let mut j = Self {
            grid,
            values,
            raw_norm_sq: T::zero(),
            normalized: false,
        };
        j.raw_norm_sq = j.norm_sq();
        if !(j.raw_norm_sq > T::zero()) {
            return Err(Error::Contract("joint amplitude vanishes on the whole grid".into()));
        }
        let scale = T::one() / j.raw_norm_sq.sqrt();
        for v in &mut j.values {
            *v = v.scale(scale);
        }
        j.normalized = true;
        Ok(j)
    }

    pub fn norm_sq(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, v| acc + v.norm_sqr()) * self.grid.cell()
    }

    #[inline]
    pub fn at(&self, ia: usize, ib: usize) -> Complex<T> {
        self.values[ia * self.grid.b.points + ib]
    }

    /// Swaps the roles of the two axes.
    pub fn transposed(&self) -> Self {
        let (na, nb) = (self.grid.a.points, self.grid.b.points);
        let mut values = Vec::with_capacity(self.values.len());
        for ib in 0..nb {
            for ia in 0..na {
                values.push(self.values[ia * nb + ib]);
            }
        }
        Self {
            grid: self.grid.transposed(),
            values,
            raw_norm_sq: self.raw_norm_sq,
            normalized: self.normalized,
        }
    }

    /// Writes `<omega_a> <omega_b> re im` rows plus a `<path>.meta` sidecar
    /// describing the grid.
    pub fn export(&self, path: &Path, names: (&str, &str)) -> Result<Vec<std::path::PathBuf>> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_values(&mut w, names).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
        let mut meta_path = path.as_os_str().to_owned();
        meta_path.push(".meta");
        let meta_path = std::path::PathBuf::from(meta_path);
        let mut m = Vec::new();
        self.write_metadata(&mut m, names).map_err(|e| Error::io(&meta_path, e))?;
        std::fs::write(&meta_path, m).map_err(|e| Error::io(&meta_path, e))?;
        Ok(vec![path.to_path_buf(), meta_path])
    }

    pub fn write_values(&self, mut w: impl Write, names: (&str, &str)) -> std::io::Result<()> {
        writeln!(w, "{} {} re im", names.0, names.1)?;
        let wa = self.grid.a.omegas();
        let wb = self.grid.b.omegas();
        for (ia, &x) in wa.iter().enumerate() {
            for (ib, &y) in wb.iter().enumerate() {
                let v = self.at(ia, ib);
                writeln!(w, "{} {} {:e} {:e}", x, y, v.re, v.im)?;
            }
        }
        Ok(())
    }

    pub fn write_metadata(&self, mut w: impl Write, names: (&str, &str)) -> std::io::Result<()> {
        for (name, axis) in [(names.0, &self.grid.a), (names.1, &self.grid.b)] {
            writeln!(w, "{name}_center_rad_per_ps = {}", axis.center)?;
            writeln!(w, "{name}_half_span_rad_per_ps = {}", axis.half_span)?;
            writeln!(w, "{name}_points = {}", axis.points)?;
        }
        writeln!(w, "normalized = {}", self.normalized)?;
        writeln!(w, "raw_norm_sq = {:e}", self.raw_norm_sq)
    }

    /// Writes `|F|²` normalized to its maximum against frequency offsets in
    /// the chosen THz convention.
    pub fn write_intensity(&self, mut w: impl Write, header: (&str, &str), unit: BandwidthUnit) -> std::io::Result<()> {
        writeln!(w, "{} {} intensity_normalized", header.0, header.1)?;
        let peak = self.values.iter().fold(T::zero(), |m, v| m.max(v.norm_sqr()));
        let peak = if peak > T::zero() { peak } else { T::one() };
        let da = self.grid.a.offsets();
        let db = self.grid.b.offsets();
        for (ia, &x) in da.iter().enumerate() {
            for (ib, &y) in db.iter().enumerate() {
                writeln!(
                    w,
                    "{} {} {:e}",
                    unit.from_rad_per_ps(x),
                    unit.from_rad_per_ps(y),
                    self.at(ia, ib).norm_sqr() / peak
                )?;
            }
        }
        Ok(())
    }
}

fn sampler<T: Real, D: Dispersion<T> + ?Sized>(
    model: &D,
    center: T,
    half_width: T,
    field: &'static str,
) -> Result<SampledDispersion<T>> {
    let margin = T::lit(4.0 * SAMPLER_SPACING);
    let (lo, hi) = (center - half_width - margin, center + half_width + margin);
    if !(lo > T::zero()) {
        return Err(Error::Contract(format!("{field} band reaches non-positive frequency")));
    }
    SampledDispersion::covering(model, lo, hi, T::lit(SAMPLER_SPACING)).map_err(|e| e.in_field(field))
}

/// Cavity-modified SFWM joint spectral amplitude on `grid` (signal × idler):
///
/// `F = exp(−(δ_s+δ_i)²/(4σ₁²))·sinc(Δk·l_c/2)·e^{iΔk·l_c/2}·A(ω_i)·f(ω_i)`,
///
/// with `Δk = 2k((ω_s+ω_i)/2) − k(ω_s) − k(ω_i)` and offsets measured from
/// energy-conserving centres `ω_s0 + ω_i0 = 2ω₁`. The idler axis is centred
/// at `2ω₁ − ω_s0` regardless of `grid.b.center`, which must agree.
pub fn sfwm_jsa<T: Real, D: Dispersion<T> + ?Sized>(
    grid: &SpectralGrid<T>,
    pump: &PumpSpec<T>,
    cavity: &CavitySpec<T>,
    filter: &FilterSpec<T>,
    model: &D,
) -> Result<JointAmplitude<T>> {
    grid.validate()?;
    SpectralGrid::require_coverage(&grid.a, pump.sigma, "signal")?;
    let idler0 = T::lit(2.0) * pump.center - grid.a.center;
    if !Axis::new(idler0, grid.b.half_span, grid.b.points).matches(&grid.b) {
        return Err(Error::Contract(format!(
            "idler axis centre {} is not energy-conserving (expected {idler0})",
            grid.b.center
        )));
    }
    // Band samplers: evaluation fails here, before synthesis, if any part of
    // the grid is unguided.
    let ks = sampler(model, grid.a.center, grid.a.half_span, "signal")?;
    let ki = sampler(model, grid.b.center, grid.b.half_span, "idler")?;
    let half_sum = (grid.a.half_span + grid.b.half_span) * T::lit(0.5);
    let kp = sampler(model, pump.center, half_sum, "pump1")?;

    let k_res = match cavity.resonance {
        Some(w) => Some(model.propagation_constant(w).map_err(|e| e.in_field("idler"))?),
        None => None,
    };
    let lc = cavity.round_trip_um;
    let half = T::lit(0.5);
    let four_s2 = T::lit(4.0) * pump.sigma * pump.sigma;

    let da = grid.a.offsets();
    let db = grid.b.offsets();
    let ks_row: Vec<T> = da.iter().map(|&d| ks.k(grid.a.center + d)).collect();
    let ki_col: Vec<T> = db.iter().map(|&d| ki.k(grid.b.center + d)).collect();
    // Idler-only factors: cavity transfer and filter.
    let idler_factor: Vec<Complex<T>> = db
        .iter()
        .zip(&ki_col)
        .map(|(&d, &k)| {
            let w = grid.b.center + d;
            let phase = (k - k_res.unwrap_or(T::zero())) * lc;
            cavity.transfer_from_phase(phase).scale(filter.transmission(w))
        })
        .collect();

    let values: Vec<Complex<T>> = (0..grid.a.points)
        .into_par_iter()
        .flat_map_iter(|ia| {
            let (ds, k_s) = (da[ia], ks_row[ia]);
            let (db, ki_col, idler_factor, kp) = (&db, &ki_col, &idler_factor, &kp);
            (0..db.len()).map(move |ib| {
                let sum = ds + db[ib];
                let env = (-(sum * sum) / four_s2).exp();
                let k_pump = kp.k(pump.center + sum * half);
                let dk = T::lit(2.0) * k_pump - k_s - ki_col[ib];
                let x = dk * lc * half;
                let pm = Complex::from_polar(sinc(x), x);
                pm.scale(env) * idler_factor[ib]
            })
        })
        .collect();
    JointAmplitude::from_values(*grid, values)
}

/// Quadrature settings for the mapping-function integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappingQuadrature {
    pub nodes: usize,
    /// Half-width of the integration window in units of the combined
    /// bandwidth `σ₁σ₂/√(σ₁²+σ₂²)`.
    pub half_width_sigmas: f64,
}

impl Default for MappingQuadrature {
    fn default() -> Self {
        Self {
            nodes: 129,
            half_width_sigmas: 6.0,
        }
    }
}

/// DFG mapping function on `grid` (signal × converted):
///
/// `G = ∫dω′ α₁(ω′)·α₂(ω′ + ω_s − ω_r)·sinc(Δk·L/2)·e^{iΔk·L/2}`,
///
/// with `Δk = k(ω′) − k(ω′+ω_s−ω_r) + k(ω_s) − k(ω_r)`. The integrand's
/// envelope product is a Gaussian in ω′ whose centre moves with `ω_s − ω_r`,
/// so Gauss–Legendre nodes are placed on a window that follows it.
pub fn dfg_mapping_function<T: Real, D: Dispersion<T> + ?Sized>(
    grid: &SpectralGrid<T>,
    pump1: &PumpSpec<T>,
    pump2: &PumpSpec<T>,
    length_um: T,
    model: &D,
    quad: MappingQuadrature,
) -> Result<JointAmplitude<T>> {
    grid.validate()?;
    if !(length_um > T::zero()) {
        return Err(Error::Config(format!("DFG length must be positive, got {length_um}")));
    }
    if quad.nodes < 2 {
        return Err(Error::Config("mapping-function quadrature needs at least 2 nodes".into()));
    }
    SpectralGrid::require_coverage(&grid.a, pump1.sigma, "signal")?;
    let converted0 = pump1.center - pump2.center + grid.a.center;
    if !Axis::new(converted0, grid.b.half_span, grid.b.points).matches(&grid.b) {
        return Err(Error::Contract(format!(
            "converted axis centre {} is not energy-conserving (expected {converted0})",
            grid.b.center
        )));
    }
    let (s1, s2) = (pump1.sigma, pump2.sigma);
    let s_sq = s1 * s1 + s2 * s2;
    let sigma_eff = s1 * s2 / s_sq.sqrt();
    let reach = T::lit(quad.half_width_sigmas) * sigma_eff;
    let c_max = grid.a.half_span + grid.b.half_span;
    let k1 = sampler(model, pump1.center, c_max * s1 * s1 / s_sq + reach, "pump1")?;
    let k2 = sampler(model, pump2.center, c_max * s2 * s2 / s_sq + reach, "pump2")?;
    let ks = sampler(model, grid.a.center, grid.a.half_span, "signal")?;
    let kr = sampler(model, grid.b.center, grid.b.half_span, "converted")?;

    let (x, w) = gauss_legendre::<T>(quad.nodes);
    let half = T::lit(0.5);
    let da = grid.a.offsets();
    let db = grid.b.offsets();
    let ks_row: Vec<T> = da.iter().map(|&d| ks.k(grid.a.center + d)).collect();
    let kr_col: Vec<T> = db.iter().map(|&d| kr.k(grid.b.center + d)).collect();

    let values: Vec<Complex<T>> = (0..grid.a.points)
        .into_par_iter()
        .flat_map_iter(|ia| {
            let (x, w, db, kr_col, k1, k2) = (&x, &w, &db, &kr_col, &k1, &k2);
            let (ds, k_s) = (da[ia], ks_row[ia]);
            (0..db.len()).map(move |ib| {
                let c = ds - db[ib];
                let centre = -c * s1 * s1 / s_sq;
                let mut acc = Complex::new(T::zero(), T::zero());
                for (&xn, &wn) in x.iter().zip(w.iter()) {
                    let d1 = centre + reach * xn;
                    let d2 = d1 + c;
                    let env = pump_envelope(d1, s1) * pump_envelope(d2, s2);
                    let dk = k1.k(pump1.center + d1) - k2.k(pump2.center + d2) + k_s - kr_col[ib];
                    let arg = dk * length_um * half;
                    acc += Complex::from_polar(sinc(arg) * env * wn, arg);
                }
                acc.scale(reach)
            })
        })
        .collect();
    JointAmplitude::from_values(*grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::DispersionModel;
    use crate::material::WaveguideGeometry;
    use crate::scalar::omega_from_wavelength;

    fn model(w: f64) -> DispersionModel<f64> {
        DispersionModel::effective_index_method(WaveguideGeometry::silicon_nitride_strip(w, 0.7, 1.0).unwrap())
    }

    fn jsa_setup(points: usize, sigma_f: f64) -> JointAmplitude<f64> {
        let w1 = omega_from_wavelength(0.822);
        let ws = omega_from_wavelength(1.253);
        let wi = 2.0 * w1 - ws;
        let pump = PumpSpec::new(w1, 6.0, 1.0).unwrap();
        let span_i = if sigma_f.is_finite() { 5.0 * sigma_f } else { 60.0 };
        let grid = SpectralGrid::new(Axis::new(ws, 30.0, points), Axis::new(wi, span_i, points)).unwrap();
        let cavity = CavitySpec::new(43.0, 0.86).unwrap().tuned_to(wi);
        let filter = if sigma_f.is_finite() {
            FilterSpec::new(wi, sigma_f).unwrap()
        } else {
            FilterSpec::open(wi)
        };
        sfwm_jsa(&grid, &pump, &cavity, &filter, &model(0.9976)).unwrap()
    }

    #[test]
    fn envelope_shape() {
        assert_eq!(pump_envelope(0.0, 2.0), 1.0);
        assert!((pump_envelope(2.0, 2.0) - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(pump_envelope(1.3, 2.0), pump_envelope(-1.3, 2.0));
    }

    #[test]
    fn airy_closed_forms() {
        let c = CavitySpec::new(43.0, 0.86).unwrap();
        assert!((c.transfer_from_phase(std::f64::consts::TAU * 3.0) - Complex::new(1.0, 0.0)).norm() < 1e-12);
        let anti = c.transfer_from_phase(std::f64::consts::PI).norm();
        assert!((anti - 0.14 / 1.86).abs() < 1e-12);
        assert!((anti - 0.0753).abs() < 1e-4);
    }

    #[test]
    fn resonance_spacing_matches_group_index() {
        let m = model(0.9976);
        let cav = CavitySpec::new(43.0, 0.86).unwrap();
        let w0 = omega_from_wavelength(0.612);
        // locate successive maxima of |A| on a fine scan
        let n = 20001;
        let omegas: Vec<f64> = (0..n).map(|i| w0 - 30.0 + 60.0 * i as f64 / (n - 1) as f64).collect();
        let mag: Vec<f64> = omegas.iter().map(|&w| airy_cavity(w, &cav, &m).unwrap().norm()).collect();
        let peaks: Vec<f64> = (1..n - 1)
            .filter(|&i| mag[i] > mag[i - 1] && mag[i] >= mag[i + 1])
            .map(|i| omegas[i])
            .collect();
        assert!(peaks.len() >= 2);
        let mid = 0.5 * (peaks[0] + peaks[1]);
        let fsr = std::f64::consts::TAU * crate::scalar::SPEED_OF_LIGHT_UM_PER_PS / (m.group_index(mid).unwrap() * 43.0);
        assert!(((peaks[1] - peaks[0]) - fsr).abs() / fsr < 2e-3, "{} vs {fsr}", peaks[1] - peaks[0]);
    }

    #[test]
    fn jsa_is_normalized_and_finite() {
        let j = jsa_setup(64, 1.0);
        assert!((j.norm_sq() - 1.0).abs() < 1e-10);
        assert!(j.raw_norm_sq > 0.0);
    }

    #[test]
    fn open_filter_shows_several_resonances() {
        let j = jsa_setup(128, f64::INFINITY);
        // marginal idler intensity
        let nb = j.grid.b.points;
        let marg: Vec<f64> = (0..nb).map(|ib| (0..j.grid.a.points).map(|ia| j.at(ia, ib).norm_sqr()).sum()).collect();
        let max = marg.iter().cloned().fold(0.0, f64::max);
        let peaks = (1..nb - 1)
            .filter(|&i| marg[i] > marg[i - 1] && marg[i] >= marg[i + 1] && marg[i] > 0.05 * max)
            .count();
        assert!(peaks >= 3, "{peaks} resonances");
    }

    #[test]
    fn jsa_phase_matches_direct_evaluation() {
        let j = jsa_setup(64, 1.0);
        let m = model(0.9976);
        let w1 = omega_from_wavelength(0.822);
        let cav = CavitySpec::new(43.0, 0.86).unwrap().tuned_to(j.grid.b.center);
        let filt = FilterSpec::new(j.grid.b.center, 1.0).unwrap();
        let ratio = |ia: usize, ib: usize| {
            let ws = j.grid.a.center + j.grid.a.offset(ia);
            let wi = j.grid.b.center + j.grid.b.offset(ib);
            let dk = 2.0 * m.propagation_constant(0.5 * (ws + wi)).unwrap()
                - m.propagation_constant(ws).unwrap()
                - m.propagation_constant(wi).unwrap();
            let sum = ws + wi - 2.0 * w1;
            let x = dk * 43.0 / 2.0;
            let f = Complex::from_polar(sinc(x) * (-(sum * sum) / 144.0).exp(), x)
                * airy_cavity(wi, &cav, &m).unwrap()
                * filt.transmission(wi);
            j.at(ia, ib) / f
        };
        let r0 = ratio(32, 32);
        for (ia, ib) in [(3, 60), (17, 5), (40, 40), (63, 0)] {
            assert!((ratio(ia, ib) - r0).norm() / r0.norm() < 1e-6);
        }
    }

    fn mf_setup(points: usize, nodes: usize, length: f64) -> JointAmplitude<f64> {
        let w1 = omega_from_wavelength(0.822);
        let w2 = omega_from_wavelength(1.554);
        let ws = omega_from_wavelength(1.253);
        let grid = SpectralGrid::new(Axis::new(ws, 30.0, points), Axis::new(w1 - w2 + ws, 30.0, points)).unwrap();
        let p1 = PumpSpec::new(w1, 6.0, 1.0).unwrap();
        let p2 = PumpSpec::new(w2, 0.7, 1.0).unwrap();
        dfg_mapping_function(
            &grid,
            &p1,
            &p2,
            length,
            &model(1.9133),
            MappingQuadrature {
                nodes,
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn mapping_function_converges_in_nodes() {
        let a = mf_setup(64, 129, 1e4);
        let b = mf_setup(64, 258, 1e4);
        let rms = (a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() / a.values.len() as f64).sqrt();
        assert!(rms < 1e-8, "{rms}");
    }

    #[test]
    fn mapping_function_ridge_follows_pump_difference() {
        // Short waveguide: G is the Gaussian product integral, maximal on δ_s = δ_r.
        let g = mf_setup(64, 129, 1.0);
        let n = 64;
        for ia in [10, 32, 50] {
            let best = (0..n).max_by(|&x, &y| g.at(ia, x).norm().partial_cmp(&g.at(ia, y).norm()).unwrap()).unwrap();
            assert!((best as i64 - ia as i64).abs() <= 1);
        }
        // Transverse decay against the combined-Gaussian closed form
        // exp(−c²/(2(σ₁²+σ₂²))), with c = δ_s − δ_r.
        let s_sq = 36.0 + 0.49;
        let ref_val = g.at(32, 32).norm();
        for k in 1..4 {
            let c = g.grid.a.offset(32) - g.grid.b.offset(32 - k);
            let expect = (-(c * c) / (2.0 * s_sq)).exp();
            assert!((g.at(32, 32 - k).norm() / ref_val - expect).abs() < 1e-3);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(SpectralGrid::new(Axis::new(1500.0, 10.0, 32), Axis::new(1500.0, 10.0, 64)).is_err());
        let m = model(1.0);
        let w1 = omega_from_wavelength(0.822);
        let ws = omega_from_wavelength(1.253);
        let grid = SpectralGrid::new(Axis::new(ws, 5.0, 64), Axis::new(2.0 * w1 - ws, 5.0, 64)).unwrap();
        let pump = PumpSpec::new(w1, 6.0, 1.0).unwrap();
        let cav = CavitySpec::new(43.0, 0.86).unwrap();
        assert!(sfwm_jsa(&grid, &pump, &cav, &FilterSpec::open(2.0 * w1 - ws), &m).is_err());
    }
}
