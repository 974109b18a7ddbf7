//! Phase mismatch of the two nonlinear processes, the joint design
//! objective, geometry search, wavelength re-phasematching and zero contours.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;

use crate::dispersion::{Dispersion, DispersionModel};
use crate::error::{Error, Result};
use crate::optimize::{nelder_mead, SimplexOptions};
use crate::scalar::{linspace, omega_from_wavelength, wavelength_from_omega, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProcessKind {
    Sfwm,
    Dfg,
}

impl ProcessKind {
    pub fn label(self) -> &'static str {
        match self {
            ProcessKind::Sfwm => "sfwm",
            ProcessKind::Dfg => "dfg",
        }
    }
}

/// Central wavelengths shared by both processes: the common pump-1 and
/// signal, and the DFG pump-2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignWavelengths<T> {
    pub pump1_um: T,
    pub pump2_um: T,
    pub signal_um: T,
}

impl<T: Real> DesignWavelengths<T> {
    pub fn omegas(&self) -> (T, T, T) {
        (
            omega_from_wavelength(self.pump1_um),
            omega_from_wavelength(self.pump2_um),
            omega_from_wavelength(self.signal_um),
        )
    }

    pub fn sfwm(&self) -> ProcessSpec<T> {
        ProcessSpec::sfwm(self.pump1_um, self.signal_um)
    }

    pub fn dfg(&self) -> ProcessSpec<T> {
        ProcessSpec::dfg(self.pump1_um, self.pump2_um, self.signal_um)
    }
}

/// Input wavelengths of one process; the remaining field follows from
/// energy conservation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessSpec<T> {
    pub kind: ProcessKind,
    pub pump1_um: T,
    pub pump2_um: Option<T>,
    pub signal_um: T,
}

impl<T: Real> ProcessSpec<T> {
    pub fn sfwm(pump1_um: T, signal_um: T) -> Self {
        Self {
            kind: ProcessKind::Sfwm,
            pump1_um,
            pump2_um: None,
            signal_um,
        }
    }

    pub fn dfg(pump1_um: T, pump2_um: T, signal_um: T) -> Self {
        Self {
            kind: ProcessKind::Dfg,
            pump1_um,
            pump2_um: Some(pump2_um),
            signal_um,
        }
    }

    /// Angular frequency of the derived field (idler for SFWM, converted
    /// signal for DFG).
    pub fn derived_omega(&self) -> T {
        let w1 = omega_from_wavelength(self.pump1_um);
        let ws = omega_from_wavelength(self.signal_um);
        match (self.kind, self.pump2_um) {
            (ProcessKind::Dfg, Some(l2)) => converted_omega(w1, omega_from_wavelength(l2), ws),
            _ => idler_omega(w1, ws),
        }
    }

    pub fn derived_wavelength_um(&self) -> T {
        wavelength_from_omega(self.derived_omega())
    }
}

/// `ω_i = 2ω₁ − ω_s`.
#[inline]
pub fn idler_omega<T: Real>(w1: T, ws: T) -> T {
    T::lit(2.0) * w1 - ws
}

/// `ω_r = ω₁ − ω₂ + ω_s`, exact on both degenerate branches.
#[inline]
pub fn converted_omega<T: Real>(w1: T, w2: T, ws: T) -> T {
    if w2 == ws {
        w1
    } else {
        w1 - w2 + ws
    }
}

/// A phase mismatch together with the signed propagation constants that
/// make it up, in summation order.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasematchResult<T> {
    pub delta_k: T,
    pub contributions: Vec<(&'static str, T)>,
}

impl<T: Real> PhasematchResult<T> {
    fn from_terms(contributions: Vec<(&'static str, T)>) -> Self {
        let delta_k = contributions.iter().fold(T::zero(), |acc, &(_, v)| acc + v);
        Self { delta_k, contributions }
    }
}

fn k_of<T: Real, D: Dispersion<T> + ?Sized>(model: &D, omega: T, field: &'static str) -> Result<T> {
    if !(omega > T::zero()) {
        return Err(Error::Contract(format!("{field} frequency {omega} rad/ps is not positive")));
    }
    model.propagation_constant(omega).map_err(|e| e.in_field(field))
}

/// `Δk = 2k(ω₁) − k(ω_s) − k(ω_i)` with `ω_i = 2ω₁ − ω_s`.
pub fn delta_k_sfwm<T: Real, D: Dispersion<T> + ?Sized>(model: &D, w1: T, ws: T) -> Result<PhasematchResult<T>> {
    let wi = idler_omega(w1, ws);
    let k1 = k_of(model, w1, "pump1")?;
    let ks = k_of(model, ws, "signal")?;
    let ki = k_of(model, wi, "idler")?;
    Ok(PhasematchResult::from_terms(vec![
        ("pump1", T::lit(2.0) * k1),
        ("signal", -ks),
        ("idler", -ki),
    ]))
}

/// `Δk = k(ω₁) − k(ω₂) + k(ω_s) − k(ω_r)` with `ω_r = ω₁ − ω₂ + ω_s`.
pub fn delta_k_dfg<T: Real, D: Dispersion<T> + ?Sized>(model: &D, w1: T, w2: T, ws: T) -> Result<PhasematchResult<T>> {
    let wr = converted_omega(w1, w2, ws);
    let k1 = k_of(model, w1, "pump1")?;
    let k2 = k_of(model, w2, "pump2")?;
    let ks = k_of(model, ws, "signal")?;
    let kr = k_of(model, wr, "converted")?;
    Ok(PhasematchResult::from_terms(vec![
        ("pump1", k1),
        ("pump2", -k2),
        ("signal", ks),
        ("converted", -kr),
    ]))
}

/// SFWM mismatch with its double zero at `ω_s = ω₁` divided out.
pub fn deflated_sfwm<T: Real, D: Dispersion<T> + ?Sized>(model: &D, w1: T, ws: T) -> Result<T> {
    let d = ws - w1;
    Ok(delta_k_sfwm(model, w1, ws)?.delta_k / (d * d))
}

/// DFG mismatch with its trivial zeros at `ω₂ = ω₁` and `ω₂ = ω_s` divided out.
pub fn deflated_dfg<T: Real, D: Dispersion<T> + ?Sized>(model: &D, w1: T, w2: T, ws: T) -> Result<T> {
    Ok(delta_k_dfg(model, w1, w2, ws)?.delta_k / ((w1 - w2) * (ws - w2)))
}

/// `Δk_sfwm² + Δk_dfg²` at fixed wavelengths; `+∞` where any field is unguided.
pub fn objective<T: Real, S, D>(sfwm: &S, dfg: &D, wavelengths: &DesignWavelengths<T>) -> T
where
    S: Dispersion<T> + ?Sized,
    D: Dispersion<T> + ?Sized,
{
    let a = sfwm_term(sfwm, wavelengths);
    let b = dfg_term(dfg, wavelengths);
    a + b
}

fn sfwm_term<T: Real, S: Dispersion<T> + ?Sized>(model: &S, wl: &DesignWavelengths<T>) -> T {
    let (w1, _, ws) = wl.omegas();
    match delta_k_sfwm(model, w1, ws) {
        Ok(r) if r.delta_k.is_finite() => r.delta_k * r.delta_k,
        _ => T::infinity(),
    }
}

fn dfg_term<T: Real, D: Dispersion<T> + ?Sized>(model: &D, wl: &DesignWavelengths<T>) -> T {
    let (w1, w2, ws) = wl.omegas();
    match delta_k_dfg(model, w1, w2, ws) {
        Ok(r) if r.delta_k.is_finite() => r.delta_k * r.delta_k,
        _ => T::infinity(),
    }
}

/// Inclusive sampling of one search dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRange<T> {
    pub lo: T,
    pub hi: T,
    pub step: T,
}

impl<T: Real> AxisRange<T> {
    pub fn new(lo: T, hi: T, step: T) -> Self {
        Self { lo, hi, step }
    }

    /// A degenerate range holding one value.
    pub fn fixed(value: T) -> Self {
        Self {
            lo: value,
            hi: value,
            step: T::one(),
        }
    }

    pub fn is_fixed(&self) -> bool {
        self.lo == self.hi
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo > T::zero() && self.hi >= self.lo && self.step > T::zero()) {
            return Err(Error::Config(format!(
                "search range for {name} must satisfy 0 < lo ≤ hi and step > 0 (got {}..{} step {})",
                self.lo, self.hi, self.step
            )));
        }
        Ok(())
    }

    pub fn samples(&self) -> Vec<T> {
        if self.is_fixed() {
            return vec![self.lo];
        }
        let n = ((self.hi - self.lo) / self.step + T::lit(1e-9)).floor().to_usize().unwrap_or(0) + 1;
        let mut v: Vec<T> = (0..n).map(|i| self.lo + self.step * T::from_usize_lossy(i)).collect();
        if let Some(last) = v.last() {
            if self.hi - *last > self.step * T::lit(1e-6) {
                v.push(self.hi);
            }
        }
        v
    }

    fn contains(&self, x: T) -> bool {
        x >= self.lo && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometrySearchSpace<T> {
    pub height: AxisRange<T>,
    pub width_sfwm: AxisRange<T>,
    pub width_dfg: AxisRange<T>,
    /// Absolute simplex tolerance on every coordinate, µm.
    pub tolerance: T,
}

impl<T: Real> GeometrySearchSpace<T> {
    /// Heights 0.3–0.9 µm in 25 nm steps, widths 0.6–2.2 µm in 2 nm steps.
    pub fn default_bounds() -> Self {
        Self {
            height: AxisRange::new(T::lit(0.3), T::lit(0.9), T::lit(0.025)),
            width_sfwm: AxisRange::new(T::lit(0.6), T::lit(2.2), T::lit(0.002)),
            width_dfg: AxisRange::new(T::lit(0.6), T::lit(2.2), T::lit(0.002)),
            tolerance: T::lit(1e-5),
        }
    }

    pub fn with_fixed_height(mut self, height_um: T) -> Self {
        self.height = AxisRange::fixed(height_um);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.height.validate("height")?;
        self.width_sfwm.validate("SFWM width")?;
        self.width_dfg.validate("DFG width")?;
        if !(self.tolerance > T::zero()) {
            return Err(Error::Config("search tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryOptimum<T> {
    pub height_um: T,
    pub width_sfwm_um: T,
    pub width_dfg_um: T,
    pub objective: T,
    /// Best value found on the coarse grid, before refinement.
    pub grid_objective: T,
}

/// One row of the objective surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveSample<T> {
    pub height_um: T,
    pub width_sfwm_um: T,
    pub width_dfg_um: T,
    pub value: T,
}

fn argmin<T: Real>(values: &[T]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if v.is_finite() && best.is_none_or(|b| *v < values[b]) {
            best = Some(i);
        }
    }
    best
}

/// Per-height separable scan: the objective has no cross term, so the two
/// widths are scanned independently.
struct HeightScan<T> {
    height: T,
    ws: T,
    ws_value: T,
    wd: T,
    wd_value: T,
}

fn scan_height<T: Real>(
    sfwm: &DispersionModel<T>,
    dfg: &DispersionModel<T>,
    space: &GeometrySearchSpace<T>,
    wl: &DesignWavelengths<T>,
    h: T,
) -> Option<HeightScan<T>> {
    let s_model = sfwm.with_height(h);
    let d_model = dfg.with_height(h);
    let ws = space.width_sfwm.samples();
    let wd = space.width_dfg.samples();
    let sv: Vec<T> = ws.iter().map(|&w| sfwm_term(&s_model.with_width(w), wl)).collect();
    let dv: Vec<T> = wd.iter().map(|&w| dfg_term(&d_model.with_width(w), wl)).collect();
    let (i, j) = (argmin(&sv)?, argmin(&dv)?);
    Some(HeightScan {
        height: h,
        ws: ws[i],
        ws_value: sv[i],
        wd: wd[j],
        wd_value: dv[j],
    })
}

/// Grid scan followed by simplex refinement from the best grid cell.
///
/// `sfwm` and `dfg` supply the dispersion source and materials; their widths
/// and heights are overridden by the search.
pub fn minimize_geometry<T: Real>(
    sfwm: &DispersionModel<T>,
    dfg: &DispersionModel<T>,
    space: &GeometrySearchSpace<T>,
    wl: &DesignWavelengths<T>,
) -> Result<GeometryOptimum<T>> {
    space.validate()?;
    let scans: Vec<Option<HeightScan<T>>> = space
        .height
        .samples()
        .par_iter()
        .map(|&h| scan_height(sfwm, dfg, space, wl, h))
        .collect();
    let best = scans
        .iter()
        .flatten()
        .map(|s| (s.ws_value + s.wd_value, s))
        .fold(None::<(T, &HeightScan<T>)>, |acc, (v, s)| match acc {
            Some((bv, _)) if bv <= v => acc,
            _ => Some((v, s)),
        })
        .ok_or_else(|| Error::Search("no guided geometry anywhere in the search space".into()))?;
    let (grid_value, cell) = best;

    let in_box = |h: T, a: T, b: T| space.height.contains(h) && space.width_sfwm.contains(a) && space.width_dfg.contains(b);
    let opts = SimplexOptions {
        x_tol: space.tolerance,
        ..SimplexOptions::default()
    };
    let (h, ws, wd, value) = if space.height.is_fixed() {
        // At fixed height the two widths decouple into 1-D problems.
        let h = cell.height;
        let s_model = sfwm.with_height(h);
        let d_model = dfg.with_height(h);
        let rs = nelder_mead(
            |x: &[T]| {
                if in_box(h, x[0], space.width_dfg.lo) {
                    sfwm_term(&s_model.with_width(x[0]), wl)
                } else {
                    T::infinity()
                }
            },
            &[cell.ws],
            &[space.width_sfwm.step],
            opts,
        );
        let rd = nelder_mead(
            |x: &[T]| {
                if in_box(h, space.width_sfwm.lo, x[0]) {
                    dfg_term(&d_model.with_width(x[0]), wl)
                } else {
                    T::infinity()
                }
            },
            &[cell.wd],
            &[space.width_dfg.step],
            opts,
        );
        (h, rs.x[0], rd.x[0], rs.value + rd.value)
    } else {
        let r = nelder_mead(
            |x: &[T]| {
                if !in_box(x[0], x[1], x[2]) {
                    return T::infinity();
                }
                objective(
                    &sfwm.with_height(x[0]).with_width(x[1]),
                    &dfg.with_height(x[0]).with_width(x[2]),
                    wl,
                )
            },
            &[cell.height, cell.ws, cell.wd],
            &[space.height.step, space.width_sfwm.step, space.width_dfg.step],
            opts,
        );
        (r.x[0], r.x[1], r.x[2], r.value)
    };
    // Refinement never loses to the grid.
    let (h, ws, wd, value) = if value <= grid_value {
        (h, ws, wd, value)
    } else {
        (cell.height, cell.ws, cell.wd, grid_value)
    };
    Ok(GeometryOptimum {
        height_um: h,
        width_sfwm_um: ws,
        width_dfg_um: wd,
        objective: value,
        grid_objective: grid_value,
    })
}

/// Minimum of the objective over both widths at each sampled height,
/// refined per height.
pub fn objective_profile<T: Real>(
    sfwm: &DispersionModel<T>,
    dfg: &DispersionModel<T>,
    space: &GeometrySearchSpace<T>,
    wl: &DesignWavelengths<T>,
) -> Result<Vec<ObjectiveSample<T>>> {
    space.validate()?;
    space
        .height
        .samples()
        .par_iter()
        .map(|&h| {
            let fixed = space.with_fixed_height(h);
            match minimize_geometry(sfwm, dfg, &fixed, wl) {
                Ok(o) => Ok(ObjectiveSample {
                    height_um: h,
                    width_sfwm_um: o.width_sfwm_um,
                    width_dfg_um: o.width_dfg_um,
                    value: o.objective,
                }),
                Err(Error::Search(_)) => Ok(ObjectiveSample {
                    height_um: h,
                    width_sfwm_um: T::nan(),
                    width_dfg_um: T::nan(),
                    value: T::infinity(),
                }),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Objective over the full (w_sfwm, w_dfg) grid at one height.
pub fn objective_surface<T: Real>(
    sfwm: &DispersionModel<T>,
    dfg: &DispersionModel<T>,
    height_um: T,
    widths_sfwm: &[T],
    widths_dfg: &[T],
    wl: &DesignWavelengths<T>,
) -> Vec<ObjectiveSample<T>> {
    let s_model = sfwm.with_height(height_um);
    let d_model = dfg.with_height(height_um);
    let sv: Vec<T> = widths_sfwm.par_iter().map(|&w| sfwm_term(&s_model.with_width(w), wl)).collect();
    let dv: Vec<T> = widths_dfg.par_iter().map(|&w| dfg_term(&d_model.with_width(w), wl)).collect();
    let mut out = Vec::with_capacity(sv.len() * dv.len());
    for (i, &ws) in widths_sfwm.iter().enumerate() {
        for (j, &wd) in widths_dfg.iter().enumerate() {
            out.push(ObjectiveSample {
                height_um,
                width_sfwm_um: ws,
                width_dfg_um: wd,
                value: sv[i] + dv[j],
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions<T> {
    /// Convergence threshold on both raw mismatches, rad/µm.
    pub tolerance: T,
    pub max_iterations: usize,
    /// Finite-difference step for the Jacobian, rad/ps.
    pub jacobian_step: T,
    /// Largest frequency move per iteration, rad/ps.
    pub max_step: T,
}

impl<T: Real> Default for NewtonOptions<T> {
    fn default() -> Self {
        Self {
            tolerance: T::lit(1e-10),
            max_iterations: 60,
            jacobian_step: T::lit(1e-3),
            max_step: T::lit(50.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rephased<T> {
    pub wavelengths: DesignWavelengths<T>,
    pub delta_k_sfwm: T,
    pub delta_k_dfg: T,
    pub iterations: usize,
}

/// Solves `Δk_sfwm = Δk_dfg = 0` for (λ₁, λ_s) at fixed λ₂ by damped
/// Newton on the deflated mismatches, starting from `seed`.
pub fn rephasematch<T: Real, S, D>(
    sfwm: &S,
    dfg: &D,
    seed: &DesignWavelengths<T>,
    opts: NewtonOptions<T>,
) -> Result<Rephased<T>>
where
    S: Dispersion<T> + ?Sized,
    D: Dispersion<T> + ?Sized,
{
    let (mut w1, w2, mut ws) = seed.omegas();
    let residual = |w1: T, ws: T| -> Result<[T; 2]> {
        Ok([deflated_sfwm(sfwm, w1, ws)?, deflated_dfg(dfg, w1, w2, ws)?])
    };
    let raw = |w1: T, ws: T| -> Result<(T, T)> {
        Ok((
            delta_k_sfwm(sfwm, w1, ws)?.delta_k,
            delta_k_dfg(dfg, w1, w2, ws)?.delta_k,
        ))
    };
    let norm = |r: &[T; 2]| (r[0] * r[0] + r[1] * r[1]).sqrt();
    // Separation from the trivial branches below which a root is rejected.
    let min_gap = T::lit(1.0);
    let no_root = |msg: String| Error::NoRoot(msg);

    let mut r = residual(w1, ws)?;
    for iteration in 0..=opts.max_iterations {
        let (a, b) = raw(w1, ws)?;
        if a.abs() < opts.tolerance && b.abs() < opts.tolerance {
            if (ws - w1).abs() < min_gap || (ws - w2).abs() < min_gap || (w1 - w2).abs() < min_gap {
                return Err(no_root("re-phasematching collapsed onto a trivial solution".into()));
            }
            return Ok(Rephased {
                wavelengths: DesignWavelengths {
                    pump1_um: wavelength_from_omega(w1),
                    pump2_um: seed.pump2_um,
                    signal_um: wavelength_from_omega(ws),
                },
                delta_k_sfwm: a,
                delta_k_dfg: b,
                iterations: iteration,
            });
        }
        if iteration == opts.max_iterations {
            break;
        }
        let h = opts.jacobian_step;
        let two_h = T::lit(2.0) * h;
        let r1p = residual(w1 + h, ws)?;
        let r1m = residual(w1 - h, ws)?;
        let rsp = residual(w1, ws + h)?;
        let rsm = residual(w1, ws - h)?;
        let j = [
            [(r1p[0] - r1m[0]) / two_h, (rsp[0] - rsm[0]) / two_h],
            [(r1p[1] - r1m[1]) / two_h, (rsp[1] - rsm[1]) / two_h],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !(det.abs() > T::zero()) || !det.is_finite() {
            return Err(no_root("singular Jacobian during re-phasematching".into()));
        }
        let mut d1 = -(j[1][1] * r[0] - j[0][1] * r[1]) / det;
        let mut ds = -(-j[1][0] * r[0] + j[0][0] * r[1]) / det;
        let len = (d1 * d1 + ds * ds).sqrt();
        if len > opts.max_step {
            d1 *= opts.max_step / len;
            ds *= opts.max_step / len;
        }
        // Backtrack until the deflated residual decreases.
        let current = norm(&r);
        let mut lambda = T::one();
        let mut accepted = false;
        for _ in 0..30 {
            let (n1, ns) = (w1 + lambda * d1, ws + lambda * ds);
            if let Ok(trial) = residual(n1, ns) {
                if norm(&trial) < current || norm(&trial) == T::zero() {
                    w1 = n1;
                    ws = ns;
                    r = trial;
                    accepted = true;
                    break;
                }
            }
            lambda *= T::lit(0.5);
        }
        if !accepted {
            // No descent possible: either converged to rounding or stuck.
            let (a, b) = raw(w1, ws)?;
            if a.abs() < opts.tolerance * T::lit(100.0) && b.abs() < opts.tolerance * T::lit(100.0) {
                continue;
            }
            return Err(no_root("re-phasematching line search stalled".into()));
        }
    }
    Err(no_root(format!(
        "re-phasematching did not converge in {} iterations",
        opts.max_iterations
    )))
}

/// A polyline in the (λ₁, λ_s) plane on which one process is phasematched.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourLine<T> {
    pub process: ProcessKind,
    /// Whether this is one of the analytic zero lines (degenerate or trivial).
    pub trivial: bool,
    pub points: Vec<(T, T)>,
}

/// Zero-level polylines of a scalar field sampled on a rectilinear grid.
///
/// `z` is row-major with `z[iy * xs.len() + ix]`. Cells with a non-finite
/// corner are skipped.
pub fn marching_squares<T: Real>(xs: &[T], ys: &[T], z: &[T]) -> Vec<Vec<(T, T)>> {
    let nx = xs.len();
    let ny = ys.len();
    assert_eq!(z.len(), nx * ny);
    if nx < 2 || ny < 2 {
        return Vec::new();
    }
    let at = |ix: usize, iy: usize| z[iy * nx + ix];
    // Edge key: (orientation, ix, iy); 0 = horizontal from (ix,iy) to (ix+1,iy),
    // 1 = vertical from (ix,iy) to (ix,iy+1).
    type Key = (u8, usize, usize);
    let crossing = |key: Key| -> (T, T) {
        let (o, ix, iy) = key;
        let (jx, jy) = if o == 0 { (ix + 1, iy) } else { (ix, iy + 1) };
        let (a, b) = (at(ix, iy), at(jx, jy));
        let t = a / (a - b);
        (xs[ix] + t * (xs[jx] - xs[ix]), ys[iy] + t * (ys[jy] - ys[iy]))
    };
    let mut segments: Vec<(Key, Key)> = Vec::new();
    for iy in 0..ny - 1 {
        for ix in 0..nx - 1 {
            let v = [at(ix, iy), at(ix + 1, iy), at(ix + 1, iy + 1), at(ix, iy + 1)];
            if v.iter().any(|x| !x.is_finite()) {
                continue;
            }
            let bottom: Key = (0, ix, iy);
            let right: Key = (1, ix + 1, iy);
            let top: Key = (0, ix, iy + 1);
            let left: Key = (1, ix, iy);
            let code = v
                .iter()
                .enumerate()
                .fold(0u8, |c, (i, x)| if *x >= T::zero() { c | (1 << i) } else { c });
            let centre_positive = (v[0] + v[1] + v[2] + v[3]) >= T::zero();
            match code {
                0 | 15 => {}
                1 | 14 => segments.push((left, bottom)),
                2 | 13 => segments.push((bottom, right)),
                3 | 12 => segments.push((left, right)),
                4 | 11 => segments.push((right, top)),
                6 | 9 => segments.push((bottom, top)),
                7 | 8 => segments.push((left, top)),
                5 => {
                    if centre_positive {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    } else {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    }
                }
                10 => {
                    if centre_positive {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    } else {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    let mut by_edge: HashMap<Key, Vec<usize>> = HashMap::new();
    for (i, (a, b)) in segments.iter().enumerate() {
        by_edge.entry(*a).or_default().push(i);
        by_edge.entry(*b).or_default().push(i);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let walk = |start_seg: usize, start_key: Key, used: &mut Vec<bool>| -> Vec<Key> {
        let mut keys = vec![start_key];
        let mut seg = start_seg;
        let mut key = start_key;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            key = if a == key { b } else { a };
            keys.push(key);
            match by_edge[&key].iter().find(|&&s| !used[s]) {
                Some(&next) => seg = next,
                None => break,
            }
        }
        keys
    };
    // Open polylines start at edges touched by a single segment.
    for i in 0..segments.len() {
        if used[i] {
            continue;
        }
        for end in [segments[i].0, segments[i].1] {
            if !used[i] && by_edge[&end].len() == 1 {
                lines.push(walk(i, end, &mut used));
            }
        }
    }
    for i in 0..segments.len() {
        if !used[i] {
            lines.push(walk(i, segments[i].0, &mut used));
        }
    }
    lines
        .into_iter()
        .map(|keys| keys.into_iter().map(crossing).collect())
        .collect()
}

/// Sampling of the (λ₁, λ_s) plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourPlane<T> {
    pub pump1_um: (T, T),
    pub signal_um: (T, T),
    pub points: usize,
    pub pump2_um: T,
}

/// Phasematching contours of both processes in the (λ₁, λ_s) plane.
///
/// The nontrivial branches come from marching squares on the deflated
/// mismatches; the degenerate SFWM line and the trivial DFG lines are added
/// analytically where they cross the plane.
pub fn phasematch_contours<T: Real, S, D>(sfwm: &S, dfg: &D, plane: &ContourPlane<T>) -> Vec<ContourLine<T>>
where
    S: Dispersion<T> + ?Sized,
    D: Dispersion<T> + ?Sized,
{
    let n = plane.points.max(2);
    let xs = linspace(plane.pump1_um.0, plane.pump1_um.1, n);
    let ys = linspace(plane.signal_um.0, plane.signal_um.1, n);
    let w2 = omega_from_wavelength(plane.pump2_um);
    let (zs, zd): (Vec<T>, Vec<T>) = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (ix, iy) = (idx % n, idx / n);
            let w1 = omega_from_wavelength(xs[ix]);
            let ws = omega_from_wavelength(ys[iy]);
            let s = deflated_sfwm(sfwm, w1, ws).unwrap_or(T::nan());
            let d = deflated_dfg(dfg, w1, w2, ws).unwrap_or(T::nan());
            (s, d)
        })
        .unzip();

    let mut out = Vec::new();
    for (process, field) in [(ProcessKind::Sfwm, &zs), (ProcessKind::Dfg, &zd)] {
        for points in marching_squares(&xs, &ys, field) {
            out.push(ContourLine {
                process,
                trivial: false,
                points,
            });
        }
    }

    let (x0, x1) = (plane.pump1_um.0.min(plane.pump1_um.1), plane.pump1_um.0.max(plane.pump1_um.1));
    let (y0, y1) = (plane.signal_um.0.min(plane.signal_um.1), plane.signal_um.0.max(plane.signal_um.1));
    // Degenerate SFWM: λ_s = λ₁.
    let lo = x0.max(y0);
    let hi = x1.min(y1);
    if lo < hi {
        out.push(ContourLine {
            process: ProcessKind::Sfwm,
            trivial: true,
            points: vec![(lo, lo), (hi, hi)],
        });
    }
    let l2 = plane.pump2_um;
    // DFG with ω₂ = ω_s: horizontal line λ_s = λ₂.
    if l2 >= y0 && l2 <= y1 {
        out.push(ContourLine {
            process: ProcessKind::Dfg,
            trivial: true,
            points: vec![(x0, l2), (x1, l2)],
        });
    }
    // DFG with ω₂ = ω₁: vertical line λ₁ = λ₂.
    if l2 >= x0 && l2 <= x1 {
        out.push(ContourLine {
            process: ProcessKind::Dfg,
            trivial: true,
            points: vec![(l2, y0), (l2, y1)],
        });
    }
    out
}

/// Writes contours as `process lambda1_um lambdas_um segment_id` rows.
pub fn write_contours<T: Real>(mut w: impl Write, lines: &[ContourLine<T>]) -> std::io::Result<()> {
    writeln!(w, "process lambda1_um lambdas_um segment_id")?;
    for (id, line) in lines.iter().enumerate() {
        for (x, y) in &line.points {
            writeln!(w, "{} {} {} {}", line.process.label(), x, y, id)?;
        }
    }
    Ok(())
}

/// Writes objective samples as `h_um w_sfwm_um w_dfg_um fobj` rows;
/// unguided points are written as `inf`.
pub fn write_objective_surface<T: Real>(mut w: impl Write, samples: &[ObjectiveSample<T>]) -> std::io::Result<()> {
    writeln!(w, "h_um w_sfwm_um w_dfg_um fobj")?;
    for s in samples {
        writeln!(w, "{} {} {} {:e}", s.height_um, s.width_sfwm_um, s.width_dfg_um, s.value)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::WaveguideGeometry;

    /// A smooth synthetic dispersion `n(λ) = a + b/λ² + c·λ`.
    struct Synthetic {
        a: f64,
        b: f64,
        c: f64,
    }

    impl Dispersion<f64> for Synthetic {
        fn effective_index(&self, lam: f64) -> Result<f64> {
            Ok(self.a + self.b / (lam * lam) + self.c * lam)
        }
    }

    fn models(ws: f64, wd: f64) -> (DispersionModel<f64>, DispersionModel<f64>) {
        let g = WaveguideGeometry::silicon_nitride_strip(ws, 0.7, 1.0).unwrap();
        (
            DispersionModel::effective_index_method(g.clone()),
            DispersionModel::effective_index_method(g.with_width(wd)),
        )
    }

    fn table1() -> DesignWavelengths<f64> {
        DesignWavelengths {
            pump1_um: 0.822,
            pump2_um: 1.554,
            signal_um: 1.253,
        }
    }

    #[test]
    fn contributions_resum_to_mismatch() {
        let (s, d) = models(0.953, 1.617);
        let (w1, w2, ws) = table1().omegas();
        for r in [delta_k_sfwm(&s, w1, ws).unwrap(), delta_k_dfg(&d, w1, w2, ws).unwrap()] {
            let sum: f64 = r.contributions.iter().map(|c| c.1).sum();
            assert!((sum - r.delta_k).abs() <= 1e-14 * r.contributions.iter().map(|c| c.1.abs()).sum::<f64>());
        }
    }

    #[test]
    fn analytic_zeros_are_exact() {
        let m = Synthetic { a: 1.8, b: 0.02, c: -0.03 };
        let w1 = omega_from_wavelength(0.822);
        let ws = omega_from_wavelength(1.253);
        assert_eq!(delta_k_sfwm(&m, w1, w1).unwrap().delta_k, 0.0);
        assert!(delta_k_dfg(&m, w1, w1, ws).unwrap().delta_k.abs() < 1e-12);
        assert!(delta_k_dfg(&m, w1, ws, ws).unwrap().delta_k.abs() < 1e-12);
    }

    #[test]
    fn sfwm_signal_idler_symmetry() {
        let (s, _) = models(0.953, 1.617);
        let w1 = omega_from_wavelength(0.822);
        let ws = omega_from_wavelength(1.253);
        let a = delta_k_sfwm(&s, w1, ws).unwrap().delta_k;
        let b = delta_k_sfwm(&s, w1, 2.0 * w1 - ws).unwrap().delta_k;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn cutoff_names_the_field() {
        let (s, _) = models(0.3, 1.0);
        let w1 = omega_from_wavelength(0.822);
        let ws = omega_from_wavelength(1.5);
        let err = delta_k_sfwm(&s.with_height(0.1), w1, ws).unwrap_err();
        assert!(err.is_cutoff());
        assert!(matches!(err, Error::Field { .. }));
        let (a, b) = models(0.3, 1.0);
        assert!(objective(&a.with_height(0.1), &b, &table1()).is_infinite());
    }

    #[test]
    fn fixed_height_search_is_separable_and_converges() {
        let (s, d) = models(1.0, 1.0);
        let space = GeometrySearchSpace {
            height: AxisRange::fixed(0.7),
            width_sfwm: AxisRange::new(0.8, 1.2, 0.01),
            width_dfg: AxisRange::new(1.6, 2.2, 0.01),
            tolerance: 1e-6,
        };
        let opt = minimize_geometry(&s, &d, &space, &table1()).unwrap();
        assert!(opt.objective < 1e-8, "{opt:?}");
        assert!(opt.objective <= opt.grid_objective);
        // Changing the DFG range does not move the SFWM optimum.
        let other = GeometrySearchSpace {
            width_dfg: AxisRange::new(1.5, 2.1, 0.02),
            ..space
        };
        let opt2 = minimize_geometry(&s, &d, &other, &table1()).unwrap();
        assert!((opt.width_sfwm_um - opt2.width_sfwm_um).abs() < 1e-5);
        // Deterministic.
        assert_eq!(opt, minimize_geometry(&s, &d, &space, &table1()).unwrap());
    }

    #[test]
    fn empty_space_reports_search_failure() {
        let (s, d) = models(1.0, 1.0);
        let space = GeometrySearchSpace {
            height: AxisRange::fixed(0.05),
            width_sfwm: AxisRange::new(0.1, 0.2, 0.05),
            width_dfg: AxisRange::new(0.1, 0.2, 0.05),
            tolerance: 1e-5,
        };
        assert!(matches!(minimize_geometry(&s, &d, &space, &table1()), Err(Error::Search(_))));
    }

    #[test]
    fn rephasematch_finds_nontrivial_root() {
        let (s, d) = models(0.9976, 1.9133);
        let r = rephasematch(&s, &d, &table1(), NewtonOptions::default()).unwrap();
        assert!(r.delta_k_sfwm.abs() < 1e-9 && r.delta_k_dfg.abs() < 1e-9);
        assert!((r.wavelengths.pump1_um - 0.822).abs() < 0.01);
        assert!((r.wavelengths.signal_um - 1.253).abs() < 0.02);
    }

    #[test]
    fn marching_squares_recovers_circle() {
        let xs = linspace(-2.0_f64, 2.0, 81);
        let ys = xs.clone();
        let z: Vec<f64> = (0..81 * 81)
            .map(|i| {
                let (x, y) = (xs[i % 81], ys[i / 81]);
                x * x + y * y - 1.0
            })
            .collect();
        let lines = marching_squares(&xs, &ys, &z);
        assert_eq!(lines.len(), 1);
        let line = &lines[0];
        assert_eq!(line.first(), line.last());
        for (x, y) in line {
            assert!(((x * x + y * y).sqrt() - 1.0).abs() < 2e-3);
        }
    }

    #[test]
    fn marching_squares_skips_unguided_cells() {
        let xs = linspace(0.0_f64, 1.0, 11);
        let ys = xs.clone();
        let z: Vec<f64> = (0..121)
            .map(|i| {
                let (x, y) = (xs[i % 11], ys[i / 11]);
                if y > 0.55 {
                    f64::NAN
                } else {
                    x - 0.5
                }
            })
            .collect();
        let lines = marching_squares(&xs, &ys, &z);
        assert_eq!(lines.len(), 1);
        assert!(lines[0].iter().all(|p| p.1 <= 0.5 + 1e-12));
    }

    #[test]
    fn contours_include_analytic_lines() {
        let (s, d) = models(0.9976, 1.9133);
        let plane = ContourPlane {
            pump1_um: (0.78, 0.9),
            signal_um: (0.8, 1.6),
            points: 24,
            pump2_um: 1.554,
        };
        let lines = phasematch_contours(&s, &d, &plane);
        assert!(lines.iter().any(|l| l.trivial && l.process == ProcessKind::Sfwm));
        assert!(lines
            .iter()
            .any(|l| l.trivial && l.process == ProcessKind::Dfg && l.points[0].1 == 1.554));
        assert!(lines.iter().any(|l| !l.trivial && l.process == ProcessKind::Dfg));
        let mut buf = Vec::new();
        write_contours(&mut buf, &lines).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("process lambda1_um lambdas_um segment_id\n"));
    }
}
