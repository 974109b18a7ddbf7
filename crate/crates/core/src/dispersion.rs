//! Waveguide dispersion: effective index and propagation constant.
//!
//! Units: wavelengths in µm, angular frequencies in rad/ps, propagation
//! constants in rad/µm.

use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interp::CubicSpline;
use crate::material::WaveguideGeometry;
use crate::scalar::{linspace, speed_of_light, wavelength_from_omega, Real};

/// Finite-difference step used for group-index evaluation, rad/ps.
pub const GROUP_INDEX_STEP: f64 = 1e-3;

/// Anything that maps a vacuum wavelength to a guided-mode effective index.
pub trait Dispersion<T: Real>: Send + Sync {
    fn effective_index(&self, wavelength_um: T) -> Result<T>;

    /// `k(ω) = n_eff(ω)·ω/c`.
    fn propagation_constant(&self, omega: T) -> Result<T> {
        if !(omega > T::zero()) {
            return Err(Error::Contract(format!("angular frequency must be positive, got {omega}")));
        }
        let n = self.effective_index(wavelength_from_omega(omega))?;
        Ok(n * omega / speed_of_light::<T>())
    }

    /// `n_g = c·dk/dω`, by a central difference Richardson-extrapolated once.
    fn group_index(&self, omega: T) -> Result<T> {
        let h = T::lit(GROUP_INDEX_STEP);
        let central = |step: T| -> Result<T> {
            Ok((self.propagation_constant(omega + step)? - self.propagation_constant(omega - step)?)
                / (T::lit(2.0) * step))
        };
        let coarse = central(h)?;
        let fine = central(h * T::lit(0.5))?;
        Ok(speed_of_light::<T>() * (T::lit(4.0) * fine - coarse) / T::lit(3.0))
    }
}

impl<T: Real, D: Dispersion<T> + ?Sized> Dispersion<T> for &D {
    fn effective_index(&self, wavelength_um: T) -> Result<T> {
        (**self).effective_index(wavelength_um)
    }
    fn propagation_constant(&self, omega: T) -> Result<T> {
        (**self).propagation_constant(omega)
    }
}

#[derive(Debug, Clone)]
pub enum DispersionSource<T> {
    EffectiveIndex,
    Tabulated(Arc<NeffTable<T>>),
}

/// A waveguide cross-section together with the rule used to compute its modes.
#[derive(Debug, Clone)]
pub struct DispersionModel<T> {
    pub source: DispersionSource<T>,
    pub geometry: WaveguideGeometry<T>,
}

impl<T: Real> DispersionModel<T> {
    pub fn effective_index_method(geometry: WaveguideGeometry<T>) -> Self {
        Self {
            source: DispersionSource::EffectiveIndex,
            geometry,
        }
    }

    pub fn tabulated(table: Arc<NeffTable<T>>, geometry: WaveguideGeometry<T>) -> Self {
        Self {
            source: DispersionSource::Tabulated(table),
            geometry,
        }
    }

    /// Same source and materials, different core width.
    pub fn with_width(&self, width_um: T) -> Self {
        Self {
            source: self.source.clone(),
            geometry: self.geometry.with_width(width_um),
        }
    }

    pub fn with_height(&self, height_um: T) -> Self {
        Self {
            source: self.source.clone(),
            geometry: self.geometry.with_height(height_um),
        }
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.source, DispersionSource::Tabulated(_))
    }
}

impl<T: Real> Dispersion<T> for DispersionModel<T> {
    fn effective_index(&self, wavelength_um: T) -> Result<T> {
        match &self.source {
            DispersionSource::EffectiveIndex => self.geometry.eim_effective_index(wavelength_um),
            DispersionSource::Tabulated(table) => {
                let n = table.effective_index(self.geometry.width_um, self.geometry.height_um, wavelength_um)?;
                // The guidance bound can only be checked where both materials are defined.
                if let (Ok(n_core), Ok(n_sub)) = (
                    self.geometry.core.index(wavelength_um),
                    self.geometry.substrate.index(wavelength_um),
                ) {
                    let _ = n_core;
                    if !(n > n_sub) {
                        return Err(Error::Cutoff {
                            width_um: self.geometry.width_um.as_f64(),
                            height_um: self.geometry.height_um.as_f64(),
                            wavelength_um: wavelength_um.as_f64(),
                        });
                    }
                }
                Ok(n)
            }
        }
    }
}

/// Free-function forms used by the command layer.
pub fn effective_index<T: Real>(model: &DispersionModel<T>, wavelength_um: T) -> Result<T> {
    model.effective_index(wavelength_um)
}

pub fn propagation_constant<T: Real>(model: &DispersionModel<T>, omega: T) -> Result<T> {
    model.propagation_constant(omega)
}

/// Effective index sampled over (width, height, wavelength).
///
/// Interpolation is a natural cubic spline in wavelength and bilinear across
/// the (width, height) lattice, so stored samples are reproduced exactly.
#[derive(Debug, Clone)]
pub struct NeffTable<T> {
    widths: Vec<T>,
    heights: Vec<T>,
    // indexed [iw * heights.len() + ih]
    series: Vec<CubicSpline<T>>,
}

pub const NEFF_TABLE_HEADER: &str = "# neff-table v1";

impl<T: Real> NeffTable<T> {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let header = lines.by_ref().find(|(_, l)| !l.trim().is_empty());
        match header {
            Some((_, l)) if l.trim() == NEFF_TABLE_HEADER => {}
            Some((n, l)) => {
                return Err(Error::Parse {
                    line: n,
                    message: format!("expected header `{NEFF_TABLE_HEADER}`, found `{}`", l.trim()),
                })
            }
            None => {
                return Err(Error::Parse {
                    line: 1,
                    message: "empty dispersion table".into(),
                })
            }
        }

        // (width, height) -> first line, wavelengths, indices
        let mut groups: Vec<(T, T, usize, Vec<T>, Vec<T>)> = Vec::new();
        let mut previous: Option<(T, T, T)> = None;
        for (line_no, raw) in lines {
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected 4 columns (width_um height_um wavelength_um neff), found {}", fields.len()),
                });
            }
            let mut values = [T::zero(); 4];
            for (slot, field) in values.iter_mut().zip(&fields) {
                let v: f64 = field.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("`{field}` is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("non-finite value `{field}`"),
                    });
                }
                *slot = T::lit(v);
            }
            let [w, h, lam, n] = values;
            if !(w > T::zero() && h > T::zero() && lam > T::zero() && n > T::zero()) {
                return Err(Error::Parse {
                    line: line_no,
                    message: "all columns must be positive".into(),
                });
            }
            if let Some((pw, ph, pl)) = previous {
                let ordered = w > pw || (w == pw && (h > ph || (h == ph && lam > pl)));
                if !ordered {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "rows must be strictly sorted by (width, height, wavelength)".into(),
                    });
                }
            }
            previous = Some((w, h, lam));
            match groups.last_mut() {
                Some(g) if g.0 == w && g.1 == h => {
                    g.3.push(lam);
                    g.4.push(n);
                }
                _ => groups.push((w, h, line_no, vec![lam], vec![n])),
            }
        }
        if groups.is_empty() {
            return Err(Error::Parse {
                line: 1,
                message: "dispersion table has no data rows".into(),
            });
        }

        let mut widths: Vec<T> = Vec::new();
        for g in &groups {
            if widths.last() != Some(&g.0) {
                widths.push(g.0);
            }
        }
        let heights: Vec<T> = groups.iter().filter(|g| g.0 == widths[0]).map(|g| g.1).collect();
        if groups.len() != widths.len() * heights.len() {
            let line = groups
                .iter()
                .enumerate()
                .find(|(i, g)| g.1 != heights[i % heights.len()])
                .map(|(_, g)| g.2)
                .unwrap_or(groups[groups.len() - 1].2);
            return Err(Error::Parse {
                line,
                message: "every width must be sampled at the same set of heights".into(),
            });
        }
        for (i, g) in groups.iter().enumerate() {
            if g.0 != widths[i / heights.len()] || g.1 != heights[i % heights.len()] {
                return Err(Error::Parse {
                    line: g.2,
                    message: "every width must be sampled at the same set of heights".into(),
                });
            }
        }
        let series = groups
            .into_iter()
            .map(|(_, _, line, lam, n)| {
                CubicSpline::new(lam, n).map_err(|e| Error::Parse {
                    line,
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { widths, heights, series })
    }

    pub fn widths(&self) -> &[T] {
        &self.widths
    }

    pub fn heights(&self) -> &[T] {
        &self.heights
    }

    fn locate(axis: &[T], v: T, what: &str) -> Result<(usize, T)> {
        let out_of_range = || {
            Error::Contract(format!(
                "{what} {v} µm outside the tabulated range [{}, {}] µm",
                axis[0],
                axis[axis.len() - 1]
            ))
        };
        if axis.len() == 1 {
            let tol = T::lit(1e-9) * axis[0].abs().max(T::one());
            return if (v - axis[0]).abs() <= tol { Ok((0, T::zero())) } else { Err(out_of_range()) };
        }
        if !(v >= axis[0] && v <= axis[axis.len() - 1]) {
            return Err(out_of_range());
        }
        let i = axis.partition_point(|&a| a <= v).saturating_sub(1).min(axis.len() - 2);
        let t = (v - axis[i]) / (axis[i + 1] - axis[i]);
        Ok((i, t))
    }

    fn series_at(&self, iw: usize, ih: usize, wavelength_um: T) -> Result<T> {
        let s = &self.series[iw * self.heights.len() + ih];
        if !s.contains(wavelength_um) {
            let (lo, hi) = s.domain();
            return Err(Error::Domain {
                material: "neff-table".into(),
                wavelength_um: wavelength_um.as_f64(),
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            });
        }
        Ok(s.eval(wavelength_um))
    }

    pub fn effective_index(&self, width_um: T, height_um: T, wavelength_um: T) -> Result<T> {
        let (iw, tw) = Self::locate(&self.widths, width_um, "width")?;
        let (ih, th) = Self::locate(&self.heights, height_um, "height")?;
        let along_height = |iw: usize| -> Result<T> {
            let a = self.series_at(iw, ih, wavelength_um)?;
            if th == T::zero() {
                return Ok(a);
            }
            let b = self.series_at(iw, ih + 1, wavelength_um)?;
            Ok(a + th * (b - a))
        };
        let a = along_height(iw)?;
        if tw == T::zero() {
            return Ok(a);
        }
        let b = along_height(iw + 1)?;
        Ok(a + tw * (b - a))
    }
}

/// Reads a table and binds it to a cross-section.
pub fn import_dispersion_table<T: Real>(
    path: impl AsRef<Path>,
    geometry: WaveguideGeometry<T>,
) -> Result<DispersionModel<T>> {
    let table = NeffTable::read(path)?;
    Ok(DispersionModel::tabulated(Arc::new(table), geometry))
}

/// `k(ω)` resampled on a uniform frequency grid and spline-interpolated.
///
/// Spectral synthesis evaluates `k` millions of times; the underlying mode
/// solve is done once per knot instead.
#[derive(Debug, Clone)]
pub struct SampledDispersion<T> {
    spline: CubicSpline<T>,
}

impl<T: Real> SampledDispersion<T> {
    pub fn new<D: Dispersion<T> + ?Sized>(model: &D, omega_lo: T, omega_hi: T, knots: usize) -> Result<Self> {
        if !(omega_hi > omega_lo) || knots < 4 {
            return Err(Error::Contract("sampled band needs hi > lo and at least 4 knots".into()));
        }
        let omegas = linspace(omega_lo, omega_hi, knots);
        let k = omegas
            .iter()
            .map(|&w| model.propagation_constant(w))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spline: CubicSpline::new(omegas, k)?,
        })
    }

    /// Knot count giving a spacing no coarser than `max_spacing` rad/ps.
    pub fn covering<D: Dispersion<T> + ?Sized>(model: &D, omega_lo: T, omega_hi: T, max_spacing: T) -> Result<Self> {
        let n = ((omega_hi - omega_lo) / max_spacing).ceil().to_usize().unwrap_or(0) + 1;
        Self::new(model, omega_lo, omega_hi, n.max(8))
    }

    #[inline]
    pub fn k(&self, omega: T) -> T {
        self.spline.eval(omega)
    }

    pub fn domain(&self) -> (T, T) {
        self.spline.domain()
    }
}

impl<T: Real> Dispersion<T> for SampledDispersion<T> {
    fn effective_index(&self, wavelength_um: T) -> Result<T> {
        let omega = crate::scalar::omega_from_wavelength(wavelength_um);
        Ok(self.propagation_constant(omega)? * speed_of_light::<T>() / omega)
    }

    fn propagation_constant(&self, omega: T) -> Result<T> {
        if !self.spline.contains(omega) {
            let (lo, hi) = self.spline.domain();
            return Err(Error::Contract(format!("ω = {omega} outside sampled band [{lo}, {hi}] rad/ps")));
        }
        Ok(self.spline.eval(omega))
    }
}

/// Effective-index difference between two models at each wavelength.
///
/// Points where either model has no guided mode are reported as `None`
/// rather than silently substituted.
pub fn compare_models<T: Real>(
    a: &dyn Dispersion<T>,
    b: &dyn Dispersion<T>,
    wavelengths_um: &[T],
) -> Vec<(T, Option<(T, T)>)> {
    wavelengths_um
        .iter()
        .map(|&lam| {
            let pair = match (a.effective_index(lam), b.effective_index(lam)) {
                (Ok(x), Ok(y)) => Some((x, y)),
                _ => None,
            };
            (lam, pair)
        })
        .collect()
}
