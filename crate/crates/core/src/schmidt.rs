//! Schmidt decomposition of joint spectral functions into temporal-mode
//! pairs, with purity and Schmidt number.

use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::svd;
use crate::scalar::Real;
use crate::spectra::{Axis, BandwidthUnit, JointAmplitude};

pub const DEFAULT_TRUNCATION: f64 = 0.999;

/// `F(a, b) = Σ_k √c_k · φ_k(a) · Ω_k(b)` with orthonormal modes under the
/// continuous measure `∫dω`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtDecomposition<T> {
    /// Retained coefficients, descending.
    pub coefficients: Vec<T>,
    pub modes_a: Vec<Vec<Complex<T>>>,
    pub modes_b: Vec<Vec<Complex<T>>>,
    pub axis_a: Axis<T>,
    pub axis_b: Axis<T>,
    /// Weight of the discarded modes; `Σ coefficients + residual = 1`.
    pub residual: T,
    /// Coefficients of every mode, retained or not.
    pub spectrum: Vec<T>,
}

/// `∫ conj(f)·g dω` on a uniform grid.
pub fn overlap<T: Real>(f: &[Complex<T>], g: &[Complex<T>], spacing: T) -> Complex<T> {
    f.iter()
        .zip(g)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b)
        .scale(spacing)
}

/// Index of the first sample of maximal magnitude.
fn peak_index<T: Real>(f: &[Complex<T>]) -> usize {
    let mut best = 0;
    for (i, z) in f.iter().enumerate() {
        if z.norm_sqr() > f[best].norm_sqr() {
            best = i;
        }
    }
    best
}

/// Factorizes a normalized joint amplitude.
///
/// Modes are kept in descending order until their cumulative weight reaches
/// `truncation` (values ≥ 1 keep every mode with nonzero weight). Each
/// `modes_a` function is rotated so its largest-magnitude sample is real
/// positive; the paired `modes_b` function carries the compensating phase.
pub fn schmidt_decompose<T: Real>(joint: &JointAmplitude<T>, truncation: T) -> Result<SchmidtDecomposition<T>> {
    let norm = joint.norm_sq();
    if !joint.normalized || (norm - T::one()).abs() > T::lit(1e-8) {
        return Err(Error::Contract(format!(
            "Schmidt decomposition needs a normalized joint amplitude (∫|F|² = {norm})"
        )));
    }
    if !(truncation > T::zero()) {
        return Err(Error::Config(format!("truncation threshold must be positive, got {truncation}")));
    }
    let (na, nb) = (joint.grid.a.points, joint.grid.b.points);
    let (da, db) = (joint.grid.a.spacing(), joint.grid.b.spacing());
    let measure = (da * db).sqrt();
    let scaled: Vec<Complex<T>> = joint.values.iter().map(|z| z.scale(measure)).collect();
    let d = svd(&scaled, na, nb);

    let weights: Vec<T> = d.s.iter().map(|s| *s * *s).collect();
    let total = weights.iter().fold(T::zero(), |a, &w| a + w);
    let spectrum: Vec<T> = weights.iter().map(|&w| w / total).collect();
    let nonzero = spectrum.iter().take_while(|&&c| c > T::zero()).count();
    let rank = if truncation >= T::one() {
        nonzero
    } else {
        let mut acc = T::zero();
        let mut r = 0;
        for &c in &spectrum[..nonzero] {
            acc += c;
            r += 1;
            if acc >= truncation {
                break;
            }
        }
        r
    }
    .max(1);
    let coefficients = spectrum[..rank].to_vec();
    let residual = T::one() - coefficients.iter().fold(T::zero(), |a, &c| a + c);

    let (inv_a, inv_b) = (T::one() / da.sqrt(), T::one() / db.sqrt());
    let mut modes_a = Vec::with_capacity(rank);
    let mut modes_b = Vec::with_capacity(rank);
    for k in 0..rank {
        let mut phi: Vec<Complex<T>> = d.u[k].iter().map(|z| z.scale(inv_a)).collect();
        let mut omega: Vec<Complex<T>> = d.v[k].iter().map(|z| z.conj().scale(inv_b)).collect();
        let p = phi[peak_index(&phi)];
        if p.norm() > T::zero() {
            let rot = p.conj() / p.norm();
            for z in &mut phi {
                *z = *z * rot;
            }
            let back = rot.conj();
            for z in &mut omega {
                *z = *z * back;
            }
        }
        modes_a.push(phi);
        modes_b.push(omega);
    }
    Ok(SchmidtDecomposition {
        coefficients,
        modes_a,
        modes_b,
        axis_a: joint.grid.a,
        axis_b: joint.grid.b,
        residual,
        spectrum,
    })
}

/// Purity of the heralded state computed from retained modes, with the
/// discarded weight either spread thinly (adds nothing) or concentrated in a
/// single extra mode (adds `residual²`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Purity<T> {
    pub value: T,
    pub residual_concentrated: T,
}

fn sum_of_squares<T: Real>(c: &[T]) -> T {
    c.iter().fold(T::zero(), |a, &x| a + x * x)
}

pub fn purity<T: Real>(d: &SchmidtDecomposition<T>) -> Purity<T> {
    let value = sum_of_squares(&d.coefficients);
    Purity {
        value,
        residual_concentrated: value + d.residual * d.residual,
    }
}

/// `K = 1/Σc²` over retained coefficients; exactly the reciprocal of
/// `purity(d).value`.
pub fn schmidt_number<T: Real>(d: &SchmidtDecomposition<T>) -> T {
    T::one() / sum_of_squares(&d.coefficients)
}

impl<T: Real> SchmidtDecomposition<T> {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    /// Rebuilds the joint amplitude from the retained modes.
    pub fn reconstruct(&self) -> Vec<Complex<T>> {
        let (na, nb) = (self.axis_a.points, self.axis_b.points);
        let mut out = vec![Complex::new(T::zero(), T::zero()); na * nb];
        for (k, &c) in self.coefficients.iter().enumerate() {
            let w = c.sqrt();
            for ia in 0..na {
                let a = self.modes_a[k][ia].scale(w);
                let row = &mut out[ia * nb..(ia + 1) * nb];
                for (o, b) in row.iter_mut().zip(&self.modes_b[k]) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Largest deviation of the mode Gram matrices from the identity.
    pub fn orthonormality_error(&self) -> T {
        let gram_error = |modes: &[Vec<Complex<T>>], spacing: T| {
            let mut worst = T::zero();
            for (i, f) in modes.iter().enumerate() {
                for (j, g) in modes.iter().enumerate() {
                    let target = if i == j { T::one() } else { T::zero() };
                    let e = (overlap(f, g, spacing) - Complex::new(target, T::zero())).norm();
                    worst = worst.max(e);
                }
            }
            worst
        };
        gram_error(&self.modes_a, self.axis_a.spacing()).max(gram_error(&self.modes_b, self.axis_b.spacing()))
    }

    /// Writes one `domega_THz re im` file per retained mode and side, scaled
    /// by the fundamental mode's peak magnitude. Returns the files written.
    pub fn export_modes(&self, dir: &Path, prefix: &str, unit: BandwidthUnit) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        for (side, modes, axis) in [("a", &self.modes_a, &self.axis_a), ("b", &self.modes_b, &self.axis_b)] {
            let Some(first) = modes.first() else { continue };
            let peak = first.iter().fold(T::zero(), |m, z| m.max(z.norm()));
            let scale = if peak > T::zero() { T::one() / peak } else { T::one() };
            for (k, mode) in modes.iter().enumerate() {
                let path = dir.join(format!("{prefix}_{side}{}.dat", k + 1));
                let mut buf = Vec::new();
                write_mode(&mut buf, mode, axis, scale, unit).map_err(|e| Error::io(&path, e))?;
                std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

fn write_mode<T: Real>(
    mut w: impl Write,
    mode: &[Complex<T>],
    axis: &Axis<T>,
    scale: T,
    unit: BandwidthUnit,
) -> std::io::Result<()> {
    writeln!(w, "domega_THz re im")?;
    for (i, z) in mode.iter().enumerate() {
        let v = z.scale(scale);
        writeln!(w, "{} {:e} {:e}", unit.from_rad_per_ps(axis.offset(i)), v.re, v.im)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::SpectralGrid;

    fn grid(n: usize, half: f64) -> SpectralGrid<f64> {
        SpectralGrid::new(Axis::new(100.0, half, n), Axis::new(200.0, half, n)).unwrap()
    }

    fn sample(g: &SpectralGrid<f64>, f: impl Fn(f64, f64) -> Complex<f64>) -> JointAmplitude<f64> {
        let mut v = Vec::new();
        for ia in 0..g.a.points {
            for ib in 0..g.b.points {
                v.push(f(g.a.offset(ia), g.b.offset(ib)));
            }
        }
        JointAmplitude::from_values(*g, v).unwrap()
    }

    #[test]
    fn separable_input_is_rank_one() {
        let g = grid(64, 6.0);
        let j = sample(&g, |x, y| {
            Complex::from_polar((-x * x / 2.0).exp(), 0.3 * x) * Complex::from_polar((-(y - 1.0).powi(2)).exp(), -0.2 * y)
        });
        let d = schmidt_decompose(&j, DEFAULT_TRUNCATION).unwrap();
        assert_eq!(d.rank(), 1);
        assert!((d.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((purity(&d).value - 1.0).abs() < 1e-12);
        assert!((schmidt_number(&d) - 1.0).abs() < 1e-12);
        // phase convention
        let p = d.modes_a[0][peak_index(&d.modes_a[0])];
        assert!(p.im == 0.0 && p.re > 0.0);
    }

    #[test]
    fn correlated_gaussian_follows_geometric_law() {
        let rho: f64 = 0.6;
        let g = grid(128, 9.0);
        let j = sample(&g, |x, y| Complex::new((-(x * x + y * y) / 2.0 - rho * x * y).exp(), 0.0));
        let d = schmidt_decompose(&j, 1.0).unwrap();
        // Independent analytic solution of the two-Gaussian Schmidt problem.
        let mu = (1.0 - (1.0 - rho * rho).sqrt()) / rho;
        for n in 0..5 {
            let expect = (1.0 - mu * mu) * mu.powi(2 * n as i32);
            assert!((d.coefficients[n] - expect).abs() < 1e-4, "{n}: {} vs {expect}", d.coefficients[n]);
        }
        let rms = (d
            .reconstruct()
            .iter()
            .zip(&j.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / j.values.len() as f64)
            .sqrt();
        assert!(rms < 1e-10);
        assert!(d.orthonormality_error() < 1e-8);
        let total: f64 = d.coefficients.iter().sum::<f64>() + d.residual;
        assert!((total - 1.0).abs() < 1e-10);
        assert_eq!(schmidt_number(&d), 1.0 / purity(&d).value);
    }

    #[test]
    fn transpose_and_global_phase_leave_coefficients() {
        let g = grid(64, 8.0);
        let j = sample(&g, |x, y| Complex::from_polar((-(x * x + 2.0 * y * y) / 2.0 - 0.7 * x * y).exp(), 0.1 * x * y));
        let d = schmidt_decompose(&j, 1.0).unwrap();
        let t = schmidt_decompose(&j.transposed(), 1.0).unwrap();
        let mut rotated = j.clone();
        for v in &mut rotated.values {
            *v *= Complex::from_polar(1.0, 1.234);
        }
        let r = schmidt_decompose(&rotated, 1.0).unwrap();
        for k in 0..6 {
            assert!((d.spectrum[k] - t.spectrum[k]).abs() < 1e-10);
            assert!((d.spectrum[k] - r.spectrum[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let g = grid(64, 6.0);
        let mut j = sample(&g, |x, y| Complex::new((-(x * x + y * y)).exp(), 0.0));
        for v in &mut j.values {
            *v = v.scale(2.0);
        }
        assert!(matches!(schmidt_decompose(&j, 0.999), Err(Error::Contract(_))));
    }

    #[test]
    fn equal_weights_give_expected_purity() {
        let d = SchmidtDecomposition::<f64> {
            coefficients: vec![0.5, 0.5],
            modes_a: vec![],
            modes_b: vec![],
            axis_a: Axis::new(1.0, 0.5, 64),
            axis_b: Axis::new(1.0, 0.5, 64),
            residual: 0.0,
            spectrum: vec![0.5, 0.5],
        };
        assert_eq!(purity(&d).value, 0.5);
        assert_eq!(schmidt_number(&d), 2.0);
    }
}
