//! Scalar abstraction shared by the numerical modules.
//!
//! Everything that does physics is written against [`Real`], so the same code
//! runs in `f32` for quick scans and `f64` for the reported numbers.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

pub use num_complex::Complex;

pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into the working precision.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in working precision")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("index representable in working precision")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Vacuum speed of light in µm/ps.
pub const SPEED_OF_LIGHT_UM_PER_PS: f64 = 299.792458;

#[inline]
pub fn speed_of_light<T: Real>() -> T {
    T::lit(SPEED_OF_LIGHT_UM_PER_PS)
}

/// Angular frequency (rad/ps) of a vacuum wavelength (µm).
#[inline]
pub fn omega_from_wavelength<T: Real>(wavelength_um: T) -> T {
    T::TAU() * speed_of_light::<T>() / wavelength_um
}

/// Vacuum wavelength (µm) of an angular frequency (rad/ps).
#[inline]
pub fn wavelength_from_omega<T: Real>(omega: T) -> T {
    T::TAU() * speed_of_light::<T>() / omega
}

/// Unnormalized sinc, `sin(x)/x`, with the removable singularity filled in.
#[inline]
pub fn sinc<T: Real>(x: T) -> T {
    if x.abs() < T::lit(1e-4) {
        let x2 = x * x;
        T::one() - x2 / T::lit(6.0) + x2 * x2 / T::lit(120.0)
    } else {
        x.sin() / x
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / T::from_usize_lossy(n - 1);
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        hi
                    } else {
                        lo + step * T::from_usize_lossy(i)
                    }
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_wavelength_round_trip() {
        let w = omega_from_wavelength(1.253_f64);
        assert!((wavelength_from_omega(w) - 1.253).abs() < 1e-14);
        let w32 = omega_from_wavelength(1.253_f32);
        assert!((wavelength_from_omega(w32) - 1.253).abs() < 1e-5);
    }

    #[test]
    fn sinc_is_continuous_at_origin() {
        for x in [0.999e-4_f64, 1.001e-4] {
            assert!((sinc(x) - x.sin() / x).abs() < 1e-15);
        }
        assert_eq!(sinc(0.0_f64), 1.0);
    }

    #[test]
    fn linspace_hits_endpoints() {
        let v = linspace(-1.0_f64, 1.0, 5);
        assert_eq!(v, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }
}
