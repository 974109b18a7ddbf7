//! Natural cubic spline over strictly increasing abscissae.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct CubicSpline<T> {
    x: Vec<T>,
    y: Vec<T>,
    // second derivatives at the knots
    m: Vec<T>,
    uniform: bool,
}

impl<T: Real> CubicSpline<T> {
    pub fn new(x: Vec<T>, y: Vec<T>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Contract(format!(
                "spline abscissae ({}) and ordinates ({}) differ in length",
                x.len(),
                y.len()
            )));
        }
        if x.is_empty() {
            return Err(Error::Contract("spline needs at least one knot".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Contract("spline abscissae must strictly increase".into()));
        }
        let n = x.len();
        let mut m = vec![T::zero(); n];
        if n > 2 {
            // Thomas algorithm on the interior second-derivative system.
            let mut c_prime = vec![T::zero(); n];
            let mut d_prime = vec![T::zero(); n];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let a = h0;
                let b = T::lit(2.0) * (h0 + h1);
                let c = h1;
                let d = T::lit(6.0) * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
                let denom = b - a * c_prime[i - 1];
                c_prime[i] = c / denom;
                d_prime[i] = (d - a * d_prime[i - 1]) / denom;
            }
            for i in (1..n - 1).rev() {
                m[i] = d_prime[i] - c_prime[i] * m[i + 1];
            }
        }
        let uniform = n > 2 && {
            let h = x[1] - x[0];
            x.windows(2)
                .all(|w| ((w[1] - w[0]) - h).abs() <= T::lit(1e-9) * h.abs())
        };
        Ok(Self { x, y, m, uniform })
    }

    pub fn domain(&self) -> (T, T) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    pub fn contains(&self, x: T) -> bool {
        let (lo, hi) = self.domain();
        x >= lo && x <= hi
    }

    fn interval(&self, x: T) -> usize {
        let n = self.x.len();
        if n < 2 {
            return 0;
        }
        let idx = if self.uniform {
            let h = (self.x[n - 1] - self.x[0]) / T::from_usize_lossy(n - 1);
            ((x - self.x[0]) / h).floor().to_usize().unwrap_or(0)
        } else {
            self.x.partition_point(|&xi| xi <= x).saturating_sub(1)
        };
        idx.min(n - 2)
    }

    /// Evaluates the spline; outside the knot range the end cubic is extrapolated.
    pub fn eval(&self, x: T) -> T {
        let n = self.x.len();
        if n == 1 {
            return self.y[0];
        }
        let i = self.interval(x);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - x) / h;
        let b = (x - self.x[i]) / h;
        if a == T::zero() {
            return self.y[i + 1];
        }
        if b == T::zero() {
            return self.y[i];
        }
        let six = T::lit(6.0);
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / six
    }

    pub fn derivative(&self, x: T) -> T {
        let n = self.x.len();
        if n == 1 {
            return T::zero();
        }
        let i = self.interval(x);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - x) / h;
        let b = (x - self.x[i]) / h;
        let three = T::lit(3.0);
        let six = T::lit(6.0);
        (self.y[i + 1] - self.y[i]) / h
            - (three * a * a - T::one()) * h * self.m[i] / six
            + (three * b * b - T::one()) * h * self.m[i + 1] / six
    }
}
