use crate::scalar::Real;

/// Gauss–Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n > 0, "quadrature needs at least one node");
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = T::from_usize_lossy(n);
    let half = (n + 1) / 2;
    for i in 0..half {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (T::PI() * (T::from_usize_lossy(i) + T::lit(0.75)) / (nf + T::lit(0.5))).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= T::epsilon() * T::lit(4.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != T::zero() {
            dp = d;
        }
        let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    (nodes, weights)
}

fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if n == 0 {
        return (p0, T::zero());
    }
    for k in 2..=n {
        let kf = T::from_usize_lossy(k);
        let p2 = ((T::lit(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::from_usize_lossy(n);
    let dp = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre::<f64>(129);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-13);
        // ∫ x^200 over [-1,1] is inside the exactness degree 2n-1 = 257.
        let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(200)).sum();
        assert!((approx - 2.0 / 201.0).abs() < 1e-13);
        assert!(x.windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn gaussian_integral() {
        let (x, w) = gauss_legendre::<f64>(64);
        let s = 6.0;
        let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * s * (-(s * x).powi(2) / 2.0).exp()).sum();
        assert!((approx - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-7);
    }
}
