//! Derivative-free simplex minimization.

use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions<T> {
    /// Stop once every vertex lies within this distance of the best one.
    pub x_tol: T,
    /// Optional second stop: spread of function values below this (ignored when zero).
    pub f_tol: T,
    pub max_evaluations: usize,
}

impl<T: Real> Default for SimplexOptions<T> {
    fn default() -> Self {
        Self {
            x_tol: T::lit(1e-5),
            f_tol: T::zero(),
            max_evaluations: 5000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult<T> {
    pub x: Vec<T>,
    pub value: T,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder–Mead with the standard coefficients (1, 2, 1/2, 1/2).
///
/// Non-finite objective values are treated as `+∞`, so regions where the
/// objective is undefined repel the simplex.
pub fn nelder_mead<T, F>(mut f: F, start: &[T], step: &[T], opts: SimplexOptions<T>) -> SimplexResult<T>
where
    T: Real,
    F: FnMut(&[T]) -> T,
{
    let n = start.len();
    assert_eq!(step.len(), n);
    let mut evals = 0usize;
    let mut eval = |x: &[T], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            T::infinity()
        }
    };

    let mut simplex: Vec<Vec<T>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += step[i];
        simplex.push(v);
    }
    let mut values: Vec<T> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let mut converged = false;
    while evals < opts.max_evaluations {
        // Stable ordering keeps runs bit-for-bit reproducible.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread_x = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (*a - *b).abs()))
            .fold(T::zero(), T::max);
        let spread_f = (values[n] - values[0]).abs();
        if spread_x <= opts.x_tol || (opts.f_tol > T::zero() && spread_f <= opts.f_tol) {
            converged = true;
            break;
        }

        let mut centroid = vec![T::zero(); n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += *x;
            }
        }
        let nf = T::from_usize_lossy(n);
        centroid.iter_mut().for_each(|c| *c /= nf);

        let toward = |coef: T| -> Vec<T> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| *c + coef * (*w - *c))
                .collect()
        };

        let reflected = toward(-T::one());
        let f_r = eval(&reflected, &mut evals);
        if f_r < values[0] {
            let expanded = toward(-two);
            let f_e = eval(&expanded, &mut evals);
            if f_e < f_r {
                simplex[n] = expanded;
                values[n] = f_e;
            } else {
                simplex[n] = reflected;
                values[n] = f_r;
            }
            continue;
        }
        if f_r < values[n - 1] {
            simplex[n] = reflected;
            values[n] = f_r;
            continue;
        }
        let (contracted, f_c) = if f_r < values[n] {
            let c = toward(-half);
            let fc = eval(&c, &mut evals);
            (c, fc)
        } else {
            let c = toward(half);
            let fc = eval(&c, &mut evals);
            (c, fc)
        };
        if f_c < values[n].min(f_r) {
            simplex[n] = contracted;
            values[n] = f_c;
            continue;
        }
        // shrink toward the best vertex
        let best = simplex[0].clone();
        for i in 1..=n {
            let v: Vec<T> = simplex[i].iter().zip(&best).map(|(x, b)| *b + half * (*x - *b)).collect();
            values[i] = eval(&v, &mut evals);
            simplex[i] = v;
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)))
        .unwrap_or(0);
    SimplexResult {
        x: simplex[best].clone(),
        value: values[best],
        evaluations: evals,
        converged,
    }
}
