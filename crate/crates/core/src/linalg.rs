//! Complex singular value decomposition by one-sided Jacobi rotations.
//!
//! One-sided Jacobi orthogonalizes the columns of the matrix directly and so
//! keeps small singular values and their vectors accurate to working
//! precision, which the Schmidt reconstruction tolerances require.

use num_complex::Complex;
use rayon::prelude::*;

use crate::scalar::Real;

/// `A = Σ_k s_k · u_k · v_kᴴ`, singular values descending.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    /// Left singular vectors, each of length `rows`.
    pub u: Vec<Vec<Complex<T>>>,
    pub s: Vec<T>,
    /// Right singular vectors, each of length `cols`.
    pub v: Vec<Vec<Complex<T>>>,
    pub sweeps: usize,
}

const MAX_SWEEPS: usize = 80;

fn dot<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y)
}

fn norm_sq<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().fold(T::zero(), |acc, x| acc + x.norm_sqr())
}

struct Column<T> {
    a: Vec<Complex<T>>,
    v: Vec<Complex<T>>,
}

/// Orthogonalizes one column pair; returns whether a rotation was applied.
fn rotate_pair<T: Real>(p: &mut Column<T>, q: &mut Column<T>, tol: T) -> bool {
    let alpha = norm_sq(&p.a);
    let beta = norm_sq(&q.a);
    let gamma = dot(&p.a, &q.a);
    let g = gamma.norm();
    if !(g > tol * (alpha * beta).sqrt()) || g == T::zero() {
        return false;
    }
    let phase = gamma / g; // e^{iφ}
    let zeta = (beta - alpha) / (T::lit(2.0) * g);
    let sign = if zeta >= T::zero() { T::one() } else { -T::one() };
    let t = sign / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
    let c = T::one() / (T::one() + t * t).sqrt();
    let s = c * t;
    let e = phase.conj(); // e^{-iφ}
    // [x_p, x_q] ← [x_p, x_q]·[[c, s], [−s·e^{−iφ}, c·e^{−iφ}]]
    let apply = |xp: &mut [Complex<T>], xq: &mut [Complex<T>]| {
        for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
            let (x, y) = (*a, *b);
            let ye = y * e;
            *a = x.scale(c) - ye.scale(s);
            *b = x.scale(s) + ye.scale(c);
        }
    };
    apply(&mut p.a, &mut q.a);
    apply(&mut p.v, &mut q.v);
    true
}

/// SVD of a row-major `rows × cols` matrix.
pub fn svd<T: Real>(matrix: &[Complex<T>], rows: usize, cols: usize) -> Svd<T> {
    assert_eq!(matrix.len(), rows * cols, "matrix size mismatch");
    if rows < cols {
        // Work on the transpose: Aᵀ = U′ΣV′ᴴ ⇒ A = conj(V′)·Σ·conj(U′)ᴴ.
        let mut t = Vec::with_capacity(matrix.len());
        for j in 0..cols {
            for i in 0..rows {
                t.push(matrix[i * cols + j]);
            }
        }
        let r = svd(&t, cols, rows);
        let conj_all = |vs: Vec<Vec<Complex<T>>>| -> Vec<Vec<Complex<T>>> {
            vs.into_iter().map(|c| c.into_iter().map(|z| z.conj()).collect()).collect()
        };
        return Svd {
            u: conj_all(r.v),
            s: r.s,
            v: conj_all(r.u),
            sweeps: r.sweeps,
        };
    }

    let zero = Complex::new(T::zero(), T::zero());
    let mut columns: Vec<Column<T>> = (0..cols)
        .map(|j| {
            let mut v = vec![zero; cols];
            v[j] = Complex::new(T::one(), T::zero());
            Column {
                a: (0..rows).map(|i| matrix[i * cols + j]).collect(),
                v,
            }
        })
        .collect();
    let tol = T::epsilon() * T::lit(4.0);

    // Round-robin tournament: each round pairs every column exactly once, so
    // the rotations of a round commute and run in parallel; the result does
    // not depend on scheduling.
    let slots = cols + cols % 2;
    let mut sweeps = 0;
    if cols > 1 {
        for sweep in 0..MAX_SWEEPS {
            sweeps = sweep + 1;
            let mut rotated = false;
            for round in 0..slots - 1 {
                // Circle method: slot 0 stays, the others rotate by one per round.
                let position = |i: usize| if i == 0 { 0 } else { 1 + (i - 1 + round) % (slots - 1) };
                let pairs: Vec<(usize, usize)> = (0..slots / 2)
                    .map(|k| {
                        let (a, b) = (position(k), position(slots - 1 - k));
                        (a.min(b), a.max(b))
                    })
                    .filter(|&(_, b)| b < cols)
                    .collect();
                let mut taken: Vec<(usize, usize, Column<T>, Column<T>)> = pairs
                    .iter()
                    .map(|&(p, q)| {
                        let cp = std::mem::replace(&mut columns[p], Column { a: Vec::new(), v: Vec::new() });
                        let cq = std::mem::replace(&mut columns[q], Column { a: Vec::new(), v: Vec::new() });
                        (p, q, cp, cq)
                    })
                    .collect();
                let any = taken
                    .par_iter_mut()
                    .map(|(_, _, cp, cq)| rotate_pair(cp, cq, tol))
                    .reduce(|| false, |x, y| x || y);
                rotated |= any;
                for (p, q, cp, cq) in taken {
                    columns[p] = cp;
                    columns[q] = cq;
                }
            }
            if !rotated {
                break;
            }
        }
    }

    let mut entries: Vec<(T, Column<T>)> = columns.into_iter().map(|c| (norm_sq(&c.a).sqrt(), c)).collect();
    // Stable sort keeps the decomposition deterministic under ties.
    entries.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut u = Vec::with_capacity(cols);
    let mut s = Vec::with_capacity(cols);
    let mut v = Vec::with_capacity(cols);
    for (sigma, c) in entries {
        let col = if sigma > T::zero() {
            let inv = T::one() / sigma;
            c.a.into_iter().map(|z| z.scale(inv)).collect()
        } else {
            vec![zero; rows]
        };
        u.push(col);
        s.push(sigma);
        v.push(c.v);
    }
    Svd { u, s, v, sweeps }
}
