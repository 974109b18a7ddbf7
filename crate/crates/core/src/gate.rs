//! Frequency-conversion gate acting on temporal-mode color qubits: coupling
//! angles, block rotations, pure and heralded evolution, fidelity and the
//! pump-power budget.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::schmidt::{overlap, SchmidtDecomposition};
use crate::spectra::Axis;

/// Physical settings of the conversion waveguide and its pumps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateParameters<T> {
    pub length_um: T,
    /// Nonlinear coefficient in the source table's convention.
    pub gamma: T,
    pub power1_mw: T,
    pub power2_mw: T,
    /// Pump bandwidths, rad/ps.
    pub sigma1: T,
    pub sigma2: T,
    /// Rotation-axis phase, rad.
    pub nu: T,
    /// Overall coupling scale; `None` until calibrated or supplied.
    pub epsilon: Option<T>,
}

impl<T: Real> GateParameters<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.length_um > T::zero()) {
            return Err(Error::Config(format!("gate length must be positive, got {}", self.length_um)));
        }
        if !(self.power1_mw >= T::zero() && self.power2_mw >= T::zero()) {
            return Err(Error::Config("pump powers must be non-negative".into()));
        }
        if !(self.sigma1 > T::zero() && self.sigma2 > T::zero()) {
            return Err(Error::Config("pump bandwidths must be positive".into()));
        }
        if !(self.gamma > T::zero()) {
            return Err(Error::Config("nonlinear coefficient must be positive".into()));
        }
        Ok(())
    }

    fn epsilon(&self) -> Result<T> {
        self.epsilon.ok_or_else(|| {
            Error::Config("coupling scale ε is not set; calibrate it against a target power product or supply it".into())
        })
    }

    pub fn power_product(&self) -> T {
        self.power1_mw * self.power2_mw
    }

    /// Scale both powers so their product equals `product`, keeping the ratio.
    pub fn with_power_product(mut self, product: T) -> Self {
        let current = self.power_product();
        if current > T::zero() {
            let f = (product / current).sqrt();
            self.power1_mw *= f;
            self.power2_mw *= f;
        } else {
            self.power1_mw = product.sqrt();
            self.power2_mw = product.sqrt();
        }
        self
    }
}

/// `θ_j = ε·√C_j·L·γ·√(P₁P₂/(σ₁σ₂))·e^{iν}`.
pub fn coupling_angles<T: Real>(coefficients: &[T], gate: &GateParameters<T>) -> Result<Vec<Complex<T>>> {
    gate.validate()?;
    let eps = gate.epsilon()?;
    let scale = eps * gate.length_um * gate.gamma * (gate.power_product() / (gate.sigma1 * gate.sigma2)).sqrt();
    Ok(coefficients
        .iter()
        .map(|&c| Complex::from_polar(scale * c.sqrt(), gate.nu))
        .collect())
}

/// Power product `P₁P₂` at which `|θ₁| = π/2` (complete conversion).
pub fn min_power_product<T: Real>(c1: T, gate: &GateParameters<T>) -> Result<T> {
    gate.validate()?;
    let eps = gate.epsilon()?;
    if !(c1 > T::zero()) {
        return Err(Error::Config("leading Schmidt coefficient must be positive".into()));
    }
    let r = T::FRAC_PI_2() / (eps * c1.sqrt() * gate.length_um * gate.gamma);
    Ok(r * r * gate.sigma1 * gate.sigma2)
}

/// The `ε` for which `|θ₁| = target_angle` at power product `target_product`.
pub fn calibrate_epsilon<T: Real>(c1: T, gate: &GateParameters<T>, target_product: T, target_angle: T) -> Result<T> {
    gate.validate()?;
    if !(target_product > T::zero()) {
        return Err(Error::Config("calibration power product must be positive".into()));
    }
    if !(c1 > T::zero()) {
        return Err(Error::Config("cannot calibrate against a vanishing leading Schmidt coefficient".into()));
    }
    Ok(target_angle / (c1.sqrt() * gate.length_um * gate.gamma * (target_product / (gate.sigma1 * gate.sigma2)).sqrt()))
}

/// Block-diagonal rotation about an axis in the xy plane:
/// `R^j = cos θ_j·𝕀 − i·sin θ_j·(cos ν·σ_x + sin ν·σ_y)` on each pair
/// `(|φ_j⟩, |ψ_j⟩)`, where the stored angle is `2θ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockRotation<T> {
    pub nu: T,
    pub angles: Vec<T>,
}

pub type Block<T> = [[Complex<T>; 2]; 2];

pub fn rotation_operator<T: Real>(nu: T, angles: Vec<T>) -> BlockRotation<T> {
    BlockRotation { nu, angles }
}

impl<T: Real> BlockRotation<T> {
    /// 2×2 matrix of block `j` in the `(φ, ψ)` basis; identity past the listed blocks.
    pub fn block(&self, j: usize) -> Block<T> {
        let half = self.angles.get(j).copied().unwrap_or(T::zero()) * T::lit(0.5);
        let (s, c) = half.sin_cos();
        let zero = T::zero();
        let off_upper = Complex::new(zero, -s) * Complex::from_polar(T::one(), -self.nu);
        let off_lower = Complex::new(zero, -s) * Complex::from_polar(T::one(), self.nu);
        [[Complex::new(c, zero), off_upper], [off_lower, Complex::new(c, zero)]]
    }

    pub fn apply(&self, j: usize, state: [Complex<T>; 2]) -> [Complex<T>; 2] {
        let m = self.block(j);
        [
            m[0][0] * state[0] + m[0][1] * state[1],
            m[1][0] * state[0] + m[1][1] * state[1],
        ]
    }

    /// Dense `2n × 2n` matrix ordered `(φ₁, ψ₁, φ₂, ψ₂, …)`.
    pub fn to_matrix(&self) -> Vec<Vec<Complex<T>>> {
        let n = 2 * self.angles.len();
        let mut m = vec![vec![Complex::new(T::zero(), T::zero()); n]; n];
        for j in 0..self.angles.len() {
            let b = self.block(j);
            for r in 0..2 {
                for c in 0..2 {
                    m[2 * j + r][2 * j + c] = b[r][c];
                }
            }
        }
        m
    }

    /// Blockwise product `self · other`.
    pub fn compose_blocks(&self, other: &BlockRotation<T>) -> Vec<Block<T>> {
        let n = self.angles.len().max(other.angles.len());
        (0..n).map(|j| matmul(&self.block(j), &other.block(j))).collect()
    }
}

pub fn matmul<T: Real>(a: &Block<T>, b: &Block<T>) -> Block<T> {
    let mut out = [[Complex::new(T::zero(), T::zero()); 2]; 2];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

/// A unit-norm single-photon spectral amplitude on the signal axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PureInput<T> {
    pub label: String,
    pub axis: Axis<T>,
    pub amplitude: Vec<Complex<T>>,
}

impl<T: Real> PureInput<T> {
    /// Accepts an amplitude that is already unit-norm to 1e-10.
    pub fn new(label: impl Into<String>, axis: Axis<T>, amplitude: Vec<Complex<T>>) -> Result<Self> {
        let s = Self {
            label: label.into(),
            axis,
            amplitude,
        };
        if s.amplitude.len() != axis.points {
            return Err(Error::Contract(format!(
                "input has {} samples but the axis has {}",
                s.amplitude.len(),
                axis.points
            )));
        }
        let n = s.norm_sq();
        if (n - T::one()).abs() > T::lit(1e-10) {
            return Err(Error::Contract(format!("input amplitude is not unit-norm (∫|h|² = {n})")));
        }
        Ok(s)
    }

    /// Rescales an arbitrary nonzero amplitude to unit norm.
    pub fn normalized(label: impl Into<String>, axis: Axis<T>, mut amplitude: Vec<Complex<T>>) -> Result<Self> {
        let n = amplitude.iter().fold(T::zero(), |a, z| a + z.norm_sqr()) * axis.spacing();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::Contract("input amplitude has zero or non-finite norm".into()));
        }
        let f = T::one() / n.sqrt();
        for z in &mut amplitude {
            *z = z.scale(f);
        }
        Self::new(label, axis, amplitude)
    }

    pub fn norm_sq(&self) -> T {
        self.amplitude.iter().fold(T::zero(), |a, z| a + z.norm_sqr()) * self.axis.spacing()
    }
}

/// `O_j = ∫ conj(φ_j)·h dω` against the signal-side modes.
pub fn input_overlaps<T: Real>(input: &PureInput<T>, mf: &SchmidtDecomposition<T>) -> Result<Vec<Complex<T>>> {
    if !input.axis.matches(&mf.axis_a) {
        return Err(Error::Contract(
            "input amplitude and conversion modes are sampled on different signal grids".into(),
        ));
    }
    let d = input.axis.spacing();
    Ok(mf.modes_a.iter().map(|phi| overlap(phi, &input.amplitude, d)).collect())
}

/// Result of one gate application.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitOutput<T> {
    pub theta: Vec<Complex<T>>,
    pub overlaps: Vec<Complex<T>>,
    /// Amplitudes on the fundamental pair, before renormalization.
    pub alpha: Complex<T>,
    pub beta: Complex<T>,
    pub spurious_x: Vec<Complex<T>>,
    pub spurious_y: Vec<Complex<T>>,
    /// Input weight outside the span of the retained conversion modes; it
    /// passes through unconverted.
    pub out_of_span: T,
    pub normalization: T,
    pub fidelity: T,
    /// Bound on the fidelity change from truncating the conversion modes.
    pub fidelity_uncertainty: T,
}

impl<T: Real> QubitOutput<T> {
    /// Weight in spurious temporal modes, `Σ_{j≥2}(|x_j|² + |y_j|²)`.
    pub fn spurious_weight(&self) -> T {
        self.spurious_x
            .iter()
            .chain(&self.spurious_y)
            .fold(T::zero(), |a, z| a + z.norm_sqr())
    }
}

/// Evolves a pure input through the gate.
///
/// The ideal output is `cos|θ₁|·|φ₁⟩ − i·e^{iν}·sin|θ₁|·|ψ₁⟩`; its overlap
/// with the actual output is `N·O₁`, so the fidelity is `N²|O₁|²`.
pub fn evolve_pure<T: Real>(
    input: &PureInput<T>,
    mf: &SchmidtDecomposition<T>,
    gate: &GateParameters<T>,
) -> Result<QubitOutput<T>> {
    let overlaps = input_overlaps(input, mf)?;
    let theta = coupling_angles(&mf.coefficients, gate)?;
    let axis = Complex::from_polar(T::one(), gate.nu);
    let minus_i = Complex::new(T::zero(), -T::one());
    let mut xs = Vec::with_capacity(overlaps.len());
    let mut ys = Vec::with_capacity(overlaps.len());
    for (o, t) in overlaps.iter().zip(&theta) {
        let (s, c) = t.norm().sin_cos();
        xs.push(o.scale(c));
        ys.push(minus_i * axis * o.scale(s));
    }
    let in_span = overlaps.iter().fold(T::zero(), |a, o| a + o.norm_sqr());
    let out_of_span = (input.norm_sq() - in_span).max(T::zero());
    let total = xs.iter().chain(&ys).fold(T::zero(), |a, z| a + z.norm_sqr()) + out_of_span;
    let normalization = T::one() / total.sqrt();
    let fidelity = (normalization * normalization * overlaps[0].norm_sqr()).min(T::one()).max(T::zero());
    Ok(QubitOutput {
        theta,
        overlaps,
        alpha: xs[0],
        beta: ys[0],
        spurious_x: xs[1..].to_vec(),
        spurious_y: ys[1..].to_vec(),
        out_of_span,
        normalization,
        fidelity,
        fidelity_uncertainty: mf.residual,
    })
}

/// Gate output for a heralded (mixed) input.
#[derive(Debug, Clone, PartialEq)]
pub struct HeraldedOutput<T> {
    pub theta: Vec<Complex<T>>,
    /// `O[m][j] = ⟨φ_j^conv|φ_m^herald⟩`.
    pub overlaps: Vec<Vec<Complex<T>>>,
    /// Output density in the basis `(φ₁, ψ₁, φ₂, ψ₂, …)`, row-major,
    /// normalized by the full trace including out-of-span weight.
    pub density: Vec<Complex<T>>,
    pub dimension: usize,
    /// Trace weight outside the retained conversion modes.
    pub out_of_span: T,
    pub fidelity: T,
    pub fidelity_uncertainty: T,
    /// `|O₁₁|²`: overlap of the leading heralded and conversion modes.
    pub leading_overlap: T,
}

/// Evolves the heralded state of a decomposed joint spectrum through the gate.
///
/// The heralded density is `Σ_m D_m |φ_m⟩⟨φ_m|`; each term is expanded in the
/// conversion modes, rotated block-by-block, and the fidelity taken against
/// the ideal output.
pub fn evolve_heralded<T: Real>(
    herald: &SchmidtDecomposition<T>,
    mf: &SchmidtDecomposition<T>,
    gate: &GateParameters<T>,
) -> Result<HeraldedOutput<T>> {
    if !herald.axis_a.matches(&mf.axis_a) {
        return Err(Error::Contract(
            "heralded modes and conversion modes are sampled on different signal grids".into(),
        ));
    }
    let theta = coupling_angles(&mf.coefficients, gate)?;
    let rotation = rotation_operator(gate.nu, theta.iter().map(|t| T::lit(2.0) * t.norm()).collect());
    let d = herald.axis_a.spacing();
    let r = mf.rank();
    let dim = 2 * r;
    let zero = Complex::new(T::zero(), T::zero());
    let mut density = vec![zero; dim * dim];
    let mut overlaps = Vec::with_capacity(herald.rank());
    let mut trace = T::zero();
    let mut out_of_span = T::zero();
    for (m, &dm) in herald.coefficients.iter().enumerate() {
        let o: Vec<Complex<T>> = mf.modes_a.iter().map(|phi| overlap(phi, &herald.modes_a[m], d)).collect();
        let in_span = o.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
        let norm_m = overlap(&herald.modes_a[m], &herald.modes_a[m], d).re;
        out_of_span += dm * (norm_m - in_span).max(T::zero());
        trace += dm * norm_m;
        let mut u = vec![zero; dim];
        for j in 0..r {
            let [a, b] = rotation.apply(j, [o[j], zero]);
            u[2 * j] = a;
            u[2 * j + 1] = b;
        }
        for p in 0..dim {
            for q in 0..dim {
                density[p * dim + q] += (u[p] * u[q].conj()).scale(dm);
            }
        }
        overlaps.push(o);
    }
    if !(trace > T::zero()) {
        return Err(Error::Contract("heralded state has zero weight".into()));
    }
    let inv = T::one() / trace;
    for z in &mut density {
        *z = z.scale(inv);
    }
    let out_of_span = out_of_span * inv;
    // ⟨Ψ_ideal|ρ|Ψ_ideal⟩ with Ψ_ideal = R¹|φ₁⟩.
    let ideal = rotation.apply(0, [Complex::new(T::one(), T::zero()), zero]);
    let mut f = zero;
    for p in 0..2 {
        for q in 0..2 {
            f += ideal[p].conj() * density[p * dim + q] * ideal[q];
        }
    }
    let fidelity = f.re.min(T::one()).max(T::zero());
    let leading_overlap = overlaps.first().and_then(|o| o.first()).map_or(T::zero(), |z| z.norm_sqr());
    Ok(HeraldedOutput {
        theta,
        overlaps,
        density,
        dimension: dim,
        out_of_span,
        fidelity,
        fidelity_uncertainty: mf.residual + herald.residual,
        leading_overlap,
    })
}
