//! Property-based checks of the numerical invariants.

use std::sync::OnceLock;

use colorqubit::config::DeviceConfig;
use colorqubit::dispersion::Dispersion;
use colorqubit::gate::{evolve_pure, GateParameters, PureInput};
use colorqubit::phasematch::{converted_omega, delta_k_dfg, delta_k_sfwm};
use colorqubit::schmidt::{schmidt_decompose, SchmidtDecomposition};
use colorqubit::spectra::{Axis, JointAmplitude, SpectralGrid};
use colorqubit::sweep::{OutputKind, SweepAxis, SweepPlan};
use num_complex::Complex;
use proptest::prelude::*;

/// `n(λ) = a₀ + a₁/λ² + a₂·λ² + a₃/λ⁴`, an arbitrary smooth model with no
/// relation to the built-in materials.
#[derive(Debug, Clone, Copy)]
struct Cauchy([f64; 4]);

impl Dispersion<f64> for Cauchy {
    fn effective_index(&self, l: f64) -> colorqubit::Result<f64> {
        let [a0, a1, a2, a3] = self.0;
        Ok(a0 + a1 / (l * l) + a2 * l * l + a3 / (l * l * l * l))
    }
}

fn cauchy() -> impl Strategy<Value = Cauchy> {
    (1.3..2.3f64, 0.0..0.05f64, -0.02..0.0f64, 0.0..0.003f64).prop_map(|(a, b, c, d)| Cauchy([a, b, c, d]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn degenerate_and_trivial_roots_are_exact(
        model in cauchy(),
        w1 in 1.2..2.6f64,
        w2 in 1.0..1.6f64,
        ws in 1.2..1.8f64,
    ) {
        prop_assert!(delta_k_sfwm(&model, w1, w1).unwrap().delta_k.abs() < 1e-12);
        // ω₂ = ω₁: the converted photon sits at ω_s.
        prop_assert!(delta_k_dfg(&model, w1, w1, ws).unwrap().delta_k.abs() < 1e-12);
        // ω_s = ω₂: the converted photon sits at ω₁.
        prop_assert!(delta_k_dfg(&model, w1, w2, w2).unwrap().delta_k.abs() < 1e-12);
        prop_assert_eq!(converted_omega(w1, w2, w2), w1);
    }
}

fn gaussian_mixture(grid: &SpectralGrid<f64>, params: &[(f64, f64, f64, f64)]) -> JointAmplitude<f64> {
    let mut v = Vec::with_capacity(grid.len());
    for ia in 0..grid.a.points {
        for ib in 0..grid.b.points {
            let (x, y) = (grid.a.offset(ia), grid.b.offset(ib));
            let z = params.iter().fold(Complex::new(0.0, 0.0), |acc, &(rho, sx, phase, weight)| {
                let e = -(x * x / (sx * sx) + y * y) / 2.0 - rho * x * y;
                acc + Complex::from_polar(weight * e.exp(), phase * x)
            });
            v.push(z);
        }
    }
    JointAmplitude::from_values(*grid, v).unwrap()
}

/// A few correlated conversion functions, decomposed once and shared.
fn conversion_sources() -> &'static [SchmidtDecomposition<f64>] {
    static SOURCES: OnceLock<Vec<SchmidtDecomposition<f64>>> = OnceLock::new();
    SOURCES.get_or_init(|| {
        let grid = SpectralGrid::new(Axis::new(150.0, 8.0, 64), Axis::new(250.0, 8.0, 64)).unwrap();
        [
            vec![(0.0, 1.0, 0.0, 1.0)],
            vec![(0.4, 1.2, 0.0, 1.0)],
            vec![(0.7, 1.5, 0.3, 1.0), (-0.2, 0.8, -0.5, 0.4)],
        ]
        .iter()
        .map(|p| schmidt_decompose(&gaussian_mixture(&grid, p), 0.99999).unwrap())
        .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn gate_outputs_are_normalized_and_bounded(
        source in 0usize..3,
        centre in -2.0..2.0f64,
        width in 0.5..3.0f64,
        chirp in -1.0..1.0f64,
        power1 in 0.0..8.0f64,
        power2 in 0.0..8.0f64,
        nu in -std::f64::consts::PI..std::f64::consts::PI,
    ) {
        let mf = &conversion_sources()[source];
        let axis = mf.axis_a;
        let amp: Vec<Complex<f64>> = (0..axis.points)
            .map(|i| {
                let x = axis.offset(i) - centre;
                Complex::from_polar((-x * x / (2.0 * width * width)).exp(), chirp * x * x)
            })
            .collect();
        let input = PureInput::normalized("fuzz", axis, amp).unwrap();
        let gate = GateParameters {
            length_um: 1e4,
            gamma: 2.5,
            power1_mw: power1,
            power2_mw: power2,
            sigma1: 6.0,
            sigma2: 0.7,
            nu,
            epsilon: Some(4e-5),
        };
        let q = evolve_pure(&input, mf, &gate).unwrap();
        prop_assert!((0.0..=1.0).contains(&q.fidelity));
        let n2 = q.normalization * q.normalization;
        let total = n2 * (q.alpha.norm_sqr() + q.beta.norm_sqr() + q.spurious_weight() + q.out_of_span);
        prop_assert!((total - 1.0).abs() < 1e-12);
        // The axis phase never changes magnitudes.
        let q0 = evolve_pure(&input, mf, &GateParameters { nu: 0.0, ..gate }).unwrap();
        prop_assert!((q.alpha.norm() - q0.alpha.norm()).abs() < 1e-12);
        prop_assert!((q.beta.norm() - q0.beta.norm()).abs() < 1e-12);
        prop_assert!((q.fidelity - q0.fidelity).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn separable_amplitudes_have_rank_one(
        ca in -2.0..2.0f64, wa in 0.6..2.5f64, pa in -1.0..1.0f64,
        cb in -2.0..2.0f64, wb in 0.6..2.5f64, pb in -1.0..1.0f64,
    ) {
        let grid = SpectralGrid::new(Axis::new(10.0, 8.0, 64), Axis::new(20.0, 8.0, 72)).unwrap();
        let f = |x: f64, c: f64, w: f64, p: f64| Complex::from_polar((-(x - c).powi(2) / (2.0 * w * w)).exp(), p * x);
        let mut v = Vec::new();
        for ia in 0..grid.a.points {
            for ib in 0..grid.b.points {
                v.push(f(grid.a.offset(ia), ca, wa, pa) * f(grid.b.offset(ib), cb, wb, pb));
            }
        }
        let d = schmidt_decompose(&JointAmplitude::from_values(grid, v).unwrap(), 0.999).unwrap();
        prop_assert_eq!(d.rank(), 1);
        prop_assert!((d.coefficients[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_rank_reconstruction_is_exact(
        rho in -0.9..0.9f64, sx in 0.5..2.0f64, phase in -1.0..1.0f64, extra in 0.0..0.8f64,
    ) {
        let grid = SpectralGrid::new(Axis::new(10.0, 8.0, 64), Axis::new(20.0, 8.0, 64)).unwrap();
        let joint = gaussian_mixture(&grid, &[(rho, sx, phase, 1.0), (-rho / 2.0, 1.0, -phase, extra)]);
        let d = schmidt_decompose(&joint, 1.0).unwrap();
        let recon = d.reconstruct();
        let rms = (recon.iter().zip(&joint.values).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()
            / recon.len() as f64).sqrt();
        prop_assert!(rms < 1e-10, "rms {}", rms);
        prop_assert!(d.orthonormality_error() < 1e-8);
    }

    #[test]
    fn config_overrides_round_trip(
        sigma1 in 1.0..12.0f64,
        reflectivity in 0.05..0.99f64,
        length in 1e3..5e4f64,
        points in 64usize..512,
    ) {
        let mut cfg = DeviceConfig::default();
        cfg.set("sfwm.sigma1_THz", sigma1).unwrap();
        cfg.set("sfwm.reflectivity", reflectivity).unwrap();
        cfg.set("dfg.L_um", length).unwrap();
        cfg.set("grids.points", points as f64).unwrap();
        let back = DeviceConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn plan_axes_are_monotone_and_complete(start in -1.0..1.0f64, span in 1e-3..2.0f64, steps in 1usize..60) {
        let plan = SweepPlan::new("p", vec![SweepAxis::new("dfg.nu_rad", start, start + span, steps)])
            .with_outputs(&[OutputKind::Fidelity]);
        let v = plan.axes[0].values();
        prop_assert_eq!(v.len(), steps);
        prop_assert_eq!(v[0], start);
        prop_assert!(v.windows(2).all(|w| w[1] > w[0]));
        prop_assert_eq!(plan.coordinates().len(), plan.len());
    }
}
