//! End-to-end behaviour of the staged pipeline and the sweep engine.

use colorqubit::config::DeviceConfig;
use colorqubit::dispersion::{Dispersion, DispersionModel, NeffTable};
use colorqubit::phasematch::{delta_k_dfg, delta_k_sfwm};
use colorqubit::pipeline::{evaluate, resolve_geometry, DispersionChoice, ResolvedGeometry};
use colorqubit::sweep::{fidelity_matrix, fidelity_matrix_plan, run_matrix, run_sweep, OutputKind, PointFlag, SweepAxis, SweepPlan};

fn coarse() -> DeviceConfig {
    let mut cfg = DeviceConfig::default();
    cfg.grids.points = 64;
    cfg.grids.mf_quadrature_nodes = 65;
    cfg
}

#[test]
fn failures_name_their_stage() {
    let mut cfg = coarse();
    cfg.waveguide.optimize_widths = false;
    cfg.waveguide.width_dfg_um = 0.05;
    let err = evaluate(&cfg, &DispersionChoice::effective_index()).unwrap_err();
    assert!(err.is_cutoff(), "{err}");
    assert!(!err.is_usage());
    assert!(err.to_string().starts_with("rephasematch stage"), "{err}");

    cfg.wavelengths.rephasematch = false;
    let err = evaluate(&cfg, &DispersionChoice::effective_index()).unwrap_err();
    assert!(err.to_string().starts_with("rephasematch stage") || err.to_string().starts_with("spectra stage"));
}

#[test]
fn thread_count_does_not_change_tables() {
    let base = coarse();
    let plan = SweepPlan::new(
        "det",
        vec![
            SweepAxis::new("waveguide.delta_w_um", -0.03, 0.03, 3),
            SweepAxis::new("dfg.sigma2_THz", 0.5, 0.9, 2),
        ],
    )
    .with_rephasematch(true)
    .with_outputs(&OutputKind::ALL);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_sweep(&plan, &base, &DispersionChoice::effective_index()).unwrap())
            .to_table_string()
    };
    let serial = run(1);
    assert_eq!(serial, run(3));
    assert_eq!(serial, run(1));
    assert_eq!(serial.lines().count(), 1 + plan.len());
}

#[test]
fn rephasematched_points_are_phasematched() {
    let base = coarse();
    let d = DispersionChoice::effective_index();
    let plan = SweepPlan::new("w", vec![SweepAxis::new("waveguide.delta_w_um", -0.076, 0.076, 5)]).with_rephasematch(true);
    let table = run_sweep(&plan, &base, &d).unwrap();
    let mut design = base.clone();
    design.waveguide.delta_w_um = 0.0;
    let g0 = resolve_geometry(&design, &d).unwrap();
    for row in &table.rows {
        assert_eq!(row.flag, PointFlag::Ok);
        let dw = row.coordinates[0];
        let g = ResolvedGeometry {
            width_sfwm_um: g0.width_sfwm_um + dw,
            width_dfg_um: g0.width_dfg_um + dw,
            ..g0.clone()
        };
        let (s, f) = g.models(&base, &d).unwrap();
        let (w1, w2, ws) = row.wavelengths.unwrap().omegas();
        assert!(delta_k_sfwm(&s, w1, ws).unwrap().delta_k.abs() < 1e-6);
        assert!(delta_k_dfg(&f, w1, w2, ws).unwrap().delta_k.abs() < 1e-6);
        assert_eq!(row.wavelengths.unwrap().pump2_um, base.wavelengths.pump2_um);
    }
}

#[test]
fn relative_pair_rate_grows_with_filter_bandwidth() {
    let base = coarse();
    let plan = SweepPlan::new("rate", vec![SweepAxis::new("sfwm.sigma_f_THz", 0.05, 4.0, 8)])
        .with_outputs(&[OutputKind::RelativePairRate]);
    let t = run_sweep(&plan, &base, &DispersionChoice::effective_index()).unwrap();
    let rates: Vec<f64> = t.column(OutputKind::RelativePairRate).unwrap().into_iter().map(Option::unwrap).collect();
    assert!(rates.windows(2).all(|w| w[1] >= w[0]), "{rates:?}");
    assert!(rates[0] < 0.1 * rates[2], "{rates:?}");

    let at_design = SweepPlan::new("rate", vec![SweepAxis::new("sfwm.sigma_f_THz", 1.0, 1.0, 1)])
        .with_outputs(&[OutputKind::RelativePairRate]);
    let t = run_sweep(&at_design, &base, &DispersionChoice::effective_index()).unwrap();
    assert_eq!(t.rows[0].value(0), Some(1.0));
}

#[test]
fn single_cell_matrix_reduces_to_a_sweep() {
    let base = coarse();
    let d = DispersionChoice::effective_index();
    let cells = fidelity_matrix(&[1e4], &[6.0], (30.0, 50.0, 2), (0.8, 0.9, 2), 0.5, 4.0, &base, &d).unwrap();
    assert_eq!(cells.len(), 1);
    let mut plan = fidelity_matrix_plan(&[1e4], &[6.0], (30.0, 50.0, 2), (0.8, 0.9, 2), 0.5, 4.0);
    plan.outer.clear();
    let plan = plan.with_fixed("dfg.L_um", 1e4).with_fixed("sfwm.sigma1_THz", 6.0);
    let direct = run_sweep(&plan, &base, &d).unwrap();
    assert_eq!(cells[0].rows, direct.rows);

    let nine = fidelity_matrix_plan(&[5e3, 1e4, 2e4], &[5.0, 6.0, 7.0], (30.0, 50.0, 2), (0.8, 0.9, 2), 0.5, 4.0);
    assert_eq!(nine.outer_combinations().len(), 9);
    assert!(fidelity_matrix(&[-1.0], &[6.0], (30.0, 50.0, 2), (0.8, 0.9, 2), 0.5, 4.0, &base, &d).is_err());
    assert!(run_matrix(&SweepPlan::new("x", vec![]), &base, &d).unwrap_err().is_usage());
}

/// Effective-index table of the built-in solver over the search range.
fn tabulate(cfg: &DeviceConfig) -> String {
    let mut text = String::from("# neff-table v1\n# width_um height_um wavelength_um neff\n");
    let h = cfg.waveguide.height_um;
    for iw in 0..=32 {
        let w = 0.6 + 0.05 * iw as f64;
        let model = DispersionModel::effective_index_method(colorqubit::pipeline::geometry(cfg, w).unwrap());
        for il in 0..=130 {
            let l = 0.5 + 0.01 * il as f64;
            if let Ok(n) = model.effective_index(l) {
                text.push_str(&format!("{w} {h} {l} {n:.15}\n"));
            } else {
                // Keep the lattice rectangular with a weakly guided value.
                text.push_str(&format!("{w} {h} {l} 1.4500001\n"));
            }
        }
    }
    text
}

#[test]
fn imported_table_drives_the_same_pipeline() {
    let cfg = coarse();
    let table = NeffTable::parse(&tabulate(&cfg)).unwrap();
    let native = evaluate(&cfg, &DispersionChoice::effective_index()).unwrap();
    let imported = evaluate(&cfg, &DispersionChoice::tabulated(table)).unwrap();
    assert!((native.geometry.width_sfwm_um - imported.geometry.width_sfwm_um).abs() < 0.01);
    assert!((native.geometry.width_dfg_um - imported.geometry.width_dfg_um).abs() < 0.01);
    assert!((native.fidelity() - imported.fidelity()).abs() < 5e-3);
    assert!((native.purity.value - imported.purity.value).abs() < 1e-3);
}
