//! Experiment runner: configuration, experiments, reports, and the built-in
//! fixture matrix behind `check --all`.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{ExperimentConfig, ExperimentKind, FieldSpec, OutputFormat};
pub use experiments::{
    block_bound, indicator_identity, local_energy_exact, lp_distance, run, run_cn_table, run_gconv,
    run_measurable_check, run_ponce_sweep, run_simple_check, run_vitali_check, BlockBound,
};
pub use report::{emit_report, fit_order, write_outputs, Report, Row, Verdict};

fn sweep_config(name: String, u: &str, h: &str, p: f64) -> ExperimentConfig {
    let kind = if h.starts_with("checkerboard") || h.starts_with("simple") {
        ExperimentKind::MeasurableCheck
    } else {
        ExperimentKind::PonceSweep
    };
    let mut cfg = ExperimentConfig::new(kind);
    cfg.name = Some(name);
    cfg.grid.n = vec![2000];
    cfg.kernel.p = p;
    cfg.coefficient.spec = h.into();
    cfg.field.u = u.into();
    cfg.sweep.deltas = vec![0.2, 0.1, 0.05, 0.025];
    if kind == ExperimentKind::PonceSweep {
        cfg.sweep.min_order = Some(0.8);
    }
    cfg
}

/// The fixture matrix run by `check --all`.
pub fn fixture_matrix() -> Vec<ExperimentConfig> {
    let mut out = vec![ExperimentConfig::new(ExperimentKind::CnTable)];
    for (u_name, u) in [("x", "x"), ("x2", "x2"), ("sinpi", "sinpi")] {
        for (h_name, h) in [("const", "const:1"), ("affine", "affine:1,1"), ("checkerboard", "checkerboard:1,2,4")] {
            for p in [2.0, 3.0] {
                out.push(sweep_config(format!("sweep_{u_name}_{h_name}_p{p}"), u, h, p));
            }
        }
    }
    for (family, u) in [("hat", "sinpi"), ("tquad", "x2")] {
        let mut cfg = sweep_config(format!("sweep_{u}_affine_{family}"), u, "affine:1,1", 2.0);
        cfg.kernel.family = family.into();
        out.push(cfg);
    }
    for p in [2.0, 3.0] {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Gconv);
        cfg.name = Some(format!("gconv_p{p}"));
        cfg.grid.n = vec![800];
        cfg.kernel.p = p;
        if p == 2.0 {
            cfg.sweep.max_final_error = Some(2e-2);
        }
        out.push(cfg);
    }
    let mut solve = ExperimentConfig::new(ExperimentKind::PonceSweep);
    solve.name = Some("sweep_solve_affine_p2".into());
    solve.grid.n = vec![800];
    solve.coefficient.spec = "affine:1,1".into();
    solve.field.u = "solve".into();
    out.push(solve);
    let mut gconv2 = ExperimentConfig::new(ExperimentKind::Gconv);
    gconv2.name = Some("gconv_2d_p2".into());
    gconv2.domain.lower = vec![0.0, 0.0];
    gconv2.domain.upper = vec![1.0, 1.0];
    gconv2.grid.n = vec![41, 41];
    gconv2.load.f = "const:1".into();
    gconv2.sweep.deltas = vec![0.3, 0.2, 0.15];
    out.push(gconv2);
    let mut simple = ExperimentConfig::new(ExperimentKind::SimpleCheck);
    simple.name = Some("simple_two_blocks".into());
    simple.grid.n = vec![400];
    simple.coefficient.spec = "simple:0.5/2,3".into();
    simple.field.u = "random".into();
    out.push(simple);
    out.push(ExperimentConfig::new(ExperimentKind::VitaliCheck));
    out
}
