use labbench::config::{LoadKind, Shape};
use labbench::experiments;
use labbench::{ExperimentConfig, ExperimentKind, LabError};

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(kind);
    cfg.solver.threads = 1;
    cfg
}

#[test]
fn reports_are_byte_deterministic() {
    let mut cfg = small(ExperimentKind::Mms);
    cfg.domain.levels = vec![2, 4];
    let a = experiments::run(&cfg).unwrap();
    let b = experiments::run(&cfg).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.fits_csv(), b.fits_csv());
    assert_eq!(a.rows.len(), 2);
}

#[test]
fn thread_count_does_not_change_results() {
    let mut cfg = small(ExperimentKind::UniformBound);
    cfg.domain.levels = vec![6];
    let one = experiments::run(&cfg).unwrap();
    cfg.solver.threads = 3;
    let three = experiments::run(&cfg).unwrap();
    assert_eq!(one.to_csv(), three.to_csv());
}

#[test]
fn zero_friction_row_is_its_own_reference() {
    let mut cfg = small(ExperimentKind::AlphaToZero);
    cfg.domain.levels = vec![4];
    cfg.alpha.schedule = vec![0.25, 0.125, 0.0625];
    let r = experiments::run(&cfg).unwrap();
    let alpha = r.column("alpha").unwrap();
    let diff = r.column("velocity_h1_diff").unwrap();
    assert_eq!(alpha[0], 0.0);
    assert_eq!(diff[0], 0.0);
    assert!(diff[1..].iter().all(|d| *d > 0.0));
}

#[test]
fn incompatible_disk_data_is_rejected_before_solving() {
    let mut cfg = small(ExperimentKind::CompatDisk);
    cfg.domain.levels = vec![1];
    cfg.data.load = LoadKind::Swirl;
    match experiments::run(&cfg) {
        Err(LabError::IncompatibleData { defect, tolerance }) => {
            // int over the unit disk of |x|^2
            assert!((defect - std::f64::consts::FRAC_PI_2).abs() < 1e-10, "{defect}");
            assert_eq!(tolerance, experiments::COMPATIBILITY_TOL);
        }
        other => panic!("expected IncompatibleData, got {other:?}"),
    }
}

#[test]
fn zero_data_has_zero_moment() {
    let mut cfg = small(ExperimentKind::CompatDisk);
    cfg.domain.levels = vec![1, 2];
    cfg.data.load = LoadKind::Zero;
    assert_eq!(cfg.domain.shape, Shape::Disk);
    let r = experiments::run(&cfg).unwrap();
    assert_eq!(r.summary_value("exact_disk_compatibility_defect"), Some(0.0));
    assert!(r.column("boundary_beta_moment").unwrap().iter().all(|m| *m == 0.0));
    assert!(r.fit("boundary_moment_vs_h").is_none());
}
