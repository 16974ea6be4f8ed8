use labbench::config::{parse_schedule, AlphaField, LoadKind, Shape};
use labbench::{ExperimentConfig, ExperimentKind, LabError};
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = ExperimentKind> {
    prop::sample::select(ExperimentKind::ALL.to_vec())
}

proptest! {
    #[test]
    fn canonical_text_round_trips(
        k in kind(),
        schedule in prop::collection::vec(0.0f64..1e6, 1..8),
        levels in prop::collection::btree_set(1u32..40, 1..5),
        seed in any::<u64>(),
        threads in 1usize..8,
        value in 0.0f64..10.0,
    ) {
        let mut cfg = ExperimentConfig::defaults(k);
        cfg.alpha.schedule = schedule;
        cfg.alpha.value = value;
        cfg.domain.levels = levels.into_iter().collect();
        cfg.solver.seed = seed;
        cfg.solver.threads = threads;
        let again = ExperimentConfig::parse(&cfg.to_text(), None).unwrap();
        prop_assert_eq!(&again, &cfg);
        prop_assert_eq!(again.to_text(), cfg.to_text());
    }

    #[test]
    fn pow2_schedule_is_exact(a in -30i32..30, b in -30i32..30) {
        let s = parse_schedule(&format!("pow2({a}..{b})")).unwrap();
        prop_assert_eq!(s.len() as i32, (b - a).abs() + 1);
        prop_assert_eq!(s[0], 2f64.powi(a));
        prop_assert_eq!(*s.last().unwrap(), 2f64.powi(b));
    }
}

#[test]
fn full_file() {
    let text = "\
# disk study
experiment = compat_disk

[domain]
shape = disk
radius = 1.0
levels = 1, 2, 3

[data]
load = compatible_disk
scale = 2

[alpha]
value = 0.5
field = constant

[solver]
compatibility_mode = yes
seed = 7

[output]
dir = results/disk
";
    let cfg = ExperimentConfig::parse(text, Some(ExperimentKind::CompatDisk)).unwrap();
    assert_eq!(cfg.domain.shape, Shape::Disk);
    assert_eq!(cfg.domain.levels, vec![1, 2, 3]);
    assert_eq!(cfg.data.load, LoadKind::CompatibleDisk);
    assert_eq!(cfg.data.scale, 2.0);
    assert_eq!(cfg.alpha.field, AlphaField::Constant);
    assert!(cfg.solver.compatibility_mode);
    assert_eq!(cfg.output_dir.to_str(), Some("results/disk"));
}

#[test]
fn invalid_configs_are_config_errors() {
    for text in [
        "experiment = mms\n[domain]\nshape = disk\n",
        "experiment = compat_disk\n[domain]\nshape = square\n",
        "experiment = mms\n[alpha]\nschedule = -1\n",
        "experiment = mms\n[alpha]\nfield = smooth\n",
        "experiment = ns_mms\n[solver]\ndamping = 0\n",
        "experiment = uniform_bound\n[solver]\ninitial_guess = random\n",
        "experiment = uniform_bound\n[alpha]\nschedule =\n",
        "experiment = nope\n",
    ] {
        let e = ExperimentConfig::parse(text, None).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{text}: {e}");
    }
    let missing = ExperimentConfig::from_file(std::path::Path::new("/nonexistent/cfg.txt"), None).unwrap_err();
    assert!(matches!(missing, LabError::Config(_)));
}
