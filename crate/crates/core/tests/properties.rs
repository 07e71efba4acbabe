use lrtrunc::config::{ExperimentConfig, KernelSpec};
use lrtrunc::overlap::weighted_overlap;
use lrtrunc::pathmeasure::{build_m2, build_m3, PathMeasure};
use lrtrunc::percolation::parse_edge_dump;
use lrtrunc::Kernel;
use proptest::prelude::*;

proptest! {
    #[test]
    fn config_parser_never_panics(text in "\\PC{0,400}") {
        let _ = ExperimentConfig::parse(&text);
    }

    #[test]
    fn config_parser_survives_ini_shaped_noise(
        lines in proptest::collection::vec("(\\[[a-z]{0,10}\\]|[a-z_]{1,12} ?= ?[-0-9a-z.,e ]{0,20}|;.*)", 0..20)
    ) {
        let _ = ExperimentConfig::parse(&lines.join("\n"));
    }

    #[test]
    fn kernel_spec_parser_never_panics(text in "[a-z-]{0,16}\\(?[a-z0-9=., -]{0,40}\\)?") {
        if let Ok(spec) = KernelSpec::parse(&text) {
            prop_assert_eq!(KernelSpec::parse(&spec.to_string()).unwrap(), spec);
        }
    }

    #[test]
    fn edge_dump_parser_never_panics(text in "[-0-9 #\n]{0,200}", dim in 1usize..4) {
        if let Ok(edges) = parse_edge_dump(&text, dim) {
            prop_assert!(edges.iter().all(|(x, y)| x.len() == dim && y.len() == dim));
        }
    }
}

fn measures() -> Vec<PathMeasure> {
    let k4 = Kernel::flat_box(4, 0.1, 2).unwrap();
    let k3 = Kernel::inverse_power(3, 1.0, 3.5, 0.5, lrtrunc::Norm::Linf).unwrap();
    vec![
        PathMeasure::M2 { config: build_m2(&k4, None).unwrap(), phase: 0 },
        PathMeasure::M3(build_m3(&k3, Some(50)).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn overlap_is_symmetric_and_monotone(s1 in any::<u64>(), s2 in any::<u64>(), n in 1usize..40) {
        for m in measures() {
            let (a, b) = (m.sample(n, s1), m.sample(n, s2));
            let ab = weighted_overlap(&a, &b, m.kernel());
            let ba = weighted_overlap(&b, &a, m.kernel());
            prop_assert_eq!(ab.shared_edge_count, ba.shared_edge_count);
            prop_assert!((ab.log_value - ba.log_value).abs() < 1e-12);
            prop_assert!(ab.log_value >= 0.0);
            let mut prev = 0.0;
            for k in 0..=n {
                let v = weighted_overlap(&a.truncated(k), &b.truncated(k), m.kernel()).log_value;
                prop_assert!(v >= prev - 1e-12);
                prev = v;
            }
            // A path overlaps itself on every edge.
            let self_ov = weighted_overlap(&a, &a, m.kernel());
            prop_assert_eq!(self_ov.shared_edge_count, n);
        }
    }
}
