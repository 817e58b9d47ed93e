use std::sync::Arc;
use std::time::Duration;

use proptest::prelude::*;
use timewindow::analysis::{monte_carlo_volume, ratio_batch};
use timewindow::generators::{gen_random, RandomSpec, ShapeFamily};
use timewindow::io::{self, InstanceRef};
use timewindow::oracle::{optimal_under_assignment, conflict_pairs, Disjunct};
use timewindow::{
    solve_greedy, solve_optimal, ActivityDiagram, Execution, Instance, OracleConfig,
    TimeWindowQuery,
};

const FAMILIES: [ShapeFamily; 4] = [
    ShapeFamily::UnitSquares,
    ShapeFamily::UnitDisks,
    ShapeFamily::Rectangles { min_side: 0.2, max_side: 2.5 },
    ShapeFamily::Mixed,
];

fn instance(seed: u64, n: usize, family: usize, spread: f64) -> Arc<Instance> {
    let spec = RandomSpec::new(seed, n)
        .shapes(FAMILIES[family])
        .weights(1.0, spread)
        .window(-2.0, 3.0)
        .extent(0.5 + n as f64 * 0.3);
    Arc::new(gen_random(&spec).unwrap())
}

fn any_instance(max_n: usize) -> impl Strategy<Value = Arc<Instance>> {
    (any::<u64>(), 0..=max_n, 0..FAMILIES.len(), prop_oneof![Just(1.0), 1.0..50.0f64])
        .prop_map(|(seed, n, family, spread)| instance(seed, n, family, spread))
}

fn small_instance() -> impl Strategy<Value = Arc<Instance>> {
    any_instance(9).prop_filter("at most 12 conflict pairs", |i| i.conflicts().pair_count() <= 12)
}

fn nested_windows() -> impl Strategy<Value = (TimeWindowQuery, TimeWindowQuery)> {
    proptest::array::uniform4(-2.0..3.0f64).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        (
            TimeWindowQuery::new(v[0], v[3]).unwrap(),
            TimeWindowQuery::new(v[1], v[2]).unwrap(),
        )
    })
}

fn assert_conflict_free(diagram: &ActivityDiagram, shown: &[usize]) {
    let graph = diagram.instance().conflicts();
    for (i, &a) in shown.iter().enumerate() {
        for &b in &shown[i + 1..] {
            assert!(!graph.conflict(a, b), "{a} and {b} shown together");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn greedy_is_valid(inst in any_instance(40)) {
        let (d, trace) = solve_greedy(&inst);
        let report = d.validate();
        prop_assert!(report.is_valid(), "{:?}", report.violations);
        prop_assert_eq!(trace.steps.len(), inst.len());
        let mut order: Vec<_> = trace.order().collect();
        order.sort_unstable();
        prop_assert_eq!(order, (0..inst.len()).collect::<Vec<_>>());
    }

    #[test]
    fn greedy_extraction_volumes_never_increase(inst in any_instance(30)) {
        let (_, trace) = solve_greedy(&inst);
        for w in trace.steps.windows(2) {
            prop_assert!(w[0].volume >= w[1].volume);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(250))]

    #[test]
    fn oracles_agree_and_dominate_greedy(inst in small_instance()) {
        let ex = solve_optimal(&inst, &OracleConfig::exhaustive()).unwrap();
        let bb = solve_optimal(&inst, &OracleConfig::branch_and_bound(Duration::from_secs(10))).unwrap();
        prop_assert!(ex.proven_optimal && bb.proven_optimal);
        prop_assert_eq!(ex.volume, bb.volume);
        prop_assert!(ex.diagram.validate().is_valid());
        prop_assert!(bb.diagram.validate().is_valid());
        prop_assert!(solve_greedy(&inst).0.volume() <= ex.volume);
    }

    #[test]
    fn any_assignment_gives_valid_diagram(inst in small_instance(), bits in any::<u64>()) {
        let choice: Vec<_> = (0..conflict_pairs(&inst).len())
            .map(|k| if bits >> k & 1 == 0 { Disjunct::Left } else { Disjunct::Top })
            .collect();
        let (d, volume) = optimal_under_assignment(&inst, &choice).unwrap();
        prop_assert!(d.validate().is_valid());
        prop_assert_eq!(d.volume(), volume);
    }

    #[test]
    fn instance_and_diagram_roundtrip(inst in any_instance(25)) {
        let back = io::instance_from_json(&io::instance_to_json(&inst)).unwrap();
        prop_assert_eq!(&back, inst.as_ref());
        let (d, _) = solve_greedy(&inst);
        let text = serde_json::to_string(&io::diagram_to_json(&d, &InstanceRef::Inline)).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        let d2 = io::diagram_from_json(&parsed, None).unwrap();
        prop_assert_eq!(d2, d);
    }

    #[test]
    fn svg_exports_are_xml(inst in any_instance(25), window in nested_windows()) {
        let (d, _) = solve_greedy(&inst);
        roxmltree::Document::parse(&io::configspace_svg(&d)).unwrap();
        let active = d.query(window.0).unwrap();
        roxmltree::Document::parse(&io::map_svg(&inst, &active).unwrap()).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn queries_nest_and_stay_conflict_free(inst in any_instance(30), (outer, inner) in nested_windows()) {
        let (d, _) = solve_greedy(&inst);
        prop_assert!(d.containment_check(outer, inner).unwrap());
        assert_conflict_free(&d, &d.query(outer).unwrap());
        assert_conflict_free(&d, &d.query(inner).unwrap());
        let stabbed: Vec<_> = d.stabbed(outer).collect();
        assert_conflict_free(&d, &stabbed);
    }
}

#[test]
fn monte_carlo_matches_exact_volume() {
    for seed in 0..6 {
        let inst = instance(seed, 12, seed as usize % FAMILIES.len(), 5.0);
        let (d, _) = solve_greedy(&inst);
        let exact = d.volume();
        let estimate = monte_carlo_volume(&d, 1_000_000, seed, Execution::default());
        let err = (estimate - exact).abs() / exact;
        assert!(err < 0.02, "seed {seed}: estimate {estimate} vs {exact}");
    }
}

#[test]
fn execution_modes_agree() {
    let instances: Vec<_> = (0..40).map(|s| instance(s, 7, s as usize % 4, 3.0)).collect();
    let oracle = OracleConfig::exhaustive();
    let seq = ratio_batch(&instances, &oracle, Execution::Sequential);
    let par = ratio_batch(&instances, &oracle, Execution::Parallel);
    for (a, b) in seq.into_iter().zip(par) {
        assert_eq!(a.unwrap(), b.unwrap());
    }
    let (d, _) = solve_greedy(&instances[3]);
    assert_eq!(
        monte_carlo_volume(&d, 50_000, 9, Execution::Sequential),
        monte_carlo_volume(&d, 50_000, 9, Execution::Parallel)
    );
}
