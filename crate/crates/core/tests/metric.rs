use fpp_core::environment::{Environment, WeightDistribution};
use fpp_core::group::{Element, GroupModel};
use fpp_core::metric::{
    path_weight, passage_time, restricted_passage_time, CompiledDomain, Domain, DEFAULT_RELAXATION_BUDGET,
};
use fpp_core::FppError;
use proptest::prelude::*;

const BUDGET: u64 = DEFAULT_RELAXATION_BUDGET;

fn uniform(seed: u64) -> Environment {
    Environment::new(seed, WeightDistribution::Uniform { a: 0.0, b: 1.0 })
}

fn ball(model: &GroupModel, r: u64) -> Vec<Element> {
    model.ball(&Element::identity(), r).unwrap().into_iter().map(|(g, _)| g).collect()
}

#[test]
fn identical_endpoints_have_zero_time() {
    let f2 = GroupModel::free(2);
    let x = f2.parse_element("ab").unwrap();
    let r = restricted_passage_time(&f2, &uniform(1), &x, &x, 2, BUDGET).unwrap();
    assert_eq!(r.time, 0.0);
    assert_eq!(r.path, vec![x]);
    assert_eq!(r.n_edges(), 0);
}

#[test]
fn tree_passage_is_geodesic_weight_sum() {
    let f2 = GroupModel::free(2);
    let pts = ball(&f2, 3);
    for seed in 0..5 {
        let env = uniform(seed);
        for (i, x) in pts.iter().enumerate().step_by(5) {
            for y in pts.iter().skip(i % 7).step_by(9) {
                let r = restricted_passage_time(&f2, &env, x, y, 2, BUDGET).unwrap();
                let geo = f2.word_geodesic(x, y).unwrap();
                assert_eq!(r.path, geo);
                assert_eq!(r.time, path_weight(&f2, &env, &geo).unwrap());
            }
        }
    }
}

#[test]
fn reported_time_is_weight_of_reported_path() {
    let m = GroupModel::mixed_f2();
    let one = Element::identity();
    for seed in 0..20 {
        let env = uniform(seed);
        let y = m.parse_element("b^9a^2b^-3").unwrap();
        let r = restricted_passage_time(&m, &env, &one, &y, 2, BUDGET).unwrap();
        assert_eq!(r.time, path_weight(&m, &env, &r.path).unwrap());
        assert!(r.n_edges() as u64 >= m.distance(&one, &y).unwrap());
    }
}

#[test]
fn symmetric_and_triangle_inequality_in_a_fixed_domain() {
    let m = GroupModel::mixed_f2();
    let dom = CompiledDomain::compile(&m, &Domain::WholeBall { center: Element::identity(), radius: 4 }).unwrap();
    let pts: Vec<Element> = ball(&m, 2);
    for seed in 0..3 {
        let env = uniform(seed);
        let t = |x: &Element, y: &Element| dom.passage(&env, x, y, BUDGET).unwrap().time;
        for x in pts.iter().step_by(3) {
            for y in pts.iter().step_by(4) {
                let (a, b) = (t(x, y), t(y, x));
                assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{a} vs {b}");
                for z in pts.iter().step_by(11) {
                    assert!(t(x, z) <= t(x, y) + t(y, z) + 1e-12);
                }
            }
        }
    }
}

#[test]
fn bridge_identity_on_mixed_f2() {
    let m = GroupModel::mixed_f2();
    let one = Element::identity();
    let n = 25;
    let target = Element::power(0, n);
    let geo = m.word_geodesic(&one, &target).unwrap();
    for seed in 0..100 {
        let env = uniform(seed);
        let r = restricted_passage_time(&m, &env, &one, &target, 3, BUDGET).unwrap();
        let bridges = path_weight(&m, &env, &geo).unwrap();
        assert!((r.time - bridges).abs() <= 1e-10);
        assert_eq!(r.path, geo);
    }
}

#[test]
fn cylinder_times_decrease_with_radius() {
    let m = GroupModel::mixed_f2();
    let one = Element::identity();
    let y = m.parse_element("b^30").unwrap();
    let doms: Vec<CompiledDomain> = (0..=4)
        .map(|b| CompiledDomain::compile(&m, &Domain::cylinder_around(&m, &one, &y, b).unwrap()).unwrap())
        .collect();
    for seed in 0..50 {
        let env = uniform(seed);
        let ts: Vec<f64> = doms.iter().map(|d| d.passage(&env, &one, &y, BUDGET).unwrap().time).collect();
        assert!(ts.windows(2).all(|w| w[1] <= w[0]), "{ts:?}");
    }
}

#[test]
fn bounded_away_weights_bound_geodesic_length() {
    let m = GroupModel::mixed_f2();
    let env = Environment::new(3, WeightDistribution::BoundedAway { a: 1.0, b: 2.0 });
    let one = Element::identity();
    for w in ["b^20", "a^5b^7", "b^-9a^-3b^4"] {
        let y = m.parse_element(w).unwrap();
        let d = m.distance(&one, &y).unwrap();
        let r = restricted_passage_time(&m, &env, &one, &y, 3, BUDGET).unwrap();
        assert!(r.time >= d as f64 && r.time <= 2.0 * d as f64);
        assert!(r.n_edges() as u64 <= 2 * d);
    }
}

#[test]
fn queries_are_deterministic() {
    let m = GroupModel::mixed_f2();
    let one = Element::identity();
    let y = m.parse_element("b^15a^3").unwrap();
    let a = restricted_passage_time(&m, &uniform(9), &one, &y, 3, BUDGET).unwrap();
    let b = restricted_passage_time(&m, &uniform(9), &one, &y, 3, BUDGET).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.path, b.path);
}

#[test]
fn target_outside_domain_is_an_error() {
    let f2 = GroupModel::free(2);
    let dom = Domain::WholeBall { center: Element::identity(), radius: 2 };
    let far = f2.parse_element("a^5").unwrap();
    assert!(passage_time(&f2, &uniform(0), &Element::identity(), &far, &dom, BUDGET).is_err());
}

#[test]
fn relaxation_budget_is_enforced() {
    let f2 = GroupModel::free(2);
    let y = f2.parse_element("a^40").unwrap();
    match restricted_passage_time(&f2, &uniform(0), &Element::identity(), &y, 3, 10) {
        Err(FppError::Resource { cap, .. }) => assert_eq!(cap, 10),
        other => panic!("expected a resource error, got {other:?}"),
    }
}

#[test]
fn passage_many_matches_single_queries() {
    let m = GroupModel::mixed_f2();
    let one = Element::identity();
    let dom = CompiledDomain::compile(&m, &Domain::WholeBall { center: one.clone(), radius: 3 }).unwrap();
    let env = uniform(4);
    let targets: Vec<Element> = ball(&m, 2).into_iter().step_by(5).collect();
    let many = dom.passage_many(&env, &one, &targets, BUDGET).unwrap();
    for (t, y) in many.iter().zip(&targets) {
        assert_eq!(*t, dom.passage(&env, &one, y, BUDGET).unwrap().time);
    }
}

fn arb_word() -> impl Strategy<Value = Element> {
    proptest::collection::vec((0u8..2, -3i32..=3), 0..5).prop_map(Element::from_syllables)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tree_oracle_on_random_pairs(x in arb_word(), y in arb_word(), seed in any::<u64>(), b in 0u64..3) {
        let f2 = GroupModel::free(2);
        let env = uniform(seed);
        let r = restricted_passage_time(&f2, &env, &x, &y, b, BUDGET).unwrap();
        let geo = f2.word_geodesic(&x, &y).unwrap();
        prop_assert_eq!(r.time, path_weight(&f2, &env, &geo).unwrap());
    }

    #[test]
    fn passage_at_most_word_geodesic_weight(y in arb_word(), seed in any::<u64>()) {
        let m = GroupModel::mixed_f2();
        let env = uniform(seed);
        let one = Element::identity();
        let r = restricted_passage_time(&m, &env, &one, &y, 1, BUDGET).unwrap();
        let geo = m.word_geodesic(&one, &y).unwrap();
        prop_assert!(r.time <= path_weight(&m, &env, &geo).unwrap() + 1e-12);
    }
}
