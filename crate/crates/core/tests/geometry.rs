use fpp_core::combing::DirectionSpec;
use fpp_core::geometry::{delta_estimate, gromov_product, hyperplane, separation_check};
use fpp_core::group::{Element, GroupModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_element(rng: &mut ChaCha8Rng, rank: u8, len: usize) -> Element {
    Element::from_syllables((0..rng.gen_range(0..=len)).map(|_| (rng.gen_range(0..rank), rng.gen_range(-3i32..=3))))
}

#[test]
fn delta_is_zero_on_trees() {
    let f2 = GroupModel::free(2);
    let r = delta_estimate(&f2, 4, 200_000, 1).unwrap();
    assert_eq!(r.delta, 0);
}

#[test]
fn gromov_product_bounds_on_fuzzed_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for model in [GroupModel::free(2), GroupModel::mixed_f2()] {
        for _ in 0..10_000 {
            let (x, y, o) = (random_element(&mut rng, 2, 4), random_element(&mut rng, 2, 4), random_element(&mut rng, 2, 4));
            let g = gromov_product(&model, &x, &y, &o).unwrap();
            let dx = model.distance(&x, &o).unwrap() as f64;
            let dy = model.distance(&y, &o).unwrap() as f64;
            assert!(g >= 0.0 && g <= dx.min(dy), "{g} outside [0, {}]", dx.min(dy));
            assert_eq!(g, gromov_product(&model, &y, &x, &o).unwrap());
            assert_eq!((2.0 * g).fract(), 0.0);
        }
    }
}

#[test]
fn four_point_condition_on_tree() {
    // δ = 0: ⟨x, z⟩ ≥ min(⟨x, y⟩, ⟨y, z⟩)
    let f2 = GroupModel::free(2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let one = Element::identity();
    for _ in 0..5_000 {
        let (x, y, z) = (random_element(&mut rng, 2, 5), random_element(&mut rng, 2, 5), random_element(&mut rng, 2, 5));
        let xz = gromov_product(&f2, &x, &z, &one).unwrap();
        let xy = gromov_product(&f2, &x, &y, &one).unwrap();
        let yz = gromov_product(&f2, &y, &z, &one).unwrap();
        assert!(xz >= xy.min(yz));
    }
}

#[test]
fn hyperplanes_separate_on_ball_of_radius_8() {
    let f2 = GroupModel::free(2);
    for spec in ["pole:a", "pole:ab", "periodic:b|ab^-1"] {
        let ray = spec.parse::<DirectionSpec>().unwrap().realize(&f2, 30).unwrap().vertices;
        let h = hyperplane(&f2, &ray, 8, 8, 0).unwrap();
        let rep = separation_check(&f2, &h).unwrap();
        assert!(rep.separates(), "{spec}: {rep:?}");
        assert!(rep.plus > 0 && rep.minus > 0);
    }
}

#[test]
fn hyperplanes_separate_on_mixed_f2() {
    let m = GroupModel::mixed_f2();
    let delta = delta_estimate(&m, 3, 1_000_000, 0).unwrap().delta;
    for spec in ["pole:a", "pole:b", "pole:ab"] {
        let ray = spec.parse::<DirectionSpec>().unwrap().realize(&m, 24).unwrap().vertices;
        let h = hyperplane(&m, &ray, 6, 6, delta).unwrap();
        let rep = separation_check(&m, &h).unwrap();
        assert!(rep.separates(), "{spec}: {rep:?}");
    }
}
