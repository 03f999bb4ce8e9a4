mod fixtures;
mod oracles;

use material_twin::refine::instance_majorities;
use material_twin::*;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn refinement_matches_histogram_oracle_and_is_idempotent() {
    let mut r = fixtures::rng(21);
    for _ in 0..1000 {
        let (w, h) = (r.random_range(1..24), r.random_range(1..24));
        let map = fixtures::random_mask(&mut r, w, h, 5);
        let raw = fixtures::random_instances(&mut r, w, h, 6);
        let set = remove_overlaps(&raw).unwrap();
        assert!(oracles::instances_disjoint(&set));
        assert_eq!(set.masks, oracles::remove_overlaps(&raw));

        let once = refine_labels(&map, &set).unwrap();
        assert_eq!(once.classes, oracles::refine(&map, &set));
        let twice = refine_labels(&once, &set).unwrap();
        assert_eq!(once, twice);
    }
}

#[test]
fn instance_majority_equals_argmax() {
    let mut r = fixtures::rng(22);
    for _ in 0..200 {
        let map = fixtures::random_mask(&mut r, 16, 12, 8);
        let set = remove_overlaps(&fixtures::random_instances(&mut r, 16, 12, 5)).unwrap();
        let got = instance_majorities(&map, &set);
        for (m, g) in set.masks.iter().zip(got) {
            let want = oracles::histogram_argmax(m.iter().zip(&map.classes).filter(|(&b, _)| b).map(|(_, &c)| c));
            assert_eq!(g, want);
        }
    }
}

#[test]
fn overlapping_instances_rejected() {
    let map = MaterialMap::new(2, 1, vec![1, 2], Palette::permissive()).unwrap();
    let set = InstanceSet::new(2, 1, vec![vec![true, true], vec![true, false]]).unwrap();
    assert!(matches!(refine_labels(&map, &set), Err(Error::Input(_))));
}

#[test]
fn size_mismatch_rejected() {
    let map = MaterialMap::new(2, 2, vec![1; 4], Palette::permissive()).unwrap();
    let set = InstanceSet::new(3, 1, vec![vec![true; 3]]).unwrap();
    assert!(matches!(refine_labels(&map, &set), Err(Error::Shape(_))));
}

#[test]
fn all_unlabeled_instance_left_alone() {
    let map = MaterialMap::new(3, 1, vec![UNLABELED, UNLABELED, 4], Palette::permissive()).unwrap();
    let set = InstanceSet::new(3, 1, vec![vec![true, true, false]]).unwrap();
    assert_eq!(refine_labels(&map, &set).unwrap(), map);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Pixels outside every instance keep their label; every instance ends
    /// up with a single class drawn from its own pixels.
    #[test]
    fn refinement_conserves_labels(seed in any::<u64>()) {
        let mut r = fixtures::rng(seed);
        let map = fixtures::random_mask(&mut r, 12, 9, 4);
        let set = remove_overlaps(&fixtures::random_instances(&mut r, 12, 9, 4)).unwrap();
        let out = refine_labels(&map, &set).unwrap();
        for p in 0..map.classes.len() {
            if !set.masks.iter().any(|m| m[p]) {
                prop_assert_eq!(out.classes[p], map.classes[p]);
            }
        }
        for m in &set.masks {
            let inside: Vec<ClassId> = (0..m.len()).filter(|&p| m[p]).map(|p| out.classes[p]).collect();
            let labeled_before = (0..m.len()).any(|p| m[p] && map.classes[p] != UNLABELED);
            if labeled_before {
                prop_assert!(inside.iter().all(|&c| c == inside[0]));
                prop_assert!((0..m.len()).any(|p| m[p] && map.classes[p] == inside[0]));
            }
        }
    }
}
