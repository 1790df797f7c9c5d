//! Property tests of the dyadic, field and form invariants.

use proptest::prelude::*;

use entangled::dyadic::{area_units, random_convex_tree, ConvexTree, DyadicSquare};
use entangled::field::SampledField;
use entangled::forms::{box_average, box_average_brute_force, Quadruple};
use entangled::maximal::{quadratic_maximal, tree_size};

fn small_field(values: Vec<f64>) -> SampledField {
    SampledField::new_2d(1.0, 8, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_trees_are_convex_and_leaves_tile_the_root(seed in any::<u64>(), depth in 0u32..6, p in 0.1f64..0.9) {
        let tree = random_convex_tree(seed, depth, p);
        prop_assert!(tree.tree().is_convex());
        let finest = tree.finest_scale() - 1;
        let leaves = tree.leaves();
        prop_assert_eq!(area_units(leaves.iter().copied(), finest), area_units([tree.root()], finest));
        for a in &leaves {
            prop_assert!(!tree.contains(a));
            prop_assert!(tree.contains(&a.parent()));
            for b in &leaves {
                prop_assert!(a == b || !a.overlaps(b));
            }
        }
        prop_assert_eq!(ConvexTree::from_text(&tree.to_text()).unwrap(), tree);
    }

    #[test]
    fn boundary_ratio_is_finite_and_positive(seed in any::<u64>(), depth in 0u32..7) {
        let r = random_convex_tree(seed, depth, 0.6).boundary_ratio();
        prop_assert!(r.is_finite() && r > 0.0);
    }

    #[test]
    fn squares_relate_to_their_ancestors(k in -6i32..3, mx in -40i64..40, my in -40i64..40, up in 0i32..5) {
        let s = DyadicSquare::new(k, mx, my);
        let a = s.ancestor(k + up).unwrap();
        prop_assert!(a.contains(&s));
        prop_assert!(s.children().iter().all(|c| s.contains(c) && c.parent() == s));
        let (x0, _, y0, _) = s.bounds();
        prop_assert_eq!(DyadicSquare::containing_point(k, x0, y0), s);
    }

    #[test]
    fn separable_box_average_matches_brute_force(
        values in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 64), 4),
        p in -1.0f64..1.0,
        q in -1.0f64..1.0,
        t in 0.1f64..1.0,
    ) {
        let fields: [SampledField; 4] = std::array::from_fn(|j| small_field(values[j].clone()));
        let quad = Quadruple::new(fields).unwrap();
        let fast = box_average(&quad, p, q, t).unwrap();
        let brute = box_average_brute_force(&quad, p, q, t).unwrap();
        prop_assert!((fast - brute).abs() <= 1e-10 * (1.0 + brute.abs()), "{} vs {}", fast, brute);
    }

    #[test]
    fn maximal_function_dominates_and_is_homogeneous(values in prop::collection::vec(-2.0f64..2.0, 64), c in 0.1f64..4.0) {
        let f = small_field(values);
        let m = quadratic_maximal(&f).unwrap().field;
        let mc = quadratic_maximal(&f.scaled(c)).unwrap().field;
        for ((&v, &mv), &mcv) in f.values().iter().zip(m.values()).zip(mc.values()) {
            prop_assert!(mv >= v.abs() - 1e-12);
            prop_assert!((mcv - c * mv).abs() <= 1e-9 * (1.0 + c * mv));
        }
    }

    #[test]
    fn tree_size_is_monotone_in_the_collection(values in prop::collection::vec(-1.0f64..1.0, 64), seed in any::<u64>()) {
        let f = small_field(values);
        let tree = random_convex_tree(seed, 2, 0.6);
        let all: Vec<DyadicSquare> = tree.members().iter().copied().collect();
        let root = [tree.root()];
        prop_assert!(tree_size(&f, &all).unwrap().value >= tree_size(&f, &root).unwrap().value - 1e-12);
    }
}
