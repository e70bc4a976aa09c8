//! Property tests: grammar round-trips, semantic laws on random
//! structures, the S5 axioms, the brute-force characterization of common
//! knowledge, refinement versus theory fibers, level stability, and the
//! extension/projection adjunction.

mod common;

use std::collections::HashMap;
use std::sync::Arc;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use ck_core::canonical::AtomStore;
use ck_core::commonknowledge::CkSystem;
use ck_core::formula::{parse, render, Formula};
use ck_core::workspace::{AgentId, WorkspaceConfig};
use ck_core::AtomId;

use common::{random_formula, random_structure};

fn ws(props: usize, agents: usize) -> WorkspaceConfig {
    WorkspaceConfig::new(props, agents).unwrap()
}

/// Strategy mirror of the seeded generator, for proptest shrinking.
fn formula_strategy(props: usize, agents: usize, depth: u32) -> BoxedStrategy<Formula> {
    let leaf = (0..props).prop_map(Formula::prop).boxed();
    leaf.prop_recursive(depth + 3, 64, 3, move |inner| {
        let know = (0..agents, inner.clone())
            .prop_map(|(j, g)| Formula::know(j, g));
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            know,
        ]
    })
    .prop_filter("cap depth", move |f| f.depth() <= depth)
    .boxed()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Rendering then parsing is the identity on formula trees.
    #[test]
    fn parse_render_round_trip(f in formula_strategy(2, 3, 4)) {
        let cfg = ws(2, 3);
        let again = parse(&render(&f), &cfg).unwrap();
        prop_assert_eq!(f, again);
    }

    /// Wrapping in a knowledge operator raises depth by exactly one.
    #[test]
    fn depth_monotone_under_know(f in formula_strategy(2, 2, 3), j in 0usize..2) {
        prop_assert_eq!(Formula::know(j, f.clone()).depth(), f.depth() + 1);
    }
}

#[test]
fn thousand_random_round_trips() {
    let cfg = ws(2, 3);
    let mut rng = StdRng::seed_from_u64(0x5eed_0001);
    for _ in 0..1000 {
        let f = random_formula(&mut rng, &cfg, 4);
        let again = parse(&render(&f), &cfg).unwrap();
        assert_eq!(f, again);
    }
}

#[test]
fn alpha_contradiction_and_excluded_middle() {
    let cfg = ws(1, 2);
    let mut rng = StdRng::seed_from_u64(0x5eed_0002);
    for _ in 0..100 {
        let k = random_structure(&mut rng, 1, 2, 6);
        let f = random_formula(&mut rng, &cfg, 2);
        let contradiction = Formula::and(f.clone(), Formula::not(f.clone()));
        let excluded = Formula::or(f.clone(), Formula::not(f));
        assert!(k.alpha(&contradiction).unwrap().is_empty());
        assert!(k.alpha(&excluded).unwrap().is_full());
    }
}

/// The S5 axioms (distribution, truth, positive and negative
/// introspection) are valid on every partition structure.
#[test]
fn s5_axioms_valid_on_random_structures() {
    let cfg = ws(1, 2);
    let mut rng = StdRng::seed_from_u64(0x5eed_0003);
    for round in 0..100 {
        let k = random_structure(&mut rng, 1, 2, 6);
        let f = random_formula(&mut rng, &cfg, 2);
        let g = random_formula(&mut rng, &cfg, 2);
        for j in 0..2 {
            let kf = Formula::know(j, f.clone());
            let distribution = Formula::implies(
                Formula::and(
                    kf.clone(),
                    Formula::know(j, Formula::implies(f.clone(), g.clone())),
                ),
                Formula::know(j, g.clone()),
            );
            let truth = Formula::implies(kf.clone(), f.clone());
            let positive = Formula::implies(kf.clone(), Formula::know(j, kf.clone()));
            let negative = Formula::implies(
                Formula::not(kf.clone()),
                Formula::know(j, Formula::not(kf.clone())),
            );
            for (name, axiom) in [
                ("distribution", distribution),
                ("truth", truth),
                ("positive introspection", positive),
                ("negative introspection", negative),
            ] {
                assert!(
                    k.alpha(&axiom).unwrap().is_full(),
                    "axiom {name} failed on round {round}"
                );
            }
        }
    }
}

/// Common knowledge at a point is exactly membership of the whole cell in
/// the truth set, which equals the intersection of the E-towers up to the
/// point count.
#[test]
fn common_knowledge_equals_e_tower_intersection() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0004);
    for agents in [1usize, 2, 3] {
        let cfg = ws(1, agents);
        for _ in 0..40 {
            let k = random_structure(&mut rng, 1, agents, 5);
            let f = random_formula(&mut rng, &cfg, 1);
            let via_cells = k.common_knowledge_points(&f).unwrap();
            let mut acc = k.alpha(&f).unwrap();
            for l in 1..=k.num_points() as u32 {
                let e_l = Formula::e_power(&cfg, f.clone(), l);
                acc = acc.intersect(&k.alpha(&e_l).unwrap());
            }
            assert_eq!(via_cells, acc);
        }
    }
}

/// Each refinement round's classes are the fibers of the theory map at the
/// same depth, so the fixpoint classes are the stabilized fibers.
#[test]
fn refine_rounds_are_theory_fibers() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0005);
    for agents in [1usize, 2] {
        let store = AtomStore::new(
            WorkspaceConfig::new(1, agents).unwrap().with_lazy_cap(10),
        );
        for _ in 0..30 {
            let k = random_structure(&mut rng, 1, agents, 6);
            let rounds = k.refine();
            for (depth, classes) in rounds.iter().enumerate() {
                let atoms = k.theory_map_all(&store, depth as u32).unwrap();
                let mut label_of: HashMap<AtomId, usize> = HashMap::new();
                let fibers: Vec<usize> = atoms
                    .iter()
                    .map(|&a| {
                        let next = label_of.len();
                        *label_of.entry(a).or_insert(next)
                    })
                    .collect();
                assert_eq!(classes, &fibers, "depth {depth}");
            }
        }
    }
}

/// Points sharing a block map to atoms sharing the possibility set of that
/// agent at every depth.
#[test]
fn theory_map_respects_blocks() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0006);
    let store = AtomStore::new(WorkspaceConfig::new(1, 2).unwrap().with_lazy_cap(8));
    for _ in 0..30 {
        let k = random_structure(&mut rng, 1, 2, 6);
        for depth in 1..=3u32 {
            let atoms = k.theory_map_all(&store, depth).unwrap();
            for j in 0..2 {
                for p in 0..k.num_points() {
                    for &q in k.block_of(AgentId(j), p) {
                        assert_eq!(
                            store.choice_set(atoms[p], AgentId(j)).unwrap(),
                            store.choice_set(atoms[q], AgentId(j)).unwrap()
                        );
                    }
                }
            }
        }
    }
}

/// Level stability: the truth set at a higher level is the full preimage
/// of the truth set at the formula's own level.
#[test]
fn alpha_stable_across_levels() {
    let cfg = ws(1, 2);
    let store = AtomStore::new(cfg.clone());
    let mut rng = StdRng::seed_from_u64(0x5eed_0007);
    for _ in 0..50 {
        let f = random_formula(&mut rng, &cfg, 1);
        let low: Vec<AtomId> = store.alpha_on_level(1, &f).unwrap();
        let high = store.alpha_on_level(2, &f).unwrap();
        let expected: Vec<AtomId> = store
            .omega_level(2)
            .unwrap()
            .iter()
            .copied()
            .filter(|&v| low.contains(&store.project(v, 1).unwrap()))
            .collect();
        assert_eq!(high, expected);
    }
}

/// Extension/projection adjunction: an atom extends another exactly when
/// it projects back onto it.
#[test]
fn extension_projection_adjunction() {
    let store = AtomStore::new(ws(1, 2));
    let level1 = store.omega_level(1).unwrap();
    let level2 = store.omega_level(2).unwrap();
    for &w in level1.iter() {
        let exts = store.extensions(w).unwrap();
        for &v in level2.iter() {
            let extends = exts.contains(&v);
            let projects = store.project(v, 1).unwrap() == w;
            assert_eq!(extends, projects);
        }
    }
}

/// Characteristic formulas of distinct atoms pick out disjoint singletons.
#[test]
fn characteristic_formulas_are_exclusive() {
    let store = AtomStore::new(ws(1, 2));
    let level1 = store.omega_level(1).unwrap();
    for &w in level1.iter() {
        let fw = store.characteristic_formula(w).unwrap();
        assert_eq!(store.alpha_on_level(1, &fw).unwrap(), vec![w]);
    }
    // The disjunction over a subset is true exactly on the subset.
    let subset: Vec<AtomId> = level1.iter().copied().take(3).collect();
    let fa = store.characteristic_of_set(&subset).unwrap();
    assert_eq!(store.alpha_on_level(1, &fa).unwrap(), subset);
}

/// Evaluation by structure and evaluation by membership agree everywhere.
#[test]
fn structure_and_membership_evaluation_agree() {
    let cfg = ws(1, 2);
    let store = AtomStore::new(cfg.clone());
    let mut rng = StdRng::seed_from_u64(0x5eed_0008);
    let level2 = store.omega_level(2).unwrap();
    for _ in 0..60 {
        let f = random_formula(&mut rng, &cfg, 2);
        let by_structure = store.alpha_on_level(2, &f).unwrap();
        let by_membership = store.models_filter(&level2, &f).unwrap();
        assert_eq!(by_structure, by_membership);
    }
}

/// Every member of the restricted tower passes atom validation, and every
/// tower atom has at least one restricted extension (the closure
/// guarantee) at the enumerable levels.
#[test]
fn tower_atoms_validate_and_extend() {
    let store = Arc::new(AtomStore::new(ws(1, 2)));
    for text in ["p0 | !p0", "K0 p0 | K0 !p0"] {
        let f = parse(text, store.config()).unwrap();
        let sys = CkSystem::new(store.clone(), f).unwrap();
        let d = sys.depth();
        for i in d..=2 {
            for &w in &sys.level(i).unwrap().atoms {
                store.validate_atom(w).unwrap();
                if i < 2 {
                    assert!(
                        !sys.restricted_extensions(w).unwrap().is_empty(),
                        "{text}: atom {} at level {i} has no restricted extension",
                        w.0
                    );
                }
            }
        }
    }
}
