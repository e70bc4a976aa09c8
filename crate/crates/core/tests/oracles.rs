//! Independent oracles for the level enumerations: the level-1 count from
//! a brute-force sweep of small structures, and the level-2 count from a
//! standalone combinatorial model that never touches the atom store.

mod common;

use std::collections::HashSet;
use std::sync::Arc;

use ck_core::canonical::AtomStore;
use ck_core::kripke::KripkeStructure;
use ck_core::workspace::WorkspaceConfig;
use ck_core::AtomId;

use common::set_partitions;

fn store12() -> AtomStore {
    AtomStore::new(WorkspaceConfig::new(1, 2).unwrap())
}

#[test]
fn level0_is_all_valuations() {
    for props in [1usize, 2] {
        let store = AtomStore::new(WorkspaceConfig::new(props, 2).unwrap());
        assert_eq!(store.omega_level(0).unwrap().len(), 1 << props);
    }
}

/// Sweeps every structure with at most four points over one proposition
/// and two agents, collecting the distinct depth-1 theories. The canonical
/// level must realize exactly that set.
#[test]
fn level1_matches_theory_sweep() {
    let store = store12();
    let mut theories: HashSet<AtomId> = HashSet::new();
    for n in 1..=4usize {
        let partitions = set_partitions(n);
        for val_mask in 0..1u64 << n {
            let valuations: Vec<u64> = (0..n).map(|p| val_mask >> p & 1).collect();
            for part0 in &partitions {
                for part1 in &partitions {
                    let k = KripkeStructure::new(
                        1,
                        2,
                        valuations.clone(),
                        vec![part0.clone(), part1.clone()],
                    )
                    .unwrap();
                    theories.extend(k.theory_map_all(&store, 1).unwrap());
                }
            }
        }
    }
    let level1: HashSet<AtomId> = store.omega_level(1).unwrap().iter().copied().collect();
    assert_eq!(theories.len(), 8);
    assert_eq!(theories, level1);
}

/// Standalone combinatorial model of the level-2 count: level-1 atoms are
/// triples (valuation, set for agent 0, set for agent 1); blocks group by
/// the agent's set; an extension choice is a subset of the block that
/// contains the atom and projects onto the atom's own set. The total count
/// must be 128 and must match the store enumeration.
#[test]
fn level2_matches_combinatorial_count() {
    #[derive(Clone, Copy, PartialEq, Eq, Hash)]
    struct L1 {
        val: u8,
        m: [u8; 2],
    }

    let mut atoms = Vec::new();
    for val in 0..2u8 {
        for m0 in 1..4u8 {
            for m1 in 1..4u8 {
                if m0 >> val & 1 == 1 && m1 >> val & 1 == 1 {
                    atoms.push(L1 { val, m: [m0, m1] });
                }
            }
        }
    }
    assert_eq!(atoms.len(), 8);

    let count_choices = |atom: &L1, agent: usize| -> usize {
        let block: Vec<&L1> = atoms.iter().filter(|v| v.m[agent] == atom.m[agent]).collect();
        let pos = block.iter().position(|v| **v == *atom).unwrap();
        let mut count = 0;
        for mask in 0u32..1 << block.len() {
            if mask >> pos & 1 == 0 {
                continue;
            }
            let mut projected = 0u8;
            for (k, v) in block.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    projected |= 1 << v.val;
                }
            }
            if projected == atom.m[agent] {
                count += 1;
            }
        }
        count
    };

    let total: usize = atoms
        .iter()
        .map(|a| count_choices(a, 0) * count_choices(a, 1))
        .sum();
    assert_eq!(total, 128);

    let store = store12();
    assert_eq!(store.omega_level(2).unwrap().len(), total);
}

/// The per-atom extension counts of the spec's worked examples, reproduced
/// by the standalone model: a singleton-set agent contributes 2 choices, a
/// full-set agent 6.
#[test]
fn level2_per_atom_choice_profile() {
    let store = store12();
    let level1 = store.omega_level(1).unwrap();
    let mut profile: Vec<usize> = level1
        .iter()
        .map(|&w| store.extensions(w).unwrap().len())
        .collect();
    profile.sort_unstable();
    assert_eq!(profile, vec![4, 4, 12, 12, 12, 12, 36, 36]);
}

/// Three-agent sanity: the level-1 count follows the same closed form
/// (valuations times subsets-containing per agent).
#[test]
fn level1_closed_form_three_agents() {
    let store = AtomStore::new(WorkspaceConfig::new(1, 3).unwrap());
    assert_eq!(store.omega_level(1).unwrap().len(), 2 * 2 * 2 * 2);
}
