//! Desk-scale example structures built from circular two-symbol windows
//! with involution-induced partitions.
//!
//! Points are assignments of `{a, b}` to the circular index set `Z/2nZ`.
//! The index involutions are the reflection about position zero
//! (`i -> -i`), the offset reflection (`i -> 1-i`), and optionally the
//! symbol flip at position zero. Their composition `tau . sigma` acts on
//! points as the circular shift. On a finite circular window both
//! reflections are honest involutions, which is why the window replaces
//! the doubly infinite sequence space.

use serde::{Deserialize, Serialize};

use crate::canonical::AtomStore;
use crate::error::{CkError, Result};
use crate::kripke::KripkeStructure;

/// Applies the reflection about position zero to a point bitmask.
/// Bit `i` of a point is the symbol at circular position `i` (set = `a`).
pub fn sigma(point: u64, window: usize) -> u64 {
    let mut out = 0u64;
    for i in 0..window {
        let src = (window - i) % window;
        out |= (point >> src & 1) << i;
    }
    out
}

/// Applies the offset reflection `i -> 1-i`.
pub fn tau(point: u64, window: usize) -> u64 {
    let mut out = 0u64;
    for i in 0..window {
        let src = (window + 1 - i) % window;
        out |= (point >> src & 1) << i;
    }
    out
}

/// Flips the symbol at position zero.
pub fn pi(point: u64) -> u64 {
    point ^ 1
}

/// The circular shift `(T x)^i = x^{i-1}`.
pub fn shift(point: u64, window: usize) -> u64 {
    let mut out = 0u64;
    for i in 0..window {
        let src = (window + i - 1) % window;
        out |= (point >> src & 1) << i;
    }
    out
}

/// Builds the window structure: one agent per involution (reflection,
/// offset reflection, optionally the flip), blocks are the orbits, and the
/// single proposition reads the symbol at position zero.
pub fn build_shift_structure(n: usize, include_pi: bool) -> Result<KripkeStructure> {
    if n == 0 || n > 6 {
        return Err(CkError::Precondition(format!(
            "window parameter n must be in 1..=6, got {n}"
        )));
    }
    let window = 2 * n;
    let num_points = 1usize << window;
    let valuations: Vec<u64> = (0..num_points as u64).map(|p| p & 1).collect();
    let mut involutions: Vec<Box<dyn Fn(u64) -> u64>> = vec![
        Box::new(move |p| sigma(p, window)),
        Box::new(move |p| tau(p, window)),
    ];
    if include_pi {
        involutions.push(Box::new(pi));
    }
    let partitions: Vec<Vec<usize>> = involutions
        .iter()
        .map(|inv| {
            (0..num_points)
                .map(|p| {
                    let q = inv(p as u64) as usize;
                    p.min(q)
                })
                .collect()
        })
        .collect();
    KripkeStructure::new(1, involutions.len(), valuations, partitions)
}

/// Fiber counts of the theory map per depth, plus where (if anywhere) the
/// map separates all points and where refinement stabilizes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationProfile {
    pub fibers_per_depth: Vec<usize>,
    pub separation_depth: Option<u32>,
    pub refine_stabilization_index: usize,
    pub refine_class_count: usize,
}

pub fn theory_separation_profile(
    structure: &KripkeStructure,
    store: &AtomStore,
    depth: u32,
) -> Result<SeparationProfile> {
    let n = structure.num_points();
    let mut fibers_per_depth = Vec::with_capacity(depth as usize + 1);
    let mut separation_depth = None;
    for d in 0..=depth {
        let atoms = structure.theory_map_all(store, d)?;
        let mut distinct = atoms.clone();
        distinct.sort_unstable();
        distinct.dedup();
        fibers_per_depth.push(distinct.len());
        if distinct.len() == n && separation_depth.is_none() {
            separation_depth = Some(d);
        }
    }
    let rounds = structure.refine();
    let stable = rounds.last().expect("refine returns at least one round");
    let classes = stable.iter().copied().max().map_or(0, |m| m + 1);
    Ok(SeparationProfile {
        fibers_per_depth,
        separation_depth,
        refine_stabilization_index: rounds.len() - 1,
        refine_class_count: classes,
    })
}
