//! Shared generators for the integration suites: random formulas, random
//! structures, and an independent set-partition enumerator.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::Rng;

use ck_core::formula::Formula;
use ck_core::kripke::KripkeStructure;
use ck_core::workspace::WorkspaceConfig;

/// Random formula of depth at most `max_depth` over the workspace roster.
pub fn random_formula(rng: &mut StdRng, ws: &WorkspaceConfig, max_depth: u32) -> Formula {
    let choices = if max_depth == 0 { 3 } else { 4 };
    match rng.gen_range(0..choices) {
        0 => Formula::prop(rng.gen_range(0..ws.num_props)),
        1 => Formula::not(random_formula(rng, ws, max_depth)),
        2 => {
            if rng.gen_bool(0.5) {
                Formula::and(
                    random_formula(rng, ws, max_depth),
                    random_formula(rng, ws, max_depth),
                )
            } else {
                Formula::prop(rng.gen_range(0..ws.num_props))
            }
        }
        _ => Formula::know(
            rng.gen_range(0..ws.num_agents),
            random_formula(rng, ws, max_depth - 1),
        ),
    }
}

/// Random structure with up to `max_points` points: arbitrary valuations
/// and arbitrary per-agent block assignments.
pub fn random_structure(
    rng: &mut StdRng,
    num_props: usize,
    num_agents: usize,
    max_points: usize,
) -> KripkeStructure {
    let n = rng.gen_range(1..=max_points);
    let valuations: Vec<u64> = (0..n)
        .map(|_| rng.gen_range(0..1u64 << num_props))
        .collect();
    let partitions: Vec<Vec<usize>> = (0..num_agents)
        .map(|_| (0..n).map(|_| rng.gen_range(0..n)).collect())
        .collect();
    KripkeStructure::new(num_props, num_agents, valuations, partitions)
        .expect("randomly assembled structures are well formed")
}

/// All set partitions of `0..n` as block-assignment vectors in restricted
/// growth form (an independent enumerator, used by the level-1 oracle).
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let max = prefix.iter().copied().max().map_or(0, |m| m + 1);
        for b in 0..=max {
            prefix.push(b);
            extend(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::new(), n, &mut out);
    out
}
