//! Finite Kripke structures under the partition (S5) reading: truth
//! evaluation, cells, adjacency geometry, refinement, restriction, and the
//! canonical theory map into the finite levels.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Mutex;

use bitvec::vec::BitVec;
use serde::{Deserialize, Serialize};

use crate::canonical::{AtomId, AtomStore};
use crate::error::{CkError, Result};
use crate::formula::{Formula, FormulaNode};
use crate::workspace::AgentId;

/// Subset of the points of one structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthSet {
    bits: BitVec,
}

impl TruthSet {
    pub fn empty(len: usize) -> Self {
        TruthSet {
            bits: BitVec::repeat(false, len),
        }
    }

    pub fn full(len: usize) -> Self {
        TruthSet {
            bits: BitVec::repeat(true, len),
        }
    }

    pub fn from_points<I: IntoIterator<Item = usize>>(len: usize, points: I) -> Self {
        let mut ts = TruthSet::empty(len);
        for p in points {
            ts.bits.set(p, true);
        }
        ts
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.not_any()
    }

    pub fn is_full(&self) -> bool {
        self.bits.all()
    }

    pub fn contains(&self, p: usize) -> bool {
        self.bits[p]
    }

    pub fn insert(&mut self, p: usize) {
        self.bits.set(p, true);
    }

    pub fn count(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn complement(&self) -> Self {
        let mut bits = self.bits.clone();
        for mut b in bits.iter_mut() {
            *b = !*b;
        }
        TruthSet { bits }
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut bits = self.bits.clone();
        bits &= &other.bits;
        TruthSet { bits }
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut bits = self.bits.clone();
        bits |= &other.bits;
        TruthSet { bits }
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.bits.iter_ones().all(|p| other.bits[p])
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter_ones()
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

/// On-disk form of a structure. `partitions[j][p]` is the block label of
/// point `p` under agent `j`; labels are arbitrary but consistent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureJson {
    pub num_props: usize,
    pub agents: usize,
    pub points: Vec<PointJson>,
    pub partitions: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointJson {
    pub id: usize,
    pub val: Vec<bool>,
}

/// A finite multi-agent partition structure with a valuation.
pub struct KripkeStructure {
    num_props: usize,
    num_agents: usize,
    /// Valuation bitmask per point; bit `x` is proposition `px`.
    valuations: Vec<u64>,
    /// Per agent: block id per point, ids dense from 0.
    partitions: Vec<Vec<usize>>,
    /// Per agent: block id -> sorted member list. Derived once.
    blocks: Vec<Vec<Vec<usize>>>,
    alpha_memo: Mutex<HashMap<Formula, TruthSet>>,
}

impl Clone for KripkeStructure {
    fn clone(&self) -> Self {
        KripkeStructure {
            num_props: self.num_props,
            num_agents: self.num_agents,
            valuations: self.valuations.clone(),
            partitions: self.partitions.clone(),
            blocks: self.blocks.clone(),
            alpha_memo: Mutex::new(HashMap::new()),
        }
    }
}

impl std::fmt::Debug for KripkeStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KripkeStructure")
            .field("points", &self.valuations.len())
            .field("num_props", &self.num_props)
            .field("num_agents", &self.num_agents)
            .finish()
    }
}

fn renumber_partition(raw: &[usize]) -> (Vec<usize>, Vec<Vec<usize>>) {
    let mut map = BTreeMap::new();
    let mut assignment = Vec::with_capacity(raw.len());
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for (point, label) in raw.iter().enumerate() {
        let id = *map.entry(*label).or_insert_with(|| {
            blocks.push(Vec::new());
            blocks.len() - 1
        });
        assignment.push(id);
        blocks[id].push(point);
    }
    (assignment, blocks)
}

impl KripkeStructure {
    /// Builds a structure from raw parts. Block labels are renumbered to be
    /// dense in first-occurrence order.
    pub fn new(
        num_props: usize,
        num_agents: usize,
        valuations: Vec<u64>,
        partitions: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if valuations.is_empty() {
            return Err(CkError::MalformedStructure("no points".into()));
        }
        if num_props == 0 || num_props > 64 {
            return Err(CkError::MalformedStructure(
                "num_props must be in 1..=64".into(),
            ));
        }
        if partitions.len() != num_agents || num_agents == 0 {
            return Err(CkError::MalformedStructure(format!(
                "expected {} partitions, got {}",
                num_agents,
                partitions.len()
            )));
        }
        let n = valuations.len();
        let mut assignments = Vec::with_capacity(num_agents);
        let mut blocks = Vec::with_capacity(num_agents);
        for part in &partitions {
            if part.len() != n {
                return Err(CkError::MalformedStructure(format!(
                    "partition length {} does not match point count {}",
                    part.len(),
                    n
                )));
            }
            let (assignment, agent_blocks) = renumber_partition(part);
            assignments.push(assignment);
            blocks.push(agent_blocks);
        }
        Ok(KripkeStructure {
            num_props,
            num_agents,
            valuations,
            partitions: assignments,
            blocks,
            alpha_memo: Mutex::new(HashMap::new()),
        })
    }

    /// Single point, all blocks singleton.
    pub fn single_point(num_props: usize, num_agents: usize, valuation: u64) -> Result<Self> {
        KripkeStructure::new(
            num_props,
            num_agents,
            vec![valuation],
            vec![vec![0]; num_agents],
        )
    }

    pub fn num_points(&self) -> usize {
        self.valuations.len()
    }

    pub fn num_props(&self) -> usize {
        self.num_props
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn valuation(&self, p: usize) -> u64 {
        self.valuations[p]
    }

    pub fn prop_true_at(&self, p: usize, x: usize) -> bool {
        self.valuations[p] >> x & 1 == 1
    }

    pub fn block_id(&self, j: AgentId, p: usize) -> usize {
        self.partitions[j.0][p]
    }

    /// Members of the agent's block containing `p`, sorted.
    pub fn block_of(&self, j: AgentId, p: usize) -> &[usize] {
        &self.blocks[j.0][self.partitions[j.0][p]]
    }

    pub fn blocks_of_agent(&self, j: AgentId) -> &[Vec<usize>] {
        &self.blocks[j.0]
    }

    /// Truth set of a formula, per the inductive cases: valuation lookup,
    /// complement, intersection, and block containment for knowledge.
    pub fn alpha(&self, f: &Formula) -> Result<TruthSet> {
        if let Some(hit) = self.alpha_memo.lock().unwrap().get(f) {
            return Ok(hit.clone());
        }
        let n = self.num_points();
        let result = match f.node() {
            FormulaNode::Prop(x) => {
                if x.0 >= self.num_props {
                    return Err(CkError::PropOutOfRange {
                        index: x.0,
                        max: self.num_props,
                    });
                }
                TruthSet::from_points(n, (0..n).filter(|&p| self.prop_true_at(p, x.0)))
            }
            FormulaNode::Not(g) => self.alpha(g)?.complement(),
            FormulaNode::And(g, h) => self.alpha(g)?.intersect(&self.alpha(h)?),
            FormulaNode::Know(j, g) => {
                if j.0 >= self.num_agents {
                    return Err(CkError::AgentOutOfRange {
                        index: j.0,
                        max: self.num_agents,
                    });
                }
                let inner = self.alpha(g)?;
                let mut ts = TruthSet::empty(n);
                for block in &self.blocks[j.0] {
                    if block.iter().all(|&p| inner.contains(p)) {
                        for &p in block {
                            ts.insert(p);
                        }
                    }
                }
                ts
            }
        };
        self.alpha_memo
            .lock()
            .unwrap()
            .insert(f.clone(), result.clone());
        Ok(result)
    }

    /// Finest partition in which every agent block lies inside one class:
    /// connected components of the union of block-adjacency graphs.
    pub fn cells(&self) -> Vec<usize> {
        let n = self.num_points();
        let mut uf = UnionFind::new(n);
        for agent_blocks in &self.blocks {
            for block in agent_blocks {
                for w in block.windows(2) {
                    uf.union(w[0], w[1]);
                }
            }
        }
        uf.canonical_assignment()
    }

    pub fn is_connected(&self) -> bool {
        let cells = self.cells();
        cells.iter().all(|&c| c == 0)
    }

    /// Length of the shortest adjacency path; `None` when the points lie in
    /// different cells.
    pub fn adjacency_distance(&self, s: usize, t: usize) -> Option<u32> {
        self.bfs_from(s)[t]
    }

    fn bfs_from(&self, s: usize) -> Vec<Option<u32>> {
        let n = self.num_points();
        let mut dist = vec![None; n];
        dist[s] = Some(0);
        let mut queue = VecDeque::new();
        queue.push_back(s);
        // Expanding a whole block marks every member at once; a visited flag
        // per block keeps the BFS linear in the block lists.
        let mut block_done: Vec<Vec<bool>> = self
            .blocks
            .iter()
            .map(|bs| vec![false; bs.len()])
            .collect();
        while let Some(p) = queue.pop_front() {
            let d = dist[p].unwrap();
            for j in 0..self.num_agents {
                let b = self.partitions[j][p];
                if block_done[j][b] {
                    continue;
                }
                block_done[j][b] = true;
                for &q in &self.blocks[j][b] {
                    if dist[q].is_none() {
                        dist[q] = Some(d + 1);
                        queue.push_back(q);
                    }
                }
            }
        }
        dist
    }

    /// Maximum pairwise adjacency distance; `None` when disconnected.
    pub fn diameter(&self) -> Option<u32> {
        let mut best = 0;
        for s in 0..self.num_points() {
            let dist = self.bfs_from(s);
            for d in &dist {
                match d {
                    Some(d) => best = best.max(*d),
                    None => return None,
                }
            }
        }
        Some(best)
    }

    /// Minimum eccentricity over points; `None` when disconnected.
    pub fn radius(&self) -> Option<u32> {
        let mut best: Option<u32> = None;
        for s in 0..self.num_points() {
            let dist = self.bfs_from(s);
            let mut ecc = 0;
            for d in &dist {
                match d {
                    Some(d) => ecc = ecc.max(*d),
                    None => return None,
                }
            }
            best = Some(best.map_or(ecc, |b: u32| b.min(ecc)));
        }
        best
    }

    /// The restriction to a nonempty point subset: blocks are intersected
    /// with the subset and empty ones dropped. Returns the new structure and
    /// the sorted list of original point ids it retains.
    pub fn restrict(&self, points: &[usize]) -> Result<(KripkeStructure, Vec<usize>)> {
        let keep: BTreeSet<usize> = points.iter().copied().collect();
        if keep.is_empty() {
            return Err(CkError::EmptyRestriction);
        }
        if let Some(&bad) = keep.iter().find(|&&p| p >= self.num_points()) {
            return Err(CkError::MalformedStructure(format!(
                "restriction point {bad} out of range"
            )));
        }
        let kept: Vec<usize> = keep.into_iter().collect();
        let valuations: Vec<u64> = kept.iter().map(|&p| self.valuations[p]).collect();
        let partitions: Vec<Vec<usize>> = (0..self.num_agents)
            .map(|j| kept.iter().map(|&p| self.partitions[j][p]).collect())
            .collect();
        let restricted =
            KripkeStructure::new(self.num_props, self.num_agents, valuations, partitions)?;
        Ok((restricted, kept))
    }

    /// The refinement sequence: `R_0` groups points by valuation and each
    /// later round separates points whose blocks meet different classes of
    /// the previous round. Returns every round up to and including the first
    /// stable one, as canonical class assignments.
    pub fn refine(&self) -> Vec<Vec<usize>> {
        let n = self.num_points();
        let mut rounds: Vec<Vec<usize>> = Vec::new();
        let mut current = canonical_classes_by_key(
            (0..n).map(|p| self.valuations[p]).collect::<Vec<_>>(),
        );
        rounds.push(current.clone());
        loop {
            let keys: Vec<(usize, Vec<BTreeSet<usize>>)> = (0..n)
                .map(|p| {
                    let seen: Vec<BTreeSet<usize>> = (0..self.num_agents)
                        .map(|j| {
                            self.blocks[j][self.partitions[j][p]]
                                .iter()
                                .map(|&q| current[q])
                                .collect()
                        })
                        .collect();
                    (current[p], seen)
                })
                .collect();
            let next = canonical_classes_by_key(keys);
            if next == current {
                return rounds;
            }
            rounds.push(next.clone());
            current = next;
        }
    }

    /// The canonical map into the finite level: the depth-`level` theory of
    /// each point, built bottom-up through the blocks.
    pub fn theory_map_all(&self, store: &AtomStore, level: u32) -> Result<Vec<AtomId>> {
        let cap = store.config().lazy_cap;
        if level > cap {
            return Err(CkError::CapExceeded {
                what: "theory_map",
                requested: level,
                cap,
            });
        }
        if self.num_props != store.config().num_props
            || self.num_agents != store.config().num_agents
        {
            return Err(CkError::MalformedStructure(
                "structure roster does not match the atom store workspace".into(),
            ));
        }
        let n = self.num_points();
        let mut current: Vec<AtomId> = (0..n)
            .map(|p| store.level0_atom(self.valuations[p]))
            .collect::<Result<_>>()?;
        for _ in 0..level {
            let mut next = Vec::with_capacity(n);
            for p in 0..n {
                let choices: Vec<Vec<AtomId>> = (0..self.num_agents)
                    .map(|j| {
                        let mut m: Vec<AtomId> = self.blocks[j][self.partitions[j][p]]
                            .iter()
                            .map(|&q| current[q])
                            .collect();
                        m.sort_unstable();
                        m.dedup();
                        m
                    })
                    .collect();
                next.push(store.extend_atom(current[p], choices)?);
            }
            current = next;
        }
        Ok(current)
    }

    /// Depth-`level` theory of a single point.
    pub fn theory_map(&self, store: &AtomStore, point: usize, level: u32) -> Result<AtomId> {
        if point >= self.num_points() {
            return Err(CkError::MalformedStructure(format!(
                "point {point} out of range"
            )));
        }
        Ok(self.theory_map_all(store, level)?[point])
    }

    /// Points where the formula is common knowledge: the union of cells
    /// entirely inside the truth set.
    pub fn common_knowledge_points(&self, f: &Formula) -> Result<TruthSet> {
        let truth = self.alpha(f)?;
        let cells = self.cells();
        let num_cells = cells.iter().copied().max().map_or(0, |m| m + 1);
        let mut cell_ok = vec![true; num_cells];
        for (p, &c) in cells.iter().enumerate() {
            if !truth.contains(p) {
                cell_ok[c] = false;
            }
        }
        Ok(TruthSet::from_points(
            self.num_points(),
            cells
                .iter()
                .enumerate()
                .filter(|(_, &c)| cell_ok[c])
                .map(|(p, _)| p),
        ))
    }

    pub fn to_json(&self) -> StructureJson {
        StructureJson {
            num_props: self.num_props,
            agents: self.num_agents,
            points: (0..self.num_points())
                .map(|p| PointJson {
                    id: p,
                    val: (0..self.num_props)
                        .map(|x| self.prop_true_at(p, x))
                        .collect(),
                })
                .collect(),
            partitions: self.partitions.clone(),
        }
    }

    pub fn from_json(json: &StructureJson) -> Result<Self> {
        let n = json.points.len();
        let mut valuations = vec![0u64; n];
        for (i, pt) in json.points.iter().enumerate() {
            if pt.id != i {
                return Err(CkError::MalformedStructure(format!(
                    "point ids must be dense from 0; saw {} at position {}",
                    pt.id, i
                )));
            }
            if pt.val.len() != json.num_props {
                return Err(CkError::MalformedStructure(format!(
                    "point {} has {} valuation bits, expected {}",
                    pt.id,
                    pt.val.len(),
                    json.num_props
                )));
            }
            for (x, &b) in pt.val.iter().enumerate() {
                if b {
                    valuations[i] |= 1 << x;
                }
            }
        }
        KripkeStructure::new(json.num_props, json.agents, valuations, json.partitions.clone())
    }

    /// DOT rendering: points as nodes labeled by their valuation, block
    /// co-membership as one colored edge set per agent.
    pub fn to_dot(&self, name: &str) -> String {
        const COLORS: [&str; 8] = [
            "crimson", "royalblue", "forestgreen", "darkorange", "purple", "teal", "gold4",
            "gray40",
        ];
        let mut out = String::new();
        out.push_str(&format!("graph {name} {{\n"));
        for p in 0..self.num_points() {
            let lits: Vec<String> = (0..self.num_props)
                .map(|x| {
                    if self.prop_true_at(p, x) {
                        format!("p{x}")
                    } else {
                        format!("!p{x}")
                    }
                })
                .collect();
            out.push_str(&format!("  s{p} [label=\"s{p}: {}\"];\n", lits.join(" ")));
        }
        for j in 0..self.num_agents {
            let color = COLORS[j % COLORS.len()];
            for block in &self.blocks[j] {
                for w in 0..block.len() {
                    for v in w + 1..block.len() {
                        out.push_str(&format!(
                            "  s{} -- s{} [color={color}, label=\"a{j}\"];\n",
                            block[w], block[v]
                        ));
                    }
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Renumbers an arbitrary keyed grouping into dense class ids in
/// first-occurrence order, so equal partitions compare equal.
fn canonical_classes_by_key<K: Ord + Clone>(keys: Vec<K>) -> Vec<usize> {
    let mut map: BTreeMap<K, usize> = BTreeMap::new();
    let mut order: Vec<usize> = Vec::with_capacity(keys.len());
    for k in &keys {
        let next = map.len();
        let id = *map.entry(k.clone()).or_insert(next);
        order.push(id);
    }
    // Renumber by first occurrence.
    let mut seen: HashMap<usize, usize> = HashMap::new();
    let mut out = Vec::with_capacity(order.len());
    for id in order {
        let next = seen.len();
        out.push(*seen.entry(id).or_insert(next));
    }
    out
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    /// Class id per element, dense in first-occurrence order.
    pub fn canonical_assignment(&mut self) -> Vec<usize> {
        let n = self.parent.len();
        let mut map = HashMap::new();
        (0..n)
            .map(|x| {
                let root = self.find(x);
                let next = map.len();
                *map.entry(root).or_insert(next)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::workspace::WorkspaceConfig;

    fn ws() -> WorkspaceConfig {
        WorkspaceConfig::new(1, 2).unwrap()
    }

    /// Four points in a chain: s0-s1 share an agent-0 block, s1-s2 an
    /// agent-1 block, s2-s3 an agent-0 block.
    fn chain4() -> KripkeStructure {
        KripkeStructure::new(
            1,
            2,
            vec![1, 1, 1, 0],
            vec![vec![0, 0, 1, 1], vec![0, 1, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn alpha_single_point_knowledge() {
        let k = KripkeStructure::single_point(1, 2, 1).unwrap();
        let f = parse("K0 p0", &ws()).unwrap();
        let ts = k.alpha(&f).unwrap();
        assert_eq!(ts.to_vec(), vec![0]);
    }

    #[test]
    fn alpha_negation_is_complement() {
        let k = chain4();
        let f = parse("K0 p0 & !K1 p0", &ws()).unwrap();
        let neg = Formula::not(f.clone());
        let a = k.alpha(&f).unwrap();
        let b = k.alpha(&neg).unwrap();
        assert_eq!(b, a.complement());
    }

    #[test]
    fn alpha_shared_block_hides_truth() {
        // One agent-0 block {s0, s1} with p0 true only at s0.
        let k = KripkeStructure::new(1, 2, vec![1, 0], vec![vec![0, 0], vec![0, 1]]).unwrap();
        let f = parse("K0 p0", &ws()).unwrap();
        assert!(k.alpha(&f).unwrap().is_empty());
        let g = parse("!K0 p0", &ws()).unwrap();
        assert!(k.alpha(&g).unwrap().is_full());
    }

    #[test]
    fn cells_of_chain() {
        let k = chain4();
        assert_eq!(k.cells(), vec![0, 0, 0, 0]);
        assert!(k.is_connected());
    }

    #[test]
    fn cells_all_singletons() {
        let k =
            KripkeStructure::new(1, 2, vec![1, 0], vec![vec![0, 1], vec![0, 1]]).unwrap();
        assert_eq!(k.cells(), vec![0, 1]);
        assert!(!k.is_connected());
    }

    #[test]
    fn one_big_block_is_one_cell() {
        let k = KripkeStructure::new(1, 1, vec![1, 0, 1], vec![vec![0, 0, 0]]).unwrap();
        assert_eq!(k.cells(), vec![0, 0, 0]);
    }

    #[test]
    fn adjacency_distances_on_chain() {
        let k = chain4();
        assert_eq!(k.adjacency_distance(0, 0), Some(0));
        assert_eq!(k.adjacency_distance(0, 1), Some(1));
        assert_eq!(k.adjacency_distance(0, 3), Some(3));
        assert_eq!(k.diameter(), Some(3));
    }

    #[test]
    fn distance_infinite_across_cells() {
        let k =
            KripkeStructure::new(1, 2, vec![1, 0], vec![vec![0, 1], vec![0, 1]]).unwrap();
        assert_eq!(k.adjacency_distance(0, 1), None);
        assert_eq!(k.diameter(), None);
    }

    #[test]
    fn diameter_trivial_cases() {
        let single = KripkeStructure::single_point(1, 2, 0).unwrap();
        assert_eq!(single.diameter(), Some(0));
        let block = KripkeStructure::new(1, 1, vec![0, 1, 0], vec![vec![0, 0, 0]]).unwrap();
        assert_eq!(block.diameter(), Some(1));
    }

    #[test]
    fn restrict_whole_is_identity() {
        let k = chain4();
        let (r, kept) = k.restrict(&[0, 1, 2, 3]).unwrap();
        assert_eq!(kept, vec![0, 1, 2, 3]);
        assert_eq!(r.cells(), k.cells());
        assert_eq!(r.to_json().partitions, k.to_json().partitions);
    }

    #[test]
    fn restrict_chain_splits() {
        let k = chain4();
        // Dropping s1 separates s0 from {s2, s3}.
        let (r, kept) = k.restrict(&[0, 2, 3]).unwrap();
        assert_eq!(kept, vec![0, 2, 3]);
        assert_eq!(r.cells(), vec![0, 1, 1]);
    }

    #[test]
    fn restrict_empty_is_error() {
        let k = chain4();
        assert!(matches!(k.restrict(&[]), Err(CkError::EmptyRestriction)));
    }

    #[test]
    fn restrict_single_point_makes_singletons() {
        let k = chain4();
        let (r, _) = k.restrict(&[1]).unwrap();
        assert_eq!(r.num_points(), 1);
        assert!(r.is_connected());
    }

    #[test]
    fn refine_distinct_valuations_stable_at_zero() {
        let k =
            KripkeStructure::new(1, 2, vec![1, 0], vec![vec![0, 0], vec![0, 1]]).unwrap();
        let rounds = k.refine();
        assert_eq!(rounds.len(), 1);
        assert_eq!(rounds[0], vec![0, 1]);
    }

    #[test]
    fn refine_identical_points_never_split() {
        let k = KripkeStructure::new(1, 1, vec![1, 1, 1], vec![vec![0, 0, 0]]).unwrap();
        let rounds = k.refine();
        assert_eq!(rounds.len(), 1);
        assert_eq!(rounds[0], vec![0, 0, 0]);
    }

    #[test]
    fn refine_separates_by_seen_classes() {
        // s0, s1 share valuation; s0's agent-1 block sees only true points,
        // s1's sees a false point.
        let k = KripkeStructure::new(
            1,
            2,
            vec![1, 1, 0],
            vec![vec![0, 1, 2], vec![0, 1, 1]],
        )
        .unwrap();
        let rounds = k.refine();
        assert!(rounds.len() >= 2);
        assert_eq!(rounds[0][0], rounds[0][1]);
        assert_ne!(rounds.last().unwrap()[0], rounds.last().unwrap()[1]);
    }

    #[test]
    fn common_knowledge_is_cellwise() {
        let k = chain4();
        // p0 fails at s3, so no cell (there is only one) holds it in common.
        let p = Formula::prop(0);
        assert!(k.common_knowledge_points(&p).unwrap().is_empty());
        assert!(k
            .common_knowledge_points(&Formula::top())
            .unwrap()
            .is_full());
    }

    #[test]
    fn json_round_trip() {
        let k = chain4();
        let json = k.to_json();
        let back = KripkeStructure::from_json(&json).unwrap();
        assert_eq!(back.to_json().partitions, json.partitions);
        assert_eq!(back.valuations, k.valuations);
    }

    #[test]
    fn dot_is_deterministic() {
        let k = chain4();
        assert_eq!(k.to_dot("g"), k.to_dot("g"));
        assert!(k.to_dot("g").contains("s0 -- s1"));
    }
}
