//! Classification of a formula by its common-knowledge behavior: semantic
//! closure, connectedness of its truth set, the restricted level tower, the
//! least-information extension, and generative/proto-generative blocks.

use std::collections::{BTreeMap, HashSet};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::canonical::{AtomId, AtomStore, LevelView};
use crate::error::{CkError, Result};
use crate::formula::{render, Formula};
use crate::workspace::AgentId;

/// Outcome of the semantic-closure check. The empty truth set is kept
/// distinct from a genuine closure failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClosureStatus {
    Closed,
    EmptyAlpha,
    NotClosed { witness: AtomId, agent: AgentId },
}

impl ClosureStatus {
    pub fn is_closed(&self) -> bool {
        matches!(self, ClosureStatus::Closed)
    }
}

/// How a block meets the fibers one level down, restricted to the tower.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockClass {
    /// Every fiber the block meets holds at least two of its atoms.
    Generative,
    /// Some fiber the block meets holds at least two of its atoms.
    ProtoGenerative,
    Neither,
}

/// One cached level of the restricted tower.
pub struct CkLevel {
    pub level: u32,
    /// Atoms in canonical order.
    pub atoms: Vec<AtomId>,
    pub set: HashSet<AtomId>,
    /// Per agent: block key (level-0 sentinel or interned set id + 1) to
    /// sorted members.
    blocks: Vec<BTreeMap<u64, Arc<Vec<AtomId>>>>,
}

impl CkLevel {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn contains(&self, w: AtomId) -> bool {
        self.set.contains(&w)
    }

    /// Iterates the blocks of one agent in deterministic order.
    pub fn blocks_of(&self, j: AgentId) -> impl Iterator<Item = &Arc<Vec<AtomId>>> {
        self.blocks[j.0].values()
    }
}

/// A formula with its cached restricted levels and block classifications.
pub struct CkSystem {
    store: Arc<AtomStore>,
    formula: Formula,
    depth: u32,
    closure: ClosureStatus,
    levels: Mutex<BTreeMap<u32, Arc<CkLevel>>>,
    views: Mutex<BTreeMap<u32, Arc<LevelView>>>,
    gen_level: Mutex<Option<GenLevelOutcome>>,
}

/// Result of scanning for the first all-generative level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GenLevelOutcome {
    Found(u32),
    /// No proto-generative block exists, so every extension onward is
    /// forced and the scan can never succeed.
    UniquelyExtending,
    CapExceeded { cap: u32 },
}

/// Bounded search result for an implication between common knowledge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImpliesOutcome {
    Shown { level: u32 },
    NotShown { cap: u32 },
}

impl ImpliesOutcome {
    pub fn as_bool(&self) -> bool {
        matches!(self, ImpliesOutcome::Shown { .. })
    }
}

/// Checks the fiber-meeting condition on the truth set of `f` at its depth:
/// for every member and agent, the fibers met by the member's full block
/// must be met inside the truth set. Depth-0 truth sets are closed exactly
/// when nonempty.
pub fn semantically_closed(store: &AtomStore, f: &Formula) -> Result<ClosureStatus> {
    let d = f.depth();
    let alpha = store.alpha_on_level(d, f)?;
    if alpha.is_empty() {
        return Ok(ClosureStatus::EmptyAlpha);
    }
    if d == 0 {
        return Ok(ClosureStatus::Closed);
    }
    // Group the truth set into restricted blocks per agent; a block is fine
    // when its members' projections cover the shared choice set.
    for j in 0..store.config().num_agents {
        let mut groups: BTreeMap<u64, Vec<AtomId>> = BTreeMap::new();
        for &w in &alpha {
            let key = store.mset_key(w, j).expect("level >= 1").0 as u64;
            groups.entry(key).or_default().push(w);
        }
        for members in groups.values() {
            let rep = members[0];
            let required = store.choice_set(rep, AgentId(j))?;
            let mut covered: Vec<AtomId> = members
                .iter()
                .map(|&m| store.project(m, d - 1))
                .collect::<Result<_>>()?;
            covered.sort_unstable();
            covered.dedup();
            if covered != required {
                return Ok(ClosureStatus::NotClosed {
                    witness: rep,
                    agent: AgentId(j),
                });
            }
        }
    }
    Ok(ClosureStatus::Closed)
}

/// The closure test doubling as the nonemptiness test for the set of points
/// holding the formula in common knowledge.
pub fn ck_nonempty(store: &AtomStore, f: &Formula) -> Result<bool> {
    Ok(semantically_closed(store, f)?.is_closed())
}

/// True iff the truth set at depth, as a restricted structure, is
/// connected. Requires semantic closure.
pub fn has_dense_cell(store: &AtomStore, f: &Formula) -> Result<bool> {
    let status = semantically_closed(store, f)?;
    if !status.is_closed() {
        return Err(CkError::Precondition(
            "has_dense_cell requires a semantically closed formula".into(),
        ));
    }
    let d = f.depth();
    let alpha = store.alpha_on_level(d, f)?;
    let view = store.subset_view(d, alpha)?;
    Ok(view.structure.is_connected())
}

impl CkSystem {
    /// Builds the system and records the closure status. The base level is
    /// the truth set of the formula at its depth.
    pub fn new(store: Arc<AtomStore>, formula: Formula) -> Result<Self> {
        formula.check_indices(store.config())?;
        let closure = semantically_closed(&store, &formula)?;
        Ok(CkSystem {
            depth: formula.depth(),
            formula,
            closure,
            store,
            levels: Mutex::new(BTreeMap::new()),
            views: Mutex::new(BTreeMap::new()),
            gen_level: Mutex::new(None),
        })
    }

    pub fn store(&self) -> &Arc<AtomStore> {
        &self.store
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn closure(&self) -> &ClosureStatus {
        &self.closure
    }

    fn require_closed(&self) -> Result<()> {
        match &self.closure {
            ClosureStatus::Closed => Ok(()),
            ClosureStatus::EmptyAlpha => Err(CkError::EmptyAlpha),
            ClosureStatus::NotClosed { .. } => Err(CkError::NotClosed),
        }
    }

    /// The restricted level: at the formula's depth it is the truth set;
    /// above, the union of restricted extensions of the level below.
    pub fn level(&self, i: u32) -> Result<Arc<CkLevel>> {
        if i < self.depth {
            return Err(CkError::Precondition(format!(
                "restricted level {i} below formula depth {}",
                self.depth
            )));
        }
        let cap = self.store.config().lazy_cap;
        if i > cap {
            return Err(CkError::CapExceeded {
                what: "restricted level",
                requested: i,
                cap,
            });
        }
        if let Some(l) = self.levels.lock().unwrap().get(&i) {
            return Ok(l.clone());
        }
        let atoms: Vec<AtomId> = if i == self.depth {
            self.store.alpha_on_level(i, &self.formula)?
        } else {
            self.require_closed()?;
            let below = self.level(i - 1)?;
            let mut out: Vec<AtomId> = Vec::new();
            for &w in &below.atoms {
                let exts = self.restricted_extensions_at(&below, w)?;
                if out.len() + exts.len() > self.store.config().size_guard {
                    return Err(CkError::SizeGuardExceeded {
                        what: "restricted level",
                        guard: self.store.config().size_guard,
                    });
                }
                out.extend(exts);
            }
            out.sort_unstable();
            out.dedup();
            out
        };
        let level = Arc::new(self.build_level(i, atoms));
        self.levels.lock().unwrap().insert(i, level.clone());
        Ok(level)
    }

    fn build_level(&self, i: u32, atoms: Vec<AtomId>) -> CkLevel {
        let num_agents = self.store.config().num_agents;
        let mut blocks: Vec<BTreeMap<u64, Arc<Vec<AtomId>>>> = vec![BTreeMap::new(); num_agents];
        let mut raw: Vec<BTreeMap<u64, Vec<AtomId>>> = vec![BTreeMap::new(); num_agents];
        for &w in &atoms {
            for (j, agent_blocks) in raw.iter_mut().enumerate() {
                let key = match self.store.mset_key(w, j) {
                    None => 0,
                    Some(m) => m.0 as u64 + 1,
                };
                agent_blocks.entry(key).or_default().push(w);
            }
        }
        for (j, agent_blocks) in raw.into_iter().enumerate() {
            for (key, members) in agent_blocks {
                blocks[j].insert(key, Arc::new(members));
            }
        }
        CkLevel {
            level: i,
            set: atoms.iter().copied().collect(),
            atoms,
            blocks,
        }
    }

    /// Kripke-structure view of a restricted level.
    pub fn view(&self, i: u32) -> Result<Arc<LevelView>> {
        if let Some(v) = self.views.lock().unwrap().get(&i) {
            return Ok(v.clone());
        }
        let level = self.level(i)?;
        let view = Arc::new(self.store.subset_view(i, level.atoms.clone())?);
        self.views.lock().unwrap().insert(i, view.clone());
        Ok(view)
    }

    /// The block of `w` within the restricted level of its own height.
    pub fn restricted_block(&self, w: AtomId, j: AgentId) -> Result<Arc<Vec<AtomId>>> {
        self.store.config().check_agent(j)?;
        let lvl = self.store.level(w);
        let level = self.level(lvl)?;
        if !level.contains(w) {
            return Err(CkError::NotInRestrictedLevel {
                atom: w.0,
                level: lvl,
            });
        }
        let key = match self.store.mset_key(w, j.0) {
            None => 0,
            Some(m) => m.0 as u64 + 1,
        };
        Ok(level.blocks[j.0][&key].clone())
    }

    /// Extensions of `w` whose choice sets stay inside the restricted
    /// level; they land in the next restricted level.
    pub fn restricted_extensions(&self, w: AtomId) -> Result<Vec<AtomId>> {
        let lvl = self.store.level(w);
        let level = self.level(lvl)?;
        if !level.contains(w) {
            return Err(CkError::NotInRestrictedLevel {
                atom: w.0,
                level: lvl,
            });
        }
        self.restricted_extensions_at(&level, w)
    }

    fn restricted_extensions_at(&self, level: &CkLevel, w: AtomId) -> Result<Vec<AtomId>> {
        let cfg = self.store.config();
        let is_level0 = level.level == 0;
        let mut per_agent: Vec<Vec<Vec<AtomId>>> = Vec::with_capacity(cfg.num_agents);
        for j in 0..cfg.num_agents {
            let key = match self.store.mset_key(w, j) {
                None => 0,
                Some(m) => m.0 as u64 + 1,
            };
            let block = level.blocks[j][&key].clone();
            // Fibers of the restricted block, keyed by base. The choice must
            // cover every member of w's own choice set; a base with no
            // restricted atom above it kills all choices.
            let choices = if is_level0 {
                subsets_containing(&block, w, cfg.size_guard)?
            } else {
                let mut fibers: BTreeMap<AtomId, Vec<AtomId>> = BTreeMap::new();
                for &v in block.iter() {
                    fibers
                        .entry(self.store.project(v, level.level - 1)?)
                        .or_default()
                        .push(v);
                }
                let required = self.store.choice_set(w, AgentId(j))?;
                if required.iter().any(|u| !fibers.contains_key(u)) {
                    Vec::new()
                } else {
                    let fiber_list: Vec<Vec<AtomId>> =
                        required.iter().map(|u| fibers[u].clone()).collect();
                    combine_fibers(&fiber_list, w, cfg.size_guard)?
                }
            };
            if choices.is_empty() {
                return Ok(Vec::new());
            }
            per_agent.push(choices);
        }
        let total: u128 = per_agent.iter().map(|c| c.len() as u128).product();
        if total > cfg.size_guard as u128 {
            return Err(CkError::SizeGuardExceeded {
                what: "restricted_extensions",
                guard: cfg.size_guard,
            });
        }
        let mut out = Vec::with_capacity(total as usize);
        let mut odo = vec![0usize; per_agent.len()];
        loop {
            let choice: Vec<Vec<AtomId>> = odo
                .iter()
                .zip(per_agent.iter())
                .map(|(&k, cs)| cs[k].clone())
                .collect();
            out.push(self.store.extend_atom(w, choice)?);
            let mut done = true;
            for k in (0..odo.len()).rev() {
                odo[k] += 1;
                if odo[k] < per_agent[k].len() {
                    done = false;
                    break;
                }
                odo[k] = 0;
            }
            if done {
                break;
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// The unique extension choosing the full restricted block for every
    /// agent. For a tautology this is the no-information extension.
    pub fn least_info_extension(&self, w: AtomId) -> Result<AtomId> {
        let cfg = self.store.config();
        let mut choices = Vec::with_capacity(cfg.num_agents);
        for j in 0..cfg.num_agents {
            choices.push(self.restricted_block(w, AgentId(j))?.to_vec());
        }
        self.store.extend_atom(w, choices)
    }

    /// Iterated least-information extension up to `target`.
    pub fn least_info_chain(&self, w: AtomId, target: u32) -> Result<AtomId> {
        let mut cur = w;
        let mut lvl = self.store.level(w);
        if target < lvl {
            return Err(CkError::Precondition(format!(
                "target {target} below atom level {lvl}"
            )));
        }
        while lvl < target {
            cur = self.least_info_extension(cur)?;
            lvl += 1;
        }
        Ok(cur)
    }

    /// Classifies the block of `member` for agent `j` at level `i` by its
    /// fiber profile within the restricted level.
    pub fn classify_block(&self, i: u32, j: AgentId, member: AtomId) -> Result<BlockClass> {
        if self.store.level(member) != i {
            return Err(CkError::Precondition(format!(
                "atom {} is not at level {i}",
                member.0
            )));
        }
        let block = self.restricted_block(member, j)?;
        let sizes = self.fiber_sizes(i, &block)?;
        let any_two = sizes.iter().any(|&s| s >= 2);
        let all_two = sizes.iter().all(|&s| s >= 2);
        Ok(if any_two && all_two {
            BlockClass::Generative
        } else if any_two {
            BlockClass::ProtoGenerative
        } else {
            BlockClass::Neither
        })
    }

    fn fiber_sizes(&self, i: u32, block: &[AtomId]) -> Result<Vec<usize>> {
        if i == 0 {
            // No level below: the whole block is a single fiber.
            return Ok(vec![block.len()]);
        }
        let mut counts: BTreeMap<AtomId, usize> = BTreeMap::new();
        for &v in block {
            *counts.entry(self.store.project(v, i - 1)?).or_insert(0) += 1;
        }
        Ok(counts.values().copied().collect())
    }

    pub fn generative_for(&self, w: AtomId, j: AgentId) -> Result<bool> {
        Ok(self.classify_block(self.store.level(w), j, w)? == BlockClass::Generative)
    }

    pub fn proto_generative_for(&self, w: AtomId, j: AgentId) -> Result<bool> {
        Ok(self.classify_block(self.store.level(w), j, w)? != BlockClass::Neither)
    }

    /// First level at which every atom is generative: for every agent when
    /// three or more agents exist, for at least one agent with two.
    pub fn gen_level(&self, cap: u32) -> Result<GenLevelOutcome> {
        if self.store.config().num_agents < 2 {
            return Err(CkError::Precondition(
                "generativity needs at least two agents".into(),
            ));
        }
        self.require_closed()?;
        if let Some(hit) = self.gen_level.lock().unwrap().clone() {
            if let GenLevelOutcome::Found(_) | GenLevelOutcome::UniquelyExtending = hit {
                return Ok(hit);
            }
        }
        let many = self.store.config().num_agents >= 3;
        let mut outcome = GenLevelOutcome::CapExceeded { cap };
        for i in self.depth..=cap {
            let level = self.level(i)?;
            let mut all_ok = true;
            let mut any_proto = false;
            for &w in &level.atoms {
                let mut gen_count = 0;
                for j in 0..self.store.config().num_agents {
                    match self.classify_block(i, AgentId(j), w)? {
                        BlockClass::Generative => {
                            gen_count += 1;
                            any_proto = true;
                        }
                        BlockClass::ProtoGenerative => any_proto = true,
                        BlockClass::Neither => {}
                    }
                }
                let needed = if many {
                    self.store.config().num_agents
                } else {
                    1
                };
                if gen_count < needed {
                    all_ok = false;
                }
            }
            if all_ok {
                outcome = GenLevelOutcome::Found(i);
                break;
            }
            if !any_proto {
                outcome = GenLevelOutcome::UniquelyExtending;
                break;
            }
        }
        *self.gen_level.lock().unwrap() = Some(outcome.clone());
        Ok(outcome)
    }
}

fn subsets_containing(block: &[AtomId], w: AtomId, guard: usize) -> Result<Vec<Vec<AtomId>>> {
    let pos = block.iter().position(|&v| v == w);
    let Some(pos) = pos else {
        return Ok(Vec::new());
    };
    if block.len() >= 24 || 1usize << (block.len() - 1) > guard {
        return Err(CkError::SizeGuardExceeded {
            what: "restricted choice enumeration",
            guard,
        });
    }
    let mut out = Vec::new();
    for mask in 0u32..1 << block.len() {
        if mask >> pos & 1 == 0 {
            continue;
        }
        out.push(
            block
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &v)| v)
                .collect(),
        );
    }
    Ok(out)
}

/// Cartesian combination of per-fiber nonempty subsets, with the fiber
/// containing `w` restricted to subsets containing `w`.
fn combine_fibers(fibers: &[Vec<AtomId>], w: AtomId, guard: usize) -> Result<Vec<Vec<AtomId>>> {
    let mut count: u128 = 1;
    for fiber in fibers {
        if fiber.len() >= 24 {
            return Err(CkError::SizeGuardExceeded {
                what: "restricted choice enumeration",
                guard,
            });
        }
        count = count.saturating_mul(1u128 << fiber.len());
    }
    if count > guard as u128 {
        return Err(CkError::SizeGuardExceeded {
            what: "restricted choice enumeration",
            guard,
        });
    }
    let mut per_fiber: Vec<Vec<Vec<AtomId>>> = Vec::with_capacity(fibers.len());
    for fiber in fibers {
        let w_pos = fiber.iter().position(|&v| v == w);
        let mut subsets = Vec::new();
        for mask in 0u32..1 << fiber.len() {
            match w_pos {
                Some(p) => {
                    if mask >> p & 1 == 0 {
                        continue;
                    }
                }
                None => {
                    if mask == 0 {
                        continue;
                    }
                }
            }
            subsets.push(
                fiber
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| mask >> k & 1 == 1)
                    .map(|(_, &v)| v)
                    .collect::<Vec<_>>(),
            );
        }
        per_fiber.push(subsets);
    }
    let mut out: Vec<Vec<AtomId>> = Vec::new();
    let mut odo = vec![0usize; per_fiber.len()];
    loop {
        let mut m: Vec<AtomId> = Vec::new();
        for (k, subsets) in per_fiber.iter().enumerate() {
            m.extend_from_slice(&subsets[odo[k]]);
        }
        m.sort_unstable();
        m.dedup();
        out.push(m);
        let mut done = true;
        for k in (0..odo.len()).rev() {
            odo[k] += 1;
            if odo[k] < per_fiber[k].len() {
                done = false;
                break;
            }
            odo[k] = 0;
        }
        if done {
            break;
        }
    }
    Ok(out)
}

/// Bounded test of "common knowledge of `f` implies `g`": search for a
/// level at which `E^i(f) -> g` is a tautology.
pub fn ck_implies(
    store: &AtomStore,
    f: &Formula,
    g: &Formula,
    i_cap: u32,
) -> Result<ImpliesOutcome> {
    for i in 0..=i_cap {
        let ef = Formula::e_power(store.config(), f.clone(), i);
        let candidate = Formula::implies(ef, g.clone());
        if store.is_tautology(&candidate)? {
            return Ok(ImpliesOutcome::Shown { level: i });
        }
    }
    Ok(ImpliesOutcome::NotShown { cap: i_cap })
}

/// Generativity decision and its provenance, as reported by the CLI.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerativityReport {
    pub value: GenerativityValue,
    /// "paper-necessity" when the decision follows from the proven
    /// direction; "assumed-sufficiency" when it leans on the recorded
    /// assumption that a proto-generative depth-level block suffices.
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail")]
pub enum GenerativityValue {
    Generative,
    NotGenerative(String),
    Unknown(String),
}

/// Decides generativity from the depth level: semantic closure, a connected
/// truth set, and at least one proto-generative block.
pub fn is_generative(store: &Arc<AtomStore>, f: &Formula, cap: u32) -> Result<GenerativityReport> {
    if store.config().num_agents < 2 {
        return Err(CkError::Precondition(
            "generativity needs at least two agents".into(),
        ));
    }
    let d = f.depth();
    if d > cap || d > store.config().full_enum_cap {
        return Ok(GenerativityReport {
            value: GenerativityValue::Unknown(format!("depth {d} exceeds cap {cap}")),
            provenance: "paper-necessity".into(),
        });
    }
    let closure = semantically_closed(store, f)?;
    match closure {
        ClosureStatus::EmptyAlpha => {
            return Ok(GenerativityReport {
                value: GenerativityValue::NotGenerative("empty truth set".into()),
                provenance: "paper-necessity".into(),
            })
        }
        ClosureStatus::NotClosed { .. } => {
            return Ok(GenerativityReport {
                value: GenerativityValue::NotGenerative("not semantically closed".into()),
                provenance: "paper-necessity".into(),
            })
        }
        ClosureStatus::Closed => {}
    }
    if !has_dense_cell(store, f)? {
        return Ok(GenerativityReport {
            value: GenerativityValue::NotGenerative("truth set not connected".into()),
            provenance: "paper-necessity".into(),
        });
    }
    let sys = CkSystem::new(store.clone(), f.clone())?;
    let level = sys.level(d)?;
    for &w in &level.atoms {
        for j in 0..store.config().num_agents {
            if sys.classify_block(d, AgentId(j), w)? != BlockClass::Neither {
                return Ok(GenerativityReport {
                    value: GenerativityValue::Generative,
                    provenance: "assumed-sufficiency".into(),
                });
            }
        }
    }
    Ok(GenerativityReport {
        value: GenerativityValue::NotGenerative(
            "unique extension: no proto-generative block at depth".into(),
        ),
        provenance: "paper-necessity".into(),
    })
}

/// The CLI-facing classification report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub formula: String,
    pub depth: u32,
    pub semantically_closed: bool,
    pub closure_code: String,
    pub connected: Option<bool>,
    pub generative: GenerativityReport,
    pub gen_level: Option<GenLevelOutcome>,
}

/// Runs the full classification pipeline for one formula.
pub fn classify(store: &Arc<AtomStore>, f: &Formula, gen_cap: u32) -> Result<ClassifyReport> {
    let closure = semantically_closed(store, f)?;
    let closure_code = match &closure {
        ClosureStatus::Closed => "closed",
        ClosureStatus::EmptyAlpha => "empty",
        ClosureStatus::NotClosed { .. } => "not-closed",
    };
    let connected = if closure.is_closed() {
        Some(has_dense_cell(store, f)?)
    } else {
        None
    };
    let generative = is_generative(store, f, store.config().full_enum_cap)?;
    let gen_level = if generative.value == GenerativityValue::Generative {
        let sys = CkSystem::new(store.clone(), f.clone())?;
        Some(sys.gen_level(gen_cap)?)
    } else {
        None
    };
    Ok(ClassifyReport {
        formula: render(f),
        depth: f.depth(),
        semantically_closed: closure.is_closed(),
        closure_code: closure_code.into(),
        connected,
        generative,
        gen_level,
    })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::workspace::WorkspaceConfig;

    fn store12() -> Arc<AtomStore> {
        Arc::new(AtomStore::new(WorkspaceConfig::new(1, 2).unwrap()))
    }

    fn f(store: &AtomStore, text: &str) -> Formula {
        parse(text, store.config()).unwrap()
    }

    #[test]
    fn tautology_is_closed() {
        let s = store12();
        assert!(semantically_closed(&s, &Formula::top())
            .unwrap()
            .is_closed());
    }

    #[test]
    fn depth_zero_nonempty_is_closed() {
        let s = store12();
        assert!(semantically_closed(&s, &f(&s, "p0")).unwrap().is_closed());
    }

    #[test]
    fn contradiction_reports_empty() {
        let s = store12();
        assert_eq!(
            semantically_closed(&s, &Formula::bottom()).unwrap(),
            ClosureStatus::EmptyAlpha
        );
        assert!(!ck_nonempty(&s, &Formula::bottom()).unwrap());
    }

    #[test]
    fn knowing_p_is_not_closed() {
        // At the atom where agent 1 is ignorant, agent 1's block reaches the
        // other valuation, which the truth set of K0 p0 cannot cover.
        let s = store12();
        let status = semantically_closed(&s, &f(&s, "K0 p0")).unwrap();
        assert!(matches!(status, ClosureStatus::NotClosed { .. }));
    }

    #[test]
    fn knowing_whether_is_closed_connected_generative() {
        let s = store12();
        let kw = f(&s, "K0 p0 | K0 !p0");
        assert!(semantically_closed(&s, &kw).unwrap().is_closed());
        assert!(has_dense_cell(&s, &kw).unwrap());
        let report = is_generative(&s, &kw, 2).unwrap();
        assert_eq!(report.value, GenerativityValue::Generative);
        assert_eq!(report.provenance, "assumed-sufficiency");
    }

    #[test]
    fn nobody_knows_is_closed_but_not_generative() {
        let s = store12();
        let ig = f(&s, "!K0 p0 & !K0 !p0 & !K1 p0 & !K1 !p0");
        assert!(semantically_closed(&s, &ig).unwrap().is_closed());
        let report = is_generative(&s, &ig, 2).unwrap();
        assert!(matches!(report.value, GenerativityValue::NotGenerative(_)));
    }

    #[test]
    fn closure_matches_extension_oracle() {
        // Independent characterization: closed iff the truth set is nonempty
        // and equals the projection of the next E-level.
        let s = store12();
        let candidates = [
            "K0 p0",
            "K0 p0 | K0 !p0",
            "E p0",
            "!K0 p0 & !K0 !p0 & !K1 p0 & !K1 !p0",
            "K1 !p0",
            "p0 & K0 p0",
            "K0 p0 | K1 p0",
            "!K0 p0",
        ];
        for text in candidates {
            let formula = f(&s, text);
            let d = formula.depth();
            let closed = semantically_closed(&s, &formula).unwrap().is_closed();
            let alpha = s.alpha_on_level(d, &formula).unwrap();
            let ef = Formula::everybody(s.config(), formula.clone());
            let above = s.alpha_on_level(d + 1, &ef).unwrap();
            let mut projected: Vec<AtomId> = above
                .iter()
                .map(|&v| s.project(v, d).unwrap())
                .collect();
            projected.sort_unstable();
            projected.dedup();
            let oracle = !alpha.is_empty() && projected == alpha;
            assert_eq!(closed, oracle, "closure oracle disagrees on {text}");
        }
    }

    #[test]
    fn tower_matches_e_power_alpha() {
        let s = store12();
        for text in ["p0 | !p0", "K0 p0 | K0 !p0", "E p0"] {
            let formula = f(&s, text);
            let sys = CkSystem::new(s.clone(), formula.clone()).unwrap();
            let d = formula.depth();
            for i in d..=2 {
                let level = sys.level(i).unwrap();
                let ef = Formula::e_power(s.config(), formula.clone(), i - d);
                let alpha = s.alpha_on_level(i, &ef).unwrap();
                assert_eq!(level.atoms, alpha, "tower mismatch for {text} at {i}");
            }
        }
    }

    #[test]
    fn tautology_tower_is_whole_level() {
        let s = store12();
        let sys = CkSystem::new(s.clone(), Formula::top()).unwrap();
        for i in 0..=2 {
            assert_eq!(
                sys.level(i).unwrap().len(),
                s.omega_level(i).unwrap().len()
            );
        }
    }

    #[test]
    fn restricted_extensions_match_full_filtering() {
        let s = store12();
        let kw = f(&s, "K0 p0 | K0 !p0");
        let sys = CkSystem::new(s.clone(), kw).unwrap();
        let level1 = sys.level(1).unwrap();
        let level2 = sys.level(2).unwrap();
        for &w in &level1.atoms {
            let restricted = sys.restricted_extensions(w).unwrap();
            let filtered: Vec<AtomId> = s
                .extensions(w)
                .unwrap()
                .into_iter()
                .filter(|&v| {
                    (0..2).all(|j| {
                        s.choice_set(v, AgentId(j))
                            .unwrap()
                            .iter()
                            .all(|u| level1.contains(*u))
                    })
                })
                .collect();
            assert_eq!(restricted, filtered);
            for &v in &restricted {
                assert!(level2.contains(v));
                assert_eq!(s.project(v, 1).unwrap(), w);
            }
            assert!(!restricted.is_empty());
        }
    }

    #[test]
    fn least_info_is_restricted_extension() {
        let s = store12();
        let kw = f(&s, "K0 p0 | K0 !p0");
        let sys = CkSystem::new(s.clone(), kw).unwrap();
        for &w in &sys.level(1).unwrap().atoms {
            let li = sys.least_info_extension(w).unwrap();
            assert!(sys.restricted_extensions(w).unwrap().contains(&li));
            for j in 0..2 {
                assert_eq!(
                    s.choice_set(li, AgentId(j)).unwrap(),
                    sys.restricted_block(w, AgentId(j)).unwrap().to_vec()
                );
            }
        }
    }

    #[test]
    fn no_information_extension_takes_full_blocks() {
        // Over one proposition the no-information extension of a level-0
        // atom considers both valuations possible for every agent.
        let s = store12();
        let sys = CkSystem::new(s.clone(), Formula::top()).unwrap();
        let zero = s.level0_atom(0).unwrap();
        let p1 = sys.least_info_extension(zero).unwrap();
        for j in 0..2 {
            assert_eq!(s.choice_set(p1, AgentId(j)).unwrap().len(), 2);
        }
    }

    #[test]
    fn tautology_block_classification() {
        let s = store12();
        let sys = CkSystem::new(s.clone(), Formula::top()).unwrap();
        // Level 0: the single block is the whole level with one fiber of
        // two atoms, hence generative for both agents.
        let zero = s.level0_atom(0).unwrap();
        assert_eq!(
            sys.classify_block(0, AgentId(0), zero).unwrap(),
            BlockClass::Generative
        );
        // Level 1: every agent-0 block has fibers of size two.
        let level1 = sys.level(1).unwrap();
        for &w in &level1.atoms {
            let class = sys.classify_block(1, AgentId(0), w).unwrap();
            assert_eq!(class, BlockClass::Generative);
        }
    }

    #[test]
    fn singleton_block_is_neither() {
        let s = store12();
        let ep = f(&s, "E p0");
        let sys = CkSystem::new(s.clone(), ep).unwrap();
        let level1 = sys.level(1).unwrap();
        assert_eq!(level1.len(), 1);
        let w = level1.atoms[0];
        for j in 0..2 {
            assert_eq!(
                sys.classify_block(1, AgentId(j), w).unwrap(),
                BlockClass::Neither
            );
        }
    }

    #[test]
    fn gen_level_of_tautology_is_zero() {
        let s = store12();
        let sys = CkSystem::new(s.clone(), Formula::top()).unwrap();
        assert_eq!(sys.gen_level(2).unwrap(), GenLevelOutcome::Found(0));
    }

    #[test]
    fn gen_level_of_knowing_whether_is_one() {
        let s = store12();
        let kw = f(&s, "K0 p0 | K0 !p0");
        let sys = CkSystem::new(s.clone(), kw).unwrap();
        assert_eq!(sys.gen_level(2).unwrap(), GenLevelOutcome::Found(1));
    }

    #[test]
    fn unique_extension_reported() {
        let s = store12();
        let ep = f(&s, "E p0");
        let sys = CkSystem::new(s.clone(), ep).unwrap();
        assert_eq!(
            sys.gen_level(2).unwrap(),
            GenLevelOutcome::UniquelyExtending
        );
    }

    #[test]
    fn omega_f_fraction_weakly_decreases() {
        let s = store12();
        let kw = f(&s, "K0 p0 | K0 !p0");
        let sys = CkSystem::new(s.clone(), kw).unwrap();
        let mut last = 1.0f64;
        for i in 1..=2u32 {
            let frac =
                sys.level(i).unwrap().len() as f64 / s.omega_level(i).unwrap().len() as f64;
            assert!(frac <= last + 1e-12);
            last = frac;
        }
    }

    #[test]
    fn ck_implies_examples() {
        let s = store12();
        let p = f(&s, "p0");
        let ef = Formula::everybody(s.config(), p.clone());
        assert_eq!(
            ck_implies(&s, &p, &ef, 2).unwrap(),
            ImpliesOutcome::Shown { level: 1 }
        );
        assert_eq!(
            ck_implies(&s, &Formula::top(), &p, 1).unwrap(),
            ImpliesOutcome::NotShown { cap: 1 }
        );
        let e2 = Formula::e_power(s.config(), p.clone(), 2);
        assert_eq!(
            ck_implies(&s, &p, &e2, 2).unwrap(),
            ImpliesOutcome::Shown { level: 2 }
        );
    }

    #[test]
    fn classify_report_shape() {
        let s = store12();
        let report = classify(&s, &f(&s, "K0 p0 | K0 !p0"), 2).unwrap();
        assert!(report.semantically_closed);
        assert_eq!(report.connected, Some(true));
        assert_eq!(report.generative.value, GenerativityValue::Generative);
        assert_eq!(report.gen_level, Some(GenLevelOutcome::Found(1)));
        let empty = classify(&s, &Formula::bottom(), 2).unwrap();
        assert_eq!(empty.closure_code, "empty");
        assert_eq!(empty.connected, None);
    }
}
