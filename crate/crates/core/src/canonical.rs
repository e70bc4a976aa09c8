//! The canonical finite models: hash-consed atoms, level enumeration,
//! extension, projection, possibility sets, characteristic formulas, and
//! evaluation of formulas against a level.
//!
//! An atom of level 0 is a valuation. An atom of level `i+1` is a level-`i`
//! atom (its base) together with one set `M^j` of level-`i` atoms per agent,
//! subject to:
//!
//! 1. the base belongs to every `M^j`, and every member of `M^j` shares the
//!    base's level-`i` block for agent `j` (equal top-level `M^j` sets);
//! 2. the level-`(i-1)` projections of `M^j` are exactly the base's own
//!    `M^j` set (vacuous when the base has level 0).
//!
//! Condition 2 is the fiber-meeting requirement in projected form: the
//! fibers met by a block are exactly the members of the shared `M` set,
//! because the block of an atom projects onto that set.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{CkError, Result};
use crate::formula::{Formula, FormulaNode};
use crate::kripke::{KripkeStructure, UnionFind};
use crate::workspace::{AgentId, WorkspaceConfig};

/// Identity of a hash-consed atom. Equal ids mean equal atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AtomId(pub u32);

/// Identity of an interned, sorted set of atom ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct MSetId(pub u32);

#[derive(Debug, Clone)]
struct AtomRow {
    level: u32,
    /// Base atom one level down; `None` at level 0.
    base: Option<AtomId>,
    /// Valuation of the level-0 projection, copied through extensions.
    val: u64,
    /// One interned possibility set per agent; empty at level 0.
    msets: Box<[MSetId]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Key {
    Level0(u64),
    Ext(AtomId, Box<[MSetId]>),
}

/// Full enumeration of one level together with its block structure.
pub struct LevelView {
    pub level: u32,
    /// All atoms of the level in canonical (id) order.
    pub atoms: Vec<AtomId>,
    pub index: HashMap<AtomId, usize>,
    /// The level as a Kripke structure; point `k` is `atoms[k]`.
    pub structure: KripkeStructure,
}

#[derive(Default)]
struct Inner {
    rows: Vec<AtomRow>,
    index: HashMap<Key, AtomId>,
    msets: Vec<Arc<[AtomId]>>,
    mset_index: HashMap<Arc<[AtomId]>, MSetId>,
    /// Valid `M^j` choices for extending an atom, memoized per (atom, agent).
    choice_memo: HashMap<(AtomId, usize), Arc<Vec<MSetId>>>,
    /// Lazy block enumerations, memoized per (atom, agent).
    block_memo: HashMap<(AtomId, usize), Arc<Vec<AtomId>>>,
    levels: HashMap<u32, Arc<Vec<AtomId>>>,
    views: HashMap<u32, Arc<LevelView>>,
}

/// Append-only registry of canonical atoms for one workspace. All queries
/// are pure; interning is synchronized behind one lock.
pub struct AtomStore {
    config: WorkspaceConfig,
    inner: Mutex<Inner>,
}

impl AtomStore {
    pub fn new(config: WorkspaceConfig) -> Self {
        AtomStore {
            config,
            inner: Mutex::new(Inner::default()),
        }
    }

    pub fn config(&self) -> &WorkspaceConfig {
        &self.config
    }

    /// Interns the level-0 atom with the given valuation bitmask.
    pub fn level0_atom(&self, val: u64) -> Result<AtomId> {
        if self.config.num_props < 64 && val >> self.config.num_props != 0 {
            return Err(CkError::MalformedStructure(format!(
                "valuation {val} uses propositions beyond the workspace roster"
            )));
        }
        let mut inner = self.inner.lock().unwrap();
        Ok(intern_level0(&mut inner, val))
    }

    /// Interns a validated extension of `base` with the given choice sets.
    pub fn extend_atom(&self, base: AtomId, choices: Vec<Vec<AtomId>>) -> Result<AtomId> {
        if choices.len() != self.config.num_agents {
            return Err(CkError::MalformedStructure(format!(
                "expected {} choice sets, got {}",
                self.config.num_agents,
                choices.len()
            )));
        }
        let mut inner = self.inner.lock().unwrap();
        let mut mset_ids = Vec::with_capacity(choices.len());
        for (j, mut m) in choices.into_iter().enumerate() {
            m.sort_unstable();
            m.dedup();
            validate_choice(&inner, base, j, &m)?;
            mset_ids.push(intern_mset(&mut inner, m));
        }
        Ok(intern_ext(&mut inner, base, mset_ids.into_boxed_slice()))
    }

    /// Re-runs invariant validation on an already-interned atom.
    pub fn validate_atom(&self, w: AtomId) -> Result<()> {
        let inner = self.inner.lock().unwrap();
        let row = row(&inner, w)?.clone();
        match row.base {
            None => Ok(()),
            Some(base) => {
                for j in 0..self.config.num_agents {
                    let members = inner.msets[row.msets[j].0 as usize].clone();
                    validate_choice(&inner, base, j, &members)?;
                }
                Ok(())
            }
        }
    }

    pub fn level(&self, w: AtomId) -> u32 {
        self.inner.lock().unwrap().rows[w.0 as usize].level
    }

    /// Valuation bitmask of the level-0 projection.
    pub fn valuation(&self, w: AtomId) -> u64 {
        self.inner.lock().unwrap().rows[w.0 as usize].val
    }

    /// Iterated base: the canonical projection to level `k`.
    pub fn project(&self, w: AtomId, k: u32) -> Result<AtomId> {
        let inner = self.inner.lock().unwrap();
        project_in(&inner, w, k)
    }

    /// Members of the atom's possibility set (`M^j`); the level-0 case has
    /// no choice sets and errors.
    pub fn choice_set(&self, w: AtomId, j: AgentId) -> Result<Vec<AtomId>> {
        self.config.check_agent(j)?;
        let inner = self.inner.lock().unwrap();
        let r = row(&inner, w)?;
        if r.base.is_none() {
            return Err(CkError::Precondition(
                "level-0 atoms carry no possibility sets".into(),
            ));
        }
        Ok(inner.msets[r.msets[j.0].0 as usize].to_vec())
    }

    /// All atoms of level `i`. Level 0 is every valuation; level `i+1` is
    /// the union of extensions over level `i`.
    pub fn omega_level(&self, i: u32) -> Result<Arc<Vec<AtomId>>> {
        if i > self.config.full_enum_cap {
            return Err(CkError::CapExceeded {
                what: "omega_level",
                requested: i,
                cap: self.config.full_enum_cap,
            });
        }
        let mut inner = self.inner.lock().unwrap();
        omega_level_in(&mut inner, &self.config, i)
    }

    /// All extensions of `w` one level up.
    pub fn extensions(&self, w: AtomId) -> Result<Vec<AtomId>> {
        let mut inner = self.inner.lock().unwrap();
        let lvl = row(&inner, w)?.level;
        if lvl + 1 > self.config.lazy_cap {
            return Err(CkError::CapExceeded {
                what: "extensions",
                requested: lvl + 1,
                cap: self.config.lazy_cap,
            });
        }
        let per_agent: Vec<Arc<Vec<MSetId>>> = (0..self.config.num_agents)
            .map(|j| agent_choices(&mut inner, &self.config, w, j))
            .collect::<Result<_>>()?;
        let total: u128 = per_agent.iter().map(|c| c.len() as u128).product();
        if total > self.config.size_guard as u128 {
            return Err(CkError::SizeGuardExceeded {
                what: "extensions",
                guard: self.config.size_guard,
            });
        }
        let mut out = Vec::with_capacity(total as usize);
        let mut odo = vec![0usize; per_agent.len()];
        loop {
            let msets: Box<[MSetId]> = odo
                .iter()
                .zip(per_agent.iter())
                .map(|(&k, cs)| cs[k])
                .collect();
            out.push(intern_ext(&mut inner, w, msets));
            if !advance(&mut odo, &per_agent) {
                break;
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// The agent's block containing `w` at `w`'s level: every atom sharing
    /// `w`'s `M^j` set, enumerated lazily. At level 0 this is all of level 0.
    pub fn possibility_set(&self, w: AtomId, j: AgentId) -> Result<Vec<AtomId>> {
        self.config.check_agent(j)?;
        let mut inner = self.inner.lock().unwrap();
        let r = row(&inner, w)?.clone();
        if r.base.is_none() {
            return omega_level_in(&mut inner, &self.config, 0).map(|l| l.to_vec());
        }
        block_of(&mut inner, &self.config, w, j.0).map(|b| b.to_vec())
    }

    /// A formula of depth at most `level(w)` true at `w` and nowhere else in
    /// its level.
    pub fn characteristic_formula(&self, w: AtomId) -> Result<Formula> {
        let lvl = self.level(w);
        if lvl > self.config.lazy_cap {
            return Err(CkError::CapExceeded {
                what: "characteristic_formula",
                requested: lvl,
                cap: self.config.lazy_cap,
            });
        }
        let mut memo = HashMap::new();
        self.characteristic_memo(w, &mut memo)
    }

    fn characteristic_memo(&self, w: AtomId, memo: &mut HashMap<AtomId, Formula>) -> Result<Formula> {
        if let Some(f) = memo.get(&w) {
            return Ok(f.clone());
        }
        let (base, msets, val) = {
            let inner = self.inner.lock().unwrap();
            let r = row(&inner, w)?;
            let msets: Vec<Vec<AtomId>> = r
                .msets
                .iter()
                .map(|&m| inner.msets[m.0 as usize].to_vec())
                .collect();
            (r.base, msets, r.val)
        };
        let f = match base {
            None => {
                let mut acc: Option<Formula> = None;
                for x in 0..self.config.num_props {
                    let lit = if val >> x & 1 == 1 {
                        Formula::prop(x)
                    } else {
                        Formula::not(Formula::prop(x))
                    };
                    acc = Some(match acc {
                        None => lit,
                        Some(a) => Formula::and(a, lit),
                    });
                }
                acc.expect("workspace has at least one proposition")
            }
            Some(base) => {
                let mut acc = self.characteristic_memo(base, memo)?;
                for (j, members) in msets.iter().enumerate() {
                    // For each considered atom: it is considered possible;
                    // and only considered atoms are possible.
                    let mut union: Option<Formula> = None;
                    for &u in members {
                        let fu = self.characteristic_memo(u, memo)?;
                        acc = Formula::and(
                            acc,
                            Formula::not(Formula::know(j, Formula::not(fu.clone()))),
                        );
                        union = Some(match union {
                            None => fu,
                            Some(o) => Formula::or(o, fu),
                        });
                    }
                    let union = union.expect("possibility sets are nonempty");
                    acc = Formula::and(acc, Formula::know(j, union));
                }
                acc
            }
        };
        memo.insert(w, f.clone());
        Ok(f)
    }

    /// Disjunction of characteristic formulas, true exactly on the set.
    pub fn characteristic_of_set(&self, atoms: &[AtomId]) -> Result<Formula> {
        let mut sorted: Vec<AtomId> = atoms.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut memo = HashMap::new();
        let mut acc: Option<Formula> = None;
        for w in sorted {
            let fw = self.characteristic_memo(w, &mut memo)?;
            acc = Some(match acc {
                None => fw,
                Some(a) => Formula::or(a, fw),
            });
        }
        Ok(acc.unwrap_or_else(Formula::bottom))
    }

    /// The level as a Kripke structure: blocks group atoms by their `M^j`
    /// set (one block per agent at level 0), the valuation is the level-0
    /// projection.
    pub fn level_view(&self, i: u32) -> Result<Arc<LevelView>> {
        if i > self.config.full_enum_cap {
            return Err(CkError::CapExceeded {
                what: "level_view",
                requested: i,
                cap: self.config.full_enum_cap,
            });
        }
        {
            let inner = self.inner.lock().unwrap();
            if let Some(v) = inner.views.get(&i) {
                return Ok(v.clone());
            }
        }
        let atoms = self.omega_level(i)?;
        let view = {
            let inner = self.inner.lock().unwrap();
            build_view(&inner, &self.config, i, atoms.to_vec())?
        };
        let view = Arc::new(view);
        self.inner.lock().unwrap().views.insert(i, view.clone());
        Ok(view)
    }

    /// Builds a Kripke-structure view over an explicit subset of one level
    /// (used for the restricted levels).
    pub fn subset_view(&self, level: u32, atoms: Vec<AtomId>) -> Result<LevelView> {
        let inner = self.inner.lock().unwrap();
        build_view(&inner, &self.config, level, atoms)
    }

    /// Truth set of `f` on the level structure, as atom ids.
    pub fn alpha_on_level(&self, i: u32, f: &Formula) -> Result<Vec<AtomId>> {
        if f.depth() > i {
            return Err(CkError::DepthExceedsLevel {
                depth: f.depth(),
                level: i,
            });
        }
        f.check_indices(&self.config)?;
        let view = self.level_view(i)?;
        let ts = view.structure.alpha(f)?;
        Ok(ts.iter().map(|p| view.atoms[p]).collect())
    }

    /// Membership evaluation of a formula at a single atom, by structural
    /// recursion through the choice sets. Agrees with `alpha_on_level`
    /// wherever both are defined, but needs no level enumeration.
    pub fn atom_models(&self, w: AtomId, f: &Formula) -> Result<bool> {
        let lvl = self.level(w);
        if f.depth() > lvl {
            return Err(CkError::DepthExceedsLevel {
                depth: f.depth(),
                level: lvl,
            });
        }
        f.check_indices(&self.config)?;
        let mut memo = HashMap::new();
        self.models_memo(w, f, &mut memo)
    }

    /// `atom_models` over many atoms with a shared memo table.
    pub fn models_filter(&self, atoms: &[AtomId], f: &Formula) -> Result<Vec<AtomId>> {
        f.check_indices(&self.config)?;
        let mut memo = HashMap::new();
        let mut out = Vec::new();
        for &w in atoms {
            if self.level(w) < f.depth() {
                return Err(CkError::DepthExceedsLevel {
                    depth: f.depth(),
                    level: self.level(w),
                });
            }
            if self.models_memo(w, f, &mut memo)? {
                out.push(w);
            }
        }
        Ok(out)
    }

    fn models_memo(
        &self,
        w: AtomId,
        f: &Formula,
        memo: &mut HashMap<(AtomId, usize), bool>,
    ) -> Result<bool> {
        let key = (w, f.key());
        if let Some(&hit) = memo.get(&key) {
            return Ok(hit);
        }
        let value = match f.node() {
            FormulaNode::Prop(x) => self.valuation(w) >> x.0 & 1 == 1,
            FormulaNode::Not(g) => !self.models_memo(w, g, memo)?,
            FormulaNode::And(g, h) => {
                self.models_memo(w, g, memo)? && self.models_memo(w, h, memo)?
            }
            FormulaNode::Know(j, g) => {
                let members = self.choice_set(w, *j)?;
                let mut all = true;
                for u in members {
                    if !self.models_memo(u, g, memo)? {
                        all = false;
                        break;
                    }
                }
                all
            }
        };
        memo.insert(key, value);
        Ok(value)
    }

    /// True iff the formula is true at every atom of its depth level.
    pub fn is_tautology(&self, f: &Formula) -> Result<bool> {
        let level = f.depth();
        let all = self.omega_level(level)?;
        Ok(self.alpha_on_level(level, f)?.len() == all.len())
    }

    /// Connectivity of the level without materializing the full structure.
    pub fn level_connected(&self, i: u32) -> Result<bool> {
        let atoms = self.omega_level(i)?;
        let inner = self.inner.lock().unwrap();
        let index: HashMap<AtomId, usize> =
            atoms.iter().enumerate().map(|(k, &a)| (a, k)).collect();
        let mut uf = UnionFind::new(atoms.len());
        for j in 0..self.config.num_agents {
            let mut groups: HashMap<u64, usize> = HashMap::new();
            for (k, &a) in atoms.iter().enumerate() {
                let r = &inner.rows[a.0 as usize];
                let g = if r.base.is_none() {
                    0
                } else {
                    r.msets[j].0 as u64 + 1
                };
                match groups.entry(g) {
                    std::collections::hash_map::Entry::Occupied(e) => uf.union(*e.get(), k),
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(k);
                    }
                }
            }
        }
        let _ = index;
        let assignment = uf.canonical_assignment();
        Ok(assignment.iter().all(|&c| c == 0))
    }

    /// JSON export of the atoms and everything they reference.
    pub fn export_registry(&self, roots: &[AtomId]) -> Result<Vec<AtomJson>> {
        let inner = self.inner.lock().unwrap();
        let mut seen: HashSet<AtomId> = HashSet::new();
        let mut stack: Vec<AtomId> = roots.to_vec();
        while let Some(w) = stack.pop() {
            if !seen.insert(w) {
                continue;
            }
            let r = row(&inner, w)?;
            if let Some(b) = r.base {
                stack.push(b);
            }
            for &m in r.msets.iter() {
                stack.extend(inner.msets[m.0 as usize].iter().copied());
            }
        }
        let mut ids: Vec<AtomId> = seen.into_iter().collect();
        ids.sort_unstable();
        Ok(ids
            .into_iter()
            .map(|w| {
                let r = &inner.rows[w.0 as usize];
                AtomJson {
                    id: w,
                    level: r.level,
                    val: (0..self.config.num_props)
                        .map(|x| r.val >> x & 1 == 1)
                        .collect(),
                    base: r.base,
                    choices: r
                        .msets
                        .iter()
                        .map(|&m| inner.msets[m.0 as usize].to_vec())
                        .collect(),
                }
            })
            .collect())
    }

    pub(crate) fn mset_key(&self, w: AtomId, j: usize) -> Option<MSetId> {
        let inner = self.inner.lock().unwrap();
        let r = &inner.rows[w.0 as usize];
        if r.base.is_none() {
            None
        } else {
            Some(r.msets[j])
        }
    }
}

/// Serialized atom: level, valuation of its level-0 projection, base id,
/// and one sorted choice list per agent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomJson {
    pub id: AtomId,
    pub level: u32,
    pub val: Vec<bool>,
    pub base: Option<AtomId>,
    pub choices: Vec<Vec<AtomId>>,
}

fn row<'a>(inner: &'a Inner, w: AtomId) -> Result<&'a AtomRow> {
    inner
        .rows
        .get(w.0 as usize)
        .ok_or_else(|| CkError::MalformedStructure(format!("unknown atom id {}", w.0)))
}

fn intern_level0(inner: &mut Inner, val: u64) -> AtomId {
    let key = Key::Level0(val);
    if let Some(&id) = inner.index.get(&key) {
        return id;
    }
    let id = AtomId(inner.rows.len() as u32);
    inner.rows.push(AtomRow {
        level: 0,
        base: None,
        val,
        msets: Box::new([]),
    });
    inner.index.insert(key, id);
    id
}

fn intern_mset(inner: &mut Inner, sorted: Vec<AtomId>) -> MSetId {
    let arc: Arc<[AtomId]> = sorted.into();
    if let Some(&id) = inner.mset_index.get(&arc) {
        return id;
    }
    let id = MSetId(inner.msets.len() as u32);
    inner.msets.push(arc.clone());
    inner.mset_index.insert(arc, id);
    id
}

fn intern_ext(inner: &mut Inner, base: AtomId, msets: Box<[MSetId]>) -> AtomId {
    let key = Key::Ext(base, msets.clone());
    if let Some(&id) = inner.index.get(&key) {
        return id;
    }
    let level = inner.rows[base.0 as usize].level + 1;
    let val = inner.rows[base.0 as usize].val;
    let id = AtomId(inner.rows.len() as u32);
    inner.rows.push(AtomRow {
        level,
        base: Some(base),
        val,
        msets,
    });
    inner.index.insert(key, id);
    id
}

/// Checks conditions 1 and 2 for one agent's choice set when extending
/// `base`: membership of the base, block agreement, and exact projection.
fn validate_choice(inner: &Inner, base: AtomId, j: usize, members: &[AtomId]) -> Result<()> {
    let base_row = row(inner, base)?;
    if !members.contains(&base) {
        return Err(CkError::InvalidAtom(format!(
            "agent {} choice set omits the base atom {}",
            j, base.0
        )));
    }
    for &m in members {
        let mr = row(inner, m)?;
        if mr.level != base_row.level {
            return Err(CkError::InvalidAtom(format!(
                "agent {} choice member {} has level {}, expected {}",
                j, m.0, mr.level, base_row.level
            )));
        }
        if base_row.base.is_some() && mr.msets[j] != base_row.msets[j] {
            return Err(CkError::InvalidAtom(format!(
                "agent {} choice member {} lies outside the base's block",
                j, m.0
            )));
        }
    }
    if base_row.base.is_some() {
        // Projections of the choice set must be exactly the base's own set.
        let mut projected: Vec<AtomId> = members
            .iter()
            .map(|&m| row(inner, m).map(|r| r.base.expect("level >= 1")))
            .collect::<Result<_>>()?;
        projected.sort_unstable();
        projected.dedup();
        let expected = &inner.msets[base_row.msets[j].0 as usize];
        if projected.as_slice() != &expected[..] {
            return Err(CkError::InvalidAtom(format!(
                "agent {} choice set projects to {:?}, expected {:?}",
                j,
                projected.iter().map(|a| a.0).collect::<Vec<_>>(),
                expected.iter().map(|a| a.0).collect::<Vec<_>>()
            )));
        }
    }
    Ok(())
}

fn project_in(inner: &Inner, w: AtomId, k: u32) -> Result<AtomId> {
    let mut cur = w;
    let mut lvl = row(inner, w)?.level;
    if k > lvl {
        return Err(CkError::ProjectionAboveLevel {
            requested: k,
            level: lvl,
        });
    }
    while lvl > k {
        cur = row(inner, cur)?.base.expect("level > 0 atoms have a base");
        lvl -= 1;
    }
    Ok(cur)
}

fn omega_level_in(inner: &mut Inner, cfg: &WorkspaceConfig, i: u32) -> Result<Arc<Vec<AtomId>>> {
    if let Some(l) = inner.levels.get(&i) {
        return Ok(l.clone());
    }
    let atoms: Vec<AtomId> = if i == 0 {
        if cfg.num_props >= 24 || 1usize << cfg.num_props > cfg.size_guard {
            return Err(CkError::SizeGuardExceeded {
                what: "omega_level(0)",
                guard: cfg.size_guard,
            });
        }
        let mut out: Vec<AtomId> = (0..1u64 << cfg.num_props)
            .map(|v| intern_level0(inner, v))
            .collect();
        out.sort_unstable();
        out
    } else {
        let below = omega_level_in(inner, cfg, i - 1)?;
        let mut out: Vec<AtomId> = Vec::new();
        for &w in below.iter() {
            let per_agent: Vec<Arc<Vec<MSetId>>> = (0..cfg.num_agents)
                .map(|j| agent_choices(inner, cfg, w, j))
                .collect::<Result<_>>()?;
            let total: u128 = per_agent.iter().map(|c| c.len() as u128).product();
            if out.len() as u128 + total > cfg.size_guard as u128 {
                return Err(CkError::SizeGuardExceeded {
                    what: "omega_level",
                    guard: cfg.size_guard,
                });
            }
            let mut odo = vec![0usize; per_agent.len()];
            loop {
                let msets: Box<[MSetId]> = odo
                    .iter()
                    .zip(per_agent.iter())
                    .map(|(&k, cs)| cs[k])
                    .collect();
                out.push(intern_ext(inner, w, msets));
                if !advance(&mut odo, &per_agent) {
                    break;
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    };
    let arc = Arc::new(atoms);
    inner.levels.insert(i, arc.clone());
    Ok(arc)
}

fn advance(odo: &mut [usize], limits: &[Arc<Vec<MSetId>>]) -> bool {
    for k in (0..odo.len()).rev() {
        odo[k] += 1;
        if odo[k] < limits[k].len() {
            return true;
        }
        odo[k] = 0;
    }
    false
}

/// All valid `M^j` values for extending `w`: subsets of `w`'s block that
/// contain `w` and hit every fiber the block meets (i.e. project onto
/// `w`'s own `M^j`). Fibers group blockmates by their base.
fn agent_choices(
    inner: &mut Inner,
    cfg: &WorkspaceConfig,
    w: AtomId,
    j: usize,
) -> Result<Arc<Vec<MSetId>>> {
    if let Some(hit) = inner.choice_memo.get(&(w, j)) {
        return Ok(hit.clone());
    }
    let is_level0 = row(inner, w)?.base.is_none();
    let block: Vec<AtomId> = if is_level0 {
        omega_level_in(inner, cfg, 0)?.to_vec()
    } else {
        block_of(inner, cfg, w, j)?.to_vec()
    };
    // Fibers in sorted-base order; at level 0 the whole block is one fiber
    // with no coverage requirement beyond containing w.
    let fibers: Vec<Vec<AtomId>> = if is_level0 {
        vec![block]
    } else {
        let mut by_base: BTreeMap<AtomId, Vec<AtomId>> = BTreeMap::new();
        for &v in &block {
            let b = row(inner, v)?.base.expect("blockmates of a level>=1 atom");
            by_base.entry(b).or_default().push(v);
        }
        by_base.into_values().collect()
    };
    let mut count: u128 = 1;
    for fiber in &fibers {
        if fiber.len() >= 24 {
            return Err(CkError::SizeGuardExceeded {
                what: "agent_choices",
                guard: cfg.size_guard,
            });
        }
        let contains_w = fiber.contains(&w);
        let options = if contains_w {
            1u128 << (fiber.len() - 1)
        } else {
            (1u128 << fiber.len()) - 1
        };
        count = count.saturating_mul(options);
    }
    if count > cfg.size_guard as u128 {
        return Err(CkError::SizeGuardExceeded {
            what: "agent_choices",
            guard: cfg.size_guard,
        });
    }
    // Enumerate per-fiber subsets: masks ascending, the w-fiber restricted
    // to masks containing w, other fibers to nonempty masks (level 0: any
    // mask containing w for its single fiber).
    let mut per_fiber: Vec<Vec<Vec<AtomId>>> = Vec::with_capacity(fibers.len());
    for fiber in &fibers {
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
    let mut choices = Vec::with_capacity(count as usize);
    let mut odo = vec![0usize; per_fiber.len()];
    loop {
        let mut m: Vec<AtomId> = Vec::new();
        for (k, subsets) in per_fiber.iter().enumerate() {
            m.extend_from_slice(&subsets[odo[k]]);
        }
        m.sort_unstable();
        choices.push(intern_mset(inner, m));
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
    let arc = Arc::new(choices);
    inner.choice_memo.insert((w, j), arc.clone());
    Ok(arc)
}

/// Lazy enumeration of the block of `w` for agent `j` at `w`'s level: every
/// atom over a base in `M^j(w)` whose agent-`j` set is exactly `M^j(w)`,
/// with all valid choices for the other agents.
fn block_of(inner: &mut Inner, cfg: &WorkspaceConfig, w: AtomId, j: usize) -> Result<Arc<Vec<AtomId>>> {
    if let Some(hit) = inner.block_memo.get(&(w, j)) {
        return Ok(hit.clone());
    }
    let r = row(inner, w)?.clone();
    let mset = r.msets[j];
    let bases: Vec<AtomId> = inner.msets[mset.0 as usize].to_vec();
    let mut members: Vec<AtomId> = Vec::new();
    for u in bases {
        let other_choices: Vec<Arc<Vec<MSetId>>> = (0..cfg.num_agents)
            .map(|k| {
                if k == j {
                    Ok(Arc::new(vec![mset]))
                } else {
                    agent_choices(inner, cfg, u, k)
                }
            })
            .collect::<Result<_>>()?;
        let total: u128 = other_choices.iter().map(|c| c.len() as u128).product();
        if members.len() as u128 + total > cfg.size_guard as u128 {
            return Err(CkError::SizeGuardExceeded {
                what: "possibility_set",
                guard: cfg.size_guard,
            });
        }
        let mut odo = vec![0usize; other_choices.len()];
        loop {
            let msets: Box<[MSetId]> = odo
                .iter()
                .zip(other_choices.iter())
                .map(|(&k, cs)| cs[k])
                .collect();
            members.push(intern_ext(inner, u, msets));
            if !advance(&mut odo, &other_choices) {
                break;
            }
        }
    }
    members.sort_unstable();
    members.dedup();
    let arc = Arc::new(members);
    inner.block_memo.insert((w, j), arc.clone());
    Ok(arc)
}

fn build_view(
    inner: &Inner,
    cfg: &WorkspaceConfig,
    level: u32,
    atoms: Vec<AtomId>,
) -> Result<LevelView> {
    let index: HashMap<AtomId, usize> = atoms.iter().enumerate().map(|(k, &a)| (a, k)).collect();
    let valuations: Vec<u64> = atoms.iter().map(|&a| inner.rows[a.0 as usize].val).collect();
    let mut partitions: Vec<Vec<usize>> = Vec::with_capacity(cfg.num_agents);
    for j in 0..cfg.num_agents {
        let mut label_of: BTreeMap<u64, usize> = BTreeMap::new();
        let mut assignment = Vec::with_capacity(atoms.len());
        for &a in &atoms {
            let r = &inner.rows[a.0 as usize];
            let key = if r.base.is_none() {
                0u64
            } else {
                r.msets[j].0 as u64 + 1
            };
            let next = label_of.len();
            assignment.push(*label_of.entry(key).or_insert(next));
        }
        partitions.push(assignment);
    }
    let structure = KripkeStructure::new(cfg.num_props, cfg.num_agents, valuations, partitions)?;
    Ok(LevelView {
        level,
        atoms,
        index,
        structure,
    })
}
