use serde::{Deserialize, Serialize};

use crate::error::{CkError, Result};

/// Index of an agent, dense in `0..num_agents`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub usize);

/// Index of a primitive proposition, dense in `0..num_props`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PropId(pub usize);

/// Fixed roster of propositions and agents plus the level caps that keep
/// every enumeration desk-scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkspaceConfig {
    pub num_props: usize,
    pub num_agents: usize,
    /// Cap for full enumeration of a level (`omega_level`, `alpha_on_level`,
    /// `is_tautology`, `third_agent_structure`). Default 2; 3 is allowed with
    /// an explicit override.
    pub full_enum_cap: u32,
    /// Cap for lazy per-atom operations (extensions, possibility sets,
    /// projections, theory maps, restricted-level towers).
    pub lazy_cap: u32,
    /// Guard on the number of atoms any single enumeration may materialize.
    pub size_guard: usize,
}

pub const DEFAULT_FULL_ENUM_CAP: u32 = 2;
pub const DEFAULT_LAZY_CAP: u32 = 6;
pub const DEFAULT_SIZE_GUARD: usize = 8_000_000;

impl WorkspaceConfig {
    pub fn new(num_props: usize, num_agents: usize) -> Result<Self> {
        if num_props == 0 {
            return Err(CkError::Precondition(
                "workspace needs at least one proposition".into(),
            ));
        }
        if num_agents == 0 {
            return Err(CkError::Precondition(
                "workspace needs at least one agent".into(),
            ));
        }
        Ok(WorkspaceConfig {
            num_props,
            num_agents,
            full_enum_cap: DEFAULT_FULL_ENUM_CAP,
            lazy_cap: DEFAULT_LAZY_CAP,
            size_guard: DEFAULT_SIZE_GUARD,
        })
    }

    pub fn with_full_enum_cap(mut self, cap: u32) -> Self {
        self.full_enum_cap = cap;
        self
    }

    pub fn with_lazy_cap(mut self, cap: u32) -> Self {
        self.lazy_cap = cap;
        self
    }

    pub fn with_size_guard(mut self, guard: usize) -> Self {
        self.size_guard = guard;
        self
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        (0..self.num_agents).map(AgentId)
    }

    pub fn check_prop(&self, p: PropId) -> Result<()> {
        if p.0 >= self.num_props {
            Err(CkError::PropOutOfRange {
                index: p.0,
                max: self.num_props,
            })
        } else {
            Ok(())
        }
    }

    pub fn check_agent(&self, a: AgentId) -> Result<()> {
        if a.0 >= self.num_agents {
            Err(CkError::AgentOutOfRange {
                index: a.0,
                max: self.num_agents,
            })
        } else {
            Ok(())
        }
    }
}
