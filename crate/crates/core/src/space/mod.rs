//! Reachable state-space expansion, optimal goal distances, dead-end
//! detection, and dataset construction.

mod cache;
mod dataset;
mod expand;
#[cfg(test)]
mod tests;

pub use cache::{read_cache, write_cache};
pub use dataset::{
    build_dataset, DatasetManifest, InstanceSummary, ManifestEntry, Split, SplitRule,
    DEFAULT_MAX_TRAIN_TRANSITIONS,
};
pub use expand::{expand, goal_distances, optimal_plan_length, ExpandLimits, SuccessorGen};

use std::sync::Arc;

use crate::pddl::{GroundedProblem, State};

#[derive(Debug, thiserror::Error)]
pub enum SpaceError {
    #[error("capacity exceeded: {count} {what} over limit {limit}")]
    CapacityExceeded { what: &'static str, limit: usize, count: usize },
    #[error("no goal state is reachable from the initial state")]
    Unsolvable,
    #[error("training split is empty")]
    EmptyTrainingSplit,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad cache file: {0}")]
    Cache(String),
    #[error("bad manifest: {0}")]
    Manifest(String),
}

/// Dense index of a state within one [`TransitionSystem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub u32);

/// The explicit reachable state space of one instance. States are stored
/// goal-augmented and derived-closed, in BFS discovery order; successor lists
/// are deduplicated by resulting state and ordered by ground-action id.
#[derive(Debug)]
pub struct TransitionSystem {
    pub problem: Arc<GroundedProblem>,
    pub states: Vec<State>,
    pub successors: Vec<Vec<(u32, StateId)>>,
    pub init: StateId,
    pub goal_flags: Vec<bool>,
    /// Optimal number of steps to a goal; `None` marks a dead end.
    pub goal_distance: Vec<Option<u32>>,
}

impl TransitionSystem {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn transition_count(&self) -> usize {
        self.successors.iter().map(|s| s.len()).sum()
    }

    pub fn is_goal(&self, id: StateId) -> bool {
        self.goal_flags[id.0 as usize]
    }

    pub fn state(&self, id: StateId) -> &State {
        &self.states[id.0 as usize]
    }

    pub fn successors_of(&self, id: StateId) -> &[(u32, StateId)] {
        &self.successors[id.0 as usize]
    }

    /// Ids of all non-goal states, in discovery order.
    pub fn non_goal_states(&self) -> Vec<StateId> {
        (0..self.states.len() as u32)
            .map(StateId)
            .filter(|s| !self.goal_flags[s.0 as usize])
            .collect()
    }
}
