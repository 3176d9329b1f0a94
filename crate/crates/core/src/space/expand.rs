//! Breadth-first expansion of the reachable state space and backward
//! breadth-first goal distances.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use crate::pddl::{AtomIdx, GroundedProblem, State};

use super::{SpaceError, StateId, TransitionSystem};

#[derive(Debug, Clone, Copy)]
pub struct ExpandLimits {
    pub max_states: usize,
    pub max_transitions: usize,
}

impl Default for ExpandLimits {
    fn default() -> Self {
        ExpandLimits { max_states: 1_000_000, max_transitions: 4_000_000 }
    }
}

/// On-the-fly successor generation by progression over ground actions.
/// States handed in and out are stored states: goal-augmented and
/// derived-closed.
pub struct SuccessorGen<'a> {
    problem: &'a GroundedProblem,
    /// Scratch bitset over the atom table, reused between calls.
    membership: Vec<bool>,
}

impl<'a> SuccessorGen<'a> {
    pub fn new(problem: &'a GroundedProblem) -> Self {
        SuccessorGen { problem, membership: vec![false; problem.atoms.len()] }
    }

    /// The stored form of the initial state.
    pub fn initial_state(&mut self) -> State {
        self.close(self.problem.init.clone())
    }

    /// Augments and derived-closes a base state.
    pub fn close(&self, base: State) -> State {
        let augmented = self.problem.augment_goals(&base);
        crate::pddl::apply_derived(self.problem, &augmented, &self.problem.domain.derived_defs)
    }

    /// Successors of a stored state, deduplicated by resulting state (the
    /// lowest applicable action id is kept as representative) and ordered by
    /// that action id.
    pub fn successors(&mut self, stored: &State) -> Vec<(u32, State)> {
        let base = self.problem.base_atoms(stored);
        for &i in &base {
            self.membership[i as usize] = true;
        }
        let mut out: Vec<(u32, State)> = Vec::new();
        let mut seen: HashMap<State, ()> = HashMap::new();
        for (aid, action) in self.problem.actions.iter().enumerate() {
            if !action.pre.iter().all(|&p| self.membership[p as usize]) {
                continue;
            }
            let mut next: State = Vec::with_capacity(base.len() + action.add.len());
            // (base \ del) ∪ add, all kept sorted
            let mut add_iter = action.add.iter().copied().peekable();
            for &atom in &base {
                if action.del.binary_search(&atom).is_ok() {
                    continue;
                }
                while let Some(&a) = add_iter.peek() {
                    if a < atom {
                        next.push(a);
                        add_iter.next();
                    } else if a == atom {
                        add_iter.next();
                    } else {
                        break;
                    }
                }
                next.push(atom);
            }
            next.extend(add_iter);
            let closed = self.close(next);
            if !seen.contains_key(&closed) {
                seen.insert(closed.clone(), ());
                out.push((aid as u32, closed));
            }
        }
        for &i in &base {
            self.membership[i as usize] = false;
        }
        out
    }
}

/// Expands the full reachable state space from the initial state. Every
/// stored state is goal-augmented and derived-closed; states are numbered in
/// discovery order, making the expansion deterministic.
pub fn expand(
    problem: &Arc<GroundedProblem>,
    limits: &ExpandLimits,
) -> Result<TransitionSystem, SpaceError> {
    let mut gen = SuccessorGen::new(problem);
    let start = gen.initial_state();

    let mut ids: HashMap<State, StateId> = HashMap::new();
    let mut states: Vec<State> = Vec::new();
    let mut successors: Vec<Vec<(u32, StateId)>> = Vec::new();
    let mut queue: VecDeque<StateId> = VecDeque::new();
    let mut transitions = 0usize;

    ids.insert(start.clone(), StateId(0));
    states.push(start);
    successors.push(Vec::new());
    queue.push_back(StateId(0));

    while let Some(id) = queue.pop_front() {
        let succs = gen.successors(&states[id.0 as usize]);
        let mut edges = Vec::with_capacity(succs.len());
        for (aid, next) in succs {
            let next_id = match ids.get(&next) {
                Some(&existing) => existing,
                None => {
                    let new_id = StateId(states.len() as u32);
                    if states.len() + 1 > limits.max_states {
                        return Err(SpaceError::CapacityExceeded {
                            what: "states",
                            limit: limits.max_states,
                            count: states.len() + 1,
                        });
                    }
                    ids.insert(next.clone(), new_id);
                    states.push(next);
                    successors.push(Vec::new());
                    queue.push_back(new_id);
                    new_id
                }
            };
            edges.push((aid, next_id));
            transitions += 1;
            if transitions > limits.max_transitions {
                return Err(SpaceError::CapacityExceeded {
                    what: "transitions",
                    limit: limits.max_transitions,
                    count: transitions,
                });
            }
        }
        successors[id.0 as usize] = edges;
    }

    let goal_flags: Vec<bool> = states.iter().map(|s| problem.is_goal_state(s)).collect();
    let goal_distance = goal_distances(&successors, &goal_flags);

    Ok(TransitionSystem {
        problem: Arc::clone(problem),
        states,
        successors,
        init: StateId(0),
        goal_flags,
        goal_distance,
    })
}

/// Backward breadth-first search from all goal states over reversed edges.
/// States that cannot reach any goal get `None` (dead ends).
pub fn goal_distances(
    successors: &[Vec<(u32, StateId)>],
    goal_flags: &[bool],
) -> Vec<Option<u32>> {
    let n = successors.len();
    let mut reverse: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (s, edges) in successors.iter().enumerate() {
        for &(_, t) in edges {
            reverse[t.0 as usize].push(s as u32);
        }
    }
    let mut dist: Vec<Option<u32>> = vec![None; n];
    let mut queue: VecDeque<u32> = VecDeque::new();
    for (s, &flag) in goal_flags.iter().enumerate() {
        if flag {
            dist[s] = Some(0);
            queue.push_back(s as u32);
        }
    }
    while let Some(s) = queue.pop_front() {
        let d = dist[s as usize].unwrap();
        for &p in &reverse[s as usize] {
            if dist[p as usize].is_none() && !goal_flags[p as usize] {
                dist[p as usize] = Some(d + 1);
                queue.push_back(p);
            }
        }
    }
    dist
}

/// Optimal plan length for the instance, obtained by exhaustive expansion.
/// This is the oracle denominator for plan-quality reports.
pub fn optimal_plan_length(
    problem: &Arc<GroundedProblem>,
    limits: &ExpandLimits,
) -> Result<u32, SpaceError> {
    let ts = expand(problem, limits)?;
    ts.goal_distance[ts.init.0 as usize].ok_or(SpaceError::Unsolvable)
}
