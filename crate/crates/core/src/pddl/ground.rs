//! Grounding: instantiating predicate and action schemas with the instance
//! objects to obtain the dense atom table and the ground action set.

use std::collections::HashMap;
use std::sync::Arc;

use super::{
    AtomIdx, AtomTemplate, DomainModel, GroundAtom, InstanceModel, ObjectId, PddlError,
    PredicateId, State, TemplateArg, TypeId,
};

#[derive(Debug, Clone, Copy)]
pub struct GroundingLimits {
    pub max_atoms: usize,
    pub max_actions: usize,
}

impl Default for GroundingLimits {
    fn default() -> Self {
        GroundingLimits { max_atoms: 1_000_000, max_actions: 1_000_000 }
    }
}

#[derive(Debug, Clone)]
pub struct GroundAction {
    pub schema: usize,
    pub args: Vec<ObjectId>,
    /// Sorted atom indices.
    pub pre: Vec<AtomIdx>,
    pub add: Vec<AtomIdx>,
    pub del: Vec<AtomIdx>,
}

/// The compact state model of one instance: dense atom table, ground action
/// set, initial state and goal.
#[derive(Debug)]
pub struct GroundedProblem {
    pub domain: Arc<DomainModel>,
    pub instance_name: String,
    pub objects: Vec<(String, TypeId)>,
    /// Canonically ordered (predicate id, then argument ids); the position in
    /// this table is the atom's dense index.
    pub atoms: Vec<GroundAtom>,
    atom_lookup: HashMap<GroundAtom, AtomIdx>,
    pub actions: Vec<GroundAction>,
    /// Ground actions enumerated before statically-false pruning.
    pub actions_before_pruning: usize,
    /// Initial state over base atoms, sorted.
    pub init: State,
    /// Goal atoms (base predicates), sorted.
    pub goal: Vec<AtomIdx>,
    /// Goal-marker atoms `p_G(t)` paired with the goal, sorted.
    pub goal_markers: Vec<AtomIdx>,
}

impl GroundedProblem {
    pub fn atom_index(&self, atom: &GroundAtom) -> Option<AtomIdx> {
        self.atom_lookup.get(atom).copied()
    }

    pub fn atom(&self, idx: AtomIdx) -> &GroundAtom {
        &self.atoms[idx as usize]
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    pub fn action_name(&self, action: &GroundAction) -> String {
        let schema = &self.domain.schemas[action.schema];
        let args: Vec<&str> = action.args.iter().map(|o| self.objects[o.0 as usize].0.as_str()).collect();
        if args.is_empty() {
            format!("({})", schema.name)
        } else {
            format!("({} {})", schema.name, args.join(" "))
        }
    }

    pub fn atom_name(&self, idx: AtomIdx) -> String {
        let atom = self.atom(idx);
        let pred = &self.domain.predicate(atom.predicate).name;
        let args: Vec<&str> = atom.args.iter().map(|o| self.objects[o.0 as usize].0.as_str()).collect();
        if args.is_empty() {
            format!("({pred})")
        } else {
            format!("({} {})", pred, args.join(" "))
        }
    }

    /// Returns `state ∪ {p_G(t) : p(t) ∈ goal}`. Idempotent; never removes
    /// atoms and adds exactly the goal markers missing from the state.
    pub fn augment_goals(&self, state: &[AtomIdx]) -> State {
        merge_sorted(state, &self.goal_markers)
    }

    /// True when every goal-marker atom in the state has its base atom
    /// present as well.
    pub fn is_goal_state(&self, state: &[AtomIdx]) -> bool {
        for &idx in state {
            let atom = self.atom(idx);
            if let Some(base) = self.domain.base_of_marker(atom.predicate) {
                let base_atom = GroundAtom { predicate: base, args: atom.args.clone() };
                match self.atom_index(&base_atom) {
                    Some(b) if state.binary_search(&b).is_ok() => {}
                    _ => return false,
                }
            }
        }
        true
    }

    /// Base (non-marker, non-derived) atoms of a stored state.
    pub fn base_atoms(&self, state: &[AtomIdx]) -> State {
        state
            .iter()
            .copied()
            .filter(|&idx| {
                let p = self.domain.predicate(self.atoms[idx as usize].predicate);
                !p.is_goal_marker && !p.is_derived
            })
            .collect()
    }
}

pub(crate) fn merge_sorted(a: &[AtomIdx], b: &[AtomIdx]) -> State {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Enumerates all argument tuples for the given parameter types, in
/// lexicographic object-id order.
fn type_consistent_tuples(
    domain: &DomainModel,
    objects: &[(String, TypeId)],
    param_types: &[TypeId],
) -> Vec<Vec<ObjectId>> {
    let candidates: Vec<Vec<ObjectId>> = param_types
        .iter()
        .map(|&pt| {
            objects
                .iter()
                .enumerate()
                .filter(|(_, (_, ot))| domain.types.is_subtype(*ot, pt))
                .map(|(i, _)| ObjectId(i as u32))
                .collect()
        })
        .collect();
    let mut tuples: Vec<Vec<ObjectId>> = vec![Vec::new()];
    for cands in &candidates {
        let mut next = Vec::with_capacity(tuples.len() * cands.len());
        for t in &tuples {
            for &c in cands {
                let mut t2 = t.clone();
                t2.push(c);
                next.push(t2);
            }
        }
        tuples = next;
    }
    tuples
}

/// Grounds the instance: enumerates the atom table (all type-consistent
/// tuples for base and derived predicates, goal markers only for goal
/// atoms), instantiates every type-consistent action, and prunes actions
/// whose preconditions contain a statically false atom (one that is neither
/// in the initial state nor in any add effect).
pub fn ground(
    domain: &Arc<DomainModel>,
    instance: &InstanceModel,
    limits: &GroundingLimits,
) -> Result<GroundedProblem, PddlError> {
    let objects = &instance.objects;

    // Atom table, blocked per predicate in id order.
    let mut atoms: Vec<GroundAtom> = Vec::new();
    for (pid, pred) in domain.predicates.iter().enumerate() {
        let pid = PredicateId(pid as u32);
        if pred.is_goal_marker {
            // Only the markers matching goal atoms exist.
            let mut marker_atoms: Vec<GroundAtom> = instance
                .goal
                .iter()
                .filter(|g| domain.marker_of(g.predicate) == Some(pid))
                .map(|g| GroundAtom { predicate: pid, args: g.args.clone() })
                .collect();
            marker_atoms.sort();
            marker_atoms.dedup();
            atoms.extend(marker_atoms);
        } else {
            for args in type_consistent_tuples(domain, objects, &pred.param_types) {
                atoms.push(GroundAtom { predicate: pid, args });
            }
        }
        if atoms.len() > limits.max_atoms {
            return Err(PddlError::CapacityExceeded {
                what: "ground atoms",
                limit: limits.max_atoms,
                count: atoms.len(),
            });
        }
    }
    debug_assert!(atoms.windows(2).all(|w| w[0] < w[1]), "atom table must be strictly ordered");
    let atom_lookup: HashMap<GroundAtom, AtomIdx> =
        atoms.iter().enumerate().map(|(i, a)| (a.clone(), i as AtomIdx)).collect();

    let resolve = |template: &AtomTemplate, args: &[ObjectId]| -> Option<AtomIdx> {
        let resolved: Vec<ObjectId> = template
            .args
            .iter()
            .map(|a| match a {
                TemplateArg::Var(i) => Some(args[*i]),
                TemplateArg::Const(name) => objects
                    .iter()
                    .position(|(n, _)| n == name)
                    .map(|i| ObjectId(i as u32)),
            })
            .collect::<Option<Vec<_>>>()?;
        atom_lookup.get(&GroundAtom { predicate: template.predicate, args: resolved }).copied()
    };

    // Enumerate ground actions.
    let mut actions: Vec<GroundAction> = Vec::new();
    for (sid, schema) in domain.schemas.iter().enumerate() {
        let param_types: Vec<TypeId> = schema.parameters.iter().map(|p| p.ty).collect();
        for args in type_consistent_tuples(domain, objects, &param_types) {
            let mut pre = Vec::with_capacity(schema.preconditions.len());
            let mut add = Vec::with_capacity(schema.add_effects.len());
            let mut del = Vec::with_capacity(schema.delete_effects.len());
            let mut ok = true;
            for t in &schema.preconditions {
                match resolve(t, &args) {
                    Some(i) => pre.push(i),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                for t in &schema.add_effects {
                    match resolve(t, &args) {
                        Some(i) => add.push(i),
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
            }
            if ok {
                for t in &schema.delete_effects {
                    match resolve(t, &args) {
                        Some(i) => del.push(i),
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
            }
            if !ok {
                // Ill-typed instantiation: some atom cannot exist.
                continue;
            }
            pre.sort_unstable();
            pre.dedup();
            add.sort_unstable();
            add.dedup();
            del.sort_unstable();
            del.dedup();
            // An atom both added and deleted is net-added under STRIPS
            // semantics; keeping add and delete sets disjoint preserves that.
            del.retain(|d| add.binary_search(d).is_err());
            actions.push(GroundAction { schema: sid, args, pre, add, del });
            if actions.len() > limits.max_actions {
                return Err(PddlError::CapacityExceeded {
                    what: "ground actions",
                    limit: limits.max_actions,
                    count: actions.len(),
                });
            }
        }
    }
    let actions_before_pruning = actions.len();

    let mut init: State = instance
        .init
        .iter()
        .map(|a| atom_lookup[&GroundAtom { predicate: a.predicate, args: a.args.clone() }])
        .collect();
    init.sort_unstable();
    init.dedup();

    // One pass of reachable-atom analysis: an atom that is neither initially
    // true nor added by any action can never hold, so any action requiring it
    // is dropped.
    let mut possibly_true = vec![false; atoms.len()];
    for &i in &init {
        possibly_true[i as usize] = true;
    }
    for action in &actions {
        for &a in &action.add {
            possibly_true[a as usize] = true;
        }
    }
    actions.retain(|action| action.pre.iter().all(|&p| possibly_true[p as usize]));

    let mut goal: Vec<AtomIdx> = instance
        .goal
        .iter()
        .map(|a| atom_lookup[&GroundAtom { predicate: a.predicate, args: a.args.clone() }])
        .collect();
    goal.sort_unstable();
    goal.dedup();

    let mut goal_markers: Vec<AtomIdx> = instance
        .goal
        .iter()
        .map(|a| {
            let marker = domain.marker_of(a.predicate).expect("goal atoms use base predicates");
            atom_lookup[&GroundAtom { predicate: marker, args: a.args.clone() }]
        })
        .collect();
    goal_markers.sort_unstable();
    goal_markers.dedup();

    Ok(GroundedProblem {
        domain: Arc::clone(domain),
        instance_name: instance.name.clone(),
        objects: objects.clone(),
        atoms,
        atom_lookup,
        actions,
        actions_before_pruning,
        init,
        goal,
        goal_markers,
    })
}
