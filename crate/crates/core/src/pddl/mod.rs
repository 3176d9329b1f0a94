//! STRIPS-style planning language frontend: parsing, grounding, and
//! goal-predicate / derived-predicate state augmentation.
//!
//! The accepted language subset is `:strips` + `:typing`. Goals are embedded
//! into states through generated goal-marker predicates: every parsed
//! predicate `p` gets a companion `p_G` of the same arity, and each state is
//! augmented with `p_G(t)` for every goal atom `p(t)`. Derived predicates are
//! declared in a separate side file (see [`parse_derived`]) and evaluated to
//! closure on top of the augmented state.

mod derived;
mod ground;
mod lexer;
mod parser;
#[cfg(test)]
mod tests;
mod writer;

pub use derived::{apply_derived, parse_derived};
pub use ground::{ground, GroundAction, GroundedProblem, GroundingLimits};
pub use parser::{parse_domain, parse_instance};
pub use writer::{domain_to_pddl, instance_to_pddl};

use std::collections::HashMap;

#[derive(Debug, thiserror::Error)]
pub enum PddlError {
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("unsupported feature at line {line}, column {col}: {feature}")]
    UnsupportedFeature { line: usize, col: usize, feature: String },
    #[error("arity mismatch at line {line}, column {col}: {predicate} expects {expected} arguments, got {got}")]
    ArityMismatch { line: usize, col: usize, predicate: String, expected: usize, got: usize },
    #[error("unknown predicate at line {line}, column {col}: {name}")]
    UnknownPredicate { line: usize, col: usize, name: String },
    #[error("unknown object at line {line}, column {col}: {name}")]
    UnknownObject { line: usize, col: usize, name: String },
    #[error("unknown type at line {line}, column {col}: {name}")]
    UnknownType { line: usize, col: usize, name: String },
    #[error("type mismatch at line {line}, column {col}: {detail}")]
    TypeMismatch { line: usize, col: usize, detail: String },
    #[error("duplicate name at line {line}, column {col}: {name}")]
    DuplicateName { line: usize, col: usize, name: String },
    #[error("unbound variable at line {line}, column {col}: {name}")]
    UnboundVariable { line: usize, col: usize, name: String },
    #[error("instance declares domain {got:?} but domain is {expected:?}")]
    WrongDomain { expected: String, got: String },
    #[error("goal is empty")]
    EmptyGoal,
    #[error("capacity exceeded: {count} {what} over limit {limit}")]
    CapacityExceeded { what: &'static str, limit: usize, count: usize },
    #[error("invalid derived definition: {0}")]
    InvalidDerived(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub struct PredicateId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub struct ObjectId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeId(pub u32);

/// Dense index into the ground-atom table of a [`GroundedProblem`].
pub type AtomIdx = u32;

/// A state as a sorted, deduplicated vector of atom indices. Sorting makes
/// the vector itself the canonical serialization; lexicographic comparison
/// of two states is the tie-break order used throughout.
pub type State = Vec<AtomIdx>;

/// Suffix appended to a predicate name to form its goal-marker companion.
pub const GOAL_MARKER_SUFFIX: &str = "_G";

/// Type hierarchy; type 0 is always the root type `object`.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeHierarchy {
    names: Vec<String>,
    parent: Vec<Option<TypeId>>,
    by_name: HashMap<String, TypeId>,
}

impl Default for TypeHierarchy {
    fn default() -> Self {
        let mut h = TypeHierarchy { names: Vec::new(), parent: Vec::new(), by_name: HashMap::new() };
        h.insert("object", None);
        h
    }
}

impl TypeHierarchy {
    pub const OBJECT: TypeId = TypeId(0);

    pub fn insert(&mut self, name: &str, parent: Option<TypeId>) -> TypeId {
        if let Some(&id) = self.by_name.get(name) {
            return id;
        }
        let id = TypeId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.parent.push(parent);
        self.by_name.insert(name.to_string(), id);
        id
    }

    pub fn set_parent(&mut self, ty: TypeId, parent: TypeId) {
        self.parent[ty.0 as usize] = Some(parent);
    }

    pub fn lookup(&self, name: &str) -> Option<TypeId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, ty: TypeId) -> &str {
        &self.names[ty.0 as usize]
    }

    pub fn parent_of(&self, ty: TypeId) -> Option<TypeId> {
        self.parent[ty.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// True when `sub` equals `sup` or is a transitive descendant of it.
    pub fn is_subtype(&self, sub: TypeId, sup: TypeId) -> bool {
        if sup == Self::OBJECT {
            return true;
        }
        let mut cur = Some(sub);
        while let Some(t) = cur {
            if t == sup {
                return true;
            }
            cur = self.parent[t.0 as usize];
        }
        false
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredicateSchema {
    pub name: String,
    pub param_types: Vec<TypeId>,
    /// True for generated goal-marker (`p_G`) predicates.
    pub is_goal_marker: bool,
    /// True for predicates introduced by a derived-definition side file.
    pub is_derived: bool,
    /// For a goal marker, the base predicate it mirrors.
    pub marker_for: Option<PredicateId>,
}

impl PredicateSchema {
    pub fn arity(&self) -> usize {
        self.param_types.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TemplateArg {
    /// Index into the schema's parameter list.
    Var(usize),
    /// A domain constant, referenced by name and resolved during grounding.
    Const(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomTemplate {
    pub predicate: PredicateId,
    pub args: Vec<TemplateArg>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub ty: TypeId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSchema {
    pub name: String,
    pub parameters: Vec<Parameter>,
    pub preconditions: Vec<AtomTemplate>,
    pub add_effects: Vec<AtomTemplate>,
    pub delete_effects: Vec<AtomTemplate>,
}

/// Argument of a derived-definition body atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivedArg {
    /// Index into the head's parameter list.
    Head(usize),
    /// The single existentially quantified variable.
    Existential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedBodyAtom {
    pub predicate: PredicateId,
    pub args: Vec<DerivedArg>,
}

/// One derived-predicate definition: head predicate plus a body conjunction
/// over base (non-derived) predicates, with at most one existential variable.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedPredicateDef {
    pub head: PredicateId,
    pub head_arity: usize,
    pub uses_existential: bool,
    pub body: Vec<DerivedBodyAtom>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainModel {
    pub name: String,
    pub typed: bool,
    pub types: TypeHierarchy,
    /// All predicates: parsed base predicates first, then one goal marker per
    /// base predicate (marker of id `i` is `i + base_count`), then derived.
    pub predicates: Vec<PredicateSchema>,
    base_count: usize,
    pub constants: Vec<(String, TypeId)>,
    pub schemas: Vec<ActionSchema>,
    pub derived_defs: Vec<DerivedPredicateDef>,
}

impl DomainModel {
    pub(crate) fn new(
        name: String,
        typed: bool,
        types: TypeHierarchy,
        base_predicates: Vec<PredicateSchema>,
        constants: Vec<(String, TypeId)>,
        schemas: Vec<ActionSchema>,
    ) -> Self {
        let base_count = base_predicates.len();
        let mut predicates = base_predicates;
        for i in 0..base_count {
            let base = &predicates[i];
            let marker = PredicateSchema {
                name: format!("{}{}", base.name, GOAL_MARKER_SUFFIX),
                param_types: base.param_types.clone(),
                is_goal_marker: true,
                is_derived: false,
                marker_for: Some(PredicateId(i as u32)),
            };
            predicates.push(marker);
        }
        DomainModel { name, typed, types, predicates, base_count, constants, schemas, derived_defs: Vec::new() }
    }

    /// Number of predicates parsed from the domain file (excluding generated
    /// goal markers and derived predicates).
    pub fn base_predicate_count(&self) -> usize {
        self.base_count
    }

    pub fn predicate(&self, id: PredicateId) -> &PredicateSchema {
        &self.predicates[id.0 as usize]
    }

    pub fn lookup_predicate(&self, name: &str) -> Option<PredicateId> {
        self.predicates
            .iter()
            .position(|p| p.name == name)
            .map(|i| PredicateId(i as u32))
    }

    /// Goal-marker companion of a base predicate.
    pub fn marker_of(&self, base: PredicateId) -> Option<PredicateId> {
        if (base.0 as usize) < self.base_count {
            Some(PredicateId(base.0 + self.base_count as u32))
        } else {
            None
        }
    }

    /// Base predicate a goal marker mirrors.
    pub fn base_of_marker(&self, marker: PredicateId) -> Option<PredicateId> {
        self.predicates[marker.0 as usize].marker_for
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceAtom {
    pub predicate: PredicateId,
    pub args: Vec<ObjectId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceModel {
    pub name: String,
    /// Object table: domain constants first, then instance objects.
    pub objects: Vec<(String, TypeId)>,
    pub init: Vec<InstanceAtom>,
    pub goal: Vec<InstanceAtom>,
}

impl InstanceModel {
    pub fn object_name(&self, id: ObjectId) -> &str {
        &self.objects[id.0 as usize].0
    }
}

/// A ground atom: predicate plus a full argument tuple. The derived `Ord`
/// (predicate id, then argument ids) is the canonical total order used for
/// the atom table and all deterministic iteration downstream.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub predicate: PredicateId,
    pub args: Vec<ObjectId>,
}
