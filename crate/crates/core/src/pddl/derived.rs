//! Derived predicates: a side file declares extra predicates whose atoms are
//! computed from each state instead of being affected by actions.
//!
//! File format (s-expressions, any number of definitions):
//!
//! ```text
//! (derived (HEAD ?x ?y)
//!   (exists (?z) (and (q ?x ?z) (r ?z ?y))))
//! (derived (HEAD2 ?x) (and (p ?x) (q_G ?x)))
//! ```
//!
//! The body is a conjunction of atoms over base predicates (goal markers
//! allowed, derived heads not), with at most one existentially quantified
//! variable. Every head variable must occur in the body.

use super::lexer::{parse_sexprs, Sexpr};
use super::{
    AtomIdx, DerivedArg, DerivedBodyAtom, DerivedPredicateDef, DomainModel, GroundAtom,
    GroundedProblem, ObjectId, PddlError, PredicateId, PredicateSchema, State, TypeHierarchy,
};

fn syntax(expr: &Sexpr, message: impl Into<String>) -> PddlError {
    let (line, col) = expr.pos();
    PddlError::Syntax { line, col, message: message.into() }
}

/// Parses a derived-definition side file and registers the new predicates and
/// definitions on the domain.
pub fn parse_derived(text: &str, domain: &mut DomainModel) -> Result<(), PddlError> {
    let exprs = parse_sexprs(text)?;
    for expr in &exprs {
        let list = expr.expect_list()?;
        if list.first().and_then(|e| e.as_sym()) != Some("derived") {
            return Err(syntax(expr, "expected (derived HEAD BODY)"));
        }
        if list.len() != 3 {
            return Err(syntax(expr, "(derived HEAD BODY) takes exactly two arguments"));
        }

        // Head: (name ?v1 ... ?vn), a fresh predicate.
        let head_items = list[1].expect_list()?;
        if head_items.is_empty() {
            return Err(syntax(&list[1], "empty head"));
        }
        let head_name = head_items[0].expect_sym()?.to_string();
        if domain.lookup_predicate(&head_name).is_some() {
            let (line, col) = head_items[0].pos();
            return Err(PddlError::DuplicateName { line, col, name: head_name });
        }
        let mut head_vars: Vec<String> = Vec::new();
        for v in &head_items[1..] {
            let sym = v.expect_sym()?;
            let Some(stripped) = sym.strip_prefix('?') else {
                return Err(syntax(v, format!("head argument {sym} must be a variable")));
            };
            if head_vars.iter().any(|h| h == stripped) {
                let (line, col) = v.pos();
                return Err(PddlError::DuplicateName { line, col, name: sym.to_string() });
            }
            head_vars.push(stripped.to_string());
        }

        // Body: atom | (and atoms...) | (exists (?z) inner)
        let mut existential: Option<String> = None;
        let mut body_expr = &list[2];
        if body_expr.as_list().and_then(|l| l.first()).and_then(|e| e.as_sym()) == Some("exists") {
            let ex_items = body_expr.expect_list()?;
            if ex_items.len() != 3 {
                return Err(syntax(body_expr, "(exists (?z) BODY) takes a variable list and a body"));
            }
            let vars = ex_items[1].expect_list()?;
            if vars.len() != 1 {
                let (line, col) = ex_items[1].pos();
                return Err(PddlError::InvalidDerived(format!(
                    "line {line}, column {col}: exactly one existential variable is allowed"
                )));
            }
            let sym = vars[0].expect_sym()?;
            let Some(stripped) = sym.strip_prefix('?') else {
                return Err(syntax(&vars[0], format!("existential {sym} must be a variable")));
            };
            if head_vars.iter().any(|h| h == stripped) {
                return Err(PddlError::InvalidDerived(format!(
                    "existential ?{stripped} shadows a head variable"
                )));
            }
            existential = Some(stripped.to_string());
            body_expr = &ex_items[2];
        }
        let atom_exprs: Vec<&Sexpr> =
            if body_expr.as_list().and_then(|l| l.first()).and_then(|e| e.as_sym()) == Some("and") {
                body_expr.expect_list()?[1..].iter().collect()
            } else {
                vec![body_expr]
            };
        if atom_exprs.is_empty() {
            return Err(PddlError::InvalidDerived("empty body".into()));
        }

        let mut body: Vec<DerivedBodyAtom> = Vec::new();
        let mut seen_head_var = vec![false; head_vars.len()];
        let mut seen_existential = false;
        for atom_expr in atom_exprs {
            let atom_items = atom_expr.expect_list()?;
            if atom_items.is_empty() {
                return Err(syntax(atom_expr, "empty atom"));
            }
            let pred_name = atom_items[0].expect_sym()?;
            let pred = domain.lookup_predicate(pred_name).ok_or_else(|| {
                let (line, col) = atom_items[0].pos();
                PddlError::UnknownPredicate { line, col, name: pred_name.to_string() }
            })?;
            if domain.predicate(pred).is_derived {
                return Err(PddlError::InvalidDerived(format!(
                    "body predicate {pred_name} is itself derived"
                )));
            }
            let expected = domain.predicate(pred).arity();
            if atom_items.len() - 1 != expected {
                let (line, col) = atom_expr.pos();
                return Err(PddlError::ArityMismatch {
                    line,
                    col,
                    predicate: pred_name.to_string(),
                    expected,
                    got: atom_items.len() - 1,
                });
            }
            let mut args = Vec::with_capacity(expected);
            for arg in &atom_items[1..] {
                let sym = arg.expect_sym()?;
                let Some(stripped) = sym.strip_prefix('?') else {
                    return Err(syntax(arg, format!("body argument {sym} must be a variable")));
                };
                if let Some(idx) = head_vars.iter().position(|h| h == stripped) {
                    seen_head_var[idx] = true;
                    args.push(DerivedArg::Head(idx));
                } else if existential.as_deref() == Some(stripped) {
                    seen_existential = true;
                    args.push(DerivedArg::Existential);
                } else {
                    let (line, col) = arg.pos();
                    return Err(PddlError::UnboundVariable { line, col, name: sym.to_string() });
                }
            }
            body.push(DerivedBodyAtom { predicate: pred, args });
        }
        if let Some(missing) = seen_head_var.iter().position(|s| !s) {
            return Err(PddlError::InvalidDerived(format!(
                "head variable ?{} does not occur in the body",
                head_vars[missing]
            )));
        }
        if existential.is_some() && !seen_existential {
            return Err(PddlError::InvalidDerived(
                "declared existential variable does not occur in the body".into(),
            ));
        }

        let head = PredicateId(domain.predicates.len() as u32);
        domain.predicates.push(PredicateSchema {
            name: head_name,
            param_types: vec![TypeHierarchy::OBJECT; head_vars.len()],
            is_goal_marker: false,
            is_derived: true,
            marker_for: None,
        });
        domain.derived_defs.push(DerivedPredicateDef {
            head,
            head_arity: head_vars.len(),
            uses_existential: existential.is_some(),
            body,
        });
    }
    Ok(())
}

/// Match the body atoms against the state, binding head and existential
/// variables; emits one head atom per satisfying head binding.
fn join(
    problem: &GroundedProblem,
    def: &DerivedPredicateDef,
    state_by_pred: &[Vec<&GroundAtom>],
    out: &mut Vec<AtomIdx>,
) {
    // binding[i] = head var i; binding[head_arity] = existential
    let nvars = def.head_arity + 1;
    let mut binding: Vec<Option<ObjectId>> = vec![None; nvars];

    fn var_slot(arg: DerivedArg, head_arity: usize) -> usize {
        match arg {
            DerivedArg::Head(i) => i,
            DerivedArg::Existential => head_arity,
        }
    }

    fn recurse(
        problem: &GroundedProblem,
        def: &DerivedPredicateDef,
        state_by_pred: &[Vec<&GroundAtom>],
        binding: &mut Vec<Option<ObjectId>>,
        depth: usize,
        out: &mut Vec<AtomIdx>,
    ) {
        if depth == def.body.len() {
            let args: Vec<ObjectId> = (0..def.head_arity)
                .map(|i| binding[i].expect("head variables are bound by a complete match"))
                .collect();
            let head_atom = GroundAtom { predicate: def.head, args };
            if let Some(idx) = problem.atom_index(&head_atom) {
                out.push(idx);
            }
            return;
        }
        let atom = &def.body[depth];
        for candidate in &state_by_pred[atom.predicate.0 as usize] {
            let mut bound: Vec<usize> = Vec::with_capacity(atom.args.len());
            let mut ok = true;
            for (arg, &obj) in atom.args.iter().zip(&candidate.args) {
                let slot = var_slot(*arg, def.head_arity);
                match binding[slot] {
                    Some(existing) if existing != obj => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        binding[slot] = Some(obj);
                        bound.push(slot);
                    }
                }
            }
            if ok {
                recurse(problem, def, state_by_pred, binding, depth + 1, out);
            }
            for slot in bound {
                binding[slot] = None;
            }
        }
    }

    recurse(problem, def, state_by_pred, &mut binding, 0, out);
}

/// Adds every derived head atom licensed by some definition whose body is
/// satisfied in the (goal-augmented) state. Bodies only reference non-derived
/// predicates, so a single pass over the definitions is the fixpoint.
pub fn apply_derived(
    problem: &GroundedProblem,
    state: &[AtomIdx],
    defs: &[DerivedPredicateDef],
) -> State {
    if defs.is_empty() {
        return state.to_vec();
    }
    // Group the state's atoms by predicate for the body matcher.
    let mut by_pred: Vec<Vec<&GroundAtom>> = vec![Vec::new(); problem.domain.predicates.len()];
    for &idx in state {
        let atom = problem.atom(idx);
        if !problem.domain.predicate(atom.predicate).is_derived {
            by_pred[atom.predicate.0 as usize].push(atom);
        }
    }
    let mut added: Vec<AtomIdx> = Vec::new();
    for def in defs {
        join(problem, def, &by_pred, &mut added);
    }
    added.sort_unstable();
    added.dedup();
    let base: State = state
        .iter()
        .copied()
        .filter(|&i| !problem.domain.predicate(problem.atom(i).predicate).is_derived)
        .collect();
    super::ground::merge_sorted(&base, &added)
}
