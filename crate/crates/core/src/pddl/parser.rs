//! Domain and instance parsing over the s-expression tree.

use std::collections::HashMap;

use super::lexer::{parse_sexpr, Sexpr};
use super::{
    ActionSchema, AtomTemplate, DomainModel, InstanceAtom, InstanceModel, ObjectId, Parameter,
    PddlError, PredicateId, PredicateSchema, TemplateArg, TypeHierarchy, TypeId,
};

const SUPPORTED_REQUIREMENTS: [&str; 2] = [":strips", ":typing"];

fn syntax(expr: &Sexpr, message: impl Into<String>) -> PddlError {
    let (line, col) = expr.pos();
    PddlError::Syntax { line, col, message: message.into() }
}

fn keyword<'a>(expr: &'a Sexpr) -> Option<&'a str> {
    expr.as_list()?.first()?.as_sym()
}

/// Parses a typed element list `a b - t c - u d` into `(name, type)` pairs.
/// Untyped trailing elements get the root type `object`.
fn parse_typed_list(
    items: &[Sexpr],
    types: &TypeHierarchy,
) -> Result<Vec<(String, TypeId, (usize, usize))>, PddlError> {
    let mut out: Vec<(String, TypeId, (usize, usize))> = Vec::new();
    let mut pending: Vec<(String, (usize, usize))> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let sym = items[i].expect_sym()?;
        if sym == "-" {
            i += 1;
            let ty_expr = items.get(i).ok_or_else(|| syntax(&items[i - 1], "missing type after '-'"))?;
            let ty_name = ty_expr.expect_sym()?;
            if ty_name == "either" {
                let (line, col) = ty_expr.pos();
                return Err(PddlError::UnsupportedFeature { line, col, feature: "either types".into() });
            }
            let ty = types.lookup(ty_name).ok_or_else(|| {
                let (line, col) = ty_expr.pos();
                PddlError::UnknownType { line, col, name: ty_name.to_string() }
            })?;
            for (name, pos) in pending.drain(..) {
                out.push((name, ty, pos));
            }
            i += 1;
        } else {
            pending.push((sym.to_string(), items[i].pos()));
            i += 1;
        }
    }
    for (name, pos) in pending {
        out.push((name, TypeHierarchy::OBJECT, pos));
    }
    Ok(out)
}

/// Parses the `(:types ...)` section, which may itself use `-` to declare
/// supertypes; referenced supertypes are created on first mention.
fn parse_types(items: &[Sexpr]) -> Result<TypeHierarchy, PddlError> {
    let mut types = TypeHierarchy::default();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let sym = items[i].expect_sym()?;
        if sym == "-" {
            i += 1;
            let parent_expr = items
                .get(i)
                .ok_or_else(|| syntax(&items[i - 1], "missing supertype after '-'"))?;
            let parent_name = parent_expr.expect_sym()?;
            let parent = types.insert(parent_name, Some(TypeHierarchy::OBJECT));
            for name in pending.drain(..) {
                let ty = types.insert(&name, None);
                types.set_parent(ty, parent);
            }
            i += 1;
        } else {
            pending.push(sym.to_string());
            i += 1;
        }
    }
    for name in pending {
        let ty = types.insert(&name, None);
        types.set_parent(ty, TypeHierarchy::OBJECT);
    }
    Ok(types)
}

struct PredicateTable {
    schemas: Vec<PredicateSchema>,
    by_name: HashMap<String, PredicateId>,
}

fn parse_predicates(items: &[Sexpr], types: &TypeHierarchy) -> Result<PredicateTable, PddlError> {
    let mut schemas = Vec::new();
    let mut by_name = HashMap::new();
    for decl in items {
        let list = decl.expect_list()?;
        if list.is_empty() {
            return Err(syntax(decl, "empty predicate declaration"));
        }
        let name = list[0].expect_sym()?.to_string();
        if by_name.contains_key(&name) {
            let (line, col) = list[0].pos();
            return Err(PddlError::DuplicateName { line, col, name });
        }
        let params = parse_typed_list(&list[1..], types)?;
        for (p, _, pos) in &params {
            if !p.starts_with('?') {
                return Err(PddlError::Syntax {
                    line: pos.0,
                    col: pos.1,
                    message: format!("predicate parameter {p} must start with '?'"),
                });
            }
        }
        by_name.insert(name.clone(), PredicateId(schemas.len() as u32));
        schemas.push(PredicateSchema {
            name,
            param_types: params.into_iter().map(|(_, t, _)| t).collect(),
            is_goal_marker: false,
            is_derived: false,
            marker_for: None,
        });
    }
    Ok(PredicateTable { schemas, by_name })
}

struct AtomContext<'a> {
    predicates: &'a PredicateTable,
    params: &'a [Parameter],
    constants: &'a [(String, TypeId)],
    types: &'a TypeHierarchy,
}

fn parse_atom_template(expr: &Sexpr, ctx: &AtomContext) -> Result<AtomTemplate, PddlError> {
    let list = expr.expect_list()?;
    if list.is_empty() {
        return Err(syntax(expr, "empty atom"));
    }
    let pred_name = list[0].expect_sym()?;
    if pred_name == "=" {
        let (line, col) = list[0].pos();
        return Err(PddlError::UnsupportedFeature { line, col, feature: "equality atoms".into() });
    }
    let pred = *ctx.predicates.by_name.get(pred_name).ok_or_else(|| {
        let (line, col) = list[0].pos();
        PddlError::UnknownPredicate { line, col, name: pred_name.to_string() }
    })?;
    let schema = &ctx.predicates.schemas[pred.0 as usize];
    let got = list.len() - 1;
    if got != schema.arity() {
        let (line, col) = expr.pos();
        return Err(PddlError::ArityMismatch {
            line,
            col,
            predicate: schema.name.clone(),
            expected: schema.arity(),
            got,
        });
    }
    let mut args = Vec::with_capacity(got);
    for (arg_expr, expected_ty) in list[1..].iter().zip(&schema.param_types) {
        let sym = arg_expr.expect_sym()?;
        let (line, col) = arg_expr.pos();
        if let Some(stripped) = sym.strip_prefix('?') {
            let Some(idx) = ctx.params.iter().position(|p| p.name == stripped) else {
                return Err(PddlError::UnboundVariable { line, col, name: sym.to_string() });
            };
            let var_ty = ctx.params[idx].ty;
            if !ctx.types.is_subtype(var_ty, *expected_ty) {
                return Err(PddlError::TypeMismatch {
                    line,
                    col,
                    detail: format!(
                        "variable ?{} of type {} where {} expects {}",
                        stripped,
                        ctx.types.name(var_ty),
                        schema.name,
                        ctx.types.name(*expected_ty)
                    ),
                });
            }
            args.push(TemplateArg::Var(idx));
        } else {
            let Some((_, const_ty)) = ctx.constants.iter().find(|(n, _)| n == sym) else {
                return Err(PddlError::UnknownObject { line, col, name: sym.to_string() });
            };
            if !ctx.types.is_subtype(*const_ty, *expected_ty) {
                return Err(PddlError::TypeMismatch {
                    line,
                    col,
                    detail: format!(
                        "constant {} of type {} where {} expects {}",
                        sym,
                        ctx.types.name(*const_ty),
                        schema.name,
                        ctx.types.name(*expected_ty)
                    ),
                });
            }
            args.push(TemplateArg::Const(sym.to_string()));
        }
    }
    Ok(AtomTemplate { predicate: pred, args })
}

/// Flattens a condition into a conjunction of positive atoms. Rejects the
/// constructs outside the STRIPS subset.
fn parse_conjunction(expr: &Sexpr, ctx: &AtomContext, what: &str) -> Result<Vec<AtomTemplate>, PddlError> {
    let list = expr.expect_list()?;
    if list.is_empty() {
        // () or (and) both denote the empty conjunction
        return Ok(Vec::new());
    }
    let head = list[0].as_sym().unwrap_or("");
    match head {
        "and" => {
            let mut atoms = Vec::new();
            for item in &list[1..] {
                atoms.extend(parse_conjunction(item, ctx, what)?);
            }
            Ok(atoms)
        }
        "not" | "or" | "imply" | "forall" | "exists" | "when" => {
            let (line, col) = expr.pos();
            Err(PddlError::UnsupportedFeature {
                line,
                col,
                feature: format!("({head} ...) in {what}"),
            })
        }
        "increase" | "decrease" | "assign" | "scale-up" | "scale-down" => {
            let (line, col) = expr.pos();
            Err(PddlError::UnsupportedFeature { line, col, feature: "numeric fluents".into() })
        }
        _ => Ok(vec![parse_atom_template(expr, ctx)?]),
    }
}

/// Parses an effect into add and delete lists. `(not atom)` deletes; nested
/// `and` flattens; conditional or quantified effects are rejected.
fn parse_effect(
    expr: &Sexpr,
    ctx: &AtomContext,
    add: &mut Vec<AtomTemplate>,
    del: &mut Vec<AtomTemplate>,
) -> Result<(), PddlError> {
    let list = expr.expect_list()?;
    if list.is_empty() {
        return Ok(());
    }
    let head = list[0].as_sym().unwrap_or("");
    match head {
        "and" => {
            for item in &list[1..] {
                parse_effect(item, ctx, add, del)?;
            }
            Ok(())
        }
        "not" => {
            if list.len() != 2 {
                return Err(syntax(expr, "(not ...) takes exactly one atom"));
            }
            del.push(parse_atom_template(&list[1], ctx)?);
            Ok(())
        }
        "when" | "forall" => {
            let (line, col) = expr.pos();
            Err(PddlError::UnsupportedFeature {
                line,
                col,
                feature: format!("({head} ...) effects"),
            })
        }
        "increase" | "decrease" | "assign" => {
            let (line, col) = expr.pos();
            Err(PddlError::UnsupportedFeature { line, col, feature: "numeric fluents".into() })
        }
        _ => {
            add.push(parse_atom_template(expr, ctx)?);
            Ok(())
        }
    }
}

/// Parses a domain file into a [`DomainModel`], generating the goal-marker
/// companion predicate for every declared predicate.
pub fn parse_domain(text: &str) -> Result<DomainModel, PddlError> {
    let root = parse_sexpr(text)?;
    let items = root.expect_list()?;
    if items.first().and_then(|e| e.as_sym()) != Some("define") {
        return Err(syntax(&root, "expected (define (domain ...) ...)"));
    }
    let header = items.get(1).ok_or_else(|| syntax(&root, "missing (domain NAME)"))?;
    let header_items = header.expect_list()?;
    if header_items.first().and_then(|e| e.as_sym()) != Some("domain") || header_items.len() != 2 {
        return Err(syntax(header, "expected (domain NAME)"));
    }
    let name = header_items[1].expect_sym()?.to_string();

    let mut types = TypeHierarchy::default();
    let mut typed = false;
    let mut predicates: Option<PredicateTable> = None;
    let mut constants: Vec<(String, TypeId)> = Vec::new();
    let mut action_exprs: Vec<&Sexpr> = Vec::new();

    for section in &items[2..] {
        match keyword(section) {
            Some(":requirements") => {
                for req in &section.expect_list()?[1..] {
                    let sym = req.expect_sym()?;
                    if !SUPPORTED_REQUIREMENTS.contains(&sym) {
                        let (line, col) = req.pos();
                        return Err(PddlError::UnsupportedFeature {
                            line,
                            col,
                            feature: format!("requirement {sym}"),
                        });
                    }
                    if sym == ":typing" {
                        typed = true;
                    }
                }
            }
            Some(":types") => {
                types = parse_types(&section.expect_list()?[1..])?;
                typed = true;
            }
            Some(":constants") => {
                let list = parse_typed_list(&section.expect_list()?[1..], &types)?;
                for (n, t, pos) in list {
                    if constants.iter().any(|(en, _)| *en == n) {
                        return Err(PddlError::DuplicateName { line: pos.0, col: pos.1, name: n });
                    }
                    constants.push((n, t));
                }
            }
            Some(":predicates") => {
                predicates = Some(parse_predicates(&section.expect_list()?[1..], &types)?);
            }
            Some(":action") => action_exprs.push(section),
            Some(":functions") | Some(":derived") | Some(":axiom") => {
                let (line, col) = section.pos();
                return Err(PddlError::UnsupportedFeature {
                    line,
                    col,
                    feature: format!("section {}", keyword(section).unwrap()),
                });
            }
            Some(other) => {
                let (line, col) = section.pos();
                return Err(PddlError::Syntax {
                    line,
                    col,
                    message: format!("unknown section {other}"),
                });
            }
            None => return Err(syntax(section, "expected a (:section ...) list")),
        }
    }

    let predicates = predicates.unwrap_or(PredicateTable { schemas: Vec::new(), by_name: HashMap::new() });

    let mut schemas = Vec::new();
    for action in action_exprs {
        let list = action.expect_list()?;
        let action_name = list
            .get(1)
            .ok_or_else(|| syntax(action, "missing action name"))?
            .expect_sym()?
            .to_string();
        if schemas.iter().any(|s: &ActionSchema| s.name == action_name) {
            let (line, col) = list[1].pos();
            return Err(PddlError::DuplicateName { line, col, name: action_name });
        }
        let mut parameters: Vec<Parameter> = Vec::new();
        let mut preconditions = Vec::new();
        let mut add_effects = Vec::new();
        let mut delete_effects = Vec::new();
        let mut i = 2;
        while i < list.len() {
            let key = list[i].expect_sym()?;
            let value = list
                .get(i + 1)
                .ok_or_else(|| syntax(&list[i], format!("missing value after {key}")))?;
            match key {
                ":parameters" => {
                    let typed_list = parse_typed_list(value.expect_list()?, &types)?;
                    for (n, t, pos) in typed_list {
                        let Some(stripped) = n.strip_prefix('?') else {
                            return Err(PddlError::Syntax {
                                line: pos.0,
                                col: pos.1,
                                message: format!("parameter {n} must start with '?'"),
                            });
                        };
                        if parameters.iter().any(|p| p.name == stripped) {
                            return Err(PddlError::DuplicateName { line: pos.0, col: pos.1, name: n });
                        }
                        parameters.push(Parameter { name: stripped.to_string(), ty: t });
                    }
                }
                ":precondition" => {
                    let ctx = AtomContext {
                        predicates: &predicates,
                        params: &parameters,
                        constants: &constants,
                        types: &types,
                    };
                    preconditions = parse_conjunction(value, &ctx, "preconditions")?;
                }
                ":effect" => {
                    let ctx = AtomContext {
                        predicates: &predicates,
                        params: &parameters,
                        constants: &constants,
                        types: &types,
                    };
                    parse_effect(value, &ctx, &mut add_effects, &mut delete_effects)?;
                }
                other => {
                    let (line, col) = list[i].pos();
                    return Err(PddlError::Syntax {
                        line,
                        col,
                        message: format!("unknown action field {other}"),
                    });
                }
            }
            i += 2;
        }
        schemas.push(ActionSchema { name: action_name, parameters, preconditions, add_effects, delete_effects });
    }

    // Generated marker names must not collide with declared predicates.
    for schema in &predicates.schemas {
        let marker_name = format!("{}{}", schema.name, super::GOAL_MARKER_SUFFIX);
        if predicates.by_name.contains_key(&marker_name) {
            return Err(PddlError::DuplicateName { line: 1, col: 1, name: marker_name });
        }
    }

    Ok(DomainModel::new(name, typed, types, predicates.schemas, constants, schemas))
}

/// Parses an instance file and validates every atom against the domain.
pub fn parse_instance(text: &str, domain: &DomainModel) -> Result<InstanceModel, PddlError> {
    let root = parse_sexpr(text)?;
    let items = root.expect_list()?;
    if items.first().and_then(|e| e.as_sym()) != Some("define") {
        return Err(syntax(&root, "expected (define (problem ...) ...)"));
    }
    let header = items.get(1).ok_or_else(|| syntax(&root, "missing (problem NAME)"))?;
    let header_items = header.expect_list()?;
    if header_items.first().and_then(|e| e.as_sym()) != Some("problem") || header_items.len() != 2 {
        return Err(syntax(header, "expected (problem NAME)"));
    }
    let name = header_items[1].expect_sym()?.to_string();

    // Domain constants come first in the object table.
    let mut objects: Vec<(String, TypeId)> = domain.constants.clone();
    let mut init: Vec<InstanceAtom> = Vec::new();
    let mut goal: Vec<InstanceAtom> = Vec::new();
    let mut saw_goal = false;

    let lookup_object = |objects: &[(String, TypeId)], sym: &str, pos: (usize, usize)| {
        objects
            .iter()
            .position(|(n, _)| n == sym)
            .map(|i| ObjectId(i as u32))
            .ok_or(PddlError::UnknownObject { line: pos.0, col: pos.1, name: sym.to_string() })
    };

    let parse_ground_atom = |objects: &[(String, TypeId)], expr: &Sexpr| -> Result<InstanceAtom, PddlError> {
        let list = expr.expect_list()?;
        if list.is_empty() {
            return Err(syntax(expr, "empty atom"));
        }
        let head = list[0].expect_sym()?;
        if matches!(head, "and" | "not" | "or" | "forall" | "exists" | "=") {
            let (line, col) = expr.pos();
            return Err(PddlError::UnsupportedFeature {
                line,
                col,
                feature: format!("({head} ...) here; only positive ground atoms are supported"),
            });
        }
        let pred = domain.lookup_predicate(head).ok_or_else(|| {
            let (line, col) = list[0].pos();
            PddlError::UnknownPredicate { line, col, name: head.to_string() }
        })?;
        let schema = domain.predicate(pred);
        if schema.is_goal_marker || schema.is_derived {
            let (line, col) = list[0].pos();
            return Err(PddlError::UnknownPredicate { line, col, name: head.to_string() });
        }
        if list.len() - 1 != schema.arity() {
            let (line, col) = expr.pos();
            return Err(PddlError::ArityMismatch {
                line,
                col,
                predicate: schema.name.clone(),
                expected: schema.arity(),
                got: list.len() - 1,
            });
        }
        let mut args = Vec::with_capacity(schema.arity());
        for (arg, expected_ty) in list[1..].iter().zip(&schema.param_types) {
            let sym = arg.expect_sym()?;
            let id = lookup_object(objects, sym, arg.pos())?;
            let obj_ty = objects[id.0 as usize].1;
            if !domain.types.is_subtype(obj_ty, *expected_ty) {
                let (line, col) = arg.pos();
                return Err(PddlError::TypeMismatch {
                    line,
                    col,
                    detail: format!(
                        "object {} of type {} where {} expects {}",
                        sym,
                        domain.types.name(obj_ty),
                        schema.name,
                        domain.types.name(*expected_ty)
                    ),
                });
            }
            args.push(id);
        }
        Ok(InstanceAtom { predicate: pred, args })
    };

    for section in &items[2..] {
        match keyword(section) {
            Some(":domain") => {
                let list = section.expect_list()?;
                let got = list
                    .get(1)
                    .ok_or_else(|| syntax(section, "missing domain name"))?
                    .expect_sym()?;
                if got != domain.name {
                    return Err(PddlError::WrongDomain {
                        expected: domain.name.clone(),
                        got: got.to_string(),
                    });
                }
            }
            Some(":objects") => {
                let typed_list = parse_typed_list(&section.expect_list()?[1..], &domain.types)?;
                for (n, t, pos) in typed_list {
                    if objects.iter().any(|(en, _)| *en == n) {
                        return Err(PddlError::DuplicateName { line: pos.0, col: pos.1, name: n });
                    }
                    objects.push((n, t));
                }
            }
            Some(":init") => {
                for atom_expr in &section.expect_list()?[1..] {
                    let atom = parse_ground_atom(&objects, atom_expr)?;
                    if !init.contains(&atom) {
                        init.push(atom);
                    }
                }
            }
            Some(":goal") => {
                saw_goal = true;
                let list = section.expect_list()?;
                let body = list.get(1).ok_or_else(|| syntax(section, "missing goal body"))?;
                let body_items = body.expect_list()?;
                let exprs: Vec<&Sexpr> = if body_items.first().and_then(|e| e.as_sym()) == Some("and") {
                    body_items[1..].iter().collect()
                } else if body_items.is_empty() {
                    Vec::new()
                } else {
                    vec![body]
                };
                for atom_expr in exprs {
                    if let Some(head) = keyword(atom_expr) {
                        if matches!(head, "forall" | "exists" | "or" | "not" | "imply") {
                            let (line, col) = atom_expr.pos();
                            return Err(PddlError::UnsupportedFeature {
                                line,
                                col,
                                feature: format!("({head} ...) goals"),
                            });
                        }
                    }
                    let atom = parse_ground_atom(&objects, atom_expr)?;
                    if !goal.contains(&atom) {
                        goal.push(atom);
                    }
                }
            }
            Some(other) => {
                let (line, col) = section.pos();
                return Err(PddlError::Syntax {
                    line,
                    col,
                    message: format!("unknown section {other}"),
                });
            }
            None => return Err(syntax(section, "expected a (:section ...) list")),
        }
    }

    if !saw_goal || goal.is_empty() {
        return Err(PddlError::EmptyGoal);
    }
    Ok(InstanceModel { name, objects, init, goal })
}
