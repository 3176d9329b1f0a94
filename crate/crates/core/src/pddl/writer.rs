//! Serialization of models back to planning-language text.

use super::{ActionSchema, AtomTemplate, DomainModel, InstanceAtom, InstanceModel, TemplateArg, TypeHierarchy};

fn write_typed_names<'a>(
    out: &mut String,
    entries: impl Iterator<Item = (&'a str, super::TypeId)>,
    types: &TypeHierarchy,
    typed: bool,
) {
    for (name, ty) in entries {
        if typed && ty != TypeHierarchy::OBJECT {
            out.push_str(&format!(" {} - {}", name, types.name(ty)));
        } else {
            out.push_str(&format!(" {name}"));
        }
    }
}

fn write_template(out: &mut String, atom: &AtomTemplate, domain: &DomainModel, schema: &ActionSchema) {
    out.push('(');
    out.push_str(&domain.predicate(atom.predicate).name);
    for arg in &atom.args {
        match arg {
            TemplateArg::Var(i) => out.push_str(&format!(" ?{}", schema.parameters[*i].name)),
            TemplateArg::Const(name) => out.push_str(&format!(" {name}")),
        }
    }
    out.push(')');
}

/// Serializes a domain model back to text. Generated goal markers and derived
/// predicates are not written; re-parsing the output regenerates the markers
/// and yields a structurally equal model.
pub fn domain_to_pddl(domain: &DomainModel) -> String {
    let mut out = String::new();
    out.push_str(&format!("(define (domain {})\n", domain.name));
    if domain.typed {
        out.push_str("  (:requirements :strips :typing)\n");
    } else {
        out.push_str("  (:requirements :strips)\n");
    }
    if domain.types.len() > 1 {
        // Group subtypes under their parent: "child .. - parent".
        out.push_str("  (:types");
        let mut grouped: Vec<(super::TypeId, Vec<super::TypeId>)> = Vec::new();
        for i in 1..domain.types.len() {
            let ty = super::TypeId(i as u32);
            let parent = domain.types.parent_of(ty).unwrap_or(TypeHierarchy::OBJECT);
            match grouped.iter_mut().find(|(p, _)| *p == parent) {
                Some((_, children)) => children.push(ty),
                None => grouped.push((parent, vec![ty])),
            }
        }
        for (parent, children) in grouped {
            for c in children {
                out.push_str(&format!(" {}", domain.types.name(c)));
            }
            // The parent is written even for the root so the reader does not
            // fold this group into the next one.
            out.push_str(&format!(" - {}", domain.types.name(parent)));
        }
        out.push_str(")\n");
    }
    if !domain.constants.is_empty() {
        out.push_str("  (:constants");
        write_typed_names(
            &mut out,
            domain.constants.iter().map(|(n, t)| (n.as_str(), *t)),
            &domain.types,
            domain.typed,
        );
        out.push_str(")\n");
    }
    out.push_str("  (:predicates\n");
    for pred in domain.predicates.iter().take(domain.base_predicate_count()) {
        out.push_str(&format!("    ({}", pred.name));
        for (i, ty) in pred.param_types.iter().enumerate() {
            if domain.typed && *ty != TypeHierarchy::OBJECT {
                out.push_str(&format!(" ?x{} - {}", i, domain.types.name(*ty)));
            } else {
                out.push_str(&format!(" ?x{i}"));
            }
        }
        out.push_str(")\n");
    }
    out.push_str("  )\n");
    for schema in &domain.schemas {
        out.push_str(&format!("  (:action {}\n", schema.name));
        out.push_str("    :parameters (");
        let mut first = true;
        for p in &schema.parameters {
            if !first {
                out.push(' ');
            }
            first = false;
            if domain.typed && p.ty != TypeHierarchy::OBJECT {
                out.push_str(&format!("?{} - {}", p.name, domain.types.name(p.ty)));
            } else {
                out.push_str(&format!("?{}", p.name));
            }
        }
        out.push_str(")\n");
        out.push_str("    :precondition (and");
        for atom in &schema.preconditions {
            out.push(' ');
            write_template(&mut out, atom, domain, schema);
        }
        out.push_str(")\n");
        out.push_str("    :effect (and");
        for atom in &schema.add_effects {
            out.push(' ');
            write_template(&mut out, atom, domain, schema);
        }
        for atom in &schema.delete_effects {
            out.push_str(" (not ");
            write_template(&mut out, atom, domain, schema);
            out.push(')');
        }
        out.push_str(")\n");
        out.push_str("  )\n");
    }
    out.push_str(")\n");
    out
}

fn write_instance_atom(out: &mut String, atom: &InstanceAtom, domain: &DomainModel, instance: &InstanceModel) {
    out.push('(');
    out.push_str(&domain.predicate(atom.predicate).name);
    for arg in &atom.args {
        out.push_str(&format!(" {}", instance.object_name(*arg)));
    }
    out.push(')');
}

pub fn instance_to_pddl(instance: &InstanceModel, domain: &DomainModel) -> String {
    let mut out = String::new();
    out.push_str(&format!("(define (problem {})\n", instance.name));
    out.push_str(&format!("  (:domain {})\n", domain.name));
    let own_objects = &instance.objects[domain.constants.len()..];
    if !own_objects.is_empty() {
        out.push_str("  (:objects");
        write_typed_names(
            &mut out,
            own_objects.iter().map(|(n, t)| (n.as_str(), *t)),
            &domain.types,
            domain.typed,
        );
        out.push_str(")\n");
    }
    out.push_str("  (:init");
    for atom in &instance.init {
        out.push(' ');
        write_instance_atom(&mut out, atom, domain, instance);
    }
    out.push_str(")\n");
    out.push_str("  (:goal (and");
    for atom in &instance.goal {
        out.push(' ');
        write_instance_atom(&mut out, atom, domain, instance);
    }
    out.push_str("))\n");
    out.push_str(")\n");
    out
}
