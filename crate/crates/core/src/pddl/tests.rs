use std::sync::Arc;

use super::*;
use crate::fixtures;

fn arc_domain(text: &str) -> Arc<DomainModel> {
    Arc::new(parse_domain(text).unwrap())
}

fn grounded(domain_text: &str, instance_text: &str) -> GroundedProblem {
    let domain = arc_domain(domain_text);
    let instance = parse_instance(instance_text, &domain).unwrap();
    ground(&domain, &instance, &GroundingLimits::default()).unwrap()
}

#[test]
fn minimal_domain_counts() {
    let text = "(define (domain tiny)
        (:requirements :strips)
        (:predicates (at ?x))
        (:action noop :parameters (?x) :precondition (at ?x) :effect (and)))";
    let domain = parse_domain(text).unwrap();
    assert_eq!(domain.base_predicate_count(), 1);
    assert_eq!(domain.predicate(PredicateId(0)).arity(), 1);
    assert_eq!(domain.schemas.len(), 1);
    assert!(domain.schemas[0].add_effects.is_empty());
    assert!(domain.schemas[0].delete_effects.is_empty());
}

#[test]
fn gripper_fixture_counts() {
    let domain = parse_domain(fixtures::GRIPPER_DOMAIN).unwrap();
    assert_eq!(domain.base_predicate_count(), 7);
    assert_eq!(domain.schemas.len(), 3);
    // one goal marker per parsed predicate
    assert_eq!(domain.predicates.len(), 14);
}

#[test]
fn bundled_domains_parse() {
    for (name, text, derived) in fixtures::bundled_domains() {
        let mut domain = parse_domain(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        if let Some(defs) = derived {
            parse_derived(defs, &mut domain).unwrap_or_else(|e| panic!("{name} derived: {e}"));
        }
        for (iname, itext) in fixtures::bundled_instances(name) {
            parse_instance(&itext, &domain).unwrap_or_else(|e| panic!("{iname}: {e}"));
        }
    }
}

#[test]
fn unbalanced_parenthesis_reports_position() {
    let text = "(define (domain broken)\n  (:predicates (p ?x)";
    match parse_domain(text) {
        Err(PddlError::Syntax { line, col, message }) => {
            // innermost unclosed paren: `(:predicates` on line 2, column 3
            assert_eq!((line, col), (2, 3), "{message}");
            assert!(message.contains("unbalanced"));
        }
        other => panic!("expected syntax error, got {other:?}"),
    }
}

#[test]
fn unsupported_requirement_is_rejected() {
    let text = "(define (domain adl) (:requirements :strips :adl) (:predicates (p ?x)))";
    assert!(matches!(
        parse_domain(text),
        Err(PddlError::UnsupportedFeature { .. })
    ));
}

#[test]
fn conditional_effects_are_rejected() {
    let text = "(define (domain cond)
        (:predicates (p ?x) (q ?x))
        (:action a :parameters (?x)
          :precondition (p ?x)
          :effect (when (p ?x) (q ?x))))";
    assert!(matches!(
        parse_domain(text),
        Err(PddlError::UnsupportedFeature { .. })
    ));
}

#[test]
fn negative_preconditions_are_rejected() {
    let text = "(define (domain neg)
        (:predicates (p ?x))
        (:action a :parameters (?x)
          :precondition (not (p ?x))
          :effect (and)))";
    assert!(matches!(
        parse_domain(text),
        Err(PddlError::UnsupportedFeature { .. })
    ));
}

const TOY_DOMAIN: &str = "(define (domain toy)
    (:requirements :strips)
    (:predicates (clear ?x) (on ?x ?y))
    (:action put
      :parameters (?x ?y)
      :precondition (and (clear ?x) (clear ?y))
      :effect (and (on ?x ?y) (not (clear ?y)))))";

#[test]
fn instance_with_two_objects() {
    let domain = parse_domain(TOY_DOMAIN).unwrap();
    let text = "(define (problem two) (:domain toy)
        (:objects a b)
        (:init (clear a))
        (:goal (on a b)))";
    let instance = parse_instance(text, &domain).unwrap();
    assert_eq!(instance.objects.len(), 2);
    assert_eq!(instance.init.len(), 1);
    assert_eq!(instance.goal.len(), 1);
}

#[test]
fn goal_with_undeclared_object_is_unknown_object() {
    let domain = parse_domain(TOY_DOMAIN).unwrap();
    let text = "(define (problem bad) (:domain toy)
        (:objects a b)
        (:init (clear a))
        (:goal (on a c)))";
    assert!(matches!(
        parse_instance(text, &domain),
        Err(PddlError::UnknownObject { name, .. }) if name == "c"
    ));
}

#[test]
fn empty_goal_is_an_error() {
    let domain = parse_domain(TOY_DOMAIN).unwrap();
    let text = "(define (problem empty) (:domain toy)
        (:objects a b)
        (:init (clear a))
        (:goal (and)))";
    assert!(matches!(parse_instance(text, &domain), Err(PddlError::EmptyGoal)));
}

#[test]
fn unknown_predicate_in_init() {
    let domain = parse_domain(TOY_DOMAIN).unwrap();
    let text = "(define (problem bad) (:domain toy)
        (:objects a)
        (:init (shiny a))
        (:goal (clear a)))";
    assert!(matches!(
        parse_instance(text, &domain),
        Err(PddlError::UnknownPredicate { name, .. }) if name == "shiny"
    ));
}

#[test]
fn arity_mismatch_in_init() {
    let domain = parse_domain(TOY_DOMAIN).unwrap();
    let text = "(define (problem bad) (:domain toy)
        (:objects a)
        (:init (on a))
        (:goal (clear a)))";
    assert!(matches!(
        parse_instance(text, &domain),
        Err(PddlError::ArityMismatch { expected: 2, got: 1, .. })
    ));
}

#[test]
fn grounding_enumerates_all_tuples() {
    // arity-2 predicate over 2 objects -> 4 ground atoms
    let problem = grounded(
        TOY_DOMAIN,
        "(define (problem g) (:domain toy) (:objects a b) (:init (clear a) (clear b)) (:goal (on a b)))",
    );
    let on = problem.domain.lookup_predicate("on").unwrap();
    let count = problem.atoms.iter().filter(|a| a.predicate == on).count();
    assert_eq!(count, 4);
}

#[test]
fn grounding_counts_actions_before_pruning() {
    // schema with 2 untyped parameters over 3 objects -> 9 ground actions
    let problem = grounded(
        TOY_DOMAIN,
        "(define (problem g) (:domain toy) (:objects a b c) (:init (clear a)) (:goal (on a b)))",
    );
    assert_eq!(problem.actions_before_pruning, 9);
}

#[test]
fn two_block_init_has_exactly_two_applicable_actions() {
    // Hand enumeration oracle: with both blocks on the table, the hand empty
    // and everything clear, only pick-up(b1) and pick-up(b2) apply.
    let problem = grounded(fixtures::BLOCKS_DOMAIN, &fixtures::blocks_instance(2, 1));
    let init = &problem.init;
    let applicable: Vec<String> = problem
        .actions
        .iter()
        .filter(|a| a.pre.iter().all(|p| init.binary_search(p).is_ok()))
        .map(|a| problem.action_name(a))
        .collect();
    assert_eq!(applicable.len(), 2, "applicable: {applicable:?}");
    assert!(applicable.contains(&"(pick-up b1)".to_string()));
    assert!(applicable.contains(&"(pick-up b2)".to_string()));
}

#[test]
fn grounding_capacity_limit() {
    let limits = GroundingLimits { max_atoms: 3, max_actions: 1000 };
    let domain = arc_domain(TOY_DOMAIN);
    let instance = parse_instance(
        "(define (problem g) (:domain toy) (:objects a b) (:init (clear a)) (:goal (on a b)))",
        &domain,
    )
    .unwrap();
    assert!(matches!(
        ground(&domain, &instance, &limits),
        Err(PddlError::CapacityExceeded { .. })
    ));
}

#[test]
fn typed_grounding_respects_types() {
    let problem = grounded(fixtures::DELIVERY_DOMAIN, &fixtures::delivery_instance(2, 1, 1));
    // (carrying ?p - package): only one package among the three objects
    let carrying = problem.domain.lookup_predicate("carrying").unwrap();
    let count = problem.atoms.iter().filter(|a| a.predicate == carrying).count();
    assert_eq!(count, 1);
}

#[test]
fn augment_goals_matches_marker_semantics() {
    let domain_text = "(define (domain mini)
        (:predicates (clear ?x))
        (:action nop :parameters (?x) :precondition (clear ?x) :effect (and)))";
    let problem = grounded(
        domain_text,
        "(define (problem m) (:domain mini) (:objects a c) (:init (clear a)) (:goal (clear c)))",
    );
    let state = problem.init.clone();
    let augmented = problem.augment_goals(&state);
    let names: Vec<String> = augmented.iter().map(|&i| problem.atom_name(i)).collect();
    assert_eq!(names, vec!["(clear a)", "(clear_G c)"]);
    // adds exactly |goal| atoms and never removes any
    assert_eq!(augmented.len(), state.len() + problem.goal.len());
    assert!(state.iter().all(|a| augmented.binary_search(a).is_ok()));
    // idempotent
    assert_eq!(problem.augment_goals(&augmented), augmented);
}

#[test]
fn augment_with_empty_goal_set_is_identity() {
    let problem = grounded(
        TOY_DOMAIN,
        "(define (problem g) (:domain toy) (:objects a b) (:init (clear a)) (:goal (on a b)))",
    );
    // simulate an empty marker set by merging with nothing
    let state = problem.init.clone();
    assert_eq!(super::ground::merge_sorted(&state, &[]), state);
}

const DERIVED_DOMAIN: &str = "(define (domain triple)
    (:predicates (q ?x ?y) (r ?x ?y) (haveq ?x))
    (:action touch :parameters (?x ?y)
      :precondition (q ?x ?y) :effect (and (haveq ?x))))";

const DERIVED_DEFS: &str = "(derived (p ?x ?y) (exists (?z) (and (q ?x ?z) (r ?z ?y))))";

fn derived_problem(init: &str, objects: &str) -> (GroundedProblem, Vec<DerivedPredicateDef>) {
    let mut domain = parse_domain(DERIVED_DOMAIN).unwrap();
    parse_derived(DERIVED_DEFS, &mut domain).unwrap();
    let domain = Arc::new(domain);
    let instance = parse_instance(
        &format!(
            "(define (problem d) (:domain triple) (:objects {objects}) (:init {init}) (:goal (haveq a)))"
        ),
        &domain,
    )
    .unwrap();
    let defs = domain.derived_defs.clone();
    let problem = ground(&domain, &instance, &GroundingLimits::default()).unwrap();
    (problem, defs)
}

#[test]
fn derived_chain_adds_head_atom() {
    let (problem, defs) = derived_problem("(q a b) (r b c)", "a b c");
    let state = apply_derived(&problem, &problem.init, &defs);
    let names: Vec<String> = state.iter().map(|&i| problem.atom_name(i)).collect();
    assert!(names.contains(&"(p a c)".to_string()), "state: {names:?}");
    assert_eq!(state.len(), problem.init.len() + 1);
}

#[test]
fn derived_body_unsatisfied_leaves_state_unchanged() {
    let (problem, defs) = derived_problem("(q a b) (r c a)", "a b c");
    // q(a,b) and r(c,a) do not chain: no z with q(x,z) and r(z,y)... except
    // q(a,b) needs r(b,_) which is absent.
    let state = apply_derived(&problem, &problem.init, &defs);
    assert_eq!(state, problem.init);
}

#[test]
fn derived_without_second_conjunct_adds_nothing() {
    let (problem, defs) = derived_problem("(q a b)", "a b c");
    let state = apply_derived(&problem, &problem.init, &defs);
    assert_eq!(state, problem.init);
}

#[test]
fn derived_matches_brute_force_oracle() {
    // Brute-force oracle: enumerate all (x, y, z) object triples and check
    // the body directly against the state.
    let (problem, defs) = derived_problem(
        "(q a b) (q b b) (r b c) (r b a) (q c a) (r a a)",
        "a b c",
    );
    let state = apply_derived(&problem, &problem.init, &defs);

    let q = problem.domain.lookup_predicate("q").unwrap();
    let r = problem.domain.lookup_predicate("r").unwrap();
    let p = problem.domain.lookup_predicate("p").unwrap();
    let holds = |pred, a: u32, b: u32| {
        problem
            .atom_index(&GroundAtom { predicate: pred, args: vec![ObjectId(a), ObjectId(b)] })
            .map(|i| problem.init.binary_search(&i).is_ok())
            .unwrap_or(false)
    };
    let n = problem.object_count() as u32;
    let mut expected: Vec<AtomIdx> = problem.init.clone();
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                if holds(q, x, z) && holds(r, z, y) {
                    let idx = problem
                        .atom_index(&GroundAtom {
                            predicate: p,
                            args: vec![ObjectId(x), ObjectId(y)],
                        })
                        .unwrap();
                    expected.push(idx);
                }
            }
        }
    }
    expected.sort_unstable();
    expected.dedup();
    assert_eq!(state, expected);
}

#[test]
fn derived_validation_errors() {
    let mut domain = parse_domain(DERIVED_DOMAIN).unwrap();
    // two existential variables
    let err = parse_derived(
        "(derived (p ?x) (exists (?z ?w) (and (q ?x ?z) (r ?z ?w))))",
        &mut domain,
    );
    assert!(matches!(err, Err(PddlError::InvalidDerived(_))));
    // head var missing from body
    let err = parse_derived("(derived (p ?x ?y) (and (q ?x ?x)))", &mut domain);
    assert!(matches!(err, Err(PddlError::InvalidDerived(_))));
    // derived head used in another body
    let mut domain2 = parse_domain(DERIVED_DOMAIN).unwrap();
    parse_derived(DERIVED_DEFS, &mut domain2).unwrap();
    let err = parse_derived("(derived (pp ?x ?y) (and (p ?x ?y)))", &mut domain2);
    assert!(matches!(err, Err(PddlError::InvalidDerived(_))));
}

#[test]
fn domain_round_trip() {
    for (name, text, _) in fixtures::bundled_domains() {
        let domain = parse_domain(text).unwrap();
        let serialized = domain_to_pddl(&domain);
        let reparsed = parse_domain(&serialized)
            .unwrap_or_else(|e| panic!("{name} round trip failed: {e}\n{serialized}"));
        assert_eq!(domain.name, reparsed.name, "{name}");
        assert_eq!(domain.predicates.len(), reparsed.predicates.len(), "{name}");
        assert_eq!(domain.schemas.len(), reparsed.schemas.len(), "{name}");
        for (a, b) in domain.schemas.iter().zip(&reparsed.schemas) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.preconditions.len(), b.preconditions.len());
            assert_eq!(a.add_effects.len(), b.add_effects.len());
            assert_eq!(a.delete_effects.len(), b.delete_effects.len());
        }
    }
}

#[test]
fn instance_round_trip() {
    let domain = arc_domain(fixtures::GRIPPER_DOMAIN);
    let text = fixtures::gripper_instance(2, 2, false);
    let instance = parse_instance(&text, &domain).unwrap();
    let serialized = instance_to_pddl(&instance, &domain);
    let reparsed = parse_instance(&serialized, &domain).unwrap();
    assert_eq!(instance, reparsed);
}

#[test]
fn apply_then_unapply_restores_state() {
    let problem = grounded(fixtures::GRIPPER_DOMAIN, &fixtures::gripper_instance(2, 2, false));
    let state = &problem.init;
    for action in &problem.actions {
        if !action.pre.iter().all(|p| state.binary_search(p).is_ok()) {
            continue;
        }
        assert!(action.add.iter().all(|a| action.del.binary_search(a).is_err()));
        // Un-apply inverts apply only for effective actions; degenerate
        // instantiations like move(a, a) re-add an atom that already holds.
        let effective = action.add.iter().all(|a| state.binary_search(a).is_err())
            && action.del.iter().all(|d| state.binary_search(d).is_ok());
        if !effective {
            continue;
        }
        // apply
        let mut next: Vec<AtomIdx> = state
            .iter()
            .copied()
            .filter(|i| action.del.binary_search(i).is_err())
            .collect();
        for &a in &action.add {
            if next.binary_search(&a).is_err() {
                next.insert(next.binary_search(&a).unwrap_err(), a);
            }
        }
        // un-apply: delete the adds, add the deletes
        let mut back: Vec<AtomIdx> = next
            .iter()
            .copied()
            .filter(|i| action.add.binary_search(i).is_err())
            .collect();
        for &d in &action.del {
            if back.binary_search(&d).is_err() {
                back.insert(back.binary_search(&d).unwrap_err(), d);
            }
        }
        assert_eq!(&back, state, "action {}", problem.action_name(action));
    }
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn grounding_count_matches_closed_form(arity in 0usize..=3, objects in 1usize..=4) {
            let params: Vec<String> = (0..arity).map(|i| format!("?x{i}")).collect();
            let domain_text = format!(
                "(define (domain counts) (:predicates (p {})) (:action nop :parameters (?y) :precondition (and) :effect (and)))",
                params.join(" ")
            );
            let object_names: Vec<String> = (0..objects).map(|i| format!("o{i}")).collect();
            let goal_args: Vec<String> = (0..arity).map(|_| "o0".to_string()).collect();
            let goal = if arity == 0 { "(p)".to_string() } else { format!("(p {})", goal_args.join(" ")) };
            let instance_text = format!(
                "(define (problem c) (:domain counts) (:objects {}) (:init) (:goal {goal}))",
                object_names.join(" ")
            );
            let problem = grounded(&domain_text, &instance_text);
            let p = problem.domain.lookup_predicate("p").unwrap();
            let count = problem.atoms.iter().filter(|a| a.predicate == p).count();
            prop_assert_eq!(count, objects.pow(arity as u32));
        }

        #[test]
        fn ground_actions_have_disjoint_add_delete(balls in 1usize..=3) {
            let problem = grounded(
                crate::fixtures::GRIPPER_DOMAIN,
                &crate::fixtures::gripper_instance(balls, balls, false),
            );
            for action in &problem.actions {
                for a in &action.add {
                    prop_assert!(action.del.binary_search(a).is_err());
                }
            }
        }
    }
}
