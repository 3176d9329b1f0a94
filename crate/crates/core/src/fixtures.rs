//! Bundled benchmark domains and desk-scale instance generators.
//!
//! Every generator returns instance text; the domains are shipped verbatim.
//! Instances are deliberately small enough for exhaustive state-space
//! expansion, which is what the exact evaluation oracles require.

pub const GRIPPER_DOMAIN: &str = include_str!("../fixtures/gripper.pddl");
pub const BLOCKS_DOMAIN: &str = include_str!("../fixtures/blocks.pddl");
pub const DELIVERY_DOMAIN: &str = include_str!("../fixtures/delivery.pddl");
pub const SPANNER_DOMAIN: &str = include_str!("../fixtures/spanner.pddl");
pub const VISITALL_DOMAIN: &str = include_str!("../fixtures/visitall.pddl");
pub const LOGISTICS_DOMAIN: &str = include_str!("../fixtures/logistics.pddl");
pub const LOGISTICS_DERIVED: &str = include_str!("../fixtures/logistics.derived");

/// Synthetic corridor domain used by tests and self-checks.
pub const CHAIN_DOMAIN: &str = "\
(define (domain chain)
  (:requirements :strips)
  (:predicates (at ?x) (adj ?x ?y))
  (:action step
    :parameters (?x ?y)
    :precondition (and (at ?x) (adj ?x ?y))
    :effect (and (at ?y) (not (at ?x))))
)
";

/// A linear corridor with `nodes` positions; start at the first, goal at the
/// last. The reachable state space has exactly `nodes` states.
pub fn chain_instance(nodes: usize) -> String {
    assert!(nodes >= 2);
    let mut objects = String::new();
    let mut adj = String::new();
    for i in 0..nodes {
        objects.push_str(&format!(" n{i}"));
        if i + 1 < nodes {
            adj.push_str(&format!(" (adj n{i} n{})", i + 1));
        }
    }
    format!(
        "(define (problem chain-{nodes})\n  (:domain chain)\n  (:objects{objects})\n  (:init (at n0){adj})\n  (:goal (and (at n{})))\n)\n",
        nodes - 1
    )
}

/// Gripper instance: `balls` balls start in room A and must reach room B
/// (only the first `goal_balls` are in the goal). The robot starts in room B
/// when `robot_in_b` is set.
pub fn gripper_instance(balls: usize, goal_balls: usize, robot_in_b: bool) -> String {
    assert!(balls >= 1 && goal_balls >= 1 && goal_balls <= balls);
    let mut objects = String::from(" rooma roomb left right");
    let mut init = String::from(
        "(room rooma) (room roomb) (gripper left) (gripper right) (free left) (free right)",
    );
    init.push_str(if robot_in_b { " (at-robby roomb)" } else { " (at-robby rooma)" });
    let mut goal = String::new();
    for b in 1..=balls {
        objects.push_str(&format!(" ball{b}"));
        init.push_str(&format!(" (ball ball{b}) (at ball{b} rooma)"));
        if b <= goal_balls {
            goal.push_str(&format!(" (at ball{b} roomb)"));
        }
    }
    let tag = if robot_in_b { "b" } else { "a" };
    format!(
        "(define (problem gripper-{balls}-{goal_balls}{tag})\n  (:domain gripper)\n  (:objects{objects})\n  (:init {init})\n  (:goal (and{goal}))\n)\n"
    )
}

/// Blocksworld instance: `blocks` blocks start flat on the table and must be
/// assembled into the given number of towers.
pub fn blocks_instance(blocks: usize, towers: usize) -> String {
    assert!(blocks >= 2 && towers >= 1 && towers <= blocks);
    let mut objects = String::new();
    let mut init = String::from("(handempty)");
    for b in 1..=blocks {
        objects.push_str(&format!(" b{b}"));
        init.push_str(&format!(" (ontable b{b}) (clear b{b})"));
    }
    // Deal blocks round-robin: tower k stacks b_k on b_{k+towers} on ...
    let mut goal = String::new();
    for b in 1..=blocks {
        if b + towers <= blocks {
            goal.push_str(&format!(" (on b{b} b{})", b + towers));
        }
    }
    format!(
        "(define (problem blocks-{blocks}-{towers})\n  (:domain blocksworld)\n  (:objects{objects})\n  (:init {init})\n  (:goal (and{goal}))\n)\n"
    )
}

/// Delivery instance on a `width` x `height` grid with `packages` packages,
/// all starting in distinct cells and all wanted at the top-left cell.
pub fn delivery_instance(width: usize, height: usize, packages: usize) -> String {
    assert!(width >= 1 && height >= 1 && packages >= 1);
    assert!(packages < width * height, "need a free cell per package");
    let cell = |x: usize, y: usize| format!("c{x}-{y}");
    let mut objects = String::new();
    let mut init = String::from("(empty)");
    for y in 0..height {
        for x in 0..width {
            objects.push_str(&format!(" {} - cell", cell(x, y)));
            if x + 1 < width {
                init.push_str(&format!(" (adjacent {} {})", cell(x, y), cell(x + 1, y)));
                init.push_str(&format!(" (adjacent {} {})", cell(x + 1, y), cell(x, y)));
            }
            if y + 1 < height {
                init.push_str(&format!(" (adjacent {} {})", cell(x, y), cell(x, y + 1)));
                init.push_str(&format!(" (adjacent {} {})", cell(x, y + 1), cell(x, y)));
            }
        }
    }
    init.push_str(&format!(" (at-robot {})", cell(0, 0)));
    let mut goal = String::new();
    for p in 1..=packages {
        objects.push_str(&format!(" p{p} - package"));
        // Spread packages from the last cell backwards.
        let flat = width * height - p;
        let (x, y) = (flat % width, flat / width);
        init.push_str(&format!(" (at p{p} {})", cell(x, y)));
        goal.push_str(&format!(" (at p{p} {})", cell(0, 0)));
    }
    format!(
        "(define (problem delivery-{width}x{height}-{packages})\n  (:domain delivery)\n  (:objects{objects})\n  (:init {init})\n  (:goal (and{goal}))\n)\n"
    )
}

/// Spanner instance: a one-way corridor of `locations` waypoints from shed to
/// gate, with `spanners` spanners on the way and `nuts` loose nuts at the
/// gate. Dead ends arise from walking past a spanner that is still needed.
pub fn spanner_instance(locations: usize, spanners: usize, nuts: usize) -> String {
    assert!(locations >= 1 && spanners >= nuts && nuts >= 1);
    let mut objects = String::from(" bob - man");
    let mut init = String::from("(at bob shed)");
    for s in 1..=spanners {
        objects.push_str(&format!(" spanner{s} - spanner"));
        // Distribute spanners along the corridor.
        let loc = 1 + (s - 1) % locations;
        init.push_str(&format!(" (at spanner{s} location{loc}) (useable spanner{s})"));
    }
    let mut goal = String::new();
    for n in 1..=nuts {
        objects.push_str(&format!(" nut{n} - nut"));
        init.push_str(&format!(" (at nut{n} gate) (loose nut{n})"));
        goal.push_str(&format!(" (tightened nut{n})"));
    }
    objects.push_str(" shed gate");
    for l in 1..=locations {
        objects.push_str(&format!(" location{l}"));
    }
    objects.push_str(" - location");
    init.push_str(" (link shed location1)");
    for l in 1..locations {
        init.push_str(&format!(" (link location{l} location{})", l + 1));
    }
    init.push_str(&format!(" (link location{locations} gate)"));
    format!(
        "(define (problem spanner-{locations}-{spanners}-{nuts})\n  (:domain spanner)\n  (:objects{objects})\n  (:init {init})\n  (:goal (and{goal}))\n)\n"
    )
}

/// Visitall instance: visit every cell of a `width` x `height` grid starting
/// from the top-left corner.
pub fn visitall_instance(width: usize, height: usize) -> String {
    assert!(width >= 1 && height >= 1 && width * height >= 2);
    let cell = |x: usize, y: usize| format!("c{x}-{y}");
    let mut objects = String::new();
    let mut init = String::new();
    let mut goal = String::new();
    for y in 0..height {
        for x in 0..width {
            objects.push_str(&format!(" {}", cell(x, y)));
            if x + 1 < width {
                init.push_str(&format!(" (connected {} {})", cell(x, y), cell(x + 1, y)));
                init.push_str(&format!(" (connected {} {})", cell(x + 1, y), cell(x, y)));
            }
            if y + 1 < height {
                init.push_str(&format!(" (connected {} {})", cell(x, y), cell(x, y + 1)));
                init.push_str(&format!(" (connected {} {})", cell(x, y + 1), cell(x, y)));
            }
            goal.push_str(&format!(" (visited {})", cell(x, y)));
        }
    }
    init.push_str(&format!(" (at-robot {}) (visited {})", cell(0, 0), cell(0, 0)));
    format!(
        "(define (problem visitall-{width}x{height})\n  (:domain visitall)\n  (:objects{objects})\n  (:init{init})\n  (:goal (and{goal}))\n)\n"
    )
}

/// Logistics instance: `cities` cities with two locations each (the first is
/// the airport), one truck per city, one airplane, and `packages` packages
/// that must move from the non-airport location of city 1 to the non-airport
/// location of the last city.
pub fn logistics_instance(cities: usize, packages: usize) -> String {
    assert!(cities >= 1 && packages >= 1);
    let mut objects = String::new();
    let mut init = String::from("(airplane plane1) (at plane1 city1-airport)");
    objects.push_str(" plane1");
    for c in 1..=cities {
        objects.push_str(&format!(" city{c} city{c}-airport city{c}-depot truck{c}"));
        init.push_str(&format!(
            " (city city{c}) (airport city{c}-airport) (location city{c}-airport) (location city{c}-depot) \
             (in-city city{c}-airport city{c}) (in-city city{c}-depot city{c}) \
             (truck truck{c}) (at truck{c} city{c}-depot)"
        ));
    }
    let mut goal = String::new();
    let dest = format!("city{cities}-depot");
    for p in 1..=packages {
        objects.push_str(&format!(" pkg{p}"));
        init.push_str(&format!(" (obj pkg{p}) (at pkg{p} city1-depot)"));
        goal.push_str(&format!(" (at pkg{p} {dest})"));
    }
    format!(
        "(define (problem logistics-{cities}-{packages})\n  (:domain logistics)\n  (:objects{objects})\n  (:init {init})\n  (:goal (and{goal}))\n)\n"
    )
}

/// Name, domain text, and derived-definition text (when shipped) for every
/// bundled domain.
pub fn bundled_domains() -> Vec<(&'static str, &'static str, Option<&'static str>)> {
    vec![
        ("gripper", GRIPPER_DOMAIN, None),
        ("blocks", BLOCKS_DOMAIN, None),
        ("delivery", DELIVERY_DOMAIN, None),
        ("spanner", SPANNER_DOMAIN, None),
        ("visitall", VISITALL_DOMAIN, None),
        ("logistics", LOGISTICS_DOMAIN, Some(LOGISTICS_DERIVED)),
        ("chain", CHAIN_DOMAIN, None),
    ]
}

/// Desk-scale instance set for a bundled domain, as (name, text) pairs.
pub fn bundled_instances(domain: &str) -> Vec<(String, String)> {
    match domain {
        "gripper" => (1..=4)
            .map(|n| (format!("gripper-{n}"), gripper_instance(n, n, false)))
            .collect(),
        "blocks" => vec![
            ("blocks-2".into(), blocks_instance(2, 1)),
            ("blocks-3".into(), blocks_instance(3, 1)),
            ("blocks-4".into(), blocks_instance(4, 1)),
            ("blocks-4-2".into(), blocks_instance(4, 2)),
            ("blocks-5".into(), blocks_instance(5, 1)),
        ],
        "delivery" => vec![
            ("delivery-2x2-1".into(), delivery_instance(2, 2, 1)),
            ("delivery-3x2-1".into(), delivery_instance(3, 2, 1)),
            ("delivery-3x3-2".into(), delivery_instance(3, 3, 2)),
        ],
        "spanner" => vec![
            ("spanner-2-1-1".into(), spanner_instance(2, 1, 1)),
            ("spanner-3-2-1".into(), spanner_instance(3, 2, 1)),
            ("spanner-3-2-2".into(), spanner_instance(3, 2, 2)),
        ],
        "visitall" => vec![
            ("visitall-2x2".into(), visitall_instance(2, 2)),
            ("visitall-3x2".into(), visitall_instance(3, 2)),
            ("visitall-3x3".into(), visitall_instance(3, 3)),
        ],
        "logistics" => vec![
            ("logistics-1-1".into(), logistics_instance(1, 1)),
            ("logistics-2-1".into(), logistics_instance(2, 1)),
            ("logistics-2-2".into(), logistics_instance(2, 2)),
        ],
        "chain" => (2..=5).map(|n| (format!("chain-{n}"), chain_instance(n))).collect(),
        _ => Vec::new(),
    }
}
