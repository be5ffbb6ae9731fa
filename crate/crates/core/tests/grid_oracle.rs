use carchase::grid::{
    grid_base_h, grid_cbs_solve, grid_relevance, is_relevant, CachedGridHeuristic, Cell, GridAgent, GridCbsConfig,
    GridConstraint, GridConstraintKind, GridInstance, GridMap, GridState,
};
use carchase_oracles::grid::{constrained_distance, enumerate_distance, Forbid, Grid};
use carchase_oracles::joint::joint_optimal;
use proptest::prelude::*;

fn oracle_grid(map: &GridMap) -> Grid {
    Grid {
        width: map.width,
        height: map.height,
        blocked: map.obstacles().iter().map(|c| (c.row, c.col)).collect(),
    }
}

fn forbids(cs: &[GridConstraint]) -> Vec<Forbid> {
    cs.iter()
        .map(|c| match c.kind {
            GridConstraintKind::Vertex(v) => Forbid::Vertex((v.row, v.col), c.time),
            GridConstraintKind::Edge(a, b) => Forbid::Edge((a.row, a.col), (b.row, b.col), c.time),
        })
        .collect()
}

fn oracle_h(map: &GridMap, s: &GridState, g: &Cell, cs: &[GridConstraint]) -> f64 {
    constrained_distance(&oracle_grid(map), (s.cell.row, s.cell.col), s.time, (g.row, g.col), &forbids(cs))
        .map_or(f64::INFINITY, f64::from)
}

/// A random query on a small map: (map, state, goal, constraints).
fn query(max_side: i32, max_constraints: usize) -> impl Strategy<Value = (GridMap, GridState, Cell, Vec<GridConstraint>)> {
    (2..=max_side, 2..=max_side).prop_flat_map(move |(w, h)| {
        let cell = move || (0..h, 0..w).prop_map(|(r, c)| Cell::new(r, c));
        let constraint = (cell(), 0..4usize, 0u32..12).prop_map(|(c, dir, t)| (c, dir, t));
        (
            prop::collection::vec(cell(), 0..=(w * h / 4) as usize),
            cell(),
            0u32..4,
            cell(),
            prop::collection::vec(constraint, 0..=max_constraints),
        )
            .prop_filter_map("start or goal blocked", move |(obs, s, t0, g, raw)| {
                let map = GridMap::new(w, h, &obs);
                if !map.is_free(&s) || !map.is_free(&g) {
                    return None;
                }
                let cs = raw
                    .into_iter()
                    .enumerate()
                    .map(|(i, (c, dir, t))| {
                        let kind = if dir == 0 || t == 0 {
                            GridConstraintKind::Vertex(c)
                        } else {
                            GridConstraintKind::Edge(c, c.moves()[dir])
                        };
                        GridConstraint {
                            id: i as u32,
                            agent: 0,
                            kind,
                            time: t,
                        }
                    })
                    .collect();
                Some((map, GridState::new(s, t0), g, cs))
            })
    })
}

#[test]
fn wait_example_agrees_with_enumeration() {
    let map = GridMap::new(5, 5, &[]);
    let c = GridConstraint {
        id: 0,
        agent: 0,
        kind: GridConstraintKind::Vertex(Cell::new(0, 2)),
        time: 2,
    };
    let h = grid_base_h(&map, &GridState::new(Cell::new(0, 0), 0), &Cell::new(0, 4), &[c]);
    let brute = enumerate_distance(&oracle_grid(&map), (0, 0), 0, (0, 4), &forbids(&[c]), 8);
    assert_eq!(h, 5.0);
    assert_eq!(brute, Some(5));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn base_h_is_the_constrained_distance((map, s, g, cs) in query(6, 6)) {
        prop_assert_eq!(grid_base_h(&map, &s, &g, &cs), oracle_h(&map, &s, &g, &cs));
    }

    #[test]
    fn cached_h_never_overestimates((map, s, g, cs) in query(6, 6), warm in query(6, 6)) {
        let mut h = CachedGridHeuristic::new(Some(64));
        // warm the cache with an unrelated query on the same map shape
        // an agent has one goal, so index agents by goal cell
        let agent = |c: &Cell| (c.row * map.width + c.col) as usize;
        if warm.0 == map {
            h.h(&map, agent(&warm.2), &warm.1, &warm.2, &warm.3);
        }
        h.h(&map, agent(&g), &s, &g, &cs[..cs.len() / 2]);
        prop_assert!(h.h(&map, agent(&g), &s, &g, &cs) <= oracle_h(&map, &s, &g, &cs));
    }

    #[test]
    fn cost_affecting_constraints_are_in_the_fingerprint((map, s, g, cs) in query(6, 6)) {
        let fp = grid_relevance(&s, &g, &cs);
        let full = oracle_h(&map, &s, &g, &cs);
        for (i, c) in cs.iter().enumerate() {
            let mut rest = cs.clone();
            rest.remove(i);
            if oracle_h(&map, &s, &g, &rest) != full {
                prop_assert!(fp.contains(c.id), "constraint {:?} matters but was filtered", c);
            }
        }
    }

    #[test]
    fn equal_fingerprints_give_equal_values((map, s, g, cs) in query(6, 8)) {
        let kept: Vec<_> = cs.iter().copied().filter(|c| is_relevant(&s, c)).collect();
        prop_assert_eq!(grid_relevance(&s, &g, &kept), grid_relevance(&s, &g, &cs));
        prop_assert_eq!(grid_base_h(&map, &s, &g, &kept), grid_base_h(&map, &s, &g, &cs));
    }
}

fn instance() -> impl Strategy<Value = GridInstance> {
    (2..=6i32, 2..=6i32, 1..=3usize).prop_flat_map(|(w, h, n)| {
        let cell = move || (0..h, 0..w).prop_map(|(r, c)| Cell::new(r, c));
        (
            prop::collection::vec(cell(), 0..=(w * h / 5) as usize),
            prop::collection::vec((cell(), cell()), n),
        )
            .prop_filter_map("invalid placement", move |(obs, pairs)| {
                let map = GridMap::new(w, h, &obs);
                let ok = pairs.iter().all(|(s, g)| map.is_free(s) && map.is_free(g))
                    && (0..pairs.len()).all(|i| {
                        (i + 1..pairs.len()).all(|j| pairs[i].0 != pairs[j].0 && pairs[i].1 != pairs[j].1)
                    });
                ok.then(|| GridInstance {
                    map,
                    agents: pairs.into_iter().map(|(start, goal)| GridAgent { start, goal }).collect(),
                })
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn cbs_matches_joint_search(inst in instance()) {
        let grid = oracle_grid(&inst.map);
        let starts: Vec<_> = inst.agents.iter().map(|a| (a.start.row, a.start.col)).collect();
        let goals: Vec<_> = inst.agents.iter().map(|a| (a.goal.row, a.goal.col)).collect();
        let expected = joint_optimal(&grid, &starts, &goals);
        let cfg = GridCbsConfig { max_nodes: 20_000, ..GridCbsConfig::default() };
        let report = grid_cbs_solve(&inst, &cfg);
        match expected {
            Some(cost) => prop_assert_eq!(report.result.map(|s| s.cost), Ok(cost)),
            None => prop_assert!(report.result.is_err()),
        }
    }
}

#[test]
fn swap_on_two_by_three() {
    let inst = GridInstance {
        map: GridMap::new(3, 2, &[]),
        agents: vec![
            GridAgent {
                start: Cell::new(0, 0),
                goal: Cell::new(0, 2),
            },
            GridAgent {
                start: Cell::new(0, 2),
                goal: Cell::new(0, 0),
            },
        ],
    };
    let expected = joint_optimal(&oracle_grid(&inst.map), &[(0, 0), (0, 2)], &[(0, 2), (0, 0)]).unwrap();
    let got = grid_cbs_solve(&inst, &GridCbsConfig::default()).result.unwrap().cost;
    assert_eq!(got, expected);
}
