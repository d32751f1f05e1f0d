//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantity. Every tolerance is zero (exact arithmetic) except
//! the numeric competitive-equilibrium path, whose result is reconstructed
//! and re-verified exactly before use.
//!
//! Criteria:
//!  1. solver stability on 1,000 random instances, event budgets respected
//!  2. LP and augmenting-path revenue optimizers agree on 500 instances;
//!     every intermediate allocation compatible; item inflows monotone
//!  3. three-item market: exact CE, maximin certified at two pricings with
//!     the four witness cases, refuted when ownership moves
//!  4. any two stable allocations within a revenue factor of 2; the tight
//!     pair achieves exactly 2
//!  5. repricing-plus-priority deviation guarantees 8/3 > 2
//!  6. best responses certified above 2 on the 36-point price grid
//!  7. strict instances: the oracle census is a single allocation matching
//!     the solver on 200 instances
//!  8. duopoly: the balanced region passes the grid Nash check, the
//!     unbalanced points fail, the crossing profile passes at the corner,
//!     and the closed form matches the oracle in regime
//!  9. gadget oracles: exhaustive 3SAT-3 and bipartite classes
//! 10. budget-depletion deviation gains exactly half the slack; single-item
//!     raises move optimal revenue by at most the raise

use num_traits::{One, Signed, Zero};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use pricecomp::duopoly::{
    default_report_grid, deviation_revenue_closed_form, deviation_revenue_formula, duopoly_outcome,
    is_nash_on_grid, st_family_market, DuopolyProfile, NashVerdict,
};
use pricecomp::equilibrium::{
    competitive_equilibrium, default_deviation_factors, seller_min_revenue, table1_best_response,
    verify_ce, verify_maximin, DeviationEvidence, MaximinOutcome, CE_DEFAULT_TOLERANCE,
};
use pricecomp::gadgets::{
    matching_gadget_build, max3sat_optimum, maximal_matching_sizes, min_maximal_matching,
    sat_gadget_build, sat_gadget_max_revenue, BipartiteGraph, CnfInstance, SatVariant,
};
use pricecomp::gen::{
    random_instance, random_strict_instance, random_under_spending_instance, rng_from_env,
};
use pricecomp::market::{
    revenue, Allocation, Buyer, Item, Market, PricingMode, PricingProfile, PriorityProfile, Seller,
};
use pricecomp::oracle::{self, stable_set_extrema};
use pricecomp::rational::{int, rat, Rational};
use pricecomp::revenue::{budget_depletion_deviation, max_revenue_lp, stable_edmonds_karp};
use pricecomp::stability::{
    fractional_gale_shapley, fractional_gale_shapley_traced, is_compatible, is_stable, Scene,
    SolveOptions,
};

fn three_item_market() -> Market {
    Market::new(
        vec![
            Buyer {
                id: "b1".into(),
                budget: int(2),
            },
            Buyer {
                id: "b2".into(),
                budget: int(2),
            },
        ],
        vec![Seller { id: "s1".into() }, Seller { id: "s2".into() }],
        vec![
            Item {
                id: "g1".into(),
                seller: 0,
            },
            Item {
                id: "g2".into(),
                seller: 1,
            },
            Item {
                id: "g3".into(),
                seller: 1,
            },
        ],
        vec![
            vec![int(2), int(1), int(0)],
            vec![rat(1, 3), int(1), int(1)],
        ],
    )
    .unwrap()
}

#[test]
fn criterion_01_solver_always_stable() {
    let mut rng = rng_from_env();
    let mut cycles = 0usize;
    for round in 0..1000 {
        let mode = if round % 2 == 0 {
            PricingMode::Uniform
        } else {
            PricingMode::Personalized
        };
        let inst = random_instance(&mut rng, 5, 6, mode);
        let scene = Scene::new(&inst.market, &inst.pricing, &inst.priorities);
        let opts = SolveOptions {
            check_each_round: round % 10 == 0,
        };
        let (alloc, stats) = fractional_gale_shapley_traced(&scene, opts)
            .unwrap_or_else(|e| panic!("round {round}: solver failed: {e}"));
        cycles += stats.cycles_resolved;
        let report = is_stable(&scene, &alloc).unwrap_or_else(|e| panic!("round {round}: {e}"));
        assert!(report.stable, "round {round}: unstable output");
    }
    println!("criterion 1: PASS - 1000/1000 stable, {cycles} proposal cycles resolved, budgets respected");
}

#[test]
fn criterion_01_engineered_cycles() {
    // Budget-term binding: the epsilon pricing of the symmetric market.
    let market = pricecomp::equilibrium::symmetric_two_item_market();
    let pricing = PricingProfile::personalized(
        &market,
        vec![vec![rat(1, 10), int(2)], vec![int(10), int(1)]],
    )
    .unwrap();
    let priorities = pricecomp::market::natural_priority(&market, &pricing);
    let scene = Scene::new(&market, &pricing, &priorities);
    let (alloc, stats) = fractional_gale_shapley_traced(
        &scene,
        SolveOptions {
            check_each_round: true,
        },
    )
    .unwrap();
    assert!(stats
        .cycle_bindings
        .contains(&pricecomp::stability::CycleBinding::Budget));
    assert!(is_stable(&scene, &alloc).unwrap().stable);

    // Holding-term binding: three buyers chase three items around a loop in
    // which every refund doubles, so the initiator's budget never runs out
    // and some holding must hit zero instead.
    let d = rat(1, 200);
    let market = Market::new(
        vec![
            Buyer {
                id: "a".into(),
                budget: int(2) + d,
            },
            Buyer {
                id: "b".into(),
                budget: int(2),
            },
            Buyer {
                id: "c".into(),
                budget: int(2),
            },
        ],
        vec![Seller { id: "s".into() }],
        vec![
            Item {
                id: "x".into(),
                seller: 0,
            },
            Item {
                id: "y".into(),
                seller: 0,
            },
            Item {
                id: "z".into(),
                seller: 0,
            },
        ],
        vec![
            vec![int(1), int(0), int(4)],
            vec![int(6), int(1), int(0)],
            vec![int(0), int(6), int(1)],
        ],
    )
    .unwrap();
    let pricing = PricingProfile::personalized(
        &market,
        vec![
            vec![int(1), int(1), int(2)],
            vec![int(2), int(1), int(1)],
            vec![int(1), int(2), int(1)],
        ],
    )
    .unwrap();
    let priorities = PriorityProfile {
        ranks: vec![vec![0, 1, 2], vec![2, 0, 1], vec![1, 2, 0]],
    };
    let scene = Scene::new(&market, &pricing, &priorities);
    let (alloc, stats) = fractional_gale_shapley_traced(
        &scene,
        SolveOptions {
            check_each_round: true,
        },
    )
    .unwrap();
    assert!(
        stats
            .cycle_bindings
            .contains(&pricecomp::stability::CycleBinding::Holding),
        "bindings: {:?}",
        stats.cycle_bindings
    );
    assert!(is_stable(&scene, &alloc).unwrap().stable);
    // the churn settles on the clean assignment
    assert_eq!(alloc.x[0][0], int(1));
    assert_eq!(alloc.x[1][1], int(1));
    assert_eq!(alloc.x[2][2], int(1));
    println!("criterion 1 (cycles): PASS - both cycle resolutions exercised");
}

#[test]
fn criterion_02_lp_flow_equivalence() {
    let mut rng = rng_from_env();
    for round in 0..500 {
        let inst = random_instance(&mut rng, 4, 5, PricingMode::Uniform);
        let (_, lp_revenue) = max_revenue_lp(&inst.market, &inst.pricing)
            .unwrap_or_else(|e| panic!("round {round}: {e}"));
        let start = Allocation::zeros(&inst.market);
        let run = stable_edmonds_karp(&inst.market, &inst.pricing, &start)
            .unwrap_or_else(|e| panic!("round {round}: {e}"));
        assert_eq!(run.revenue, lp_revenue, "round {round}: revenues differ");

        let tied = PriorityProfile::all_tied(&inst.market);
        let scene = Scene::new(&inst.market, &inst.pricing, &tied);
        let mut prev_totals: Vec<Rational> = (0..inst.market.num_items())
            .map(|_| Rational::zero())
            .collect();
        for (step, alloc) in run.intermediates.iter().enumerate() {
            assert!(
                is_compatible(&scene, alloc).0,
                "round {round} step {step}: incompatible intermediate"
            );
            for j in 0..inst.market.num_items() {
                let total = alloc.item_total(j);
                assert!(
                    total >= prev_totals[j],
                    "round {round} step {step}: inflow of item {j} decreased"
                );
                prev_totals[j] = total;
            }
        }
        // covering holds from compatible starts built by shrinking budgets
        if round % 25 == 0 {
            let factor = rat((round as i64 % 3) + 1, 4);
            let mut smaller = inst.market.clone();
            for b in smaller.buyers.iter_mut() {
                b.budget *= factor.clone();
            }
            let sc = Scene::new(&smaller, &inst.pricing, &tied);
            let compatible_start = fractional_gale_shapley(&sc).unwrap();
            let run2 = stable_edmonds_karp(&inst.market, &inst.pricing, &compatible_start)
                .unwrap_or_else(|e| panic!("round {round}: {e}"));
            for j in 0..inst.market.num_items() {
                assert!(run2.allocation.item_total(j) >= compatible_start.item_total(j));
            }
            assert_eq!(run2.revenue, lp_revenue);
        }
    }
    println!("criterion 2: PASS - 500/500 exact LP/flow agreement with compatible, monotone intermediates");
}

#[test]
fn criterion_03_three_item_market_reproduction() {
    let market = three_item_market();
    // exact competitive equilibrium
    let ce = competitive_equilibrium(&market, CE_DEFAULT_TOLERANCE).unwrap();
    assert!(ce.exact);
    assert_eq!(ce.prices, vec![int(2), int(1), int(1)]);
    assert_eq!(ce.allocation.x[0][0], int(1));
    assert_eq!(ce.allocation.x[1][1], int(1));
    assert_eq!(ce.allocation.x[1][2], int(1));
    assert!(verify_ce(&market, &ce.prices, &ce.allocation).0);

    // maximin certified at the equilibrium prices
    let pricing = PricingProfile::uniform(&market, ce.prices.clone()).unwrap();
    let verdict = verify_maximin(
        &market,
        &pricing,
        &ce.allocation,
        &default_deviation_factors(),
        &[],
    )
    .unwrap();
    assert_eq!(verdict.outcome, MaximinOutcome::Certified);

    // maximin certified at the alternative pricing, with the four witness
    // classes reproduced in the evidence
    let alt = PricingProfile::uniform(&market, vec![rat(4, 3), rat(2, 3), int(2)]).unwrap();
    let mut unique = Allocation::zeros(&market);
    unique.x[0][0] = int(1);
    unique.x[0][1] = int(1);
    unique.x[1][2] = int(1);
    let verdict =
        verify_maximin(&market, &alt, &unique, &default_deviation_factors(), &[]).unwrap();
    assert_eq!(verdict.outcome, MaximinOutcome::Certified);
    let witness_of = |pred: &dyn Fn(&[Rational]) -> bool, seller: usize| {
        verdict
            .reports
            .iter()
            .find(|r| r.seller == seller && pred(&r.prices))
            .unwrap_or_else(|| panic!("no deviation report matched"))
    };
    // seller 2 raises p2 (p3 kept): the bare item-1 sale certifies it
    let raise2 = witness_of(&|p| p[1] > rat(2, 3) && p[2] == int(2), 1);
    match raise2.evidence.as_ref().unwrap() {
        DeviationEvidence::Witness { allocation, .. } => {
            assert_eq!(allocation.x[0][0], int(1));
            assert!(allocation.x[0][1].is_zero() && allocation.x[1][2].is_zero());
        }
        other => panic!("expected a witness, got {other:?}"),
    }
    // seller 2 keeps p2 and moves p3: buyer 1 holding items 1 and 2
    // certifies it (p3 plays no role)
    let lower2 = witness_of(&|p| p[1] == rat(2, 3) && p[2] > int(2), 1);
    match lower2.evidence.as_ref().unwrap() {
        DeviationEvidence::Witness { allocation, .. } => {
            assert_eq!(allocation.x[0][0], int(1));
            assert_eq!(allocation.x[0][1], int(1));
        }
        other => panic!("expected a witness, got {other:?}"),
    }
    // seller 1 raises p1: items 2 and 3 absorb both budgets
    let raise1 = witness_of(&|p| p[0] > rat(4, 3), 0);
    match raise1.evidence.as_ref().unwrap() {
        DeviationEvidence::Witness { allocation, .. } => {
            assert_eq!(allocation.x[0][1], int(1));
            assert_eq!(allocation.x[1][2], int(1));
            assert!(allocation.x[0][0].is_zero());
        }
        other => panic!("expected a witness, got {other:?}"),
    }
    // seller 1 lowers p1: it cannot even gross its current revenue
    let lower1 = witness_of(&|p| p[0] < rat(4, 3), 0);
    assert!(matches!(
        lower1.evidence.as_ref().unwrap(),
        DeviationEvidence::PriceCap
    ));

    // ownership moved: the same pricing is refuted
    let mut moved = market.clone();
    moved.items[2].seller = 0;
    let verdict = verify_maximin(&moved, &alt, &unique, &default_deviation_factors(), &[]).unwrap();
    assert_eq!(verdict.outcome, MaximinOutcome::Refuted);
    println!("criterion 3: PASS - CE (2,1,1) exact; certified twice with the four witness classes; refuted after the ownership move");
}

#[test]
fn criterion_04_two_approximation() {
    // The factor-2 bound is a natural-priority fact: its exchange argument
    // turns a strictly higher price into a strict displacement right, which
    // an arbitrary preorder can refuse (see the companion test below for a
    // sharp counterexample). The suite therefore draws prices at random and
    // ranks buyers by them.
    let mut rng = rng_from_env();
    let mut checked = 0usize;
    for _ in 0..150 {
        let inst = random_instance(&mut rng, 4, 5, PricingMode::Personalized);
        let natural = pricecomp::market::natural_priority(&inst.market, &inst.pricing);
        let scene = Scene::new(&inst.market, &inst.pricing, &natural);
        let summary = stable_set_extrema(&scene).unwrap();
        assert!(
            summary.revenue_max <= summary.revenue_min.clone() * int(2),
            "ratio above 2 on a random natural-priority instance"
        );
        checked += 1;
    }
    // the tight pair achieves the factor exactly
    let market = Market::new(
        vec![
            Buyer {
                id: "b1".into(),
                budget: int(1),
            },
            Buyer {
                id: "b2".into(),
                budget: int(1),
            },
        ],
        vec![Seller { id: "s".into() }],
        vec![
            Item {
                id: "g1".into(),
                seller: 0,
            },
            Item {
                id: "g2".into(),
                seller: 0,
            },
        ],
        vec![vec![int(1), int(1)], vec![int(1), int(0)]],
    )
    .unwrap();
    let pricing =
        PricingProfile::personalized(&market, vec![vec![int(1), int(1)], vec![int(1), int(0)]])
            .unwrap();
    let priorities = pricecomp::market::natural_priority(&market, &pricing);
    let scene = Scene::new(&market, &pricing, &priorities);
    let summary = stable_set_extrema(&scene).unwrap();
    assert_eq!(summary.revenue_min, int(1));
    assert_eq!(summary.revenue_max, int(2));
    println!(
        "criterion 4: PASS - factor <= 2 on {} oracle instances; tight pair hits exactly 2",
        checked + 1
    );
}

/// Boundary of the factor-2 bound: with a non-natural priority the gap can
/// exceed 2. Buyer 1 pays the most for item 2 yet ranks last on it, so the
/// cheap sales to buyers 2 and 4 are also stable.
#[test]
fn criterion_04_bound_needs_natural_priorities() {
    let market = Market::new(
        vec![
            Buyer {
                id: "b1".into(),
                budget: int(2),
            },
            Buyer {
                id: "b2".into(),
                budget: int(2),
            },
            Buyer {
                id: "b3".into(),
                budget: int(3),
            },
            Buyer {
                id: "b4".into(),
                budget: int(3),
            },
        ],
        vec![Seller { id: "s".into() }],
        vec![
            Item {
                id: "g1".into(),
                seller: 0,
            },
            Item {
                id: "g2".into(),
                seller: 0,
            },
        ],
        vec![
            vec![int(3), int(3)],
            vec![int(3), rat(1, 3)],
            vec![int(1), int(2)],
            vec![int(2), int(1)],
        ],
    )
    .unwrap();
    let pricing = PricingProfile::personalized(
        &market,
        vec![
            vec![rat(1, 2), int(3)],
            vec![int(2), rat(1, 2)],
            vec![int(3), rat(1, 3)],
            vec![rat(1, 3), int(1)],
        ],
    )
    .unwrap();
    let priorities = PriorityProfile {
        ranks: vec![vec![0, 0, 0, 0], vec![2, 0, 1, 1]],
    };
    let scene = Scene::new(&market, &pricing, &priorities);
    let summary = stable_set_extrema(&scene).unwrap();
    assert_eq!(summary.revenue_min, rat(5, 6));
    assert_eq!(summary.revenue_max, rat(7, 2));
    assert!(summary.revenue_max > summary.revenue_min.clone() * int(2));
}

#[test]
fn criterion_05_priority_deviation_scenario() {
    // At the three-item market's competitive equilibrium, seller 2 reprices
    // its items to (2/3, 2) and strictly prioritizes buyer 1 on item 2.
    let market = three_item_market();
    let pricing = PricingProfile::uniform(&market, vec![int(2), rat(2, 3), int(2)]).unwrap();
    let mut priorities = PriorityProfile::all_tied(&market);
    priorities.ranks[1] = vec![0, 1];
    let scene = Scene::new(&market, &pricing, &priorities);
    let summary = stable_set_extrema(&scene).unwrap();
    // unique stable outcome pays seller 2 exactly 2/3 + 2
    assert_eq!(summary.per_seller[1].min, rat(8, 3));
    assert_eq!(summary.per_seller[1].max, rat(8, 3));
    assert!(summary.per_seller[1].min > int(2));
    let point = oracle::stable_set_singleton(&scene)
        .unwrap()
        .expect("unique outcome");
    assert_eq!(point.x[0][1], int(1));
    assert_eq!(point.x[0][0], rat(2, 3));
    assert_eq!(point.x[1][2], int(1));
    println!("criterion 5: PASS - deviation guarantees 8/3 > 2 via the exact oracle");
}

#[test]
fn criterion_06_no_equilibrium_grid() {
    let grid = [rat(1, 2), int(1), rat(3, 2), int(2), int(3), int(5)];
    let mut worst = None::<Rational>;
    for p12 in &grid {
        for p22 in &grid {
            let response =
                table1_best_response(p12, p22).unwrap_or_else(|e| panic!("({p12}, {p22}): {e}"));
            assert!(
                response.guaranteed_revenue > int(2),
                "({p12}, {p22}): guaranteed only {}",
                response.guaranteed_revenue
            );
            worst = Some(match worst {
                None => response.guaranteed_revenue,
                Some(w) => w.min(response.guaranteed_revenue),
            });
        }
    }
    println!(
        "criterion 6: PASS - 36/36 best responses certified; worst guarantee {}",
        worst.unwrap()
    );
}

#[test]
fn criterion_07_uniqueness() {
    let mut rng = rng_from_env();
    for round in 0..200 {
        let inst = random_strict_instance(&mut rng, 3, 4);
        let scene = Scene::new(&inst.market, &inst.pricing, &inst.priorities);
        let solved =
            fractional_gale_shapley(&scene).unwrap_or_else(|e| panic!("round {round}: {e}"));
        let point = oracle::stable_set_singleton(&scene)
            .unwrap_or_else(|e| panic!("round {round}: {e}"))
            .unwrap_or_else(|| panic!("round {round}: stable set not a singleton"));
        assert_eq!(
            point, solved,
            "round {round}: solver disagrees with the census"
        );
    }
    println!("criterion 7: PASS - 200/200 strict instances have a unique stable allocation matching the solver");
}

#[test]
fn criterion_08_duopoly() {
    let grid = default_report_grid();
    // the competitive profile is a grid equilibrium across the balanced box
    for s in [rat(1, 3), rat(1, 2), rat(2, 3)] {
        for t in [rat(1, 3), rat(1, 2), rat(2, 3)] {
            let market = st_family_market(&s, &t).unwrap();
            let verdict = is_nash_on_grid(&market, &DuopolyProfile::ce(2), &grid).unwrap();
            assert!(
                matches!(verdict, NashVerdict::Pass),
                "({s}, {t}): unexpected deviation {verdict:?}"
            );
        }
    }
    // and fails outside it
    for (s, t) in [(int(1), int(0)), (rat(9, 10), rat(1, 10))] {
        let market = st_family_market(&s, &t).unwrap();
        let verdict = is_nash_on_grid(&market, &DuopolyProfile::ce(2), &grid).unwrap();
        assert!(
            matches!(verdict, NashVerdict::Fail { .. }),
            "({s}, {t}): expected a profitable deviation"
        );
    }
    // the crossed profile is an equilibrium at the corner, with the halved
    // allocation
    let market = st_family_market(&int(1), &int(0)).unwrap();
    let crossed = DuopolyProfile {
        a: vec![int(1), rat(4, 3)],
        b: vec![rat(4, 3), int(1)],
    };
    let outcome = duopoly_outcome(&market, &crossed).unwrap();
    assert!(outcome.selection_free());
    for i in 0..2 {
        for j in 0..2 {
            assert_eq!(outcome.min_representative[0].x[i][j], rat(1, 2));
        }
    }
    let verdict = is_nash_on_grid(&market, &crossed, &grid).unwrap();
    assert!(matches!(verdict, NashVerdict::Pass));

    // closed form: exact agreement with the oracle wherever the clearing
    // system is feasible, regime rejection elsewhere, maximum at p = 1
    let ps = [rat(5, 4), rat(3, 2), int(2), int(3)];
    let mut feasible = 0usize;
    for s in [rat(1, 3), rat(1, 2), rat(2, 3)] {
        for t in [rat(1, 3), rat(1, 2)] {
            for p in &ps {
                match deviation_revenue_formula(&s, &t, p) {
                    Ok(value) => {
                        feasible += 1;
                        let market = st_family_market(&s, &t).unwrap();
                        let deviated = DuopolyProfile {
                            a: vec![p.clone(), rat(1, 2)],
                            b: vec![int(1), int(1)],
                        };
                        let outcome = duopoly_outcome(&market, &deviated).unwrap();
                        assert_eq!(outcome.seller_min[0], value, "({s}, {t}, {p})");
                        assert_eq!(outcome.seller_max[0], value, "({s}, {t}, {p})");
                    }
                    Err(pricecomp::Error::OutOfRegime(_)) => {}
                    Err(e) => panic!("({s}, {t}, {p}): {e}"),
                }
                // the closed form never beats its p = 1 value when t < 2/3
                let at_one = deviation_revenue_closed_form(&s, &t, &int(1));
                assert!(deviation_revenue_closed_form(&s, &t, p) <= at_one);
            }
        }
    }
    assert!(feasible >= 9, "only {feasible} feasible grid points");
    println!("criterion 8: PASS - balanced box passes, corners fail, crossed profile passes; closed form exact on {feasible} in-regime points");
}

#[test]
fn criterion_09_gadget_oracles() {
    // --- 3SAT-3: every instance with <= 3 variables and <= 4 clauses ---
    // Clauses are sets of literals over distinct variables. Instances that
    // differ by renaming variables or flipping polarities generate
    // isomorphic markets, so one representative per class carries the
    // assertion for all of them.
    let all_clauses: Vec<Vec<i32>> = {
        let mut out = Vec::new();
        let vars = [1i32, 2, 3];
        for mask in 1u32..8 {
            let chosen: Vec<i32> = vars
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, v)| *v)
                .collect();
            let width = chosen.len();
            for signs in 0..1u32 << width {
                let clause: Vec<i32> = chosen
                    .iter()
                    .enumerate()
                    .map(|(k, v)| if signs >> k & 1 == 1 { -v } else { *v })
                    .collect();
                out.push(clause);
            }
        }
        out
    };
    assert_eq!(all_clauses.len(), 26);

    let canonical = |clauses: &[Vec<i32>]| -> Vec<Vec<i32>> {
        let perms: [[i32; 3]; 6] = [
            [1, 2, 3],
            [1, 3, 2],
            [2, 1, 3],
            [2, 3, 1],
            [3, 1, 2],
            [3, 2, 1],
        ];
        let mut best: Option<Vec<Vec<i32>>> = None;
        for perm in &perms {
            for flips in 0u32..8 {
                let mut mapped: Vec<Vec<i32>> = clauses
                    .iter()
                    .map(|clause| {
                        let mut c: Vec<i32> = clause
                            .iter()
                            .map(|lit| {
                                let var = lit.unsigned_abs() as usize - 1;
                                let target = perm[var];
                                let flip = flips >> (target - 1) & 1 == 1;
                                let sign = (*lit > 0) ^ flip;
                                if sign {
                                    target
                                } else {
                                    -target
                                }
                            })
                            .collect();
                        c.sort_unstable();
                        c
                    })
                    .collect();
                mapped.sort();
                best = Some(match best {
                    None => mapped,
                    Some(b) => b.min(mapped),
                });
            }
        }
        best.unwrap()
    };

    let mut classes = std::collections::BTreeSet::new();
    let mut instances = 0usize;
    let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
    // subsets of at most four clauses, occurrence bound enforced
    let mut tested_sat = 0usize;
    while let Some(chosen) = stack.pop() {
        let clauses: Vec<Vec<i32>> = chosen.iter().map(|k| all_clauses[*k].clone()).collect();
        if CnfInstance::new(3, clauses.clone()).is_ok() {
            instances += 1;
            if classes.insert(canonical(&clauses)) {
                let cnf = CnfInstance::new(3, clauses).unwrap();
                let gadget = sat_gadget_build(&cnf, &SatVariant::Personalized).unwrap();
                let revenue = sat_gadget_max_revenue(&gadget).unwrap();
                let expected = int(37 * 3 + max3sat_optimum(&cnf) as i64);
                assert_eq!(revenue, expected);
                tested_sat += 1;
            }
        }
        if chosen.len() < 4 {
            let start = chosen.last().map(|k| k + 1).unwrap_or(0);
            for next in start..all_clauses.len() {
                let mut more = chosen.clone();
                more.push(next);
                stack.push(more);
            }
        }
    }

    // --- bipartite graphs up to 4 + 4 vertices ---
    // Side-preserving permutations generate isomorphic markets.
    let canonical_graph = |edges: u16| -> u16 {
        let perms = [
            [0usize, 1, 2, 3],
            [0, 1, 3, 2],
            [0, 2, 1, 3],
            [0, 2, 3, 1],
            [0, 3, 1, 2],
            [0, 3, 2, 1],
            [1, 0, 2, 3],
            [1, 0, 3, 2],
            [1, 2, 0, 3],
            [1, 2, 3, 0],
            [1, 3, 0, 2],
            [1, 3, 2, 0],
            [2, 0, 1, 3],
            [2, 0, 3, 1],
            [2, 1, 0, 3],
            [2, 1, 3, 0],
            [2, 3, 0, 1],
            [2, 3, 1, 0],
            [3, 0, 1, 2],
            [3, 0, 2, 1],
            [3, 1, 0, 2],
            [3, 1, 2, 0],
            [3, 2, 0, 1],
            [3, 2, 1, 0],
        ];
        let mut best = u16::MAX;
        for pl in &perms {
            for pr in &perms {
                let mut mapped = 0u16;
                for u in 0..4 {
                    for v in 0..4 {
                        if edges >> (u * 4 + v) & 1 == 1 {
                            mapped |= 1 << (pl[u] * 4 + pr[v]);
                        }
                    }
                }
                best = best.min(mapped);
            }
        }
        best
    };

    let mut graph_classes = std::collections::BTreeSet::new();
    for edges in 0u32..1 << 16 {
        graph_classes.insert(canonical_graph(edges as u16));
    }
    let mut tested_graphs = 0usize;
    for edges in &graph_classes {
        let list: Vec<(usize, usize)> = (0..16)
            .filter(|k| edges >> k & 1 == 1)
            .map(|k| (k / 4, k % 4))
            .collect();
        let graph = BipartiteGraph::new(4, 4, list).unwrap();
        let expected = min_maximal_matching(&graph);
        let gadget = matching_gadget_build(&graph).unwrap();
        let tied = PriorityProfile::all_tied(&gadget.market);
        let scene = Scene::new(&gadget.market, &gadget.pricing, &tied);
        let summary = stable_set_extrema(&scene).unwrap();
        assert_eq!(
            summary.revenue_min,
            int(expected as i64),
            "graph {edges:016b}"
        );
        tested_graphs += 1;
    }
    println!(
        "criterion 9: PASS - {tested_sat} CNF classes ({instances} instances) at 111 + optimum; {tested_graphs} graph classes at the matching minimum"
    );
}

#[test]
fn criterion_09_integral_stability_is_maximality() {
    // On unit markets of small graphs, integral allocations are matchings,
    // and the stable ones are exactly the maximal matchings.
    let mut rng = rng_from_env();
    for _ in 0..40 {
        let left = rng.gen_range(1..=3usize);
        let right = rng.gen_range(1..=3usize);
        let mut edges = Vec::new();
        for u in 0..left {
            for v in 0..right {
                if rng.gen_bool(0.5) {
                    edges.push((u, v));
                }
            }
        }
        let graph = BipartiteGraph::new(left, right, edges.clone()).unwrap();
        if graph.edges.is_empty() {
            continue;
        }
        let gadget = matching_gadget_build(&graph).unwrap();
        let tied = PriorityProfile::all_tied(&gadget.market);
        let scene = Scene::new(&gadget.market, &gadget.pricing, &tied);
        let m = gadget.market.num_items();
        // enumerate all partial matchings as integral allocations
        let mut choice = vec![0usize; gadget.market.num_buyers()];
        loop {
            let mut alloc = Allocation::zeros(&gadget.market);
            let mut ok = true;
            let mut used = vec![false; m];
            let mut size = 0usize;
            for (u, c) in choice.iter().enumerate() {
                if *c == 0 {
                    continue;
                }
                let j = c - 1;
                if !gadget.market.value(u, j).is_positive() || used[j] {
                    ok = false;
                    break;
                }
                used[j] = true;
                alloc.x[u][j] = Rational::one();
                size += 1;
            }
            if ok {
                let stable = is_stable(&scene, &alloc).unwrap().stable;
                let sizes = maximal_matching_sizes(&graph);
                let maximal = {
                    // maximality: no edge with both endpoints free
                    graph.edges.iter().all(|(u, v)| {
                        let item = gadget.kept_right.iter().position(|r| r == v).unwrap();
                        choice[*u] != 0 || used[item]
                    })
                };
                assert_eq!(stable, maximal, "choice {choice:?}");
                if maximal {
                    assert!(sizes.contains(&size));
                }
            }
            // advance
            let mut k = 0;
            loop {
                if k == choice.len() {
                    break;
                }
                choice[k] += 1;
                if choice[k] <= m {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
            if choice.iter().all(|c| *c == 0) {
                break;
            }
        }
    }
    println!("criterion 9 (integrality): PASS - integral stability coincides with maximality");
}

#[test]
fn criterion_10_budget_depletion() {
    let mut rng = rng_from_env();
    for round in 0..100 {
        let inst = random_under_spending_instance(&mut rng);
        let deviation = budget_depletion_deviation(&inst.market, &inst.pricing)
            .unwrap_or_else(|e| panic!("round {round}: {e}"))
            .unwrap_or_else(|| panic!("round {round}: no deviation found"));
        assert_eq!(deviation.epsilon, inst.slack, "round {round}");
        let before = seller_min_revenue(&inst.market, &inst.pricing, deviation.seller)
            .unwrap_or_else(|e| panic!("round {round}: {e}"));
        let after = seller_min_revenue(&inst.market, &deviation.new_pricing, deviation.seller)
            .unwrap_or_else(|e| panic!("round {round}: {e}"));
        assert_eq!(
            after,
            before + deviation.gain.clone(),
            "round {round}: gain is not exactly half the slack"
        );
    }

    // single-item raises move the optimal revenue by at most the raise
    let eps_menu = [rat(1, 3), rat(1, 2), int(1), int(2)];
    for round in 0..200 {
        let inst = random_instance(&mut rng, 4, 5, PricingMode::Uniform);
        let (_, before) = max_revenue_lp(&inst.market, &inst.pricing).unwrap();
        let j = rng.gen_range(0..inst.market.num_items());
        let eps = eps_menu[rng.gen_range(0..eps_menu.len())].clone();
        let mut prices: Vec<Rational> = (0..inst.market.num_items())
            .map(|k| inst.pricing.price(0, k).clone())
            .collect();
        prices[j] += eps.clone();
        let raised = PricingProfile::uniform(&inst.market, prices).unwrap();
        let (_, after) = max_revenue_lp(&inst.market, &raised).unwrap();
        assert!(
            after <= before.clone() + eps,
            "round {round}: optimal revenue grew by more than the raise"
        );
    }
    println!("criterion 10: PASS - 100 deviations gain exactly half the slack; 200 raises bounded by epsilon");
}
