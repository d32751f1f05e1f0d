//! Cross-module property suites: availability algebra, min-cut structure,
//! competitive-equilibrium verification, reduction stability, and the
//! uniform-pricing specialization of availability.

use num_traits::{Signed, Zero};
use proptest::prelude::*;
use rand::prelude::*;

use pricecomp::equilibrium::{competitive_equilibrium, verify_ce, CE_DEFAULT_TOLERANCE};
use pricecomp::gen::{random_instance, rng_from_env};
use pricecomp::market::{
    available_fraction, natural_priority, Allocation, Buyer, Item, Market, PricingMode,
    PricingProfile, PriorityProfile, Seller,
};
use pricecomp::oracle;
use pricecomp::rational::{int, rat, Rational};
use pricecomp::revenue::{build_flow_network, max_revenue_lp, structured_min_cut};
use pricecomp::stability::{fractional_gale_shapley, is_stable, reduce_common_part, Scene};

proptest! {
    /// Availability under uniform pricing is exactly one minus the other
    /// buyers' holdings.
    #[test]
    fn uniform_availability_specializes(
        x00 in 0u8..=4, x10 in 0u8..=4, x01 in 0u8..=4, x11 in 0u8..=4,
    ) {
        prop_assume!(x00 + x10 <= 4 && x01 + x11 <= 4);
        let market = Market::new(
            vec![
                Buyer { id: "b1".into(), budget: int(1) },
                Buyer { id: "b2".into(), budget: int(1) },
            ],
            vec![Seller { id: "s".into() }],
            vec![
                Item { id: "g1".into(), seller: 0 },
                Item { id: "g2".into(), seller: 0 },
            ],
            vec![vec![int(1), int(1)], vec![int(1), int(1)]],
        )
        .unwrap();
        let tied = PriorityProfile::all_tied(&market);
        let mut alloc = Allocation::zeros(&market);
        alloc.x[0][0] = rat(x00 as i64, 4);
        alloc.x[1][0] = rat(x10 as i64, 4);
        alloc.x[0][1] = rat(x01 as i64, 4);
        alloc.x[1][1] = rat(x11 as i64, 4);
        for i in 0..2 {
            for j in 0..2 {
                let expect = int(1)
                    - (0..2)
                        .filter(|k| *k != i)
                        .map(|k| alloc.get(k, j).clone())
                        .sum::<Rational>();
                prop_assert_eq!(available_fraction(&tied, &alloc, i, j), expect);
            }
        }
    }
}

#[test]
fn availability_is_monotone_in_rival_holdings() {
    // Raising an equal-or-higher-priority rival's holding never increases
    // availability; when everything else is unsold it equals one minus the
    // strictly-higher-priority mass.
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
            Buyer {
                id: "b3".into(),
                budget: int(1),
            },
        ],
        vec![Seller { id: "s".into() }],
        vec![Item {
            id: "g".into(),
            seller: 0,
        }],
        vec![vec![int(1)], vec![int(1)], vec![int(1)]],
    )
    .unwrap();
    let prio = PriorityProfile {
        ranks: vec![vec![1, 0, 2]],
    };
    let mut alloc = Allocation::zeros(&market);
    let base = available_fraction(&prio, &alloc, 0, 0);
    assert_eq!(base, int(1));
    // higher-priority rival takes half
    alloc.x[1][0] = rat(1, 2);
    let after_high = available_fraction(&prio, &alloc, 0, 0);
    assert_eq!(after_high, rat(1, 2));
    assert!(after_high < base);
    // lower-priority rival takes the rest: still displaceable
    alloc.x[2][0] = rat(1, 2);
    assert_eq!(available_fraction(&prio, &alloc, 0, 0), rat(1, 2));
}

#[test]
fn natural_priority_is_always_natural() {
    let mut rng = rng_from_env();
    for _ in 0..100 {
        let inst = random_instance(&mut rng, 5, 6, PricingMode::Personalized);
        let natural = natural_priority(&inst.market, &inst.pricing);
        assert!(pricecomp::market::is_natural(
            &inst.market,
            &natural,
            &inst.pricing
        ));
    }
}

#[test]
fn structured_cut_predicts_optimal_allocations() {
    // In every revenue-optimal stable allocation, source-side items sell out
    // and sink-side buyers deplete.
    let mut rng = rng_from_env();
    for round in 0..60 {
        let inst = random_instance(&mut rng, 4, 5, PricingMode::Uniform);
        let net = build_flow_network(&inst.market, &inst.pricing).unwrap();
        let cut = structured_min_cut(&net);
        let (_, optimal) = max_revenue_lp(&inst.market, &inst.pricing).unwrap();
        assert_eq!(cut.capacity, optimal, "round {round}");
        let tied = PriorityProfile::all_tied(&inst.market);
        let scene = Scene::new(&inst.market, &inst.pricing, &tied);
        let summary = oracle::stable_set_extrema_at_revenue(&scene, &optimal).unwrap();
        for alloc in [&summary.min_representative, &summary.max_representative] {
            for j in 0..inst.market.num_items() {
                if cut.in_s[net.item_vertex(j)] {
                    assert_eq!(alloc.item_total(j), int(1), "round {round} item {j}");
                }
            }
            for i in 0..inst.market.num_buyers() {
                if !cut.in_s[net.buyer_vertex(i)] {
                    assert_eq!(
                        alloc.buyer_spend(&inst.pricing, i),
                        inst.market.buyers[i].budget,
                        "round {round} buyer {i}"
                    );
                }
            }
        }
        // cross-module agreement: the oracle's stable maximum is the LP's R
        let full = oracle::stable_set_extrema(&scene).unwrap();
        assert_eq!(full.revenue_max, optimal, "round {round}");
    }
}

#[test]
fn ce_verifies_whenever_reconstruction_succeeds() {
    let mut rng = rng_from_env();
    let mut exact = 0usize;
    for _ in 0..40 {
        // markets where every buyer values something and budgets are positive
        let inst = loop {
            let cand = random_instance(&mut rng, 3, 3, PricingMode::Uniform);
            let ok = (0..cand.market.num_buyers()).all(|i| {
                cand.market.buyers[i].budget.is_positive()
                    && (0..cand.market.num_items()).any(|j| cand.market.value(i, j).is_positive())
            });
            if ok {
                break cand;
            }
        };
        match competitive_equilibrium(&inst.market, CE_DEFAULT_TOLERANCE) {
            Ok(ce) if ce.exact => {
                let (ok, violation) = verify_ce(&inst.market, &ce.prices, &ce.allocation);
                assert!(ok, "exact CE failed verification: {violation:?}");
                exact += 1;
            }
            Ok(_) => {}
            Err(pricecomp::Error::NoConvergence { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }
    assert!(exact >= 20, "only {exact} exact reconstructions");
}

#[test]
fn reduction_preserves_stability_on_random_pairs() {
    let mut rng = rng_from_env();
    let mut reduced = 0usize;
    for _ in 0..60 {
        let inst = random_instance(&mut rng, 3, 4, PricingMode::Uniform);
        let tied = PriorityProfile::all_tied(&inst.market);
        let scene = Scene::new(&inst.market, &inst.pricing, &tied);
        let x = fractional_gale_shapley(&scene).unwrap();
        // second stable allocation from the oracle's revenue extremes
        let summary = oracle::stable_set_extrema(&scene).unwrap();
        let y = summary.max_representative.clone();
        // reduce_common_part re-checks stability of both outputs internally
        let r = reduce_common_part(&scene, &x, &y).unwrap();
        for i in 0..r.market.num_buyers() {
            for j in 0..r.market.num_items() {
                assert!(r.x.get(i, j).clone() * r.y.get(i, j).clone() == Rational::zero());
            }
        }
        reduced += 1;
    }
    assert_eq!(reduced, 60);
}

#[test]
fn natural_priorities_of_uniform_pricing_are_all_tied() {
    let mut rng = rng_from_env();
    for _ in 0..50 {
        let inst = random_instance(&mut rng, 4, 4, PricingMode::Uniform);
        let tied = PriorityProfile::all_tied(&inst.market);
        let natural = natural_priority(&inst.market, &inst.pricing);
        assert_eq!(natural, tied);
    }
}

#[test]
fn solver_output_lies_in_the_oracle_envelope() {
    // the deferred-acceptance solution is one point of the stable set, so
    // its revenue must sit inside the oracle's exact range
    let mut rng = rng_from_env();
    for round in 0..80 {
        let inst = random_instance(&mut rng, 4, 5, PricingMode::Personalized);
        let scene = Scene::new(&inst.market, &inst.pricing, &inst.priorities);
        let solved = fractional_gale_shapley(&scene).unwrap();
        let (_, total) = pricecomp::market::revenue(&inst.market, &inst.pricing, &solved);
        let summary = oracle::stable_set_extrema(&scene).unwrap();
        assert!(
            total >= summary.revenue_min && total <= summary.revenue_max,
            "round {round}: solver revenue {total} outside [{}, {}]",
            summary.revenue_min,
            summary.revenue_max
        );
    }
}

#[test]
fn report_serializes_with_violation_list() {
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
        ],
        vec![vec![int(1), int(1)], vec![Rational::zero(), int(1)]],
    )
    .unwrap();
    let pricing = PricingProfile::uniform(&market, vec![int(1), int(1)]).unwrap();
    let tied = PriorityProfile::all_tied(&market);
    let scene = Scene::new(&market, &pricing, &tied);
    let report = is_stable(&scene, &Allocation::zeros(&market)).unwrap();
    let json = report.to_json(&market);
    assert_eq!(json["stable"], serde_json::json!(false));
    assert!(json["violations"].as_array().unwrap().len() >= 2);
    assert_eq!(
        json["violations"][0]["reason"],
        serde_json::json!("UNSPENT_BUDGET_AVAILABLE_ITEM")
    );
}

#[test]
fn oracle_grid_cross_check() {
    // Grid scan at step 1/24: every stable grid point's revenue lies inside
    // the oracle's exact range, and the grid attains both ends on the
    // two-allocation toy market.
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
        ],
        vec![vec![int(1), int(1)], vec![Rational::zero(), int(1)]],
    )
    .unwrap();
    let pricing = PricingProfile::uniform(&market, vec![int(1), int(1)]).unwrap();
    let tied = PriorityProfile::all_tied(&market);
    let scene = Scene::new(&market, &pricing, &tied);
    let summary = oracle::stable_set_extrema(&scene).unwrap();

    let step = 24i64;
    let mut grid_min: Option<Rational> = None;
    let mut grid_max: Option<Rational> = None;
    for a in 0..=step {
        for b in 0..=(step - a) {
            for c in 0..=step {
                for d in 0..=(step - c) {
                    let mut alloc = Allocation::zeros(&market);
                    alloc.x[0][0] = rat(a, step);
                    alloc.x[1][0] = rat(b, step);
                    alloc.x[0][1] = rat(c, step);
                    alloc.x[1][1] = rat(d, step);
                    if alloc.x[1][0].is_positive() {
                        continue; // zero-valued pair
                    }
                    let report = is_stable(&scene, &alloc).unwrap();
                    if report.stable {
                        let (_, total) = pricecomp::market::revenue(&market, &pricing, &alloc);
                        assert!(total >= summary.revenue_min && total <= summary.revenue_max);
                        grid_min = Some(
                            grid_min.map_or(total.clone(), |g: Rational| g.min(total.clone())),
                        );
                        grid_max = Some(grid_max.map_or(total.clone(), |g: Rational| g.max(total)));
                    }
                }
            }
        }
    }
    assert_eq!(grid_min.unwrap(), summary.revenue_min);
    assert_eq!(grid_max.unwrap(), summary.revenue_max);
}

#[test]
fn rng_seed_env_is_respected() {
    std::env::set_var("FF_SEED", "12345");
    let mut a = rng_from_env();
    let mut b = rng_from_env();
    std::env::remove_var("FF_SEED");
    assert_eq!(
        rand::RngCore::next_u64(&mut a),
        rand::RngCore::next_u64(&mut b)
    );
}
