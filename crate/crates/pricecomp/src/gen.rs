//! Seeded random instance generators for the property suites. The seed
//! comes from the FF_SEED environment variable when set.

use num_traits::{Signed, Zero};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::market::{Buyer, Item, Market, PricingMode, PricingProfile, PriorityProfile, Seller};
use crate::rational::{rat, Rational};

pub const DEFAULT_SEED: u64 = 0xF15;

pub fn rng_from_env() -> ChaCha8Rng {
    let seed = std::env::var("FF_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_SEED);
    ChaCha8Rng::seed_from_u64(seed)
}

fn menu() -> Vec<Rational> {
    vec![
        Rational::zero(),
        rat(1, 3),
        rat(1, 2),
        rat(1, 1),
        rat(2, 1),
        rat(3, 1),
    ]
}

fn positive_menu() -> Vec<Rational> {
    menu().into_iter().filter(|q| q.is_positive()).collect()
}

pub struct RandomInstance {
    pub market: Market,
    pub pricing: PricingProfile,
    pub priorities: PriorityProfile,
}

/// A market with budgets, valuations and prices drawn from a small menu.
/// Every item keeps at least one interested buyer; valued pairs always get
/// positive prices; priorities are arbitrary random preorders.
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    max_buyers: usize,
    max_items: usize,
    mode: PricingMode,
) -> RandomInstance {
    let n = rng.gen_range(1..=max_buyers);
    let m = rng.gen_range(1..=max_items);
    let vals = menu();
    let pos = positive_menu();

    let buyers: Vec<Buyer> = (0..n)
        .map(|i| Buyer {
            id: format!("b{}", i + 1),
            budget: pos[rng.gen_range(0..pos.len())].clone(),
        })
        .collect();
    let sellers_count = rng.gen_range(1..=2.min(m));
    let sellers: Vec<Seller> = (0..sellers_count)
        .map(|k| Seller {
            id: format!("s{}", k + 1),
        })
        .collect();
    let items: Vec<Item> = (0..m)
        .map(|j| Item {
            id: format!("g{}", j + 1),
            seller: rng.gen_range(0..sellers_count),
        })
        .collect();

    let mut valuations = vec![vec![Rational::zero(); m]; n];
    for j in 0..m {
        loop {
            for (i, row) in valuations.iter_mut().enumerate() {
                let _ = i;
                row[j] = vals[rng.gen_range(0..vals.len())].clone();
            }
            if valuations.iter().any(|row| row[j].is_positive()) {
                break;
            }
        }
    }
    let market = Market::new(buyers, sellers, items, valuations).expect("generated market");

    let pricing = match mode {
        PricingMode::Uniform => {
            let prices: Vec<Rational> = (0..m)
                .map(|_| pos[rng.gen_range(0..pos.len())].clone())
                .collect();
            PricingProfile::uniform(&market, prices).expect("generated pricing")
        }
        PricingMode::Personalized => {
            let prices: Vec<Vec<Rational>> = (0..n)
                .map(|_| {
                    (0..m)
                        .map(|_| pos[rng.gen_range(0..pos.len())].clone())
                        .collect()
                })
                .collect();
            PricingProfile::personalized(&market, prices).expect("generated pricing")
        }
    };

    // Random total preorder per item: shuffle then cut into tie groups.
    let mut ranks = vec![vec![0usize; n]; m];
    for item_ranks in ranks.iter_mut() {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut rank = 0usize;
        for (pos_in_order, buyer) in order.iter().enumerate() {
            if pos_in_order > 0 && rng.gen_bool(0.6) {
                rank += 1;
            }
            item_ranks[*buyer] = rank;
        }
    }
    RandomInstance {
        market,
        pricing,
        priorities: PriorityProfile { ranks },
    }
}

/// Instance satisfying the uniqueness theorem's hypotheses: all personalized
/// prices distinct down each item column (strict natural priorities) and
/// all bang-per-bucks distinct per buyer (strict preferences).
pub fn random_strict_instance(
    rng: &mut ChaCha8Rng,
    max_buyers: usize,
    max_items: usize,
) -> RandomInstance {
    loop {
        let n = rng.gen_range(2..=max_buyers);
        let m = rng.gen_range(2..=max_items);
        let vals = menu();
        let buyers: Vec<Buyer> = (0..n)
            .map(|i| Buyer {
                id: format!("b{}", i + 1),
                budget: rat(rng.gen_range(1..=6), rng.gen_range(1..=2)),
            })
            .collect();
        let sellers: Vec<Seller> = (0..2.min(m))
            .map(|k| Seller {
                id: format!("s{}", k + 1),
            })
            .collect();
        let items: Vec<Item> = (0..m)
            .map(|j| Item {
                id: format!("g{}", j + 1),
                seller: rng.gen_range(0..sellers.len()),
            })
            .collect();
        let mut valuations = vec![vec![Rational::zero(); m]; n];
        for j in 0..m {
            loop {
                for row in valuations.iter_mut() {
                    row[j] = vals[rng.gen_range(0..vals.len())].clone();
                }
                if valuations.iter().any(|row| row[j].is_positive()) {
                    break;
                }
            }
        }
        let Ok(market) = Market::new(buyers, sellers, items, valuations) else {
            continue;
        };
        // Rich price menu so strictness is reachable by resampling.
        let denom_menu = [1i64, 2, 3, 4, 5, 7];
        let prices: Vec<Vec<Rational>> = (0..n)
            .map(|_| {
                (0..m)
                    .map(|_| {
                        rat(
                            rng.gen_range(1..=9),
                            denom_menu[rng.gen_range(0..denom_menu.len())],
                        )
                    })
                    .collect()
            })
            .collect();
        let Ok(pricing) = PricingProfile::personalized(&market, prices) else {
            continue;
        };
        // strict natural priorities need distinct prices per column
        let strict_columns = (0..m).all(|j| {
            let mut col: Vec<&Rational> = (0..n).map(|i| pricing.price(i, j)).collect();
            col.sort();
            col.windows(2).all(|w| w[0] != w[1])
        });
        if !strict_columns {
            continue;
        }
        let prefs = crate::market::PreferenceProfile::from_bang_per_buck(&market, &pricing);
        if !(0..n).all(|i| prefs.is_strict(i)) {
            continue;
        }
        let priorities = crate::market::natural_priority(&market, &pricing);
        return RandomInstance {
            market,
            pricing,
            priorities,
        };
    }
}

/// Under-spending family for the budget-depletion law: disjoint buyer
/// blocks, each buyer owning the demand for its own items, with the first
/// buyer's budget strictly above the total price of its block. The designed
/// slack makes the deviation's gain exact.
pub struct UnderSpendingInstance {
    pub market: Market,
    pub pricing: PricingProfile,
    /// The intended slack of buyer 0.
    pub slack: Rational,
}

pub fn random_under_spending_instance(rng: &mut ChaCha8Rng) -> UnderSpendingInstance {
    let blocks = rng.gen_range(1..=3usize);
    let items_per_block: Vec<usize> = (0..blocks).map(|_| rng.gen_range(1..=2)).collect();
    let m: usize = items_per_block.iter().sum();
    let pos = positive_menu();

    let mut items = Vec::new();
    let mut prices = Vec::new();
    let mut valuations = vec![vec![Rational::zero(); m]; blocks];
    let mut buyers = Vec::new();
    let mut next_item = 0usize;
    let mut sellers = vec![Seller { id: "s1".into() }];
    for (b, count) in items_per_block.iter().enumerate() {
        let mut total = Rational::zero();
        for _ in 0..*count {
            let price = pos[rng.gen_range(0..pos.len())].clone();
            let seller = if b == 0 {
                0
            } else {
                if sellers.len() < 2 {
                    sellers.push(Seller { id: "s2".into() });
                }
                1
            };
            items.push(Item {
                id: format!("g{}", next_item + 1),
                seller,
            });
            prices.push(price.clone());
            valuations[b][next_item] = pos[rng.gen_range(0..pos.len())].clone();
            total += price;
            next_item += 1;
        }
        let budget = if b == 0 {
            // strictly more money than the block costs
            total.clone() + pos[rng.gen_range(0..pos.len())].clone()
        } else {
            // exactly depleting or under; anything feasible
            total.clone()
        };
        buyers.push(Buyer {
            id: format!("b{}", b + 1),
            budget,
        });
    }
    let slack = buyers[0].budget.clone()
        - items
            .iter()
            .enumerate()
            .filter(|(_, it)| it.seller == 0)
            .map(|(j, _)| prices[j].clone())
            .sum::<Rational>();
    let market = Market::new(buyers, sellers, items, valuations).expect("generated market");
    let pricing = PricingProfile::uniform(&market, prices).expect("generated pricing");
    UnderSpendingInstance {
        market,
        pricing,
        slack,
    }
}
