//! The market model: buyers with budgets, sellers owning items, exact
//! valuation and price matrices, priority and preference preorders, and
//! fractional allocations.
//!
//! Everything is immutable after construction; ids are strings but every
//! algorithm works over dense indices fixed at load time, so tie-breaks are
//! reproducible.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Debug, Clone)]
pub struct Buyer {
    pub id: String,
    pub budget: Rational,
}

#[derive(Debug, Clone)]
pub struct Item {
    pub id: String,
    pub seller: usize,
}

#[derive(Debug, Clone)]
pub struct Seller {
    pub id: String,
}

/// The immutable ground instance. Item supply is normalized to 1.
#[derive(Debug, Clone)]
pub struct Market {
    pub buyers: Vec<Buyer>,
    pub sellers: Vec<Seller>,
    pub items: Vec<Item>,
    /// `valuations[buyer][item]`, value per whole item.
    pub valuations: Vec<Vec<Rational>>,
}

impl Market {
    pub fn new(
        buyers: Vec<Buyer>,
        sellers: Vec<Seller>,
        items: Vec<Item>,
        valuations: Vec<Vec<Rational>>,
    ) -> Result<Self> {
        let m = Market {
            buyers,
            sellers,
            items,
            valuations,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let n = self.buyers.len();
        let m = self.items.len();
        if self.valuations.len() != n {
            return Err(Error::Validation(format!(
                "valuation matrix has {} rows for {n} buyers",
                self.valuations.len()
            )));
        }
        for (i, row) in self.valuations.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Validation(format!(
                    "valuation row for buyer {} has {} entries for {m} items",
                    self.buyers[i].id,
                    row.len()
                )));
            }
            for (j, v) in row.iter().enumerate() {
                if v.is_negative() {
                    return Err(Error::Validation(format!(
                        "negative valuation for ({}, {})",
                        self.buyers[i].id, self.items[j].id
                    )));
                }
            }
        }
        for b in &self.buyers {
            if b.budget.is_negative() {
                return Err(Error::Validation(format!("negative budget for {}", b.id)));
            }
        }
        for (j, item) in self.items.iter().enumerate() {
            if item.seller >= self.sellers.len() {
                return Err(Error::Validation(format!(
                    "item {} references unknown seller",
                    item.id
                )));
            }
            if !self.valuations.iter().any(|row| row[j].is_positive()) {
                return Err(Error::Validation(format!(
                    "item {} has no interested buyer",
                    item.id
                )));
            }
        }
        Ok(())
    }

    pub fn num_buyers(&self) -> usize {
        self.buyers.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn num_sellers(&self) -> usize {
        self.sellers.len()
    }

    pub fn value(&self, buyer: usize, item: usize) -> &Rational {
        &self.valuations[buyer][item]
    }

    pub fn seller_items(&self, seller: usize) -> Vec<usize> {
        (0..self.num_items())
            .filter(|j| self.items[*j].seller == seller)
            .collect()
    }

    pub fn buyer_index(&self, id: &str) -> Option<usize> {
        self.buyers.iter().position(|b| b.id == id)
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.items.iter().position(|x| x.id == id)
    }

    pub fn seller_index(&self, id: &str) -> Option<usize> {
        self.sellers.iter().position(|s| s.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PricingMode {
    Uniform,
    Personalized,
}

/// Per-buyer-per-item prices. Uniform pricing stores the same column for
/// every buyer and is checked on construction.
#[derive(Debug, Clone)]
pub struct PricingProfile {
    pub mode: PricingMode,
    /// `prices[buyer][item]`, money per whole item.
    pub prices: Vec<Vec<Rational>>,
}

impl PricingProfile {
    pub fn uniform(market: &Market, item_prices: Vec<Rational>) -> Result<Self> {
        if item_prices.len() != market.num_items() {
            return Err(Error::Validation(format!(
                "{} prices for {} items",
                item_prices.len(),
                market.num_items()
            )));
        }
        let prices = vec![item_prices; market.num_buyers().max(1)];
        let p = PricingProfile {
            mode: PricingMode::Uniform,
            prices,
        };
        p.validate(market)?;
        Ok(p)
    }

    pub fn personalized(market: &Market, prices: Vec<Vec<Rational>>) -> Result<Self> {
        let p = PricingProfile {
            mode: PricingMode::Personalized,
            prices,
        };
        p.validate(market)?;
        Ok(p)
    }

    pub fn validate(&self, market: &Market) -> Result<()> {
        let n = market.num_buyers();
        let m = market.num_items();
        if self.prices.len() != n.max(1) {
            return Err(Error::Validation("price matrix row count mismatch".into()));
        }
        for row in &self.prices {
            if row.len() != m {
                return Err(Error::Validation(
                    "price matrix column count mismatch".into(),
                ));
            }
            for p in row {
                if p.is_negative() {
                    return Err(Error::Validation("negative price".into()));
                }
            }
        }
        if self.mode == PricingMode::Uniform {
            for j in 0..m {
                for i in 1..self.prices.len() {
                    if self.prices[i][j] != self.prices[0][j] {
                        return Err(Error::Validation(format!(
                            "uniform pricing differs across buyers for item {}",
                            market.items[j].id
                        )));
                    }
                }
            }
        }
        // Validity: a positively valued item must carry a positive price,
        // otherwise demand (budget / price) is undefined.
        for i in 0..n {
            for j in 0..m {
                if market.value(i, j).is_positive() && !self.prices[i][j].is_positive() {
                    return Err(Error::Validation(format!(
                        "zero price for positively valued pair ({}, {})",
                        market.buyers[i].id, market.items[j].id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn price(&self, buyer: usize, item: usize) -> &Rational {
        &self.prices[buyer][item]
    }

    pub fn is_uniform_values(&self, market: &Market) -> bool {
        (0..market.num_items())
            .all(|j| (1..self.prices.len()).all(|i| self.prices[i][j] == self.prices[0][j]))
    }

    /// Bang-per-buck v/p; None when the buyer does not value the item.
    pub fn bang_per_buck(&self, market: &Market, buyer: usize, item: usize) -> Option<Rational> {
        let v = market.value(buyer, item);
        if v.is_positive() {
            Some(v.clone() / self.price(buyer, item).clone())
        } else {
            None
        }
    }
}

/// For each item, a total preorder over buyers encoded as ranks: lower rank
/// means higher priority, equal ranks are ties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriorityProfile {
    /// `ranks[item][buyer]`
    pub ranks: Vec<Vec<usize>>,
}

impl PriorityProfile {
    pub fn all_tied(market: &Market) -> Self {
        PriorityProfile {
            ranks: vec![vec![0; market.num_buyers()]; market.num_items()],
        }
    }

    pub fn rank(&self, item: usize, buyer: usize) -> usize {
        self.ranks[item][buyer]
    }

    /// i is weakly prioritized over i' on item j.
    pub fn weakly_above(&self, item: usize, i: usize, i_prime: usize) -> bool {
        self.rank(item, i) <= self.rank(item, i_prime)
    }

    /// i is strictly prioritized over i' on item j.
    pub fn strictly_above(&self, item: usize, i: usize, i_prime: usize) -> bool {
        self.rank(item, i) < self.rank(item, i_prime)
    }

    pub fn is_strict(&self, item: usize) -> bool {
        let mut ranks = self.ranks[item].clone();
        ranks.sort_unstable();
        ranks.windows(2).all(|w| w[0] != w[1])
    }
}

/// For each buyer, a total preorder over its positively valued items: lower
/// rank means more preferred; `None` marks items the buyer does not value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreferenceProfile {
    /// `ranks[buyer][item]`
    pub ranks: Vec<Vec<Option<usize>>>,
}

impl PreferenceProfile {
    /// Derives preferences from bang-per-bucks: j >= j' iff v/p (j) >= v/p (j').
    pub fn from_bang_per_buck(market: &Market, pricing: &PricingProfile) -> Self {
        let n = market.num_buyers();
        let m = market.num_items();
        let mut ranks = vec![vec![None; m]; n];
        for i in 0..n {
            let mut levels: Vec<(Rational, usize)> = (0..m)
                .filter_map(|j| pricing.bang_per_buck(market, i, j).map(|b| (b, j)))
                .collect();
            levels.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut rank = 0usize;
            for k in 0..levels.len() {
                if k > 0 && levels[k].0 != levels[k - 1].0 {
                    rank += 1;
                }
                ranks[i][levels[k].1] = Some(rank);
            }
        }
        PreferenceProfile { ranks }
    }

    pub fn rank(&self, buyer: usize, item: usize) -> Option<usize> {
        self.ranks[buyer][item]
    }

    /// Buyer strictly prefers j over j'. Items outside the preference domain
    /// (zero value) are never preferred.
    pub fn strictly_prefers(&self, buyer: usize, j: usize, j_prime: usize) -> bool {
        match (self.rank(buyer, j), self.rank(buyer, j_prime)) {
            (Some(a), Some(b)) => a < b,
            (Some(_), None) => true,
            _ => false,
        }
    }

    pub fn weakly_prefers(&self, buyer: usize, j: usize, j_prime: usize) -> bool {
        match (self.rank(buyer, j), self.rank(buyer, j_prime)) {
            (Some(a), Some(b)) => a <= b,
            (Some(_), None) => true,
            (None, None) => true,
            (None, Some(_)) => false,
        }
    }

    /// All preferences strict: no two valued items share a rank.
    pub fn is_strict(&self, buyer: usize) -> bool {
        let mut seen: Vec<usize> = self.ranks[buyer].iter().flatten().copied().collect();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }
}

/// Fractional assignment matrix; supply of every item is capped at 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    /// `x[buyer][item]` in `[0, 1]`
    pub x: Vec<Vec<Rational>>,
}

impl Allocation {
    pub fn zeros(market: &Market) -> Self {
        Allocation {
            x: vec![vec![Rational::zero(); market.num_items()]; market.num_buyers()],
        }
    }

    pub fn get(&self, buyer: usize, item: usize) -> &Rational {
        &self.x[buyer][item]
    }

    pub fn item_total(&self, item: usize) -> Rational {
        self.x.iter().map(|row| row[item].clone()).sum()
    }

    pub fn is_feasible(&self, market: &Market) -> bool {
        if self.x.len() != market.num_buyers() {
            return false;
        }
        for row in &self.x {
            if row.len() != market.num_items() {
                return false;
            }
            for v in row {
                if v.is_negative() || *v > Rational::from_integer(1.into()) {
                    return false;
                }
            }
        }
        (0..market.num_items()).all(|j| self.item_total(j) <= Rational::from_integer(1.into()))
    }

    pub fn buyer_spend(&self, pricing: &PricingProfile, buyer: usize) -> Rational {
        self.x[buyer]
            .iter()
            .enumerate()
            .map(|(j, frac)| pricing.price(buyer, j).clone() * frac.clone())
            .sum()
    }

    pub fn buyer_utility(&self, market: &Market, buyer: usize) -> Rational {
        self.x[buyer]
            .iter()
            .enumerate()
            .map(|(j, frac)| market.value(buyer, j).clone() * frac.clone())
            .sum()
    }
}

/// Ranks buyers on every item by descending personalized price; equal prices
/// share a rank.
pub fn natural_priority(market: &Market, pricing: &PricingProfile) -> PriorityProfile {
    let n = market.num_buyers();
    let m = market.num_items();
    let mut ranks = vec![vec![0usize; n]; m];
    for j in 0..m {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|a, b| {
            pricing
                .price(*b, j)
                .cmp(pricing.price(*a, j))
                .then(a.cmp(b))
        });
        let mut rank = 0usize;
        for k in 0..order.len() {
            if k > 0 && pricing.price(order[k], j) != pricing.price(order[k - 1], j) {
                rank += 1;
            }
            ranks[j][order[k]] = rank;
        }
    }
    PriorityProfile { ranks }
}

/// True iff p(i, j) >= p(i', j) implies i is weakly prioritized over i' for
/// every item and buyer pair. Ties in price must stay ties in priority.
pub fn is_natural(market: &Market, priorities: &PriorityProfile, pricing: &PricingProfile) -> bool {
    let n = market.num_buyers();
    for j in 0..market.num_items() {
        for i in 0..n {
            for i_prime in 0..n {
                if pricing.price(i, j) >= pricing.price(i_prime, j)
                    && !priorities.weakly_above(j, i, i_prime)
                {
                    return false;
                }
            }
        }
    }
    true
}

/// The fraction of item j that buyer i could hold: unsold supply, its own
/// holding, and holdings of strictly lower-priority buyers.
pub fn available_fraction(
    priorities: &PriorityProfile,
    allocation: &Allocation,
    buyer: usize,
    item: usize,
) -> Rational {
    let sold = allocation.item_total(item);
    let unsold = Rational::from_integer(1.into()) - sold;
    let own = allocation.get(buyer, item).clone();
    let displaceable: Rational = (0..allocation.x.len())
        .filter(|i| *i != buyer && priorities.strictly_above(item, buyer, *i))
        .map(|i| allocation.get(i, item).clone())
        .sum();
    unsold + own + displaceable
}

/// Per-seller and total revenue: seller k receives the payments for its
/// items, each buyer paying its personalized price.
pub fn revenue(
    market: &Market,
    pricing: &PricingProfile,
    allocation: &Allocation,
) -> (Vec<Rational>, Rational) {
    let mut per_seller = vec![Rational::zero(); market.num_sellers()];
    for i in 0..market.num_buyers() {
        for j in 0..market.num_items() {
            let paid = pricing.price(i, j).clone() * allocation.get(i, j).clone();
            per_seller[market.items[j].seller] += paid;
        }
    }
    let total = per_seller.iter().cloned().sum();
    (per_seller, total)
}

/// Seller k's revenue alone.
pub fn seller_revenue(
    market: &Market,
    pricing: &PricingProfile,
    allocation: &Allocation,
    seller: usize,
) -> Rational {
    let mut total = Rational::zero();
    for j in market.seller_items(seller) {
        for i in 0..market.num_buyers() {
            total += pricing.price(i, j).clone() * allocation.get(i, j).clone();
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat, zero};

    pub(crate) fn two_seller_market() -> Market {
        // budgets (1,1); item 1 owned by seller 1, item 2 by seller 2;
        // valuations [[1,1],[0,1]].
        Market::new(
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
            vec![vec![int(1), int(1)], vec![zero(), int(1)]],
        )
        .unwrap()
    }

    pub(crate) fn three_item_market() -> Market {
        // budgets (2,2); seller 1 owns item 1; seller 2 owns items 2 and 3;
        // valuations [[2,1,0],[1/3,1,1]].
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
                vec![int(2), int(1), zero()],
                vec![rat(1, 3), int(1), int(1)],
            ],
        )
        .unwrap()
    }

    #[test]
    fn natural_priority_uniform_is_all_tied() {
        let m = two_seller_market();
        let p = PricingProfile::uniform(&m, vec![int(1), int(1)]).unwrap();
        let pr = natural_priority(&m, &p);
        assert_eq!(pr, PriorityProfile::all_tied(&m));
        assert!(is_natural(&m, &pr, &p));
    }

    #[test]
    fn natural_priority_two_point_sort() {
        let m = two_seller_market();
        let p = PricingProfile::personalized(&m, vec![vec![int(3), int(1)], vec![int(1), int(1)]])
            .unwrap();
        let pr = natural_priority(&m, &p);
        assert_eq!(pr.rank(0, 0), 0);
        assert_eq!(pr.rank(0, 1), 1);
        assert!(is_natural(&m, &pr, &p));
    }

    #[test]
    fn gadget_choice_item_priority() {
        // choice item priced 13 (choice buyer), 12 (literal buyer), 0 (clause
        // buyer, zero value): choice strictly first, literal second.
        let m = Market::new(
            vec![
                Buyer {
                    id: "choice".into(),
                    budget: int(13),
                },
                Buyer {
                    id: "literal".into(),
                    budget: int(12),
                },
                Buyer {
                    id: "clause".into(),
                    budget: int(1),
                },
            ],
            vec![Seller { id: "s".into() }],
            vec![Item {
                id: "g".into(),
                seller: 0,
            }],
            vec![vec![int(13)], vec![int(24)], vec![zero()]],
        )
        .unwrap();
        let p = PricingProfile::personalized(&m, vec![vec![int(13)], vec![int(12)], vec![zero()]])
            .unwrap();
        let pr = natural_priority(&m, &p);
        assert_eq!(pr.rank(0, 0), 0);
        assert_eq!(pr.rank(0, 1), 1);
        assert_eq!(pr.rank(0, 2), 2);
    }

    #[test]
    fn strict_priority_under_uniform_prices_is_not_natural() {
        let m = two_seller_market();
        let p = PricingProfile::uniform(&m, vec![int(1), int(1)]).unwrap();
        let pr = PriorityProfile {
            ranks: vec![vec![0, 1], vec![0, 1]],
        };
        assert!(!is_natural(&m, &pr, &p));
    }

    #[test]
    fn availability() {
        let m = two_seller_market();
        let tied = PriorityProfile::all_tied(&m);
        let empty = Allocation::zeros(&m);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(available_fraction(&tied, &empty, i, j), int(1));
            }
        }
        // item fully sold to a strictly-higher-priority buyer -> 0
        let strict = PriorityProfile {
            ranks: vec![vec![0, 1], vec![0, 1]],
        };
        let mut a = Allocation::zeros(&m);
        a.x[0][0] = int(1);
        assert_eq!(available_fraction(&strict, &a, 1, 0), zero());
        // fully sold, holder tied, own half: only unsold + own counts
        let mut a = Allocation::zeros(&m);
        a.x[0][1] = rat(1, 2);
        a.x[1][1] = rat(1, 2);
        assert_eq!(available_fraction(&tied, &a, 0, 1), rat(1, 2));
    }

    #[test]
    fn revenue_examples() {
        let m = two_seller_market();
        let p = PricingProfile::uniform(&m, vec![int(1), int(1)]).unwrap();
        let zero_alloc = Allocation::zeros(&m);
        let (per, total) = revenue(&m, &p, &zero_alloc);
        assert_eq!(per, vec![zero(), zero()]);
        assert_eq!(total, zero());

        let mut y = Allocation::zeros(&m);
        y.x[0][0] = int(1);
        y.x[1][1] = int(1);
        let (per, total) = revenue(&m, &p, &y);
        assert_eq!(per, vec![int(1), int(1)]);
        assert_eq!(total, int(2));

        let m3 = three_item_market();
        let p3 = PricingProfile::uniform(&m3, vec![int(2), int(1), int(1)]).unwrap();
        let mut ce = Allocation::zeros(&m3);
        ce.x[0][0] = int(1);
        ce.x[1][1] = int(1);
        ce.x[1][2] = int(1);
        let (per, total) = revenue(&m3, &p3, &ce);
        assert_eq!(per, vec![int(2), int(2)]);
        assert_eq!(total, int(4));
    }

    #[test]
    fn preference_derivation() {
        let m = three_item_market();
        let p = PricingProfile::uniform(&m, vec![int(2), int(1), int(1)]).unwrap();
        let prefs = PreferenceProfile::from_bang_per_buck(&m, &p);
        // buyer 1: item1 bpb 1, item2 bpb 1, item3 unvalued
        assert_eq!(prefs.rank(0, 0), Some(0));
        assert_eq!(prefs.rank(0, 1), Some(0));
        assert_eq!(prefs.rank(0, 2), None);
        // buyer 2: item2/item3 bpb 1 > item1 bpb 1/6
        assert_eq!(prefs.rank(1, 1), Some(0));
        assert_eq!(prefs.rank(1, 2), Some(0));
        assert_eq!(prefs.rank(1, 0), Some(1));
        assert!(!prefs.is_strict(1));
    }

    #[test]
    fn validation_rejects_zero_price_on_valued_item() {
        let m = two_seller_market();
        let err = PricingProfile::uniform(&m, vec![int(1), zero()]);
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn validation_rejects_unwanted_item() {
        let r = Market::new(
            vec![Buyer {
                id: "b".into(),
                budget: int(1),
            }],
            vec![Seller { id: "s".into() }],
            vec![Item {
                id: "g".into(),
                seller: 0,
            }],
            vec![vec![zero()]],
        );
        assert!(matches!(r, Err(Error::Validation(_))));
    }
}
