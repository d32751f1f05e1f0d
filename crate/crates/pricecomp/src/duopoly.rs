//! The competitive duopoly pricing game: two sellers report per-buyer
//! bang-per-bucks, buyers prefer the seller with the lower report, prices
//! settle at v * max(report pair), priorities are natural, and trade is any
//! stable allocation of the induced instance.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::market::{
    natural_priority, Allocation, Buyer, Item, Market, PreferenceProfile, PricingProfile,
    PriorityProfile, Seller,
};
use crate::oracle::{self, Goal, Objective};
use crate::rational::{rat, Rational};
use crate::stability::Scene;

/// Per-buyer reports: `a[i]` by seller 1, `b[i]` by seller 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuopolyProfile {
    pub a: Vec<Rational>,
    pub b: Vec<Rational>,
}

impl DuopolyProfile {
    pub fn ce(n: usize) -> Self {
        DuopolyProfile {
            a: vec![Rational::one(); n],
            b: vec![Rational::one(); n],
        }
    }
}

#[derive(Debug, Clone)]
pub struct InducedInstance {
    pub pricing: PricingProfile,
    pub priorities: PriorityProfile,
    pub preferences: PreferenceProfile,
}

/// Prices and preorders induced by a report profile: p(i, j) =
/// v(i, j) * max(a_i, b_i); buyer i strictly prefers the items of the seller
/// with the smaller report (tie: indifferent over everything it values);
/// priorities are natural with respect to the prices.
pub fn induce_market(market: &Market, profile: &DuopolyProfile) -> Result<InducedInstance> {
    if market.num_sellers() != 2 {
        return Err(Error::NotDuopoly);
    }
    let n = market.num_buyers();
    let m = market.num_items();
    if profile.a.len() != n || profile.b.len() != n {
        return Err(Error::Validation(
            "report vectors must cover every buyer".into(),
        ));
    }
    for i in 0..n {
        if profile.a[i].is_negative() || profile.b[i].is_negative() {
            return Err(Error::Validation("reports must be non-negative".into()));
        }
        let max = profile.a[i].clone().max(profile.b[i].clone());
        if !max.is_positive() && (0..m).any(|j| market.value(i, j).is_positive()) {
            return Err(Error::Validation(format!(
                "both reports are zero for buyer {} which values items",
                market.buyers[i].id
            )));
        }
    }
    let mut prices = vec![vec![Rational::zero(); m]; n];
    let mut pref_ranks = vec![vec![None; m]; n];
    for i in 0..n {
        let max = profile.a[i].clone().max(profile.b[i].clone());
        let preferred_seller = match profile.a[i].cmp(&profile.b[i]) {
            std::cmp::Ordering::Less => Some(0usize),
            std::cmp::Ordering::Greater => Some(1usize),
            std::cmp::Ordering::Equal => None,
        };
        for j in 0..m {
            prices[i][j] = market.value(i, j).clone() * max.clone();
            if market.value(i, j).is_positive() {
                pref_ranks[i][j] = Some(match preferred_seller {
                    None => 0,
                    Some(k) if market.items[j].seller == k => 0,
                    Some(_) => 1,
                });
            }
        }
    }
    let pricing = PricingProfile::personalized(market, prices)?;
    let priorities = natural_priority(market, &pricing);
    let preferences = PreferenceProfile { ranks: pref_ranks };
    Ok(InducedInstance {
        pricing,
        priorities,
        preferences,
    })
}

/// Revenue range of each seller over all stable allocations of the induced
/// instance, with witnesses for the extremes.
#[derive(Debug, Clone)]
pub struct DuopolyOutcome {
    pub seller_min: [Rational; 2],
    pub seller_max: [Rational; 2],
    pub min_representative: [Allocation; 2],
    pub max_representative: [Allocation; 2],
}

impl DuopolyOutcome {
    /// No allocation selection can change either seller's revenue.
    pub fn selection_free(&self) -> bool {
        self.seller_min == self.seller_max
    }
}

pub fn duopoly_outcome(market: &Market, profile: &DuopolyProfile) -> Result<DuopolyOutcome> {
    let induced = induce_market(market, profile)?;
    let scene = Scene::with_preferences(
        market,
        &induced.pricing,
        &induced.priorities,
        induced.preferences.clone(),
    );
    let objectives = vec![
        Objective::seller_revenue(&scene, 0, Goal::Min),
        Objective::seller_revenue(&scene, 0, Goal::Max),
        Objective::seller_revenue(&scene, 1, Goal::Min),
        Objective::seller_revenue(&scene, 1, Goal::Max),
    ];
    let results = oracle::extremize_many(&scene, None, &objectives)?;
    let take = |k: usize| -> (Rational, Allocation) {
        results[k].clone().expect("stable set is never empty")
    };
    let (min0, rep_min0) = take(0);
    let (max0, rep_max0) = take(1);
    let (min1, rep_min1) = take(2);
    let (max1, rep_max1) = take(3);
    Ok(DuopolyOutcome {
        seller_min: [min0, min1],
        seller_max: [max0, max1],
        min_representative: [rep_min0, rep_min1],
        max_representative: [rep_max0, rep_max1],
    })
}

/// Worst-case revenue of one seller only (cheaper inner loop for sweeps).
pub fn duopoly_worst_case(
    market: &Market,
    profile: &DuopolyProfile,
    seller: usize,
) -> Result<Rational> {
    let induced = induce_market(market, profile)?;
    let scene = Scene::with_preferences(
        market,
        &induced.pricing,
        &induced.priorities,
        induced.preferences.clone(),
    );
    let objectives = vec![Objective::seller_revenue(&scene, seller, Goal::Min)];
    let results = oracle::extremize_many(&scene, None, &objectives)?;
    Ok(results[0].clone().expect("stable set is never empty").0)
}

// ---------------------------------------------------------------------------
// The (s, t) family
// ---------------------------------------------------------------------------

/// The two-buyer four-item family: seller 1 owns the fractions (t of one
/// underlying good, s of the other), seller 2 the complements. Items whose
/// valuations vanish at the corners are dropped.
pub fn st_family_market(s: &Rational, t: &Rational) -> Result<Market> {
    let zero = Rational::zero();
    let one = Rational::one();
    if s < &zero || s > &one || t < &zero || t > &one {
        return Err(Error::OutOfRegime("s and t must lie in [0, 1]".into()));
    }
    let two = &one + &one;
    // rows: (buyer 1 value, buyer 2 value, seller)
    let spec: Vec<(String, Rational, Rational, usize)> = vec![
        ("g1".into(), s.clone(), two.clone() * s.clone(), 0),
        ("g2".into(), two.clone() * t.clone(), t.clone(), 0),
        ("g3".into(), two.clone() * (&one - t), &one - t, 1),
        ("g4".into(), &one - s, two.clone() * (&one - s), 1),
    ];
    let mut items = Vec::new();
    let mut v1 = Vec::new();
    let mut v2 = Vec::new();
    for (id, a, b, seller) in spec {
        if a.is_zero() && b.is_zero() {
            continue;
        }
        items.push(Item { id, seller });
        v1.push(a);
        v2.push(b);
    }
    Market::new(
        vec![
            Buyer {
                id: "b1".into(),
                budget: two.clone(),
            },
            Buyer {
                id: "b2".into(),
                budget: two,
            },
        ],
        vec![Seller { id: "s1".into() }, Seller { id: "s2".into() }],
        items,
        vec![v1, v2],
    )
}

/// Closed-form revenue of seller 1 under its aggressive deviation (raise
/// the report for buyer 1 to p, drop the one for buyer 2 below 1), valid in
/// the market-clearing regime of the family.
pub fn deviation_revenue_closed_form(s: &Rational, t: &Rational, p: &Rational) -> Rational {
    let two = rat(2, 1);
    let four = rat(4, 1);
    let eight_thirds = rat(8, 3);
    let four_thirds = rat(4, 3);
    two.clone() * s.clone() + four
        - (eight_thirds - two * t.clone()) * p.clone()
        - four_thirds / p.clone()
}

/// The same closed form, gated on the regime in which it equals the market
/// outcome: the clearing system must admit holdings in [0, 1].
pub fn deviation_revenue_formula(s: &Rational, t: &Rational, p: &Rational) -> Result<Rational> {
    let zero = Rational::zero();
    let one = Rational::one();
    if s < &zero || s > &one || t < &zero || t > &one {
        return Err(Error::OutOfRegime("s and t must lie in [0, 1]".into()));
    }
    if p <= &one {
        return Err(Error::OutOfRegime("the deviation needs p > 1".into()));
    }
    if t >= &rat(2, 3) {
        return Err(Error::OutOfRegime("the closed form needs t < 2/3".into()));
    }
    if s == &one || t == &zero {
        return Err(Error::OutOfRegime(
            "degenerate family corner: the clearing system loses an item".into(),
        ));
    }
    // Budget-depletion system for the deviated profile:
    //   2t p x2 + 2(1 - t) p + (1 - s) p x4 = 2   (buyer 1)
    //   2s + t (1 - x2) + 2 (1 - s)(1 - x4) = 2   (buyer 2)
    let two = rat(2, 1);
    let c1 = two.clone() / p.clone() - two.clone() * (&one - t);
    // from the second equation: t x2 + 2(1-s) x4 = t
    // eliminate x2: 3 (1-s) x4 = 2t - c1
    let x4 = (two.clone() * t.clone() - c1.clone()) / (rat(3, 1) * (&one - s));
    let x2 = (c1 - (&one - s) * x4.clone()) / (two.clone() * t.clone());
    for x in [&x2, &x4] {
        if x.is_negative() || x > &one {
            return Err(Error::OutOfRegime(format!(
                "clearing system infeasible at (s, t, p) = ({s}, {t}, {p})"
            )));
        }
    }
    Ok(deviation_revenue_closed_form(s, t, p))
}

// ---------------------------------------------------------------------------
// Nash check on a report grid
// ---------------------------------------------------------------------------

/// Default report grid: k/12 for k = 1..=36.
pub fn default_report_grid() -> Vec<Rational> {
    (1..=36).map(|k| rat(k, 12)).collect()
}

#[derive(Debug, Clone)]
pub enum NashVerdict {
    Pass,
    Fail {
        seller: usize,
        reports: Vec<Rational>,
        /// Worst-case revenue the deviation guarantees, versus the current
        /// worst case.
        guaranteed: Rational,
        current: Rational,
    },
}

/// Equivalence class of a deviating report against the opponent's fixed
/// report: everything strictly below collapses (the max and the preference
/// comparison are all that matter).
#[derive(Debug, PartialEq, Eq, Hash, Clone)]
enum ReportClass {
    Below,
    Equal,
    Above(Rational),
}

fn classify(report: &Rational, opponent: &Rational) -> ReportClass {
    match report.cmp(opponent) {
        std::cmp::Ordering::Less => ReportClass::Below,
        std::cmp::Ordering::Equal => ReportClass::Equal,
        std::cmp::Ordering::Greater => ReportClass::Above(report.clone()),
    }
}

/// Checks whether each seller's report is a best response on the grid:
/// FAIL returns a deviation whose worst-case revenue beats the seller's
/// current worst case. Grid points inducing the same instance are evaluated
/// once; evaluation runs in parallel chunks but the verdict is the first
/// profitable deviation in grid order, so runs are reproducible.
pub fn is_nash_on_grid(
    market: &Market,
    profile: &DuopolyProfile,
    grid: &[Rational],
) -> Result<NashVerdict> {
    use rayon::prelude::*;
    if market.num_sellers() != 2 {
        return Err(Error::NotDuopoly);
    }
    let n = market.num_buyers();
    let current = duopoly_outcome(market, profile)?;
    for seller in 0..2usize {
        let opponent: &Vec<Rational> = if seller == 0 { &profile.b } else { &profile.a };
        let own: &Vec<Rational> = if seller == 0 { &profile.a } else { &profile.b };
        let mut seen = std::collections::HashSet::new();
        let current_class: Vec<ReportClass> =
            (0..n).map(|i| classify(&own[i], &opponent[i])).collect();
        seen.insert(current_class);

        let mut combos: Vec<Vec<Rational>> = vec![Vec::new()];
        for _ in 0..n {
            let mut next = Vec::new();
            for partial in &combos {
                for g in grid {
                    let mut d = partial.clone();
                    d.push(g.clone());
                    next.push(d);
                }
            }
            combos = next;
        }
        let candidates: Vec<Vec<Rational>> = combos
            .into_iter()
            .filter(|reports| {
                let class: Vec<ReportClass> = (0..n)
                    .map(|i| classify(&reports[i], &opponent[i]))
                    .collect();
                seen.insert(class)
            })
            .collect();

        for chunk in candidates.chunks(64) {
            let results: Result<Vec<Rational>> = chunk
                .par_iter()
                .map(|reports| {
                    let deviated = if seller == 0 {
                        DuopolyProfile {
                            a: reports.clone(),
                            b: profile.b.clone(),
                        }
                    } else {
                        DuopolyProfile {
                            a: profile.a.clone(),
                            b: reports.clone(),
                        }
                    };
                    duopoly_worst_case(market, &deviated, seller)
                })
                .collect();
            for (reports, guaranteed) in chunk.iter().zip(results?) {
                if guaranteed > current.seller_min[seller] {
                    return Ok(NashVerdict::Fail {
                        seller,
                        reports: reports.clone(),
                        guaranteed,
                        current: current.seller_min[seller].clone(),
                    });
                }
            }
        }
    }
    Ok(NashVerdict::Pass)
}

/// The hypothesized equilibrium profile for s > 2/3, t < 1/3. Exploratory
/// only: callers label its output CONJECTURE and feed it to the grid check;
/// no equilibrium claim is made here.
pub fn conjectured_profile(s: &Rational, t: &Rational) -> Result<DuopolyProfile> {
    let one = Rational::one();
    if !(s > &rat(2, 3) && t < &rat(1, 3)) {
        return Err(Error::OutOfRegime(
            "the conjectured profile needs s > 2/3 and t < 1/3".into(),
        ));
    }
    let two_thirds = rat(2, 3);
    let one_plus_t = &one + t;
    let two_minus_s = rat(2, 1) - s.clone();
    let common = two_thirds
        * (one_plus_t.clone() * one_plus_t.clone() + two_minus_s.clone() * two_minus_s.clone());
    let a2 = common.clone() / (two_minus_s.clone() * one_plus_t.clone() * one_plus_t.clone());
    let b1 = common / (two_minus_s.clone() * two_minus_s * one_plus_t);
    Ok(DuopolyProfile {
        a: vec![one.clone(), a2],
        b: vec![b1, one],
    })
}
