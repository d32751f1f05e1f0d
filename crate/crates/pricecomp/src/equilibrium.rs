//! Competitive equilibria (numeric dynamics plus exact reconstruction),
//! maximin-equilibrium verification, uniqueness checking, and the scripted
//! best-response construction for the two-buyer/two-item market.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lp::{lp_solve, LinearProgram, LpStatus, Relation};
use crate::market::{
    is_natural, natural_priority, Allocation, Market, PricingMode, PricingProfile, PriorityProfile,
};
use crate::oracle;
use crate::rational::{from_f64_capped, snap_to_rational, to_f64, Rational};
use crate::revenue::max_revenue_lp;
use crate::stability::{fractional_gale_shapley, is_compatible, is_stable, Scene};

// ---------------------------------------------------------------------------
// Competitive equilibrium
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CompetitiveEquilibrium {
    /// Exact prices when reconstruction verified, otherwise the numeric
    /// prices rounded to rationals without verification.
    pub prices: Vec<Rational>,
    pub allocation: Allocation,
    pub utilities: Vec<Rational>,
    /// True when the returned prices and allocation passed the exact check.
    pub exact: bool,
    /// Residual of the numeric path (None when it converged to exactly 0).
    pub gap: Option<f64>,
    pub iterations: usize,
}

pub const CE_DEFAULT_TOLERANCE: f64 = 1e-9;
pub const CE_MAX_ITERATIONS: usize = 100_000;
pub const CE_DENOMINATOR_CAP: u64 = 1_000_000;

/// Proportional-response dynamics: buyers split budgets over items in
/// proportion to the utility each contributes; prices are the money
/// received. Converges for linear utilities; afterwards each price is
/// rounded by continued fractions and the result verified exactly.
pub fn competitive_equilibrium(market: &Market, tolerance: f64) -> Result<CompetitiveEquilibrium> {
    let n = market.num_buyers();
    let m = market.num_items();
    for i in 0..n {
        if !(0..m).any(|j| market.value(i, j).is_positive()) {
            return Err(Error::Validation(format!(
                "buyer {} values nothing",
                market.buyers[i].id
            )));
        }
        if !market.buyers[i].budget.is_positive() {
            return Err(Error::Validation(format!(
                "buyer {} has no budget",
                market.buyers[i].id
            )));
        }
    }

    let budgets: Vec<f64> = market.buyers.iter().map(|b| to_f64(&b.budget)).collect();
    let values: Vec<Vec<f64>> = market
        .valuations
        .iter()
        .map(|row| row.iter().map(to_f64).collect())
        .collect();

    // bids[i][j]: money buyer i places on item j.
    let mut bids = vec![vec![0.0f64; m]; n];
    for i in 0..n {
        let interested = (0..m).filter(|j| values[i][*j] > 0.0).count() as f64;
        for j in 0..m {
            if values[i][j] > 0.0 {
                bids[i][j] = budgets[i] / interested;
            }
        }
    }

    let mut gap = f64::INFINITY;
    let mut iterations = 0usize;
    let mut prices = vec![0.0f64; m];
    while iterations < CE_MAX_ITERATIONS {
        iterations += 1;
        for (j, p) in prices.iter_mut().enumerate() {
            *p = (0..n).map(|i| bids[i][j]).sum();
        }
        // utility at the induced allocation x = bid / price
        let mut utilities = vec![0.0f64; n];
        for i in 0..n {
            for j in 0..m {
                if bids[i][j] > 0.0 {
                    utilities[i] += values[i][j] * bids[i][j] / prices[j];
                }
            }
        }
        // gap: how far each buyer is from its best attainable rate
        gap = 0.0f64;
        for i in 0..n {
            let best_rate = (0..m)
                .filter(|j| values[i][*j] > 0.0)
                .map(|j| values[i][j] / prices[j])
                .fold(0.0f64, f64::max);
            gap = gap.max(budgets[i] * best_rate - utilities[i]);
        }
        if gap < tolerance {
            break;
        }
        let prev = bids.clone();
        for i in 0..n {
            for j in 0..m {
                if prev[i][j] > 0.0 {
                    bids[i][j] = budgets[i] * values[i][j] * prev[i][j] / prices[j] / utilities[i];
                }
            }
        }
    }
    if gap >= tolerance && gap.is_finite() {
        // fall through to reconstruction anyway; report failure if it does
        // not verify
    } else if !gap.is_finite() {
        return Err(Error::NoConvergence { gap });
    }

    // Exact reconstruction: snap each price to a simple nearby rational
    // (coarser tolerances snap harder), solve the demand-respecting clearing
    // system exactly, and verify. Equilibrium prices are unique, so any
    // snap that verifies is the equilibrium.
    for snap_tol in [1e-12, 1e-9, 1e-7, 1e-5, 1e-3] {
        let Some(exact_prices) = prices
            .iter()
            .map(|p| snap_to_rational(*p, CE_DENOMINATOR_CAP, snap_tol))
            .collect::<Option<Vec<Rational>>>()
        else {
            continue;
        };
        if !exact_prices.iter().all(|p| p.is_positive()) {
            continue;
        }
        if let Some(allocation) = clearing_allocation(market, &exact_prices)? {
            let (ok, _) = verify_ce(market, &exact_prices, &allocation);
            if ok {
                let utilities = (0..n)
                    .map(|i| allocation.buyer_utility(market, i))
                    .collect();
                return Ok(CompetitiveEquilibrium {
                    prices: exact_prices,
                    allocation,
                    utilities,
                    exact: true,
                    gap: None,
                    iterations,
                });
            }
        }
    }
    if gap >= tolerance {
        return Err(Error::NoConvergence { gap });
    }
    // Numeric result without exact certification.
    let approx_prices: Vec<Rational> = prices
        .iter()
        .map(|p| from_f64_capped(*p, CE_DENOMINATOR_CAP).unwrap_or_else(Rational::zero))
        .collect();
    let mut allocation = Allocation::zeros(market);
    for i in 0..n {
        for j in 0..m {
            if bids[i][j] > 0.0 && prices[j] > 0.0 {
                allocation.x[i][j] = from_f64_capped(bids[i][j] / prices[j], CE_DENOMINATOR_CAP)
                    .unwrap_or_else(Rational::zero);
            }
        }
    }
    let utilities = (0..n)
        .map(|i| allocation.buyer_utility(market, i))
        .collect();
    Ok(CompetitiveEquilibrium {
        prices: approx_prices,
        allocation,
        utilities,
        exact: false,
        gap: Some(gap),
        iterations,
    })
}

/// Exact feasibility system for candidate equilibrium prices: every buyer
/// spends its whole budget inside its maximum bang-per-buck demand set and
/// every item clears. Returns a solution if one exists.
fn clearing_allocation(market: &Market, prices: &[Rational]) -> Result<Option<Allocation>> {
    let n = market.num_buyers();
    let m = market.num_items();
    let mut vars = Vec::new();
    let mut var_of = vec![vec![usize::MAX; m]; n];
    for i in 0..n {
        let best = (0..m)
            .filter(|j| market.value(i, *j).is_positive())
            .map(|j| market.value(i, j).clone() / prices[j].clone())
            .max()
            .expect("buyer values something");
        for j in 0..m {
            if market.value(i, j).is_positive()
                && market.value(i, j).clone() / prices[j].clone() == best
            {
                var_of[i][j] = vars.len();
                vars.push((i, j));
            }
        }
    }
    let mut lp = LinearProgram::new(vec![Rational::zero(); vars.len()]);
    for j in 0..m {
        let mut row = vec![Rational::zero(); vars.len()];
        let mut any = false;
        for i in 0..n {
            if var_of[i][j] != usize::MAX {
                row[var_of[i][j]] = Rational::one();
                any = true;
            }
        }
        if !any {
            return Ok(None); // item in nobody's demand set cannot clear
        }
        lp.constrain(row, Relation::Eq, Rational::one());
    }
    for i in 0..n {
        let mut row = vec![Rational::zero(); vars.len()];
        for j in 0..m {
            if var_of[i][j] != usize::MAX {
                row[var_of[i][j]] = prices[j].clone();
            }
        }
        lp.constrain(row, Relation::Eq, market.buyers[i].budget.clone());
    }
    let sol = lp_solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Ok(None);
    }
    let mut allocation = Allocation::zeros(market);
    for (k, (i, j)) in vars.iter().enumerate() {
        allocation.x[*i][*j] = sol.values[k].clone();
    }
    Ok(Some(allocation))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CeViolation {
    ItemNotCleared { item: usize },
    BudgetExceeded { buyer: usize },
    BudgetNotDepleted { buyer: usize },
    NotBestRate { buyer: usize, item: usize },
    ValuelessPurchase { buyer: usize, item: usize },
}

/// Exact verification of a competitive equilibrium candidate: market
/// clearing, budget depletion, and purchases only at the buyer's highest
/// bang-per-buck.
pub fn verify_ce(
    market: &Market,
    prices: &[Rational],
    allocation: &Allocation,
) -> (bool, Option<CeViolation>) {
    let n = market.num_buyers();
    let m = market.num_items();
    for j in 0..m {
        if allocation.item_total(j) != Rational::one() {
            return (false, Some(CeViolation::ItemNotCleared { item: j }));
        }
    }
    for i in 0..n {
        let spend: Rational = (0..m)
            .map(|j| prices[j].clone() * allocation.get(i, j).clone())
            .sum();
        if spend > market.buyers[i].budget {
            return (false, Some(CeViolation::BudgetExceeded { buyer: i }));
        }
        if spend < market.buyers[i].budget {
            return (false, Some(CeViolation::BudgetNotDepleted { buyer: i }));
        }
        let best = (0..m)
            .filter(|j| market.value(i, *j).is_positive() && prices[*j].is_positive())
            .map(|j| market.value(i, j).clone() / prices[j].clone())
            .max();
        for j in 0..m {
            if !allocation.get(i, j).is_positive() {
                continue;
            }
            if !market.value(i, j).is_positive() {
                return (
                    false,
                    Some(CeViolation::ValuelessPurchase { buyer: i, item: j }),
                );
            }
            let rate = market.value(i, j).clone() / prices[j].clone();
            if Some(&rate) != best.as_ref() {
                return (false, Some(CeViolation::NotBestRate { buyer: i, item: j }));
            }
        }
    }
    (true, None)
}

// ---------------------------------------------------------------------------
// Worst-case seller revenue and maximin verification
// ---------------------------------------------------------------------------

/// Exact minimum of one seller's revenue over all revenue-optimal stable
/// allocations (the quantity a deviating seller can guarantee itself).
pub fn seller_min_revenue(
    market: &Market,
    pricing: &PricingProfile,
    seller: usize,
) -> Result<Rational> {
    if pricing.mode != PricingMode::Uniform {
        return Err(Error::NotUniform);
    }
    let (_, optimal) = max_revenue_lp(market, pricing)?;
    let tied = PriorityProfile::all_tied(market);
    let scene = Scene::new(market, pricing, &tied);
    let (lo, _) = oracle::seller_revenue_extrema(&scene, seller, Some(&optimal))?;
    Ok(lo)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MaximinOutcome {
    Certified,
    Refuted,
    Unknown,
}

/// How a single deviation was dispatched.
#[derive(Debug, Clone)]
pub enum DeviationEvidence {
    /// The deviator cannot even gross more than it currently earns.
    PriceCap,
    /// A compatible allocation under the deviation in which every other
    /// seller's item is fully sold; by the covering property the deviator's
    /// worst case is bounded by optimal revenue minus the others' take.
    Witness {
        allocation: Allocation,
        bound: Rational,
    },
    /// Exact worst-case revenue from the enumeration oracle.
    Oracle { min_revenue: Rational },
}

#[derive(Debug, Clone)]
pub struct DeviationReport {
    pub seller: usize,
    pub prices: Vec<Rational>,
    pub profitable: Option<bool>,
    pub evidence: Option<DeviationEvidence>,
}

#[derive(Debug, Clone)]
pub struct MaximinVerdict {
    pub outcome: MaximinOutcome,
    pub reports: Vec<DeviationReport>,
}

/// Default multiplicative deviation grid per owned item.
pub fn default_deviation_factors() -> Vec<Rational> {
    [
        (1, 4),
        (1, 3),
        (1, 2),
        (2, 3),
        (1, 1),
        (4, 3),
        (3, 2),
        (2, 1),
        (3, 1),
        (4, 1),
    ]
    .iter()
    .map(|(p, q)| Rational::new((*p).into(), (*q).into()))
    .collect()
}

pub const MAX_DEVIATIONS_PER_SELLER: usize = 10_000;

/// Checks the maximin property of (pricing, allocation) against every
/// deviation on the grid (plus any user-supplied deviations): certified
/// when each one is provably unprofitable, refuted on an exact profitable
/// one, unknown otherwise.
pub fn verify_maximin(
    market: &Market,
    pricing: &PricingProfile,
    allocation: &Allocation,
    factors: &[Rational],
    user_deviations: &[(usize, Vec<Rational>)],
) -> Result<MaximinVerdict> {
    if pricing.mode != PricingMode::Uniform {
        return Err(Error::NotUniform);
    }
    let tied = PriorityProfile::all_tied(market);
    let scene = Scene::new(market, pricing, &tied);
    if !is_stable(&scene, allocation)?.stable {
        return Err(Error::Validation(
            "maximin check needs a stable allocation".into(),
        ));
    }
    let (_, optimal) = max_revenue_lp(market, pricing)?;
    let (per_seller, total) = crate::market::revenue(market, pricing, allocation);
    if total != optimal {
        return Err(Error::Validation(
            "maximin check needs a revenue-optimal allocation".into(),
        ));
    }

    let mut reports = Vec::new();
    let mut outcome = MaximinOutcome::Certified;

    for seller in 0..market.num_sellers() {
        let owned = market.seller_items(seller);
        if owned.is_empty() {
            continue;
        }
        let current = per_seller[seller].clone();
        let mut deviations: Vec<Vec<Rational>> = Vec::new();
        // full multiplicative grid over the owned items
        let mut stack = vec![Vec::new()];
        for _ in &owned {
            let mut next = Vec::new();
            for partial in &stack {
                for f in factors {
                    let mut d: Vec<Rational> = partial.clone();
                    d.push(f.clone());
                    next.push(d);
                }
            }
            stack = next;
            if stack.len() > MAX_DEVIATIONS_PER_SELLER {
                stack.truncate(MAX_DEVIATIONS_PER_SELLER);
            }
        }
        for combo in stack {
            if combo.iter().all(|f| f.is_one()) {
                continue;
            }
            let mut item_prices: Vec<Rational> = (0..market.num_items())
                .map(|j| pricing.price(0, j).clone())
                .collect();
            for (k, j) in owned.iter().enumerate() {
                item_prices[*j] *= combo[k].clone();
            }
            deviations.push(item_prices);
        }
        for (s, prices) in user_deviations {
            if *s == seller {
                deviations.push(prices.clone());
            }
        }

        for item_prices in deviations {
            let report = assess_deviation(market, allocation, seller, &current, item_prices)?;
            match report.profitable {
                Some(true) => outcome = MaximinOutcome::Refuted,
                Some(false) => {}
                None => {
                    if outcome == MaximinOutcome::Certified {
                        outcome = MaximinOutcome::Unknown;
                    }
                }
            }
            let refuted = report.profitable == Some(true);
            reports.push(report);
            if refuted {
                return Ok(MaximinVerdict {
                    outcome: MaximinOutcome::Refuted,
                    reports,
                });
            }
        }
    }
    Ok(MaximinVerdict { outcome, reports })
}

fn assess_deviation(
    market: &Market,
    equilibrium: &Allocation,
    seller: usize,
    current: &Rational,
    item_prices: Vec<Rational>,
) -> Result<DeviationReport> {
    let owned = market.seller_items(seller);
    let new_pricing = match PricingProfile::uniform(market, item_prices.clone()) {
        Ok(p) => p,
        Err(_) => {
            // e.g. a zero price on a valued item: not an admissible pricing
            return Ok(DeviationReport {
                seller,
                prices: item_prices,
                profitable: Some(false),
                evidence: Some(DeviationEvidence::PriceCap),
            });
        }
    };

    // Gross cap: the deviator can never collect more than its own prices.
    let cap: Rational = owned.iter().map(|j| new_pricing.price(0, *j).clone()).sum();
    if cap <= *current {
        return Ok(DeviationReport {
            seller,
            prices: item_prices,
            profitable: Some(false),
            evidence: Some(DeviationEvidence::PriceCap),
        });
    }

    // Witness route: zero out some subset of the deviator's items from the
    // equilibrium allocation; if the remainder is compatible at the new
    // prices, the covering property pins the deviator's worst case at
    // R(p') minus the other sellers' full take.
    let (_, new_optimal) = max_revenue_lp(market, &new_pricing)?;
    let others_take: Rational = (0..market.num_items())
        .filter(|j| market.items[*j].seller != seller)
        .map(|j| new_pricing.price(0, j).clone())
        .sum();
    let bound = new_optimal.clone() - others_take;
    if bound <= *current {
        let tied = PriorityProfile::all_tied(market);
        let new_scene = Scene::new(market, &new_pricing, &tied);
        let mut witnesses: Vec<Allocation> = Vec::new();
        for mask in 0..(1usize << owned.len().min(12)) {
            let mut w = equilibrium.clone();
            for (k, j) in owned.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    for i in 0..market.num_buyers() {
                        w.x[i][*j] = Rational::zero();
                    }
                }
            }
            witnesses.push(w);
        }
        if let Ok(solved) = fractional_gale_shapley(&new_scene) {
            witnesses.push(solved);
        }
        for w in witnesses {
            let others_full = (0..market.num_items())
                .filter(|j| market.items[*j].seller != seller)
                .all(|j| w.item_total(j) == Rational::one());
            if others_full && is_compatible(&new_scene, &w).0 {
                return Ok(DeviationReport {
                    seller,
                    prices: item_prices,
                    profitable: Some(false),
                    evidence: Some(DeviationEvidence::Witness {
                        allocation: w,
                        bound,
                    }),
                });
            }
        }
    }

    // Exact route.
    match seller_min_revenue(market, &new_pricing, seller) {
        Ok(min_revenue) => {
            let profitable = min_revenue > *current;
            Ok(DeviationReport {
                seller,
                prices: item_prices,
                profitable: Some(profitable),
                evidence: Some(DeviationEvidence::Oracle { min_revenue }),
            })
        }
        Err(Error::SizeCapExceeded(_)) => Ok(DeviationReport {
            seller,
            prices: item_prices,
            profitable: None,
            evidence: None,
        }),
        Err(e) => Err(e),
    }
}

// ---------------------------------------------------------------------------
// Uniqueness
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UniquenessStatus {
    /// Strict natural priorities and strict preferences: the stable
    /// allocation is provably unique.
    UniqueGuaranteed,
    NotApplicable,
}

#[derive(Debug, Clone)]
pub struct UniquenessReport {
    pub status: UniquenessStatus,
    /// Exact census of the stable set when the instance fits the oracle.
    pub singleton: Option<Option<Allocation>>,
}

pub fn check_uniqueness(
    market: &Market,
    pricing: &PricingProfile,
    priorities: &PriorityProfile,
) -> Result<UniquenessReport> {
    let scene = Scene::new(market, pricing, priorities);
    let strict_preferences = (0..market.num_buyers()).all(|i| scene.preferences.is_strict(i));
    let strict_priorities = (0..market.num_items()).all(|j| priorities.is_strict(j));
    let natural = is_natural(market, priorities, pricing);
    let status = if strict_preferences && strict_priorities && natural {
        UniquenessStatus::UniqueGuaranteed
    } else {
        UniquenessStatus::NotApplicable
    };
    let singleton = match oracle::stable_set_singleton(&scene) {
        Ok(s) => Some(s),
        Err(Error::SizeCapExceeded(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(UniquenessReport { status, singleton })
}

// ---------------------------------------------------------------------------
// Best response in the two-buyer/two-item no-equilibrium market
// ---------------------------------------------------------------------------

/// The fixed 2x2 market: item 1 (seller 1) valued (1, 2), item 2 (seller 2)
/// valued (2, 1), budgets 2 and 2.
pub fn symmetric_two_item_market() -> Market {
    use crate::market::{Buyer, Item, Seller};
    use crate::rational::int;
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
        ],
        vec![vec![int(1), int(2)], vec![int(2), int(1)]],
    )
    .unwrap()
}

#[derive(Debug, Clone)]
pub struct BestResponse {
    pub pricing: PricingProfile,
    pub priorities: PriorityProfile,
    /// Exact worst-case revenue of seller 1 over all stable allocations at
    /// the response; always strictly above 2.
    pub guaranteed_revenue: Rational,
}

/// Given seller 2's personalized prices for item 2, seller 1 prices item 1
/// so that its revenue exceeds 2 over every stable allocation. Case split
/// on (p12, p22); epsilon defaults to 1/10 and shrinks until the strict
/// inequalities of the construction hold.
pub fn table1_best_response(p12: &Rational, p22: &Rational) -> Result<BestResponse> {
    let market = symmetric_two_item_market();
    if !p12.is_positive() || !p22.is_positive() {
        return Err(Error::InvalidPrices(
            "item 2 prices must be positive (both buyers value it)".into(),
        ));
    }
    let one = Rational::one();
    let two = &one + &one;
    let four = &two + &two;

    let (p11, p21) = if p22 > &one {
        // both buyers strictly prefer item 1; the poorer of them cannot
        // finish it alone
        (p12.clone() / four.clone(), one.clone() + p22.clone())
    } else if p12 < &two {
        // seller 2 grosses under 2; absorb the leftover budgets
        (four.clone(), four.clone())
    } else if p12 > &four {
        // buyer 1 depletes on item 1 but cannot buy it whole; buyer 2 mops up
        let mut eps = Rational::new(1.into(), 10.into());
        while &two + &eps >= p12.clone() / two.clone() {
            eps /= two.clone();
        }
        (&two + &eps, &two + &eps)
    } else if p12 > &two {
        // p12 in (2, 4]
        let mut eps = Rational::new(1.into(), 10.into());
        loop {
            let keep = (&one - &eps) * (&one - &eps) * p12.clone();
            if keep > two {
                break;
            }
            eps /= two.clone();
        }
        (
            (&one - &eps) / two.clone() * p12.clone(),
            two.clone() / eps.clone(),
        )
    } else {
        // p12 == 2, p22 <= 1: strict preferences and priorities force the
        // unique stable allocation to deplete both budgets while seller 2
        // grosses strictly under 2
        let eps = Rational::new(1.into(), 10.into());
        (eps.clone(), one.clone() / eps)
    };

    let pricing = PricingProfile::personalized(
        &market,
        vec![
            vec![p11.clone(), p12.clone()],
            vec![p21.clone(), p22.clone()],
        ],
    )?;
    let priorities = natural_priority(&market, &pricing);
    let scene = Scene::new(&market, &pricing, &priorities);
    let summary = oracle::stable_set_extrema(&scene)?;
    let guaranteed = summary.per_seller[0].min.clone();
    if guaranteed <= two {
        return Err(Error::InternalInconsistency(format!(
            "best response guarantees only {guaranteed} at (p12, p22) = ({p12}, {p22})"
        )));
    }
    Ok(BestResponse {
        pricing,
        priorities,
        guaranteed_revenue: guaranteed,
    })
}

/// Exact utility range of one buyer over all equilibrium allocations at
/// given prices (used to confirm utility invariance across equilibria).
pub fn ce_utility_range(
    market: &Market,
    prices: &[Rational],
    buyer: usize,
) -> Result<Option<(Rational, Rational)>> {
    let n = market.num_buyers();
    let m = market.num_items();
    let mut vars = Vec::new();
    let mut var_of = vec![vec![usize::MAX; m]; n];
    for i in 0..n {
        let best = (0..m)
            .filter(|j| market.value(i, *j).is_positive())
            .map(|j| market.value(i, j).clone() / prices[j].clone())
            .max();
        let Some(best) = best else { continue };
        for j in 0..m {
            if market.value(i, j).is_positive()
                && market.value(i, j).clone() / prices[j].clone() == best
            {
                var_of[i][j] = vars.len();
                vars.push((i, j));
            }
        }
    }
    let build = |objective: Vec<Rational>| {
        let mut lp = LinearProgram::new(objective);
        for j in 0..m {
            let mut row = vec![Rational::zero(); vars.len()];
            for i in 0..n {
                if var_of[i][j] != usize::MAX {
                    row[var_of[i][j]] = Rational::one();
                }
            }
            lp.constrain(row, Relation::Eq, Rational::one());
        }
        for i in 0..n {
            let mut row = vec![Rational::zero(); vars.len()];
            for j in 0..m {
                if var_of[i][j] != usize::MAX {
                    row[var_of[i][j]] = prices[j].clone();
                }
            }
            lp.constrain(row, Relation::Eq, market.buyers[i].budget.clone());
        }
        lp
    };
    let coeffs: Vec<Rational> = vars
        .iter()
        .map(|(i, j)| {
            if *i == buyer {
                market.value(*i, *j).clone()
            } else {
                Rational::zero()
            }
        })
        .collect();
    let max_lp = build(coeffs.clone());
    let hi = lp_solve(&max_lp)?;
    if hi.status != LpStatus::Optimal {
        return Ok(None);
    }
    let min_lp = build(coeffs.iter().map(|c| -c.clone()).collect());
    let lo = lp_solve(&min_lp)?;
    Ok(Some((-lo.objective_value, hi.objective_value)))
}
