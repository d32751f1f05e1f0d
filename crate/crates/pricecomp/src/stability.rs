//! Stability and compatibility predicates, the fractional deferred-acceptance
//! solver with proposal-cycle detection and simultaneous rollback, and the
//! common-part reduction used by the uniqueness analysis.

use num_traits::{One, Signed, Zero};
use serde_json::json;

use crate::error::{Error, Result};
use crate::market::{
    available_fraction, Allocation, Market, PreferenceProfile, PricingProfile, PriorityProfile,
};
use crate::rational::{render_rational, Rational};

/// Bundles the fixed inputs every predicate needs. Preferences default to
/// the bang-per-buck order; the duopoly game overrides them.
#[derive(Debug, Clone)]
pub struct Scene<'a> {
    pub market: &'a Market,
    pub pricing: &'a PricingProfile,
    pub priorities: &'a PriorityProfile,
    pub preferences: PreferenceProfile,
}

impl<'a> Scene<'a> {
    pub fn new(
        market: &'a Market,
        pricing: &'a PricingProfile,
        priorities: &'a PriorityProfile,
    ) -> Self {
        let preferences = PreferenceProfile::from_bang_per_buck(market, pricing);
        Scene {
            market,
            pricing,
            priorities,
            preferences,
        }
    }

    pub fn with_preferences(
        market: &'a Market,
        pricing: &'a PricingProfile,
        priorities: &'a PriorityProfile,
        preferences: PreferenceProfile,
    ) -> Self {
        Scene {
            market,
            pricing,
            priorities,
            preferences,
        }
    }

    pub fn price(&self, i: usize, j: usize) -> &Rational {
        self.pricing.price(i, j)
    }

    pub fn valued(&self, i: usize, j: usize) -> bool {
        self.market.value(i, j).is_positive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationReason {
    UnspentBudgetAvailableItem,
    PreferredItemAvailable,
    BudgetExceeded,
    ValuelessPurchase,
}

#[derive(Debug, Clone)]
pub struct Violation {
    pub buyer: usize,
    pub item: usize,
    pub reason: ViolationReason,
}

#[derive(Debug, Clone)]
pub struct BuyerRecord {
    /// Minimum bang-per-buck among bought items; None encodes +infinity
    /// (the buyer bought nothing).
    pub min_bang_per_buck: Option<Rational>,
    pub budget_spent: Rational,
    pub budget_depleted: bool,
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub stable: bool,
    pub buyers: Vec<BuyerRecord>,
    pub violations: Vec<Violation>,
}

impl StabilityReport {
    pub fn to_json(&self, market: &Market) -> serde_json::Value {
        json!({
            "stable": self.stable,
            "buyers": self.buyers.iter().enumerate().map(|(i, b)| json!({
                "id": market.buyers[i].id,
                "min_bang_per_buck": b.min_bang_per_buck.as_ref().map(render_rational),
                "budget_spent": render_rational(&b.budget_spent),
                "budget_depleted": b.budget_depleted,
            })).collect::<Vec<_>>(),
            "violations": self.violations.iter().map(|v| json!({
                "buyer": market.buyers[v.buyer].id,
                "item": market.items[v.item].id,
                "reason": match v.reason {
                    ViolationReason::UnspentBudgetAvailableItem => "UNSPENT_BUDGET_AVAILABLE_ITEM",
                    ViolationReason::PreferredItemAvailable => "PREFERRED_ITEM_AVAILABLE",
                    ViolationReason::BudgetExceeded => "BUDGET_EXCEEDED",
                    ViolationReason::ValuelessPurchase => "VALUELESS_PURCHASE",
                },
            })).collect::<Vec<_>>(),
        })
    }
}

/// Witness for a compatibility failure: the buyer holds `bought` but a
/// strictly better `available` item has residual availability.
#[derive(Debug, Clone)]
pub struct IncompatibilityWitness {
    pub buyer: usize,
    pub bought: Option<usize>,
    pub available: Option<usize>,
}

/// A buyer's spent money must buy an optimal bundle over available items:
/// budget-feasible, only valued items, and no bought item is strictly worse
/// than an item with residual availability.
pub fn is_compatible(
    scene: &Scene,
    allocation: &Allocation,
) -> (bool, Option<IncompatibilityWitness>) {
    let n = scene.market.num_buyers();
    let m = scene.market.num_items();
    for i in 0..n {
        let spend = allocation.buyer_spend(scene.pricing, i);
        if spend > scene.market.buyers[i].budget {
            return (
                false,
                Some(IncompatibilityWitness {
                    buyer: i,
                    bought: None,
                    available: None,
                }),
            );
        }
        for j in 0..m {
            if allocation.get(i, j).is_positive() && !scene.valued(i, j) {
                return (
                    false,
                    Some(IncompatibilityWitness {
                        buyer: i,
                        bought: Some(j),
                        available: None,
                    }),
                );
            }
        }
        // Residually available items: a positive fraction beyond the buyer's
        // own holding could still be obtained.
        for j_avail in 0..m {
            if !scene.valued(i, j_avail) {
                continue;
            }
            let avail = available_fraction(scene.priorities, allocation, i, j_avail);
            if avail <= *allocation.get(i, j_avail) {
                continue;
            }
            for j_bought in 0..m {
                if allocation.get(i, j_bought).is_positive()
                    && scene.preferences.strictly_prefers(i, j_avail, j_bought)
                {
                    return (
                        false,
                        Some(IncompatibilityWitness {
                            buyer: i,
                            bought: Some(j_bought),
                            available: Some(j_avail),
                        }),
                    );
                }
            }
        }
    }
    (true, None)
}

/// Direct check of the stability conditions, cross-validated against the
/// compatible-plus-depletion characterization. Disagreement between the two
/// routes is an internal error.
pub fn is_stable(scene: &Scene, allocation: &Allocation) -> Result<StabilityReport> {
    let n = scene.market.num_buyers();
    let m = scene.market.num_items();
    let one = Rational::one();
    let mut violations = Vec::new();
    let mut buyers = Vec::with_capacity(n);

    for i in 0..n {
        let spend = allocation.buyer_spend(scene.pricing, i);
        let depleted = spend == scene.market.buyers[i].budget;
        let min_bpb = (0..m)
            .filter(|j| allocation.get(i, *j).is_positive())
            .filter_map(|j| scene.pricing.bang_per_buck(scene.market, i, j))
            .min();
        buyers.push(BuyerRecord {
            min_bang_per_buck: min_bpb,
            budget_spent: spend.clone(),
            budget_depleted: depleted,
        });

        if spend > scene.market.buyers[i].budget {
            violations.push(Violation {
                buyer: i,
                item: 0,
                reason: ViolationReason::BudgetExceeded,
            });
            continue;
        }
        for j in 0..m {
            if allocation.get(i, j).is_positive() && !scene.valued(i, j) {
                violations.push(Violation {
                    buyer: i,
                    item: j,
                    reason: ViolationReason::ValuelessPurchase,
                });
            }
        }
        for j in 0..m {
            if !scene.valued(i, j) || allocation.get(i, j) >= &one {
                continue;
            }
            // Route (b): item fully allocated and every holder weakly
            // prioritized over i.
            let fully = allocation.item_total(j) == one;
            let holders_weakly_above = (0..n).all(|h| {
                h == i
                    || !allocation.get(h, j).is_positive()
                    || scene.priorities.weakly_above(j, h, i)
            });
            if fully && holders_weakly_above {
                continue;
            }
            // Route (a): j no better than every bought item, budget depleted.
            let j_not_preferred = (0..m).all(|b| {
                !allocation.get(i, b).is_positive() || scene.preferences.weakly_prefers(i, b, j)
            });
            if j_not_preferred && depleted {
                continue;
            }
            violations.push(Violation {
                buyer: i,
                item: j,
                reason: if j_not_preferred {
                    ViolationReason::UnspentBudgetAvailableItem
                } else {
                    ViolationReason::PreferredItemAvailable
                },
            });
        }
    }

    let stable = violations.is_empty();

    // Cross-check: stable iff compatible and each buyer either depletes its
    // budget or already holds everything available to it.
    let (compatible, _) = is_compatible(scene, allocation);
    let lemma_side = compatible
        && (0..n).all(|i| {
            buyers[i].budget_depleted
                || (0..m).all(|j| {
                    !scene.valued(i, j)
                        || available_fraction(scene.priorities, allocation, i, j)
                            <= *allocation.get(i, j)
                })
        });
    if stable != lemma_side {
        return Err(Error::InternalInconsistency(format!(
            "direct={stable} characterization={lemma_side}"
        )));
    }

    Ok(StabilityReport {
        stable,
        buyers,
        violations,
    })
}

// ---------------------------------------------------------------------------
// Fractional deferred-acceptance solver
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default)]
pub struct SolveOptions {
    /// Re-check compatibility after every main-loop round (slow; used by
    /// property tests).
    pub check_each_round: bool,
}

/// Which term of the scaling factor bound a resolved proposal cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleBinding {
    /// The initiating buyer's budget hits zero.
    Budget,
    /// Some cycle buyer's holding hits zero and it leaves the item.
    Holding,
}

#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub rounds: usize,
    pub proposals: usize,
    pub cycles_resolved: usize,
    pub cycle_bindings: Vec<CycleBinding>,
    /// Termination events: active-buyer count drops, item fills for the
    /// first time, buyer leaves a temporary buyer set.
    pub events_active_drop: usize,
    pub events_item_filled: usize,
    pub events_left_item: usize,
}

struct Solver<'s, 'a> {
    scene: &'s Scene<'a>,
    x: Vec<Vec<Rational>>,
    budget: Vec<Rational>,
    proposable: Vec<Vec<bool>>,
    /// arrival[item][buyer]: stamp of the buyer's first proposal to the item.
    arrival: Vec<Vec<Option<u64>>>,
    ever_full: Vec<bool>,
    stamp: u64,
    stats: SolveStats,
}

struct UpdateRecord {
    item: usize,
    full_before: bool,
    /// Buyers whose holding shrank, with the transferred amount.
    donors: Vec<(usize, Rational)>,
    leavers: Vec<usize>,
}

#[derive(Clone)]
struct Snapshot {
    x: Vec<Vec<Rational>>,
    budget: Vec<Rational>,
}

impl<'s, 'a> Solver<'s, 'a> {
    fn new(scene: &'s Scene<'a>) -> Self {
        let n = scene.market.num_buyers();
        let m = scene.market.num_items();
        let proposable = (0..n)
            .map(|i| (0..m).map(|j| scene.valued(i, j)).collect())
            .collect();
        Solver {
            scene,
            x: vec![vec![Rational::zero(); m]; n],
            budget: scene
                .market
                .buyers
                .iter()
                .map(|b| b.budget.clone())
                .collect(),
            proposable,
            arrival: vec![vec![None; n]; m],
            ever_full: vec![false; m],
            stamp: 0,
            stats: SolveStats::default(),
        }
    }

    fn item_total(&self, j: usize) -> Rational {
        self.x.iter().map(|row| row[j].clone()).sum()
    }

    fn active(&self, i: usize) -> bool {
        self.budget[i].is_positive() && self.proposable[i].iter().any(|p| *p)
    }

    fn active_count(&self) -> usize {
        (0..self.x.len()).filter(|i| self.active(*i)).count()
    }

    /// Highest-preference proposable item, ties to the smallest index.
    fn best_proposable(&self, i: usize) -> Option<usize> {
        let mut best: Option<(usize, usize)> = None;
        for j in 0..self.proposable[i].len() {
            if !self.proposable[i][j] {
                continue;
            }
            let rank = self
                .scene
                .preferences
                .rank(i, j)
                .expect("proposable implies valued");
            if best.map(|(r, _)| rank < r).unwrap_or(true) {
                best = Some((rank, j));
            }
        }
        best.map(|(_, j)| j)
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot {
            x: self.x.clone(),
            budget: self.budget.clone(),
        }
    }

    /// One proposal: reallocate item j among its current holders plus the
    /// proposer, filling demands in priority order (ties favor earlier
    /// arrivals), then refresh non-proposability if the item is full.
    fn normal_update(&mut self, i: usize, j: usize) -> Result<UpdateRecord> {
        let n = self.x.len();
        let full_before = self.item_total(j) == Rational::one();
        if self.arrival[j][i].is_none() {
            self.arrival[j][i] = Some(self.stamp);
            self.stamp += 1;
        }
        let price = self.scene.price(i, j).clone();
        let demand_i =
            (self.budget[i].clone() / price.clone() + self.x[i][j].clone()).min(Rational::one());

        let mut candidates: Vec<usize> = (0..n)
            .filter(|c| *c == i || self.x[*c][j].is_positive())
            .collect();
        candidates.sort_by_key(|c| {
            (
                self.scene.priorities.rank(j, *c),
                self.arrival[j][*c].unwrap_or(u64::MAX),
            )
        });

        let mut remaining = Rational::one();
        let mut donors = Vec::new();
        let mut leavers = Vec::new();
        for c in candidates {
            let demand = if c == i {
                demand_i.clone()
            } else {
                self.x[c][j].clone()
            };
            let give = demand.min(remaining.clone());
            remaining -= give.clone();
            let old = std::mem::replace(&mut self.x[c][j], give.clone());
            if c == i {
                let gained = give - old;
                if !gained.is_positive() {
                    return Err(Error::AssertionFailed(
                        "proposer gained nothing; stale proposability".into(),
                    ));
                }
                self.budget[i] -= self.scene.price(i, j).clone() * gained;
                if self.budget[i].is_negative() {
                    return Err(Error::AssertionFailed("budget went negative".into()));
                }
            } else if give < old {
                let lost = old - give.clone();
                self.budget[c] += self.scene.price(c, j).clone() * lost.clone();
                donors.push((c, lost));
                if give.is_zero() {
                    leavers.push(c);
                    self.stats.events_left_item += 1;
                }
            }
        }
        self.stats.proposals += 1;

        if self.item_total(j) == Rational::one() {
            if !self.ever_full[j] {
                self.ever_full[j] = true;
                self.stats.events_item_filled += 1;
            }
            self.refresh_marking(j);
        }
        Ok(UpdateRecord {
            item: j,
            full_before,
            donors,
            leavers,
        })
    }

    /// For a fully allocated item, buyers at or below the lowest-priority
    /// holder can never obtain any of it again.
    fn refresh_marking(&mut self, j: usize) {
        let lowest = (0..self.x.len())
            .filter(|c| self.x[*c][j].is_positive())
            .map(|c| self.scene.priorities.rank(j, c))
            .max()
            .expect("full item has holders");
        for b in 0..self.x.len() {
            if self.scene.priorities.rank(j, b) >= lowest {
                self.proposable[b][j] = false;
            }
        }
    }

    fn run(&mut self, opts: SolveOptions) -> Result<()> {
        let n = self.x.len();
        let m = self.proposable.first().map(|r| r.len()).unwrap_or(0);
        let round_cap = m + n * m + n * (1 + n * m);
        let per_round_cap = n * (n + m);

        while let Some(proposer) = (0..n).find(|i| self.active(*i)) {
            self.stats.rounds += 1;
            if self.stats.rounds > round_cap {
                return Err(Error::EventBudgetExceeded(format!(
                    "more than {round_cap} main-loop rounds"
                )));
            }
            let active_before = self.active_count();
            let item = self
                .best_proposable(proposer)
                .expect("active buyer has an item");

            let mut log: Vec<(usize, usize)> = vec![(proposer, item)];
            let mut pre: Vec<Snapshot> = vec![self.snapshot()];
            let mut recs: Vec<UpdateRecord> = vec![self.normal_update(proposer, item)?];
            let mut in_round = 1usize;

            if recs[0].full_before && recs[0].leavers.is_empty() {
                loop {
                    let last = recs.last().unwrap();
                    if last.donors.len() != 1 {
                        return Err(Error::AssertionFailed(format!(
                            "{} transfer sources in a blocked proposal, expected 1",
                            last.donors.len()
                        )));
                    }
                    let donor = last.donors[0].0;
                    if !self.budget[donor].is_positive() {
                        return Err(Error::AssertionFailed(
                            "transfer source has no refunded budget".into(),
                        ));
                    }
                    let Some(next_item) = self.best_proposable(donor) else {
                        break;
                    };
                    if log.iter().filter(|p| **p == (donor, next_item)).count() == 2 {
                        self.resolve_cycle(&log, &pre, &recs, (donor, next_item))?;
                        break;
                    }
                    in_round += 1;
                    if in_round > per_round_cap {
                        return Err(Error::EventBudgetExceeded(format!(
                            "more than {per_round_cap} proposals in one round"
                        )));
                    }
                    log.push((donor, next_item));
                    pre.push(self.snapshot());
                    recs.push(self.normal_update(donor, next_item)?);
                    let rec = recs.last().unwrap();
                    if !(rec.full_before && rec.leavers.is_empty()) {
                        break;
                    }
                }
            }

            if self.active_count() < active_before {
                self.stats.events_active_drop += 1;
            }
            if opts.check_each_round {
                let alloc = Allocation { x: self.x.clone() };
                let (ok, _) = is_compatible(self.scene, &alloc);
                if !ok {
                    return Err(Error::AssertionFailed(
                        "allocation incompatible after a round".into(),
                    ));
                }
            }
        }

        // Sanity bounds from the termination argument.
        if self.stats.events_item_filled > m
            || self.stats.events_left_item > n * m
            || self.stats.events_active_drop > n * (1 + n * m)
        {
            return Err(Error::EventBudgetExceeded(
                "event counters out of bounds".into(),
            ));
        }
        Ok(())
    }

    /// Rolls back to the allocation before the cycle's second pass and
    /// applies the scaled simultaneous transfer.
    fn resolve_cycle(
        &mut self,
        log: &[(usize, usize)],
        pre: &[Snapshot],
        recs: &[UpdateRecord],
        pair: (usize, usize),
    ) -> Result<()> {
        let occ: Vec<usize> = log
            .iter()
            .enumerate()
            .filter(|(_, p)| **p == pair)
            .map(|(k, _)| k)
            .collect();
        if occ.len() != 2 {
            return Err(Error::AssertionFailed(
                "cycle pair seen twice before a third".into(),
            ));
        }
        let (k1, k2) = (occ[0], occ[1]);
        if log[k1 + 1..k2] != log[k2 + 1..] {
            return Err(Error::AssertionFailed(
                "proposal sequences between cycle encounters differ".into(),
            ));
        }
        // cycle = (i_0, j_0), (i_1, j_1), ..., (i_l, j_l)
        let cycle: Vec<(usize, usize)> = log[k2..].to_vec();
        let len = cycle.len();
        {
            let mut buyers: Vec<usize> = cycle.iter().map(|p| p.0).collect();
            let mut items: Vec<usize> = cycle.iter().map(|p| p.1).collect();
            buyers.sort_unstable();
            items.sort_unstable();
            if buyers.windows(2).any(|w| w[0] == w[1]) || items.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::AssertionFailed(
                    "duplicate buyer or item in cycle".into(),
                ));
            }
        }
        let y = &pre[k2];
        let initiator = cycle[0].0;
        let b0 = y.budget[initiator].clone();
        for (k, (buyer, _)) in cycle.iter().enumerate().skip(1) {
            if !y.budget[*buyer].is_zero() {
                return Err(Error::AssertionFailed(format!(
                    "cycle buyer {k} holds budget before the second pass"
                )));
            }
        }
        // transfer[k]: amount buyer i_k takes of item j_k from i_{k+1}.
        let mut transfer = Vec::with_capacity(len);
        for (k, (buyer, item)) in cycle.iter().enumerate() {
            let rec = &recs[k2 + k];
            if rec.item != *item || recs[k2 + k].donors.len() != 1 {
                return Err(Error::AssertionFailed("cycle record mismatch".into()));
            }
            let (donor, amount) = rec.donors[0].clone();
            let expected_donor = cycle[(k + 1) % len].0;
            if donor != expected_donor {
                return Err(Error::AssertionFailed(format!(
                    "cycle transfer for ({buyer}, {item}) came from {donor}, expected {expected_donor}"
                )));
            }
            transfer.push(amount);
        }

        let delta_b0 = b0.clone() - self.budget[initiator].clone();
        let mut scale: Option<(Rational, CycleBinding)> = None;
        let mut consider = |r: Rational, kind: CycleBinding| match &scale {
            None => scale = Some((r, kind)),
            Some((best, _)) if r < *best => scale = Some((r, kind)),
            _ => {}
        };
        if delta_b0.is_positive() {
            consider(b0.clone() / delta_b0.clone(), CycleBinding::Budget);
        }
        for k in 0..len {
            let prev = (k + len - 1) % len;
            let (buyer, _) = cycle[k];
            let prev_item = cycle[prev].1;
            consider(
                y.x[buyer][prev_item].clone() / transfer[prev].clone(),
                CycleBinding::Holding,
            );
        }
        let (r, binding) = scale.expect("cycle has at least one ratio");

        // Roll back and apply the simultaneous update.
        self.x = y.x.clone();
        self.budget = y.budget.clone();
        for k in 0..len {
            let prev = (k + len - 1) % len;
            let (buyer, item) = cycle[k];
            let prev_item = cycle[prev].1;
            self.x[buyer][item] += r.clone() * transfer[k].clone();
            self.x[buyer][prev_item] -= r.clone() * transfer[prev].clone();
            if self.x[buyer][prev_item].is_negative() {
                return Err(Error::AssertionFailed(
                    "negative holding after cycle".into(),
                ));
            }
            if self.x[buyer][prev_item].is_zero() {
                self.stats.events_left_item += 1;
            }
        }
        // Budgets follow from the allocation exactly.
        for (buyer, _) in &cycle {
            let spend: Rational = (0..self.x[*buyer].len())
                .map(|j| self.scene.price(*buyer, j).clone() * self.x[*buyer][j].clone())
                .sum();
            self.budget[*buyer] = self.scene.market.buyers[*buyer].budget.clone() - spend;
        }
        for (k, (buyer, _)) in cycle.iter().enumerate() {
            let ok = if k == 0 {
                self.budget[*buyer] == b0.clone() - r.clone() * delta_b0.clone()
                    && !self.budget[*buyer].is_negative()
            } else {
                self.budget[*buyer].is_zero()
            };
            if !ok {
                return Err(Error::AssertionFailed(
                    "cycle budget accounting broke".into(),
                ));
            }
        }
        for (_, item) in &cycle {
            if self.item_total(*item) != Rational::one() {
                return Err(Error::AssertionFailed("cycle item no longer full".into()));
            }
            self.refresh_marking(*item);
        }
        self.stats.cycles_resolved += 1;
        self.stats.cycle_bindings.push(binding);
        Ok(())
    }
}

/// Computes a stable allocation by fractional deferred acceptance
/// (Theorem: one always exists, with rational entries for rational input).
/// Deterministic: buyers iterate in index order and all ties break to the
/// smallest index.
pub fn fractional_gale_shapley(scene: &Scene) -> Result<Allocation> {
    fractional_gale_shapley_traced(scene, SolveOptions::default()).map(|(a, _)| a)
}

pub fn fractional_gale_shapley_traced(
    scene: &Scene,
    opts: SolveOptions,
) -> Result<(Allocation, SolveStats)> {
    let mut solver = Solver::new(scene);
    solver.run(opts)?;
    Ok((
        Allocation { x: solver.x },
        std::mem::take(&mut solver.stats),
    ))
}

// ---------------------------------------------------------------------------
// Common-part reduction
// ---------------------------------------------------------------------------

/// A market with some allocation mass deleted: prices, valuations and
/// budgets are rescaled so stability is preserved.
#[derive(Debug, Clone)]
pub struct ReducedInstance {
    pub market: Market,
    pub pricing: PricingProfile,
    pub priorities: PriorityProfile,
    pub preferences: PreferenceProfile,
    pub x: Allocation,
    pub y: Allocation,
    /// `kept_items[new_index]` = old_index
    pub kept_items: Vec<usize>,
}

/// Deletes the component-wise common part of two stable allocations until
/// their supports are disjoint. Each deletion removes a sold fraction from
/// the instance: the item shrinks (prices and values scale by the remaining
/// fraction, holdings rescale to the unit supply) and the holder's budget
/// drops by the payment removed. Both outputs are stable in the reduced
/// instance; that is re-checked before returning.
pub fn reduce_common_part(
    scene: &Scene,
    x: &Allocation,
    y: &Allocation,
) -> Result<ReducedInstance> {
    for (name, alloc) in [("x", x), ("y", y)] {
        let report = is_stable(scene, alloc)?;
        if !report.stable {
            return Err(Error::NotStableInput(format!("allocation {name}")));
        }
    }

    let mut market = scene.market.clone();
    let mut prices = scene.pricing.prices.clone();
    let mut prio = scene.priorities.ranks.clone();
    let mut pref = scene.preferences.ranks.clone();
    let mut xs = x.x.clone();
    let mut ys = y.x.clone();
    let mut kept: Vec<usize> = (0..market.num_items()).collect();

    loop {
        let n = market.num_buyers();
        let m = market.num_items();
        let mut found = None;
        'outer: for i in 0..n {
            for j in 0..m {
                let c = xs[i][j].clone().min(ys[i][j].clone());
                if c.is_positive() {
                    found = Some((i, j, c));
                    break 'outer;
                }
            }
        }
        let Some((i, j, c)) = found else { break };
        market.buyers[i].budget -= c.clone() * prices[i][j].clone();
        if c == Rational::one() {
            // The whole item was commonly held: drop it.
            market.items.remove(j);
            for row in market.valuations.iter_mut() {
                row.remove(j);
            }
            for row in prices.iter_mut() {
                row.remove(j);
            }
            prio.remove(j);
            for row in pref.iter_mut() {
                row.remove(j);
            }
            for row in xs.iter_mut() {
                row.remove(j);
            }
            for row in ys.iter_mut() {
                row.remove(j);
            }
            kept.remove(j);
        } else {
            let rest = Rational::one() - c.clone();
            for i2 in 0..n {
                prices[i2][j] *= rest.clone();
                market.valuations[i2][j] *= rest.clone();
                let scale = |v: &mut Rational, own: bool| {
                    if own {
                        *v = (v.clone() - c.clone()) / rest.clone();
                    } else {
                        *v = v.clone() / rest.clone();
                    }
                };
                scale(&mut xs[i2][j], i2 == i);
                scale(&mut ys[i2][j], i2 == i);
            }
        }
    }

    let market = Market::new(
        market.buyers.clone(),
        market.sellers.clone(),
        market.items.clone(),
        market.valuations.clone(),
    )?;
    let pricing = PricingProfile {
        mode: scene.pricing.mode,
        prices,
    };
    pricing.validate(&market)?;
    let priorities = PriorityProfile { ranks: prio };
    let preferences = PreferenceProfile { ranks: pref };
    let x_out = Allocation { x: xs };
    let y_out = Allocation { x: ys };

    {
        let reduced_scene =
            Scene::with_preferences(&market, &pricing, &priorities, preferences.clone());
        for (name, alloc) in [("x", &x_out), ("y", &y_out)] {
            let report = is_stable(&reduced_scene, alloc)?;
            if !report.stable {
                return Err(Error::AssertionFailed(format!(
                    "reduced allocation {name} lost stability"
                )));
            }
        }
    }

    Ok(ReducedInstance {
        market,
        pricing,
        priorities,
        preferences,
        x: x_out,
        y: y_out,
        kept_items: kept,
    })
}
