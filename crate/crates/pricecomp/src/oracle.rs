//! Ground-truth machinery: exact extrema over the full stable set by
//! case-split enumeration.
//!
//! Stability decomposes per buyer/item pair into two closed linear routes:
//! either the buyer is depleted and holds nothing it likes less than the
//! pair's item, or the item is fully allocated with no strictly
//! lower-priority holder. Per buyer the first route is upward closed in its
//! preference order, so a case is one greedy threshold per buyer (or none).
//! The union of the resulting polytopes is exactly the stable set, and each
//! polytope is a small exact LP.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::lp::{lp_solve_multi, LinearProgram, LpStatus, Relation};
use crate::market::Allocation;
use crate::rational::Rational;
use crate::stability::{is_stable, Scene};

pub const MAX_ORACLE_BUYERS: usize = 5;
pub const MAX_ORACLE_ITEMS: usize = 7;
pub const MAX_ORACLE_LPS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Goal {
    Max,
    Min,
}

/// One objective over allocation entries: maximize or minimize
/// `sum coeffs[i][j] * x[i][j]`.
#[derive(Debug, Clone)]
pub struct Objective {
    pub coeffs: Vec<Vec<Rational>>,
    pub goal: Goal,
}

impl Objective {
    pub fn total_revenue(scene: &Scene, goal: Goal) -> Self {
        Objective {
            coeffs: scene.pricing.prices.clone(),
            goal,
        }
    }

    pub fn seller_revenue(scene: &Scene, seller: usize, goal: Goal) -> Self {
        let n = scene.market.num_buyers();
        let m = scene.market.num_items();
        let mut coeffs = vec![vec![Rational::zero(); m]; n];
        for j in scene.market.seller_items(seller) {
            for (i, row) in coeffs.iter_mut().enumerate() {
                row[j] = scene.pricing.price(i, j).clone();
            }
        }
        Objective { coeffs, goal }
    }

    pub fn coordinate(n: usize, m: usize, i: usize, j: usize, goal: Goal) -> Self {
        let mut coeffs = vec![vec![Rational::zero(); m]; n];
        coeffs[i][j] = Rational::from_integer(1.into());
        Objective { coeffs, goal }
    }
}

/// Per-buyer case: no greedy pair at all, or a greedy threshold at one of
/// the buyer's preference ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BuyerCase {
    AllBlocked,
    Greedy(usize),
}

struct CaseIter {
    /// per buyer: the distinct preference ranks of its valued items.
    levels: Vec<Vec<usize>>,
    counter: Vec<usize>,
    done: bool,
}

impl CaseIter {
    fn new(scene: &Scene) -> Self {
        let n = scene.market.num_buyers();
        let mut levels = Vec::with_capacity(n);
        for i in 0..n {
            let mut ranks: Vec<usize> = (0..scene.market.num_items())
                .filter_map(|j| scene.preferences.rank(i, j))
                .collect();
            ranks.sort_unstable();
            ranks.dedup();
            levels.push(ranks);
        }
        CaseIter {
            counter: vec![0; levels.len()],
            levels,
            done: false,
        }
    }

    fn total(&self) -> usize {
        self.levels.iter().map(|l| l.len() + 1).product()
    }
}

impl Iterator for CaseIter {
    type Item = Vec<BuyerCase>;

    fn next(&mut self) -> Option<Vec<BuyerCase>> {
        if self.done {
            return None;
        }
        let case: Vec<BuyerCase> = self
            .counter
            .iter()
            .zip(&self.levels)
            .map(|(c, lv)| {
                if *c == lv.len() {
                    BuyerCase::AllBlocked
                } else {
                    BuyerCase::Greedy(lv[*c])
                }
            })
            .collect();
        // advance mixed-radix counter
        let mut k = 0;
        loop {
            if k == self.counter.len() {
                self.done = true;
                break;
            }
            self.counter[k] += 1;
            if self.counter[k] <= self.levels[k].len() {
                break;
            }
            self.counter[k] = 0;
            k += 1;
        }
        Some(case)
    }
}

struct CaseConstraints {
    depleted: Vec<bool>,
    /// `zero[i][j]`: the pair is forced to zero in this case.
    zero: Vec<Vec<bool>>,
    /// `full[j]`: the item must be exactly fully allocated.
    full: Vec<bool>,
}

fn build_case(scene: &Scene, case: &[BuyerCase]) -> CaseConstraints {
    let n = scene.market.num_buyers();
    let m = scene.market.num_items();
    let mut c = CaseConstraints {
        depleted: vec![false; n],
        zero: vec![vec![false; m]; n],
        full: vec![false; m],
    };
    let block = |cc: &mut CaseConstraints, i: usize, j: usize| {
        cc.full[j] = true;
        for i2 in 0..n {
            if scene.priorities.rank(j, i2) > scene.priorities.rank(j, i) {
                cc.zero[i2][j] = true;
            }
        }
    };
    for i in 0..n {
        match case[i] {
            BuyerCase::AllBlocked => {
                for j in 0..m {
                    if scene.valued(i, j) {
                        block(&mut c, i, j);
                    }
                }
            }
            BuyerCase::Greedy(threshold) => {
                c.depleted[i] = true;
                for j in 0..m {
                    if !scene.valued(i, j) {
                        continue;
                    }
                    let rank = scene.preferences.rank(i, j).unwrap();
                    if rank > threshold {
                        c.zero[i][j] = true;
                    } else if rank < threshold {
                        block(&mut c, i, j);
                    }
                }
            }
        }
    }
    c
}

/// Cheap necessary conditions before spending an LP solve on the case.
fn precheck(scene: &Scene, c: &CaseConstraints) -> bool {
    let n = scene.market.num_buyers();
    let m = scene.market.num_items();
    for j in 0..m {
        if c.full[j] && !(0..n).any(|i| scene.valued(i, j) && !c.zero[i][j]) {
            return false;
        }
    }
    for i in 0..n {
        if c.depleted[i] {
            let affordable: Rational = (0..m)
                .filter(|j| scene.valued(i, *j) && !c.zero[i][*j])
                .map(|j| scene.pricing.price(i, j).clone())
                .sum();
            if affordable < scene.market.buyers[i].budget {
                return false;
            }
        }
    }
    true
}

/// Optimizes each objective over the entire stable set, optionally
/// restricted to total revenue equal to `revenue_equals`. Returns, per
/// objective, the optimum and a witness allocation (None when the
/// restriction is infeasible, which cannot happen without a restriction:
/// a stable allocation always exists).
pub fn extremize_many(
    scene: &Scene,
    revenue_equals: Option<&Rational>,
    objectives: &[Objective],
) -> Result<ObjectiveResults> {
    let (res, _) = extremize_counted(scene, revenue_equals, objectives)?;
    Ok(res)
}

pub struct CaseCounts {
    pub total: usize,
    pub feasible: usize,
}

/// Optimum and witness per objective; None when the (restricted) stable set
/// is empty.
pub type ObjectiveResults = Vec<Option<(Rational, Allocation)>>;

pub fn extremize_counted(
    scene: &Scene,
    revenue_equals: Option<&Rational>,
    objectives: &[Objective],
) -> Result<(ObjectiveResults, CaseCounts)> {
    let n = scene.market.num_buyers();
    let m = scene.market.num_items();
    if n > MAX_ORACLE_BUYERS || m > MAX_ORACLE_ITEMS {
        return Err(Error::SizeCapExceeded(format!(
            "{n} buyers x {m} items exceeds {MAX_ORACLE_BUYERS} x {MAX_ORACLE_ITEMS}"
        )));
    }

    let iter = CaseIter::new(scene);
    let total = iter.total();
    let mut feasible = 0usize;
    let mut lp_solves = 0usize;
    let mut best: ObjectiveResults = vec![None; objectives.len()];

    for case in iter {
        let cons = build_case(scene, &case);
        if !precheck(scene, &cons) {
            continue;
        }

        // Free variables of this case.
        let mut var_of = vec![vec![usize::MAX; m]; n];
        let mut vars: Vec<(usize, usize)> = Vec::new();
        for i in 0..n {
            for j in 0..m {
                if scene.valued(i, j) && !cons.zero[i][j] {
                    var_of[i][j] = vars.len();
                    vars.push((i, j));
                }
            }
        }

        let mut lp = LinearProgram::new(vec![Rational::zero(); vars.len()]);
        let mut infeasible_shortcut = false;
        for j in 0..m {
            let mut row = vec![Rational::zero(); vars.len()];
            let mut any = false;
            for i in 0..n {
                if var_of[i][j] != usize::MAX {
                    row[var_of[i][j]] = Rational::from_integer(1.into());
                    any = true;
                }
            }
            if any {
                let rel = if cons.full[j] {
                    Relation::Eq
                } else {
                    Relation::Le
                };
                lp.constrain(row, rel, Rational::from_integer(1.into()));
            }
        }
        for i in 0..n {
            let mut row = vec![Rational::zero(); vars.len()];
            let mut any = false;
            for j in 0..m {
                if var_of[i][j] != usize::MAX {
                    row[var_of[i][j]] = scene.pricing.price(i, j).clone();
                    any = true;
                }
            }
            let budget = scene.market.buyers[i].budget.clone();
            if cons.depleted[i] {
                if !any {
                    if !budget.is_zero() {
                        infeasible_shortcut = true;
                        break;
                    }
                    continue;
                }
                lp.constrain(row, Relation::Eq, budget);
            } else if any {
                lp.constrain(row, Relation::Le, budget);
            }
        }
        if infeasible_shortcut {
            continue;
        }
        if let Some(r) = revenue_equals {
            let mut row = vec![Rational::zero(); vars.len()];
            for (k, (i, j)) in vars.iter().enumerate() {
                row[k] = scene.pricing.price(*i, *j).clone();
            }
            lp.constrain(row, Relation::Eq, r.clone());
        }

        // Project objectives onto the free variables; flip for Min.
        let objs: Vec<Vec<Rational>> = objectives
            .iter()
            .map(|o| {
                vars.iter()
                    .map(|(i, j)| match o.goal {
                        Goal::Max => o.coeffs[*i][*j].clone(),
                        Goal::Min => -o.coeffs[*i][*j].clone(),
                    })
                    .collect()
            })
            .collect();

        lp_solves += objs.len().max(1);
        if lp_solves > MAX_ORACLE_LPS {
            return Err(Error::SizeCapExceeded(format!(
                "more than {MAX_ORACLE_LPS} case LPs"
            )));
        }
        let sols = lp_solve_multi(&lp, &objs)?;
        if sols[0].status == LpStatus::Infeasible {
            continue;
        }
        feasible += 1;
        for (k, sol) in sols.iter().enumerate() {
            if sol.status != LpStatus::Optimal {
                return Err(Error::InternalInconsistency(
                    "case LP unbounded on a bounded polytope".into(),
                ));
            }
            let signed_value = match objectives[k].goal {
                Goal::Max => sol.objective_value.clone(),
                Goal::Min => -sol.objective_value.clone(),
            };
            let better = match &best[k] {
                None => true,
                Some((cur, _)) => match objectives[k].goal {
                    Goal::Max => signed_value > *cur,
                    Goal::Min => signed_value < *cur,
                },
            };
            if better {
                let mut alloc = Allocation::zeros(scene.market);
                for (v, (i, j)) in vars.iter().enumerate() {
                    alloc.x[*i][*j] = sol.values[v].clone();
                }
                best[k] = Some((signed_value, alloc));
            }
        }
    }

    Ok((best, CaseCounts { total, feasible }))
}

#[derive(Debug, Clone)]
pub struct SellerExtrema {
    pub min: Rational,
    pub max: Rational,
    pub min_representative: Allocation,
    pub max_representative: Allocation,
}

/// Exact extrema of total and per-seller revenue over all stable
/// allocations, with witnesses; every witness re-checked stable.
#[derive(Debug, Clone)]
pub struct StableSetSummary {
    pub cases_total: usize,
    pub cases_feasible: usize,
    pub revenue_min: Rational,
    pub revenue_max: Rational,
    pub min_representative: Allocation,
    pub max_representative: Allocation,
    pub per_seller: Vec<SellerExtrema>,
}

pub fn stable_set_extrema(scene: &Scene) -> Result<StableSetSummary> {
    stable_set_extrema_inner(scene, None)
}

/// Extrema over stable allocations whose total revenue equals `revenue`.
pub fn stable_set_extrema_at_revenue(
    scene: &Scene,
    revenue: &Rational,
) -> Result<StableSetSummary> {
    stable_set_extrema_inner(scene, Some(revenue))
}

fn stable_set_extrema_inner(
    scene: &Scene,
    revenue_equals: Option<&Rational>,
) -> Result<StableSetSummary> {
    let sellers = scene.market.num_sellers();
    let mut objectives = vec![
        Objective::total_revenue(scene, Goal::Min),
        Objective::total_revenue(scene, Goal::Max),
    ];
    for k in 0..sellers {
        objectives.push(Objective::seller_revenue(scene, k, Goal::Min));
        objectives.push(Objective::seller_revenue(scene, k, Goal::Max));
    }
    let (results, counts) = extremize_counted(scene, revenue_equals, &objectives)?;
    let unpack = |r: &Option<(Rational, Allocation)>| -> Result<(Rational, Allocation)> {
        r.clone()
            .ok_or_else(|| Error::InternalInconsistency("stable set unexpectedly empty".into()))
    };
    let (revenue_min, min_representative) = unpack(&results[0])?;
    let (revenue_max, max_representative) = unpack(&results[1])?;
    for rep in [&min_representative, &max_representative] {
        if !is_stable(scene, rep)?.stable {
            return Err(Error::InternalInconsistency(
                "oracle representative is not stable".into(),
            ));
        }
    }
    let mut per_seller = Vec::with_capacity(sellers);
    for k in 0..sellers {
        let (min, min_rep) = unpack(&results[2 + 2 * k])?;
        let (max, max_rep) = unpack(&results[3 + 2 * k])?;
        for rep in [&min_rep, &max_rep] {
            if !is_stable(scene, rep)?.stable {
                return Err(Error::InternalInconsistency(
                    "oracle representative is not stable".into(),
                ));
            }
        }
        per_seller.push(SellerExtrema {
            min,
            max,
            min_representative: min_rep,
            max_representative: max_rep,
        });
    }
    Ok(StableSetSummary {
        cases_total: counts.total,
        cases_feasible: counts.feasible,
        revenue_min,
        revenue_max,
        min_representative,
        max_representative,
        per_seller,
    })
}

/// Some(x) when the stable set is the single point x; None when at least
/// two stable allocations exist.
pub fn stable_set_singleton(scene: &Scene) -> Result<Option<Allocation>> {
    let n = scene.market.num_buyers();
    let m = scene.market.num_items();
    let mut objectives = Vec::new();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..m {
            if scene.valued(i, j) {
                objectives.push(Objective::coordinate(n, m, i, j, Goal::Min));
                objectives.push(Objective::coordinate(n, m, i, j, Goal::Max));
                pairs.push((i, j));
            }
        }
    }
    if pairs.is_empty() {
        return Ok(Some(Allocation::zeros(scene.market)));
    }
    let results = extremize_many(scene, None, &objectives)?;
    let mut point = Allocation::zeros(scene.market);
    for (k, (i, j)) in pairs.iter().enumerate() {
        let (lo, _) = results[2 * k].clone().expect("stable set nonempty");
        let (hi, _) = results[2 * k + 1].clone().expect("stable set nonempty");
        if lo != hi {
            return Ok(None);
        }
        point.x[*i][*j] = lo;
    }
    if !is_stable(scene, &point)?.stable {
        return Err(Error::InternalInconsistency(
            "coordinate-wise singleton is not stable".into(),
        ));
    }
    Ok(Some(point))
}

/// Exact min and max of one seller's revenue over stable allocations,
/// optionally restricted to revenue-optimal ones.
pub fn seller_revenue_extrema(
    scene: &Scene,
    seller: usize,
    revenue_equals: Option<&Rational>,
) -> Result<(Rational, Rational)> {
    let objectives = vec![
        Objective::seller_revenue(scene, seller, Goal::Min),
        Objective::seller_revenue(scene, seller, Goal::Max),
    ];
    let results = extremize_many(scene, revenue_equals, &objectives)?;
    let lo = results[0]
        .clone()
        .ok_or_else(|| Error::InternalInconsistency("empty restricted stable set".into()))?
        .0;
    let hi = results[1].clone().unwrap().0;
    Ok((lo, hi))
}
