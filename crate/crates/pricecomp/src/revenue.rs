//! Revenue-optimal stable allocations for uniform pricing with all-tied
//! natural priorities: the bipartite flow encoding, the two-LP optimizer,
//! the stability-preserving augmenting-path algorithm, structured minimum
//! cuts, and the budget-depletion deviation.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::flow::{self, Flow, FlowGraph};
use crate::lp::{lp_solve, LinearProgram, LpStatus, Relation};
use crate::market::{Allocation, Market, PricingMode, PricingProfile, PriorityProfile};
use crate::rational::Rational;
use crate::stability::{is_compatible, is_stable, Scene};

/// Bipartite revenue network: source -> buyers (budget capacity), buyer ->
/// item (price capacity when valued), item -> sink (price capacity).
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    pub graph: FlowGraph,
    pub num_buyers: usize,
    pub num_items: usize,
}

impl FlowNetwork {
    pub fn buyer_vertex(&self, i: usize) -> usize {
        1 + i
    }

    pub fn item_vertex(&self, j: usize) -> usize {
        1 + self.num_buyers + j
    }

    pub fn source(&self) -> usize {
        0
    }

    pub fn sink(&self) -> usize {
        1 + self.num_buyers + self.num_items
    }

    pub fn item_price(&self, j: usize) -> &Rational {
        &self.graph.capacity[self.item_vertex(j)][self.sink()]
    }

    /// allocation -> flow: f(i, j) = p_j * x(i, j).
    pub fn flow_of(&self, allocation: &Allocation) -> Flow {
        let mut f = Flow::zero(self.graph.n);
        for i in 0..self.num_buyers {
            for j in 0..self.num_items {
                let amount = self.item_price(j).clone() * allocation.get(i, j).clone();
                if amount.is_zero() {
                    continue;
                }
                let (bu, it) = (self.buyer_vertex(i), self.item_vertex(j));
                f.f[bu][it] += amount.clone();
                f.f[it][bu] -= amount.clone();
                f.f[self.source()][bu] += amount.clone();
                f.f[bu][self.source()] -= amount.clone();
                f.f[it][self.sink()] += amount.clone();
                f.f[self.sink()][it] -= amount.clone();
                f.value += amount;
            }
        }
        f
    }

    /// flow -> allocation: x(i, j) = f(i, j) / p_j.
    pub fn allocation_of(&self, market: &Market, f: &Flow) -> Allocation {
        let mut alloc = Allocation::zeros(market);
        for i in 0..self.num_buyers {
            for j in 0..self.num_items {
                let amount = f.f[self.buyer_vertex(i)][self.item_vertex(j)].clone();
                if amount.is_positive() {
                    alloc.x[i][j] = amount / self.item_price(j).clone();
                }
            }
        }
        alloc
    }

    pub fn item_inflow(&self, f: &Flow, j: usize) -> Rational {
        f.f[self.item_vertex(j)][self.sink()].clone()
    }
}

pub fn build_flow_network(market: &Market, pricing: &PricingProfile) -> Result<FlowNetwork> {
    if pricing.mode != PricingMode::Uniform {
        return Err(Error::NotUniform);
    }
    let n = market.num_buyers();
    let m = market.num_items();
    let mut graph = FlowGraph::new(n + m + 2, 0, n + m + 1);
    for i in 0..n {
        graph.set_capacity(0, 1 + i, market.buyers[i].budget.clone());
    }
    for j in 0..m {
        let price = pricing.price(0, j).clone();
        graph.set_capacity(1 + n + j, n + m + 1, price.clone());
        for i in 0..n {
            if market.value(i, j).is_positive() {
                graph.set_capacity(1 + i, 1 + n + j, price.clone());
            }
        }
    }
    Ok(FlowNetwork {
        graph,
        num_buyers: n,
        num_items: m,
    })
}

fn tied_scene<'a>(
    market: &'a Market,
    pricing: &'a PricingProfile,
    tied: &'a PriorityProfile,
) -> Scene<'a> {
    Scene::new(market, pricing, tied)
}

/// Revenue-optimal stable allocation via two exact LPs: first the optimal
/// revenue R over budget-feasible allocations, then welfare maximization at
/// revenue exactly R, which lands on a stable allocation. The result is
/// re-checked stable before returning.
pub fn max_revenue_lp(market: &Market, pricing: &PricingProfile) -> Result<(Allocation, Rational)> {
    if pricing.mode != PricingMode::Uniform {
        return Err(Error::NotUniform);
    }
    let n = market.num_buyers();
    let m = market.num_items();
    let mut vars = Vec::new();
    let mut var_of = vec![vec![usize::MAX; m]; n];
    for i in 0..n {
        for j in 0..m {
            if market.value(i, j).is_positive() {
                var_of[i][j] = vars.len();
                vars.push((i, j));
            }
        }
    }
    let price = |j: usize| pricing.price(0, j).clone();
    let revenue_coeffs: Vec<Rational> = vars.iter().map(|(_, j)| price(*j)).collect();

    let mut lp = LinearProgram::new(revenue_coeffs.clone());
    for j in 0..m {
        let mut row = vec![Rational::zero(); vars.len()];
        let mut any = false;
        for i in 0..n {
            if var_of[i][j] != usize::MAX {
                row[var_of[i][j]] = Rational::one();
                any = true;
            }
        }
        if any {
            lp.constrain(row, Relation::Le, Rational::one());
        }
    }
    for i in 0..n {
        let mut row = vec![Rational::zero(); vars.len()];
        for j in 0..m {
            if var_of[i][j] != usize::MAX {
                row[var_of[i][j]] = price(j);
            }
        }
        lp.constrain(row, Relation::Le, market.buyers[i].budget.clone());
    }
    let first = lp_solve(&lp)?;
    if first.status != LpStatus::Optimal {
        return Err(Error::InternalInconsistency(
            "revenue LP not optimal on a bounded feasible polytope".into(),
        ));
    }
    let revenue = first.objective_value;

    // Second program: maximize welfare subject to revenue >= R.
    let welfare: Vec<Rational> = vars
        .iter()
        .map(|(i, j)| market.value(*i, *j).clone())
        .collect();
    let mut lp2 = LinearProgram {
        objective: welfare,
        constraints: lp.constraints.clone(),
        lower_bounds: None,
    };
    lp2.constrain(revenue_coeffs, Relation::Ge, revenue.clone());
    let second = lp_solve(&lp2)?;
    if second.status != LpStatus::Optimal {
        return Err(Error::InternalInconsistency("welfare LP failed".into()));
    }
    let mut alloc = Allocation::zeros(market);
    for (k, (i, j)) in vars.iter().enumerate() {
        alloc.x[*i][*j] = second.values[k].clone();
    }
    let tied = PriorityProfile::all_tied(market);
    let scene = tied_scene(market, pricing, &tied);
    if !is_stable(&scene, &alloc)?.stable {
        return Err(Error::StabilityCheckFailed);
    }
    Ok((alloc, revenue))
}

/// Trace of one augmenting-path run: the decoded allocation after every
/// augmentation, for compatibility and monotonicity checks.
#[derive(Debug, Clone)]
pub struct AugmentingRun {
    pub allocation: Allocation,
    pub revenue: Rational,
    pub intermediates: Vec<Allocation>,
}

/// Augmenting-path revenue maximization that keeps every intermediate
/// allocation compatible: each shortest path from the source is rerouted at
/// its final buyer to that buyer's most-preferred item with spare capacity,
/// so no buyer is ever pushed onto an item while a better one stays open.
pub fn stable_edmonds_karp(
    market: &Market,
    pricing: &PricingProfile,
    start: &Allocation,
) -> Result<AugmentingRun> {
    if pricing.mode != PricingMode::Uniform {
        return Err(Error::NotUniform);
    }
    let tied = PriorityProfile::all_tied(market);
    let scene = tied_scene(market, pricing, &tied);
    if !is_compatible(&scene, start).0 {
        return Err(Error::NotCompatibleStart);
    }
    let net = build_flow_network(market, pricing)?;
    let g = &net.graph;
    let mut f = net.flow_of(start);
    let mut intermediates = Vec::new();

    let guard = (g.n + 1) * (market.num_buyers() * market.num_items() + g.n + 1);
    for _ in 0..guard {
        let Some(path) = shortest_residual_path(g, &f) else {
            let allocation = net.allocation_of(market, &f);
            let revenue = f.value.clone();
            return Ok(AugmentingRun {
                allocation,
                revenue,
                intermediates,
            });
        };
        // The path ends source .. -> buyer i0 -> item j0 -> sink; reroute its
        // tail to i0's best item that is not fully paid for.
        let len = path.len();
        let item_j0 = path[len - 2];
        let buyer_i0 = path[len - 3];
        let i0 = buyer_i0 - 1;
        let mut best: Option<(Rational, usize)> = None;
        for j in 0..market.num_items() {
            if !market.value(i0, j).is_positive() {
                continue;
            }
            if net.item_inflow(&f, j) < *net.item_price(j) {
                // minimize p_j / v_{i0, j}, ties to the smallest index
                let score = net.item_price(j).clone() / market.value(i0, j).clone();
                if best.as_ref().map(|(s, _)| score < *s).unwrap_or(true) {
                    best = Some((score, j));
                }
            }
        }
        let (_, j1) = best.expect("path tail item itself has spare capacity");
        let mut path = path;
        if j1 != item_j0 - 1 - market.num_buyers() {
            let item_j1 = net.item_vertex(j1);
            path[len - 2] = item_j1;
        }
        flow::augment(g, &mut f, &path);
        intermediates.push(net.allocation_of(market, &f));
    }
    Err(Error::InternalInconsistency(
        "augmenting loop exceeded its bound".into(),
    ))
}

fn shortest_residual_path(g: &FlowGraph, f: &Flow) -> Option<Vec<usize>> {
    use std::collections::VecDeque;
    let mut parent = vec![usize::MAX; g.n];
    parent[g.source] = g.source;
    let mut queue = VecDeque::new();
    queue.push_back(g.source);
    while let Some(u) = queue.pop_front() {
        for v in 0..g.n {
            if parent[v] == usize::MAX && f.residual(g, u, v).is_positive() {
                parent[v] = u;
                if v == g.sink {
                    let mut path = vec![v];
                    let mut cur = v;
                    while cur != g.source {
                        cur = parent[cur];
                        path.push(cur);
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(v);
            }
        }
    }
    None
}

/// Minimum cut with no edge from a source-side buyer to a sink-side item:
/// start from residual reachability and migrate any offending item to the
/// source side (which never increases capacity).
#[derive(Debug, Clone)]
pub struct CutCertificate {
    /// `in_s[v]` over network vertices.
    pub in_s: Vec<bool>,
    pub capacity: Rational,
}

pub fn structured_min_cut(net: &FlowNetwork) -> CutCertificate {
    let f = flow::max_flow(&net.graph);
    let mut in_s = flow::residual_reachable(&net.graph, &f);
    loop {
        let mut moved = false;
        for j in 0..net.num_items {
            let jv = net.item_vertex(j);
            if in_s[jv] {
                continue;
            }
            let offending = (0..net.num_buyers).any(|i| {
                in_s[net.buyer_vertex(i)]
                    && net.graph.capacity[net.buyer_vertex(i)][jv].is_positive()
            });
            if offending {
                in_s[jv] = true;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    let capacity = flow::cut_capacity(&net.graph, &in_s);
    debug_assert_eq!(capacity, f.value);
    CutCertificate { in_s, capacity }
}

/// A profitable unilateral repricing when some buyer keeps money unspent.
#[derive(Debug, Clone)]
pub struct DepletionDeviation {
    pub seller: usize,
    pub buyer: usize,
    pub item: usize,
    pub new_pricing: PricingProfile,
    /// Guaranteed increase of the seller's worst-case revenue.
    pub gain: Rational,
    /// The unspent amount the deviation halves.
    pub epsilon: Rational,
}

/// If a buyer retains budget in a revenue-optimal stable allocation, the
/// owner of one of its valued items can raise that price by half the slack
/// and its worst-case revenue rises by exactly that amount. Returns None
/// when every revenue-optimal stable allocation depletes all budgets
/// (detected on the structured minimum cut).
pub fn budget_depletion_deviation(
    market: &Market,
    pricing: &PricingProfile,
) -> Result<Option<DepletionDeviation>> {
    if pricing.mode != PricingMode::Uniform {
        return Err(Error::NotUniform);
    }
    let net = build_flow_network(market, pricing)?;
    let cut = structured_min_cut(&net);
    // Source-side buyers spend only inside S; if their budgets exactly cover
    // the source-side items, every optimal allocation depletes everyone.
    let budget_side: Rational = (0..market.num_buyers())
        .filter(|i| cut.in_s[net.buyer_vertex(*i)])
        .map(|i| market.buyers[i].budget.clone())
        .sum();
    let item_side: Rational = (0..market.num_items())
        .filter(|j| cut.in_s[net.item_vertex(*j)])
        .map(|j| pricing.price(0, j).clone())
        .sum();
    if budget_side == item_side {
        return Ok(None);
    }

    let (representative, _) = max_revenue_lp(market, pricing)?;
    let buyer = (0..market.num_buyers())
        .find(|i| representative.buyer_spend(pricing, *i) < market.buyers[*i].budget)
        .ok_or_else(|| Error::InternalInconsistency("cut slack without an under-spender".into()))?;
    if !cut.in_s[net.buyer_vertex(buyer)] {
        return Err(Error::InternalInconsistency(
            "under-spender on the depleting side of the cut".into(),
        ));
    }
    let epsilon = market.buyers[buyer].budget.clone() - representative.buyer_spend(pricing, buyer);
    // Most preferred valued item of the under-spender; all of them sit on
    // the source side of the structured cut.
    let item = (0..market.num_items())
        .filter(|j| market.value(buyer, *j).is_positive())
        .min_by(|a, b| {
            let ba = pricing.bang_per_buck(market, buyer, *a).unwrap();
            let bb = pricing.bang_per_buck(market, buyer, *b).unwrap();
            bb.cmp(&ba).then(a.cmp(b))
        })
        .expect("every buyer with slack values something");
    if !cut.in_s[net.item_vertex(item)] {
        return Err(Error::InternalInconsistency(
            "interested item on the sink side of the structured cut".into(),
        ));
    }
    let gain = epsilon.clone() / Rational::from_integer(2.into());
    let mut item_prices: Vec<Rational> = (0..market.num_items())
        .map(|j| pricing.price(0, j).clone())
        .collect();
    item_prices[item] += gain.clone();
    let new_pricing = PricingProfile::uniform(market, item_prices)?;
    Ok(Some(DepletionDeviation {
        seller: market.items[item].seller,
        buyer,
        item,
        new_pricing,
        gain,
        epsilon,
    }))
}
