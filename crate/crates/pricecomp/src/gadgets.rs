//! Hardness-reduction gadgets repurposed as instance generators with
//! independently computed optima: the 3SAT-3 market whose maximum stable
//! revenue encodes the satisfiability optimum, and the bipartite-matching
//! market whose minimum stable revenue is the minimum maximal matching.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::market::{Allocation, Buyer, Item, Market, PricingProfile, PriorityProfile, Seller};
use crate::rational::{int, Rational};

// ---------------------------------------------------------------------------
// 3SAT-3
// ---------------------------------------------------------------------------

/// CNF instance: literals are +v / -v with 1-based variables, at most three
/// literals per clause, and each variable occurring at most three times.
#[derive(Debug, Clone)]
pub struct CnfInstance {
    pub num_vars: usize,
    pub clauses: Vec<Vec<i32>>,
}

impl CnfInstance {
    pub fn new(num_vars: usize, clauses: Vec<Vec<i32>>) -> Result<Self> {
        let mut occurrences = vec![0usize; num_vars];
        for (c, clause) in clauses.iter().enumerate() {
            if clause.is_empty() || clause.len() > 3 {
                return Err(Error::Not3Sat3(format!(
                    "clause {c} has {} literals",
                    clause.len()
                )));
            }
            for lit in clause {
                let var = lit.unsigned_abs() as usize;
                if *lit == 0 || var == 0 || var > num_vars {
                    return Err(Error::Not3Sat3(format!("bad literal {lit} in clause {c}")));
                }
                occurrences[var - 1] += 1;
            }
        }
        for (v, occ) in occurrences.iter().enumerate() {
            if *occ > 3 {
                return Err(Error::Not3Sat3(format!(
                    "variable {} occurs {occ} times",
                    v + 1
                )));
            }
        }
        Ok(CnfInstance { num_vars, clauses })
    }

    pub fn satisfied(&self, assignment: &[bool]) -> usize {
        self.clauses
            .iter()
            .filter(|clause| {
                clause.iter().any(|lit| {
                    let var = lit.unsigned_abs() as usize - 1;
                    (*lit > 0) == assignment[var]
                })
            })
            .count()
    }
}

/// Exhaustive MAX-3SAT-3 optimum.
pub fn max3sat_optimum(cnf: &CnfInstance) -> usize {
    let n = cnf.num_vars;
    (0..1usize << n)
        .map(|mask| {
            let assignment: Vec<bool> = (0..n).map(|v| mask >> v & 1 == 1).collect();
            cnf.satisfied(&assignment)
        })
        .max()
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatVariant {
    /// Personalized prices exactly as in the reduction table.
    Personalized,
    /// One price per item (choice 12, clause-literal 2, buffer 6), choice
    /// buyers re-budgeted to 12 and given top priority on their items.
    Uniform,
    /// The uniform variant with priorities that force one assignment as the
    /// essentially unique stable allocation.
    Forced(Vec<bool>),
}

/// The generated market plus the index maps needed to build allocations.
#[derive(Debug, Clone)]
pub struct SatGadget {
    pub cnf: CnfInstance,
    pub market: Market,
    pub pricing: PricingProfile,
    pub priorities: PriorityProfile,
    pub variant_budget_per_var: i64,
    /// buyer indices
    pub choice_buyer: Vec<usize>,
    pub literal_buyer: Vec<[usize; 2]>,
    pub clause_buyer: Vec<usize>,
    /// item indices
    pub choice_item: Vec<[usize; 2]>,
    /// `clause_literal_item[var][polarity][slot]`
    pub clause_literal_item: Vec<[[usize; 3]; 2]>,
    pub buffer_item: Vec<[usize; 2]>,
    /// (var, polarity, slot) serving clause c, one per clause literal
    pub clause_slots: Vec<Vec<(usize, usize, usize)>>,
}

/// Builds the 3SAT-3 market. Per variable: one choice buyer (budget 13) and
/// two literal buyers (budget 12); two choice items, six clause-literal
/// items, two buffer items. Per clause: one buyer with budget 1 interested
/// in the clause-literal items of its literals. Valuations give every
/// literal buyer the strict order choice > clause-literal > buffer.
pub fn sat_gadget_build(cnf: &CnfInstance, variant: &SatVariant) -> Result<SatGadget> {
    let nv = cnf.num_vars;
    let uniform = !matches!(variant, SatVariant::Personalized);
    let choice_budget = if uniform { 12 } else { 13 };
    let variant_budget_per_var = choice_budget + 24;

    let mut buyers = Vec::new();
    let mut choice_buyer = Vec::new();
    let mut literal_buyer = Vec::new();
    for v in 0..nv {
        choice_buyer.push(buyers.len());
        buyers.push(Buyer {
            id: format!("choice_v{}", v + 1),
            budget: int(choice_budget),
        });
        let pos = buyers.len();
        buyers.push(Buyer {
            id: format!("lit_p{}", v + 1),
            budget: int(12),
        });
        let neg = buyers.len();
        buyers.push(Buyer {
            id: format!("lit_n{}", v + 1),
            budget: int(12),
        });
        literal_buyer.push([pos, neg]);
    }
    let mut clause_buyer = Vec::new();
    for c in 0..cnf.clauses.len() {
        clause_buyer.push(buyers.len());
        buyers.push(Buyer {
            id: format!("clause_{}", c + 1),
            budget: int(1),
        });
    }

    let mut items = Vec::new();
    let mut choice_item = Vec::new();
    let mut clause_literal_item = Vec::new();
    let mut buffer_item = Vec::new();
    let polarity_tag = |p: usize| if p == 0 { "p" } else { "n" };
    for v in 0..nv {
        let mut ci = [0usize; 2];
        for (p, slot) in ci.iter_mut().enumerate() {
            *slot = items.len();
            items.push(Item {
                id: format!("g_{}{}", polarity_tag(p), v + 1),
                seller: 0,
            });
        }
        choice_item.push(ci);
        let mut cl = [[0usize; 3]; 2];
        for p in 0..2 {
            for (k, slot) in cl[p].iter_mut().enumerate() {
                *slot = items.len();
                items.push(Item {
                    id: format!("g_c{}_{}{}", k + 1, polarity_tag(p), v + 1),
                    seller: 0,
                });
            }
        }
        clause_literal_item.push(cl);
        let mut bi = [0usize; 2];
        for (p, slot) in bi.iter_mut().enumerate() {
            *slot = items.len();
            items.push(Item {
                id: format!("g_buf_{}{}", polarity_tag(p), v + 1),
                seller: 0,
            });
        }
        buffer_item.push(bi);
    }

    // Assign each clause occurrence of a literal to one of its three slots.
    let mut used_slots = vec![[0usize; 2]; nv];
    let mut clause_slots = Vec::with_capacity(cnf.clauses.len());
    for clause in &cnf.clauses {
        let mut slots = Vec::new();
        for lit in clause {
            let var = lit.unsigned_abs() as usize - 1;
            let pol = if *lit > 0 { 0 } else { 1 };
            let slot = used_slots[var][pol];
            used_slots[var][pol] += 1;
            if slot >= 3 {
                return Err(Error::Not3Sat3(format!(
                    "literal {lit} occurs more than three times"
                )));
            }
            slots.push((var, pol, slot));
        }
        clause_slots.push(slots);
    }

    let n = buyers.len();
    let m = items.len();
    let mut valuations = vec![vec![Rational::zero(); m]; n];
    let mut prices = vec![vec![Rational::zero(); m]; n];
    for v in 0..nv {
        for p in 0..2 {
            let cb = choice_buyer[v];
            let lb = literal_buyer[v][p];
            let g = choice_item[v][p];
            valuations[cb][g] = int(if uniform { 12 } else { 13 });
            prices[cb][g] = int(if uniform { 12 } else { 13 });
            valuations[lb][g] = int(24);
            prices[lb][g] = int(12);
            for k in 0..3 {
                let item = clause_literal_item[v][p][k];
                valuations[lb][item] = int(3);
                prices[lb][item] = int(2);
            }
            let buf = buffer_item[v][p];
            valuations[lb][buf] = int(6);
            prices[lb][buf] = int(6);
        }
    }
    for (c, slots) in clause_slots.iter().enumerate() {
        for (var, pol, slot) in slots {
            let item = clause_literal_item[*var][*pol][*slot];
            let buyer = clause_buyer[c];
            valuations[buyer][item] = int(1);
            prices[buyer][item] = int(if uniform { 2 } else { 1 });
        }
    }
    // Uniform variant: every buyer pays the same posted price.
    if uniform {
        for v in 0..nv {
            for p in 0..2 {
                for row in prices.iter_mut() {
                    row[choice_item[v][p]] = int(12);
                    for k in 0..3 {
                        row[clause_literal_item[v][p][k]] = int(2);
                    }
                    row[buffer_item[v][p]] = int(6);
                }
            }
        }
    }

    let market = Market::new(buyers, vec![Seller { id: "s".into() }], items, valuations)?;
    let pricing = if uniform {
        PricingProfile::uniform(&market, prices[0].clone())?
    } else {
        PricingProfile::personalized(&market, prices)?
    };

    let priorities = match variant {
        SatVariant::Personalized => crate::market::natural_priority(&market, &pricing),
        SatVariant::Uniform => {
            let mut prio = PriorityProfile::all_tied(&market);
            for v in 0..nv {
                for p in 0..2 {
                    let j = choice_item[v][p];
                    prio.ranks[j] = vec![1; market.num_buyers()];
                    prio.ranks[j][choice_buyer[v]] = 0;
                }
            }
            prio
        }
        SatVariant::Forced(assignment) => {
            if assignment.len() != nv {
                return Err(Error::Not3Sat3("assignment length mismatch".into()));
            }
            let mut prio = PriorityProfile::all_tied(&market);
            for v in 0..nv {
                let true_pol = if assignment[v] { 0 } else { 1 };
                for p in 0..2 {
                    let j = choice_item[v][p];
                    prio.ranks[j] = vec![2; market.num_buyers()];
                    if p == true_pol {
                        // the satisfied literal claims its choice item
                        prio.ranks[j][literal_buyer[v][p]] = 0;
                        prio.ranks[j][choice_buyer[v]] = 1;
                    } else {
                        prio.ranks[j][choice_buyer[v]] = 0;
                        prio.ranks[j][literal_buyer[v][p]] = 1;
                    }
                }
            }
            prio
        }
    };

    Ok(SatGadget {
        cnf: cnf.clone(),
        market,
        pricing,
        priorities,
        variant_budget_per_var,
        choice_buyer,
        literal_buyer,
        clause_buyer,
        choice_item,
        clause_literal_item,
        buffer_item,
        clause_slots,
    })
}

impl SatGadget {
    /// The stable allocation that implements a truth assignment: satisfied
    /// literals spend everything on their choice items, falsified ones on
    /// clause-literal and buffer items, and each satisfiable clause buyer
    /// buys one satisfied literal's clause item.
    pub fn assignment_allocation(&self, assignment: &[bool]) -> Allocation {
        let mut x = Allocation::zeros(&self.market);
        let whole_clause_item = if matches!(self.pricing.mode, crate::market::PricingMode::Uniform)
        {
            // clause buyers pay 2 per item with budget 1: half an item
            Rational::new(1.into(), 2.into())
        } else {
            int(1)
        };
        for v in 0..self.cnf.num_vars {
            let true_pol = if assignment[v] { 0 } else { 1 };
            let false_pol = 1 - true_pol;
            // choice buyer takes the falsified literal's choice item
            x.x[self.choice_buyer[v]][self.choice_item[v][false_pol]] = int(1);
            // the satisfied literal buyer takes its own choice item
            x.x[self.literal_buyer[v][true_pol]][self.choice_item[v][true_pol]] = int(1);
            // the falsified literal buyer takes clause-literal and buffer
            for k in 0..3 {
                x.x[self.literal_buyer[v][false_pol]][self.clause_literal_item[v][false_pol][k]] =
                    int(1);
            }
            x.x[self.literal_buyer[v][false_pol]][self.buffer_item[v][false_pol]] = int(1);
        }
        for (c, slots) in self.clause_slots.iter().enumerate() {
            if let Some((var, pol, slot)) = slots.iter().find(|(var, pol, _)| {
                let is_true = *pol == 0;
                assignment[*var] == is_true
            }) {
                let item = self.clause_literal_item[*var][*pol][*slot];
                x.x[self.clause_buyer[c]][item] = whole_clause_item.clone();
            }
        }
        x
    }

    pub fn total_gadget_budget(&self) -> Rational {
        int(self.variant_budget_per_var * self.cnf.num_vars as i64)
    }
}

/// Maximum revenue over the assignment-implemented stable allocations:
/// budget-per-variable times the variable count plus the exhaustive
/// satisfiability optimum. Every implemented allocation is verified stable.
pub fn sat_gadget_max_revenue(gadget: &SatGadget) -> Result<Rational> {
    use crate::stability::{is_stable, Scene};
    let scene = Scene::new(&gadget.market, &gadget.pricing, &gadget.priorities);
    let nv = gadget.cnf.num_vars;
    let mut best: Option<Rational> = None;
    for mask in 0..1usize << nv {
        let assignment: Vec<bool> = (0..nv).map(|v| mask >> v & 1 == 1).collect();
        let alloc = gadget.assignment_allocation(&assignment);
        let report = is_stable(&scene, &alloc)?;
        if !report.stable {
            return Err(Error::InternalInconsistency(format!(
                "assignment allocation {mask:b} is not stable"
            )));
        }
        let (_, revenue) = crate::market::revenue(&gadget.market, &gadget.pricing, &alloc);
        let expected = gadget.total_gadget_budget() + int(gadget.cnf.satisfied(&assignment) as i64);
        if revenue != expected {
            return Err(Error::InternalInconsistency(format!(
                "assignment revenue {revenue} differs from {expected}"
            )));
        }
        best = Some(match best {
            None => revenue,
            Some(b) => b.max(revenue),
        });
    }
    Ok(best.unwrap_or_else(Rational::zero))
}

/// Parses a DIMACS-style CNF: comment lines start with `c`, the header is
/// `p cnf <vars> <clauses>`, clauses are zero-terminated literal lists.
pub fn parse_dimacs(text: &str) -> Result<CnfInstance> {
    let mut num_vars = None;
    let mut clauses = Vec::new();
    let mut current = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("p ") {
            let mut parts = rest.split_whitespace();
            if parts.next() != Some("cnf") {
                return Err(Error::Parse("expected 'p cnf <vars> <clauses>'".into()));
            }
            let vars: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse("bad variable count".into()))?;
            num_vars = Some(vars);
            continue;
        }
        for token in line.split_whitespace() {
            let lit: i32 = token
                .parse()
                .map_err(|_| Error::Parse(format!("bad literal {token:?}")))?;
            if lit == 0 {
                if !current.is_empty() {
                    clauses.push(std::mem::take(&mut current));
                }
            } else {
                current.push(lit);
            }
        }
    }
    if !current.is_empty() {
        clauses.push(current);
    }
    let num_vars = num_vars.ok_or_else(|| Error::Parse("missing 'p cnf' header".into()))?;
    CnfInstance::new(num_vars, clauses)
}

// ---------------------------------------------------------------------------
// Bipartite matching
// ---------------------------------------------------------------------------

/// Bipartite graph with `left` and `right` vertex counts and an edge list.
#[derive(Debug, Clone)]
pub struct BipartiteGraph {
    pub left: usize,
    pub right: usize,
    pub edges: Vec<(usize, usize)>,
}

impl BipartiteGraph {
    pub fn new(left: usize, right: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for (u, v) in &edges {
            if *u >= left || *v >= right {
                return Err(Error::NotBipartite(format!(
                    "edge ({u}, {v}) out of range for {left} x {right}"
                )));
            }
            if !seen.insert((*u, *v)) {
                return Err(Error::NotBipartite(format!("duplicate edge ({u}, {v})")));
            }
        }
        Ok(BipartiteGraph { left, right, edges })
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.left];
        for (u, v) in &self.edges {
            adj[*u].push(*v);
        }
        adj
    }
}

/// Exhaustive minimum maximal matching: enumerate all matchings by choosing
/// a partner (or none) per left vertex, keep the maximal ones, return the
/// smallest size. The empty graph has minimum 0.
pub fn min_maximal_matching(graph: &BipartiteGraph) -> usize {
    let adj = graph.adjacency();
    let mut best: Option<usize> = None;
    let mut partner: Vec<Option<usize>> = vec![None; graph.left];
    fn recurse(
        u: usize,
        adj: &[Vec<usize>],
        edges: &[(usize, usize)],
        partner: &mut Vec<Option<usize>>,
        best: &mut Option<usize>,
    ) {
        if u == adj.len() {
            let mut right_used = std::collections::BTreeSet::new();
            for p in partner.iter().flatten() {
                right_used.insert(*p);
            }
            let maximal = edges
                .iter()
                .all(|(a, b)| partner[*a].is_some() || right_used.contains(b));
            if maximal {
                let size = partner.iter().flatten().count();
                *best = Some(best.map_or(size, |b| b.min(size)));
            }
            return;
        }
        recurse(u + 1, adj, edges, partner, best);
        for v in &adj[u] {
            if partner.iter().flatten().all(|p| p != v) {
                partner[u] = Some(*v);
                recurse(u + 1, adj, edges, partner, best);
                partner[u] = None;
            }
        }
    }
    recurse(0, &adj, &graph.edges, &mut partner, &mut best);
    best.unwrap_or(0)
}

/// All maximal matchings as allocations over the gadget's kept items; used
/// to cross-check that the integral stable allocations are exactly the
/// maximal matchings.
pub fn maximal_matching_sizes(graph: &BipartiteGraph) -> Vec<usize> {
    let adj = graph.adjacency();
    let mut sizes = Vec::new();
    let mut partner: Vec<Option<usize>> = vec![None; graph.left];
    fn recurse(
        u: usize,
        adj: &[Vec<usize>],
        edges: &[(usize, usize)],
        partner: &mut Vec<Option<usize>>,
        sizes: &mut Vec<usize>,
    ) {
        if u == adj.len() {
            let mut right_used = std::collections::BTreeSet::new();
            for p in partner.iter().flatten() {
                right_used.insert(*p);
            }
            let maximal = edges
                .iter()
                .all(|(a, b)| partner[*a].is_some() || right_used.contains(b));
            if maximal {
                sizes.push(partner.iter().flatten().count());
            }
            return;
        }
        recurse(u + 1, adj, edges, partner, sizes);
        for v in &adj[u] {
            if partner.iter().flatten().all(|p| p != v) {
                partner[u] = Some(*v);
                recurse(u + 1, adj, edges, partner, sizes);
                partner[u] = None;
            }
        }
    }
    recurse(0, &adj, &graph.edges, &mut partner, &mut sizes);
    sizes
}

#[derive(Debug, Clone)]
pub struct MatchingGadget {
    pub graph: BipartiteGraph,
    pub market: Market,
    pub pricing: PricingProfile,
    /// `kept_right[new item index]` = original right vertex
    pub kept_right: Vec<usize>,
}

/// Unit market of a bipartite graph: buyers are left vertices with budget 1,
/// items are right vertices with at least one edge (isolated right vertices
/// can never trade and are dropped), every price is 1 and v = 1 on edges.
pub fn matching_gadget_build(graph: &BipartiteGraph) -> Result<MatchingGadget> {
    let mut kept_right = Vec::new();
    for v in 0..graph.right {
        if graph.edges.iter().any(|(_, b)| *b == v) {
            kept_right.push(v);
        }
    }
    let right_index: BTreeMap<usize, usize> = kept_right
        .iter()
        .enumerate()
        .map(|(new, old)| (*old, new))
        .collect();
    let buyers: Vec<Buyer> = (0..graph.left)
        .map(|u| Buyer {
            id: format!("l{u}"),
            budget: int(1),
        })
        .collect();
    let items: Vec<Item> = kept_right
        .iter()
        .map(|v| Item {
            id: format!("r{v}"),
            seller: 0,
        })
        .collect();
    let mut valuations = vec![vec![Rational::zero(); items.len()]; buyers.len()];
    for (u, v) in &graph.edges {
        valuations[*u][right_index[v]] = int(1);
    }
    let market = Market::new(buyers, vec![Seller { id: "s".into() }], items, valuations)?;
    let pricing = PricingProfile::uniform(&market, vec![int(1); market.num_items()])?;
    Ok(MatchingGadget {
        graph: graph.clone(),
        market,
        pricing,
        kept_right,
    })
}

/// The two-seller variant: one seller owns the designated subset of right
/// vertices, the other owns the rest plus a sentinel item priced at twice
/// the total budget that every buyer values at half its price, so total
/// revenue is pinned while the designated seller's take still encodes the
/// matching structure.
pub fn matching_gadget_seller_variant(
    graph: &BipartiteGraph,
    designated: &[usize],
) -> Result<MatchingGadget> {
    let base = matching_gadget_build(graph)?;
    let n = base.market.num_buyers() as i64;
    if n == 0 {
        return Err(Error::NotBipartite(
            "variant needs at least one buyer".into(),
        ));
    }
    let mut items: Vec<Item> = base
        .market
        .items
        .iter()
        .enumerate()
        .map(|(new_idx, item)| Item {
            id: item.id.clone(),
            seller: if designated.contains(&base.kept_right[new_idx]) {
                0
            } else {
                1
            },
        })
        .collect();
    items.push(Item {
        id: "sentinel".into(),
        seller: 1,
    });
    let mut valuations = base.market.valuations.clone();
    for row in valuations.iter_mut() {
        row.push(int(n));
    }
    let market = Market::new(
        base.market.buyers.clone(),
        vec![
            Seller {
                id: "target".into(),
            },
            Seller { id: "rest".into() },
        ],
        items,
        valuations,
    )?;
    let mut prices = vec![int(1); market.num_items()];
    prices[market.num_items() - 1] = int(2 * n);
    let pricing = PricingProfile::uniform(&market, prices)?;
    Ok(MatchingGadget {
        graph: graph.clone(),
        market,
        pricing,
        kept_right: base.kept_right,
    })
}

/// Edge-list format: first line `left right`, then one `u v` pair per line
/// (0-based).
pub fn parse_edge_list(text: &str) -> Result<BipartiteGraph> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty edge list".into()))?;
    let mut parts = header.split_whitespace();
    let left: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse("bad left count".into()))?;
    let right: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse("bad right count".into()))?;
    let mut edges = Vec::new();
    for line in lines {
        let mut parts = line.split_whitespace();
        let u: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad edge line {line:?}")))?;
        let v: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad edge line {line:?}")))?;
        edges.push((u, v));
    }
    BipartiteGraph::new(left, right, edges)
}
