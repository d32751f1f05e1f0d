//! JSON file schemas: market files (with optional pricing and priorities)
//! and allocation files. Rationals travel as `"p/q"` strings; unknown fields
//! are rejected; loading and saving round-trip exactly.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{
    Allocation, Buyer, Item, Market, PricingMode, PricingProfile, PriorityProfile, Seller,
};
use crate::rational::{parse_rational, render_rational, Rational};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BuyerDoc {
    id: String,
    budget: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SellerDoc {
    id: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ItemDoc {
    id: String,
    seller: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PricingDoc {
    mode: String,
    /// uniform: item -> price; personalized: buyer -> item -> price.
    prices: serde_json::Value,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarketDoc {
    buyers: Vec<BuyerDoc>,
    sellers: Vec<SellerDoc>,
    items: Vec<ItemDoc>,
    /// buyer -> item -> rational string; omitted entries are zero.
    valuations: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pricing: Option<PricingDoc>,
    /// item -> rank groups (lists of buyer ids), first group highest.
    #[serde(skip_serializing_if = "Option::is_none")]
    priorities: Option<BTreeMap<String, Vec<Vec<String>>>>,
}

/// A market plus the optional strategy blocks found alongside it.
#[derive(Debug, Clone)]
pub struct MarketFile {
    pub market: Market,
    pub pricing: Option<PricingProfile>,
    pub priorities: Option<PriorityProfile>,
}

pub fn parse_market_str(text: &str) -> Result<MarketFile> {
    let doc: MarketDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("market file: {e}")))?;
    let buyers: Vec<Buyer> = doc
        .buyers
        .iter()
        .map(|b| {
            Ok(Buyer {
                id: b.id.clone(),
                budget: parse_rational(&b.budget)
                    .map_err(|e| Error::Parse(format!("budget of {}: {e}", b.id)))?,
            })
        })
        .collect::<Result<_>>()?;
    let sellers: Vec<Seller> = doc
        .sellers
        .iter()
        .map(|s| Seller { id: s.id.clone() })
        .collect();
    let seller_index = |id: &str| -> Result<usize> {
        sellers
            .iter()
            .position(|s| s.id == id)
            .ok_or_else(|| Error::Validation(format!("unknown seller {id:?}")))
    };
    let items: Vec<Item> = doc
        .items
        .iter()
        .map(|x| {
            Ok(Item {
                id: x.id.clone(),
                seller: seller_index(&x.seller)?,
            })
        })
        .collect::<Result<_>>()?;

    if let Some(dup) = duplicates(buyers.iter().map(|b| b.id.as_str())) {
        return Err(Error::Validation(format!("duplicate buyer id {dup:?}")));
    }
    if let Some(dup) = duplicates(items.iter().map(|x| x.id.as_str())) {
        return Err(Error::Validation(format!("duplicate item id {dup:?}")));
    }
    if let Some(dup) = duplicates(sellers.iter().map(|s| s.id.as_str())) {
        return Err(Error::Validation(format!("duplicate seller id {dup:?}")));
    }

    let buyer_index = |id: &str| -> Result<usize> {
        buyers
            .iter()
            .position(|b| b.id == id)
            .ok_or_else(|| Error::Validation(format!("unknown buyer {id:?}")))
    };
    let item_index = |id: &str| -> Result<usize> {
        items
            .iter()
            .position(|x| x.id == id)
            .ok_or_else(|| Error::Validation(format!("unknown item {id:?}")))
    };

    let mut valuations = vec![vec![Rational::from_integer(0.into()); items.len()]; buyers.len()];
    for (bid, row) in &doc.valuations {
        let i = buyer_index(bid)?;
        for (iid, val) in row {
            let j = item_index(iid)?;
            valuations[i][j] = parse_rational(val)
                .map_err(|e| Error::Parse(format!("valuation ({bid}, {iid}): {e}")))?;
        }
    }
    let market = Market::new(buyers, sellers, items, valuations)?;

    let pricing = match &doc.pricing {
        None => None,
        Some(p) => Some(parse_pricing(&market, p)?),
    };

    let priorities = match &doc.priorities {
        None => None,
        Some(map) => {
            let mut ranks = vec![vec![0usize; market.num_buyers()]; market.num_items()];
            for (iid, groups) in map {
                let j = market
                    .item_index(iid)
                    .ok_or_else(|| Error::Validation(format!("unknown item {iid:?}")))?;
                let mut seen = vec![false; market.num_buyers()];
                for (rank, group) in groups.iter().enumerate() {
                    for bid in group {
                        let i = market
                            .buyer_index(bid)
                            .ok_or_else(|| Error::Validation(format!("unknown buyer {bid:?}")))?;
                        if seen[i] {
                            return Err(Error::Validation(format!(
                                "buyer {bid:?} listed twice in priorities of {iid:?}"
                            )));
                        }
                        seen[i] = true;
                        ranks[j][i] = rank;
                    }
                }
                if let Some(missing) = seen.iter().position(|s| !s) {
                    return Err(Error::Validation(format!(
                        "priorities of {iid:?} omit buyer {:?}",
                        market.buyers[missing].id
                    )));
                }
            }
            // Items without an explicit entry default to all-tied rank 0.
            Some(PriorityProfile { ranks })
        }
    };

    Ok(MarketFile {
        market,
        pricing,
        priorities,
    })
}

fn parse_pricing(market: &Market, doc: &PricingDoc) -> Result<PricingProfile> {
    match doc.mode.as_str() {
        "uniform" => {
            let map: BTreeMap<String, String> = serde_json::from_value(doc.prices.clone())
                .map_err(|e| Error::Parse(format!("uniform prices: {e}")))?;
            let mut items = vec![Rational::from_integer(0.into()); market.num_items()];
            let mut given = vec![false; market.num_items()];
            for (iid, p) in &map {
                let j = market
                    .item_index(iid)
                    .ok_or_else(|| Error::Validation(format!("unknown item {iid:?}")))?;
                items[j] = parse_rational(p)?;
                given[j] = true;
            }
            if let Some(j) = given.iter().position(|g| !g) {
                return Err(Error::Validation(format!(
                    "no price for item {:?}",
                    market.items[j].id
                )));
            }
            PricingProfile::uniform(market, items)
        }
        "personalized" => {
            let map: BTreeMap<String, BTreeMap<String, String>> =
                serde_json::from_value(doc.prices.clone())
                    .map_err(|e| Error::Parse(format!("personalized prices: {e}")))?;
            let mut prices = vec![
                vec![Rational::from_integer(0.into()); market.num_items()];
                market.num_buyers()
            ];
            for (bid, row) in &map {
                let i = market
                    .buyer_index(bid)
                    .ok_or_else(|| Error::Validation(format!("unknown buyer {bid:?}")))?;
                for (iid, p) in row {
                    let j = market
                        .item_index(iid)
                        .ok_or_else(|| Error::Validation(format!("unknown item {iid:?}")))?;
                    prices[i][j] = parse_rational(p)?;
                }
            }
            PricingProfile::personalized(market, prices)
        }
        other => Err(Error::Parse(format!("unknown pricing mode {other:?}"))),
    }
}

pub fn load_market(path: &Path) -> Result<MarketFile> {
    let text = std::fs::read_to_string(path)?;
    parse_market_str(&text)
}

pub fn render_market(file: &MarketFile) -> String {
    let market = &file.market;
    let doc = MarketDoc {
        buyers: market
            .buyers
            .iter()
            .map(|b| BuyerDoc {
                id: b.id.clone(),
                budget: render_rational(&b.budget),
            })
            .collect(),
        sellers: market
            .sellers
            .iter()
            .map(|s| SellerDoc { id: s.id.clone() })
            .collect(),
        items: market
            .items
            .iter()
            .map(|x| ItemDoc {
                id: x.id.clone(),
                seller: market.sellers[x.seller].id.clone(),
            })
            .collect(),
        valuations: market
            .buyers
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let row: BTreeMap<String, String> = market
                    .items
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| market.value(i, *j) != &Rational::from_integer(0.into()))
                    .map(|(j, item)| (item.id.clone(), render_rational(market.value(i, j))))
                    .collect();
                (b.id.clone(), row)
            })
            .collect(),
        pricing: file.pricing.as_ref().map(|p| render_pricing(market, p)),
        priorities: file.priorities.as_ref().map(|pr| {
            market
                .items
                .iter()
                .enumerate()
                .map(|(j, item)| {
                    let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
                    for (i, b) in market.buyers.iter().enumerate() {
                        groups.entry(pr.rank(j, i)).or_default().push(b.id.clone());
                    }
                    (item.id.clone(), groups.into_values().collect())
                })
                .collect()
        }),
    };
    serde_json::to_string_pretty(&doc).expect("market serialization")
}

fn render_pricing(market: &Market, pricing: &PricingProfile) -> PricingDoc {
    match pricing.mode {
        PricingMode::Uniform => {
            let map: BTreeMap<String, String> = market
                .items
                .iter()
                .enumerate()
                .map(|(j, item)| (item.id.clone(), render_rational(pricing.price(0, j))))
                .collect();
            PricingDoc {
                mode: "uniform".into(),
                prices: serde_json::to_value(map).unwrap(),
            }
        }
        PricingMode::Personalized => {
            let map: BTreeMap<String, BTreeMap<String, String>> = market
                .buyers
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    let row = market
                        .items
                        .iter()
                        .enumerate()
                        .map(|(j, item)| (item.id.clone(), render_rational(pricing.price(i, j))))
                        .collect();
                    (b.id.clone(), row)
                })
                .collect();
            PricingDoc {
                mode: "personalized".into(),
                prices: serde_json::to_value(map).unwrap(),
            }
        }
    }
}

pub fn save_market(path: &Path, file: &MarketFile) -> Result<()> {
    std::fs::write(path, render_market(file) + "\n")?;
    Ok(())
}

/// Allocation files: buyer -> item -> rational string.
pub fn parse_allocation_str(market: &Market, text: &str) -> Result<Allocation> {
    let map: BTreeMap<String, BTreeMap<String, String>> =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("allocation file: {e}")))?;
    let mut alloc = Allocation::zeros(market);
    for (bid, row) in &map {
        let i = market
            .buyer_index(bid)
            .ok_or_else(|| Error::Validation(format!("unknown buyer {bid:?}")))?;
        for (iid, frac) in row {
            let j = market
                .item_index(iid)
                .ok_or_else(|| Error::Validation(format!("unknown item {iid:?}")))?;
            alloc.x[i][j] = parse_rational(frac)?;
        }
    }
    if !alloc.is_feasible(market) {
        return Err(Error::Validation("allocation violates supply caps".into()));
    }
    Ok(alloc)
}

pub fn render_allocation(market: &Market, alloc: &Allocation) -> String {
    let map: BTreeMap<String, BTreeMap<String, String>> = market
        .buyers
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let row: BTreeMap<String, String> = market
                .items
                .iter()
                .enumerate()
                .filter(|(j, _)| !alloc.get(i, *j).eq(&Rational::from_integer(0.into())))
                .map(|(j, item)| (item.id.clone(), render_rational(alloc.get(i, j))))
                .collect();
            (b.id.clone(), row)
        })
        .collect();
    serde_json::to_string_pretty(&map).expect("allocation serialization")
}

fn duplicates<'a>(ids: impl Iterator<Item = &'a str>) -> Option<String> {
    let mut seen = std::collections::BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Some(id.to_string());
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    const THREE_ITEM: &str = r#"{
        "buyers": [{"id": "b1", "budget": "2"}, {"id": "b2", "budget": "2"}],
        "sellers": [{"id": "s1"}, {"id": "s2"}],
        "items": [
            {"id": "g1", "seller": "s1"},
            {"id": "g2", "seller": "s2"},
            {"id": "g3", "seller": "s2"}
        ],
        "valuations": {
            "b1": {"g1": "2", "g2": "1"},
            "b2": {"g1": "1/3", "g2": "1", "g3": "1"}
        },
        "pricing": {"mode": "uniform", "prices": {"g1": "2", "g2": "1", "g3": "1"}}
    }"#;

    #[test]
    fn loads_three_item_fixture() {
        let f = parse_market_str(THREE_ITEM).unwrap();
        assert_eq!(f.market.buyers[0].budget, int(2));
        assert_eq!(f.market.valuations[0], vec![int(2), int(1), int(0)]);
        assert_eq!(f.market.valuations[1], vec![rat(1, 3), int(1), int(1)]);
        let pricing = f.pricing.unwrap();
        assert_eq!(pricing.price(0, 0), &int(2));
        assert_eq!(pricing.price(1, 2), &int(1));
    }

    #[test]
    fn round_trips() {
        let f = parse_market_str(THREE_ITEM).unwrap();
        let text = render_market(&f);
        let g = parse_market_str(&text).unwrap();
        assert_eq!(g.market.valuations, f.market.valuations);
        assert_eq!(g.pricing.unwrap().prices, f.pricing.unwrap().prices);
    }

    #[test]
    fn rejects_unknown_fields() {
        let bad = THREE_ITEM.replacen("\"buyers\"", "\"extra\": 1, \"buyers\"", 1);
        assert!(matches!(parse_market_str(&bad), Err(Error::Parse(_))));
    }

    #[test]
    fn rejects_unknown_seller_reference() {
        let bad = THREE_ITEM.replace(
            "{\"id\": \"g1\", \"seller\": \"s1\"}",
            "{\"id\": \"g1\", \"seller\": \"sX\"}",
        );
        assert!(matches!(parse_market_str(&bad), Err(Error::Validation(_))));
    }

    #[test]
    fn rejects_zero_price_for_valued_item() {
        let bad = THREE_ITEM.replace(
            "\"g1\": \"2\", \"g2\": \"1\", \"g3\": \"1\"",
            "\"g1\": \"2\", \"g2\": \"0\", \"g3\": \"1\"",
        );
        assert!(matches!(parse_market_str(&bad), Err(Error::Validation(_))));
    }

    #[test]
    fn allocation_round_trip() {
        let f = parse_market_str(THREE_ITEM).unwrap();
        let text = r#"{"b1": {"g1": "1"}, "b2": {"g2": "1", "g3": "1/2"}}"#;
        let alloc = parse_allocation_str(&f.market, text).unwrap();
        assert_eq!(alloc.get(1, 2), &rat(1, 2));
        let rendered = render_allocation(&f.market, &alloc);
        let back = parse_allocation_str(&f.market, &rendered).unwrap();
        assert_eq!(back, alloc);
    }

    #[test]
    fn priorities_parse() {
        let with_prio = THREE_ITEM.replace(
            "\"pricing\"",
            "\"priorities\": {\"g2\": [[\"b1\"], [\"b2\"]]}, \"pricing\"",
        );
        let f = parse_market_str(&with_prio).unwrap();
        let pr = f.priorities.unwrap();
        assert_eq!(pr.rank(1, 0), 0);
        assert_eq!(pr.rank(1, 1), 1);
        assert_eq!(pr.rank(0, 0), 0);
        assert_eq!(pr.rank(0, 1), 0);
    }
}
