//! C ABI for the pricecomp engine.
//!
//! Markets travel as the same JSON documents the CLI reads; results come
//! back as JSON strings. Handles are opaque; every returned string must be
//! released with `pricecomp_string_free` and every market with
//! `pricecomp_market_free`. Functions report a `PricecompStatus`; on
//! failure, `pricecomp_last_error` returns a message for the calling
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use pricecomp::equilibrium::{
    competitive_equilibrium, default_deviation_factors, verify_maximin, MaximinOutcome,
    CE_DEFAULT_TOLERANCE,
};
use pricecomp::io::{parse_market_str, MarketFile};
use pricecomp::market::{natural_priority, revenue, Allocation, PriorityProfile};
use pricecomp::oracle::stable_set_extrema;
use pricecomp::rational::{render_rational, Rational};
use pricecomp::revenue::max_revenue_lp;
use pricecomp::stability::{fractional_gale_shapley, is_stable, Scene};
use pricecomp::Error;

/// Status codes; mirrors the CLI exit-code contract.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PricecompStatus {
    Ok = 0,
    /// Internal failure (a bug); message available via last_error.
    Internal = 1,
    /// Parse or validation failure of the input.
    Invalid = 2,
    /// Instance exceeds an exact-enumeration size cap.
    SizeCap = 3,
    /// A null pointer or non-UTF8 string was passed.
    BadArgument = 4,
}

/// Opaque loaded market (with its optional pricing and priorities).
pub struct PricecompMarket {
    file: MarketFile,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(msg).ok();
    });
}

fn status_of(e: &Error) -> PricecompStatus {
    match e {
        Error::Parse(_) | Error::Validation(_) | Error::InvalidPrices(_) => {
            PricecompStatus::Invalid
        }
        Error::SizeCapExceeded(_) => PricecompStatus::SizeCap,
        _ => PricecompStatus::Internal,
    }
}

/// # Safety
/// `text` must be a valid NUL-terminated string.
unsafe fn utf8_arg<'a>(text: *const c_char) -> Option<&'a str> {
    if text.is_null() {
        return None;
    }
    CStr::from_ptr(text).to_str().ok()
}

fn give_string(out: *mut *mut c_char, text: String) -> PricecompStatus {
    match CString::new(text) {
        Ok(s) => {
            unsafe { *out = s.into_raw() };
            PricecompStatus::Ok
        }
        Err(_) => {
            set_error("result contained an interior NUL".into());
            PricecompStatus::Internal
        }
    }
}

/// Last error message for this thread, or NULL. The pointer stays valid
/// until the next failing call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn pricecomp_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|s| s.as_ptr())
            .unwrap_or(ptr::null())
    })
}

/// Parses a market JSON document.
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `out` must be non-null.
#[no_mangle]
pub unsafe extern "C" fn pricecomp_market_parse(
    json: *const c_char,
    out: *mut *mut PricecompMarket,
) -> PricecompStatus {
    if out.is_null() {
        return PricecompStatus::BadArgument;
    }
    let Some(text) = utf8_arg(json) else {
        set_error("market JSON must be valid UTF-8".into());
        return PricecompStatus::BadArgument;
    };
    match parse_market_str(text) {
        Ok(file) => {
            *out = Box::into_raw(Box::new(PricecompMarket { file }));
            PricecompStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            *out = ptr::null_mut();
            status_of(&e)
        }
    }
}

/// # Safety
/// `market` must come from `pricecomp_market_parse` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pricecomp_market_free(market: *mut PricecompMarket) {
    if !market.is_null() {
        drop(Box::from_raw(market));
    }
}

/// # Safety
/// `s` must come from a pricecomp function that allocated it.
#[no_mangle]
pub unsafe extern "C" fn pricecomp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn with_market<F>(market: *const PricecompMarket, out: *mut *mut c_char, f: F) -> PricecompStatus
where
    F: FnOnce(&MarketFile) -> Result<serde_json::Value, Error>,
{
    if market.is_null() || out.is_null() {
        return PricecompStatus::BadArgument;
    }
    let handle = unsafe { &*market };
    match f(&handle.file) {
        Ok(value) => give_string(out, value.to_string()),
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

fn allocation_value(file: &MarketFile, alloc: &Allocation) -> serde_json::Value {
    let mut outer = serde_json::Map::new();
    for (i, b) in file.market.buyers.iter().enumerate() {
        let mut inner = serde_json::Map::new();
        for (j, item) in file.market.items.iter().enumerate() {
            if alloc.get(i, j) != &Rational::from_integer(0.into()) {
                inner.insert(
                    item.id.clone(),
                    serde_json::json!(render_rational(alloc.get(i, j))),
                );
            }
        }
        outer.insert(b.id.clone(), serde_json::Value::Object(inner));
    }
    serde_json::Value::Object(outer)
}

/// Stable allocation by fractional deferred acceptance; requires a pricing
/// block in the market document. Result: {"allocation", "stability",
/// "revenue_total"}.
///
/// # Safety
/// Pointers as in `pricecomp_market_parse`.
#[no_mangle]
pub unsafe extern "C" fn pricecomp_stable_solve(
    market: *const PricecompMarket,
    out: *mut *mut c_char,
) -> PricecompStatus {
    with_market(market, out, |file| {
        let pricing = file
            .pricing
            .as_ref()
            .ok_or_else(|| Error::Validation("market document has no pricing".into()))?;
        let priorities = file
            .priorities
            .clone()
            .unwrap_or_else(|| natural_priority(&file.market, pricing));
        let scene = Scene::new(&file.market, pricing, &priorities);
        let alloc = fractional_gale_shapley(&scene)?;
        let report = is_stable(&scene, &alloc)?;
        let (_, total) = revenue(&file.market, pricing, &alloc);
        Ok(serde_json::json!({
            "allocation": allocation_value(file, &alloc),
            "stability": report.to_json(&file.market),
            "revenue_total": render_rational(&total),
        }))
    })
}

/// Revenue-optimal stable allocation under uniform pricing. Result:
/// {"revenue", "allocation"}.
///
/// # Safety
/// Pointers as in `pricecomp_market_parse`.
#[no_mangle]
pub unsafe extern "C" fn pricecomp_max_revenue(
    market: *const PricecompMarket,
    out: *mut *mut c_char,
) -> PricecompStatus {
    with_market(market, out, |file| {
        let pricing = file
            .pricing
            .as_ref()
            .ok_or_else(|| Error::Validation("market document has no pricing".into()))?;
        let (alloc, r) = max_revenue_lp(&file.market, pricing)?;
        Ok(serde_json::json!({
            "revenue": render_rational(&r),
            "allocation": allocation_value(file, &alloc),
        }))
    })
}

/// Exact stable-set extrema. Result: {"revenue_min", "revenue_max",
/// "sellers": [{"id", "min", "max"}]}.
///
/// # Safety
/// Pointers as in `pricecomp_market_parse`.
#[no_mangle]
pub unsafe extern "C" fn pricecomp_extrema(
    market: *const PricecompMarket,
    out: *mut *mut c_char,
) -> PricecompStatus {
    with_market(market, out, |file| {
        let pricing = file
            .pricing
            .as_ref()
            .ok_or_else(|| Error::Validation("market document has no pricing".into()))?;
        let priorities = file
            .priorities
            .clone()
            .unwrap_or_else(|| natural_priority(&file.market, pricing));
        let scene = Scene::new(&file.market, pricing, &priorities);
        let summary = stable_set_extrema(&scene)?;
        Ok(serde_json::json!({
            "revenue_min": render_rational(&summary.revenue_min),
            "revenue_max": render_rational(&summary.revenue_max),
            "sellers": file.market.sellers.iter().enumerate().map(|(k, s)| {
                serde_json::json!({
                    "id": s.id,
                    "min": render_rational(&summary.per_seller[k].min),
                    "max": render_rational(&summary.per_seller[k].max),
                })
            }).collect::<Vec<_>>(),
        }))
    })
}

/// Competitive equilibrium; the market needs no pricing block. Result:
/// {"exact", "prices", "allocation"}.
///
/// # Safety
/// Pointers as in `pricecomp_market_parse`.
#[no_mangle]
pub unsafe extern "C" fn pricecomp_competitive_equilibrium(
    market: *const PricecompMarket,
    out: *mut *mut c_char,
) -> PricecompStatus {
    with_market(market, out, |file| {
        let ce = competitive_equilibrium(&file.market, CE_DEFAULT_TOLERANCE)?;
        Ok(serde_json::json!({
            "exact": ce.exact,
            "prices": file.market.items.iter().enumerate()
                .map(|(j, item)| (item.id.clone(), serde_json::json!(render_rational(&ce.prices[j]))))
                .collect::<serde_json::Map<_, _>>(),
            "allocation": allocation_value(file, &ce.allocation),
        }))
    })
}

/// Maximin verdict over the default deviation grid for the pricing in the
/// document, using the lexicographic revenue-optimal allocation. Result:
/// {"verdict"}.
///
/// # Safety
/// Pointers as in `pricecomp_market_parse`.
#[no_mangle]
pub unsafe extern "C" fn pricecomp_maximin(
    market: *const PricecompMarket,
    out: *mut *mut c_char,
) -> PricecompStatus {
    with_market(market, out, |file| {
        let pricing = file
            .pricing
            .as_ref()
            .ok_or_else(|| Error::Validation("market document has no pricing".into()))?;
        let (alloc, _) = max_revenue_lp(&file.market, pricing)?;
        let verdict = verify_maximin(
            &file.market,
            pricing,
            &alloc,
            &default_deviation_factors(),
            &[],
        )?;
        Ok(serde_json::json!({
            "verdict": match verdict.outcome {
                MaximinOutcome::Certified => "CERTIFIED",
                MaximinOutcome::Refuted => "REFUTED",
                MaximinOutcome::Unknown => "UNKNOWN",
            },
        }))
    })
}

/// Number of buyers; -1 on a null handle. Cheap structural accessor so
/// bindings can sanity-check a parse without JSON round-trips.
///
/// # Safety
/// `market` as in `pricecomp_market_parse`.
#[no_mangle]
pub unsafe extern "C" fn pricecomp_num_buyers(market: *const PricecompMarket) -> i64 {
    if market.is_null() {
        return -1;
    }
    (*market).file.market.num_buyers() as i64
}

/// # Safety
/// `market` as in `pricecomp_market_parse`.
#[no_mangle]
pub unsafe extern "C" fn pricecomp_num_items(market: *const PricecompMarket) -> i64 {
    if market.is_null() {
        return -1;
    }
    (*market).file.market.num_items() as i64
}

// keep the unused-import lint honest: PriorityProfile appears only in type
// inference above
#[allow(unused)]
fn _assert_types(p: PriorityProfile) -> PriorityProfile {
    p
}
