#ifndef PRICECOMP_H
#define PRICECOMP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; mirrors the CLI exit-code contract.
 */
typedef enum PricecompStatus {
  PricecompStatus_Ok = 0,
  /**
   * Internal failure (a bug); message available via last_error.
   */
  PricecompStatus_Internal = 1,
  /**
   * Parse or validation failure of the input.
   */
  PricecompStatus_Invalid = 2,
  /**
   * Instance exceeds an exact-enumeration size cap.
   */
  PricecompStatus_SizeCap = 3,
  /**
   * A null pointer or non-UTF8 string was passed.
   */
  PricecompStatus_BadArgument = 4,
} PricecompStatus;

/**
 * Opaque loaded market (with its optional pricing and priorities).
 */
typedef struct PricecompMarket PricecompMarket;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message for this thread, or NULL. The pointer stays valid
 * until the next failing call on the same thread; do not free it.
 */
const char *pricecomp_last_error(void);

/**
 * Parses a market JSON document.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string; `out` must be non-null.
 */
enum PricecompStatus pricecomp_market_parse(const char *json, struct PricecompMarket **out);

/**
 * # Safety
 * `market` must come from `pricecomp_market_parse` and not be freed twice.
 */
void pricecomp_market_free(struct PricecompMarket *market);

/**
 * # Safety
 * `s` must come from a pricecomp function that allocated it.
 */
void pricecomp_string_free(char *s);

/**
 * Stable allocation by fractional deferred acceptance; requires a pricing
 * block in the market document. Result: {"allocation", "stability",
 * "revenue_total"}.
 *
 * # Safety
 * Pointers as in `pricecomp_market_parse`.
 */
enum PricecompStatus pricecomp_stable_solve(const struct PricecompMarket *market, char **out);

/**
 * Revenue-optimal stable allocation under uniform pricing. Result:
 * {"revenue", "allocation"}.
 *
 * # Safety
 * Pointers as in `pricecomp_market_parse`.
 */
enum PricecompStatus pricecomp_max_revenue(const struct PricecompMarket *market, char **out);

/**
 * Exact stable-set extrema. Result: {"revenue_min", "revenue_max",
 * "sellers": [{"id", "min", "max"}]}.
 *
 * # Safety
 * Pointers as in `pricecomp_market_parse`.
 */
enum PricecompStatus pricecomp_extrema(const struct PricecompMarket *market, char **out);

/**
 * Competitive equilibrium; the market needs no pricing block. Result:
 * {"exact", "prices", "allocation"}.
 *
 * # Safety
 * Pointers as in `pricecomp_market_parse`.
 */
enum PricecompStatus pricecomp_competitive_equilibrium(const struct PricecompMarket *market,
                                                       char **out);

/**
 * Maximin verdict over the default deviation grid for the pricing in the
 * document, using the lexicographic revenue-optimal allocation. Result:
 * {"verdict"}.
 *
 * # Safety
 * Pointers as in `pricecomp_market_parse`.
 */
enum PricecompStatus pricecomp_maximin(const struct PricecompMarket *market, char **out);

/**
 * Number of buyers; -1 on a null handle. Cheap structural accessor so
 * bindings can sanity-check a parse without JSON round-trips.
 *
 * # Safety
 * `market` as in `pricecomp_market_parse`.
 */
int64_t pricecomp_num_buyers(const struct PricecompMarket *market);

/**
 * # Safety
 * `market` as in `pricecomp_market_parse`.
 */
int64_t pricecomp_num_items(const struct PricecompMarket *market);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* PRICECOMP_H */
