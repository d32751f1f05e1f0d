//! Command-line front door: validation, solving, verification, sweeps and
//! gadget generation. All numeric output is exact rational strings unless
//! --float is passed. Exit codes: 0 success, 2 validation/parse failure,
//! 3 size cap exceeded, 4 expectation failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use pricecomp::duopoly::{
    conjectured_profile, deviation_revenue_formula, duopoly_outcome, is_nash_on_grid,
    st_family_market, DuopolyProfile, NashVerdict,
};
use pricecomp::equilibrium::{
    competitive_equilibrium, default_deviation_factors, verify_ce, verify_maximin,
    DeviationEvidence, MaximinOutcome, CE_DEFAULT_TOLERANCE,
};
use pricecomp::gadgets::{
    matching_gadget_build, matching_gadget_seller_variant, parse_dimacs, parse_edge_list,
    sat_gadget_build, SatVariant,
};
use pricecomp::io::{
    load_market, parse_allocation_str, render_allocation, render_market, MarketFile,
};
use pricecomp::market::{
    natural_priority, revenue, Allocation, Market, PricingProfile, PriorityProfile,
};
use pricecomp::oracle::stable_set_extrema;
use pricecomp::rational::{parse_rational, render_rational, to_f64, Rational};
use pricecomp::revenue::{
    build_flow_network, max_revenue_lp, stable_edmonds_karp, structured_min_cut,
};
use pricecomp::stability::{fractional_gale_shapley, is_stable, Scene};
use pricecomp::Error;

#[derive(Parser)]
#[command(
    name = "pricecomp",
    version,
    about = "Exact analysis of price competition in linear Fisher markets"
)]
struct Cli {
    /// Worker threads for grid sweeps (0 = rayon default)
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Render numeric output as floats instead of exact rationals
    #[arg(long, global = true)]
    float: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a market file against the schema and invariants
    Check { market: PathBuf },
    /// Compute a stable allocation by fractional deferred acceptance
    Stable {
        market: PathBuf,
        /// Write the allocation to a file as well as the report to stdout
        #[arg(long)]
        allocation_out: Option<PathBuf>,
    },
    /// Revenue-optimal stable allocation under uniform pricing
    Maxrev {
        market: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
        /// Include the flow network's structured minimum cut in the report
        #[arg(long)]
        emit_certificate: bool,
    },
    /// Exact extrema of the stable set by case enumeration
    Extrema { market: PathBuf },
    /// Competitive equilibrium with exact reconstruction
    Ce {
        market: PathBuf,
        #[arg(long, default_value_t = CE_DEFAULT_TOLERANCE)]
        tol: f64,
    },
    /// Maximin verdict for the pricing and allocation in the market file
    Maximin {
        market: PathBuf,
        /// Allocation file (defaults to the lexicographic LP optimum)
        #[arg(long)]
        allocation: Option<PathBuf>,
        /// Extra deviations: JSON list of {"seller": id, "prices": {item: rat}}
        #[arg(long)]
        deviations: Option<PathBuf>,
        /// Multiplicative grid factors, comma separated rationals
        #[arg(long)]
        grid: Option<String>,
        /// Exit non-zero unless the verdict matches
        #[arg(long)]
        expect: Option<Expectation>,
    },
    /// Duopoly analyses over the two-parameter family
    Duopoly(DuopolyArgs),
    /// Generate oracle test markets from reduction gadgets
    Gadget {
        #[command(subcommand)]
        kind: GadgetKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Lp,
    Flow,
    Both,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Expectation {
    Certified,
    Refuted,
}

#[derive(Args)]
struct DuopolyArgs {
    /// Market family (the two-buyer four-item family is the only one)
    family: String,
    #[arg(long)]
    s: String,
    #[arg(long)]
    t: String,
    /// Profile: "ce", "conjectured", or four comma-separated reports a1,a2,b1,b2
    #[arg(long, default_value = "ce")]
    profile: String,
    /// Run the grid Nash check for the profile
    #[arg(long)]
    nash: bool,
    /// Sweep s and t over a grid with this step instead of a single point
    #[arg(long)]
    sweep: Option<String>,
    /// Report grid resolution: reports are k/step for k = 1..=3*step
    #[arg(long, default_value_t = 12)]
    grid_step: i64,
    /// Allow the conjectured profile (labeled CONJECTURE in output)
    #[arg(long)]
    experimental: bool,
    /// Evaluate the closed-form deviation revenue at this p
    #[arg(long)]
    deviation_p: Option<String>,
}

#[derive(Subcommand)]
enum GadgetKind {
    /// 3SAT-3 market from a DIMACS CNF file
    Sat {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = SatVariantArg::Personalized)]
        variant: SatVariantArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Unit market from a bipartite edge list
    Matching {
        #[arg(long = "in")]
        input: PathBuf,
        /// Designated right vertices for the two-seller variant
        #[arg(long, value_delimiter = ',')]
        designated: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SatVariantArg {
    Personalized,
    Uniform,
    Forced,
}

/// Prints a line to stdout; exits quietly when the reader closed the pipe
/// (e.g. `pricecomp duopoly ... --sweep | head`).
fn emit(line: std::fmt::Arguments) {
    use std::io::Write;
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    if writeln!(lock, "{line}").is_err() {
        std::process::exit(0);
    }
}

macro_rules! emitln {
    ($($arg:tt)*) => { emit(format_args!($($arg)*)) };
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global();
    }
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Parse(_)
                | Error::Validation(_)
                | Error::InvalidPrices(_)
                | Error::Io(_)
                | Error::OutOfRegime(_) => 2,
                Error::SizeCapExceeded(_) => 3,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

fn num(cli: &Cli, q: &Rational) -> serde_json::Value {
    if cli.float {
        json!(to_f64(q))
    } else {
        json!(render_rational(q))
    }
}

fn allocation_json(cli: &Cli, market: &Market, alloc: &Allocation) -> serde_json::Value {
    let mut outer = serde_json::Map::new();
    for (i, b) in market.buyers.iter().enumerate() {
        let mut inner = serde_json::Map::new();
        for (j, item) in market.items.iter().enumerate() {
            if !alloc.get(i, j).eq(&Rational::from_integer(0.into())) {
                inner.insert(item.id.clone(), num(cli, alloc.get(i, j)));
            }
        }
        outer.insert(b.id.clone(), serde_json::Value::Object(inner));
    }
    serde_json::Value::Object(outer)
}

fn needs_pricing(file: &MarketFile) -> Result<&PricingProfile, Error> {
    file.pricing
        .as_ref()
        .ok_or_else(|| Error::Validation("this command needs a pricing block".into()))
}

fn priorities_or_natural(file: &MarketFile, pricing: &PricingProfile) -> PriorityProfile {
    file.priorities
        .clone()
        .unwrap_or_else(|| natural_priority(&file.market, pricing))
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    match &cli.command {
        Command::Check { market } => {
            let file = load_market(market)?;
            emitln!(
                "{}",
                json!({
                    "ok": true,
                    "buyers": file.market.num_buyers(),
                    "items": file.market.num_items(),
                    "sellers": file.market.num_sellers(),
                    "pricing": file.pricing.is_some(),
                    "priorities": file.priorities.is_some(),
                })
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Stable {
            market,
            allocation_out,
        } => {
            let file = load_market(market)?;
            let pricing = needs_pricing(&file)?;
            let priorities = priorities_or_natural(&file, pricing);
            let scene = Scene::new(&file.market, pricing, &priorities);
            let allocation = fractional_gale_shapley(&scene)?;
            let report = is_stable(&scene, &allocation)?;
            let (per_seller, total) = revenue(&file.market, pricing, &allocation);
            if let Some(path) = allocation_out {
                std::fs::write(path, render_allocation(&file.market, &allocation) + "\n")?;
            }
            emitln!(
                "{}",
                json!({
                    "allocation": allocation_json(cli, &file.market, &allocation),
                    "stability": report.to_json(&file.market),
                    "revenue": {
                        "total": num(cli, &total),
                        "per_seller": file.market.sellers.iter().enumerate()
                            .map(|(k, s)| (s.id.clone(), num(cli, &per_seller[k])))
                            .collect::<serde_json::Map<_, _>>(),
                    },
                })
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Maxrev {
            market,
            method,
            emit_certificate,
        } => {
            let file = load_market(market)?;
            let pricing = needs_pricing(&file)?;
            let mut out = serde_json::Map::new();
            let mut lp_result = None;
            if matches!(method, Method::Lp | Method::Both) {
                let (alloc, r) = max_revenue_lp(&file.market, pricing)?;
                out.insert("lp_revenue".into(), num(cli, &r));
                out.insert(
                    "lp_allocation".into(),
                    allocation_json(cli, &file.market, &alloc),
                );
                lp_result = Some(r);
            }
            if matches!(method, Method::Flow | Method::Both) {
                let start = Allocation::zeros(&file.market);
                let run = stable_edmonds_karp(&file.market, pricing, &start)?;
                out.insert("flow_revenue".into(), num(cli, &run.revenue));
                out.insert(
                    "flow_allocation".into(),
                    allocation_json(cli, &file.market, &run.allocation),
                );
                if let Some(lp) = &lp_result {
                    if *lp != run.revenue {
                        return Err(Error::InternalInconsistency(format!(
                            "LP revenue {lp} differs from flow revenue {}",
                            run.revenue
                        )));
                    }
                    out.insert("methods_agree".into(), json!(true));
                }
            }
            if *emit_certificate {
                let net = build_flow_network(&file.market, pricing)?;
                let flow = pricecomp::flow::max_flow(&net.graph);
                let mut edges = serde_json::Map::new();
                for i in 0..net.num_buyers {
                    for j in 0..net.num_items {
                        let f = &flow.f[net.buyer_vertex(i)][net.item_vertex(j)];
                        if f > &Rational::from_integer(0.into()) {
                            edges.insert(
                                format!(
                                    "{}->{}",
                                    file.market.buyers[i].id, file.market.items[j].id
                                ),
                                num(cli, f),
                            );
                        }
                    }
                }
                let cut = structured_min_cut(&net);
                out.insert(
                    "max_flow".into(),
                    json!({
                        "value": num(cli, &flow.value),
                        "edges": edges,
                    }),
                );
                out.insert(
                    "min_cut".into(),
                    json!({
                        "capacity": num(cli, &cut.capacity),
                        "source_side_buyers": (0..net.num_buyers)
                            .filter(|i| cut.in_s[net.buyer_vertex(*i)])
                            .map(|i| file.market.buyers[i].id.clone())
                            .collect::<Vec<_>>(),
                        "source_side_items": (0..net.num_items)
                            .filter(|j| cut.in_s[net.item_vertex(*j)])
                            .map(|j| file.market.items[j].id.clone())
                            .collect::<Vec<_>>(),
                    }),
                );
            }
            emitln!("{}", serde_json::Value::Object(out));
            Ok(ExitCode::SUCCESS)
        }
        Command::Extrema { market } => {
            let file = load_market(market)?;
            let pricing = needs_pricing(&file)?;
            let priorities = priorities_or_natural(&file, pricing);
            let scene = Scene::new(&file.market, pricing, &priorities);
            let summary = stable_set_extrema(&scene)?;
            emitln!(
                "{}",
                json!({
                    "cases_total": summary.cases_total,
                    "cases_feasible": summary.cases_feasible,
                    "revenue_min": num(cli, &summary.revenue_min),
                    "revenue_max": num(cli, &summary.revenue_max),
                    "min_allocation": allocation_json(cli, &file.market, &summary.min_representative),
                    "max_allocation": allocation_json(cli, &file.market, &summary.max_representative),
                    "sellers": file.market.sellers.iter().enumerate().map(|(k, s)| {
                        json!({
                            "id": s.id,
                            "min": num(cli, &summary.per_seller[k].min),
                            "max": num(cli, &summary.per_seller[k].max),
                        })
                    }).collect::<Vec<_>>(),
                })
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Ce { market, tol } => {
            let file = load_market(market)?;
            let ce = competitive_equilibrium(&file.market, *tol)?;
            let (ok, _) = if ce.exact {
                verify_ce(&file.market, &ce.prices, &ce.allocation)
            } else {
                (false, None)
            };
            emitln!(
                "{}",
                json!({
                    "exact": ce.exact,
                    "verified": ok,
                    "iterations": ce.iterations,
                    "gap": ce.gap,
                    "prices": file.market.items.iter().enumerate()
                        .map(|(j, item)| (item.id.clone(), num(cli, &ce.prices[j])))
                        .collect::<serde_json::Map<_, _>>(),
                    "allocation": allocation_json(cli, &file.market, &ce.allocation),
                    "utilities": file.market.buyers.iter().enumerate()
                        .map(|(i, b)| (b.id.clone(), num(cli, &ce.utilities[i])))
                        .collect::<serde_json::Map<_, _>>(),
                })
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Maximin {
            market,
            allocation,
            deviations,
            grid,
            expect,
        } => {
            let file = load_market(market)?;
            let pricing = needs_pricing(&file)?;
            let alloc = match allocation {
                Some(path) => {
                    let text = std::fs::read_to_string(path)?;
                    parse_allocation_str(&file.market, &text)?
                }
                None => max_revenue_lp(&file.market, pricing)?.0,
            };
            let factors = match grid {
                None => default_deviation_factors(),
                Some(spec) => spec
                    .split(',')
                    .map(parse_rational)
                    .collect::<Result<Vec<_>, _>>()?,
            };
            let user: Vec<(usize, Vec<Rational>)> = match deviations {
                None => Vec::new(),
                Some(path) => {
                    let text = std::fs::read_to_string(path)?;
                    parse_user_deviations(&file.market, pricing, &text)?
                }
            };
            let verdict = verify_maximin(&file.market, pricing, &alloc, &factors, &user)?;
            let outcome = match verdict.outcome {
                MaximinOutcome::Certified => "CERTIFIED",
                MaximinOutcome::Refuted => "REFUTED",
                MaximinOutcome::Unknown => "UNKNOWN",
            };
            emitln!(
                "{}",
                json!({
                    "verdict": outcome,
                    "deviations_checked": verdict.reports.len(),
                    "reports": verdict.reports.iter().map(|r| {
                        json!({
                            "seller": file.market.sellers[r.seller].id,
                            "prices": file.market.items.iter().enumerate()
                                .map(|(j, item)| (item.id.clone(), num(cli, &r.prices[j])))
                                .collect::<serde_json::Map<_, _>>(),
                            "profitable": r.profitable,
                            "evidence": r.evidence.as_ref().map(|e| match e {
                                DeviationEvidence::PriceCap => json!({"kind": "price_cap"}),
                                DeviationEvidence::Witness { allocation, bound } => json!({
                                    "kind": "compatible_witness",
                                    "allocation": allocation_json(cli, &file.market, allocation),
                                    "bound": num(cli, bound),
                                }),
                                DeviationEvidence::Oracle { min_revenue } => json!({
                                    "kind": "oracle",
                                    "min_revenue": num(cli, min_revenue),
                                }),
                            }),
                        })
                    }).collect::<Vec<_>>(),
                })
            );
            let expectation_met = match expect {
                None => true,
                Some(Expectation::Certified) => verdict.outcome == MaximinOutcome::Certified,
                Some(Expectation::Refuted) => verdict.outcome == MaximinOutcome::Refuted,
            };
            Ok(if expectation_met {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(4)
            })
        }
        Command::Duopoly(args) => run_duopoly(cli, args),
        Command::Gadget { kind } => run_gadget(kind),
    }
}

fn parse_user_deviations(
    market: &Market,
    pricing: &PricingProfile,
    text: &str,
) -> Result<Vec<(usize, Vec<Rational>)>, Error> {
    #[derive(serde::Deserialize)]
    struct Dev {
        seller: String,
        prices: std::collections::BTreeMap<String, String>,
    }
    let devs: Vec<Dev> =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("deviations file: {e}")))?;
    let mut out = Vec::new();
    for d in devs {
        let seller = market
            .seller_index(&d.seller)
            .ok_or_else(|| Error::Validation(format!("unknown seller {:?}", d.seller)))?;
        let mut item_prices: Vec<Rational> = (0..market.num_items())
            .map(|j| pricing.price(0, j).clone())
            .collect();
        for (iid, p) in &d.prices {
            let j = market
                .item_index(iid)
                .ok_or_else(|| Error::Validation(format!("unknown item {iid:?}")))?;
            if market.items[j].seller != seller {
                return Err(Error::Validation(format!(
                    "deviation touches {iid:?} not owned by {:?}",
                    d.seller
                )));
            }
            item_prices[j] = parse_rational(p)?;
        }
        out.push((seller, item_prices));
    }
    Ok(out)
}

fn parse_profile(
    spec: &str,
    s: &Rational,
    t: &Rational,
    experimental: bool,
) -> Result<(DuopolyProfile, String), Error> {
    match spec {
        "ce" => Ok((DuopolyProfile::ce(2), "ce".into())),
        "conjectured" => {
            if !experimental {
                return Err(Error::Validation(
                    "the conjectured profile is experimental; pass --experimental".into(),
                ));
            }
            Ok((conjectured_profile(s, t)?, "CONJECTURE".into()))
        }
        other => {
            let parts: Vec<Rational> = other
                .split(',')
                .map(parse_rational)
                .collect::<Result<_, _>>()?;
            if parts.len() != 4 {
                return Err(Error::Validation(
                    "profile must be ce, conjectured, or a1,a2,b1,b2".into(),
                ));
            }
            Ok((
                DuopolyProfile {
                    a: vec![parts[0].clone(), parts[1].clone()],
                    b: vec![parts[2].clone(), parts[3].clone()],
                },
                "custom".into(),
            ))
        }
    }
}

fn nash_verdict_string(v: &NashVerdict) -> String {
    match v {
        NashVerdict::Pass => "PASS".into(),
        NashVerdict::Fail { seller, .. } => format!("FAIL(seller {})", seller + 1),
    }
}

fn run_duopoly(cli: &Cli, args: &DuopolyArgs) -> Result<ExitCode, Error> {
    if args.family != "table3" {
        return Err(Error::Validation(format!(
            "unknown family {:?}; the two-buyer four-item family is \"table3\"",
            args.family
        )));
    }
    let grid: Vec<Rational> = (1..=(3 * args.grid_step))
        .map(|k| Rational::new(k.into(), args.grid_step.into()))
        .collect();

    if let Some(step) = &args.sweep {
        let step = parse_rational(step)?;
        emitln!("s,t,profile,seller1_min,seller1_max,seller2_min,seller2_max,nash_verdict");
        let mut s = Rational::from_integer(0.into());
        let one = Rational::from_integer(1.into());
        while s <= one {
            let mut t = Rational::from_integer(0.into());
            while t <= one {
                let market = st_family_market(&s, &t)?;
                if let Ok((profile, label)) =
                    parse_profile(&args.profile, &s, &t, args.experimental)
                {
                    let outcome = duopoly_outcome(&market, &profile)?;
                    let verdict = if args.nash {
                        nash_verdict_string(&is_nash_on_grid(&market, &profile, &grid)?)
                    } else {
                        "-".into()
                    };
                    emitln!(
                        "{},{},{},{},{},{},{},{}",
                        render_rational(&s),
                        render_rational(&t),
                        label,
                        render_rational(&outcome.seller_min[0]),
                        render_rational(&outcome.seller_max[0]),
                        render_rational(&outcome.seller_min[1]),
                        render_rational(&outcome.seller_max[1]),
                        verdict,
                    );
                }
                t += step.clone();
            }
            s += step.clone();
        }
        return Ok(ExitCode::SUCCESS);
    }

    let s = parse_rational(&args.s)?;
    let t = parse_rational(&args.t)?;
    let market = st_family_market(&s, &t)?;
    let (profile, label) = parse_profile(&args.profile, &s, &t, args.experimental)?;
    let outcome = duopoly_outcome(&market, &profile)?;
    let mut out = json!({
        "s": render_rational(&s),
        "t": render_rational(&t),
        "profile": label,
        "reports": {
            "a": profile.a.iter().map(render_rational).collect::<Vec<_>>(),
            "b": profile.b.iter().map(render_rational).collect::<Vec<_>>(),
        },
        "seller1": {"min": num(cli, &outcome.seller_min[0]), "max": num(cli, &outcome.seller_max[0])},
        "seller2": {"min": num(cli, &outcome.seller_min[1]), "max": num(cli, &outcome.seller_max[1])},
        "selection_free": outcome.selection_free(),
    });
    if args.nash {
        let verdict = is_nash_on_grid(&market, &profile, &grid)?;
        out["nash_verdict"] = json!(nash_verdict_string(&verdict));
        if let NashVerdict::Fail {
            seller,
            reports,
            guaranteed,
            current,
        } = verdict
        {
            out["nash_deviation"] = json!({
                "seller": seller + 1,
                "reports": reports.iter().map(render_rational).collect::<Vec<_>>(),
                "guaranteed": num(cli, &guaranteed),
                "current": num(cli, &current),
            });
        }
    }
    if let Some(p) = &args.deviation_p {
        let p = parse_rational(p)?;
        match deviation_revenue_formula(&s, &t, &p) {
            Ok(v) => out["deviation_revenue"] = num(cli, &v),
            Err(Error::OutOfRegime(msg)) => out["deviation_revenue_regime"] = json!(msg),
            Err(e) => return Err(e),
        }
    }
    emitln!("{out}");
    Ok(ExitCode::SUCCESS)
}

fn run_gadget(kind: &GadgetKind) -> Result<ExitCode, Error> {
    let (market_file, summary) = match kind {
        GadgetKind::Sat {
            input,
            variant,
            out: _,
        } => {
            let cnf = parse_dimacs(&std::fs::read_to_string(input)?)?;
            let variant = match variant {
                SatVariantArg::Personalized => SatVariant::Personalized,
                SatVariantArg::Uniform => SatVariant::Uniform,
                SatVariantArg::Forced => {
                    // force the exhaustively optimal assignment
                    let best = (0..1usize << cnf.num_vars)
                        .max_by_key(|mask| {
                            let a: Vec<bool> =
                                (0..cnf.num_vars).map(|v| mask >> v & 1 == 1).collect();
                            cnf.satisfied(&a)
                        })
                        .unwrap_or(0);
                    let assignment: Vec<bool> =
                        (0..cnf.num_vars).map(|v| best >> v & 1 == 1).collect();
                    SatVariant::Forced(assignment)
                }
            };
            let gadget = sat_gadget_build(&cnf, &variant)?;
            let revenue = pricecomp::gadgets::sat_gadget_max_revenue(&gadget)?;
            (
                MarketFile {
                    market: gadget.market.clone(),
                    pricing: Some(gadget.pricing.clone()),
                    priorities: Some(gadget.priorities.clone()),
                },
                json!({
                    "variables": cnf.num_vars,
                    "clauses": cnf.clauses.len(),
                    "max_stable_revenue": render_rational(&revenue),
                }),
            )
        }
        GadgetKind::Matching {
            input,
            designated,
            out: _,
        } => {
            let graph = parse_edge_list(&std::fs::read_to_string(input)?)?;
            let min_mm = pricecomp::gadgets::min_maximal_matching(&graph);
            let gadget = match designated {
                None => matching_gadget_build(&graph)?,
                Some(d) => matching_gadget_seller_variant(&graph, d)?,
            };
            (
                MarketFile {
                    market: gadget.market.clone(),
                    pricing: Some(gadget.pricing.clone()),
                    priorities: None,
                },
                json!({
                    "left": graph.left,
                    "right": graph.right,
                    "edges": graph.edges.len(),
                    "min_maximal_matching": min_mm,
                }),
            )
        }
    };
    let rendered = render_market(&market_file);
    let out_path = match kind {
        GadgetKind::Sat { out, .. } => out,
        GadgetKind::Matching { out, .. } => out,
    };
    match out_path {
        Some(path) => {
            std::fs::write(path, rendered + "\n")?;
            emitln!("{summary}");
        }
        None => {
            emitln!("{rendered}");
            eprintln!("{summary}");
        }
    }
    Ok(ExitCode::SUCCESS)
}
