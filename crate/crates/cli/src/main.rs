//! Command-line surface: the built-in comparison table, bound reports,
//! tranche pricing, the self-verification battery, and exact stop-loss
//! distances.
//!
//! Exit codes: 0 success, 2 configuration/parse error, 3 fit error
//! (overdispersion), 4 model too large for exact enumeration, 1 anything
//! else (including verification failures).

mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use cdo_bounds::bounds::{self, ApproxTarget, IngredientsMode, ReportOptions};
use cdo_bounds::cdo;
use cdo_bounds::dependence::PortfolioModel;
use cdo_bounds::pmf;
use cdo_bounds::stoploss;
use cdo_bounds::verify::{self, Level};
use cdo_bounds::{benchmark, config, Error};

use output::{fmt_sig6, render_csv, render_markdown, Cell};

#[derive(Parser)]
#[command(
    name = "cdo-bounds",
    version,
    about = "Certified stop-loss error bounds for binomial approximation of default counts, \
             with bracketed tranche pricing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Markdown,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Against {
    Binomial,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FitArg {
    AlphaN,
    Moment,
}

#[derive(Subcommand)]
enum Command {
    /// Bound comparison table over prefixes of the built-in block portfolio
    Table2 {
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
    },
    /// Full bound report for a portfolio configuration
    Bounds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Monte Carlo sample count for models too large to enumerate
        #[arg(long)]
        samples: Option<u64>,
        /// Also evaluate the chosen-probability bound at this p
        #[arg(long)]
        chosen_p: Option<f64>,
        /// Override of the exact-enumeration size cap (in indices)
        #[arg(long)]
        enum_limit: Option<usize>,
        /// Also compute the exact distance to a truncated Poisson reference
        #[arg(long)]
        poisson: bool,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
    },
    /// Price configured tranches with certified error brackets
    Price {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
    },
    /// Run the self-verification battery
    Verify {
        #[arg(long, value_enum, default_value_t = LevelArg::Quick)]
        level: LevelArg,
    },
    /// Exact stop-loss distance from the portfolio loss law to a fitted law
    ExactDsl {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        against: Against,
        #[arg(long, value_enum, default_value_t = FitArg::AlphaN)]
        fit: FitArg,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Overdispersed(_) => 3,
        Error::TooLarge(_) => 4,
        _ => 1,
    }
}

fn load_config(path: &PathBuf) -> Result<(PortfolioModel, Vec<cdo::TrancheSpec>), Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    config::parse(&text)
}

fn target_cells(target: &Option<ApproxTarget>) -> (Cell, Cell, Cell) {
    match target {
        Some(ApproxTarget::Binomial(b)) => {
            (Cell::Int(b.alpha as i64), Cell::Num(b.p), Cell::Num(b.delta))
        }
        Some(ApproxTarget::Poisson { lambda }) => {
            (Cell::Text("poisson".into()), Cell::Num(*lambda), Cell::Empty)
        }
        None => (Cell::Empty, Cell::Empty, Cell::Empty),
    }
}

fn mode_str(mode: IngredientsMode) -> &'static str {
    match mode {
        IngredientsMode::ClosedForm => "closed-form",
        IngredientsMode::Exact => "exact",
        IngredientsMode::MonteCarlo => "monte-carlo",
    }
}

fn cmd_table2(format: Format) -> Result<String, Error> {
    let rows = benchmark::comparison_rows()?;
    if format == Format::Json {
        return Ok(serde_json::to_string_pretty(&rows).expect("serializable") + "\n");
    }
    let headers = ["n", "poisson_bound", "alpha_n_bound", "moment_bound"];
    let cells: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            vec![
                Cell::Int(r.n as i64),
                Cell::Num(r.poisson_bound),
                Cell::Num(r.alpha_n_bound),
                Cell::Num(r.moment_bound),
            ]
        })
        .collect();
    Ok(match format {
        Format::Csv => render_csv(&headers, &cells),
        Format::Markdown => render_markdown(&headers, &cells),
        Format::Json => unreachable!(),
    })
}

fn report_for(
    model: &PortfolioModel,
    seed: u64,
    samples: Option<u64>,
    chosen_p: Option<f64>,
    enum_limit: Option<usize>,
    poisson: bool,
) -> Result<bounds::BoundReport, Error> {
    bounds::compile_report(
        model,
        &ReportOptions {
            samples,
            seed,
            chosen_p,
            poisson_comparison: poisson,
            enumeration_limit: enum_limit,
        },
    )
}

fn cmd_bounds(
    model: &PortfolioModel,
    seed: u64,
    samples: Option<u64>,
    chosen_p: Option<f64>,
    enum_limit: Option<usize>,
    poisson: bool,
    format: Format,
) -> Result<String, Error> {
    let report = report_for(model, seed, samples, chosen_p, enum_limit, poisson)?;
    if format == Format::Json {
        return Ok(serde_json::to_string_pretty(&report).expect("serializable") + "\n");
    }
    let headers = [
        "bound",
        "value",
        "std_err",
        "certified",
        "mode",
        "target_alpha",
        "target_p",
        "target_delta",
        "exact_dsl",
        "note",
    ];
    let mut cells = Vec::new();
    for e in &report.entries {
        let (ta, tp, td) = target_cells(&e.target);
        cells.push(vec![
            Cell::Text(e.name.clone()),
            e.value.map_or(Cell::Empty, Cell::Num),
            if e.std_err > 0.0 { Cell::Num(e.std_err) } else { Cell::Empty },
            Cell::Text(if e.applicable { e.certified.to_string() } else { "n/a".into() }),
            Cell::Text(mode_str(e.mode).into()),
            ta,
            tp,
            td,
            e.exact_dsl.map_or(Cell::Empty, Cell::Num),
            e.note.clone().map_or(Cell::Empty, Cell::Text),
        ]);
    }
    let table = match format {
        Format::Csv => render_csv(&headers, &cells),
        Format::Markdown => render_markdown(&headers, &cells),
        Format::Json => unreachable!(),
    };
    if format == Format::Csv {
        return Ok(table);
    }
    let mut out = String::new();
    out.push_str(&format!(
        "portfolio: n = {}, lambda = {}, ingredients = {}\n",
        report.n,
        fmt_sig6(report.lambda),
        mode_str(report.ingredients)
    ));
    out.push_str(&format!(
        "fit alpha=n: alpha = {}, p = {}\n",
        report.fit_alpha_n.alpha,
        fmt_sig6(report.fit_alpha_n.p)
    ));
    match (&report.fit_moment, &report.fit_moment_note) {
        (Some(fm), _) => out.push_str(&format!(
            "fit moments: alpha = {}, p = {}, delta = {}\n",
            fm.alpha,
            fmt_sig6(fm.p),
            fmt_sig6(fm.delta)
        )),
        (None, Some(note)) => out.push_str(&format!("fit moments: unavailable ({note})\n")),
        (None, None) => {}
    }
    if let Some(best) = &report.best {
        out.push_str(&format!(
            "best bound: {} = {}{}\n",
            best.name,
            fmt_sig6(best.value),
            if best.certified { "" } else { " (estimated, not certified)" }
        ));
    }
    if let Some(pc) = &report.poisson_comparison {
        out.push_str(&format!(
            "poisson comparison: exact distance {} (truncation slack {})\n",
            fmt_sig6(pc.exact_dsl),
            fmt_sig6(pc.slack)
        ));
    }
    out.push('\n');
    out.push_str(&table);
    Ok(out)
}

fn cmd_price(
    model: &PortfolioModel,
    tranches: &[cdo::TrancheSpec],
    seed: u64,
    samples: Option<u64>,
    format: Format,
) -> Result<String, Error> {
    if tranches.is_empty() {
        return Err(Error::Config("no tranches in configuration".into()));
    }
    let report = report_for(model, seed, samples, None, None, false)?;
    let enumerable = model.enumerable(None);
    let mut rows_json = Vec::new();
    let mut cells = Vec::new();
    for spec in tranches {
        let z = spec.count_threshold(model.n());
        let exact = if enumerable { Some(cdo::expected_loss_exact(model, spec)?) } else { None };
        let bracket = cdo::expected_loss_bracketed(model, spec, &report)?;
        rows_json.push(json!({
            "label": spec.label,
            "recovery": spec.recovery,
            "z_star": spec.z_star,
            "count_threshold": z,
            "exact": exact,
            "approx": bracket.approx,
            "half_width": bracket.half_width,
            "lower": bracket.lower(),
            "upper": bracket.upper(),
            "certified": bracket.certified,
        }));
        cells.push(vec![
            Cell::Text(spec.label.clone()),
            Cell::Num(spec.recovery),
            Cell::Num(spec.z_star),
            Cell::Num(z),
            exact.map_or(Cell::Empty, Cell::Num),
            Cell::Num(bracket.approx),
            Cell::Num(bracket.half_width),
            Cell::Text(bracket.certified.to_string()),
        ]);
    }
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(&json!({
            "n": model.n(),
            "best_bound": report.best,
            "tranches": rows_json,
        }))
        .expect("serializable")
            + "\n"),
        Format::Csv => Ok(render_csv(
            &["label", "recovery", "z_star", "z", "exact", "approx", "half_width", "certified"],
            &cells,
        )),
        Format::Markdown => Ok(render_markdown(
            &["label", "recovery", "z_star", "z", "exact", "approx", "half_width", "certified"],
            &cells,
        )),
    }
}

fn cmd_verify(level: LevelArg) -> Result<(String, bool), Error> {
    let level = match level {
        LevelArg::Quick => Level::Quick,
        LevelArg::Full => Level::Full,
    };
    let outcomes = verify::run_all(level)?;
    let mut out = String::new();
    let mut all_passed = true;
    for o in &outcomes {
        all_passed &= o.passed;
        out.push_str(&format!(
            "{} {} — {}\n",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        ));
    }
    out.push_str(&format!(
        "{}: {} of {} checks passed\n",
        if all_passed { "OK" } else { "FAILED" },
        outcomes.iter().filter(|o| o.passed).count(),
        outcomes.len()
    ));
    Ok((out, all_passed))
}

fn cmd_exact_dsl(
    model: &PortfolioModel,
    against: Against,
    fit: FitArg,
    format: Format,
) -> Result<String, Error> {
    let w = model.exact_loss_pmf(None)?;
    let (label, distance, slack, params) = match against {
        Against::Binomial => {
            let params = match fit {
                FitArg::AlphaN => bounds::fit_alpha_n(model)?,
                FitArg::Moment => bounds::fit_moment_matching(model)?,
            };
            let d = stoploss::distance(&w, &pmf::binomial(&params));
            ("binomial", d, 0.0, Some(params))
        }
        Against::Poisson => {
            let lambda = model.lambda();
            let (pois, trunc) = pmf::poisson_truncated(lambda, 1e-12)?;
            let d = stoploss::distance(&w, &pois);
            ("poisson", d, trunc.stop_loss_slack(pois.mean()), None)
        }
    };
    if format == Format::Json {
        return Ok(serde_json::to_string_pretty(&json!({
            "against": label,
            "distance": distance,
            "truncation_slack": slack,
            "fit": params,
        }))
        .expect("serializable")
            + "\n");
    }
    let mut out = format!("exact stop-loss distance to {label}: {}\n", fmt_sig6(distance));
    if slack > 0.0 {
        out.push_str(&format!("certified truncation slack: {}\n", fmt_sig6(slack)));
    }
    if let Some(p) = params {
        out.push_str(&format!(
            "fit: alpha = {}, p = {}, delta = {}\n",
            p.alpha,
            fmt_sig6(p.p),
            fmt_sig6(p.delta)
        ));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<(String, bool), Error> {
    match cli.command {
        Command::Table2 { format } => cmd_table2(format).map(|s| (s, true)),
        Command::Bounds { config, seed, samples, chosen_p, enum_limit, poisson, format } => {
            let (model, _) = load_config(&config)?;
            cmd_bounds(&model, seed, samples, chosen_p, enum_limit, poisson, format)
                .map(|s| (s, true))
        }
        Command::Price { config, seed, samples, format } => {
            let (model, tranches) = load_config(&config)?;
            cmd_price(&model, &tranches, seed, samples, format).map(|s| (s, true))
        }
        Command::Verify { level } => cmd_verify(level),
        Command::ExactDsl { config, against, fit, format } => {
            let (model, _) = load_config(&config)?;
            cmd_exact_dsl(&model, against, fit, format).map(|s| (s, true))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((out, passed)) => {
            print!("{out}");
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
