use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use integra::algorithms::{man_optimal_stable_matching, mosm_scheme, DEFAULT_ORACLE_BOUND};
use integra::analytics::{integrate, loss_summary};
use integra::experiment::{
    correlation_grid, figure1, run_campaign, sweep_grid, table1, table2, table3, table_grid, write_rows, Campaign,
    Cell, OutputFormat, DEFAULT_FIGURE1_NS, DEFAULT_RUNS,
};
use integra::fixtures::{load_fixture, FIXTURE_NAMES};
use integra::format::{read_market, write_market};
use integra::par::Execution;
use integra::properties::{find_blocking_pair, is_im_bounded, wim_violations, DEFAULT_IM_BOUND};
use integra::random::{generate, MarketSpec};
use integra::{ExtendedMarket, Population, Side};

/// Stable matching and integration experiments on community-partitioned markets.
#[derive(Parser)]
#[command(name = "integra", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random market and write it in the text market format.
    Gen(GenArgs),
    /// Men-optimal stable matching of a population.
    Solve(SolveArgs),
    /// Check shipped fixtures, or the integration invariants of a market file.
    Verify(VerifyArgs),
    /// Share of the society hurt by integration.
    Table1(TableArgs),
    /// Welfare losses of hurt agents.
    Table2(TableArgs),
    /// Hurt share and losses under correlated preferences.
    Table3(CorrelationArgs),
    /// Simulated gains next to their large-market approximations.
    Figure1(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Args)]
struct Output {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    kappa: usize,
    /// Status-quo correlation in [0, 1); uniform preferences when omitted.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MarketSource {
    #[arg(long, conflicts_with = "fixture")]
    market_file: Option<PathBuf>,
    /// Name of a shipped fixture.
    #[arg(long)]
    fixture: Option<String>,
}

impl MarketSource {
    fn load(&self) -> anyhow::Result<Option<(String, ExtendedMarket)>> {
        if let Some(path) = &self.market_file {
            return Ok(Some((path.display().to_string(), read_market(path)?)));
        }
        if let Some(name) = &self.fixture {
            return Ok(Some((name.clone(), load_fixture(name)?.market)));
        }
        Ok(None)
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    source: MarketSource,
    /// Comma-separated community indices; the whole society when omitted.
    #[arg(long, value_delimiter = ',')]
    population: Vec<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    source: MarketSource,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct Run {
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    runs: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, env = "INTEGRA_WORKERS")]
    workers: Option<usize>,
    /// Also write one record per run to this file.
    #[arg(long)]
    records: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct TableArgs {
    /// Comma-separated n values; overrides the default grid.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    kappa: Vec<usize>,
    /// Include n = 500.
    #[arg(long)]
    full: bool,
    #[command(flatten)]
    run: Run,
}

#[derive(Args)]
struct CorrelationArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    kappa: usize,
    /// Comma-separated correlations; 0 means uniform preferences.
    #[arg(long, value_delimiter = ',')]
    rho: Vec<f64>,
    #[command(flatten)]
    run: Run,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [2, 5])]
    kappa: Vec<usize>,
    /// Extend the default sweep to n = 1000 and 2000.
    #[arg(long)]
    full: bool,
    #[command(flatten)]
    run: Run,
}

fn sink(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<T: Serialize>(rows: &[T], output: &Output) -> anyhow::Result<()> {
    write_rows(rows, output.format.into(), sink(output.out.as_deref())?)?;
    Ok(())
}

fn gen(args: &GenArgs) -> anyhow::Result<()> {
    let spec = MarketSpec { n: args.n, kappa: args.kappa, correlation: args.rho, seed: args.seed, stream: args.stream };
    let market = generate(&spec)?;
    let mut out = sink(args.out.as_deref())?;
    out.write_all(write_market(&market).as_bytes())?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct PairRow {
    man: String,
    woman: String,
    /// 1-based position of the partner in each list.
    man_rank: u32,
    woman_rank: u32,
    proposals: u32,
}

fn solve(args: &SolveArgs) -> anyhow::Result<()> {
    let Some((_, market)) = args.source.load()? else {
        bail!(integra::Error::InvalidArgument("solve needs --market-file or --fixture".into()));
    };
    let population = if args.population.is_empty() {
        market.society()
    } else {
        Population::new(args.population.iter().copied(), market.kappa())?
    };
    let result = man_optimal_stable_matching(&market, population)?;
    log::info!("{} proposals", result.total_proposals);
    let profile = market.profile();
    let rows: Vec<PairRow> = result
        .matching
        .pairs()
        .map(|(m, w)| PairRow {
            man: market.agent(Side::Man, m).to_string(),
            woman: market.agent(Side::Woman, w).to_string(),
            man_rank: profile.rank(Side::Man, m, w) + 1,
            woman_rank: profile.rank(Side::Woman, w, m) + 1,
            proposals: result.proposals_per_man[m],
        })
        .collect();
    emit(&rows, &args.output)
}

#[derive(Serialize)]
struct CheckRow {
    subject: String,
    check: String,
    status: &'static str,
    detail: String,
}

fn verify_fixtures(names: &[&str]) -> anyhow::Result<(Vec<CheckRow>, usize)> {
    let mut rows = Vec::new();
    let mut failed = 0;
    for &name in names {
        for (check, result) in load_fixture(name)?.verify() {
            let (status, detail) = match result {
                Ok(()) => ("pass", String::new()),
                Err(e) => {
                    failed += 1;
                    ("fail", e.to_string())
                }
            };
            rows.push(CheckRow { subject: name.to_string(), check, status, detail });
        }
    }
    Ok((rows, failed))
}

/// Invariants that must hold on every balanced market, plus the scheme
/// properties that may or may not hold.
fn verify_market(subject: &str, market: &ExtendedMarket) -> anyhow::Result<(Vec<CheckRow>, usize)> {
    let mut rows = Vec::new();
    let mut failed = 0;
    let mut push = |check: &str, ok: bool, invariant: bool, detail: String| {
        let status = match (ok, invariant) {
            (true, true) => "pass",
            (false, true) => "fail",
            (true, false) => "holds",
            (false, false) => "violated",
        };
        if invariant && !ok {
            failed += 1;
        }
        rows.push(CheckRow { subject: subject.to_string(), check: check.to_string(), status, detail });
    };
    let society = man_optimal_stable_matching(market, market.society())?.matching;
    let blocking = find_blocking_pair(market, &society);
    let detail = blocking.map(|(m, w)| format!("blocking pair {m} {w}")).unwrap_or_default();
    push("men-optimal matching is stable", blocking.is_none(), true, detail);

    let scheme = mosm_scheme(market)?;
    let hurt = wim_violations(&scheme);
    let names: Vec<String> = hurt.iter().map(ToString::to_string).collect();
    push("men-optimal scheme is weakly integration monotonic", hurt.is_empty(), false, names.join(" "));

    if market.kappa() <= DEFAULT_IM_BOUND && market.total_agents() <= 2 * DEFAULT_ORACLE_BOUND {
        let check = is_im_bounded(&scheme, DEFAULT_IM_BOUND)?;
        push("men-optimal scheme is integration monotonic", check.holds(), false, format!("{:?}", check.witness));
    }

    if market.is_balanced() {
        let outcome = integrate(market)?;
        let p = &outcome.partition;
        push(
            "at most half the society is hurt",
            2 * p.worse.len() <= p.total(),
            true,
            format!("{} of {}", p.worse.len(), p.total()),
        );
        push(
            "segregated partner of every hurt agent gains",
            p.partner_rescue_holds(market, &outcome.segregated),
            true,
            String::new(),
        );
        let losses = loss_summary(p, market, &outcome.segregated, &outcome.integrated)?;
        push("loss summary", true, false, serde_json::to_string(&losses)?);
    }
    Ok((rows, failed))
}

fn verify(args: &VerifyArgs) -> anyhow::Result<()> {
    let (rows, failed) = match (&args.source.market_file, &args.source.fixture) {
        (None, None) => verify_fixtures(&FIXTURE_NAMES)?,
        (None, Some(name)) => verify_fixtures(&[name.as_str()])?,
        (Some(_), _) => {
            let (subject, market) = args.source.load()?.expect("market file given");
            verify_market(&subject, &market)?
        }
    };
    emit(&rows, &args.output)?;
    if failed > 0 {
        bail!(integra::Error::Invariant(format!("{failed} check(s) failed")));
    }
    Ok(())
}

fn campaign(
    cells: Vec<Cell>,
    run: &Run,
    aggregate: impl Fn(&[integra::experiment::RunRecord]) -> anyhow::Result<()>,
) -> anyhow::Result<()> {
    let workers = match run.workers {
        Some(0) => bail!(integra::Error::InvalidArgument("--workers must be positive".into())),
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let campaign = Campaign::new(cells, run.runs, run.seed).with_execution(Execution::with_workers(workers));
    log::info!("{} cells x {} runs on {} worker(s)", campaign.cells.len(), campaign.runs_per_cell, workers);
    let outcome = run_campaign(&campaign)?;
    if let Some(path) = &run.records {
        write_rows(&outcome.records, run.output.format.into(), sink(Some(path))?)?;
    }
    aggregate(&outcome.records)?;
    if let Some((cell, err)) = outcome.failures.into_iter().next() {
        return Err(anyhow::Error::new(err).context(format!("cell {cell} failed")));
    }
    Ok(())
}

fn table_cells(args: &TableArgs) -> Vec<Cell> {
    if args.n.is_empty() && args.kappa.is_empty() {
        return table_grid(args.full);
    }
    let ns = if args.n.is_empty() {
        if args.full {
            vec![50, 100, 500]
        } else {
            vec![50, 100]
        }
    } else {
        args.n.clone()
    };
    let kappas = if args.kappa.is_empty() { vec![2, 3, 4, 5] } else { args.kappa.clone() };
    sweep_grid(&kappas, &ns)
}

fn correlation_cells(args: &CorrelationArgs) -> Vec<Cell> {
    if args.rho.is_empty() && args.n == 100 && args.kappa == 2 {
        return correlation_grid();
    }
    let rhos = if args.rho.is_empty() { vec![0.9, 0.7, 0.5, 0.3, 0.1, 0.0] } else { args.rho.clone() };
    rhos.into_iter()
        .map(|r| if r == 0.0 { Cell::uniform(args.n, args.kappa) } else { Cell::correlated(args.n, args.kappa, r) })
        .collect()
}

fn sweep_cells(args: &SweepArgs) -> Vec<Cell> {
    let mut ns = if args.n.is_empty() { DEFAULT_FIGURE1_NS.to_vec() } else { args.n.clone() };
    if args.full && args.n.is_empty() {
        ns.extend([1000, 2000]);
    }
    sweep_grid(&args.kappa, &ns)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Gen(a) => gen(&a),
        Command::Solve(a) => solve(&a),
        Command::Verify(a) => verify(&a),
        Command::Table1(a) => campaign(table_cells(&a), &a.run, |r| emit(&table1(r), &a.run.output)),
        Command::Table2(a) => campaign(table_cells(&a), &a.run, |r| emit(&table2(r), &a.run.output)),
        Command::Table3(a) => campaign(correlation_cells(&a), &a.run, |r| emit(&table3(r), &a.run.output)),
        Command::Figure1(a) => campaign(sweep_cells(&a), &a.run, |r| emit(&figure1(r)?, &a.run.output)),
    }
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    err.chain().find_map(|e| e.downcast_ref::<integra::Error>()).map_or("io", integra::Error::kind)
}

fn report(kind: &str, message: String) {
    let line = serde_json::json!({ "error": message, "kind": kind });
    eprintln!("{line}");
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or_default().trim_start_matches("error: ");
            report("usage", first.to_string());
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(error_kind(&e), format!("{e:#}"));
            ExitCode::FAILURE
        }
    }
}
