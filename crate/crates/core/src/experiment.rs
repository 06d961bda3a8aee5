//! Monte Carlo campaigns over grids of random markets.
//!
//! A campaign is a list of [`Cell`]s (n, kappa, optional correlation) and a
//! run count. Run `r` of cell `c` draws its market from substream
//! `(c << 32) | r` of the master seed (see [`crate::random`]), so every
//! [`RunRecord`] is a pure function of the campaign configuration. Runs are
//! scheduled as independent tasks and merged in (cell, run) order, which
//! makes the output independent of the worker count.
//!
//! # Record schema (version 1)
//!
//! One CSV row (or JSON line) per run, columns in this order:
//!
//! | column | meaning |
//! |---|---|
//! | `schema` | schema version, currently 1 |
//! | `cell` | index of the cell in the campaign grid |
//! | `n`, `kappa` | men and women per community, community count |
//! | `rho` | target correlation; empty for uniform preferences |
//! | `swaps` | realized number of displaced list positions `c`; empty for uniform |
//! | `run` | run index within the cell |
//! | `stream` | generator substream used for the market |
//! | `gamma_m`, `gamma_w` | gains from integration (rank units, positive = better) |
//! | `frac_worse` | share of the society strictly worse off after integration |
//! | `hurt_men`, `hurt_women` | sizes of the hurt set by side |
//! | `men_share`, `women_share` | shares of the hurt set; empty when nobody is hurt |
//! | `loss_men`, `loss_women` | mean absolute-rank loss of hurt men / women; empty when none |
//! | `hurt_rank_men`, `hurt_rank_women` | mean post-integration absolute partner rank of hurt men / women |
//! | `rank_men`, `rank_women` | post-integration absolute average ranks |
//! | `segregated_rank_men`, `segregated_rank_women` | pre-integration absolute average ranks |
//! | `proposals_society` | deferred-acceptance proposals in the society |
//! | `proposals_communities` | proposals per community, `;`-separated |
//! | `spearman` | mean Spearman coefficient of lists vs. status quo; empty for uniform |

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analytics::{asymptotic_gains, integrate, loss_summary, stats_from_outcome, summarize, Summary};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::random::{generate_correlated_with_status_quo, generate_uniform, MarketSpec};

pub const RECORD_SCHEMA_VERSION: u32 = 1;

/// Default number of runs per cell for every campaign.
pub const DEFAULT_RUNS: usize = 1000;

/// Default n sweep for the gains-versus-approximation data.
pub const DEFAULT_FIGURE1_NS: [usize; 6] = [10, 20, 50, 100, 200, 500];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n: usize,
    pub kappa: usize,
    pub rho: Option<f64>,
}

impl Cell {
    pub fn uniform(n: usize, kappa: usize) -> Self {
        Cell { n, kappa, rho: None }
    }

    pub fn correlated(n: usize, kappa: usize, rho: f64) -> Self {
        Cell { n, kappa, rho: Some(rho) }
    }
}

/// `n in {50, 100}` (plus 500 when `full`) times `kappa in 2..=5`, row-major by kappa.
pub fn table_grid(full: bool) -> Vec<Cell> {
    let ns: &[usize] = if full { &[50, 100, 500] } else { &[50, 100] };
    (2..=5).flat_map(|k| ns.iter().map(move |&n| Cell::uniform(n, k))).collect()
}

/// `n = 100`, `kappa = 2`, descending correlation; the last row is uncorrelated.
pub fn correlation_grid() -> Vec<Cell> {
    let mut cells: Vec<Cell> = [0.9, 0.7, 0.5, 0.3, 0.1].iter().map(|&r| Cell::correlated(100, 2, r)).collect();
    cells.push(Cell::uniform(100, 2));
    cells
}

pub fn sweep_grid(kappas: &[usize], ns: &[usize]) -> Vec<Cell> {
    kappas.iter().flat_map(|&k| ns.iter().map(move |&n| Cell::uniform(n, k))).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Campaign {
    pub cells: Vec<Cell>,
    pub runs_per_cell: usize,
    pub master_seed: u64,
    pub execution: Execution,
}

impl Campaign {
    pub fn new(cells: Vec<Cell>, runs_per_cell: usize, master_seed: u64) -> Self {
        Campaign { cells, runs_per_cell, master_seed, execution: Execution::Sequential }
    }

    pub fn with_execution(self, execution: Execution) -> Self {
        Campaign { execution, ..self }
    }

    pub fn stream(cell: usize, run: usize) -> u64 {
        ((cell as u64) << 32) | run as u64
    }

    pub fn spec(&self, cell: usize, run: usize) -> MarketSpec {
        let c = self.cells[cell];
        MarketSpec {
            n: c.n,
            kappa: c.kappa,
            correlation: c.rho,
            seed: self.master_seed,
            stream: Campaign::stream(cell, run),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs_per_cell == 0 || self.runs_per_cell > u32::MAX as usize {
            return Err(Error::InvalidArgument(format!(
                "runs per cell must be in 1..2^32, got {}",
                self.runs_per_cell
            )));
        }
        if self.cells.is_empty() || self.cells.len() > u32::MAX as usize {
            return Err(Error::InvalidArgument("campaign grid is empty".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema: u32,
    pub cell: usize,
    pub n: usize,
    pub kappa: usize,
    pub rho: Option<f64>,
    pub swaps: Option<usize>,
    pub run: usize,
    pub stream: u64,
    pub gamma_m: f64,
    pub gamma_w: f64,
    pub frac_worse: f64,
    pub hurt_men: usize,
    pub hurt_women: usize,
    pub men_share: Option<f64>,
    pub women_share: Option<f64>,
    pub loss_men: Option<f64>,
    pub loss_women: Option<f64>,
    pub hurt_rank_men: Option<f64>,
    pub hurt_rank_women: Option<f64>,
    pub rank_men: f64,
    pub rank_women: f64,
    pub segregated_rank_men: f64,
    pub segregated_rank_women: f64,
    pub proposals_society: u64,
    pub proposals_communities: String,
    pub spearman: Option<f64>,
}

/// Draws and evaluates one market. Errors if the hurt share exceeds one half
/// or a hurt agent's segregated partner did not gain.
pub fn simulate(spec: &MarketSpec, cell: usize, run: usize) -> Result<RunRecord> {
    let (market, swaps, spearman) = match spec.correlation {
        None => (generate_uniform(spec)?, None, None),
        Some(_) => {
            let cm = generate_correlated_with_status_quo(spec)?;
            let rho = cm.mean_spearman();
            (cm.market, Some(cm.swaps), Some(rho))
        }
    };
    let outcome = integrate(&market)?;
    let stats = stats_from_outcome(&market, &outcome)?;
    let losses = loss_summary(&outcome.partition, &market, &outcome.segregated, &outcome.integrated)?;
    let part = &outcome.partition;
    if 2 * part.worse.len() > part.total() {
        return Err(Error::Invariant(format!("{} of {} agents hurt", part.worse.len(), part.total())));
    }
    if !part.partner_rescue_holds(&market, &outcome.segregated) {
        return Err(Error::Invariant("a hurt agent's segregated partner is not better off".into()));
    }
    let proposals_communities = outcome.community_proposals.iter().map(u64::to_string).collect::<Vec<_>>().join(";");
    Ok(RunRecord {
        schema: RECORD_SCHEMA_VERSION,
        cell,
        n: spec.n,
        kappa: spec.kappa,
        rho: spec.correlation,
        swaps,
        run,
        stream: spec.stream,
        gamma_m: stats.gamma_m,
        gamma_w: stats.gamma_w,
        frac_worse: stats.frac_worse,
        hurt_men: part.worse_count(crate::Side::Man),
        hurt_women: part.worse_count(crate::Side::Woman),
        men_share: stats.frac_worse_men_share,
        women_share: stats.frac_worse_women_share,
        loss_men: stats.mean_loss_men,
        loss_women: stats.mean_loss_women,
        hurt_rank_men: losses.hurt_rank_men,
        hurt_rank_women: losses.hurt_rank_women,
        rank_men: stats.expected_rank_men,
        rank_women: stats.expected_rank_women,
        segregated_rank_men: stats.segregated_rank_men,
        segregated_rank_women: stats.segregated_rank_women,
        proposals_society: outcome.society_proposals,
        proposals_communities,
        spearman,
    })
}

#[derive(Clone, Debug, Default)]
pub struct CampaignOutcome {
    /// Records of every successful cell, in (cell, run) order.
    pub records: Vec<RunRecord>,
    /// Cells aborted by a failing run.
    pub failures: Vec<(usize, Error)>,
}

/// Runs every (cell, run) task and merges them in order. A failing run aborts
/// its cell only.
pub fn run_campaign(campaign: &Campaign) -> Result<CampaignOutcome> {
    campaign.validate()?;
    let runs = campaign.runs_per_cell;
    let tasks = campaign.cells.len() * runs;
    let results = campaign.execution.map_indexed(tasks, |t| {
        let (cell, run) = (t / runs, t % runs);
        simulate(&campaign.spec(cell, run), cell, run)
    });
    let mut outcome = CampaignOutcome::default();
    let mut results = results.into_iter();
    for cell in 0..campaign.cells.len() {
        let chunk: Result<Vec<RunRecord>> = results.by_ref().take(runs).collect();
        match chunk {
            Ok(records) => outcome.records.extend(records),
            Err(e) => {
                log::error!("cell {cell} ({:?}) aborted: {e}", campaign.cells[cell]);
                outcome.failures.push((cell, e));
            }
        }
    }
    Ok(outcome)
}

/// Records grouped by cell index, in ascending cell order.
fn by_cell(records: &[RunRecord]) -> BTreeMap<usize, Vec<&RunRecord>> {
    let mut map: BTreeMap<usize, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        map.entry(r.cell).or_default().push(r);
    }
    map
}

fn collect(rs: &[&RunRecord], f: impl Fn(&RunRecord) -> Option<f64>) -> Summary {
    let xs: Vec<f64> = rs.iter().filter_map(|r| f(r)).collect();
    summarize(&xs)
}

/// Share of the society hurt by integration, with the gender split of the hurt set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table1Row {
    pub n: usize,
    pub kappa: usize,
    pub runs: usize,
    pub pct_worse: f64,
    pub pct_worse_sd: f64,
    pub pct_worse_sem: f64,
    pub max_pct_worse: f64,
    /// Mean over runs of the men's share of the hurt set, in percent.
    pub men_share_pct: f64,
    pub women_share_pct: f64,
    pub men_share_sd: f64,
}

pub fn table1(records: &[RunRecord]) -> Vec<Table1Row> {
    by_cell(records)
        .into_values()
        .map(|rs| {
            let fw = collect(&rs, |r| Some(100.0 * r.frac_worse));
            let men = collect(&rs, |r| r.men_share.map(|x| 100.0 * x));
            let women = collect(&rs, |r| r.women_share.map(|x| 100.0 * x));
            Table1Row {
                n: rs[0].n,
                kappa: rs[0].kappa,
                runs: rs.len(),
                pct_worse: fw.mean,
                pct_worse_sd: fw.sd,
                pct_worse_sem: fw.sem,
                max_pct_worse: rs.iter().map(|r| 100.0 * r.frac_worse).fold(f64::NEG_INFINITY, f64::max),
                men_share_pct: men.mean,
                women_share_pct: women.mean,
                men_share_sd: men.sd,
            }
        })
        .collect()
}

/// Mean welfare loss of hurt agents by gender (mean over runs of per-run means).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table2Row {
    pub n: usize,
    pub kappa: usize,
    pub runs: usize,
    pub loss_men: f64,
    pub loss_men_sd: f64,
    pub loss_men_sem: f64,
    pub loss_women: f64,
    pub loss_women_sd: f64,
    pub loss_women_sem: f64,
    /// Losses divided by the side size `kappa n`.
    pub loss_men_per_size: f64,
    pub loss_women_per_size: f64,
}

pub fn table2(records: &[RunRecord]) -> Vec<Table2Row> {
    by_cell(records)
        .into_values()
        .map(|rs| {
            let (n, kappa) = (rs[0].n, rs[0].kappa);
            let men = collect(&rs, |r| r.loss_men);
            let women = collect(&rs, |r| r.loss_women);
            let size = (n * kappa) as f64;
            Table2Row {
                n,
                kappa,
                runs: rs.len(),
                loss_men: men.mean,
                loss_men_sd: men.sd,
                loss_men_sem: men.sem,
                loss_women: women.mean,
                loss_women_sd: women.sd,
                loss_women_sem: women.sem,
                loss_men_per_size: men.mean / size,
                loss_women_per_size: women.mean / size,
            }
        })
        .collect()
}

/// Correlated-preference statistics per target correlation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table3Row {
    pub n: usize,
    pub kappa: usize,
    pub rho: f64,
    /// Realized displaced positions; empty for the uncorrelated row.
    pub swaps: Option<usize>,
    pub spearman: Option<f64>,
    pub runs: usize,
    pub pct_worse: f64,
    pub pct_worse_sd: f64,
    pub pct_worse_sem: f64,
    /// Mean post-integration absolute partner rank among hurt men / women.
    pub hurt_rank_men: f64,
    pub hurt_rank_men_sd: f64,
    pub hurt_rank_women: f64,
    pub hurt_rank_women_sd: f64,
    pub loss_men: f64,
    pub loss_men_sd: f64,
    pub loss_women: f64,
    pub loss_women_sd: f64,
}

pub fn table3(records: &[RunRecord]) -> Vec<Table3Row> {
    by_cell(records)
        .into_values()
        .map(|rs| {
            let fw = collect(&rs, |r| Some(100.0 * r.frac_worse));
            let hm = collect(&rs, |r| r.hurt_rank_men);
            let hw = collect(&rs, |r| r.hurt_rank_women);
            let lm = collect(&rs, |r| r.loss_men);
            let lw = collect(&rs, |r| r.loss_women);
            let sp = collect(&rs, |r| r.spearman);
            Table3Row {
                n: rs[0].n,
                kappa: rs[0].kappa,
                rho: rs[0].rho.unwrap_or(0.0),
                swaps: rs[0].swaps,
                spearman: (sp.count > 0).then_some(sp.mean),
                runs: rs.len(),
                pct_worse: fw.mean,
                pct_worse_sd: fw.sd,
                pct_worse_sem: fw.sem,
                hurt_rank_men: hm.mean,
                hurt_rank_men_sd: hm.sd,
                hurt_rank_women: hw.mean,
                hurt_rank_women_sd: hw.sd,
                loss_men: lm.mean,
                loss_men_sd: lm.sd,
                loss_women: lw.mean,
                loss_women_sd: lw.sd,
            }
        })
        .collect()
}

/// Simulated mean gains next to the large-market approximations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Figure1Row {
    pub n: usize,
    pub kappa: usize,
    pub runs: usize,
    pub gamma_m: f64,
    pub gamma_m_sd: f64,
    pub gamma_m_sem: f64,
    pub gamma_w: f64,
    pub gamma_w_sd: f64,
    pub gamma_w_sem: f64,
    pub gamma_m_formula: f64,
    pub gamma_w_formula: f64,
}

pub fn figure1(records: &[RunRecord]) -> Result<Vec<Figure1Row>> {
    by_cell(records)
        .into_values()
        .map(|rs| {
            let (n, kappa) = (rs[0].n, rs[0].kappa);
            let gm = collect(&rs, |r| Some(r.gamma_m));
            let gw = collect(&rs, |r| Some(r.gamma_w));
            let (fm, fw) = asymptotic_gains(n, kappa)?;
            Ok(Figure1Row {
                n,
                kappa,
                runs: rs.len(),
                gamma_m: gm.mean,
                gamma_m_sd: gm.sd,
                gamma_m_sem: gm.sem,
                gamma_w: gw.mean,
                gamma_w_sd: gw.sd,
                gamma_w_sem: gw.sem,
                gamma_m_formula: fm,
                gamma_w_formula: fw,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    /// One JSON object per line.
    Json,
}

pub fn write_rows<T: Serialize, W: Write>(rows: &[T], format: OutputFormat, mut out: W) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            for r in rows {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

pub fn rows_to_string<T: Serialize>(rows: &[T], format: OutputFormat) -> Result<String> {
    let mut buf = Vec::new();
    write_rows(rows, format, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

/// Reads records back from CSV.
pub fn read_records_csv(text: &str) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_collision_free() {
        let mut seen = std::collections::HashSet::new();
        for c in 0..20 {
            for r in 0..200 {
                assert!(seen.insert(Campaign::stream(c, r)));
            }
        }
    }

    #[test]
    fn grids() {
        assert_eq!(table_grid(false).len(), 8);
        assert_eq!(table_grid(true).len(), 12);
        let g = correlation_grid();
        assert_eq!(g.len(), 6);
        assert_eq!(g[5].rho, None);
        assert_eq!(sweep_grid(&[2, 5], &[10, 20]).len(), 4);
    }

    #[test]
    fn small_campaign_roundtrips_through_csv() {
        let campaign = Campaign::new(vec![Cell::uniform(4, 2), Cell::correlated(4, 2, 0.5)], 5, 1);
        let out = run_campaign(&campaign).unwrap();
        assert!(out.failures.is_empty());
        assert_eq!(out.records.len(), 10);
        let text = rows_to_string(&out.records, OutputFormat::Csv).unwrap();
        assert_eq!(read_records_csv(&text).unwrap(), out.records);
        assert!(out.records[..5].iter().all(|r| r.spearman.is_none() && r.swaps.is_none()));
        assert!(out.records[5..].iter().all(|r| r.swaps == Some(4)));
        let t1 = table1(&out.records);
        assert_eq!(t1.len(), 2);
        assert_eq!(t1[0].runs, 5);
        let json = rows_to_string(&t1, OutputFormat::Json).unwrap();
        assert_eq!(json.lines().count(), 2);
    }

    #[test]
    fn bad_cell_aborts_only_itself() {
        let campaign = Campaign::new(vec![Cell::uniform(3, 2), Cell::uniform(0, 2)], 3, 1);
        let out = run_campaign(&campaign).unwrap();
        assert_eq!(out.records.len(), 3);
        assert_eq!(out.failures.len(), 1);
        assert_eq!(out.failures[0].0, 1);
        assert!(run_campaign(&Campaign::new(vec![], 3, 1)).is_err());
    }
}
