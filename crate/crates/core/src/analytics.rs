//! Gains and losses from integrating communities under the men-optimal
//! stable matching, the matching large-market approximations, and
//! order-stable summary statistics for Monte Carlo aggregation.

use serde::Serialize;

use crate::algorithms::man_optimal_stable_matching;
use crate::error::{Error, Result};
use crate::market::{ExtendedMarket, Matching, Population, RankMode, Side};
use crate::properties::{hurt_partition_between, HurtPartition};

/// Men-optimal matchings before and after every community merges.
#[derive(Clone, Debug)]
pub struct IntegrationOutcome {
    /// Union of the per-community men-optimal matchings.
    pub segregated: Matching,
    /// Men-optimal matching of the whole society.
    pub integrated: Matching,
    pub community_proposals: Vec<u64>,
    pub society_proposals: u64,
    pub partition: HurtPartition,
}

/// Runs deferred acceptance in every community and in the society.
pub fn integrate(market: &ExtendedMarket) -> Result<IntegrationOutcome> {
    market.require_balanced()?;
    let mut parts = Vec::with_capacity(market.kappa());
    let mut community_proposals = Vec::with_capacity(market.kappa());
    for c in 0..market.kappa() {
        let r = man_optimal_stable_matching(market, Population::single(c))?;
        community_proposals.push(r.total_proposals);
        parts.push(r.matching);
    }
    let refs: Vec<&Matching> = parts.iter().collect();
    let segregated = Matching::union(market, &refs)?;
    let society = man_optimal_stable_matching(market, market.society())?;
    let partition = hurt_partition_between(market, &segregated, &society.matching)?;
    Ok(IntegrationOutcome {
        segregated,
        integrated: society.matching,
        community_proposals,
        society_proposals: society.total_proposals,
        partition,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegrationStats {
    /// Men's average absolute rank before minus after integration.
    pub gamma_m: f64,
    pub gamma_w: f64,
    /// Share of the society strictly worse off after integration.
    pub frac_worse: f64,
    /// Shares of the hurt set that are men / women; absent when nobody is hurt.
    pub frac_worse_men_share: Option<f64>,
    pub frac_worse_women_share: Option<f64>,
    /// Mean absolute-rank drop among hurt men / women.
    pub mean_loss_men: Option<f64>,
    pub mean_loss_women: Option<f64>,
    /// Post-integration absolute average ranks.
    pub expected_rank_men: f64,
    pub expected_rank_women: f64,
    /// Pre-integration absolute average ranks.
    pub segregated_rank_men: f64,
    pub segregated_rank_women: f64,
}

pub fn gains_from_integration(market: &ExtendedMarket) -> Result<IntegrationStats> {
    let outcome = integrate(market)?;
    stats_from_outcome(market, &outcome)
}

pub fn stats_from_outcome(market: &ExtendedMarket, outcome: &IntegrationOutcome) -> Result<IntegrationStats> {
    let seg_m = market.average_rank(&outcome.segregated, Side::Man, RankMode::Absolute)?;
    let seg_w = market.average_rank(&outcome.segregated, Side::Woman, RankMode::Absolute)?;
    let int_m = market.average_rank(&outcome.integrated, Side::Man, RankMode::Absolute)?;
    let int_w = market.average_rank(&outcome.integrated, Side::Woman, RankMode::Absolute)?;
    let part = &outcome.partition;
    let hurt = part.worse.len();
    let (men_share, women_share) = if hurt > 0 {
        let men = part.worse_count(Side::Man) as f64 / hurt as f64;
        (Some(men), Some(1.0 - men))
    } else {
        (None, None)
    };
    let losses = loss_summary(part, market, &outcome.segregated, &outcome.integrated)?;
    Ok(IntegrationStats {
        gamma_m: seg_m - int_m,
        gamma_w: seg_w - int_w,
        frac_worse: part.frac_worse(),
        frac_worse_men_share: men_share,
        frac_worse_women_share: women_share,
        mean_loss_men: losses.mean_loss_men,
        mean_loss_women: losses.mean_loss_women,
        expected_rank_men: int_m,
        expected_rank_women: int_w,
        segregated_rank_men: seg_m,
        segregated_rank_women: seg_w,
    })
}

/// Welfare losses of the agents that integration hurts, per side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LossSummary {
    /// Mean of `rank(after) - rank(before)` over hurt men.
    pub mean_loss_men: Option<f64>,
    pub mean_loss_women: Option<f64>,
    /// Mean post-integration absolute rank of hurt men's partners.
    pub hurt_rank_men: Option<f64>,
    pub hurt_rank_women: Option<f64>,
}

pub fn loss_summary(
    partition: &HurtPartition,
    market: &ExtendedMarket,
    segregated: &Matching,
    integrated: &Matching,
) -> Result<LossSummary> {
    let profile = market.profile();
    let mut loss = [0u64; 2];
    let mut after_rank = [0u64; 2];
    let mut count = [0usize; 2];
    for &agent in &partition.worse {
        let i = market.index(agent)?;
        let before = segregated.partner(agent.side, i).ok_or(Error::Unmatched(agent))? as usize;
        let after = integrated.partner(agent.side, i).ok_or(Error::Unmatched(agent))? as usize;
        let rb = u64::from(profile.rank(agent.side, i, before));
        let ra = u64::from(profile.rank(agent.side, i, after));
        if ra <= rb {
            return Err(Error::Invariant(format!("{agent} is listed as hurt but did not lose rank")));
        }
        let s = agent.side as usize;
        loss[s] += ra - rb;
        after_rank[s] += ra + 1;
        count[s] += 1;
    }
    let mean = |total: u64, n: usize| (n > 0).then(|| total as f64 / n as f64);
    Ok(LossSummary {
        mean_loss_men: mean(loss[0], count[0]),
        mean_loss_women: mean(loss[1], count[1]),
        hurt_rank_men: mean(after_rank[0], count[0]),
        hurt_rank_women: mean(after_rank[1], count[1]),
    })
}

fn check_domain(n: usize, kappa: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain(format!("n = {n}: the approximations need log n > 0")));
    }
    if kappa == 0 {
        return Err(Error::Domain("kappa must be positive".into()));
    }
    Ok(())
}

/// Large-market approximations of the expected gains `(gamma_m, gamma_w)`:
/// `(kappa - 1) ln n - ln kappa` and `kappa n (1 / ln n - 1 / ln(kappa n))`.
pub fn asymptotic_gains(n: usize, kappa: usize) -> Result<(f64, f64)> {
    check_domain(n, kappa)?;
    let (nf, kf) = (n as f64, kappa as f64);
    let men = (kf - 1.0) * nf.ln() - kf.ln();
    let women = kf * nf * (1.0 / nf.ln() - 1.0 / (kf * nf).ln());
    Ok((men, women))
}

/// Large-market approximations of expected absolute average ranks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AsymptoticRanks {
    /// `ln(kappa n)`
    pub rank_m_society: f64,
    /// `kappa n / ln(kappa n)`
    pub rank_w_society: f64,
    /// `kappa ln n`
    pub rank_m_community_abs: f64,
    /// `kappa n / ln n`
    pub rank_w_community_abs: f64,
    /// `(kappa n + 1) / (n + 1)`, the exact finite-n relative-to-absolute factor.
    pub blowup: f64,
}

pub fn asymptotic_ranks(n: usize, kappa: usize) -> Result<AsymptoticRanks> {
    check_domain(n, kappa)?;
    let (nf, kf) = (n as f64, kappa as f64);
    Ok(AsymptoticRanks {
        rank_m_society: (kf * nf).ln(),
        rank_w_society: kf * nf / (kf * nf).ln(),
        rank_m_community_abs: kf * nf.ln(),
        rank_w_community_abs: kf * nf / nf.ln(),
        blowup: blowup_factor(n, kappa),
    })
}

pub fn blowup_factor(n: usize, kappa: usize) -> f64 {
    (kappa as f64 * n as f64 + 1.0) / (n as f64 + 1.0)
}

/// Expected absolute rank of a partner ranked `q`-th within a community of `n`
/// when `kappa - 1` other communities of uniformly placed agents are added.
pub fn expected_absolute_rank(q: f64, n: usize, kappa: usize) -> f64 {
    q * blowup_factor(n, kappa)
}

/// Pairwise (cascade) summation; the split points depend only on the length,
/// so equal inputs give bit-identical totals.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 8;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); zero for fewer than two values.
    pub sd: f64,
    /// Standard error of the mean.
    pub sem: f64,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let count = xs.len();
    if count == 0 {
        return Summary { count, mean: f64::NAN, sd: f64::NAN, sem: f64::NAN };
    }
    let mean = pairwise_sum(xs) / count as f64;
    let sd = if count > 1 {
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        (pairwise_sum(&dev) / (count - 1) as f64).sqrt()
    } else {
        0.0
    };
    Summary { count, mean, sd, sem: sd / (count as f64).sqrt() }
}
