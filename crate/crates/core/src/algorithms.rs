//! Man-proposing deferred acceptance, brute-force enumerators for small
//! populations, and a constructor for Pareto-optimal, weakly integration
//! monotonic schemes.

use crate::error::{Error, Result};
use crate::market::{AgentId, ExtendedMarket, Matching, MatchingScheme, Population, Side};
use crate::properties::{find_blocking_pair, find_dominating_matching};

/// Default cap on the number of agents in a population handed to the
/// brute-force enumerators.
pub const DEFAULT_ORACLE_BOUND: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeferredAcceptanceResult {
    pub matching: Matching,
    pub total_proposals: u64,
    /// Proposals made by each man, indexed by global man index; zero for men
    /// outside the population.
    pub proposals_per_man: Vec<u32>,
}

impl DeferredAcceptanceResult {
    pub fn proposals_of(&self, market: &ExtendedMarket, man: AgentId) -> Result<u32> {
        if man.side != Side::Man {
            return Err(Error::InvalidArgument(format!("{man} is not a man")));
        }
        Ok(self.proposals_per_man[market.index(man)?])
    }
}

/// Men-optimal stable matching of `population`, with preferences restricted
/// to its members, by one-proposal-at-a-time deferred acceptance.
///
/// The lowest-indexed free man always proposes next. A man rejected or
/// displaced keeps proposing before any later man enters, so proposal
/// counts are deterministic per instance. Women outside the population are
/// skipped without counting as proposals.
pub fn man_optimal_stable_matching(
    market: &ExtendedMarket,
    population: Population,
) -> Result<DeferredAcceptanceResult> {
    market.check_population(population)?;
    let profile = market.profile();
    let men_total = market.count(Side::Man);
    let women_total = market.count(Side::Woman);
    let whole = population == market.society();

    let mut next = vec![0usize; men_total];
    let mut wife: Vec<Option<u32>> = vec![None; men_total];
    let mut husband: Vec<Option<u32>> = vec![None; women_total];
    let mut proposals = vec![0u32; men_total];
    let mut total = 0u64;

    for start in market.members(Side::Man, population) {
        let mut m = start;
        loop {
            let list = profile.order(Side::Man, m);
            let mut target = None;
            while next[m] < list.len() {
                let w = list[next[m]] as usize;
                next[m] += 1;
                if whole || market.in_population(Side::Woman, w, population) {
                    target = Some(w);
                    break;
                }
            }
            let Some(w) = target else { break };
            proposals[m] += 1;
            total += 1;
            match husband[w] {
                None => {
                    husband[w] = Some(m as u32);
                    wife[m] = Some(w as u32);
                    break;
                }
                Some(h) => {
                    let h = h as usize;
                    if profile.rank(Side::Woman, w, m) < profile.rank(Side::Woman, w, h) {
                        husband[w] = Some(m as u32);
                        wife[m] = Some(w as u32);
                        wife[h] = None;
                        m = h;
                    }
                }
            }
        }
    }

    Ok(DeferredAcceptanceResult {
        matching: Matching::from_wives(population, wife, women_total),
        total_proposals: total,
        proposals_per_man: proposals,
    })
}

/// The men-optimal scheme: deferred acceptance on every population.
pub fn mosm_scheme(market: &ExtendedMarket) -> Result<MatchingScheme<'_>> {
    MatchingScheme::from_fn(market, |p| Ok(man_optimal_stable_matching(market, p)?.matching))
}

/// The scheme that never mixes communities: every population gets the union
/// of its communities' men-optimal matchings.
pub fn segregated_scheme(market: &ExtendedMarket) -> Result<MatchingScheme<'_>> {
    let singles: Vec<Matching> = (0..market.kappa())
        .map(|c| Ok(man_optimal_stable_matching(market, Population::single(c))?.matching))
        .collect::<Result<_>>()?;
    MatchingScheme::from_fn(market, |p| {
        let parts: Vec<&Matching> = p.members().map(|c| &singles[c]).collect();
        Matching::union(market, &parts)
    })
}

pub(crate) fn check_oracle_bound(market: &ExtendedMarket, population: Population, bound: usize) -> Result<()> {
    let agents = market.population_count(Side::Man, population) + market.population_count(Side::Woman, population);
    if agents > bound {
        return Err(Error::OracleBound { agents, bound });
    }
    Ok(())
}

/// Calls `visit` with the wife array of every maximal matching of the
/// population. With complete preferences these are the matchings of size
/// `min(|men|, |women|)`. Enumeration order is lexicographic in the wife
/// array of the smaller side.
pub(crate) fn for_each_maximal_matching(
    market: &ExtendedMarket,
    population: Population,
    mut visit: impl FnMut(&[Option<u32>]),
) {
    let men: Vec<usize> = market.members(Side::Man, population).collect();
    let women: Vec<usize> = market.members(Side::Woman, population).collect();
    let mut wife: Vec<Option<u32>> = vec![None; market.count(Side::Man)];
    let mut used = vec![false; market.count(Side::Woman).max(market.count(Side::Man))];

    if men.len() <= women.len() {
        fn rec(
            k: usize,
            men: &[usize],
            women: &[usize],
            wife: &mut Vec<Option<u32>>,
            used: &mut [bool],
            visit: &mut dyn FnMut(&[Option<u32>]),
        ) {
            if k == men.len() {
                visit(wife);
                return;
            }
            for &w in women {
                if !used[w] {
                    used[w] = true;
                    wife[men[k]] = Some(w as u32);
                    rec(k + 1, men, women, wife, used, visit);
                    wife[men[k]] = None;
                    used[w] = false;
                }
            }
        }
        rec(0, &men, &women, &mut wife, &mut used, &mut visit);
    } else {
        // More men than women: choose a husband for every woman.
        fn rec(
            k: usize,
            women: &[usize],
            men: &[usize],
            wife: &mut Vec<Option<u32>>,
            used: &mut [bool],
            visit: &mut dyn FnMut(&[Option<u32>]),
        ) {
            if k == women.len() {
                visit(wife);
                return;
            }
            for &m in men {
                if !used[m] {
                    used[m] = true;
                    wife[m] = Some(women[k] as u32);
                    rec(k + 1, women, men, wife, used, visit);
                    wife[m] = None;
                    used[m] = false;
                }
            }
        }
        rec(0, &women, &men, &mut wife, &mut used, &mut visit);
    }
}

fn sorted(mut matchings: Vec<Matching>) -> Vec<Matching> {
    matchings.sort_by_cached_key(Matching::encoding);
    matchings
}

/// Every stable matching of the population, by exhaustive search. Sorted by
/// wife encoding.
pub fn enumerate_stable_matchings(market: &ExtendedMarket, population: Population) -> Result<Vec<Matching>> {
    enumerate_stable_matchings_bounded(market, population, DEFAULT_ORACLE_BOUND)
}

pub fn enumerate_stable_matchings_bounded(
    market: &ExtendedMarket,
    population: Population,
    bound: usize,
) -> Result<Vec<Matching>> {
    market.check_population(population)?;
    check_oracle_bound(market, population, bound)?;
    let women = market.count(Side::Woman);
    let mut out = Vec::new();
    for_each_maximal_matching(market, population, |wife| {
        let m = Matching::from_wives(population, wife.to_vec(), women);
        if find_blocking_pair(market, &m).is_none() {
            out.push(m);
        }
    });
    Ok(sorted(out))
}

/// Every Pareto-optimal matching of the population (dominance over all agents
/// of both sides), by exhaustive search. Sorted by wife encoding.
pub fn enumerate_pareto_matchings(market: &ExtendedMarket, population: Population) -> Result<Vec<Matching>> {
    enumerate_pareto_matchings_bounded(market, population, DEFAULT_ORACLE_BOUND)
}

pub fn enumerate_pareto_matchings_bounded(
    market: &ExtendedMarket,
    population: Population,
    bound: usize,
) -> Result<Vec<Matching>> {
    market.check_population(population)?;
    check_oracle_bound(market, population, bound)?;
    let women = market.count(Side::Woman);
    let mut out = Vec::new();
    // A non-maximal matching is dominated by extending it, so maximal ones suffice.
    for_each_maximal_matching(market, population, |wife| {
        let m = Matching::from_wives(population, wife.to_vec(), women);
        if find_dominating_matching(market, &m).is_none() {
            out.push(m);
        }
    });
    Ok(sorted(out))
}

/// Applies the lexicographically smallest Pareto improvement until none is left.
pub fn pareto_improve(market: &ExtendedMarket, start: Matching) -> Matching {
    let mut current = start;
    while let Some(better) = find_dominating_matching(market, &current) {
        current = better;
    }
    current
}

/// A scheme that is Pareto optimal on every population and weakly
/// integration monotonic.
///
/// Each community is matched by deferred acceptance. Every larger population
/// starts from the union of its communities' matchings and is Pareto-improved
/// until no improvement remains. Improvements never hurt anyone, so nobody
/// ends up worse than under segregation.
pub fn build_wim_pareto_scheme(market: &ExtendedMarket) -> Result<MatchingScheme<'_>> {
    build_wim_pareto_scheme_bounded(market, DEFAULT_ORACLE_BOUND)
}

pub fn build_wim_pareto_scheme_bounded(market: &ExtendedMarket, bound: usize) -> Result<MatchingScheme<'_>> {
    market.require_balanced()?;
    check_oracle_bound(market, market.society(), bound)?;
    let singles: Vec<Matching> = (0..market.kappa())
        .map(|c| Ok(man_optimal_stable_matching(market, Population::single(c))?.matching))
        .collect::<Result<_>>()?;
    MatchingScheme::from_fn(market, |p| {
        let parts: Vec<&Matching> = p.members().map(|c| &singles[c]).collect();
        Ok(pareto_improve(market, Matching::union(market, &parts)?))
    })
}

/// Iterator over every scheme whose entry for each population is drawn from
/// the given candidate list (cartesian product, last population fastest).
pub struct SchemeProduct<'m> {
    market: &'m ExtendedMarket,
    options: Vec<Vec<Matching>>,
    cursor: Option<Vec<usize>>,
}

impl<'m> SchemeProduct<'m> {
    /// `options[i]` lists the candidates for the population with mask `i + 1`.
    pub fn new(market: &'m ExtendedMarket, options: Vec<Vec<Matching>>) -> Result<Self> {
        let expected = (1usize << market.kappa()) - 1;
        if options.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "need candidates for {expected} populations, got {}",
                options.len()
            )));
        }
        let cursor = if options.iter().any(Vec::is_empty) { None } else { Some(vec![0; expected]) };
        Ok(SchemeProduct { market, options, cursor })
    }

    /// Number of schemes the product yields in total.
    pub fn total(&self) -> usize {
        self.options.iter().map(Vec::len).product()
    }
}

impl<'m> Iterator for SchemeProduct<'m> {
    type Item = MatchingScheme<'m>;

    fn next(&mut self) -> Option<Self::Item> {
        let cursor = self.cursor.as_mut()?;
        let chosen: Vec<Matching> = cursor.iter().zip(&self.options).map(|(&i, o)| o[i].clone()).collect();
        let mut k = cursor.len();
        loop {
            if k == 0 {
                self.cursor = None;
                break;
            }
            k -= 1;
            cursor[k] += 1;
            if cursor[k] < self.options[k].len() {
                break;
            }
            cursor[k] = 0;
        }
        MatchingScheme::new(self.market, chosen).ok()
    }
}

/// Every scheme that is stable on every population.
pub fn stable_schemes(market: &ExtendedMarket) -> Result<SchemeProduct<'_>> {
    let options =
        Population::all(market.kappa()).map(|p| enumerate_stable_matchings(market, p)).collect::<Result<Vec<_>>>()?;
    SchemeProduct::new(market, options)
}

/// Every scheme that is Pareto optimal on every population.
pub fn pareto_schemes(market: &ExtendedMarket) -> Result<SchemeProduct<'_>> {
    let options =
        Population::all(market.kappa()).map(|p| enumerate_pareto_matchings(market, p)).collect::<Result<Vec<_>>>()?;
    SchemeProduct::new(market, options)
}
