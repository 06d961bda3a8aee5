//! Verifiers for stability, Pareto optimality and (weak) integration
//! monotonicity, plus the partition of the society into agents that gain,
//! lose or keep their partner when every community merges.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::algorithms::{check_oracle_bound, DEFAULT_ORACLE_BOUND};
use crate::error::{Error, Result};
use crate::market::{AgentId, ExtendedMarket, Matching, MatchingScheme, Population, Side};

/// Default cap on `kappa` for [`is_im`]; the check walks `3^kappa` population pairs.
pub const DEFAULT_IM_BOUND: usize = 12;

/// Certificate of a property violation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    BlockingPair {
        man: AgentId,
        woman: AgentId,
    },
    DominatingMatching(Matching),
    /// `agent` strictly prefers its partner in `before` to its partner in `after`.
    HurtAgent {
        agent: AgentId,
        before: Population,
        after: Population,
    },
}

impl Witness {
    /// Re-checks a matching-level witness against `matching`.
    pub fn confirms(&self, market: &ExtendedMarket, matching: &Matching) -> bool {
        match self {
            Witness::BlockingPair { man, woman } => {
                let (Ok(m), Ok(w)) = (market.index(*man), market.index(*woman)) else { return false };
                let pop = matching.population();
                market.in_population(Side::Man, m, pop)
                    && market.in_population(Side::Woman, w, pop)
                    && matching.wife(m) != Some(w as u32)
                    && market.prefers(Side::Man, m, Some(w as u32), matching.wife(m))
                    && market.prefers(Side::Woman, w, Some(m as u32), matching.husband(w))
            }
            Witness::DominatingMatching(other) => {
                other.population() == matching.population()
                    && other.validate(market).is_ok()
                    && dominates(market, other, matching)
            }
            Witness::HurtAgent { .. } => false,
        }
    }

    /// Re-checks a scheme-level witness against `scheme`.
    pub fn confirms_scheme(&self, scheme: &MatchingScheme<'_>) -> bool {
        let Witness::HurtAgent { agent, before, after } = *self else { return false };
        let market = scheme.market();
        let Ok(i) = market.index(agent) else { return false };
        before.contains(agent.community)
            && before.is_subset(after)
            && market.prefers(
                agent.side,
                i,
                scheme.get(before).partner(agent.side, i),
                scheme.get(after).partner(agent.side, i),
            )
    }
}

/// Outcome of a property check: the property holds iff there is no witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub witness: Option<Witness>,
}

impl Check {
    pub fn holds(&self) -> bool {
        self.witness.is_none()
    }

    fn from(witness: Option<Witness>) -> Self {
        Check { witness }
    }
}

fn blocking_pair_index(market: &ExtendedMarket, matching: &Matching) -> Option<(usize, usize)> {
    let pop = matching.population();
    let profile = market.profile();
    for m in market.members(Side::Man, pop) {
        let wife = matching.wife(m);
        let cutoff = wife.map_or(market.count(Side::Woman), |w| profile.rank(Side::Man, m, w as usize) as usize);
        // Smallest-index woman among those m prefers to his wife who prefer him back.
        let best = profile.order(Side::Man, m)[..cutoff]
            .iter()
            .map(|&w| w as usize)
            .filter(|&w| {
                market.in_population(Side::Woman, w, pop)
                    && market.prefers(Side::Woman, w, Some(m as u32), matching.husband(w))
            })
            .min();
        if let Some(w) = best {
            return Some((m, w));
        }
    }
    None
}

/// First blocking pair in (man, woman) order, or `None` when the matching is stable.
pub fn find_blocking_pair(market: &ExtendedMarket, matching: &Matching) -> Option<(AgentId, AgentId)> {
    blocking_pair_index(market, matching).map(|(m, w)| (market.agent(Side::Man, m), market.agent(Side::Woman, w)))
}

pub fn is_stable(market: &ExtendedMarket, matching: &Matching) -> Check {
    Check::from(find_blocking_pair(market, matching).map(|(man, woman)| Witness::BlockingPair { man, woman }))
}

/// True when `a` differs from `b` and every agent of the population weakly prefers `a`.
pub fn dominates(market: &ExtendedMarket, a: &Matching, b: &Matching) -> bool {
    let pop = b.population();
    if a == b {
        return false;
    }
    [Side::Man, Side::Woman]
        .into_iter()
        .all(|side| market.members(side, pop).all(|i| !market.prefers(side, i, b.partner(side, i), a.partner(side, i))))
}

/// Lexicographically smallest (by wife encoding, single last) matching that
/// Pareto-dominates `matching`, if any.
///
/// Preferences are strict, so a different matching that nobody likes less
/// strictly improves somebody. The search only pairs a man and a woman when
/// each weakly prefers the other to their current partner.
pub fn find_dominating_matching(market: &ExtendedMarket, matching: &Matching) -> Option<Matching> {
    let pop = matching.population();
    let men: Vec<usize> = market.members(Side::Man, pop).collect();
    let women: Vec<usize> = market.members(Side::Woman, pop).collect();
    let acceptable = |m: usize, w: usize| {
        !market.prefers(Side::Man, m, matching.wife(m), Some(w as u32))
            && !market.prefers(Side::Woman, w, matching.husband(w), Some(m as u32))
    };
    let options: Vec<Vec<Option<u32>>> = men
        .iter()
        .map(|&m| {
            let mut o: Vec<Option<u32>> =
                women.iter().filter(|&&w| acceptable(m, w)).map(|&w| Some(w as u32)).collect();
            if matching.wife(m).is_none() {
                o.push(None);
            }
            o
        })
        .collect();

    struct Search<'a> {
        men: &'a [usize],
        women: &'a [usize],
        options: &'a [Vec<Option<u32>>],
        current: &'a Matching,
        wife: Vec<Option<u32>>,
        used: Vec<bool>,
    }

    impl Search<'_> {
        fn run(&mut self, k: usize) -> bool {
            if k == self.men.len() {
                // Married women must stay married; nobody may be worse off.
                let keeps_women = self.women.iter().all(|&w| self.current.husband(w).is_none() || self.used[w]);
                let differs = self.men.iter().any(|&m| self.wife[m] != self.current.wife(m));
                return keeps_women && differs;
            }
            let m = self.men[k];
            for &o in &self.options[k] {
                match o {
                    Some(w) if self.used[w as usize] => continue,
                    Some(w) => {
                        self.used[w as usize] = true;
                        self.wife[m] = Some(w);
                        if self.run(k + 1) {
                            return true;
                        }
                        self.used[w as usize] = false;
                        self.wife[m] = None;
                    }
                    None => {
                        self.wife[m] = None;
                        if self.run(k + 1) {
                            return true;
                        }
                    }
                }
            }
            false
        }
    }

    let mut search = Search {
        men: &men,
        women: &women,
        options: &options,
        current: matching,
        wife: vec![None; market.count(Side::Man)],
        used: vec![false; market.count(Side::Woman)],
    };
    if search.run(0) {
        Some(Matching::from_wives(pop, search.wife, market.count(Side::Woman)))
    } else {
        None
    }
}

/// Pareto optimality of a matching on its population. The witness is the
/// lexicographically smallest dominating matching.
pub fn is_pareto_optimal(market: &ExtendedMarket, matching: &Matching) -> Result<Check> {
    is_pareto_optimal_bounded(market, matching, DEFAULT_ORACLE_BOUND)
}

pub fn is_pareto_optimal_bounded(market: &ExtendedMarket, matching: &Matching, bound: usize) -> Result<Check> {
    check_oracle_bound(market, matching.population(), bound)?;
    Ok(Check::from(find_dominating_matching(market, matching).map(Witness::DominatingMatching)))
}

/// Pareto optimality on every population of the scheme.
pub fn is_pareto_scheme(scheme: &MatchingScheme<'_>) -> Result<Check> {
    for (_, m) in scheme.iter() {
        let c = is_pareto_optimal(scheme.market(), m)?;
        if !c.holds() {
            return Ok(c);
        }
    }
    Ok(Check::from(None))
}

/// Every agent that strictly prefers its own-community partner to its society partner, in id order.
pub fn wim_violations(scheme: &MatchingScheme<'_>) -> Vec<AgentId> {
    let market = scheme.market();
    let society = scheme.get(market.society());
    market
        .agents()
        .filter(|&a| {
            let i = market.index(a).expect("agent from market");
            let own = scheme.get(Population::single(a.community));
            market.prefers(a.side, i, own.partner(a.side, i), society.partner(a.side, i))
        })
        .collect()
}

/// Weak integration monotonicity; the witness is the first hurt agent in id order.
pub fn is_wim(scheme: &MatchingScheme<'_>) -> Check {
    let society = scheme.market().society();
    Check::from(wim_violations(scheme).first().map(|&agent| Witness::HurtAgent {
        agent,
        before: Population::single(agent.community),
        after: society,
    }))
}

/// Integration monotonicity over every pair of disjoint populations.
pub fn is_im(scheme: &MatchingScheme<'_>) -> Result<Check> {
    is_im_bounded(scheme, DEFAULT_IM_BOUND)
}

pub fn is_im_bounded(scheme: &MatchingScheme<'_>, bound: usize) -> Result<Check> {
    let market = scheme.market();
    let kappa = market.kappa();
    if kappa > bound {
        return Err(Error::OracleBound { agents: kappa, bound });
    }
    let agents: Vec<(AgentId, usize)> = market.agents().map(|a| (a, market.index(a).unwrap())).collect();
    for p in Population::all(kappa) {
        for q in Population::all(kappa).filter(|q| q.is_disjoint(p)) {
            let merged = p.union(q);
            let (before, after) = (scheme.get(p), scheme.get(merged));
            for &(a, i) in agents.iter().filter(|(a, _)| p.contains(a.community)) {
                if market.prefers(a.side, i, before.partner(a.side, i), after.partner(a.side, i)) {
                    return Ok(Check::from(Some(Witness::HurtAgent { agent: a, before: p, after: merged })));
                }
            }
        }
    }
    Ok(Check::from(None))
}

/// Society split by how each agent's partner changes from segregation to integration.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct HurtPartition {
    pub same: BTreeSet<AgentId>,
    pub better: BTreeSet<AgentId>,
    pub worse: BTreeSet<AgentId>,
}

impl HurtPartition {
    pub fn total(&self) -> usize {
        self.same.len() + self.better.len() + self.worse.len()
    }

    pub fn worse_count(&self, side: Side) -> usize {
        self.worse.iter().filter(|a| a.side == side).count()
    }

    /// Share of the society that is worse off.
    pub fn frac_worse(&self) -> f64 {
        self.worse.len() as f64 / self.total() as f64
    }

    /// Whether every hurt agent's segregated partner is better off after integration.
    pub fn partner_rescue_holds(&self, market: &ExtendedMarket, segregated: &Matching) -> bool {
        self.worse.iter().all(|&x| match segregated.partner_of(market, x) {
            Ok(Some(p)) => self.better.contains(&p),
            _ => false,
        })
    }
}

/// Partition from a matching on the union of communities (`segregated`,
/// pairs only within communities) and a matching on the society.
pub fn hurt_partition_between(
    market: &ExtendedMarket,
    segregated: &Matching,
    integrated: &Matching,
) -> Result<HurtPartition> {
    let mut part = HurtPartition::default();
    for side in [Side::Man, Side::Woman] {
        for i in 0..market.count(side) {
            let agent = market.agent(side, i);
            let before = segregated.partner(side, i).ok_or(Error::Unmatched(agent))?;
            let after = integrated.partner(side, i).ok_or(Error::Unmatched(agent))?;
            let set = if before == after {
                &mut part.same
            } else if market.prefers(side, i, Some(after), Some(before)) {
                &mut part.better
            } else {
                &mut part.worse
            };
            set.insert(agent);
        }
    }
    Ok(part)
}

/// Partition comparing each agent's own-community partner with its society partner.
pub fn hurt_partition(scheme: &MatchingScheme<'_>) -> Result<HurtPartition> {
    let market = scheme.market();
    hurt_partition_between(market, &scheme.segregated()?, scheme.get(market.society()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{man_optimal_stable_matching, mosm_scheme};
    use crate::market::{Community, PreferenceProfile};

    fn market(communities: Vec<Community>, men: Vec<Vec<u32>>, women: Vec<Vec<u32>>) -> ExtendedMarket {
        ExtendedMarket::new(communities, PreferenceProfile::from_lists(men, women).unwrap()).unwrap()
    }

    #[test]
    fn blocking_pair_found_exhaustively() {
        // Man 0 and woman 0 are mutual first choices, but the men hold their last choices.
        let m =
            market(vec![Community::balanced(2).unwrap()], vec![vec![0, 1], vec![1, 0]], vec![vec![0, 1], vec![1, 0]]);
        let bad = Matching::from_pairs(
            &m,
            m.society(),
            &[(AgentId::man(0, 0), AgentId::woman(0, 1)), (AgentId::man(0, 1), AgentId::woman(0, 0))],
        )
        .unwrap();
        // Oracle: every (m, w) pair checked by hand.
        let mut brute = Vec::new();
        for mi in 0..2 {
            for wi in 0..2 {
                if bad.wife(mi) != Some(wi as u32)
                    && m.prefers(Side::Man, mi, Some(wi as u32), bad.wife(mi))
                    && m.prefers(Side::Woman, wi, Some(mi as u32), bad.husband(wi))
                {
                    brute.push((AgentId::man(0, mi), AgentId::woman(0, wi)));
                }
            }
        }
        assert_eq!(find_blocking_pair(&m, &bad), brute.first().copied());
        assert_eq!(find_blocking_pair(&m, &bad), Some((AgentId::man(0, 0), AgentId::woman(0, 0))));
        let check = is_stable(&m, &bad);
        assert!(check.witness.unwrap().confirms(&m, &bad));
        let mosm = man_optimal_stable_matching(&m, m.society()).unwrap().matching;
        assert!(find_blocking_pair(&m, &mosm).is_none());
    }

    #[test]
    fn swap_that_helps_all_four_is_found() {
        // Both men hold their second choice and are each other's wife's first choice.
        let m =
            market(vec![Community::balanced(2).unwrap()], vec![vec![1, 0], vec![0, 1]], vec![vec![1, 0], vec![0, 1]]);
        let mu = Matching::from_pairs(
            &m,
            m.society(),
            &[(AgentId::man(0, 0), AgentId::woman(0, 0)), (AgentId::man(0, 1), AgentId::woman(0, 1))],
        )
        .unwrap();
        let check = is_pareto_optimal(&m, &mu).unwrap();
        assert!(!check.holds());
        let Some(Witness::DominatingMatching(swap)) = &check.witness else { panic!() };
        assert_eq!(swap.wife(0), Some(1));
        assert_eq!(swap.wife(1), Some(0));
        assert!(check.witness.as_ref().unwrap().confirms(&m, &mu));
        assert!(is_pareto_optimal(&m, swap).unwrap().holds());
    }

    #[test]
    fn single_agents_can_be_dominated() {
        let m = market(vec![Community::balanced(1).unwrap()], vec![vec![0]], vec![vec![0]]);
        let empty = Matching::empty(&m, m.society()).unwrap();
        assert!(!is_pareto_optimal(&m, &empty).unwrap().holds());
        assert!(find_blocking_pair(&m, &empty).is_some());
    }

    #[test]
    fn kappa_one_scheme_is_wim_and_im() {
        let m =
            market(vec![Community::balanced(2).unwrap()], vec![vec![0, 1], vec![1, 0]], vec![vec![1, 0], vec![0, 1]]);
        let scheme = mosm_scheme(&m).unwrap();
        assert!(is_wim(&scheme).holds());
        assert!(is_im(&scheme).unwrap().holds());
        let part = hurt_partition(&scheme).unwrap();
        assert!(part.worse.is_empty() && part.better.is_empty());
        assert_eq!(part.same.len(), 4);
    }

    #[test]
    fn constant_scheme_is_im() {
        // Three communities; every population keeps each agent with a community mate.
        let men: Vec<Vec<u32>> = (0..3).map(|_| vec![2, 1, 0]).collect();
        let women: Vec<Vec<u32>> = (0..3).map(|_| vec![0, 1, 2]).collect();
        let m = market(vec![Community::balanced(1).unwrap(); 3], men, women);
        let scheme = MatchingScheme::from_fn(&m, |p| {
            let mut mu = Matching::empty(&m, p)?;
            for c in p.members() {
                mu.pair(&m, c, c)?;
            }
            Ok(mu)
        })
        .unwrap();
        assert!(is_im(&scheme).unwrap().holds());
        assert!(is_im_bounded(&scheme, 2).is_err());
    }

    #[test]
    fn unmatched_agents_break_partition() {
        let m = market(
            vec![Community::balanced(1).unwrap(); 2],
            vec![vec![0, 1], vec![0, 1]],
            vec![vec![1, 0], vec![1, 0]],
        );
        let empty = Matching::empty(&m, m.society()).unwrap();
        assert!(matches!(hurt_partition_between(&m, &empty, &empty), Err(Error::Unmatched(_))));
    }
}
