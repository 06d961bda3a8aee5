//! Worked instances shipped as market files under `fixtures/`, each with
//! the outcomes it is known to produce.

use std::fmt;

use crate::algorithms::{
    enumerate_pareto_matchings, enumerate_stable_matchings, man_optimal_stable_matching, mosm_scheme, pareto_schemes,
    segregated_scheme, stable_schemes,
};
use crate::error::{Error, Result};
use crate::format::parse_market;
use crate::market::{AgentId, ExtendedMarket, Matching, Population};
use crate::properties::{find_blocking_pair, hurt_partition, is_im, is_pareto_scheme, is_wim, wim_violations};

pub const FIXTURE_NAMES: [&str; 4] = ["prop1_2x2", "prop2_3x3", "pretty_ugly_2x2", "scheme_example_2x2"];

/// Raw text of a shipped fixture.
pub fn fixture_text(name: &str) -> Result<&'static str> {
    Ok(match name {
        "prop1_2x2" => include_str!("../fixtures/prop1_2x2.mkt"),
        "prop2_3x3" => include_str!("../fixtures/prop2_3x3.mkt"),
        "pretty_ugly_2x2" => include_str!("../fixtures/pretty_ugly_2x2.mkt"),
        "scheme_example_2x2" => include_str!("../fixtures/scheme_example_2x2.mkt"),
        other => return Err(Error::UnknownFixture(other.to_string())),
    })
}

type Pairs = Vec<(AgentId, AgentId)>;

/// A checkable claim about a fixture.
#[derive(Clone, Debug, PartialEq)]
pub enum Expectation {
    PreferenceList {
        agent: AgentId,
        list: Vec<AgentId>,
    },
    ManOptimal {
        population: Population,
        pairs: Pairs,
    },
    StableMatchingCount {
        population: Population,
        count: usize,
    },
    /// Every Pareto-optimal matching of the population contains the pair.
    ParetoForcesPair {
        population: Population,
        man: AgentId,
        woman: AgentId,
    },
    /// Agents hurt by integration under the men-optimal scheme.
    MosmWimViolators(Vec<AgentId>),
    MosmHurtPartition {
        worse: Vec<AgentId>,
        better: Vec<AgentId>,
        same: Vec<AgentId>,
    },
    NoStableSchemeIsWim,
    NoParetoSchemeIsIm,
    WithinCommunityScheme {
        im: bool,
        pareto: bool,
        blocking_pair: Option<(AgentId, AgentId)>,
    },
    /// The listed matchings per population form the men-optimal scheme.
    SchemeIsMosm(Vec<(Population, Pairs)>),
}

impl fmt::Display for Expectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expectation::PreferenceList { agent, .. } => write!(f, "preference list of {agent}"),
            Expectation::ManOptimal { population, .. } => write!(f, "men-optimal matching on {population}"),
            Expectation::StableMatchingCount { population, count } => {
                write!(f, "{count} stable matching(s) on {population}")
            }
            Expectation::ParetoForcesPair { population, man, woman } => {
                write!(f, "every Pareto-optimal matching on {population} pairs {man} with {woman}")
            }
            Expectation::MosmWimViolators(v) => {
                let names: Vec<String> = v.iter().map(ToString::to_string).collect();
                write!(f, "men-optimal scheme hurts exactly {{{}}}", names.join(", "))
            }
            Expectation::MosmHurtPartition { .. } => write!(f, "hurt partition of the men-optimal scheme"),
            Expectation::NoStableSchemeIsWim => write!(f, "no stable scheme is WIM"),
            Expectation::NoParetoSchemeIsIm => write!(f, "no Pareto-optimal scheme is IM"),
            Expectation::WithinCommunityScheme { .. } => write!(f, "within-community scheme properties"),
            Expectation::SchemeIsMosm(_) => write!(f, "listed scheme is the men-optimal scheme"),
        }
    }
}

fn mismatch(what: impl fmt::Display, got: impl fmt::Debug) -> Error {
    Error::Invariant(format!("{what}: got {got:?}"))
}

fn sorted(mut v: Vec<AgentId>) -> Vec<AgentId> {
    v.sort();
    v
}

impl Expectation {
    pub fn check(&self, market: &ExtendedMarket) -> Result<()> {
        match self {
            Expectation::PreferenceList { agent, list } => {
                let i = market.index(*agent)?;
                let got: Vec<AgentId> = market
                    .profile()
                    .order(agent.side, i)
                    .iter()
                    .map(|&p| market.agent(agent.side.opposite(), p as usize))
                    .collect();
                if &got != list {
                    return Err(mismatch(self, got));
                }
            }
            Expectation::ManOptimal { population, pairs } => {
                let got = man_optimal_stable_matching(market, *population)?.matching;
                if got != Matching::from_pairs(market, *population, pairs)? {
                    return Err(mismatch(self, got.pair_ids(market)));
                }
            }
            Expectation::StableMatchingCount { population, count } => {
                let got = enumerate_stable_matchings(market, *population)?.len();
                if got != *count {
                    return Err(mismatch(self, got));
                }
            }
            Expectation::ParetoForcesPair { population, man, woman } => {
                for m in enumerate_pareto_matchings(market, *population)? {
                    if m.partner_of(market, *man)? != Some(*woman) {
                        return Err(mismatch(self, m.pair_ids(market)));
                    }
                }
            }
            Expectation::MosmWimViolators(expected) => {
                let got = wim_violations(&mosm_scheme(market)?);
                if got != sorted(expected.clone()) {
                    return Err(mismatch(self, got));
                }
            }
            Expectation::MosmHurtPartition { worse, better, same } => {
                let p = hurt_partition(&mosm_scheme(market)?)?;
                let as_vec = |s: &std::collections::BTreeSet<AgentId>| s.iter().copied().collect::<Vec<_>>();
                if as_vec(&p.worse) != sorted(worse.clone())
                    || as_vec(&p.better) != sorted(better.clone())
                    || as_vec(&p.same) != sorted(same.clone())
                {
                    return Err(mismatch(self, p));
                }
            }
            Expectation::NoStableSchemeIsWim => {
                let mut seen = 0;
                for scheme in stable_schemes(market)? {
                    seen += 1;
                    if is_wim(&scheme).holds() {
                        return Err(mismatch(self, "a WIM stable scheme"));
                    }
                }
                if seen == 0 {
                    return Err(mismatch(self, "no stable schemes at all"));
                }
            }
            Expectation::NoParetoSchemeIsIm => {
                let mut seen = 0;
                for scheme in pareto_schemes(market)? {
                    seen += 1;
                    if is_im(&scheme)?.holds() {
                        return Err(mismatch(self, "an IM Pareto-optimal scheme"));
                    }
                }
                if seen == 0 {
                    return Err(mismatch(self, "no Pareto-optimal schemes at all"));
                }
            }
            Expectation::WithinCommunityScheme { im, pareto, blocking_pair } => {
                let scheme = segregated_scheme(market)?;
                let got = (
                    is_im(&scheme)?.holds(),
                    is_pareto_scheme(&scheme)?.holds(),
                    find_blocking_pair(market, scheme.get(market.society())),
                );
                if got != (*im, *pareto, *blocking_pair) {
                    return Err(mismatch(self, got));
                }
            }
            Expectation::SchemeIsMosm(entries) => {
                let mosm = mosm_scheme(market)?;
                for (p, pairs) in entries {
                    if mosm.get(*p) != &Matching::from_pairs(market, *p, pairs)? {
                        return Err(mismatch(self, (p, mosm.get(*p).pair_ids(market))));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub market: ExtendedMarket,
    pub expectations: Vec<Expectation>,
}

impl Fixture {
    /// Checks every expectation against the live implementation.
    pub fn verify(&self) -> Vec<(String, Result<()>)> {
        self.expectations.iter().map(|e| (e.to_string(), e.check(&self.market))).collect()
    }

    pub fn all_pass(&self) -> bool {
        self.verify().iter().all(|(_, r)| r.is_ok())
    }
}

fn expectations(name: &str) -> Vec<Expectation> {
    use Expectation::*;
    let (m, w) = (AgentId::man, AgentId::woman);
    let one = |c| Population::single(c);
    match name {
        "prop1_2x2" => {
            let (ma, mb, wa, wb) = (m(0, 0), m(1, 0), w(0, 0), w(1, 0));
            let s = Population::society(2);
            vec![
                PreferenceList { agent: ma, list: vec![wa, wb] },
                ManOptimal { population: one(0), pairs: vec![(ma, wa)] },
                ManOptimal { population: one(1), pairs: vec![(mb, wb)] },
                ManOptimal { population: s, pairs: vec![(mb, wa), (ma, wb)] },
                StableMatchingCount { population: s, count: 1 },
                MosmWimViolators(vec![ma, wb]),
                MosmHurtPartition { worse: vec![ma, wb], better: vec![mb, wa], same: vec![] },
                NoStableSchemeIsWim,
            ]
        }
        "prop2_3x3" => {
            let (ma, mb, md) = (m(0, 0), m(1, 0), m(2, 0));
            let (wa, wb, wd) = (w(0, 0), w(1, 0), w(2, 0));
            let pair = |a: usize, b: usize| Population::new([a, b], 3).unwrap();
            vec![
                PreferenceList { agent: wd, list: vec![ma, mb, md] },
                PreferenceList { agent: ma, list: vec![wb, wd, wa] },
                ParetoForcesPair { population: pair(0, 1), man: mb, woman: wa },
                ParetoForcesPair { population: pair(1, 2), man: md, woman: wb },
                ParetoForcesPair { population: pair(0, 2), man: ma, woman: wd },
                NoParetoSchemeIsIm,
            ]
        }
        "pretty_ugly_2x2" => {
            vec![WithinCommunityScheme { im: true, pareto: true, blocking_pair: Some((m(0, 0), w(1, 0))) }]
        }
        "scheme_example_2x2" => {
            let (ma, mb, wa, wb) = (m(0, 0), m(1, 0), w(0, 0), w(1, 0));
            vec![
                SchemeIsMosm(vec![
                    (one(0), vec![(ma, wa)]),
                    (one(1), vec![(mb, wb)]),
                    (Population::society(2), vec![(ma, wb), (mb, wa)]),
                ]),
                MosmWimViolators(vec![ma, wb]),
            ]
        }
        _ => Vec::new(),
    }
}

pub fn load_fixture(name: &str) -> Result<Fixture> {
    let market = parse_market(fixture_text(name)?)?;
    Ok(Fixture { name: name.to_string(), market, expectations: expectations(name) })
}
