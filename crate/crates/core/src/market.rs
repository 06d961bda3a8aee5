//! Domain types for extended marriage problems: communities, populations,
//! complete strict preference profiles, matchings and matching schemes.
//!
//! Agents are addressed two ways. [`AgentId`] is the structural
//! `(community, side, local)` triple used at API boundaries and in fixture
//! files. Internally every man and every woman also has a dense *global*
//! index on its side of the society (community-major, then local index), and
//! preference lists are stored over those global indices.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Man,
    Woman,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Man => Side::Woman,
            Side::Woman => Side::Man,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Side::Man => 'm',
            Side::Woman => 'w',
        }
    }
}

/// Structural identity of a person. Ordered by community, then side, then local index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentId {
    pub community: usize,
    pub side: Side,
    pub local: usize,
}

impl AgentId {
    pub fn new(community: usize, side: Side, local: usize) -> Self {
        AgentId { community, side, local }
    }

    pub fn man(community: usize, local: usize) -> Self {
        AgentId::new(community, Side::Man, local)
    }

    pub fn woman(community: usize, local: usize) -> Self {
        AgentId::new(community, Side::Woman, local)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.community, self.side.letter(), self.local)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Community {
    men_count: usize,
    women_count: usize,
}

impl Community {
    pub fn new(men_count: usize, women_count: usize) -> Result<Self> {
        if men_count == 0 || women_count == 0 {
            return Err(Error::InvalidArgument(format!(
                "a community needs at least one man and one woman, got {men_count}/{women_count}"
            )));
        }
        Ok(Community { men_count, women_count })
    }

    pub fn balanced(n: usize) -> Result<Self> {
        Community::new(n, n)
    }

    pub fn men_count(&self) -> usize {
        self.men_count
    }

    pub fn women_count(&self) -> usize {
        self.women_count
    }

    pub fn count(&self, side: Side) -> usize {
        match side {
            Side::Man => self.men_count,
            Side::Woman => self.women_count,
        }
    }

    pub fn is_balanced(&self) -> bool {
        self.men_count == self.women_count
    }
}

/// Largest supported community count; populations are bit sets in a `u64`.
pub const MAX_COMMUNITIES: usize = 63;

/// A nonempty set of whole communities, stored as a bit mask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Population(u64);

impl Population {
    pub fn new(members: impl IntoIterator<Item = usize>, kappa: usize) -> Result<Self> {
        let mut mask = 0u64;
        for c in members {
            if c >= kappa {
                return Err(Error::InvalidArgument(format!("community {c} out of range for kappa = {kappa}")));
            }
            mask |= 1 << c;
        }
        Population::from_mask(mask, kappa)
    }

    pub fn from_mask(mask: u64, kappa: usize) -> Result<Self> {
        if kappa == 0 || kappa > MAX_COMMUNITIES {
            return Err(Error::InvalidArgument(format!("unsupported kappa {kappa}")));
        }
        if mask == 0 {
            return Err(Error::InvalidArgument("population must be nonempty".into()));
        }
        if mask >> kappa != 0 {
            return Err(Error::InvalidArgument(format!("population mask {mask:#b} exceeds kappa = {kappa}")));
        }
        Ok(Population(mask))
    }

    pub fn single(community: usize) -> Self {
        assert!(community < MAX_COMMUNITIES);
        Population(1 << community)
    }

    /// The whole society `S`.
    pub fn society(kappa: usize) -> Self {
        assert!((1..=MAX_COMMUNITIES).contains(&kappa));
        Population((1u64 << kappa) - 1)
    }

    /// Every nonempty population of a `kappa`-community society, in mask order.
    pub fn all(kappa: usize) -> impl Iterator<Item = Population> {
        assert!((1..=MAX_COMMUNITIES).contains(&kappa));
        (1..(1u64 << kappa)).map(Population)
    }

    pub fn mask(self) -> u64 {
        self.0
    }

    pub fn contains(self, community: usize) -> bool {
        community < 64 && self.0 >> community & 1 == 1
    }

    pub fn is_disjoint(self, other: Population) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset(self, other: Population) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: Population) -> Population {
        Population(self.0 | other.0)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Always false for values built through the checked constructors.
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn members(self) -> impl Iterator<Item = usize> {
        let mask = self.0;
        (0..64).filter(move |c| mask >> c & 1 == 1)
    }

    /// Position of this population in a scheme table (`mask - 1`).
    pub(crate) fn table_index(self) -> usize {
        (self.0 - 1) as usize
    }
}

impl fmt::Display for Population {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let members: Vec<String> = self.members().map(|c| c.to_string()).collect();
        write!(f, "{{{}}}", members.join(","))
    }
}

/// Strict complete preference lists of one side, flattened, with inverse ranks.
#[derive(Clone, Debug, PartialEq, Eq)]
struct SideLists {
    agents: usize,
    list_len: usize,
    order: Vec<u32>,
    rank: Vec<u32>,
}

impl SideLists {
    fn from_flat(agents: usize, list_len: usize, order: Vec<u32>, side: Side) -> Result<Self> {
        if order.len() != agents * list_len {
            return Err(Error::InvalidArgument(format!(
                "expected {} preference entries for {side:?} side, got {}",
                agents * list_len,
                order.len()
            )));
        }
        let mut rank = vec![u32::MAX; order.len()];
        for a in 0..agents {
            let base = a * list_len;
            for (pos, &p) in order[base..base + list_len].iter().enumerate() {
                let p = p as usize;
                if p >= list_len || rank[base + p] != u32::MAX {
                    return Err(Error::InvalidArgument(format!(
                        "preference list of {side:?} #{a} is not a permutation of the opposite side"
                    )));
                }
                rank[base + p] = pos as u32;
            }
        }
        Ok(SideLists { agents, list_len, order, rank })
    }

    #[inline]
    fn order(&self, agent: usize) -> &[u32] {
        &self.order[agent * self.list_len..(agent + 1) * self.list_len]
    }

    #[inline]
    fn rank(&self, agent: usize, partner: usize) -> u32 {
        self.rank[agent * self.list_len + partner]
    }
}

/// Complete strict preferences of every agent over the whole opposite side of
/// the society. Stored both as ordered lists and as inverse rank tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreferenceProfile {
    men: SideLists,
    women: SideLists,
}

impl PreferenceProfile {
    /// Builds a profile from one ordered list (most preferred first) per agent,
    /// expressed in global indices of the opposite side.
    pub fn from_lists(men: Vec<Vec<u32>>, women: Vec<Vec<u32>>) -> Result<Self> {
        let men_count = men.len();
        let women_count = women.len();
        let flatten = |lists: Vec<Vec<u32>>, len: usize, side: Side| -> Result<Vec<u32>> {
            let mut flat = Vec::with_capacity(lists.len() * len);
            for (i, l) in lists.into_iter().enumerate() {
                if l.len() != len {
                    return Err(Error::InvalidArgument(format!(
                        "{side:?} #{i} lists {} partners, expected {len}",
                        l.len()
                    )));
                }
                flat.extend(l);
            }
            Ok(flat)
        };
        let men_flat = flatten(men, women_count, Side::Man)?;
        let women_flat = flatten(women, men_count, Side::Woman)?;
        PreferenceProfile::from_flat(men_count, women_count, men_flat, women_flat)
    }

    /// Builds a profile from row-major flattened lists.
    pub fn from_flat(men_count: usize, women_count: usize, men_order: Vec<u32>, women_order: Vec<u32>) -> Result<Self> {
        Ok(PreferenceProfile {
            men: SideLists::from_flat(men_count, women_count, men_order, Side::Man)?,
            women: SideLists::from_flat(women_count, men_count, women_order, Side::Woman)?,
        })
    }

    fn lists(&self, side: Side) -> &SideLists {
        match side {
            Side::Man => &self.men,
            Side::Woman => &self.women,
        }
    }

    pub fn count(&self, side: Side) -> usize {
        self.lists(side).agents
    }

    /// Preference list of agent `agent` on `side`, most preferred first.
    #[inline]
    pub fn order(&self, side: Side, agent: usize) -> &[u32] {
        self.lists(side).order(agent)
    }

    /// Zero-based position of `partner` in the list of `agent`.
    #[inline]
    pub fn rank(&self, side: Side, agent: usize, partner: usize) -> u32 {
        self.lists(side).rank(agent, partner)
    }
}

/// Maps structural ids to global indices and back.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Layout {
    men_offsets: Vec<usize>,
    women_offsets: Vec<usize>,
    man_community: Vec<u32>,
    woman_community: Vec<u32>,
}

impl Layout {
    fn new(communities: &[Community]) -> Self {
        let mut men_offsets = vec![0];
        let mut women_offsets = vec![0];
        let mut man_community = Vec::new();
        let mut woman_community = Vec::new();
        for (c, com) in communities.iter().enumerate() {
            men_offsets.push(men_offsets[c] + com.men_count);
            women_offsets.push(women_offsets[c] + com.women_count);
            man_community.extend(std::iter::repeat_n(c as u32, com.men_count));
            woman_community.extend(std::iter::repeat_n(c as u32, com.women_count));
        }
        Layout { men_offsets, women_offsets, man_community, woman_community }
    }

    fn offsets(&self, side: Side) -> &[usize] {
        match side {
            Side::Man => &self.men_offsets,
            Side::Woman => &self.women_offsets,
        }
    }
}

/// Which rank to report for a partner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankMode {
    /// Position over the whole opposite side of the society.
    Absolute,
    /// Position among the opposite-side members of the agent's own community.
    Relative,
}

/// An extended marriage problem: `kappa` communities and a complete strict
/// preference profile over the society.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtendedMarket {
    communities: Vec<Community>,
    profile: PreferenceProfile,
    layout: Layout,
}

impl ExtendedMarket {
    pub fn new(communities: Vec<Community>, profile: PreferenceProfile) -> Result<Self> {
        if communities.is_empty() || communities.len() > MAX_COMMUNITIES {
            return Err(Error::InvalidArgument(format!(
                "need between 1 and {MAX_COMMUNITIES} communities, got {}",
                communities.len()
            )));
        }
        let layout = Layout::new(&communities);
        let men = layout.man_community.len();
        let women = layout.woman_community.len();
        if profile.count(Side::Man) != men || profile.count(Side::Woman) != women {
            return Err(Error::InvalidArgument(format!(
                "profile covers {}/{} agents, communities hold {men}/{women}",
                profile.count(Side::Man),
                profile.count(Side::Woman)
            )));
        }
        Ok(ExtendedMarket { communities, profile, layout })
    }

    pub fn kappa(&self) -> usize {
        self.communities.len()
    }

    pub fn communities(&self) -> &[Community] {
        &self.communities
    }

    pub fn profile(&self) -> &PreferenceProfile {
        &self.profile
    }

    /// Number of agents of `side` in the whole society.
    pub fn count(&self, side: Side) -> usize {
        self.profile.count(side)
    }

    pub fn total_agents(&self) -> usize {
        self.count(Side::Man) + self.count(Side::Woman)
    }

    pub fn is_balanced(&self) -> bool {
        self.communities.iter().all(Community::is_balanced)
    }

    /// Errors with the first unbalanced community, if any.
    pub fn require_balanced(&self) -> Result<()> {
        match self.communities.iter().position(|c| !c.is_balanced()) {
            Some(c) => Err(Error::Unbalanced(c)),
            None => Ok(()),
        }
    }

    pub fn society(&self) -> Population {
        Population::society(self.kappa())
    }

    pub fn check_population(&self, population: Population) -> Result<()> {
        Population::from_mask(population.mask(), self.kappa()).map(|_| ())
    }

    /// Global index of an agent on its side.
    pub fn index(&self, agent: AgentId) -> Result<usize> {
        let com = self.communities.get(agent.community).ok_or(Error::UnknownAgent(agent))?;
        if agent.local >= com.count(agent.side) {
            return Err(Error::UnknownAgent(agent));
        }
        Ok(self.layout.offsets(agent.side)[agent.community] + agent.local)
    }

    /// Structural id of the agent with global index `index` on `side`.
    pub fn agent(&self, side: Side, index: usize) -> AgentId {
        let community = self.community_of(side, index);
        AgentId::new(community, side, index - self.layout.offsets(side)[community])
    }

    #[inline]
    pub fn community_of(&self, side: Side, index: usize) -> usize {
        match side {
            Side::Man => self.layout.man_community[index] as usize,
            Side::Woman => self.layout.woman_community[index] as usize,
        }
    }

    /// Global index range of `side` agents in `community`.
    pub fn community_range(&self, side: Side, community: usize) -> std::ops::Range<usize> {
        let off = self.layout.offsets(side);
        off[community]..off[community + 1]
    }

    /// Global indices of `side` agents belonging to `population`, ascending.
    pub fn members(&self, side: Side, population: Population) -> impl Iterator<Item = usize> + '_ {
        population.members().take_while(move |&c| c < self.kappa()).flat_map(move |c| self.community_range(side, c))
    }

    pub fn population_count(&self, side: Side, population: Population) -> usize {
        population.members().map(|c| self.communities[c].count(side)).sum()
    }

    /// Every agent of the society in `AgentId` order.
    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.communities.iter().enumerate().flat_map(|(c, com)| {
            (0..com.men_count)
                .map(move |l| AgentId::man(c, l))
                .chain((0..com.women_count).map(move |l| AgentId::woman(c, l)))
        })
    }

    #[inline]
    pub fn in_population(&self, side: Side, index: usize, population: Population) -> bool {
        population.contains(self.community_of(side, index))
    }

    /// True when `agent` strictly prefers partner `a` to partner `b`, where
    /// `None` means remaining single (worse than any partner).
    #[inline]
    pub fn prefers(&self, side: Side, agent: usize, a: Option<u32>, b: Option<u32>) -> bool {
        match (a, b) {
            (Some(a), Some(b)) => {
                self.profile.rank(side, agent, a as usize) < self.profile.rank(side, agent, b as usize)
            }
            (Some(_), None) => true,
            (None, _) => false,
        }
    }

    fn check_pair(&self, of: AgentId, partner: AgentId) -> Result<(usize, usize)> {
        if of.side == partner.side {
            return Err(Error::SameSide(of, partner));
        }
        Ok((self.index(of)?, self.index(partner)?))
    }

    /// One-based position of `partner` in the society-wide list of `of`.
    pub fn absolute_rank(&self, of: AgentId, partner: AgentId) -> Result<u32> {
        let (i, p) = self.check_pair(of, partner)?;
        Ok(self.profile.rank(of.side, i, p) + 1)
    }

    /// Number of opposite-side members of `of`'s community weakly preferred
    /// to `partner`. Zero when `partner` is an outsider preferred to all of them.
    pub fn relative_rank(&self, of: AgentId, partner: AgentId) -> Result<u32> {
        let (i, p) = self.check_pair(of, partner)?;
        Ok(self.relative_rank_index(of.side, i, p))
    }

    pub(crate) fn relative_rank_index(&self, side: Side, agent: usize, partner: usize) -> u32 {
        let community = self.community_of(side, agent);
        let threshold = self.profile.rank(side, agent, partner);
        self.community_range(side.opposite(), community)
            .filter(|&q| self.profile.rank(side, agent, q) <= threshold)
            .count() as u32
    }

    /// One-based position of `partner` among members of `population` in `agent`'s list.
    pub fn restricted_rank(&self, side: Side, agent: usize, partner: usize, population: Population) -> u32 {
        let threshold = self.profile.rank(side, agent, partner);
        self.members(side.opposite(), population).filter(|&q| self.profile.rank(side, agent, q) <= threshold).count()
            as u32
    }

    pub(crate) fn rank_in_mode(&self, side: Side, agent: usize, partner: usize, mode: RankMode) -> u32 {
        match mode {
            RankMode::Absolute => self.profile.rank(side, agent, partner) + 1,
            RankMode::Relative => self.relative_rank_index(side, agent, partner),
        }
    }

    /// Mean rank of the partners of every `side` agent in the matching's
    /// population. Errors if any of them is single.
    pub fn average_rank(&self, matching: &Matching, side: Side, mode: RankMode) -> Result<f64> {
        let mut total = 0u64;
        let mut count = 0usize;
        for i in self.members(side, matching.population()) {
            let p = matching.partner(side, i).ok_or_else(|| Error::Unmatched(self.agent(side, i)))?;
            total += u64::from(self.rank_in_mode(side, i, p as usize, mode));
            count += 1;
        }
        Ok(total as f64 / count as f64)
    }
}

/// A partial pairing of the men and women of one population. Agents that are
/// not paired are matched to themselves.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matching {
    population: Population,
    wife: Vec<Option<u32>>,
    husband: Vec<Option<u32>>,
}

impl Matching {
    /// A matching on `population` in which everybody is single.
    pub fn empty(market: &ExtendedMarket, population: Population) -> Result<Self> {
        market.check_population(population)?;
        Ok(Matching {
            population,
            wife: vec![None; market.count(Side::Man)],
            husband: vec![None; market.count(Side::Woman)],
        })
    }

    pub fn from_pairs(market: &ExtendedMarket, population: Population, pairs: &[(AgentId, AgentId)]) -> Result<Self> {
        let mut m = Matching::empty(market, population)?;
        for &(a, b) in pairs {
            let (man, woman) = match (a.side, b.side) {
                (Side::Man, Side::Woman) => (a, b),
                (Side::Woman, Side::Man) => (b, a),
                _ => return Err(Error::SameSide(a, b)),
            };
            m.pair(market, market.index(man)?, market.index(woman)?)?;
        }
        Ok(m)
    }

    /// Marries two single members of the population.
    pub fn pair(&mut self, market: &ExtendedMarket, man: usize, woman: usize) -> Result<()> {
        if man >= self.wife.len() || woman >= self.husband.len() {
            return Err(Error::InvalidArgument(format!("pair ({man}, {woman}) out of range")));
        }
        let (m, w) = (market.agent(Side::Man, man), market.agent(Side::Woman, woman));
        if !self.population.contains(m.community) || !self.population.contains(w.community) {
            return Err(Error::InvalidArgument(format!("pair ({m}, {w}) lies outside population {}", self.population)));
        }
        if self.wife[man].is_some() || self.husband[woman].is_some() {
            return Err(Error::InvalidArgument(format!("{m} or {w} is already married")));
        }
        self.wife[man] = Some(woman as u32);
        self.husband[woman] = Some(man as u32);
        Ok(())
    }

    /// Internal constructor from a wife array; the caller guarantees validity.
    pub(crate) fn from_wives(population: Population, wife: Vec<Option<u32>>, women: usize) -> Self {
        let mut husband = vec![None; women];
        for (m, w) in wife.iter().enumerate() {
            if let Some(w) = w {
                debug_assert!(husband[*w as usize].is_none());
                husband[*w as usize] = Some(m as u32);
            }
        }
        Matching { population, wife, husband }
    }

    pub fn population(&self) -> Population {
        self.population
    }

    #[inline]
    pub fn wife(&self, man: usize) -> Option<u32> {
        self.wife[man]
    }

    #[inline]
    pub fn husband(&self, woman: usize) -> Option<u32> {
        self.husband[woman]
    }

    #[inline]
    pub fn partner(&self, side: Side, index: usize) -> Option<u32> {
        match side {
            Side::Man => self.wife[index],
            Side::Woman => self.husband[index],
        }
    }

    pub fn partner_of(&self, market: &ExtendedMarket, agent: AgentId) -> Result<Option<AgentId>> {
        let i = market.index(agent)?;
        Ok(self.partner(agent.side, i).map(|p| market.agent(agent.side.opposite(), p as usize)))
    }

    /// Married couples as `(man, woman)` global indices, ascending by man.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.wife.iter().enumerate().filter_map(|(m, w)| w.map(|w| (m, w as usize)))
    }

    pub fn pair_ids(&self, market: &ExtendedMarket) -> Vec<(AgentId, AgentId)> {
        self.pairs().map(|(m, w)| (market.agent(Side::Man, m), market.agent(Side::Woman, w))).collect()
    }

    pub fn size(&self) -> usize {
        self.pairs().count()
    }

    /// Per-man wife encoding (`u32::MAX` for single), used for deterministic ordering.
    pub(crate) fn encoding(&self) -> Vec<u32> {
        self.wife.iter().map(|w| w.unwrap_or(u32::MAX)).collect()
    }

    /// Checks involution, closure and side invariants.
    pub fn validate(&self, market: &ExtendedMarket) -> Result<()> {
        if self.wife.len() != market.count(Side::Man) || self.husband.len() != market.count(Side::Woman) {
            return Err(Error::Invariant("matching sized for a different market".into()));
        }
        for (m, w) in self.wife.iter().enumerate() {
            if let Some(w) = *w {
                if self.husband[w as usize] != Some(m as u32) {
                    return Err(Error::Invariant(format!("partner map is not an involution at man {m}")));
                }
                if !market.in_population(Side::Man, m, self.population)
                    || !market.in_population(Side::Woman, w as usize, self.population)
                {
                    return Err(Error::Invariant(format!("pair ({m}, {w}) outside population")));
                }
            }
        }
        for (w, m) in self.husband.iter().enumerate() {
            if let Some(m) = *m {
                if self.wife[m as usize] != Some(w as u32) {
                    return Err(Error::Invariant(format!("partner map is not an involution at woman {w}")));
                }
            }
        }
        Ok(())
    }

    /// Union of matchings on pairwise disjoint populations.
    pub fn union(market: &ExtendedMarket, parts: &[&Matching]) -> Result<Matching> {
        let mut mask = 0u64;
        let mut out = Matching::empty(market, market.society())?;
        for part in parts {
            if mask & part.population.mask() != 0 {
                return Err(Error::InvalidArgument("union of overlapping populations".into()));
            }
            mask |= part.population.mask();
            for (m, w) in part.pairs() {
                out.wife[m] = Some(w as u32);
                out.husband[w] = Some(m as u32);
            }
        }
        out.population = Population::from_mask(mask, market.kappa())?;
        Ok(out)
    }
}

/// A matching for every nonempty population of the society.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchingScheme<'m> {
    market: &'m ExtendedMarket,
    table: Vec<Matching>,
}

impl<'m> MatchingScheme<'m> {
    /// Builds a scheme from one matching per population, in any order.
    pub fn new(market: &'m ExtendedMarket, matchings: Vec<Matching>) -> Result<Self> {
        let size = (1usize << market.kappa()) - 1;
        let mut slots: Vec<Option<Matching>> = vec![None; size];
        for m in matchings {
            market.check_population(m.population())?;
            m.validate(market)?;
            let idx = m.population().table_index();
            if slots[idx].is_some() {
                return Err(Error::InvalidArgument(format!("two matchings given for population {}", m.population())));
            }
            slots[idx] = Some(m);
        }
        let table = slots
            .into_iter()
            .enumerate()
            .map(|(i, s)| s.ok_or_else(|| Error::InvalidArgument(format!("no matching for population mask {}", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        Ok(MatchingScheme { market, table })
    }

    /// Builds a scheme by evaluating `f` on every population.
    pub fn from_fn(market: &'m ExtendedMarket, mut f: impl FnMut(Population) -> Result<Matching>) -> Result<Self> {
        let matchings = Population::all(market.kappa()).map(&mut f).collect::<Result<Vec<_>>>()?;
        MatchingScheme::new(market, matchings)
    }

    pub fn market(&self) -> &'m ExtendedMarket {
        self.market
    }

    pub fn get(&self, population: Population) -> &Matching {
        &self.table[population.table_index()]
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Population, &Matching)> {
        self.table.iter().map(|m| (m.population(), m))
    }

    /// Union of the single-community matchings, as a matching on the society.
    pub fn segregated(&self) -> Result<Matching> {
        let parts: Vec<&Matching> = (0..self.market.kappa()).map(|c| self.get(Population::single(c))).collect();
        Matching::union(self.market, &parts)
    }
}
