//! Randomized invariants, checked against small brute-force oracles written
//! independently of the library's own enumerators.

use integra::algorithms::{
    build_wim_pareto_scheme, enumerate_pareto_matchings, enumerate_stable_matchings, man_optimal_stable_matching,
    mosm_scheme, segregated_scheme,
};
use integra::analytics::integrate;
use integra::format::{parse_market, write_market};
use integra::par::Execution;
use integra::properties::{find_blocking_pair, is_im, is_pareto_optimal, is_stable, is_wim, wim_violations, Witness};
use integra::random::{displaced_positions, generate_correlated_with_status_quo, generate_uniform, MarketSpec};
use integra::{ExtendedMarket, Matching, MatchingScheme, Population, Side};
use proptest::prelude::*;

fn market(n: usize, kappa: usize, seed: u64) -> ExtendedMarket {
    generate_uniform(&MarketSpec::uniform(n, kappa, seed)).unwrap()
}

/// Every perfect matching of a balanced population, as `wives[k]` for the
/// k-th member man.
fn perfect_matchings(market: &ExtendedMarket, pop: Population) -> Vec<Matching> {
    let men: Vec<usize> = market.members(Side::Man, pop).collect();
    let mut women: Vec<usize> = market.members(Side::Woman, pop).collect();
    let mut out = Vec::new();
    permute(&mut women, 0, &mut |ws| {
        let mut m = Matching::empty(market, pop).unwrap();
        for (&a, &b) in men.iter().zip(ws) {
            m.pair(market, a, b).unwrap();
        }
        out.push(m);
    });
    out
}

fn permute(xs: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == xs.len() {
        f(xs);
        return;
    }
    for i in k..xs.len() {
        xs.swap(k, i);
        permute(xs, k + 1, f);
        xs.swap(k, i);
    }
}

fn rank(market: &ExtendedMarket, side: Side, i: usize, partner: Option<u32>) -> usize {
    partner.map_or(usize::MAX, |p| market.profile().rank(side, i, p as usize) as usize)
}

fn oracle_stable(market: &ExtendedMarket, m: &Matching) -> bool {
    let pop = m.population();
    for a in market.members(Side::Man, pop) {
        for b in market.members(Side::Woman, pop) {
            let man_gains = rank(market, Side::Man, a, Some(b as u32)) < rank(market, Side::Man, a, m.wife(a));
            let woman_gains = rank(market, Side::Woman, b, Some(a as u32)) < rank(market, Side::Woman, b, m.husband(b));
            if man_gains && woman_gains {
                return false;
            }
        }
    }
    true
}

fn oracle_dominates(market: &ExtendedMarket, a: &Matching, b: &Matching) -> bool {
    let pop = a.population();
    let mut strict = false;
    for side in [Side::Man, Side::Woman] {
        for i in market.members(side, pop) {
            let (ra, rb) = (rank(market, side, i, a.partner(side, i)), rank(market, side, i, b.partner(side, i)));
            if ra > rb {
                return false;
            }
            strict |= ra < rb;
        }
    }
    strict
}

fn sorted_pairs(ms: &[Matching]) -> Vec<Vec<(usize, usize)>> {
    let mut v: Vec<Vec<(usize, usize)>> = ms.iter().map(|m| m.pairs().collect()).collect();
    v.sort();
    v
}

fn populations(kappa: usize) -> Vec<Population> {
    Population::all(kappa).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 96, ..ProptestConfig::default() })]

    #[test]
    fn ranks_are_bijections(n in 1usize..6, kappa in 1usize..4, seed in any::<u64>()) {
        let mk = market(n, kappa, seed);
        let p = mk.profile();
        for side in [Side::Man, Side::Woman] {
            for i in 0..p.count(side) {
                for (k, &q) in p.order(side, i).iter().enumerate() {
                    prop_assert_eq!(p.rank(side, i, q as usize) as usize, k);
                }
                let me = mk.agent(side, i);
                for q in 0..p.count(side.opposite()) {
                    let other = mk.agent(side.opposite(), q);
                    let (abs, rel) = (mk.absolute_rank(me, other).unwrap(), mk.relative_rank(me, other).unwrap());
                    prop_assert!(rel <= abs);
                    if kappa == 1 {
                        prop_assert_eq!(rel, abs);
                    }
                }
            }
        }
    }

    #[test]
    fn men_optimal_matching_is_stable_perfect_and_consistent(n in 1usize..7, kappa in 1usize..4, seed in any::<u64>()) {
        let mk = market(n, kappa, seed);
        for pop in populations(kappa) {
            let r = man_optimal_stable_matching(&mk, pop).unwrap();
            let m = &r.matching;
            prop_assert_eq!(m.size(), n * pop.len());
            prop_assert!(is_stable(&mk, m).holds());
            prop_assert!(oracle_stable(&mk, m));
            let mut total = 0u64;
            for (a, b) in m.pairs() {
                prop_assert_eq!(m.husband(b), Some(a as u32));
                prop_assert_eq!(r.proposals_per_man[a], mk.restricted_rank(Side::Man, a, b, pop));
                total += u64::from(r.proposals_per_man[a]);
            }
            prop_assert_eq!(total, r.total_proposals);
        }
    }

    #[test]
    fn enumerators_agree_with_permutation_oracle(n in 1usize..4, kappa in 1usize..3, seed in any::<u64>()) {
        let mk = market(n, kappa, seed);
        let pop = mk.society();
        let all = perfect_matchings(&mk, pop);
        let stable: Vec<Matching> = all.iter().filter(|m| oracle_stable(&mk, m)).cloned().collect();
        let pareto: Vec<Matching> =
            all.iter().filter(|m| !all.iter().any(|o| oracle_dominates(&mk, o, m))).cloned().collect();
        let lib_stable = enumerate_stable_matchings(&mk, pop).unwrap();
        prop_assert_eq!(sorted_pairs(&lib_stable), sorted_pairs(&stable));
        prop_assert_eq!(sorted_pairs(&enumerate_pareto_matchings(&mk, pop).unwrap()), sorted_pairs(&pareto));

        let mosm = man_optimal_stable_matching(&mk, pop).unwrap().matching;
        prop_assert!(lib_stable.contains(&mosm));
        for s in &stable {
            for a in mk.members(Side::Man, pop) {
                prop_assert!(rank(&mk, Side::Man, a, mosm.wife(a)) <= rank(&mk, Side::Man, a, s.wife(a)));
            }
            prop_assert!(is_pareto_optimal(&mk, s).unwrap().holds());
        }
        for m in &all {
            let check = is_pareto_optimal(&mk, m).unwrap();
            prop_assert_eq!(check.holds(), pareto.contains(m));
            if let Some(w) = &check.witness {
                prop_assert!(w.confirms(&mk, m));
                if let Witness::DominatingMatching(o) = w {
                    prop_assert!(oracle_dominates(&mk, o, m));
                }
            }
            let blocking = find_blocking_pair(&mk, m);
            prop_assert_eq!(blocking.is_none(), oracle_stable(&mk, m));
            if let Some((man, woman)) = blocking {
                let witness = Witness::BlockingPair { man, woman };
                prop_assert!(witness.confirms(&mk, m));
            }
        }
    }

    #[test]
    fn integration_hurts_at_most_half(n in 1usize..9, kappa in 1usize..5, seed in any::<u64>()) {
        let mk = market(n, kappa, seed);
        let out = integrate(&mk).unwrap();
        let p = &out.partition;
        prop_assert_eq!(p.total(), 2 * n * kappa);
        prop_assert!(2 * p.worse.len() <= p.total());
        prop_assert!(p.partner_rescue_holds(&mk, &out.segregated));
        for &x in &p.worse {
            let i = mk.index(x).unwrap();
            let partner = out.segregated.partner(x.side, i).unwrap() as usize;
            prop_assert!(p.better.contains(&mk.agent(x.side.opposite(), partner)));
        }
    }

    #[test]
    fn scheme_properties_are_consistent(n in 1usize..3, kappa in 1usize..4, seed in any::<u64>()) {
        let mk = market(n, kappa, seed);
        let schemes: Vec<MatchingScheme<'_>> =
            vec![mosm_scheme(&mk).unwrap(), segregated_scheme(&mk).unwrap(), build_wim_pareto_scheme(&mk).unwrap()];
        for scheme in &schemes {
            let wim = is_wim(scheme);
            let im = is_im(scheme).unwrap();
            if im.holds() {
                prop_assert!(wim.holds());
            }
            prop_assert_eq!(wim.holds(), wim_violations(scheme).is_empty());
            for w in wim.witness.iter().chain(im.witness.iter()) {
                prop_assert!(w.confirms_scheme(scheme));
            }
            // Brute force: the WIM verdict over every agent.
            let seg = scheme.segregated().unwrap();
            let society = scheme.get(mk.society());
            let hurt = mk.agents().any(|a| {
                let i = mk.index(a).unwrap();
                rank(&mk, a.side, i, society.partner(a.side, i)) > rank(&mk, a.side, i, seg.partner(a.side, i))
            });
            prop_assert_eq!(wim.holds(), !hurt);
        }
        prop_assert!(is_wim(&schemes[2]).holds());
        prop_assert!(is_im(&schemes[1]).unwrap().holds());
    }

    #[test]
    fn correlated_lists_displace_at_most_c(n in 1usize..12, kappa in 1usize..4, rho in 0.0f64..0.999, seed in any::<u64>()) {
        let cm = generate_correlated_with_status_quo(&MarketSpec::correlated(n, kappa, rho, seed)).unwrap();
        prop_assert!(cm.swaps.is_multiple_of(2) && cm.swaps <= n * kappa);
        let p = cm.market.profile();
        for i in 0..n * kappa {
            let dm = displaced_positions(p.order(Side::Man, i), &cm.status_quo_men);
            let dw = displaced_positions(p.order(Side::Woman, i), &cm.status_quo_women);
            prop_assert!(dm <= cm.swaps && dm.is_multiple_of(2));
            prop_assert!(dw <= cm.swaps && dw.is_multiple_of(2));
        }
    }

    #[test]
    fn market_text_round_trips(n in 1usize..5, kappa in 1usize..4, seed in any::<u64>()) {
        let mk = market(n, kappa, seed);
        let text = write_market(&mk);
        prop_assert_eq!(write_market(&parse_market(&text).unwrap()), text);
    }

    #[test]
    fn execution_modes_agree(count in 0usize..200, workers in 1usize..5) {
        let f = |i: usize| (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(7);
        let seq = Execution::Sequential.map_indexed(count, f);
        prop_assert_eq!(Execution::with_workers(workers).map_indexed(count, f), seq);
    }
}
