//! Line-oriented text format for extended markets.
//!
//! ```text
//! # comment lines and blank lines are ignored; `#` also starts a trailing comment
//! <kappa> <size_0> <size_1> ... <size_{kappa-1}>
//! <community> <m|w> <local> : <community>.<local> <community>.<local> ...
//! ```
//!
//! The header gives the community count followed by one size per community,
//! either `n` (n men and n women) or `men/women`. Every agent then has exactly
//! one line listing the whole opposite side of the society, most preferred
//! first. Partner ids name agents of the opposite side, so the side letter is
//! omitted. Agent lines may appear in any order.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::market::{AgentId, Community, ExtendedMarket, PreferenceProfile, Side};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_usize(tok: &str, line: usize, what: &str) -> Result<usize> {
    tok.parse().map_err(|_| parse_err(line, format!("expected {what}, found `{tok}`")))
}

/// Parses a market from the text format.
pub fn parse_market(text: &str) -> Result<ExtendedMarket> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| parse_err(0, "missing header"))?;
    let mut toks = header.split_whitespace();
    let kappa = parse_usize(toks.next().unwrap_or(""), hline, "community count")?;
    let mut communities = Vec::with_capacity(kappa);
    for tok in toks {
        let (men, women) = match tok.split_once('/') {
            Some((m, w)) => (parse_usize(m, hline, "men count")?, parse_usize(w, hline, "women count")?),
            None => {
                let n = parse_usize(tok, hline, "community size")?;
                (n, n)
            }
        };
        communities.push(Community::new(men, women).map_err(|e| parse_err(hline, e.to_string()))?);
    }
    if communities.len() != kappa || kappa == 0 {
        return Err(parse_err(hline, format!("header declares {kappa} communities but lists {}", communities.len())));
    }

    let offsets = |side: Side| -> Vec<usize> {
        let mut off = vec![0];
        for c in &communities {
            off.push(off.last().unwrap() + c.count(side));
        }
        off
    };
    let men_off = offsets(Side::Man);
    let women_off = offsets(Side::Woman);
    let men_total = *men_off.last().unwrap();
    let women_total = *women_off.last().unwrap();
    let global = |side: Side, c: usize, l: usize, line: usize| -> Result<usize> {
        let off = if side == Side::Man { &men_off } else { &women_off };
        if c >= kappa || l >= communities[c].count(side) {
            return Err(parse_err(line, format!("no {side:?} {c}.{l} in this market")));
        }
        Ok(off[c] + l)
    };

    let mut men: Vec<Option<Vec<u32>>> = vec![None; men_total];
    let mut women: Vec<Option<Vec<u32>>> = vec![None; women_total];
    for (lineno, line) in lines {
        let (head, tail) = line.split_once(':').ok_or_else(|| parse_err(lineno, "expected `:`"))?;
        let head: Vec<&str> = head.split_whitespace().collect();
        if head.len() != 3 {
            return Err(parse_err(lineno, "expected `<community> <m|w> <local>` before `:`"));
        }
        let side = match head[1] {
            "m" => Side::Man,
            "w" => Side::Woman,
            other => return Err(parse_err(lineno, format!("side must be `m` or `w`, found `{other}`"))),
        };
        let c = parse_usize(head[0], lineno, "community")?;
        let l = parse_usize(head[2], lineno, "local index")?;
        let me = global(side, c, l, lineno)?;
        let mut list = Vec::new();
        for tok in tail.split_whitespace() {
            let (pc, pl) = tok
                .split_once('.')
                .ok_or_else(|| parse_err(lineno, format!("partner `{tok}` is not `<community>.<local>`")))?;
            let pc = parse_usize(pc, lineno, "partner community")?;
            let pl = parse_usize(pl, lineno, "partner local index")?;
            list.push(global(side.opposite(), pc, pl, lineno)? as u32);
        }
        let slot = match side {
            Side::Man => &mut men[me],
            Side::Woman => &mut women[me],
        };
        if slot.is_some() {
            return Err(parse_err(lineno, format!("duplicate line for {c} {} {l}", side.letter())));
        }
        *slot = Some(list);
    }

    let collect = |lists: Vec<Option<Vec<u32>>>, side: Side| -> Result<Vec<Vec<u32>>> {
        lists
            .into_iter()
            .enumerate()
            .map(|(i, l)| l.ok_or_else(|| parse_err(0, format!("no preference line for {side:?} #{i}"))))
            .collect()
    };
    let profile = PreferenceProfile::from_lists(collect(men, Side::Man)?, collect(women, Side::Woman)?)
        .map_err(|e| parse_err(0, e.to_string()))?;
    ExtendedMarket::new(communities, profile)
}

pub fn read_market(path: impl AsRef<Path>) -> Result<ExtendedMarket> {
    parse_market(&std::fs::read_to_string(path)?)
}

/// Renders a market in the text format; `parse_market` inverts it.
pub fn write_market(market: &ExtendedMarket) -> String {
    let mut out = String::new();
    out.push_str(&market.kappa().to_string());
    for c in market.communities() {
        if c.is_balanced() {
            let _ = write!(out, " {}", c.men_count());
        } else {
            let _ = write!(out, " {}/{}", c.men_count(), c.women_count());
        }
    }
    out.push('\n');
    for side in [Side::Man, Side::Woman] {
        for i in 0..market.count(side) {
            let AgentId { community, local, .. } = market.agent(side, i);
            let _ = write!(out, "{community} {} {local} :", side.letter());
            for &p in market.profile().order(side, i) {
                let q = market.agent(side.opposite(), p as usize);
                let _ = write!(out, " {}.{}", q.community, q.local);
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
# two communities, one couple each
2 1 1
0 m 0 : 0.0 1.0
1 m 0 : 0.0 1.0   # trailing comment
0 w 0 : 1.0 0.0
1 w 0 : 1.0 0.0
";

    #[test]
    fn parses_small_market() {
        let m = parse_market(SMALL).unwrap();
        assert_eq!(m.kappa(), 2);
        assert_eq!(m.absolute_rank(AgentId::woman(0, 0), AgentId::man(1, 0)).unwrap(), 1);
        assert_eq!(parse_market(&write_market(&m)).unwrap(), m);
    }

    #[test]
    fn unbalanced_header() {
        let text = "1 2/1\n0 m 0 : 0.0\n0 m 1 : 0.0\n0 w 0 : 0.1 0.0\n";
        let m = parse_market(text).unwrap();
        assert_eq!(m.communities()[0].men_count(), 2);
        assert!(write_market(&m).starts_with("1 2/1\n"));
    }

    #[test]
    fn reports_errors_with_lines() {
        let missing = "2 1 1\n0 m 0 : 0.0 1.0\n";
        assert!(matches!(parse_market(missing), Err(Error::Parse { .. })));
        let dup = "1 1\n0 m 0 : 0.0\n0 m 0 : 0.0\n0 w 0 : 0.0\n";
        assert!(matches!(parse_market(dup), Err(Error::Parse { line: 3, .. })));
        let bad_partner = "1 1\n0 m 0 : 0.1\n0 w 0 : 0.0\n";
        assert!(matches!(parse_market(bad_partner), Err(Error::Parse { line: 2, .. })));
        let short = "1 2\n0 m 0 : 0.0\n0 m 1 : 0.0 0.1\n0 w 0 : 0.0 0.1\n0 w 1 : 0.0 0.1\n";
        assert!(parse_market(short).is_err());
        assert!(parse_market("3 1 1\n").is_err());
    }
}
