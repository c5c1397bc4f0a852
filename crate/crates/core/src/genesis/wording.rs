//! Clause-template wording: one clause per line in a fixed section order.
//!
//! ```text
//! TREATY TR-0007
//! CLASS: Property Catastrophe
//! LAYER 1: USD 100,000,000 excess of USD 50,000,000; 1 reinstatement at 100% pro rata
//! PERILS: Windstorm, Flood
//! EXCLUSIONS:
//!   - Loss caused by storm surge is excluded; flood from rainfall or river overflow remains covered.
//! HOURS CLAUSE: 72 consecutive hours
//! TERRITORY: Z03, Z04
//! END
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::money::Money;
use crate::treaty::{
    ExclusionClause, ExclusionKind, Layer, LineOfBusiness, Peril, TreatyId, TreatyTerms, ZoneId,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line} ({clause}): {message}")]
pub struct ParseError {
    /// 1-based; one past the last line when the text ends early.
    pub line: usize,
    pub clause: &'static str,
    pub message: String,
}

/// Explicit and elided renderings per exclusion kind. The elided variant leaves
/// the surge/flood boundary implicit; only the exact parser's lookup resolves it.
pub fn exclusion_template(kind: ExclusionKind, ambiguous: bool) -> &'static str {
    use ExclusionKind::*;
    match (kind, ambiguous) {
        (StormSurge, false) => {
            "Loss caused by storm surge is excluded; flood from rainfall or river overflow remains covered."
        }
        (StormSurge, true) => "Excluding inundation by water following a named windstorm.",
        (Flood, false) => {
            "Loss caused by flood from rainfall or river overflow is excluded; storm surge remains covered under windstorm."
        }
        (Flood, true) => "Excluding inundation by water, other than as provided under windstorm.",
        (Wildfire, false) => "Loss caused by wildfire, bushfire or forest fire is excluded.",
        (Wildfire, true) => "Excluding fire originating in vegetation.",
        (Terror, false) => "Loss caused by any act of terrorism is excluded.",
        (Terror, true) => "Excluding hostile acts by any person or group.",
        (Nuclear, false) => {
            "Loss caused by nuclear reaction, radiation or radioactive contamination is excluded."
        }
        (Nuclear, true) => "Excluding atomic perils.",
        (CyberSilent, false) => {
            "Loss arising from the use of any computer system as a means of inflicting harm is excluded."
        }
        (CyberSilent, true) => "Excluding electronic means.",
    }
}

fn lob_label(lob: LineOfBusiness) -> &'static str {
    match lob {
        LineOfBusiness::PropertyCat => "Property Catastrophe",
        LineOfBusiness::PropertyPerRisk => "Property Per Risk",
        LineOfBusiness::Casualty => "Casualty",
    }
}

fn reinstatement_text(layer: &Layer) -> String {
    let pct = (layer.reinstatement_premium_pct * 100.0).round() as i64;
    match layer.reinstatements {
        0 => "no reinstatements".to_string(),
        1 => format!("1 reinstatement at {pct}% pro rata"),
        n => format!("{n} reinstatements at {pct}% pro rata"),
    }
}

pub fn render_wording(t: &TreatyTerms) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "TREATY {}", t.id);
    let _ = writeln!(out, "CLASS: {}", lob_label(t.line_of_business));
    for (i, layer) in t.layers.iter().enumerate() {
        let _ = writeln!(
            out,
            "LAYER {}: {} excess of {}; {}",
            i + 1,
            layer.limit,
            layer.attachment,
            reinstatement_text(layer)
        );
    }
    let perils: Vec<&str> = t.perils.iter().map(|p| p.name()).collect();
    let _ = writeln!(out, "PERILS: {}", perils.join(", "));
    if !t.exclusions.is_empty() {
        out.push_str("EXCLUSIONS:\n");
        for e in &t.exclusions {
            let _ = writeln!(
                out,
                "  - {}",
                exclusion_template(e.kind, e.ambiguous_rendering)
            );
        }
    }
    if let Some(h) = t.hours_clause {
        let _ = writeln!(out, "HOURS CLAUSE: {h} consecutive hours");
    }
    let zones: Vec<String> = t.zones.iter().map(|z| z.to_string()).collect();
    let _ = writeln!(out, "TERRITORY: {}", zones.join(", "));
    out.push_str("END\n");
    out
}

struct Cursor<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a str> {
        self.lines.get(self.pos).copied()
    }

    fn err(&self, clause: &'static str, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.pos + 1,
            clause,
            message: message.into(),
        }
    }

    fn expect(&mut self, clause: &'static str, prefix: &str) -> Result<&'a str, ParseError> {
        match self.peek() {
            None => Err(self.err(clause, "unexpected end of wording")),
            Some(l) => match l.strip_prefix(prefix) {
                Some(rest) => {
                    self.pos += 1;
                    Ok(rest)
                }
                None => Err(self.err(clause, format!("expected `{}`", prefix.trim_end()))),
            },
        }
    }
}

fn parse_amount(s: &str) -> Option<Money> {
    let digits = s.strip_prefix("USD ")?;
    let (whole, frac) = match digits.split_once('.') {
        Some((w, f)) if f.len() == 2 && f.bytes().all(|b| b.is_ascii_digit()) => {
            (w, f.parse::<i64>().ok()?)
        }
        Some(_) => return None,
        None => (digits, 0),
    };
    // Thousands groups must be well formed: 1-3 leading digits then groups of 3.
    let groups: Vec<&str> = whole.split(',').collect();
    if groups.is_empty()
        || groups[0].is_empty()
        || groups[0].len() > 3
        || groups[1..].iter().any(|g| g.len() != 3)
        || !groups.iter().all(|g| g.bytes().all(|b| b.is_ascii_digit()))
        || (groups.len() > 1 && groups[0].starts_with('0'))
    {
        return None;
    }
    let major: i64 = groups.concat().parse().ok()?;
    Some(Money::from_major(major) + Money(frac))
}

fn parse_layer(rest: &str, index: usize, cur: &Cursor) -> Result<Layer, ParseError> {
    const C: &str = "layer";
    let (num, body) = rest
        .split_once(": ")
        .ok_or_else(|| cur.err(C, "missing `:` after layer number"))?;
    if num.parse::<usize>().ok() != Some(index) {
        return Err(cur.err(C, format!("expected layer number {index}")));
    }
    let (amounts, reinst) = body
        .split_once("; ")
        .ok_or_else(|| cur.err(C, "missing reinstatement provision"))?;
    let (limit, attachment) = amounts
        .split_once(" excess of ")
        .ok_or_else(|| cur.err(C, "expected `<limit> excess of <attachment>`"))?;
    let limit = parse_amount(limit).ok_or_else(|| cur.err(C, "malformed limit amount"))?;
    let attachment =
        parse_amount(attachment).ok_or_else(|| cur.err(C, "malformed attachment amount"))?;
    let (reinstatements, pct) = if reinst == "no reinstatements" {
        (0u8, 1.0)
    } else {
        let (count, tail) = reinst
            .split_once(' ')
            .ok_or_else(|| cur.err(C, "malformed reinstatement clause"))?;
        let n: u8 = count
            .parse()
            .map_err(|_| cur.err(C, "malformed reinstatement count"))?;
        let expected_word = if n == 1 {
            "reinstatement at "
        } else {
            "reinstatements at "
        };
        let pct_text = tail
            .strip_prefix(expected_word)
            .and_then(|t| t.strip_suffix("% pro rata"))
            .ok_or_else(|| cur.err(C, "malformed reinstatement clause"))?;
        let pct: u32 = pct_text
            .parse()
            .map_err(|_| cur.err(C, "reinstatement premium is not a whole percent"))?;
        if n == 0 {
            return Err(cur.err(C, "zero reinstatements must read `no reinstatements`"));
        }
        (n, f64::from(pct) / 100.0)
    };
    Ok(Layer {
        attachment,
        limit,
        reinstatements,
        reinstatement_premium_pct: pct,
    })
}

fn parse_peril(s: &str) -> Option<Peril> {
    Peril::ALL.into_iter().find(|p| p.name() == s)
}

fn parse_exclusion(s: &str) -> Option<ExclusionClause> {
    for kind in ExclusionKind::ALL {
        for ambiguous in [false, true] {
            if exclusion_template(kind, ambiguous) == s {
                return Some(ExclusionClause {
                    kind,
                    ambiguous_rendering: ambiguous,
                });
            }
        }
    }
    None
}

fn parse_zone(s: &str) -> Option<ZoneId> {
    let digits = s.strip_prefix('Z')?;
    if digits.len() < 2 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let n: u16 = digits.parse().ok()?;
    (ZoneId(n).to_string() == s).then_some(ZoneId(n))
}

/// Ground-truth parser. Total on rendered output; rejects anything else.
pub fn parse_wording_exact(text: &str) -> Result<TreatyTerms, ParseError> {
    let mut cur = Cursor {
        lines: text.lines().collect(),
        pos: 0,
    };

    let id = cur.expect("header", "TREATY ")?;
    if id.is_empty() || id.contains(char::is_whitespace) {
        cur.pos -= 1;
        return Err(cur.err("header", "treaty identifier must be a single token"));
    }
    let id = TreatyId(id.to_string());

    let class = cur.expect("class", "CLASS: ")?;
    let line_of_business = LineOfBusiness::ALL
        .into_iter()
        .find(|l| lob_label(*l) == class)
        .ok_or_else(|| {
            cur.pos -= 1;
            cur.err("class", format!("unknown class `{class}`"))
        })?;

    let mut layers = Vec::new();
    while let Some(line) = cur.peek() {
        let Some(rest) = line.strip_prefix("LAYER ") else {
            break;
        };
        let layer = parse_layer(rest, layers.len() + 1, &cur)?;
        layers.push(layer);
        cur.pos += 1;
    }
    if layers.is_empty() {
        return Err(cur.err("layer", "expected at least one `LAYER` clause"));
    }

    let perils_text = cur.expect("perils", "PERILS: ")?;
    let mut perils = BTreeSet::new();
    let mut last: Option<Peril> = None;
    for name in perils_text.split(", ") {
        let p = parse_peril(name);
        match p {
            Some(p) if last.is_none_or(|l| l < p) => {
                perils.insert(p);
                last = Some(p);
            }
            _ => {
                cur.pos -= 1;
                return Err(cur.err("perils", format!("unknown or out-of-order peril `{name}`")));
            }
        }
    }

    let mut exclusions: Vec<ExclusionClause> = Vec::new();
    if cur.peek() == Some("EXCLUSIONS:") {
        cur.pos += 1;
        while let Some(line) = cur.peek() {
            let Some(body) = line.strip_prefix("  - ") else {
                break;
            };
            let clause = parse_exclusion(body)
                .ok_or_else(|| cur.err("exclusions", "unrecognised exclusion wording"))?;
            if exclusions
                .last()
                .is_some_and(|prev| prev.kind >= clause.kind)
            {
                return Err(cur.err("exclusions", "duplicate or out-of-order exclusion"));
            }
            exclusions.push(clause);
            cur.pos += 1;
        }
        if exclusions.is_empty() {
            return Err(cur.err("exclusions", "empty exclusion section"));
        }
    }

    let mut hours_clause = None;
    if let Some(line) = cur.peek() {
        if let Some(rest) = line.strip_prefix("HOURS CLAUSE: ") {
            let h = rest
                .strip_suffix(" consecutive hours")
                .and_then(|n| n.parse::<u32>().ok())
                .filter(|h| *h > 0 && !rest.starts_with('0'))
                .ok_or_else(|| cur.err("hours clause", "expected `<n> consecutive hours`"))?;
            hours_clause = Some(h);
            cur.pos += 1;
        }
    }

    let territory = cur.expect("territory", "TERRITORY: ")?;
    let mut zones = BTreeSet::new();
    for z in territory.split(", ") {
        match parse_zone(z) {
            Some(id) if zones.last().is_none_or(|l| *l < id) => {
                zones.insert(id);
            }
            _ => {
                cur.pos -= 1;
                return Err(cur.err("territory", format!("malformed or out-of-order zone `{z}`")));
            }
        }
    }

    cur.expect("end", "END")?;
    if cur.lines[cur.pos - 1] != "END" {
        cur.pos -= 1;
        return Err(cur.err("end", "trailing text after END"));
    }
    if cur.pos != cur.lines.len() || !text.ends_with("END\n") {
        return Err(cur.err("end", "content after END"));
    }

    let terms = TreatyTerms {
        id,
        line_of_business,
        layers,
        perils,
        exclusions,
        hours_clause,
        zones,
    };
    terms.validate().map_err(|e| ParseError {
        line: 0,
        clause: "structure",
        message: e.to_string(),
    })?;
    Ok(terms)
}
