use std::io::{BufRead, Write};

use super::{AsGraph, Asn, GraphBuilder, IxpRecord, TopologyError};

/// Parses `a|b|rel` lines (`-1`: a is provider of b, `0`: peers). `#` lines are comments.
/// A trailing source column, as in serial-2 files, is ignored.
pub fn parse_relationships<R: BufRead>(reader: R) -> Result<AsGraph, TopologyError> {
    let mut b = GraphBuilder::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut fields = t.split('|');
        let (Some(a), Some(bb), Some(rel)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(malformed(lineno, "expected a|b|rel"));
        };
        let a = parse_asn(a, lineno)?;
        let bb = parse_asn(bb, lineno)?;
        if a == bb {
            return Err(malformed(lineno, "self-loop"));
        }
        let res = match rel.trim() {
            "-1" => b.add_provider_customer(a, bb),
            "0" => b.add_peers(a, bb),
            other => return Err(malformed(lineno, &format!("unknown relationship code {other:?}"))),
        };
        if res.is_err() {
            return Err(TopologyError::Conflict { line: lineno, a, b: bb });
        }
    }
    Ok(b.build())
}

/// Writes the graph back in the `a|b|rel` format, sorted by ASN.
pub fn write_relationships<W: Write>(graph: &AsGraph, mut w: W) -> std::io::Result<()> {
    let mut lines: Vec<(Asn, Asn, i8)> = graph
        .edges()
        .map(|e| (graph.asn(e.a), graph.asn(e.b), if e.peer { 0 } else { -1 }))
        .map(|(a, b, r)| if r == 0 && a > b { (b, a, r) } else { (a, b, r) })
        .collect();
    lines.sort_unstable();
    for (a, b, r) in lines {
        writeln!(w, "{a}|{b}|{r}")?;
    }
    Ok(())
}

/// Parses `ixp_id,asn` lines.
pub fn parse_ixp_records<R: BufRead>(reader: R) -> Result<Vec<IxpRecord>, TopologyError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let Some((ixp, asn)) = t.split_once(',') else {
            return Err(malformed(i + 1, "expected ixp_id,asn"));
        };
        out.push(IxpRecord { ixp: ixp.trim().to_string(), asn: parse_asn(asn, i + 1)? });
    }
    Ok(out)
}

/// Newline-delimited ASN list; blank and `#` lines are skipped.
pub fn parse_asn_list<R: BufRead>(reader: R) -> Result<Vec<Asn>, TopologyError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(parse_asn(t, i + 1)?);
    }
    Ok(out)
}

fn parse_asn(s: &str, line: usize) -> Result<Asn, TopologyError> {
    let s = s.trim();
    let digits = s.strip_prefix("AS").unwrap_or(s);
    digits.parse().map_err(|_| malformed(line, &format!("bad AS number {s:?}")))
}

fn malformed(line: usize, reason: &str) -> TopologyError {
    TopologyError::Malformed { line, reason: reason.to_string() }
}
