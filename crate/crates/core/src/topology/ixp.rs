use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{AsGraph, Asn};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IxpRecord {
    pub ixp: String,
    pub asn: Asn,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IxpReport {
    pub edges_added: usize,
    /// Member ASNs that are not in the graph, sorted and deduplicated.
    pub skipped_asns: Vec<Asn>,
}

/// Adds a peer edge between every pair of members of the same IXP that are not
/// already adjacent. Members missing from the graph are skipped and reported.
pub fn augment_with_ixps(graph: &AsGraph, records: &[IxpRecord]) -> (AsGraph, IxpReport) {
    let mut members: BTreeMap<&str, BTreeSet<Asn>> = BTreeMap::new();
    let mut skipped = BTreeSet::new();
    for r in records {
        if graph.id_of(r.asn).is_some() {
            members.entry(r.ixp.as_str()).or_default().insert(r.asn);
        } else {
            skipped.insert(r.asn);
        }
    }
    let mut b = graph.to_builder();
    let mut added = 0;
    for set in members.values() {
        let v: Vec<Asn> = set.iter().copied().collect();
        for (i, &x) in v.iter().enumerate() {
            for &y in &v[i + 1..] {
                if !b.has_edge(x, y) && b.add_peers(x, y) == Ok(true) {
                    added += 1;
                }
            }
        }
    }
    (b.build(), IxpReport { edges_added: added, skipped_asns: skipped.into_iter().collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{parse_relationships, Relationship};

    fn rec(ixp: &str, asn: Asn) -> IxpRecord {
        IxpRecord { ixp: ixp.into(), asn }
    }

    #[test]
    fn adds_missing_member_pairs() {
        // 1 provides 2; 3 and 4 unconnected to each other.
        let g = parse_relationships("1|2|-1\n1|3|-1\n1|4|-1\n".as_bytes()).unwrap();
        let recs = [rec("a", 2), rec("a", 3), rec("a", 1), rec("a", 3), rec("b", 3), rec("b", 4), rec("b", 99)];
        let (h, report) = augment_with_ixps(&g, &recs);
        // a: {1,2,3} -> 2-3 new; b: {3,4} -> 3-4 new.
        assert_eq!(report.edges_added, 2);
        assert_eq!(report.skipped_asns, vec![99]);
        assert_eq!(h.edge_count(), g.edge_count() + 2);
        let id = |a| h.id_of(a).unwrap();
        assert_eq!(h.relationship(id(2), id(3)), Some(Relationship::Peer));
        // Existing customer edge kept.
        assert_eq!(h.relationship(id(1), id(2)), Some(Relationship::Customer));
    }

    #[test]
    fn idempotent() {
        let g = parse_relationships("1|2|-1\n1|3|-1\n".as_bytes()).unwrap();
        let recs = [rec("x", 2), rec("x", 3)];
        let (h, _) = augment_with_ixps(&g, &recs);
        let (h2, r2) = augment_with_ixps(&h, &recs);
        assert_eq!(r2.edges_added, 0);
        assert_eq!(h, h2);
    }
}
