use crate::topology::{AsGraph, AsId, Asn, GraphBuilder};

use super::Tiebreak;

/// Max-k-Security instance built from a set-cover instance.
///
/// Every element AS is a provider of the attacker and of each set AS that
/// contains it; every set AS is a provider of the destination. Element ASes
/// break ties toward the attacker, so an element is happy only when it and at
/// least one of its sets are secure.
#[derive(Clone, Debug)]
pub struct SetCoverGadget {
    pub graph: AsGraph,
    pub destination: AsId,
    pub attacker: AsId,
    pub elements: Vec<AsId>,
    pub sets: Vec<AsId>,
    pub tiebreak: Tiebreak,
}

const DEST: Asn = 1;
const ATTACKER: Asn = 2;
const ELEMENT_BASE: Asn = 100;
const SET_BASE: Asn = 200;

/// `sets[j]` lists the element indices (below `elements`) of subset `j`.
pub fn set_cover_gadget(elements: usize, sets: &[Vec<usize>]) -> SetCoverGadget {
    let mut b = GraphBuilder::new();
    b.add_node(DEST).add_node(ATTACKER);
    for i in 0..elements {
        let e = ELEMENT_BASE + i as Asn;
        b.add_provider_customer(e, ATTACKER).expect("fresh edge");
    }
    for (j, members) in sets.iter().enumerate() {
        let s = SET_BASE + j as Asn;
        b.add_provider_customer(s, DEST).expect("fresh edge");
        for &i in members {
            assert!(i < elements, "set {j} names element {i} of {elements}");
            let _ = b.add_provider_customer(ELEMENT_BASE + i as Asn, s);
        }
    }
    let graph = b.build();
    let id = |a: Asn| graph.id_of(a).expect("gadget AS");
    let attacker = id(ATTACKER);
    let elements: Vec<AsId> = (0..elements).map(|i| id(ELEMENT_BASE + i as Asn)).collect();
    let sets: Vec<AsId> = (0..sets.len()).map(|j| id(SET_BASE + j as Asn)).collect();
    let tiebreak = Tiebreak::with_favorites(elements.iter().map(|&e| (e, attacker)), graph.len());
    SetCoverGadget { destination: id(DEST), attacker, elements, sets, tiebreak, graph }
}
