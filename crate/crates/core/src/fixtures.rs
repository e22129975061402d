//! Small hand-built topologies with known behavior, shipped as relationship
//! files under `fixtures/`.

use crate::oracle::{set_cover_gadget, SetCoverGadget};
use crate::routing::{Deployment, Policy, PolicyModel, Scenario};
use crate::topology::{parse_relationships, AsGraph, AsId, Asn};

pub const DOWNGRADE: &str = include_str!("../fixtures/downgrade.txt");
pub const COLLATERAL_FIRST: &str = include_str!("../fixtures/collateral_first.txt");
pub const COLLATERAL_SECOND: &str = include_str!("../fixtures/collateral_second.txt");
pub const WEDGIE: &str = include_str!("../fixtures/wedgie.txt");
pub const SET_COVER: &str = include_str!("../fixtures/set_cover.txt");

/// Private ASN used as the attacker in every fixture.
pub const ATTACKER: Asn = 64512;

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub graph: AsGraph,
    pub destination: AsId,
    pub attacker: Option<AsId>,
    pub deployment: Deployment,
    pub model: PolicyModel,
}

impl Fixture {
    fn new(name: &'static str, text: &str, destination: Asn, attacker: Option<Asn>, secure: &[Asn], model: PolicyModel) -> Self {
        let graph = parse_relationships(text.as_bytes()).expect("fixture parses");
        let id = |a: Asn| graph.id_of(a).unwrap_or_else(|| panic!("AS{a} missing from fixture {name}"));
        let deployment = Deployment::from_secure(graph.len(), secure.iter().map(|&a| id(a)));
        Fixture {
            name,
            destination: id(destination),
            attacker: attacker.map(id),
            deployment,
            model,
            graph,
        }
    }

    pub fn id(&self, asn: Asn) -> AsId {
        self.graph.id_of(asn).unwrap_or_else(|| panic!("AS{asn} missing from fixture {}", self.name))
    }

    pub fn scenario(&self) -> Scenario<'_> {
        Scenario { destination: self.destination, attacker: self.attacker, deployment: &self.deployment }
    }

    pub fn policy(&self) -> Policy {
        self.model.into()
    }
}

/// 21740 holds a secure provider route normally and drops it for a longer
/// peer route once 64512 attacks.
pub fn downgrade() -> Fixture {
    Fixture::new("downgrade", DOWNGRADE, 3356, Some(ATTACKER), &[3356, 21740], PolicyModel::SecuritySecond)
}

/// 4805 is happy with nothing deployed and unhappy at the fixture's deployment.
pub fn collateral_first() -> Fixture {
    Fixture::new("collateral-first", COLLATERAL_FIRST, 64500, Some(ATTACKER), &[64500, 7473, 7474], PolicyModel::SecurityFirst)
}

/// 5166 and 34223 gain, 52142 loses.
pub fn collateral_second() -> Fixture {
    Fixture::new(
        "collateral-second",
        COLLATERAL_SECOND,
        40426,
        Some(ATTACKER),
        &[40426, 64502, 64501, 3491, 174, 5617, 64507, 3267],
        PolicyModel::SecuritySecond,
    )
}

/// Mixed-policy fixture with two stable states; `link` moves it from one to the other.
#[derive(Clone, Debug)]
pub struct WedgieFixture {
    pub fixture: Fixture,
    pub policies: Vec<Policy>,
    pub link: (AsId, AsId),
}

pub fn wedgie() -> WedgieFixture {
    let secure = [3, 31027, 31283, 29518];
    let fixture = Fixture::new("wedgie", WEDGIE, 3, None, &secure, PolicyModel::SecuritySecond);
    let first = fixture.id(31283);
    let policies = fixture
        .graph
        .ids()
        .map(|v| Policy::new(if v == first { PolicyModel::SecurityFirst } else { PolicyModel::SecuritySecond }))
        .collect();
    let link = (fixture.id(31027), fixture.id(3));
    WedgieFixture { fixture, policies, link }
}

/// The set-cover instance stored in `fixtures/set_cover.txt`.
pub fn set_cover_example() -> (usize, Vec<Vec<usize>>, SetCoverGadget) {
    let sets = vec![vec![0, 1], vec![1, 2], vec![2]];
    let g = set_cover_gadget(3, &sets);
    (3, sets, g)
}
