//! Shared fixtures for the criterion benches.

use treewind::dconfig::CellCensus;
use treewind::exclusion::{build_exclusion, ExclusionChain};
use treewind::statistics::WindingBasis;
use treewind::tree::PlanarTree;

pub struct Fixture {
    pub tree: PlanarTree,
    pub census: CellCensus,
    pub ex: ExclusionChain,
    pub ws: WindingBasis,
}

pub fn star_fixture(l: usize) -> Fixture {
    let tree = PlanarTree::star(l);
    let census = CellCensus::build(&tree, 2).expect("stars satisfy the n=2 condition");
    let ex = build_exclusion(&tree, 2).expect("valid chain");
    let ws = WindingBasis::from_census(&census, &ex);
    Fixture { tree, census, ex, ws }
}

pub fn g2_fixture() -> Fixture {
    let tree = PlanarTree::experiment_g2();
    let census = CellCensus::build(&tree, 2).expect("n=2 condition");
    let ex = build_exclusion(&tree, 2).expect("valid chain");
    let ws = WindingBasis::from_census(&census, &ex);
    Fixture { tree, census, ex, ws }
}
