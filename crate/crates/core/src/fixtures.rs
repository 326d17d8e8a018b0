//! Small hand-built graphs used by tests and documentation.

use crate::kg::{KnowledgeGraph, Split};

/// Train facts of the toy scientist graph.
pub const TOY_FACTS: [(&str, &str, &str); 8] = [
    ("a1", "profession", "scientist"),
    ("a2", "profession", "scientist"),
    ("a1", "born_in", "us"),
    ("a1", "place_of_death", "us"),
    ("a2", "born_in", "hu"),
    ("a2", "affiliated", "inst"),
    ("inst", "located_in", "us"),
    ("a2", "place_of_death", "us"),
];

/// Two scientists: `a1` was born and died in `us`; `a2` was born in `hu`,
/// is affiliated with `inst` (located in `us`) and died in `us`.
pub fn toy_graph() -> KnowledgeGraph {
    let mut kg = KnowledgeGraph::new();
    for (h, r, t) in TOY_FACTS {
        kg.add_labeled(Split::Train, h, r, t).expect("valid toy fact");
    }
    kg
}

/// The toy graph with `(a2, place_of_death, us)` moved to the test split.
pub fn toy_graph_held_out() -> KnowledgeGraph {
    let mut kg = KnowledgeGraph::new();
    for (h, r, t) in TOY_FACTS {
        let split = if (h, r) == ("a2", "place_of_death") {
            Split::Test
        } else {
            Split::Train
        };
        kg.add_labeled(split, h, r, t).expect("valid toy fact");
    }
    kg
}
