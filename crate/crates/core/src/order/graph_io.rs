use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{ActionCatalog, CoverGraph, OrderError, Poset};

/// `{"nodes": [...], "edges": [["u", "v"], ...]}` with edges read as cover edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub nodes: Vec<String>,
    pub edges: Vec<[String; 2]>,
}

impl GraphDocument {
    pub fn from_cover(catalog: &ActionCatalog, cover: &CoverGraph) -> Self {
        GraphDocument {
            nodes: catalog.names().to_vec(),
            edges: cover
                .edges()
                .iter()
                .map(|&(i, j)| [catalog.name(i).to_string(), catalog.name(j).to_string()])
                .collect(),
        }
    }

    /// Resolves names and closes the edge set, rejecting cycles.
    pub fn to_poset(&self) -> Result<(ActionCatalog, Poset), OrderError> {
        let catalog = ActionCatalog::new(self.nodes.iter().cloned())?;
        let edges = self
            .edges
            .iter()
            .map(|[u, v]| Ok((catalog.resolve(u)?, catalog.resolve(v)?)))
            .collect::<Result<Vec<_>, OrderError>>()?;
        let poset = Poset::transitive_closure(catalog.len(), edges)?;
        Ok((catalog, poset))
    }
}

pub fn load_graph(json: &str) -> Result<(ActionCatalog, Poset), OrderError> {
    serde_json::from_str::<GraphDocument>(json)?.to_poset()
}

/// Graphviz rendering: one node per action, one arrow per cover edge.
pub fn to_dot(catalog: &ActionCatalog, cover: &CoverGraph) -> String {
    fn quote(s: &str) -> String {
        format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
    }
    let mut out = String::from("digraph poset {\n");
    for name in catalog.names() {
        let _ = writeln!(out, "  {};", quote(name));
    }
    for &(i, j) in cover.edges() {
        let _ = writeln!(
            out,
            "  {} -> {};",
            quote(catalog.name(i)),
            quote(catalog.name(j))
        );
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_and_closes() {
        let json = r#"{"nodes": ["a", "b", "c"], "edges": [["a", "b"], ["b", "c"]]}"#;
        let (catalog, poset) = load_graph(json).unwrap();
        assert_eq!(catalog.len(), 3);
        assert!(poset.precedes(0, 2));
    }

    #[test]
    fn rejects_cycles_and_unknown_nodes() {
        let cyclic = r#"{"nodes": ["a", "b"], "edges": [["a", "b"], ["b", "a"]]}"#;
        assert!(matches!(load_graph(cyclic), Err(OrderError::CycleDetected(0, 1))));
        let unknown = r#"{"nodes": ["a"], "edges": [["a", "z"]]}"#;
        assert!(matches!(load_graph(unknown), Err(OrderError::UnknownAction(_))));
        assert!(matches!(load_graph("{"), Err(OrderError::Json(_))));
    }

    #[test]
    fn document_round_trip_keeps_cover() {
        let catalog = ActionCatalog::new(["x", "y", "z"]).unwrap();
        let cover = CoverGraph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let doc = GraphDocument::from_cover(&catalog, &cover);
        assert_eq!(doc.edges.len(), 2);
        let (_, poset) = doc.to_poset().unwrap();
        assert_eq!(poset.transitive_reduction(), cover);
    }

    #[test]
    fn dot_has_one_arrow_per_cover_edge() {
        let catalog = ActionCatalog::new(["a", "say \"hi\""]).unwrap();
        let cover = CoverGraph::from_edges(2, [(0, 1)]).unwrap();
        let dot = to_dot(&catalog, &cover);
        assert_eq!(dot.matches("->").count(), 1);
        assert!(dot.contains(r#""say \"hi\"""#));
    }
}
