//! Text formats: a sorted `i j` edge list and Graphviz DOT.
//!
//! The edge list carries a `# nodes N` header so isolated nodes survive a
//! round trip; without it the node count is inferred from the largest index.

use std::fmt::Write as _;

use super::{Graph, NodeId};
use crate::{Error, Result};

impl Graph {
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# nodes {}\n", self.node_count());
        for (a, b) in self.edges() {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Graph> {
        let mut declared = None;
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(count) = comment.trim().strip_prefix("nodes") {
                    declared = Some(count.trim().parse::<usize>().map_err(|_| {
                        Error::Parse(format!("line {}: bad node count {:?}", lineno + 1, count.trim()))
                    })?);
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [a, b] = fields.as_slice() else {
                return Err(Error::Parse(format!(
                    "line {}: expected two node indices, got {line:?}",
                    lineno + 1
                )));
            };
            let parse = |s: &str| {
                s.parse::<NodeId>()
                    .map_err(|_| Error::Parse(format!("line {}: bad node index {s:?}", lineno + 1)))
            };
            edges.push((parse(a)?, parse(b)?));
        }
        let inferred = edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
        let n = declared.unwrap_or(inferred);
        Graph::from_edges(n, edges)
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph communication {\n");
        for v in 0..self.node_count() {
            let _ = writeln!(out, "  {v};");
        }
        for (a, b) in self.edges() {
            let _ = writeln!(out, "  {a} -- {b};");
        }
        out.push_str("}\n");
        out
    }

    /// Reads the DOT subset written by [`Graph::to_dot`]: numeric node
    /// statements and `a -- b` edge statements.
    pub fn from_dot(text: &str) -> Result<Graph> {
        let body = text
            .split_once('{')
            .and_then(|(_, rest)| rest.rsplit_once('}'))
            .map(|(body, _)| body)
            .ok_or_else(|| Error::Parse("DOT input has no graph body".into()))?;
        let mut max_node = None::<NodeId>;
        let mut edges = Vec::new();
        let parse = |s: &str| {
            s.trim()
                .parse::<NodeId>()
                .map_err(|_| Error::Parse(format!("bad DOT node id {:?}", s.trim())))
        };
        for stmt in body.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            if let Some((a, b)) = stmt.split_once("--") {
                let (a, b) = (parse(a)?, parse(b)?);
                max_node = max_node.max(Some(a.max(b)));
                edges.push((a, b));
            } else {
                max_node = max_node.max(Some(parse(stmt)?));
            }
        }
        let n = max_node.map_or(0, |m| m + 1);
        Graph::from_edges(n, edges)
    }
}
