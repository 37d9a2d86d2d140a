//! CSV ingestion for edge lists and node tables.
//!
//! Node tables carry the columns `id,z,y` and optionally `x` (stratum,
//! default 0) and `e` (supplied propensity). External ids are mapped to dense
//! ids `0..n` in row order; edge lists refer to the external ids.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::observations::Observations;

/// Dense id ↔ external id table.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IdMap {
    external: Vec<String>,
    dense: HashMap<String, usize>,
}

impl IdMap {
    pub fn len(&self) -> usize {
        self.external.len()
    }

    pub fn is_empty(&self) -> bool {
        self.external.is_empty()
    }

    pub fn get(&self, external: &str) -> Option<usize> {
        self.dense.get(external).copied()
    }

    pub fn external(&self, dense: usize) -> &str {
        &self.external[dense]
    }

    /// True when every external id is already its dense index.
    pub fn is_identity(&self) -> bool {
        self.external.iter().enumerate().all(|(i, s)| s == &i.to_string())
    }

    fn push(&mut self, external: String) -> Option<usize> {
        if self.dense.contains_key(&external) {
            return None;
        }
        let id = self.external.len();
        self.dense.insert(external.clone(), id);
        self.external.push(external);
        Some(id)
    }

    /// Sidecar table `dense,external`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["dense", "external"]).map_err(csv_write)?;
        for (i, s) in self.external.iter().enumerate() {
            w.write_record([i.to_string().as_str(), s.as_str()]).map_err(csv_write)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_write(e: csv::Error) -> Error {
    Error::Input(e.to_string())
}

/// Parsed node table.
#[derive(Debug, Clone)]
pub struct NodeTable {
    pub ids: IdMap,
    pub observations: Observations,
    pub propensity: Option<Vec<f64>>,
}

fn parse_err(file: &str, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_string(),
        line,
        message: message.into(),
    }
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

pub fn read_node_table(path: &Path) -> Result<NodeTable> {
    let file = std::fs::File::open(path)?;
    parse_node_table(file, &path.display().to_string())
}

pub fn parse_node_table<R: Read>(input: R, name: &str) -> Result<NodeTable> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| parse_err(name, 1, e.to_string()))?
        .clone();
    let column = |label: &str| headers.iter().position(|h| h == label);
    let (Some(id_col), Some(z_col), Some(y_col)) = (column("id"), column("z"), column("y")) else {
        return Err(parse_err(name, 1, "header must contain id, z and y columns"));
    };
    let x_col = column("x");
    let e_col = column("e");

    let mut ids = IdMap::default();
    let (mut z, mut y, mut x, mut e) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record.map_err(|err| {
            let line = err.position().map_or(0, |p| p.line());
            parse_err(name, line, err.to_string())
        })?;
        let line = line_of(&record);
        let field = |col: usize, label: &str| {
            record
                .get(col)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| parse_err(name, line, format!("missing {label}")))
        };
        let id = field(id_col, "id")?;
        if ids.push(id.to_string()).is_none() {
            return Err(parse_err(name, line, format!("duplicate id {id}")));
        }
        let zi = match field(z_col, "z")? {
            "0" => 0,
            "1" => 1,
            other => return Err(parse_err(name, line, format!("z must be 0 or 1, got {other:?}"))),
        };
        let yi: f64 = field(y_col, "y")?
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| parse_err(name, line, "y must be a finite number"))?;
        let xi: u32 = match x_col.and_then(|c| record.get(c)).filter(|s| !s.is_empty()) {
            Some(s) => s
                .parse()
                .map_err(|_| parse_err(name, line, format!("x must be a nonnegative integer, got {s:?}")))?,
            None => 0,
        };
        if let Some(c) = e_col {
            let ei: f64 = field(c, "e")?
                .parse()
                .map_err(|_| parse_err(name, line, "e must be a number"))?;
            e.push(ei);
        }
        z.push(zi);
        y.push(yi);
        x.push(xi);
    }
    Ok(NodeTable {
        ids,
        observations: Observations::new(z, y, x)?,
        propensity: e_col.map(|_| e),
    })
}

pub fn read_edge_list(path: &Path, has_header: bool, ids: &IdMap) -> Result<Graph> {
    let file = std::fs::File::open(path)?;
    parse_edge_list(file, &path.display().to_string(), has_header, ids)
}

pub fn parse_edge_list<R: Read>(input: R, name: &str, has_header: bool, ids: &IdMap) -> Result<Graph> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let mut edges = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|err| {
            let line = err.position().map_or(0, |p| p.line());
            parse_err(name, line, err.to_string())
        })?;
        let line = line_of(&record);
        if record.len() != 2 {
            return Err(parse_err(name, line, format!("expected 2 fields, got {}", record.len())));
        }
        let lookup = |s: &str| {
            ids.get(s)
                .ok_or_else(|| parse_err(name, line, format!("unknown node id {s:?}")))
        };
        let (u, v) = (lookup(&record[0])?, lookup(&record[1])?);
        if u == v {
            return Err(parse_err(name, line, format!("self-loop at node {}", &record[0])));
        }
        edges.push((u, v));
    }
    Graph::from_edges(ids.len(), &edges)
}

/// Writes `u,v` lines with dense ids, no header.
pub fn write_edge_list<W: Write>(graph: &Graph, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for (u, v) in graph.edges() {
        w.write_record([u.to_string(), v.to_string()]).map_err(csv_write)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_table_with_defaults() {
        let t = parse_node_table("id,z,y\n0,0,1.5\n1,1,2\n2,0,-3\n".as_bytes(), "nodes.csv").unwrap();
        assert!(t.ids.is_identity());
        assert_eq!(t.observations.z(), &[0, 1, 0]);
        assert_eq!(t.observations.x(), &[0, 0, 0]);
        assert!(t.propensity.is_none());
    }

    #[test]
    fn string_ids_are_mapped() {
        let t = parse_node_table("id,z,y,x,e\na,0,1,2,0.5\nb,1,2,0,0.25\n".as_bytes(), "n").unwrap();
        assert!(!t.ids.is_identity());
        assert_eq!(t.ids.get("b"), Some(1));
        assert_eq!(t.propensity, Some(vec![0.5, 0.25]));
        let g = parse_edge_list("a,b\n".as_bytes(), "e", false, &t.ids).unwrap();
        assert_eq!(g.neighbors(0), &[1]);
        let mut sidecar = Vec::new();
        t.ids.write_csv(&mut sidecar).unwrap();
        assert_eq!(String::from_utf8(sidecar).unwrap(), "dense,external\n0,a\n1,b\n");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_node_table("id,z,y\n0,0,1\n1,2,3\n".as_bytes(), "nodes.csv").unwrap_err();
        assert_eq!(err.to_string(), "nodes.csv:3: z must be 0 or 1, got \"2\"");
        let err = parse_node_table("id,z,y\n0,0,abc\n".as_bytes(), "nodes.csv").unwrap_err();
        assert!(err.to_string().starts_with("nodes.csv:2:"), "{err}");

        let ids = parse_node_table("id,z,y\n0,0,1\n1,0,1\n".as_bytes(), "n").unwrap().ids;
        let err = parse_edge_list("u,v\n0,1\n1,1\n".as_bytes(), "edges.csv", true, &ids).unwrap_err();
        assert_eq!(err.to_string(), "edges.csv:3: self-loop at node 1");
        let err = parse_edge_list("0,7\n".as_bytes(), "edges.csv", false, &ids).unwrap_err();
        assert_eq!(err.to_string(), "edges.csv:1: unknown node id \"7\"");
        let err = parse_edge_list("0,1,2\n".as_bytes(), "edges.csv", false, &ids).unwrap_err();
        assert!(err.to_string().contains("expected 2 fields"));
    }
}
