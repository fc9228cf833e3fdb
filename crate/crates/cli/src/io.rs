//! File formats: marked graphs as JSON, subgroups as TOML.

use std::collections::{BTreeMap, HashMap};

use outspace::flaring::SubgroupSpec;
use outspace::graph::{Edge, HalfEdge, MetricGraph};
use outspace::marked::MarkedGraph;
use outspace::rational::q_string;
use outspace::word::letter_char;
use outspace::{Automorphism, Basis, Error, Letter, Result, Word, Q};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub rank: usize,
    pub vertices: Vec<String>,
    /// Vertex carrying the marking loops; the first vertex when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<String>,
    pub edges: Vec<EdgeEntry>,
    /// Generator name to a loop of edge names, `-e` for a reversed edge.
    pub marking: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comarking: Option<BTreeMap<String, Word>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub id: String,
    pub from: String,
    pub to: String,
    #[serde(with = "q_string")]
    pub len: Q,
}

fn lookup(names: &HashMap<&str, usize>, name: &str, what: &str) -> Result<usize> {
    names.get(name).copied().ok_or_else(|| Error::Parse(format!("unknown {what} {name:?}")))
}

impl GraphFile {
    pub fn to_marked(&self) -> Result<MarkedGraph> {
        let basis = Basis::new(self.rank)?;
        let vnames: HashMap<&str, usize> = self.vertices.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
        let enames: HashMap<&str, usize> = self.edges.iter().enumerate().map(|(i, e)| (e.id.as_str(), i)).collect();
        if vnames.len() != self.vertices.len() || enames.len() != self.edges.len() {
            return Err(Error::Parse("duplicate vertex or edge name".into()));
        }
        let edges = self
            .edges
            .iter()
            .map(|e| {
                Ok(Edge {
                    from: lookup(&vnames, &e.from, "vertex")?,
                    to: lookup(&vnames, &e.to, "vertex")?,
                    len: e.len.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let graph = MetricGraph::new(self.vertices.len(), edges);
        graph.check_core()?;
        let base = match &self.base {
            Some(b) => lookup(&vnames, b, "vertex")?,
            None => 0,
        };
        let mut marking = Vec::with_capacity(self.rank);
        for i in 0..self.rank {
            let name = letter_char(i as Letter + 1).to_string();
            let path = self
                .marking
                .get(&name)
                .ok_or_else(|| Error::Parse(format!("marking has no loop for {name}")))?;
            let hs = path
                .iter()
                .map(|s| match s.strip_prefix('-') {
                    Some(rest) => Ok(HalfEdge::new(lookup(&enames, rest, "edge")?, false)),
                    None => Ok(HalfEdge::new(lookup(&enames, s, "edge")?, true)),
                })
                .collect::<Result<Vec<_>>>()?;
            marking.push(hs);
        }
        if self.marking.len() != self.rank {
            return Err(Error::Parse("marking names a generator outside the basis".into()));
        }
        let g = match &self.comarking {
            None => MarkedGraph::from_marking(basis, graph, base, marking)?,
            Some(map) => {
                let words = self
                    .edges
                    .iter()
                    .map(|e| {
                        let w = map.get(&e.id).ok_or_else(|| Error::Parse(format!("comarking has no word for {}", e.id)))?;
                        basis.check(w.letters())?;
                        Ok(w.clone())
                    })
                    .collect::<Result<Vec<_>>>()?;
                MarkedGraph::new(basis, graph, base, marking, words)?
            }
        };
        Ok(g.with_names(self.vertices.clone(), self.edges.iter().map(|e| e.id.clone()).collect()))
    }

    pub fn from_marked(g: &MarkedGraph) -> Self {
        let vn = g.vertex_names();
        let en = g.edge_names();
        let edges = g
            .graph()
            .edges()
            .iter()
            .enumerate()
            .map(|(i, e)| EdgeEntry { id: en[i].clone(), from: vn[e.from].clone(), to: vn[e.to].clone(), len: e.len.clone() })
            .collect();
        let half = |h: &HalfEdge| {
            if h.forward() {
                en[h.edge()].clone()
            } else {
                format!("-{}", en[h.edge()])
            }
        };
        let marking = (0..g.rank())
            .map(|i| (letter_char(i as Letter + 1).to_string(), g.marking(i).iter().map(half).collect()))
            .collect();
        let comarking = (0..g.graph().edge_count()).map(|e| (en[e].clone(), g.comarking(e).clone())).collect();
        GraphFile {
            rank: g.rank(),
            vertices: vn.to_vec(),
            base: Some(vn[g.base()].clone()),
            edges,
            marking,
            comarking: Some(comarking),
        }
    }
}

pub fn parse_graph(text: &str) -> Result<MarkedGraph> {
    let file: GraphFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.to_marked()
}

pub fn graph_json(g: &MarkedGraph) -> serde_json::Value {
    serde_json::to_value(GraphFile::from_marked(g)).expect("graph files serialize")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupFile {
    pub rank: usize,
    #[serde(rename = "generator")]
    pub generators: Vec<GeneratorEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorEntry {
    pub name: String,
    pub images: Vec<String>,
}

impl GroupFile {
    pub fn to_spec(&self) -> Result<SubgroupSpec> {
        let basis = Basis::new(self.rank)?;
        let gens = self
            .generators
            .iter()
            .map(|g| {
                if g.images.len() != self.rank {
                    return Err(Error::RankMismatch(self.rank, g.images.len()));
                }
                let texts: Vec<&str> = g.images.iter().map(String::as_str).collect();
                Ok((g.name.clone(), Automorphism::from_texts(basis, &texts)?))
            })
            .collect::<Result<Vec<_>>>()?;
        SubgroupSpec::new(basis, gens)
    }
}

pub fn parse_group(text: &str) -> Result<SubgroupSpec> {
    let file: GroupFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.to_spec()
}

/// `"ab,b"`: images of the basis in order.
pub fn parse_automorphism(text: &str) -> Result<Automorphism> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let basis = Basis::new(parts.len())?;
    Automorphism::from_texts(basis, &parts)
}

pub fn automorphism_text(phi: &Automorphism) -> String {
    phi.images().iter().map(Word::to_text).collect::<Vec<_>>().join(",")
}
