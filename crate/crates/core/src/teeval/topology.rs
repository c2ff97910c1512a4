use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Directed link with capacity in traffic units per measurement interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub src: usize,
    pub dst: usize,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    node_count: usize,
    links: Vec<Link>,
}

impl Topology {
    pub fn new(node_count: usize, links: Vec<Link>) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidArgument("topology needs at least one node".into()));
        }
        let mut seen = HashSet::new();
        for l in &links {
            if l.src >= node_count || l.dst >= node_count {
                return Err(Error::InvalidArgument(format!(
                    "link {}->{} outside {node_count} nodes",
                    l.src, l.dst
                )));
            }
            if l.src == l.dst {
                return Err(Error::InvalidArgument(format!("self-loop at node {}", l.src)));
            }
            if !(l.capacity > 0.0 && l.capacity.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "link {}->{} has capacity {}",
                    l.src, l.dst, l.capacity
                )));
            }
            if !seen.insert((l.src, l.dst)) {
                return Err(Error::InvalidArgument(format!("duplicate link {}->{}", l.src, l.dst)));
            }
        }
        Ok(Topology { node_count, links })
    }

    /// Adds both directions of every `(a, b)` pair with the same capacity.
    pub fn bidirectional(node_count: usize, edges: &[(usize, usize)], capacity: f64) -> Result<Self> {
        let links = edges
            .iter()
            .flat_map(|&(a, b)| {
                [
                    Link {
                        src: a,
                        dst: b,
                        capacity,
                    },
                    Link {
                        src: b,
                        dst: a,
                        capacity,
                    },
                ]
            })
            .collect();
        Topology::new(node_count, links)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// Nodes reachable from `src` along directed links, as a mask.
    pub fn reachable_from(&self, src: usize) -> Vec<bool> {
        let mut seen = vec![false; self.node_count];
        let mut queue = VecDeque::from([src]);
        seen[src] = true;
        while let Some(v) = queue.pop_front() {
            for l in self.links.iter().filter(|l| l.src == v) {
                if !seen[l.dst] {
                    seen[l.dst] = true;
                    queue.push_back(l.dst);
                }
            }
        }
        seen
    }

    /// Parses the text format: `nodes <N>` first, then `link <src> <dst> <capacity>`
    /// lines. `#` starts a comment; blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut node_count = None;
        let mut links = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i as u64 + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: line_no, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            match (fields[0], node_count) {
                ("nodes", None) if fields.len() == 2 => {
                    let n = fields[1]
                        .parse::<usize>()
                        .map_err(|_| parse_err(format!("bad node count `{}`", fields[1])))?;
                    node_count = Some(n);
                }
                ("link", Some(n)) if fields.len() == 4 => {
                    let src: usize = fields[1]
                        .parse()
                        .map_err(|_| parse_err(format!("bad node `{}`", fields[1])))?;
                    let dst: usize = fields[2]
                        .parse()
                        .map_err(|_| parse_err(format!("bad node `{}`", fields[2])))?;
                    let capacity: f64 = fields[3]
                        .parse()
                        .map_err(|_| parse_err(format!("bad capacity `{}`", fields[3])))?;
                    for index in [src, dst] {
                        if index >= n {
                            return Err(Error::Bounds {
                                line: line_no,
                                index,
                                node_count: n,
                            });
                        }
                    }
                    links.push(Link { src, dst, capacity });
                }
                ("link", None) => return Err(parse_err("`link` before `nodes`".into())),
                _ => return Err(parse_err(format!("unrecognized line `{line}`"))),
            }
        }
        let n = node_count.ok_or_else(|| Error::Parse {
            line: 0,
            message: "missing `nodes` line".into(),
        })?;
        Topology::new(n, links)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Topology::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("nodes {}\n", self.node_count);
        for l in &self.links {
            let _ = writeln!(s, "link {} {} {}", l.src, l.dst, l.capacity);
        }
        s
    }
}
