//! Line format, one record per node and per link:
//!
//! ```text
//! # theta graph
//! node 0
//! node 1
//! node 2 valence 4 intertwiner 1
//! link 0 0 1 2        # id, source, target, 2j
//! link 1 1 - 3        # "-" marks a dangling end
//! ```

use std::fmt::Write;

use super::{End, Link, Node, SpinNetwork};
use crate::error::{Error, Result};
use crate::spin::Spin;

pub fn parse_network(text: &str) -> Result<SpinNetwork> {
    let mut nodes = Vec::new();
    let mut links = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |msg: &str| Error::Parse {
            line,
            msg: msg.to_string(),
        };
        let fields: Vec<&str> = body.split_whitespace().collect();
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| err(&format!("expected an integer, got {s:?}")))
        };
        match fields[0] {
            "node" => {
                let id = int(fields.get(1).ok_or_else(|| err("node needs an id"))?)?;
                let mut node = Node::trivalent(id);
                let mut rest = fields[2..].iter();
                while let Some(&key) = rest.next() {
                    let value = rest.next().ok_or_else(|| err(&format!("{key} needs a value")))?;
                    match key {
                        "valence" => node.valence = Some(int(value)?),
                        "intertwiner" => node.intertwiner = Some(int(value)? as u32),
                        _ => return Err(err(&format!("unknown node attribute {key:?}"))),
                    }
                }
                nodes.push(node);
            }
            "link" => {
                if fields.len() != 5 {
                    return Err(err("link needs: id source target twice_j"));
                }
                let end = |s: &str| -> Result<End> {
                    if s == "-" {
                        Ok(End::Dangling)
                    } else {
                        int(s).map(End::Node)
                    }
                };
                links.push(Link {
                    id: int(fields[1])?,
                    source: end(fields[2])?,
                    target: end(fields[3])?,
                    spin: Spin::from_twice(int(fields[4])? as u32),
                });
            }
            other => return Err(err(&format!("unknown record {other:?}"))),
        }
    }
    SpinNetwork::new(nodes, links)
}

pub fn write_network(net: &SpinNetwork) -> String {
    let mut out = String::new();
    for n in net.nodes() {
        write!(out, "node {}", n.id).unwrap();
        if let Some(v) = n.valence {
            write!(out, " valence {v}").unwrap();
        }
        if let Some(i) = n.intertwiner {
            write!(out, " intertwiner {i}").unwrap();
        }
        out.push('\n');
    }
    let end = |e: End| match e {
        End::Node(n) => n.to_string(),
        End::Dangling => "-".to_string(),
    };
    for l in net.links() {
        writeln!(
            out,
            "link {} {} {} {}",
            l.id,
            end(l.source),
            end(l.target),
            l.spin.twice()
        )
        .unwrap();
    }
    out
}
