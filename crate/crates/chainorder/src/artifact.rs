//! The chain artifact: a JSON document holding the system, endpoints,
//! target term, schedule, stage chains, and the construction trace.
//! Loading re-validates everything against the named system; a document
//! that does not parse cleanly is rejected before any check runs.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chains::{EpsilonChain, NestedFamily};
use crate::constructor::{
    Address, BasicCase, BlockSpan, BlockTrace, Built, ConstructionTrace, TraceNode,
};
use crate::order::{parse_term, render_term, NormIndex, OrderTerm};
use crate::systems::{rat_from_str, rat_to_string, resolve, Point, System};

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed artifact: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed artifact: {0}")]
    Malformed(String),
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct ArtifactDoc {
    pub system: String,
    pub endpoints: EndpointsDoc,
    pub target_term: String,
    pub epsilons: Vec<String>,
    pub stages: Vec<StageDoc>,
    pub trace: TraceDoc,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct EndpointsDoc {
    pub x: String,
    pub y: String,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct StageDoc {
    pub eps: String,
    pub points: Vec<String>,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct TraceDoc {
    pub addresses: Vec<AddressEntry>,
    pub root: NodeDoc,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct AddressEntry {
    pub point: String,
    pub address: Vec<i64>,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeDoc {
    Orbit {
        m: u64,
    },
    Basic {
        case: String,
        h: u64,
        k: u64,
        #[serde(skip_serializing_if = "Option::is_none")]
        mid: Option<String>,
        h_seq: Vec<u64>,
        k_seq: Vec<u64>,
    },
    Sum {
        index: String,
        blocks: Vec<BlockDoc>,
        stage_blocks: Vec<Vec<SpanDoc>>,
    },
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct BlockDoc {
    pub pos: i64,
    pub anchor_from: String,
    pub anchor_to: String,
    pub h_pad: u64,
    pub k_pad: u64,
    pub from_class_run: u64,
    pub to_class_run: u64,
    pub child: Box<NodeDoc>,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct SpanDoc {
    pub pos: i64,
    pub start: usize,
    pub len: usize,
}

pub struct LoadedArtifact {
    pub system: Arc<dyn System>,
    pub family: NestedFamily,
    pub trace: ConstructionTrace,
    pub term: OrderTerm,
}

fn case_name(case: &BasicCase) -> (&'static str, u64, u64) {
    match case {
        BasicCase::OmegaPlusK { k } => ("omega_plus_k", 0, *k),
        BasicCase::HPlusOmegaStar { h } => ("h_plus_omega_star", *h, 0),
        BasicCase::HZetaK { h, k } => ("h_zeta_k", *h, *k),
    }
}

fn case_from(name: &str, h: u64, k: u64) -> Result<BasicCase, ArtifactError> {
    match name {
        "omega_plus_k" => Ok(BasicCase::OmegaPlusK { k }),
        "h_plus_omega_star" => Ok(BasicCase::HPlusOmegaStar { h }),
        "h_zeta_k" => Ok(BasicCase::HZetaK { h, k }),
        other => Err(ArtifactError::Malformed(format!(
            "unknown elementary case '{other}'"
        ))),
    }
}

fn index_name(index: NormIndex) -> String {
    match index {
        NormIndex::Fin(k) => format!("fin:{k}"),
        NormIndex::Omega => "w".into(),
        NormIndex::OmegaStar => "w*".into(),
        NormIndex::Zeta => "z".into(),
    }
}

fn index_from(s: &str) -> Result<NormIndex, ArtifactError> {
    match s {
        "w" => Ok(NormIndex::Omega),
        "w*" => Ok(NormIndex::OmegaStar),
        "z" => Ok(NormIndex::Zeta),
        other => {
            if let Some(k) = other.strip_prefix("fin:") {
                let k: usize = k
                    .parse()
                    .map_err(|_| ArtifactError::Malformed(format!("bad index '{other}'")))?;
                Ok(NormIndex::Fin(k))
            } else {
                Err(ArtifactError::Malformed(format!("bad index '{other}'")))
            }
        }
    }
}

fn node_to_doc(node: &TraceNode) -> NodeDoc {
    match node {
        TraceNode::Orbit { m } => NodeDoc::Orbit { m: *m },
        TraceNode::Basic {
            case,
            mid,
            h_seq,
            k_seq,
        } => {
            let (name, h, k) = case_name(case);
            NodeDoc::Basic {
                case: name.into(),
                h,
                k,
                mid: mid.as_ref().map(|p| p.render()),
                h_seq: h_seq.clone(),
                k_seq: k_seq.clone(),
            }
        }
        TraceNode::Sum {
            index,
            blocks,
            stage_blocks,
        } => NodeDoc::Sum {
            index: index_name(*index),
            blocks: blocks
                .iter()
                .map(|b| BlockDoc {
                    pos: b.pos,
                    anchor_from: b.anchor_from.render(),
                    anchor_to: b.anchor_to.render(),
                    h_pad: b.h_pad,
                    k_pad: b.k_pad,
                    from_class_run: b.from_class_run,
                    to_class_run: b.to_class_run,
                    child: Box::new(node_to_doc(&b.child)),
                })
                .collect(),
            stage_blocks: stage_blocks
                .iter()
                .map(|spans| {
                    spans
                        .iter()
                        .map(|s| SpanDoc {
                            pos: s.pos,
                            start: s.start,
                            len: s.len,
                        })
                        .collect()
                })
                .collect(),
        },
    }
}

fn node_from_doc(doc: &NodeDoc, sys: &dyn System) -> Result<TraceNode, ArtifactError> {
    Ok(match doc {
        NodeDoc::Orbit { m } => TraceNode::Orbit { m: *m },
        NodeDoc::Basic {
            case,
            h,
            k,
            mid,
            h_seq,
            k_seq,
        } => TraceNode::Basic {
            case: case_from(case, *h, *k)?,
            mid: mid.as_ref().map(|s| parse_point(sys, s)).transpose()?,
            h_seq: h_seq.clone(),
            k_seq: k_seq.clone(),
        },
        NodeDoc::Sum {
            index,
            blocks,
            stage_blocks,
        } => TraceNode::Sum {
            index: index_from(index)?,
            blocks: blocks
                .iter()
                .map(|b| {
                    Ok(BlockTrace {
                        pos: b.pos,
                        anchor_from: parse_point(sys, &b.anchor_from)?,
                        anchor_to: parse_point(sys, &b.anchor_to)?,
                        h_pad: b.h_pad,
                        k_pad: b.k_pad,
                        from_class_run: b.from_class_run,
                        to_class_run: b.to_class_run,
                        child: Box::new(node_from_doc(&b.child, sys)?),
                    })
                })
                .collect::<Result<Vec<_>, ArtifactError>>()?,
            stage_blocks: stage_blocks
                .iter()
                .map(|spans| {
                    spans
                        .iter()
                        .map(|s| BlockSpan {
                            pos: s.pos,
                            start: s.start,
                            len: s.len,
                        })
                        .collect()
                })
                .collect(),
        },
    })
}

fn parse_point(sys: &dyn System, s: &str) -> Result<Point, ArtifactError> {
    sys.parse_point(s)
        .map_err(|e| ArtifactError::Malformed(e.to_string()))
}

pub fn to_doc(sys: &dyn System, built: &Built, term: &OrderTerm) -> ArtifactDoc {
    let mut addresses: Vec<(&Address, &Point)> =
        built.trace.addresses.iter().map(|(p, a)| (a, p)).collect();
    addresses.sort();
    ArtifactDoc {
        system: sys.id(),
        endpoints: EndpointsDoc {
            x: built.family.x.render(),
            y: built.family.y.render(),
        },
        target_term: render_term(term),
        epsilons: built.family.epsilons().iter().map(rat_to_string).collect(),
        stages: built
            .family
            .stages
            .iter()
            .map(|s| StageDoc {
                eps: rat_to_string(&s.eps),
                points: s.points.iter().map(|p| p.render()).collect(),
            })
            .collect(),
        trace: TraceDoc {
            addresses: addresses
                .into_iter()
                .map(|(a, p)| AddressEntry {
                    point: p.render(),
                    address: a.0.clone(),
                })
                .collect(),
            root: node_to_doc(&built.trace.root),
        },
    }
}

pub fn from_doc(doc: &ArtifactDoc) -> Result<LoadedArtifact, ArtifactError> {
    let system = resolve(&doc.system).map_err(|e| ArtifactError::Malformed(e.to_string()))?;
    let term = parse_term(&doc.target_term).map_err(|e| ArtifactError::Malformed(e.to_string()))?;
    let x = parse_point(system.as_ref(), &doc.endpoints.x)?;
    let y = parse_point(system.as_ref(), &doc.endpoints.y)?;
    if doc.stages.is_empty() {
        return Err(ArtifactError::Malformed("artifact has no stages".into()));
    }
    if doc.epsilons.len() != doc.stages.len() {
        return Err(ArtifactError::Malformed(
            "epsilons and stages disagree in length".into(),
        ));
    }
    let mut stages = Vec::with_capacity(doc.stages.len());
    for (i, st) in doc.stages.iter().enumerate() {
        let eps = rat_from_str(&st.eps).map_err(|e| ArtifactError::Malformed(e.to_string()))?;
        let listed =
            rat_from_str(&doc.epsilons[i]).map_err(|e| ArtifactError::Malformed(e.to_string()))?;
        if eps != listed {
            return Err(ArtifactError::Malformed(format!(
                "stage {} eps disagrees with the epsilons list",
                i + 1
            )));
        }
        let points = st
            .points
            .iter()
            .map(|p| parse_point(system.as_ref(), p))
            .collect::<Result<Vec<_>, _>>()?;
        stages.push(
            EpsilonChain::new(points, eps).map_err(|e| ArtifactError::Malformed(e.to_string()))?,
        );
    }
    let mut addresses: BTreeMap<Point, Address> = BTreeMap::new();
    for e in &doc.trace.addresses {
        let p = parse_point(system.as_ref(), &e.point)?;
        if addresses.insert(p, Address(e.address.clone())).is_some() {
            return Err(ArtifactError::Malformed(format!(
                "duplicate address entry for {}",
                e.point
            )));
        }
    }
    let root = node_from_doc(&doc.trace.root, system.as_ref())?;
    Ok(LoadedArtifact {
        system,
        family: NestedFamily { x, y, stages },
        trace: ConstructionTrace { addresses, root },
        term,
    })
}

/// Canonical serialization: pretty JSON plus a trailing newline, so the
/// same construction always writes identical bytes.
pub fn to_canonical_json(doc: &ArtifactDoc) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("artifact serializes");
    s.push('\n');
    s
}

pub fn save(path: &Path, doc: &ArtifactDoc) -> Result<(), ArtifactError> {
    std::fs::write(path, to_canonical_json(doc))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<ArtifactDoc, ArtifactError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::ClassAllocator;
    use crate::constructor::realize;
    use crate::schedule::EpsSchedule;
    use crate::verifier::verify_family;

    #[test]
    fn round_trip_through_json() {
        let sys = resolve("odometer").unwrap();
        let x = sys.parse_point("0").unwrap();
        let y = sys.parse_point("1/3").unwrap();
        let alloc = ClassAllocator::new(sys.clone(), 0, vec![]);
        let term = parse_term("sum(w*; ; z)").unwrap();
        let built = realize(&sys, &x, &y, &term, &EpsSchedule::dyadic(), 3, &alloc).unwrap();

        let doc = to_doc(sys.as_ref(), &built, &term);
        let text = to_canonical_json(&doc);
        let doc2: ArtifactDoc = serde_json::from_str(&text).unwrap();
        let loaded = from_doc(&doc2).unwrap();

        assert_eq!(loaded.family.x, x);
        assert_eq!(loaded.family.stages.len(), 3);
        let report = verify_family(
            loaded.system.as_ref(),
            &loaded.family,
            &loaded.trace,
            &loaded.term,
        );
        assert!(report.all_pass(), "{}", report.lines());

        // canonical serialization is stable
        let text2 = to_canonical_json(&to_doc(loaded.system.as_ref(), &built, &term));
        assert_eq!(text, text2);
    }

    #[test]
    fn malformed_documents_are_rejected() {
        let bad = r#"{"system":"odometer"}"#;
        assert!(serde_json::from_str::<ArtifactDoc>(bad).is_err());

        let sys = resolve("odometer").unwrap();
        let x = sys.parse_point("0").unwrap();
        let y = sys.parse_point("1/3").unwrap();
        let alloc = ClassAllocator::new(sys.clone(), 0, vec![]);
        let term = parse_term("w").unwrap();
        let built = realize(&sys, &x, &y, &term, &EpsSchedule::dyadic(), 2, &alloc).unwrap();
        let mut doc = to_doc(sys.as_ref(), &built, &term);
        doc.epsilons.pop();
        assert!(matches!(from_doc(&doc), Err(ArtifactError::Malformed(_))));
    }
}
