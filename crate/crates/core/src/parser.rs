//! TimeML XML ingestion (TimeBank 1.2 dialect and compatible corpora).
//!
//! Character offsets are computed against the tag-stripped, entity-unescaped
//! text of the whole document, counted in Unicode scalar values.

use std::collections::{HashMap, HashSet};

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    build_graph, GraphError, GraphOptions, LinkKind, LinkRel, NodeId, TemporalEntity, TimeMLGraph,
    TimeMLLink, TimexClass,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventMention {
    pub eid: String,
    pub text: String,
    pub char_offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub eiid: String,
    pub eid: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimexMention {
    pub tid: String,
    pub class: TimexClass,
    pub text: String,
    pub char_offset: usize,
}

/// A parsed `.tml` document prior to graph resolution. Link endpoints are kept
/// as written: an event endpoint may name an instance (`ei4`) or, in some
/// corpora, the underlying event (`e4`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeMLDocument {
    pub doc_id: String,
    pub raw_text: String,
    pub events: Vec<EventMention>,
    pub instances: Vec<Instance>,
    pub timexes: Vec<TimexMention>,
    pub raw_links: Vec<TimeMLLink>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed XML at byte {position}: {message}")]
    XmlMalformed { position: u64, message: String },
    #[error("unresolved reference {attr}=\"{value}\"")]
    UnresolvedReference { attr: String, value: String },
    #[error("link {lid}: unknown relType \"{rel}\"")]
    UnknownRelType { lid: String, rel: String },
    #[error("<{element}> is missing attribute {attr}")]
    MissingAttribute { element: String, attr: String },
    #[error("timex {tid}: unknown type \"{value}\"")]
    UnknownTimexType { tid: String, value: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("document {doc_id}: {source}")]
pub struct ResolveError {
    pub doc_id: String,
    #[source]
    pub source: Box<GraphError>,
}

fn attributes(e: &BytesStart<'_>, position: u64) -> Result<HashMap<String, String>, ParseError> {
    let mut out = HashMap::new();
    for attr in e.attributes() {
        let attr = attr.map_err(|err| ParseError::XmlMalformed { position, message: err.to_string() })?;
        let key = String::from_utf8_lossy(attr.key.local_name().as_ref()).into_owned();
        let value = attr
            .unescape_value()
            .map_err(|err| ParseError::XmlMalformed { position, message: err.to_string() })?
            .into_owned();
        out.insert(key, value);
    }
    Ok(out)
}

fn required(attrs: &HashMap<String, String>, element: &str, attr: &str) -> Result<String, ParseError> {
    attrs.get(attr).cloned().ok_or_else(|| ParseError::MissingAttribute {
        element: element.to_string(),
        attr: attr.to_string(),
    })
}

/// Looks up the first present attribute among `names` and tags it with the node
/// kind it denotes.
fn endpoint(
    attrs: &HashMap<String, String>,
    element: &str,
    names: &[(&str, bool)],
) -> Result<(String, NodeId), ParseError> {
    for (name, is_time) in names {
        if let Some(v) = attrs.get(*name) {
            let node = if *is_time { NodeId::timex(v.clone()) } else { NodeId::event(v.clone()) };
            return Ok((name.to_string(), node));
        }
    }
    Err(ParseError::MissingAttribute { element: element.to_string(), attr: names[0].0.to_string() })
}

struct Open {
    kind: OpenKind,
    start: usize,
    text: String,
}

enum OpenKind {
    Event(String),
    Timex(String, TimexClass),
    DocId,
}

pub fn parse_document(xml: &[u8]) -> Result<TimeMLDocument, ParseError> {
    let mut reader = Reader::from_reader(xml);
    let mut buf = Vec::new();
    let mut raw_text = String::new();
    let mut text_len = 0usize;
    let mut open: Vec<Open> = Vec::new();
    let mut depth = 0usize;

    let mut doc = TimeMLDocument {
        doc_id: String::new(),
        raw_text: String::new(),
        events: Vec::new(),
        instances: Vec::new(),
        timexes: Vec::new(),
        raw_links: Vec::new(),
    };
    // attribute names of each raw link's (source, target), for post-pass validation
    let mut references: Vec<(String, String)> = Vec::new();

    loop {
        let position = reader.buffer_position();
        let event = reader.read_event_into(&mut buf).map_err(|err| ParseError::XmlMalformed {
            position: reader.error_position(),
            message: err.to_string(),
        })?;
        match event {
            Event::Start(e) => {
                depth += 1;
                let attrs = attributes(&e, position)?;
                let name = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                match name.as_str() {
                    "EVENT" => open.push(Open {
                        kind: OpenKind::Event(required(&attrs, "EVENT", "eid")?),
                        start: text_len,
                        text: String::new(),
                    }),
                    "TIMEX3" => {
                        let (tid, class) = timex_header(&attrs)?;
                        open.push(Open { kind: OpenKind::Timex(tid, class), start: text_len, text: String::new() })
                    }
                    "DOCID" => open.push(Open { kind: OpenKind::DocId, start: text_len, text: String::new() }),
                    _ => handle_markup(&name, &attrs, &mut doc, &mut references)?,
                }
            }
            Event::Empty(e) => {
                let attrs = attributes(&e, position)?;
                let name = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                match name.as_str() {
                    "EVENT" => doc.events.push(EventMention {
                        eid: required(&attrs, "EVENT", "eid")?,
                        text: String::new(),
                        char_offset: text_len,
                    }),
                    "TIMEX3" => {
                        let (tid, class) = timex_header(&attrs)?;
                        doc.timexes.push(TimexMention { tid, class, text: String::new(), char_offset: text_len });
                    }
                    _ => handle_markup(&name, &attrs, &mut doc, &mut references)?,
                }
            }
            Event::End(e) => {
                depth = depth.saturating_sub(1);
                let name = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                let closes = matches!(
                    (name.as_str(), open.last().map(|o| &o.kind)),
                    ("EVENT", Some(OpenKind::Event(_)))
                        | ("TIMEX3", Some(OpenKind::Timex(..)))
                        | ("DOCID", Some(OpenKind::DocId))
                );
                if closes {
                    let o = open.pop().expect("checked above");
                    match o.kind {
                        OpenKind::Event(eid) => {
                            doc.events.push(EventMention { eid, text: o.text, char_offset: o.start })
                        }
                        OpenKind::Timex(tid, class) => {
                            doc.timexes.push(TimexMention { tid, class, text: o.text, char_offset: o.start })
                        }
                        OpenKind::DocId => doc.doc_id = o.text.trim().to_string(),
                    }
                }
            }
            Event::Text(t) => {
                let s = t.unescape().map_err(|err| ParseError::XmlMalformed {
                    position,
                    message: err.to_string(),
                })?;
                push_text(&s, &mut raw_text, &mut text_len, &mut open);
            }
            Event::CData(t) => {
                let s = String::from_utf8_lossy(&t).into_owned();
                push_text(&s, &mut raw_text, &mut text_len, &mut open);
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if depth > 0 || !open.is_empty() {
        return Err(ParseError::XmlMalformed {
            position: reader.buffer_position(),
            message: "unexpected end of document inside an open element".into(),
        });
    }
    doc.raw_text = raw_text;

    let eids: HashSet<String> = doc.events.iter().map(|e| e.eid.clone()).collect();
    let eiids: HashSet<String> = doc.instances.iter().map(|i| i.eiid.clone()).collect();
    let tids: HashSet<String> = doc.timexes.iter().map(|t| t.tid.clone()).collect();
    for inst in &doc.instances {
        if !eids.contains(inst.eid.as_str()) {
            return Err(ParseError::UnresolvedReference { attr: "eventID".into(), value: inst.eid.clone() });
        }
    }
    for (i, (src_attr, dst_attr)) in references.iter().enumerate() {
        let link = &mut doc.raw_links[i];
        for (attr, node) in [(src_attr, &mut link.source), (dst_attr, &mut link.target)] {
            let id = node.id.clone();
            let id = id.as_str();
            let is_event = eiids.contains(id) || eids.contains(id);
            let is_timex = tids.contains(id);
            // endpoint kind follows the declared id, not the attribute slot
            *node = match (node.is_timex(), is_event, is_timex) {
                (false, true, _) | (true, true, false) => NodeId::event(id),
                (true, _, true) | (false, false, true) => NodeId::timex(id),
                _ => {
                    return Err(ParseError::UnresolvedReference { attr: attr.clone(), value: node.id.clone() })
                }
            };
        }
    }
    Ok(doc)
}

fn push_text(s: &str, raw_text: &mut String, text_len: &mut usize, open: &mut [Open]) {
    raw_text.push_str(s);
    *text_len += s.chars().count();
    for o in open.iter_mut() {
        o.text.push_str(s);
    }
}

fn timex_header(attrs: &HashMap<String, String>) -> Result<(String, TimexClass), ParseError> {
    let tid = required(attrs, "TIMEX3", "tid")?;
    let ty = required(attrs, "TIMEX3", "type")?;
    let class = TimexClass::parse(&ty).ok_or_else(|| ParseError::UnknownTimexType { tid: tid.clone(), value: ty })?;
    Ok((tid, class))
}

/// Accepted (attribute, refers-to-timex) names for a link endpoint.
type Endpoints = &'static [(&'static str, bool)];

fn handle_markup(
    name: &str,
    attrs: &HashMap<String, String>,
    doc: &mut TimeMLDocument,
    references: &mut Vec<(String, String)>,
) -> Result<(), ParseError> {
    let (kind, sources, targets): (LinkKind, Endpoints, Endpoints) = match name {
        "MAKEINSTANCE" => {
            doc.instances.push(Instance {
                eiid: required(attrs, name, "eiid")?,
                eid: required(attrs, name, "eventID")?,
            });
            return Ok(());
        }
        "TLINK" => (
            LinkKind::Tlink,
            &[("eventInstanceID", false), ("timeID", true)],
            &[("relatedToEventInstance", false), ("relatedToTime", true)],
        ),
        "SLINK" => (LinkKind::Slink, &[("eventInstanceID", false)], &[("subordinatedEventInstance", false)]),
        "ALINK" => (LinkKind::Alink, &[("eventInstanceID", false)], &[("relatedToEventInstance", false)]),
        _ => return Ok(()),
    };
    let lid = required(attrs, name, "lid")?;
    let rel_str = required(attrs, name, "relType")?;
    let rel = LinkRel::parse(kind, &rel_str).ok_or_else(|| ParseError::UnknownRelType {
        lid: lid.clone(),
        rel: rel_str.clone(),
    })?;
    let (src_attr, source) = endpoint(attrs, name, sources)?;
    let (dst_attr, target) = endpoint(attrs, name, targets)?;
    references.push((src_attr, dst_attr));
    doc.raw_links.push(TimeMLLink { link_id: lid, source, target, rel });
    Ok(())
}

/// Instance id synthesized for an event that has no MAKEINSTANCE.
pub fn synthesized_instance_id(eid: &str) -> String {
    format!("ei-auto-{eid}")
}

pub fn resolve_graph(doc: &TimeMLDocument, options: GraphOptions) -> Result<TimeMLGraph, ResolveError> {
    let mut warnings = Vec::new();
    let events: HashMap<&str, &EventMention> = doc.events.iter().map(|e| (e.eid.as_str(), e)).collect();
    let mut first_instance: HashMap<&str, &str> = HashMap::new();
    let mut entities = Vec::with_capacity(doc.instances.len() + doc.timexes.len());
    let mut instance_ids: HashSet<&str> = HashSet::new();

    for inst in &doc.instances {
        first_instance.entry(inst.eid.as_str()).or_insert(inst.eiid.as_str());
        instance_ids.insert(inst.eiid.as_str());
        // parse_document guarantees the event exists; tolerate hand-built documents
        let (text, offset) = events
            .get(inst.eid.as_str())
            .map(|e| (e.text.as_str(), e.char_offset))
            .unwrap_or(("", 0));
        entities.push(TemporalEntity::event(&inst.eiid, text, offset));
    }
    for ev in &doc.events {
        if !first_instance.contains_key(ev.eid.as_str()) {
            entities.push(TemporalEntity::event(&synthesized_instance_id(&ev.eid), &ev.text, ev.char_offset));
        }
    }
    for t in &doc.timexes {
        entities.push(TemporalEntity::timex(&t.tid, t.class, &t.text, t.char_offset));
    }

    let resolve = |node: &NodeId, lid: &str, warnings: &mut Vec<String>| -> NodeId {
        if node.is_timex() || instance_ids.contains(node.id.as_str()) {
            return node.clone();
        }
        match first_instance.get(node.id.as_str()) {
            Some(eiid) => {
                warnings.push(format!(
                    "link {lid} references event {} instead of an instance; using {eiid}",
                    node.id
                ));
                NodeId::event(*eiid)
            }
            None if events.contains_key(node.id.as_str()) => NodeId::event(synthesized_instance_id(&node.id)),
            None => node.clone(),
        }
    };

    let links: Vec<TimeMLLink> = doc
        .raw_links
        .iter()
        .map(|l| TimeMLLink {
            link_id: l.link_id.clone(),
            source: resolve(&l.source, &l.link_id, &mut warnings),
            target: resolve(&l.target, &l.link_id, &mut warnings),
            rel: l.rel,
        })
        .collect();

    let mut graph = build_graph(entities, links, options)
        .map_err(|source| ResolveError { doc_id: doc.doc_id.clone(), source: Box::new(source) })?;
    graph.prepend_warnings(warnings);
    Ok(graph)
}
