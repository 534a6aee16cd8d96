//! Plain-text rendering of check, extract and stats output.

use std::collections::BTreeMap;
use std::fmt::Write;

use tlex_core::analysis::{CycleReport, DocumentReport};
use tlex_core::consistency::CycleType;
use tlex_core::model::LinkRel;
use tlex_core::pa::PointEnd;
use tlex_core::trunk_branch::Summary;

use crate::{CheckEntry, ExtractEntry, StatsOutput};

fn point(node: &str, end: PointEnd) -> String {
    let mark = match end {
        PointEnd::Start => '⁻',
        PointEnd::End => '⁺',
    };
    format!("{node}{mark}")
}

fn cycle_type(t: CycleType) -> &'static str {
    match t {
        CycleType::TypeI => "I",
        CycleType::TypeII => "II",
        CycleType::TypeIII => "III",
    }
}

fn rel_parts(rel: &LinkRel) -> (&'static str, &'static str) {
    match rel {
        LinkRel::Tlink(r) => ("TLINK", r.as_timeml()),
        LinkRel::Slink(r) => ("SLINK", r.as_timeml()),
        LinkRel::Alink(r) => ("ALINK", r.as_timeml()),
    }
}

pub fn cycles(out: &mut String, mlic: &[CycleReport]) {
    for (i, c) in mlic.iter().enumerate() {
        let shape = match c.cycle_type {
            CycleType::TypeIII => {
                let mut walk = c.points.join(" → ");
                if let Some(first) = c.points.first() {
                    write!(walk, " → {first}").unwrap();
                }
                walk
            }
            _ => c.points.join(", "),
        };
        writeln!(out, "  [{}] type {} in subgraph {}: {shape}", i + 1, cycle_type(c.cycle_type), c.subgraph).unwrap();
        for l in &c.links {
            let (kind, rel) = rel_parts(&l.rel);
            writeln!(out, "      {} {kind} {} {rel} {}", l.link_id, l.source, l.target).unwrap();
        }
    }
}

pub fn check_entry(e: &CheckEntry) -> String {
    let mut out = String::new();
    let id = e.doc_id.as_deref().unwrap_or("?");
    match (e.consistent, &e.error) {
        (_, Some(err)) => writeln!(out, "ERROR        {}: {err}", e.path).unwrap(),
        (Some(true), _) => writeln!(out, "CONSISTENT   {} ({id})", e.path).unwrap(),
        _ => {
            writeln!(out, "INCONSISTENT {} ({id}): {} cycle(s)", e.path, e.mlic.len()).unwrap();
            cycles(&mut out, &e.mlic);
        }
    }
    out
}

/// Renders the trunk top to bottom (one line per position), marks positions
/// inside indeterminate sections with `~`, and lists each branch after it.
pub fn report(r: &DocumentReport) -> String {
    let mut out = String::new();
    if !r.consistent {
        writeln!(out, "== {}  INCONSISTENT ({} cycle(s))", r.doc_id, r.mlic.len()).unwrap();
        cycles(&mut out, &r.mlic);
        return out;
    }
    let trunk = r.trunk.as_ref().expect("consistent reports carry a trunk");
    writeln!(out, "== {}  CONSISTENT ({} subgraph(s), trunk length {})", r.doc_id, r.stats.subgraphs, trunk.length).unwrap();

    let mut by_pos: BTreeMap<u32, Vec<String>> = BTreeMap::new();
    for p in &trunk.points {
        by_pos.entry(p.global_pos).or_default().push(point(&p.node, p.end));
    }
    let marked = |pos: u32, on_trunk: bool, sub: Option<usize>| {
        r.indeterminate_sections
            .iter()
            .any(|s| s.on_trunk == on_trunk && (on_trunk || Some(s.subgraph) == sub) && (s.start..=s.end).contains(&pos))
    };
    let mut hooks: BTreeMap<u32, Vec<String>> = BTreeMap::new();
    for b in &r.branches {
        if let (Some(a), Some(link), Some(rel)) = (&b.anchor, &b.slink, &b.rel) {
            if let Some(pos) = a.global_pos {
                hooks.entry(pos).or_default().push(format!("branch {} via {link} {rel} from {}", b.subgraph, a.node));
            }
        }
    }

    writeln!(out, "trunk").unwrap();
    for (pos, points) in &by_pos {
        let mark = if marked(*pos, true, None) { '~' } else { ' ' };
        write!(out, "  {mark}{pos:>4}  {}", points.join(" ")).unwrap();
        if let Some(h) = hooks.get(pos) {
            write!(out, "    <- {}", h.join("; ")).unwrap();
        }
        out.push('\n');
    }

    for b in &r.branches {
        let anchor = match (&b.anchor, &b.slink, &b.rel) {
            (Some(a), Some(link), Some(rel)) => {
                let at = a.global_pos.map_or_else(|| format!("subgraph {}", a.subgraph), |p| format!("trunk {p}"));
                format!("anchored at {} ({at}) via {link} {rel}", a.node)
            }
            _ => "unanchored".to_string(),
        };
        writeln!(out, "branch {} ({anchor}), length {}", b.subgraph, b.timeline.length).unwrap();
        let mut by_pos: BTreeMap<u32, Vec<String>> = BTreeMap::new();
        for p in &b.timeline.points {
            by_pos.entry(p.pos).or_default().push(point(&p.node, p.end));
        }
        for (pos, points) in &by_pos {
            let mark = if marked(*pos, false, Some(b.subgraph)) { '~' } else { ' ' };
            writeln!(out, "  {mark}{pos:>4}  {}", points.join(" ")).unwrap();
        }
    }

    if !r.indeterminate_sections.is_empty() {
        writeln!(out, "indeterminate sections").unwrap();
        for s in &r.indeterminate_sections {
            let place = if s.on_trunk { "trunk".to_string() } else { format!("branch {}", s.subgraph) };
            writeln!(out, "  {place} {}-{}: {} ({} unordered pair(s))", s.start, s.end, s.nodes.join(", "), s.pairs).unwrap();
        }
    }
    for l in &r.intra_slinks {
        writeln!(out, "intra-subgraph {} SLINK {} {} {}", l.link_id, l.source, l.rel, l.target).unwrap();
    }
    for w in &r.warnings {
        writeln!(out, "warning: {w}").unwrap();
    }
    out
}

pub fn extract_entry(e: &ExtractEntry) -> String {
    match (&e.report, &e.error) {
        (Some(r), _) => report(r),
        (None, Some(err)) => format!("== {}  ERROR: {err}\n", e.path),
        (None, None) => String::new(),
    }
}

fn summary_row(out: &mut String, label: &str, s: &Summary) {
    writeln!(out, "{label:<28}{:>10.0}{:>10.2}{:>10.0}", s.min, s.avg, s.max).unwrap();
}

pub fn stats(s: &StatsOutput) -> String {
    let c = &s.stats;
    let mut out = String::new();
    writeln!(out, "{:<28}{:>10}", "documents", c.documents).unwrap();
    writeln!(out, "{:<28}{:>10}", "consistent", c.consistent).unwrap();
    writeln!(out, "{:<28}{:>10}", "inconsistent", c.inconsistent).unwrap();
    writeln!(out, "{:<28}{:>10}", "inconsistent, TLINKs only", c.inconsistent_tlinks_only).unwrap();
    writeln!(out, "{:<28}{:>10}", "inconsistent, with ALINKs", c.inconsistent_with_alinks).unwrap();
    writeln!(out, "{:<28}{:>10}", "inconsistent cycles", c.mlic_total).unwrap();
    writeln!(out, "{:<28}{:>10}", "load errors", s.errors.len()).unwrap();
    writeln!(out).unwrap();
    writeln!(out, "{:<28}{:>10}{:>10}{:>10}", "per consistent text", "min", "avg", "max").unwrap();
    summary_row(&mut out, "main timeline length", &c.main_length);
    summary_row(&mut out, "subordinated branches", &c.branches);
    summary_row(&mut out, "indeterminate sections", &c.sections);
    if !c.rows.is_empty() {
        writeln!(out).unwrap();
        writeln!(out, "{:<24}{:>12}{:>8}{:>10}{:>10}{:>6}", "document", "consistent", "length", "branches", "sections", "MLIC").unwrap();
        for r in &c.rows {
            writeln!(
                out,
                "{:<24}{:>12}{:>8}{:>10}{:>10}{:>6}",
                r.doc_id,
                if r.consistent { "yes" } else { "no" },
                r.main_length,
                r.branches,
                r.sections,
                r.mlic_size
            )
            .unwrap();
        }
    }
    for e in &s.errors {
        writeln!(out, "error: {}: {}", e.path, e.error.as_deref().unwrap_or("")).unwrap();
    }
    out
}
