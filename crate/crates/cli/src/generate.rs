//! Synthetic document generation for fixtures and corpus-scale runs.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Context;
use clap::ValueEnum;
use quick_xml::escape::escape;

use tlex_core::model::{LinkRel, TimeMLGraph};
use tlex_core::oracle::{generate_random_graph, Fault};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum GenFormat {
    #[default]
    Tml,
    Json,
}

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub count: usize,
    pub intervals: usize,
    pub density: f64,
    pub slink_prob: f64,
    pub inject_cycle: bool,
    pub seed: u64,
    pub format: GenFormat,
    /// Directory for the generated files; `None` prints a single document.
    pub out_dir: Option<PathBuf>,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            count: 1,
            intervals: 40,
            density: 0.06,
            slink_prob: 0.05,
            inject_cycle: false,
            seed: 0,
            format: GenFormat::Tml,
            out_dir: None,
        }
    }
}

/// Serializes a graph as a TimeML document. Node ids become instance ids
/// (events) or tids (timexes); events get synthetic `e…` event ids.
pub fn to_timeml(graph: &TimeMLGraph, doc_id: &str) -> String {
    let mut nodes: Vec<_> = graph.nodes().iter().collect();
    nodes.sort_by(|a, b| (a.char_offset, &a.node).cmp(&(b.char_offset, &b.node)));
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<TimeML>\n");
    writeln!(out, "<DOCID>{}</DOCID>", escape(doc_id)).unwrap();
    out.push_str("<TEXT>");
    let mut instances = String::new();
    for (k, e) in nodes.iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        let text = escape(e.surface_text.as_str());
        match e.timex_class {
            Some(class) => write!(out, "<TIMEX3 tid=\"{}\" type=\"{}\">{text}</TIMEX3>", escape(e.node.id.as_str()), class.as_timeml()),
            None => {
                writeln!(instances, "<MAKEINSTANCE eiid=\"{}\" eventID=\"e{k}\"/>", escape(e.node.id.as_str())).unwrap();
                write!(out, "<EVENT eid=\"e{k}\" class=\"OCCURRENCE\">{text}</EVENT>")
            }
        }
        .unwrap();
    }
    out.push_str(".</TEXT>\n");
    out.push_str(&instances);
    for l in graph.links() {
        let (src, tgt) = (escape(l.source.id.as_str()), escape(l.target.id.as_str()));
        let lid = escape(l.link_id.as_str());
        match l.rel {
            LinkRel::Tlink(r) => {
                let s_attr = if l.source.is_timex() { "timeID" } else { "eventInstanceID" };
                let t_attr = if l.target.is_timex() { "relatedToTime" } else { "relatedToEventInstance" };
                writeln!(out, "<TLINK lid=\"{lid}\" relType=\"{r}\" {s_attr}=\"{src}\" {t_attr}=\"{tgt}\"/>").unwrap();
            }
            LinkRel::Slink(r) => {
                writeln!(out, "<SLINK lid=\"{lid}\" relType=\"{r}\" eventInstanceID=\"{src}\" subordinatedEventInstance=\"{tgt}\"/>")
                    .unwrap();
            }
            LinkRel::Alink(r) => {
                writeln!(out, "<ALINK lid=\"{lid}\" relType=\"{r}\" eventInstanceID=\"{src}\" relatedToEventInstance=\"{tgt}\"/>")
                    .unwrap();
            }
        }
    }
    out.push_str("</TimeML>\n");
    out
}

/// Generated documents as (file name, contents). Document `i` uses seed
/// `seed + i`, so output depends only on the configuration.
pub fn generate(cfg: &GenConfig) -> Vec<(String, String)> {
    let fault = if cfg.inject_cycle { Fault::InjectCycle } else { Fault::None };
    (0..cfg.count)
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i as u64);
            let g = generate_random_graph(seed, cfg.intervals, cfg.density, cfg.slink_prob, fault).graph;
            let id = format!("gen_{seed:06}");
            match cfg.format {
                GenFormat::Tml => (format!("{id}.tml"), to_timeml(&g, &id)),
                GenFormat::Json => (format!("{id}.json"), g.to_canonical_json() + "\n"),
            }
        })
        .collect()
}

pub fn cmd_gen(cfg: &GenConfig, out: &mut dyn std::io::Write) -> anyhow::Result<i32> {
    let docs = generate(cfg);
    match &cfg.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for (name, body) in &docs {
                std::fs::write(dir.join(name), body).with_context(|| format!("writing {name}"))?;
            }
            writeln!(out, "wrote {} document(s) to {}", docs.len(), dir.display())?;
        }
        None => {
            for (_, body) in &docs {
                out.write_all(body.as_bytes())?;
            }
        }
    }
    Ok(0)
}
