//! Frequency tables over annotated documents.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::annotator::CXN_KEY;
use crate::conllu::{Document, Sentence};

/// Construction instance counts, keyed by construction name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CountTable {
    pub rows: BTreeMap<String, usize>,
    pub sentences: usize,
    pub tokens: usize,
}

impl CountTable {
    pub fn add_sentence(&mut self, sentence: &Sentence) {
        self.sentences += 1;
        self.tokens += sentence.words().count();
        for tok in sentence.tokens() {
            if let Some(value) = tok.misc.get(CXN_KEY) {
                for name in value.split('+').filter(|n| !n.is_empty()) {
                    *self.rows.entry(name.to_string()).or_default() += 1;
                }
            }
        }
    }

    pub fn merge(&mut self, other: CountTable) {
        self.sentences += other.sentences;
        self.tokens += other.tokens;
        for (k, v) in other.rows {
            *self.rows.entry(k).or_default() += v;
        }
    }

    pub fn total(&self) -> usize {
        self.rows.values().sum()
    }

    /// Sum over all constructions of one family (`Conditional` covers
    /// `Conditional-If`, `Conditional-Inversion`, …).
    pub fn family_total(&self, family: &str) -> usize {
        self.rows
            .iter()
            .filter(|(name, _)| name.split('-').next() == Some(family))
            .map(|(_, n)| n)
            .sum()
    }
}

/// Counts `Cxn` values; `+`-joined values count separately.
pub fn count_constructions(doc: &Document) -> CountTable {
    let mut table = CountTable::default();
    for s in &doc.sentences {
        table.add_sentence(s);
    }
    table
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationBucket {
    Advmod,
    Nsubj,
    Obj,
    Det,
    Obl,
    Ccomp,
    Xcomp,
    Other,
}

impl RelationBucket {
    pub const ALL: [RelationBucket; 8] = [
        RelationBucket::Advmod,
        RelationBucket::Nsubj,
        RelationBucket::Obj,
        RelationBucket::Det,
        RelationBucket::Obl,
        RelationBucket::Ccomp,
        RelationBucket::Xcomp,
        RelationBucket::Other,
    ];

    pub fn of(base_deprel: &str) -> RelationBucket {
        match base_deprel {
            "advmod" => RelationBucket::Advmod,
            "nsubj" => RelationBucket::Nsubj,
            "obj" => RelationBucket::Obj,
            "det" => RelationBucket::Det,
            "obl" => RelationBucket::Obl,
            "ccomp" => RelationBucket::Ccomp,
            "xcomp" => RelationBucket::Xcomp,
            _ => RelationBucket::Other,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RelationBucket::Advmod => "advmod",
            RelationBucket::Nsubj => "nsubj",
            RelationBucket::Obj => "obj",
            RelationBucket::Det => "det",
            RelationBucket::Obl => "obl",
            RelationBucket::Ccomp => "ccomp",
            RelationBucket::Xcomp => "xcomp",
            RelationBucket::Other => "other",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WhClass {
    NonInterrogative,
    Interrogative,
}

impl WhClass {
    pub fn name(self) -> &'static str {
        match self {
            WhClass::NonInterrogative => "non-interrogative",
            WhClass::Interrogative => "interrogative",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PrePost {
    pub pre: usize,
    pub post: usize,
}

/// Pre-/post-head position counts per relation bucket and class.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WhPositionTable {
    cells: [[PrePost; 2]; 8],
}

impl WhPositionTable {
    pub fn get(&self, bucket: RelationBucket, class: WhClass) -> PrePost {
        self.cells[bucket as usize][class as usize]
    }

    fn cell_mut(&mut self, bucket: RelationBucket, class: WhClass) -> &mut PrePost {
        &mut self.cells[bucket as usize][class as usize]
    }

    pub fn merge(&mut self, other: &WhPositionTable) {
        for b in 0..8 {
            for c in 0..2 {
                self.cells[b][c].pre += other.cells[b][c].pre;
                self.cells[b][c].post += other.cells[b][c].post;
            }
        }
    }

    pub fn class_total(&self, class: WhClass) -> usize {
        RelationBucket::ALL
            .iter()
            .map(|&b| {
                let c = self.get(b, class);
                c.pre + c.post
            })
            .sum()
    }

    /// Adds one sentence's tokens.
    pub fn add_sentence(&mut self, sentence: &Sentence, options: &WhOptions) {
        let Some(tree) = sentence.tree() else {
            return;
        };
        let interrogative_heads: Vec<usize> = (0..tree.len())
            .filter(|&p| {
                let tok = &sentence.tokens()[tree.row(p)];
                tok.misc.get(CXN_KEY).is_some_and(|v| {
                    v.split('+')
                        .any(|name| name.split('-').next() == Some("Interrogative"))
                })
            })
            .collect();
        for p in 0..tree.len() {
            let tok = &sentence.tokens()[tree.row(p)];
            let Some(head) = tree.head(p) else {
                continue;
            };
            let pron_type = tok.feats.get("PronType");
            let class = if pron_type == Some("Int") {
                if interrogative_heads.iter().any(|&h| tree.dominates(h, p)) {
                    WhClass::Interrogative
                } else {
                    continue;
                }
            } else if options.baseline_upos.contains(&tok.upos) {
                WhClass::NonInterrogative
            } else {
                continue;
            };
            let bucket = RelationBucket::of(tok.base_deprel());
            let cell = self.cell_mut(bucket, class);
            if p < head {
                cell.pre += 1;
            } else {
                cell.post += 1;
            }
        }
    }
}

/// Which tokens without `PronType=Int` enter the non-interrogative baseline.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WhOptions {
    pub baseline_upos: Vec<String>,
}

impl Default for WhOptions {
    fn default() -> Self {
        WhOptions {
            baseline_upos: vec!["PRON".to_string()],
        }
    }
}

/// Buckets pronoun-class tokens by relation and position relative to their
/// head. A `PronType=Int` token is interrogative when it lies inside the
/// subtree of a token carrying an `Interrogative…` construction; such tokens
/// outside any interrogative are not counted.
pub fn wh_position_report(doc: &Document, options: &WhOptions) -> WhPositionTable {
    let mut table = WhPositionTable::default();
    for s in &doc.sentences {
        table.add_sentence(s, options);
    }
    table
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Tsv,
    /// One JSON object per line.
    StructuredLines,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown table format '{0}' (expected tsv or jsonl)")]
pub struct UnknownFormat(pub String);

impl FromStr for Format {
    type Err = UnknownFormat;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tsv" => Ok(Format::Tsv),
            "jsonl" | "json" | "structured-lines" => Ok(Format::StructuredLines),
            other => Err(UnknownFormat(other.to_string())),
        }
    }
}

pub enum Cell {
    Text(String),
    Count(usize),
}

pub trait Table {
    fn header(&self) -> Vec<&'static str>;
    fn rows(&self) -> Vec<Vec<Cell>>;
}

impl Table for CountTable {
    fn header(&self) -> Vec<&'static str> {
        vec!["construction", "count"]
    }

    fn rows(&self) -> Vec<Vec<Cell>> {
        self.rows
            .iter()
            .map(|(k, v)| vec![Cell::Text(k.clone()), Cell::Count(*v)])
            .collect()
    }
}

impl Table for WhPositionTable {
    fn header(&self) -> Vec<&'static str> {
        vec!["relation", "class", "pre", "post"]
    }

    fn rows(&self) -> Vec<Vec<Cell>> {
        let mut out = Vec::with_capacity(16);
        for b in RelationBucket::ALL {
            for c in [WhClass::NonInterrogative, WhClass::Interrogative] {
                let cell = self.get(b, c);
                out.push(vec![
                    Cell::Text(b.name().to_string()),
                    Cell::Text(c.name().to_string()),
                    Cell::Count(cell.pre),
                    Cell::Count(cell.post),
                ]);
            }
        }
        out
    }
}

pub fn emit_table(table: &dyn Table, format: Format) -> String {
    let header = table.header();
    let mut out = String::new();
    match format {
        Format::Tsv => {
            out.push_str(&header.join("\t"));
            out.push('\n');
            for row in table.rows() {
                let cols: Vec<String> = row
                    .into_iter()
                    .map(|c| match c {
                        Cell::Text(t) => t,
                        Cell::Count(n) => n.to_string(),
                    })
                    .collect();
                out.push_str(&cols.join("\t"));
                out.push('\n');
            }
        }
        Format::StructuredLines => {
            for row in table.rows() {
                let mut obj = serde_json::Map::new();
                for (k, c) in header.iter().zip(row) {
                    let v = match c {
                        Cell::Text(t) => serde_json::Value::from(t),
                        Cell::Count(n) => serde_json::Value::from(n),
                    };
                    obj.insert(k.to_string(), v);
                }
                let _ = writeln!(out, "{}", serde_json::Value::Object(obj));
            }
        }
    }
    out
}
