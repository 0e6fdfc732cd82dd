//! Writing construction instances into MISC.
//!
//! `Cxn=<name>` goes on the head token of each instance. Each construction
//! element adds `CxnElt=<name>:<headId>:<element>` on the element's token.
//! Several values on one token are joined with `+`, in query order.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::conllu::{Document, Sentence};
use crate::exec::{self, Execution};
use crate::matcher::{Binding, Matcher};
use crate::pattern::Query;

pub const CXN_KEY: &str = "Cxn";
pub const CXN_ELT_KEY: &str = "CxnElt";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstructionInstance {
    pub name: String,
    pub head: u32,
    /// (element name, element token id), in element-declaration order.
    pub elements: Vec<(String, u32)>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HeadError {
    #[error("cannot pick a head from an empty token set")]
    Empty,
    #[error("token {0} is not a word of a valid tree")]
    UnknownToken(u32),
}

/// The highest token in the tree (smallest depth); ties go to the smallest id.
pub fn head_of_match(sentence: &Sentence, tokens: &[u32]) -> Result<u32, HeadError> {
    let tree = sentence
        .tree()
        .ok_or_else(|| HeadError::UnknownToken(tokens.first().copied().unwrap_or(0)))?;
    let mut best: Option<(usize, u32)> = None;
    for &id in tokens {
        let pos = tree.position(id).ok_or(HeadError::UnknownToken(id))?;
        let key = (tree.depth(pos), id);
        if best.is_none_or(|b| key < b) {
            best = Some(key);
        }
    }
    best.map(|(_, id)| id).ok_or(HeadError::Empty)
}

pub fn instance_from_match(
    query: &Query,
    sentence: &Sentence,
    binding: &Binding,
) -> ConstructionInstance {
    let head = match query.head_node.as_deref().and_then(|h| binding.get(h)) {
        Some(id) => id,
        None => head_of_match(sentence, &binding.ids()).expect("binding of a matched sentence"),
    };
    let elements = query
        .elements
        .iter()
        .filter_map(|(node, role)| binding.get(node).map(|id| (role.clone(), id)))
        .collect();
    ConstructionInstance {
        name: query.name.clone(),
        head,
        elements,
    }
}

/// Instances per query, in query order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnnotationSummary {
    pub counts: Vec<(String, usize)>,
    /// Sentences left unannotated because their tree is broken.
    pub skipped: usize,
}

impl AnnotationSummary {
    pub fn count(&self, query: &str) -> Option<usize> {
        self.counts.iter().find(|(q, _)| q == query).map(|(_, c)| *c)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().map(|(_, c)| c).sum()
    }

    fn merge(&mut self, other: &[usize]) {
        for (slot, n) in self.counts.iter_mut().zip(other) {
            slot.1 += n;
        }
    }
}

/// Removes all `Cxn`/`CxnElt` keys; returns how many were removed.
pub fn strip_sentence(sentence: &mut Sentence) -> usize {
    sentence
        .all_misc_mut()
        .map(|m| m.remove(CXN_KEY) + m.remove(CXN_ELT_KEY))
        .sum()
}

pub fn strip_annotations(doc: &mut Document) -> usize {
    doc.sentences.iter_mut().map(strip_sentence).sum()
}

/// Re-annotates one sentence; returns instance counts per matcher.
pub fn annotate_sentence(sentence: &mut Sentence, matchers: &[Matcher]) -> Option<Vec<usize>> {
    strip_sentence(sentence);
    sentence.tree()?;
    let mut cxn: BTreeMap<u32, Vec<String>> = BTreeMap::new();
    let mut elts: BTreeMap<u32, Vec<String>> = BTreeMap::new();
    let mut counts = Vec::with_capacity(matchers.len());
    for m in matchers {
        let query = m.query();
        let mut heads: Vec<u32> = Vec::new();
        for binding in m.match_sentence(sentence) {
            let inst = instance_from_match(query, sentence, &binding);
            if !heads.contains(&inst.head) {
                heads.push(inst.head);
                let values = cxn.entry(inst.head).or_default();
                if !values.contains(&inst.name) {
                    values.push(inst.name.clone());
                }
            }
            for (role, id) in &inst.elements {
                let value = format!("{}:{}:{}", inst.name, inst.head, role);
                let values = elts.entry(*id).or_default();
                if !values.contains(&value) {
                    values.push(value);
                }
            }
        }
        counts.push(heads.len());
    }
    for (id, values) in cxn {
        if let Some(misc) = sentence.misc_mut(id) {
            misc.set(CXN_KEY, &values.join("+"));
        }
    }
    for (id, values) in elts {
        if let Some(misc) = sentence.misc_mut(id) {
            misc.set(CXN_ELT_KEY, &values.join("+"));
        }
    }
    Some(counts)
}

pub fn annotate_document(doc: &mut Document, queries: &[Query]) -> AnnotationSummary {
    annotate_document_with(doc, queries, Execution::default())
}

pub fn annotate_document_with(
    doc: &mut Document,
    queries: &[Query],
    execution: Execution,
) -> AnnotationSummary {
    let matchers: Vec<Matcher> = queries.iter().map(Matcher::new).collect();
    annotate_sentences(&mut doc.sentences, &matchers, execution)
}

/// Annotates a batch of sentences; used directly by the streaming CLI.
pub fn annotate_sentences(
    sentences: &mut [Sentence],
    matchers: &[Matcher],
    execution: Execution,
) -> AnnotationSummary {
    let mut summary = AnnotationSummary {
        counts: matchers.iter().map(|m| (m.query().name.clone(), 0)).collect(),
        skipped: 0,
    };
    for r in exec::map_mut(sentences, execution, |s| annotate_sentence(s, matchers)) {
        match r {
            Some(counts) => summary.merge(&counts),
            None => summary.skipped += 1,
        }
    }
    summary
}
