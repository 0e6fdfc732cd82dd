//! Universal Construction annotation for CoNLL-U treebanks.
//!
//! Reads and writes CoNLL-U, matches Grew-style dependency queries, writes
//! `Cxn`/`CxnElt` keys into MISC and summarizes annotated corpora.

pub mod annotator;
pub mod cli;
pub mod conllu;
pub mod exec;
pub mod matcher;
pub mod pattern;
pub mod querypack;
pub mod report;

pub use annotator::{annotate_document, head_of_match, strip_annotations, ConstructionInstance};
pub use conllu::{parse_document, serialize_document, Document, Sentence, Token, TokenId};
pub use exec::Execution;
pub use matcher::{brute_force_match, match_document, match_sentence, Binding, Matcher};
pub use pattern::{parse_query, parse_query_file, Query};
pub use querypack::{load_pack, pack_manifest, Pack};
