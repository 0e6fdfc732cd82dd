//! Bundled construction query packs, one per language.

use thiserror::Error;

use crate::pattern::{parse_query_file, Query, QueryError};

const BUNDLED: &[(&str, &str)] = &[
    ("en", include_str!("../packs/en.cxn")),
    ("de", include_str!("../packs/de.cxn")),
    ("es", include_str!("../packs/es.cxn")),
    ("he", include_str!("../packs/he.cxn")),
    ("zh", include_str!("../packs/zh.cxn")),
    ("sv", include_str!("../packs/sv.cxn")),
    ("fr", include_str!("../packs/fr.cxn")),
];

/// Languages the project has looked at but ships no queries for.
pub const ABSENT: &[&str] = &["hi", "pt", "cop"];

#[derive(Clone, Debug, PartialEq)]
pub struct Pack {
    pub language: String,
    pub queries: Vec<Query>,
    /// (query name, note) for queries that carry one.
    pub notes: Vec<(String, String)>,
}

impl Pack {
    pub fn from_source(language: &str, text: &str) -> Result<Pack, QueryError> {
        let queries = parse_query_file(text)?;
        let notes = queries
            .iter()
            .filter_map(|q| q.note.clone().map(|n| (q.name.clone(), n)))
            .collect();
        Ok(Pack {
            language: language.to_string(),
            queries,
            notes,
        })
    }

    pub fn query(&self, name: &str) -> Option<&Query> {
        self.queries.iter().find(|q| q.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.queries.iter().map(|q| q.name.clone()).collect()
    }
}

#[derive(Debug, Error)]
pub enum PackError {
    #[error("unknown pack: {0}")]
    Unknown(String),
    #[error("pack {language}: {source}")]
    Query {
        language: String,
        #[source]
        source: QueryError,
    },
}

pub fn languages() -> Vec<&'static str> {
    BUNDLED.iter().map(|(l, _)| *l).collect()
}

pub fn pack_source(language: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(l, _)| *l == language).map(|(_, t)| *t)
}

pub fn load_pack(language: &str) -> Result<Pack, PackError> {
    let text = pack_source(language).ok_or_else(|| PackError::Unknown(language.to_string()))?;
    Pack::from_source(language, text).map_err(|source| PackError::Query {
        language: language.to_string(),
        source,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub language: String,
    /// Empty for absent languages.
    pub queries: Vec<String>,
    pub bundled: bool,
}

pub fn pack_manifest() -> Vec<ManifestEntry> {
    let mut out: Vec<ManifestEntry> = BUNDLED
        .iter()
        .map(|(l, _)| ManifestEntry {
            language: l.to_string(),
            queries: load_pack(l).map(|p| p.names()).unwrap_or_default(),
            bundled: true,
        })
        .collect();
    out.extend(ABSENT.iter().map(|l| ManifestEntry {
        language: l.to_string(),
        queries: Vec::new(),
        bundled: false,
    }));
    out
}
