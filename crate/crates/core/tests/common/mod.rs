#![allow(dead_code)]

use std::fs;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use ucxn::conllu::{Features, Misc, Sentence, Token, TokenId};
use ucxn::pattern::{parse_query, Query};
use ucxn::querypack::{languages, load_pack};
use ucxn::{parse_document, Document};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture(name: &str) -> String {
    fs::read_to_string(fixture_dir().join(name)).unwrap_or_else(|e| panic!("{}: {}", name, e))
}

/// Every well-formed fixture file, sorted by name.
pub fn corpus_files() -> Vec<(String, String)> {
    let mut names: Vec<String> = fs::read_dir(fixture_dir())
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".conllu") && n != "broken.conllu")
        .collect();
    names.sort();
    names.into_iter().map(|n| (n.clone(), fixture(&n))).collect()
}

pub fn mini(lang: &str) -> Document {
    parse_document(&fixture(&format!("mini_{}.conllu", lang))).unwrap()
}

pub fn sentence_by_id<'d>(doc: &'d Document, id: &str) -> &'d Sentence {
    doc.sentences
        .iter()
        .find(|s| s.sent_id() == Some(id))
        .unwrap_or_else(|| panic!("no sentence {}", id))
}

pub fn pack_query(lang: &str, name: &str) -> Query {
    load_pack(lang).unwrap().query(name).unwrap().clone()
}

pub fn all_pack_queries() -> Vec<(String, Query)> {
    languages()
        .into_iter()
        .flat_map(|l| {
            load_pack(l)
                .unwrap()
                .queries
                .into_iter()
                .map(move |q| (l.to_string(), q))
        })
        .collect()
}

/// Every fixture sentence with a valid tree and at most `max_words` words.
pub fn small_sentences(max_words: usize) -> Vec<Sentence> {
    corpus_files()
        .iter()
        .flat_map(|(_, text)| parse_document(text).unwrap().sentences)
        .filter(|s| s.tree().is_some() && s.words().count() <= max_words)
        .collect()
}

/// Inserts a new syntactic word so that it gets id `at`, renumbering the
/// rest. The enhanced `DEPS` column of shifted rows is reset to `_`.
pub fn insert_word(sentence: &Sentence, at: u32, mut new: Token) -> Sentence {
    let shift = |id: u32| if id >= at { id + 1 } else { id };
    let shift_head = |h: u32| if h >= at { h + 1 } else { h };
    new.head = new.head.map(shift_head);
    new.id = TokenId::Word(at);
    let mut tokens = Vec::new();
    let mut inserted = false;
    for t in sentence.tokens() {
        let starts_at = match t.id {
            TokenId::Word(i) => i == at,
            TokenId::Range(a, _) => a == at,
            TokenId::Empty(_, _) => false,
        };
        if starts_at && !inserted {
            tokens.push(new.clone());
            inserted = true;
        }
        let mut t = t.clone();
        t.id = match t.id {
            TokenId::Word(i) => TokenId::Word(shift(i)),
            TokenId::Range(a, b) => TokenId::Range(shift(a), shift(b)),
            TokenId::Empty(i, k) => TokenId::Empty(if i >= at { i + 1 } else { i }, k),
        };
        t.head = t.head.map(shift_head);
        if t.deps != "_" {
            t.deps = "_".to_string();
        }
        tokens.push(t);
    }
    if !inserted {
        tokens.push(new);
    }
    Sentence::new(sentence.comments.clone(), tokens)
}

pub fn word(form: &str, upos: &str, head: u32, deprel: &str) -> Token {
    Token::word(0, form, form, upos, head, deprel)
}

const UPOS: &[&str] = &["NOUN", "VERB", "ADJ", "ADP", "DET", "PRON", "AUX", "ADV", "PUNCT"];
const DEPRELS: &[&str] = &[
    "nsubj", "obj", "obl", "nmod", "amod", "det", "case", "advmod", "aux", "mark", "advcl",
    "fixed", "punct", "nsubj:pass", "obl:tmod", "expl",
];
const LEMMAS: &[&str] = &["day", "be", "have", "if", "there", "to", "cat", "?", "es", "geben"];

/// A random valid tree: each word attaches to an earlier word of a random
/// permutation, so there are no cycles and exactly one root.
pub fn random_tree<R: Rng>(rng: &mut R, n: usize) -> Sentence {
    let mut order: Vec<u32> = (1..=n as u32).collect();
    order.shuffle(rng);
    let mut heads = vec![0u32; n + 1];
    for k in 1..n {
        heads[order[k] as usize] = order[rng.gen_range(0..k)];
    }
    let tokens = (1..=n as u32)
        .map(|id| {
            let h = heads[id as usize];
            let rel = if h == 0 { "root" } else { DEPRELS.choose(rng).unwrap() };
            let lemma = *LEMMAS.choose(rng).unwrap();
            let mut t = Token::word(id, lemma, lemma, UPOS.choose(rng).unwrap(), h, rel);
            if rng.gen_bool(0.3) {
                t.feats = Features::parse(["PronType=Int", "Definite=Ind", "Definite=Def", "Number=Sing"].choose(rng).unwrap())
                    .unwrap();
            }
            t
        })
        .collect();
    Sentence::new(vec![], tokens)
}

/// Random edits that keep the tree valid: reattachment, relabelling,
/// lemma and UPOS changes, feature removal.
pub fn mutate<R: Rng>(rng: &mut R, sentence: &Sentence) -> Sentence {
    let mut tokens: Vec<Token> = sentence.tokens().to_vec();
    let words: Vec<usize> = (0..tokens.len())
        .filter(|&i| matches!(tokens[i].id, TokenId::Word(_)))
        .collect();
    let lemmas: Vec<String> = words.iter().map(|&i| tokens[i].lemma.clone()).collect();
    for _ in 0..rng.gen_range(0..4) {
        let i = *words.choose(rng).unwrap();
        match rng.gen_range(0..5) {
            0 => {
                // Reattach to a word outside its own subtree.
                let id = tokens[i].id.word().unwrap();
                if tokens[i].head == Some(0) {
                    continue;
                }
                let candidates: Vec<u32> = words
                    .iter()
                    .map(|&w| tokens[w].id.word().unwrap())
                    .filter(|&c| c != id && !descends(&tokens, c, id))
                    .collect();
                if let Some(&h) = candidates.choose(rng) {
                    tokens[i].head = Some(h);
                }
            }
            1 => {
                if tokens[i].head != Some(0) {
                    tokens[i].deprel = DEPRELS.choose(rng).unwrap().to_string();
                }
            }
            2 => tokens[i].lemma = lemmas.choose(rng).unwrap().clone(),
            3 => tokens[i].upos = UPOS.choose(rng).unwrap().to_string(),
            _ => tokens[i].feats = Features::default(),
        }
    }
    for t in &mut tokens {
        t.misc = Misc::default();
    }
    Sentence::new(sentence.comments.clone(), tokens)
}

fn descends(tokens: &[Token], mut id: u32, ancestor: u32) -> bool {
    let head_of = |id: u32| {
        tokens
            .iter()
            .find(|t| t.id == TokenId::Word(id))
            .and_then(|t| t.head)
    };
    for _ in 0..tokens.len() + 1 {
        match head_of(id) {
            Some(0) | None => return false,
            Some(h) if h == ancestor => return true,
            Some(h) => id = h,
        }
    }
    false
}

/// A random query whose vocabulary is drawn from `sentence`, so that it
/// matches often enough to be interesting.
pub fn random_query<R: Rng>(rng: &mut R, sentence: &Sentence) -> Query {
    let words: Vec<&Token> = sentence.words().collect();
    let k = rng.gen_range(1..=4usize);
    let names: Vec<String> = (0..k).map(|i| format!("N{}", i)).collect();
    let mut body = String::from("pattern { ");
    for n in &names {
        body.push_str(&format!("{}[{}]; ", n, random_node(rng, &words)));
    }
    for _ in 0..rng.gen_range(0..k) {
        let (a, b) = two(rng, &names);
        body.push_str(&format!("{}-[{}]->{}; ", a, random_labels(rng, &words), b));
    }
    if k > 1 && rng.gen_bool(0.4) {
        let (a, b) = two(rng, &names);
        body.push_str(&format!("{} {} {}; ", a, if rng.gen_bool(0.5) { "<" } else { "<<" }, b));
    }
    if k > 1 && rng.gen_bool(0.2) {
        let (a, b) = two(rng, &names);
        body.push_str(&format!("{}.lemma = {}.lemma; ", a, b));
    }
    body.push_str("} ");
    for _ in 0..rng.gen_range(0..3) {
        let shared = names.choose(rng).unwrap();
        let clause = match rng.gen_range(0..4) {
            0 => format!("{}-[{}]->W; W[{}];", shared, random_labels(rng, &words), random_node(rng, &words)),
            1 => format!("W-[{}]->{};", random_labels(rng, &words), shared),
            2 => format!("{}[{}];", shared, random_node(rng, &words)),
            _ => format!("W[{}]; W << {};", random_node(rng, &words), shared),
        };
        body.push_str(&format!("without {{ {} }} ", clause));
    }
    let text = format!("cxn Random {{ {}}}", body);
    parse_query(&text).unwrap_or_else(|e| panic!("{}: {}", text, e))
}

fn two<'a, R: Rng>(rng: &mut R, names: &'a [String]) -> (&'a str, &'a str) {
    let mut pair: Vec<&String> = names.choose_multiple(rng, 2).collect();
    if pair.len() == 1 {
        pair.push(pair[0]);
    }
    (pair[0], pair[1])
}

fn quote(v: &str) -> String {
    format!("\"{}\"", v.replace('\\', "\\\\").replace('"', "\\\""))
}

fn random_node<R: Rng>(rng: &mut R, words: &[&Token]) -> String {
    let w = words.choose(rng).unwrap();
    match rng.gen_range(0..7) {
        0 | 1 => String::new(),
        2 => format!("upos={}", w.upos),
        3 => format!("lemma={}", quote(&w.lemma)),
        4 => format!("upos<>{}", w.upos),
        5 => match w.feats.iter().next() {
            Some((k, v)) => format!("{}={}", k, v),
            None => "Definite".to_string(),
        },
        _ => format!("upos={}|{}, form<>{}", w.upos, UPOS.choose(rng).unwrap(), quote(&w.form)),
    }
}

fn random_labels<R: Rng>(rng: &mut R, words: &[&Token]) -> String {
    let w = words.choose(rng).unwrap();
    match rng.gen_range(0..3) {
        0 => w.deprel.clone(),
        1 => format!("{}:*", w.base_deprel()),
        _ => format!("{}|{}", w.deprel, DEPRELS.choose(rng).unwrap()),
    }
}
