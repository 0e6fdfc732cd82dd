//! Query evaluation over dependency trees.
//!
//! A binding assigns every positive node a distinct syntactic word. A
//! binding survives a `without` clause when no injective extension of it
//! (new clause nodes bound to words not used by the binding) satisfies the
//! clause.
//!
//! [`Matcher`] uses backtracking with candidate ordering; [`brute_force_match`]
//! enumerates every assignment and is kept as the reference semantics.

use serde::Serialize;
use thiserror::Error;

use crate::conllu::{Document, Sentence, Token, Tree};
use crate::exec::{self, Execution};
use crate::pattern::{
    Attr, EqualityConstraint, FeatureClause, Label, OrderConstraint, OrderKind, PatternClause,
    Query,
};

/// Positive node names mapped to word ids, in node-declaration order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Binding(Vec<(String, u32)>);

impl Binding {
    pub fn get(&self, name: &str) -> Option<u32> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, id)| *id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.0.iter().map(|(n, id)| (n.as_str(), *id))
    }

    /// Bound ids in declaration order.
    pub fn ids(&self) -> Vec<u32> {
        self.0.iter().map(|(_, id)| *id).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MatchResult {
    pub sentence_id: String,
    pub query: String,
    pub binding: Binding,
}

impl MatchResult {
    /// TSV row: sentence id, query name, then `node=id` pairs.
    pub fn to_tsv(&self) -> String {
        let pairs: Vec<String> = self
            .binding
            .iter()
            .map(|(n, id)| format!("{}={}", n, id))
            .collect();
        format!("{}\t{}\t{}", self.sentence_id, self.query, pairs.join(" "))
    }

    pub fn to_json(&self) -> String {
        let nodes: serde_json::Map<String, serde_json::Value> = self
            .binding
            .iter()
            .map(|(n, id)| (n.to_string(), serde_json::Value::from(id)))
            .collect();
        serde_json::json!({
            "sentence": self.sentence_id,
            "query": self.query,
            "nodes": nodes,
        })
        .to_string()
    }
}

/// Matches of one query over a document.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DocumentMatches {
    pub matches: Vec<MatchResult>,
    /// Ids of sentences skipped because their tree is broken.
    pub skipped: Vec<String>,
}

/// Id used for reporting: `# sent_id`, else `#<1-based index>`.
pub fn sentence_label(sentence: &Sentence, index: usize) -> String {
    match sentence.sent_id() {
        Some(id) => id.to_string(),
        None => format!("#{}", index + 1),
    }
}

pub fn attr_value<'t>(token: &'t Token, attr: &Attr) -> Option<&'t str> {
    match attr {
        Attr::Form => Some(&token.form),
        Attr::Lemma => Some(&token.lemma),
        Attr::Upos => Some(&token.upos),
        Attr::Xpos => token.xpos(),
        Attr::Feat(name) => token.feats.get(name),
    }
}

fn clauses_hold(token: &Token, clauses: &[FeatureClause]) -> bool {
    clauses.iter().all(|c| c.holds(attr_value(token, &c.attr)))
}

#[derive(Debug, Clone)]
struct Edge {
    source: usize,
    target: usize,
    labels: Vec<Label>,
}

#[derive(Debug, Clone)]
struct Order {
    left: usize,
    right: usize,
    kind: OrderKind,
}

#[derive(Debug, Clone)]
struct Equality {
    left: (usize, Attr),
    right: (usize, Attr),
}

/// A clause compiled to node indices. Nodes `0..fixed` are bound before the
/// search starts; the rest are searched.
#[derive(Debug, Clone)]
struct Problem {
    clauses: Vec<Vec<FeatureClause>>,
    fixed: usize,
    edges: Vec<Edge>,
    orders: Vec<Order>,
    equalities: Vec<Equality>,
}

impl Problem {
    fn compile(clause: &PatternClause, outer: Option<&PatternClause>) -> Problem {
        let mut names: Vec<&str> = Vec::new();
        let mut clauses: Vec<Vec<FeatureClause>> = Vec::new();
        if let Some(outer) = outer {
            for n in &outer.nodes {
                names.push(&n.name);
                clauses.push(Vec::new());
            }
        }
        let fixed = names.len();
        for n in &clause.nodes {
            match names.iter().position(|x| *x == n.name) {
                Some(i) => clauses[i].extend(n.clauses.iter().cloned()),
                None => {
                    names.push(&n.name);
                    clauses.push(n.clauses.clone());
                }
            }
        }
        let idx = |name: &str| {
            names
                .iter()
                .position(|x| *x == name)
                .unwrap_or_else(|| panic!("node {} not declared in query", name))
        };
        Problem {
            fixed,
            edges: clause
                .edges
                .iter()
                .map(|e| Edge {
                    source: idx(&e.source),
                    target: idx(&e.target),
                    labels: e.labels.clone(),
                })
                .collect(),
            orders: clause
                .orders
                .iter()
                .map(|o: &OrderConstraint| Order {
                    left: idx(&o.left),
                    right: idx(&o.right),
                    kind: o.kind,
                })
                .collect(),
            equalities: clause
                .equalities
                .iter()
                .map(|e: &EqualityConstraint| Equality {
                    left: (idx(&e.left.0), e.left.1.clone()),
                    right: (idx(&e.right.0), e.right.1.clone()),
                })
                .collect(),
            clauses,
        }
    }

    fn len(&self) -> usize {
        self.clauses.len()
    }
}

#[derive(Clone, Copy)]
enum Check {
    Edge(usize),
    Order(usize),
    Equality(usize),
}

/// Per-sentence search state.
struct Search<'a> {
    problem: &'a Problem,
    sentence: &'a Sentence,
    tree: &'a Tree,
    /// Free nodes in search order.
    order: Vec<usize>,
    /// Per search step: an edge to an earlier node used to generate candidates.
    generators: Vec<Option<(usize, bool)>>,
    /// Per search step: constraints that become checkable at that step.
    checks: Vec<Vec<Check>>,
    candidates: Vec<Vec<usize>>,
    allowed: Vec<Vec<bool>>,
    assign: Vec<usize>,
    used: Vec<bool>,
}

impl<'a> Search<'a> {
    /// Prepares a search; `None` when some node has no candidate at all.
    fn new(problem: &'a Problem, sentence: &'a Sentence, tree: &'a Tree) -> Option<Search<'a>> {
        let n = tree.len();
        let token = |pos: usize| &sentence.tokens()[tree.row(pos)];
        let mut allowed = Vec::with_capacity(problem.len());
        let mut candidates = Vec::with_capacity(problem.len());
        for (v, clauses) in problem.clauses.iter().enumerate() {
            if v < problem.fixed {
                allowed.push(Vec::new());
                candidates.push(Vec::new());
                continue;
            }
            let ok: Vec<bool> = (0..n).map(|p| clauses_hold(token(p), clauses)).collect();
            let cands: Vec<usize> = (0..n).filter(|&p| ok[p]).collect();
            if cands.is_empty() {
                return None;
            }
            allowed.push(ok);
            candidates.push(cands);
        }

        // Greedy order: smallest candidate set first, then prefer nodes
        // reachable through an edge from an already placed node.
        let mut placed: Vec<bool> = (0..problem.len()).map(|v| v < problem.fixed).collect();
        let mut order = Vec::new();
        while order.len() < problem.len() - problem.fixed {
            let connected = |v: usize| {
                problem.edges.iter().any(|e| {
                    (e.target == v && placed[e.source]) || (e.source == v && placed[e.target])
                })
            };
            let next = (problem.fixed..problem.len())
                .filter(|&v| !placed[v])
                .min_by_key(|&v| (!connected(v), candidates[v].len(), v))
                .unwrap();
            placed[next] = true;
            order.push(next);
        }

        let mut step_of = vec![usize::MAX; problem.len()];
        for (s, &v) in order.iter().enumerate() {
            step_of[v] = s;
        }
        // Fixed nodes are available before step 0.
        let avail = |v: usize| if v < problem.fixed { None } else { Some(step_of[v]) };

        let mut generators = vec![None; order.len()];
        for (s, &v) in order.iter().enumerate() {
            let earlier = |u: usize| avail(u).is_none_or(|su| su < s);
            generators[s] = problem.edges.iter().find_map(|e| {
                if e.target == v && e.source != v && earlier(e.source) {
                    Some((e.source, true))
                } else if e.source == v && e.target != v && earlier(e.target) {
                    Some((e.target, false))
                } else {
                    None
                }
            });
        }

        let mut checks = vec![Vec::new(); order.len() + 1];
        let slot = |nodes: &[usize]| -> usize {
            nodes
                .iter()
                .map(|&v| avail(v).map_or(0, |s| s + 1))
                .max()
                .unwrap_or(0)
        };
        for (i, e) in problem.edges.iter().enumerate() {
            checks[slot(&[e.source, e.target])].push(Check::Edge(i));
        }
        for (i, o) in problem.orders.iter().enumerate() {
            checks[slot(&[o.left, o.right])].push(Check::Order(i));
        }
        for (i, q) in problem.equalities.iter().enumerate() {
            checks[slot(&[q.left.0, q.right.0])].push(Check::Equality(i));
        }

        Some(Search {
            problem,
            sentence,
            tree,
            order,
            generators,
            checks,
            candidates,
            allowed,
            assign: vec![usize::MAX; problem.len()],
            used: vec![false; n],
        })
    }

    fn token(&self, pos: usize) -> &'a Token {
        &self.sentence.tokens()[self.tree.row(pos)]
    }

    fn holds(&self, check: Check) -> bool {
        let a = &self.assign;
        match check {
            Check::Edge(i) => {
                let e = &self.problem.edges[i];
                let (s, t) = (a[e.source], a[e.target]);
                self.tree.head(t) == Some(s) && {
                    let rel = &self.token(t).deprel;
                    e.labels.iter().any(|l| l.matches(rel))
                }
            }
            Check::Order(i) => {
                let o = &self.problem.orders[i];
                let (l, r) = (a[o.left], a[o.right]);
                match o.kind {
                    OrderKind::Immediate => r == l + 1,
                    OrderKind::Precedes => l < r,
                }
            }
            Check::Equality(i) => {
                let q = &self.problem.equalities[i];
                let lv = attr_value(self.token(a[q.left.0]), &q.left.1);
                let rv = attr_value(self.token(a[q.right.0]), &q.right.1);
                matches!((lv, rv), (Some(x), Some(y)) if x == y)
            }
        }
    }

    /// Binds fixed nodes; returns false when a check on fixed nodes fails.
    fn bind_fixed(&mut self, positions: &[usize]) -> bool {
        for (v, &p) in positions.iter().enumerate() {
            self.assign[v] = p;
            self.used[p] = true;
            if !clauses_hold(self.token(p), &self.problem.clauses[v]) {
                return false;
            }
        }
        let checks = std::mem::take(&mut self.checks[0]);
        let ok = checks.iter().all(|&c| self.holds(c));
        self.checks[0] = checks;
        ok
    }

    /// True when the positive assignment has an extension satisfying the clause.
    fn extends(&mut self, positive: &[usize]) -> bool {
        self.used.iter_mut().for_each(|u| *u = false);
        self.assign.iter_mut().for_each(|a| *a = usize::MAX);
        if !self.bind_fixed(positive) {
            return false;
        }
        let mut found = false;
        self.run(0, &mut |_| {
            found = true;
            false
        });
        found
    }

    /// Depth-first search; `visit` returns false to stop.
    fn run(&mut self, step: usize, visit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if step == self.order.len() {
            return visit(&self.assign);
        }
        let v = self.order[step];
        let tree = self.tree;
        let head_slot: [usize; 1];
        let owned: Vec<usize>;
        let cands: &[usize] = match self.generators[step] {
            Some((u, true)) => tree.children(self.assign[u]),
            Some((u, false)) => match tree.head(self.assign[u]) {
                Some(h) => {
                    head_slot = [h];
                    &head_slot
                }
                None => &[],
            },
            None => {
                owned = self.candidates[v].clone();
                &owned
            }
        };
        for &c in cands {
            if self.used[c] || !self.allowed[v][c] {
                continue;
            }
            self.assign[v] = c;
            let ok = self.checks[step + 1].iter().all(|&chk| self.holds(chk));
            if ok {
                self.used[c] = true;
                let go_on = self.run(step + 1, visit);
                self.used[c] = false;
                if !go_on {
                    self.assign[v] = usize::MAX;
                    return false;
                }
            }
            self.assign[v] = usize::MAX;
        }
        true
    }
}

/// A query prepared for repeated matching.
#[derive(Debug, Clone)]
pub struct Matcher {
    query: Query,
    positive: Problem,
    withouts: Vec<Problem>,
}

impl Matcher {
    pub fn new(query: &Query) -> Matcher {
        Matcher {
            query: query.clone(),
            positive: Problem::compile(&query.positive, None),
            withouts: query
                .withouts
                .iter()
                .map(|w| Problem::compile(w, Some(&query.positive)))
                .collect(),
        }
    }

    pub fn query(&self) -> &Query {
        &self.query
    }

    /// All bindings in canonical order. Sentences without a valid tree
    /// have no matches.
    pub fn match_sentence(&self, sentence: &Sentence) -> Vec<Binding> {
        let Some(tree) = sentence.tree() else {
            return Vec::new();
        };
        let Some(mut search) = Search::new(&self.positive, sentence, tree) else {
            return Vec::new();
        };
        let mut found: Vec<Vec<usize>> = Vec::new();
        if search.checks[0].iter().all(|&c| search.holds(c)) {
            search.run(0, &mut |assign| {
                found.push(assign.to_vec());
                true
            });
        }
        if !found.is_empty() && !self.withouts.is_empty() {
            let mut negatives: Vec<Search> = self
                .withouts
                .iter()
                .filter_map(|w| Search::new(w, sentence, tree))
                .collect();
            found.retain(|assign| !negatives.iter_mut().any(|s| s.extends(assign)));
        }
        let mut ids: Vec<Vec<u32>> = found
            .into_iter()
            .map(|a| a.into_iter().map(|p| tree.id(p)).collect())
            .collect();
        ids.sort();
        ids.into_iter().map(|ids| self.binding(&ids)).collect()
    }

    fn binding(&self, ids: &[u32]) -> Binding {
        Binding(
            self.query
                .positive
                .nodes
                .iter()
                .zip(ids)
                .map(|(n, &id)| (n.name.clone(), id))
                .collect(),
        )
    }

    pub fn match_document(&self, doc: &Document, execution: Execution) -> DocumentMatches {
        let per_sentence = exec::map_indexed(&doc.sentences, execution, |i, s| {
            let label = sentence_label(s, i);
            if s.tree().is_none() {
                return Err(label);
            }
            Ok(self
                .match_sentence(s)
                .into_iter()
                .map(|binding| MatchResult {
                    sentence_id: label.clone(),
                    query: self.query.name.clone(),
                    binding,
                })
                .collect::<Vec<_>>())
        });
        let mut out = DocumentMatches::default();
        for r in per_sentence {
            match r {
                Ok(ms) => out.matches.extend(ms),
                Err(label) => out.skipped.push(label),
            }
        }
        out
    }
}

/// All matches of `query` in `sentence`, in canonical order.
pub fn match_sentence(query: &Query, sentence: &Sentence) -> Vec<Binding> {
    Matcher::new(query).match_sentence(sentence)
}

pub fn match_document(query: &Query, doc: &Document) -> DocumentMatches {
    Matcher::new(query).match_document(doc, Execution::default())
}

/// Largest sentence the brute-force oracle accepts.
pub const BRUTE_FORCE_MAX_WORDS: usize = 14;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("sentence has {0} words; brute force is limited to {BRUTE_FORCE_MAX_WORDS}")]
    TooLarge(usize),
}

/// Reference matcher: enumerates every injective assignment of the positive
/// nodes, then filters by every constraint and every `without` clause.
///
/// Reads heads and ids straight from the rows; does not use the tree index.
pub fn brute_force_match(query: &Query, sentence: &Sentence) -> Result<Vec<Binding>, OracleError> {
    let words: Vec<&Token> = sentence.words().collect();
    if words.len() > BRUTE_FORCE_MAX_WORDS {
        return Err(OracleError::TooLarge(words.len()));
    }
    let id_of = |w: &Token| w.id.word().unwrap();
    let positive: Vec<&str> = query.positive.nodes.iter().map(|n| n.name.as_str()).collect();

    let mut results = Vec::new();
    let mut assignment: Vec<(String, usize)> = Vec::new();
    enumerate_injective(&positive, words.len(), &[], &mut assignment, &mut |full| {
        if !clause_satisfied(&query.positive, full, &words) {
            return;
        }
        for w in &query.withouts {
            let new_names: Vec<&str> = w
                .nodes
                .iter()
                .map(|n| n.name.as_str())
                .filter(|n| !positive.contains(n))
                .collect();
            let taken: Vec<usize> = full.iter().map(|(_, p)| *p).collect();
            let mut ext = full.to_vec();
            let mut hit = false;
            enumerate_injective(&new_names, words.len(), &taken, &mut ext, &mut |all| {
                if !hit && clause_satisfied(w, all, &words) {
                    hit = true;
                }
            });
            if hit {
                return;
            }
        }
        let ids: Vec<u32> = full.iter().map(|(_, p)| id_of(words[*p])).collect();
        results.push(ids);
    });
    results.sort();
    Ok(results
        .into_iter()
        .map(|ids| {
            Binding(
                positive
                    .iter()
                    .zip(ids)
                    .map(|(n, id)| (n.to_string(), id))
                    .collect(),
            )
        })
        .collect())
}

fn enumerate_injective(
    names: &[&str],
    n: usize,
    taken: &[usize],
    acc: &mut Vec<(String, usize)>,
    f: &mut dyn FnMut(&[(String, usize)]),
) {
    let Some((first, rest)) = names.split_first() else {
        f(acc);
        return;
    };
    for p in 0..n {
        if taken.contains(&p) || acc.iter().any(|(_, q)| *q == p) {
            continue;
        }
        acc.push((first.to_string(), p));
        enumerate_injective(rest, n, taken, acc, f);
        acc.pop();
    }
}

/// Checks every constraint of `clause` under a complete assignment.
fn clause_satisfied(clause: &PatternClause, assign: &[(String, usize)], words: &[&Token]) -> bool {
    let pos = |name: &str| assign.iter().find(|(n, _)| n == name).map(|(_, p)| *p).unwrap();
    let tok = |name: &str| words[pos(name)];
    let id = |name: &str| tok(name).id.word().unwrap();
    clause.nodes.iter().all(|n| {
        n.clauses
            .iter()
            .all(|c| c.holds(attr_value(tok(&n.name), &c.attr)))
    }) && clause.edges.iter().all(|e| {
        let dep = tok(&e.target);
        dep.head == Some(id(&e.source)) && e.accepts(&dep.deprel)
    }) && clause.orders.iter().all(|o| match o.kind {
        OrderKind::Immediate => pos(&o.right) == pos(&o.left) + 1,
        OrderKind::Precedes => id(&o.left) < id(&o.right),
    }) && clause.equalities.iter().all(|q| {
        match (
            attr_value(tok(&q.left.0), &q.left.1),
            attr_value(tok(&q.right.0), &q.right.1),
        ) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    })
}
