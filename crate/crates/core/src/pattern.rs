//! Construction queries: a Grew-compatible pattern language.
//!
//! ```text
//! cxn Existential-Haber {
//!   meta { head=PRED; elt PIV=Pivot; }
//!   pattern {
//!     PRED[lemma=haber];
//!     PRED-[obj]->PIV;
//!     DET[upos=DET, Definite=Ind];
//!     PIV-[det]->DET;
//!   }
//!   without { PIV-[amod]->A; }
//! }
//! ```
//!
//! As in Grew, a node first mentioned by an edge is declared implicitly with
//! no feature constraints. Order constraints, equalities, `head` and `elt`
//! must refer to nodes that are declared somewhere in scope. `%` starts a
//! line comment.

use std::fmt;

use thiserror::Error;

/// Attribute a feature clause or equality inspects.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Attr {
    Form,
    Lemma,
    Upos,
    Xpos,
    /// A morphological feature from FEATS, e.g. `PronType`.
    Feat(String),
}

impl Attr {
    fn from_name(name: &str) -> Attr {
        match name {
            "form" => Attr::Form,
            "lemma" => Attr::Lemma,
            "upos" => Attr::Upos,
            "xpos" => Attr::Xpos,
            other => Attr::Feat(other.to_string()),
        }
    }
}

impl fmt::Display for Attr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Attr::Form => f.write_str("form"),
            Attr::Lemma => f.write_str("lemma"),
            Attr::Upos => f.write_str("upos"),
            Attr::Xpos => f.write_str("xpos"),
            Attr::Feat(name) => f.write_str(name),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FeatureTest {
    /// Attribute present with one of the values.
    Equals(Vec<String>),
    /// Attribute missing, or present with none of the values.
    NotEquals(Vec<String>),
    Present,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureClause {
    pub attr: Attr,
    pub test: FeatureTest,
}

impl FeatureClause {
    /// Evaluates the clause against an attribute value (`None` = missing).
    pub fn holds(&self, value: Option<&str>) -> bool {
        match (&self.test, value) {
            (FeatureTest::Present, v) => v.is_some(),
            (FeatureTest::Equals(vals), Some(v)) => vals.iter().any(|x| x == v),
            (FeatureTest::Equals(_), None) => false,
            (FeatureTest::NotEquals(vals), Some(v)) => !vals.iter().any(|x| x == v),
            (FeatureTest::NotEquals(_), None) => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodePattern {
    pub name: String,
    pub clauses: Vec<FeatureClause>,
}

/// Relation label pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Label {
    /// Exactly this relation, e.g. `nsubj` or `obl:lmod`.
    Exact(String),
    /// `base:*`: the base relation with or without any subtype.
    AnySubtype(String),
}

impl Label {
    pub fn matches(&self, deprel: &str) -> bool {
        match self {
            Label::Exact(l) => l == deprel,
            Label::AnySubtype(base) => {
                deprel == base
                    || (deprel.len() > base.len()
                        && deprel.starts_with(base.as_str())
                        && deprel.as_bytes()[base.len()] == b':')
            }
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Exact(l) => f.write_str(l),
            Label::AnySubtype(b) => write!(f, "{}:*", b),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgePattern {
    pub source: String,
    pub target: String,
    pub labels: Vec<Label>,
}

impl EdgePattern {
    pub fn accepts(&self, deprel: &str) -> bool {
        self.labels.iter().any(|l| l.matches(deprel))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrderKind {
    /// `A < B`: B is the word right after A.
    Immediate,
    /// `A << B`: A comes somewhere before B.
    Precedes,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderConstraint {
    pub left: String,
    pub right: String,
    pub kind: OrderKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EqualityConstraint {
    pub left: (String, Attr),
    pub right: (String, Attr),
}

/// The body of a `pattern { … }` or `without { … }` block.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PatternClause {
    pub nodes: Vec<NodePattern>,
    pub edges: Vec<EdgePattern>,
    pub orders: Vec<OrderConstraint>,
    pub equalities: Vec<EqualityConstraint>,
}

impl PatternClause {
    pub fn node(&self, name: &str) -> Option<&NodePattern> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
            && self.edges.is_empty()
            && self.orders.is_empty()
            && self.equalities.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    /// Hierarchical construction name, e.g. `Interrogative-Polar-Direct`.
    pub name: String,
    pub positive: PatternClause,
    pub withouts: Vec<PatternClause>,
    /// Positive node whose token receives `Cxn`; when absent the head is
    /// derived from the tree.
    pub head_node: Option<String>,
    /// Positive node → construction element name, in declaration order.
    pub elements: Vec<(String, String)>,
    pub note: Option<String>,
}

impl Query {
    /// Family segment of the name: `Interrogative` for `Interrogative-Polar-Direct`.
    pub fn family(&self) -> &str {
        self.name.split('-').next().unwrap_or("")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: undeclared node {name}")]
    UndeclaredNode {
        line: usize,
        column: usize,
        name: String,
    },
    #[error("{line}:{column}: duplicate node {name}")]
    DuplicateNode {
        line: usize,
        column: usize,
        name: String,
    },
    #[error("{line}:{column}: empty positive pattern")]
    EmptyPattern { line: usize, column: usize },
    #[error("{line}:{column}: duplicate query name {name}")]
    DuplicateQuery {
        line: usize,
        column: usize,
        name: String,
    },
}

/// Parses a single query: either a full `cxn NAME { … }` block or a bare
/// body (`meta`, `pattern`, `without` blocks). Bare queries get an empty name
/// unless `meta` sets one.
pub fn parse_query(text: &str) -> Result<Query, QueryError> {
    let mut p = Parser::new(text);
    p.skip_ws();
    let query = if p.peek_keyword("cxn") {
        p.query_block()?
    } else {
        let start = p.loc();
        p.query_body(String::new(), start, None)?
    };
    p.skip_ws();
    if !p.at_end() {
        return Err(p.syntax("unexpected text after query"));
    }
    Ok(query)
}

/// Parses a file of `cxn` blocks, in file order.
pub fn parse_query_file(text: &str) -> Result<Vec<Query>, QueryError> {
    let mut p = Parser::new(text);
    let mut queries: Vec<Query> = Vec::new();
    loop {
        p.skip_ws();
        if p.at_end() {
            break;
        }
        let (line, column) = p.loc();
        let q = p.query_block()?;
        if queries.iter().any(|other| other.name == q.name) {
            return Err(QueryError::DuplicateQuery {
                line,
                column,
                name: q.name,
            });
        }
        queries.push(q);
    }
    Ok(queries)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

const NAME_CHARS: fn(char) -> bool = |c| c.is_alphanumeric() || c == '_';

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn loc(&self) -> (usize, usize) {
        let before = &self.src[..self.pos];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        (line, column)
    }

    fn syntax(&self, message: impl Into<String>) -> QueryError {
        let (line, column) = self.loc();
        QueryError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        loop {
            let rest = self.rest();
            let trimmed = rest.trim_start();
            self.pos += rest.len() - trimmed.len();
            if trimmed.starts_with('%') {
                let end = trimmed.find('\n').unwrap_or(trimmed.len());
                self.pos += end;
            } else {
                break;
            }
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), QueryError> {
        if self.eat(tok) {
            Ok(())
        } else {
            let found = match self.peek_char() {
                Some(c) => format!("'{}'", c),
                None => "end of input".to_string(),
            };
            Err(self.syntax(format!("expected '{}', found {}", tok, found)))
        }
    }

    fn peek_keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        let rest = self.rest();
        rest.starts_with(kw)
            && !rest[kw.len()..].chars().next().is_some_and(NAME_CHARS)
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> &'a str {
        let rest = self.rest();
        let end = rest.find(|c: char| !pred(c)).unwrap_or(rest.len());
        self.pos += end;
        &rest[..end]
    }

    fn word(&mut self, what: &str, pred: impl Fn(char) -> bool) -> Result<&'a str, QueryError> {
        self.skip_ws();
        let w = self.take_while(pred);
        if w.is_empty() {
            Err(self.syntax(format!("expected {}", what)))
        } else {
            Ok(w)
        }
    }

    fn name(&mut self) -> Result<&'a str, QueryError> {
        self.word("node name", NAME_CHARS)
    }

    fn value(&mut self) -> Result<String, QueryError> {
        self.skip_ws();
        if self.rest().starts_with('"') {
            self.pos += 1;
            let mut out = String::new();
            let mut chars = self.rest().char_indices();
            while let Some((i, c)) = chars.next() {
                match c {
                    '"' => {
                        self.pos += i + 1;
                        return Ok(out);
                    }
                    '\\' => match chars.next() {
                        Some((_, e)) => out.push(e),
                        None => break,
                    },
                    c => out.push(c),
                }
            }
            Err(self.syntax("unterminated string"))
        } else {
            let v = self.word("value", |c| {
                !c.is_whitespace() && !",;|[]{}=<>\"%".contains(c)
            })?;
            Ok(v.to_string())
        }
    }

    fn query_block(&mut self) -> Result<Query, QueryError> {
        let start = self.loc();
        if !self.peek_keyword("cxn") {
            return Err(self.syntax("expected 'cxn'"));
        }
        self.pos += 3;
        let name = self.word("construction name", |c| {
            c.is_alphanumeric() || c == '-' || c == '_' || c == '.'
        })?;
        self.expect("{")?;
        let q = self.query_body(name.to_string(), start, Some("}"))?;
        self.expect("}")?;
        Ok(q)
    }

    fn query_body(
        &mut self,
        mut name: String,
        start: (usize, usize),
        closer: Option<&str>,
    ) -> Result<Query, QueryError> {
        let mut meta = Meta::default();
        let mut positive: Option<PatternClause> = None;
        let mut withouts = Vec::new();
        let mut meta_refs = Vec::new();
        loop {
            self.skip_ws();
            if self.at_end() || closer.is_some_and(|c| self.rest().starts_with(c)) {
                break;
            }
            if self.peek_keyword("meta") {
                if positive.is_some() {
                    return Err(self.syntax("meta must precede pattern"));
                }
                self.pos += 4;
                meta_refs = self.meta_block(&mut meta)?;
            } else if self.peek_keyword("pattern") {
                if positive.is_some() {
                    return Err(self.syntax("more than one pattern block"));
                }
                self.pos += 7;
                positive = Some(self.clause_block(None)?);
            } else if self.peek_keyword("without") {
                let Some(pos) = positive.as_ref() else {
                    return Err(self.syntax("without must follow pattern"));
                };
                self.pos += 7;
                let w = self.clause_block(Some(pos))?;
                withouts.push(w);
            } else {
                return Err(self.syntax("expected 'meta', 'pattern' or 'without'"));
            }
        }
        let positive = match positive {
            Some(p) if !p.nodes.is_empty() => p,
            _ => {
                return Err(QueryError::EmptyPattern {
                    line: start.0,
                    column: start.1,
                })
            }
        };
        if let Some(meta_name) = meta.name {
            if !name.is_empty() && meta_name != name {
                return Err(QueryError::Syntax {
                    line: start.0,
                    column: start.1,
                    message: format!("meta name {} disagrees with cxn {}", meta_name, name),
                });
            }
            name = meta_name;
        }
        for (node, (line, column)) in meta_refs {
            if positive.node(&node).is_none() {
                return Err(QueryError::UndeclaredNode { line, column, name: node });
            }
        }
        Ok(Query {
            name,
            positive,
            withouts,
            head_node: meta.head,
            elements: meta.elements,
            note: meta.note,
        })
    }

    /// Parses `{ key=value; … }`; returns node references with locations.
    fn meta_block(&mut self, meta: &mut Meta) -> Result<Vec<(String, (usize, usize))>, QueryError> {
        let mut refs = Vec::new();
        self.expect("{")?;
        loop {
            if self.eat("}") {
                break;
            }
            self.skip_ws();
            let at = self.loc();
            let key = self.name()?;
            match key {
                "elt" => {
                    let node = self.name()?.to_string();
                    self.expect("=")?;
                    let role = self.value()?;
                    if meta.elements.iter().any(|(_, r)| *r == role) {
                        return Err(self.syntax(format!("duplicate element {}", role)));
                    }
                    refs.push((node.clone(), at));
                    meta.elements.push((node, role));
                }
                "head" => {
                    self.expect("=")?;
                    let node = self.name()?.to_string();
                    refs.push((node.clone(), at));
                    meta.head = Some(node);
                }
                "name" => {
                    self.expect("=")?;
                    meta.name = Some(self.word("construction name", |c| {
                        c.is_alphanumeric() || c == '-' || c == '_' || c == '.'
                    })?
                    .to_string());
                }
                "note" => {
                    self.expect("=")?;
                    meta.note = Some(self.value()?);
                }
                other => return Err(self.syntax(format!("unknown meta key {}", other))),
            }
            self.expect(";")?;
        }
        Ok(refs)
    }

    fn clause_block(&mut self, outer: Option<&PatternClause>) -> Result<PatternClause, QueryError> {
        self.expect("{")?;
        let mut clause = PatternClause::default();
        let mut explicit: Vec<String> = Vec::new();
        let mut pending_refs: Vec<(String, (usize, usize))> = Vec::new();
        loop {
            if self.eat("}") {
                break;
            }
            self.skip_ws();
            if self.at_end() {
                return Err(self.syntax("unterminated block"));
            }
            let at = self.loc();
            let first = self.name()?.to_string();
            self.skip_ws();
            if self.rest().starts_with('[') {
                self.pos += 1;
                let clauses = self.feature_clauses()?;
                if explicit.contains(&first) {
                    return Err(QueryError::DuplicateNode {
                        line: at.0,
                        column: at.1,
                        name: first,
                    });
                }
                explicit.push(first.clone());
                match clause.nodes.iter_mut().find(|n| n.name == first) {
                    Some(existing) => existing.clauses.extend(clauses),
                    None => clause.nodes.push(NodePattern {
                        name: first,
                        clauses,
                    }),
                }
            } else if self.rest().starts_with("-[") {
                self.pos += 2;
                let mut labels = vec![self.label()?];
                while self.eat("|") {
                    labels.push(self.label()?);
                }
                self.expect("]->")?;
                let target = self.name()?.to_string();
                for n in [&first, &target] {
                    if clause.node(n).is_none() && outer.and_then(|o| o.node(n)).is_none() {
                        clause.nodes.push(NodePattern {
                            name: n.clone(),
                            clauses: Vec::new(),
                        });
                    }
                }
                clause.edges.push(EdgePattern {
                    source: first,
                    target,
                    labels,
                });
            } else if self.rest().starts_with('<') {
                let kind = if self.eat("<<") {
                    OrderKind::Precedes
                } else {
                    self.pos += 1;
                    OrderKind::Immediate
                };
                let right = self.name()?.to_string();
                if first == right {
                    return Err(self.syntax("order constraint relates a node to itself"));
                }
                pending_refs.push((first.clone(), at));
                pending_refs.push((right.clone(), at));
                clause.orders.push(OrderConstraint {
                    left: first,
                    right,
                    kind,
                });
            } else if self.rest().starts_with('.') {
                self.pos += 1;
                let la = self.word("attribute", attr_char)?;
                self.expect("=")?;
                let right = self.name()?.to_string();
                self.expect(".")?;
                let ra = self.word("attribute", attr_char)?;
                pending_refs.push((first.clone(), at));
                pending_refs.push((right.clone(), at));
                clause.equalities.push(EqualityConstraint {
                    left: (first, Attr::from_name(la)),
                    right: (right, Attr::from_name(ra)),
                });
            } else {
                return Err(self.syntax("expected '[', '-[', '<', '<<' or '.'"));
            }
            self.expect(";")?;
        }
        for (name, (line, column)) in pending_refs {
            if clause.node(&name).is_none() && outer.and_then(|o| o.node(&name)).is_none() {
                return Err(QueryError::UndeclaredNode { line, column, name });
            }
        }
        Ok(clause)
    }

    fn feature_clauses(&mut self) -> Result<Vec<FeatureClause>, QueryError> {
        let mut out = Vec::new();
        if self.eat("]") {
            return Ok(out);
        }
        loop {
            let attr = Attr::from_name(self.word("attribute", attr_char)?);
            self.skip_ws();
            let test = if self.eat("<>") {
                FeatureTest::NotEquals(self.values()?)
            } else if self.eat("=") {
                FeatureTest::Equals(self.values()?)
            } else {
                FeatureTest::Present
            };
            out.push(FeatureClause { attr, test });
            if self.eat("]") {
                return Ok(out);
            }
            self.expect(",")?;
        }
    }

    fn values(&mut self) -> Result<Vec<String>, QueryError> {
        let mut vals = vec![self.value()?];
        while self.eat("|") {
            vals.push(self.value()?);
        }
        Ok(vals)
    }

    fn label(&mut self) -> Result<Label, QueryError> {
        let raw = self.word("relation label", |c| c.is_alphanumeric() || "_:*".contains(c))?;
        if let Some(base) = raw.strip_suffix(":*") {
            if base.is_empty() || base.contains(':') || base.contains('*') {
                return Err(self.syntax(format!("bad relation label {}", raw)));
            }
            Ok(Label::AnySubtype(base.to_string()))
        } else {
            let base = raw.split(':').next().unwrap_or("");
            if base.is_empty() || raw.contains('*') {
                return Err(self.syntax(format!("bad relation label {}", raw)));
            }
            Ok(Label::Exact(raw.to_string()))
        }
    }
}

fn attr_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

#[derive(Default)]
struct Meta {
    name: Option<String>,
    head: Option<String>,
    elements: Vec<(String, String)>,
    note: Option<String>,
}

fn write_value(f: &mut fmt::Formatter<'_>, v: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in v.chars() {
        if c == '"' || c == '\\' {
            f.write_str("\\")?;
        }
        write!(f, "{}", c)?;
    }
    f.write_str("\"")
}

fn write_values(f: &mut fmt::Formatter<'_>, vals: &[String]) -> fmt::Result {
    for (i, v) in vals.iter().enumerate() {
        if i > 0 {
            f.write_str("|")?;
        }
        write_value(f, v)?;
    }
    Ok(())
}

impl fmt::Display for NodePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.name)?;
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", c.attr)?;
            match &c.test {
                FeatureTest::Equals(v) => {
                    f.write_str("=")?;
                    write_values(f, v)?;
                }
                FeatureTest::NotEquals(v) => {
                    f.write_str("<>")?;
                    write_values(f, v)?;
                }
                FeatureTest::Present => {}
            }
        }
        f.write_str("]")
    }
}

impl fmt::Display for PatternClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{\n")?;
        for n in &self.nodes {
            writeln!(f, "    {};", n)?;
        }
        for e in &self.edges {
            f.write_str("    ")?;
            write!(f, "{}-[", e.source)?;
            for (i, l) in e.labels.iter().enumerate() {
                if i > 0 {
                    f.write_str("|")?;
                }
                write!(f, "{}", l)?;
            }
            writeln!(f, "]->{};", e.target)?;
        }
        for o in &self.orders {
            let op = match o.kind {
                OrderKind::Immediate => "<",
                OrderKind::Precedes => "<<",
            };
            writeln!(f, "    {} {} {};", o.left, op, o.right)?;
        }
        for e in &self.equalities {
            writeln!(
                f,
                "    {}.{} = {}.{};",
                e.left.0, e.left.1, e.right.0, e.right.1
            )?;
        }
        f.write_str("  }")
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Unnamed queries print as a bare body.
        let named = !self.name.is_empty();
        if named {
            writeln!(f, "cxn {} {{", self.name)?;
        }
        if self.head_node.is_some() || !self.elements.is_empty() || self.note.is_some() {
            f.write_str("  meta {")?;
            if let Some(h) = &self.head_node {
                write!(f, " head={};", h)?;
            }
            for (node, role) in &self.elements {
                write!(f, " elt {}=", node)?;
                write_value(f, role)?;
                f.write_str(";")?;
            }
            if let Some(n) = &self.note {
                f.write_str(" note=")?;
                write_value(f, n)?;
                f.write_str(";")?;
            }
            f.write_str(" }\n")?;
        }
        writeln!(f, "  pattern {}", self.positive)?;
        for w in &self.withouts {
            writeln!(f, "  without {}", w)?;
        }
        if named {
            f.write_str("}\n")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mandarin_existential_bare_pattern() {
        let q = parse_query("pattern { PRED[form=\"有\"]; PRED-[obl:lmod]->COD; }").unwrap();
        assert_eq!(q.positive.nodes.len(), 2);
        assert_eq!(q.positive.edges.len(), 1);
        assert_eq!(q.positive.nodes[1].name, "COD");
        assert_eq!(q.positive.edges[0].labels, vec![Label::Exact("obl:lmod".into())]);
        assert_eq!(
            q.positive.nodes[0].clauses[0],
            FeatureClause {
                attr: Attr::Form,
                test: FeatureTest::Equals(vec!["有".into()])
            }
        );
    }

    #[test]
    fn self_edge_parses() {
        let q = parse_query("pattern { A[]; A-[nsubj]->A; }").unwrap();
        assert_eq!(q.positive.nodes.len(), 1);
        assert_eq!(q.positive.edges[0].source, q.positive.edges[0].target);
    }

    #[test]
    fn undeclared_node_in_order() {
        let err = parse_query("pattern { A[]; B[]; A << C; }").unwrap_err();
        assert!(matches!(err, QueryError::UndeclaredNode { ref name, .. } if name == "C"));
        assert!(err.to_string().contains("undeclared node C"));
    }

    #[test]
    fn undeclared_in_meta_and_equality() {
        assert!(matches!(
            parse_query("meta { head=X; } pattern { A[]; }"),
            Err(QueryError::UndeclaredNode { .. })
        ));
        assert!(matches!(
            parse_query("pattern { A[]; A.lemma = B.lemma; }"),
            Err(QueryError::UndeclaredNode { .. })
        ));
    }

    #[test]
    fn duplicate_node_and_empty_pattern() {
        assert!(matches!(
            parse_query("pattern { A[]; A[upos=X]; }"),
            Err(QueryError::DuplicateNode { .. })
        ));
        assert!(matches!(
            parse_query("pattern { }"),
            Err(QueryError::EmptyPattern { .. })
        ));
        assert!(matches!(parse_query(""), Err(QueryError::EmptyPattern { .. })));
    }

    #[test]
    fn syntax_error_location() {
        let err = parse_query("pattern {\n  A[upos=X]\n  B[];\n}").unwrap_err();
        match err {
            QueryError::Syntax { line, column, .. } => assert_eq!((line, column), (3, 3)),
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn clause_forms() {
        let q = parse_query(
            "pattern { N[lemma<>\"x\"|y, Definite, upos=NOUN|PROPN]; N-[nsubj:*|obj]->M; N < M; N.lemma = M.lemma; }",
        )
        .unwrap();
        let n = &q.positive.nodes[0];
        assert_eq!(n.clauses.len(), 3);
        assert_eq!(n.clauses[0].test, FeatureTest::NotEquals(vec!["x".into(), "y".into()]));
        assert_eq!(n.clauses[1].test, FeatureTest::Present);
        assert_eq!(n.clauses[1].attr, Attr::Feat("Definite".into()));
        assert_eq!(q.positive.orders[0].kind, OrderKind::Immediate);
        assert_eq!(q.positive.equalities[0].right, ("M".into(), Attr::Lemma));
    }

    #[test]
    fn label_matching() {
        let exact = Label::Exact("nsubj".into());
        assert!(exact.matches("nsubj"));
        assert!(!exact.matches("nsubj:pass"));
        let wide = Label::AnySubtype("nsubj".into());
        assert!(wide.matches("nsubj"));
        assert!(wide.matches("nsubj:pass"));
        assert!(!wide.matches("nsubjx"));
        assert!(!wide.matches("obj"));
    }

    #[test]
    fn without_rebinds_and_introduces() {
        let q = parse_query(
            "pattern { PRED[lemma=x]; PRED-[nsubj]->PIV; } without { LE[lemma=l]; PRED-[obl]->N; N-[case]->LE; } without { PIV[upos=PRON]; }",
        )
        .unwrap();
        assert_eq!(q.positive.nodes.len(), 2);
        let names: Vec<_> = q.withouts[0].nodes.iter().map(|n| n.name.as_str()).collect();
        assert_eq!(names, ["LE", "N"]);
        assert_eq!(q.withouts[1].nodes[0].name, "PIV");
    }

    #[test]
    fn query_file() {
        assert!(parse_query_file("").unwrap().is_empty());
        let qs = parse_query_file(
            "% two queries\ncxn A-B { pattern { X[]; } }\ncxn C { meta { head=Y; elt Y=Role; } pattern { Y[]; } }",
        )
        .unwrap();
        let names: Vec<_> = qs.iter().map(|q| q.name.as_str()).collect();
        assert_eq!(names, ["A-B", "C"]);
        assert_eq!(qs[1].head_node.as_deref(), Some("Y"));
        assert_eq!(qs[1].elements, vec![("Y".to_string(), "Role".to_string())]);
        assert!(matches!(
            parse_query_file("cxn A { pattern { X[]; } } cxn A { pattern { X[]; } }"),
            Err(QueryError::DuplicateQuery { .. })
        ));
    }

    #[test]
    fn print_then_parse() {
        let src = "cxn NPN { meta { head=N1; elt N1=First; note=\"a \\\"b\\\"\"; } pattern { N1[upos=NOUN]; P[upos=ADP]; N1-[nmod|fixed]->N2; N1 < P; P < N2; N1.lemma = N2.lemma; } without { N1-[case]->C; } }";
        let q = parse_query(src).unwrap();
        let printed = q.to_string();
        assert_eq!(parse_query(&printed).unwrap(), q);
    }
}
