//! Reading and writing CoNLL-U.
//!
//! Every column is kept in a form that serializes back to the exact input
//! bytes. Multiword ranges (`3-4`) and empty nodes (`5.1`) are retained for
//! output but are not part of the dependency tree used for matching.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use thiserror::Error;

/// Row identifier in the first column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TokenId {
    /// A syntactic word.
    Word(u32),
    /// A multiword surface token spanning words `a..=b`.
    Range(u32, u32),
    /// An enhanced-dependency empty node `a.b`.
    Empty(u32, u32),
}

impl TokenId {
    pub fn word(self) -> Option<u32> {
        match self {
            TokenId::Word(id) => Some(id),
            _ => None,
        }
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenId::Word(id) => write!(f, "{}", id),
            TokenId::Range(a, b) => write!(f, "{}-{}", a, b),
            TokenId::Empty(a, b) => write!(f, "{}.{}", a, b),
        }
    }
}

impl FromStr for TokenId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |part: &str| -> Result<u32, String> {
            if part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(format!("non-numeric token id '{}'", s));
            }
            part.parse::<u32>()
                .map_err(|_| format!("token id '{}' out of range", s))
        };
        if let Some((a, b)) = s.split_once('-') {
            Ok(TokenId::Range(num(a)?, num(b)?))
        } else if let Some((a, b)) = s.split_once('.') {
            Ok(TokenId::Empty(num(a)?, num(b)?))
        } else {
            let id = num(s)?;
            if id == 0 {
                return Err("token id 0 is reserved for the root".to_string());
            }
            Ok(TokenId::Word(id))
        }
    }
}

/// FEATS column: ordered `Name=Value` pairs, kept in input order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Features(Vec<(String, String)>);

impl Features {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(n, v)| (n.as_str(), v.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn parse(field: &str) -> Result<Self, String> {
        if field == "_" {
            return Ok(Features::default());
        }
        let mut pairs: Vec<(String, String)> = Vec::new();
        for item in field.split('|') {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| format!("malformed feature '{}'", item))?;
            if name.is_empty() {
                return Err(format!("malformed feature '{}'", item));
            }
            if pairs.iter().any(|(n, _)| n == name) {
                return Err(format!("duplicate feature '{}'", name));
            }
            pairs.push((name.to_string(), value.to_string()));
        }
        Ok(Features(pairs))
    }
}

impl fmt::Display for Features {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("_");
        }
        for (i, (n, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{}={}", n, v)?;
        }
        Ok(())
    }
}

/// One `|`-separated item of the MISC column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MiscItem {
    Pair(String, String),
    Flag(String),
}

impl MiscItem {
    pub fn key(&self) -> &str {
        match self {
            MiscItem::Pair(k, _) => k,
            MiscItem::Flag(k) => k,
        }
    }
}

/// MISC column. Items keep their input order; new keys are appended.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Misc(Vec<MiscItem>);

impl Misc {
    pub fn parse(field: &str) -> Self {
        if field == "_" {
            return Misc::default();
        }
        Misc(
            field
                .split('|')
                .map(|item| match item.split_once('=') {
                    Some((k, v)) => MiscItem::Pair(k.to_string(), v.to_string()),
                    None => MiscItem::Flag(item.to_string()),
                })
                .collect(),
        )
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find_map(|item| match item {
            MiscItem::Pair(k, v) if k == key => Some(v.as_str()),
            _ => None,
        })
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.0
            .iter()
            .any(|item| matches!(item, MiscItem::Flag(f) if f == flag))
    }

    /// Sets `key=value`, replacing the first existing pair with that key or
    /// appending a new one.
    pub fn set(&mut self, key: &str, value: &str) {
        for item in self.0.iter_mut() {
            if let MiscItem::Pair(k, v) = item {
                if k == key {
                    *v = value.to_string();
                    return;
                }
            }
        }
        self.0
            .push(MiscItem::Pair(key.to_string(), value.to_string()));
    }

    /// Removes every item whose key is `key`; returns how many were removed.
    pub fn remove(&mut self, key: &str) -> usize {
        let before = self.0.len();
        self.0.retain(|item| item.key() != key);
        before - self.0.len()
    }

    pub fn items(&self) -> &[MiscItem] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Misc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("_");
        }
        for (i, item) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            match item {
                MiscItem::Pair(k, v) => write!(f, "{}={}", k, v)?,
                MiscItem::Flag(k) => f.write_str(k)?,
            }
        }
        Ok(())
    }
}

/// One CoNLL-U row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub id: TokenId,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: Features,
    /// Governor id, `Some(0)` for the root; `None` when the column is `_`.
    pub head: Option<u32>,
    pub deprel: String,
    pub deps: String,
    pub misc: Misc,
}

impl Token {
    /// Convenience constructor for a syntactic word with empty optional columns.
    pub fn word(id: u32, form: &str, lemma: &str, upos: &str, head: u32, deprel: &str) -> Self {
        Token {
            id: TokenId::Word(id),
            form: form.to_string(),
            lemma: lemma.to_string(),
            upos: upos.to_string(),
            xpos: "_".to_string(),
            feats: Features::default(),
            head: Some(head),
            deprel: deprel.to_string(),
            deps: "_".to_string(),
            misc: Misc::default(),
        }
    }

    pub fn with_feats(mut self, feats: &str) -> Self {
        self.feats = Features::parse(feats).expect("valid FEATS literal");
        self
    }

    pub fn xpos(&self) -> Option<&str> {
        if self.xpos == "_" {
            None
        } else {
            Some(&self.xpos)
        }
    }

    /// Relation without its subtype: `nsubj` for `nsubj:pass`.
    pub fn base_deprel(&self) -> &str {
        self.deprel.split(':').next().unwrap_or("")
    }

    fn parse_row(line: &str) -> Result<Token, String> {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 10 {
            return Err(format!(
                "expected 10 tab-separated fields, found {}",
                fields.len()
            ));
        }
        let id: TokenId = fields[0].parse()?;
        let head = match fields[6] {
            "_" if !matches!(id, TokenId::Word(_)) => None,
            h => {
                if h.is_empty() || !h.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(format!("non-numeric head '{}'", h));
                }
                Some(h.parse::<u32>().map_err(|_| format!("head '{}' out of range", h))?)
            }
        };
        if matches!(id, TokenId::Word(_)) {
            let base = fields[7].split(':').next().unwrap_or("");
            if base.is_empty() || base == "_" {
                return Err(format!("invalid relation '{}'", fields[7]));
            }
        }
        Ok(Token {
            id,
            form: fields[1].to_string(),
            lemma: fields[2].to_string(),
            upos: fields[3].to_string(),
            xpos: fields[4].to_string(),
            feats: Features::parse(fields[5])?,
            head,
            deprel: fields[7].to_string(),
            deps: fields[8].to_string(),
            misc: Misc::parse(fields[9]),
        })
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head = match self.head {
            Some(h) => h.to_string(),
            None => "_".to_string(),
        };
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.id,
            self.form,
            self.lemma,
            self.upos,
            self.xpos,
            self.feats,
            head,
            self.deprel,
            self.deps,
            self.misc
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

/// A validation finding. Issues are data, not failures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Issue {
    pub severity: Severity,
    pub token: Option<TokenId>,
    pub message: String,
}

impl Issue {
    fn error(token: Option<TokenId>, message: impl Into<String>) -> Self {
        Issue {
            severity: Severity::Error,
            token,
            message: message.into(),
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        match self.token {
            Some(id) => write!(f, "{} [{}]: {}", sev, id, self.message),
            None => write!(f, "{}: {}", sev, self.message),
        }
    }
}

/// Dependency tree over the syntactic words of a sentence.
///
/// Words are addressed by position (0-based index into the word sequence).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree {
    word_rows: Vec<usize>,
    ids: Vec<u32>,
    heads: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    depths: Vec<usize>,
    root: Option<usize>,
}

impl Tree {
    fn build(tokens: &[Token]) -> (Tree, Vec<Issue>) {
        let mut issues = Vec::new();
        let mut word_rows = Vec::new();
        let mut ids = Vec::new();
        for (row, tok) in tokens.iter().enumerate() {
            if let TokenId::Word(id) = tok.id {
                word_rows.push(row);
                ids.push(id);
            }
        }
        let n = ids.len();
        for (pos, &id) in ids.iter().enumerate() {
            if id as usize != pos + 1 {
                issues.push(Issue::error(
                    Some(TokenId::Word(id)),
                    format!("word ids not sequential: expected {}", pos + 1),
                ));
                break;
            }
        }
        let position = |id: u32| ids.iter().position(|&w| w == id);

        let mut heads = vec![None; n];
        let mut roots = Vec::new();
        for pos in 0..n {
            let tok = &tokens[word_rows[pos]];
            match tok.head {
                Some(0) => roots.push(pos),
                Some(h) => match position(h) {
                    Some(hp) => heads[pos] = Some(hp),
                    None => issues.push(Issue::error(
                        Some(tok.id),
                        format!("head {} out of range", h),
                    )),
                },
                None => issues.push(Issue::error(Some(tok.id), "missing head")),
            }
        }
        if n > 0 && roots.is_empty() {
            issues.push(Issue::error(None, "no root"));
        }
        if roots.len() > 1 {
            issues.push(Issue::error(
                Some(TokenId::Word(ids[roots[1]])),
                "multiple roots",
            ));
        }

        // Cycle detection: walk head links, colouring visited nodes per walk.
        let mut state = vec![0u8; n]; // 0 unvisited, 1 on current path, 2 done
        for start in 0..n {
            if state[start] != 0 {
                continue;
            }
            let mut path = Vec::new();
            let mut cur = Some(start);
            while let Some(p) = cur {
                match state[p] {
                    0 => {
                        state[p] = 1;
                        path.push(p);
                        cur = heads[p];
                    }
                    1 => {
                        let at = path.iter().position(|&q| q == p).unwrap();
                        let min_id = path[at..].iter().map(|&q| ids[q]).min().unwrap();
                        issues.push(Issue::error(
                            Some(TokenId::Word(min_id)),
                            format!("self-loop/cycle at {}", min_id),
                        ));
                        break;
                    }
                    _ => break,
                }
            }
            for p in path {
                state[p] = 2;
            }
        }

        let mut children = vec![Vec::new(); n];
        for (pos, h) in heads.iter().enumerate() {
            if let Some(h) = h {
                children[*h].push(pos);
            }
        }
        let mut depths = vec![usize::MAX; n];
        let mut stack: Vec<(usize, usize)> = roots.iter().map(|&r| (r, 0)).collect();
        while let Some((p, d)) = stack.pop() {
            if depths[p] != usize::MAX {
                continue;
            }
            depths[p] = d;
            for &c in &children[p] {
                stack.push((c, d + 1));
            }
        }
        let root = if roots.len() == 1 { Some(roots[0]) } else { None };
        (
            Tree {
                word_rows,
                ids,
                heads,
                children,
                depths,
                root,
            },
            issues,
        )
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Word id at a position.
    pub fn id(&self, pos: usize) -> u32 {
        self.ids[pos]
    }

    /// Position of word id `id`.
    pub fn position(&self, id: u32) -> Option<usize> {
        // Ids are sequential in valid trees; fall back to a scan otherwise.
        let guess = (id as usize).wrapping_sub(1);
        if self.ids.get(guess) == Some(&id) {
            Some(guess)
        } else {
            self.ids.iter().position(|&w| w == id)
        }
    }

    /// Row index into `Sentence::tokens` for a word position.
    pub fn row(&self, pos: usize) -> usize {
        self.word_rows[pos]
    }

    pub fn head(&self, pos: usize) -> Option<usize> {
        self.heads[pos]
    }

    /// Dependents of `pos` in linear order.
    pub fn children(&self, pos: usize) -> &[usize] {
        &self.children[pos]
    }

    pub fn depth(&self, pos: usize) -> usize {
        self.depths[pos]
    }

    pub fn root(&self) -> Option<usize> {
        self.root
    }

    /// True when `pos` lies in the subtree rooted at `ancestor` (inclusive).
    pub fn dominates(&self, ancestor: usize, pos: usize) -> bool {
        let mut cur = Some(pos);
        let mut steps = 0;
        while let Some(p) = cur {
            if p == ancestor {
                return true;
            }
            steps += 1;
            if steps > self.len() {
                return false;
            }
            cur = self.heads[p];
        }
        false
    }
}

/// A sentence block: comment lines, rows, and the blank lines that follow it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub comments: Vec<String>,
    tokens: Vec<Token>,
    tree: Option<Tree>,
    issues: Vec<Issue>,
    blank_after: usize,
    terminated: bool,
}

impl Sentence {
    /// Builds a sentence from rows, computing the tree index. Tree-breaking
    /// problems are kept in `issues()` and leave `tree()` empty.
    pub fn new(comments: Vec<String>, tokens: Vec<Token>) -> Self {
        let (tree, issues) = Tree::build(&tokens);
        let tree = if issues.iter().any(|i| i.severity == Severity::Error) {
            None
        } else {
            Some(tree)
        };
        Sentence {
            comments,
            tokens,
            tree,
            issues,
            blank_after: 1,
            terminated: true,
        }
    }

    /// Value of the `# sent_id = …` comment.
    pub fn sent_id(&self) -> Option<&str> {
        self.comment_value("sent_id")
    }

    pub fn text(&self) -> Option<&str> {
        self.comment_value("text")
    }

    fn comment_value(&self, key: &str) -> Option<&str> {
        self.comments.iter().find_map(|c| {
            let body = c.strip_prefix('#')?.trim_start();
            let rest = body.strip_prefix(key)?.trim_start();
            Some(rest.strip_prefix('=')?.trim())
        })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// The dependency tree, or `None` when the sentence has tree-breaking issues.
    pub fn tree(&self) -> Option<&Tree> {
        self.tree.as_ref()
    }

    /// Issues recorded while building the tree index.
    pub fn issues(&self) -> &[Issue] {
        &self.issues
    }

    /// Syntactic words, in order.
    pub fn words(&self) -> impl Iterator<Item = &Token> {
        self.tokens
            .iter()
            .filter(|t| matches!(t.id, TokenId::Word(_)))
    }

    pub fn word(&self, id: u32) -> Option<&Token> {
        match &self.tree {
            Some(tree) => tree.position(id).map(|p| &self.tokens[tree.row(p)]),
            None => self.tokens.iter().find(|t| t.id == TokenId::Word(id)),
        }
    }

    /// MISC of word `id`. Only MISC is mutable so the tree index stays valid.
    pub fn misc_mut(&mut self, id: u32) -> Option<&mut Misc> {
        let row = match &self.tree {
            Some(tree) => tree.position(id).map(|p| tree.row(p)),
            None => self.tokens.iter().position(|t| t.id == TokenId::Word(id)),
        }?;
        Some(&mut self.tokens[row].misc)
    }

    /// MISC of every row, including ranges and empty nodes.
    pub fn all_misc_mut(&mut self) -> impl Iterator<Item = &mut Misc> {
        self.tokens.iter_mut().map(|t| &mut t.misc)
    }

    fn write_to(&self, out: &mut String, eol: &str) {
        let mut lines = 0;
        for c in &self.comments {
            out.push_str(c);
            out.push_str(eol);
            lines += 1;
        }
        for t in &self.tokens {
            use fmt::Write as _;
            let _ = write!(out, "{}", t);
            out.push_str(eol);
            lines += 1;
        }
        for _ in 0..self.blank_after {
            out.push_str(eol);
        }
        if !self.terminated && lines > 0 && self.blank_after == 0 {
            out.truncate(out.len() - eol.len());
        }
    }
}

/// Number of head links from word `id` to the root.
pub fn token_depth(sentence: &Sentence, id: u32) -> Result<usize, LookupError> {
    let tree = sentence.tree().ok_or(LookupError::NoTree)?;
    let pos = tree.position(id).ok_or(LookupError::UnknownToken(id))?;
    Ok(tree.depth(pos))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LookupError {
    #[error("unknown token id {0}")]
    UnknownToken(u32),
    #[error("sentence has no valid dependency tree")]
    NoTree,
}

/// Checks the tree invariants of a sentence.
pub fn validate(sentence: &Sentence) -> Vec<Issue> {
    let (tree, mut issues) = Tree::build(&sentence.tokens);
    if tree.is_empty() {
        issues.push(Issue::error(None, "sentence has no words"));
    }
    issues
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate token id {id}")]
    DuplicateId { line: usize, id: TokenId },
    #[error("line {line}: {issue}")]
    Tree { line: usize, issue: Issue },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Record tree-breaking issues on the sentence instead of failing.
    pub lenient: bool,
}

/// A parsed file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Document {
    pub sentences: Vec<Sentence>,
    leading_blank_lines: usize,
    crlf: bool,
}

impl Document {
    pub fn new(sentences: Vec<Sentence>) -> Self {
        Document {
            sentences,
            leading_blank_lines: 0,
            crlf: false,
        }
    }

    /// Number of syntactic words.
    pub fn word_count(&self) -> usize {
        self.sentences.iter().map(|s| s.words().count()).sum()
    }
}

/// Parses a document in strict mode.
pub fn parse_document(text: &str) -> Result<Document, ParseError> {
    parse_document_with(text, ParseOptions::default())
}

pub fn parse_document_with(text: &str, options: ParseOptions) -> Result<Document, ParseError> {
    let mut reader = Reader::with_options(text.as_bytes(), options);
    let mut sentences = Vec::new();
    for sentence in reader.by_ref() {
        sentences.push(sentence?);
    }
    Ok(Document {
        sentences,
        leading_blank_lines: reader.leading_blank_lines,
        crlf: reader.crlf,
    })
}

pub fn serialize_document(doc: &Document) -> String {
    let eol = if doc.crlf { "\r\n" } else { "\n" };
    let mut out = String::new();
    for _ in 0..doc.leading_blank_lines {
        out.push_str(eol);
    }
    for s in &doc.sentences {
        s.write_to(&mut out, eol);
    }
    out
}

/// Streaming sentence reader.
pub struct Reader<R> {
    input: R,
    options: ParseOptions,
    line_no: usize,
    pending: Option<(String, bool)>,
    started: bool,
    leading_blank_lines: usize,
    crlf: bool,
    done: bool,
}

impl<R: BufRead> Reader<R> {
    pub fn new(input: R) -> Self {
        Self::with_options(input, ParseOptions::default())
    }

    pub fn with_options(input: R, options: ParseOptions) -> Self {
        Reader {
            input,
            options,
            line_no: 0,
            pending: None,
            started: false,
            leading_blank_lines: 0,
            crlf: false,
            done: false,
        }
    }

    /// Blank lines before the first sentence; known once the first
    /// sentence has been read.
    pub fn leading_blank_lines(&self) -> usize {
        self.leading_blank_lines
    }

    pub fn crlf(&self) -> bool {
        self.crlf
    }

    /// Next line without its terminator, and whether it had one.
    fn next_line(&mut self) -> Result<Option<(String, bool)>, ParseError> {
        if let Some(line) = self.pending.take() {
            return Ok(Some(line));
        }
        let mut buf = String::new();
        if self.input.read_line(&mut buf)? == 0 {
            return Ok(None);
        }
        self.line_no += 1;
        let terminated = buf.ends_with('\n');
        if terminated {
            buf.pop();
            if buf.ends_with('\r') {
                buf.pop();
                if self.line_no == 1 {
                    self.crlf = true;
                }
            }
        }
        Ok(Some((buf, terminated)))
    }

    fn read_sentence(&mut self) -> Result<Option<Sentence>, ParseError> {
        // Skip leading blank lines (only possible before the first block).
        let mut first = loop {
            match self.next_line()? {
                None => return Ok(None),
                Some((l, _)) if l.is_empty() => {
                    if !self.started {
                        self.leading_blank_lines += 1;
                    }
                }
                Some(line) => break line,
            }
        };
        self.started = true;
        let start_line = self.line_no;
        let mut comments = Vec::new();
        let mut tokens: Vec<Token> = Vec::new();
        let mut terminated;
        loop {
            let (line, term) = first;
            terminated = term;
            if line.starts_with('#') {
                if !tokens.is_empty() {
                    return Err(ParseError::Syntax {
                        line: self.line_no,
                        message: "comment line inside token rows".to_string(),
                    });
                }
                comments.push(line);
            } else {
                let token = Token::parse_row(&line).map_err(|message| ParseError::Syntax {
                    line: self.line_no,
                    message,
                })?;
                if tokens.iter().any(|t| t.id == token.id) {
                    return Err(ParseError::DuplicateId {
                        line: self.line_no,
                        id: token.id,
                    });
                }
                tokens.push(token);
            }
            match self.next_line()? {
                None => break,
                Some((l, _)) if l.is_empty() => {
                    self.pending = Some((l, true));
                    break;
                }
                Some(line) => first = line,
            }
        }
        let mut blank_after = 0;
        loop {
            match self.next_line()? {
                Some((l, _)) if l.is_empty() => blank_after += 1,
                Some(line) => {
                    self.pending = Some(line);
                    break;
                }
                None => break,
            }
        }
        let mut sentence = Sentence::new(comments, tokens);
        sentence.blank_after = blank_after;
        sentence.terminated = terminated || blank_after > 0;
        if !self.options.lenient {
            if let Some(issue) = sentence.issues.first() {
                return Err(ParseError::Tree {
                    line: start_line,
                    issue: issue.clone(),
                });
            }
        }
        Ok(Some(sentence))
    }
}

impl<R: BufRead> Iterator for Reader<R> {
    type Item = Result<Sentence, ParseError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.read_sentence() {
            Ok(Some(s)) => Some(Ok(s)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Streaming counterpart of [`serialize_document`].
pub struct Writer<W> {
    output: W,
    crlf: bool,
    buf: String,
}

impl<W: Write> Writer<W> {
    pub fn new(output: W, crlf: bool) -> Self {
        Writer {
            output,
            crlf,
            buf: String::new(),
        }
    }

    pub fn write_blank_lines(&mut self, n: usize) -> io::Result<()> {
        let eol = if self.crlf { "\r\n" } else { "\n" };
        for _ in 0..n {
            self.output.write_all(eol.as_bytes())?;
        }
        Ok(())
    }

    pub fn write_sentence(&mut self, sentence: &Sentence) -> io::Result<()> {
        self.buf.clear();
        sentence.write_to(&mut self.buf, if self.crlf { "\r\n" } else { "\n" });
        self.output.write_all(self.buf.as_bytes())
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.output.flush()
    }

    pub fn into_inner(self) -> W {
        self.output
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PENCIL: &str = "# sent_id = pencil\n# text = You have a pencil?\n\
1\tYou\tyou\tPRON\tPRP\tCase=Nom|Person=2|PronType=Prs\t2\tnsubj\t_\t_\n\
2\thave\thave\tVERB\tVBP\tMood=Ind|Tense=Pres\t0\troot\t_\tCxn=Interrogative-Polar-Direct\n\
3\ta\ta\tDET\tDT\tDefinite=Ind|PronType=Art\t4\tdet\t_\t_\n\
4\tpencil\tpencil\tNOUN\tNN\tNumber=Sing\t2\tobj\t_\tSpaceAfter=No\n\
5\t?\t?\tPUNCT\t.\t_\t2\tpunct\t_\t_\n\n";

    fn sentence(rows: &[(u32, u32, &str)]) -> Sentence {
        let tokens = rows
            .iter()
            .map(|&(id, head, rel)| Token::word(id, "w", "w", "X", head, rel))
            .collect();
        Sentence::new(vec![], tokens)
    }

    #[test]
    fn reads_misc_key() {
        let doc = parse_document(PENCIL).unwrap();
        assert_eq!(doc.sentences.len(), 1);
        let s = &doc.sentences[0];
        assert_eq!(s.sent_id(), Some("pencil"));
        assert_eq!(s.words().count(), 5);
        assert_eq!(
            s.word(2).unwrap().misc.get("Cxn"),
            Some("Interrogative-Polar-Direct")
        );
        assert_eq!(serialize_document(&doc), PENCIL);
    }

    #[test]
    fn empty_input() {
        let doc = parse_document("").unwrap();
        assert!(doc.sentences.is_empty());
        assert_eq!(serialize_document(&doc), "");
    }

    #[test]
    fn single_word_sentence() {
        let doc = parse_document("1\tHi\thi\tINTJ\t_\t_\t0\troot\t_\t_\n\n").unwrap();
        let s = &doc.sentences[0];
        let tree = s.tree().unwrap();
        assert_eq!(tree.root(), Some(0));
        assert_eq!(tree.id(0), 1);
        assert_eq!(token_depth(s, 1), Ok(0));
        let depth_zero: Vec<u32> = (0..tree.len())
            .filter(|&p| tree.depth(p) == 0)
            .map(|p| tree.id(p))
            .collect();
        assert_eq!(depth_zero, vec![1]);
    }

    #[test]
    fn wrong_field_count_reports_line() {
        let err = parse_document("# c\n1\tHi\thi\n").unwrap_err();
        match err {
            ParseError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn non_numeric_id_and_head() {
        assert!(parse_document("x\tHi\thi\tX\t_\t_\t0\troot\t_\t_\n").is_err());
        assert!(parse_document("1\tHi\thi\tX\t_\t_\tz\troot\t_\t_\n").is_err());
    }

    #[test]
    fn duplicate_id() {
        let text = "1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n1\tb\tb\tX\t_\t_\t1\tdep\t_\t_\n";
        assert!(matches!(
            parse_document(text),
            Err(ParseError::DuplicateId { line: 2, .. })
        ));
    }

    #[test]
    fn ranges_and_empty_nodes_preserved_outside_tree() {
        let text = "1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_\n\
1\tde\tde\tADP\t_\t_\t2\tcase\t_\t_\n\
2\tel\tel\tDET\t_\t_\t0\troot\t_\t_\n\
2.1\tfue\tir\tVERB\t_\t_\t_\t_\t0:root\t_\n";
        let doc = parse_document(text).unwrap();
        let s = &doc.sentences[0];
        assert_eq!(s.tokens().len(), 4);
        assert_eq!(s.tree().unwrap().len(), 2);
        assert_eq!(serialize_document(&doc), text);
    }

    #[test]
    fn misc_append_after_existing() {
        let mut doc = parse_document(PENCIL).unwrap();
        doc.sentences[0].misc_mut(4).unwrap().set("Cxn", "NPN");
        let out = serialize_document(&doc);
        assert!(out.contains("\tSpaceAfter=No|Cxn=NPN\n"));
    }

    #[test]
    fn empty_misc_is_underscore() {
        let s = sentence(&[(1, 0, "root"), (2, 1, "dep")]);
        let doc = Document::new(vec![s]);
        for line in serialize_document(&doc).lines().filter(|l| !l.is_empty()) {
            assert_eq!(line.split('\t').nth(9), Some("_"));
        }
    }

    #[test]
    fn validate_cases() {
        assert!(validate(&sentence(&[(1, 0, "root"), (2, 1, "dep")])).is_empty());

        let multi = validate(&sentence(&[(1, 0, "root"), (2, 0, "root")]));
        assert_eq!(multi.len(), 1);
        assert_eq!(multi[0].message, "multiple roots");

        let selfloop = validate(&sentence(&[(1, 0, "root"), (2, 2, "dep")]));
        assert_eq!(selfloop.len(), 1);
        assert_eq!(selfloop[0].message, "self-loop/cycle at 2");

        let range = validate(&sentence(&[(1, 0, "root"), (2, 7, "dep")]));
        assert_eq!(range.len(), 1);
        assert_eq!(range[0].message, "head 7 out of range");
    }

    #[test]
    fn depths() {
        // chain 1 <- 2 <- 3, 3 is root
        let s = sentence(&[(1, 2, "dep"), (2, 3, "dep"), (3, 0, "root")]);
        assert_eq!(token_depth(&s, 3), Ok(0));
        assert_eq!(token_depth(&s, 2), Ok(1));
        assert_eq!(token_depth(&s, 1), Ok(2));
        assert_eq!(token_depth(&s, 9), Err(LookupError::UnknownToken(9)));
    }

    #[test]
    fn strict_rejects_cycle_lenient_records_it() {
        let text = "1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n2\tb\tb\tX\t_\t_\t2\tdep\t_\t_\n\n";
        assert!(matches!(
            parse_document(text),
            Err(ParseError::Tree { line: 1, .. })
        ));
        let doc = parse_document_with(text, ParseOptions { lenient: true }).unwrap();
        assert!(doc.sentences[0].tree().is_none());
        assert_eq!(doc.sentences[0].issues().len(), 1);
        assert_eq!(serialize_document(&doc), text);
    }

    #[test]
    fn blank_line_structure_round_trips() {
        for text in [
            "\n\n1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n\n\n",
            "1\ta\ta\tX\t_\t_\t0\troot\t_\t_",
            "1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n",
            "1\ta\ta\tX\t_\t_\t0\troot\t_\t_\r\n\r\n",
            "\n",
        ] {
            let doc = parse_document(text).unwrap();
            assert_eq!(serialize_document(&doc), text, "{:?}", text);
        }
    }
}
