//! The `ucxn` command line.
//!
//! Exit codes: 0 success, 1 validation failures found, 2 usage or parse error.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::annotator::{annotate_sentences, strip_sentence, AnnotationSummary};
use crate::conllu::{ParseError, ParseOptions, Reader, Sentence, Severity, Writer};
use crate::exec::{self, Execution};
use crate::matcher::{sentence_label, Matcher};
use crate::pattern::{parse_query_file, Query};
use crate::querypack::{self, Pack};
use crate::report::{emit_table, CountTable, Format, WhOptions, WhPositionTable};

const BATCH: usize = 2048;

#[derive(Debug, Parser)]
#[command(name = "ucxn", version, about = "Universal Construction annotation for CoNLL-U")]
struct Cli {
    /// Worker threads for sentence-parallel processing (1 = sequential).
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Keep sentences with broken trees (they are passed through unannotated).
    #[arg(long, global = true)]
    lenient: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check files and report issues on standard error.
    Validate {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Print every match of the queries in a file.
    Match {
        queries: PathBuf,
        input: Option<PathBuf>,
        /// One JSON record per line instead of TSV.
        #[arg(long)]
        json: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write Cxn/CxnElt keys into MISC.
    Annotate {
        /// Bundled pack code (en, de, ...) or a path to a query file.
        #[arg(long, conflicts_with = "queries", required_unless_present = "queries")]
        pack: Option<String>,
        #[arg(long)]
        queries: Option<PathBuf>,
        input: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
        /// Print per-query instance counts on standard error.
        #[arg(long)]
        summary: bool,
    },
    /// Remove all Cxn/CxnElt keys.
    Strip {
        input: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Count construction instances in an annotated file.
    Stats {
        input: Option<PathBuf>,
        #[arg(long, default_value = "tsv")]
        format: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Pre/post position of pronouns relative to their heads.
    WhReport {
        input: Option<PathBuf>,
        #[arg(long, default_value = "tsv")]
        format: String,
        /// UPOS values whose non-interrogative tokens form the baseline.
        #[arg(long, value_delimiter = ',', default_value = "PRON")]
        baseline_upos: Vec<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// List bundled packs and their queries.
    Packs,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(short, long, conflicts_with = "in_place")]
    output: Option<PathBuf>,
    /// Rewrite the input file.
    #[arg(long, requires = "input")]
    in_place: bool,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Validation,
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let jobs = cli.jobs;
    let result = exec::with_jobs(if jobs > 1 { jobs } else { 0 }, || dispatch(cli));
    match result {
        Ok(()) => 0,
        Err(Failure::Validation) => 1,
        Err(Failure::Usage(msg)) => {
            eprintln!("ucxn: {}", msg);
            2
        }
    }
}

fn dispatch(cli: Cli) -> Outcome {
    let ctx = Context {
        execution: if cli.jobs > 1 {
            Execution::Parallel
        } else {
            Execution::Sequential
        },
        options: ParseOptions {
            lenient: cli.lenient,
        },
    };
    match cli.command {
        Command::Validate { inputs } => validate(&inputs),
        Command::Match {
            queries,
            input,
            json,
            output,
        } => {
            let queries = read_queries(&queries)?;
            ctx.match_rows(&queries, input.as_deref(), json, output.as_deref())
        }
        Command::Annotate {
            pack,
            queries,
            input,
            out,
            summary,
        } => {
            let queries = match (pack, queries) {
                (Some(p), _) => resolve_pack(&p)?.queries,
                (None, Some(q)) => read_queries(&q)?,
                (None, None) => return Err(Failure::Usage("annotate needs --pack or --queries".into())),
            };
            let matchers: Vec<Matcher> = queries.iter().map(Matcher::new).collect();
            let mut total = AnnotationSummary {
                counts: queries.iter().map(|q| (q.name.clone(), 0)).collect(),
                skipped: 0,
            };
            ctx.rewrite(input.as_deref(), &out, |batch| {
                let s = annotate_sentences(batch, &matchers, ctx.execution);
                for (slot, (_, n)) in total.counts.iter_mut().zip(s.counts) {
                    slot.1 += n;
                }
                total.skipped += s.skipped;
            })?;
            if summary {
                for (name, n) in &total.counts {
                    eprintln!("{}\t{}", name, n);
                }
            }
            if total.skipped > 0 {
                eprintln!("ucxn: {} sentence(s) with broken trees left unannotated", total.skipped);
            }
            Ok(())
        }
        Command::Strip { input, out } => {
            ctx.rewrite(input.as_deref(), &out, |batch| {
                exec::map_mut(batch, ctx.execution, strip_sentence);
            })
        }
        Command::Stats {
            input,
            format,
            output,
        } => {
            let format = parse_format(&format)?;
            let mut table = CountTable::default();
            ctx.for_each_batch(input.as_deref(), |_, batch, _| {
                batch.iter().for_each(|s| table.add_sentence(s));
                Ok(())
            })?;
            let mut text = emit_table(&table, format);
            match format {
                Format::Tsv => {
                    text.push_str(&format!("# total\t{}\n", table.total()));
                    text.push_str(&format!("# sentences\t{}\n", table.sentences));
                    text.push_str(&format!("# tokens\t{}\n", table.tokens));
                }
                Format::StructuredLines => {
                    text.push_str(
                        &serde_json::json!({
                            "total": table.total(),
                            "sentences": table.sentences,
                            "tokens": table.tokens,
                        })
                        .to_string(),
                    );
                    text.push('\n');
                }
            }
            write_text(output.as_deref(), &text)
        }
        Command::WhReport {
            input,
            format,
            baseline_upos,
            output,
        } => {
            let format = parse_format(&format)?;
            let options = WhOptions { baseline_upos };
            let mut table = WhPositionTable::default();
            ctx.for_each_batch(input.as_deref(), |_, batch, _| {
                batch.iter().for_each(|s| table.add_sentence(s, &options));
                Ok(())
            })?;
            write_text(output.as_deref(), &emit_table(&table, format))
        }
        Command::Packs => {
            let mut text = String::new();
            for entry in querypack::pack_manifest() {
                if entry.bundled {
                    for q in entry.queries {
                        text.push_str(&format!("{}\t{}\n", entry.language, q));
                    }
                } else {
                    text.push_str(&format!("{}\t(absent)\n", entry.language));
                }
            }
            write_text(None, &text)
        }
    }
}

struct Context {
    execution: Execution,
    options: ParseOptions,
}

impl Context {
    /// Reads `input` in batches. `f` gets the index of the batch's first
    /// sentence and the stream layout seen so far.
    fn for_each_batch(
        &self,
        input: Option<&Path>,
        mut f: impl FnMut(usize, &mut [Sentence], Layout) -> io::Result<()>,
    ) -> Result<Layout, Failure> {
        let reader = open_input(input)?;
        let mut reader = Reader::with_options(reader, self.options);
        let mut batch = Vec::with_capacity(BATCH);
        let mut seen = 0;
        loop {
            let next = reader.next();
            let end = next.is_none();
            if let Some(s) = next {
                batch.push(s?);
            }
            if batch.len() == BATCH || (end && !batch.is_empty()) {
                let layout = Layout {
                    leading_blank_lines: reader.leading_blank_lines(),
                    crlf: reader.crlf(),
                };
                f(seen, &mut batch, layout)?;
                seen += batch.len();
                batch.clear();
            }
            if end {
                break;
            }
        }
        Ok(Layout {
            leading_blank_lines: reader.leading_blank_lines(),
            crlf: reader.crlf(),
        })
    }

    /// Streams `input` to the chosen output, transforming each batch.
    fn rewrite(
        &self,
        input: Option<&Path>,
        out: &OutputArgs,
        mut f: impl FnMut(&mut [Sentence]),
    ) -> Outcome {
        let target = if out.in_place { input } else { out.output.as_deref() };
        // Write next to the target and rename, so the input survives a failure.
        let tmp = target.map(|p| {
            let mut name = p.as_os_str().to_owned();
            name.push(".ucxn-tmp");
            PathBuf::from(name)
        });
        let result = (|| {
            let sink: Box<dyn Write> = match &tmp {
                Some(t) => Box::new(File::create(t).map_err(|e| io_failure(t, e))?),
                None => Box::new(io::stdout().lock()),
            };
            let mut sink = Some(BufWriter::new(sink));
            let mut writer = None;
            let layout = self.for_each_batch(input, |_, batch, layout| {
                f(batch);
                let w = match &mut writer {
                    Some(w) => w,
                    None => {
                        let mut w = Writer::new(sink.take().expect("sink"), layout.crlf);
                        w.write_blank_lines(layout.leading_blank_lines)?;
                        writer.insert(w)
                    }
                };
                batch.iter().try_for_each(|s| w.write_sentence(s))
            })?;
            let mut w = match writer {
                Some(w) => w,
                None => {
                    let mut w = Writer::new(sink.take().expect("sink"), layout.crlf);
                    w.write_blank_lines(layout.leading_blank_lines)?;
                    w
                }
            };
            w.flush()?;
            Ok(())
        })();
        match (result, &tmp, target) {
            (Ok(()), Some(t), Some(p)) => fs::rename(t, p).map_err(|e| io_failure(p, e)),
            (Ok(()), _, _) => Ok(()),
            (Err(e), t, _) => {
                if let Some(t) = t {
                    let _ = fs::remove_file(t);
                }
                Err(e)
            }
        }
    }

    fn match_rows(
        &self,
        queries: &[Query],
        input: Option<&Path>,
        json: bool,
        output: Option<&Path>,
    ) -> Outcome {
        let matchers: Vec<Matcher> = queries.iter().map(Matcher::new).collect();
        let mut out = open_output(output)?;
        let mut skipped = 0usize;
        self.for_each_batch(input, |first, batch, _| {
            let rows = exec::map_indexed(batch, self.execution, |i, s| {
                s.tree()?;
                let label = sentence_label(s, first + i);
                let mut text = String::new();
                for m in &matchers {
                    for binding in m.match_sentence(s) {
                        let r = crate::matcher::MatchResult {
                            sentence_id: label.clone(),
                            query: m.query().name.clone(),
                            binding,
                        };
                        text.push_str(&if json { r.to_json() } else { r.to_tsv() });
                        text.push('\n');
                    }
                }
                Some(text)
            });
            for r in rows {
                match r {
                    Some(text) => out.write_all(text.as_bytes())?,
                    None => skipped += 1,
                }
            }
            Ok(())
        })?;
        out.flush()?;
        if skipped > 0 {
            eprintln!("ucxn: {} sentence(s) with broken trees skipped", skipped);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
struct Layout {
    leading_blank_lines: usize,
    crlf: bool,
}

fn validate(inputs: &[PathBuf]) -> Outcome {
    let mut found = 0usize;
    for path in inputs {
        let file = File::open(path).map_err(|e| io_failure(path, e))?;
        let reader = Reader::with_options(BufReader::new(file), ParseOptions { lenient: true });
        for (i, s) in reader.enumerate() {
            match s {
                Ok(s) => {
                    for issue in s.issues() {
                        found += matches!(issue.severity, Severity::Error) as usize;
                        eprintln!("{}: {}: {}", path.display(), sentence_label(&s, i), issue);
                    }
                }
                Err(ParseError::Io(e)) => return Err(io_failure(path, e)),
                Err(e) => {
                    found += 1;
                    eprintln!("{}: {}", path.display(), e);
                    break;
                }
            }
        }
    }
    if found > 0 {
        Err(Failure::Validation)
    } else {
        Ok(())
    }
}

fn resolve_pack(arg: &str) -> Result<Pack, Failure> {
    if querypack::pack_source(arg).is_some() {
        return querypack::load_pack(arg).map_err(|e| Failure::Usage(e.to_string()));
    }
    let path = Path::new(arg);
    if path.exists() {
        let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
        let language = path.file_stem().and_then(|s| s.to_str()).unwrap_or("custom");
        return Pack::from_source(language, &text)
            .map_err(|e| Failure::Usage(format!("{}: {}", path.display(), e)));
    }
    Err(Failure::Usage(format!("unknown pack: {}", arg)))
}

fn read_queries(path: &Path) -> Result<Vec<Query>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    parse_query_file(&text).map_err(|e| Failure::Usage(format!("{}: {}", path.display(), e)))
}

fn parse_format(s: &str) -> Result<Format, Failure> {
    s.parse().map_err(|e: crate::report::UnknownFormat| Failure::Usage(e.to_string()))
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Usage(format!("{}: {}", path.display(), e))
}

fn open_input(path: Option<&Path>) -> Result<Box<dyn BufRead>, Failure> {
    match path {
        None => Ok(Box::new(BufReader::new(io::stdin()))),
        Some(p) if p.as_os_str() == "-" => Ok(Box::new(BufReader::new(io::stdin()))),
        Some(p) => Ok(Box::new(BufReader::new(
            File::open(p).map_err(|e| io_failure(p, e))?,
        ))),
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(p) => Ok(Box::new(BufWriter::new(
            File::create(p).map_err(|e| io_failure(p, e))?,
        ))),
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Outcome {
    let mut out = open_output(path)?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}
