//! Command-line front end.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::coverage::{parse_coverage_tsv, parse_jacoco_xml, CoverageSet, PathMapping};
use crate::history::{
    convert_git_log, load_bundle, Commit, TicketPattern, TicketTypes, DEFAULT_TICKET_PATTERN,
};
use crate::pipeline::{analyze, Options, Snapshot};
use crate::report::{parse_color, render_json, render_svg, render_table, write_bundle, Palette};
use crate::triviality::FilterCategory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HistoryFormat {
    Bundle,
    GitLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CoverageFormat {
    Tsv,
    Jacoco,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
    Svg,
}

/// Ticket coverage: which methods changed for a ticket were executed by
/// tests, only at startup, or not at all.
#[derive(Debug, Parser)]
#[command(
    name = "ticketcov",
    version,
    args_conflicts_with_subcommands = true,
    subcommand_negates_reqs = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    #[command(flatten)]
    pub analyze: AnalyzeArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert `git log -p` output into a history bundle.
    ConvertGitLog {
        /// Output of `git log -p --format='commit %H%nauthor-date %at%n%n%w(0,4,4)%B'`.
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// History bundle (JSON lines) or git log text.
    #[arg(long, required = true)]
    pub history: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "bundle")]
    pub history_format: HistoryFormat,
    /// Reject unknown fields in bundle records.
    #[arg(long)]
    pub strict: bool,
    /// Coverage recorded while running the tests.
    #[arg(long, required = true)]
    pub coverage_test: Option<PathBuf>,
    /// Coverage recorded during program startup only.
    #[arg(long)]
    pub coverage_startup: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tsv")]
    pub coverage_format: CoverageFormat,
    /// Source root used to map JaCoCo class names to paths; repeatable.
    #[arg(long)]
    pub source_root: Vec<String>,
    /// Regex with one capture group for the ticket number.
    #[arg(long, default_value = DEFAULT_TICKET_PATTERN)]
    pub ticket_pattern: String,
    /// Link a commit to every ticket it mentions, not just the first.
    #[arg(long)]
    pub all_ticket_refs: bool,
    /// JSON object mapping ticket numbers to feature, bug or maintenance.
    #[arg(long)]
    pub ticket_types: Option<PathBuf>,
    /// Also report each ticket without trivial methods.
    #[arg(long)]
    pub filter_trivial: bool,
    /// Comma-separated subset of tostring,getter,trivial.
    #[arg(long, value_delimiter = ',', requires = "filter_trivial")]
    pub filter_categories: Vec<FilterCategory>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: OutputFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// File tree as of the parent of the first commit.
    #[arg(long)]
    pub snapshot_dir: Option<PathBuf>,
    /// Source file extensions to analyze.
    #[arg(long, value_delimiter = ',', default_value = "java")]
    pub extensions: Vec<String>,
    #[arg(long, value_parser = parse_color)]
    pub color_test: Option<String>,
    #[arg(long, value_parser = parse_color)]
    pub color_startup: Option<String>,
    #[arg(long, value_parser = parse_color)]
    pub color_untested: Option<String>,
}

/// An input problem, reported as `error: <message>` with exit status 2.
struct Failure(String);

impl Failure {
    fn at(path: &Path, e: impl std::fmt::Display) -> Self {
        Failure(format!("{}: {e}", path.display()))
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::at(path, e))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::at(path, e))
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::at(path, e)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Failure(format!("<stdout>: {e}"))),
    }
}

fn load_history(args: &AnalyzeArgs) -> Result<Vec<Commit>, Failure> {
    let path = args.history.as_deref().expect("required by clap");
    match args.history_format {
        HistoryFormat::Bundle => {
            load_bundle(open(path)?, args.strict).map_err(|e| Failure::at(path, e))
        }
        HistoryFormat::GitLog => convert_git_log(&read(path)?).map_err(|e| Failure::at(path, e)),
    }
}

fn load_coverage(
    path: &Path,
    format: CoverageFormat,
    mapping: &PathMapping,
) -> Result<std::collections::BTreeSet<crate::parser::MethodKey>, Failure> {
    match format {
        CoverageFormat::Tsv => parse_coverage_tsv(open(path)?),
        CoverageFormat::Jacoco => parse_jacoco_xml(open(path)?, mapping),
    }
    .map_err(|e| Failure::at(path, e))
}

fn analyze_command(
    args: &AnalyzeArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    let commits = load_history(args)?;

    let mut mapping = PathMapping::with_roots(args.source_root.clone());
    mapping.known_paths = commits
        .iter()
        .flat_map(|c| &c.diffs)
        .flat_map(|d| [&d.old_path, &d.new_path])
        .flatten()
        .cloned()
        .collect();
    let test_path = args.coverage_test.as_deref().expect("required by clap");
    let coverage = CoverageSet {
        test: load_coverage(test_path, args.coverage_format, &mapping)?,
        startup: match &args.coverage_startup {
            Some(p) => load_coverage(p, args.coverage_format, &mapping)?,
            None => Default::default(),
        },
    };

    let ticket_types = match &args.ticket_types {
        Some(p) => TicketTypes::from_json(&read(p)?).map_err(|e| Failure::at(p, e))?,
        None => TicketTypes::default(),
    };
    let options = Options {
        extensions: args.extensions.clone(),
        ticket_pattern: TicketPattern::new(&args.ticket_pattern, args.all_ticket_refs)
            .map_err(|e| Failure(format!("--ticket-pattern: {e}")))?,
        ticket_types,
        filter: args.filter_trivial.then(|| args.filter_categories.clone()),
    };
    let snapshot = args
        .snapshot_dir
        .as_ref()
        .map(Snapshot::from_dir)
        .unwrap_or_default();

    let analysis =
        analyze(&commits, &snapshot, &coverage, &options).map_err(|e| Failure(e.to_string()))?;
    for w in &analysis.warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }

    let text = match args.format {
        OutputFormat::Table => render_table(&analysis.reports),
        OutputFormat::Json => render_json(&analysis.reports),
        OutputFormat::Svg => {
            let mut palette = Palette::default();
            if let Some(c) = &args.color_test {
                palette.test_exclusive = c.clone();
            }
            if let Some(c) = &args.color_startup {
                palette.startup = c.clone();
            }
            if let Some(c) = &args.color_untested {
                palette.untested = c.clone();
            }
            render_svg(&analysis.reports, args.filter_trivial, &palette)
        }
    };
    emit(args.out.as_deref(), &text, stdout)
}

/// Runs the tool with `args` (including the program name) and returns the
/// exit status: 0 on success, 2 on usage or input errors.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
                2
            } else {
                let _ = write!(stdout, "{rendered}");
                0
            };
        }
    };
    let result = match &cli.command {
        Some(Command::ConvertGitLog { input, out }) => read(input)
            .and_then(|text| convert_git_log(&text).map_err(|e| Failure::at(input, e)))
            .and_then(|commits| emit(out.as_deref(), &write_bundle(&commits), stdout)),
        None => analyze_command(&cli.analyze, stdout, stderr),
    };
    match result {
        Ok(()) => 0,
        Err(Failure(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
    }
}
