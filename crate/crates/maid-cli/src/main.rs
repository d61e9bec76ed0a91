use std::fmt;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use maid_cli::doc::{DocError, GameDoc, ModelDoc};
use maid_cli::render;
use maid_core::convert::{efg_to_maim, maim_to_efg, SplitMode};
use maid_core::equilibria::{default_schedule, is_thpe, pure_nash, spe_solve, ThpeVerdict};
use maid_core::export::export_efg_text;
use maid_core::model::Maim;
use maid_core::policy::PureProfile;
use maid_core::relevance::{condense, relevance_graph};
use maid_core::subgames::{is_feasible_subgame, maid_subgame, maim_subgames, subgame_bases};

#[derive(Parser)]
#[command(name = "maid", version, about = "Analyse and solve multi-agent influence diagrams")]
struct Cli {
    /// Seed for randomized oracle subcommands; solving is deterministic and
    /// ignores it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for library parallelism; results merge
    /// deterministically, so the output does not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model document and report diagnostics.
    Validate { file: String },
    /// Print the relevance graph and its condensation.
    Analyze {
        file: String,
        #[arg(long, value_enum, default_value_t = AnalyzeFormat::Table)]
        format: AnalyzeFormat,
    },
    /// List subgame bases, their instances, and feasibility.
    Subgames {
        file: String,
        /// Write each feasible subgame instance as a model document here.
        #[arg(long)]
        emit_dir: Option<String>,
    },
    /// Print equilibrium profiles as decision / context / action tables.
    Solve {
        file: String,
        #[arg(long, value_enum)]
        refinement: Refinement,
    },
    /// Convert between the model form and the game-tree form.
    Convert {
        file: String,
        #[arg(long, value_enum)]
        to: Target,
        /// Variable split for --to=efg.
        #[arg(long, value_enum, default_value_t = Mode::Full)]
        mode: Mode,
        /// Game title for --to=efg; defaults to the file name stem.
        #[arg(long)]
        title: Option<String>,
    },
    /// Print the model as a DOT drawing with per-agent colours.
    ExportDot { file: String },
}

#[derive(Copy, Clone, ValueEnum)]
enum AnalyzeFormat {
    Table,
    Dot,
}

#[derive(Copy, Clone, ValueEnum)]
enum Refinement {
    Ne,
    Spe,
    Thpe,
}

impl Refinement {
    fn name(self) -> &'static str {
        match self {
            Refinement::Ne => "ne",
            Refinement::Spe => "spe",
            Refinement::Thpe => "thpe",
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum Target {
    Efg,
    Maim,
}

#[derive(Copy, Clone, ValueEnum)]
enum Mode {
    Full,
    Minimal,
}

/// Failure paths and their exit codes: validation problems exit 1, an empty
/// solution set exits 2, I/O and parse problems exit 3.
enum CliError {
    Io(String, String),
    Parse(String, String),
    Validation(String, String),
    Empty(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(..) => 1,
            CliError::Empty(..) => 2,
            CliError::Io(..) | CliError::Parse(..) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(file, m) => write!(f, "{file}: {m}"),
            CliError::Parse(file, m) => write!(f, "{file}: parse error: {m}"),
            CliError::Validation(file, m) => write!(f, "{file}: invalid input: {m}"),
            CliError::Empty(m) => write!(f, "{m}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version print to stdout and exit cleanly; real usage
            // errors land on the parse-error exit code.
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn read(file: &str) -> Result<String, CliError> {
    fs::read_to_string(file).map_err(|e| CliError::Io(file.to_string(), e.to_string()))
}

fn wrap(file: &str, e: DocError) -> CliError {
    match e {
        DocError::Parse(m) => CliError::Parse(file.to_string(), m),
        DocError::Validation(m) => CliError::Validation(file.to_string(), m),
    }
}

fn load_doc(file: &str) -> Result<ModelDoc, CliError> {
    ModelDoc::parse(&read(file)?).map_err(|e| wrap(file, e))
}

fn load_model(file: &str) -> Result<Maim, CliError> {
    load_doc(file)?.to_model().map_err(|e| wrap(file, e))
}

fn invalid(file: &str, e: impl fmt::Display) -> CliError {
    CliError::Validation(file.to_string(), e.to_string())
}

/// File name up to the first dot: `models/taxi.model.json` gives `taxi`.
fn stem(file: &str) -> String {
    let name = Path::new(file)
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let stem = name.split('.').next().unwrap_or("").to_string();
    if stem.is_empty() {
        "game".to_string()
    } else {
        stem
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Validate { file } => validate(file),
        Command::Analyze { file, format } => analyze(file, *format),
        Command::Subgames { file, emit_dir } => subgames(file, emit_dir.as_deref()),
        Command::Solve { file, refinement } => solve(file, *refinement),
        Command::Convert { file, to, mode, title } => {
            convert(file, *to, *mode, title.as_deref())
        }
        Command::ExportDot { file } => export_dot(file),
    }
}

fn validate(file: &str) -> Result<(), CliError> {
    let model = load_model(file)?;
    let graph = model.graph();
    if graph.node_count() == 0 {
        eprintln!("warning: {file}: model has no nodes");
    }
    println!(
        "{file}: ok (agents={} nodes={} decisions={} cpds={})",
        graph.agent_count(),
        graph.node_count(),
        graph.decisions().len(),
        model.cpds().len()
    );
    Ok(())
}

fn analyze(file: &str, format: AnalyzeFormat) -> Result<(), CliError> {
    let graph = load_doc(file)?.to_graph().map_err(|e| wrap(file, e))?;
    let rel = relevance_graph(&graph).map_err(|e| invalid(file, e))?;
    let cond = condense(&rel);
    match format {
        AnalyzeFormat::Table => print!("{}", render::analyze_table(&graph, &rel, &cond)),
        AnalyzeFormat::Dot => print!("{}", render::analyze_dot(&graph, &rel, &cond)),
    }
    Ok(())
}

fn subgames(file: &str, emit_dir: Option<&str>) -> Result<(), CliError> {
    let model = load_model(file)?;
    let graph = model.graph();
    if let Some(dir) = emit_dir {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_string(), e.to_string()))?;
    }
    let bases = subgame_bases(graph).map_err(|e| invalid(file, e))?;
    for (i, base) in bases.iter().enumerate() {
        println!(
            "base {}: {}",
            i + 1,
            render::base_line(graph, &base.nodes, base.is_proper(graph))
        );
        let sub = maid_subgame(graph, base).map_err(|e| invalid(file, e))?;
        let instances = maim_subgames(&model, &sub).map_err(|e| invalid(file, e))?;
        for (j, inst) in instances.iter().enumerate() {
            let feasible = is_feasible_subgame(&model, inst).map_err(|e| invalid(file, e))?;
            let label = inst.boundary_label(&model);
            let label = if label.is_empty() { "-".to_string() } else { label };
            println!(
                "  instance {}: {}",
                label,
                if feasible { "feasible" } else { "infeasible" }
            );
            if feasible {
                if let Some(dir) = emit_dir {
                    let out = format!("{dir}/base{}_inst{}.model.json", i + 1, j + 1);
                    fs::write(&out, ModelDoc::from_model(&inst.model).to_json())
                        .map_err(|e| CliError::Io(out.clone(), e.to_string()))?;
                    println!("  wrote {out}");
                }
            }
        }
    }
    Ok(())
}

fn solve(file: &str, refinement: Refinement) -> Result<(), CliError> {
    let model = load_model(file)?;
    let profiles: Vec<PureProfile> = match refinement {
        Refinement::Ne => pure_nash(&model).map_err(|e| invalid(file, e))?,
        Refinement::Spe => {
            let solution = spe_solve(&model).map_err(|e| invalid(file, e))?;
            for note in &solution.diagnostics {
                eprintln!("note: {note}");
            }
            solution.profiles
        }
        Refinement::Thpe => {
            let candidates = pure_nash(&model).map_err(|e| invalid(file, e))?;
            let total = candidates.len();
            let schedule = default_schedule();
            let mut kept = Vec::new();
            for p in candidates {
                let report = is_thpe(&model, &p, &schedule).map_err(|e| invalid(file, e))?;
                if matches!(report.verdict, ThpeVerdict::Yes) {
                    kept.push(p);
                }
            }
            eprintln!(
                "note: {} of {} pure equilibria are trembling-hand perfect",
                kept.len(),
                total
            );
            kept
        }
    };
    if profiles.is_empty() {
        return Err(CliError::Empty(format!(
            "{file}: no {} profiles",
            refinement.name()
        )));
    }
    for (i, profile) in profiles.iter().enumerate() {
        println!("# profile {}", i + 1);
        println!("# utilities: {}", render::utilities_line(&model, profile));
        print!("{}", render::profile_table(&model, profile));
    }
    Ok(())
}

fn convert(file: &str, to: Target, mode: Mode, title: Option<&str>) -> Result<(), CliError> {
    match to {
        Target::Efg => {
            let model = load_model(file)?;
            let mode = match mode {
                Mode::Full => SplitMode::Full,
                Mode::Minimal => SplitMode::Minimal,
            };
            let title = title.map(str::to_string).unwrap_or_else(|| stem(file));
            let conv = maim_to_efg(&model, &title, mode).map_err(|e| invalid(file, e))?;
            print!("{}", export_efg_text(&conv.game));
            for entry in &conv.map.entries {
                eprintln!(
                    "map: {} row {} -> iset {}",
                    model.graph().name(entry.decision),
                    entry.row,
                    entry.iset
                );
            }
        }
        Target::Maim => {
            let doc = GameDoc::parse(&read(file)?).map_err(|e| wrap(file, e))?;
            let game = doc.to_game().map_err(|e| wrap(file, e))?;
            let conv = efg_to_maim(&game).map_err(|e| invalid(file, e))?;
            print!("{}", ModelDoc::from_model(&conv.model).to_json());
            for entry in &conv.map.entries {
                eprintln!(
                    "map: iset {} -> {} row {}",
                    entry.iset,
                    conv.model.graph().name(entry.decision),
                    entry.row
                );
            }
        }
    }
    Ok(())
}

fn export_dot(file: &str) -> Result<(), CliError> {
    let graph = load_doc(file)?.to_graph().map_err(|e| wrap(file, e))?;
    print!("{}", render::model_dot(&graph));
    Ok(())
}
