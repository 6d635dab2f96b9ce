//! The `redescribe` command line: `mine` runs the full loop, `eval` scores
//! one expression pair without mining, `oracle` brute-forces every
//! admissible pair on small inputs.
//!
//! Exit codes: 0 success, 2 input or validation failure, 3 internal
//! invariant breach.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::engine::{Bias, MinerConfig};
use crate::error::{Error, Result};
use crate::expr::{complement_jaccard, jaccard, Threshold};
use crate::oracle::OracleConfig;
use crate::parse::parse_in_family;
use crate::report::{write_jsonl, write_text};
use crate::store::{
    bucketize_numeric, BucketSpec, DescriptorFamily, FamilyId, NumericMatrix, ObjectUniverse,
    Store,
};

#[derive(Parser, Debug)]
#[command(
    name = "redescribe",
    version,
    about = "Mines redescriptions: pairs of set expressions over two descriptor \
             vocabularies that describe the same objects."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the alternating miner.
    Mine(MineArgs),
    /// Score a single expression pair.
    Eval(EvalArgs),
    /// Enumerate every admissible pair by brute force (small inputs only).
    Oracle(OracleArgs),
}

#[derive(Args, Debug)]
pub struct InputArgs {
    /// Universe file: one object identifier per line.
    #[arg(long)]
    pub universe: PathBuf,
    /// X family: `name<TAB>id1,id2,...` records, or a 0/1 matrix CSV when
    /// the file name ends in .csv.
    #[arg(long)]
    pub x_family: Option<PathBuf>,
    /// Y family, same formats as --x-family.
    #[arg(long)]
    pub y_family: Option<PathBuf>,
    /// Numeric matrix CSV backing whichever family file was not given.
    #[arg(long)]
    pub numeric_matrix: Option<PathBuf>,
    /// Bucket boundaries for --numeric-matrix: JSON list of
    /// {"variable": ..., "boundaries": [...]}.
    #[arg(long)]
    pub bucket_spec: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BiasFlag {
    NoNegationLhs,
    NoNegationRhs,
    NoDisjunctionLhs,
    NoDisjunctionRhs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Jsonl,
    Text,
}

#[derive(Args, Debug)]
pub struct MineArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Jaccard threshold; a ratio like 1/2 compares exactly.
    #[arg(long, default_value = "0.5")]
    pub theta: String,
    /// Depth limit for trees over X descriptors.
    #[arg(long, default_value_t = 2)]
    pub depth_top: usize,
    /// Depth limit for trees over Y descriptors.
    #[arg(long, default_value_t = 2)]
    pub depth_bottom: usize,
    /// Stop after this many alternations without an accepted redescription.
    #[arg(long, default_value_t = 10)]
    pub max_idle: usize,
    /// Hard cap on total alternations.
    #[arg(long, default_value_t = 1000)]
    pub max_alternations: usize,
    /// Supports must hold at least this many objects and exclude as many.
    #[arg(long, default_value_t = 1)]
    pub min_support: usize,
    /// Random seed; required so every run is reproducible.
    #[arg(long)]
    pub seed: u64,
    /// Probability of a randomized root move per grown tree.
    #[arg(long, default_value_t = 0.1)]
    pub root_random_prob: f64,
    /// Syntactic bias, repeatable.
    #[arg(long = "bias", value_enum)]
    pub bias: Vec<BiasFlag>,
    /// Allowed Jaccard drop per kept tightening change.
    #[arg(long, default_value = "0")]
    pub tighten_tolerance: String,
    /// Include tightening traces in the JSON output.
    #[arg(long)]
    pub explain: bool,
    #[arg(long, value_enum, default_value_t = OutputFormat::Jsonl)]
    pub format: OutputFormat,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Exploration policy variant: retire every descriptor on matched
    /// paths, including the terminal decision node.
    #[arg(long)]
    pub deactivate_full_path: bool,
    /// Cover with Y and grow the first tree over X instead.
    #[arg(long)]
    pub cover_with_y: bool,
    /// Universe size at or below which counting skips the AD-tree.
    #[arg(long, default_value_t = 64)]
    pub direct_count_cutoff: usize,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Expression over the X family.
    #[arg(long)]
    pub lhs: String,
    /// Expression over the Y family.
    #[arg(long)]
    pub rhs: String,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "0.5")]
    pub theta: String,
    #[arg(long, default_value_t = 2)]
    pub depth_top: usize,
    #[arg(long, default_value_t = 2)]
    pub depth_bottom: usize,
    #[arg(long, default_value_t = 1)]
    pub min_support: usize,
    #[arg(long = "bias", value_enum)]
    pub bias: Vec<BiasFlag>,
    /// Refuse to enumerate more expressions per side than this.
    #[arg(long, default_value_t = 1_000_000)]
    pub max_expressions: u128,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn bias_from_flags(flags: &[BiasFlag]) -> Bias {
    let mut bias = Bias::default();
    for flag in flags {
        match flag {
            BiasFlag::NoNegationLhs => bias.allow_negation_lhs = false,
            BiasFlag::NoNegationRhs => bias.allow_negation_rhs = false,
            BiasFlag::NoDisjunctionLhs => bias.allow_disjunction_lhs = false,
            BiasFlag::NoDisjunctionRhs => bias.allow_disjunction_rhs = false,
        }
    }
    bias
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::MalformedInput(format!("cannot open {}: {e}", path.display())))
}

fn load_family_file(
    path: &Path,
    universe: &ObjectUniverse,
    family_id: FamilyId,
) -> Result<DescriptorFamily> {
    let reader = open(path)?;
    if path.extension().map(|e| e == "csv").unwrap_or(false) {
        DescriptorFamily::load_bool_matrix(reader, universe, family_id)
    } else {
        DescriptorFamily::load_records(reader, universe, family_id)
    }
}

/// Loads the universe and both families. A numeric matrix plus bucket spec
/// backs whichever family file is missing; it cannot back both.
pub fn load_store(input: &InputArgs) -> Result<Store> {
    let universe = ObjectUniverse::load(open(&input.universe)?)?;

    let bucketized = match (&input.numeric_matrix, &input.bucket_spec) {
        (Some(matrix_path), Some(spec_path)) => {
            let matrix = NumericMatrix::load(open(matrix_path)?, &universe)?;
            let specs = BucketSpec::load_specs(open(spec_path)?)?;
            Some((matrix, specs))
        }
        (None, None) => None,
        _ => {
            return Err(Error::InvalidConfig(
                "--numeric-matrix and --bucket-spec must be given together".into(),
            ))
        }
    };

    let build_side = |family_id: FamilyId, path: &Option<PathBuf>| -> Result<DescriptorFamily> {
        match path {
            Some(p) => load_family_file(p, &universe, family_id),
            None => match &bucketized {
                Some((matrix, specs)) => {
                    let (family, dropped) =
                        bucketize_numeric(matrix, specs, &universe, family_id)?;
                    for name in dropped {
                        eprintln!("dropped bucket {name}: not a proper non-empty subset");
                    }
                    Ok(family)
                }
                None => Err(Error::InvalidConfig(format!(
                    "no source for the {family_id} family: give --{}-family or \
                     --numeric-matrix with --bucket-spec",
                    family_id.to_string().to_lowercase()
                ))),
            },
        }
    };

    if input.x_family.is_none() && input.y_family.is_none() {
        return Err(Error::InvalidConfig(
            "a numeric matrix can back only one family; give at least one of \
             --x-family / --y-family"
                .into(),
        ));
    }
    let x = build_side(FamilyId::X, &input.x_family)?;
    let y = build_side(FamilyId::Y, &input.y_family)?;
    Ok(Store::new(universe, x, y))
}

fn miner_config(args: &MineArgs) -> Result<MinerConfig> {
    Ok(MinerConfig {
        theta: Threshold::parse(&args.theta)?,
        depth_top: args.depth_top,
        depth_bottom: args.depth_bottom,
        max_idle_alternations: args.max_idle,
        max_total_alternations: args.max_alternations,
        min_support: args.min_support,
        seed: args.seed,
        root_random_prob: args.root_random_prob,
        bias: bias_from_flags(&args.bias),
        tighten_tolerance: Threshold::parse(&args.tighten_tolerance)?,
        deactivate_full_path: args.deactivate_full_path,
        cover_with_y: args.cover_with_y,
        direct_count_cutoff: args.direct_count_cutoff,
        ..MinerConfig::default()
    })
}

fn output_writer(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => Ok(Box::new(
            File::create(p).map_err(|e| {
                Error::MalformedInput(format!("cannot create {}: {e}", p.display()))
            })?,
        )),
        None => Ok(Box::new(std::io::stdout())),
    }
}

pub fn cmd_mine(args: &MineArgs) -> Result<()> {
    let store = load_store(&args.input)?;
    let config = miner_config(args)?;
    config.validate()?;
    let output = crate::engine::run(store, &config)?;
    let mut w = output_writer(&args.output)?;
    match args.format {
        OutputFormat::Jsonl => {
            write_jsonl(&mut w, &output.redescriptions, &output.store, args.explain)?
        }
        OutputFormat::Text => write_text(&mut w, &output.redescriptions, &output.store)?,
    }
    w.flush()?;
    output.report.write_log(&mut std::io::stderr().lock())?;
    Ok(())
}

/// The `eval` text: coefficient lines first, then the sorted supports.
pub fn eval_text(store: &Store, lhs_text: &str, rhs_text: &str) -> Result<String> {
    let lhs = parse_in_family(lhs_text, &store.x, FamilyId::X)?;
    let rhs = parse_in_family(rhs_text, &store.y, FamilyId::Y)?;
    lhs.validate(&store.x)?;
    rhs.validate(&store.y)?;
    let lhs_support = lhs.evaluate(store)?;
    let rhs_support = rhs.evaluate(store)?;
    let j = jaccard(&lhs_support, &rhs_support);
    let cj = complement_jaccard(&lhs_support, &rhs_support);
    let mut out = String::new();
    out.push_str(&format!("jaccard {:.6} ({})\n", j.to_f64(), j));
    out.push_str(&format!("complement_jaccard {:.6} ({})\n", cj.to_f64(), cj));
    out.push_str(&format!(
        "lhs_support {}\n",
        store.universe.names_of(&lhs_support).join(",")
    ));
    out.push_str(&format!(
        "rhs_support {}\n",
        store.universe.names_of(&rhs_support).join(",")
    ));
    Ok(out)
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let store = load_store(&args.input)?;
    let text = eval_text(&store, &args.lhs, &args.rhs)?;
    print!("{text}");
    Ok(())
}

pub fn cmd_oracle(args: &OracleArgs) -> Result<()> {
    let store = load_store(&args.input)?;
    let config = OracleConfig {
        theta: Threshold::parse(&args.theta)?,
        depth_lhs: args.depth_top,
        depth_rhs: args.depth_bottom,
        min_support: args.min_support,
        bias: bias_from_flags(&args.bias),
        max_expressions: args.max_expressions,
    };
    let entries = crate::oracle::enumerate(&store, &config)?;
    let mut w = output_writer(&args.output)?;
    for e in &entries {
        let record = serde_json::json!({
            "lhs_support": store.universe.names_of(&e.lhs_support),
            "rhs_support": store.universe.names_of(&e.rhs_support),
            "jaccard": e.jaccard.to_string(),
            "complement_jaccard": e.complement_jaccard.to_string(),
            "lhs_example": e.lhs_example,
            "rhs_example": e.rhs_example,
        });
        writeln!(w, "{record}")?;
    }
    w.flush()?;
    Ok(())
}

/// Parses and dispatches; maps every failure to the documented exit codes.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders --help/--version as "errors" with exit code 0
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Mine(args) => cmd_mine(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Oracle(args) => cmd_oracle(args),
    };
    match result {
        Ok(()) => 0,
        Err(Error::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            3
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
