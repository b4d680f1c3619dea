use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spst::estimator::{estimate_tree, EstimatedModel, EstimatorConfig};
use spst::fasta::{check_records, parse_fasta, resolve_alphabet};
use spst::{
    compare_matrices, distance_matrix, neighbor_join, root_at_outgroup, Alphabet, BetaParam,
    DistanceMatrix, Execution, SparseContextTree,
};

/// Sparse context tree distances and neighbor-joining phylogenies.
#[derive(Parser)]
#[command(name = "spst", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate one sparse context tree per FASTA record.
    Train {
        fasta: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        estimator: EstimatorArgs,
    },
    /// Compute the beta-distance matrix over all `.tree` files in a directory.
    Dist {
        dir: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Reconstruct a neighbor-joining tree from a PHYLIP matrix.
    Nj {
        phylip: PathBuf,
        #[arg(long)]
        outgroup: Option<String>,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write a tab-separated edge list.
        #[arg(long)]
        edges: Option<PathBuf>,
    },
    /// Pair the entries of two PHYLIP matrices as CSV.
    Compare {
        first: PathBuf,
        second: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run train, dist and nj in one go.
    Pipeline {
        fasta: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long)]
        outgroup: Option<String>,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        estimator: EstimatorArgs,
    },
}

#[derive(Args)]
struct EstimatorArgs {
    /// `protein`, `dna`, `infer`, or the symbols themselves (e.g. `ACGT`).
    #[arg(long, default_value = "protein")]
    alphabet: String,
    #[arg(long, default_value_t = 5)]
    max_depth: usize,
    #[arg(long, default_value_t = 2)]
    min_count: u64,
    #[arg(long, default_value_t = 0.10)]
    merge_threshold: f64,
    #[arg(long, default_value_t = 1.0)]
    keep_threshold: f64,
    #[arg(long, default_value_t = 0.5)]
    pseudocount: f64,
}

impl EstimatorArgs {
    fn config(&self) -> EstimatorConfig {
        EstimatorConfig {
            max_depth: self.max_depth,
            min_count: self.min_count,
            merge_threshold: self.merge_threshold,
            keep_threshold: self.keep_threshold,
            pseudocount: self.pseudocount,
        }
    }
}

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Train {
            fasta,
            output,
            estimator,
        } => {
            train(&fasta, &output, &estimator)?;
        }
        Command::Dist { dir, beta, output } => {
            let matrix = dist(&dir, beta)?;
            write_atomic(&output, matrix.to_phylip()?.as_bytes())?;
        }
        Command::Nj {
            phylip,
            outgroup,
            output,
            edges,
        } => nj(&phylip, outgroup.as_deref(), &output, edges.as_deref())?,
        Command::Compare {
            first,
            second,
            output,
        } => {
            let a = read_matrix(&first)?;
            let b = read_matrix(&second)?;
            write_atomic(&output, compare_matrices(&a, &b)?.to_csv()?.as_bytes())?;
        }
        Command::Pipeline {
            fasta,
            beta,
            outgroup,
            output,
            estimator,
        } => {
            let trees = output.join("trees");
            train(&fasta, &trees, &estimator)?;
            let matrix = dist(&trees, beta)?;
            let phylip = output.join("distances.phy");
            write_atomic(&phylip, matrix.to_phylip()?.as_bytes())?;
            nj(
                &phylip,
                outgroup.as_deref(),
                &output.join("tree.nwk"),
                Some(&output.join("edges.tsv")),
            )?;
        }
    }
    Ok(())
}

fn train(fasta: &Path, dir: &Path, args: &EstimatorArgs) -> CliResult<()> {
    let records = parse_fasta(fasta).map_err(|e| format!("{}: {e}", fasta.display()))?;
    let alphabet: Alphabet = resolve_alphabet(&args.alphabet, &records)?;
    check_records(&records, &alphabet)?;
    let config = args.config();
    config.validate()?;
    let models: Vec<EstimatedModel> = Execution::default()
        .map_slice(&records, |r| {
            estimate_tree(&r.residues, &alphabet, &config).map_err(|e| format!("record {:?}: {e}", r.id))
        })
        .into_iter()
        .collect::<Result<_, _>>()?;
    fs::create_dir_all(dir)?;
    for (record, model) in records.iter().zip(&models) {
        let stem = encode_label(&record.id);
        write_atomic(&dir.join(format!("{stem}.tree")), model.tree().to_text().as_bytes())?;
        write_atomic(&dir.join(format!("{stem}.model")), model.to_text().as_bytes())?;
    }
    let mut meta = format!("alphabet={alphabet}\n");
    for field in config.describe().split(' ') {
        meta.push_str(field);
        meta.push('\n');
    }
    meta.push_str(&format!("records={}\n", records.len()));
    for r in &records {
        meta.push_str(&format!("record={}\n", r.id));
    }
    write_atomic(&dir.join("run.meta"), meta.as_bytes())?;
    Ok(())
}

fn dist(dir: &Path, beta: f64) -> CliResult<DistanceMatrix> {
    let beta = BetaParam::new(beta)?;
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "tree"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(format!("no .tree files in {}", dir.display()).into());
    }
    let mut trees = Vec::with_capacity(files.len());
    for path in &files {
        let text = fs::read_to_string(path)?;
        let tree = SparseContextTree::parse(&text)
            .and_then(|t| t.completed())
            .map_err(|e| format!("{}: {e}", path.display()))?;
        let stem = path.file_stem().unwrap_or_default().to_string_lossy();
        trees.push((decode_label(&stem), tree));
    }
    Ok(distance_matrix(&trees, beta)?)
}

fn read_matrix(path: &Path) -> CliResult<DistanceMatrix> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(DistanceMatrix::from_phylip(&text).map_err(|e| format!("{}: {e}", path.display()))?)
}

fn nj(phylip: &Path, outgroup: Option<&str>, output: &Path, edges: Option<&Path>) -> CliResult<()> {
    let matrix = read_matrix(phylip)?;
    let mut tree = neighbor_join(&matrix)?;
    if let Some(taxon) = outgroup {
        tree = root_at_outgroup(&tree, taxon)?;
    }
    let mut newick = tree.to_newick();
    newick.push('\n');
    write_atomic(output, newick.as_bytes())?;
    if let Some(path) = edges {
        write_atomic(path, tree.to_edge_list().as_bytes())?;
    }
    Ok(())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// File-name-safe form of a taxon label: bytes outside `[A-Za-z0-9_-]`
/// (and `.` in first position) become `%XX`.
fn encode_label(label: &str) -> String {
    let mut out = String::with_capacity(label.len());
    for (i, b) in label.bytes().enumerate() {
        let safe = b.is_ascii_alphanumeric() || b == b'_' || b == b'-' || (b == b'.' && i > 0);
        if safe {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

fn decode_label(stem: &str) -> String {
    let bytes = stem.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' && i + 2 < bytes.len() {
            let hex = std::str::from_utf8(&bytes[i + 1..i + 3]).ok();
            if let Some(b) = hex.and_then(|h| u8::from_str_radix(h, 16).ok()) {
                out.push(b);
                i += 3;
                continue;
            }
        }
        out.push(bytes[i]);
        i += 1;
    }
    String::from_utf8_lossy(&out).into_owned()
}
