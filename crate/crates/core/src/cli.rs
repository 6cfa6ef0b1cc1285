//! Command-line interface.
//!
//! Every command validates its inputs and computes its results before
//! writing anything. Results go to `--out` when given, otherwise to standard
//! output; a JSON run manifest goes to `<out>.manifest.json`, or to standard
//! error without `--out`.
//!
//! Exit codes: 0 on success (including an inapplicable bound check), 1 on
//! user error, 2 when an internal invariant is violated.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::{Array2, ArrayView2, Axis};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::cafe::{self, EmbeddingMatrix};
use crate::dimred::{self, ReduceConfig, ReduceMethod, SELECT_TOL};
use crate::error::Error;
use crate::evaluate::{self, LabeledDataset, LinkConfig, NodeLabels, PairFeatures};
use crate::graph::SampledGraph;
use crate::softmax::ClusterConfig;
use crate::spectral::{self, EigenMode};
use crate::sphere::{self, SphereConfig};
use crate::{generators, io};

/// Largest tolerated `‖ĤᵀĤ - I‖_max`.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "modembed", version, about = "Graph embeddings by modularity maximization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embed the nodes of a graph.
    #[command(subcommand)]
    Embed(EmbedMethod),
    /// Check the cosine bounds for a two-cluster assignment.
    Verify(VerifyArgs),
    /// Reduce the dimension of a point cloud and compare with PCA.
    Reduce(ReduceArgs),
    /// Evaluate embeddings on a downstream task.
    #[command(subcommand)]
    Eval(EvalTask),
    /// Eigenvalues (and optionally eigenvectors) of the modularity matrix.
    Eigs(EigsArgs),
}

#[derive(Debug, Subcommand)]
pub enum EmbedMethod {
    /// Softmax clustering followed by the QR step.
    Cafe(EmbedArgs),
    /// Hardmax clustering repeated on pooled graphs.
    Multilayer(EmbedArgs),
    /// Unit-sphere embedding followed by the QR step.
    Sphere(EmbedArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct EmbedArgs {
    /// Edge list: `u w [weight]` per line.
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Inverse temperature of the softmax.
    #[arg(long, default_value_t = 10.0)]
    pub theta: f64,
    /// Step size of the sphere update.
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `node<TAB>class` file; pins those nodes to their class.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Skip clustering and use the labels of every node directly.
    #[arg(long)]
    pub full_label: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_sweeps: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Assignment TSV (`node<TAB>h1<TAB>...`); the first column is checked.
    /// Without it a two-cluster softmax run provides the assignment.
    #[arg(long)]
    pub assignment: Option<PathBuf>,
    #[arg(long, default_value_t = 10.0)]
    pub theta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_sweeps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum MethodArg {
    Cafe,
    Sphere,
}

#[derive(Debug, Args, Serialize)]
pub struct ReduceArgs {
    /// XYZ file, one point per line.
    #[arg(long, conflicts_with_all = ["circles", "torus"])]
    pub points: Option<PathBuf>,
    /// Use the built-in concentric circles with this many points.
    #[arg(long, conflicts_with = "torus")]
    pub circles: Option<usize>,
    /// Use a built-in torus with this many points.
    #[arg(long)]
    pub torus: Option<usize>,
    /// Ambient dimension to embed the cloud into (0 keeps the original).
    #[arg(long, default_value_t = 30)]
    pub lift: usize,
    #[arg(long, default_value_t = 6)]
    pub k: usize,
    #[arg(long, default_value_t = 0.01)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Cafe)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_sweeps: usize,
    /// Residual TSV; reconstructed coordinates go to `<out>.coords.xyz`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum EvalTask {
    /// Node classification from embeddings and labels.
    Classify(ClassifyArgs),
    /// Link prediction from embeddings and the graph.
    Link(LinkArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub train: f64,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum FeaturesArg {
    Concat,
    ConcatProduct,
}

#[derive(Debug, Args, Serialize)]
pub struct LinkArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub train: f64,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = FeaturesArg::ConcatProduct)]
    pub features: FeaturesArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EigsArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Only the largest `K` eigenpairs, by orthogonal iteration.
    #[arg(long)]
    pub topk: Option<usize>,
    /// Also write eigenvectors as an embedding TSV.
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Everything needed to rerun a command.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    /// Input path → SHA-256 of its contents.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub version: String,
    pub wall_clock_seconds: f64,
    pub objective_trace: Vec<f64>,
}

enum Failure {
    User(Error),
    Invariant(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::User(e)
    }
}

type CmdResult<T> = std::result::Result<T, Failure>;

/// Files to write once the command has succeeded.
struct Report {
    command: &'static str,
    parameters: serde_json::Value,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    /// `(path, contents)`; a `None` path means standard output.
    files: Vec<(Option<PathBuf>, String)>,
    manifest_base: Option<PathBuf>,
    objective_trace: Vec<f64>,
    /// Printed to standard output after the files are written.
    summary: String,
    exit: i32,
}

impl Report {
    fn new(command: &'static str, parameters: impl Serialize, seed: Option<u64>, out: Option<&Path>) -> Self {
        Self {
            command,
            parameters: serde_json::to_value(parameters).expect("arguments serialize"),
            seed,
            inputs: Vec::new(),
            files: Vec::new(),
            manifest_base: out.map(Path::to_path_buf),
            objective_trace: Vec::new(),
            summary: String::new(),
            exit: 0,
        }
    }
}

fn digest(path: &Path) -> std::io::Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

fn sidecar(base: &Path, suffix: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn finish(report: Report, started: Instant) -> CmdResult<i32> {
    let mut inputs = BTreeMap::new();
    for path in &report.inputs {
        inputs.insert(path.display().to_string(), digest(path).map_err(Error::from)?);
    }
    let mut outputs = Vec::new();
    let mut stdout = String::new();
    for (path, contents) in &report.files {
        match path {
            Some(p) => {
                fs::write(p, contents).map_err(Error::from)?;
                outputs.push(p.display().to_string());
            }
            None => stdout.push_str(contents),
        }
    }
    let manifest = RunManifest {
        command: report.command.to_string(),
        parameters: report.parameters,
        seed: report.seed,
        inputs,
        outputs,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        objective_trace: report.objective_trace,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    match &report.manifest_base {
        Some(base) => fs::write(sidecar(base, ".manifest.json"), json + "\n").map_err(Error::from)?,
        None => eprintln!("{json}"),
    }
    print!("{stdout}{}", report.summary);
    Ok(report.exit)
}

/// Parses arguments and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let started = Instant::now();
    let report = match cli.command {
        Command::Embed(method) => cmd_embed(method),
        Command::Verify(args) => cmd_verify(args),
        Command::Reduce(args) => cmd_reduce(args),
        Command::Eval(EvalTask::Classify(args)) => cmd_classify(args),
        Command::Eval(EvalTask::Link(args)) => cmd_link(args),
        Command::Eigs(args) => cmd_eigs(args),
    };
    match report.and_then(|r| finish(r, started)) {
        Ok(code) => code,
        Err(Failure::User(e)) => {
            eprintln!("error: {e}");
            1
        }
        Err(Failure::Invariant(msg)) => {
            eprintln!("invariant violated: {msg}");
            2
        }
    }
}

fn check_orthonormal(e: &EmbeddingMatrix) -> CmdResult<()> {
    let err = e.orthonormality_error();
    if err > ORTHONORMALITY_TOL {
        return Err(Failure::Invariant(format!("embedding orthonormality error {err:e}")));
    }
    Ok(())
}

fn user(msg: impl Into<String>) -> Failure {
    Failure::User(Error::InvalidConfig(msg.into()))
}

fn cmd_embed(method: EmbedMethod) -> CmdResult<Report> {
    let (name, args) = match method {
        EmbedMethod::Cafe(a) => ("embed cafe", a),
        EmbedMethod::Multilayer(a) => ("embed multilayer", a),
        EmbedMethod::Sphere(a) => ("embed sphere", a),
    };
    if args.full_label && args.labels.is_none() {
        return Err(user("--full-label requires --labels"));
    }
    let graph = io::read_edge_list(&args.graph)?;
    let labels = match &args.labels {
        Some(p) => Some(evaluate::load_labels(p, graph.labels())?),
        None => None,
    };
    let mut report = Report::new(name, &args, Some(args.seed), args.out.as_deref());
    report.inputs.push(args.graph.clone());
    if let Some(p) = &args.labels {
        report.inputs.push(p.clone());
    }
    let q = graph.modularity();
    let cluster = ClusterConfig {
        k: args.k,
        theta: args.theta,
        max_sweeps: args.max_sweeps,
        tol: args.tol,
        seed: args.seed,
    };
    match name {
        "embed cafe" => {
            let result = match &labels {
                Some(l) if args.full_label => {
                    let all = l
                        .complete(graph.n())
                        .ok_or_else(|| user("--full-label needs a label for every node"))?;
                    cafe::full_label(&q, &all, args.k.max(l.classes()))?
                }
                Some(l) => {
                    if l.classes() > args.k {
                        return Err(user(format!("{} label classes exceed k = {}", l.classes(), args.k)));
                    }
                    cafe::cafe_gcn(&q, &cluster, &l.pins())?
                }
                None => cafe::cafe_gcn(&q, &cluster, &[])?,
            };
            check_orthonormal(&result.embedding)?;
            let objective = result.run.as_ref().map_or(f64::NAN, |r| r.objective);
            if let Some(run) = &result.run {
                report.objective_trace = run.trace.clone();
            }
            report.files.push((args.out.clone(), io::format_embedding(graph.labels(), result.embedding.matrix())));
            report.summary = summary_line(&args.out, objective, result.embedding.c());
        }
        "embed sphere" => {
            if labels.is_some() {
                return Err(user("sphere embedding does not take labels"));
            }
            let cfg = SphereConfig {
                k: args.k,
                beta: args.beta,
                max_sweeps: args.max_sweeps,
                tol: args.tol,
                seed: args.seed,
            };
            let (run, embedding) = sphere::sphere_embed(&q, &cfg)?;
            check_orthonormal(&embedding)?;
            report.objective_trace = run.trace.clone();
            report.files.push((args.out.clone(), io::format_embedding(graph.labels(), embedding.matrix())));
            report.summary = summary_line(&args.out, run.objective, embedding.c());
        }
        _ => {
            if labels.is_some() {
                return Err(user("multilayer embedding does not take labels"));
            }
            let layers = cafe::multilayer(&q, &cluster)?;
            let mut table = String::new();
            for u in 0..graph.n() {
                table.push_str(graph.label(u));
                for layer in &layers {
                    write!(table, "\t{}", layer.membership[u]).unwrap();
                }
                table.push('\n');
            }
            let mut summary = String::new();
            for layer in &layers {
                check_orthonormal(&layer.embedding)?;
                report.objective_trace.push(layer.modularity);
                if let Some(out) = &args.out {
                    let names: Vec<String> = (0..layer.embedding.matrix().nrows()).map(|i| i.to_string()).collect();
                    report.files.push((
                        Some(sidecar(out, &format!(".level{}.tsv", layer.level))),
                        io::format_embedding(&names, layer.embedding.matrix()),
                    ));
                }
                writeln!(summary, "level {}\tclusters {}\tmodularity {:.16e}", layer.level, layer.c, layer.modularity).unwrap();
            }
            report.files.insert(0, (args.out.clone(), table));
            if args.out.is_some() {
                report.summary = summary;
            } else {
                eprint!("{summary}");
            }
        }
    }
    Ok(report)
}

fn summary_line(out: &Option<PathBuf>, objective: f64, c: usize) -> String {
    let line = format!("objective {objective:.16e}\nC {c}\n");
    if out.is_some() {
        line
    } else {
        eprint!("{line}");
        String::new()
    }
}

/// Rows of `matrix` reordered to follow the graph's node order.
fn align_rows(graph: &SampledGraph, labels: &[String], matrix: ArrayView2<f64>) -> crate::Result<Array2<f64>> {
    if labels.len() != graph.n() {
        return Err(Error::DimensionMismatch {
            expected: graph.n(),
            found: labels.len(),
        });
    }
    let mut order = vec![usize::MAX; graph.n()];
    for (row, label) in labels.iter().enumerate() {
        let u = graph.index_of(label).ok_or_else(|| Error::UnknownNode(label.clone()))?;
        order[u] = row;
    }
    if let Some(u) = order.iter().position(|&r| r == usize::MAX) {
        return Err(Error::Evaluation(format!("no row for node {}", graph.label(u))));
    }
    Ok(matrix.select(Axis(0), &order))
}

fn cmd_verify(args: VerifyArgs) -> CmdResult<Report> {
    if args.k != 2 {
        return Err(user("the bound check is defined for k = 2"));
    }
    let graph = io::read_edge_list(&args.graph)?;
    let q = graph.modularity();
    let mut report = Report::new("verify", &args, Some(args.seed), args.out.as_deref());
    report.inputs.push(args.graph.clone());
    let h = match &args.assignment {
        Some(p) => {
            report.inputs.push(p.clone());
            let (labels, m) = io::read_embedding(p)?;
            align_rows(&graph, &labels, m.view())?
        }
        None => {
            let cfg = ClusterConfig {
                k: 2,
                theta: args.theta,
                max_sweeps: args.max_sweeps,
                tol: args.tol,
                seed: args.seed,
            };
            let run = crate::softmax::run(&q, &cfg, &[])?;
            report.objective_trace = run.trace.clone();
            run.assignment.into_matrix()
        }
    };
    if h.ncols() == 0 {
        return Err(user("assignment has no columns"));
    }
    let bound = spectral::bound_report(&q, h.view())?;
    let status = if !bound.applicable {
        "inapplicable"
    } else if bound.holds() {
        "holds"
    } else {
        report.exit = 2;
        "violated"
    };
    let text = bound.to_tsv() + &format!("status\t{status}\n");
    report.files.push((args.out.clone(), text));
    if report.exit == 2 {
        let failed: Vec<&str> = bound.checks().iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
        eprintln!("invariant violated: {}", failed.join(", "));
    }
    Ok(report)
}

fn cmd_reduce(args: ReduceArgs) -> CmdResult<Report> {
    let mut report = Report::new("reduce", &args, Some(args.seed), args.out.as_deref());
    let raw = match (&args.points, args.circles, args.torus) {
        (Some(p), _, _) => {
            report.inputs.push(p.clone());
            io::read_xyz(p)?
        }
        (None, Some(n), _) => generators::concentric_circles(n),
        (None, None, Some(n)) => generators::torus(n, 1.0, 0.5, args.seed),
        _ => return Err(user("one of --points, --circles or --torus is required")),
    };
    let cloud = dimred::center(raw.view());
    let work = if args.lift == 0 {
        cloud.clone()
    } else {
        dimred::embed_lift(&cloud, args.lift, args.seed)?
    };
    let config = ReduceConfig {
        k: args.k,
        theta: args.theta,
        beta: args.beta,
        method: match args.method {
            MethodArg::Cafe => ReduceMethod::Cafe,
            MethodArg::Sphere => ReduceMethod::Sphere,
        },
        max_sweeps: args.max_sweeps,
        tol: args.tol,
        seed: args.seed,
    };
    let reduction = dimred::reduce(&work, &config)?;
    check_orthonormal(&reduction.embedding)?;
    report.objective_trace = reduction.trace.clone();
    let mut residuals = String::new();
    for (j, r) in reduction.residuals.iter().enumerate() {
        writeln!(residuals, "{}\t{r:.16e}", j + 1).unwrap();
    }
    report.files.push((args.out.clone(), residuals));
    let selected = reduction.selected_columns(SELECT_TOL);
    if let Some(out) = &args.out {
        let coords = reduction.reconstruct(&work, &selected);
        report.files.push((Some(sidecar(out, ".coords.xyz")), io::format_xyz(coords.view())));
        report.summary = format!("selected columns {selected:?}\n");
    }
    Ok(report)
}

fn cmd_classify(args: ClassifyArgs) -> CmdResult<Report> {
    let (nodes, matrix) = io::read_embedding(&args.embeddings)?;
    let labels: NodeLabels = evaluate::load_labels(&args.labels, &nodes)?;
    let dataset = LabeledDataset::from_node_labels(matrix.view(), &labels)?;
    let summary = evaluate::classify(&dataset, args.train, args.reps, args.seed)?;
    let mut report = Report::new("eval classify", &args, Some(args.seed), args.out.as_deref());
    report.inputs.extend([args.embeddings.clone(), args.labels.clone()]);
    report.files.push((args.out.clone(), summary.to_tsv()));
    if !summary.flagged_classes.is_empty() {
        let names: Vec<&str> = summary.flagged_classes.iter().map(|&c| labels.class_names[c].as_str()).collect();
        eprintln!("classes with a single member kept in training: {}", names.join(", "));
    }
    Ok(report)
}

fn cmd_link(args: LinkArgs) -> CmdResult<Report> {
    let graph = io::read_edge_list(&args.graph)?;
    let (nodes, matrix) = io::read_embedding(&args.embeddings)?;
    let h = align_rows(&graph, &nodes, matrix.view())?;
    let config = LinkConfig {
        train_fraction: args.train,
        repetitions: args.reps,
        seed: args.seed,
        features: match args.features {
            FeaturesArg::Concat => PairFeatures::Concat,
            FeaturesArg::ConcatProduct => PairFeatures::ConcatProduct,
        },
    };
    let summary = evaluate::link_predict_with(&graph, h.view(), &config)?;
    let mut report = Report::new("eval link", &args, Some(args.seed), args.out.as_deref());
    report.inputs.extend([args.graph.clone(), args.embeddings.clone()]);
    report.files.push((args.out.clone(), summary.to_tsv()));
    Ok(report)
}

fn cmd_eigs(args: EigsArgs) -> CmdResult<Report> {
    let graph = io::read_edge_list(&args.graph)?;
    let q = graph.modularity();
    let mode = args.topk.map_or(EigenMode::Full, EigenMode::TopK);
    let spectrum = spectral::eigendecompose(&q, mode)?;
    let mut report = Report::new("eigs", &args, None, args.out.as_deref());
    report.inputs.push(args.graph.clone());
    let mut values = String::new();
    for (i, v) in spectrum.eigenvalues.iter().enumerate() {
        writeln!(values, "{}\t{v:.16e}", i + 1).unwrap();
    }
    report.files.push((args.out.clone(), values));
    if let Some(p) = &args.vectors {
        report.files.push((Some(p.clone()), io::format_embedding(graph.labels(), spectrum.eigenvectors.view())));
    }
    Ok(report)
}
