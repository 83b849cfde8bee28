mod render;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fudge::experiments::scenarios::out_of_task;
use fudge::experiments::{
    rank_paths, sample_mix, separation, sweep_csv, sweep_ranked, synthesize, NoiseConfig, SynthesisConfig,
};
use fudge::metrics::{evaluate, Algorithm};
use fudge::model::DEFAULT_PATH_CAP;
use fudge::{
    load_corpus, load_flow, BucketSet, Corpus, CostModel, DistanceVariant, EmbeddingTable, ErrorClass, FlowGraph,
    Operation, Scorer,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "fudge", version, about = "Score dialogue flows against conversation corpora")]
struct Cli {
    /// Worker threads for per-dialogue scoring (0 = one per CPU).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-dialogue FuDGE and flow metrics.
    Score(ScoreArgs),
    /// Flow metrics only.
    Ff1(ScoreArgs),
    /// Best alignment of one dialogue.
    Align(AlignArgs),
    /// Metrics of the top-k ranked paths for every k.
    Sweep(SweepArgs),
    /// FuDGE of in-task against out-of-task dialogues.
    Separation(SeparationArgs),
    /// Write a synthetic flow, buckets, corpus and embedding table.
    Synth(SynthArgs),
    /// Load and check inputs without scoring.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct Inputs {
    #[arg(long)]
    flow: PathBuf,
    #[arg(long)]
    buckets: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, default_value = "centroid")]
    variant: DistanceVariant,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    insert_cost: f64,
    #[arg(long, default_value_t = 1.0)]
    delete_cost: f64,
    /// table:<path> or hash:<dimension>
    #[arg(long, default_value = "hash:256")]
    embedder: Embedder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value = "efficient")]
    algorithm: Algorithm,
    /// Flow name in the report (default: flow file stem).
    #[arg(long)]
    name: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Args)]
struct AlignArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    dialogue: String,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = DEFAULT_PATH_CAP)]
    path_cap: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
struct SeparationArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Out-of-task corpus.
    #[arg(long)]
    negatives: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Share of in-task dialogues sampled; as many out-of-task ones are drawn.
    #[arg(long, default_value_t = 0.5)]
    ratio: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 40)]
    dialogues: usize,
    #[arg(long, default_value_t = 6)]
    depth: usize,
    #[arg(long, default_value_t = 3)]
    branching: usize,
    #[arg(long, default_value_t = 6)]
    user_buckets: usize,
    #[arg(long, default_value_t = 6)]
    agent_buckets: usize,
    #[arg(long, default_value_t = 3)]
    members: usize,
    /// Probability used for paraphrase, insertion and deletion noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 256)]
    dimension: usize,
    /// Also write an out-of-task corpus drawn from an unrelated flow.
    #[arg(long)]
    negatives: bool,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    flow: PathBuf,
    #[arg(long)]
    buckets: PathBuf,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// When given, also check that every utterance resolves to a vector.
    #[arg(long)]
    embedder: Option<Embedder>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Embedder {
    Table(PathBuf),
    Hash(usize),
}

impl FromStr for Embedder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            Some(("table", path)) if !path.is_empty() => Ok(Embedder::Table(path.into())),
            Some(("hash", dim)) => dim
                .parse()
                .map(Embedder::Hash)
                .map_err(|_| format!("bad hash dimension {dim:?}")),
            _ => Err(format!("expected table:<path> or hash:<dimension>, got {s:?}")),
        }
    }
}

impl fmt::Display for Embedder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Embedder::Table(p) => write!(f, "table:{}", p.display()),
            Embedder::Hash(d) => write!(f, "hash:{d}"),
        }
    }
}

/// Echoed into every output.
#[derive(Debug, Serialize)]
struct RunConfig {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    variant: Option<DistanceVariant>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    insert_cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delete_cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    embedder: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    algorithm: Option<Algorithm>,
    workers: usize,
    seed: u64,
    inputs: serde_json::Map<String, serde_json::Value>,
}

impl RunConfig {
    fn new(command: &'static str, cli: &Cli) -> Self {
        RunConfig {
            command,
            variant: None,
            alpha: None,
            insert_cost: None,
            delete_cost: None,
            embedder: None,
            algorithm: None,
            workers: cli.workers,
            seed: cli.seed,
            inputs: serde_json::Map::new(),
        }
    }

    fn with_model(mut self, m: &ModelArgs) -> Self {
        self.variant = Some(m.variant);
        self.alpha = Some(m.alpha);
        self.insert_cost = Some(m.insert_cost);
        self.delete_cost = Some(m.delete_cost);
        self.embedder = Some(m.embedder.to_string());
        self
    }

    fn input(mut self, key: &str, value: impl Serialize) -> Self {
        self.inputs
            .insert(key.into(), serde_json::to_value(value).expect("input serializes"));
        self
    }

    fn with_inputs(self, i: &Inputs) -> Self {
        self.input("flow", i.flow.display().to_string())
            .input("buckets", i.buckets.display().to_string())
            .input("corpus", i.corpus.display().to_string())
    }
}

#[derive(Debug)]
enum CliError {
    Fudge(fudge::Error),
    File { path: PathBuf, source: std::io::Error },
    Usage(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Fudge(e) => write!(f, "{e}"),
            CliError::File { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Usage(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<fudge::Error> for CliError {
    fn from(e: fudge::Error) -> Self {
        CliError::Fudge(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Fudge(e) => match e.class() {
                ErrorClass::Validation => 2,
                ErrorClass::Embedding => 3,
                ErrorClass::PathExplosion => 4,
                ErrorClass::Io => 1,
            },
            CliError::File { .. } => 1,
            CliError::Usage(_) => 2,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|source| CliError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn load_graph(flow: &Path, buckets: &Path) -> CliResult<(FlowGraph, BucketSet)> {
    Ok(load_flow(&read(flow)?, &read(buckets)?)?)
}

fn embed(embedder: &Embedder, buckets: &BucketSet, corpora: &[&Corpus]) -> CliResult<EmbeddingTable> {
    match embedder {
        Embedder::Table(path) => Ok(EmbeddingTable::from_jsonl(&read(path)?)?),
        Embedder::Hash(dim) => {
            let members = buckets.iter().flat_map(|b| b.utterances.iter());
            let turns = corpora.iter().flat_map(|c| c.utterances());
            Ok(EmbeddingTable::hashed(members.chain(turns), *dim)?)
        }
    }
}

fn cost_model(m: &ModelArgs) -> CliResult<CostModel> {
    let model = CostModel {
        alpha: m.alpha,
        insert_cost: m.insert_cost,
        delete_cost: m.delete_cost,
        variant: m.variant,
    };
    model.validate()?;
    Ok(model)
}

/// Loaded inputs for the commands that score one corpus against one flow.
struct Loaded {
    flow: FlowGraph,
    buckets: BucketSet,
    corpus: Corpus,
    table: EmbeddingTable,
    cost: CostModel,
}

impl Loaded {
    fn new(inputs: &Inputs, model: &ModelArgs) -> CliResult<Self> {
        let cost = cost_model(model)?;
        let (flow, buckets) = load_graph(&inputs.flow, &inputs.buckets)?;
        let corpus = load_corpus(&read(&inputs.corpus)?)?;
        let table = embed(&model.embedder, &buckets, &[&corpus])?;
        Ok(Loaded {
            flow,
            buckets,
            corpus,
            table,
            cost,
        })
    }

    fn scorer(&self) -> CliResult<Scorer<'_>> {
        Ok(Scorer::new(&self.buckets, &self.table, self.cost)?)
    }
}

fn flow_name(args: &ScoreArgs) -> String {
    args.name.clone().unwrap_or_else(|| {
        args.inputs
            .flow
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "flow".into())
    })
}

fn cmd_score(cli: &Cli, args: &ScoreArgs, metrics_only: bool) -> CliResult<String> {
    let command = if metrics_only { "ff1" } else { "score" };
    let mut config = RunConfig::new(command, cli)
        .with_model(&args.model)
        .with_inputs(&args.inputs);
    config.algorithm = Some(args.algorithm);
    let loaded = Loaded::new(&args.inputs, &args.model)?;
    let scorer = loaded.scorer()?;
    let mut report = evaluate(&flow_name(args), &loaded.corpus, &loaded.flow, &scorer, args.algorithm)?;
    if metrics_only {
        report.per_dialogue.clear();
    }
    Ok(match args.format {
        Format::Json if metrics_only => {
            let mut value = serde_json::to_value(&report).expect("report serializes");
            value.as_object_mut().map(|o| o.remove("per_dialogue"));
            render::json(&config, &value)
        }
        Format::Json => render::json(&config, &report),
        Format::Csv => render::banner(&config) + &report.to_csv(),
        Format::Table => {
            let mut out = render::banner(&config);
            if !metrics_only {
                let rows: Vec<Vec<String>> = report
                    .per_dialogue
                    .iter()
                    .map(|d| vec![d.dialogue_id.clone(), format!("{:.4}", d.fudge)])
                    .collect();
                out.push_str(&render::table(&["dialogue", "fudge"], &rows));
                out.push('\n');
            }
            let summary = vec![
                vec!["flow".to_string(), report.flow.clone()],
                vec!["N".into(), report.n.to_string()],
                vec!["complexity".into(), report.complexity.to_string()],
                vec!["nc".into(), format!("{:.4}", report.nc)],
                vec!["mean_fudge".into(), format!("{:.4}", report.mean_fudge)],
                vec!["std_fudge".into(), format!("{:.4}", report.std_fudge)],
                vec!["nf".into(), format!("{:.4}", report.nf)],
                vec!["ff1".into(), format!("{:.4}", report.ff1)],
            ];
            out.push_str(&render::table(&["metric", "value"], &summary));
            out
        }
    })
}

#[derive(Serialize)]
struct AlignRow {
    turn_index: Option<usize>,
    turn_text: Option<String>,
    node_id: Option<String>,
    bucket: Option<String>,
    operation: Operation,
    step_cost: f64,
    cumulative_cost: f64,
}

#[derive(Serialize)]
struct AlignReport {
    dialogue_id: String,
    best_path: Vec<String>,
    path_length: usize,
    total: f64,
    rows: Vec<AlignRow>,
}

fn cmd_align(cli: &Cli, args: &AlignArgs) -> CliResult<String> {
    let config = RunConfig::new("align", cli)
        .with_model(&args.model)
        .with_inputs(&args.inputs)
        .input("dialogue", &args.dialogue);
    let loaded = Loaded::new(&args.inputs, &args.model)?;
    let dialogue = loaded
        .corpus
        .get(&args.dialogue)
        .ok_or_else(|| fudge::Error::UnknownDialogue(args.dialogue.clone()))?;
    let trace = loaded.scorer()?.backtrace(dialogue, &loaded.flow)?;

    let rows: Vec<AlignRow> = trace
        .steps
        .iter()
        .map(|s| {
            let bucket = s.node_id.as_ref().map(|n| {
                let ix = loaded.flow.index_of(n).expect("trace nodes exist");
                let id = loaded.flow.bucket_id(ix).expect("path nodes carry buckets");
                loaded.buckets.get(id).map_or(id, |b| b.name.as_str()).to_string()
            });
            AlignRow {
                turn_index: s.turn_index,
                turn_text: s.turn_index.map(|t| dialogue.turns[t].text.clone()),
                node_id: s.node_id.clone(),
                bucket,
                operation: s.operation,
                step_cost: s.step_cost,
                cumulative_cost: s.cumulative_cost,
            }
        })
        .collect();
    let report = AlignReport {
        dialogue_id: trace.dialogue_id.clone(),
        best_path: trace.best_path.node_ids.clone(),
        path_length: trace.path_length,
        total: trace.total,
        rows,
    };
    let dash = || "-".to_string();
    Ok(match args.format {
        Format::Json => render::json(&config, &report),
        Format::Csv => {
            let mut out = render::banner(&config);
            out.push_str("turn_index,turn_text,node_id,bucket,operation,step_cost,cumulative_cost\n");
            for r in &report.rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.turn_index.map(|t| t.to_string()).unwrap_or_default(),
                    render::csv_field(r.turn_text.as_deref().unwrap_or("")),
                    render::csv_field(r.node_id.as_deref().unwrap_or("")),
                    render::csv_field(r.bucket.as_deref().unwrap_or("")),
                    r.operation.label(),
                    r.step_cost,
                    r.cumulative_cost
                ));
            }
            out
        }
        Format::Table => {
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.turn_text.clone().unwrap_or_else(dash),
                        r.bucket.clone().unwrap_or_else(dash),
                        r.operation.label().to_string(),
                        format!("{:.4}", r.cumulative_cost),
                    ]
                })
                .collect();
            let mut out = render::banner(&config);
            out.push_str(&format!(
                "dialogue {} | path {} | total {:.4}\n",
                report.dialogue_id,
                report.best_path.join(" > "),
                report.total
            ));
            out.push_str(&render::table(&["turn", "bucket", "operation", "cumulative"], &rows));
            out
        }
    })
}

fn cmd_sweep(cli: &Cli, args: &SweepArgs) -> CliResult<String> {
    let config = RunConfig::new("sweep", cli)
        .with_model(&args.model)
        .with_inputs(&args.inputs)
        .input("path_cap", args.path_cap);
    let loaded = Loaded::new(&args.inputs, &args.model)?;
    let scorer = loaded.scorer()?;
    let ranked = rank_paths(&loaded.flow, &loaded.corpus, &scorer, args.path_cap)?;
    let points = sweep_ranked(&loaded.flow, &loaded.corpus, &scorer, &ranked)?;
    Ok(match args.format {
        Format::Json => render::json(
            &config,
            &serde_json::json!({ "ranked_paths": ranked, "points": points }),
        ),
        Format::Csv => render::banner(&config) + &sweep_csv(&points),
        Format::Table => {
            let rows: Vec<Vec<String>> = points
                .iter()
                .map(|p| {
                    vec![
                        p.k.to_string(),
                        format!("{:.4}", p.nc),
                        format!("{:.4}", p.nf),
                        format!("{:.4}", p.ff1),
                    ]
                })
                .collect();
            render::banner(&config) + &render::table(&["k", "nc", "nf", "ff1"], &rows)
        }
    })
}

fn cmd_separation(cli: &Cli, args: &SeparationArgs) -> CliResult<String> {
    let config = RunConfig::new("separation", cli)
        .with_model(&args.model)
        .with_inputs(&args.inputs)
        .input("negatives", args.negatives.display().to_string())
        .input("ratio", args.ratio);
    let cost = cost_model(&args.model)?;
    let (flow, buckets) = load_graph(&args.inputs.flow, &args.inputs.buckets)?;
    let positives = load_corpus(&read(&args.inputs.corpus)?)?;
    let negatives = load_corpus(&read(&args.negatives)?)?;
    let table = embed(&args.model.embedder, &buckets, &[&positives, &negatives])?;
    let scorer = Scorer::new(&buckets, &table, cost)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let (pos, neg) = sample_mix(&positives, &negatives, args.ratio, &mut rng)?;
    let report = separation(&flow, &pos, &neg, &scorer)?;
    Ok(match args.format {
        Format::Json => render::json(&config, &report),
        Format::Csv | Format::Table => {
            let row = |name: &str, g: &fudge::experiments::GroupStats, t: &fudge::experiments::GroupStats| {
                vec![
                    name.to_string(),
                    g.n.to_string(),
                    g.mean.to_string(),
                    g.std.to_string(),
                    t.mean.to_string(),
                    t.std.to_string(),
                ]
            };
            let mut rows = vec![
                row("positives", &report.positives, &report.per_turn.positives),
                row("negatives", &report.negatives, &report.per_turn.negatives),
            ];
            rows.push(vec![
                "margin".into(),
                String::new(),
                report.margin.to_string(),
                String::new(),
                report.per_turn.margin.to_string(),
                String::new(),
            ]);
            let headers = ["group", "n", "mean", "std", "per_turn_mean", "per_turn_std"];
            let body = if args.format == Format::Csv {
                let mut s = headers.join(",") + "\n";
                for r in &rows {
                    s.push_str(&r.join(","));
                    s.push('\n');
                }
                s
            } else {
                render::table(&headers, &rows)
            };
            render::banner(&config) + &body
        }
    })
}

#[derive(Serialize)]
struct SynthManifest {
    synthesis: SynthesisConfig,
    files: Vec<String>,
    nodes: usize,
    edges: usize,
    paths: u128,
    dialogues: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    negative_dialogues: Option<usize>,
}

fn cmd_synth(cli: &Cli, args: &SynthArgs) -> CliResult<String> {
    let config = RunConfig::new("synth", cli).input("out", args.out.display().to_string());
    let synthesis = SynthesisConfig {
        seed: cli.seed,
        n_buckets_user: args.user_buckets,
        n_buckets_agent: args.agent_buckets,
        branching: args.branching,
        depth: args.depth,
        n_dialogues: args.dialogues,
        noise: NoiseConfig::uniform(args.noise),
        members_per_bucket: args.members,
        dimension: args.dimension,
        namespace: String::new(),
    };
    let task = synthesize(&synthesis)?;
    let mut table = task.table;
    fs::create_dir_all(&args.out).map_err(|source| CliError::File {
        path: args.out.clone(),
        source,
    })?;
    let mut files = vec!["flow.json", "buckets.json", "corpus.jsonl"];
    write(&args.out.join("flow.json"), &(task.flow.to_json() + "\n"))?;
    write(&args.out.join("buckets.json"), &(task.buckets.to_json() + "\n"))?;
    write(&args.out.join("corpus.jsonl"), &task.corpus.to_jsonl())?;
    let mut negative_dialogues = None;
    if args.negatives {
        let other = out_of_task(&synthesis, "out/")?;
        table.merge(other.table)?;
        write(&args.out.join("negatives.jsonl"), &other.corpus.to_jsonl())?;
        negative_dialogues = Some(other.corpus.len());
        files.push("negatives.jsonl");
    }
    write(&args.out.join("embeddings.jsonl"), &table.to_jsonl())?;
    files.push("embeddings.jsonl");
    files.push("manifest.json");
    let manifest = SynthManifest {
        synthesis,
        files: files.iter().map(|f| f.to_string()).collect(),
        nodes: task.flow.node_count(),
        edges: task.flow.edge_count(),
        paths: task.flow.path_count(),
        dialogues: task.corpus.len(),
        negative_dialogues,
    };
    let out = render::json(&config, &manifest);
    write(&args.out.join("manifest.json"), &out)?;
    log::info!("wrote {} files to {}", files.len(), args.out.display());
    Ok(out)
}

#[derive(Serialize)]
struct ValidateReport {
    nodes: usize,
    edges: usize,
    leaves: usize,
    paths: u128,
    buckets: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    dialogues: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    utterances: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    embeddings_checked: Option<usize>,
}

fn cmd_validate(cli: &Cli, args: &ValidateArgs) -> CliResult<String> {
    let mut config = RunConfig::new("validate", cli)
        .input("flow", args.flow.display().to_string())
        .input("buckets", args.buckets.display().to_string());
    if let Some(c) = &args.corpus {
        config = config.input("corpus", c.display().to_string());
    }
    config.embedder = args.embedder.as_ref().map(|e| e.to_string());
    let (flow, buckets) = load_graph(&args.flow, &args.buckets)?;
    let corpus = args
        .corpus
        .as_deref()
        .map(|p| read(p).and_then(|s| Ok(load_corpus(&s)?)))
        .transpose()?;
    let mut embeddings_checked = None;
    if let Some(embedder) = &args.embedder {
        let corpora: Vec<&Corpus> = corpus.iter().collect();
        let table = embed(embedder, &buckets, &corpora)?;
        // Building the space resolves every bucket member.
        Scorer::new(&buckets, &table, CostModel::default())?;
        let mut count = buckets.iter().map(|b| b.utterances.len()).sum::<usize>();
        for u in corpora.iter().flat_map(|c| c.utterances()) {
            table.get(&u.id)?;
            count += 1;
        }
        embeddings_checked = Some(count);
    }
    let report = ValidateReport {
        nodes: flow.node_count(),
        edges: flow.edge_count(),
        leaves: flow.leaves().len(),
        paths: flow.path_count(),
        buckets: buckets.len(),
        dialogues: corpus.as_ref().map(Corpus::len),
        utterances: corpus.as_ref().map(Corpus::total_utterances),
        embeddings_checked,
    };
    Ok(render::json(&config, &report))
}

fn run(cli: &Cli) -> CliResult<String> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    match &cli.command {
        Command::Score(a) => cmd_score(cli, a, false),
        Command::Ff1(a) => cmd_score(cli, a, true),
        Command::Align(a) => cmd_align(cli, a),
        Command::Sweep(a) => cmd_sweep(cli, a),
        Command::Separation(a) => cmd_separation(cli, a),
        Command::Synth(a) => cmd_synth(cli, a),
        Command::Validate(a) => cmd_validate(cli, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
