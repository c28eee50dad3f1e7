//! `multikb`: link mining, benchmark generation, training, evaluation and
//! question answering from the command line.

mod settings;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use multikb::bench::{
    generate_benchmark, load_bench_kbs, load_benchmark, save_benchmark, Benchmark, Dataset,
};
use multikb::config::{Preset, RunConfig};
use multikb::embed::{load_manifest, load_model, save_model, sha256_hex, train_embedding, train_plug_in};
use multikb::eval::{evaluate, prepare, run_variant_on, EvalReport, EvalSettings, Prepared, RunReport, Split, Variant};
use multikb::kb::{load_kb, load_kb_with_types, save_links, KbId, KbRegistry, LinkSet};
use multikb::linkmine::mine_links;
use multikb::qa::{load_qa, save_qa, train_qa, QuestionRecord, TemplateId};
use multikb::{Error, Result};

#[derive(Parser)]
#[command(name = "multikb", version, about = "Question answering over linked knowledge bases")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for every stochastic stage; evaluation then runs this seed only.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Hyperparameter preset: paper or desk.
    #[arg(long, global = true, default_value = "paper")]
    preset: Preset,
    /// TOML file with [train], [qa], [gen] and [miner] tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one value, e.g. `--set train.lr_kbe=0.003`.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Find full and partial links between two KBs by name similarity.
    MineLinks {
        #[arg(long)]
        kb1: PathBuf,
        #[arg(long)]
        kb2: PathBuf,
        /// Entity types of kb1; pairs whose types differ become partial links.
        #[arg(long, requires = "types2")]
        types1: Option<PathBuf>,
        #[arg(long, requires = "types1")]
        types2: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
        /// Compare every pair of names instead of blocking.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic KB pair with questions.
    GenBench {
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train link-aware embeddings on a benchmark directory.
    TrainKbe {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "multi-kb")]
        variant: Variant,
        /// Train on this KB alone, as the base for `plug-in`.
        #[arg(long)]
        only_kb: Option<KbId>,
    },
    /// Add the remaining KB to a frozen embedding.
    PlugIn {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the question encoder against a frozen embedding.
    TrainQa {
        #[arg(long)]
        data: PathBuf,
        /// Embedding directory.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a variant: train per seed, or evaluate a trained QA model.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        variant: Option<Variant>,
        /// QA model directory from `train-qa`; skips training.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value = "dev")]
        split: Split,
        /// Remove this KB's entities from the candidate answers.
        #[arg(long)]
        unplug: Option<KbId>,
        /// Write the per-cell breakdown as CSV.
        #[arg(long, value_name = "PATH")]
        emit_csv: Option<PathBuf>,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the JSON report instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Rank answers to one question.
    Ask {
        /// QA model directory from `train-qa`.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        question: String,
        /// Topic entity as kb:name; repeat for two topics.
        #[arg(long = "topic", required = true)]
        topics: Vec<String>,
        #[arg(long)]
        unplug: Option<KbId>,
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Benchmark directory (default: the one recorded at training).
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: config: cannot start {n} threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {}", e.kind(), one_line(&e.to_string()));
            ExitCode::FAILURE
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn config(g: &Global) -> Result<RunConfig> {
    settings::resolve(&settings::Layers {
        preset: g.preset,
        file: g.config.as_deref(),
        overrides: &g.overrides,
        seed: g.seed,
    })
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = config(&cli.global)?;
    match &cli.command {
        Command::MineLinks {
            kb1,
            kb2,
            types1,
            types2,
            threshold,
            exact,
            out,
        } => {
            let types = types1.as_deref().zip(types2.as_deref());
            cmd_mine_links(cfg, (kb1, kb2), types, *threshold, *exact, out)
        }
        Command::GenBench { out_dir } => cmd_gen_bench(&cfg, out_dir),
        Command::TrainKbe {
            data,
            out,
            variant,
            only_kb,
        } => cmd_train_kbe(&cfg, data, out, *variant, *only_kb),
        Command::PlugIn { model, data, out } => cmd_plug_in(&cfg, model, data, out),
        Command::TrainQa { data, model, out } => cmd_train_qa(&cfg, data, model, out),
        Command::Eval {
            data,
            variant,
            model,
            split,
            unplug,
            emit_csv,
            out,
            json,
        } => {
            let report = match model {
                Some(m) => eval_trained(&cfg, data, m, *variant, *split, *unplug)?,
                None => eval_fresh(&cfg, data, variant.unwrap_or(Variant::MultiKb), *split, *unplug)?,
            };
            finish_eval(&report, &cfg, data, emit_csv.as_deref(), out.as_deref(), *json)
        }
        Command::Ask {
            model,
            question,
            topics,
            unplug,
            top,
            data,
        } => cmd_ask(model, data.as_deref(), question, topics, *unplug, *top),
    }
}

fn existing(p: &Path) -> Result<&Path> {
    if p.exists() {
        Ok(p)
    } else {
        Err(Error::MissingArtifact(format!("{} not found", p.display())))
    }
}

fn file_hash(p: &Path) -> Result<Value> {
    let bytes = fs::read(p).map_err(|e| Error::io(p, e))?;
    Ok(json!({ "path": p.display().to_string(), "sha256": sha256_hex(&bytes) }))
}

/// Hashes of a benchmark directory's KB and link files.
fn bench_inputs(data: &Path) -> Result<Vec<Value>> {
    ["kb1.tsv", "types1.tsv", "kb2.tsv", "types2.tsv", "links.tsv"]
        .iter()
        .map(|f| file_hash(&data.join(f)))
        .collect()
}

fn split_inputs(data: &Path) -> Result<Vec<Value>> {
    ["train.jsonl", "dev.jsonl"].iter().map(|f| file_hash(&data.join(f))).collect()
}

fn absolute(p: &Path) -> String {
    fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf()).display().to_string()
}

fn write_json(path: &Path, v: &impl serde::Serialize) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, serde_json::to_string_pretty(v)? + "\n").map_err(|e| Error::io(path, e))
}

fn cmd_mine_links(
    mut cfg: RunConfig,
    (kb1, kb2): (&Path, &Path),
    types: Option<(&Path, &Path)>,
    threshold: Option<f64>,
    exact: bool,
    out: &Path,
) -> Result<()> {
    if let Some(t) = threshold {
        cfg.miner.similarity_threshold = t;
    }
    cfg.miner.exact |= exact;
    cfg.miner.validate()?;
    let (a, b) = match types {
        Some((t1, t2)) => (
            load_kb_with_types(existing(kb1)?, existing(t1)?, 1)?,
            load_kb_with_types(existing(kb2)?, existing(t2)?, 2)?,
        ),
        None => (load_kb(existing(kb1)?, 1)?, load_kb(existing(kb2)?, 2)?),
    };
    let links = mine_links(&a, &b, &cfg.miner)?;
    let mut inputs = vec![file_hash(kb1)?, file_hash(kb2)?];
    if let Some((t1, t2)) = types {
        inputs.extend([file_hash(t1)?, file_hash(t2)?]);
    }
    save_links(&links, &a, &b, out)?;
    let summary = json!({
        "command": "mine-links",
        "miner": cfg.miner,
        "inputs": inputs,
        "links": links.len(),
        "full": links.count(multikb::kb::LinkType::Full),
        "partial": links.count(multikb::kb::LinkType::Partial),
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn cmd_gen_bench(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    let bench = generate_benchmark(&cfg.gen)?;
    let manifest = save_benchmark(&bench, &cfg.gen, out_dir)?;
    println!(
        "wrote {} questions ({} train, {} dev, {} test) to {}",
        bench.data.all().count(),
        bench.data.train.len(),
        bench.data.dev.len(),
        bench.data.test.len(),
        out_dir.display()
    );
    for s in &manifest.shortfalls {
        println!("shortfall: {}/{} {} of {}", s.template, s.link_type, s.generated, s.requested);
    }
    Ok(())
}

fn meta(command: &str, cfg: &RunConfig, variant: Variant, data: &Path, inputs: Vec<Value>, report: Value) -> Value {
    json!({
        "command": command,
        "variant": variant,
        "seed": cfg.train.seed,
        "data": absolute(data),
        "config": cfg,
        "inputs": inputs,
        "report": report,
    })
}

fn cmd_train_kbe(cfg: &RunConfig, data: &Path, out: &Path, variant: Variant, only_kb: Option<KbId>) -> Result<()> {
    let (kbs, links) = load_bench_kbs(existing(data)?)?;
    let (kbs, links, variant) = match only_kb {
        Some(id) => (KbRegistry::new(vec![kbs.kb(id)?.clone()])?, LinkSet::new(), Variant::NoLink),
        None => {
            let p = prepare(variant, &kbs, &links)?;
            (p.kbs, p.links, variant)
        }
    };
    let (model, report) = train_embedding(&kbs, &links, &cfg.train)?;
    let mut m = meta("train-kbe", cfg, variant, data, bench_inputs(data)?, serde_json::to_value(&report)?);
    m["only_kb"] = json!(only_kb);
    save_model(&model, out, m)?;
    println!(
        "trained {} epochs, best training MRR {:.4} at epoch {:?}; saved to {}",
        report.epochs,
        report.best_mrr,
        report.best_epoch,
        out.display()
    );
    Ok(())
}

fn cmd_plug_in(cfg: &RunConfig, model: &Path, data: &Path, out: &Path) -> Result<()> {
    let frozen = load_model(existing(model)?)?;
    let (kbs, links) = load_bench_kbs(existing(data)?)?;
    let (plugged, report) = train_plug_in(&frozen, &kbs, &links, &cfg.train)?;
    let mut inputs = bench_inputs(data)?;
    inputs.push(file_hash(&model.join(multikb::embed::PARAMS_FILE))?);
    let mut m = meta("plug-in", cfg, Variant::MultiKb, data, inputs, serde_json::to_value(&report)?);
    m["weighted_ratio"] = json!(report.weighted_ratio());
    m["unweighted_ratio"] = json!(report.unweighted_ratio());
    save_model(&plugged, out, m)?;
    println!(
        "plugged in {} triples; training scale {:.4} of joint ({:.4} unweighted); saved to {}",
        report.plugged_triples,
        report.weighted_ratio(),
        report.unweighted_ratio(),
        out.display()
    );
    Ok(())
}

fn variant_of(meta: &Value) -> Result<Variant> {
    meta.get("variant")
        .and_then(Value::as_str)
        .unwrap_or("multi-kb")
        .parse()
}

fn records(qs: &[multikb::bench::Question]) -> Vec<QuestionRecord> {
    Dataset::records(qs)
}

/// Questions of `split` mapped into the variant's ids, dropping those that
/// mention a KB the embedding does not cover.
fn mapped(prepared: &Prepared, qs: &[QuestionRecord], emb: &multikb::embed::EmbeddingModel) -> Result<Vec<QuestionRecord>> {
    let mut out = Vec::new();
    for q in qs {
        let m = prepared.map_record(q)?;
        if m.topic_entities.iter().chain(&m.answers).all(|&e| emb.covers(e)) {
            out.push(m);
        }
    }
    Ok(out)
}

fn cmd_train_qa(cfg: &RunConfig, data: &Path, model: &Path, out: &Path) -> Result<()> {
    let emb = load_model(existing(model)?)?;
    let variant = variant_of(&load_manifest(model)?.meta)?;
    let bench = load_benchmark(existing(data)?)?;
    let prepared = prepare(variant, &bench.kbs, &bench.links)?;
    let train = mapped(&prepared, &records(&bench.data.train), &emb)?;
    let dev = mapped(&prepared, &records(&bench.data.dev), &emb)?;
    let (qa, report) = train_qa(&emb, &train, &dev, &cfg.qa)?;
    let mut inputs = bench_inputs(data)?;
    inputs.extend(split_inputs(data)?);
    inputs.push(file_hash(&model.join(multikb::embed::PARAMS_FILE))?);
    let mut m = meta("train-qa", cfg, variant, data, inputs, serde_json::to_value(&report)?);
    m["seed"] = json!(cfg.qa.seed);
    m["embedding"] = json!(absolute(model));
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    save_qa(&qa, out, m)?;
    println!(
        "trained on {} questions, best dev MRR {:.4} at epoch {:?}; saved to {}",
        train.len(),
        report.best_dev_mrr,
        report.best_epoch,
        out.display()
    );
    Ok(())
}

fn settings_for(cfg: &RunConfig, split: Split, unplug: Option<KbId>) -> EvalSettings {
    EvalSettings {
        train: cfg.train.clone(),
        qa: cfg.qa.clone(),
        seeds: cfg.seeds.clone(),
        split,
        unplug,
    }
}

fn eval_fresh(cfg: &RunConfig, data: &Path, variant: Variant, split: Split, unplug: Option<KbId>) -> Result<EvalReport> {
    let bench = load_benchmark(existing(data)?)?;
    run_variant_on(variant, &bench, &settings_for(cfg, split, unplug))
}

fn split_of(bench: &Benchmark, split: Split) -> &[multikb::bench::Question] {
    match split {
        Split::Dev => &bench.data.dev,
        Split::Test => &bench.data.test,
    }
}

fn qa_meta(qa_dir: &Path) -> Result<Value> {
    let path = existing(qa_dir)?.join(multikb::qa::QA_MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let m: multikb::qa::QaManifest = serde_json::from_str(&text)?;
    Ok(m.meta)
}

fn embedding_dir(meta: &Value) -> Result<PathBuf> {
    meta.get("embedding")
        .and_then(Value::as_str)
        .map(PathBuf::from)
        .ok_or_else(|| Error::MissingArtifact("qa manifest names no embedding directory".into()))
}

fn eval_trained(
    cfg: &RunConfig,
    data: &Path,
    qa_dir: &Path,
    variant: Option<Variant>,
    split: Split,
    unplug: Option<KbId>,
) -> Result<EvalReport> {
    let meta = qa_meta(qa_dir)?;
    let trained = variant_of(&meta)?;
    if let Some(v) = variant.filter(|&v| v != trained) {
        return Err(Error::Config(format!("--variant {v} but the model was trained as {trained}")));
    }
    let qa = load_qa(qa_dir)?;
    let emb_dir = embedding_dir(&meta)?;
    let emb = load_model(existing(&emb_dir)?)?;
    let bench = load_benchmark(existing(data)?)?;
    let prepared = prepare(trained, &bench.kbs, &bench.links)?;
    let original: Vec<QuestionRecord> = records(split_of(&bench, split))
        .into_iter()
        .filter(|q| prepared.map_record(q).is_ok_and(|m| m.topic_entities.iter().chain(&m.answers).all(|&e| emb.covers(e))))
        .collect();
    let questions = mapped(&prepared, &original, &emb)?;
    if questions.is_empty() {
        return Err(Error::Domain(format!("the {split:?} split has no questions the model covers")));
    }
    let (overall, breakdown, per_question) = evaluate(&prepared, &emb, &qa, &questions, &original, unplug)?;
    let seed = meta.get("seed").and_then(Value::as_u64).unwrap_or(cfg.qa.seed);
    let emb_report = load_manifest(&emb_dir)?
        .meta
        .get("report")
        .cloned()
        .and_then(|r| serde_json::from_value(r).ok())
        .unwrap_or_default();
    let qa_report = meta.get("report").cloned().and_then(|r| serde_json::from_value(r).ok()).unwrap_or_default();
    let run = RunReport {
        seed,
        overall,
        breakdown: breakdown.clone(),
        unplugged: per_question.iter().filter(|q| q.unplugged).count(),
        per_question,
        embedding: emb_report,
        qa: qa_report,
    };
    Ok(EvalReport {
        variant: trained,
        split,
        unplug,
        runs: 1,
        overall,
        stddev: Default::default(),
        breakdown,
        run_reports: vec![run],
    })
}

fn table(report: &EvalReport) -> String {
    let mut s = format!(
        "variant {}  split {:?}  runs {}  unplug {}\n",
        report.variant,
        report.split,
        report.runs,
        report.unplug.map_or("none".to_owned(), |k| k.to_string())
    );
    s += &format!(
        "overall  MRR {:.4} (sd {:.4})  Hits@1 {:.4} (sd {:.4})\n",
        report.overall.mrr, report.stddev.mrr, report.overall.hits1, report.stddev.hits1
    );
    s += &format!("{:<10}{:<6}{:>6}{:>9}{:>9}\n", "link", "tmpl", "n", "MRR", "Hits@1");
    for c in &report.breakdown {
        s += &format!(
            "{:<10}{:<6}{:>6}{:>9.4}{:>9.4}\n",
            c.link_type.as_str(),
            c.template.to_string(),
            c.questions,
            c.mrr,
            c.hits1
        );
    }
    let unplugged: usize = report.run_reports.iter().map(|r| r.unplugged).sum();
    if report.unplug.is_some() {
        s += &format!("questions with every answer unplugged (all runs): {unplugged}\n");
    }
    s
}

fn csv(report: &EvalReport) -> String {
    let mut s = String::from("variant,split,template,link_type,questions,mrr,hits1\n");
    for c in &report.breakdown {
        s += &format!(
            "{},{:?},{},{},{},{},{}\n",
            report.variant,
            report.split,
            c.template,
            c.link_type.as_str(),
            c.questions,
            c.mrr,
            c.hits1
        );
    }
    s
}

fn finish_eval(
    report: &EvalReport,
    cfg: &RunConfig,
    data: &Path,
    emit_csv: Option<&Path>,
    out: Option<&Path>,
    as_json: bool,
) -> Result<()> {
    let mut inputs = bench_inputs(data)?;
    inputs.extend(["train.jsonl", "dev.jsonl", "test.jsonl"].iter().map(|f| file_hash(&data.join(f))).collect::<Result<Vec<_>>>()?);
    let doc = json!({
        "command": "eval",
        "variant": report.variant,
        "split": report.split,
        "unplug": report.unplug,
        "seeds": cfg.seeds,
        "config": cfg,
        "data": absolute(data),
        "inputs": inputs,
        "report": report,
    });
    if let Some(path) = out {
        write_json(path, &doc)?;
    }
    if let Some(path) = emit_csv {
        fs::write(path, csv(report)).map_err(|e| Error::io(path, e))?;
    }
    let mut stdout = std::io::stdout().lock();
    let text = if as_json { serde_json::to_string_pretty(&doc)? + "\n" } else { table(report) };
    stdout.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
}

fn cmd_ask(
    qa_dir: &Path,
    data: Option<&Path>,
    question: &str,
    topics: &[String],
    unplug: Option<KbId>,
    top: usize,
) -> Result<()> {
    let meta = qa_meta(qa_dir)?;
    let variant = variant_of(&meta)?;
    let qa = load_qa(qa_dir)?;
    let emb = load_model(existing(&embedding_dir(&meta)?)?)?;
    let data = match data {
        Some(d) => d.to_path_buf(),
        None => meta
            .get("data")
            .and_then(Value::as_str)
            .map(PathBuf::from)
            .ok_or_else(|| Error::MissingArtifact("qa manifest names no data directory; pass --data".into()))?,
    };
    let (kbs, links) = load_bench_kbs(existing(&data)?)?;
    let prepared = prepare(variant, &kbs, &links)?;
    let topic_entities = topics.iter().map(|t| kbs.resolve(t)).collect::<Result<Vec<_>>>()?;
    let q = prepared.map_record(&QuestionRecord {
        id: "ask".into(),
        text: question.to_owned(),
        topic_entities,
        answers: Vec::new(),
        template: TemplateId::T1,
        link_type: multikb::kb::LinkType::Full,
    })?;
    if let Some(e) = q.topic_entities.iter().find(|&&e| !emb.covers(e)) {
        return Err(Error::UnknownEntity(format!("{e} is not covered by the model")));
    }
    let candidates = prepared.candidates(&emb, unplug)?;
    let ranked = qa.rank_answers(&emb, &q, &candidates)?;
    for (i, (e, score)) in ranked.iter().take(top).enumerate() {
        println!("{:>3}  {:<32} {:.6}", i + 1, prepared.kbs.qualified_name(*e)?, score);
    }
    Ok(())
}
