//! Command-line front end: `run`, `post`, `compare` and `batch`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{load_csv, load_csv_with_test, make_split, make_split_fixed_test, LabelColumn};
use crate::ensemble::{Ensemble, LossKind};
use crate::error::{Error, Result};
use crate::hyperspace::SearchSpace;
use crate::learners::{joint_space, Algorithm};
use crate::optimizer::{
    evaluate_on_test, evaluate_on_val, load_run, post_hoc, run_bo, run_eo, select_best, write_run,
    CvModelSource, History, RunArtifact, RunMeta, SearchSettings, Selection, SelectionRecord,
    DEFAULT_GP_SAMPLES, DEFAULT_INIT, DEFAULT_WARM_K,
};
use crate::stats::{
    average_errors, average_ranks, average_ranks_per_repetition, format_p, friedman, nemenyi_cd,
    nemenyi_groups, pairwise_report, ResultTable, WilcoxonMethod,
};

/// The compared methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    BoBest,
    BoPost,
    Eo,
    EoPost,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::BoBest => "bo-best",
            Method::BoPost => "bo-post",
            Method::Eo => "eo",
            Method::EoPost => "eo-post",
        }
    }

    fn is_eo(self) -> bool {
        matches!(self, Method::Eo | Method::EoPost)
    }
}

fn default_label_col() -> LabelColumn {
    LabelColumn::Name("label".into())
}
fn default_folds() -> usize {
    5
}
fn default_test_fraction() -> f64 {
    0.33
}
fn default_init() -> usize {
    DEFAULT_INIT
}
fn default_warm_k() -> usize {
    DEFAULT_WARM_K
}
fn default_gp_samples() -> usize {
    DEFAULT_GP_SAMPLES
}

/// Contents of a `run.json` configuration file. Relative paths resolve
/// against the configuration file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub method: Method,
    pub dataset: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_dataset: Option<PathBuf>,
    #[serde(default = "default_label_col")]
    pub label_col: LabelColumn,
    /// Search space file; defaults to the joint space of `algorithms`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<PathBuf>,
    /// Learner families; defaults to all of them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithms: Option<Vec<String>>,
    pub budget: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_size: Option<usize>,
    #[serde(default = "default_warm_k")]
    pub warm_k: usize,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    /// Ensemble loss for EO; squared margin when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<LossKind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_init")]
    pub init: usize,
    #[serde(default = "default_gp_samples")]
    pub gp_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<usize>,
    pub output: PathBuf,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Reads a configuration and resolves its relative paths.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.dataset);
        fix(&mut self.output);
        if let Some(p) = &mut self.test_dataset {
            fix(p);
        }
        if let Some(p) = &mut self.space {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let need = |field: &str| {
            Err(Error::InvalidConfig(format!(
                "`{field}` is required for method {}",
                self.method.name()
            )))
        };
        if self.method.is_eo() && self.ensemble_size.is_none() {
            return need("ensemble_size");
        }
        if matches!(self.method, Method::BoPost | Method::EoPost) && self.post_size.is_none() {
            return need("post_size");
        }
        if self.budget == 0 {
            return Err(Error::InvalidConfig("`budget` must be at least 1".into()));
        }
        if self.ensemble_size == Some(0) {
            return Err(Error::InvalidConfig(
                "`ensemble_size` must be at least 1".into(),
            ));
        }
        if let Some(s) = self.post_size {
            if s == 0 || self.warm_k > s {
                return Err(Error::InvalidConfig(
                    "`post_size` must be at least max(1, warm_k)".into(),
                ));
            }
        }
        Ok(())
    }

    fn algorithms(&self) -> Result<Vec<Algorithm>> {
        match &self.algorithms {
            None => Ok(Algorithm::ALL.to_vec()),
            Some(v) if v.is_empty() => Err(Error::InvalidConfig("`algorithms` is empty".into())),
            Some(v) => v
                .iter()
                .map(|s| {
                    s.parse()
                        .map_err(|_| Error::InvalidConfig(format!("`algorithms`: unknown `{s}`")))
                })
                .collect(),
        }
    }
}

/// What a single run reports.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub method: Method,
    pub seed: u64,
    pub test_error: f64,
    pub val_error: f64,
    pub members: Vec<usize>,
    pub selections: BTreeMap<String, SelectionRecord>,
}

impl RunSummary {
    pub fn line(&self) -> String {
        format!(
            "method={} seed={} test_error={:.6} val_error={:.6} members={:?}",
            self.method.name(),
            self.seed,
            self.test_error,
            self.val_error,
            self.members
        )
    }
}

fn record(history: &History, selection: Selection<'_>) -> Result<SelectionRecord> {
    let members = match selection {
        Selection::Model(id) => vec![id],
        Selection::Ensemble(e) => e.members(),
    };
    Ok(SelectionRecord {
        members,
        val_error: evaluate_on_val(selection, history)?,
        test_error: evaluate_on_test(selection, history)?,
    })
}

/// Executes a configuration and writes its artifact directory.
pub fn execute_run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let algorithms = cfg.algorithms()?;
    let (data, plan) = match &cfg.test_dataset {
        None => {
            let data = load_csv(&cfg.dataset, &cfg.label_col)?;
            let plan = make_split(&data, cfg.test_fraction, cfg.folds, cfg.seed)?;
            (data, plan)
        }
        Some(test) => {
            let (data, n_train) = load_csv_with_test(&cfg.dataset, test, &cfg.label_col)?;
            let plan =
                make_split_fixed_test(&data, (n_train..data.n()).collect(), cfg.folds, cfg.seed)?;
            (data, plan)
        }
    };
    let space = match &cfg.space {
        Some(p) => SearchSpace::load(p)?,
        None => joint_space(&algorithms)?,
    };
    let source = CvModelSource::new(&data, &plan, algorithms[0]);
    let mut settings = SearchSettings::new(cfg.budget, cfg.seed);
    settings.init = cfg.init;
    settings.gp_samples = cfg.gp_samples;
    if let Some(c) = cfg.candidates {
        settings.candidates = c;
    }

    let loss = if cfg.method.is_eo() {
        cfg.loss.unwrap_or(LossKind::SquaredMargin)
    } else {
        LossKind::ZeroOne
    };
    let outcome = if cfg.method.is_eo() {
        run_eo(
            &source,
            &space,
            &settings,
            cfg.ensemble_size.expect("validated"),
            loss,
        )?
    } else {
        run_bo(&source, &space, &settings)?
    };
    let history = &outcome.history;

    let mut selections = BTreeMap::new();
    if cfg.method.is_eo() {
        let e = outcome.ensemble.as_ref().expect("eo keeps an ensemble");
        selections.insert("eo".to_string(), record(history, Selection::Ensemble(e))?);
    } else {
        selections.insert(
            "bo-best".to_string(),
            record(history, Selection::Model(select_best(history)?))?,
        );
    }
    if let Some(size) = cfg.post_size {
        let e = post_hoc(history, size, cfg.warm_k.min(history.len()))?;
        let key = if cfg.method.is_eo() {
            "eo-post"
        } else {
            "bo-post"
        };
        selections.insert(key.to_string(), record(history, Selection::Ensemble(&e))?);
    }

    let mut extra = BTreeMap::new();
    extra.insert("dataset".into(), serde_json::json!(cfg.dataset));
    extra.insert("folds".into(), serde_json::json!(cfg.folds));
    extra.insert("test_fraction".into(), serde_json::json!(cfg.test_fraction));
    extra.insert("warm_k".into(), serde_json::json!(cfg.warm_k));
    if let Some(s) = cfg.post_size {
        extra.insert("post_size".into(), serde_json::json!(s));
    }
    if !plan.warnings.is_empty() {
        extra.insert("split_warnings".into(), serde_json::json!(plan.warnings));
    }
    let artifact = RunArtifact {
        meta: RunMeta {
            method: cfg.method.name().to_string(),
            budget: cfg.budget,
            init: cfg.init,
            ensemble_size: cfg.ensemble_size.filter(|_| cfg.method.is_eo()),
            loss,
            seed: cfg.seed,
            space_digest: space.digest(),
            space: space.clone(),
            label_names: data.label_names().to_vec(),
            extra,
        },
        iterations: outcome.iterations.clone(),
        selections: selections.clone(),
    };
    write_run(&cfg.output, &artifact, history)?;

    let chosen = &selections[cfg.method.name()];
    Ok(RunSummary {
        method: cfg.method,
        seed: cfg.seed,
        test_error: chosen.test_error,
        val_error: chosen.val_error,
        members: chosen.members.clone(),
        selections,
    })
}

/// One row of a post-hoc error curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub size: usize,
    pub member: usize,
    pub val_error: f64,
    pub test_error: f64,
}

/// Greedy post-hoc ensemble rebuilt from an artifact, with errors after
/// each added member.
pub fn post_curve(
    history: &History,
    size: usize,
    warm_k: usize,
) -> Result<(Ensemble, Vec<CurvePoint>)> {
    let ens = post_hoc(history, size, warm_k)?;
    let members = ens.members();
    let mut curve = Vec::with_capacity(size);
    for s in 1..=members.len() {
        let prefix = Ensemble::from_members(members[..s].to_vec());
        curve.push(CurvePoint {
            size: s,
            member: members[s - 1],
            val_error: evaluate_on_val(Selection::Ensemble(&prefix), history)?,
            test_error: evaluate_on_test(Selection::Ensemble(&prefix), history)?,
        });
    }
    Ok((ens, curve))
}

pub fn curve_csv(curve: &[CurvePoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in curve {
        w.serialize(p)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
        .map_err(|e| Error::Data(e.to_string()))
}

pub fn cmd_post(artifact: &Path, size: usize, warm_k: usize) -> Result<String> {
    let run = load_run(artifact)?;
    let (_, curve) = post_curve(&run.history, size, warm_k)?;
    curve_csv(&curve)
}

/// Options of the comparison report.
#[derive(Debug, Clone, Copy)]
pub struct CompareOptions {
    pub alpha: f64,
    pub wilcoxon: WilcoxonMethod,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            wilcoxon: WilcoxonMethod::Auto,
        }
    }
}

/// Plain-text report: mean errors with average ranks, pairwise Wilcoxon
/// matrix, Friedman test and Nemenyi critical difference.
pub fn compare_report(table: &ResultTable, opts: CompareOptions) -> Result<String> {
    let methods = table.methods();
    let datasets = table.datasets();
    if methods.len() < 2 || datasets.len() < 2 {
        return Err(Error::Data(
            "comparison needs at least two methods and two datasets".into(),
        ));
    }
    let means = average_errors(table);
    let ranks = average_ranks(&means)?;
    let rep_ranks = average_ranks_per_repetition(table)?;
    let width = methods.iter().map(String::len).max().unwrap_or(6).max(6);
    let mut out = String::new();

    writeln!(
        out,
        "Mean error over up to {} repetition(s)",
        table.repetitions()
    )
    .ok();
    write!(out, "{:width$}", "").ok();
    for d in datasets {
        write!(out, " {:>8}", d).ok();
    }
    writeln!(out, " {:>10} {:>10}", "rank(mean)", "rank(rep)").ok();
    for (i, m) in methods.iter().enumerate() {
        write!(out, "{m:width$}").ok();
        for v in &means[i] {
            write!(out, " {:>8.4}", v).ok();
        }
        writeln!(out, " {:>10.4} {:>10.4}", ranks[i], rep_ranks[i]).ok();
    }
    writeln!(
        out,
        "rank(mean): ranks of per-dataset mean errors; rank(rep): ranks per repetition, then averaged"
    )
    .ok();

    let rep = pairwise_report(methods, &means, opts.wilcoxon)?;
    writeln!(
        out,
        "\nWilcoxon signed-rank p-values (**p** when p <= {}, parentheses when the row method ranks worse)",
        opts.alpha
    )
    .ok();
    for i in 0..methods.len() {
        write!(out, "{:width$}", methods[i]).ok();
        for j in 0..methods.len() {
            write!(out, " {:>14}", rep.cell(i, j, opts.alpha)).ok();
        }
        writeln!(out).ok();
    }

    if methods.len() >= 3 {
        let f = friedman(&means)?;
        writeln!(
            out,
            "\nFriedman chi2 = {:.4}, p = {}",
            f.statistic,
            format_p(f.p_value)
        )
        .ok();
    } else {
        writeln!(
            out,
            "\nFriedman test skipped (needs at least three methods)"
        )
        .ok();
    }
    match nemenyi_cd(methods.len(), datasets.len(), opts.alpha) {
        Ok(cd) => {
            writeln!(out, "Nemenyi CD (alpha = {}) = {:.4}", opts.alpha, cd).ok();
            let groups = nemenyi_groups(&ranks, cd);
            if groups.is_empty() {
                writeln!(out, "No groups of methods within CD").ok();
            }
            for g in groups {
                let names: Vec<&str> = g.iter().map(|&i| methods[i].as_str()).collect();
                writeln!(out, "Not significantly different: {}", names.join(", ")).ok();
            }
        }
        Err(e) => {
            writeln!(out, "Nemenyi test skipped: {e}").ok();
        }
    }
    Ok(out)
}

/// Rank table and p-value matrix as CSV text.
pub fn compare_csv(table: &ResultTable, opts: CompareOptions) -> Result<(String, String)> {
    let means = average_errors(table);
    let ranks = average_ranks(&means)?;
    let rep_ranks = average_ranks_per_repetition(table)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["method".to_string()];
    header.extend(table.datasets().iter().cloned());
    header.push("rank_mean".into());
    header.push("rank_rep".into());
    w.write_record(&header)?;
    for (i, m) in table.methods().iter().enumerate() {
        let mut row = vec![m.clone()];
        row.extend(means[i].iter().map(|v| v.to_string()));
        row.push(ranks[i].to_string());
        row.push(rep_ranks[i].to_string());
        w.write_record(&row)?;
    }
    let rank_csv = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
        .map_err(|e| Error::Data(e.to_string()))?;

    let rep = pairwise_report(table.methods(), &means, opts.wilcoxon)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["method".to_string()];
    header.extend(table.methods().iter().cloned());
    w.write_record(&header)?;
    for (i, m) in table.methods().iter().enumerate() {
        let mut row = vec![m.clone()];
        row.extend((0..table.methods().len()).map(|j| rep.cell(i, j, opts.alpha)));
        w.write_record(&row)?;
    }
    let p_csv = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
        .map_err(|e| Error::Data(e.to_string()))?;
    Ok((rank_csv, p_csv))
}

/// Parses `"1..10"` (inclusive) or `"1,4,9"`.
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let bad = || Error::InvalidArgument(format!("cannot parse seed list `{spec}`"));
    if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b
            .trim_start_matches('=')
            .trim()
            .parse()
            .map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    spec.split(',')
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect()
}

/// Runs one configuration per seed concurrently, each into
/// `output/seed-<s>`, and writes `output/results.csv`.
pub fn execute_batch(cfg: &RunConfig, seeds: &[u64]) -> Result<Vec<RunSummary>> {
    cfg.validate()?;
    let summaries: Vec<RunSummary> = seeds
        .par_iter()
        .map(|&s| {
            let mut c = cfg.clone();
            c.seed = s;
            c.output = cfg.output.join(format!("seed-{s}"));
            execute_run(&c)
        })
        .collect::<Result<_>>()?;
    let dataset = cfg
        .dataset
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    std::fs::create_dir_all(&cfg.output)?;
    let mut w = csv::Writer::from_path(cfg.output.join("results.csv"))?;
    w.write_record(["method", "dataset", "repetition", "error"])?;
    for s in &summaries {
        for (method, sel) in &s.selections {
            w.write_record([
                method.clone(),
                dataset.clone(),
                s.seed.to_string(),
                sel.test_error.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(summaries)
}

#[derive(Debug, Parser)]
#[command(
    name = "ensopt",
    version,
    about = "Bayesian optimization of classifier ensembles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one optimization from a JSON configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Rebuild a post-hoc ensemble from an artifact and print its error curve.
    Post {
        #[arg(long)]
        artifact: PathBuf,
        #[arg(long, default_value_t = 12)]
        size: usize,
        #[arg(long, default_value_t = DEFAULT_WARM_K)]
        warm: usize,
        /// Also write the curve to this CSV file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Statistical comparison of methods from a results CSV.
    Compare {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// auto, exact or normal.
        #[arg(long, default_value = "auto")]
        wilcoxon: String,
        /// Directory for ranks.csv and pvalues.csv.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
    },
    /// Run a configuration over several seeds concurrently.
    Batch {
        #[arg(long)]
        config: PathBuf,
        /// Inclusive range `1..10` or a list `1,2,5`.
        #[arg(long)]
        seeds: String,
    },
}

/// Executes a parsed command; returns the text for standard output.
pub fn dispatch(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Run { config } => Ok(execute_run(&RunConfig::load(config)?)?.line()),
        Command::Post {
            artifact,
            size,
            warm,
            output,
        } => {
            let text = cmd_post(&artifact, size, warm)?;
            if let Some(p) = output {
                std::fs::write(p, &text)?;
            }
            Ok(text.trim_end().to_string())
        }
        Command::Compare {
            results,
            alpha,
            wilcoxon,
            csv_dir,
        } => {
            let table = ResultTable::load(results)?;
            let opts = CompareOptions {
                alpha,
                wilcoxon: wilcoxon.parse()?,
            };
            if let Some(dir) = csv_dir {
                let (ranks, pvals) = compare_csv(&table, opts)?;
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("ranks.csv"), ranks)?;
                std::fs::write(dir.join("pvalues.csv"), pvals)?;
            }
            Ok(compare_report(&table, opts)?.trim_end().to_string())
        }
        Command::Batch { config, seeds } => {
            let cfg = RunConfig::load(config)?;
            let summaries = execute_batch(&cfg, &parse_seeds(&seeds)?)?;
            Ok(summaries
                .iter()
                .map(RunSummary::line)
                .collect::<Vec<_>>()
                .join("\n"))
        }
    }
}
