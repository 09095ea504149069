//! The pipeline commands. Each one reads its inputs from the output layout,
//! checks their config hash, and writes its results atomically.

use std::collections::BTreeMap;
use std::path::PathBuf;

use hexlab_core::agent::{play_vs_random, train as train_run, Checkpoint, Module};
use hexlab_core::behavior::{
    near_won_boards, run_negative, run_positive, wasted_move_rate, zscore_rate, BehavioralResult, NetAgent,
    RandomAgent,
};
use hexlab_core::concepts::{polarity_of, Horizon, Polarity};
use hexlab_core::metrics::{to_csv, Metric, MetricRow};
use hexlab_core::oracle::{verify_case, Solver};
use hexlab_core::probe::{best_layer, encode_dataset, structure_scores, train_probe, Split};
use hexlab_core::seed::derive_seed;
use hexlab_core::synth::{
    gen_behavioral_cases, gen_probing_set, read_jsonl, to_jsonl, BehavioralCase, PermutationMap, ProbingExample,
    SynthError,
};
use hexlab_core::{Board, Player};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::layout::{
    connected_tag, load_checkpoint, load_checkpoint_dir, read_checked, save_checkpoint, write_with_meta, Layout,
};

/// Flags shared by the commands; each command reads the ones it needs.
#[derive(Clone, Debug, Default)]
pub struct Options {
    pub seed: Option<u64>,
    pub concept: Option<String>,
    pub module: Option<Module>,
    pub budget: Option<usize>,
    pub defender_connected: Option<bool>,
    pub checkpoint: Option<PathBuf>,
}

pub struct Context {
    pub cfg: RunConfig,
    pub layout: Layout,
    pub hash: String,
    pub opts: Options,
}

pub const HORIZONS: [Horizon; 2] = [Horizon::Short, Horizon::Long];

fn log(msg: impl AsRef<str>) {
    eprintln!("[hexlab] {}", msg.as_ref());
}

impl Context {
    pub fn new(cfg: RunConfig, out: PathBuf, opts: Options) -> Result<Self, CliError> {
        cfg.validate()?;
        if let Some(c) = &opts.concept {
            if !cfg.concepts.contains(c) {
                return Err(CliError::Config(format!("concept {c} is not in the config")));
            }
        }
        if let Some(s) = opts.seed {
            if !cfg.seeds.contains(&s) {
                return Err(CliError::Config(format!("seed {s} is not in the config's seed list")));
            }
        }
        if opts.budget == Some(0) {
            return Err(CliError::Config("budget must be positive".into()));
        }
        let hash = cfg.hash();
        Ok(Self { cfg, layout: Layout::new(out), hash, opts })
    }

    fn seeds(&self) -> Vec<u64> {
        match self.opts.seed {
            Some(s) => vec![s],
            None => self.cfg.seeds.clone(),
        }
    }

    fn concepts(&self) -> Vec<String> {
        match &self.opts.concept {
            Some(c) => vec![c.clone()],
            None => self.cfg.concepts.clone(),
        }
    }

    fn connected_flags(&self) -> Vec<bool> {
        match self.opts.defender_connected {
            Some(f) => vec![f],
            None if self.cfg.behavioral.unconnected => vec![true, false],
            None => vec![true],
        }
    }

    fn budget(&self) -> usize {
        self.opts.budget.unwrap_or(self.cfg.budget)
    }

    fn checkpoints(&self) -> Vec<usize> {
        (0..=self.cfg.final_checkpoint()).collect()
    }

    fn write_rows(&self, analysis: &str, seed: u64, rows: &[MetricRow], command: &str) -> Result<(), CliError> {
        let path = self.layout.metrics(analysis, seed);
        write_with_meta(&path, &to_csv(rows).map_err(CliError::other)?, &self.hash, Some(seed), command)
    }
}

fn row(checkpoint: usize, concept: &str, horizon: &str, layer: Option<usize>, metric: Metric, value: f64, seed: u64) -> MetricRow {
    MetricRow { checkpoint, concept: concept.into(), horizon: horizon.into(), layer, metric, value, seed }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayoffRecord {
    pub checkpoint: usize,
    pub games: usize,
    pub wins_as_black: usize,
    pub budget: usize,
}

/// Trains one run per seed, writing every checkpoint as it is produced. Runs
/// whose final checkpoint already exists for this config are left alone.
pub fn train(ctx: &Context) -> Result<(), CliError> {
    for seed in ctx.seeds() {
        let last = ctx.cfg.final_checkpoint();
        if load_checkpoint(&ctx.layout, seed, last, &ctx.hash).is_ok() {
            log(format!("seed {seed}: checkpoints present, skipping training"));
        } else {
            let tc = ctx.cfg.train_config(seed);
            let mut lines = Vec::new();
            let started = std::time::Instant::now();
            train_run(&tc, |c, it| {
                save_checkpoint(&ctx.layout, seed, c, &ctx.hash).map_err(|e| e.to_string())?;
                if let Some(it) = it {
                    log(format!(
                        "seed {seed}: checkpoint {} after iteration {} (loss {:.3}, {:.0}s)",
                        c.index,
                        it.iteration,
                        it.mean_loss,
                        started.elapsed().as_secs_f64()
                    ));
                    lines.push(it.clone());
                }
                Ok(())
            })
            .map_err(|e| match e {
                hexlab_core::agent::TrainError::Schedule(m) => CliError::Config(m),
                other => CliError::other(other),
            })?;
            let path = ctx.layout.seed_dir(seed).join("train_log.jsonl");
            write_with_meta(&path, &to_jsonl(&lines).map_err(CliError::other)?, &ctx.hash, Some(seed), "train")?;
        }
        let c = load_checkpoint(&ctx.layout, seed, last, &ctx.hash)?;
        let games = 100;
        let wins = play_vs_random(&c.net, ctx.cfg.board_size, games, Player::Black, Module::Mcts, ctx.cfg.budget, seed)
            .map_err(CliError::other)?;
        log(format!("seed {seed}: final checkpoint beats random as Black in {wins}/{games}"));
        let rec = PlayoffRecord { checkpoint: last, games, wins_as_black: wins, budget: ctx.cfg.budget };
        let path = ctx.layout.seed_dir(seed).join("playoff.json");
        write_with_meta(&path, &serde_json::to_vec_pretty(&rec).expect("serialises"), &ctx.hash, Some(seed), "train")?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub concept: String,
    pub horizon: String,
    pub reason: String,
}

/// The single cell permutation used for every control dataset.
pub fn control_permutation(cfg: &RunConfig) -> PermutationMap {
    PermutationMap::random(cfg.board_size, derive_seed(cfg.dataset_seed, "control", 0))
}

pub fn gen_probing(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let pm = control_permutation(cfg);
    let mut skipped = Vec::new();
    for concept in ctx.concepts() {
        for h in HORIZONS {
            let set = match gen_probing_set(&concept, h, cfg.probing.n, cfg.board_size, cfg.dataset_seed) {
                Ok(s) => s,
                Err(e @ (SynthError::Infeasible { .. } | SynthError::DoesNotFit { .. })) => {
                    log(format!("probing {concept}/{h}: skipped ({e})"));
                    skipped.push(Skipped { concept: concept.clone(), horizon: h.to_string(), reason: e.to_string() });
                    continue;
                }
                Err(SynthError::BadCount(n)) => return Err(CliError::Config(format!("probing.n = {n} must be even"))),
                Err(e) => return Err(CliError::invariant(e)),
            };
            let control = set
                .iter()
                .map(|e| Ok(ProbingExample { board: pm.permute(&e.board)?, ..e.clone() }))
                .collect::<Result<Vec<_>, SynthError>>()
                .map_err(CliError::invariant)?;
            let real_path = ctx.layout.probing(&concept, h.as_str());
            write_with_meta(&real_path, &to_jsonl(&set).map_err(CliError::other)?, &ctx.hash, None, "gen-probing")?;
            let ctrl_path = ctx.layout.probing_control(&concept, h.as_str());
            write_with_meta(&ctrl_path, &to_jsonl(&control).map_err(CliError::other)?, &ctx.hash, None, "gen-probing")?;
            log(format!("probing {concept}/{h}: {} examples", set.len()));
        }
    }
    if ctx.opts.concept.is_none() {
        let path = ctx.layout.probing_skipped();
        write_with_meta(&path, &serde_json::to_vec_pretty(&skipped).expect("serialises"), &ctx.hash, None, "gen-probing")?;
    }
    Ok(())
}

pub fn gen_behavioral(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    for concept in ctx.concepts() {
        for connected in ctx.connected_flags() {
            let started = std::time::Instant::now();
            let cases = gen_behavioral_cases(&concept, cfg.behavioral.n, cfg.board_size, cfg.dataset_seed, connected)
                .map_err(|e| match e {
                    SynthError::DoesNotFit { .. } | SynthError::UnknownConcept(_) => CliError::Config(e.to_string()),
                    other => CliError::invariant(other),
                })?;
            let path = ctx.layout.behavioral(&concept, connected);
            write_with_meta(&path, &to_jsonl(&cases).map_err(CliError::other)?, &ctx.hash, None, "gen-behavioral")?;
            log(format!(
                "behavioral {concept}/{}: {} cases ({:.0}s)",
                connected_tag(connected),
                cases.len(),
                started.elapsed().as_secs_f64()
            ));
        }
    }
    Ok(())
}

fn read_examples(path: &std::path::Path, hash: &str) -> Result<Vec<ProbingExample>, CliError> {
    read_jsonl(&read_checked(path, hash)?[..]).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn read_cases(path: &std::path::Path, hash: &str) -> Result<Vec<BehavioralCase>, CliError> {
    read_jsonl(&read_checked(path, hash)?[..]).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Probing datasets (real and control) that exist for a concept.
struct ProbingData {
    concept: String,
    horizon: String,
    real: Vec<ProbingExample>,
    control: Vec<ProbingExample>,
}

fn skipped_pairs(ctx: &Context) -> Vec<(String, String)> {
    std::fs::read(ctx.layout.probing_skipped())
        .ok()
        .and_then(|b| serde_json::from_slice::<Vec<Skipped>>(&b).ok())
        .unwrap_or_default()
        .into_iter()
        .map(|s| (s.concept, s.horizon))
        .collect()
}

fn load_probing(ctx: &Context) -> Result<Vec<ProbingData>, CliError> {
    let skipped = skipped_pairs(ctx);
    let mut out = Vec::new();
    for concept in ctx.concepts() {
        for h in HORIZONS {
            let horizon = h.to_string();
            if skipped.contains(&(concept.clone(), horizon.clone())) {
                continue;
            }
            let real = read_examples(&ctx.layout.probing(&concept, &horizon), &ctx.hash)?;
            let control = read_examples(&ctx.layout.probing_control(&concept, &horizon), &ctx.hash)?;
            if real.len() != control.len() {
                return Err(CliError::invariant(format!("{concept}/{horizon}: control size differs")));
            }
            out.push(ProbingData { concept: concept.clone(), horizon, real, control });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivationManifest {
    pub concept: String,
    pub horizon: String,
    pub rows: usize,
    pub widths: Vec<usize>,
    pub labels: Vec<bool>,
    pub files: Vec<String>,
    pub endianness: String,
}

/// Writes per-layer activation matrices (row-major little-endian f32) for
/// one checkpoint and the selected concepts.
pub fn encode(ctx: &Context) -> Result<(), CliError> {
    let (seed, ckpt) = match &ctx.opts.checkpoint {
        Some(dir) => (ctx.opts.seed.unwrap_or(ctx.cfg.seeds[0]), load_checkpoint_dir(dir)?),
        None => {
            let seed = ctx.opts.seed.unwrap_or(ctx.cfg.seeds[0]);
            (seed, load_checkpoint(&ctx.layout, seed, ctx.cfg.final_checkpoint(), &ctx.hash)?)
        }
    };
    for data in load_probing(ctx)? {
        let boards: Vec<&Board> = data.real.iter().map(|e| &e.board).collect();
        let mats = encode_dataset(&ckpt.net, &boards).map_err(CliError::invariant)?;
        let dir = ctx.layout.activations(seed, ckpt.index, &data.concept, &data.horizon);
        let mut files = Vec::new();
        for (l, m) in mats.iter().enumerate() {
            let name = format!("layer{l}.f32");
            let bytes: Vec<u8> = m.iter().flat_map(|x| x.to_le_bytes()).collect();
            write_with_meta(&dir.join(&name), &bytes, &ctx.hash, Some(seed), "encode")?;
            files.push(name);
        }
        let manifest = ActivationManifest {
            concept: data.concept.clone(),
            horizon: data.horizon.clone(),
            rows: boards.len(),
            widths: mats.iter().map(|m| m.ncols()).collect(),
            labels: data.real.iter().map(|e| e.label.is_present()).collect(),
            files,
            endianness: "little".into(),
        };
        let text = serde_json::to_vec_pretty(&manifest).expect("serialises");
        write_with_meta(&dir.join("manifest.json"), &text, &ctx.hash, Some(seed), "encode")?;
        log(format!("encoded {}/{} at checkpoint {}", data.concept, data.horizon, ckpt.index));
    }
    Ok(())
}

/// Real and control probes for every layer of one checkpoint.
fn probe_rows(ctx: &Context, ckpt: &Checkpoint, data: &ProbingData, seed: u64) -> Result<Vec<MetricRow>, CliError> {
    let labels: Vec<bool> = data.real.iter().map(|e| e.label.is_present()).collect();
    let split = Split::stratified(
        &labels,
        ctx.cfg.probing.test_fraction,
        derive_seed(ctx.cfg.dataset_seed, &format!("probe-split/{}/{}", data.concept, data.horizon), 0),
    );
    let real: Vec<&Board> = data.real.iter().map(|e| &e.board).collect();
    let control: Vec<&Board> = data.control.iter().map(|e| &e.board).collect();
    let real = encode_dataset(&ckpt.net, &real).map_err(CliError::invariant)?;
    let control = encode_dataset(&ckpt.net, &control).map_err(CliError::invariant)?;
    let hyper = ctx.cfg.probe_hyper();
    let fits = (0..real.len())
        .into_par_iter()
        .map(|l| {
            let r = train_probe(&real[l].view(), &labels, &split, l, &hyper)?;
            let c = train_probe(&control[l].view(), &labels, &split, l, &hyper)?;
            Ok((r.test_accuracy, c.test_accuracy))
        })
        .collect::<Result<Vec<_>, hexlab_core::probe::ProbeError>>()
        .map_err(CliError::invariant)?;
    let (k, c, h) = (ckpt.index, data.concept.as_str(), data.horizon.as_str());
    let mut rows = Vec::new();
    for (l, &(acc, ctrl)) in fits.iter().enumerate() {
        rows.push(row(k, c, h, Some(l), Metric::ProbeAcc, acc, seed));
        rows.push(row(k, c, h, Some(l), Metric::ControlAcc, ctrl, seed));
        rows.push(row(k, c, h, Some(l), Metric::Selectivity, acc - ctrl, seed));
    }
    let accs: Vec<f64> = fits.iter().map(|f| f.0).collect();
    rows.push(row(k, c, h, None, Metric::BestLayer, best_layer(&accs) as f64, seed));
    Ok(rows)
}

pub fn probe(ctx: &Context) -> Result<(), CliError> {
    let datasets = load_probing(ctx)?;
    if datasets.is_empty() {
        return Err(CliError::MissingInput("no probing datasets; run gen-probing".into()));
    }
    for seed in ctx.seeds() {
        let mut by_concept: BTreeMap<String, Vec<MetricRow>> = BTreeMap::new();
        for k in ctx.checkpoints() {
            let ckpt = load_checkpoint(&ctx.layout, seed, k, &ctx.hash)?;
            for data in &datasets {
                by_concept.entry(data.concept.clone()).or_default().extend(probe_rows(ctx, &ckpt, data, seed)?);
            }
            log(format!("seed {seed}: probed checkpoint {k}"));
        }
        for (concept, rows) in by_concept {
            ctx.write_rows(&format!("probe-{concept}"), seed, &rows, "probe")?;
        }
    }
    Ok(())
}

fn module_name(m: Module) -> &'static str {
    match m {
        Module::Mcts => "mcts",
        Module::Policy => "policy",
    }
}

fn pass_rate(results: &[BehavioralResult]) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    results.iter().filter(|r| r.passed).count() as f64 / results.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegativeBaseline {
    pub concept: String,
    pub connected: bool,
    pub random_pass_rate: f64,
}

/// Behavioural pass rates, z-score rates and (once per run) wasted-move
/// rates for every checkpoint.
pub fn behave(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let size = cfg.board_size;
    let budget = ctx.budget();
    let modules: Vec<Module> = match ctx.opts.module {
        Some(m) => vec![m],
        None => vec![Module::Mcts, Module::Policy],
    };
    let module_tag = match ctx.opts.module {
        Some(m) => module_name(m),
        None => "both",
    };
    let mut sets: Vec<(String, bool, Vec<BehavioralCase>)> = Vec::new();
    for concept in ctx.concepts() {
        for connected in ctx.connected_flags() {
            let cases = read_cases(&ctx.layout.behavioral(&concept, connected), &ctx.hash)?;
            sets.push((concept.clone(), connected, cases));
        }
    }
    if ctx.opts.seed.is_none() || ctx.opts.seed == Some(cfg.seeds[0]) {
        let mut baselines = Vec::new();
        for (concept, connected, cases) in &sets {
            if polarity_of(concept) != Some(Polarity::Negative) {
                continue;
            }
            let results = cases
                .iter()
                .enumerate()
                .map(|(i, c)| run_negative(c, &mut RandomAgent::new(cfg.dataset_seed, i as u64), 0, "random"))
                .collect::<Result<Vec<_>, _>>()
                .map_err(CliError::invariant)?;
            baselines.push(NegativeBaseline { concept: concept.clone(), connected: *connected, random_pass_rate: pass_rate(&results) });
        }
        if !baselines.is_empty() {
            let scope = ctx.opts.concept.as_deref().unwrap_or("all");
            let path = ctx.layout.metrics_dir().join(format!("negative-baseline-{scope}.json"));
            write_with_meta(&path, &serde_json::to_vec_pretty(&baselines).expect("serialises"), &ctx.hash, None, "behave")?;
        }
    }
    let last = cfg.final_checkpoint();
    for seed in ctx.seeds() {
        let mut files: BTreeMap<(String, bool), Vec<MetricRow>> = BTreeMap::new();
        let mut wasted_rows = Vec::new();
        for k in ctx.checkpoints() {
            let ckpt = load_checkpoint(&ctx.layout, seed, k, &ctx.hash)?;
            let started = std::time::Instant::now();
            let mut transcripts: BTreeMap<bool, Vec<BehavioralResult>> = BTreeMap::new();
            for (concept, connected, cases) in &sets {
                let horizon = connected_tag(*connected);
                let rows = files.entry((concept.clone(), *connected)).or_default();
                let negative = polarity_of(concept) == Some(Polarity::Negative);
                if negative {
                    let m = modules[0];
                    let results = cases
                        .par_iter()
                        .map(|c| run_negative(c, &mut NetAgent::new(&ckpt.net, m, budget), k, module_name(m)))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(CliError::invariant)?;
                    rows.push(row(k, concept, horizon, None, Metric::PassNegative, pass_rate(&results), seed));
                    transcripts.entry(*connected).or_default().extend(results);
                    continue;
                }
                let mut per_module: Vec<Vec<BehavioralResult>> = Vec::new();
                for &m in &modules {
                    let results = cases
                        .par_iter()
                        .map_init(
                            || Solver::new(size),
                            |solver, c| run_positive(c, &mut NetAgent::new(&ckpt.net, m, budget), solver, k, module_name(m)),
                        )
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(CliError::invariant)?;
                    let metric = if m == Module::Mcts { Metric::PassMcts } else { Metric::PassPolicy };
                    rows.push(row(k, concept, horizon, None, metric, pass_rate(&results), seed));
                    per_module.push(results);
                }
                let z = zscore_rate(cases, &mut NetAgent::new(&ckpt.net, Module::Policy, 1)).map_err(CliError::invariant)?;
                rows.push(row(k, concept, horizon, None, Metric::ZscoreRate, z, seed));
                if k == last && per_module.len() == 2 {
                    recertify_failures(cases, &per_module, size)?;
                }
                for results in per_module {
                    transcripts.entry(*connected).or_default().extend(results);
                }
            }
            if modules.contains(&Module::Mcts) && ctx.opts.concept.is_none() && (k == 0 || k == last) {
                let positions = near_won_boards(size, cfg.wasted.positions, cfg.wasted.max_depth, cfg.dataset_seed)
                    .map_err(CliError::invariant)?;
                let rate = wasted_move_rate(&positions, &mut NetAgent::new(&ckpt.net, Module::Mcts, budget), &mut Solver::new(size))
                    .map_err(CliError::invariant)?;
                wasted_rows.push(row(k, "endgame", "", None, Metric::WastedRate, rate, seed));
            }
            let keep = match cfg.behavioral.transcripts {
                crate::config::Transcripts::None => false,
                crate::config::Transcripts::Ends => k == 0 || k == last,
                crate::config::Transcripts::All => true,
            };
            if keep && ctx.opts.concept.is_none() {
                for (connected, results) in &transcripts {
                    let path = ctx.layout.transcripts(seed, k, *connected);
                    write_with_meta(&path, &to_jsonl(results).map_err(CliError::other)?, &ctx.hash, Some(seed), "behave")?;
                }
            }
            log(format!("seed {seed}: behavioural tests at checkpoint {k} ({:.0}s)", started.elapsed().as_secs_f64()));
        }
        for ((concept, connected), rows) in files {
            ctx.write_rows(&format!("behave-{concept}-{}-{module_tag}", connected_tag(connected)), seed, &rows, "behave")?;
        }
        if !wasted_rows.is_empty() {
            ctx.write_rows("wasted", seed, &wasted_rows, "behave")?;
        }
    }
    Ok(())
}

/// A case that every module failed must still be a certified forced win.
fn recertify_failures(cases: &[BehavioralCase], per_module: &[Vec<BehavioralResult>], size: usize) -> Result<(), CliError> {
    let mut solver = Solver::new(size);
    for (i, case) in cases.iter().enumerate() {
        if per_module.iter().all(|r| !r[i].passed) {
            let ok = verify_case(&mut solver, case).map_err(CliError::invariant)?;
            if !ok {
                return Err(CliError::Invariant(format!("case {} failed by every module is not a certified win", case.id)));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neighbours {
    pub checkpoint: usize,
    pub k: usize,
    /// `nearest[i]` lists the `k` best-ranked cells for cell index `i`.
    pub nearest: Vec<Vec<hexlab_core::Coord>>,
    pub ndcg: f64,
}

pub fn structure(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    for seed in ctx.seeds() {
        let mut rows = Vec::new();
        let mut tables = Vec::new();
        for k in ctx.checkpoints() {
            let ckpt = load_checkpoint(&ctx.layout, seed, k, &ctx.hash)?;
            let s = structure_scores(
                &ckpt.cell_embeddings(),
                cfg.board_size,
                cfg.structure.k,
                cfg.structure.tie_draws,
                derive_seed(cfg.dataset_seed, "structure", seed),
            );
            rows.push(row(k, "structure", "", Some(1), Metric::Ndcg, s.ndcg, seed));
            if k == 0 || k == cfg.final_checkpoint() {
                tables.push(Neighbours { checkpoint: k, k: cfg.structure.k, nearest: s.nearest, ndcg: s.ndcg });
            }
        }
        ctx.write_rows("structure", seed, &rows, "structure")?;
        let path = ctx.layout.metrics_dir().join(format!("neighbours-seed{seed}.json"));
        write_with_meta(&path, &serde_json::to_vec_pretty(&tables).expect("serialises"), &ctx.hash, Some(seed), "structure")?;
        log(format!("seed {seed}: structural probe done"));
    }
    Ok(())
}
