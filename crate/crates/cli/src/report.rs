//! Aggregates every metric table into per-figure tables and a summary of the
//! headline numbers.
//!
//! Figure tables keep the metric-row schema with one row per seed, so the
//! plotting side computes means and one-standard-deviation error bars itself.
//! `summary.json` carries those aggregates for the headline checks.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;

use hexlab_core::concepts::{polarity_of, templates_for, Anchor, Polarity};
use hexlab_core::metrics::{read_rows, to_csv, Metric, MetricRow};
use hexlab_core::probe::{convergence, first_improvement, mean_std};
use serde::{Deserialize, Serialize};

use crate::commands::{NegativeBaseline, PlayoffRecord};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::layout::{read_checked, read_meta, write_with_meta, Layout};

type Key = (usize, String, String, Option<usize>, Metric, u64);

fn key(r: &MetricRow) -> Key {
    (r.checkpoint, r.concept.clone(), r.horizon.clone(), r.layer, r.metric, r.seed)
}

/// Reads every metric CSV under `metrics/`, refusing files from another
/// config and conflicting duplicates.
pub fn collect_rows(layout: &Layout, hash: &str) -> Result<Vec<MetricRow>, CliError> {
    let dir = layout.metrics_dir();
    let mut files: Vec<_> = match fs::read_dir(&dir) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect(),
        Err(_) => Vec::new(),
    };
    files.sort();
    if files.is_empty() {
        return Err(CliError::MissingInput(format!("no metric tables in {}", dir.display())));
    }
    let mut rows: BTreeMap<Key, MetricRow> = BTreeMap::new();
    for f in &files {
        let meta = read_meta(f)?;
        if meta.config_hash != hash {
            return Err(CliError::Config(format!(
                "{} belongs to config {}, not {hash}; refusing to mix runs",
                f.display(),
                meta.config_hash
            )));
        }
        let bytes = read_checked(f, hash)?;
        let table = read_rows(&bytes[..]).map_err(|e| CliError::Config(format!("{}: {e}", f.display())))?;
        for r in table {
            match rows.get(&key(&r)) {
                Some(old) if old.value.to_bits() != r.value.to_bits() && !(old.value.is_nan() && r.value.is_nan()) => {
                    return Err(CliError::Invariant(format!("conflicting values for {:?}: {} vs {}", key(&r), old.value, r.value)));
                }
                Some(_) => {}
                None => {
                    rows.insert(key(&r), r);
                }
            }
        }
    }
    Ok(rows.into_values().collect())
}

/// Value of one metric over checkpoints for a (concept, horizon, layer, seed).
type Series = BTreeMap<usize, f64>;

struct Index<'a> {
    rows: &'a [MetricRow],
}

impl<'a> Index<'a> {
    fn select(&self, metric: Metric, concept: &str, horizon: &str) -> impl Iterator<Item = &'a MetricRow> + '_ {
        let (concept, horizon) = (concept.to_string(), horizon.to_string());
        self.rows.iter().filter(move |r| r.metric == metric && r.concept == concept && r.horizon == horizon)
    }

    fn get(&self, metric: Metric, concept: &str, horizon: &str, layer: Option<usize>, k: usize, seed: u64) -> Option<f64> {
        self.select(metric, concept, horizon)
            .find(|r| r.layer == layer && r.checkpoint == k && r.seed == seed)
            .map(|r| r.value)
    }

    fn series(&self, metric: Metric, concept: &str, horizon: &str, layer: Option<usize>, seed: u64) -> Series {
        self.select(metric, concept, horizon)
            .filter(|r| r.layer == layer && r.seed == seed)
            .map(|r| (r.checkpoint, r.value))
            .collect()
    }

    fn pairs(&self, metric: Metric) -> BTreeSet<(String, String)> {
        self.rows.iter().filter(|r| r.metric == metric).map(|r| (r.concept.clone(), r.horizon.clone())).collect()
    }

    fn seeds(&self) -> BTreeSet<u64> {
        self.rows.iter().map(|r| r.seed).collect()
    }
}

/// Selectivity at each checkpoint's best layer.
fn selectivity_at_best(ix: &Index, concept: &str, horizon: &str, k: usize, seed: u64) -> Option<(usize, f64)> {
    let best = ix.get(Metric::BestLayer, concept, horizon, None, k, seed)? as usize;
    Some((best, ix.get(Metric::Selectivity, concept, horizon, Some(best), k, seed)?))
}

/// Highest probe accuracy over layers, per checkpoint.
fn best_accuracy_series(ix: &Index, concept: &str, horizon: &str, seed: u64) -> Series {
    let mut s = Series::new();
    for r in ix.select(Metric::ProbeAcc, concept, horizon).filter(|r| r.seed == seed) {
        let e = s.entry(r.checkpoint).or_insert(f64::NEG_INFINITY);
        *e = e.max(r.value);
    }
    s
}

fn dense(s: &Series) -> Vec<f64> {
    s.values().copied().collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub per_seed: Vec<f64>,
}

impl Stat {
    fn of(values: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&values);
        Self { mean, std, per_seed: values }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub concept: String,
    pub kind: String,
    /// Mean first-improvement checkpoint over the seeds where one exists.
    pub first_improvement: Stat,
    pub never_improved: usize,
    pub convergence: Stat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftCheck {
    pub holds: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub final_checkpoint: usize,
    pub playoff_wins_as_black: Option<Stat>,
    pub bridge_pass_mcts_start: Option<Stat>,
    pub bridge_pass_mcts_final: Option<Stat>,
    pub bridge_short_selectivity_final: Option<Stat>,
    pub ndcg_gain: Option<Stat>,
    pub wasted_rate: BTreeMap<usize, Stat>,
    /// Final positive pass rates (MCTS, connected defender) and final negative
    /// pass rates, averaged over seeds.
    pub final_pass: BTreeMap<String, Stat>,
    pub negative_random_baseline: Vec<NegativeBaseline>,
    pub best_positive_final: Option<f64>,
    pub best_negative_final: Option<f64>,
    pub negative_gap_holds: Option<bool>,
    pub early_mcts_over_policy: Option<SoftCheck>,
    pub behaviour_before_probing: Option<SoftCheck>,
    pub timeline: Vec<TimelineEntry>,
}

fn internal_concepts(concepts: &BTreeSet<String>) -> Vec<String> {
    concepts
        .iter()
        .filter(|c| {
            let ts = templates_for(c);
            !ts.is_empty() && ts.iter().all(|t| t.polarity == Polarity::Positive && t.anchor == Anchor::Free)
        })
        .cloned()
        .collect()
}

/// Builds the six figure tables and the summary from collected rows.
pub fn build(rows: &[MetricRow], cfg: &RunConfig) -> (BTreeMap<&'static str, Vec<MetricRow>>, Summary) {
    let ix = Index { rows };
    let seeds: Vec<u64> = ix.seeds().into_iter().collect();
    let last = cfg.final_checkpoint();
    let rule = cfg.improvement;
    let probe_pairs = ix.pairs(Metric::BestLayer);

    let mut fig4a = Vec::new();
    let mut fig4b = Vec::new();
    for (c, h) in &probe_pairs {
        for &s in &seeds {
            for k in ix.series(Metric::BestLayer, c, h, None, s).keys() {
                if let Some((l, v)) = selectivity_at_best(&ix, c, h, *k, s) {
                    fig4a.push(MetricRow { checkpoint: *k, concept: c.clone(), horizon: h.clone(), layer: Some(l), metric: Metric::Selectivity, value: v, seed: s });
                }
            }
        }
        fig4b.extend(ix.select(Metric::BestLayer, c, h).filter(|r| r.checkpoint == last).cloned());
    }
    let fig5a: Vec<MetricRow> = rows.iter().filter(|r| matches!(r.metric, Metric::PassMcts | Metric::PassPolicy)).cloned().collect();
    let fig5b: Vec<MetricRow> = rows
        .iter()
        .filter(|r| matches!(r.metric, Metric::ZscoreRate | Metric::PassNegative | Metric::PassMcts))
        .cloned()
        .collect();
    let fig6: Vec<MetricRow> = rows.iter().filter(|r| r.metric == Metric::Ndcg).cloned().collect();

    // Timeline series: best-layer probe accuracy averaged over horizons,
    // behavioural pass rate against a connected defender, and NDCG.
    let concepts: BTreeSet<String> = rows.iter().filter(|r| r.concept != "structure" && r.concept != "endgame").map(|r| r.concept.clone()).collect();
    let mut fig7 = Vec::new();
    let mut timeline = Vec::new();
    let mut push_timeline = |concept: &str, kind: &str, per_seed: Vec<(u64, Vec<f64>)>, fig7: &mut Vec<MetricRow>| {
        let mut firsts = Vec::new();
        let mut convs = Vec::new();
        let mut never = 0;
        for (s, series) in &per_seed {
            if series.is_empty() {
                continue;
            }
            let fi = first_improvement(series, rule);
            match fi {
                Some(t) => firsts.push(t as f64),
                None => never += 1,
            }
            convs.push(convergence(series, cfg.convergence_tol).unwrap_or(0) as f64);
            fig7.push(MetricRow {
                checkpoint: series.len() - 1,
                concept: concept.into(),
                horizon: kind.into(),
                layer: None,
                metric: Metric::FirstImprovement,
                value: fi.map_or(f64::NAN, |t| t as f64),
                seed: *s,
            });
        }
        timeline.push(TimelineEntry {
            concept: concept.into(),
            kind: kind.into(),
            first_improvement: Stat::of(firsts),
            never_improved: never,
            convergence: Stat::of(convs),
        });
    };
    for c in &concepts {
        let horizons: Vec<String> = probe_pairs.iter().filter(|(pc, _)| pc == c).map(|(_, h)| h.clone()).collect();
        if !horizons.is_empty() {
            let per_seed = seeds
                .iter()
                .map(|&s| {
                    let all: Vec<Series> = horizons.iter().map(|h| best_accuracy_series(&ix, c, h, s)).collect();
                    let ks: BTreeSet<usize> = all.iter().flat_map(|x| x.keys().copied()).collect();
                    let avg = ks
                        .iter()
                        .map(|k| {
                            let v: Vec<f64> = all.iter().filter_map(|x| x.get(k).copied()).collect();
                            v.iter().sum::<f64>() / v.len() as f64
                        })
                        .collect();
                    (s, avg)
                })
                .collect();
            push_timeline(c, "probing", per_seed, &mut fig7);
        }
        let metric = if polarity_of(c) == Some(Polarity::Negative) { Metric::PassNegative } else { Metric::PassMcts };
        let per_seed: Vec<(u64, Vec<f64>)> =
            seeds.iter().map(|&s| (s, dense(&ix.series(metric, c, "connected", None, s)))).collect();
        if per_seed.iter().any(|(_, v)| !v.is_empty()) {
            push_timeline(c, "behavioral", per_seed, &mut fig7);
        }
    }
    let ndcg_seeds: Vec<(u64, Vec<f64>)> =
        seeds.iter().map(|&s| (s, dense(&ix.series(Metric::Ndcg, "structure", "", Some(1), s)))).collect();
    if ndcg_seeds.iter().any(|(_, v)| !v.is_empty()) {
        push_timeline("structure", "structural", ndcg_seeds.clone(), &mut fig7);
    }

    let stat_at = |metric: Metric, c: &str, h: &str, layer: Option<usize>, k: usize| -> Option<Stat> {
        let v: Vec<f64> = seeds.iter().filter_map(|&s| ix.get(metric, c, h, layer, k, s)).collect();
        (!v.is_empty()).then(|| Stat::of(v))
    };
    let ndcg_gain = {
        let v: Vec<f64> = ndcg_seeds
            .iter()
            .filter(|(_, s)| s.len() > 1)
            .map(|(_, s)| s[s.len() - 1] - s[0])
            .collect();
        (!v.is_empty()).then(|| Stat::of(v))
    };
    let bridge_sel = {
        let v: Vec<f64> = seeds.iter().filter_map(|&s| selectivity_at_best(&ix, "bridge", "short", last, s).map(|x| x.1)).collect();
        (!v.is_empty()).then(|| Stat::of(v))
    };
    let mut wasted_rate = BTreeMap::new();
    for k in [0, last] {
        if let Some(st) = stat_at(Metric::WastedRate, "endgame", "", None, k) {
            wasted_rate.insert(k, st);
        }
    }

    let mut final_pass = BTreeMap::new();
    let (mut best_pos, mut best_neg): (Option<f64>, Option<f64>) = (None, None);
    for c in &concepts {
        let negative = polarity_of(c) == Some(Polarity::Negative);
        let metric = if negative { Metric::PassNegative } else { Metric::PassMcts };
        if let Some(st) = stat_at(metric, c, "connected", None, last) {
            let slot = if negative { &mut best_neg } else { &mut best_pos };
            *slot = Some(slot.map_or(st.mean, |b: f64| b.max(st.mean)));
            final_pass.insert(c.clone(), st);
        }
    }
    let negative_gap_holds = match (best_pos, best_neg) {
        (Some(p), Some(n)) => Some(n < p),
        _ => None,
    };

    // Early checkpoints: the first quarter of training, excluding the
    // untrained network.
    let early_end = (last / 4).max(1);
    let early_mcts_over_policy = {
        let mut diffs = Vec::new();
        for (c, h) in ix.pairs(Metric::PassPolicy) {
            for &s in &seeds {
                for k in 1..=early_end.min(last) {
                    if let (Some(m), Some(p)) = (
                        ix.get(Metric::PassMcts, &c, &h, None, k, s),
                        ix.get(Metric::PassPolicy, &c, &h, None, k, s),
                    ) {
                        diffs.push(m - p);
                    }
                }
            }
        }
        (!diffs.is_empty()).then(|| {
            let (m, sd) = mean_std(&diffs);
            SoftCheck {
                holds: m >= 0.0,
                detail: format!("mean pass(mcts) - pass(policy) over checkpoints 1..={early_end}: {m:.3} (std {sd:.3}, n {})", diffs.len()),
            }
        })
    };
    let internal = internal_concepts(&concepts);
    let behaviour_before_probing = {
        let mean_of = |kind: &str| -> Vec<f64> {
            timeline
                .iter()
                .filter(|t| t.kind == kind && internal.contains(&t.concept))
                .flat_map(|t| t.first_improvement.per_seed.clone())
                .collect()
        };
        let (b, p) = (mean_of("behavioral"), mean_of("probing"));
        (!b.is_empty() && !p.is_empty()).then(|| {
            let ((bm, bs), (pm, ps)) = (mean_std(&b), mean_std(&p));
            SoftCheck {
                holds: bm <= pm,
                detail: format!(
                    "internal concepts {internal:?}: behavioural first improvement {bm:.2} (std {bs:.2}) vs probing {pm:.2} (std {ps:.2})"
                ),
            }
        })
    };

    let summary = Summary {
        config_hash: cfg.hash(),
        seeds: seeds.clone(),
        final_checkpoint: last,
        playoff_wins_as_black: None,
        bridge_pass_mcts_start: stat_at(Metric::PassMcts, "bridge", "connected", None, 0),
        bridge_pass_mcts_final: stat_at(Metric::PassMcts, "bridge", "connected", None, last),
        bridge_short_selectivity_final: bridge_sel,
        ndcg_gain,
        wasted_rate,
        final_pass,
        negative_random_baseline: Vec::new(),
        best_positive_final: best_pos,
        best_negative_final: best_neg,
        negative_gap_holds,
        early_mcts_over_policy,
        behaviour_before_probing,
        timeline,
    };
    let tables = BTreeMap::from([
        ("fig4a", fig4a),
        ("fig4b", fig4b),
        ("fig5a", fig5a),
        ("fig5b", fig5b),
        ("fig6", fig6),
        ("fig7", fig7),
    ]);
    (tables, summary)
}

pub fn report(cfg: &RunConfig, layout: &Layout) -> Result<Summary, CliError> {
    let hash = cfg.hash();
    let rows = collect_rows(layout, &hash)?;
    let (tables, mut summary) = build(&rows, cfg);
    let wins: Vec<f64> = summary
        .seeds
        .iter()
        .filter_map(|&s| read_checked(&layout.seed_dir(s).join("playoff.json"), &hash).ok())
        .filter_map(|b| serde_json::from_slice::<PlayoffRecord>(&b).ok())
        .map(|p| p.wins_as_black as f64)
        .collect();
    if !wins.is_empty() {
        summary.playoff_wins_as_black = Some(Stat::of(wins));
    }
    if let Ok(rd) = fs::read_dir(layout.metrics_dir()) {
        let mut paths: Vec<_> = rd.filter_map(|e| e.ok().map(|e| e.path())).collect();
        paths.sort();
        for p in paths {
            let is_baseline = p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("negative-baseline-") && n.ends_with(".json") && !n.ends_with(".meta.json"));
            if is_baseline {
                let bytes = read_checked(&p, &hash)?;
                let mut b: Vec<NegativeBaseline> =
                    serde_json::from_slice(&bytes).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                b.retain(|x| !summary.negative_random_baseline.contains(x));
                summary.negative_random_baseline.extend(b);
            }
        }
    }
    let dir = layout.report_dir();
    for (name, rows) in &tables {
        if rows.is_empty() {
            return Err(CliError::MissingInput(format!("no rows for {name}; run the upstream analysis first")));
        }
        let path = dir.join(format!("{name}.csv"));
        write_with_meta(&path, &to_csv(rows).map_err(CliError::other)?, &hash, None, "report")?;
    }
    let path = dir.join("summary.json");
    write_with_meta(&path, &serde_json::to_vec_pretty(&summary).expect("serialises"), &hash, None, "report")?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(k: usize, c: &str, h: &str, layer: Option<usize>, metric: Metric, value: f64, seed: u64) -> MetricRow {
        MetricRow { checkpoint: k, concept: c.into(), horizon: h.into(), layer, metric, value, seed }
    }

    fn cfg() -> RunConfig {
        let mut c = RunConfig { checkpoints: 3, ..RunConfig::default() };
        c.training.iterations = 2;
        c
    }

    #[test]
    fn best_layer_selectivity_and_timeline() {
        let mut rows = Vec::new();
        for k in 0..3 {
            let best = if k == 0 { 0 } else { 1 };
            rows.push(r(k, "bridge", "short", None, Metric::BestLayer, best as f64, 0));
            for l in 0..2 {
                let acc = if l == best { 0.5 + 0.1 * k as f64 } else { 0.5 };
                rows.push(r(k, "bridge", "short", Some(l), Metric::ProbeAcc, acc, 0));
                rows.push(r(k, "bridge", "short", Some(l), Metric::Selectivity, acc - 0.5, 0));
            }
            rows.push(r(k, "bridge", "connected", None, Metric::PassMcts, [0.1, 0.9, 0.95][k], 0));
            rows.push(r(k, "bridge", "connected", None, Metric::PassPolicy, [0.1, 0.5, 0.9][k], 0));
            rows.push(r(k, "dead", "connected", None, Metric::PassNegative, 0.3, 0));
            rows.push(r(k, "structure", "", Some(1), Metric::Ndcg, 0.7 + 0.05 * k as f64, 0));
        }
        let (tables, s) = build(&rows, &cfg());
        let sel: Vec<f64> = tables["fig4a"].iter().map(|x| x.value).collect();
        assert_eq!(sel.len(), 3);
        assert!((sel[2] - 0.2).abs() < 1e-12);
        assert_eq!(tables["fig4b"].len(), 1);
        assert!((s.ndcg_gain.unwrap().mean - 0.1).abs() < 1e-12);
        assert_eq!(s.negative_gap_holds, Some(true));
        assert!(s.early_mcts_over_policy.unwrap().holds);
        let b = s.timeline.iter().find(|t| t.concept == "bridge" && t.kind == "behavioral").unwrap();
        assert_eq!(b.first_improvement.per_seed, vec![1.0]);
        let d = s.timeline.iter().find(|t| t.concept == "dead").unwrap();
        assert_eq!(d.never_improved, 1);
        assert!(tables["fig7"].iter().any(|x| x.concept == "dead" && x.value.is_nan()));
        let soft = s.behaviour_before_probing.unwrap();
        assert!(soft.holds, "{}", soft.detail);
    }

    #[test]
    fn empty_metrics_dir_is_missing_input() {
        let dir = tempfile::tempdir().unwrap();
        let layout = Layout::new(dir.path());
        let e = report(&cfg(), &layout).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(!layout.report_dir().exists());
    }

    #[test]
    fn mixed_hashes_and_conflicts_are_refused() {
        let dir = tempfile::tempdir().unwrap();
        let layout = Layout::new(dir.path());
        let c = cfg();
        let row = vec![r(0, "bridge", "connected", None, Metric::PassMcts, 0.5, 0)];
        write_with_meta(&layout.metrics("a", 0), &to_csv(&row).unwrap(), &c.hash(), Some(0), "behave").unwrap();
        write_with_meta(&layout.metrics("b", 0), &to_csv(&row).unwrap(), &c.hash(), Some(0), "behave").unwrap();
        assert_eq!(collect_rows(&layout, &c.hash()).unwrap().len(), 1);
        let other = vec![r(0, "bridge", "connected", None, Metric::PassMcts, 0.6, 0)];
        write_with_meta(&layout.metrics("c", 0), &to_csv(&other).unwrap(), &c.hash(), Some(0), "behave").unwrap();
        assert_eq!(collect_rows(&layout, &c.hash()).unwrap_err().exit_code(), 4);
        write_with_meta(&layout.metrics("c", 0), &to_csv(&row).unwrap(), "feedface", Some(0), "behave").unwrap();
        assert_eq!(collect_rows(&layout, &c.hash()).unwrap_err().exit_code(), 2);
    }
}
