//! The frozen metric table shared by every analysis.
//!
//! Columns, in order: `checkpoint, concept, horizon, layer, metric, value,
//! seed`. `layer` is empty for metrics that are not per layer; `metric` is one
//! of the names in [`Metric`].

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub const COLUMNS: [&str; 7] = ["checkpoint", "concept", "horizon", "layer", "metric", "value", "seed"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Selectivity,
    ProbeAcc,
    ControlAcc,
    PassMcts,
    PassPolicy,
    ZscoreRate,
    PassNegative,
    Ndcg,
    FirstImprovement,
    BestLayer,
    WastedRate,
}

impl Metric {
    pub const ALL: [Metric; 11] = [
        Metric::Selectivity,
        Metric::ProbeAcc,
        Metric::ControlAcc,
        Metric::PassMcts,
        Metric::PassPolicy,
        Metric::ZscoreRate,
        Metric::PassNegative,
        Metric::Ndcg,
        Metric::FirstImprovement,
        Metric::BestLayer,
        Metric::WastedRate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Selectivity => "selectivity",
            Metric::ProbeAcc => "probe_acc",
            Metric::ControlAcc => "control_acc",
            Metric::PassMcts => "pass_mcts",
            Metric::PassPolicy => "pass_policy",
            Metric::ZscoreRate => "zscore_rate",
            Metric::PassNegative => "pass_negative",
            Metric::Ndcg => "ndcg",
            Metric::FirstImprovement => "first_improvement",
            Metric::BestLayer => "best_layer",
            Metric::WastedRate => "wasted_rate",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub checkpoint: usize,
    pub concept: String,
    pub horizon: String,
    pub layer: Option<usize>,
    pub metric: Metric,
    pub value: f64,
    pub seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("metric table header is {found:?}, expected {expected:?}")]
    Schema { found: Vec<String>, expected: Vec<String> },
}

pub fn write_rows<W: Write>(out: W, rows: &[MetricRow]) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in rows {
        w.serialize((r.checkpoint, &r.concept, &r.horizon, r.layer, r.metric, r.value, r.seed))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn to_csv(rows: &[MetricRow]) -> Result<Vec<u8>, MetricsError> {
    let mut buf = Vec::new();
    write_rows(&mut buf, rows)?;
    Ok(buf)
}

/// Reads a table, rejecting any header other than the frozen one and any
/// metric name outside the registry.
pub fn read_rows<R: Read>(input: R) -> Result<Vec<MetricRow>, MetricsError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != COLUMNS {
        return Err(MetricsError::Schema { found: header, expected: COLUMNS.iter().map(|s| s.to_string()).collect() });
    }
    Ok(r.deserialize().collect::<Result<Vec<MetricRow>, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(metric: Metric, layer: Option<usize>) -> MetricRow {
        MetricRow { checkpoint: 20, concept: "bridge".into(), horizon: "short".into(), layer, metric, value: 0.25, seed: 1 }
    }

    #[test]
    fn round_trip_with_empty_layer() {
        let rows = vec![row(Metric::Selectivity, Some(2)), row(Metric::PassMcts, None)];
        let bytes = to_csv(&rows).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert_eq!(
            text,
            "checkpoint,concept,horizon,layer,metric,value,seed\n20,bridge,short,2,selectivity,0.25,1\n20,bridge,short,,pass_mcts,0.25,1\n"
        );
        assert_eq!(read_rows(&bytes[..]).unwrap(), rows);
    }

    #[test]
    fn registry_names_match_serde() {
        for m in Metric::ALL {
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
        }
    }

    #[test]
    fn unknown_metric_or_header_is_rejected() {
        let bad = "checkpoint,concept,horizon,layer,metric,value,seed\n0,a,b,,elo,1,0\n";
        assert!(read_rows(bad.as_bytes()).is_err());
        let bad = "checkpoint,concept,layer,metric,value,seed\n";
        assert!(matches!(read_rows(bad.as_bytes()), Err(MetricsError::Schema { .. })));
    }
}
