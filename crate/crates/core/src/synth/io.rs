//! JSON-lines datasets. Field order follows the struct definitions, so equal
//! datasets serialize to identical bytes.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn write_jsonl<T: Serialize, W: Write>(mut out: W, records: &[T]) -> Result<(), JsonlError> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn to_jsonl<T: Serialize>(records: &[T]) -> Result<Vec<u8>, JsonlError> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, records)?;
    Ok(buf)
}

/// Reads one record per non-blank line.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(input: R) -> Result<Vec<T>, JsonlError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| JsonlError::Parse { line: i + 1, source: e })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::Horizon;
    use crate::synth::{gen_probing_set, ProbingExample};

    #[test]
    fn probing_records_round_trip_with_fixed_field_order() {
        let set = gen_probing_set("bridge", Horizon::Short, 4, 5, 2).unwrap();
        let bytes = to_jsonl(&set).unwrap();
        let first = std::str::from_utf8(&bytes).unwrap().lines().next().unwrap();
        assert!(first.starts_with(r#"{"concept":"bridge","horizon":"short","label":"present","board":{"size":5,"black":"#));
        let back: Vec<ProbingExample> = read_jsonl(bytes.as_slice()).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn bad_line_reports_its_number() {
        let err = read_jsonl::<ProbingExample, _>("\n{}\n".as_bytes()).unwrap_err();
        assert!(matches!(err, JsonlError::Parse { line: 2, .. }));
    }
}
