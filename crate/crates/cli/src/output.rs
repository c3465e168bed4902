use std::io::Write;

use polysample::WeightedSample;
use serde::Serialize;

use crate::Format;

/// Field names of one CSV sample row.
pub fn csv_header(n: usize, d: usize) -> String {
    let w = (1..=d).map(|k| format!("w_{k}"));
    let y = (1..=n).flat_map(|i| (1..=d).map(move |k| format!("y_{i}_{k}")));
    w.chain(y).chain(["weight".to_string()]).collect::<Vec<_>>().join(",")
}

#[derive(Serialize)]
struct SampleRecord<'a> {
    w: &'a [f64],
    y: Vec<&'a [f64]>,
    weight: f64,
}

pub fn write_sample(out: &mut impl Write, format: Format, s: &WeightedSample) -> std::io::Result<()> {
    match format {
        Format::Csv => {
            let mut first = true;
            for v in s.w.coords().iter().chain(s.y.as_slice()).chain([&s.weight]) {
                if !first {
                    out.write_all(b",")?;
                }
                first = false;
                // Display prints the shortest string that parses back to the same value
                write!(out, "{v}")?;
            }
            out.write_all(b"\n")
        }
        Format::Jsonl => {
            let record = SampleRecord {
                w: s.w.coords(),
                y: s.y.iter().collect(),
                weight: s.weight,
            };
            serde_json::to_writer(&mut *out, &record)?;
            out.write_all(b"\n")
        }
    }
}
