use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{StsError, TestName, TestResult};

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkResult {
    pub chunk_id: String,
    pub tool: String,
    pub results: Vec<TestResult>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToolPassRate {
    pub chunks: usize,
    pub passes: usize,
    pub rate: f64,
}

/// Fraction of (chunk, test) pairs that passed, over 15 tests per chunk.
pub fn aggregate_pass_rate(group: &str, chunks: &[&[TestResult]]) -> Result<ToolPassRate, StsError> {
    if chunks.is_empty() {
        return Err(StsError::EmptyGroup(group.to_string()));
    }
    let passes = chunks
        .iter()
        .map(|r| r.iter().filter(|t| t.passed()).count())
        .sum::<usize>();
    Ok(ToolPassRate {
        chunks: chunks.len(),
        passes,
        rate: passes as f64 / (TestName::ALL.len() * chunks.len()) as f64,
    })
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub(crate) fn provenance_line(provenance: &[(&str, String)]) -> String {
    let parts: Vec<String> = provenance.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("# {}\n", parts.join(" "))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StsReport {
    pub rows: Vec<ChunkResult>,
}

impl StsReport {
    pub fn new(rows: Vec<ChunkResult>) -> Self {
        StsReport { rows }
    }

    pub fn per_tool_pass_rate(&self) -> Result<BTreeMap<String, ToolPassRate>, StsError> {
        if self.rows.is_empty() {
            return Err(StsError::EmptyGroup("report".into()));
        }
        let mut groups: BTreeMap<&str, Vec<&[TestResult]>> = BTreeMap::new();
        for row in &self.rows {
            groups.entry(&row.tool).or_default().push(&row.results);
        }
        groups
            .into_iter()
            .map(|(tool, chunks)| Ok((tool.to_string(), aggregate_pass_rate(tool, &chunks)?)))
            .collect()
    }

    /// Pass rate of each test within each tool.
    pub fn per_test_pass_rate(&self) -> BTreeMap<(String, TestName), f64> {
        let mut tally: BTreeMap<(String, TestName), (usize, usize)> = BTreeMap::new();
        for row in &self.rows {
            for r in &row.results {
                let e = tally.entry((row.tool.clone(), r.test)).or_default();
                e.0 += usize::from(r.passed());
                e.1 += 1;
            }
        }
        tally.into_iter().map(|(k, (p, n))| (k, p as f64 / n as f64)).collect()
    }

    /// `chunk_id,tool,test_name,min_p,verdict`, one row per chunk and test.
    pub fn to_csv(&self, provenance: &[(&str, String)]) -> String {
        let mut out = provenance_line(provenance);
        out.push_str("chunk_id,tool,test_name,min_p,verdict\n");
        for row in &self.rows {
            for r in &row.results {
                writeln!(
                    out,
                    "{},{},{},{:.6},{}",
                    csv_field(&row.chunk_id),
                    csv_field(&row.tool),
                    r.test,
                    r.min_p(),
                    r.verdict
                )
                .expect("writing to a String cannot fail");
            }
        }
        out
    }

    /// Every p-value: `chunk_id,tool,test_name,index,p_value`.
    pub fn to_raw_csv(&self, provenance: &[(&str, String)]) -> String {
        let mut out = provenance_line(provenance);
        out.push_str("chunk_id,tool,test_name,index,p_value\n");
        for row in &self.rows {
            for r in &row.results {
                for (i, p) in r.p_values.iter().enumerate() {
                    writeln!(
                        out,
                        "{},{},{},{i},{p:.6}",
                        csv_field(&row.chunk_id),
                        csv_field(&row.tool),
                        r.test
                    )
                    .expect("writing to a String cannot fail");
                }
            }
        }
        out
    }

    /// `tool,chunks,pass_rate`.
    pub fn summary_csv(&self, provenance: &[(&str, String)]) -> Result<String, StsError> {
        let mut out = provenance_line(provenance);
        out.push_str("tool,chunks,pass_rate\n");
        for (tool, rate) in self.per_tool_pass_rate()? {
            writeln!(out, "{},{},{:.6}", csv_field(&tool), rate.chunks, rate.rate)
                .expect("writing to a String cannot fail");
        }
        Ok(out)
    }

    pub fn write_csv(&self, path: &Path, provenance: &[(&str, String)]) -> std::io::Result<()> {
        fs::write(path, self.to_csv(provenance))
    }
}
