//! Long-format CSV artifacts: one row per (run, iteration, task).
//!
//! Columns: `run_id,seed,method,iteration,env_steps,task,return_mean,
//! success_rate,q,gap,j_ref`. UTF-8, header row, `.` decimal separator.
//! Floats print in shortest round-trip form, so equal data always yields
//! byte-identical files.

use super::train::RunRecord;
use super::HarnessError;

pub const RUNS_CSV_HEADER: &str =
    "run_id,seed,method,iteration,env_steps,task,return_mean,success_rate,q,gap,j_ref";

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub run_id: String,
    pub seed: u64,
    pub method: String,
    pub iteration: usize,
    pub env_steps: u64,
    pub task: usize,
    pub return_mean: f64,
    pub success_rate: f64,
    pub q: f64,
    pub gap: f64,
    pub j_ref: f64,
}

/// Flattens one run's records into rows.
pub fn rows_from_run(run_id: &str, seed: u64, method: &str, records: &[RunRecord]) -> Vec<CsvRow> {
    let mut rows = Vec::with_capacity(records.len() * records.first().map_or(0, |r| r.per_task.len()));
    for record in records {
        for (task, t) in record.per_task.iter().enumerate() {
            rows.push(CsvRow {
                run_id: run_id.to_string(),
                seed,
                method: method.to_string(),
                iteration: record.iteration,
                env_steps: record.env_steps,
                task,
                return_mean: t.return_mean,
                success_rate: t.success_rate,
                q: t.q,
                gap: t.gap,
                j_ref: t.j_ref,
            });
        }
    }
    rows
}

pub fn write_runs_csv(rows: &[CsvRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(RUNS_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.run_id,
            r.seed,
            r.method,
            r.iteration,
            r.env_steps,
            r.task,
            r.return_mean,
            r.success_rate,
            r.q,
            r.gap,
            r.j_ref
        ));
    }
    out
}

pub fn parse_runs_csv(text: &str) -> Result<Vec<CsvRow>, HarnessError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| HarnessError::Io("empty CSV".into()))?;
    if header.trim() != RUNS_CSV_HEADER {
        return Err(HarnessError::Io(format!("unexpected CSV header: {header}")));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 {
            return Err(HarnessError::Io(format!(
                "line {}: expected 11 fields, found {}",
                lineno + 2,
                fields.len()
            )));
        }
        let parse_f = |s: &str, what: &str| {
            s.parse::<f64>()
                .map_err(|e| HarnessError::Io(format!("line {}: {what}: {e}", lineno + 2)))
        };
        let parse_u = |s: &str, what: &str| {
            s.parse::<u64>()
                .map_err(|e| HarnessError::Io(format!("line {}: {what}: {e}", lineno + 2)))
        };
        rows.push(CsvRow {
            run_id: fields[0].to_string(),
            seed: parse_u(fields[1], "seed")?,
            method: fields[2].to_string(),
            iteration: parse_u(fields[3], "iteration")? as usize,
            env_steps: parse_u(fields[4], "env_steps")?,
            task: parse_u(fields[5], "task")? as usize,
            return_mean: parse_f(fields[6], "return_mean")?,
            success_rate: parse_f(fields[7], "success_rate")?,
            q: parse_f(fields[8], "q")?,
            gap: parse_f(fields[9], "gap")?,
            j_ref: parse_f(fields[10], "j_ref")?,
        });
    }
    Ok(rows)
}
