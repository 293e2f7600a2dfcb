//! CSV formats. Floats are written in Rust's shortest round-trip form, so
//! reading a written file gives back the same 64-bit values.

use std::path::Path;

use crate::digrad::EpisodeRecord;
use crate::error::{Error, Result};
use crate::kinematics::JointVector;
use crate::smoothing::JointReport;

fn csv_err(path: &Path, reason: impl ToString) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

fn write_rows(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.iter().map(str::to_owned).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_owned).collect()))
        .collect::<std::result::Result<Vec<Vec<String>>, _>>()
        .map_err(|e| csv_err(path, e))?;
    Ok((header, rows))
}

fn parse(path: &Path, line: usize, field: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| csv_err(path, format!("row {line}: {field:?} is not a number")))
}

/// `t,q0,...,q{n-1}`, one row per step, `t` the step index.
pub fn write_trajectory(path: &Path, rows: &[JointVector]) -> Result<()> {
    let n = rows.first().map_or(0, JointVector::len);
    let header: Vec<String> = std::iter::once("t".to_string()).chain((0..n).map(|j| format!("q{j}"))).collect();
    write_rows(
        path,
        &header,
        rows.iter().enumerate().map(|(t, q)| {
            std::iter::once(t.to_string())
                .chain(q.iter().map(|v| v.to_string()))
                .collect()
        }),
    )
}

pub fn read_trajectory(path: &Path) -> Result<Vec<JointVector>> {
    let (header, rows) = read_rows(path)?;
    let n = header.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once("t".to_string()).chain((0..n).map(|j| format!("q{j}"))).collect();
    if n == 0 || header != expected {
        return Err(csv_err(path, "header must be t,q0,...,q{n-1}"));
    }
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != n + 1 {
                return Err(csv_err(path, format!("row {} has {} fields, expected {}", i + 1, row.len(), n + 1)));
            }
            Ok(JointVector(
                row[1..].iter().map(|f| parse(path, i + 1, f)).collect::<Result<_>>()?,
            ))
        })
        .collect()
}

/// `t,h{c}x,h{c}y,h{c}z` for every chain `c`.
pub fn write_hand_paths(path: &Path, hands: &[Vec<[f64; 3]>]) -> Result<()> {
    let chains = hands.first().map_or(0, Vec::len);
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((0..chains).flat_map(|c| ["x", "y", "z"].map(|a| format!("h{c}{a}"))))
        .collect();
    write_rows(
        path,
        &header,
        hands.iter().enumerate().map(|(t, hs)| {
            std::iter::once(t.to_string())
                .chain(hs.iter().flatten().map(|v| v.to_string()))
                .collect()
        }),
    )
}

/// `episode,error1,...,error{k},score`.
pub fn write_scores(path: &Path, log: &[EpisodeRecord], tasks: usize) -> Result<()> {
    let header: Vec<String> = std::iter::once("episode".to_string())
        .chain((1..=tasks).map(|i| format!("error{i}")))
        .chain(std::iter::once("score".to_string()))
        .collect();
    write_rows(
        path,
        &header,
        log.iter().map(|r| {
            std::iter::once(r.episode.to_string())
                .chain(r.errors.iter().map(|e| e.to_string()))
                .chain(std::iter::once(r.score.to_string()))
                .collect()
        }),
    )
}

/// Episode index, per-task errors and score of every row.
pub fn read_scores(path: &Path) -> Result<Vec<(usize, Vec<f64>, f64)>> {
    let (header, rows) = read_rows(path)?;
    if header.len() < 2 || header[0] != "episode" || header.last().map(String::as_str) != Some("score") {
        return Err(csv_err(path, "header must be episode,error1,...,score"));
    }
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != header.len() {
                return Err(csv_err(path, format!("row {} has {} fields", i + 1, row.len())));
            }
            let episode = row[0]
                .parse()
                .map_err(|_| csv_err(path, format!("row {}: bad episode index", i + 1)))?;
            let vals = row[1..].iter().map(|f| parse(path, i + 1, f)).collect::<Result<Vec<_>>>()?;
            let (errors, score) = vals.split_at(vals.len() - 1);
            Ok((episode, errors.to_vec(), score[0]))
        })
        .collect()
}

/// `joint,p_opt,evaluations,roughness_before,roughness_after`.
const REPORT_HEADER: [&str; 6] = ["joint", "p_opt", "evaluations", "roughness_before", "roughness_after", "smoothed"];

pub fn write_smoothing_report(path: &Path, reports: &[JointReport]) -> Result<()> {
    let header = REPORT_HEADER.map(String::from);
    write_rows(
        path,
        &header,
        reports.iter().map(|r| {
            vec![
                r.joint.to_string(),
                r.p_opt.to_string(),
                r.evaluations.to_string(),
                r.roughness_before.to_string(),
                r.roughness_after.to_string(),
                r.smoothed.to_string(),
            ]
        }),
    )
}

pub fn read_smoothing_report(path: &Path) -> Result<Vec<JointReport>> {
    let (header, rows) = read_rows(path)?;
    if header != REPORT_HEADER {
        return Err(csv_err(path, "unexpected smoothing report header"));
    }
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let int = |f: &str| {
                f.parse::<usize>()
                    .map_err(|_| csv_err(path, format!("row {}: {f:?} is not an integer", i + 1)))
            };
            if row.len() != REPORT_HEADER.len() {
                return Err(csv_err(path, format!("row {} has {} fields", i + 1, row.len())));
            }
            Ok(JointReport {
                joint: int(&row[0])?,
                p_opt: parse(path, i + 1, &row[1])?,
                evaluations: int(&row[2])?,
                roughness_before: parse(path, i + 1, &row[3])?,
                roughness_after: parse(path, i + 1, &row[4])?,
                smoothed: row[5]
                    .parse()
                    .map_err(|_| csv_err(path, format!("row {}: {:?} is not true or false", i + 1, row[5])))?,
            })
        })
        .collect()
}
