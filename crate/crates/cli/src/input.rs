//! Reader for p-value files.
//!
//! The format is CSV with the header `block_id,hypothesis_id,p_value`.
//! Rows of a block need not be contiguous; blocks are numbered in order of
//! first appearance and hypotheses keep their file order within a block.

use std::io::Read;

use blockmt::PValueMatrix;

use crate::error::{CliError, CliResult};

pub const HEADER: [&str; 3] = ["block_id", "hypothesis_id", "p_value"];

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub block_id: String,
    pub hypothesis_id: String,
    pub p_value: f64,
}

/// Parsed input: the matrix plus the identifiers of each cell, both in
/// block-major order.
#[derive(Debug, Clone)]
pub struct PValueFile {
    pub matrix: PValueMatrix,
    pub hypotheses: Vec<Hypothesis>,
}

pub fn read_pvalues<R: Read>(reader: R) -> CliResult<PValueFile> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| CliError::input(format!("line 1: {e}")))?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(CliError::input("line 1: input is empty"));
    }
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(CliError::input(format!(
            "line 1: expected header `{}`, found `{}`",
            HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut block_order: Vec<String> = Vec::new();
    let mut blocks: Vec<Vec<Hypothesis>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::input(format!("line {line}: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(CliError::input(format!(
                "line {line}: expected 3 fields, found {}",
                record.len()
            )));
        }
        let p_value: f64 = record[2]
            .parse()
            .map_err(|_| CliError::input(format!("line {line}: invalid p-value {:?}", &record[2])))?;
        if !(0.0..=1.0).contains(&p_value) {
            return Err(CliError::input(format!(
                "line {line}: p-value {p_value} outside [0, 1]"
            )));
        }
        let h = Hypothesis {
            block_id: record[0].to_string(),
            hypothesis_id: record[1].to_string(),
            p_value,
        };
        match block_order.iter().position(|b| *b == h.block_id) {
            Some(i) => blocks[i].push(h),
            None => {
                block_order.push(h.block_id.clone());
                blocks.push(vec![h]);
            }
        }
    }
    if blocks.is_empty() {
        return Err(CliError::input("line 2: no data rows"));
    }

    let rows: Vec<Vec<f64>> = blocks
        .iter()
        .map(|b| b.iter().map(|h| h.p_value).collect())
        .collect();
    let matrix = PValueMatrix::from_rows(&rows).map_err(|e| CliError::input(e.to_string()))?;
    Ok(PValueFile {
        matrix,
        hypotheses: blocks.into_iter().flatten().collect(),
    })
}
