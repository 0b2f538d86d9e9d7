//! Reading delimited files into datasets. Lines are read sequentially in
//! chunks; each chunk is parsed and encoded in parallel, keeping file order.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use elm_ctr::split::shuffled_order;
use elm_ctr::{
    hash_encode, parse_record, EmbeddedDataset, EmbeddingTable, FeatureSchema, RawRecord, Result,
    SparseDataset,
};
use elm_ctr::ElmError;
use rayon::prelude::*;

const CHUNK_LINES: usize = 16_384;

/// Calls `f` with successive chunks of `(line number, line)`, skipping the
/// header and blank lines.
fn for_each_chunk<F>(path: &Path, schema: &FeatureSchema, mut f: F) -> Result<()>
where
    F: FnMut(&[(usize, String)]) -> Result<()>,
{
    let file = File::open(path).map_err(|e| ElmError::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut chunk = Vec::with_capacity(CHUNK_LINES);
    let mut line_no = 0;
    loop {
        let mut line = String::new();
        let n = reader.read_line(&mut line).map_err(|e| ElmError::io(path, e))?;
        if n == 0 {
            break;
        }
        line_no += 1;
        if line_no == 1 && schema.has_header() {
            continue;
        }
        if line.trim_end_matches(['\n', '\r']).is_empty() {
            continue;
        }
        chunk.push((line_no, line));
        if chunk.len() == CHUNK_LINES {
            f(&chunk)?;
            chunk.clear();
        }
    }
    if !chunk.is_empty() {
        f(&chunk)?;
    }
    Ok(())
}

pub fn read_records(path: &Path, schema: &FeatureSchema) -> Result<Vec<RawRecord>> {
    let mut out = Vec::new();
    for_each_chunk(path, schema, |chunk| {
        let parsed: Vec<RawRecord> = chunk
            .par_iter()
            .map(|(no, line)| parse_record(line, *no, schema))
            .collect::<Result<_>>()?;
        out.extend(parsed);
        Ok(())
    })?;
    Ok(out)
}

pub fn load_hashed(
    path: &Path,
    schema: &FeatureSchema,
    hash_dims: usize,
    seed: u64,
    shuffle: Option<u64>,
) -> Result<SparseDataset> {
    let mut instances = Vec::new();
    for_each_chunk(path, schema, |chunk| {
        let encoded: Vec<_> = chunk
            .par_iter()
            .map(|(no, line)| parse_record(line, *no, schema).map(|r| hash_encode(&r, schema, hash_dims, seed)))
            .collect::<Result<_>>()?;
        instances.extend(encoded);
        Ok(())
    })?;
    if let Some(s) = shuffle {
        instances = permute(instances, s);
    }
    SparseDataset::new(hash_dims, instances)
}

pub fn load_embedded(
    path: &Path,
    schema: &FeatureSchema,
    table: EmbeddingTable,
    shuffle: Option<u64>,
) -> Result<EmbeddedDataset> {
    let mut records = read_records(path, schema)?;
    if let Some(s) = shuffle {
        records = permute(records, s);
    }
    EmbeddedDataset::from_records(table, &records)
}

pub fn permute<T>(items: Vec<T>, seed: u64) -> Vec<T> {
    let order = shuffled_order(items.len(), seed);
    let mut slots: Vec<Option<T>> = items.into_iter().map(Some).collect();
    order
        .into_iter()
        .map(|i| slots[i].take().expect("permutation visits each index once"))
        .collect()
}
