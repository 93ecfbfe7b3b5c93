use super::RetrievalError;
use crate::bio_io::AlignmentMatrix;
use std::collections::HashSet;

/// Appends the homolog rows of `extra` to `primary`, skipping rows whose
/// tokens already appear. Rows of `primary` are kept as they are.
pub fn merge_alignments(primary: &AlignmentMatrix, extra: &AlignmentMatrix) -> Result<AlignmentMatrix, RetrievalError> {
    if primary.cols() != extra.cols() {
        return Err(RetrievalError::Incompatible(format!(
            "{} vs {} columns",
            primary.cols(),
            extra.cols()
        )));
    }
    if primary.query_row() != extra.query_row() {
        return Err(RetrievalError::Incompatible("query rows differ".into()));
    }
    let mut merged = primary.clone();
    let mut seen: HashSet<Vec<_>> = primary.iter_rows().map(<[_]>::to_vec).collect();
    for i in 1..extra.rows() {
        let row = extra.row(i);
        if seen.insert(row.to_vec()) {
            merged.push_row(extra.header(i), row.to_vec()).expect("widths checked");
        }
    }
    Ok(merged)
}
