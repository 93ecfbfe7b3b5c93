use super::{IoError, ParseError};
use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Column names for the mutant label and the experimental score.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssayColumns {
    pub mutant: String,
    pub score: String,
}

impl Default for AssayColumns {
    fn default() -> Self {
        Self {
            mutant: "mutant".into(),
            score: "DMS_score".into(),
        }
    }
}

/// Experimental scores of one assay.
#[derive(Debug, Clone, PartialEq)]
pub struct AssayTable {
    pub entries: Vec<(String, f64)>,
    pub protein_key: String,
    pub assay_id: String,
}

impl AssayTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Protein identifier prefix of an assay id: the first two `_`-separated
/// fields (`A0A140D2T1_ZIKV_Sourisseau_2019` -> `A0A140D2T1_ZIKV`).
pub fn default_protein_key(assay_id: &str) -> String {
    assay_id.splitn(3, '_').take(2).collect::<Vec<_>>().join("_")
}

fn read_pairs(text: &str, label_col: &str, value_col: &str) -> Result<Vec<(String, f64)>, ParseError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| ParseError::Csv(e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ParseError::MissingColumn(name.to_string()))
    };
    let li = find(label_col)?;
    let vi = find(value_col)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| ParseError::BadRow {
            row,
            reason: e.to_string(),
        })?;
        let label = rec.get(li).unwrap_or("").to_string();
        let raw = rec.get(vi).unwrap_or("");
        let value: f64 = raw.parse().map_err(|_| ParseError::BadRow {
            row,
            reason: format!("unparsable {value_col} '{raw}'"),
        })?;
        if !value.is_finite() {
            return Err(ParseError::BadRow {
                row,
                reason: format!("non-finite {value_col} '{raw}'"),
            });
        }
        if !seen.insert(label.clone()) {
            return Err(ParseError::DuplicateLabel { label, row });
        }
        out.push((label, value));
    }
    Ok(out)
}

pub fn parse_assay_csv(
    text: &str,
    assay_id: &str,
    protein_key: &str,
    columns: &AssayColumns,
) -> Result<AssayTable, ParseError> {
    Ok(AssayTable {
        entries: read_pairs(text, &columns.mutant, &columns.score)?,
        protein_key: protein_key.to_string(),
        assay_id: assay_id.to_string(),
    })
}

/// Reads an assay CSV; the assay id is the file stem and the protein key
/// its default prefix.
pub fn read_assay_csv(path: &Path, columns: &AssayColumns) -> Result<AssayTable, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let assay_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let key = default_protein_key(&assay_id);
    parse_assay_csv(&text, &assay_id, &key, columns).map_err(|e| IoError::parse(path, e))
}

/// Reads a `mutant,fitness` prediction file.
pub fn read_scores_csv(path: &Path) -> Result<Vec<(String, f64)>, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    read_pairs(&text, "mutant", "fitness").map_err(|e| IoError::parse(path, e))
}

/// Labels from one column of a CSV, in file order.
pub fn read_mutant_labels(path: &Path, column: &str) -> Result<Vec<String>, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    parse_mutant_labels(&text, column).map_err(|e| IoError::parse(path, e))
}

fn parse_mutant_labels(text: &str, column: &str) -> Result<Vec<String>, ParseError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let idx = reader
        .headers()
        .map_err(|e| ParseError::Csv(e.to_string()))?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| ParseError::MissingColumn(column.to_string()))?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| ParseError::BadRow {
            row,
            reason: e.to_string(),
        })?;
        let label = rec.get(idx).unwrap_or("").to_string();
        if !seen.insert(label.clone()) {
            return Err(ParseError::DuplicateLabel { label, row });
        }
        out.push(label);
    }
    Ok(out)
}

/// Writes `mutant,fitness` rows with shortest round-trip float formatting.
pub fn write_scores_csv(path: &Path, rows: &[(String, f64)]) -> Result<(), IoError> {
    let mut buf = String::from("mutant,fitness\n");
    for (label, value) in rows {
        if label.contains(',') || label.contains('"') {
            buf.push('"');
            buf.push_str(&label.replace('"', "\"\""));
            buf.push('"');
        } else {
            buf.push_str(label);
        }
        buf.push(',');
        buf.push_str(&value.to_string());
        buf.push('\n');
    }
    write_atomic(path, buf.as_bytes())
}

/// Writes to a sibling temporary file and renames it into place, so a
/// failed write never leaves a partial file at `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(IoError::io(path, e));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mutant_labels_keep_order() {
        let text = "mutant,DMS_score\nA2C,1\nM1K:A2C,0.5\n";
        assert_eq!(parse_mutant_labels(text, "mutant").unwrap(), vec!["A2C", "M1K:A2C"]);
        assert!(matches!(
            parse_mutant_labels(text, "variant"),
            Err(ParseError::MissingColumn(_))
        ));
        assert!(matches!(
            parse_mutant_labels("mutant\nA2C\nA2C\n", "mutant"),
            Err(ParseError::DuplicateLabel { row: 2, .. })
        ));
    }

    #[test]
    fn one_entry() {
        let t = parse_assay_csv("mutant,DMS_score\nA1C,0.5\n", "x", "x", &AssayColumns::default()).unwrap();
        assert_eq!(t.entries, vec![("A1C".to_string(), 0.5)]);
    }

    #[test]
    fn missing_mutant_column() {
        let err = parse_assay_csv("variant,DMS_score\nA1C,0.5\n", "x", "x", &AssayColumns::default()).unwrap_err();
        assert_eq!(err, ParseError::MissingColumn("mutant".into()));
        assert!(err.to_string().contains("mutant"));
    }

    #[test]
    fn nan_score_row_one() {
        let err = parse_assay_csv("mutant,DMS_score\nA1C,NaN\n", "x", "x", &AssayColumns::default()).unwrap_err();
        assert!(matches!(err, ParseError::BadRow { row: 1, .. }));
    }

    #[test]
    fn unparsable_and_duplicate() {
        let cols = AssayColumns::default();
        assert!(matches!(
            parse_assay_csv("mutant,DMS_score\nA1C,1\nA1D,abc\n", "x", "x", &cols).unwrap_err(),
            ParseError::BadRow { row: 2, .. }
        ));
        assert!(matches!(
            parse_assay_csv("mutant,DMS_score\nA1C,1\nA1C,2\n", "x", "x", &cols).unwrap_err(),
            ParseError::DuplicateLabel { row: 2, .. }
        ));
    }

    #[test]
    fn custom_columns_and_extra_fields() {
        let cols = AssayColumns {
            mutant: "mut".into(),
            score: "y".into(),
        };
        let t = parse_assay_csv("id,mut,y\n1,A1C,-2.5\n", "x", "x", &cols).unwrap();
        assert_eq!(t.entries[0].1, -2.5);
    }

    #[test]
    fn protein_key_prefix() {
        assert_eq!(
            default_protein_key("A0A140D2T1_ZIKV_Sourisseau_2019"),
            "A0A140D2T1_ZIKV"
        );
        assert_eq!(default_protein_key("single"), "single");
    }

    #[test]
    fn scores_round_trip_full_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let rows = vec![("A1C".to_string(), 0.1 + 0.2), ("A1C:D2E".to_string(), -1.0 / 3.0)];
        write_scores_csv(&path, &rows).unwrap();
        let back = read_scores_csv(&path).unwrap();
        assert_eq!(back, rows);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("mutant,fitness\n"));
    }

    #[test]
    fn read_assay_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("P12345_HUMAN_Doe_2020.csv");
        std::fs::write(&path, "mutant,DMS_score\r\nA1C,0.5\r\n").unwrap();
        let t = read_assay_csv(&path, &AssayColumns::default()).unwrap();
        assert_eq!(t.assay_id, "P12345_HUMAN_Doe_2020");
        assert_eq!(t.protein_key, "P12345_HUMAN");
    }
}
