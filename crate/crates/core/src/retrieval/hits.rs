use super::RetrievalError;
use crate::bio_io::{AlignmentMatrix, ResidueSequence};
use crate::vocab::{Token, Vocabulary};
use serde::Deserialize;

/// One aligned target from a structure search.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldseekHit {
    pub target_id: String,
    pub database: String,
    pub probability: f64,
    pub e_value: f64,
    pub query_aln: String,
    pub target_aln: String,
    /// 1-based, inclusive query coverage.
    pub q_start: usize,
    pub q_end: usize,
}

#[derive(Deserialize)]
struct RawResponse {
    results: Vec<RawDatabase>,
}

#[derive(Deserialize)]
struct RawDatabase {
    #[serde(default)]
    db: Option<String>,
    #[serde(default)]
    alignments: Option<RawAlignments>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawAlignments {
    Nested(Vec<Vec<RawHit>>),
    Flat(Vec<RawHit>),
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawHit {
    target: String,
    prob: f64,
    eval: f64,
    q_aln: String,
    db_aln: String,
    q_start_pos: usize,
    q_end_pos: usize,
}

/// Parses a result document into hits, in database then rank order.
pub fn parse_foldseek_json(text: &str) -> Result<Vec<FoldseekHit>, RetrievalError> {
    let raw: RawResponse = serde_json::from_str(text).map_err(|e| RetrievalError::MalformedJson(e.to_string()))?;
    let mut hits = Vec::new();
    for db in raw.results {
        let name = db.db.unwrap_or_default();
        let raw_hits = match db.alignments {
            None => Vec::new(),
            Some(RawAlignments::Flat(v)) => v,
            Some(RawAlignments::Nested(v)) => v.into_iter().flatten().collect(),
        };
        for h in raw_hits {
            if h.q_aln.chars().count() != h.db_aln.chars().count() {
                return Err(RetrievalError::MalformedJson(format!(
                    "hit '{}' has aligned strings of different lengths",
                    h.target
                )));
            }
            if h.q_start_pos == 0 || h.q_start_pos > h.q_end_pos {
                return Err(RetrievalError::MalformedJson(format!(
                    "hit '{}' has query range {}..{}",
                    h.target, h.q_start_pos, h.q_end_pos
                )));
            }
            hits.push(FoldseekHit {
                target_id: h.target,
                database: name.clone(),
                probability: h.prob,
                e_value: h.eval,
                query_aln: h.q_aln,
                target_aln: h.db_aln,
                q_start: h.q_start_pos,
                q_end: h.q_end_pos,
            });
        }
    }
    Ok(hits)
}

fn is_gap(c: u8) -> bool {
    c == b'-' || c == b'.'
}

fn hit_row(hit: &FoldseekHit, query: &ResidueSequence) -> Result<Vec<Token>, RetrievalError> {
    let fail = |reason: String| RetrievalError::Coverage {
        target_id: hit.target_id.clone(),
        reason,
    };
    let q = hit.query_aln.as_bytes();
    let t = hit.target_aln.as_bytes();
    if q.len() != t.len() {
        return Err(fail("aligned strings differ in length".into()));
    }
    let len = query.len();
    if hit.q_start == 0 || hit.q_start > hit.q_end || hit.q_end > len {
        return Err(fail(format!(
            "query range {}..{} outside 1..={len}",
            hit.q_start, hit.q_end
        )));
    }
    let expected = &query.tokens()[hit.q_start - 1..hit.q_end];
    let mut row = vec![Vocabulary::PAD; len];
    let mut k = 0;
    for (&qc, &tc) in q.iter().zip(t) {
        if is_gap(qc) {
            continue;
        }
        let found =
            Vocabulary::residue_letter(qc).ok_or_else(|| fail(format!("invalid query character '{}'", qc as char)))?;
        if k >= expected.len() || found != expected[k] {
            return Err(fail(format!(
                "degapped query alignment does not match query positions {}..{}",
                hit.q_start, hit.q_end
            )));
        }
        row[hit.q_start - 1 + k] = if is_gap(tc) {
            Vocabulary::PAD
        } else {
            Vocabulary::residue_letter(tc).ok_or_else(|| fail(format!("invalid target character '{}'", tc as char)))?
        };
        k += 1;
    }
    if k != expected.len() {
        return Err(fail(format!(
            "degapped query alignment covers {k} residues, range {}..{} has {}",
            hit.q_start,
            hit.q_end,
            expected.len()
        )));
    }
    Ok(row)
}

/// Projects hits onto the query frame: target characters under query gaps
/// are dropped, the rest placed from `q_start`, uncovered columns padded.
pub fn hits_to_alignment(hits: &[FoldseekHit], query: &ResidueSequence) -> Result<AlignmentMatrix, RetrievalError> {
    let mut matrix = AlignmentMatrix::from_query(query);
    for hit in hits {
        let row = hit_row(hit, query)?;
        matrix
            .push_row(hit.target_id.clone(), row)
            .expect("row built at query width");
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hit(id: &str, q: &str, t: &str, start: usize, end: usize) -> FoldseekHit {
        FoldseekHit {
            target_id: id.into(),
            database: "afdb50".into(),
            probability: 1.0,
            e_value: 1e-5,
            query_aln: q.into(),
            target_aln: t.into(),
            q_start: start,
            q_end: end,
        }
    }

    fn seq(s: &str) -> ResidueSequence {
        ResidueSequence::from_letters(s).unwrap()
    }

    fn tok(c: char) -> Token {
        Vocabulary::residue_letter(c as u8).unwrap()
    }

    #[test]
    fn gap_column_is_removed() {
        let m = hits_to_alignment(&[hit("t1", "C-D", "CGD", 2, 3)], &seq("ACDE")).unwrap();
        assert_eq!(m.rows(), 2);
        assert_eq!(m.row(1), &[Vocabulary::PAD, tok('C'), tok('D'), Vocabulary::PAD]);
        assert_eq!(m.header(1), "t1");
    }

    #[test]
    fn full_coverage_is_verbatim() {
        let m = hits_to_alignment(&[hit("t", "ACDE", "WY-K", 1, 4)], &seq("ACDE")).unwrap();
        assert_eq!(m.row(1), &[tok('W'), tok('Y'), Vocabulary::PAD, tok('K')]);
        assert_eq!(m.row(0), seq("ACDE").tokens());
    }

    #[test]
    fn mismatch_names_target() {
        let err = hits_to_alignment(&[hit("bad_target", "CE", "CE", 2, 3)], &seq("ACDE")).unwrap_err();
        assert!(err.to_string().contains("bad_target"), "{err}");
        let err = hits_to_alignment(&[hit("short", "C", "C", 2, 3)], &seq("ACDE")).unwrap_err();
        assert!(err.to_string().contains("short"));
        let err = hits_to_alignment(&[hit("oob", "DEF", "DEF", 3, 5)], &seq("ACDE")).unwrap_err();
        assert!(err.to_string().contains("oob"));
    }

    #[test]
    fn parses_nested_and_flat_layouts() {
        let nested = r#"{"results":[{"db":"afdb50","alignments":[[
            {"target":"AF-X","prob":0.99,"eval":1e-10,"qAln":"AC","dbAln":"AD","qStartPos":1,"qEndPos":2,"tSeq":"ignored"},
            {"target":"AF-Y","prob":0.5,"eval":0.1,"qAln":"D","dbAln":"E","qStartPos":3,"qEndPos":3}]]},
            {"db":"pdb100","alignments":null}]}"#;
        let hits = parse_foldseek_json(nested).unwrap();
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].target_id, "AF-X");
        assert_eq!(hits[0].database, "afdb50");
        assert_eq!((hits[1].q_start, hits[1].q_end), (3, 3));
        let flat = r#"{"results":[{"db":"cath50","alignments":[{"target":"c","prob":1,"eval":0,"qAln":"A","dbAln":"A","qStartPos":1,"qEndPos":1}]}]}"#;
        assert_eq!(parse_foldseek_json(flat).unwrap()[0].database, "cath50");
        assert!(parse_foldseek_json(r#"{"results":[]}"#).unwrap().is_empty());
    }

    #[test]
    fn rejects_malformed_json() {
        for bad in [
            "not json",
            r#"{"nothing":1}"#,
            r#"{"results":[{"alignments":[{"target":"x","prob":1,"eval":0,"qAln":"AC","dbAln":"A","qStartPos":1,"qEndPos":2}]}]}"#,
            r#"{"results":[{"alignments":[{"target":"x","prob":1,"eval":0,"qAln":"A","dbAln":"A","qStartPos":3,"qEndPos":2}]}]}"#,
        ] {
            assert!(
                matches!(parse_foldseek_json(bad), Err(RetrievalError::MalformedJson(_))),
                "{bad}"
            );
        }
    }

    proptest! {
        #[test]
        fn rows_have_query_width(
            query in "[ACDEFGHIKLMNPQRSTVWY]{1,30}",
            a in 0usize..30,
            b in 0usize..30,
            gaps in proptest::collection::vec(any::<bool>(), 0..30),
        ) {
            let len = query.len();
            let (lo, hi) = (a.min(b) % len, a.max(b) % len);
            let (lo, hi) = (lo.min(hi), lo.max(hi));
            let covered = &query[lo..=hi];
            // interleave target insertions under query gaps
            let mut q = String::new();
            let mut t = String::new();
            for (i, c) in covered.chars().enumerate() {
                if gaps.get(i).copied().unwrap_or(false) {
                    q.push('-');
                    t.push('W');
                }
                q.push(c);
                t.push(if i % 3 == 0 { '-' } else { 'A' });
            }
            let m = hits_to_alignment(&[hit("h", &q, &t, lo + 1, hi + 1)], &seq(&query)).unwrap();
            prop_assert_eq!(m.cols(), len);
            let q_seq = seq(&query);
            prop_assert_eq!(m.row(0), q_seq.tokens());
            for j in 0..len {
                let v = m.row(1)[j];
                if j < lo || j > hi || (j - lo) % 3 == 0 {
                    prop_assert_eq!(v, Vocabulary::PAD);
                } else {
                    prop_assert_eq!(v, tok('A'));
                }
            }
        }
    }
}
