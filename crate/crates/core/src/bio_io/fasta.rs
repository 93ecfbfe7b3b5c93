use super::{lines, ParseError, ResidueSequence};

/// One raw FASTA-style record; the body keeps every non-whitespace
/// character so alignment parsers can reuse it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FastaRecord {
    pub header: String,
    pub body: String,
}

pub fn parse_fasta_records(text: &str) -> Result<Vec<FastaRecord>, ParseError> {
    let mut records: Vec<FastaRecord> = Vec::new();
    for (i, line) in lines(text).enumerate() {
        if let Some(h) = line.strip_prefix('>') {
            if let Some(prev) = records.last() {
                if prev.body.is_empty() {
                    return Err(ParseError::EmptyRecord {
                        header: prev.header.clone(),
                    });
                }
            }
            records.push(FastaRecord {
                header: h.trim().to_string(),
                body: String::new(),
            });
            continue;
        }
        let chunk: String = line.split_whitespace().collect();
        if chunk.is_empty() || line.starts_with(';') {
            continue;
        }
        match records.last_mut() {
            Some(rec) => rec.body.push_str(&chunk),
            None => return Err(ParseError::MissingHeader { line: i + 1 }),
        }
    }
    match records.last() {
        None => Err(ParseError::EmptyInput),
        Some(last) if last.body.is_empty() => Err(ParseError::EmptyRecord {
            header: last.header.clone(),
        }),
        Some(_) => Ok(records),
    }
}

/// Parses FASTA text into tokenized sequences. Multi-line bodies are
/// concatenated; unknown letters become `<unk>`.
pub fn parse_fasta(text: &str) -> Result<Vec<(String, ResidueSequence)>, ParseError> {
    parse_fasta_records(text)?
        .into_iter()
        .map(|r| {
            let body = r.body.strip_suffix('*').unwrap_or(&r.body);
            let seq = ResidueSequence::from_letters(body)?;
            Ok((r.header, seq))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_record() {
        let recs = parse_fasta(">wt\nACD").unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].0, "wt");
        assert_eq!(recs[0].1.tokens(), &[0, 1, 2]);
    }

    #[test]
    fn multiline_body_and_crlf() {
        let recs = parse_fasta(">a\r\nAC\r\nD\r\n>b desc\nEE\n").unwrap();
        assert_eq!(recs[0].1.as_str(), "ACD");
        assert_eq!(recs[1].0, "b desc");
        assert_eq!(recs[1].1.as_str(), "EE");
    }

    #[test]
    fn missing_header() {
        assert_eq!(parse_fasta("ACD").unwrap_err(), ParseError::MissingHeader { line: 1 });
    }

    #[test]
    fn empty_record() {
        assert!(matches!(
            parse_fasta(">a\n>b\nAC").unwrap_err(),
            ParseError::EmptyRecord { .. }
        ));
        assert!(matches!(
            parse_fasta(">a\nAC\n>b\n").unwrap_err(),
            ParseError::EmptyRecord { .. }
        ));
        assert_eq!(parse_fasta("").unwrap_err(), ParseError::EmptyInput);
    }

    #[test]
    fn unknown_letter_is_unk() {
        let recs = parse_fasta(">x\nABZ").unwrap();
        assert_eq!(recs[0].1.tokens()[1], crate::vocab::Vocabulary::UNK);
    }
}
