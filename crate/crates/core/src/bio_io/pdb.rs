use super::{lines, ParseError};
use crate::vocab::three_to_one;
use std::collections::BTreeMap;
use std::fmt;

/// Original PDB numbering of a residue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ResidueId {
    pub chain: char,
    pub seq: i32,
    pub icode: Option<char>,
}

impl fmt::Display for ResidueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.chain, self.seq)?;
        if let Some(c) = self.icode {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// CA trace of one chain, in residue order.
#[derive(Debug, Clone, PartialEq)]
pub struct BackboneCoords {
    pub ca: Vec<[f64; 3]>,
    pub residue_ids: Vec<ResidueId>,
    pub residue_names: Vec<String>,
}

impl BackboneCoords {
    /// Wraps bare coordinates, numbering residues 1..=L on chain 'A'.
    pub fn from_ca(ca: Vec<[f64; 3]>) -> Self {
        let residue_ids = (0..ca.len())
            .map(|i| ResidueId {
                chain: 'A',
                seq: i as i32 + 1,
                icode: None,
            })
            .collect();
        let residue_names = vec!["UNK".to_string(); ca.len()];
        Self {
            ca,
            residue_ids,
            residue_names,
        }
    }

    pub fn len(&self) -> usize {
        self.ca.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ca.is_empty()
    }

    /// One-letter sequence from residue names; unrecognized names give 'X'.
    pub fn sequence(&self) -> String {
        self.residue_names
            .iter()
            .map(|n| three_to_one(n).unwrap_or(b'X') as char)
            .collect()
    }
}

#[derive(Default)]
struct ResidueAtoms {
    name: String,
    ca: Option<[f64; 3]>,
}

fn field(line: &str, start: usize, end: usize) -> &str {
    let end = end.min(line.len());
    if start >= end {
        return "";
    }
    line.get(start..end).unwrap_or("")
}

/// Reads CA coordinates from ATOM records of one chain (the first chain in
/// the file unless `chain` is given). Only the first MODEL is read; for
/// alternate locations the first occurrence wins.
pub fn parse_pdb_ca(text: &str, chain: Option<char>) -> Result<BackboneCoords, ParseError> {
    let mut selected = chain;
    let mut residues: BTreeMap<(i32, Option<char>), ResidueAtoms> = BTreeMap::new();

    for (i, line) in lines(text).enumerate() {
        if line.starts_with("ENDMDL") {
            break;
        }
        if !line.starts_with("ATOM  ") {
            continue;
        }
        let line_no = i + 1;
        let bad = |reason: &str| ParseError::MalformedAtom {
            line: line_no,
            reason: reason.to_string(),
        };
        if line.len() < 54 {
            return Err(bad("record shorter than 54 columns"));
        }
        let chain_id = line.as_bytes()[21] as char;
        match selected {
            None => selected = Some(chain_id),
            Some(c) if c != chain_id => continue,
            Some(_) => {}
        }
        let seq: i32 = field(line, 22, 26).trim().parse().map_err(|_| bad("residue number"))?;
        let icode = match line.as_bytes()[26] {
            b' ' => None,
            c => Some(c as char),
        };
        let atom_name = field(line, 12, 16).trim();
        let res_name = field(line, 17, 20).trim();
        let entry = residues.entry((seq, icode)).or_insert_with(|| ResidueAtoms {
            name: res_name.to_string(),
            ca: None,
        });
        if atom_name == "CA" && entry.ca.is_none() {
            let mut xyz = [0.0; 3];
            for (k, (s, e)) in [(30, 38), (38, 46), (46, 54)].into_iter().enumerate() {
                let v: f64 = field(line, s, e).trim().parse().map_err(|_| bad("coordinate"))?;
                if !v.is_finite() {
                    return Err(bad("non-finite coordinate"));
                }
                xyz[k] = v;
            }
            entry.ca = Some(xyz);
        }
    }

    let Some(chain_id) = selected.filter(|_| !residues.is_empty()) else {
        return Err(ParseError::NoResidues { chain });
    };
    let mut out = BackboneCoords {
        ca: Vec::with_capacity(residues.len()),
        residue_ids: Vec::with_capacity(residues.len()),
        residue_names: Vec::with_capacity(residues.len()),
    };
    for ((seq, icode), atoms) in residues {
        let id = ResidueId {
            chain: chain_id,
            seq,
            icode,
        };
        let ca = atoms.ca.ok_or_else(|| ParseError::MissingCa {
            residue: format!("{} {}", atoms.name, id),
        })?;
        out.ca.push(ca);
        out.residue_ids.push(id);
        out.residue_names.push(atoms.name);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(serial: usize, name: &str, res: &str, chain: char, seq: i32, xyz: [f64; 3]) -> String {
        format!(
            "ATOM  {:>5} {:<4} {:>3} {}{:>4}    {:>8.3}{:>8.3}{:>8.3}  1.00 20.00           C",
            serial, name, res, chain, seq, xyz[0], xyz[1], xyz[2]
        )
    }

    #[test]
    fn two_residues() {
        let text = [
            atom(1, "N", "ALA", 'A', 1, [-1.0, 0.0, 0.0]),
            atom(2, "CA", "ALA", 'A', 1, [0.0, 0.0, 0.0]),
            atom(3, "CA", "GLY", 'A', 2, [3.8, 0.0, 0.0]),
        ]
        .join("\n");
        let bb = parse_pdb_ca(&text, None).unwrap();
        assert_eq!(bb.ca, vec![[0.0, 0.0, 0.0], [3.8, 0.0, 0.0]]);
        assert_eq!(bb.sequence(), "AG");
        assert_eq!(bb.residue_ids[1].seq, 2);
    }

    #[test]
    fn only_hetatm() {
        let text = "HETATM    1  O   HOH A   1       0.000   0.000   0.000  1.00 20.00           O";
        let err = parse_pdb_ca(text, None).unwrap_err();
        assert!(err.to_string().contains("no residues"));
    }

    #[test]
    fn missing_ca_names_residue() {
        let text = [
            atom(1, "CA", "ALA", 'A', 1, [0.0, 0.0, 0.0]),
            atom(2, "N", "GLY", 'A', 7, [1.0, 0.0, 0.0]),
            atom(3, "C", "GLY", 'A', 7, [2.0, 0.0, 0.0]),
        ]
        .join("\n");
        let err = parse_pdb_ca(&text, None).unwrap_err();
        assert!(matches!(err, ParseError::MissingCa { .. }));
        assert!(err.to_string().contains("A:7"), "{err}");
    }

    #[test]
    fn chain_selection_and_order() {
        let text = [
            atom(1, "CA", "ALA", 'A', 2, [0.0, 0.0, 0.0]),
            atom(2, "CA", "ALA", 'A', 1, [1.0, 0.0, 0.0]),
            atom(3, "CA", "TRP", 'B', 1, [9.0, 9.0, 9.0]),
        ]
        .join("\n");
        let a = parse_pdb_ca(&text, None).unwrap();
        assert_eq!(a.ca, vec![[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        let b = parse_pdb_ca(&text, Some('B')).unwrap();
        assert_eq!(b.sequence(), "W");
        assert!(parse_pdb_ca(&text, Some('C')).is_err());
    }

    #[test]
    fn altloc_first_wins_and_first_model_only() {
        let mut alt = atom(2, "CA", "ALA", 'A', 1, [5.0, 0.0, 0.0]);
        alt.replace_range(16..17, "B");
        let text = [
            atom(1, "CA", "ALA", 'A', 1, [0.0, 0.0, 0.0]),
            alt,
            "ENDMDL".to_string(),
            atom(3, "CA", "ALA", 'A', 2, [3.8, 0.0, 0.0]),
        ]
        .join("\r\n");
        let bb = parse_pdb_ca(&text, None).unwrap();
        assert_eq!(bb.ca, vec![[0.0, 0.0, 0.0]]);
    }
}
