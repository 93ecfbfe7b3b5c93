use crate::cli::NativeArgs;
use crate::error::{CliError, CliResult};
use mutscore::bio_io::{
    default_protein_key, parse_fasta, parse_mutant_spec, parse_pdb_ca, write_atomic, A2mOptions, AlignmentMatrix,
    MutantSpec, ResidueSequence,
};
use mutscore::evo::alignment_logits;
use mutscore::logits::{EvolutionaryLogits, LogitsMatrix, NativeLogits};
use mutscore::native_lm::{load_model, native_logits, InferenceMode};
use mutscore::retrieval::{hits_to_alignment, load_alignment, merge_alignments, parse_foldseek_json};
use mutscore::struct_tok::{load_codebook, tokenize_structure, FeaturizerConfig};
use serde::Deserialize;
use std::path::{Path, PathBuf};

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    Ok(write_atomic(path, text.as_bytes())?)
}

/// First record of a FASTA file.
pub fn read_wild_type(path: &Path) -> CliResult<ResidueSequence> {
    let records = parse_fasta(&read_text(path)?).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let (header, seq) = records.into_iter().next().expect("parser rejects empty input");
    log::info!("wild type '{header}': {} residues", seq.len());
    Ok(seq)
}

pub fn parse_mutants(labels: &[String], wild_type: &ResidueSequence) -> CliResult<Vec<MutantSpec>> {
    labels
        .iter()
        .map(|l| parse_mutant_spec(l, wild_type).map_err(|e| CliError::input(format!("mutant '{l}': {e}"))))
        .collect()
}

/// Evolutionary log-probabilities from an alignment file, a saved Foldseek
/// result, or both merged.
pub fn load_evo(
    wild_type: &ResidueSequence,
    alignment: Option<&Path>,
    foldseek_json: Option<&Path>,
    column_offset: Option<usize>,
) -> CliResult<EvolutionaryLogits> {
    let from_file = alignment
        .map(|p| load_alignment(p, wild_type, A2mOptions { column_offset }))
        .transpose()?;
    let from_search = foldseek_json
        .map(|p| -> CliResult<AlignmentMatrix> {
            let hits =
                parse_foldseek_json(&read_text(p)?).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
            Ok(hits_to_alignment(&hits, wild_type)?)
        })
        .transpose()?;
    let matrix = match (from_file, from_search) {
        (Some(a), Some(b)) => merge_alignments(&a, &b)?,
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => return Err(CliError::input("need --alignment or --foldseek-json")),
    };
    log::info!("alignment: {} rows x {} columns", matrix.rows(), matrix.cols());
    Ok(alignment_logits(&matrix)?)
}

/// Checks that some native source is fully specified, without touching
/// any file.
pub fn check_native_args(args: &NativeArgs, no_native: bool) -> CliResult<()> {
    if no_native {
        return Ok(());
    }
    if args.native_logits.is_some() {
        return Ok(());
    }
    let missing: Vec<&str> = [
        ("--model", args.model.is_none()),
        ("--pdb", args.pdb.is_none()),
        ("--codebook", args.codebook.is_none()),
    ]
    .into_iter()
    .filter_map(|(f, m)| m.then_some(f))
    .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(CliError::input(format!(
            "native log-probabilities need --native-logits, or --model with --pdb and --codebook (missing {}); pass --no-native to use alignments only",
            missing.join(", ")
        )))
    }
}

pub fn load_native(args: &NativeArgs, pdb: Option<&Path>, wild_type: &ResidueSequence) -> CliResult<NativeLogits> {
    let native = if let Some(path) = &args.native_logits {
        let m = LogitsMatrix::from_csv(&read_text(path)?)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        NativeLogits(m)
    } else {
        let (model, codebook) = match (&args.model, &args.codebook) {
            (Some(m), Some(c)) => (m, c),
            _ => {
                return Err(CliError::input(
                    "--model and --codebook are required for native log-probabilities",
                ))
            }
        };
        let pdb = pdb
            .or(args.pdb.as_deref())
            .ok_or_else(|| CliError::input("--pdb is required with --model"))?;
        let params = load_model(model)?;
        let codebook = load_codebook(codebook)?;
        let coords = parse_pdb_ca(&read_text(pdb)?, args.chain)
            .map_err(|e| CliError::input(format!("{}: {e}", pdb.display())))?;
        if coords.len() != wild_type.len() {
            return Err(CliError::input(format!(
                "{} has {} residues, wild type has {}",
                pdb.display(),
                coords.len(),
                wild_type.len()
            )));
        }
        if coords.sequence() != wild_type.as_str() {
            log::warn!("structure sequence differs from the wild type; using wild-type residues");
        }
        let config = FeaturizerConfig {
            dim: codebook.dim(),
            ..Default::default()
        };
        let tokens = tokenize_structure(&coords, &codebook, &config)?;
        let mode = if args.masked_marginals {
            InferenceMode::MaskedMarginals
        } else {
            InferenceMode::WildTypeMarginals
        };
        native_logits(&params, wild_type, &tokens, mode)?
    };
    if native.len() != wild_type.len() {
        return Err(CliError::input(format!(
            "native log-probabilities have {} rows, wild type has {} residues",
            native.len(),
            wild_type.len()
        )));
    }
    Ok(native)
}

/// One manifest row; which columns are required depends on the command.
#[derive(Debug, Clone, Deserialize)]
pub struct ManifestRow {
    pub assay_id: String,
    #[serde(default)]
    pub protein_key: Option<String>,
    #[serde(default)]
    pub csv_path: Option<PathBuf>,
    #[serde(default)]
    pub prediction_path: Option<PathBuf>,
    #[serde(default)]
    pub wt_fasta: Option<PathBuf>,
    #[serde(default)]
    pub alignment: Option<PathBuf>,
    #[serde(default)]
    pub native_logits: Option<PathBuf>,
    #[serde(default)]
    pub pdb: Option<PathBuf>,
}

impl ManifestRow {
    pub fn protein(&self) -> String {
        self.protein_key
            .clone()
            .unwrap_or_else(|| default_protein_key(&self.assay_id))
    }

    pub fn require<'a>(&self, field: &'a Option<PathBuf>, name: &str) -> CliResult<&'a PathBuf> {
        field
            .as_ref()
            .ok_or_else(|| CliError::input(format!("manifest row '{}' has no {name}", self.assay_id)))
    }
}

/// Reads a manifest; relative paths are taken from the manifest's folder.
pub fn read_manifest(path: &Path) -> CliResult<Vec<ManifestRow>> {
    let text = read_text(path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in reader.deserialize::<ManifestRow>().enumerate() {
        let mut row = rec.map_err(|e| CliError::input(format!("{} row {}: {e}", path.display(), i + 1)))?;
        for p in [
            &mut row.csv_path,
            &mut row.prediction_path,
            &mut row.wt_fasta,
            &mut row.alignment,
            &mut row.native_logits,
            &mut row.pdb,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::input(format!("{}: manifest lists no assays", path.display())));
    }
    Ok(rows)
}
