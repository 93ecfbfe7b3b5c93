use super::common::{check_native_args, load_evo, load_native, parse_mutants, read_wild_type, write_text};
use crate::cli::ScoreArgs;
use crate::error::{CliError, CliResult};
use mutscore::bio_io::{read_mutant_labels, write_scores_csv};
use mutscore::scoring::{blend_logits, score_batch, BlendedLogits};

pub fn run(args: &ScoreArgs) -> CliResult<()> {
    check_native_args(&args.native, args.no_native)?;
    if args.alignment.is_none() && args.foldseek_json.is_none() {
        return Err(CliError::input("need --alignment or --foldseek-json"));
    }
    if args.no_native && args.alpha != mutscore::scoring::DEFAULT_ALPHA && args.alpha != 1.0 {
        log::warn!("--no-native overrides --alpha {}", args.alpha);
    }

    let wt = read_wild_type(&args.wt_fasta)?;
    let labels = read_mutant_labels(&args.mutants, &args.mutant_column)?;
    let mutants = parse_mutants(&labels, &wt)?;
    let evo = load_evo(
        &wt,
        args.alignment.as_deref(),
        args.foldseek_json.as_deref(),
        args.column_offset,
    )?;
    if evo.len() != wt.len() {
        return Err(CliError::Internal(format!(
            "evolutionary matrix has {} rows for a {}-residue wild type",
            evo.len(),
            wt.len()
        )));
    }

    let blended = if args.no_native {
        BlendedLogits::from_matrix(evo.0.clone(), 1.0)
    } else {
        let native = load_native(&args.native, None, &wt)?;
        if let Some(path) = &args.native_out {
            write_text(path, &native.to_csv())?;
        }
        blend_logits(&native, &evo, args.alpha)?
    };

    let scores = score_batch(&blended, &mutants)?;
    let rows: Vec<(String, f64)> = scores.into_iter().map(|s| (s.mutant_label, s.value)).collect();
    write_scores_csv(&args.output, &rows)?;
    log::info!("wrote {} scores to {}", rows.len(), args.output.display());
    Ok(())
}
