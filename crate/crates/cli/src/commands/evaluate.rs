use super::common::{read_manifest, read_text, write_text};
use crate::cli::EvaluateArgs;
use crate::error::{CliError, CliResult};
use mutscore::bio_io::{default_protein_key, parse_assay_csv, read_scores_csv, AssayColumns};
use mutscore::evalbench::{run_benchmark, subsample_assays, AssayPredictions, BenchmarkOptions};
use std::collections::HashMap;
use std::path::Path;

fn join(
    assay_id: &str,
    protein_key: String,
    truth_path: &Path,
    pred_path: &Path,
    columns: &AssayColumns,
) -> CliResult<AssayPredictions> {
    let table = parse_assay_csv(&read_text(truth_path)?, assay_id, &protein_key, columns)
        .map_err(|e| CliError::input(format!("{}: {e}", truth_path.display())))?;
    let preds: HashMap<String, f64> = read_scores_csv(pred_path)?.into_iter().collect();
    let mut predictions = Vec::with_capacity(table.len());
    let mut truth = Vec::with_capacity(table.len());
    for (label, value) in &table.entries {
        let p = preds.get(label).ok_or_else(|| {
            CliError::input(format!(
                "assay '{assay_id}': {} has no prediction for mutant '{label}'",
                pred_path.display()
            ))
        })?;
        predictions.push(*p);
        truth.push(*value);
    }
    Ok(AssayPredictions {
        assay_id: assay_id.to_string(),
        protein_key,
        predictions,
        truth,
    })
}

pub fn run(args: &EvaluateArgs) -> CliResult<()> {
    if args.bootstrap == 0 {
        return Err(CliError::input("--bootstrap must be at least 1"));
    }
    let columns = AssayColumns {
        mutant: args.mutant_column.clone(),
        score: args.score_column.clone(),
    };
    let mut assays = Vec::new();
    match (&args.manifest, &args.truth, &args.pred) {
        (Some(manifest), _, _) => {
            for row in read_manifest(manifest)? {
                let truth = row.require(&row.csv_path, "csv_path")?;
                let pred = row.require(&row.prediction_path, "prediction_path")?;
                assays.push(join(&row.assay_id, row.protein(), truth, pred, &columns)?);
            }
        }
        (None, Some(truth), Some(pred)) => {
            let id = truth
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "assay".into());
            let key = default_protein_key(&id);
            assays.push(join(&id, key, truth, pred, &columns)?);
        }
        _ => return Err(CliError::input("need --manifest, or --truth with --pred")),
    }
    if let Some(f) = args.grouping.subsample {
        assays = subsample_assays(&assays, f, args.grouping.seed)?;
    }
    let options = BenchmarkOptions {
        group_by: args.grouping.group_by,
        replicates: args.bootstrap,
        seed: args.grouping.seed,
        scheme: args.bootstrap_scheme,
    };
    let report = run_benchmark(&assays, &options)?;
    print!("{report}");
    if let Some(out) = &args.output {
        write_text(out, &report.to_csv())?;
    }
    Ok(())
}
