use super::common::{
    check_native_args, load_evo, load_native, parse_mutants, read_manifest, read_text, read_wild_type, write_text,
};
use crate::cli::SweepArgs;
use crate::error::{CliError, CliResult};
use mutscore::bio_io::{default_protein_key, parse_assay_csv, AssayColumns};
use mutscore::evalbench::{alpha_sweep, SweepAssay, SweepOptions};
use std::path::Path;

struct AssaySource<'a> {
    assay_id: String,
    protein_key: String,
    wt_fasta: &'a Path,
    alignment: &'a Path,
    csv_path: &'a Path,
    native_logits: Option<&'a Path>,
    pdb: Option<&'a Path>,
}

fn load(src: &AssaySource, args: &SweepArgs, columns: &AssayColumns) -> CliResult<SweepAssay> {
    let wt = read_wild_type(src.wt_fasta)?;
    let table = parse_assay_csv(&read_text(src.csv_path)?, &src.assay_id, &src.protein_key, columns)
        .map_err(|e| CliError::input(format!("{}: {e}", src.csv_path.display())))?;
    let labels: Vec<String> = table.entries.iter().map(|(l, _)| l.clone()).collect();
    let mutants = parse_mutants(&labels, &wt).map_err(|e| e.context(format!("assay '{}'", src.assay_id)))?;
    let evo = load_evo(&wt, Some(src.alignment), None, None)?;
    let mut native_args = args.native.clone();
    if let Some(p) = src.native_logits {
        native_args.native_logits = Some(p.to_path_buf());
    }
    let native = load_native(&native_args, src.pdb, &wt).map_err(|e| e.context(format!("assay '{}'", src.assay_id)))?;
    Ok(SweepAssay {
        assay_id: src.assay_id.clone(),
        protein_key: src.protein_key.clone(),
        native,
        evo,
        mutants,
        truth: table.entries.iter().map(|(_, v)| *v).collect(),
    })
}

pub fn run(args: &SweepArgs) -> CliResult<()> {
    if args.alphas.is_empty() {
        return Err(CliError::input("--alphas is empty"));
    }
    let columns = AssayColumns {
        mutant: args.mutant_column.clone(),
        score: args.score_column.clone(),
    };
    let manifest = args.manifest.as_deref().map(read_manifest).transpose()?;
    let mut sources = Vec::new();
    match &manifest {
        Some(rows) => {
            for row in rows {
                if row.native_logits.is_none() {
                    check_native_args(&args.native, false)
                        .map_err(|e| e.context(format!("assay '{}'", row.assay_id)))?;
                }
                sources.push(AssaySource {
                    assay_id: row.assay_id.clone(),
                    protein_key: row.protein(),
                    wt_fasta: row.require(&row.wt_fasta, "wt_fasta")?,
                    alignment: row.require(&row.alignment, "alignment")?,
                    csv_path: row.require(&row.csv_path, "csv_path")?,
                    native_logits: row.native_logits.as_deref(),
                    pdb: row.pdb.as_deref(),
                });
            }
        }
        None => {
            let (Some(wt), Some(aln), Some(assay)) = (&args.wt_fasta, &args.alignment, &args.assay) else {
                return Err(CliError::input(
                    "need --manifest, or --wt-fasta with --alignment and --assay",
                ));
            };
            check_native_args(&args.native, false)?;
            let id = assay
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "assay".into());
            sources.push(AssaySource {
                protein_key: default_protein_key(&id),
                assay_id: id,
                wt_fasta: wt,
                alignment: aln,
                csv_path: assay,
                native_logits: None,
                pdb: None,
            });
        }
    }

    let assays = sources
        .iter()
        .map(|s| load(s, args, &columns))
        .collect::<CliResult<Vec<_>>>()?;
    let options = SweepOptions {
        group_by: args.grouping.group_by,
        subsample: args.grouping.subsample,
        seed: args.grouping.seed,
    };
    let rows = alpha_sweep(&assays, &args.alphas, &options)?;

    let mut csv = String::from("alpha,overall,assays,mutants\n");
    println!("{:>6}  {:>8}", "alpha", "rho");
    for r in &rows {
        println!("{:>6.2}  {:>8.4}", r.alpha, r.overall);
        csv.push_str(&format!("{},{},{},{}\n", r.alpha, r.overall, r.assays, r.mutants));
    }
    if let Some(out) = &args.output {
        write_text(out, &csv)?;
    }
    Ok(())
}
