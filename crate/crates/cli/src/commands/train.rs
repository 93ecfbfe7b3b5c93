use super::common::{read_text, write_text};
use crate::cli::TrainArgs;
use crate::error::{CliError, CliResult};
use mutscore::bio_io::{parse_pdb_ca, ResidueSequence};
use mutscore::native_lm::{save_model, synthetic_corpus, train_toy, Example, ModelConfig, TrainOptions};
use mutscore::struct_tok::{load_codebook, tokenize_structure, FeaturizerConfig};

pub fn run(args: &TrainArgs) -> CliResult<()> {
    if !(args.lr > 0.0 && args.lr.is_finite()) {
        return Err(CliError::input("--lr must be positive"));
    }
    let (corpus, struct_vocab) = match (args.synthetic, &args.codebook) {
        (Some(n), _) => {
            if n == 0 || args.length == 0 || args.struct_vocab == 0 {
                return Err(CliError::input(
                    "--synthetic, --length and --struct-vocab must be positive",
                ));
            }
            (
                synthetic_corpus(n, args.length, args.struct_vocab, args.seed),
                args.struct_vocab,
            )
        }
        (None, Some(cb)) if !args.pdbs.is_empty() => {
            let codebook = load_codebook(cb)?;
            let config = FeaturizerConfig {
                dim: codebook.dim(),
                ..Default::default()
            };
            let mut corpus = Vec::new();
            for pdb in &args.pdbs {
                let coords = parse_pdb_ca(&read_text(pdb)?, None)
                    .map_err(|e| CliError::input(format!("{}: {e}", pdb.display())))?;
                let seq = ResidueSequence::from_letters(&coords.sequence())
                    .map_err(|e| CliError::input(format!("{}: {e}", pdb.display())))?;
                let tokens = tokenize_structure(&coords, &codebook, &config)?;
                corpus.push(Example::new(seq, tokens)?);
            }
            (corpus, codebook.k())
        }
        _ => return Err(CliError::input("need --synthetic N, or --pdb files with --codebook")),
    };

    let config = ModelConfig {
        head_dim: args.head_dim,
        heads: args.heads,
        layers: args.layers,
        struct_vocab,
        rel_window: args.rel_window,
        ffn_dim: args.ffn_dim,
        mask_rate: args.mask_rate,
        seed: args.seed,
        ..Default::default()
    };
    config.validate()?;
    let options = TrainOptions {
        steps: args.steps,
        learning_rate: args.lr,
    };
    let report = train_toy(&corpus, &config, &options)?;
    save_model(&args.output, &report.params)?;
    if let Some(log_path) = &args.loss_log {
        let mut csv = String::from("step,loss\n");
        for (i, l) in report.losses.iter().enumerate() {
            csv.push_str(&format!("{i},{l}\n"));
        }
        write_text(log_path, &csv)?;
    }
    println!(
        "trained {} parameters on {} sequences: loss {:.4} -> {:.4}",
        report.params.num_parameters(),
        corpus.len(),
        report.initial_loss(),
        report.final_loss()
    );
    Ok(())
}
