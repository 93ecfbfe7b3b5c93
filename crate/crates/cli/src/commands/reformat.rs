use super::common::{read_text, read_wild_type, write_text};
use crate::cli::ReformatArgs;
use crate::error::{CliError, CliResult};
use mutscore::bio_io::{parse_a2m, reformat_a3m, A2mOptions};

pub fn run(args: &ReformatArgs) -> CliResult<()> {
    let text = read_text(&args.input)?;
    let a2m = reformat_a3m(&text).map_err(|e| CliError::input(format!("{}: {e}", args.input.display())))?;
    if let Some(wt) = &args.wt_fasta {
        let wt = read_wild_type(wt)?;
        let m = parse_a2m(&a2m, &wt, A2mOptions::default())
            .map_err(|e| CliError::input(format!("{}: {e}", args.input.display())))?;
        log::info!("{} rows match the wild type", m.rows());
    }
    write_text(&args.output, &a2m)
}
