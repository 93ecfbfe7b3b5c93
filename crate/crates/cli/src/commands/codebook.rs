use super::common::read_text;
use crate::cli::BuildCodebookArgs;
use crate::error::{CliError, CliResult};
use mutscore::bio_io::parse_pdb_ca;
use mutscore::struct_tok::{
    describe_structure, kmeans_fit, save_codebook, FeaturizerConfig, KMeansParams, FEATURE_LEN,
};

pub fn run(args: &BuildCodebookArgs) -> CliResult<()> {
    if args.dim < FEATURE_LEN {
        return Err(CliError::input(format!("--dim must be at least {FEATURE_LEN}")));
    }
    // graph parameters are not stored in the codebook, so scoring must use the same defaults
    let config = FeaturizerConfig {
        dim: args.dim,
        ..Default::default()
    };
    let mut descriptors = Vec::new();
    for pdb in &args.pdbs {
        let coords = parse_pdb_ca(&read_text(pdb)?, args.chain)
            .map_err(|e| CliError::input(format!("{}: {e}", pdb.display())))?;
        let d = describe_structure(&coords, &config).map_err(|e| CliError::input(format!("{}: {e}", pdb.display())))?;
        log::info!("{}: {} residues", pdb.display(), d.len());
        descriptors.extend(d);
    }
    let params = KMeansParams {
        k: args.k,
        seed: args.seed,
        max_iter: args.max_iter,
        tol: args.tol,
    };
    let fit = kmeans_fit(&descriptors, &params)?;
    save_codebook(&args.output, &fit.codebook)?;
    println!(
        "codebook: k={} dim={} points={} iterations={} converged={} inertia={:.6}",
        fit.codebook.k(),
        fit.codebook.dim(),
        descriptors.len(),
        fit.iterations,
        fit.converged,
        fit.inertia
    );
    Ok(())
}
