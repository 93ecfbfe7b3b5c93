use super::common::{read_wild_type, write_text};
use crate::cli::RetrieveArgs;
use crate::error::{CliError, CliResult};
use mutscore::retrieval::{
    hits_to_alignment, parse_foldseek_json, FoldseekClient, FoldseekDatabase, ReqwestTransport, ResultCache,
    RetrievalJob, ThreadSleeper,
};
use std::sync::Arc;
use std::time::Duration;

pub fn run(args: &RetrieveArgs) -> CliResult<()> {
    let databases = args
        .databases
        .iter()
        .map(|d| d.trim().parse::<FoldseekDatabase>())
        .collect::<Result<Vec<_>, _>>()?;
    let mut job = RetrievalJob::new(&args.pdb, databases);
    job.poll_interval = Duration::from_secs_f64(args.poll_interval);
    job.max_polls = args.max_polls;
    job.mode = args.mode.clone();
    job.validate()?;
    if !args.pdb.is_file() {
        return Err(CliError::input(format!("{}: no such file", args.pdb.display())));
    }
    let wt = args.wt_fasta.as_deref().map(read_wild_type).transpose()?;

    let transport = ReqwestTransport::new(Duration::from_secs(120))?;
    let mut client = FoldseekClient::new(&args.endpoint, Arc::new(transport), Arc::new(ThreadSleeper));
    if let Some(dir) = &args.cache_dir {
        client = client.with_cache(ResultCache::new(dir));
    }
    log::info!("searching {} via {}", args.pdb.display(), client.base_url());
    let raw = client.search_raw(&job)?;
    let hits = parse_foldseek_json(&raw)?;
    write_text(&args.output, &raw)?;
    println!("{} hits", hits.len());
    if let (Some(wt), Some(out)) = (wt, &args.a2m_out) {
        let m = hits_to_alignment(&hits, &wt)?;
        write_text(out, &m.to_a2m())?;
    }
    Ok(())
}
