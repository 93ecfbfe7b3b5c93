use super::cache::{cache_key, ResultCache};
use super::hits::{parse_foldseek_json, FoldseekHit};
use super::RetrievalError;
use crate::bio_io::IoError;
use serde::Deserialize;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

pub const DEFAULT_FOLDSEEK_URL: &str = "https://search.foldseek.com/api";
/// Overrides the search endpoint base URL.
pub const ENDPOINT_ENV: &str = "MUTSCORE_FOLDSEEK_URL";

/// Structure databases accepted by the search service.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FoldseekDatabase {
    MgnifyEsm30,
    Afdb50,
    AfdbProteome,
    Cath50,
    Pdb100,
    AfdbSwissprot,
    GmgclId,
    Bfvd,
}

impl FoldseekDatabase {
    pub const ALL: [FoldseekDatabase; 8] = [
        Self::MgnifyEsm30,
        Self::Afdb50,
        Self::AfdbProteome,
        Self::Cath50,
        Self::Pdb100,
        Self::AfdbSwissprot,
        Self::GmgclId,
        Self::Bfvd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::MgnifyEsm30 => "mgnify_esm30",
            Self::Afdb50 => "afdb50",
            Self::AfdbProteome => "afdb-proteome",
            Self::Cath50 => "cath50",
            Self::Pdb100 => "pdb100",
            Self::AfdbSwissprot => "afdb-swissprot",
            Self::GmgclId => "gmgcl_id",
            Self::Bfvd => "bfvd",
        }
    }
}

impl std::str::FromStr for FoldseekDatabase {
    type Err = RetrievalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| RetrievalError::UnknownDatabase(s.to_string()))
    }
}

impl std::fmt::Display for FoldseekDatabase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalJob {
    pub query_structure: PathBuf,
    pub databases: Vec<FoldseekDatabase>,
    pub poll_interval: Duration,
    pub max_polls: usize,
    pub mode: String,
}

impl RetrievalJob {
    pub fn new(query_structure: impl Into<PathBuf>, databases: Vec<FoldseekDatabase>) -> Self {
        Self {
            query_structure: query_structure.into(),
            databases,
            poll_interval: Duration::from_secs(5),
            max_polls: 120,
            mode: "3diaa".to_string(),
        }
    }

    pub fn validate(&self) -> Result<(), RetrievalError> {
        if self.databases.is_empty() {
            return Err(RetrievalError::NoDatabases);
        }
        if self.poll_interval.is_zero() {
            return Err(RetrievalError::PollInterval);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

impl HttpResponse {
    pub fn ok(body: impl Into<Vec<u8>>) -> Self {
        Self {
            status: 200,
            body: body.into(),
        }
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }
}

/// Text fields plus a single uploaded file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultipartForm {
    pub fields: Vec<(String, String)>,
    pub file_field: String,
    pub file_name: String,
    pub file: Vec<u8>,
}

/// The two requests the search protocol needs. Implementations are shared
/// across concurrent jobs.
pub trait HttpTransport: Send + Sync {
    fn post_multipart(&self, url: &str, form: &MultipartForm) -> Result<HttpResponse, String>;
    fn get(&self, url: &str) -> Result<HttpResponse, String>;
}

pub trait Sleeper: Send + Sync {
    fn sleep(&self, duration: Duration);
}

#[derive(Debug, Default, Clone, Copy)]
pub struct ThreadSleeper;

impl Sleeper for ThreadSleeper {
    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new(timeout: Duration) -> Result<Self, RetrievalError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .user_agent(concat!("mutscore/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| RetrievalError::Transport(e.to_string()))?;
        Ok(Self { client })
    }
}

fn read_response(resp: reqwest::blocking::Response) -> Result<HttpResponse, String> {
    let status = resp.status().as_u16();
    let body = resp.bytes().map_err(|e| e.to_string())?.to_vec();
    Ok(HttpResponse { status, body })
}

impl HttpTransport for ReqwestTransport {
    fn post_multipart(&self, url: &str, form: &MultipartForm) -> Result<HttpResponse, String> {
        use reqwest::blocking::multipart::{Form, Part};
        let mut body = Form::new();
        for (k, v) in &form.fields {
            body = body.text(k.clone(), v.clone());
        }
        let part = Part::bytes(form.file.clone()).file_name(form.file_name.clone());
        body = body.part(form.file_field.clone(), part);
        let resp = self
            .client
            .post(url)
            .multipart(body)
            .send()
            .map_err(|e| e.to_string())?;
        read_response(resp)
    }

    fn get(&self, url: &str) -> Result<HttpResponse, String> {
        read_response(self.client.get(url).send().map_err(|e| e.to_string())?)
    }
}

#[derive(Deserialize)]
struct Ticket {
    #[serde(default)]
    id: Option<String>,
    status: String,
}

fn parse_ticket(resp: &HttpResponse) -> Result<Ticket, String> {
    serde_json::from_slice(&resp.body).map_err(|e| format!("bad ticket document: {e}"))
}

/// Search client bound to one endpoint.
pub struct FoldseekClient {
    base_url: String,
    transport: Arc<dyn HttpTransport>,
    sleeper: Arc<dyn Sleeper>,
    cache: Option<ResultCache>,
}

impl FoldseekClient {
    pub fn new(base_url: impl Into<String>, transport: Arc<dyn HttpTransport>, sleeper: Arc<dyn Sleeper>) -> Self {
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            transport,
            sleeper,
            cache: None,
        }
    }

    /// Real HTTP client; the endpoint comes from the environment when set.
    pub fn from_env() -> Result<Self, RetrievalError> {
        let base = std::env::var(ENDPOINT_ENV).unwrap_or_else(|_| DEFAULT_FOLDSEEK_URL.to_string());
        let transport = ReqwestTransport::new(Duration::from_secs(120))?;
        Ok(Self::new(base, Arc::new(transport), Arc::new(ThreadSleeper)))
    }

    pub fn with_cache(mut self, cache: ResultCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    /// Submits the query, polls its ticket until complete, and returns the
    /// raw result document. Consults and fills the cache when configured.
    pub fn search_raw(&self, job: &RetrievalJob) -> Result<String, RetrievalError> {
        job.validate()?;
        let query = std::fs::read(&job.query_structure).map_err(|e| IoError::io(&job.query_structure, e))?;
        let names: Vec<&str> = job.databases.iter().map(|d| d.name()).collect();
        let key = cache_key(&query, &names, &job.mode);
        if let Some(body) = self.cache.as_ref().and_then(|c| c.get(&key)) {
            log::info!("using cached search result {key}");
            return Ok(body);
        }

        let id = self.submit(job, &query, &names)?;
        self.wait_complete(job, &id)?;
        let url = format!("{}/result/{id}/0", self.base_url);
        let resp = self.retrying(job, || {
            let r = self.transport.get(&url)?;
            if r.is_success() {
                Ok(r)
            } else {
                Err(format!("HTTP {}", r.status))
            }
        })?;
        let body =
            String::from_utf8(resp.body).map_err(|_| RetrievalError::MalformedJson("result is not utf-8".into()))?;
        if let Some(cache) = &self.cache {
            cache.put(&key, &body)?;
        }
        Ok(body)
    }

    pub fn search(&self, job: &RetrievalJob) -> Result<Vec<FoldseekHit>, RetrievalError> {
        parse_foldseek_json(&self.search_raw(job)?)
    }

    fn submit(&self, job: &RetrievalJob, query: &[u8], names: &[&str]) -> Result<String, RetrievalError> {
        let mut fields: Vec<(String, String)> = names
            .iter()
            .map(|n| ("database[]".to_string(), n.to_string()))
            .collect();
        fields.push(("mode".to_string(), job.mode.clone()));
        let file_name = job
            .query_structure
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "query.pdb".to_string());
        let form = MultipartForm {
            fields,
            file_field: "q".to_string(),
            file_name,
            file: query.to_vec(),
        };
        let url = format!("{}/ticket", self.base_url);
        let resp = self.retrying(job, || {
            let r = self.transport.post_multipart(&url, &form)?;
            if r.is_success() {
                Ok(r)
            } else {
                Err(format!("HTTP {}", r.status))
            }
        })?;
        let ticket = parse_ticket(&resp).map_err(RetrievalError::MalformedJson)?;
        if ticket.status == "ERROR" {
            return Err(RetrievalError::Transport("server rejected the query".into()));
        }
        ticket
            .id
            .filter(|id| !id.is_empty())
            .ok_or_else(|| RetrievalError::MalformedJson("ticket has no id".into()))
    }

    /// Sleeps one interval before every status request.
    fn wait_complete(&self, job: &RetrievalJob, id: &str) -> Result<(), RetrievalError> {
        let url = format!("{}/ticket/{id}", self.base_url);
        let mut last = String::from("none");
        for poll in 1..=job.max_polls {
            self.sleeper.sleep(job.poll_interval);
            match self.transport.get(&url) {
                Ok(r) if r.is_success() => match parse_ticket(&r) {
                    Ok(t) if t.status == "COMPLETE" => {
                        log::debug!("ticket {id} complete after {poll} polls");
                        return Ok(());
                    }
                    Ok(t) => last = t.status,
                    Err(e) => last = e,
                },
                Ok(r) => last = format!("HTTP {}", r.status),
                Err(e) => last = e,
            }
            log::debug!("ticket {id} poll {poll}: {last}");
        }
        Err(RetrievalError::MaxPolls {
            polls: job.max_polls,
            last,
        })
    }

    /// Runs `f` until it succeeds, sleeping between attempts, at most
    /// `max_polls` times.
    fn retrying<T>(&self, job: &RetrievalJob, mut f: impl FnMut() -> Result<T, String>) -> Result<T, RetrievalError> {
        let mut last = String::new();
        for attempt in 0..job.max_polls.max(1) {
            if attempt > 0 {
                self.sleeper.sleep(job.poll_interval);
            }
            match f() {
                Ok(v) => return Ok(v),
                Err(e) => {
                    log::warn!("request failed (attempt {}): {e}", attempt + 1);
                    last = e;
                }
            }
        }
        Err(RetrievalError::Transport(format!(
            "giving up after {} attempts: {last}",
            job.max_polls.max(1)
        )))
    }
}

/// Runs one search job to completion and parses its hits.
pub fn foldseek_search(client: &FoldseekClient, job: &RetrievalJob) -> Result<Vec<FoldseekHit>, RetrievalError> {
    client.search(job)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    #[derive(Default)]
    struct Script {
        statuses: Mutex<Vec<&'static str>>,
        posts: Mutex<Vec<(String, MultipartForm)>>,
        gets: Mutex<Vec<String>>,
        result: &'static str,
        fail_posts: Mutex<usize>,
    }

    impl HttpTransport for Script {
        fn post_multipart(&self, url: &str, form: &MultipartForm) -> Result<HttpResponse, String> {
            self.posts.lock().unwrap().push((url.to_string(), form.clone()));
            let mut fails = self.fail_posts.lock().unwrap();
            if *fails > 0 {
                *fails -= 1;
                return Err("connection reset".into());
            }
            Ok(HttpResponse::ok(r#"{"id":"T1","status":"PENDING"}"#))
        }

        fn get(&self, url: &str) -> Result<HttpResponse, String> {
            self.gets.lock().unwrap().push(url.to_string());
            if url.contains("/result/") {
                return Ok(HttpResponse::ok(self.result));
            }
            let mut st = self.statuses.lock().unwrap();
            let s = if st.len() > 1 { st.remove(0) } else { st[0] };
            Ok(HttpResponse::ok(format!(r#"{{"id":"T1","status":"{s}"}}"#)))
        }
    }

    #[derive(Default)]
    struct Recorder(Mutex<Vec<Duration>>);

    impl Sleeper for Recorder {
        fn sleep(&self, d: Duration) {
            self.0.lock().unwrap().push(d);
        }
    }

    const TWO_HITS: &str = r#"{"results":[{"db":"afdb50","alignments":[[
        {"target":"a","prob":1,"eval":0,"qAln":"AC","dbAln":"AC","qStartPos":1,"qEndPos":2},
        {"target":"b","prob":1,"eval":0,"qAln":"C","dbAln":"D","qStartPos":2,"qEndPos":2}]]}]}"#;

    fn setup(
        statuses: Vec<&'static str>,
        result: &'static str,
    ) -> (
        Arc<Script>,
        Arc<Recorder>,
        FoldseekClient,
        RetrievalJob,
        tempfile::TempDir,
    ) {
        let script = Arc::new(Script {
            statuses: Mutex::new(statuses),
            result,
            ..Default::default()
        });
        let sleeper = Arc::new(Recorder::default());
        let client = FoldseekClient::new("http://mock/api/", script.clone(), sleeper.clone());
        let dir = tempfile::tempdir().unwrap();
        let pdb = dir.path().join("q.pdb");
        std::fs::write(&pdb, "ATOM\n").unwrap();
        let mut job = RetrievalJob::new(&pdb, vec![FoldseekDatabase::Afdb50, FoldseekDatabase::Pdb100]);
        job.poll_interval = Duration::from_millis(250);
        job.max_polls = 5;
        (script, sleeper, client, job, dir)
    }

    #[test]
    fn pending_twice_then_complete() {
        let (script, sleeper, client, job, _dir) = setup(vec!["PENDING", "RUNNING", "COMPLETE"], TWO_HITS);
        let hits = foldseek_search(&client, &job).unwrap();
        assert_eq!(hits.len(), 2);
        let gets = script.gets.lock().unwrap();
        assert_eq!(gets.iter().filter(|u| u.ends_with("/ticket/T1")).count(), 3);
        assert_eq!(gets.last().unwrap(), "http://mock/api/result/T1/0");
        let posts = script.posts.lock().unwrap();
        assert_eq!(posts[0].0, "http://mock/api/ticket");
        let f = &posts[0].1;
        assert_eq!(f.file_field, "q");
        assert_eq!(f.file, b"ATOM\n");
        assert!(f.fields.contains(&("database[]".into(), "afdb50".into())));
        assert!(f.fields.contains(&("database[]".into(), "pdb100".into())));
        assert!(f.fields.contains(&("mode".into(), "3diaa".into())));
        assert_eq!(*sleeper.0.lock().unwrap(), vec![Duration::from_millis(250); 3]);
    }

    #[test]
    fn error_status_exhausts_polls() {
        let (script, sleeper, client, job, _dir) = setup(vec!["ERROR"], TWO_HITS);
        match client.search(&job) {
            Err(RetrievalError::MaxPolls { polls: 5, last }) => assert_eq!(last, "ERROR"),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(script.gets.lock().unwrap().len(), 5);
        assert_eq!(sleeper.0.lock().unwrap().len(), 5);
    }

    #[test]
    fn empty_result_is_ok() {
        let (_, _, client, job, _dir) = setup(vec!["COMPLETE"], r#"{"results":[{"db":"afdb50","alignments":[]}]}"#);
        assert!(client.search(&job).unwrap().is_empty());
    }

    #[test]
    fn transient_post_failure_is_retried() {
        let (script, sleeper, client, job, _dir) = setup(vec!["COMPLETE"], TWO_HITS);
        *script.fail_posts.lock().unwrap() = 2;
        assert_eq!(client.search(&job).unwrap().len(), 2);
        assert_eq!(script.posts.lock().unwrap().len(), 3);
        // two retry waits before the post, one before the single poll
        assert_eq!(sleeper.0.lock().unwrap().len(), 3);
    }

    #[test]
    fn cache_short_circuits_network() {
        let (script, _, client, job, dir) = setup(vec!["COMPLETE"], TWO_HITS);
        let client = client.with_cache(ResultCache::new(dir.path().join("cache")));
        assert_eq!(client.search(&job).unwrap().len(), 2);
        let calls = script.gets.lock().unwrap().len();
        assert_eq!(client.search(&job).unwrap().len(), 2);
        assert_eq!(script.gets.lock().unwrap().len(), calls);
        assert_eq!(script.posts.lock().unwrap().len(), 1);
    }

    #[test]
    fn job_validation() {
        let (_, _, client, mut job, _dir) = setup(vec!["COMPLETE"], TWO_HITS);
        job.databases.clear();
        assert!(matches!(client.search(&job), Err(RetrievalError::NoDatabases)));
        job.databases.push(FoldseekDatabase::Cath50);
        job.poll_interval = Duration::ZERO;
        assert!(matches!(client.search(&job), Err(RetrievalError::PollInterval)));
    }

    #[test]
    fn database_names_round_trip() {
        for db in FoldseekDatabase::ALL {
            assert_eq!(db.name().parse::<FoldseekDatabase>().unwrap(), db);
        }
        assert!("uniref".parse::<FoldseekDatabase>().is_err());
    }
}
