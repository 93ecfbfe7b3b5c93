use super::spearman::{spearman, SpearmanResult};
use super::EvalError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::{BTreeMap, HashSet};
use std::fmt;

/// How assays are pooled before averaging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupBy {
    /// Mean within each protein, then across proteins.
    #[default]
    Protein,
    /// Every assay is its own group: a plain mean.
    Flat,
}

impl std::str::FromStr for GroupBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "protein" => Ok(Self::Protein),
            "flat" | "assay" => Ok(Self::Flat),
            other => Err(format!("unknown grouping '{other}' (expected protein or flat)")),
        }
    }
}

impl fmt::Display for GroupBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Protein => "protein",
            Self::Flat => "flat",
        })
    }
}

/// What a bootstrap replicate resamples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BootstrapScheme {
    /// Groups with replacement; per-assay correlations are reused.
    #[default]
    Groups,
    /// Mutants with replacement within each assay; correlations recomputed.
    Mutants,
}

impl std::str::FromStr for BootstrapScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "groups" | "group" => Ok(Self::Groups),
            "mutants" | "mutant" => Ok(Self::Mutants),
            other => Err(format!(
                "unknown bootstrap scheme '{other}' (expected groups or mutants)"
            )),
        }
    }
}

impl fmt::Display for BootstrapScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Groups => "groups",
            Self::Mutants => "mutants",
        })
    }
}

/// Predictions and ground truth for one assay, aligned by index.
#[derive(Debug, Clone, PartialEq)]
pub struct AssayPredictions {
    pub assay_id: String,
    pub protein_key: String,
    pub predictions: Vec<f64>,
    pub truth: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssayResult {
    pub assay_id: String,
    pub protein_key: String,
    pub spearman: SpearmanResult,
}

impl AssayResult {
    fn group(&self, by: GroupBy) -> &str {
        match by {
            GroupBy::Protein => &self.protein_key,
            GroupBy::Flat => &self.assay_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOptions {
    pub group_by: GroupBy,
    pub replicates: usize,
    pub seed: u64,
    pub scheme: BootstrapScheme,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        Self {
            group_by: GroupBy::Protein,
            replicates: 1000,
            seed: 0,
            scheme: BootstrapScheme::Groups,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub per_assay: BTreeMap<String, AssayResult>,
    pub per_group: BTreeMap<String, f64>,
    pub overall: f64,
    pub bootstrap_std: f64,
    pub replicates: usize,
    pub seed: u64,
    pub group_by: GroupBy,
    pub scheme: BootstrapScheme,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation; zero for fewer than two values.
fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    // shifted by the first value so a constant sample gives exactly zero
    let n = values.len() as f64;
    let shift = values[0];
    let (s, ss) = values.iter().fold((0.0, 0.0), |(s, ss), v| {
        let d = v - shift;
        (s + d, ss + d * d)
    });
    ((ss - s * s / n).max(0.0) / (n - 1.0)).sqrt()
}

fn check_unique<'a>(ids: impl Iterator<Item = &'a str>) -> Result<(), EvalError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(EvalError::DuplicateAssay(id.to_string()));
        }
    }
    Ok(())
}

/// Per-group mean correlations, keyed and ordered by group. Members are
/// summed in assay-id order so the result does not depend on input order.
fn group_means(results: &[AssayResult], by: GroupBy) -> BTreeMap<String, f64> {
    let mut groups: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for r in results {
        groups
            .entry(r.group(by))
            .or_default()
            .insert(&r.assay_id, r.spearman.rho);
    }
    groups
        .into_iter()
        .map(|(k, v)| (k.to_string(), mean(&v.into_values().collect::<Vec<_>>())))
        .collect()
}

/// Rank correlation for every assay, in input order.
pub fn evaluate_assays(assays: &[AssayPredictions]) -> Result<Vec<AssayResult>, EvalError> {
    check_unique(assays.iter().map(|a| a.assay_id.as_str()))?;
    assays
        .par_iter()
        .map(|a| {
            let s = spearman(&a.predictions, &a.truth).map_err(|e| e.in_assay(&a.assay_id))?;
            Ok(AssayResult {
                assay_id: a.assay_id.clone(),
                protein_key: a.protein_key.clone(),
                spearman: s,
            })
        })
        .collect()
}

/// Two-level mean: within each group, then across groups.
pub fn aggregate(results: &[AssayResult], group_by: GroupBy) -> Result<BenchmarkReport, EvalError> {
    if results.is_empty() {
        return Err(EvalError::Empty);
    }
    check_unique(results.iter().map(|r| r.assay_id.as_str()))?;
    let per_group = group_means(results, group_by);
    let overall = mean(&per_group.values().copied().collect::<Vec<_>>());
    Ok(BenchmarkReport {
        per_assay: results.iter().map(|r| (r.assay_id.clone(), r.clone())).collect(),
        per_group,
        overall,
        bootstrap_std: 0.0,
        replicates: 0,
        seed: 0,
        group_by,
        scheme: BootstrapScheme::Groups,
    })
}

/// Spread of the overall score when groups are drawn with replacement.
/// Replicate `r` uses its own generator seeded with `seed + r`.
pub fn bootstrap_std(
    results: &[AssayResult],
    group_by: GroupBy,
    replicates: usize,
    seed: u64,
) -> Result<f64, EvalError> {
    if results.is_empty() {
        return Err(EvalError::Empty);
    }
    if replicates == 0 {
        return Err(EvalError::NoReplicates);
    }
    let groups: Vec<f64> = group_means(results, group_by).into_values().collect();
    let g = groups.len();
    let stats: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
            (0..g).map(|_| groups[rng.random_range(0..g)]).sum::<f64>() / g as f64
        })
        .collect();
    Ok(sample_std(&stats))
}

/// Spread of the overall score when mutants are drawn with replacement
/// inside each assay. Replicates where an assay's draw has constant ranks
/// drop that assay; a group with no assays left is dropped.
pub fn bootstrap_std_mutants(
    assays: &[AssayPredictions],
    group_by: GroupBy,
    replicates: usize,
    seed: u64,
) -> Result<f64, EvalError> {
    if assays.is_empty() {
        return Err(EvalError::Empty);
    }
    if replicates == 0 {
        return Err(EvalError::NoReplicates);
    }
    // reject malformed assays up front
    evaluate_assays(assays)?;
    let mut ordered: Vec<&AssayPredictions> = assays.iter().collect();
    ordered.sort_by(|a, b| a.assay_id.cmp(&b.assay_id));
    let stats: Vec<f64> = (0..replicates)
        .into_par_iter()
        .filter_map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
            let mut results = Vec::with_capacity(ordered.len());
            for a in &ordered {
                let n = a.truth.len();
                let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let p: Vec<f64> = idx.iter().map(|&i| a.predictions[i]).collect();
                let t: Vec<f64> = idx.iter().map(|&i| a.truth[i]).collect();
                if let Ok(s) = spearman(&p, &t) {
                    results.push(AssayResult {
                        assay_id: a.assay_id.clone(),
                        protein_key: a.protein_key.clone(),
                        spearman: s,
                    });
                }
            }
            aggregate(&results, group_by).ok().map(|rep| rep.overall)
        })
        .collect();
    Ok(sample_std(&stats))
}

/// Evaluates every assay, aggregates and attaches the bootstrap spread.
pub fn run_benchmark(assays: &[AssayPredictions], options: &BenchmarkOptions) -> Result<BenchmarkReport, EvalError> {
    let results = evaluate_assays(assays)?;
    let mut report = aggregate(&results, options.group_by)?;
    report.bootstrap_std = match options.scheme {
        BootstrapScheme::Groups => bootstrap_std(&results, options.group_by, options.replicates, options.seed)?,
        BootstrapScheme::Mutants => bootstrap_std_mutants(assays, options.group_by, options.replicates, options.seed)?,
    };
    report.replicates = options.replicates;
    report.seed = options.seed;
    report.scheme = options.scheme;
    Ok(report)
}

impl BenchmarkReport {
    /// Long-format CSV: `level,key,rho,n`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,key,rho,n\n");
        for (id, r) in &self.per_assay {
            out.push_str(&format!("assay,{id},{},{}\n", r.spearman.rho, r.spearman.n));
        }
        for (g, rho) in &self.per_group {
            out.push_str(&format!("group,{g},{rho},\n"));
        }
        out.push_str(&format!("overall,{},{},\n", self.group_by, self.overall));
        out.push_str(&format!(
            "bootstrap_std,{}:B={}:seed={},{},\n",
            self.scheme, self.replicates, self.seed, self.bootstrap_std
        ));
        out
    }
}

impl fmt::Display for BenchmarkReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.per_assay.keys().map(String::len).max().unwrap_or(5).max(5);
        writeln!(f, "{:<width$}  {:>8}  {:>6}", "assay", "rho", "n")?;
        for (id, r) in &self.per_assay {
            writeln!(f, "{id:<width$}  {:>8.4}  {:>6}", r.spearman.rho, r.spearman.n)?;
        }
        writeln!(f)?;
        writeln!(
            f,
            "overall ({} groups, {}): {:.4}",
            self.per_group.len(),
            self.group_by,
            self.overall
        )?;
        if self.replicates > 0 {
            writeln!(
                f,
                "bootstrap std ({}, B={}, seed={}): {:.4}",
                self.scheme, self.replicates, self.seed, self.bootstrap_std
            )?;
        }
        Ok(())
    }
}
