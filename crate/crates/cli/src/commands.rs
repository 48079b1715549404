use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use genderprobe_core::annotation::{
    accuracy, consensus_from_log, AnnotationLabel, AnnotationReport, LabelStore,
};
use genderprobe_core::bias::audit_corpus;
use genderprobe_core::corpus::{ingest_plain, ingest_swag, Ingested};
use genderprobe_core::filter::{filter_corpus, FilterStats};
use genderprobe_core::jsonl::{read_jsonl, write_atomic, write_jsonl};
use genderprobe_core::mlm::FillMaskProvider;
use genderprobe_core::report::{export, histogram, summarize, AuditSummary, ExportFormat};
use genderprobe_core::weat::{load_vectors, permutation_pvalue, weat_statistic, WeatSpec};
use genderprobe_core::{
    BiasConfig, BiasResult, CorefProvider, FilterConfig, HeuristicCoref, HttpFillMask, Lexicon,
    MaskedSample, MlmConfig, RejectionReason, RemoteCoref, StubProvider,
};

use crate::args::{AccuracyArgs, AuditArgs, FilterArgs, InputFormat, ReportArgs, WeatArgs};
use crate::manifest::RunManifest;

fn load_lexicon(dir: Option<&Path>) -> Result<Lexicon> {
    match dir {
        Some(d) => Lexicon::load(d).with_context(|| format!("loading lexicon from {}", d.display())),
        None => Ok(Lexicon::bundled()),
    }
}

#[derive(Debug, Serialize)]
struct RejectedRecord<'a> {
    id: &'a str,
    text: &'a str,
    reason: RejectionReason,
}

pub fn filter(args: &FilterArgs) -> Result<FilterStats> {
    let mut manifest = RunManifest::start("filter", args)?;
    let lex = Arc::new(load_lexicon(args.lexicon_dir.as_deref())?);
    let swag = match args.format {
        InputFormat::Swag => true,
        InputFormat::Plain => false,
        InputFormat::Auto => args
            .input
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv")),
    };
    let Ingested { records, skipped } = if swag {
        ingest_swag(&args.input)
    } else {
        ingest_plain(&args.input)
    }?;
    if skipped > 0 {
        log::warn!("skipped {skipped} unusable rows in {}", args.input.display());
    }

    let coref: Box<dyn CorefProvider> = if args.coref == "heuristic" {
        Box::new(HeuristicCoref::new(lex.clone()))
    } else if args.coref.starts_with("http://") || args.coref.starts_with("https://") {
        if !(args.coref_timeout > 0.0 && args.coref_timeout.is_finite()) {
            bail!("--coref-timeout must be positive");
        }
        Box::new(RemoteCoref::new(&args.coref, Duration::from_secs_f64(args.coref_timeout))?)
    } else {
        bail!("--coref must be `heuristic` or an http(s) URL, got {:?}", args.coref);
    };
    let cfg = FilterConfig {
        mask_token: args.mask_token.clone(),
        exclude_someone_antecedent: !args.allow_someone,
        require_coref_criteria: !args.no_coref,
        parallelism: args.threads.max(1),
    };
    let out = filter_corpus(&records, &lex, coref.as_ref(), &cfg);

    write_jsonl(&args.output, &out.accepted)?;
    manifest.inputs.push(args.input.clone());
    manifest.outputs.push(args.output.clone());
    if let Some(path) = &args.rejected {
        let texts: HashMap<&str, &str> = records
            .iter()
            .map(|r| (r.id.as_str(), r.text.as_str()))
            .collect();
        let rows: Vec<RejectedRecord> = out
            .rejected
            .iter()
            .map(|r| RejectedRecord {
                id: &r.id,
                text: texts.get(r.id.as_str()).copied().unwrap_or_default(),
                reason: r.reason,
            })
            .collect();
        write_jsonl(path, &rows)?;
        manifest.outputs.push(path.clone());
    }

    let s = &out.stats;
    eprintln!("sentences read            {}", s.total);
    eprintln!("single gendered pronoun   {}", s.single_pronoun);
    eprintln!("no other sex indicator    {}", s.no_other_indicator);
    eprintln!("coreference resolved      {}", s.coref_resolved);
    eprintln!("accepted                  {}", s.accepted);
    if s.rejected_coref_error > 0 {
        log::warn!(
            "{} sentences rejected because coreference failed ({})",
            s.rejected_coref_error,
            args.coref
        );
    }
    manifest.stats = serde_json::to_value(s)?;
    manifest.finish(&args.output)?;
    Ok(out.stats.clone())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditStats {
    pub samples: usize,
    pub queried: usize,
    pub reused: usize,
    pub failed: usize,
}

fn build_provider(args: &AuditArgs) -> Result<Box<dyn FillMaskProvider>> {
    if let Some(path) = &args.stub_fixture {
        if args.endpoint.is_some() {
            log::info!("--stub-fixture given; ignoring the endpoint");
        }
        let tag = args.model_tag.clone().unwrap_or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "stub".to_owned())
        });
        return Ok(Box::new(StubProvider::from_path(path, tag)?));
    }
    let Some(url) = &args.endpoint else {
        bail!("either --endpoint (or GENDERPROBE_MLM_ENDPOINT) or --stub-fixture is required");
    };
    if !(args.timeout > 0.0 && args.timeout.is_finite()) {
        bail!("--timeout must be positive");
    }
    let tag = args.model_tag.clone().unwrap_or_else(|| url.clone());
    Ok(Box::new(HttpFillMask::new(
        url,
        tag,
        Duration::from_secs_f64(args.timeout),
        args.api_token.clone(),
    )?))
}

pub fn audit(args: &AuditArgs) -> Result<AuditStats> {
    let mut manifest = RunManifest::start("audit", args)?;
    let lex = load_lexicon(args.lexicon_dir.as_deref())?;
    let samples: Vec<MaskedSample> = read_jsonl(&args.input)?;
    let provider = build_provider(args)?;
    let mlm_cfg = MlmConfig {
        endpoint_url: args.endpoint.clone().unwrap_or_default(),
        mask_token: args.mask_token.clone(),
        top_k: args.top_k,
        timeout_secs: args.timeout,
        max_in_flight: args.max_in_flight,
    };
    let bias_cfg = BiasConfig {
        delta: args.delta,
        min_gender_prob: args.min_prob,
    };

    let mut done: HashMap<String, BiasResult> = HashMap::new();
    if args.resume && args.output.exists() {
        for r in read_jsonl::<BiasResult>(&args.output)? {
            if r.error.is_none() {
                done.insert(r.sample_id.clone(), r);
            }
        }
    }
    let todo: Vec<MaskedSample> = samples
        .iter()
        .filter(|s| !done.contains_key(&s.id))
        .cloned()
        .collect();
    let fresh = audit_corpus(&todo, provider.as_ref(), &mlm_cfg, &lex, &bias_cfg, &args.sample_mask)?;
    let failed: Vec<String> = fresh
        .iter()
        .filter(|r| r.error.is_some())
        .map(|r| r.sample_id.clone())
        .collect();
    if !todo.is_empty() && failed.len() == todo.len() {
        bail!(
            "all {} provider calls failed; first error: {}",
            todo.len(),
            fresh[0].error.as_deref().unwrap_or("unknown")
        );
    }
    let stats = AuditStats {
        samples: samples.len(),
        queried: todo.len(),
        reused: samples.len() - todo.len(),
        failed: failed.len(),
    };

    let mut fresh: HashMap<String, BiasResult> =
        fresh.into_iter().map(|r| (r.sample_id.clone(), r)).collect();
    let merged: Vec<BiasResult> = samples
        .iter()
        .filter_map(|s| done.remove(&s.id).or_else(|| fresh.remove(&s.id)))
        .collect();
    write_jsonl(&args.output, &merged)?;

    if stats.failed > 0 {
        log::warn!(
            "{} of {} samples failed and are marked Undetermined; rerun with --resume to retry them",
            stats.failed,
            stats.queried
        );
    }
    eprintln!(
        "{} samples: {} queried, {} reused, {} failed",
        stats.samples, stats.queried, stats.reused, stats.failed
    );
    manifest.inputs.push(args.input.clone());
    if let Some(p) = &args.stub_fixture {
        manifest.inputs.push(p.clone());
    }
    manifest.outputs.push(args.output.clone());
    manifest.stats = serde_json::to_value(&stats)?;
    manifest.failed_ids = failed;
    manifest.finish(&args.output)?;
    Ok(stats)
}

pub fn report(args: &ReportArgs) -> Result<AuditSummary> {
    let mut manifest = RunManifest::start("report", args)?;
    let results: Vec<BiasResult> = read_jsonl(&args.input)?;
    let summary = summarize(&results);
    let hist = histogram(&results, args.bin_width)?;
    export(&summary, &hist, ExportFormat::Json, &args.output)?;
    manifest.inputs.push(args.input.clone());
    manifest.outputs.push(args.output.clone());
    if let Some(csv) = &args.csv {
        export(&summary, &hist, ExportFormat::Csv, csv)?;
        manifest.outputs.push(csv.clone());
    }

    let avg = |v: Option<f64>| v.map_or_else(|| "-".to_owned(), |x| format!("{x:.3}"));
    println!("model        {}", summary.model_tag);
    println!("samples      {}", summary.n_total);
    println!("male         {} (mean score {})", summary.n_male, avg(summary.avg_male_score));
    println!("female       {} (mean score {})", summary.n_female, avg(summary.avg_female_score));
    println!("neutral      {}", summary.n_neutral);
    println!("undetermined {}", summary.n_undetermined);
    manifest.stats = serde_json::to_value(&summary)?;
    manifest.finish(&args.output)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatOutcome {
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub exhaustive: Option<bool>,
    pub partitions: Option<u64>,
    pub seed: u64,
}

pub fn weat(args: &WeatArgs) -> Result<WeatOutcome> {
    let mut manifest = RunManifest::start("weat", args)?;
    let spec = WeatSpec::from_path(&args.spec)?;
    let table = load_vectors(&args.vectors)?;
    let outcome = if args.permutations == 0 {
        WeatOutcome {
            statistic: weat_statistic(&spec, &table)?,
            p_value: None,
            exhaustive: None,
            partitions: None,
            seed: args.seed,
        }
    } else {
        let t = permutation_pvalue(&spec, &table, args.permutations, args.seed)?;
        WeatOutcome {
            statistic: t.statistic,
            p_value: Some(t.p_value),
            exhaustive: Some(t.exhaustive),
            partitions: Some(t.partitions),
            seed: args.seed,
        }
    };
    println!("statistic {}", outcome.statistic);
    if let Some(p) = outcome.p_value {
        println!("p-value   {p}");
    }
    if let Some(out) = &args.output {
        let body = serde_json::to_vec_pretty(&outcome)?;
        write_atomic(out, |w| {
            w.write_all(&body)?;
            w.write_all(b"\n")
        })
        .with_context(|| format!("writing {}", out.display()))?;
        manifest.inputs = vec![args.spec.clone(), args.vectors.clone()];
        manifest.outputs.push(out.clone());
        manifest.finish(out)?;
    }
    Ok(outcome)
}

pub fn annotation_report(args: &AccuracyArgs) -> Result<AnnotationReport> {
    let report = match &args.samples {
        Some(samples_path) => {
            let samples: Vec<MaskedSample> = read_jsonl(samples_path)?;
            let labels: Vec<AnnotationLabel> = read_jsonl(&args.labels)?;
            let mut store = LabelStore::new(samples)?;
            for label in labels {
                if let Err(e) = store.record_label(label) {
                    log::warn!("{}: {e}", args.labels.display());
                }
            }
            store.report(args.quorum)?
        }
        None => {
            let labels: Vec<AnnotationLabel> = read_jsonl(&args.labels)?;
            let consensus = consensus_from_log(&labels, args.quorum)?;
            let n_biased = consensus.iter().filter(|c| c.is_biased).count();
            AnnotationReport {
                quorum: args.quorum,
                n_samples: consensus.len(),
                n_biased,
                accuracy: accuracy(&consensus).ok(),
                consensus,
            }
        }
    };
    Ok(report)
}

pub fn annotate_accuracy(args: &AccuracyArgs) -> Result<AnnotationReport> {
    let mut manifest = RunManifest::start("annotate accuracy", args)?;
    let report = annotation_report(args)?;
    let Some(acc) = report.accuracy else {
        bail!("no samples to score in {}", args.labels.display());
    };
    println!(
        "accuracy {:.2}% ({} of {} samples with at least {} biased votes)",
        acc * 100.0,
        report.n_biased,
        report.n_samples,
        report.quorum
    );
    if let Some(out) = &args.output {
        let body = serde_json::to_vec_pretty(&report)?;
        write_atomic(out, |w| {
            w.write_all(&body)?;
            w.write_all(b"\n")
        })
        .with_context(|| format!("writing {}", out.display()))?;
        manifest.inputs.push(args.labels.clone());
        manifest.inputs.extend(args.samples.clone());
        manifest.outputs.push(out.clone());
        manifest.finish(out)?;
    }
    Ok(report)
}
