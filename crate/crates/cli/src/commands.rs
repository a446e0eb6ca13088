//! Subcommand implementations. Every output lands under the chosen output
//! directory with a deterministic filename, so reruns with a replay or
//! stub gateway are byte-identical.

use crate::config::{AggregationConfig, AnnotateConfig, GatewayMode};
use anyhow::{bail, Context, Result};
use cswitch_core::analysis::{
    aggregate_others, crosstab, normalize_within_columns, render_counts, render_percents,
    AggregationPolicy, ColumnAxis, CountTable, TableFormat,
};
use cswitch_core::annotator::{
    default_exemplars, read_records, write_records, AnnotationRecord, Annotator, Gateway,
    LiveGateway, RecordGateway, ReplayGateway, RuleStubGateway,
};
use cswitch_core::chart::emit_chart_data;
use cswitch_core::corpus::{Corpus, CorpusKind};
use cswitch_core::ingest::{filter_intrasentential, parse_corpus, serialize_corpus, TagMapping};
use cswitch_core::metrics::corpus_stats;
use cswitch_core::review::{read_sheet, sample_for_review, score_review, write_sheet};
use cswitch_core::taxonomy::{builtin_schema, export_schema, FieldKind};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

pub fn load_corpus(kind: CorpusKind, input: &Path) -> Result<Corpus> {
    let file = File::open(input)
        .with_context(|| format!("cannot open corpus file {}", input.display()))?;
    let mapping = TagMapping::builtin(kind);
    parse_corpus(BufReader::new(file), kind, &mapping)
        .with_context(|| format!("parsing {} failed", input.display()))
}

fn load_records(path: &Path) -> Result<Vec<AnnotationRecord>> {
    let file =
        File::open(path).with_context(|| format!("cannot open records file {}", path.display()))?;
    read_records(BufReader::new(file)).context("reading annotation records failed")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

pub fn cmd_ingest(kind: CorpusKind, input: &Path, out_dir: &Path, filter: bool) -> Result<()> {
    let corpus = load_corpus(kind, input)?;
    let corpus = if filter {
        filter_intrasentential(&corpus)
    } else {
        corpus
    };
    std::fs::create_dir_all(out_dir)?;
    let out_path = out_dir.join("corpus.jsonl");
    let mut writer = BufWriter::new(File::create(&out_path)?);
    serialize_corpus(&corpus, &mut writer)?;
    writer.flush()?;
    let tokens: usize = corpus.sentences.iter().map(|s| s.tokens.len()).sum();
    println!(
        "ingested {} sentences, {} tokens -> {}",
        corpus.len(),
        tokens,
        out_path.display()
    );
    Ok(())
}

pub fn cmd_stats(kind: CorpusKind, input: &Path, out_dir: Option<&Path>) -> Result<()> {
    let corpus = load_corpus(kind, input)?;
    let stats = corpus_stats(&corpus)?;
    let block = stats.render_block(kind);
    print!("{block}");
    if let Some(out_dir) = out_dir {
        std::fs::create_dir_all(out_dir)?;
        write_file(&out_dir.join("stats.txt"), &block)?;
        let mut csv = Vec::new();
        stats.write_csv(kind, &mut csv)?;
        write_file(&out_dir.join("stats.csv"), &String::from_utf8(csv)?)?;
    }
    Ok(())
}

pub fn cmd_annotate(
    kind: CorpusKind,
    input: &Path,
    out_dir: &Path,
    config: &AnnotateConfig,
) -> Result<()> {
    let corpus = load_corpus(kind, input)?;
    let gateway: Box<dyn Gateway> = match config.mode {
        GatewayMode::Stub => Box::new(RuleStubGateway),
        GatewayMode::Replay => Box::new(ReplayGateway::load(
            config.cassette.as_deref().expect("validated by config"),
        )?),
        GatewayMode::Live => Box::new(LiveGateway::new(
            config.gateway_url.clone().expect("validated by config"),
            config.gateway_token.clone().expect("validated by config"),
        )),
        GatewayMode::Record => {
            let live = LiveGateway::new(
                config.gateway_url.clone().expect("validated by config"),
                config.gateway_token.clone().expect("validated by config"),
            );
            Box::new(RecordGateway::create(
                live,
                config.cassette.as_deref().expect("validated by config"),
            )?)
        }
    };

    let schema = builtin_schema(kind);
    let annotator = Annotator::new(
        &schema,
        default_exemplars(kind),
        config.params.clone(),
        config.policy.clone(),
    );

    std::fs::create_dir_all(out_dir)?;
    let records_path = out_dir.join("records.jsonl");
    let failures_path = out_dir.join("failures.jsonl");
    let mut records_out = BufWriter::new(File::create(&records_path)?);
    let mut failures_out = BufWriter::new(File::create(&failures_path)?);

    let mut total_records = 0usize;
    let mut total_failures = 0usize;
    let mut aborted: Option<String> = None;
    // batch_size is the checkpointing unit: results are flushed after each
    // chunk so an aborted run keeps its partial output.
    for chunk in corpus.sentences.chunks(config.policy.batch_size) {
        let outcome = annotator.annotate_batch(chunk, gateway.as_ref());
        write_records(&outcome.records, &mut records_out)?;
        for failure in &outcome.failures {
            let line = serde_json::to_string(failure)?;
            writeln!(failures_out, "{line}")?;
        }
        records_out.flush()?;
        failures_out.flush()?;
        total_records += outcome.records.len();
        total_failures += outcome.failures.len();
        if let Some(reason) = outcome.aborted {
            aborted = Some(reason);
            break;
        }
    }

    println!(
        "annotated {total_records} sentences, {total_failures} failures -> {}",
        records_path.display()
    );
    if let Some(reason) = aborted {
        bail!("gateway unavailable, run aborted with partial results: {reason}");
    }
    Ok(())
}

/// Keeps the n largest rows of an already-sorted table (chart trimming, as
/// opposed to aggregation into Others).
fn trim_top_rows(table: &CountTable, n: usize) -> CountTable {
    if table.cells.len() <= n {
        return table.clone();
    }
    CountTable::new(
        cswitch_core::analysis::Axis {
            name: table.row_axis.name.clone(),
            labels: table.row_axis.labels[..n].to_vec(),
        },
        table.col_axis.clone(),
        table.cells[..n].to_vec(),
        table.excluded,
        table.excluded_note.clone(),
    )
}

fn table_stem(table: &CountTable) -> String {
    format!("{}_by_{}", table.row_axis.name, table.col_axis.name)
}

fn emit_table_set(out_dir: &Path, table: &CountTable) -> Result<()> {
    let stem = table_stem(table);
    write_file(
        &out_dir.join(format!("{stem}.counts.csv")),
        &render_counts(table, TableFormat::Csv),
    )?;
    let percents = normalize_within_columns(table);
    write_file(
        &out_dir.join(format!("{stem}.percent.csv")),
        &render_percents(&percents, TableFormat::Csv),
    )?;
    write_file(
        &out_dir.join(format!("{stem}.percent.md")),
        &render_percents(&percents, TableFormat::Markdown),
    )?;
    Ok(())
}

fn emit_chart_set(out_dir: &Path, table: &CountTable) -> Result<()> {
    if table.cells.is_empty() {
        return Ok(());
    }
    let stem = table_stem(table);
    let chart = emit_chart_data(table)?;
    write_file(&out_dir.join(format!("{stem}.svg")), &chart.svg)?;
    write_file(&out_dir.join(format!("{stem}.csv")), &chart.csv)?;
    Ok(())
}

pub fn cmd_analyze(
    kind: CorpusKind,
    corpus_path: &Path,
    records_path: &Path,
    out_dir: &Path,
    aggregation: &AggregationConfig,
) -> Result<()> {
    let corpus = load_corpus(kind, corpus_path)?;
    let records = load_records(records_path)?;
    std::fs::create_dir_all(out_dir)?;

    let schema = builtin_schema(kind);
    write_file(
        &out_dir.join(format!("schema_{}.txt", kind.as_str())),
        &export_schema(&schema),
    )?;

    match kind {
        CorpusKind::Miami => {
            let topics = crosstab(&records, &corpus, FieldKind::MiamiTopic, ColumnAxis::Gender)?;
            emit_table_set(out_dir, &topics)?;
            let functions = crosstab(
                &records,
                &corpus,
                FieldKind::MiamiFunction,
                ColumnAxis::Gender,
            )?;
            emit_table_set(out_dir, &functions)?;

            let topic_dom = crosstab(
                &records,
                &corpus,
                FieldKind::MiamiTopic,
                ColumnAxis::Dominance,
            )?;
            emit_chart_set(out_dir, &topic_dom)?;
            let function_dom = crosstab(
                &records,
                &corpus,
                FieldKind::MiamiFunction,
                ColumnAxis::Dominance,
            )?;
            emit_chart_set(out_dir, &function_dom)?;
        }
        CorpusKind::GuaSpa => {
            let genres = crosstab(&records, &corpus, FieldKind::Genre, ColumnAxis::Formality)?;
            let genres_agg =
                aggregate_others(&genres, &AggregationPolicy::top_n(aggregation.genre_top_n));
            emit_table_set(out_dir, &genres_agg)?;

            let topics = crosstab(
                &records,
                &corpus,
                FieldKind::GuaTopic,
                ColumnAxis::Formality,
            )?;
            let topics_agg = aggregate_others(
                &topics,
                &AggregationPolicy::min_total(aggregation.topic_min_total),
            );
            emit_table_set(out_dir, &topics_agg)?;

            let genre_dom = crosstab(&records, &corpus, FieldKind::Genre, ColumnAxis::Dominance)?;
            emit_chart_set(
                out_dir,
                &trim_top_rows(&genre_dom, aggregation.chart_genre_top_n),
            )?;
            let topic_dom = crosstab(
                &records,
                &corpus,
                FieldKind::GuaTopic,
                ColumnAxis::Dominance,
            )?;
            emit_chart_set(
                out_dir,
                &trim_top_rows(&topic_dom, aggregation.chart_topic_top_n),
            )?;
        }
    }
    println!("analysis written to {}", out_dir.display());
    Ok(())
}

pub fn cmd_review_sample(
    kind: CorpusKind,
    corpus_path: &Path,
    records_path: &Path,
    n: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let corpus = load_corpus(kind, corpus_path)?;
    let records = load_records(records_path)?;
    let sheet = sample_for_review(&records, &corpus, n, seed)?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut writer = BufWriter::new(File::create(out)?);
    write_sheet(&sheet, &mut writer)?;
    writer.flush()?;
    println!(
        "review sheet with {} rows -> {}",
        sheet.rows.len(),
        out.display()
    );
    Ok(())
}

pub fn cmd_review_score(sheet_path: &Path) -> Result<()> {
    let file = File::open(sheet_path)
        .with_context(|| format!("cannot open sheet {}", sheet_path.display()))?;
    let sheet = read_sheet(BufReader::new(file))?;
    let report = score_review(&sheet)?;
    print!("{}", report.render_block());
    Ok(())
}

pub fn cmd_report(
    kind: CorpusKind,
    corpus_path: &Path,
    records_path: &Path,
    out_dir: &Path,
    aggregation: &AggregationConfig,
) -> Result<()> {
    cmd_stats(kind, corpus_path, Some(out_dir))?;
    cmd_analyze(kind, corpus_path, records_path, out_dir, aggregation)?;
    Ok(())
}
