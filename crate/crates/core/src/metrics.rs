//! Corpus-level statistics and sentence-level dominance classification.
//!
//! All functions are pure over immutable inputs. Internal values keep full
//! precision; rounding (half-up to one decimal) happens only at display
//! time.

use crate::corpus::{CoreLangTag, Corpus, DominanceClass, Sentence};
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("corpus is empty")]
    EmptyCorpus,
}

/// Rounds half-up to one decimal, for display only.
pub fn round1(value: f64) -> f64 {
    (value * 10.0).round() / 10.0
}

/// Summary statistics for one corpus.
#[derive(Debug, Clone, Serialize)]
pub struct CorpusStats {
    pub sentence_count: usize,
    pub token_count: usize,
    pub avg_tokens_per_sentence: f64,
    /// Percent of all tokens per tag; every tag legal for the corpus kind
    /// appears, possibly at 0.
    pub proportions: BTreeMap<CoreLangTag, f64>,
    /// Mean adjacent core-language changes per sentence.
    pub avg_switch_density: f64,
}

/// Each tag's share of total tokens, as percent. Every tag legal for the
/// corpus kind appears in the result.
pub fn language_proportions(corpus: &Corpus) -> Result<BTreeMap<CoreLangTag, f64>, MetricsError> {
    if corpus.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let mut counts: BTreeMap<CoreLangTag, usize> =
        corpus.kind.legal_tags().iter().map(|&t| (t, 0)).collect();
    let mut total = 0usize;
    for sentence in &corpus.sentences {
        for token in &sentence.tokens {
            *counts.entry(token.core).or_insert(0) += 1;
            total += 1;
        }
    }
    Ok(counts
        .into_iter()
        .map(|(tag, n)| (tag, n as f64 / total as f64 * 100.0))
        .collect())
}

pub fn avg_tokens_per_sentence(corpus: &Corpus) -> Result<f64, MetricsError> {
    if corpus.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let tokens: usize = corpus.sentences.iter().map(|s| s.tokens.len()).sum();
    Ok(tokens as f64 / corpus.sentences.len() as f64)
}

/// Number of adjacent differing pairs in the subsequence of core-language
/// tokens. Non-content and ambiguous tokens are transparent: they are
/// skipped and do not break adjacency, so `[spa, punc, eng]` counts one
/// switch, not two.
pub fn switch_points(sentence: &Sentence) -> usize {
    let mut switches = 0;
    let mut previous: Option<CoreLangTag> = None;
    for token in &sentence.tokens {
        if !token.core.is_core_language() {
            continue;
        }
        if let Some(prev) = previous {
            if prev != token.core {
                switches += 1;
            }
        }
        previous = Some(token.core);
    }
    switches
}

/// Mean of [`switch_points`] over all sentences.
pub fn avg_switch_density(corpus: &Corpus) -> Result<f64, MetricsError> {
    if corpus.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let total: usize = corpus.sentences.iter().map(switch_points).sum();
    Ok(total as f64 / corpus.sentences.len() as f64)
}

/// Classifies a sentence by strict majority of core-language tokens.
/// Ambiguous and non-content tokens are ignored; equality (including no
/// core-language tokens at all) yields `Balanced`.
pub fn dominant_language(sentence: &Sentence) -> DominanceClass {
    let mut spa = 0usize;
    let mut eng = 0usize;
    let mut gn = 0usize;
    for token in &sentence.tokens {
        match token.core {
            CoreLangTag::Spa => spa += 1,
            CoreLangTag::Eng => eng += 1,
            CoreLangTag::Gn => gn += 1,
            _ => {}
        }
    }
    let top = spa.max(eng).max(gn);
    if top == 0 {
        return DominanceClass::Balanced;
    }
    let winners = [spa, eng, gn].iter().filter(|&&n| n == top).count();
    if winners > 1 {
        return DominanceClass::Balanced;
    }
    if spa == top {
        DominanceClass::SpanishDominant
    } else if eng == top {
        DominanceClass::EnglishDominant
    } else {
        DominanceClass::GuaraniDominant
    }
}

/// Bundles sentence count, token count, averages, proportions and switch
/// density for one corpus.
pub fn corpus_stats(corpus: &Corpus) -> Result<CorpusStats, MetricsError> {
    let proportions = language_proportions(corpus)?;
    Ok(CorpusStats {
        sentence_count: corpus.sentences.len(),
        token_count: corpus.sentences.iter().map(|s| s.tokens.len()).sum(),
        avg_tokens_per_sentence: avg_tokens_per_sentence(corpus)?,
        proportions,
        avg_switch_density: avg_switch_density(corpus)?,
    })
}

impl CorpusStats {
    /// Flat key/value block, one `key = value` line per statistic, with
    /// proportions in the corpus kind's reporting order.
    pub fn render_block(&self, kind: crate::corpus::CorpusKind) -> String {
        let mut out = String::new();
        out.push_str(&format!("kind = {}\n", kind.as_str()));
        out.push_str(&format!("sentences = {}\n", self.sentence_count));
        out.push_str(&format!("tokens = {}\n", self.token_count));
        out.push_str(&format!(
            "avg_tokens_per_sentence = {:.1}\n",
            round1(self.avg_tokens_per_sentence)
        ));
        out.push_str(&format!(
            "avg_switch_density = {:.1}\n",
            round1(self.avg_switch_density)
        ));
        for tag in kind.legal_tags() {
            let pct = self.proportions.get(tag).copied().unwrap_or(0.0);
            out.push_str(&format!(
                "proportion.{} = {:.1}\n",
                tag.as_str(),
                round1(pct)
            ));
        }
        out
    }

    /// Machine-readable CSV: a header row and a single value row.
    pub fn write_csv<W: Write>(
        &self,
        kind: crate::corpus::CorpusKind,
        mut writer: W,
    ) -> std::io::Result<()> {
        let mut header = vec![
            "kind".to_string(),
            "sentences".to_string(),
            "tokens".to_string(),
            "avg_tokens_per_sentence".to_string(),
            "avg_switch_density".to_string(),
        ];
        let mut row = vec![
            kind.as_str().to_string(),
            self.sentence_count.to_string(),
            self.token_count.to_string(),
            format!("{:.4}", self.avg_tokens_per_sentence),
            format!("{:.4}", self.avg_switch_density),
        ];
        for tag in kind.legal_tags() {
            header.push(format!("prop_{}", tag.as_str()));
            let pct = self.proportions.get(tag).copied().unwrap_or(0.0);
            row.push(format!("{:.4}", pct));
        }
        writeln!(writer, "{}", header.join(","))?;
        writeln!(writer, "{}", row.join(","))
    }
}
