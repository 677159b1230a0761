//! Evaluation of a pairwise score as a same-family classifier.
//!
//! Every pair of labelled domains gets a score and a ground-truth flag
//! (same family, or same superfamily). Sweeping a decision threshold over
//! the scores gives confusion counts, from which the MCC curve, the ROC
//! curve and sensitivity/specificity follow. The posterior curve bins the
//! scores and reports the fraction of matching pairs per bin.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rayon::prelude::*;

use crate::features::FeatureVector;
use crate::scoring::{euclidean, ScoreError};
use crate::structure::{LabelTable, MatchLevel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("no scored pairs")]
    NoPairs,
    #[error("all scores are equal ({0}); cannot bin")]
    DegenerateRange(f64),
    #[error("need at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("pairs contain only {0}; ROC needs both classes")]
    SingleClass(&'static str),
    #[error("{0} is undefined: no {1}")]
    UndefinedRate(&'static str, &'static str),
    #[error("non-finite score for pair {0} / {1}")]
    NonFiniteScore(String, String),
    #[error("no label for {0:?}")]
    MissingLabel(String),
    #[error("score file line {line}: {reason}")]
    BadScoreLine { line: usize, reason: String },
    #[error("unknown polarity {0:?} (expected lower or higher)")]
    BadPolarity(String),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

/// Direction in which a score indicates similarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    /// Distances: smaller is more similar.
    LowerIsSimilar,
    /// Similarity scores such as TM-score: larger is more similar.
    HigherIsSimilar,
}

impl Polarity {
    /// Whether a pair with `score` is predicted similar at threshold `t`.
    #[inline]
    pub fn predicts_match(self, score: f64, t: f64) -> bool {
        match self {
            Polarity::LowerIsSimilar => score <= t,
            Polarity::HigherIsSimilar => score >= t,
        }
    }

    /// Maps scores to a key where smaller always means more similar.
    #[inline]
    fn key(self, score: f64) -> f64 {
        match self {
            Polarity::LowerIsSimilar => score,
            Polarity::HigherIsSimilar => -score,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Polarity::LowerIsSimilar => "lower",
            Polarity::HigherIsSimilar => "higher",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Polarity {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lower" => Ok(Polarity::LowerIsSimilar),
            "higher" => Ok(Polarity::HigherIsSimilar),
            _ => Err(EvalError::BadPolarity(s.to_string())),
        }
    }
}

/// A labelled pair with its score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair {
    pub id_a: Arc<str>,
    pub id_b: Arc<str>,
    pub score: f64,
    pub is_match: bool,
}

impl ScoredPair {
    pub fn new(id_a: &str, id_b: &str, score: f64, is_match: bool) -> Self {
        Self { id_a: id_a.into(), id_b: id_b.into(), score, is_match }
    }
}

/// Binary confusion counts at one threshold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub true_pos: u64,
    pub true_neg: u64,
    pub false_pos: u64,
    pub false_neg: u64,
}

impl ConfusionCounts {
    pub fn new(true_pos: u64, true_neg: u64, false_pos: u64, false_neg: u64) -> Self {
        Self { true_pos, true_neg, false_pos, false_neg }
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.true_neg + self.false_pos + self.false_neg
    }

    pub fn predicted_positive(&self) -> u64 {
        self.true_pos + self.false_pos
    }
}

fn check_pairs(pairs: &[ScoredPair]) -> Result<(), EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::NoPairs);
    }
    if let Some(p) = pairs.iter().find(|p| !p.score.is_finite()) {
        return Err(EvalError::NonFiniteScore(p.id_a.to_string(), p.id_b.to_string()));
    }
    Ok(())
}

pub fn confusion_at_threshold(
    pairs: &[ScoredPair],
    t: f64,
    polarity: Polarity,
) -> Result<ConfusionCounts, EvalError> {
    check_pairs(pairs)?;
    let mut c = ConfusionCounts::default();
    for p in pairs {
        match (polarity.predicts_match(p.score, t), p.is_match) {
            (true, true) => c.true_pos += 1,
            (true, false) => c.false_pos += 1,
            (false, true) => c.false_neg += 1,
            (false, false) => c.true_neg += 1,
        }
    }
    Ok(c)
}

/// Matthews correlation coefficient; 0 when any marginal is empty.
pub fn mcc(c: &ConfusionCounts) -> f64 {
    let (tp, tn, fp, fn_) = (
        c.true_pos as u128,
        c.true_neg as u128,
        c.false_pos as u128,
        c.false_neg as u128,
    );
    let denom = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    if denom == 0 {
        return 0.0;
    }
    let (pos, neg) = (tp * tn, fp * fn_);
    let num = if pos >= neg { (pos - neg) as f64 } else { -((neg - pos) as f64) };
    (num / (denom as f64).sqrt()).clamp(-1.0, 1.0)
}

/// `(tp / (tp + fn), tn / (tn + fp))`.
pub fn sensitivity_specificity(c: &ConfusionCounts) -> Result<(f64, f64), EvalError> {
    if c.true_pos + c.false_neg == 0 {
        return Err(EvalError::UndefinedRate("sensitivity", "actual positives"));
    }
    if c.true_neg + c.false_pos == 0 {
        return Err(EvalError::UndefinedRate("specificity", "actual negatives"));
    }
    Ok((
        c.true_pos as f64 / (c.true_pos + c.false_neg) as f64,
        c.true_neg as f64 / (c.true_neg + c.false_pos) as f64,
    ))
}

/// Scores sorted from most to least similar, with running match counts.
struct SortedScores {
    keys: Vec<f64>,
    /// `cum_match[i]` = matches among the first `i` keys.
    cum_match: Vec<u64>,
    positives: u64,
    negatives: u64,
}

impl SortedScores {
    fn new(pairs: &[ScoredPair], polarity: Polarity) -> Self {
        let mut keyed: Vec<(f64, bool)> =
            pairs.iter().map(|p| (polarity.key(p.score), p.is_match)).collect();
        keyed.par_sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut cum_match = Vec::with_capacity(keyed.len() + 1);
        cum_match.push(0);
        let mut acc = 0;
        for &(_, m) in &keyed {
            acc += m as u64;
            cum_match.push(acc);
        }
        let n = keyed.len() as u64;
        Self {
            keys: keyed.into_iter().map(|(k, _)| k).collect(),
            cum_match,
            positives: acc,
            negatives: n - acc,
        }
    }

    /// Counts when the first `k` sorted pairs are predicted positive.
    fn counts_at(&self, k: usize) -> ConfusionCounts {
        let tp = self.cum_match[k];
        let fp = k as u64 - tp;
        ConfusionCounts {
            true_pos: tp,
            false_pos: fp,
            false_neg: self.positives - tp,
            true_neg: self.negatives - fp,
        }
    }

    /// Number of pairs predicted positive at threshold key `tk`.
    fn predicted_at(&self, tk: f64) -> usize {
        self.keys.partition_point(|&k| k <= tk)
    }
}

/// `n` evenly spaced thresholds from the smallest to the largest score.
pub fn threshold_grid(pairs: &[ScoredPair], n: usize) -> Vec<f64> {
    let (lo, hi) = score_range(pairs);
    if n == 0 || pairs.is_empty() {
        return Vec::new();
    }
    if n == 1 || lo == hi {
        return vec![lo; n.min(1)];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
        .collect()
}

fn score_range(pairs: &[ScoredPair]) -> (f64, f64) {
    pairs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.score), hi.max(p.score))
    })
}

/// MCC (with its confusion counts) at one threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MccPoint {
    pub threshold: f64,
    pub mcc: f64,
    pub counts: ConfusionCounts,
}

/// MCC at each threshold, equal to calling [`confusion_at_threshold`] and
/// [`mcc`] per threshold but sorting the scores only once.
pub fn mcc_curve(
    pairs: &[ScoredPair],
    polarity: Polarity,
    thresholds: &[f64],
) -> Result<Vec<MccPoint>, EvalError> {
    check_pairs(pairs)?;
    let sorted = SortedScores::new(pairs, polarity);
    Ok(thresholds
        .iter()
        .map(|&t| {
            let counts = sorted.counts_at(sorted.predicted_at(polarity.key(t)));
            MccPoint { threshold: t, mcc: mcc(&counts), counts }
        })
        .collect())
}

/// One equal-width score bin of the posterior curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorBin {
    pub center: f64,
    pub lower: f64,
    pub upper: f64,
    pub count: u64,
    pub matches: u64,
    /// `matches / count`, `None` for an empty bin.
    pub posterior: Option<f64>,
}

/// Empirical P(match | score in bin) over `num_bins` equal-width bins
/// spanning the observed score range. Empty bins stay undefined.
pub fn pvalue_curve(
    pairs: &[ScoredPair],
    _polarity: Polarity,
    num_bins: usize,
) -> Result<Vec<PosteriorBin>, EvalError> {
    if num_bins < 2 {
        return Err(EvalError::TooFewBins(num_bins));
    }
    check_pairs(pairs)?;
    let (lo, hi) = score_range(pairs);
    if lo == hi {
        return Err(EvalError::DegenerateRange(lo));
    }
    let width = (hi - lo) / num_bins as f64;
    let mut count = vec![0u64; num_bins];
    let mut matches = vec![0u64; num_bins];
    for p in pairs {
        let b = (((p.score - lo) / width) as usize).min(num_bins - 1);
        count[b] += 1;
        matches[b] += p.is_match as u64;
    }
    Ok((0..num_bins)
        .map(|b| PosteriorBin {
            center: lo + (b as f64 + 0.5) * width,
            lower: lo + b as f64 * width,
            upper: if b == num_bins - 1 { hi } else { lo + (b + 1) as f64 * width },
            count: count[b],
            matches: matches[b],
            posterior: (count[b] > 0).then(|| matches[b] as f64 / count[b] as f64),
        })
        .collect())
}

/// One ROC vertex; `threshold` is the decision value that produces it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// ROC staircase over every distinct score, from (0, 0) to (1, 1).
///
/// Tied scores enter together, producing a diagonal segment.
pub fn roc_curve(pairs: &[ScoredPair], polarity: Polarity) -> Result<Vec<RocPoint>, EvalError> {
    check_pairs(pairs)?;
    let sorted = SortedScores::new(pairs, polarity);
    if sorted.positives == 0 {
        return Err(EvalError::SingleClass("non-matching pairs"));
    }
    if sorted.negatives == 0 {
        return Err(EvalError::SingleClass("matching pairs"));
    }
    let (p, n) = (sorted.positives as f64, sorted.negatives as f64);
    let from_key = |k: f64| match polarity {
        Polarity::LowerIsSimilar => k,
        Polarity::HigherIsSimilar => -k,
    };
    let mut curve = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: from_key(f64::NEG_INFINITY),
    }];
    let keys = &sorted.keys;
    let mut i = 0;
    while i < keys.len() {
        let mut j = i + 1;
        while j < keys.len() && keys[j] == keys[i] {
            j += 1;
        }
        let c = sorted.counts_at(j);
        curve.push(RocPoint {
            fpr: c.false_pos as f64 / n,
            tpr: c.true_pos as f64 / p,
            threshold: from_key(keys[i]),
        });
        i = j;
    }
    Ok(curve)
}

/// Trapezoidal area under a ROC curve.
pub fn auc(curve: &[RocPoint]) -> f64 {
    curve
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) * 0.5)
        .sum()
}

/// Which pairs of a corpus to score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSelection {
    /// All `n(n−1)/2` unordered pairs.
    All,
    /// `count` distinct unordered pairs drawn uniformly with a seeded RNG.
    Sample { count: usize, seed: u64 },
}

/// Index pairs `(i, j)`, `i < j`, in row-major order.
pub fn select_pairs(n: usize, selection: PairSelection) -> Vec<(usize, usize)> {
    let total = n * n.saturating_sub(1) / 2;
    match selection {
        PairSelection::Sample { count, seed } if count < total => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut linear = rand::seq::index::sample(&mut rng, total, count).into_vec();
            linear.sort_unstable();
            let mut out = Vec::with_capacity(count);
            let (mut row, mut row_start) = (0usize, 0usize);
            for k in linear {
                while k >= row_start + (n - 1 - row) {
                    row_start += n - 1 - row;
                    row += 1;
                }
                out.push((row, row + 1 + (k - row_start)));
            }
            out
        }
        _ => (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect(),
    }
}

/// Scores the selected pairs of `entries` and labels them at `level`.
pub fn score_corpus(
    entries: &[FeatureVector],
    labels: &LabelTable,
    level: MatchLevel,
    selection: PairSelection,
) -> Result<Vec<ScoredPair>, EvalError> {
    let resolved = entries
        .iter()
        .map(|e| {
            labels
                .get(&e.id)
                .map(|l| (Arc::<str>::from(e.id.as_str()), l))
                .ok_or_else(|| EvalError::MissingLabel(e.id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    select_pairs(entries.len(), selection)
        .into_par_iter()
        .map(|(i, j)| {
            let score = euclidean(&entries[i].values, &entries[j].values)?;
            Ok(ScoredPair {
                id_a: resolved[i].0.clone(),
                id_b: resolved[j].0.clone(),
                score,
                is_match: level.matches(resolved[i].1, resolved[j].1),
            })
        })
        .collect()
}

/// Parses an external `id_a,id_b,score` file; a non-numeric first line is
/// a header.
pub fn parse_score_file(text: &str) -> Result<Vec<(String, String, f64)>, EvalError> {
    let mut out = Vec::new();
    let mut first = true;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let is_first = std::mem::replace(&mut first, false);
        let bad = |reason: &str| EvalError::BadScoreLine { line: lineno + 1, reason: reason.into() };
        let fields: Vec<&str> = line.split([',', '\t']).map(str::trim).collect();
        let [a, b, s] = fields.as_slice() else {
            return Err(bad("expected id_a,id_b,score"));
        };
        match s.parse::<f64>() {
            Ok(score) if score.is_finite() => out.push((a.to_string(), b.to_string(), score)),
            Ok(_) => return Err(bad("non-finite score")),
            Err(_) if is_first => continue,
            Err(_) => return Err(bad("unparseable score")),
        }
    }
    Ok(out)
}

/// Attaches match flags to externally scored pairs.
pub fn label_pairs(
    scores: &[(String, String, f64)],
    labels: &LabelTable,
    level: MatchLevel,
) -> Result<Vec<ScoredPair>, EvalError> {
    scores
        .iter()
        .map(|(a, b, s)| {
            let la = labels.get(a).ok_or_else(|| EvalError::MissingLabel(a.clone()))?;
            let lb = labels.get(b).ok_or_else(|| EvalError::MissingLabel(b.clone()))?;
            Ok(ScoredPair::new(a, b, *s, level.matches(la, lb)))
        })
        .collect()
}

/// Headline numbers of an evaluation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub pairs: u64,
    pub matches: u64,
    pub auc: Result<f64, EvalError>,
    pub peak: MccPoint,
    pub sensitivity_specificity: Result<(f64, f64), EvalError>,
}

/// First threshold with the largest MCC.
pub fn peak_mcc(curve: &[MccPoint]) -> Option<MccPoint> {
    curve
        .iter()
        .copied()
        .reduce(|best, p| if p.mcc > best.mcc { p } else { best })
}

pub fn summarize(
    pairs: &[ScoredPair],
    polarity: Polarity,
    thresholds: &[f64],
) -> Result<Summary, EvalError> {
    let curve = mcc_curve(pairs, polarity, thresholds)?;
    let peak = peak_mcc(&curve).ok_or(EvalError::NoPairs)?;
    Ok(Summary {
        pairs: pairs.len() as u64,
        matches: pairs.iter().filter(|p| p.is_match).count() as u64,
        auc: roc_curve(pairs, polarity).map(|c| auc(&c)),
        sensitivity_specificity: sensitivity_specificity(&peak.counts),
        peak,
    })
}

fn header(out: &mut impl Write, x: &str, metric: &str, level: MatchLevel, polarity: Polarity, count: &str) -> io::Result<()> {
    writeln!(out, "{x},{metric}[{};{polarity}],{count}", level.name())
}

/// `threshold,mcc[...],predicted_positive`.
pub fn write_mcc_csv<W: Write>(
    mut out: W,
    curve: &[MccPoint],
    level: MatchLevel,
    polarity: Polarity,
) -> io::Result<()> {
    header(&mut out, "threshold", "mcc", level, polarity, "predicted_positive")?;
    for p in curve {
        writeln!(out, "{},{},{}", p.threshold, p.mcc, p.counts.predicted_positive())?;
    }
    out.flush()
}

/// `bin_center,posterior[...],pair_count`; empty bins print `NA`.
pub fn write_pvalue_csv<W: Write>(
    mut out: W,
    bins: &[PosteriorBin],
    level: MatchLevel,
    polarity: Polarity,
) -> io::Result<()> {
    header(&mut out, "bin_center", "posterior", level, polarity, "pair_count")?;
    for b in bins {
        match b.posterior {
            Some(p) => writeln!(out, "{},{},{}", b.center, p, b.count)?,
            None => writeln!(out, "{},NA,{}", b.center, b.count)?,
        }
    }
    out.flush()
}

/// `fpr,tpr[...],threshold`.
pub fn write_roc_csv<W: Write>(
    mut out: W,
    curve: &[RocPoint],
    level: MatchLevel,
    polarity: Polarity,
) -> io::Result<()> {
    header(&mut out, "fpr", "tpr", level, polarity, "threshold")?;
    for p in curve {
        writeln!(out, "{},{},{}", p.fpr, p.tpr, p.threshold)?;
    }
    out.flush()
}
