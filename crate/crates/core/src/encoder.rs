//! Translation encoders built from alignment tables.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::info::{mutual_information, ConditionalDistribution, JointDistribution, ProbVector};
use crate::meaning::{joint_wu, BeliefModel};

/// Literal used by the aligner for a source term with no target counterpart.
pub const ZERO_ALIGNMENT: &str = "None";

const REQUIRED_COLUMNS: [&str; 5] = ["id", "meaning_key", "source_term", "target_language", "target_term"];

/// Lowercases and collapses runs of whitespace. Punctuation is kept.
pub fn normalize_meaning_key(raw: &str) -> String {
    raw.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentRecord {
    pub meaning_key: String,
    pub source_term: String,
    pub target_term: String,
    pub target_language: String,
}

/// One record per attested alignment occurrence. Repeated
/// (meaning, target term) pairs are kept and counted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlignmentTable {
    pub records: Vec<AlignmentRecord>,
}

impl AlignmentTable {
    pub fn new(records: Vec<AlignmentRecord>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            if r.meaning_key.is_empty() || r.target_term.is_empty() {
                return Err(Error::validation(format!(
                    "record {i} has an empty meaning key or target term"
                )));
            }
        }
        Ok(AlignmentTable { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn meanings(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.meaning_key.as_str()).collect()
    }

    pub fn languages(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.target_language.as_str()).collect()
    }

    /// Occurrence counts per (meaning_key, target_term).
    pub fn counts(&self) -> BTreeMap<(&str, &str), usize> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            *counts
                .entry((r.meaning_key.as_str(), r.target_term.as_str()))
                .or_insert(0) += 1;
        }
        counts
    }

    pub fn for_language(&self, language: &str) -> AlignmentTable {
        AlignmentTable {
            records: self
                .records
                .iter()
                .filter(|r| r.target_language == language)
                .cloned()
                .collect(),
        }
    }

    pub fn restrict_meanings(&self, keep: &BTreeSet<String>) -> AlignmentTable {
        AlignmentTable {
            records: self
                .records
                .iter()
                .filter(|r| keep.contains(&r.meaning_key))
                .cloned()
                .collect(),
        }
    }

    /// Meanings aligned to a target term in every language of the table.
    pub fn cross_aligned_meanings(&self) -> BTreeSet<String> {
        let languages = self.languages();
        let mut seen: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for r in &self.records {
            seen.entry(r.meaning_key.as_str())
                .or_default()
                .insert(r.target_language.as_str());
        }
        seen.into_iter()
            .filter(|(_, langs)| langs.len() == languages.len())
            .map(|(m, _)| m.to_string())
            .collect()
    }
}

/// Parses the alignment TSV (header row; columns `id`, `meaning_key`,
/// `source_term`, `target_language`, `target_term` in any order).
pub fn parse_alignments<R: Read>(reader: R) -> Result<AlignmentTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .flexible(true)
        .has_headers(true)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].trim().is_empty()) {
        return Err(Error::EmptyInput("alignment file has no header".into()));
    }
    let mut index = BTreeMap::new();
    for name in REQUIRED_COLUMNS {
        let pos = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("missing column `{name}` in header"),
            })?;
        index.insert(name, pos);
    }

    let mut records = Vec::new();
    let mut rows = 0usize;
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        if row.len() == 1 && row[0].trim().is_empty() {
            continue;
        }
        rows += 1;
        let field = |name: &str| -> Result<&str> {
            row.get(index[name]).map(str::trim).ok_or_else(|| Error::Parse {
                line,
                message: format!("missing `{name}` column ({} fields found)", row.len()),
            })
        };
        let meaning_key = normalize_meaning_key(field("meaning_key")?);
        let source_term = field("source_term")?.to_string();
        let target_language = field("target_language")?.to_string();
        let target_term = field("target_term")?.to_string();
        if meaning_key.is_empty() {
            return Err(Error::Parse { line, message: "empty meaning_key".into() });
        }
        if target_term.is_empty() {
            return Err(Error::Parse { line, message: "empty target_term".into() });
        }
        if target_term == ZERO_ALIGNMENT {
            continue;
        }
        records.push(AlignmentRecord { meaning_key, source_term, target_term, target_language });
    }
    if rows == 0 {
        return Err(Error::EmptyInput("alignment file has no data rows".into()));
    }
    AlignmentTable::new(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriorKind {
    #[default]
    Uniform,
    /// p(m) proportional to the number of occurrences of m.
    Frequency,
}

/// A translation encoder: policy p(w|m) over a target lexicon, with prior p(m).
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    policy: ConditionalDistribution,
    prior: ProbVector,
    lexicon: Vec<String>,
    meanings: Vec<String>,
}

impl Encoder {
    pub fn new(
        policy: ConditionalDistribution,
        prior: ProbVector,
        lexicon: Vec<String>,
        meanings: Vec<String>,
    ) -> Result<Self> {
        if prior.len() != policy.nrows() || meanings.len() != policy.nrows() {
            return Err(Error::dimension(format!(
                "policy has {} rows, prior {} entries, {} meaning labels",
                policy.nrows(),
                prior.len(),
                meanings.len()
            )));
        }
        if lexicon.len() != policy.ncols() {
            return Err(Error::dimension(format!(
                "policy has {} columns but lexicon has {} terms",
                policy.ncols(),
                lexicon.len()
            )));
        }
        Ok(Encoder { policy, prior, lexicon, meanings })
    }

    /// Encoder with a uniform prior and generated labels `m0..`, `w0..`.
    pub fn from_policy(policy: ConditionalDistribution) -> Result<Self> {
        let prior = ProbVector::uniform(policy.nrows())?;
        let lexicon = (0..policy.ncols()).map(|j| format!("w{j}")).collect();
        let meanings = (0..policy.nrows()).map(|i| format!("m{i}")).collect();
        Encoder::new(policy, prior, lexicon, meanings)
    }

    pub fn with_prior(self, prior: ProbVector) -> Result<Self> {
        Encoder::new(self.policy, prior, self.lexicon, self.meanings)
    }

    pub fn with_meanings(self, meanings: Vec<String>) -> Result<Self> {
        Encoder::new(self.policy, self.prior, self.lexicon, meanings)
    }

    pub fn with_policy(&self, policy: ConditionalDistribution) -> Result<Self> {
        let lexicon = if policy.ncols() == self.lexicon.len() {
            self.lexicon.clone()
        } else {
            (0..policy.ncols()).map(|j| format!("w{j}")).collect()
        };
        Encoder::new(policy, self.prior.clone(), lexicon, self.meanings.clone())
    }

    pub fn policy(&self) -> &ConditionalDistribution {
        &self.policy
    }

    pub fn prior(&self) -> &ProbVector {
        &self.prior
    }

    pub fn lexicon(&self) -> &[String] {
        &self.lexicon
    }

    pub fn meanings(&self) -> &[String] {
        &self.meanings
    }

    pub fn meaning_count(&self) -> usize {
        self.meanings.len()
    }

    /// Joint p(m, w) = p(w|m) p(m).
    pub fn joint(&self) -> JointDistribution {
        JointDistribution::from_conditional(&self.prior, &self.policy)
            .expect("encoder dimensions checked at construction")
    }
}

/// Builds the empirical encoder of a single-language table: row m is the
/// frequency of each target term among occurrences of m. Meanings and
/// lexicon are sorted lexicographically.
pub fn build_encoder(table: &AlignmentTable, prior: PriorKind) -> Result<Encoder> {
    if table.is_empty() {
        return Err(Error::EmptyInput("alignment table has no records".into()));
    }
    let languages = table.languages();
    if languages.len() > 1 {
        return Err(Error::validation(format!(
            "table mixes target languages {languages:?}; build one encoder per language"
        )));
    }
    let meanings: Vec<String> = table.meanings().into_iter().map(String::from).collect();
    let lexicon: Vec<String> = table
        .records
        .iter()
        .map(|r| r.target_term.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(String::from)
        .collect();
    let meaning_pos: BTreeMap<&str, usize> =
        meanings.iter().enumerate().map(|(i, m)| (m.as_str(), i)).collect();
    let word_pos: BTreeMap<&str, usize> =
        lexicon.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();

    let mut counts = DMatrix::<f64>::zeros(meanings.len(), lexicon.len());
    for ((m, w), n) in table.counts() {
        counts[(meaning_pos[m], word_pos[w])] += n as f64;
    }
    let prior = match prior {
        PriorKind::Uniform => ProbVector::uniform(meanings.len())?,
        PriorKind::Frequency => {
            ProbVector::from_weights(counts.row_iter().map(|r| r.sum()).collect())?
        }
    };
    let policy = ConditionalDistribution::from_weights(counts)?;
    Encoder::new(policy, prior, lexicon, meanings)
}

/// Builds one encoder per target language.
pub fn build_encoders_by_language(
    table: &AlignmentTable,
    prior: PriorKind,
) -> Result<BTreeMap<String, Encoder>> {
    table
        .languages()
        .into_iter()
        .map(|lang| Ok((lang.to_string(), build_encoder(&table.for_language(lang), prior)?)))
        .collect()
}

/// I(M;W) in bits.
pub fn complexity(encoder: &Encoder) -> f64 {
    mutual_information(&encoder.joint())
}

/// I(W;U) in bits.
pub fn accuracy(encoder: &Encoder, beliefs: &BeliefModel) -> Result<f64> {
    Ok(mutual_information(&joint_wu(encoder, beliefs)?))
}

/// Slack allowed on the data-processing bound `accuracy <= complexity`.
pub const DPI_SLACK: f64 = 1e-9;

/// Location of an encoder in the information plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanePoint {
    pub complexity: f64,
    pub accuracy: f64,
    pub label: String,
}

impl PlanePoint {
    pub fn new(label: impl Into<String>, complexity: f64, accuracy: f64) -> Result<Self> {
        if !(accuracy >= -DPI_SLACK && accuracy <= complexity + DPI_SLACK) {
            return Err(Error::validation(format!(
                "plane point violates 0 <= accuracy ({accuracy}) <= complexity ({complexity})"
            )));
        }
        Ok(PlanePoint { complexity, accuracy, label: label.into() })
    }

    pub fn evaluate(label: impl Into<String>, encoder: &Encoder, beliefs: &BeliefModel) -> Result<Self> {
        PlanePoint::new(label, complexity(encoder), accuracy(encoder, beliefs)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "id\tmeaning_key\tsource_term\ttarget_language\ttarget_term\n";

    fn table(rows: &[(&str, &str)]) -> AlignmentTable {
        let mut s = HEADER.to_string();
        for (i, (m, w)) in rows.iter().enumerate() {
            s.push_str(&format!("{i}\t{m}\tsur\ten\t{w}\n"));
        }
        parse_alignments(s.as_bytes()).unwrap()
    }

    #[test]
    fn parses_two_meanings() {
        let t = table(&[("le pilote prit place sur la passerelle", "on"), ("dans la ligne", "in")]);
        assert_eq!(t.meanings().len(), 2);
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn identical_context_is_one_meaning() {
        let t = table(&[("Sur  la table", "on"), ("sur la table", "onto")]);
        assert_eq!(t.meanings().len(), 1);
        let e = build_encoder(&t, PriorKind::Uniform).unwrap();
        assert_eq!(e.policy().row(0).as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn missing_column_names_line() {
        let s = format!("{HEADER}1\tctx\tsur\ten\ton\n2\tctx2\tsur\ten\n");
        match parse_alignments(s.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_rejected() {
        assert!(matches!(parse_alignments("".as_bytes()), Err(Error::EmptyInput(_))));
        assert!(matches!(parse_alignments(HEADER.as_bytes()), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn zero_alignments_are_skipped() {
        let t = table(&[("a", "on"), ("b", "None")]);
        assert_eq!(t.len(), 1);
        assert_eq!(t.meanings().into_iter().collect::<Vec<_>>(), vec!["a"]);
    }

    #[test]
    fn one_hot_rows_give_identity() {
        let t = table(&[("a", "x"), ("b", "y"), ("c", "z")]);
        let e = build_encoder(&t, PriorKind::Uniform).unwrap();
        assert_eq!(e.policy().matrix(), &DMatrix::<f64>::identity(3, 3));
        assert_eq!(e.prior().as_slice(), &[1.0 / 3.0; 3]);
    }

    #[test]
    fn empirical_frequencies() {
        let t = table(&[("a", "on"), ("a", "onto"), ("a", "on")]);
        let e = build_encoder(&t, PriorKind::Uniform).unwrap();
        assert_eq!(e.lexicon(), &["on".to_string(), "onto".to_string()]);
        let row = e.policy().row(0);
        assert!((row.as_slice()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((row.as_slice()[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn frequency_prior_weights_by_occurrence() {
        let t = table(&[("a", "on"), ("a", "on"), ("a", "in"), ("b", "in")]);
        let e = build_encoder(&t, PriorKind::Frequency).unwrap();
        assert_eq!(e.prior().as_slice(), &[0.75, 0.25]);
    }

    #[test]
    fn mixed_languages_rejected() {
        let s = format!("{HEADER}1\ta\tsur\ten\ton\n2\ta\tsur\tde\tauf\n");
        let t = parse_alignments(s.as_bytes()).unwrap();
        assert!(build_encoder(&t, PriorKind::Uniform).is_err());
        let per = build_encoders_by_language(&t, PriorKind::Uniform).unwrap();
        assert_eq!(per.keys().collect::<Vec<_>>(), vec!["de", "en"]);
    }

    #[test]
    fn cross_aligned_meanings_require_every_language() {
        let s = format!("{HEADER}1\ta\tsur\ten\ton\n2\ta\tsur\tde\tauf\n3\tb\tsur\ten\ton\n4\tb\tsur\tde\tNone\n");
        let t = parse_alignments(s.as_bytes()).unwrap();
        let keep = t.cross_aligned_meanings();
        assert_eq!(keep.into_iter().collect::<Vec<_>>(), vec!["a".to_string()]);
    }

    #[test]
    fn complexity_examples() {
        let id = Encoder::from_policy(ConditionalDistribution::identity(4).unwrap()).unwrap();
        assert!((complexity(&id) - 2.0).abs() < 1e-15);
        let constant = Encoder::from_policy(
            ConditionalDistribution::new(DMatrix::from_element(5, 1, 1.0)).unwrap(),
        )
        .unwrap();
        assert_eq!(complexity(&constant), 0.0);
    }

    #[test]
    fn plane_point_enforces_dpi() {
        assert!(PlanePoint::new("x", 1.0, 1.5).is_err());
        assert!(PlanePoint::new("x", 1.0, 1.0 + 1e-12).is_ok());
    }
}
