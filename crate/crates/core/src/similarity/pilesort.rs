use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use nalgebra::DMatrix;

use super::{SimilarityKind, SimilarityMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PileAssignment {
    pub participant_id: String,
    pub item_id: String,
    pub pile_id: String,
}

/// Pile-sorting results: every participant places every item in exactly one pile.
#[derive(Debug, Clone)]
pub struct PileSortDataset {
    items: Vec<String>,
    /// participant -> pile label per item (aligned with `items`)
    piles: BTreeMap<String, Vec<String>>,
}

impl PileSortDataset {
    pub fn new(assignments: Vec<PileAssignment>) -> Result<Self> {
        if assignments.is_empty() {
            return Err(Error::EmptyInput("pile-sort data has no assignments".into()));
        }
        let items: Vec<String> = assignments
            .iter()
            .map(|a| a.item_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let pos: BTreeMap<&str, usize> = items.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();

        let mut piles: BTreeMap<String, Vec<Option<String>>> = BTreeMap::new();
        for a in &assignments {
            let slots = piles
                .entry(a.participant_id.clone())
                .or_insert_with(|| vec![None; items.len()]);
            let slot = &mut slots[pos[a.item_id.as_str()]];
            if slot.is_some() {
                return Err(Error::validation(format!(
                    "participant `{}` assigns item `{}` more than once",
                    a.participant_id, a.item_id
                )));
            }
            *slot = Some(a.pile_id.clone());
        }
        let mut complete = BTreeMap::new();
        for (participant, slots) in piles {
            let missing: Vec<&str> = slots
                .iter()
                .zip(&items)
                .filter(|(s, _)| s.is_none())
                .map(|(_, id)| id.as_str())
                .collect();
            if !missing.is_empty() {
                return Err(Error::validation(format!(
                    "participant `{participant}` did not sort items {missing:?}"
                )));
            }
            complete.insert(participant, slots.into_iter().map(Option::unwrap).collect());
        }
        Ok(PileSortDataset { items, piles: complete })
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    pub fn participant_count(&self) -> usize {
        self.piles.len()
    }
}

/// Reads `participant_id,item_id,pile_id` rows.
pub fn parse_pile_sort<R: Read>(reader: R) -> Result<PileSortDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("missing column `{name}` in pile-sort header"),
        })
    };
    if headers.iter().all(|h| h.is_empty()) {
        return Err(Error::EmptyInput("pile-sort file is empty".into()));
    }
    let (p, i, k) = (col("participant_id")?, col("item_id")?, col("pile_id")?);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let get = |c: usize| -> Result<String> {
            match row.get(c) {
                Some(v) if !v.is_empty() => Ok(v.to_string()),
                _ => Err(Error::Parse { line, message: "missing or empty field".into() }),
            }
        };
        out.push(PileAssignment { participant_id: get(p)?, item_id: get(i)?, pile_id: get(k)? });
    }
    PileSortDataset::new(out)
}

/// sim(i, j) = fraction of participants who put i and j in the same pile.
pub fn empirical_similarity(ds: &PileSortDataset) -> Result<SimilarityMatrix> {
    let n = ds.item_count();
    let participants = ds.participant_count();
    if participants == 0 {
        return Err(Error::EmptyInput("no participants".into()));
    }
    let mut counts = DMatrix::<f64>::zeros(n, n);
    for labels in ds.piles.values() {
        for i in 0..n {
            for j in i..n {
                if labels[i] == labels[j] {
                    counts[(i, j)] += 1.0;
                    if i != j {
                        counts[(j, i)] += 1.0;
                    }
                }
            }
        }
    }
    counts /= participants as f64;
    SimilarityMatrix::new(counts, SimilarityKind::Empirical, ds.items.clone())
}
