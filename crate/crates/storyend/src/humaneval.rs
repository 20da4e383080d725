//! Blinded human rating of generated endings.
//!
//! Judges see a story body and a candidate ending, never which backend
//! wrote it: items carry an opaque hash id and session files contain no
//! backend names. Each item is rated on five dimensions from 1 to 5, the
//! per-item score is their mean, and a judge may re-rate an item; the
//! append-only file keeps the full history while summaries use the
//! latest rating per (item, judge).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backends::GenerationRecord;
use crate::corpus::Corpus;
use crate::rng::stream_for;

pub const DEFAULT_SESSION_QUOTA: usize = 225;

pub const DIMENSION_NAMES: [&str; 5] = [
    "coherence",
    "narrative_satisfaction",
    "creativity",
    "emotional_impact",
    "grammatical_correctness",
];

#[derive(Debug, thiserror::Error)]
pub enum HumanevalError {
    #[error("{dimension} rating {value} is out of range; each rating is an integer from 1 to 5")]
    OutOfRange { dimension: &'static str, value: i64 },
    #[error("session quota must be at least 1")]
    ZeroQuota,
    #[error("no generation records to build sessions from")]
    NoRecords,
}

/// Opaque identifier tying a rating back to its (story, backend) pair
/// without exposing either to the judge: the first 16 hex characters of
/// a hash over both ids.
pub fn item_id(story_id: &str, backend_id: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(story_id.as_bytes());
    hasher.update([0u8]);
    hasher.update(backend_id.as_bytes());
    let digest = hasher.finalize();
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingDimensions {
    pub coherence: u8,
    pub narrative_satisfaction: u8,
    pub creativity: u8,
    pub emotional_impact: u8,
    pub grammatical_correctness: u8,
}

impl RatingDimensions {
    /// Validates five raw values in [`DIMENSION_NAMES`] order.
    pub fn new(values: [i64; 5]) -> Result<Self, HumanevalError> {
        for (dimension, &value) in DIMENSION_NAMES.iter().zip(&values) {
            if !(1..=5).contains(&value) {
                return Err(HumanevalError::OutOfRange { dimension, value });
            }
        }
        Ok(Self {
            coherence: values[0] as u8,
            narrative_satisfaction: values[1] as u8,
            creativity: values[2] as u8,
            emotional_impact: values[3] as u8,
            grammatical_correctness: values[4] as u8,
        })
    }

    pub fn values(&self) -> [u8; 5] {
        [
            self.coherence,
            self.narrative_satisfaction,
            self.creativity,
            self.emotional_impact,
            self.grammatical_correctness,
        ]
    }

    /// Mean of the five dimensions.
    pub fn overall(&self) -> f64 {
        self.values().iter().map(|&v| v as f64).sum::<f64>() / 5.0
    }
}

/// One rating as persisted on the researcher side, where backend identity
/// is allowed to appear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub item_id: String,
    pub story_id: String,
    pub backend_id: String,
    pub judge: String,
    pub ratings: RatingDimensions,
    pub overall: f64,
    pub rated_at: u64,
}

impl RatingRecord {
    pub fn new(
        story_id: impl Into<String>,
        backend_id: impl Into<String>,
        judge: impl Into<String>,
        ratings: RatingDimensions,
        rated_at: u64,
    ) -> Self {
        let story_id = story_id.into();
        let backend_id = backend_id.into();
        Self {
            item_id: item_id(&story_id, &backend_id),
            story_id,
            backend_id,
            judge: judge.into(),
            overall: ratings.overall(),
            ratings,
            rated_at,
        }
    }
}

/// What a judge sees for one item: context, candidate, opaque id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionItem {
    pub item_id: String,
    pub body: String,
    pub ending: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingSession {
    pub session_id: String,
    pub items: Vec<SessionItem>,
}

/// Splits generation records into blinded sessions of at most `quota`
/// items. Per-backend lists are shuffled on substreams of `seed` and then
/// interleaved round-robin, so neither position nor neighborhood reveals
/// the backend. Records whose story is missing from the corpus are
/// reported and skipped.
pub fn build_sessions(
    records: &[GenerationRecord],
    corpus: &Corpus,
    quota: usize,
    seed: u64,
) -> Result<(Vec<RatingSession>, Vec<String>), HumanevalError> {
    if quota == 0 {
        return Err(HumanevalError::ZeroQuota);
    }
    if records.is_empty() {
        return Err(HumanevalError::NoRecords);
    }

    let mut group_order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&GenerationRecord>> = BTreeMap::new();
    for record in records {
        let entry = groups.entry(&record.backend_id).or_default();
        if entry.is_empty() {
            group_order.push(&record.backend_id);
        }
        entry.push(record);
    }

    let mut shuffled: Vec<Vec<&GenerationRecord>> = Vec::with_capacity(group_order.len());
    for (group_ix, backend_id) in group_order.iter().enumerate() {
        let mut group = groups.remove(backend_id).expect("group exists");
        stream_for(seed, group_ix as u64).shuffle(&mut group);
        shuffled.push(group);
    }

    let index = corpus.id_index();
    let mut diagnostics = Vec::new();
    let mut items = Vec::new();
    let mut cursors = vec![0usize; shuffled.len()];
    loop {
        let mut progressed = false;
        for (group, cursor) in shuffled.iter().zip(cursors.iter_mut()) {
            while *cursor < group.len() {
                let record = group[*cursor];
                *cursor += 1;
                match index.get(record.story_id.as_str()) {
                    Some(&story_ix) => {
                        items.push(SessionItem {
                            item_id: item_id(&record.story_id, &record.backend_id),
                            body: corpus.stories[story_ix].body(),
                            ending: record.ending.clone(),
                        });
                        progressed = true;
                        break;
                    }
                    None => diagnostics.push(format!(
                        "record for unknown story {} skipped",
                        record.story_id
                    )),
                }
            }
        }
        if !progressed {
            break;
        }
    }

    let sessions = items
        .chunks(quota)
        .enumerate()
        .map(|(ix, chunk)| RatingSession {
            session_id: format!("session-{ix:03}"),
            items: chunk.to_vec(),
        })
        .collect();
    Ok((sessions, diagnostics))
}

/// Reduces an append-only rating history to the latest rating per
/// (item, judge), in first-appearance order.
pub fn latest_ratings(ratings: &[RatingRecord]) -> Vec<&RatingRecord> {
    let mut order: Vec<(&str, &str)> = Vec::new();
    let mut latest: BTreeMap<(&str, &str), &RatingRecord> = BTreeMap::new();
    for rating in ratings {
        let key = (rating.item_id.as_str(), rating.judge.as_str());
        if latest.insert(key, rating).is_none() {
            order.push(key);
        }
    }
    order.into_iter().map(|key| latest[&key]).collect()
}

/// Mean overall rating per backend over the latest ratings. A backend
/// nobody has rated has no entry at all.
pub fn mean_by_backend(ratings: &[RatingRecord]) -> BTreeMap<String, f64> {
    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for rating in latest_ratings(ratings) {
        let entry = sums.entry(&rating.backend_id).or_insert((0.0, 0));
        entry.0 += rating.overall;
        entry.1 += 1;
    }
    sums.into_iter()
        .map(|(backend, (sum, n))| (backend.to_string(), sum / n as f64))
        .collect()
}
