//! Anchor-based nearest-timestamp matching.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sensors::Stream;

/// Maximum accepted offset between matched modalities.
pub const DEFAULT_MAX_OFFSET_US: i64 = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemporalError {
    #[error("{stream} timestamps decrease at index {index} ({prev} > {next})")]
    Unsorted {
        stream: &'static str,
        index: usize,
        prev: i64,
        next: i64,
    },
}

/// Timestamps of one stream, checked to be non-decreasing.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SortedTimes(Vec<i64>);

impl SortedTimes {
    pub fn new(stream: Stream, times: Vec<i64>) -> Result<Self, TemporalError> {
        if let Some(i) = times.windows(2).position(|w| w[0] > w[1]) {
            return Err(TemporalError::Unsorted {
                stream: stream.name(),
                index: i + 1,
                prev: times[i],
                next: times[i + 1],
            });
        }
        Ok(SortedTimes(times))
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the timestamp nearest `t`. Equal distances resolve to the
    /// earlier timestamp, and duplicates to their first occurrence.
    pub fn nearest(&self, t: i64) -> Option<usize> {
        let i = self.0.partition_point(|&x| x < t);
        let after = (i < self.0.len()).then_some(i);
        let before = i.checked_sub(1).map(|j| self.0.partition_point(|&x| x < self.0[j]));
        match (before, after) {
            (None, None) => None,
            (Some(b), None) => Some(b),
            (None, Some(a)) => Some(a),
            (Some(b), Some(a)) => {
                if t - self.0[b] <= self.0[a] - t {
                    Some(b)
                } else {
                    Some(a)
                }
            }
        }
    }
}

/// One chosen event and its signed offset from the reference it was matched to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub index: usize,
    pub t_us: i64,
    pub offset_us: i64,
}

/// Streams taking part in matching. `vehicle` is matched to the anchor and
/// every follower to the selected vehicle image.
#[derive(Debug, Clone, Default)]
pub struct MatchStreams {
    pub vehicle: SortedTimes,
    pub followers: Vec<(Stream, SortedTimes)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalMatch {
    pub vehicle: Selection,
    pub followers: Vec<(Stream, Selection)>,
}

impl TemporalMatch {
    pub fn max_abs_offset_us(&self) -> i64 {
        self.followers
            .iter()
            .map(|(_, s)| s.offset_us.abs())
            .fold(self.vehicle.offset_us.abs(), i64::max)
    }
}

fn select(times: &SortedTimes, reference: i64, max_offset_us: i64) -> Option<Selection> {
    let index = times.nearest(reference)?;
    let t_us = times.as_slice()[index];
    let offset_us = t_us - reference;
    (offset_us.abs() <= max_offset_us).then_some(Selection {
        index,
        t_us,
        offset_us,
    })
}

/// Bundles the events around one aerial anchor, or `None` when any
/// modality is empty or further than `max_offset_us` from its reference.
pub fn match_temporal(anchor_t_us: i64, streams: &MatchStreams, max_offset_us: i64) -> Option<TemporalMatch> {
    let vehicle = select(&streams.vehicle, anchor_t_us, max_offset_us)?;
    let followers = streams
        .followers
        .iter()
        .map(|(s, times)| select(times, vehicle.t_us, max_offset_us).map(|sel| (*s, sel)))
        .collect::<Option<Vec<_>>>()?;
    Some(TemporalMatch { vehicle, followers })
}
