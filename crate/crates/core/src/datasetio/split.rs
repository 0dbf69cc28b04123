//! Trajectory-segment train/val/test splits with guard gaps.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplitError {
    #[error("fractions {0:?} must be non-negative and sum to 1")]
    Fractions([f64; 3]),
    #[error("{samples} samples cannot form {segments} segments of at least {min_len}")]
    TooFewSamples {
        samples: usize,
        segments: usize,
        min_len: usize,
    },
    #[error("guard gap {0} must be finite and non-negative")]
    GuardGap(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitParams {
    /// Train, val and test shares.
    pub fractions: [f64; 3],
    pub min_segment_len: usize,
    pub guard_gap_m: f64,
}

impl Default for SplitParams {
    fn default() -> Self {
        SplitParams {
            fractions: [0.8, 0.1, 0.1],
            min_segment_len: 25,
            guard_gap_m: 50.0,
        }
    }
}

/// Half-open range of sample indices assigned to one split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub segments: Vec<Segment>,
    /// Per-sample split, `None` for samples dropped by the guard gap.
    pub tags: Vec<Option<Split>>,
    /// Cumulative path distance per sample.
    pub path_m: Vec<f64>,
}

impl SplitAssignment {
    pub fn count(&self, split: Split) -> usize {
        self.tags.iter().filter(|t| **t == Some(split)).count()
    }

    pub fn dropped(&self) -> usize {
        self.tags.iter().filter(|t| t.is_none()).count()
    }
}

pub fn cumulative_path(positions: &[(f64, f64)]) -> Vec<f64> {
    let mut d = 0.0;
    let mut out = Vec::with_capacity(positions.len());
    for (i, p) in positions.iter().enumerate() {
        if i > 0 {
            let q = positions[i - 1];
            d += (p.0 - q.0).hypot(p.1 - q.1);
        }
        out.push(d);
    }
    out
}

/// Cuts the ordered samples into chunks of at least `min_segment_len`,
/// hands each chunk to the split furthest below its target (ties to the
/// earlier split), merges neighbors, then drops samples within
/// `guard_gap_m` of path distance from any boundary between different
/// splits.
pub fn split_by_trajectory(positions: &[(f64, f64)], params: &SplitParams) -> Result<SplitAssignment, SplitError> {
    let f = params.fractions;
    if f.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(SplitError::Fractions(f));
    }
    if !(params.guard_gap_m.is_finite() && params.guard_gap_m >= 0.0) {
        return Err(SplitError::GuardGap(params.guard_gap_m));
    }
    let n = positions.len();
    let min_len = params.min_segment_len.max(1);
    let needed = f.iter().filter(|v| **v > 0.0).count();
    let chunks = n / min_len;
    if chunks < needed {
        return Err(SplitError::TooFewSamples {
            samples: n,
            segments: needed,
            min_len,
        });
    }
    let mut assigned = [0usize; 3];
    let mut segments: Vec<Segment> = Vec::new();
    for k in 0..chunks {
        let (start, end) = (k * n / chunks, (k + 1) * n / chunks);
        let remaining = chunks - k;
        let starving: Vec<usize> = (0..3).filter(|&j| f[j] > 0.0 && assigned[j] == 0).collect();
        let j = if starving.len() >= remaining {
            starving[0]
        } else {
            (0..3)
                .filter(|&j| f[j] > 0.0)
                .max_by(|&a, &b| {
                    let da = f[a] * n as f64 - assigned[a] as f64;
                    let db = f[b] * n as f64 - assigned[b] as f64;
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .expect("at least one positive fraction")
        };
        assigned[j] += end - start;
        let split = Split::ALL[j];
        match segments.last_mut() {
            Some(s) if s.split == split => s.end = end,
            _ => segments.push(Segment { start, end, split }),
        }
    }

    let path_m = cumulative_path(positions);
    let boundaries: Vec<f64> = segments
        .windows(2)
        .map(|w| (path_m[w[1].start - 1] + path_m[w[1].start]) / 2.0)
        .collect();
    let mut tags = vec![None; n];
    for s in &segments {
        for i in s.start..s.end {
            if boundaries.iter().all(|b| (path_m[i] - b).abs() >= params.guard_gap_m) {
                tags[i] = Some(s.split);
            }
        }
    }
    Ok(SplitAssignment { segments, tags, path_m })
}
