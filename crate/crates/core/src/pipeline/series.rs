use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{invalid, Result};

/// Disdrometer track: one rate per timestamp, tagged with its experiment segment.
#[derive(Debug, Clone, PartialEq)]
pub struct RainSeries {
    /// Seconds, strictly increasing.
    pub timestamps: Vec<f64>,
    /// mm/h.
    pub rates: Vec<f64>,
    pub segment_ids: Vec<i64>,
}

impl RainSeries {
    pub fn new(timestamps: Vec<f64>, rates: Vec<f64>, segment_ids: Vec<i64>) -> Result<Self> {
        let s = RainSeries { timestamps, rates, segment_ids };
        s.validate()?;
        Ok(s)
    }

    pub fn empty() -> Self {
        RainSeries { timestamps: Vec::new(), rates: Vec::new(), segment_ids: Vec::new() }
    }

    /// Equal lengths, finite values, strictly increasing time, non-negative
    /// rates, and each segment id occupying a single contiguous run.
    pub fn validate(&self) -> Result<()> {
        let n = self.timestamps.len();
        if self.rates.len() != n || self.segment_ids.len() != n {
            return Err(invalid!(
                "series columns differ in length: {} timestamps, {} rates, {} segment ids",
                n,
                self.rates.len(),
                self.segment_ids.len()
            ));
        }
        for i in 0..n {
            let (t, r) = (self.timestamps[i], self.rates[i]);
            if !t.is_finite() {
                return Err(invalid!("timestamp {i} is not finite"));
            }
            if !(r >= 0.0 && r.is_finite()) {
                return Err(invalid!("rate {i} must be finite and non-negative, got {r}"));
            }
            if i > 0 && t <= self.timestamps[i - 1] {
                return Err(invalid!(
                    "timestamps must increase strictly, row {i} has {t} after {}",
                    self.timestamps[i - 1]
                ));
            }
        }
        let runs = self.segments();
        for (a, ra) in runs.iter().enumerate() {
            for rb in &runs[a + 1..] {
                if self.segment_ids[ra.start] == self.segment_ids[rb.start] {
                    return Err(invalid!("segment id {} appears in two separate runs", self.segment_ids[ra.start]));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Index ranges of contiguous runs of equal segment id.
    pub fn segments(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.segment_ids.len() {
            if i == self.segment_ids.len() || self.segment_ids[i] != self.segment_ids[start] {
                if i > start {
                    out.push(start..i);
                }
                start = i;
            }
        }
        out
    }

    /// `(segment id, first timestamp, last timestamp)` per segment.
    pub fn segment_spans(&self) -> Vec<SegmentSpan> {
        self.segments()
            .into_iter()
            .map(|r| SegmentSpan {
                segment_id: self.segment_ids[r.start],
                start: self.timestamps[r.start],
                end: self.timestamps[r.end - 1],
            })
            .collect()
    }

    pub(crate) fn subset(&self, ranges: &[Range<usize>]) -> Self {
        let mut out = RainSeries::empty();
        for r in ranges {
            out.timestamps.extend_from_slice(&self.timestamps[r.clone()]);
            out.rates.extend_from_slice(&self.rates[r.clone()]);
            out.segment_ids.extend_from_slice(&self.segment_ids[r.clone()]);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentSpan {
    pub segment_id: i64,
    pub start: f64,
    pub end: f64,
}

impl SegmentSpan {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn centre(&self) -> f64 {
        0.5 * (self.start + self.end)
    }
}

/// Mean of the piecewise-linear interpolant over `[start, end]`.
///
/// `None` when the window is empty or not covered by a single segment.
pub fn target_for_window(series: &RainSeries, window: (f64, f64)) -> Option<f64> {
    let (start, end) = window;
    if !(start < end && start.is_finite() && end.is_finite()) {
        return None;
    }
    let seg = series
        .segments()
        .into_iter()
        .find(|r| series.timestamps[r.start] <= start && end <= series.timestamps[r.end - 1])?;
    let t = &series.timestamps[seg.clone()];
    let v = &series.rates[seg];
    let at = |i: usize, x: f64| v[i] + (v[i + 1] - v[i]) * (x - t[i]) / (t[i + 1] - t[i]);
    let mut area = 0.0;
    for i in 0..t.len() - 1 {
        let a = start.max(t[i]);
        let b = end.min(t[i + 1]);
        if b > a {
            area += 0.5 * (b - a) * (at(i, a) + at(i, b));
        }
    }
    Some(area / (end - start))
}

/// Mean absolute change between consecutive measurements of the same segment.
pub fn measurement_volatility(series: &RainSeries) -> Result<f64> {
    let (mut n, mut sum) = (0usize, 0.0);
    for r in series.segments() {
        for w in series.rates[r].windows(2) {
            sum += libm::fabs(w[1] - w[0]);
            n += 1;
        }
    }
    if n == 0 {
        return Err(invalid!("volatility needs two consecutive measurements within a segment"));
    }
    Ok(sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn series(t: &[f64], r: &[f64], s: &[i64]) -> RainSeries {
        RainSeries::new(t.to_vec(), r.to_vec(), s.to_vec()).unwrap()
    }

    #[test]
    fn validation() {
        assert!(RainSeries::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![0, 0]).is_err());
        assert!(RainSeries::new(vec![0.0, 1.0], vec![1.0, -1.0], vec![0, 0]).is_err());
        assert!(RainSeries::new(vec![0.0], vec![1.0, 1.0], vec![0]).is_err());
        assert!(RainSeries::new(vec![0.0, 1.0, 2.0], vec![1.0; 3], vec![0, 1, 0]).is_err());
        assert!(RainSeries::new(vec![0.0, 1.0, 2.0], vec![1.0; 3], vec![3, 1, 1]).is_ok());
    }

    #[test]
    fn linear_mean() {
        let s = series(&[0.0, 100.0], &[10.0, 20.0], &[0, 0]);
        assert_eq!(target_for_window(&s, (0.0, 100.0)), Some(15.0));
        let c = series(&[0.0, 10.0, 20.0], &[30.0; 3], &[0; 3]);
        assert_eq!(target_for_window(&c, (3.0, 17.0)), Some(30.0));
    }

    #[test]
    fn no_target_outside_or_across_segments() {
        let s = series(&[0.0, 10.0, 20.0, 30.0], &[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1]);
        assert_eq!(target_for_window(&s, (-1.0, 5.0)), None);
        assert_eq!(target_for_window(&s, (5.0, 25.0)), None);
        assert_eq!(target_for_window(&s, (5.0, 5.0)), None);
        assert!(target_for_window(&s, (20.0, 30.0)).is_some());
    }

    #[test]
    fn volatility_examples() {
        assert_eq!(measurement_volatility(&series(&[0.0, 1.0, 2.0], &[10.0, 20.0, 10.0], &[0; 3])).unwrap(), 10.0);
        assert_eq!(measurement_volatility(&series(&[0.0, 1.0, 2.0], &[4.0; 3], &[0; 3])).unwrap(), 0.0);
        // jumps between segments do not count
        let s = series(&[0.0, 1.0, 2.0, 3.0], &[1.0, 1.0, 50.0, 52.0], &[0, 0, 1, 1]);
        assert_eq!(measurement_volatility(&s).unwrap(), 1.0);
        assert!(measurement_volatility(&series(&[0.0], &[1.0], &[0])).is_err());
    }
}
