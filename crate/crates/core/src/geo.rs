//! Great-circle distance, event discovery and nearest collection points.
//!
//! All queries are linear scans over the given slice.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{EventRecord, GeoPoint, Timestamp};

pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeoError {
    #[error("search radius must be a positive number of kilometers")]
    InvalidRadius,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("time window must satisfy from <= to")]
    InvalidWindow,
    #[error("invalid coordinates")]
    InvalidPoint,
}

/// Haversine distance in kilometers on a sphere of radius [`EARTH_RADIUS_KM`].
pub fn haversine_distance(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let d_phi = (b.lat - a.lat).to_radians();
    let d_lambda = (b.lon - a.lon).to_radians();
    let h = (d_phi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (d_lambda / 2.0).sin().powi(2);
    let h = h.clamp(0.0, 1.0);
    2.0 * EARTH_RADIUS_KM * h.sqrt().atan2((1.0 - h).sqrt())
}

/// Closed interval of UTC instants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    from: Timestamp,
    to: Timestamp,
}

impl TimeWindow {
    pub fn new(from: Timestamp, to: Timestamp) -> Result<Self, GeoError> {
        if from > to {
            return Err(GeoError::InvalidWindow);
        }
        Ok(Self { from, to })
    }

    pub fn from(&self) -> Timestamp {
        self.from
    }

    pub fn to(&self) -> Timestamp {
        self.to
    }

    /// Whether `[start, end]` shares at least one instant with the window.
    pub fn overlaps(&self, start: Timestamp, end: Timestamp) -> bool {
        start <= self.to && end >= self.from
    }
}

/// A query hit together with its distance from the query point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ranked<T> {
    pub item: T,
    pub distance_km: f64,
}

/// Events centered within `radius_km` of `center` whose schedule overlaps `window`,
/// nearest first, then earlier start, then event id.
pub fn find_events<'a>(
    events: &'a [EventRecord],
    center: &GeoPoint,
    radius_km: f64,
    window: &TimeWindow,
) -> Result<Vec<Ranked<&'a EventRecord>>, GeoError> {
    if !(radius_km.is_finite() && radius_km > 0.0) {
        return Err(GeoError::InvalidRadius);
    }
    if !center.is_valid() {
        return Err(GeoError::InvalidPoint);
    }
    let mut hits: Vec<_> = events
        .iter()
        .filter(|e| window.overlaps(e.start_time, e.end_time))
        .map(|e| Ranked {
            item: e,
            distance_km: haversine_distance(center, &e.area_center),
        })
        .filter(|r| r.distance_km <= radius_km)
        .collect();
    hits.sort_by(|a, b| {
        a.distance_km
            .total_cmp(&b.distance_km)
            .then_with(|| a.item.start_time.cmp(&b.item.start_time))
            .then_with(|| a.item.event_id.cmp(&b.item.event_id))
    });
    Ok(hits)
}

struct HeapItem {
    distance_km: f64,
    index: usize,
}

impl HeapItem {
    fn key(&self) -> (f64, usize) {
        (self.distance_km, self.index)
    }
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        let (da, ia) = self.key();
        let (db, ib) = other.key();
        da.total_cmp(&db).then(ia.cmp(&ib))
    }
}

/// The `k` points closest to `from`, ascending by distance; equal distances keep
/// input order.
pub fn nearest_collection_points(
    points: &[GeoPoint],
    from: &GeoPoint,
    k: usize,
) -> Result<Vec<Ranked<GeoPoint>>, GeoError> {
    if k == 0 {
        return Err(GeoError::InvalidK);
    }
    if !from.is_valid() {
        return Err(GeoError::InvalidPoint);
    }
    // max-heap of the best k seen so far
    let mut heap = BinaryHeap::with_capacity(k.min(points.len()) + 1);
    for (index, p) in points.iter().enumerate() {
        let item = HeapItem {
            distance_km: haversine_distance(from, p),
            index,
        };
        if heap.len() < k {
            heap.push(item);
        } else if heap.peek().is_some_and(|worst| item < *worst) {
            heap.pop();
            heap.push(item);
        }
    }
    Ok(heap
        .into_sorted_vec()
        .into_iter()
        .map(|h| Ranked {
            item: points[h.index],
            distance_km: h.distance_km,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint { lat, lon }
    }

    #[test]
    fn identity_is_zero() {
        assert_eq!(haversine_distance(&p(0.0, 0.0), &p(0.0, 0.0)), 0.0);
        assert_eq!(haversine_distance(&p(61.065, 28.095), &p(61.065, 28.095)), 0.0);
    }

    #[test]
    fn one_degree_of_latitude() {
        let expected = std::f64::consts::PI * EARTH_RADIUS_KM / 180.0;
        let d = haversine_distance(&p(0.0, 0.0), &p(1.0, 0.0));
        assert!((d - 111.1949).abs() < 1e-3, "{d}");
        assert!((d - expected).abs() < 1e-9);
    }

    #[test]
    fn antipodes_are_half_circumference() {
        let d = haversine_distance(&p(0.0, 0.0), &p(0.0, 180.0));
        assert!((d - 20015.09).abs() < 0.01, "{d}");
        assert!((d - std::f64::consts::PI * EARTH_RADIUS_KM).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_arguments() {
        let w = TimeWindow::new(Timestamp::MIN_UTC, Timestamp::MAX_UTC).unwrap();
        assert_eq!(find_events(&[], &p(0.0, 0.0), 0.0, &w).unwrap_err(), GeoError::InvalidRadius);
        assert_eq!(find_events(&[], &p(0.0, 0.0), f64::NAN, &w).unwrap_err(), GeoError::InvalidRadius);
        assert_eq!(nearest_collection_points(&[], &p(0.0, 0.0), 0).unwrap_err(), GeoError::InvalidK);
        assert!(TimeWindow::new(Timestamp::MAX_UTC, Timestamp::MIN_UTC).is_err());
    }

    #[test]
    fn nearest_truncates_and_handles_singleton() {
        let one = [p(1.0, 1.0)];
        let got = nearest_collection_points(&one, &p(0.0, 0.0), 1).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].item, one[0]);

        let two = [p(2.0, 2.0), p(1.0, 1.0)];
        let got = nearest_collection_points(&two, &p(0.0, 0.0), 5).unwrap();
        assert_eq!(got.iter().map(|r| r.item).collect::<Vec<_>>(), vec![two[1], two[0]]);
    }

    #[test]
    fn empty_event_list() {
        let w = TimeWindow::new(Timestamp::MIN_UTC, Timestamp::MAX_UTC).unwrap();
        assert!(find_events(&[], &p(0.0, 0.0), 10.0, &w).unwrap().is_empty());
    }
}
