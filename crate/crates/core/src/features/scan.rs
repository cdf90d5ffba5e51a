use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// One lidar return: position in meters relative to the sensor, plus intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub intensity: f64,
}

impl Point {
    pub fn new(x: f64, y: f64, z: f64, intensity: f64) -> Self {
        Point { x, y, z, intensity }
    }

    pub fn radial(&self) -> f64 {
        libm::sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
    }
}

/// One revolution's noise points.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scan {
    pub frame_id: u64,
    /// Seconds on the common lidar/disdrometer clock.
    pub timestamp: f64,
    pub points: Vec<Point>,
}

impl Scan {
    pub fn validate(&self) -> Result<()> {
        if !self.timestamp.is_finite() {
            return Err(invalid!("scan {}: timestamp is not finite", self.frame_id));
        }
        for (i, p) in self.points.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(invalid!("scan {}: point {i} has non-finite coordinates", self.frame_id));
            }
            if !(p.intensity >= 0.0 && p.intensity.is_finite()) {
                return Err(invalid!("scan {}: point {i} has invalid intensity {}", self.frame_id, p.intensity));
            }
        }
        Ok(())
    }
}

/// Axis-aligned cube centered on the sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropBox {
    half_extent: f64,
}

impl CropBox {
    pub fn new(half_extent: f64) -> Result<Self> {
        if !(half_extent > 0.0 && half_extent.is_finite()) {
            return Err(invalid!("crop box half extent must be positive, got {half_extent}"));
        }
        Ok(CropBox { half_extent })
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    /// Boundary is inclusive.
    pub fn contains(&self, p: &Point) -> bool {
        let h = self.half_extent;
        libm::fabs(p.x) <= h && libm::fabs(p.y) <= h && libm::fabs(p.z) <= h
    }
}

/// Keep the points inside `bbox`, preserving order.
pub fn crop(scan: &Scan, bbox: &CropBox) -> Scan {
    Scan {
        frame_id: scan.frame_id,
        timestamp: scan.timestamp,
        points: scan.points.iter().copied().filter(|p| bbox.contains(p)).collect(),
    }
}
