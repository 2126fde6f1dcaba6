//! Pipeline parameters.

use crate::error::{Error, Result};

/// Contour distance used to compare cross-sections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum HausdorffMetric {
    /// Symmetric max of directed sup-inf distances.
    Hausdorff,
    /// Max of the two directed mean-of-minima distances.
    #[default]
    Modified,
}

/// Axis curve of a reconstructing generalized cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum AxisKind {
    #[default]
    Linear,
    /// Cubic Hermite matching the end tangents.
    Spline,
    /// Linear axis with a half-period sine offset in one plane.
    Sine,
}

/// How the size `d(κ)` of a cross-section is measured from its centre when
/// normalizing the Hausdorff distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ContourRadius {
    /// Distance from the centre to the nearest contour point.
    #[default]
    Nearest,
    /// Distance from the centre to the farthest contour point.
    Farthest,
}

/// Everything [`crate::decompose`] needs besides the volume.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct DecomposeParams {
    /// Sweep start distance from a junction, in junction radii.
    pub alpha_s: f64,
    /// Sweep end distance from a junction, in junction radii.
    pub alpha_e: f64,
    /// Critical-point threshold on the normalized Hausdorff distance.
    pub theta_h: f64,
    /// Path-merging angle threshold in radians; above π every branch is its
    /// own path.
    pub theta_c: f64,
    pub metric: HausdorffMetric,
    pub contour_radius: ContourRadius,
    /// Keep every `sf`-th inquiry point of a sweep.
    pub sf: usize,
    pub axis: AxisKind,
    /// Points per cross-sectional contour.
    pub n_samples: usize,
    /// Shortest accepted skeleton branch; `None` means twice the largest
    /// inscribed radius.
    pub min_branch_length: Option<f64>,
    pub max_branches: usize,
    /// Euler step of the skeleton back-tracking, in voxels.
    pub step: f64,
}

impl Default for DecomposeParams {
    fn default() -> Self {
        Self {
            alpha_s: 10.0,
            alpha_e: 1.0,
            theta_h: 0.8,
            theta_c: 0.0,
            metric: HausdorffMetric::Modified,
            contour_radius: ContourRadius::Nearest,
            sf: 1,
            axis: AxisKind::Linear,
            n_samples: 128,
            min_branch_length: None,
            max_branches: 64,
            step: 0.25,
        }
    }
}

/// Largest accepted `theta_c`: 181 degrees.
pub const THETA_C_MAX: f64 = 181.0 * core::f64::consts::PI / 180.0;

impl DecomposeParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, value| Err(Error::InvalidParameter { name, value });
        if !(self.alpha_s >= 1.0) || !self.alpha_s.is_finite() {
            return bad("alpha_s", self.alpha_s);
        }
        if !(self.alpha_e >= 0.0 && self.alpha_e <= self.alpha_s) {
            return bad("alpha_e", self.alpha_e);
        }
        if !(self.theta_h > 0.0 && self.theta_h < 1.0) {
            return bad("theta_h", self.theta_h);
        }
        if !(self.theta_c >= 0.0 && self.theta_c <= THETA_C_MAX + 1e-12) {
            return bad("theta_c", self.theta_c);
        }
        if self.sf == 0 {
            return bad("sf", 0.0);
        }
        if self.n_samples < 8 {
            return bad("n_samples", self.n_samples as f64);
        }
        if let Some(l) = self.min_branch_length {
            if !(l > 0.0) || !l.is_finite() {
                return bad("min_branch_length", l);
            }
        }
        if self.max_branches == 0 {
            return bad("max_branches", 0.0);
        }
        if !(self.step > 0.0 && self.step <= 1.0) {
            return bad("step", self.step);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        DecomposeParams::default().validate().unwrap();
    }

    #[test]
    fn ranges_enforced() {
        let p = DecomposeParams::default();
        assert!(DecomposeParams { alpha_s: 0.5, alpha_e: 0.2, ..p }.validate().is_err());
        assert!(DecomposeParams { alpha_e: 11.0, ..p }.validate().is_err());
        assert!(DecomposeParams { theta_h: 1.0, ..p }.validate().is_err());
        assert!(DecomposeParams { theta_c: 3.15, ..p }.validate().is_ok());
        assert!(DecomposeParams { theta_c: 3.2, ..p }.validate().is_err());
        assert!(DecomposeParams { sf: 0, ..p }.validate().is_err());
    }
}
