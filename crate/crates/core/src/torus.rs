//! Geometry of the two-torus and its tangent plane.
//!
//! Points live in `[0,1)²`, tangent vectors are measured in the maximum
//! norm, and the good/critical split of the circle is described by a
//! [`RegionPartition`] made of two closed critical intervals and two open
//! good intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Global tolerance for mod-1 comparisons (membership tests, round trips).
pub const MOD1_TOL: f64 = 1e-12;

/// Reduce a real number to the circle `[0,1)`.
pub fn wrap(r: f64) -> Result<f64> {
    if !r.is_finite() {
        return Err(Error::InvalidInput(format!(
            "non-finite circle coordinate {r}"
        )));
    }
    Ok(wrap_unchecked(r))
}

/// `wrap` for values already known to be finite.
#[inline]
pub fn wrap_unchecked(r: f64) -> f64 {
    let w = r - r.floor();
    // r.floor() can round so that w == 1.0 for tiny negative r.
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Signed distance on the circle, in `[-1/2, 1/2)`.
#[inline]
pub fn circle_offset(a: f64, b: f64) -> f64 {
    let d = wrap_unchecked(a - b);
    if d >= 0.5 {
        d - 1.0
    } else {
        d
    }
}

/// Unsigned circle distance.
#[inline]
pub fn circle_dist(a: f64, b: f64) -> f64 {
    circle_offset(a, b).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub x1: f64,
    pub x2: f64,
}

impl TorusPoint {
    pub fn new(x1: f64, x2: f64) -> Result<Self> {
        Ok(Self {
            x1: wrap(x1)?,
            x2: wrap(x2)?,
        })
    }

    /// Build from coordinates that are finite; wraps them.
    #[inline]
    pub fn wrapped(x1: f64, x2: f64) -> Self {
        Self {
            x1: wrap_unchecked(x1),
            x2: wrap_unchecked(x2),
        }
    }

    /// Max-metric distance on the torus.
    pub fn dist(&self, other: &TorusPoint) -> f64 {
        circle_dist(self.x1, other.x1).max(circle_dist(self.x2, other.x2))
    }
}

/// A nonzero tangent vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub u1: f64,
    pub u2: f64,
}

impl Direction {
    pub fn new(u1: f64, u2: f64) -> Result<Self> {
        if !(u1.is_finite() && u2.is_finite()) {
            return Err(Error::InvalidInput("non-finite direction".into()));
        }
        if u1 == 0.0 && u2 == 0.0 {
            return Err(Error::InvalidInput("zero tangent vector".into()));
        }
        Ok(Self { u1, u2 })
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.u1, self.u2]
    }

    /// Rescaled to unit maximum norm.
    pub fn normalized(&self) -> Direction {
        let n = self.u1.abs().max(self.u2.abs());
        Direction {
            u1: self.u1 / n,
            u2: self.u2 / n,
        }
    }
}

/// `max{|u1|, |u2|}`.
pub fn max_norm(u: [f64; 2]) -> Result<f64> {
    let n = u[0].abs().max(u[1].abs());
    if n == 0.0 {
        return Err(Error::InvalidInput("zero tangent vector".into()));
    }
    if !n.is_finite() {
        return Err(Error::InvalidInput("non-finite tangent vector".into()));
    }
    Ok(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Horizontal,
    Vertical,
}

/// Cone aperture. The horizontal cone `|u2| <= alpha |u1|` is closed and
/// the vertical cone is its complement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub alpha: f64,
}

impl ConeSpec {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 1.0) {
            return Err(Error::InvalidInput(format!(
                "cone aperture must exceed 1, got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }

    #[inline]
    pub fn is_horizontal(&self, u: [f64; 2]) -> bool {
        u[1].abs() <= self.alpha * u[0].abs()
    }

    #[inline]
    pub fn is_vertical(&self, u: [f64; 2]) -> bool {
        !self.is_horizontal(u)
    }

    pub fn contains(&self, u: [f64; 2], orientation: Orientation) -> Result<bool> {
        max_norm(u)?;
        Ok(match orientation {
            Orientation::Horizontal => self.is_horizontal(u),
            Orientation::Vertical => self.is_vertical(u),
        })
    }

    /// The four unit (max-norm) directions on the cone boundary.
    pub fn boundary_directions(&self) -> [[f64; 2]; 4] {
        let a = self.alpha;
        [
            [1.0 / a, 1.0],
            [-1.0 / a, 1.0],
            [1.0 / a, -1.0],
            [-1.0 / a, -1.0],
        ]
    }
}

pub fn cone_contains(u: Direction, cone: ConeSpec, orientation: Orientation) -> Result<bool> {
    cone.contains(u.as_array(), orientation)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionLabel {
    GhPlus,
    GhMinus,
    Ch,
    GvPlus,
    GvMinus,
    Cv,
}

impl RegionLabel {
    pub fn is_critical(self) -> bool {
        matches!(self, RegionLabel::Ch | RegionLabel::Cv)
    }

    /// Sign of the good half (`+1` for G⁺, `-1` for G⁻, `0` for critical).
    pub fn sign(self) -> i8 {
        match self {
            RegionLabel::GhPlus | RegionLabel::GvPlus => 1,
            RegionLabel::GhMinus | RegionLabel::GvMinus => -1,
            RegionLabel::Ch | RegionLabel::Cv => 0,
        }
    }
}

/// Where a circle coordinate falls relative to the partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Critical,
    /// `I4`, where the profile slope is positive.
    Plus,
    /// `I2`, where the profile slope is negative.
    Minus,
}

/// Four cyclically ordered points `z1..z4` with closed critical intervals
/// `I1 = [z1,z2]`, `I3 = [z3,z4]` and open good intervals `I2 = (z2,z3)`,
/// `I4 = (z4,z1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPartition {
    pub z: [f64; 4],
    /// Half the length of each critical interval.
    pub half_size: f64,
    /// Grid divisor used for the spacing checks (`k` or `tau2`).
    pub divisor: u32,
    pub permissive: bool,
}

impl RegionPartition {
    pub fn critical_len(&self) -> f64 {
        2.0 * self.half_size
    }

    /// Length of `I2 = (z2, z3)`.
    pub fn len_i2(&self) -> f64 {
        wrap_unchecked(self.z[2] - self.z[1])
    }

    /// Length of `I4 = (z4, z1)`.
    pub fn len_i4(&self) -> f64 {
        wrap_unchecked(self.z[0] - self.z[3])
    }

    pub fn centers(&self) -> (f64, f64) {
        (
            wrap_unchecked(self.z[0] + self.half_size),
            wrap_unchecked(self.z[2] + self.half_size),
        )
    }

    fn in_closed(x: f64, start: f64, len: f64) -> bool {
        let d = wrap_unchecked(x - start);
        d <= len + MOD1_TOL || d >= 1.0 - MOD1_TOL
    }

    /// Band of a circle coordinate; endpoint ties go to the critical band.
    pub fn band(&self, x: f64) -> Band {
        let len = self.critical_len();
        if Self::in_closed(x, self.z[0], len) || Self::in_closed(x, self.z[2], len) {
            return Band::Critical;
        }
        // Outside both closed intervals: decide I2 vs I4 by position after z2.
        let d = wrap_unchecked(x - self.z[1]);
        if d < self.len_i2() {
            Band::Minus
        } else {
            Band::Plus
        }
    }

    /// Closed-interval representations `(start, length)` of `I1`, `I2`, `I3`, `I4`.
    pub fn intervals(&self) -> [(f64, f64); 4] {
        let len = self.critical_len();
        [
            (self.z[0], len),
            (self.z[1], self.len_i2()),
            (self.z[2], len),
            (self.z[3], self.len_i4()),
        ]
    }
}

pub fn classify(p: TorusPoint, part: &RegionPartition, orientation: Orientation) -> RegionLabel {
    match orientation {
        Orientation::Horizontal => match part.band(p.x1) {
            Band::Critical => RegionLabel::Ch,
            Band::Plus => RegionLabel::GhPlus,
            Band::Minus => RegionLabel::GhMinus,
        },
        Orientation::Vertical => match part.band(p.x2) {
            Band::Critical => RegionLabel::Cv,
            Band::Plus => RegionLabel::GvPlus,
            Band::Minus => RegionLabel::GvMinus,
        },
    }
}

/// Build a partition with critical intervals `[c - h, c + h]` around the two
/// centers and check the three spacing requirements against `divisor`.
///
/// `max_half` is the ceiling on `half_size`. In permissive mode every strict
/// inequality is relaxed to a non-strict one (this admits touching
/// endpoints and boundary equalities).
pub fn build_partition(
    half_size: f64,
    divisor: u32,
    centers: (f64, f64),
    max_half: f64,
    permissive: bool,
) -> Result<RegionPartition> {
    if !(half_size.is_finite() && half_size > 0.0) {
        return Err(Error::InvalidInput(format!(
            "half size must be positive, got {half_size}"
        )));
    }
    if divisor == 0 {
        return Err(Error::InvalidInput("divisor must be positive".into()));
    }
    let (c1, c3) = (wrap(centers.0)?, wrap(centers.1)?);
    let h = half_size;
    let mut violations = Vec::new();

    // strict: fail when lhs >= rhs; permissive: fail when lhs > rhs.
    let exceeds = |lhs: f64, rhs: f64| {
        if permissive {
            lhs > rhs + MOD1_TOL
        } else {
            lhs >= rhs - MOD1_TOL
        }
    };

    if exceeds(h, max_half) {
        violations.push(format!(
            "size: half size {h} is not below the ceiling {max_half}"
        ));
    }

    // m = 0 also rules out overlapping critical intervals.
    let k = divisor as f64;
    for m in 0..divisor {
        let shifted = c1 + m as f64 / k;
        let dist = circle_dist(shifted, c3);
        // closed intervals of equal length 2h meet iff centres are within 2h
        if exceeds(2.0 * h, dist) {
            violations.push(format!(
                "translation: I1 shifted by {m}/{divisor} meets I3 (center gap {dist:.6})"
            ));
            break;
        }
    }

    let z = [
        wrap_unchecked(c1 - h),
        wrap_unchecked(c1 + h),
        wrap_unchecked(c3 - h),
        wrap_unchecked(c3 + h),
    ];
    let part = RegionPartition {
        z,
        half_size: h,
        divisor,
        permissive,
    };
    let floor_bound = ((divisor as i64 - 1) / 2) as f64 / k;
    for (name, len) in [("I2", part.len_i2()), ("I4", part.len_i4())] {
        if exceeds(floor_bound, len) {
            violations.push(format!(
                "good size: |{name}| = {len:.6} does not exceed {floor_bound:.6}"
            ));
        }
    }

    if violations.is_empty() {
        Ok(part)
    } else {
        Err(Error::Partition(violations))
    }
}

/// Partition for `E = k Id`: critical intervals of size `2 delta`, `delta < 1/(4k)`.
pub fn homothety_partition(
    delta: f64,
    k: u32,
    centers: (f64, f64),
    permissive: bool,
) -> Result<RegionPartition> {
    build_partition(delta, k, centers, 1.0 / (4.0 * k as f64), permissive)
}

/// Upper bound on the critical size `L` for the non-homothety construction.
///
/// Both `1/(4 tau2)` and `(1/tau2 - 1/alpha)/2` are enforced.
pub fn general_size_ceiling(tau2: u32, alpha: f64) -> f64 {
    let t2 = tau2 as f64;
    (1.0 / (4.0 * t2)).min((1.0 / t2 - 1.0 / alpha) / 2.0)
}

/// Partition for the non-homothety construction: critical intervals of size `l`.
pub fn general_partition(
    l: f64,
    tau2: u32,
    alpha: f64,
    centers: (f64, f64),
    permissive: bool,
) -> Result<RegionPartition> {
    build_partition(
        l / 2.0,
        tau2,
        centers,
        general_size_ceiling(tau2, alpha) / 2.0,
        permissive,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_k5() -> RegionPartition {
        homothety_partition(0.045, 5, (0.25, 0.75), false).unwrap()
    }

    fn worked_k5() -> RegionPartition {
        homothety_partition(0.05, 5, (0.25, 0.75), true).unwrap()
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap(0.0).unwrap(), 0.0);
        assert!((wrap(1.25).unwrap() - 0.25).abs() < 1e-15);
        assert!((wrap(-0.1).unwrap() - 0.9).abs() < 1e-15);
        assert!(wrap(f64::NAN).is_err());
        assert!(wrap(f64::INFINITY).is_err());
        assert!(wrap(-1e-300).unwrap() < 1.0);
    }

    #[test]
    fn max_norm_examples() {
        assert_eq!(max_norm([1.0, -3.0]).unwrap(), 3.0);
        assert_eq!(max_norm([1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(max_norm([0.2, 0.0]).unwrap(), 0.2);
        assert!(max_norm([0.0, 0.0]).is_err());
    }

    #[test]
    fn cone_examples() {
        let c = ConeSpec::new(1.1).unwrap();
        let h = Orientation::Horizontal;
        let v = Orientation::Vertical;
        assert!(cone_contains(Direction::new(1.0, 0.0).unwrap(), c, h).unwrap());
        assert!(cone_contains(Direction::new(0.0, 1.0).unwrap(), c, v).unwrap());
        assert!(cone_contains(Direction::new(1.0, 1.1).unwrap(), c, h).unwrap());
        assert!(Direction::new(0.0, 0.0).is_err());
        assert!(ConeSpec::new(1.0).is_err());
    }

    #[test]
    fn classify_worked_partition() {
        let p = worked_k5();
        let lab = |x1: f64| {
            classify(
                TorusPoint::new(x1, 0.3).unwrap(),
                &p,
                Orientation::Horizontal,
            )
        };
        assert_eq!(lab(0.0), RegionLabel::GhPlus);
        assert_eq!(lab(0.25), RegionLabel::Ch);
        assert_eq!(lab(0.5), RegionLabel::GhMinus);
        // closed endpoints resolve to critical
        assert_eq!(lab(0.2), RegionLabel::Ch);
        assert_eq!(lab(0.8), RegionLabel::Ch);
        let vert = classify(
            TorusPoint::new(0.3, 0.5).unwrap(),
            &p,
            Orientation::Vertical,
        );
        assert_eq!(vert, RegionLabel::GvMinus);
    }

    #[test]
    fn build_partition_examples() {
        let err = homothety_partition(0.05, 5, (0.25, 0.75), false).unwrap_err();
        match err {
            Error::Partition(v) => {
                assert!(v.iter().any(|s| s.starts_with("translation")), "{v:?}");
                assert!(v.iter().any(|s| s.starts_with("good size")), "{v:?}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let ok = default_k5();
        assert!((ok.z[0] - 0.205).abs() < 1e-12);
        assert!((ok.len_i2() - 0.41).abs() < 1e-12);
        let err = homothety_partition(0.2, 5, (0.25, 0.75), false).unwrap_err();
        match err {
            Error::Partition(v) => assert!(v.iter().any(|s| s.starts_with("size"))),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn permissive_accepts_touching_intervals() {
        let p = worked_k5();
        assert!((p.z[0] - 0.2).abs() < 1e-12);
        assert!((p.z[3] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn general_ceiling_takes_minimum() {
        // tau2 = 4, alpha = 5: 1/16 vs (1/4 - 1/5)/2 = 1/40
        assert!((general_size_ceiling(4, 5.0) - 0.025).abs() < 1e-15);
        assert!((general_size_ceiling(4, 100.0) - 0.0625).abs() < 1e-15);
    }
}
