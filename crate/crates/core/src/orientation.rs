//! Wall-frame plane angles of the quickdraw from one acceleration reading.
//!
//! Each reading is evaluated on its own, without filtering across samples.
//! The three angles are
//!
//! * `theta_yx = atan2(-y_s, x_s)`
//! * `theta_yz = 180° - atan2(-y_s, -z_s)`
//! * `theta_xz = 180° - atan2(x_s, -z_s)`
//!
//! all normalized to `[0°, 360°)`. The `y_s` sign is the same in the yx and yz
//! planes, so that the upward lowering pose (`y_s < 0`, `z_s < 0`, `x_s ≈ 0`)
//! reads as yx ≈ 90°, yz in (90°, 180°) and xz ≈ 180°.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_LOWERING_TOL_DEG: f64 = 25.0;

/// Plane components below this magnitude (3 counts at ±2 g, 8 bit) carry no
/// usable direction.
pub const DEFAULT_DEGENERACY_FLOOR_G: f64 = 3.0 * 2.0 / 127.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Plane {
    YX,
    YZ,
    XZ,
}

impl std::fmt::Display for Plane {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Plane::YX => "yx",
            Plane::YZ => "yz",
            Plane::XZ => "xz",
        })
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum OrientationError {
    #[error("degenerate orientation in the {0} plane")]
    Degenerate(Plane),
    #[error("degenerate orientation: both plane components are zero")]
    ZeroVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientationSample {
    /// Milliseconds.
    pub t: f64,
    pub theta_yx: f64,
    pub theta_yz: f64,
    pub theta_xz: f64,
}

impl OrientationSample {
    pub fn angles(&self) -> [f64; 3] {
        [self.theta_yx, self.theta_yz, self.theta_xz]
    }

    pub fn from_angles(t: f64, a: [f64; 3]) -> Self {
        Self {
            t,
            theta_yx: a[0],
            theta_yz: a[1],
            theta_xz: a[2],
        }
    }
}

/// Map any angle in degrees onto `[0, 360)`.
pub fn normalize_deg(a: f64) -> f64 {
    let r = a.rem_euclid(360.0);
    if r >= 360.0 {
        0.0
    } else {
        // fold -0.0 into +0.0
        r + 0.0
    }
}

/// Signed shortest difference `b - a` in `(-180, 180]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = normalize_deg(b - a);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

/// Full-circle angle of the vector `(den, num)`, in `[0, 360)`.
pub fn plane_angle(num: f64, den: f64) -> Result<f64, OrientationError> {
    if num == 0.0 && den == 0.0 {
        return Err(OrientationError::ZeroVector);
    }
    Ok(normalize_deg(num.atan2(den).to_degrees()))
}

/// Wall-frame angle of one plane for a reading `[x_s, y_s, z_s]`. Fails when
/// both in-plane components are below `floor`.
pub fn wall_angle(plane: Plane, s: [f64; 3], floor: f64) -> Result<f64, OrientationError> {
    let [x, y, z] = s;
    let (a, b) = match plane {
        Plane::YX => (x, y),
        Plane::YZ => (y, z),
        Plane::XZ => (x, z),
    };
    if a.abs() < floor && b.abs() < floor {
        return Err(OrientationError::Degenerate(plane));
    }
    let inner = |num: f64, den: f64| plane_angle(num, den).map_err(|_| OrientationError::Degenerate(plane));
    Ok(match plane {
        Plane::YX => inner(-y, x)?,
        Plane::YZ => normalize_deg(180.0 - inner(-y, -z)?),
        Plane::XZ => normalize_deg(180.0 - inner(x, -z)?),
    })
}

/// Plane angles of one reading `[x_s, y_s, z_s]` in g, using the default
/// degeneracy floor.
pub fn orientation_of(s: [f64; 3], t: f64) -> Result<OrientationSample, OrientationError> {
    orientation_with_floor(s, t, DEFAULT_DEGENERACY_FLOOR_G)
}

pub fn orientation_with_floor(
    s: [f64; 3],
    t: f64,
    floor: f64,
) -> Result<OrientationSample, OrientationError> {
    Ok(OrientationSample {
        t,
        theta_yx: wall_angle(Plane::YX, s, floor)?,
        theta_yz: wall_angle(Plane::YZ, s, floor)?,
        theta_xz: wall_angle(Plane::XZ, s, floor)?,
    })
}

/// Upward, wall-orthogonal pose held while the climber is lowered.
pub fn lowering_signature(o: &OrientationSample, tol: f64) -> bool {
    o.theta_yz > 90.0
        && o.theta_yz < 180.0
        && (o.theta_yx - 90.0).abs() <= tol
        && (o.theta_xz - 180.0).abs() <= tol
}

/// The wall confines the xz angle to [90°, 270°]; anything else means the
/// sensor twisted on its sling.
pub fn twist_flag(o: &OrientationSample) -> bool {
    !(90.0..=270.0).contains(&o.theta_xz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn o(yx: f64, yz: f64, xz: f64) -> OrientationSample {
        OrientationSample::from_angles(0.0, [yx, yz, xz])
    }

    #[test]
    fn plane_angle_axes() {
        assert_eq!(plane_angle(1.0, 0.0).unwrap(), 90.0);
        assert_eq!(plane_angle(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(plane_angle(-1.0, 0.0).unwrap(), 270.0);
        assert_eq!(plane_angle(0.0, -1.0).unwrap(), 180.0);
        assert_eq!(plane_angle(0.0, 0.0), Err(OrientationError::ZeroVector));
    }

    #[test]
    fn orientation_axis_aligned() {
        let f = DEFAULT_DEGENERACY_FLOOR_G;
        assert_eq!(wall_angle(Plane::YX, [0.0, -1.0, 0.0], f).unwrap(), 90.0);
        assert_eq!(wall_angle(Plane::YX, [1.0, 0.0, 0.0], f).unwrap(), 0.0);
        // inner yz angle of 90° maps to 180° - 90°
        assert_eq!(wall_angle(Plane::YZ, [0.0, -1.0, 0.0], f).unwrap(), 90.0);
        assert_eq!(wall_angle(Plane::XZ, [1.0, 0.0, 0.0], f).unwrap(), 90.0);
        assert_eq!(wall_angle(Plane::YZ, [0.0, 0.0, -1.0], f).unwrap(), 180.0);
        assert_eq!(wall_angle(Plane::XZ, [0.0, 0.0, -1.0], f).unwrap(), 180.0);
        assert_eq!(wall_angle(Plane::YZ, [0.0, 0.0, 1.0], f).unwrap(), 0.0);
        assert_eq!(wall_angle(Plane::XZ, [0.0, 0.0, 1.0], f).unwrap(), 0.0);
        assert_eq!(wall_angle(Plane::YZ, [0.0, 1.0, 0.0], f).unwrap(), 270.0);
        let full = orientation_of([0.0, -0.6, -0.8], 5.0).unwrap();
        assert_eq!(full.theta_yx, 90.0);
        assert_eq!(full.theta_xz, 180.0);
        assert_eq!(full.t, 5.0);
    }

    #[test]
    fn degenerate_planes_are_named() {
        assert_eq!(
            orientation_of([0.01, 0.01, 1.0], 0.0),
            Err(OrientationError::Degenerate(Plane::YX))
        );
        assert_eq!(
            orientation_of([1.0, 0.0, 0.01], 0.0),
            Err(OrientationError::Degenerate(Plane::YZ))
        );
        assert_eq!(
            orientation_of([0.0, 1.0, 0.0], 0.0),
            Err(OrientationError::Degenerate(Plane::XZ))
        );
    }

    #[test]
    fn lowering_pose_matches_signature() {
        let s = orientation_of([0.0, -0.8, -0.6], 0.0).unwrap();
        assert!(lowering_signature(&s, DEFAULT_LOWERING_TOL_DEG));
        let hang = orientation_of([0.0, 0.97, -0.24], 0.0).unwrap();
        assert!(!lowering_signature(&hang, DEFAULT_LOWERING_TOL_DEG));
    }

    #[test]
    fn signature_examples() {
        assert!(lowering_signature(&o(90.0, 135.0, 180.0), 25.0));
        assert!(!lowering_signature(&o(90.0, 45.0, 180.0), 25.0));
        assert!(!lowering_signature(&o(90.0, 90.0, 180.0), 25.0));
        assert!(!lowering_signature(&o(90.0, 180.0, 180.0), 25.0));
        assert!(lowering_signature(&o(115.0, 100.0, 155.0), 25.0));
        assert!(!lowering_signature(&o(116.0, 100.0, 180.0), 25.0));
    }

    #[test]
    fn twist_examples() {
        assert!(!twist_flag(&o(0.0, 0.0, 180.0)));
        assert!(twist_flag(&o(0.0, 0.0, 45.0)));
        assert!(!twist_flag(&o(0.0, 0.0, 270.0)));
        assert!(!twist_flag(&o(0.0, 0.0, 90.0)));
        assert!(twist_flag(&o(0.0, 0.0, 270.5)));
    }

    #[test]
    fn angle_diff_wraps() {
        assert_eq!(angle_diff(350.0, 10.0), 20.0);
        assert_eq!(angle_diff(10.0, 350.0), -20.0);
        assert_eq!(angle_diff(0.0, 180.0), 180.0);
    }

    proptest! {
        #[test]
        fn scale_invariance(a in -5.0f64..5.0, b in -5.0f64..5.0, k in 1e-3f64..1e3) {
            prop_assume!(a.abs() > 1e-6 || b.abs() > 1e-6);
            let p = plane_angle(a, b).unwrap();
            let q = plane_angle(k * a, k * b).unwrap();
            prop_assert!(angle_diff(p, q).abs() < 1e-9);
        }

        #[test]
        fn negation_adds_half_turn(a in -5.0f64..5.0, b in -5.0f64..5.0) {
            prop_assume!(a.abs() > 1e-6 || b.abs() > 1e-6);
            let p = plane_angle(a, b).unwrap();
            let q = plane_angle(-a, -b).unwrap();
            prop_assert!(angle_diff(normalize_deg(p + 180.0), q).abs() < 1e-9);
        }

        #[test]
        fn angles_are_normalized(x in -3.0f64..3.0, y in -3.0f64..3.0, z in -3.0f64..3.0) {
            if let Ok(s) = orientation_of([x, y, z], 0.0) {
                for a in s.angles() {
                    prop_assert!((0.0..360.0).contains(&a));
                }
            }
        }
    }
}
