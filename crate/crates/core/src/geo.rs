//! Scene geometry: geodetic ingestion into a local east-north-up frame,
//! camera poses and their interpolation, and camera-facing billboard
//! orientation.
//!
//! The local frame is right-handed with `x` east, `y` north and `z` up,
//! in meters relative to the scene origin.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;

/// WGS84 semi-major axis in meters.
pub const WGS84_A: f64 = 6_378_137.0;
/// WGS84 flattening.
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;
/// WGS84 first eccentricity squared.
pub const WGS84_E2: f64 = WGS84_F * (2.0 - WGS84_F);

/// Tolerance on `|anchor - camera|` below which no facing direction exists.
pub const DEGENERATE_DISTANCE_M: f64 = 1e-9;
/// Angle between view direction and world up under which the yaw fallback applies.
pub const PARALLEL_TOLERANCE_RAD: f64 = 1e-6;

/// A point on or above the WGS84 ellipsoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeodetic")]
pub struct GeodeticCoord {
    pub longitude_deg: f64,
    pub latitude_deg: f64,
    pub altitude_m: f64,
}

#[derive(Deserialize)]
struct RawGeodetic {
    longitude_deg: f64,
    latitude_deg: f64,
    altitude_m: f64,
}

impl TryFrom<RawGeodetic> for GeodeticCoord {
    type Error = Error;

    fn try_from(raw: RawGeodetic) -> Result<Self> {
        GeodeticCoord::new(raw.longitude_deg, raw.latitude_deg, raw.altitude_m)
    }
}

impl GeodeticCoord {
    pub fn new(longitude_deg: f64, latitude_deg: f64, altitude_m: f64) -> Result<Self> {
        let coord = Self {
            longitude_deg,
            latitude_deg,
            altitude_m,
        };
        coord.validate()?;
        Ok(coord)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.longitude_deg.is_finite()
            && self.latitude_deg.is_finite()
            && self.altitude_m.is_finite())
        {
            return Err(Error::InvalidCoordinate(format!(
                "non-finite component in {self:?}"
            )));
        }
        if !(-180.0..=180.0).contains(&self.longitude_deg) {
            return Err(Error::InvalidCoordinate(format!(
                "longitude {} outside [-180, 180]",
                self.longitude_deg
            )));
        }
        if !(-90.0..=90.0).contains(&self.latitude_deg) {
            return Err(Error::InvalidCoordinate(format!(
                "latitude {} outside [-90, 90]",
                self.latitude_deg
            )));
        }
        Ok(())
    }

    /// Earth-centered, earth-fixed position in meters.
    pub fn to_ecef(&self) -> Vec3 {
        let lon = self.longitude_deg.to_radians();
        let lat = self.latitude_deg.to_radians();
        let (sin_lat, cos_lat) = lat.sin_cos();
        let (sin_lon, cos_lon) = lon.sin_cos();
        let n = prime_vertical_radius(sin_lat);
        let h = self.altitude_m;
        Vec3::new(
            (n + h) * cos_lat * cos_lon,
            (n + h) * cos_lat * sin_lon,
            (n * (1.0 - WGS84_E2) + h) * sin_lat,
        )
    }

    /// Inverse of [`GeodeticCoord::to_ecef`], iterated to convergence.
    pub fn from_ecef(ecef: Vec3) -> Result<Self> {
        if !ecef.is_finite() {
            return Err(Error::InvalidCoordinate(format!(
                "non-finite ECEF position {ecef:?}"
            )));
        }
        let p = ecef.x.hypot(ecef.y);
        let lon = ecef.y.atan2(ecef.x);
        let mut lat = ecef.z.atan2(p * (1.0 - WGS84_E2));
        for _ in 0..32 {
            let sin_lat = lat.sin();
            let n = prime_vertical_radius(sin_lat);
            let next = (ecef.z + WGS84_E2 * n * sin_lat).atan2(p);
            let done = (next - lat).abs() < 1e-15;
            lat = next;
            if done {
                break;
            }
        }
        let (sin_lat, cos_lat) = lat.sin_cos();
        let alt =
            p * cos_lat + ecef.z * sin_lat - WGS84_A * (1.0 - WGS84_E2 * sin_lat * sin_lat).sqrt();
        Ok(Self {
            longitude_deg: lon.to_degrees(),
            latitude_deg: lat.to_degrees().clamp(-90.0, 90.0),
            altitude_m: alt,
        })
    }
}

fn prime_vertical_radius(sin_lat: f64) -> f64 {
    WGS84_A / (1.0 - WGS84_E2 * sin_lat * sin_lat).sqrt()
}

/// Rows of the ECEF to ENU rotation at `origin`: east, north, up.
fn enu_basis(origin: &GeodeticCoord) -> [Vec3; 3] {
    let (sin_lon, cos_lon) = origin.longitude_deg.to_radians().sin_cos();
    let (sin_lat, cos_lat) = origin.latitude_deg.to_radians().sin_cos();
    [
        Vec3::new(-sin_lon, cos_lon, 0.0),
        Vec3::new(-sin_lat * cos_lon, -sin_lat * sin_lon, cos_lat),
        Vec3::new(cos_lat * cos_lon, cos_lat * sin_lon, sin_lat),
    ]
}

/// East/north/up offset of `p` from `origin`.
pub fn enu_from_geodetic(p: &GeodeticCoord, origin: &GeodeticCoord) -> Result<Vec3> {
    p.validate()?;
    origin.validate()?;
    let d = p.to_ecef() - origin.to_ecef();
    let [east, north, up] = enu_basis(origin);
    Ok(Vec3::new(east.dot(d), north.dot(d), up.dot(d)))
}

/// Geodetic position of the local offset `v` about `origin`.
///
/// The conversion goes through ECEF and is exact at any range; the local
/// frame is only a good approximation of "flat ground" within ~100 km.
pub fn geodetic_from_enu(v: Vec3, origin: &GeodeticCoord) -> Result<GeodeticCoord> {
    if !v.is_finite() {
        return Err(Error::InvalidCoordinate(format!(
            "non-finite local offset {v:?}"
        )));
    }
    origin.validate()?;
    let [east, north, up] = enu_basis(origin);
    let ecef = origin.to_ecef() + east * v.x + north * v.y + up * v.z;
    GeodeticCoord::from_ecef(ecef)
}

/// A position or direction in the local scene frame, in meters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    #[serde(deserialize_with = "numeric::number_or_string")]
    pub x: f64,
    #[serde(deserialize_with = "numeric::number_or_string")]
    pub y: f64,
    #[serde(deserialize_with = "numeric::number_or_string")]
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector in the same direction; `None` for a zero or non-finite vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn lerp(self, o: Vec3, s: f64) -> Vec3 {
        self + (o - self) * s
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (o - self).norm()
    }

    /// Angle between two non-zero vectors, accurate for nearly parallel inputs.
    pub fn angle_to(self, o: Vec3) -> f64 {
        self.cross(o).norm().atan2(self.dot(o))
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Rotation quaternion, kept at unit norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawQuaternion")]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Deserialize)]
struct RawQuaternion {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl TryFrom<RawQuaternion> for Quaternion {
    type Error = Error;

    fn try_from(raw: RawQuaternion) -> Result<Self> {
        let q = Quaternion {
            w: raw.w,
            x: raw.x,
            y: raw.y,
            z: raw.z,
        };
        // Values that are already unit length are kept bit-for-bit.
        if (q.norm() - 1.0).abs() <= 1e-12 {
            Ok(q)
        } else {
            Quaternion::new(raw.w, raw.x, raw.y, raw.z)
        }
    }
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Normalizing constructor.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let raw = Quaternion { w, x, y, z };
        let n = raw.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "quaternion {raw:?} cannot be normalized"
            )));
        }
        Ok(raw.scaled(1.0 / n))
    }

    pub fn from_axis_angle(axis: Vec3, angle_rad: f64) -> Result<Self> {
        let axis = axis
            .normalized()
            .ok_or_else(|| Error::InvalidParameter("zero rotation axis".into()))?;
        let (s, c) = (angle_rad * 0.5).sin_cos();
        Quaternion::new(c, axis.x * s, axis.y * s, axis.z * s)
    }

    /// Rotation whose matrix has the given orthonormal columns.
    pub fn from_basis(right: Vec3, forward: Vec3, up: Vec3) -> Result<Self> {
        let (m00, m01, m02) = (right.x, forward.x, up.x);
        let (m10, m11, m12) = (right.y, forward.y, up.y);
        let (m20, m21, m22) = (right.z, forward.z, up.z);
        let trace = m00 + m11 + m22;
        let (w, x, y, z) = if trace > 0.0 {
            let s = (trace + 1.0).sqrt() * 2.0;
            (0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s)
        } else if m00 > m11 && m00 > m22 {
            let s = (1.0 + m00 - m11 - m22).sqrt() * 2.0;
            ((m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s)
        } else if m11 > m22 {
            let s = (1.0 + m11 - m00 - m22).sqrt() * 2.0;
            ((m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s)
        } else {
            let s = (1.0 + m22 - m00 - m11).sqrt() * 2.0;
            ((m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s)
        };
        Quaternion::new(w, x, y, z)
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dot(&self, o: &Quaternion) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    fn scaled(self, s: f64) -> Quaternion {
        Quaternion {
            w: self.w * s,
            x: self.x * s,
            y: self.y * s,
            z: self.z * s,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn rotate(&self, v: Vec3) -> Vec3 {
        let u = Vec3::new(self.x, self.y, self.z);
        let t = u.cross(v) * 2.0;
        v + t * self.w + u.cross(t)
    }

    /// Board-local axes: right is `+x`, forward (the facing normal) is `+y`, up is `+z`.
    pub fn right(&self) -> Vec3 {
        self.rotate(Vec3::X)
    }

    pub fn forward(&self) -> Vec3 {
        self.rotate(Vec3::Y)
    }

    pub fn up(&self) -> Vec3 {
        self.rotate(Vec3::Z)
    }

    /// Shortest-arc spherical interpolation.
    pub fn slerp(&self, other: &Quaternion, s: f64) -> Quaternion {
        let mut b = *other;
        let mut cos_theta = self.dot(&b);
        if cos_theta < 0.0 {
            b = b.scaled(-1.0);
            cos_theta = -cos_theta;
        }
        let (wa, wb) = if cos_theta > 0.9995 {
            (1.0 - s, s)
        } else {
            let theta = cos_theta.min(1.0).acos();
            let sin_theta = theta.sin();
            (
                ((1.0 - s) * theta).sin() / sin_theta,
                (s * theta).sin() / sin_theta,
            )
        };
        let mixed = Quaternion {
            w: self.w * wa + b.w * wb,
            x: self.x * wa + b.x * wb,
            y: self.y * wa + b.y * wb,
            z: self.z * wa + b.z * wb,
        };
        mixed.scaled(1.0 / mixed.norm())
    }
}

/// An oriented viewpoint in the scene frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub position: Vec3,
    pub orientation: Quaternion,
}

impl CameraPose {
    pub fn new(position: Vec3, orientation: Quaternion) -> Self {
        Self {
            position,
            orientation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.position.is_finite() || !self.orientation.is_finite() {
            return Err(Error::InvalidPose(format!("non-finite pose {self:?}")));
        }
        if (self.orientation.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidPose(format!(
                "orientation norm {} is not 1",
                self.orientation.norm()
            )));
        }
        Ok(())
    }
}

/// Easing curve applied to the interpolation parameter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Easing {
    Linear,
    #[default]
    Smoothstep,
    Smootherstep,
}

impl Easing {
    pub const ALL: [Easing; 3] = [Easing::Linear, Easing::Smoothstep, Easing::Smootherstep];

    pub fn apply(self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            Easing::Linear => t,
            Easing::Smoothstep => t * t * (3.0 - 2.0 * t),
            Easing::Smootherstep => t * t * t * (t * (t * 6.0 - 15.0) + 10.0),
        }
    }
}

/// Roll-free orientation for a board at `anchor` facing a camera at `camera`.
///
/// The returned rotation maps the board's forward axis (`+y`) onto the
/// direction from anchor to camera and keeps its right axis (`+x`)
/// horizontal with respect to `world_up`, so text on the board stays upright.
///
/// When the camera is straight above or below the anchor (within
/// [`PARALLEL_TOLERANCE_RAD`]) the right axis is undetermined; the yaw of
/// `previous` is reused when given, otherwise yaw 0 (right axis along the
/// reference horizontal, east for a `+z` up). Inside that band the forward
/// axis still points exactly at the camera and the right axis may tilt off
/// the horizontal by at most the tolerance.
pub fn billboard_rotation(
    anchor: Vec3,
    camera: Vec3,
    world_up: Vec3,
    previous: Option<&Quaternion>,
) -> Result<Quaternion> {
    if !anchor.is_finite() || !camera.is_finite() || !world_up.is_finite() {
        return Err(Error::InvalidCoordinate(
            "non-finite billboard input".into(),
        ));
    }
    if (world_up.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "world up {world_up:?} is not unit length"
        )));
    }
    let to_camera = camera - anchor;
    let distance = to_camera.norm();
    if distance <= DEGENERATE_DISTANCE_M {
        return Err(Error::DegenerateView);
    }
    let forward = to_camera * (1.0 / distance);
    let side = forward.cross(world_up);
    let right = if side.norm() > PARALLEL_TOLERANCE_RAD.sin() {
        side * (1.0 / side.norm())
    } else {
        let yaw = previous.map_or(0.0, |q| yaw_about(q, world_up));
        let horizontal = yaw_right(world_up, yaw);
        (horizontal - forward * horizontal.dot(forward))
            .normalized()
            .unwrap_or(horizontal)
    };
    let up = right.cross(forward);
    Quaternion::from_basis(right, forward, up)
}

/// Horizontal reference direction for yaw 0 given `world_up`.
fn reference_right(world_up: Vec3) -> Vec3 {
    let candidate = Vec3::X - world_up * world_up.x;
    if candidate.norm() > 0.1 {
        candidate * (1.0 / candidate.norm())
    } else {
        let alt = Vec3::Y - world_up * world_up.y;
        alt * (1.0 / alt.norm())
    }
}

fn yaw_right(world_up: Vec3, yaw: f64) -> Vec3 {
    let r0 = reference_right(world_up);
    let r90 = world_up.cross(r0);
    let (s, c) = yaw.sin_cos();
    r0 * c + r90 * s
}

/// Yaw of an orientation's right axis about `world_up`, counterclockwise
/// from the reference horizontal.
pub fn yaw_about(q: &Quaternion, world_up: Vec3) -> f64 {
    let r0 = reference_right(world_up);
    let r90 = world_up.cross(r0);
    let right = q.right();
    right.dot(r90).atan2(right.dot(r0))
}

/// Pose at parameter `t` between `a` and `b`.
pub fn interpolate_pose(
    a: &CameraPose,
    b: &CameraPose,
    t: f64,
    easing: Easing,
) -> Result<CameraPose> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::ParameterRange {
            name: "t",
            value: t,
        });
    }
    if t == 0.0 {
        return Ok(*a);
    }
    if t == 1.0 {
        return Ok(*b);
    }
    let s = easing.apply(t);
    let position = if a.position == b.position {
        a.position
    } else {
        a.position.lerp(b.position, s)
    };
    let orientation = if a.orientation == b.orientation {
        a.orientation
    } else {
        a.orientation.slerp(&b.orientation, s)
    };
    Ok(CameraPose {
        position,
        orientation,
    })
}

/// Camera travel tuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TravelConfig {
    pub speed_mps: f64,
    pub min_duration_s: f64,
    pub easing: Easing,
}

impl Default for TravelConfig {
    fn default() -> Self {
        Self {
            speed_mps: 80.0,
            min_duration_s: 1.5,
            easing: Easing::Smoothstep,
        }
    }
}

/// A timed camera move between two poses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TravelPlan {
    pub from: CameraPose,
    pub to: CameraPose,
    pub duration_s: f64,
    pub easing: Easing,
}

impl TravelPlan {
    /// Pose at normalized progress `t` in `[0, 1]`.
    pub fn sample(&self, t: f64) -> Result<CameraPose> {
        interpolate_pose(&self.from, &self.to, t, self.easing)
    }

    /// Pose after `elapsed_s` seconds; clamps outside the travel window.
    pub fn sample_at(&self, elapsed_s: f64) -> CameraPose {
        let t = if elapsed_s.is_nan() {
            0.0
        } else {
            (elapsed_s / self.duration_s).clamp(0.0, 1.0)
        };
        // t is in range, so interpolation cannot fail
        interpolate_pose(&self.from, &self.to, t, self.easing).unwrap_or(self.to)
    }
}

pub fn travel_plan(a: &CameraPose, b: &CameraPose, config: &TravelConfig) -> Result<TravelPlan> {
    a.validate()?;
    b.validate()?;
    if !(config.speed_mps.is_finite() && config.speed_mps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "travel speed {} must be positive",
            config.speed_mps
        )));
    }
    if !(config.min_duration_s.is_finite() && config.min_duration_s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "minimum travel duration {} must be positive",
            config.min_duration_s
        )));
    }
    let distance = a.position.distance(b.position);
    Ok(TravelPlan {
        from: *a,
        to: *b,
        duration_s: config.min_duration_s.max(distance / config.speed_mps),
        easing: config.easing,
    })
}
