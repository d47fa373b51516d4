//! Temporal angular affordance: how strongly each body channel is aimed at
//! each candidate object, pooled over utterance-aligned frame windows.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::domain::{Channel, PoseTrack, ReferenceEvent, Scene, Vec3, DEGENERATE_NORM};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelConfig {
    pub sigma_arm: f64,
    pub sigma_head: f64,
    pub sigma_body: f64,
    pub arm_half_window_frames: i64,
    pub head_body_pad_s: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            sigma_arm: 15.0,
            sigma_head: 30.0,
            sigma_body: 45.0,
            arm_half_window_frames: 10,
            head_body_pad_s: 0.5,
        }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        let sigmas = [self.sigma_arm, self.sigma_head, self.sigma_body];
        if sigmas.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Config(format!("kernel sigmas must be > 0, got {sigmas:?}")));
        }
        if self.arm_half_window_frames < 0 || !(self.head_body_pad_s >= 0.0) {
            return Err(Error::Config("kernel window sizes must be >= 0".into()));
        }
        Ok(())
    }

    pub fn sigma(&self, channel: Channel) -> f64 {
        match channel {
            Channel::RArm | Channel::LArm => self.sigma_arm,
            Channel::Head => self.sigma_head,
            Channel::Body => self.sigma_body,
        }
    }
}

/// Number of pose features per candidate.
pub const POSE_FEATURE_DIM: usize = 6;

/// Per-object pooled kernel scores, in file-format order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PoseFeatures {
    pub r_arm_max: f64,
    pub r_arm_mean: f64,
    pub l_arm_max: f64,
    pub l_arm_mean: f64,
    pub head_max: f64,
    pub body_mean: f64,
}

impl PoseFeatures {
    pub fn to_array(self) -> [f64; POSE_FEATURE_DIM] {
        [
            self.r_arm_max,
            self.r_arm_mean,
            self.l_arm_max,
            self.l_arm_mean,
            self.head_max,
            self.body_mean,
        ]
    }

    pub fn from_array(a: [f64; POSE_FEATURE_DIM]) -> Self {
        Self {
            r_arm_max: a[0],
            r_arm_mean: a[1],
            l_arm_max: a[2],
            l_arm_mean: a[3],
            head_max: a[4],
            body_mean: a[5],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    Arm,
    HeadBody,
}

/// Angle in radians between `direction` and the ray from `origin` to `centroid`.
///
/// A centroid coincident with the origin yields `PI`.
pub fn channel_angle(direction: Vec3, origin: Vec3, centroid: Vec3) -> f64 {
    let to_object = centroid - origin;
    let (dn, tn) = (direction.norm(), to_object.norm());
    debug_assert!(dn > DEGENERATE_NORM, "degenerate channel direction");
    if tn < DEGENERATE_NORM || dn < DEGENERATE_NORM {
        return PI;
    }
    let cos = (direction.dot(to_object) / (dn * tn)).clamp(-1.0, 1.0);
    cos.acos()
}

/// Gaussian kernel `exp(-theta^2 / (2 sigma^2))`; `theta` in radians, `sigma` in degrees.
pub fn gaussian_score(theta: f64, sigma_deg: f64) -> f64 {
    let sigma = sigma_deg.to_radians();
    (-(theta * theta) / (2.0 * sigma * sigma)).exp()
}

/// Inclusive frame range pooled for `kind`, clamped to the track.
pub fn frame_window(
    event: &ReferenceEvent,
    track: &PoseTrack,
    kind: WindowKind,
    config: &KernelConfig,
) -> Result<RangeInclusive<usize>> {
    let frames = track.frames.len();
    let (start, end, channel) = match kind {
        WindowKind::Arm => (
            event.hold_frame - config.arm_half_window_frames,
            event.hold_frame + config.arm_half_window_frames,
            "arm",
        ),
        WindowKind::HeadBody => (
            ((event.phrase_start_s - config.head_body_pad_s) * track.fps).floor() as i64,
            ((event.phrase_end_s + config.head_body_pad_s) * track.fps).ceil() as i64,
            "head_body",
        ),
    };
    let last = frames as i64 - 1;
    let (lo, hi) = (start.max(0), end.min(last));
    if frames == 0 || lo > hi {
        return Err(Error::EmptyWindow {
            channel,
            start,
            end,
            frames,
        });
    }
    Ok(lo as usize..=hi as usize)
}

/// Precomputed windows for one event so candidates can share them.
#[derive(Debug, Clone)]
pub struct EventWindows {
    pub arm: RangeInclusive<usize>,
    pub head_body: RangeInclusive<usize>,
}

impl EventWindows {
    pub fn new(event: &ReferenceEvent, track: &PoseTrack, config: &KernelConfig) -> Result<Self> {
        Ok(Self {
            arm: frame_window(event, track, WindowKind::Arm, config)?,
            head_body: frame_window(event, track, WindowKind::HeadBody, config)?,
        })
    }
}

/// Max and mean of the kernel score of `channel` over `window`.
fn pooled(
    track: &PoseTrack,
    window: &RangeInclusive<usize>,
    channel: Channel,
    centroid: Vec3,
    sigma_deg: f64,
) -> (f64, f64) {
    let frames = &track.frames[window.clone()];
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for frame in frames {
        let ray = frame.channel(channel);
        let s = gaussian_score(channel_angle(ray.direction, ray.origin, centroid), sigma_deg);
        max = max.max(s);
        sum += s;
    }
    (max, sum / frames.len() as f64)
}

pub fn pose_features_in(
    track: &PoseTrack,
    windows: &EventWindows,
    centroid: Vec3,
    config: &KernelConfig,
) -> PoseFeatures {
    let (r_arm_max, r_arm_mean) =
        pooled(track, &windows.arm, Channel::RArm, centroid, config.sigma_arm);
    let (l_arm_max, l_arm_mean) =
        pooled(track, &windows.arm, Channel::LArm, centroid, config.sigma_arm);
    let (head_max, _) = pooled(track, &windows.head_body, Channel::Head, centroid, config.sigma_head);
    let (_, body_mean) = pooled(track, &windows.head_body, Channel::Body, centroid, config.sigma_body);
    PoseFeatures {
        r_arm_max,
        r_arm_mean,
        l_arm_max,
        l_arm_mean,
        head_max,
        body_mean,
    }
}

/// Six pooled affordance features of one candidate centroid for `event`.
pub fn pose_features(
    event: &ReferenceEvent,
    track: &PoseTrack,
    centroid: Vec3,
    config: &KernelConfig,
) -> Result<PoseFeatures> {
    let windows = EventWindows::new(event, track, config)?;
    Ok(pose_features_in(track, &windows, centroid, config))
}

/// Features for every object of `scene`, in candidate order.
pub fn scene_features(
    event: &ReferenceEvent,
    track: &PoseTrack,
    scene: &Scene,
    config: &KernelConfig,
) -> Result<Vec<PoseFeatures>> {
    let windows = EventWindows::new(event, track, config)?;
    Ok(scene
        .objects
        .iter()
        .map(|o| pose_features_in(track, &windows, o.centroid, config))
        .collect())
}

/// One line of `features.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub ref_id: String,
    pub kernel_hash: String,
    pub features: Vec<[f64; POSE_FEATURE_DIM]>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ChannelRay, PoseFrame, RefType, Tier};
    use std::f64::consts::FRAC_PI_2;
    use std::f64::consts::FRAC_PI_4;

    fn event(hold: i64, start: f64, end: f64) -> ReferenceEvent {
        ReferenceEvent {
            ref_id: "r0".into(),
            room_id: "room".into(),
            utterance_key: "u".into(),
            phrase_start_s: start,
            phrase_end_s: end,
            hold_frame: hold,
            target_id: "o0".into(),
            ref_type: RefType::Pronominal,
            tier: Tier::T1,
        }
    }

    fn aimed_frame(dir: Vec3) -> PoseFrame {
        let ray = ChannelRay {
            direction: dir,
            origin: Vec3::default(),
        };
        PoseFrame {
            r_arm: ray,
            l_arm: ray,
            head: ray,
            body: ray,
        }
    }

    fn track(n: usize) -> PoseTrack {
        PoseTrack {
            fps: 30.0,
            frames: vec![aimed_frame(Vec3::new(1.0, 0.0, 0.0)); n],
        }
    }

    #[test]
    fn angle_trivial_cases() {
        let x = Vec3::new(1.0, 0.0, 0.0);
        let o = Vec3::default();
        assert!(channel_angle(x, o, Vec3::new(2.0, 0.0, 0.0)).abs() < 1e-9);
        assert!((channel_angle(x, o, Vec3::new(0.0, 3.0, 0.0)) - FRAC_PI_2).abs() < 1e-9);
        let a = channel_angle(x, Vec3::new(1.0, 1.0, 0.0), Vec3::new(2.0, 2.0, 0.0));
        assert!((a - FRAC_PI_4).abs() < 1e-9);
    }

    #[test]
    fn coincident_centroid_is_maximally_penalized() {
        let p = Vec3::new(0.3, 0.2, 1.0);
        assert_eq!(channel_angle(Vec3::new(0.0, 0.0, 1.0), p, p), PI);
    }

    #[test]
    fn kernel_values() {
        assert_eq!(gaussian_score(0.0, 15.0), 1.0);
        assert!((gaussian_score(15f64.to_radians(), 15.0) - (-0.5f64).exp()).abs() < 1e-12);
        assert!((gaussian_score(30f64.to_radians(), 15.0) - (-2f64).exp()).abs() < 1e-12);
        assert!((gaussian_score(15f64.to_radians(), 15.0) - 0.606531).abs() < 1e-6);
        assert!((gaussian_score(30f64.to_radians(), 15.0) - 0.135335).abs() < 1e-6);
    }

    #[test]
    fn windows_clamp_and_round() {
        let cfg = KernelConfig::default();
        let t = track(300);
        assert_eq!(frame_window(&event(100, 0.0, 0.0), &t, WindowKind::Arm, &cfg).unwrap(), 90..=110);
        assert_eq!(frame_window(&event(5, 0.0, 0.0), &t, WindowKind::Arm, &cfg).unwrap(), 0..=15);
        assert_eq!(
            frame_window(&event(60, 2.0, 3.0), &t, WindowKind::HeadBody, &cfg).unwrap(),
            45..=105
        );
        let short = track(30);
        assert_eq!(frame_window(&event(5, 0.0, 0.0), &short, WindowKind::Arm, &cfg).unwrap(), 0..=15);
    }

    #[test]
    fn window_outside_track_is_empty() {
        let cfg = KernelConfig::default();
        let t = track(30);
        let err = frame_window(&event(100, 0.0, 0.0), &t, WindowKind::Arm, &cfg).unwrap_err();
        assert!(matches!(err, Error::EmptyWindow { channel: "arm", .. }));
        let err = frame_window(&event(5, 10.0, 11.0), &t, WindowKind::HeadBody, &cfg).unwrap_err();
        assert!(matches!(err, Error::EmptyWindow { channel: "head_body", .. }));
    }

    #[test]
    fn fully_aimed_single_frame() {
        let cfg = KernelConfig::default();
        let f = pose_features(&event(0, 0.0, 0.0), &track(1), Vec3::new(4.0, 0.0, 0.0), &cfg).unwrap();
        assert_eq!(f.to_array(), [1.0; 6]);
    }

    #[test]
    fn two_frame_arm_pooling() {
        let cfg = KernelConfig::default();
        let fifteen = 15f64.to_radians();
        let mut t = track(2);
        t.frames[1] = aimed_frame(Vec3::new(fifteen.cos(), fifteen.sin(), 0.0));
        let f = pose_features(&event(0, 0.0, 0.0), &t, Vec3::new(1.0, 0.0, 0.0), &cfg).unwrap();
        assert!((f.r_arm_max - 1.0).abs() < 1e-12);
        assert!((f.r_arm_mean - (1.0 + (-0.5f64).exp()) / 2.0).abs() < 1e-12);
        assert!((f.r_arm_mean - 0.803265).abs() < 1e-6);
    }
}
