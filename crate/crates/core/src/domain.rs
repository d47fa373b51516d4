//! Scene, pose and reference types shared by every stage of the pipeline.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// Directions shorter than this are treated as degenerate.
pub const DEGENERATE_NORM: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector in the same direction, or `None` for degenerate input.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > DEGENERATE_NORM).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(v: [f64; 3]) -> Self {
        Vec3::new(v[0], v[1], v[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub object_id: String,
    pub centroid: Vec3,
    pub raw_label: String,
    pub category: String,
}

/// A room and its candidate objects. Object order defines the candidate index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub room_id: String,
    pub objects: Vec<SceneObject>,
}

impl Scene {
    pub fn object_index(&self, object_id: &str) -> Option<usize> {
        self.objects.iter().position(|o| o.object_id == object_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    RArm,
    LArm,
    Head,
    Body,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::RArm, Channel::LArm, Channel::Head, Channel::Body];

    pub fn name(self) -> &'static str {
        match self {
            Channel::RArm => "r_arm",
            Channel::LArm => "l_arm",
            Channel::Head => "head",
            Channel::Body => "body",
        }
    }
}

/// Direction and origin of one body channel in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelRay {
    pub direction: Vec3,
    pub origin: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseFrame {
    pub r_arm: ChannelRay,
    pub l_arm: ChannelRay,
    pub head: ChannelRay,
    pub body: ChannelRay,
}

impl PoseFrame {
    pub fn channel(&self, channel: Channel) -> &ChannelRay {
        match channel {
            Channel::RArm => &self.r_arm,
            Channel::LArm => &self.l_arm,
            Channel::Head => &self.head,
            Channel::Body => &self.body,
        }
    }

    pub fn channel_mut(&mut self, channel: Channel) -> &mut ChannelRay {
        match channel {
            Channel::RArm => &mut self.r_arm,
            Channel::LArm => &mut self.l_arm,
            Channel::Head => &mut self.head,
            Channel::Body => &mut self.body,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseTrack {
    pub fps: f64,
    pub frames: Vec<PoseFrame>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefType {
    ExactNp,
    Pronominal,
    Partitive,
}

impl RefType {
    pub const ALL: [RefType; 3] = [RefType::ExactNp, RefType::Pronominal, RefType::Partitive];

    pub fn name(self) -> &'static str {
        match self {
            RefType::ExactNp => "exact_np",
            RefType::Pronominal => "pronominal",
            RefType::Partitive => "partitive",
        }
    }
}

impl fmt::Display for RefType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Gesture confidence tier. Metadata only; never a model input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tier {
    T1,
    T2,
    T3,
    T4,
    T5,
}

impl Tier {
    pub const ALL: [Tier; 5] = [Tier::T1, Tier::T2, Tier::T3, Tier::T4, Tier::T5];

    /// T1, T2 and T5 form the pointing partition; T3 and T4 the non-pointing one.
    pub fn is_pointing(self) -> bool {
        matches!(self, Tier::T1 | Tier::T2 | Tier::T5)
    }

    pub fn name(self) -> &'static str {
        match self {
            Tier::T1 => "T1",
            Tier::T2 => "T2",
            Tier::T3 => "T3",
            Tier::T4 => "T4",
            Tier::T5 => "T5",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceEvent {
    pub ref_id: String,
    pub room_id: String,
    pub utterance_key: String,
    pub phrase_start_s: f64,
    pub phrase_end_s: f64,
    pub hold_frame: i64,
    pub target_id: String,
    pub ref_type: RefType,
    pub tier: Tier,
}

/// Scenes, pose tracks and reference events. Maps are ordered so iteration
/// (and everything derived from it) is deterministic.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub scenes: BTreeMap<String, Scene>,
    pub tracks: BTreeMap<String, PoseTrack>,
    pub events: Vec<ReferenceEvent>,
}

impl Dataset {
    pub fn room_ids(&self) -> Vec<String> {
        self.scenes.keys().cloned().collect()
    }

    /// Sorted set of every canonical category present in any scene.
    pub fn categories(&self) -> Vec<String> {
        let mut cats: Vec<String> = self
            .scenes
            .values()
            .flat_map(|s| s.objects.iter().map(|o| o.category.clone()))
            .collect();
        cats.sort();
        cats.dedup();
        cats
    }

    pub fn event(&self, ref_id: &str) -> Option<&ReferenceEvent> {
        self.events.iter().find(|e| e.ref_id == ref_id)
    }
}
