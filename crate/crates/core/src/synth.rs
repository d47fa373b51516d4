//! Synthetic rooms, gesture tracks and referring expressions.
//!
//! Pointing references aim the dominant arm at the target with angular noise
//! over a 21-frame hold; non-pointing references leave the arms at random
//! orientations and only loosely orient the head. Exact noun phrases are
//! embedded near their target's category, pronominal and partitive phrases
//! carry no category information. Targets follow a per-category salience
//! prior; category-free phrasings each carry their own prior (the way "sit
//! on that" suggests furniture), so only a model that sees the utterance can
//! exploit it.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use rand::distributions::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::save_dataset;
use crate::domain::{ChannelRay, Dataset, PoseFrame, PoseTrack, RefType, ReferenceEvent, Scene, SceneObject, Tier, Vec3};
use crate::embedding::PseudoEmbedderConfig;
use crate::error::{Error, Result};
use crate::seed;
use crate::vocab::CategoryVocabulary;

/// Base nouns in descending frequency rank, as scene-graph style labels.
pub const CATEGORY_LABELS: [&str; 50] = [
    "Chair", "Table", "Book", "Cup", "Lamp", "Plant", "Pillow", "Bottle", "Picture", "Box", "Vase", "Bowl", "Shelf",
    "Monitor", "Keyboard", "Plate", "Clock", "Cabinet", "Sofa", "DiningTable", "Basket", "Candle", "Stool", "Laptop",
    "Phone", "Remote", "Speaker", "Towel", "Mirror", "Rug", "TrashCan", "Desk", "Drawer", "Curtain", "Bench",
    "Window", "Door", "Fan", "Heater", "Kettle", "Toaster", "Microwave", "Fridge", "Oven", "Sink", "Guitar",
    "Printer", "TVStand", "Bed", "CoffeeMachine",
];

const MODIFIERS: [&str; 8] = ["Red", "Blue", "White", "Wood", "Metal", "Glass", "Small", "Large"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeMix {
    pub exact_np: f64,
    pub partitive: f64,
    pub pronominal: f64,
}

impl Default for TypeMix {
    fn default() -> Self {
        Self {
            exact_np: 0.38,
            partitive: 0.14,
            pronominal: 0.48,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_rooms: usize,
    pub objects_min: usize,
    pub objects_max: usize,
    pub n_refs: usize,
    pub pointing_fraction: f64,
    pub type_mix: TypeMix,
    pub arm_noise_deg: f64,
    pub head_noise_deg: f64,
    /// Probability that a target is drawn only among objects sharing their
    /// category with another object in the room.
    pub distractor_same_category_prob: f64,
    pub seed: u64,

    /// Moves exact noun phrases from pointing to non-pointing references
    /// without changing the overall type mix. See [`SynthConfig::exact_np_share`].
    pub exact_np_regime_shift: f64,

    pub fps: f64,
    pub room_size: [f64; 3],
    pub min_separation_m: f64,
    pub min_speaker_distance_m: f64,
    pub zipf_exponent: f64,
    /// Log-scale spread of the per-category target prior of exact noun phrases.
    pub salience_spread: f64,
    /// Log-scale spread of the per-phrasing prior of pronominal and partitive
    /// references.
    pub context_salience_spread: f64,
    /// Body facing noise (yaw), degrees.
    pub body_noise_deg: f64,
    /// Head noise multiplier for non-pointing references.
    pub non_pointing_head_factor: f64,
    /// Arm noise multiplier for T2 references.
    pub t2_arm_factor: f64,
    /// Per-frame jitter on every channel direction, degrees.
    pub frame_jitter_deg: f64,
    /// Relative weights of T1, T2, T5 among pointing references.
    pub pointing_tier_weights: [f64; 3],
    /// Relative weights of T3, T4 among non-pointing references.
    pub non_pointing_tier_weights: [f64; 2],
    /// Probability that the right arm is the dominant one.
    pub right_handed_prob: f64,
    /// Distinct phrasings per utterance class.
    pub utterance_variants: usize,
    /// Probability that a raw label carries a modifier prefix.
    pub modifier_prob: f64,
    pub embed_dim: usize,
    pub within_group_noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_rooms: 5,
            objects_min: 42,
            objects_max: 61,
            n_refs: 2000,
            pointing_fraction: 0.55,
            type_mix: TypeMix::default(),
            arm_noise_deg: 8.0,
            head_noise_deg: 20.0,
            distractor_same_category_prob: 0.1,
            seed: 7,
            exact_np_regime_shift: 0.3,
            fps: 30.0,
            room_size: [6.0, 6.0, 2.5],
            min_separation_m: 0.3,
            min_speaker_distance_m: 1.0,
            zipf_exponent: 0.6,
            salience_spread: 0.0,
            context_salience_spread: 4.0,
            body_noise_deg: 45.0,
            non_pointing_head_factor: 3.0,
            t2_arm_factor: 2.0,
            frame_jitter_deg: 1.0,
            pointing_tier_weights: [1344.0, 558.0, 166.0],
            non_pointing_tier_weights: [153.0, 1543.0],
            right_handed_prob: 0.8,
            utterance_variants: 8,
            modifier_prob: 0.4,
            embed_dim: 384,
            within_group_noise: 0.3,
        }
    }
}

impl SynthConfig {
    /// Exact-NP probability within one regime. Averaged over regimes with the
    /// pointing fraction as weight it equals `type_mix.exact_np`.
    pub fn exact_np_share(&self, regime: Regime) -> f64 {
        let f = self.pointing_fraction;
        let shift = self.exact_np_regime_shift;
        match regime {
            Regime::Pointing => self.type_mix.exact_np - (1.0 - f) * shift,
            Regime::NonPointing => self.type_mix.exact_np + f * shift,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        let mix = self.type_mix;
        if self.n_rooms == 0 {
            return bad("n_rooms must be > 0".into());
        }
        if self.objects_min < 2 || self.objects_min > self.objects_max {
            return bad(format!("objects range [{}, {}] invalid", self.objects_min, self.objects_max));
        }
        for (name, v) in [
            ("pointing_fraction", self.pointing_fraction),
            ("distractor_same_category_prob", self.distractor_same_category_prob),
            ("right_handed_prob", self.right_handed_prob),
            ("modifier_prob", self.modifier_prob),
            ("within_group_noise", self.within_group_noise),
            ("type_mix.exact_np", mix.exact_np),
            ("type_mix.partitive", mix.partitive),
            ("type_mix.pronominal", mix.pronominal),
        ] {
            if !unit(v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if ((mix.exact_np + mix.partitive + mix.pronominal) - 1.0).abs() > 1e-9 {
            return bad("type_mix must sum to 1".into());
        }
        for regime in [Regime::Pointing, Regime::NonPointing] {
            let e = self.exact_np_share(regime);
            if !unit(e) {
                return bad(format!("exact_np_regime_shift gives exact-NP share {e} for {regime:?}"));
            }
        }
        if self.fps <= 0.0 || self.utterance_variants == 0 || self.embed_dim < 2 {
            return bad("fps, utterance_variants and embed_dim must be positive".into());
        }
        if self.room_size.iter().any(|&s| s <= 0.0) {
            return bad("room_size must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Pointing,
    NonPointing,
}

/// Everything needed to materialize embeddings for a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub config: SynthConfig,
    pub utterance_keys: Vec<String>,
    pub category_names: Vec<String>,
    pub group_map: BTreeMap<String, String>,
    pub embedder: PseudoEmbedderConfig,
}

impl SynthManifest {
    /// Every key that needs a vector: utterances, then category names.
    pub fn all_keys(&self) -> impl Iterator<Item = &str> {
        self.utterance_keys.iter().chain(&self.category_names).map(String::as_str)
    }
}

/// Canonical categories of [`CATEGORY_LABELS`], in rank order.
pub fn canonical_categories() -> Vec<String> {
    let mut vocab = CategoryVocabulary::default();
    CATEGORY_LABELS.iter().map(|l| vocab.normalize_or_keep(l)).collect()
}

fn zipf_weights(n: usize, s: f64) -> Vec<f64> {
    (0..n).map(|r| 1.0 / ((r + 1) as f64).powf(s)).collect()
}

/// Target priors over [`CATEGORY_LABELS`] rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Salience {
    pub global: Vec<f64>,
    /// Pronominal variants, then partitive variants.
    pub contextual: Vec<Vec<f64>>,
}

impl Salience {
    /// Prior used for a reference of `ref_type` phrased as `variant`.
    pub fn weights(&self, ref_type: RefType, variant: usize) -> &[f64] {
        let per_type = self.contextual.len() / 2;
        match ref_type {
            RefType::ExactNp => &self.global,
            RefType::Pronominal => &self.contextual[variant],
            RefType::Partitive => &self.contextual[per_type + variant],
        }
    }
}

/// Target priors, a pure function of the config seed.
pub fn salience_table(cfg: &SynthConfig) -> Salience {
    let mut rng = seed::rng(cfg.seed, &[3]);
    let mut draw = |spread: f64| -> Vec<f64> {
        (0..CATEGORY_LABELS.len()).map(|_| (spread * gauss(&mut rng)).exp()).collect()
    };
    let global = draw(cfg.salience_spread);
    let contextual = (0..2 * cfg.utterance_variants).map(|_| draw(cfg.context_salience_spread)).collect();
    Salience { global, contextual }
}

pub fn room_id(index: usize) -> String {
    format!("room_{index}")
}

/// One room with objects placed uniformly in the room box, no two centroids
/// closer than `min_separation_m`.
pub fn gen_scene<R: Rng + ?Sized>(cfg: &SynthConfig, room_index: usize, rng: &mut R) -> Result<Scene> {
    let room = room_id(room_index);
    let n = rng.gen_range(cfg.objects_min..=cfg.objects_max);
    let freq = WeightedIndex::new(zipf_weights(CATEGORY_LABELS.len(), cfg.zipf_exponent)).expect("positive weights");
    let mut vocab = CategoryVocabulary::default();
    let mut objects: Vec<SceneObject> = Vec::with_capacity(n);
    let [sx, sy, sz] = cfg.room_size;
    for i in 0..n {
        let mut placed = None;
        for _ in 0..10_000 {
            let c = Vec3::new(rng.gen_range(0.0..sx), rng.gen_range(0.0..sy), rng.gen_range(0.0..sz));
            if objects.iter().all(|o| (o.centroid - c).norm() >= cfg.min_separation_m) {
                placed = Some(c);
                break;
            }
        }
        let centroid = placed.ok_or_else(|| {
            Error::Generation(format!("{room}: could not place object {i} after 10000 attempts"))
        })?;
        let base = CATEGORY_LABELS[freq.sample(rng)];
        let raw_label = if rng.gen_bool(cfg.modifier_prob) {
            format!("{}{base}", MODIFIERS[rng.gen_range(0..MODIFIERS.len())])
        } else {
            base.to_string()
        };
        let category = vocab.normalize_or_keep(&raw_label);
        objects.push(SceneObject {
            object_id: format!("{room}_o{i:02}"),
            centroid,
            raw_label,
            category,
        });
    }
    Ok(Scene { room_id: room, objects })
}

/// Rotates unit vector `d` by a tangent-plane gaussian offset with per-axis
/// standard deviation `sigma_deg`.
pub fn perturb<R: Rng + ?Sized>(d: Vec3, sigma_deg: f64, rng: &mut R) -> Vec3 {
    if sigma_deg <= 0.0 {
        return d;
    }
    let sigma = sigma_deg.to_radians();
    let helper = if d.x.abs() < 0.9 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(0.0, 1.0, 0.0) };
    let u = d.cross(helper).normalized().expect("helper not parallel");
    let v = d.cross(u);
    let a: f64 = sigma * gauss(rng);
    let b: f64 = sigma * gauss(rng);
    let angle = (a * a + b * b).sqrt();
    if angle == 0.0 {
        return d;
    }
    let axis = (u * a + v * b) * (1.0 / angle);
    (d * angle.cos() + axis * angle.sin()).normalized().expect("unit combination")
}

fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        if let Some(u) = v.normalized() {
            return u;
        }
    }
}

fn unit_towards(from: Vec3, to: Vec3) -> Vec3 {
    (to - from).normalized().unwrap_or(Vec3::new(1.0, 0.0, 0.0))
}

fn pick_tier<R: Rng + ?Sized>(cfg: &SynthConfig, regime: Regime, rng: &mut R) -> Tier {
    match regime {
        Regime::Pointing => {
            let w = WeightedIndex::new(cfg.pointing_tier_weights).expect("positive tier weights");
            [Tier::T1, Tier::T2, Tier::T5][w.sample(rng)]
        }
        Regime::NonPointing => {
            let w = WeightedIndex::new(cfg.non_pointing_tier_weights).expect("positive tier weights");
            [Tier::T3, Tier::T4][w.sample(rng)]
        }
    }
}

fn pick_target<R: Rng + ?Sized>(cfg: &SynthConfig, scene: &Scene, prior: &[f64], rng: &mut R) -> usize {
    let categories = canonical_categories();
    let weight = |o: &SceneObject| {
        categories
            .iter()
            .position(|c| *c == o.category)
            .map_or(1.0, |i| prior[i])
    };
    let mut pool: Vec<usize> = (0..scene.objects.len()).collect();
    if rng.gen_bool(cfg.distractor_same_category_prob) {
        let shared: Vec<usize> = pool
            .iter()
            .copied()
            .filter(|&i| {
                let c = &scene.objects[i].category;
                scene.objects.iter().filter(|o| &o.category == c).count() >= 2
            })
            .collect();
        if !shared.is_empty() {
            pool = shared;
        }
    }
    let w = WeightedIndex::new(pool.iter().map(|&i| weight(&scene.objects[i]))).expect("positive salience");
    pool[w.sample(rng)]
}

/// Utterance key for a reference. Exact noun phrases name the category.
pub fn utterance_key(ref_type: RefType, category: &str, variant: usize) -> String {
    match ref_type {
        RefType::ExactNp => format!("np/{category}/{variant}"),
        RefType::Pronominal => format!("pron/{variant}"),
        RefType::Partitive => format!("part/{variant}"),
    }
}

/// A generated reference: its track, event and utterance key.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedReference {
    pub track: PoseTrack,
    pub event: ReferenceEvent,
    pub utterance_key: String,
}

/// Generates one reference to a salience-weighted target in `scene`.
pub fn gen_reference<R: Rng + ?Sized>(
    cfg: &SynthConfig,
    scene: &Scene,
    regime: Regime,
    ref_type: RefType,
    ref_id: &str,
    salience: &Salience,
    rng: &mut R,
) -> Result<GeneratedReference> {
    if scene.objects.len() < 2 {
        return Err(Error::Generation(format!("{}: fewer than 2 objects", scene.room_id)));
    }
    let variant = rng.gen_range(0..cfg.utterance_variants);
    let target_index = pick_target(cfg, scene, salience.weights(ref_type, variant), rng);
    let target = &scene.objects[target_index];
    let tier = pick_tier(cfg, regime, rng);

    let [sx, sy, _] = cfg.room_size;
    let mut pelvis = None;
    for _ in 0..10_000 {
        let p = Vec3::new(rng.gen_range(0.0..sx), rng.gen_range(0.0..sy), 1.0);
        if (p - target.centroid).norm() >= cfg.min_speaker_distance_m {
            pelvis = Some(p);
            break;
        }
    }
    let pelvis = pelvis.ok_or_else(|| Error::Generation(format!("{ref_id}: no speaker position far enough from target")))?;

    let to_target = target.centroid - pelvis;
    let yaw = to_target.y.atan2(to_target.x)
        + cfg.body_noise_deg.to_radians() * gauss(rng);
    let facing = Vec3::new(yaw.cos(), yaw.sin(), 0.0);
    let right = Vec3::new(yaw.sin(), -yaw.cos(), 0.0);
    let eyes = pelvis + Vec3::new(0.0, 0.0, 0.6);
    let shoulder = |side: f64| pelvis + Vec3::new(0.0, 0.0, 0.45) + right * (0.2 * side);

    let head_sigma = match regime {
        Regime::Pointing => cfg.head_noise_deg,
        Regime::NonPointing => cfg.head_noise_deg * cfg.non_pointing_head_factor,
    };
    let gaze = perturb(unit_towards(eyes, target.centroid), head_sigma, rng);

    // Per-arm gesture during the hold: (wrist, direction), or None at rest.
    let right_dominant = rng.gen_bool(cfg.right_handed_prob);
    let arm_sigma = cfg.arm_noise_deg * if tier == Tier::T2 { cfg.t2_arm_factor } else { 1.0 };
    let gesture = |side: f64, active: bool, rng: &mut R| -> (Vec3, Vec3, bool) {
        let s = shoulder(side);
        match regime {
            Regime::Pointing if active => {
                let d = unit_towards(s, target.centroid);
                let wrist = s + d * 0.6;
                (wrist, perturb(d, arm_sigma, rng), true)
            }
            Regime::Pointing => (s + Vec3::new(0.0, 0.0, -0.55), Vec3::new(0.0, 0.0, -1.0), false),
            Regime::NonPointing => {
                let d = random_unit(rng);
                (s + d * 0.6, d, true)
            }
        }
    };
    let both = tier == Tier::T5;
    let (r_wrist, r_dir, r_held) = gesture(1.0, right_dominant || both, rng);
    let (l_wrist, l_dir, l_held) = gesture(-1.0, !right_dominant || both, rng);
    let rest = |side: f64| (shoulder(side) + Vec3::new(0.0, 0.0, -0.55), Vec3::new(0.0, 0.0, -1.0));

    let phrase_start = rng.gen_range(1.0..1.5);
    let phrase_end = phrase_start + rng.gen_range(1.0..3.0);
    let n_frames = ((phrase_end + 1.0) * cfg.fps).ceil() as usize;
    let hold = (0.5 * (phrase_start + phrase_end) * cfg.fps).round() as i64;
    let jitter = cfg.frame_jitter_deg;

    let mut frames = Vec::with_capacity(n_frames);
    for f in 0..n_frames as i64 {
        let in_hold = (f - hold).abs() <= 10;
        let arm = |side: f64, wrist: Vec3, dir: Vec3, held: bool, rng: &mut R| {
            let (origin, d) = if held && (in_hold || regime == Regime::NonPointing) {
                (wrist, dir)
            } else {
                rest(side)
            };
            ChannelRay {
                direction: perturb(d, jitter, rng),
                origin,
            }
        };
        let r_arm = arm(1.0, r_wrist, r_dir, r_held, rng);
        let l_arm = arm(-1.0, l_wrist, l_dir, l_held, rng);
        frames.push(PoseFrame {
            r_arm,
            l_arm,
            head: ChannelRay {
                direction: perturb(gaze, jitter, rng),
                origin: eyes,
            },
            body: ChannelRay {
                direction: perturb(facing, jitter, rng),
                origin: pelvis,
            },
        });
    }

    let key = utterance_key(ref_type, &target.category, variant);
    let event = ReferenceEvent {
        ref_id: ref_id.to_string(),
        room_id: scene.room_id.clone(),
        utterance_key: key.clone(),
        phrase_start_s: phrase_start,
        phrase_end_s: phrase_end,
        hold_frame: hold,
        target_id: target.object_id.clone(),
        ref_type,
        tier,
    };
    Ok(GeneratedReference {
        track: PoseTrack { fps: cfg.fps, frames },
        event,
        utterance_key: key,
    })
}

fn pick_ref_type<R: Rng + ?Sized>(cfg: &SynthConfig, regime: Regime, rng: &mut R) -> RefType {
    if rng.gen_bool(cfg.exact_np_share(regime)) {
        return RefType::ExactNp;
    }
    let mix = cfg.type_mix;
    if mix.pronominal + mix.partitive == 0.0 {
        return RefType::ExactNp;
    }
    let w = WeightedIndex::new([mix.pronominal, mix.partitive]).expect("type mix has mass");
    [RefType::Pronominal, RefType::Partitive][w.sample(rng)]
}

/// Full dataset plus the embedding manifest; a pure function of `cfg`.
pub fn gen_dataset(cfg: &SynthConfig) -> Result<(Dataset, SynthManifest)> {
    cfg.validate()?;
    let salience = salience_table(cfg);
    let mut dataset = Dataset::default();
    for r in 0..cfg.n_rooms {
        let scene = gen_scene(cfg, r, &mut seed::rng(cfg.seed, &[1, r as u64]))?;
        dataset.scenes.insert(scene.room_id.clone(), scene);
    }
    let rooms = dataset.room_ids();
    let width = cfg.n_refs.max(1).to_string().len();
    for i in 0..cfg.n_refs {
        let mut rng = seed::rng(cfg.seed, &[2, i as u64]);
        let scene = &dataset.scenes[&rooms[i % rooms.len()]];
        let regime = if rng.gen_bool(cfg.pointing_fraction) { Regime::Pointing } else { Regime::NonPointing };
        let ref_type = pick_ref_type(cfg, regime, &mut rng);
        let ref_id = format!("ref_{i:0width$}");
        let generated = gen_reference(cfg, scene, regime, ref_type, &ref_id, &salience, &mut rng)?;
        dataset.tracks.insert(ref_id, generated.track);
        dataset.events.push(generated.event);
    }

    let category_names = canonical_categories();
    let mut group_map = BTreeMap::new();
    let mut utterance_keys = Vec::new();
    for c in &category_names {
        group_map.insert(c.clone(), c.clone());
        for v in 0..cfg.utterance_variants {
            let key = utterance_key(RefType::ExactNp, c, v);
            group_map.insert(key.clone(), c.clone());
            utterance_keys.push(key);
        }
    }
    for t in [RefType::Pronominal, RefType::Partitive] {
        utterance_keys.extend((0..cfg.utterance_variants).map(|v| utterance_key(t, "", v)));
    }
    utterance_keys.sort();
    let embedder = PseudoEmbedderConfig {
        seed: seed::derive(cfg.seed, &[4]),
        dim: cfg.embed_dim,
        group_map: group_map.clone(),
        within_group_noise: cfg.within_group_noise,
    };
    let manifest = SynthManifest {
        config: cfg.clone(),
        utterance_keys,
        category_names,
        group_map,
        embedder,
    };
    Ok((dataset, manifest))
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes the dataset JSONL files and `manifest.json` into `dir`.
pub fn write_generated(dataset: &Dataset, manifest: &SynthManifest, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    save_dataset(dataset, dir)?;
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<SynthManifest> {
    let path = dir.as_ref().join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        file: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// Angle in degrees between two directions.
pub fn angle_deg(a: Vec3, b: Vec3) -> f64 {
    let c = a.dot(b) / (a.norm() * b.norm());
    c.clamp(-1.0, 1.0).acos() * 180.0 / PI
}
