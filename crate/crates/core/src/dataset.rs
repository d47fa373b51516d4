//! JSONL ingestion and emission for scenes, pose tracks and reference events,
//! plus the reference filtering contract.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::affordance::{frame_window, KernelConfig, WindowKind};
use crate::domain::{Dataset, PoseFrame, PoseTrack, ReferenceEvent, Scene, DEGENERATE_NORM};
use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};

pub const SCENES_FILE: &str = "scenes.jsonl";
pub const TRACKS_FILE: &str = "tracks.jsonl";
pub const EVENTS_FILE: &str = "events.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TrackRecord {
    ref_id: String,
    fps: f64,
    frames: Vec<PoseFrame>,
}

/// Reads one JSON value per non-blank line, reporting parse errors with line numbers.
pub(crate) fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| Error::Parse {
            file: name.clone(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, value));
    }
    Ok(out)
}

pub(crate) fn write_jsonl<'a, T: Serialize + 'a>(
    path: &Path,
    records: impl IntoIterator<Item = &'a T>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).expect("records serialize");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn check_scene(scene: &Scene, record: &str) -> Result<()> {
    if scene.objects.len() < 2 {
        return Err(Error::invalid(record, "scene needs at least 2 objects"));
    }
    let mut ids = HashSet::new();
    for o in &scene.objects {
        if !ids.insert(o.object_id.as_str()) {
            return Err(Error::invalid(record, format!("duplicate object_id {:?}", o.object_id)));
        }
        if !o.centroid.is_finite() {
            return Err(Error::invalid(record, format!("non-finite centroid for {:?}", o.object_id)));
        }
        if o.category != o.category.to_lowercase() {
            return Err(Error::invalid(record, format!("category {:?} is not lowercase", o.category)));
        }
    }
    Ok(())
}

fn check_track(track: &PoseTrack, record: &str) -> Result<()> {
    if !(track.fps > 0.0 && track.fps.is_finite()) {
        return Err(Error::invalid(record, format!("fps must be > 0, got {}", track.fps)));
    }
    if track.frames.is_empty() {
        return Err(Error::invalid(record, "track has no frames"));
    }
    for (t, frame) in track.frames.iter().enumerate() {
        for channel in crate::domain::Channel::ALL {
            let ray = frame.channel(channel);
            if !(ray.direction.norm() > DEGENERATE_NORM) || !ray.origin.is_finite() {
                return Err(Error::invalid(
                    record,
                    format!("degenerate {} ray at frame {t}", channel.name()),
                ));
            }
        }
    }
    Ok(())
}

fn check_event(event: &ReferenceEvent, dataset: &Dataset, record: &str) -> Result<()> {
    if !(event.phrase_start_s <= event.phrase_end_s) {
        return Err(Error::invalid(record, "phrase_start_s > phrase_end_s"));
    }
    let scene = dataset
        .scenes
        .get(&event.room_id)
        .ok_or_else(|| Error::invalid(record, format!("unknown room {:?}", event.room_id)))?;
    if scene.object_index(&event.target_id).is_none() {
        return Err(Error::invalid(record, format!("unknown target {:?}", event.target_id)));
    }
    let track = dataset
        .tracks
        .get(&event.ref_id)
        .ok_or_else(|| Error::invalid(record, "no pose track for ref_id"))?;
    if event.hold_frame < 0 || event.hold_frame as usize >= track.frames.len() {
        return Err(Error::invalid(
            record,
            format!("hold_frame {} outside [0, {})", event.hold_frame, track.frames.len()),
        ));
    }
    Ok(())
}

/// Checks every dataset invariant.
pub fn validate_dataset(dataset: &Dataset) -> Result<()> {
    for (room, scene) in &dataset.scenes {
        if room != &scene.room_id {
            return Err(Error::invalid(format!("scene {room}"), "room_id key mismatch"));
        }
        check_scene(scene, &format!("scene {room}"))?;
    }
    for (ref_id, track) in &dataset.tracks {
        check_track(track, &format!("track {ref_id}"))?;
    }
    let mut seen = HashSet::new();
    for event in &dataset.events {
        let record = format!("event {}", event.ref_id);
        if !seen.insert(event.ref_id.as_str()) {
            return Err(Error::invalid(record, "duplicate ref_id"));
        }
        check_event(event, dataset, &record)?;
    }
    Ok(())
}

/// Loads `scenes.jsonl`, `tracks.jsonl` and `events.jsonl` from `dir` and
/// validates every invariant.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let mut dataset = Dataset::default();

    for (line, scene) in read_jsonl::<Scene>(&dir.join(SCENES_FILE))? {
        let record = format!("{SCENES_FILE}:{line} room {}", scene.room_id);
        check_scene(&scene, &record)?;
        if dataset.scenes.contains_key(&scene.room_id) {
            return Err(Error::invalid(record, "duplicate room_id"));
        }
        dataset.scenes.insert(scene.room_id.clone(), scene);
    }

    for (line, rec) in read_jsonl::<TrackRecord>(&dir.join(TRACKS_FILE))? {
        let record = format!("{TRACKS_FILE}:{line} ref {}", rec.ref_id);
        let track = PoseTrack {
            fps: rec.fps,
            frames: rec.frames,
        };
        check_track(&track, &record)?;
        if dataset.tracks.contains_key(&rec.ref_id) {
            return Err(Error::invalid(record, "duplicate ref_id"));
        }
        dataset.tracks.insert(rec.ref_id, track);
    }

    let mut seen = HashSet::new();
    for (line, event) in read_jsonl::<ReferenceEvent>(&dir.join(EVENTS_FILE))? {
        let record = format!("{EVENTS_FILE}:{line} ref {}", event.ref_id);
        if !seen.insert(event.ref_id.clone()) {
            return Err(Error::invalid(record, "duplicate ref_id"));
        }
        check_event(&event, &dataset, &record)?;
        dataset.events.push(event);
    }
    Ok(dataset)
}

pub fn save_dataset(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_jsonl(&dir.join(SCENES_FILE), dataset.scenes.values())?;
    let tracks: Vec<TrackRecord> = dataset
        .tracks
        .iter()
        .map(|(ref_id, t)| TrackRecord {
            ref_id: ref_id.clone(),
            fps: t.fps,
            frames: t.frames.clone(),
        })
        .collect();
    write_jsonl(&dir.join(TRACKS_FILE), &tracks)?;
    write_jsonl(&dir.join(EVENTS_FILE), &dataset.events)
}

/// Why a reference was filtered out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    MissingScene,
    MissingTrack,
    MissingTarget,
    MissingText,
    BadTiming,
    EmptyArmWindow,
    EmptyHeadBodyWindow,
}

impl Rejection {
    pub fn code(self) -> &'static str {
        match self {
            Rejection::MissingScene => "missing_scene",
            Rejection::MissingTrack => "missing_track",
            Rejection::MissingTarget => "missing_target",
            Rejection::MissingText => "missing_text",
            Rejection::BadTiming => "bad_timing",
            Rejection::EmptyArmWindow => "empty_arm_window",
            Rejection::EmptyHeadBodyWindow => "empty_head_body_window",
        }
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Accepts a reference iff its target resolves, its utterance has a text
/// vector, and both pooling windows are non-empty after clamping.
pub fn validate_reference(
    event: &ReferenceEvent,
    dataset: &Dataset,
    embed: &EmbeddingStore,
    kernel: &KernelConfig,
) -> std::result::Result<(), Rejection> {
    let scene = dataset.scenes.get(&event.room_id).ok_or(Rejection::MissingScene)?;
    if scene.object_index(&event.target_id).is_none() {
        return Err(Rejection::MissingTarget);
    }
    if !embed.contains(&event.utterance_key) {
        return Err(Rejection::MissingText);
    }
    if !(event.phrase_start_s <= event.phrase_end_s) {
        return Err(Rejection::BadTiming);
    }
    let track = dataset.tracks.get(&event.ref_id).ok_or(Rejection::MissingTrack)?;
    frame_window(event, track, WindowKind::Arm, kernel).map_err(|_| Rejection::EmptyArmWindow)?;
    frame_window(event, track, WindowKind::HeadBody, kernel)
        .map_err(|_| Rejection::EmptyHeadBodyWindow)?;
    Ok(())
}

/// Splits events into accepted ones and rejection counts per reason.
pub fn filter_references<'a>(
    dataset: &'a Dataset,
    embed: &EmbeddingStore,
    kernel: &KernelConfig,
) -> (Vec<&'a ReferenceEvent>, BTreeMap<Rejection, usize>) {
    let mut accepted = Vec::new();
    let mut rejected = BTreeMap::new();
    for event in &dataset.events {
        match validate_reference(event, dataset, embed, kernel) {
            Ok(()) => accepted.push(event),
            Err(r) => *rejected.entry(r).or_insert(0) += 1,
        }
    }
    (accepted, rejected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ChannelRay, RefType, SceneObject, Tier, Vec3};

    fn tiny() -> Dataset {
        let objects = (0..3)
            .map(|i| SceneObject {
                object_id: format!("o{i}"),
                centroid: Vec3::new(i as f64 + 0.1, 0.5, 0.25),
                raw_label: "RedVase".into(),
                category: "vase".into(),
            })
            .collect();
        let mut ds = Dataset::default();
        ds.scenes.insert(
            "room0".into(),
            Scene {
                room_id: "room0".into(),
                objects,
            },
        );
        let ray = ChannelRay {
            direction: Vec3::new(0.0, 1.0, 0.0),
            origin: Vec3::new(0.1, 0.2, 1.3),
        };
        let frame = PoseFrame {
            r_arm: ray,
            l_arm: ray,
            head: ray,
            body: ray,
        };
        ds.tracks.insert(
            "ref0".into(),
            PoseTrack {
                fps: 30.0,
                frames: vec![frame; 30],
            },
        );
        ds.events.push(ReferenceEvent {
            ref_id: "ref0".into(),
            room_id: "room0".into(),
            utterance_key: "utt0".into(),
            phrase_start_s: 0.1,
            phrase_end_s: 0.6,
            hold_frame: 5,
            target_id: "o1".into(),
            ref_type: RefType::ExactNp,
            tier: Tier::T2,
        });
        ds
    }

    fn store() -> EmbeddingStore {
        let mut s = EmbeddingStore::new(2);
        s.insert("utt0", vec![0.6, 0.8]).unwrap();
        s
    }

    #[test]
    fn roundtrip_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let ds = tiny();
        save_dataset(&ds, dir.path()).unwrap();
        assert_eq!(load_dataset(dir.path()).unwrap(), ds);
    }

    #[test]
    fn empty_events_is_valid() {
        let dir = tempfile::tempdir().unwrap();
        let mut ds = tiny();
        ds.events.clear();
        save_dataset(&ds, dir.path()).unwrap();
        assert!(load_dataset(dir.path()).unwrap().events.is_empty());
    }

    #[test]
    fn duplicate_ref_id_reports_second_line() {
        let dir = tempfile::tempdir().unwrap();
        let mut ds = tiny();
        ds.events.push(ds.events[0].clone());
        save_dataset(&ds, dir.path()).unwrap();
        let err = load_dataset(dir.path()).unwrap_err().to_string();
        assert!(err.contains("events.jsonl:2"), "{err}");
        assert!(err.contains("duplicate ref_id"), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&tiny(), dir.path()).unwrap();
        let path = dir.path().join(EVENTS_FILE);
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("{not json\n");
        std::fs::write(&path, text).unwrap();
        match load_dataset(dir.path()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn reference_filtering() {
        let ds = tiny();
        let kernel = KernelConfig::default();
        assert_eq!(validate_reference(&ds.events[0], &ds, &store(), &kernel), Ok(()));

        let mut missing = ds.events[0].clone();
        missing.target_id = "nope".into();
        assert_eq!(
            validate_reference(&missing, &ds, &store(), &kernel),
            Err(Rejection::MissingTarget)
        );
        assert_eq!(Rejection::MissingTarget.code(), "missing_target");

        let mut no_text = ds.events[0].clone();
        no_text.utterance_key = "other".into();
        assert_eq!(
            validate_reference(&no_text, &ds, &store(), &kernel),
            Err(Rejection::MissingText)
        );

        let mut late = ds.events[0].clone();
        late.phrase_start_s = 5.0;
        late.phrase_end_s = 6.0;
        assert_eq!(
            validate_reference(&late, &ds, &store(), &kernel),
            Err(Rejection::EmptyHeadBodyWindow)
        );
    }
}
