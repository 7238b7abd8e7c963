"""Readers for the UTD-MHAD and MMAct archives with their cross-subject splits.

Both readers return fully preprocessed ``(train, test)`` indices: sensors are
resampled to a common rate, stacked and zero-padded/cropped to a fixed
window; videos are frame-sampled, resized and repeated/cropped to a fixed
clip length.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import re
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .preprocess import pad_or_crop, resample_sensor, resize_frames, sample_video_frames, stack_channels, standardize
from .types import TEST, TRAIN, DatasetError, DatasetIndex, LabeledSample, SensorSequence, VideoClip

log = logging.getLogger(__name__)

DATA_ROOT_ENV = "MMHAR_DATA_ROOT"

UTD_TRAIN_SUBJECTS = frozenset({1, 3, 5, 7})
UTD_TEST_SUBJECTS = frozenset({2, 4, 6, 8})
UTD_NUM_CLASSES = 27
UTD_EXPECTED_SAMPLES = 861
# trials absent from the public archive (27 actions x 8 subjects x 4 trials = 864)
UTD_KNOWN_MISSING = frozenset({(8, 1, 4), (23, 6, 4), (27, 8, 4)})
UTD_CLASS_NAMES = (
    "swipe_left", "swipe_right", "wave", "clap", "throw", "arm_cross", "basketball_shoot",
    "draw_x", "draw_circle_cw", "draw_circle_ccw", "draw_triangle", "bowling", "boxing",
    "baseball_swing", "tennis_swing", "arm_curl", "tennis_serve", "push", "knock", "catch",
    "pickup_throw", "jog", "walk", "sit_to_stand", "stand_to_sit", "lunge", "squat",
)

MMACT_TRAIN_SUBJECTS = frozenset(range(1, 17))
MMACT_TEST_SUBJECTS = frozenset(range(17, 21))
MMACT_NUM_CLASSES = 37
# stream directory -> native rate in Hz
MMACT_SENSOR_STREAMS = {
    "acc_phone_clip": 100.0,
    "acc_watch_clip": 100.0,
    "gyro_clip": 50.0,
    "orientation_clip": 50.0,
}


class LoadError(DatasetError):
    pass


@dataclass(frozen=True)
class PreprocessConfig:
    sensor_rate_hz: float = 50.0
    sensor_len: int = 160
    video_fps: float = 15.0
    num_frames: int = 32
    height: int = 224
    width: int = 224
    standardize_sensor: bool = True

    def digest(self) -> str:
        return hashlib.sha1(json.dumps(asdict(self), sort_keys=True).encode()).hexdigest()[:12]


UTD_PREPROCESS = PreprocessConfig()
MMACT_PREPROCESS = PreprocessConfig(sensor_len=250, video_fps=30.0, num_frames=64)


def resolve_root(root_path=None) -> Path:
    root = root_path or os.environ.get(DATA_ROOT_ENV)
    if not root:
        raise LoadError(f"no dataset root given and ${DATA_ROOT_ENV} is unset")
    root = Path(root)
    if not root.is_dir():
        raise LoadError(f"dataset root {root} is not a directory")
    return root


def read_video(path, height: int, width: int) -> VideoClip:
    import cv2

    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise LoadError(f"cannot open video {path}")
    fps = cap.get(cv2.CAP_PROP_FPS) or 30.0
    frames = []
    while True:
        ok, frame = cap.read()
        if not ok:
            break
        rgb = cv2.cvtColor(frame, cv2.COLOR_BGR2RGB).astype(np.float32) / 255.0
        frames.append(cv2.resize(rgb, (width, height), interpolation=cv2.INTER_AREA))
    cap.release()
    if not frames:
        raise LoadError(f"video {path} decoded to zero frames")
    return VideoClip(np.clip(np.stack(frames), 0.0, 1.0), float(fps))


def _cache_path(cache_dir, dataset, sample_id, prep: PreprocessConfig) -> Path:
    key = hashlib.sha1(f"{dataset}|{sample_id}|{prep.digest()}".encode()).hexdigest()
    return Path(cache_dir) / dataset / f"{key}.npz"


def _cached(cache_dir, dataset, sample_id, prep, build):
    if cache_dir is None:
        return build()
    path = _cache_path(cache_dir, dataset, sample_id, prep)
    if path.exists():
        with np.load(path) as z:
            return (SensorSequence(z["sensor"], float(z["sensor_rate"])),
                    VideoClip(z["video"], float(z["video_rate"])))
    sensor, video = build()
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, sensor=sensor.values, sensor_rate=sensor.sample_rate_hz,
             video=video.frames, video_rate=video.frame_rate_hz)
    return sensor, video


def _finish_video(clip: VideoClip, prep: PreprocessConfig) -> VideoClip:
    clip = sample_video_frames(clip, prep.video_fps, prep.num_frames)
    return VideoClip(resize_frames(clip.frames, prep.height, prep.width), clip.frame_rate_hz)


def _standardize_splits(train: list, test: list) -> tuple:
    """Per-channel z-scoring with statistics from the training split only."""
    if not train:
        return train, test
    stacked = np.concatenate([s.sensor.values for s in train], axis=1)
    mean, std = stacked.mean(axis=1), stacked.std(axis=1)

    def apply(samples):
        from dataclasses import replace
        return [replace(s, sensor=standardize(s.sensor, mean, std)) for s in samples]

    return apply(train), apply(test)


def _split(samples, train_subjects, test_subjects, num_classes, class_names, name, skipped, prep):
    train = [s for s in samples if s.subject_id in train_subjects]
    test = [s for s in samples if s.subject_id in test_subjects]
    if prep.standardize_sensor:
        train, test = _standardize_splits(train, test)
    skipped = tuple(skipped)
    return (
        DatasetIndex(train, num_classes, class_names, TRAIN, name=name, skipped=skipped),
        DatasetIndex(test, num_classes, class_names, TEST, name=name, skipped=skipped),
    )


_UTD_NAME = re.compile(r"a(\d+)_s(\d+)_t(\d+)_(color|inertial)\.(avi|mat)$")


def load_utd_mhad(root_path=None, prep: PreprocessConfig = UTD_PREPROCESS, strict: bool = False,
                  cache_dir=None) -> tuple:
    """Load UTD-MHAD RGB + inertial data; odd subjects train, even subjects test.

    Expects the archive's ``RGB/aA_sS_tT_color.avi`` and
    ``Inertial/aA_sS_tT_inertial.mat`` files (``d_iner``: T x 6 at 50 Hz).
    A sample with only one modality on disk raises :class:`LoadError` when
    ``strict``; otherwise it is skipped and listed in ``index.skipped``.
    """
    from scipy.io import loadmat

    root = resolve_root(root_path)
    files = {}
    for path in root.rglob("*"):
        m = _UTD_NAME.search(path.name)
        if m:
            key = (int(m.group(1)), int(m.group(2)), int(m.group(3)))
            files.setdefault(key, {})[m.group(4)] = path
    if not files:
        raise LoadError(f"no UTD-MHAD files found under {root}")

    samples, skipped = [], []
    for (action, subject, trial) in sorted(files):
        sample_id = f"a{action}_s{subject}_t{trial}"
        entry = files[(action, subject, trial)]
        missing = {"color", "inertial"} - set(entry)
        if missing:
            msg = f"sample {sample_id}: missing {sorted(missing)} file"
            if strict:
                raise LoadError(msg)
            log.warning(msg)
            skipped.append(sample_id)
            continue
        if not 1 <= action <= UTD_NUM_CLASSES or subject not in UTD_TRAIN_SUBJECTS | UTD_TEST_SUBJECTS:
            raise LoadError(f"sample {sample_id}: action/subject outside the UTD-MHAD protocol")

        def build(entry=entry):
            raw = np.asarray(loadmat(entry["inertial"])["d_iner"], dtype=np.float32).T
            sensor = SensorSequence(raw, 50.0, ("acc_x", "acc_y", "acc_z", "gyr_x", "gyr_y", "gyr_z"))
            sensor = pad_or_crop(resample_sensor(sensor, prep.sensor_rate_hz), prep.sensor_len)
            video = _finish_video(read_video(entry["color"], prep.height, prep.width), prep)
            return sensor, video

        try:
            sensor, video = _cached(cache_dir, "utd_mhad", sample_id, prep, build)
        except (OSError, ValueError, KeyError) as exc:
            if strict:
                raise LoadError(f"sample {sample_id}: {exc}") from exc
            log.warning("sample %s unreadable, skipped: %s", sample_id, exc)
            skipped.append(sample_id)
            continue
        samples.append(LabeledSample(sample_id, subject, action - 1, sensor, video))

    return _split(samples, UTD_TRAIN_SUBJECTS, UTD_TEST_SUBJECTS, UTD_NUM_CLASSES, UTD_CLASS_NAMES,
                  "UTD_MHAD", skipped, prep)


_MMACT_PARTS = re.compile(r"subject(\d+)/scene(\d+)/session(\d+)/([^/]+)\.(mp4|csv)$")


def _read_sensor_csv(path, rate: float, stream: str) -> SensorSequence:
    rows = []
    with open(path) as fh:
        for line in fh:
            parts = line.strip().split(",")
            try:
                rows.append([float(v) for v in parts[-3:]])
            except ValueError:
                continue  # header or malformed line
    if not rows:
        raise LoadError(f"sensor file {path} holds no numeric rows")
    values = np.asarray(rows, dtype=np.float32).T
    return SensorSequence(values, rate, tuple(f"{stream}_{ax}" for ax in "xyz"))


def load_mmact(root_path=None, prep: PreprocessConfig = MMACT_PREPROCESS, strict: bool = False,
               cache_dir=None, class_names=None) -> tuple:
    """Load MMAct cross-subject: subjects 1-16 train, 17-20 test.

    Layout: ``RGB/camC/subjectS/sceneK/sessionN/<action>.mp4`` and
    ``<stream>/subjectS/sceneK/sessionN/<action>.csv`` for each stream in
    :data:`MMACT_SENSOR_STREAMS`. Every camera view is its own sample and
    shares the sensor recording of its (subject, scene, session, action).
    100 Hz streams are linearly resampled to ``prep.sensor_rate_hz``; a
    missing individual stream becomes zero channels.
    """
    root = resolve_root(root_path)
    videos, sensors = {}, {}
    for path in root.rglob("*"):
        m = _MMACT_PARTS.search(path.as_posix())
        if not m:
            continue
        key = (int(m.group(1)), int(m.group(2)), int(m.group(3)), m.group(4))
        top = path.relative_to(root).parts[0]
        if m.group(5) == "mp4" and top == "RGB":
            cam = path.relative_to(root).parts[1]
            videos[key + (cam,)] = path
        elif m.group(5) == "csv" and top in MMACT_SENSOR_STREAMS:
            sensors.setdefault(key, {})[top] = path
    if not videos:
        raise LoadError(f"no MMAct RGB clips found under {root}")

    actions = tuple(class_names or sorted({k[3] for k in videos}))
    if len(actions) != MMACT_NUM_CLASSES:
        log.warning("MMAct: found %d action classes, protocol expects %d", len(actions), MMACT_NUM_CLASSES)
    class_of = {a: i for i, a in enumerate(actions)}

    samples, skipped = [], []
    for key in sorted(videos):
        subject, scene, session, action, cam = key
        sample_id = f"s{subject}_sc{scene}_se{session}_{cam}_{action}"
        streams = sensors.get(key[:4], {})
        if not streams or action not in class_of:
            msg = f"sample {sample_id}: no inertial streams" if not streams else f"sample {sample_id}: unknown action"
            if strict:
                raise LoadError(msg)
            log.warning(msg)
            skipped.append(sample_id)
            continue

        def build(streams=streams, vpath=videos[key]):
            parts = []
            for name, rate in MMACT_SENSOR_STREAMS.items():
                if name in streams:
                    seq = resample_sensor(_read_sensor_csv(streams[name], rate, name), prep.sensor_rate_hz)
                else:
                    seq = SensorSequence(np.zeros((3, 1), np.float32), prep.sensor_rate_hz,
                                         tuple(f"{name}_{ax}" for ax in "xyz"))
                parts.append(seq)
            sensor = stack_channels(parts, prep.sensor_len)
            video = _finish_video(read_video(vpath, prep.height, prep.width), prep)
            return sensor, video

        try:
            sensor, video = _cached(cache_dir, "mmact", sample_id, prep, build)
        except (OSError, ValueError) as exc:
            if strict:
                raise LoadError(f"sample {sample_id}: {exc}") from exc
            log.warning("sample %s unreadable, skipped: %s", sample_id, exc)
            skipped.append(sample_id)
            continue
        samples.append(LabeledSample(sample_id, subject, class_of[action], sensor, video))

    return _split(samples, MMACT_TRAIN_SUBJECTS, MMACT_TEST_SUBJECTS, len(actions), actions,
                  "MMACT", skipped, prep)
