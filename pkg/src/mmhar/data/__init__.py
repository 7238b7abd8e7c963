from .types import (
    IMU, MODALITIES, TEST, TRAIN, VIDEO,
    DatasetError, DatasetIndex, LabeledSample, MaskAudit, SensorSequence, VideoClip,
)
from .preprocess import pad_or_crop, resample_sensor, sample_video_frames, stack_channels
from .transforms import mask_classes, select_hidden_classes, stratified_split, subset_by_ratio
from .synthetic import SyntheticSpec, generate_synthetic_dataset, load_synthetic, nearest_template_accuracy, save_synthetic
from .loaders import LoadError, PreprocessConfig, load_mmact, load_utd_mhad
