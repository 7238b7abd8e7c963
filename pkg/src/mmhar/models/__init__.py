from .base import ConfigError, GroupedModule, ShapeError, group_digests, set_trainable_layers
from .imu import ImuEncoder, ImuEncoderConfig, imu_encoder_init, imu_forward
from .video import (
    MINI3D, S3D, S3D_FINETUNE_GROUPS, S3D_GROUPS, VideoEncoder, VideoEncoderConfig, WeightsError,
    load_pretrained_video_weights, video_encoder_init, video_forward,
)
from .fusion import (
    FusionModel, MlpHead, MlpHeadConfig, SingleModalityModel, cross_entropy_loss, fuse_features,
    mlp_forward, mlp_head_init,
)
from .checkpoint import load_checkpoint, save_checkpoint
