from .fisheye import (FisheyeModel, HorizonError, ImageCircleError,
                      camera_pose_from_fk, default_camera_pose, project_point,
                      project_points, unproject_pixel, unproject_pixels)
from .lut import (COLOR_CLASSES, NOMINAL_YUV, ColorLUT, default_lut, fit_lut,
                  load_samples)
from .segment import BinaryImage, DimensionError, ImageYUV, segment
from .detect import Detection, DetectionSet, DetectorConfig, detect_objects
from .render import Scene, render_classes, render_synthetic
from .downscale import Downscaler, downscale

__all__ = [
    "FisheyeModel", "HorizonError", "ImageCircleError", "camera_pose_from_fk",
    "default_camera_pose", "project_point", "project_points",
    "unproject_pixel", "unproject_pixels",
    "COLOR_CLASSES", "NOMINAL_YUV", "ColorLUT", "default_lut", "fit_lut",
    "load_samples",
    "BinaryImage", "DimensionError", "ImageYUV", "segment",
    "Detection", "DetectionSet", "DetectorConfig", "detect_objects",
    "Scene", "render_classes", "render_synthetic",
    "Downscaler", "downscale",
]
