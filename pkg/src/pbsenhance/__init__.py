"""Low-light photo and video enhancement by constrained Retinex illumination estimation."""
from .flow import FlowParams, estimate_flow, warp
from .illumination import GammaParams, initial_illumination, recover, s_min_map
from .metrics import discrete_entropy, mean_luminance, psnr
from .multiscale import JbuParams, enhance_fast, enhance_naive, joint_bilateral_upsample
from .photo import correct_overexposure, enhance_per_channel, enhance_photo
from .raster import VideoSequence, load_image, luminance, save_image
from .rtv import RtvParams, rtv_energy, rtv_weights
from .solver import SolverConfig, SolveReport, estimate_illumination
from .video import PropagationConfig, enhance_video, extract_keyframes, propagate_illumination

__version__ = "0.1.0"
