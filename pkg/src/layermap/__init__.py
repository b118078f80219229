"""Exact MAP restoration of gray-scale and color images, one bit plane at a time."""
from .bitplane import PlaneMask, decompose, merge_channels, recompose, split_channels
from .ising import estimate_image, estimate_parameters, gibbs_sample
from .maxflow import max_flow, min_cut_labeling
from .netpbm import GrayImage, RgbImage, read_image, write_image
from .network import build_hierarchical_network, build_multisample_network, build_network
from .noise import NoiseModel, corrupt, epsilon_from_h, h_from_epsilon
from .restore import (RestoreParams, brute_force_map, iterate_restore, restore_hierarchical,
                      restore_image, restore_layer, restore_multisample, restore_rgb)

__version__ = "0.1.0"
