"""Observation -> input tensor for the convolutional value/policy nets.

Layout of the rows x cols x 19 tensor:
  channels 0-7   opponent footprints remembered so far
                 (entering up/down/left/right, then leaving up/down/left/right)
  channels 8-15  own footprints, same direction layout
  channel  16    one-hot current position
  channel  17    the success-probability map
  channel  18    normalized time t/T (constant plane; zero when T == 0)
"""

import numpy as np

from .game import Observation, footprint_planes

N_CHANNELS = 19
OPPONENT_BASE = 0
OWN_BASE = 8
POSITION_CHANNEL = 16
MAP_CHANNEL = 17
TIME_CHANNEL = 18


def encode_state(observation: Observation, config) -> np.ndarray:
    rows, cols = config.rows, config.cols
    if observation.rows != rows or observation.cols != cols:
        raise ValueError("observation does not match the config's grid")
    tensor = np.zeros((rows, cols, N_CHANNELS), dtype=np.float64)
    tensor[:, :, OPPONENT_BASE:OPPONENT_BASE + 8] = footprint_planes(
        observation.opponent_memory, rows, cols)
    tensor[:, :, OWN_BASE:OWN_BASE + 8] = footprint_planes(
        observation.own_footprints.mask, rows, cols)
    tensor[observation.position[0], observation.position[1], POSITION_CHANNEL] = 1.0
    tensor[:, :, MAP_CHANNEL] = config.success_map
    if observation.horizon > 0:
        tensor[:, :, TIME_CHANNEL] = observation.t / observation.horizon
    return tensor
