"""Overland: wheeled mobility on rugged terrain, at desk scale.

A self-contained stack for studying learned and heuristic driving over
vertically challenging terrain: grayscale-BMP elevation maps with a staged
difficulty curriculum, a simplified vehicle-on-heightfield simulator, a
sliced-Wasserstein autoencoder for terrain features, a PPO trainer, two
baseline planners, and a paired-trial evaluation harness.
"""

__version__ = "0.1.0"
