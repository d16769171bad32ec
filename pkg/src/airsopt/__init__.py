"""Joint placement, 3D orientation and passive beamforming for a UAV-mounted IRS."""

from airsopt.scenario import Pose, Scenario, SystemParams, dense_setup, sparse_setup

__version__ = "0.1.0"

__all__ = ["Pose", "Scenario", "SystemParams", "dense_setup", "sparse_setup", "__version__"]
