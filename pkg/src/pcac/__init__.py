"""Inter-predictive color coding for voxelized dynamic point clouds."""
__version__ = "0.1.0"
