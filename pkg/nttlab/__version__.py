"""
nttlab - Version and metadata
"""

__version__ = "0.1.0"
__author__ = "nttlab Contributors"
__license__ = "MIT"
__description__ = (
    "Desk-scale network traffic transformer lab: simulator, pre-training, fine-tuning"
)

# Written into trace sidecars and checkpoints; bump when the simulator output changes.
GENERATOR_VERSION = "nttlab-sim-1"
