"""
Package marker for nttlab.utils
"""

__all__ = ["logger", "config", "integrity", "fsio", "seeding"]
