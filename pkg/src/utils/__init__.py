"""Shared utilities"""

from src.utils.logger import LongJumpLogger

__all__ = ["LongJumpLogger"]
