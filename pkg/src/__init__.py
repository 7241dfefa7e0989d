"""LongJump - heavy-tailed random walks on groups of polynomial growth"""

__version__ = "0.1.0"
