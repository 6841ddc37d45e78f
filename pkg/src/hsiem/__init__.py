"""Hardy space infinite elements"""

__version__ = "0.1.0"
