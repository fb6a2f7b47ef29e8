"""
Dual View Seg - referring segmentation of aerial imagery from remote and close views
"""

__version__ = "1.0.0"
__author__ = "Wembie"
