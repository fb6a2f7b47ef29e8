"""CLI interface"""

from dual_view_seg.cli.main import app

__all__ = ["app"]
