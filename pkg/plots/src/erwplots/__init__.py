"""erwplots: publication-style figures from erwlab CSV outputs."""

from .figures import (
    max_gap_over_sqrt,
    render_fig1,
    render_fig3,
    render_ks_overlay,
    render_tail_loglog,
)

__version__ = "0.1.0"
