"""Figures from the simulator's CSV outputs.

Consumes only the documented CSV dialect (comma-separated, '#' comments,
'# footer: key=value' trailer lines); no dependency on the simulation
package.  Every plot function writes both SVG and PNG next to the given
output prefix and returns the list of files written.
"""

from .plots import (load_csv, plot_convergence, plot_decay, plot_qq,
                    render_report)

__all__ = ["load_csv", "plot_decay", "plot_convergence", "plot_qq",
           "render_report"]
