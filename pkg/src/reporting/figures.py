from typing import Optional

import numpy as np
import plotly.graph_objects as go

from src.discretization.field import Field


def profile_trace(u: Field, name: str, color: Optional[str] = None):
    """Line trace of a 1D field, heatmap of a 2D one (excised nodes left blank)."""
    grid = u.grid
    if grid.dim == 1:
        # Convert to native Python lists for JSON serialization safety
        return go.Scatter(x=grid.coordinates[:, 0].tolist(), y=u.values.tolist(), mode="lines",
                          name=name, line=dict(color=color) if color else None)
    image = np.full(grid.n, np.nan)
    image[tuple(grid.lattice_index.T)] = u.values
    return go.Heatmap(x=grid.axes[0].tolist(), y=grid.axes[1].tolist(),
                      z=np.where(np.isnan(image.T), None, image.T).tolist(), name=name,
                      colorscale="RdBu", zmid=0.0)


def profile_figure(fields, title: str, yaxis: str = "u") -> str:
    """Plotly JSON with one profile per (name, field) pair; 2D grids show the first field only."""
    fig = go.Figure()
    palette = ["#2ecc71", "#3498db", "#e74c3c", "#9b59b6", "#e67e22", "#1abc9c"]
    for i, (name, u) in enumerate(fields):
        fig.add_trace(profile_trace(u, name, palette[i % len(palette)]))
        if u.grid.dim > 1:
            break
    fig.update_layout(title=title, xaxis_title="x", yaxis_title=yaxis, template="plotly_white")
    return fig.to_json()
