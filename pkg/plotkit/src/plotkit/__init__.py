"""Deterministic figure rendering for impulse-response result CSVs.

A :class:`FigureSpec` names a figure kind, its input CSV, the output image
path, and optional labels; :func:`render` turns it into an image file. The
renderer never recomputes statistics — it draws exactly what the CSV
contains — and pins all style state, so the same input bytes always produce
the same output bytes.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import matplotlib.pyplot as plt

from plotkit.figures import BUILDERS, RC_PARAMS
from plotkit.io import SchemaError

__version__ = "0.1.0"

_FORMATS = (".png", ".svg", ".pdf")

# Timestamp-free file metadata per format: outputs must hash identically
# across runs.
_METADATA = {
    ".png": {"Software": "plotkit"},
    ".svg": {"Date": None},
    ".pdf": {"CreationDate": None},
}


@dataclass(frozen=True)
class FigureSpec:
    """One figure: what to draw, from which CSV, into which file."""

    kind: str
    inputs: tuple[str, ...]
    output: str
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(str(p) for p in self.inputs))
        if self.kind not in BUILDERS:
            raise SchemaError(
                f"unknown figure kind '{self.kind}'; expected one of {sorted(BUILDERS)}"
            )
        if len(self.inputs) != 1:
            raise SchemaError(
                f"kind '{self.kind}' takes exactly one input CSV, got {len(self.inputs)}"
            )
        if not str(self.output).lower().endswith(_FORMATS):
            raise SchemaError(
                f"output '{self.output}' must end in one of {', '.join(_FORMATS)}"
            )
        if not isinstance(self.labels, dict):
            raise SchemaError("labels must be an object of label -> text")

    @classmethod
    def from_dict(cls, payload: dict) -> "FigureSpec":
        if not isinstance(payload, dict):
            raise SchemaError("each figure spec must be a JSON object")
        allowed = {"kind", "inputs", "output", "labels"}
        unknown = set(payload) - allowed
        if unknown:
            raise SchemaError(
                f"figure spec: unknown keys {sorted(unknown)}; allowed: {sorted(allowed)}"
            )
        missing = [k for k in ("kind", "inputs", "output") if k not in payload]
        if missing:
            raise SchemaError(f"figure spec: missing required key '{missing[0]}'")
        inputs = payload["inputs"]
        if isinstance(inputs, str):
            inputs = [inputs]
        return cls(
            kind=str(payload["kind"]),
            inputs=tuple(inputs),
            output=str(payload["output"]),
            labels=dict(payload.get("labels", {})),
        )


def build_figure(spec: FigureSpec):
    """Build the matplotlib Figure for a spec without writing any file."""
    with plt.rc_context(RC_PARAMS):
        return BUILDERS[spec.kind](spec)


def render(spec: FigureSpec) -> str:
    """Render the figure to ``spec.output`` and return that path.

    Inputs are read and validated before the output file is created: a
    schema error never leaves a partial image behind.
    """
    fig = build_figure(spec)
    try:
        out_dir = os.path.dirname(spec.output)
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
        suffix = os.path.splitext(spec.output)[1].lower()
        with plt.rc_context(RC_PARAMS):
            fig.savefig(spec.output, metadata=_METADATA[suffix])
    finally:
        plt.close(fig)
    return spec.output


__all__ = ["FigureSpec", "SchemaError", "build_figure", "render", "__version__"]
