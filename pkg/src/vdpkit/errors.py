"""Error types shared across the package.

Every error carries a stable machine-readable ``code`` so the CLI can emit
structured JSON on stderr and tests can assert on failure kinds without
string-matching messages.
"""
from __future__ import annotations


class VdpError(Exception):
    code = "error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def to_json(self) -> dict:
        out = {"error": self.code, "message": str(self)}
        if self.details:
            out["details"] = self.details
        return out


class InvalidDimensions(VdpError):
    code = "invalid-dimensions"


class TextureMissing(VdpError):
    code = "texture-missing"


class InsufficientData(VdpError):
    code = "insufficient-data"


class ShapeMismatch(VdpError):
    code = "shape-mismatch"


class InvalidLabel(VdpError):
    code = "invalid-label"


class UnknownAnnotator(VdpError):
    code = "unknown-annotator"


class InvalidAnnotation(VdpError):
    code = "invalid-annotation"


class UnknownItem(VdpError):
    code = "unknown-item"


class GenerationFailed(VdpError):
    code = "generation-failed"


class InvalidRule(VdpError):
    code = "invalid-rule"
