"""HTTP facade for standardization, synthesis, blending, and editing.

Images travel as base64 PNG strings inside JSON (a raw-PNG endpoint exists as
an alternative for scripted clients). The model snapshot is immutable for the
process lifetime; requests never mutate server state, and inference is
serialized through a lock so concurrent requests match serial behavior.
"""

from __future__ import annotations

import threading
from dataclasses import replace
from pathlib import Path

import numpy as np
import torch
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import images
from .data import IMAGE_SUFFIXES
from .errors import InvalidInputError, SketchSynthError
from .models import ModelBundle, image_to_tensor, load_checkpoint, tensor_to_image
from .standardize import EdgeOperatorConfig, config_with_size, standardize_photo, standardize_sketch
from .synthesis import (
    StrokeEdit,
    apply_stroke_edits,
    blend_styles,
    encode_style,
    synthesize_from_edge,
    two_reference_blend,
)

MAX_REQUEST_BYTES = 8 * 1024 * 1024
THUMBNAIL_SIZE = 64


class StandardizeRequest(BaseModel):
    image_png_b64: str
    sketch: bool = False
    invert: bool = False


class StyleSpec(BaseModel):
    ref1_id: str
    ref2_id: str
    gamma: float


class SynthesizeRequest(BaseModel):
    sketch_png_b64: str
    reference_id: str | None = None
    style: StyleSpec | None = None
    invert: bool = False


class StrokeSpec(BaseModel):
    op: str
    points: list[list[float]] | None = None
    width: float = 1.0
    mask_png_b64: str | None = None


class EditRequest(BaseModel):
    photo_png_b64: str | None = None
    edge_png_b64: str | None = None
    strokes: list[StrokeSpec] = []
    reference_id: str | None = None


class ReferenceGallery:
    """Reference photos with stable ids, thumbnails, and precomputed styles."""

    def __init__(self, directory, model: ModelBundle | None):
        self.entries: dict[str, dict] = {}
        directory = Path(directory)
        files = sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
        for path in files:
            photo = images.load_image(path)
            entry = {
                "photo": images.to_rgb(photo),
                "thumbnail": images.encode_png_base64(
                    images.resize(images.to_rgb(photo), THUMBNAIL_SIZE, THUMBNAIL_SIZE)
                ),
            }
            if model is not None:
                entry["style"] = encode_style(photo, model)
            self.entries[path.stem] = entry
        if not self.entries:
            raise InvalidInputError(f"reference gallery {directory} holds no images")

    def photo(self, ref_id: str) -> np.ndarray:
        if ref_id not in self.entries:
            raise InvalidInputError(f"unknown reference id {ref_id!r}")
        return self.entries[ref_id]["photo"]

    def style(self, ref_id: str) -> np.ndarray:
        if ref_id not in self.entries:
            raise InvalidInputError(f"unknown reference id {ref_id!r}")
        return self.entries[ref_id]["style"]


def _error_response(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"code": code, "message": message}})


def create_app(
    model: ModelBundle | None,
    references_dir,
    edge_cfg: EdgeOperatorConfig | None = None,
    max_request_bytes: int = MAX_REQUEST_BYTES,
) -> FastAPI:
    """Build the service around an immutable model snapshot and a gallery."""
    edge_cfg = edge_cfg or EdgeOperatorConfig()
    if model is not None:
        model.eval_mode()
        edge_cfg = config_with_size(edge_cfg, model.arch.image_size)
    gallery = ReferenceGallery(references_dir, model)
    lock = threading.Lock()
    app = FastAPI(title="sketchsynth")

    @app.middleware("http")
    async def cap_request_size(request: Request, call_next):
        declared = request.headers.get("content-length")
        if declared is not None and int(declared) > max_request_bytes:
            return _error_response(413, "payload_too_large", f"request exceeds {max_request_bytes} bytes")
        body = await request.body()
        if len(body) > max_request_bytes:
            return _error_response(413, "payload_too_large", f"request exceeds {max_request_bytes} bytes")
        return await call_next(request)

    @app.exception_handler(SketchSynthError)
    async def on_domain_error(request: Request, exc: SketchSynthError):
        return _error_response(400, "invalid_input", str(exc))

    class _ModelUnavailable(Exception):
        pass

    def require_model() -> ModelBundle:
        if model is None:
            raise _ModelUnavailable()
        return model

    @app.exception_handler(_ModelUnavailable)
    async def on_model_unavailable(request: Request, exc: _ModelUnavailable):
        return _error_response(503, "model_unavailable", "no model loaded")

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "model_stage": model.training_stage if model is not None else "none",
        }

    @app.get("/references")
    def references():
        return [
            {"id": ref_id, "thumbnail_png_b64": entry["thumbnail"]}
            for ref_id, entry in gallery.entries.items()
        ]

    @app.post("/standardize")
    def standardize(req: StandardizeRequest):
        image = images.decode_png_base64(req.image_png_b64)
        cfg = replace(edge_cfg, invert_input=True) if req.invert else edge_cfg
        with lock:
            edge = standardize_sketch(image, cfg) if req.sketch else standardize_photo(image, cfg)
        return {"edge_png_b64": images.encode_png_base64(edge)}

    @app.post("/standardize/binary")
    async def standardize_binary(request: Request):
        image = images.decode_png_bytes(await request.body())
        with lock:
            edge = standardize_photo(image, edge_cfg)
        return Response(content=images.encode_png_bytes(edge), media_type="image/png")

    def _resolve_style(reference_id: str | None, style: StyleSpec | None, bundle: ModelBundle):
        if (reference_id is None) == (style is None):
            raise InvalidInputError("provide exactly one of reference_id or style")
        if reference_id is not None:
            return gallery.style(reference_id)
        blend = two_reference_blend(
            gallery.style(style.ref1_id), gallery.style(style.ref2_id), style.gamma
        )
        return blend_styles(blend)

    def _decode_with_style(edge: np.ndarray, style_vec: np.ndarray, bundle: ModelBundle):
        with torch.no_grad():
            content, _ = bundle.encoder(image_to_tensor(edge))
            out = bundle.decoder(content, torch.from_numpy(style_vec.copy()).unsqueeze(0))
        return tensor_to_image(out)

    @app.post("/synthesize")
    def synthesize_endpoint(req: SynthesizeRequest):
        bundle = require_model()
        sketch = images.decode_png_base64(req.sketch_png_b64)
        cfg = replace(edge_cfg, invert_input=True) if req.invert else edge_cfg
        style_vec = _resolve_style(req.reference_id, req.style, bundle)
        with lock:
            edge = standardize_sketch(sketch, cfg)
            photo = _decode_with_style(edge, style_vec, bundle)
        return {
            "photo_png_b64": images.encode_png_base64(photo),
            "edge_png_b64": images.encode_png_base64(edge),
        }

    @app.post("/edit")
    def edit_endpoint(req: EditRequest):
        bundle = require_model()
        if (req.photo_png_b64 is None) == (req.edge_png_b64 is None):
            raise InvalidInputError("provide exactly one of photo_png_b64 or edge_png_b64")
        with lock:
            if req.photo_png_b64 is not None:
                photo = images.decode_png_base64(req.photo_png_b64)
                edge = standardize_photo(photo, edge_cfg)
                default_ref = images.to_rgb(photo)
            else:
                edge = images.decode_png_base64(req.edge_png_b64)
                if edge.ndim == 3:
                    edge = images.to_luminance(edge)
                default_ref = None
            edits = [
                StrokeEdit(
                    op=s.op,
                    points=[(p[0], p[1]) for p in s.points] if s.points is not None else None,
                    width=s.width,
                    mask=(
                        images.decode_png_base64(s.mask_png_b64) > 0.5
                        if s.mask_png_b64 is not None
                        else None
                    ),
                )
                for s in req.strokes
            ]
            edited = apply_stroke_edits(edge, edits)
            if req.reference_id is not None:
                reference = gallery.photo(req.reference_id)
            elif default_ref is not None:
                reference = default_ref
            else:
                raise InvalidInputError("edge-only edits need an explicit reference_id")
            photo_out = synthesize_from_edge(edited, reference, bundle)
        return {
            "photo_png_b64": images.encode_png_base64(photo_out),
            "edge_png_b64": images.encode_png_base64(edited),
        }

    return app


def serve(model_path, references_dir, bind: str = "127.0.0.1:8000", edge_cfg=None):
    """Load a checkpoint and serve it; fails fast on a bad checkpoint."""
    model = load_checkpoint(model_path)
    app = create_app(model, references_dir, edge_cfg)
    host, _, port = bind.partition(":")
    import uvicorn

    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="info")
