"""Deterministic single-sphere frame renderer.

The scene is pinned exactly so that every run on every machine produces
byte-identical frames:

* unit sphere centered at the origin;
* pinhole camera at (0, 0, -3) looking along +z, 60 degree vertical
  field of view, so tan(fov/2) = sqrt(1/3); square pixels, aspect w/h;
* pixel centers: ndc_x = (px+0.5)/w*2-1, ndc_y = 1-(py+0.5)/h*2 with
  row 0 at the top; ray direction = normalize(ndc_x*tan*aspect,
  ndc_y*tan, 1);
* one directional light at 45 degree elevation, azimuth a = 2*pi*t/F
  swept in the x-z plane starting from the camera direction (-z, so the
  visible face is lit at frame 0) toward +x:
  l = (cos45*sin(a), sin45, -cos45*cos(a)), cos45 = sqrt(0.5);
* Lambertian shading: gray = max(0, n . l), byte = floor(255*gray+0.5),
  written as equal R=G=B; rays that miss stay (0,0,0).

Output is a binary PPM (P6, maxval 255) and the FNV-1a 64-bit hash of
the pixel bytes (header excluded) as 16 hex digits.  Arithmetic sticks
to IEEE-correctly-rounded operations (+,-,*,/ and sqrt); sin/cos only
enter through the azimuth, which is exactly 0 for frame 0.
"""

from __future__ import annotations

import base64
import math
from typing import Any, Mapping

from ..rng import fnv1a64_hex
from . import ItemFailure, ProcessorBinding, merged

_TAN_HALF_FOV = math.sqrt(1.0 / 3.0)
_COS45 = math.sqrt(0.5)


def render_frame(frame: int, total_frames: int, width: int, height: int) -> tuple[bytes, str]:
    """Render one frame; returns (ppm_bytes, pixel_hash_hex)."""
    azimuth = 2.0 * math.pi * frame / total_frames
    lx = _COS45 * math.sin(azimuth)
    ly = _COS45
    lz = -_COS45 * math.cos(azimuth)

    aspect = width / height
    ox, oy, oz = 0.0, 0.0, -3.0
    oo_minus_1 = ox * ox + oy * oy + oz * oz - 1.0

    body = bytearray(width * height * 3)
    pos = 0
    for py in range(height):
        ndc_y = 1.0 - (py + 0.5) / height * 2.0
        dy0 = ndc_y * _TAN_HALF_FOV
        for px in range(width):
            ndc_x = (px + 0.5) / width * 2.0 - 1.0
            dx0 = ndc_x * _TAN_HALF_FOV * aspect
            inv = 1.0 / math.sqrt(dx0 * dx0 + dy0 * dy0 + 1.0)
            dx, dy, dz = dx0 * inv, dy0 * inv, inv
            b = ox * dx + oy * dy + oz * dz
            disc = b * b - oo_minus_1
            shade = 0
            if disc >= 0.0:
                t = -b - math.sqrt(disc)
                if t > 0.0:
                    hx, hy, hz = ox + t * dx, oy + t * dy, oz + t * dz
                    ninv = 1.0 / math.sqrt(hx * hx + hy * hy + hz * hz)
                    lam = (hx * lx + hy * ly + hz * lz) * ninv
                    if lam > 0.0:
                        shade = int(255.0 * lam + 0.5)
            body[pos] = shade
            body[pos + 1] = shade
            body[pos + 2] = shade
            pos += 3

    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    return header + bytes(body), fnv1a64_hex(bytes(body))


def apply(params: Mapping[str, Any], value: Any) -> dict:
    fields = merged(params, value)
    try:
        frame = fields["t"]
        total = fields["F"]
        width = fields["width"]
        height = fields["height"]
    except KeyError as exc:
        raise ItemFailure(f"missing field: {exc.args[0]}") from None
    for name, v in (("t", frame), ("F", total), ("width", width), ("height", height)):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ItemFailure(f"{name} must be an integer")
    if total < 1 or not 0 <= frame < total:
        raise ItemFailure("need 0 <= t < F")
    if width < 1 or height < 1:
        raise ItemFailure("width and height must be positive")
    ppm, digest = render_frame(frame, total, width, height)
    return {"ppm_base64": base64.b64encode(ppm).decode("ascii"), "hash": digest}


def bench_input(i: int) -> dict:
    return {"t": i % 100, "F": 100, "width": 64, "height": 64}


BINDING = ProcessorBinding("raytrace", apply, bench_input)
