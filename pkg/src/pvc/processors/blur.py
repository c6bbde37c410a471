"""Box blur on 8-bit grayscale images.

Each output pixel is the mean of the (2r+1)^2 window centered on it,
sampled with clamp-to-edge (positions outside the image read the nearest
edge pixel, so the divisor is always the full window size) and rounded
half-up.  Exact integer arithmetic throughout: the double-loop oracle in
the tests and the browser port must agree to the last count.

Implemented by replicating an r-pixel border and building a 2D prefix
sum over the padded image, so cost is O(pixels) regardless of radius.
"""

from __future__ import annotations

from typing import Any, Mapping

from . import ItemFailure, ProcessorBinding, merged


def validate_image(width: Any, height: Any, pixels: Any) -> None:
    for name, v in (("width", width), ("height", height)):
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ItemFailure(f"{name} must be a positive integer")
    if not isinstance(pixels, list) or len(pixels) != width * height:
        raise ItemFailure("pixels must be a list of width*height values")
    for p in pixels:
        if isinstance(p, bool) or not isinstance(p, int) or not 0 <= p <= 255:
            raise ItemFailure("pixel values must be integers in 0..255")


def box_blur(width: int, height: int, pixels: list[int], radius: int) -> list[int]:
    if radius == 0:
        return list(pixels)
    r = radius
    pw, ph = width + 2 * r, height + 2 * r

    def clamp(v: int, hi: int) -> int:
        return 0 if v < 0 else (hi if v > hi else v)

    # prefix[y][x] = sum of padded image over [0,y) x [0,x)
    prefix = [[0] * (pw + 1) for _ in range(ph + 1)]
    for y in range(ph):
        src_y = clamp(y - r, height - 1) * width
        row_prev = prefix[y]
        row = prefix[y + 1]
        acc = 0
        for x in range(pw):
            acc += pixels[src_y + clamp(x - r, width - 1)]
            row[x + 1] = acc + row_prev[x + 1]

    k = (2 * r + 1) ** 2
    out = [0] * (width * height)
    side = 2 * r + 1
    for y in range(height):
        top = prefix[y]
        bottom = prefix[y + side]
        base = y * width
        for x in range(width):
            s = bottom[x + side] - bottom[x] - top[x + side] + top[x]
            out[base + x] = (2 * s + k) // (2 * k)  # round half up
    return out


def apply(params: Mapping[str, Any], value: Any) -> dict:
    fields = merged(params, value)
    try:
        width = fields["width"]
        height = fields["height"]
        pixels = fields["pixels"]
        radius = fields["radius"]
    except KeyError as exc:
        raise ItemFailure(f"missing field: {exc.args[0]}") from None
    validate_image(width, height, pixels)
    if isinstance(radius, bool) or not isinstance(radius, int) or radius < 0:
        raise ItemFailure("radius must be a non-negative integer")
    return {"width": width, "height": height,
            "pixels": box_blur(width, height, pixels, radius)}


def bench_input(i: int) -> dict:
    # 64x64 deterministic gradient-ish test card; varies with i.
    pixels = [(x * 7 + y * 13 + i * 31) % 256 for y in range(64) for x in range(64)]
    return {"width": 64, "height": 64, "pixels": pixels, "radius": 2}


BINDING = ProcessorBinding("blur", apply, bench_input)
