"""Dataset record format.

One record per line, UTF-8, tab-separated ``name:value`` fields. Images are
``HxW:`` followed by two hex digits per pixel, row-major; coordinates are
``U,V`` decimals; state and action values carry six fractional digits.
Files are bit-reproducible given (seed, config).

MANUAL records: instruction, current_image, goal_image, text, coord,
subgoal_image. ACTION records: prompt_image, state, action_chunk,
manual_ref, plus instruction and current_image (the conditioning inputs the
trainer needs per frame).
"""

from __future__ import annotations

import numpy as np

from .state import Image

MANUAL_FIELDS = ("instruction", "current_image", "goal_image", "text", "coord", "subgoal_image")
ACTION_FIELDS = ("prompt_image", "state", "action_chunk", "manual_ref",
                 "instruction", "current_image")


def image_to_field(img: Image) -> str:
    body = img.pixels.reshape(-1)
    return f"{img.height}x{img.width}:" + "".join("%02x" % int(v) for v in body)


def field_to_image(s: str) -> Image:
    head, _, body = s.partition(":")
    h, w = (int(x) for x in head.split("x"))
    if len(body) != 2 * h * w:
        raise ValueError(f"image field length {len(body)} != 2*{h}*{w}")
    vals = np.frombuffer(bytes.fromhex(body), dtype=np.uint8)
    return Image(vals.reshape(h, w).copy())


def coord_to_field(coord) -> str:
    return "%.2f,%.2f" % (float(coord[0]), float(coord[1]))


def field_to_coord(s: str) -> tuple[float, float]:
    u, v = s.split(",")
    return (float(u), float(v))


def floats_to_field(values) -> str:
    return ",".join("%.6f" % float(v) for v in np.asarray(values).reshape(-1))


def field_to_floats(s: str) -> np.ndarray:
    return np.array([float(x) for x in s.split(",")], dtype=np.float32)


def record_to_line(record: dict, fields) -> str:
    return "\t".join(f"{name}:{record[name]}" for name in fields)


def line_to_record(line: str) -> dict:
    out = {}
    for part in line.rstrip("\n").split("\t"):
        name, _, value = part.partition(":")
        out[name] = value
    return out


def write_records(path: str, records: list[dict], fields) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(record_to_line(record, fields) + "\n")


def read_records(path: str) -> list[dict]:
    with open(path, encoding="utf-8") as f:
        return [line_to_record(line) for line in f if line.strip()]


def manual_record_fields(instruction: str, current: Image, goal: Image,
                         text: str, coord, subgoal: Image) -> dict:
    return {
        "instruction": instruction,
        "current_image": image_to_field(current),
        "goal_image": image_to_field(goal),
        "text": text,
        "coord": coord_to_field(coord),
        "subgoal_image": image_to_field(subgoal),
    }


def action_record_fields(prompt: Image, state_vec, chunk, manual_ref: str,
                         instruction: str, current: Image) -> dict:
    return {
        "prompt_image": image_to_field(prompt),
        "state": floats_to_field(state_vec),
        "action_chunk": floats_to_field(chunk),
        "manual_ref": manual_ref,
        "instruction": instruction,
        "current_image": image_to_field(current),
    }
