"""Image and partition types plus file I/O.

Intensities are kept as float64 on the canonical 0-255 scale regardless of
the container's bit depth: 8-bit samples are value-preserving, 16-bit
samples are rescaled by 255/65535 (more generally 255/maxval for PNM).
Supported containers are PNG (8/16-bit) and binary or ASCII PGM/PPM.
JPEG and alpha channels are out of scope.
"""

from __future__ import annotations

import io
import itertools
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ContractError, FormatError

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_PNM_MAGICS = {b"P2", b"P3", b"P5", b"P6"}

# sRGB -> XYZ (D65), CIE-standard coefficients; rows sum to the white point
# so neutral grays map to a* = b* = 0 up to coefficient rounding.
_RGB_TO_XYZ = np.array(
    [
        [0.412453, 0.357580, 0.180423],
        [0.212671, 0.715160, 0.072169],
        [0.019334, 0.119193, 0.950227],
    ]
)
_WHITE_POINT = np.array([95.047, 100.0, 108.883])

_partition_generation = itertools.count()


@dataclass(frozen=True)
class ImageField:
    """A dense (H, W, C) float64 intensity field with C in {1, 3, 6}."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3:
            raise ContractError(f"image must be 2D or 3D, got ndim={arr.ndim}")
        h, w, c = arr.shape
        if h < 1 or w < 1:
            raise ContractError(f"image must be at least 1x1, got {h}x{w}")
        if c not in (1, 3, 6):
            raise ContractError(f"channel count must be 1, 3 or 6, got {c}")
        if not np.isfinite(arr).all():
            raise ContractError("image intensities must be finite")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[0], self.data.shape[1]


@dataclass(frozen=True)
class Partition:
    """A dense per-pixel phase assignment: labels in [0, phases).

    Each instance carries a unique generation number so downstream model
    state can detect that it was computed for a different partition.
    """

    labels: np.ndarray
    phases: int
    generation: int = field(
        default_factory=lambda: next(_partition_generation), compare=False
    )

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 2:
            raise ContractError(f"labels must be 2D, got ndim={lab.ndim}")
        if not np.issubdtype(lab.dtype, np.integer):
            raise ContractError("labels must be integers")
        if self.phases < 1:
            raise ContractError(f"phase count must be >= 1, got {self.phases}")
        if lab.size and (lab.min() < 0 or lab.max() >= self.phases):
            raise ContractError("labels must lie in [0, phases)")
        lab = np.ascontiguousarray(lab.astype(np.int32))
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    def indicator(self, phase: int) -> np.ndarray:
        """Binary indicator of one phase as float64."""
        return (self.labels == phase).astype(np.float64)

    def onehot(self) -> np.ndarray:
        """(phases, H, W) stack of indicators."""
        return np.stack([self.indicator(i) for i in range(self.phases)])


def load_image(path) -> ImageField:
    """Read a PNG/PGM/PPM file into an ImageField, sniffing by magic bytes."""
    raw = Path(path).read_bytes()
    if raw.startswith(_PNG_MAGIC):
        return _decode_png(raw)
    if raw[:2] in _PNM_MAGICS:
        return _decode_pnm(raw)
    raise FormatError(f"unsupported image format: {path}")


def _decode_png(raw: bytes) -> ImageField:
    try:
        img = Image.open(io.BytesIO(raw))
        mode = img.mode
        if mode in ("LA", "RGBA", "PA"):
            raise FormatError("alpha channels are not supported")
        if mode == "P":
            img = img.convert("RGB")
        elif mode == "1":
            img = img.convert("L")
        arr = np.asarray(img)
    except FormatError:
        raise
    except (OSError, UnidentifiedImageError, SyntaxError, ValueError) as exc:
        raise FormatError(f"corrupt or unreadable PNG: {exc}") from exc
    data = arr.astype(np.float64)
    if mode in ("I", "I;16", "I;16B"):
        data = data * (255.0 / 65535.0)
    return ImageField(data)


def _decode_pnm(raw: bytes) -> ImageField:
    magic = raw[:2].decode("ascii")
    try:
        width, height, maxval, offset = _parse_pnm_header(raw)
    except (ValueError, IndexError) as exc:
        raise FormatError(f"malformed {magic} header: {exc}") from exc
    if not 1 <= maxval <= 65535:
        raise FormatError(f"{magic} maxval out of range: {maxval}")
    channels = 3 if magic in ("P3", "P6") else 1
    count = width * height * channels

    if magic in ("P5", "P6"):
        body = raw[offset:]
        if maxval < 256:
            need = count
            samples = np.frombuffer(body[:need], dtype=np.uint8)
        else:
            need = 2 * count
            samples = np.frombuffer(body[:need], dtype=">u2")
        if samples.size != count:
            raise FormatError(f"truncated {magic} raster")
    else:
        text = re.sub(rb"#[^\n\r]*", b" ", raw[offset:])
        tokens = text.split()
        if len(tokens) < count:
            raise FormatError(f"truncated {magic} raster")
        try:
            samples = np.array([int(t) for t in tokens[:count]], dtype=np.int64)
        except ValueError as exc:
            raise FormatError(f"bad {magic} sample: {exc}") from exc
        if samples.min() < 0 or samples.max() > maxval:
            raise FormatError(f"{magic} sample exceeds maxval {maxval}")

    data = samples.astype(np.float64).reshape(height, width, channels)
    return ImageField(data * (255.0 / maxval))


def _parse_pnm_header(raw: bytes) -> tuple[int, int, int, int]:
    """Return (width, height, maxval, raster offset) for a PNM byte string."""
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos] not in (0x0A, 0x0D):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("unexpected end of header")
        fields.append(int(raw[start:pos]))
    pos += 1  # single whitespace byte separates the header from the raster
    return fields[0], fields[1], fields[2], pos


def save_labels(partition: Partition, path) -> None:
    """Write a partition as an 8-bit grayscale PNG or PGM.

    Phase i maps to gray floor(255*i/(n-1)); the mapping is also written to a
    UTF-8 sidecar file ``<path>.map.txt`` with ``phase<TAB>gray`` lines.
    Requires 2 <= phases <= 256.
    """
    n = partition.phases
    if n < 2:
        raise ContractError("save_labels needs at least 2 phases")
    if n > 256:
        raise ContractError(f"cannot encode {n} phases in 8-bit gray")
    grays = np.array([(255 * i) // (n - 1) for i in range(n)], dtype=np.uint8)
    img = grays[partition.labels]

    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".png":
        Image.fromarray(img, mode="L").save(path, format="PNG")
    elif suffix == ".pgm":
        header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
        path.write_bytes(header + img.tobytes())
    else:
        raise ContractError(f"unsupported label output format: {path.suffix}")

    sidecar = Path(str(path) + ".map.txt")
    lines = "".join(f"{i}\t{int(grays[i])}\n" for i in range(n))
    sidecar.write_text(lines, encoding="utf-8")


def overlay_contours(img: ImageField, partition: Partition, color=(255, 0, 0)) -> ImageField:
    """Paint phase boundaries onto a 3-channel copy of the image.

    A pixel is painted when any 4-neighbor inside the frame carries a
    different label, so both sides of an interface are marked and image
    borders do not wrap.
    """
    if img.shape != partition.shape:
        raise ContractError(
            f"image {img.shape} and partition {partition.shape} differ in shape"
        )
    if len(color) != 3:
        raise ContractError("overlay color must be an RGB triple")

    if img.channels == 1:
        base = np.repeat(img.data, 3, axis=2).copy()
    else:
        base = img.data[:, :, :3].copy()

    lab = partition.labels
    edge = np.zeros(lab.shape, dtype=bool)
    vert = lab[1:, :] != lab[:-1, :]
    edge[1:, :] |= vert
    edge[:-1, :] |= vert
    horiz = lab[:, 1:] != lab[:, :-1]
    edge[:, 1:] |= horiz
    edge[:, :-1] |= horiz

    base[edge] = np.asarray(color, dtype=np.float64)
    return ImageField(base)


def rgb_to_lab(rgb: np.ndarray) -> np.ndarray:
    """Vectorized sRGB (0-255) to CIELAB under D65.

    Returns an array of the same leading shape with L* in [0, 100] and
    a*/b* roughly in [-128, 127].
    """
    arr = np.asarray(rgb, dtype=np.float64) / 255.0
    linear = np.where(
        arr <= 0.04045,
        arr / 12.92,
        ((arr + 0.055) / 1.055) ** 2.4,
    )
    xyz = linear @ _RGB_TO_XYZ.T * 100.0
    t = xyz / _WHITE_POINT
    f = np.where(t > 0.008856, np.cbrt(t), 7.787 * t + 16.0 / 116.0)
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * fy - 16.0
    lab[..., 1] = 500.0 * (fx - fy)
    lab[..., 2] = 200.0 * (fy - fz)
    return lab


def lift_dimensions(img: ImageField) -> ImageField:
    """Append rescaled CIELAB channels to an RGB image, giving 6 channels.

    Channels 0-2 are the input RGB bit for bit; channels 3-5 are L*, a*, b*
    affinely rescaled onto 0-255 (L*: [0,100] -> [0,255]; a*, b*:
    [-128,127] -> [0,255]).
    """
    if img.channels != 3:
        raise ContractError("dimension lifting expects a 3-channel RGB image")
    lab = rgb_to_lab(img.data)
    lifted = np.empty((img.height, img.width, 6), dtype=np.float64)
    lifted[:, :, :3] = img.data
    lifted[:, :, 3] = lab[..., 0] * (255.0 / 100.0)
    lifted[:, :, 4] = lab[..., 1] + 128.0
    lifted[:, :, 5] = lab[..., 2] + 128.0
    return ImageField(lifted)
