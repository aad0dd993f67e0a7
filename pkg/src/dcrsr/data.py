"""Training data: manifest discovery, LR synthesis, aligned patch sampling.

Expected directory layout: ``root/HR/*.png`` with an optional ``root/LR/``
holding same-named low-resolution counterparts. When no LR file exists the LR
image is synthesized once by bicubic downscale and cached, so crops taken from
it stay exactly consistent with the HR image.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import torch
from PIL import Image

from .exceptions import EmptyDataset, InvalidSize, PatchTooLarge, ShapeError
from .imageops import bicubic_resize, load_image


class Degradation(str, Enum):
    BICUBIC_DOWNSCALE = "bicubic_downscale"
    PAIRED = "paired"


@dataclass(frozen=True)
class ManifestEntry:
    hr_path: Path
    lr_path: Path | None
    mode: Degradation


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    scale: int
    warnings: list[str] = field(default_factory=list)

    def dump(self, path: str | Path) -> None:
        """Write the line-oriented form: ``hr<TAB>lr|-<TAB>mode``."""
        lines = []
        for e in self.entries:
            lr = str(e.lr_path) if e.lr_path is not None else "-"
            lines.append(f"{e.hr_path}\t{lr}\t{e.mode.value}")
        Path(path).write_text("\n".join(lines) + "\n")

    @staticmethod
    def parse(path: str | Path, scale: int) -> "DatasetManifest":
        entries = []
        for line in Path(path).read_text().splitlines():
            if not line.strip():
                continue
            hr, lr, mode = line.split("\t")
            entries.append(
                ManifestEntry(
                    hr_path=Path(hr),
                    lr_path=None if lr == "-" else Path(lr),
                    mode=Degradation(mode),
                )
            )
        return DatasetManifest(entries=entries, scale=scale)


@dataclass
class PairedSample:
    """An aligned HR/LR image pair; hr dims are exactly scale x lr dims."""

    hr: torch.Tensor
    lr: torch.Tensor
    scale: int

    def validate(self) -> None:
        if self.hr.shape[-2] != self.scale * self.lr.shape[-2] or self.hr.shape[
            -1
        ] != self.scale * self.lr.shape[-1]:
            raise ShapeError(
                f"hr {tuple(self.hr.shape)} is not {self.scale}x of lr "
                f"{tuple(self.lr.shape)}"
            )


def _image_size(path: Path) -> tuple[int, int] | None:
    """(height, width) without a full decode; None when undecodable."""
    try:
        with Image.open(path) as im:
            w, h = im.size
        return h, w
    except Exception:
        return None


def load_manifest(root_dir: str | Path, scale: int) -> DatasetManifest:
    """Scan ``root_dir`` for HR (and optional LR) PNGs.

    Entries are sorted lexicographically by filename. HR images whose
    dimensions are not divisible by ``scale``, or whose LR counterpart has the
    wrong size, are skipped with a warning record rather than failing the
    whole load.
    """
    root = Path(root_dir)
    hr_dir = root / "HR"
    lr_dir = root / "LR"
    if not hr_dir.is_dir():
        raise EmptyDataset(f"no HR/ subdirectory under {root}")

    entries: list[ManifestEntry] = []
    warnings: list[str] = []
    for hr_path in sorted(hr_dir.glob("*.png"), key=lambda p: p.name):
        size = _image_size(hr_path)
        if size is None:
            warnings.append(f"{hr_path}: undecodable, skipped")
            continue
        h, w = size
        if h % scale or w % scale:
            warnings.append(
                f"{hr_path}: size {h}x{w} not divisible by scale {scale}, skipped"
            )
            continue
        lr_path = lr_dir / hr_path.name
        if lr_path.is_file():
            lr_size = _image_size(lr_path)
            if lr_size != (h // scale, w // scale):
                warnings.append(
                    f"{lr_path}: expected {h // scale}x{w // scale}, "
                    f"got {lr_size}, skipped"
                )
                continue
            entries.append(ManifestEntry(hr_path, lr_path, Degradation.PAIRED))
        else:
            entries.append(ManifestEntry(hr_path, None, Degradation.BICUBIC_DOWNSCALE))

    if not entries:
        raise EmptyDataset(f"no usable HR images under {hr_dir}")
    return DatasetManifest(entries=entries, scale=scale, warnings=warnings)


class SRDataset:
    """Immutable in-memory dataset of aligned HR/LR pairs.

    LR images for unpaired entries are synthesized at construction (bicubic
    downscale by ``scale``) and cached, never per-patch.
    """

    def __init__(self, manifest: DatasetManifest):
        self.scale = manifest.scale
        self.samples: list[PairedSample] = []
        self.names: list[str] = []
        for e in manifest.entries:
            hr = load_image(e.hr_path)
            if e.lr_path is not None:
                lr = load_image(e.lr_path)
            else:
                lr = bicubic_resize(
                    hr, hr.shape[-2] // self.scale, hr.shape[-1] // self.scale
                )
            sample = PairedSample(hr=hr, lr=lr, scale=self.scale)
            sample.validate()
            self.samples.append(sample)
            self.names.append(e.hr_path.name)
        if not self.samples:
            raise EmptyDataset("manifest has no entries")

    def __len__(self) -> int:
        return len(self.samples)

    def __getitem__(self, idx: int) -> PairedSample:
        return self.samples[idx]


def draw_patch_params(
    rng: torch.Generator,
    lr_h: int,
    lr_w: int,
    lr_patch: int,
    augment: bool,
) -> tuple[int, int, bool, int]:
    """Draw (row, col, hflip, n_rot90) for one crop from a seeded generator.

    Draw order is fixed so a given generator state always yields the same
    crop; this is what makes training resumable bit-for-bit.
    """
    i = int(torch.randint(0, lr_h - lr_patch + 1, (1,), generator=rng).item())
    j = int(torch.randint(0, lr_w - lr_patch + 1, (1,), generator=rng).item())
    flip = False
    rot = 0
    if augment:
        flip = bool(torch.randint(0, 2, (1,), generator=rng).item())
        rot = int(torch.randint(0, 4, (1,), generator=rng).item())
    return i, j, flip, rot


def sample_patch(
    sample: PairedSample,
    hr_patch: int,
    rng: torch.Generator,
    augment: bool = False,
) -> PairedSample:
    """Crop an aligned HR/LR patch pair; optional flip/rot90 augmentation.

    The LR crop of size ``hr_patch // scale`` is taken at (i, j) and the HR
    crop at (scale*i, scale*j), so alignment is exact by construction.
    """
    scale = sample.scale
    if hr_patch % scale:
        raise InvalidSize(f"hr_patch {hr_patch} not divisible by scale {scale}")
    hr_h, hr_w = sample.hr.shape[-2], sample.hr.shape[-1]
    if hr_patch > hr_h or hr_patch > hr_w:
        raise PatchTooLarge(f"patch {hr_patch} exceeds image {hr_h}x{hr_w}")

    lr_patch = hr_patch // scale
    i, j, flip, rot = draw_patch_params(
        rng, sample.lr.shape[-2], sample.lr.shape[-1], lr_patch, augment
    )
    lr = sample.lr[:, i : i + lr_patch, j : j + lr_patch]
    hr = sample.hr[
        :, scale * i : scale * i + hr_patch, scale * j : scale * j + hr_patch
    ]
    if flip:
        lr = torch.flip(lr, dims=(-1,))
        hr = torch.flip(hr, dims=(-1,))
    if rot:
        lr = torch.rot90(lr, k=rot, dims=(-2, -1))
        hr = torch.rot90(hr, k=rot, dims=(-2, -1))
    return PairedSample(hr=hr.contiguous(), lr=lr.contiguous(), scale=scale)


def sample_batch(
    dataset: SRDataset,
    hr_patch: int,
    batch_size: int,
    rng: torch.Generator,
    augment: bool = False,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Stack ``batch_size`` random patch pairs into (lr, hr) batch tensors."""
    lrs, hrs = [], []
    for _ in range(batch_size):
        idx = int(torch.randint(0, len(dataset), (1,), generator=rng).item())
        p = sample_patch(dataset[idx], hr_patch, rng, augment=augment)
        lrs.append(p.lr)
        hrs.append(p.hr)
    return torch.stack(lrs), torch.stack(hrs)
