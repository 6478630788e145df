#!/usr/bin/env python3
"""Regenerate the deterministic test fixtures under tests/fixtures/.

Synthetic tiles are built through the optical-density mixing model itself:
nonnegative per-stain concentration fields are projected through the stain
matrix and exponentiated, which yields plausible H&E / IHC colors.
"""

from pathlib import Path

import numpy as np

from stainkit import RUIFROK_HDAB, RgbImage, save_image, write_tensor_file

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def _smooth_field(rng, shape, scale):
    coarse = rng.random((shape[0] // 4, shape[1] // 4))
    field = np.kron(coarse, np.ones((4, 4)))
    return scale * field


def _tile_from_concentrations(stains, fields):
    p = np.array(RUIFROK_HDAB)
    od = np.zeros(fields[0].shape + (3,))
    for stain_idx, field in zip(stains, fields):
        od += field[:, :, None] * p[stain_idx]
    return RgbImage(np.clip(np.exp(-od), 0.0, 1.0))


def make_tiles(rng):
    shape = (32, 32)
    h_field = _smooth_field(rng, shape, 1.2)
    e_field = _smooth_field(rng, shape, 0.9)
    dab_field = _smooth_field(rng, shape, 1.1)

    save_image(_tile_from_concentrations([0, 1], [h_field, e_field]),
               FIXTURES / "he_tile.png")
    save_image(_tile_from_concentrations([0, 2], [h_field, dab_field]),
               FIXTURES / "ihc_tile.png")

    noisy_h = np.clip(h_field + rng.normal(0.0, 0.08, shape), 0.0, None)
    noisy_d = np.clip(dab_field + rng.normal(0.0, 0.08, shape), 0.0, None)
    save_image(_tile_from_concentrations([0, 2], [noisy_h, noisy_d]),
               FIXTURES / "ihc_pred.png")


def make_vectors(rng):
    for name in ("vec_a", "vec_b"):
        vec = rng.normal(size=8)
        text = ",".join(f"{v:.10g}" for v in vec)
        (FIXTURES / f"{name}.csv").write_text(text + "\n")


def make_feature_csvs(rng):
    dim = 16
    centers = rng.normal(size=(4, dim)) * 3.0

    def rows(count, prefix):
        lines = []
        for i in range(count):
            label = int(rng.integers(0, 4))
            vec = centers[label] + rng.normal(size=dim)
            fields = ",".join(f"{v:.10g}" for v in vec)
            lines.append(f"{prefix}{i:03d},{label},{fields}")
        return lines

    header = "id,label," + ",".join(f"f{i}" for i in range(dim))
    (FIXTURES / "library.csv").write_text(
        "\n".join([header] + rows(200, "lib")) + "\n"
    )
    (FIXTURES / "queries.csv").write_text(
        "\n".join([header] + rows(40, "qry")) + "\n"
    )


def make_fusion_block(rng):
    channels = 3
    tensors = {
        "conv1.weight": rng.normal(size=(channels, channels, 3, 3)),
        "conv1.style": rng.normal(size=channels) * 0.5,
        "conv1.bias": rng.normal(size=channels) * 0.1,
        "conv2.weight": rng.normal(size=(channels, channels, 3, 3)),
        "conv2.style": rng.normal(size=channels) * 0.5,
        "conv2.bias": rng.normal(size=channels) * 0.1,
    }
    write_tensor_file(FIXTURES / "fusion_block.bin", tensors)


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(771031)
    make_tiles(rng)
    make_vectors(rng)
    make_feature_csvs(rng)
    make_fusion_block(rng)
    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    main()
