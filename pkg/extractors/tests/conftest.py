"""Fixtures: synthetic image corpora and manifests for extractor tests."""

from __future__ import annotations

import numpy as np
import pytest

try:
    import torch  # noqa: F401
except ImportError:  # pragma: no cover - torch is a hard dependency here
    collect_ignore_glob = ["*"]

from extractor_helpers import (
    CONTRACT_RECORDS,
    blank_rgb,
    gradient_rgb,
    noise_rgb,
    save_rgb_png,
    write_manifest,
)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not CONTRACT_RECORDS:
        return
    terminalreporter.section("format contract")
    for name, passed, detail in CONTRACT_RECORDS:
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{verdict}] {name}: {detail}")


@pytest.fixture(scope="session")
def ten_frame_corpus(tmp_path_factory):
    """10 images in two sequences; cam-a frame 0 is blank black.

    cam-a lists frames explicitly; cam-b uses a frames_dir of numbered
    images, covering both manifest forms.
    """
    root = tmp_path_factory.mktemp("corpus10")
    rng = np.random.default_rng(7)
    a_dir = root / "cam_a"
    a_dir.mkdir()
    frames = []
    for i in range(6):
        array = blank_rgb() if i == 0 else noise_rgb(rng)
        save_rgb_png(array, a_dir / f"{i:03d}.png")
        frames.append({"idx": i, "image": f"cam_a/{i:03d}.png"})
    b_dir = root / "cam_b"
    b_dir.mkdir()
    for i in range(4):
        save_rgb_png(gradient_rgb(i), b_dir / f"{i}.png")
    manifest = root / "manifest.yaml"
    write_manifest(
        manifest,
        {
            "sequences": [
                {"id": "cam-a", "frames": frames},
                {"id": "cam-b", "frames_dir": "cam_b"},
            ]
        },
    )
    return manifest


@pytest.fixture(scope="session")
def three_frame_corpus(tmp_path_factory):
    """A small corpus for the slower real-model checks."""
    root = tmp_path_factory.mktemp("corpus3")
    rng = np.random.default_rng(11)
    imgs = root / "imgs"
    imgs.mkdir()
    arrays = [blank_rgb(), noise_rgb(rng), noise_rgb(rng)]
    frames = []
    for i, array in enumerate(arrays):
        save_rgb_png(array, imgs / f"{i}.png")
        frames.append({"idx": i, "image": f"imgs/{i}.png"})
    manifest = root / "manifest.yaml"
    write_manifest(manifest, {"sequences": [{"id": "m", "frames": frames}]})
    return manifest
