"""Optional contrastive fine-tuning of the embedding encoder.

Disabled by default and not wired into the extraction CLI: run it
explicitly with ``python3 -m framesift_extractors.finetune`` when a small
in-domain adaptation of the encoder is wanted. Training pairs two random
augmentations (crop + flip + brightness) of each frame and minimizes the
normalized-temperature cross-entropy between them. The fine-tuned weights
are saved as a state dict that ``--weights`` style loaders can consume;
extraction itself never depends on this step.
"""

from __future__ import annotations

import argparse

import torch
import torch.nn.functional as F

from framesift_extractors.extract import load_rgb_tensor
from framesift_extractors.manifest import list_frames
from framesift_extractors.models import ContrastiveEncoder


def nt_xent_loss(z: torch.Tensor, temperature: float = 0.5) -> torch.Tensor:
    """Contrastive loss over a batch of paired views.

    ``z`` stacks 2B projection vectors where rows i and i+B are the two
    views of the same frame; each view's positive is its partner and every
    other row is a negative.
    """
    n = z.shape[0]
    half = n // 2
    z = F.normalize(z, dim=1)
    sim = z @ z.T / temperature
    sim.fill_diagonal_(float("-inf"))
    targets = torch.arange(n)
    targets = torch.where(targets < half, targets + half, targets - half)
    return F.cross_entropy(sim, targets)


def _augment(image: torch.Tensor, generator: torch.Generator, size: int) -> torch.Tensor:
    _, h, w = image.shape
    crop_h = max(1, int(h * (0.6 + 0.4 * torch.rand((), generator=generator))))
    crop_w = max(1, int(w * (0.6 + 0.4 * torch.rand((), generator=generator))))
    top = int(torch.randint(0, h - crop_h + 1, (), generator=generator))
    left = int(torch.randint(0, w - crop_w + 1, (), generator=generator))
    view = image[:, top : top + crop_h, left : left + crop_w]
    view = F.interpolate(
        view.unsqueeze(0), size=(size, size), mode="bilinear", align_corners=False
    ).squeeze(0)
    if torch.rand((), generator=generator) < 0.5:
        view = torch.flip(view, dims=(2,))
    brightness = 0.8 + 0.4 * torch.rand((), generator=generator)
    return (view * brightness).clamp(0.0, 1.0)


def finetune_encoder(
    manifest_path,
    steps: int = 50,
    batch_size: int = 8,
    lr: float = 1e-3,
    view_size: int = 64,
    seed: int = 0,
    temperature: float = 0.5,
) -> tuple[ContrastiveEncoder, list[float]]:
    """Fine-tune a fresh encoder on the manifest's frames; returns loss history."""
    torch.manual_seed(seed)
    generator = torch.Generator().manual_seed(seed)
    frames = [f for f in list_frames(manifest_path) if f.image_path is not None]
    if not frames:
        raise ValueError("manifest lists no frames with images")
    images = [load_rgb_tensor(f.image_path) for f in frames]

    model = ContrastiveEncoder()
    model.train()
    optimizer = torch.optim.SGD(model.parameters(), lr=lr, momentum=0.9)
    history = []
    for _ in range(steps):
        picks = torch.randint(0, len(images), (min(batch_size, len(images)),), generator=generator)
        batch = [images[int(i)] for i in picks]
        view_a = torch.stack([_augment(im, generator, view_size) for im in batch])
        view_b = torch.stack([_augment(im, generator, view_size) for im in batch])
        z = model(torch.cat([view_a, view_b]))
        loss = nt_xent_loss(z, temperature)
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        history.append(float(loss.detach()))
    model.eval()
    return model, history


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="contrastive fine-tuning of the embedding encoder (optional)"
    )
    parser.add_argument("--manifest", required=True, help="dataset manifest YAML")
    parser.add_argument("--output", required=True, help="state-dict output path")
    parser.add_argument("--steps", type=int, default=50)
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--lr", type=float, default=1e-3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    model, history = finetune_encoder(
        args.manifest,
        steps=args.steps,
        batch_size=args.batch_size,
        lr=args.lr,
        seed=args.seed,
    )
    torch.save(model.state_dict(), args.output)
    print(f"final loss {history[-1]:.4f} after {len(history)} steps -> {args.output}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
