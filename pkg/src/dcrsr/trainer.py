"""Two-phase optimization driver.

Phase one (SAM) minimizes the pixel loss alone under a cosine warm-restart
schedule; phase two (VAM) fine-tunes adversarially with unbalanced,
step-decayed learning rates for generator and critic. Every run is
deterministic under its seed in the fixed execution mode: all randomness
flows through one explicit sampler generator whose state is checkpointed, so
a resumed run is bit-identical to an uninterrupted one.
"""

from __future__ import annotations

from pathlib import Path

import torch
from torch import Tensor, nn

from .checkpoint import (
    Checkpoint,
    decode_bytes,
    decode_scalar,
    encode_bytes,
    encode_scalar,
    load_checkpoint,
    save_checkpoint,
)
from .config import ExperimentConfig, config_hash, dump_config
from .data import DatasetManifest, SRDataset, sample_batch
from .discriminator import build_discriminator
from .exceptions import CheckpointError, FusionError, TrainingAborted
from .losses import (
    FeatureExtractor,
    combined_vam_loss,
    gan_losses,
    load_feature_extractor,
    pixel_loss,
)
from .model import SuperResolutionNet, build_model
from .schedules import sgdr_lr, step_decay_lr, warmup_multiplier

ADAM_BETAS = (0.9, 0.999)


def enable_deterministic_mode() -> None:
    """Pin the execution mode that the determinism contracts assume."""
    torch.use_deterministic_algorithms(True)


def patch_size_at(schedule: tuple[tuple[int, int], ...], iteration: int) -> int:
    size = schedule[0][1]
    for start, patch in schedule:
        if iteration >= start:
            size = patch
    return size


def phase_lr(cfg, iteration: int, base: float) -> float:
    """Schedule value at one iteration, warm-up multiplier included."""
    if cfg.lr_schedule == "sgdr":
        lr = sgdr_lr(iteration, base, cfg.sgdr_eta_min, cfg.sgdr_cycle0, cfg.sgdr_t_mult)
    else:
        lr = step_decay_lr(iteration, base, cfg.decay_ratio, cfg.decay_every)
    return lr * warmup_multiplier(iteration, cfg.warmup_iters, cfg.warmup_multiplier)


def _set_lr(optimizer: torch.optim.Optimizer, lr: float) -> None:
    for group in optimizer.param_groups:
        group["lr"] = lr


def _module_tensors(prefix: str, module: nn.Module) -> dict[str, Tensor]:
    return {
        f"{prefix}.{name}": param.detach().clone()
        for name, param in module.named_parameters()
    }


def _optimizer_tensors(
    prefix: str, optimizer: torch.optim.Optimizer, module: nn.Module
) -> dict[str, Tensor]:
    out: dict[str, Tensor] = {}
    names = {id(p): n for n, p in module.named_parameters()}
    for group in optimizer.param_groups:
        for param in group["params"]:
            state = optimizer.state.get(param)
            if not state:
                continue
            name = names[id(param)]
            out[f"{prefix}.{name}.step"] = state["step"].detach().clone()
            out[f"{prefix}.{name}.exp_avg"] = state["exp_avg"].detach().clone()
            out[f"{prefix}.{name}.exp_avg_sq"] = state["exp_avg_sq"].detach().clone()
    return out


def _restore_module(prefix: str, module: nn.Module, tensors: dict[str, Tensor]) -> None:
    state = {}
    for name, param in module.named_parameters():
        key = f"{prefix}.{name}"
        if key not in tensors:
            raise CheckpointError(f"checkpoint is missing tensor {key!r}")
        if tensors[key].shape != param.shape:
            raise CheckpointError(
                f"tensor {key!r} has shape {tuple(tensors[key].shape)}, "
                f"model expects {tuple(param.shape)}"
            )
        state[name] = tensors[key]
    module.load_state_dict(state)


def _restore_optimizer(
    prefix: str,
    optimizer: torch.optim.Optimizer,
    module: nn.Module,
    tensors: dict[str, Tensor],
) -> None:
    state: dict[int, dict[str, Tensor]] = {}
    for idx, (name, _) in enumerate(module.named_parameters()):
        key = f"{prefix}.{name}.exp_avg"
        if key not in tensors:
            continue
        state[idx] = {
            "step": tensors[f"{prefix}.{name}.step"].clone().reshape(()),
            "exp_avg": tensors[key].clone(),
            "exp_avg_sq": tensors[f"{prefix}.{name}.exp_avg_sq"].clone(),
        }
    sd = optimizer.state_dict()
    sd["state"] = state
    optimizer.load_state_dict(sd)


def _base_meta(cfg: ExperimentConfig, iteration: int, **extra: str) -> dict[str, str]:
    meta = {
        "iter": str(iteration),
        "seed": str(cfg.train.seed),
        "phase": cfg.train.phase,
    }
    for line in dump_config(cfg).splitlines():
        key, _, value = line.partition(" = ")
        meta[f"cfg.{key}"] = value
    meta.update(extra)
    return meta


def config_from_meta(meta: dict[str, str]) -> ExperimentConfig:
    """Rebuild the experiment config stored in a checkpoint sidecar."""
    from .config import apply_setting

    cfg = ExperimentConfig()
    for key, value in meta.items():
        if key.startswith("cfg."):
            apply_setting(cfg, key[4:], value)
    return cfg


def generator_tensors(ckpt: Checkpoint) -> dict[str, Tensor]:
    """The ``gen.*`` subtree of a checkpoint, prefix stripped."""
    out = {k[4:]: v for k, v in ckpt.tensors.items() if k.startswith("gen.")}
    if not out:
        raise CheckpointError("checkpoint holds no generator tensors")
    return out


def load_model_from_checkpoint(path: str | Path) -> tuple[SuperResolutionNet, Checkpoint]:
    """Rebuild the SR network a checkpoint describes and load its weights."""
    ckpt = load_checkpoint(path)
    cfg = config_from_meta(ckpt.meta)
    model = SuperResolutionNet(
        cfg.model.generator_config(), cfg.model.drm_config()
    )
    try:
        model.load_state_dict(generator_tensors(ckpt))
    except RuntimeError as exc:
        raise CheckpointError(f"{path}: {exc}") from exc
    model.eval()
    return model, ckpt


class _ProgressLog:
    """Tab-separated training log: iter, lr, total loss, then components."""

    def __init__(self, path: Path | None):
        self.path = path
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text("")

    def write(self, iteration: int, lr: float, total: float, *components: float) -> None:
        if self.path is None:
            return
        cols = [str(iteration), repr(lr), repr(float(total))]
        cols += [repr(float(c)) for c in components]
        with open(self.path, "a") as fh:
            fh.write("\t".join(cols) + "\n")


def _check_finite(loss: Tensor, iteration: int, last_ckpt: Path | None) -> None:
    if not torch.isfinite(loss).all():
        raise TrainingAborted(
            f"non-finite loss at iteration {iteration}", checkpoint_path=last_ckpt
        )


def train_sam(
    cfg: ExperimentConfig,
    manifest: DatasetManifest,
    out_dir: str | Path,
    resume: str | Path | None = None,
) -> Path:
    """Run the pixel-loss phase; returns the path of the final checkpoint."""
    enable_deterministic_mode()
    cfg.train.validate()
    if cfg.train.phase != "SAM":
        raise ValueError(f"train_sam called with phase {cfg.train.phase!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tcfg = cfg.train
    chash = config_hash(cfg)

    dataset = SRDataset(manifest)
    model = build_model(
        cfg.model.generator_config(), cfg.model.drm_config(), seed=tcfg.seed
    )
    optimizer = torch.optim.Adam(model.parameters(), lr=tcfg.lr_g, betas=ADAM_BETAS)
    sampler = torch.Generator().manual_seed(tcfg.seed + 1)
    start_iter = 0

    if resume is not None:
        ckpt = load_checkpoint(resume)
        _restore_module("gen", model, ckpt.tensors)
        _restore_optimizer("opt.gen", optimizer, model, ckpt.tensors)
        sampler.set_state(decode_bytes(ckpt.tensors["state.sampler_rng"]))
        start_iter = int(decode_scalar(ckpt.tensors["state.iter"]))

    def snapshot(iteration: int, name: str, **extra: str) -> Path:
        tensors = {
            "state.iter": encode_scalar(iteration),
            "state.sampler_rng": encode_bytes(sampler.get_state()),
        }
        tensors.update(_module_tensors("gen", model))
        tensors.update(_optimizer_tensors("opt.gen", optimizer, model))
        return save_checkpoint(
            out_dir / name, tensors, chash, _base_meta(cfg, iteration, **extra)
        )

    progress = _ProgressLog(out_dir / "progress.log")
    last_ckpt = snapshot(start_iter, f"sam_{start_iter:08d}.ckpt")
    last_loss = float("nan")

    model.train()
    for it in range(start_iter, tcfg.total_iters):
        lr = phase_lr(tcfg, it, tcfg.lr_g)
        _set_lr(optimizer, lr)
        lr_batch, hr_batch = sample_batch(
            dataset,
            patch_size_at(tcfg.hr_patch_schedule, it),
            tcfg.batch_size,
            sampler,
            augment=cfg.data.augment,
        )
        sr = model(lr_batch)
        loss = pixel_loss(sr, hr_batch)
        _check_finite(loss, it, last_ckpt)
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()

        last_loss = float(loss.detach())
        done = it + 1
        if done % tcfg.log_every == 0 or done == tcfg.total_iters:
            progress.write(done, lr, last_loss, last_loss)
        if tcfg.checkpoint_every > 0 and done % tcfg.checkpoint_every == 0:
            last_ckpt = snapshot(done, f"sam_{done:08d}.ckpt")

    final = snapshot(
        max(start_iter, tcfg.total_iters), "sam_final.ckpt", loss_pixel=repr(last_loss)
    )
    return final


def train_vam(
    cfg: ExperimentConfig,
    manifest: DatasetManifest,
    sam_checkpoint: str | Path,
    out_dir: str | Path,
    resume: str | Path | None = None,
) -> Path:
    """Adversarial fine-tuning from a pixel-phase checkpoint.

    Each iteration runs one critic update (on detached generator output) and
    then one generator update on the combined loss. Returns the final
    checkpoint path.
    """
    enable_deterministic_mode()
    cfg.train.validate()
    if cfg.train.phase != "VAM":
        raise ValueError(f"train_vam called with phase {cfg.train.phase!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tcfg = cfg.train
    weights = cfg.loss.weights()
    chash = config_hash(cfg)

    dataset = SRDataset(manifest)
    model = build_model(
        cfg.model.generator_config(), cfg.model.drm_config(), seed=tcfg.seed
    )
    sam_ckpt = load_checkpoint(sam_checkpoint)
    _restore_module("gen", model, sam_ckpt.tensors)

    disc = build_discriminator(cfg.model.disc_width, seed=tcfg.seed + 2)
    fe: FeatureExtractor | None = None
    if weights.w_feat != 0.0:
        fe = load_feature_extractor(
            cfg.loss.extractor_weights or None, cfg.loss.extractor_seed
        )

    opt_g = torch.optim.Adam(model.parameters(), lr=tcfg.lr_g, betas=ADAM_BETAS)
    opt_d = torch.optim.Adam(disc.parameters(), lr=tcfg.lr_d, betas=ADAM_BETAS)
    sampler = torch.Generator().manual_seed(tcfg.seed + 1)
    start_iter = 0

    if resume is not None:
        ckpt = load_checkpoint(resume)
        _restore_module("gen", model, ckpt.tensors)
        _restore_module("disc", disc, ckpt.tensors)
        _restore_optimizer("opt.gen", opt_g, model, ckpt.tensors)
        _restore_optimizer("opt.disc", opt_d, disc, ckpt.tensors)
        sampler.set_state(decode_bytes(ckpt.tensors["state.sampler_rng"]))
        start_iter = int(decode_scalar(ckpt.tensors["state.iter"]))

    def snapshot(iteration: int, name: str, **extra: str) -> Path:
        tensors = {
            "state.iter": encode_scalar(iteration),
            "state.sampler_rng": encode_bytes(sampler.get_state()),
        }
        tensors.update(_module_tensors("gen", model))
        tensors.update(_module_tensors("disc", disc))
        tensors.update(_optimizer_tensors("opt.gen", opt_g, model))
        tensors.update(_optimizer_tensors("opt.disc", opt_d, disc))
        return save_checkpoint(
            out_dir / name, tensors, chash, _base_meta(cfg, iteration, **extra)
        )

    progress = _ProgressLog(out_dir / "progress.log")
    last_ckpt = snapshot(start_iter, f"vam_{start_iter:08d}.ckpt")

    model.train()
    disc.train()
    for it in range(start_iter, tcfg.total_iters):
        lr_g = phase_lr(tcfg, it, tcfg.lr_g)
        lr_d = phase_lr(tcfg, it, tcfg.lr_d)
        _set_lr(opt_g, lr_g)
        _set_lr(opt_d, lr_d)
        lr_batch, hr_batch = sample_batch(
            dataset,
            patch_size_at(tcfg.hr_patch_schedule, it),
            tcfg.batch_size,
            sampler,
            augment=cfg.data.augment,
        )

        with torch.no_grad():
            fake = model(lr_batch)
        loss_d, _ = gan_losses(disc(hr_batch), disc(fake))
        _check_finite(loss_d, it, last_ckpt)
        opt_d.zero_grad()
        loss_d.backward()
        opt_d.step()

        sr = model(lr_batch)
        bundle = combined_vam_loss(sr, hr_batch, disc(sr), fe, weights)
        _check_finite(bundle.total, it, last_ckpt)
        opt_g.zero_grad()
        bundle.total.backward()
        opt_g.step()

        done = it + 1
        if done % tcfg.log_every == 0 or done == tcfg.total_iters:
            progress.write(
                done,
                lr_g,
                float(bundle.total.detach()),
                bundle.pixel,
                bundle.adversarial,
                bundle.perceptual,
                float(loss_d.detach()),
            )
        if tcfg.checkpoint_every > 0 and done % tcfg.checkpoint_every == 0:
            last_ckpt = snapshot(done, f"vam_{done:08d}.ckpt")

    return snapshot(max(start_iter, tcfg.total_iters), "vam_final.ckpt")


def fuse_models(
    sam: dict[str, Tensor], vam: dict[str, Tensor], alpha: float
) -> dict[str, Tensor]:
    """Elementwise convex combination alpha*sam + (1-alpha)*vam.

    Both trees must have identical names and shapes. The endpoints return
    exact copies of the corresponding tree.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if set(sam) != set(vam):
        missing = set(sam) ^ set(vam)
        raise FusionError(f"parameter trees disagree on {sorted(missing)[:5]}")
    fused = {}
    for name, a in sam.items():
        b = vam[name]
        if a.shape != b.shape or a.dtype != b.dtype:
            raise FusionError(
                f"tensor {name!r}: {tuple(a.shape)}/{a.dtype} vs "
                f"{tuple(b.shape)}/{b.dtype}"
            )
        if alpha == 1.0:
            fused[name] = a.clone()
        elif alpha == 0.0:
            fused[name] = b.clone()
        else:
            # b + alpha*(a-b) rather than alpha*a + (1-alpha)*b: same
            # interpolation, but self-fusion stays a bit-exact fixed point
            fused[name] = b + alpha * (a - b)
    return fused


def blend_outputs(out_a: Tensor, out_b: Tensor, alpha: float) -> Tensor:
    """Output-space blend alpha*a + (1-alpha)*b, for eval-time comparison
    against parameter-space fusion."""
    if out_a.shape != out_b.shape:
        raise FusionError(
            f"outputs disagree: {tuple(out_a.shape)} vs {tuple(out_b.shape)}"
        )
    return alpha * out_a + (1.0 - alpha) * out_b
