"""Edit-region masks, flow-matching batches, and the edit-focused objective.

The objective adds a mask-area-normalized term over the changed region to
the usual velocity-matching loss:

    whole = mean over all elements of (v_pred - v_star)^2
    edit  = sum of masked squared error / max(1, number of masked elements)
    total = whole + lam * edit

with ``lam`` defaulting to 0.1 so the two terms sit at comparable
magnitudes. A small fully-connected velocity model with hand-written
gradients exercises the objective end to end, including a central
finite-difference gradient check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .images import ImageBuffer
from .rng import Rng
from .samples import EditSample


class EditLossError(ValueError):
    pass


class TrainingDivergedError(RuntimeError):
    def __init__(self, step: int) -> None:
        super().__init__(f"non-finite loss at step {step}")
        self.step = step


# --- masks -------------------------------------------------------------------


@dataclass(frozen=True)
class EditMask:
    pixel: np.ndarray  # (H, W) bool
    latent: np.ndarray  # (ceil(H/f), ceil(W/f)) bool
    factor: int


def pool_mask(pixel_mask: np.ndarray, factor: int) -> np.ndarray:
    """Max-pool a boolean mask by ``factor``; a latent cell is set iff any covered pixel is."""
    if factor < 1:
        raise EditLossError(f"factor must be >= 1, got {factor}")
    h, w = pixel_mask.shape
    ph = (factor - h % factor) % factor
    pw = (factor - w % factor) % factor
    padded = np.pad(pixel_mask, ((0, ph), (0, pw)), constant_values=False)
    hh, ww = padded.shape
    return padded.reshape(hh // factor, factor, ww // factor, factor).any(axis=(1, 3))


def edit_mask(source: ImageBuffer, target: ImageBuffer, tau: int = 8, factor: int = 8) -> EditMask:
    """Mask of pixels whose max-channel difference exceeds ``tau``, plus its pooled form."""
    if not source.same_size(target):
        raise EditLossError(
            f"size mismatch: {source.width}x{source.height} vs {target.width}x{target.height}"
        )
    diff = np.abs(source.array.astype(np.int16) - target.array.astype(np.int16)).max(axis=-1)
    pixel = diff > tau
    return EditMask(pixel=pixel, latent=pool_mask(pixel, factor), factor=factor)


# --- flow batches ------------------------------------------------------------


@dataclass(frozen=True)
class FlowBatch:
    x0: np.ndarray  # (B, D) noise
    x1: np.ndarray  # (B, D) target latents
    t: np.ndarray  # (B,) in (0, 1)
    x_t: np.ndarray  # (B, D) linear interpolant
    v_star: np.ndarray  # (B, D) target velocity
    cond: np.ndarray  # (B, C) conditioning
    mask: np.ndarray  # (B, D) in {0, 1}

    def __post_init__(self) -> None:
        b, d = self.x1.shape
        if self.x0.shape != (b, d) or self.x_t.shape != (b, d) or self.v_star.shape != (b, d):
            raise EditLossError("batch tensor shapes disagree")
        if self.t.shape != (b,) or self.cond.shape[0] != b or self.mask.shape != (b, d):
            raise EditLossError("batch tensor shapes disagree")
        path = (1.0 - self.t)[:, None] * self.x0 + self.t[:, None] * self.x1
        if not np.allclose(self.x_t, path, atol=1e-12) or not np.array_equal(
            self.v_star, self.x1 - self.x0
        ):
            raise EditLossError("x_t must lie on the linear path and v_star must be x1 - x0")


def make_flow_batch(
    x1: np.ndarray,
    cond: np.ndarray,
    rng: Rng,
    mask: np.ndarray | None = None,
    t: np.ndarray | None = None,
) -> FlowBatch:
    """Draw noise and times for a linear path from noise to ``x1``."""
    x1 = np.asarray(x1, dtype=np.float64)
    cond = np.asarray(cond, dtype=np.float64)
    b, d = x1.shape
    if mask is None:
        mask = np.ones((b, d), dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    x0 = rng.normal(size=(b, d))
    if t is None:
        t = rng.uniform(size=b)
    t = np.asarray(t, dtype=np.float64)
    x_t = (1.0 - t)[:, None] * x0 + t[:, None] * x1
    v_star = x1 - x0
    return FlowBatch(x0=x0, x1=x1, t=t, x_t=x_t, v_star=v_star, cond=cond, mask=mask)


# --- the objective ------------------------------------------------------------


@dataclass(frozen=True)
class LossConfig:
    lam: float = 0.1
    normalization: str = "mask-area"  # or "all-elements"

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise EditLossError(f"lambda must be non-negative, got {self.lam}")
        if self.normalization not in ("mask-area", "all-elements"):
            raise EditLossError(f"unknown normalization {self.normalization!r}")


@dataclass(frozen=True)
class LossTerms:
    whole: float
    edit: float
    total: float


def edit_focused_loss(v_pred: np.ndarray, batch: FlowBatch, cfg: LossConfig) -> LossTerms:
    if v_pred.shape != batch.v_star.shape:
        raise EditLossError(f"prediction shape {v_pred.shape} != target {batch.v_star.shape}")
    se = (v_pred - batch.v_star) ** 2
    whole = float(se.sum() / se.size)
    masked = float((se * batch.mask).sum())
    if cfg.normalization == "mask-area":
        edit = masked / max(1.0, float(batch.mask.sum()))
    else:
        edit = masked / se.size
    return LossTerms(whole=whole, edit=edit, total=whole + cfg.lam * edit)


def loss_grad_wrt_pred(v_pred: np.ndarray, batch: FlowBatch, cfg: LossConfig) -> np.ndarray:
    """d(total)/d(v_pred), matching :func:`edit_focused_loss` exactly."""
    resid = v_pred - batch.v_star
    grad = 2.0 * resid / resid.size
    if cfg.normalization == "mask-area":
        denom = max(1.0, float(batch.mask.sum()))
    else:
        denom = float(resid.size)
    grad = grad + cfg.lam * 2.0 * batch.mask * resid / denom
    return grad


# --- toy velocity model -------------------------------------------------------


class ToyVelocityNet:
    """Two-layer tanh MLP mapping (x_t, t, cond) to a velocity field."""

    def __init__(self, dim: int, cond_dim: int, hidden: int = 32, rng: Rng | None = None) -> None:
        rng = rng or Rng(0, "init")
        d_in = dim + 1 + cond_dim
        self.dim = dim
        self.cond_dim = cond_dim
        self.hidden = hidden
        self.w1 = rng.normal(size=(d_in, hidden)) / np.sqrt(d_in)
        self.b1 = np.zeros(hidden)
        self.w2 = rng.normal(size=(hidden, dim)) / np.sqrt(hidden)
        self.b2 = np.zeros(dim)

    @property
    def n_params(self) -> int:
        return self.w1.size + self.b1.size + self.w2.size + self.b2.size

    def _inputs(self, batch: FlowBatch) -> np.ndarray:
        return np.concatenate([batch.x_t, batch.t[:, None], batch.cond], axis=1)

    def forward(self, batch: FlowBatch) -> np.ndarray:
        z = self._inputs(batch)
        self._z = z
        self._h = np.tanh(z @ self.w1 + self.b1)
        return self._h @ self.w2 + self.b2

    def backward(self, d_out: np.ndarray) -> dict[str, np.ndarray]:
        """Gradients for the most recent :meth:`forward` call."""
        dw2 = self._h.T @ d_out
        db2 = d_out.sum(axis=0)
        dh = d_out @ self.w2.T
        dz = dh * (1.0 - self._h**2)
        dw1 = self._z.T @ dz
        db1 = dz.sum(axis=0)
        return {"w1": dw1, "b1": db1, "w2": dw2, "b2": db2}

    def params_vector(self) -> np.ndarray:
        return np.concatenate([self.w1.ravel(), self.b1, self.w2.ravel(), self.b2])

    def set_params_vector(self, vec: np.ndarray) -> None:
        i = 0
        for name in ("w1", "b1", "w2", "b2"):
            arr = getattr(self, name)
            setattr(self, name, vec[i : i + arr.size].reshape(arr.shape).copy())
            i += arr.size

    def grads_vector(self, grads: dict[str, np.ndarray]) -> np.ndarray:
        return np.concatenate(
            [grads["w1"].ravel(), grads["b1"], grads["w2"].ravel(), grads["b2"]]
        )

    def sgd_step(self, grads: dict[str, np.ndarray], lr: float) -> None:
        self.w1 -= lr * grads["w1"]
        self.b1 -= lr * grads["b1"]
        self.w2 -= lr * grads["w2"]
        self.b2 -= lr * grads["b2"]


def gradient_check(
    model: ToyVelocityNet, batch: FlowBatch, cfg: LossConfig, epsilon: float = 1e-4
) -> float:
    """Max relative deviation between analytic and central-difference gradients.

    Relative deviation uses a 1e-3 floor on the denominator so near-zero
    components compare absolutely rather than blowing up.
    """
    if model.n_params > 10_000:
        raise EditLossError(f"model too large for finite differences ({model.n_params} params)")
    v = model.forward(batch)
    analytic = model.grads_vector(model.backward(loss_grad_wrt_pred(v, batch, cfg)))

    theta = model.params_vector()
    numeric = np.empty_like(analytic)
    for i in range(theta.size):
        bumped = theta.copy()
        bumped[i] = theta[i] + epsilon
        model.set_params_vector(bumped)
        up = edit_focused_loss(model.forward(batch), batch, cfg).total
        bumped[i] = theta[i] - epsilon
        model.set_params_vector(bumped)
        down = edit_focused_loss(model.forward(batch), batch, cfg).total
        numeric[i] = (up - down) / (2.0 * epsilon)
    model.set_params_vector(theta)

    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-3)
    return float(np.max(np.abs(analytic - numeric) / denom))


# --- latentizing samples ------------------------------------------------------


def to_latent(image: ImageBuffer, factor: int) -> np.ndarray:
    """Grayscale block-mean latent in [-1, 1], downsampled by ``factor``."""
    rgb = image.array[..., :3].astype(np.float64)
    gray = rgb @ np.array([0.299, 0.587, 0.114])
    h, w = gray.shape
    if h % factor or w % factor:
        ph = (factor - h % factor) % factor
        pw = (factor - w % factor) % factor
        gray = np.pad(gray, ((0, ph), (0, pw)), mode="edge")
        h, w = gray.shape
    pooled = gray.reshape(h // factor, factor, w // factor, factor).mean(axis=(1, 3))
    return pooled / 127.5 - 1.0


@dataclass(frozen=True)
class LatentSample:
    x1: np.ndarray  # flattened target latent
    cond: np.ndarray  # flattened scribbled-input latent (instruction slot unused)
    mask: np.ndarray  # flattened latent mask, float 0/1
    shape: tuple[int, int]


def latentize(sample: EditSample, factor: int = 8) -> LatentSample:
    if sample.edit_mask is None:
        raise EditLossError(f"sample {sample.id} has no edit mask")
    x1 = to_latent(sample.target, factor)
    cond = to_latent(sample.input, factor)
    latent_mask = pool_mask(sample.edit_mask, factor)
    if x1.shape[0] > 32 or x1.shape[1] > 32:
        raise EditLossError(f"latent {x1.shape} exceeds the 32x32 toy limit")
    return LatentSample(
        x1=x1.ravel(),
        cond=cond.ravel(),
        mask=latent_mask.astype(np.float64).ravel(),
        shape=x1.shape,
    )


# --- toy trainer --------------------------------------------------------------


@dataclass
class TrainResult:
    model: ToyVelocityNet
    trace: list[LossTerms] = field(default_factory=list)
    eval_mse_in_mask: float = float("nan")
    eval_mse_out_mask: float = float("nan")


def train_toy(
    dataset: Iterable[EditSample] | Sequence[LatentSample],
    steps: int,
    cfg: LossConfig,
    rng: Rng,
    *,
    factor: int = 8,
    hidden: int = 24,
    batch_size: int = 4,
    lr: float = 0.02,
    holdout_every: int = 4,
    eval_draws: int = 16,
) -> TrainResult:
    """Train the toy velocity model with plain SGD under the edit-focused loss.

    Every ``holdout_every``-th sample is held out; the returned eval errors
    are mean squared velocity errors inside vs outside the latent masks on
    that split, under noise draws fixed by ``rng``.
    """
    items: list[LatentSample] = []
    for s in dataset:
        items.append(s if isinstance(s, LatentSample) else latentize(s, factor))
    if not items:
        raise EditLossError("dataset is empty")
    dims = {s.x1.size for s in items}
    if len(dims) != 1:
        raise EditLossError(f"latent sizes differ across samples: {sorted(dims)}")
    dim = dims.pop()

    holdout = [s for i, s in enumerate(items) if holdout_every and i % holdout_every == holdout_every - 1]
    train = [s for i, s in enumerate(items) if not holdout_every or i % holdout_every != holdout_every - 1]
    if not train:
        train = items

    model = ToyVelocityNet(dim=dim, cond_dim=dim, hidden=hidden, rng=rng.spawn("init"))
    result = TrainResult(model=model)

    step_rng = rng.spawn("steps")
    for step in range(steps):
        picks = [train[step_rng.integers(0, len(train))] for _ in range(batch_size)]
        batch = make_flow_batch(
            x1=np.stack([p.x1 for p in picks]),
            cond=np.stack([p.cond for p in picks]),
            rng=step_rng,
            mask=np.stack([p.mask for p in picks]),
        )
        v = model.forward(batch)
        terms = edit_focused_loss(v, batch, cfg)
        if not np.isfinite(terms.total):
            raise TrainingDivergedError(step)
        result.trace.append(terms)
        model.sgd_step(model.backward(loss_grad_wrt_pred(v, batch, cfg)), lr)

    if holdout:
        eval_rng = rng.spawn("eval")
        se_in, n_in, se_out, n_out = 0.0, 0, 0.0, 0
        for s in holdout:
            batch = make_flow_batch(
                x1=np.stack([s.x1] * eval_draws),
                cond=np.stack([s.cond] * eval_draws),
                rng=eval_rng,
                mask=np.stack([s.mask] * eval_draws),
            )
            se = (model.forward(batch) - batch.v_star) ** 2
            inside = batch.mask > 0
            se_in += float(se[inside].sum())
            n_in += int(inside.sum())
            se_out += float(se[~inside].sum())
            n_out += int((~inside).sum())
        result.eval_mse_in_mask = se_in / max(1, n_in)
        result.eval_mse_out_mask = se_out / max(1, n_out)
    return result
