"""Sliced-Wasserstein autoencoder over vehicle-centered elevation crops.

Crops are average-pooled, mean-centered, and scaled by a fixed elevation
range before encoding, so the latent describes local shape rather than
absolute height. Training minimizes reconstruction MSE plus a sliced
Wasserstein distance between the latent batch and a prior sample; the
encoder can be frozen so later training touches only the decoder.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import seeds
from .heightmap import HeightMap, crop_centered
from .nn import (
    AdamState,
    MlpSpec,
    ParamVector,
    adam_step,
    backward,
    concat_params,
    dump_params,
    forward,
    init_mlp,
    parse_params,
)

STANDARD_NORMAL = "standard_normal"
UNIFORM_BALL = "uniform_ball"


@dataclass(frozen=True)
class SwaeConfig:
    crop_size: int = 64
    downsample_to: int = 32
    latent_dim: int = 32
    encoder_spec: Optional[MlpSpec] = None
    decoder_spec: Optional[MlpSpec] = None
    num_projections: int = 50
    sw_weight: float = 10.0
    prior: str = STANDARD_NORMAL
    elev_range: float = 0.5
    epochs: int = 30
    batch_size: int = 64
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.latent_dim < 1 or self.num_projections < 1:
            raise ValueError("latent_dim and num_projections must be >= 1")
        if self.downsample_to <= 0 or self.crop_size % self.downsample_to:
            raise ValueError("downsample_to must divide crop_size")
        if self.elev_range <= 0:
            raise ValueError("elev_range must be positive")
        if self.prior not in (STANDARD_NORMAL, UNIFORM_BALL):
            raise ValueError("unknown prior %r" % (self.prior,))
        d = self.downsample_to * self.downsample_to
        if self.encoder_spec is None:
            object.__setattr__(self, "encoder_spec",
                               MlpSpec((d, 256, 64, self.latent_dim),
                                       activation="relu"))
        if self.decoder_spec is None:
            object.__setattr__(self, "decoder_spec",
                               MlpSpec((self.latent_dim, 64, 256, d),
                                       activation="relu"))
        if self.encoder_spec.layer_sizes[0] != d or \
                self.encoder_spec.layer_sizes[-1] != self.latent_dim:
            raise ValueError("encoder_spec ends do not match config")
        if self.decoder_spec.layer_sizes[0] != self.latent_dim or \
                self.decoder_spec.layer_sizes[-1] != d:
            raise ValueError("decoder_spec ends do not match config")


@dataclass
class SwaeParams:
    encoder: ParamVector
    decoder: ParamVector
    frozen: bool = False


@dataclass(frozen=True)
class SwaeEpochLoss:
    total: float
    recon: float
    sw: float


def init_swae(cfg: SwaeConfig) -> SwaeParams:
    rng = np.random.default_rng(seeds.derive_seed(cfg.seed, "swae-init"))
    encoder = init_mlp(cfg.encoder_spec, rng, prefix="enc_")
    decoder = init_mlp(cfg.decoder_spec, rng, prefix="dec_")
    return SwaeParams(encoder=encoder, decoder=decoder, frozen=False)


# ------------------------------------------------------------- preprocessing


def preprocess(crops: np.ndarray, cfg: SwaeConfig) -> np.ndarray:
    """Average-pool to downsample_to^2, center each crop, scale to ~[-1, 1].

    Accepts one crop (crop_size, crop_size) or a stacked batch; returns
    flattened rows.
    """
    crops = np.asarray(crops, dtype=np.float64)
    single = crops.ndim == 2
    if single:
        crops = crops[None]
    n, h, w = crops.shape
    if h != cfg.crop_size or w != cfg.crop_size:
        raise ValueError("crop shape %s, expected %d^2" % ((h, w), cfg.crop_size))
    k = cfg.crop_size // cfg.downsample_to
    pooled = crops.reshape(n, cfg.downsample_to, k, cfg.downsample_to, k)
    pooled = pooled.mean(axis=(2, 4))
    flat = pooled.reshape(n, -1)
    flat = (flat - flat.mean(axis=1, keepdims=True)) / cfg.elev_range
    return flat[0] if single else flat


def encode(params: SwaeParams, crop: np.ndarray, cfg: SwaeConfig) -> np.ndarray:
    """Latent vector(s) for one crop or a batch of crops."""
    x = preprocess(crop, cfg)
    z, _ = forward(cfg.encoder_spec, params.encoder, x, prefix="enc_")
    return z


def decode(params: SwaeParams, latent: np.ndarray, cfg: SwaeConfig) -> np.ndarray:
    y, _ = forward(cfg.decoder_spec, params.decoder, latent, prefix="dec_")
    return y


# --------------------------------------------------------- sliced Wasserstein


def _unit_projections(dim: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    vecs = rng.normal(size=(count, dim))
    norms = np.linalg.norm(vecs, axis=1, keepdims=True)
    return vecs / norms


def sliced_wasserstein(sample_a: np.ndarray, sample_b: np.ndarray,
                       num_projections: int, seed: int) -> float:
    """Mean over random unit projections of the squared 1-D W2 distance."""
    a = np.atleast_2d(np.asarray(sample_a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(sample_b, dtype=np.float64))
    if a.shape != b.shape:
        raise ValueError("sample sets must share shape, got %s vs %s"
                         % (a.shape, b.shape))
    theta = _unit_projections(a.shape[1], num_projections, seed)
    pa = np.sort(a @ theta.T, axis=0)
    pb = np.sort(b @ theta.T, axis=0)
    return float(np.mean((pa - pb) ** 2))


def _sliced_wasserstein_grad(latents: np.ndarray, prior: np.ndarray,
                             num_projections: int, seed: int
                             ) -> Tuple[float, np.ndarray]:
    """Value and gradient wrt the latents (prior treated as constant)."""
    n, d = latents.shape
    theta = _unit_projections(d, num_projections, seed)
    grad = np.zeros_like(latents)
    total = 0.0
    pb_all = np.sort(prior @ theta.T, axis=0)
    pa_all = latents @ theta.T
    order = np.argsort(pa_all, axis=0)
    scale = 1.0 / (n * num_projections)
    for j in range(num_projections):
        idx = order[:, j]
        diff = pa_all[idx, j] - pb_all[:, j]
        total += float(np.sum(diff ** 2)) * scale
        grad[idx] += (2.0 * scale) * diff[:, None] * theta[j][None, :]
    return total, grad


def sample_prior(cfg: SwaeConfig, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if cfg.prior == STANDARD_NORMAL:
        return rng.normal(size=(count, cfg.latent_dim))
    # Uniform over the unit ball.
    direction = rng.normal(size=(count, cfg.latent_dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = rng.random(size=(count, 1)) ** (1.0 / cfg.latent_dim)
    return direction * radius


# ----------------------------------------------------------------- training


def _batch_gradients(merged: ParamVector, batch_x: np.ndarray,
                     cfg: SwaeConfig, prior_seed: int, proj_seed: int,
                     ) -> Tuple[ParamVector, float, float]:
    """Gradients of recon MSE + sw_weight * SW over one preprocessed batch."""
    n, d = batch_x.shape
    z, tape_e = forward(cfg.encoder_spec, merged, batch_x, prefix="enc_")
    y, tape_d = forward(cfg.decoder_spec, merged, z, prefix="dec_")

    recon = float(np.mean((y - batch_x) ** 2))
    dy = 2.0 * (y - batch_x) / (n * d)
    grads = merged.zeros_like()
    _, dz = backward(cfg.decoder_spec, merged, tape_d, dy,
                     prefix="dec_", into=grads)

    sw = 0.0
    if cfg.sw_weight != 0.0:
        prior = sample_prior(cfg, n, prior_seed)
        sw, dz_sw = _sliced_wasserstein_grad(z, prior,
                                             cfg.num_projections, proj_seed)
        dz = dz + cfg.sw_weight * dz_sw
    backward(cfg.encoder_spec, merged, tape_e, dz, prefix="enc_", into=grads)
    return grads, recon, sw


def train_swae(dataset: np.ndarray, cfg: SwaeConfig,
               params: Optional[SwaeParams] = None,
               ) -> Tuple[SwaeParams, List[SwaeEpochLoss]]:
    """Train on a stack of crops; returns params and per-epoch losses.

    With ``params.frozen`` set, encoder entries are left bit-identical and
    only the decoder is optimized.
    """
    dataset = np.asarray(dataset, dtype=np.float64)
    if dataset.ndim != 3 or dataset.shape[0] == 0:
        raise ValueError("dataset must be a nonempty stack of crops")
    if params is None:
        params = init_swae(cfg)
    frozen = params.frozen

    data = preprocess(dataset, cfg)
    merged = concat_params([params.encoder, params.decoder])
    if frozen:
        trainable = params.decoder.copy()
    else:
        trainable = merged.copy()
    adam = AdamState.for_params(trainable, learning_rate=cfg.learning_rate)

    history: List[SwaeEpochLoss] = []
    n = data.shape[0]
    for epoch in range(cfg.epochs):
        order_rng = np.random.default_rng(
            seeds.derive_seed(cfg.seed, "swae-shuffle", epoch))
        order = order_rng.permutation(n)
        totals = []
        recons = []
        sws = []
        for bi, lo in enumerate(range(0, n, cfg.batch_size)):
            batch = data[order[lo:lo + cfg.batch_size]]
            prior_seed = seeds.derive_seed(cfg.seed, "swae-prior", epoch, bi)
            proj_seed = seeds.derive_seed(cfg.seed, "swae-proj", epoch, bi)
            grads, recon, sw = _batch_gradients(merged, batch, cfg,
                                                prior_seed, proj_seed)
            if frozen:
                dec_grads = ParamVector(
                    np.concatenate([grads.view(name).ravel()
                                    for name, _ in params.decoder.layout]),
                    params.decoder.layout)
                trainable, adam = adam_step(trainable, dec_grads, adam)
                for name, _ in params.decoder.layout:
                    merged.view(name)[...] = trainable.view(name)
            else:
                trainable, adam = adam_step(trainable, grads, adam)
                merged.values[:] = trainable.values
            totals.append(recon + cfg.sw_weight * sw)
            recons.append(recon)
            sws.append(sw)
        history.append(SwaeEpochLoss(total=float(np.mean(totals)),
                                     recon=float(np.mean(recons)),
                                     sw=float(np.mean(sws))))

    encoder = ParamVector(
        np.concatenate([merged.view(name).ravel()
                        for name, _ in params.encoder.layout]),
        params.encoder.layout)
    decoder = ParamVector(
        np.concatenate([merged.view(name).ravel()
                        for name, _ in params.decoder.layout]),
        params.decoder.layout)
    if frozen:
        encoder = params.encoder.copy()
    return SwaeParams(encoder=encoder, decoder=decoder, frozen=frozen), history


def build_crop_dataset(maps: Sequence[HeightMap], samples_per_map: int,
                       seed: int, crop_size: int = 64) -> np.ndarray:
    """Crops at uniform poses and headings over each map."""
    if not maps:
        raise ValueError("need at least one map")
    out = []
    for mi, m in enumerate(maps):
        rng = np.random.default_rng(seeds.derive_seed(seed, "crops", mi))
        for _ in range(samples_per_map):
            x = rng.uniform(0.0, m.width_m)
            y = rng.uniform(0.0, m.height_m)
            heading = rng.uniform(-math.pi, math.pi)
            out.append(crop_centered(m, (x, y, heading), crop_size))
    if not out:
        return np.zeros((0, crop_size, crop_size))
    return np.stack(out)


# --------------------------------------------------------------- checkpoint


def dump_swae(params: SwaeParams, cfg: SwaeConfig) -> bytes:
    """Checkpoint: config echo lines, blank line, parameter blob."""
    lines = [
        "crop_size=%d" % cfg.crop_size,
        "downsample_to=%d" % cfg.downsample_to,
        "latent_dim=%d" % cfg.latent_dim,
        "encoder_layers=%s" % ",".join(map(str, cfg.encoder_spec.layer_sizes)),
        "encoder_activation=%s" % cfg.encoder_spec.activation,
        "decoder_layers=%s" % ",".join(map(str, cfg.decoder_spec.layer_sizes)),
        "decoder_activation=%s" % cfg.decoder_spec.activation,
        "num_projections=%d" % cfg.num_projections,
        "sw_weight=%s" % repr(cfg.sw_weight),
        "prior=%s" % cfg.prior,
        "elev_range=%s" % repr(cfg.elev_range),
        "frozen=%d" % int(params.frozen),
    ]
    header = ("\n".join(lines) + "\n\n").encode("ascii")
    return b"SWAE1\n" + header + dump_params(
        concat_params([params.encoder, params.decoder]))


def parse_swae(data: bytes) -> Tuple[SwaeParams, SwaeConfig]:
    if not data.startswith(b"SWAE1\n"):
        raise ValueError("not a SWAE checkpoint")
    rest = data[len(b"SWAE1\n"):]
    head_end = rest.index(b"\n\n")
    fields = {}
    for line in rest[:head_end].decode("ascii").splitlines():
        key, value = line.split("=", 1)
        fields[key] = value
    enc_sizes = tuple(int(s) for s in fields["encoder_layers"].split(","))
    dec_sizes = tuple(int(s) for s in fields["decoder_layers"].split(","))
    cfg = SwaeConfig(
        crop_size=int(fields["crop_size"]),
        downsample_to=int(fields["downsample_to"]),
        latent_dim=int(fields["latent_dim"]),
        encoder_spec=MlpSpec(enc_sizes, activation=fields["encoder_activation"]),
        decoder_spec=MlpSpec(dec_sizes, activation=fields["decoder_activation"]),
        num_projections=int(fields["num_projections"]),
        sw_weight=float(fields["sw_weight"]),
        prior=fields["prior"],
        elev_range=float(fields["elev_range"]),
    )
    merged = parse_params(rest[head_end + 2:])
    enc_layout = [(n, s) for n, s in merged.layout if n.startswith("enc_")]
    dec_layout = [(n, s) for n, s in merged.layout if n.startswith("dec_")]
    encoder = ParamVector(
        np.concatenate([merged.view(n).ravel() for n, _ in enc_layout]),
        enc_layout)
    decoder = ParamVector(
        np.concatenate([merged.view(n).ravel() for n, _ in dec_layout]),
        dec_layout)
    params = SwaeParams(encoder=encoder, decoder=decoder,
                        frozen=bool(int(fields["frozen"])))
    return params, cfg


def save_swae(path, params: SwaeParams, cfg: SwaeConfig) -> None:
    with open(path, "wb") as fh:
        fh.write(dump_swae(params, cfg))


def load_swae(path) -> Tuple[SwaeParams, SwaeConfig]:
    with open(path, "rb") as fh:
        return parse_swae(fh.read())
