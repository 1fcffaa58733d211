"""Hidden ground-truth model and per-round client batch generation.

Client ``i`` observes pairs ``(x, y)`` with ``x ~ N(0, I_d)`` and
``y = w_i*^T B*^T x + z``, ``z ~ N(0, sigma^2)``.  All randomness is
drawn from counter-based substreams keyed on ``(seed, purpose, client,
round)`` so that batches are reproducible regardless of execution order
and distinct rounds are statistically independent.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ClientOutOfRange, ConfigError
from .linalg import thin_qr

# substream tags; must stay distinct from the tags used by the timing module
_TAG_GROUND_TRUTH = 0x01
_TAG_BATCH = 0x02


def substream(seed, *key):
    """Independent generator for the given purpose key under a master seed."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


@dataclass(frozen=True)
class GroundTruthModel:
    """The hidden (B*, W*, sigma) triple that generates all client data.

    ``b_star`` is d x k with orthonormal columns; row ``i`` of ``w_star``
    is the client head ``w_i*`` with Euclidean norm sqrt(k).
    """

    b_star: np.ndarray
    w_star: np.ndarray
    sigma: float
    d: int
    k: int
    n_clients: int
    seed: int


@dataclass(frozen=True)
class Batch:
    """One fresh batch for one client: rows of ``x`` are samples."""

    x: np.ndarray
    y: np.ndarray
    client_id: int
    round_index: int


def gen_ground_truth(d, k, n_clients, sigma, seed):
    """Draw a ground-truth model, deterministic in ``seed``.

    The representation is the Q factor of a d x k standard Gaussian
    draw; each head is a standard Gaussian k-vector rescaled to norm
    sqrt(k) (resampled in the measure-zero event of an exactly zero
    draw).
    """
    if not 1 <= k <= d:
        raise ConfigError(f"need 1 <= k <= d, got k={k}, d={d}")
    if n_clients < 1:
        raise ConfigError(f"need at least one client, got {n_clients}")
    if sigma < 0:
        raise ConfigError(f"noise std must be >= 0, got {sigma}")
    rng = substream(seed, _TAG_GROUND_TRUTH)
    b_star, _ = thin_qr(rng.standard_normal((d, k)))
    heads = rng.standard_normal((n_clients, k))
    norms = np.linalg.norm(heads, axis=1)
    while np.any(norms == 0.0):  # degenerate head: resample, never fires in practice
        bad = norms == 0.0
        heads[bad] = rng.standard_normal((int(bad.sum()), k))
        norms = np.linalg.norm(heads, axis=1)
    w_star = heads * (np.sqrt(k) / norms)[:, None]
    return GroundTruthModel(
        b_star=b_star, w_star=w_star, sigma=float(sigma), d=d, k=k,
        n_clients=n_clients, seed=seed,
    )


def sample_batch(gt, client, m, round_index, seed):
    """Fresh batch of ``m`` samples for ``client`` at the given round.

    The stream is a pure function of ``(seed, client, round_index)``:
    identical triples yield bit-identical batches, distinct rounds yield
    independent ones.
    """
    if not 0 <= client < gt.n_clients:
        raise ClientOutOfRange(f"client {client} outside 0..{gt.n_clients - 1}")
    if m < 1:
        raise ConfigError(f"batch size must be >= 1, got {m}")
    rng = substream(seed, _TAG_BATCH, client, round_index)
    x = rng.standard_normal((m, gt.d))
    y = x @ (gt.b_star @ gt.w_star[client])
    if gt.sigma > 0:
        y = y + gt.sigma * rng.standard_normal(m)
    return Batch(x=x, y=y, client_id=client, round_index=round_index)


def save_model(path, gt):
    """Write the five scalars that fully determine a ground-truth model."""
    lines = [
        f"d = {gt.d}",
        f"k = {gt.k}",
        f"clients = {gt.n_clients}",
        f"sigma = {gt.sigma!r}",
        f"seed = {gt.seed}",
    ]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path):
    """Rebuild a ground-truth model saved by :func:`save_model`."""
    fields = {}
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            fields[key.strip()] = value.strip()
    try:
        return gen_ground_truth(
            d=int(fields["d"]),
            k=int(fields["k"]),
            n_clients=int(fields["clients"]),
            sigma=float(fields["sigma"]),
            seed=int(fields["seed"]),
        )
    except KeyError as exc:
        raise ConfigError(f"model file {path} is missing field {exc}") from exc
