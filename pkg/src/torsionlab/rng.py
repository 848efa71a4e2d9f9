"""Counter-based random streams for reproducible Monte Carlo.

Every draw is a pure function of (seed, tag, stream, counter), where the tag
separates estimators, the stream is normally a path index and the counter a
step index.  Because no generator state is carried between calls, results do
not depend on how paths are batched or distributed over workers: path k gets
the same numbers whether it runs alone or in a block of a million.  All
routines are vectorised over numpy uint64 arrays.

The mixer is the splitmix64 finalizer, applied after folding in each key word.
Gaussians use the polar method (no erf / inverse-CDF dependence), with
rejection retries indexed by a sub-counter so acceptance of one element never
shifts the draws of another.
"""

from __future__ import annotations

import numpy as np

# estimator tags, kept distinct so identical (stream, counter) pairs in
# different algorithms never share numbers
TAG_WOS = 11
TAG_STABLE_WOS = 12
TAG_EM_PATH = 13
TAG_CALIBRATE = 14
TAG_POINTS = 15

_GOLD = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_W1 = np.uint64(0xE7037ED1A0B428DB)
_W2 = np.uint64(0x8EBC6AF09C88C6E3)
_W3 = np.uint64(0x589965CC75374CC3)
_INV53 = np.float64(2.0 ** -53)


def _finalize(x: np.ndarray) -> np.ndarray:
    # modular uint64 arithmetic throughout; the wraparound is the mixer
    with np.errstate(over="ignore"):
        x = x ^ (x >> np.uint64(30))
        x = x * _M1
        x = x ^ (x >> np.uint64(27))
        x = x * _M2
        x = x ^ (x >> np.uint64(31))
    return x


def _key(seed: int, tag: int, stream, counter) -> np.ndarray:
    s = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    stream = np.asarray(stream, dtype=np.uint64)
    counter = np.asarray(counter, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = _finalize(np.uint64(tag) * _W1 + s + _GOLD)
        h = _finalize(h ^ (stream * _W2 + _GOLD))
        h = _finalize(h ^ (counter * _W3 + _GOLD))
    return h


def uniforms(seed: int, tag: int, stream, counter) -> np.ndarray:
    """Uniform float64 in [0, 1), one per broadcast element."""
    h = _key(seed, tag, stream, counter)
    return (h >> np.uint64(11)).astype(np.float64) * _INV53


def _sub(counter, slot: int):
    # fold a small slot id into the counter word; wraparound is harmless
    with np.errstate(over="ignore"):
        return np.asarray(counter, dtype=np.uint64) * np.uint64(1024) + np.uint64(slot)


def normals(seed: int, tag: int, stream, counter, slot: int = 0) -> np.ndarray:
    """One standard normal per element via the polar method.

    Retries are indexed by a sub-counter, so each element's value is fixed
    regardless of its neighbours' rejections.
    """
    stream = np.asarray(stream, dtype=np.uint64)
    counter = np.asarray(counter, dtype=np.uint64)
    stream, counter = np.broadcast_arrays(stream, counter)
    out = np.empty(stream.shape, dtype=np.float64)
    pending_s = stream.reshape(-1)
    pending_c = counter.reshape(-1)
    flat = out.reshape(-1)
    idx = np.arange(flat.size)
    attempt = 0
    while idx.size:
        if attempt > 128:
            raise RuntimeError("polar sampling failed to accept after 128 tries")
        c0 = _sub(pending_c, slot * 256 + 2 * attempt)
        c1 = _sub(pending_c, slot * 256 + 2 * attempt + 1)
        u = 2.0 * uniforms(seed, tag, pending_s, c0) - 1.0
        v = 2.0 * uniforms(seed, tag, pending_s, c1) - 1.0
        s2 = u * u + v * v
        ok = (s2 > 0.0) & (s2 < 1.0)
        if ok.any():
            su = s2[ok]
            flat[idx[ok]] = u[ok] * np.sqrt(-2.0 * np.log(su) / su)
            keep = ~ok
            idx = idx[keep]
            pending_s = pending_s[keep]
            pending_c = pending_c[keep]
        attempt += 1
    return out


def normal_vectors(seed: int, tag: int, stream, counter, dim: int) -> np.ndarray:
    """(N, dim) array of independent standard normals."""
    stream = np.asarray(stream, dtype=np.uint64)
    cols = [normals(seed, tag, stream, counter, slot=j) for j in range(dim)]
    return np.stack(cols, axis=-1)


def unit_directions(seed: int, tag: int, stream, counter, dim: int) -> np.ndarray:
    """Uniform points on the unit sphere, shape (N, dim)."""
    if dim == 1:
        u = uniforms(seed, tag, stream, _sub(counter, 990))
        return np.where(u < 0.5, -1.0, 1.0)[..., None]
    if dim == 2:
        theta = 2.0 * np.pi * uniforms(seed, tag, stream, _sub(counter, 990))
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    vec = normal_vectors(seed, tag, stream, counter, dim)
    norm = np.sqrt(np.sum(vec * vec, axis=-1, keepdims=True))
    # a zero vector has probability ~0; nudge instead of resampling
    norm = np.maximum(norm, 1e-300)
    return vec / norm


def exponentials(seed: int, tag: int, stream, counter, slot: int = 970) -> np.ndarray:
    u = uniforms(seed, tag, np.asarray(stream, np.uint64), _sub(counter, slot))
    return -np.log1p(-u)


def one_sided_stable(rho: float, seed: int, tag: int, stream, counter) -> np.ndarray:
    """Positive stable draws with Laplace transform exp(-lambda**rho), 0 < rho < 1.

    Kanter's representation: S = (a(U)/W)**((1-rho)/rho) with U uniform on
    (0, pi) and W unit exponential, where
    a(u) = sin(rho u)**(rho/(1-rho)) * sin((1-rho) u) / sin(u)**(1/(1-rho)).
    """
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    stream = np.asarray(stream, dtype=np.uint64)
    u = np.pi * uniforms(seed, tag, stream, _sub(counter, 950))
    u = np.clip(u, 1e-12, np.pi - 1e-12)
    w = exponentials(seed, tag, stream, counter, slot=951)
    w = np.maximum(w, 1e-300)
    r = rho / (1.0 - rho)
    log_a = r * np.log(np.sin(rho * u)) + np.log(np.sin((1.0 - rho) * u)) \
        - (1.0 + r) * np.log(np.sin(u))
    return np.exp((log_a - np.log(w)) / r)
