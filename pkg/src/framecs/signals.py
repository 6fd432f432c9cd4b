"""Piecewise-constant test signals with a prescribed frame sparsity."""
from __future__ import annotations

from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidInputError


def piecewise_constant(n: int, breakpoints: Sequence[int], values: Sequence[float],
                       start: int = 0, stop: Optional[int] = None) -> np.ndarray:
    """Signal equal to ``values[i]`` between consecutive breakpoints.

    Breakpoints are 0-based positions where a new piece starts, strictly
    inside ``(start, stop)``. Outside ``[start, stop)`` the signal is 0.
    """
    stop = n if stop is None else stop
    br = [int(b) for b in breakpoints]
    if len(values) != len(br) + 1:
        raise InvalidInputError("need one value per piece")
    edges = [start] + br + [stop]
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise InvalidInputError("breakpoints must be strictly increasing inside the window")
    x = np.zeros(n)
    for a, b, v in zip(edges, edges[1:], values):
        x[a:b] = v
    return x


def support_size(z, rel_tol: float = 1e-9) -> int:
    """Number of entries with modulus above ``rel_tol * max|z|``."""
    a = np.abs(np.asarray(z))
    m = a.max(initial=0.0)
    if m == 0:
        return 0
    return int(np.count_nonzero(a > rel_tol * m))


def support(z, rel_tol: float = 1e-9) -> np.ndarray:
    """1-based indices of the entries counted by :func:`support_size`."""
    a = np.abs(np.asarray(z))
    m = a.max(initial=0.0)
    if m == 0:
        return np.zeros(0, dtype=np.int64)
    return np.flatnonzero(a > rel_tol * m) + 1


def random_piecewise_constant(n: int, n_breaks: int, rng: np.random.Generator,
                              window: Optional[Tuple[int, int]] = None,
                              amplitude: float = 10.0) -> np.ndarray:
    """Random piecewise-constant signal.

    Parameters
    ----------
    n : int
        Length.
    n_breaks : int
        Number of interior breakpoints.
    window : (start, stop), optional
        0-based half-open range carrying the signal; zero elsewhere.
    amplitude : float
        Piece values are uniform on ``[-amplitude, amplitude]``.
    """
    start, stop = window if window is not None else (0, n)
    inner = np.arange(start + 1, stop)
    if n_breaks > inner.size:
        raise InvalidInputError("too many breakpoints for the window")
    br = np.sort(rng.choice(inner, size=n_breaks, replace=False))
    vals = rng.uniform(-amplitude, amplitude, size=n_breaks + 1)
    return piecewise_constant(n, br, vals, start, stop)


def signal_with_frame_sparsity(D: np.ndarray, target: int, rng: np.random.Generator,
                               breaks: Sequence[int], window: Optional[Tuple[int, int]] = None,
                               amplitude: float = 10.0, max_tries: int = 100_000) -> np.ndarray:
    """Rejection-sample a piecewise-constant `x` with exactly `target` nonzeros in `Dx`.

    The breakpoint count is drawn uniformly from `breaks` on every try.
    """
    n = D.shape[1]
    breaks = list(breaks)
    for _ in range(max_tries):
        k = int(rng.choice(breaks))
        x = random_piecewise_constant(n, k, rng, window, amplitude)
        if support_size(D @ x) == target:
            return x
    raise RuntimeError(f"no signal with {target} frame nonzeros after {max_tries} tries")


def fig2_signals(D: np.ndarray, seed: int, target: int = 100,
                 window: Tuple[int, int] = (99, 158)) -> Tuple[np.ndarray, np.ndarray]:
    """The two test signals of the structured-sampling demonstration.

    Returns ``(x1, x2)``. ``x1`` lives on the 0-based window (default the
    1-based indices 100..158) and has many jumps, so `Dx1` carries much of
    its mass at fine scales. ``x2`` has a few jumps spread over the whole
    length, so `Dx2` is dominated by coarse scales. Both have exactly
    `target` nonzero frame coefficients.
    """
    n = D.shape[1]
    ss = np.random.SeedSequence(int(seed))
    r1, r2 = (np.random.Generator(np.random.PCG64(s)) for s in ss.spawn(2))
    width = window[1] - window[0]
    # breakpoint ranges chosen so the target count is hit often
    k1 = range(max(1, int(0.40 * width)), int(0.50 * width) + 1)
    x1 = signal_with_frame_sparsity(D, target, r1, k1, window)
    k2 = range(4, 9) if n >= 256 else range(1, 4)
    x2 = signal_with_frame_sparsity(D, target, r2, k2)
    return x1, x2
