"""Signal-processing anonymizer based on the McAdams coefficient.

Each frame is modelled as an all-pole filter 1/A(z). The angles of the
complex poles are warped as phi -> phi ** alpha, which moves the formants,
and the frame is resynthesized by driving the warped filter with the LPC
residual of the original one::

    frame -> A(z) -> residual -> 1/A'(z) -> overlap-add
"""
from __future__ import annotations

import logging
import zlib
from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from .audio import AudioBuffer

log = logging.getLogger(__name__)

STABILITY_RADIUS = 1.0 - 1e-6
PHASE_MARGIN = 1e-9
SILENCE_ENERGY = 1e-12


class DegenerateFrame(ValueError):
    """The frame has no energy to model (r0 <= 0); copy it through instead."""


class RootFindingError(ArithmeticError):
    def __init__(self, msg, frame_index=None):
        super().__init__(msg if frame_index is None else f"frame {frame_index}: {msg}")
        self.frame_index = frame_index


class ConjugateSymmetryError(ValueError):
    pass


@dataclass
class LpcModel:
    """All-pole model with A(z) = 1 + a1 z^-1 + ... + ap z^-p."""

    coefficients: np.ndarray
    prediction_error: float = 0.0
    reflection: np.ndarray | None = None

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=np.float64)
        if self.coefficients.ndim != 1 or self.coefficients.size < 1:
            raise ValueError("LPC model needs order >= 1")
        if not np.all(np.isfinite(self.coefficients)):
            raise ValueError("LPC coefficients must be finite")

    @property
    def order(self) -> int:
        return self.coefficients.size

    @property
    def polynomial(self) -> np.ndarray:
        """[1, a1, ..., ap], the denominator in scipy's lfilter convention."""
        return np.concatenate(([1.0], self.coefficients))


@dataclass
class PoleSet:
    """Roots of A(z). Complex poles are stored as (p, conj(p)) neighbours with
    Im(p) > 0, followed by the real poles."""

    poles: np.ndarray

    def __post_init__(self):
        self.poles = np.asarray(self.poles, dtype=np.complex128)

    def __len__(self):
        return self.poles.size


@dataclass
class McAdamsConfig:
    alpha: float = 0.8
    frame_ms: float = 20.0
    hop_ms: float = 10.0
    lpc_order: int | None = None
    window: str = "hann"
    imag_eps: float = 1e-6
    randomize_alpha: tuple[float, float] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if not 0 < self.hop_ms <= self.frame_ms:
            raise ValueError("need 0 < hop_ms <= frame_ms")
        if self.window != "hann":
            raise ValueError(f"unsupported window {self.window!r}")
        if self.randomize_alpha is not None:
            lo, hi = self.randomize_alpha
            if not 0 < lo <= hi:
                raise ValueError("randomize_alpha must be an interval 0 < lo <= hi")
            self.randomize_alpha = (float(lo), float(hi))

    def order_for(self, rate: int) -> int:
        if self.lpc_order is not None:
            return self.lpc_order
        return 20 if rate == 16000 else int(round(rate / 1000)) + 4

    def frame_length(self, rate: int) -> int:
        return int(round(self.frame_ms * rate / 1000))

    def hop_length(self, rate: int) -> int:
        return int(round(self.hop_ms * rate / 1000))

    def alpha_for(self, utt_id: str | None = None) -> float:
        """Fixed alpha, or a per-utterance draw seeded by seed XOR crc32(utt_id)."""
        if self.randomize_alpha is None:
            return self.alpha
        lo, hi = self.randomize_alpha
        key = zlib.crc32((utt_id or "").encode("utf-8"))
        rng = np.random.default_rng(self.seed ^ key)
        return float(rng.uniform(lo, hi))


# --------------------------------------------------------------- framing


def analysis_window(n: int) -> np.ndarray:
    """Square root of a periodic Hann window.

    It is applied once before analysis and once after synthesis, so the
    effective weight per frame is the Hann window itself, which sums to one
    at 50% overlap.
    """
    return np.sqrt(scipy.signal.get_window("hann", n, fftbins=True))


def _frame_layout(n_samples: int, frame_len: int, hop: int) -> tuple[int, int]:
    # leading pad so the first sample already sits in the fully overlapped region
    pad = frame_len - hop
    n_frames = (n_samples - 1 + pad) // hop + 1
    return pad, n_frames


def frame_signal(audio: AudioBuffer, cfg: McAdamsConfig) -> np.ndarray:
    """Windowed frames, shape (n_frames, frame_len).

    The signal is zero padded at both ends so that every input sample is
    covered by the same number of frames; see `overlap_add`.
    """
    rate = audio.sample_rate_hz
    frame_len, hop = cfg.frame_length(rate), cfg.hop_length(rate)
    pad, n_frames = _frame_layout(audio.samples.size, frame_len, hop)
    padded = np.zeros((n_frames - 1) * hop + frame_len)
    padded[pad : pad + audio.samples.size] = audio.samples
    idx = np.arange(frame_len)[None, :] + hop * np.arange(n_frames)[:, None]
    return padded[idx] * analysis_window(frame_len)


def overlap_add(frames: np.ndarray, cfg: McAdamsConfig, rate: int, n_samples: int) -> np.ndarray:
    """Apply the synthesis window, overlap-add and trim back to `n_samples`."""
    frame_len, hop = cfg.frame_length(rate), cfg.hop_length(rate)
    pad, n_frames = _frame_layout(n_samples, frame_len, hop)
    if frames.shape != (n_frames, frame_len):
        raise ValueError(f"expected frames of shape {(n_frames, frame_len)}, got {frames.shape}")
    win = analysis_window(frame_len)
    # Hann sums to exactly one only at 50% overlap; normalise in general
    norm = np.zeros((n_frames - 1) * hop + frame_len)
    out = np.zeros_like(norm)
    for k in range(n_frames):
        out[k * hop : k * hop + frame_len] += frames[k] * win
        norm[k * hop : k * hop + frame_len] += win * win
    out = out[pad : pad + n_samples]
    norm = norm[pad : pad + n_samples]
    return out / np.where(norm > 1e-12, norm, 1.0)


# -------------------------------------------------------------- analysis


def autocorrelate(frame, order: int) -> np.ndarray:
    """r[k] = sum_t frame[t] * frame[t + k] for k = 0..order."""
    x = np.asarray(frame, dtype=np.float64)
    if order >= x.size:
        raise ValueError("order must be smaller than the frame length")
    return np.correlate(x, x, mode="full")[x.size - 1 : x.size + order]


def levinson_durbin(r) -> LpcModel:
    """Solve the Toeplitz normal equations for the LPC coefficients.

    If a reflection coefficient reaches magnitude one the recursion stops and
    the remaining coefficients are left at zero.
    """
    r = np.asarray(r, dtype=np.float64)
    p = r.size - 1
    if p < 1:
        raise ValueError("need at least r0 and r1")
    if not r[0] > 0:
        raise DegenerateFrame("zero-energy frame")
    a = np.zeros(p)
    k = np.zeros(p)
    err = r[0]
    for i in range(p):
        acc = r[i + 1] + a[:i] @ r[i:0:-1]
        ki = -acc / err
        if not abs(ki) < 1.0:
            break
        a[:i] = a[:i] + ki * a[:i][::-1]
        a[i] = ki
        k[i] = ki
        err *= 1.0 - ki * ki
    return LpcModel(a, max(float(err), 0.0), k)


# ------------------------------------------------------------ pole space


def _polyval_desc(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    out = np.zeros_like(z, dtype=np.complex128)
    for c in coeffs:
        out = out * z + c
    return out


def lpc_to_poles(model: LpcModel, imag_eps: float = 1e-6, frame_index=None) -> PoleSet:
    """Roots of z^p + a1 z^(p-1) + ... + ap as eigenvalues of the companion matrix."""
    a = model.coefficients
    p = a.size
    comp = np.zeros((p, p))
    comp[0, :] = -a
    comp[1:, :-1] = np.eye(p - 1)
    try:
        roots = np.linalg.eigvals(comp)
    except np.linalg.LinAlgError as e:
        raise RootFindingError(str(e), frame_index) from e
    poly = model.polynomial
    tol = 1e-6 * max(1.0, float(np.linalg.norm(a)))
    resid = np.abs(_polyval_desc(poly, roots))
    if np.any(resid > tol):
        # a couple of Newton steps usually fix clustered roots
        dpoly = poly[:-1] * np.arange(p, 0, -1)
        for _ in range(3):
            d = _polyval_desc(dpoly, roots)
            ok = np.abs(d) > 0
            roots = np.where(ok, roots - _polyval_desc(poly, roots) / np.where(ok, d, 1), roots)
        resid = np.abs(_polyval_desc(poly, roots))
        if not np.all(np.isfinite(roots)) or np.any(resid > tol):
            raise RootFindingError(f"root residual {resid.max():.3g} above {tol:.3g}", frame_index)
    return _pair_conjugates(roots, imag_eps, frame_index)


def _pair_conjugates(roots: np.ndarray, imag_eps: float, frame_index=None) -> PoleSet:
    upper = roots[roots.imag > imag_eps]
    lower = roots[roots.imag < -imag_eps]
    real = roots[np.abs(roots.imag) <= imag_eps].real
    if upper.size != lower.size:
        raise RootFindingError("complex roots do not come in conjugate pairs", frame_index)
    upper = upper[np.argsort(np.angle(upper), kind="stable")]
    mirrored = np.conj(lower)
    # each upper root must have a mirrored lower root right next to it
    gap = np.abs(upper[:, None] - mirrored[None, :]).min(axis=1) if upper.size else upper.real
    if np.any(gap > 1e-6 * np.maximum(1.0, np.abs(upper))):
        raise RootFindingError("complex roots do not come in conjugate pairs", frame_index)
    paired = np.empty(2 * upper.size, dtype=np.complex128)
    paired[0::2] = upper
    paired[1::2] = np.conj(upper)
    return PoleSet(np.concatenate([paired, np.sort(real)]))


def shift_poles(poles: PoleSet, alpha: float, imag_eps: float = 1e-6) -> PoleSet:
    """Warp the angle of every complex pole pair from phi to phi ** alpha.

    Magnitudes are kept, real poles are left alone, and anything that ends up
    on or outside the unit circle is pulled back to radius 1 - 1e-6.
    """
    out = poles.poles.copy()
    cplx = np.abs(out.imag) > imag_eps
    # lower-half poles get the mirror image of their partner's warp
    phi = np.abs(np.angle(out[cplx]))
    new_phi = np.clip(phi**alpha, PHASE_MARGIN, np.pi - PHASE_MARGIN)
    moved = new_phi != phi
    idx = np.flatnonzero(cplx)[moved]
    out[idx] = np.abs(out[idx]) * np.exp(1j * np.copysign(new_phi[moved], out[idx].imag))
    mag = np.abs(out)
    unstable = mag >= 1.0
    if np.any(unstable):
        out[unstable] *= STABILITY_RADIUS / mag[unstable]
    return PoleSet(out)


def poles_to_lpc(poles: PoleSet, tol: float = 1e-9) -> LpcModel:
    """Expand prod(z - p_i) into real monic coefficients."""
    z = poles.poles
    poly = np.zeros(z.size + 1, dtype=np.complex128)
    poly[0] = 1.0
    for n, root in enumerate(z, 1):
        poly[1 : n + 1] -= root * poly[:n]
    residue = np.max(np.abs(poly.imag))
    if residue > tol:
        raise ConjugateSymmetryError(f"pole set is not conjugate-closed (imag residue {residue:.3g})")
    return LpcModel(poly.real[1:])


# ------------------------------------------------------------- anonymizer


@dataclass
class McAdamsResult:
    audio: AudioBuffer
    alpha: float
    n_frames: int = 0
    n_silent: int = 0
    # frames copied through because some DSP step failed
    n_failed: int = 0
    warnings: list[str] = field(default_factory=list)


def _process_frame(frame, order, alpha, imag_eps, index):
    r = autocorrelate(frame, order)
    if r[0] <= SILENCE_ENERGY:
        raise DegenerateFrame("silent frame")
    model = levinson_durbin(r)
    poles = lpc_to_poles(model, imag_eps, index)
    shifted = shift_poles(poles, alpha, imag_eps)
    if np.any(np.abs(shifted.poles) >= 1.0):
        raise RootFindingError("unstable synthesis filter", index)
    new_model = poles_to_lpc(shifted)
    residual = scipy.signal.lfilter(model.polynomial, [1.0], frame)
    out = scipy.signal.lfilter([1.0], new_model.polynomial, residual)
    if not np.all(np.isfinite(out)):
        raise RootFindingError("non-finite synthesis output", index)
    return out


def _batch_levinson(r: np.ndarray) -> np.ndarray:
    """levinson_durbin over the rows of `r`, returning monic polynomials."""
    n, p = r.shape[0], r.shape[1] - 1
    a = np.zeros((n, p))
    err = r[:, 0].copy()
    live = np.ones(n, dtype=bool)
    for i in range(p):
        acc = r[:, i + 1] + np.einsum("fj,fj->f", a[:, :i], r[:, i:0:-1])
        with np.errstate(divide="ignore", invalid="ignore"):
            k = -acc / err
        live &= np.abs(k) < 1.0
        k = np.where(live, k, 0.0)
        a[:, :i] = a[:, :i] + k[:, None] * a[:, :i][:, ::-1]
        a[:, i] = k
        err = err * (1.0 - k * k)
    return np.hstack([np.ones((n, 1)), a])


def _process_frames(frames: np.ndarray, order: int, alpha: float, imag_eps: float):
    """Vectorised `_process_frame` over a stack of frames.

    Returns (output, silent mask, mask of frames the batch path could not
    vouch for); the caller reruns the latter through `_process_frame`.
    """
    n, length = frames.shape
    r = np.stack([np.einsum("ft,ft->f", frames[:, : length - k], frames[:, k:]) for k in range(order + 1)], axis=1)
    silent = r[:, 0] <= SILENCE_ENERGY
    out = frames.copy()
    idx = np.flatnonzero(~silent)
    retry = np.zeros(n, dtype=bool)
    if idx.size == 0:
        return out, silent, retry
    x = frames[idx]
    poly = _batch_levinson(r[idx])

    comp = np.zeros((idx.size, order, order))
    comp[:, 0, :] = -poly[:, 1:]
    comp[:, np.arange(1, order), np.arange(order - 1)] = 1.0
    roots = np.linalg.eigvals(comp)
    resid = np.zeros(roots.shape, dtype=np.complex128)
    for c in poly.T:
        resid = resid * roots + c[:, None]
    tol = 1e-6 * np.maximum(1.0, np.linalg.norm(poly[:, 1:], axis=1))
    bad = ~np.all(np.isfinite(roots), axis=1) | (np.abs(resid).max(axis=1) > tol)

    # same warp as shift_poles, applied to every frame at once
    real = np.abs(roots.imag) <= imag_eps
    roots = np.where(real, roots.real + 0j, roots)
    bad |= (np.sum(roots.imag > 0, axis=1) != np.sum(roots.imag < 0, axis=1))
    phi = np.abs(np.angle(roots))
    new_phi = np.clip(phi**alpha, PHASE_MARGIN, np.pi - PHASE_MARGIN)
    move = ~real & (new_phi != phi)
    roots = np.where(move, np.abs(roots) * np.exp(1j * np.copysign(new_phi, roots.imag)), roots)
    mag = np.abs(roots)
    roots = np.where(mag >= 1.0, roots * (STABILITY_RADIUS / np.where(mag > 0, mag, 1.0)), roots)

    new_poly = np.zeros((idx.size, order + 1), dtype=np.complex128)
    new_poly[:, 0] = 1.0
    for j in range(order):
        new_poly[:, 1 : j + 2] -= roots[:, j : j + 1] * new_poly[:, : j + 1]
    bad |= np.abs(new_poly.imag).max(axis=1) > 1e-9
    new_poly = new_poly.real

    residual = np.zeros_like(x)
    for k in range(order + 1):
        residual[:, k:] += poly[:, k : k + 1] * x[:, : length - k]
    for j in np.flatnonzero(~bad):
        y = scipy.signal.lfilter([1.0], new_poly[j], residual[j])
        if np.all(np.isfinite(y)):
            out[idx[j]] = y
        else:
            bad[j] = True
    retry[idx[bad]] = True
    return out, silent, retry


def mcadams_anonymize(audio: AudioBuffer, cfg: McAdamsConfig, utt_id: str | None = None) -> McAdamsResult:
    alpha = cfg.alpha_for(utt_id)
    rate = audio.sample_rate_hz
    order = cfg.order_for(rate)
    frames = frame_signal(audio, cfg)
    if order >= frames.shape[1]:
        raise ValueError(f"LPC order {order} too high for {frames.shape[1]}-sample frames")
    result = McAdamsResult(audio, alpha, n_frames=len(frames))
    out, silent, retry = _process_frames(frames, order, alpha, cfg.imag_eps)
    result.n_silent = int(silent.sum())
    for i in np.flatnonzero(retry):
        try:
            out[i] = _process_frame(frames[i], order, alpha, cfg.imag_eps, int(i))
        except DegenerateFrame:
            result.n_silent += 1
            out[i] = frames[i]
        except (RootFindingError, ConjugateSymmetryError, np.linalg.LinAlgError) as e:
            result.n_failed += 1
            result.warnings.append(str(e))
            out[i] = frames[i]
    if result.n_failed:
        log.warning("%s: %d of %d frames copied through", utt_id or "audio", result.n_failed, len(frames))
    y = overlap_add(out, cfg, rate, audio.samples.size)
    peak = np.max(np.abs(y))
    if peak > 1.0:
        y *= np.max(np.abs(audio.samples)) / peak
    result.audio = AudioBuffer(y, rate, audio.encoding)
    return result
