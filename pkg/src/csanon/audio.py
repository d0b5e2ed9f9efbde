"""Mono audio buffers and WAV I/O."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.io.wavfile

SILENCE_DB = -120.0


class AudioReadError(IOError):
    pass


@dataclass
class AudioBuffer:
    samples: np.ndarray
    sample_rate_hz: int
    # "pcm16" or "float32"; kept so writers can preserve the source format
    encoding: str = "float32"

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("AudioBuffer must be mono")
        if self.samples.size < 1:
            raise ValueError("AudioBuffer must hold at least one sample")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("AudioBuffer samples must be finite")
        if int(self.sample_rate_hz) <= 0:
            raise ValueError("sample rate must be positive")
        self.sample_rate_hz = int(self.sample_rate_hz)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def rms_db(self) -> float:
        """Whole-buffer RMS level in dBFS, floored at -120 dB for silence."""
        rms = float(np.sqrt(np.mean(self.samples**2)))
        if rms <= 10 ** (SILENCE_DB / 20):
            return SILENCE_DB
        return 20.0 * np.log10(rms)


def read_wav(path) -> AudioBuffer:
    try:
        rate, data = scipy.io.wavfile.read(path)
    except (OSError, ValueError) as e:
        raise AudioReadError(f"{path}: {e}") from e
    if data.ndim != 1:
        raise AudioReadError(f"{path}: expected mono audio, got {data.shape[1]} channels")
    if data.dtype == np.int16:
        return AudioBuffer(data.astype(np.float64) / 32768.0, rate, "pcm16")
    if data.dtype == np.float32:
        return AudioBuffer(data.astype(np.float64), rate, "float32")
    raise AudioReadError(f"{path}: unsupported sample format {data.dtype}")


def write_wav(path, audio: AudioBuffer, encoding: str | None = None) -> None:
    encoding = encoding or audio.encoding
    x = np.clip(audio.samples, -1.0, 1.0)
    if encoding == "pcm16":
        # same scale as read_wav so PCM round trips are lossless
        data = np.clip(np.round(x * 32768.0), -32768, 32767).astype(np.int16)
    elif encoding == "float32":
        data = x.astype(np.float32)
    else:
        raise ValueError(f"unknown encoding {encoding!r}")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    scipy.io.wavfile.write(path, audio.sample_rate_hz, data)


def concatenate(buffers: list[AudioBuffer], gap_s: float = 0.0) -> AudioBuffer:
    """Join buffers of equal rate with `gap_s` seconds of silence between them."""
    rate = buffers[0].sample_rate_hz
    if any(b.sample_rate_hz != rate for b in buffers):
        raise ValueError("cannot concatenate buffers with different sample rates")
    gap = np.zeros(int(round(gap_s * rate)))
    parts = []
    for i, b in enumerate(buffers):
        if i:
            parts.append(gap)
        parts.append(b.samples)
    return AudioBuffer(np.concatenate(parts), rate, buffers[0].encoding)
