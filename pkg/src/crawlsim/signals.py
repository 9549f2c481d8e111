"""Parametric input profiles: sine, square and constant signals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SignalSpec:
    """One scalar input channel.

    sine:     bias + amplitude * sin(2*pi*freq*t + phase)
    square:   hi = bias + amplitude while frac(freq*t + phase/2pi) < duty,
              lo = bias - amplitude otherwise
    constant: bias
    """

    kind: str  # "sine" | "square" | "constant"
    freq: float = 0.0  # Hz
    amplitude: float = 0.0
    bias: float = 0.0
    phase: float = 0.0  # rad
    duty: float = 0.5  # square only, in (0, 1)

    def __post_init__(self) -> None:
        if self.kind not in ("sine", "square", "constant"):
            raise InvalidParameterError(f"unknown signal kind {self.kind!r}")
        if self.freq < 0:
            raise InvalidParameterError(f"freq={self.freq} must be >= 0")
        if self.kind == "square" and not 0 < self.duty < 1:
            raise InvalidParameterError(f"duty={self.duty} must be in (0, 1)")

    @staticmethod
    def square_between(lo: float, hi: float, freq: float, phase: float = 0.0,
                       duty: float = 0.5) -> "SignalSpec":
        return SignalSpec(kind="square", freq=freq, phase=phase, duty=duty,
                          amplitude=(hi - lo) / 2.0, bias=(hi + lo) / 2.0)

    @staticmethod
    def constant(value: float) -> "SignalSpec":
        return SignalSpec(kind="constant", bias=value)

    @property
    def lo(self) -> float:
        return self.bias - self.amplitude

    @property
    def hi(self) -> float:
        return self.bias + self.amplitude


def sample_signal(spec: SignalSpec, n: int, T: float) -> float:
    """Value of the signal at sample index n (time n*T)."""
    if spec.kind == "constant":
        return spec.bias
    t = n * T
    if spec.kind == "sine":
        return spec.bias + spec.amplitude * math.sin(TWO_PI * spec.freq * t + spec.phase)
    cycle = math.fmod(spec.freq * t + spec.phase / TWO_PI, 1.0)
    if cycle < 0:
        cycle += 1.0
    return spec.hi if cycle < spec.duty else spec.lo


def sample_series(spec: SignalSpec, n_samples: int, T: float) -> np.ndarray:
    """Vectorized sample_signal over indices 0..n_samples-1."""
    if spec.kind == "constant":
        return np.full(n_samples, spec.bias)
    t = np.arange(n_samples) * T
    if spec.kind == "sine":
        return spec.bias + spec.amplitude * np.sin(TWO_PI * spec.freq * t + spec.phase)
    cycle = np.mod(spec.freq * t + spec.phase / TWO_PI, 1.0)
    return np.where(cycle < spec.duty, spec.hi, spec.lo)
