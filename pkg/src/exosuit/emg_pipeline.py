"""Offline surface-EMG evaluation of assistance.

Pipeline per trace: Butterworth band-pass, full-wave rectification, mean
over each marked movement cycle.  Subjects are compared with and without
the exosuit as a percent reduction of the grand cycle mean.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal

from .errors import DomainError

log = logging.getLogger(__name__)

DEFAULT_FS = 2000.0
CONDITIONS = ("with_exosuit", "without_exosuit")
QUEST_DIMENSIONS = (
    "dimensions", "weight", "adjustments", "safety",
    "durability", "simplicity_of_use", "comfort", "effectiveness",
)


@dataclass(frozen=True)
class FilterSpec:
    order: int = 4
    low_cut: float = 10.0
    high_cut: float = 400.0
    zero_phase: bool = False  # forward-backward pass; doubles the effective order

    def validate(self, fs):
        if int(self.order) != self.order or self.order < 1:
            raise DomainError(f"filter order must be a positive integer, got {self.order!r}")
        if not 0 < self.low_cut < self.high_cut:
            raise DomainError("need 0 < low_cut < high_cut")
        if self.high_cut >= fs / 2.0:
            raise DomainError(f"high_cut {self.high_cut:g} Hz is not below Nyquist ({fs / 2:g} Hz)")


@dataclass
class EmgTrace:
    fs: float
    samples: np.ndarray
    condition: str = "without_exosuit"
    cycle_marks: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if not self.fs > 0:
            raise DomainError("sample rate must be positive")
        if self.fs <= 800.0:
            raise DomainError(f"sample rate {self.fs:g} Hz leaves no margin for a 400 Hz band edge")
        if self.condition not in CONDITIONS:
            raise DomainError(f"condition must be one of {CONDITIONS}, got {self.condition!r}")
        prev_end = 0
        for start, end in self.cycle_marks:
            if not (prev_end <= start < end <= len(self.samples)):
                raise DomainError(f"cycle ({start}, {end}) overlaps, is out of order or out of bounds")
            prev_end = end


def _butter_prototype(order):
    k = np.arange(1, order + 1)
    return np.exp(1j * np.pi * (2 * k + order - 1) / (2 * order))


def design_bandpass_zpk(spec: FilterSpec, fs: float):
    """Digital zeros, poles and gain of the band-pass filter.

    The analog low-pass prototype is shifted to a band-pass whose edges are
    prewarped, so the bilinear map lands the -3 dB points exactly on
    ``low_cut`` and ``high_cut``.
    """
    spec.validate(fs)
    n = int(spec.order)
    fs2 = 2.0 * fs
    w_lo = fs2 * math.tan(math.pi * spec.low_cut / fs)
    w_hi = fs2 * math.tan(math.pi * spec.high_cut / fs)
    bw = w_hi - w_lo
    w0_sq = w_lo * w_hi

    p_lp = _butter_prototype(n)
    # each prototype pole p splits into the roots of s^2 - p*bw*s + w0^2
    half = p_lp * bw / 2.0
    disc = np.sqrt(half * half - w0_sq + 0j)
    p_a = np.concatenate([half + disc, half - disc])
    k_a = bw**n  # n zeros at s = 0, n at infinity

    p_d = (fs2 + p_a) / (fs2 - p_a)
    z_d = np.concatenate([np.ones(n), -np.ones(n)])
    k_d = k_a * np.real(fs2**n / np.prod(fs2 - p_a))
    return z_d, p_d, k_d


def _pair_poles(poles, tol=1e-10):
    upper = sorted((p for p in poles if p.imag > tol), key=lambda p: abs(p))
    real = sorted((p.real for p in poles if abs(p.imag) <= tol))
    pairs = [(p, p.conjugate()) for p in upper]
    pairs += [(real[i], real[i + 1]) for i in range(0, len(real) - 1, 2)]
    if len(real) % 2:
        pairs.append((real[-1], None))
    return pairs


def design_bandpass(spec: FilterSpec, fs: float) -> np.ndarray:
    """Second-order sections ``[b0, b1, b2, 1, a1, a2]`` of the band-pass filter."""
    z, p, k = design_bandpass_zpk(spec, fs)
    rows = []
    for a, b in _pair_poles(p):
        if b is None:
            den = [1.0, -a.real, 0.0]
        else:
            den = np.real(np.poly([a, b])).tolist()
        rows.append([1.0, 0.0, -1.0] + den)  # one zero at z=1, one at z=-1
    sos = np.array(rows)
    sos[0, :3] *= k
    return sos


def frequency_response(sos: np.ndarray, freqs, fs: float) -> np.ndarray:
    """Complex response of the sections evaluated on the unit circle."""
    z = np.exp(1j * 2.0 * np.pi * np.asarray(freqs, dtype=float) / fs)
    h = np.ones_like(z)
    for row in sos:
        h *= (row[0] + row[1] / z + row[2] / z**2) / (row[3] + row[4] / z + row[5] / z**2)
    return h


def poles_of(sos: np.ndarray) -> np.ndarray:
    return np.concatenate([np.roots(row[3:]) for row in sos])


def filter_trace(trace: EmgTrace, spec: FilterSpec) -> EmgTrace:
    sos = design_bandpass(spec, trace.fs)
    if spec.zero_phase:
        out = signal.sosfiltfilt(sos, trace.samples)
    else:
        out = signal.sosfilt(sos, trace.samples)
    return replace(trace, samples=out)


def rectify(trace: EmgTrace) -> EmgTrace:
    return replace(trace, samples=np.abs(trace.samples))


def cycle_mean(trace: EmgTrace) -> tuple[list[float], float]:
    """Mean amplitude of each marked cycle and the grand mean across cycles."""
    if not trace.cycle_marks:
        raise DomainError("trace has no cycle marks")
    means = []
    for start, end in trace.cycle_marks:
        if end <= start:
            raise DomainError(f"empty cycle ({start}, {end})")
        means.append(float(np.mean(trace.samples[start:end])))
    return means, math.fsum(means) / len(means)


def process(trace: EmgTrace, spec: FilterSpec | None = None) -> tuple[list[float], float]:
    """Filter, rectify and average one trace."""
    return cycle_mean(rectify(filter_trace(trace, spec or FilterSpec())))


def percent_reduction(mean_without: float, mean_with: float) -> float:
    if not mean_without > 0:
        raise DomainError("baseline (without exosuit) mean must be positive")
    return 100.0 * (mean_without - mean_with) / mean_without


def average_reduction(per_subject) -> float:
    values = list(per_subject)
    if not values:
        raise DomainError("no subjects to average")
    return math.fsum(values) / len(values)


@dataclass(frozen=True)
class QuestScores:
    scores: tuple[int, ...]

    def __post_init__(self):
        if len(self.scores) != len(QUEST_DIMENSIONS):
            raise DomainError(f"QUEST sheet needs {len(QUEST_DIMENSIONS)} scores, got {len(self.scores)}")
        for s in self.scores:
            if isinstance(s, bool) or int(s) != s or not 1 <= s <= 5:
                raise DomainError(f"QUEST scores are integers 1-5, got {s!r}")


def quest_total(sheets) -> float:
    sheets = list(sheets)
    if not sheets:
        raise DomainError("need at least one QUEST respondent")
    flat = [s for sheet in sheets for s in sheet.scores]
    return math.fsum(flat) / len(flat)


def analyze_subjects(pairs, spec: FilterSpec | None = None, quest=None) -> dict:
    """Report dict for ``[(without_trace, with_trace), ...]``."""
    spec = spec or FilterSpec()
    per_subject = []
    for i, (without, with_) in enumerate(pairs, start=1):
        _, m_without = process(without, spec)
        _, m_with = process(with_, spec)
        per_subject.append({
            "subject": i,
            "mean_without_mv": m_without,
            "mean_with_mv": m_with,
            "reduction_pct": percent_reduction(m_without, m_with),
        })
    report = {
        "per_subject": per_subject,
        "average_pct": average_reduction(s["reduction_pct"] for s in per_subject),
        "quest_total": quest_total(quest) if quest else None,
    }
    return report


def summary_text(report: dict) -> str:
    lines = []
    for s in report["per_subject"]:
        lines.append(
            f"subject {s['subject']}: without {s['mean_without_mv']:.4f} mV, "
            f"with {s['mean_with_mv']:.4f} mV, reduction {s['reduction_pct']:.2f}%"
        )
    lines.append(f"average reduction: {report['average_pct']:.2f}%")
    if report.get("quest_total") is not None:
        lines.append(f"QUEST total: {report['quest_total']:.2f}")
    return "\n".join(lines) + "\n"
