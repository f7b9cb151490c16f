"""Free-induction decay and spectrum of one observed spin."""

from __future__ import annotations

import io
import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..qcore import DensityMatrix, bit_of, check_qubits, kron
from .dynamics import AnyState, as_ensemble, energies
from .molecule import MoleculeSpec

CONVENTION = "thermal state after [pi/2]_y referenced as positive absorption"


@dataclass(frozen=True, eq=False)
class SpectrumData:
    """Spectrum on a uniform, ascending frequency grid (Hz)."""

    frequencies: np.ndarray
    amplitudes: np.ndarray
    observe_qubit: int
    duration: float
    samples: int
    reference_phase: float

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        a = np.asarray(self.amplitudes, dtype=complex)
        if f.shape != (self.samples,) or a.shape != (self.samples,):
            raise ValueError("frequency grid and amplitudes must both have `samples` points")
        step = np.diff(f)
        if not np.allclose(step, step[0], rtol=0, atol=1e-9 * max(1.0, abs(step[0]))):
            raise ValueError("frequency grid is not uniform")
        f.flags.writeable = False
        a.flags.writeable = False
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "amplitudes", a)

    def metadata(self) -> dict:
        return {
            "observe_qubit": self.observe_qubit,
            "duration_s": self.duration,
            "samples": self.samples,
            "reference_phase_rad": self.reference_phase,
            "convention": CONVENTION,
        }


def multiplet(state: AnyState, spec: MoleculeSpec, observe: int) -> list[tuple[float, complex]]:
    """Analytic line list ``(frequency Hz, amplitude)`` of the observed spin.

    Each configuration of the other spins contributes the element
    ``<..1..| rho |..0..>`` at its own coupled frequency.
    """
    rho = as_ensemble(state).rho
    n = rho.n
    (observe,) = check_qubits([observe], n)
    e = energies(spec)
    idx = np.arange(2**n)
    upper = idx[bit_of(idx, observe, n) == 1]
    lower = upper ^ (1 << (n - observe))
    lines = []
    for a, b in zip(upper, lower):
        lines.append((float((e[b] - e[a]) / (2 * np.pi)), complex(rho.matrix[a, b])))
    return lines


def fid(state: AnyState, spec: MoleculeSpec, observe: int, times: np.ndarray) -> np.ndarray:
    """``Tr(rho(t) sigma_+)`` on the observed spin, with ``T2`` decay.

    ``sigma_+ = |0><1|`` (``|0>`` is spin up); evolution under ``H0``.
    """
    rate = 0.0 if np.isinf(spec.t2[observe - 1]) else 1.0 / spec.t2[observe - 1]
    t = np.asarray(times, dtype=float)
    out = np.zeros(t.shape, dtype=complex)
    for freq, amp in multiplet(state, spec, observe):
        if amp != 0:
            out += amp * np.exp((2j * np.pi * freq - rate) * t)
    return out


def reference_state(n: int, observe: int) -> DensityMatrix:
    """Thermal-like reference: ``|+><+|`` on ``observe``, other spins fully mixed."""
    plus = np.full((2, 2), 0.5, dtype=complex)
    factors = [plus if q == observe else np.eye(2) / 2 for q in range(1, n + 1)]
    return DensityMatrix(kron(*factors))


def reference_phase(spec: MoleculeSpec, observe: int) -> float:
    """Zero-order phase that makes the reference spectrum positive."""
    s0 = fid(reference_state(spec.n, observe), spec, observe, np.zeros(1))[0]
    return float(-np.angle(s0))


def _is_power_of_two(k: int) -> bool:
    return k > 0 and k & (k - 1) == 0


def synthesize_spectrum(
    state: AnyState,
    spec: MoleculeSpec,
    observe: int,
    duration: float,
    samples: int,
    phase: Optional[float] = None,
) -> SpectrumData:
    """Sample the FID over ``duration`` seconds and Fourier transform it."""
    if not duration > 0:
        raise ValueError("duration must be positive")
    if samples < 256 or not _is_power_of_two(samples):
        raise ValueError(f"samples must be a power of two >= 256, got {samples}")
    dt = duration / samples
    nyquist = 0.5 / dt
    lines = multiplet(state, spec, observe)
    if any(abs(f) > nyquist and a != 0 for f, a in lines):
        warnings.warn(f"spectral lines beyond the Nyquist frequency {nyquist:g} Hz will alias")
    phase = reference_phase(spec, observe) if phase is None else float(phase)
    s = fid(state, spec, observe, np.arange(samples) * dt)
    s[0] *= 0.5
    amps = np.fft.fftshift(np.fft.fft(s)) * dt * np.exp(1j * phase)
    freqs = np.fft.fftshift(np.fft.fftfreq(samples, dt))
    return SpectrumData(freqs, amps, observe, float(duration), int(samples), phase)


def resolved_lines(data: SpectrumData, threshold: float = 0.05) -> list[tuple[float, float]]:
    """Peaks of the absorption (real) spectrum above ``threshold * max``.

    Returns ``(frequency, signed height)`` for every local maximum of
    ``|Re S|``.
    """
    re = data.amplitudes.real
    mag = np.abs(re)
    top = mag.max()
    if top == 0:
        return []
    inner = (mag[1:-1] >= mag[:-2]) & (mag[1:-1] > mag[2:]) & (mag[1:-1] > threshold * top)
    peaks = np.nonzero(inner)[0] + 1
    return [(float(data.frequencies[i]), float(re[i])) for i in peaks]


def spectrum_text(data: SpectrumData) -> str:
    """Two-column text: frequency (Hz) and real amplitude, one row per sample."""
    buf = io.StringIO()
    cols = np.column_stack([data.frequencies, np.round(data.amplitudes.real, 15) + 0.0])
    np.savetxt(buf, cols, fmt=["%.6f", "%.12e"], header="frequency_hz real_amplitude")
    return buf.getvalue()


def metadata_text(data: SpectrumData) -> str:
    return json.dumps(data.metadata(), indent=2, sort_keys=True) + "\n"


def write_spectrum(data: SpectrumData, path: Union[str, Path]) -> list[Path]:
    """Two-column text plus a ``.json`` sidecar with the acquisition metadata."""
    path = Path(path)
    side = path.with_suffix(path.suffix + ".json")
    try:
        path.write_text(spectrum_text(data))
        side.write_text(metadata_text(data))
    except OSError as exc:
        raise OSError(f"cannot write spectrum to {path}: {exc}") from exc
    return [path, side]
