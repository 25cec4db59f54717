"""Writes the small bundled source corpus (48 kHz, 16-bit mono, 4 s each).

Broadband clips pass the dataset bandwidth filter; `tone_200hz.wav` and
`rumble.wav` are low-passed on purpose and get rejected by it.

    python3 scripts/make_corpus.py data/corpus
"""

import sys
from pathlib import Path

import numpy as np
from scipy import signal
from scipy.io import wavfile

FS = 48_000
SECONDS = 4.0


def normalize(x):
    return 0.5 * x / np.max(np.abs(x))


def pink(rng, n):
    spec = np.fft.rfft(rng.standard_normal(n))
    f = np.arange(spec.size)
    f[0] = 1
    return np.fft.irfft(spec / np.sqrt(f), n)


def clips(rng):
    n = int(FS * SECONDS)
    t = np.arange(n) / FS
    white = rng.standard_normal(n)
    yield "white.wav", white
    yield "pink.wav", pink(rng, n)
    claps = np.zeros(n)
    for start in range(0, n, FS // 4):
        k = np.arange(min(2400, n - start))
        claps[start : start + k.size] = rng.standard_normal(k.size) * np.exp(-k / 300.0)
    yield "claps.wav", claps
    envelope = 0.6 + 0.4 * np.sin(2 * np.pi * 3.0 * t)
    yield "am_noise.wav", envelope * rng.standard_normal(n)
    bursts = (np.sin(2 * np.pi * 1.5 * t) > -0.3).astype(float)
    harmonics = sum(np.sin(2 * np.pi * 140.0 * k * t) / k for k in range(1, 40))
    yield "voiced.wav", bursts * (harmonics + 0.3 * rng.standard_normal(n))
    yield "tone_200hz.wav", np.sin(2 * np.pi * 200.0 * t)
    sos = signal.butter(8, 300.0, fs=FS, output="sos")
    yield "rumble.wav", signal.sosfilt(sos, rng.standard_normal(n))


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "data/corpus")
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20240601)
    for name, x in clips(rng):
        wavfile.write(out / name, FS, np.round(normalize(x) * 32767).astype(np.int16))


if __name__ == "__main__":
    main()
