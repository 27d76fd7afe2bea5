"""Segmented prime sieve with an on-disk bitset cache.

Cache file format: 8-byte little-endian unsigned length n, followed by the
bitset of ceil(n/8) bytes in little bit order; bit i is set iff i is prime,
for 0 <= i < n.  The cache directory comes from ``TRACEGROWTH_SIEVE_CACHE``.
"""
from __future__ import annotations

import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

CACHE_ENV = "TRACEGROWTH_SIEVE_CACHE"
SEGMENT = 1 << 20


def _small_primes(limit: int) -> np.ndarray:
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return np.flatnonzero(flags)


def _segment(lo: int, hi: int, base: np.ndarray) -> np.ndarray:
    seg = np.ones(hi - lo, dtype=bool)
    for p in base:
        p = int(p)
        if p * p >= hi:
            break
        start = max(p * p, (lo + p - 1) // p * p)
        seg[start - lo :: p] = False
    if lo < 2:
        seg[: 2 - lo] = False
    return seg


def sieve_flags(n: int, workers: int = 1) -> np.ndarray:
    """Boolean array ``flags`` of length n with flags[i] True iff i is prime."""
    if n <= 0:
        return np.zeros(0, dtype=bool)
    base = _small_primes(math.isqrt(n) + 1)
    bounds = [(lo, min(lo + SEGMENT, n)) for lo in range(0, n, SEGMENT)]
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda b: _segment(b[0], b[1], base), bounds))
    else:
        parts = [_segment(lo, hi, base) for lo, hi in bounds]
    return np.concatenate(parts)


def write_bitset(path: Path, flags: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(flags)))
        fh.write(np.packbits(flags, bitorder="little").tobytes())


def read_bitset(path: Path) -> np.ndarray:
    data = Path(path).read_bytes()
    (n,) = struct.unpack("<Q", data[:8])
    bits = np.unpackbits(np.frombuffer(data[8:], dtype=np.uint8), bitorder="little")
    if len(bits) < n:
        raise ValueError(f"truncated sieve cache {path}")
    return bits[:n].astype(bool)


def cache_dir() -> Path | None:
    d = os.environ.get(CACHE_ENV)
    return Path(d) if d else None


_memo: dict[int, np.ndarray] = {}


def prime_flags(n: int) -> np.ndarray:
    """Primality flags for [0, n), memoized in-process and cached on disk if configured."""
    for size, flags in _memo.items():
        if size >= n:
            return flags[:n]
    d = cache_dir()
    if d is not None:
        d.mkdir(parents=True, exist_ok=True)
        for f in sorted(d.glob("sieve_*.bin")):
            try:
                size = int(f.stem.split("_")[1])
            except (IndexError, ValueError):
                continue
            if size >= n:
                flags = read_bitset(f)
                _memo[size] = flags
                return flags[:n]
    flags = sieve_flags(n)
    _memo[n] = flags
    if d is not None:
        write_bitset(d / f"sieve_{n}.bin", flags)
    return flags


def primes_upto(x: int) -> np.ndarray:
    """Primes p <= x as int64."""
    return np.flatnonzero(prime_flags(int(x) + 1)).astype(np.int64)
