from __future__ import annotations

import numpy as np
import sympy

from tracegrowth import sieve


def test_sieve_matches_sympy():
    flags = sieve.sieve_flags(20000)
    assert list(np.flatnonzero(flags)) == list(sympy.primerange(0, 20000))


def test_segment_boundaries(monkeypatch):
    monkeypatch.setattr(sieve, "SEGMENT", 97)
    a = sieve.sieve_flags(5000, workers=3)
    monkeypatch.setattr(sieve, "SEGMENT", 1 << 20)
    assert np.array_equal(a, sieve.sieve_flags(5000))


def test_bitset_roundtrip(tmp_path):
    flags = sieve.sieve_flags(1003)
    p = tmp_path / "s.bin"
    sieve.write_bitset(p, flags)
    raw = p.read_bytes()
    assert int.from_bytes(raw[:8], "little") == 1003
    assert len(raw) == 8 + (1003 + 7) // 8
    assert raw[8] == 0b10101100  # bits 2, 3, 5, 7 set, little bit order
    assert np.array_equal(sieve.read_bitset(p), flags)


def test_disk_cache_used(tmp_path, monkeypatch):
    monkeypatch.setenv(sieve.CACHE_ENV, str(tmp_path))
    monkeypatch.setattr(sieve, "_memo", {})
    sieve.prime_flags(5000)
    files = list(tmp_path.glob("sieve_*.bin"))
    assert len(files) == 1
    monkeypatch.setattr(sieve, "_memo", {})
    monkeypatch.setattr(sieve, "sieve_flags", lambda n, workers=1: (_ for _ in ()).throw(AssertionError))
    assert list(sieve.primes_upto(30)) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
