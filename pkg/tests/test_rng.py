import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hirschlab import rng
from oracles import philox_reference

# Known-answer vectors of Philox4x32-10 (Random123 distribution).
KAT = [
    ((0, 0, 0, 0), (0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
    ((0xFFFFFFFF,) * 4, (0xFFFFFFFF, 0xFFFFFFFF), (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD)),
    ((0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344), (0xA4093822, 0x299F31D0),
     (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1)),
]


@pytest.mark.parametrize("ctr,key,expected", KAT)
def test_philox_known_answers(ctr, key, expected):
    assert tuple(int(x) for x in rng.philox4x32(*[np.uint64(c) for c in ctr],
                                                *[np.uint64(k) for k in key])) == expected
    out = rng.philox4x32_np(*[np.array([c], dtype=np.uint64) for c in ctr], *key)
    assert tuple(int(x[0]) for x in out) == expected
    assert tuple(philox_reference(ctr, key)) == expected


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 64 - 1), st.integers(0, 2), st.integers(0, 2 ** 32 - 1),
       st.integers(0, 2 ** 40))
def test_scalar_and_vector_generators_agree(seed, stream, path, step):
    a = rng.normals2_uniforms2(np.uint64(seed), stream, np.uint64(path), np.uint64(step))
    b = rng.normals2_uniforms2_np(seed, stream, np.array([path], dtype=np.uint64), step)
    np.testing.assert_allclose(a, [x[0] for x in b], rtol=1e-14, atol=1e-15)


def test_uniforms_are_uniform():
    u = rng.uniforms(7, rng.STREAM_SAMPLE, 200_000)
    assert 0 < u.min() and u.max() < 1
    hist = np.histogram(u, bins=20, range=(0, 1))[0]
    expected = u.size / 20
    chi2 = ((hist - expected) ** 2 / expected).sum()
    assert chi2 < 43.8  # 0.999 quantile of chi-square with 19 dof


def test_streams_are_distinct():
    a = rng.uniforms(1, rng.STREAM_WALK, 1000)
    b = rng.uniforms(1, rng.STREAM_SAMPLE, 1000)
    assert not np.any(a == b)
