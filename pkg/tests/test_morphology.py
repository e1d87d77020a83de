from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from skimage.morphology import thin

from vasqforge.morphology import branch_points, components, distance_transform, skeletonize


def bfs_components(a):
    h, w = a.shape
    seen = np.zeros_like(a)
    count = 0
    for y in range(h):
        for x in range(w):
            if a[y, x] and not seen[y, x]:
                count += 1
                q = deque([(y, x)])
                seen[y, x] = True
                while q:
                    cy, cx = q.popleft()
                    for dy in (-1, 0, 1):
                        for dx in (-1, 0, 1):
                            ny, nx = cy + dy, cx + dx
                            if 0 <= ny < h and 0 <= nx < w and a[ny, nx] and not seen[ny, nx]:
                                seen[ny, nx] = True
                                q.append((ny, nx))
    return count


def brute_edt(a):
    h, w = a.shape
    bg = [(y, x) for y in range(-1, h + 1) for x in range(-1, w + 1)
          if not (0 <= y < h and 0 <= x < w) or not a[y, x]]
    bg = np.array(bg)
    out = np.zeros((h, w))
    for y, x in zip(*np.nonzero(a)):
        out[y, x] = np.sqrt(np.min((bg[:, 0] - y) ** 2 + (bg[:, 1] - x) ** 2))
    return out


def test_thin_line_unchanged():
    a = np.zeros((9, 20), bool)
    a[4, 2:18] = True
    assert np.array_equal(skeletonize(a).pixels, a)


def test_empty():
    a = np.zeros((7, 7), bool)
    assert skeletonize(a).count() == 0
    assert np.all(distance_transform(a) == 0)
    assert components(a)[0] == 0


def test_filled_square():
    a = np.zeros((11, 11), bool)
    a[1:10, 1:10] = True
    s = skeletonize(a).pixels
    assert 0 < s.sum() < 81 and not np.any(s & ~a) and components(s)[0] == 1


def test_two_by_two_block_survives():
    a = np.zeros((6, 6), bool)
    a[2:4, 2:4] = True
    assert skeletonize(a).count() == 1


def test_edt_examples():
    a = np.zeros((5, 5), bool)
    a[2, 2] = True
    assert distance_transform(a)[2, 2] == 1.0
    b = np.zeros((7, 7), bool)
    b[1:6, 1:6] = True
    assert distance_transform(b)[3, 3] == 3.0
    assert np.array_equal(distance_transform(b), brute_edt(b))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 24), st.integers(1, 24), st.floats(0.05, 0.95), st.integers(0, 2**32 - 1))
def test_edt_exact(h, w, p, seed):
    a = np.random.default_rng(seed).random((h, w)) < p
    d = distance_transform(a)
    assert np.array_equal(d, brute_edt(a))
    assert np.all((d == 0) == ~a) and np.all(d[a] >= 1)
    # 1-Lipschitz across 4-neighbours
    assert np.all(np.abs(np.diff(d, axis=0)) <= 1 + 1e-12)
    assert np.all(np.abs(np.diff(d, axis=1)) <= 1 + 1e-12)


def test_branch_point_examples():
    line = np.zeros((11, 11), bool)
    line[5, 1:10] = True
    assert branch_points(line) == []
    tee = line.copy()
    tee[6:10, 5] = True
    assert branch_points(tee) == [(5, 5)]
    plus = tee.copy()
    plus[1:5, 5] = True
    assert branch_points(plus) == [(5, 5)]


def test_components_examples():
    a = np.zeros((8, 8), bool)
    a[0, 0] = a[5, 5] = True
    assert components(a)[0] == 2
    b = np.zeros((8, 8), bool)
    b[0, 0] = b[1, 1] = True
    assert components(b)[0] == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 30), st.integers(3, 30), st.floats(0.1, 0.9), st.integers(0, 2**32 - 1))
def test_skeleton_properties(h, w, p, seed):
    a = np.random.default_rng(seed).random((h, w)) < p
    s = skeletonize(a).pixels
    assert not np.any(s & ~a)
    assert np.array_equal(skeletonize(s).pixels, s)
    assert components(s)[0] == components(a)[0] == bfs_components(a)
    # agrees with an independent Guo-Hall implementation
    assert np.array_equal(s, thin(a))
