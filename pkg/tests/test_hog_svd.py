"""Gradient-histogram shape descriptor and singular-value features."""

from __future__ import annotations

import numpy as np
import pytest

from morphdet.dataset import FACE_HEIGHT, FACE_WIDTH, AlignedFace
from morphdet.features import FeatureError, cell_histograms, extract_hog, extract_svd

from conftest import constant_face, random_face


class TestHog:
    def test_constant_image_gives_zero_descriptor_and_blank_map(self):
        fmap, vec = extract_hog(constant_face(123))
        assert np.all(vec.values == 0.0)
        assert np.all(fmap.values == 0.0)

    def test_cell_grid_is_10_by_12_with_9_bins(self):
        hists = cell_histograms(random_face(1).pixels)
        assert hists.shape == (12, 10, 9)
        assert hists.size == 1080

    def test_final_descriptor_dim(self):
        _, vec = extract_hog(random_face(2))
        assert vec.dim == 11 * 9 * 4 * 9  # sliding 2x2 blocks of 9-bin cells

    def test_vertical_edge_drives_horizontal_gradient_bin(self):
        # Direct gradient oracle: a vertical step at column 90 has gx > 0 and
        # gy == 0 on the edge, so orientation 0 degrees -> bin 0 in the cells
        # straddling the edge (cell columns 4 and 5 of the 18-px grid).
        pixels = np.zeros((FACE_HEIGHT, FACE_WIDTH), dtype=np.uint8)
        pixels[:, 90:] = 255
        hists = cell_histograms(pixels)
        for cy in range(12):
            for cx in (4, 5):
                cell = hists[cy, cx]
                if cell.sum() > 0:
                    assert cell.argmax() == 0
        assert hists[:, (4, 5), :].sum() > 0

    def test_blocks_are_l2_normalised(self):
        _, vec = extract_hog(random_face(3))
        blocks = vec.values.reshape(-1, 36)
        norms = np.linalg.norm(blocks, axis=1)
        assert np.all(norms <= 1.0 + 1e-9)
        assert np.all(norms[norms > 0.5] == pytest.approx(1.0, abs=1e-6))

    def test_map_dimensions_match_face(self):
        fmap, _ = extract_hog(random_face(4))
        assert (fmap.height, fmap.width) == (FACE_HEIGHT, FACE_WIDTH)


class TestSvd:
    def test_rank_one_image_has_single_singular_value(self):
        u = (np.arange(FACE_HEIGHT) % 120 + 2).astype(np.uint8)
        v = (np.arange(FACE_WIDTH) % 2 + 1).astype(np.uint8)
        pixels = np.outer(u, v).astype(np.uint8)
        face = AlignedFace(pixels=pixels)
        fmap, vec = extract_svd(face, k=1)
        sigmas = np.expm1(vec.values)
        assert np.all(sigmas[1:] <= 1e-8 * max(sigmas[0], 1.0))
        assert fmap.values.max() <= 1e-6

    def test_energy_identity(self):
        face = random_face(5)
        _, vec = extract_svd(face, k=10)
        sigmas = np.expm1(vec.values)
        frob = np.sum(face.pixels.astype(np.float64) ** 2)
        assert abs(np.sum(sigmas**2) - frob) <= 1e-6 * frob

    def test_full_rank_residual_is_zero(self):
        face = random_face(6)
        fmap, _ = extract_svd(face, k=FACE_WIDTH)
        assert fmap.values.max() <= 1e-8

    def test_spectrum_dim_is_width(self):
        _, vec = extract_svd(random_face(7))
        assert vec.dim == FACE_WIDTH

    def test_rank_bounds(self):
        with pytest.raises(FeatureError, match="rank"):
            extract_svd(constant_face(), k=0)
        with pytest.raises(FeatureError, match="rank"):
            extract_svd(constant_face(), k=181)

    def test_residual_shrinks_with_rank(self):
        face = random_face(8)
        r5 = extract_svd(face, k=5)[0].values.sum()
        r60 = extract_svd(face, k=60)[0].values.sum()
        r179 = extract_svd(face, k=179)[0].values.sum()
        assert r5 > r60 > r179
