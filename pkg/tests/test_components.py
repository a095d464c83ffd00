import numpy as np
import pytest

from oracles import flood_fill_partition, random_mask_corpus
from sandbank.components import (Component, Connectivity, component_mask, filter_by_area,
                                 label_components, padded_bbox)
from sandbank.errors import ConfigurationError


def partition(table):
    return {frozenset(map(tuple, c.pixels.tolist())) for c in table}


def table_with_areas(areas):
    m = np.zeros((60, 2000), bool)
    col = 0
    for a in areas:
        m[0, col:col + a] = True
        col += a + 2
    return label_components(m)


class TestLabel:
    def test_empty(self):
        assert len(label_components(np.zeros((5, 5), bool))) == 0

    def test_diagonal_pair(self):
        m = np.array([[1, 0], [0, 1]], bool)
        assert len(label_components(m, Connectivity.FOUR)) == 2
        assert len(label_components(m, Connectivity.EIGHT)) == 1

    def test_random_50x50_matches_flood_fill(self):
        m = np.random.default_rng(2024).random((50, 50)) < 0.4
        for conn, expected in (("four", 293), ("eight", 59)):
            table = label_components(m, conn)
            # counts frozen from oracles.flood_fill_partition
            assert len(table) == expected
            assert partition(table) == flood_fill_partition(m, conn)

    def test_raster_order_labels(self):
        m = np.zeros((6, 6), bool)
        m[4, 0] = True      # starts later in raster order
        m[0, 5] = True
        m[1:3, 1] = True
        table = label_components(m)
        firsts = [tuple(c.pixels[0]) for c in table]
        assert firsts == sorted(firsts)
        assert table.labels == [1, 2, 3]

    def test_geometry(self):
        m = np.zeros((8, 8), bool)
        m[2:5, 3:7] = True
        (c,) = label_components(m)
        assert c.area_px == 12
        assert c.bbox == (2, 3, 4, 6)

    def test_partition_and_oracle_on_corpus(self):
        for m in random_mask_corpus(30, 40, seed=3):
            for conn in Connectivity:
                table = label_components(m, conn)
                assert sum(table.areas) == m.sum()
                assert partition(table) == flood_fill_partition(m, conn.value)

    def test_deterministic(self):
        m = np.random.default_rng(5).random((40, 40)) < 0.5
        a, b = label_components(m), label_components(m)
        assert (a.label_image() == b.label_image()).all()


class TestFilter:
    def test_keeps_large(self):
        t = filter_by_area(table_with_areas([3, 500, 1200]), 500)
        assert t.areas == [500, 1200]
        assert t.labels == [1, 2]

    def test_min_one_is_identity(self):
        t = table_with_areas([3, 5, 7])
        assert filter_by_area(t, 1).areas == t.areas

    def test_all_below(self):
        assert len(filter_by_area(table_with_areas([3, 5]), 10)) == 0

    def test_invalid(self):
        with pytest.raises(ConfigurationError):
            filter_by_area(table_with_areas([3]), 0)


class TestPaddedBBox:
    def comp(self, pixels):
        return Component(1, np.array(pixels))

    def test_padding(self):
        c = self.comp([(10, 10), (12, 12)])
        assert padded_bbox(c, 5, (100, 100)) == (5, 5, 17, 17)

    def test_clamped(self):
        c = self.comp([(0, 0), (1, 2)])
        assert padded_bbox(c, 5, (100, 100)) == (0, 0, 6, 7)
        assert padded_bbox(self.comp([(98, 99)]), 5, (100, 100)) == (93, 94, 99, 99)

    def test_zero(self):
        c = self.comp([(3, 4), (7, 5)])
        assert padded_bbox(c, 0, (10, 10)) == c.bbox


class TestComponentMask:
    def test_reconstructs_source(self):
        m = np.random.default_rng(9).random((20, 20)) < 0.3
        t = label_components(m)
        assert (component_mask(t) == m).all()
        assert (component_mask(t, t.labels) == m).all()

    def test_empty_selection(self):
        t = label_components(np.eye(4, dtype=bool))
        assert not component_mask(t, []).any()

    def test_single_label(self):
        m = np.zeros((5, 5), bool)
        m[0, 0] = m[4, 4] = True
        t = label_components(m)
        assert np.argwhere(component_mask(t, [2])).tolist() == [[4, 4]]

    def test_unknown_label(self):
        t = label_components(np.eye(3, dtype=bool))
        with pytest.raises(KeyError):
            component_mask(t, [7])
