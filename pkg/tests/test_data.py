"""Dataset container, file formats, splits, and synthetic generation."""

import numpy as np
import pytest

from deepdict.data import (
    LabeledMatrix,
    SplitSpec,
    load_labeled_matrix,
    make_synthetic_clusters,
    save_labeled_matrix,
    split_indices,
    split_per_class,
    take_columns,
)


def _toy(labels=(5, 5, 9, 9, 9, 2)):
    rng = np.random.default_rng(0)
    feats = rng.normal(size=(4, len(labels)))
    return LabeledMatrix.from_arrays(feats, np.array(labels))


class TestLabeledMatrix:
    def test_labels_remapped_to_contiguous_ids(self):
        data = _toy()
        assert data.num_classes == 3
        assert sorted(set(data.labels.tolist())) == [0, 1, 2]
        # remap follows sorted original values: 2 -> 0, 5 -> 1, 9 -> 2
        assert data.labels.tolist() == [1, 1, 2, 2, 2, 0]
        assert data.original_labels.tolist() == [5, 5, 9, 9, 9, 2]

    def test_class_index_partitions_columns(self):
        data = _toy()
        seen = np.concatenate([idx for idx in data.class_index])
        assert sorted(seen.tolist()) == list(range(data.num_samples))
        for c, idx in enumerate(data.class_index):
            assert (data.labels[idx] == c).all()

    def test_arrays_are_read_only(self):
        data = _toy()
        with pytest.raises(ValueError):
            data.features[0, 0] = 1.0
        with pytest.raises(ValueError):
            data.labels[0] = 1

    def test_rejects_float_labels(self):
        with pytest.raises(ValueError, match="integers"):
            LabeledMatrix.from_arrays(np.zeros((2, 3)), np.array([0.0, 1.0, 2.0]))

    def test_rejects_non_finite_features(self):
        feats = np.zeros((2, 3))
        feats[1, 2] = np.nan
        with pytest.raises(ValueError, match="finite"):
            LabeledMatrix.from_arrays(feats, np.array([0, 1, 2]))

    def test_rejects_label_count_mismatch(self):
        with pytest.raises(ValueError):
            LabeledMatrix.from_arrays(np.zeros((2, 3)), np.array([0, 1]))

    def test_class_counts(self):
        data = _toy()
        assert data.class_counts() == (1, 2, 3)


class TestSplits:
    def test_split_sizes_and_disjointness(self):
        data = make_synthetic_clusters(3, 10, 5, 4.0, seed=1)
        spec = SplitSpec(per_class_train_count=6, seed=3, replicate_index=2)
        train_idx, test_idx = split_indices(data, spec)
        assert train_idx.size == 18 and test_idx.size == 12
        assert np.intersect1d(train_idx, test_idx).size == 0
        union = np.union1d(train_idx, test_idx)
        assert union.tolist() == list(range(30))

    def test_partition_holds_across_many_seeds(self):
        data = make_synthetic_clusters(4, 7, 3, 3.0, seed=0)
        spec0 = SplitSpec(3)
        for seed in range(100):
            spec = SplitSpec(3, seed=seed, replicate_index=seed % 5)
            train_idx, test_idx = split_indices(data, spec)
            union = np.union1d(train_idx, test_idx)
            assert union.size == 28 and union[0] == 0 and union[-1] == 27
        del spec0

    def test_split_is_deterministic_and_replicate_sensitive(self):
        data = make_synthetic_clusters(3, 8, 4, 3.0, seed=2)
        a1, _ = split_indices(data, SplitSpec(4, seed=9, replicate_index=1))
        a2, _ = split_indices(data, SplitSpec(4, seed=9, replicate_index=1))
        b, _ = split_indices(data, SplitSpec(4, seed=9, replicate_index=2))
        assert np.array_equal(a1, a2)
        assert not np.array_equal(a1, b)

    def test_train_preserves_per_class_count_and_class_blocks(self):
        data = make_synthetic_clusters(3, 10, 5, 4.0, seed=5)
        train, test = split_per_class(data, SplitSpec(7, seed=1, replicate_index=1))
        assert train.class_counts() == (7, 7, 7)
        assert test.class_counts() == (3, 3, 3)
        # class blocks stay contiguous after the split
        assert np.array_equal(train.labels, np.sort(train.labels))

    def test_split_requires_a_test_remainder(self):
        data = make_synthetic_clusters(2, 5, 3, 3.0, seed=0)
        with pytest.raises(ValueError, match="cannot reserve"):
            split_indices(data, SplitSpec(5))

    def test_take_columns_keeps_features_and_labels_aligned(self):
        data = _toy()
        sub = take_columns(data, np.array([2, 3, 5]))
        assert sub.original_labels.tolist() == [9, 9, 2]
        assert np.allclose(sub.features, data.features[:, [2, 3, 5]])

    def test_invalid_spec_values_rejected(self):
        with pytest.raises(ValueError):
            SplitSpec(0)
        with pytest.raises(ValueError):
            SplitSpec(3, seed=-1)


class TestSyntheticClusters:
    def test_shapes_and_contiguous_labels(self):
        data = make_synthetic_clusters(4, 6, 9, 5.0, seed=3)
        assert data.features.shape == (9, 24)
        assert data.labels.tolist() == sum([[c] * 6 for c in range(4)], [])

    def test_minimum_center_distance_matches_request(self):
        data = make_synthetic_clusters(5, 50, 8, 7.5, seed=4)
        centers = np.stack(
            [data.features[:, idx].mean(axis=1) for idx in data.class_index]
        )
        dists = [
            np.linalg.norm(centers[i] - centers[j])
            for i in range(5)
            for j in range(i + 1, 5)
        ]
        # sample means sit near the true centers, whose min distance is 7.5
        assert abs(min(dists) - 7.5) < 1.0

    def test_zero_separation_allowed(self):
        data = make_synthetic_clusters(3, 4, 5, 0.0, seed=0)
        assert data.num_samples == 12

    def test_single_class(self):
        data = make_synthetic_clusters(1, 5, 3, 2.0, seed=0)
        assert data.num_classes == 1

    def test_deterministic_per_seed(self):
        a = make_synthetic_clusters(2, 5, 4, 3.0, seed=11)
        b = make_synthetic_clusters(2, 5, 4, 3.0, seed=11)
        c = make_synthetic_clusters(2, 5, 4, 3.0, seed=12)
        assert np.array_equal(a.features, b.features)
        assert not np.array_equal(a.features, c.features)


class TestFileFormats:
    def test_dense_round_trip_is_bit_exact(self, tmp_path):
        data = make_synthetic_clusters(3, 4, 5, 3.0, seed=7)
        path = tmp_path / "d.csv"
        save_labeled_matrix(data, str(path))
        back = load_labeled_matrix(str(path))
        assert np.array_equal(back.features, data.features)
        assert back.original_labels.tolist() == data.original_labels.tolist()

    def test_pair_round_trip_is_bit_exact(self, tmp_path):
        data = _toy()
        mat, lab = tmp_path / "x.txt", tmp_path / "y.txt"
        save_labeled_matrix(data, str(mat), format="pair", labels_path=str(lab))
        back = load_labeled_matrix(str(mat), format="pair", labels_path=str(lab))
        assert np.array_equal(back.features, data.features)
        assert back.original_labels.tolist() == data.original_labels.tolist()

    def test_normalize_gives_unit_columns(self, tmp_path):
        data = _toy()
        path = tmp_path / "d.csv"
        save_labeled_matrix(data, str(path))
        back = load_labeled_matrix(str(path), normalize=True)
        norms = np.linalg.norm(back.features, axis=0)
        assert np.allclose(norms, 1.0)

    def test_zero_column_cannot_be_normalized(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("0.0,0.0,1\n1.0,2.0,2\n")
        with pytest.raises(ValueError, match="zero"):
            load_labeled_matrix(str(path), normalize=True)

    def test_bad_number_reports_position(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1.0,oops,1\n")
        with pytest.raises(ValueError, match="not a number"):
            load_labeled_matrix(str(path))

    def test_non_integer_label_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1.0,2.0,1.5\n")
        with pytest.raises(ValueError, match="not an integer"):
            load_labeled_matrix(str(path))

    def test_ragged_rows_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1.0,2.0,1\n1.0,2\n")
        with pytest.raises(ValueError, match="expected"):
            load_labeled_matrix(str(path))

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("\n")
        with pytest.raises(ValueError, match="no samples"):
            load_labeled_matrix(str(path))

    def test_pair_label_count_mismatch(self, tmp_path):
        mat, lab = tmp_path / "x.txt", tmp_path / "y.txt"
        mat.write_text("1.0 2.0 3.0\n4.0 5.0 6.0\n")
        lab.write_text("0\n1\n")
        with pytest.raises(ValueError, match="labels for"):
            load_labeled_matrix(str(mat), format="pair", labels_path=str(lab))

    def test_unknown_format_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1.0,1\n")
        with pytest.raises(ValueError, match="unknown format"):
            load_labeled_matrix(str(path), format="fancy")
