import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qkscreen.dataset import (
    ACTIVE,
    INACTIVE,
    BalancePolicy,
    DatasetError,
    LabeledDataset,
    balance,
    kfold,
    load_csv,
    stratified_split,
)


def make(n_active, n_inactive, n_features=2, seed=0):
    rng = np.random.default_rng(seed)
    n = n_active + n_inactive
    return LabeledDataset(
        ids=tuple(f"r{i}" for i in range(n)),
        features=rng.normal(size=(n, n_features)),
        labels=np.array([ACTIVE] * n_active + [INACTIVE] * n_inactive),
        feature_names=tuple(f"x{j}" for j in range(n_features)),
    )


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoadCsv:
    def test_label_mapping(self, tmp_path):
        p = write(tmp_path, "id,a,b,label\n1,0.1,1,1\n2,0.2,2,1\n3,0.3,3,0\n4,0.4,4,0\n")
        ds = load_csv(p, "label")
        assert len(ds) == 4
        assert ds.labels.tolist() == [1, 1, -1, -1]
        assert ds.feature_names == ("a", "b")
        assert ds.ids == ("1", "2", "3", "4")

    def test_nan_row_dropped_and_reported(self, tmp_path):
        p = write(tmp_path, "id,a,label\n1,0.1,1\n2,NaN,1\n3,0.3,0\n4,0.4,0\n")
        ds = load_csv(p, "label")
        assert len(ds) == 3
        assert ds.n_dropped == 1
        assert ds.rejects[0].record_id == "2"

    def test_single_class(self, tmp_path):
        p = write(tmp_path, "id,a,label\n1,0.1,1\n2,0.2,1\n")
        with pytest.raises(DatasetError, match="single-class"):
            load_csv(p, "label")

    def test_missing_file_and_column(self, tmp_path):
        with pytest.raises(DatasetError, match="missing file"):
            load_csv(tmp_path / "nope.csv", "label")
        p = write(tmp_path, "id,a,label\n1,0.1,1\n2,0.2,0\n")
        with pytest.raises(DatasetError, match="missing column"):
            load_csv(p, "activity")
        with pytest.raises(DatasetError, match="missing column: zz"):
            load_csv(p, "label", feature_columns=["zz"])

    def test_custom_label_map_and_smiles(self, tmp_path):
        p = write(tmp_path, "id,smiles,act\nm1,CCO,yes\nm2,c1ccccc1,no\nm3,C1CC,no\nm4,CC,no\n")
        ds = load_csv(p, "act", label_map={"yes": 1, "no": -1}, smiles_column="smiles")
        assert len(ds) == 3 and ds.n_dropped == 1
        assert "mol_wt" in ds.feature_names
        assert ds.features[0, ds.feature_names.index("mol_wt")] == pytest.approx(46.069, abs=1e-3)

    def test_arrays_read_only(self, tmp_path):
        ds = make(3, 3)
        with pytest.raises(ValueError):
            ds.features[0, 0] = 1.0


class TestBalance:
    def test_one_to_one(self):
        out = balance(make(100, 5000), BalancePolicy(seed=1))
        assert out.n_active == 100 and out.n_inactive == 100

    def test_padding_one_to_six(self):
        out = balance(make(17, 5000), BalancePolicy(seed=1))
        assert out.n_active == 17 and out.n_inactive == 102

    def test_padding_caps_at_available(self):
        out = balance(make(10, 40), BalancePolicy(seed=1))
        assert out.n_active == 10 and out.n_inactive == 40

    def test_deterministic(self):
        ds = make(40, 300)
        a = balance(ds, BalancePolicy(seed=5))
        b = balance(ds, BalancePolicy(seed=5))
        assert a.ids == b.ids

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 60), st.integers(1, 400), st.integers(0, 10_000))
    def test_actives_never_removed(self, na, ni, seed):
        ds = make(na, ni)
        out = balance(ds, BalancePolicy(seed=seed))
        active_ids = {i for i, lab in zip(ds.ids, ds.labels) if lab == ACTIVE}
        assert active_ids <= set(out.ids)
        if na >= 30 and ni >= na:
            assert out.n_inactive == na


class TestSplits:
    def test_stratified_counts(self):
        train, test = stratified_split(make(10, 10), 0.8, seed=7)
        assert (train.n_active, train.n_inactive, test.n_active, test.n_inactive) == (8, 8, 2, 2)
        again = stratified_split(make(10, 10), 0.8, seed=7)
        assert again[0].ids == train.ids and again[1].ids == test.ids

    def test_half(self):
        train, test = stratified_split(make(4, 4), 0.5, seed=0)
        assert (train.n_active, train.n_inactive, test.n_active, test.n_inactive) == (2, 2, 2, 2)

    def test_disjoint(self):
        train, test = stratified_split(make(13, 29), 0.8, seed=3)
        assert not set(train.ids) & set(test.ids)
        assert len(train) + len(test) == 42

    def test_class_too_small(self):
        with pytest.raises(DatasetError):
            stratified_split(make(1, 5), 0.8)

    def test_kfold_shape(self):
        folds = kfold(make(10, 10), 10, seed=0)
        assert len(folds) == 10
        labels = make(10, 10).labels
        for _, val in folds:
            assert sorted(labels[val].tolist()) == [-1, 1]

    def test_kfold_too_many(self):
        with pytest.raises(DatasetError):
            kfold(make(2, 2), 3)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 30), st.integers(2, 30), st.integers(2, 5), st.integers(0, 999))
    def test_kfold_partition(self, na, ni, k, seed):
        if k > min(na, ni):
            return
        ds = make(na, ni)
        folds = kfold(ds, k, seed)
        vals = np.concatenate([v for _, v in folds])
        assert sorted(vals.tolist()) == list(range(len(ds)))
        for tr, va in folds:
            assert not set(tr) & set(va)
        for cls in (ACTIVE, INACTIVE):
            sizes = [int((ds.labels[v] == cls).sum()) for _, v in folds]
            assert max(sizes) - min(sizes) <= 1
        assert [v.tolist() for _, v in kfold(ds, k, seed)] == [v.tolist() for _, v in folds]
