"""Tests for pseudo-labels, prototypes, refinement and the trustworthy split."""

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfda_lab.config.models import LabConfig, ModelConfig, PretrainConfig
from sfda_lab.curriculum import (
    PrototypeSet,
    PseudoLabelSet,
    compute_prototypes,
    curriculum_labels,
    pseudo_label,
    refine_labels,
    save_split_dump,
    split_trustworthy,
    unfiltered_split,
)
from sfda_lab.curriculum.prototypes import prototypes_from
from sfda_lab.curriculum.split import SPLIT_COLUMNS
from sfda_lab.data import Dataset, pretrain
from sfda_lab.errors import ConfigurationError, UsageError
from sfda_lab.experiments.runner import build_benchmark, pretrain_pair, with_seed
from sfda_lab.model import forward, init_params
from sfda_lab.numerics import RandomSource, cosine_distance, one_hot, softmax
from tests.helpers import zero_params

seeds = st.integers(0, 2**32 - 1)
thresholds = st.floats(1e-9, 1.0)


def proto_set(prototypes, degenerate=None) -> PrototypeSet:
    protos = np.asarray(prototypes, dtype=np.float64)
    flags = np.zeros(len(protos), dtype=bool) if degenerate is None else np.asarray(degenerate)
    return PrototypeSet(protos, np.ones(len(protos)), flags)


def labelled(hard, refined, entropy_norm) -> PseudoLabelSet:
    """A pseudo-label set with one-hot soft outputs and the given entropies."""
    hard = np.asarray(hard)
    k = int(hard.max()) + 1
    return PseudoLabelSet(
        soft=one_hot(hard, k),
        hard=hard,
        entropy_norm=np.asarray(entropy_norm, dtype=np.float64),
        features=np.ones((len(hard), 2)),
        refined=np.asarray(refined),
    )


def random_labels(seed: int, n: int, k: int = 3) -> PseudoLabelSet:
    """Random soft outputs, entropies and refined labels that agree about 70% of the time."""
    rng = RandomSource(seed)
    soft = softmax(2.0 * rng.normal((n, k)))
    hard = soft.argmax(axis=1)
    flip = rng.uniform(n) < 0.3
    return PseudoLabelSet(
        soft=soft,
        hard=hard,
        entropy_norm=rng.uniform(n),
        features=rng.normal((n, 2)),
        refined=np.where(flip, rng.integers(k, n), hard),
    )


class _Inputs:
    def __init__(self, inputs):
        self.inputs = inputs


class TestPseudoLabels:
    """Test pseudo-labelling."""

    def test_zero_model(self):
        """Test a zero model gives uniform soft labels and class 0."""
        pl = pseudo_label(zero_params([4, 5, 3]), _Inputs(np.ones((6, 4))))
        np.testing.assert_allclose(pl.soft, 1 / 3)
        np.testing.assert_allclose(pl.entropy_norm, 1.0)
        np.testing.assert_array_equal(pl.hard, 0)
        assert pl.refined is None

    def test_accurate_model_has_little_noise(self):
        """Test an accurate model's pseudo-labels are nearly clean."""
        rng = RandomSource(0)
        labels = rng.integers(2, 300)
        inputs = np.array([[-3.0, 0.0], [3.0, 0.0]])[labels] + 0.3 * rng.normal((300, 2))
        data = Dataset(inputs, labels, "target", 2)
        model = pretrain(
            data,
            ModelConfig(hidden_dims=[8], feature_dim=4),
            PretrainConfig(epochs=20, batch_size=16),
            RandomSource(1),
        )
        pl = pseudo_label(model, data.unlabeled())
        assert data.oracle().noise_rate(pl.hard) <= 0.01

    def test_arrays_are_frozen(self, small_params, rng):
        """Test pseudo-label arrays cannot be modified."""
        pl = pseudo_label(small_params, _Inputs(rng.normal((4, 5))))
        with pytest.raises(ValueError):
            pl.hard[0] = 2

    def test_consistent_requires_refinement(self, small_params, rng):
        """Test the agreement mask needs refined labels."""
        pl = pseudo_label(small_params, _Inputs(rng.normal((4, 5))))
        with pytest.raises(UsageError):
            pl.consistent()

    def test_input_shape_mismatch(self, small_params):
        """Test inputs of the wrong width."""
        with pytest.raises(UsageError):
            pseudo_label(small_params, _Inputs(np.zeros((3, 2))))


class TestPrototypes:
    """Test soft-weighted class prototypes."""

    def test_single_sample(self, small_params, rng):
        """Test one sample makes every prototype equal its feature."""
        x = rng.normal((1, 5))
        protos = compute_prototypes(small_params, _Inputs(x))
        features = forward(small_params, x).features
        np.testing.assert_allclose(protos.prototypes, np.repeat(features, 3, axis=0))

    def test_uniform_weights_give_feature_mean(self, rng):
        """Test uniform soft labels give the unweighted mean for every class."""
        features = rng.normal((10, 4))
        protos = prototypes_from(np.full((10, 3), 1 / 3), features)
        for k in range(3):
            np.testing.assert_allclose(protos.prototypes[k], features.mean(axis=0))

    @settings(max_examples=100)
    @given(seeds)
    def test_matches_brute_force(self, seed):
        """Test against a direct double loop over samples and classes."""
        rng = RandomSource(seed)
        model = init_params([5, 7, 4, 3], rng.child(0))
        x = rng.child(1).normal((32, 5))
        record = forward(model, x)
        protos = compute_prototypes(model, _Inputs(x))

        for k in range(3):
            num = np.zeros(4)
            den = 0.0
            for i in range(32):
                num += record.probs[i, k] * record.features[i]
                den += record.probs[i, k]
            np.testing.assert_allclose(protos.prototypes[k], num / den, atol=1e-10)

    def test_degenerate_class(self, rng):
        """Test a class with no soft mass is flagged and zeroed."""
        soft = np.tile([0.5, 0.5, 0.0], (6, 1))
        protos = prototypes_from(soft, rng.normal((6, 3)))
        np.testing.assert_array_equal(protos.degenerate, [False, False, True])
        np.testing.assert_array_equal(protos.prototypes[2], 0.0)
        assert protos.num_degenerate == 1

    def test_empty_input(self):
        """Test prototypes of zero samples."""
        with pytest.raises(UsageError):
            prototypes_from(np.zeros((0, 3)), np.zeros((0, 2)))


class TestRefinement:
    """Test nearest-prototype refinement."""

    def test_feature_on_prototype(self):
        """Test a feature equal to a prototype is assigned to it."""
        refined = refine_labels(np.array([[0.0, 0.0, 1.0]]), proto_set(np.eye(3)))
        assert refined.tolist() == [2]

    def test_tie_goes_to_lowest_index(self):
        """Test equidistant prototypes resolve to the lowest class."""
        protos = proto_set([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
        refined = refine_labels(np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]), protos)
        assert refined.tolist() == [0, 0]

    def test_matches_brute_force(self, rng):
        """Test against an exhaustive search over cosine distances."""
        features = rng.normal((32, 4))
        centers = rng.normal((3, 4))
        refined = refine_labels(features, proto_set(centers))
        for i in range(32):
            dists = [cosine_distance(features[i], c) for c in centers]
            assert refined[i] == int(np.argmin(dists))

    @settings(max_examples=100)
    @given(seeds, st.integers(-8, 8), st.integers(-8, 8))
    def test_scale_invariant(self, seed, feature_exp, center_exp):
        """Test rescaling features or prototypes by a power of two changes nothing."""
        rng = RandomSource(seed)
        features = rng.normal((20, 4))
        centers = rng.normal((3, 4))
        a, b = 2.0**feature_exp, 2.0**center_exp
        base = refine_labels(features, proto_set(centers))
        np.testing.assert_array_equal(refine_labels(a * features, proto_set(centers)), base)
        np.testing.assert_array_equal(refine_labels(features, proto_set(b * centers)), base)

    def test_degenerate_prototypes_are_skipped(self):
        """Test a degenerate prototype is never chosen."""
        protos = proto_set([[1.0, 0.0], [0.0, 1.0]], degenerate=[True, False])
        refined = refine_labels(np.array([[1.0, 0.01]]), protos)
        assert refined.tolist() == [1]

    def test_zero_feature_is_unrefined(self):
        """Test a zero-norm feature gets -1."""
        refined = refine_labels(np.array([[0.0, 0.0], [1.0, 0.0]]), proto_set(np.eye(2)))
        assert refined.tolist() == [-1, 0]

    def test_all_degenerate(self):
        """Test refinement is impossible without a usable prototype."""
        with pytest.raises(ConfigurationError):
            refine_labels(np.ones((2, 2)), proto_set(np.eye(2), degenerate=[True, True]))

    def test_dimension_mismatch(self):
        """Test features and prototypes must share a dimension."""
        with pytest.raises(UsageError):
            refine_labels(np.ones((2, 3)), proto_set(np.eye(2)))

    def test_curriculum_labels_fill_refined(self, small_params, rng):
        """Test the combined pass refines every sample."""
        pl, protos = curriculum_labels(small_params, _Inputs(rng.normal((16, 5))))
        assert pl.refined is not None
        assert pl.refined.shape == (16,)
        assert protos.num_classes == 3
        np.testing.assert_array_equal(pl.refined, refine_labels(pl.features, protos))


class TestSplit:
    """Test the trustworthy / untrustworthy partition."""

    def test_all_trusted(self):
        """Test confident consistent samples all land in D_tt."""
        split = split_trustworthy(labelled([0, 1, 2], [0, 1, 2], [0.0, 0.0, 0.0]), 1.0)
        assert split.r == 1.0
        assert split.ut_size == 0

    def test_rule(self):
        """Test both the entropy threshold and agreement are required."""
        pl = labelled([0, 1, 1, 0], [0, 1, 0, 0], [0.1, 0.2, 0.1, 0.7])
        split = split_trustworthy(pl, 0.5)
        assert split.trustworthy.tolist() == [0, 1]
        assert split.untrustworthy.tolist() == [2, 3]
        assert split.r == 0.5

    @settings(max_examples=100)
    @given(seeds, st.integers(1, 40), thresholds)
    def test_partition(self, seed, n, tau):
        """Test D_tt and D_ut are disjoint and cover every sample."""
        split = split_trustworthy(random_labels(seed, n), tau)
        both = np.concatenate([split.trustworthy, split.untrustworthy])
        assert sorted(both.tolist()) == list(range(n))
        assert split.r == split.tt_size / n

    @settings(max_examples=100)
    @given(seeds, thresholds, thresholds)
    def test_monotone_in_tau(self, seed, tau_a, tau_b):
        """Test a larger threshold never removes a trusted sample."""
        pl = random_labels(seed, 40)
        low, high = sorted((tau_a, tau_b))
        smaller = set(split_trustworthy(pl, low).trustworthy.tolist())
        larger = set(split_trustworthy(pl, high).trustworthy.tolist())
        assert smaller <= larger

    def test_monotone_on_model_outputs(self, small_params, rng):
        """Test monotonicity on real curriculum labels across a threshold sweep."""
        pl, _ = curriculum_labels(small_params, _Inputs(rng.normal((40, 5))))
        previous: set[int] = set()
        for tau in (1e-9, 0.2, 0.5, 0.8, 1.0):
            current = set(split_trustworthy(pl, tau).trustworthy.tolist())
            assert previous <= current
            previous = current

    def test_tiny_tau(self):
        """Test a vanishing threshold keeps only certain, consistent samples."""
        pl = labelled([0, 1, 1], [0, 1, 0], [0.0, 0.0, 0.0])
        assert split_trustworthy(pl, 1e-9).trustworthy.tolist() == [0, 1]

    @pytest.mark.parametrize("tau", [0.0, -0.1, 1.5])
    def test_invalid_tau(self, tau):
        """Test thresholds outside (0, 1]."""
        with pytest.raises(UsageError):
            split_trustworthy(labelled([0, 1], [0, 1], [0.0, 0.0]), tau)

    def test_unfiltered(self, small_params, rng):
        """Test the ablated split trusts everything."""
        pl = pseudo_label(small_params, _Inputs(rng.normal((12, 5))))
        split = unfiltered_split(pl)
        assert split.r == 1.0
        assert split.tt_size == 12

    def test_split_dump(self, temp_dir):
        """Test the per-sample dump columns."""
        pl = labelled([0, 1, 1], [0, 1, 0], [0.1, 0.1, 0.1])
        path = save_split_dump(pl, split_trustworthy(pl, 0.5), temp_dir / "split.csv")
        frame = pd.read_csv(path)
        assert list(frame.columns) == SPLIT_COLUMNS
        assert frame["subset"].tolist() == ["tt", "tt", "ut"]


@pytest.mark.slow
class TestDefaultBenchmark:
    """Test label noise on the default benchmark."""

    @pytest.mark.parametrize("seed", range(5))
    def test_filtering_lowers_noise(self, seed):
        """Test D_tt is cleaner than the whole target and noise sits in the hard class."""
        cfg = with_seed(LabConfig(), seed)
        bench = build_benchmark(cfg.shift)
        pair = pretrain_pair(bench, cfg)
        oracle = bench.target.oracle()

        pl, _ = curriculum_labels(pair.source, bench.target.unlabeled())
        split = split_trustworthy(pl, cfg.adaptation.tau_norm)
        overall = oracle.noise_rate(pl.hard)

        assert overall > 0
        assert oracle.noise_rate(pl.hard, split.trustworthy) < overall
        if seed == 0:
            assert oracle.class_noise_rate(pl.hard, cfg.shift.hard_class_indices) > overall
