import math

import numpy as np
import pytest

from tilecodes.blocks import MetricParams, empirical_measure
from tilecodes.entropy import (JointEmpirical, approx_inclusion_check,
                               conditional_entropy, delta_for_inclusion,
                               label_pattern_table, partition_entropy,
                               process_entropy_estimate, product_symbol,
                               rectangle_rule_check, smb_check,
                               smb_subset_eta, split_symbol, x_partition,
                               y_partition, y_truncated_partition)
from tilecodes.sampling import rng_for, sample_product


def measure_of(config, n_max, alphabet):
    return empirical_measure(np.asarray(config, dtype=np.int64), "z1",
                             MetricParams(n_max=n_max), alphabet)


def joint_of(x, y, s, l, n_max):
    z = (np.asarray(x) - 1) * l + np.asarray(y)
    return JointEmpirical(measure_of(z, n_max, s * l), s, l)


def test_partition_entropy_exact():
    assert partition_entropy([0.5, 0.5]) == pytest.approx(1.0, abs=1e-12)
    assert partition_entropy([0.25] * 4) == pytest.approx(2.0, abs=1e-12)
    assert partition_entropy([1.0, 0.0]) == 0.0


def test_symbol_codec_roundtrip():
    for s, l in [(2, 3), (4, 4)]:
        for x in range(1, s + 1):
            for y in range(1, l + 1):
                assert split_symbol(product_symbol(x, y, l), l) == (x, y)


def test_process_entropy_bernoulli():
    x = sample_product((2 ** 16,), [0.7, 0.3], rng_for(5, "h"))
    m = measure_of(x, 6, 2)
    h = process_entropy_estimate(m, x_partition(2, 1), 6)
    target = -(0.7 * math.log2(0.7) + 0.3 * math.log2(0.3))
    assert h == pytest.approx(target, abs=0.01)


def test_conditional_entropy_diag_and_independent():
    x = sample_product((2 ** 14,), [0.5, 0.5], rng_for(7, "j"))
    y = sample_product((2 ** 14,), [0.5, 0.5], rng_for(8, "j"))
    P, Q = x_partition(2, 2), y_partition(2, 2)
    diag = joint_of(x, x, 2, 2, 2)
    assert conditional_entropy(diag, P, Q, 2) == 0.0
    assert conditional_entropy(diag, Q, P, 2) == 0.0
    ind = joint_of(x, y, 2, 2, 2)
    assert conditional_entropy(ind, P, Q, 2) == pytest.approx(1.0, abs=0.01)
    assert conditional_entropy(ind, Q, P, 2) == pytest.approx(1.0, abs=0.01)


def test_chain_rule_at_identity():
    x = sample_product((2 ** 14,), [0.6, 0.4], rng_for(9, "c"))
    y = sample_product((2 ** 14,), [0.5, 0.5], rng_for(10, "c"))
    J = joint_of(x, y, 2, 2, 1)
    P, Q = x_partition(2, 2), y_partition(2, 2)
    h_joint = partition_entropy(list(J.measure.tables[0].values()))
    h_q = partition_entropy(list(label_pattern_table(J.measure, Q, 0).values()))
    assert h_joint == pytest.approx(h_q + conditional_entropy(J, P, Q, 0),
                                    abs=1e-9)


def test_inclusion_check_diag_and_independent():
    x = sample_product((2 ** 14,), [0.5, 0.5], rng_for(7, "j"))
    y = sample_product((2 ** 14,), [0.5, 0.5], rng_for(8, "j"))
    P, Q = x_partition(2, 2), y_partition(2, 2)
    r = approx_inclusion_check(joint_of(x, x, 2, 2, 1), P, Q, 0.4, 0,
                               exhaustive=True)
    assert r.passed and r.worst_sym_diff == 0.0
    r = approx_inclusion_check(joint_of(x, y, 2, 2, 1), P, Q, 0.4, 0,
                               exhaustive=True)
    assert not r.passed
    assert r.worst_sym_diff == pytest.approx(0.494, abs=0.02)


def test_delta_for_inclusion_value():
    assert delta_for_inclusion(0.3) == pytest.approx(0.0099, abs=1e-12)
    with pytest.raises(ValueError):
        delta_for_inclusion(1.5)


def test_smb_uniform_full_mass():
    u = sample_product((2 ** 15,), [0.5, 0.5], rng_for(3, "u"))
    m = measure_of(u, 3, 2)
    r = smb_check(m, 1.0, 0.05, 3)
    assert r.passed and r.mass == pytest.approx(1.0, abs=1e-12)
    bad = smb_check(m, 0.3, 0.05, 3)
    assert not bad.passed


def test_smb_subset_eta_values():
    assert smb_subset_eta(0.1, 1.0, 2) == pytest.approx(0.1, abs=1e-12)
    assert smb_subset_eta(0.1, 0.5, 2) == pytest.approx(0.1, abs=1e-12)
    assert smb_subset_eta(0.01, 1.0, 2) == pytest.approx(0.01, abs=1e-12)
    with pytest.raises(ValueError):
        smb_subset_eta(0.0, 1.0, 2)


def test_rectangle_rule():
    f = np.array([1.0] * 50 + [0.0] * 50)
    mu = np.ones(100) / 100
    r = rectangle_rule_check(f, mu, 0.4, 0.6)
    assert r.integral == pytest.approx(0.5)
    assert not r.premise
    assert r.tail_mass == pytest.approx(0.5)
    near = rectangle_rule_check(np.full(100, 0.1), mu, 0.5, 0.5)
    assert near.premise and near.conclusion_holds
    assert near.tail_mass == 0.0


def test_truncated_partition_coarsens():
    Qt = y_truncated_partition(2, 4, 2)
    Q = y_partition(2, 4)
    assert Qt.n_labels <= Q.n_labels
