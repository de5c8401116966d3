import numpy as np
import pytest
from hypothesis import given, strategies as st

from sflopt.errors import ConfigError
from sflopt.profiler import (
    LayerSpec,
    NetworkArchitecture,
    builtin_architecture,
    intermediate_size_bits,
    layer_macs,
    load_architecture,
    parameter_bits,
    profile,
)

CONV1 = LayerSpec("conv", 3, 64, 55, 55, 11, 11, name="conv1")


def test_conv_macs_hand_value():
    # 11*11*3*55*55*64
    assert layer_macs(CONV1, 1) == 70_276_800


def test_fc_identity_case():
    fc = LayerSpec("fully_connected", 1, 1, 1, 1)
    assert layer_macs(fc, 1) == 1


def test_activation_element_count():
    relu = LayerSpec("activation", 64, 64, 55, 55)
    assert layer_macs(relu, 1) == 193_600


def test_activation_cost_factor():
    relu = LayerSpec("activation", 64, 64, 55, 55)
    assert layer_macs(relu, 1, cost_factors={"activation": 2.0}) == 2 * 193_600


def test_intermediate_bits_hand_values():
    assert intermediate_size_bits(CONV1, 1, 32) == 6_195_200
    one = LayerSpec("activation", 1, 1, 1, 1)
    assert intermediate_size_bits(one, 1, 1) == 1
    pool5 = LayerSpec("pooling", 256, 256, 6, 6)
    # ~288 KBytes at batch 8, the order reported for this stage's output
    assert intermediate_size_bits(pool5, 1, 32) == 294_912


def test_macs_scale_with_batch():
    assert layer_macs(CONV1, 4) == 4 * layer_macs(CONV1, 1)
    assert intermediate_size_bits(CONV1, 4, 32) == 4 * intermediate_size_bits(CONV1, 1, 32)


def test_single_layer_profile():
    arch = NetworkArchitecture((CONV1,), batch_size=1)
    prof = profile(arch)
    assert prof.cumulative_macs[0] == layer_macs(CONV1, 1)
    assert prof.data_size_bits[0] == intermediate_size_bits(CONV1, 1, 32)


def test_profile_cumulative_and_monotone():
    arch = builtin_architecture("alexnet20")
    prof = profile(arch)
    per_layer = [layer_macs(l, 1) for l in arch.layers]
    assert prof.cumulative_macs[-1] == sum(per_layer)
    assert np.all(np.diff(prof.cumulative_macs) >= 0)
    assert np.all(prof.data_size_bits > 0)


def test_profile_is_pure():
    arch = builtin_architecture("vgg16", batch_size=2)
    a, b = profile(arch), profile(arch)
    assert np.array_equal(a.cumulative_macs, b.cumulative_macs)
    assert np.array_equal(a.data_size_bits, b.data_size_bits)


def test_alexnet_structure():
    arch = builtin_architecture("alexnet20")
    assert arch.num_layers == 20
    kinds = [l.kind for l in arch.layers]
    assert kinds.count("conv") == 5
    assert kinds.count("fully_connected") == 3


def test_alexnet_conv_dominates_macs():
    arch = builtin_architecture("alexnet20")
    total = sum(layer_macs(l, 1) for l in arch.layers)
    conv = sum(layer_macs(l, 1) for l in arch.layers if l.kind == "conv")
    assert conv / total > 0.90


def test_alexnet_data_size_downward_trend():
    prof = profile(builtin_architecture("alexnet20"))
    d = prof.data_size_bits
    non_increasing = np.sum(np.diff(d) <= 0)
    assert non_increasing / (len(d) - 1) >= 0.8
    assert d[-1] < d[0]


def test_vgg16_structure():
    arch = builtin_architecture("vgg16")
    kinds = [l.kind for l in arch.layers]
    assert kinds.count("conv") == 13
    assert kinds.count("fully_connected") == 3
    assert kinds.count("pooling") == 5


def test_parameter_sizes_match_known_models():
    # 61.1M and 138.4M parameters
    assert parameter_bits(builtin_architecture("alexnet20")) == 61_100_840 * 32
    assert parameter_bits(builtin_architecture("vgg16")) == 138_357_544 * 32


def test_unknown_preset_is_config_error():
    with pytest.raises(ConfigError, match="unknown preset"):
        builtin_architecture("lenet")


def test_chaining_validation():
    bad = (CONV1, LayerSpec("activation", 32, 32, 55, 55))
    with pytest.raises(ValueError, match="chaining"):
        NetworkArchitecture(bad)
    # flatten transition into a fully connected layer is allowed
    NetworkArchitecture((CONV1, LayerSpec("fully_connected", 55 * 55 * 64, 10, 1, 1)))


def test_layer_validation():
    with pytest.raises(ValueError):
        LayerSpec("conv", 0, 64, 55, 55, 11, 11)
    with pytest.raises(ValueError):
        LayerSpec("pool", 1, 1, 1, 1)


@given(
    k=st.integers(1, 11),
    cin=st.integers(1, 64),
    cout=st.integers(1, 64),
    hw=st.integers(1, 56),
    m=st.integers(1, 16),
)
def test_conv_macs_formula_property(k, cin, cout, hw, m):
    layer = LayerSpec("conv", cin, cout, hw, hw, k, k)
    assert layer_macs(layer, m) == k * k * cin * hw * hw * cout * m


def test_load_architecture_roundtrip(tmp_path):
    cfg = tmp_path / "net.cfg"
    cfg.write_text(
        "[network]\nbatch_size = 2\nelement_bits = 16\n\n"
        "[layer:c1]\nkind = conv\nkernel_h = 3\nkernel_w = 3\n"
        "in_channels = 1\nout_channels = 4\nout_h = 8\nout_w = 8\n\n"
        "[layer:fc]\nkind = fully_connected\nin_channels = 256\n"
        "out_channels = 10\nout_h = 1\nout_w = 1\n"
    )
    arch = load_architecture(cfg)
    assert arch.batch_size == 2 and arch.element_bits == 16
    assert [l.name for l in arch.layers] == ["c1", "fc"]
    assert layer_macs(arch.layers[0], 1) == 3 * 3 * 1 * 8 * 8 * 4


def test_load_architecture_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_architecture(tmp_path / "absent.cfg")
