"""Parameter structures, config parsing, and derived hardware quantities."""

import math

import pytest

from mrhydro.params import (ActuationLineParams, BlockedLoad, CompliantLoad,
                            ConfigError, HardwareGeometry, JointSpec,
                            UnknownKeyError, ValidationError, config_text,
                            derive_hydraulic_mass, joint_torque, load_config,
                            parse_config, save_config)

FULL_CONFIG = """\
# full line configuration
m1 = 1.0
b1 = 210.0
k1 = 2.76e5
m2 = 9.65
b2 = 98.0
k2 = 2.76e5
tau = 0.010
K_I = 1.0
A_master = 826e-6
A_slave = 671e-6
I_min = 0.0
I_max = 3.5
load.kind = compliant
load.m3 = 1.87
load.b3 = 20.0
load.k3 = 12000.0
"""


# -- config parsing ---------------------------------------------------------

def test_full_config_values():
    params, load, _ = parse_config(FULL_CONFIG)
    assert params.m2 == 9.65
    assert params.tau == 0.010
    assert params.k1 == params.k2 == 2.76e5  # numerically equal, independent keys
    assert load == CompliantLoad(1.87, 20.0, 12000.0)


def test_empty_config_gives_defaults():
    params, load, geom = parse_config("")
    assert params == ActuationLineParams()
    assert load == CompliantLoad(m3=1.87, b3=20.0, k3=12000.0)
    assert geom == HardwareGeometry()


def test_negative_mass_rejected():
    with pytest.raises(ValidationError):
        parse_config("m1 = -1")


def test_unknown_key_rejected():
    with pytest.raises(UnknownKeyError):
        parse_config("m7 = 1.0")


def test_malformed_line_rejected():
    with pytest.raises(ConfigError):
        parse_config("m1 1.0")


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError):
        parse_config("m1 = 1.0\nm1 = 2.0")


def test_non_numeric_value_rejected():
    with pytest.raises(ConfigError):
        parse_config("m1 = fast")


def test_blocked_load_excludes_mass_keys():
    params, load, _ = parse_config("load.kind = blocked")
    assert load == BlockedLoad()
    with pytest.raises(ConfigError):
        parse_config("load.kind = blocked\nload.m3 = 2.0")


def test_current_clamp_ordering_enforced():
    with pytest.raises(ValidationError):
        parse_config("I_min = 2.0\nI_max = 1.0")
    with pytest.raises(ValidationError):
        parse_config("I_min = -0.5")


def test_config_roundtrip_bit_identical(tmp_path):
    params = ActuationLineParams(m1=1.25, b2=17.5, K_I=42.0)
    load = CompliantLoad(m3=2.5, b3=1.0, k3=9999.0)
    geom = HardwareGeometry(hose_length=1.75)
    path = tmp_path / "line.cfg"
    save_config(path, params, load, geom)
    first = path.read_bytes()
    p2, l2, g2 = load_config(path)
    assert (p2, l2, g2) == (params, load, geom)
    save_config(path, p2, l2, g2)
    assert path.read_bytes() == first


def test_config_text_is_strict_subset_of_keys():
    text = config_text(ActuationLineParams(), BlockedLoad(), HardwareGeometry())
    parse_config(text)  # canonical output must parse cleanly


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")


# -- derived hydraulic mass -------------------------------------------------

def test_hydraulic_mass_reference_value():
    # hand evaluation of rho*L*A^2/(pi d^2/4) with the bench geometry
    geom = HardwareGeometry(hose_length=1.0, hose_inner_diameter=0.0095,
                            fluid_density=1000.0, cylinder_area=826e-6)
    m2 = derive_hydraulic_mass(geom)
    assert m2 == pytest.approx(9.625493447354328, rel=1e-12)
    assert abs(m2 - 9.65) / 9.65 < 0.05


def test_hydraulic_mass_unit_area_ratio():
    # cylinder area equal to hose area leaves the plain fluid mass rho*L*A
    d = 0.02
    a_hose = math.pi * d * d / 4.0
    geom = HardwareGeometry(hose_length=2.0, hose_inner_diameter=d,
                            fluid_density=850.0, cylinder_area=a_hose)
    assert derive_hydraulic_mass(geom) == pytest.approx(850.0 * 2.0 * a_hose,
                                                        rel=1e-12)


def test_hydraulic_mass_scaling_exact():
    geom = HardwareGeometry()
    base = derive_hydraulic_mass(geom)
    doubled_d = HardwareGeometry(hose_inner_diameter=2.0 * geom.hose_inner_diameter)
    doubled_l = HardwareGeometry(hose_length=2.0 * geom.hose_length)
    assert derive_hydraulic_mass(doubled_d) * 4.0 == base
    assert derive_hydraulic_mass(doubled_l) == 2.0 * base


def test_geometry_must_be_positive():
    with pytest.raises(ValidationError):
        HardwareGeometry(hose_length=0.0)


# -- joint torque -----------------------------------------------------------

def test_joint_torque_zero_and_cocontraction():
    assert joint_torque(0.0, 0.0, 0.05) == 0.0
    assert joint_torque(500.0, 500.0, 0.012) == 0.0


def test_joint_torque_antisymmetric():
    assert joint_torque(120.0, 30.0, 0.012) == -joint_torque(30.0, 120.0, 0.012)


def test_joint_torque_rated_elbow_value():
    # slave cylinder at its rated membrane pressure, r = 12 mm driven pulley
    f_rated = 3100e3 * 671e-6
    torque = joint_torque(f_rated, 0.0, 0.012)
    assert torque == pytest.approx(24.9612, rel=1e-6)
    assert not JointSpec(torque_capacity=25.0, rom_min=0.0,
                         rom_max=180.0).exceeds_capacity(torque)


def test_joint_torque_rejects_pushing_cables():
    with pytest.raises(ValidationError):
        joint_torque(-1.0, 0.0, 0.012)
    with pytest.raises(ValidationError):
        joint_torque(10.0, 10.0, 0.0)


def test_joint_spec_invariants():
    with pytest.raises(ValidationError):
        JointSpec(torque_capacity=0.0, rom_min=0.0, rom_max=90.0)
    with pytest.raises(ValidationError):
        JointSpec(torque_capacity=10.0, rom_min=90.0, rom_max=90.0)
    spec = JointSpec(torque_capacity=39.0, rom_min=0.0, rom_max=115.0)
    assert spec.exceeds_capacity(40.0)
    assert spec.exceeds_capacity(-40.0)
    assert not spec.exceeds_capacity(39.0)
