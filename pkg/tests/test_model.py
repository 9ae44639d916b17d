import json

import numpy as np
import pytest

import ednetsim as ez
from ednetsim.model import (
    Allocation,
    DistributionSpec,
    study_from_dict,
    study_to_dict,
    validate_config,
)

from case_fronts import AS_IS, FRONT_BEST_AD, FRONT_NO_AD


def test_case_study_config_is_valid(case_study):
    assert ez.validate_study(case_study) == []


def test_case_study_shape(case_net):
    assert case_net.n_eds == 6
    assert case_net.n_slots_total == 18
    assert case_net.tag_labels == ("red", "yellow")
    assert case_net.thresholds == {"red": 5.0, "yellow": 15.0}
    assert np.allclose(case_net.travel, case_net.travel.T)
    assert case_net.travel[0, 4] == 19.32
    assert case_net.travel[3, 4] == 7.04


def test_f2_as_is(case_net):
    alloc = case_net.as_is_allocation()
    assert alloc.values == AS_IS[0]
    assert ez.f2(alloc, case_net) == 31680


@pytest.mark.parametrize("values,expected", FRONT_NO_AD[:1] + FRONT_BEST_AD[:1])
def test_f2_front_heads(case_net, values, expected):
    assert ez.f2(Allocation(values), case_net) == expected


def test_f2_flat_allocation(case_net):
    assert ez.f2(Allocation((2,) * 18), case_net) == 17280


def test_f2_dimension_mismatch(case_net):
    with pytest.raises(ValueError):
        ez.f2(Allocation((4, 4)), case_net)


def test_f2_linearity(case_net):
    rng = np.random.default_rng(7)
    durations = [int(s.duration_minutes) for ed in case_net.eds for s in ed.slots]
    for _ in range(50):
        base = Allocation(tuple(int(v) for v in rng.integers(1, 9, 18)))
        k = int(rng.integers(0, 18))
        assert ez.f2(base.bump(k, 1), case_net) - ez.f2(base, case_net) == durations[k]


def test_validate_flags_asymmetric_travel(case_study):
    doc = study_to_dict(case_study)
    doc["network"]["travel_minutes"][4][0] = 0.0  # break ED1<->ED5 symmetry
    broken = study_from_dict(doc)
    codes = [v.code for v in validate_config(broken.network)]
    assert codes == ["travel.not_symmetric"]


def test_validate_flags_bad_rate_and_bounds(case_study):
    doc = study_to_dict(case_study)
    doc["eds"][0]["arrival_rates_per_hour"]["red"][1] = -0.5
    doc["eds"][2]["lower"][0] = 7  # above upper=6
    doc["eds"][2]["as_is"][0] = 7
    broken = study_from_dict(doc)
    codes = {v.code for v in validate_config(broken.network)}
    assert "rate.negative" in codes
    assert "bounds.inverted" in codes
    assert "asis.out_of_bounds" in codes


def test_validate_flags_missing_threshold(case_study):
    doc = study_to_dict(case_study)
    del doc["network"]["thresholds"]["yellow"]
    broken = study_from_dict(doc)
    codes = [v.code for v in validate_config(broken.network)]
    assert "threshold.missing" in codes


def test_as_is_exempt_suppresses_bound_check(case_study):
    doc = study_to_dict(case_study)
    doc["eds"][0]["as_is"][0] = 1  # below lower=2
    assert "asis.out_of_bounds" in {
        v.code for v in validate_config(study_from_dict(doc).network)
    }
    doc["eds"][0]["as_is_exempt"] = True
    assert "asis.out_of_bounds" not in {
        v.code for v in validate_config(study_from_dict(doc).network)
    }


def test_check_allocation_bounds(case_net):
    bad = Allocation((7,) + AS_IS[0][1:])
    codes = [v.code for v in ez.check_allocation(bad, case_net)]
    assert codes == ["alloc.out_of_bounds"]
    assert ez.check_allocation(case_net.as_is_allocation(), case_net) == []


def test_validate_is_idempotent(case_study):
    doc = study_to_dict(case_study)
    doc["network"]["travel_minutes"][4][0] = 0.0
    net = study_from_dict(doc).network
    first = validate_config(net)
    second = validate_config(net)
    assert first == second


def test_roundtrip_serialization(case_study):
    doc = study_to_dict(case_study)
    clone = study_from_dict(json.loads(json.dumps(doc)))
    assert clone.network.tags == case_study.network.tags
    assert clone.network.thresholds == case_study.network.thresholds
    assert clone.network.weights == case_study.network.weights
    assert np.array_equal(clone.network.travel, case_study.network.travel)
    assert clone.network.eds == case_study.network.eds
    assert clone.policies == case_study.policies
    assert clone.design == case_study.design
    assert clone.solver == case_study.solver


def test_distribution_roundtrip_and_means():
    spec = DistributionSpec("scaled_beta", (5860.0, 0.113, 2.24), 0.999)
    again = DistributionSpec.from_dict(spec.to_dict())
    assert again == spec
    assert spec.mean() == pytest.approx(0.999 + 5860.0 * 0.113 / (0.113 + 2.24))
    assert DistributionSpec("exponential", (197.0,), 0.999).mean() == pytest.approx(197.999)
    assert DistributionSpec("gamma", (198.0, 0.913)).mean() == pytest.approx(180.774)
    assert DistributionSpec("lognormal", (300.0, 1010.0)).mean() == pytest.approx(300.0)


def test_policy_grid_present(case_study):
    assert set(case_study.policies) == {
        "no-ad",
        "seg6-cap12-nearest", "seg6-cap12-least",
        "seg6-nocap-nearest", "seg6-nocap-least",
        "seg12-cap12-nearest", "seg12-cap12-least",
        "seg12-nocap-nearest", "seg12-nocap-least",
    }
    assert not case_study.policies["no-ad"].enabled
    best = case_study.policies["seg6-nocap-least"]
    assert best.segment_hours == 6 and best.daily_max_hours is None
    assert best.destination == "least_crowded" and best.blocking == "all"


def test_policy_invariant_segment_vs_cap(case_study):
    import dataclasses

    bad = dataclasses.replace(
        case_study.policies["seg6-cap12-least"], segment_hours=18.0
    )
    study = ez.StudyConfig(
        network=case_study.network,
        policies={"bad": bad, "no-ad": ez.NO_DIVERSION},
        solver=case_study.solver,
        design=case_study.design,
    )
    assert "policy.segment_exceeds_cap" in {v.code for v in ez.validate_study(study)}
