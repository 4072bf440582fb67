import numpy as np
import pytest

from src.config.models import ProfileOptions
from src.data.models import BlockOccupation, PathPart, PointKind, SpeedProfile, TrainPath
from src.data.synthetic import NetworkBuilder, random_corridor
from src.logic.conflicts import (
    ConflictCatalog, ConflictInterval, HaltingKind, build_catalog, headway_interval, paths_conflict,
)
from tests.oracles import occupancy_conflict, prepared, random_timed_path


def single_block_profile(profile_id, service, start, end, block="x"):
    return SpeedProfile(
        id=profile_id, service=service, route=(block,), from_point="A", to_point="B",
        from_stage=0.0, to_stage=1.0, v_max_used=20.0, run_time=end, dwell=0,
        occupations=(BlockOccupation(block, start, end),),
    )


@pytest.fixture
def one_block():
    builder = NetworkBuilder("one-block").block("x", 1000.0).block("y", 1000.0).block("z", 1000.0)
    builder.crossing("x", "z")
    builder.point("A", PointKind.ENTRY, outbound=["x"])
    builder.point("B", PointKind.EXIT, inbound=["x"])
    return builder.build()


def test_headway_interval_of_one_shared_block(one_block):
    v = single_block_profile("v", "r1", 0, 100)
    w = single_block_profile("w", "r2", 0, 60)
    interval = headway_interval(v, w, one_block)
    assert (interval.lo, interval.hi) == (-59, 99)
    assert (interval.l, interval.u) == (59, 99)
    assert interval.exact
    assert interval.contains(-59) and interval.contains(99)
    assert not interval.contains(-60) and not interval.contains(100)


def test_identical_windows_give_symmetric_interval(one_block):
    v = single_block_profile("v", "r1", 5, 80)
    w = single_block_profile("w", "r2", 5, 80)
    interval = headway_interval(v, w, one_block)
    assert interval.l == interval.u == 74


def test_crossing_blocks_interact_and_others_do_not(one_block):
    v = single_block_profile("v", "r1", 0, 50, block="x")
    assert headway_interval(v, single_block_profile("w", "r2", 0, 50, block="z"), one_block) is not None
    assert headway_interval(v, single_block_profile("w", "r2", 0, 50, block="y"), one_block) is None


def test_gapped_offsets_are_flagged(one_block):
    v = SpeedProfile(
        id="v", service="r1", route=("x", "y"), from_point="A", to_point="B", from_stage=0.0, to_stage=1.0,
        v_max_used=20.0, run_time=300, dwell=0,
        occupations=(BlockOccupation("x", 0, 10), BlockOccupation("y", 200, 210)),
    )
    w = SpeedProfile(
        id="w", service="r2", route=("x", "y"), from_point="A", to_point="B", from_stage=0.0, to_stage=1.0,
        v_max_used=20.0, run_time=20, dwell=0,
        occupations=(BlockOccupation("x", 0, 10), BlockOccupation("y", 10, 20)),
    )
    interval = headway_interval(v, w, one_block)
    assert (interval.lo, interval.hi) == (-9, 199)
    assert not interval.exact


def test_swapped_interval_orientation():
    interval = ConflictInterval("v", "w", -59, 99)
    swapped = interval.swapped()
    assert (swapped.v, swapped.w, swapped.lo, swapped.hi) == ("w", "v", -99, 59)
    assert swapped.swapped() == interval


def test_disjoint_services_have_no_conflicts():
    builder = NetworkBuilder("parallel").block("n1", 900.0).block("s1", 900.0)
    builder.point("A", PointKind.ENTRY, outbound=["n1"]).point("B", PointKind.EXIT, inbound=["n1"])
    builder.point("C", PointKind.ENTRY, outbound=["s1"]).point("D", PointKind.EXIT, inbound=["s1"])
    builder.service("N", "A", "B", entry_time=0, scheduled_exit=100)
    builder.service("S", "C", "D", entry_time=0, scheduled_exit=100)
    _, catalog = prepared(builder.build())
    assert catalog.size == (0, 0)
    assert catalog.max_magnitude() > 0


def test_merge_pairs_all_conflict(merge):
    profile_sets, catalog = prepared(merge, ProfileOptions(speed_levels=(1.0, 0.8, 0.6)))
    assert [len(ps) for ps in profile_sets.values()] == [3, 3]
    assert catalog.size == (9, 0)
    for (v, w), interval in catalog.intervals.items():
        assert catalog.profile(v).service != catalog.profile(w).service
        assert catalog.interval(w, v) == interval.swapped()
        assert interval.lo <= 0 <= interval.hi
    text = catalog.dump()
    assert text.startswith("# conflict intervals (9)")
    assert "# halting conditions (0)" in text


def test_halting_fixture_has_one_crossing_condition(halting):
    options = ProfileOptions(speed_levels=(1.0,), max_inserted_halts=0)
    profile_sets, catalog = prepared(halting, options)
    assert len(catalog.halting) == 1
    (condition,) = catalog.halting
    assert condition.kind == HaltingKind.CROSSING
    assert catalog.profile(condition.v).service == "V"
    assert catalog.profile(condition.w).to_point == "P"
    assert condition.f_w == catalog.profile(condition.w).run_time
    assert catalog.halting_condition(condition.v, condition.w, condition.w_next) is condition
    assert condition in catalog.halting_of(condition.w_next)


def test_halting_condition_catches_long_dwell(halting):
    options = ProfileOptions(speed_levels=(1.0,), max_inserted_halts=0)
    profile_sets, catalog = prepared(halting, options)
    (condition,) = catalog.halting
    w_set, v_set = profile_sets["W"], profile_sets["V"]
    w_first, w_second = condition.w, condition.w_next
    v_only = condition.v
    f_w = w_set[w_first].run_time
    # V passes p well after W's scheduled dwell would have ended
    v_departure = 2000
    interval = catalog.interval(w_first, v_only)
    assert not interval.contains(v_departure)

    def w_path(hold):
        second = f_w + hold
        exit_time = second + w_set[w_second].run_time
        return TrainPath("w", "W", (PathPart(w_first, 0), PathPart(w_second, second)), exit_time, 0.0)

    v_path = TrainPath("v", "V", (PathPart(v_only, v_departure),), v_departure + v_set[v_only].run_time, 0.0)
    short, long_ = w_path(0), w_path(3000)
    assert not paths_conflict(short, v_path, catalog)
    assert paths_conflict(long_, v_path, catalog)
    assert paths_conflict(v_path, long_, catalog)
    for path in (short, long_):
        assert paths_conflict(path, v_path, catalog) == occupancy_conflict(path, v_path, profile_sets, halting)


def test_same_service_never_conflicts(merge):
    profile_sets, catalog = prepared(merge)
    ps = profile_sets["MA"]
    v = ps.ordered_ids()[0]
    first = TrainPath("a", "MA", (PathPart(v, 0),), ps[v].run_time, 0.0)
    second = TrainPath("b", "MA", (PathPart(v, 0),), ps[v].run_time, 0.0)
    assert not paths_conflict(first, second, catalog)


@pytest.mark.parametrize("fixture", ["merge", "halting", "two_station", "corridor"])
def test_catalog_against_occupancy_timelines(fixture, request):
    net = request.getfixturevalue(fixture)
    profile_sets, catalog = prepared(net, ProfileOptions(speed_levels=(1.0, 0.8)))
    exact = all(i.exact for i in catalog.intervals.values()) and all(h.exact for h in catalog.halting)
    rng = np.random.default_rng(7)
    services = list(net.services)
    checked = conflicts = 0
    for trial in range(2000):
        a, b = rng.choice(len(services), size=2, replace=False)
        first_service, second_service = services[a], services[b]
        first = random_timed_path(profile_sets[first_service.id], rng, f"p{trial}",
                                  first_service.disturbed_entry + int(rng.integers(0, 240)))
        second = random_timed_path(profile_sets[second_service.id], rng, f"q{trial}",
                                   second_service.disturbed_entry + int(rng.integers(0, 240)))
        truth = occupancy_conflict(first, second, profile_sets, net)
        found = paths_conflict(first, second, catalog)
        assert found == paths_conflict(second, first, catalog)
        if truth:
            assert found, (first.describe(), second.describe())
        if exact:
            assert found == truth, (first.describe(), second.describe())
        checked += 1
        conflicts += truth
    assert checked == 2000
    assert 0 < conflicts < checked


@pytest.mark.parametrize("seed", range(20))
def test_random_corridor_catalog_is_sound(seed):
    net = random_corridor(seed)
    profile_sets, catalog = prepared(net, ProfileOptions(speed_levels=(1.0, 0.8)))
    rng = np.random.default_rng(seed)
    services = list(net.services)
    for trial in range(100):
        first_service, second_service = services[0], services[1 + trial % (len(services) - 1)]
        first = random_timed_path(profile_sets[first_service.id], rng, "p", first_service.disturbed_entry)
        second = random_timed_path(profile_sets[second_service.id], rng, "q",
                                   second_service.disturbed_entry + int(rng.integers(0, 200)))
        if occupancy_conflict(first, second, profile_sets, net):
            assert paths_conflict(first, second, catalog)


def test_catalog_intervals_are_indexed_both_ways(two_station):
    profile_sets, catalog = prepared(two_station)
    assert isinstance(catalog, ConflictCatalog)
    assert build_catalog(profile_sets, two_station).size == catalog.size
    for (v, w), interval in catalog.intervals.items():
        assert interval in catalog.intervals_of(v)
        assert interval.swapped() in catalog.intervals_of(w)

