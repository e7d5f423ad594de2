import pytest
from hypothesis import given, strategies as st

from bgpstab.model import (
    Kind,
    Origin,
    Route,
    RouteAttributes,
    UpdateRecord,
    as_path,
    bucket_index,
    canonical_prefix,
    routes_differ,
)

P = "203.0.113.0/24"


def route(path=(65001, 65002), **attrs):
    return Route(P, tuple(path), RouteAttributes(**attrs))


def test_identical_routes_do_not_differ():
    assert not routes_differ(route(), route())


def test_med_change_is_a_route_change():
    assert routes_differ(route(med=10), route(med=20))


def test_withdrawal_differs_from_announcement():
    assert routes_differ(route(), Route.withdrawal(P))


@pytest.mark.parametrize("other", [
    route(path=(65001,)),
    route(path=(65002, 65001)),
    route(origin=Origin.EGP),
    route(next_hop="10.0.0.9"),
    route(communities=("65001:1",)),
])
def test_any_path_or_attribute_change_differs(other):
    assert routes_differ(route(), other)


def test_community_order_matters():
    assert routes_differ(route(communities=("a", "b")), route(communities=("b", "a")))


def test_different_destinations_rejected():
    with pytest.raises(ValueError, match="different destinations"):
        routes_differ(route(), Route("198.51.100.0/24", (1,)))


def test_withdrawal_has_empty_path_and_attributes():
    w = Route.withdrawal(P)
    assert w.withdrawn and w.path == () and w.attrs == RouteAttributes()
    with pytest.raises(ValueError):
        Route(P, (), RouteAttributes(med=1))


def test_prepending_kept_in_path_length():
    assert route(path=(65001, 65001, 65001, 65002)).path_len == 4


@pytest.mark.parametrize("text,canon", [
    ("10.0.0.0/8", "10.0.0.0/8"),
    ("10.1.2.3/8", "10.0.0.0/8"),
    ("2001:DB8::/32", "2001:db8::/32"),
    ("0.0.0.0/0", "0.0.0.0/0"),
])
def test_canonical_prefix(text, canon):
    assert canonical_prefix(text) == canon


@pytest.mark.parametrize("bad", ["", "10.0.0.0", "10.0.0.0/33", "010.0.0.0/8", "x/8", "2001:db8::/129"])
def test_bad_prefixes_rejected(bad):
    with pytest.raises(ValueError):
        canonical_prefix(bad)


def test_as_numbers_are_32_bit():
    assert as_path([0, 2**32 - 1]) == (0, 2**32 - 1)
    with pytest.raises(ValueError):
        as_path([2**32])
    with pytest.raises(ValueError):
        as_path([-1])


def test_update_record_invariants():
    with pytest.raises(ValueError, match="negative timestamp"):
        UpdateRecord(-1, "p", Kind.ANNOUNCE, route())
    with pytest.raises(ValueError):
        UpdateRecord(0, "p", Kind.WITHDRAW, route())
    with pytest.raises(ValueError):
        UpdateRecord(0, "p", Kind.ANNOUNCE, Route.withdrawal(P))


def test_bucket_index():
    assert bucket_index(35, 0, 30) == 1
    assert bucket_index(29, 0, 30) == 0
    with pytest.raises(ValueError):
        bucket_index(5, 10, 30)


routes = st.builds(
    lambda path, med, origin: Route(P, tuple(path), RouteAttributes(origin=origin, med=med) if path else RouteAttributes()),
    st.lists(st.integers(0, 5), max_size=3),
    st.one_of(st.none(), st.integers(0, 3)),
    st.one_of(st.none(), st.sampled_from(Origin)),
)


@given(routes, routes)
def test_routes_differ_symmetric(a, b):
    assert routes_differ(a, b) == routes_differ(b, a)


@given(routes)
def test_routes_differ_irreflexive(a):
    assert not routes_differ(a, a)


@given(st.text(min_size=1), st.text(min_size=1))
def test_peer_order_total_and_bytewise(a, b):
    assert [a < b, a == b, a > b].count(True) == 1
    assert (a < b) == (a.encode("utf-8") < b.encode("utf-8"))
