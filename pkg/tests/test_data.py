import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gravdengue.data import (
    CaseSeries,
    PatchLayout,
    ProvinceRecord,
    active_provinces,
    aggregate_cases,
    build_patches,
    country_series,
    load_cases,
    load_centers,
    load_provinces,
    select_window,
    write_cases,
    write_centers,
    write_provinces,
)
from gravdengue.errors import BoundsError, DataFormatError, DomainError, StructuralError, UnmappedDataError

HEADER = "province_id,name,region_class,population,lat,lon\n"


def prov(pid, region="Coast-N", pop=1000, lat=0.0, lon=0.0):
    return ProvinceRecord(pid, pid.lower(), region, pop, lat, lon)


@pytest.fixture(scope="module")
def loaded(fixture_dir):
    provinces = load_provinces(fixture_dir / "provinces.csv")
    cases = load_cases(fixture_dir / "cases.csv", [p.province_id for p in provinces])
    return provinces, cases


def test_fixture_shape(loaded):
    provinces, cases = loaded
    assert len(provinces) == 79
    assert cases.counts.shape == (780, 79)
    assert cases.counts.dtype.kind == "i"


def test_province_errors(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text(HEADER + "A,a,Jungle,10,0,0\nA,b,Jungle,10,0,0\n")
    with pytest.raises(DataFormatError, match="'A'"):
        load_provinces(p)
    p.write_text(HEADER + "A,a,Jungle,-10,0,0\n")
    with pytest.raises(DataFormatError, match="line 2"):
        load_provinces(p)
    p.write_text(HEADER + "A,a,Jungle,10,0,0\nB,b,Desert,10,0,0\n")
    with pytest.raises(DataFormatError, match="line 3.*region"):
        load_provinces(p)
    p.write_text(HEADER + "A,a,Jungle,10,0\n")
    with pytest.raises(DataFormatError, match="line 2"):
        load_provinces(p)
    p.write_text("id,name\n")
    with pytest.raises(DataFormatError, match="line 1"):
        load_provinces(p)


def test_case_errors(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("week,province_id,count\n1,A,3\n2,A,-1\n")
    with pytest.raises(DataFormatError, match="line 3"):
        load_cases(p)
    p.write_text("week,province_id,count\n1,A,3\n1,A,4\n")
    with pytest.raises(DataFormatError, match="duplicate"):
        load_cases(p)
    p.write_text("week,province_id,count\n1,A,x\n")
    with pytest.raises(DataFormatError, match="line 2"):
        load_cases(p)


def test_center_is_mean():
    layout = build_patches([prov("A", lat=0, lon=0), prov("B", lat=2, lon=2)], {"A": "p", "B": "p"})
    assert (layout[0].lat, layout[0].lon) == (1.0, 1.0)
    assert layout[0].population == 2000


def test_three_patch_fixture(loaded):
    provinces, _ = loaded
    layout = build_patches(provinces, "three_patch")
    assert layout.patch_ids == ("coast_n", "coast_c", "jungle")
    assert [p.population for p in layout] == [7_600_000, 10_500_000, 2_800_000]
    regions = {p.province_id: p.region_class for p in provinces}
    assert all(regions[d] == "Mountain-S" for d in layout.dropped) and len(layout.dropped) == 2
    members = [m for p in layout for m in p.members]
    assert len(members) == len(set(members)) == 77


def test_three_patch_missing_region_is_error():
    with pytest.raises(StructuralError):
        build_patches([prov("A", "Coast-N"), prov("B", "Jungle")], "three_patch")


def test_scheme_errors():
    with pytest.raises(DomainError):
        build_patches([prov("A")], "bogus")
    with pytest.raises(StructuralError):
        build_patches([prov("A")], {"Z": "p"})


def test_per_province_on_epidemic_subset(loaded):
    provinces, cases = loaded
    active = set(active_provinces(cases, "epidemic_2000_2001"))
    assert len(active) == 49
    layout = build_patches([p for p in provinces if p.province_id in active], "per_province")
    assert len(layout) == 49


def test_aggregation_conserves_counts(loaded):
    provinces, cases = loaded
    layout = build_patches(provinces, "three_patch")
    series = aggregate_cases(cases, layout)
    dropped = [cases.province_ids.index(d) for d in layout.dropped]
    kept_total = cases.counts.sum(axis=1) - cases.counts[:, dropped].sum(axis=1)
    assert np.array_equal(series.values.sum(axis=1), kept_total)
    assert np.array_equal(country_series(series).values[:, 0], kept_total)
    per = aggregate_cases(cases, build_patches(provinces, "per_province"))
    assert np.array_equal(per.values, cases.counts)


def test_unmapped_cases_rejected():
    provinces = [prov("A"), prov("B")]
    cases = CaseSeries(np.arange(1, 3), ("A", "B"), np.array([[1, 0], [2, 5]]))
    layout = build_patches(provinces, {"A": "p"})
    # B is listed as dropped, so it is excluded rather than rejected
    assert aggregate_cases(cases, layout).values[:, 0].tolist() == [1, 2]
    with pytest.raises(UnmappedDataError, match="B"):
        aggregate_cases(cases, PatchLayout(layout.patches))


def test_select_window(loaded):
    provinces, cases = loaded
    series = aggregate_cases(cases, build_patches(provinces, "three_patch"))
    w = select_window(series, "epidemic_2000_2001")
    assert len(w) == 51 and w.times[0] == 350 and w.times[-1] == 400
    assert len(select_window(series, (1, 780))) == 780
    assert np.array_equal(select_window(series, (1, 780)).values, series.values)
    assert len(select_window(series, "seasonal_2002_2008")) == 363
    with pytest.raises(BoundsError):
        select_window(series, (400, 350))
    with pytest.raises(BoundsError):
        select_window(series, (700, 800))


def test_round_trips(tmp_path, loaded):
    provinces, cases = loaded
    write_provinces(tmp_path / "p.csv", provinces)
    assert load_provinces(tmp_path / "p.csv") == provinces
    write_cases(tmp_path / "c.csv", cases)
    back = load_cases(tmp_path / "c.csv", cases.province_ids)
    assert np.array_equal(back.counts, cases.counts)
    layout = build_patches(provinces, "three_patch")
    write_centers(tmp_path / "centers.csv", layout)
    assert tuple(load_centers(tmp_path / "centers.csv")) == layout.geometries


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-18, -3), st.floats(-81, -69), st.integers(1, 10**6)), min_size=1, max_size=12))
def test_property_center_in_bounding_box(rows):
    provinces = [prov(f"P{k}", lat=a, lon=b, pop=n) for k, (a, b, n) in enumerate(rows)]
    layout = build_patches(provinces, {p.province_id: "x" for p in provinces})
    c = layout[0]
    lats = [p.lat for p in provinces]
    lons = [p.lon for p in provinces]
    assert min(lats) - 1e-9 <= c.lat <= max(lats) + 1e-9
    assert min(lons) - 1e-9 <= c.lon <= max(lons) + 1e-9
    assert c.population == sum(n for _, _, n in rows)
