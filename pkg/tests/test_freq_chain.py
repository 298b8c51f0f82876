import json
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from atomnav.freq_chain import (
    MAX_COMPONENTS, ChainConfigError, ChainError, ChainNode, ChainParseError, FreqChain,
    check_locks, evaluate, load_bundled, parse_chain, parse_frequency, report_json,
)

MHZ = 10**9  # millihertz per MHz


@pytest.fixture
def cooling():
    return parse_chain(load_bundled("cooling_chain.fc"))


@pytest.mark.parametrize("text,value", [
    ("160MHz", 160 * MHZ), ("1.562GHz", 1562 * MHZ), ("500kHz", 500_000_000),
    ("78.5MHz", 78_500_000_000), ("1Hz", 1000), ("250mHz", 250), ("2e3Hz", 2_000_000),
])
def test_parse_frequency(text, value):
    assert parse_frequency(text) == value


def test_parse_signed_frequency():
    assert parse_frequency("-60MHz", signed=True) == -60 * MHZ
    assert parse_frequency("+3.284GHz", signed=True) == 3284 * MHZ
    with pytest.raises(ChainParseError):
        parse_frequency("-60MHz")


def test_parse_wavelength_literal():
    f = parse_frequency("780nm")
    exact = Fraction(299792458 * 1000) / Fraction(780, 10**9)
    assert f == round(exact)


@pytest.mark.parametrize("bad", ["160", "MHz", "1.2.3GHz", "16 0MHz", "0.5mHz", "3ghz"])
def test_malformed_literals(bad):
    with pytest.raises(ChainParseError):
        parse_frequency(bad)


def test_smallest_document():
    chain = parse_chain("source ld1 1560nm\nsource ld2 1560nm\n")
    assert len(chain) == 2


def test_duplicate_id_reports_both_lines():
    with pytest.raises(ChainParseError) as exc:
        parse_chain("source a 1MHz\n# comment\nsource a 2MHz\n")
    msg = str(exc.value)
    assert "'a'" in msg and "1" in msg and "3" in msg
    assert exc.value.line == 3


def test_forward_reference_rejected():
    with pytest.raises(ChainParseError) as exc:
        parse_chain("double b a\nsource a 1MHz\n")
    assert exc.value.line == 1 and exc.value.column == 10


def test_unknown_kind():
    with pytest.raises(ChainParseError) as exc:
        parse_chain("source a 1MHz\n  tripler b a\n")
    assert (exc.value.line, exc.value.column) == (2, 3)


def test_malformed_literal_position():
    with pytest.raises(ChainParseError) as exc:
        parse_chain("vco v 15x2MHz\n")
    assert (exc.value.line, exc.value.column) == (1, 7)


@pytest.mark.parametrize("doc", [
    "source a 1MHz\ndivide b a 0\n",
    "source a 1MHz\nlowpass b a 0Hz\n",
    "source a 1MHz\nsideband b a 1MHz orders=\n",
    "source a\n",
    "check a 1MHz tolerance=1Hz\n",
])
def test_other_parse_errors(doc):
    with pytest.raises(ChainError):
        parse_chain(doc)


def test_bundled_cooling_chain_parses(cooling):
    assert len(cooling) == 15
    assert len(cooling.checks) == 5


def test_beat_of_lasers_and_reference():
    chain = parse_chain(
        "source nu12 3.284GHz\nsource ref 1.562GHz\ndouble ref2 ref\nbeat nu_int nu12 ref2\n"
        "source other 3.124GHz\nbeat direct nu12 other\n"
    )
    v = evaluate(chain)
    assert v["nu_int"].components_mhz == (160 * MHZ,)
    assert v["direct"].components_mhz == (160 * MHZ,)


def test_mix_filter_divide():
    chain = parse_chain(
        "source i 160MHz\nvco v 152MHz\nmix m i v\nlowpass f m 100MHz\ndivide d f 16\n"
    )
    v = evaluate(chain)
    assert v["m"].components_mhz == (8 * MHZ, 312 * MHZ)
    assert v["f"].components_mhz == (8 * MHZ,)
    assert v["d"].components_mhz == (500_000_000,)


def test_node_semantics():
    v = evaluate(parse_chain(
        "source a 10MHz\nshift s a -20MHz\nsideband sb a 1MHz orders=-2,0,3\n"
        "lowpass lp sb 5MHz\n"
    ))
    assert v["s"].components_mhz == (0,)  # clamped
    assert v["sb"].components_mhz == (8 * MHZ, 10 * MHZ, 13 * MHZ)
    assert len(v["lp"]) == 0  # empty set is legal


def test_component_cap():
    lines = ["source a 1MHz"]
    for i in range(8):
        prev = "a" if i == 0 else f"s{i - 1}"
        lines.append(f"sideband s{i} {prev} {3**i}kHz orders=-1,0,1")
    with pytest.raises(ChainError, match="cap"):
        evaluate(parse_chain("\n".join(lines)))
    assert MAX_COMPONENTS == 64


def test_cooling_chain_values_exact(cooling):
    v = evaluate(cooling)
    assert v["after_double_diff"].components_mhz == (6568 * MHZ,)
    assert v["nu12"].components_mhz == (3284 * MHZ,)
    assert v["synth_x2"].components_mhz == (3124 * MHZ,)
    assert v["nu_int"].components_mhz == (160 * MHZ,)
    assert v["mixed"].components_mhz == (8 * MHZ, 312 * MHZ)
    assert v["filtered"].components_mhz == (8 * MHZ,)
    assert v["div16"].components_mhz == (500_000_000,)
    assert v["aom_offset"].components_mhz == (78_500_000_000,)


def test_cooling_checks_pass(cooling):
    results = check_locks(cooling)
    assert all(r.passed for r in results)
    by_id = {r.node_id: r for r in results}
    assert by_id["after_double_diff"].nearest_hz == 6.568e9
    assert by_id["div16"].nearest_hz == 500e3


def test_detuned_vco_fails_at_625khz(cooling):
    bad = cooling.replace_node(ChainNode("vco", "vco", (), 150 * MHZ))
    by_id = {r.node_id: r for r in check_locks(bad)}
    assert not by_id["div16"].passed
    assert by_id["div16"].nearest_hz == 625e3


def test_check_unknown_id_is_config_error():
    with pytest.raises(ChainConfigError):
        check_locks(parse_chain("source a 1MHz\ncheck nope 1MHz tol=1Hz\n"))


def test_empty_node_fails_check():
    chain = parse_chain("source a 200MHz\nlowpass f a 100MHz\ncheck f 8MHz tol=1Hz\n")
    (r,) = check_locks(chain)
    assert not r.passed and r.nearest_hz is None


def test_report_json_shape(cooling):
    rep = json.loads(report_json(check_locks(cooling)))
    assert {"id", "expected_hz", "nearest_hz", "pass"} <= set(rep[0])


def test_raman_chain():
    chain = parse_chain(load_bundled("raman_chain.fc"))
    v = evaluate(chain)
    master = v["master"].components_mhz[0]
    off = 6775 * MHZ
    assert v["feom"].components_mhz == (master - off, master, master + off)
    assert v["omega12"].components_mhz == (6835 * MHZ,)
    assert all(r.passed for r in check_locks(chain))


def test_evaluate_deterministic(cooling):
    assert evaluate(cooling) == evaluate(cooling)


def _topological_shuffle(chain, rnd):
    remaining = list(chain.nodes)
    placed, out = set(), []
    while remaining:
        ready = [n for n in remaining if all(i in placed for i in n.inputs)]
        pick = rnd.choice(ready)
        remaining.remove(pick)
        placed.add(pick.id)
        out.append(pick)
    return FreqChain(tuple(out), chain.checks)


@given(st.integers(0, 2**32 - 1))
def test_topological_order_invariance(seed):
    cooling = parse_chain(load_bundled("cooling_chain.fc"))
    shuffled = _topological_shuffle(cooling, random.Random(seed))
    assert evaluate(shuffled) == evaluate(cooling)


def test_text_roundtrip(cooling):
    again = parse_chain(cooling.to_text())
    assert evaluate(again) == evaluate(cooling)
    assert [c.expected_mhz for c in again.checks] == [c.expected_mhz for c in cooling.checks]


@given(st.integers(1, 10**18))
def test_format_roundtrip(mhz):
    chain = FreqChain((ChainNode("a", "source", (), mhz),))
    assert parse_chain(chain.to_text()).nodes[0].freq_mhz == mhz
