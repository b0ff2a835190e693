import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gmap.errors import ParseError
from gmap.fileformat import parse_model, parse_model_text, write_model, write_model_text
from gmap.generate import TOPOLOGIES, random_accumulation, random_model
from gmap.model import build_model

TWO_VAR = """GMAP 1
VARS 2
2 2
FACTORS 1
2 0 1
1 2 4 3
STATS 1
ADD
1
1 0
0 1
"""


def test_two_var_round_trip(tmp_path):
    m = build_model([2, 2], [((0, 1), [1, 2, 4, 3])], [((0,), [[0], [1]])])
    assert parse_model_text(TWO_VAR)[0] == m
    path = tmp_path / "m.gmap"
    write_model(m, path)
    assert parse_model(path)[0] == m


def test_comments_and_whitespace():
    text = "# a model\nGMAP   1\nVARS 1\n  3 \nFACTORS 1\n1 0   # scope\n0.5 -inf 1\n"
    m, h = parse_model_text(text)
    assert m.cardinalities == (3,) and h == {}
    assert m.energy_factors[0].values[1] == -math.inf


def test_table_length_names_factor():
    bad = TWO_VAR.replace("1 2 4 3", "1 2 4")
    with pytest.raises(ParseError, match="factor 0") as exc:
        parse_model_text(bad)
    assert "line 6" in str(exc.value)


def test_minus_inf_in_g_rejected():
    with pytest.raises(ParseError):
        parse_model_text(TWO_VAR.replace("\n0 1\n", "\n0 -inf\n"))


@pytest.mark.parametrize("text", [
    "GMAP 2\n",
    "GMAP 1\nVARS 2\n2\n",
    "GMAP 1\nVARS 1\n2\nFACTORS 1\n1 3\n0 0\n",
    "GMAP 1\nVARS 1\n2\nFACTORS 1\n1 0\n0 inf\n",
    "GMAP 1\nVARS 1\n2\nFACTORS 1\n1 0\n0 nan\n",
    "GMAP 1\nVARS 1\n2\nFACTORS 1\n1 0\n0 x\n",
    "GMAP 1\nVARS 1\n2\nFACTORS 0\ntrailing garbage\n",
    "GMAP 1\nVARS 1\n2\nFACTORS 0\nSTATS 1\nSUM\n0\n",
    "GMAP 1\nVARS 1\n2\nFACTORS 0\nSTATS 1\nMAX\n1\n1 0\n-1 0\n",
    "GMAP 1\nVARS 1\n2\nFACTORS 2\n1 0\n0 0\n",
])
def test_rejects(text):
    with pytest.raises(ParseError):
        parse_model_text(text)


def test_h_block():
    m, h = parse_model_text(TWO_VAR + "H\nmode slack\neta identity\n")
    assert h == {"mode": ["slack"], "eta": ["identity"]}
    assert parse_model_text(write_model_text(m, h))[1] == h


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), topo=st.sampled_from(TOPOLOGIES), P=st.integers(0, 3))
def test_round_trip(seed, topo, P):
    rng = np.random.default_rng(seed)
    m = random_model(rng, int(rng.integers(1, 7)), 3, topo,
                     accumulation=random_accumulation(rng, P), neg_inf_rate=0.1)
    assert parse_model_text(write_model_text(m))[0] == m


def test_continuous_values_round_trip():
    rng = np.random.default_rng(0)
    m = build_model([3, 3], [((0, 1), rng.normal(size=9))])
    assert parse_model_text(write_model_text(m))[0] == m
