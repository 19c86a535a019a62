import pytest

from gaussmap4 import surface
from gaussmap4.errors import ParseError

from conftest import FIXTURES


@pytest.mark.parametrize("path", sorted(FIXTURES.glob("*.surf")), ids=lambda p: p.stem)
def test_fixtures_round_trip(path):
    sf = surface.load(path)
    again = surface.loads(sf.to_text())
    assert again.canonical() == sf.canonical()
    sf.build()


BAD = [
    ("[surface]\nname = x\ncolour = red\n", 3, 1),
    ("[chart A]\nx1 = u\nx2 = v\nx3 = 0\nx4 = q\ndomain = rect\nu = 0, 1\nv = 0, 1\n", 5, 6),
    ("[nonsense]\n", 1, 1),
    ("name = x\n", 1, 1),
    ("[options]\ngrid = 64\nspeed = 3\n", 3, 1),
    ("[expected]\nchi = lots\n", 2, 7),
]


@pytest.mark.parametrize("text,line,col", BAD)
def test_errors_report_location(text, line, col):
    with pytest.raises(ParseError) as err:
        surface.loads(text).build()
    assert (err.value.line, err.value.column) == (line, col)


def test_param_overrides():
    sf = surface.load(FIXTURES / "peanut.surf")
    assert sf.build({"b": 0.25}).params["b"] == 0.25
    with pytest.raises(ParseError):
        sf.build({"nope": 1.0})


def test_expected_section_is_kept():
    sf = surface.load(FIXTURES / "example2.surf")
    assert float(sf.expected["chi_plus_1"].value) == -12
    assert "[expected]" in sf.to_text()
