import numpy as np
import pytest

from onewaydj import nmr
from onewaydj.nmr import MoleculeSpec, MoleculeSpecError, load_molecule_spec, parse_molecule_spec

BASIC = """
[shifts]
A  100
B  -50
C  20
[jcouplings]
B  7
C  3  11
[relaxation]
A  2.0  0.5
B  3.0  0.7
C  4.0  0.9
[qubit_map]
1  C
2  A
3  B
"""


def test_shipped_crotonic_file():
    spec = nmr.crotonic_acid()
    assert spec.nuclei == ("C2", "C4", "C3", "C1")
    c1 = spec.nuclei.index("C1")
    assert spec.t1[c1] == pytest.approx(12.37)
    assert spec.t2[c1] == pytest.approx(0.3762)
    assert spec.t1[spec.nuclei.index("C2")] == pytest.approx(4.89)
    assert spec.t2[spec.nuclei.index("C4")] == pytest.approx(0.5445)
    assert spec.warnings == ()


def test_qubit_map_reorders_everything():
    spec = parse_molecule_spec(BASIC)
    assert spec.nuclei == ("C", "A", "B")
    assert list(spec.shifts) == [20, 100, -50]
    assert list(spec.t1) == [4.0, 2.0, 3.0]
    # J(A,B)=7 now sits between qubits 2 and 3
    assert spec.jcoupling[1, 2] == spec.jcoupling[2, 1] == 7
    assert spec.jcoupling[0, 1] == 3 and spec.jcoupling[0, 2] == 11
    assert np.allclose(spec.omega, 2 * np.pi * spec.shifts)


def test_full_rows_equal_lower_triangle():
    full = BASIC.replace("B  7\nC  3  11", "A  0 7 3\nB  7 0 11\nC  3 11 0")
    assert np.array_equal(parse_molecule_spec(full).jcoupling, parse_molecule_spec(BASIC).jcoupling)


def test_asymmetric_full_table_names_pair():
    bad = BASIC.replace("B  7\nC  3  11", "A  0 7 3\nB  8 0 11\nC  3 11 0")
    with pytest.raises(MoleculeSpecError, match=r"\(A,B\)"):
        parse_molecule_spec(bad)


def test_missing_relaxation_defaults_to_infinity_with_warning():
    text = BASIC.split("[relaxation]")[0] + "[qubit_map]\n1 A\n2 B\n3 C\n"
    spec = parse_molecule_spec(text)
    assert np.all(np.isinf(spec.t1)) and np.all(np.isinf(spec.t2))
    assert any("relaxation" in w for w in spec.warnings)


def test_parse_errors_carry_line_numbers():
    text = "[shifts]\nA 1\nB oops\n"
    with pytest.raises(MoleculeSpecError, match=r"f\.spec:3:"):
        parse_molecule_spec(text, "f.spec")


@pytest.mark.parametrize(
    "text, match",
    [
        ("[jcouplings]\n", "missing \\[shifts\\]"),
        ("A 1\n", "before the first section"),
        ("[shifts]\nA 1\n[bogus]\n", "unknown section"),
        ("[shifts]\nA 1\nA 2\n", "duplicate nucleus"),
        ("[shifts]\nA 1\nB 2\n[relaxation]\nA 1 2\nB 1 0.5\n", "t1 < t2"),
        ("[shifts]\nA 1\nB 2\n[relaxation]\nA 1 0.5\n", "no relaxation times for B"),
        ("[shifts]\nA 1\nB 2\n[qubit_map]\n1 A\n2 A\n", "permutation"),
        ("[shifts]\nA 1\nB 2\n[jcouplings]\nB 1 2 3\n", "lower-triangular"),
    ],
)
def test_validation_errors(text, match):
    with pytest.raises(MoleculeSpecError, match=match):
        parse_molecule_spec(text)


def test_load_missing_file(tmp_path):
    with pytest.raises(MoleculeSpecError, match="nope.spec"):
        load_molecule_spec(tmp_path / "nope.spec")


def test_load_round_trip(tmp_path):
    p = tmp_path / "m.spec"
    p.write_text(BASIC)
    assert load_molecule_spec(p).nuclei == ("C", "A", "B")


def test_spec_constructor_invariants():
    with pytest.raises(MoleculeSpecError):
        MoleculeSpec([0, 0], [[0, 1], [2, 0]], [1, 1], [1, 1], ("a", "b"))
    with pytest.raises(MoleculeSpecError):
        MoleculeSpec([0, 0], [[1, 0], [0, 0]], [1, 1], [1, 1], ("a", "b"))
    with pytest.raises(MoleculeSpecError):
        MoleculeSpec([0, 0], np.zeros((2, 2)), [1, 1], [0, 1], ("a", "b"))
    with pytest.raises(MoleculeSpecError):
        MoleculeSpec([0, 0], np.zeros((2, 2)), [1, 1], [1, 1], ("a", "a"))
