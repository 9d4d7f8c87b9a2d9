import pytest

from mise.scenarios import verify


def _by_name(results):
    return {r.name: r for r in results}


def test_all_checks_pass():
    results = verify.run_checks()
    assert len(results) == len(verify.CHECKS)
    failed = [r.name for r in results if not r.passed]
    assert failed == []


@pytest.mark.parametrize("kind, caught", [
    ("dissipator-sign", "lindblad.trace_preservation"),
    ("hamiltonian-sign", "steady_state.two_level_closed_form"),
])
def test_mutations_are_caught(kind, caught):
    only = ["lindblad.trace_preservation", "steady_state.two_level_closed_form",
            "qlinalg.vec_roundtrip"]
    res = _by_name(verify.run_checks(inject=kind, only=only))
    assert not res[caught].passed
    assert res["qlinalg.vec_roundtrip"].passed


def test_mutation_is_undone():
    from mise import lindblad
    before = lindblad.dissipator_superop
    verify.run_checks(inject="dissipator-sign", only=["qlinalg.vec_roundtrip"])
    assert lindblad.dissipator_superop is before


def test_unknown_mutation():
    with pytest.raises(ValueError):
        verify.run_checks(inject="nonsense")


def test_tight_flags_tolerance_limited():
    res = _by_name(verify.run_checks(tight=True, only=["invariant.residual",
                                                      "qlinalg.vec_roundtrip"]))
    r = res["invariant.residual"]
    assert r.tight_passed == (r.value <= 1e-10)
    assert r.tolerance_limited == (r.passed and not r.tight_passed)
    assert res["qlinalg.vec_roundtrip"].tight_passed
