from vmbwaves.core.checks import CheckResult, basis_checks, kernel_checks, mixture_checks, picard_checks


def test_basis_checks_pass(matrices):
    results = basis_checks(matrices, refined=matrices)
    assert [result.name for result in results][-1] == "spectral gap under refinement"
    assert all(result.passed for result in results)


def test_hierarchy_checks_pass(matrices):
    assert all(result.passed for result in mixture_checks(matrices) + picard_checks(matrices))


def test_check_records():
    data = CheckResult("gap", 0.5, "> 0", True).to_dict()
    assert data == {"name": "gap", "measured": 0.5, "target": "> 0", "passed": True, "detail": ""}


def test_kernel_checks_pass(medium_matrices):
    results = kernel_checks(medium_matrices)
    assert [result.name for result in results] == ["kernel identities against nu sqrt(M)",
                                                     "sector matrices vs tensor grid"]
    assert all(result.passed for result in results)
