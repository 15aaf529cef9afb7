"""Acceptance criteria 1 to 12 at their stated sizes and tolerances.

Every criterion prints one PASS/FAIL line, which is repeated in the
"acceptance criteria" section of the pytest summary. Criteria 4, 7 and 8
contain requirements that cannot be met; they run as stated and fail. The
decisions ledger explains why.
"""

import pytest

from conftest import ACCEPTANCE_LINES
from unsampling.acceptance import Acceptance


@pytest.fixture(scope="module")
def acceptance(tmp_path_factory):
    return Acceptance(tmp_path_factory.mktemp("acceptance"))


@pytest.mark.parametrize("number", range(1, 13))
def test_criterion(acceptance, number):
    result = acceptance.run(number)
    line = result.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert result.passed, line
