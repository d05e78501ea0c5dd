import pytest

from evalsynth.demos import chart_demo_descriptor, qa_demo_descriptor
from evalsynth.descriptor import Constraint, ConstraintKind, TaskDescriptor


@pytest.fixture
def chart_descriptor() -> TaskDescriptor:
    return chart_demo_descriptor()


@pytest.fixture
def qa_descriptor() -> TaskDescriptor:
    return qa_demo_descriptor()


@pytest.fixture
def invalid_range_descriptor(chart_descriptor) -> TaskDescriptor:
    from dataclasses import replace

    bad = Constraint(
        kind=ConstraintKind.RANGE,
        target="y",
        params=(("max", 0.0), ("min", 100.0)),
    )
    return replace(chart_descriptor, constraints=(bad,))
