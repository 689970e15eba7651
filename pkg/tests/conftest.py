import pytest

from fracgelfand import ProblemParams, RadialGrid, assemble


@pytest.fixture(scope="session")
def operator_cache():
    """Shared operator assemblies; dense assembly dominates test runtime."""
    cache = {}

    def get(n, s, panels, grading=2.0):
        key = (n, s, panels, grading)
        if key not in cache:
            cache[key] = assemble(
                ProblemParams(n, s), RadialGrid.graded(panels, grading=grading)
            )
        return cache[key]

    return get
