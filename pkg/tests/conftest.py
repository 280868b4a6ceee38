import os

import pytest

from hetbench.datagen import FeatureVector, Label

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
REFERENCE_CSV = os.path.join(FIXTURES, "reference_sample.csv")

# (phi, pixel, grad, betw, label) for the 20 published sample rows.
REFERENCE_ROWS = [
    (0, 251, 64, 0, Label.SOLID),
    (1, 78, 19, 1, Label.THROAT),
    (0, 138, 29, 0, Label.NCVUGS),
    (0, 133, 35, 1, Label.NCVUGS),
    (1, 185, 45, 0, Label.SOLID),
    (1, 96, 84, 0, Label.PORE),
    (0, 238, 43, 1, Label.SOLID),
    (0, 155, 51, 1, Label.SOLID),
    (0, 213, 67, 1, Label.SOLID),
    (1, 185, 67, 1, Label.THROAT),
    (0, 65, 81, 0, Label.NCVUGS),
    (0, 129, 30, 0, Label.NCVUGS),
    (1, 176, 66, 0, Label.SOLID),
    (0, 10, 47, 0, Label.NCVUGS),
    (0, 137, 45, 1, Label.NCVUGS),
    (0, 85, 12, 0, Label.NCVUGS),
    (0, 260, 26, 1, Label.SOLID),
    (1, 155, 22, 0, Label.SOLID),
    (1, 206, 53, 0, Label.SOLID),
    (1, 187, 51, 1, Label.THROAT),
]


@pytest.fixture
def reference_sample():
    return [(FeatureVector(*map(float, row[:4])), row[4]) for row in REFERENCE_ROWS]
