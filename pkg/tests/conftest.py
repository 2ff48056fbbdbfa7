from __future__ import annotations

import numpy as np
import pytest

from gamevlm.perception import CameraModel


@pytest.fixture
def identity_camera() -> CameraModel:
    """Camera at the world origin looking along +z; fx=fy=100, 640x480."""
    return CameraModel(
        fx=100.0,
        fy=100.0,
        cx=320.0,
        cy=240.0,
        rotation=np.eye(3),
        translation=np.zeros(3),
        width=640,
        height=480,
    )
