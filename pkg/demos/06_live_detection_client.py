"""Swap the mock for the live detection service, no code changes upstream.

Start the service first (from detection_service/):

    python -m detection_service --port 8765

Then:  python demos/06_live_detection_client.py
"""

import sys

from gamevlm.perception import RemoteDetector, ServiceError
from gamevlm.render import render_world
from gamevlm.tasks import TaskId, build_scene

URL = "http://127.0.0.1:8765"

detector = RemoteDetector(URL, timeout=5.0)
try:
    if not detector.health():
        raise ServiceError("health check not ok")
except ServiceError:
    print(f"no detection service at {URL}; start it with: python -m detection_service")
    sys.exit(1)

# Render the task-1 tabletop and ask the service about it, using the same
# synonym forms the mock handles.
scene = build_scene(TaskId.TASK1)
image = render_world(scene.objects, scene.regions)
for labels in (["apple"], ["red_apple"], ["apple", "kiwifruit"]):
    detections = detector.detect(image, labels, conf_threshold=0.25)
    print(f"labels {labels} ->")
    for det in detections:
        print(f"    {det.label:12} conf {det.confidence:.2f} bbox {det.bbox}")
