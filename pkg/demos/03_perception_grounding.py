"""From labels to world coordinates: detect, resolve synonyms, back-project.

The mock detector projects ground-truth scene objects through the camera
model, so the full perception path (query -> bbox -> pixel center -> depth
-> world point) runs without any real camera.

Run:  python demos/03_perception_grounding.py
"""

import numpy as np

from gamevlm import TaskId, build_scene, detect, pixel_to_world, resolve_label
from gamevlm.perception import MockDetector

scene = build_scene(TaskId.TASK1)  # apple, kiwifruit, two blocks on the table
print("objects:", [o.label for o in scene.objects])

# Open-vocabulary queries: any synonym of an object's label finds it.
for query in ("apple", "red_apple", "red fruit"):
    detections = detect(scene, [query])
    print(f"query {query!r:12} -> {len(detections)} box(es), label {detections[0].label!r}")

# resolve_label picks the best match (confidence, then smaller box, then
# left-most) and raises with the seen labels if nothing matches.
best = resolve_label("red fruit", detect(scene, ["red fruit"]), scene.synonyms)
print("resolved bbox:", best.bbox)

# Ground the detection: read exact depth from the scene, back-project the
# bbox center through the pinhole model.
detector = MockDetector.from_scene(scene)
depth = detector.depth_at(scene.objects, best.center)
world = pixel_to_world(best.center, depth, scene.camera)
truth = np.asarray(scene.objects[0].position)
print("back-projected point:", np.round(world, 4))
print("ground truth center: ", truth, f"(error {np.linalg.norm(world - truth):.2e} m)")
