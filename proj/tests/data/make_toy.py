"""Regenerates the toy COCO fixture and its images (deterministic)."""
import json
import math
import os

from PIL import Image, ImageDraw

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "toy")


def rotated_rect(cx, cy, w, h, deg):
    t = math.radians(deg)
    c, s = math.cos(t), math.sin(t)
    pts = []
    for dx, dy in ((-w / 2, -h / 2), (w / 2, -h / 2), (w / 2, h / 2), (-w / 2, h / 2)):
        pts.append((round(cx + c * dx - s * dy, 2), round(cy + s * dx + c * dy, 2)))
    return pts


def flat(pts):
    return [v for p in pts for v in p]


def bbox(pts):
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    return [min(xs), min(ys), max(xs) - min(xs), max(ys) - min(ys)]


images = [
    {"id": 1, "file_name": "img_001.png", "width": 160, "height": 120},
    {"id": 2, "file_name": "img_002.jpg", "width": 128, "height": 128},
    {"id": 3, "file_name": "img_003.png", "width": 120, "height": 160},
    {"id": 4, "file_name": "img_004.png", "width": 100, "height": 100},
]

# person instances: (image_id, list of segments)
people = {
    1: [
        [rotated_rect(50, 60, 20, 50, 30)],
        # occluded person split in two polygons
        [[(100, 30), (118, 30), (118, 55), (100, 55)],
         [(102, 62), (116, 62), (115, 90), (103, 90)]],
    ],
    2: [
        [[(64, 20), (80, 40), (70, 90), (52, 80), (50, 40)]],
        [rotated_rect(30, 100, 16, 40, -60)],
    ],
    3: [
        # runs past the right border: vertices are clamped on load
        [[(95, 40), (126, 42), (125, 110), (96, 108)]],
    ],
}

annotations = []
next_id = 1
for image_id, instances in people.items():
    for segs in instances:
        all_pts = [p for s in segs for p in s]
        annotations.append({
            "id": next_id, "image_id": image_id, "category_id": 1,
            "segmentation": [flat(s) for s in segs],
            "bbox": bbox(all_pts), "area": 0.0, "iscrowd": 0,
        })
        next_id += 1

# crowd region encoded as RLE: flagged and excluded
annotations.append({
    "id": next_id, "image_id": 1, "category_id": 1,
    "segmentation": {"counts": [300, 40, 200, 40], "size": [120, 160]},
    "bbox": [10, 5, 30, 20], "area": 80.0, "iscrowd": 1,
})
next_id += 1
# non-person categories, including the only object on image 4
for image_id, pts in ((2, rotated_rect(100, 30, 20, 12, 10)), (4, rotated_rect(50, 50, 30, 20, 0))):
    annotations.append({
        "id": next_id, "image_id": image_id, "category_id": 2,
        "segmentation": [flat(pts)], "bbox": bbox(pts), "area": 0.0, "iscrowd": 0,
    })
    next_id += 1

coco = {
    "images": images,
    "annotations": annotations,
    "categories": [{"id": 1, "name": "person"}, {"id": 2, "name": "bicycle"}],
}
os.makedirs(os.path.join(OUT, "images"), exist_ok=True)
with open(os.path.join(OUT, "coco.json"), "w") as f:
    json.dump(coco, f, indent=1)
    f.write("\n")

for img in images:
    w, h = img["width"], img["height"]
    im = Image.new("RGB", (w, h))
    px = im.load()
    for y in range(h):
        for x in range(w):
            px[x, y] = (40 + (x * 150) // w, 40 + (y * 150) // h, 90)
    draw = ImageDraw.Draw(im)
    for a in annotations:
        if a["image_id"] != img["id"] or not isinstance(a["segmentation"], list):
            continue
        color = (230, 60, 60) if a["category_id"] == 1 else (60, 200, 230)
        for s in a["segmentation"]:
            draw.polygon(list(zip(s[0::2], s[1::2])), fill=color)
    path = os.path.join(OUT, "images", img["file_name"])
    if path.endswith(".jpg"):
        im.save(path, quality=95)
    else:
        im.save(path)
