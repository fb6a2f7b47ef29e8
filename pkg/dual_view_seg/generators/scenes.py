"""Synthetic referring-segmentation scenes

Each scene holds a few flat-colored shapes on a noisy background. One of them
is the target; the expression names the smallest attribute set that tells it
apart from every distractor.
"""

from itertools import combinations
from logging import getLogger

import numpy as np
from PIL import Image, ImageDraw

from dual_view_seg.errors import SceneGenerationError
from dual_view_seg.models.sample import (
    COLORS,
    POSITION_PHRASES,
    POSITIONS,
    SIZES,
    Sample,
    SampleMeta,
    SceneObject,
    SceneSpec,
)

logger = getLogger(__name__)

ATTRIBUTES = ("size", "color", "shape", "position")
BAR_THICKNESS = 0.3


def _attribute_subsets() -> list[tuple[str, ...]]:
    """Shape-bearing attribute subsets, smallest first"""
    others = ("color", "size", "position")
    subsets: list[tuple[str, ...]] = []
    for k in range(len(others) + 1):
        for combo in combinations(others, k):
            subsets.append(tuple(a for a in ATTRIBUTES if a in combo or a == "shape"))
    return subsets


SUBSETS = _attribute_subsets()


def position_tag(center: tuple[int, int], side: int) -> str:
    """3x3 grid cell of a point, as one of the nine position tags"""
    col = min(2, 3 * center[0] // side)
    row = min(2, 3 * center[1] // side)
    return POSITIONS[3 * row + col]


def describe(target: SceneObject, attributes: tuple[str, ...]) -> str:
    """Render the expression template over the chosen attributes"""
    words = ["the"]
    if "size" in attributes:
        words.append(target.size)
    if "color" in attributes:
        words.append(target.color)
    words.append(target.shape)
    if "position" in attributes:
        words.append(POSITION_PHRASES[target.position])
    return " ".join(words)


def discriminating_attributes(
    target: SceneObject, distractors: list[SceneObject]
) -> tuple[str, ...] | None:
    """Smallest attribute subset matching the target and no distractor"""
    for subset in SUBSETS:
        if not any(
            all(d.attribute(a) == target.attribute(a) for a in subset)
            for d in distractors
        ):
            return subset
    return None


def resolve_expression(expression: str, objects: list[SceneObject]) -> list[int]:
    """Indices of the objects an expression refers to"""
    words = expression.lower().split()
    wanted: dict[str, str] = {}
    for word in words:
        if word in COLORS:
            wanted["color"] = word
        elif word in SIZES:
            wanted["size"] = word
        elif any(o.shape == word for o in objects):
            wanted["shape"] = word
    for tag, phrase in POSITION_PHRASES.items():
        if expression.lower().endswith(phrase):
            wanted["position"] = tag
    return [
        i
        for i, obj in enumerate(objects)
        if all(obj.attribute(a) == v for a, v in wanted.items())
    ]


def _outline(obj: SceneObject) -> list[tuple[float, float]] | tuple[float, ...]:
    x, y = obj.center
    r = obj.radius
    if obj.shape == "triangle":
        return [(x, y - r), (x + r, y + r), (x - r, y + r)]
    if obj.shape == "diamond":
        return [(x, y - r), (x + r, y), (x, y + r), (x - r, y)]
    if obj.shape == "bar":
        t = max(2.0, r * BAR_THICKNESS)
        if obj.vertical:
            return (x - t, y - r, x + t, y + r)
        return (x - r, y - t, x + r, y + t)
    return (x - r, y - r, x + r, y + r)


def draw_object(draw: ImageDraw.ImageDraw, obj: SceneObject, fill: int | tuple) -> None:
    outline = _outline(obj)
    if obj.shape == "circle":
        draw.ellipse(outline, fill=fill)
    elif obj.shape in ("triangle", "diamond"):
        draw.polygon(outline, fill=fill)
    else:
        draw.rectangle(outline, fill=fill)


class SceneGenerator:
    """Place, describe and render synthetic scenes"""

    def __init__(self, spec: SceneSpec):
        self.spec = spec

    def _radius(self, rng: np.random.Generator, size: str) -> int:
        low, high = self.spec.radius_fraction[size]
        radius = rng.uniform(low, high) * self.spec.image_side
        return max(self.spec.min_radius_px, int(round(radius)))

    def _random_object(self, rng: np.random.Generator, size: str) -> SceneObject:
        return SceneObject(
            shape=str(rng.choice(self.spec.shapes)),
            color=str(rng.choice(self.spec.colors)),
            size=size,
            position="center",
            center=(0, 0),
            radius=self._radius(rng, size),
            vertical=bool(rng.integers(2)),
        )

    def _place(
        self, rng: np.random.Generator, obj: SceneObject, placed: list[SceneObject]
    ) -> SceneObject | None:
        side = self.spec.image_side
        margin = obj.radius + 1
        if 2 * margin >= side:
            return None
        for _ in range(self.spec.max_attempts):
            x = int(rng.integers(margin, side - margin))
            y = int(rng.integers(margin, side - margin))
            if all(
                max(abs(x - p.center[0]), abs(y - p.center[1]))
                > obj.radius + p.radius + 2
                for p in placed
            ):
                return obj.model_copy(
                    update={"center": (x, y), "position": position_tag((x, y), side)}
                )
        return None

    def layout(
        self, rng: np.random.Generator
    ) -> tuple[list[SceneObject], tuple[str, ...]]:
        """Place objects (target first) and pick its discriminating attributes"""
        spec = self.spec
        n_objects = int(rng.integers(spec.min_objects, spec.max_objects + 1))
        target_size = "small" if rng.random() < spec.tiny_fraction else str(
            rng.choice(SIZES[1:])
        )
        target = self._place(rng, self._random_object(rng, target_size), [])
        if target is None:
            raise SceneGenerationError(
                f"cannot place a {target_size} target "
                f"inside a {spec.image_side}px image"
            )

        objects = [target]
        for _ in range(n_objects - 1):
            for _ in range(spec.max_attempts):
                candidate = self._random_object(rng, str(rng.choice(SIZES)))
                placed = self._place(rng, candidate, objects)
                if placed is None:
                    continue
                if discriminating_attributes(target, objects[1:] + [placed]) is None:
                    continue
                objects.append(placed)
                break
            else:
                raise SceneGenerationError(
                    f"cannot place {n_objects} objects without overlap while keeping "
                    "the target uniquely describable"
                )

        attributes = discriminating_attributes(target, objects[1:])
        assert attributes is not None
        return objects, attributes

    def render(
        self, rng: np.random.Generator, objects: list[SceneObject]
    ) -> tuple[np.ndarray, np.ndarray]:
        """Rasterize the scene and the target mask (objects[0])"""
        side = self.spec.image_side
        base = rng.integers(70, 130, size=(side, side, 1))
        noise = rng.integers(-12, 13, size=(side, side, 3))
        canvas = Image.fromarray(np.clip(base + noise, 0, 255).astype(np.uint8))
        draw = ImageDraw.Draw(canvas)
        for obj in objects:
            draw_object(draw, obj, COLORS[obj.color])

        mask_img = Image.new("L", (side, side), 0)
        draw_object(ImageDraw.Draw(mask_img), objects[0], 1)
        image = np.asarray(canvas, dtype=np.uint8).copy()
        return image, np.asarray(mask_img, dtype=np.uint8).copy()

    def generate(self, seed: int, sample_id: str | None = None) -> Sample:
        rng = np.random.default_rng(seed)
        objects, attributes = self.layout(rng)
        target = objects[0]
        expression = describe(target, attributes)

        if resolve_expression(expression, objects) != [0]:
            raise SceneGenerationError(
                f"expression '{expression}' does not select exactly the target"
            )

        image, mask = self.render(rng, objects)
        logger.debug(f"Scene {seed}: {len(objects)} objects, target '{expression}'")
        return Sample(
            sample_id=sample_id or f"synth_{seed:06d}",
            image=image,
            mask=mask,
            expression=expression,
            meta=SampleMeta(
                category=target.shape,
                size_class=target.size_class,
                position=target.position,
                objects=objects,
                target_index=0,
            ),
        )


def generate_sample(seed: int, scene_spec: SceneSpec | None = None) -> Sample:
    """Generate one deterministic synthetic sample"""
    return SceneGenerator(scene_spec or SceneSpec()).generate(seed)
