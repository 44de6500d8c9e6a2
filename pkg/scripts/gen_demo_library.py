"""One-off generator for the default demonstration library.

Builds the demo scene graphs in code, serializes them with the canonical
grammar, and pairs them with hand-written exemplar responses. Run once;
the output JSON is frozen into src/sceneforge/resources/demo_library.json.
"""

import json
from pathlib import Path

from sceneforge.prompts import serialize_graph
from sceneforge.scene_graph import ObjectNode, Relation, SceneGraph

OUT = Path(__file__).resolve().parents[1] / "src" / "sceneforge" / "resources" / "demo_library.json"

living = SceneGraph(
    scene_id="demo_living",
    room_type="living room",
    nodes=(
        ObjectNode(1, "wall", ("white", "flat")),
        ObjectNode(2, "floor", ("wooden", "clean")),
        ObjectNode(3, "couch", ("red", "upholstered")),
        ObjectNode(4, "table", ("wooden", "low")),
        ObjectNode(5, "lamp", ("black", "tall")),
        ObjectNode(6, "pillow", ("soft", "square")),
    ),
    relations=(
        Relation(3, "standing on", 2),
        Relation(4, "in front of", 3),
        Relation(4, "standing on", 2),
        Relation(5, "to the left of", 3),
        Relation(6, "lying on", 3),
    ),
)

bedroom = SceneGraph(
    scene_id="demo_bedroom",
    room_type="bedroom",
    nodes=(
        ObjectNode(1, "wall", ("beige",)),
        ObjectNode(2, "floor", ("carpeted",)),
        ObjectNode(3, "bed", ("white", "tidy")),
        ObjectNode(4, "nightstand", ("wooden", "small")),
        ObjectNode(5, "lamp", ("warm", "small")),
        ObjectNode(6, "chair", ("blue", "padded")),
        ObjectNode(7, "chair", ("blue", "padded")),
    ),
    relations=(
        Relation(3, "standing on", 2),
        Relation(4, "to the right of", 3),
        Relation(5, "standing on", 4),
        Relation(6, "close to", 3),
        Relation(7, "behind", 6),
    ),
)

L = serialize_graph(living)
B = serialize_graph(bedroom)

demos = [
    {
        "task": "scene_caption",
        "content": L,
        "response": (
            "In this scene, a red upholstered couch stands on a clean wooden floor, "
            "with a soft square pillow lying on it. A low wooden table stands in front "
            "of the couch, and a tall black lamp stands to its left. The flat white "
            "wall frames the room, giving it a cozy feel for relaxing."
        ),
    },
    {
        "task": "scene_caption",
        "content": B,
        "response": (
            "This bedroom has a tidy white bed standing on a carpeted floor, with a "
            "small wooden nightstand to its right and a small warm lamp on the "
            "nightstand. Two blue padded chairs sit close to the bed, one behind the "
            "other. The beige wall gives the room a calm feel, suitable for sleep."
        ),
    },
    {
        "task": "object_caption",
        "content": L + "\nTarget: couch-3",
        "response": (
            "The couch is red and upholstered. It stands on the wooden floor, with a "
            "soft square pillow lying on it, a low wooden table in front of it, and a "
            "tall black lamp to its left."
        ),
    },
    {
        "task": "object_caption",
        "content": B + "\nTarget: nightstand-4",
        "response": (
            "The nightstand is wooden and small. It sits to the right of the white "
            "bed and supports a small warm lamp."
        ),
    },
    {
        "task": "qa",
        "content": B,
        "response": (
            "Question: How many chairs are in the room?\n"
            "Thoughts: chair-6, chair-7\n"
            "Answer: two\n"
            "\n"
            "Question: Is there a lamp in the room?\n"
            "Thoughts: lamp-5\n"
            "Answer: yes\n"
            "\n"
            "Question: What is the bed standing on?\n"
            "Thoughts: bed-3, floor-2\n"
            "Answer: the carpeted floor"
        ),
    },
    {
        "task": "qa",
        "content": L,
        "response": (
            "Question: How many lamps are in the room?\n"
            "Thoughts: lamp-5\n"
            "Answer: one\n"
            "\n"
            "Question: Is there a television in the room?\n"
            "Thoughts:\n"
            "Answer: no\n"
            "\n"
            "Question: Where is the pillow?\n"
            "Thoughts: pillow-6, couch-3\n"
            "Answer: lying on the couch"
        ),
    },
    {
        "task": "dialogue",
        "content": L,
        "response": (
            "Context: The user is relaxing in the living room and asks the assistant about it.\n"
            "USER: What color is the couch?\n"
            "Thoughts: couch-3\n"
            "ASSISTANT: The couch is red.\n"
            "USER: Is there a lamp in the room?\n"
            "Thoughts: lamp-5\n"
            "ASSISTANT: Yes, there is a lamp in the room. It is black and tall, to the left of the couch."
        ),
    },
    {
        "task": "dialogue",
        "content": B,
        "response": (
            "Context: The user is arranging the bedroom and asks the assistant for help.\n"
            "USER: How many chairs are in the room?\n"
            "Thoughts: chair-6, chair-7\n"
            "ASSISTANT: There are 2 chairs in the room.\n"
            "USER: Where is the lamp?\n"
            "Thoughts: lamp-5, nightstand-4\n"
            "ASSISTANT: The lamp is standing on the nightstand, to the right of the bed."
        ),
    },
    {
        "task": "planning",
        "content": L,
        "response": (
            "Task: Tidy up the living room.\n"
            "Plan:\n"
            "1. Fluff the pillow and place it neatly on the couch.\n"
            "2. Wipe the wooden table in front of the couch.\n"
            "3. Straighten the lamp to the left of the couch.\n"
            "4. Sweep the wooden floor.\n"
            "5. Check that the couch cushions are aligned."
        ),
    },
    {
        "task": "planning",
        "content": B,
        "response": (
            "Task: Prepare the bedroom for sleep.\n"
            "Plan:\n"
            "1. Straighten the white bed and smooth the covers.\n"
            "2. Move the two blue chairs neatly against the wall.\n"
            "3. Clear the nightstand to the right of the bed.\n"
            "4. Turn on the warm lamp on the nightstand.\n"
            "5. Dim the lamp once everything is in place."
        ),
    },
]

with OUT.open("w", encoding="utf-8") as fh:
    json.dump(demos, fh, indent=2, ensure_ascii=False)
    fh.write("\n")
print(f"wrote {len(demos)} demos to {OUT}")
