"""BabyAI-style movement and inventory rules shared by the egocentric grid tasks."""

from pydantic import BaseModel, ConfigDict

from farmrl.enums import GridAction, ObjectKind
from farmrl.envs.grid import GridWorld, Position, WorldObject

PICKABLE = frozenset({ObjectKind.BALL, ObjectKind.KEY, ObjectKind.BOX})


class Interaction(BaseModel):
    """
    What an action did to the world.

    Attributes
    ----------
    picked_up : WorldObject | None
        Object that moved into the agent's hands.
    dropped : WorldObject | None
        Object the agent put down.
    dropped_at : Position | None
        Cell it was put down in.
    toggled : WorldObject | None
        Object in front of the agent when toggling.
    """

    model_config = ConfigDict(frozen=True)

    picked_up: WorldObject | None = None
    picked_from: Position | None = None
    dropped: WorldObject | None = None
    dropped_at: Position | None = None
    toggled: WorldObject | None = None


def apply_action(
    world: GridWorld, action: GridAction, pickable: frozenset[ObjectKind] = PICKABLE
) -> Interaction:
    """Turns, moves into free cells, and picks up or drops objects in the cell ahead. DONE does nothing."""
    front = world.front_pos
    if action == GridAction.LEFT:
        world.agent_dir = (world.agent_dir - 1) % 4
    elif action == GridAction.RIGHT:
        world.agent_dir = (world.agent_dir + 1) % 4
    elif action == GridAction.FORWARD:
        if world.is_empty(front):
            world.agent_pos = front
    elif action == GridAction.PICKUP:
        obj = world.get(front)
        if world.carrying is None and obj is not None and obj.kind in pickable:
            world.carrying = world.remove(front)
            return Interaction(picked_up=obj, picked_from=front)
    elif action == GridAction.DROP:
        if world.carrying is not None and world.is_empty(front):
            obj = world.carrying
            world.place(front, obj)
            world.carrying = None
            return Interaction(dropped=obj, dropped_at=front)
    elif action == GridAction.TOGGLE:
        return Interaction(toggled=world.get(front))
    return Interaction()
