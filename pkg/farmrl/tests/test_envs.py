from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest
from pydantic import ValidationError

from farmrl.enums import BalletAction, BalletVariant, Color, EnvName, EventTag, GridAction, KeyBoxSetting, ObjectKind
from farmrl.envs import (
    MOTION_PROGRAMS,
    AbstractMDPEnv,
    AbstractMDPSampler,
    BalletEnv,
    ChanceBalletPolicy,
    EnvConfig,
    EpisodeDoneError,
    EpisodeLogger,
    EpisodeRecord,
    GridWorld,
    KeyBoxEnv,
    LevelGenerationError,
    PutNextEnv,
    RandomPolicy,
    WorldObject,
    dance_phase_length,
    generate_placements,
    instruction_vocabulary,
    level_budget,
    level_reward,
    make_env,
    read_episode_log,
)
from farmrl.envs.episode_log import frame_path
from farmrl.envs.grid import DIRECTIONS, NORTH, Position, neighbors4
from farmrl.envs.keybox import hallway_shape, subsection_cells
from farmrl.envs.motions import DANCE_STEPS
from farmrl.nets import UNK_ID


def face(world: GridWorld, target: Position) -> None:
    """Moves the agent onto a free cell next to target, looking at it."""
    for direction, (dx, dy) in enumerate(DIRECTIONS):
        cell = (target[0] - dx, target[1] - dy)
        if world.is_empty(cell):
            world.agent_pos = cell
            world.agent_dir = direction
            return
    raise AssertionError(f"No free cell next to {target}.")


def carry_goal_key_to_box(env: KeyBoxEnv) -> None:
    world = env.require_world()
    world.remove(env.key_pos)
    world.carrying = WorldObject(kind=ObjectKind.KEY, color=env.goal_color)
    face(world, env.box_pos)


def assert_chance_level(dancers: int, episodes: int) -> None:
    """The chance policy's success rate lies within 3 binomial standard deviations of 1/dancers."""
    env = BalletEnv(dancers, render=False)
    policy = ChanceBalletPolicy(seed=11)
    successes = 0
    for seed in range(episodes):
        env.reset(seed)
        policy.begin_episode(env)
        result = env.step(policy.act(env))
        while not result.done:
            result = env.step(policy.act(env))
        successes += int(bool(result.info.success))
    p = 1.0 / dancers
    sigma = np.sqrt(p * (1 - p) / episodes)
    assert abs(successes / episodes - p) <= 3 * sigma


class TestKeyBoxRules:
    def test_reward_and_budget(self) -> None:
        assert [level_reward(n) for n in (1, 5, 10, 12)] == [0.1, 0.5, 1.0, 1.0]
        assert level_budget(3) == 150

    def test_hallway_layout(self) -> None:
        assert hallway_shape(1, 3) == (5, 5)
        assert hallway_shape(3, 5) == (19, 7)
        assert subsection_cells(1, 3)[0] == (5, 1)

    def test_level_contents(self) -> None:
        env = KeyBoxEnv(KeyBoxSetting.DENSE, level=3, render=False)
        env.reset(seed=4)
        world = env.require_world()
        assert (world.width, world.height) == hallway_shape(3, 3)
        assert env.key_pos in subsection_cells(2, 3)
        assert env.box_pos in subsection_cells(0, 3)
        assert world.agent_pos in subsection_cells(0, 3)
        goal_keys = [
            p for p, o in world.objects(ObjectKind.KEY) if o.color == env.goal_color
        ]
        assert goal_keys == [env.key_pos]
        # Two distractors per subsection, plus the goal key.
        assert len(world.objects(ObjectKind.BALL)) + len(world.objects(ObjectKind.KEY)) == 3 * 2 + 1

    def test_timeout_after_budget(self) -> None:
        env = KeyBoxEnv(level=1, render=False)
        env.reset(seed=0)
        for _ in range(49):
            assert not env.step(GridAction.DONE).done
        result = env.step(GridAction.DONE)
        assert result.done
        assert result.info.success is False
        assert env.n_done == 1
        with pytest.raises(EpisodeDoneError):
            env.step(GridAction.DONE)

    def test_completing_final_level_ends_episode(self) -> None:
        env = KeyBoxEnv(level=1, max_level=1, render=False)
        env.reset(seed=2)
        carry_goal_key_to_box(env)
        result = env.step(GridAction.TOGGLE)
        assert result.reward == pytest.approx(0.1)
        assert result.done
        assert result.info.success is True

    def test_completing_a_level_moves_on(self) -> None:
        env = KeyBoxEnv(level=2, max_level=5, render=False)
        env.reset(seed=2)
        carry_goal_key_to_box(env)
        result = env.step(GridAction.TOGGLE)
        assert result.reward == pytest.approx(0.2)
        assert not result.done
        assert result.info.level == 3
        assert env.level_steps == 0
        assert env.require_world().width == hallway_shape(3, 3)[0]
        assert env.require_world().carrying is None

    def test_toggle_needs_matching_key(self) -> None:
        env = KeyBoxEnv(level=1, max_level=1, render=False)
        env.reset(seed=2)
        world = env.require_world()
        wrong = next(c for c in Color if c != env.goal_color)
        world.carrying = WorldObject(kind=ObjectKind.KEY, color=wrong)
        face(world, env.box_pos)
        result = env.step(GridAction.TOGGLE)
        assert result.reward == 0.0
        assert not result.done

    def test_inventory_events(self) -> None:
        env = KeyBoxEnv(level=1, max_level=1, render=False)
        env.reset(seed=5)
        world = env.require_world()
        face(world, env.key_pos)
        assert env.step(GridAction.PICKUP).info.event_tags == [EventTag.PICKUP_CORRECT_KEY]
        assert env.step(GridAction.DROP).info.event_tags == [EventTag.DROP_CORRECT_KEY]

        wrong = next(c for c in Color if c != env.goal_color)
        world.remove(env.key_pos)
        world.place(env.key_pos, WorldObject(kind=ObjectKind.KEY, color=wrong))
        assert env.step(GridAction.PICKUP).info.event_tags == [EventTag.PICKUP_WRONG_KEY]
        assert env.step(GridAction.DROP).info.event_tags == [EventTag.DROP_WRONG_KEY]

        world.remove(env.key_pos)
        world.place(env.key_pos, WorldObject(kind=ObjectKind.BALL, color=env.goal_color))
        assert env.step(GridAction.PICKUP).info.event_tags == [EventTag.PICKUP_BALL]
        assert env.step(GridAction.DROP).info.event_tags == [EventTag.DROP_BALL]

    def test_boxes_cannot_be_carried(self) -> None:
        env = KeyBoxEnv(level=1, render=False)
        env.reset(seed=5)
        face(env.require_world(), env.box_pos)
        result = env.step(GridAction.PICKUP)
        assert result.info.event_tags == []
        assert env.require_world().carrying is None

    def test_invalid_action(self) -> None:
        env = KeyBoxEnv(level=1, render=False)
        env.reset(seed=0)
        with pytest.raises(ValueError, match="outside"):
            env.step(7)

    def test_generation_gives_up(self) -> None:
        env = KeyBoxEnv(level=1, render=False)
        with patch.object(KeyBoxEnv, "_subsection_open", return_value=False) as check:
            with pytest.raises(LevelGenerationError, match="subsection 0 still cut off after 100 attempts"):
                env.reset(seed=0)
        assert check.call_count == 100

    @pytest.mark.parametrize("setting", list(KeyBoxSetting))
    @pytest.mark.parametrize("level", [10, 20, 30])
    def test_long_hallways_are_solvable(self, setting: KeyBoxSetting, level: int) -> None:
        env = KeyBoxEnv(setting, level=level, render=False)
        for seed in range(10):
            env.reset(seed)
            world = env.require_world()
            assert (world.width, world.height) == hallway_shape(level, setting.width)
            reachable = world.reachable(world.agent_pos)
            for target in (env.box_pos, env.key_pos):
                assert any(world.is_empty(n) and n in reachable for n in neighbors4(target))
            distractors = len(world.objects(ObjectKind.BALL)) + len(world.objects(ObjectKind.KEY)) - 1
            assert distractors == level * setting.distractors

    def test_completing_level_nine_enters_level_ten(self) -> None:
        env = KeyBoxEnv(KeyBoxSetting.DENSE, level=9, render=False)
        for seed in range(5):
            env.reset(seed)
            carry_goal_key_to_box(env)
            result = env.step(GridAction.TOGGLE)
            assert result.info.level == 10
            assert not result.done


class TestKeyBoxCurriculum:
    def test_dense_restarts_up_to_last_level(self) -> None:
        env = KeyBoxEnv(KeyBoxSetting.DENSE, render=False)
        env.n_done = 4
        starts = set()
        for seed in range(60):
            env.n_done = 4
            env.reset(seed)
            starts.add(env.start_level)
        assert starts == {1, 2, 3, 4}

    def test_sparse_always_starts_at_one(self) -> None:
        env = KeyBoxEnv(KeyBoxSetting.SPARSE, render=False)
        for seed in range(10):
            env.n_done = 6
            env.reset(seed)
            assert env.start_level == 1

    def test_final_level_covers_start(self) -> None:
        env = KeyBoxEnv(level=12, render=False)
        env.reset(seed=0)
        assert env.final_level == 12
        env = KeyBoxEnv(level=2, render=False)
        env.reset(seed=0)
        assert env.final_level == 10

    def test_episode_end_records_level(self) -> None:
        env = KeyBoxEnv(KeyBoxSetting.DENSE, level=3, render=False)
        env.reset(seed=0)
        while not env.step(GridAction.DONE).done:
            pass
        assert env.n_done == 3


class TestBallet:
    @pytest.mark.parametrize(
        "dancers,variant,length",
        [
            (2, BalletVariant.SEQUENTIAL, 80),
            (4, BalletVariant.SEQUENTIAL, 208),
            (8, BalletVariant.SEQUENTIAL, 464),
            (8, BalletVariant.PARALLEL, 16),
        ],
    )
    def test_dance_phase_length(self, dancers: int, variant: BalletVariant, length: int) -> None:
        assert dance_phase_length(dancers, variant) == length

    def test_instruction_appears_after_dance(self) -> None:
        env = BalletEnv(2, render=False)
        result = env.reset(seed=1)
        assert result.task_tokens == []
        assert result.info.phase == "dance"
        for _ in range(79):
            result = env.step(BalletAction.NOOP)
            assert result.task_tokens == []
            assert result.reward == 0.0
        result = env.step(BalletAction.NOOP)
        assert result.info.phase == "instruction"
        assert result.task_tokens == env.target_dancer.program.tokens

    def test_agent_stays_in_center_block_during_dance(self) -> None:
        env = BalletEnv(2, render=False)
        env.reset(seed=0)
        for _ in range(5):
            env.step(BalletAction.LEFT)
        assert env.require_world().agent_pos == (3, 4)
        for _ in range(5):
            env.step(BalletAction.UP)
        assert env.require_world().agent_pos == (3, 3)

    def test_dancers_stay_in_their_blocks(self) -> None:
        env = BalletEnv(4, render=False)
        env.reset(seed=3)
        while not env.in_instruction_phase:
            for dancer in env.dancers:
                x, y = dancer.position_at(env.t)
                assert abs(x - dancer.anchor[0]) <= 1 and abs(y - dancer.anchor[1]) <= 1
            env.step(BalletAction.NOOP)
        assert [dancer.position_at(env.t) for dancer in env.dancers] == [d.anchor for d in env.dancers]

    def test_sequential_dancers_take_turns(self) -> None:
        env = BalletEnv(2, render=False)
        env.reset(seed=0)
        first, second = env.dancers
        assert (first.start, second.start) == (0, 64)
        assert all(second.position_at(t) == second.anchor for t in range(0, 64))

    def test_reaching_target_pays_one(self) -> None:
        env = BalletEnv(2, render=False)
        policy = ChanceBalletPolicy(seed=0)
        env.reset(seed=7)
        policy.begin_episode(env)
        policy.choice = env.target
        result = env.step(policy.act(env))
        while not result.done:
            result = env.step(policy.act(env))
        assert result.reward == 1.0
        assert result.info.success is True

    def test_wrong_dancer_pays_zero(self) -> None:
        env = BalletEnv(2, render=False)
        policy = ChanceBalletPolicy(seed=0)
        env.reset(seed=7)
        policy.begin_episode(env)
        policy.choice = 1 - env.target
        result = env.step(policy.act(env))
        while not result.done:
            result = env.step(policy.act(env))
        assert result.reward == 0.0
        assert result.info.success is False

    def test_timeout(self) -> None:
        env = BalletEnv(2, instruction_steps=5, render=False)
        env.reset(seed=0)
        steps = 0
        result = env.step(BalletAction.NOOP)
        steps += 1
        while not result.done:
            result = env.step(BalletAction.NOOP)
            steps += 1
        assert steps == 80 + 5
        assert result.info.success is False

    def test_observation_shape(self) -> None:
        env = BalletEnv(2)
        assert env.reset(seed=0).observation.shape == (99, 99, 3)  # type: ignore[union-attr]

    def test_chance_policy_needs_ballet(self) -> None:
        env = KeyBoxEnv(level=1, render=False)
        env.reset(seed=0)
        with pytest.raises(TypeError):
            ChanceBalletPolicy().begin_episode(env)

    @pytest.mark.parametrize("dancers,episodes", [(2, 600), (4, 400), (8, 300)])
    def test_chance_policy_near_chance_level(self, dancers: int, episodes: int) -> None:
        assert_chance_level(dancers, episodes)

    @pytest.mark.slow
    @pytest.mark.parametrize("dancers", [2, 4, 8])
    def test_chance_policy_matches_chance_level(self, dancers: int) -> None:
        assert_chance_level(dancers, 10_000)


class TestMotionPrograms:
    def test_fifteen_closed_sixteen_step_loops(self) -> None:
        assert [program.id for program in MOTION_PROGRAMS] == list(range(15))
        for program in MOTION_PROGRAMS:
            assert len(program.displacements) == DANCE_STEPS == 16
            assert program.offsets[0] == program.offsets[-1] == (0, 0)
            assert tuple(map(sum, zip(*program.displacements))) == (0, 0)

    def test_steps_are_unit_moves_inside_the_block(self) -> None:
        for program in MOTION_PROGRAMS:
            assert all(max(abs(dx), abs(dy)) == 1 for dx, dy in program.displacements), program.name
            assert all(abs(x) <= 1 and abs(y) <= 1 for x, y in program.offsets), program.name

    def test_programs_are_pairwise_distinct(self) -> None:
        sequences = {tuple(program.displacements) for program in MOTION_PROGRAMS}
        assert len(sequences) == len(MOTION_PROGRAMS)
        assert len({program.name for program in MOTION_PROGRAMS}) == len(MOTION_PROGRAMS)

    def test_parallel_dancers_have_distinct_programs(self) -> None:
        env = BalletEnv(8, BalletVariant.PARALLEL, render=False)
        env.reset(seed=3)
        assert len({dancer.program.id for dancer in env.dancers}) == 8
        for _ in range(DANCE_STEPS):
            env.step(BalletAction.NOOP)
            positions = [p for p, _ in env.require_world().objects(ObjectKind.DANCER)]
            assert len(positions) == 8
            for dancer in env.dancers:
                x, y = dancer.position_at(env.t)
                assert (x, y) in positions
                assert abs(x - dancer.anchor[0]) <= 1 and abs(y - dancer.anchor[1]) <= 1

    def test_anchor_outside_the_dance(self) -> None:
        program = MOTION_PROGRAMS[0]
        assert program.offset_at(-1) == program.offset_at(DANCE_STEPS + 1) == (0, 0)


class TestPutNext:
    def test_instruction(self) -> None:
        env = PutNextEnv(4, render=False)
        result = env.reset(seed=0)
        assert len(result.task_tokens) == 8
        assert result.task_tokens[:2] == ["put", "the"]
        assert result.task_tokens[2:4] == [str(env.x_object.color), str(env.x_object.kind)]
        assert result.task_tokens[-2:] == [str(env.y_object.color), str(env.y_object.kind)]
        assert env.x_object.descriptor != env.y_object.descriptor
        assert len([o for _, o in env.require_world().cells.items() if o.kind != ObjectKind.WALL]) == 6

    def _room_with_y(self, env: PutNextEnv) -> GridWorld:
        world = GridWorld(8, 8)
        world.agent_pos = (-1, -1)
        world.wall_rect(0, 0, 8, 8)
        world.place((3, 3), env.y_object)
        world.agent_pos = (1, 3)
        world.agent_dir = 0
        env.world = world
        return world

    def test_dropping_x_next_to_y_succeeds(self) -> None:
        env = PutNextEnv(0, render=False)
        env.reset(seed=1)
        world = self._room_with_y(env)
        world.carrying = env.x_object
        result = env.step(GridAction.DROP)
        assert result.reward == 1.0
        assert result.done
        assert result.info.success is True

    def test_dropping_other_object_does_nothing(self) -> None:
        env = PutNextEnv(0, render=False)
        env.reset(seed=1)
        world = self._room_with_y(env)
        world.carrying = env.y_object
        result = env.step(GridAction.DROP)
        assert result.reward == 0.0
        assert not result.done

    def test_timeout(self) -> None:
        env = PutNextEnv(0, max_steps=6, render=False)
        env.reset(seed=0)
        results = [env.step(GridAction.LEFT) for _ in range(6)]
        assert [r.done for r in results] == [False] * 5 + [True]

    def test_distractor_bounds(self) -> None:
        with pytest.raises(ValueError):
            PutNextEnv(33)
        PutNextEnv(32, render=False).reset(seed=0)


class TestAbstractMDP:
    def test_placements_are_distinct_and_seeded(self) -> None:
        placements = generate_placements(0)
        assert len(placements) == 20
        assert len({frozenset(p.cells) for p in placements}) == 20
        assert placements == generate_placements(0)
        assert placements != generate_placements(1)
        assert all((2, 2) not in p.cells for p in placements)

    def test_start_pose_and_cells(self) -> None:
        env = AbstractMDPEnv(render=False)
        result = env.reset(seed=3, mdp_id=5)
        world = env.require_world()
        assert world.agent_pos == (2, 2)
        assert world.agent_dir == NORTH
        assert result.info.mdp_id == 5
        assert env.occupied_cells() == frozenset(env.placement.cells)

    def test_object_identity_changes_between_episodes(self) -> None:
        env = AbstractMDPEnv(render=False)
        looks = set()
        for seed in range(10):
            env.reset(seed=seed, mdp_id=0)
            looks.add(tuple(o.descriptor for _, o in env.require_world().objects() if o.kind != ObjectKind.WALL))
            assert env.occupied_cells() == frozenset(env.placement.cells)
        assert len(looks) > 1

    @staticmethod
    def pickup(slot: int) -> float:
        """Picks up the object in the given placement slot of the first placement that leaves it reachable."""
        env = AbstractMDPEnv(render=False)
        for mdp_id in range(20):
            env.reset(seed=0, mdp_id=mdp_id)
            try:
                face(env.require_world(), env.placement.cells[slot])
            except AssertionError:
                continue
            result = env.step(GridAction.PICKUP)
            assert result.done
            return result.reward
        raise AssertionError(f"No placement left slot {slot} reachable.")

    def test_goal_pickup(self) -> None:
        assert self.pickup(0) == 1.0

    def test_other_pickup_ends_without_reward(self) -> None:
        assert self.pickup(1) == 0.0
    def test_sixteen_step_limit(self) -> None:
        env = AbstractMDPEnv(render=False)
        env.reset(seed=0)
        results = [env.step(GridAction.LEFT) for _ in range(16)]
        assert results[-1].done and not results[-2].done

    def test_bad_mdp_id(self) -> None:
        with pytest.raises(ValueError):
            AbstractMDPEnv(render=False).reset(seed=0, mdp_id=20)

    def test_sampler_round_robin(self) -> None:
        specs = list(AbstractMDPSampler(45, seed=3))
        assert [s.mdp_id for s in specs] == [k % 20 for k in range(45)]
        assert len({s.seed for s in specs}) == 45
        assert specs == list(AbstractMDPSampler(45, seed=3))


class TestFactory:
    @pytest.mark.parametrize(
        "name,cls,size",
        [
            (EnvName.BALLET, BalletEnv, 99),
            (EnvName.KEYBOX, KeyBoxEnv, 56),
            (EnvName.PUTNEXT, PutNextEnv, 56),
            (EnvName.ABSTRACT_MDP, AbstractMDPEnv, 56),
        ],
    )
    def test_make_env(self, name: EnvName, cls: type, size: int) -> None:
        config = EnvConfig(name=name)
        env = make_env(config)
        assert isinstance(env, cls)
        assert config.image_size == size
        assert env.num_actions == config.num_actions
        assert env.reset(seed=0).observation.shape == (size, size, 3)  # type: ignore[union-attr]

    def test_invalid_dancers(self) -> None:
        with pytest.raises(ValidationError, match="dancers"):
            EnvConfig(name=EnvName.BALLET, dancers=3)

    def test_vocabulary_covers_every_instruction(self) -> None:
        vocab = instruction_vocabulary()
        assert len(vocab) == 31
        for seed in range(20):
            env = PutNextEnv(2, render=False)
            assert UNK_ID not in vocab.encode(env.reset(seed).task_tokens)
        ballet = BalletEnv(8, variant=BalletVariant.PARALLEL, render=False)
        ballet.reset(seed=0)
        for dancer in ballet.dancers:
            assert UNK_ID not in vocab.encode(dancer.program.tokens)

    @pytest.mark.parametrize("name", list(EnvName))
    def test_same_seed_same_episode(self, name: EnvName) -> None:
        config = EnvConfig(name=name, level=2 if name == EnvName.KEYBOX else None)
        a, b = make_env(config), make_env(config)
        actions = RandomPolicy(seed=4)
        ra, rb = a.reset(seed=9), b.reset(seed=9)
        for _ in range(30):
            assert ra.observation is not None and rb.observation is not None
            np.testing.assert_array_equal(ra.observation, rb.observation)
            assert ra.task_tokens == rb.task_tokens
            if ra.done:
                break
            action = actions.act(a)
            ra, rb = a.step(action), b.step(action)
            assert (ra.reward, ra.done) == (rb.reward, rb.done)

    def test_render_text(self) -> None:
        env = KeyBoxEnv(level=1, render=False)
        with pytest.raises(RuntimeError, match="reset"):
            env.render_text()
        env.reset(seed=0)
        lines = env.render_text().splitlines()
        assert len(lines) == 5
        assert lines[0] == "#####"
        assert env.observe() is None


class TestEpisodeLog:
    def test_round_trip_with_frames(self, tmp_path: Path) -> None:
        env = KeyBoxEnv(level=1)
        first = env.reset(seed=0)
        with EpisodeLogger(tmp_path / "episodes.jsonl", frames_dir=tmp_path / "frames") as log:
            log.write_frame(0, 0, first.observation)  # type: ignore[arg-type]
            result = env.step(GridAction.FORWARD)
            record = EpisodeRecord(
                episode_id=0, t=1, level=1, action=2, reward=result.reward, done=result.done, event_tags=[]
            )
            log.write(record, result.observation)
        records = read_episode_log(tmp_path / "episodes.jsonl")
        assert records == [record]
        frame = np.load(frame_path(tmp_path / "frames", 0, 1))
        assert frame.shape == (56, 56, 3) and frame.dtype == np.uint8
        assert frame_path(tmp_path / "frames", 0, 0).exists()

    def test_invalid_line_reports_position(self, tmp_path: Path) -> None:
        path = tmp_path / "episodes.jsonl"
        path.write_text('{"episode_id": 0, "t": 1, "action": 2, "reward": 0.0, "done": false}\n{"t": "x"}\n')
        with pytest.raises(ValueError, match="episodes.jsonl:2"):
            read_episode_log(path)
