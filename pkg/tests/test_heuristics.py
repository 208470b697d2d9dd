import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_board
from oracles import bfs_first_step
from hillsnake.engine import (
    ACTIONS,
    Action,
    ConfigurationError,
    GameConfig,
    init_game,
    is_terminal,
    step,
    step_coord,
)
from hillsnake.heuristics import (
    HeuristicConfig,
    Mode,
    Rule,
    RuleMask,
    apply_mask,
    combine_masks,
    mask_for,
    mask_forbidden,
    mask_walls,
    overwrite_action,
    promote_food,
    promote_kill,
    training_mask,
)

U, D, L, R = Action.UP, Action.DOWN, Action.LEFT, Action.RIGHT


def one_snake(head, facing=None, health=50, size=11, body=None, food=((0, 0),)):
    body = body or [head, head, head]
    return make_board(size, size, [(1, body, health, facing)], food=food)


def test_walls_corner():
    assert mask_walls(one_snake((0, 0)), 1).valid == (0, 1, 0, 1)


def test_walls_center():
    assert mask_walls(one_snake((5, 5)), 1).valid == (1, 1, 1, 1)


def test_walls_right_edge():
    assert mask_walls(one_snake((10, 5)), 1).valid == (1, 1, 1, 0)


@pytest.mark.parametrize(
    "facing,expected",
    [(U, (1, 0, 1, 1)), (None, (1, 1, 1, 1)), (L, (1, 1, 1, 0)), (R, (1, 1, 0, 1)), (D, (0, 1, 1, 1))],
)
def test_forbidden(facing, expected):
    assert mask_forbidden(one_snake((5, 5), facing), 1).valid == expected


def test_food_adjacent_left():
    board = one_snake((5, 5), U, health=10, body=[(5, 5), (5, 6), (5, 7)], food=[(4, 5)])
    m = promote_food(board, 1, 30)
    assert m.preferred == L and m.valid == (1, 1, 1, 1)


def test_food_not_hungry():
    board = one_snake((5, 5), U, health=90, body=[(5, 5), (5, 6), (5, 7)], food=[(4, 5)])
    assert promote_food(board, 1, 30).preferred is None


def test_food_unreachable():
    # snake 2 walls off the corner holding the food
    board = make_board(
        7, 7,
        [(1, [(5, 5), (5, 6), (6, 6)], 5, U),
         (2, [(1, 0), (1, 1), (0, 1)], 50, R)],
        food=[(0, 0)],
    )
    assert promote_food(board, 1, 30).preferred is None


def test_food_path_around_body_wall_matches_oracle():
    wall = [(3, y) for y in range(0, 6)]
    board = make_board(
        7, 7,
        [(1, [(1, 3), (1, 4), (1, 5)], 5, U),
         (2, wall, 50, U)],
        food=[(5, 1)],
    )
    m = promote_food(board, 1, 30)
    blocked = {(c.x, c.y) for s in board.snakes for c in s.body}
    expected = bfs_first_step(7, 7, (1, 3), {(5, 1)}, blocked)
    assert expected is not None
    assert m.preferred == expected


def random_board(seed, turns, size=7, n=4):
    rnd = np.random.default_rng(seed)
    board = init_game(GameConfig(size, size, n, seed=seed, food_spawn_probability=0.5))
    for _ in range(turns):
        if is_terminal(board) is not None:
            break
        board, _ = step(board, {s.id: int(rnd.integers(4)) for s in board.living})
    return board


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 25))
def test_food_bfs_matches_oracle(seed, turns):
    board = random_board(seed, turns)
    blocked = {(c.x, c.y) for s in board.snakes if s.alive for c in s.body}
    food = {(c.x, c.y) for c in board.food}
    for s in board.living:
        s.health = 5
        expected = bfs_first_step(board.width, board.height, tuple(s.head), food, blocked)
        got = promote_food(board, s.id, 30).preferred
        assert got == (None if expected is None else Action(expected))


def test_kill_promotion_longer_snake():
    board = make_board(
        11, 11,
        [(1, [(3, 5), (2, 5), (1, 5), (0, 5), (0, 4)], 50, R),
         (2, [(5, 5), (6, 5), (7, 5)], 50, L)],
    )
    assert promote_kill(board, 1).preferred == R


def test_kill_promotion_equal_length():
    board = make_board(
        11, 11,
        [(1, [(3, 5), (2, 5), (1, 5)], 50, R),
         (2, [(5, 5), (6, 5), (7, 5)], 50, L)],
    )
    assert promote_kill(board, 1).preferred is None


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 30))
def test_kill_promotion_targets_shorter_head(seed, turns):
    board = random_board(seed, turns)
    for s in board.living:
        pref = promote_kill(board, s.id).preferred
        if pref is None:
            continue
        target = step_coord(s.head, pref)
        assert board.in_bounds(target)
        assert any(
            o.alive and o.id != s.id and o.length < s.length
            and abs(o.head.x - target.x) + abs(o.head.y - target.y) == 1
            and abs(o.head.x - s.head.x) + abs(o.head.y - s.head.y) == 2
            for o in board.snakes
        )


def test_combine_masks():
    walls = RuleMask((0, 1, 1, 1))
    forbidden = RuleMask((1, 0, 1, 1))
    assert combine_masks([walls, forbidden]).valid == (0, 0, 1, 1)
    assert combine_masks([walls]) == walls
    assert combine_masks([RuleMask(preferred=U), RuleMask((0, 1, 1, 1))]).preferred is None
    assert combine_masks([RuleMask(preferred=U), RuleMask(preferred=D)]).preferred == U


masks = st.tuples(*[st.integers(0, 1)] * 4).map(RuleMask)


@given(masks, masks, masks)
def test_combine_associative_commutative(a, b, c):
    assert combine_masks([a, b]).valid == combine_masks([b, a]).valid
    left = combine_masks([combine_masks([a, b]), c]).valid
    right = combine_masks([a, combine_masks([b, c])]).valid
    assert left == right == combine_masks([a, b, c]).valid


def test_apply_mask_examples():
    np.testing.assert_array_equal(
        apply_mask([0.25] * 4, RuleMask((1, 1, 0, 0))), [0.5, 0.5, 0.0, 0.0]
    )
    probs = np.array([0.1, 0.2, 0.3, 0.4])
    np.testing.assert_array_equal(apply_mask(probs, RuleMask()), probs)
    out = apply_mask([0.7, 0.1, 0.1, 0.1], RuleMask((0, 1, 1, 1)))
    np.testing.assert_allclose(out, [0.0, 1 / 3, 1 / 3, 1 / 3], rtol=0, atol=1e-15)
    np.testing.assert_array_equal(apply_mask(probs, RuleMask((0, 0, 0, 0))), probs)


@given(
    st.lists(st.floats(0.01, 1.0), min_size=4, max_size=4),
    st.tuples(*[st.integers(0, 1)] * 4).filter(any),
)
def test_apply_mask_properties(raw, valid):
    probs = np.array(raw) / sum(raw)
    out = apply_mask(probs, RuleMask(valid))
    assert abs(out.sum() - 1.0) < 1e-9
    for i, v in enumerate(valid):
        if not v:
            assert out[i] == 0.0
        else:
            assert out[i] > 0.0


def test_overwrite_forbidden():
    cfg = HeuristicConfig(rules={Rule.FORBIDDEN: Mode.AD_HOC_OVERWRITE})
    board = one_snake((5, 5), U, body=[(5, 5), (5, 6), (5, 7)])
    assert overwrite_action(D, board, 1, cfg) != D


def test_overwrite_disabled_is_identity():
    board = one_snake((0, 0), U, body=[(0, 0), (0, 1), (0, 2)])
    for a in ACTIONS:
        assert overwrite_action(a, board, 1, HeuristicConfig()) == a


def test_overwrite_prefers_food():
    cfg = HeuristicConfig(rules={Rule.FOOD: Mode.AD_HOC_OVERWRITE})
    board = one_snake((5, 5), U, health=5, body=[(5, 5), (5, 6), (5, 7)], food=[(4, 5)])
    blocked = {(c.x, c.y) for c in board.snake(1).body}
    assert bfs_first_step(11, 11, (5, 5), {(4, 5)}, blocked) == L
    assert overwrite_action(U, board, 1, cfg) == L


def test_overwrite_uses_policy_probabilities():
    cfg = HeuristicConfig(
        rules={Rule.WALLS: Mode.AD_HOC_OVERWRITE, Rule.FORBIDDEN: Mode.AD_HOC_OVERWRITE}
    )
    board = one_snake((0, 5), U, body=[(0, 5), (0, 6), (0, 7)])
    # left is a wall, down is forbidden
    assert overwrite_action(L, board, 1, cfg, [0.1, 0.2, 0.3, 0.4]) == R
    assert overwrite_action(L, board, 1, cfg, [0.5, 0.2, 0.2, 0.1]) == U


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 30), st.integers(0, 3))
def test_overwrite_never_returns_prevented_action(seed, turns, action):
    cfg = HeuristicConfig(
        rules={r: Mode.AD_HOC_OVERWRITE for r in Rule}, health_threshold=100
    )
    board = random_board(seed, turns)
    for s in board.living:
        out = overwrite_action(action, board, s.id, cfg)
        prevent = combine_masks([mask_walls(board, s.id), mask_forbidden(board, s.id)])
        assert prevent.valid[out] == 1


def test_schedule_weight_zero_equals_disabled():
    board = one_snake((0, 0), R, health=5, body=[(0, 0), (1, 0), (2, 0)], food=[(0, 3)])
    enabled = {r: Mode.AD_HOC_OVERWRITE for r in Rule}
    off = HeuristicConfig(rules=enabled, schedule={0: {r: 0.0 for r in Rule}})
    none = HeuristicConfig()
    for a in ACTIONS:
        assert overwrite_action(a, board, 1, off) == overwrite_action(a, board, 1, none)
    masked = HeuristicConfig(
        rules={Rule.WALLS: Mode.IN_TRAINING_MASK, Rule.FORBIDDEN: Mode.IN_TRAINING_MASK},
        schedule={100: {Rule.WALLS: 0.0, Rule.FORBIDDEN: 0.0}},
    )
    assert training_mask(board, 1, masked, 0).valid == (0, 1, 0, 1)
    assert training_mask(board, 1, masked, 100) == training_mask(board, 1, HeuristicConfig(), 100)
    assert repr(training_mask(board, 1, masked, 500)) == repr(training_mask(board, 1, none))
    shaped = HeuristicConfig(rules={Rule.WALLS: Mode.REWARD_SHAPING}, schedule={0: {Rule.WALLS: 0.0}})
    assert shaped.shaping_terms(10) == {}


def test_schedule_threshold():
    board = one_snake((0, 0), None)
    cfg = HeuristicConfig(rules={Rule.WALLS: Mode.IN_TRAINING_MASK},
                          schedule={0: {Rule.WALLS: 0.75}, 10: {Rule.WALLS: 0.25}})
    assert mask_for(board, 1, cfg, [Rule.WALLS], 5).valid == (0, 1, 0, 1)
    assert mask_for(board, 1, cfg, [Rule.WALLS], 10).valid == (1, 1, 1, 1)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        HeuristicConfig(health_threshold=0)
    with pytest.raises(ConfigurationError):
        HeuristicConfig(rules={"rule3_food": "in_training_mask"})
    with pytest.raises(ConfigurationError):
        HeuristicConfig(rules={"rule9": "ad_hoc_overwrite"})


def test_reward_shaping_terms():
    cfg = HeuristicConfig(rules={Rule.WALLS: Mode.REWARD_SHAPING, Rule.FOOD: Mode.REWARD_SHAPING})
    terms = cfg.shaping_terms()
    assert terms["hit_wall"] == -0.4
    assert terms["ate_food"] == 0.4
