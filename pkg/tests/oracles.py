"""Independent reference implementations used only by the tests.

They are deliberately naive: plain dicts and tuples, no shared helpers with
the package, straight-line arithmetic.
"""

from __future__ import annotations

import itertools
from collections import deque

import numpy as np

MOVES = {0: (0, -1), 1: (0, 1), 2: (-1, 0), 3: (1, 0)}
OPPOSITE = {0: 1, 1: 0, 2: 3, 3: 2}


# --------------------------------------------------------------------------
# rules engine


def naive_state(board) -> dict:
    return {
        "w": board.width,
        "h": board.height,
        "p": board.food_spawn_probability,
        "turn": board.turn,
        "food": {(c.x, c.y) for c in board.food},
        "snakes": {
            s.id: {
                "body": [(c.x, c.y) for c in s.body],
                "health": s.health,
                "alive": s.alive,
                "facing": None if s.facing is None else int(s.facing),
            }
            for s in board.snakes
        },
    }


def naive_step(state: dict, actions: dict, rng) -> tuple[dict, list]:
    st = {
        "w": state["w"], "h": state["h"], "p": state["p"], "turn": state["turn"],
        "food": set(state["food"]),
        "snakes": {k: dict(v, body=list(v["body"])) for k, v in state["snakes"].items()},
    }
    ev = []
    alive = [k for k, v in st["snakes"].items() if v["alive"]]
    for k in alive:
        st["snakes"][k]["health"] = st["snakes"][k]["health"] - 1
    movers = []
    for k in alive:
        sn = st["snakes"][k]
        if sn["facing"] is not None and OPPOSITE[sn["facing"]] == actions[k]:
            sn["alive"] = False
            ev.append((k, "forbidden_move"))
        else:
            movers.append(k)
    for k in movers:
        sn = st["snakes"][k]
        hx, hy = sn["body"][0]
        dx, dy = MOVES[actions[k]]
        sn["body"] = [(hx + dx, hy + dy)] + sn["body"][:-1]
    for k in movers:
        sn = st["snakes"][k]
        if sn["body"][0] in st["food"]:
            st["food"].remove(sn["body"][0])
            sn["health"] = 100
            sn["body"] = sn["body"] + [sn["body"][-1]]
            ev.append((k, "ate_food"))
    dead = {}
    killers = []
    for k in movers:
        sn = st["snakes"][k]
        x, y = sn["body"][0]
        if x < 0 or y < 0 or x >= st["w"] or y >= st["h"]:
            dead[k] = "hit_wall"
            continue
        if (x, y) in sn["body"][1:]:
            dead[k] = "hit_self"
            continue
        if any((x, y) in st["snakes"][j]["body"][1:] for j in movers if j != k):
            dead[k] = "hit_other_body"
            continue
        same = [j for j in movers if j != k and st["snakes"][j]["body"][0] == (x, y)]
        mine = len(sn["body"])
        if any(len(st["snakes"][j]["body"]) > mine for j in same):
            dead[k] = "head_to_head_loss"
            continue
        if any(len(st["snakes"][j]["body"]) == mine for j in same):
            dead[k] = "head_to_head_mutual"
            continue
        for j in same:
            killers.append(k)
        if sn["health"] == 0:
            dead[k] = "starved"
    for k in movers:
        if k in dead:
            st["snakes"][k]["alive"] = False
            ev.append((k, dead[k]))
    for k in killers:
        ev.append((k, "killed_other"))
    r = rng.random()
    if len(st["food"]) == 0 or r < st["p"]:
        taken = set(st["food"])
        for v in st["snakes"].values():
            if v["alive"]:
                taken.update(v["body"])
        free = [(x, y) for y in range(st["h"]) for x in range(st["w"]) if (x, y) not in taken]
        if free:
            st["food"].add(rng.choice(free))
    st["turn"] += 1
    survivors = [k for k in movers if k not in dead]
    for k in survivors:
        st["snakes"][k]["facing"] = actions[k]
        ev.append((k, "survived_turn"))
    if len(survivors) == 1:
        ev.append((survivors[0], "won"))
    return st, ev


def naive_terminal(state: dict) -> bool:
    return sum(v["alive"] for v in state["snakes"].values()) < 2


# --------------------------------------------------------------------------
# shortest path to food


def bfs_first_step(width, height, head, food, blocked):
    """Try every first move separately and BFS from the resulting cell."""
    best = None
    for a in range(4):
        dx, dy = MOVES[a]
        start = (head[0] + dx, head[1] + dy)
        if not (0 <= start[0] < width and 0 <= start[1] < height) or start in blocked:
            continue
        seen = {start}
        frontier = deque([(start, 0)])
        found = None
        while frontier:
            cell, d = frontier.popleft()
            if cell in food:
                found = d
                break
            for ddx, ddy in MOVES.values():
                nxt = (cell[0] + ddx, cell[1] + ddy)
                if (0 <= nxt[0] < width and 0 <= nxt[1] < height
                        and nxt not in blocked and nxt not in seen):
                    seen.add(nxt)
                    frontier.append((nxt, d + 1))
        if found is not None and (best is None or found < best[1]):
            best = (a, found)
    return None if best is None else best[0]


# --------------------------------------------------------------------------
# advantage estimation


def gae_double_sum(rewards, values, dones, gamma, lam):
    """A_t = sum_l (gamma*lam)^l delta_{t+l}, truncated at the first done."""
    n = len(rewards)
    deltas = []
    for t in range(n):
        nxt = 0.0 if dones[t] else values[t + 1]
        deltas.append(rewards[t] + gamma * nxt - values[t])
    adv = []
    for t in range(n):
        total = 0.0
        for l in range(n - t):
            total += (gamma * lam) ** l * deltas[t + l]
            if dones[t + l]:
                break
        adv.append(total)
    return adv


# --------------------------------------------------------------------------
# network forward pass


def mlp_forward_loops(arrays: dict, x: list) -> tuple[list, float]:
    """Scalar-loop forward pass of both trunks for one flattened observation."""

    def layer(inp, w, b, act):
        out = []
        for j in range(w.shape[1]):
            s = float(b[j])
            for i in range(w.shape[0]):
                s += inp[i] * float(w[i, j])
            out.append(np.tanh(s) if act else s)
        return out

    h = layer(x, arrays["pi_w1"], arrays["pi_b1"], True)
    h = layer(h, arrays["pi_w2"], arrays["pi_b2"], True)
    logits = layer(h, arrays["pi_w3"], arrays["pi_b3"], False)
    m = max(logits)
    exps = [np.exp(z - m) for z in logits]
    probs = [e / sum(exps) for e in exps]
    v = layer(x, arrays["v_w1"], arrays["v_b1"], True)
    v = layer(v, arrays["v_w2"], arrays["v_b2"], True)
    value = layer(v, arrays["v_w3"], arrays["v_b3"], False)[0]
    return probs, value


def all_joint_sequences(n_agents: int, n_turns: int):
    return itertools.product(range(4), repeat=n_agents * n_turns)
